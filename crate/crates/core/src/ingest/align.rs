//! Nearest-in-time attachment of sensor samples to frames.

/// Default maximum |Δt| between a frame and the sample attached to it.
pub const DEFAULT_TOLERANCE_S: i64 = 60;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sensor samples are not sorted by timestamp (first violation at position {position})")]
pub struct UnsortedSamples {
    pub position: usize,
}

/// For each frame timestamp, the index of the sample closest in time, if it
/// lies within `tolerance_s`. Equal distances resolve to the earlier sample;
/// among samples sharing a timestamp the first listed wins.
pub fn align_sensors(
    frame_times: &[i64],
    sample_times: &[i64],
    tolerance_s: i64,
) -> Result<Vec<Option<usize>>, UnsortedSamples> {
    if let Some(w) = sample_times.windows(2).position(|w| w[1] < w[0]) {
        return Err(UnsortedSamples { position: w + 1 });
    }
    Ok(frame_times
        .iter()
        .map(|&t| nearest(sample_times, t, tolerance_s))
        .collect())
}

fn nearest(samples: &[i64], t: i64, tolerance_s: i64) -> Option<usize> {
    let after = samples.partition_point(|&s| s < t);
    // first sample of the run sharing the timestamp just before `t`
    let before = after.checked_sub(1).map(|i| {
        let ts = samples[i];
        samples[..i].iter().rposition(|&s| s != ts).map_or(0, |j| j + 1)
    });
    let later = (after < samples.len()).then_some(after);
    let pick = match (before, later) {
        (Some(b), Some(a)) => {
            if t - samples[b] <= samples[a] - t {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => return None,
    };
    ((samples[pick] - t).abs() <= tolerance_s).then_some(pick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Exhaustive statement of the attachment rule.
    fn brute(frames: &[i64], samples: &[i64], tol: i64) -> Vec<Option<usize>> {
        frames
            .iter()
            .map(|&t| {
                let mut best: Option<usize> = None;
                for (i, &s) in samples.iter().enumerate() {
                    if (s - t).abs() > tol {
                        continue;
                    }
                    best = match best {
                        None => Some(i),
                        Some(b) => {
                            let (db, di) = ((samples[b] - t).abs(), (s - t).abs());
                            if di < db || (di == db && s < samples[b]) {
                                Some(i)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
                best
            })
            .collect()
    }

    #[test]
    fn worked_cases() {
        assert_eq!(align_sensors(&[100], &[80, 130], 60).unwrap(), [Some(0)]);
        assert_eq!(align_sensors(&[100], &[200], 60).unwrap(), [None]);
        assert_eq!(align_sensors(&[100], &[90, 110], 60).unwrap(), [Some(0)]);
        assert_eq!(align_sensors(&[100], &[], 60).unwrap(), [None]);
        assert_eq!(align_sensors(&[100], &[160], 60).unwrap(), [Some(0)]);
        assert_eq!(align_sensors(&[100], &[161], 60).unwrap(), [None]);
    }

    #[test]
    fn unsorted_is_rejected() {
        assert_eq!(align_sensors(&[1], &[5, 3], 60), Err(UnsortedSamples { position: 1 }));
    }

    #[test]
    fn duplicate_timestamps_pick_first() {
        assert_eq!(align_sensors(&[100], &[90, 90, 90, 110], 60).unwrap(), [Some(0)]);
        assert_eq!(align_sensors(&[100], &[50, 105, 105], 60).unwrap(), [Some(1)]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_rule(
            frames in proptest::collection::vec(-500i64..500, 0..20),
            mut samples in proptest::collection::vec(-500i64..500, 0..30),
            tol in 0i64..120,
        ) {
            samples.sort();
            let got = align_sensors(&frames, &samples, tol).unwrap();
            prop_assert_eq!(&got, &brute(&frames, &samples, tol));
            // idempotent
            prop_assert_eq!(got, align_sensors(&frames, &samples, tol).unwrap());
        }

        #[test]
        fn duplicating_samples_keeps_attached_timestamps(
            frames in proptest::collection::vec(-200i64..200, 1..10),
            mut samples in proptest::collection::vec(-200i64..200, 1..15),
        ) {
            samples.sort();
            let mut doubled: Vec<i64> = samples.iter().flat_map(|&s| [s, s]).collect();
            doubled.sort();
            let a = align_sensors(&frames, &samples, 60).unwrap();
            let b = align_sensors(&frames, &doubled, 60).unwrap();
            let ta: Vec<_> = a.iter().map(|o| o.map(|i| samples[i])).collect();
            let tb: Vec<_> = b.iter().map(|o| o.map(|i| doubled[i])).collect();
            prop_assert_eq!(ta, tb);
        }
    }
}
