mod common;

use common::{segmentation_trial, store, tiles};
use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec, FRAME_INTERVAL_S};
use lifegrid::segment::{shot_spans, uniform_spans, SegmentMethod, Segmentation, SegmentationConfig};
use proptest::prelude::*;

#[test]
fn noise_free_days_are_recovered_exactly() {
    let t = segmentation_trial(1, 150, 0);
    assert_eq!(t.bad_partitions, 0);
    assert!(t.planted > 500, "{t:?}");
    assert!(t.recall() >= 0.95, "{t:?}");
    assert_eq!(t.spurious, 0, "{t:?}");
}

#[test]
fn noisy_days_still_partition() {
    let t = segmentation_trial(2, 100, 6);
    assert_eq!(t.bad_partitions, 0);
    assert!(t.recall() >= 0.95, "{t:?}");
}

#[test]
fn uniform_example_day() {
    let data = synthesize(&SyntheticSpec::new(4, 1, 23));
    let store = data.to_store().unwrap();
    let seg = Segmentation::build(&store, &SegmentationConfig::default()).unwrap();
    let spans: Vec<(u32, u32)> = seg.uniform.segments().iter().map(|s| (s.start, s.end)).collect();
    assert_eq!(spans, vec![(0, 9), (10, 19), (20, 22)]);
    let frames = &store.days()[0].frames;
    assert_eq!(FRAME_INTERVAL_S, 40);
    assert_eq!(frames[9].timestamp_utc - frames[0].timestamp_utc, 360);
    assert_eq!(frames[19].timestamp_utc - frames[10].timestamp_utc, 360);
}

#[test]
fn ids_are_unique_and_ordered_across_methods() {
    let store = store(8, 4, 150);
    let seg = Segmentation::build(&store, &SegmentationConfig::default()).unwrap();
    let mut ids = Vec::new();
    for m in SegmentMethod::ALL {
        let table = seg.table(m);
        assert!(table.segments().iter().all(|s| s.method == m));
        for w in table.segments().windows(2) {
            assert!((w[0].day, w[0].start) < (w[1].day, w[1].start));
        }
        for (d, day) in store.days().iter().enumerate() {
            let spans: Vec<_> = table.day_segments(d as u32).iter().map(|s| (s.start, s.end)).collect();
            assert!(tiles(&spans, day.frames.len()));
            for i in 0..day.frames.len() as u32 {
                let pos = table.position_of_frame(d as u32, i).unwrap();
                assert!(table.segments()[pos].contains(i));
            }
        }
        ids.extend(table.segments().iter().map(|s| s.segment_id));
    }
    let n = ids.len();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), n);
    for m in SegmentMethod::ALL {
        for s in seg.table(m).segments() {
            assert_eq!(seg.get(s.segment_id), Some(s));
            assert!(s.start <= s.keyframe && s.keyframe <= s.end);
        }
    }
}

#[test]
fn csv_round_trip() {
    let store = store(9, 2, 80);
    let seg = Segmentation::build(&store, &SegmentationConfig::default()).unwrap();
    for m in SegmentMethod::ALL {
        let mut buf = Vec::new();
        seg.table(m).write_csv(&mut buf).unwrap();
        let back = lifegrid::segment::SegmentTable::read_csv(buf.as_slice(), m, &store).unwrap();
        assert_eq!(back.segments(), seg.table(m).segments());
    }
}

proptest! {
    #[test]
    fn shot_spans_tile_and_respect_min_len(
        scores in prop::collection::vec(0.0..1.0f64, 0..200),
        theta in 0.0..1.0f64,
        min_len in 1usize..8,
    ) {
        let spans = shot_spans(&scores, theta, min_len);
        prop_assert!(tiles(&spans, scores.len() + 1));
        for &(s, e) in &spans[..spans.len() - 1] {
            prop_assert!((e - s + 1) as usize >= min_len);
            prop_assert!(scores[e as usize] > theta);
        }
    }

    #[test]
    fn uniform_spans_tile(n in 1usize..500, rate in 1usize..50) {
        let spans = uniform_spans(n, rate);
        prop_assert!(tiles(&spans, n));
        prop_assert_eq!(spans.len(), n.div_ceil(rate));
        for &(s, e) in &spans[..spans.len() - 1] {
            prop_assert_eq!((e - s + 1) as usize, rate);
        }
    }
}
