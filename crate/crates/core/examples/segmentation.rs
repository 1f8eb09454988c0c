//! Shot detection and uniform sampling on one synthetic day.

use std::error::Error;

use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::segment::{Segmentation, SegmentationConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let data = synthesize(&SyntheticSpec::new(7, 1, 120).with_scene_changes(5));
    let store = data.to_store()?;
    let seg = Segmentation::build(&store, &SegmentationConfig::default())?;

    let planted: Vec<u32> = data.boundaries.iter().map(|b| b.1).collect();
    println!("planted scene starts: {planted:?}");
    println!("shots:");
    for s in seg.shot.segments() {
        println!("  #{:<3} frames {:>3}..={:<3} keyframe {}", s.segment_id, s.start, s.end, s.keyframe);
    }
    println!("uniform (every {} frames):", SegmentationConfig::default().uniform_rate);
    for s in seg.uniform.segments() {
        println!("  #{:<3} frames {:>3}..={:<3} keyframe {}", s.segment_id, s.start, s.end, s.keyframe);
    }
    let peak = seg.motion[0].iter().cloned().fold(0.0, f64::max);
    println!("largest frame-to-frame motion score: {peak:.3}");
    Ok(())
}
