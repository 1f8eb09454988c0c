//! Nearest neighbours by deep vector and by colour layout, and a search
//! from a hand-painted 4x4 sketch.

use std::error::Error;

use lifegrid::descriptor::{sketch_to_histmap, CELLS, PALETTE_NAMES};
use lifegrid::engine::{Engine, EngineConfig};
use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::segment::SegmentMethod;
use lifegrid::simsearch::Metric;

fn main() -> Result<(), Box<dyn Error>> {
    let store = synthesize(&SyntheticSpec::new(5, 3, 200)).to_store()?;
    let engine = Engine::build(store, EngineConfig::default())?;

    let query = engine.table(SegmentMethod::Shot).segments()[3].clone();
    println!("query: shot #{} ({} frames {}..={})", query.segment_id, query.day_id, query.start, query.end);
    for metric in [Metric::CosineDeep, Metric::HistMapL1] {
        println!("{metric}:");
        for n in engine.similar(query.segment_id, 5, metric)? {
            let s = engine.segmentation().get(n.segment_id).unwrap();
            println!("  {}. #{} {} {}..={} score {:.4}", n.rank, n.segment_id, s.day_id, s.start, s.end, n.score);
        }
    }

    // paint the top half blue and leave the rest blank
    let blue = PALETTE_NAMES.iter().position(|n| *n == "blue").unwrap();
    let mut canvas = [None; CELLS];
    canvas[..CELLS / 2].fill(Some(blue));
    let sketch = sketch_to_histmap(&canvas)?;
    println!("sketch (top half blue):");
    for n in engine.sketch(&sketch, 5, SegmentMethod::Uniform)? {
        println!("  {}. #{} distance {:.4}", n.rank, n.segment_id, n.score);
    }
    Ok(())
}
