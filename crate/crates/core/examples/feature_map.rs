//! Builds colour, edge and motion maps and prints each pyramid level as a
//! grid of score deciles.

use std::error::Error;

use lifegrid::descriptor::Criterion;
use lifegrid::engine::{Engine, EngineConfig, DEFAULT_CRITERIA};
use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::segment::SegmentMethod;

fn main() -> Result<(), Box<dyn Error>> {
    let store = synthesize(&SyntheticSpec::new(3, 4, 300)).to_store()?;
    let engine = Engine::build(store, EngineConfig::default())?;

    let mut criteria = DEFAULT_CRITERIA.to_vec();
    criteria.push(Criterion::Concept("drink".into()));
    for c in criteria {
        let p = engine.pyramid(&c, SegmentMethod::Uniform)?;
        println!("{c}: {} levels", p.depth());
        for (i, level) in p.levels.iter().enumerate() {
            println!("  level {i}: {}x{}", level.rows, level.cols);
            if level.rows > 8 {
                continue;
            }
            let max = level.cells.iter().flatten().map(|m| m.score).fold(f64::MIN_POSITIVE, f64::max);
            for r in 0..level.rows {
                let row: String = (0..level.cols)
                    .map(|col| match level.get(r, col) {
                        Some(m) => char::from_digit(((m.score / max) * 9.0).round() as u32, 10).unwrap_or('?'),
                        None => '.',
                    })
                    .collect();
                println!("    {row}");
            }
        }
    }
    Ok(())
}
