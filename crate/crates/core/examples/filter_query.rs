//! Structured filter queries: predicates in a container must hold on the
//! same frame, containers are alternatives.

use std::error::Error;

use lifegrid::engine::{Engine, EngineConfig};
use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::query::{Comparison, FilterContainer, HourMinute, Predicate, Query, RangeBound, SensorField, Weekday};
use lifegrid::segment::SegmentMethod;

fn main() -> Result<(), Box<dyn Error>> {
    let store = synthesize(&SyntheticSpec::new(11, 7, 200)).to_store()?;
    let engine = Engine::build(store, EngineConfig::default())?;

    let morning_walk = FilterContainer::new(vec![
        Predicate::TimeRange { start: HourMinute::new(6, 0).unwrap(), end: HourMinute::new(11, 0).unwrap() },
        Predicate::Activity { name: "walking".into() },
    ]);
    let busy_heart = FilterContainer::new(vec![
        Predicate::Weekday { days: [Weekday::from_index(5), Weekday::from_index(6)].into() },
        Predicate::Range { field: SensorField::HeartRate, bound: RangeBound::Compare { op: Comparison::Gt, value: 110.0 } },
    ]);
    let q = Query::new(vec![morning_walk, busy_heart]).with_method(SegmentMethod::Shot);

    let results = engine.query(&q)?;
    println!("{} segments, {} frames matched", results.len(), results.matched_frames());
    for e in results.entries.iter().take(10) {
        println!("  {} #{} frames {}..={} hits {:?}", e.day_id, e.segment_id, e.start, e.end, e.frames);
    }

    let coffee = Query::new(vec![FilterContainer::new(vec![Predicate::Concept { id: "drink".into(), min_conf: 0.6 }])]);
    println!("segments showing a drink at confidence 0.6: {}", engine.query(&coffee)?.len());
    Ok(())
}
