//! Writes a synthetic lifelog to disk and loads it back.
//!
//! cargo run --example synthetic_dataset -- [OUT_DIR] [DAYS] [FRAMES_PER_DAY]

use std::error::Error;
use std::path::PathBuf;

use lifegrid::ingest::load_dataset;
use lifegrid::ingest::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lifegrid-demo"));
    let days = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let frames = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);

    let data = generate_synthetic(&SyntheticSpec::new(42, days, frames), &out)?;
    println!("wrote {} frames, {} images, {} tasks to {}", data.frames.len(), data.images.len(), data.tasks.len(), out.display());

    let store = load_dataset(&out)?;
    println!("loaded {} days, {} frames, {} concepts", store.days().len(), store.frame_count(), store.taxonomy().len());
    for day in store.days() {
        let first = &day.frames[0];
        let sensor = store.sensor_of(first);
        println!(
            "  {}: {} frames, first at {} ({:?}, {:?})",
            day.day_id,
            day.frames.len(),
            first.timestamp_utc,
            sensor.and_then(|s| s.location_name.as_deref()),
            sensor.and_then(|s| s.activity.as_deref()),
        );
    }
    Ok(())
}
