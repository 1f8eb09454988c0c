//! A timed known-item search task driven by a manual clock.

use std::error::Error;
use std::sync::Arc;
use std::time::Duration;

use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::task::{tasks_from_rows, ManualClock, TaskHarness};

fn main() -> Result<(), Box<dyn Error>> {
    let data = synthesize(&SyntheticSpec::new(9, 2, 150));
    let tasks = tasks_from_rows(&data.tasks)?;
    let task = tasks.first().ok_or("generator produced no task")?.clone();
    let clock = Arc::new(ManualClock::default());
    let harness = TaskHarness::new(tasks, clock.clone());

    harness.start(&task.task_id)?;
    for step in 0..3 {
        let status = harness.hints(&task.task_id)?;
        println!("t={:>3}s hints:", status.elapsed_s);
        for h in &status.hints {
            println!("  - {h}");
        }
        if step < 2 {
            let wrong = harness.submit(&task.task_id, &task.truth.day_id, task.truth.end + 1)?;
            println!("  guessed a wrong frame (misses so far: {})", wrong.wrong_count);
            clock.advance(Duration::from_secs(30));
        }
    }
    let r = harness.submit(&task.task_id, &task.truth.day_id, task.truth.start)?;
    println!("solved={} after {:.0}s with {} misses, score {:?}", r.correct, r.elapsed_s, r.wrong_count, r.score);
    Ok(())
}
