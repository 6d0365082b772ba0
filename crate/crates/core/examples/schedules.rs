//! Print the five class-incremental schedules and their consolidation points.

use cl_har::data::{build_scenario, ACTIVITIES, VALID_SCENARIOS};

fn main() -> cl_har::Result<()> {
    for (s, c) in VALID_SCENARIOS {
        let spec = build_scenario(s, c)?;
        println!(
            "{} ({} tasks, consolidate after rounds {:?})",
            spec.label(),
            spec.num_tasks(),
            spec.task_boundaries()
        );
        for r in &spec.rounds {
            let names: Vec<&str> = r.classes.iter().map(|&c| ACTIVITIES[c]).collect();
            println!("  round {} task {}: {}", r.round, r.task, names.join(", "));
        }
    }
    Ok(())
}
