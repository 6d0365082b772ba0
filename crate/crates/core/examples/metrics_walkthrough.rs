//! Average accuracy, accuracy by task, and forgetting from hand-entered
//! per-round accuracies of a three-task schedule.

use cl_har::metrics::{MetricsTracker, TaskAccuracyMode};

fn main() -> cl_har::Result<()> {
    let round_to_task = vec![1, 1, 2, 2, 3, 3];
    // (round, a_r, [(task, accuracy on that task's classes)])
    let rounds: [(usize, f64, &[(usize, f64)]); 6] = [
        (1, 0.90, &[(1, 0.90)]),
        (2, 0.94, &[(1, 0.94)]),
        (3, 0.70, &[(1, 0.60), (2, 0.95)]),
        (4, 0.72, &[(1, 0.62), (2, 0.96)]),
        (5, 0.60, &[(1, 0.50), (2, 0.55), (3, 0.99)]),
        (6, 0.62, &[(1, 0.52), (2, 0.57), (3, 0.99)]),
    ];
    for mode in [TaskAccuracyMode::RoundMean, TaskAccuracyMode::FinalRound] {
        let mut tracker = MetricsTracker::new(round_to_task.clone(), mode)?;
        for (r, a, per_task) in rounds {
            tracker.push_round(r, a, per_task)?;
        }
        let report = tracker.finish()?;
        println!("{mode}:");
        for (name, v) in report.named_values() {
            println!("  {name} = {v:.4}");
        }
    }
    Ok(())
}
