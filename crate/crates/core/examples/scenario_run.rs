//! One scenario, one method, one seed, with per-round class accuracies.
//!
//! cargo run --release --example scenario_run -- [data_dir] [method] [scenario] [case]
//!
//! Without a data directory a small synthetic dataset is generated in memory.

use std::time::Instant;

use cl_har::data::synth::{generate, SynthSpec};
use cl_har::data::{build_scenario, ChannelMode, HarData, ACTIVITIES};
use cl_har::engine::{run_scenario, ProtocolConfig};
use cl_har::regularizers::Method;

fn main() -> cl_har::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = match args.first().map(String::as_str) {
        Some(dir) if dir != "-" => HarData::load(dir, ChannelMode::Nine)?,
        _ => {
            let (train, test) = generate(&SynthSpec::default());
            HarData::from_raw(train, test)?
        }
    };
    let method: Method = args.get(1).map_or(Ok(Method::EwcLwf), |m| m.parse())?;
    let scenario: u8 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let case: Option<u8> = args.get(3).and_then(|s| s.parse().ok()).or(Some(1));
    let spec = build_scenario(scenario, case)?;

    let mut config = ProtocolConfig::new(method);
    config.hyper.seed = 1;

    let start = Instant::now();
    let run = run_scenario::<f64>(&spec, &config, &data)?;
    for log in &run.logs {
        let classes: Vec<String> = log
            .per_class
            .iter()
            .map(|c| format!("{}={:.3}", ACTIVITIES[c.class], c.accuracy))
            .collect();
        println!(
            "round {} (task {}, {}): a_r={:.3} loss={:.4} | {}",
            log.round,
            log.task,
            log.objective,
            log.round_accuracy,
            log.train_loss,
            classes.join(", ")
        );
    }
    for (name, v) in run.metrics.named_values() {
        println!("{name} = {v:.4}");
    }
    println!(
        "consolidated after rounds {:?}; {:.1?} elapsed",
        run.consolidated_after,
        start.elapsed()
    );
    Ok(())
}
