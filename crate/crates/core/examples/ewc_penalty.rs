//! Diagonal Fisher of a small CNN and the EWC penalty as parameters drift.

use cl_har::data::synth::{generate, SynthSpec};
use cl_har::data::HarData;
use cl_har::nn::{Architecture, CnnParams};
use cl_har::regularizers::{estimate_diag_fisher, ewc_penalty, FisherAnchor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cl_har::Result<()> {
    let (train, test) = generate(&SynthSpec {
        train_per_class: [20; 6],
        test_per_class: [1; 6],
        ..SynthSpec::default()
    });
    let data = HarData::from_raw(train, test)?;
    let arch = Architecture {
        filters: 8,
        hidden: 32,
        ..Architecture::har()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = CnnParams::<f64>::init(arch, &mut rng)?;
    let fisher = estimate_diag_fisher(&params, data.train.examples(), Some(64))?;
    let f: Vec<f64> = fisher.to_flat();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let max = f.iter().copied().fold(0.0, f64::max);
    println!(
        "{} parameters, Fisher mean {mean:.3e}, max {max:.3e}",
        f.len()
    );

    let anchor = FisherAnchor::new(1, params.clone(), fisher, 5.0)?;
    for step in [0.0, 0.01, 0.05, 0.1] {
        let moved = params.map(|w| w + step);
        println!(
            "uniform shift {step:>5}: penalty {:.6e}",
            ewc_penalty(&moved, std::slice::from_ref(&anchor))?
        );
    }
    Ok(())
}
