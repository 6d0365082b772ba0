//! Shapes and parameter count of the HAR network, and one forward pass.

use cl_har::nn::{argmax, forward, penultimate, Architecture, CnnParams, Mode};
use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cl_har::Result<()> {
    let arch = Architecture::har();
    println!(
        "input {}x{}, conv {} x {} -> {} steps, pooled {}, flat {}, hidden {}, classes {}",
        arch.in_channels,
        arch.length,
        arch.filters,
        arch.kernel,
        arch.conv_len(),
        arch.pooled_len(),
        arch.flat_len(),
        arch.hidden,
        arch.classes
    );
    println!("{} trainable parameters", arch.num_params());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = CnnParams::<f64>::init(arch, &mut rng)?;
    let x = Array3::from_shape_fn((4, 9, 128), |(b, c, t)| {
        ((b + c) as f64 * 0.3 + t as f64 * 0.05).sin()
    });
    let logits = forward(&params, x.view(), Mode::Eval)?;
    let emb = penultimate(&params, x.view())?;
    println!("logits {:?}, embeddings {:?}", logits.dim(), emb.dim());
    for row in logits.outer_iter() {
        println!("  predicted class {}", argmax(row));
    }
    Ok(())
}
