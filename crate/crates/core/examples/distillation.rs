//! Temperature scaling and the distillation loss on small distributions.

use cl_har::regularizers::{kd_loss, lwf_total_loss, temperature_scale, Distribution};

fn main() -> cl_har::Result<()> {
    let teacher = Distribution::new(vec![0, 1], vec![0.8, 0.2])?;
    for t in [0.5, 1.0, 3.0, 10.0] {
        let soft = temperature_scale(&teacher, t)?;
        println!("T = {t:>4}: {:?}", soft.probs());
    }
    let y = temperature_scale(&teacher, 3.0)?;
    let student = Distribution::from_logits(&[0.3, 0.9], &[0, 1])?;
    let s = temperature_scale(&student, 3.0)?;
    let kd = kd_loss(&y, &s)?;
    println!(
        "kd(teacher, student) = {kd:.4}, kd(teacher, teacher) = {:.4}",
        kd_loss(&y, &y)?
    );
    println!(
        "alpha = 0.1, ce = 0.7: total = {:.4}",
        lwf_total_loss(0.7, kd, 0.1)?
    );
    Ok(())
}
