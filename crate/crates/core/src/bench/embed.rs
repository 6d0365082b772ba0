use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{csv_text, fmt_num, write_atomic, RunConfig};
use crate::data::{HarData, SamplePool, NUM_CLASSES};
use crate::engine::pretrained_model;
use crate::error::Result;
use crate::nn::{penultimate, Precision, Scalar};

pub const DEFAULT_EMBED_PER_CLASS: usize = 160;

const STREAM_EMBED: u64 = 3;

fn embed<F: Scalar>(
    config: &RunConfig,
    data: &HarData,
    n_per_class: usize,
) -> Result<(Vec<Vec<f64>>, Vec<(usize, usize)>)> {
    let seed = config.seeds[0];
    let params = pretrained_model::<F>(&config.protocol(config.methods[0], seed), data)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_EMBED);
    let mut pool = SamplePool::new(&data.test.labels, rng)?;
    let all: Vec<usize> = (0..NUM_CLASSES).collect();
    let mut idx = pool.sample_round(&all, n_per_class, None)?;
    idx.sort_unstable_by_key(|&i| (data.test.labels[i], i));

    let mut rows = Vec::with_capacity(idx.len());
    for chunk in idx.chunks(256) {
        let x = data.test.examples().gather::<F>(chunk);
        let h = penultimate(&params, x.view())?;
        rows.extend(
            h.outer_iter()
                .map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()),
        );
    }
    let ids = idx.iter().map(|&i| (data.test.labels[i], i)).collect();
    Ok((rows, ids))
}

/// Penultimate-layer activations of the pretrained model (first seed) for
/// `n_per_class` test windows of every class, as CSV: `e0..e{H-1},label,sample_id`.
/// `sample_id` is the 0-based row of the window in the test split.
pub fn export_embeddings(
    config: &RunConfig,
    data: &HarData,
    n_per_class: usize,
    out: &Path,
) -> Result<usize> {
    let (rows, ids) = match config.precision {
        Precision::F64 => embed::<f64>(config, data, n_per_class)?,
        Precision::F32 => embed::<f32>(config, data, n_per_class)?,
    };
    let width = rows.first().map_or(0, |r| r.len());
    let mut header: Vec<String> = (0..width).map(|i| format!("e{i}")).collect();
    header.push("label".into());
    header.push("sample_id".into());
    let table: Vec<Vec<String>> = rows
        .into_iter()
        .zip(&ids)
        .map(|(r, &(label, id))| {
            let mut row: Vec<String> = r.into_iter().map(fmt_num).collect();
            row.push(label.to_string());
            row.push(id.to_string());
            row
        })
        .collect();
    let n = table.len();
    write_atomic(out, &csv_text("har-cl/embeddings", &header, &table)?)?;
    Ok(n)
}
