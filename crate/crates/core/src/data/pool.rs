use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NUM_CLASSES;
use crate::error::{Error, Result};

/// Seeded without-replacement sampler over the training split.
///
/// Every index is issued at most once per pool, across the pretraining
/// subset and all rounds.
#[derive(Debug, Clone)]
pub struct SamplePool {
    available: Vec<Vec<usize>>,
    consumed: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
}

impl SamplePool {
    pub fn new(labels: &[usize], rng: ChaCha8Rng) -> Result<Self> {
        let mut available = vec![Vec::new(); NUM_CLASSES];
        for (i, &l) in labels.iter().enumerate() {
            if l >= NUM_CLASSES {
                return Err(Error::structural(format!(
                    "label {l} at index {i} out of range"
                )));
            }
            available[l].push(i);
        }
        Ok(Self {
            available,
            consumed: vec![Vec::new(); NUM_CLASSES],
            rng,
        })
    }

    pub fn from_seed(labels: &[usize], seed: u64) -> Result<Self> {
        Self::new(labels, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn remaining(&self, class: usize) -> usize {
        self.available[class].len()
    }

    pub fn consumed(&self, class: usize) -> &[usize] {
        &self.consumed[class]
    }

    fn draw(&mut self, class: usize, n: usize, round: Option<usize>) -> Result<Vec<usize>> {
        if class >= NUM_CLASSES {
            return Err(Error::structural(format!("class {class} out of range")));
        }
        let avail = &mut self.available[class];
        if avail.len() < n {
            return Err(Error::DataExhaustion {
                class,
                round,
                requested: n,
                remaining: avail.len(),
            });
        }
        let mut positions = rand::seq::index::sample(&mut self.rng, avail.len(), n).into_vec();
        let picked: Vec<usize> = positions.iter().map(|&p| avail[p]).collect();
        positions.sort_unstable();
        for &p in positions.iter().rev() {
            avail.remove(p);
        }
        self.consumed[class].extend_from_slice(&picked);
        Ok(picked)
    }

    fn check_all(&self, classes: &[usize], n: usize, round: Option<usize>) -> Result<()> {
        for &c in classes {
            if c >= NUM_CLASSES {
                return Err(Error::structural(format!("class {c} out of range")));
            }
            if self.available[c].len() < n {
                return Err(Error::DataExhaustion {
                    class: c,
                    round,
                    requested: n,
                    remaining: self.available[c].len(),
                });
            }
        }
        Ok(())
    }

    /// `per_class` fresh indices for each class (ascending class order),
    /// concatenated and then shuffled.
    pub fn sample_round(
        &mut self,
        classes: &[usize],
        per_class: usize,
        round: Option<usize>,
    ) -> Result<Vec<usize>> {
        let mut sorted = classes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        self.check_all(&sorted, per_class, round)?;
        let mut out = Vec::with_capacity(sorted.len() * per_class);
        for c in sorted {
            out.extend(self.draw(c, per_class, round)?);
        }
        out.shuffle(&mut self.rng);
        Ok(out)
    }

    /// Balanced subset over all six classes, drawn before any round.
    pub fn pretrain_subset(&mut self, k_per_class: usize) -> Result<Vec<usize>> {
        if k_per_class == 0 {
            return Ok(Vec::new());
        }
        let all: Vec<usize> = (0..NUM_CLASSES).collect();
        self.sample_round(&all, k_per_class, None)
    }
}
