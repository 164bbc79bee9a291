use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Endless minibatch index stream over `0..len`.
///
/// Each epoch is a fresh permutation; the trailing `len % batch_size`
/// indices of an epoch are dropped.
#[derive(Debug, Clone)]
pub struct BatchIterator {
    len: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    epoch: usize,
}

impl BatchIterator {
    pub fn new(len: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::input("batch size must be at least 1"));
        }
        if batch_size > len {
            return Err(Error::input(format!(
                "batch size {batch_size} exceeds dataset size {len}"
            )));
        }
        let mut it = BatchIterator {
            len,
            batch_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..len).collect(),
            cursor: 0,
            epoch: 0,
        };
        it.order.shuffle(&mut it.rng);
        Ok(it)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.len / self.batch_size
    }

    /// Completed epochs so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn next_batch(&mut self) -> &[usize] {
        if self.cursor + self.batch_size > self.len {
            self.order.clear();
            self.order.extend(0..self.len);
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epoch += 1;
        }
        let start = self.cursor;
        self.cursor += self.batch_size;
        &self.order[start..self.cursor]
    }
}
