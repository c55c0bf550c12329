//! Deterministic parameter initialization.
//!
//! Each parameter draws from its own generator seeded by the model seed and
//! the parameter's name, so adding or removing one component never shifts
//! the initial values of the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_tensor::{ParamId, ParamStore, Tensor};

use crate::error::Result;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub struct Init<'a> {
    pub store: &'a mut ParamStore,
    seed: u64,
}

impl<'a> Init<'a> {
    pub fn new(store: &'a mut ParamStore, seed: u64) -> Self {
        Init { store, seed }
    }

    pub fn rng_for(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(name.as_bytes()))
    }

    pub fn uniform(&mut self, name: &str, shape: &[usize], bound: f64) -> Result<ParamId> {
        let mut rng = self.rng_for(name);
        let n = shape.iter().product();
        let data = if bound > 0.0 {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        } else {
            vec![0.0; n]
        };
        Ok(self.store.add(name, Tensor::new(shape.to_vec(), data)?)?)
    }

    /// Glorot-uniform for a `rows × cols` weight matrix.
    pub fn glorot(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId> {
        let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
        self.uniform(name, &[rows, cols], bound)
    }

    pub fn constant(&mut self, name: &str, shape: &[usize], value: f64) -> Result<ParamId> {
        Ok(self.store.add(name, Tensor::full(shape, value))?)
    }
}
