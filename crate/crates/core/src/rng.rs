//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the run seed, with the
//! stream id in the nonce and the draw index as the block counter. A draw is
//! therefore a pure function of `(seed, stream, index)`, independent of
//! thread scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;

/// Standard normal variates from one counter-based stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    fn uniform_symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Marsaglia polar method. Each accepted pair yields two variates; the
    /// second is cached for the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.uniform_symmetric();
            let v = self.uniform_symmetric();
            let s = u * u + v * v;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let f = (-2.0 * s.ln() / s).sqrt();
            self.spare = Some(v * f);
            return u * f;
        }
    }
}

/// `n×n` matrix of independent standard normals, filled row by row.
pub fn gaussian_matrix(n: usize, stream: &mut NormalStream) -> Matrix {
    Matrix::from_fn(n, n, |_, _| stream.standard_normal())
}
