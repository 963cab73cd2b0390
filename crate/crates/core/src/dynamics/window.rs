use crate::error::{Error, Result};
use crate::family::NoiseModel;
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `ordinal`-th task of a run with master seed `master`.
pub fn derive_seed(master: u64, ordinal: u64) -> u64 {
    mix64(master ^ mix64(ordinal.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Finite two-sided noise realization `(α_i)` for `i ∈ [lo, hi)`.
///
/// Each `α_i` is drawn from its own generator seeded by `(seed, i)`, so
/// windows with the same seed agree wherever their spans overlap. Shifted
/// views share storage and only move the origin.
#[derive(Clone, Debug)]
pub struct NoiseWindow<T: Real> {
    seed: u64,
    dim: usize,
    lo: i64,
    count: usize,
    values: Arc<[T]>,
    origin: i64,
}

impl<T: Real> NoiseWindow<T> {
    /// Span `[-n_past, n_future)`.
    pub fn generate(noise: &NoiseModel<T>, seed: u64, n_past: usize, n_future: usize) -> Self {
        let dim = noise.dimension();
        let lo = -(n_past as i64);
        let hi = n_future as i64;
        let mut values = Vec::with_capacity(dim * (n_past + n_future));
        for i in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            noise.sample_into(&mut rng, &mut values);
        }
        NoiseWindow {
            seed,
            dim,
            lo,
            count: n_past + n_future,
            values: values.into(),
            origin: 0,
        }
    }

    /// Span `[-n, n)`.
    pub fn symmetric(noise: &NoiseModel<T>, seed: u64, n: usize) -> Self {
        Self::generate(noise, seed, n, n)
    }

    /// Window with explicit values, the first one at index `lo`.
    pub fn from_values(lo: i64, values: Vec<Vec<T>>) -> Result<Self> {
        let dim = values.first().map_or(0, |v| v.len());
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Parameter("noise points of unequal dimension".into()));
        }
        Ok(NoiseWindow {
            seed: 0,
            dim,
            lo,
            count: values.len(),
            values: values.concat().into(),
            origin: 0,
        })
    }

    /// `α_i = alpha` for every `i ∈ [lo, hi)`.
    pub fn constant(alpha: &[T], lo: i64, hi: i64) -> Self {
        let n = (hi - lo).max(0) as usize;
        NoiseWindow {
            seed: 0,
            dim: alpha.len(),
            lo,
            count: n,
            values: alpha.repeat(n).into(),
            origin: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.count
    }

    /// Valid index range `[lo, hi)` of this view.
    pub fn span(&self) -> (i64, i64) {
        let lo = self.lo - self.origin;
        (lo, lo + self.len() as i64)
    }

    /// The view `θ^j ω`: `shift(j).alpha(i) == alpha(i + j)`.
    pub fn shift(&self, j: i64) -> Self {
        NoiseWindow {
            origin: self.origin + j,
            ..self.clone()
        }
    }

    /// `α_i` of this view.
    pub fn alpha(&self, i: i64) -> Result<&[T]> {
        let (lo, hi) = self.span();
        if i < lo || i >= hi {
            return Err(Error::Index { index: i, lo, hi });
        }
        let k = (i - lo) as usize;
        Ok(&self.values[k * self.dim..(k + 1) * self.dim])
    }

    /// Ensures `[lo, hi)` lies inside the span.
    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        let (a, b) = self.span();
        if lo < a {
            return Err(Error::Index { index: lo, lo: a, hi: b });
        }
        if hi > b {
            return Err(Error::Index {
                index: hi - 1,
                lo: a,
                hi: b,
            });
        }
        Ok(())
    }
}
