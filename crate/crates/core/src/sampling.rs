//! Seeded random constraint matrices and cost vectors.
//!
//! Every generator is a ChaCha8 stream: `seed_from_u64(master_seed)` selects
//! the key and `set_stream(stream_index)` the stream, so any replicate can be
//! re-derived from the pair alone. Gaussian variates use the ziggurat sampler
//! of `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm2, DenseMatrix, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("spike count k = {k} must satisfy 1 <= k <= n = {n}")]
    SpikeOutOfRange { k: usize, n: usize },
    #[error("dimensions must be positive (got {m} x {n})")]
    EmptyShape { m: usize, n: usize },
    #[error("Bernoulli-normal parameters p = {p}, variance = {variance} must satisfy 0 < p <= 1 and p * variance = 1")]
    BadBernoulliNormal { p: f64, variance: f64 },
    #[error("vector must have unit Euclidean norm (got {0})")]
    NotUnit(f64),
    #[error("fractions must lie in (0, 1) (delta = {delta}, rho = {rho})")]
    BadFraction { delta: f64, rho: f64 },
}

/// Distribution of the i.i.d. entries of `A`. All variants are centred with
/// unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EntryDistribution {
    Gaussian,
    Rademacher,
    /// Product of a Bernoulli(p) mask and an independent N(0, variance).
    BernoulliNormal { p: f64, variance: f64 },
}

impl EntryDistribution {
    /// Bernoulli(1/2) times N(0, 2).
    pub const HALF_BERNOULLI_NORMAL: Self = Self::BernoulliNormal { p: 0.5, variance: 2.0 };

    pub fn validate(&self) -> Result<(), SamplingError> {
        if let Self::BernoulliNormal { p, variance } = *self {
            let ok = p > 0.0 && p <= 1.0 && variance > 0.0 && (p * variance - 1.0).abs() <= 1e-12;
            if !ok {
                return Err(SamplingError::BadBernoulliNormal { p, variance });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::BernoulliNormal { p, variance } => {
                let keep = rng.random::<f64>() < p;
                let g: f64 = rng.sample(StandardNormal);
                if keep {
                    g * variance.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// Fills `out` with i.i.d. draws. Rademacher signs are taken 64 at a time
    /// from the bits of one `u64`.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Rademacher => {
                for chunk in out.chunks_mut(64) {
                    let bits = rng.next_u64();
                    for (k, v) in chunk.iter_mut().enumerate() {
                        *v = if (bits >> k) & 1 == 1 { 1.0 } else { -1.0 };
                    }
                }
            }
            _ => {
                for v in out.iter_mut() {
                    *v = self.draw(rng);
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Gaussian => "gaussian".into(),
            Self::Rademacher => "rademacher".into(),
            Self::BernoulliNormal { p, variance } => format!("bernoulli_normal(p={p},var={variance})"),
        }
    }
}

/// Family of unit cost vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostVectorKind {
    /// i.i.d. signs scaled to `±1/√n`.
    RescaledRademacher,
    /// Normalised i.i.d. Gaussian vector.
    UniformSphere,
    /// `k` leading entries equal to `1/√k`, the rest zero.
    KSpike { k: usize },
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// An independent child stream, e.g. one per chunk of Monte Carlo trials.
    /// The child key mixes both parent coordinates through SplitMix64.
    pub fn substream(&self, index: u64) -> SeedSpec {
        let mut z = self.master_seed ^ self.stream_index.rotate_left(29) ^ 0x5851_f42d_4c95_7f2d;
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        SeedSpec::new(z ^ (z >> 31), index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

pub fn sample_matrix(
    dist: EntryDistribution,
    m: usize,
    n: usize,
    seed: SeedSpec,
) -> Result<DenseMatrix, SamplingError> {
    if m == 0 || n == 0 {
        return Err(SamplingError::EmptyShape { m, n });
    }
    dist.validate()?;
    let mut data = vec![0.0; m * n];
    dist.fill(&mut seed.rng(), &mut data);
    Ok(DenseMatrix::from_raw(m, n, data))
}

pub fn sample_cost_vector(kind: CostVectorKind, n: usize, seed: SeedSpec) -> Result<Vector, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyShape { m: 1, n });
    }
    let entries = match kind {
        CostVectorKind::RescaledRademacher => {
            let s = 1.0 / (n as f64).sqrt();
            let mut rng = seed.rng();
            (0..n).map(|_| if rng.random::<bool>() { s } else { -s }).collect()
        }
        CostVectorKind::UniformSphere => {
            let mut rng = seed.rng();
            loop {
                let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let norm = norm2(&g);
                if norm > 0.0 {
                    break g.into_iter().map(|v| v / norm).collect();
                }
            }
        }
        CostVectorKind::KSpike { k } => {
            if k == 0 || k > n {
                return Err(SamplingError::SpikeOutOfRange { k, n });
            }
            let s = 1.0 / (k as f64).sqrt();
            (0..n).map(|i| if i < k { s } else { 0.0 }).collect()
        }
    };
    Ok(Vector::from_raw(entries))
}

/// Whether the unit vector `c` lies within distance `rho` of the
/// `⌊delta·n⌋`-sparse vectors, i.e. its `⌊delta·n⌋` largest squared entries
/// carry mass at least `1 - rho²`.
pub fn is_compressible(c: &[f64], delta: f64, rho: f64) -> Result<bool, SamplingError> {
    let norm = norm2(c);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(SamplingError::NotUnit(norm));
    }
    if !(delta > 0.0 && delta < 1.0 && rho > 0.0 && rho < 1.0) {
        return Err(SamplingError::BadFraction { delta, rho });
    }
    let s = (delta * c.len() as f64).floor() as usize;
    let mut sq: Vec<f64> = c.iter().map(|v| v * v).collect();
    sq.sort_unstable_by(|a, b| b.total_cmp(a));
    let top: f64 = sq.iter().take(s).sum();
    Ok(top >= 1.0 - rho * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rademacher_support() {
        let a = sample_matrix(EntryDistribution::Rademacher, 2, 2, SeedSpec::new(7, 0)).unwrap();
        assert!(a.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    }

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gaussian_moments() {
        for stream in 0..5 {
            let a = sample_matrix(EntryDistribution::Gaussian, 10_000, 1, SeedSpec::new(11, stream)).unwrap();
            let (mean, var) = mean_var(a.as_slice());
            assert!(mean.abs() <= 0.05, "mean {mean}");
            assert!((0.9..=1.1).contains(&var), "var {var}");
        }
    }

    #[test]
    fn bernoulli_normal_moments() {
        for stream in 0..5 {
            let a = sample_matrix(EntryDistribution::HALF_BERNOULLI_NORMAL, 10_000, 1, SeedSpec::new(3, stream))
                .unwrap();
            let zeros = a.as_slice().iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
            assert!((0.45..=0.55).contains(&zeros), "zero fraction {zeros}");
            let nz: Vec<f64> = a.as_slice().iter().copied().filter(|&v| v != 0.0).collect();
            let (_, var) = mean_var(&nz);
            assert!((1.7..=2.3).contains(&var), "nonzero variance {var}");
        }
    }

    #[test]
    fn bad_bernoulli_normal() {
        let d = EntryDistribution::BernoulliNormal { p: 0.5, variance: 1.0 };
        assert!(sample_matrix(d, 2, 2, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn cost_vector_examples() {
        let c = sample_cost_vector(CostVectorKind::KSpike { k: 4 }, 50, SeedSpec::new(0, 0)).unwrap();
        assert_eq!(&c[..5], &[0.5, 0.5, 0.5, 0.5, 0.0]);
        assert!(c[4..].iter().all(|&v| v == 0.0));

        let c = sample_cost_vector(CostVectorKind::RescaledRademacher, 50, SeedSpec::new(1, 2)).unwrap();
        assert!(c.iter().all(|v| (v.abs() - 0.141421356).abs() < 1e-8));

        for s in 0..100 {
            let c = sample_cost_vector(CostVectorKind::UniformSphere, 1000, SeedSpec::new(5, s)).unwrap();
            assert!(c.norm_inf() < 0.2);
        }

        assert_eq!(
            sample_cost_vector(CostVectorKind::KSpike { k: 51 }, 50, SeedSpec::new(0, 0)),
            Err(SamplingError::SpikeOutOfRange { k: 51, n: 50 })
        );
    }

    #[test]
    fn determinism_and_stream_independence() {
        let s = SeedSpec::new(42, 9);
        let a = sample_matrix(EntryDistribution::Gaussian, 30, 7, s).unwrap();
        let b = sample_matrix(EntryDistribution::Gaussian, 30, 7, s).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let c = sample_matrix(EntryDistribution::Gaussian, 30, 7, SeedSpec::new(42, 10)).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn compressibility_examples() {
        let mut e1 = vec![0.0; 50];
        e1[0] = 1.0;
        assert!(is_compressible(&e1, 0.02, 0.1).unwrap());

        let flat = vec![1.0 / 50f64.sqrt(); 50];
        assert!(!is_compressible(&flat, 0.02, 0.1).unwrap());

        let n = 50;
        let rest = 0.6 / ((n - 1) as f64).sqrt();
        let mut v = vec![rest; n];
        v[0] = 0.8;
        assert!(is_compressible(&v, 0.02, 0.6).unwrap());
        // just below the boundary: top mass 0.64 < 1 - 0.59^2
        assert!(!is_compressible(&v, 0.02, 0.59).unwrap());

        assert!(matches!(is_compressible(&[2.0, 0.0], 0.5, 0.5), Err(SamplingError::NotUnit(_))));
    }

    #[test]
    fn kspike_threshold_exact() {
        let n = 40;
        for k in 1..=n {
            let c = sample_cost_vector(CostVectorKind::KSpike { k }, n, SeedSpec::new(0, 0)).unwrap();
            for &delta in &[0.01, 0.05, 0.1, 0.26, 0.5, 0.9] {
                for &rho in &[0.1, 0.3, 0.5, 0.7, 0.95] {
                    let s = (delta * n as f64).floor() as usize;
                    let expected = (s.min(k) as f64) / (k as f64) >= 1.0 - rho * rho;
                    // the oracle and the implementation may round 1/sqrt(k)^2 differently
                    let margin = ((s.min(k) as f64) / (k as f64) - (1.0 - rho * rho)).abs();
                    if margin > 1e-12 {
                        assert_eq!(is_compressible(&c, delta, rho).unwrap(), expected, "k={k} d={delta} r={rho}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn unit_norm(n in 1usize..200, stream in 0u64..1000, which in 0usize..3) {
            let kind = match which {
                0 => CostVectorKind::RescaledRademacher,
                1 => CostVectorKind::UniformSphere,
                _ => CostVectorKind::KSpike { k: 1 + (stream as usize) % n },
            };
            let c = sample_cost_vector(kind, n, SeedSpec::new(99, stream)).unwrap();
            prop_assert!((c.norm2() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn compressibility_monotone(stream in 0u64..500, d in 0.02f64..0.5, r in 0.05f64..0.6) {
            let c = sample_cost_vector(CostVectorKind::UniformSphere, 60, SeedSpec::new(1, stream)).unwrap();
            if is_compressible(&c, d, r).unwrap() {
                prop_assert!(is_compressible(&c, (d + 0.3).min(0.99), r).unwrap());
                prop_assert!(is_compressible(&c, d, (r + 0.3).min(0.99)).unwrap());
            }
        }
    }
}
