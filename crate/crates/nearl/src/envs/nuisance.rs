//! Nuisance state dimensions: a test fixture for redundant-information
//! regimes. Appended values are a pure function of `(previous state, step
//! index, config seed)` so environment dynamics stay replayable.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceKind {
    /// Fresh standard-normal draws every step.
    GaussianNoise,
    /// Bounded random walk, step size 0.1.
    RandomWalk,
    /// Exact copies of the leading base dimensions.
    DuplicatedSensors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    pub extra_dims: usize,
    pub kind: NuisanceKind,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard-normal value keyed by `(seed, t, dim, chain)`. The chain word
/// carries the previous appended value's bits so different episodes produce
/// different sequences while the map stays pure.
fn keyed_normal(seed: u64, t: usize, dim: usize, chain: u64) -> f64 {
    let key = splitmix64(seed)
        ^ splitmix64(t as u64).rotate_left(17)
        ^ splitmix64(dim as u64).rotate_left(41)
        ^ splitmix64(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

/// Append `cfg.extra_dims` nuisance values to a base state. `prev` is the
/// previously appended block (`None` at episode start for the standalone
/// call), `t` the target step index. With `extra_dims = 0` this is the
/// identity.
pub fn augment_nuisance(
    base: &[f64],
    cfg: &NuisanceConfig,
    t: usize,
    prev: Option<&[f64]>,
) -> Vec<f64> {
    let mut out = base.to_vec();
    if cfg.extra_dims == 0 {
        return out;
    }
    match cfg.kind {
        NuisanceKind::DuplicatedSensors => {
            for k in 0..cfg.extra_dims {
                out.push(base[k % base.len()]);
            }
        }
        NuisanceKind::GaussianNoise => {
            for k in 0..cfg.extra_dims {
                let chain = prev.map_or(0, |p| p[k].to_bits());
                out.push(keyed_normal(cfg.seed, t, k, chain));
            }
        }
        NuisanceKind::RandomWalk => {
            for k in 0..cfg.extra_dims {
                let prev_v = prev.map_or(0.0, |p| p[k]);
                let stepv = 0.1 * keyed_normal(cfg.seed, t, k, prev_v.to_bits());
                out.push((prev_v + stepv).clamp(-5.0, 5.0));
            }
        }
    }
    out
}

/// Episode-start appended values, drawn from the reset stream so each
/// episode gets a distinct nuisance trajectory.
pub fn initial_augment(base: &[f64], cfg: &NuisanceConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = base.to_vec();
    match cfg.kind {
        NuisanceKind::DuplicatedSensors => {
            for k in 0..cfg.extra_dims {
                out.push(base[k % base.len()]);
            }
        }
        NuisanceKind::GaussianNoise | NuisanceKind::RandomWalk => {
            for _ in 0..cfg.extra_dims {
                let v: f64 = StandardNormal.sample(rng);
                out.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_extra_dims_is_identity() {
        let cfg = NuisanceConfig { extra_dims: 0, kind: NuisanceKind::GaussianNoise, seed: 1 };
        assert_eq!(augment_nuisance(&[1.0, 2.0], &cfg, 5, None), vec![1.0, 2.0]);
    }

    #[test]
    fn duplicated_sensors_copy_leading_dims() {
        let cfg = NuisanceConfig { extra_dims: 2, kind: NuisanceKind::DuplicatedSensors, seed: 1 };
        let out = augment_nuisance(&[3.0, -4.0, 5.0], &cfg, 0, None);
        assert_eq!(out, vec![3.0, -4.0, 5.0, 3.0, -4.0]);
    }

    #[test]
    fn random_walk_stream_reproducible() {
        let cfg = NuisanceConfig { extra_dims: 3, kind: NuisanceKind::RandomWalk, seed: 42 };
        let run = || {
            let mut appended = vec![0.5, -0.25, 1.0];
            let mut seq = Vec::new();
            for t in 1..20 {
                let full = augment_nuisance(&[0.0], &cfg, t, Some(&appended));
                appended = full[1..].to_vec();
                seq.extend_from_slice(&appended);
            }
            seq
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn gaussian_noise_has_roughly_unit_moments() {
        let cfg = NuisanceConfig { extra_dims: 1, kind: NuisanceKind::GaussianNoise, seed: 9 };
        let mut prev = vec![0.1];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let n = 4000;
        for t in 0..n {
            let full = augment_nuisance(&[0.0], &cfg, t, Some(&prev));
            prev = full[1..].to_vec();
            sum += prev[0];
            sumsq += prev[0] * prev[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.08, "mean {mean}");
        assert!((var - 1.0).abs() < 0.12, "var {var}");
    }
}
