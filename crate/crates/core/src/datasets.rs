//! Seeded synthetic data: two moons in high dimension, sphere samplings with
//! test signals, Gaussian noise and random label draws.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PointCloud;
use crate::solvers::LabelSet;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-trial seed derived from a root seed.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMoonsSpec {
    pub points_per_moon: usize,
    pub ambient_dim: usize,
    /// Variance (not standard deviation) of the per-coordinate noise.
    pub noise_variance: f64,
    pub seed: u64,
}

impl Default for TwoMoonsSpec {
    fn default() -> Self {
        Self {
            points_per_moon: 1000,
            ambient_dim: 100,
            noise_variance: 0.02,
            seed: 0,
        }
    }
}

/// Upper unit half circle centered at `(0, 0)` (label 0) and lower unit half
/// circle centered at `(1, 0.5)` (label 1), embedded in the first two
/// coordinates of `R^ambient_dim` with i.i.d. Gaussian noise on every coordinate.
/// Angles are uniform on `[0, pi]`.
pub fn gen_two_moons(spec: &TwoMoonsSpec) -> Result<(PointCloud, Vec<u8>)> {
    if spec.ambient_dim < 2 || spec.points_per_moon == 0 {
        return Err(Error::InvalidParameter(
            "two moons needs ambient_dim >= 2 and at least one point per moon".into(),
        ));
    }
    if !(spec.noise_variance >= 0.0) {
        return Err(Error::InvalidParameter(
            "noise variance must be nonnegative".into(),
        ));
    }
    let mut rng = rng(spec.seed);
    let std = spec.noise_variance.sqrt();
    let mut points = Vec::with_capacity(2 * spec.points_per_moon);
    let mut labels = Vec::with_capacity(2 * spec.points_per_moon);
    for moon in 0..2u8 {
        for _ in 0..spec.points_per_moon {
            let t: f64 = rng.random_range(0.0..=std::f64::consts::PI);
            let mut p = vec![0.0; spec.ambient_dim];
            if moon == 0 {
                p[0] = t.cos();
                p[1] = t.sin();
            } else {
                p[0] = 1.0 + t.cos();
                p[1] = 0.5 - t.sin();
            }
            if std > 0.0 {
                for x in p.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x += std * z;
                }
            }
            points.push(p);
            labels.push(moon);
        }
    }
    Ok((PointCloud::new(points)?, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SphereSignal {
    /// 1 inside the spherical cap of half-angle 60 degrees around `+z`, 0 outside.
    #[default]
    Cap,
    /// The `z` coordinate.
    Harmonic,
    /// 1 on the hemisphere `x >= 0`, 0 elsewhere.
    Step,
}

impl std::str::FromStr for SphereSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cap" => Ok(SphereSignal::Cap),
            "harmonic" => Ok(SphereSignal::Harmonic),
            "step" => Ok(SphereSignal::Step),
            other => Err(Error::InvalidParameter(format!(
                "unknown sphere signal `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub vertex_count: usize,
    pub seed: u64,
    pub signal: SphereSignal,
}

impl Default for SphereSpec {
    fn default() -> Self {
        Self {
            vertex_count: 2000,
            seed: 0,
            signal: SphereSignal::Cap,
        }
    }
}

/// Uniform points on the unit sphere in `R^3` (normalized Gaussians) and a test signal.
pub fn gen_sphere(spec: &SphereSpec) -> Result<(PointCloud, Vec<f64>)> {
    if spec.vertex_count < 10 {
        return Err(Error::InvalidParameter(format!(
            "sphere needs at least 10 vertices, got {}",
            spec.vertex_count
        )));
    }
    let mut rng = rng(spec.seed);
    let cap_cos = 60f64.to_radians().cos();
    let mut points = Vec::with_capacity(spec.vertex_count);
    let mut signal = Vec::with_capacity(spec.vertex_count);
    while points.len() < spec.vertex_count {
        let v: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n < 1e-8 {
            continue;
        }
        let p = vec![v[0] / n, v[1] / n, v[2] / n];
        signal.push(match spec.signal {
            SphereSignal::Cap => f64::from(u8::from(p[2] >= cap_cos)),
            SphereSignal::Harmonic => p[2],
            SphereSignal::Step => f64::from(u8::from(p[0] >= 0.0)),
        });
        points.push(p);
    }
    Ok((PointCloud::new(points)?, signal))
}

/// `f + N(0, std^2)` i.i.d. per entry.
pub fn add_gaussian_noise(f: &[f64], std: f64, seed: u64) -> Result<Vec<f64>> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise std must be nonnegative, got {std}"
        )));
    }
    if std == 0.0 {
        return Ok(f.to_vec());
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng(seed);
    Ok(f.iter().map(|x| x + normal.sample(&mut rng)).collect())
}

/// Draws `round(fraction * K)` (at least 2) labeled vertices uniformly without
/// replacement, redrawing until both classes are present.
pub fn random_labels(truth: &[u8], fraction: f64, seed: u64) -> Result<LabelSet> {
    let n = truth.len();
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "label fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let has_both = truth.contains(&0) && truth.contains(&1);
    if !has_both {
        return Err(Error::SingleClassLabels);
    }
    let count = ((fraction * n as f64).round() as usize).clamp(2, n);
    let mut rng = rng(seed);
    for _ in 0..1000 {
        let picked: Vec<(usize, u8)> = sample(&mut rng, n, count)
            .into_iter()
            .map(|i| (i, truth[i]))
            .collect();
        match LabelSet::new(picked, n) {
            Ok(set) => return Ok(set),
            Err(Error::SingleClassLabels) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingleClassLabels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_two_moons_shape() {
        let (pc, labels) = gen_two_moons(&TwoMoonsSpec::default()).unwrap();
        assert_eq!(pc.len(), 2000);
        assert_eq!(pc.dim(), 100);
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 1000);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 1000);
    }

    #[test]
    fn noiseless_moons_on_arcs() {
        let spec = TwoMoonsSpec {
            noise_variance: 0.0,
            points_per_moon: 50,
            ..TwoMoonsSpec::default()
        };
        let (pc, labels) = gen_two_moons(&spec).unwrap();
        for (p, &l) in pc.points().iter().zip(&labels) {
            assert!(p[2..].iter().all(|&x| x == 0.0));
            let (cx, cy) = if l == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let r = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            if l == 0 {
                assert!(p[1] >= 0.0);
            } else {
                assert!(p[1] <= 0.5);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = TwoMoonsSpec {
            seed: 9,
            points_per_moon: 20,
            ..TwoMoonsSpec::default()
        };
        assert_eq!(gen_two_moons(&spec).unwrap(), gen_two_moons(&spec).unwrap());
        let s = SphereSpec {
            vertex_count: 100,
            seed: 3,
            signal: SphereSignal::Harmonic,
        };
        assert_eq!(gen_sphere(&s).unwrap(), gen_sphere(&s).unwrap());
        let f = vec![1.0; 10];
        assert_eq!(
            add_gaussian_noise(&f, 0.1, 5).unwrap(),
            add_gaussian_noise(&f, 0.1, 5).unwrap()
        );
    }

    #[test]
    fn sphere_points_and_signals() {
        for signal in [
            SphereSignal::Cap,
            SphereSignal::Harmonic,
            SphereSignal::Step,
        ] {
            let (pc, f) = gen_sphere(&SphereSpec {
                vertex_count: 500,
                seed: 1,
                signal,
            })
            .unwrap();
            for (p, v) in pc.points().iter().zip(&f) {
                let n: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
                match signal {
                    SphereSignal::Harmonic => assert_eq!(*v, p[2]),
                    _ => assert!(*v == 0.0 || *v == 1.0),
                }
            }
        }
        assert!(gen_sphere(&SphereSpec {
            vertex_count: 5,
            ..SphereSpec::default()
        })
        .is_err());
    }

    #[test]
    fn noise_statistics() {
        let f = vec![0.0; 10_000];
        assert_eq!(add_gaussian_noise(&f, 0.0, 1).unwrap(), f);
        let noisy = add_gaussian_noise(&f, 0.05, 11).unwrap();
        let mean = noisy.iter().sum::<f64>() / noisy.len() as f64;
        let var = noisy.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (noisy.len() - 1) as f64;
        assert!((var.sqrt() - 0.05).abs() / 0.05 < 0.03);
    }

    #[test]
    fn label_draws() {
        let truth: Vec<u8> = (0..200).map(|k| u8::from(k >= 100)).collect();
        let set = random_labels(&truth, 0.1, 4).unwrap();
        assert_eq!(set.len(), 20);
        assert_eq!(set, random_labels(&truth, 0.1, 4).unwrap());
        assert!(set.entries().iter().all(|&(i, c)| truth[i] == c));
        let tiny = random_labels(&truth, 0.001, 4).unwrap();
        assert_eq!(tiny.len(), 2);
    }

    #[test]
    fn seed_derivation_spreads() {
        let a: Vec<u64> = (0..5).map(|i| derive_seed(42, i)).collect();
        let mut b = a.clone();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
