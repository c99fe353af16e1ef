//! Real-valued tight frame mask families on `[0, pi]`.
//!
//! Every family satisfies the unitary extension sum rule
//! `sum_j a_j(xi)^2 = 1`, which is what makes the graph transform tight.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskFamily {
    Haar,
    Linear,
    Quadratic,
    /// `a_j = sqrt(C(r, j)) sin^j(xi/2) cos^(r-j)(xi/2)` for `j = 0..=r`.
    BSpline(usize),
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl MaskFamily {
    /// Number of high-pass masks.
    pub fn r(&self) -> usize {
        match *self {
            MaskFamily::Haar => 1,
            MaskFamily::Linear => 2,
            MaskFamily::Quadratic => 3,
            MaskFamily::BSpline(r) => r,
        }
    }

    /// Total number of masks, `r + 1`.
    pub fn mask_count(&self) -> usize {
        self.r() + 1
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Numeric identifier used by the coefficient file header. B-spline
    /// families are `3` with `r` stored separately.
    pub fn id(&self) -> u32 {
        match self {
            MaskFamily::Haar => 0,
            MaskFamily::Linear => 1,
            MaskFamily::Quadratic => 2,
            MaskFamily::BSpline(_) => 3,
        }
    }

    pub fn from_id(id: u32, r: usize) -> Option<Self> {
        let family = match id {
            0 => MaskFamily::Haar,
            1 => MaskFamily::Linear,
            2 => MaskFamily::Quadratic,
            3 if r >= 1 => MaskFamily::BSpline(r),
            _ => return None,
        };
        (family.r() == r).then_some(family)
    }

    /// Value of mask `j` at `xi`. Panics if `j > r`.
    pub fn eval(&self, j: usize, xi: f64) -> f64 {
        assert!(j <= self.r(), "mask index {j} out of range for {self}");
        let (s, c) = (xi / 2.0).sin_cos();
        match (*self, j) {
            (MaskFamily::Haar, 0) => c,
            (MaskFamily::Haar, _) => s,
            (MaskFamily::Linear, 0) => c * c,
            (MaskFamily::Linear, 1) => FRAC_1_SQRT_2 * xi.sin(),
            (MaskFamily::Linear, _) => s * s,
            (MaskFamily::Quadratic, 0) => c * c * c,
            (MaskFamily::Quadratic, 1) => 3f64.sqrt() * s * c * c,
            (MaskFamily::Quadratic, 2) => 3f64.sqrt() * s * s * c,
            (MaskFamily::Quadratic, _) => s * s * s,
            (MaskFamily::BSpline(r), j) => {
                binomial(r, j).sqrt() * s.powi(j as i32) * c.powi((r - j) as i32)
            }
        }
    }

    /// All `r + 1` mask values at `xi`.
    pub fn eval_all(&self, xi: f64) -> Vec<f64> {
        (0..=self.r()).map(|j| self.eval(j, xi)).collect()
    }
}

impl fmt::Display for MaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskFamily::Haar => f.write_str("haar"),
            MaskFamily::Linear => f.write_str("linear"),
            MaskFamily::Quadratic => f.write_str("quadratic"),
            MaskFamily::BSpline(r) => write!(f, "bspline({r})"),
        }
    }
}

impl FromStr for MaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        make_family(s)
    }
}

/// Parses `haar`, `linear`, `quadratic`, or `bspline(r)` (also `bspline:r`).
pub fn make_family(name: &str) -> Result<MaskFamily> {
    let name = name.trim().to_ascii_lowercase();
    match name.as_str() {
        "haar" => return Ok(MaskFamily::Haar),
        "linear" => return Ok(MaskFamily::Linear),
        "quadratic" => return Ok(MaskFamily::Quadratic),
        _ => {}
    }
    let order = name
        .strip_prefix("bspline(")
        .and_then(|rest| rest.strip_suffix(')'))
        .or_else(|| name.strip_prefix("bspline:"));
    match order.map(|r| r.trim().parse::<usize>()) {
        Some(Ok(r)) if r >= 1 => Ok(MaskFamily::BSpline(r)),
        _ => Err(Error::UnknownFamily(name)),
    }
}

/// Largest `|sum_j a_j(xi)^2 - 1|` over a uniform grid of `grid_size` points on `[0, pi]`.
pub fn verify_uep(family: &MaskFamily, grid_size: usize) -> f64 {
    let grid_size = grid_size.max(2);
    (0..grid_size)
        .map(|i| {
            let xi = PI * i as f64 / (grid_size - 1) as f64;
            let total: f64 = family.eval_all(xi).iter().map(|a| a * a).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Same as [`verify_uep`] for an arbitrary set of mask functions.
pub fn verify_uep_fns(masks: &[&dyn Fn(f64) -> f64], grid_size: usize) -> f64 {
    let grid_size = grid_size.max(2);
    (0..grid_size)
        .map(|i| {
            let xi = PI * i as f64 / (grid_size - 1) as f64;
            let total: f64 = masks.iter().map(|m| m(xi).powi(2)).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| PI * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn haar_at_pi() {
        let v = MaskFamily::Haar.eval_all(PI);
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_at_half_pi() {
        let v = MaskFamily::Linear.eval_all(PI / 2.0);
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((v[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((v[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bspline_matches_named_families() {
        for (bs, named, tol) in [
            (MaskFamily::BSpline(1), MaskFamily::Haar, 1e-14),
            (MaskFamily::BSpline(2), MaskFamily::Linear, 1e-15),
            (MaskFamily::BSpline(3), MaskFamily::Quadratic, 1e-14),
        ] {
            for xi in grid(1001) {
                for j in 0..=named.r() {
                    assert!(
                        (bs.eval(j, xi) - named.eval(j, xi)).abs() <= tol,
                        "{bs} vs {named}"
                    );
                }
            }
        }
    }

    #[test]
    fn uep_residuals() {
        assert!(verify_uep(&MaskFamily::Haar, 1001) <= 1e-15);
        assert!(verify_uep(&MaskFamily::Quadratic, 1001) <= 1e-14);
        for r in 1..=8 {
            assert!(verify_uep(&MaskFamily::BSpline(r), 10_000) <= 1e-12);
        }
    }

    #[test]
    fn broken_family_detected() {
        let c = |x: f64| (x / 2.0).cos();
        let residual = verify_uep_fns(&[&c, &c], 1001);
        assert!(residual >= 0.9);
        assert!((residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_values_and_lowpass_monotone() {
        for f in [
            MaskFamily::Haar,
            MaskFamily::Linear,
            MaskFamily::Quadratic,
            MaskFamily::BSpline(5),
        ] {
            assert_eq!(f.eval(0, 0.0), 1.0);
            for j in 1..=f.r() {
                assert_eq!(f.eval(j, 0.0), 0.0);
            }
            let lows: Vec<f64> = grid(2001).map(|x| f.eval(0, x)).collect();
            assert!(lows.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(make_family("Haar").unwrap(), MaskFamily::Haar);
        assert_eq!(make_family("bspline(4)").unwrap(), MaskFamily::BSpline(4));
        assert_eq!(make_family("bspline:6").unwrap(), MaskFamily::BSpline(6));
        assert!(matches!(
            make_family("bspline(0)"),
            Err(Error::UnknownFamily(_))
        ));
        assert!(matches!(make_family("meyer"), Err(Error::UnknownFamily(_))));
        for f in [MaskFamily::Linear, MaskFamily::BSpline(3)] {
            assert_eq!(make_family(&f.name()).unwrap(), f);
            assert_eq!(MaskFamily::from_id(f.id(), f.r()), Some(f));
        }
        assert_eq!(MaskFamily::from_id(0, 2), None);
    }
}
