//! Chebyshev approximation on `[0, pi]` and evaluation of the resulting
//! polynomials of a scaled Laplacian through the three-term recurrence.
//!
//! On `[0, pi]` the shifted polynomials are `T_0 = 1`,
//! `T_1(xi) = (xi - pi/2) / (pi/2)` and
//! `T_k(xi) = (4/pi)(xi - pi/2) T_{k-1}(xi) - T_{k-2}(xi)`. A function is
//! approximated by `c_0/2 + sum_{k=1}^{n-1} c_k T_k` with
//! `c_k = (2/pi) int_0^pi cos(k theta) g(pi/2 (cos theta + 1)) d theta`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseOperator;

/// Default number of trapezoid nodes in `theta`.
pub const DEFAULT_QUAD_POINTS: usize = 1 << 12;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 8;

/// Slack beyond `pi` tolerated for scaled arguments.
pub const DOMAIN_SLACK: f64 = 1e-9;

/// Quadrature rule for the coefficient integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// Composite trapezoid with the given number of nodes on `[0, pi]`.
    /// Converges spectrally for these periodic-extendable integrands.
    Trapezoid { points: usize },
    /// Adaptive Simpson with Richardson correction and an absolute tolerance,
    /// started from three unequal subintervals.
    AdaptiveSimpson { tol: f64 },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Trapezoid {
            points: DEFAULT_QUAD_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebApprox {
    coeffs: Vec<f64>,
}

impl ChebApprox {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one coefficient".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truncation order `n` (number of coefficients).
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates without the domain check.
    pub fn value(&self, xi: f64) -> f64 {
        let t = (xi - FRAC_PI_2) / FRAC_PI_2;
        let mut acc = 0.5 * self.coeffs[0];
        let (mut prev, mut cur) = (1.0, t);
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            if k > 1 {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            acc += c * cur;
        }
        acc
    }

    /// `max |approx - g|` on a uniform grid of `grid` points on `[0, pi]`.
    pub fn sup_error(&self, g: impl Fn(f64) -> f64, grid: usize) -> f64 {
        let grid = grid.max(2);
        (0..grid)
            .map(|i| {
                let xi = PI * i as f64 / (grid - 1) as f64;
                (self.value(xi) - g(xi)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Chebyshev coefficients of `g` with the trapezoid rule on `quad_points` nodes.
pub fn cheb_coeffs(g: impl Fn(f64) -> f64, n: usize, quad_points: usize) -> Result<ChebApprox> {
    if n == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    if quad_points < 4 * n {
        return Err(Error::InvalidParameter(format!(
            "need at least {} quadrature points for order {n}, got {quad_points}",
            4 * n
        )));
    }
    cheb_coeffs_with(
        g,
        n,
        Quadrature::Trapezoid {
            points: quad_points,
        },
    )
}

pub fn cheb_coeffs_with(g: impl Fn(f64) -> f64, n: usize, rule: Quadrature) -> Result<ChebApprox> {
    if n == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    let coeffs = match rule {
        Quadrature::Trapezoid { points } => {
            if points < 2 {
                return Err(Error::InvalidParameter(
                    "trapezoid needs at least 2 nodes".into(),
                ));
            }
            let h = PI / (points - 1) as f64;
            let samples: Vec<f64> = (0..points)
                .map(|i| g(FRAC_PI_2 * ((i as f64 * h).cos() + 1.0)))
                .collect();
            (0..n)
                .map(|k| {
                    let sum: f64 = samples
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
                            w * s * (k as f64 * i as f64 * h).cos()
                        })
                        .sum();
                    2.0 / PI * h * sum
                })
                .collect()
        }
        Quadrature::AdaptiveSimpson { tol } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter(
                    "simpson tolerance must be positive".into(),
                ));
            }
            let g = &g;
            (0..n)
                .map(|k| {
                    let integrand = move |theta: f64| {
                        (k as f64 * theta).cos() * g(FRAC_PI_2 * (theta.cos() + 1.0))
                    };
                    2.0 / PI * adaptive_simpson(integrand, 0.0, PI, tol)
                })
                .collect()
        }
    };
    ChebApprox::from_coeffs(coeffs)
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let h = 0.13579 * (b - a);
    let x = [a, a + h, a + 2.0 * h, 0.5 * (a + b), b - 2.0 * h, b - h, b];
    let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
    let hmin = f64::EPSILON * (b - a) / 1024.0;
    (0..3)
        .map(|i| {
            let s = 2 * i;
            simpson_step(&f, x[s], x[s + 2], y[s], y[s + 1], y[s + 2], tol, hmin, 0)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fc: f64,
    fb: f64,
    tol: f64,
    hmin: f64,
    depth: usize,
) -> f64 {
    let h = b - a;
    let c = 0.5 * (a + b);
    let fd = f(0.5 * (a + c));
    let fe = f(0.5 * (c + b));
    let coarse = h / 6.0 * (fa + 4.0 * fc + fb);
    let fine = h / 12.0 * (fa + 4.0 * fd + 2.0 * fc + 4.0 * fe + fb);
    let q = fine + (fine - coarse) / 15.0;
    if (fine - q).abs() <= tol || h.abs() < hmin || depth >= 60 {
        return q;
    }
    simpson_step(f, a, c, fa, fd, fc, tol, hmin, depth + 1)
        + simpson_step(f, c, b, fc, fe, fb, tol, hmin, depth + 1)
}

/// Evaluates the truncated series at `xi` through the recurrence.
pub fn cheb_eval(approx: &ChebApprox, xi: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=PI + DOMAIN_SLACK).contains(&xi) {
        return Err(Error::DomainViolation(xi));
    }
    Ok(approx.value(xi))
}

/// `T^n(s L) f` via the matrix recurrence; `n - 1` operator applications.
pub fn cheb_apply(
    approx: &ChebApprox,
    op: &SparseOperator,
    scale: f64,
    f: &[f64],
) -> Result<Vec<f64>> {
    Ok(cheb_apply_bank(std::slice::from_ref(approx), op, scale, f)?
        .pop()
        .expect("one approximant in, one vector out"))
}

/// Applies several approximants to the same input, sharing one recurrence.
/// Costs `max(n) - 1` operator applications in total.
pub fn cheb_apply_bank(
    approxes: &[ChebApprox],
    op: &SparseOperator,
    scale: f64,
    f: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let dim = op.dim();
    if f.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.len(),
        });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let order = approxes.iter().map(ChebApprox::order).max().unwrap_or(0);
    let mut outputs: Vec<Vec<f64>> = approxes
        .iter()
        .map(|a| f.iter().map(|x| 0.5 * a.coeffs[0] * x).collect())
        .collect();
    if order <= 1 {
        return Ok(outputs);
    }
    let alpha = 2.0 * scale / PI;
    let mut prev = f.to_vec();
    let mut cur = vec![0.0; dim];
    let mut work = vec![0.0; dim];
    // T_1 f = (2s/pi) L f - f
    op.apply_into(&prev, &mut work);
    for ((c, w), p) in cur.iter_mut().zip(&work).zip(&prev) {
        *c = alpha * w - p;
    }
    for k in 1..order {
        if k > 1 {
            op.apply_into(&cur, &mut work);
            for ((p, w), c) in prev.iter_mut().zip(&work).zip(&cur) {
                *p = 2.0 * (alpha * w - c) - *p;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        for (out, a) in outputs.iter_mut().zip(approxes) {
            if let Some(&ck) = a.coeffs.get(k) {
                for (o, c) in out.iter_mut().zip(&cur) {
                    *o += ck * c;
                }
            }
        }
    }
    Ok(outputs)
}
