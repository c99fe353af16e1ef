//! Split Bregman solvers for graph denoising and semi-supervised binary
//! clustering with an l1 penalty on tight frame coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{fiedler_vector_with, norm, FiedlerOptions};
use crate::wftg::{BandIndex, FrameCoefficients, TransformPlan};

/// Degree-weighted norms `|f|_{p,G} = (sum_k |f_k|^p d_k)^{1/p}`.
#[derive(Debug, Clone, Copy)]
pub struct GraphNorms<'a> {
    degrees: &'a [f64],
}

impl<'a> GraphNorms<'a> {
    pub fn new(degrees: &'a [f64]) -> Self {
        Self { degrees }
    }

    pub fn l1(&self, f: &[f64]) -> f64 {
        f.iter().zip(self.degrees).map(|(x, d)| x.abs() * d).sum()
    }

    pub fn l2(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(self.degrees)
            .map(|(x, d)| x * x * d)
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-band weights `nu_{j,l} = 4^{1-l} nu` for `j >= 1`, and `nu_{0,L} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub nu: f64,
}

impl ThresholdSchedule {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nu must be nonnegative, got {nu}"
            )));
        }
        Ok(Self { nu })
    }

    pub fn weight(&self, band: BandIndex) -> f64 {
        if band.j == 0 {
            0.0
        } else {
            self.nu * 4f64.powi(1 - band.l as i32)
        }
    }

    /// Shrinkage thresholds `nu_{j,l} d_k / mu` for one band.
    pub fn thresholds(&self, band: BandIndex, degrees: &[f64], mu: f64) -> Vec<f64> {
        let w = self.weight(band);
        degrees.iter().map(|d| w * d / mu).collect()
    }
}

/// `S_tau(y) = sign(y) max(|y| - tau, 0)` componentwise.
pub fn soft_threshold(y: &[f64], tau: &[f64]) -> Vec<f64> {
    y.iter().zip(tau).map(|(&v, &t)| shrink(v, t)).collect()
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    if t == 0.0 {
        v
    } else {
        v.signum() * (v.abs() - t).max(0.0)
    }
}

/// Primal iterate with auxiliary and Bregman variables.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub d: FrameCoefficients,
    pub b: FrameCoefficients,
    pub iteration: usize,
}

impl SolverState {
    fn check_finite(&self) -> Result<()> {
        if self.u.iter().all(|v| v.is_finite()) && self.d.is_finite() && self.b.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                iteration: self.iteration,
            })
        }
    }

    /// `d <- S(W u + b)`, `b <- W u + b - d`.
    fn shrink_step(
        &mut self,
        plan: &TransformPlan,
        sched: &ThresholdSchedule,
        degrees: &[f64],
        mu: f64,
    ) -> Result<()> {
        let wu = plan.decompose(&self.u)?;
        let shifted = wu.axpy(1.0, &self.b);
        let mut d = shifted.clone();
        for idx in d.indices() {
            let band = d.band_mut(idx).unwrap();
            let w = sched.weight(idx);
            for (v, deg) in band.iter_mut().zip(degrees) {
                *v = shrink(*v, w * deg / mu);
            }
        }
        self.b = shifted.axpy(-1.0, &d);
        self.d = d;
        Ok(())
    }
}

fn relative_change(prev: &[f64], next: &[f64]) -> f64 {
    let diff: f64 = prev
        .iter()
        .zip(next)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let base = norm(prev);
    if base == 0.0 {
        f64::INFINITY
    } else {
        diff / base
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DenoiseOptions {
    pub mu: f64,
    pub iterations: usize,
    /// Stop once `|u^{k+1} - u^k| / |u^k|` drops below this value.
    pub early_stop: Option<f64>,
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        Self {
            mu: 0.1,
            iterations: 200,
            early_stop: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub state: SolverState,
}

fn check_inputs(graph: &Graph, plan: &TransformPlan, f: &[f64], mu: f64) -> Result<()> {
    if graph.vertex_count() != plan.dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.dim(),
            got: graph.vertex_count(),
        });
    }
    if f.len() != plan.dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.dim(),
            got: f.len(),
        });
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu must be positive, got {mu}"
        )));
    }
    Ok(())
}

/// Minimizes `|nu . W u|_{1,G} + 1/2 |u - f|_{2,G}^2` from the zero initialization.
pub fn denoise(
    graph: &Graph,
    plan: &TransformPlan,
    f: &[f64],
    sched: &ThresholdSchedule,
    opts: &DenoiseOptions,
) -> Result<DenoiseOutput> {
    check_inputs(graph, plan, f, opts.mu)?;
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "signal contains non-finite values".into(),
        ));
    }
    let mu = opts.mu;
    let degrees = graph.degrees();
    let zero = FrameCoefficients::zeros(plan.meta());
    let mut state = SolverState {
        u: vec![0.0; plan.dim()],
        d: zero.clone(),
        b: zero,
        iteration: 0,
    };
    let mut iterations = 0;
    while iterations < opts.iterations {
        let back = plan.reconstruct(&state.d.axpy(-1.0, &state.b))?;
        let next: Vec<f64> = f
            .iter()
            .zip(&back)
            .zip(degrees)
            .map(|((fk, wk), dk)| (dk * fk + mu * wk) / (dk + mu))
            .collect();
        let change = relative_change(&state.u, &next);
        state.u = next;
        state.shrink_step(plan, sched, degrees, mu)?;
        iterations += 1;
        state.iteration = iterations;
        state.check_finite()?;
        if opts.early_stop.is_some_and(|tol| change < tol) {
            break;
        }
    }
    Ok(DenoiseOutput {
        u: state.u.clone(),
        iterations,
        state,
    })
}

/// `|nu . W u|_{1,G} + 1/2 |u - f|_{2,G}^2`
pub fn denoise_objective(
    graph: &Graph,
    plan: &TransformPlan,
    u: &[f64],
    f: &[f64],
    sched: &ThresholdSchedule,
) -> Result<f64> {
    let norms = GraphNorms::new(graph.degrees());
    let wu = plan.decompose(u)?;
    let penalty: f64 = wu
        .indices()
        .into_iter()
        .map(|idx| sched.weight(idx) * norms.l1(wu.band(idx).unwrap()))
        .sum();
    let resid: Vec<f64> = u.iter().zip(f).map(|(a, b)| a - b).collect();
    Ok(penalty + 0.5 * norms.l2(&resid).powi(2))
}

/// Known labels: vertex indices with class 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    entries: Vec<(usize, u8)>,
}

impl LabelSet {
    pub fn new(mut entries: Vec<(usize, u8)>, vertex_count: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("label set is empty".into()));
        }
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "vertex {} labeled twice",
                    w[0].0
                )));
            }
        }
        for &(i, c) in &entries {
            if i >= vertex_count {
                return Err(Error::DimensionMismatch {
                    expected: vertex_count,
                    got: i + 1,
                });
            }
            if c > 1 {
                return Err(Error::InvalidParameter(format!(
                    "label {c} at vertex {i} is not 0 or 1"
                )));
            }
        }
        let ones = entries.iter().filter(|e| e.1 == 1).count();
        if ones == 0 || ones == entries.len() {
            return Err(Error::SingleClassLabels);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, u8)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, vertex: usize) -> bool {
        self.entries.binary_search_by_key(&vertex, |e| e.0).is_ok()
    }

    /// Membership mask over `vertex_count` vertices.
    pub fn mask(&self, vertex_count: usize) -> Vec<bool> {
        let mut m = vec![false; vertex_count];
        for &(i, _) in &self.entries {
            m[i] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterOptions {
    pub mu: f64,
    pub iterations: usize,
    pub beta: f64,
    /// Use `D_Gamma f` instead of `f` in the labeled-vertex update.
    pub fidelity_degree_weighted: bool,
    pub early_stop: Option<f64>,
    pub fiedler: FiedlerOptions,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            mu: 0.01,
            iterations: 200,
            beta: 0.5,
            fidelity_degree_weighted: false,
            early_stop: None,
            fiedler: FiedlerOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterOutput {
    /// Relaxed indicator in `[0, 1]`.
    pub u: Vec<f64>,
    /// `u >= beta`
    pub assignment: Vec<u8>,
    pub iterations: usize,
    pub state: SolverState,
}

/// Initial indicator from the sign pattern of the Fiedler vector: `0` where it is positive.
pub fn initial_indicator(fiedler: &[f64]) -> Vec<f64> {
    fiedler
        .iter()
        .map(|&v| if v > 0.0 { 0.0 } else { 1.0 })
        .collect()
}

/// Semi-supervised binary clustering, initialized from the Fiedler vector of the plan's Laplacian.
pub fn cluster(
    graph: &Graph,
    plan: &TransformPlan,
    labels: &LabelSet,
    sched: &ThresholdSchedule,
    opts: &ClusterOptions,
) -> Result<ClusterOutput> {
    let fiedler = fiedler_vector_with(plan.operator(), &opts.fiedler)?;
    cluster_from_fiedler(graph, plan, labels, sched, opts, &fiedler)
}

/// As [`cluster`] with a precomputed, sign-normalized Fiedler vector.
pub fn cluster_from_fiedler(
    graph: &Graph,
    plan: &TransformPlan,
    labels: &LabelSet,
    sched: &ThresholdSchedule,
    opts: &ClusterOptions,
    fiedler: &[f64],
) -> Result<ClusterOutput> {
    check_inputs(graph, plan, fiedler, opts.mu)?;
    if !(opts.beta > 0.0 && opts.beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {}",
            opts.beta
        )));
    }
    let n = plan.dim();
    if let Some(&(i, _)) = labels.entries().iter().find(|e| e.0 >= n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: i + 1,
        });
    }
    let mu = opts.mu;
    let degrees = graph.degrees();
    let u0 = initial_indicator(fiedler);
    let wu0 = plan.decompose(&u0)?;
    let mut state = SolverState {
        u: u0,
        d: wu0.clone(),
        b: wu0,
        iteration: 0,
    };
    let mut iterations = 0;
    while iterations < opts.iterations {
        let mut next = plan.reconstruct(&state.d.axpy(-1.0, &state.b))?;
        for &(i, c) in labels.entries() {
            let target = c as f64;
            let fidelity = if opts.fidelity_degree_weighted {
                degrees[i] * target
            } else {
                target
            };
            next[i] = (fidelity + mu * next[i]) / (degrees[i] + mu);
        }
        next.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let change = relative_change(&state.u, &next);
        state.u = next;
        state.shrink_step(plan, sched, degrees, mu)?;
        iterations += 1;
        state.iteration = iterations;
        state.check_finite()?;
        if opts.early_stop.is_some_and(|tol| change < tol) {
            break;
        }
    }
    let assignment = state.u.iter().map(|&v| u8::from(v >= opts.beta)).collect();
    Ok(ClusterOutput {
        u: state.u.clone(),
        assignment,
        iterations,
        state,
    })
}

/// `|u - reference|_2 / |reference|_2`
pub fn relative_error(u: &[f64], reference: &[f64]) -> Result<f64> {
    if u.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: u.len(),
        });
    }
    let base = norm(reference);
    if base == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / base)
}

/// Percentage of misclassified vertices among those not in `labels`.
pub fn classification_error(pred: &[u8], truth: &[u8], labels: &LabelSet) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let known = labels.mask(truth.len());
    let (mut wrong, mut total) = (0usize, 0usize);
    for ((p, t), k) in pred.iter().zip(truth).zip(&known) {
        if !k {
            total += 1;
            wrong += usize::from(p != t);
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        100.0 * wrong as f64 / total as f64
    })
}
