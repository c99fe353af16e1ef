//! Multi-level tight wavelet frame decomposition and reconstruction on graphs.
//!
//! Level `l` applies the masks to the Laplacian scaled by
//! `2^{-M + l - 1}`, where `M = N + L - 1` and `N` is the dilation scale of
//! the spectral bound. With this offset every level's scaled spectrum lies in
//! `[0, pi]`, the domain of the masks and of their Chebyshev approximants.
//! For `L = 1` the scale is `2^{-N}`.
//!
//! Two evaluation modes share one plan type: `Fast` applies Chebyshev
//! polynomials of the Laplacian with matrix-vector products only, `Exact`
//! applies the masks as spectral multipliers through a dense
//! eigendecomposition.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chebyshev::{
    cheb_apply, cheb_apply_bank, cheb_coeffs_with, ChebApprox, Quadrature, DEFAULT_ORDER,
    DOMAIN_SLACK,
};
use crate::error::{Error, Result};
use crate::graph::{laplacian, Graph, LaplacianKind, SparseOperator};
use crate::masks::MaskFamily;
use crate::spectral::{
    dense_eigendecomposition_capped, dot, estimate_lambda_max_with, EigenDecomposition,
    PowerOptions, SpectralBound, DENSE_CAP,
};

/// Band `j` at level `l`. Valid indices are `1 <= j <= r, 1 <= l <= L` and `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandIndex {
    pub j: usize,
    pub l: usize,
}

/// All band indices in storage order: `(1,1), ..., (r,1), (1,2), ..., (r,L), (0,L)`.
pub fn band_order(r: usize, levels: usize) -> Vec<BandIndex> {
    let mut out: Vec<BandIndex> = (1..=levels)
        .flat_map(|l| (1..=r).map(move |j| BandIndex { j, l }))
        .collect();
    out.push(BandIndex { j: 0, l: levels });
    out
}

/// Redundancy factor `r L + 1` of an `L`-level decomposition.
pub fn redundancy_factor(family: &MaskFamily, levels: usize) -> usize {
    family.r() * levels + 1
}

/// Smallest order `n >= DEFAULT_ORDER` whose approximants of every mask of
/// `family` reach sup-error `tol` on a 2000-point grid, capped at `max_order`.
pub fn suggested_order(family: &MaskFamily, tol: f64, max_order: usize) -> usize {
    (DEFAULT_ORDER..max_order)
        .find(|&n| {
            (0..family.mask_count()).all(|j| {
                let g = |x: f64| family.eval(j, x);
                cheb_coeffs_with(g, n, Quadrature::default())
                    .map(|a| a.sup_error(g, 2000) <= tol)
                    .unwrap_or(false)
            })
        })
        .unwrap_or(max_order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub family: MaskFamily,
    pub levels: usize,
    /// Dilation scale `N` of the spectral bound.
    pub dilation: i32,
    pub order: usize,
    pub kind: LaplacianKind,
    pub dim: usize,
}

/// Frame coefficients `alpha_{j,l}` stored in [`band_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoefficients {
    meta: FrameMeta,
    bands: Vec<Vec<f64>>,
}

impl FrameCoefficients {
    pub fn new(meta: FrameMeta, bands: Vec<Vec<f64>>) -> Result<Self> {
        let expected = redundancy_factor(&meta.family, meta.levels);
        if bands.len() != expected {
            return Err(Error::MetaMismatch(format!(
                "expected {expected} bands, got {}",
                bands.len()
            )));
        }
        if let Some(bad) = bands.iter().find(|b| b.len() != meta.dim) {
            return Err(Error::DimensionMismatch {
                expected: meta.dim,
                got: bad.len(),
            });
        }
        Ok(Self { meta, bands })
    }

    pub fn zeros(meta: FrameMeta) -> Self {
        let count = redundancy_factor(&meta.family, meta.levels);
        Self {
            meta,
            bands: vec![vec![0.0; meta.dim]; count],
        }
    }

    pub fn meta(&self) -> &FrameMeta {
        &self.meta
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.bands
    }

    pub fn indices(&self) -> Vec<BandIndex> {
        band_order(self.meta.family.r(), self.meta.levels)
    }

    fn position(&self, idx: BandIndex) -> Option<usize> {
        let (r, levels) = (self.meta.family.r(), self.meta.levels);
        if idx.j == 0 {
            (idx.l == levels).then_some(r * levels)
        } else if idx.j <= r && (1..=levels).contains(&idx.l) {
            Some((idx.l - 1) * r + idx.j - 1)
        } else {
            None
        }
    }

    pub fn band(&self, idx: BandIndex) -> Option<&[f64]> {
        self.position(idx).map(|p| self.bands[p].as_slice())
    }

    pub fn band_mut(&mut self, idx: BandIndex) -> Option<&mut Vec<f64>> {
        self.position(idx).map(|p| &mut self.bands[p])
    }

    /// Euclidean inner product summed over all bands.
    pub fn inner(&self, other: &FrameCoefficients) -> f64 {
        self.bands
            .iter()
            .zip(&other.bands)
            .map(|(a, b)| dot(a, b))
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.inner(self)
    }

    /// Concatenation of all bands in storage order.
    pub fn flatten(&self) -> Vec<f64> {
        self.bands.concat()
    }

    /// `self + alpha * other`, band by band.
    pub fn axpy(&self, alpha: f64, other: &FrameCoefficients) -> FrameCoefficients {
        let bands = self
            .bands
            .iter()
            .zip(&other.bands)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + alpha * y).collect())
            .collect();
        FrameCoefficients {
            meta: self.meta,
            bands,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.bands.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    #[default]
    Fast,
    Exact,
}

impl std::str::FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(TransformMode::Fast),
            "exact" => Ok(TransformMode::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown transform mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub levels: usize,
    pub order: usize,
    pub mode: TransformMode,
    pub quadrature: Quadrature,
    pub power: PowerOptions,
    pub dense_cap: usize,
    /// Overrides the level offset `M`; scales become `2^{-M + l - 1}`.
    pub dilation_override: Option<i32>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            levels: 1,
            order: DEFAULT_ORDER,
            mode: TransformMode::Fast,
            quadrature: Quadrature::default(),
            power: PowerOptions::default(),
            dense_cap: DENSE_CAP,
            dilation_override: None,
        }
    }
}

/// Everything needed to run the transform on one graph.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    op: SparseOperator,
    family: MaskFamily,
    levels: usize,
    order: usize,
    mode: TransformMode,
    spectral: SpectralBound,
    offset: i32,
    approxes: Vec<ChebApprox>,
    eigen: Option<EigenDecomposition>,
}

impl TransformPlan {
    /// Forms the Laplacian of `graph`, estimates its spectral bound and
    /// builds the mask approximants.
    pub fn new(
        graph: &Graph,
        family: MaskFamily,
        kind: LaplacianKind,
        opts: &PlanOptions,
    ) -> Result<Self> {
        let op = laplacian(graph, kind)?;
        let spectral = if op.is_symmetric() {
            estimate_lambda_max_with(&op, &opts.power)?
        } else {
            // I - D^-1 A is similar to I - D^-1/2 A D^-1/2
            estimate_lambda_max_with(&laplacian(graph, LaplacianKind::Symmetric)?, &opts.power)?
        };
        Self::from_operator(op, family, spectral, opts)
    }

    pub fn from_operator(
        op: SparseOperator,
        family: MaskFamily,
        spectral: SpectralBound,
        opts: &PlanOptions,
    ) -> Result<Self> {
        if opts.levels == 0 {
            return Err(Error::InvalidParameter("levels must be at least 1".into()));
        }
        if opts.order == 0 {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        let offset = opts
            .dilation_override
            .unwrap_or(spectral.dilation + opts.levels as i32 - 1);
        let top_scale = 2f64.powi(-offset + opts.levels as i32 - 1);
        let scaled = top_scale * spectral.lambda_max;
        if scaled > PI + DOMAIN_SLACK {
            return Err(Error::ScaleOverflow {
                levels: opts.levels,
                scaled,
            });
        }
        let approxes = (0..=family.r())
            .map(|j| cheb_coeffs_with(|x| family.eval(j, x), opts.order, opts.quadrature))
            .collect::<Result<Vec<_>>>()?;
        let eigen = match opts.mode {
            TransformMode::Fast => None,
            TransformMode::Exact => Some(dense_eigendecomposition_capped(&op, opts.dense_cap)?),
        };
        Ok(Self {
            op,
            family,
            levels: opts.levels,
            order: opts.order,
            mode: opts.mode,
            spectral,
            offset,
            approxes,
            eigen,
        })
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn family(&self) -> MaskFamily {
        self.family
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> TransformMode {
        self.mode
    }

    pub fn spectral(&self) -> SpectralBound {
        self.spectral
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn approxes(&self) -> &[ChebApprox] {
        &self.approxes
    }

    pub fn eigen(&self) -> Option<&EigenDecomposition> {
        self.eigen.as_ref()
    }

    pub fn meta(&self) -> FrameMeta {
        FrameMeta {
            family: self.family,
            levels: self.levels,
            dilation: self.spectral.dilation,
            order: self.order,
            kind: self.op.kind(),
            dim: self.dim(),
        }
    }

    pub fn redundancy(&self) -> usize {
        redundancy_factor(&self.family, self.levels)
    }

    /// Spectral scale `2^{-M + l - 1}` used at level `l`.
    pub fn level_scale(&self, level: usize) -> f64 {
        2f64.powi(-self.offset + level as i32 - 1)
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// All masks applied to `x` at `level`, in mask order `0..=r`.
    fn apply_bank(&self, level: usize, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let s = self.level_scale(level);
        match &self.eigen {
            None => cheb_apply_bank(&self.approxes, &self.op, s, x),
            Some(eig) => Ok((0..=self.family.r())
                .map(|j| eig.apply_multiplier(|lam| self.family.eval(j, s * lam), x))
                .collect()),
        }
    }

    fn apply_mask(&self, j: usize, level: usize, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.level_scale(level);
        match &self.eigen {
            None => cheb_apply(&self.approxes[j], &self.op, s, x),
            Some(eig) => Ok(eig.apply_multiplier(|lam| self.family.eval(j, s * lam), x)),
        }
    }

    /// `W f`, computed as a cascade through the running low-pass.
    pub fn decompose(&self, f: &[f64]) -> Result<FrameCoefficients> {
        self.check_len(f)?;
        let r = self.family.r();
        let mut bands = Vec::with_capacity(r * self.levels + 1);
        let mut low = f.to_vec();
        for level in 1..=self.levels {
            let mut outs = self.apply_bank(level, &low)?;
            low = std::mem::take(&mut outs[0]);
            bands.extend(outs.into_iter().skip(1));
        }
        bands.push(low);
        FrameCoefficients::new(self.meta(), bands)
    }

    /// `W^T alpha` by the backward recursion over levels.
    pub fn reconstruct(&self, coeffs: &FrameCoefficients) -> Result<Vec<f64>> {
        let meta = self.meta();
        if *coeffs.meta() != meta {
            return Err(Error::MetaMismatch(format!(
                "plan {:?} vs coefficients {:?}",
                meta,
                coeffs.meta()
            )));
        }
        let r = self.family.r();
        let mut low = coeffs
            .band(BandIndex {
                j: 0,
                l: self.levels,
            })
            .unwrap()
            .to_vec();
        for level in (1..=self.levels).rev() {
            let mut acc = self.apply_mask(0, level, &low)?;
            for j in 1..=r {
                let band = coeffs.band(BandIndex { j, l: level }).unwrap();
                let part = self.apply_mask(j, level, band)?;
                acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p);
            }
            low = acc;
        }
        Ok(low)
    }

    /// `|<W f, alpha> - <f, W^T alpha>|`
    pub fn adjoint_identity_check(&self, f: &[f64], coeffs: &FrameCoefficients) -> Result<f64> {
        let wf = self.decompose(f)?;
        let wt = self.reconstruct(coeffs)?;
        Ok((wf.inner(coeffs) - dot(f, &wt)).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2_plan(family: MaskFamily, levels: usize, mode: TransformMode) -> TransformPlan {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        TransformPlan::new(
            &g,
            family,
            LaplacianKind::Unnormalized,
            &PlanOptions {
                levels,
                mode,
                ..PlanOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn suggested_orders() {
        assert_eq!(suggested_order(&MaskFamily::Haar, 1e-5, 64), DEFAULT_ORDER);
        assert_eq!(
            suggested_order(&MaskFamily::Linear, 1e-5, 64),
            DEFAULT_ORDER
        );
        let q = suggested_order(&MaskFamily::Quadratic, 1e-5, 64);
        assert!(q > DEFAULT_ORDER && q <= 10);
        assert!(suggested_order(&MaskFamily::BSpline(5), 1e-5, 64) > q);
        assert_eq!(suggested_order(&MaskFamily::BSpline(40), 1e-12, 9), 9);
    }

    #[test]
    fn band_layout() {
        let order = band_order(2, 2);
        assert_eq!(order.len(), 5);
        assert_eq!(order[0], BandIndex { j: 1, l: 1 });
        assert_eq!(order[3], BandIndex { j: 2, l: 2 });
        assert_eq!(order[4], BandIndex { j: 0, l: 2 });
        assert_eq!(redundancy_factor(&MaskFamily::Haar, 4), 5);
        assert_eq!(redundancy_factor(&MaskFamily::Linear, 4), 9);
        assert_eq!(redundancy_factor(&MaskFamily::Quadratic, 4), 13);
    }

    #[test]
    fn k2_haar_exact_by_hand() {
        // Lambda = {0, 2}, N = 0, so the level-1 multipliers are cos(lambda/2), sin(lambda/2).
        let plan = k2_plan(MaskFamily::Haar, 1, TransformMode::Exact);
        assert_eq!(plan.spectral().dilation, 0);
        let coeffs = plan.decompose(&[1.0, 0.0]).unwrap();
        let (s, c) = 1f64.sin_cos();
        let high = coeffs.band(BandIndex { j: 1, l: 1 }).unwrap();
        let low = coeffs.band(BandIndex { j: 0, l: 1 }).unwrap();
        for (a, b) in high.iter().zip([s / 2.0, -s / 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in low.iter().zip([0.5 + c / 2.0, 0.5 - c / 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_and_zero_coefficients() {
        for mode in [TransformMode::Fast, TransformMode::Exact] {
            let plan = k2_plan(MaskFamily::Linear, 2, mode);
            let coeffs = plan.decompose(&[0.0, 0.0]).unwrap();
            assert!(coeffs.bands().iter().flatten().all(|&v| v == 0.0));
            let back = plan
                .reconstruct(&FrameCoefficients::zeros(plan.meta()))
                .unwrap();
            assert!(back.iter().all(|&v| v == 0.0));
            assert_eq!(
                plan.adjoint_identity_check(&[0.0, 0.0], &coeffs).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn constant_signal_exact_mode() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0)]).unwrap();
        let plan = TransformPlan::new(
            &g,
            MaskFamily::Quadratic,
            LaplacianKind::Unnormalized,
            &PlanOptions {
                levels: 3,
                mode: TransformMode::Exact,
                ..PlanOptions::default()
            },
        )
        .unwrap();
        let coeffs = plan.decompose(&[1.0; 4]).unwrap();
        for idx in coeffs.indices() {
            let band = coeffs.band(idx).unwrap();
            let target = if idx.j == 0 { 1.0 } else { 0.0 };
            assert!(
                band.iter().all(|v| (v - target).abs() < 1e-12),
                "{idx:?}: {band:?}"
            );
        }
    }

    #[test]
    fn meta_mismatch_rejected() {
        let plan = k2_plan(MaskFamily::Haar, 1, TransformMode::Fast);
        let other = k2_plan(MaskFamily::Haar, 2, TransformMode::Fast);
        let coeffs = other.decompose(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            plan.reconstruct(&coeffs),
            Err(Error::MetaMismatch(_))
        ));
        assert!(matches!(
            plan.decompose(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scale_overflow_with_literal_offset() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let opts = PlanOptions {
            levels: 2,
            dilation_override: Some(0),
            ..PlanOptions::default()
        };
        assert!(matches!(
            TransformPlan::new(&g, MaskFamily::Haar, LaplacianKind::Unnormalized, &opts),
            Err(Error::ScaleOverflow { .. })
        ));
    }

    #[test]
    fn level_scales_fit_mask_domain() {
        let plan = k2_plan(MaskFamily::Linear, 4, TransformMode::Fast);
        let lam = plan.spectral().lambda_max;
        assert!(plan.level_scale(4) * lam <= PI);
        for l in 1..4 {
            assert_eq!(plan.level_scale(l + 1), 2.0 * plan.level_scale(l));
        }
    }

    #[test]
    fn random_walk_fast_mode_runs() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 3.0)]).unwrap();
        let opts = PlanOptions {
            levels: 2,
            ..PlanOptions::default()
        };
        let plan =
            TransformPlan::new(&g, MaskFamily::Haar, LaplacianKind::RandomWalk, &opts).unwrap();
        let f = [0.2, 1.0, -0.4];
        let back = plan.reconstruct(&plan.decompose(&f).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).abs() < 1e-5);
        }
        let exact = PlanOptions {
            mode: TransformMode::Exact,
            ..opts
        };
        assert!(matches!(
            TransformPlan::new(&g, MaskFamily::Haar, LaplacianKind::RandomWalk, &exact),
            Err(Error::NotSymmetric)
        ));
    }
}
