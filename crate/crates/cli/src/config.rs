use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wftg::{LaplacianKind, MaskFamily, TransformMode};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Fully resolved settings for one command. Loaded from an optional JSON
/// file, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    pub points: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub signal: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub coeffs: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub family: String,
    pub levels: usize,
    /// Chebyshev order; unset means the library default (or, for `verify`, the suggested order)
    pub order: Option<usize>,
    pub mu: Option<f64>,
    pub nu: f64,
    pub beta: f64,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    pub trials: usize,
    pub mode: String,
    pub laplacian: String,
    pub iterations: usize,
    pub fidelity_degree_weighted: bool,
    pub label_fraction: f64,
    pub noise_std: f64,
    pub vertices: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: String::new(),
            points: None,
            graph: None,
            signal: None,
            labels: None,
            truth: None,
            coeffs: None,
            output: None,
            metrics: None,
            family: "haar".into(),
            levels: 1,
            order: None,
            mu: None,
            nu: 0.1,
            beta: 0.5,
            k: 10,
            sigma: 10.0,
            seed: 0,
            trials: 1,
            mode: "fast".into(),
            laplacian: "unnormalized".into(),
            iterations: 200,
            fidelity_degree_weighted: false,
            label_fraction: 0.1,
            noise_std: 0.05,
            vertices: 2000,
        }
    }
}

/// Flag values; `None` keeps whatever the config file (or default) says.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence over its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Point cloud CSV (one point per row)
    #[arg(long, global = true)]
    pub points: Option<PathBuf>,
    /// Edge list CSV `i,j,weight`
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// Signal CSV, one value per row
    #[arg(long, global = true)]
    pub signal: Option<PathBuf>,
    /// Labels CSV `index,label`
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Reference signal or labels used for error metrics
    #[arg(long, global = true)]
    pub truth: Option<PathBuf>,
    /// Coefficient file (binary, with `.json` sidecar)
    #[arg(long, global = true)]
    pub coeffs: Option<PathBuf>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Also write the metrics JSON here
    #[arg(long, global = true)]
    pub metrics: Option<PathBuf>,
    /// haar, linear, quadratic or bspline(r)
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// B-spline order; with `--family bspline` selects bspline(r)
    #[arg(long, global = true)]
    pub r: Option<usize>,
    #[arg(long, short = 'L', global = true)]
    pub levels: Option<usize>,
    /// Chebyshev order n (degree n - 1)
    #[arg(long, short = 'n', global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, short, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// fast or exact
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// unnormalized, random-walk or symmetric
    #[arg(long, global = true)]
    pub laplacian: Option<String>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    /// Use the degree-weighted fidelity in the clustering update
    #[arg(long, global = true)]
    pub fidelity_degree_weighted: bool,
    #[arg(long, global = true)]
    pub label_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub noise_std: Option<f64>,
    /// Vertex count for generated sphere graphs
    #[arg(long, global = true)]
    pub vertices: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v.into(); })*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn resolve(subcommand: &str, ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &ov.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.subcommand = subcommand.to_string();
        apply!(cfg, ov, points, graph, signal, labels, truth, coeffs, output, metrics);
        apply!(
            cfg, ov, family, levels, nu, beta, k, sigma, seed, trials, mode, laplacian, iterations
        );
        apply!(cfg, ov, label_fraction, noise_std, vertices);
        if ov.mu.is_some() {
            cfg.mu = ov.mu;
        }
        if ov.order.is_some() {
            cfg.order = ov.order;
        }
        if let Some(r) = ov.r {
            if cfg.family == "bspline" {
                cfg.family = format!("bspline({r})");
            } else {
                return Err(CliError::Input(
                    "--r only applies to --family bspline".into(),
                ));
            }
        }
        if ov.fidelity_degree_weighted {
            cfg.fidelity_degree_weighted = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.family()?;
        self.mode()?;
        self.laplacian()?;
        let bad = |msg: &str| Err(CliError::Input(msg.into()));
        if self.levels == 0 {
            return bad("levels must be at least 1");
        }
        if self.order == Some(0) {
            return bad("order must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu must be nonnegative");
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return bad("mu must be positive");
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return bad("label fraction must lie in (0, 1]");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise std must be nonnegative");
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(wftg::chebyshev::DEFAULT_ORDER)
    }

    pub fn family(&self) -> Result<MaskFamily, CliError> {
        wftg::make_family(&self.family).map_err(CliError::from)
    }

    pub fn mode(&self) -> Result<TransformMode, CliError> {
        self.mode.parse().map_err(CliError::from)
    }

    pub fn laplacian(&self) -> Result<LaplacianKind, CliError> {
        self.laplacian.parse().map_err(CliError::from)
    }
}
