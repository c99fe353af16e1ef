use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use wftg::io;
use wftg::{
    add_gaussian_noise, build_knn_graph, classification_error, cluster_from_fiedler, denoise,
    derive_seed, estimate_lambda_max, fiedler_vector_with, gen_sphere, gen_two_moons, laplacian,
    random_labels, redundancy_factor, relative_error, suggested_order, verify_uep, ChebApprox,
    ClusterOptions, DenoiseOptions, FiedlerOptions, Graph, LabelSet, MaskFamily, PlanOptions,
    PointCloud, Quadrature, SphereSignal, SphereSpec, ThresholdSchedule, TransformMode,
    TransformPlan, TwoMoonsSpec,
};

use crate::config::{RunConfig, FORMAT_VERSION};
use crate::CliError;

pub const UEP_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const PARSEVAL_TOL: f64 = 1e-10;
pub const FAST_EXACT_TOL: f64 = 1e-4;
pub const UEP_GRID: usize = 10_000;
/// Mask sup-error target used to pick the Chebyshev order in `verify`.
pub const SUGGESTED_ORDER_TOL: f64 = 1e-5;

/// Metrics body plus whether the command's own checks passed.
#[derive(Debug, Clone)]
pub struct Report {
    pub results: Value,
    pub passed: bool,
}

impl Report {
    fn ok(results: Value) -> Self {
        Self {
            results,
            passed: true,
        }
    }

    /// `{format_version, config, results}`
    pub fn envelope(&self, cfg: &RunConfig) -> Value {
        json!({
            "format_version": FORMAT_VERSION,
            "config": cfg,
            "results": self.results,
        })
    }
}

/// True when the first non-empty line does not start with a number.
fn has_header(path: &Path) -> Result<bool, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::Input(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        return Ok(first.parse::<f64>().is_err());
    }
    Ok(false)
}

fn required<'a>(path: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Input(format!("missing --{flag}")))
}

pub fn read_points(path: &Path) -> Result<PointCloud, CliError> {
    Ok(io::read_points_csv(path, has_header(path)?)?)
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>, CliError> {
    Ok(io::read_signal_csv(path, has_header(path)?)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<(usize, u8)>, CliError> {
    Ok(io::read_labels_csv(path, has_header(path)?)?)
}

/// Graph from `--graph` (edge list) or else from `--points` via k-NN.
pub fn load_graph(cfg: &RunConfig) -> Result<Graph, CliError> {
    if let Some(path) = &cfg.graph {
        return Ok(io::read_edge_list_csv(path, None, has_header(path)?)?);
    }
    if let Some(path) = &cfg.points {
        return Ok(build_knn_graph(&read_points(path)?, cfg.k, cfg.sigma)?);
    }
    Err(CliError::Input("need --graph or --points".into()))
}

pub fn plan_options(cfg: &RunConfig) -> Result<PlanOptions, CliError> {
    Ok(PlanOptions {
        levels: cfg.levels,
        order: cfg.order(),
        mode: cfg.mode()?,
        ..PlanOptions::default()
    })
}

pub fn build_plan(cfg: &RunConfig, graph: &Graph) -> Result<TransformPlan, CliError> {
    Ok(TransformPlan::new(
        graph,
        cfg.family()?,
        cfg.laplacian()?,
        &plan_options(cfg)?,
    )?)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes the metrics envelope to `--metrics` when given and returns it.
pub fn finish(cfg: &RunConfig, report: &Report) -> Result<Value, CliError> {
    let env = report.envelope(cfg);
    if let Some(path) = &cfg.metrics {
        write_json(path, &env)?;
    }
    Ok(env)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    TwoMoons,
    Sphere,
}

pub fn cmd_gen(
    cfg: &RunConfig,
    dataset: Dataset,
    signal: SphereSignal,
) -> Result<Report, CliError> {
    let out = required(&cfg.output, "output")?;
    match dataset {
        Dataset::TwoMoons => {
            let spec = TwoMoonsSpec {
                seed: cfg.seed,
                ..TwoMoonsSpec::default()
            };
            let (pc, truth) = gen_two_moons(&spec)?;
            io::write_points_csv(out, &pc)?;
            let truth_rows: Vec<(usize, u8)> = truth.iter().copied().enumerate().collect();
            if let Some(path) = &cfg.truth {
                io::write_labels_csv(path, &truth_rows)?;
            }
            let mut labeled = None;
            if let Some(path) = &cfg.labels {
                let set = random_labels(&truth, cfg.label_fraction, derive_seed(cfg.seed, 1))?;
                io::write_labels_csv(path, set.entries())?;
                labeled = Some(set.len());
            }
            Ok(Report::ok(json!({
                "dataset": "two-moons",
                "points": pc.len(),
                "dimension": pc.dim(),
                "labeled": labeled,
            })))
        }
        Dataset::Sphere => {
            let spec = SphereSpec {
                vertex_count: cfg.vertices,
                seed: cfg.seed,
                signal,
            };
            let (pc, clean) = gen_sphere(&spec)?;
            io::write_points_csv(out, &pc)?;
            if let Some(path) = &cfg.truth {
                io::write_signal_csv(path, &clean)?;
            }
            if let Some(path) = &cfg.signal {
                let noisy = add_gaussian_noise(&clean, cfg.noise_std, derive_seed(cfg.seed, 1))?;
                io::write_signal_csv(path, &noisy)?;
            }
            Ok(Report::ok(json!({
                "dataset": "sphere",
                "points": pc.len(),
                "signal": signal,
                "noise_std": cfg.noise_std,
            })))
        }
    }
}

pub fn cmd_graph(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = load_graph(cfg)?;
    if let Some(out) = &cfg.output {
        io::write_edge_list_csv(out, &g)?;
    }
    let counts: Vec<usize> = (0..g.vertex_count()).map(|v| g.neighbor_count(v)).collect();
    Ok(Report::ok(json!({
        "vertices": g.vertex_count(),
        "edges": g.edges().len(),
        "components": g.component_count(),
        "mean_degree": g.degrees().iter().sum::<f64>() / g.vertex_count() as f64,
        "min_neighbors": counts.iter().min(),
        "max_neighbors": counts.iter().max(),
    })))
}

pub fn cmd_spectral(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = load_graph(cfg)?;
    let op = laplacian(&g, cfg.laplacian()?)?;
    let bound = estimate_lambda_max(&op, 1e-10, 50_000)?;
    let mut fiedler_written = false;
    if let Some(out) = &cfg.output {
        let v = fiedler_vector_with(&op, &FiedlerOptions::default())?;
        io::write_signal_csv(out, &v)?;
        fiedler_written = true;
    }
    Ok(Report::ok(json!({
        "lambda_max": bound.lambda_max,
        "N": bound.dilation,
        "fiedler_written": fiedler_written,
    })))
}

pub fn cmd_masks_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let family = cfg.family()?;
    let residual = verify_uep(&family, UEP_GRID);
    Ok(Report {
        results: json!({
            "family": family.name(),
            "grid": UEP_GRID,
            "uep_residual": residual,
            "tolerance": UEP_TOL,
        }),
        passed: residual <= UEP_TOL,
    })
}

#[derive(Debug, Serialize)]
struct ChebRow {
    order: usize,
    sup_errors: Vec<f64>,
}

pub fn cmd_cheb_error(
    cfg: &RunConfig,
    orders: &[usize],
    rule: Quadrature,
) -> Result<Report, CliError> {
    let family = cfg.family()?;
    let orders = if orders.is_empty() {
        vec![cfg.order()]
    } else {
        orders.to_vec()
    };
    let rows = orders
        .iter()
        .map(|&n| {
            let sup_errors = (0..family.mask_count())
                .map(|j| {
                    let g = |x: f64| family.eval(j, x);
                    let approx: ChebApprox = wftg::cheb_coeffs_with(g, n, rule)?;
                    Ok(approx.sup_error(g, UEP_GRID))
                })
                .collect::<Result<Vec<f64>, wftg::Error>>()?;
            Ok(ChebRow {
                order: n,
                sup_errors,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Report::ok(json!({
        "family": family.name(),
        "quadrature": rule,
        "grid": UEP_GRID,
        "rows": rows,
    })))
}

pub fn cmd_transform(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = load_graph(cfg)?;
    let f = read_signal(required(&cfg.signal, "signal")?)?;
    let out = required(&cfg.output, "output")?;
    let plan = build_plan(cfg, &g)?;
    let start = Instant::now();
    let coeffs = plan.decompose(&f)?;
    let elapsed = start.elapsed().as_secs_f64();
    io::write_coefficient_files(out, &coeffs)?;
    Ok(Report::ok(json!({
        "vertices": plan.dim(),
        "lambda_max": plan.spectral().lambda_max,
        "N": plan.spectral().dilation,
        "redundancy": plan.redundancy(),
        "bands": coeffs.bands().len(),
        "coefficient_energy": coeffs.norm_squared(),
        "signal_energy": f.iter().map(|x| x * x).sum::<f64>(),
        "decompose_seconds": elapsed,
    })))
}

/// Reconstructs from a coefficient file. The plan is rebuilt from the file's
/// own header so a mismatched graph or corrupted header is reported, not guessed around.
pub fn cmd_itransform(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = load_graph(cfg)?;
    let coeffs = io::read_coefficient_file(required(&cfg.coeffs, "coeffs")?)?;
    let out = required(&cfg.output, "output")?;
    let meta = *coeffs.meta();
    let opts = PlanOptions {
        levels: meta.levels,
        order: meta.order,
        mode: cfg.mode()?,
        ..PlanOptions::default()
    };
    let plan = TransformPlan::new(&g, meta.family, meta.kind, &opts)?;
    let f = plan.reconstruct(&coeffs)?;
    io::write_signal_csv(out, &f)?;
    Ok(Report::ok(json!({
        "vertices": f.len(),
        "family": meta.family.name(),
        "levels": meta.levels,
        "N": meta.dilation,
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

impl TrialSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            trials: values.len(),
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

fn denoise_options(cfg: &RunConfig) -> DenoiseOptions {
    DenoiseOptions {
        mu: cfg.mu.unwrap_or(DenoiseOptions::default().mu),
        iterations: cfg.iterations,
        early_stop: None,
    }
}

/// One synthetic denoising trial: returns (input error, output error, iterations).
pub fn denoise_trial(cfg: &RunConfig, seed: u64) -> Result<(f64, f64, usize), CliError> {
    let (pc, clean) = gen_sphere(&SphereSpec {
        vertex_count: cfg.vertices,
        seed,
        signal: SphereSignal::Cap,
    })?;
    let g = build_knn_graph(&pc, cfg.k, cfg.sigma)?;
    let noisy = add_gaussian_noise(&clean, cfg.noise_std, derive_seed(seed, 1))?;
    let plan = build_plan(cfg, &g)?;
    let out = denoise(
        &g,
        &plan,
        &noisy,
        &ThresholdSchedule::new(cfg.nu)?,
        &denoise_options(cfg),
    )?;
    Ok((
        relative_error(&noisy, &clean)?,
        relative_error(&out.u, &clean)?,
        out.iterations,
    ))
}

pub fn cmd_denoise(cfg: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let Some(signal_path) = &cfg.signal else {
        // synthetic sphere experiment, one trial per derived seed
        let runs = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| denoise_trial(cfg, derive_seed(cfg.seed, t)))
            .collect::<Result<Vec<_>, _>>()?;
        let input: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let output: Vec<f64> = runs.iter().map(|r| r.1).collect();
        return Ok(Report::ok(json!({
            "synthetic": "sphere-cap",
            "input_error": TrialSummary::of(&input),
            "output_error": TrialSummary::of(&output),
            "wall_seconds": start.elapsed().as_secs_f64(),
        })));
    };
    if cfg.trials != 1 {
        return Err(CliError::Input(
            "--trials needs synthetic data (omit --signal)".into(),
        ));
    }
    let g = load_graph(cfg)?;
    let f = read_signal(signal_path)?;
    let plan = build_plan(cfg, &g)?;
    let out = denoise(
        &g,
        &plan,
        &f,
        &ThresholdSchedule::new(cfg.nu)?,
        &denoise_options(cfg),
    )?;
    if let Some(path) = &cfg.output {
        io::write_signal_csv(path, &out.u)?;
    }
    let mut results = json!({
        "vertices": f.len(),
        "iterations": out.iterations,
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    if let Some(truth) = &cfg.truth {
        let clean = read_signal(truth)?;
        results["input_error"] = json!(relative_error(&f, &clean)?);
        results["output_error"] = json!(relative_error(&out.u, &clean)?);
    }
    Ok(Report::ok(results))
}

fn cluster_options(cfg: &RunConfig) -> ClusterOptions {
    ClusterOptions {
        mu: cfg.mu.unwrap_or(ClusterOptions::default().mu),
        iterations: cfg.iterations,
        beta: cfg.beta,
        fidelity_degree_weighted: cfg.fidelity_degree_weighted,
        ..ClusterOptions::default()
    }
}

fn run_cluster(cfg: &RunConfig, g: &Graph, labels: &LabelSet) -> Result<Vec<u8>, CliError> {
    let plan = build_plan(cfg, g)?;
    let opts = cluster_options(cfg);
    let fiedler = fiedler_vector_with(plan.operator(), &opts.fiedler)?;
    let out = cluster_from_fiedler(
        g,
        &plan,
        labels,
        &ThresholdSchedule::new(cfg.nu)?,
        &opts,
        &fiedler,
    )?;
    Ok(out.assignment)
}

/// One synthetic two-moons trial; returns the misclassification percentage.
pub fn cluster_trial(cfg: &RunConfig, seed: u64) -> Result<f64, CliError> {
    let (pc, truth) = gen_two_moons(&TwoMoonsSpec {
        seed,
        ..TwoMoonsSpec::default()
    })?;
    let g = build_knn_graph(&pc, cfg.k, cfg.sigma)?;
    let labels = random_labels(&truth, cfg.label_fraction, derive_seed(seed, 1))?;
    let assignment = run_cluster(cfg, &g, &labels)?;
    Ok(classification_error(&assignment, &truth, &labels)?)
}

pub fn cmd_cluster(cfg: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let Some(labels_path) = &cfg.labels else {
        let errors = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| cluster_trial(cfg, derive_seed(cfg.seed, t)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Report::ok(json!({
            "synthetic": "two-moons",
            "misclassification_percent": TrialSummary::of(&errors),
            "wall_seconds": start.elapsed().as_secs_f64(),
        })));
    };
    if cfg.trials != 1 {
        return Err(CliError::Input(
            "--trials needs synthetic data (omit --labels)".into(),
        ));
    }
    let g = load_graph(cfg)?;
    let labels = LabelSet::new(read_labels(labels_path)?, g.vertex_count())?;
    let assignment = run_cluster(cfg, &g, &labels)?;
    if let Some(path) = &cfg.output {
        let rows: Vec<(usize, u8)> = assignment.iter().copied().enumerate().collect();
        io::write_labels_csv(path, &rows)?;
    }
    let mut results = json!({
        "vertices": g.vertex_count(),
        "labeled": labels.len(),
        "class_one": assignment.iter().filter(|&&a| a == 1).count(),
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    if let Some(truth_path) = &cfg.truth {
        let rows = read_labels(truth_path)?;
        if rows.len() != g.vertex_count() || rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(CliError::Input(
                "truth labels must list every vertex in order".into(),
            ));
        }
        let truth: Vec<u8> = rows.into_iter().map(|r| r.1).collect();
        results["misclassification_percent"] =
            json!(classification_error(&assignment, &truth, &labels)?);
    }
    Ok(Report::ok(results))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

/// Seeded random connected geometric graph on `vertices` points in the unit cube.
pub fn random_test_graph(vertices: usize, seed: u64) -> Result<Graph, CliError> {
    use rand::{Rng, SeedableRng};
    for attempt in 0..32 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt));
        let pts: Vec<Vec<f64>> = (0..vertices)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        match build_knn_graph(&PointCloud::new(pts)?, 8, 0.1) {
            Ok(g) => return Ok(g),
            Err(wftg::Error::DisconnectedGraph { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::Input(
        "could not draw a connected test graph".into(),
    ))
}

/// Exact-mode reconstruction and Parseval residuals, and the relative fast-vs-exact gap.
pub fn transform_checks(
    g: &Graph,
    family: MaskFamily,
    levels: usize,
    order: usize,
    f: &[f64],
) -> Result<(f64, f64, f64), CliError> {
    let kind = wftg::LaplacianKind::Unnormalized;
    let exact = TransformPlan::new(
        g,
        family,
        kind,
        &PlanOptions {
            levels,
            order,
            mode: TransformMode::Exact,
            ..PlanOptions::default()
        },
    )?;
    let fast = TransformPlan::new(
        g,
        family,
        kind,
        &PlanOptions {
            levels,
            order,
            ..PlanOptions::default()
        },
    )?;
    let ce = exact.decompose(f)?;
    let back = exact.reconstruct(&ce)?;
    let recon = back
        .iter()
        .zip(f)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let energy: f64 = f.iter().map(|x| x * x).sum();
    let parseval = (ce.norm_squared() - energy).abs();
    let cf = fast.decompose(f)?;
    let gap = cf.axpy(-1.0, &ce).norm_squared().sqrt() / ce.norm_squared().sqrt();
    Ok((recon, parseval, gap))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    use rand::{Rng, SeedableRng};
    let family = cfg.family()?;
    let g = random_test_graph(cfg.vertices.min(200), cfg.seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 7));
    let f: Vec<f64> = (0..g.vertex_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let order = cfg
        .order
        .unwrap_or_else(|| suggested_order(&family, SUGGESTED_ORDER_TOL, 64));
    let (recon, parseval, gap) = transform_checks(&g, family, cfg.levels, order, &f)?;
    let checks = vec![
        Check::new("uep_residual", verify_uep(&family, UEP_GRID), UEP_TOL),
        Check::new("perfect_reconstruction", recon, RECONSTRUCTION_TOL),
        Check::new("parseval", parseval, PARSEVAL_TOL),
        Check::new("fast_vs_exact", gap, FAST_EXACT_TOL),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        results: json!({
            "family": family.name(),
            "vertices": g.vertex_count(),
            "order": order,
            "checks": checks,
            "passed": passed,
        }),
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub family: String,
    pub levels: usize,
    pub vertices: usize,
    pub redundancy: usize,
    pub wall_seconds: f64,
    /// `|W^T W f - f|_inf / |f|_inf`
    pub reconstruction_error: f64,
}

/// Times one decompose + reconstruct on a generated sphere graph.
pub fn bench_report(
    family: MaskFamily,
    levels: usize,
    order: usize,
    vertices: usize,
    seed: u64,
) -> Result<BenchReport, CliError> {
    let (pc, f) = gen_sphere(&SphereSpec {
        vertex_count: vertices,
        seed,
        signal: SphereSignal::Cap,
    })?;
    let g = build_knn_graph(&pc, 10, 10.0)?;
    let plan = TransformPlan::new(
        &g,
        family,
        wftg::LaplacianKind::Unnormalized,
        &PlanOptions {
            levels,
            order,
            ..PlanOptions::default()
        },
    )?;
    let start = Instant::now();
    let coeffs = plan.decompose(&f)?;
    let back = plan.reconstruct(&coeffs)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let peak = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let err = back
        .iter()
        .zip(&f)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / peak;
    debug_assert_eq!(
        coeffs.flatten().len(),
        redundancy_factor(&family, levels) * f.len()
    );
    Ok(BenchReport {
        family: family.name(),
        levels,
        vertices,
        redundancy: coeffs.flatten().len() / f.len(),
        wall_seconds,
        reconstruction_error: err,
    })
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<Report, CliError> {
    let report = bench_report(
        cfg.family()?,
        cfg.levels,
        cfg.order(),
        cfg.vertices,
        cfg.seed,
    )?;
    Ok(Report::ok(
        serde_json::to_value(report).map_err(|e| CliError::Input(e.to_string()))?,
    ))
}
