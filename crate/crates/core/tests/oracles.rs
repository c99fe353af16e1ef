//! Checks against independent reference computations written here from
//! scratch: a cyclic Jacobi eigensolver, brute-force neighbor search and an
//! exhaustive minimum cut.

use std::f64::consts::PI;

use wftg::graph::laplacian;
use wftg::{
    build_knn_graph, cheb_apply, cheb_coeffs, cheb_coeffs_with, cluster, estimate_lambda_max,
    fiedler_vector, gen_sphere, ClusterOptions, Graph, LabelSet, LaplacianKind, MaskFamily,
    PlanOptions, PointCloud, Quadrature, SphereSpec, ThresholdSchedule, TransformMode,
    TransformPlan,
};

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].powi(2))
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (vals, vecs)
}

fn dense_laplacian(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut l = vec![vec![0.0; n]; n];
    for (i, j, w) in g.edges() {
        l[i][j] -= w;
        l[j][i] -= w;
        l[i][i] += w;
        l[j][j] += w;
    }
    l
}

/// `U diag(h(lambda)) U^T f`
fn spectral_apply(vals: &[f64], vecs: &[Vec<f64>], h: impl Fn(f64) -> f64, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for (lam, u) in vals.iter().zip(vecs) {
        let c: f64 = u.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() * h(*lam);
        out.iter_mut().zip(u).for_each(|(o, x)| *o += c * x);
    }
    out
}

fn lcg_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    s = s
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (s >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect()
        })
        .collect()
}

fn random_connected_graph(n: usize, seed: u64) -> Graph {
    let w = lcg_points(3 * n, 1, seed);
    let mut edges: Vec<(usize, usize, f64)> =
        (1..n).map(|i| ((i * 7919) % i, i, 0.2 + w[i][0])).collect();
    for k in 0..2 * n {
        let i = (w[k][0] * n as f64) as usize % n;
        let j = (w[k + n][0] * n as f64) as usize % n;
        if i != j
            && !edges.iter().any(|e| {
                (e.0 == i.min(j) && e.1 == i.max(j)) || (e.0 == i.max(j) && e.1 == i.min(j))
            })
        {
            edges.push((i.min(j), i.max(j), 0.1 + w[k][0]));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

#[test]
fn jacobi_oracle_sanity() {
    // P3 and C4 spectra
    let p3 = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let (vals, _) = jacobi_eigen(dense_laplacian(&p3));
    for (a, b) in vals.iter().zip([0.0, 1.0, 3.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    let c4 = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap();
    let (vals, _) = jacobi_eigen(dense_laplacian(&c4));
    for (a, b) in vals.iter().zip([0.0, 2.0, 2.0, 4.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn knn_matches_brute_force() {
    let pts = lcg_points(60, 3, 17);
    let (k, sigma) = (5, 0.3);
    let g = build_knn_graph(&PointCloud::new(pts.clone()).unwrap(), k, sigma).unwrap();
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut expect = vec![vec![0.0; 60]; 60];
    for i in 0..60 {
        let mut others: Vec<(f64, usize)> = (0..60)
            .filter(|&j| j != i)
            .map(|j| (d2(&pts[i], &pts[j]), j))
            .collect();
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(d, j) in &others[..k] {
            expect[i][j] = (-d / sigma).exp();
            expect[j][i] = (-d / sigma).exp();
        }
    }
    for (i, row) in expect.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            assert!((g.weight(i, j) - w).abs() < 1e-15, "({i},{j})");
        }
    }
}

#[test]
fn collinear_knn_edges() {
    let sigma = 3.0;
    let pc = PointCloud::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
    let g = build_knn_graph(&pc, 1, sigma).unwrap();
    let e = (-1.0f64 / sigma).exp();
    assert_eq!(g.edges(), vec![(0, 1, e), (1, 2, e)]);
}

#[test]
fn sphere_graph_degree_bounds() {
    let (pc, _) = gen_sphere(&SphereSpec::default()).unwrap();
    let g = build_knn_graph(&pc, 10, 10.0).unwrap();
    assert!((0..g.vertex_count()).all(|v| (10..=20).contains(&g.neighbor_count(v))));
}

#[test]
fn lambda_max_against_jacobi() {
    for seed in 0..5 {
        let g = random_connected_graph(50, seed);
        let (vals, _) = jacobi_eigen(dense_laplacian(&g));
        let truth = vals[49] * (1.0 + 1e-6);
        let op = laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let est = estimate_lambda_max(&op, 1e-10, 50_000).unwrap();
        assert!(
            (est.lambda_max - truth).abs() <= 1e-3 * truth,
            "seed {seed}"
        );
    }
}

#[test]
fn fiedler_against_jacobi() {
    let p3 = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let v = fiedler_vector(
        &laplacian(&p3, LaplacianKind::Unnormalized).unwrap(),
        1e-12,
        500,
    )
    .unwrap();
    let s = 1.0 / 2f64.sqrt();
    for (a, b) in v.iter().zip([s, 0.0, -s]) {
        assert!((a - b).abs() < 1e-8);
    }
    for seed in 0..4 {
        let g = random_connected_graph(40, 100 + seed);
        let (_, vecs) = jacobi_eigen(dense_laplacian(&g));
        let v = fiedler_vector(
            &laplacian(&g, LaplacianKind::Unnormalized).unwrap(),
            1e-12,
            2000,
        )
        .unwrap();
        let align: f64 = v.iter().zip(&vecs[1]).map(|(a, b)| a * b).sum();
        assert!(align.abs() > 1.0 - 1e-8, "seed {seed}: {align}");
    }
}

#[test]
fn exact_transform_matches_spectral_oracle() {
    let g = random_connected_graph(30, 9);
    let (vals, vecs) = jacobi_eigen(dense_laplacian(&g));
    let f: Vec<f64> = lcg_points(30, 1, 3)
        .into_iter()
        .map(|p| p[0] - 0.5)
        .collect();
    for family in [MaskFamily::Haar, MaskFamily::Linear, MaskFamily::Quadratic] {
        let levels = 3;
        let plan = TransformPlan::new(
            &g,
            family,
            LaplacianKind::Unnormalized,
            &PlanOptions {
                levels,
                mode: TransformMode::Exact,
                ..PlanOptions::default()
            },
        )
        .unwrap();
        let c = plan.decompose(&f).unwrap();
        let r = family.r();
        let mut low = f.clone();
        for l in 1..=levels {
            let s = plan.level_scale(l);
            for j in 1..=r {
                let expect = spectral_apply(&vals, &vecs, |x| family.eval(j, s * x), &low);
                let got = &c.bands()[(l - 1) * r + (j - 1)];
                for (a, b) in got.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-10, "{family} j={j} l={l}");
                }
            }
            low = spectral_apply(&vals, &vecs, |x| family.eval(0, s * x), &low);
        }
        for (a, b) in c.bands().last().unwrap().iter().zip(&low) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn cheb_apply_k2_against_closed_form() {
    // K2: L has eigenpairs 0 -> (1,1)/sqrt2, 2 -> (1,-1)/sqrt2
    let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let op = laplacian(&g, LaplacianKind::Unnormalized).unwrap();
    let h = |x: f64| MaskFamily::Haar.eval(0, x);
    let approx = cheb_coeffs(h, 8, 4096).unwrap();
    let got = cheb_apply(&approx, &op, 1.0, &[1.0, 0.0]).unwrap();
    let expect = [0.5 + 0.5 * h(2.0), 0.5 - 0.5 * h(2.0)];
    for (a, b) in got.iter().zip(expect) {
        assert!((a - b).abs() < 5e-6);
    }
}

fn linear_sup_error(j: usize, n: usize, rule: Quadrature) -> f64 {
    let g = |x: f64| MaskFamily::Linear.eval(j, x);
    cheb_coeffs_with(g, n, rule).unwrap().sup_error(g, 10_000)
}

#[test]
fn exact_chebyshev_truncation_errors() {
    // reference values from an independent high-precision evaluation of the truncated series
    let cases = [(0, 8, 2.9614e-7), (1, 8, 4.7738e-6), (2, 8, 2.9614e-7)];
    for (j, n, expect) in cases {
        let got = linear_sup_error(j, n, Quadrature::Trapezoid { points: 4096 });
        assert!((got - expect).abs() <= 1e-3 * expect, "a{j} n={n}: {got:e}");
    }
}

#[test]
fn sup_error_decays_with_order() {
    for family in [MaskFamily::Haar, MaskFamily::Linear, MaskFamily::Quadratic] {
        for j in 0..family.mask_count() {
            let g = |x: f64| family.eval(j, x);
            let e: Vec<f64> = [4, 6, 8]
                .iter()
                .map(|&n| cheb_coeffs(g, n, 4096).unwrap().sup_error(g, 10_000))
                .collect();
            assert!(e[0] > e[1] && e[1] > e[2], "{family} a{j}: {e:?}");
        }
    }
}

#[test]
fn haar_sup_error_at_pi() {
    let approx = cheb_coeffs(|x| MaskFamily::Haar.eval(1, x), 8, 4096).unwrap();
    assert!((approx.value(PI) - 1.0).abs() < 5e-6);
}

#[test]
fn clique_pair_matches_min_cut() {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push((base + i, base + j, 0.1));
            }
        }
    }
    edges.push((4, 5, 0.001));
    let g = Graph::from_edges(10, &edges).unwrap();
    // exhaustive search over cuts separating the labeled vertices 1 and 8
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0u32..1024 {
        if mask & (1 << 1) != 0 || mask & (1 << 8) == 0 {
            continue;
        }
        let cut: f64 = g
            .edges()
            .iter()
            .filter(|&&(i, j, _)| ((mask >> i) & 1) != ((mask >> j) & 1))
            .map(|e| e.2)
            .sum();
        if cut < best.0 {
            best = (cut, mask);
        }
    }
    let plan = TransformPlan::new(
        &g,
        MaskFamily::Haar,
        LaplacianKind::Unnormalized,
        &PlanOptions::default(),
    )
    .unwrap();
    let labels = LabelSet::new(vec![(1, 0), (8, 1)], 10).unwrap();
    let out = cluster(
        &g,
        &plan,
        &labels,
        &ThresholdSchedule::new(0.05).unwrap(),
        &ClusterOptions::default(),
    )
    .unwrap();
    let got: u32 = out
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| u32::from(a) << i)
        .sum();
    assert_eq!(got, best.1);
}
