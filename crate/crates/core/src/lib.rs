//! Tight wavelet frame transforms on graphs with Chebyshev-accelerated
//! filtering, plus split-Bregman denoising and semi-supervised clustering.

pub mod chebyshev;
pub mod datasets;
pub mod error;
pub mod graph;
pub mod io;
pub mod masks;
pub mod solvers;
pub mod sparse;
pub mod spectral;
pub mod wftg;

pub use chebyshev::{
    cheb_apply, cheb_apply_bank, cheb_coeffs, cheb_coeffs_with, cheb_eval, ChebApprox, Quadrature,
};
pub use datasets::{
    add_gaussian_noise, derive_seed, gen_sphere, gen_two_moons, random_labels, SphereSignal,
    SphereSpec, TwoMoonsSpec,
};
pub use error::{Error, Result};
pub use graph::{
    build_knn_graph, gaussian_weight, laplacian, Graph, LaplacianKind, PointCloud, SparseOperator,
};
pub use masks::{make_family, verify_uep, MaskFamily};
pub use solvers::{
    classification_error, cluster, cluster_from_fiedler, denoise, denoise_objective,
    initial_indicator, relative_error, soft_threshold, ClusterOptions, ClusterOutput,
    DenoiseOptions, DenoiseOutput, GraphNorms, LabelSet, SolverState, ThresholdSchedule,
};
pub use sparse::CsrMatrix;
pub use spectral::{
    dense_eigendecomposition, estimate_lambda_max, fiedler_vector, fiedler_vector_with,
    EigenDecomposition, FiedlerMethod, FiedlerOptions, PowerOptions, SpectralBound,
};
pub use wftg::{
    band_order, redundancy_factor, suggested_order, BandIndex, FrameCoefficients, FrameMeta,
    PlanOptions, TransformMode, TransformPlan,
};
