//! Anchor-based multi-view subspace clustering with hierarchical feature descent.
//!
//! Each view `X_v` (`d_v × n`) is pushed through a stack of orthonormal
//! projection layers down to a shared `k`-dimensional space, where one set of
//! `m` anchors and one consensus anchor graph `Z` (`m × n`) reconstruct every
//! view. The graph's right singular vectors give a spectral embedding that
//! k-means turns into cluster labels, all at cost linear in `n`.

pub mod alloc_track;
pub mod cli;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod matio;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod pipeline;

pub use dataset::{generate_synthetic, load_multiview, normalize_views, write_multiview, MultiViewDataset, NormMode, SyntheticSpec};
pub use embedding::{kmeans, spectral_embedding, ClusterResult, KMeansConfig, SpectralEmbedding};
pub use error::{Error, Result};
pub use metrics::{accuracy, nmi, purity, MetricReport, NmiNorm};
pub use model::{build_schedule, initialize, DimensionSchedule, ModelState};
pub use optimizer::{fit, objective, timed_sweeps, FitConfig, FitReport};
pub use pipeline::{benchmark, run, sweep_depth, BenchParams, BenchRow, DepthRow, RunOutcome, RunParams};
