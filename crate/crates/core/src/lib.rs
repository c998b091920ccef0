//! Simulation and inference toolkit for lazy inhomogeneous Erdős–Rényi
//! (lazy IER) network time series.
//!
//! A lazy IER process generates a sequence of `T` random graphs on a shared
//! vertex set. Each potential edge `(i, j)` evolves as its own two-state
//! Markov chain: at every step it keeps its previous state with probability
//! `alpha` (the stickiness parameter) and otherwise resamples from
//! `Bernoulli(p_ij)`. The crate provides
//!
//! - mean-matrix constructors (block models, a logistic graphon, explicit
//!   matrices) in [`graph_model`],
//! - sequence generators (direct Markov recursion, an equivalent renewal
//!   construction, and a single-changepoint piecewise process) together with
//!   exact edge-moment and edge-distribution oracles in [`lazy_process`],
//! - aggregated adjacency/Laplacian matrices and their population
//!   counterparts in [`aggregate`],
//! - a symmetric eigensolver (Lanczos with full reorthogonalization, plus a
//!   dense Jacobi routine used as an independent reference) in [`spectral`],
//! - spectral community estimation and misclustering error in [`community`],
//! - the CUSUM changepoint statistic and estimator in [`changepoint`],
//! - Monte-Carlo study drivers reproducing concentration, community and
//!   changepoint experiments in [`experiments`].
//!
//! All randomness flows through per-object substreams derived from a single
//! master seed, so every simulation and study is bit-reproducible and
//! independent of the degree of parallelism.

pub mod aggregate;
pub mod changepoint;
pub mod community;
pub mod experiments;
pub mod graph_model;
pub mod lazy_process;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use aggregate::AggregateView;
pub use changepoint::{ChangepointSpec, CusumProfile};
pub use community::{ClusteringResult, CommunitySpec, EmbedMode};
pub use experiments::{StudyConfig, StudyKind, StudyResult};
pub use graph_model::{DegreeStats, GraphonSpec, MeanMatrix, ModelTag, SbmSpec};
pub use lazy_process::{EdgeMoments, LazyProcessParams, NetworkSequence, RenewalTrace};
pub use spectral::EigenResult;
