//! Grassmannian diffusion maps.

pub mod classify;
pub mod datagen;
pub mod diffusion;
mod error;
pub mod kernels;
mod linalg;
pub mod manifold;

pub use diffusion::{
    ConventionalOutput, DegreeVector, DiffusionEmbedding, GdmOutput, GdmParams,
    StationaryDistribution, TransitionMatrix,
};
pub use classify::{
    ClassificationResult, ClassifyParams, ClusterAssignment, DecisionCriterion, SolverKind,
    SparseDictionary, SparseSolution,
};
pub use datagen::{
    DatasetManifest, LabeledMatrixDataset, RandomFieldDataset, SphereConesDataset,
};
pub use error::{Error, Result};
pub use kernels::{CompositionRule, KernelKind, KernelLabel, KernelMatrix, KernelStats};
pub use manifold::{GrassmannPoint, MetricKind, PrincipalAngleVector, SvdTriplet, TangentVector};
