//! Blind separation of sparse, pulse-like sources from linear mixtures.
//!
//! The observed channels `z[n] = A s[n]` trace a trajectory in phase space.
//! Where one source peaks and the others are quiet, the trajectory points
//! along that source's mixing direction, so the sample with the largest
//! radius gives a direction estimate. Projecting onto it and deflating
//! repeats the search for the next source. Whitening beforehand makes the
//! directions of uncorrelated sources orthogonal, which removes cross-talk
//! from the projections. A PCA baseline, Monte-Carlo error evaluation and
//! EDF/text loaders round things out.

pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod numerics;
pub mod pca;
pub mod separation;
pub mod signals;
pub mod whitening;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use evaluation::{
    associate, monte_carlo_rms, pearson, AssociationReport, MonteCarloConfig, RmsReport,
};
pub use ingest::{read_edf, read_matrix_text, Recording};
pub use numerics::{symmetric_eig, EigenDecomposition, Matrix};
pub use pca::{pca_separate, PcaModel};
pub use separation::{
    separate, separate_maximum, Estimate, MethodSpec, SeparationMethod, SeparationOptions,
    SeparationResult,
};
pub use signals::{MixingMatrix, MultichannelSignal, NoiseSpec, Pulse, PulseTrainSpec};
pub use whitening::{whiten, WhiteningMethod, WhiteningTransform};
