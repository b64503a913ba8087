//! Learning a simplex from uniform samples with a third-moment fixed-point
//! iteration, plus reductions from simplex and `l_p` ball learning to
//! independent component analysis.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod ica;
pub mod learner;
pub mod moments;
pub mod sampling;
pub mod stats;
pub mod vertex_finder;

pub use error::{Error, Result};
pub use geometry::{isotropic_simplex, standard_simplex, AffineFrame, EmbedMap, Simplex};
pub use learner::{learn_simplex, LearnedSimplex, LearnerConfig};
pub use vertex_finder::{find_vertex, ExactGradient, GradientOracle, IterationConfig, SampledGradient};
