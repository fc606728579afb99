//! Bayesian model of in-context learning for two-class Gaussian mixtures.
//!
//! A pre-trained model knows a prior over class centers ([`model::PretrainPrior`]);
//! a prompt of labeled examples drawn from some task ([`model::TaskSpec`])
//! updates it to a conjugate posterior ([`posterior`]), which yields a
//! closed-form decision rule ([`predictor`]). [`theory`] predicts the
//! per-class accuracy of that rule, and [`harness`] checks the predictions
//! against Monte Carlo and numerical quadrature.

pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod posterior;
pub mod predictor;
pub mod theory;

pub use error::{LabError, Result};
pub use model::{Label, LabeledExample, Prompt, PretrainPrior, QueryClass, TaskSpec};
pub use posterior::{compute_posterior, PosteriorState};
pub use predictor::{predict, Decision, FracPrior, MeanReversionLimit};
