//! Optimistic regularized learning in repeated games: learners, a dynamics
//! engine, concrete games and executable checks of the regret and welfare
//! bounds these dynamics satisfy.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod continuous;
pub mod cost;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod learner;
pub mod library;
pub mod regularizer;
pub mod robust;

pub use certificate::{Certificate, Verdict};
pub use error::{Error, Result};
pub use game::{MixedProfile, MixedStrategy, NormalFormGame, Scale, UtilityVector};
pub use dynamics::{FeedbackMode, PlayerSpec, Trace};
pub use learner::{LearnerSpec, OnlineLearner, Predictor};
pub use regularizer::Regularizer;
