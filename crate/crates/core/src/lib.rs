//! Learning γ-margin halfspaces on the unit sphere under Massart label noise.
//!
//! The crate provides
//!
//! * a synthetic data model ([`synth`]) with a white-box noise oracle,
//! * the clipped LeakyReLU surrogate and its explicit gradient ([`losses`]),
//! * an online projected-SGD learner with holdout selection ([`sgd`]),
//! * a cutting-plane learner built on a gradient-averaging separation
//!   oracle and the ellipsoid method ([`cutting_planes`], [`ellipsoid`]),
//!   with optional random-projection preprocessing ([`jl`]),
//! * a Perceptron baseline and a reproducible experiment harness that
//!   writes CSV ([`perceptron`], [`experiment`]), and the on-disk dataset
//!   and model formats ([`io`]).

pub mod cutting_planes;
pub mod ellipsoid;
pub mod error;
pub mod experiment;
pub mod hypothesis;
pub mod io;
pub mod jl;
pub mod losses;
pub mod perceptron;
pub mod rng;
pub mod sgd;
pub mod source;
pub mod synth;
pub mod vector;

pub use cutting_planes::{run_cutting_planes, separation_oracle, separation_oracle_streamed, CpOutput, CpParams};
pub use ellipsoid::Ellipsoid;
pub use error::{Error, Result};
pub use experiment::{emit_csv, run_experiment, ExperimentConfig, ResultRow};
pub use hypothesis::{empirical_error, potential_trajectory, select_hypothesis, IterateHistory, LearnerOutput};
pub use jl::{jl_project, JlProjection};
pub use losses::GradientParams;
pub use perceptron::perceptron_baseline;
pub use sgd::{run_sgd, sgd_step, SgdParams};
pub use source::{DatasetStream, InstanceStream, SampleSource};
pub use synth::{generate_dataset, Dataset, LabeledExample, Marginal, MassartInstance, NoiseModel};
pub use vector::{clip_weight, project_to_ball, sign, Label, UnitVector};
