//! One module per experiment. Each resolves its settings from the config
//! parameters, runs the core computations and returns an [`Outcome`].

pub mod axioms;
pub mod lln;
pub mod oracle;
pub mod pde;
pub mod slln;
pub mod wlln;

use crate::config::{ExperimentKind, LoadedConfig, Model};
use crate::report::Outcome;
use crate::CliError;

pub fn run(loaded: &LoadedConfig) -> Result<Outcome, CliError> {
    let params = &loaded.config.parameters;
    match (&loaded.model, loaded.config.experiment) {
        (Model::Family(family), ExperimentKind::Axioms) => axioms::run(family, params),
        (Model::Sequence(model), ExperimentKind::Lln) => lln::run(model, params),
        (Model::Sequence(model), ExperimentKind::Slln) => slln::run(model, params),
        (Model::Sequence(model), ExperimentKind::Wlln) => wlln::run(model, params),
        (Model::Sequence(model), ExperimentKind::Pde) => pde::run(model, params),
        (Model::Sequence(model), ExperimentKind::Oracle) => oracle::run(model, params),
        _ => unreachable!("model kind checked when the config was loaded"),
    }
}
