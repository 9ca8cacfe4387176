//! Crate-level error type aggregating the per-module errors.

use thiserror::Error;

use crate::classifiers::ModelError;
use crate::eval::EvalError;
use crate::dataset::DataError;
use crate::flow::FlowError;
use crate::packet::{FixtureParseError, PcapError};
use crate::pca::PcaError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pcap(#[from] PcapError),
    #[error(transparent)]
    Fixture(#[from] FixtureParseError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
