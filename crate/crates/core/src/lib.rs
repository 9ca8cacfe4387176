//! Core library: packet ingest, bidirectional flow assembly, flow feature
//! vectors, dataset handling, PCA, classical classifiers and the evaluation
//! harness used by the `flowml` command line tool.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod linalg;
pub mod numfmt;
pub mod oracles;
pub mod packet;
pub mod pca;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod verify;

pub use classifiers::{fit, gini_importance, predict, ImportanceReport, ModelSpec, TrainedModel};
pub use dataset::{Dataset, Scaler};
pub use error::Error;
pub use eval::EvalReport;
pub use features::{FeatureVector, FlowMeta};
pub use flow::{ClosedFlow, CloseReason, FlowConfig, FlowKey, FlowTable};
pub use linalg::Matrix;
pub use packet::{PacketRecord, TcpFlags};
pub use pca::PcaModel;
pub use synth::BlobSpec;

