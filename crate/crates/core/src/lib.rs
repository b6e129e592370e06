//! Peer-to-peer decoupled graph neural network diffusion.
//!
//! Each graph node is a device that only talks to its neighbors. Devices hold
//! base-classifier predictions and diffuse them with a send, receive and
//! acknowledge protocol until they approach the centralized FDiff-scale
//! answer computed by [`oracle::fdiff_scale`].

pub mod cli;
pub mod error;
pub mod graph;
pub mod learn;
pub mod oracle;
pub mod p2p;
pub mod sim;
pub mod table;

pub use error::{Error, Result};
pub use graph::{Dataset, Graph, NodeData, NodeSet, Splits};
pub use table::PredictionTable;
