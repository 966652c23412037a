//! Spectral, conductance, flow-congestion and mixing-time quantities for
//! finite Markov chains, together with mechanical checks of the comparison
//! bounds that relate the mixing time of one chain to that of another.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain`]: validated chains, classification, reversal, products, laziness.
//! * [`spectral`]: Dirichlet forms, Poincaré constants, eigenstructure, conductance.
//! * [`mixing`]: total variation, exact discrete and continuous mixing times.
//! * [`flows`]: multicommodity flows between chains and their congestion.
//! * [`bounds`]: every comparison bound evaluated against exact mixing times.
//! * [`generators`] and [`cli`]: example chains and the command-line front end.

pub mod bounds;
pub mod chain;
pub mod cli;
pub mod error;
pub mod flows;
pub mod generators;
pub mod linalg;
pub mod mixing;
pub mod spectral;

pub use bounds::{BoundEntry, BoundReport, Direction, TheoremId};
pub use chain::{Chain, ChainClass};
pub use error::{Error, Result};
pub use flows::{Flow, FlowPath};
pub use linalg::Matrix;
pub use mixing::{Distribution, MixingResult, Start};
pub use spectral::{SpectralSummary, StateFunction};
