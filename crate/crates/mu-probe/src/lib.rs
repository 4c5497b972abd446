//! Lower bounds on the structured singular value (SSV) of discrete-time
//! MIMO LTI systems, estimated purely from time-domain input-output
//! experiments.
//!
//! The crate provides three layers:
//!
//! * a model-based reference engine ([`power`]) running the classical
//!   block-structured power iteration on a static complex matrix,
//! * a data-driven engine ([`datadriven`]) running the same iteration over
//!   all DFT bins at once, where every matrix-vector product is replaced
//!   by a time-domain experiment on the plant,
//! * analytic oracles ([`oracle`]) bracketing the true value for
//!   verification (spectral radius / largest singular value sandwich,
//!   randomized structured-unitary search, diagonal-scaling upper bound).
//!
//! Supporting modules: [`lti`] (plant simulation, the experiment oracle),
//! [`blocks`] (block-structure algebra), [`spectral`] (the DFT pairs with
//! the `t = 1..N` phase convention and their time-reversed variants),
//! [`bench`] (reproducible experiment campaigns) and [`cli`].
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod bench;
pub mod blocks;
pub mod cli;
pub mod datadriven;
pub mod error;
pub mod lti;
pub mod oracle;
pub mod power;
pub mod spectral;

pub use blocks::BlockStructure;
pub use datadriven::{ExperimentOracle, MuEstimate, SimulatedOracle};
pub use error::{MuError, Result};
pub use lti::{NoiseSpec, StateSpaceModel};
