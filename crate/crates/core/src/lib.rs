//! Identification of discrete-time MIMO Volterra systems in tensor-network form.
//!
//! A degree-`d` Volterra system with `p` inputs, `l` outputs and memory `M` is
//! stored as a chain of `d` cores of size `r_{k−1} × (pM+1) × r_k` with
//! `r_0 = l` and `r_d = 1`, and identified from input/output samples with the
//! ALS or MALS sweep in [`solvers`].

pub mod cli;
pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod regressor;
pub mod solvers;
pub mod tensor;

pub use error::{Result, VttnError};
pub use model::{SystemShape, TnCore, VolterraModel};
pub use regressor::{Prehistory, TimeSeriesDataset};
pub use solvers::{identify, Algorithm, SolverConfig, SolverReport};
pub use tensor::DenseTensor;
