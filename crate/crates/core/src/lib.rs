pub mod classical;
pub mod error;
pub mod friction;
pub mod linalg;
pub mod liouvillian;
pub mod oscillator;
pub mod propagator;
pub mod thermo;

pub use error::{QsError, Result};
