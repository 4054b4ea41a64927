//! Value of information analysis for decision-analytic models.
//!
//! Starting from a probabilistic sensitivity analysis (PSA) sample, the crate
//! estimates the expected value of perfect information (EVPI), of partial
//! perfect information for a parameter subset (EVPPI), and of sample
//! information from a proposed study (EVSI). EVSI is available by regression
//! on data summaries, importance sampling, Gaussian approximation, moment
//! matching, and a nested Monte Carlo reference. Population scaling and the
//! expected net benefit of sampling give an optimal study size.
//!
//! ```
//! use evsi::model::{builtin, run_psa};
//! use evsi::psa::{compute_net_benefit, evpi, WtpThreshold};
//!
//! let ex = builtin::normal_normal();
//! let ds = run_psa(&ex.model, 2000, 1).unwrap();
//! let nb = compute_net_benefit(&ds, WtpThreshold::new(ex.lambda).unwrap()).unwrap();
//! let v = evpi(&nb);
//! assert!(v.value > 0.0);
//! ```

#[cfg(feature = "cli")]
pub mod cli;
pub mod enbs;
pub mod error;
pub mod evppi;
pub mod evsi;
pub mod matrix;
pub mod metamodel;
pub mod model;
pub mod parallel;
pub mod psa;
pub mod rng;
pub mod stats;
pub mod voi;

pub use error::{Error, ErrorClass, Result};
