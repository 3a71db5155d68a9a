//! A numerical laboratory for the weight assigned to recorded outcomes.
//!
//! Candidate weights `μ = |α|^p` are put through four independent checks:
//!
//! * [`cauchy`]: residuals of the additive-argument and multiplicative-argument
//!   functional equations, and log-log fitting of the exponent `p`;
//! * [`isometry`]: the dimension of the Lie algebra of linear p-norm
//!   isometries on `C^n`, which is `n²` for `p = 2` and `n` otherwise;
//! * [`process`]: a simulator that alternates unitary steps with record
//!   formation, checks multiplicative refinement, total-weight drift, and
//!   outcome frequencies against the enumerated path weights;
//! * [`cli`]: the seeded, byte-reproducible batch driver behind the
//!   `bornlab` binary.
//!
//! Only `p = 2` conserves total weight under every reversible step; the
//! other checks hold for all `p` and are there to show that they do.
//!
//! Runnable walkthroughs live in `examples/` (`cargo run --example <name>`).

pub mod amplitude;
pub mod cauchy;
pub mod cli;
pub mod error;
pub mod isometry;
pub mod process;

pub use amplitude::{Amplitude, Configuration, Unitary, WeightFunction};
pub use error::{Error, Result};
