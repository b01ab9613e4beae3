//! Norm functionals over parabolic tents and heat-flow characterizations.

mod balls;
mod carleson;
mod ealpha;
mod report;
mod spectral;

pub use balls::{BallFamily, TentFamily, TentWeight};
pub use carleson::*;
pub use ealpha::*;
pub use report::*;
pub use spectral::*;
