//! Numerical laboratory for Loewner chains and SLE.
//!
//! * [`loewner`]: deterministic Loewner chains of every kind, their traces
//!   and weldings, and whole-plane unzipping.
//! * [`sle`]: Brownian and SLE(κ;ρ) driving processes.
//! * [`bessel`]: Gegenbauer-series transition densities of radial Bessel
//!   processes and independent samplers for them.
//! * [`ergodic`]: harmonic-measure averages near curve tips.
//! * [`cli`]: the `sle-lab` command-line front end.

pub mod csvio;
pub mod error;
pub mod loewner;
pub mod numerics;
pub mod stats;
pub mod sle;
pub mod bessel;
pub mod ergodic;
pub mod cli;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/loewner.md")]
    mod loewner {}
    #[doc = include_str!("../../../book/src/drivers.md")]
    mod drivers {}
    #[doc = include_str!("../../../book/src/bessel.md")]
    mod bessel {}
    #[doc = include_str!("../../../book/src/ergodics.md")]
    mod ergodics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
