//! Transmit beamforming for joint target sensing and proactive eavesdropping.
//!
//! A base station `E` with a monostatic uniform linear array senses a target
//! `S` (an illegal transmitter) while its radar signal jams the illegal
//! receiver `D` just enough for `E` to decode the intercepted link. The crate
//! provides
//!
//! - [`array`]: steering vectors and angle grids,
//! - [`scene`]: channels, SNRs and the eavesdropping threshold,
//! - [`fim`]: Fisher information, CRB and Monte-Carlo utilities,
//! - [`sdp`]: a small interior point solver over Hermitian PSD matrices,
//! - [`problems`]: the covariance programs and their dispatch,
//! - [`srocr`]: rank-one refinement and beamformer extraction,
//! - [`selftest`]: randomized oracle suites.

pub mod array;
mod error;
pub mod fim;
pub mod linalg;
pub mod problems;
pub mod scene;
pub mod selftest;
pub mod sdp;
pub mod srocr;
pub mod units;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/fisher.md")]
    mod fisher {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
}
