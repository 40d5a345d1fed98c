//! Joint UAV trajectory design and RIS passive beamforming.
//!
//! A rotary-wing UAV at fixed altitude serves a single ground user, with a
//! reconfigurable intelligent surface (a ULA of `M` passive elements on a
//! building facade) reflecting part of the signal. The crate provides:
//!
//! * the geometry and channel models ([`scenario`], [`channel`]),
//! * closed-form phase alignment and rate evaluation ([`beamforming`]),
//! * the successive convex approximation trajectory optimizer ([`sca`]),
//! * the convexity certificate for the per-slot rate function ([`convexity`]),
//! * the heuristic and no-beamforming benchmarks ([`baselines`]),
//! * experiment orchestration used by the `risuav` binary ([`cli`]).

pub mod baselines;
pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod convexity;
pub mod error;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod sca;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use scenario::{Scenario, Trajectory};
