//! Numerical laboratory for the non-monotone behavior of the Heavy Ball method.
//!
//! The crate is organized bottom-up:
//!
//! * [`recurrence`]: scalar second-order linear recurrences, their roots,
//!   closed-form solutions and peak analytics.
//! * [`objective`]: objective functions (diagonal quadratics and a
//!   nonconvex function satisfying the Polyak-Łojasiewicz inequality).
//! * [`heavy_ball`]: the Heavy Ball iteration, its optimal tuning and the
//!   per-coordinate modal analysis on diagonal quadratics.
//! * [`lyapunov`]: the discrete Lyapunov function, its parameter regions and
//!   rate bound, plus the continuous-time energy and an RK4 simulator.
//! * [`restart`]: restart policies and the adaptive Heavy Ball method that
//!   doubles its Lipschitz estimate whenever the Lyapunov function increases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod heavy_ball;
pub mod lyapunov;
pub mod objective;
pub mod recurrence;
pub mod restart;
pub mod vector;

pub use error::{Error, Result};
pub use heavy_ball::{Event, HbParams, Record, Trajectory};
pub use lyapunov::{ContinuousState, LyapunovConfig};
pub use objective::{DiagonalQuadratic, NonconvexPl, Objective};
pub use recurrence::{PeakReport, RootClassification, SecondOrderRecurrence};
pub use restart::{AdaptiveOptions, AdaptiveOutcome, PolicySummary, RestartPolicy};
