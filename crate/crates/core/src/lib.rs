//! Second-order Strang splitting for the Allen–Cahn equation
//! `∂_t u = ε² Δu - F'(u)` on periodic grids.
//!
//! Two potentials are supported:
//!
//! * the double well `F(u) = (u² - 1)²/4`, whose nonlinear sub-flow is solved
//!   exactly ([`poly_flow`]);
//! * the Flory–Huggins potential with temperatures `0 < θ < θ_c`, whose
//!   sub-flow is approximated by a two-stage diagonally implicit Runge–Kutta
//!   method with per-point Newton solves ([`log_flow`]).
//!
//! The linear part `e^{ε²τΔ_h}` is applied through FFTs ([`spectral`]). The
//! [`stepper`] composes the pieces, checks the discrete maximum principle and
//! modified-energy decay as it goes, and [`verify`] measures convergence
//! orders. [`cli`] backs the `ac-strang` binary.

pub mod cli;
pub mod error;
pub mod initial;
pub mod io;
pub mod log_flow;
pub mod poly_flow;
pub mod quadrature;
pub mod spectral;
pub mod stepper;
pub mod verify;

pub use error::{Error, Result};
pub use log_flow::{LogParams, LogScheme, SchemeMode};
pub use poly_flow::PolyScheme;
pub use spectral::{make_grid, Field, PeriodicGrid};
pub use stepper::{EnergyRecord, InvariantPolicy, Scheme, SimulationState};
