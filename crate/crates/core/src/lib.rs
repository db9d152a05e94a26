//! Numerical laboratory for the one-dimensional focusing nonlinear Schrödinger
//! equation with a repulsive Dirac delta potential,
//!
//! ```text
//!     i u_t + u_xx + γ δ(x) u + |u|^{p-1} u = 0,      γ < 0,  p > 5,
//! ```
//!
//! built around even threshold solutions at low frequency. The crate provides
//!
//! * closed-form ground states and their large-separation asymptotics
//!   ([`groundstate`]),
//! * a symmetric uniform grid with the discrete delta quadratic form
//!   ([`grid`]),
//! * mass/energy/action/virial functionals, sharp Gagliardo–Nirenberg
//!   constants and threshold quantities ([`functionals`]),
//! * a mass-conserving Strang + Crank–Nicolson evolver with blow-up
//!   detection ([`evolution`]),
//! * localized virial identities and weighted momentum bounds ([`virial`]),
//! * modulation decomposition around the two-bump soliton ([`modulation`]),
//! * threshold data construction and the scattering/blow-up dichotomy
//!   classifier ([`experiments`]).

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod export;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod integrate;
pub mod modulation;
pub mod params;
pub mod virial;

pub use error::{Error, Result};
pub use params::Params;
