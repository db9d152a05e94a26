use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters shared by all formulas: the delta coupling γ < 0, the
/// nonlinearity power p > 5, and an optional frequency ω > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Delta coupling, γ < 0 (repulsive).
    pub gamma: f64,
    /// Nonlinearity power, p > 5 (L²-supercritical).
    pub p: f64,
    /// Frequency ω > 0 where a context requires one.
    pub omega: Option<f64>,
}

impl Params {
    pub fn new(gamma: f64, p: f64) -> Result<Self> {
        let params = Params { gamma, p, omega: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_omega(gamma: f64, p: f64, omega: f64) -> Result<Self> {
        let params = Params { gamma, p, omega: Some(omega) };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma < 0.0) {
            return Err(Error::Domain(format!("gamma = {} must be < 0", self.gamma)));
        }
        if !(self.p > 5.0) {
            return Err(Error::Domain(format!("p = {} must be > 5", self.p)));
        }
        if let Some(w) = self.omega {
            if !(w > 0.0) {
                return Err(Error::Domain(format!("omega = {w} must be > 0")));
            }
        }
        Ok(())
    }

    /// Scaling-critical Sobolev index s_c = 1/2 − 2/(p−1), in (0, 1/2).
    pub fn s_c(&self) -> f64 {
        0.5 - 2.0 / (self.p - 1.0)
    }

    /// Decay exponent α = (p−1)/2 of the ground state, > 2.
    pub fn alpha(&self) -> f64 {
        (self.p - 1.0) / 2.0
    }

    /// Amplitude constant c_p = (2(p+1))^{1/(p−1)}, > 1.
    pub fn c_p(&self) -> f64 {
        (2.0 * (self.p + 1.0)).powf(1.0 / (self.p - 1.0))
    }

    /// |γ|.
    pub fn abs_gamma(&self) -> f64 {
        self.gamma.abs()
    }

    /// Frequency, defaulting to 1 (the post-rescaling normalization).
    pub fn omega_or_one(&self) -> f64 {
        self.omega.unwrap_or(1.0)
    }

    /// Whether the coupling sits at the degenerate value γ = −2 where the
    /// e^{−2y} coefficient of the interaction potential vanishes.
    pub fn is_degenerate(&self) -> bool {
        (self.gamma + 2.0).abs() < 1e-12
    }

    /// e_γ(y): e^{−2y} for γ < −2, e^{−(p+1)y} in the degenerate case γ = −2.
    pub fn e_gamma(&self, y: f64) -> f64 {
        if self.is_degenerate() {
            (-(self.p + 1.0) * y).exp()
        } else {
            (-2.0 * y).exp()
        }
    }
}
