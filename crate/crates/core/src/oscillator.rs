//! Truncated Fock-basis matrices for the one-dimensional harmonic oscillator.

use crate::error::{QsError, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Physical parameters plus the number of retained levels.
///
/// `beta_q` enters the dynamics through `m²ω²β_q`, which carries the same
/// units as `beta_p` (see [`OscillatorModel::scaled_beta_q`]).
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorModel {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub kb: f64,
    pub temperature: f64,
    pub beta_p: f64,
    pub beta_q: f64,
    pub force: f64,
    pub dim: usize,
}

impl Default for OscillatorModel {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            kb: 1.0,
            temperature: 1.0,
            beta_p: 0.2,
            beta_q: 0.2,
            force: 0.0,
            dim: 16,
        }
    }
}

impl OscillatorModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("omega", self.omega),
            ("hbar", self.hbar),
            ("kb", self.kb),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(QsError::InvalidModel(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("beta_p", self.beta_p), ("beta_q", self.beta_q)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(QsError::InvalidModel(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.force.is_finite() {
            return Err(QsError::InvalidModel("force must be finite".into()));
        }
        if self.dim == 0 {
            return Err(QsError::InvalidModel("dim must be >= 1".into()));
        }
        Ok(())
    }

    pub fn kt(&self) -> f64 {
        self.kb * self.temperature
    }

    /// `ħω / 2kT`.
    pub fn xi(&self) -> f64 {
        self.hbar * self.omega / (2.0 * self.kt())
    }

    /// `ħω / kT`.
    pub fn eta(&self) -> f64 {
        2.0 * self.xi()
    }

    /// `m²ω²β_q`, the position-channel rate in units of 1/time.
    pub fn scaled_beta_q(&self) -> f64 {
        self.mass * self.mass * self.omega * self.omega * self.beta_q
    }

    /// Picks `beta_q` so that `m²ω²β_q` equals `rate`.
    pub fn with_scaled_beta_q(mut self, rate: f64) -> Self {
        self.beta_q = rate / (self.mass * self.omega).powi(2);
        self
    }

    /// Returns a copy with `kT` set by adjusting the temperature so that
    /// `ħω/2kT = xi`.
    pub fn with_xi(mut self, xi: f64) -> Self {
        self.temperature = self.hbar * self.omega / (2.0 * xi * self.kb);
        self
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|n| self.hbar * self.omega * (n as f64 + 0.5))
            .collect()
    }
}

pub fn position_matrix(model: &OscillatorModel) -> ComplexMatrix {
    let c = (model.hbar / (2.0 * model.mass * model.omega)).sqrt();
    ComplexMatrix::from_fn(model.dim, |n, m| {
        if m == n + 1 {
            C64::new(c * ((n + 1) as f64).sqrt(), 0.0)
        } else if n == m + 1 {
            C64::new(c * (n as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn momentum_matrix(model: &OscillatorModel) -> ComplexMatrix {
    let c = (model.mass * model.omega * model.hbar / 2.0).sqrt();
    ComplexMatrix::from_fn(model.dim, |n, m| {
        if m == n + 1 {
            C64::new(0.0, -c * ((n + 1) as f64).sqrt())
        } else if n == m + 1 {
            C64::new(0.0, c * (n as f64).sqrt())
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Exact diagonal `ħω(n + ½)`, not assembled from the truncated `q` and `p`
/// (which would spoil the last two levels).
pub fn hamiltonian(model: &OscillatorModel) -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&model.energies())
}

/// `∂V/∂q = mω² q`.
pub fn potential_gradient(model: &OscillatorModel) -> ComplexMatrix {
    position_matrix(model).scale_real(model.mass * model.omega * model.omega)
}

/// `∂²V/∂q² = mω²`.
pub fn potential_curvature(model: &OscillatorModel) -> f64 {
    model.mass * model.omega * model.omega
}

/// Returns `(a, a†)`.
pub fn ladder_operators(model: &OscillatorModel) -> (ComplexMatrix, ComplexMatrix) {
    let q = position_matrix(model);
    let p = momentum_matrix(model);
    let cq = (model.mass * model.omega / (2.0 * model.hbar)).sqrt();
    let cp = (1.0 / (2.0 * model.mass * model.hbar * model.omega)).sqrt();
    let a = &q.scale_real(cq) + &p.scale(C64::new(0.0, cp));
    let ad = &q.scale_real(cq) + &p.scale(C64::new(0.0, -cp));
    (a, ad)
}

/// Unnormalized Boltzmann weights relative to the ground level, and `ln Z_d`.
fn boltzmann(model: &OscillatorModel) -> (Vec<f64>, f64) {
    let e = model.energies();
    let kt = model.kt();
    let w: Vec<f64> = e.iter().map(|&en| (-(en - e[0]) / kt).exp()).collect();
    let ln_z = -e[0] / kt + w.iter().sum::<f64>().ln();
    (w, ln_z)
}

/// `ln Z_d` with `Z_d = Σ_{n<d} e^{−E_n/kT}`.
pub fn log_partition_function(model: &OscillatorModel) -> f64 {
    boltzmann(model).1
}

pub fn gibbs_populations(model: &OscillatorModel) -> Vec<f64> {
    let (w, _) = boltzmann(model);
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn gibbs_state(model: &OscillatorModel) -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&gibbs_populations(model))
}

/// `Tr(H ρ_eq)` for the truncated oscillator.
pub fn equilibrium_energy(model: &OscillatorModel) -> f64 {
    model
        .energies()
        .iter()
        .zip(gibbs_populations(model))
        .map(|(e, p)| e * p)
        .sum()
}

/// `(ħω/2) coth(ħω/2kT)`, the untruncated equilibrium energy.
pub fn untruncated_equilibrium_energy(model: &OscillatorModel) -> f64 {
    0.5 * model.hbar * model.omega / model.xi().tanh()
}

/// Population of the highest retained level above which truncation is no
/// longer negligible.
pub const TOP_LEVEL_GUARD: f64 = 1e-6;
