//! Fixed-step propagation of density matrices under a constant generator.

use log::warn;

use crate::error::{QsError, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, Superoperator, C64};
use crate::oscillator::{gibbs_state, OscillatorModel, TOP_LEVEL_GUARD};

/// Eigenvalues below this count as negative in [`spectral_probe`].
pub const DEFAULT_NEG_THRESHOLD: f64 = -1e-10;
/// Allowed trace error before a run is aborted.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
/// Expected bound on the per-step Hermitian correction.
pub const HERMITIAN_CORRECTION_LIMIT: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// `ρ_kk = N / k^f`, `k = 1..d`.
    MixedPowerLaw(f64),
    /// `ρ_ss = 1` with `s = 1` the ground level.
    PureLevel(usize),
    Gibbs,
    Custom(ComplexMatrix),
}

impl InitialCondition {
    pub fn density_matrix(&self, model: &OscillatorModel) -> Result<ComplexMatrix> {
        let d = model.dim;
        match self {
            InitialCondition::MixedPowerLaw(f) => {
                if !(f.is_finite() && *f > 0.0) {
                    return Err(QsError::InvalidInitialCondition(format!(
                        "power-law exponent must be > 0, got {f}"
                    )));
                }
                let w: Vec<f64> = (1..=d).map(|k| (k as f64).powf(-f)).collect();
                let norm: f64 = w.iter().sum();
                Ok(ComplexMatrix::from_real_diagonal(
                    &w.iter().map(|x| x / norm).collect::<Vec<_>>(),
                ))
            }
            InitialCondition::PureLevel(s) => {
                if *s == 0 || *s > d {
                    return Err(QsError::InvalidInitialCondition(format!(
                        "level {s} outside 1..={d}"
                    )));
                }
                let mut rho = ComplexMatrix::zeros(d);
                rho[(s - 1, s - 1)] = C64::new(1.0, 0.0);
                Ok(rho)
            }
            InitialCondition::Gibbs => Ok(gibbs_state(model)),
            InitialCondition::Custom(rho) => {
                check_density(rho, d)?;
                Ok(rho.clone())
            }
        }
    }
}

fn check_density(rho: &ComplexMatrix, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(QsError::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    if !rho.is_hermitian(1e-10) {
        return Err(QsError::InvalidInitialCondition("state is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(QsError::InvalidInitialCondition(format!(
            "trace is {tr}, expected 1"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub step_map: Superoperator,
    /// Largest Frobenius norm removed by re-Hermitizing a step.
    pub max_hermitian_correction: f64,
    /// Largest population seen in the highest retained level.
    pub max_top_population: f64,
}

/// Propagates `rho0` by `steps` applications of `P = exp(L dt)`, computed
/// once. Each step is re-Hermitized to strip rounding.
pub fn evolve(
    l: &Superoperator,
    rho0: &ComplexMatrix,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    let d = l.op_dim();
    check_density(rho0, d)?;
    if steps == 0 || !(dt > 0.0 && dt.is_finite()) {
        return Err(QsError::InvalidInitialCondition(format!(
            "need steps >= 1 and dt > 0, got {steps} and {dt}"
        )));
    }
    let p = l.exp(dt)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(rho0.clone());
    let mut max_corr: f64 = 0.0;
    let mut max_top = rho0[(d - 1, d - 1)].re;
    let mut v = rho0.vectorize();
    for n in 1..=steps {
        v = p.apply_vec(&v);
        let raw = ComplexMatrix::devectorize(d, &v)?;
        let rho = raw.hermitian_part();
        max_corr = max_corr.max((&raw - &rho).frobenius_norm());
        let tr = rho.trace().re;
        if tr.is_nan() || (tr - 1.0).abs() > TRACE_DRIFT_LIMIT {
            return Err(QsError::TraceDrift { step: n, trace: tr });
        }
        max_top = max_top.max(rho[(d - 1, d - 1)].re);
        v = rho.vectorize();
        times.push(n as f64 * dt);
        states.push(rho);
    }
    if max_corr > HERMITIAN_CORRECTION_LIMIT {
        warn!("hermitian correction reached {max_corr:.3e}");
    }
    if max_top > TOP_LEVEL_GUARD {
        warn!("top level population reached {max_top:.3e}; truncation may matter");
    }
    Ok(Trajectory {
        times,
        states,
        step_map: p,
        max_hermitian_correction: max_corr,
        max_top_population: max_top,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralProbe {
    pub min_eig: f64,
    pub neg_count: usize,
    pub purity: f64,
}

pub fn spectral_probe(rho: &ComplexMatrix, neg_threshold: f64) -> Result<SpectralProbe> {
    let ev = hermitian_eigenvalues(rho)?;
    Ok(probe_from_eigenvalues(&ev, neg_threshold))
}

pub(crate) fn probe_from_eigenvalues(ev: &[f64], neg_threshold: f64) -> SpectralProbe {
    SpectralProbe {
        min_eig: ev.iter().cloned().fold(f64::INFINITY, f64::min),
        neg_count: ev.iter().filter(|&&x| x < neg_threshold).count(),
        purity: ev.iter().map(|x| x * x).sum(),
    }
}
