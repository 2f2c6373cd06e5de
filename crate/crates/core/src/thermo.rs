//! Thermodynamic functionals along a density-matrix trajectory.
//!
//! `R` denotes the generator with the Hamiltonian and force commutators
//! removed, so `Tr(Rρ H)` is the heat rate. Logarithms of states use
//! eigenvalues clamped at [`LOG_CLAMP`].

use log::warn;
use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{
    commutator, hermitian_eigendecompose, ComplexMatrix, Superoperator, C64, LOG_CLAMP,
};
use crate::liouvillian::{force_part, hamiltonian_part};
use crate::oscillator::{
    gibbs_populations, hamiltonian, log_partition_function, momentum_matrix, potential_curvature,
    potential_gradient, OscillatorModel,
};
use crate::propagator::{probe_from_eigenvalues, Trajectory, DEFAULT_NEG_THRESHOLD};

/// One row of diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoRecord {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub ds_dt: f64,
    pub dsp_dt: f64,
    pub dsf_dt: f64,
    pub heat_rate: f64,
    pub work_rate: f64,
    /// `Tr(Lρ H)`, compared against `heat_rate + work_rate`.
    pub energy_rate: f64,
    /// `kT Tr(Lρ (ln ρ − ln ρ_eq))`.
    pub free_energy_rate: f64,
    pub free_energy: f64,
    pub rel_entropy: f64,
    pub min_eig: f64,
    pub neg_count: usize,
    pub purity: f64,
    pub trace_err: f64,
    /// Some eigenvalue was raised to the log clamp.
    pub clamped: bool,
}

impl ThermoRecord {
    pub fn first_law_residual(&self) -> f64 {
        self.energy_rate - self.work_rate - self.heat_rate
    }

    pub fn entropy_balance_residual(&self) -> f64 {
        self.ds_dt - self.dsf_dt - self.dsp_dt
    }
}

/// Removes the Hamiltonian and force parts from a generator.
pub fn dissipator_superop(l: &Superoperator, model: &OscillatorModel) -> Superoperator {
    &(l - &hamiltonian_part(model)) - &force_part(model)
}

/// `Rρ = Lρ − (1/iħ)[H, ρ] + (f/iħ)[q, ρ]`.
pub fn dissipator_part(
    l: &Superoperator,
    model: &OscillatorModel,
    rho: &ComplexMatrix,
) -> ComplexMatrix {
    let mut out = l.apply(rho);
    let h = hamiltonian(model);
    let ham = commutator(&h, rho).expect("dims checked by apply");
    out -= &ham.scale(C64::new(0.0, -1.0 / model.hbar));
    if model.force != 0.0 {
        out -= &force_part(model).apply(rho);
    }
    out
}

/// `Tr(Rρ H)`.
pub fn heat_rate(r_rho: &ComplexMatrix, h: &ComplexMatrix) -> f64 {
    let z = r_rho.trace_product(h);
    if z.im.abs() > 1e-11 * z.re.abs().max(1.0) {
        warn!("heat rate has imaginary part {:.3e}", z.im);
    }
    z.re
}

/// `f Tr(pρ)/m`.
pub fn work_rate(model: &OscillatorModel, rho: &ComplexMatrix) -> f64 {
    if model.force == 0.0 {
        return 0.0;
    }
    model.force * momentum_matrix(model).trace_product(rho).re / model.mass
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyRates {
    pub ds_dt: f64,
    pub dsp_dt: f64,
    pub dsf_dt: f64,
    pub clamped: bool,
}

/// `dS/dt = −kB Tr(Rρ ln ρ)`, `dSp/dt = kB Tr[Rρ(ln ρ_eq − ln ρ)]`,
/// `dSf/dt = Tr(Rρ H)/T`, each from its own trace.
pub fn entropy_rates(
    r_rho: &ComplexMatrix,
    rho: &ComplexMatrix,
    model: &OscillatorModel,
) -> Result<EntropyRates> {
    let (ln_rho, clamped) = clamped_log(rho)?;
    let ln_eq = equilibrium_log(model);
    let kb = model.kb;
    let ds_dt = -kb * r_rho.trace_product(&ln_rho).re;
    let dsp_dt = kb * r_rho.trace_product(&(&ln_eq - &ln_rho)).re;
    let dsf_dt = heat_rate(r_rho, &hamiltonian(model)) / model.temperature;
    Ok(EntropyRates {
        ds_dt,
        dsp_dt,
        dsf_dt,
        clamped,
    })
}

fn clamped_log(rho: &ComplexMatrix) -> Result<(ComplexMatrix, bool)> {
    let es = hermitian_eigendecompose(rho)?;
    let clamped = es.eigenvalues.iter().any(|&l| l < LOG_CLAMP);
    Ok((es.map(|l| l.max(LOG_CLAMP).ln())?, clamped))
}

/// `ln ρ_eq`, diagonal for the oscillator.
pub fn equilibrium_log(model: &OscillatorModel) -> ComplexMatrix {
    let lp: Vec<f64> = gibbs_populations(model).iter().map(|p| p.ln()).collect();
    ComplexMatrix::from_real_diagonal(&lp)
}

/// `−kB Tr(ρ ln ρ)` from the clamped spectrum.
pub fn von_neumann_entropy(rho: &ComplexMatrix, kb: f64) -> Result<f64> {
    let ev = hermitian_eigendecompose(rho)?.eigenvalues;
    Ok(-kb * ev.iter().map(|&l| l * l.max(LOG_CLAMP).ln()).sum::<f64>())
}

/// `Tr[ρ₁ ln ρ₁ − ρ₁ ln ρ₂]`; `ρ₂` must be full rank.
pub fn relative_entropy(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    let (l1, _) = clamped_log(rho1)?;
    let (l2, _) = clamped_log(rho2)?;
    Ok(rho1.trace_product(&(&l1 - &l2)).re)
}

/// `F = kT S(ρ|ρ_eq) − kT ln Z_d`.
pub fn free_energy(rho: &ComplexMatrix, model: &OscillatorModel) -> Result<f64> {
    let (l1, _) = clamped_log(rho)?;
    let rel = rho.trace_product(&(&l1 - &equilibrium_log(model))).re;
    Ok(model.kt() * (rel - log_partition_function(model)))
}

/// `−kT ln Z_d`, the equilibrium free energy and lower bound of `F`.
pub fn equilibrium_free_energy(model: &OscillatorModel) -> f64 {
    -model.kt() * log_partition_function(model)
}

/// Returns `(res_kinetic, res_potential)`:
/// `kT/2 − Tr[ρ(pΘ^p + Θ^p p)/2]/2m` and
/// `kT m Tr[ρ V''] − Tr[ρ(V'Θ^q + Θ^q V')/2]` with `V' = mω² q`.
pub fn equipartition_residuals(
    model: &OscillatorModel,
    rho: &ComplexMatrix,
    theta_p: &ComplexMatrix,
    theta_q: &ComplexMatrix,
) -> (f64, f64) {
    let kt = model.kt();
    let m = model.mass;
    let p = momentum_matrix(model);
    let sym_p = (&p.matmul(theta_p) + &theta_p.matmul(&p)).scale_real(0.5);
    let kin = 0.5 * kt - rho.trace_product(&sym_p).re / (2.0 * m);
    let vp = potential_gradient(model);
    let sym_q = (&vp.matmul(theta_q) + &theta_q.matmul(&vp)).scale_real(0.5);
    let pot = kt * m * potential_curvature(model) * rho.trace().re
        - rho.trace_product(&sym_q).re;
    (kin, pot)
}

/// Evaluates one record.
pub fn thermo_record(
    l: &Superoperator,
    r: &Superoperator,
    model: &OscillatorModel,
    t: f64,
    rho: &ComplexMatrix,
) -> Result<ThermoRecord> {
    let h = hamiltonian(model);
    let ln_eq = equilibrium_log(model);
    let es = hermitian_eigendecompose(rho)?;
    let clamped = es.eigenvalues.iter().any(|&x| x < LOG_CLAMP);
    let ln_rho = es.map(|x| x.max(LOG_CLAMP).ln())?;
    let probe = probe_from_eigenvalues(&es.eigenvalues, DEFAULT_NEG_THRESHOLD);

    let l_rho = l.apply(rho);
    let r_rho = r.apply(rho);
    let kb = model.kb;
    let heat = heat_rate(&r_rho, &h);
    let work = work_rate(model, rho);
    let diff_log = &ln_rho - &ln_eq;
    let rel = rho.trace_product(&diff_log).re;
    let entropy = -kb
        * es
            .eigenvalues
            .iter()
            .map(|&x| x * x.max(LOG_CLAMP).ln())
            .sum::<f64>();
    Ok(ThermoRecord {
        t,
        energy: rho.trace_product(&h).re,
        entropy,
        ds_dt: -kb * r_rho.trace_product(&ln_rho).re,
        dsp_dt: kb * r_rho.trace_product(&(&ln_eq - &ln_rho)).re,
        dsf_dt: heat / model.temperature,
        heat_rate: heat,
        work_rate: work,
        energy_rate: l_rho.trace_product(&h).re,
        free_energy_rate: model.kt() * l_rho.trace_product(&diff_log).re,
        free_energy: model.kt() * (rel - log_partition_function(model)),
        rel_entropy: rel,
        min_eig: probe.min_eig,
        neg_count: probe.neg_count,
        purity: probe.purity,
        trace_err: (rho.trace().re - 1.0).abs(),
        clamped,
    })
}

/// Records for every state of a trajectory, evaluated in parallel.
pub fn thermo_series(
    traj: &Trajectory,
    l: &Superoperator,
    model: &OscillatorModel,
) -> Result<Vec<ThermoRecord>> {
    let r = dissipator_superop(l, model);
    traj.times
        .par_iter()
        .zip(traj.states.par_iter())
        .map(|(&t, rho)| thermo_record(l, &r, model, t, rho))
        .collect()
}

/// Largest gap between the central difference of `S` and `dS/dt`. Pure
/// states are singular at `t = 0`, so the first `skip` interior points can be
/// excluded.
pub fn entropy_rate_fd_gap(records: &[ThermoRecord], skip: usize) -> f64 {
    records
        .windows(3)
        .skip(skip)
        .map(|w| {
            let fd = (w[2].entropy - w[0].entropy) / (w[2].t - w[0].t);
            (fd - w[1].ds_dt).abs()
        })
        .fold(0.0, f64::max)
}
