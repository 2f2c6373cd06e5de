//! Friction operators.
//!
//! The Hermitian operators `Θ` are built three ways: an energy-basis kernel,
//! the Sylvester equation `ΘG + GΘ = C` with `G = e^{−H/kT}`, and a
//! truncated series in nested commutators with `H`. The non-Hermitian `Ξ`
//! come from an energy-basis kernel and from a closed form in `e^{±H/kT}`.
//! All routes take operators expressed in the energy basis.

use crate::error::{QsError, Result};
use crate::linalg::{
    commutator, hermitian_eigendecompose, ComplexMatrix, C64, HERMITIAN_TOL,
};
use crate::oscillator::{
    hamiltonian, momentum_matrix, position_matrix, potential_gradient, OscillatorModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrictionKind {
    /// Built from `p`.
    MomentumChannel,
    /// Built from `m ∂V/∂q`.
    PositionChannel,
}

/// The operator a friction kernel is applied to: `p` or `m ∂V/∂q`.
pub fn friction_base(model: &OscillatorModel, kind: FrictionKind) -> ComplexMatrix {
    match kind {
        FrictionKind::MomentumChannel => momentum_matrix(model),
        FrictionKind::PositionChannel => potential_gradient(model).scale_real(model.mass),
    }
}

/// `tanh(x)/x` with the removable singularity filled in.
pub fn tanh_kernel(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// `sinh(x)/x`.
pub fn sinh_kernel(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sinh() / x
    }
}

/// `(cosh(x) − 1)/x`, written as `2 sinh²(x/2)/x` to avoid cancellation.
pub fn cosh_kernel(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        let s = (0.5 * x).sinh();
        2.0 * s * s / x
    }
}

fn check_kernel_inputs(energies: &[f64], base: &ComplexMatrix, kt: f64) -> Result<()> {
    if energies.len() != base.dim() {
        return Err(QsError::DimensionMismatch {
            expected: base.dim(),
            found: energies.len(),
        });
    }
    if !(kt > 0.0 && kt.is_finite()) {
        return Err(QsError::DomainError(format!("kT must be > 0, got {kt}")));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(QsError::DomainError("non-finite energy".into()));
    }
    Ok(())
}

/// `Θ_lj = base_lj · tanh(x)/x`, `x = (E_l − E_j)/2kT`.
pub fn spectral_friction_hermitian(
    energies: &[f64],
    base: &ComplexMatrix,
    kt: f64,
) -> Result<ComplexMatrix> {
    check_kernel_inputs(energies, base, kt)?;
    let deviation = base.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(QsError::NonHermitianInput { deviation });
    }
    Ok(ComplexMatrix::from_fn(base.dim(), |l, j| {
        base[(l, j)] * tanh_kernel((energies[l] - energies[j]) / (2.0 * kt))
    }))
}

/// Solves `AX + XA = C` for Hermitian positive-definite `A` in the
/// eigenbasis of `A`: `X̃_ij = C̃_ij / (a_i + a_j)`.
pub fn sylvester_solve(a: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != c.dim() {
        return Err(QsError::DimensionMismatch {
            expected: a.dim(),
            found: c.dim(),
        });
    }
    let es = hermitian_eigendecompose(a)?;
    let v = &es.eigenvectors;
    let ct = c.to_basis(v);
    let ev = &es.eigenvalues;
    let d = a.dim();
    for i in 0..d {
        for j in 0..d {
            let sum = ev[i] + ev[j];
            if sum < 1e-300 {
                return Err(QsError::SingularPairing { i, j, sum });
            }
        }
    }
    let xt = ComplexMatrix::from_fn(d, |i, j| ct[(i, j)] / (ev[i] + ev[j]));
    Ok(xt.from_basis(v))
}

/// `e^{−H/kT}` for the oscillator. Diagonal, so built directly.
pub fn boltzmann_operator(model: &OscillatorModel) -> ComplexMatrix {
    let kt = model.kt();
    let w: Vec<f64> = model.energies().iter().map(|e| (-e / kt).exp()).collect();
    ComplexMatrix::from_real_diagonal(&w)
}

/// Right-hand side of the stationarity condition for `kind`:
/// `(2imkT/ħ)[q, G]` or `−(2imkT/ħ)[p, G]`.
pub fn stationarity_source(model: &OscillatorModel, kind: FrictionKind) -> ComplexMatrix {
    let g = boltzmann_operator(model);
    let pref = C64::new(0.0, 2.0 * model.mass * model.kt() / model.hbar);
    match kind {
        FrictionKind::MomentumChannel => commutator(&position_matrix(model), &g)
            .expect("same dim")
            .scale(pref),
        FrictionKind::PositionChannel => commutator(&momentum_matrix(model), &g)
            .expect("same dim")
            .scale(-pref),
    }
}

/// `Θ` from the Sylvester route.
pub fn sylvester_friction(model: &OscillatorModel, kind: FrictionKind) -> Result<ComplexMatrix> {
    sylvester_solve(&boltzmann_operator(model), &stationarity_source(model, kind))
}

/// `‖C − (ΘG + GΘ)‖_F`.
pub fn hermitian_stationarity_residual(
    model: &OscillatorModel,
    kind: FrictionKind,
    theta: &ComplexMatrix,
) -> f64 {
    let g = boltzmann_operator(model);
    let lhs = &theta.matmul(&g) + &g.matmul(theta);
    (&stationarity_source(model, kind) - &lhs).frobenius_norm()
}

/// `‖C − (Ξ†G + GΞ)‖_F`.
pub fn nonhermitian_stationarity_residual(
    model: &OscillatorModel,
    kind: FrictionKind,
    xi: &ComplexMatrix,
) -> f64 {
    let g = boltzmann_operator(model);
    let lhs = &xi.adjoint().matmul(&g) + &g.matmul(xi);
    (&stationarity_source(model, kind) - &lhs).frobenius_norm()
}

const BERNOULLI: [f64; 9] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
];

/// Highest order accepted by [`bernoulli_series_friction`].
pub const BERNOULLI_MAX_ORDER: usize = 8;

/// Coefficient `4(2^{2n+2} − 1) B_{2n+2} / (2n+2)!` of the `n`-th term.
pub fn bernoulli_coefficient(n: usize) -> f64 {
    let k = 2 * n + 2;
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    4.0 * (2f64.powi(k as i32) - 1.0) * BERNOULLI[n] / fact
}

/// Partial sum `Σ_{n≤order} c_n (kT)^{−2n} [H, base]_{2n}` built from
/// repeated commutators with `diag(energies)`. Only meaningful for small
/// `ħω/kT`; kept as a diagnostic.
pub fn bernoulli_series_friction(
    energies: &[f64],
    base: &ComplexMatrix,
    kt: f64,
    order: usize,
) -> Result<ComplexMatrix> {
    check_kernel_inputs(energies, base, kt)?;
    if order > BERNOULLI_MAX_ORDER {
        return Err(QsError::DomainError(format!(
            "series order {order} exceeds {BERNOULLI_MAX_ORDER}"
        )));
    }
    let h = ComplexMatrix::from_real_diagonal(energies);
    let mut nested = base.clone();
    let mut sum = base.scale_real(bernoulli_coefficient(0));
    for n in 1..=order {
        let once = commutator(&h, &nested)?;
        nested = commutator(&h, &once)?;
        let w = bernoulli_coefficient(n) / kt.powi(2 * n as i32);
        sum += &nested.scale_real(w);
    }
    Ok(sum.hermitian_part())
}

/// `Ξ_lj = base_lj · (e^x − 1)/x`, `x = (E_l − E_j)/kT`, assembled as
/// `base∘sinh(x)/x + base∘(cosh(x) − 1)/x`.
pub fn nonhermitian_friction(
    energies: &[f64],
    base: &ComplexMatrix,
    kt: f64,
) -> Result<ComplexMatrix> {
    check_kernel_inputs(energies, base, kt)?;
    let d = base.dim();
    let mut max_x: f64 = 0.0;
    for l in 0..d {
        for j in 0..d {
            if base[(l, j)].norm() > 0.0 {
                max_x = max_x.max(((energies[l] - energies[j]) / kt).abs());
            }
        }
    }
    if max_x > 700.0 {
        return Err(QsError::Overflow {
            norm: max_x,
            bound: 700.0,
        });
    }
    Ok(ComplexMatrix::from_fn(d, |l, j| {
        let x = (energies[l] - energies[j]) / kt;
        base[(l, j)] * (sinh_kernel(x) + cosh_kernel(x))
    }))
}

/// `Ξ^p = (imkT/ħ)(e^{H/kT} q e^{−H/kT} − q)` and
/// `Ξ^q = −(imkT/ħ)(e^{H/kT} p e^{−H/kT} − p)`.
pub fn nonhermitian_friction_closed_form(
    model: &OscillatorModel,
    kind: FrictionKind,
) -> Result<ComplexMatrix> {
    let kt = model.kt();
    let energies = model.energies();
    let emax = energies.iter().cloned().fold(0.0, f64::max);
    if emax / kt > 700.0 {
        return Err(QsError::Overflow {
            norm: emax / kt,
            bound: 700.0,
        });
    }
    let h = hamiltonian(model);
    let es = hermitian_eigendecompose(&h)?;
    let up = es.map(|x| (x / kt).exp())?;
    let down = es.map(|x| (-x / kt).exp())?;
    let (op, sign) = match kind {
        FrictionKind::MomentumChannel => (position_matrix(model), 1.0),
        FrictionKind::PositionChannel => (momentum_matrix(model), -1.0),
    };
    let conj = up.matmul(&op).matmul(&down);
    Ok((&conj - &op).scale(C64::new(0.0, sign * model.mass * kt / model.hbar)))
}

/// The four friction operators of the oscillator from the kernel routes.
#[derive(Clone, Debug)]
pub struct FrictionSet {
    pub theta_p: ComplexMatrix,
    pub theta_q: ComplexMatrix,
    pub xi_p: ComplexMatrix,
    pub xi_q: ComplexMatrix,
}

impl FrictionSet {
    pub fn new(model: &OscillatorModel) -> Result<Self> {
        let e = model.energies();
        let kt = model.kt();
        let bp = friction_base(model, FrictionKind::MomentumChannel);
        let bq = friction_base(model, FrictionKind::PositionChannel);
        Ok(Self {
            theta_p: spectral_friction_hermitian(&e, &bp, kt)?,
            theta_q: spectral_friction_hermitian(&e, &bq, kt)?,
            xi_p: nonhermitian_friction(&e, &bp, kt)?,
            xi_q: nonhermitian_friction(&e, &bq, kt)?,
        })
    }
}

pub fn relative_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm() / a.frobenius_norm().max(b.frobenius_norm()).max(f64::MIN_POSITIVE)
}
