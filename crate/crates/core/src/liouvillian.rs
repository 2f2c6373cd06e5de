//! Generators of the damped-oscillator master equations, the optical master
//! equation mapping, and complete-positivity diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{QsError, Result};
use crate::friction::{cosh_kernel, sinh_kernel, tanh_kernel, FrictionSet};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, Superoperator, C64};
use crate::oscillator::{
    hamiltonian, ladder_operators, momentum_matrix, position_matrix, OscillatorModel,
};

/// Decay rate and thermal occupation of the optical master equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QomeParams {
    pub gamma0: f64,
    pub nbar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Unitary,
    FullHermitian,
    FullNonHermitian,
    MomentumOnlyHermitian,
    MomentumOnlyNonHermitian,
    CaldeiraLeggett,
    Qome(QomeParams),
}

impl ModelKind {
    /// The five dissipative models compared side by side.
    pub const COMPARED: [ModelKind; 5] = [
        ModelKind::FullHermitian,
        ModelKind::FullNonHermitian,
        ModelKind::MomentumOnlyHermitian,
        ModelKind::MomentumOnlyNonHermitian,
        ModelKind::CaldeiraLeggett,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Unitary => "unitary",
            ModelKind::FullHermitian => "full-hermitian",
            ModelKind::FullNonHermitian => "full-nonhermitian",
            ModelKind::MomentumOnlyHermitian => "momentum-only-hermitian",
            ModelKind::MomentumOnlyNonHermitian => "momentum-only-nonhermitian",
            ModelKind::CaldeiraLeggett => "caldeira-leggett",
            ModelKind::Qome(_) => "qome",
        }
    }

    pub fn is_nonhermitian(&self) -> bool {
        matches!(
            self,
            ModelKind::FullNonHermitian | ModelKind::MomentumOnlyNonHermitian
        )
    }

    /// Whether the position channel is switched off regardless of `beta_q`.
    pub fn momentum_only(&self) -> bool {
        matches!(
            self,
            ModelKind::MomentumOnlyHermitian
                | ModelKind::MomentumOnlyNonHermitian
                | ModelKind::CaldeiraLeggett
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Parses the tags of [`ModelKind::tag`]. `qome` parses with zeroed
/// parameters; callers fill them in from [`qome_mapping`].
impl FromStr for ModelKind {
    type Err = QsError;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "unitary" => ModelKind::Unitary,
            "full-hermitian" => ModelKind::FullHermitian,
            "full-nonhermitian" => ModelKind::FullNonHermitian,
            "momentum-only-hermitian" => ModelKind::MomentumOnlyHermitian,
            "momentum-only-nonhermitian" => ModelKind::MomentumOnlyNonHermitian,
            "caldeira-leggett" => ModelKind::CaldeiraLeggett,
            "qome" => ModelKind::Qome(QomeParams {
                gamma0: 0.0,
                nbar: 0.0,
            }),
            _ => return Err(QsError::InvalidModel(format!("unknown model kind '{s}'"))),
        })
    }
}

/// Adds `c · (X ↦ [A, B X + X C])`.
fn add_commutator_with_sum(
    l: &mut Superoperator,
    c: C64,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cc: &ComplexMatrix,
) {
    let id = ComplexMatrix::identity(a.dim());
    l.add_sandwich(c, &a.matmul(b), &id);
    l.add_sandwich(c, a, cc);
    l.add_sandwich(-c, b, a);
    l.add_sandwich(-c, &id, &cc.matmul(a));
}

/// `X ↦ (1/iħ)[H, X]`.
pub fn hamiltonian_part(model: &OscillatorModel) -> Superoperator {
    let mut l = Superoperator::zeros(model.dim);
    l.add_commutator(C64::new(0.0, -1.0 / model.hbar), &hamiltonian(model));
    l
}

/// `X ↦ −(f/iħ)[q, X]`.
pub fn force_part(model: &OscillatorModel) -> Superoperator {
    let mut l = Superoperator::zeros(model.dim);
    if model.force != 0.0 {
        l.add_commutator(
            C64::new(0.0, model.force / model.hbar),
            &position_matrix(model),
        );
    }
    l
}

/// Assembles `L` with `d vec(ρ)/dt = L vec(ρ)`.
///
/// The Hermitian kinds use `(β_p/2iħ)[q, {Θ^p, ρ}]` and
/// `−(β_q/2iħ)[p, {Θ^q, ρ}]` next to the double commutators
/// `−(kTβm/ħ²)[q,[q,ρ]]` and `−(kTβm/ħ²)[p,[p,ρ]]`. The non-Hermitian
/// kinds replace `{Θ, ρ}` by `Ξ†ρ + ρΞ`; the anti-Hermitian part of `Ξ`
/// supplies the extra `cosh` double commutators, so they are not added
/// separately. The momentum-only kinds and Caldeira–Leggett drop the
/// position channel; Caldeira–Leggett uses `Θ^p = p`.
pub fn build_liouvillian(model: &OscillatorModel, kind: ModelKind) -> Result<Superoperator> {
    model.validate()?;
    if model.dim < 2 {
        return Err(QsError::InvalidModel("dim must be >= 2".into()));
    }
    let dissipative = !matches!(kind, ModelKind::Unitary | ModelKind::Qome(_));
    if dissipative && model.beta_p <= 0.0 {
        return Err(QsError::InvalidModel(format!(
            "{kind} needs beta_p > 0, got {}",
            model.beta_p
        )));
    }

    let mut l = if let ModelKind::Qome(qp) = kind {
        qome_generator(model, qp)?
    } else {
        hamiltonian_part(model)
    };
    if model.force != 0.0 {
        l = &l + &force_part(model);
    }
    if !dissipative {
        return Ok(l);
    }

    let hb = model.hbar;
    let kt = model.kt();
    let m = model.mass;
    let q = position_matrix(model);
    let p = momentum_matrix(model);
    let fr = FrictionSet::new(model)?;

    let bp = model.beta_p;
    l.add_double_commutator(C64::new(-kt * bp * m / (hb * hb), 0.0), &q);
    let cp = C64::new(0.0, -bp / (2.0 * hb));
    match kind {
        ModelKind::CaldeiraLeggett => add_commutator_with_sum(&mut l, cp, &q, &p, &p),
        k if k.is_nonhermitian() => {
            add_commutator_with_sum(&mut l, cp, &q, &fr.xi_p.adjoint(), &fr.xi_p)
        }
        _ => add_commutator_with_sum(&mut l, cp, &q, &fr.theta_p, &fr.theta_p),
    }

    let bq = if kind.momentum_only() { 0.0 } else { model.beta_q };
    if bq > 0.0 {
        l.add_double_commutator(C64::new(-kt * bq * m / (hb * hb), 0.0), &p);
        let cq = C64::new(0.0, bq / (2.0 * hb));
        if kind.is_nonhermitian() {
            add_commutator_with_sum(&mut l, cq, &p, &fr.xi_q.adjoint(), &fr.xi_q);
        } else {
            add_commutator_with_sum(&mut l, cq, &p, &fr.theta_q, &fr.theta_q);
        }
    }
    Ok(l)
}

/// `−iω[a†a, ρ] + (γ/2)(n̄+1)(2aρa† − {a†a, ρ}) + (γ/2)n̄(2a†ρa − {aa†, ρ})`.
fn qome_generator(model: &OscillatorModel, qp: QomeParams) -> Result<Superoperator> {
    if !(qp.gamma0 > 0.0 && qp.nbar >= 0.0) {
        return Err(QsError::InvalidModel(format!(
            "qome needs gamma0 > 0 and nbar >= 0, got {} and {}",
            qp.gamma0, qp.nbar
        )));
    }
    let d = model.dim;
    let (a, ad) = ladder_operators(model);
    let id = ComplexMatrix::identity(d);
    let num = ad.matmul(&a);
    let anti = a.matmul(&ad);
    let mut l = Superoperator::zeros(d);
    l.add_commutator(C64::new(0.0, -model.omega), &num);
    let down = 0.5 * qp.gamma0 * (qp.nbar + 1.0);
    let up = 0.5 * qp.gamma0 * qp.nbar;
    l.add_sandwich(C64::new(2.0 * down, 0.0), &a, &ad);
    l.add_sandwich(C64::new(-down, 0.0), &num, &id);
    l.add_sandwich(C64::new(-down, 0.0), &id, &num);
    l.add_sandwich(C64::new(2.0 * up, 0.0), &ad, &a);
    l.add_sandwich(C64::new(-up, 0.0), &anti, &id);
    l.add_sandwich(C64::new(-up, 0.0), &id, &anti);
    Ok(l)
}

/// `n̄ = 1/(e^{ħω/kT} − 1)` and `γ₀ = 2β_p tanh(ξ)/ξ`, defined only when
/// `β_p = m²ω²β_q`.
pub fn qome_mapping(model: &OscillatorModel) -> Result<QomeParams> {
    let bp = model.beta_p;
    let sq = model.scaled_beta_q();
    if (bp - sq).abs() > 1e-12 * bp.abs().max(sq.abs()).max(1.0) {
        return Err(QsError::OffBisector {
            beta_p: bp,
            scaled_beta_q: sq,
        });
    }
    Ok(QomeParams {
        gamma0: 2.0 * bp * tanh_kernel(model.xi()),
        nbar: 1.0 / model.eta().exp_m1(),
    })
}

/// Time step used for complete-positivity certificates by default.
pub const CHOI_DEFAULT_DT: f64 = PI / 200.0;

/// Minimum eigenvalue of the Choi matrix of `exp(L dt)`.
///
/// With column stacking, the image of the matrix unit `E_ij` is column
/// `i + j d` of `P = exp(L dt)`, and the Choi matrix is
/// `C = Σ_ij E_ij ⊗ P(E_ij)`, i.e. `C[i d + a, j d + b] = P[a + b d, i + j d]`.
///
/// For `d = 2` and the identity map, `P = I₄` and
///
/// ```text
/// C = [[1, 0, 0, 1],
///      [0, 0, 0, 0],
///      [0, 0, 0, 0],
///      [1, 0, 0, 1]]
/// ```
///
/// which has eigenvalues `{2, 0, 0, 0}`.
pub fn choi_min_eigenvalue(l: &Superoperator, dt: f64) -> Result<f64> {
    let p = l.exp(dt)?;
    let ev = hermitian_eigenvalues(&choi_matrix(&p))?;
    Ok(ev[0])
}

/// Choi matrix of a map given as a superoperator, Hermitian-symmetrized.
pub fn choi_matrix(p: &Superoperator) -> ComplexMatrix {
    let d = p.op_dim();
    let pm = p.matrix();
    let c = ComplexMatrix::from_fn(d * d, |r, s| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (s / d, s % d);
        pm[(a + b * d, i + j * d)]
    });
    c.hermitian_part()
}

/// Diffusion coefficients, drift parameters and the Lindblad-form verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladReport {
    pub d_pp: f64,
    pub d_qq: f64,
    pub d_pq: f64,
    pub lambda: f64,
    pub mu: f64,
    pub xi: f64,
    pub x: f64,
    pub x1: f64,
    pub x2: f64,
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub choi_min_eigenvalue: f64,
}

impl LindbladReport {
    pub fn analytic_verdict(&self) -> bool {
        self.cond1 && self.cond2 && self.cond3
    }
}

/// `((cosh ξ − 1)/sinh ξ)²` and `((cosh ξ + 1)/sinh ξ)²`.
pub fn lindblad_interval(xi: f64) -> (f64, f64) {
    let (c, s) = (xi.cosh(), xi.sinh());
    (((c - 1.0) / s).powi(2), ((c + 1.0) / s).powi(2))
}

/// Fills a [`LindbladReport`] with the Choi certificate at
/// [`CHOI_DEFAULT_DT`].
pub fn lindblad_region_check(model: &OscillatorModel, kind: ModelKind) -> Result<LindbladReport> {
    lindblad_region_check_with_dt(model, kind, CHOI_DEFAULT_DT)
}

pub fn lindblad_region_check_with_dt(
    model: &OscillatorModel,
    kind: ModelKind,
    dt: f64,
) -> Result<LindbladReport> {
    let mut report = lindblad_parameters(model, kind)?;
    let l = build_liouvillian(model, kind)?;
    report.choi_min_eigenvalue = choi_min_eigenvalue(&l, dt)?;
    Ok(report)
}

/// The analytic part of [`lindblad_region_check`]; `choi_min_eigenvalue` is
/// left as NaN. Usable where the generator itself is too stiff to
/// exponentiate (the non-Hermitian kernels grow like `e^η`).
pub fn lindblad_parameters(model: &OscillatorModel, kind: ModelKind) -> Result<LindbladReport> {
    model.validate()?;
    let (kernel, extra) = match kind {
        ModelKind::FullHermitian | ModelKind::MomentumOnlyHermitian => {
            (tanh_kernel(model.xi()), 0.0)
        }
        ModelKind::CaldeiraLeggett => (1.0, 0.0),
        ModelKind::FullNonHermitian | ModelKind::MomentumOnlyNonHermitian => {
            let eta = model.eta();
            (sinh_kernel(eta), 0.5 * model.mass * model.hbar * model.omega * cosh_kernel(eta))
        }
        _ => {
            return Err(QsError::InvalidModel(format!(
                "no region test for {kind}"
            )))
        }
    };
    let kt = model.kt();
    let m = model.mass;
    let bp = model.beta_p;
    let bq = if kind.momentum_only() { 0.0 } else { model.beta_q };
    let sq = m * m * model.omega * model.omega * bq;
    let d_pp = kt * bp * m + extra * bp;
    let d_qq = kt * bq * m + extra * bq;
    let d_pq = 0.0;
    let lambda = 0.5 * (bp + sq) * kernel;
    let mu = 0.5 * (bp - sq) * kernel;
    let (x1, x2) = lindblad_interval(model.xi());
    Ok(LindbladReport {
        d_pp,
        d_qq,
        d_pq,
        lambda,
        mu,
        xi: model.xi(),
        x: if sq > 0.0 { bp / sq } else { f64::INFINITY },
        x1,
        x2,
        cond1: d_pp > 0.0,
        cond2: d_qq > 0.0,
        cond3: d_pp * d_qq - d_pq * d_pq >= 0.25 * lambda * lambda * model.hbar * model.hbar,
        choi_min_eigenvalue: f64::NAN,
    })
}
