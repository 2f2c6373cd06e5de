//! Classical Hamilton–Langevin dynamics of one oscillator degree of freedom,
//! with friction and noise in both the momentum and position equations.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{QsError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalParams {
    pub mass: f64,
    pub omega: f64,
    pub kb: f64,
    pub temperature: f64,
    pub beta_p: f64,
    pub beta_q: f64,
    pub force: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub n_trajectories: usize,
    pub seed: u64,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            kb: 1.0,
            temperature: 1.0,
            beta_p: 0.2,
            beta_q: 0.0,
            force: 0.0,
            dt: 0.01,
            n_steps: 4000,
            n_trajectories: 5000,
            seed: 0,
        }
    }
}

impl ClassicalParams {
    pub fn kt(&self) -> f64 {
        self.kb * self.temperature
    }

    /// `m²ω²β_q`.
    pub fn scaled_beta_q(&self) -> f64 {
        (self.mass * self.omega).powi(2) * self.beta_q
    }

    /// Largest `dt` allowed by `dt ≤ 0.01 / max(ω, β_p, m²ω²β_q)`.
    pub fn stable_dt(&self) -> f64 {
        0.01 / self.omega.max(self.beta_p).max(self.scaled_beta_q())
    }

    /// `10 / min(β_p, m²ω²β_q)` over the channels that are switched on.
    pub fn burn_in_time(&self) -> f64 {
        let rates = [self.beta_p, self.scaled_beta_q()];
        let slowest = rates
            .iter()
            .cloned()
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min);
        10.0 / slowest
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in_time() / self.dt - 1e-9).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("omega", self.omega),
            ("kb", self.kb),
            ("temperature", self.temperature),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(QsError::InvalidModel(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("beta_p", self.beta_p), ("beta_q", self.beta_q)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(QsError::InvalidModel(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.n_trajectories < 2 {
            return Err(QsError::InvalidModel("need at least 2 trajectories".into()));
        }
        if self.dt > self.stable_dt() * (1.0 + 1e-12) {
            warn!(
                "dt = {} exceeds the stability bound {}",
                self.dt,
                self.stable_dt()
            );
        }
        Ok(())
    }

    pub fn energy(&self, s: &PhaseState) -> f64 {
        0.5 * s.p * s.p / self.mass + 0.5 * self.mass * self.omega * self.omega * s.q * s.q
    }

    /// `d⟨E⟩/dt` integrand split as `(f p/m, 2β_p(kT/2 − K), β_q(kT m V'' − m V'²))`.
    pub fn energy_rates(&self, s: &PhaseState) -> (f64, f64, f64) {
        let m = self.mass;
        let w2 = self.omega * self.omega;
        let kt = self.kt();
        let work = self.force * s.p / m;
        let kin = 0.5 * s.p * s.p / m;
        let heat_p = 2.0 * self.beta_p * (0.5 * kt - kin);
        let vp = m * w2 * s.q;
        let heat_q = self.beta_q * (kt * m * m * w2 - m * vp * vp);
        (work, heat_p, heat_q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub q: f64,
    pub p: f64,
}

/// One Euler–Maruyama step. The increment variances `2kTβm dt` follow the
/// `2δ` noise normalization.
pub fn euler_maruyama_step(s: PhaseState, params: &ClassicalParams, n_p: f64, n_q: f64) -> PhaseState {
    let m = params.mass;
    let w2 = params.omega * params.omega;
    let dt = params.dt;
    let kt = params.kt();
    let p = s.p
        + (-m * w2 * s.q - params.beta_p * s.p + params.force) * dt
        + (2.0 * kt * params.beta_p * m * dt).sqrt() * n_p;
    let q = s.q
        + (s.p / m - params.beta_q * m * m * w2 * s.q) * dt
        + (2.0 * kt * params.beta_q * m * dt).sqrt() * n_q;
    PhaseState { q, p }
}

/// Where each trajectory starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassicalStart {
    /// `q = p = 0`.
    Origin,
    /// Exact Gibbs samples at `scale · T`, centred on `q = f/mω²`.
    Gibbs { scale: f64 },
    Point(PhaseState),
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// A mean with its standard error across trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    fn from(w: &Welford) -> Self {
        Self {
            value: w.mean(),
            stderr: w.stderr(),
        }
    }

    /// `|value − target| ≤ k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Moments over the post-burn-in part of every trajectory. Each sample is
/// one trajectory's time average, so the standard errors account for
/// autocorrelation within a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleStats {
    pub p: Welford,
    pub q: Welford,
    pub p2: Welford,
    pub q2: Welford,
    /// `(q − f/mω²)²`, the displacement about the force-shifted minimum.
    pub q2c: Welford,
    pub vp2: Welford,
    pub energy: Welford,
}

/// Ensemble means at the end of a window and the first-law residual over it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowRecord {
    pub t: f64,
    pub mean_e: Estimate,
    pub mean_p2_over_m: Estimate,
    pub mean_mw2q2: Estimate,
    /// `Δ⟨E⟩/Δt − ⟨rate⟩` over the window ending at `t`; zero for `t = 0`.
    pub first_law_residual: Estimate,
    /// `⟨2β_p(kT/2 − K)⟩` averaged over the window.
    pub heat_p: Estimate,
    /// `⟨β_q(kT m V'' − m V'²)⟩` averaged over the window.
    pub heat_q: Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub burn_in_steps: usize,
    pub windows: Vec<WindowRecord>,
    pub stationary: EnsembleStats,
    /// `(E(t_end) − E(t_burn) − ∫rate dt)/(t_end − t_burn)` per trajectory.
    pub energy_balance: Estimate,
    pub heat_p: Estimate,
    pub heat_q: Estimate,
}

struct TrajectorySummary {
    boundary: Vec<[f64; 3]>,
    window_residual: Vec<f64>,
    window_heat: Vec<(f64, f64)>,
    averages: [f64; 7],
    balance: f64,
    heat: (f64, f64),
}

fn initial_state(params: &ClassicalParams, start: ClassicalStart, rng: &mut ChaCha8Rng) -> PhaseState {
    match start {
        ClassicalStart::Origin => PhaseState { q: 0.0, p: 0.0 },
        ClassicalStart::Point(s) => s,
        ClassicalStart::Gibbs { scale } => {
            let kt = params.kt() * scale;
            let m = params.mass;
            let w2 = params.omega * params.omega;
            let np: f64 = StandardNormal.sample(rng);
            let nq: f64 = StandardNormal.sample(rng);
            PhaseState {
                q: params.force / (m * w2) + (kt / (m * w2)).sqrt() * nq,
                p: (kt * m).sqrt() * np,
            }
        }
    }
}

fn run_trajectory(
    params: &ClassicalParams,
    start: ClassicalStart,
    window_steps: usize,
    burn_in: usize,
    index: u64,
) -> TrajectorySummary {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index);
    let mut s = initial_state(params, start, &mut rng);
    let m = params.mass;
    let w2 = params.omega * params.omega;
    let dt = params.dt;

    let record = |s: &PhaseState| [params.energy(s), s.p * s.p / m, m * w2 * s.q * s.q];
    let mut boundary = vec![record(&s)];
    let mut window_residual = Vec::new();
    let mut window_heat = Vec::new();
    let mut e_window_start = params.energy(&s);
    let mut int_window = 0.0;
    let mut heat_window = (0.0, 0.0);

    let mut sums = [0.0; 7];
    let shift = params.force / (m * w2);
    let mut n_avg = 0usize;
    let mut e_burn = f64::NAN;
    let mut int_post = 0.0;
    let mut heat_post = (0.0, 0.0);

    for step in 0..params.n_steps {
        if step == burn_in {
            e_burn = params.energy(&s);
        }
        let (work, hp, hq) = params.energy_rates(&s);
        let rate = work + hp + hq;
        int_window += rate * dt;
        heat_window.0 += hp * dt;
        heat_window.1 += hq * dt;
        if step >= burn_in {
            int_post += rate * dt;
            heat_post.0 += hp * dt;
            heat_post.1 += hq * dt;
        }

        let n_p: f64 = StandardNormal.sample(&mut rng);
        let n_q: f64 = StandardNormal.sample(&mut rng);
        s = euler_maruyama_step(s, params, n_p, n_q);

        if step + 1 > burn_in {
            let vp = m * w2 * s.q;
            let dq = s.q - shift;
            let vals = [s.p, s.q, s.p * s.p, s.q * s.q, vp * vp, params.energy(&s), dq * dq];
            for (acc, v) in sums.iter_mut().zip(vals) {
                *acc += v;
            }
            n_avg += 1;
        }
        if (step + 1) % window_steps == 0 {
            let e = params.energy(&s);
            let span = window_steps as f64 * dt;
            window_residual.push((e - e_window_start - int_window) / span);
            window_heat.push((heat_window.0 / span, heat_window.1 / span));
            boundary.push(record(&s));
            e_window_start = e;
            int_window = 0.0;
            heat_window = (0.0, 0.0);
        }
    }
    let post_time = n_avg as f64 * dt;
    let averages = sums.map(|x| x / n_avg.max(1) as f64);
    let e_end = params.energy(&s);
    TrajectorySummary {
        boundary,
        window_residual,
        window_heat,
        averages,
        balance: (e_end - e_burn - int_post) / post_time,
        heat: (heat_post.0 / post_time, heat_post.1 / post_time),
    }
}

/// Runs the ensemble. Trajectory `i` draws from the ChaCha stream `i` of
/// `seed`, and the reduction walks trajectories in index order, so results
/// do not depend on the thread count.
pub fn run_ensemble(
    params: &ClassicalParams,
    start: ClassicalStart,
    window_steps: usize,
    burn_in_steps: usize,
) -> Result<EnsembleRun> {
    params.validate()?;
    if window_steps == 0 || burn_in_steps >= params.n_steps {
        return Err(QsError::InvalidModel(format!(
            "need window_steps >= 1 and burn-in {} below n_steps {}",
            burn_in_steps, params.n_steps
        )));
    }
    let summaries: Vec<TrajectorySummary> = (0..params.n_trajectories as u64)
        .into_par_iter()
        .map(|i| run_trajectory(params, start, window_steps, burn_in_steps, i))
        .collect();

    let n_windows = params.n_steps / window_steps;
    let mut windows = Vec::with_capacity(n_windows + 1);
    for k in 0..=n_windows {
        let mut acc = [Welford::default(); 3];
        let mut res = Welford::default();
        let mut hp = Welford::default();
        let mut hq = Welford::default();
        for s in &summaries {
            for (a, v) in acc.iter_mut().zip(s.boundary[k]) {
                a.push(v);
            }
            if k > 0 {
                res.push(s.window_residual[k - 1]);
                hp.push(s.window_heat[k - 1].0);
                hq.push(s.window_heat[k - 1].1);
            }
        }
        let zero = Estimate {
            value: 0.0,
            stderr: 0.0,
        };
        windows.push(WindowRecord {
            t: (k * window_steps) as f64 * params.dt,
            mean_e: Estimate::from(&acc[0]),
            mean_p2_over_m: Estimate::from(&acc[1]),
            mean_mw2q2: Estimate::from(&acc[2]),
            first_law_residual: if k > 0 { Estimate::from(&res) } else { zero },
            heat_p: if k > 0 { Estimate::from(&hp) } else { zero },
            heat_q: if k > 0 { Estimate::from(&hq) } else { zero },
        });
    }

    let mut stats = EnsembleStats::default();
    let mut balance = Welford::default();
    let mut heat_p = Welford::default();
    let mut heat_q = Welford::default();
    for s in &summaries {
        let a = s.averages;
        stats.p.push(a[0]);
        stats.q.push(a[1]);
        stats.p2.push(a[2]);
        stats.q2.push(a[3]);
        stats.vp2.push(a[4]);
        stats.energy.push(a[5]);
        stats.q2c.push(a[6]);
        balance.push(s.balance);
        heat_p.push(s.heat.0);
        heat_q.push(s.heat.1);
    }
    Ok(EnsembleRun {
        burn_in_steps,
        windows,
        stationary: stats,
        energy_balance: Estimate::from(&balance),
        heat_p: Estimate::from(&heat_p),
        heat_q: Estimate::from(&heat_q),
    })
}

/// Stationary residuals `⟨p²⟩/m − kT`, `mω²⟨q²⟩ − kT` and
/// `m⟨V'²⟩ − kT m⟨V''⟩`, with standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryResiduals {
    pub res_p2: Estimate,
    pub res_q2: Estimate,
    pub res_equi_r: Estimate,
}

impl StationaryResiduals {
    pub fn all_within(&self, k: f64) -> bool {
        [self.res_p2, self.res_q2, self.res_equi_r]
            .iter()
            .all(|e| e.within(0.0, k))
    }
}

/// Computes the residuals about the mean position `f/mω²`.
pub fn stationary_check(stats: &EnsembleStats, params: &ClassicalParams) -> Result<StationaryResiduals> {
    let m = params.mass;
    let w2 = params.omega * params.omega;
    let kt = params.kt();
    let res_p2 = Estimate {
        value: stats.p2.mean() / m - kt,
        stderr: stats.p2.stderr() / m,
    };
    let res_q2 = Estimate {
        value: m * w2 * stats.q2c.mean() - kt,
        stderr: m * w2 * stats.q2c.stderr(),
    };
    let vscale = m * (m * w2).powi(2);
    let res_equi_r = Estimate {
        value: vscale * stats.q2c.mean() - kt * m * m * w2,
        stderr: vscale * stats.q2c.stderr(),
    };
    let limit = 0.1 * kt;
    for e in [res_p2, res_q2] {
        if e.stderr > limit {
            return Err(QsError::InsufficientSamples {
                stderr: e.stderr,
                limit,
            });
        }
    }
    Ok(StationaryResiduals {
        res_p2,
        res_q2,
        res_equi_r,
    })
}

/// Mean first-law residual after burn-in.
pub fn energy_balance_check(run: &EnsembleRun) -> Estimate {
    run.energy_balance
}
