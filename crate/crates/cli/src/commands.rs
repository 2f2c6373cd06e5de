use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qsthermo::classical::{run_ensemble, stationary_check};
use qsthermo::friction::FrictionSet;
use qsthermo::linalg::ComplexMatrix;
use qsthermo::liouvillian::{
    build_liouvillian, lindblad_interval, lindblad_parameters, lindblad_region_check, qome_mapping,
    LindbladReport, ModelKind,
};
use qsthermo::oscillator::equilibrium_energy;
use qsthermo::propagator::evolve;
use qsthermo::thermo::thermo_series;
use qsthermo::QsError;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{FrictionOperator, Initial, RunConfig, SweepAxis};
use crate::error::CliError;

pub const QUANTUM_HEADER: &str = "t,energy,entropy,ds_dt,dsp_dt,dsf_dt,heat_rate,work_rate,free_energy,rel_entropy,min_eig,neg_count,purity,trace_err,clamped";
pub const LINDBLAD_HEADER: &str =
    "xi,beta_p,beta_q,D_pp,D_qq,lambda,mu,x,x1,x2,cond1,cond2,cond3,choi_min_eig";
pub const CLASSICAL_HEADER: &str = "t,mean_E,mean_E_se,mean_p2_over_m,mean_p2_over_m_se,mean_mw2q2,mean_mw2q2_se,first_law_residual,first_law_residual_se,heat_p,heat_p_se,heat_q,heat_q_se";

/// Collects CSV text behind a `# <effective config>` comment line.
struct Csv {
    text: String,
    precision: usize,
}

impl Csv {
    fn new(cfg: &RunConfig, header: &str) -> Self {
        let mut text = String::new();
        writeln!(text, "# {}", cfg.to_json()).unwrap();
        writeln!(text, "{header}").unwrap();
        Self {
            text,
            precision: cfg.emit_precision,
        }
    }

    fn float(&self, x: f64) -> String {
        format!("{:.*e}", self.precision - 1, x)
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("qsthermo-out"))
}

pub fn quantum_file_name(cfg: &RunConfig) -> String {
    format!("{}_{}.csv", cfg.model.to_ascii_lowercase(), cfg.initial.label())
}

#[derive(Clone, Debug)]
pub struct QuantumSummary {
    pub final_energy: f64,
    pub target_energy: f64,
    pub max_negative_dsp: f64,
    pub negative_eigenvalue_steps: usize,
    pub path: PathBuf,
}

impl QuantumSummary {
    pub fn print(&self, cfg: &RunConfig) {
        println!("[quantum-run]");
        println!("model = {}", cfg.model);
        println!("initial = {}", cfg.initial.label());
        println!("final_energy = {:.10}", self.final_energy);
        println!("target_energy = {:.10}", self.target_energy);
        println!("max_negative_dsp_dt = {:.3e}", self.max_negative_dsp);
        println!("negative_eigenvalue_steps = {}", self.negative_eigenvalue_steps);
        println!("output = {}", self.path.display());
    }
}

pub fn quantum_run(cfg: &RunConfig, dir: &Path) -> Result<QuantumSummary, CliError> {
    cfg.validate()?;
    let model = cfg.oscillator();
    let kind = cfg.model_kind()?;
    let l = build_liouvillian(&model, kind)?;
    let rho0 = cfg.initial.condition().density_matrix(&model)?;
    let traj = evolve(&l, &rho0, cfg.dt, cfg.steps)?;
    let records = thermo_series(&traj, &l, &model)?;

    let mut csv = Csv::new(cfg, QUANTUM_HEADER);
    for r in &records {
        let mut cells: Vec<String> = [
            r.t,
            r.energy,
            r.entropy,
            r.ds_dt,
            r.dsp_dt,
            r.dsf_dt,
            r.heat_rate,
            r.work_rate,
            r.free_energy,
            r.rel_entropy,
            r.min_eig,
        ]
        .iter()
        .map(|&x| csv.float(x))
        .collect();
        cells.push(r.neg_count.to_string());
        cells.push(csv.float(r.purity));
        cells.push(csv.float(r.trace_err));
        cells.push(flag(r.clamped));
        csv.row(&cells);
    }
    let path = write_file(dir, &quantum_file_name(cfg), &csv.text)?;
    Ok(QuantumSummary {
        final_energy: records.last().map_or(f64::NAN, |r| r.energy),
        target_energy: equilibrium_energy(&model),
        max_negative_dsp: records.iter().map(|r| (-r.dsp_dt).max(0.0)).fold(0.0, f64::max),
        negative_eigenvalue_steps: records.iter().filter(|r| r.neg_count > 0).count(),
        path,
    })
}

fn region_report(cfg: &RunConfig, kind: ModelKind, xi: f64, bp: f64, bq: f64) -> Result<LindbladReport, QsError> {
    let model = qsthermo::oscillator::OscillatorModel {
        beta_p: bp,
        beta_q: bq,
        ..cfg.oscillator()
    }
    .with_xi(xi);
    match lindblad_region_check(&model, kind) {
        // no certificate exists once exp(L dt) outgrows the norm bound
        Err(QsError::Overflow { .. }) => lindblad_parameters(&model, kind),
        other => other,
    }
}

pub fn lindblad_check(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let grid = &cfg.lindblad;
    if grid.beta_p.is_empty() || grid.beta_q.is_empty() || grid.xi.is_empty() || grid.kinds.is_empty() {
        return Err(CliError::Config("lindblad grid axes must be nonempty".into()));
    }
    let positive = grid.beta_p.iter().chain(&grid.beta_q).chain(&grid.xi);
    if positive.clone().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Config("lindblad grid values must be > 0".into()));
    }
    let kinds = grid
        .kinds
        .iter()
        .map(|k| k.parse::<ModelKind>().map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(f64, f64, f64)> = grid
        .xi
        .iter()
        .flat_map(|&xi| {
            grid.beta_p
                .iter()
                .flat_map(move |&bp| grid.beta_q.iter().map(move |&bq| (xi, bp, bq)))
        })
        .collect();

    let mut paths = Vec::new();
    let mut verdicts: Vec<Vec<bool>> = Vec::new();
    println!("[lindblad-check]");
    for kind in &kinds {
        let reports = cells
            .par_iter()
            .map(|&(xi, bp, bq)| region_report(cfg, *kind, xi, bp, bq))
            .collect::<Result<Vec<_>, _>>()?;
        let mut csv = Csv::new(cfg, LINDBLAD_HEADER);
        let mut mismatches = 0;
        for (&(xi, bp, bq), r) in cells.iter().zip(&reports) {
            let certified = r.choi_min_eigenvalue >= -1e-9;
            if !r.choi_min_eigenvalue.is_nan() && certified != r.analytic_verdict() {
                mismatches += 1;
            }
            let mut row: Vec<String> = [xi, bp, bq, r.d_pp, r.d_qq, r.lambda, r.mu, r.x, r.x1, r.x2]
                .iter()
                .map(|&v| csv.float(v))
                .collect();
            row.extend([flag(r.cond1), flag(r.cond2), flag(r.cond3)]);
            row.push(csv.float(r.choi_min_eigenvalue));
            csv.row(&row);
        }
        verdicts.push(reports.iter().map(|r| r.cond3).collect());
        println!(
            "{}: cells = {}, analytic_lindblad = {}, choi_disagreements = {}",
            kind.tag(),
            reports.len(),
            reports.iter().filter(|r| r.analytic_verdict()).count(),
            mismatches
        );
        paths.push(write_file(dir, &format!("lindblad_{}.csv", kind.tag()), &csv.text)?);
    }
    if verdicts.len() > 1 {
        let diff = verdicts[1..]
            .iter()
            .map(|v| v.iter().zip(&verdicts[0]).filter(|(a, b)| a != b).count())
            .sum::<usize>();
        println!("cond3_disagreements_across_kinds = {diff}");
    }

    let mut csv = Csv::new(cfg, "xi,X,Y1,Y2");
    let n = grid.curve_points.max(2);
    for &xi in &grid.xi {
        let (x1, x2) = lindblad_interval(xi);
        println!("xi = {xi}: x1 = {x1:.9}, x2 = {x2:.9}, x1*x2 = {:.12}", x1 * x2);
        for k in 0..n {
            let x = grid.curve_x_max * k as f64 / (n - 1) as f64;
            let row = [xi, x, x1 * x, x2 * x].map(|v| csv.float(v));
            csv.row(&row);
        }
    }
    paths.push(write_file(dir, "lindblad_boundaries.csv", &csv.text)?);
    for p in &paths {
        println!("output = {}", p.display());
    }
    Ok(paths)
}

#[derive(Clone, Copy, Debug)]
pub struct QomeReport {
    pub gamma0: f64,
    pub nbar: f64,
    pub distance: f64,
    pub relative: f64,
}

pub fn qome_compare(cfg: &RunConfig) -> Result<QomeReport, CliError> {
    cfg.validate()?;
    let model = cfg.oscillator();
    let q = qome_mapping(&model)?;
    let lq = build_liouvillian(&model, ModelKind::Qome(q))?;
    let lh = build_liouvillian(&model, ModelKind::FullHermitian)?;
    let distance = (&lq - &lh).frobenius_norm();
    let report = QomeReport {
        gamma0: q.gamma0,
        nbar: q.nbar,
        distance,
        relative: distance / lh.frobenius_norm(),
    };
    println!("[qome-compare]");
    println!("gamma0 = {:.10}", report.gamma0);
    println!("nbar = {:.10}", report.nbar);
    println!("frobenius_distance = {:.3e}", report.distance);
    println!("relative_distance = {:.3e}", report.relative);
    println!("within_1e-12 = {}", report.relative <= 1e-12);
    Ok(report)
}

pub fn classical_run(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    let mut cfg = cfg.clone();
    cfg.resolve_classical()?;
    if !(1..=17).contains(&cfg.emit_precision) {
        return Err(CliError::Config("emit_precision must lie in 1..=17".into()));
    }
    let params = cfg.classical_params();
    let burn_in = cfg.classical.burn_in_steps.unwrap_or(0);
    let run = run_ensemble(&params, cfg.classical_start(), cfg.classical.window_steps, burn_in)?;

    let mut csv = Csv::new(&cfg, CLASSICAL_HEADER);
    for w in &run.windows {
        let mut row = vec![csv.float(w.t)];
        for e in [w.mean_e, w.mean_p2_over_m, w.mean_mw2q2, w.first_law_residual, w.heat_p, w.heat_q] {
            row.push(csv.float(e.value));
            row.push(csv.float(e.stderr));
        }
        csv.row(&row);
    }
    let path = write_file(dir, "classical.csv", &csv.text)?;

    println!("[classical-run]");
    println!(
        "trajectories = {}, steps = {}, dt = {:.6e}, burn_in_steps = {}",
        params.n_trajectories, params.n_steps, params.dt, burn_in
    );
    let res = stationary_check(&run.stationary, &params)?;
    for (name, e) in [
        ("res_p2", res.res_p2),
        ("res_q2", res.res_q2),
        ("res_equi_r", res.res_equi_r),
        ("first_law_residual", run.energy_balance),
        ("heat_p", run.heat_p),
        ("heat_q", run.heat_q),
    ] {
        println!("{name} = {:.6e} +/- {:.3e}", e.value, e.stderr);
    }
    println!("output = {}", path.display());
    Ok(path)
}

fn matrix_csv(cfg: &RunConfig, m: &ComplexMatrix) -> String {
    let d = m.dim();
    let header: Vec<String> = (0..d).flat_map(|j| [format!("re_{j}"), format!("im_{j}")]).collect();
    let mut csv = Csv::new(cfg, &header.join(","));
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .flat_map(|j| [csv.float(m[(i, j)].re), csv.float(m[(i, j)].im)])
            .collect();
        csv.row(&row);
    }
    csv.text
}

pub fn friction_dump(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let set = FrictionSet::new(&cfg.oscillator())?;
    let all = [
        (FrictionOperator::ThetaP, "theta_p", &set.theta_p),
        (FrictionOperator::ThetaQ, "theta_q", &set.theta_q),
        (FrictionOperator::XiP, "xi_p", &set.xi_p),
        (FrictionOperator::XiQ, "xi_q", &set.xi_q),
    ];
    let mut paths = Vec::new();
    println!("[friction-dump]");
    for (op, name, m) in all {
        if cfg.friction.operator == FrictionOperator::All || cfg.friction.operator == op {
            let p = write_file(dir, &format!("friction_{name}.csv"), &matrix_csv(cfg, m))?;
            println!("{name} = {}", p.display());
            paths.push(p);
        }
    }
    Ok(paths)
}

#[derive(Serialize)]
struct ManifestCell {
    value: String,
    hash: String,
    file: Option<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    axis: SweepAxis,
    cells: Vec<ManifestCell>,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_json().as_bytes()))
}

pub fn sweep(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    let axis = cfg
        .sweep
        .axis
        .ok_or_else(|| CliError::Config("sweep needs an axis (model, f or s)".into()))?;
    let cells: Vec<(String, RunConfig)> = match axis {
        SweepAxis::Model => cfg
            .sweep
            .models
            .iter()
            .map(|m| (m.clone(), RunConfig { model: m.clone(), ..cfg.clone() }))
            .collect(),
        SweepAxis::F => cfg
            .sweep
            .f_values
            .iter()
            .map(|&f| (f.to_string(), RunConfig { initial: Initial::MixedPowerLaw(f), ..cfg.clone() }))
            .collect(),
        SweepAxis::S => cfg
            .sweep
            .s_values
            .iter()
            .map(|&s| (s.to_string(), RunConfig { initial: Initial::PureLevel(s), ..cfg.clone() }))
            .collect(),
    };
    if cells.is_empty() {
        return Err(CliError::Config("sweep axis has no values".into()));
    }
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|(_, c)| quantum_run(c, dir))
        .collect();

    println!("[sweep]");
    let mut manifest = Manifest {
        axis,
        cells: Vec::new(),
    };
    let mut failed = 0;
    for ((value, c), outcome) in cells.iter().zip(outcomes) {
        let (file, error) = match outcome {
            Ok(s) => {
                println!("{value}: final_energy = {:.10}", s.final_energy);
                (Some(quantum_file_name(c)), None)
            }
            Err(e) => {
                failed += 1;
                println!("{value}: {e}");
                (None, Some(e.to_string()))
            }
        };
        manifest.cells.push(ManifestCell {
            value: value.clone(),
            hash: config_hash(c),
            file,
            error,
        });
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = write_file(dir, "manifest.json", &text)?;
    println!("manifest = {}", path.display());
    if failed > 0 {
        return Err(CliError::PartialSweep {
            failed,
            total: cells.len(),
        });
    }
    Ok(path)
}
