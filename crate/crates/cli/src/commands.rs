//! Subcommand implementations.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use m2hs_core::blowup::{density_floor, detect_blowup, predict_blowup, relative_period, uniform_times, verify_weak, WeakReport};
use m2hs_core::connectivity::{
    classify, mane_action, mane_witness, random_loop, shoot, Case, Classification, ConnectivityQuery,
    ShootOptions, MANE_CRITICAL,
};
use m2hs_core::m2hs::{evolve_pde_partial, geometric_solve_with, initial_geodesic, Field, Trajectory};
use m2hs_core::madelung::{madelung, LagrangianState};
use m2hs_core::sphere::SpherePoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Solver};
use crate::output::Output;
use crate::CliError;

fn solver_error(e: m2hs_core::Error) -> CliError {
    CliError::Breakdown(e.to_string())
}

fn write_trajectory(out: &mut Output, traj: &Trajectory, suffix: &str, extra: Option<(&str, Vec<String>)>) -> Result<(), CliError> {
    out.csv(&format!("fields_u{suffix}.csv"), &traj.field_csv(Field::U))?;
    out.csv(&format!("fields_rho{suffix}.csv"), &traj.field_csv(Field::Rho))?;
    let mut diag = traj.diagnostics_csv();
    if let Some((name, column)) = extra {
        diag = append_column(&diag, name, &column);
    }
    out.csv(&format!("diagnostics{suffix}.csv"), &diag)
}

fn append_column(csv: &str, name: &str, column: &[String]) -> String {
    let mut out = String::new();
    for (k, line) in csv.lines().enumerate() {
        let cell = if k == 0 { name } else { column.get(k - 1).map_or("", String::as_str) };
        let _ = writeln!(out, "{line},{cell}");
    }
    out
}

fn max_u_diff(a: &Trajectory, b: &Trajectory) -> Vec<String> {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let d = x.u.remainder().iter().zip(y.u.remainder()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            format!("{d}")
        })
        .collect()
}

pub fn solve(cfg: &ExperimentConfig, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let st = cfg.initial_state()?;
    let mut out = Output::create(dir, resolved)?;
    let mut breakdown = None;
    let pde = if matches!(cfg.solver, Solver::Pde | Solver::Both) {
        let (traj, err) = evolve_pde_partial(&st, &cfg.pde_options()).map_err(solver_error)?;
        breakdown = err;
        Some(traj)
    } else {
        None
    };
    let geo = if matches!(cfg.solver, Solver::Geometric | Solver::Both) {
        let times = pde.as_ref().map_or_else(|| cfg.output_times(), |p| p.times.clone());
        Some(geometric_solve_with(&st, &times, &cfg.geometric_options()).map_err(solver_error)?)
    } else {
        None
    };
    match (&geo, &pde) {
        (Some(g), Some(p)) => {
            let diff = max_u_diff(g, p);
            write_trajectory(&mut out, g, "_geometric", Some(("max_abs_u_geo_minus_pde", diff.clone())))?;
            write_trajectory(&mut out, p, "_pde", Some(("max_abs_u_geo_minus_pde", diff)))?;
        }
        (Some(g), None) => write_trajectory(&mut out, g, "_geometric", None)?,
        (None, Some(p)) => write_trajectory(&mut out, p, "_pde", None)?,
        (None, None) => unreachable!("solver selector covers both"),
    }
    out.manifest("solve", resolved)?;
    match breakdown {
        // the geometric solution covers the breakdown in "both" mode
        Some(e) if cfg.solver == Solver::Pde => Err(solver_error(e)),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct BlowupOutput {
    occurs: bool,
    reeb_degenerate: bool,
    witnesses_x: Vec<f64>,
    first_time: Option<f64>,
    detected_time: Option<f64>,
    time_agreement: Option<f64>,
    min_phi_x_bound: Option<f64>,
}

pub fn blowup(cfg: &ExperimentConfig, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let st = cfg.initial_state()?;
    let rep = predict_blowup(&st).map_err(solver_error)?;
    let mut detected = None;
    let mut bound = None;
    if let Some(t_star) = rep.first_time {
        let times = uniform_times(1.5 * t_star, 600);
        let traj = geometric_solve_with(&st, &times, &cfg.geometric_options()).map_err(solver_error)?;
        detected = detect_blowup(&traj, cfg.tolerances.detect).map_err(solver_error)?;
    } else {
        // |γ(t, x)|² is periodic in t with the relative period
        let rg = initial_geodesic(&st).map_err(solver_error)?;
        bound = Some(match rg.as_ref().and_then(|g| g.e2.as_ref().and(relative_period(g)).map(|p| (g, p))) {
            Some((g, period)) => density_floor(g, period, 4000).0,
            None => 1.0,
        });
    }
    let agreement = rep.first_time.zip(detected).map(|(a, b)| (a - b).abs());
    let body = BlowupOutput {
        occurs: rep.occurs,
        reeb_degenerate: rep.reeb_degenerate,
        witnesses_x: rep.witnesses_x.clone(),
        first_time: rep.first_time,
        detected_time: detected,
        time_agreement: agreement,
        min_phi_x_bound: bound,
    };
    let mut out = Output::create(dir, resolved)?;
    out.json("blowup.json", &body)?;
    out.manifest("blowup", resolved)?;
    if rep.occurs && !agreement.is_some_and(|a| a <= cfg.tolerances.detect) {
        return Err(CliError::Verification(format!(
            "predicted blow-up at {:?} but detection gave {detected:?}",
            rep.first_time
        )));
    }
    Ok(())
}

fn verification_failure(rep: &WeakReport) -> CliError {
    CliError::Verification(format!(
        "weak solution checks failed: conservation {}, continuity {}, bounded {}, residual {}",
        rep.conservation_ok, rep.continuity_ok, rep.bounded_ok, rep.residual_ok
    ))
}

pub fn continue_weak(cfg: &ExperimentConfig, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let st = cfg.initial_state()?;
    let traj = geometric_solve_with(&st, &cfg.output_times(), &cfg.geometric_options()).map_err(solver_error)?;
    let rep = verify_weak(&traj, &cfg.verify).map_err(solver_error)?;
    let mut out = Output::create(dir, resolved)?;
    let weak: Vec<String> = traj.weak.iter().map(|w| u8::from(*w).to_string()).collect();
    write_trajectory(&mut out, &traj, "", Some(("weak", weak)))?;
    out.json("trajectory.json", &traj)?;
    out.json("verification.json", &rep)?;
    out.manifest("continue", resolved)?;
    if rep.passed {
        Ok(())
    } else {
        Err(verification_failure(&rep))
    }
}

/// Re-verifies a stored trajectory.
pub fn verify_file(cfg: &ExperimentConfig, path: &Path, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Value::Object(map) = &mut value {
        map.remove("config_sha256");
    }
    let traj: Trajectory = serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    traj.check_consistent().map_err(|e| CliError::Verification(format!("{}: {e}", path.display())))?;
    let rep = verify_weak(&traj, &cfg.verify).map_err(|e| CliError::Verification(e.to_string()))?;
    let mut out = Output::create(dir, resolved)?;
    out.json("verification.json", &rep)?;
    out.manifest("continue", resolved)?;
    if rep.passed {
        Ok(())
    } else {
        Err(verification_failure(&rep))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ConnectOutput {
    classification: Case,
    h_re: f64,
    h_im: f64,
    threshold: Option<f64>,
    found: bool,
    #[serde(rename = "T")]
    t: Option<f64>,
    residual: Option<f64>,
    evaluations: usize,
    lagrangian: bool,
}

pub fn connect(cfg: &ExperimentConfig, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let c = &cfg.connect;
    let k = c.k.ok_or_else(|| CliError::Config("connect needs an energy k".into()))?;
    let (p0, p1) = match (&c.q0, &c.q1) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Config("connect needs both q0 and q1".into())),
    };
    let invalid = |e: m2hs_core::Error| CliError::Config(format!("invalid state: {e}"));
    let (q0, q1): (SpherePoint, SpherePoint) = if c.lagrangian {
        let (l0, l1): (LagrangianState, LagrangianState) = (read_json(p0)?, read_json(p1)?);
        (madelung(&l0).map_err(invalid)?, madelung(&l1).map_err(invalid)?)
    } else {
        (read_json(p0)?, read_json(p1)?)
    };
    let query = ConnectivityQuery::new(q0, q1, k).map_err(invalid)?;
    let class: Classification = classify(&query).map_err(invalid)?;
    let opts = ShootOptions { tol_connect: cfg.tolerances.tol_connect, ..c.search };
    let body = if class.case == Case::AtManeEmpty {
        ConnectOutput {
            classification: class.case,
            h_re: class.h.re,
            h_im: class.h.im,
            threshold: class.threshold,
            found: false,
            t: None,
            residual: None,
            evaluations: 0,
            lagrangian: c.lagrangian,
        }
    } else {
        let r = shoot(&query, &opts).map_err(solver_error)?;
        ConnectOutput {
            classification: class.case,
            h_re: class.h.re,
            h_im: class.h.im,
            threshold: class.threshold,
            found: r.found,
            t: Some(r.t),
            residual: Some(r.residual),
            evaluations: r.evaluations,
            lagrangian: c.lagrangian,
        }
    };
    let mut out = Output::create(dir, resolved)?;
    out.json("connect.json", &body)?;
    out.manifest("connect", resolved)
}

pub fn mane(cfg: &ExperimentConfig, dir: &Path, resolved: &Value) -> Result<(), CliError> {
    let m = &cfg.mane;
    if !(m.k.is_finite() && m.k > 0.0) || m.loops == 0 {
        return Err(CliError::Config("mane needs k > 0 and at least one loop".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut actions = Vec::with_capacity(m.loops);
    for _ in 0..m.loops {
        let lp = random_loop(m.n, m.steps, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
        actions.push(mane_action(&lp, m.k));
    }
    let min = actions.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = actions.iter().sum::<f64>() / actions.len() as f64;
    let witness = if m.k < MANE_CRITICAL {
        let lp = mane_witness(m.n, 64, m.k).map_err(solver_error)?;
        Some(mane_action(&lp, m.k))
    } else {
        None
    };
    let certificate = match witness {
        Some(w) => w < 0.0 && (w - 4.0 * PI * (m.k - MANE_CRITICAL)).abs() < 1e-8,
        None => min >= -1e-8,
    };
    let body = json!({
        "k": m.k,
        "loops": m.loops,
        "seed": cfg.seed,
        "min": min,
        "mean": mean,
        "all_positive": min > 0.0,
        "witness_action": witness,
        "certificate_pass": certificate,
    });
    let mut out = Output::create(dir, resolved)?;
    out.json("mane.json", &body)?;
    out.manifest("mane", resolved)?;
    if certificate {
        Ok(())
    } else {
        Err(CliError::Verification(format!("action certificate failed at k = {}", m.k)))
    }
}
