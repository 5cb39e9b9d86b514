//! Blow-up of smooth solutions and their conservative continuation.
//!
//! Along the closed-form geodesic each point evolves as
//! `γ(t, x) = A(x)e^{iθ₁t} + B(x)e^{iθ₂t}`, so the wave function can only
//! vanish where `|A(x)| = |B(x)|`. With `f₀ = 1` this is exactly the set where
//! `ρ₀(x) = θ₁ + θ₂ = s`, and the zero occurs when the two phases are opposite.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RealGridFunction, TrigInterpolant};
use crate::m2hs::{
    conserved, geometric_solve_with, initial_geodesic, residual_m2hs, EulerianState,
    GeometricOptions, Trajectory,
};
use crate::sphere::{min_modulus, ReducedGeodesic};
use crate::util::minimize_scalar;

/// Default threshold on `min|γ|²` for [`detect_blowup`].
pub const DETECT_TOL: f64 = 1e-6;
/// `|ρ₀ − s|` below which a grazing point counts as a witness.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub occurs: bool,
    pub reeb_degenerate: bool,
    pub witnesses_x: Vec<f64>,
    pub first_time: Option<f64>,
}

/// Points where `ρ₀ = s`: sign changes between nodes, refined by bisection on
/// the interpolant, plus grazing local minima of `|ρ₀ − s|`.
pub fn witness_points(rho0: &RealGridFunction, s: f64) -> Vec<f64> {
    let n = rho0.n();
    let h = 1.0 / n as f64;
    let d: Vec<f64> = rho0.full_values().iter().map(|r| r - s).collect();
    let interp = rho0.interpolant();
    let g = |x: f64| interp.eval(x).re - s;
    let mut out = Vec::new();
    for j in 0..n {
        let k = (j + 1) % n;
        let x0 = j as f64 * h;
        if d[j] == 0.0 {
            out.push(x0);
            continue;
        }
        if d[j] * d[k] < 0.0 {
            let (mut lo, mut hi) = (x0, x0 + h);
            let mut glo = d[j];
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            out.push((0.5 * (lo + hi)).rem_euclid(1.0));
            continue;
        }
        let prev = d[(j + n - 1) % n];
        let is_local_min = d[j].abs() <= prev.abs() && d[j].abs() <= d[k].abs() && prev * d[j] > 0.0 && d[j] * d[k] > 0.0;
        if is_local_min {
            let (x, v) = minimize_scalar(|x| g(x).powi(2), x0 - h, x0 + h, 1e-14);
            if v.sqrt() < WITNESS_TOL {
                out.push(x.rem_euclid(1.0));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// First positive time at which `A e^{iθ₁t} + B e^{iθ₂t}` vanishes, for
/// `|A| = |B|`.
fn vanishing_time(rg: &ReducedGeodesic, a: Complex64, b: Complex64) -> Option<f64> {
    if rg.degenerate {
        // (A + tB)e^{iθt} = 0 at t = −A/B when that is real and positive
        if b.norm() == 0.0 {
            return None;
        }
        let t = -a / b;
        return (t.re > 0.0 && t.im.abs() < 1e-9 * (1.0 + t.re)).then_some(t.re);
    }
    let phase = (a * b.conj()).arg();
    let mut t = (PI - phase).rem_euclid(TAU) / rg.gap();
    if t == 0.0 {
        t = TAU / rg.gap();
    }
    Some(t)
}

pub fn predict_blowup(state0: &EulerianState) -> Result<BlowupReport> {
    let rg = initial_geodesic(state0)?;
    let reeb = BlowupReport {
        occurs: false,
        reeb_degenerate: true,
        witnesses_x: Vec::new(),
        first_time: None,
    };
    let Some(rg) = rg else {
        return Ok(reeb);
    };
    if rg.e2.is_none() {
        return Ok(reeb);
    }
    let witnesses = witness_points(&state0.rho, state0.s);
    let (a, b) = rg.pointwise_coefficients();
    let (ia, ib) = (TrigInterpolant::new(a.values()), TrigInterpolant::new(b.values()));
    let first_time = witnesses
        .iter()
        .filter_map(|&x| vanishing_time(&rg, ia.eval(x), ib.eval(x)))
        .min_by(f64::total_cmp);
    Ok(BlowupReport {
        occurs: first_time.is_some(),
        reeb_degenerate: false,
        witnesses_x: witnesses,
        first_time,
    })
}

/// `min_x |γ(t, x)|²` refined in `x`.
pub fn min_density(rg: &ReducedGeodesic, t: f64) -> f64 {
    min_modulus(rg, t).0.powi(2)
}

/// Sampled `min_{t ∈ [0, t_end]} min_x |γ|²`, with its time.
pub fn density_floor(rg: &ReducedGeodesic, t_end: f64, samples: usize) -> (f64, f64) {
    let samples = samples.max(2);
    (0..=samples)
        .map(|k| {
            let t = t_end * k as f64 / samples as f64;
            (min_density(rg, t), t)
        })
        .fold((f64::INFINITY, 0.0), |acc, c| if c.0 < acc.0 { c } else { acc })
}

/// Period of `|γ(t, x)|²` in `t`, `2π/(θ₁ − θ₂)`.
pub fn relative_period(rg: &ReducedGeodesic) -> Option<f64> {
    (!rg.degenerate && rg.gap() > 0.0).then(|| TAU / rg.gap())
}

/// First time at which `min φ′` comes within `tol` of zero.
///
/// Local minima of the sampled `min φ′` are refined on the closed form; the
/// refined argmin is reported when the refined minimum is below `tol`.
pub fn detect_blowup(traj: &Trajectory, tol: f64) -> Result<Option<f64>> {
    if traj.lagrangian.is_none() {
        return Err(Error::Precondition("trajectory carries no Lagrangian data".into()));
    }
    let Some(rg) = &traj.geodesic else {
        return Ok(None);
    };
    let m: Vec<f64> = traj.min_phi_x.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    for k in 1..m.len().saturating_sub(1) {
        if !(m[k] <= m[k - 1] && m[k] <= m[k + 1]) {
            continue;
        }
        let (t, v) = minimize_scalar(|t| min_density(rg, t), traj.times[k - 1], traj.times[k + 1], 1e-13);
        if v < tol {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Global conservative weak solution on the requested times.
pub fn weak_continue(state0: &EulerianState, times: &[f64]) -> Result<Trajectory> {
    geometric_solve_with(state0, times, &GeometricOptions::default())
}

/// Thresholds for [`verify_weak`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakOptions {
    /// Times with `min φ′` above this are resolved well enough for Eulerian
    /// checks.
    pub regular_min_phi_x: f64,
    pub conservation_tol: f64,
    pub residual_tol: f64,
}

impl Default for WeakOptions {
    fn default() -> Self {
        Self {
            regular_min_phi_x: 0.25,
            conservation_tol: 1e-6,
            residual_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub regular_times: usize,
    pub singular_times: usize,
    /// Drift of the Lagrangian `c²`, `δ` at times without zeros.
    pub drift_c2: f64,
    pub drift_delta: f64,
    /// `max |∫u_x² + ∫ρ² − 4c²|` at regular times.
    pub energy_identity_defect: f64,
    /// `max ‖u(t_{k+1}) − u(t_k)‖/Δt` and the a priori bound `12c² + 8|s|c`.
    pub lipschitz_ratio: f64,
    pub lipschitz_bound: f64,
    /// `max ¼(‖u_x‖² + ‖ρ‖²)` at regular times.
    pub max_energy: f64,
    pub max_residual: f64,
    pub conservation_ok: bool,
    pub continuity_ok: bool,
    pub bounded_ok: bool,
    pub residual_ok: bool,
    pub passed: bool,
}

/// Checks the defining properties of a conservative weak solution along a
/// trajectory: energy identity and conservation, Lipschitz continuity in L²,
/// uniform H¹ bound, and the equation residual away from singular times.
pub fn verify_weak(traj: &Trajectory, opts: &WeakOptions) -> Result<WeakReport> {
    traj.check_consistent()?;
    if traj.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: traj.len() });
    }
    let d0 = traj.diagnostics[0];
    let c2 = d0.c2;
    let s = traj.states[0].s;
    let regular: Vec<bool> = traj
        .min_phi_x
        .iter()
        .zip(&traj.weak)
        .map(|(m, w)| !w && m.is_none_or(|m| m > opts.regular_min_phi_x))
        .collect();

    let mut drift_c2: f64 = 0.0;
    let mut drift_delta: f64 = 0.0;
    for (d, w) in traj.diagnostics.iter().zip(&traj.weak) {
        if !w {
            drift_c2 = drift_c2.max((d.c2 - c2).abs());
            drift_delta = drift_delta.max((d.delta - d0.delta).abs());
        }
    }
    let mut energy_identity_defect: f64 = 0.0;
    let mut max_energy: f64 = 0.0;
    for (st, _) in traj.states.iter().zip(&regular).filter(|(_, r)| **r) {
        let q = conserved(st);
        energy_identity_defect = energy_identity_defect.max((4.0 * q.c2 - 4.0 * c2).abs());
        drift_delta = drift_delta.max((q.delta - d0.delta).abs());
        max_energy = max_energy.max(q.c2);
    }
    drift_c2 = drift_c2.max(energy_identity_defect / 4.0);

    let mut lipschitz_ratio: f64 = 0.0;
    for k in 1..traj.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let a = traj.states[k].u.remainder();
        let b = traj.states[k - 1].u.remainder();
        let l2 = (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
        lipschitz_ratio = lipschitz_ratio.max(l2 / dt);
    }
    let c = c2.sqrt();
    let lipschitz_bound = 12.0 * c2 + 8.0 * s.abs() * c;

    let residuals = residual_m2hs(traj)?;
    let max_residual = residuals
        .iter()
        .filter(|r| regular[r.index - 1] && regular[r.index] && regular[r.index + 1])
        .map(|r| r.residual_u.max(r.residual_rho))
        .fold(0.0, f64::max);

    let regular_times = regular.iter().filter(|r| **r).count();
    let conservation_ok = drift_c2 < opts.conservation_tol && drift_delta < opts.conservation_tol && energy_identity_defect < 4.0 * opts.conservation_tol;
    let continuity_ok = lipschitz_ratio.is_finite() && lipschitz_ratio <= lipschitz_bound;
    let bounded_ok = max_energy <= c2 + opts.conservation_tol;
    let residual_ok = max_residual < opts.residual_tol;
    Ok(WeakReport {
        regular_times,
        singular_times: traj.weak.iter().filter(|w| **w).count(),
        drift_c2,
        drift_delta,
        energy_identity_defect,
        lipschitz_ratio,
        lipschitz_bound,
        max_energy,
        max_residual,
        conservation_ok,
        continuity_ok,
        bounded_ok,
        residual_ok,
        passed: conservation_ok && continuity_ok && bounded_ok && residual_ok,
    })
}

/// Uniform time grid `0, t_end/steps, …, t_end`.
pub fn uniform_times(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(n: usize, f: impl Fn(f64) -> f64) -> RealGridFunction {
        RealGridFunction::from_fn(n, f).unwrap()
    }

    fn breaking(n: usize) -> EulerianState {
        EulerianState::new(real(n, |x| 0.2 * (TAU * x).sin()), real(n, |x| 1.0 + 0.5 * (TAU * x).cos()), 1.0).unwrap()
    }

    #[test]
    fn witnesses_of_cosine_profile() {
        let rho = real(64, |x| 1.0 + 0.5 * (TAU * x).cos());
        let w = witness_points(&rho, 1.0);
        assert_eq!(w.len(), 2);
        assert!((w[0] - 0.25).abs() < 1e-12 && (w[1] - 0.75).abs() < 1e-12);
        assert!(witness_points(&rho, 3.0).is_empty());
        // grazing: ρ₀ − s = ½(1 − cos 2π(x − 0.3)) ≥ 0 touches zero off-grid
        let graze = real(64, |x| 1.0 + 0.5 * (1.0 - (TAU * (x - 0.3)).cos()));
        let w = witness_points(&graze, 1.0);
        assert_eq!(w.len(), 1);
        assert!((w[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn predicted_time_matches_dense_scan() {
        let st = breaking(128);
        let rep = predict_blowup(&st).unwrap();
        assert!(rep.occurs && !rep.reeb_degenerate);
        let t_star = rep.first_time.unwrap();
        let rg = initial_geodesic(&st).unwrap().unwrap();
        // oracle: dense scan of min |γ| followed by golden-section refinement
        let m = 4000;
        let horizon = 1.2 * t_star;
        let (mut best, mut bt) = (f64::INFINITY, 0.0);
        for k in 1..=m {
            let t = horizon * k as f64 / m as f64;
            let v = min_density(&rg, t);
            if v < best {
                best = v;
                bt = t;
            }
        }
        let h = horizon / m as f64;
        let (mut lo, mut hi) = (bt - h, bt + h);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let (a, b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if min_density(&rg, a) < min_density(&rg, b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - t_star).abs() < 1e-6, "{oracle} {t_star}");
        assert!(min_modulus(&rg, t_star).0 < 1e-6);
    }

    #[test]
    fn witnesses_have_balanced_coefficients() {
        let st = breaking(64);
        let rg = initial_geodesic(&st).unwrap().unwrap();
        let (a, b) = rg.pointwise_coefficients();
        let (ia, ib) = (TrigInterpolant::new(a.values()), TrigInterpolant::new(b.values()));
        for x in predict_blowup(&st).unwrap().witnesses_x {
            assert!((ia.eval(x).norm() - ib.eval(x).norm()).abs() < 1e-12);
        }
        assert!((rg.theta1 + rg.theta2 - st.s).abs() < 1e-14);
    }

    #[test]
    fn no_blowup_outside_range() {
        let mut st = breaking(64);
        st.s = 3.0;
        let rep = predict_blowup(&st).unwrap();
        assert!(!rep.occurs && rep.witnesses_x.is_empty());
        let rg = initial_geodesic(&st).unwrap().unwrap();
        let (floor, _) = density_floor(&rg, 10.0, 2000);
        assert!(floor > 0.1, "{floor}");
    }

    #[test]
    fn reeb_data_never_breaks() {
        let st = EulerianState::new(RealGridFunction::zeros(32).unwrap(), real(32, |_| 2.0), 2.0).unwrap();
        let rep = predict_blowup(&st).unwrap();
        assert!(rep.reeb_degenerate && !rep.occurs && rep.first_time.is_none());
        let traj = weak_continue(&st, &uniform_times(20.0, 200)).unwrap();
        assert_eq!(detect_blowup(&traj, DETECT_TOL).unwrap(), None);
    }

    #[test]
    fn report_json_shape() {
        let rep = predict_blowup(&breaking(32)).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["occurs", "reeb_degenerate", "witnesses_x", "first_time"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn detection_matches_prediction() {
        let st = breaking(128);
        let t_star = predict_blowup(&st).unwrap().first_time.unwrap();
        let traj = weak_continue(&st, &uniform_times(2.0 * t_star, 200)).unwrap();
        let found = detect_blowup(&traj, DETECT_TOL).unwrap().unwrap();
        assert!((found - t_star).abs() < 1e-6, "{found} {t_star}");
    }

    #[test]
    fn detection_requires_lagrangian_data() {
        let st = breaking(32);
        let pde = crate::m2hs::evolve_pde(&st, 1e-2, 0.1).unwrap();
        assert!(detect_blowup(&pde, DETECT_TOL).is_err());
    }

    #[test]
    fn geodesic_leaves_the_boundary_again() {
        let st = breaking(128);
        let t_star = predict_blowup(&st).unwrap().first_time.unwrap();
        let rg = initial_geodesic(&st).unwrap().unwrap();
        assert!(min_density(&rg, t_star) < 1e-12);
        assert!(min_density(&rg, t_star + 0.05) > 1e-5);
    }

    #[test]
    fn strict_continuation_equals_geometric_solve() {
        let mut st = breaking(64);
        st.s = 3.0;
        let times = uniform_times(1.0, 10);
        let a = weak_continue(&st, &times).unwrap();
        let b = crate::m2hs::geometric_solve(&st, &times).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smooth_trajectory_passes_verification() {
        let mut st = breaking(128);
        st.s = 3.0;
        let traj = weak_continue(&st, &uniform_times(1.0, 1000)).unwrap();
        let rep = verify_weak(&traj, &WeakOptions { residual_tol: 1e-4, ..WeakOptions::default() }).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn zeroed_density_fails_conservation() {
        let st = breaking(128);
        let t_star = predict_blowup(&st).unwrap().first_time.unwrap();
        let mut traj = weak_continue(&st, &uniform_times(2.0 * t_star, 400)).unwrap();
        for (t, s) in traj.times.iter().zip(traj.states.iter_mut()) {
            if *t > t_star {
                s.rho = RealGridFunction::zeros(128).unwrap();
            }
        }
        let rep = verify_weak(&traj, &WeakOptions::default()).unwrap();
        assert!(!rep.conservation_ok && !rep.passed);
    }
}
