//! Connecting points of the sphere by magnetic geodesics of prescribed energy,
//! and the free-period action of the magnetic Lagrangian
//! `L(q, v) = ½|v|² − α_q(v)`.
//!
//! The critical value of this system is `c = ½‖α‖²_∞ = 1/8`. Energy `k`
//! corresponds to speed `√(2k)` at unit strength.

use std::f64::consts::{PI, TAU};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner, spectral_derivative, ComplexGridFunction};
use crate::madelung::{madelung, LagrangianState};
use crate::sphere::{ReducedGeodesic, SpherePoint, SPHERE_TOL};
use crate::util::nelder_mead;

/// Mañé critical value.
pub const MANE_CRITICAL: f64 = 0.125;
/// Band around the trichotomy thresholds reported as indeterminate.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Closure and sphere tolerance for loops.
pub const LOOP_TOL: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityQuery {
    pub q0: SpherePoint,
    pub q1: SpherePoint,
    pub k: f64,
}

impl ConnectivityQuery {
    pub fn new(q0: SpherePoint, q1: SpherePoint, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Precondition(format!("energy must be positive, got {k}")));
        }
        if q0.n() != q1.n() {
            return Err(Error::SizeMismatch(q0.n(), q1.n()));
        }
        Ok(Self { q0, q1, k })
    }

    /// `⟨q₀, q₁⟩`.
    pub fn pairing(&self) -> Complex64 {
        inner(self.q0.f().values(), self.q1.f().values())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    AboveMane,
    #[serde(rename = "AtMane_Connectable")]
    AtManeConnectable,
    #[serde(rename = "AtMane_Empty")]
    AtManeEmpty,
    #[serde(rename = "Below_Inside")]
    BelowInside,
    #[serde(rename = "Below_Boundary_Indeterminate")]
    BelowBoundaryIndeterminate,
    #[serde(rename = "Below_Empty")]
    BelowEmpty,
}

impl Case {
    /// `Some(true)` if connecting geodesics exist, `None` if undecided.
    pub fn connectable(self) -> Option<bool> {
        match self {
            Case::AboveMane | Case::AtManeConnectable | Case::BelowInside => Some(true),
            Case::AtManeEmpty | Case::BelowEmpty => Some(false),
            Case::BelowBoundaryIndeterminate => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub case: Case,
    pub h: Complex64,
    /// `√(1 − 8k)` below the critical value.
    pub threshold: Option<f64>,
}

/// Classification from `h = ⟨q₀, q₁⟩` and `k` alone.
pub fn classify_pairing(h: Complex64, k: f64) -> Result<Classification> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("energy must be positive, got {k}")));
    }
    let r = h.norm();
    let (case, threshold) = if k > MANE_CRITICAL {
        (Case::AboveMane, None)
    } else if k == MANE_CRITICAL {
        let case = if r > CLASSIFY_TOL { Case::AtManeConnectable } else { Case::AtManeEmpty };
        (case, None)
    } else {
        let thr = (1.0 - 8.0 * k).sqrt();
        let case = if r > thr + CLASSIFY_TOL {
            Case::BelowInside
        } else if r < thr - CLASSIFY_TOL {
            Case::BelowEmpty
        } else {
            Case::BelowBoundaryIndeterminate
        };
        (case, Some(thr))
    };
    Ok(Classification { case, h, threshold })
}

pub fn classify(query: &ConnectivityQuery) -> Result<Classification> {
    classify_pairing(query.pairing(), query.k)
}

pub fn classify_lagrangian(p0: &LagrangianState, p1: &LagrangianState, k: f64) -> Result<Classification> {
    let q = ConnectivityQuery::new(madelung(p0)?, madelung(p1)?, k)?;
    classify(&q)
}

/// Search budget for [`shoot`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    pub polar: usize,
    pub azimuth: usize,
    pub times: usize,
    /// Defaults to `8π / max(|2v − 1|, ½)`.
    pub t_max: Option<f64>,
    pub refine_starts: usize,
    pub refine_iters: u64,
    pub tol_connect: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            polar: 32,
            azimuth: 64,
            times: 256,
            t_max: None,
            refine_starts: 8,
            refine_iters: 4000,
            tol_connect: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub found: bool,
    pub rg: Option<ReducedGeodesic>,
    #[serde(rename = "T")]
    pub t: f64,
    pub residual: f64,
    pub evaluations: usize,
}

impl ShootingResult {
    pub fn require(self) -> Result<Self> {
        if self.found {
            Ok(self)
        } else {
            Err(Error::NotFound { residual_floor: self.residual })
        }
    }
}

fn direction(p: &[f64]) -> [f64; 3] {
    let (th, ph) = (p[0], p[1]);
    [th.cos(), th.sin() * ph.cos(), th.sin() * ph.sin()]
}

/// Initial coordinates `(1, 0)` and `v(ia, b + ic)` in the frame `{q₀, e₂}`.
fn frame_data(dir: [f64; 3], v: f64) -> ([Complex64; 2], [Complex64; 2], f64) {
    let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let b0 = [I * (v * dir[0]), Complex64::new(v * dir[1], v * dir[2])];
    (a0, b0, v * dir[0])
}

/// Connecting magnetic geodesic of energy `k` from `q₀` to `q₁`, searched in
/// the 3-sphere of `span_ℂ{q₀, q₁}`.
pub fn shoot(query: &ConnectivityQuery, opts: &ShootOptions) -> Result<ShootingResult> {
    let v = (2.0 * query.k).sqrt();
    let h = query.pairing();
    let q0 = query.q0.f();
    let rest = query.q1.f() - &(q0 * h);
    let beta = rest.norm();
    if beta < SPHERE_TOL {
        return Ok(shoot_colinear(query, h, v));
    }
    let e2 = &rest * (1.0 / beta);
    let target = [h, Complex64::new(beta, 0.0)];
    let t_max = opts.t_max.unwrap_or(8.0 * PI / (2.0 * v - 1.0).abs().max(0.5));
    let evals = AtomicUsize::new(0);
    let miss = |z: [Complex64; 2]| ((z[0] - target[0]).norm_sqr() + (z[1] - target[1]).norm_sqr()).sqrt();

    let (np, na, nt) = (opts.polar.max(1), opts.azimuth.max(1), opts.times.max(1));
    let mut cells: Vec<(f64, [f64; 3])> = (0..np * na)
        .into_par_iter()
        .map(|c| {
            let th = PI * (c / na) as f64 / np as f64 + 0.5 * PI / np as f64;
            let ph = TAU * (c % na) as f64 / na as f64;
            let (a0, b0, ct) = frame_data(direction(&[th, ph]), v);
            let rg = ReducedGeodesic::frameless(a0, b0, 1.0, v, ct);
            let mut best = (f64::INFINITY, [th, ph, 0.0]);
            for j in 1..=nt {
                let t = t_max * j as f64 / nt as f64;
                let r = miss(rg.coordinates(t)[0]);
                if r < best.0 {
                    best = (r, [th, ph, t]);
                }
            }
            best
        })
        .collect();
    evals.fetch_add(np * na * nt, Ordering::Relaxed);
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));

    let cost = |p: &[f64]| {
        evals.fetch_add(1, Ordering::Relaxed);
        let (a0, b0, ct) = frame_data(direction(p), v);
        let rg = ReducedGeodesic::frameless(a0, b0, 1.0, v, ct);
        miss(rg.coordinates(p[2].abs())[0]).powi(2)
    };
    let starts = opts.refine_starts.max(1).min(cells.len());
    let polished: Vec<(Vec<f64>, f64)> = cells[..starts]
        .par_iter()
        .map(|(_, p)| {
            let step = [PI / np as f64, TAU / na as f64, t_max / nt as f64].iter().cloned().fold(f64::INFINITY, f64::min);
            nelder_mead(cost, p, step, opts.refine_iters, 1e-30)
        })
        .collect();
    let (best, _) = polished
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");

    let t = best[2].abs();
    let (a0, b0, ct) = frame_data(direction(&best), v);
    let rg = ReducedGeodesic::from_coordinates(q0.clone(), Some(e2), a0, b0, 1.0, v, ct);
    let residual = (&rg.fields(t).0 - query.q1.f()).norm();
    let found = residual < opts.tol_connect;
    Ok(ShootingResult {
        found,
        rg: found.then_some(rg),
        t,
        residual,
        evaluations: evals.into_inner(),
    })
}

/// `q₁ = e^{iϑ}q₀`: the Reeb-type circles `e^{±ivt}q₀` reach `q₁` at
/// `t = (±ϑ mod 2π)/v`.
fn shoot_colinear(query: &ConnectivityQuery, h: Complex64, v: f64) -> ShootingResult {
    let phase = h.arg();
    let time = |p: f64| {
        let t = p.rem_euclid(TAU) / v;
        if t == 0.0 {
            TAU / v
        } else {
            t
        }
    };
    let (tp, tm) = (time(phase), time(-phase));
    let (sign, t) = if tp <= tm { (1.0, tp) } else { (-1.0, tm) };
    let q0 = query.q0.f();
    let (a0, b0, ct) = frame_data([sign, 0.0, 0.0], v);
    let rg = ReducedGeodesic::from_coordinates(q0.clone(), None, a0, b0, 1.0, v, ct);
    let residual = (&rg.fields(t).0 - query.q1.f()).norm();
    ShootingResult {
        found: true,
        rg: Some(rg),
        t,
        residual,
        evaluations: 2,
    }
}

/// Closed loop `t ↦ γ(t)` sampled at `t_j = jT/M`, `j = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    points: Vec<ComplexGridFunction>,
    period: f64,
}

impl Loop {
    /// `M` must be even and at least 4.
    pub fn new(points: Vec<ComplexGridFunction>, period: f64) -> Result<Self> {
        let m = points.len().saturating_sub(1);
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::InsufficientSamples { needed: 5, got: points.len() });
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Precondition(format!("period must be positive, got {period}")));
        }
        let n = points[0].n();
        if let Some(p) = points.iter().find(|p| p.n() != n) {
            return Err(Error::SizeMismatch(n, p.n()));
        }
        let gap = (&points[m] - &points[0]).norm();
        if !(gap < LOOP_TOL) {
            return Err(Error::NotClosed { gap });
        }
        for p in &points {
            let defect = (p.norm_sqr() - 1.0).abs();
            if !(defect < LOOP_TOL) {
                return Err(Error::OffSphere { defect });
            }
        }
        Ok(Self { points, period })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points(&self) -> &[ComplexGridFunction] {
        &self.points
    }

    /// Number of time steps `M`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Spectral time derivative at `t_0, …, t_{M−1}`, projected to the
    /// tangent space.
    pub fn velocities(&self) -> Vec<ComplexGridFunction> {
        let m = self.steps();
        let n = self.points[0].n();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        let mut column = vec![Complex64::new(0.0, 0.0); m];
        for x in 0..n {
            for (j, c) in column.iter_mut().enumerate() {
                *c = self.points[j].values()[x];
            }
            let d = spectral_derivative(&column);
            for (j, dj) in d.into_iter().enumerate() {
                out[j][x] = dj / self.period;
            }
        }
        out.into_iter()
            .zip(&self.points)
            .map(|(v, p)| {
                let radial = inner(p.values(), &v).re;
                let v = v.iter().zip(p.values()).map(|(a, b)| a - b * radial).collect();
                ComplexGridFunction::from_vec_unchecked(v)
            })
            .collect()
    }

    /// Per-node values of `L + k`.
    pub fn action_density(&self, k: f64) -> Vec<f64> {
        self.velocities()
            .iter()
            .zip(&self.points)
            .map(|(v, p)| 0.5 * v.norm_sqr() - 0.5 * inner(p.values(), v.values()).im + k)
            .collect()
    }
}

/// `S_{L+k}(γ) = Σ_j Δt (½‖γ̇_j‖² − α(γ̇_j) + k)`.
pub fn mane_action(lp: &Loop, k: f64) -> f64 {
    let dt = lp.period / lp.steps() as f64;
    lp.action_density(k).iter().sum::<f64>() * dt
}

/// `γ(t, x) = e^{2πix}e^{it/2}` on `[0, 4π]`, with action `4π(k − 1/8)`.
pub fn mane_witness(n: usize, steps: usize, k: f64) -> Result<Loop> {
    if !(k < MANE_CRITICAL) {
        return Err(Error::Precondition(format!("witness needs k < 1/8, got {k}")));
    }
    let period = 4.0 * PI;
    let points = (0..=steps)
        .map(|j| {
            let t = period * j as f64 / steps as f64;
            ComplexGridFunction::from_fn(n, |x| Complex64::cis(TAU * x + 0.5 * t))
        })
        .collect::<Result<Vec<_>>>()?;
    Loop::new(points, period)
}

/// Band-limited random loop: modes `|j|, |m| ≤ 3` in `x` and `t`, normalized
/// at every time, with period in `[0.5, 20]`.
pub fn random_loop(n: usize, steps: usize, rng: &mut impl Rng) -> Result<Loop> {
    const B: i32 = 3;
    let period = rng.gen_range(0.5..20.0);
    let side = (2 * B + 1) as usize;
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); side]; side];
    for row in coeffs.iter_mut() {
        for c in row.iter_mut() {
            *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut points = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let tau = (j % steps) as f64 / steps as f64;
        let f = ComplexGridFunction::from_fn(n, |x| {
            let mut z = Complex64::new(0.0, 0.0);
            for (mi, row) in coeffs.iter().enumerate() {
                let wt = Complex64::cis(TAU * (mi as i32 - B) as f64 * tau);
                for (xi, c) in row.iter().enumerate() {
                    z += c * wt * Complex64::cis(TAU * (xi as i32 - B) as f64 * x);
                }
            }
            z
        })?;
        points.push(SpherePoint::normalized(f)?.into_inner());
    }
    Loop::new(points, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RealGridFunction;
    use crate::sphere::ode_residual;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: usize = 32;

    fn point(f: impl Fn(f64) -> Complex64) -> SpherePoint {
        SpherePoint::normalized(ComplexGridFunction::from_fn(N, f).unwrap()).unwrap()
    }

    /// `q₁ = h q₀ + √(1 − |h|²) w` with `w ⊥ q₀`.
    fn pair_with(h: Complex64, seed: u64) -> (SpherePoint, SpherePoint) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<Complex64> = (0..6).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let q0 = point(|x| Complex64::new(1.0, 0.0) + c[0] * Complex64::cis(TAU * x) + c[1] * Complex64::cis(-2.0 * TAU * x));
        let raw = ComplexGridFunction::from_fn(N, |x| c[2] + c[3] * Complex64::cis(TAU * x) + c[4] * Complex64::cis(3.0 * TAU * x) + c[5]).unwrap();
        let w = &raw - &(q0.f() * inner(q0.f().values(), raw.values()));
        let w = &w * (1.0 / w.norm());
        let q1 = &(q0.f() * h) + &(&w * (1.0 - h.norm_sqr()).sqrt());
        (q0, SpherePoint::normalized(q1).unwrap())
    }

    #[test]
    fn trichotomy_examples() {
        let c = |h: f64, k: f64| classify_pairing(Complex64::new(h, 0.0), k).unwrap().case;
        assert_eq!(c(0.0, 0.2), Case::AboveMane);
        assert_eq!(c(0.0, 0.125), Case::AtManeEmpty);
        assert_eq!(c(0.3, 0.125), Case::AtManeConnectable);
        assert_eq!(c(0.9, 0.1), Case::BelowInside);
        assert_eq!(c(0.3, 0.1), Case::BelowEmpty);
        assert_eq!(c(0.2f64.sqrt(), 0.1), Case::BelowBoundaryIndeterminate);
        let thr = classify_pairing(Complex64::new(0.3, 0.0), 0.1).unwrap().threshold.unwrap();
        assert!((thr - 0.2f64.sqrt()).abs() < 1e-15);
        assert!(classify_pairing(Complex64::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn case_names_in_json() {
        let c = classify_pairing(Complex64::new(0.0, 0.0), 0.125).unwrap();
        let v = serde_json::to_value(c).unwrap();
        assert_eq!(v["case"], "AtMane_Empty");
    }

    #[test]
    fn lagrangian_examples() {
        let id = LagrangianState::identity(N).unwrap();
        for k in [0.01, 0.125, 0.5] {
            assert_eq!(classify_lagrangian(&id, &id, k).unwrap().case.connectable(), Some(true));
        }
        let flipped = LagrangianState::new(RealGridFunction::identity(N).unwrap(), RealGridFunction::constant(N, TAU).unwrap()).unwrap();
        let c = classify_lagrangian(&id, &flipped, 0.05).unwrap();
        assert!((c.h + 1.0).norm() < 1e-12);
        // τ₁ = 4πx: Φ(p₁) = e^{2πix} ⊥ 1
        let wound = LagrangianState::new(RealGridFunction::identity(N).unwrap(), RealGridFunction::with_slope(2.0 * TAU, vec![0.0; N]).unwrap()).unwrap();
        assert_eq!(classify_lagrangian(&id, &wound, 0.125).unwrap().case, Case::AtManeEmpty);
    }

    #[test]
    fn shooting_above_critical_value() {
        let (q0, q1) = pair_with(Complex64::new(0.2, -0.1), 7);
        let q = ConnectivityQuery::new(q0, q1.clone(), 0.2).unwrap();
        let res = shoot(&q, &ShootOptions::default()).unwrap();
        assert!(res.found && res.residual < 1e-6, "{}", res.residual);
        let rg = res.rg.unwrap();
        assert!((rg.v - 0.4f64.sqrt()).abs() < 1e-15);
        assert!(ode_residual(&rg, res.t) < 1e-10);
        assert!((&rg.fields(res.t).0 - q1.f()).norm() < 1e-6);
    }

    #[test]
    fn reeb_orbit_is_found_by_phase_matching() {
        let q0 = point(|x| Complex64::new(1.0, 0.0) + 0.3 * Complex64::cis(TAU * x));
        let t0 = 0.7;
        let q1 = SpherePoint::new(q0.f() * Complex64::cis(2.0 * t0)).unwrap();
        let res = shoot(&ConnectivityQuery::new(q0, q1, 2.0).unwrap(), &ShootOptions::default()).unwrap();
        assert!(res.found && res.residual < 1e-12);
        assert!((res.t - t0).abs() < 1e-12);
    }

    #[test]
    fn shooting_fails_below_threshold() {
        let (q0, q1) = pair_with(Complex64::new(0.1, 0.15), 3);
        let q = ConnectivityQuery::new(q0, q1, 0.1).unwrap();
        assert_eq!(classify(&q).unwrap().case, Case::BelowEmpty);
        let opts = ShootOptions { polar: 16, azimuth: 32, times: 128, ..ShootOptions::default() };
        let res = shoot(&q, &opts).unwrap();
        assert!(!res.found && res.residual > 0.05, "{}", res.residual);
        assert!(matches!(res.require(), Err(Error::NotFound { .. })));
    }

    #[test]
    fn witness_actions() {
        for (k, want) in [(0.1, -PI / 10.0), (0.12, 4.0 * PI * (0.12 - 0.125))] {
            let lp = mane_witness(N, 64, k).unwrap();
            assert!((mane_action(&lp, k) - want).abs() < 1e-12);
        }
        let lp = mane_witness(N, 64, 0.1).unwrap();
        assert!(mane_action(&lp, 0.125).abs() < 1e-12);
        assert!(mane_witness(N, 64, 0.125).is_err());
    }

    #[test]
    fn constant_loop_costs_kt() {
        let q = point(|x| Complex64::new(1.0, 0.0) + 0.5 * Complex64::cis(TAU * x)).into_inner();
        let lp = Loop::new(vec![q; 9], 3.0).unwrap();
        assert!((mane_action(&lp, 0.2) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn loop_validation() {
        let q = ComplexGridFunction::constant(N, Complex64::new(1.0, 0.0)).unwrap();
        let other = ComplexGridFunction::constant(N, Complex64::new(0.0, 1.0)).unwrap();
        let mut pts = vec![q.clone(); 8];
        pts.push(other);
        assert!(matches!(Loop::new(pts, 1.0), Err(Error::NotClosed { .. })));
        let mut pts = vec![q.clone(); 9];
        pts[3] = &q * 1.1;
        assert!(matches!(Loop::new(pts, 1.0), Err(Error::OffSphere { .. })));
        assert!(Loop::new(vec![q; 4], 1.0).is_err());
    }

    #[test]
    fn random_loops_respect_pointwise_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let lp = random_loop(16, 32, &mut rng).unwrap();
            for (dens, v) in lp.action_density(MANE_CRITICAL).iter().zip(lp.velocities()) {
                assert!(*dens >= 0.5 * (v.norm() - 0.5).powi(2) - 1e-12);
            }
            assert!(mane_action(&lp, MANE_CRITICAL) >= -1e-12);
        }
    }
}
