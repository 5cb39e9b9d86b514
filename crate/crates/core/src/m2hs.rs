//! Two solvers for the magnetic two-component Hunter–Saxton system
//!
//! ```text
//! u_t = −u u_x + ½∫₀ˣ(g − ḡ) − s∫₀ˣ(ρ − ρ̄),   g = u_x² + ρ²
//! ρ_t = −(uρ)_x + s u_x
//! ```
//!
//! on the circle with `∫u = 0`. [`geometric_solve`] pushes the initial data
//! through the Madelung transform, follows the closed-form magnetic geodesic
//! on the sphere and reads the Eulerian fields back off. [`evolve_pde`] is a
//! plain pseudospectral method of lines with classical RK4.
//!
//! The geodesic is naturally expressed in the gauge `u(t, 0) = 0`. The
//! zero-mean gauge differs by a constant shift of `u` together with a rigid
//! rotation `a(t) = −∫₀ᵗ m` of the circle, where `m = ∫φ_t φ′` is the mean
//! of the pinned velocity.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    inner, invert_monotone_at, invert_nondecreasing_at, mean, nodes, periodic_antiderivative_real,
    spectral_derivative_real, ComplexGridFunction, RealGridFunction, TrigInterpolant, EPS_MONO,
    EPS_ZERO,
};
use crate::madelung::{madelung_inverse, LagrangianState};
use crate::sphere::{reduce, ReducedGeodesic, SpherePoint, TangentVector};
use crate::util::gauss_legendre;

/// `‖u_x‖_∞` beyond which the PDE solver gives up.
pub const DEFAULT_BLOWUP_CAP: f64 = 1e4;

/// Eulerian unknowns `(u, ρ)` and the strength `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianState {
    pub u: RealGridFunction,
    pub rho: RealGridFunction,
    pub s: f64,
}

impl EulerianState {
    pub fn new(u: RealGridFunction, rho: RealGridFunction, s: f64) -> Result<Self> {
        if u.n() != rho.n() {
            return Err(Error::SizeMismatch(u.n(), rho.n()));
        }
        if !u.is_periodic() || !rho.is_periodic() {
            return Err(Error::Invalid("u and rho must be periodic".into()));
        }
        if !s.is_finite() {
            return Err(Error::Invalid("strength must be finite".into()));
        }
        let m = u.integral();
        if m.abs() >= 1e-10 {
            return Err(Error::Invalid(format!("u must have zero mean, got {m:e}")));
        }
        Ok(Self { u, rho, s })
    }

    /// Subtracts the mean of `u` first.
    pub fn projected(u: RealGridFunction, rho: RealGridFunction, s: f64) -> Result<Self> {
        let m = u.integral();
        let u = RealGridFunction::new(u.full_values().iter().map(|v| v - m).collect())?;
        Self::new(u, rho, s)
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }
}

/// Energy `c² = ¼∫(u_x² + ρ²)` and contact pairing `δ = ½∫ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub c2: f64,
    pub delta: f64,
    /// `cos ψ = δ/c`, zero for the rest state.
    pub cos_psi: f64,
}

impl ConservedQuantities {
    fn from_pair(c2: f64, delta: f64) -> Self {
        let cos_psi = if c2 > 0.0 { (delta / c2.sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        Self { c2, delta, cos_psi }
    }
}

pub fn conserved(state: &EulerianState) -> ConservedQuantities {
    let ux = spectral_derivative_real(state.u.remainder());
    let rho = state.rho.remainder();
    let c2 = 0.25 * ux.iter().zip(rho).map(|(a, r)| a * a + r * r).sum::<f64>() / ux.len() as f64;
    ConservedQuantities::from_pair(c2, 0.5 * mean(rho))
}

/// `A⁻¹f = −∫₀ˣ∫₀^y f + x∫_{S¹}∫₀^y f`.
pub fn inertia_inverse(f: &RealGridFunction) -> RealGridFunction {
    let twice = f.antiderivative0().antiderivative0();
    RealGridFunction::new(twice.remainder().iter().map(|v| -v).collect()).expect("finite")
}

fn rhs_raw(u: &[f64], rho: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
    let ux = spectral_derivative_real(u);
    let g: Vec<f64> = ux.iter().zip(rho).map(|(a, r)| a * a + r * r).collect();
    let (_, ig) = periodic_antiderivative_real(&g);
    let (_, irho) = periodic_antiderivative_real(rho);
    let mut ut: Vec<f64> = (0..u.len())
        .map(|j| -u[j] * ux[j] + 0.5 * ig[j] - s * irho[j])
        .collect();
    let m = mean(&ut);
    ut.iter_mut().for_each(|v| *v -= m);
    let flux: Vec<f64> = u.iter().zip(rho).map(|(a, b)| a * b).collect();
    let fx = spectral_derivative_real(&flux);
    let rt = (0..u.len()).map(|j| -fx[j] + s * ux[j]).collect();
    (ut, rt)
}

/// `(u_t, ρ_t)`, with `u_t` projected to zero mean.
pub fn rhs(state: &EulerianState) -> (RealGridFunction, RealGridFunction) {
    let (ut, rt) = rhs_raw(state.u.remainder(), state.rho.remainder(), state.s);
    (
        RealGridFunction::new(ut).expect("finite"),
        RealGridFunction::new(rt).expect("finite"),
    )
}

/// Time series of Eulerian states with per-time diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EulerianState>,
    pub diagnostics: Vec<ConservedQuantities>,
    /// Pinned-gauge Lagrangian data (geometric solver only).
    pub lagrangian: Option<Vec<LagrangianState>>,
    /// `min φ′` per time (geometric solver only).
    pub min_phi_x: Vec<Option<f64>>,
    /// Times at which the wave function has a zero (`min|γ| ≤ ε_zero`).
    pub weak: Vec<bool>,
    /// Closed-form geodesic behind a geometric trajectory.
    pub geodesic: Option<ReducedGeodesic>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.states.first().map_or(0, EulerianState::n)
    }

    /// Per-time columns have equal length, times increase and all states
    /// share one grid and strength.
    pub fn check_consistent(&self) -> Result<()> {
        let len = self.times.len();
        let lag = self.lagrangian.as_ref().map_or(len, Vec::len);
        for other in [self.states.len(), self.diagnostics.len(), self.min_phi_x.len(), self.weak.len(), lag] {
            if other != len {
                return Err(Error::SizeMismatch(len, other));
            }
        }
        check_times(&self.times)?;
        if let Some(first) = self.states.first() {
            for st in &self.states {
                if st.n() != first.n() || st.rho.n() != first.n() {
                    return Err(Error::SizeMismatch(first.n(), st.n()));
                }
                if st.s != first.s {
                    return Err(Error::Invalid("strength changes along the trajectory".into()));
                }
            }
        }
        Ok(())
    }

    fn empty() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
            lagrangian: None,
            min_phi_x: Vec::new(),
            weak: Vec::new(),
            geodesic: None,
        }
    }

    /// One row per time: `t, v(x_0), …, v(x_{n−1})`.
    pub fn field_csv(&self, field: Field) -> String {
        let mut out = String::from("t");
        for j in 0..self.n() {
            let _ = write!(out, ",x{j}");
        }
        out.push('\n');
        for (t, st) in self.times.iter().zip(&self.states) {
            let f = match field {
                Field::U => &st.u,
                Field::Rho => &st.rho,
            };
            let _ = write!(out, "{t}");
            for v in f.remainder() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Columns `t, c2, delta, min_phix, residual_u, residual_rho`; residuals
    /// are blank at the two end points.
    pub fn diagnostics_csv(&self) -> String {
        let residuals = residual_m2hs(self).unwrap_or_default();
        let mut out = String::from("t,c2,delta,min_phix,residual_u,residual_rho\n");
        for (k, t) in self.times.iter().enumerate() {
            let d = self.diagnostics[k];
            let _ = write!(out, "{t},{},{},", d.c2, d.delta);
            if let Some(m) = self.min_phi_x[k] {
                let _ = write!(out, "{m}");
            }
            match residuals.iter().find(|r| r.index == k) {
                Some(r) => {
                    let _ = writeln!(out, ",{},{}", r.residual_u, r.residual_rho);
                }
                None => out.push_str(",,\n"),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U,
    Rho,
}

/// Settings for [`evolve_pde_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `output_stride`-th step (the final step is always kept).
    pub output_stride: usize,
    pub blowup_cap: f64,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            output_stride: 1,
            blowup_cap: DEFAULT_BLOWUP_CAP,
        }
    }
}

/// RK4 from `t = 0` to `t_end`.
pub fn evolve_pde(state: &EulerianState, dt: f64, t_end: f64) -> Result<Trajectory> {
    evolve_pde_with(
        state,
        &PdeOptions {
            dt,
            t_end,
            ..PdeOptions::default()
        },
    )
}

pub fn evolve_pde_with(state: &EulerianState, opts: &PdeOptions) -> Result<Trajectory> {
    let (traj, err) = evolve_pde_partial(state, opts)?;
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Like [`evolve_pde_with`] but hands back the steps completed before a
/// breakdown together with the error.
pub fn evolve_pde_partial(state: &EulerianState, opts: &PdeOptions) -> Result<(Trajectory, Option<Error>)> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) || !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::Invalid("dt and t_end must be positive".into()));
    }
    let steps = ((opts.t_end / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let stride = opts.output_stride.max(1);
    let s = state.s;
    let mut u = state.u.remainder().to_vec();
    let mut rho = state.rho.remainder().to_vec();
    let mut traj = Trajectory::empty();
    let record = |traj: &mut Trajectory, t: f64, u: &[f64], rho: &[f64]| -> Result<()> {
        let st = EulerianState::projected(RealGridFunction::new(u.to_vec())?, RealGridFunction::new(rho.to_vec())?, s)?;
        traj.times.push(t);
        traj.diagnostics.push(conserved(&st));
        traj.states.push(st);
        traj.min_phi_x.push(None);
        traj.weak.push(false);
        Ok(())
    };
    record(&mut traj, 0.0, &u, &rho)?;
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for step in 1..=steps {
        let (k1u, k1r) = rhs_raw(&u, &rho, s);
        let (k2u, k2r) = rhs_raw(&axpy(&u, &k1u, 0.5 * dt), &axpy(&rho, &k1r, 0.5 * dt), s);
        let (k3u, k3r) = rhs_raw(&axpy(&u, &k2u, 0.5 * dt), &axpy(&rho, &k2r, 0.5 * dt), s);
        let (k4u, k4r) = rhs_raw(&axpy(&u, &k3u, dt), &axpy(&rho, &k3r, dt), s);
        for j in 0..u.len() {
            u[j] += dt / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
            rho[j] += dt / 6.0 * (k1r[j] + 2.0 * k2r[j] + 2.0 * k3r[j] + k4r[j]);
        }
        let m = mean(&u);
        u.iter_mut().for_each(|v| *v -= m);
        let t = step as f64 * dt;
        if u.iter().chain(&rho).any(|v| !v.is_finite()) {
            let e = Error::BlowupEncountered { time: t, reason: "non-finite values".into() };
            return Ok((traj, Some(e)));
        }
        let ux_max = spectral_derivative_real(&u).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if ux_max > opts.blowup_cap {
            let e = Error::BlowupEncountered {
                time: t,
                reason: format!("max |u_x| = {ux_max:e} exceeds {:e}", opts.blowup_cap),
            };
            return Ok((traj, Some(e)));
        }
        if step % stride == 0 || step == steps {
            record(&mut traj, t, &u, &rho)?;
        }
    }
    Ok((traj, None))
}

/// Tolerances for the geometric solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricOptions {
    pub eps_mono: f64,
    pub eps_zero: f64,
}

impl Default for GeometricOptions {
    fn default() -> Self {
        Self {
            eps_mono: EPS_MONO,
            eps_zero: EPS_ZERO,
        }
    }
}

/// Sphere data `f₀ = 1`, `F₀ = ½(u₀′ + iρ₀)` of an Eulerian state.
pub fn initial_sphere_data(state0: &EulerianState) -> Result<TangentVector> {
    let n = state0.n();
    let one = SpherePoint::new(ComplexGridFunction::constant(n, Complex64::new(1.0, 0.0))?)?;
    let ux = state0.u.derivative().full_values();
    let f = ux
        .iter()
        .zip(state0.rho.full_values())
        .map(|(a, r)| 0.5 * Complex64::new(*a, r))
        .collect();
    TangentVector::new(one, ComplexGridFunction::new(f)?)
}

/// Closed-form geodesic of the initial data; `None` for the rest state.
pub fn initial_geodesic(state0: &EulerianState) -> Result<Option<ReducedGeodesic>> {
    match reduce(&initial_sphere_data(state0)?, state0.s) {
        Ok(rg) => Ok(Some(rg)),
        Err(Error::ZeroVelocity) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingTimes);
    }
    Ok(())
}

fn fields_at(rg: Option<&ReducedGeodesic>, n: usize, t: f64) -> Result<(ComplexGridFunction, ComplexGridFunction)> {
    Ok(match rg {
        Some(rg) => rg.fields(t),
        None => (
            ComplexGridFunction::constant(n, Complex64::new(1.0, 0.0))?,
            ComplexGridFunction::constant(n, Complex64::new(0.0, 0.0))?,
        ),
    })
}

/// `φ_t = ∫₀ˣ 2Re(γ̄γ_t)` and `m = ∫φ_t|γ|²`.
fn pinned_velocity(gamma: &ComplexGridFunction, gamma_t: &ComplexGridFunction) -> (Vec<f64>, f64) {
    let flux: Vec<f64> = gamma
        .values()
        .iter()
        .zip(gamma_t.values())
        .map(|(g, gt)| 2.0 * (g.conj() * gt).re)
        .collect();
    let (_, phi_t) = periodic_antiderivative_real(&flux);
    let m = phi_t
        .iter()
        .zip(gamma.values())
        .map(|(p, g)| p * g.norm_sqr())
        .sum::<f64>()
        / phi_t.len() as f64;
    (phi_t, m)
}

/// Rotation `a(t) = −∫₀ᵗ m` taking the pinned gauge to the zero-mean gauge.
fn gauge_shifts(rg: Option<&ReducedGeodesic>, times: &[f64]) -> Vec<f64> {
    let Some(rg) = rg else {
        return vec![0.0; times.len()];
    };
    let drift = |t: f64| {
        let (g, gt) = rg.fields(t);
        pinned_velocity(&g, &gt).1
    };
    let mut out = Vec::with_capacity(times.len());
    let (mut prev, mut acc) = (0.0, 0.0);
    for &t in times {
        let pieces = ((t - prev).abs() / 0.05).ceil().max(1.0) as usize;
        acc -= gauss_legendre(drift, prev, t, 12, pieces);
        out.push(acc);
        prev = t;
    }
    out
}

/// Eulerian state read off a sphere curve, with its side information.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub state: EulerianState,
    /// Pinned-gauge preimage of `γ`.
    pub lagrangian: LagrangianState,
    pub min_phi_x: f64,
    /// `γ` has a zero on the grid.
    pub weak: bool,
    /// Mean of the reconstructed `u` before the final projection.
    pub mean_defect: f64,
    pub diagnostics: ConservedQuantities,
}

/// `u(y) = φ_t(ψ(y − a)) − m`, `ρ(y) = τ_t(ψ(y − a))` with `φ′ = |γ|²`,
/// `ψ = φ⁻¹` and `a` the gauge rotation (`0` at the initial time).
///
/// At zeros of `γ` the phase velocity is undefined and `ρ` takes the left
/// limit along the grid.
pub fn reconstruct_eulerian(
    gamma: &ComplexGridFunction,
    gamma_t: &ComplexGridFunction,
    s: f64,
    shift: f64,
    opts: &GeometricOptions,
) -> Result<Reconstruction> {
    if gamma.n() != gamma_t.n() {
        return Err(Error::SizeMismatch(gamma.n(), gamma_t.n()));
    }
    let defect = (gamma.norm() - 1.0).abs();
    if defect > 1e-9 {
        return Err(Error::OffSphere { defect });
    }
    let n = gamma.n();
    let min_modulus = gamma.min_modulus();
    let weak = min_modulus <= opts.eps_zero;
    let lagrangian = madelung_inverse(&SpherePoint::new_unchecked(gamma.clone()), !weak)?;
    let min_phi_x = gamma.values().iter().map(|g| g.norm_sqr()).fold(f64::INFINITY, f64::min);

    let targets: Vec<f64> = nodes(n).iter().map(|y| y - shift).collect();
    let phi = lagrangian.phi();
    let feet = if min_phi_x > opts.eps_mono {
        invert_monotone_at(phi, &targets, opts.eps_mono).or_else(|_| invert_nondecreasing_at(phi, &targets))?
    } else {
        invert_nondecreasing_at(phi, &targets)?
    };

    let (phi_t, m) = pinned_velocity(gamma, gamma_t);
    let ip = TrigInterpolant::from_real(&phi_t);
    let ig = TrigInterpolant::new(gamma.values());
    let igt = TrigInterpolant::new(gamma_t.values());
    let mut u = Vec::with_capacity(n);
    let mut rho: Vec<Option<f64>> = Vec::with_capacity(n);
    for &x in &feet {
        u.push(ip.eval(x).re - m);
        let (g, gt) = (ig.eval(x), igt.eval(x));
        let d = g.norm_sqr();
        rho.push((d > opts.eps_zero * opts.eps_zero).then(|| 2.0 * (g.conj() * gt).im / d));
    }
    let rho = fill_from_left(&rho);
    let mean_defect = mean(&u);
    let state = EulerianState::projected(RealGridFunction::new(u)?, RealGridFunction::new(rho)?, s)?;
    let c2 = gamma_t.norm_sqr();
    let delta = inner(gamma.values(), gamma_t.values()).im;
    Ok(Reconstruction {
        state,
        lagrangian,
        min_phi_x,
        weak,
        mean_defect,
        diagnostics: ConservedQuantities::from_pair(c2, delta),
    })
}

fn fill_from_left(values: &[Option<f64>]) -> Vec<f64> {
    let n = values.len();
    let Some(seed) = (0..n).rev().find_map(|j| values[j]) else {
        return vec![0.0; n];
    };
    let mut last = seed;
    values
        .iter()
        .map(|v| {
            if let Some(v) = v {
                last = *v;
            }
            last
        })
        .collect()
}

/// Exact solution through the Madelung transform and the closed-form geodesic.
pub fn geometric_solve(state0: &EulerianState, times: &[f64]) -> Result<Trajectory> {
    geometric_solve_with(state0, times, &GeometricOptions::default())
}

pub fn geometric_solve_with(state0: &EulerianState, times: &[f64], opts: &GeometricOptions) -> Result<Trajectory> {
    check_times(times)?;
    let n = state0.n();
    let rg = initial_geodesic(state0)?;
    let shifts = gauge_shifts(rg.as_ref(), times);
    let mut traj = Trajectory::empty();
    let mut lagrangian = Vec::with_capacity(times.len());
    for (&t, &a) in times.iter().zip(&shifts) {
        let (g, gt) = fields_at(rg.as_ref(), n, t)?;
        let r = reconstruct_eulerian(&g, &gt, state0.s, a, opts)?;
        traj.times.push(t);
        traj.states.push(r.state);
        traj.diagnostics.push(r.diagnostics);
        traj.min_phi_x.push(Some(r.min_phi_x));
        traj.weak.push(r.weak);
        lagrangian.push(r.lagrangian);
    }
    traj.lagrangian = Some(lagrangian);
    traj.geodesic = rg;
    Ok(traj)
}

/// Residuals of both equations at an interior time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub index: usize,
    pub t: f64,
    /// `‖u_tx + ½u_x² + u u_xx − ½ρ² + sρ + 2(c² − sδ)‖`
    pub residual_u: f64,
    /// `‖ρ_t + (uρ)_x − s u_x‖`
    pub residual_rho: f64,
}

/// Equation residuals with centered time differences at every interior time.
pub fn residual_m2hs(traj: &Trajectory) -> Result<Vec<ResidualSample>> {
    if traj.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: traj.len() });
    }
    let mut out = Vec::with_capacity(traj.len() - 2);
    for k in 1..traj.len() - 1 {
        let h = traj.times[k + 1] - traj.times[k - 1];
        let (prev, cur, next) = (&traj.states[k - 1], &traj.states[k], &traj.states[k + 1]);
        let ut: Vec<f64> = next.u.remainder().iter().zip(prev.u.remainder()).map(|(a, b)| (a - b) / h).collect();
        let rt: Vec<f64> = next.rho.remainder().iter().zip(prev.rho.remainder()).map(|(a, b)| (a - b) / h).collect();
        let utx = spectral_derivative_real(&ut);
        let u = cur.u.remainder();
        let rho = cur.rho.remainder();
        let ux = spectral_derivative_real(u);
        let uxx = spectral_derivative_real(&ux);
        let flux: Vec<f64> = u.iter().zip(rho).map(|(a, b)| a * b).collect();
        let fx = spectral_derivative_real(&flux);
        let d = traj.diagnostics[k];
        let s = cur.s;
        let c = 2.0 * (d.c2 - s * d.delta);
        let n = u.len() as f64;
        let mut ru = 0.0;
        let mut rr = 0.0;
        for j in 0..u.len() {
            let e = utx[j] + 0.5 * ux[j] * ux[j] + u[j] * uxx[j] - 0.5 * rho[j] * rho[j] + s * rho[j] + c;
            ru += e * e;
            let f = rt[j] + fx[j] - s * ux[j];
            rr += f * f;
        }
        out.push(ResidualSample {
            index: k,
            t: traj.times[k],
            residual_u: (ru / n).sqrt(),
            residual_rho: (rr / n).sqrt(),
        });
    }
    Ok(out)
}
