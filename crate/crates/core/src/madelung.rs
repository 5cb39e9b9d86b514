//! Madelung transform `Φ(φ, τ) = √φ′·e^{iτ/2}` from the semidirect product of
//! circle diffeomorphisms and phase fields onto the nowhere-vanishing part of
//! the L² sphere, with the pulled-back metric, contact form, almost complex
//! structure and Lorentz force on the group side.
//!
//! Tangent vectors `(U₁, U₂)` are variations of `(φ, τ)` themselves, so at the
//! identity they are the Eulerian pair `(u, ρ)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    inner, unwrap_phase, ComplexGridFunction, RealGridFunction, EPS_MONO, EPS_ZERO,
};
use crate::sphere::{SpherePoint, TangentVector};

/// Lowest admissible `φ′` in the weak regime.
pub const WEAK_FLOOR: f64 = -1e-10;
/// Tolerance for `ξ` membership in [`g_acs_j`].
pub const CONTACT_TOL: f64 = 1e-10;

/// `(φ, τ)` with `φ(x) = x + r(x)`, `r(0) = 0`, and `τ` an unwrapped phase
/// whose slope is `4π·tau_winding`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LagrangianRecord", try_from = "LagrangianRecord")]
pub struct LagrangianState {
    phi: RealGridFunction,
    tau: RealGridFunction,
}

#[derive(Serialize, Deserialize)]
struct LagrangianRecord {
    phi_remainder: RealGridFunction,
    tau: RealGridFunction,
    tau_winding: i64,
}

impl From<LagrangianState> for LagrangianRecord {
    fn from(s: LagrangianState) -> Self {
        let tau_winding = s.tau_winding();
        let phi_remainder = RealGridFunction::new(s.phi.remainder().to_vec())
            .expect("remainder of a valid state");
        Self {
            phi_remainder,
            tau: s.tau,
            tau_winding,
        }
    }
}

impl TryFrom<LagrangianRecord> for LagrangianState {
    type Error = Error;
    fn try_from(r: LagrangianRecord) -> Result<Self> {
        let phi = RealGridFunction::with_slope(1.0, r.phi_remainder.full_values())?;
        let state = LagrangianState::new(phi, r.tau)?;
        if state.tau_winding() != r.tau_winding {
            return Err(Error::Invalid("tau_winding disagrees with the slope of tau".into()));
        }
        Ok(state)
    }
}

impl LagrangianState {
    pub fn new(phi: RealGridFunction, tau: RealGridFunction) -> Result<Self> {
        if phi.n() != tau.n() {
            return Err(Error::SizeMismatch(phi.n(), tau.n()));
        }
        if (phi.slope() - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("phi must have slope 1, got {}", phi.slope())));
        }
        if phi.remainder()[0].abs() > 1e-12 {
            return Err(Error::Invalid(format!("phi(0) = {:e}, expected 0", phi.remainder()[0])));
        }
        let w = tau.slope() / (2.0 * TAU);
        if (w - w.round()).abs() > 1e-9 {
            return Err(Error::Invalid("tau slope is not a multiple of 4π".into()));
        }
        Ok(Self { phi, tau })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(RealGridFunction::identity(n)?, RealGridFunction::zeros(n)?)
    }

    /// State with `φ = ∫₀ˣ φ′`, for a density of unit mass.
    pub fn from_density(phi_x: &RealGridFunction, tau: RealGridFunction) -> Result<Self> {
        let mass = phi_x.integral();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("density has mass {mass}, expected 1")));
        }
        let phi = phi_x.antiderivative0();
        let phi = RealGridFunction::with_slope(1.0, phi.remainder().to_vec())?;
        Self::new(phi, tau)
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn phi(&self) -> &RealGridFunction {
        &self.phi
    }

    pub fn tau(&self) -> &RealGridFunction {
        &self.tau
    }

    pub fn tau_winding(&self) -> i64 {
        (self.tau.slope() / (2.0 * TAU)).round() as i64
    }

    pub fn phi_x(&self) -> RealGridFunction {
        self.phi.derivative()
    }

    pub fn min_phi_x(&self) -> f64 {
        self.phi_x().min()
    }

    /// Whether `min φ′ > eps`.
    pub fn is_strict(&self, eps: f64) -> bool {
        self.min_phi_x() > eps
    }

    fn strict_phi_x(&self) -> Result<Vec<f64>> {
        let phi_x = self.phi_x().full_values();
        let min_slope = phi_x.iter().copied().fold(f64::INFINITY, f64::min);
        if min_slope <= EPS_MONO {
            return Err(Error::NonMonotone { min_slope });
        }
        Ok(phi_x)
    }
}

/// Tangent vector `(U₁, U₂)` at a Lagrangian state.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentLagrangian {
    pub base: LagrangianState,
    pub u1: RealGridFunction,
    pub u2: RealGridFunction,
}

impl TangentLagrangian {
    pub fn new(base: LagrangianState, u1: RealGridFunction, u2: RealGridFunction) -> Result<Self> {
        for g in [&u1, &u2] {
            if g.n() != base.n() {
                return Err(Error::SizeMismatch(base.n(), g.n()));
            }
        }
        Ok(Self { base, u1, u2 })
    }

    fn with(&self, u1: RealGridFunction, u2: RealGridFunction) -> Self {
        Self {
            base: self.base.clone(),
            u1,
            u2,
        }
    }
}

/// `f = √φ′·e^{iτ/2}`; zeros of `φ′` are allowed.
pub fn madelung(state: &LagrangianState) -> Result<SpherePoint> {
    let phi_x = state.phi_x().full_values();
    let min_slope = phi_x.iter().copied().fold(f64::INFINITY, f64::min);
    if min_slope < WEAK_FLOOR {
        return Err(Error::NonMonotone { min_slope });
    }
    let f = phi_x
        .iter()
        .zip(state.tau.full_values())
        .map(|(p, t)| Complex64::from_polar(p.max(0.0).sqrt(), 0.5 * t))
        .collect();
    SpherePoint::new(ComplexGridFunction::new(f)?)
}

/// `DΦ(U₁, U₂) = e^{iτ/2}(U₁′ + iU₂φ′)/(2√φ′)`.
pub fn madelung_derivative(v: &TangentLagrangian) -> Result<TangentVector> {
    let phi_x = v.base.strict_phi_x()?;
    let base = madelung(&v.base)?;
    let du1 = v.u1.derivative().full_values();
    let values = phi_x
        .iter()
        .zip(du1)
        .zip(v.u2.full_values())
        .zip(v.base.tau.full_values())
        .map(|(((p, d), u2), t)| {
            Complex64::cis(0.5 * t) * Complex64::new(d, u2 * p) / (2.0 * p.sqrt())
        })
        .collect();
    TangentVector::new(base, ComplexGridFunction::new(values)?)
}

/// Preimage of a sphere point: `φ′ = |f|²`, `τ = 2 arg f`.
///
/// Strict mode needs `min|f| > eps_zero`. In weak mode the phase is carried
/// across (near-)zeros of `f` from the left.
pub fn madelung_inverse(f: &SpherePoint, strict: bool) -> Result<LagrangianState> {
    let g = f.f();
    let theta = if strict {
        unwrap_phase(g, EPS_ZERO)?.0
    } else {
        unwrap_phase_weak(g, EPS_ZERO)?
    };
    let density = g.modulus_sqr();
    let mass = density.integral();
    let density = RealGridFunction::new(density.full_values().iter().map(|d| d / mass).collect())?;
    let tau = RealGridFunction::with_slope(2.0 * theta.slope(), theta.remainder().iter().map(|t| 2.0 * t).collect())?;
    LagrangianState::from_density(&density, tau)
}

fn unwrap_phase_weak(f: &ComplexGridFunction, eps_zero: f64) -> Result<RealGridFunction> {
    let v = f.values();
    let n = v.len();
    let Some(start) = v.iter().position(|z| z.norm() > eps_zero) else {
        return Err(Error::NearZero { min_modulus: 0.0 });
    };
    let mut theta = vec![0.0; n];
    let mut last = v[start];
    let mut acc = last.arg();
    for k in 0..n {
        let j = (start + k) % n;
        if v[j].norm() > eps_zero {
            acc += (v[j] * last.conj()).arg();
            last = v[j];
        }
        theta[j] = acc;
    }
    let closing = acc + (v[start] * last.conj()).arg();
    let winding = ((closing - v[start].arg()) / TAU).round();
    // samples before `start` were reached after wrapping around
    theta[..start].iter_mut().for_each(|t| *t -= TAU * winding);
    RealGridFunction::from_full_values(TAU * winding, &theta)
}

/// `𝒢(U, V) = ¼∫(U₁′V₁′/φ′ + U₂V₂φ′)`.
pub fn hdot_metric(state: &LagrangianState, u: (&RealGridFunction, &RealGridFunction), v: (&RealGridFunction, &RealGridFunction)) -> Result<f64> {
    let phi_x = state.strict_phi_x()?;
    let (du1, dv1) = (u.0.derivative().full_values(), v.0.derivative().full_values());
    let (u2, v2) = (u.1.full_values(), v.1.full_values());
    let sum: f64 = (0..phi_x.len())
        .map(|j| du1[j] * dv1[j] / phi_x[j] + u2[j] * v2[j] * phi_x[j])
        .sum();
    Ok(0.25 * sum / phi_x.len() as f64)
}

/// `∫U₂φ′`.
fn weighted_mean(state: &LagrangianState, u2: &RealGridFunction) -> f64 {
    let phi_x = state.phi_x().full_values();
    let u2 = u2.full_values();
    phi_x.iter().zip(&u2).map(|(p, u)| p * u).sum::<f64>() / phi_x.len() as f64
}

/// `−½∫U₂φ′`, the pulled-back contact form in the group normalization. It
/// equals `−2·α(DΦU)`.
pub fn pullback_contact(state: &LagrangianState, u2: &RealGridFunction) -> f64 {
    -0.5 * weighted_mean(state, u2)
}

/// `(U₁, U₂ − ∫U₂φ′)`, the `𝒢`-orthogonal projection onto `ξ`.
pub fn g_contact_projection(v: &TangentLagrangian) -> TangentLagrangian {
    let m = weighted_mean(&v.base, &v.u2);
    let u2 = RealGridFunction::with_slope(v.u2.slope(), v.u2.remainder().iter().map(|x| x - m).collect())
        .expect("finite shift");
    v.with(v.u1.clone(), u2)
}

/// `J(U) = (y ↦ −∫₀^y U₂φ′, U₁′/φ′)` on `ξ`. `J² = −Id` for `U₁(0) = 0`.
pub fn g_acs_j(v: &TangentLagrangian) -> Result<TangentLagrangian> {
    let pairing = pullback_contact(&v.base, &v.u2);
    if pairing.abs() > CONTACT_TOL {
        return Err(Error::NotInContactPlane { pairing });
    }
    rotate(v)
}

fn rotate(v: &TangentLagrangian) -> Result<TangentLagrangian> {
    let phi_x = v.base.strict_phi_x()?;
    let weighted: Vec<f64> = v.u2.full_values().iter().zip(&phi_x).map(|(u, p)| -u * p).collect();
    let first = RealGridFunction::new(weighted)?.antiderivative0();
    let second: Vec<f64> = v
        .u1
        .derivative()
        .full_values()
        .iter()
        .zip(&phi_x)
        .map(|(d, p)| d / p)
        .collect();
    Ok(v.with(first, RealGridFunction::new(second)?))
}

/// `Y(U) = J(projection of U onto ξ)`.
pub fn g_lorentz_force(v: &TangentLagrangian) -> Result<TangentLagrangian> {
    rotate(&g_contact_projection(v))
}

/// `Φ*dα(U, V) = Im⟨DΦU, DΦV⟩`.
pub fn pullback_magnetic_form(u: &TangentLagrangian, v: &TangentLagrangian) -> Result<f64> {
    let du = madelung_derivative(u)?;
    let dv = madelung_derivative(v)?;
    Ok(inner(du.vector().values(), dv.vector().values()).im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::nodes;
    use crate::sphere::{contact_form, lorentz_force};
    use std::f64::consts::PI;

    const N: usize = 64;

    fn real(f: impl Fn(f64) -> f64) -> RealGridFunction {
        RealGridFunction::from_fn(N, f).unwrap()
    }

    /// `φ′ = 1 − ½ sin 2πx`, `τ = 0.4 cos 2πx`.
    fn wavy() -> LagrangianState {
        let phi_x = real(|x| 1.0 - 0.5 * (TAU * x).sin());
        LagrangianState::from_density(&phi_x, real(|x| 0.4 * (TAU * x).cos())).unwrap()
    }

    fn tangent(base: &LagrangianState, u1: RealGridFunction, u2: RealGridFunction) -> TangentLagrangian {
        TangentLagrangian::new(base.clone(), u1, u2).unwrap()
    }

    #[test]
    fn identity_maps_to_one() {
        let f = madelung(&LagrangianState::identity(N).unwrap()).unwrap();
        assert!(f.f().values().iter().all(|z| (z - 1.0).norm() < 1e-15));
    }

    #[test]
    fn constant_phase_two_pi_gives_minus_one() {
        let s = LagrangianState::new(RealGridFunction::identity(N).unwrap(), real(|_| TAU)).unwrap();
        let f = madelung(&s).unwrap();
        assert!(f.f().values().iter().all(|z| (z + 1.0).norm() < 1e-15));
    }

    #[test]
    fn wavy_density_is_unit_norm_and_real() {
        let s = LagrangianState::from_density(&real(|x| 1.0 - 0.5 * (TAU * x).sin()), RealGridFunction::zeros(N).unwrap()).unwrap();
        let f = madelung(&s).unwrap();
        assert!((f.f().norm() - 1.0).abs() < 1e-12);
        assert!(f.f().values().iter().all(|z| z.im == 0.0 && z.re > 0.0));
    }

    #[test]
    fn derivative_at_identity() {
        let id = LagrangianState::identity(N).unwrap();
        let u = real(|x| 0.3 * (TAU * x).sin());
        let rho = real(|x| 1.0 + (2.0 * TAU * x).cos());
        let d = madelung_derivative(&tangent(&id, u.clone(), rho.clone())).unwrap();
        let du = u.derivative().full_values();
        for (j, z) in d.vector().values().iter().enumerate() {
            let expect = 0.5 * Complex64::new(du[j], rho.full_values()[j]);
            assert!((z - expect).norm() < 1e-13);
        }
        let reeb = madelung_derivative(&tangent(&id, RealGridFunction::zeros(N).unwrap(), real(|_| 2.0))).unwrap();
        assert!(reeb.vector().values().iter().all(|z| (z - Complex64::i()).norm() < 1e-15));
        assert!((reeb.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_rejects_weak_states() {
        let phi_x = real(|x| 1.0 - (TAU * x).cos());
        let weak = LagrangianState::from_density(&phi_x, RealGridFunction::zeros(N).unwrap()).unwrap();
        assert!(madelung(&weak).is_ok());
        let v = tangent(&weak, RealGridFunction::zeros(N).unwrap(), real(|_| 1.0));
        assert!(matches!(madelung_derivative(&v), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn derivative_matches_finite_difference_of_transform() {
        let s = wavy();
        let u1 = real(|x| 0.05 * (TAU * x).sin() * (TAU * x).sin());
        let u2 = real(|x| 0.3 + (TAU * x).sin());
        let d = madelung_derivative(&tangent(&s, u1.clone(), u2.clone())).unwrap();
        let h = 1e-6;
        let shifted = |sign: f64| {
            let phi = RealGridFunction::with_slope(
                1.0,
                s.phi().remainder().iter().zip(u1.full_values()).map(|(r, u)| r + sign * h * u).collect(),
            )
            .unwrap();
            let tau = RealGridFunction::new(s.tau().full_values().iter().zip(u2.full_values()).map(|(t, u)| t + sign * h * u).collect()).unwrap();
            madelung(&LagrangianState::new(phi, tau).unwrap()).unwrap().into_inner()
        };
        let fd = &(&shifted(1.0) - &shifted(-1.0)) * (0.5 / h);
        assert!((&fd - d.vector()).norm() < 1e-8);
    }

    #[test]
    fn inverse_examples() {
        let one = SpherePoint::new(ComplexGridFunction::constant(N, Complex64::new(1.0, 0.0)).unwrap()).unwrap();
        let s = madelung_inverse(&one, true).unwrap();
        assert!(s.phi().remainder().iter().all(|r| r.abs() < 1e-15));
        assert!(s.tau().max_abs() < 1e-15);

        let rot = SpherePoint::new(ComplexGridFunction::constant(N, Complex64::cis(PI / 4.0)).unwrap()).unwrap();
        let s = madelung_inverse(&rot, true).unwrap();
        assert!(s.tau().full_values().iter().all(|t| (t - PI / 2.0).abs() < 1e-15));
    }

    #[test]
    fn inverse_round_trips() {
        let s = wavy();
        let back = madelung_inverse(&madelung(&s).unwrap(), true).unwrap();
        assert!(s.phi().full_values().iter().zip(back.phi().full_values()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(s.tau().full_values().iter().zip(back.tau().full_values()).all(|(a, b)| (a - b).abs() < 1e-12));

        let wind = SpherePoint::new(ComplexGridFunction::from_fn(N, |x| Complex64::cis(TAU * x)).unwrap()).unwrap();
        let st = madelung_inverse(&wind, true).unwrap();
        assert_eq!(st.tau_winding(), 1);
        assert!((madelung(&st).unwrap().f() - wind.f()).norm() < 1e-13);
    }

    #[test]
    fn inverse_strict_rejects_zeros_weak_accepts() {
        let g = ComplexGridFunction::from_fn(N, |x| Complex64::new((PI * x).sin() * 2f64.sqrt(), 0.0)).unwrap();
        let p = SpherePoint::normalized(g).unwrap();
        assert!(matches!(madelung_inverse(&p, true), Err(Error::NearZero { .. })));
        let s = madelung_inverse(&p, false).unwrap();
        assert!((madelung(&s).unwrap().f() - p.f()).norm() < 1e-8);
    }

    #[test]
    fn metric_examples() {
        let id = LagrangianState::identity(N).unwrap();
        let u = real(|x| (TAU * x).sin() / TAU);
        let z = RealGridFunction::zeros(N).unwrap();
        assert!((hdot_metric(&id, (&u, &z), (&u, &z)).unwrap() - 0.125).abs() < 1e-15);
        let two = real(|_| 2.0);
        assert!((hdot_metric(&id, (&z, &two), (&z, &two)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_is_right_invariant() {
        let s = wavy();
        let u = real(|x| 0.2 * (TAU * x).sin() + 0.1 * (2.0 * TAU * x).cos());
        let rho = real(|x| 0.5 + 0.3 * (TAU * x).cos());
        let phi = s.phi().full_values();
        let compose = |f: &RealGridFunction| RealGridFunction::new(phi.iter().map(|p| f.eval(*p)).collect()).unwrap();
        let id = LagrangianState::identity(N).unwrap();
        let at_id = hdot_metric(&id, (&u, &rho), (&u, &rho)).unwrap();
        let moved = hdot_metric(&s, (&compose(&u), &compose(&rho)), (&compose(&u), &compose(&rho))).unwrap();
        assert!((at_id - moved).abs() < 1e-8, "{at_id} {moved}");
    }

    #[test]
    fn pullback_contact_examples() {
        let id = LagrangianState::identity(N).unwrap();
        assert!((pullback_contact(&id, &real(|_| 2.0)) + 1.0).abs() < 1e-15);
        let s = wavy();
        let proj = g_contact_projection(&tangent(&s, RealGridFunction::zeros(N).unwrap(), real(|x| 1.0 + x.sin())));
        assert!(pullback_contact(&s, &proj.u2).abs() < 1e-12);
        let v = tangent(&s, real(|x| 0.1 * (TAU * x).sin()), real(|x| 0.7 + (TAU * x).cos()));
        let alpha = contact_form(&madelung_derivative(&v).unwrap());
        assert!((pullback_contact(&s, &v.u2) + 2.0 * alpha).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let s = wavy();
        let u1 = real(|x| (TAU * x).sin());
        let p = g_contact_projection(&tangent(&s, u1.clone(), real(|_| 3.0)));
        assert_eq!(p.u1, u1);
        assert!(p.u2.max_abs() < 1e-14);
        let again = g_contact_projection(&p);
        assert!(again.u2.full_values().iter().zip(p.u2.full_values()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn complex_structure_at_identity() {
        let id = LagrangianState::identity(N).unwrap();
        let v = tangent(&id, RealGridFunction::zeros(N).unwrap(), real(|x| (TAU * x).cos()));
        let j = g_acs_j(&v).unwrap();
        let expect: Vec<f64> = nodes(N).iter().map(|x| -(TAU * x).sin() / TAU).collect();
        assert!(j.u1.full_values().iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(j.u2.max_abs() < 1e-14);
        let off = tangent(&id, RealGridFunction::zeros(N).unwrap(), real(|_| 1.0));
        assert!(matches!(g_acs_j(&off), Err(Error::NotInContactPlane { .. })));
    }

    #[test]
    fn complex_structure_squares_to_minus_one() {
        let s = wavy();
        // U₁(0) = 0
        let raw = tangent(&s, real(|x| 0.2 * (TAU * x).sin() + 0.1 * (1.0 - (2.0 * TAU * x).cos())), real(|x| (TAU * x).cos() + 0.3));
        let v = g_contact_projection(&raw);
        let jj = g_acs_j(&g_acs_j(&v).unwrap()).unwrap();
        let err1 = jj.u1.full_values().iter().zip(v.u1.full_values()).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        let err2 = jj.u2.full_values().iter().zip(v.u2.full_values()).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err1 < 1e-9 && err2 < 1e-9, "{err1} {err2}");
        let ju = g_acs_j(&v).unwrap();
        let lhs = pullback_magnetic_form(&v, &ju).unwrap();
        let rhs = hdot_metric(&s, (&v.u1, &v.u2), (&v.u1, &v.u2)).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn lorentz_force_examples() {
        let id = LagrangianState::identity(N).unwrap();
        let u = real(|x| 0.3 * (TAU * x).sin());
        let rho = real(|x| 1.5 + (TAU * x).cos());
        let y = g_lorentz_force(&tangent(&id, u.clone(), rho)).unwrap();
        let expect: Vec<f64> = nodes(N).iter().map(|x| -(TAU * x).sin() / TAU).collect();
        assert!(y.u1.full_values().iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(y.u2.full_values().iter().zip(u.derivative().full_values()).all(|(a, b)| (a - b).abs() < 1e-13));

        let reeb = g_lorentz_force(&tangent(&wavy(), RealGridFunction::zeros(N).unwrap(), real(|_| 0.8))).unwrap();
        assert!(reeb.u1.max_abs() < 1e-14 && reeb.u2.max_abs() < 1e-14);
    }

    #[test]
    fn lorentz_force_intertwines() {
        let s = wavy();
        let v = tangent(&s, real(|x| 0.1 * (TAU * x).sin()), real(|x| 0.4 + 0.6 * (2.0 * TAU * x).sin()));
        let lhs = madelung_derivative(&g_lorentz_force(&v).unwrap()).unwrap();
        let rhs = lorentz_force(&madelung_derivative(&v).unwrap());
        assert!((lhs.vector() - rhs.vector()).norm() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let s = wavy();
        let text = serde_json::to_string(&s).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tau_winding"], 0);
        assert_eq!(v["phi_remainder"]["slope"], 0.0);
        let back: LagrangianState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
