//! The magnetic L² unit sphere: round metric `Re⟨·,·⟩`, contact form
//! `α_f(F) = ½Re⟨if, F⟩`, Lorentz force, and the closed-form magnetic
//! geodesics obtained by reducing to the 3-sphere spanned by `γ(0), γ̇(0)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner, ComplexGridFunction, RealGridFunction, TrigInterpolant};
use crate::util::minimize_scalar;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Membership tolerance for the unit sphere and its tangent spaces.
pub const SPHERE_TOL: f64 = 1e-10;
/// Below this discriminant the two frequencies merge.
pub const DEGENERATE_DISC: f64 = 1e-12;
/// Number of Fourier modes `J` in the moment-map generator family.
pub const MOMENT_MODES: usize = 4;

/// A unit vector in `L²(S¹, ℂ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexGridFunction", into = "ComplexGridFunction")]
pub struct SpherePoint {
    f: ComplexGridFunction,
}

impl SpherePoint {
    pub fn new(f: ComplexGridFunction) -> Result<Self> {
        let defect = (f.norm() - 1.0).abs();
        if defect >= SPHERE_TOL {
            return Err(Error::OffSphere { defect });
        }
        Ok(Self { f })
    }

    /// Rescales `f` onto the sphere.
    pub fn normalized(f: ComplexGridFunction) -> Result<Self> {
        let norm = f.norm();
        if norm == 0.0 {
            return Err(Error::Invalid("cannot normalize the zero function".into()));
        }
        Ok(Self { f: &f * (1.0 / norm) })
    }

    pub(crate) fn new_unchecked(f: ComplexGridFunction) -> Self {
        Self { f }
    }

    pub fn f(&self) -> &ComplexGridFunction {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn into_inner(self) -> ComplexGridFunction {
        self.f
    }
}

impl TryFrom<ComplexGridFunction> for SpherePoint {
    type Error = Error;
    fn try_from(f: ComplexGridFunction) -> Result<Self> {
        SpherePoint::new(f)
    }
}

impl From<SpherePoint> for ComplexGridFunction {
    fn from(p: SpherePoint) -> Self {
        p.f
    }
}

/// A tangent vector `F` at `f`, `Re⟨f, F⟩ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    v: ComplexGridFunction,
}

impl TangentVector {
    pub fn new(base: SpherePoint, v: ComplexGridFunction) -> Result<Self> {
        if base.n() != v.n() {
            return Err(Error::SizeMismatch(base.n(), v.n()));
        }
        let defect = inner(base.f.values(), v.values()).re.abs();
        if defect >= SPHERE_TOL {
            return Err(Error::NotTangent { defect });
        }
        Ok(Self { base, v })
    }

    /// Orthogonal projection of an arbitrary `F` onto `T_f S`.
    pub fn project(base: SpherePoint, v: &ComplexGridFunction) -> Result<Self> {
        if base.n() != v.n() {
            return Err(Error::SizeMismatch(base.n(), v.n()));
        }
        let r = inner(base.f.values(), v.values()).re;
        let v = v - &(base.f() * r);
        Ok(Self { base, v })
    }

    pub(crate) fn new_unchecked(base: SpherePoint, v: ComplexGridFunction) -> Self {
        Self { base, v }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn vector(&self) -> &ComplexGridFunction {
        &self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    fn with_vector(&self, v: ComplexGridFunction) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            v,
        }
    }
}

/// `Re⟨if, F⟩`, twice the contact form.
fn reeb_pairing(f: &[Complex64], v: &[Complex64]) -> f64 {
    // ⟨if, F⟩ = −i⟨f, F⟩
    inner(f, v).im
}

/// `α_f(F) = ½Re⟨if, F⟩`.
pub fn contact_form(v: &TangentVector) -> f64 {
    0.5 * reeb_pairing(v.base.f.values(), v.v.values())
}

/// Reeb field `R_f = 2if`.
pub fn reeb_field(p: &SpherePoint) -> TangentVector {
    TangentVector::new_unchecked(p.clone(), p.f() * (2.0 * I))
}

/// `F − Re⟨if, F⟩·if`, the component in `ker α`.
pub fn project_contact(v: &TangentVector) -> TangentVector {
    let c = reeb_pairing(v.base.f.values(), v.v.values());
    v.with_vector(&v.v - &(v.base.f() * (I * c)))
}

/// `Y_f(F) = i(F − Re⟨if, F⟩·if)`.
pub fn lorentz_force(v: &TangentVector) -> TangentVector {
    let p = project_contact(v);
    p.with_vector(&p.v * I)
}

/// Magnetic geodesic of strength `s` in closed form.
///
/// With `γ(0) = e1` and `γ̇(0) = i c̃ e1 + β e2`, the geodesic stays in
/// `span_ℂ{e1, e2}` and its frame coordinates are
/// `z(t) = A e^{iθ₁t} + B e^{iθ₂t}`, where `θ₁ > θ₂` solve
/// `θ² − sθ − (v² − s c̃) = 0`. When the roots merge the coordinates are
/// `(A + tB) e^{iθt}` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedGeodesic {
    pub e1: ComplexGridFunction,
    pub e2: Option<ComplexGridFunction>,
    pub a0: [Complex64; 2],
    pub b0: [Complex64; 2],
    #[serde(rename = "A")]
    pub a: [Complex64; 2],
    #[serde(rename = "B")]
    pub b: [Complex64; 2],
    pub theta1: f64,
    pub theta2: f64,
    pub s: f64,
    pub v: f64,
    pub ctilde: f64,
    pub degenerate: bool,
}

/// Reduce initial data `(f, F)` to the 3-sphere `S(span_ℂ{f, F})`.
pub fn reduce(v: &TangentVector, s: f64) -> Result<ReducedGeodesic> {
    let speed = v.norm();
    if speed == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let e1 = v.base.f.clone();
    let along = inner(e1.values(), v.v.values());
    let rest = &v.v - &(&e1 * along);
    let beta = rest.norm();
    let (e2, b0) = if beta < SPHERE_TOL {
        (None, [along, ZERO])
    } else {
        (Some(&rest * (1.0 / beta)), [along, Complex64::new(beta, 0.0)])
    };
    let ctilde = reeb_pairing(e1.values(), v.v.values());
    Ok(ReducedGeodesic::from_coordinates(
        e1,
        e2,
        [Complex64::new(1.0, 0.0), ZERO],
        b0,
        s,
        speed,
        ctilde,
    ))
}

impl ReducedGeodesic {
    /// Assemble from frame coordinates of `γ(0)` and `γ̇(0)`.
    pub(crate) fn from_coordinates(
        e1: ComplexGridFunction,
        e2: Option<ComplexGridFunction>,
        a0: [Complex64; 2],
        b0: [Complex64; 2],
        s: f64,
        v: f64,
        ctilde: f64,
    ) -> Self {
        let c = v * v - s * ctilde;
        let disc = s * s + 4.0 * c;
        if disc < DEGENERATE_DISC {
            let theta = 0.5 * s;
            let b = [b0[0] - I * theta * a0[0], b0[1] - I * theta * a0[1]];
            return Self {
                e1,
                e2,
                a0,
                b0,
                a: a0,
                b,
                theta1: theta,
                theta2: theta,
                s,
                v,
                ctilde,
                degenerate: true,
            };
        }
        let root = disc.sqrt();
        let (t1, t2) = (0.5 * (s + root), 0.5 * (s - root));
        // A = (θ₂γ₀ + iγ̇₀)/(θ₂ − θ₁), B = (θ₁γ₀ + iγ̇₀)/(θ₁ − θ₂)
        let a = [0, 1].map(|k| (t2 * a0[k] + I * b0[k]) / (t2 - t1));
        let b = [0, 1].map(|k| (t1 * a0[k] + I * b0[k]) / (t1 - t2));
        Self {
            e1,
            e2,
            a0,
            b0,
            a,
            b,
            theta1: t1,
            theta2: t2,
            s,
            v,
            ctilde,
            degenerate: false,
        }
    }

    /// Coordinate-only geodesic without grid frames; [`Self::assemble`]
    /// yields empty grid functions.
    pub(crate) fn frameless(a0: [Complex64; 2], b0: [Complex64; 2], s: f64, v: f64, ctilde: f64) -> Self {
        let empty = ComplexGridFunction::from_vec_unchecked(Vec::new());
        Self::from_coordinates(empty, None, a0, b0, s, v, ctilde)
    }

    pub fn n(&self) -> usize {
        self.e1.n()
    }

    /// Frame coordinates of `γ`, `γ̇`, `γ̈` at time `t`.
    pub fn coordinates(&self, t: f64) -> [[Complex64; 2]; 3] {
        let mut out = [[ZERO; 2]; 3];
        if self.degenerate {
            let th = self.theta1;
            let e = Complex64::cis(th * t);
            for k in 0..2 {
                let p = self.a[k] + self.b[k] * t;
                out[0][k] = p * e;
                out[1][k] = (self.b[k] + I * th * p) * e;
                out[2][k] = (2.0 * I * th * self.b[k] - th * th * p) * e;
            }
        } else {
            let (t1, t2) = (self.theta1, self.theta2);
            let (w1, w2) = (Complex64::cis(t1 * t), Complex64::cis(t2 * t));
            for k in 0..2 {
                let (p, q) = (self.a[k] * w1, self.b[k] * w2);
                out[0][k] = p + q;
                out[1][k] = I * (t1 * p + t2 * q);
                out[2][k] = -(t1 * t1 * p + t2 * t2 * q);
            }
        }
        out
    }

    /// Grid function `z₁e1 + z₂e2`.
    pub fn assemble(&self, z: [Complex64; 2]) -> ComplexGridFunction {
        let values = match &self.e2 {
            Some(e2) => self
                .e1
                .values()
                .iter()
                .zip(e2.values())
                .map(|(a, b)| z[0] * a + z[1] * b)
                .collect(),
            None => self.e1.values().iter().map(|a| z[0] * a).collect(),
        };
        ComplexGridFunction::from_vec_unchecked(values)
    }

    /// `γ(t)` and `γ̇(t)` as grid functions, without validation.
    pub fn fields(&self, t: f64) -> (ComplexGridFunction, ComplexGridFunction) {
        let [z, zd, _] = self.coordinates(t);
        (self.assemble(z), self.assemble(zd))
    }

    /// Pointwise coefficient functions `A(x)`, `B(x)` (non-degenerate case).
    pub fn pointwise_coefficients(&self) -> (ComplexGridFunction, ComplexGridFunction) {
        (self.assemble(self.a), self.assemble(self.b))
    }

    /// Contact angle `cos ψ = c̃ / v`.
    pub fn cos_psi(&self) -> f64 {
        (self.ctilde / self.v).clamp(-1.0, 1.0)
    }

    /// Frequency gap `θ₁ − θ₂`.
    pub fn gap(&self) -> f64 {
        self.theta1 - self.theta2
    }
}

/// `(γ(t), γ̇(t))`.
pub fn geodesic_eval(rg: &ReducedGeodesic, t: f64) -> (SpherePoint, TangentVector) {
    let (g, gd) = rg.fields(t);
    let p = SpherePoint::new_unchecked(g);
    (p.clone(), TangentVector::new_unchecked(p, gd))
}

/// `‖γ̈ − isγ̇ + (v² − s c̃)γ‖`.
pub fn ode_residual(rg: &ReducedGeodesic, t: f64) -> f64 {
    let [z, zd, zdd] = rg.coordinates(t);
    let c = rg.v * rg.v - rg.s * rg.ctilde;
    let r = [0, 1].map(|k| zdd[k] - I * rg.s * zd[k] + c * z[k]);
    rg.assemble(r).norm()
}

/// Largest distance of `Y_q(w)` from `T_q N`, over random `q ∈ N` and
/// `w ∈ T_q N`, where `N` is the unit sphere of `span_ℂ{e1, e2}`.
pub fn check_totally_magnetic(rg: &ReducedGeodesic, samples: usize, seed: u64) -> Result<f64> {
    let Some(e2) = &rg.e2 else {
        return Err(Error::Precondition("reduced geodesic has a one-dimensional span".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let frame = [rg.e1.values(), e2.values()];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (z0, z1) = (gauss(), gauss());
        let norm = (z0.norm_sqr() + z1.norm_sqr()).sqrt();
        let q = rg.assemble([z0 / norm, z1 / norm]);
        let w = rg.assemble([gauss(), gauss()]);
        let base = SpherePoint::new_unchecked(q);
        let w = TangentVector::project(base, &w)?;
        let y = lorentz_force(&w);
        worst = worst.max(tangent_defect(&y, &frame));
    }
    Ok(worst)
}

/// Distance of `y` from `T_q N`.
fn tangent_defect(y: &TangentVector, frame: &[&[Complex64]; 2]) -> f64 {
    let yv = y.vector().values();
    let c0 = inner(frame[0], yv);
    let c1 = inner(frame[1], yv);
    let proj: Vec<Complex64> = frame[0]
        .iter()
        .zip(frame[1])
        .map(|(a, b)| c0 * a + c1 * b)
        .collect();
    let q = y.base().f().values();
    let r = inner(q, &proj).re;
    let diff: Vec<Complex64> = yv
        .iter()
        .zip(&proj)
        .zip(q)
        .map(|((y, p), q)| y - (p - r * q))
        .collect();
    inner(&diff, &diff).re.sqrt()
}

/// Number of moment-map generators, `1 + 2J`.
pub fn moment_generator_count() -> usize {
    1 + 2 * MOMENT_MODES
}

/// Real profile `g_k` of generator `A_k = i·g_k`: `1`, then `cos 2πjx`,
/// `sin 2πjx` for `j = 1..=J`.
pub fn moment_generator(n: usize, k: usize) -> Result<RealGridFunction> {
    if k >= moment_generator_count() {
        return Err(Error::UnknownGenerator(k));
    }
    if k == 0 {
        return RealGridFunction::constant(n, 1.0);
    }
    let j = ((k + 1) / 2) as f64;
    if k % 2 == 1 {
        RealGridFunction::from_fn(n, |x| (TAU * j * x).cos())
    } else {
        RealGridFunction::from_fn(n, |x| (TAU * j * x).sin())
    }
}

/// `μ_k = Re⟨A_k f, F⟩ − s·½Re⟨if, A_k f⟩`, conserved along geodesics of strength `s`.
pub fn moment_map(v: &TangentVector, k: usize, s: f64) -> Result<f64> {
    let g = moment_generator(v.base.n(), k)?;
    let f = v.base.f();
    let af = &f.scale_by(&g) * I;
    let first = inner(af.values(), v.v.values()).re;
    let second = reeb_pairing(f.values(), af.values());
    Ok(first - 0.5 * s * second)
}

/// Measured and predicted geodesic curvature of the Hopf projection of a
/// unit-speed geodesic onto the sphere of radius ½.
pub fn hopf_curvature_check(rg: &ReducedGeodesic) -> Result<(f64, f64)> {
    if (rg.v - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("unit speed required, got {}", rg.v)));
    }
    let cos_psi = rg.cos_psi();
    let sin_psi = (1.0 - cos_psi * cos_psi).sqrt();
    if sin_psi < 1e-6 {
        return Err(Error::DegenerateAngle { sin_psi });
    }
    let predicted = (2.0 * cos_psi - rg.s) / sin_psi;
    let hopf = |t: f64| {
        let [z, _, _] = rg.coordinates(t);
        let w = z[0].conj() * z[1];
        [
            w.re,
            w.im,
            0.5 * (z[0].norm_sqr() - z[1].norm_sqr()),
        ]
    };
    let h = 1e-3;
    let mut total = 0.0;
    let probes = [0.0, 0.37, 1.1, 2.9];
    for &t in &probes {
        let p = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|k| hopf(t + k * h));
        let d1: [f64; 3] =
            std::array::from_fn(|i| (-p[4][i] + 8.0 * p[3][i] - 8.0 * p[1][i] + p[0][i]) / (12.0 * h));
        let d2: [f64; 3] = std::array::from_fn(|i| {
            (-p[4][i] + 16.0 * p[3][i] - 30.0 * p[2][i] + 16.0 * p[1][i] - p[0][i]) / (12.0 * h * h)
        });
        let cross = [
            d1[1] * d2[2] - d1[2] * d2[1],
            d1[2] * d2[0] - d1[0] * d2[2],
            d1[0] * d2[1] - d1[1] * d2[0],
        ];
        let r = (p[2][0].powi(2) + p[2][1].powi(2) + p[2][2].powi(2)).sqrt();
        let normal_part = -(cross[0] * p[2][0] + cross[1] * p[2][1] + cross[2] * p[2][2]) / r;
        let speed = (d1[0].powi(2) + d1[1].powi(2) + d1[2].powi(2)).sqrt();
        total += normal_part / speed.powi(3);
    }
    Ok((total / probes.len() as f64, predicted))
}

/// `min_x |γ(t, x)|` and its location, refined on the trigonometric interpolant.
pub fn min_modulus(rg: &ReducedGeodesic, t: f64) -> (f64, f64) {
    let (g, _) = rg.fields(t);
    min_modulus_of(&g)
}

pub(crate) fn min_modulus_of(g: &ComplexGridFunction) -> (f64, f64) {
    let n = g.n();
    let (j, _) = g
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.norm_sqr()))
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    let h = 1.0 / n as f64;
    let x0 = j as f64 * h;
    let interp = TrigInterpolant::new(g.values());
    let (x, m2) = minimize_scalar(|x| interp.eval(x).norm_sqr(), x0 - h, x0 + h, 1e-12);
    let node = g.values()[j].norm_sqr();
    if m2 < node {
        (m2.max(0.0).sqrt(), x.rem_euclid(1.0))
    } else {
        (node.sqrt(), x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    const N: usize = 64;

    fn one() -> SpherePoint {
        SpherePoint::new(ComplexGridFunction::constant(N, Complex64::new(1.0, 0.0)).unwrap()).unwrap()
    }

    fn mode(k: f64) -> ComplexGridFunction {
        ComplexGridFunction::from_fn(N, |x| Complex64::cis(TAU * k * x)).unwrap()
    }

    /// Point and tangent with prescribed speed and contact pairing, built in a
    /// two-mode frame.
    fn data(v: f64, ctilde: f64) -> TangentVector {
        let beta = (v * v - ctilde * ctilde).max(0.0).sqrt();
        let f = one();
        let e2 = mode(1.0);
        let tangent = &(f.f() * (I * ctilde)) + &(&e2 * beta);
        TangentVector::new(f, tangent).unwrap()
    }

    #[test]
    fn sphere_membership() {
        assert!(matches!(
            SpherePoint::new(ComplexGridFunction::constant(N, Complex64::new(2.0, 0.0)).unwrap()),
            Err(Error::OffSphere { .. })
        ));
        assert!(matches!(
            TangentVector::new(one(), one().into_inner()),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn contact_form_examples() {
        let f = SpherePoint::new(mode(2.0)).unwrap();
        assert!((contact_form(&reeb_field(&f)) - 1.0).abs() < 1e-14);
        let v = TangentVector::new(one(), &mode(1.0) * I).unwrap();
        assert!(contact_form(&v).abs() < 1e-15);
        let v = TangentVector::new(one(), one().f() * I).unwrap();
        assert!((contact_form(&v) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lorentz_force_examples() {
        let f = one();
        let reeb = TangentVector::new(f.clone(), f.f() * I).unwrap();
        assert!(lorentz_force(&reeb).norm() < 1e-15);
        let w = TangentVector::new(f, mode(3.0)).unwrap();
        let y = lorentz_force(&w);
        assert!((y.vector() - &(&mode(3.0) * I)).norm() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let f = one();
        let reeb = TangentVector::new(f.clone(), f.f() * I).unwrap();
        assert!(project_contact(&reeb).norm() < 1e-15);
        let w = TangentVector::new(f, mode(1.0)).unwrap();
        assert!((project_contact(&w).vector() - w.vector()).norm() < 1e-15);
    }

    #[test]
    fn reduce_roots() {
        let rg = reduce(&data(1.0, 0.3), 0.0).unwrap();
        assert!((rg.theta1 - 1.0).abs() < 1e-15 && (rg.theta2 + 1.0).abs() < 1e-15);
        let rg = reduce(&data(1.0, 0.0), 2.0).unwrap();
        assert!((rg.theta1 - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!((rg.theta2 - (1.0 - 2f64.sqrt())).abs() < 1e-14);
        assert!((rg.theta1 + rg.theta2 - rg.s).abs() < 1e-14);
        assert!((rg.theta1 * rg.theta2 + (rg.v * rg.v - rg.s * rg.ctilde)).abs() < 1e-14);
    }

    #[test]
    fn reduce_rejects_zero_velocity() {
        let zero = ComplexGridFunction::constant(N, ZERO).unwrap();
        let v = TangentVector::new(one(), zero).unwrap();
        assert_eq!(reduce(&v, 1.0), Err(Error::ZeroVelocity));
    }

    #[test]
    fn reeb_data_is_degenerate() {
        let v = 0.7;
        let rg = reduce(&data(v, v), 2.0 * v).unwrap();
        assert!(rg.degenerate);
        assert!(rg.e2.is_none());
        for t in [0.0, 0.5, 3.0] {
            let (g, _) = geodesic_eval(&rg, t);
            let expect = one().f() * Complex64::cis(v * t);
            assert!((g.f() - &expect).norm() < 1e-14);
            assert!(ode_residual(&rg, t) < 1e-13);
            assert!((min_modulus(&rg, t).0 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn great_circles_without_field() {
        let d = data(1.0, 0.4);
        let rg = reduce(&d, 0.0).unwrap();
        for t in [0.0, 0.3, 1.7, 9.0] {
            let (g, gd) = geodesic_eval(&rg, t);
            let expect = &(d.base().f() * t.cos()) + &(d.vector() * t.sin());
            assert!((g.f() - &expect).norm() < 1e-12);
            assert!(ode_residual(&rg, t) < 1e-12);
            assert!((gd.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_time_reproduces_data() {
        let d = data(1.3, -0.2);
        let rg = reduce(&d, 1.7).unwrap();
        let (g, gd) = geodesic_eval(&rg, 0.0);
        assert!((g.f() - d.base().f()).norm() < 1e-15);
        assert!((gd.vector() - d.vector()).norm() < 1e-14);
    }

    #[test]
    fn unit_speed_coefficient_matches_contact_angle() {
        let psi = 1.1_f64;
        let rg = reduce(&data(1.0, psi.cos()), 1.5).unwrap();
        assert!((rg.v * rg.v - rg.s * rg.ctilde - (1.0 - 1.5 * psi.cos())).abs() < 1e-14);
        assert!((rg.cos_psi() - psi.cos()).abs() < 1e-14);
    }

    #[test]
    fn totally_magnetic_span() {
        let rg = reduce(&data(1.0, 0.2), 1.3).unwrap();
        assert!(check_totally_magnetic(&rg, 100, 7).unwrap() < 1e-9);
        let q = SpherePoint::new(rg.e1.clone()).unwrap();
        let iq = TangentVector::new(q, &rg.e1 * I).unwrap();
        assert!(lorentz_force(&iq).norm() < 1e-15);
        let reeb = reduce(&data(1.0, 1.0), 2.0).unwrap();
        assert!(check_totally_magnetic(&reeb, 1, 0).is_err());
    }

    #[test]
    fn moment_map_examples() {
        let f = one();
        let reeb = TangentVector::new(f.clone(), f.f() * I).unwrap();
        assert!((moment_map(&reeb, 0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(moment_map(&reeb, 9, 1.0), Err(Error::UnknownGenerator(9)));
        // A f = i cos(2πx) is orthogonal to F = e^{4πix}, and α(Af) = 0
        let w = TangentVector::new(f, mode(2.0)).unwrap();
        assert!(moment_map(&w, 1, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn moment_map_conserved() {
        let base = SpherePoint::normalized(
            ComplexGridFunction::from_fn(N, |x| {
                Complex64::new(1.0 + 0.3 * (TAU * x).cos(), 0.2 * (2.0 * TAU * x).sin())
            })
            .unwrap(),
        )
        .unwrap();
        let raw = ComplexGridFunction::from_fn(N, |x| {
            Complex64::new(0.4 * (TAU * x).sin(), 0.5 + 0.1 * (3.0 * TAU * x).cos())
        })
        .unwrap();
        let v = TangentVector::project(base, &raw).unwrap();
        let s = 1.7;
        let rg = reduce(&v, s).unwrap();
        for k in 0..moment_generator_count() {
            let m0 = moment_map(&v, k, s).unwrap();
            for t in [0.4, 2.2, 7.5] {
                let (_, gd) = geodesic_eval(&rg, t);
                assert!((moment_map(&gd, k, s).unwrap() - m0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hopf_predictions() {
        let rg = reduce(&data(1.0, 0.0), 0.0).unwrap();
        let (measured, predicted) = hopf_curvature_check(&rg).unwrap();
        assert!(predicted.abs() < 1e-15);
        assert!(measured.abs() < 1e-6);
        let rg = reduce(&data(1.0, (FRAC_PI_2).cos()), 1.0).unwrap();
        let (measured, predicted) = hopf_curvature_check(&rg).unwrap();
        assert!((predicted + 1.0).abs() < 1e-12);
        assert!((measured - predicted).abs() < 1e-6);
        let rg = reduce(&data(1.0, 0.6), 0.8).unwrap();
        let (measured, predicted) = hopf_curvature_check(&rg).unwrap();
        assert!((measured - predicted).abs() < 1e-6, "{measured} {predicted}");
    }

    #[test]
    fn hopf_rejects_reeb_angle() {
        let rg = reduce(&data(1.0, 1.0), 0.5).unwrap();
        assert!(matches!(hopf_curvature_check(&rg), Err(Error::DegenerateAngle { .. })));
    }

    #[test]
    fn min_modulus_of_known_profile() {
        // 1 + e^{2πix} vanishes at x = 1/2
        let g = ComplexGridFunction::from_fn(N, |x| {
            Complex64::new(1.0, 0.0) + Complex64::cis(TAU * x)
        })
        .unwrap();
        let (m, x) = min_modulus_of(&g);
        assert!(m < 1e-6 && (x - 0.5).abs() < 1e-6);
        let h = ComplexGridFunction::from_fn(N, |x| Complex64::new(1.0 + 0.5 * (TAU * x - 0.1).cos(), 0.0)).unwrap();
        let (m, x) = min_modulus_of(&h);
        assert!((m - 0.5).abs() < 1e-12);
        assert!((x - (0.5 + 0.1 / TAU)).abs() < 1e-6);
    }

    #[test]
    fn reduced_geodesic_json_round_trip() {
        let rg = reduce(&data(1.0, 0.3), 1.0).unwrap();
        let text = serde_json::to_string(&rg).unwrap();
        assert!(text.contains("\"theta1\""));
        let back: ReducedGeodesic = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rg);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point(c: &[(f64, f64)]) -> SpherePoint {
            let f = ComplexGridFunction::from_fn(N, |x| {
                c.iter().enumerate().map(|(j, (a, b))| Complex64::new(*a, *b) * Complex64::cis(TAU * (j as f64 - 2.0) * x)).sum()
            })
            .unwrap();
            SpherePoint::normalized(f).unwrap()
        }

        fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5).prop_filter("nonzero", |c| c.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn closed_form_conserves_invariants(cf in coeffs(), cv in coeffs(), s in -3.0..3.0f64, t in 0.0..20.0f64) {
                let f = point(&cf);
                let tv = TangentVector::project(f, &point(&cv).into_inner()).unwrap();
                prop_assume!(tv.norm() > 1e-3);
                let rg = reduce(&tv, s).unwrap();
                let (p, w) = geodesic_eval(&rg, t);
                prop_assert!((p.f().norm() - 1.0).abs() < 1e-10);
                prop_assert!((w.norm() - tv.norm()).abs() < 1e-10);
                prop_assert!((contact_form(&w) - contact_form(&tv)).abs() < 1e-10);
                prop_assert!(ode_residual(&rg, t) < 1e-9);
            }

            #[test]
            fn moment_maps_are_conserved(cf in coeffs(), cv in coeffs(), s in -3.0..3.0f64, t in 0.0..10.0f64, k in 0usize..9) {
                let tv = TangentVector::project(point(&cf), &point(&cv).into_inner()).unwrap();
                prop_assume!(tv.norm() > 1e-3);
                let rg = reduce(&tv, s).unwrap();
                let (_, w) = geodesic_eval(&rg, t);
                prop_assert!((moment_map(&w, k, s).unwrap() - moment_map(&tv, k, s).unwrap()).abs() < 1e-9);
            }

            #[test]
            fn lorentz_force_is_skew(cf in coeffs(), cu in coeffs(), cw in coeffs()) {
                let f = point(&cf);
                let u = TangentVector::project(f.clone(), &point(&cu).into_inner()).unwrap();
                let w = TangentVector::project(f, &point(&cw).into_inner()).unwrap();
                let a = inner(lorentz_force(&u).vector().values(), w.vector().values()).re;
                let b = inner(u.vector().values(), lorentz_force(&w).vector().values()).re;
                prop_assert!((a + b).abs() < 1e-12);
            }
        }
    }
}
