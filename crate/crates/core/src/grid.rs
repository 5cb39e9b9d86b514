//! Periodic functions on the unit circle `S¹ = ℝ/ℤ` sampled at `n` uniform
//! nodes `x_j = j/n`.
//!
//! All calculus is spectral: derivatives, antiderivatives and off-grid
//! evaluation go through the discrete Fourier transform, so band-limited data
//! is handled to machine precision. Functions with a linear part (a
//! diffeomorphism `φ(x) = x + r(x)`, an unwrapped phase) are stored as a slope
//! plus a periodic remainder and the spectral machinery acts on the remainder.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default resolution.
pub const DEFAULT_N: usize = 512;
/// Below this minimum slope a diffeomorphism is treated as degenerate.
pub const EPS_MONO: f64 = 1e-8;
/// Below this modulus a wave function is treated as vanishing.
pub const EPS_ZERO: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, FftPair>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> FftPair {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

pub fn check_size(n: usize) -> Result<()> {
    if n >= 8 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidGridSize(n))
    }
}

/// Grid nodes `x_j = j/n`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

/// Signed wavenumber of FFT slot `j`; the Nyquist slot maps to `+n/2`.
#[inline]
pub(crate) fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Fourier coefficients `c_k` with `f(x_j) = Σ_k c_k e^{2πikx_j}`.
pub fn fourier_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let (fwd, _) = plans(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`fourier_coefficients`].
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let (_, inv) = plans(n);
    let mut buf = coeffs.to_vec();
    inv.process(&mut buf);
    buf
}

fn real_to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub(crate) fn spectral_derivative(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut c = fourier_coefficients(values);
    for (j, cj) in c.iter_mut().enumerate() {
        if j == n / 2 {
            *cj = Complex64::new(0.0, 0.0);
        } else {
            *cj *= I * (TAU * wavenumber(j, n));
        }
    }
    synthesize(&c)
}

pub(crate) fn spectral_derivative_real(values: &[f64]) -> Vec<f64> {
    spectral_derivative(&real_to_complex(values))
        .into_iter()
        .map(|c| c.re)
        .collect()
}

/// Antiderivative of the zero-mean part of `values`, pinned to vanish at `x = 0`.
/// Returns `(mean, antiderivative)`.
pub(crate) fn periodic_antiderivative(values: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let n = values.len();
    let mut c = fourier_coefficients(values);
    let mean = c[0];
    c[0] = Complex64::new(0.0, 0.0);
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        if j == n / 2 {
            // sin(πnx) vanishes at every node
            *cj = Complex64::new(0.0, 0.0);
        } else {
            *cj /= I * (TAU * wavenumber(j, n));
        }
    }
    let mut out = synthesize(&c);
    let at_zero = out[0];
    out.iter_mut().for_each(|v| *v -= at_zero);
    (mean, out)
}

pub(crate) fn periodic_antiderivative_real(values: &[f64]) -> (f64, Vec<f64>) {
    let (mean, out) = periodic_antiderivative(&real_to_complex(values));
    (mean.re, out.into_iter().map(|c| c.re).collect())
}

/// Trigonometric interpolant through `n` equispaced samples.
///
/// The Nyquist mode is split symmetrically (`c cos(πnx)`), so real samples
/// give a real interpolant.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(values: &[Complex64]) -> Self {
        Self {
            coeffs: fourier_coefficients(values),
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(&real_to_complex(values))
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_with_derivative(x).0
    }

    /// Value and first derivative of the interpolant at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (Complex64, Complex64) {
        let n = self.coeffs.len();
        let half = n / 2;
        let x = x.rem_euclid(1.0);
        let mut value = self.coeffs[0];
        let mut deriv = Complex64::new(0.0, 0.0);
        let step = Complex64::cis(TAU * x);
        let mut w = step;
        for k in 1..half {
            if k % 32 == 0 {
                // re-anchor the running power to keep rounding drift down
                w = Complex64::cis(TAU * k as f64 * x);
            }
            let wc = w.conj();
            let plus = self.coeffs[k] * w;
            let minus = self.coeffs[n - k] * wc;
            value += plus + minus;
            deriv += (plus - minus) * (I * (TAU * k as f64));
            w *= step;
        }
        let arg = PI * n as f64 * x;
        value += self.coeffs[half] * arg.cos();
        deriv -= self.coeffs[half] * (PI * n as f64 * arg.sin());
        (value, deriv)
    }
}

/// Real grid function stored as `slope·x + remainder(x)`, remainder periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GridFunctionRecord", try_from = "GridFunctionRecord")]
pub struct RealGridFunction {
    slope: f64,
    values: Vec<f64>,
}

impl RealGridFunction {
    /// Periodic function from its samples.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_slope(0.0, values)
    }

    pub fn with_slope(slope: f64, remainder: Vec<f64>) -> Result<Self> {
        check_size(remainder.len())?;
        if !slope.is_finite() {
            return Err(Error::Invalid("non-finite slope".into()));
        }
        if let Some(j) = remainder.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self {
            slope,
            values: remainder,
        })
    }

    /// From full samples `f(x_j)` of a function whose linear part is `slope·x`.
    pub fn from_full_values(slope: f64, full: &[f64]) -> Result<Self> {
        let n = full.len();
        let rem = full
            .iter()
            .enumerate()
            .map(|(j, v)| v - slope * j as f64 / n as f64)
            .collect();
        Self::with_slope(slope, rem)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(nodes(n).into_iter().map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    /// The identity map `x ↦ x`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::with_slope(1.0, vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn remainder(&self) -> &[f64] {
        &self.values
    }

    pub fn is_periodic(&self) -> bool {
        self.slope == 0.0
    }

    /// `f(x_j)` including the linear part.
    pub fn full_values(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| v + self.slope * j as f64 / n)
            .collect()
    }

    pub fn derivative(&self) -> RealGridFunction {
        let d = spectral_derivative_real(&self.values);
        RealGridFunction {
            slope: 0.0,
            values: d.into_iter().map(|v| v + self.slope).collect(),
        }
    }

    /// `F(x) = ∫₀ˣ f`, with the mean integrated into the linear part.
    pub fn antiderivative0(&self) -> RealGridFunction {
        let n = self.n();
        let (mean, mut rem) = periodic_antiderivative_real(&self.values);
        // ∫₀ˣ s·y dy = s x/2 + s (x² − x)/2, the second piece periodic (kinked)
        if self.slope != 0.0 {
            for (j, r) in rem.iter_mut().enumerate() {
                let x = j as f64 / n as f64;
                *r += 0.5 * self.slope * (x * x - x);
            }
        }
        RealGridFunction {
            slope: mean + 0.5 * self.slope,
            values: rem,
        }
    }

    /// `∫_{S¹} f dx`: rectangle rule on the remainder, exact on the linear part.
    pub fn integral(&self) -> f64 {
        mean(&self.values) + 0.5 * self.slope
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::from_real(&self.values)
    }

    /// Trigonometric interpolation of the remainder plus the exact linear part.
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.interpolant().eval(x).re
    }

    pub fn min(&self) -> f64 {
        self.full_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.full_values().into_iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexGridFunction {
        ComplexGridFunction {
            values: real_to_complex(&self.full_values()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RealGridFunction> {
        RealGridFunction::new(self.full_values().into_iter().map(f).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (x, v) in nodes(self.n()).into_iter().zip(self.full_values()) {
            let _ = writeln!(out, "{x},{v},0");
        }
        out
    }
}

/// Complex periodic grid function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GridFunctionRecord", try_from = "GridFunctionRecord")]
pub struct ComplexGridFunction {
    values: Vec<Complex64>,
}

impl ComplexGridFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        check_size(values.len())?;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(nodes(n).into_iter().map(f).collect())
    }

    pub fn constant(n: usize, c: Complex64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn from_parts(re: &RealGridFunction, im: &RealGridFunction) -> Result<Self> {
        if re.n() != im.n() {
            return Err(Error::SizeMismatch(re.n(), im.n()));
        }
        Self::new(
            re.full_values()
                .into_iter()
                .zip(im.full_values())
                .map(|(a, b)| Complex64::new(a, b))
                .collect(),
        )
    }

    pub(crate) fn from_vec_unchecked(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn derivative(&self) -> ComplexGridFunction {
        Self {
            values: spectral_derivative(&self.values),
        }
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.n() as f64
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(&self.values)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.interpolant().eval(x)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.n() as f64
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn re(&self) -> RealGridFunction {
        RealGridFunction {
            slope: 0.0,
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }

    pub fn im(&self) -> RealGridFunction {
        RealGridFunction {
            slope: 0.0,
            values: self.values.iter().map(|v| v.im).collect(),
        }
    }

    /// Pointwise `|f|²`.
    pub fn modulus_sqr(&self) -> RealGridFunction {
        RealGridFunction {
            slope: 0.0,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn min_modulus(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Pointwise product.
    pub fn pointwise(&self, other: &ComplexGridFunction) -> ComplexGridFunction {
        assert_eq!(self.n(), other.n(), "grid size mismatch");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Pointwise product with a real function (its full values).
    pub fn scale_by(&self, w: &RealGridFunction) -> ComplexGridFunction {
        assert_eq!(self.n(), w.n(), "grid size mismatch");
        Self {
            values: self
                .values
                .iter()
                .zip(w.full_values())
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (x, v) in nodes(self.n()).into_iter().zip(&self.values) {
            let _ = writeln!(out, "{x},{},{}", v.re, v.im);
        }
        out
    }
}

impl Add for &ComplexGridFunction {
    type Output = ComplexGridFunction;
    fn add(self, rhs: &ComplexGridFunction) -> ComplexGridFunction {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        ComplexGridFunction {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexGridFunction {
    type Output = ComplexGridFunction;
    fn sub(self, rhs: &ComplexGridFunction) -> ComplexGridFunction {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        ComplexGridFunction {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<Complex64> for &ComplexGridFunction {
    type Output = ComplexGridFunction;
    fn mul(self, rhs: Complex64) -> ComplexGridFunction {
        ComplexGridFunction {
            values: self.values.iter().map(|a| a * rhs).collect(),
        }
    }
}

impl Mul<f64> for &ComplexGridFunction {
    type Output = ComplexGridFunction;
    fn mul(self, rhs: f64) -> ComplexGridFunction {
        ComplexGridFunction {
            values: self.values.iter().map(|a| a * rhs).collect(),
        }
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `⟨f, g⟩ = ∫ conj(f)·g dx`. The real part is the round metric, the imaginary
/// part the `dα` pairing.
pub fn hermitian_inner(f: &ComplexGridFunction, g: &ComplexGridFunction) -> Result<Complex64> {
    if f.n() != g.n() {
        return Err(Error::SizeMismatch(f.n(), g.n()));
    }
    Ok(inner(f.values(), g.values()))
}

#[inline]
pub(crate) fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<Complex64>() / f.len() as f64
}

/// Node values and interpolant of a map `φ = x + r` with `φ(0) = 0`.
struct MonotoneMap {
    knots: Vec<f64>,
    remainder: TrigInterpolant,
}

impl MonotoneMap {
    fn new(phi: &RealGridFunction) -> Result<Self> {
        if (phi.slope() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "monotone inversion needs slope 1, got {}",
                phi.slope()
            )));
        }
        if phi.remainder()[0].abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "monotone inversion needs phi(0) = 0, got {:e}",
                phi.remainder()[0]
            )));
        }
        let mut knots = phi.full_values();
        knots.push(1.0 + knots[0]);
        Ok(Self {
            knots,
            remainder: phi.interpolant(),
        })
    }

    fn n(&self) -> usize {
        self.knots.len() - 1
    }

    /// Smallest `x` in `[0, 1)` with `φ(x) = y` for `y` in `[0, 1)`.
    fn solve(&self, y: f64) -> f64 {
        let n = self.n();
        let h = 1.0 / n as f64;
        // first node interval whose right end exceeds y
        let j = self.knots[1..].partition_point(|&v| v <= y).min(n - 1);
        let (mut lo, mut hi) = (j as f64 * h, (j + 1) as f64 * h);
        let (mut glo, ghi) = (self.knots[j] - y, self.knots[j + 1] - y);
        if glo >= 0.0 {
            return lo;
        }
        let mut x = lo + h * (-glo / (ghi - glo)).clamp(0.0, 1.0);
        for _ in 0..200 {
            let (r, dr) = self.remainder.eval_with_derivative(x);
            let g = x + r.re - y;
            if g.abs() < 1e-15 {
                break;
            }
            if g < 0.0 {
                lo = x;
                glo = g;
            } else {
                hi = x;
            }
            let slope = 1.0 + dr.re;
            let newton = x - g / slope;
            x = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        let _ = glo;
        x
    }

    fn solve_any(&self, y: f64) -> f64 {
        let k = y.floor();
        self.solve(y - k) + k
    }
}

/// `ψ = φ⁻¹` sampled on the grid, for `φ(0) = 0`, `φ(1) = 1` strictly increasing.
pub fn invert_monotone(phi: &RealGridFunction, eps_mono: f64) -> Result<RealGridFunction> {
    let targets = nodes(phi.n());
    let full = invert_monotone_at(phi, &targets, eps_mono)?;
    RealGridFunction::from_full_values(1.0, &full)
}

/// `φ⁻¹(y)` at arbitrary real targets (using `φ(x + 1) = φ(x) + 1`).
pub fn invert_monotone_at(phi: &RealGridFunction, targets: &[f64], eps_mono: f64) -> Result<Vec<f64>> {
    let min_slope = phi.derivative().min();
    if min_slope <= eps_mono {
        return Err(Error::NonMonotone { min_slope });
    }
    let map = MonotoneMap::new(phi)?;
    Ok(targets.iter().map(|&y| map.solve_any(y)).collect())
}

/// Generalized inverse `inf{x : φ(x) ≥ y}` of a nondecreasing map; flats
/// resolve to their left end.
pub fn invert_nondecreasing_at(phi: &RealGridFunction, targets: &[f64]) -> Result<Vec<f64>> {
    let map = MonotoneMap::new(phi)?;
    Ok(targets.iter().map(|&y| map.solve_any(y)).collect())
}

/// Continuous argument of a nowhere-vanishing function.
///
/// Returns `θ` with `f = |f| e^{iθ}`, `θ(0) ∈ (−π, π]`, stored with slope
/// `2π·winding`, together with the winding number.
pub fn unwrap_phase(f: &ComplexGridFunction, eps_zero: f64) -> Result<(RealGridFunction, i64)> {
    let min_modulus = f.min_modulus();
    if min_modulus <= eps_zero {
        return Err(Error::NearZero { min_modulus });
    }
    let v = f.values();
    let n = v.len();
    let mut theta = Vec::with_capacity(n);
    theta.push(v[0].arg());
    for j in 1..n {
        let step = (v[j] * v[j - 1].conj()).arg();
        theta.push(theta[j - 1] + step);
    }
    let closing = theta[n - 1] + (v[0] * v[n - 1].conj()).arg();
    let winding = ((closing - theta[0]) / TAU).round() as i64;
    let phase = RealGridFunction::from_full_values(TAU * winding as f64, &theta)?;
    Ok((phase, winding))
}

/// JSON form shared by real and complex grid functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunctionRecord {
    pub n: usize,
    pub slope: f64,
    pub values_re: Vec<f64>,
    #[serde(default)]
    pub values_im: Vec<f64>,
}

impl From<RealGridFunction> for GridFunctionRecord {
    fn from(f: RealGridFunction) -> Self {
        Self {
            n: f.n(),
            slope: f.slope,
            values_im: vec![0.0; f.n()],
            values_re: f.values,
        }
    }
}

impl TryFrom<GridFunctionRecord> for RealGridFunction {
    type Error = Error;
    fn try_from(r: GridFunctionRecord) -> Result<Self> {
        if r.values_re.len() != r.n {
            return Err(Error::SizeMismatch(r.n, r.values_re.len()));
        }
        if r.values_im.iter().any(|v| *v != 0.0) {
            return Err(Error::Invalid("real grid function has imaginary part".into()));
        }
        RealGridFunction::with_slope(r.slope, r.values_re)
    }
}

impl From<ComplexGridFunction> for GridFunctionRecord {
    fn from(f: ComplexGridFunction) -> Self {
        Self {
            n: f.n(),
            slope: 0.0,
            values_re: f.values.iter().map(|v| v.re).collect(),
            values_im: f.values.iter().map(|v| v.im).collect(),
        }
    }
}

impl TryFrom<GridFunctionRecord> for ComplexGridFunction {
    type Error = Error;
    fn try_from(r: GridFunctionRecord) -> Result<Self> {
        if r.values_re.len() != r.n {
            return Err(Error::SizeMismatch(r.n, r.values_re.len()));
        }
        if r.slope != 0.0 {
            return Err(Error::Invalid("complex grid function cannot carry a slope".into()));
        }
        let im = if r.values_im.is_empty() {
            vec![0.0; r.n]
        } else if r.values_im.len() == r.n {
            r.values_im
        } else {
            return Err(Error::SizeMismatch(r.n, r.values_im.len()));
        };
        ComplexGridFunction::new(
            r.values_re
                .into_iter()
                .zip(im)
                .map(|(a, b)| Complex64::new(a, b))
                .collect(),
        )
    }
}
