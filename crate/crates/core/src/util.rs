//! Thin adapters over the scalar and simplex optimizers and Gauss–Legendre
//! quadrature used by the solvers.

use std::num::NonZeroUsize;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::BrentOpt;
use argmin::solver::neldermead::NelderMead;
use gauss_quad::GaussLegendre;

struct Scalar<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Scalar<F> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, x: &f64) -> Result<f64, argmin::core::Error> {
        Ok((self.0)(*x))
    }
}

struct Multi<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Multi<F> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok((self.0)(x))
    }
}

/// Brent minimization of `f` on `[a, b]`. Returns `(argmin, min)`.
pub fn minimize_scalar(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let solver = BrentOpt::new(lo, hi).set_tolerance(1e-15, tol);
    let run = Executor::new(Scalar(&f), solver)
        .configure(|s| s.max_iters(500))
        .run();
    match run {
        Ok(res) => {
            let x = res.state().get_best_param().copied().unwrap_or(0.5 * (lo + hi));
            (x, f(x))
        }
        Err(_) => {
            let x = 0.5 * (lo + hi);
            (x, f(x))
        }
    }
}

/// Nelder–Mead from `x0` with an axis-aligned initial simplex of size `step`.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iters: u64,
    sd_tol: f64,
) -> (Vec<f64>, f64) {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let fallback = (x0.to_vec(), f(x0));
    let Ok(solver) = NelderMead::new(simplex).with_sd_tolerance(sd_tol) else {
        return fallback;
    };
    match Executor::new(Multi(&f), solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
    {
        Ok(res) => {
            let state = res.state();
            match state.get_best_param() {
                Some(p) => (p.clone(), state.get_best_cost()),
                None => fallback,
            }
        }
        Err(_) => fallback,
    }
}

/// `∫_a^b f` by Gauss–Legendre with `degree` nodes on each of `pieces` panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, degree: usize, pieces: usize) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(degree.max(1)).expect("nonzero"));
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(lo, lo + h, &f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_vertex() {
        let (x, fx) = minimize_scalar(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let (p, fx) = nelder_mead(rosen, &[-1.0, 1.0], 0.5, 5000, 1e-14);
        assert!(fx < 1e-10, "{fx}");
        assert!((p[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn quadrature_is_exact_for_polynomials_and_accurate_for_trig() {
        let v = gauss_legendre(|x| x.powi(7), 0.0, 2.0, 8, 1);
        assert!((v - 32.0).abs() < 1e-12);
        let w = gauss_legendre(f64::sin, 0.0, std::f64::consts::PI, 12, 3);
        assert!((w - 2.0).abs() < 1e-14);
    }
}
