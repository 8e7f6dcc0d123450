//! Modal forward integration of y' + μ_k y = b_k u and the admissibility constant.
//!
//! Each step multiplies by e^{-μh} exactly and adds b ∫ e^{-μ(t_{i+1}-s)} p(s) ds,
//! where p is the cubic through four neighbouring samples of u (shifted at the
//! ends), integrated against the exponential in closed form.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::ControlSignal;
use crate::spectral::{Kind, SpectralSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalState {
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl ModalState {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs, time: 0.0 }
    }
}

pub fn residual_norm(state: &ModalState) -> f64 {
    state.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn mu(kind: Kind, lambda: f64) -> Complex64 {
    match kind {
        Kind::Parabolic => Complex64::new(lambda, 0.0),
        Kind::Dispersive => Complex64::new(0.0, lambda),
    }
}

/// F_p(c) = ∫_0^1 e^{-c(1-x)} x^p dx for p = 0..=3, Re c ≥ 0.
fn exp_moments(c: Complex64) -> [Complex64; 4] {
    if c.norm() < 2.0 {
        moments_series(c)
    } else {
        moments_recurrence(c)
    }
}

/// Σ_m (-c)^m p! / (m+p+1)!
fn moments_series(c: Complex64) -> [Complex64; 4] {
    let mut f = [Complex64::new(0.0, 0.0); 4];
    for (p, fp) in f.iter_mut().enumerate() {
        let mut term = Complex64::new(1.0 / (p as f64 + 1.0), 0.0);
        let mut sum = term;
        for m in 1..60 {
            term *= -c / (m + p + 1) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        *fp = sum;
    }
    f
}

fn moments_recurrence(c: Complex64) -> [Complex64; 4] {
    let mut f = [Complex64::new(0.0, 0.0); 4];
    f[0] = -(-c).exp_m1_c() / c;
    for p in 1..4 {
        f[p] = (Complex64::new(1.0, 0.0) - p as f64 * f[p - 1]) / c;
    }
    f
}

trait ExpM1 {
    fn exp_m1_c(self) -> Complex64;
}

impl ExpM1 for Complex64 {
    fn exp_m1_c(self) -> Complex64 {
        if self.norm() < 1e-3 {
            self * (1.0 + self / 2.0 * (1.0 + self / 3.0 * (1.0 + self / 4.0)))
        } else {
            self.exp() - 1.0
        }
    }
}

/// Monomial coefficients of the Lagrange basis on integer offsets.
fn lagrange_coeffs(offsets: [f64; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut poly = vec![1.0];
        let mut den = 1.0;
        for m in 0..4 {
            if m == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &a) in poly.iter().enumerate() {
                next[i] -= a * offsets[m];
                next[i + 1] += a;
            }
            poly = next;
            den *= offsets[j] - offsets[m];
        }
        for (p, a) in poly.iter().enumerate() {
            out[j][p] = a / den;
        }
    }
    out
}

struct Stencils {
    first: [f64; 4],
    interior: [f64; 4],
    last: [f64; 4],
}

const STENCILS: Stencils = Stencils {
    first: [0.0, 1.0, 2.0, 3.0],
    interior: [-1.0, 0.0, 1.0, 2.0],
    last: [-2.0, -1.0, 0.0, 1.0],
};

fn weights(offsets: [f64; 4], f: &[Complex64; 4]) -> [Complex64; 4] {
    let c = lagrange_coeffs(offsets);
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        for p in 0..4 {
            w[j] += c[j][p] * f[p];
        }
    }
    w
}

/// Steps one mode across the grid, calling `visit(i, y)` after each step.
fn step_mode(
    mu: Complex64,
    b: Complex64,
    a0: Complex64,
    u: &ControlSignal,
    mut visit: impl FnMut(usize, Complex64),
) -> Complex64 {
    let h = u.step();
    let n = u.values.len();
    let c = mu * h;
    let decay = (-c).exp();
    let f = exp_moments(c);
    let w_first = weights(STENCILS.first, &f);
    let w_int = weights(STENCILS.interior, &f);
    let w_last = weights(STENCILS.last, &f);
    let v = &u.values;
    let mut y = a0;
    for i in 0..n - 1 {
        let (w, start) = if i == 0 {
            (&w_first, 0)
        } else if i == n - 2 {
            (&w_last, n - 4)
        } else {
            (&w_int, i - 1)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..4 {
            acc += w[j] * v[start + j];
        }
        y = decay * y + b * h * acc;
        visit(i + 1, y);
    }
    y
}

fn check_inputs(sys: &SpectralSystem, y0: &ModalState, u: &ControlSignal, t_final: f64) -> Result<()> {
    if y0.coeffs.len() != sys.len() {
        return Err(Error::GridMismatch(format!(
            "state has {} coefficients, spectrum has {}",
            y0.coeffs.len(),
            sys.len()
        )));
    }
    if (u.t_final - t_final).abs() > 1e-12 * t_final.max(1.0) || u.values.len() < 4 {
        return Err(Error::GridMismatch(format!(
            "control covers [0, {}] with {} samples, simulation asks for T = {t_final}",
            u.t_final,
            u.values.len()
        )));
    }
    Ok(())
}

pub fn forward_simulate(sys: &SpectralSystem, y0: &ModalState, u: &ControlSignal, t_final: f64) -> Result<ModalState> {
    check_inputs(sys, y0, u, t_final)?;
    let kind = sys.kind();
    let coeffs = sys
        .lambdas()
        .par_iter()
        .zip(sys.bs())
        .zip(&y0.coeffs)
        .map(|((&l, &b), &a)| step_mode(mu(kind, l), b, a, u, |_, _| {}))
        .collect();
    Ok(ModalState {
        coeffs,
        time: y0.time + t_final,
    })
}

/// (t, ‖y(t)‖) at every grid point of u.
pub fn trajectory(sys: &SpectralSystem, y0: &ModalState, u: &ControlSignal) -> Result<Vec<(f64, f64)>> {
    check_inputs(sys, y0, u, u.t_final)?;
    let kind = sys.kind();
    let n = u.values.len();
    let per_mode: Vec<Vec<f64>> = sys
        .lambdas()
        .par_iter()
        .zip(sys.bs())
        .zip(&y0.coeffs)
        .map(|((&l, &b), &a)| {
            let mut sq = vec![0.0; n];
            sq[0] = a.norm_sqr();
            step_mode(mu(kind, l), b, a, u, |i, y| sq[i] = y.norm_sqr());
            sq
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let e: f64 = per_mode.iter().map(|m| m[i]).sum();
            (y0.time + u.time_grid[i], e.sqrt())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// largest ∫_0^T |B* S*(t) z|² over sampled unit z
    pub sampled_max: f64,
    /// the supremum over all unit z (top eigenvalue of the quadratic form)
    pub exact_sup: f64,
    pub trials: usize,
}

/// Q[j,k] with z* Q z = ∫_0^T |Σ_k conj(b_k) e^{-conj(μ_k) t} z_k|² dt.
pub fn admissibility_form(sys: &SpectralSystem, t_final: f64) -> DMatrix<Complex64> {
    let n = sys.len();
    let l = sys.lambdas();
    let b = sys.bs();
    DMatrix::from_fn(n, n, |j, k| {
        let g = match sys.kind() {
            Kind::Parabolic => {
                let s = l[j] + l[k];
                Complex64::new(-(-s * t_final).exp_m1() / s, 0.0)
            }
            Kind::Dispersive => {
                let d = l[k] - l[j];
                if d == 0.0 {
                    Complex64::new(t_final, 0.0)
                } else {
                    let th = d * t_final;
                    Complex64::new(th.sin() / d, 2.0 * (th / 2.0).sin().powi(2) / d)
                }
            }
        };
        b[j] * b[k].conj() * g
    })
}

pub fn admissibility_probe(sys: &SpectralSystem, t_final: f64, trials: usize, seed: u64) -> Result<AdmissibilityReport> {
    if trials == 0 {
        return Err(Error::DomainError("trials must be at least 1".into()));
    }
    if !(t_final > 0.0) {
        return Err(Error::DomainError(format!("T must be positive, got {t_final}")));
    }
    let q = admissibility_form(sys, t_final);
    let exact_sup = SymmetricEigen::new(q.clone()).eigenvalues.max();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.len();
    let mut sampled_max = 0.0f64;
    for _ in 0..trials {
        let z = random_unit(&mut rng, n);
        let qz = &q * &z;
        let v = z.iter().zip(qz.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().re;
        sampled_max = sampled_max.max(v);
    }
    Ok(AdmissibilityReport {
        sampled_max,
        exact_sup,
        trials,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> nalgebra::DVector<Complex64> {
    let v = nalgebra::DVector::from_fn(n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Unit modal vector with seeded random complex entries (real when `real`).
pub fn random_unit_state(n: usize, seed: u64, real: bool) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re = rng.gen::<f64>() * 2.0 - 1.0;
            let im = rng.gen::<f64>() * 2.0 - 1.0;
            Complex64::new(re, if real { 0.0 } else { im })
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_power_law_spectrum, periodic_kdv_spectrum};
    use std::f64::consts::PI;

    fn one(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn moments_series_and_recurrence_agree() {
        for c in [Complex64::new(1.99, 0.0), Complex64::new(0.0, 1.99), Complex64::new(1.2, 1.5)] {
            let (a, b) = (moments_series(c), moments_recurrence(c));
            for p in 0..4 {
                assert!((a[p] - b[p]).norm() < 1e-14, "c {c} p {p}");
            }
        }
        let f = exp_moments(Complex64::new(0.0, 0.0));
        assert!((f[3] - one(0.25)).norm() < 1e-16);
        // direct quadrature at c = 5 + 3i
        let c = Complex64::new(5.0, 3.0);
        let f = exp_moments(c);
        for p in 0..4 {
            let n = 20000;
            let h = 1.0 / n as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=n {
                let x = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * (-c * (1.0 - x)).exp() * x.powi(p as i32);
            }
            assert!((acc * h - f[p]).norm() < 1e-8);
        }
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let c = lagrange_coeffs([-1.0, 0.0, 1.0, 2.0]);
        for x in [-0.3, 0.5, 1.7] {
            let val: f64 = (0..4)
                .map(|j| (0..4).map(|p| c[j][p] * f64::powi(x, p as i32)).sum::<f64>() * f64::powi([-1.0, 0.0, 1.0, 2.0][j], 3))
                .sum();
            assert!((val - x * x * x).abs() < 1e-13);
        }
    }

    #[test]
    fn free_evolution() {
        let s = make_power_law_spectrum(2.0, 1.0, 1, 0.0, 0).unwrap();
        let u = ControlSignal::zero(1.0, 11).unwrap();
        let y = forward_simulate(&s, &ModalState::new(vec![one(1.0)]), &u, 1.0).unwrap();
        assert!((y.coeffs[0] - one((-1f64).exp())).norm() < 1e-15);
        let k = periodic_kdv_spectrum(2.0 * PI, 5).unwrap();
        let y0 = random_unit_state(k.len(), 3, false);
        let u = ControlSignal::zero(0.7, 1001).unwrap();
        let y = forward_simulate(&k, &ModalState::new(y0.clone()), &u, 0.7).unwrap();
        for (a, b) in y.coeffs.iter().zip(&y0) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        assert!((residual_norm(&y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_norm_examples() {
        assert_eq!(residual_norm(&ModalState::new(vec![one(0.0); 3])), 0.0);
        assert_eq!(residual_norm(&ModalState::new(vec![one(1.0)])), 1.0);
        assert!((residual_norm(&ModalState::new(vec![one(0.6), one(0.8)])) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn forced_response_matches_closed_form() {
        // y' + λy = u with u(s) = cos(3s): exact convolution
        let s = make_power_law_spectrum(2.0, 1.0, 3, 0.0, 0).unwrap();
        let t = 1.3;
        let vals: Vec<Complex64> = crate::signal::uniform_grid(0.0, t, 2001).iter().map(|&x| one((3.0 * x).cos())).collect();
        let u = ControlSignal::new(t, vals).unwrap();
        let y = forward_simulate(&s, &ModalState::new(vec![one(0.0); 3]), &u, t).unwrap();
        for (i, &l) in s.lambdas().iter().enumerate() {
            // ∫_0^T e^{-λ(T-s)} cos(3s) ds
            let exact = (l * (3.0 * t).cos() + 3.0 * (3.0 * t).sin() - l * (-l * t).exp()) / (l * l + 9.0);
            assert!((y.coeffs[i].re - exact).abs() < 1e-12, "{} {}", y.coeffs[i].re, exact);
        }
        let tr = trajectory(&s, &ModalState::new(vec![one(0.0); 3]), &u).unwrap();
        assert_eq!(tr.len(), 2001);
        assert!((tr[2000].1 - residual_norm(&y)).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch() {
        let s = make_power_law_spectrum(2.0, 1.0, 2, 0.0, 0).unwrap();
        let u = ControlSignal::zero(1.0, 11).unwrap();
        assert!(matches!(
            forward_simulate(&s, &ModalState::new(vec![one(1.0); 2]), &u, 2.0),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            forward_simulate(&s, &ModalState::new(vec![one(1.0); 3]), &u, 1.0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn admissibility() {
        let single = SpectralSystem::new(Kind::Dispersive, vec![1], vec![5.0], vec![one(1.0)], 3.0, 1.0).unwrap();
        let r = admissibility_probe(&single, 0.8, 5, 1).unwrap();
        assert!((r.sampled_max - 0.8).abs() < 1e-14 && (r.exact_sup - 0.8).abs() < 1e-14);
        let k = periodic_kdv_spectrum(2.0 * PI, 8).unwrap();
        let mut last = 0.0;
        for trials in [1, 10, 100, 1000] {
            let r = admissibility_probe(&k, 1.0, trials, 9).unwrap();
            assert!(r.sampled_max >= last && r.sampled_max <= r.exact_sup * (1.0 + 1e-12));
            last = r.sampled_max;
        }
    }
}
