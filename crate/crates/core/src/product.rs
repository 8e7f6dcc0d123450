//! Canonical products Φ_n(z) = ∏_{k≠n} (1 - z/(λ_k - λ_n)).
//!
//! Stored modes are multiplied directly. Beyond them the product is
//! completed with the idealized eigenvalues ±R k^α: a stretch of explicit
//! factors up to the point where |z| + |λ_n| ≤ R k^α / 2, then the remaining
//! logarithm in closed form,
//!   Σ_{k>K} log(1 - z/(μ_k - λ_n)) = -Σ_m ((λ_n+z)^m - λ_n^m) ζ(αm, K+1) / (m R^m),
//! with Hurwitz zeta values from Euler-Maclaurin.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{BoundPoint, BoundReport};
use crate::spectral::SpectralSystem;

pub fn counting_function(sys: &SpectralSystem, n: i64, s: f64) -> Result<usize> {
    let ln = sys.lambda(n)?;
    Ok(sys
        .indices()
        .iter()
        .zip(sys.lambdas())
        .filter(|(&k, &l)| k != n && (l - ln).abs() <= s)
        .count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingProfile {
    pub s_grid: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn counting_profile(sys: &SpectralSystem, n: i64, s_grid: &[f64]) -> Result<CountingProfile> {
    let counts = s_grid
        .iter()
        .map(|&s| counting_function(sys, n, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(CountingProfile {
        s_grid: s_grid.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductEval {
    pub value: Complex64,
    pub log_abs: f64,
    /// last index multiplied explicitly (stored or idealized)
    pub truncation_index: usize,
    /// bound on |log| of what was not computed exactly
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProductScope {
    /// stored modes only: the product for the truncated system
    Stored,
    /// stored modes completed by the idealized tail
    Ideal,
}

/// a^s ζ(s, a) for s > 1, a ≥ 1.
fn hurwitz_zeta_scaled(s: f64, a: f64) -> f64 {
    let m = (s.ceil() as usize + 12).max(12);
    let mut sum = 0.0;
    for j in 0..m {
        sum += (a / (a + j as f64)).powf(s);
    }
    let b = a + m as f64;
    let lead = (a / b).powf(s);
    // Euler-Maclaurin tail: b/(s-1) + 1/2 + Σ B_2i/(2i)! s(s+1)...(s+2i-2) b^(1-2i)
    const B2: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let mut corr = b / (s - 1.0) + 0.5;
    let mut rising = s;
    let mut fact = 2.0;
    let mut bpow = 1.0 / b;
    for (i, bi) in B2.iter().enumerate() {
        corr += bi / fact * rising * bpow;
        let k = 2.0 * i as f64 + 2.0;
        rising *= (s + k - 1.0) * (s + k);
        fact *= (k + 1.0) * (k + 2.0);
        bpow /= b * b;
    }
    sum + lead * corr
}

pub struct ProductEvaluator<'a> {
    sys: &'a SpectralSystem,
    pos: usize,
    lambda_n: f64,
    scope: ProductScope,
    /// first idealized index and last explicit idealized index
    first_ideal: u64,
    last_explicit: u64,
    /// a^(αm) ζ(αm, a) for m = 1..=terms, a = last_explicit + 1
    zeta: Vec<f64>,
    eps_hat: f64,
    max_abs_z: f64,
}

impl<'a> ProductEvaluator<'a> {
    pub fn new(sys: &'a SpectralSystem, n: i64, max_abs_z: f64, tol: f64, scope: ProductScope) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::DomainError(format!("tol must be positive, got {tol}")));
        }
        let pos = sys.position(n)?;
        let lambda_n = sys.lambdas()[pos];
        let alpha = sys.alpha();
        let rate = sys.rate();
        let first_ideal = sys.max_index() as u64 + 1;
        let reach = 2.0 * (max_abs_z + lambda_n.abs());
        let mut last_explicit = first_ideal - 1;
        while scope == ProductScope::Ideal && rate * ((last_explicit + 1) as f64).powf(alpha) < reach {
            last_explicit += 1;
        }
        let terms = ((1.0 / tol).log2().ceil() as usize + 12).clamp(16, 120);
        let a = (last_explicit + 1) as f64;
        let zeta = if scope == ProductScope::Ideal {
            (1..=terms).map(|m| hurwitz_zeta_scaled(alpha * m as f64, a)).collect()
        } else {
            Vec::new()
        };
        let top: Vec<(f64, f64)> = sys
            .indices()
            .iter()
            .zip(sys.lambdas())
            .filter(|(&k, _)| k.unsigned_abs() as i64 > sys.max_index() / 2)
            .map(|(&k, &l)| (k.unsigned_abs() as f64, l.abs()))
            .collect();
        let eps_hat = top
            .iter()
            .map(|&(k, l)| (l - rate * k.powf(alpha)).abs() / k.powf(alpha - 1.0))
            .fold(0.0, f64::max);
        let ev = Self {
            sys,
            pos,
            lambda_n,
            scope,
            first_ideal,
            last_explicit,
            zeta,
            eps_hat,
            max_abs_z,
        };
        if scope == ProductScope::Ideal {
            let bound = ev.idealization_bound(max_abs_z) + ev.series_bound(max_abs_z);
            if bound > tol {
                return Err(Error::TruncationError {
                    bound,
                    required_modes: ev.required_modes(tol),
                });
            }
        }
        Ok(ev)
    }

    fn ideal(&self, k: u64, sign: f64) -> f64 {
        sign * self.sys.rate() * (k as f64).powf(self.sys.alpha())
    }

    fn signs(&self) -> &'static [f64] {
        if self.sys.is_two_sided() {
            &[1.0, -1.0]
        } else {
            &[1.0]
        }
    }

    fn ratio(&self, abs_z: f64) -> f64 {
        let rho = self.sys.rate() * ((self.last_explicit + 1) as f64).powf(self.sys.alpha());
        (abs_z + self.lambda_n.abs()) / rho
    }

    fn series_bound(&self, abs_z: f64) -> f64 {
        let r = self.ratio(abs_z);
        let m = self.zeta.len() as f64;
        let z1 = self.zeta.first().copied().unwrap_or(1.0);
        2.0 * self.signs().len() as f64 * z1 * r.powf(m + 1.0) / ((m + 1.0) * (1.0 - r))
    }

    /// Effect of replacing the true tail eigenvalues by R k^α, using the
    /// largest stored deviation |λ_k - R k^α| / k^(α-1).
    fn idealization_bound(&self, abs_z: f64) -> f64 {
        if self.eps_hat == 0.0 || abs_z == 0.0 {
            return 0.0;
        }
        let alpha = self.sys.alpha();
        let rate = self.sys.rate();
        let l = self.lambda_n.abs() + abs_z;
        let mut total = 0.0;
        for k in self.first_ideal..=self.last_explicit {
            let mu = rate * (k as f64).powf(alpha);
            let d1 = (mu - self.lambda_n.abs()).max(1e-300);
            let d2 = (mu - l).abs().max(1e-300);
            total += self.eps_hat * (k as f64).powf(alpha - 1.0) * abs_z / (d1 * d2);
        }
        let kk = (self.last_explicit as f64).max(1.0);
        let den = alpha * rate * (rate * kk.powf(alpha) - l).max(1e-300);
        total += abs_z * self.eps_hat / den;
        total * self.signs().len() as f64
    }

    fn required_modes(&self, tol: f64) -> usize {
        let alpha = self.sys.alpha();
        let rate = self.sys.rate();
        let target = self.max_abs_z * self.eps_hat * self.signs().len() as f64 / (alpha * rate * 0.5 * tol);
        let k = ((target + 2.0 * (self.lambda_n.abs() + self.max_abs_z)) / rate).powf(1.0 / alpha);
        k.ceil() as usize
    }

    pub fn eval(&self, z: Complex64) -> Result<ProductEval> {
        if z.norm() > self.max_abs_z * (1.0 + 1e-12) {
            return Err(Error::DomainError(format!(
                "|z| = {} exceeds the evaluator range {}",
                z.norm(),
                self.max_abs_z
            )));
        }
        let stored_end = self.sys.max_index() as usize;
        if z == Complex64::new(0.0, 0.0) {
            return Ok(ProductEval {
                value: Complex64::new(1.0, 0.0),
                log_abs: 0.0,
                truncation_index: stored_end,
                tail_bound: 0.0,
            });
        }
        let mut log = Complex64::new(0.0, 0.0);
        for (i, &l) in self.sys.lambdas().iter().enumerate() {
            if i == self.pos {
                continue;
            }
            let f = Complex64::new(1.0, 0.0) - z / (l - self.lambda_n);
            if f == Complex64::new(0.0, 0.0) {
                return Ok(ProductEval {
                    value: f,
                    log_abs: f64::NEG_INFINITY,
                    truncation_index: stored_end,
                    tail_bound: 0.0,
                });
            }
            log += f.ln();
        }
        if self.scope == ProductScope::Stored {
            return Ok(ProductEval {
                value: log.exp(),
                log_abs: log.re,
                truncation_index: stored_end,
                tail_bound: 0.0,
            });
        }
        for k in self.first_ideal..=self.last_explicit {
            for &sg in self.signs() {
                let f = Complex64::new(1.0, 0.0) - z / (self.ideal(k, sg) - self.lambda_n);
                log += f.ln();
            }
        }
        let rho = self.sys.rate() * ((self.last_explicit + 1) as f64).powf(self.sys.alpha());
        let lam_hat = Complex64::new(self.lambda_n / rho, 0.0);
        let shifted = lam_hat + z / rho;
        let two_sided = self.sys.is_two_sided();
        let (mut p1, mut p2) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for (i, zm) in self.zeta.iter().enumerate() {
            let m = (i + 1) as f64;
            p1 *= shifted;
            p2 *= lam_hat;
            let mult = if two_sided {
                if i % 2 == 1 {
                    2.0
                } else {
                    0.0
                }
            } else {
                1.0
            };
            if mult != 0.0 {
                log -= mult * zm * (p1 - p2) / m;
            }
        }
        let tail_bound = self.series_bound(z.norm()) + self.idealization_bound(z.norm());
        Ok(ProductEval {
            value: log.exp(),
            log_abs: log.re,
            truncation_index: self.last_explicit as usize,
            tail_bound,
        })
    }
}

/// Φ_n(z) over all k, the unstored part idealized.
pub fn phi_n(sys: &SpectralSystem, n: i64, z: Complex64, tol: f64) -> Result<ProductEval> {
    ProductEvaluator::new(sys, n, z.norm(), tol, ProductScope::Ideal)?.eval(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthBound {
    /// |Φ_n(z)| against π|z/R|^(1/α) / sin(π/α)
    OneSided,
    /// |Φ_n(-ix - λ_n)| against π|x/R|^(1/α) / (2 sin(π/(2α))), x = grid point
    ParabolicLine,
    /// two-sided spectra: 2π|z/R|^(1/α) / sin(π/α)
    TwoSided,
}

impl GrowthBound {
    pub fn lead(&self, alpha: f64, rate: f64) -> f64 {
        let scale = rate.powf(1.0 / alpha);
        match self {
            GrowthBound::OneSided => PI / (scale * (PI / alpha).sin()),
            GrowthBound::ParabolicLine => PI / (2.0 * scale * (PI / (2.0 * alpha)).sin()),
            GrowthBound::TwoSided => 2.0 * PI / (scale * (PI / alpha).sin()),
        }
    }
}

/// slack(z) = ln|Φ_n| - c_lead |z|^(1/α), log envelope fitted on half the grid.
pub fn phi_growth_report(
    sys: &SpectralSystem,
    n: i64,
    grid: &[Complex64],
    bound: GrowthBound,
) -> Result<BoundReport> {
    if (bound == GrowthBound::TwoSided) != sys.is_two_sided() {
        return Err(Error::DomainError("growth bound kind does not match the spectrum".into()));
    }
    let lambda_n = sys.lambda(n)?;
    let arg = |z: Complex64| match bound {
        GrowthBound::ParabolicLine => Complex64::new(0.0, -1.0) * z - lambda_n,
        _ => z,
    };
    let max_abs = grid.iter().map(|&z| arg(z).norm()).fold(0.0, f64::max);
    let ev = ProductEvaluator::new(sys, n, max_abs, 1e-8, ProductScope::Ideal)?;
    let lead = bound.lead(sys.alpha(), sys.rate());
    let mut points = Vec::with_capacity(grid.len());
    for &z in grid {
        let p = ev.eval(arg(z))?;
        points.push(BoundPoint {
            re: z.re,
            im: z.im,
            log_abs: p.log_abs,
            slack: p.log_abs - lead * z.norm().powf(1.0 / sys.alpha()),
        });
    }
    Ok(BoundReport::from_points(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_power_law_spectrum, make_two_sided_spectrum};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn counting_examples() {
        let s = make_power_law_spectrum(2.0, 1.0, 3, 0.0, 0).unwrap();
        assert_eq!(counting_function(&s, 1, 3.0).unwrap(), 1);
        assert_eq!(counting_function(&s, 1, 0.0).unwrap(), 0);
        let s = make_power_law_spectrum(2.0, 1.0, 5, 0.0, 0).unwrap();
        assert_eq!(counting_function(&s, 3, 10.0).unwrap(), 3);
        assert_eq!(counting_function(&s, 9, 1.0), Err(Error::UnknownIndex(9)));
    }

    #[test]
    fn zeta_matches_direct_sum() {
        for (s, a) in [(2.0, 1.0), (3.0, 5.0), (6.0, 11.0), (40.0, 3.0)] {
            let direct: f64 = (0..2_000_000).rev().map(|j| (a / (a + j as f64)).powf(s)).sum::<f64>()
                + a.powf(s) * (a + 2e6).powf(1.0 - s) / (s - 1.0);
            let got = hurwitz_zeta_scaled(s, a);
            assert!((got - direct).abs() < 1e-12 * direct, "s {s} a {a}: {got} vs {direct}");
        }
        // ζ(2) = π²/6
        assert!((hurwitz_zeta_scaled(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn exact_zeros_and_unit_at_origin() {
        let s = make_power_law_spectrum(2.0, 1.0, 10, 0.0, 0).unwrap();
        let p = phi_n(&s, 1, c(0.0, 0.0), 1e-8).unwrap();
        assert_eq!(p.value, c(1.0, 0.0));
        assert_eq!(p.tail_bound, 0.0);
        for k in 2..=10 {
            let z = c(s.lambda(k).unwrap() - 1.0, 0.0);
            assert_eq!(phi_n(&s, 1, z, 1e-8).unwrap().value, c(0.0, 0.0));
        }
    }

    /// Direct product over K modes, λ_k = k².
    fn direct(n: u64, z: Complex64, kmax: u64) -> Complex64 {
        let ln = (n * n) as f64;
        let mut log = c(0.0, 0.0);
        for k in 1..=kmax {
            if k != n {
                log += (c(1.0, 0.0) - z / ((k * k) as f64 - ln)).ln();
            }
        }
        log.exp()
    }

    #[test]
    fn ideal_product_matches_extrapolated_brute_force() {
        let s = make_power_law_spectrum(2.0, 1.0, 200, 0.0, 0).unwrap();
        for z in [c(10.0, 0.0), c(-37.0, 5.0), c(3.0, 120.0)] {
            let got = phi_n(&s, 1, z, 1e-8).unwrap().value;
            let l = |k| direct(1, z, k).ln();
            let r1 = |k: u64| 2.0 * l(2 * k) - l(k);
            let r2 = (4.0 * r1(4000) - r1(2000)) / 3.0;
            let want = r2.exp();
            assert!((got - want).norm() <= 1e-6 * want.norm(), "z {z}: {got} vs {want}");
        }
        // the literal 2000-mode product is off by far more than 1e-6
        let lit = direct(1, c(10.0, 0.0), 2000);
        let got = phi_n(&s, 1, c(10.0, 0.0), 1e-8).unwrap().value;
        assert!((lit - got).norm() > 1e-4 * got.norm());
    }

    #[test]
    fn completion_is_independent_of_stored_count() {
        let a = make_power_law_spectrum(2.0, 1.0, 20, 0.0, 0).unwrap();
        let b = make_power_law_spectrum(2.0, 1.0, 40, 0.0, 0).unwrap();
        for z in [c(50.0, 3.0), c(-400.0, 0.0), c(0.0, 900.0)] {
            let pa = phi_n(&a, 2, z, 1e-10).unwrap();
            let pb = phi_n(&b, 2, z, 1e-10).unwrap();
            assert!((pa.log_abs - pb.log_abs).abs() <= pa.tail_bound + pb.tail_bound + 1e-11);
        }
        let t = make_two_sided_spectrum(3.0, 1.0, 6, 0.0, 0).unwrap();
        let u = make_two_sided_spectrum(3.0, 1.0, 15, 0.0, 0).unwrap();
        for z in [c(50.0, 3.0), c(-400.0, 20.0)] {
            let pa = phi_n(&t, -2, z, 1e-10).unwrap();
            let pb = phi_n(&u, -2, z, 1e-10).unwrap();
            assert!((pa.value - pb.value).norm() <= 1e-9 * pa.value.norm(), "{} {}", pa.value, pb.value);
        }
    }

    #[test]
    fn perturbed_tail_needs_more_modes() {
        let s = make_power_law_spectrum(2.0, 1.0, 10, 0.5, 3).unwrap();
        match phi_n(&s, 1, c(5000.0, 0.0), 1e-10) {
            Err(Error::TruncationError { required_modes, .. }) => assert!(required_modes > 10),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let p = phi_n(&s, 1, c(5.0, 0.0), 1e-2).unwrap();
        assert!(p.tail_bound > 0.0 && p.tail_bound <= 1e-2);
    }

    #[test]
    fn stored_scope_is_finite_product() {
        let s = make_power_law_spectrum(2.0, 1.0, 30, 0.0, 0).unwrap();
        let ev = ProductEvaluator::new(&s, 1, 100.0, 1e-8, ProductScope::Stored).unwrap();
        let z = c(7.0, -2.0);
        let got = ev.eval(z).unwrap().value;
        assert!((got - direct(1, z, 30)).norm() < 1e-12 * got.norm());
    }

    #[test]
    fn growth_bounds_hold_after_calibration() {
        let s = make_power_law_spectrum(2.0, 1.0, 100, 0.0, 0).unwrap();
        let grid: Vec<Complex64> = (0..120)
            .map(|i| {
                let r = 10f64.powf(4.0 * i as f64 / 119.0);
                Complex64::from_polar(r, 0.37 * i as f64)
            })
            .collect();
        let rep = phi_growth_report(&s, 1, &grid, GrowthBound::OneSided).unwrap();
        assert!(rep.holds(), "{}", rep.max_violation);
        let line: Vec<Complex64> = (0..80).map(|i| c(10f64.powf(4.0 * i as f64 / 79.0), 0.0)).collect();
        let rep = phi_growth_report(&s, 1, &line, GrowthBound::ParabolicLine).unwrap();
        assert!(rep.holds(), "{}", rep.max_violation);
        let t = make_two_sided_spectrum(3.0, 1.0, 20, 0.0, 0).unwrap();
        let rep = phi_growth_report(&t, 1, &grid, GrowthBound::TwoSided).unwrap();
        assert!(rep.holds(), "{}", rep.max_violation);
        assert!((GrowthBound::TwoSided.lead(3.0, 1.0) - 2.0 * PI / (PI / 3.0).sin()).abs() < 1e-15);
        let zero = phi_growth_report(&s, 1, &[c(0.0, 0.0)], GrowthBound::OneSided).unwrap();
        assert_eq!(zero.points[0].slack, 0.0);
    }

    #[test]
    fn counting_envelope() {
        let s = make_power_law_spectrum(2.0, 1.0, 60, 0.0, 0).unwrap();
        for n in [1i64, 5, 20] {
            let ln = s.lambda(n).unwrap();
            for s_val in [0.5, 3.0, 40.0, 300.0, 1500.0] {
                let cnt = counting_function(&s, n, s_val).unwrap() as f64;
                let env = (ln + s_val).sqrt() - (ln - s_val).max(0.0).sqrt() + 2.0;
                assert!(cnt <= env, "n {n} s {s_val}");
            }
        }
        let prof = counting_profile(&s, 3, &[0.0, 1.0, 10.0, 100.0]).unwrap();
        assert!(prof.counts.windows(2).all(|w| w[0] <= w[1]));
    }
}
