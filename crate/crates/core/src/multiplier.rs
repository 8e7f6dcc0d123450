//! The compactly supported multiplier H_β built from the bump σ_ν.
//!
//! Integrals over (-1, 1) are taken in the variable s = tanh(u), where the
//! bump becomes exp(-ν cosh² u) and the trapezoid rule converges double
//! exponentially. For oscillatory arguments the u-line is shifted into the
//! strip |Im u| < π/4 so that the integrand no longer cancels.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{BoundPoint, BoundReport};

const TARGET: f64 = 1e-12;
const MAX_LEVELS: usize = 16;

pub fn sigma_nu(nu: f64, t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-nu / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Scaled integral: value = mantissa * exp(log_scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }
}

fn log_integrand(nu: f64, omega: Complex64, w: Complex64) -> Complex64 {
    let ch = w.cosh();
    -nu * ch * ch - Complex64::i() * omega * w.tanh() - 2.0 * ch.ln()
}

/// max over a coarse u-grid of Re log F(u - i y)
fn peak_log(nu: f64, omega: Complex64, y: f64) -> f64 {
    (0..=120)
        .map(|k| {
            let u = -6.0 + 0.1 * k as f64;
            log_integrand(nu, omega, Complex64::new(u, -y)).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn choose_shift(nu: f64, omega: Complex64) -> f64 {
    if omega.re == 0.0 {
        return 0.0;
    }
    let sign = omega.re.signum();
    let y_max = FRAC_PI_4 - 0.02;
    let f = |y: f64| peak_log(nu, omega, sign * y);
    let mut best = (0.0, f(0.0));
    for k in 1..=8 {
        let y = y_max * k as f64 / 8.0;
        let v = f(y);
        if v < best.1 {
            best = (y, v);
        }
    }
    // golden-section refinement around the best coarse point
    let step = y_max / 8.0;
    let (mut a, mut b) = ((best.0 - step).max(0.0), (best.0 + step).min(y_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let y = if fc < fd { c } else { d };
    if f(y) < best.1 {
        sign * y
    } else {
        sign * best.0
    }
}

/// ∫_{-1}^{1} σ_ν(s) e^{-iωs} ds in scaled form.
pub fn bump_transform(nu: f64, omega: Complex64, quad_nodes: usize) -> Result<Scaled> {
    if !(nu >= 0.0) || !omega.re.is_finite() || !omega.im.is_finite() {
        return Err(Error::DomainError(format!("bad bump transform arguments nu={nu}, omega={omega}")));
    }
    let y = choose_shift(nu, omega);
    let lf = |u: f64| log_integrand(nu, omega, Complex64::new(u, -y));
    let scale = (0..=240)
        .map(|k| lf(-6.0 + 0.05 * k as f64).re)
        .fold(f64::NEG_INFINITY, f64::max);
    let cut = scale - 46.0;
    let mut u_lo = -6.0;
    while lf(u_lo).re > cut || lf(u_lo - 0.5).re > cut {
        u_lo -= 0.5;
        if u_lo < -60.0 {
            break;
        }
    }
    let mut u_hi = 6.0;
    while lf(u_hi).re > cut || lf(u_hi + 0.5).re > cut {
        u_hi += 0.5;
        if u_hi > 60.0 {
            break;
        }
    }
    let f = |u: f64| (lf(u) - scale).exp();
    let n0 = quad_nodes.max(32);
    let mut h = (u_hi - u_lo) / n0 as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for k in 0..=n0 {
        let v = f(u_lo + h * k as f64);
        abs_sum += v.norm();
        sum += v;
    }
    let mut est = sum * h;
    let mut n = n0;
    for _ in 0..MAX_LEVELS {
        let mut mid = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let v = f(u_lo + h * (k as f64 + 0.5));
            abs_sum += v.norm();
            mid += v;
        }
        sum += mid;
        n *= 2;
        h *= 0.5;
        let next = sum * h;
        let diff = (next - est).norm();
        // summation roundoff relative to ∫|F|
        let floor = 1e-13 * abs_sum * h;
        est = next;
        if n >= 4 * n0 && (diff <= TARGET * next.norm() || diff <= floor) {
            return Ok(Scaled {
                mantissa: next,
                log_scale: scale,
            });
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "bump transform at nu={nu}, omega={omega}"
    )))
}

/// C_ν = 1 / ∫ σ_ν.
pub fn c_nu(nu: f64, quad_nodes: usize) -> Result<f64> {
    let s = bump_transform(nu, Complex64::new(0.0, 0.0), quad_nodes)?;
    Ok(1.0 / s.value().re)
}

/// The bracket e^ν/2 ≤ C_ν ≤ (3/2)√(ν+1) e^ν.
pub fn c_nu_bracket(nu: f64) -> (f64, f64) {
    (0.5 * nu.exp(), 1.5 * (nu + 1.0).sqrt() * nu.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierConfig {
    pub nu: f64,
    pub beta: f64,
    pub delta: f64,
    pub alpha: f64,
    pub quad_nodes: usize,
    /// C_ν, cached
    pub norm: f64,
}

/// Solves β ν^(α-1) = ((π+δ)/sin(π/α))^α for ν.
pub fn link_beta_to_nu(alpha: f64, delta: f64, beta: f64) -> Result<MultiplierConfig> {
    if !(alpha >= 2.0) {
        return Err(Error::DomainError(format!(
            "the multiplier decay estimate needs alpha >= 2, got {alpha}"
        )));
    }
    if !(delta >= 0.0) || !(beta > 0.0) {
        return Err(Error::DomainError(format!("need delta >= 0 and beta > 0, got {delta}, {beta}")));
    }
    let k = ((PI + delta) / (PI / alpha).sin()).powf(alpha);
    let nu = (k / beta).powf(1.0 / (alpha - 1.0));
    let quad_nodes = 64;
    Ok(MultiplierConfig {
        nu,
        beta,
        delta,
        alpha,
        quad_nodes,
        norm: c_nu(nu, quad_nodes)?,
    })
}

impl MultiplierConfig {
    /// Relative residual of β ν^(α-1) against its target.
    pub fn coupling_residual(&self) -> f64 {
        let k = ((PI + self.delta) / (PI / self.alpha).sin()).powf(self.alpha);
        (self.beta * self.nu.powf(self.alpha - 1.0) - k).abs() / k
    }
}

pub fn h_beta_scaled(cfg: &MultiplierConfig, z: Complex64) -> Result<Scaled> {
    let s = bump_transform(cfg.nu, cfg.beta * z, cfg.quad_nodes)?;
    Ok(Scaled {
        mantissa: s.mantissa * cfg.norm,
        log_scale: s.log_scale,
    })
}

/// H_β(z) = C_ν ∫ σ_ν(t) e^{-iβtz} dt
pub fn h_beta(cfg: &MultiplierConfig, z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let v = h_beta_scaled(cfg, z)?.value();
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::QuadratureNotConverged(format!("H_beta overflows at z={z}")));
    }
    Ok(v)
}

/// Slack of ln|H_β(x)| against the decay envelope, c0 fitted on half the grid.
pub fn est_mul_decay_check(cfg: &MultiplierConfig, x_grid: &[f64]) -> Result<BoundReport> {
    let lead = (PI + cfg.delta / 2.0) / (PI / cfg.alpha).sin();
    let base = 0.75 * cfg.nu + 0.5 * cfg.nu.ln_1p();
    let mut points = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let ln_h = h_beta_scaled(cfg, Complex64::new(x, 0.0))?.ln_abs();
        points.push(BoundPoint {
            re: x,
            im: 0.0,
            log_abs: ln_h,
            slack: ln_h + lead * x.abs().powf(1.0 / cfg.alpha) - base,
        });
    }
    Ok(BoundReport::calibrate(points, false))
}

/// Lower bound on the imaginary axis: slack = ln(e^{βy/(2√(ν+1))}/√(ν+1)) - ln H(iy)
/// must stay below ln K, with K calibrated on half the grid.
pub fn minmult_check(cfg: &MultiplierConfig, y_grid: &[f64]) -> Result<BoundReport> {
    let r = (cfg.nu + 1.0).sqrt();
    let mut points = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let s = h_beta_scaled(cfg, Complex64::new(0.0, y))?;
        let ln_h = s.ln_abs();
        points.push(BoundPoint {
            re: 0.0,
            im: y,
            log_abs: ln_h,
            slack: cfg.beta * y.abs() / (2.0 * r) - r.ln() - ln_h,
        });
    }
    Ok(BoundReport::calibrate(points, false))
}
