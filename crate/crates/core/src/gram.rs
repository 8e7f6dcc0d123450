//! Exact truncated moment problem through the Gram matrix of exponentials.
//!
//! Null control of mode k reads ∫_0^T u(s) e^{-μ_k (T-s)} ds = -e^{-μ_k T} a_k / b_k.
//! Dispersive (μ_k = iλ_k): basis e^{iλ_k s}, weights D_kk = -1/b_k.
//! Parabolic: in reversed time r = T - s the basis is e^{-λ_k r} and the
//! decay e^{-λ_k T} is carried by D_kk = -e^{-λ_k T}/b_k.
//! Either way G[j,k] = <e_j, e_k> in closed form and u = Σ w_k conj(e_k) with G w = D a.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::mplinalg::{hermitian_max_eig, lu_solve, LdlFactor, MpMatrix};
use crate::precision::{MpComplex, PrecisionContext};
use crate::signal::{uniform_grid, ControlSignal};
use crate::spectral::{Kind, SpectralSystem};

/// 64 digits for parabolic spectra, 30 for dispersive.
pub fn default_digits(kind: Kind) -> u32 {
    match kind {
        Kind::Parabolic => 64,
        Kind::Dispersive => 30,
    }
}

#[derive(Debug, Clone)]
pub struct GramSystem {
    sys: SpectralSystem,
    t: f64,
    ctx: PrecisionContext,
    g: MpMatrix,
    factor: LdlFactor,
    inverse: MpMatrix,
    d: Vec<MpComplex>,
    condition_estimate: f64,
}

/// Closed-form entry <e_j, e_k>.
fn entry(kind: Kind, lj: &Float, lk: &Float, t: &Float, prec: u32) -> MpComplex {
    match kind {
        Kind::Parabolic => {
            let s = Float::with_val(prec, lj + lk);
            let mut e = Float::with_val(prec, -(Float::with_val(prec, &s * t)));
            e.exp_m1_mut();
            MpComplex::real(-e / s)
        }
        Kind::Dispersive => {
            if lj == lk {
                return MpComplex::real(t.clone());
            }
            let d = Float::with_val(prec, lj - lk);
            let theta = Float::with_val(prec, &d * t);
            let half = Float::with_val(prec, &theta / 2u32).sin();
            let one_minus_cos = Float::with_val(prec, half.square_ref()) * 2u32;
            MpComplex {
                re: theta.sin() / &d,
                im: one_minus_cos / &d,
            }
        }
    }
}

pub fn gram_matrix(sys: &SpectralSystem, t: f64, ctx: PrecisionContext) -> Result<GramSystem> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("T must be positive, got {t}")));
    }
    let prec = ctx.bits();
    let kind = sys.kind();
    let lam: Vec<Float> = sys.lambdas().iter().map(|&l| ctx.float(l)).collect();
    let tf = ctx.float(t);
    let g = MpMatrix::from_fn(sys.len(), |j, k| entry(kind, &lam[j], &lam[k], &tf, prec));
    let factor = LdlFactor::new(&g).map_err(|e| match e {
        Error::PrecisionInsufficient { digits, .. } => Error::PrecisionInsufficient {
            condition: f64::INFINITY,
            digits,
        },
        other => other,
    })?;
    let inverse = factor.inverse();
    let condition_estimate = g.norm1() * inverse.norm1();
    if !(condition_estimate <= 10f64.powi(ctx.digits() as i32 - 10)) {
        return Err(Error::PrecisionInsufficient {
            condition: condition_estimate,
            digits: ctx.digits(),
        });
    }
    let d = lam
        .iter()
        .zip(sys.bs())
        .map(|(l, b)| {
            let b = MpComplex::from_c64(prec, *b);
            let w = match kind {
                Kind::Parabolic => Float::with_val(prec, -(Float::with_val(prec, l * &tf))).exp(),
                Kind::Dispersive => Float::with_val(prec, 1),
            };
            MpComplex::real(-w).div(&b)
        })
        .collect();
    Ok(GramSystem {
        sys: sys.clone(),
        t,
        ctx,
        g,
        factor,
        inverse,
        d,
        condition_estimate,
    })
}

impl GramSystem {
    pub fn sys(&self) -> &SpectralSystem {
        &self.sys
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn precision(&self) -> PrecisionContext {
        self.ctx
    }

    pub fn matrix(&self) -> &MpMatrix {
        &self.g
    }

    pub fn entry_c64(&self, j: usize, k: usize) -> Complex64 {
        self.g.get(j, k).to_c64()
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Moment weights D_kk.
    pub fn rhs_weights(&self) -> Vec<Complex64> {
        self.d.iter().map(|z| z.to_c64()).collect()
    }

    fn slot(&self, m: i64) -> Result<usize> {
        self.sys.position(m)
    }

    /// Coefficients w of the minimal-norm control for modal data y0.
    pub fn control_weights(&self, y0: &[Complex64]) -> Result<Vec<MpComplex>> {
        if y0.len() != self.sys.len() {
            return Err(Error::DomainError(format!(
                "initial data has {} coefficients, spectrum has {}",
                y0.len(),
                self.sys.len()
            )));
        }
        let prec = self.ctx.bits();
        let rhs: Vec<MpComplex> = y0
            .iter()
            .zip(&self.d)
            .map(|(a, d)| d.mul(&MpComplex::from_c64(prec, *a)))
            .collect();
        Ok(self.factor.solve(&rhs))
    }

    /// Evaluates Σ w_k conj(e_k(s)) at the original time s, in working precision.
    pub fn eval_control(&self, w: &[MpComplex], s: f64) -> Complex64 {
        let prec = self.ctx.bits();
        let mut acc = MpComplex::zero(prec);
        let sf = self.ctx.float(s);
        let tf = self.ctx.float(self.t);
        for (wk, &l) in w.iter().zip(self.sys.lambdas()) {
            let l = self.ctx.float(l);
            let basis = match self.sys.kind() {
                Kind::Parabolic => {
                    let r = Float::with_val(prec, &tf - &sf);
                    MpComplex::real(Float::with_val(prec, -(l * r)).exp())
                }
                Kind::Dispersive => MpComplex::cis(&Float::with_val(prec, -(l * &sf))),
            };
            acc = acc.add(&wk.mul(&basis));
        }
        acc.to_c64()
    }
}

pub fn distance_dm(gs: &GramSystem, m: i64) -> Result<f64> {
    let i = gs.slot(m)?;
    let v = gs.inverse.get(i, i).re.clone();
    if v <= 0 {
        return Err(Error::PrecisionInsufficient {
            condition: gs.condition_estimate,
            digits: gs.ctx.digits(),
        });
    }
    Ok(v.sqrt().recip().to_f64())
}

/// Distance by projecting e_m onto the span of the others (Schur complement, LU solve).
pub fn distance_dm_projection(gs: &GramSystem, m: i64) -> Result<f64> {
    let i = gs.slot(m)?;
    let gmm = gs.g.get(i, i).re.clone();
    if gs.sys.len() == 1 {
        return Ok(gmm.sqrt().to_f64());
    }
    let rest = gs.g.minor(i);
    let col: Vec<MpComplex> = (0..gs.sys.len())
        .filter(|&j| j != i)
        .map(|j| gs.g.get(j, i).clone())
        .collect();
    let c = lu_solve(&rest, &col)?;
    let mut proj = MpComplex::zero(gs.ctx.bits());
    for (gj, cj) in col.iter().zip(&c) {
        proj = proj.add(&gj.conj_mul(cj));
    }
    let d2 = gmm - proj.re;
    if d2 <= 0 {
        return Err(Error::PrecisionInsufficient {
            condition: gs.condition_estimate,
            digits: gs.ctx.digits(),
        });
    }
    Ok(d2.sqrt().to_f64())
}

/// ‖ψ_m‖ = 1/d_m.
pub fn psi_norm(gs: &GramSystem, m: i64) -> Result<f64> {
    let i = gs.slot(m)?;
    Ok(gs.inverse.get(i, i).re.clone().sqrt().to_f64())
}

/// Minimal L² control for y0 sampled at `samples` points; returns it with its exact norm.
pub fn minimal_norm_control(gs: &GramSystem, y0: &[Complex64], samples: usize) -> Result<(ControlSignal, f64)> {
    let w = gs.control_weights(y0)?;
    let prec = gs.ctx.bits();
    let mut energy = Float::new(prec);
    for ((wk, dk), a) in w.iter().zip(&gs.d).zip(y0) {
        let ck = dk.mul(&MpComplex::from_c64(prec, *a));
        energy += ck.conj_mul(wk).re;
    }
    let norm = energy.max(&Float::new(prec)).sqrt().to_f64();
    let grid = uniform_grid(0.0, gs.t, samples);
    let values: Vec<Complex64> = grid.par_iter().map(|&s| gs.eval_control(&w, s)).collect();
    Ok((ControlSignal::new(gs.t, values)?, norm))
}

fn cost_operator(gs: &GramSystem) -> MpMatrix {
    let n = gs.sys.len();
    MpMatrix::from_fn(n, |i, j| gs.d[i].conj().mul(gs.inverse.get(i, j)).mul(&gs.d[j]))
}

/// C_T^(N) = sqrt(λ_max(D* G⁻¹ D)).
pub fn truncated_cost(gs: &GramSystem) -> Result<f64> {
    Ok(worst_case_direction(gs)?.0)
}

/// Cost together with a unit y0 attaining it.
pub fn worst_case_direction(gs: &GramSystem) -> Result<(f64, Vec<Complex64>)> {
    let (lam, v) = hermitian_max_eig(&cost_operator(gs));
    if lam < 0 {
        return Err(Error::PrecisionInsufficient {
            condition: gs.condition_estimate,
            digits: gs.ctx.digits(),
        });
    }
    Ok((lam.sqrt().to_f64(), v.iter().map(|z| z.to_c64()).collect()))
}

/// max_m |D_mm| ψ_m, attained by y0 = e_m.
pub fn lower_bound_cost(gs: &GramSystem) -> Result<f64> {
    let mut best = 0.0f64;
    for (i, &k) in gs.sys.indices().iter().enumerate() {
        best = best.max(gs.d[i].abs().to_f64() * psi_norm(gs, k)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostPoint {
    pub t: f64,
    pub cost: f64,
    pub lower_bound: f64,
    pub condition_estimate: f64,
    pub digits: u32,
}

/// Cost and lower bound on a T grid, evaluated in parallel, ordered as given.
pub fn cost_sweep(sys: &SpectralSystem, t_grid: &[f64], ctx: PrecisionContext) -> Result<Vec<CostPoint>> {
    t_grid
        .par_iter()
        .map(|&t| {
            let gs = gram_matrix(sys, t, ctx)?;
            Ok(CostPoint {
                t,
                cost: truncated_cost(&gs)?,
                lower_bound: lower_bound_cost(&gs)?,
                condition_estimate: gs.condition_estimate,
                digits: ctx.digits(),
            })
        })
        .collect()
}

/// Fits ln y against T^(-p).
pub fn fit_against_power(t: &[f64], y: &[f64], p: f64) -> LinearFit {
    let xs: Vec<f64> = t.iter().map(|t| t.powf(-p)).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Constant K_0 in the upper estimate C_T ≲ exp(K/(RT)^(1/(α-1))), valid for every K > K_0.
pub fn upper_constant(kind: Kind, alpha: f64, two_sided: bool) -> f64 {
    let q = alpha / (alpha - 1.0);
    let s = match kind {
        Kind::Parabolic => 2.0 * (PI / (2.0 * alpha)).sin(),
        Kind::Dispersive => (PI / alpha).sin(),
    };
    let p = if two_sided { (alpha + 1.0) / (alpha - 1.0) } else { 1.0 / (alpha - 1.0) };
    3.0 * 2f64.powf(p) * PI.powf(q) / (4.0 * s.powf(q))
}

/// ln of min_j (j!)^(α-1) (aT)^j over j ≥ 0.
pub fn envelope_log_factor(alpha: f64, a: f64, t: f64) -> f64 {
    let step = (a * t).ln();
    let mut ln_fact = 0.0;
    let mut best: f64 = 0.0;
    // consecutive terms have ratio j^(α-1) aT, so the minimum sits where it crosses 1
    let mut j = 1.0f64;
    while (alpha - 1.0) * j.ln() + step < 0.0 && j < 1e7 {
        ln_fact += j.ln();
        best = (alpha - 1.0) * ln_fact + j * step;
        j += 1.0;
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub dm: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub c: f64,
    pub a: f64,
    pub points: Vec<EnvelopePoint>,
    pub violations: usize,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// d_m(T) ≤ min_j C √T (j!)^(α-1) (aT)^j with C and a calibrated at the largest T:
/// C makes the j = 0 term tight there and a = 1/T_max is the least value
/// keeping every j ≥ 1 term above it.
pub fn dm_scaling_check(sys: &SpectralSystem, t_grid: &[f64], m: i64, ctx: PrecisionContext) -> Result<EnvelopeReport> {
    if sys.alpha() < 2.0 {
        return Err(Error::DomainError(format!("envelope check needs α ≥ 2, got {}", sys.alpha())));
    }
    if t_grid.is_empty() {
        return Err(Error::DomainError("empty T grid".into()));
    }
    let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dms = t_grid
        .par_iter()
        .map(|&t| distance_dm(&gram_matrix(sys, t, ctx)?, m))
        .collect::<Result<Vec<_>>>()?;
    let i_max = t_grid.iter().position(|&t| t == t_max).unwrap_or(0);
    let c = dms[i_max] / t_max.sqrt();
    let a = 1.0 / t_max;
    let mut violations = 0;
    let points = t_grid
        .iter()
        .zip(&dms)
        .map(|(&t, &dm)| {
            let envelope = c * t.sqrt() * envelope_log_factor(sys.alpha(), a, t).exp();
            if dm > envelope * (1.0 + 1e-12) {
                violations += 1;
            }
            EnvelopePoint { t, dm, envelope }
        })
        .collect();
    Ok(EnvelopeReport {
        c,
        a,
        points,
        violations,
    })
}

/// Exponent σ in min_j (j!)^(α-1)(aT)^j ≈ exp(-c/T^σ), fitted on small T.
pub fn envelope_exponent_fit(alpha: f64, a: f64, t_grid: &[f64]) -> LinearFit {
    let xs: Vec<f64> = t_grid.iter().map(|t| (1.0 / t).ln()).collect();
    let ys: Vec<f64> = t_grid
        .iter()
        .map(|&t| (-envelope_log_factor(alpha, a, t)).ln())
        .collect();
    linear_fit(&xs, &ys)
}
