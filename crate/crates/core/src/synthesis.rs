//! Biorthogonal families on [-T/2, T/2] by Fourier inversion, and the controls built from them.
//!
//! Dispersive: ĝ_n(x) = Φ_n(-x-λ_n) H_β(x+λ_n), with ∫ f_n e^{iλ_k t} dt = δ_kn.
//! Parabolic: ĥ_n(x) = Φ_n(-ix-λ_n) H_β(c_α x) / H_β(iλ_n c_α), with ∫ w_n e^{λ_k t} dt = δ_kn.
//! Transforms use ĝ(x) = ∫ f(t) e^{-ixt} dt.
//!
//! Frequency integrals are trapezoid sums on nodes ξ_j = jh around the decay
//! center (x = -λ_n dispersive, x = 0 parabolic). With h < 2π/(β + t_max) the
//! sum has no aliasing on |t| ≤ t_max. The cutoff X is certified by probing
//! ψ(ξ) = |ĝ|(1+ξ²) on ±[X, 16X]: the discarded part is at most c(π - 2 arctan X)/(2π).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::{h_beta_scaled, link_beta_to_nu, MultiplierConfig, Scaled};
use crate::product::{phi_n, ProductEvaluator, ProductScope};
use crate::signal::{trapezoid_l2, uniform_grid, ControlSignal};
use crate::simulation::ModalState;
use crate::spectral::{Kind, SpectralSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisConfig {
    pub delta: f64,
    /// bound on the pointwise error from truncating the frequency integral
    pub tol: f64,
    /// time samples on [-T/2, T/2]; chosen from the cutoff when None
    pub time_points: Option<usize>,
    pub scope: ProductScope,
    pub x_start: f64,
    pub x_limit: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            tol: 1e-9,
            time_points: None,
            scope: ProductScope::Stored,
            x_start: 64.0,
            x_limit: 1e8,
        }
    }
}

/// c_α = sin(π/α)^α / (2 sin(π/(2α)))^α
pub fn c_alpha(alpha: f64) -> f64 {
    ((PI / alpha).sin() / (2.0 * (PI / (2.0 * alpha)).sin())).powf(alpha)
}

/// Exponential type of the multiplier, chosen so the family lives in [-(1-δ)T/2, (1-δ)T/2].
pub fn beta_for(kind: Kind, alpha: f64, t: f64, delta: f64) -> f64 {
    match kind {
        Kind::Dispersive => t * (1.0 - delta) / 2.0,
        Kind::Parabolic => (1.0 - delta) * t / (2.0 * c_alpha(alpha)),
    }
}

/// Frequency-side data for one spectrum and horizon.
pub struct FamilyKernel<'a> {
    sys: &'a SpectralSystem,
    cfg: MultiplierConfig,
    scale: f64,
    scope: ProductScope,
    stored: Vec<ProductEvaluator<'a>>,
    /// ln-scaled H_β(iλ_n c_α), parabolic only
    denominators: Vec<Scaled>,
}

impl<'a> FamilyKernel<'a> {
    pub fn new(sys: &'a SpectralSystem, t: f64, delta: f64, scope: ProductScope) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::DomainError(format!("T must be positive, got {t}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::DomainError(format!("delta must lie in [0, 1), got {delta}")));
        }
        let kind = sys.kind();
        let beta = beta_for(kind, sys.alpha(), t, delta);
        let cfg = link_beta_to_nu(sys.alpha(), delta, beta)?;
        let scale = match kind {
            Kind::Dispersive => 1.0,
            Kind::Parabolic => c_alpha(sys.alpha()),
        };
        let stored = sys
            .indices()
            .iter()
            .map(|&n| ProductEvaluator::new(sys, n, f64::INFINITY, 1.0, ProductScope::Stored))
            .collect::<Result<Vec<_>>>()?;
        let mut denominators = Vec::new();
        if kind == Kind::Parabolic {
            for &l in sys.lambdas() {
                let d = h_beta_scaled(&cfg, Complex64::new(0.0, l * scale))?;
                if d.mantissa.norm() == 0.0 || !d.mantissa.norm().is_finite() || d.ln_abs() > 700.0 {
                    return Err(Error::DivisionDegenerate(format!(
                        "H_beta(i lambda c_alpha) at lambda = {l} has ln|.| = {}; \
                         raise delta or reduce T",
                        d.ln_abs()
                    )));
                }
                denominators.push(d);
            }
        }
        Ok(Self {
            sys,
            cfg,
            scale,
            scope,
            stored,
            denominators,
        })
    }

    pub fn multiplier(&self) -> &MultiplierConfig {
        &self.cfg
    }

    /// Offset of the decay center for member at slot i.
    fn center(&self, i: usize) -> f64 {
        match self.sys.kind() {
            Kind::Dispersive => -self.sys.lambdas()[i],
            Kind::Parabolic => 0.0,
        }
    }

    fn phi(&self, i: usize, z: Complex64) -> Result<(Complex64, f64)> {
        let p = match self.scope {
            ProductScope::Stored => self.stored[i].eval(z)?,
            ProductScope::Ideal => phi_n(self.sys, self.sys.indices()[i], z, 1e-10)?,
        };
        Ok((p.value / p.log_abs.exp(), p.log_abs))
    }

    /// Multiplier factor at offset ξ from the center.
    fn multiplier_at(&self, xi: f64) -> Result<Scaled> {
        if xi == 0.0 {
            return Ok(Scaled {
                mantissa: Complex64::new(1.0, 0.0),
                log_scale: 0.0,
            });
        }
        h_beta_scaled(&self.cfg, Complex64::new(xi * self.scale, 0.0))
    }

    fn product_arg(&self, i: usize, xi: f64) -> Complex64 {
        match self.sys.kind() {
            Kind::Dispersive => Complex64::new(-xi, 0.0),
            Kind::Parabolic => Complex64::new(-self.sys.lambdas()[i], -xi),
        }
    }

    /// Member i in frequency, at x = center + ξ, given the multiplier there.
    fn combine(&self, i: usize, xi: f64, h: &Scaled) -> Result<Complex64> {
        let (phase, ln_phi) = self.phi(i, self.product_arg(i, xi))?;
        if ln_phi == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (mant, ln_den) = match self.denominators.get(i) {
            Some(d) if self.sys.kind() == Kind::Parabolic => (h.mantissa / d.mantissa, d.log_scale),
            _ => (h.mantissa, 0.0),
        };
        Ok(phase * mant * (ln_phi + h.log_scale - ln_den).exp())
    }

    pub fn member_at(&self, n: i64, x: f64) -> Result<Complex64> {
        let i = self.sys.position(n)?;
        let xi = x - self.center(i);
        let h = self.multiplier_at(xi)?;
        self.combine(i, xi, &h)
    }
}

/// ĝ_n(x) for a dispersive spectrum (stored-mode product).
pub fn g_n(sys: &SpectralSystem, n: i64, x: f64, t: f64, delta: f64) -> Result<Complex64> {
    if sys.kind() != Kind::Dispersive {
        return Err(Error::DomainError("g_n needs a dispersive spectrum".into()));
    }
    FamilyKernel::new(sys, t, delta, ProductScope::Stored)?.member_at(n, x)
}

/// ĥ_n(x) for a parabolic spectrum (stored-mode product).
pub fn h_n(sys: &SpectralSystem, n: i64, x: f64, t: f64, delta: f64) -> Result<Complex64> {
    if sys.kind() != Kind::Parabolic {
        return Err(Error::DomainError("h_n needs a parabolic spectrum".into()));
    }
    FamilyKernel::new(sys, t, delta, ProductScope::Stored)?.member_at(n, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub x_cutoff: f64,
    /// sup of |ĝ(ξ)|(1+ξ²) seen on the probe
    pub decay_constant: f64,
    pub tail_bound: f64,
}

fn tail_for(c: f64, x: f64) -> f64 {
    c * (PI - 2.0 * x.atan()) / (2.0 * PI)
}

fn probe_points(x: f64) -> Vec<f64> {
    let k = 48;
    let mut pts = Vec::with_capacity(2 * k);
    for i in 0..k {
        let r = x * 16f64.powf(i as f64 / (k - 1) as f64);
        pts.push(r);
        pts.push(-r);
    }
    pts
}

/// Smallest X = x_start·2^k whose probe shows outward decay and a tail below tol.
/// `psis(ξ-list)` returns, for each probe point, the largest |ĝ|(1+ξ²) over the functions certified jointly.
pub fn certify_cutoff(
    psis: impl Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
    x_start: f64,
    x_limit: f64,
) -> Result<Cutoff> {
    let mut x = x_start;
    while x <= x_limit {
        let pts = probe_points(x);
        let vals = psis(&pts)?;
        let c = vals.iter().copied().fold(0.0, f64::max);
        let outer = vals[vals.len() - 2].max(vals[vals.len() - 1]);
        let inner = vals[0].max(vals[1]);
        let decaying = outer <= inner || outer <= 1e-3 * tol;
        if c.is_finite() && decaying && tail_for(c, x) <= tol {
            return Ok(Cutoff {
                x_cutoff: x,
                decay_constant: c,
                tail_bound: tail_for(c, x),
            });
        }
        x *= 2.0;
    }
    Err(Error::TailNotBounded(format!(
        "no cutoff below {x_limit} certifies a frequency tail under {tol}"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvertedSamples {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub x_cutoff: f64,
    pub tail_bound: f64,
}

/// (h/2π) Σ_j v_j[·] e^{i(center + jh) t} for each t, all columns at once.
/// `table[j]` holds the values at node ξ = (j - J) h for every column.
fn trapezoid_inverse(table: &[Vec<Complex64>], h: f64, centers: &[f64], times: &[f64]) -> Vec<Vec<Complex64>> {
    let half = (table.len() / 2) as f64;
    let cols = centers.len();
    times
        .par_iter()
        .map(|&t| {
            let mut acc = vec![Complex64::new(0.0, 0.0); cols];
            let step = Complex64::from_polar(1.0, h * t);
            let mut rot = Complex64::new(1.0, 0.0);
            for (j, row) in table.iter().enumerate() {
                if j % 128 == 0 {
                    rot = Complex64::from_polar(1.0, (j as f64 - half) * h * t);
                }
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v * rot;
                }
                rot *= step;
            }
            acc.iter()
                .zip(centers)
                .map(|(a, &c)| a * Complex64::from_polar(h / (2.0 * PI), c * t))
                .collect()
        })
        .collect()
}

/// f(t) = (1/2π) ∫ ĝ(x) e^{ixt} dx for ĝ concentrated near `center` and f supported in
/// [-support, support], sampled at `times`.
pub fn invert_to_time(
    g: impl Fn(f64) -> Result<Complex64> + Sync,
    center: f64,
    support: f64,
    times: &[f64],
    tol: f64,
) -> Result<InvertedSamples> {
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let cut = certify_cutoff(
        |pts| {
            pts.par_iter()
                .map(|&xi| Ok(g(center + xi)?.norm() * (1.0 + xi * xi)))
                .collect()
        },
        tol,
        1.0,
        1e9,
    )?;
    let h = PI / (support + t_max);
    let nodes = (cut.x_cutoff / h).ceil() as i64;
    let table = (-nodes..=nodes)
        .into_par_iter()
        .map(|j| Ok(vec![g(center + j as f64 * h)?]))
        .collect::<Result<Vec<_>>>()?;
    let values = trapezoid_inverse(&table, h, &[center], times)
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(InvertedSamples {
        times: times.to_vec(),
        values,
        x_cutoff: cut.x_cutoff,
        tail_bound: cut.tail_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiorthogonalFamily {
    pub kind: Kind,
    pub t_final: f64,
    /// uniform, symmetric about 0, covering [-T/2, T/2]
    pub time_grid: Vec<f64>,
    pub indices: Vec<i64>,
    /// samples[i] is the member for indices[i]
    pub samples: Vec<Vec<Complex64>>,
    pub x_cutoff: f64,
    pub tail_bound: f64,
}

impl BiorthogonalFamily {
    pub fn member(&self, n: i64) -> Option<&[Complex64]> {
        self.indices.iter().position(|&k| k == n).map(|i| self.samples[i].as_slice())
    }

    pub fn step(&self) -> f64 {
        self.time_grid[1] - self.time_grid[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,re,im\n");
        for (i, &n) in self.indices.iter().enumerate() {
            for (t, v) in self.time_grid.iter().zip(&self.samples[i]) {
                out.push_str(&format!("{t:.12e},{n},{:.12e},{:.12e}\n", v.re, v.im));
            }
        }
        out
    }
}

/// Samples every member on `times` using frequency nodes up to the certified cutoff.
fn synthesize_on(kernel: &FamilyKernel, times: &[f64], cut: &Cutoff) -> Result<Vec<Vec<Complex64>>> {
    let count = kernel.sys.len();
    let support = kernel.cfg.beta * kernel.scale;
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let h = PI / (support + t_max);
    let nodes = (cut.x_cutoff / h).ceil() as i64;
    let table = (-nodes..=nodes)
        .into_par_iter()
        .map(|j| {
            let xi = j as f64 * h;
            let hv = kernel.multiplier_at(xi)?;
            (0..count).map(|i| kernel.combine(i, xi, &hv)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let centers: Vec<f64> = (0..count).map(|i| kernel.center(i)).collect();
    let by_time = trapezoid_inverse(&table, h, &centers, times);
    Ok((0..count)
        .map(|i| by_time.iter().map(|row| row[i]).collect())
        .collect())
}

fn default_time_points(t: f64, x_cutoff: f64, lambda_max: f64) -> usize {
    let intervals = (4.0 * t * (x_cutoff + lambda_max) / PI).ceil() as usize;
    let intervals = intervals.max(64);
    intervals + intervals % 2 + 1
}

pub fn synthesize_family(sys: &SpectralSystem, t: f64, cfg: &SynthesisConfig) -> Result<BiorthogonalFamily> {
    let kernel = FamilyKernel::new(sys, t, cfg.delta, cfg.scope)?;
    let lambda_max = sys.lambdas().iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cut = synthesize_cutoff(&kernel, cfg)?;
    let points = cfg
        .time_points
        .unwrap_or_else(|| default_time_points(t, cut.x_cutoff, lambda_max));
    if points < 4 {
        return Err(Error::GridMismatch(format!("need at least 4 time points, got {points}")));
    }
    let time_grid = symmetric_grid(t, points);
    let samples = synthesize_on(&kernel, &time_grid, &cut)?;
    Ok(BiorthogonalFamily {
        kind: sys.kind(),
        t_final: t,
        time_grid,
        indices: sys.indices().to_vec(),
        samples,
        x_cutoff: cut.x_cutoff,
        tail_bound: cut.tail_bound,
    })
}

/// Parabolic members are tested against e^{λ_k t}, |t| ≤ β c_α, so pointwise
/// errors are amplified by up to e^{λ_max β c_α}; the tail target absorbs that.
fn synthesize_cutoff(kernel: &FamilyKernel, cfg: &SynthesisConfig) -> Result<Cutoff> {
    let count = kernel.sys.len();
    let tol = match kernel.sys.kind() {
        Kind::Dispersive => cfg.tol,
        Kind::Parabolic => {
            let lmax = kernel.sys.lambdas().iter().fold(0.0f64, |m, l| m.max(*l));
            cfg.tol * (-lmax * kernel.cfg.beta * kernel.scale).exp()
        }
    };
    certify_cutoff(
        |pts| {
            pts.par_iter()
                .map(|&xi| {
                    let h = kernel.multiplier_at(xi)?;
                    let mut worst = 0.0f64;
                    for i in 0..count {
                        worst = worst.max(kernel.combine(i, xi, &h)?.norm() * (1.0 + xi * xi));
                    }
                    Ok(worst)
                })
                .collect()
        },
        tol,
        cfg.x_start,
        cfg.x_limit,
    )
}

/// Uniform grid on [-T/2, T/2], exactly symmetric.
fn symmetric_grid(t: f64, points: usize) -> Vec<f64> {
    let mut g = uniform_grid(-t / 2.0, t / 2.0, points);
    let n = g.len();
    for i in 0..n / 2 {
        let v = 0.5 * (g[n - 1 - i] - g[i]);
        g[i] = -v;
        g[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        g[n / 2] = 0.0;
    }
    g
}

/// Samples members on an arbitrary time list (for support checks outside [-T/2, T/2]).
pub fn sample_family_at(sys: &SpectralSystem, t: f64, cfg: &SynthesisConfig, times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let kernel = FamilyKernel::new(sys, t, cfg.delta, cfg.scope)?;
    let cut = synthesize_cutoff(&kernel, cfg)?;
    synthesize_on(&kernel, times, &cut)
}

fn trapezoid(values: impl Iterator<Item = Complex64>, h: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in values.enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * v;
    }
    acc * h
}

/// Test exponential e^{iλt} (dispersive) or e^{λt} (parabolic).
fn test_exp(kind: Kind, lambda: f64, t: f64) -> Complex64 {
    match kind {
        Kind::Dispersive => Complex64::from_polar(1.0, lambda * t),
        Kind::Parabolic => Complex64::new((lambda * t).exp(), 0.0),
    }
}

/// M[n,k] = ∫ f_n(t) e(λ_k, t) dt by the trapezoid rule on the family grid.
pub fn biorthogonality_matrix(family: &BiorthogonalFamily, sys: &SpectralSystem) -> DMatrix<Complex64> {
    let h = family.step();
    let m = family.time_grid.len();
    let count = family.indices.len();
    let lambdas = sys.lambdas();
    let rows: Vec<Vec<Complex64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            lambdas
                .iter()
                .map(|&l| {
                    trapezoid(
                        family.samples[i]
                            .iter()
                            .zip(&family.time_grid)
                            .map(|(f, &t)| f * test_exp(family.kind, l, t)),
                        h,
                        m,
                    )
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(count, lambdas.len(), |i, k| rows[i][k])
}

pub fn max_identity_residual(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - e).norm());
        }
    }
    worst
}

/// Largest off-diagonal |M[n,k]|.
pub fn max_off_diagonal(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Coefficient multiplying f_k(t - T/2) in the control for unit data in mode k.
fn control_weight(kind: Kind, t: f64, lambda: f64, b: Complex64) -> Complex64 {
    let phase = match kind {
        Kind::Dispersive => Complex64::from_polar(1.0, -t * lambda / 2.0),
        Kind::Parabolic => Complex64::new((-t * lambda / 2.0).exp(), 0.0),
    };
    -phase / b
}

/// u(t) = -Σ_k (a_k/b_k) e(-Tλ_k/2) f_k(t - T/2) on [0, T].
pub fn control_from_family(family: &BiorthogonalFamily, sys: &SpectralSystem, y0: &[Complex64]) -> Result<ControlSignal> {
    if y0.len() != family.indices.len() || sys.indices() != family.indices.as_slice() {
        return Err(Error::GridMismatch("initial data, spectrum and family must share one index set".into()));
    }
    let m = family.time_grid.len();
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    for (i, (&a, (&l, &b))) in y0.iter().zip(sys.lambdas().iter().zip(sys.bs())).enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let w = a * control_weight(family.kind, family.t_final, l, b);
        for (v, f) in values.iter_mut().zip(&family.samples[i]) {
            *v += w * f;
        }
    }
    ControlSignal::new(family.t_final, values)
}

pub fn synthesize_control(sys: &SpectralSystem, y0: &[Complex64], t: f64, cfg: &SynthesisConfig) -> Result<ControlSignal> {
    if y0.len() != sys.len() {
        return Err(Error::GridMismatch(format!(
            "initial data has {} coefficients, spectrum has {}",
            y0.len(),
            sys.len()
        )));
    }
    let family = synthesize_family(sys, t, cfg)?;
    control_from_family(&family, sys, y0)
}

/// Terminal state implied by the family's biorthogonality matrix:
/// y_k(T) = e^{-μ_k T} (a_k + b_k ∫ u(s) e(λ_k, s) ds).
pub fn predicted_terminal_state(family: &BiorthogonalFamily, sys: &SpectralSystem, y0: &[Complex64]) -> ModalState {
    let m = biorthogonality_matrix(family, sys);
    let t = family.t_final;
    let kind = family.kind;
    let lambdas = sys.lambdas();
    let coeffs = (0..lambdas.len())
        .map(|k| {
            let mut moment = Complex64::new(0.0, 0.0);
            for (n, &a) in y0.iter().enumerate() {
                moment += a * control_weight(kind, t, lambdas[n], sys.bs()[n]) * m[(n, k)];
            }
            // shift from [-T/2, T/2] to [0, T]
            moment *= test_exp(kind, lambdas[k], t / 2.0);
            let decay = match kind {
                Kind::Dispersive => Complex64::from_polar(1.0, -lambdas[k] * t),
                Kind::Parabolic => Complex64::new((-lambdas[k] * t).exp(), 0.0),
            };
            decay * (y0[k] + sys.bs()[k] * moment)
        })
        .collect();
    ModalState { coeffs, time: t }
}

/// Operator norm of y0 ↦ u over unit modal data, from the trapezoid Gram matrix of the control atoms.
pub fn biorthogonal_cost(family: &BiorthogonalFamily, sys: &SpectralSystem) -> f64 {
    let count = family.indices.len();
    let atoms: Vec<Vec<Complex64>> = (0..count)
        .map(|i| {
            let w = control_weight(family.kind, family.t_final, sys.lambdas()[i], sys.bs()[i]);
            family.samples[i].iter().map(|f| w * f).collect()
        })
        .collect();
    let h = family.step();
    let m = family.time_grid.len();
    let gram = DMatrix::from_fn(count, count, |i, j| {
        trapezoid(atoms[i].iter().zip(&atoms[j]).map(|(a, b)| a.conj() * b), h, m)
    });
    SymmetricEigen::new(gram).eigenvalues.max().max(0.0).sqrt()
}

/// ‖f_n‖ on the family grid.
pub fn member_l2(family: &BiorthogonalFamily, n: i64) -> Option<f64> {
    family.member(n).map(|s| trapezoid_l2(s, family.step()))
}
