//! Spectral control systems: eigenvalues, control coefficients and presets.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// y_t + A y = B u
    Parabolic,
    /// y_t + i A y = B u
    Dispersive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    kind: Kind,
    indices: Vec<i64>,
    lambdas: Vec<f64>,
    bs: Vec<Complex64>,
    alpha: f64,
    rate: f64,
}

impl SpectralSystem {
    pub fn new(
        kind: Kind,
        indices: Vec<i64>,
        lambdas: Vec<f64>,
        bs: Vec<Complex64>,
        alpha: f64,
        rate: f64,
    ) -> Result<Self> {
        if indices.is_empty() || indices.len() != lambdas.len() || indices.len() != bs.len() {
            return Err(Error::DomainError("indices, lambdas and bs must have equal nonzero length".into()));
        }
        if !(alpha >= 1.0) || !(rate > 0.0) {
            return Err(Error::DomainError(format!("need alpha >= 1 and rate > 0, got {alpha}, {rate}")));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::DomainError("indices must be strictly increasing".into()));
            }
        }
        for (i, w) in lambdas.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::GapViolation(format!(
                    "eigenvalues not increasing at indices {} -> {}",
                    indices[i],
                    indices[i + 1]
                )));
            }
        }
        for (&n, &l) in indices.iter().zip(&lambdas) {
            if !l.is_finite() || l == 0.0 {
                return Err(Error::GapViolation(format!("eigenvalue at index {n} is zero or not finite")));
            }
            if n == 0 || (n > 0) != (l > 0.0) {
                return Err(Error::GapViolation(format!("sign of eigenvalue at index {n} does not match the index")));
            }
        }
        if kind == Kind::Parabolic && lambdas[0] <= 0.0 {
            return Err(Error::GapViolation("parabolic systems need positive eigenvalues".into()));
        }
        for (&n, b) in indices.iter().zip(&bs) {
            if !(b.norm() > 0.0) || !b.norm().is_finite() {
                return Err(Error::DomainError(format!("control coefficient at index {n} must be finite and nonzero")));
            }
        }
        Ok(Self {
            kind,
            indices,
            lambdas,
            bs,
            alpha,
            rate,
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Same spectrum, other dynamics. Fails if a dispersive spectrum with
    /// negative eigenvalues is turned parabolic.
    pub fn with_kind(self, kind: Kind) -> Result<Self> {
        Self::new(kind, self.indices, self.lambdas, self.bs, self.alpha, self.rate)
    }

    pub fn with_bs(self, bs: Vec<Complex64>) -> Result<Self> {
        Self::new(self.kind, self.indices, self.lambdas, bs, self.alpha, self.rate)
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn bs(&self) -> &[Complex64] {
        &self.bs
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_two_sided(&self) -> bool {
        self.indices[0] < 0
    }

    pub fn position(&self, n: i64) -> Result<usize> {
        self.indices.binary_search(&n).map_err(|_| Error::UnknownIndex(n))
    }

    pub fn lambda(&self, n: i64) -> Result<f64> {
        Ok(self.lambdas[self.position(n)?])
    }

    /// Largest positive index stored.
    pub fn max_index(&self) -> i64 {
        *self.indices.last().unwrap()
    }

    /// Keeps the modes whose |index| is at most `n`.
    pub fn truncate(&self, n: i64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.indices[i].abs() <= n).collect();
        Self::new(
            self.kind,
            keep.iter().map(|&i| self.indices[i]).collect(),
            keep.iter().map(|&i| self.lambdas[i]).collect(),
            keep.iter().map(|&i| self.bs[i]).collect(),
            self.alpha,
            self.rate,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumDoc::from(self)).expect("spectrum serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SpectrumDoc =
            serde_json::from_str(s).map_err(|e| Error::DomainError(format!("bad spectrum JSON: {e}")))?;
        if doc.bs_re.len() != doc.bs_im.len() {
            return Err(Error::DomainError("bs_re and bs_im lengths differ".into()));
        }
        let bs = doc
            .bs_re
            .iter()
            .zip(&doc.bs_im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Self::new(doc.kind, doc.indices, doc.lambdas, bs, doc.alpha, doc.rate)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumDoc {
    kind: Kind,
    indices: Vec<i64>,
    lambdas: Vec<f64>,
    bs_re: Vec<f64>,
    bs_im: Vec<f64>,
    alpha: f64,
    rate: f64,
}

impl From<&SpectralSystem> for SpectrumDoc {
    fn from(s: &SpectralSystem) -> Self {
        Self {
            kind: s.kind,
            indices: s.indices.clone(),
            lambdas: s.lambdas.clone(),
            bs_re: s.bs.iter().map(|b| b.re).collect(),
            bs_im: s.bs.iter().map(|b| b.im).collect(),
            alpha: s.alpha,
            rate: s.rate,
        }
    }
}

fn perturbations(n: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            if amplitude > 0.0 {
                rng.gen_range(-amplitude..=amplitude).clamp(-amplitude, amplitude)
            } else {
                0.0
            }
        })
        .collect()
}

fn check_params(alpha: f64, rate: f64, n_modes: usize, perturb: f64) -> Result<()> {
    if !(alpha > 1.0) {
        return Err(Error::DomainError(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(rate > 0.0) {
        return Err(Error::DomainError(format!("rate must be positive, got {rate}")));
    }
    if n_modes == 0 {
        return Err(Error::DomainError("need at least one mode".into()));
    }
    if !(perturb >= 0.0) {
        return Err(Error::DomainError(format!("perturbation amplitude must be >= 0, got {perturb}")));
    }
    Ok(())
}

/// λ_n = R n^α + ε_n n^(α-1), n = 1..N, b = 1, parabolic.
pub fn make_power_law_spectrum(
    alpha: f64,
    rate: f64,
    n_modes: usize,
    perturb_amplitude: f64,
    seed: u64,
) -> Result<SpectralSystem> {
    check_params(alpha, rate, n_modes, perturb_amplitude)?;
    let eps = perturbations(n_modes, perturb_amplitude, seed);
    let indices: Vec<i64> = (1..=n_modes as i64).collect();
    let lambdas = indices
        .iter()
        .zip(&eps)
        .map(|(&n, e)| {
            let n = n as f64;
            rate * n.powf(alpha) + e * n.powf(alpha - 1.0)
        })
        .collect();
    let sys = SpectralSystem::new(
        Kind::Parabolic,
        indices,
        lambdas,
        vec![Complex64::new(1.0, 0.0); n_modes],
        alpha,
        rate,
    )?;
    if spectral_gap(&sys) <= 0.0 || sys.lambdas[0] <= 0.0 {
        return Err(Error::GapViolation("perturbation destroyed positivity or the gap".into()));
    }
    Ok(sys)
}

/// λ_{±n} = ±(R n^α + ε_{±n} n^(α-1)), dispersive, b = 1.
pub fn make_two_sided_spectrum(
    alpha: f64,
    rate: f64,
    n_modes: usize,
    perturb_amplitude: f64,
    seed: u64,
) -> Result<SpectralSystem> {
    check_params(alpha, rate, n_modes, perturb_amplitude)?;
    let eps = perturbations(2 * n_modes, perturb_amplitude, seed);
    let n = n_modes as i64;
    let indices: Vec<i64> = (-n..=-1).chain(1..=n).collect();
    let lambdas = indices
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let m = k.unsigned_abs() as f64;
            let v = rate * m.powf(alpha) + eps[i] * m.powf(alpha - 1.0);
            if k < 0 {
                -v
            } else {
                v
            }
        })
        .collect();
    SpectralSystem::new(
        Kind::Dispersive,
        indices,
        lambdas,
        vec![Complex64::new(1.0, 0.0); 2 * n_modes],
        alpha,
        rate,
    )
}

/// Periodic KdV on (0, L): λ_k = (2πk/L)^3, k = ±1..±N.
pub fn periodic_kdv_spectrum(length: f64, n_modes: usize) -> Result<SpectralSystem> {
    if !(length > 0.0) || n_modes == 0 {
        return Err(Error::DomainError("need length > 0 and at least one mode".into()));
    }
    let base = 2.0 * PI / length;
    let rate = base.powi(3);
    let n = n_modes as i64;
    let indices: Vec<i64> = (-n..=-1).chain(1..=n).collect();
    let lambdas = indices.iter().map(|&k| rate * (k as f64).powi(3)).collect();
    let bs = indices
        .iter()
        .map(|&k| {
            let k = k as f64;
            let mag = (1.0 + (base * k).powi(2)).sqrt() * base * k.abs() / (length.sqrt() * k * k);
            Complex64::new(mag, 0.0)
        })
        .collect();
    SpectralSystem::new(Kind::Dispersive, indices, lambdas, bs, 3.0, rate)
}

/// Fractional Dirichlet Laplacian on (0, L): λ_k = (kπ/L)^(2γ).
pub fn fractional_spectrum(gamma_exp: f64, length: f64, n_modes: usize, kind: Kind) -> Result<SpectralSystem> {
    if !(gamma_exp >= 1.0) {
        return Err(Error::DomainError(format!(
            "fractional exponent gamma must be >= 1 (null controllability with continuous controls \
             is only established for gamma >= 1), got {gamma_exp}"
        )));
    }
    if !(length > 0.0) || n_modes == 0 {
        return Err(Error::DomainError("need length > 0 and at least one mode".into()));
    }
    let base = PI / length;
    let alpha = 2.0 * gamma_exp;
    let indices: Vec<i64> = (1..=n_modes as i64).collect();
    let lambdas = indices.iter().map(|&k| (base * k as f64).powf(alpha)).collect();
    let bs = indices
        .iter()
        .map(|&k| {
            let k = k as f64;
            let mag = 2f64.sqrt() * (1.0 + k * k).sqrt() * base / (k * length.sqrt());
            Complex64::new(mag, 0.0)
        })
        .collect();
    SpectralSystem::new(kind, indices, lambdas, bs, alpha, base.powf(alpha))
}

pub fn spectral_gap(sys: &SpectralSystem) -> f64 {
    sys.lambdas
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// max |λ_n - R n^α| / n^(α-1) with the system's own (α, R)
    pub max_residual: f64,
}

/// Fits log|λ_n| against log|n| over the top half of the positive modes.
pub fn validate_asymptotics(sys: &SpectralSystem) -> Result<AsymptoticFit> {
    let pos: Vec<(f64, f64)> = sys
        .indices
        .iter()
        .zip(&sys.lambdas)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &l)| (n as f64, l))
        .collect();
    if pos.len() < 8 {
        return Err(Error::DomainError(format!(
            "asymptotic fit needs at least 8 positive modes, got {}",
            pos.len()
        )));
    }
    let top = &pos[pos.len() / 2..];
    let xs: Vec<f64> = top.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = top.iter().map(|(_, l)| l.abs().ln()).collect();
    let fit = linear_fit(&xs, &ys);
    let max_residual = sys
        .indices
        .iter()
        .zip(&sys.lambdas)
        .map(|(&n, &l)| {
            let m = n.unsigned_abs() as f64;
            (l.abs() - sys.rate * m.powf(sys.alpha)).abs() / m.powf(sys.alpha - 1.0)
        })
        .fold(0.0, f64::max);
    Ok(AsymptoticFit {
        exponent: fit.slope,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_examples() {
        let s = make_power_law_spectrum(2.0, 1.0, 3, 0.0, 0).unwrap();
        assert_eq!(s.lambdas(), &[1.0, 4.0, 9.0]);
        assert!(s.bs().iter().all(|b| *b == Complex64::new(1.0, 0.0)));
        let s = make_power_law_spectrum(3.0, 1.0, 2, 0.0, 0).unwrap();
        assert_eq!(s.lambdas(), &[1.0, 8.0]);
    }

    #[test]
    fn perturbed_power_law_respects_amplitude() {
        let s = make_power_law_spectrum(2.0, 1.0, 50, 0.5, 7).unwrap();
        for (&n, &l) in s.indices().iter().zip(s.lambdas()) {
            let n = n as f64;
            assert!((l - n * n).abs() / n <= 0.5 + 1e-12);
        }
        assert!(spectral_gap(&s) > 0.0);
        let again = make_power_law_spectrum(2.0, 1.0, 50, 0.5, 7).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn two_sided_examples() {
        let s = make_two_sided_spectrum(3.0, 1.0, 2, 0.0, 0).unwrap();
        assert_eq!(s.lambdas(), &[-8.0, -1.0, 1.0, 8.0]);
        assert_eq!(s.kind(), Kind::Dispersive);
        let s = make_two_sided_spectrum(2.0, 2.0, 1, 0.0, 0).unwrap();
        assert_eq!(s.lambdas(), &[-2.0, 2.0]);
        let s = make_two_sided_spectrum(3.0, 1.0, 20, 0.3, 1).unwrap();
        for (&n, &l) in s.indices().iter().zip(s.lambdas()) {
            assert_eq!(n.signum() as f64, l.signum());
        }
    }

    #[test]
    fn gaps() {
        let s = make_power_law_spectrum(2.0, 1.0, 3, 0.0, 0).unwrap();
        assert_eq!(spectral_gap(&s), 3.0);
        let s = make_two_sided_spectrum(3.0, 1.0, 2, 0.0, 0).unwrap();
        assert_eq!(spectral_gap(&s), 2.0);
        // two-sided: the closest pair is λ_{-1} = -1, λ_1 = 1
        let s = periodic_kdv_spectrum(2.0 * PI, 5).unwrap();
        assert!((spectral_gap(&s) - 2.0).abs() < 1e-12);
        let pos = s.truncate(5).unwrap();
        assert!((pos.lambda(2).unwrap() - pos.lambda(1).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn kdv_preset() {
        let s = periodic_kdv_spectrum(2.0 * PI, 3).unwrap();
        assert!((s.lambda(1).unwrap() - 1.0).abs() < 1e-14);
        assert!((s.lambda(2).unwrap() - 8.0).abs() < 1e-13);
        let b1 = s.bs()[s.position(1).unwrap()].norm();
        assert!((b1 - 2f64.sqrt() / (2.0 * PI).sqrt()).abs() < 1e-14);
        let big = periodic_kdv_spectrum(2.0 * PI, 2000).unwrap();
        let bn = big.bs().last().unwrap().norm();
        assert!((bn - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn fractional_preset() {
        let s = fractional_spectrum(1.0, PI, 3, Kind::Parabolic).unwrap();
        for (a, b) in s.lambdas().iter().zip([1.0, 4.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.alpha(), 2.0);
        let s = fractional_spectrum(1.5, PI, 2, Kind::Parabolic).unwrap();
        assert!((s.lambda(2).unwrap() - 8.0).abs() < 1e-12);
        assert!(matches!(
            fractional_spectrum(0.4, PI, 3, Kind::Parabolic),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn asymptotic_fits() {
        let s = make_power_law_spectrum(2.0, 1.0, 16, 0.0, 0).unwrap();
        let f = validate_asymptotics(&s).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 1.0).abs() < 1e-8);
        let s = periodic_kdv_spectrum(2.0 * PI, 16).unwrap();
        let f = validate_asymptotics(&s).unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-10);
        let s = make_power_law_spectrum(2.0, 1.0, 30, 0.5, 3).unwrap();
        assert!(validate_asymptotics(&s).unwrap().max_residual <= 0.5 + 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let s = periodic_kdv_spectrum(2.0 * PI, 4).unwrap();
        let back = SpectralSystem::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn unknown_index() {
        let s = make_power_law_spectrum(2.0, 1.0, 3, 0.0, 0).unwrap();
        assert_eq!(s.position(7), Err(Error::UnknownIndex(7)));
    }
}
