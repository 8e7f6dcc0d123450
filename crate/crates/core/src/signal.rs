//! Sampled control signals on [0, T].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSignal {
    pub t_final: f64,
    pub time_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub l2: f64,
    pub linf: f64,
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// Trapezoid rule for ∫|v|^2 on a uniform grid of step h.
pub fn trapezoid_l2(values: &[Complex64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut s: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    s -= 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr());
    (s * h).sqrt()
}

impl ControlSignal {
    /// Values sampled on the uniform grid of len(values) points over [0, T].
    pub fn new(t_final: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(t_final > 0.0) || values.len() < 4 {
            return Err(Error::GridMismatch(format!(
                "control needs T > 0 and at least 4 samples, got T = {t_final}, {} samples",
                values.len()
            )));
        }
        let n = values.len();
        let time_grid = uniform_grid(0.0, t_final, n);
        let l2 = trapezoid_l2(&values, t_final / (n - 1) as f64);
        let linf = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self {
            t_final,
            time_grid,
            values,
            l2,
            linf,
        })
    }

    pub fn zero(t_final: f64, n: usize) -> Result<Self> {
        Self::new(t_final, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn step(&self) -> f64 {
        self.t_final / (self.values.len() - 1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im\n");
        for (t, v) in self.time_grid.iter().zip(&self.values) {
            out.push_str(&format!("{t:.12e},{:.12e},{:.12e}\n", v.re, v.im));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_constant_signal() {
        let s = ControlSignal::new(2.0, vec![Complex64::new(0.0, 3.0); 11]).unwrap();
        assert!((s.l2 - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.linf, 3.0);
        assert_eq!(s.time_grid[10], 2.0);
        assert!(ControlSignal::new(1.0, vec![Complex64::new(0.0, 0.0); 2]).is_err());
        assert!(s.to_csv().starts_with("t,re,im\n0.000000000000e0,"));
    }
}
