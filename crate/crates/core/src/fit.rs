//! Least-squares line fits and the calibrate-then-validate bound protocol.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = slope * x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub re: f64,
    pub im: f64,
    pub log_abs: f64,
    pub slack: f64,
}

/// Slack values fitted by slack <= c0 + d ln(1 + |z|) on the even-indexed
/// points and checked on the odd-indexed ones. Without the log term d = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub c0: f64,
    pub d: f64,
    pub max_violation: f64,
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    pub fn from_points(points: Vec<BoundPoint>) -> Self {
        Self::calibrate(points, true)
    }

    pub fn calibrate(points: Vec<BoundPoint>, log_term: bool) -> Self {
        let abs = |p: &BoundPoint| (p.re * p.re + p.im * p.im).sqrt();
        let calib: Vec<&BoundPoint> = points
            .iter()
            .step_by(2)
            .filter(|p| p.slack.is_finite())
            .collect();
        let (c0, d) = if calib.len() >= 2 {
            let xs: Vec<f64> = calib.iter().map(|p| abs(p).ln_1p()).collect();
            let ys: Vec<f64> = calib.iter().map(|p| p.slack).collect();
            let fit = linear_fit(&xs, &ys);
            let d = if log_term && fit.slope.is_finite() { fit.slope.max(0.0) } else { 0.0 };
            let c0 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| y - d * x)
                .fold(0.0, f64::max);
            (c0, d)
        } else {
            (calib.first().map(|p| p.slack.max(0.0)).unwrap_or(0.0), 0.0)
        };
        let max_violation = points
            .iter()
            .skip(1)
            .step_by(2)
            .filter(|p| p.slack.is_finite())
            .map(|p| p.slack - c0 - d * abs(p).ln_1p())
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            c0,
            d,
            max_violation,
            points,
        }
    }

    pub fn holds(&self) -> bool {
        self.max_violation <= 0.0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("z_re,z_im,log_abs,slack\n");
        for p in &self.points {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e},{:.12e}\n", p.re, p.im, p.log_abs, p.slack));
        }
        s
    }
}
