//! Gram entries against tanh-sinh quadrature of the defining integrals in MPFR.

use std::f64::consts::PI;

use moment_control::gram::{distance_dm, gram_matrix};
use moment_control::precision::PrecisionContext;
use moment_control::spectral::{make_power_law_spectrum, periodic_kdv_spectrum, Kind, SpectralSystem};
use rug::ops::Pow;
use rug::Float;

/// ∫_0^T f(s) ds with nodes s = T/2 (1 + tanh(π/2 sinh τ)), step h = 2^-level.
fn tanh_sinh(f: impl Fn(&Float) -> (Float, Float), t: f64, prec: u32, level: u32) -> (Float, Float) {
    let h = Float::with_val(prec, Float::i_exp(1, -(level as i32)));
    let half_t = Float::with_val(prec, t) / 2u32;
    let half_pi = Float::with_val(prec, rug::float::Constant::Pi) / 2u32;
    let steps = (6.0 * f64::powi(2.0, level as i32)) as i64;
    let mut re = Float::new(prec);
    let mut im = Float::new(prec);
    for k in -steps..=steps {
        let tau = Float::with_val(prec, &h * k);
        let u = Float::with_val(prec, &half_pi * tau.clone().sinh());
        let ch = u.clone().cosh();
        let w = Float::with_val(prec, &half_pi * tau.cosh()) / Float::with_val(prec, ch.square_ref()) * &half_t;
        if w.is_zero() {
            continue;
        }
        let s = Float::with_val(prec, &half_t * (u.tanh() + 1u32));
        let (a, b) = f(&s);
        re += Float::with_val(prec, &a * &w);
        im += Float::with_val(prec, &b * &w);
    }
    (re * &h, im * &h)
}

fn oracle_entry(kind: Kind, lj: f64, lk: f64, t: f64, prec: u32, level: u32) -> (Float, Float) {
    tanh_sinh(
        |s| match kind {
            Kind::Parabolic => {
                let e = Float::with_val(prec, -(Float::with_val(prec, lj + lk) * s)).exp();
                (e, Float::new(prec))
            }
            Kind::Dispersive => {
                let th = Float::with_val(prec, Float::with_val(prec, lj - lk) * s);
                let (sn, cs) = th.sin_cos(Float::new(prec));
                (cs, sn)
            }
        },
        t,
        prec,
        level,
    )
}

fn check_entries(sys: &SpectralSystem, t: f64, digits: u32) {
    let ctx = PrecisionContext::new(digits).unwrap();
    let prec = ctx.bits();
    let gs = gram_matrix(sys, t, ctx).unwrap();
    let tol = Float::with_val(prec, 10f64).pow(-(digits as i32 - 5));
    let l = sys.lambdas();
    for j in 0..sys.len() {
        for k in 0..sys.len() {
            let (re, im) = oracle_entry(sys.kind(), l[j], l[k], t, prec, 8);
            let g = gs.matrix().get(j, k);
            let err = Float::with_val(prec, &g.re - &re).abs() + Float::with_val(prec, &g.im - &im).abs();
            assert!(err < tol, "entry ({j},{k}) off by {}", err.to_f64());
        }
    }
}

#[test]
fn parabolic_entries_match_quadrature() {
    let heat = make_power_law_spectrum(2.0, 1.0, 6, 0.0, 0).unwrap();
    check_entries(&heat, 0.5, 60);
}

#[test]
fn dispersive_entries_match_quadrature() {
    let kdv = periodic_kdv_spectrum(2.0 * PI, 3).unwrap();
    check_entries(&kdv, 0.5, 30);
}

#[test]
fn quadrature_oracle_converges() {
    let prec = PrecisionContext::new(60).unwrap().bits();
    let (a, _) = oracle_entry(Kind::Parabolic, 1.0, 4.0, 0.5, prec, 7);
    let (b, _) = oracle_entry(Kind::Parabolic, 1.0, 4.0, 0.5, prec, 8);
    let exact = (1.0 - (-2.5f64).exp()) / 5.0;
    assert!((Float::with_val(prec, &a - &b).abs().to_f64()) < 1e-55);
    assert!((b.to_f64() - exact).abs() < 1e-16);
}

#[test]
fn two_mode_full_period_distance() {
    let pair = SpectralSystem::new(
        Kind::Dispersive,
        vec![-1, 1],
        vec![-1.0, 1.0],
        vec![num_complex::Complex64::new(1.0, 0.0); 2],
        3.0,
        1.0,
    )
    .unwrap();
    let gs = gram_matrix(&pair, 2.0 * PI, PrecisionContext::new(30).unwrap()).unwrap();
    let d = distance_dm(&gs, 1).unwrap();
    assert!((d * d - 2.0 * PI).abs() < 1e-13);
}
