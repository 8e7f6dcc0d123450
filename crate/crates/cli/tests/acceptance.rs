//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p fastctl --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use moment_control::gram::{
    cost_sweep, distance_dm, distance_dm_projection, dm_scaling_check, fit_against_power, gram_matrix,
    lower_bound_cost, minimal_norm_control, truncated_cost, worst_case_direction,
};
use moment_control::lemma::{
    default_alpha_grid, default_x_grid, integral_i, integral_w, integral_w_closed_form, verify_inequality_suite,
};
use moment_control::multiplier::{c_nu, c_nu_bracket, h_beta, link_beta_to_nu};
use moment_control::precision::PrecisionContext;
use moment_control::simulation::{forward_simulate, random_unit_state, residual_norm, ModalState};
use moment_control::spectral::{make_power_law_spectrum, periodic_kdv_spectrum, Kind, SpectralSystem};
use moment_control::synthesis::{
    beta_for, biorthogonality_matrix, max_identity_residual, synthesize_control, synthesize_family, SynthesisConfig,
};
use num_complex::Complex64;

fn verdict(id: &str, pass: bool, detail: String) {
    println!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn heat(n: usize) -> SpectralSystem {
    make_power_law_spectrum(2.0, 1.0, n, 0.0, 0).unwrap()
}

fn kdv(n: usize) -> SpectralSystem {
    periodic_kdv_spectrum(2.0 * PI, n).unwrap()
}

fn ctx(digits: u32) -> PrecisionContext {
    PrecisionContext::new(digits).unwrap()
}

#[test]
fn c01_hypergeometric_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for a in [2.0, 2.5, 3.0, 4.0, 8.0] {
        let want = PI / (PI / a).sin();
        worst = worst.max((integral_i(a).unwrap() - want).abs() / want);
    }
    let el = start.elapsed();
    verdict(
        "C1",
        worst <= 1e-10 && el < Duration::from_secs(1),
        format!("max relative error {worst:.2e} (tol 1e-10), {el:?} (limit 1 s)"),
    );
}

#[test]
fn c02_w_closed_form() {
    let start = Instant::now();
    let grid = [(2.0, 0.1), (2.0, 10.0), (3.0, 0.1), (3.0, 10.0), (8.0, 0.1), (8.0, 10.0)];
    let worst = grid
        .iter()
        .map(|&(a, x)| (integral_w(a, x).unwrap() - integral_w_closed_form(a, x)).abs())
        .fold(0.0, f64::max);
    let el = start.elapsed();
    verdict(
        "C2",
        worst <= 1e-8 && el < Duration::from_secs(1),
        format!("max error {worst:.2e} on 6 points (tol 1e-8), {el:?} (limit 1 s)"),
    );
}

#[test]
fn c03_inequality_suite() {
    let start = Instant::now();
    let reports = verify_inequality_suite(&default_alpha_grid(), &default_x_grid());
    let worst = reports.iter().map(|r| r.max_slack).fold(f64::NEG_INFINITY, f64::max);
    let el = start.elapsed();
    verdict(
        "C3",
        reports.len() == 5 && worst <= 1e-9 && el < Duration::from_secs(60),
        format!("{} inequalities, max slack {worst:.2e} (tol 1e-9), {el:?} (limit 60 s)", reports.len()),
    );
}

#[test]
fn c04_dispersive_biorthogonality() {
    let start = Instant::now();
    let sys = kdv(8);
    let fam = synthesize_family(&sys, 1.0, &SynthesisConfig::default()).unwrap();
    let r = max_identity_residual(&biorthogonality_matrix(&fam, &sys));
    let el = start.elapsed();
    verdict(
        "C4",
        r <= 1e-6 && el < Duration::from_secs(300),
        format!("periodic KdV N=8 T=1: ||M - I||_max = {r:.2e} (tol 1e-6), {el:?} (limit 5 min)"),
    );
}

#[test]
fn c05_closed_loop_null_control() {
    let t = 0.5;
    let cases = [(heat(8), 60u32), (kdv(8), 30u32)];
    let mut gram_worst: f64 = 0.0;
    let mut bio_worst: f64 = 0.0;
    for (sys, digits) in &cases {
        let gs = gram_matrix(sys, t, ctx(*digits)).unwrap();
        let family = synthesize_family(sys, t, &SynthesisConfig::default()).unwrap();
        for seed in 0..5 {
            let y0 = random_unit_state(sys.len(), seed, sys.kind() == Kind::Parabolic);
            let (u, _) = minimal_norm_control(&gs, &y0, 40001).unwrap();
            let y = forward_simulate(sys, &ModalState::new(y0.clone()), &u, t).unwrap();
            gram_worst = gram_worst.max(residual_norm(&y));
            let u = moment_control::synthesis::control_from_family(&family, sys, &y0).unwrap();
            let y = forward_simulate(sys, &ModalState::new(y0), &u, t).unwrap();
            bio_worst = bio_worst.max(residual_norm(&y));
        }
    }
    verdict(
        "C5",
        gram_worst <= 1e-8 && bio_worst <= 1e-4,
        format!("5 seeds, heat N=8 (60 digits) and KdV N=8: Gram {gram_worst:.2e} (tol 1e-8), biorthogonal {bio_worst:.2e} (tol 1e-4)"),
    );
}

#[test]
fn c06_optimality_sandwich() {
    let runs = [(heat(6), 0.5), (heat(6), 0.25), (kdv(3), 0.5), (kdv(3), 1.0)];
    let mut fails = Vec::new();
    for (sys, t) in &runs {
        let gs = gram_matrix(sys, *t, ctx(64)).unwrap();
        let lower = lower_bound_cost(&gs).unwrap();
        let (cost, dir) = worst_case_direction(&gs).unwrap();
        let (_, min_norm) = minimal_norm_control(&gs, &dir, 1001).unwrap();
        let bio = synthesize_control(sys, &dir, *t, &SynthesisConfig::default()).unwrap().l2;
        let ok = lower <= cost
            && (min_norm - cost).abs() <= 1e-10 * cost
            && cost <= bio * (1.0 + 1e-10)
            && truncated_cost(&gs).unwrap() == cost;
        println!("  {:?} T={t}: lower {lower:.6e} <= cost {cost:.6e} <= biorthogonal {bio:.6e}", sys.kind());
        if !ok {
            fails.push(format!("{:?} T={t}", sys.kind()));
        }
    }
    verdict("C6", fails.is_empty(), format!("{} runs, failing: {fails:?}", runs.len()));
}

const BLOW_UP_GRID: [f64; 6] = [0.5, 0.35, 0.25, 0.18, 0.12, 0.08];

fn blow_up(id: &str, sys: &SpectralSystem) {
    let start = Instant::now();
    let alpha = sys.alpha();
    let pts = cost_sweep(sys, &BLOW_UP_GRID, ctx(64)).unwrap();
    let ts: Vec<f64> = pts.iter().map(|p| p.t).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, ys) in [
        ("cost", pts.iter().map(|p| p.cost).collect::<Vec<_>>()),
        ("lower", pts.iter().map(|p| p.lower_bound).collect()),
    ] {
        let main = fit_against_power(&ts, &ys, 1.0 / (alpha - 1.0));
        let alt1 = fit_against_power(&ts, &ys, 1.0 / alpha);
        let alt2 = fit_against_power(&ts, &ys, 1.0 / (alpha - 1.5));
        pass &= main.r_squared >= 0.99
            && main.slope > 0.0
            && main.r_squared > alt1.r_squared
            && main.r_squared > alt2.r_squared;
        detail.push(format!(
            "{name}: R2 {:.4} slope {:.3} vs R2 {:.4} (1/alpha), {:.4} (1/(alpha-1.5))",
            main.r_squared, main.slope, alt1.r_squared, alt2.r_squared
        ));
    }
    let el = start.elapsed();
    pass &= el < Duration::from_secs(600);
    verdict(id, pass, format!("alpha={alpha}: {}; {el:?}", detail.join("; ")));
}

/// Expected to fail: see the README section on the blow-up exponent at alpha = 2.
#[test]
fn c07_blow_up_exponent_alpha_2() {
    blow_up("C7[alpha=2]", &heat(6));
}

#[test]
fn c07_blow_up_exponent_alpha_3() {
    blow_up("C7[alpha=3]", &kdv(6));
}

#[test]
fn c08_distance_dual_routes() {
    let mut worst: f64 = 0.0;
    for sys in [heat(6), kdv(3)] {
        let gs = gram_matrix(&sys, 0.5, ctx(60)).unwrap();
        for &m in sys.indices() {
            let a = distance_dm(&gs, m).unwrap();
            let b = distance_dm_projection(&gs, m).unwrap();
            worst = worst.max((a - b).abs() / a);
        }
    }
    verdict("C8", worst <= 1e-8, format!("N=6 both kinds, 60 digits: max relative gap {worst:.2e} (tol 1e-8)"));
}

#[test]
fn c09_distance_envelope() {
    let rep = dm_scaling_check(&heat(8), &BLOW_UP_GRID, 1, ctx(64)).unwrap();
    for p in &rep.points {
        println!("  T={}: d_1 {:.4e} envelope {:.4e}", p.t, p.dm, p.envelope);
    }
    verdict(
        "C9",
        rep.violations == 0,
        format!("alpha=2 N=8, C={:.4} a={:.2}: {} violations", rep.c, rep.a, rep.violations),
    );
}

#[test]
fn c10_multiplier_properties() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (alpha, beta) in [(2.0, beta_for(Kind::Parabolic, 2.0, 0.5, 0.05)), (3.0, beta_for(Kind::Dispersive, 3.0, 1.0, 0.05))] {
        let cfg = link_beta_to_nu(alpha, 0.05, beta).unwrap();
        let h0 = (h_beta(&cfg, Complex64::new(0.0, 0.0)).unwrap() - 1.0).norm();
        let mut ratio: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let z = Complex64::new(-30.0 + 6.5 * i as f64, -20.0 + 4.4 * j as f64);
                ratio = ratio.max(h_beta(&cfg, z).unwrap().norm() / (beta * z.im.abs()).exp());
            }
        }
        pass &= h0 <= 1e-12 && ratio <= 1.0 + 1e-9;
        detail.push(format!("alpha={alpha} beta={beta:.4}: |H(0)-1| {h0:.1e}, max |H|/e^(beta|Im z|) {ratio:.6}"));
    }
    for nu in [1.0, 4.0, 16.0, 64.0] {
        let c = c_nu(nu, 64).unwrap();
        let (lo, hi) = c_nu_bracket(nu);
        pass &= lo <= c && c <= hi;
        detail.push(format!("C_{nu} in [{:.3}, {:.3}] x e^nu: {:.3}", lo / nu.exp(), hi / nu.exp(), c / nu.exp()));
    }
    verdict("C10", pass, detail.join("; "));
}

#[test]
fn c11_cost_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fastctl"))
            .args(["cost-sweep", "--preset", "power-law", "--modes", "5", "--seed", "7", "--t-grid", "0.5,0.3,0.2"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let mut body = String::new();
        for f in ["cost_sweep.csv", "cost_sweep_fit.csv"] {
            let text = std::fs::read_to_string(out.join(f)).unwrap();
            body.push_str(&fastctl::report::body_without_timestamp(&text).replace(&out.display().to_string(), "<out>"));
        }
        bodies.push(body);
    }
    verdict(
        "C11",
        bodies[0] == bodies[1] && !bodies[0].is_empty(),
        format!("two seeded cost-sweep runs, {} bytes of CSV body each", bodies[0].len()),
    );
}
