//! Power-law structure of the numerically located optimum against the
//! closed-form limits.

use dotprobe::*;

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[test]
fn weak_regime_exponent_recovery() {
    // dt* ~ Gamma_d^{-1/5} at fixed Omega and D
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for e in [-4.0f64, -3.5, -3.0, -2.5, -2.0] {
        let gamma = 2.0 * 10f64.powf(e);
        let p = SystemParams::from_decoherence(1.0, 0.0, gamma, 25.0).unwrap();
        let curve = optimize_measurement_time(
            &p,
            &QubitState::excited(),
            (1e-3, 1e3),
            ErrorMode::Asymptotic,
        )
        .unwrap();
        lx.push(gamma.ln());
        ly.push(curve.argmin_dt.ln());
    }
    let slope = fit_slope(&lx, &ly);
    assert!(
        (slope + 0.20).abs() <= 0.03,
        "weak exponent {slope}, want -0.20 +- 0.03"
    );
}

#[test]
fn zeno_regime_exponent_recovery() {
    // dt* ~ Gamma_d^{+1/3} along the fixed-ratio family d1 = 4 Gamma_d,
    // d2 = Gamma_d (exact decoherence rate by construction)
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for ratio in [40.0f64, 100.0, 316.22776601683796, 1000.0] {
        let gamma = 0.2 * ratio; // Gamma_d = 2 Omega ratio, Omega = 0.1
        let p = SystemParams::new(0.1, 0.0, 4.0 * gamma, gamma).unwrap();
        let curve = optimize_measurement_time(
            &p,
            &QubitState::excited(),
            (1e-3, 1e3),
            ErrorMode::Asymptotic,
        )
        .unwrap();
        lx.push(gamma.ln());
        ly.push(curve.argmin_dt.ln());
    }
    let slope = fit_slope(&lx, &ly);
    assert!(
        (slope - 0.33).abs() <= 0.04,
        "zeno exponent {slope}, want +0.33 +- 0.04"
    );
}

#[test]
fn weak_regime_prefactor_recovery() {
    // min_total_sq / [D Omega (Gamma_d/2 Omega)^{1/5}] near the closed-form 5/2
    for e in [-4.0f64, -3.0, -2.0] {
        let gamma = 2.0 * 10f64.powf(e);
        let p = SystemParams::from_decoherence(1.0, 0.0, gamma, 25.0).unwrap();
        let curve = optimize_measurement_time(
            &p,
            &QubitState::excited(),
            (1e-3, 1e3),
            ErrorMode::Asymptotic,
        )
        .unwrap();
        let r = p.derived();
        let scale = r.d_mean * p.omega() * (r.gamma_d / (2.0 * p.omega())).powf(0.2);
        let pref = curve.min_total_sq / scale;
        assert!((2.1..=2.9).contains(&pref), "weak prefactor {pref}");
    }
}

#[test]
fn zeno_regime_prefactor_recovery() {
    // min_total_sq / [D Omega (2 Omega/Gamma_d)^{1/3}] near the closed-form 6
    for gamma in [8.0f64, 20.0, 64.0] {
        let p = SystemParams::new(0.1, 0.0, 4.0 * gamma, gamma).unwrap();
        let curve = optimize_measurement_time(
            &p,
            &QubitState::excited(),
            (1e-3, 1e3),
            ErrorMode::Asymptotic,
        )
        .unwrap();
        let r = p.derived();
        let scale = r.d_mean * p.omega() * (2.0 * p.omega() / r.gamma_d).powf(1.0 / 3.0);
        let pref = curve.min_total_sq / scale;
        assert!((5.1..=6.9).contains(&pref), "zeno prefactor {pref}");
    }
}

#[test]
fn exact_mode_optimum_stays_in_the_same_basin() {
    // replacing the model shot with the integrated variance moves the
    // optimum only mildly in the weak regime
    let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
    let asym = optimize_measurement_time(
        &p,
        &QubitState::excited(),
        (1e-2, 1e2),
        ErrorMode::Asymptotic,
    )
    .unwrap();
    let exact =
        optimize_measurement_time(&p, &QubitState::excited(), (1e-2, 1e2), ErrorMode::Exact)
            .unwrap();
    let ratio = exact.argmin_dt / asym.argmin_dt;
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}
