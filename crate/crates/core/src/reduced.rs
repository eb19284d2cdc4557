//! Reduced dynamics of the monitored qubit: the two-level master equation
//! obtained from the number-resolved hierarchy by tracing over the collector
//! charge, plus the closed-form solutions for aligned levels and for the
//! strong-measurement (Zeno) regime.
//!
//! Equations of motion (ħ = 1, `σ21 = conj(σ12)`, `σ22 = 1 - σ11`):
//!
//! ```text
//! dσ11/dt = i Ω (σ12 - σ21)
//! dσ12/dt = i ε σ12 + i Ω (2 σ11 - 1) - (Γ_d / 2) σ12
//! ```

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::ode::{integrate, nominal_step, IntegratorOpts, OdeSystem};
use crate::params::{rabi_frequency, QubitState, RabiMode, SystemParams};
use crate::scalar::{lit, Scalar};

/// Reduced qubit state sampled on a time grid.
#[derive(Debug, Clone)]
pub struct QubitTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<QubitState<T>>,
}

impl<T: Scalar> QubitTrajectory<T> {
    /// Dot-1 occupation at output index `k`.
    pub fn sigma11(&self, k: usize) -> T {
        self.states[k].sigma11()
    }
}

struct ReducedSystem<T> {
    omega: T,
    epsilon: T,
    half_gamma: T,
}

impl<T: Scalar> ReducedSystem<T> {
    fn new(p: &SystemParams<T>) -> Self {
        Self {
            omega: p.omega(),
            epsilon: p.epsilon(),
            half_gamma: p.derived().gamma_d / lit::<T>(2.0),
        }
    }
}

// State layout: [sigma11, Re sigma12, Im sigma12]
impl<T: Scalar> OdeSystem<T> for ReducedSystem<T> {
    fn dim(&self) -> usize {
        3
    }

    fn deriv(&self, y: &[T], dy: &mut [T]) {
        let two = lit::<T>(2.0);
        let (s11, re, im) = (y[0], y[1], y[2]);
        dy[0] = -two * self.omega * im;
        dy[1] = -self.epsilon * im - self.half_gamma * re;
        dy[2] = self.epsilon * re + self.omega * (two * s11 - T::one()) - self.half_gamma * im;
    }
}

/// Propagates the reduced qubit state across `t_grid` (which must start at
/// zero and increase strictly).
pub fn evolve_reduced<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
) -> Result<QubitTrajectory<T>> {
    evolve_reduced_with(p, q0, t_grid, &IntegratorOpts::default())
}

/// [`evolve_reduced`] with explicit integrator options.
pub fn evolve_reduced_with<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
    opts: &IntegratorOpts<T>,
) -> Result<QubitTrajectory<T>> {
    let mut sys = ReducedSystem::new(p);
    let y0 = vec![q0.sigma11(), q0.sigma12().re, q0.sigma12().im];
    let mut traj = QubitTrajectory {
        times: Vec::with_capacity(t_grid.len()),
        states: Vec::with_capacity(t_grid.len()),
    };
    integrate(&mut sys, y0, t_grid, nominal_step(p), opts, |_, t, y| {
        traj.times.push(t);
        traj.states
            .push(QubitState::from_raw(y[0], Complex::new(y[1], y[2])));
        Ok(())
    })?;
    Ok(traj)
}

/// Closed-form dot-1 occupation for aligned levels (`ε = 0`) starting from
/// `σ11(0) = 1`, `σ12(0) = 0`:
///
/// ```text
/// σ11(t) = (1 + e^{-Γ_d t / 4} [cos ωt + η sin ωt]) / 2,   η = Γ_d / 4ω
/// ```
///
/// Past `Γ_d = 8Ω` the root turns imaginary and cos/sin continue as
/// cosh/sinh with `κ = 2Ω sqrt((Γ_d/8Ω)^2 - 1)`.
pub fn sigma11_aligned_closed<T: Scalar>(p: &SystemParams<T>, t: T) -> Result<T> {
    if p.epsilon() != T::zero() {
        return Err(Error::NonzeroDetuning {
            epsilon: p.epsilon().to_f64().unwrap_or(f64::NAN),
        });
    }
    let gamma = p.derived().gamma_d;
    let four = lit::<T>(4.0);
    let half = lit::<T>(0.5);
    let envelope = (-gamma * t / four).exp();

    let x = if p.omega() == T::zero() {
        // no hopping: both roots collapse onto pure coherence decay of x = 1
        envelope * T::zero() + T::one()
    } else {
        match rabi_frequency(p)? {
            RabiMode::Underdamped { omega } => {
                let eta = gamma / (four * omega);
                envelope * ((omega * t).cos() + eta * (omega * t).sin())
            }
            RabiMode::Critical => envelope * (T::one() + gamma * t / four),
            RabiMode::Overdamped { kappa } => {
                let eta = gamma / (four * kappa);
                envelope * ((kappa * t).cosh() + eta * (kappa * t).sinh())
            }
        }
    };
    Ok(half * (T::one() + x))
}

/// Strong-measurement localization law `σ11(t) = (1 + e^{-8Ω²t/Γ_d}) / 2`,
/// valid for `t >> 1/Γ_d`. Requires `Γ_d > 0`.
pub fn zeno_sigma11<T: Scalar>(p: &SystemParams<T>, t: T) -> T {
    if t == T::zero() {
        return T::one();
    }
    let gamma = p.derived().gamma_d;
    let rate = lit::<T>(8.0) * p.omega() * p.omega() / gamma;
    lit::<T>(0.5) * (T::one() + (-rate * t).exp())
}

/// Detector average current `I = D2 + ΔD σ11` for the given qubit state.
pub fn average_current<T: Scalar>(p: &SystemParams<T>, q: &QubitState<T>) -> T {
    p.d2() + p.derived().delta_d * q.sigma11()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn static_qubit_stays_put() {
        let p = SystemParams::new(0.0, 0.0, 26.0, 24.0).unwrap();
        let traj = evolve_reduced(&p, &QubitState::excited(), &grid(5.0, 11)).unwrap();
        for q in &traj.states {
            assert_abs_diff_eq!(q.sigma11(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn undamped_rabi_oscillation() {
        // d1 = d2 gives gamma_d = 0: sigma11(t) = cos^2(Omega t)
        let p = SystemParams::new(1.0, 0.0, 10.0, 10.0).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let g = [0.0, 0.3, half_pi, 1.9, 2.6];
        let traj = evolve_reduced(&p, &QubitState::excited(), &g).unwrap();
        for (k, &t) in g.iter().enumerate() {
            assert_abs_diff_eq!(traj.sigma11(k), t.cos().powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_form_reference_point() {
        // Omega = 1, Gamma_d = 0.04, t = pi / omega
        let p = SystemParams::from_decoherence(1.0, 0.0, 0.04, 25.0).unwrap();
        let w = 2.0 * (1.0 - (0.04f64 / 8.0).powi(2)).sqrt();
        let t = std::f64::consts::PI / w;
        let s = sigma11_aligned_closed(&p, t).unwrap();
        assert_relative_eq!(s, 0.0077927149706391432, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_boundaries() {
        let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
        assert_eq!(sigma11_aligned_closed(&p, 0.0).unwrap(), 1.0);
        let gamma = p.derived().gamma_d;
        let late = sigma11_aligned_closed(&p, 1e4 / gamma).unwrap();
        assert_abs_diff_eq!(late, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn closed_form_rejects_detuning() {
        let p = SystemParams::new(1.0, 0.5, 26.0, 24.0).unwrap();
        assert!(matches!(
            sigma11_aligned_closed(&p, 1.0),
            Err(Error::NonzeroDetuning { .. })
        ));
    }

    #[test]
    fn ode_matches_closed_form_at_reference_point() {
        let p = SystemParams::from_decoherence(1.0, 0.0, 0.04, 25.0).unwrap();
        let w = 2.0 * (1.0 - (0.04f64 / 8.0).powi(2)).sqrt();
        let t = std::f64::consts::PI / w;
        let traj = evolve_reduced(&p, &QubitState::excited(), &[0.0, t]).unwrap();
        assert_abs_diff_eq!(traj.sigma11(1), 0.0077927149706391432, epsilon = 1e-8);
    }

    #[test]
    fn zeno_formula_values() {
        let p = SystemParams::from_decoherence(0.1, 0.0, 8.0, 25.0).unwrap();
        assert_eq!(zeno_sigma11(&p, 0.0), 1.0);
        // half-decay of the exponential
        let t_half = 8.0 * 2f64.ln() / (8.0 * 0.01);
        assert_relative_eq!(zeno_sigma11(&p, t_half), 0.75, max_relative = 1e-12);
        assert_relative_eq!(
            zeno_sigma11(&p, 100.0),
            0.68393972058572116,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zeno_matches_ode_at_reference_point() {
        let p = SystemParams::<f64>::from_decoherence(0.1, 0.0, 8.0, 25.0).unwrap();
        let traj = evolve_reduced(&p, &QubitState::excited(), &[0.0, 100.0]).unwrap();
        let ode = traj.sigma11(1);
        let zeno = zeno_sigma11(&p, 100.0);
        assert!((ode - zeno).abs() / ode < 0.05, "ode {ode} zeno {zeno}");
    }

    #[test]
    fn current_endpoints() {
        let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
        assert_eq!(average_current(&p, &QubitState::excited()), 26.0);
        let ground = QubitState::new(0.0, Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(average_current(&p, &ground), 24.0);
        let mixed = QubitState::new(0.5, Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(average_current(&p, &mixed), 25.0);
    }

    #[test]
    fn trajectory_stays_physical() {
        let p = SystemParams::new(1.3, 0.7, 9.0, 4.0).unwrap();
        let q0 = QubitState::new(0.6, Complex::new(0.2, -0.3)).unwrap();
        let traj = evolve_reduced(&p, &q0, &grid(8.0, 81)).unwrap();
        for q in &traj.states {
            let s11 = q.sigma11();
            assert!((-1e-9..=1.0 + 1e-9).contains(&s11));
            assert!(q.sigma12().norm_sqr() <= s11 * (1.0 - s11) + 1e-9);
        }
    }

    #[test]
    fn populations_conserve_trace_rate() {
        // the two-population form of the master equation has opposite
        // hopping terms, so d(sigma11 + sigma22)/dt = 0 identically
        let p = SystemParams::new(1.0, 0.3, 9.0, 4.0).unwrap();
        let sys = ReducedSystem::new(&p);
        let mut dy = [0.0; 3];
        sys.deriv(&[0.7, 0.1, -0.2], &mut dy);
        let d_s11 = dy[0];
        let d_s22 = 2.0 * p.omega() * -0.2; // -iΩ(σ12-σ21) term
        assert_abs_diff_eq!(d_s11 + d_s22, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn f32_smoke() {
        let p = SystemParams::<f32>::new(1.0, 0.0, 10.0, 10.0).unwrap();
        let g: Vec<f32> = vec![0.0, 0.5, 1.0];
        let traj = evolve_reduced(&p, &QubitState::excited(), &g).unwrap();
        assert!((traj.sigma11(2) - 1.0f32.cos().powi(2)).abs() < 1e-4);
    }
}
