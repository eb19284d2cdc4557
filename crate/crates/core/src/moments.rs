//! Closed first- and second-moment hierarchies of the collected charge,
//! propagated alongside the reduced qubit state.
//!
//! Multiplying the ladder equations by `n` (resp. `n²`) and summing closes
//! onto six extra fields. With `n̄_qq' = Σ_n n σ_qq'^(n)` and
//! `n²̄_qq' = Σ_n n² σ_qq'^(n)`:
//!
//! ```text
//! dn̄11/dt  = D1 σ11 + iΩ (n̄12 - n̄21)
//! dn̄22/dt  = D2 σ22 - iΩ (n̄12 - n̄21)
//! dn̄12/dt  = iε n̄12 + iΩ (n̄11 - n̄22) - (Γ_d/2) n̄12 + sqrt(D1 D2) σ12
//! dn²̄11/dt = 2 D1 n̄11 + D1 σ11 + iΩ (n²̄12 - n²̄21)
//! dn²̄22/dt = 2 D2 n̄22 + D2 σ22 - iΩ (n²̄12 - n²̄21)
//! dn²̄12/dt = iε n²̄12 + iΩ (n²̄11 - n²̄22) - (Γ_d/2) n²̄12
//!             + sqrt(D1 D2) (2 n̄12 + σ12)
//! ```

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::ode::{integrate, nominal_step, IntegratorOpts, OdeSystem};
use crate::params::{QubitState, SystemParams};
use crate::scalar::{lit, Scalar};

/// Reduced state plus charge-weighted matrix elements at one instant.
#[derive(Debug, Clone, Copy)]
pub struct MomentState<T> {
    /// Reduced qubit state.
    pub q: QubitState<T>,
    /// `n`-weighted populations.
    pub m1_11: T,
    pub m1_22: T,
    /// `n`-weighted coherence.
    pub m1_12: Complex<T>,
    /// `n²`-weighted populations.
    pub m2_11: T,
    pub m2_22: T,
    /// `n²`-weighted coherence.
    pub m2_12: Complex<T>,
}

/// Moment states sampled on a time grid.
#[derive(Debug, Clone)]
pub struct MomentTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<MomentState<T>>,
}

impl<T: Scalar> MomentTrajectory<T> {
    /// Mean collected charge at output index `k`.
    pub fn mean(&self, k: usize) -> T {
        self.states[k].m1_11 + self.states[k].m1_22
    }
}

struct MomentSystem<T> {
    omega: T,
    epsilon: T,
    d1: T,
    d2: T,
    half_gamma: T,
    feed: T,
}

// Layout: [s11, Re s12, Im s12,
//          m1_11, m1_22, Re m1_12, Im m1_12,
//          m2_11, m2_22, Re m2_12, Im m2_12]
impl<T: Scalar> OdeSystem<T> for MomentSystem<T> {
    fn dim(&self) -> usize {
        11
    }

    fn deriv(&self, y: &[T], dy: &mut [T]) {
        let two = lit::<T>(2.0);
        let (om, eps) = (self.omega, self.epsilon);
        let hg = self.half_gamma;

        let (s11, sr, si) = (y[0], y[1], y[2]);
        let s22 = T::one() - s11;
        dy[0] = -two * om * si;
        dy[1] = -eps * si - hg * sr;
        dy[2] = eps * sr + om * (two * s11 - T::one()) - hg * si;

        let (a11, a22, ar, ai) = (y[3], y[4], y[5], y[6]);
        dy[3] = self.d1 * s11 - two * om * ai;
        dy[4] = self.d2 * s22 + two * om * ai;
        dy[5] = -eps * ai - hg * ar + self.feed * sr;
        dy[6] = eps * ar + om * (a11 - a22) - hg * ai + self.feed * si;

        let (b11, b22, br, bi) = (y[7], y[8], y[9], y[10]);
        dy[7] = two * self.d1 * a11 + self.d1 * s11 - two * om * bi;
        dy[8] = two * self.d2 * a22 + self.d2 * s22 + two * om * bi;
        dy[9] = -eps * bi - hg * br + self.feed * (two * ar + sr);
        dy[10] = eps * br + om * (b11 - b22) - hg * bi + self.feed * (two * ai + si);
    }
}

/// Propagates the coupled reduced-state + moment system with all charge at
/// `n = 0` initially (every moment field starts at exactly zero).
pub fn evolve_moments<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
) -> Result<MomentTrajectory<T>> {
    evolve_moments_with(p, q0, t_grid, &IntegratorOpts::default())
}

/// [`evolve_moments`] with explicit integrator options.
pub fn evolve_moments_with<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
    opts: &IntegratorOpts<T>,
) -> Result<MomentTrajectory<T>> {
    let r = p.derived();
    let mut sys = MomentSystem {
        omega: p.omega(),
        epsilon: p.epsilon(),
        d1: p.d1(),
        d2: p.d2(),
        half_gamma: r.gamma_d / lit::<T>(2.0),
        feed: (p.d1() * p.d2()).sqrt(),
    };
    let mut y0 = vec![T::zero(); 11];
    y0[0] = q0.sigma11();
    y0[1] = q0.sigma12().re;
    y0[2] = q0.sigma12().im;

    let mut traj = MomentTrajectory {
        times: Vec::with_capacity(t_grid.len()),
        states: Vec::with_capacity(t_grid.len()),
    };
    integrate(&mut sys, y0, t_grid, nominal_step(p), opts, |_, t, y| {
        traj.times.push(t);
        traj.states.push(MomentState {
            q: QubitState::from_raw(y[0], Complex::new(y[1], y[2])),
            m1_11: y[3],
            m1_22: y[4],
            m1_12: Complex::new(y[5], y[6]),
            m2_11: y[7],
            m2_22: y[8],
            m2_12: Complex::new(y[9], y[10]),
        });
        Ok(())
    })?;
    Ok(traj)
}

/// Slack tolerated on variance positivity before the integrator is declared
/// inconsistent.
pub const VARIANCE_TOL: f64 = 1e-9;

/// Mean and variance of the collected charge: `n̄ = n̄11 + n̄22`,
/// `var = n²̄11 + n²̄22 - n̄²`.
///
/// A variance below `-1e-9` is reported as [`Error::NegativeVariance`];
/// shallower round-off negatives are clamped to zero.
pub fn mean_and_variance<T: Scalar>(m: &MomentState<T>) -> Result<(T, T)> {
    let mean = m.m1_11 + m.m1_22;
    let second = m.m2_11 + m.m2_22;
    let var = second - mean * mean;
    if var < lit::<T>(-VARIANCE_TOL) {
        return Err(Error::NegativeVariance {
            var: var.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((mean, var.max(T::zero())))
}

/// Shot and asymptotic current-estimate dispersions for one window.
#[derive(Debug, Clone, Copy)]
pub struct Dispersion<T> {
    /// `sqrt(var(dt)) / dt` from the integrated moment hierarchy.
    pub exact: T,
    /// Small-window form `sqrt(I(0) / dt)` with `I(0) = D2 + ΔD σ11(0)`.
    pub asymptotic: T,
}

/// Current-estimate dispersion over a measurement window `dt > 0`, with the
/// charge reset to `n = 0` at the window start and the qubit in `q0`.
pub fn current_dispersion<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    dt: T,
) -> Result<Dispersion<T>> {
    current_dispersion_with(p, q0, dt, &IntegratorOpts::default())
}

/// [`current_dispersion`] with explicit integrator options.
pub fn current_dispersion_with<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    dt: T,
    opts: &IntegratorOpts<T>,
) -> Result<Dispersion<T>> {
    if dt <= T::zero() {
        return Err(Error::NonpositiveWindow {
            dt: dt.to_f64().unwrap_or(f64::NAN),
        });
    }
    let traj = evolve_moments_with(p, q0, &[T::zero(), dt], opts)?;
    let (_, var) = mean_and_variance(&traj.states[1])?;
    let i0 = p.d2() + p.derived().delta_d * q0.sigma11();
    Ok(Dispersion {
        exact: var.sqrt() / dt,
        asymptotic: (i0 / dt).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn poisson_moments() {
        // static qubit in dot 1: mean = var = D1 t
        let p = SystemParams::new(0.0, 0.0, 3.0, 1.0).unwrap();
        let traj = evolve_moments(&p, &QubitState::excited(), &grid(2.0, 9)).unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let (mean, var) = mean_and_variance(&traj.states[k]).unwrap();
            assert_abs_diff_eq!(mean, 3.0 * t, epsilon = 1e-9);
            assert_abs_diff_eq!(var, 3.0 * t, epsilon = 1e-8);
        }
    }

    #[test]
    fn moments_start_at_zero() {
        let p = SystemParams::new(1.0, 0.2, 9.0, 4.0).unwrap();
        let traj = evolve_moments(&p, &QubitState::excited(), &[0.0, 1.0]).unwrap();
        let m = &traj.states[0];
        assert_eq!(m.m1_11, 0.0);
        assert_eq!(m.m1_22, 0.0);
        assert_eq!(m.m1_12, Complex::new(0.0, 0.0));
        assert_eq!(m.m2_11, 0.0);
        assert_eq!(m.m2_22, 0.0);
        assert_eq!(m.m2_12, Complex::new(0.0, 0.0));
        let (mean, var) = mean_and_variance(m).unwrap();
        assert_eq!((mean, var), (0.0, 0.0));
    }

    #[test]
    fn variance_nondecreasing_for_poisson_and_nonnegative_generally() {
        let p = SystemParams::new(0.0, 0.0, 5.0, 2.0).unwrap();
        let traj = evolve_moments(&p, &QubitState::excited(), &grid(3.0, 31)).unwrap();
        let mut prev = -1.0;
        for m in &traj.states {
            let (_, var) = mean_and_variance(m).unwrap();
            assert!(var >= prev);
            prev = var;
        }

        let p = SystemParams::new(1.4, 0.6, 17.0, 9.0).unwrap();
        let traj = evolve_moments(&p, &QubitState::excited(), &grid(4.0, 41)).unwrap();
        for m in &traj.states {
            let (_, var) = mean_and_variance(m).unwrap();
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn negative_variance_is_reported() {
        let m = MomentState {
            q: QubitState::excited(),
            m1_11: 1.0,
            m1_22: 0.0,
            m1_12: Complex::new(0.0, 0.0),
            m2_11: 0.5,
            m2_22: 0.0,
            m2_12: Complex::new(0.0, 0.0),
        };
        assert!(matches!(
            mean_and_variance(&m),
            Err(Error::NegativeVariance { .. })
        ));
    }

    #[test]
    fn mean_rate_equals_average_current() {
        // d n̄/dt = D2 + ΔD σ11(t): the Ω terms cancel in the population sum
        let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
        let h = 1e-3;
        let times: Vec<f64> = (0..801).map(|k| k as f64 * h).collect();
        let traj = evolve_moments(&p, &QubitState::excited(), &times).unwrap();
        for k in (1..times.len() - 1).step_by(37) {
            let slope = (traj.mean(k + 1) - traj.mean(k - 1)) / (2.0 * h);
            let current = p.d2() + p.derived().delta_d * traj.states[k].q.sigma11();
            assert_relative_eq!(slope, current, max_relative = 1e-6);
        }
    }

    #[test]
    fn dispersion_poisson_case() {
        let p = SystemParams::new(0.0, 0.0, 7.0, 2.0).unwrap();
        for dt in [0.05, 0.3, 1.0, 4.0] {
            let d = current_dispersion(&p, &QubitState::excited(), dt).unwrap();
            assert_relative_eq!(d.exact * d.exact, 7.0 / dt, max_relative = 1e-8);
            assert_relative_eq!(d.exact, d.asymptotic, max_relative = 1e-8);
        }
    }

    #[test]
    fn dispersion_small_window_matches_asymptotic() {
        let p = SystemParams::<f64>::new(1.0, 0.0, 26.0, 24.0).unwrap();
        let dt = 1e-3 / 26.0;
        let d = current_dispersion(&p, &QubitState::excited(), dt).unwrap();
        assert!((d.exact - d.asymptotic).abs() / d.asymptotic <= 0.01);
    }

    #[test]
    fn dispersion_scaling_converges_monotonically() {
        let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
        let target = 26.0f64.sqrt();
        let mut devs = Vec::new();
        for exp in [-2, -3, -4] {
            let dt = 10f64.powi(exp) / 26.0;
            let d = current_dispersion(&p, &QubitState::excited(), dt).unwrap();
            devs.push((d.exact * dt.sqrt() - target).abs() / target);
        }
        assert!(devs[1] <= 0.01, "1% by dt = 1e-3/D1, got {devs:?}");
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "monotone: {devs:?}");
    }

    #[test]
    fn dispersion_rejects_degenerate_window() {
        let p = SystemParams::new(1.0, 0.0, 26.0, 24.0).unwrap();
        assert!(matches!(
            current_dispersion(&p, &QubitState::excited(), 0.0),
            Err(Error::NonpositiveWindow { .. })
        ));
    }
}
