//! Physical parameters of the qubit–detector system and the closed algebraic
//! quantities derived from them.
//!
//! Units: ħ = e = 1 throughout, so energies and rates share the same unit and
//! time is its inverse. The detector bias enters only through the two jump
//! rates `d1` and `d2`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Qubit and detector constants.
///
/// `d1` is the electron jump rate through the point contact when dot 1 is
/// occupied, `d2` the (smaller) rate when dot 2 blocks the channel. The
/// convention `d1 >= d2` is enforced at construction so the signal
/// `ΔD = d1 - d2` stays sign-definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    omega: T,
    epsilon: T,
    d1: T,
    d2: T,
}

impl<T: Scalar> SystemParams<T> {
    /// Validates and builds a parameter set.
    ///
    /// Requires `omega >= 0`, `d1 > 0`, `d2 >= 0` and `d1 >= d2`; all values
    /// must be finite.
    pub fn new(omega: T, epsilon: T, d1: T, d2: T) -> Result<Self> {
        for (name, v) in [
            ("omega", omega),
            ("epsilon", epsilon),
            ("d1", d1),
            ("d2", d2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        if omega < T::zero() {
            return Err(Error::InvalidParams(format!(
                "omega must be >= 0, got {omega}"
            )));
        }
        if d1 <= T::zero() {
            return Err(Error::InvalidParams(format!("d1 must be > 0, got {d1}")));
        }
        if d2 < T::zero() {
            return Err(Error::InvalidParams(format!("d2 must be >= 0, got {d2}")));
        }
        if d1 < d2 {
            return Err(Error::InvalidParams(format!(
                "d1 must be >= d2 (detector convention I2 < I1), got d1 = {d1}, d2 = {d2}"
            )));
        }
        Ok(Self {
            omega,
            epsilon,
            d1,
            d2,
        })
    }

    /// Builds the unique parameter set with the given decoherence rate
    /// `gamma_d` and mean rate `d_mean = (d1 + d2)/2`.
    ///
    /// Solves `(sqrt(d1) - sqrt(d2))^2 = gamma_d`, `d1 + d2 = 2 d_mean`;
    /// requires `0 <= gamma_d <= 2 d_mean`.
    pub fn from_decoherence(omega: T, epsilon: T, gamma_d: T, d_mean: T) -> Result<Self> {
        let two = lit::<T>(2.0);
        if gamma_d < T::zero() || gamma_d > two * d_mean {
            return Err(Error::InvalidParams(format!(
                "need 0 <= gamma_d <= 2 d_mean, got gamma_d = {gamma_d}, d_mean = {d_mean}"
            )));
        }
        // (sqrt(d1) + sqrt(d2))^2 = 4 d_mean - gamma_d
        let s = (lit::<T>(4.0) * d_mean - gamma_d).sqrt();
        let g = gamma_d.sqrt();
        let r1 = (s + g) / two;
        let r2 = (s - g) / two;
        Self::new(omega, epsilon, r1 * r1, r2 * r2)
    }

    /// Inter-dot coupling energy Ω.
    pub fn omega(&self) -> T {
        self.omega
    }

    /// Level detuning ε = E2 − E1.
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Detector rate with dot 1 occupied.
    pub fn d1(&self) -> T {
        self.d1
    }

    /// Detector rate with dot 2 occupied.
    pub fn d2(&self) -> T {
        self.d2
    }

    /// Derived rates for this parameter set.
    pub fn derived(&self) -> DerivedRates<T> {
        derive_rates(self)
    }
}

/// Rates derived from [`SystemParams`]: decoherence, signal and mean current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates<T> {
    /// Measurement-induced decoherence rate `(sqrt(d1) - sqrt(d2))^2`.
    pub gamma_d: T,
    /// Average signal `ΔD = d1 - d2`.
    pub delta_d: T,
    /// Mean rate `D = (d1 + d2)/2`.
    pub d_mean: T,
}

/// Computes decoherence rate, signal and mean rate from the raw parameters.
pub fn derive_rates<T: Scalar>(p: &SystemParams<T>) -> DerivedRates<T> {
    let root = p.d1.sqrt() - p.d2.sqrt();
    DerivedRates {
        gamma_d: root * root,
        delta_d: p.d1 - p.d2,
        d_mean: (p.d1 + p.d2) / lit::<T>(2.0),
    }
}

/// Detector rates induced by the microscopic tunneling amplitudes.
///
/// Returns `(d1, d2)` with `d_q = (2π)^2 ω̄_q^2 ρ_L ρ_R V`, where `ω̄` applies
/// with dot 1 occupied and `ω̄'` with dot 2 occupied. All inputs must be
/// non-negative.
pub fn rates_from_microscopic<T: Scalar>(
    omega_bar: T,
    omega_bar_prime: T,
    rho_l: T,
    rho_r: T,
    v: T,
) -> (T, T) {
    debug_assert!(
        omega_bar >= T::zero()
            && omega_bar_prime >= T::zero()
            && rho_l >= T::zero()
            && rho_r >= T::zero()
            && v >= T::zero(),
        "rates_from_microscopic expects non-negative inputs"
    );
    let two_pi = lit::<T>(2.0) * T::PI();
    let scale = two_pi * two_pi * rho_l * rho_r * v;
    (
        scale * omega_bar * omega_bar,
        scale * omega_bar_prime * omega_bar_prime,
    )
}

/// Oscillation character of the monitored qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RabiMode<T> {
    /// `Γ_d < 8Ω`: damped oscillation at `ω = 2Ω sqrt(1 - (Γ_d/8Ω)^2)`.
    Underdamped { omega: T },
    /// `Γ_d = 8Ω`: boundary case, oscillation rate zero.
    Critical,
    /// `Γ_d > 8Ω`: hyperbolic relaxation at `κ = 2Ω sqrt((Γ_d/8Ω)^2 - 1)`.
    Overdamped { kappa: T },
}

impl<T: Scalar> RabiMode<T> {
    /// Oscillation (or relaxation) rate; zero at the critical point.
    pub fn rate(&self) -> T {
        match *self {
            RabiMode::Underdamped { omega } => omega,
            RabiMode::Critical => T::zero(),
            RabiMode::Overdamped { kappa } => kappa,
        }
    }
}

/// Classifies the oscillation regime and returns the Rabi frequency (or its
/// hyperbolic continuation past `Γ_d = 8Ω`).
///
/// A degenerate qubit (`Ω = 0`) has no oscillation to speak of and is
/// rejected so callers branch explicitly.
pub fn rabi_frequency<T: Scalar>(p: &SystemParams<T>) -> Result<RabiMode<T>> {
    if p.omega() == T::zero() {
        return Err(Error::StaticQubit);
    }
    let gamma_d = p.derived().gamma_d;
    let two = lit::<T>(2.0);
    let ratio = gamma_d / (lit::<T>(8.0) * p.omega());
    let one = T::one();
    if ratio < one {
        Ok(RabiMode::Underdamped {
            omega: two * p.omega() * (one - ratio * ratio).sqrt(),
        })
    } else if ratio > one {
        Ok(RabiMode::Overdamped {
            kappa: two * p.omega() * (ratio * ratio - one).sqrt(),
        })
    } else {
        Ok(RabiMode::Critical)
    }
}

/// Reduced qubit density matrix in the occupation basis.
///
/// Stores the dot-1 population and the single complex coherence; `σ22` is
/// implied by trace one and `σ21` by Hermiticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState<T> {
    sigma11: T,
    sigma12: Complex<T>,
}

/// Slack allowed on the coherence positivity bound `|σ12|^2 <= σ11 σ22`.
pub const POSITIVITY_TOL: f64 = 1e-9;

impl<T: Scalar> QubitState<T> {
    /// Validates `0 <= σ11 <= 1` and `|σ12|^2 <= σ11(1-σ11) + 1e-9`.
    pub fn new(sigma11: T, sigma12: Complex<T>) -> Result<Self> {
        if !sigma11.is_finite() || !sigma12.re.is_finite() || !sigma12.im.is_finite() {
            return Err(Error::InvalidState("state must be finite".into()));
        }
        if sigma11 < T::zero() || sigma11 > T::one() {
            return Err(Error::InvalidState(format!(
                "sigma11 must lie in [0, 1], got {sigma11}"
            )));
        }
        let coh = sigma12.norm_sqr();
        let bound = sigma11 * (T::one() - sigma11) + lit::<T>(POSITIVITY_TOL);
        if coh > bound {
            return Err(Error::InvalidState(format!(
                "coherence too large: |sigma12|^2 = {coh} exceeds sigma11 (1 - sigma11) = {}",
                sigma11 * (T::one() - sigma11)
            )));
        }
        Ok(Self { sigma11, sigma12 })
    }

    /// Electron fully in dot 1, no coherence. Default initial state.
    pub fn excited() -> Self {
        Self {
            sigma11: T::one(),
            sigma12: Complex::new(T::zero(), T::zero()),
        }
    }

    /// Dot-1 occupation.
    pub fn sigma11(&self) -> T {
        self.sigma11
    }

    /// Dot-2 occupation, `1 - σ11`.
    pub fn sigma22(&self) -> T {
        T::one() - self.sigma11
    }

    /// Coherence σ12; σ21 is its conjugate.
    pub fn sigma12(&self) -> Complex<T> {
        self.sigma12
    }

    /// Builds a state without the positivity check. Used by the propagators,
    /// whose output can graze the bound by integrator round-off.
    pub(crate) fn from_raw(sigma11: T, sigma12: Complex<T>) -> Self {
        Self { sigma11, sigma12 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p64(omega: f64, epsilon: f64, d1: f64, d2: f64) -> SystemParams<f64> {
        SystemParams::new(omega, epsilon, d1, d2).unwrap()
    }

    #[test]
    fn derives_reference_rates() {
        let r = p64(1.0, 0.0, 26.0, 24.0).derived();
        // (sqrt 26 - sqrt 24)^2 evaluated at high precision
        assert_relative_eq!(r.gamma_d, 0.040016012812814353, max_relative = 1e-12);
        assert_eq!(r.delta_d, 2.0);
        assert_eq!(r.d_mean, 25.0);
    }

    #[test]
    fn equal_rates_do_not_decohere() {
        let r = p64(0.5, 0.0, 10.0, 10.0).derived();
        assert_eq!(r.gamma_d, 0.0);
        assert_eq!(r.delta_d, 0.0);
    }

    #[test]
    fn weak_coupling_form_is_close() {
        // gamma_d ~= (delta_d)^2 / 4 d_mean for nearly equal rates
        let r = p64(1.0, 0.0, 26.0, 24.0).derived();
        let weak = r.delta_d * r.delta_d / (4.0 * r.d_mean);
        assert!((r.gamma_d - weak).abs() / weak < 5e-4);
    }

    #[test]
    fn derive_rates_is_scale_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d1 = rng.gen_range(0.5..40.0);
            let d2 = d1 * rng.gen_range(0.0..1.0);
            let lam = rng.gen_range(0.1..10.0);
            let a = p64(1.0, 0.0, d1, d2).derived();
            let b = p64(1.0, 0.0, lam * d1, lam * d2).derived();
            assert_relative_eq!(b.delta_d, lam * a.delta_d, max_relative = 1e-12);
            assert_relative_eq!(b.d_mean, lam * a.d_mean, max_relative = 1e-12);
            assert_relative_eq!(b.gamma_d, lam * a.gamma_d, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_d_sandwiched_by_weak_coupling_bounds() {
        // delta_d^2 / (4 d1) <= gamma_d <= delta_d^2 / (4 d2)
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let d1 = rng.gen_range(0.5..40.0);
            let d2 = d1 * rng.gen_range(0.05..1.0);
            let r = p64(1.0, 0.0, d1, d2).derived();
            let dd2 = r.delta_d * r.delta_d;
            assert!(r.gamma_d <= dd2 / (4.0 * d2) + 1e-15);
            assert!(r.gamma_d >= dd2 / (4.0 * d1) - 1e-15);
            assert!(r.gamma_d >= 0.0 && r.gamma_d <= d1 + d2);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SystemParams::new(1.0, 0.0, 24.0, 26.0).is_err());
        assert!(SystemParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(-1.0, 0.0, 26.0, 24.0).is_err());
        assert!(SystemParams::new(1.0, 0.0, 26.0, -1.0).is_err());
        assert!(SystemParams::new(f64::NAN, 0.0, 26.0, 24.0).is_err());
    }

    #[test]
    fn from_decoherence_round_trips() {
        let p = SystemParams::from_decoherence(0.1, 0.0, 8.0, 25.0).unwrap();
        let r = p.derived();
        assert_relative_eq!(r.gamma_d, 8.0, max_relative = 1e-12);
        assert_relative_eq!(r.d_mean, 25.0, max_relative = 1e-12);
        assert_relative_eq!(p.d1(), 38.564659966250536, max_relative = 1e-12);
    }

    #[test]
    fn microscopic_rates() {
        let inv_two_pi = 1.0 / (2.0 * std::f64::consts::PI);
        let (d1, d2) = rates_from_microscopic(inv_two_pi, 0.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(d1, 1.0, max_relative = 1e-14);
        assert_eq!(d2, 0.0);

        // omega_bar^2 rho_l rho_r = 0.0025330, v = 10
        let ob = 0.0025330f64.sqrt();
        let (d1, _) = rates_from_microscopic(ob, 0.0, 1.0, 1.0, 10.0);
        assert_abs_diff_eq!(d1, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn rabi_regimes() {
        // gamma_d = (sqrt(d1) - sqrt(d2))^2 is exact for perfect squares
        let p = p64(1.0, 0.0, 10.0, 10.0); // gamma_d = 0
        match rabi_frequency(&p).unwrap() {
            RabiMode::Underdamped { omega } => assert_relative_eq!(omega, 2.0),
            other => panic!("expected underdamped, got {other:?}"),
        }

        let p = p64(1.0, 0.0, 9.0, 1.0); // gamma_d = 4
        match rabi_frequency(&p).unwrap() {
            RabiMode::Underdamped { omega } => {
                assert_relative_eq!(omega, 3.0f64.sqrt(), max_relative = 1e-12)
            }
            other => panic!("expected underdamped, got {other:?}"),
        }

        let p = p64(0.5, 0.0, 9.0, 1.0); // gamma_d = 4 = 8 omega
        assert_eq!(rabi_frequency(&p).unwrap(), RabiMode::Critical);

        let p = p64(1.0, 0.0, 25.0, 1.0); // gamma_d = 16
        match rabi_frequency(&p).unwrap() {
            RabiMode::Overdamped { kappa } => {
                assert_relative_eq!(kappa, 2.0 * 3.0f64.sqrt(), max_relative = 1e-12)
            }
            other => panic!("expected overdamped, got {other:?}"),
        }
    }

    #[test]
    fn rabi_rate_continuous_at_critical_point() {
        for sign in [-1.0, 1.0] {
            let gamma: f64 = 8.0 * (1.0 + sign * 1e-6);
            let p = SystemParams::from_decoherence(1.0, 0.0, gamma, 10.0).unwrap();
            assert!(rabi_frequency(&p).unwrap().rate().abs() <= 1e-2);
        }
    }

    #[test]
    fn rabi_rejects_static_qubit() {
        let p = p64(0.0, 0.0, 26.0, 24.0);
        assert_eq!(rabi_frequency(&p), Err(Error::StaticQubit));
    }

    #[test]
    fn qubit_state_validation() {
        assert!(QubitState::new(0.5, Complex::new(0.5, 0.0)).is_ok());
        assert!(QubitState::new(0.5, Complex::new(0.6, 0.0)).is_err());
        assert!(QubitState::<f64>::new(1.2, Complex::new(0.0, 0.0)).is_err());
        assert!(QubitState::<f64>::new(-0.1, Complex::new(0.0, 0.0)).is_err());
        let q = QubitState::<f64>::excited();
        assert_eq!(q.sigma11(), 1.0);
        assert_eq!(q.sigma22(), 0.0);
    }

    #[test]
    fn works_in_f32() {
        let p = SystemParams::<f32>::new(1.0, 0.0, 26.0, 24.0).unwrap();
        let r = p.derived();
        assert!((r.gamma_d - 0.040016).abs() < 1e-4);
    }
}
