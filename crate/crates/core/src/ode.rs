//! Classical fixed-step 4th-order Runge–Kutta propagation shared by every
//! hierarchy in the crate.
//!
//! All right-hand sides here are autonomous and affine, so one classical
//! RK4 step collapses to the Horner form
//!
//! ```text
//! u ← y + (h/4) f(y);  u ← y + (h/3) f(u);  u ← y + (h/2) f(u);
//! y ← y + h f(u)
//! ```
//!
//! which reproduces the textbook update exactly (same Taylor polynomial)
//! with half the buffer traffic.
//!
//! The step size starts from a twentieth of the fastest system timescale
//! and is then certified by Richardson step-halving: a probe step at `h` is
//! compared against two probe steps at `h/2`, and `h` is halved until the
//! estimated local truncation error falls below the target. The same
//! scheme and the same step rule run the reduced qubit, the moment
//! hierarchy, the number ladder and the counting-field systems, so
//! cross-checks between them compare like for like.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::scalar::{lit, Scalar};

/// Integration accuracy knobs.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOpts<T> {
    /// Per-step local truncation error target, relative to the state scale.
    pub local_tol: T,
}

impl<T: Scalar> Default for IntegratorOpts<T> {
    fn default() -> Self {
        Self {
            local_tol: T::default_local_tol(),
        }
    }
}

/// Autonomous affine right-hand side, with an optional active window.
pub(crate) trait OdeSystem<T: Scalar> {
    fn dim(&self) -> usize;

    /// Writes the derivative of the active slice of `y` into `dy`. Entries
    /// outside [`Self::active`] are neither live state nor written.
    fn deriv(&self, y: &[T], dy: &mut [T]);

    /// Index range the stepper updates; everything outside stays frozen.
    fn active(&self) -> Range<usize> {
        0..self.dim()
    }

    /// Hook run after each accepted step, e.g. to move the active window.
    /// The window may only move monotonically (both ends non-decreasing),
    /// and the hook may clear state it freezes out.
    fn after_step(&mut self, _y: &mut [T]) {}

    /// One Horner stage `out = y + c f(u)`. The default goes through
    /// [`Self::deriv`]; hot systems override it with a fused single pass.
    fn stage(&self, y: &[T], u: &[T], c: T, out: &mut [T], scratch: &mut [T]) {
        self.deriv(u, scratch);
        for i in self.active() {
            out[i] = y[i] + c * scratch[i];
        }
    }

    /// Final Horner update `y += h f(u)` in place.
    fn advance(&self, u: &[T], h: T, y: &mut [T], scratch: &mut [T]) {
        self.deriv(u, scratch);
        for i in self.active() {
            y[i] = y[i] + h * scratch[i];
        }
    }
}

/// Step-size rule shared by every propagator: a twentieth of the fastest
/// timescale among coupling, detuning, decoherence and the dot-1 jump rate.
pub(crate) fn nominal_step<T: Scalar>(p: &SystemParams<T>) -> T {
    let twenty = lit::<T>(20.0);
    let mut h = T::one() / (twenty * p.d1());
    let gamma = p.derived().gamma_d;
    for rate in [p.omega(), p.epsilon().abs(), gamma] {
        if rate > T::zero() {
            h = h.min(T::one() / (twenty * rate));
        }
    }
    h
}

struct Buffers<T> {
    u_a: Vec<T>,
    u_b: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Buffers<T> {
    // Every buffer must mirror the frozen region of the state so neighbour
    // reads at the window edge see live values.
    fn new(y0: &[T]) -> Self {
        Self {
            u_a: y0.to_vec(),
            u_b: y0.to_vec(),
            scratch: y0.to_vec(),
        }
    }

    fn freeze(&mut self, y: &[T], cells: Range<usize>) {
        for i in cells {
            self.u_a[i] = y[i];
            self.u_b[i] = y[i];
            self.scratch[i] = y[i];
        }
    }
}

fn rk4_step<T: Scalar, S: OdeSystem<T>>(sys: &S, h: T, y: &mut [T], b: &mut Buffers<T>) {
    let quarter = h / lit::<T>(4.0);
    let third = h / lit::<T>(3.0);
    let half = h / lit::<T>(2.0);
    sys.stage(y, y, quarter, &mut b.u_a, &mut b.scratch);
    sys.stage(y, &b.u_a, third, &mut b.u_b, &mut b.scratch);
    sys.stage(y, &b.u_b, half, &mut b.u_a, &mut b.scratch);
    sys.advance(&b.u_a, h, y, &mut b.scratch);
}

struct Probes<T> {
    a: Vec<T>,
    b: Vec<T>,
}

fn certify_step<T: Scalar, S: OdeSystem<T>>(
    sys: &S,
    t: T,
    y: &[T],
    h0: T,
    tol: T,
    b: &mut Buffers<T>,
    probes: &mut Probes<T>,
) -> Result<T> {
    let r = sys.active();
    let mut scale = T::min_positive_value();
    for i in r.clone() {
        scale = scale.max(y[i].abs());
    }
    let fifteen = lit::<T>(15.0);
    let two = lit::<T>(2.0);

    let mut h = h0;
    for _ in 0..64 {
        probes.a[r.clone()].copy_from_slice(&y[r.clone()]);
        rk4_step(sys, h, &mut probes.a, b);

        probes.b[r.clone()].copy_from_slice(&y[r.clone()]);
        let half = h / two;
        rk4_step(sys, half, &mut probes.b, b);
        rk4_step(sys, half, &mut probes.b, b);

        let mut diff = T::zero();
        for i in r.clone() {
            diff = diff.max((probes.a[i] - probes.b[i]).abs());
        }
        if diff / (fifteen * scale) <= tol {
            return Ok(h);
        }
        h = half;
    }
    Err(Error::StepUnderflow {
        t: t.to_f64().unwrap_or(f64::NAN),
    })
}

fn validate_grid<T: Scalar>(t_grid: &[T]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if t_grid[0] != T::zero() {
        return Err(Error::InvalidGrid("grid must start at t = 0".into()));
    }
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidGrid(
                "grid times must be strictly increasing and finite".into(),
            ));
        }
    }
    if !t_grid[t_grid.len() - 1].is_finite() {
        return Err(Error::InvalidGrid("grid times must be finite".into()));
    }
    Ok(())
}

/// Propagates `y0` across `t_grid`, invoking `on_output(index, t, y)` at
/// every grid point (including `t = 0`). The step is re-certified at the
/// start of each output interval.
pub(crate) fn integrate<T: Scalar, S: OdeSystem<T>>(
    sys: &mut S,
    y0: Vec<T>,
    t_grid: &[T],
    h_nominal: T,
    opts: &IntegratorOpts<T>,
    mut on_output: impl FnMut(usize, T, &[T]) -> Result<()>,
) -> Result<()> {
    validate_grid(t_grid)?;
    let mut y = y0;
    let mut b = Buffers::new(&y);
    let mut probes = Probes {
        a: y.clone(),
        b: y.clone(),
    };
    sys.after_step(&mut y);
    on_output(0, t_grid[0], &y)?;

    for (k, pair) in t_grid.windows(2).enumerate() {
        let (t0, t1) = (pair[0], pair[1]);
        let span = t1 - t0;
        let h_cert = certify_step(
            sys,
            t0,
            &y,
            h_nominal.min(span),
            opts.local_tol,
            &mut b,
            &mut probes,
        )?;
        let n_steps = (span / h_cert).ceil().to_usize().unwrap_or(1).max(1);
        let h = span / T::from_usize(n_steps).unwrap();

        for _ in 0..n_steps {
            let before = sys.active();
            rk4_step(sys, h, &mut y, &mut b);
            sys.after_step(&mut y);
            let after = sys.active();
            // Newly frozen cells keep their final value in the buffer
            // mirrors so edge reads stay consistent.
            if after.start > before.start {
                b.freeze(&y, before.start..after.start);
                for i in before.start..after.start {
                    probes.a[i] = y[i];
                    probes.b[i] = y[i];
                }
            }
        }
        on_output(k + 1, t1, &y)?;
    }
    Ok(())
}
