//! The full number-resolved hierarchy: qubit density-matrix blocks
//! conditioned on the number `n` of electrons collected by the detector,
//! truncated at `n_max` and integrated on a dense ladder.
//!
//! Block equations of motion (`σ^(-1) ≡ 0`):
//!
//! ```text
//! dσ11^(n)/dt = -D1 σ11^(n) + D1 σ11^(n-1) + iΩ (σ12^(n) - σ21^(n))
//! dσ22^(n)/dt = -D2 σ22^(n) + D2 σ22^(n-1) - iΩ (σ12^(n) - σ21^(n))
//! dσ12^(n)/dt = iε σ12^(n) + iΩ (σ11^(n) - σ22^(n))
//!               - (D1+D2)/2 σ12^(n) + sqrt(D1 D2) σ12^(n-1)
//! ```
//!
//! A counting-field oracle provides an independent route to the electron
//! distribution: attaching a phase `e^{iχ}` to every `n -> n+1` gain term
//! turns the ladder into `m` uncoupled 4-component complex systems at
//! `χ_k = 2πk/m`, whose inverse discrete Fourier transform recovers `P_n`
//! with no truncation at all.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::ode::{integrate, nominal_step, IntegratorOpts, OdeSystem};
use crate::params::{QubitState, SystemParams};
use crate::scalar::{lit, Scalar};

/// Largest tolerated leak past the truncation before a run is rejected.
pub const LOST_MASS_LIMIT: f64 = 1e-9;

/// Blocks with total activity below this are frozen out of the active
/// integration window; they contribute nothing at double precision.
const WINDOW_EPS: f64 = 1e-30;

/// One rung of the ladder: the 2x2 block conditioned on `n` collected
/// electrons. `p1`/`p2` are the (unnormalized) dot populations, `c` the
/// coherence; `σ21^(n)` is `conj(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderBlock<T> {
    pub p1: T,
    pub p2: T,
    pub c: Complex<T>,
}

/// Snapshot of the truncated hierarchy at one instant.
#[derive(Debug, Clone)]
pub struct NumberLadder<T> {
    blocks: Vec<LadderBlock<T>>,
    lost_mass: T,
}

impl<T: Scalar> NumberLadder<T> {
    /// Blocks for `n = 0..=n_max`.
    pub fn blocks(&self) -> &[LadderBlock<T>] {
        &self.blocks
    }

    /// Truncation index.
    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Probability that has leaked past `n_max`.
    pub fn lost_mass(&self) -> T {
        self.lost_mass
    }

    /// `Σ_n (p1_n + p2_n)` over the stored blocks.
    pub fn total_mass(&self) -> T {
        self.blocks
            .iter()
            .fold(T::zero(), |acc, b| acc + b.p1 + b.p2)
    }

    /// Qubit state obtained by tracing over `n`.
    pub fn marginal(&self) -> (T, Complex<T>) {
        let mut s11 = T::zero();
        let mut c = Complex::new(T::zero(), T::zero());
        for b in &self.blocks {
            s11 = s11 + b.p1;
            c = c + b.c;
        }
        (s11, c)
    }
}

/// Ladder snapshots on a time grid.
#[derive(Debug, Clone)]
pub struct LadderTrajectory<T> {
    pub times: Vec<T>,
    pub ladders: Vec<NumberLadder<T>>,
}

impl<T: Scalar> LadderTrajectory<T> {
    /// Snapshot at the final grid time.
    pub fn last(&self) -> &NumberLadder<T> {
        self.ladders.last().expect("trajectory never empty")
    }
}

/// Truncation index with a ten-sigma-plus margin over the drift `D1 t`:
/// `ceil(D1 t + 10 sqrt(D1 t + 1) + 10)`.
///
/// The returned index leaves a detector-shot (Poisson) tail below
/// `tail_eps`; callers must pass `0 < tail_eps <= 1e-6`, which the margin
/// covers with orders of magnitude to spare.
pub fn choose_n_max<T: Scalar>(p: &SystemParams<T>, t: T, tail_eps: f64) -> usize {
    assert!(
        tail_eps > 0.0 && tail_eps <= 1e-6,
        "tail_eps must lie in (0, 1e-6]"
    );
    let drift = p.d1() * t;
    let ten = lit::<T>(10.0);
    let bound = drift + ten * (drift + T::one()).sqrt() + ten;
    bound.ceil().to_usize().expect("n_max fits in usize")
}

// Zero blocks kept open beyond the advancing front. The outermost computed
// block emits into nowhere, so the front needs enough headroom that only
// O((D1 h)^{GUARD+1}) of step-internal mass ever reaches it.
const GUARD: usize = 6;

// State layout: AoS, y[4n..4n+4] = [p1, p2, Re c, Im c]. The active window
// [lo, hi] tracks where the distribution actually lives; everything outside
// is frozen at (sub-)1e-30 values.
struct LadderSystem<T> {
    n_max: usize,
    lo: usize,
    hi: usize,
    front: usize,
    omega: T,
    epsilon: T,
    d1: T,
    d2: T,
    d_bar: T,
    feed: T,
    window_eps: T,
}

impl<T: Scalar> LadderSystem<T> {
    fn new(p: &SystemParams<T>, n_max: usize) -> Self {
        Self {
            n_max,
            lo: 0,
            hi: GUARD.min(n_max),
            front: 0,
            omega: p.omega(),
            epsilon: p.epsilon(),
            d1: p.d1(),
            d2: p.d2(),
            d_bar: (p.d1() + p.d2()) / lit::<T>(2.0),
            feed: (p.d1() * p.d2()).sqrt(),
            window_eps: lit::<T>(WINDOW_EPS),
        }
    }

    #[inline]
    fn activity(y: &[T], n: usize) -> T {
        let i = 4 * n;
        y[i].abs() + y[i + 1].abs() + y[i + 2].abs() + y[i + 3].abs()
    }
}

impl<T: Scalar> LadderSystem<T> {
    // Derivative of block n given the flattened state; `m` indexes block
    // n-1 (callers pass n's own index for n = 0, where the feed reads
    // multiply by zero).
    #[inline(always)]
    fn block_deriv(&self, u: &[T], i: usize, m: usize, gate: T, two_om: T) -> [T; 4] {
        let (p1m, p2m, crm, cim) = (u[m] * gate, u[m + 1] * gate, u[m + 2] * gate, u[m + 3] * gate);
        let (p1, p2, cr, ci) = (u[i], u[i + 1], u[i + 2], u[i + 3]);
        [
            self.d1 * (p1m - p1) - two_om * ci,
            self.d2 * (p2m - p2) + two_om * ci,
            -self.epsilon * ci - self.d_bar * cr + self.feed * crm,
            self.epsilon * cr + self.omega * (p1 - p2) - self.d_bar * ci + self.feed * cim,
        ]
    }
}

impl<T: Scalar> OdeSystem<T> for LadderSystem<T> {
    fn dim(&self) -> usize {
        4 * (self.n_max + 1)
    }

    fn deriv(&self, y: &[T], dy: &mut [T]) {
        let two_om = lit::<T>(2.0) * self.omega;
        for n in self.lo..=self.hi {
            let i = 4 * n;
            let (m, gate) = if n > 0 {
                (i - 4, T::one())
            } else {
                (i, T::zero())
            };
            let d = self.block_deriv(y, i, m, gate, two_om);
            dy[i] = d[0];
            dy[i + 1] = d[1];
            dy[i + 2] = d[2];
            dy[i + 3] = d[3];
        }
    }

    fn active(&self) -> std::ops::Range<usize> {
        4 * self.lo..4 * (self.hi + 1)
    }

    fn after_step(&mut self, y: &mut [T]) {
        while self.front < self.n_max && Self::activity(y, self.front + 1) > self.window_eps {
            self.front += 1;
        }
        self.hi = (self.front + GUARD).min(self.n_max);
        // Frozen blocks are cleared outright: a nonzero frozen neighbour
        // would feed the edge block a constant trickle and pin the window.
        while self.lo < self.front && Self::activity(y, self.lo) < self.window_eps {
            let i = 4 * self.lo;
            y[i] = T::zero();
            y[i + 1] = T::zero();
            y[i + 2] = T::zero();
            y[i + 3] = T::zero();
            self.lo += 1;
        }
    }

    // Fused single-pass stages keep the dense ladder memory-bound rather
    // than buffer-bound.
    fn stage(&self, y: &[T], u: &[T], c: T, out: &mut [T], _scratch: &mut [T]) {
        let two_om = lit::<T>(2.0) * self.omega;
        for n in self.lo..=self.hi {
            let i = 4 * n;
            let (m, gate) = if n > 0 {
                (i - 4, T::one())
            } else {
                (i, T::zero())
            };
            let d = self.block_deriv(u, i, m, gate, two_om);
            out[i] = y[i] + c * d[0];
            out[i + 1] = y[i + 1] + c * d[1];
            out[i + 2] = y[i + 2] + c * d[2];
            out[i + 3] = y[i + 3] + c * d[3];
        }
    }

    fn advance(&self, u: &[T], h: T, y: &mut [T], _scratch: &mut [T]) {
        let two_om = lit::<T>(2.0) * self.omega;
        for n in self.lo..=self.hi {
            let i = 4 * n;
            let (m, gate) = if n > 0 {
                (i - 4, T::one())
            } else {
                (i, T::zero())
            };
            let d = self.block_deriv(u, i, m, gate, two_om);
            y[i] = y[i] + h * d[0];
            y[i + 1] = y[i + 1] + h * d[1];
            y[i + 2] = y[i + 2] + h * d[2];
            y[i + 3] = y[i + 3] + h * d[3];
        }
    }
}

fn snapshot<T: Scalar>(y: &[T], n_max: usize) -> NumberLadder<T> {
    let mut blocks = Vec::with_capacity(n_max + 1);
    let mut total = T::zero();
    for n in 0..=n_max {
        let i = 4 * n;
        blocks.push(LadderBlock {
            p1: y[i],
            p2: y[i + 1],
            c: Complex::new(y[i + 2], y[i + 3]),
        });
        total = total + y[i] + y[i + 1];
    }
    let lost = (T::one() - total).max(T::zero());
    NumberLadder {
        blocks,
        lost_mass: lost,
    }
}

/// Integrates the truncated hierarchy with all charge initially at `n = 0`.
///
/// Aborts with [`Error::TruncationTooSmall`] as soon as the probability
/// leaked past `n_max` exceeds [`LOST_MASS_LIMIT`], reporting the index the
/// run would have needed.
pub fn evolve_ladder<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
    n_max: usize,
) -> Result<LadderTrajectory<T>> {
    evolve_ladder_with(p, q0, t_grid, n_max, &IntegratorOpts::default())
}

/// [`evolve_ladder`] with explicit integrator options.
pub fn evolve_ladder_with<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t_grid: &[T],
    n_max: usize,
    opts: &IntegratorOpts<T>,
) -> Result<LadderTrajectory<T>> {
    let mut sys = LadderSystem::new(p, n_max);
    let mut y0 = vec![T::zero(); 4 * (n_max + 1)];
    y0[0] = q0.sigma11();
    y0[1] = q0.sigma22();
    y0[2] = q0.sigma12().re;
    y0[3] = q0.sigma12().im;

    let t_final = t_grid[t_grid.len().saturating_sub(1)];
    let mut traj = LadderTrajectory {
        times: Vec::with_capacity(t_grid.len()),
        ladders: Vec::with_capacity(t_grid.len()),
    };
    integrate(&mut sys, y0, t_grid, nominal_step(p), opts, |_, t, y| {
        let snap = snapshot(y, n_max);
        let lost = snap.lost_mass().to_f64().unwrap_or(f64::NAN);
        if lost > LOST_MASS_LIMIT {
            return Err(Error::TruncationTooSmall {
                lost,
                limit: LOST_MASS_LIMIT,
                required: choose_n_max(p, t_final, 1e-12),
            });
        }
        traj.times.push(t);
        traj.ladders.push(snap);
        Ok(())
    })?;
    Ok(traj)
}

/// Probability distribution of the collected electron number.
#[derive(Debug, Clone)]
pub struct CountingDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> CountingDistribution<T> {
    /// `P_n` for `n = 0..len`.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Total probability carried by the stored entries.
    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |a, &p| a + p)
    }

    /// First moment `Σ n P_n`.
    pub fn mean(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (n, &p)| a + T::from_usize(n).unwrap() * p)
    }

    /// Variance `Σ n² P_n - mean²`.
    pub fn variance(&self) -> T {
        let mean = self.mean();
        let m2 = self
            .probs
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (n, &p)| {
                let nf = T::from_usize(n).unwrap();
                a + nf * nf * p
            });
        m2 - mean * mean
    }
}

/// Electron counting distribution `P_n = σ11^(n) + σ22^(n)` of a ladder.
pub fn electron_distribution<T: Scalar>(ladder: &NumberLadder<T>) -> CountingDistribution<T> {
    CountingDistribution {
        probs: ladder.blocks().iter().map(|b| b.p1 + b.p2).collect(),
    }
}

/// Total-variation distance between two counting distributions, padding the
/// shorter with zeros.
pub fn total_variation<T: Scalar>(a: &CountingDistribution<T>, b: &CountingDistribution<T>) -> T {
    let n = a.probs.len().max(b.probs.len());
    let mut acc = T::zero();
    for i in 0..n {
        let pa = a.probs.get(i).copied().unwrap_or_else(T::zero);
        let pb = b.probs.get(i).copied().unwrap_or_else(T::zero);
        acc = acc + (pa - pb).abs();
    }
    acc / lit::<T>(2.0)
}

// Counting-field system: m independent modes, 8 reals per mode
// [Re g11, Im g11, Re g22, Im g22, Re g12, Im g12, Re g21, Im g21].
// g21 is not conj(g12) once the field is attached, so it propagates
// separately.
struct CountingFieldSystem<T> {
    m: usize,
    omega: T,
    epsilon: T,
    d1: T,
    d2: T,
    d_bar: T,
    feed: T,
    phase: Vec<Complex<T>>,
}

impl<T: Scalar> CountingFieldSystem<T> {
    fn new(p: &SystemParams<T>, m: usize) -> Self {
        let two_pi = lit::<T>(2.0) * T::PI();
        let mf = T::from_usize(m).unwrap();
        let phase = (0..m)
            .map(|k| {
                let chi = two_pi * T::from_usize(k).unwrap() / mf;
                Complex::new(chi.cos(), chi.sin())
            })
            .collect();
        Self {
            m,
            omega: p.omega(),
            epsilon: p.epsilon(),
            d1: p.d1(),
            d2: p.d2(),
            d_bar: (p.d1() + p.d2()) / lit::<T>(2.0),
            feed: (p.d1() * p.d2()).sqrt(),
            phase,
        }
    }
}

impl<T: Scalar> OdeSystem<T> for CountingFieldSystem<T> {
    fn dim(&self) -> usize {
        8 * self.m
    }

    fn deriv(&self, y: &[T], dy: &mut [T]) {
        let om = self.omega;
        let eps = self.epsilon;
        for k in 0..self.m {
            let i = 8 * k;
            let e = self.phase[k];
            let (g11r, g11i) = (y[i], y[i + 1]);
            let (g22r, g22i) = (y[i + 2], y[i + 3]);
            let (g12r, g12i) = (y[i + 4], y[i + 5]);
            let (g21r, g21i) = (y[i + 6], y[i + 7]);

            // a_q = D_q (e^{iχ} - 1)
            let a1r = self.d1 * (e.re - T::one());
            let a1i = self.d1 * e.im;
            let a2r = self.d2 * (e.re - T::one());
            let a2i = self.d2 * e.im;
            // coherence coefficient: ±iε - (D1+D2)/2 + sqrt(D1 D2) e^{iχ}
            let br = -self.d_bar + self.feed * e.re;
            let bi = self.feed * e.im;

            let wr = g12r - g21r;
            let wi = g12i - g21i;
            dy[i] = a1r * g11r - a1i * g11i - om * wi;
            dy[i + 1] = a1r * g11i + a1i * g11r + om * wr;
            dy[i + 2] = a2r * g22r - a2i * g22i + om * wi;
            dy[i + 3] = a2r * g22i + a2i * g22r - om * wr;

            let ur = g11r - g22r;
            let ui = g11i - g22i;
            dy[i + 4] = br * g12r - (bi + eps) * g12i - om * ui;
            dy[i + 5] = br * g12i + (bi + eps) * g12r + om * ur;
            dy[i + 6] = br * g21r - (bi - eps) * g21i + om * ui;
            dy[i + 7] = br * g21i + (bi - eps) * g21r - om * ur;
        }
    }
}

/// In-place radix-2 DFT with kernel `e^{-2πi jk/n}`; `n` a power of two.
fn dft_pow2<T: Scalar>(re: &mut [T], im: &mut [T]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let two_pi = lit::<T>(2.0) * T::PI();
    let mut len = 2;
    while len <= n {
        let step = -two_pi / T::from_usize(len).unwrap();
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let ang = step * T::from_usize(k).unwrap();
                let (wr, wi) = (ang.cos(), ang.sin());
                let (ur, ui) = (re[start + k], im[start + k]);
                let (xr, xi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let vr = xr * wr - xi * wi;
                let vi = xr * wi + xi * wr;
                re[start + k] = ur + vr;
                im[start + k] = ui + vi;
                re[start + k + len / 2] = ur - vr;
                im[start + k + len / 2] = ui - vi;
            }
        }
        len <<= 1;
    }
}

/// Exact counting-field route to the electron distribution at time `t`.
///
/// Evolves the phase-dressed system at `χ_k = 2πk/m` for `k = 0..m` and
/// inverts the transform. `m` must be a power of two at least
/// `2 (choose_n_max(p, t) + 1)` so the periodic images cannot alias into the
/// occupied range; violations are rejected as [`Error::AliasingRisk`], as is
/// any recovered mass below `-1e-8`.
pub fn counting_field_distribution<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t: T,
    m: usize,
) -> Result<CountingDistribution<T>> {
    counting_field_distribution_with(p, q0, t, m, &IntegratorOpts::default())
}

/// [`counting_field_distribution`] with explicit integrator options.
pub fn counting_field_distribution_with<T: Scalar>(
    p: &SystemParams<T>,
    q0: &QubitState<T>,
    t: T,
    m: usize,
    opts: &IntegratorOpts<T>,
) -> Result<CountingDistribution<T>> {
    if !m.is_power_of_two() || m < 2 {
        return Err(Error::AliasingRisk {
            m,
            detail: "transform size must be a power of two".into(),
        });
    }
    let needed = 2 * (choose_n_max(p, t, 1e-12) + 1);
    if m < needed {
        return Err(Error::AliasingRisk {
            m,
            detail: format!("need m >= {needed} to clear the occupied range"),
        });
    }

    let mut sys = CountingFieldSystem::new(p, m);
    let mut y0 = vec![T::zero(); 8 * m];
    for k in 0..m {
        let i = 8 * k;
        y0[i] = q0.sigma11();
        y0[i + 2] = q0.sigma22();
        y0[i + 4] = q0.sigma12().re;
        y0[i + 5] = q0.sigma12().im;
        y0[i + 6] = q0.sigma12().re;
        y0[i + 7] = -q0.sigma12().im;
    }

    let grid = if t == T::zero() {
        vec![T::zero()]
    } else {
        vec![T::zero(), t]
    };
    let mut finals = vec![T::zero(); 8 * m];
    integrate(&mut sys, y0, &grid, nominal_step(p), opts, |_, _, y| {
        finals.copy_from_slice(y);
        Ok(())
    })?;

    // characteristic samples G(χ_k) = tr σ(χ_k) = g11 + g22
    let mut re: Vec<T> = (0..m).map(|k| finals[8 * k] + finals[8 * k + 2]).collect();
    let mut im: Vec<T> = (0..m)
        .map(|k| finals[8 * k + 1] + finals[8 * k + 3])
        .collect();
    dft_pow2(&mut re, &mut im);
    let mf = T::from_usize(m).unwrap();
    let probs: Vec<T> = re.iter().map(|&x| x / mf).collect();

    let min = probs.iter().fold(T::zero(), |a, &p| a.min(p));
    if min < lit::<T>(-1e-8) {
        return Err(Error::AliasingRisk {
            m,
            detail: format!(
                "recovered mass dips to {:e}",
                min.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    Ok(CountingDistribution { probs })
}
