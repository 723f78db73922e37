//! Finite-difference integration of `u_tt - Δu + σ(x,t) u_t = 0` with
//! homogeneous Dirichlet boundaries, plus the nonlinear variant
//! `m(u) u_t`, sampling the certified energy `∫ |∇u|² + (u_t + ε u)²`.
//!
//! The scheme is a semi-implicit leapfrog: central differences in space and
//! time, with the damping term averaged across the time levels so the
//! per-node update stays an explicit scalar division.

use crate::certificate::DampingBounds;
use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Default CFL safety fraction.
pub const DEFAULT_CFL_FACTOR: f64 = 0.9;

/// Half-width removed from each end of `(1, 2)` for the counterexample run.
pub const COUNTEREXAMPLE_TRUNCATION: f64 = 1e-3;

/// Nonlinear damping laws `m(u)` with `0 < m0 <= m(u) <= m1`.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearKind {
    /// `m(u) = 2 + sin(u)`, bounded by `[1, 3]`.
    TwoPlusSin,
    /// `m(u) = m0 + (m1 - m0) / (1 + u²)`, bounded by `(m0, m1]`.
    Rational { m0: f64, m1: f64 },
}

impl NonlinearKind {
    fn eval(&self, u: f64) -> f64 {
        match self {
            NonlinearKind::TwoPlusSin => 2.0 + u.sin(),
            NonlinearKind::Rational { m0, m1 } => m0 + (m1 - m0) / (1.0 + u * u),
        }
    }
}

/// How the damping coefficient is produced at each node and time.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingKind {
    /// `σ(x,t) = a`.
    Constant(f64),
    /// `σ(x,t) = base + amplitude · sin(omega t) · cos(pi (x - a)/L)` along
    /// the first axis when `spatial` is set, or without the cosine factor
    /// otherwise.
    Sinusoidal {
        base: f64,
        amplitude: f64,
        omega: f64,
        spatial: bool,
    },
    /// Nodal values per time frame, piecewise-constant in time between
    /// frames. `times` must be strictly increasing; times before the first
    /// frame clamp to it.
    Tabulated {
        times: Vec<f64>,
        frames: Vec<Vec<f64>>,
    },
    /// `σ(x,t) = m(u(x,t))`.
    Nonlinear(NonlinearKind),
}

/// A damping law together with the bounds it is declared to respect.
/// Every evaluated value is checked against the bounds during stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    kind: DampingKind,
    lo: f64,
    hi: f64,
}

impl DampingSpec {
    pub fn new(kind: DampingKind, bounds: &DampingBounds) -> Self {
        Self {
            kind,
            lo: bounds.sigma0(),
            hi: bounds.sigma1(),
        }
    }

    /// Declared bounds with a possibly-zero floor. The certificate machinery
    /// requires a strictly positive infimum, but sanity runs of the plain
    /// wave equation (`σ ≡ 0`) are legitimate simulations.
    pub fn with_raw_bounds(kind: DampingKind, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "declared damping bounds need 0 <= lo <= hi < inf, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { kind, lo, hi })
    }

    pub fn kind(&self) -> &DampingKind {
        &self.kind
    }

    pub fn declared_bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn validate_against(&self, grid: &Grid) -> Result<()> {
        if let DampingKind::Tabulated { times, frames } = &self.kind {
            if times.is_empty() || times.len() != frames.len() {
                return Err(Error::InvalidParameter(
                    "tabulated damping needs one frame per time".into(),
                ));
            }
            if times.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidParameter(
                    "tabulated damping times must be strictly increasing".into(),
                ));
            }
            if frames.iter().any(|f| f.len() != grid.node_count()) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated damping frames must carry {} nodal values",
                    grid.node_count()
                )));
            }
        }
        Ok(())
    }

    /// Fill `sigma` with nodal values at time `t` (field `u` feeds the
    /// nonlinear laws), then enforce the declared bounds.
    fn fill(&self, grid: &Grid, t: f64, u: &[f64], sigma: &mut [f64]) -> Result<()> {
        match &self.kind {
            DampingKind::Constant(a) => sigma.fill(*a),
            DampingKind::Sinusoidal {
                base,
                amplitude,
                omega,
                spatial,
            } => {
                let wave = amplitude * (omega * t).sin();
                if *spatial {
                    let a = grid.domain().offsets()[0];
                    let l = grid.domain().lengths()[0];
                    for (j, s) in sigma.iter_mut().enumerate() {
                        let x = grid.coord(0, j);
                        *s = base + wave * (std::f64::consts::PI * (x - a) / l).cos();
                    }
                } else {
                    sigma.fill(base + wave);
                }
            }
            DampingKind::Tabulated { times, frames } => {
                let idx = times.partition_point(|&tt| tt <= t).saturating_sub(1);
                sigma.copy_from_slice(&frames[idx]);
            }
            DampingKind::Nonlinear(kind) => {
                for (s, &uu) in sigma.iter_mut().zip(u) {
                    *s = kind.eval(uu);
                }
            }
        }
        // Slack of a few ulps so exact-boundary laws do not trip the check.
        let slack = 1e-12 * self.hi.abs().max(1.0);
        for (node, &s) in sigma.iter().enumerate() {
            if !(s >= self.lo - slack && s <= self.hi + slack) {
                return Err(Error::DampingOutOfBounds {
                    value: s,
                    node,
                    t,
                    lo: self.lo,
                    hi: self.hi,
                });
            }
        }
        Ok(())
    }
}

/// Discrete initial-boundary value problem on a grid of interior nodes.
/// Boundary nodes carry `u = 0`, so the compatibility of the initial data
/// with the boundary condition is structural.
#[derive(Debug, Clone)]
pub struct WaveProblem {
    grid: Grid,
    damping: DampingSpec,
    u0: Vec<f64>,
    u1: Vec<f64>,
    t_end: f64,
    cfl_factor: f64,
}

impl WaveProblem {
    pub fn new(
        grid: Grid,
        damping: DampingSpec,
        u0: Vec<f64>,
        u1: Vec<f64>,
        t_end: f64,
        cfl_factor: f64,
    ) -> Result<Self> {
        let n = grid.node_count();
        if u0.len() != n || u1.len() != n {
            return Err(Error::InvalidParameter(format!(
                "initial data must carry {n} nodal values, got {} and {}",
                u0.len(),
                u1.len()
            )));
        }
        if u0.iter().chain(&u1).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial data must be finite".into(),
            ));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive and finite, got {t_end}"
            )));
        }
        if !(cfl_factor > 0.0) || !cfl_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cfl_factor must be positive and finite, got {cfl_factor}"
            )));
        }
        damping.validate_against(&grid)?;
        Ok(Self {
            grid,
            damping,
            u0,
            u1,
            t_end,
            cfl_factor,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn damping(&self) -> &DampingSpec {
        &self.damping
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn cfl_factor(&self) -> f64 {
        self.cfl_factor
    }

    /// The time step requested by the CFL factor:
    /// `cfl_factor / sqrt(Σ 1/hᵢ²)`, which reduces to `cfl · h / sqrt(d)` on
    /// uniform grids. A factor above 1 requests a step beyond the scheme's
    /// stability limit and is rejected when stepping starts.
    pub fn max_stable_dt(&self) -> f64 {
        self.cfl_factor / self.grid_frequency()
    }

    /// Hard stability limit of the leapfrog scheme, `1 / sqrt(Σ 1/hᵢ²)`.
    pub fn stability_limit_dt(&self) -> f64 {
        1.0 / self.grid_frequency()
    }

    fn grid_frequency(&self) -> f64 {
        let inv: f64 = self.grid.spacing().iter().map(|&h| 1.0 / (h * h)).sum();
        inv.sqrt()
    }
}

/// Two consecutive time levels of the discrete field; `t` is the time of
/// `u_curr` and `u_prev` sits one step behind.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub t: f64,
    pub dt: f64,
}

/// One recorded energy sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub total: f64,
    pub grad: f64,
    pub velocity: f64,
}

/// Sampled time series of the certified energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    samples: Vec<EnergySample>,
    eps_used: f64,
}

impl EnergyTrace {
    pub fn from_samples(samples: Vec<EnergySample>, eps_used: f64) -> Result<Self> {
        if samples
            .windows(2)
            .any(|w| !(w[0].t < w[1].t))
        {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        for s in &samples {
            if !(s.total >= 0.0 && s.grad >= 0.0 && s.velocity >= 0.0) || !s.total.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "energies must be finite and nonnegative, got {s:?}"
                )));
            }
        }
        Ok(Self { samples, eps_used })
    }

    pub fn samples(&self) -> &[EnergySample] {
        &self.samples
    }

    pub fn eps_used(&self) -> f64 {
        self.eps_used
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_cfl(dt: f64, problem: &WaveProblem) -> Result<()> {
    // both the requested margin and the scheme's hard limit apply
    let limit = problem.max_stable_dt().min(problem.stability_limit_dt());
    // tiny slack: dt = t_end/ceil(t_end/limit) may exceed the limit by an ulp
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt, limit });
    }
    Ok(())
}

/// `Δ_h u` at interior node `k`, zero Dirichlet boundary.
fn laplacian_at(grid: &Grid, u: &[f64], k: usize) -> f64 {
    let pts = grid.points();
    let sp = grid.spacing();
    match grid.dimension() {
        1 => {
            let n = pts[0];
            let h2 = sp[0] * sp[0];
            let left = if k > 0 { u[k - 1] } else { 0.0 };
            let right = if k + 1 < n { u[k + 1] } else { 0.0 };
            (left - 2.0 * u[k] + right) / h2
        }
        _ => {
            let (nx, ny) = (pts[0], pts[1]);
            let (hx2, hy2) = (sp[0] * sp[0], sp[1] * sp[1]);
            let (i, j) = (k % nx, k / nx);
            let left = if i > 0 { u[k - 1] } else { 0.0 };
            let right = if i + 1 < nx { u[k + 1] } else { 0.0 };
            let down = if j > 0 { u[k - nx] } else { 0.0 };
            let up = if j + 1 < ny { u[k + nx] } else { 0.0 };
            (left - 2.0 * u[k] + right) / hx2 + (down - 2.0 * u[k] + up) / hy2
        }
    }
}

fn leapfrog_into(
    grid: &Grid,
    u_prev: &[f64],
    u_curr: &[f64],
    sigma: &[f64],
    dt: f64,
    out: &mut [f64],
) {
    let dt2 = dt * dt;
    for k in 0..u_curr.len() {
        let lap = laplacian_at(grid, u_curr, k);
        let a = 0.5 * sigma[k] * dt;
        out[k] = (2.0 * u_curr[k] - u_prev[k] + dt2 * lap + a * u_prev[k]) / (1.0 + a);
    }
}

/// `∫ |∇u|²` by forward differences over every cell gap (boundary zero).
pub fn grad_energy(grid: &Grid, u: &[f64]) -> f64 {
    let sp = grid.spacing();
    match grid.dimension() {
        1 => {
            let h = sp[0];
            let mut sum = 0.0;
            let mut prev = 0.0;
            for &v in u {
                let d = (v - prev) / h;
                sum += d * d;
                prev = v;
            }
            let d = prev / h;
            sum += d * d;
            sum * h
        }
        _ => {
            let (nx, ny) = (grid.points()[0], grid.points()[1]);
            let (hx, hy) = (sp[0], sp[1]);
            let mut sum = 0.0;
            for j in 0..ny {
                let mut prev = 0.0;
                for i in 0..nx {
                    let d = (u[j * nx + i] - prev) / hx;
                    sum += d * d;
                    prev = u[j * nx + i];
                }
                sum += (prev / hx) * (prev / hx);
            }
            for i in 0..nx {
                let mut prev = 0.0;
                for j in 0..ny {
                    let d = (u[j * nx + i] - prev) / hy;
                    sum += d * d;
                    prev = u[j * nx + i];
                }
                sum += (prev / hy) * (prev / hy);
            }
            sum * hx * hy
        }
    }
}

fn cell_volume(grid: &Grid) -> f64 {
    grid.spacing().iter().product()
}

/// `∫ v²` over the interior nodes (midpoint rule; boundary values are zero).
pub fn l2_energy(grid: &Grid, v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() * cell_volume(grid)
}

/// Build the state after the first time step by a second-order Taylor start
/// that uses the equation for the initial acceleration.
pub fn initial_state(problem: &WaveProblem, dt: f64) -> Result<WaveState> {
    check_cfl(dt, problem)?;
    let grid = problem.grid();
    let n = grid.node_count();
    let mut sigma = vec![0.0; n];
    problem.damping().fill(grid, 0.0, problem.u0(), &mut sigma)?;
    let mut u_curr = vec![0.0; n];
    for k in 0..n {
        let lap = laplacian_at(grid, problem.u0(), k);
        let accel = lap - sigma[k] * problem.u1()[k];
        u_curr[k] = problem.u0()[k] + dt * problem.u1()[k] + 0.5 * dt * dt * accel;
    }
    Ok(WaveState {
        u_prev: problem.u0().to_vec(),
        u_curr,
        t: dt,
        dt,
    })
}

/// Advance one leapfrog step. The damping is evaluated nodewise at the time
/// of `u_curr` (or from `u_curr` itself for the nonlinear laws) and checked
/// against the declared bounds.
pub fn step(state: &WaveState, problem: &WaveProblem) -> Result<WaveState> {
    let grid = problem.grid();
    let n = grid.node_count();
    if state.u_prev.len() != n || state.u_curr.len() != n {
        return Err(Error::InvalidParameter(format!(
            "state carries {} nodes, problem expects {n}",
            state.u_curr.len()
        )));
    }
    check_cfl(state.dt, problem)?;
    let mut sigma = vec![0.0; n];
    problem.damping().fill(grid, state.t, &state.u_curr, &mut sigma)?;
    let mut u_next = vec![0.0; n];
    leapfrog_into(grid, &state.u_prev, &state.u_curr, &sigma, state.dt, &mut u_next);
    Ok(WaveState {
        u_prev: state.u_curr.clone(),
        u_curr: u_next,
        t: state.t + state.dt,
        dt: state.dt,
    })
}

/// Integrate to `t_end` and sample energies every `sample_every` steps
/// (the initial and final levels are always recorded).
///
/// `eps_for_v` is the ε in `v = u_t + ε u`; it must lie in `[0, σ0]` for the
/// declared lower bound σ0. The time derivative at interior sample levels is
/// the centered difference spanning the level; the first and last samples
/// use one-sided differences.
pub fn simulate(problem: &WaveProblem, eps_for_v: f64, sample_every: usize) -> Result<EnergyTrace> {
    let (lo, _) = problem.damping().declared_bounds();
    if !(eps_for_v >= 0.0 && eps_for_v <= lo) {
        return Err(Error::InvalidParameter(format!(
            "eps_for_v must lie in [0, {lo}], got {eps_for_v}"
        )));
    }
    if sample_every == 0 {
        return Err(Error::InvalidParameter(
            "sample_every must be at least 1".into(),
        ));
    }

    let grid = problem.grid();
    let n = grid.node_count();
    let n_steps = (problem.t_end() / problem.max_stable_dt()).ceil().max(1.0) as usize;
    let dt = problem.t_end() / n_steps as f64;
    let vol = cell_volume(grid);

    let velocity_energy = |u: &[f64], ut: &dyn Fn(usize) -> f64| -> f64 {
        let mut sum = 0.0;
        for (k, &uk) in u.iter().enumerate() {
            let v = ut(k) + eps_for_v * uk;
            sum += v * v;
        }
        sum * vol
    };

    let start = initial_state(problem, dt)?;
    let mut u_prev = start.u_prev;
    let mut u_curr = start.u_curr;
    let mut u_next = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut samples = Vec::with_capacity(n_steps / sample_every + 2);

    let grad = grad_energy(grid, &u_prev);
    let vel = velocity_energy(&u_prev, &|k| (u_curr[k] - u_prev[k]) / dt);
    samples.push(EnergySample {
        t: 0.0,
        total: grad + vel,
        grad,
        velocity: vel,
    });

    for level in 1..n_steps {
        let t = level as f64 * dt;
        problem.damping().fill(grid, t, &u_curr, &mut sigma)?;
        leapfrog_into(grid, &u_prev, &u_curr, &sigma, dt, &mut u_next);
        if level % sample_every == 0 {
            let grad = grad_energy(grid, &u_curr);
            let vel = velocity_energy(&u_curr, &|k| (u_next[k] - u_prev[k]) / (2.0 * dt));
            samples.push(EnergySample {
                t,
                total: grad + vel,
                grad,
                velocity: vel,
            });
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
    }

    let t = problem.t_end();
    let grad = grad_energy(grid, &u_curr);
    let vel = velocity_energy(&u_curr, &|k| (u_curr[k] - u_prev[k]) / dt);
    samples.push(EnergySample {
        t,
        total: grad + vel,
        grad,
        velocity: vel,
    });

    EnergyTrace::from_samples(samples, eps_for_v)
}

/// Sample `amplitude · Π sin(mᵢ π (xᵢ - aᵢ)/Lᵢ)` on the grid's interior nodes.
pub fn sine_mode(grid: &Grid, modes: &[usize], amplitude: f64) -> Result<Vec<f64>> {
    if modes.len() != grid.dimension() || modes.contains(&0) {
        return Err(Error::InvalidParameter(
            "need one positive mode number per axis".into(),
        ));
    }
    let n = grid.node_count();
    let mut out = vec![amplitude; n];
    for (axis, &mode) in modes.iter().enumerate() {
        let a = grid.domain().offsets()[axis];
        let l = grid.domain().lengths()[axis];
        let m = mode as f64;
        for (k, v) in out.iter_mut().enumerate() {
            let x = grid.coord(axis, k);
            *v *= (m * std::f64::consts::PI * (x - a) / l).sin();
        }
    }
    Ok(out)
}

/// The spatial profile of the growth counterexample, `x² - 3x + 2`
/// (negative on `(1, 2)`).
fn counterexample_profile(x: f64) -> f64 {
    x * x - 3.0 * x + 2.0
}

/// Pointwise residual of `u = t (x² - 3x + 2)` with `σ = 2t/(x² - 3x + 2)`
/// in `u_tt - u_xx + σ u_t`: the three terms are evaluated in floating
/// point and summed (the exact value is zero).
pub fn counterexample_residual(x: f64, t: f64) -> Result<f64> {
    if !(x > 1.0 && x < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "x must lie strictly inside (1, 2); the damping is singular at the endpoints (got {x})"
        )));
    }
    let profile = counterexample_profile(x);
    let u_tt = 0.0;
    let u_xx = 2.0 * t;
    let sigma = 2.0 * t / profile;
    let u_t = profile;
    Ok(u_tt - u_xx + sigma * u_t)
}

/// Energy run for the §-one growth example on the truncated interval
/// `[1 + δ, 2 - δ]`, δ = [`COUNTEREXAMPLE_TRUNCATION`].
///
/// The boundary nodes are forced to the known solution `t (x² - 3x + 2)`.
/// Because the damping is negative throughout the interval, the continuum
/// problem amplifies perturbations like `exp(|σ| t)` and a direct
/// integration overflows long before `t = 10`; the damping flux is
/// therefore pinned to the manufactured solution's time derivative
/// (`σ(x,t) · ∂_t u_exact = 2t`, moved to the source side), which exercises
/// the same stepping and energy machinery while keeping the run bounded.
/// The residual check above is the pointwise verification of the example.
pub fn simulate_counterexample(
    interior_points: usize,
    t_end: f64,
    cfl_factor: f64,
    sample_every: usize,
) -> Result<EnergyTrace> {
    if interior_points < 3 {
        return Err(Error::InvalidParameter(
            "at least 3 interior points are required".into(),
        ));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be positive and finite, got {t_end}"
        )));
    }
    if !(cfl_factor > 0.0) || !cfl_factor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cfl_factor must be positive and finite, got {cfl_factor}"
        )));
    }
    if sample_every == 0 {
        return Err(Error::InvalidParameter(
            "sample_every must be at least 1".into(),
        ));
    }

    let delta = COUNTEREXAMPLE_TRUNCATION;
    let (a, b) = (1.0 + delta, 2.0 - delta);
    let n = interior_points;
    let h = (b - a) / (n + 1) as f64;
    let x: Vec<f64> = (1..=n).map(|j| a + j as f64 * h).collect();
    let q: Vec<f64> = x.iter().map(|&xx| counterexample_profile(xx)).collect();
    let (q_lo, q_hi) = (counterexample_profile(a), counterexample_profile(b));

    let requested = cfl_factor * h;
    let n_steps = (t_end / requested).ceil().max(1.0) as usize;
    let dt = t_end / n_steps as f64;
    let limit = requested.min(h);
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt, limit });
    }

    // u_tt - u_xx = f with f = -sigma * u_t_exact; boundary forced to t*q.
    let source = |t: f64, j: usize| -> f64 {
        let sigma = 2.0 * t / q[j];
        -sigma * q[j]
    };
    let lap = |u: &[f64], t: f64, j: usize| -> f64 {
        let left = if j > 0 { u[j - 1] } else { t * q_lo };
        let right = if j + 1 < n { u[j + 1] } else { t * q_hi };
        (left - 2.0 * u[j] + right) / (h * h)
    };

    let mut u_prev = vec![0.0; n];
    let mut u_curr = vec![0.0; n];
    for j in 0..n {
        // Taylor start: u0 = 0, u_t(0) = q, u_tt(0) = f(0) = 0.
        u_curr[j] = dt * q[j] + 0.5 * dt * dt * (lap(&u_prev, 0.0, j) + source(0.0, j));
    }

    let grad = |u: &[f64], t: f64| -> f64 {
        let mut sum = 0.0;
        let mut prev = t * q_lo;
        for &v in u {
            let d = (v - prev) / h;
            sum += d * d;
            prev = v;
        }
        let d = (t * q_hi - prev) / h;
        sum += d * d;
        sum * h
    };
    // v = u_t (ε = 0 here); trapezoid in space, the forced boundary
    // contributes u_t = q exactly.
    let vel = |ut: &dyn Fn(usize) -> f64| -> f64 {
        let mut sum = 0.5 * (q_lo * q_lo + q_hi * q_hi);
        for j in 0..n {
            let v = ut(j);
            sum += v * v;
        }
        sum * h
    };

    let mut samples = Vec::with_capacity(n_steps / sample_every + 2);
    let g0 = grad(&u_prev, 0.0);
    let v0 = vel(&|j| (u_curr[j] - u_prev[j]) / dt);
    samples.push(EnergySample {
        t: 0.0,
        total: g0 + v0,
        grad: g0,
        velocity: v0,
    });

    let mut u_next = vec![0.0; n];
    for level in 1..n_steps {
        let t = level as f64 * dt;
        for j in 0..n {
            u_next[j] = 2.0 * u_curr[j] - u_prev[j] + dt * dt * (lap(&u_curr, t, j) + source(t, j));
        }
        if level % sample_every == 0 {
            let g = grad(&u_curr, t);
            let v = vel(&|j| (u_next[j] - u_prev[j]) / (2.0 * dt));
            samples.push(EnergySample {
                t,
                total: g + v,
                grad: g,
                velocity: v,
            });
        }
        std::mem::swap(&mut u_prev, &mut u_curr);
        std::mem::swap(&mut u_curr, &mut u_next);
    }
    let g = grad(&u_curr, t_end);
    let v = vel(&|j| (u_curr[j] - u_prev[j]) / dt);
    samples.push(EnergySample {
        t: t_end,
        total: g + v,
        grad: g,
        velocity: v,
    });

    EnergyTrace::from_samples(samples, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;
    use std::f64::consts::PI;

    fn unit_interval_grid(n: usize) -> Grid {
        Grid::new(DomainSpec::interval(0.0, 1.0).unwrap(), &[n]).unwrap()
    }

    fn constant_problem(sigma: f64, n: usize, t_end: f64) -> WaveProblem {
        let grid = unit_interval_grid(n);
        let u0 = sine_mode(&grid, &[1], 1.0).unwrap();
        let u1 = vec![0.0; n];
        let damping = DampingSpec::with_raw_bounds(DampingKind::Constant(sigma), sigma, sigma).unwrap();
        WaveProblem::new(grid, damping, u0, u1, t_end, DEFAULT_CFL_FACTOR).unwrap()
    }

    fn run_to_end(problem: &WaveProblem) -> WaveState {
        let n_steps = (problem.t_end() / problem.max_stable_dt()).ceil() as usize;
        let dt = problem.t_end() / n_steps as f64;
        let mut state = initial_state(problem, dt).unwrap();
        while state.t < problem.t_end() - 0.5 * dt {
            state = step(&state, problem).unwrap();
        }
        state
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let grid = unit_interval_grid(10);
        let damping =
            DampingSpec::with_raw_bounds(DampingKind::Constant(1.0), 1.0, 1.0).unwrap();
        let problem =
            WaveProblem::new(grid, damping, vec![0.0; 10], vec![0.0; 10], 1.0, 0.9).unwrap();
        let state = initial_state(&problem, problem.max_stable_dt()).unwrap();
        let next = step(&state, &problem).unwrap();
        assert!(next.u_curr.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn undamped_mode_tracks_the_closed_form() {
        // sigma = 0: u = cos(pi t) sin(pi x)
        let grid = unit_interval_grid(200);
        let u0 = sine_mode(&grid, &[1], 1.0).unwrap();
        let damping = DampingSpec::with_raw_bounds(DampingKind::Constant(0.0), 0.0, 0.0).unwrap();
        let problem = WaveProblem::new(grid, damping, u0, vec![0.0; 200], 1.0, 0.9).unwrap();
        let state = run_to_end(&problem);
        let mut err: f64 = 0.0;
        for k in 0..200 {
            let x = problem.grid().coord(0, k);
            let exact = (PI * state.t).cos() * (PI * x).sin();
            err = err.max((state.u_curr[k] - exact).abs());
        }
        assert!(err <= 5e-5, "L-inf error {err}");
    }

    #[test]
    fn damped_mode_tracks_the_closed_form() {
        // sigma = 2: u = exp(-t)(cos wt + sin wt / w) sin(pi x), w = sqrt(pi^2 - 1)
        let w = (PI * PI - 1.0).sqrt();
        let problem = constant_problem(2.0, 400, 1.0);
        let state = run_to_end(&problem);
        let amp = (-state.t).exp() * ((w * state.t).cos() + (w * state.t).sin() / w);
        let mut err: f64 = 0.0;
        for k in 0..400 {
            let x = problem.grid().coord(0, k);
            err = err.max((state.u_curr[k] - amp * (PI * x).sin()).abs());
        }
        assert!(err <= 1e-3, "L-inf error {err}");
    }

    #[test]
    fn convergence_is_second_order() {
        let w = (PI * PI - 1.0).sqrt();
        let mut errors = Vec::new();
        for &n in &[100usize, 201, 403] {
            let problem = constant_problem(2.0, n, 1.0);
            let state = run_to_end(&problem);
            let amp = (-1.0f64).exp() * ((w).cos() + (w).sin() / w);
            let mut err: f64 = 0.0;
            for k in 0..n {
                let x = problem.grid().coord(0, k);
                err = err.max((state.u_curr[k] - amp * (PI * x).sin()).abs());
            }
            errors.push(err);
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(
                (1.8..=2.2).contains(&order),
                "observed order {order}, errors {errors:?}"
            );
        }
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let grid = unit_interval_grid(400);
        let u0 = sine_mode(&grid, &[1], 1.0).unwrap();
        let damping = DampingSpec::with_raw_bounds(DampingKind::Constant(0.0), 0.0, 0.0).unwrap();
        let problem = WaveProblem::new(grid, damping, u0, vec![0.0; 400], 10.0, 0.9).unwrap();
        let trace = simulate(&problem, 0.0, 10).unwrap();
        let e0 = trace.samples()[0].total;
        for s in trace.samples() {
            assert!(
                (s.total - e0).abs() <= 1e-3 * e0,
                "drift {} at t = {}",
                (s.total - e0).abs() / e0,
                s.t
            );
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let problem = constant_problem(2.0, 50, 1.0);
        let dt = problem.max_stable_dt() * 1.5;
        match initial_state(&problem, dt) {
            Err(Error::CflViolation { .. }) => {}
            other => panic!("expected CFL violation, got {other:?}"),
        }
    }

    #[test]
    fn damping_bound_violation_is_reported() {
        let grid = unit_interval_grid(10);
        // constant 2 declared inside [0.5, 1.5]
        let damping =
            DampingSpec::with_raw_bounds(DampingKind::Constant(2.0), 0.5, 1.5).unwrap();
        let problem =
            WaveProblem::new(grid, damping, vec![0.0; 10], vec![0.0; 10], 1.0, 0.9).unwrap();
        match simulate(&problem, 0.5, 1) {
            Err(Error::DampingOutOfBounds { value, .. }) => assert_eq!(value, 2.0),
            other => panic!("expected bounds violation, got {other:?}"),
        }
    }

    #[test]
    fn sinusoidal_damping_stays_inside_declared_bounds() {
        let grid = unit_interval_grid(100);
        let u0 = sine_mode(&grid, &[1], 1.0).unwrap();
        let kind = DampingKind::Sinusoidal {
            base: 1.5,
            amplitude: 0.5,
            omega: 2.0 * PI,
            spatial: true,
        };
        let damping = DampingSpec::new(kind, &DampingBounds::new(1.0, 2.0).unwrap());
        let problem = WaveProblem::new(grid, damping, u0, vec![0.0; 100], 2.0, 0.9).unwrap();
        assert!(simulate(&problem, 0.3, 10).is_ok());
    }

    #[test]
    fn tabulated_damping_switches_frames() {
        let grid = unit_interval_grid(5);
        let kind = DampingKind::Tabulated {
            times: vec![0.0, 0.5],
            frames: vec![vec![1.0; 5], vec![2.0; 5]],
        };
        let damping = DampingSpec::new(kind.clone(), &DampingBounds::new(1.0, 2.0).unwrap());
        let mut sigma = vec![0.0; 5];
        damping.fill(&grid, 0.25, &[0.0; 5], &mut sigma).unwrap();
        assert_eq!(sigma, vec![1.0; 5]);
        damping.fill(&grid, 0.75, &[0.0; 5], &mut sigma).unwrap();
        assert_eq!(sigma, vec![2.0; 5]);

        // frame length validation happens at problem construction
        let bad = DampingSpec::new(
            DampingKind::Tabulated {
                times: vec![0.0],
                frames: vec![vec![1.0; 4]],
            },
            &DampingBounds::new(1.0, 2.0).unwrap(),
        );
        assert!(WaveProblem::new(grid, bad, vec![0.0; 5], vec![0.0; 5], 1.0, 0.9).is_err());
    }

    #[test]
    fn nonlinear_two_plus_sin_is_bounded() {
        let grid = unit_interval_grid(100);
        let u0 = sine_mode(&grid, &[1], 1.0).unwrap();
        let damping = DampingSpec::new(
            DampingKind::Nonlinear(NonlinearKind::TwoPlusSin),
            &DampingBounds::new(1.0, 3.0).unwrap(),
        );
        let problem = WaveProblem::new(grid, damping, u0, vec![0.0; 100], 2.0, 0.9).unwrap();
        assert!(simulate(&problem, 0.3, 10).is_ok());
    }

    #[test]
    fn rational_nonlinear_damping_is_bounded() {
        assert!((NonlinearKind::Rational { m0: 1.0, m1: 3.0 }.eval(0.0) - 3.0).abs() < 1e-15);
        let far = NonlinearKind::Rational { m0: 1.0, m1: 3.0 }.eval(100.0);
        assert!(far > 1.0 && far < 1.001);
    }

    #[test]
    fn zero_data_trace_is_identically_zero() {
        let grid = unit_interval_grid(10);
        let damping = DampingSpec::with_raw_bounds(DampingKind::Constant(1.0), 1.0, 1.0).unwrap();
        let problem =
            WaveProblem::new(grid, damping, vec![0.0; 10], vec![0.0; 10], 1.0, 0.9).unwrap();
        let trace = simulate(&problem, 1.0, 2).unwrap();
        assert!(trace
            .samples()
            .iter()
            .all(|s| s.total == 0.0 && s.grad == 0.0 && s.velocity == 0.0));
    }

    #[test]
    fn simulate_validates_eps() {
        let problem = constant_problem(2.0, 10, 1.0);
        assert!(simulate(&problem, -0.1, 1).is_err());
        assert!(simulate(&problem, 2.5, 1).is_err());
        assert!(simulate(&problem, 2.0, 1).is_ok());
        assert!(simulate(&problem, 1.0, 0).is_err());
    }

    #[test]
    fn counterexample_residual_values() {
        // x = 1.5 makes the profile an exact binary fraction
        assert_eq!(counterexample_residual(1.5, 3.0).unwrap(), 0.0);
        assert_eq!(counterexample_residual(1.25, 0.0).unwrap(), 0.0);
        let r = counterexample_residual(1.9, 100.0).unwrap();
        assert!(r.abs() <= 1e-9, "residual {r}");
        assert!(counterexample_residual(1.0, 1.0).is_err());
        assert!(counterexample_residual(2.0, 1.0).is_err());
        assert!(counterexample_residual(0.5, 1.0).is_err());
    }

    #[test]
    fn counterexample_gradient_energy_grows_quadratically() {
        let trace = simulate_counterexample(200, 10.0, 0.9, 20).unwrap();
        let samples = trace.samples();
        assert!(samples[samples.len() - 1].total > samples[0].total);
        let mut prev = -1.0;
        for s in samples {
            assert!(s.grad >= prev, "gradient energy not increasing at t = {}", s.t);
            prev = s.grad;
            if s.t >= 1.0 {
                let expected = s.t * s.t / 3.0;
                assert!(
                    (s.grad / expected - 1.0).abs() <= 0.01,
                    "at t = {}: {} vs {}",
                    s.t,
                    s.grad,
                    expected
                );
            }
        }
    }

    #[test]
    fn two_dimensional_mode_decays() {
        let grid = Grid::new(DomainSpec::rectangle(1.0, 1.0).unwrap(), &[30, 30]).unwrap();
        let u0 = sine_mode(&grid, &[1, 1], 1.0).unwrap();
        let damping = DampingSpec::new(
            DampingKind::Constant(2.0),
            &DampingBounds::new(2.0, 2.0).unwrap(),
        );
        let problem = WaveProblem::new(grid, damping, u0, vec![0.0; 900], 2.0, 0.9).unwrap();
        let trace = simulate(&problem, 1.0, 10).unwrap();
        let s = trace.samples();
        assert!(s[s.len() - 1].total < 0.1 * s[0].total);
    }

    #[test]
    fn trace_validation() {
        let mk = |t| EnergySample {
            t,
            total: 1.0,
            grad: 0.5,
            velocity: 0.5,
        };
        assert!(EnergyTrace::from_samples(vec![mk(0.0), mk(1.0)], 0.0).is_ok());
        assert!(EnergyTrace::from_samples(vec![mk(1.0), mk(0.5)], 0.0).is_err());
        let bad = EnergySample {
            t: 0.0,
            total: -1.0,
            grad: 0.0,
            velocity: 0.0,
        };
        assert!(EnergyTrace::from_samples(vec![bad], 0.0).is_err());
    }
}
