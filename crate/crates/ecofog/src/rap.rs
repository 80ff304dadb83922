//! Resource allocation at a fixed task allocation.
//!
//! For a fixed `x` the energy is convex in the resource vector, and the
//! time constraint `TH * T_DAG - 1 <= 0` is handled through a Lagrange
//! multiplier. [`solve_rap`] runs projected primal-dual iterations: gradient
//! descent on the resources, gradient ascent on the multiplier.
//!
//! The iterations run in a scaled frame where every resource is expressed
//! as a fraction of its maximum and the Lagrangian is divided by the energy
//! at maximal resources. The clipped step law of [`step_sizes`] is applied
//! in that frame, multiplied by [`RapConfig::gain`].

use serde::{Deserialize, Serialize};

use crate::dag::ApplicationDag;
use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::eval::CompiledAllocation;
use crate::platform::{max_resource_vector, Ecosystem};
use crate::timing::{ResourceAllocation, TaskAllocation, DEFAULT_R_EXP};

/// Relative tolerance on the time constraint for an iterate to count as
/// feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Previous solution used to start the iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    /// Resource vector.
    pub rs: ResourceAllocation,
    /// Multiplier in J.
    pub lambda: f64,
}

/// Parameters of [`solve_rap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RapConfig {
    /// Number of primal-dual iterations.
    pub i_max: usize,
    /// Clipping factor of the step law.
    pub a_max: f64,
    /// Exponent of the smooth maximum.
    pub r_exp: f64,
    /// Lower bound of every used resource, as a fraction of its maximum.
    pub floor_eps: f64,
    /// Multiplier applied to the scaled step sizes.
    pub gain: f64,
    /// Optional starting point.
    pub warm_start: Option<WarmStart>,
    /// Whether to record the per-iteration trace.
    pub record_trace: bool,
    /// Optional early exit once the scaled projected-gradient norm falls
    /// below this value.
    pub grad_tol: Option<f64>,
}

impl Default for RapConfig {
    fn default() -> Self {
        RapConfig {
            i_max: 600,
            a_max: 1e-7,
            r_exp: DEFAULT_R_EXP,
            floor_eps: 1e-3,
            gain: 1e6,
            warm_start: None,
            record_trace: true,
            grad_tol: None,
        }
    }
}

impl RapConfig {
    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.i_max < 1 {
            return Err(Error::Parameter("i_max must be at least 1".into()));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(Error::Parameter(format!("a_max must be positive, got {}", self.a_max)));
        }
        if !(self.floor_eps > 0.0 && self.floor_eps < 1.0) {
            return Err(Error::Parameter(format!("floor_eps must lie in (0, 1), got {}", self.floor_eps)));
        }
        if !(self.r_exp >= 1.0) {
            return Err(Error::Parameter(format!("r_exp must be at least 1, got {}", self.r_exp)));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::Parameter(format!("gain must be positive, got {}", self.gain)));
        }
        Ok(())
    }
}

/// State after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Iteration index, starting at 1.
    pub m: usize,
    /// Objective at the iterate, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_tot: f64,
    /// Network energy at the iterate, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_net: f64,
    /// Multiplier after the iteration, in J.
    #[serde(with = "crate::serde_inf")]
    pub lambda: f64,
}

/// Outcome of [`solve_rap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RapResult {
    /// Lowest-energy feasible resource vector found; unused entries are 0.
    pub rs: ResourceAllocation,
    /// Energy decomposition at `rs`.
    pub energy: EnergyBreakdown,
    /// Multiplier after the last iteration, in J.
    #[serde(with = "crate::serde_inf")]
    pub lambda: f64,
    /// Whether the allocation admits a resource vector meeting the time limit.
    pub feasible: bool,
    /// Per-iteration trace, empty when disabled.
    pub traces: Vec<TracePoint>,
    /// Resource vector after the last iteration, for warm starts.
    pub last_rs: ResourceAllocation,
    /// Number of iterations run.
    pub iterations: usize,
}

impl RapResult {
    /// Result for an allocation that cannot meet the time limit.
    pub fn infeasible(len: usize) -> Self {
        RapResult {
            rs: ResourceAllocation(vec![f64::INFINITY; len]),
            energy: EnergyBreakdown::infinite(),
            lambda: 0.0,
            feasible: false,
            traces: Vec::new(),
            last_rs: ResourceAllocation(vec![f64::INFINITY; len]),
            iterations: 0,
        }
    }

    /// Objective value, infinite when infeasible.
    pub fn e_tot(&self) -> f64 {
        self.energy.e_tot
    }

    /// Warm start continuing from the last iterate.
    pub fn warm_start(&self) -> Option<WarmStart> {
        self.feasible.then(|| WarmStart { rs: self.last_rs.clone(), lambda: self.lambda })
    }
}

/// Whether some resource vector meets the time limit, decided at maximal
/// resources.
pub fn rap_feasible(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation) -> bool {
    let c = CompiledAllocation::new(dag, eco, x, DEFAULT_R_EXP);
    feasible_at(&c, &max_resource_vector(eco).0)
}

fn feasible_at(c: &CompiledAllocation, y: &[f64]) -> bool {
    let t = c.time(y);
    t.is_finite() && c.th_min() * t - 1.0 <= FEASIBILITY_TOL
}

/// Lagrangian `E_TOT + lambda * (TH * T_DAG - 1)` with the smoothed DAG
/// time in every time-dependent term.
pub fn lagrangian(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, rs: &ResourceAllocation, lambda: f64) -> f64 {
    CompiledAllocation::new(dag, eco, x, DEFAULT_R_EXP).evaluate(&rs.0, lambda, None).lagrangian
}

/// Gradient of [`lagrangian`].
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGradient {
    /// Partial derivatives: one per resource entry, then the multiplier.
    pub values: Vec<f64>,
    /// Whether some used resource was below its floor and was raised to it
    /// before differentiating.
    pub clamped: bool,
}

/// Analytic gradient of [`lagrangian`] with respect to `(rs, lambda)`.
///
/// Used resources below `1e-3` of their maximum are raised to that floor
/// first, and the result is flagged.
pub fn lagrangian_gradient(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    lambda: f64,
) -> LagrangianGradient {
    let c = CompiledAllocation::new(dag, eco, x, DEFAULT_R_EXP);
    let floor = RapConfig::default().floor_eps;
    let max = max_resource_vector(eco);
    let mut y = rs.0.clone();
    let mut clamped = false;
    for (l, &on) in c.active().iter().enumerate() {
        if on && y[l] < floor * max.0[l] {
            y[l] = floor * max.0[l];
            clamped = true;
        }
    }
    let mut values = vec![0.0; y.len() + 1];
    let ev = c.evaluate(&y, lambda, Some(&mut values[..y.len()]));
    values[y.len()] = ev.dl_dlambda;
    LagrangianGradient { values, clamped }
}

/// Central finite differences of [`lagrangian`] with relative step `h`.
/// Entries of unused resources are 0.
pub fn finite_difference_gradient(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    lambda: f64,
    h: f64,
) -> Vec<f64> {
    let c = CompiledAllocation::new(dag, eco, x, DEFAULT_R_EXP);
    let l_at = |y: &[f64], lam: f64| c.evaluate(y, lam, None).lagrangian;
    let mut out = vec![0.0; rs.0.len() + 1];
    let mut y = rs.0.clone();
    for l in 0..y.len() {
        if !c.active()[l] {
            continue;
        }
        let step = h * y[l].abs().max(1.0);
        let orig = y[l];
        y[l] = orig + step;
        let up = l_at(&y, lambda);
        y[l] = orig - step;
        let down = l_at(&y, lambda);
        y[l] = orig;
        out[l] = (up - down) / (2.0 * step);
    }
    let step = h * lambda.abs().max(1.0);
    out[rs.0.len()] = (l_at(&y, lambda + step) - l_at(&y, lambda - step)) / (2.0 * step);
    out
}

/// Clipped step sizes: `psi_l = max(a, min(a * y_max_l, y_l^2))` for every
/// resource and `xi = max(a, min(a * max_l y_max_l, lambda^2))` for the
/// multiplier.
pub fn step_sizes(y: &[f64], y_max: &[f64], lambda: f64, a_max: f64) -> (Vec<f64>, f64) {
    let psi = y.iter().zip(y_max).map(|(&v, &m)| a_max.max((a_max * m).min(v * v))).collect();
    let big = y_max.iter().copied().fold(0.0, f64::max);
    let xi = a_max.max((a_max * big).min(lambda * lambda));
    (psi, xi)
}

/// Solves the resource allocation problem for `x`.
///
/// Returns an infeasible result when the time limit cannot be met even at
/// maximal resources, and [`Error::Numerical`] if a gradient turns NaN.
pub fn solve_rap(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, config: &RapConfig) -> Result<RapResult> {
    config.validate()?;
    let c = CompiledAllocation::new(dag, eco, x, config.r_exp);
    solve_compiled(dag, eco, x, &c, config)
}

fn solve_compiled(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    c: &CompiledAllocation,
    config: &RapConfig,
) -> Result<RapResult> {
    let len = eco.rs_len();
    let y_max = max_resource_vector(eco).0;
    if !feasible_at(c, &y_max) {
        return Ok(RapResult::infeasible(len));
    }
    let active = c.active();
    let lo: Vec<f64> = (0..len).map(|l| if active[l] { config.floor_eps * y_max[l] } else { 0.0 }).collect();
    let hi: Vec<f64> = (0..len).map(|l| if active[l] { y_max[l] } else { 0.0 }).collect();
    let ev_max = c.evaluate(&hi, 0.0, None);
    let e_ref = ev_max.e_tot.max(f64::MIN_POSITIVE);

    let (mut y, mut lambda) = match &config.warm_start {
        Some(w) if w.rs.0.len() == len => {
            let y: Vec<f64> = (0..len)
                .map(|l| {
                    let v = w.rs.0[l];
                    if !active[l] {
                        0.0
                    } else if !(v >= lo[l]) {
                        hi[l]
                    } else {
                        v.min(hi[l])
                    }
                })
                .collect();
            (y, if w.lambda.is_finite() { w.lambda.max(0.0) } else { 0.0 })
        }
        _ => (hi.clone(), 0.0),
    };

    let mut best_y = hi.clone();
    let mut best_e = ev_max.e_tot;
    let mut grad = vec![0.0; len];
    let mut ev = c.evaluate(&y, lambda, Some(&mut grad));
    if c.th_min() * ev.t_exact - 1.0 <= FEASIBILITY_TOL && ev.e_tot < best_e {
        best_e = ev.e_tot;
        best_y.clone_from(&y);
    }
    let unit = vec![1.0; len];
    let mut traces = Vec::with_capacity(if config.record_trace { config.i_max } else { 0 });
    let mut iterations = 0;
    for m in 1..=config.i_max {
        if grad.iter().any(|g| g.is_nan()) {
            return Err(Error::Numerical(format!(
                "NaN in the Lagrangian gradient at iteration {m} for allocation {x}; check the power exponents"
            )));
        }
        let u: Vec<f64> = (0..len).map(|l| if hi[l] > 0.0 { y[l] / hi[l] } else { 0.0 }).collect();
        let (psi, xi) = step_sizes(&u, &unit, lambda / e_ref, config.a_max);
        let mut pg_norm = 0.0f64;
        for l in 0..len {
            if !active[l] {
                continue;
            }
            let scaled = hi[l] * grad[l] / e_ref;
            let next = (y[l] - config.gain * psi[l] * hi[l] * scaled).clamp(lo[l], hi[l]);
            pg_norm = pg_norm.max(((next - y[l]) / hi[l]).abs() / (config.gain * psi[l]));
            y[l] = next;
        }
        let lambda_next = (lambda + config.gain * xi * e_ref * ev.dl_dlambda).max(0.0);
        pg_norm = pg_norm.max(((lambda_next - lambda) / e_ref).abs() / (config.gain * xi));
        lambda = lambda_next;

        ev = c.evaluate(&y, lambda, Some(&mut grad));
        iterations = m;
        if config.record_trace {
            traces.push(TracePoint { m, e_tot: ev.e_tot, e_net: ev.e_net, lambda });
        }
        if c.th_min() * ev.t_exact - 1.0 <= FEASIBILITY_TOL && ev.e_tot < best_e {
            best_e = ev.e_tot;
            best_y.clone_from(&y);
        }
        if config.grad_tol.is_some_and(|tol| pg_norm < tol) {
            break;
        }
    }

    if !feasible_at(c, &y) {
        let polished = pull_to_feasible(c, &y, &hi);
        let e = c.evaluate(&polished, 0.0, None).e_tot;
        if e < best_e {
            best_y = polished;
        }
    }
    let rs = ResourceAllocation(best_y);
    let energy = total_energy(dag, eco, x, &rs);
    Ok(RapResult { rs, energy, lambda, feasible: true, traces, last_rs: ResourceAllocation(y), iterations })
}

/// Smallest move from `y` toward `hi` along the segment that meets the time
/// limit, found by bisection.
fn pull_to_feasible(c: &CompiledAllocation, y: &[f64], hi: &[f64]) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> { y.iter().zip(hi).map(|(&a, &b)| a + t * (b - a)).collect() };
    let (mut lo_t, mut hi_t) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo_t + hi_t);
        if feasible_at(c, &at(mid)) {
            hi_t = mid;
        } else {
            lo_t = mid;
        }
    }
    at(hi_t)
}
