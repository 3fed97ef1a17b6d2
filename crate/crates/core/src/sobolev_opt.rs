//! Projected descent for the perturbed Sobolev quotient
//! `A_eps(v) = int v P v - eps Q int v^2` over nonnegative zonal `v` with
//! `||v||_{2n/(n-2s)} = 1`, and random checks of the sharp inequality.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::ProblemParams;
use crate::sphere_spectral::{
    analyze_with_tail, lp_norm, make_grid, multipliers, quadratic_form, surface_area, synthesize, SpectralCoeffs,
    SphereFunction, ZonalGrid,
};

/// `Q |S^n|^{(alpha-1)/(alpha+1)}`.
pub fn sharp_constant(params: &ProblemParams) -> f64 {
    let alpha = params.alpha();
    params.q() * surface_area(params.n()).powf((alpha - 1.0) / (alpha + 1.0))
}

/// `(1 - eps) Q |S^n|^{2s/n}`, the value of the constrained infimum.
pub fn closed_form_s_eps(params: &ProblemParams) -> f64 {
    (1.0 - params.epsilon()) * params.q() * surface_area(params.n()).powf(2.0 * params.s() / params.dim())
}

/// `sum_l (alpha(l) - eps Q) c_l^2`.
pub fn perturbed_objective(c: &SpectralCoeffs, params: &ProblemParams) -> Result<f64> {
    let shift = params.epsilon() * params.q();
    Ok(quadratic_form(c, params)? - shift * c.energy())
}

/// Starting point of [`minimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// The feasible constant.
    Constant,
    /// Constant plus 10% random band-limited noise.
    Noise { seed: u64 },
    /// The sphere image of the bubble of scale `b` concentrated at the pole.
    Bubble { b: f64 },
    Coeffs(SpectralCoeffs),
}

/// Scaling of the spectral gradient before the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preconditioner {
    /// `g_l = 2 (alpha(l) - eps Q) c_l`.
    None,
    /// Gradient of the scale-invariant quotient `A_eps(c) / ||v||_{p*}^2`,
    /// divided by `alpha(l)`: the steepest direction in the `H^s` inner product.
    Sobolev,
}

/// Step-size control of [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Defaults to `1e-2 / alpha(L)` without preconditioning and `1e-2` with it.
    pub initial_step: Option<f64>,
    pub backtrack: f64,
    pub growth: f64,
    pub grow_after: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub preconditioner: Preconditioner,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            initial_step: None,
            backtrack: 0.5,
            growth: 1.1,
            grow_after: 10,
            max_iter: 100_000,
            rel_tol: 1e-10,
            preconditioner: Preconditioner::Sobolev,
        }
    }
}

impl Schedule {
    pub fn plain() -> Self {
        Self {
            preconditioner: Preconditioner::None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub params: ProblemParams,
    pub coeffs: SpectralCoeffs,
    pub objective: f64,
    pub step: f64,
    pub iteration: usize,
    pub history: Vec<f64>,
    pub converged: bool,
}

impl OptimizerState {
    pub fn rel_error(&self) -> f64 {
        let exact = closed_form_s_eps(&self.params);
        (self.objective - exact).abs() / exact
    }
}

/// Lower bound on the smallest step before backtracking gives up.
const MIN_STEP: f64 = 1e-300;

/// Clamp, renormalize to unit critical norm, re-analyze, then rescale once
/// more so that the band-limited iterate itself has unit norm.
fn project(values: Vec<f64>, grid: &Arc<ZonalGrid>, degree: usize, p: f64) -> Result<(SpectralCoeffs, SphereFunction)> {
    let clamped = SphereFunction::new(Arc::clone(grid), values)?.clamped_nonnegative();
    let norm = lp_norm(&clamped, p)?;
    if !(norm > 0.0) {
        return Err(domain("minimize", "iterate vanished after clamping"));
    }
    let normalized = SphereFunction::new(Arc::clone(grid), clamped.values().iter().map(|v| v / norm).collect())?;
    let (coeffs, _) = analyze_with_tail(&normalized, degree)?;
    let synth = synthesize(&coeffs, grid)?;
    let norm = lp_norm(&synth.clamped_nonnegative(), p)?;
    let coeffs = coeffs.scaled(1.0 / norm);
    let synth = synthesize(&coeffs, grid)?;
    Ok((coeffs, synth))
}

fn initial_values(init: &Init, params: &ProblemParams, grid: &Arc<ZonalGrid>, degree: usize) -> Result<Vec<f64>> {
    let n = params.n();
    Ok(match init {
        Init::Constant => vec![1.0; grid.node_count()],
        Init::Noise { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let band = degree.min(8);
            let mut noise = SpectralCoeffs::zeros(n, degree);
            for c in &mut noise.values_mut()[1..=band] {
                *c = rng.gen_range(-1.0..1.0);
            }
            let eta = synthesize(&noise, grid)?;
            let peak = eta.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if peak > 0.0 { 0.1 / peak } else { 0.0 };
            eta.values().iter().map(|v| 1.0 + scale * v).collect()
        }
        Init::Bubble { b } => {
            if !(*b > 0.0) {
                return Err(domain("minimize", format!("bubble scale must be positive, got {b}")));
            }
            let p = params.kernel_power();
            grid.nodes()
                .iter()
                .map(|&t| (2.0 / (b * b * (1.0 + t) + 1.0 - t)).powf(0.5 * p))
                .collect()
        }
        Init::Coeffs(c) => {
            if c.n() != n {
                return Err(domain("minimize", "initial coefficients live on another sphere"));
            }
            let mut padded = SpectralCoeffs::zeros(n, degree);
            for (dst, src) in padded.values_mut().iter_mut().zip(c.values()) {
                *dst = *src;
            }
            synthesize(&padded, grid)?.into_values()
        }
    })
}

/// Projected gradient descent on the constraint set, with backtracking.
///
/// Returns [`Error::NonConvergence`] if the iteration cap is reached or the
/// step collapses; the partial state is logged at warn level.
pub fn minimize(
    params: &ProblemParams,
    degree: usize,
    nodes: usize,
    init: &Init,
    schedule: &Schedule,
) -> Result<OptimizerState> {
    let eps = params.epsilon();
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("minimize needs 0 < eps < 1, got {eps}")));
    }
    if !params.is_critical() {
        return Err(Error::InvalidParams("minimize needs the critical exponent".into()));
    }
    let grid = Arc::new(make_grid(params.n(), nodes)?);
    if degree + 1 > nodes {
        return Err(domain("minimize", format!("degree {degree} needs more than {nodes} nodes")));
    }
    let p = params.critical_lp();
    let mult = multipliers(params, degree);
    let shift = eps * params.q();
    let diag: Vec<f64> = mult.iter().map(|a| a - shift).collect();
    let scale: Vec<f64> = match schedule.preconditioner {
        Preconditioner::None => vec![1.0; degree + 1],
        Preconditioner::Sobolev => mult.iter().map(|a| 1.0 / a).collect(),
    };
    let objective_of = |c: &SpectralCoeffs| -> f64 { c.values().iter().zip(&diag).map(|(c, d)| d * c * c).sum() };

    let (mut coeffs, _) = project(initial_values(init, params, &grid, degree)?, &grid, degree, p)?;
    let mut objective = objective_of(&coeffs);
    let mut step = schedule.initial_step.unwrap_or(match schedule.preconditioner {
        Preconditioner::None => 1e-2 / mult[degree],
        Preconditioner::Sobolev => 1e-2,
    });
    let mut history = vec![objective];
    let mut streak = 0;
    let mut candidate = vec![0.0; degree + 1];

    for iteration in 1..=schedule.max_iter {
        let mut grad: Vec<f64> = coeffs.values().iter().zip(&diag).map(|(c, d)| 2.0 * d * c).collect();
        if schedule.preconditioner == Preconditioner::Sobolev {
            // at unit norm, grad ||v||_p = (int v^{p-1} Y_l)_l
            let v = synthesize(&coeffs, &grid)?.clamped_nonnegative();
            let powered = v.values().iter().map(|x| x.powf(p - 1.0)).collect();
            let (dn, _) = analyze_with_tail(&SphereFunction::new(Arc::clone(&grid), powered)?, degree)?;
            for (g, d) in grad.iter_mut().zip(dn.values()) {
                *g -= 2.0 * objective * d;
            }
        }
        loop {
            for (l, slot) in candidate.iter_mut().enumerate() {
                *slot = coeffs.values()[l] - step * scale[l] * grad[l];
            }
            let trial = synthesize(&SpectralCoeffs::new(params.n(), candidate.clone())?, &grid)?;
            let (next, _) = project(trial.into_values(), &grid, degree, p)?;
            let value = objective_of(&next);
            if value < objective {
                let change = (objective - value).abs() / value.abs().max(f64::MIN_POSITIVE);
                coeffs = next;
                objective = value;
                history.push(value);
                streak += 1;
                if streak >= schedule.grow_after {
                    step *= schedule.growth;
                    streak = 0;
                }
                if change < schedule.rel_tol {
                    return Ok(OptimizerState {
                        params: *params,
                        coeffs,
                        objective,
                        step,
                        iteration,
                        history,
                        converged: true,
                    });
                }
                break;
            }
            streak = 0;
            step *= schedule.backtrack;
            if step < MIN_STEP || value == objective {
                // no representable decrease: the iterate is stationary
                return Ok(OptimizerState {
                    params: *params,
                    coeffs,
                    objective,
                    step,
                    iteration,
                    history,
                    converged: true,
                });
            }
        }
    }
    let last_change = match history.as_slice() {
        [.., a, b] => (a - b).abs() / b.abs(),
        _ => f64::NAN,
    };
    log::warn!(
        "minimize: cap of {} iterations reached at objective {objective:.17e}",
        schedule.max_iter
    );
    Err(Error::NonConvergence {
        op: "minimize",
        iterations: schedule.max_iter,
        last_change,
    })
}

/// Worst margins found by [`verify_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// `min (quotient - sharp_constant)` over the trials.
    pub min_margin: f64,
    /// Margin of the constant function.
    pub constant_margin: f64,
    /// `min (||v||_{p*}^2 |S^n|^{2/(alpha+1) - 2/p*} - ||v||_{alpha+1}^2)`, the
    /// Holder step from the critical to the subcritical norm.
    pub holder_margin: f64,
    pub trials: usize,
}

fn random_trial(rng: &mut ChaCha8Rng, n: u32, grid: &Arc<ZonalGrid>, degree: usize) -> Result<SpectralCoeffs> {
    let band = rng.gen_range(1..=16usize).min(degree);
    let amp = rng.gen_range(0.0..2.0);
    let mut c = SpectralCoeffs::zeros(n, degree);
    c.values_mut()[0] = 1.0;
    for l in 1..=band {
        c.values_mut()[l] = amp * rng.gen_range(-1.0..1.0) / (l as f64).sqrt();
    }
    let clamped = synthesize(&c, grid)?.clamped_nonnegative();
    // a square basis interpolates exactly, so the coefficients describe the clamped samples
    Ok(analyze_with_tail(&clamped, grid.node_count() - 1)?.0)
}

fn quotient(c: &SpectralCoeffs, grid: &Arc<ZonalGrid>, params: &ProblemParams, power: f64) -> Result<(f64, SphereFunction)> {
    let v = synthesize(c, grid)?.clamped_nonnegative();
    let norm = lp_norm(&v, power)?;
    Ok((quadratic_form(c, params)? / (norm * norm), v))
}

/// Random nonnegative zonal trial functions against the sharp inequality.
pub fn verify_inequality(params: &ProblemParams, trials: usize, seed: u64) -> Result<InequalityReport> {
    verify_inequality_on(params, trials, seed, crate::sphere_spectral::DEFAULT_NODES)
}

pub fn verify_inequality_on(params: &ProblemParams, trials: usize, seed: u64, nodes: usize) -> Result<InequalityReport> {
    let grid = Arc::new(make_grid(params.n(), nodes)?);
    let degree = nodes - 1;
    let sharp = sharp_constant(params);
    let power = params.alpha() + 1.0;
    let critical = params.critical_lp();
    let holder_factor = surface_area(params.n()).powf(2.0 / power - 2.0 / critical);

    let mut constant = SpectralCoeffs::zeros(params.n(), degree);
    constant.values_mut()[0] = 1.0;
    let constant_margin = quotient(&constant, &grid, params, power)?.0 - sharp;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut holder_margin = f64::INFINITY;
    for _ in 0..trials {
        let c = random_trial(&mut rng, params.n(), &grid, degree)?;
        let (q, v) = quotient(&c, &grid, params, power)?;
        min_margin = min_margin.min(q - sharp);
        let low = lp_norm(&v, power)?;
        let high = lp_norm(&v, critical)?;
        holder_margin = holder_margin.min((high * high * holder_factor - low * low) / (low * low));
    }
    Ok(InequalityReport {
        min_margin,
        constant_margin,
        holder_margin,
        trials,
    })
}

/// Lowest perturbed objective over random feasible `v`, with the floor
/// `-(C12 + eps Q) |S^n|^{2s/n}` it is compared to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub min_objective: f64,
    /// Measured `C12 = max(0, -min int v P v / |S^n|^{2s/n})`.
    pub c12: f64,
    pub floor: f64,
}

pub fn coercivity_floor(params: &ProblemParams, trials: usize, seed: u64, nodes: usize) -> Result<CoercivityReport> {
    let grid = Arc::new(make_grid(params.n(), nodes)?);
    let degree = nodes - 1;
    let area_term = surface_area(params.n()).powf(2.0 * params.s() / params.dim());
    let p = params.critical_lp();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_objective = f64::INFINITY;
    let mut min_form = f64::INFINITY;
    for _ in 0..trials {
        let c = random_trial(&mut rng, params.n(), &grid, degree)?;
        let norm = lp_norm(&synthesize(&c, &grid)?.clamped_nonnegative(), p)?;
        let c = c.scaled(1.0 / norm);
        min_objective = min_objective.min(perturbed_objective(&c, params)?);
        min_form = min_form.min(quadratic_form(&c, params)?);
    }
    let c12 = (-min_form / area_term).max(0.0);
    Ok(CoercivityReport {
        min_objective,
        c12,
        floor: -(c12 + params.epsilon() * params.q()) * area_term,
    })
}
