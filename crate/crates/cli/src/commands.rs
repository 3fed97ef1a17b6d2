use std::fmt;

use gjms_core::conformal::Bubble;
use gjms_core::moving_spheres::lambda_bar;
use gjms_core::riesz::verify_integral_equation;
use gjms_core::sobolev_opt::{closed_form_s_eps, minimize, Init, Schedule};
use gjms_core::special_functions::{gjms_multiplier, integer_order_product, multiplier_expansion_check, multiplier_gap};
use gjms_core::{Error, ProblemParams};
use rayon::prelude::*;

use crate::config::{CommonArgs, RunConfig};
use crate::output::{self, Cell, Table};

pub const DEFAULT_RADII: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const DEFAULT_X_NORMS: [f64; 3] = [0.5, 1.0, 2.0];

/// Why a run did not succeed, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    Tolerance(String),
    Config(String),
    NonConvergence(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Tolerance(_) => 2,
            Failure::Config(_) => 3,
            Failure::NonConvergence(_) => 4,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Tolerance(m) => write!(f, "tolerance check failed: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::NonConvergence(m) => write!(f, "did not converge: {m}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::Diagnostic { .. } => Failure::NonConvergence(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

pub struct Extras {
    pub amplitude: Option<f64>,
    pub radii: Vec<f64>,
    pub x_norms: Vec<f64>,
}

fn default_tol(subcommand: &str) -> f64 {
    match subcommand {
        "multipliers" => 1e-10,
        "verify-bubble" => 1e-4,
        _ => 1e-3,
    }
}

pub fn build_config(subcommand: &str, common: CommonArgs, extras: Extras) -> Result<RunConfig, Failure> {
    let alpha = match common.alpha {
        Some(a) => a,
        None => ProblemParams::critical(common.n, common.s)?.alpha(),
    };
    let tol = common.tol.unwrap_or_else(|| default_tol(subcommand));
    let mut config = RunConfig {
        subcommand: subcommand.to_string(),
        n: common.n,
        s: common.s,
        alpha,
        epsilon: common.epsilon,
        degree: common.degree,
        nodes: common.nodes,
        seed: common.seed,
        tol,
        out: common.out,
        format: common.format,
        amplitude: None,
        radii: Vec::new(),
        x_norms: Vec::new(),
    };
    match subcommand {
        "verify-bubble" => {
            config.amplitude = extras.amplitude;
            config.radii = if extras.radii.is_empty() { DEFAULT_RADII.to_vec() } else { extras.radii };
        }
        "moving-spheres" => {
            config.x_norms = if extras.x_norms.is_empty() { DEFAULT_X_NORMS.to_vec() } else { extras.x_norms };
        }
        _ => {}
    }
    Ok(config)
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    if !(config.tol > 0.0 && config.tol.is_finite()) {
        return Err(Failure::Config(format!("--tol must be positive, got {}", config.tol)));
    }
    log::info!("running {} with seed {}", config.subcommand, config.seed);
    match config.subcommand.as_str() {
        "multipliers" => multipliers(config),
        "verify-bubble" => verify_bubble(config),
        "sobolev" => sobolev(config),
        "moving-spheres" => moving_spheres(config),
        other => Err(Failure::Config(format!("unknown subcommand {other:?}"))),
    }
}

fn finish(config: &RunConfig, table: &Table, failure: Option<String>) -> Result<(), Failure> {
    let path = output::write(config, table)?;
    log::info!("wrote {}", path.display());
    match failure {
        Some(m) => Err(Failure::Tolerance(m)),
        None => Ok(()),
    }
}

fn multipliers(config: &RunConfig) -> Result<(), Failure> {
    let params = ProblemParams::new(config.n, config.s, config.alpha, 0.0)?;
    let integer_s = (config.s.fract() == 0.0).then_some(config.s as u32);
    let mut table = Table::new(vec![
        "l",
        "multiplier",
        "three_term",
        "gap",
        "integer_product",
        "product_rel_diff",
    ]);
    let mut worst: f64 = 0.0;
    for l in 0..=config.degree as u32 {
        let alpha = gjms_multiplier(&params, l);
        let expansion = multiplier_expansion_check(&params, l);
        let gap = if l == 0 { alpha } else { multiplier_gap(&params, l)? };
        let (product, diff) = match integer_s {
            Some(s) => {
                let p = integer_order_product(config.n, s, l);
                let d = (alpha - p).abs() / p.abs();
                worst = worst.max(d);
                (Cell::Float(p), Cell::Float(d))
            }
            None => (Cell::Empty, Cell::Empty),
        };
        table.rows.push(vec![
            Cell::Int(u64::from(l)),
            Cell::Float(alpha),
            Cell::Float(expansion.three_term),
            Cell::Float(gap),
            product,
            diff,
        ]);
    }
    let failure = (worst > config.tol)
        .then(|| format!("integer-order product differs by {worst:e} (tol {:e})", config.tol));
    finish(config, &table, failure)
}

fn verify_bubble(config: &RunConfig) -> Result<(), Failure> {
    let eps = match config.epsilon.as_slice() {
        [] => 0.0,
        [e] => *e,
        _ => return Err(Failure::Config("verify-bubble takes at most one --epsilon".into())),
    };
    let params = ProblemParams::new(config.n, config.s, config.alpha, eps)?;
    let bubble = match config.amplitude {
        Some(a) => Bubble::new(a, 1.0, vec![0.0; config.n as usize])?,
        None => Bubble::constant_solution(&params)?,
    };
    let report = verify_integral_equation(&params, &bubble, &config.radii)?;
    let mut table = Table::new(vec!["r", "lhs", "rhs", "rel_error"]);
    let mut order: Vec<usize> = (0..report.radii.len()).collect();
    order.sort_by(|&a, &b| report.radii[a].total_cmp(&report.radii[b]));
    for k in order {
        table.rows.push(vec![
            Cell::Float(report.radii[k]),
            Cell::Float(report.lhs[k]),
            Cell::Float(report.rhs[k]),
            Cell::Float(report.rel_errors[k]),
        ]);
    }
    let failure = (report.rel_error >= config.tol)
        .then(|| format!("max relative residual {:e} (tol {:e})", report.rel_error, config.tol));
    finish(config, &table, failure)
}

fn sobolev(config: &RunConfig) -> Result<(), Failure> {
    let base = ProblemParams::new(config.n, config.s, config.alpha, 0.0)?;
    if !base.is_critical() {
        return Err(Failure::Config("sobolev needs the critical alpha".into()));
    }
    let mut eps_list = config.epsilon.clone();
    if let Some(bad) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Failure::Config(format!("every --epsilon must lie in (0, 1), got {bad}")));
    }
    eps_list.sort_by(f64::total_cmp);
    let runs: Vec<_> = eps_list
        .par_iter()
        .map(|&eps| -> Result<_, Failure> {
            let params = base.with_epsilon(eps)?;
            let state = minimize(
                &params,
                config.degree,
                config.nodes,
                &Init::Noise { seed: config.seed },
                &Schedule::default(),
            )?;
            Ok((eps, state, closed_form_s_eps(&params)))
        })
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(vec!["epsilon", "s_eps_numeric", "s_eps_closed_form", "rel_error", "iterations"]);
    let mut worst: f64 = 0.0;
    for (eps, state, exact) in &runs {
        let rel = state.rel_error();
        worst = worst.max(rel);
        table.rows.push(vec![
            Cell::Float(*eps),
            Cell::Float(state.objective),
            Cell::Float(*exact),
            Cell::Float(rel),
            Cell::Int(state.iteration as u64),
        ]);
    }
    let failure = (worst >= config.tol).then(|| format!("max relative error {worst:e} (tol {:e})", config.tol));
    finish(config, &table, failure)
}

fn moving_spheres(config: &RunConfig) -> Result<(), Failure> {
    let params = ProblemParams::new(config.n, config.s, config.alpha, 0.0)?;
    let mut norms = config.x_norms.clone();
    if let Some(bad) = norms.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Failure::Config(format!("every --x-norm must be positive, got {bad}")));
    }
    norms.sort_by(f64::total_cmp);
    let results: Vec<_> = norms
        .par_iter()
        .map(|&r| {
            let mut x = vec![0.0; config.n as usize];
            x[0] = r;
            lambda_bar(&x, &params, config.tol)
        })
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(vec!["x_norm", "lambda_bar_numeric", "lambda_bar_closed_form", "abs_gap"]);
    let mut worst: f64 = 0.0;
    for (r, res) in norms.iter().zip(&results) {
        worst = worst.max(res.abs_gap);
        table.rows.push(vec![
            Cell::Float(*r),
            Cell::Float(res.lambda_bar_numeric),
            Cell::Float(res.lambda_bar_closed_form),
            Cell::Float(res.abs_gap),
        ]);
    }
    let failure = (worst > 2.0 * config.tol).then(|| format!("max gap {worst:e} exceeds 2 tol = {:e}", 2.0 * config.tol));
    finish(config, &table, failure)
}
