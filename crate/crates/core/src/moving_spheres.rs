//! Moving-spheres harness for bubbles: domination `u_{x,lambda} <= u` outside
//! `B_lambda(x)`, the threshold `lambda_bar(x)` and the ring integral of the
//! kernel `K(x, lambda; y, z)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::{dist, dist2, kelvin_transform, norm, norm2, Bubble, InversionSpec};
use crate::error::{domain, Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::{refine_until, GaussLegendre, Grading};
use crate::sphere_spectral::surface_area;

/// Margin below which a sampled point counts as a violation.
pub const MARGIN_FLOOR: f64 = -1e-12;

/// Largest sampled distance `|y - x|`.
pub const OUTER_RADIUS: f64 = 1e3;

/// Number of radial shells used by [`check_domination`] when not overridden.
pub const DEFAULT_SAMPLES: usize = 2048;

const RANDOM_DIRECTIONS: usize = 8;

/// Outcome of [`check_domination`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub holds: bool,
    /// Minimum of `u(y) - u_{x,lambda}(y)` over the samples.
    pub worst_margin: f64,
    pub samples_used: usize,
    /// Samples where the numeric sign contradicts the closed-form sign; only
    /// counted for the normalized bubble.
    pub closed_form_disagreements: usize,
}

fn directions(n: usize, x: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(2 * n + 4 + RANDOM_DIRECTIONS);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            dirs.push(e);
        }
    }
    let nx = norm(x);
    if nx > 0.0 {
        dirs.push(x.iter().map(|v| v / nx).collect());
        dirs.push(x.iter().map(|v| -v / nx).collect());
    }
    let diag = 1.0 / (n as f64).sqrt();
    dirs.push(vec![diag; n]);
    dirs.push(vec![-diag; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < 2 * n + 4 + RANDOM_DIRECTIONS {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = norm(&v);
        if nv > 1e-3 && nv <= 1.0 {
            dirs.push(v.iter().map(|c| c / nv).collect());
        }
    }
    dirs
}

/// Distances `|y - x|` from just outside `lambda` up to [`OUTER_RADIUS`]: a few
/// boundary-adjacent shells, then geometric spacing.
fn shells(lambda: f64, count: usize) -> Vec<f64> {
    let mut radii: Vec<f64> = [1e-9, 1e-6, 1e-3].iter().map(|t| lambda * (1.0 + t)).collect();
    let lo = lambda * 1.01;
    let hi = OUTER_RADIUS.max(2.0 * lambda);
    let count = count.max(4);
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    radii.extend((0..count).map(|k| lo * ratio.powi(k as i32)));
    radii
}

/// `(lambda^2 - |y-x|^2)(lambda^2 - 1 - |x|^2)`, whose sign is that of
/// `u(y) - u_{x,lambda}(y)` for the normalized bubble.
pub fn closed_form_sign_factor(x: &[f64], lambda: f64, y: &[f64]) -> f64 {
    let lam2 = lambda * lambda;
    (lam2 - dist2(y, x)) * (lam2 - 1.0 - norm2(x))
}

fn margin(bubble: &Bubble, spec: &InversionSpec, params: &ProblemParams, y: &[f64]) -> Result<f64> {
    let u = |p: &[f64]| bubble.value(p, params);
    Ok(u(y) - kelvin_transform(u, spec, params, y)?)
}

fn is_standard(bubble: &Bubble) -> bool {
    bubble.amplitude() == 1.0 && bubble.scale() == 1.0 && bubble.center().iter().all(|c| *c == 0.0)
}

fn signs_agree(numeric: f64, u_y: f64, closed: f64, closed_scale: f64) -> bool {
    if numeric.abs() <= 1e-12 * u_y || closed.abs() <= 1e-12 * closed_scale {
        return true;
    }
    (numeric > 0.0) == (closed > 0.0)
}

/// Samples `y` with `|y - x| >= lambda` on radial shells times directions and
/// reports whether `u(y) - u_{x,lambda}(y) >= -1e-12` everywhere.
pub fn check_domination(
    bubble: &Bubble,
    spec: &InversionSpec,
    params: &ProblemParams,
    samples: usize,
    seed: u64,
) -> Result<Domination> {
    let n = spec.dim();
    if bubble.dim() != n || params.n() as usize != n {
        return Err(domain("check_domination", "bubble, sphere and params disagree on the dimension"));
    }
    let x = spec.center();
    let lambda = spec.radius();
    let dirs = directions(n, x, seed);
    let radii = shells(lambda, samples / dirs.len());
    let standard = is_standard(bubble);
    let closed_scale = lambda * lambda * (1.0 + norm2(x)).max(lambda * lambda);

    let mut worst = f64::INFINITY;
    let mut disagreements = 0;
    let mut used = 0;
    let mut y = vec![0.0; n];
    for &rho in &radii {
        for dir in &dirs {
            for i in 0..n {
                y[i] = x[i] + rho * dir[i];
            }
            let m = margin(bubble, spec, params, &y)?;
            worst = worst.min(m);
            used += 1;
            if standard {
                let u_y = bubble.value(&y, params);
                if !signs_agree(m, u_y, closed_form_sign_factor(x, lambda, &y), closed_scale * rho * rho) {
                    disagreements += 1;
                }
            }
        }
    }
    if disagreements > 0 {
        log::warn!("check_domination: {disagreements} samples disagree with the closed-form sign");
    }
    Ok(Domination {
        holds: worst >= MARGIN_FLOOR,
        worst_margin: worst,
        samples_used: used,
        closed_form_disagreements: disagreements,
    })
}

/// Whether the sign of `u(y) - u_{x,lambda}(y)` for the normalized bubble
/// matches the sign of `(lambda^2 - |y-x|^2)(lambda^2 - 1 - |x|^2)`.
pub fn domination_equivalence_residual(x: &[f64], lambda: f64, y: &[f64], params: &ProblemParams) -> Result<bool> {
    let spec = InversionSpec::new(x.to_vec(), lambda)?;
    if dist(y, x) < lambda * (1.0 - 1e-14) {
        return Err(domain("domination_equivalence_residual", "y must satisfy |y - x| >= lambda"));
    }
    let bubble = Bubble::standard(params.n());
    let numeric = margin(&bubble, &spec, params, y)?;
    let closed = closed_form_sign_factor(x, lambda, y);
    let scale = lambda * lambda * dist2(y, x).max(lambda * lambda) * (1.0 + norm2(x)).max(lambda * lambda);
    Ok(signs_agree(numeric, bubble.value(y, params), closed, scale))
}

/// Numeric and closed-form threshold at one centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub x: Vec<f64>,
    pub lambda_bar_numeric: f64,
    pub lambda_bar_closed_form: f64,
    pub abs_gap: f64,
    pub samples_used: usize,
}

impl ThresholdResult {
    pub const CSV_HEADER: &'static str = "x_norm,lambda_bar_numeric,lambda_bar_closed_form,abs_gap";

    pub fn csv_row(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            norm(&self.x),
            self.lambda_bar_numeric,
            self.lambda_bar_closed_form,
            self.abs_gap
        );
        out
    }
}

const PROBES: usize = 16;
const GRID_OFFSET: f64 = 0.381_966_011_250_105_1;

/// Supremum of the dominating radii at `x` for the normalized bubble, by
/// bisection on `(0, 2 sqrt(1 + |x|^2)]`.
///
/// The predicate is first probed on an even grid; a true value above a false
/// one is reported as [`Error::Diagnostic`].
pub fn lambda_bar(x: &[f64], params: &ProblemParams, tol: f64) -> Result<ThresholdResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(domain("lambda_bar", format!("tolerance must be positive, got {tol}")));
    }
    if x.len() != params.n() as usize {
        return Err(domain("lambda_bar", "x has the wrong dimension"));
    }
    if norm(x) == 0.0 {
        return Err(domain("lambda_bar", "x must be non-zero"));
    }
    let closed = (1.0 + norm2(x)).sqrt();
    let bubble = Bubble::standard(params.n());
    let mut used = 0;
    let mut predicate = |lambda: f64| -> Result<bool> {
        let spec = InversionSpec::new(x.to_vec(), lambda)?;
        let d = check_domination(&bubble, &spec, params, DEFAULT_SAMPLES, 0)?;
        used += d.samples_used;
        Ok(d.holds)
    };

    let top = 2.0 * closed;
    let mut trace = Vec::with_capacity(PROBES);
    for k in 1..=PROBES {
        // offset grid, so that no bisection midpoint is a simple fraction of top
        let frac = if k == PROBES { 1.0 } else { (k as f64 - GRID_OFFSET) / PROBES as f64 };
        let lambda = top * frac;
        trace.push((lambda, predicate(lambda)?));
    }
    if let Some(bad) = trace.windows(2).find(|w| !w[0].1 && w[1].1) {
        return Err(Error::Diagnostic {
            op: "lambda_bar",
            reason: format!(
                "domination fails at lambda = {} but holds at lambda = {}",
                bad[0].0, bad[1].0
            ),
        });
    }
    let (mut lo, mut hi) = match trace.iter().position(|(_, ok)| !ok) {
        Some(0) => (0.0, trace[0].0),
        Some(k) => (trace[k - 1].0, trace[k].0),
        None => (top, top),
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if predicate(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let numeric = if lo > 0.0 { lo } else { 0.5 * hi };
    Ok(ThresholdResult {
        x: x.to_vec(),
        lambda_bar_numeric: numeric,
        lambda_bar_closed_form: closed,
        abs_gap: (numeric - closed).abs(),
        samples_used: used,
    })
}

/// `int_{lambda <= |z-x| <= outer} K(x, lambda; y, z) dz` by axial symmetry
/// about the line through `x` and `y`.
pub fn kernel_ring_integral(spec: &InversionSpec, y: &[f64], outer: f64, params: &ProblemParams) -> Result<f64> {
    if y.len() != spec.dim() || params.n() as usize != spec.dim() {
        return Err(domain("kernel_ring_integral", "dimension mismatch"));
    }
    let lambda = spec.radius();
    let d = dist(y, spec.center());
    if d < lambda {
        return Err(domain("kernel_ring_integral", "y must lie outside the sphere"));
    }
    if !(outer > lambda) {
        return Err(domain("kernel_ring_integral", "outer radius must exceed lambda"));
    }
    if d == lambda {
        return Ok(0.0);
    }
    let n = params.n();
    let p = params.kernel_power();
    let reflected = lambda * lambda / d;
    let factor = (lambda / d).powf(p);
    let sin_pow = f64::from(n) - 2.0;
    let sphere = surface_area(n - 2);

    refine_until("kernel_ring_integral", 1e-7, 1e-300, 5, |level| {
        let gl = GaussLegendre::new(10 + 4 * level)?;
        let panels = 1 << level;
        let depth = 30 + 8 * level;
        let mut cuts = vec![lambda, outer];
        if d < outer {
            cuts.push(d);
        }
        cuts.sort_by(f64::total_cmp);
        let mut rho_rule = Vec::new();
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let grading = if b == d {
                Grading::Both
            } else {
                Grading::Left
            };
            rho_rule.extend(gl.graded(a, b, grading, depth, panels));
        }
        let mut total = 0.0;
        for (rho, wr) in rho_rule {
            let near = (rho - d).abs().min(rho - reflected) / rho;
            let phi_depth = if near > 0.5 {
                1
            } else {
                ((std::f64::consts::PI / near.max(1e-300)).log2().ceil() as usize + 2).min(60)
            };
            let mut inner = 0.0;
            for (phi, wp) in gl.graded(0.0, std::f64::consts::PI, Grading::Left, phi_depth, 2 * panels) {
                let half = (0.5 * phi).sin();
                let h2 = half * half;
                let direct = (d - rho).powi(2) + 4.0 * d * rho * h2;
                let image = (reflected - rho).powi(2) + 4.0 * reflected * rho * h2;
                let k = direct.powf(-0.5 * p) - factor * image.powf(-0.5 * p);
                inner += wp * k * phi.sin().powf(sin_pow);
            }
            total += wr * rho.powf(f64::from(n) - 1.0) * inner;
        }
        Ok(sphere * total)
    })
}
