//! Gauss rules for the ultraspherical weight `(1 - t^2)^{lambda - 1/2}` and
//! composite Gauss–Legendre rules graded toward endpoint singularities.

use crate::error::{domain, Error, Result};
use crate::special_functions::ln_gamma;

/// Newton tolerance on the node update.
pub const NEWTON_TOL: f64 = 1e-14;
/// Newton iteration budget per node.
pub const NEWTON_MAX_ITER: usize = 100;

/// Orthonormal ultraspherical polynomials `q_0..q_{m}` with respect to
/// `(1 - t^2)^{lambda - 1/2} dt` on `[-1, 1]`, via the three-term recurrence
/// `sqrt(b_{k+1}) q_{k+1} = t q_k - sqrt(b_k) q_{k-1}`.
#[derive(Debug, Clone)]
pub struct Ultraspherical {
    lambda: f64,
    /// `1 / sqrt(total mass)`.
    q0: f64,
    /// `sqrt(b_k)` for `k = 0..`; entry 0 is unused.
    sqrt_beta: Vec<f64>,
}

impl Ultraspherical {
    pub fn new(lambda: f64, degree_max: usize) -> Self {
        assert!(lambda > 0.0, "ultraspherical parameter must be positive");
        // mass = B(1/2, lambda + 1/2)
        let ln_mass = ln_gamma(0.5) + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0);
        let q0 = (-0.5 * ln_mass).exp();
        let sqrt_beta = (0..=degree_max + 1)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    let k = k as f64;
                    (k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0))).sqrt()
                }
            })
            .collect();
        Self {
            lambda,
            q0,
            sqrt_beta,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn degree_max(&self) -> usize {
        self.sqrt_beta.len() - 2
    }

    /// Writes `q_0(t)..=q_L(t)` into `out` (length `L + 1`).
    pub fn eval_all(&self, t: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.degree_max() + 1);
        if out.is_empty() {
            return;
        }
        out[0] = self.q0;
        if out.len() > 1 {
            out[1] = t * self.q0 / self.sqrt_beta[1];
        }
        for k in 1..out.len().saturating_sub(1) {
            out[k + 1] = (t * out[k] - self.sqrt_beta[k] * out[k - 1]) / self.sqrt_beta[k + 1];
        }
    }

    /// `(q_m(t), q_m'(t), q_{m-1}(t))` for `m >= 1`.
    pub fn eval_with_derivative(&self, m: usize, t: f64) -> (f64, f64, f64) {
        let (mut p_prev, mut p) = (0.0, self.q0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for k in 0..m {
            let next = (t * p - self.sqrt_beta[k] * p_prev) / self.sqrt_beta[k + 1];
            let dnext = (p + t * d - self.sqrt_beta[k] * d_prev) / self.sqrt_beta[k + 1];
            p_prev = p;
            p = next;
            d_prev = d;
            d = dnext;
        }
        (p, d, p_prev)
    }
}

/// Nodes (ascending) and weights of the `m`-point Gauss rule for
/// `(1 - t^2)^{lambda - 1/2}` on `[-1, 1]`.
///
/// Roots of the degree-`m` orthonormal polynomial by Newton iteration with
/// Maehly deflation from Chebyshev initial guesses; weights from the
/// Christoffel numbers `1 / sum_k q_k(t_j)^2`.
pub fn gauss_ultraspherical(m: usize, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 1 {
        return Err(domain("gauss_ultraspherical", "need at least one node"));
    }
    if !(lambda > 0.0) {
        return Err(domain("gauss_ultraspherical", format!("need lambda > 0, got {lambda}")));
    }
    let poly = Ultraspherical::new(lambda, m);
    let mut roots: Vec<f64> = Vec::with_capacity(m);
    for k in 0..m {
        let mut t = (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos();
        let mut converged = false;
        let mut last = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp, _) = poly.eval_with_derivative(m, t);
            let deflation: f64 = roots.iter().map(|r| 1.0 / (t - r)).sum();
            let step = p / (dp - p * deflation);
            t -= step;
            last = step.abs();
            if last <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "gauss_ultraspherical",
                iterations: NEWTON_MAX_ITER,
                last_change: last,
            });
        }
        // one undeflated polishing step
        let (p, dp, _) = poly.eval_with_derivative(m, t);
        t -= p / dp;
        roots.push(t);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    if roots.windows(2).any(|w| w[1] <= w[0]) || roots.iter().any(|t| t.abs() >= 1.0) {
        return Err(Error::Diagnostic {
            op: "gauss_ultraspherical",
            reason: "nodes are not distinct points of (-1, 1)".into(),
        });
    }
    let mut buf = vec![0.0; m];
    let weights = roots
        .iter()
        .map(|&t| {
            poly.eval_all(t, &mut buf);
            1.0 / buf.iter().map(|q| q * q).sum::<f64>()
        })
        .collect();
    Ok((roots, weights))
}

/// Which end of an interval carries the singular behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    None,
    Left,
    Right,
    Both,
}

/// Gauss–Legendre base rule on `[-1, 1]` plus composite, dyadically graded
/// variants on arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        let (nodes, weights) = gauss_ultraspherical(order, 0.5)?;
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Pushes the rule mapped to `[a, b]` into `out`.
    pub fn push_panel(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        out.extend(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| (mid + half * x, half * w)),
        );
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule on `[a, b]`: `uniform` equal panels, then each panel
    /// touching a graded end is split dyadically `depth` times toward that end.
    pub fn graded(&self, a: f64, b: f64, grading: Grading, depth: usize, uniform: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.order() * (uniform + 2 * depth + 2));
        if !(b > a) {
            return out;
        }
        let uniform = uniform.max(1);
        let h = (b - a) / uniform as f64;
        for k in 0..uniform {
            let lo = a + h * k as f64;
            let hi = if k + 1 == uniform { b } else { lo + h };
            let left = k == 0 && matches!(grading, Grading::Left | Grading::Both);
            let right = k + 1 == uniform && matches!(grading, Grading::Right | Grading::Both);
            match (left, right) {
                (false, false) => self.push_panel(lo, hi, &mut out),
                (true, false) => self.push_dyadic(lo, hi, depth, true, &mut out),
                (false, true) => self.push_dyadic(lo, hi, depth, false, &mut out),
                (true, true) => {
                    let mid = 0.5 * (lo + hi);
                    self.push_dyadic(lo, mid, depth, true, &mut out);
                    self.push_dyadic(mid, hi, depth, false, &mut out);
                }
            }
        }
        out
    }

    fn push_dyadic(&self, a: f64, b: f64, depth: usize, toward_left: bool, out: &mut Vec<(f64, f64)>) {
        let len = b - a;
        let mut outer = len;
        for _ in 0..depth {
            let inner = 0.5 * outer;
            if toward_left {
                self.push_panel(a + inner, a + outer, out);
            } else {
                self.push_panel(b - outer, b - inner, out);
            }
            outer = inner;
        }
        if toward_left {
            self.push_panel(a, a + outer, out);
        } else {
            self.push_panel(b - outer, b, out);
        }
    }
}

/// Runs `eval(level)` for increasing levels until two successive values agree to
/// `rel_tol` (relative, or absolute below `abs_floor`).
pub fn refine_until<F>(op: &'static str, rel_tol: f64, abs_floor: f64, max_level: usize, mut eval: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut prev = eval(0)?;
    let mut change = f64::INFINITY;
    for level in 1..=max_level {
        let cur = eval(level)?;
        change = (cur - prev).abs();
        if change <= rel_tol * cur.abs().max(abs_floor) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        op,
        iterations: max_level,
        last_change: change / prev.abs().max(abs_floor),
    })
}
