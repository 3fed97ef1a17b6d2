//! Radial Riesz potentials on `R^n` and the integral equation
//! `u = gamma_{2s,n} |x|^{2s-n} * F(u)` satisfied by bubbles.
//!
//! For radial `F` the potential at `|x| = r` is the iterated integral
//!
//! ```text
//! |S^{n-2}| int_0^inf F(rho) rho^{n-1} int_0^pi (r^2 + rho^2 - 2 r rho cos phi)^{(2s-n)/2} sin^{n-2} phi dphi drho
//! ```
//!
//! evaluated with composite Gauss–Legendre panels graded toward the diagonal
//! `rho = r`, `phi = 0`. The half line `[R, inf)` is mapped onto `(0, 1]` by
//! `rho = R / t`, so no truncation radius is needed.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::Bubble;
use crate::error::{domain, Result};
use crate::params::ProblemParams;
use crate::quadrature::{refine_until, GaussLegendre, Grading};
use crate::sphere_spectral::surface_area;

/// Agreement required between two successive refinement levels.
pub const REFINE_TOL: f64 = 1e-7;

const MAX_LEVEL: usize = 4;

type RadialFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A radial function `r -> f(r)` on `[0, inf)` with its expected power-law decay.
#[derive(Clone)]
pub struct RadialProfile {
    f: Arc<RadialFn>,
    decay: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("decay", &self.decay)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl RadialProfile {
    /// `decay` is the exponent `d` in `f(r) ~ r^{-d}` as `r -> inf`; use
    /// `f64::INFINITY` for compact support.
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, decay: f64) -> Self {
        Self {
            f: Arc::new(f),
            decay,
            breakpoints: Vec::new(),
        }
    }

    /// Radii where `f` or its derivatives jump; quadrature panels end there.
    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.retain(|b| b.is_finite() && *b > 0.0);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// `F(y) = eps w^{2s} u + w^sigma u^alpha` with `w = 2/(1+|y|^2)`.
pub fn weight_f(u_val: f64, y_norm: f64, params: &ProblemParams) -> Result<f64> {
    let alpha = params.alpha();
    if alpha.fract() != 0.0 && !(u_val > 0.0) {
        return Err(domain("weight_F", format!("u = {u_val} must be positive for non-integer alpha = {alpha}")));
    }
    if !(y_norm >= 0.0) {
        return Err(domain("weight_F", format!("|y| = {y_norm} must be nonnegative")));
    }
    let w = 2.0 / (1.0 + y_norm * y_norm);
    let power = if alpha.fract() == 0.0 && alpha.abs() < 64.0 {
        u_val.powi(alpha as i32)
    } else {
        (alpha * u_val.ln()).exp()
    };
    let sigma = params.sigma();
    let weight = if sigma == 0.0 { 1.0 } else { w.powf(sigma) };
    Ok(params.epsilon() * w.powf(2.0 * params.s()) * u_val + weight * power)
}

struct Resolution {
    order: usize,
    panels: usize,
    depth: usize,
}

impl Resolution {
    fn at(level: usize) -> Self {
        Self {
            order: 10 + 4 * level,
            panels: 1 << level,
            depth: 24 + 8 * level,
        }
    }
}

/// `int_0^pi (r^2 + rho^2 - 2 r rho cos phi)^{-p/2} sin^{n-2} phi dphi`.
fn angular(gl: &GaussLegendre, n: u32, p: f64, r: f64, rho: f64, panels: usize) -> f64 {
    let gap = (r - rho).abs();
    let sin_pow = f64::from(n) - 2.0;
    let four_r_rho = 4.0 * r * rho;
    let scale = gap / (r * rho).sqrt();
    let depth = if scale > 0.5 {
        1
    } else {
        ((std::f64::consts::PI / scale.max(1e-300)).log2().ceil() as usize + 2).min(60)
    };
    gl.graded(0.0, std::f64::consts::PI, Grading::Left, depth, 2 * panels)
        .into_iter()
        .map(|(phi, w)| {
            let half = (0.5 * phi).sin();
            let d2 = gap * gap + four_r_rho * half * half;
            w * d2.powf(-0.5 * p) * phi.sin().powf(sin_pow)
        })
        .sum()
}

fn radial_rule(gl: &GaussLegendre, r: f64, profile: &RadialProfile, res: &Resolution) -> (Vec<(f64, f64)>, f64) {
    let top = 2f64.powf((4.0 * r.max(1.0)).log2().ceil());
    let mut cuts: Vec<f64> = vec![0.0];
    let mut c = 1.0 / 16.0;
    while c < top {
        cuts.push(c);
        c *= 2.0;
    }
    cuts.push(top);
    if r > 0.0 {
        cuts.push(r);
    }
    cuts.extend(profile.breakpoints().iter().copied().filter(|b| *b < top));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));

    let mut rule = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let grading = match (r > 0.0 && a == r, r > 0.0 && b == r) {
            (true, _) => Grading::Left,
            (_, true) => Grading::Right,
            _ => Grading::None,
        };
        rule.extend(gl.graded(a, b, grading, res.depth, res.panels));
    }
    (rule, top)
}

/// `int_{R^n} |x - y|^{2s-n} F(|y|) dy` at `|x| = r`.
pub fn riesz_potential_radial(profile: &RadialProfile, n: u32, s: f64, r: f64) -> Result<f64> {
    let dim = f64::from(n);
    if !(s > 0.0 && 2.0 * s < dim) {
        return Err(domain("riesz_potential_radial", format!("need 0 < s < n/2, got s = {s}, n = {n}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain("riesz_potential_radial", format!("radius {r} must be finite and nonnegative")));
    }
    if !(profile.decay() > 2.0 * s) {
        return Err(domain(
            "riesz_potential_radial",
            format!("decay {} must exceed 2s = {} for the potential to converge", profile.decay(), 2.0 * s),
        ));
    }
    let p = dim - 2.0 * s;
    let sphere = surface_area(n - 2);

    refine_until("riesz_potential_radial", REFINE_TOL, 1e-300, MAX_LEVEL, |level| {
        let res = Resolution::at(level);
        let gl = GaussLegendre::new(res.order)?;
        let (rule, top) = radial_rule(&gl, r, profile, &res);
        let inner = |rho: f64| -> f64 {
            if r == 0.0 {
                // angular factor collapses to rho^{-p} |S^{n-1}| / |S^{n-2}|
                rho.powf(-p) * surface_area(n - 1) / sphere
            } else {
                angular(&gl, n, p, r, rho, res.panels)
            }
        };
        let mut total = 0.0;
        for (rho, w) in rule {
            let f = profile.eval(rho);
            if f != 0.0 {
                total += w * f * rho.powf(dim - 1.0) * inner(rho);
            }
        }
        if profile.decay().is_finite() {
            for (t, w) in gl.graded(0.0, 1.0, Grading::Left, res.depth, res.panels) {
                let rho = top / t;
                let f = profile.eval(rho);
                if f != 0.0 {
                    total += w * top / (t * t) * f * rho.powf(dim - 1.0) * inner(rho);
                }
            }
        }
        let value = sphere * total;
        if !value.is_finite() {
            return Err(domain("riesz_potential_radial", "profile produced a non-finite integrand"));
        }
        Ok(value)
    })
}

/// Samples of `u` and of `gamma_{2s,n} I_{2s}(F(u))` for a bubble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub radii: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub rel_error: f64,
}

impl ResidualReport {
    /// Columns `r,lhs,rhs,rel_error`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,lhs,rhs,rel_error\n");
        for k in 0..self.radii.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.radii[k], self.lhs[k], self.rhs[k], self.rel_errors[k]
            );
        }
        out
    }
}

/// Compares a centred bubble with `gamma_{2s,n}` times the Riesz potential of
/// `F(u)` at each radius.
///
/// Any amplitude is accepted so that mismatched amplitudes show up as a large
/// residual; a log warning is emitted when it differs from the constant solution.
pub fn verify_integral_equation(params: &ProblemParams, bubble: &Bubble, radii: &[f64]) -> Result<ResidualReport> {
    if bubble.dim() != params.n() as usize {
        return Err(domain("verify_integral_equation", "bubble dimension differs from n"));
    }
    if (bubble.scale() - 1.0).abs() > 1e-12 || bubble.center().iter().any(|c| *c != 0.0) {
        return Err(domain(
            "verify_integral_equation",
            "bubble must have scale 1 and centre 0 to come from a constant on the sphere",
        ));
    }
    if let Ok(expected) = Bubble::constant_solution(params) {
        if (expected.amplitude() - bubble.amplitude()).abs() > 1e-12 * expected.amplitude() {
            log::warn!(
                "bubble amplitude {} differs from the constant solution {}",
                bubble.amplitude(),
                expected.amplitude()
            );
        }
    }
    let params = *params;
    let b = bubble.clone();
    let u = move |r: f64| b.radial_value(r, &params);
    let f_of = {
        let u = u.clone();
        move |r: f64| weight_f(u(r), r, &params).unwrap_or(f64::NAN)
    };
    let decay = params.dim() + 2.0 * params.s();
    let profile = RadialProfile::new(f_of, decay);
    let gamma = params.gamma_const();

    let rhs: Vec<f64> = radii
        .par_iter()
        .map(|&r| riesz_potential_radial(&profile, params.n(), params.s(), r).map(|v| gamma * v))
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = radii.iter().map(|&r| u(r)).collect();
    let rel_errors: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs() / l.abs()).collect();
    let rel_error = rel_errors.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        radii: radii.to_vec(),
        lhs,
        rhs,
        rel_errors,
        rel_error,
    })
}

/// `(r, u(r) r^{n-2s})`, which tends to `a 2^{(n-2s)/2}` for a centred bubble.
pub fn decay_profile(params: &ProblemParams, bubble: &Bubble, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("decay_profile", "radii must be strictly increasing"));
    }
    match radii.last() {
        Some(&last) if last >= 100.0 => {}
        _ => return Err(domain("decay_profile", "the last radius must be at least 100")),
    }
    let p = params.kernel_power();
    Ok(radii
        .iter()
        .map(|&r| (r, bubble.radial_value(r, params) * r.powf(p)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn crit(n: u32, s: f64) -> ProblemParams {
        ProblemParams::critical(n, s).unwrap()
    }

    #[test]
    fn weight_f_cases() {
        let p = crit(3, 1.0);
        assert_eq!(p.sigma(), 0.0);
        let u = 0.37;
        assert!((weight_f(u, 4.0, &p).unwrap() - u.powi(5)).abs() < 1e-16);
        let p = ProblemParams::new(3, 1.0, 3.0, 1.0).unwrap();
        assert_eq!(weight_f(0.0, 2.0, &p).unwrap(), 0.0);
        let p = ProblemParams::new(3, 1.0, 2.5, 0.0).unwrap();
        assert!(weight_f(0.0, 1.0, &p).is_err());
        assert!(weight_f(-1.0, 1.0, &p).is_err());
    }

    #[test]
    fn bubble_weight_decays_like_power() {
        let p = ProblemParams::new(4, 1.0, 2.0, 0.3).unwrap();
        let b = Bubble::constant_solution(&p).unwrap();
        let scaled: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&y| weight_f(b.radial_value(y, &p), y, &p).unwrap() * y.powf(6.0))
            .collect();
        let c = scaled.iter().copied().fold(0.0, f64::max);
        assert!(scaled.iter().all(|v| *v <= c && *v > 0.0));
    }

    #[test]
    fn ball_potential_in_three_dimensions() {
        // Newton potential of the unit ball: 2 pi (1 - r^2/3) inside, 4 pi/(3 r) outside
        let ball = RadialProfile::new(|r| if r <= 1.0 { 1.0 } else { 0.0 }, f64::INFINITY).with_breakpoints(vec![1.0]);
        for r in [0.0, 0.3, 0.99, 1.0, 1.7, 5.0] {
            let exact = if r <= 1.0 { 2.0 * PI * (1.0 - r * r / 3.0) } else { 4.0 * PI / (3.0 * r) };
            let got = riesz_potential_radial(&ball, 3, 1.0, r).unwrap();
            assert!((got - exact).abs() < 1e-7 * exact, "r = {r}: {got} vs {exact}");
        }
    }

    #[test]
    fn matches_newton_shell_formula() {
        // n = 3: I(r) = 4 pi int F(rho) rho^2 / max(r, rho) drho
        let profile = RadialProfile::new(|r| (-r * r).exp() * (1.0 + r), 100.0);
        let gl = GaussLegendre::new(60).unwrap();
        for r in [0.2, 1.0, 2.5] {
            let oracle = 4.0
                * PI
                * (gl.integrate(0.0, r, |q| (-q * q).exp() * (1.0 + q) * q * q / r)
                    + gl.integrate(r, r + 12.0, |q| (-q * q).exp() * (1.0 + q) * q));
            let got = riesz_potential_radial(&profile, 3, 1.0, r).unwrap();
            assert!((got - oracle).abs() < 1e-7 * oracle, "r = {r}: {got} vs {oracle}");
        }
    }

    #[test]
    fn far_field_law() {
        let profile = RadialProfile::new(|r| (-r * r).exp(), f64::INFINITY);
        for (n, s) in [(3u32, 1.0), (5, 2.0), (4, 1.5)] {
            // int_{R^n} e^{-|y|^2} dy = pi^{n/2}
            let mass = PI.powf(0.5 * f64::from(n));
            let r = 1e3;
            let got = riesz_potential_radial(&profile, n, s, r).unwrap() * r.powf(f64::from(n) - 2.0 * s);
            assert!((got - mass).abs() < 1e-3 * mass);
        }
    }

    #[test]
    fn potential_is_rotation_invariant() {
        // direct 3-D cubature in polar coordinates centred at x, for two directions of x
        let f = |y: [f64; 3]| (-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])).exp();
        let gl = GaussLegendre::new(48).unwrap();
        let r = 1.3;
        let axes = [[r, 0.0, 0.0], [0.0, r / 2f64.sqrt(), -r / 2f64.sqrt()]];
        let reduced =
            riesz_potential_radial(&RadialProfile::new(|q| (-q * q).exp(), f64::INFINITY), 3, 1.0, r).unwrap();
        for x in axes {
            let mut total = 0.0;
            for (d, wd) in gl.graded(0.0, 8.0, Grading::None, 0, 4) {
                for (th, wt) in gl.graded(0.0, PI, Grading::None, 0, 1) {
                    for (ph, wp) in gl.graded(0.0, 2.0 * PI, Grading::None, 0, 2) {
                        let y = [
                            x[0] + d * th.sin() * ph.cos(),
                            x[1] + d * th.sin() * ph.sin(),
                            x[2] + d * th.cos(),
                        ];
                        total += wd * wt * wp * d * th.sin() * f(y);
                    }
                }
            }
            assert!((total - reduced).abs() < 1e-8 * reduced, "{total} vs {reduced}");
        }
    }

    #[test]
    fn positivity_and_bad_inputs() {
        let profile = RadialProfile::new(|r| 1.0 / (1.0 + r * r).powi(3), 6.0);
        assert!(riesz_potential_radial(&profile, 3, 1.0, 0.7).unwrap() > 0.0);
        assert!(riesz_potential_radial(&profile, 4, 2.0, 0.7).is_err());
        let slow = RadialProfile::new(|r| 1.0 / (1.0 + r * r), 2.0);
        assert!(riesz_potential_radial(&slow, 3, 1.0, 0.7).is_err());
    }

    #[test]
    fn critical_bubble_reproduces_itself() {
        let p = crit(3, 1.0);
        let report = verify_integral_equation(&p, &Bubble::standard(3), &[0.0, 1.0, 5.0]).unwrap();
        assert!(report.rel_error < 1e-6, "{report:?}");
        assert_eq!(report.to_csv().lines().count(), 4);
    }

    #[test]
    fn wrong_amplitude_is_detected() {
        let p = crit(3, 1.0);
        let b = Bubble::new(2.0, 1.0, vec![0.0; 3]).unwrap();
        let report = verify_integral_equation(&p, &b, &[0.5]).unwrap();
        // rhs scales like a^5, lhs like a
        assert!((report.rhs[0] / report.lhs[0] - 16.0).abs() < 1e-5);
    }

    #[test]
    fn decay_profile_limits() {
        let p = crit(5, 2.0);
        let radii = [10.0, 100.0, 1000.0];
        let prof = decay_profile(&p, &Bubble::standard(5), &radii).unwrap();
        let limit = 2f64.powf(0.5);
        assert!((prof[2].1 - limit).abs() < 1e-3 * limit);
        assert!(prof.windows(2).all(|w| (w[1].1 - limit).abs() < (w[0].1 - limit).abs()));
        let doubled = decay_profile(&p, &Bubble::new(2.0, 1.0, vec![0.0; 5]).unwrap(), &radii).unwrap();
        assert!((doubled[2].1 - 2.0 * prof[2].1).abs() < 1e-14);
        assert!(decay_profile(&p, &Bubble::standard(5), &[1.0, 10.0]).is_err());
    }
}
