//! Stereographic transfer, sphere inversions, Kelvin transforms and the
//! moving-spheres kernel on `R^n`.
//!
//! Points are plain coordinate slices of runtime dimension. Every operation that
//! divides by a distance refuses inputs closer than [`SINGULAR_GUARD`] to the
//! excluded point instead of returning an infinity.

use serde::{Deserialize, Serialize};

use crate::error::{domain, singular, Result};
use crate::params::ProblemParams;

/// Minimum admissible distance to an excluded point.
pub const SINGULAR_GUARD: f64 = 1e-8;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

fn same_dim(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(domain(op, format!("points of dimension {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// `a (2 / (b^2 + |x - x0|^2))^{(n-2s)/2}`: the pullback of a constant on
/// `S^n`, rescaled and translated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    amplitude: f64,
    scale: f64,
    center: Vec<f64>,
}

impl Bubble {
    pub fn new(amplitude: f64, scale: f64, center: Vec<f64>) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(domain("Bubble", format!("amplitude must be positive, got {amplitude}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain("Bubble", format!("scale must be positive, got {scale}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(domain("Bubble", "center must be a finite point"));
        }
        Ok(Self {
            amplitude,
            scale,
            center,
        })
    }

    /// `a = 1, b = 1, x0 = 0`.
    pub fn standard(n: u32) -> Self {
        Self {
            amplitude: 1.0,
            scale: 1.0,
            center: vec![0.0; n as usize],
        }
    }

    /// Bubble transferred from the constant solution on `S^n`: amplitude
    /// `(1 - eps)^{1/(alpha - 1)}` (amplitude 1 when `eps = 0`).
    pub fn constant_solution(params: &ProblemParams) -> Result<Self> {
        let eps = params.epsilon();
        if eps == 0.0 {
            return Ok(Self::standard(params.n()));
        }
        if eps >= 1.0 {
            return Err(domain("Bubble::constant_solution", "no positive constant solution for eps >= 1"));
        }
        if (params.alpha() - 1.0).abs() < 1e-12 {
            return Err(domain("Bubble::constant_solution", "alpha = 1 admits no non-zero constant solution"));
        }
        let amplitude = (1.0 - eps).powf(1.0 / (params.alpha() - 1.0));
        Self::new(amplitude, 1.0, vec![0.0; params.n() as usize])
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Value as a function of `|x - x0|`.
    pub fn radial_value(&self, r: f64, params: &ProblemParams) -> f64 {
        self.amplitude * (2.0 / (self.scale * self.scale + r * r)).powf(0.5 * params.kernel_power())
    }

    pub fn value(&self, x: &[f64], params: &ProblemParams) -> f64 {
        debug_assert_eq!(x.len(), self.center.len());
        self.radial_value(dist(x, &self.center), params)
    }
}

/// Polar coordinate `t = cos(theta) = (1 - |x|^2)/(1 + |x|^2)` of the point of
/// `S^n` that projects stereographically to `x`; `x = 0` is `t = 1`.
pub fn polar_t(x: &[f64]) -> f64 {
    let r2 = norm2(x);
    (1.0 - r2) / (1.0 + r2)
}

/// `u(x) = (2/(1+|x|^2))^{(n-2s)/2} v_const`, the pullback of a constant.
pub fn stereo_transfer(v_const: f64, params: &ProblemParams, x: &[f64]) -> f64 {
    (2.0 / (1.0 + norm2(x))).powf(0.5 * params.kernel_power()) * v_const
}

/// Pullback of a zonal function `v(t)` on `S^n` to `R^n`.
pub fn stereo_transfer_zonal(v: impl Fn(f64) -> f64, params: &ProblemParams, x: &[f64]) -> f64 {
    stereo_transfer(v(polar_t(x)), params, x)
}

/// Sphere `|xi - center| = radius` for inversions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionSpec {
    center: Vec<f64>,
    radius: f64,
}

impl InversionSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(domain("InversionSpec", format!("radius must be positive, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(domain("InversionSpec", "center must be a finite point"));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `sqrt(1 + |x|^2)`, the largest radius admitted by the moving-spheres
    /// threshold.
    pub fn admissible_limit(&self) -> f64 {
        (1.0 + norm2(&self.center)).sqrt()
    }

    pub fn is_admissible(&self) -> bool {
        self.radius <= self.admissible_limit()
    }

    fn guard(&self, op: &'static str, p: &[f64]) -> Result<f64> {
        same_dim(op, &self.center, p)?;
        let d = dist(p, &self.center);
        if d < SINGULAR_GUARD {
            return Err(singular(op, format!("point within {d:e} of the inversion center")));
        }
        Ok(d)
    }
}

/// `xi^{x,lambda} = x + lambda^2 (xi - x)/|xi - x|^2`.
pub fn invert_point(spec: &InversionSpec, xi: &[f64]) -> Result<Vec<f64>> {
    let d = spec.guard("invert_point", xi)?;
    let k = spec.radius * spec.radius / (d * d);
    Ok(spec
        .center
        .iter()
        .zip(xi)
        .map(|(c, p)| c + k * (p - c))
        .collect())
}

/// `u_{x,lambda}(xi) = (lambda/|xi - x|)^{n-2s} u(xi^{x,lambda})`.
pub fn kelvin_transform<F>(u: F, spec: &InversionSpec, params: &ProblemParams, xi: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let d = spec.guard("kelvin_transform", xi)?;
    let image = invert_point(spec, xi)?;
    Ok((spec.radius / d).powf(params.kernel_power()) * u(&image))
}

/// `|z - x| |xi - x| |xi^{x,lambda} - z^{x,lambda}| - lambda^2 |xi - z|`, zero
/// for every admissible pair.
pub fn kelvin_distance_identity(spec: &InversionSpec, xi: &[f64], z: &[f64]) -> Result<f64> {
    let dx = spec.guard("kelvin_distance_identity", xi)?;
    let dz = spec.guard("kelvin_distance_identity", z)?;
    let xi_img = invert_point(spec, xi)?;
    let z_img = invert_point(spec, z)?;
    Ok(dz * dx * dist(&xi_img, &z_img) - spec.radius * spec.radius * dist(xi, z))
}

/// `L(x, lambda, z) = lambda^2 (1 + |z|^2) / (|z - x|^2 (1 + |z^{x,lambda}|^2))`.
///
/// For `lambda < sqrt(1 + |x|^2)` and `|z - x| > lambda` the value is below 1.
pub fn weight_ratio_l(spec: &InversionSpec, z: &[f64]) -> Result<f64> {
    let d = spec.guard("weight_ratio_l", z)?;
    let img = invert_point(spec, z)?;
    let lam2 = spec.radius * spec.radius;
    Ok(lam2 * (1.0 + norm2(z)) / (d * d * (1.0 + norm2(&img))))
}

/// Both sides of
/// `|z-x|^2 (1+|z^{x,lambda}|^2) - lambda^2 (1+|z|^2) = (|z-x|^2 - lambda^2)(1+|x|^2 - lambda^2)`.
pub fn weight_ratio_factorization(spec: &InversionSpec, z: &[f64]) -> Result<(f64, f64)> {
    let d = spec.guard("weight_ratio_factorization", z)?;
    let img = invert_point(spec, z)?;
    let lam2 = spec.radius * spec.radius;
    let lhs = d * d * (1.0 + norm2(&img)) - lam2 * (1.0 + norm2(z));
    let rhs = (d * d - lam2) * (1.0 + norm2(&spec.center) - lam2);
    Ok((lhs, rhs))
}

/// The two closed forms of the moving-spheres kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelForms {
    /// `|xi-z|^{2s-n} - (lambda/|xi-x|)^{n-2s} |xi^{x,lambda} - z|^{2s-n}`
    pub k1: f64,
    /// `|xi-z|^{2s-n} - (lambda/|z-x|)^{n-2s} |xi - z^{x,lambda}|^{2s-n}`
    pub k2: f64,
}

pub fn kernel_forms(spec: &InversionSpec, xi: &[f64], z: &[f64], params: &ProblemParams) -> Result<KernelForms> {
    let dxi = spec.guard("kernel_K", xi)?;
    let dz = spec.guard("kernel_K", z)?;
    let direct = dist(xi, z);
    if direct < SINGULAR_GUARD {
        return Err(singular("kernel_K", "xi and z coincide"));
    }
    let xi_img = invert_point(spec, xi)?;
    let z_img = invert_point(spec, z)?;
    let d1 = dist(&xi_img, z);
    let d2 = dist(xi, &z_img);
    if d1.min(d2) < SINGULAR_GUARD {
        return Err(singular("kernel_K", "reflected point coincides with the other argument"));
    }
    let p = params.kernel_power();
    let lam = spec.radius;
    let base = direct.powf(-p);
    Ok(KernelForms {
        k1: base - (lam / dxi).powf(p) * d1.powf(-p),
        k2: base - (lam / dz).powf(p) * d2.powf(-p),
    })
}

/// `K(x, lambda; xi, z)` in its first closed form.
pub fn kernel_k(spec: &InversionSpec, xi: &[f64], z: &[f64], params: &ProblemParams) -> Result<f64> {
    Ok(kernel_forms(spec, xi, z, params)?.k1)
}

/// Both sides of
/// `(|xi-x|/lambda)^2 |xi^{x,lambda} - z|^2 - |xi - z|^2 = (|z-x|^2 - lambda^2)(|xi-x|^2 - lambda^2)/lambda^2`.
pub fn kernel_positivity_factorization(spec: &InversionSpec, xi: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    let dxi = spec.guard("kernel_positivity_factorization", xi)?;
    let dz = spec.guard("kernel_positivity_factorization", z)?;
    let xi_img = invert_point(spec, xi)?;
    let lam2 = spec.radius * spec.radius;
    let lhs = dxi * dxi / lam2 * dist2(&xi_img, z) - dist2(xi, z);
    let rhs = (dz * dz - lam2) * (dxi * dxi - lam2) / lam2;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::Strategy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: u32) -> ProblemParams {
        ProblemParams::critical(n, 1.0).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    #[test]
    fn stereo_transfer_examples() {
        for (n, s) in [(3u32, 1.0), (5, 2.0), (6, 1.5)] {
            let p = ProblemParams::critical(n, s).unwrap();
            let origin = vec![0.0; n as usize];
            let expect = 2f64.powf(p.kernel_power() / 2.0);
            assert!((stereo_transfer(1.0, &p, &origin) - expect).abs() < 1e-14);
            let mut far = origin.clone();
            far[0] = 1e3;
            let scaled = stereo_transfer(0.7, &p, &far) * 1e3f64.powf(p.kernel_power());
            assert!((scaled - 0.7 * expect).abs() < 1e-5 * expect);
        }
    }

    #[test]
    fn zonal_transfer_uses_polar_angle() {
        let p = params(3);
        assert_eq!(polar_t(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(polar_t(&[1.0, 0.0, 0.0]), 0.0);
        let x = [0.3, -0.4, 1.2];
        let got = stereo_transfer_zonal(|t| 2.0 + t, &p, &x);
        assert!((got - stereo_transfer(2.0 + polar_t(&x), &p, &x)).abs() < 1e-15);
    }

    #[test]
    fn constant_solution_amplitude() {
        let p = ProblemParams::new(3, 1.0, 3.0, 0.5).unwrap();
        let b = Bubble::constant_solution(&p).unwrap();
        assert!((b.amplitude() - 0.5f64.sqrt()).abs() < 1e-15);
        // v = (1-eps)^{1/(alpha-1)} solves Q v = eps Q v + Q v^alpha
        let v = b.amplitude();
        assert!((v - (0.5 * v + v.powf(3.0))).abs() < 1e-15);
        assert!(Bubble::constant_solution(&ProblemParams::new(3, 1.0, 1.0, 0.5).unwrap()).is_err());
        assert!(Bubble::constant_solution(&ProblemParams::new(3, 1.0, 3.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn invert_point_examples() {
        let spec = InversionSpec::new(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(invert_point(&spec, &[2.0, 0.0, 0.0, 0.0]).unwrap(), vec![0.5, 0.0, 0.0, 0.0]);
        assert!(invert_point(&spec, &[0.0; 4]).is_err());
        assert!(invert_point(&spec, &[1e-9, 0.0, 0.0, 0.0]).is_err());
        assert!(invert_point(&spec, &[1.0, 0.0, 0.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = InversionSpec::new(vec![0.3, -1.0, 2.0], 1.7).unwrap();
        for _ in 0..100 {
            let dir = random_point(&mut rng, 3, 1.0);
            let k = 1.7 / norm(&dir);
            let on: Vec<f64> = spec.center().iter().zip(&dir).map(|(c, d)| c + k * d).collect();
            let img = invert_point(&spec, &on).unwrap();
            assert!(dist(&img, &on) < 1e-14);
        }
    }

    #[test]
    fn inversion_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let n = rng.gen_range(3..=6);
            let spec = InversionSpec::new(random_point(&mut rng, n, 2.0), rng.gen_range(0.2..3.0)).unwrap();
            let xi = random_point(&mut rng, n, 5.0);
            let back = invert_point(&spec, &invert_point(&spec, &xi).unwrap()).unwrap();
            assert!(dist(&back, &xi) <= 1e-12 * norm(&xi).max(1.0));
        }
    }

    #[test]
    fn standard_bubble_is_kelvin_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..=6u32 {
            let p = params(n);
            let u = Bubble::standard(n);
            let spec = InversionSpec::new(vec![0.0; n as usize], 1.0).unwrap();
            for _ in 0..200 {
                let xi = random_point(&mut rng, n as usize, 4.0);
                let direct = u.value(&xi, &p);
                let kelvin = kelvin_transform(|y| u.value(y, &p), &spec, &p, &xi).unwrap();
                assert!((kelvin - direct).abs() <= 1e-12 * direct);
            }
        }
    }

    #[test]
    fn double_kelvin_restores() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.gen_range(3..=6u32);
            let p = params(n);
            let spec = InversionSpec::new(random_point(&mut rng, n as usize, 2.0), rng.gen_range(0.3..2.5)).unwrap();
            let bubble = Bubble::new(1.3, 0.7, random_point(&mut rng, n as usize, 1.0)).unwrap();
            let u = |y: &[f64]| bubble.value(y, &p) * (1.0 + 0.1 * y[0].sin());
            for _ in 0..1000 {
                let xi = random_point(&mut rng, n as usize, 6.0);
                let once = |y: &[f64]| kelvin_transform(u, &spec, &p, y).unwrap();
                let twice = kelvin_transform(once, &spec, &p, &xi).unwrap();
                assert!((twice - u(&xi)).abs() <= 1e-10 * u(&xi));
            }
        }
    }

    #[test]
    fn kelvin_of_one() {
        let p = params(5);
        let spec = InversionSpec::new(vec![1.0, 0.0, 0.0, 0.0, 0.0], 0.8).unwrap();
        let xi = [2.0, 1.0, 0.0, -1.0, 0.5];
        let got = kelvin_transform(|_| 1.0, &spec, &p, &xi).unwrap();
        let expect = (0.8 / dist(&xi, spec.center())).powf(3.0);
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn distance_identity_cases() {
        let spec = InversionSpec::new(vec![0.5, 0.5, 0.0], 1.2).unwrap();
        let xi = [2.0, -1.0, 0.3];
        assert_eq!(kelvin_distance_identity(&spec, &xi, &xi).unwrap(), 0.0);
        let on_a = [0.5 + 1.2, 0.5, 0.0];
        let on_b = [0.5, 0.5 - 1.2, 0.0];
        assert!(kelvin_distance_identity(&spec, &on_a, &on_b).unwrap().abs() < 1e-14);
    }

    #[test]
    fn weight_ratio_cases() {
        let spec = InversionSpec::new(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        // |z - x| = lambda: z is its own image
        let z = [1.0, 1.0, 0.0];
        assert!((weight_ratio_l(&spec, &z).unwrap() - 1.0).abs() < 1e-15);
        let edge = InversionSpec::new(vec![1.0, 0.0, 0.0], 2f64.sqrt()).unwrap();
        for z in [[3.0, 1.0, -2.0], [0.1, 0.2, 0.3], [-5.0, 0.0, 0.0]] {
            assert!((weight_ratio_l(&edge, &z).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(weight_ratio_l(&spec, &[4.0, 0.0, 0.0]).unwrap() < 1.0);
        assert!(weight_ratio_l(&spec, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn kernel_vanishes_on_sphere_and_is_positive_outside() {
        let p = params(3);
        let spec = InversionSpec::new(vec![0.0, 1.0, 0.0], 0.9).unwrap();
        let on = [0.9, 1.0, 0.0];
        let z = [3.0, -1.0, 2.0];
        assert!(kernel_k(&spec, &on, &z, &p).unwrap().abs() < 1e-15);
        let xi = [0.0, 2.5, 1.0];
        assert!(kernel_k(&spec, &xi, &z, &p).unwrap() > 0.0);
        let forms = kernel_forms(&spec, &xi, &z, &p).unwrap();
        assert!((forms.k1 - forms.k2).abs() < 1e-14);
        assert!(kernel_k(&spec, &xi, &xi, &p).is_err());
    }

    #[test]
    fn inversion_jacobian_preserves_integrals() {
        use crate::quadrature::GaussLegendre;
        use std::f64::consts::PI;
        // bump (1 - |z - c|^2/R^2)^4 on B(c, R), integrated directly and after z -> z^{x,lambda}
        let c = [2.0, 0.5, -0.3];
        let radius = 0.6;
        let spec = InversionSpec::new(vec![0.2, 0.1, 0.0], 1.1).unwrap();
        let bump = |z: &[f64]| {
            let q = 1.0 - dist2(z, &c) / (radius * radius);
            if q > 0.0 {
                q.powi(4)
            } else {
                0.0
            }
        };
        // int_0^R (1 - r^2/R^2)^4 4 pi r^2 dr = 4 pi R^3 * 128/3465
        let direct = 4.0 * PI * radius.powi(3) * 128.0 / 3465.0;

        // image of B(c, R) is a ball; its diameter lies on the line through x and c
        let x = spec.center().to_vec();
        let axis: Vec<f64> = c.iter().zip(&x).map(|(a, b)| a - b).collect();
        let d = norm(&axis);
        let unit: Vec<f64> = axis.iter().map(|a| a / d).collect();
        let lam2 = spec.radius().powi(2);
        let (near, far) = (lam2 / (d + radius), lam2 / (d - radius));
        let img_center: Vec<f64> = x.iter().zip(&unit).map(|(x, u)| x + 0.5 * (near + far) * u).collect();
        let img_radius = 0.5 * (far - near);

        let gl = GaussLegendre::new(40).unwrap();
        let mut pulled = 0.0;
        for (rho, wr) in gl.graded(0.0, img_radius, crate::quadrature::Grading::None, 0, 1) {
            for (theta, wt) in gl.graded(0.0, PI, crate::quadrature::Grading::None, 0, 1) {
                for (phi, wp) in gl.graded(0.0, 2.0 * PI, crate::quadrature::Grading::None, 0, 2) {
                    let z = [
                        img_center[0] + rho * theta.sin() * phi.cos(),
                        img_center[1] + rho * theta.sin() * phi.sin(),
                        img_center[2] + rho * theta.cos(),
                    ];
                    let img = invert_point(&spec, &z).unwrap();
                    let jac = (spec.radius() / dist(&z, &x)).powi(6);
                    pulled += wr * wt * wp * rho * rho * theta.sin() * bump(&img) * jac;
                }
            }
        }
        assert!((pulled - direct).abs() < 1e-6 * direct, "{pulled} vs {direct}");
    }

    fn point(n: usize) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-4.0f64..4.0, n)
    }

    proptest::proptest! {
        #[test]
        fn prop_factorizations(
            (x, xi, z) in (3usize..=6).prop_flat_map(|n| (point(n), point(n), point(n))),
            lambda in 0.2f64..2.5,
        ) {
            use proptest::prelude::*;
            prop_assume!(dist(&x, &xi) > 1e-2 && dist(&x, &z) > 1e-2 && dist(&xi, &z) > 1e-2);
            let spec = InversionSpec::new(x.clone(), lambda).unwrap();
            let (lhs, rhs) = weight_ratio_factorization(&spec, &z).unwrap();
            let scale = dist2(&z, &x) * (1.0 + norm2(&z)) + lambda * lambda * (1.0 + norm2(&z));
            prop_assert!((lhs - rhs).abs() <= 1e-11 * scale);
            let (lhs, rhs) = kernel_positivity_factorization(&spec, &xi, &z).unwrap();
            let scale = dist2(&xi, &x) * dist2(&z, &x) / (lambda * lambda) + dist2(&xi, &z) + lambda * lambda;
            prop_assert!((lhs - rhs).abs() <= 1e-11 * scale);
            let back = invert_point(&spec, &invert_point(&spec, &xi).unwrap()).unwrap();
            prop_assert!(dist(&back, &xi) <= 1e-11 * (1.0 + norm(&xi)));
        }
    }
}
