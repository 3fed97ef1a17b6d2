//! Zonal calculus on `S^n`.
//!
//! A zonal function depends only on `t = cos(theta)`, the cosine of the angle
//! to a fixed pole, and integrates as
//! `int_{S^n} f = |S^{n-1}| int_{-1}^{1} f(t) (1 - t^2)^{(n-2)/2} dt`.
//! The basis `Y_l` is the `L^2(S^n)`-orthonormal zonal harmonic of degree `l`,
//! proportional to the Gegenbauer polynomial `C_l^{(n-1)/2}`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::{gauss_ultraspherical, Ultraspherical};
use crate::special_functions::{gjms_multiplier, ln_gamma};

pub const DEFAULT_DEGREE: usize = 64;
pub const DEFAULT_NODES: usize = 96;

/// Fraction of `L^2` energy above the analysis degree that triggers a warning.
pub const TAIL_WARN_FRACTION: f64 = 1e-8;

/// `|S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn surface_area(n: u32) -> f64 {
    let h = 0.5 * (f64::from(n) + 1.0);
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Gauss–Jacobi nodes in `t` for the weight `(1 - t^2)^{(n-2)/2}` together with
/// the orthonormal zonal basis sampled at those nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct ZonalGrid {
    n: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    prefactor: f64,
    /// Row `l`, column `j`: `Y_l(t_j)` for `l < node_count`.
    basis: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GridSpec {
    n: u32,
    node_count: usize,
}

impl TryFrom<GridSpec> for ZonalGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        make_grid(spec.n, spec.node_count)
    }
}

impl From<ZonalGrid> for GridSpec {
    fn from(g: ZonalGrid) -> Self {
        GridSpec {
            n: g.n,
            node_count: g.node_count(),
        }
    }
}

/// Builds the `m`-node zonal grid on `S^n`. Exact for polynomials in `t` of
/// degree `<= 2m - 1`.
pub fn make_grid(n: u32, m: usize) -> Result<ZonalGrid> {
    if n < 2 {
        return Err(domain("make_grid", format!("sphere dimension must be at least 2, got {n}")));
    }
    if m < 2 {
        return Err(domain("make_grid", format!("need at least 2 nodes, got {m}")));
    }
    let lambda = 0.5 * (f64::from(n) - 1.0);
    let (nodes, weights) = gauss_ultraspherical(m, lambda)?;
    let prefactor = surface_area(n - 1);
    let poly = Ultraspherical::new(lambda, m);
    let scale = prefactor.sqrt().recip();
    let mut basis = vec![0.0; m * m];
    let mut buf = vec![0.0; m];
    for (j, &t) in nodes.iter().enumerate() {
        poly.eval_all(t, &mut buf);
        for (l, q) in buf.iter().enumerate() {
            basis[l * m + j] = q * scale;
        }
    }
    Ok(ZonalGrid {
        n,
        nodes,
        weights,
        prefactor,
        basis,
    })
}

impl ZonalGrid {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for `(1 - t^2)^{(n-2)/2} dt`; multiply by [`Self::prefactor`] for
    /// the sphere measure.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|S^{n-1}|`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// `Y_l` sampled at the nodes, `l < node_count`.
    pub fn basis_row(&self, l: usize) -> &[f64] {
        let m = self.node_count();
        &self.basis[l * m..(l + 1) * m]
    }

    /// `int_{S^n} f` for samples `f_j` at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.prefactor * self.weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Orthonormal zonal harmonic `Y_l(t)` on `S^n`.
pub fn basis_eval(n: u32, l: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(domain("basis_eval", format!("sphere dimension must be at least 2, got {n}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(domain("basis_eval", format!("t = {t} outside [-1, 1]")));
    }
    let poly = Ultraspherical::new(0.5 * (f64::from(n) - 1.0), l);
    let mut buf = vec![0.0; l + 1];
    poly.eval_all(t, &mut buf);
    Ok(buf[l] / surface_area(n - 1).sqrt())
}

/// Coefficients `c_0..=c_L` of a zonal function in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsRepr", into = "CoeffsRepr")]
pub struct SpectralCoeffs {
    n: u32,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoeffsRepr {
    n: u32,
    degree_max: usize,
    values: Vec<f64>,
}

impl TryFrom<CoeffsRepr> for SpectralCoeffs {
    type Error = Error;

    fn try_from(r: CoeffsRepr) -> Result<Self> {
        if r.values.len() != r.degree_max + 1 {
            return Err(domain(
                "SpectralCoeffs",
                format!("degree_max {} but {} values", r.degree_max, r.values.len()),
            ));
        }
        SpectralCoeffs::new(r.n, r.values)
    }
}

impl From<SpectralCoeffs> for CoeffsRepr {
    fn from(c: SpectralCoeffs) -> Self {
        CoeffsRepr {
            n: c.n,
            degree_max: c.degree_max(),
            values: c.coeffs,
        }
    }
}

impl SpectralCoeffs {
    pub fn new(n: u32, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("SpectralCoeffs", "need at least the degree-0 coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(domain("SpectralCoeffs", "non-finite coefficient"));
        }
        Ok(Self { n, coeffs })
    }

    pub fn zeros(n: u32, degree_max: usize) -> Self {
        Self {
            n,
            coeffs: vec![0.0; degree_max + 1],
        }
    }

    /// Unit vector `e_l`.
    pub fn unit(n: u32, degree_max: usize, l: usize) -> Self {
        let mut c = Self::zeros(n, degree_max);
        c.coeffs[l] = 1.0;
        c
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn degree_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `sum c_l^2 = ||v||_{L^2}^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Fraction of the energy carried by degrees `l >= 1`.
    pub fn nonconstant_fraction(&self) -> f64 {
        let total = self.energy();
        if total == 0.0 {
            return 0.0;
        }
        self.coeffs[1..].iter().map(|c| c * c).sum::<f64>() / total
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| k * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.coeffs.len() != other.coeffs.len() {
            return Err(domain("SpectralCoeffs::add", "incompatible coefficient vectors"));
        }
        Ok(Self {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Samples of a zonal function at the nodes of a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FunctionRepr", into = "FunctionRepr")]
pub struct SphereFunction {
    grid: Arc<ZonalGrid>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FunctionRepr {
    n: u32,
    node_count: usize,
    values: Vec<f64>,
}

impl TryFrom<FunctionRepr> for SphereFunction {
    type Error = Error;

    fn try_from(r: FunctionRepr) -> Result<Self> {
        let grid = Arc::new(make_grid(r.n, r.node_count)?);
        SphereFunction::new(grid, r.values)
    }
}

impl From<SphereFunction> for FunctionRepr {
    fn from(f: SphereFunction) -> Self {
        FunctionRepr {
            n: f.grid.n(),
            node_count: f.grid.node_count(),
            values: f.values,
        }
    }
}

impl SphereFunction {
    pub fn new(grid: Arc<ZonalGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(domain(
                "SphereFunction",
                format!("{} samples for {} nodes", values.len(), grid.node_count()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("SphereFunction", "non-finite sample"));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(t)` at the nodes.
    pub fn from_fn(grid: Arc<ZonalGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<ZonalGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Pointwise `max(v, 0)`.
    pub fn clamped_nonnegative(&self) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn check_resolution(op: &'static str, grid: &ZonalGrid, degree: usize) -> Result<()> {
    if degree + 1 > grid.node_count() {
        return Err(domain(
            op,
            format!("degree {degree} needs at least {} nodes, grid has {}", degree + 1, grid.node_count()),
        ));
    }
    Ok(())
}

/// Coefficients up to degree `degree` together with the fraction of the
/// discrete energy that lies in degrees `degree + 1 ..= M - 1`.
pub fn analyze_with_tail(f: &SphereFunction, degree: usize) -> Result<(SpectralCoeffs, f64)> {
    let grid = f.grid();
    check_resolution("analyze", grid, degree)?;
    let m = grid.node_count();
    let weighted: Vec<f64> = grid
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| grid.prefactor() * w * v)
        .collect();
    let project = |l: usize| -> f64 { grid.basis_row(l).iter().zip(&weighted).map(|(y, v)| y * v).sum() };
    let coeffs: Vec<f64> = (0..=degree).map(project).collect();
    let head: f64 = coeffs.iter().map(|c| c * c).sum();
    let tail: f64 = (degree + 1..m).map(|l| project(l).powi(2)).sum();
    let total = head + tail;
    let fraction = if total > 0.0 { tail / total } else { 0.0 };
    Ok((SpectralCoeffs::new(grid.n(), coeffs)?, fraction))
}

/// `c_l = int f Y_l` by quadrature. Logs a warning when more than
/// [`TAIL_WARN_FRACTION`] of the energy lies above `degree`.
pub fn analyze(f: &SphereFunction, degree: usize) -> Result<SpectralCoeffs> {
    let (coeffs, tail) = analyze_with_tail(f, degree)?;
    if tail > TAIL_WARN_FRACTION {
        log::warn!(
            "analyze: {:.3e} of the energy lies above degree {degree}; coefficients are truncated",
            tail
        );
    }
    Ok(coeffs)
}

/// `sum_l c_l Y_l(t_j)` at the grid nodes.
pub fn synthesize(c: &SpectralCoeffs, grid: &Arc<ZonalGrid>) -> Result<SphereFunction> {
    if c.n() != grid.n() {
        return Err(domain(
            "synthesize",
            format!("coefficients on S^{} but grid on S^{}", c.n(), grid.n()),
        ));
    }
    check_resolution("synthesize", grid, c.degree_max())?;
    let m = grid.node_count();
    let mut values = vec![0.0; m];
    for (l, &cl) in c.values().iter().enumerate() {
        if cl == 0.0 {
            continue;
        }
        for (v, y) in values.iter_mut().zip(grid.basis_row(l)) {
            *v += cl * y;
        }
    }
    SphereFunction::new(Arc::clone(grid), values)
}

fn check_dimension(op: &'static str, c: &SpectralCoeffs, params: &ProblemParams) -> Result<()> {
    if c.n() != params.n() {
        return Err(domain(op, format!("coefficients on S^{} but params for n = {}", c.n(), params.n())));
    }
    Ok(())
}

/// `alpha_{2s,n}(l)` for `l = 0..=degree`.
pub fn multipliers(params: &ProblemParams, degree: usize) -> Vec<f64> {
    (0..=degree as u32).map(|l| gjms_multiplier(params, l)).collect()
}

/// Spectral application of `P_n^{2s}`: `c_l -> alpha_{2s,n}(l) c_l`.
pub fn apply_gjms(c: &SpectralCoeffs, params: &ProblemParams) -> Result<SpectralCoeffs> {
    check_dimension("apply_gjms", c, params)?;
    let coeffs = c
        .values()
        .iter()
        .zip(multipliers(params, c.degree_max()))
        .map(|(c, a)| a * c)
        .collect();
    SpectralCoeffs::new(c.n(), coeffs)
}

/// `int v P_n^{2s}(v) = sum_l alpha_{2s,n}(l) c_l^2`.
pub fn quadratic_form(c: &SpectralCoeffs, params: &ProblemParams) -> Result<f64> {
    check_dimension("quadratic_form", c, params)?;
    Ok(c
        .values()
        .iter()
        .zip(multipliers(params, c.degree_max()))
        .map(|(c, a)| a * c * c)
        .sum())
}

/// `(int |f|^p)^{1/p}` by quadrature.
pub fn lp_norm(f: &SphereFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(domain("lp_norm", format!("need finite p >= 1, got {p}")));
    }
    let integer = p.fract() == 0.0;
    if !integer && f.values().iter().any(|&v| v < 0.0) {
        return Err(domain("lp_norm", "negative sample with non-integer exponent"));
    }
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(p)).collect();
    Ok(f.grid().integrate(&powered).powf(1.0 / p))
}
