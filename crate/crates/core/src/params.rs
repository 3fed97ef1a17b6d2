use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_functions::{gamma_ratio, riesz_constant};

/// The tuple `(n, s, alpha, epsilon)` describing one instance of the perturbed
/// problem `P v - eps Q v = Q v^alpha` on `S^n`.
///
/// Construction validates `n >= 3`, `s >= 1`, `n > 2s`, `0 < alpha <= (n+2s)/(n-2s)`
/// and `eps >= 0`; every derived constant is then well defined and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    n: u32,
    s: f64,
    alpha: f64,
    epsilon: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    n: u32,
    s: f64,
    alpha: f64,
    epsilon: f64,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ProblemParams::new(raw.n, raw.s, raw.alpha, raw.epsilon)
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams {
            n: p.n,
            s: p.s,
            alpha: p.alpha,
            epsilon: p.epsilon,
        }
    }
}

/// Relative slack allowed when comparing `alpha` against the critical exponent,
/// so that `(n+2s)/(n-2s)` typed in decimal is still accepted as critical.
const CRITICAL_SLACK: f64 = 1e-12;

impl ProblemParams {
    pub fn new(n: u32, s: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        validate_order(n, s)?;
        let crit = critical_exponent(n, s);
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        if alpha > crit * (1.0 + CRITICAL_SLACK) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} exceeds the critical exponent (n+2s)/(n-2s) = {crit}"
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Ok(Self {
            n,
            s,
            alpha: alpha.min(crit),
            epsilon,
        })
    }

    /// Critical exponent, `epsilon = 0`.
    pub fn critical(n: u32, s: f64) -> Result<Self> {
        validate_order(n, s)?;
        Self::new(n, s, critical_exponent(n, s), 0.0)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.n, self.s, self.alpha, epsilon)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.n, self.s, alpha, self.epsilon)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `n - 2s`, the homogeneity of the Riesz kernel and of the bubble.
    pub fn kernel_power(&self) -> f64 {
        self.dim() - 2.0 * self.s
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n, self.s)
    }

    pub fn is_critical(&self) -> bool {
        (self.alpha - self.critical_exponent()).abs() <= CRITICAL_SLACK * self.critical_exponent()
    }

    /// Critical Lebesgue exponent `2n/(n-2s)`.
    pub fn critical_lp(&self) -> f64 {
        2.0 * self.dim() / self.kernel_power()
    }

    /// `sigma = (n+2s)/2 - alpha (n-2s)/2`, clamped at zero against round-off
    /// when `alpha` is critical.
    pub fn sigma(&self) -> f64 {
        let sigma = 0.5 * (self.dim() + 2.0 * self.s) - 0.5 * self.alpha * self.kernel_power();
        if self.is_critical() {
            0.0
        } else {
            sigma.max(0.0)
        }
    }

    /// `Q = Gamma(n/2 + s) / Gamma(n/2 - s)`.
    pub fn q(&self) -> f64 {
        let half = 0.5 * self.dim();
        gamma_ratio(half - self.s, half + self.s)
    }

    /// `gamma_{2s,n} = C(2s) Q`, the prefactor of the integral equation on `R^n`.
    pub fn gamma_const(&self) -> f64 {
        riesz_constant(self.n, 2.0 * self.s).expect("validated params keep 0 < 2s < n") * self.q()
    }
}

fn critical_exponent(n: u32, s: f64) -> f64 {
    let n = f64::from(n);
    (n + 2.0 * s) / (n - 2.0 * s)
}

fn validate_order(n: u32, s: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("dimension n must be at least 3, got {n}")));
    }
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::InvalidParams(format!("order s must satisfy s >= 1, got {s}")));
    }
    if f64::from(n) <= 2.0 * s {
        return Err(Error::InvalidParams(format!(
            "need n > 2s, got n = {n}, s = {s}"
        )));
    }
    Ok(())
}
