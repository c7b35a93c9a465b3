//! Scalar penalties on singular values and their proximal maps.
//!
//! The minimax p-th order concave penalty (MPCP) is
//!
//! ```text
//! psi(x) = |x| - |x|^(1+p) / ((1+p) tau)    if |x| <= tau^(1/p)
//!        = p tau^(1/p) / (1+p)              otherwise
//! ```
//!
//! with `tau > 1` and `0 < p < 1`. At `p = 1` it is the minimax concave
//! penalty (MCP). As `tau -> inf` it tends to `|x|`, which is the penalty
//! behind the tensor nuclear norm (TNN).

use crate::error::{Error, Result};

/// Iteration cap for the fixed-point map before switching to Newton steps.
pub const FIXED_POINT_MAX_ITER: usize = 200;
/// Relative step size at which the fixed-point map is considered converged.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Half-width of the band around `h_a` treated as the tie `|y| == h_a`.
pub const TIE_TOL: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    Mpcp,
    Mcp,
    Tnn,
}

impl PenaltyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyKind::Mpcp => "mpcp",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::Tnn => "tnn",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mpcp" => Ok(PenaltyKind::Mpcp),
            "mcp" => Ok(PenaltyKind::Mcp),
            "tnn" => Ok(PenaltyKind::Tnn),
            other => Err(Error::InvalidParameter(format!("unknown penalty '{other}'"))),
        }
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A validated penalty: kind plus `p` and `tau`.
///
/// TNN carries `p = 1` and `tau = inf`, which makes the shared formula
/// collapse to `|x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    p: f64,
    tau: f64,
}

impl PenaltySpec {
    /// MPCP with exponent `p` and threshold `tau`. `p == 1` yields MCP.
    pub fn mpcp(p: f64, tau: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1], got {p}"
            )));
        }
        if p == 1.0 {
            return Self::mcp(tau);
        }
        check_tau(tau)?;
        Ok(Self {
            kind: PenaltyKind::Mpcp,
            p,
            tau,
        })
    }

    pub fn mcp(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            kind: PenaltyKind::Mcp,
            p: 1.0,
            tau,
        })
    }

    pub fn tnn() -> Self {
        Self {
            kind: PenaltyKind::Tnn,
            p: 1.0,
            tau: f64::INFINITY,
        }
    }

    /// Builds a penalty from the `(p, tau^p)` parameterization used on the
    /// command line: `tau = (tau^p)^(1/p)`. MCP takes `tau = tau^p` (p = 1)
    /// and TNN ignores both numbers.
    pub fn from_tau_p(kind: PenaltyKind, p: f64, tau_p: f64) -> Result<Self> {
        match kind {
            PenaltyKind::Tnn => Ok(Self::tnn()),
            PenaltyKind::Mcp => Self::mcp(tau_p),
            PenaltyKind::Mpcp => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "p must lie in (0, 1], got {p}"
                    )));
                }
                if !(tau_p.is_finite() && tau_p > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "tau^p must be finite and > 1, got {tau_p}"
                    )));
                }
                Self::mpcp(p, tau_p.powf(1.0 / p))
            }
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `tau^(1/p)`: beyond this magnitude the penalty is flat.
    pub fn boundary(&self) -> f64 {
        self.tau.powf(1.0 / self.p)
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            PenaltyKind::Tnn => x.abs(),
            _ => penalty_formula(x, self.p, self.tau),
        }
    }

    /// Proximal map `argmin_x 0.5 (x - y)^2 + rho * penalty(x)`.
    pub fn prox(&self, y: f64, rho: f64) -> Result<f64> {
        Ok(self.prox_detailed(y, rho)?.x)
    }

    pub fn prox_detailed(&self, y: f64, rho: f64) -> Result<ProxResult> {
        match self.kind {
            PenaltyKind::Mpcp => mpcp_prox(y, rho, self),
            PenaltyKind::Mcp => mcp_prox(y, rho, self),
            PenaltyKind::Tnn => {
                check_rho(rho)?;
                let x = soft_threshold(y, rho);
                let branch = if x == 0.0 {
                    ProxBranch::Zero
                } else {
                    ProxBranch::Shrink
                };
                Ok(ProxResult {
                    x,
                    iterations: 0,
                    branch,
                })
            }
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be > 1, got {tau}"
        )));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "prox weight must be finite and non-negative, got {rho}"
        )));
    }
    Ok(())
}

fn penalty_formula(x: f64, p: f64, tau: f64) -> f64 {
    let a = x.abs();
    let boundary = tau.powf(1.0 / p);
    if a <= boundary {
        a - a.powf(1.0 + p) / ((1.0 + p) * tau)
    } else {
        p * boundary / (1.0 + p)
    }
}

/// MPCP value (the MCP value when `spec` is MCP).
pub fn mpcp_value(x: f64, spec: &PenaltySpec) -> f64 {
    penalty_formula(x, spec.p, spec.tau)
}

/// MCP `h_tau(x)`.
pub fn mcp_value(x: f64, tau: f64) -> f64 {
    let a = x.abs();
    if a <= tau {
        a - a * a / (2.0 * tau)
    } else {
        tau / 2.0
    }
}

/// Derivative of the penalty on `[0, inf)`, evaluated at `|x|`.
pub fn mpcp_derivative(x: f64, spec: &PenaltySpec) -> f64 {
    let a = x.abs();
    if a <= spec.boundary() {
        1.0 - a.powf(spec.p) / spec.tau
    } else {
        0.0
    }
}

/// Which case of the proximal map produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxBranch {
    /// Output is exactly zero.
    Zero,
    /// `|y|` tied with the threshold `h_a`; output is `x_a sign(y)`.
    Boundary,
    /// Larger root of the stationarity equation, found iteratively.
    FixedPoint,
    /// Closed-form shrinkage (MCP middle region, soft thresholding).
    Shrink,
    /// Output equals the input.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult {
    pub x: f64,
    pub iterations: usize,
    pub branch: ProxBranch,
}

impl ProxResult {
    fn zero() -> Self {
        Self {
            x: 0.0,
            iterations: 0,
            branch: ProxBranch::Zero,
        }
    }

    fn identity(y: f64) -> Self {
        Self {
            x: y,
            iterations: 0,
            branch: ProxBranch::Identity,
        }
    }
}

/// Thresholds `(x_a, h_a)` of the MPCP proximal map:
/// `x_a = (2 rho p / ((1+p) tau))^(1/(1-p))`, `h_a = x_a - rho x_a^p / tau + rho`.
pub fn mpcp_thresholds(rho: f64, spec: &PenaltySpec) -> (f64, f64) {
    let (p, tau) = (spec.p, spec.tau);
    let x_a = (2.0 * rho * p / ((1.0 + p) * tau)).powf(1.0 / (1.0 - p));
    let h_a = x_a - rho * x_a.powf(p) / tau + rho;
    (x_a, h_a)
}

/// MPCP proximal map.
///
/// When `x_a < tau^(1/p)` the minimizer is: 0 below `h_a`, `x_a` at the tie,
/// the larger root of `x - rho x^p / tau + rho = |y|` between `h_a` and
/// `tau^(1/p)` (fixed-point iteration from `x_0 = |y|`), and `y` itself
/// beyond `tau^(1/p)`. When the weight is so large that `x_a >= tau^(1/p)`,
/// no interior point beats 0 and the map is a hard threshold between 0 and
/// `y` at `sqrt(2 rho p tau^(1/p) / (1+p))`.
pub fn mpcp_prox(y: f64, rho: f64, spec: &PenaltySpec) -> Result<ProxResult> {
    if spec.kind != PenaltyKind::Mpcp {
        return Err(Error::InvalidParameter(format!(
            "mpcp_prox called with a {} penalty",
            spec.kind
        )));
    }
    check_rho(rho)?;
    if !y.is_finite() {
        return Err(Error::InvalidParameter(format!("prox input {y} is not finite")));
    }
    let a = y.abs();
    if a == 0.0 {
        return Ok(ProxResult::zero());
    }
    if rho == 0.0 {
        return Ok(ProxResult::identity(y));
    }
    let (p, tau) = (spec.p, spec.tau);
    let boundary = spec.boundary();
    let (x_a, h_a) = mpcp_thresholds(rho, spec);

    if x_a >= boundary {
        let flat = p * boundary / (1.0 + p);
        // g(0) = y^2 / 2 against g(y) = rho * flat.
        return Ok(if a >= boundary && 0.5 * a * a > rho * flat {
            ProxResult::identity(y)
        } else {
            ProxResult::zero()
        });
    }
    if a >= boundary {
        return Ok(ProxResult::identity(y));
    }
    if (a - h_a).abs() <= TIE_TOL {
        return Ok(ProxResult {
            x: x_a.copysign(y),
            iterations: 0,
            branch: ProxBranch::Boundary,
        });
    }
    if a < h_a {
        return Ok(ProxResult::zero());
    }

    let step_tol = FIXED_POINT_TOL * a.max(1.0);
    let alpha = |x: f64| a - rho + rho * x.powf(p) / tau;
    let mut x = a;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < FIXED_POINT_MAX_ITER {
        let next = alpha(x);
        iterations += 1;
        let step = (next - x).abs();
        x = next;
        if step <= step_tol {
            converged = true;
            break;
        }
    }
    // The contraction factor near x_a approaches (1+p)/2, so for p close to 1
    // the cap can bind. The iterate is still to the right of the root, where
    // Newton on the convex m(x) = x + rho - rho x^p / tau decreases monotonically.
    let mut newton = 0;
    while !converged && newton < NEWTON_MAX_ITER {
        let m = x + rho - rho * x.powf(p) / tau - a;
        let dm = 1.0 - rho * p * x.powf(p - 1.0) / tau;
        let next = x - m / dm;
        newton += 1;
        let step = (next - x).abs();
        x = next;
        if step <= step_tol {
            converged = true;
            x = alpha(x);
        }
    }
    iterations += newton;
    if !converged || !x.is_finite() {
        return Err(Error::ProxNotConverged { y, iterations });
    }
    Ok(ProxResult {
        x: x.copysign(y),
        iterations,
        branch: ProxBranch::FixedPoint,
    })
}

/// MCP proximal map (firm thresholding).
///
/// For `rho < tau`: 0 when `|y| <= rho`, `sign(y) (|y| - rho) / (1 - rho/tau)`
/// when `rho < |y| <= tau`, `y` beyond `tau`. For `rho >= tau` the
/// subproblem is concave on `[0, tau]` and the minimizer is a hard
/// threshold at `sqrt(rho tau)`.
pub fn mcp_prox(y: f64, rho: f64, spec: &PenaltySpec) -> Result<ProxResult> {
    if spec.kind != PenaltyKind::Mcp {
        return Err(Error::InvalidParameter(format!(
            "mcp_prox called with a {} penalty",
            spec.kind
        )));
    }
    check_rho(rho)?;
    let tau = spec.tau;
    let a = y.abs();
    if rho >= tau {
        return Ok(if a > (rho * tau).sqrt() {
            ProxResult::identity(y)
        } else {
            ProxResult::zero()
        });
    }
    Ok(if a <= rho {
        ProxResult::zero()
    } else if a > tau {
        ProxResult::identity(y)
    } else {
        ProxResult {
            x: ((a - rho) / (1.0 - rho / tau)).copysign(y),
            iterations: 0,
            branch: ProxBranch::Shrink,
        }
    })
}

/// Soft thresholding, the proximal map of `|x|`.
pub fn soft_threshold(y: f64, rho: f64) -> f64 {
    let a = y.abs() - rho;
    if a > 0.0 {
        a.copysign(y)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn objective(spec: &PenaltySpec, y: f64, rho: f64, x: f64) -> f64 {
        0.5 * (x - y) * (x - y) + rho * spec.value(x)
    }

    fn grid_min(spec: &PenaltySpec, y: f64, rho: f64, step: f64) -> (f64, f64) {
        let lo = -y.abs() - 1.0;
        let n = ((2.0 * (y.abs() + 1.0)) / step).ceil() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|x| (x, objective(spec, y, rho, x)))
            .fold((0.0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    #[test]
    fn validates_parameters() {
        assert!(PenaltySpec::mpcp(0.0, 2.0).is_err());
        assert!(PenaltySpec::mpcp(1.2, 2.0).is_err());
        assert!(PenaltySpec::mpcp(0.5, 1.0).is_err());
        assert!(PenaltySpec::mcp(0.5).is_err());
        assert_eq!(PenaltySpec::mpcp(1.0, 3.0).unwrap().kind(), PenaltyKind::Mcp);
        let s = PenaltySpec::from_tau_p(PenaltyKind::Mpcp, 0.5, 3.0).unwrap();
        assert!((s.tau() - 9.0).abs() < 1e-12);
        assert!((s.boundary() - 81.0).abs() < 1e-9);
    }

    #[test]
    fn value_examples() {
        let s = PenaltySpec::mpcp(0.5, 2.0).unwrap();
        assert_eq!(mpcp_value(0.0, &s), 0.0);
        // Flat region: p tau^(1/p) / (1+p) = 0.5 * 4 / 1.5.
        assert!((mpcp_value(10.0, &s) - 4.0 / 3.0).abs() < 1e-15);
        assert!((mpcp_value(-10.0, &s) - 4.0 / 3.0).abs() < 1e-15);
        let m = PenaltySpec::mcp(3.0).unwrap();
        for x in [-5.0, -3.0, -1.2, 0.0, 0.7, 2.9, 3.0, 4.0] {
            assert!((mpcp_value(x, &m) - mcp_value(x, 3.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        let s = PenaltySpec::mpcp(0.5, 2.0).unwrap();
        assert_eq!(mpcp_derivative(0.0, &s), 1.0);
        assert!(mpcp_derivative(s.boundary(), &s).abs() < 1e-15);
        assert!((mpcp_derivative(1.0, &s) - 0.5).abs() < 1e-15);
        assert_eq!(mpcp_derivative(5.0, &s), 0.0);
    }

    #[test]
    fn prox_worked_example() {
        let s = PenaltySpec::mpcp(0.5, 2.0).unwrap();
        let (x_a, h_a) = mpcp_thresholds(1.0, &s);
        assert!((x_a - 1.0 / 9.0).abs() < 1e-15);
        assert!((h_a - (1.0 / 9.0 - 1.0 / 6.0 + 1.0)).abs() < 1e-15);
        assert_eq!(mpcp_prox(0.0, 1.0, &s).unwrap().x, 0.0);
        assert_eq!(mpcp_prox(0.5, 1.0, &s).unwrap().x, 0.0);
        let r = mpcp_prox(2.0, 1.0, &s).unwrap();
        assert_eq!(r.branch, ProxBranch::FixedPoint);
        // Root of x - 0.5 sqrt(x) - 1 = 0: sqrt(x) = (0.5 + sqrt(4.25)) / 2.
        let root = ((0.5 + 4.25f64.sqrt()) / 2.0).powi(2);
        assert!((r.x - root).abs() < 1e-10);
        assert!((r.x - 1.6404).abs() < 1e-4);
        let (gx, gv) = grid_min(&s, 2.0, 1.0, 1e-6);
        assert!((gx - r.x).abs() < 1e-5);
        assert!(objective(&s, 2.0, 1.0, r.x) <= gv + 1e-12);
        assert_eq!(mpcp_prox(-2.0, 1.0, &s).unwrap().x, -r.x);
        assert_eq!(mpcp_prox(4.5, 1.0, &s).unwrap().x, 4.5);
    }

    #[test]
    fn prox_tie_returns_x_a() {
        let s = PenaltySpec::mpcp(0.5, 2.0).unwrap();
        let (x_a, h_a) = mpcp_thresholds(1.0, &s);
        let r = mpcp_prox(-h_a, 1.0, &s).unwrap();
        assert_eq!(r.branch, ProxBranch::Boundary);
        assert_eq!(r.x, -x_a);
    }

    #[test]
    fn prox_large_weight_is_hard_threshold() {
        let s = PenaltySpec::mpcp(0.9, 2.0).unwrap();
        let rho = 50.0;
        let (x_a, _) = mpcp_thresholds(rho, &s);
        assert!(x_a >= s.boundary());
        for y in [0.5, 2.0, 5.0, 9.0, 12.0, 30.0] {
            let x = mpcp_prox(y, rho, &s).unwrap().x;
            assert!(x == 0.0 || x == y);
            let (_, gv) = grid_min(&s, y, rho, 1e-4);
            assert!(objective(&s, y, rho, x) <= gv + 1e-9, "y={y}");
        }
    }

    #[test]
    fn prox_near_one_needs_more_than_the_cap() {
        let s = PenaltySpec::mpcp(0.95, 3.0).unwrap();
        let (_, h_a) = mpcp_thresholds(1.0, &s);
        let y = h_a + 1e-3;
        let r = mpcp_prox(y, 1.0, &s).unwrap();
        assert_eq!(r.branch, ProxBranch::FixedPoint);
        let resid = (r.x - (y - 1.0 + r.x.powf(0.95) / 3.0)).abs();
        assert!(resid <= 1e-10, "{resid}");
    }

    #[test]
    fn prox_rejects_wrong_kind() {
        let m = PenaltySpec::mcp(4.0).unwrap();
        assert!(mpcp_prox(1.0, 1.0, &m).is_err());
        let s = PenaltySpec::mpcp(0.5, 2.0).unwrap();
        assert!(mcp_prox(1.0, 1.0, &s).is_err());
        assert!(mpcp_prox(1.0, -1.0, &s).is_err());
    }

    #[test]
    fn mcp_examples() {
        let m = PenaltySpec::mcp(4.0).unwrap();
        assert_eq!(mcp_prox(0.8, 1.0, &m).unwrap().x, 0.0);
        assert_eq!(mcp_prox(-1.0, 1.0, &m).unwrap().x, 0.0);
        assert_eq!(mcp_prox(5.0, 1.0, &m).unwrap().x, 5.0);
        let r = mcp_prox(2.0, 1.0, &m).unwrap();
        assert!((r.x - 4.0 / 3.0).abs() < 1e-15);
        let (gx, _) = grid_min(&m, 2.0, 1.0, 1e-6);
        assert!((gx - 4.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn mcp_large_weight_matches_grid() {
        let m = PenaltySpec::mcp(2.0).unwrap();
        for (y, rho) in [(1.5, 3.0), (2.4, 3.0), (2.5, 3.0), (4.0, 2.0), (-7.0, 5.0)] {
            let x = mcp_prox(y, rho, &m).unwrap().x;
            let (_, gv) = grid_min(&m, y, rho, 1e-4);
            assert!(objective(&m, y, rho, x) <= gv + 1e-9, "y={y} rho={rho}");
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
    }

    #[test]
    fn tnn_penalty_is_absolute_value() {
        let t = PenaltySpec::tnn();
        assert_eq!(t.value(-2.5), 2.5);
        assert_eq!(t.prox(-2.5, 1.0).unwrap(), -1.5);
        let s = PenaltySpec::from_tau_p(PenaltyKind::Tnn, 0.3, 7.0).unwrap();
        assert_eq!(s, t);
    }

    fn mpcp_strategy() -> impl Strategy<Value = PenaltySpec> {
        (0.05f64..0.95, 2.0f64..200.0)
            .prop_map(|(p, tp)| PenaltySpec::from_tau_p(PenaltyKind::Mpcp, p, tp).unwrap())
    }

    proptest! {
        #[test]
        fn penalty_is_even(spec in mpcp_strategy(), x in -50.0f64..50.0) {
            prop_assert_eq!(spec.value(x), spec.value(-x));
        }

        #[test]
        fn prox_is_odd(spec in mpcp_strategy(), y in -20.0f64..20.0, rho in 0.01f64..5.0) {
            prop_assert_eq!(spec.prox(-y, rho).unwrap(), -spec.prox(y, rho).unwrap());
        }

        #[test]
        fn monotone_concave_subadditive(p in 0.05f64..0.95, tau in 1.1f64..8.0,
                                        x1 in 0.0f64..40.0, dx in 0.0f64..40.0) {
            let spec = PenaltySpec::mpcp(p, tau).unwrap();
            let x2 = x1 + dx;
            let slack = 1e-12 * (1.0 + x2);
            prop_assert!(spec.value(x1) <= spec.value(x2) + slack);
            prop_assert!(spec.value(0.5 * (x1 + x2)) + slack >= 0.5 * (spec.value(x1) + spec.value(x2)));
            prop_assert!(spec.value(x1 + x2) <= spec.value(x1) + spec.value(x2) + slack);
        }

        #[test]
        fn derivative_matches_finite_difference(p in 0.05f64..0.95, tau in 1.5f64..8.0, u in 0.02f64..0.98) {
            let spec = PenaltySpec::mpcp(p, tau).unwrap();
            let b = spec.boundary();
            let x = 0.01 + u * (b - 0.02);
            prop_assume!(x > 0.01 && b - x > 1e-3);
            let h = 1e-6 * x.min(b - x);
            let fd = (spec.value(x + h) - spec.value(x - h)) / (2.0 * h);
            prop_assert!((fd - mpcp_derivative(x, &spec)).abs() < 1e-6);
        }

        #[test]
        fn derivative_is_non_increasing(p in 0.05f64..0.95, tau in 1.1f64..8.0,
                                        x in 0.0f64..100.0, dx in 0.0f64..10.0) {
            let spec = PenaltySpec::mpcp(p, tau).unwrap();
            let (d1, d2) = (mpcp_derivative(x, &spec), mpcp_derivative(x + dx, &spec));
            prop_assert!((0.0..=1.0).contains(&d1));
            prop_assert!(d2 <= d1 + 1e-15);
        }

        #[test]
        fn prox_beats_coarse_grid(spec in mpcp_strategy(), y in -8.0f64..8.0, rho in 0.01f64..5.0) {
            let x = spec.prox(y, rho).unwrap();
            let (_, gv) = grid_min(&spec, y, rho, 1e-3);
            prop_assert!(objective(&spec, y, rho, x) <= gv + 1e-9);
        }
    }
}
