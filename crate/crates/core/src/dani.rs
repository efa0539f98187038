//! The multiplicative Dani correspondence between a non-increasing
//! approximating function psi and the cusp-excursion radius R, defined by
//! psi(e^{t - n R(t)}) = e^{-t - m R(t)}.

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::dims::Dims;
use crate::error::{Error, Result};

/// Default absolute bisection tolerance on R; downstream exponentials then
/// lose at most ~1e-12 relative accuracy.
pub const DEFAULT_TOL: f64 = 1e-12;

/// An approximating function. All variants are continuous, non-increasing
/// and map into (0, 1] on [1, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PsiSpec {
    /// min{1, c/x}: the hard Dirichlet function with constant c > 0.
    Hard { c: f64 },
    /// e^{-1} below e, then x^{-1} (log x)^{-lambda}.
    LogPower { lambda: f64 },
    /// Monotone sample table, interpolated piecewise linearly in
    /// (log x, log psi) coordinates and clamped beyond the ends.
    Table { points: Vec<[f64; 2]> },
}

impl PsiSpec {
    pub fn hard(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain(format!("hard-Dirichlet constant must be > 0, got {c}")));
        }
        Ok(PsiSpec::Hard { c })
    }

    pub fn log_power(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::domain(format!("log-power exponent must be >= 0, got {lambda}")));
        }
        Ok(PsiSpec::LogPower { lambda })
    }

    /// Table points must have ascending positive x and values in (0, 1];
    /// monotonicity of the values is deliberately not enforced here, so that
    /// `verify_monotonicity` can detect ill-posed inputs downstream.
    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("tabulated psi needs at least one point"));
        }
        for w in points.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return Err(Error::domain("tabulated psi abscissae must be strictly ascending"));
            }
        }
        for p in &points {
            if !(p[0] > 0.0) || !(p[1] > 0.0) {
                return Err(Error::domain("tabulated psi needs positive x and psi(x)"));
            }
            if p[0] >= 1.0 && p[1] > 1.0 {
                return Err(Error::domain(
                    "tabulated psi must map [1, inf) into (0, 1]; rescale the table",
                ));
            }
        }
        Ok(PsiSpec::Table { points })
    }

    /// Re-validates a deserialized spec.
    pub fn validate(&self) -> Result<()> {
        match self {
            PsiSpec::Hard { c } => PsiSpec::hard(*c).map(|_| ()),
            PsiSpec::LogPower { lambda } => PsiSpec::log_power(*lambda).map(|_| ()),
            PsiSpec::Table { points } => PsiSpec::table(points.clone()).map(|_| ()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PsiSpec::Hard { c } => (c / x).min(1.0),
            PsiSpec::LogPower { lambda } => {
                if x < std::f64::consts::E {
                    (-1.0f64).exp()
                } else {
                    1.0 / (x * x.ln().powf(*lambda))
                }
            }
            PsiSpec::Table { points } => {
                let lx = x.ln();
                if lx <= points[0][0].ln() {
                    return points[0][1];
                }
                let last = points.len() - 1;
                if lx >= points[last][0].ln() {
                    return points[last][1];
                }
                for w in points.windows(2) {
                    let (x0, x1) = (w[0][0].ln(), w[1][0].ln());
                    if lx <= x1 {
                        let f = (lx - x0) / (x1 - x0);
                        let ly = w[0][1].ln() * (1.0 - f) + w[1][1].ln() * f;
                        return ly.exp();
                    }
                }
                unreachable!()
            }
        }
    }

    pub fn log_eval(&self, x: f64) -> f64 {
        self.eval(x).ln()
    }
}

/// Constant radius for the hard Dirichlet function: log(1/c)/(m+n).
pub fn r_hard(dims: Dims, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("r_hard requires c > 0, got {c}")));
    }
    Ok((1.0 / c).ln() / dims.d() as f64)
}

/// Solves psi(e^{t - nR}) = e^{-t - mR} for R by bisection on
/// G(R) = log psi(e^{t - nR}) + t + mR, which is non-decreasing in R.
pub fn solve_r(psi: &PsiSpec, dims: Dims, t: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("solver tolerance must be positive"));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("solve_r requires t >= 0, got {t}")));
    }
    psi.validate()?;
    let (m, n) = (dims.m as f64, dims.n as f64);
    let g = |r: f64| psi.log_eval((t - n * r).exp()) + t + m * r;

    // Geometric bracket expansion around 0.
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let mut step = 1.0f64;
    let mut doublings = 0usize;
    while g(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Solver(
                "bracketing failed on the decreasing side; psi violates the correspondence hypotheses".into(),
            ));
        }
    }
    step = 1.0;
    while g(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Solver(
                "bracketing failed on the increasing side; psi violates the correspondence hypotheses".into(),
            ));
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least t at which the log-power radius switches to its implicit equation,
/// i.e. the unique t with t - n R_lambda(t) = e. At that point the defining
/// equation forces R = lambda/(m+n), giving the closed form below.
pub fn t_lambda(dims: Dims, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("t_lambda requires lambda >= 0, got {lambda}")));
    }
    Ok(std::f64::consts::E + dims.n as f64 * lambda / dims.d() as f64)
}

/// Radius for the log-power function on t >= t_lambda: the root of
/// (m+n) R = lambda log(t - n R) on [0, t/n).
pub fn solve_r_logpower(dims: Dims, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be >= 0, got {lambda}")));
    }
    let t_min = t_lambda(dims, lambda)?;
    if t < t_min - 1e-12 {
        return Err(Error::domain(format!(
            "solve_r_logpower requires t >= t_lambda = {t_min}, got t = {t}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let (d, n) = (dims.d() as f64, dims.n as f64);
    let f = |r: f64| d * r - lambda * (t - n * r).ln();
    let mut lo = 0.0f64;
    let mut hi = (t / n) * (1.0 - 1e-12);
    if f(lo) > 0.0 {
        // t barely below t_lambda up to round-off.
        return Ok(0.0);
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A psi together with its solved radius function and an evaluation cache.
#[derive(Debug)]
pub struct RFunction {
    psi: PsiSpec,
    dims: Dims,
    tol: f64,
    cache: RwLock<BTreeMap<u64, f64>>,
}

impl RFunction {
    pub fn new(psi: PsiSpec, dims: Dims) -> Result<Self> {
        psi.validate()?;
        Ok(RFunction { psi, dims, tol: DEFAULT_TOL, cache: RwLock::new(BTreeMap::new()) })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn psi(&self) -> &PsiSpec {
        &self.psi
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let key = t.to_bits();
        if let Some(&r) = self.cache.read().unwrap().get(&key) {
            return Ok(r);
        }
        let r = solve_r(&self.psi, self.dims, t, self.tol)?;
        self.cache.write().unwrap().insert(key, r);
        Ok(r)
    }

    /// Residual of the correspondence equation at t, relative to 1 + t.
    pub fn round_trip_residual(&self, t: f64) -> Result<f64> {
        let r = self.eval(t)?;
        let (m, n) = (self.dims.m as f64, self.dims.n as f64);
        let lhs = self.psi.log_eval((t - n * r).exp());
        Ok((lhs + t + m * r).abs() / (1.0 + t))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MonotonicityViolation {
    /// t - nR failed to strictly increase between the two grid points.
    Increasing { t0: f64, t1: f64, v0: f64, v1: f64 },
    /// t + mR decreased between the two grid points.
    NonDecreasing { t0: f64, t1: f64, v0: f64, v1: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub violations: Vec<MonotonicityViolation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Grid check of the two structural conditions on R: t - nR strictly
/// increasing and t + mR non-decreasing, up to a small relative tolerance.
pub fn verify_monotonicity(r_fn: &RFunction, t_grid: &[f64]) -> Result<MonotonicityReport> {
    let (m, n) = (r_fn.dims.m as f64, r_fn.dims.n as f64);
    let mut report = MonotonicityReport::default();
    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if !(t1 > t0) {
            return Err(Error::domain("verify_monotonicity needs a strictly sorted grid"));
        }
        let (r0, r1) = (r_fn.eval(t0)?, r_fn.eval(t1)?);
        let tol = 1e-9 * (1.0 + t1.abs());
        let (u0, u1) = (t0 - n * r0, t1 - n * r1);
        if u1 - u0 <= -tol {
            report.violations.push(MonotonicityViolation::Increasing { t0, t1, v0: u0, v1: u1 });
        }
        let (v0, v1) = (t0 + m * r0, t1 + m * r1);
        if v1 - v0 < -tol {
            report
                .violations
                .push(MonotonicityViolation::NonDecreasing { t0, t1, v0, v1 });
        }
    }
    Ok(report)
}
