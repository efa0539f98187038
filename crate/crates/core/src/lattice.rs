//! Shortest vectors of diagonally flowed lattices in the supremum norm, and
//! the Minkowski convex-body search behind the multiplicative Dirichlet
//! guarantee.
//!
//! The lattice attached to Y consists of the vectors
//! (Y_i q - p_i)_{i<=m} ++ (q_j)_{j<=n} over integer (p, q); flowing by a
//! Cartan vector scales coordinate k by e^{a_k}. All norm comparisons happen
//! in log domain; an exact zero residual maps to -inf.

use serde::{Deserialize, Serialize};

use crate::cartan::CartanVector;
use crate::dims::Dims;
use crate::error::{Error, Result};

/// Default cap on the number of candidate q vectors enumerated per query.
pub const ENUM_BUDGET: f64 = 1e9;
/// Cap on flow-time magnitude: e^30 keeps box bounds in exact-integer range.
pub const MAX_FLOW_MAG: f64 = 30.0;

/// The m x n real matrix under approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixY {
    dims: Dims,
    rows: Vec<Vec<f64>>,
}

impl MatrixY {
    pub fn new(dims: Dims, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != dims.m || rows.iter().any(|r| r.len() != dims.n) {
            return Err(Error::DimensionMismatch {
                expected: dims.m * dims.n,
                got: rows.iter().map(|r| r.len()).sum(),
            });
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        Ok(MatrixY { dims, rows })
    }

    pub fn zero(dims: Dims) -> Self {
        MatrixY { dims, rows: vec![vec![0.0; dims.n]; dims.m] }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_dot(&self, i: usize, q: &[i64]) -> f64 {
        self.rows[i].iter().zip(q).map(|(y, &qj)| y * qj as f64).sum()
    }

    /// Residual to the nearest integer, with the integer part. Round-half
    /// ties break toward even.
    pub fn residual(&self, i: usize, q: &[i64]) -> (f64, i64) {
        let x = self.row_dot(i, q);
        let p = x.round_ties_even();
        (x - p, p as i64)
    }
}

/// Shortest-vector result. `log_delta` is the authoritative value; `delta`
/// is its exponential. The witness is stored in the convention where the
/// lattice vector reads (Y_i q - p_i, q_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortestResult {
    pub delta: f64,
    pub log_delta: f64,
    pub p: Vec<i64>,
    pub q: Vec<i64>,
}

/// Log of the flowed sup norm of the vector indexed by (p implicit, q),
/// with p chosen as the per-row nearest integers. Returns the log norm and
/// the chosen p.
fn candidate_log_norm(y: &MatrixY, a: &[f64], q: &[i64]) -> (f64, Vec<i64>) {
    let (m, n) = (y.dims().m, y.dims().n);
    let mut log_norm = f64::NEG_INFINITY;
    for j in 0..n {
        if q[j] != 0 {
            log_norm = log_norm.max(a[m + j] + (q[j].abs() as f64).ln());
        }
    }
    let mut p = Vec::with_capacity(m);
    for i in 0..m {
        let (r, pi) = y.residual(i, q);
        p.push(pi);
        if r != 0.0 {
            log_norm = log_norm.max(a[i] + r.abs().ln());
        }
    }
    (log_norm, p)
}

fn lex_less(qa: &[i64], pa: &[i64], qb: &[i64], pb: &[i64]) -> bool {
    match qa.cmp(qb) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => pa.cmp(pb) == std::cmp::Ordering::Less,
    }
}

struct Enumerator<'a> {
    y: &'a MatrixY,
    a: &'a [f64],
    best_log: f64,
    best: Option<(Vec<i64>, Vec<i64>)>, // (q, p)
}

impl<'a> Enumerator<'a> {
    fn bounds(&self) -> Vec<i64> {
        let (m, n) = (self.y.dims().m, self.y.dims().n);
        (0..n)
            .map(|j| {
                let b = (self.best_log - self.a[m + j]).exp();
                if b >= 9e15 {
                    i64::MAX
                } else {
                    b.floor() as i64
                }
            })
            .collect()
    }

    fn offer(&mut self, q: &[i64]) {
        let (log_norm, p) = candidate_log_norm(self.y, self.a, q);
        if log_norm < self.best_log
            || (log_norm == self.best_log
                && self
                    .best
                    .as_ref()
                    .map(|(bq, bp)| lex_less(q, &p, bq, bp))
                    .unwrap_or(true))
        {
            self.best_log = log_norm;
            self.best = Some((q.to_vec(), p));
        }
    }

    /// Visits every canonical-sign q with max coordinate exactly `shell`,
    /// clipped per coordinate by `bounds`.
    fn walk_shell(&mut self, shell: i64, bounds: &[i64], cutoff_log: Option<f64>) {
        let mut q = vec![0i64; bounds.len()];
        self.walk_rec(&mut q, 0, shell, bounds, false, false, cutoff_log);
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_rec(
        &mut self,
        q: &mut Vec<i64>,
        idx: usize,
        shell: i64,
        bounds: &[i64],
        hit_shell: bool,
        signed: bool,
        cutoff_log: Option<f64>,
    ) {
        if let Some(cut) = cutoff_log {
            if self.best_log < cut {
                return;
            }
        }
        if idx == q.len() {
            if hit_shell {
                self.offer(q);
            }
            return;
        }
        let cap = bounds[idx].min(shell);
        // Canonical sign: the first nonzero coordinate is positive.
        let lo = if signed { -cap } else { 0 };
        for v in lo..=cap {
            q[idx] = v;
            let h = hit_shell || v.abs() == shell;
            // Remaining coordinates must still be able to reach the shell.
            if !h && idx + 1 == q.len() {
                continue;
            }
            if !h && bounds[idx + 1..].iter().all(|&b| b.min(shell) < shell) {
                continue;
            }
            self.walk_rec(q, idx + 1, shell, bounds, h, signed || v != 0, cutoff_log);
        }
        q[idx] = 0;
    }
}

/// Exact sup-norm shortest vector of the flowed lattice, by shelled
/// enumeration over q with per-row nearest-integer p. With `cutoff` set the
/// search may return early with any witness strictly below the cutoff.
pub fn delta_flowed(y: &MatrixY, a: &CartanVector, cutoff: Option<f64>) -> Result<ShortestResult> {
    delta_flowed_with_budget(y, a, cutoff, ENUM_BUDGET)
}

pub fn delta_flowed_with_budget(
    y: &MatrixY,
    a: &CartanVector,
    cutoff: Option<f64>,
    budget: f64,
) -> Result<ShortestResult> {
    let dims = y.dims();
    let (m, n) = (dims.m, dims.n);
    if a.len() != dims.d() {
        return Err(Error::DimensionMismatch { expected: dims.d(), got: a.len() });
    }
    let av = a.entries();
    if av.iter().any(|x| x.abs() > MAX_FLOW_MAG) {
        return Err(Error::domain(format!(
            "flow coordinates are capped at |a_i| <= {MAX_FLOW_MAG} to keep box bounds exact"
        )));
    }
    let cutoff_log = match cutoff {
        Some(c) if c > 0.0 => Some(c.ln()),
        Some(c) => return Err(Error::domain(format!("cutoff must be positive, got {c}"))),
        None => None,
    };

    // The q = 0 candidate p = e_i, plus the Minkowski bound delta <= 1 as a
    // search radius even when that candidate is long.
    let (i0, &amin) = av[..m]
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let minkowski_log = 1e-9f64.ln_1p();
    let mut en = Enumerator { y, a: av, best_log: amin.min(minkowski_log), best: None };
    if amin <= minkowski_log {
        let mut p = vec![0i64; m];
        p[i0] = 1;
        en.best = Some((vec![0i64; n], p));
        en.best_log = amin;
    }

    let init_bounds = en.bounds();
    let mut volume = 1.0f64;
    for &b in &init_bounds {
        volume *= 2.0 * b as f64 + 1.0;
    }
    if volume > budget {
        return Err(Error::resource(format!(
            "q-box holds ~{volume:.3e} candidates (budget {budget:.1e}); reduce t or the flow magnitude"
        )));
    }

    if n == 1 {
        // Single-column case: canonical q is a positive scalar, so a flat
        // ascending loop replaces the shelled walk.
        let an = av[m];
        let bound_for = |best_log: f64| {
            let b = (best_log - an).exp();
            if b >= 9e15 {
                i64::MAX
            } else {
                b.floor() as i64
            }
        };
        let mut bound = bound_for(en.best_log);
        let mut q = 1i64;
        let qv = &mut [0i64];
        while q <= bound {
            if let Some(cut) = cutoff_log {
                if en.best_log < cut {
                    break;
                }
            }
            let prev = en.best_log;
            qv[0] = q;
            en.offer(qv);
            if en.best_log < prev {
                bound = bound_for(en.best_log);
            }
            q += 1;
        }
    } else {
        let mut shell = 1i64;
        loop {
            let bounds = en.bounds();
            let max_bound = bounds.iter().copied().max().unwrap_or(0);
            if shell > max_bound {
                break;
            }
            if let Some(cut) = cutoff_log {
                if en.best_log < cut {
                    break;
                }
            }
            en.walk_shell(shell, &bounds, cutoff_log);
            shell += 1;
        }
    }

    let (q, p) = en
        .best
        .ok_or_else(|| Error::internal("no lattice vector found inside the Minkowski radius"))?;
    let log_delta = en.best_log;
    let delta = log_delta.exp();
    if delta > 1.0 + 1e-9 {
        return Err(Error::internal(format!(
            "shortest vector {delta} exceeds the unimodular Minkowski bound"
        )));
    }
    Ok(ShortestResult { delta, log_delta, p, q })
}

/// Exhaustive testing oracle: scans all q with |q_j| <= box_radius and, per
/// row, the three integers around the nearest one. Exact whenever the true
/// minimizer's q lies inside the box.
pub fn delta_brute(y: &MatrixY, a: &CartanVector, box_radius: i64) -> Result<ShortestResult> {
    let dims = y.dims();
    let (m, n) = (dims.m, dims.n);
    if a.len() != dims.d() {
        return Err(Error::DimensionMismatch { expected: dims.d(), got: a.len() });
    }
    if !(0..=50).contains(&box_radius) {
        return Err(Error::domain("delta_brute box radius must lie in [0, 50]"));
    }
    let av = a.entries();

    let mut best_log = f64::INFINITY;
    let mut best: Option<(Vec<i64>, Vec<i64>)> = None;

    // q = 0: minimizing p is a signed unit vector.
    for i in 0..m {
        let mut p = vec![0i64; m];
        p[i] = 1;
        let q = vec![0i64; n];
        consider(av[i], &q, &p, &mut best_log, &mut best);
    }

    let mut q = vec![-box_radius; n];
    'outer: loop {
        if q.iter().any(|&v| v != 0) {
            let canonical = q.iter().find(|&&v| v != 0).map(|&v| v > 0).unwrap_or(true);
            if canonical {
                scan_p_choices(y, av, &q, &mut best_log, &mut best);
            }
        }
        for j in 0..n {
            if q[j] < box_radius {
                q[j] += 1;
                continue 'outer;
            }
            q[j] = -box_radius;
        }
        break;
    }

    let (q, p) = best.ok_or_else(|| Error::internal("brute-force scan found no vector"))?;
    Ok(ShortestResult { delta: best_log.exp(), log_delta: best_log, p, q })
}

fn scan_p_choices(
    y: &MatrixY,
    a: &[f64],
    q: &[i64],
    best_log: &mut f64,
    best: &mut Option<(Vec<i64>, Vec<i64>)>,
) {
    let (m, n) = (y.dims().m, y.dims().n);
    let mut q_part = f64::NEG_INFINITY;
    for j in 0..n {
        if q[j] != 0 {
            q_part = q_part.max(a[m + j] + (q[j].abs() as f64).ln());
        }
    }
    let centers: Vec<f64> = (0..m).map(|i| y.row_dot(i, q)).collect();
    let mut offsets = vec![-1i64; m];
    'outer: loop {
        let mut log_norm = q_part;
        let mut p = Vec::with_capacity(m);
        for i in 0..m {
            let pi = centers[i].round_ties_even() as i64 + offsets[i];
            p.push(pi);
            let r = centers[i] - pi as f64;
            if r != 0.0 {
                log_norm = log_norm.max(a[i] + r.abs().ln());
            }
        }
        consider_with(log_norm, q, &p, best_log, best);
        for i in 0..m {
            if offsets[i] < 1 {
                offsets[i] += 1;
                continue 'outer;
            }
            offsets[i] = -1;
        }
        break;
    }
}

fn consider(log_norm: f64, q: &[i64], p: &[i64], best_log: &mut f64, best: &mut Option<(Vec<i64>, Vec<i64>)>) {
    consider_with(log_norm, q, p, best_log, best)
}

fn consider_with(
    log_norm: f64,
    q: &[i64],
    p: &[i64],
    best_log: &mut f64,
    best: &mut Option<(Vec<i64>, Vec<i64>)>,
) {
    let better = log_norm < *best_log
        || (log_norm == *best_log
            && best
                .as_ref()
                .map(|(bq, bp)| lex_less(q, p, bq, bp))
                .unwrap_or(true));
    if better {
        *best_log = log_norm;
        *best = Some((q.to_vec(), p.to_vec()));
    }
}

/// Nonzero integer point of the convex body behind the multiplicative
/// Dirichlet bound, with the scalar statistics the AM-GM chain consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiCertificate {
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    /// Sum over rows of |Y_i q - p_i|.
    pub sum_residual: f64,
    /// Sum over columns of |q_j|.
    pub sum_q: f64,
    /// Product over rows of |Y_i q - p_i|.
    pub product_residual: f64,
    /// Product over columns of max(1, |q_j|).
    pub pi_plus_q: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Volume threshold m! n! / (m^m n^n) below which the body is too small.
pub fn dno_threshold(dims: Dims) -> f64 {
    let (m, n) = (dims.m, dims.n);
    factorial(m) * factorial(n) / ((m as f64).powi(m as i32) * (n as f64).powi(n as i32))
}

/// Height floor T_c = max{c m^m, n^{n(n-1)}}.
pub fn t_critical(dims: Dims, c: f64) -> f64 {
    let (m, n) = (dims.m as f64, dims.n as f64);
    (c * m.powf(m)).max(n.powf(n * (n - 1.0)))
}

/// Finds a nonzero integer point of the body
/// { sum |Y_i y - x_i| <= m (c/T)^{1/m}, sum |y_j| <= n T^{1/n} },
/// scanning q in increasing l1 norm with nearest-integer x. Existence is
/// Minkowski's theorem once c clears the volume threshold and T > T_c.
pub fn minkowski_point(y: &MatrixY, t_height: f64, c: f64) -> Result<MinkowskiCertificate> {
    let dims = y.dims();
    let (m, n) = (dims.m, dims.n);
    let threshold = dno_threshold(dims);
    if !(c > threshold) {
        return Err(Error::domain(format!(
            "minkowski_point requires c > m!n!/(m^m n^n) = {threshold}, got c = {c} (open inequality)"
        )));
    }
    let tc = t_critical(dims, c);
    if !(t_height > tc) {
        return Err(Error::domain(format!(
            "minkowski_point requires T > T_c = {tc}, got T = {t_height}"
        )));
    }
    let residual_cap = m as f64 * (c / t_height).powf(1.0 / m as f64);
    let q_cap = n as f64 * t_height.powf(1.0 / n as f64);
    let l1_max = q_cap.floor() as i64;

    let mut count = 0.0f64;
    for l1 in 1..=l1_max {
        let mut found: Option<MinkowskiCertificate> = None;
        visit_l1_shell(n, l1, &mut |q| {
            if found.is_some() {
                return;
            }
            count += 1.0;
            let mut sum_r = 0.0;
            let mut prod_r = 1.0;
            let mut p = Vec::with_capacity(m);
            for i in 0..m {
                let (r, pi) = y.residual(i, q);
                sum_r += r.abs();
                prod_r *= r.abs();
                p.push(pi);
            }
            if sum_r <= residual_cap {
                found = Some(MinkowskiCertificate {
                    p,
                    q: q.to_vec(),
                    sum_residual: sum_r,
                    sum_q: q.iter().map(|&v| v.abs() as f64).sum(),
                    product_residual: prod_r,
                    pi_plus_q: pi_plus_int(q),
                });
            }
        });
        if let Some(cert) = found {
            return Ok(cert);
        }
        if count > ENUM_BUDGET {
            return Err(Error::resource("l1-shell enumeration exceeded the budget"));
        }
    }
    Err(Error::internal(
        "no body point found although the volume precondition held; this indicates a bug",
    ))
}

fn pi_plus_int(q: &[i64]) -> f64 {
    q.iter().map(|&v| (v.abs() as f64).max(1.0)).product()
}

/// Visits canonical-sign q with l1 norm exactly `l1`, lexicographically.
fn visit_l1_shell(n: usize, l1: i64, f: &mut impl FnMut(&[i64])) {
    let mut q = vec![0i64; n];
    fn rec(q: &mut Vec<i64>, idx: usize, rem: i64, signed: bool, f: &mut impl FnMut(&[i64])) {
        if idx == q.len() {
            if rem == 0 {
                f(q);
            }
            return;
        }
        if idx == q.len() - 1 {
            // Last coordinate absorbs the remainder.
            for v in values_for(rem, signed) {
                q[idx] = v;
                f(q);
            }
            q[idx] = 0;
            return;
        }
        for mag in 0..=rem {
            for v in values_for(mag, signed) {
                q[idx] = v;
                rec(q, idx + 1, rem - mag, signed || v != 0, f);
            }
            q[idx] = 0;
        }
    }
    fn values_for(mag: i64, signed: bool) -> Vec<i64> {
        if mag == 0 {
            vec![0]
        } else if signed {
            vec![-mag, mag]
        } else {
            vec![mag]
        }
    }
    rec(&mut q, 0, l1, false, f);
}

/// Outcome of re-running the AM-GM chain on a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmGmCheck {
    pub pass: bool,
    pub failed_link: Option<String>,
}

impl AmGmCheck {
    fn fail(link: &str) -> Self {
        AmGmCheck { pass: false, failed_link: Some(link.to_string()) }
    }
    fn ok() -> Self {
        AmGmCheck { pass: true, failed_link: None }
    }
}

/// Recomputes every link of the chain that turns a body point into a
/// multiplicative Dirichlet solution.
pub fn certify_amgm(cert: &MinkowskiCertificate, t_height: f64, c: f64) -> AmGmCheck {
    let n = cert.q.len();
    let m = cert.p.len();
    let (mf, nf) = (m as f64, n as f64);
    let tol = 1e-12;

    if cert.q.iter().all(|&v| v == 0) {
        return AmGmCheck::fail("q nonzero");
    }
    if cert.sum_q > nf * t_height.powf(1.0 / nf) * (1.0 + tol) {
        return AmGmCheck::fail("sum |q_j| <= n T^{1/n}");
    }
    if cert.sum_residual > mf * (c / t_height).powf(1.0 / mf) * (1.0 + tol) {
        return AmGmCheck::fail("sum residual <= m (c/T)^{1/m}");
    }
    let k = cert.q.iter().filter(|&&v| v != 0).count() as f64;
    let pi_plus = pi_plus_int(&cert.q);
    let step = (nf / k).powf(k) * t_height.powf(k / nf);
    if pi_plus > step * (1.0 + tol) {
        return AmGmCheck::fail("Pi_+(q) <= (n/k)^k T^{k/n}");
    }
    if step > t_height * (1.0 + tol) {
        return AmGmCheck::fail("(n/k)^k T^{k/n} <= T");
    }
    // AM-GM on the residual block: product^{1/m} <= sum/m <= (c/T)^{1/m}.
    if cert.product_residual.powf(1.0 / mf) > cert.sum_residual / mf + tol {
        return AmGmCheck::fail("product^{1/m} <= sum/m");
    }
    if cert.product_residual > (c / t_height) * (1.0 + 1e-9) {
        return AmGmCheck::fail("product residual <= c/T");
    }
    AmGmCheck::ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(m: usize, n: usize) -> Dims {
        Dims::new(m, n).unwrap()
    }

    fn cv(v: Vec<f64>) -> CartanVector {
        CartanVector::new(v).unwrap()
    }

    #[test]
    fn integer_lattice_has_unit_shortest_vector() {
        let y = MatrixY::zero(dims(2, 1));
        let a = cv(vec![0.0, 0.0, 0.0]);
        let r = delta_flowed(&y, &a, None).unwrap();
        assert!((r.delta - 1.0).abs() < 1e-12);
        assert_eq!(r.q, vec![0]);
        assert_eq!(r.p, vec![1, 0]);
    }

    #[test]
    fn half_integer_one_one_flowed() {
        // Frozen by scanning |q| <= 4, |p| <= 4 by hand: delta = 1.
        let y = MatrixY::new(dims(1, 1), vec![vec![0.5]]).unwrap();
        let a = cv(vec![2.0f64.ln(), -(2.0f64.ln())]);
        let r = delta_flowed(&y, &a, None).unwrap();
        assert!((r.delta - 1.0).abs() < 1e-9, "delta = {}", r.delta);
    }

    #[test]
    fn diagonal_lattice_closed_form() {
        // Y = 0: delta = exp(min over all coordinates of a).
        let y = MatrixY::zero(dims(2, 1));
        let a = cv(vec![1.0, 0.5, -1.5]);
        let r = delta_flowed(&y, &a, None).unwrap();
        assert!((r.log_delta - (-1.5)).abs() < 1e-12);
        assert_eq!(r.q, vec![1]);
    }

    #[test]
    fn brute_radius_zero_restricts_to_unit_vectors() {
        let y = MatrixY::zero(dims(2, 1));
        let a = cv(vec![-0.3, 0.8, -0.5]);
        let r = delta_brute(&y, &a, 0).unwrap();
        assert!((r.log_delta - (-0.3)).abs() < 1e-12);
        assert_eq!(r.q, vec![0]);
    }

    #[test]
    fn p_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..40 {
            let d = dims(2, 1);
            let y1: Vec<Vec<f64>> = (0..2).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
            let shifted: Vec<Vec<f64>> = y1
                .iter()
                .map(|r| r.iter().map(|x| x + rng.gen_range(-3i64..4) as f64).collect())
                .collect();
            let a0 = rng.gen_range(-1.0..1.0);
            let a1 = rng.gen_range(-1.0..1.0);
            let a = cv(vec![a0, a1, -a0 - a1]);
            let r1 = delta_flowed(&MatrixY::new(d, y1).unwrap(), &a, None).unwrap();
            let r2 = delta_flowed(&MatrixY::new(d, shifted).unwrap(), &a, None).unwrap();
            assert!((r1.log_delta - r2.log_delta).abs() < 1e-12);
        }
    }

    #[test]
    fn flowed_matches_brute_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let shapes = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3)];
        for iter in 0..600 {
            let (m, n) = shapes[iter % shapes.len()];
            let d = dims(m, n);
            let y = MatrixY::new(
                d,
                (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
            )
            .unwrap();
            let mut a: Vec<f64> = (0..m + n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let tail = -a.iter().sum::<f64>();
            if tail.abs() > 2.5 {
                continue;
            }
            a.push(tail);
            let a = cv(a);
            let fast = delta_flowed(&y, &a, None).unwrap();
            let brute = delta_brute(&y, &a, 35).unwrap();
            assert!(
                (fast.log_delta - brute.log_delta).abs()
                    <= 1e-9 * (1.0 + fast.log_delta.abs()),
                "({m},{n}) iter {iter}: {} vs {}",
                fast.log_delta,
                brute.log_delta
            );
        }
    }

    #[test]
    fn cutoff_returns_early_witness() {
        let y = MatrixY::zero(dims(2, 1));
        let a = cv(vec![1.0, 1.0, -2.0]);
        let r = delta_flowed(&y, &a, Some(0.5)).unwrap();
        assert!(r.delta < 0.5);
    }

    #[test]
    fn delta_never_exceeds_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        for _ in 0..200 {
            let d = dims(2, 1);
            let y = MatrixY::new(
                d,
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let a0 = rng.gen_range(-4.0..4.0);
            let a1 = rng.gen_range(-4.0..4.0);
            let a = cv(vec![a0, a1, -a0 - a1]);
            if (a0 + a1).abs() > 8.0 {
                continue;
            }
            let r = delta_flowed(&y, &a, None).unwrap();
            assert!(r.delta <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn minkowski_rational_direction() {
        let y = MatrixY::zero(dims(1, 1));
        let cert = minkowski_point(&y, 10.0, 1.01).unwrap();
        assert_eq!(cert.q, vec![1]);
        assert_eq!(cert.p, vec![0]);
        assert_eq!(cert.sum_residual, 0.0);
    }

    #[test]
    fn minkowski_near_half() {
        // Frozen by brute force over q <= 10: q = 2 is the least solution.
        let y = MatrixY::new(dims(1, 1), vec![vec![0.49]]).unwrap();
        let cert = minkowski_point(&y, 10.0, 1.01).unwrap();
        assert_eq!(cert.q, vec![2]);
        assert_eq!(cert.p, vec![1]);
        assert!((cert.sum_residual - 0.02).abs() < 1e-12);
    }

    #[test]
    fn minkowski_rejects_boundary_volume() {
        let y = MatrixY::zero(dims(1, 1));
        assert!(minkowski_point(&y, 10.0, dno_threshold(dims(1, 1))).is_err());
    }

    #[test]
    fn t_critical_formula() {
        assert_eq!(t_critical(dims(2, 2), 1.0), 4.0);
        assert_eq!(t_critical(dims(2, 2), 1.5), 6.0);
        assert_eq!(t_critical(dims(1, 1), 1.01), 1.01);
    }

    #[test]
    fn certify_detects_zero_q() {
        let cert = MinkowskiCertificate {
            p: vec![1],
            q: vec![0],
            sum_residual: 0.1,
            sum_q: 0.0,
            product_residual: 0.1,
            pi_plus_q: 1.0,
        };
        let check = certify_amgm(&cert, 10.0, 1.01);
        assert!(!check.pass);
        assert_eq!(check.failed_link.as_deref(), Some("q nonzero"));
    }

    #[test]
    fn certify_sweep_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let d = dims(2, 1);
        let c = dno_threshold(d) * 1.05;
        for _ in 0..100 {
            let y = MatrixY::new(
                d,
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let t_height = rng.gen_range(t_critical(d, c) + 0.5..500.0);
            let cert = minkowski_point(&y, t_height, c).unwrap();
            let check = certify_amgm(&cert, t_height, c);
            assert!(check.pass, "failed link: {:?}", check.failed_link);
        }
    }
}
