//! Membership tests for the additive and multiplicative Dirichlet systems at
//! a fixed height, finite-grid uniformity probes, and the dynamical
//! cusp-hitting search.

use serde::{Deserialize, Serialize};

use crate::cartan::{gamma_chart_unchecked, CartanVector};
use crate::dani::PsiSpec;
use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::lattice::{delta_flowed, MatrixY, ENUM_BUDGET};

/// Multiplicative height of a denominator vector: product of max(1, |q_j|).
pub fn pi_plus(q: &[i64]) -> f64 {
    q.iter().map(|&v| (v.abs() as f64).max(1.0)).product()
}

/// Witness that a matrix belongs to the height-T solvable set. All recorded
/// inequalities are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    /// max_i |Y_i q - p_i|^m.
    pub additive_lhs: f64,
    /// prod_i |Y_i q - p_i|.
    pub mult_lhs: f64,
    /// The gauge actually tested against T: max_j |q_j|^n for the additive
    /// system, Pi_+(q) for the multiplicative one.
    pub q_gauge: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub psi_t: f64,
}

fn check_probe_pre(t_height: f64, psi_t: f64) -> Result<()> {
    if !(t_height > 1.0) {
        return Err(Error::domain(format!("probe requires T > 1, got {t_height}")));
    }
    if !(psi_t > 0.0) {
        return Err(Error::domain(format!("probe requires psi(T) > 0, got {psi_t}")));
    }
    Ok(())
}

fn residual_stats(y: &MatrixY, q: &[i64]) -> (Vec<i64>, f64, f64) {
    let m = y.dims().m;
    let mut p = Vec::with_capacity(m);
    let mut max_r: f64 = 0.0;
    let mut prod_r = 1.0;
    for i in 0..m {
        let (r, pi) = y.residual(i, q);
        p.push(pi);
        max_r = max_r.max(r.abs());
        prod_r *= r.abs();
    }
    (p, max_r, prod_r)
}

/// Searches for q != 0 with max_j |q_j|^n < T and max_i |Y_i q - p_i|^m <
/// psi(T), p the nearest integers. Scans shells of max|q_j| outward; the
/// first hit, lexicographically least in its shell, is returned.
pub fn in_s_additive(
    y: &MatrixY,
    psi_t: f64,
    t_height: f64,
) -> Result<Option<MembershipCertificate>> {
    check_probe_pre(t_height, psi_t)?;
    let (m, n) = (y.dims().m, y.dims().n);
    let max_shell = {
        let mut s = 1i64;
        while ((s + 1) as f64).powi(n as i32) < t_height {
            s += 1;
        }
        s
    };
    if (s_box_volume(max_shell, n)) > ENUM_BUDGET {
        return Err(Error::resource(format!(
            "additive q-box at T = {t_height} exceeds the enumeration budget"
        )));
    }
    if !((1.0f64).powi(n as i32) < t_height) {
        return Ok(None);
    }
    let mut found: Option<MembershipCertificate> = None;
    for shell in 1..=max_shell {
        visit_sup_shell(n, shell, &mut |q| {
            if found.is_some() {
                return;
            }
            let (p, max_r, prod_r) = residual_stats(y, q);
            if max_r.powi(m as i32) < psi_t {
                found = Some(MembershipCertificate {
                    p,
                    q: q.to_vec(),
                    additive_lhs: max_r.powi(m as i32),
                    mult_lhs: prod_r,
                    q_gauge: (shell as f64).powi(n as i32),
                    t_height,
                    psi_t,
                });
            }
        });
        if found.is_some() {
            break;
        }
    }
    Ok(found)
}

fn s_box_volume(shell: i64, n: usize) -> f64 {
    (2.0 * shell as f64 + 1.0).powi(n as i32)
}

/// Visits canonical-sign q with sup norm exactly `shell`, lexicographically.
fn visit_sup_shell(n: usize, shell: i64, f: &mut impl FnMut(&[i64])) {
    fn rec(
        q: &mut Vec<i64>,
        idx: usize,
        shell: i64,
        hit: bool,
        signed: bool,
        f: &mut impl FnMut(&[i64]),
    ) {
        if idx == q.len() {
            if hit {
                f(q);
            }
            return;
        }
        let lo = if signed { -shell } else { 0 };
        for v in lo..=shell {
            if !hit && v.abs() < shell && q.len() - idx == 1 {
                continue;
            }
            q[idx] = v;
            rec(q, idx + 1, shell, hit || v.abs() == shell, signed || v != 0, f);
        }
        q[idx] = 0;
    }
    let mut q = vec![0i64; n];
    rec(&mut q, 0, shell, false, false, f);
}

/// Searches for q != 0 with Pi_+(q) < T and prod_i |Y_i q - p_i| < psi(T).
/// Enumerates by ascending integer Pi_+ level, within a level by max|q_j|
/// then lexicographic order, so the returned certificate is deterministic.
pub fn in_s_mult(y: &MatrixY, psi_t: f64, t_height: f64) -> Result<Option<MembershipCertificate>> {
    check_probe_pre(t_height, psi_t)?;
    let n = y.dims().n;
    let mut budget = ENUM_BUDGET;
    let mut level = 1i64;
    while (level as f64) < t_height {
        let mut hit: Option<MembershipCertificate> = None;
        if n == 1 {
            // Pi_+ level p is realized by q = p alone (level 1 by q = 1).
            let q = [level];
            budget -= 1.0;
            hit = test_mult_candidate(y, &q, psi_t, t_height, level);
        } else {
            let mut shell_qs: Vec<Vec<i64>> = Vec::new();
            collect_pi_plus_level(n, level, &mut shell_qs);
            shell_qs.sort_by_key(|q| {
                (q.iter().map(|v| v.abs()).max().unwrap_or(0), q.clone())
            });
            budget -= shell_qs.len() as f64;
            for q in &shell_qs {
                if let Some(cert) = test_mult_candidate(y, q, psi_t, t_height, level) {
                    hit = Some(cert);
                    break;
                }
            }
        }
        if hit.is_some() {
            return Ok(hit);
        }
        if budget < 0.0 {
            return Err(Error::resource(format!(
                "multiplicative region at T = {t_height} exceeds the enumeration budget"
            )));
        }
        level += 1;
    }
    Ok(None)
}

fn test_mult_candidate(
    y: &MatrixY,
    q: &[i64],
    psi_t: f64,
    t_height: f64,
    level: i64,
) -> Option<MembershipCertificate> {
    let m = y.dims().m;
    let mut prod_r = 1.0;
    let mut max_r: f64 = 0.0;
    let mut p = Vec::with_capacity(m);
    for i in 0..m {
        let (r, pi) = y.residual(i, q);
        prod_r *= r.abs();
        max_r = max_r.max(r.abs());
        p.push(pi);
    }
    // Each residual is at most 1/2, so the product is only known after the
    // last row; a partial-product cutoff would wrongly reject candidates.
    if prod_r >= psi_t {
        return None;
    }
    Some(MembershipCertificate {
        p,
        q: q.to_vec(),
        additive_lhs: max_r.powi(m as i32),
        mult_lhs: prod_r,
        q_gauge: level as f64,
        t_height,
        psi_t,
    })
}

/// Collects canonical-sign q with Pi_+(q) exactly `level`.
fn collect_pi_plus_level(n: usize, level: i64, out: &mut Vec<Vec<i64>>) {
    fn rec(q: &mut Vec<i64>, idx: usize, rem: i64, signed: bool, out: &mut Vec<Vec<i64>>) {
        if idx == q.len() {
            if rem == 1 && q.iter().any(|&v| v != 0) {
                out.push(q.clone());
            }
            return;
        }
        // Magnitudes 0 and 1 contribute factor 1; larger ones divide rem.
        for mag in [0i64, 1] {
            for v in signs(mag, signed) {
                q[idx] = v;
                rec(q, idx + 1, rem, signed || v != 0, out);
            }
        }
        let mut d = 2i64;
        while d * d <= rem {
            if rem % d == 0 {
                for &mag in &[d, rem / d] {
                    if mag < 2 {
                        continue;
                    }
                    for v in signs(mag, signed) {
                        q[idx] = v;
                        rec(q, idx + 1, rem / mag, true, out);
                    }
                    if d * d == rem {
                        break;
                    }
                }
            }
            d += 1;
        }
        if rem >= 2 {
            for v in signs(rem, signed) {
                q[idx] = v;
                rec(q, idx + 1, 1, true, out);
            }
        }
        q[idx] = 0;
    }
    fn signs(mag: i64, signed: bool) -> Vec<i64> {
        if mag == 0 {
            vec![0]
        } else if signed {
            vec![-mag, mag]
        } else {
            vec![mag]
        }
    }
    let mut q = vec![0i64; n];
    rec(&mut q, 0, level, false, out);
    out.sort();
    out.dedup();
}

/// Per-grid-point verdict of a uniformity probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    #[serde(rename = "T")]
    pub t_height: f64,
    pub found: bool,
    pub certificate: Option<MembershipCertificate>,
    pub error: Option<String>,
}

/// Finite-grid proxy for the liminf/limsup solvable sets. Grid verdicts
/// never prove membership in the limiting sets; they only record solvability
/// at the sampled heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformProbeReport {
    pub t_grid: Vec<f64>,
    pub verdicts: Vec<ProbeVerdict>,
    /// Smallest grid height from which every later grid height succeeded
    /// (liminf proxy over the grid only).
    pub first_t0: Option<f64>,
    /// Whether the largest grid height succeeded (limsup proxy over the
    /// grid only).
    pub unbounded_success: bool,
}

/// Runs the multiplicative membership test over a sorted height grid.
pub fn uniform_probe(y: &MatrixY, psi: &PsiSpec, t_grid: &[f64]) -> Result<UniformProbeReport> {
    if t_grid.is_empty() {
        return Err(Error::domain("uniform_probe needs a nonempty grid"));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("uniform_probe grid must be strictly increasing"));
    }
    let mut verdicts = Vec::with_capacity(t_grid.len());
    for &t_height in t_grid {
        let psi_t = psi.eval(t_height);
        let verdict = match in_s_mult(y, psi_t, t_height) {
            Ok(cert) => ProbeVerdict {
                t_height,
                found: cert.is_some(),
                certificate: cert,
                error: None,
            },
            Err(Error::Resource(msg)) => ProbeVerdict {
                t_height,
                found: false,
                certificate: None,
                error: Some(msg),
            },
            Err(e) => return Err(e),
        };
        verdicts.push(verdict);
    }
    let mut first_t0 = None;
    for v in verdicts.iter().rev() {
        if v.found {
            first_t0 = Some(v.t_height);
        } else {
            break;
        }
    }
    let unbounded_success = verdicts.last().map(|v| v.found).unwrap_or(false);
    Ok(UniformProbeReport { t_grid: t_grid.to_vec(), verdicts, first_t0, unbounded_success })
}

/// Margins by which the chart grid approaches the cone boundary; the first
/// entries cover the bulk and later ones probe the near-boundary region.
const MARGIN_SCHEDULE: [f64; 5] = [0.25, 0.15, 0.08, 0.04, 0.02];

/// Grid search for a point of t*E_1 whose flowed lattice is epsilon-deep in
/// the cusp. The chart section is scanned at `grid_resolution` points per
/// axis for each margin of the schedule; returns the first witness or None
/// at this resolution (never a proof of absence).
pub fn cusp_hit(
    y: &MatrixY,
    t: f64,
    epsilon: f64,
    grid_resolution: usize,
) -> Result<Option<CartanVector>> {
    let dims = y.dims();
    if !(t > 0.0) {
        return Err(Error::domain(format!("cusp_hit requires t > 0, got {t}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("cusp_hit requires epsilon in (0, 1], got {epsilon}")));
    }
    if grid_resolution == 0 {
        return Err(Error::domain("grid_resolution must be at least 1"));
    }
    let chart_dim = dims.d() - 2;
    // For the 2x1 chart the hit set is a union of open s-intervals, one per
    // candidate q; precomputing it once makes each grid point a range test
    // instead of a lattice scan.
    let screen = if dims.m == 2 && dims.n == 1 {
        Some(cusp_intervals_2x1(y, t, epsilon)?)
    } else {
        None
    };
    let mut seen: Vec<Vec<u64>> = Vec::new();
    for &margin in &MARGIN_SCHEDULE {
        let axis: Vec<f64> = if grid_resolution == 1 {
            vec![0.5]
        } else {
            (0..grid_resolution)
                .map(|i| margin + (1.0 - 2.0 * margin) * i as f64 / (grid_resolution - 1) as f64)
                .collect()
        };
        let mut coords = vec![0usize; chart_dim];
        'grid: loop {
            let point: Vec<f64> = coords.iter().map(|&i| axis[i]).collect();
            let key: Vec<u64> = point.iter().map(|x| x.to_bits()).collect();
            let screened_out = screen
                .as_ref()
                .map(|iv| !iv.iter().any(|&(lo, hi)| point[0] > lo && point[0] < hi))
                .unwrap_or(false);
            if !screened_out && !seen.contains(&key) {
                seen.push(key);
                if let Some(a) = chart_cone_point(dims, &point, t) {
                    match delta_flowed(y, &a, Some(epsilon)) {
                        Ok(r) if r.delta < epsilon => return Ok(Some(a)),
                        Ok(_) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            if chart_dim == 0 {
                break;
            }
            for k in 0..chart_dim {
                if coords[k] + 1 < grid_resolution {
                    coords[k] += 1;
                    continue 'grid;
                }
                coords[k] = 0;
            }
            break;
        }
        if chart_dim == 0 {
            break;
        }
    }
    Ok(None)
}

/// Open s-intervals on which some primitive column q makes the flowed 2x1
/// lattice epsilon-short at a = (ts, t(1-s), -t). A vector with q = 0 has
/// norm >= e^{min(a_1, a_2)} > 1 >= epsilon inside the cone, so scanning
/// q >= 1 with both row residuals below their axis caps is exhaustive.
fn cusp_intervals_2x1(y: &MatrixY, t: f64, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    let log_eps = epsilon.ln();
    if t > crate::lattice::MAX_FLOW_MAG {
        return Err(Error::domain(format!(
            "cusp_hit heights are capped at t <= {} to keep box bounds exact",
            crate::lattice::MAX_FLOW_MAG
        )));
    }
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut q = 1i64;
    loop {
        let log_q = (q as f64).ln();
        if log_q >= log_eps + t {
            break;
        }
        let r1 = y.residual(0, &[q]).0.abs();
        let r2 = y.residual(1, &[q]).0.abs();
        // Nonempty window needs ln r1 + ln r2 < 2 ln eps - t.
        if r1 < epsilon && r2 < epsilon && r1 * r2 < epsilon * epsilon * (-t).exp() {
            let hi = if r1 == 0.0 { f64::INFINITY } else { (log_eps - r1.ln()) / t };
            let lo = if r2 == 0.0 { f64::NEG_INFINITY } else { 1.0 - (log_eps - r2.ln()) / t };
            if lo < hi {
                raw.push((lo, hi));
            }
        }
        q += 1;
    }
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged)
}

/// Maps a chart point to t * gamma(point), returning None when the scaled
/// vector falls outside the open cone C_0(t).
fn chart_cone_point(dims: Dims, point: &[f64], t: f64) -> Option<CartanVector> {
    let g = gamma_chart_unchecked(dims, point);
    let scaled: Vec<f64> = g.entries().iter().map(|x| x * t).collect();
    let (m, n) = (dims.m, dims.n);
    if scaled[..m].iter().any(|&x| x <= 0.0) || scaled[m..m + n].iter().any(|&x| x >= 0.0) {
        return None;
    }
    CartanVector::new(scaled).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::Dims;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(m: usize, n: usize) -> Dims {
        Dims::new(m, n).unwrap()
    }

    #[test]
    fn pi_plus_examples() {
        assert_eq!(pi_plus(&[0]), 1.0);
        assert_eq!(pi_plus(&[3, -2]), 6.0);
        assert_eq!(pi_plus(&[1, 0, -5]), 5.0);
    }

    #[test]
    fn additive_zero_matrix_immediate() {
        for t_height in [1.5, 10.0, 1e4] {
            let y = MatrixY::zero(dims(2, 2));
            let cert = in_s_additive(&y, 0.5, t_height).unwrap().unwrap();
            assert_eq!(cert.mult_lhs, 0.0);
            assert_eq!(cert.q.iter().map(|v| v.abs()).max().unwrap(), 1);
        }
    }

    #[test]
    fn additive_dirichlet_always_solvable() {
        // psi = c * psi_1 with c slightly above 1: Dirichlet's theorem.
        let c = 1.0001;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let d = dims(m, n);
            for _ in 0..50 {
                let y = MatrixY::new(
                    d,
                    (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
                )
                .unwrap();
                for t_height in [2.0, 10.0, 100.0] {
                    let cert = in_s_additive(&y, c / t_height, t_height).unwrap();
                    assert!(cert.is_some(), "({m},{n}) T={t_height}");
                }
            }
        }
    }

    #[test]
    fn additive_half_at_three() {
        let y = MatrixY::new(dims(1, 1), vec![vec![0.5]]).unwrap();
        let cert = in_s_additive(&y, 1.0 / 3.0, 3.0).unwrap().unwrap();
        assert_eq!(cert.q, vec![2]);
        assert_eq!(cert.p, vec![1]);
        assert_eq!(cert.mult_lhs, 0.0);
    }

    #[test]
    fn additive_hit_implies_mult_hit() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..60 {
            let d = dims(2, 1);
            let y = MatrixY::new(
                d,
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let t_height = rng.gen_range(2.0..200.0);
            let psi_t = rng.gen_range(0.001..0.5);
            if in_s_additive(&y, psi_t, t_height).unwrap().is_some() {
                assert!(in_s_mult(&y, psi_t, t_height).unwrap().is_some());
            }
        }
    }

    #[test]
    fn mult_rational_rows() {
        let y = MatrixY::new(dims(2, 1), vec![vec![0.5], vec![0.25]]).unwrap();
        // q = 4 zeroes both residuals, but the ascending product-level scan
        // already accepts q = 1: 0.5 * 0.25 = 0.125 < 0.18.
        let cert = in_s_mult(&y, 0.9 / 5.0, 5.0).unwrap().unwrap();
        assert_eq!(cert.q, vec![1]);
        assert_eq!(cert.mult_lhs, 0.125);
        let at4: f64 = (0..2).map(|i| y.residual(i, &[4]).0.abs()).product();
        assert!(at4 < 0.9 / 5.0);
        // The tighter threshold 0.1 rejects q = 1 and finds the exact q = 2.
        let tight = in_s_mult(&y, 0.1, 5.0).unwrap().unwrap();
        assert_eq!(tight.q, vec![2]);
        assert_eq!(tight.mult_lhs, 0.0);
    }

    #[test]
    fn mult_monotone_in_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let y = MatrixY::new(
                dims(2, 1),
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let t_height = 50.0;
            let lo = rng.gen_range(1e-4..0.05);
            if let Some(cert) = in_s_mult(&y, lo, t_height).unwrap() {
                // The same certificate passes for any larger psi.
                assert!(cert.mult_lhs < 2.0 * lo);
                assert!(in_s_mult(&y, 2.0 * lo, t_height).unwrap().is_some());
            }
        }
    }

    #[test]
    fn pi_plus_levels_cover_box() {
        // Every canonical q with Pi_+ < 7 appears exactly once across levels.
        let mut all: Vec<Vec<i64>> = Vec::new();
        for level in 1..7 {
            let mut qs = Vec::new();
            collect_pi_plus_level(2, level, &mut qs);
            for q in &qs {
                assert_eq!(pi_plus(q), level as f64);
            }
            all.extend(qs);
        }
        all.sort();
        let before = all.len();
        all.dedup();
        assert_eq!(before, all.len());
        // Cross-check against a direct box scan.
        let mut expect = Vec::new();
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                if (a, b) == (0, 0) {
                    continue;
                }
                let canonical = if a != 0 { a > 0 } else { b > 0 };
                if canonical && pi_plus(&[a, b]) < 7.0 {
                    expect.push(vec![a, b]);
                }
            }
        }
        expect.sort();
        assert_eq!(all, expect);
    }

    #[test]
    fn uniform_probe_zero_matrix() {
        let y = MatrixY::zero(dims(2, 1));
        let psi = PsiSpec::Hard { c: 0.5 };
        let report = uniform_probe(&y, &psi, &[2.0, 5.0, 20.0]).unwrap();
        assert_eq!(report.first_t0, Some(2.0));
        assert!(report.unbounded_success);
    }

    #[test]
    fn uniform_probe_hard_above_one_all_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let psi = PsiSpec::Hard { c: 1.1 };
        for _ in 0..20 {
            let y = MatrixY::new(
                dims(2, 1),
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let report = uniform_probe(&y, &psi, &[2.0, 10.0, 50.0, 200.0]).unwrap();
            assert_eq!(report.first_t0, Some(2.0));
        }
    }

    #[test]
    fn uniform_probe_golden_ratio_fails_below_critical() {
        // |q(q phi - p)| has infimum 1/sqrt(5) ~= 0.447 for the golden
        // ratio, so a hard constant 0.4 eventually admits no solutions.
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let y = MatrixY::new(dims(1, 1), vec![vec![phi]]).unwrap();
        let psi = PsiSpec::Hard { c: 0.4 };
        let grid: Vec<f64> = (2..14).map(|k| (k as f64).exp()).collect();
        let report = uniform_probe(&y, &psi, &grid).unwrap();
        assert!(report.verdicts.iter().any(|v| !v.found), "expected suffix failures");
    }

    #[test]
    fn cusp_hit_zero_matrix() {
        let y = MatrixY::zero(dims(2, 1));
        let a = cusp_hit(&y, 3.0, 0.1, 5).unwrap().expect("witness");
        assert_eq!(a.len(), 3);
        assert!(a.entries()[2] < 0.0);
    }

    #[test]
    fn cusp_hit_epsilon_one_immediate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = MatrixY::new(
            dims(2, 1),
            vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
        )
        .unwrap();
        assert!(cusp_hit(&y, 2.0, 1.0, 5).unwrap().is_some());
    }

    #[test]
    fn cusp_screen_matches_lattice_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let y = MatrixY::new(
                dims(2, 1),
                vec![vec![rng.gen_range(0.0..1.0)], vec![rng.gen_range(0.0..1.0)]],
            )
            .unwrap();
            let (t, eps) = (6.0, 0.3);
            let intervals = cusp_intervals_2x1(&y, t, eps).unwrap();
            for k in 1..40 {
                let s = k as f64 / 40.0;
                let a = chart_cone_point(dims(2, 1), &[s], t).unwrap();
                let hit = crate::lattice::delta_flowed(&y, &a, Some(eps)).unwrap().delta < eps;
                let screened = intervals.iter().any(|&(lo, hi)| s > lo && s < hi);
                assert_eq!(hit, screened, "s = {s}");
            }
        }
    }

    #[test]
    fn cusp_hit_rejects_bad_epsilon() {
        let y = MatrixY::zero(dims(2, 1));
        assert!(cusp_hit(&y, 2.0, 0.0, 5).is_err());
        assert!(cusp_hit(&y, 2.0, 1.5, 5).is_err());
    }
}
