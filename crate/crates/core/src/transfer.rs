//! Constructive passage between cusp excursions along the shrunken cone
//! C_{R_c} and the full cone C_0, in both directions, at a controlled cost
//! in the constant c. Outputs are verified against the claimed delta bounds
//! before being returned.

use serde::{Deserialize, Serialize};

use crate::cartan::{in_cone, CartanVector, ConeQuery};
use crate::dani::r_hard;
use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::lattice::{delta_flowed, MatrixY};

/// Input to either part of the transference step: a cone point, a matrix,
/// the constant, and a short-vector witness certifying the delta hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferInput {
    pub a: CartanVector,
    pub y: MatrixY,
    pub c: f64,
    pub t: f64,
    pub p: Vec<i64>,
    pub q: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOutput {
    pub a_prime: CartanVector,
    pub t_prime: f64,
    /// The verified shortest-vector length at the output point.
    pub achieved_bound: f64,
    /// Sup-norm distance between the constructed point and the returned
    /// (interior-perturbed) one.
    pub perturbation: f64,
    /// The relabeling that lists the special slots first; verification runs
    /// in original coordinates, this only records the order the proof used.
    pub permutation: Vec<usize>,
}

/// Exponent bounds of the lemma, kept in one place.
pub fn bound_a_hypothesis(dims: Dims, c: f64) -> f64 {
    c.powf(1.0 / dims.d() as f64)
}

pub fn bound_a_conclusion(dims: Dims, c: f64) -> f64 {
    c.powf(1.0 / (dims.m * dims.d()) as f64)
}

pub fn bound_b_hypothesis(dims: Dims, c: f64) -> f64 {
    c.powf((dims.d() - 1) as f64 / (dims.m * dims.d()) as f64)
}

pub fn bound_b_conclusion(dims: Dims, c: f64) -> f64 {
    c.powf(1.0 / dims.d() as f64)
}

impl TransferInput {
    pub fn new(
        a: CartanVector,
        y: MatrixY,
        c: f64,
        t: f64,
        p: Vec<i64>,
        q: Vec<i64>,
    ) -> Result<Self> {
        let dims = y.dims();
        if a.len() != dims.d() {
            return Err(Error::DimensionMismatch { expected: dims.d(), got: a.len() });
        }
        if p.len() != dims.m || q.len() != dims.n {
            return Err(Error::DimensionMismatch {
                expected: dims.d(),
                got: p.len() + q.len(),
            });
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::domain(format!("transference requires c in (0,1), got {c}")));
        }
        if !(t > 0.0) {
            return Err(Error::domain(format!("transference requires t > 0, got {t}")));
        }
        Ok(TransferInput { a, y, c, t, p, q })
    }

    /// Flowed sup norm of the carried witness under an arbitrary flow.
    pub fn witness_norm(&self, a: &CartanVector) -> f64 {
        witness_log_norm(&self.y, a, &self.p, &self.q).exp()
    }

    fn require_cone(&self, r_at_t: f64, label: &str) -> Result<()> {
        let query = ConeQuery::new(self.y.dims(), r_at_t, self.t)?;
        if !in_cone(&self.a, &query)? {
            return Err(Error::domain(format!("input a is not in {label}")));
        }
        Ok(())
    }

    fn require_witness(&self, bound: f64, label: &str) -> Result<()> {
        let norm = self.witness_norm(&self.a);
        if !(norm < bound) {
            return Err(Error::domain(format!(
                "witness norm {norm} does not certify the {label} hypothesis bound {bound}"
            )));
        }
        Ok(())
    }
}

/// Log flowed sup norm of the vector indexed by (p, q); -inf only when the
/// vector is zero.
pub fn witness_log_norm(y: &MatrixY, a: &CartanVector, p: &[i64], q: &[i64]) -> f64 {
    let (m, n) = (y.dims().m, y.dims().n);
    let av = a.entries();
    let mut norm = f64::NEG_INFINITY;
    for i in 0..m {
        let r = y.row_dot(i, q) - p[i] as f64;
        if r != 0.0 {
            norm = norm.max(av[i] + r.abs().ln());
        }
    }
    for j in 0..n {
        if q[j] != 0 {
            norm = norm.max(av[m + j] + (q[j].abs() as f64).ln());
        }
    }
    norm
}

/// Dirichlet's simultaneous approximation step: the least 1 <= ell <= N with
/// |ell theta_i - p'_i| < N^{-1/k} for every i, p' the nearest integers.
pub fn dirichlet_simultaneous(theta: &[f64], n_cap: u64) -> Result<(u64, Vec<i64>)> {
    let k = theta.len();
    if k == 0 {
        return Err(Error::domain("dirichlet_simultaneous needs at least one coordinate"));
    }
    if n_cap == 0 {
        return Err(Error::domain("dirichlet_simultaneous needs N >= 1"));
    }
    let bound = (n_cap as f64).powf(-1.0 / k as f64);
    for ell in 1..=n_cap {
        let mut ok = true;
        let mut p = Vec::with_capacity(k);
        for &th in theta {
            let x = ell as f64 * th;
            let pi = x.round_ties_even();
            if (x - pi).abs() >= bound {
                ok = false;
                break;
            }
            p.push(pi as i64);
        }
        if ok {
            return Ok((ell, p));
        }
    }
    Err(Error::internal(format!(
        "no ell <= {n_cap} met the simultaneous bound {bound}; the scan window is too tight for this theta"
    )))
}

/// Part (a): from a ∈ C_{R_c}(t) with a witness below c^{1/(m+n)}, produce
/// a' ∈ C_0(t) with shortest vector below c^{1/(m(m+n))}.
pub fn transfer_a(input: &TransferInput) -> Result<TransferOutput> {
    let dims = input.y.dims();
    let m = dims.m;
    let r_c = r_hard(dims, input.c)?;
    input.require_cone(r_c, "C_{R_c}(t)")?;
    input.require_witness(bound_a_hypothesis(dims, input.c), "part (a)")?;

    let av = input.a.entries();
    let slots: Vec<usize> = (0..m).filter(|&i| av[i] <= 0.0).collect();
    let k = slots.len();
    let cutoff = bound_a_conclusion(dims, input.c);
    let mut permutation: Vec<usize> = slots.clone();
    permutation.extend((0..dims.d()).filter(|i| !slots.contains(i)));

    if k == 0 {
        // Already in the open cone C_0(t); the conclusion bound is weaker
        // than the hypothesis bound, so the input passes through unchanged.
        let verified = verify(&input.y, &input.a, cutoff, "transfer_a passthrough")?;
        return Ok(TransferOutput {
            a_prime: input.a.clone(),
            t_prime: input.t,
            achieved_bound: verified,
            perturbation: 0.0,
            permutation,
        });
    }

    // The Dirichlet rescaling that repairs the non-positive slots. The
    // rescaled witness justifies the bound; the final check is global.
    let epsilon = input.c.powf(k as f64 / ((k + 1) * dims.d()) as f64);
    let n_cap = (1.0 / epsilon).ceil() as u64;
    let theta: Vec<f64> = slots.iter().map(|&i| input.y.row_dot(i, &input.q)).collect();
    let (_ell, _pp) = dirichlet_simultaneous(&theta, n_cap)?;

    // Water-filling: zero the k slots, cap the remaining ones at the level
    // h that restores the block sum t.
    let mut positive: Vec<(usize, f64)> =
        (0..m).filter(|i| !slots.contains(i)).map(|i| (i, av[i])).collect();
    positive.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
    let h = water_level(&positive.iter().map(|&(_, v)| v).collect::<Vec<_>>(), input.t)?;
    let mut a_new = av.to_vec();
    for &i in &slots {
        a_new[i] = 0.0;
    }
    for &(i, v) in &positive {
        a_new[i] = v.min(h);
    }

    // Interior perturbation: raise the zeroed slots and take the mass from
    // the capped ones, by half the minimal slack split across k+1 shares.
    let min_slack = positive
        .iter()
        .map(|&(i, _)| a_new[i])
        .chain((m..dims.d()).map(|j| -av[j] - r_c))
        .fold(f64::INFINITY, f64::min);
    let eta = (min_slack / (2.0 * (k as f64 + 1.0))).min(1e-6);
    for &i in &slots {
        a_new[i] += eta;
    }
    let (imax, _) = positive
        .iter()
        .map(|&(i, _)| (i, a_new[i]))
        .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        .unwrap();
    a_new[imax] -= k as f64 * eta;
    let a_prime = renormalized(a_new, dims, input.t)?;

    let query = ConeQuery::new(dims, 0.0, input.t)?;
    if !in_cone(&a_prime, &query)? {
        return Err(Error::internal("transfer_a output left the open cone C_0(t)"));
    }
    let verified = verify(&input.y, &a_prime, cutoff, "transfer_a")?;
    Ok(TransferOutput {
        a_prime: a_prime.clone(),
        t_prime: input.t,
        achieved_bound: verified,
        perturbation: input.a.sup_dist(&a_prime),
        permutation,
    })
}

/// Part (b): from a ∈ C_0(t) with a witness below c^{(m+n-1)/(m(m+n))},
/// produce a' ∈ C_{R_c}(t') with shortest vector below c^{1/(m+n)}, where
/// t' = t - ((n-1)/(m+n)) log c.
pub fn transfer_b(input: &TransferInput) -> Result<TransferOutput> {
    let dims = input.y.dims();
    let (m, n) = (dims.m, dims.n);
    let d = dims.d();
    let r_c = r_hard(dims, input.c)?;
    input.require_cone(0.0, "C_0(t)")?;
    input.require_witness(bound_b_hypothesis(dims, input.c), "part (b)")?;

    let av = input.a.entries();
    let log_c = input.c.ln();
    let t_prime = input.t - (n as f64 - 1.0) / d as f64 * log_c;

    let large: Vec<usize> = (m..d).filter(|&j| av[j] >= -r_c).collect();
    let small: Vec<usize> = (m..d).filter(|&j| av[j] < -r_c).collect();
    let k = large.len();
    if small.is_empty() {
        return Err(Error::internal(
            "every contracting slot sits above -R_c, which the hypothesis bound excludes",
        ));
    }
    let mut permutation: Vec<usize> = (0..m).collect();
    permutation.extend(large.iter().copied());
    permutation.extend(small.iter().copied());

    let shift = -(n as f64 - 1.0) / (m * d) as f64 * log_c;
    let mut a_new = av.to_vec();
    for item in a_new.iter_mut().take(m) {
        *item += shift;
    }
    for &j in &large {
        a_new[j] = -r_c;
    }
    // Equal subtraction on the small slots restores the block sum -t'.
    let small_sum: f64 = small.iter().map(|&j| av[j]).sum();
    let sub = (small_sum - k as f64 * r_c + t_prime) / small.len() as f64;
    if sub < -1e-12 {
        return Err(Error::internal("equal-subtraction step went negative"));
    }
    for &j in &small {
        a_new[j] -= sub;
    }

    // The pinned slots sit exactly on the boundary a_{m+j} = -R_c; push
    // them inward and rebalance on the small slots.
    if k > 0 {
        let min_slack = small
            .iter()
            .map(|&j| -a_new[j] - r_c)
            .chain(a_new[..m].iter().map(|&v| v + r_c))
            .fold(f64::INFINITY, f64::min);
        let eta = (min_slack / (2.0 * (k as f64 + 1.0))).min(1e-6);
        for &j in &large {
            a_new[j] -= eta;
        }
        for &j in &small {
            a_new[j] += k as f64 * eta / small.len() as f64;
        }
    }
    let a_prime = renormalized(a_new, dims, t_prime)?;

    let query = ConeQuery::new(dims, r_c, t_prime)?;
    if !in_cone(&a_prime, &query)? {
        return Err(Error::internal("transfer_b output left the cone C_{R_c}(t')"));
    }
    let cutoff = bound_b_conclusion(dims, input.c);
    let verified = verify(&input.y, &a_prime, cutoff, "transfer_b")?;
    Ok(TransferOutput {
        a_prime: a_prime.clone(),
        t_prime,
        achieved_bound: verified,
        perturbation: {
            let mut base = av.to_vec();
            for item in base.iter_mut().take(m) {
                *item += shift;
            }
            for &j in &large {
                base[j] = -r_c;
            }
            for &j in &small {
                base[j] -= sub;
            }
            base.iter()
                .zip(a_prime.entries())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        },
        permutation,
    })
}

/// Builds a random valid part (a) input: a cone point in C_{R_c}(t) plus a
/// matrix engineered so a designated q carries a witness under the
/// hypothesis bound. Roughly half the draws (when m > 1) place one slot at
/// or below zero so the Dirichlet repair path is exercised.
pub fn design_input_a<R: rand::Rng>(dims: Dims, c: f64, rng: &mut R) -> Result<TransferInput> {
    let (m, n) = (dims.m, dims.n);
    let r_c = r_hard(dims, c)?;
    let margin = 0.05 + 0.2 * rng.gen::<f64>();
    let t = n as f64 * (r_c + margin) + 1.0 + 3.0 * rng.gen::<f64>();

    let mut a = vec![0.0; dims.d()];
    let k_slot = if m > 1 && rng.gen::<bool>() { Some(rng.gen_range(0..m)) } else { None };
    let mut rest = t;
    if let Some(i) = k_slot {
        a[i] = -0.9 * r_c * rng.gen::<f64>();
        rest -= a[i];
    }
    split_positive(&mut a, (0..m).filter(|&i| Some(i) != k_slot).collect(), rest, rng);
    // Contracting block: each slot strictly below -R_c, summing to -t.
    let slack = t - n as f64 * (r_c + margin);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= slack / wsum;
    }
    for j in 0..n {
        a[m + j] = -(r_c + margin + weights[j]);
    }

    let q = vec![1i64; n];
    let bound = bound_a_hypothesis(dims, c);
    let mut residual_caps: Vec<f64> = (0..m).map(|i| 0.9 * bound * (-a[i]).exp()).collect();
    if let Some(i) = k_slot {
        let epsilon = c.powf(1.0 / (2 * dims.d()) as f64);
        let n_cap = (1.0 / epsilon).ceil();
        residual_caps[i] = residual_caps[i].min(0.9 / n_cap);
    }
    let (y, p) = design_matrix(dims, &q, &residual_caps, rng)?;
    finish_design(a, y, c, t, p, q, bound)
}

/// Builds a random valid part (b) input: a cone point in C_0(t) with one
/// deep contracting slot carrying the witness q.
pub fn design_input_b<R: rand::Rng>(dims: Dims, c: f64, rng: &mut R) -> Result<TransferInput> {
    let (m, n) = (dims.m, dims.n);
    let bound = bound_b_hypothesis(dims, c);
    let margin = 0.05 + 0.2 * rng.gen::<f64>();
    let depth = -bound.ln() + margin + rng.gen::<f64>();
    let t = depth + (n as f64 - 1.0) * (margin + 1.0) + 1.0 + 2.0 * rng.gen::<f64>();

    let mut a = vec![0.0; dims.d()];
    split_positive(&mut a, (0..m).collect(), t, rng);
    a[dims.d() - 1] = -depth;
    if n > 1 {
        let rest = t - depth;
        let weights: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let wsum: f64 = weights.iter().sum();
        for (j, w) in weights.iter().enumerate() {
            a[m + j] = -(margin + (rest - (n as f64 - 1.0) * margin) * w / wsum);
        }
    }

    let mut q = vec![0i64; n];
    q[n - 1] = 1;
    let residual_caps: Vec<f64> = (0..m).map(|i| 0.9 * bound * (-a[i]).exp()).collect();
    let (y, p) = design_matrix(dims, &q, &residual_caps, rng)?;
    finish_design(a, y, c, t, p, q, bound)
}

fn split_positive<R: rand::Rng>(a: &mut [f64], slots: Vec<usize>, total: f64, rng: &mut R) {
    let mut weights: Vec<f64> = slots.iter().map(|_| rng.gen::<f64>() + 0.05).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= total / wsum;
    }
    for (idx, &i) in slots.iter().enumerate() {
        a[i] = weights[idx];
    }
}

/// Matrix with prescribed residual magnitudes at the given q: every row dot
/// q lands within caps[i] of an integer.
fn design_matrix<R: rand::Rng>(
    dims: Dims,
    q: &[i64],
    caps: &[f64],
    rng: &mut R,
) -> Result<(MatrixY, Vec<i64>)> {
    let (m, n) = (dims.m, dims.n);
    let pivot = q
        .iter()
        .position(|&v| v != 0)
        .ok_or_else(|| Error::internal("designed witness q must be nonzero"))?;
    let mut rows = Vec::with_capacity(m);
    let mut p = Vec::with_capacity(m);
    for cap in caps.iter().take(m) {
        let r = (rng.gen::<f64>() * 2.0 - 1.0) * cap.min(0.4);
        let mut row: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = row.iter().zip(q).enumerate().filter(|(j, _)| *j != pivot).map(|(_, (y, &qj))| y * qj as f64).sum();
        row[pivot] = ((r - s) / q[pivot] as f64).rem_euclid(1.0);
        let dot: f64 = row.iter().zip(q).map(|(y, &qj)| y * qj as f64).sum();
        p.push(dot.round_ties_even() as i64);
        rows.push(row);
    }
    Ok((MatrixY::new(dims, rows)?, p))
}

fn finish_design(
    a: Vec<f64>,
    y: MatrixY,
    c: f64,
    t: f64,
    p: Vec<i64>,
    q: Vec<i64>,
    bound: f64,
) -> Result<TransferInput> {
    let dims = y.dims();
    let a = renormalized(a, dims, t)?;
    let input = TransferInput::new(a, y, c, t, p, q)?;
    let norm = input.witness_norm(&input.a);
    if !(norm < bound) {
        return Err(Error::internal(format!(
            "inverse design produced witness norm {norm} above the bound {bound}"
        )));
    }
    Ok(input)
}

fn verify(y: &MatrixY, a: &CartanVector, cutoff: f64, label: &str) -> Result<f64> {
    let res = delta_flowed(y, a, Some(cutoff))?;
    if !(res.delta < cutoff) {
        return Err(Error::internal(format!(
            "{label} verification failed: delta {} is not below the cutoff {cutoff} at a = {:?}",
            res.delta,
            a.entries()
        )));
    }
    Ok(res.delta)
}

/// Level h with sum over values of min(v, h) = target; values ascending.
fn water_level(values: &[f64], target: f64) -> Result<f64> {
    let total: f64 = values.iter().sum();
    if total < target - 1e-9 {
        return Err(Error::internal("water-filling target exceeds the available mass"));
    }
    // With j values below h, h = (target - prefix_sum(j)) / (len - j).
    let mut prefix = 0.0;
    for j in 0..values.len() {
        let h = (target - prefix) / (values.len() - j) as f64;
        if h <= values[j] {
            return Ok(h);
        }
        prefix += values[j];
    }
    // Only reachable when total == target up to rounding: no slot is capped.
    Ok(values[values.len() - 1])
}

/// Repairs the trace to exactly zero (spreading rounding error over the
/// contracting block) and wraps the result.
fn renormalized(mut a: Vec<f64>, dims: Dims, _t: f64) -> Result<CartanVector> {
    let trace: f64 = a.iter().sum();
    let n = dims.n as f64;
    for j in dims.m..dims.d() {
        a[j] -= trace / n;
    }
    CartanVector::new(a)
}
