//! The diagonal Cartan algebra, expansion cones, the affine section at total
//! expansion 1, and its compact sigma-thickened slice.
//!
//! A Cartan vector is a traceless diagonal (a_1, ..., a_{m+n}). The cone at
//! time t consists of vectors whose first block sums to t and stays strictly
//! above -R while the second block stays strictly below -R.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dims::Dims;
use crate::error::{Error, Result};

/// Absolute tolerance on the zero-trace constraint.
pub const TRACE_TOL: f64 = 1e-12;
/// Relative tolerance on derived sum constraints in cone membership.
pub const SUM_REL_TOL: f64 = 1e-9;

/// A point of the Cartan algebra: m+n reals summing to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanVector {
    entries: Vec<f64>,
}

impl CartanVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let sum: f64 = entries.iter().sum();
        if sum.abs() > TRACE_TOL * (1.0 + entries.iter().map(|x| x.abs()).sum::<f64>()) {
            return Err(Error::domain(format!(
                "Cartan vector entries must sum to 0, got sum = {sum:e}"
            )));
        }
        Ok(CartanVector { entries })
    }

    /// Builds a vector without the trace check; used where the sum is zero by
    /// construction (affine charts, scalings).
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        CartanVector { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, t: f64) -> CartanVector {
        CartanVector::from_raw(self.entries.iter().map(|x| t * x).collect())
    }

    /// min_i |a_i|, the distance to the coordinate hyperplanes.
    pub fn floor_norm(&self) -> f64 {
        self.entries.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
    }

    /// Supremum-norm distance between two vectors.
    pub fn sup_dist(&self, other: &CartanVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Query for membership in the cone C_R(t).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeQuery {
    pub dims: Dims,
    pub r_at_t: f64,
    pub t: f64,
}

impl ConeQuery {
    pub fn new(dims: Dims, r_at_t: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("cone query requires t > 0, got t = {t}")));
        }
        if !(r_at_t >= 0.0) {
            return Err(Error::domain(format!(
                "cone query requires R(t) >= 0, got R = {r_at_t}"
            )));
        }
        Ok(ConeQuery { dims, r_at_t, t })
    }
}

/// The compact slice of the section at total expansion 1: first block >= sigma,
/// second block <= -sigma. Nonempty precisely when sigma < 1/max{m,n}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaSlice {
    pub dims: Dims,
    pub sigma: f64,
}

impl SigmaSlice {
    pub fn new(dims: Dims, sigma: f64) -> Result<Self> {
        let bound = 1.0 / dims.max_mn() as f64;
        if !(sigma > 0.0 && sigma < bound) {
            return Err(Error::domain(format!(
                "slice requires 0 < sigma < 1/max{{m,n}} = {bound}, got sigma = {sigma}"
            )));
        }
        Ok(SigmaSlice { dims, sigma })
    }

    /// Dimension of the chart domain J.
    pub fn chart_dim(&self) -> usize {
        self.dims.d() - 2
    }

    /// Checks s in J: coordinates in [sigma, 1-sigma], first-block part sums
    /// to at most 1-sigma, second-block part sums to at most 1-sigma.
    pub fn contains_chart_point(&self, s: &[f64]) -> bool {
        if s.len() != self.chart_dim() {
            return false;
        }
        let hi = 1.0 - self.sigma;
        if s.iter().any(|&x| x < self.sigma || x > hi) {
            return false;
        }
        let (sp, zp) = s.split_at(self.dims.m - 1);
        sp.iter().sum::<f64>() <= hi && zp.iter().sum::<f64>() <= hi
    }
}

/// Strict cone membership. The sum constraint is the only derived quantity,
/// so it alone gets a relative tolerance; the open inequalities are exact.
pub fn in_cone(a: &CartanVector, query: &ConeQuery) -> Result<bool> {
    let d = query.dims.d();
    if a.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.len() });
    }
    let (m, r, t) = (query.dims.m, query.r_at_t, query.t);
    let head: f64 = a.entries[..m].iter().sum();
    if (head - t).abs() > SUM_REL_TOL * t.abs().max(1.0) {
        return Ok(false);
    }
    let pos_ok = a.entries[..m].iter().all(|&x| x > -r);
    let neg_ok = a.entries[m..].iter().all(|&x| x < -r);
    Ok(pos_ok && neg_ok)
}

/// The affine chart J -> M_sigma:
/// (s_1..s_{m-1}, z_1..z_{n-1}) -> (s, 1 - sum s, -z, sum z - 1).
pub fn gamma_chart(slice: &SigmaSlice, s: &[f64]) -> Result<CartanVector> {
    if s.len() != slice.chart_dim() {
        return Err(Error::DimensionMismatch { expected: slice.chart_dim(), got: s.len() });
    }
    if !slice.contains_chart_point(s) {
        return Err(Error::domain(format!("chart point {s:?} lies outside J")));
    }
    Ok(gamma_chart_unchecked(slice.dims, s))
}

/// Chart evaluation without the J membership test. Used by cusp search,
/// which deliberately walks toward the cone boundary past M_sigma.
pub fn gamma_chart_unchecked(dims: Dims, s: &[f64]) -> CartanVector {
    let (sp, zp) = s.split_at(dims.m - 1);
    let mut entries = Vec::with_capacity(dims.d());
    entries.extend_from_slice(sp);
    entries.push(1.0 - sp.iter().sum::<f64>());
    entries.extend(zp.iter().map(|z| -z));
    entries.push(zp.iter().sum::<f64>() - 1.0);
    CartanVector::from_raw(entries)
}

/// Constant pull-back density sqrt(det(A A^T)) of the affine chart, where A
/// is its linear part.
pub fn chart_density(slice: &SigmaSlice) -> f64 {
    let dims = slice.dims;
    let k = slice.chart_dim();
    if k == 0 {
        return 1.0;
    }
    // Row r of A is the gradient of gamma with respect to s_r.
    let d = dims.d();
    let mut a = vec![vec![0.0f64; d]; k];
    for r in 0..dims.m - 1 {
        a[r][r] = 1.0;
        a[r][dims.m - 1] = -1.0;
    }
    for r in 0..dims.n - 1 {
        let row = dims.m - 1 + r;
        a[row][dims.m + r] = -1.0;
        a[row][d - 1] = 1.0;
    }
    let mut gram = vec![vec![0.0f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = (0..d).map(|c| a[i][c] * a[j][c]).sum();
        }
    }
    det(&mut gram).sqrt()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mat: &mut [Vec<f64>]) -> f64 {
    let k = mat.len();
    let mut sign = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| mat[i][col].abs().partial_cmp(&mat[j][col].abs()).unwrap())
            .unwrap();
        if mat[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            mat.swap(pivot, col);
            sign = -sign;
        }
        for row in col + 1..k {
            let f = mat[row][col] / mat[col][col];
            for c in col..k {
                mat[row][c] -= f * mat[col][c];
            }
        }
    }
    sign * (0..k).map(|i| mat[i][i]).product::<f64>()
}

const REJECTION_LIMIT: usize = 1_000_000;

/// Uniform point of M_sigma, drawn by rejection sampling on the bounding box
/// of J and pushed through the chart.
pub fn sample_m_sigma<R: Rng>(slice: &SigmaSlice, rng: &mut R) -> Result<CartanVector> {
    let k = slice.chart_dim();
    let lo = slice.sigma;
    let hi = 1.0 - slice.sigma;
    let mut s = vec![0.0f64; k];
    for _ in 0..REJECTION_LIMIT {
        for x in s.iter_mut() {
            *x = rng.gen_range(lo..hi);
        }
        if slice.contains_chart_point(&s) {
            return gamma_chart(slice, &s);
        }
    }
    Err(Error::internal("rejection sampling on J failed to accept a point"))
}

/// Minimum pairwise sup-norm distance over a list of Cartan vectors.
pub fn separation(points: &[CartanVector]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::domain("separation requires at least 2 points"));
    }
    let mut min = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            min = min.min(points[i].sup_dist(&points[j]));
        }
    }
    Ok(min)
}

/// Separation with the floor term: min of pairwise distances and of each
/// point's smallest absolute coordinate. Always <= separation.
pub fn separation_bar(points: &[CartanVector]) -> Result<f64> {
    let sep = separation(points)?;
    let floor = points.iter().map(|p| p.floor_norm()).fold(f64::INFINITY, f64::min);
    Ok(sep.min(floor))
}

/// Sufficient criterion for t * M_sigma to sit inside the cone C_R(t).
pub fn t_m_in_cone(slice: &SigmaSlice, t: f64, r_at_t: f64) -> bool {
    t * slice.sigma > r_at_t
}

/// Certified Lipschitz bounds of the chart in sup norms. The lower bound 1
/// comes from the embedded identity block; the upper bound is the exact
/// sup-to-sup operator norm of the linear part.
pub fn lipschitz_bounds(slice: &SigmaSlice) -> (f64, f64) {
    let dims = slice.dims;
    let sup = 1.0f64
        .max(dims.m.saturating_sub(1) as f64)
        .max(dims.n.saturating_sub(1) as f64);
    (1.0, sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(m: usize, n: usize) -> Dims {
        Dims::new(m, n).unwrap()
    }

    #[test]
    fn cone_membership_interior_point() {
        let q = ConeQuery::new(dims(2, 1), 0.0, 1.0).unwrap();
        let a = CartanVector::new(vec![0.5, 0.5, -1.0]).unwrap();
        assert!(in_cone(&a, &q).unwrap());
    }

    #[test]
    fn cone_membership_boundary_rejected() {
        let q = ConeQuery::new(dims(2, 1), 0.0, 1.0).unwrap();
        let a = CartanVector::new(vec![1.0, 0.0, -1.0]).unwrap();
        assert!(!in_cone(&a, &q).unwrap());
    }

    #[test]
    fn cone_membership_positive_radius() {
        // R = 1 corresponds to c = e^{-3} through the constant-radius formula.
        let q = ConeQuery::new(dims(2, 1), 1.0, 1.5).unwrap();
        let a = CartanVector::new(vec![2.0, -0.5, -1.5]).unwrap();
        assert!(in_cone(&a, &q).unwrap());
    }

    #[test]
    fn cone_dimension_mismatch() {
        let q = ConeQuery::new(dims(2, 1), 0.0, 1.0).unwrap();
        let a = CartanVector::new(vec![1.0, -1.0]).unwrap();
        assert!(matches!(in_cone(&a, &q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn chart_substitution() {
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        let a = gamma_chart(&slice, &[0.5]).unwrap();
        assert_eq!(a.entries(), &[0.5, 0.5, -1.0]);

        let slice = SigmaSlice::new(dims(2, 2), 0.2).unwrap();
        let a = gamma_chart(&slice, &[0.3, 0.3]).unwrap();
        assert_eq!(a.entries(), &[0.3, 0.7, -0.3, -0.7]);
    }

    #[test]
    fn chart_boundary_point_accepted() {
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        let a = gamma_chart(&slice, &[0.25]).unwrap();
        assert_eq!(a.entries(), &[0.25, 0.75, -1.0]);
    }

    #[test]
    fn chart_outside_domain() {
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        assert!(gamma_chart(&slice, &[0.1]).is_err());
    }

    #[test]
    fn density_small_cases() {
        let f21 = chart_density(&SigmaSlice::new(dims(2, 1), 0.25).unwrap());
        assert!((f21 - 2.0f64.sqrt()).abs() < 1e-12);
        let f12 = chart_density(&SigmaSlice::new(dims(1, 2), 0.25).unwrap());
        assert!((f12 - 2.0f64.sqrt()).abs() < 1e-12);
        // Frozen from the 2x2 Gram determinant: rows (1,-1,0,0) and
        // (0,0,-1,1) give Gram = diag(2,2), det 4, density 2.
        let f22 = chart_density(&SigmaSlice::new(dims(2, 2), 0.2).unwrap());
        assert!((f22 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_on_slice() {
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        let a = sample_m_sigma(&slice, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_m_sigma(&slice, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries()[2], -1.0);
    }

    #[test]
    fn sampling_mean_matches_symmetry() {
        // J is symmetric about s = 1/2 for (m,n) = (2,1), so E[a_1] = 1/2.
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean: f64 = (0..10_000)
            .map(|_| sample_m_sigma(&slice, &mut rng).unwrap().entries()[0])
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean = {mean}");
    }

    #[test]
    fn separation_two_points() {
        let pts = vec![
            CartanVector::new(vec![1.0, 0.0, -1.0]).unwrap(),
            CartanVector::new(vec![2.0, 0.0, -2.0]).unwrap(),
        ];
        assert_eq!(separation(&pts).unwrap(), 1.0);
        assert_eq!(separation_bar(&pts).unwrap(), 0.0);
    }

    #[test]
    fn separation_needs_two_points() {
        let pts = vec![CartanVector::new(vec![1.0, 0.0, -1.0]).unwrap()];
        assert!(separation(&pts).is_err());
    }

    #[test]
    fn scaled_slice_separation_bound() {
        // On t*M_sigma the floored separation dominates t*min(sep, sigma).
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let base: Vec<CartanVector> =
                (0..4).map(|_| sample_m_sigma(&slice, &mut rng).unwrap()).collect();
            let t = rng.gen_range(0.5..20.0);
            let scaled: Vec<CartanVector> = base.iter().map(|a| a.scaled(t)).collect();
            let bound = t * separation(&base).unwrap().min(slice.sigma);
            assert!(separation_bar(&scaled).unwrap() >= bound - 1e-12);
        }
    }

    #[test]
    fn t_m_in_cone_threshold() {
        let slice = SigmaSlice::new(dims(2, 1), 0.3).unwrap();
        assert!(t_m_in_cone(&slice, 10.0, 1.0));
        assert!(!t_m_in_cone(&slice, 3.0, 1.0));
    }

    #[test]
    fn lipschitz_scalar_chart_is_isometry() {
        let slice = SigmaSlice::new(dims(2, 1), 0.25).unwrap();
        assert_eq!(lipschitz_bounds(&slice), (1.0, 1.0));
    }

    #[test]
    fn lipschitz_upper_bound_against_random_pairs() {
        let slice = SigmaSlice::new(dims(2, 2), 0.2).unwrap();
        let (lo, hi) = lipschitz_bounds(&slice);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let s = sample_point(&slice, &mut rng);
            let s2 = sample_point(&slice, &mut rng);
            let d_in = s
                .iter()
                .zip(&s2)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if d_in == 0.0 {
                continue;
            }
            let d_out = gamma_chart(&slice, &s)
                .unwrap()
                .sup_dist(&gamma_chart(&slice, &s2).unwrap());
            let ratio = d_out / d_in;
            assert!(ratio >= lo - 1e-9 && ratio <= hi + 1e-9, "ratio = {ratio}");
        }
    }

    fn sample_point<R: Rng>(slice: &SigmaSlice, rng: &mut R) -> Vec<f64> {
        loop {
            let s: Vec<f64> = (0..slice.chart_dim())
                .map(|_| rng.gen_range(slice.sigma..1.0 - slice.sigma))
                .collect();
            if slice.contains_chart_point(&s) {
                return s;
            }
        }
    }

    #[test]
    fn chart_image_in_cone_after_scaling() {
        let slice = SigmaSlice::new(dims(2, 2), 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = sample_m_sigma(&slice, &mut rng).unwrap();
            for &t in &[0.1, 1.0, 7.0] {
                let q = ConeQuery::new(slice.dims, 0.0, t).unwrap();
                assert!(in_cone(&a.scaled(t), &q).unwrap());
            }
        }
    }

    #[test]
    fn empty_slice_rejected() {
        assert!(SigmaSlice::new(dims(2, 2), 0.5).is_err());
        assert!(SigmaSlice::new(dims(2, 1), 0.0).is_err());
    }
}
