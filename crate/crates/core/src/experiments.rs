//! Seeded Monte Carlo and quadrature experiments: solvability measures over
//! random matrices, the critical-exponent dichotomy trend, covering decay
//! fits, cusp-band averages over the compact slice, and moment decay of
//! those averages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartan::{gamma_chart, SigmaSlice};
use crate::dani::PsiSpec;
use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::lattice::{certify_amgm, delta_flowed, minkowski_point, MatrixY};
use crate::probe::in_s_mult;

/// Configuration shared by the sweep experiments. `t_grid` holds
/// log-heights: the probed height is T = e^t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    pub psi: PsiSpec,
    pub t_grid: Vec<f64>,
    pub samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub r_band: Option<f64>,
    #[serde(default)]
    pub quadrature_points: Option<usize>,
}

impl SweepConfig {
    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.m, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        self.psi.validate()?;
        if self.samples < 1 {
            return Err(Error::domain("samples must be at least 1"));
        }
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("t_grid must be nonempty and strictly increasing"));
        }
        Ok(())
    }
}

/// Uniform matrix on [0,1)^{m x n} from the per-sample RNG stream. Stream
/// separation makes results independent of thread scheduling.
pub fn sample_matrix(dims: Dims, master_seed: u64, index: u64) -> MatrixY {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    let rows = (0..dims.m)
        .map(|_| (0..dims.n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    MatrixY::new(dims, rows).expect("sampled matrix is always valid")
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - half) / denom).max(0.0), ((center + half) / denom).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub t: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub successes: usize,
    pub samples: usize,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Samples that hit the enumeration budget (counted as failures).
    pub budget_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub config: SweepConfig,
    pub rows: Vec<MeasureRow>,
}

/// Per-sample solvability verdicts over the whole grid: entry [i][k] is the
/// verdict of sample i at grid point k. Budget aborts count as misses and
/// are tallied separately.
fn found_matrix(config: &SweepConfig) -> Result<(Vec<Vec<bool>>, Vec<usize>)> {
    config.validate()?;
    let dims = config.dims()?;
    let grid = &config.t_grid;
    let per_sample: Vec<(Vec<bool>, Vec<bool>)> = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let y = sample_matrix(dims, config.master_seed, i);
            let mut found = Vec::with_capacity(grid.len());
            let mut errs = Vec::with_capacity(grid.len());
            for &t in grid {
                let t_height = t.exp();
                let psi_t = config.psi.eval(t_height);
                match in_s_mult(&y, psi_t, t_height) {
                    Ok(cert) => {
                        found.push(cert.is_some());
                        errs.push(false);
                    }
                    Err(Error::Resource(_)) => {
                        found.push(false);
                        errs.push(true);
                    }
                    Err(e) => panic!("probe failed: {e}"),
                }
            }
            (found, errs)
        })
        .collect();
    let mut err_counts = vec![0usize; grid.len()];
    for (_, errs) in &per_sample {
        for (k, &e) in errs.iter().enumerate() {
            if e {
                err_counts[k] += 1;
            }
        }
    }
    Ok((per_sample.into_iter().map(|(f, _)| f).collect(), err_counts))
}

/// Empirical measure of the height-T solvable set over random matrices,
/// per grid point, with Wilson 95% intervals.
pub fn measure_s_mult(config: &SweepConfig) -> Result<MeasureReport> {
    let (found, errs) = found_matrix(config)?;
    let rows = config
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let successes = found.iter().filter(|f| f[k]).count();
            let (lo, hi) = wilson_interval(successes, config.samples);
            MeasureRow {
                t,
                t_height: t.exp(),
                successes,
                samples: config.samples,
                fraction: successes as f64 / config.samples as f64,
                wilson_low: lo,
                wilson_high: hi,
                budget_errors: errs[k],
            }
        })
        .collect();
    Ok(MeasureReport { config: config.clone(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRow {
    pub t0: f64,
    #[serde(rename = "T0")]
    pub t0_height: f64,
    pub successes: usize,
    pub samples: usize,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub config: SweepConfig,
    pub rows: Vec<IntersectionRow>,
}

/// Fraction of samples solvable at every grid height >= T0, as T0 runs over
/// the grid. A finite proxy for the liminf set, valid only on this grid.
pub fn measure_uniform_intersection(config: &SweepConfig) -> Result<IntersectionReport> {
    let (found, _) = found_matrix(config)?;
    let rows = config
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t0)| {
            let successes = found.iter().filter(|f| f[k..].iter().all(|&b| b)).count();
            let (lo, hi) = wilson_interval(successes, config.samples);
            IntersectionRow {
                t0,
                t0_height: t0.exp(),
                successes,
                samples: config.samples,
                fraction: successes as f64 / config.samples as f64,
                wilson_low: lo,
                wilson_high: hi,
            }
        })
        .collect();
    Ok(IntersectionReport { config: config.clone(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub config: SweepConfig,
    /// Least-squares slope of log(fraction) against log t (t = log T).
    pub slope: f64,
    pub intercept: f64,
    /// The exponent m+n-2-lambda the covering bound predicts.
    pub predicted_slope: Option<f64>,
    /// (log t, log fraction) pairs that entered the fit.
    pub points: Vec<[f64; 2]>,
    /// Covering-style bound 2^m e [log(2^{-m}/e)^{m-1} + 1] at e = psi(T),
    /// one value per grid point, for cross-checking magnitudes.
    pub subvolume_bound: Vec<f64>,
}

/// Fits the decay exponent of the empirical solvable-set measure.
pub fn covering_decay_fit(config: &SweepConfig) -> Result<DecayFit> {
    let report = measure_s_mult(config)?;
    decay_fit_from_measure(&report)
}

pub fn decay_fit_from_measure(report: &MeasureReport) -> Result<DecayFit> {
    let config = &report.config;
    let points: Vec<[f64; 2]> = report
        .rows
        .iter()
        .filter(|r| r.fraction > 0.0)
        .map(|r| [r.t.ln(), r.fraction.ln()])
        .collect();
    if points.len() < 3 {
        return Err(Error::domain(
            "decay fit needs at least 3 grid points with nonzero fraction",
        ));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p[0]).sum();
    let sy: f64 = points.iter().map(|p| p[1]).sum();
    let sxx: f64 = points.iter().map(|p| p[0] * p[0]).sum();
    let sxy: f64 = points.iter().map(|p| p[0] * p[1]).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let predicted_slope = match config.psi {
        PsiSpec::LogPower { lambda } => Some((config.m + config.n) as f64 - 2.0 - lambda),
        _ => None,
    };
    let m = config.m as f64;
    let subvolume_bound = config
        .t_grid
        .iter()
        .map(|&t| {
            let eps = config.psi.eval(t.exp());
            let inner = (2.0f64.powf(-m) / eps).ln().powf(m - 1.0);
            2.0f64.powf(m) * eps * (inner + 1.0)
        })
        .collect();
    Ok(DecayFit {
        config: config.clone(),
        slope,
        intercept,
        predicted_slope,
        points,
        subvolume_bound,
    })
}

/// Annular test band [e^{-R-1}, e^{-R}) of shortest-vector lengths, plus
/// the trivial everything band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspBand {
    pub r_at_t: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CuspBand {
    pub fn from_r(r_at_t: f64) -> Result<Self> {
        if !r_at_t.is_finite() || r_at_t < 0.0 {
            return Err(Error::domain(format!("band radius must be finite and >= 0, got {r_at_t}")));
        }
        Ok(CuspBand { r_at_t, lower: (-r_at_t - 1.0).exp(), upper: (-r_at_t).exp() })
    }

    /// [0, 1): every flowed lattice off the cone boundary lands here.
    pub fn everything() -> Self {
        CuspBand { r_at_t: 0.0, lower: 0.0, upper: 1.0 }
    }

    pub fn contains(&self, delta: f64) -> bool {
        self.lower <= delta && delta < self.upper
    }
}

/// Midpoint tensor quadrature of the band indicator over the compact chart
/// J, at flow time t. `points_per_axis` grid points per chart axis; the
/// chart density is constant, so the value is a plain average over chart
/// points inside J.
pub fn equi_average(
    y: &MatrixY,
    t: f64,
    slice: &SigmaSlice,
    band: &CuspBand,
    points_per_axis: usize,
) -> Result<f64> {
    if points_per_axis < 1 {
        return Err(Error::domain("quadrature needs at least one point per axis"));
    }
    if !crate::cartan::t_m_in_cone(slice, t, band.r_at_t) {
        return Err(Error::domain(format!(
            "t = {t} is too small for the slice to clear radius {}",
            band.r_at_t
        )));
    }
    let dim = slice.chart_dim();
    let sigma = slice.sigma;
    let width = 1.0 - 2.0 * sigma;
    let axis: Vec<f64> = (0..points_per_axis)
        .map(|i| sigma + width * (i as f64 + 0.5) / points_per_axis as f64)
        .collect();
    let mut inside = 0usize;
    let mut hits = 0usize;
    let mut idx = vec![0usize; dim];
    loop {
        let point: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if slice.contains_chart_point(&point) {
            inside += 1;
            let a = gamma_chart(slice, &point)?.scaled(t);
            let res = delta_flowed(y, &a, None)?;
            if band.contains(res.delta) {
                hits += 1;
            }
        }
        if dim == 0 {
            break;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < points_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return finish_average(hits, inside);
            }
        }
    }
    finish_average(hits, inside)
}

fn finish_average(hits: usize, inside: usize) -> Result<f64> {
    if inside == 0 {
        return Err(Error::domain("no quadrature point fell inside the chart"));
    }
    Ok(hits as f64 / inside as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub mean: f64,
    pub moment: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub config: SweepConfig,
    pub h: u32,
    pub rows: Vec<MomentRow>,
    /// Grid indices k where the moment at t_grid[k+1] is not below the one
    /// at t_grid[k].
    pub non_monotone_at: Vec<usize>,
}

/// Empirical h-th central moment of the band average across random
/// matrices, per flow time.
pub fn moment_decay(config: &SweepConfig, h: u32) -> Result<MomentReport> {
    config.validate()?;
    if h != 2 && h != 4 {
        return Err(Error::domain(format!("moment order must be 2 or 4, got {h}")));
    }
    if config.samples < 100 {
        return Err(Error::domain("moment decay needs at least 100 samples"));
    }
    let dims = config.dims()?;
    let sigma = config.sigma.ok_or_else(|| Error::domain("moment decay needs sigma"))?;
    let slice = SigmaSlice::new(dims, sigma)?;
    let band = match config.r_band {
        Some(r) => CuspBand::from_r(r)?,
        None => CuspBand::everything(),
    };
    let qpts = config.quadrature_points.unwrap_or(16);

    let mut rows = Vec::with_capacity(config.t_grid.len());
    for &t in &config.t_grid {
        let averages: Vec<f64> = (0..config.samples as u64)
            .into_par_iter()
            .map(|i| {
                let y = sample_matrix(dims, config.master_seed, i);
                equi_average(&y, t, &slice, &band, qpts)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = averages.iter().sum::<f64>() / averages.len() as f64;
        let moment = averages.iter().map(|x| (x - mean).powi(h as i32)).sum::<f64>()
            / averages.len() as f64;
        rows.push(MomentRow { t, mean, moment, samples: config.samples });
    }
    let non_monotone_at = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].moment >= w[0].moment)
        .map(|(k, _)| k)
        .collect();
    Ok(MomentReport { config: config.clone(), h, rows, non_monotone_at })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnoRow {
    pub c: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub successes: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnoReport {
    pub m: usize,
    pub n: usize,
    pub master_seed: u64,
    pub rows: Vec<DnoRow>,
}

/// Runs the convex-body search plus certificate check over a (c, T) grid of
/// random matrices. Every cell is expected to succeed in full.
pub fn dno_sweep(
    dims: Dims,
    c_grid: &[f64],
    t_grid: &[f64],
    samples: usize,
    master_seed: u64,
) -> Result<DnoReport> {
    if samples < 1 {
        return Err(Error::domain("dno_sweep needs at least 1 sample"));
    }
    let threshold = crate::lattice::dno_threshold(dims);
    for &c in c_grid {
        if !(c > threshold) {
            return Err(Error::domain(format!(
                "c = {c} does not clear the volume threshold {threshold}"
            )));
        }
    }
    let mut rows = Vec::new();
    for &c in c_grid {
        let tc = crate::lattice::t_critical(dims, c);
        for &t_height in t_grid {
            if !(t_height > tc) {
                return Err(Error::domain(format!("T = {t_height} is not above T_c = {tc}")));
            }
            let successes = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let y = sample_matrix(dims, master_seed, i);
                    match minkowski_point(&y, t_height, c) {
                        Ok(cert) => usize::from(certify_amgm(&cert, t_height, c).pass),
                        Err(_) => 0,
                    }
                })
                .sum();
            rows.push(DnoRow { c, t_height, successes, samples });
        }
    }
    Ok(DnoReport { m: dims.m, n: dims.n, master_seed, rows })
}
