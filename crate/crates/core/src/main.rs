use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use multdioph::cartan::SigmaSlice;
use multdioph::dani::{solve_r, PsiSpec};
use multdioph::dims::Dims;
use multdioph::error::Error;
use multdioph::experiments::{
    dno_sweep, equi_average, measure_s_mult, measure_uniform_intersection, moment_decay,
    covering_decay_fit, CuspBand, SweepConfig,
};
use multdioph::cartan::CartanVector;
use multdioph::lattice::{delta_flowed, MatrixY};
use multdioph::probe::{cusp_hit, in_s_additive, in_s_mult, uniform_probe};
use multdioph::report::{
    config_hash, output_paths, write_csv, write_json, fmt_f64, JsonEnvelope, VERSION,
};
use multdioph::transfer::{design_input_a, design_input_b, transfer_a, transfer_b};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "multdioph", version, about = "Multiplicative Diophantine approximation toolkit")]
struct Cli {
    /// Output directory for reports; falls back to MULTDIOPH_OUT, then ".".
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Master seed override for randomized commands; always recorded in
    /// emitted reports.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DimArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the correspondence equation for R(t).
    DaniSolve {
        #[command(flatten)]
        dims: DimArgs,
        /// "hard:C", "logpower:L", "table:FILE.json", or inline JSON.
        #[arg(long)]
        psi: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Shortest vector of the flowed lattice; prints a witness.
    Delta {
        #[command(flatten)]
        dims: DimArgs,
        /// Rows separated by ';', entries by ','. Example: "0.5;0.25".
        #[arg(long)]
        y: String,
        /// m+n comma-separated flow coordinates summing to zero.
        #[arg(long)]
        a: String,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Single-height membership test (additive or multiplicative system).
    SProbe {
        #[command(flatten)]
        dims: DimArgs,
        #[arg(long)]
        y: String,
        #[arg(long)]
        psi: String,
        #[arg(long = "T")]
        t_height: f64,
        /// Test the additive system instead of the multiplicative one.
        #[arg(long)]
        additive: bool,
    },
    /// Multiplicative membership across a height grid (liminf/limsup proxy).
    UniformProbe {
        #[command(flatten)]
        dims: DimArgs,
        #[arg(long)]
        y: String,
        #[arg(long)]
        psi: String,
        /// Comma-separated heights, strictly increasing.
        #[arg(long = "T-grid")]
        t_grid: String,
    },
    /// Property check of the transference step on inverse-designed inputs.
    TransferCheck {
        #[command(flatten)]
        dims: DimArgs,
        #[arg(long)]
        c: f64,
        /// "a" or "b".
        #[arg(long)]
        part: String,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Convex-body search sweep; expects full success.
    DnoSweep {
        #[command(flatten)]
        dims: DimArgs,
        /// Comma-separated constants above the volume threshold.
        #[arg(long)]
        c: String,
        #[arg(long = "T")]
        t_grid: String,
        #[arg(long = "N", default_value_t = 100)]
        samples: usize,
    },
    /// Empirical measure of the solvable set per grid height.
    MeasureSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fraction solvable at every grid height >= T0, as T0 varies.
    IntersectionSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Empirical h-th central moment of the band average per flow time.
    MomentDecay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        h: u32,
    },
    /// Covering decay fit (slope of log measure against log log T).
    DecayFit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cusp-band quadrature average over the compact slice.
    EquiAverage {
        #[command(flatten)]
        dims: DimArgs,
        #[arg(long)]
        y: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        sigma: f64,
        /// Band radius R; omitted means the whole interval [0,1).
        #[arg(long)]
        r_band: Option<f64>,
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
    /// Search t*E_1 for a flow point epsilon-deep in the cusp.
    CuspHit {
        #[command(flatten)]
        dims: DimArgs,
        /// Explicit matrix; omit to run a seeded random sample sweep.
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 9)]
        resolution: usize,
        #[arg(long = "N", default_value_t = 100)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Resource(_) | Error::Io(_) => ExitCode::from(3),
                Error::Domain(_) | Error::DimensionMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn out_dir(cli_dir: &Option<PathBuf>) -> PathBuf {
    cli_dir
        .clone()
        .or_else(|| std::env::var_os("MULTDIOPH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> multdioph::Result<()> {
    let dir = out_dir(&cli.out_dir);
    let seed = cli.seed;
    match cli.command {
        Command::DaniSolve { dims, psi, t, tol } => {
            let d = Dims::new(dims.m, dims.n)?;
            let psi = parse_psi(&psi)?;
            let r = solve_r(&psi, d, t, tol)?;
            println!("{}", fmt_f64(r));
            Ok(())
        }
        Command::Delta { dims, y, a, cutoff } => {
            let d = Dims::new(dims.m, dims.n)?;
            let y = parse_matrix(d, &y)?;
            let a = CartanVector::new(parse_list(&a)?)?;
            let res = delta_flowed(&y, &a, cutoff)?;
            let residuals: Vec<f64> = (0..d.m)
                .map(|i| y.row_dot(i, &res.q) - res.p[i] as f64)
                .collect();
            #[derive(Serialize)]
            struct Witness<'a> {
                p: &'a [i64],
                q: &'a [i64],
                log_delta: f64,
                delta: f64,
                residuals: Vec<f64>,
            }
            let w = Witness {
                p: &res.p,
                q: &res.q,
                log_delta: res.log_delta,
                delta: res.delta,
                residuals,
            };
            println!("{}", serde_json::to_string(&w).map_err(|e| Error::internal(e.to_string()))?);
            Ok(())
        }
        Command::SProbe { dims, y, psi, t_height, additive } => {
            let d = Dims::new(dims.m, dims.n)?;
            let y = parse_matrix(d, &y)?;
            let psi = parse_psi(&psi)?;
            let psi_t = psi.eval(t_height);
            let cert = if additive {
                in_s_additive(&y, psi_t, t_height)?
            } else {
                in_s_mult(&y, psi_t, t_height)?
            };
            match cert {
                Some(c) => println!(
                    "{}",
                    serde_json::to_string(&c).map_err(|e| Error::internal(e.to_string()))?
                ),
                None => println!("{{\"found\":false}}"),
            }
            Ok(())
        }
        Command::UniformProbe { dims, y, psi, t_grid } => {
            let d = Dims::new(dims.m, dims.n)?;
            let y = parse_matrix(d, &y)?;
            let psi_spec = parse_psi(&psi)?;
            let grid = parse_list(&t_grid)?;
            let report = uniform_probe(&y, &psi_spec, &grid)?;
            #[derive(Serialize)]
            struct Cfg<'a> {
                m: usize,
                n: usize,
                psi: &'a PsiSpec,
                t_grid: &'a [f64],
                y: &'a [Vec<f64>],
            }
            let cfg = Cfg { m: d.m, n: d.n, psi: &psi_spec, t_grid: &grid, y: y.rows() };
            let hash = config_hash(&cfg)?;
            let (csv_path, json_path) = output_paths(&dir, "uniform-probe", d, hash);
            let rows: Vec<Vec<String>> = report
                .verdicts
                .iter()
                .map(|v| {
                    let (p, q, lhs) = match &v.certificate {
                        Some(c) => (fmt_ints(&c.p), fmt_ints(&c.q), fmt_f64(c.mult_lhs)),
                        None => ("".into(), "".into(), "".into()),
                    };
                    vec![fmt_f64(v.t_height), v.found.to_string(), p, q, lhs]
                })
                .collect();
            write_csv(&csv_path, &["T", "found", "p", "q", "mult_lhs"], &rows)?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "uniform-probe".into(),
                    version: VERSION.into(),
                    master_seed: None,
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &report,
                },
            )?;
            println!(
                "first_T0 = {:?}, cofinal on grid = {}",
                report.first_t0, report.unbounded_success
            );
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::TransferCheck { dims, c, part, count } => {
            let d = Dims::new(dims.m, dims.n)?;
            let master_seed = seed.unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            let mut failures = 0usize;
            for _ in 0..count {
                let outcome = match part.as_str() {
                    "a" => design_input_a(d, c, &mut rng).and_then(|inp| transfer_a(&inp)),
                    "b" => design_input_b(d, c, &mut rng).and_then(|inp| transfer_b(&inp)),
                    other => {
                        return Err(Error::domain(format!(
                            "part must be \"a\" or \"b\", got {other:?}"
                        )))
                    }
                };
                if let Err(e) = outcome {
                    failures += 1;
                    eprintln!("failure: {e}");
                }
            }
            println!("{count} inputs, {failures} failures (seed {master_seed})");
            if failures > 0 {
                return Err(Error::internal(format!("{failures} transference checks failed")));
            }
            Ok(())
        }
        Command::DnoSweep { dims, c, t_grid, samples } => {
            let d = Dims::new(dims.m, dims.n)?;
            let c_grid = parse_list(&c)?;
            let t_grid = parse_list(&t_grid)?;
            let master_seed = seed.unwrap_or(0);
            let report = dno_sweep(d, &c_grid, &t_grid, samples, master_seed)?;
            #[derive(Serialize)]
            struct Cfg<'a> {
                m: usize,
                n: usize,
                c_grid: &'a [f64],
                t_grid: &'a [f64],
                samples: usize,
                master_seed: u64,
            }
            let cfg = Cfg { m: d.m, n: d.n, c_grid: &c_grid, t_grid: &t_grid, samples, master_seed };
            let hash = config_hash(&cfg)?;
            let (csv_path, json_path) = output_paths(&dir, "dno-sweep", d, hash);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.c),
                        fmt_f64(r.t_height),
                        r.successes.to_string(),
                        r.samples.to_string(),
                        fmt_f64(r.successes as f64 / r.samples as f64),
                    ]
                })
                .collect();
            write_csv(&csv_path, &["c", "T", "successes", "samples", "rate"], &rows)?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "dno-sweep".into(),
                    version: VERSION.into(),
                    master_seed: Some(master_seed),
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &report,
                },
            )?;
            let all = report.rows.iter().all(|r| r.successes == r.samples);
            println!("success rate {}", if all { "1.0" } else { "below 1.0" });
            println!("wrote {}", csv_path.display());
            if !all {
                return Err(Error::internal("dno sweep had failures"));
            }
            Ok(())
        }
        Command::MeasureSweep { config } => {
            let cfg = load_sweep_config(&config, seed)?;
            let report = measure_s_mult(&cfg)?;
            let hash = config_hash(&cfg)?;
            let d = cfg.dims()?;
            let (csv_path, json_path) = output_paths(&dir, "measure-sweep", d, hash);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.t),
                        fmt_f64(r.t_height),
                        r.successes.to_string(),
                        r.samples.to_string(),
                        fmt_f64(r.fraction),
                        fmt_f64(r.wilson_low),
                        fmt_f64(r.wilson_high),
                        r.budget_errors.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &csv_path,
                &["t", "T", "successes", "samples", "fraction", "wilson_low", "wilson_high", "budget_errors"],
                &rows,
            )?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "measure-sweep".into(),
                    version: VERSION.into(),
                    master_seed: Some(cfg.master_seed),
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &report,
                },
            )?;
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::IntersectionSweep { config } => {
            let cfg = load_sweep_config(&config, seed)?;
            let report = measure_uniform_intersection(&cfg)?;
            let hash = config_hash(&cfg)?;
            let d = cfg.dims()?;
            let (csv_path, json_path) = output_paths(&dir, "intersection-sweep", d, hash);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.t0),
                        fmt_f64(r.t0_height),
                        r.successes.to_string(),
                        r.samples.to_string(),
                        fmt_f64(r.fraction),
                        fmt_f64(r.wilson_low),
                        fmt_f64(r.wilson_high),
                    ]
                })
                .collect();
            write_csv(
                &csv_path,
                &["t0", "T0", "successes", "samples", "fraction", "wilson_low", "wilson_high"],
                &rows,
            )?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "intersection-sweep".into(),
                    version: VERSION.into(),
                    master_seed: Some(cfg.master_seed),
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &report,
                },
            )?;
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::MomentDecay { config, h } => {
            let cfg = load_sweep_config(&config, seed)?;
            let report = moment_decay(&cfg, h)?;
            let hash = config_hash(&cfg)?;
            let d = cfg.dims()?;
            let (csv_path, json_path) = output_paths(&dir, "moment-decay", d, hash);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.t),
                        fmt_f64(r.mean),
                        fmt_f64(r.moment),
                        r.samples.to_string(),
                    ]
                })
                .collect();
            write_csv(&csv_path, &["t", "mean", "moment", "samples"], &rows)?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "moment-decay".into(),
                    version: VERSION.into(),
                    master_seed: Some(cfg.master_seed),
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &report,
                },
            )?;
            if !report.non_monotone_at.is_empty() {
                println!("non-monotone stretches at grid indices {:?}", report.non_monotone_at);
            }
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::DecayFit { config } => {
            let cfg = load_sweep_config(&config, seed)?;
            let fit = covering_decay_fit(&cfg)?;
            let hash = config_hash(&cfg)?;
            let d = cfg.dims()?;
            let (csv_path, json_path) = output_paths(&dir, "decay-fit", d, hash);
            let rows: Vec<Vec<String>> = fit
                .points
                .iter()
                .map(|p| vec![fmt_f64(p[0]), fmt_f64(p[1])])
                .collect();
            write_csv(&csv_path, &["log_t", "log_fraction"], &rows)?;
            write_json(
                &json_path,
                &JsonEnvelope {
                    experiment: "decay-fit".into(),
                    version: VERSION.into(),
                    master_seed: Some(cfg.master_seed),
                    config_hash: format!("{hash:016x}"),
                    config: &cfg,
                    data: &fit,
                },
            )?;
            match fit.predicted_slope {
                Some(p) => println!("slope {} (predicted {})", fmt_f64(fit.slope), fmt_f64(p)),
                None => println!("slope {}", fmt_f64(fit.slope)),
            }
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::EquiAverage { dims, y, t, sigma, r_band, points } => {
            let d = Dims::new(dims.m, dims.n)?;
            let y = parse_matrix(d, &y)?;
            let slice = SigmaSlice::new(d, sigma)?;
            let band = match r_band {
                Some(r) => CuspBand::from_r(r)?,
                None => CuspBand::everything(),
            };
            let avg = equi_average(&y, t, &slice, &band, points)?;
            println!("{}", fmt_f64(avg));
            Ok(())
        }
        Command::CuspHit { dims, y, t, epsilon, resolution, samples } => {
            let d = Dims::new(dims.m, dims.n)?;
            match y {
                Some(spec) => {
                    let y = parse_matrix(d, &spec)?;
                    match cusp_hit(&y, t, epsilon, resolution)? {
                        Some(a) => println!(
                            "{}",
                            serde_json::to_string(a.entries())
                                .map_err(|e| Error::internal(e.to_string()))?
                        ),
                        None => println!("none at this resolution"),
                    }
                }
                None => {
                    let master_seed = seed.unwrap_or(0);
                    let mut hits = 0usize;
                    for i in 0..samples as u64 {
                        let y = multdioph::experiments::sample_matrix(d, master_seed, i);
                        if cusp_hit(&y, t, epsilon, resolution)?.is_some() {
                            hits += 1;
                        }
                    }
                    println!(
                        "{hits}/{samples} hits ({}) at t = {t}, seed {master_seed}",
                        fmt_f64(hits as f64 / samples as f64)
                    );
                }
            }
            Ok(())
        }
    }
}

fn parse_list(text: &str) -> multdioph::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("bad number {s:?} in list")))
        })
        .collect()
}

fn fmt_ints(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

fn parse_matrix(dims: Dims, text: &str) -> multdioph::Result<MatrixY> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(parse_list)
        .collect::<multdioph::Result<_>>()?;
    MatrixY::new(dims, rows)
}

fn parse_psi(text: &str) -> multdioph::Result<PsiSpec> {
    if text.trim_start().starts_with('{') {
        let psi: PsiSpec = serde_json::from_str(text)
            .map_err(|e| Error::domain(format!("bad psi JSON: {e}")))?;
        psi.validate()?;
        return Ok(psi);
    }
    let (kind, arg) = text
        .split_once(':')
        .ok_or_else(|| Error::domain(format!("psi spec {text:?} must be kind:value")))?;
    match kind {
        "hard" => PsiSpec::hard(
            arg.parse().map_err(|_| Error::domain(format!("bad constant {arg:?}")))?,
        ),
        "logpower" => PsiSpec::log_power(
            arg.parse().map_err(|_| Error::domain(format!("bad exponent {arg:?}")))?,
        ),
        "table" => {
            let text = std::fs::read_to_string(Path::new(arg))?;
            let psi: PsiSpec = serde_json::from_str(&text)
                .map_err(|e| Error::domain(format!("bad table file: {e}")))?;
            psi.validate()?;
            Ok(psi)
        }
        other => Err(Error::domain(format!("unknown psi kind {other:?}"))),
    }
}

fn load_sweep_config(path: &Path, seed_override: Option<u64>) -> multdioph::Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg: SweepConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| Error::domain(format!("bad config: {e}")))?,
        _ => toml::from_str(&text).map_err(|e| Error::domain(format!("bad config: {e}")))?,
    };
    if let Some(s) = seed_override {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Verifies the dani-solve example from the command surface itself.
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_spec_strings() {
        assert!(matches!(parse_psi("hard:0.5").unwrap(), PsiSpec::Hard { .. }));
        assert!(matches!(parse_psi("logpower:1").unwrap(), PsiSpec::LogPower { .. }));
        assert!(parse_psi("banana:1").is_err());
        let json = r#"{"kind":"hard","c":0.5}"#;
        assert!(matches!(parse_psi(json).unwrap(), PsiSpec::Hard { .. }));
    }

    #[test]
    fn matrix_parsing() {
        let d = Dims::new(2, 1).unwrap();
        let y = parse_matrix(d, "0.5;0.25").unwrap();
        assert_eq!(y.rows()[1][0], 0.25);
        assert!(parse_matrix(d, "0.5,0.3;0.25").is_err());
    }

    #[test]
    fn dani_solve_oracle_through_cli_parser() {
        let d = Dims::new(2, 1).unwrap();
        let psi = parse_psi("logpower:1").unwrap();
        let r = solve_r(&psi, d, 10.0, 1e-12).unwrap();
        assert!((r - 0.742).abs() < 5e-4, "r = {r}");
    }

    #[test]
    fn rfunction_used_by_surface() {
        use multdioph::dani::RFunction;
        let r = RFunction::new(parse_psi("hard:0.5").unwrap(), Dims::new(2, 1).unwrap()).unwrap();
        assert!(r.eval(5.0).unwrap() > 0.0);
    }
}
