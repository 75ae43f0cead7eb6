//! Batch driver for `twophase-core`.
//!
//! Every subcommand reads a [`RunConfig`] (defaults, then `--config FILE`, then
//! `--section.key value` or `--key value` overrides), writes `<out>/<command>.json`
//! (plus a CSV where noted) and prints one summary line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 certification failure or
//! instability where stability is asserted, 3 numerical failure or inconclusive result.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::{json, Value};

use twophase_core::acceptance::run_suite;
use twophase_core::config::RunConfig;
use twophase_core::equilibria::{entropy_criticality_probe, solve_equilibrium};
use twophase_core::error::Error;
use twophase_core::flat_symbols::{psi_and_ell, symbol_point, symbols};
use twophase_core::spectral::{kernel_analysis, mode_spectra, multi_ball_block_spectrum, reduced_dispersion, OuterBoundary};
use twophase_core::thermo::log_grid;
use twophase_core::zerocert::{certify_zero_free, lower_bound_scan, SymbolParams, Verdict};

pub const SCHEMA: u32 = 1;

const OVERRIDES_HELP: &str = "Any other `--section.key VALUE` (or `--key VALUE` for a key name that occurs in one section only) overrides the configuration, e.g. `--geometry.N 32`, `--m 2`, `--rmax 1e6`.";

const SYMBOLS_CSV: &str = "CSV columns (symbols.csv), one row per z of the log-polar grid:
  re_z, im_z, re_omega1, im_omega1, re_omega2, im_omega2, re_psi, im_psi, re_ell, im_ell,
  re_p1, im_p1, re_p2, im_p2, re_q1, im_q1, re_q2, im_q2, re_r, im_r, re_r1r2, im_r1r2, residual
  where residual = |r - r1 r2| / (1 + |r|). The grid has symbol.scan.n_radius moduli log-spaced
  in [1e-4, symbol.rmax] and symbol.scan.n_angle angles in [-pi/2, pi/2].";

const SPECTRUM_CSV: &str = "CSV columns (dispersion.csv):
  curve, l, lambda, b
  curve = `connected` for the single-ball curves b(lambda, l), l = 1..L_max, and `block` for the
  mean-zero degree-0 curve of the block model (reservoir boundary). Positive roots of b are
  positive eigenvalues.";

#[derive(Parser, Debug)]
#[command(name = "twophase", version, about = "Equilibria, boundary symbols and spectral stability of two-phase Stokes flow with phase transition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory (default: run.out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(allow_hyphen_values = true, trailing_var_arg = true, num_args = 0.., value_name = "--KEY VALUE", help = OVERRIDES_HELP)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radius and temperature of the equilibrium determined by the conserved quantities
    Equilibrium(Common),
    #[command(subcommand)]
    Symbols(SymbolsCmd),
    #[command(subcommand)]
    Lopatinskii(LopatinskiiCmd),
    #[command(subcommand)]
    Spectrum(SpectrumCmd),
    #[command(subcommand)]
    Entropy(EntropyCmd),
    /// Runs acceptance criteria 1 to 11
    Selftest(Common),
}

#[derive(Subcommand, Debug)]
enum SymbolsCmd {
    /// Flat interface symbols on a z grid and the empirical lower bound of the boundary symbol
    #[command(after_help = SYMBOLS_CSV)]
    Scan(Common),
}

#[derive(Subcommand, Debug)]
enum LopatinskiiCmd {
    /// Winding-number certificate that r2 has no zeros in the truncated right half plane
    Certify(Common),
}

#[derive(Subcommand, Debug)]
enum SpectrumCmd {
    /// Linearized spectrum at the equilibrium for geometry.m balls
    #[command(after_help = SPECTRUM_CSV)]
    Compute(Common),
}

#[derive(Subcommand, Debug)]
enum EntropyCmd {
    /// Whether the equilibrium is a local entropy maximum among equilibrium-shaped states
    Probe(Common),
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Domain(_) | Error::Infeasible(_) | Error::NoEquilibrium(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type Job = fn(&Context) -> Result<Outcome, Failure>;
type Parsed = (Option<PathBuf>, Option<PathBuf>, Vec<(String, String)>);

struct Outcome {
    code: i32,
    summary: String,
}

/// Splits `--key value` and `--key=value` pairs, pulling out `--config` and `--out`.
fn split_overrides(common: &Common) -> Result<Parsed, Failure> {
    let (mut config, mut out) = (common.config.clone(), common.out.clone());
    let mut pairs = Vec::new();
    let mut it = common.overrides.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(Failure { code: 1, message: format!("unexpected argument {arg:?}; overrides take the form --key value") });
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Failure { code: 1, message: format!("missing value for --{key}") })?;
                (key.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config = Some(value.into()),
            "out" => out = Some(value.into()),
            _ => pairs.push((key, value)),
        }
    }
    Ok((config, out, pairs))
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

impl Context {
    fn new(common: &Common) -> Result<Self, Failure> {
        let (config, out, pairs) = split_overrides(common)?;
        let text = match &config {
            Some(p) => Some(fs::read_to_string(p).map_err(|e| Failure { code: 1, message: format!("{}: {e}", p.display()) })?),
            None => None,
        };
        let cfg = RunConfig::load(text.as_deref(), &pairs)?;
        let out = out.unwrap_or_else(|| cfg.run.out_dir.clone());
        Ok(Context { cfg, out })
    }

    fn write_json(&self, command: &str, result: Value) -> Result<PathBuf, Failure> {
        let doc = json!({
            "schema": SCHEMA,
            "command": command,
            "config": serde_json::to_value(self.cfg.resolved()).map_err(Error::from)?,
            "result": result,
            "metadata": {
                "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                "version": env!("CARGO_PKG_VERSION"),
            },
        });
        let path = self.path(&format!("{}.json", command.replace(' ', "_")))?;
        fs::write(&path, serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n")?;
        Ok(path)
    }

    fn path(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    Ok(serde_json::to_value(v).map_err(Error::from)?)
}

fn equilibrium(ctx: &Context) -> Result<Outcome, Failure> {
    let mat = ctx.cfg.material()?;
    let eq = solve_equilibrium(&ctx.cfg.conserved(), &mat, ctx.cfg.run.gap_fraction)?;
    let result = json!({
        "R": eq.radius,
        "theta_star": eq.theta_star,
        "manifold_dim": eq.manifold_dim,
        "feasible": eq.feasible,
        "centers": eq.config.as_ref().map(|c| c.centers.clone()),
    });
    let path = ctx.write_json("equilibrium", result)?;
    Ok(Outcome {
        code: 0,
        summary: format!("equilibrium: R = {:.12}, theta_* = {:.12}, manifold dim {}, feasible {} -> {}", eq.radius, eq.theta_star, eq.manifold_dim, eq.feasible, path.display()),
    })
}

fn complex_cols(row: &mut Vec<String>, z: C) {
    row.push(format!("{:e}", z.re));
    row.push(format!("{:e}", z.im));
}

fn symbols_scan(ctx: &Context) -> Result<Outcome, Failure> {
    let cfg = &ctx.cfg;
    let p = cfg.flat_params()?;
    let variant = cfg.variant()?;
    let scan = &cfg.symbol.scan;
    let radii = log_grid(1e-4, cfg.symbol.rmax, scan.n_radius.max(2));
    let n_angle = scan.n_angle.max(2);
    let angles: Vec<f64> = (0..n_angle).map(|k| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / (n_angle - 1) as f64).collect();
    let csv_path = ctx.path("symbols.csv")?;
    let mut w = csv::Writer::from_path(&csv_path).map_err(Error::from)?;
    let header = [
        "re_z", "im_z", "re_omega1", "im_omega1", "re_omega2", "im_omega2", "re_psi", "im_psi", "re_ell", "im_ell", "re_p1", "im_p1", "re_p2", "im_p2", "re_q1", "im_q1",
        "re_q2", "im_q2", "re_r", "im_r", "re_r1r2", "im_r1r2", "residual",
    ];
    w.write_record(header).map_err(Error::from)?;
    let mut worst = 0.0f64;
    for &r in &radii {
        for &a in &angles {
            let z = C::from_polar(r, a);
            let sp = symbol_point(z, &p)?;
            let (psi, ell) = psi_and_ell(z, &p)?;
            let b = symbols(variant, z, &p)?;
            let res = b.factorization_residual();
            worst = worst.max(res);
            let mut row = Vec::with_capacity(header.len());
            for v in [z, sp.omega1, sp.omega2, psi, ell, b.p1, b.p2, b.q1, b.q2, b.r, b.r1 * b.r2] {
                complex_cols(&mut row, v);
            }
            row.push(format!("{res:e}"));
            w.write_record(&row).map_err(Error::from)?;
        }
    }
    w.flush()?;
    let m_fn = cfg.curvature_symbol();
    let b0_norm = cfg.symbol.b0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sp = SymbolParams { flat: p, sigma: cfg.material.sigma, c0: cfg.symbol.c0, b0_norm, m_fn: &m_fn };
    let bound = lower_bound_scan(&sp, scan)?;
    let threshold = sp.threshold(cfg.symbol.ell_bound);
    let result = json!({
        "variant": cfg.symbol.variant,
        "flat_params": to_value(&p)?,
        "rows": radii.len() * angles.len(),
        "max_factorization_residual": worst,
        "lower_bound_scan": to_value(&bound)?,
        "threshold": threshold,
        "csv": csv_path.file_name().map(|s| s.to_string_lossy().into_owned()),
    });
    let path = ctx.write_json("symbols scan", result)?;
    Ok(Outcome {
        code: 0,
        summary: format!(
            "symbols scan: {} points, max factorization residual {worst:.2e}, lower bound {:.4e}, threshold {threshold:.4e} -> {}",
            radii.len() * angles.len(),
            bound.c_hat,
            path.display()
        ),
    })
}

fn lopatinskii_certify(ctx: &Context) -> Result<Outcome, Failure> {
    let cfg = &ctx.cfg;
    let p = cfg.flat_params()?;
    let region = cfg.region();
    let cert = certify_zero_free(cfg.variant()?, &region, &p, &cfg.symbol.winding)?;
    let (code, verdict) = match &cert.verdict {
        Verdict::ZeroFree => (0, "zero_free".to_string()),
        Verdict::ZerosDetected { count } => (2, format!("zeros_detected ({count})")),
        Verdict::Inconclusive { reason } => (3, format!("inconclusive ({reason})")),
    };
    let result = json!({
        "variant": cfg.symbol.variant,
        "parameters": to_value(&p)?,
        "region": to_value(&region)?,
        "function": cert.function,
        "winding": cert.winding,
        "winding_real": cert.winding_real,
        "min_modulus": cert.min_modulus,
        "min_modulus_at": to_value(&cert.min_modulus_at)?,
        "contour_points": cert.points.len(),
        "max_depth": cert.max_depth,
        "max_arg_step": cert.max_arg_step,
        "verdict": to_value(&cert.verdict)?,
    });
    let path = ctx.write_json("lopatinskii certify", result)?;
    Ok(Outcome {
        code,
        summary: format!("lopatinskii certify: {} Rmax = {:e}: winding {}, min |r2| {:.3e}, {verdict} -> {}", cfg.symbol.variant, region.rmax, cert.winding, cert.min_modulus, path.display()),
    })
}

fn spectrum_compute(ctx: &Context) -> Result<Outcome, Failure> {
    let cfg = &ctx.cfg;
    let geom = cfg.radial_geometry()?;
    let par = cfg.linearization()?;
    let opts = cfg.spectrum_options();
    let m = cfg.geometry.m;
    let spectra = mode_spectra(cfg.geometry.l_max, &geom, &par, &opts)?;
    let kernel = kernel_analysis(&geom, &par, m, &opts)?;
    let single_unstable: usize = spectra.iter().map(|s| s.unstable(opts.zero_tol).len() * s.harmonics).sum();
    let block = if m > 1 { Some(multi_ball_block_spectrum(m, &geom, &par, &cfg.dispersion_options())?) } else { None };
    let positive_count = m * single_unstable + block.as_ref().map_or(0, |b| b.positive_eigenvalue_count);
    let energy_max = spectra.iter().map(|s| s.max_residual()).fold(0.0, f64::max);
    let grid_change = spectra.iter().map(|s| s.grid_change).fold(0.0, f64::max);
    let unconverged: usize = spectra.iter().map(|s| s.unconverged.len()).sum();
    let grid_independent = unconverged == 0 && grid_change <= opts.persist_tol;
    let gates_ok = grid_independent && energy_max <= cfg.run.energy_tol && !kernel.inconclusive;

    let csv_path = ctx.path("dispersion.csv")?;
    let mut w = csv::Writer::from_path(&csv_path).map_err(Error::from)?;
    w.write_record(["curve", "l", "lambda", "b"]).map_err(Error::from)?;
    let grid = log_grid(cfg.run.curve_lambda_min, cfg.run.curve_lambda_max, cfg.run.curve_samples);
    for l in 1..=cfg.geometry.l_max {
        for &lam in &grid {
            let b = reduced_dispersion(lam, l, &geom, &par)?;
            w.write_record(["connected".to_string(), l.to_string(), format!("{lam:e}"), format!("{b:e}")]).map_err(Error::from)?;
        }
    }
    let reservoir = geom.with_outer(OuterBoundary::Reservoir);
    for &lam in &grid {
        let b = reduced_dispersion(lam, 0, &reservoir, &par)?;
        w.write_record(["block".to_string(), "0".to_string(), format!("{lam:e}"), format!("{b:e}")]).map_err(Error::from)?;
    }
    w.flush()?;

    let per_l: Vec<Value> = spectra
        .iter()
        .map(|s| {
            json!({
                "l": s.l,
                "harmonics": s.harmonics,
                "eigenvalues": s.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "residuals": s.residuals,
                "grid_change": s.grid_change,
                "unconverged": s.unconverged.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "kernel_dim": s.kernel_dim,
                "semisimple": s.semisimple,
            })
        })
        .collect();
    let expected = if m == 1 { 0 } else { m - 1 };
    let result = json!({
        "m": m,
        "per_l": per_l,
        "kernel_dim": kernel.dim,
        "kernel_expected": kernel.expected,
        "semisimple": kernel.semisimple,
        "positive_count": positive_count,
        "expected_positive_count": expected,
        "block_model": block.as_ref().map(|b| json!({"crossings": to_value(&b.crossings).ok(), "curve_at_zero": b.curve_at_zero, "positive_eigenvalue_count": b.positive_eigenvalue_count})),
        "gates": {
            "grid_independent": grid_independent,
            "max_grid_change": grid_change,
            "energy_residual_max": energy_max,
            "kernel_conclusive": !kernel.inconclusive,
        },
        "csv": csv_path.file_name().map(|s| s.to_string_lossy().into_owned()),
    });
    let path = ctx.write_json("spectrum compute", result)?;
    let code = if positive_count != expected {
        2
    } else if !gates_ok {
        3
    } else {
        0
    };
    Ok(Outcome {
        code,
        summary: format!(
            "spectrum compute: n = {}, m = {m}: {positive_count} positive eigenvalues (expected {expected}), kernel dim {}, semisimple {}, grid change {grid_change:.1e}, energy residual {energy_max:.1e} -> {}",
            geom.n,
            kernel.dim,
            kernel.semisimple,
            path.display()
        ),
    })
}

fn entropy_probe(ctx: &Context) -> Result<Outcome, Failure> {
    let cfg = &ctx.cfg;
    let mat = cfg.material()?;
    let q = cfg.conserved();
    let eq = solve_equilibrium(&q, &mat, cfg.run.gap_fraction)?;
    let config = eq.config.ok_or_else(|| Failure::from(Error::Infeasible(format!("{} balls of radius {} do not fit with the configured gap", q.m, eq.radius))))?;
    let report = entropy_criticality_probe(&config, &q, &mat, &cfg.probe_options())?;
    let result = json!({
        "R": eq.radius,
        "theta_star": eq.theta_star,
        "m": q.m,
        "probe": to_value(&report)?,
    });
    let path = ctx.write_json("entropy probe", result)?;
    let code = if q.m == 1 && !report.is_local_max { 2 } else { 0 };
    Ok(Outcome {
        code,
        summary: format!("entropy probe: m = {}, local maximum {}, worst change {:.3e} -> {}", q.m, report.is_local_max, report.worst_change, path.display()),
    })
}

fn selftest(ctx: &Context) -> Result<Outcome, Failure> {
    let suite = run_suite(&ctx.cfg);
    for c in &suite.criteria {
        println!("{}", c.line());
    }
    let path = ctx.write_json("selftest", to_value(&suite)?)?;
    let passed = suite.criteria.iter().filter(|c| c.passed()).count();
    let known: usize = suite.criteria.iter().map(|c| c.failures().iter().filter(|f| f.known.is_some()).count()).sum();
    let code = if suite.any_error() {
        3
    } else if suite.only_known_failures() {
        0
    } else {
        2
    };
    Ok(Outcome { code, summary: format!("selftest: {passed}/11 criteria pass, {known} known discrepancies -> {}", path.display()) })
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (common, job): (&Common, Job) = match &cli.command {
        Command::Equilibrium(c) => (c, equilibrium),
        Command::Symbols(SymbolsCmd::Scan(c)) => (c, symbols_scan),
        Command::Lopatinskii(LopatinskiiCmd::Certify(c)) => (c, lopatinskii_certify),
        Command::Spectrum(SpectrumCmd::Compute(c)) => (c, spectrum_compute),
        Command::Entropy(EntropyCmd::Probe(c)) => (c, entropy_probe),
        Command::Selftest(c) => (c, selftest),
    };
    match Context::new(common).and_then(|ctx| job(&ctx)) {
        Ok(o) => {
            println!("{}", o.summary);
            o.code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(args: &[&str]) -> Common {
        Common { config: None, out: None, overrides: args.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn overrides_accept_both_forms() {
        let (config, out, pairs) = split_overrides(&common(&["--m", "2", "--geometry.N=32", "--config", "a.toml", "--rmax", "-1"])).ok().unwrap();
        assert_eq!(config, Some(PathBuf::from("a.toml")));
        assert_eq!(out, None);
        let want = [("m", "2"), ("geometry.N", "32"), ("rmax", "-1")].map(|(k, v)| (k.to_string(), v.to_string()));
        assert_eq!(pairs, want);
    }

    #[test]
    fn malformed_overrides_are_usage_errors() {
        assert_eq!(split_overrides(&common(&["--m"])).err().unwrap().code, 1);
        assert_eq!(split_overrides(&common(&["m", "2"])).err().unwrap().code, 1);
    }

    #[test]
    fn numerical_errors_map_to_three() {
        assert_eq!(Failure::from(Error::Convergence("x".into())).code, 3);
        assert_eq!(Failure::from(Error::Resolution("x".into())).code, 3);
        assert_eq!(Failure::from(Error::Config("x".into())).code, 1);
    }

    #[test]
    fn clap_leaves_unknown_flags_to_the_config() {
        let cli = Cli::try_parse_from(["twophase", "spectrum", "compute", "--m", "2", "--out", "x"]).unwrap();
        let Command::Spectrum(SpectrumCmd::Compute(c)) = cli.command else { panic!() };
        assert_eq!(c.overrides, ["--m", "2", "--out", "x"]);
    }
}
