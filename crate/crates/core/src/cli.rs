//! Command-line interface.
//!
//! Exit codes: 0 success (for `inverse`: converged), 1 hard failure,
//! 2 usage error, 3 `inverse` finished without convergence (flat objective
//! or evaluation budget exhausted; the result is still written).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::basis::{BasisContext, QuadratureOrders};
use crate::config::RunConfig;
use crate::exec::{set_thread_count, Execution};
use crate::forward::ForwardModel;
use crate::inverse::{FitProblem, FitStatus, ObservedCoeffs};
use crate::numerics::find_bessel_zeros;
use crate::selftest::{run_all, SelftestOptions};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "zonalgrav", version, about = "Wind-induced gravity harmonics of gas giants")]
pub struct Cli {
    /// Worker threads for the data-parallel loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Execution policy of the inner loops.
    #[arg(long, global = true, value_enum, default_value_t = ExecArg::Parallel)]
    pub exec: ExecArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    Sequential,
    Parallel,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Sequential => Execution::Sequential,
            ExecArg::Parallel => Execution::Parallel,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute δJ_n for n = 2..N.
    Forward(ForwardArgs),
    /// Fit decay parameters to observed harmonics.
    Inverse(InverseArgs),
    /// Tabulate λ_{n,m}, γ_{n,m} and B_{m,n}(R) as CSV.
    Basis(BasisArgs),
    /// Run the built-in invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Coefficient JSON (default: config output.coeffs, else stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-term contribution CSV (default: config output.contributions).
    #[arg(long)]
    pub contributions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV `n,J[,sigma]`.
    #[arg(long)]
    pub observed: PathBuf,
    /// Fit result JSON (default: config output.fit, else stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub mmax: u32,
    /// Planet radius; 1 gives normalized units.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Shift every tabulated zero by this amount (fault injection).
    #[arg(long, hide = true)]
    pub perturb_zeros: Option<f64>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    set_thread_count(cli.threads);
    let exec = Execution::from(cli.exec);
    let outcome = match cli.command {
        Command::Forward(a) => cmd_forward(&a, exec),
        Command::Inverse(a) => cmd_inverse(&a, exec),
        Command::Basis(a) => cmd_basis(&a),
        Command::Selftest(a) => cmd_selftest(&a, exec),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            EXIT_FAILURE
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => crate::io::write_text(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn cmd_forward(args: &ForwardArgs, exec: Execution) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let result = ForwardModel::from_config(&cfg, None, exec)?.run()?;
    for w in result.warnings() {
        log::warn!("{w}");
    }
    let out = args.out.clone().or_else(|| cfg.output.coeffs.as_ref().map(|p| cfg.resolve(p)));
    emit(out.as_deref(), &crate::io::to_json_string(&result.coeffs)?)?;
    let table = args.contributions.clone().or_else(|| cfg.output.contributions.as_ref().map(|p| cfg.resolve(p)));
    if let Some(p) = table {
        crate::io::write_text(&p, &result.contributions_csv())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_inverse(args: &InverseArgs, exec: Execution) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let wind = cfg.wind().ok_or_else(|| Error::Config("inverse needs a wind source".into()))?;
    let bounds = wind.decay.bounds.clone().ok_or_else(|| Error::Config("inverse needs decay.bounds".into()))?;
    let observed = ObservedCoeffs::load(&args.observed)?;
    let degree = cfg.truncation.degree.unwrap_or(observed.extent());
    let forward = ForwardModel::from_config(&cfg, Some(degree), exec)?;
    let problem = FitProblem { forward: &forward, observed: &observed, family: wind.decay.family, bounds: &bounds, weight_scale: 1.0 };
    let result = problem.fit(&cfg.fit, exec)?;
    if let Some(note) = &result.note {
        log::info!("{note}");
    }
    let out = args.out.clone().or_else(|| cfg.output.fit.as_ref().map(|p| cfg.resolve(p)));
    emit(out.as_deref(), &crate::io::to_json_string(&result)?)?;
    Ok(match result.status {
        FitStatus::Converged => EXIT_OK,
        FitStatus::Flat => {
            log::warn!("objective is flat over the initial simplex; returning the start point");
            EXIT_NOT_CONVERGED
        }
        FitStatus::MaxEvaluations => {
            log::warn!("evaluation budget exhausted after {} evaluations; best-so-far written", result.evaluations);
            EXIT_NOT_CONVERGED
        }
    })
}

pub fn basis_csv(n: u32, m_max: u32, radius: f64) -> Result<String> {
    if m_max == 0 {
        return Err(Error::Parameter("mmax must be >= 1".into()));
    }
    let zeros = find_bessel_zeros(n, m_max)?;
    let ctx = BasisContext::with_zeros(radius, zeros, QuadratureOrders { radial: 2, angular: 2 })?;
    let mut out = String::from("n,m,lambda,gamma,B_R\n");
    for m in 1..=m_max {
        let lambda = ctx.zeros().lambda(n, m);
        let _ = writeln!(out, "{n},{m},{lambda:.17e},{:.17e},{:.17e}", ctx.gamma(m, n)?, ctx.radial_basis_eval(m, n, radius)?);
    }
    Ok(out)
}

pub fn cmd_basis(args: &BasisArgs) -> Result<i32> {
    if !(args.radius > 0.0 && args.radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {}", args.radius)));
    }
    emit(args.out.as_deref(), &basis_csv(args.n, args.mmax, args.radius)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_selftest(args: &SelftestArgs, exec: Execution) -> Result<i32> {
    let (text, code) = selftest_report(args, exec)?;
    emit(None, &text)?;
    Ok(code)
}

/// Report text and exit code of `selftest`.
pub fn selftest_report(args: &SelftestArgs, exec: Execution) -> Result<(String, i32)> {
    let reports = run_all(SelftestOptions { zero_perturbation: args.perturb_zeros, exec })?;
    let mut text = String::new();
    for r in &reports {
        let _ = write!(text, "{r}");
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    let _ = writeln!(text, "{passed}/{} suites passed", reports.len());
    Ok((text, if passed == reports.len() { EXIT_OK } else { EXIT_FAILURE }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn basis_table_examples() {
        let rows = |n| -> Vec<Vec<f64>> {
            basis_csv(n, 5, 1.0)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
                .collect()
        };
        for (m, row) in rows(1).iter().enumerate() {
            assert!((row[2] - (m + 1) as f64 * PI).abs() < 1e-12);
        }
        for (m, row) in rows(0).iter().enumerate() {
            assert!((row[2] - (m as f64 + 0.5) * PI).abs() < 1e-12);
        }
        assert!((rows(2)[0][2] - 4.4934094579).abs() < 1e-9);
        assert!((rows(1)[0][4] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parses_command_lines() {
        let cli = Cli::try_parse_from(["zonalgrav", "--threads", "2", "basis", "--n", "2", "--mmax", "4"]).unwrap();
        assert_eq!(cli.threads, Some(2));
        assert!(matches!(cli.command, Command::Basis(BasisArgs { n: 2, mmax: 4, .. })));
        assert!(Cli::try_parse_from(["zonalgrav", "inverse", "--config", "c.json"]).is_err());
        let hidden = Cli::try_parse_from(["zonalgrav", "selftest", "--perturb-zeros", "1e-3"]).unwrap();
        assert!(matches!(hidden.command, Command::Selftest(SelftestArgs { perturb_zeros: Some(_) })));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        for args in [&["zonalgrav", "forward"][..], &["zonalgrav", "basis", "--n", "x", "--mmax", "3"]] {
            assert_eq!(Cli::try_parse_from(args).unwrap_err().exit_code(), 2);
        }
    }

    fn fixture(name: &str) -> String {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
    }

    fn invoke(args: &[&str]) -> i32 {
        run(Cli::try_parse_from(std::iter::once("zonalgrav").chain(args.iter().copied())).unwrap())
    }

    fn read_json(path: &Path) -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn zero_wind_gives_zero_harmonics() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("dj.json");
        assert_eq!(invoke(&["forward", "--config", &fixture("zero_wind.json"), "--out", out.to_str().unwrap()]), EXIT_OK);
        let dj = read_json(&out)["dJ"].as_array().unwrap().clone();
        assert!(!dj.is_empty());
        assert!(dj.iter().all(|x| x.as_f64() == Some(0.0)));
    }

    #[test]
    fn manufactured_mode_from_config() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("dj.json");
        let args = ["--exec", "sequential", "forward", "--config", &fixture("manufactured.json"), "--out", out.to_str().unwrap()];
        assert_eq!(invoke(&args), EXIT_OK);
        let v = read_json(&out);
        assert_eq!(v["model"], "TGWE");
        assert_eq!(v["n"][0], 2);
        assert!((v["dJ"][0].as_f64().unwrap() - (5.0 / (2.0 * PI)).sqrt()).abs() < 1e-6);
    }

    /// Runs the Jupiter forward fixture and returns `(n, δJ_n)` plus the contribution table.
    fn jupiter_forward(dir: &Path) -> (Vec<(u64, f64)>, String) {
        let out = dir.join("dj.json");
        let table = dir.join("terms.csv");
        let args = [
            "forward",
            "--config",
            &fixture("jupiter_forward.json"),
            "--out",
            out.to_str().unwrap(),
            "--contributions",
            table.to_str().unwrap(),
        ];
        assert_eq!(invoke(&args), EXIT_OK);
        let v = read_json(&out);
        let pairs = v["n"]
            .as_array()
            .unwrap()
            .iter()
            .zip(v["dJ"].as_array().unwrap())
            .map(|(n, j)| (n.as_u64().unwrap(), j.as_f64().unwrap()))
            .collect();
        (pairs, std::fs::read_to_string(&table).unwrap())
    }

    #[test]
    fn contributions_sum_to_the_coefficients() {
        let dir = tempfile::tempdir().unwrap();
        let (pairs, table) = jupiter_forward(dir.path());
        let mut reader = csv::Reader::from_reader(table.as_bytes());
        assert_eq!(reader.headers().unwrap(), vec!["n", "m", "term", "partial_sum"]);
        let mut last = std::collections::BTreeMap::new();
        for row in reader.records() {
            let row = row.unwrap();
            last.insert(row[0].parse::<u64>().unwrap(), row[3].parse::<f64>().unwrap());
        }
        for (n, dj) in pairs {
            assert!((last[&n] - dj).abs() <= 1e-12 * dj.abs(), "n={n}: {} vs {dj}", last[&n]);
        }
    }

    fn observed_csv(dir: &Path, with_sigma: bool) -> PathBuf {
        let (pairs, _) = jupiter_forward(dir);
        let mut text = String::from(if with_sigma { "n,J,sigma\n" } else { "n,J\n" });
        for (n, dj) in pairs {
            if with_sigma {
                let _ = writeln!(text, "{n},{dj:e},{:e}", 1e-3 * dj.abs() + 1e-12);
            } else {
                let _ = writeln!(text, "{n},{dj:e}");
            }
        }
        let path = dir.join("observed.csv");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn inverse_recovers_the_decay_depth() {
        let dir = tempfile::tempdir().unwrap();
        let observed = observed_csv(dir.path(), false);
        let out = dir.path().join("fit.json");
        let args = ["inverse", "--config", &fixture("jupiter_forward.json"), "--observed", observed.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(invoke(&args), EXIT_OK);
        let v = read_json(&out);
        assert_eq!(v["weights"], "unit");
        assert!(v["note"].as_str().unwrap().contains("sigma"));
        assert!((v["p_best"][0].as_f64().unwrap() - 3.49555e6).abs() / 3.49555e6 < 0.02);
        let history: Vec<f64> = v["best_history"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn inverse_uses_sigma_when_given() {
        let dir = tempfile::tempdir().unwrap();
        let observed = observed_csv(dir.path(), true);
        let out = dir.path().join("fit.json");
        let args = ["inverse", "--config", &fixture("jupiter_forward.json"), "--observed", observed.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(invoke(&args), EXIT_OK);
        let v = read_json(&out);
        assert_eq!(v["weights"], "sigma");
        assert!(v.get("note").map_or(true, |n| n.is_null()));
    }

    #[test]
    fn empty_bounds_are_a_hard_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = read_json(Path::new(&fixture("jupiter_forward.json")));
        cfg["source"]["wind"]["decay"]["bounds"] = serde_json::json!({"lower": [2.0e6], "upper": [1.0e6]});
        cfg["source"]["wind"]["profile"] = fixture("synthetic_jets.csv").into();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
        let observed = observed_csv(dir.path(), false);
        let out = dir.path().join("fit.json");
        let args = ["inverse", "--config", path.to_str().unwrap(), "--observed", observed.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(invoke(&args), EXIT_FAILURE);
        assert!(!out.exists());
    }

    #[test]
    fn selftest_exit_codes() {
        let (text, code) = selftest_report(&SelftestArgs { perturb_zeros: None }, Execution::Sequential).unwrap();
        assert_eq!(code, EXIT_OK);
        assert!(text.ends_with("5/5 suites passed\n"));
        let (text, code) = selftest_report(&SelftestArgs { perturb_zeros: Some(1e-6) }, Execution::Sequential).unwrap();
        assert_eq!(code, EXIT_FAILURE);
        assert!(text.contains("[FAIL] eigenfunction"));
    }
}
