use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use torsion_core::complex::MetrizedComplex;
use torsion_core::heat_kernel::{zeta_from_trace, IntervalSpec, ScalarBcPair};
use torsion_core::special_zeta::{zeta_dd_closed_at_0, zeta_dn_closed_at_0};
use torsion_core::torsion::calibrate;
use torsion_core::verify::{run_all, run_scenario, ConfigMode, Parameters, ScenarioConfig};
use torsion_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "torsion-bench",
    version,
    about = "Analytic torsion verification bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one registered identity and print its report rows as JSON.
    Verify {
        /// Identity id (E2.32, E2.35, E2.36, L2.2, L3.1, MS, P2.1, T0.2, T2.3, T2.4, T3.2).
        identity_id: String,
        /// Parameter as key=value (repeatable); values parse as JSON when possible.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        /// Tolerance on |lhs − rhs| (defaults to the identity's registered value).
        #[arg(long = "tol")]
        tolerance: Option<f64>,
        /// paper_closed_form, direct_spectral or both.
        #[arg(long, default_value = "direct_spectral")]
        mode: String,
    },
    /// Run a suite configuration and write the JSON report.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Torsion of an exact metrized complex given in the matrix text format.
    TorsionOfComplex {
        #[arg(long)]
        file: PathBuf,
    },
    /// ζ(0) and ζ'(0) of the unit interval, closed form and from the heat trace.
    Zeta {
        #[arg(long, value_enum)]
        bc: ZetaBc,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ZetaBc {
    Dd,
    Dn,
}

fn parse_params(raw: &[String]) -> Result<Parameters> {
    let mut map = Parameters::new();
    for item in raw {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            Error::Usage(format!("parameter '{item}' is not of the form key=value"))
        })?;
        let value =
            serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable output")
    );
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify {
            identity_id,
            params,
            tolerance,
            mode,
        } => {
            let config = ScenarioConfig {
                identity_id,
                parameters: parse_params(&params)?,
                tolerance,
                mode: ConfigMode::parse(&mode)?,
            };
            config.validate()?;
            let cal = calibrate()?;
            let rows = run_scenario(&config, &cal)?;
            print_json(&rows);
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
        Command::Report { config, out } => {
            let report = run_all(&config)?;
            std::fs::write(&out, report.to_json())
                .map_err(|e| Error::Usage(format!("cannot write {}: {e}", out.display())))?;
            for r in &report.rows {
                eprintln!(
                    "{} {:<5} {:<17} residual {:.3e} (tol {:.0e}) {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.identity_id,
                    format!("{:?}", r.mode),
                    r.residual,
                    r.tolerance,
                    Value::Object(r.parameters.clone())
                );
            }
            Ok(report.exit_code())
        }
        Command::TorsionOfComplex { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Error::Usage(format!("cannot read {}: {e}", file.display())))?;
            let complex = MetrizedComplex::parse(&text)?;
            let diagnostics = complex.validate();
            let torsion = complex.torsion_acyclic()?;
            print_json(&serde_json::json!({
                "torsion": torsion.value,
                "diagnostics": diagnostics,
            }));
            Ok(0)
        }
        Command::Zeta { bc } => {
            let (bc, closed) = match bc {
                ZetaBc::Dd => (ScalarBcPair::DD, zeta_dd_closed_at_0()),
                ZetaBc::Dn => (ScalarBcPair::DN, zeta_dn_closed_at_0()),
            };
            let from_trace = zeta_from_trace(IntervalSpec::unit(), bc)?;
            print_json(&serde_json::json!({
                "bc": bc.label(),
                "closed_form": closed,
                "from_heat_trace": from_trace,
            }));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
