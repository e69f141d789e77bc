use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qdeconv::channel::TransferMatrix;
use qdeconv::deconvolution::{correctable_family, evaluate, guess_sweep, verify_family, GuessPair, FAMILY_DELTA_TOL};
use qdeconv::io::{emit_report, parse_channel_spec_with_tol, parse_family, parse_operator, FamilyDoc, Format};
use qdeconv::linalg::{is_density_matrix, DEFAULT_KERNEL_TOL, DEFAULT_TOL};
use qdeconv::quorum::{deconvolved_estimate, quorum_basis, ShotEstimate};
use qdeconv::random::DEFAULT_SEED;
use qdeconv::scenarios::{run_scenario, SCENARIOS};
use qdeconv::Error;

/// Noise deconvolution with a guessed channel.
#[derive(Parser)]
#[command(name = "qdeconv", version, about)]
struct Cli {
    /// Tolerance for CPTP and unitarity checks on inputs.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Relative singular-value threshold for kernels.
    #[arg(long, global = true, default_value_t = DEFAULT_KERNEL_TOL)]
    kernel_tol: f64,
    /// Seed for random states and shot sampling.
    #[arg(long, global = true, env = "QDECONV_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Correctable observable family of a channel and a guess (`-` reads stdin).
    Deconvolve { channel: PathBuf, guess: PathBuf },
    /// Maximum deconvolution error of a family over random states.
    Verify {
        family: PathBuf,
        channel: PathBuf,
        guess: PathBuf,
        #[arg(long, default_value_t = 100)]
        states: usize,
    },
    /// Shot-based deconvolved estimate of one observable on one state.
    Estimate {
        channel: PathBuf,
        guess: PathBuf,
        #[arg(long)]
        observable: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Shots per quorum element; 0 uses exact expectation values.
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        /// Dimension of the Gell-Mann quorum; must match the channel.
        #[arg(long)]
        quorum_dim: Option<usize>,
    },
    /// Named example scenarios.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Rank candidate guesses by the size of their correctable family.
    Sweep {
        channel: PathBuf,
        #[arg(required = true)]
        candidates: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    Run {
        name: String,
        /// Parameter override, `key=value`; repeatable.
        #[arg(long = "set", value_parser = parse_override)]
        overrides: Vec<(String, String)>,
    },
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Failure category mapped onto the exit status.
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::VerificationFailed { .. } => Failure::Check(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

struct Inputs {
    stdin_used: bool,
}

impl Inputs {
    fn read(&mut self, path: &PathBuf) -> Result<Vec<u8>, Failure> {
        let mut buf = Vec::new();
        if path.as_os_str() == "-" {
            if self.stdin_used {
                return Err(Failure::Usage("only one input may be read from stdin".into()));
            }
            self.stdin_used = true;
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        } else {
            buf = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        Ok(buf)
    }

    fn channel(&mut self, path: &PathBuf, tol: f64) -> Result<TransferMatrix, Failure> {
        let text = self.read(path)?;
        let spec =
            parse_channel_spec_with_tol(&text, tol).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(spec.to_channel(tol)?.transfer())
    }
}

fn emit<T: Serialize>(value: &T, format: Format, table: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("serializable") + "\n",
        Format::Table => table(),
    }
}

#[derive(Serialize)]
struct VerifyDoc {
    schema_version: u32,
    n_params: usize,
    states: usize,
    seed: u64,
    max_delta_nd: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct EstimateDoc {
    schema_version: u32,
    quorum_dim: usize,
    ideal: f64,
    experimental: f64,
    deconvolved: f64,
    estimate: ShotEstimate,
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    candidate: String,
    n_params: i64,
}

fn run(cli: Cli) -> Result<(String, bool), Failure> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut inputs = Inputs { stdin_used: false };
    match cli.command {
        Command::Deconvolve { channel, guess } => {
            let phi = inputs.channel(&channel, cli.tol)?;
            let phi_g = inputs.channel(&guess, cli.tol)?;
            let fam = correctable_family(&GuessPair::new(phi, phi_g)?, cli.kernel_tol)?;
            let doc = FamilyDoc::new(&fam);
            let out = emit(&doc, cli.format, || {
                let mut s = format!("dim       {}\nn_params  {}\n", doc.dim, doc.n_params);
                for (k, b) in fam.basis().iter().enumerate() {
                    s.push_str(&format!("\nbasis[{k}]\n"));
                    for i in 0..b.nrows() {
                        let row: Vec<String> = (0..b.ncols())
                            .map(|j| format!("{:>8.4}{:+.4}i", b[(i, j)].re, b[(i, j)].im))
                            .collect();
                        s.push_str(&format!("  {}\n", row.join("  ")));
                    }
                }
                s
            });
            Ok((out, true))
        }
        Command::Verify {
            family,
            channel,
            guess,
            states,
        } => {
            let text = inputs.read(&family)?;
            let fam = parse_family(&text).map_err(|e| Failure::Usage(format!("{}: {e}", family.display())))?;
            let phi = inputs.channel(&channel, cli.tol)?;
            let phi_g = inputs.channel(&guess, cli.tol)?;
            let gp = GuessPair::new(phi, phi_g)?;
            if gp.dim() != fam.dim() {
                return Err(Error::DimensionMismatch {
                    expected: gp.dim(),
                    found: fam.dim(),
                }
                .into());
            }
            let max_delta_nd = verify_family(&gp, &fam, states, seed);
            let doc = VerifyDoc {
                schema_version: 1,
                n_params: fam.n_params(),
                states,
                seed,
                max_delta_nd,
                tolerance: FAMILY_DELTA_TOL,
                pass: max_delta_nd <= FAMILY_DELTA_TOL,
            };
            let out = emit(&doc, cli.format, || {
                format!(
                    "n_params      {}\nstates        {}\nseed          {}\nmax_delta_nd  {:.3e}\n{}  max_delta_nd <= {:.1e}\n",
                    doc.n_params,
                    doc.states,
                    doc.seed,
                    doc.max_delta_nd,
                    if doc.pass { "PASS" } else { "FAIL" },
                    doc.tolerance
                )
            });
            Ok((out, doc.pass))
        }
        Command::Estimate {
            channel,
            guess,
            observable,
            state,
            shots,
            quorum_dim,
        } => {
            let phi = inputs.channel(&channel, cli.tol)?;
            let phi_g = inputs.channel(&guess, cli.tol)?;
            let gp = GuessPair::new(phi, phi_g)?;
            let a = parse_operator(&inputs.read(&observable)?)?;
            let rho = parse_operator(&inputs.read(&state)?)?;
            if !is_density_matrix(&rho, cli.tol.max(1e-9)) {
                return Err(Failure::Usage(format!("{}: not a density matrix", state.display())));
            }
            let qd = quorum_dim.unwrap_or(gp.dim());
            if qd != gp.dim() {
                return Err(Failure::Usage(format!(
                    "--quorum-dim {qd} does not match channel dimension {}",
                    gp.dim()
                )));
            }
            let qb = quorum_basis(qd)?;
            let report = evaluate(&gp, &a, &rho)?;
            let estimate = deconvolved_estimate(&gp, &a, &rho, &qb, shots, seed)?;
            let doc = EstimateDoc {
                schema_version: 1,
                quorum_dim: qd,
                ideal: report.ideal,
                experimental: report.experimental,
                deconvolved: report.deconvolved,
                estimate,
            };
            let out = emit(&doc, cli.format, || {
                format!(
                    "ideal         {:.10}\nexperimental  {:.10}\ndeconvolved   {:.10}\nestimate      {:.10} +- {:.3e} ({} shots/element, seed {})\n",
                    doc.ideal,
                    doc.experimental,
                    doc.deconvolved,
                    doc.estimate.mean,
                    doc.estimate.std_error,
                    doc.estimate.shots,
                    doc.estimate.seed
                )
            });
            Ok((out, true))
        }
        Command::Examples { action } => match action {
            ExamplesAction::List => {
                let rows: Vec<BTreeMap<&str, &str>> = SCENARIOS
                    .iter()
                    .map(|(n, d)| BTreeMap::from([("name", *n), ("description", *d)]))
                    .collect();
                let out = emit(&rows, cli.format, || {
                    SCENARIOS.iter().map(|(n, d)| format!("{n:<24}{d}\n")).collect()
                });
                Ok((out, true))
            }
            ExamplesAction::Run { name, overrides } => {
                let overrides: BTreeMap<String, String> = overrides.into_iter().collect();
                let res = run_scenario(&name, &overrides, seed)?;
                Ok((emit_report(&res, cli.format), res.passed))
            }
        },
        Command::Sweep { channel, candidates } => {
            let phi = inputs.channel(&channel, cli.tol)?;
            let cands = candidates
                .iter()
                .map(|p| inputs.channel(p, cli.tol))
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<SweepRow> = guess_sweep(&phi, &cands, cli.kernel_tol)?
                .into_iter()
                .map(|e| SweepRow {
                    index: e.index,
                    candidate: candidates[e.index].display().to_string(),
                    n_params: e.n_params,
                })
                .collect();
            let out = emit(&rows, cli.format, || {
                rows.iter()
                    .map(|r| {
                        let n = if r.n_params < 0 {
                            "singular".to_string()
                        } else {
                            r.n_params.to_string()
                        };
                        format!("{:>3}  {:>8}  {}\n", r.index, n, r.candidate)
                    })
                    .collect()
            });
            Ok((out, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok((out, pass)) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Check(msg)) => {
            eprintln!("qdeconv: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("qdeconv: {msg}");
            ExitCode::from(2)
        }
    }
}
