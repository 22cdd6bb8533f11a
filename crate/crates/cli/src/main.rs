use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use switchgain::error::Error;
use switchgain::example::{pendulum, PendulumParams};
use switchgain::gain::{self, PNorm, Storage};
use switchgain::levelset;
use switchgain::realization;
use switchgain::stability::{self, TriState};
use switchgain::{io, SwitchingSystem, Vector};

/// Minimal realizations and L2-gain brackets for constrained switching
/// systems.
#[derive(Parser)]
#[command(name = "switchgain", version)]
struct Cli {
    /// Seed for sampled verification.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system file and report every violation.
    Validate {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce to a minimal realization.
    Minimize {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rank tolerance (default: relative to the largest singular value).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bound the constrained joint spectral radius.
    Stability {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower bound: the largest induced norm of D_π over paths of length K.
    Lower {
        input: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// 1, 2 or inf
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper bound by bisection on the horizon-K certificate.
    Upper {
        input: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = gain::DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize, check stability, then bound the gain from both sides.
    Bracket {
        input: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = gain::DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated max-of-quadratics storage and its unit level set.
    Storage {
        input: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        horizon: usize,
        /// Node name.
        #[arg(long)]
        node: String,
        /// Level-set CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Use the system as given instead of its minimal realization.
        #[arg(long)]
        raw: bool,
        /// Also write the storage matrices as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Maximizing disturbance along a fixed path.
    WorstCase {
        input: PathBuf,
        /// Comma-separated edge labels as written in the file.
        #[arg(long)]
        path: String,
        #[arg(long)]
        gamma: f64,
        /// Comma-separated initial state.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the delayed-control inverted pendulum system.
    ExamplePendulum {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = PendulumParams::default().mass)]
        mass: f64,
        #[arg(long, default_value_t = PendulumParams::default().length)]
        length: f64,
        #[arg(long, default_value_t = PendulumParams::default().gravity)]
        gravity: f64,
        /// Sample rate in Hz.
        #[arg(long, default_value_t = PendulumParams::default().sample_rate)]
        rate: f64,
        #[arg(long, default_value_t = PendulumParams::default().q_weight)]
        q: f64,
        #[arg(long, default_value_t = PendulumParams::default().r_weight)]
        r: f64,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Random samples for the dissipation check of the certificate.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

// 0 success, 1 invalid input, 2 infeasible or unstable, 3 inconclusive
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Unstable { .. } | Error::Infeasible | Error::NoUpperBound(_) | Error::NotDefinite(_) => 2,
        Error::Inconclusive(_) => 3,
        _ => 1,
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&FsPath>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("results serialize");
    if let Some(p) = out {
        std::fs::write(p, &text)?;
    }
    println!("{text}");
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                context: what.to_string(),
                message: format!("cannot parse {t:?}"),
            })
        })
        .collect()
}

fn check_certificate(
    sys: &SwitchingSystem,
    cert: &gain::HorizonCertificate,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> gain::DissipationReport {
    gain::verify_dissipation(sys, &Storage::Horizon(cert.clone()), gamma, samples, seed)
}

fn run(cli: Cli) -> Result<u8, Error> {
    let seed = cli.seed;
    match cli.command {
        Command::Validate { input, out } => {
            let sys = io::load_system(&input)?;
            let summary = json!({
                "valid": true,
                "nodes": sys.nodes(),
                "edges": sys.edges().len(),
                "input_dim": sys.input_dim(),
                "output_dim": sys.output_dim(),
                "minimal": realization::is_minimal(&sys, None),
            });
            emit(&summary, out.as_deref())?;
            Ok(0)
        }
        Command::Minimize {
            input,
            out,
            tol,
            report,
        } => {
            let sys = io::load_system(&input)?;
            let (min, rep) = realization::minimize(&sys, tol);
            io::save_system(&min, &out)?;
            if let Some(p) = report {
                std::fs::write(p, serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            }
            emit(&rep, None)?;
            Ok(0)
        }
        Command::Stability {
            input,
            horizon,
            tol,
            out,
        } => {
            let sys = io::load_system(&input)?;
            let (state, cert) = stability::check_internal_stability(&sys, horizon, tol)?;
            emit(&json!({ "status": state, "certificate": cert }), out.as_deref())?;
            Ok(match state {
                TriState::Stable => 0,
                TriState::Unstable => 2,
                TriState::Unknown => 3,
            })
        }
        Command::Lower { input, horizon, p, out } => {
            let sys = io::load_system(&input)?;
            let p: PNorm = p.parse()?;
            emit(&gain::lower_bound(&sys, horizon, p)?, out.as_deref())?;
            Ok(0)
        }
        Command::Upper {
            input,
            horizon,
            tol,
            check,
            out,
        } => {
            let sys = io::load_system(&input)?;
            let ub = gain::upper_bound_bisect(&sys, horizon, tol)?;
            let report = check_certificate(&sys, &ub.certificate, ub.gamma, check.samples, seed);
            emit(&json!({ "upper": ub, "verification": report }), out.as_deref())?;
            Ok(0)
        }
        Command::Bracket {
            input,
            horizon,
            tol,
            check,
            out,
        } => {
            let sys = io::load_system(&input)?;
            let br = gain::gain_bracket(&sys, horizon, tol)?;
            let (min, _) = realization::minimize(&sys, None);
            let report = check_certificate(&min, &br.certificate, br.upper, check.samples, seed);
            emit(&json!({ "bracket": br, "verification": report }), out.as_deref())?;
            Ok(0)
        }
        Command::Storage {
            input,
            gamma,
            horizon,
            node,
            out,
            resolution,
            raw,
            json: json_out,
        } => {
            let sys = io::load_system(&input)?;
            let sys = if raw { sys } else { realization::minimize(&sys, None).0 };
            let v = sys.node_index(&node)?;
            let st = gain::truncated_storage(&sys, gamma, horizon)?.pruned();
            let ls = levelset::emit_level_sets(&st, v, resolution)?;
            std::fs::write(&out, ls.to_csv()?)?;
            if let Some(p) = json_out {
                std::fs::write(p, serde_json::to_string_pretty(&st).expect("storage serializes"))?;
            }
            let summary = json!({
                "node": node,
                "dim": sys.dim(v),
                "gamma": gamma,
                "horizon": horizon,
                "quadratics": st.nodes[v].matrices.len(),
                "sections": ls.sections.len(),
                "csv": out,
            });
            emit(&summary, None)?;
            Ok(0)
        }
        Command::WorstCase {
            input,
            path,
            gamma,
            x0,
            out,
        } => {
            let sys = io::load_system(&input)?;
            let labels: Vec<u64> = parse_list(&path, "--path")?;
            let edges = labels
                .iter()
                .map(|&l| {
                    sys.edges()
                        .iter()
                        .position(|e| e.original_label == l)
                        .ok_or(Error::UnknownLabel(l as usize))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let pi = sys.path(edges)?;
            let x0 = Vector::from_vec(parse_list(&x0, "--x0")?);
            let run = gain::worst_case_disturbance(&sys, &pi, gamma, &x0)?;
            emit(&run, out.as_deref())?;
            Ok(0)
        }
        Command::ExamplePendulum {
            out,
            mass,
            length,
            gravity,
            rate,
            q,
            r,
        } => {
            let params = PendulumParams {
                mass,
                length,
                gravity,
                sample_rate: rate,
                q_weight: q,
                r_weight: r,
            };
            let sys = pendulum(&params)?;
            match out {
                Some(p) => {
                    io::save_system(&sys, &p)?;
                    emit(&json!({ "parameters": params, "dims": sys.dims(), "file": p }), None)?;
                }
                None => println!("{}", io::system_to_json(&sys)),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
