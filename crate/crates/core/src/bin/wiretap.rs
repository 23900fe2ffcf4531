use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use wiretap_core::allocator::{solve_gaussian_with, AllocationProblem};
use wiretap_core::finite::{
    beta_alpha_curve, find_popt_with, mmse, mmse_power_curve, mutual_information, Constellation,
    MmseModel, NoiseQuadrature, QuadratureSpec, ScalarWiretap, DEFAULT_NODES,
};
use wiretap_core::harness::output::format_sig;
use wiretap_core::harness::{
    run_cases_on, summarize, write_csv, write_json, ExperimentConfig, Pipeline, SweepDocument,
};
use wiretap_core::model::{jensen_gap_montecarlo, CovarianceMatrix};
use wiretap_core::rng::RngKind;
use wiretap_core::Error;

#[derive(Parser)]
#[command(
    name = "wiretap",
    version,
    about = "Secrecy-rate power allocation for MIMO wiretap channels"
)]
struct Cli {
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Gaussian,
    Exponential,
    Constellation,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AlphabetArgs {
    #[arg(long, default_value = "bpsk")]
    constellation: String,
    /// Quadrature nodes per axis.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
}

impl AlphabetArgs {
    fn build(&self) -> Result<(Constellation, NoiseQuadrature), Error> {
        let c: Constellation = self.constellation.parse()?;
        let q = QuadratureSpec::trapezoid(self.nodes).build()?;
        Ok((c, q))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve all configured cases at a single budget.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Budget; defaults to the config's `p0`.
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the configured cases over the budget grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tabulate I(rho) in bits.
    MiTable {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tabulate MMSE(rho).
    MmseTable {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Power maximizing the scalar finite-alphabet secrecy rate.
    Popt {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long)]
        h2: f64,
        #[arg(long)]
        z2: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[arg(long, value_enum, default_value = "constellation")]
        model: Model,
        #[command(flatten)]
        out: OutArgs,
    },
    /// GSVD reconstruction residuals for a config's channel pair.
    GsvdCheck {
        /// Defaults to the bundled three-antenna instance.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fail with a numerical error above this residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo ergodic eavesdropper rate against its Jensen bound.
    JensenCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use `P0/N_S * I` instead of the Gaussian-optimal covariance.
        #[arg(long)]
        isotropic: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// beta(alpha) = MMSE((z2/h2) MMSE^-1(alpha)).
    BetaAlpha {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, value_enum, default_value = "constellation")]
        model: Model,
        #[arg(long)]
        h2: f64,
        #[arg(long)]
        z2: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// h2 MMSE(h2 P) and z2 MMSE(z2 P) against P.
    MmsePower {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, value_enum, default_value = "constellation")]
        model: Model,
        #[arg(long)]
        h2: f64,
        #[arg(long)]
        z2: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            Error::Io {
                path: p.clone(),
                source,
            }
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(source: io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source,
    }
}

/// Writes a numeric table as CSV, or as a JSON array of objects.
fn emit_table(out: &OutArgs, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Error> {
    let mut w = sink(&out.out)?;
    match out.format {
        Format::Csv => {
            writeln!(w, "{}", header.join(",")).map_err(io_err)?;
            for r in rows {
                let line: Vec<String> = r.iter().map(|&x| format_sig(x)).collect();
                writeln!(w, "{}", line.join(",")).map_err(io_err)?;
            }
        }
        Format::Json => {
            let objs: Vec<_> = rows
                .iter()
                .map(|r| {
                    header
                        .iter()
                        .zip(r)
                        .map(|(k, v)| (k.to_string(), json!(v)))
                        .collect::<serde_json::Map<_, _>>()
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &objs)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn emit_value<T: Serialize>(out: &OutArgs, v: &T) -> Result<(), Error> {
    let mut w = sink(&out.out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn load(path: &Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::fig2()),
    }
}

fn with_seed(mut cfg: ExperimentConfig, seed: Option<u64>) -> ExperimentConfig {
    if let Some(s) = seed {
        cfg.quadrature.seed = s;
    }
    cfg
}

fn model<'a>(m: Model, c: &'a Constellation, q: &'a NoiseQuadrature) -> MmseModel<'a> {
    match m {
        Model::Gaussian => MmseModel::Gaussian,
        Model::Exponential => MmseModel::Exponential,
        Model::Constellation => MmseModel::constellation(c, q),
    }
}

fn emit_records(
    out: &OutArgs,
    cfg: &ExperimentConfig,
    records: Vec<wiretap_core::harness::SweepRecord>,
) -> Result<(), Error> {
    let mut w = sink(&out.out)?;
    match out.format {
        Format::Csv => write_csv(&records, &mut w).map_err(io_err)?,
        Format::Json => write_json(&SweepDocument::new(Some(cfg.clone()), records), &mut w)?,
    }
    w.flush().map_err(io_err)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            config,
            p0,
            seed,
            out,
        } => {
            let cfg = with_seed(ExperimentConfig::load(&config)?, seed);
            let p0 = p0
                .or(cfg.channel.p0)
                .ok_or_else(|| Error::Config("no budget: pass --p0 or set channel.p0".into()))?;
            let record = Pipeline::from_config(&cfg)?.evaluate(p0)?;
            emit_records(&out, &cfg, vec![record])
        }
        Command::Sweep { config, seed, out } => {
            let cfg = with_seed(ExperimentConfig::load(&config)?, seed);
            let (records, elapsed) = run_cases_on(&cfg, None)?;
            let summary = summarize(&records);
            eprintln!(
                "{}",
                json!({ "points": records.len(), "elapsed_s": elapsed.as_secs_f64(), "summary": summary })
            );
            emit_records(&out, &cfg, records)
        }
        Command::MiTable { alphabet, rho, out } => {
            let (c, q) = alphabet.build()?;
            let rows = rho
                .iter()
                .map(|&r| Ok(vec![r, mutual_information(&c, r, &q)?]))
                .collect::<Result<Vec<_>, Error>>()?;
            emit_table(&out, &["rho", "mi_bits"], &rows)
        }
        Command::MmseTable { alphabet, rho, out } => {
            let (c, q) = alphabet.build()?;
            let rows = rho
                .iter()
                .map(|&r| Ok(vec![r, mmse(&c, r, &q)?]))
                .collect::<Result<Vec<_>, Error>>()?;
            emit_table(&out, &["rho", "mmse"], &rows)
        }
        Command::Popt {
            alphabet,
            h2,
            z2,
            delta,
            model: m,
            out,
        } => {
            let (c, q) = alphabet.build()?;
            let s = ScalarWiretap::new(h2, z2)?;
            let p = find_popt_with(&model(m, &c, &q), s, delta)?;
            emit_table(&out, &["h2", "z2", "p_opt"], &[vec![h2, z2, p]])
        }
        Command::GsvdCheck { config, tol, out } => {
            let cfg = load(&config)?;
            let pipe = Pipeline::from_config(&ExperimentConfig {
                cases: vec![],
                ..cfg
            })?;
            let res = pipe
                .factors
                .residuals(pipe.instance.h(), &pipe.equivalent.z);
            let report = json!({
                "residuals": res,
                "max_residual": res.max(),
                "lambda_h": pipe.factors.lambda_h,
                "lambda_z": pipe.factors.lambda_z,
                "subchannels": pipe.subchannels.channels,
                "tol": tol,
            });
            emit_value(&out, &report)?;
            if res.max().is_nan() || res.max() > tol {
                return Err(Error::Decomposition(format!(
                    "max residual {:e} exceeds {tol:e}",
                    res.max()
                )));
            }
            Ok(())
        }
        Command::JensenCheck {
            config,
            p0,
            samples,
            seed,
            isotropic,
            out,
        } => {
            let cfg = load(&config)?;
            let pipe = Pipeline::from_config(&ExperimentConfig {
                cases: vec![],
                ..cfg.clone()
            })?;
            let p0 = p0.or(cfg.channel.p0).unwrap_or(1.0);
            let q = if isotropic {
                CovarianceMatrix::isotropic(pipe.instance.n_s(), p0)
            } else {
                let prob = AllocationProblem::new(pipe.subchannels.clone(), p0, None)?;
                solve_gaussian_with(&prob, pipe.options)?.covariance
            };
            let inst = pipe.instance.with_p0(p0)?;
            let gap = jensen_gap_montecarlo(
                &inst,
                &pipe.equivalent,
                &q,
                samples,
                seed,
                RngKind::Chacha20,
            )?;
            emit_value(
                &out,
                &json!({ "p0": p0, "samples": samples, "seed": seed, "gap": gap, "consistent": gap.consistent() }),
            )?;
            if !gap.consistent() {
                return Err(Error::Decomposition(
                    "Monte-Carlo mean exceeds the bound by more than 3 stderr".into(),
                ));
            }
            Ok(())
        }
        Command::BetaAlpha {
            alphabet,
            model: m,
            h2,
            z2,
            alpha,
            out,
        } => {
            let (c, q) = alphabet.build()?;
            let s = ScalarWiretap::new(h2, z2)?;
            let rows: Vec<Vec<f64>> = beta_alpha_curve(&model(m, &c, &q), s, &alpha)?
                .into_iter()
                .map(|(a, b)| vec![a, b])
                .collect();
            emit_table(&out, &["alpha", "beta"], &rows)
        }
        Command::MmsePower {
            alphabet,
            model: m,
            h2,
            z2,
            p,
            out,
        } => {
            let (c, q) = alphabet.build()?;
            let s = ScalarWiretap::new(h2, z2)?;
            let rows: Vec<Vec<f64>> = mmse_power_curve(&model(m, &c, &q), s, &p)
                .into_iter()
                .map(|pt| vec![pt.p, pt.destination, pt.eavesdropper])
                .collect();
            emit_table(&out, &["p", "destination", "eavesdropper"], &rows)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Io { .. } | Error::Serde(_) => 2,
        Error::Degenerate(_) | Error::Decomposition(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("{}", json!({ "error": "config", "message": e.to_string() }));
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(exit_code(&e))
        }
    }
}
