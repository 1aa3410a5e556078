//! `dthard`: generate hard decision-tree instances, solve Set-Cover, judge
//! hypotheses and run the exact claim checks.
//!
//! Exit codes: 0 pass, 1 fail, 2 usage or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dthard::hypotheses::Hypothesis;
use dthard::oracles::{verify_claim, ClaimId, ClaimParams, Guards};
use dthard::pipeline::{
    adjudicate, gen_construction, gen_estimation, run_suite, ConstructionOptions, EstimationOptions, GridSpec,
    HardInstanceBundle, Mode, SuiteSummary,
};
use dthard::ratio;
use dthard::setcover::{parse_instance, GapParams, SetCoverInstance};
use dthard::Exec;

#[derive(Parser)]
#[command(name = "dthard", version, about = "Hard instances for decision-tree construction and estimation")]
struct Cli {
    /// JSON file overriding oracle guards.
    #[arg(long, global = true, env = "DTHARD_GUARDS")]
    guards: Option<PathBuf>,
    /// Run every kernel on the calling thread.
    #[arg(long, global = true, env = "DTHARD_SEQUENTIAL")]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a bundle directory (circuit.txt, generator.json, bundle.json).
    #[command(subcommand)]
    Gen(Gen),
    /// Exact optimum, lexicographically least optimal cover and greedy cover.
    SolveSetcover {
        #[arg(long, env = "DTHARD_INSTANCE")]
        instance: PathBuf,
    },
    /// Judge a hypothesis (JSON tree or DNF) against a bundle.
    Adjudicate {
        #[arg(long, env = "DTHARD_BUNDLE")]
        bundle: PathBuf,
        #[arg(long, env = "DTHARD_HYPOTHESIS")]
        hypothesis: PathBuf,
        /// Use a Monte-Carlo estimate with this many samples instead of the exact distance.
        #[arg(long, env = "DTHARD_SAMPLES")]
        samples: Option<u64>,
        #[arg(long, env = "DTHARD_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run claim checks on one instance or on the whole grid.
    Verify(Verify),
    /// Bundle metadata plus circuit/generator coherence and round-trip checks.
    Report {
        #[arg(long, env = "DTHARD_BUNDLE")]
        bundle: PathBuf,
    },
}

#[derive(Args)]
struct GapArgs {
    /// Yes threshold of the gap (defaults to the exact optimum).
    #[arg(long, env = "DTHARD_K", requires = "k_prime")]
    k: Option<usize>,
    /// No threshold of the gap.
    #[arg(long, env = "DTHARD_K_PRIME", requires = "k")]
    k_prime: Option<usize>,
}

impl GapArgs {
    fn gap(&self) -> Result<Option<GapParams>> {
        match (self.k, self.k_prime) {
            (Some(k), Some(kp)) => Ok(Some(GapParams::new(k, kp)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Gen {
    Construction {
        #[arg(long, env = "DTHARD_INSTANCE")]
        instance: PathBuf,
        #[arg(long, env = "DTHARD_OUT")]
        out: PathBuf,
        #[arg(long, env = "DTHARD_ELL", default_value_t = 2)]
        ell: usize,
        /// Negated target (the DNF variant).
        #[arg(long, env = "DTHARD_NEGATED")]
        negated: bool,
        #[arg(long, env = "DTHARD_STRICT_SIZE")]
        strict_size: Option<u64>,
        /// Target accuracy as `p/q` (default `1/(4N)`).
        #[arg(long, env = "DTHARD_EPS")]
        eps: Option<String>,
        #[arg(long, env = "DTHARD_ALLOW_ELL_ONE")]
        allow_ell_one: bool,
        /// Normalize the instance first instead of rejecting it.
        #[arg(long, env = "DTHARD_NORMALIZE")]
        normalize: bool,
        #[command(flatten)]
        gap: GapArgs,
    },
    Estimation {
        #[arg(long, env = "DTHARD_INSTANCE")]
        instance: PathBuf,
        #[arg(long, env = "DTHARD_OUT")]
        out: PathBuf,
        #[arg(long, env = "DTHARD_M", default_value_t = 1)]
        m: usize,
        #[arg(long, env = "DTHARD_STRICT_SIZE")]
        strict_size: Option<u64>,
        /// Target accuracy as `p/q` (default `1/2 - 2^-N`).
        #[arg(long, env = "DTHARD_EPS")]
        eps: Option<String>,
        #[arg(long, env = "DTHARD_C1", default_value_t = 1)]
        c1: u64,
        #[arg(long, env = "DTHARD_C2", default_value_t = 1)]
        c2: u64,
        #[arg(long, env = "DTHARD_NORMALIZE")]
        normalize: bool,
        #[command(flatten)]
        gap: GapArgs,
    },
}

#[derive(Args)]
struct Verify {
    /// Claim ids; `all` selects every claim.
    #[arg(long = "claim", env = "DTHARD_CLAIMS", value_delimiter = ',', required = true)]
    claims: Vec<String>,
    /// Check this instance; without it the grid is used.
    #[arg(long, env = "DTHARD_INSTANCE")]
    instance: Option<PathBuf>,
    #[arg(long, env = "DTHARD_ELL", default_value_t = 2)]
    ell: usize,
    #[arg(long, env = "DTHARD_SAMPLES")]
    samples: Option<usize>,
    #[arg(long, env = "DTHARD_SEED", default_value_t = 0)]
    seed: u64,
    /// Flip the label of this support atom first (mutation check).
    #[arg(long, env = "DTHARD_FLIP_LABEL")]
    flip_label: Option<usize>,
    #[arg(long, env = "DTHARD_MAX_N", default_value_t = 4)]
    max_n: usize,
    #[arg(long, env = "DTHARD_MAX_UNIVERSE", default_value_t = 4)]
    max_universe: usize,
    /// Block lengths for grid runs.
    #[arg(long, env = "DTHARD_ELLS", value_delimiter = ',', default_value = "2")]
    ells: Vec<usize>,
}

/// Command output and whether its checks passed (exit 0 or 1).
struct Outcome {
    pass: bool,
    output: String,
}

fn read_instance(path: &Path, normalize: bool) -> Result<SetCoverInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(if normalize { inst.normalize().0 } else { inst })
}

fn read_guards(path: Option<&Path>) -> Result<Guards> {
    match path {
        None => Ok(Guards::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing guards {}", p.display()))
        }
    }
}

fn parse_eps(eps: &Option<String>) -> Result<Option<num_rational::BigRational>> {
    eps.as_deref()
        .map(|t| ratio::parse(t).with_context(|| format!("bad --eps {t:?}")))
        .transpose()
}

fn parse_claims(ids: &[String]) -> Result<Vec<ClaimId>> {
    if ids.iter().any(|c| c == "all") {
        return Ok(ClaimId::ALL.to_vec());
    }
    ids.iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.parse::<ClaimId>().map_err(Into::into))
        .collect()
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn write_bundle(b: &HardInstanceBundle, out: &Path) -> Result<Outcome> {
    b.write_dir(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(Outcome {
        pass: true,
        output: pretty(&json!({ "bundle": out, "instance_hash": b.metadata.instance_hash })),
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let guards = read_guards(cli.guards.as_deref())?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Gen(Gen::Construction {
            instance,
            out,
            ell,
            negated,
            strict_size,
            eps,
            allow_ell_one,
            normalize,
            gap,
        }) => {
            let inst = read_instance(&instance, normalize)?;
            let opts = ConstructionOptions {
                ell,
                negated,
                gap: gap.gap()?,
                strict_size,
                eps: parse_eps(&eps)?,
                allow_ell_one,
            };
            write_bundle(&gen_construction(&inst, &opts, &guards)?, &out)
        }
        Command::Gen(Gen::Estimation {
            instance,
            out,
            m,
            strict_size,
            eps,
            c1,
            c2,
            normalize,
            gap,
        }) => {
            let inst = read_instance(&instance, normalize)?;
            let opts = EstimationOptions {
                m,
                gap: gap.gap()?,
                strict_size,
                eps: parse_eps(&eps)?,
                c1,
                c2,
            };
            write_bundle(&gen_estimation(&inst, &opts, &guards)?, &out)
        }
        Command::SolveSetcover { instance } => {
            let inst = read_instance(&instance, false)?;
            let sol = inst.exact_opt(guards.max_sets)?;
            let greedy = inst.greedy_cover();
            Ok(Outcome {
                pass: true,
                output: pretty(&json!({
                    "opt": sol.size,
                    "cover": inst.set_names(&sol.witness),
                    "greedy": inst.set_names(&greedy),
                    "normalized": inst.is_normalized(),
                })),
            })
        }
        Command::Adjudicate {
            bundle,
            hypothesis,
            samples,
            seed,
        } => {
            let b = HardInstanceBundle::read_dir(&bundle).with_context(|| format!("reading bundle {}", bundle.display()))?;
            let text = fs::read_to_string(&hypothesis).with_context(|| format!("reading {}", hypothesis.display()))?;
            let h: Hypothesis = serde_json::from_str(&text).context("parsing hypothesis")?;
            let mode = match samples {
                Some(samples) => Mode::MonteCarlo { samples, seed },
                None => Mode::Exact,
            };
            let v = adjudicate(&b, &h, mode, &guards, exec)?;
            Ok(Outcome {
                pass: v.pass,
                output: pretty(&v),
            })
        }
        Command::Verify(v) => {
            let claims = parse_claims(&v.claims)?;
            let params = ClaimParams {
                ell: v.ell,
                samples: v.samples,
                seed: v.seed,
                flip_label: v.flip_label,
            };
            let reports = match &v.instance {
                Some(path) => {
                    let inst = read_instance(path, false)?;
                    claims
                        .iter()
                        .map(|&c| verify_claim(c, &inst, &params, &guards, exec))
                        .collect::<dthard::Result<Vec<_>>>()?
                }
                None => {
                    let grid = GridSpec {
                        max_n: v.max_n,
                        max_universe: v.max_universe,
                        ells: v.ells.clone(),
                    };
                    run_suite(&claims, &grid, &params, &guards, exec)?
                }
            };
            let summary = SuiteSummary::of(&reports);
            Ok(Outcome {
                pass: summary.all_pass(),
                output: pretty(&json!({ "summary": summary, "reports": reports })),
            })
        }
        Command::Report { bundle } => {
            let b = HardInstanceBundle::read_dir(&bundle).with_context(|| format!("reading bundle {}", bundle.display()))?;
            let rederived = b.rederive(&guards)? == b;
            let coherent = b.coherent(&guards, exec)?;
            Ok(Outcome {
                pass: rederived && coherent,
                output: pretty(&json!({
                    "metadata": b.metadata,
                    "rederived_matches": rederived,
                    "coherent": coherent,
                })),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            println!("{}", o.output);
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
