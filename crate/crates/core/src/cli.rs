//! Command-line front end.
//!
//! Every run writes one report (JSON by default) that starts with the fully
//! resolved configuration, so identical invocations give identical bytes.
//! Wall-clock timing goes to stderr only.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analytic::{curve_samples, isolate_fixed_points, outcomes, MapId, DEFAULT_GRID_RESOLUTION};
use crate::audit;
use crate::error::{Error, Result};
use crate::exec::{with_threads, Execution};
use crate::game::Game;
use crate::lengths;
use crate::offspring::{Family, FamilyId, OffspringDistribution};
use crate::report::{fmt_num, to_json, to_value};
use crate::scan;
use crate::simulate::{simulate_games, MonteCarloConfig, DEFAULT_NODE_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "gwgames", version, about = "Normal, misère and escape games on Galton-Watson trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format. CSV is available for `scan --points` and `curve`.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Master seed for sampling commands.
    #[arg(long, global = true, env = "GWGAMES_SEED", default_value_t = 0)]
    pub seed: u64,
}

/// A distribution given either positionally or with `--dist`.
#[derive(Debug, Args)]
pub struct DistArg {
    /// Distribution literal, e.g. `finite:0.15,0,0.85`, `poisson:2`,
    /// `family:binary@0.89`.
    #[arg(value_name = "DIST", required_unless_present = "dist")]
    pub positional: Option<String>,

    #[arg(long = "dist", value_name = "DIST", conflicts_with = "positional")]
    pub dist: Option<String>,
}

impl DistArg {
    fn literal(&self) -> &str {
        self.dist
            .as_deref()
            .or(self.positional.as_deref())
            .expect("clap requires one of the two")
    }

    fn parse(&self) -> Result<OffspringDistribution> {
        self.literal().parse()
    }
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Family id: binary, poisson, geometric, binomial-N, exotic1, exotic2,
    /// exotic3, or lerp(DIST;DIST).
    #[arg(long)]
    pub family: String,

    #[arg(long)]
    pub game: Game,

    /// Lower end of the parameter range (default: the family's range).
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,

    /// Bracket width for bisection.
    #[arg(long, default_value_t = scan::DEFAULT_TOL_T)]
    pub tol: f64,
}

impl FamilyArgs {
    fn resolve(&self) -> Result<(Family, f64, f64)> {
        let id: FamilyId = self.family.parse()?;
        let (a, b) = id.default_range();
        let (lo, hi) = (self.lo.unwrap_or(a), self.hi.unwrap_or(b));
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("malformed range [{lo}, {hi}]")));
        }
        let family = Family::new(id).with_range(lo, hi)?;
        Ok((family, lo, hi))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All ten outcome probabilities with diagnostics.
    Outcomes(DistArg),
    /// Fixed points of one composed map.
    Roots {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value = "F2")]
        map: MapId,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        res: usize,
    },
    /// Locate a transition along a family; optionally tabulate all outcomes.
    Scan {
        #[command(flatten)]
        family: FamilyArgs,
        /// Locate a jump inside the range instead of the onset of a positive
        /// order parameter.
        #[arg(long)]
        jump: bool,
        /// Tabulate the ten outcomes on this many intervals of the range.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Classify the transition at `--t`, or locate and classify it.
    Classify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
    },
    /// Monte Carlo estimates from sampled trees.
    Simulate {
        #[command(flatten)]
        dist: DistArg,
        /// One game; all three when omitted.
        #[arg(long)]
        game: Option<Game>,
        #[arg(long, default_value_t = 30)]
        depth: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        /// Record move counts of decided games.
        #[arg(long)]
        lengths: bool,
        /// Record reduced-tree heights.
        #[arg(long)]
        tstar: bool,
    },
    /// Expected game length, plus a sampled reduced-tree height.
    Lengths {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value = "normal")]
        game: Game,
        #[arg(long, default_value_t = lengths::DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, default_value_t = lengths::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 40)]
        depth: u32,
        /// Truncated trees solved for the reduced-tree height; 0 skips this.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// Reduced trees drawn directly from their two-type law; 0 skips this.
        #[arg(long, default_value_t = 0)]
        reduced_samples: usize,
    },
    /// Inequality audit and counterexample suite.
    Audit {
        /// Also audit this many seeded random laws.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 8)]
        max_support: usize,
        #[arg(long, default_value_t = audit::DEFAULT_TOL)]
        tol: f64,
    },
    /// `map(x) - x` on a uniform grid of `[0, 1]`.
    Curve {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value = "F2")]
        map: MapId,
        #[arg(long, default_value_t = 1000)]
        res: usize,
    },
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Literal { .. } | Error::InvalidArgument(_) | Error::InvalidDistribution(_))
}

fn usage(what: &str) -> Error {
    Error::InvalidArgument(what.into())
}

/// Output of one run, before it is written anywhere.
pub struct Rendered {
    pub text: String,
}

fn envelope(config: serde_json::Value, result: impl Serialize) -> Result<Rendered> {
    let v = json!({ "config": config, "result": to_value(&result)? });
    Ok(Rendered { text: to_json(&v)? + "\n" })
}

fn csv_with_config(config: &serde_json::Value, body: String) -> Result<Rendered> {
    Ok(Rendered {
        text: format!("# config: {}\n{}", serde_json::to_string(&to_value(config)?)?, body),
    })
}

fn require_json(format: Format, command: &str) -> Result<()> {
    if format == Format::Csv {
        return Err(usage(&format!("`{command}` has no CSV output")));
    }
    Ok(())
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<Rendered> {
    let fmt = cli.format;
    match &cli.command {
        Command::Outcomes(d) => {
            require_json(fmt, "outcomes")?;
            let dist = d.parse()?;
            let config = json!({ "command": "outcomes", "dist": dist.to_string() });
            envelope(config, outcomes(&dist)?)
        }
        Command::Roots { dist, map, res } => {
            require_json(fmt, "roots")?;
            let dist = dist.parse()?;
            let config = json!({ "command": "roots", "dist": dist.to_string(), "map": map, "res": res });
            envelope(config, isolate_fixed_points(&dist, *map, *res)?)
        }
        Command::Scan { family, jump, points } => {
            let (fam, lo, hi) = family.resolve()?;
            let config = json!({
                "command": "scan", "family": fam.id, "game": family.game, "lo": lo, "hi": hi,
                "tol": family.tol, "jump": jump, "points": points,
            });
            if let Some(n) = points {
                let table = scan::scan_curve(&fam, &scan::uniform_grid(lo, hi, *n));
                return match fmt {
                    Format::Csv => csv_with_config(&config, table.to_csv(fmt_num)),
                    Format::Json => envelope(config, table),
                };
            }
            require_json(fmt, "scan without --points")?;
            if *jump {
                envelope(config, scan::locate_jump(&fam, family.game, lo, hi, family.tol)?)
            } else {
                envelope(config, scan::locate_critical(&fam, family.game, lo, hi, family.tol)?)
            }
        }
        Command::Classify { family, t } => {
            require_json(fmt, "classify")?;
            let (fam, lo, hi) = family.resolve()?;
            let config = json!({
                "command": "classify", "family": fam.id, "game": family.game, "lo": lo, "hi": hi,
                "tol": family.tol, "t": t,
            });
            let report = match t {
                Some(t) => scan::classify_transition(&fam, family.game, *t)?,
                None => scan::transition(&fam, family.game, lo, hi, family.tol)?,
            };
            envelope(config, report)
        }
        Command::Simulate {
            dist,
            game,
            depth,
            samples,
            budget,
            lengths,
            tstar,
        } => {
            require_json(fmt, "simulate")?;
            let d = dist.parse()?;
            let games: Vec<Game> = game.map_or(Game::ALL.to_vec(), |g| vec![g]);
            let cfg = MonteCarloConfig::new(*depth, *samples, cli.seed)
                .with_node_budget(*budget)
                .with_lengths(*lengths)
                .with_tstar(*tstar);
            let config = json!({
                "command": "simulate", "dist": d.to_string(), "games": games, "depth": depth,
                "samples": samples, "seed": cli.seed, "budget": budget, "lengths": lengths, "tstar": tstar,
            });
            envelope(config, simulate_games(&d, &games, &cfg)?)
        }
        Command::Lengths {
            dist,
            game,
            n_max,
            tol,
            depth,
            samples,
            reduced_samples,
        } => {
            require_json(fmt, "lengths")?;
            let d = dist.parse()?;
            let config = json!({
                "command": "lengths", "dist": d.to_string(), "game": game, "n_max": n_max, "tol": tol,
                "depth": depth, "samples": samples, "reduced_samples": reduced_samples, "seed": cli.seed,
            });
            let series = lengths::expected_t(&d, *game, *n_max, *tol)?;
            let tstar = if *samples > 0 {
                Some(lengths::expected_tstar_mc(&d, *game, *depth, *samples, cli.seed)?)
            } else {
                None
            };
            let tstar_reduced = if *reduced_samples > 0 {
                Some(lengths::expected_tstar_reduced(
                    &d,
                    *game,
                    *reduced_samples,
                    cli.seed,
                    lengths::DEFAULT_HEIGHT_CAP,
                    Execution::default(),
                )?)
            } else {
                None
            };
            envelope(
                config,
                json!({
                    "series": to_value(&series)?,
                    "tstar": to_value(&tstar)?,
                    "tstar_reduced": to_value(&tstar_reduced)?,
                }),
            )
        }
        Command::Audit {
            random,
            max_support,
            tol,
        } => {
            require_json(fmt, "audit")?;
            let config = json!({
                "command": "audit", "random": random, "max_support": max_support, "tol": tol, "seed": cli.seed,
            });
            let suite = audit::counterexample_suite()?;
            let random = if *random > 0 {
                Some(audit::verify_random(*random, *max_support, cli.seed, *tol)?)
            } else {
                None
            };
            envelope(config, json!({ "suite": to_value(&suite)?, "random": to_value(&random)? }))
        }
        Command::Curve { dist, map, res } => {
            let d = dist.parse()?;
            let config = json!({ "command": "curve", "dist": d.to_string(), "map": map, "res": res });
            let samples = curve_samples(&d, *map, *res)?;
            match fmt {
                Format::Csv => {
                    let mut body = String::from("x,residual\n");
                    for (x, y) in &samples {
                        body.push_str(&format!("{},{}\n", fmt_num(*x), fmt_num(*y)));
                    }
                    csv_with_config(&config, body)
                }
                Format::Json => {
                    let rows: Vec<[f64; 2]> = samples.iter().map(|&(x, y)| [x, y]).collect();
                    envelope(config, rows)
                }
            }
        }
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses `args`, runs the command and writes the report. Returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let outcome = with_threads(cli.threads, || execute(&cli)).and_then(|r| write_output(&cli, &r.text));
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_COMPUTATION
            }
        }
    }
}
