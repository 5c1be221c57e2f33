use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use anongame::anon_solver::{ptas_solve, ptas_solve_escalating, PtasOutcome};
use anongame::discretizer::discretize_profile;
use anongame::game_model::{parse_game, parse_profile, random_game, serialize_game, serialize_profile, MixedProfile};
use anongame::general_games::{parse_nf_game, quasi_solve};
use anongame::guard::Guard;
use anongame::minimax_opt::{maximin_ptas, minimax_ptas, parse_functions, resolution_for_epsilon};
use anongame::multinomial_dist::regret_profile;
use anongame::numeric::{format_rational, parse_rational, rat, to_f64};
use anongame::tv_lab::{write_csv, TvExperiment};
use anongame::{Rational, TdpTree};

#[derive(Parser)]
#[command(name = "anongame", version, about = "Approximate equilibria of anonymous games")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random anonymous game.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for an ε-Nash equilibrium on the quantized strategy grid.
    Solve {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        eps: Epsilon,
        #[arg(long, default_value_t = 1)]
        z: u64,
        /// Accepted for symmetry with `discretize`; the search does not use it.
        #[arg(long)]
        alpha: Option<String>,
        /// Double z until certified or out of budget.
        #[arg(long)]
        escalate: bool,
        /// Escalation budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact per-player support gaps and regrets of a profile.
    Verify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        eps: Epsilon,
    },
    /// Round a profile cell by cell onto the 1/(2^k z) grid.
    Discretize {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        z: u64,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the trickle-down tree of one distribution.
    TdpDump {
        /// Comma-separated probabilities, e.g. "1/3,1/3,1/3".
        #[arg(long, conflicts_with = "profile")]
        dist: Option<String>,
        #[arg(long, requires = "player")]
        profile: Option<PathBuf>,
        #[arg(long)]
        player: Option<usize>,
        /// Also print the cell signature at this z.
        #[arg(long)]
        z: Option<u64>,
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Discretization TV sweep written as CSV.
    TvExperiment {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        z: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the largest expectation over Bernoulli sums.
    Minimax {
        #[arg(long)]
        funcs: PathBuf,
        #[command(flatten)]
        eps: Epsilon,
        #[arg(long)]
        maximin: bool,
    },
    /// Grid search for an ε-approximate equilibrium of a normal-form game.
    Quasi {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        eps: Epsilon,
    },
}

#[derive(Args)]
struct Epsilon {
    #[arg(long = "epsilon")]
    value: String,
}

impl Epsilon {
    fn parse(&self) -> Result<Rational> {
        let eps = parse_rational(&self.value).map_err(|e| anyhow!("invalid epsilon: {e}"))?;
        if eps <= rat(0, 1) || eps > rat(1, 1) {
            bail!("epsilon out of range: {} not in (0,1]", self.value);
        }
        Ok(eps)
    }
}

fn parse_alpha(alpha: &Option<String>) -> Result<Rational> {
    let Some(a) = alpha else {
        return Ok(rat(3, 5));
    };
    let a = parse_rational(a).map_err(|e| anyhow!("invalid alpha: {e}"))?;
    if a <= rat(0, 1) || a >= rat(1, 1) {
        bail!("alpha out of range: {a} not in (0,1)");
    }
    Ok(a)
}

fn check_z(z: u64, min: u64) -> Result<()> {
    if z < min {
        bail!("z out of range: {z} < {min}");
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn solve_report(o: &PtasOutcome, eps: &Rational) -> String {
    let theta: Vec<String> = o.theta.counts.iter().map(u32::to_string).collect();
    format!(
        "certified: {}\nepsilon: {}\nsupport_gap: {}\nregret: {}\nz: {}\ntheta: [{}]\nthetas_examined: {}\n",
        o.certified,
        format_rational(eps),
        format_rational(&o.support_gap),
        format_rational(&o.regret),
        o.z,
        theta.join(","),
        o.thetas_examined
    )
}

fn run(cli: Cli) -> Result<u8> {
    let guard = Guard::from_env();
    match cli.command {
        Command::Gen { n, k, seed, out } => {
            let game = random_game(n, k, seed)?;
            emit(&out, &serialize_game(&game))?;
        }
        Command::Solve { game, eps, z, alpha, escalate, budget, out } => {
            let eps = eps.parse()?;
            check_z(z, 1)?;
            parse_alpha(&alpha)?;
            if !(budget.is_finite() && budget >= 0.0) {
                bail!("budget out of range: {budget}");
            }
            let game = parse_game(&read(&game)?)?;
            let outcome = if escalate {
                ptas_solve_escalating(&game, &eps, z, Duration::from_secs_f64(budget), &guard)?
            } else {
                ptas_solve(&game, &eps, z, &guard)?
            };
            let report = solve_report(&outcome, &eps);
            let profile = serialize_profile(&outcome.profile);
            match &out {
                Some(_) => {
                    emit(&out, &profile)?;
                    print!("{report}");
                }
                None => {
                    emit(&None, &profile)?;
                    eprint!("{report}");
                }
            }
            return Ok(if outcome.certified { 0 } else { 1 });
        }
        Command::Verify { game, profile, eps } => {
            let eps = eps.parse()?;
            let game = parse_game(&read(&game)?)?;
            let profile = parse_profile(&read(&profile)?)?;
            let report = regret_profile(&game, &profile)?;
            for (i, (gap, regret)) in report.support_gap.iter().zip(&report.regret).enumerate() {
                println!("player {i}: support_gap={} regret={}", format_rational(gap), format_rational(regret));
            }
            let pass = report.is_eps_nash(&eps);
            println!("max_support_gap={} epsilon={}", format_rational(&report.max_support_gap), format_rational(&eps));
            println!("{}", if pass { "PASS" } else { "FAIL" });
            return Ok(if pass { 0 } else { 1 });
        }
        Command::Discretize { profile, z, alpha, out } => {
            check_z(z, 2)?;
            let alpha = parse_alpha(&alpha)?;
            let profile = parse_profile(&read(&profile)?)?;
            let rounded = discretize_profile(&profile, z, &alpha)?;
            emit(&out, &serialize_profile(&rounded.to_mixed_profile()))?;
        }
        Command::TdpDump { dist, profile, player, z, alpha } => {
            let alpha = parse_alpha(&alpha)?;
            let probs: Vec<Rational> = match (dist, profile) {
                (Some(d), None) => d
                    .split(',')
                    .map(|s| parse_rational(s.trim()).map_err(|e| anyhow!("invalid probability {s:?}: {e}")))
                    .collect::<Result<_>>()?,
                (None, Some(p)) => {
                    let prof: MixedProfile = parse_profile(&read(&p)?)?;
                    let i = player.expect("clap enforces --player");
                    if i >= prof.n() {
                        bail!("player {i} out of range for n = {}", prof.n());
                    }
                    prof.player(i).to_vec()
                }
                _ => bail!("give either --dist or --profile with --player"),
            };
            let tree = TdpTree::from_distribution(&probs)?;
            print!("{tree}");
            if let Some(z) = z {
                check_z(z, 2)?;
                println!("signature: {}", tree.cell_signature(z, &alpha)?);
            }
        }
        Command::TvExperiment { k, z, n, trials, seed, alpha, out } => {
            let alpha = parse_alpha(&alpha)?;
            for &zi in &z {
                check_z(zi, 2)?;
            }
            if k < 2 || trials == 0 || n.contains(&0) {
                bail!("need k >= 2, trials >= 1 and every n >= 1");
            }
            let exp = TvExperiment { k, z_list: z, n_list: n, trials, base_seed: seed, alpha, guard };
            let rows = exp.run()?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(&Some(out), &buf)?;
        }
        Command::Minimax { funcs, eps, maximin } => {
            let eps = eps.parse()?;
            let funcs = parse_functions(&read(&funcs)?)?;
            let res = resolution_for_epsilon(to_f64(&eps))?;
            let r = if maximin { maximin_ptas(&funcs, res, &guard)? } else { minimax_ptas(&funcs, res, &guard)? };
            let doc = serde_json::json!({
                "objective": if maximin { "maximin" } else { "minimax" },
                "value": r.value,
                "probs": r.probs,
                "resolution": r.resolution,
                "candidates": r.candidates.to_string(),
            });
            println!("{doc}");
        }
        Command::Quasi { game, eps } => {
            let eps = eps.parse()?;
            let game = parse_nf_game(&read(&game)?)?;
            let o = quasi_solve(&game, &eps, &guard)?;
            let strs = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
            let doc = serde_json::json!({
                "p": game.players(),
                "s": game.strategies(),
                "probs": o.profile.iter().map(|x| strs(x)).collect::<Vec<_>>(),
                "regret": strs(&o.regret),
                "max_regret": format_rational(&o.max_regret),
                "units": o.units,
                "examined": o.examined.to_string(),
            });
            println!("{doc}");
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
