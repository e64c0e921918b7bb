//! `playtest`: record demos, infer tactics, play, compare.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{mpsc, Arc, Mutex};

use clap::{Parser, Subcommand, ValueEnum};
use playtest_core::infer::TacticSet;
use playtest_core::scene::{load_icon_dir, IconSpec};
use playtest_games::{art, new_demonstrator, new_game, GameId};
use playtest_harness::demo::DEFAULT_PERIOD;
use playtest_harness::serve::{self, ServeConfig, SingleDemo};
use playtest_harness::{
    infer_demo, record_demo, run_random_baseline, run_test, specs_hash, Budget, HarnessError, Limit, OracleSource, TestReport,
};

#[derive(Parser)]
#[command(name = "playtest", version, about = "Learn playtest tactics from demos and play with them")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Oracle,
    Ui,
}

#[derive(Subcommand)]
enum Cmd {
    /// Record a demo session.
    ///
    /// With `--source ui` a browser drives the game through `--port`. A trace
    /// closes at the next snapshot, so every gesture of one action (both taps
    /// of a pair, say) has to happen within one period.
    Demo {
        #[arg(long)]
        game: GameId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        source: Source,
        #[arg(long, conflicts_with = "duration")]
        actions: Option<usize>,
        /// Seconds of recording (virtual seconds for the oracle).
        #[arg(long)]
        duration: Option<f64>,
        /// Seconds between snapshots.
        #[arg(long, default_value_t = DEFAULT_PERIOD)]
        period: f64,
        /// UI source only.
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Infer a tactic set from a demo directory.
    Infer {
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        icons: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play a game with a tactic set.
    Play {
        #[arg(long)]
        game: GameId,
        #[arg(long)]
        tactics: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Actions (`500`) or seconds (`60s`).
        #[arg(long, default_value = "500")]
        budget: Budget,
        #[arg(long)]
        report: PathBuf,
        /// Icon directory; defaults to the one the tactics were inferred with.
        #[arg(long)]
        icons: Option<PathBuf>,
    },
    /// Play a game with uniformly random taps and swipes.
    Baseline {
        #[arg(long)]
        game: GameId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "500")]
        budget: Budget,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        icons: Option<PathBuf>,
    },
    /// Host the web UI.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Where UI demo sessions are written.
        #[arg(long, default_value = "sessions")]
        out: PathBuf,
        /// Tactic set used by observed autoplay.
        #[arg(long)]
        tactics: Option<PathBuf>,
        /// Icon directory, or a directory of per-game icon directories.
        #[arg(long)]
        icons: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PERIOD)]
        period: f64,
    },
    /// Compare two reports.
    Report {
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        compare: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("playtest: {e}");
            ExitCode::from(2)
        }
    }
}

/// Icons given on the command line, else the tactic set's, else the built-in set.
fn specs_for(game: GameId, icons: Option<&Path>) -> Result<Vec<IconSpec>, HarnessError> {
    match icons {
        Some(dir) => Ok(load_icon_dir(dir)?),
        None => Ok(art::icon_specs(game)),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, HarnessError> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn run(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Demo { game, seed, out, source, actions, duration, period, port } => {
            let limit = match (actions, duration) {
                (_, Some(s)) => Limit::Seconds(s),
                (n, None) => Limit::Actions(n.unwrap_or(40)),
            };
            let session = match source {
                Source::Oracle => {
                    let mut g = new_demonstrator(game, seed);
                    record_demo(&mut *g, &mut OracleSource::new(seed), limit, period, &out)?
                }
                Source::Ui => {
                    let (tx, rx) = mpsc::channel();
                    let config = ServeConfig {
                        period,
                        limit,
                        single_demo: Some(SingleDemo { dir: out.clone(), game, seed, done: Arc::new(Mutex::new(Some(tx))) }),
                        ..ServeConfig::default()
                    };
                    let rt = runtime()?;
                    let listener = rt.block_on(serve::bind(port))?;
                    eprintln!("open http://127.0.0.1:{port}/ and start a demo");
                    rt.spawn(serve::serve(listener, config));
                    let result = rx.recv().map_err(|_| HarnessError::Stopped)?;
                    rt.shutdown_background();
                    result.map_err(|e| HarnessError::Io(std::io::Error::other(e)))?
                }
            };
            println!("{} pairs in {}", session.manifest.pairs.len(), session.dir.display());
        }
        Cmd::Infer { demo, icons, out, seed } => {
            let inference = infer_demo(&demo, &icons, seed)?;
            for d in &inference.discarded {
                eprintln!("discarded {}: {}", d.signature, d.reason);
            }
            inference.tactics.save(&out)?;
            for t in &inference.tactics.tactics {
                println!("{} {} {}", t.rule, t.signature, t.action_type);
            }
        }
        Cmd::Play { game, tactics, seed, budget, report, icons } => {
            let set = TacticSet::load(&tactics)?;
            let from_set = PathBuf::from(&set.provenance.icons);
            let icons = icons.or_else(|| from_set.is_dir().then_some(from_set));
            let specs = specs_for(game, icons.as_deref())?;
            let hash = &set.provenance.icons_hash;
            if !hash.is_empty() && *hash != specs_hash(&specs) {
                eprintln!("warning: these icons differ from the ones the tactics were inferred with");
            }
            let r = run_test(&mut *new_game(game, seed), &specs, &set, budget, seed);
            r.save(&report)?;
            println!("score {} level {} valid {:.3}", r.score, r.level, r.valid_action_rate);
        }
        Cmd::Baseline { game, seed, budget, report, icons } => {
            let specs = specs_for(game, icons.as_deref())?;
            let r = run_random_baseline(&mut *new_game(game, seed), &specs, budget, seed);
            r.save(&report)?;
            println!("score {} level {} valid {:.3}", r.score, r.level, r.valid_action_rate);
        }
        Cmd::Serve { port, out, tactics, icons, period } => {
            let config = ServeConfig { out, tactics, icons, period, ..ServeConfig::default() };
            let rt = runtime()?;
            rt.block_on(async {
                let listener = serve::bind(port).await?;
                eprintln!("serving on http://127.0.0.1:{port}/");
                serve::serve(listener, config).await
            })?;
        }
        Cmd::Report { compare } => {
            let a = TestReport::load(&compare[0])?;
            let b = TestReport::load(&compare[1])?;
            print!("{}", comparison(&a, &b, &compare[0], &compare[1]));
        }
    }
    Ok(())
}

fn comparison(a: &TestReport, b: &TestReport, pa: &Path, pb: &Path) -> String {
    let rows: [(&str, String, String); 8] = [
        ("game", a.game.to_string(), b.game.to_string()),
        ("seed", a.seed.to_string(), b.seed.to_string()),
        ("score", a.score.to_string(), b.score.to_string()),
        ("level", a.level.to_string(), b.level.to_string()),
        ("actions", a.actions_issued.to_string(), b.actions_issued.to_string()),
        ("valid rate", format!("{:.3}", a.valid_action_rate), format!("{:.3}", b.valid_action_rate)),
        ("fallback rate", format!("{:.3}", a.fallback_rate), format!("{:.3}", b.fallback_rate)),
        ("signatures", a.distinct_signatures.to_string(), b.distinct_signatures.to_string()),
    ];
    let (na, nb) = (pa.display().to_string(), pb.display().to_string());
    let wa = rows.iter().map(|r| r.1.len()).chain([na.len()]).max().unwrap_or(0);
    let mut s = format!("{:<14} {:>wa$}  {}\n", "", na, nb);
    for (name, va, vb) in rows {
        s += &format!("{name:<14} {va:>wa$}  {vb}\n");
    }
    s
}
