use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, Args, Command, FromArgMatches};
use fracmap_core::Grid;
use fracmap_lab::suites::{calibrate, write_constants, Suite};
use fracmap_lab::{run, ExperimentConfig, EXPERIMENTS};

#[derive(Args)]
struct CalibrateArgs {
    /// Suite id (see `list`).
    suite: String,
    #[arg(long)]
    dim: Option<usize>,
    /// Points per axis (power of two).
    #[arg(long = "grid")]
    grid: Option<usize>,
    /// Box side length.
    #[arg(long = "box")]
    box_length: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constants file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AllArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving one subdirectory per experiment.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cli() -> Command {
    let mut cmd = Command::new("fracmap")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Run fractional-Laplacian experiments and emit JSON/CSV reports")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in EXPERIMENTS {
        cmd = cmd.subcommand(Flags::augment_args(Command::new(e.id).about(e.summary)));
    }
    cmd.subcommand(AllArgs::augment_args(Command::new("all").about("Run every experiment with default settings")))
        .subcommand(CalibrateArgs::augment_args(
            Command::new("calibrate").about("Calibrate a constants suite and write it as JSON"),
        ))
        .subcommand(Command::new("list").about("List experiment ids and calibration suites"))
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    dim: Option<usize>,
    /// Points per axis (power of two).
    #[arg(long = "grid")]
    grid: Option<usize>,
    /// Box side length.
    #[arg(long = "box")]
    box_length: Option<f64>,
    /// Operator order.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated scale list (radii, distances, Lambdas, exponents...).
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Constants file to regress against.
    #[arg(long)]
    constants: Option<PathBuf>,
}

fn print_report(r: &fracmap_lab::Report) {
    for v in &r.verdicts {
        let rel = match v.relation {
            fracmap_lab::report::Relation::AtMost => "<=",
            fracmap_lab::report::Relation::AtLeast => ">=",
        };
        println!(
            "  [{}] {} = {:.6e} {rel} {:.6e}",
            if v.pass { "pass" } else { "FAIL" },
            v.name,
            v.value,
            v.bound
        );
    }
    println!(
        "{}: {} ({:.2}s)",
        r.config.experiment,
        if r.passed { "pass" } else { "FAIL" },
        r.wall_clock_seconds
    );
}

fn dispatch(name: &str, m: &ArgMatches) -> fracmap_lab::Result<bool> {
    match name {
        "list" => {
            for e in EXPERIMENTS {
                println!("{:<24} {}", e.id, e.summary);
            }
            for (id, _) in fracmap_lab::suites::SUITES {
                println!("suite {id}");
            }
            Ok(true)
        }
        "all" => {
            let a = AllArgs::from_arg_matches(m).expect("parsed by clap");
            let mut ok = true;
            for e in EXPERIMENTS {
                let mut cfg = ExperimentConfig::new(e.id);
                cfg.seed = a.seed;
                cfg.out = a.out.as_ref().map(|d| d.join(e.id));
                let r = run(&cfg)?;
                print_report(&r);
                ok &= r.passed;
            }
            Ok(ok)
        }
        "calibrate" => {
            let a = CalibrateArgs::from_arg_matches(m).expect("parsed by clap");
            let suite = Suite::parse(&a.suite)?;
            let cfg = ExperimentConfig {
                dim: a.dim,
                points_per_axis: a.grid,
                box_length: a.box_length,
                ..ExperimentConfig::default()
            };
            cfg.validate()?;
            let (d, n, l) = suite.default_grid();
            let g = Grid::new(a.dim.unwrap_or(d), a.grid.unwrap_or(n), a.box_length.unwrap_or(l))?;
            let file = calibrate(suite, &g, a.seed)?;
            write_constants(&a.out, &file)?;
            for c in &file.constants {
                println!("{:<32} {:.6e}", c.name, c.value);
            }
            Ok(true)
        }
        id => {
            let f = Flags::from_arg_matches(m).expect("parsed by clap");
            let cfg = ExperimentConfig {
                experiment: id.to_string(),
                dim: f.dim,
                points_per_axis: f.grid,
                box_length: f.box_length,
                s: f.s,
                seed: f.seed,
                scales: f.scales,
                out: f.out,
                constants: f.constants,
            };
            let r = run(&cfg)?;
            print_report(&r);
            Ok(r.passed)
        }
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match dispatch(name, sub) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
