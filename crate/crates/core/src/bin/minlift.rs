use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minlift::cli::{self, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "minlift", version, about = "Injectivity criteria and extensions for minimal-surface lifts of harmonic maps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate criteria on the grid
    Check(Common),
    /// Trace geodesics and check the bound along them
    Trace(Common),
    /// Export the lifted surface as an OBJ mesh
    Lift(Common),
    /// Sample the spatial extension
    Extend(Common),
    /// Scan the lift for self-intersections
    Oracle(Common),
    /// Run everything enabled in the configuration
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog map to use when no configuration is given
    #[arg(long)]
    map: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Polar grid as <rings>x<angles>
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated criterion variants
    #[arg(long, value_delimiter = ',')]
    variant: Vec<String>,
}

fn load(c: &Common) -> minlift::error::Result<ExperimentConfig> {
    let mut cfg = match (&c.config, &c.map) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)?;
            ExperimentConfig::from_toml(&text).map_err(|e| minlift::error::Error::Config(format!("{}: {e}", p.display())))?
        }
        (None, Some(name)) => {
            let mut cfg = ExperimentConfig::default();
            cfg.map.name = Some(name.clone());
            cfg
        }
        (None, None) => return Err(minlift::error::Error::Config("give --config <path> or --map <name>".into())),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(g) = &c.grid {
        let (nr, nt) = cli::parse_grid(g)?;
        cfg.grid.nr = nr;
        cfg.grid.ntheta = nt;
    }
    if !c.variant.is_empty() {
        cfg.criteria.variants = c.variant.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (cmd, common) = match &args.command {
        Cmd::Check(c) => (Command::Check, c),
        Cmd::Trace(c) => (Command::Trace, c),
        Cmd::Lift(c) => (Command::Lift, c),
        Cmd::Extend(c) => (Command::Extend, c),
        Cmd::Oracle(c) => (Command::Oracle, c),
        Cmd::Report(c) => (Command::Report, c),
    };
    let result = load(common).and_then(|cfg| {
        let out = common
            .out
            .clone()
            .or_else(|| cfg.run.output.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("minlift-out"));
        eprintln!("seed {}", cfg.seed);
        cli::run(cmd, &cfg, &out)
    });
    match result {
        Ok(o) => {
            for r in &o.report.criteria {
                println!("{:<20} {:?}  min margin {:.6e}", r.variant, r.verdict, r.min_margin);
            }
            for e in &o.report.criterion_errors {
                println!("{:<20} error: {}", e.variant, e.error);
            }
            if let Some(c) = &o.report.oracle {
                println!("collision scan: {} (min gap {:.3e}, decorrelation {:.3e})", if c.collision { "collision" } else { "none" }, c.min_gap, c.decorrelation_radius);
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
