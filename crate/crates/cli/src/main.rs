use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fstefan::experiments::{
    self, figure2, figure4, figure5, Figure2Settings, Figure4Settings, Figure5Settings,
    LadderConfig, ScenarioConfig,
};
use fstefan::Error;

/// Explicit solver for the fractional Stefan problem.
#[derive(Parser)]
#[command(name = "fstefan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write snapshots, monitors and metadata.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Mushy-region table of two-phase Riemann profiles.
    Figure2 {
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 0.6, 0.75])]
        s: Vec<f64>,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.05, 0.5, 0.9])]
        p2: Vec<f64>,
        #[arg(long, default_value_t = 0.02)]
        dx: f64,
        #[arg(long, default_value = "out/figure2")]
        out: PathBuf,
    },
    /// Finite and infinite propagation of the negative phase.
    Figure4 {
        #[arg(long, default_value = "out/figure4")]
        out: PathBuf,
    },
    /// Expanding, contracting and disappearing water region.
    Figure5 {
        #[arg(long, default_value = "out/figure5")]
        out: PathBuf,
    },
    /// Refinement ladder against a fine reference.
    Converge {
        ladder: PathBuf,
        #[arg(long, default_value = "out/converge")]
        out: PathBuf,
    },
    /// Selfsimilar profiles of a Riemann scenario.
    Profile {
        config: PathBuf,
        #[arg(long, default_value = "out/profile")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let res = experiments::simulate(&cfg, &out)?;
            println!(
                "{}: {} steps, dt = {:.6e}, output in {}",
                cfg.scenario,
                res.series.steps(),
                res.series.dt(),
                out.display()
            );
        }
        Command::Figure2 { s, p2, dx, out } => {
            let settings = Figure2Settings {
                dx,
                ..Figure2Settings::default()
            };
            let rows = figure2(&s, &p2, settings, Some(&out))?;
            println!("s,P2,mushy_width,status");
            for r in rows {
                let w = r.mushy_width.map(|w| w.to_string()).unwrap_or_default();
                println!("{},{},{},{}", r.s, r.p2, w, r.status);
            }
        }
        Command::Figure4 { out } => {
            let rep = figure4(&Figure4Settings::default(), Some(&out))?;
            for c in &rep.cases {
                println!("{}: negative front {:?}", c.name, c.negative_front);
            }
            println!("envelopes hold: {}", rep.envelopes_hold());
            println!("sanity negative set empty: {}", rep.sanity_negative_empty);
        }
        Command::Figure5 { out } => {
            let settings = Figure5Settings::default();
            let rep = figure5(&settings, Some(&out))?;
            println!("time,water,mushy");
            for r in &rep.history {
                println!("{},{},{}", r.time, r.water, r.mushy);
            }
            println!(
                "expand/contract/disappear: {}",
                rep.expands_contracts_disappears()
            );
            println!("envelopes hold: {}", rep.envelopes_hold(settings.dx));
        }
        Command::Converge { ladder, out } => {
            let ladder = LadderConfig::from_path(&ladder)?;
            let rows = experiments::converge(&ladder, Some(&out))?;
            println!("dx,error,ratio");
            for r in rows {
                let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
                println!("{},{},{}", r.dx, r.error, ratio);
            }
        }
        Command::Profile { config, out } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            experiments::profile(&cfg, &out)?;
            println!("profiles written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
