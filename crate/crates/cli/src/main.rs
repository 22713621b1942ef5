use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use evmg_core::coordinator::{self, Case, Instance, Study};
use evmg_core::upper::Residuals;
use evmg_core::Scenario;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "evmg", version, about = "Bi-level microgrid and EV charging scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pricing loop and write every output file.
    Run {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the microgrid-only, joint and EV-only strategies.
    Strategies {
        #[command(flatten)]
        input: InputArgs,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare charging without and with demand response.
    Cases {
        #[command(flatten)]
        input: InputArgs,
        /// Also write the per-period table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a scenario file; exits with status 1 when it is invalid.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the reference scenario as JSON.
    Scenario {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Scenario JSON file; the built-in reference scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of pricing-loop iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Override the JAYA population size.
    #[arg(long)]
    population: Option<usize>,
    /// Override the JAYA generation count.
    #[arg(long)]
    generations: Option<usize>,
}

impl InputArgs {
    fn instance(&self) -> Result<Instance> {
        let mut scenario = match &self.scenario {
            Some(path) => Scenario::from_path(path).with_context(|| format!("reading {}", path.display()))?,
            None => Scenario::reference(),
        };
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if let Some(iters) = self.iters {
            scenario.settings.iterations = iters;
        }
        if let Some(pop) = self.population {
            scenario.settings.jaya.pop_size = pop;
        }
        if let Some(gens) = self.generations {
            scenario.settings.jaya.max_iter = gens;
        }
        Ok(Instance::new(scenario)?)
    }
}

#[derive(Serialize)]
struct Summary {
    scenario: String,
    seed: u64,
    iterations: usize,
    f1_mg_only: f64,
    f2_ev_only: f64,
    f1_joint: f64,
    f2_joint: f64,
    chosen_iteration: usize,
    distance_to_ideal: f64,
    f1_ev_only: f64,
    f2_mg_only: f64,
    max_upper_residuals: Residuals,
    max_upper_residual: f64,
    max_plan_violation: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_run(inst: &Instance, study: &Study, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let joint = study.joint_record();
    coordinator::write_records_csv(study, create(&out.join("records.csv"))?)?;
    coordinator::write_prices_csv(study, inst, create(&out.join("prices.csv"))?)?;
    joint.schedule.write_csv(create(&out.join("schedule.csv"))?)?;
    joint.plan.write_csv(create(&out.join("charging_plan.csv"))?)?;
    coordinator::write_strategies_csv(&study.strategies(), create(&out.join("strategies.csv"))?)?;
    let case1 = study.case_report(inst, Case::NoDemandResponse);
    let case2 = study.case_report(inst, Case::DemandResponse);
    coordinator::write_cases_csv(&case1, &case2, inst.base_load(), create(&out.join("cases.csv"))?)?;

    let (upper, lower) = study.max_residuals(inst);
    let summary = Summary {
        scenario: inst.scenario.name.clone(),
        seed: inst.scenario.seed,
        iterations: study.records.len(),
        f1_mg_only: study.mg_only.f1,
        f2_ev_only: study.ev_only.f2,
        f1_joint: joint.f1,
        f2_joint: joint.f2,
        chosen_iteration: joint.iteration,
        distance_to_ideal: study.distance(joint),
        f1_ev_only: study.ev_only.f1,
        f2_mg_only: study.mg_only.f2,
        max_upper_residuals: upper,
        max_upper_residual: upper.max(),
        max_plan_violation: lower,
    };
    let mut w = create(&out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_strategies(study: &Study) {
    println!("{:<10} {:>12} {:>12}", "strategy", "F1", "F2");
    for (name, o) in ["mg_only", "joint", "ev_only"].iter().zip(study.strategies()) {
        println!("{:<10} {:>12.4} {:>12.4}", name, o.f1, o.f2);
    }
    let (f1, f2) = study.ideal();
    println!("ideal point ({f1:.4}, {f2:.4}); joint optimum at iteration {}", study.joint_record().iteration);
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { input, out } => {
            let inst = input.instance()?;
            let start = Instant::now();
            let study = coordinator::run_study(&inst)?;
            write_run(&inst, &study, &out)?;
            print_strategies(&study);
            eprintln!("wrote {} in {:.1} s", out.display(), start.elapsed().as_secs_f64());
        }
        Command::Strategies { input, csv } => {
            let inst = input.instance()?;
            let study = coordinator::run_study(&inst)?;
            print_strategies(&study);
            if let Some(path) = csv {
                coordinator::write_strategies_csv(&study.strategies(), create(&path)?)?;
            }
        }
        Command::Cases { input, csv } => {
            let inst = input.instance()?;
            let study = coordinator::run_study(&inst)?;
            let case1 = study.case_report(&inst, Case::NoDemandResponse);
            let case2 = study.case_report(&inst, Case::DemandResponse);
            println!("{:<22} {:>14} {:>14}", "", "case 1", "case 2");
            println!("{:<22} {:>14.4} {:>14.4}", "peak-to-valley (kW)", case1.peak_to_valley, case2.peak_to_valley);
            println!(
                "{:<22} {:>14.4} {:>14.4}",
                "price/load corr.", case1.price_load_correlation, case2.price_load_correlation
            );
            println!("{:<22} {:>14.4} {:>14.4}", "F1", case1.f1, case2.f1);
            println!("{:<22} {:>14.4} {:>14.4}", "F2", case1.f2, case2.f2);
            if let Some(path) = csv {
                coordinator::write_cases_csv(&case1, &case2, inst.base_load(), create(&path)?)?;
            }
        }
        Command::Validate { scenario } => {
            let result = Scenario::from_path(&scenario).and_then(|s| Instance::new(s).map(|_| ()));
            return Ok(match result {
                Ok(()) => {
                    println!("{}: ok", scenario.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    println!("{}: invalid: {e}", scenario.display());
                    ExitCode::FAILURE
                }
            });
        }
        Command::Scenario { out } => {
            let text = Scenario::reference().to_json()?;
            match out {
                Some(path) => fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
