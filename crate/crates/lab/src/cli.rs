use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use rmsmd_core::averaging::rmsmd_to_field;
use rmsmd_core::metric::{msmd_accelerated, Backend};
use rmsmd_core::Space;

use crate::acceptance::{run_criterion, Suite};
use crate::config::ScenarioConfig;
use crate::error::{LabError, Result};
use crate::plot::{emit_plot, render_scatter};
use crate::presets::{preset, PRESET_NAMES};
use crate::runner::{closed_forms, field_of, panel_seed, realize, run_scenario};
use crate::table::{emit_csv, emit_localizations, load_localizations, LocalizationTable};

#[derive(Debug, Parser)]
#[command(name = "rmsmd-lab", version, about = "FFL localization image simulation and RMSMD analysis")]
pub struct Cli {
    /// Master seed (overrides the scenario's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "RMSMD_LAB_OUT", default_value = "rmsmd-out")]
    out: PathBuf,
    /// Replicates per sweep value (overrides the scenario).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one image; writes localization tables and scatter panels.
    Simulate {
        #[arg(long, default_value = "simulate")]
        name: String,
        #[arg(long, default_value_t = 200.0)]
        pitch: f64,
        #[arg(long, default_value_t = 16)]
        rows: usize,
        #[arg(long, default_value_t = 16)]
        cols: usize,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = 25.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Drift d, applied as (d, d).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        drift: f64,
    },
    /// Run a scenario file; writes the sweep CSV and plot.
    Sweep { config: PathBuf },
    /// RMSMD (and RMSE when emitter ids match) between two localization
    /// tables; the second is the reference.
    Metric {
        estimates: PathBuf,
        reference: PathBuf,
        /// Periodic extent `LX,LY`; plane distances when omitted.
        #[arg(long, value_delimiter = ',')]
        torus: Option<Vec<f64>>,
    },
    /// Reproduce a built-in figure preset, or all of them.
    Figures {
        /// fig1f, fig2c, fig3c, fig3d, fig4c, fig4d or all
        preset: String,
    },
    /// Run the acceptance suite; exits 1 if any criterion fails.
    Verify {
        /// Desk scale (16 replicates) instead of 64.
        #[arg(long)]
        quick: bool,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let workers = cli.workers.map(|w| w as usize);
    match &cli.command {
        Command::Simulate {
            name,
            pitch,
            rows,
            cols,
            lambda,
            sigma,
            delta,
            drift,
        } => {
            let mut cfg = ScenarioConfig::from_toml(&format!(
                "name = {name:?}\n[field]\npitch_nm = {pitch:?}\nrows = {rows}\ncols = {cols}\n\
                 [activation]\nmode = \"poisson\"\nlambda = {lambda:?}\n\
                 [error]\ndelta_nm = {delta:?}\ndrift_nm = [{drift:?}, {drift:?}]\n\
                 [sweep]\nsigma_nm = [{sigma:?}]\n"
            ))?;
            cfg.seed = cli.seed.unwrap_or(1);
            simulate(&cfg, *sigma, &cli.out)?;
            Ok(0)
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(config).map_err(|e| LabError::io(config, e))?;
            let cfg = overridden(ScenarioConfig::from_toml(&text)?, cli)?;
            produce(&cfg, &cli.out, workers)?;
            Ok(0)
        }
        Command::Metric {
            estimates,
            reference,
            torus,
        } => {
            metric(estimates, reference, torus.as_deref())?;
            Ok(0)
        }
        Command::Figures { preset: which } => {
            let names: Vec<&str> = if which == "all" {
                PRESET_NAMES.to_vec()
            } else {
                vec![which.as_str()]
            };
            for name in names {
                let cfg = overridden(preset(name)?, cli)?;
                produce(&cfg, &cli.out, workers)?;
            }
            Ok(0)
        }
        Command::Verify { quick } => {
            let mut suite = if *quick { Suite::quick() } else { Suite::full() };
            if let Some(s) = cli.seed {
                suite.seed = s;
            }
            if let Some(r) = cli.replicates {
                suite.replicates = r as usize;
            }
            suite.workers = workers;
            println!(
                "acceptance suite: {} replicates, seed {}",
                suite.replicates, suite.seed
            );
            let mut failed = 0;
            for id in 1..=10 {
                let o = run_criterion(id, &suite);
                println!("{o}");
                failed += usize::from(!o.passed);
            }
            println!("{} of 10 criteria passed", 10 - failed);
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn overridden(mut cfg: ScenarioConfig, cli: &Cli) -> Result<ScenarioConfig> {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicates {
        cfg.replicates = r as usize;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| LabError::io(out, e))
}

/// Sweep CSV, plot and scatter panels for one scenario.
fn produce(cfg: &ScenarioConfig, out: &Path, workers: Option<usize>) -> Result<()> {
    create_dir(out)?;
    let result = run_scenario(cfg, workers)?;
    let csv = out.join(format!("{}.csv", cfg.name));
    emit_csv(&result, &csv)?;
    println!("wrote {}", csv.display());
    let svg = out.join(format!("{}.svg", cfg.name));
    emit_plot(&result, &svg)?;
    println!("wrote {}", svg.display());

    let field = field_of(cfg)?;
    let (axis, _) = cfg.sweep_axis()?;
    for (k, &v) in cfg.plot.panels.iter().enumerate() {
        let real = realize(&field, &cfg.point(v)?, panel_seed(cfg.seed, k))?;
        let label = format!("{} = {v}", axis.as_str());
        for (suffix, points, title) in [
            ("X", &real.image.points, format!("X, {label}")),
            ("Xhat", &real.oracle.points, format!("X̂ by averaging, {label}")),
        ] {
            let path = out.join(format!("{}_panel{}_{suffix}.svg", cfg.name, k + 1));
            render_scatter(points, &field, &title, &path)?;
            println!("wrote {}", path.display());
        }
    }
    let summary = result.summary();
    println!(
        "{:>10} {:>12} {:>12} {:>12} {:>10} {:>10}",
        axis.as_str(),
        "D(X)",
        "D(X̂) oracle",
        "D(X̂) vor.",
        "h(X)",
        "h(X̂)"
    );
    for p in summary {
        println!(
            "{:>10} {:>12.3} {:>12.3} {:>12.3} {:>10.3} {:>10.3}",
            p.value,
            p.rmsmd_x.mean,
            p.rmsmd_xhat_oracle.mean,
            p.rmsmd_xhat_voronoi.mean,
            p.rmse_x,
            p.rmse_xhat
        );
    }
    Ok(())
}

fn simulate(cfg: &ScenarioConfig, sigma: f64, out: &Path) -> Result<()> {
    create_dir(out)?;
    let field = field_of(cfg)?;
    let point = cfg.point(sigma)?;
    let real = realize(&field, &point, cfg.seed)?;
    let x_ids = real.image.source_index.iter().map(|&i| i as i64).collect();
    let xhat_ids = real.oracle.kept_emitters.iter().map(|&i| i as i64).collect();
    let name = &cfg.name;
    for (suffix, table, title) in [
        ("X", LocalizationTable::new(real.image.points.clone(), x_ids), "X"),
        ("Xhat", LocalizationTable::new(real.oracle.points.clone(), xhat_ids), "X̂ by averaging"),
    ] {
        let csv = out.join(format!("{name}_{suffix}.csv"));
        emit_localizations(&table, &csv)?;
        let svg = out.join(format!("{name}_{suffix}.svg"));
        render_scatter(&table.points, &field, title, &svg)?;
        println!("wrote {}\nwrote {}", csv.display(), svg.display());
    }
    let emitters = LocalizationTable::new(
        field.emitters().clone(),
        (0..field.len() as i64).collect(),
    );
    let truth = out.join(format!("{name}_S.csv"));
    emit_localizations(&emitters, &truth)?;
    println!("wrote {}", truth.display());

    let (h_x, h_xhat) = closed_forms(&point, field.len(), cfg.field.pitch_nm)?;
    println!("localizations   = {}", real.image.total());
    println!("rmsmd_X_nm      = {}", rmsmd_to_field(&real.image.points, &field)?);
    println!("rmsmd_Xhat_nm   = {}", rmsmd_to_field(&real.oracle.points, &field)?);
    println!("rmse_X_nm       = {h_x}");
    println!("rmse_Xhat_nm    = {h_xhat}");
    Ok(())
}

fn metric(estimates: &Path, reference: &Path, torus: Option<&[f64]>) -> Result<()> {
    let space = match torus {
        Some(extent) if extent.len() != 2 => {
            return Err(LabError::config("--torus", "expected LX,LY"));
        }
        Some(extent) => Space::torus(extent.to_vec())?,
        None => Space::Euclidean,
    };
    let a = load_localizations(estimates)?;
    let b = load_localizations(reference)?;
    let backend = Backend::KdTree;
    let d = msmd_accelerated(&space, &a.points, &b.points, backend)?;
    println!("points_estimates = {}", a.points.len());
    println!("points_reference = {}", b.points.len());
    println!("rmsmd_nm = {}", d.rmsmd());
    match paired_rmse(&space, &a, &b) {
        Some((v, n)) => println!("rmse_nm = {v}\nrmse_pairs = {n}"),
        None => println!("rmse_nm = n/a (no estimate carries an emitter id present once in the reference)"),
    }
    Ok(())
}

/// RMSE over estimates whose emitter id appears exactly once in the
/// reference.
fn paired_rmse(space: &Space, a: &LocalizationTable, b: &LocalizationTable) -> Option<(f64, usize)> {
    use std::collections::HashMap;
    let mut index: HashMap<i64, Option<usize>> = HashMap::new();
    for (j, &id) in b.emitter_ids.iter().enumerate() {
        if id >= 0 {
            index
                .entry(id)
                .and_modify(|slot| *slot = None)
                .or_insert(Some(j));
        }
    }
    let mut sum = 0.0;
    let mut n = 0;
    for (p, id) in a.points.iter().zip(&a.emitter_ids) {
        if let Some(Some(j)) = index.get(id) {
            sum += space.sq_dist(p, b.points.get(*j));
            n += 1;
        }
    }
    (n > 0).then(|| ((sum / n as f64).sqrt(), n))
}

