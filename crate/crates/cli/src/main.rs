//! Experiment runner: trains epsilon grids, sweeps weight-loss landscapes,
//! computes Hessian spectra, and runs the self-verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use advsharp::config::{DatasetConfig, ExperimentConfig};
use advsharp::landscape::{alpha_grid, curvature_at_zero, sweep, LandscapeProfile};
use advsharp::perturb::PerturbationKind;
use advsharp::report::{
    accuracy_csv, curvature_csv, landscape_csv, line_plot_svg, spectrum_csv, write_text,
    AccuracyRow, Series,
};
use advsharp::spectrum::spectrum_of_checkpoint;
use advsharp::train::{evaluate, generalization_gap, train_final, Checkpoint};
use advsharp::verify::{report_json, run_suite};
use advsharp::Error;

#[derive(Parser)]
#[command(name = "advsharp", version, about)]
struct Cli {
    /// JSON experiment config (required by train/landscape/spectrum).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the dataset directory from the config.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the training seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for independent grid points (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one checkpoint per grid entry and write the accuracy table.
    Train,
    /// Sweep weight-loss landscapes for existing checkpoints.
    Landscape,
    /// Compute Hessian spectra for existing checkpoints.
    Spectrum,
    /// Run the self-verification suite against synthetic fixtures.
    Verify {
        /// Run only checks whose name contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::InvalidSpec(_) => 2,
                Error::Data(_)
                | Error::Format(_)
                | Error::Consistency(_)
                | Error::Io { .. }
                | Error::MissingCheckpoint { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> advsharp::Result<ExitCode> {
    if let Command::Verify { only } = &cli.command {
        return cmd_verify(only.as_deref(), cli.out.as_deref());
    }

    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(dir) = cli.data_dir {
        if let DatasetConfig::Mnist2 { data_dir } = &mut cfg.dataset {
            *data_dir = dir;
        }
    }
    if let Some(out) = cli.out {
        cfg.outputs = out;
    }
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Train => cmd_train(&cfg),
        Command::Landscape => cmd_landscape(&cfg),
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Verify { .. } => unreachable!(),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(cfg: &ExperimentConfig) -> advsharp::Result<()> {
    use rayon::prelude::*;
    std::fs::create_dir_all(&cfg.outputs)
        .map_err(|e| Error::Config(format!("output dir {}: {e}", cfg.outputs.display())))?;
    let (train_data, test_data) = cfg.load_dataset()?;
    // independent grid points run in the worker pool; results keep grid order
    let rows: Vec<AccuracyRow> = cfg
        .grids
        .par_iter()
        .map(|spec| {
            let ckpt = train_final(&train_data, cfg.train.build(*spec))?;
            ckpt.save(&cfg.checkpoint_path(spec))?;
            let eval_spec = spec.evaluation();
            let w = ckpt.weights();
            let train_eval = evaluate(&train_data, &w, &eval_spec)?;
            let test_eval = evaluate(&test_data, &w, &eval_spec)?;
            let gap = generalization_gap(&train_eval, &test_eval)?;
            Ok(AccuracyRow {
                epsilon: spec.epsilon,
                kind: spec.kind,
                train_acc: train_eval.robust_accuracy,
                test_acc: test_eval.robust_accuracy,
                gap,
            })
        })
        .collect::<advsharp::Result<_>>()?;
    for (spec, row) in cfg.grids.iter().zip(&rows) {
        println!(
            "trained {}: train {:.2} test {:.2} gap {:+.2}",
            spec.tag(),
            row.train_acc,
            row.test_acc,
            row.gap
        );
    }
    write_text(&cfg.outputs.join("accuracy.csv"), &accuracy_csv(&rows))?;
    Ok(())
}

fn load_checkpoints(cfg: &ExperimentConfig) -> advsharp::Result<Vec<Checkpoint>> {
    cfg.grids
        .iter()
        .map(|spec| {
            let path = cfg.checkpoint_path(spec);
            if !path.exists() {
                return Err(Error::MissingCheckpoint {
                    epsilon: spec.epsilon,
                    path,
                });
            }
            Checkpoint::load(&path)
        })
        .collect()
}

fn cmd_landscape(cfg: &ExperimentConfig) -> advsharp::Result<()> {
    let (train_data, _) = cfg.load_dataset()?;
    let checkpoints = load_checkpoints(cfg)?;
    let alphas = alpha_grid(cfg.landscape.points, cfg.landscape.half_range);
    let profiles: Vec<LandscapeProfile> = cfg
        .grids
        .iter()
        .zip(&checkpoints)
        .map(|(spec, ckpt)| {
            sweep(
                &train_data,
                ckpt,
                spec,
                &alphas,
                cfg.landscape.direction_seed,
            )
        })
        .collect::<advsharp::Result<_>>()?;

    write_text(
        &cfg.outputs.join("landscape.csv"),
        &landscape_csv(&profiles),
    )?;

    let curvatures: Vec<(f64, PerturbationKind, f64)> = profiles
        .iter()
        .map(|p| Ok((p.spec.epsilon, p.spec.kind, curvature_at_zero(p)?)))
        .collect::<advsharp::Result<_>>()?;
    write_text(
        &cfg.outputs.join("landscape_curvature.csv"),
        &curvature_csv(&curvatures),
    )?;

    // one overlay plot per (kind, norm) pair present in the grid
    let mut groups: Vec<(PerturbationKind, Vec<&LandscapeProfile>)> = Vec::new();
    for p in &profiles {
        match groups.iter_mut().find(|(k, _)| *k == p.spec.kind) {
            Some((_, list)) => list.push(p),
            None => groups.push((p.spec.kind, vec![p])),
        }
    }
    for (kind, list) in groups {
        let series: Vec<Series> = list
            .iter()
            .map(|p| Series {
                label: format!("eps={:.4}", p.spec.epsilon),
                points: p
                    .alphas
                    .iter()
                    .copied()
                    .zip(p.losses.iter().copied())
                    .collect(),
            })
            .collect();
        let svg = line_plot_svg(
            &format!("weight loss landscape ({} {})", kind.family(), kind.norm()),
            "alpha",
            "loss",
            &series,
        );
        write_text(
            &cfg.outputs
                .join(format!("landscape_{}_{}.svg", kind.family(), kind.norm())),
            &svg,
        )?;
        println!(
            "landscape: {} curves for {} {}",
            list.len(),
            kind.family(),
            kind.norm()
        );
    }
    Ok(())
}

fn cmd_spectrum(cfg: &ExperimentConfig) -> advsharp::Result<()> {
    let (train_data, _) = cfg.load_dataset()?;
    let checkpoints = load_checkpoints(cfg)?;
    let rows: Vec<_> = checkpoints
        .iter()
        .map(|ckpt| spectrum_of_checkpoint(&train_data, ckpt, cfg.spectrum_top_k))
        .collect::<advsharp::Result<_>>()?;
    for row in &rows {
        println!(
            "spectrum eps={:.4}: top eigenvalue {:.6e} (||w|| {:.4})",
            row.epsilon, row.eigenvalues[0], row.w_norm
        );
    }
    write_text(&cfg.outputs.join("spectrum.csv"), &spectrum_csv(&rows))?;
    Ok(())
}

fn cmd_verify(only: Option<&str>, out: Option<&std::path::Path>) -> advsharp::Result<ExitCode> {
    let results = run_suite(only);
    if results.is_empty() {
        return Err(Error::Config(format!(
            "no verification check matches {:?}",
            only.unwrap_or("")
        )));
    }
    let report = report_json(&results);
    println!("{report}");
    if let Some(dir) = out {
        write_text(&dir.join("verify.json"), &report)?;
    }
    let all_pass = results.iter().all(|r| r.pass);
    for r in &results {
        eprintln!(
            "{} {} (metric {:.3e}, tolerance {:.3e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.metric,
            r.tolerance
        );
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
