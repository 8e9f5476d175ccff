use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use citesim_core::engine::{run_ensemble, Checkpoint, RunResult};
use citesim_core::fit::{grid_fit, GridAxis, ParamGrid};
use citesim_core::io::{
    read_distribution, read_run, render_distribution, render_fractions, render_gm, render_shares, write_atomic,
    write_json, write_teams, FitReport,
};
use citesim_core::kernels::KernelSpec;
use citesim_core::population::{gen_team_sizes, team_size_histogram};
use citesim_core::rng::replicate_rng;
use citesim_core::stats::{
    citation_histogram, direct_fraction_by_final_count, direct_share_by_period, distance, geometric_mean_by_team_size,
    histogram_mode, log_binned, GeometricMean,
};
use citesim_core::{Error, Result};
use serde::Serialize;

use crate::config::{prepare, CliConfig, Overrides, TEAM_STREAM};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn gen_teams(mut cfg: CliConfig, n: usize, seed: Option<u64>, out: &Path) -> Result<()> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if n == 0 {
        return Err(Error::Parameter("--n must be >= 1".into()));
    }
    cfg.team_gen.validate()?;
    let teams = gen_team_sizes(&cfg.team_gen, n, &mut replicate_rng(cfg.seed, TEAM_STREAM))?;
    write_teams(out, &teams)?;
    let h = team_size_histogram(teams.as_slice());
    println!(
        "wrote {}: n={} mode={} max={}",
        out.display(),
        teams.len(),
        histogram_mode(&h).unwrap_or(0),
        h.keys().next_back().copied().unwrap_or(0)
    );
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    replicate: u64,
    file: String,
    final_events: u64,
    total_direct: u64,
    modal_count: u64,
    max_count: u64,
    uncited: usize,
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    kernel: &'a KernelSpec,
    n_papers: usize,
    total_events: u64,
    seed: u64,
    replicates: u64,
    checkpoints: &'a [Checkpoint],
    runs: Vec<RunSummary>,
}

pub fn run_file_name(replicate: u64, replicates: u64) -> String {
    let width = (replicates.saturating_sub(1)).to_string().len().max(3);
    format!("run_{replicate:0width$}.json")
}

pub fn simulate(cfg: CliConfig, overrides: &Overrides, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = cfg;
    overrides.apply(&mut cfg);
    let (cfg, teams) = prepare(cfg, seed)?;
    let sim = cfg.simulation();
    let runs = run_ensemble(&sim, &teams, &cfg.kernel)?;

    create_dir(out)?;
    let mut summaries = Vec::with_capacity(runs.len());
    for r in &runs {
        let file = run_file_name(r.metadata.replicate, sim.replicates);
        write_json(&out.join(&file), r)?;
        let fin = r.final_snapshot();
        let h = citation_histogram(fin);
        summaries.push(RunSummary {
            replicate: r.metadata.replicate,
            file,
            final_events: fin.n_cit.iter().sum(),
            total_direct: r.total_direct(),
            modal_count: histogram_mode(&h).unwrap_or(0),
            max_count: h.keys().next_back().copied().unwrap_or(0),
            uncited: fin.n_cit.iter().filter(|&&c| c == 0).count(),
        });
    }
    let summary = EnsembleSummary {
        kernel: &cfg.kernel,
        n_papers: sim.n_papers,
        total_events: sim.total_events,
        seed: sim.seed,
        replicates: sim.replicates,
        checkpoints: &sim.checkpoints,
        runs: summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "wrote {} run(s) and summary.json to {} ({} kernel, {} papers, {} events)",
        runs.len(),
        out.display(),
        cfg.kernel.mode,
        sim.n_papers,
        sim.total_events
    );
    Ok(())
}

/// Keeps labels usable as file-name components.
fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn analyze(cfg: CliConfig, run_path: &Path, checkpoints: &[String], out: &Path) -> Result<()> {
    cfg.binning.validate()?;
    let run: RunResult = read_run(run_path)?;
    let labels: Vec<String> = if checkpoints.is_empty() {
        run.labels().into_iter().map(String::from).collect()
    } else {
        checkpoints.to_vec()
    };
    let snapshots = labels
        .iter()
        .map(|l| {
            run.snapshot(l).ok_or_else(|| {
                Error::Parameter(format!(
                    "no checkpoint {l:?} in {}; available: {}",
                    run_path.display(),
                    run.labels().join(", ")
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // render everything before touching the output directory
    let scheme = &cfg.binning;
    let teams = run.metadata.team_sizes.as_slice();
    let mut files: Vec<(PathBuf, Vec<u8>)> =
        vec![(out.join("shares.csv"), render_shares(&direct_share_by_period(&run)))];
    for s in snapshots {
        let tag = file_label(&s.label);
        files.push((
            out.join(format!("distribution_{tag}.csv")),
            render_distribution(&log_binned(&citation_histogram(s), scheme)),
        ));
        files.push((
            out.join(format!("fractions_{tag}.csv")),
            render_fractions(&direct_fraction_by_final_count(s, scheme)),
        ));
        files.push((
            out.join(format!("gm_{tag}.csv")),
            render_gm(&geometric_mean_by_team_size(s, teams, scheme, GeometricMean::Shifted)),
        ));
    }
    create_dir(out)?;
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    println!(
        "wrote {} file(s) to {} for checkpoint(s) {}",
        files.len(),
        out.display(),
        labels.join(", ")
    );
    Ok(())
}

pub fn compare(cfg: CliConfig, a: &Path, b: &Path) -> Result<()> {
    cfg.binning.validate()?;
    let da = read_distribution(a, &cfg.binning)?;
    let db = read_distribution(b, &cfg.binning)?;
    let report = distance(&da, &db)?;
    println!(
        "distance_decades={} common_bins={} excluded_bins={}",
        report.decades, report.common_bins, report.excluded_bins
    );
    Ok(())
}

pub fn fit(
    cfg: CliConfig,
    overrides: &Overrides,
    seed: Option<u64>,
    target: &Path,
    axes: &[GridAxis],
    out: &Path,
) -> Result<()> {
    let mut cfg = cfg;
    overrides.apply(&mut cfg);
    let grid = ParamGrid::new(axes.to_vec());
    grid.validate()?;
    let (cfg, teams) = prepare(cfg, seed)?;
    let target = read_distribution(target, &cfg.binning)?;
    let result = grid_fit(&grid, &cfg.kernel, &target, &cfg.simulation(), &teams)?;
    let report = FitReport::from(&result);
    write_json(out, &report)?;
    let best: BTreeMap<_, _> = report.best_params.iter().collect();
    println!(
        "best {} objective={} ({} grid points) -> {}",
        best.iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" "),
        report.best_objective,
        report.surface.len(),
        out.display()
    );
    Ok(())
}
