//! Command execution.

use std::fs;
use std::io::Write;
use std::path::Path;

use cycle_density::special::cache::{load_or_build, CacheOutcome};
use cycle_density::{SpecialFunction, SpecialGrids};
use rayon::prelude::*;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::render;
use crate::row::{compute_row, RowSettings, SweepRow};

/// Grids from the cache directory when one is configured, built in memory
/// otherwise.
pub fn load_grids(cfg: &RunConfig) -> Result<SpecialGrids, CliError> {
    let Some(dir) = &cfg.grid_cache_path else {
        return Ok(SpecialGrids::build(cfg.steps_per_unit)?);
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let (dickman, _) = load_or_build(
        dir,
        SpecialFunction::Dickman,
        cfg.dickman_v_max,
        cfg.steps_per_unit,
    )?;
    let (buchstab, _) = load_or_build(
        dir,
        SpecialFunction::Buchstab,
        cfg.buchstab_v_max,
        cfg.steps_per_unit,
    )?;
    Ok(SpecialGrids { dickman, buchstab })
}

/// Rows for every admissible pair, in pair order whatever the thread count.
pub fn compute_rows(cfg: &RunConfig, grids: &SpecialGrids) -> Result<Vec<SweepRow>, CliError> {
    let pairs = cfg.pairs()?;
    let settings = RowSettings {
        command: cfg.command,
        quantity: cfg.quantity,
        backend: cfg.backend,
        tol: cfg.tol,
        require_exact: cfg.require_exact,
    };
    let work = || {
        pairs
            .par_iter()
            .map(|&(n, r)| compute_row(n, r, &settings, grids))
            .collect::<Result<Vec<_>, _>>()
    };
    match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {j} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(p) => write_file(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Runs a command. Output is written in full before a failed row turns
/// into a numeric-failure error.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.command == Command::CacheGrids {
        return cache_grids(cfg);
    }
    let grids = load_grids(cfg)?;
    let rows = compute_rows(cfg, &grids)?;
    emit(cfg, &render(cfg.output_format, cfg.command, &rows)?)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.failed()).collect();
    if let Some(first) = failed.first() {
        return Err(CliError::Numeric(format!(
            "{} of {} rows failed; first at (n, r) = ({}, {}): {}",
            failed.len(),
            rows.len(),
            first.n,
            first.r,
            first.status
        )));
    }
    Ok(())
}

fn cache_grids(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cfg
        .grid_cache_path
        .as_ref()
        .expect("cache directory resolved");
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut out = std::io::stdout().lock();
    for (function, v_max) in [
        (SpecialFunction::Dickman, cfg.dickman_v_max),
        (SpecialFunction::Buchstab, cfg.buchstab_v_max),
    ] {
        let (grid, outcome) = load_or_build(dir, function, v_max, cfg.steps_per_unit)?;
        let what = match outcome {
            CacheOutcome::Loaded => "loaded".to_string(),
            CacheOutcome::Built => "built".to_string(),
            CacheOutcome::Rebuilt(why) => format!("rebuilt ({why})"),
        };
        let name = cycle_density::special::cache::file_name(function, v_max, cfg.steps_per_unit);
        writeln!(
            out,
            "{} {} knots={} {what}",
            function.name(),
            dir.join(name).display(),
            grid.knot_values().len()
        )?;
    }
    Ok(())
}
