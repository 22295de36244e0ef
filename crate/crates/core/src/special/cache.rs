//! On-disk cache of special-function grids as JSON with a checksum header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::special::grid::{SpecialFunction, SpecialGrid};

pub const GRID_FORMAT_VERSION: u32 = 1;
pub const GRID_CACHE_ENV: &str = "CYCLE_DENSITY_GRID_CACHE";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub function: SpecialFunction,
    pub mesh_step: f64,
    pub steps_per_unit: usize,
    pub v_max: usize,
    pub asymptotic_crossover: f64,
    pub version: u32,
    pub checksum: String,
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    header: GridHeader,
    knots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CacheOutcome {
    Loaded,
    Built,
    /// The file existed but was unusable; the reason is kept for logging.
    Rebuilt(String),
}

pub fn checksum(
    function: SpecialFunction,
    steps_per_unit: usize,
    v_max: usize,
    knots: &[f64],
) -> String {
    let mut h = Sha256::new();
    h.update(function.name().as_bytes());
    h.update((steps_per_unit as u64).to_le_bytes());
    h.update((v_max as u64).to_le_bytes());
    for k in knots {
        h.update(k.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn file_name(function: SpecialFunction, v_max: usize, steps_per_unit: usize) -> String {
    format!(
        "{}-vmax{}-steps{}.json",
        function.name(),
        v_max,
        steps_per_unit
    )
}

pub fn save(grid: &SpecialGrid, path: &Path) -> Result<()> {
    let header = GridHeader {
        function: grid.function(),
        mesh_step: grid.mesh_step(),
        steps_per_unit: grid.steps_per_unit(),
        v_max: grid.v_max_units(),
        asymptotic_crossover: grid.asymptotic_crossover(),
        version: GRID_FORMAT_VERSION,
        checksum: checksum(
            grid.function(),
            grid.steps_per_unit(),
            grid.v_max_units(),
            grid.knot_values(),
        ),
    };
    let file = GridFile {
        header,
        knots: grid.knot_values().to_vec(),
    };
    let text = serde_json::to_string(&file).map_err(|e| Error::GridFile(e.to_string()))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SpecialGrid> {
    let text = fs::read_to_string(path)?;
    let file: GridFile = serde_json::from_str(&text)
        .map_err(|e| Error::GridFile(format!("unreadable grid file: {e}")))?;
    let h = &file.header;
    if h.version != GRID_FORMAT_VERSION {
        return Err(Error::GridFile(format!(
            "grid file version {} does not match {}",
            h.version, GRID_FORMAT_VERSION
        )));
    }
    let sum = checksum(h.function, h.steps_per_unit, h.v_max, &file.knots);
    if sum != h.checksum {
        return Err(Error::GridFile("grid file checksum mismatch".into()));
    }
    SpecialGrid::from_parts(
        h.function,
        h.steps_per_unit,
        h.v_max,
        file.knots,
        h.asymptotic_crossover,
    )
}

/// Loads the grid from `dir`, building and writing it when the file is
/// missing, stale or corrupt.
pub fn load_or_build(
    dir: &Path,
    function: SpecialFunction,
    v_max: usize,
    steps_per_unit: usize,
) -> Result<(SpecialGrid, CacheOutcome)> {
    let path: PathBuf = dir.join(file_name(function, v_max, steps_per_unit));
    let outcome = if path.exists() {
        match load(&path) {
            Ok(g) => return Ok((g, CacheOutcome::Loaded)),
            Err(e) => {
                log::warn!("rebuilding {}: {e}", path.display());
                CacheOutcome::Rebuilt(e.to_string())
            }
        }
    } else {
        CacheOutcome::Built
    };
    let grid = SpecialGrid::build(function, v_max, steps_per_unit)?;
    save(&grid, &path)?;
    Ok((grid, outcome))
}
