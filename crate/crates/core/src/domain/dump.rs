//! JSON dump of a covering grid together with the run that produced it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{CellId, CoveringGrid, Metric};
use super::state::{Delta, State, StateBounds};
use crate::error::{Error, Result};

pub const DUMP_FORMAT: &str = "almost-safe/safe-set/v1";
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    /// The required number of consecutive in-set runs was observed.
    Validated,
    /// Every cell was pruned.
    ExhaustedEmpty,
    /// The run budget ran out first.
    RunCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStats {
    pub total_runs: usize,
    pub collision_runs: usize,
    pub consecutive_safe_at_exit: usize,
    pub required_runs: usize,
    pub exit_reason: ExitReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeSetDump {
    pub format: String,
    pub tool_version: String,
    pub bounds: StateBounds,
    pub delta: Delta,
    pub metric: Metric,
    pub lattice_dims: [usize; 3],
    pub active_ids: Vec<CellId>,
    pub active_centroids: Vec<State>,
    pub extras_added: u32,
    pub removed_count: usize,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<RunStats>,
}

impl SafeSetDump {
    pub fn from_grid(grid: &CoveringGrid, seed: Option<u64>, config: serde_json::Value) -> Self {
        let (active_ids, active_centroids) = grid.iter().unzip();
        SafeSetDump {
            format: DUMP_FORMAT.to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            bounds: grid.bounds,
            delta: grid.delta,
            metric: grid.metric,
            lattice_dims: grid.lattice_dims(),
            active_ids,
            active_centroids,
            extras_added: grid.extras_added,
            removed_count: grid.removed,
            seed,
            config,
            stats: None,
        }
    }

    pub fn with_stats(mut self, stats: RunStats) -> Self {
        self.stats = Some(stats);
        self
    }

    /// Rebuilds the grid, checking that the recorded cells are consistent
    /// with the lattice implied by the bounds and half-widths.
    pub fn to_grid(&self) -> Result<CoveringGrid> {
        if self.format != DUMP_FORMAT {
            return Err(Error::GridMismatch(format!(
                "unsupported dump format `{}`",
                self.format
            )));
        }
        if self.active_ids.len() != self.active_centroids.len() {
            return Err(Error::GridMismatch(
                "active_ids and active_centroids differ in length".into(),
            ));
        }
        let lattice = CoveringGrid::new(self.bounds, self.delta)?.with_metric(self.metric);
        if lattice.lattice_dims() != self.lattice_dims {
            return Err(Error::GridMismatch(format!(
                "lattice dims {:?} do not match bounds/delta ({:?})",
                self.lattice_dims,
                lattice.lattice_dims()
            )));
        }
        let mut grid = lattice.empty_like();
        let next_extra = grid.lattice_len() as u64 + self.extras_added as u64;
        for (id, c) in self.active_ids.iter().zip(&self.active_centroids) {
            if let Some(expected) = lattice.lattice_centroid(*id) {
                if expected != *c {
                    return Err(Error::GridMismatch(format!(
                        "cell {id} centroid {c:?} is not its lattice point {expected:?}"
                    )));
                }
            } else if id.0 as u64 >= next_extra {
                return Err(Error::GridMismatch(format!(
                    "cell {id} is beyond the recorded expansion count"
                )));
            }
            if !self.bounds.contains(c) {
                return Err(Error::GridMismatch(format!(
                    "centroid {c:?} outside bounds"
                )));
            }
            if grid.active.insert(*id, *c).is_some() {
                return Err(Error::GridMismatch(format!("cell {id} listed twice")));
            }
        }
        grid.extras_added = self.extras_added;
        grid.removed = self.removed_count;
        Ok(grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> CoveringGrid {
        let mut g = CoveringGrid::new(
            StateBounds::car_following(100.0, 30.0).unwrap(),
            Delta::new([10.0, 6.0, 6.0]).unwrap(),
        )
        .unwrap();
        g.remove(CellId(3));
        g.remove(CellId(17));
        g.insert_extra(State::new(33.3, 1.0 / 3.0, 29.999999999999996));
        g
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let g = sample_grid();
        let dump = SafeSetDump::from_grid(&g, Some(42), serde_json::json!({"epsilon": 0.01}));
        let back = SafeSetDump::from_json(&dump.to_json().unwrap()).unwrap();
        assert_eq!(back, dump);
        assert_eq!(back.to_grid().unwrap(), g);
    }

    #[test]
    fn tampered_lattice_centroid_is_rejected() {
        let g = sample_grid();
        let mut dump = SafeSetDump::from_grid(&g, None, serde_json::Value::Null);
        dump.active_centroids[0].d += 1.0;
        assert!(matches!(dump.to_grid(), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let g = sample_grid();
        let dump = SafeSetDump::from_grid(&g, None, serde_json::Value::Null);
        let mut v: serde_json::Value = serde_json::from_str(&dump.to_json().unwrap()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(SafeSetDump::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.json");
        let g = sample_grid();
        SafeSetDump::from_grid(&g, Some(1), serde_json::Value::Null)
            .save(&path)
            .unwrap();
        let back = SafeSetDump::load(&path).unwrap().to_grid().unwrap();
        assert_eq!(back, g);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
