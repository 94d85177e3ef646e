//! Set comparison, slicing and experiment statistics.

mod ncap;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use ncap::{
    builtin_battery, load_battery, ncap_battery, parse_battery, pass_counts, write_battery_results,
    NcapKind, NcapOutcome, NcapScenario, PassCounts,
};

use crate::domain::{CoveringGrid, RunStats, State};
use crate::error::{Error, Result};
use crate::quantifier::SafeSetResult;

/// Lattice positions covered by the active centroids, with added centroids
/// snapped to the lattice.
pub fn snapped_cells(grid: &CoveringGrid) -> BTreeSet<[usize; 3]> {
    grid.iter().map(|(_, c)| grid.snap(&c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    /// Active centroids, lattice and added.
    pub active: usize,
    /// Distinct lattice cells after snapping.
    pub cells: usize,
    /// `cells` over the size of the full lattice.
    pub fraction: f64,
}

pub fn volume(grid: &CoveringGrid) -> Volume {
    let cells = snapped_cells(grid).len();
    Volume {
        active: grid.active_len(),
        cells,
        fraction: cells as f64 / grid.lattice_len() as f64,
    }
}

/// Intersection over union of the snapped cell sets. An empty union counts
/// as full agreement.
pub fn iou(grids: &[&CoveringGrid]) -> Result<f64> {
    let (first, rest) = grids
        .split_first()
        .ok_or_else(|| Error::Config("IoU needs at least one set".into()))?;
    if let Some(other) = rest.iter().find(|g| !first.same_lattice(g)) {
        return Err(Error::GridMismatch(format!(
            "lattices differ: {:?} vs {:?}",
            first.lattice_dims(),
            other.lattice_dims()
        )));
    }
    let sets: Vec<_> = grids.iter().map(|g| snapped_cells(g)).collect();
    let mut inter = sets[0].clone();
    let mut union = sets[0].clone();
    for s in &sets[1..] {
        inter.retain(|c| s.contains(c));
        union.extend(s.iter().copied());
    }
    if union.is_empty() {
        return Ok(1.0);
    }
    Ok(inter.len() as f64 / union.len() as f64)
}

/// Active (v0, v1) cells of the lattice layer containing one headway value.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub d_value: f64,
    /// Lattice centroid of the layer.
    pub d_centroid: f64,
    pub v0_axis: Vec<f64>,
    pub v1_axis: Vec<f64>,
    /// Indexed `[v0][v1]`.
    pub cells: Vec<Vec<bool>>,
}

pub fn slice(grid: &CoveringGrid, d_value: f64) -> Result<Slice> {
    let b = grid.bounds();
    if !(b.lower[0]..=b.upper[0]).contains(&d_value) {
        return Err(Error::Config(format!(
            "slice headway {d_value} outside [{}, {}]",
            b.lower[0], b.upper[0]
        )));
    }
    let k = grid.snap(&State::new(d_value, b.lower[1], b.lower[2]))[0];
    let active = snapped_cells(grid);
    let v0_axis = grid.axis(1).to_vec();
    let v1_axis = grid.axis(2).to_vec();
    let cells = (0..v0_axis.len())
        .map(|i| {
            (0..v1_axis.len())
                .map(|j| active.contains(&[k, i, j]))
                .collect()
        })
        .collect();
    Ok(Slice {
        d_value,
        d_centroid: grid.axis(0)[k],
        v0_axis,
        v1_axis,
        cells,
    })
}

impl Slice {
    pub fn count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| **c).count()
    }

    /// Cellwise superset test. Slices of different shape never contain each
    /// other.
    pub fn contains(&self, other: &Slice) -> bool {
        self.v0_axis == other.v0_axis
            && self.v1_axis == other.v1_axis
            && self
                .cells
                .iter()
                .flatten()
                .zip(other.cells.iter().flatten())
                .all(|(a, b)| *a || !*b)
    }

    /// Rows are v0 centroids, columns v1 centroids, entries 0 or 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![format!("v0\\v1@d={}", self.d_centroid)];
        header.extend(self.v1_axis.iter().map(|v| v.to_string()));
        w.write_record(&header)?;
        for (v0, row) in self.v0_axis.iter().zip(&self.cells) {
            let mut rec = vec![v0.to_string()];
            rec.extend(row.iter().map(|c| if *c { "1" } else { "0" }.to_owned()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<slice>", e))?;
        Ok(())
    }
}

/// Mean and sample standard deviation; the deviation of one value is zero.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub runs_mean: f64,
    pub runs_std: f64,
    pub collisions_mean: f64,
    pub collisions_std: f64,
    pub iou: f64,
}

impl Summary {
    pub fn from_parts(parts: &[(&CoveringGrid, &RunStats)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config("nothing to summarize".into()));
        }
        let runs: Vec<f64> = parts.iter().map(|(_, s)| s.total_runs as f64).collect();
        let colls: Vec<f64> = parts.iter().map(|(_, s)| s.collision_runs as f64).collect();
        let grids: Vec<&CoveringGrid> = parts.iter().map(|(g, _)| *g).collect();
        let (runs_mean, runs_std) = mean_std(&runs);
        let (collisions_mean, collisions_std) = mean_std(&colls);
        Ok(Summary {
            count: parts.len(),
            runs_mean,
            runs_std,
            collisions_mean,
            collisions_std,
            iou: iou(&grids)?,
        })
    }
}

pub fn summarize(results: &[SafeSetResult]) -> Result<Summary> {
    let parts: Vec<_> = results.iter().map(|r| (&r.grid, &r.stats)).collect();
    Summary::from_parts(&parts)
}

/// One line of a seed-batch summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sv: String,
    pub s0: String,
    pub epsilon: f64,
    pub summary: Summary,
}

pub const SUMMARY_HEADER: [&str; 6] = [
    "SV",
    "S_0",
    "epsilon",
    "scenario_runs",
    "collision_runs",
    "IoU",
];

/// Writes rows with `mean ± std` cells for the run counts.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.sv.clone(),
            r.s0.clone(),
            r.epsilon.to_string(),
            format!("{:.1} ± {:.1}", s.runs_mean, s.runs_std),
            format!("{:.1} ± {:.1}", s.collisions_mean, s.collisions_std),
            format!("{:.3}", s.iou),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CellId, Delta, ExitReason, StateBounds};

    fn grid() -> CoveringGrid {
        CoveringGrid::new(
            StateBounds::car_following(100.0, 30.0).unwrap(),
            Delta([10.0, 6.0, 6.0]),
        )
        .unwrap()
    }

    fn stats(total: usize, coll: usize) -> RunStats {
        RunStats {
            total_runs: total,
            collision_runs: coll,
            consecutive_safe_at_exit: 0,
            required_runs: 1,
            exit_reason: ExitReason::Validated,
        }
    }

    #[test]
    fn volume_of_fresh_and_pruned_grid() {
        let mut g = grid();
        assert_eq!(volume(&g).cells, 45);
        assert_eq!(volume(&g).fraction, 1.0);
        for i in 0..5 {
            g.remove(CellId(i));
        }
        let v = volume(&g);
        assert_eq!((v.active, v.cells), (40, 40));
        assert_eq!(v.fraction, 40.0 / 45.0);
    }

    #[test]
    fn added_centroid_counts_once_when_snapped() {
        let mut g = grid();
        let id = g.cell_of(&State::new(50.0, 18.0, 18.0)).unwrap();
        g.remove(id);
        g.insert_extra(State::new(49.0, 17.0, 19.0));
        g.insert_extra(State::new(51.0, 19.0, 17.0));
        let v = volume(&g);
        assert_eq!((v.active, v.cells), (46, 45));
    }

    #[test]
    fn iou_edge_cases() {
        let full = grid();
        assert_eq!(iou(&[&full, &full]).unwrap(), 1.0);
        let mut a = grid();
        let mut b = grid();
        for id in 0..45 {
            if id < 20 {
                a.remove(CellId(id));
            } else {
                b.remove(CellId(id));
            }
        }
        assert_eq!(iou(&[&a, &b]).unwrap(), 0.0);
        assert_eq!(iou(&[&b, &a]).unwrap(), 0.0);
        let mut empty = grid();
        for id in 0..45 {
            empty.remove(CellId(id));
        }
        assert_eq!(iou(&[&empty, &empty]).unwrap(), 1.0);
        assert!(iou(&[]).is_err());
    }

    #[test]
    fn iou_rejects_other_lattice() {
        let other = CoveringGrid::new(
            StateBounds::car_following(100.0, 30.0).unwrap(),
            Delta([10.0, 2.0, 2.0]),
        )
        .unwrap();
        assert!(matches!(
            iou(&[&grid(), &other]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn iou_by_hand() {
        let mut a = grid();
        let b = grid();
        for id in 0..9 {
            a.remove(CellId(id));
        }
        // 36 shared cells out of 45
        assert_eq!(iou(&[&a, &b]).unwrap(), 36.0 / 45.0);
    }

    #[test]
    fn slices() {
        let g = grid();
        let s = slice(&g, 90.0).unwrap();
        assert_eq!((s.cells.len(), s.cells[0].len()), (3, 3));
        assert_eq!(s.count(), 9);
        assert_eq!(s.d_centroid, 90.0);
        let mut empty = grid();
        for id in 0..45 {
            empty.remove(CellId(id));
        }
        let e = slice(&empty, 90.0).unwrap();
        assert_eq!(e.count(), 0);
        assert!(s.contains(&e));
        assert!(!e.contains(&s));
        assert!(slice(&g, 101.0).is_err());
    }

    #[test]
    fn slice_csv_shape() {
        let s = slice(&grid(), 10.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "v0\\v1@d=10,6,18,30");
        assert_eq!(lines[1], "6,1,1,1");
    }

    #[test]
    fn summary_statistics() {
        let g = grid();
        let one = Summary::from_parts(&[(&g, &stats(100, 3))]).unwrap();
        assert_eq!((one.runs_mean, one.runs_std, one.iou), (100.0, 0.0, 1.0));
        let (s1, s2) = (stats(100, 2), stats(200, 4));
        let two = Summary::from_parts(&[(&g, &s1), (&g, &s2)]).unwrap();
        assert_eq!(two.runs_mean, 150.0);
        // sqrt(2 * 50^2 / 1)
        assert!((two.runs_std - 70.710678).abs() < 1e-6);
        assert_eq!(two.collisions_mean, 3.0);
    }

    #[test]
    fn summary_csv_header() {
        let g = grid();
        let row = SummaryRow {
            sv: "idm_n".into(),
            s0: "full".into(),
            epsilon: 0.01,
            summary: Summary::from_parts(&[(&g, &stats(100, 3))]).unwrap(),
        };
        let mut buf = Vec::new();
        write_summary_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("SV,S_0,epsilon,scenario_runs,collision_runs,IoU")
        );
        assert_eq!(
            lines.next(),
            Some("idm_n,full,0.01,100.0 ± 0.0,3.0 ± 0.0,1.000")
        );
    }
}
