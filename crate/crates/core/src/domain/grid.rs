//! The δ-covering grid: a regular lattice of box neighborhoods over the state
//! bounds, plus free-standing centroids added while exploring.
//!
//! Cell ids are flat. Lattice cells use the row-major index of their
//! `(i_d, i_v0, i_v1)` position; cells added by expansion get ids from
//! `lattice_len()` upwards and are never reused.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{Delta, State, StateBounds};
use crate::error::{Error, Result};

const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Distance used by [`CoveringGrid::nearest_centroid`] and for tie-breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Euclidean distance in raw units (meters and m/s mixed).
    #[default]
    Raw,
    /// Euclidean distance after dividing each dimension by its half-width.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringGrid {
    pub(crate) bounds: StateBounds,
    pub(crate) delta: Delta,
    pub(crate) metric: Metric,
    axes: [Vec<f64>; 3],
    pub(crate) active: BTreeMap<CellId, State>,
    pub(crate) extras_added: u32,
    pub(crate) removed: usize,
}

/// Centroid positions along one dimension.
///
/// Spacing is `2δ`, starting at `lower + δ`; the last point is clipped to
/// `upper`. A range that fits in a single neighborhood gets one centroid at
/// its midpoint.
pub fn lattice_axis(lower: f64, upper: f64, half_width: f64) -> Vec<f64> {
    let range = upper - lower;
    let spacing = 2.0 * half_width;
    let n = ((range / spacing) - 1e-9).ceil().max(1.0) as usize;
    if n == 1 {
        return vec![lower + 0.5 * range];
    }
    (0..n)
        .map(|k| (lower + half_width + spacing * k as f64).min(upper))
        .collect()
}

impl CoveringGrid {
    /// Builds the full lattice cover of `bounds`.
    pub fn new(bounds: StateBounds, delta: Delta) -> Result<Self> {
        bounds.check()?;
        delta.check()?;
        let axes: [Vec<f64>; 3] =
            std::array::from_fn(|i| lattice_axis(bounds.lower[i], bounds.upper[i], delta.0[i]));
        let lattice_len = axes.iter().map(Vec::len).product::<usize>();
        if lattice_len > u32::MAX as usize / 2 {
            return Err(Error::InvalidDelta(format!(
                "half-widths {:?} produce {lattice_len} cells",
                delta.0
            )));
        }
        let mut grid = CoveringGrid {
            bounds,
            delta,
            metric: Metric::Raw,
            axes,
            active: BTreeMap::new(),
            extras_added: 0,
            removed: 0,
        };
        for flat in 0..lattice_len {
            let id = CellId(flat as u32);
            let c = grid.lattice_centroid(id).expect("in range");
            grid.active.insert(id, c);
        }
        Ok(grid)
    }

    /// Same lattice, no active cells.
    pub(crate) fn empty_like(&self) -> Self {
        CoveringGrid {
            bounds: self.bounds,
            delta: self.delta,
            metric: self.metric,
            axes: self.axes.clone(),
            active: BTreeMap::new(),
            extras_added: 0,
            removed: self.lattice_len(),
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn bounds(&self) -> &StateBounds {
        &self.bounds
    }

    pub fn delta(&self) -> &Delta {
        &self.delta
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn axis(&self, dim: usize) -> &[f64] {
        &self.axes[dim]
    }

    pub fn lattice_dims(&self) -> [usize; 3] {
        std::array::from_fn(|i| self.axes[i].len())
    }

    pub fn lattice_len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Number of cells removed so far, lattice or expansion.
    pub fn removed_count(&self) -> usize {
        self.removed
    }

    /// Number of centroids ever added by expansion.
    pub fn extras_added(&self) -> u32 {
        self.extras_added
    }

    pub fn is_active(&self, id: CellId) -> bool {
        self.active.contains_key(&id)
    }

    pub fn centroid(&self, id: CellId) -> Option<State> {
        self.active.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellId, State)> + '_ {
        self.active.iter().map(|(id, s)| (*id, *s))
    }

    pub fn is_lattice(&self, id: CellId) -> bool {
        (id.0 as usize) < self.lattice_len()
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> CellId {
        let [_, n1, n2] = self.lattice_dims();
        CellId(((idx[0] * n1 + idx[1]) * n2 + idx[2]) as u32)
    }

    pub fn lattice_index(&self, id: CellId) -> Option<[usize; 3]> {
        if !self.is_lattice(id) {
            return None;
        }
        let [_, n1, n2] = self.lattice_dims();
        let flat = id.0 as usize;
        Some([flat / (n1 * n2), (flat / n2) % n1, flat % n2])
    }

    pub fn lattice_centroid(&self, id: CellId) -> Option<State> {
        self.lattice_index(id)
            .map(|[i, j, k]| State::new(self.axes[0][i], self.axes[1][j], self.axes[2][k]))
    }

    /// Lattice position whose centroid is nearest to `s` in every dimension,
    /// lower index on ties.
    pub fn snap(&self, s: &State) -> [usize; 3] {
        let a = s.to_array();
        std::array::from_fn(|dim| {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (k, c) in self.axes[dim].iter().enumerate() {
                let dist = (c - a[dim]).abs();
                if dist < best_dist {
                    best = k;
                    best_dist = dist;
                }
            }
            best
        })
    }

    /// The neighborhood of a centroid, clipped to the bounds.
    pub fn neighborhood(&self, centroid: &State) -> ([f64; 3], [f64; 3]) {
        let c = centroid.to_array();
        let lo = std::array::from_fn(|i| (c[i] - self.delta.0[i]).max(self.bounds.lower[i]));
        let hi = std::array::from_fn(|i| (c[i] + self.delta.0[i]).min(self.bounds.upper[i]));
        (lo, hi)
    }

    fn in_box(&self, centroid: &State, s: &State) -> bool {
        let c = centroid.to_array();
        let a = s.to_array();
        (0..3).all(|i| {
            let w = self.delta.0[i];
            (a[i] - c[i]).abs() <= w + CONTAIN_TOL * w.max(1.0)
        })
    }

    pub fn distance_sq(&self, a: &State, b: &State) -> f64 {
        let (a, b) = (a.to_array(), b.to_array());
        (0..3)
            .map(|i| {
                let diff = match self.metric {
                    Metric::Raw => a[i] - b[i],
                    Metric::Normalized => (a[i] - b[i]) / self.delta.0[i],
                };
                diff * diff
            })
            .sum()
    }

    /// The active cell whose neighborhood contains `s`.
    ///
    /// When several neighborhoods contain `s` the nearest centroid wins, then
    /// the lowest id.
    pub fn cell_of(&self, s: &State) -> Option<CellId> {
        let a = s.to_array();
        let mut best: Option<(f64, CellId)> = None;
        let mut consider = |id: CellId, c: &State| {
            if self.in_box(c, s) {
                let dist = self.distance_sq(c, s);
                match best {
                    Some((bd, bid)) if (bd, bid) <= (dist, id) => {}
                    _ => best = Some((dist, id)),
                }
            }
        };

        let candidates: [Vec<usize>; 3] = std::array::from_fn(|dim| {
            let axis = &self.axes[dim];
            let spacing = 2.0 * self.delta.0[dim];
            let k0 = ((a[dim] - self.bounds.lower[dim]) / spacing).floor();
            let k0 = if k0.is_finite() { k0 as i64 } else { 0 };
            (k0 - 2..=k0 + 2)
                .filter(|k| *k >= 0 && (*k as usize) < axis.len())
                .map(|k| k as usize)
                .collect()
        });
        for &i in &candidates[0] {
            for &j in &candidates[1] {
                for &k in &candidates[2] {
                    let id = self.flat_index([i, j, k]);
                    if let Some(c) = self.active.get(&id) {
                        consider(id, c);
                    }
                }
            }
        }
        let first_extra = CellId(self.lattice_len() as u32);
        for (id, c) in self.active.range(first_extra..) {
            consider(*id, c);
        }
        best.map(|(_, id)| id)
    }

    pub fn covers(&self, s: &State) -> bool {
        self.cell_of(s).is_some()
    }

    /// The active cell with the nearest centroid, lowest id on ties.
    pub fn nearest_centroid(&self, s: &State) -> Result<CellId> {
        self.active
            .iter()
            .map(|(id, c)| (self.distance_sq(c, s), *id))
            .min_by(|a, b| a.partial_cmp(b).expect("finite distances"))
            .map(|(_, id)| id)
            .ok_or(Error::EmptyGrid)
    }

    /// Draws an active centroid uniformly at random.
    pub fn sample_centroid<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(CellId, State)> {
        if self.active.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let k = rng.gen_range(0..self.active.len());
        let (id, s) = self.active.iter().nth(k).expect("index in range");
        Ok((*id, *s))
    }

    /// Deactivates a cell. Returns false if it was not active.
    pub fn remove(&mut self, id: CellId) -> bool {
        if self.active.remove(&id).is_some() {
            self.removed += 1;
            true
        } else {
            false
        }
    }

    /// Adds `s` (clipped to the bounds) as a new centroid.
    pub fn insert_extra(&mut self, s: State) -> CellId {
        let id = CellId(self.lattice_len() as u32 + self.extras_added);
        self.extras_added += 1;
        self.active.insert(id, self.bounds.clip(&s));
        id
    }

    /// Whether the clipped neighborhood of `centroid` reaches into the
    /// failure set `d < collision_headway`.
    pub fn touches_failure_set(&self, centroid: &State, collision_headway: f64) -> bool {
        let (lo, _) = self.neighborhood(centroid);
        lo[0] < collision_headway
    }

    /// Removes every cell whose neighborhood reaches into the failure set.
    pub fn exclude_failure_set(&mut self, collision_headway: f64) -> usize {
        let doomed: Vec<CellId> = self
            .active
            .iter()
            .filter(|(_, c)| self.touches_failure_set(c, collision_headway))
            .map(|(id, _)| *id)
            .collect();
        for id in &doomed {
            self.remove(*id);
        }
        doomed.len()
    }

    /// First active cell whose neighborhood reaches into the failure set.
    pub fn failure_overlap(&self, collision_headway: f64) -> Option<(CellId, State)> {
        self.iter()
            .find(|(_, c)| self.touches_failure_set(c, collision_headway))
    }

    /// Same bounds, half-widths and therefore the same lattice.
    pub fn same_lattice(&self, other: &CoveringGrid) -> bool {
        self.bounds == other.bounds && self.delta == other.delta
    }
}
