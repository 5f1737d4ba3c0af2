//! Iterative strategies that drive an arbitrary placement to a stable state:
//! full row/column sorting passes, the four-phase odd-even exchange cycle and
//! the greedy maximal-energy swap.
//!
//! Convergence is certified by the energy `E = sum over cells of c_1*x + c_2*y`
//! (generalised to `sum_l c_l * p_l` in `d` dimensions). Every exchange of an
//! out-of-order adjacent pair raises it, or leaves it equal when the pair is
//! only out of order through a tie-break. [`rank_energy`] evaluates the same
//! sum on per-axis ranks and rises strictly on every such exchange.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GridError, Result};
use crate::grid::{cmp_on_axis, is_stable_fast, Grid};

/// Energy of a grid: exact when every coordinate is integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EnergyValue {
    Exact(i128),
    Real(f64),
}

impl EnergyValue {
    pub fn as_f64(self) -> f64 {
        match self {
            EnergyValue::Exact(v) => v as f64,
            EnergyValue::Real(v) => v,
        }
    }
}

impl PartialOrd for EnergyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (EnergyValue::Exact(a), EnergyValue::Exact(b)) => Some(a.cmp(b)),
            _ => self.as_f64().partial_cmp(&other.as_f64()),
        }
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyValue::Exact(v) => write!(f, "{v}"),
            EnergyValue::Real(v) => write!(f, "{v}"),
        }
    }
}

const EXACT_LIMIT: f64 = 9.007_199_254_740_992e15; // 2^53

pub fn energy(g: &Grid) -> EnergyValue {
    let integral = g
        .points()
        .points()
        .iter()
        .flat_map(|p| &p.coords)
        .all(|v| v.fract() == 0.0 && v.abs() < EXACT_LIMIT);
    let d = g.dim();
    if integral {
        let mut total: i128 = 0;
        for cell in 0..g.cell_count() {
            let p = g.point_at_linear(cell);
            for axis in 0..d {
                let c = (g.coord_of(cell, axis) + 1) as i128;
                total += c * p.coords[axis] as i128;
            }
        }
        EnergyValue::Exact(total)
    } else {
        let mut total = 0.0;
        for cell in 0..g.cell_count() {
            let p = g.point_at_linear(cell);
            for axis in 0..d {
                total += (g.coord_of(cell, axis) + 1) as f64 * p.coords[axis];
            }
        }
        EnergyValue::Real(total)
    }
}

/// `ranks[axis][id - 1]` is the 1-based rank of the point under that axis
/// comparator.
fn axis_ranks(g: &Grid) -> Vec<Vec<u64>> {
    let pts = g.points().points();
    (0..g.dim())
        .map(|axis| {
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_unstable_by(|&a, &b| cmp_on_axis(&pts[a], &pts[b], axis));
            let mut ranks = vec![0; pts.len()];
            for (r, &i) in order.iter().enumerate() {
                ranks[i] = r as u64 + 1;
            }
            ranks
        })
        .collect()
}

/// The energy sum evaluated on per-axis comparator ranks instead of raw
/// coordinates. Strictly increases with every exchange of an out-of-order
/// adjacent pair, ties included.
pub fn rank_energy(g: &Grid) -> u128 {
    let ranks = axis_ranks(g);
    let mut total = 0u128;
    for cell in 0..g.cell_count() {
        let id = g.placement().id_at(cell);
        for (axis, r) in ranks.iter().enumerate() {
            total += (g.coord_of(cell, axis) as u128 + 1) * r[id - 1] as u128;
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    RowSort,
    ColumnSort,
    OddColExchange,
    EvenColExchange,
    OddRowExchange,
    EvenRowExchange,
    MaxSwap,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::RowSort => "row-sort",
            StepKind::ColumnSort => "column-sort",
            StepKind::OddColExchange => "odd-col-exchange",
            StepKind::EvenColExchange => "even-col-exchange",
            StepKind::OddRowExchange => "odd-row-exchange",
            StepKind::EvenRowExchange => "even-row-exchange",
            StepKind::MaxSwap => "max-swap",
        }
    }

    /// Axis and parity of an exchange phase: `(zero-based axis, first lower
    /// coordinate)`. Odd phases pair 1-2, 3-4, ...; even phases pair 2-3, ...
    fn exchange(self) -> Option<(usize, usize)> {
        match self {
            StepKind::OddColExchange => Some((0, 0)),
            StepKind::EvenColExchange => Some((0, 1)),
            StepKind::OddRowExchange => Some((1, 0)),
            StepKind::EvenRowExchange => Some((1, 1)),
            _ => None,
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    FullPass,
    OddEvenCycle,
    MaxSwap,
}

impl Strategy {
    pub fn phases(self) -> &'static [StepKind] {
        match self {
            Strategy::FullPass => &[StepKind::RowSort, StepKind::ColumnSort],
            Strategy::OddEvenCycle => &[
                StepKind::OddColExchange,
                StepKind::EvenColExchange,
                StepKind::OddRowExchange,
                StepKind::EvenRowExchange,
            ],
            Strategy::MaxSwap => &[StepKind::MaxSwap],
        }
    }
}

fn require_planar(g: &Grid) -> Result<()> {
    if g.dim() != 2 {
        return Err(GridError::UnsupportedDimension {
            expected: 2,
            found: g.dim(),
        });
    }
    Ok(())
}

/// Sorts every line along the zero-based `axis` with that axis comparator.
/// Lines are independent and are sorted in parallel against the pre-pass grid.
fn sort_lines(g: &mut Grid, axis: usize) -> bool {
    let n = g.n();
    let stride = g.stride(axis);
    let starts: Vec<usize> = (0..g.cell_count())
        .filter(|&c| g.coord_of(c, axis) == 0)
        .collect();
    let snapshot = &*g;
    let sorted: Vec<(usize, Vec<usize>)> = starts
        .par_iter()
        .map(|&start| {
            let mut ids: Vec<usize> = (0..n)
                .map(|t| snapshot.placement().id_at(start + t * stride))
                .collect();
            ids.sort_by(|&a, &b| {
                cmp_on_axis(
                    snapshot.point(a).expect("placed id"),
                    snapshot.point(b).expect("placed id"),
                    axis,
                )
            });
            (start, ids)
        })
        .collect();
    let mut cell_ids = g.placement().cell_ids().to_vec();
    for (start, ids) in sorted {
        for (t, id) in ids.into_iter().enumerate() {
            cell_ids[start + t * stride] = id;
        }
    }
    let changed = cell_ids != g.placement().cell_ids();
    if changed {
        g.placement_mut().set_cell_ids(&cell_ids);
    }
    changed
}

/// The disjoint adjacent cell pairs `(lower, upper)` compared in one
/// exchange phase of an `n x n` grid, as linear cell positions.
pub fn exchange_pairs(n: usize, kind: StepKind) -> Vec<(usize, usize)> {
    let Some((axis, parity)) = kind.exchange() else {
        return Vec::new();
    };
    let stride = if axis == 0 { 1 } else { n };
    let mut pairs = Vec::new();
    for line in 0..n {
        let mut t = parity;
        while t + 1 < n {
            let lower = if axis == 0 { line * n + t } else { t * n + line };
            pairs.push((lower, lower + stride));
            t += 2;
        }
    }
    pairs
}

fn exchange_phase(g: &mut Grid, kind: StepKind) -> bool {
    let (axis, _) = kind.exchange().expect("exchange kind");
    let pairs = exchange_pairs(g.n(), kind);
    let snapshot = &*g;
    let swaps: Vec<(usize, usize)> = pairs
        .into_par_iter()
        .filter(|&(lo, hi)| {
            cmp_on_axis(snapshot.point_at_linear(lo), snapshot.point_at_linear(hi), axis)
                == Ordering::Greater
        })
        .collect();
    for &(lo, hi) in &swaps {
        g.placement_mut().swap_cells(lo, hi);
    }
    !swaps.is_empty()
}

/// Sorts every row by the axis-1 comparator, then every column by the
/// axis-2 comparator.
pub fn full_pass(g: &Grid) -> Result<(Grid, bool)> {
    require_planar(g)?;
    let mut out = g.clone();
    let rows = sort_lines(&mut out, 0);
    let cols = sort_lines(&mut out, 1);
    Ok((out, rows || cols))
}

/// One data-parallel exchange phase: every designated pair that is out of
/// order in the input grid is swapped.
pub fn odd_even_step(g: &Grid, kind: StepKind) -> Result<(Grid, bool)> {
    require_planar(g)?;
    if kind.exchange().is_none() {
        return Err(GridError::InvalidArgument(format!(
            "{kind} is not an exchange phase"
        )));
    }
    let mut out = g.clone();
    let changed = exchange_phase(&mut out, kind);
    Ok((out, changed))
}

/// Greedy step: on an unstable grid, swaps the pair of cells whose exchange
/// raises the energy the most. Pairs are ranked by (energy gain, rank-energy
/// gain) so that tie-only disorder still makes progress; among equal gains
/// the lexicographically smallest cell pair wins. Stable grids are returned
/// unchanged.
pub fn max_energy_swap_pass(g: &Grid) -> Result<(Grid, bool)> {
    require_planar(g)?;
    let mut out = g.clone();
    let changed = max_swap_in_place(&mut out);
    Ok((out, changed))
}

fn max_swap_in_place(g: &mut Grid) -> bool {
    if is_stable_fast(g) {
        return false;
    }
    let ranks = axis_ranks(g);
    let d = g.dim();
    let mut order: Vec<usize> = (0..g.cell_count()).collect();
    order.sort_by_cached_key(|&c| g.index_of(c));

    let mut best: Option<((f64, i128), usize, usize)> = None;
    for (ai, &a) in order.iter().enumerate() {
        let pa = g.point_at_linear(a);
        let ida = pa.id;
        for &b in &order[ai + 1..] {
            let pb = g.point_at_linear(b);
            let mut raw = 0.0;
            let mut ranked: i128 = 0;
            for axis in 0..d {
                let dc = g.coord_of(b, axis) as i128 - g.coord_of(a, axis) as i128;
                if dc == 0 {
                    continue;
                }
                raw += dc as f64 * (pa.coords[axis] - pb.coords[axis]);
                ranked += dc * (ranks[axis][ida - 1] as i128 - ranks[axis][pb.id - 1] as i128);
            }
            let positive = raw > 0.0 || (raw == 0.0 && ranked > 0);
            if !positive {
                continue;
            }
            let better = match best {
                None => true,
                Some(((br, bk), _, _)) => raw > br || (raw == br && ranked > bk),
            };
            if better {
                best = Some(((raw, ranked), a, b));
            }
        }
    }
    match best {
        Some((_, a, b)) => {
            g.placement_mut().swap_cells(a, b);
            true
        }
        None => false,
    }
}

fn apply_step(g: &mut Grid, kind: StepKind) -> bool {
    match kind {
        StepKind::RowSort => sort_lines(g, 0),
        StepKind::ColumnSort => sort_lines(g, 1),
        StepKind::MaxSwap => max_swap_in_place(g),
        _ => exchange_phase(g, kind),
    }
}

/// Phase budget used when none is given: `4 * N^2` for `N` cells.
pub fn default_step_limit(cells: usize) -> usize {
    4 * cells * cells
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub kind: StepKind,
    pub energy: EnergyValue,
    pub changed: bool,
    pub digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SortTrace {
    pub strategy: Strategy,
    pub initial_energy: EnergyValue,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    pub step_count: usize,
    pub final_grid: Grid,
}

impl SortTrace {
    pub fn energies(&self) -> impl Iterator<Item = EnergyValue> + '_ {
        std::iter::once(self.initial_energy).chain(self.steps.iter().map(|s| s.energy))
    }
}

/// Short content hash of a placement (hex of the first 8 SHA-256 bytes).
pub fn placement_digest(g: &Grid) -> String {
    let mut hasher = Sha256::new();
    for &id in g.placement().cell_ids() {
        hasher.update((id as u64).to_le_bytes());
    }
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Applies the strategy's phases in order until the grid is stable or
/// `step_limit` phases have run. At least one phase always runs. Hitting the
/// limit is reported through `converged = false`.
pub fn run_until_stable(
    g: &Grid,
    strategy: Strategy,
    step_limit: usize,
    snapshots: bool,
) -> Result<SortTrace> {
    require_planar(g)?;
    if step_limit == 0 {
        return Err(GridError::InvalidArgument("step limit must be at least 1".into()));
    }
    let mut grid = g.clone();
    let phases = strategy.phases();
    let mut steps = Vec::new();
    let mut converged = false;
    for step in 0..step_limit {
        let kind = phases[step % phases.len()];
        let changed = apply_step(&mut grid, kind);
        steps.push(TraceStep {
            step: step + 1,
            kind,
            energy: energy(&grid),
            changed,
            digest: placement_digest(&grid),
            snapshot: snapshots.then(|| grid.placement().cell_ids().to_vec()),
        });
        if is_stable_fast(&grid) {
            converged = true;
            break;
        }
    }
    Ok(SortTrace {
        strategy,
        initial_energy: energy(g),
        step_count: steps.len(),
        steps,
        converged,
        final_grid: grid,
    })
}
