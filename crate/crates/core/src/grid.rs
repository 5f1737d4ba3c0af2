//! Core grid types: points, the cyclic lexicographic comparators, stability
//! checking and the direct sort-split-sort construction.
//!
//! Cells are addressed by 1-based index tuples `(c_1, ..., c_d)`. For the
//! planar case `c_1` is the column (left to right) and `c_2` the row, with
//! row 1 at the bottom. Internally cells are stored in a linear order with
//! axis 1 varying fastest, i.e. row-major starting from the bottom row.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};

/// A point with a 1-based insertion id and `d` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: usize,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(id: usize, coords: Vec<f64>) -> Self {
        Self { id, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }
}

/// Compares `p` and `q` along the zero-based `axis`: coordinates are visited
/// cyclically starting at `axis`, the first difference decides, and fully
/// equal points are ordered by id.
///
/// Both points must have the same dimension and `axis < dim`.
#[inline]
pub fn cmp_on_axis(p: &Point, q: &Point, axis: usize) -> Ordering {
    let d = p.coords.len();
    debug_assert_eq!(d, q.coords.len());
    debug_assert!(axis < d);
    for k in 0..d {
        let a = (axis + k) % d;
        match p.coords[a].partial_cmp(&q.coords[a]) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    p.id.cmp(&q.id)
}

/// Strict "smaller than" along the 1-based `axis`.
pub fn total_less(p: &Point, q: &Point, axis: usize) -> Result<bool> {
    if p.dim() != q.dim() {
        return Err(GridError::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if axis == 0 || axis > p.dim() {
        return Err(GridError::AxisOutOfRange { axis, d: p.dim() });
    }
    Ok(cmp_on_axis(p, q, axis - 1) == Ordering::Less)
}

/// Points with ids `1..=len`, stored in id order.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    d: usize,
    points: Vec<Point>,
}

impl PointSet {
    /// Validates dimension, finiteness and the contiguous id range. Points
    /// may be given in any order; they are stored sorted by id.
    pub fn new(d: usize, mut points: Vec<Point>) -> Result<Self> {
        if d < 2 {
            return Err(GridError::DimensionTooSmall(d));
        }
        points.sort_by_key(|p| p.id);
        for (i, p) in points.iter().enumerate() {
            if p.dim() != d {
                return Err(GridError::DimensionMismatch {
                    expected: d,
                    found: p.dim(),
                });
            }
            if p.id != i + 1 {
                return Err(GridError::InvalidIds {
                    id: p.id,
                    expected_max: points.len(),
                });
            }
            if let Some(&value) = p.coords.iter().find(|v| !v.is_finite()) {
                return Err(GridError::NonFiniteCoordinate { id: p.id, value });
            }
        }
        Ok(Self { d, points })
    }

    /// Builds a set from coordinate tuples, assigning ids by position.
    pub fn from_coords<I, C>(d: usize, coords: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: Into<Vec<f64>>,
    {
        let points = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| Point::new(i + 1, c.into()))
            .collect();
        Self::new(d, points)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::from_coords(2, pairs.iter().map(|&(x, y)| vec![x, y]))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, id: usize) -> Option<&Point> {
        id.checked_sub(1).and_then(|i| self.points.get(i))
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// A 1-based cell address `(c_1, ..., c_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex(pub Vec<usize>);

impl GridIndex {
    pub fn new(cell: Vec<usize>) -> Self {
        Self(cell)
    }

    pub fn column(&self) -> usize {
        self.0[0]
    }

    pub fn row(&self) -> usize {
        self.0[1]
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Chebyshev distance in cells.
    pub fn ring_distance(&self, other: &GridIndex) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.abs_diff(b))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Bijection between point ids and linear cell positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    /// `forward[id - 1]` is the linear cell holding `id`.
    forward: Vec<usize>,
    /// `inverse[cell]` is the id stored in that cell.
    inverse: Vec<usize>,
}

impl Placement {
    /// `cell_ids[cell]` is the id stored at that linear position.
    pub fn from_cell_ids(cell_ids: Vec<usize>) -> Result<Self> {
        let len = cell_ids.len();
        let mut forward = vec![usize::MAX; len];
        for (cell, &id) in cell_ids.iter().enumerate() {
            if id == 0 || id > len {
                return Err(GridError::InvalidIds {
                    id,
                    expected_max: len,
                });
            }
            if forward[id - 1] != usize::MAX {
                return Err(GridError::NotBijective(format!("id {id} placed twice")));
            }
            forward[id - 1] = cell;
        }
        Ok(Self {
            forward,
            inverse: cell_ids,
        })
    }

    pub fn cell_of(&self, id: usize) -> Option<usize> {
        id.checked_sub(1).and_then(|i| self.forward.get(i)).copied()
    }

    pub fn id_at(&self, cell: usize) -> usize {
        self.inverse[cell]
    }

    pub fn cell_ids(&self) -> &[usize] {
        &self.inverse
    }

    pub(crate) fn swap_cells(&mut self, a: usize, b: usize) {
        let (ia, ib) = (self.inverse[a], self.inverse[b]);
        self.inverse.swap(a, b);
        self.forward[ia - 1] = b;
        self.forward[ib - 1] = a;
    }

    pub(crate) fn set_cell_ids(&mut self, cell_ids: &[usize]) {
        self.inverse.copy_from_slice(cell_ids);
        for (cell, &id) in self.inverse.iter().enumerate() {
            self.forward[id - 1] = cell;
        }
    }
}

/// An `n^d` arrangement of points, one per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    points: PointSet,
    placement: Placement,
    padding: Vec<bool>,
}

impl Grid {
    /// Places `points` so that linear cell `i` holds `cell_ids[i]`.
    pub fn from_cell_ids(
        points: PointSet,
        n: usize,
        cell_ids: Vec<usize>,
        padding_ids: &[usize],
    ) -> Result<Self> {
        if n == 0 {
            return Err(GridError::ZeroSide);
        }
        let cells = checked_pow(n, points.dim())?;
        if cells != points.len() || cell_ids.len() != cells {
            return Err(GridError::NotBijective(format!(
                "{} cells, {} points, {} cell entries",
                cells,
                points.len(),
                cell_ids.len()
            )));
        }
        let placement = Placement::from_cell_ids(cell_ids)?;
        let mut padding = vec![false; cells];
        for &id in padding_ids {
            if id == 0 || id > cells {
                return Err(GridError::UnknownId(id));
            }
            padding[id - 1] = true;
        }
        Ok(Self {
            n,
            points,
            placement,
            padding,
        })
    }

    /// Places points in id order along the linear cell order.
    pub fn from_id_order(points: PointSet, n: usize) -> Result<Self> {
        let ids = (1..=points.len()).collect();
        Self::from_cell_ids(points, n, ids, &[])
    }

    /// Planar grid from rows listed bottom row first; ids follow that order.
    pub fn from_rows_bottom_up(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GridError::InvalidArgument("rows must form a square".into()));
        }
        let pairs: Vec<(f64, f64)> = rows.iter().flatten().copied().collect();
        Self::from_id_order(PointSet::from_pairs(&pairs)?, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn cell_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub(crate) fn placement_mut(&mut self) -> &mut Placement {
        &mut self.placement
    }

    pub fn point(&self, id: usize) -> Option<&Point> {
        self.points.get(id)
    }

    pub fn point_at_linear(&self, cell: usize) -> &Point {
        &self.points.points[self.placement.id_at(cell) - 1]
    }

    pub fn point_at(&self, index: &GridIndex) -> Result<&Point> {
        Ok(self.point_at_linear(self.linear(index)?))
    }

    pub fn is_padding(&self, id: usize) -> bool {
        id.checked_sub(1)
            .and_then(|i| self.padding.get(i))
            .copied()
            .unwrap_or(false)
    }

    pub fn padding_ids(&self) -> Vec<usize> {
        (1..=self.padding.len()).filter(|&id| self.is_padding(id)).collect()
    }

    pub fn genuine_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.padding.len()).filter(|&id| !self.is_padding(id))
    }

    /// Linear position of a 1-based cell index.
    pub fn linear(&self, index: &GridIndex) -> Result<usize> {
        if index.0.len() != self.dim() || index.0.iter().any(|&c| c == 0 || c > self.n) {
            return Err(GridError::CellOutOfRange(index.0.clone()));
        }
        let mut lin = 0;
        for &c in index.0.iter().rev() {
            lin = lin * self.n + (c - 1);
        }
        Ok(lin)
    }

    pub fn index_of(&self, linear: usize) -> GridIndex {
        let mut rest = linear;
        let cell = (0..self.dim())
            .map(|_| {
                let c = rest % self.n + 1;
                rest /= self.n;
                c
            })
            .collect();
        GridIndex(cell)
    }

    /// Linear stride of the zero-based axis.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    /// Zero-based coordinate of a linear cell along the zero-based axis.
    pub(crate) fn coord_of(&self, linear: usize, axis: usize) -> usize {
        (linear / self.stride(axis)) % self.n
    }

    /// Planar rows, bottom row first, as coordinate pairs.
    pub fn rows_bottom_up(&self) -> Vec<Vec<(f64, f64)>> {
        assert_eq!(self.dim(), 2, "rows_bottom_up needs a planar grid");
        (0..self.n)
            .map(|r| {
                (0..self.n)
                    .map(|c| {
                        let p = self.point_at_linear(r * self.n + c);
                        (p.x(), p.y())
                    })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for Grid {
    /// Planar grids print top row first, like the usual matrix picture.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim() != 2 {
            return write!(f, "Grid(n={}, d={})", self.n, self.dim());
        }
        for r in (0..self.n).rev() {
            for c in 0..self.n {
                let p = self.point_at_linear(r * self.n + c);
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "({},{})", p.x(), p.y())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One failed ordering between two cells adjacent along `axis` (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axis: usize,
    pub lower: GridIndex,
    pub upper: GridIndex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub violations: Vec<Violation>,
}

/// Checks every pair of cells adjacent along each axis. Adjacent pairs are
/// enough because each axis comparator is transitive.
pub fn is_stable(g: &Grid) -> StabilityReport {
    let mut violations = Vec::new();
    for_each_adjacent_violation(g, |axis, lower, upper| {
        violations.push(Violation {
            axis: axis + 1,
            lower: g.index_of(lower),
            upper: g.index_of(upper),
        });
        true
    });
    StabilityReport {
        stable: violations.is_empty(),
        violations,
    }
}

/// Early-exit variant of [`is_stable`].
pub fn is_stable_fast(g: &Grid) -> bool {
    let mut stable = true;
    for_each_adjacent_violation(g, |_, _, _| {
        stable = false;
        false
    });
    stable
}

fn for_each_adjacent_violation(g: &Grid, mut visit: impl FnMut(usize, usize, usize) -> bool) {
    let n = g.n();
    for axis in 0..g.dim() {
        let stride = g.stride(axis);
        for lower in 0..g.cell_count() {
            if g.coord_of(lower, axis) + 1 == n {
                continue;
            }
            let upper = lower + stride;
            let ord = cmp_on_axis(g.point_at_linear(lower), g.point_at_linear(upper), axis);
            if ord != Ordering::Less && !visit(axis, lower, upper) {
                return;
            }
        }
    }
}

/// Smallest `n` with `n^d >= count` (and `n >= 1`).
pub fn side_length_for(count: usize, d: usize) -> usize {
    let mut n = 1usize;
    while n.checked_pow(d as u32).is_some_and(|c| c < count) {
        n += 1;
    }
    n
}

fn checked_pow(n: usize, d: usize) -> Result<usize> {
    n.checked_pow(d as u32)
        .ok_or_else(|| GridError::InvalidArgument(format!("{n}^{d} overflows")))
}

/// A point set extended with auxiliary points up to a full grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Padded {
    pub points: PointSet,
    pub padding_ids: Vec<usize>,
}

/// Appends `n^d - |ps|` copies of the point whose k-th coordinate is one more
/// than the largest k-th coordinate in `ps`. The copies get the highest ids,
/// so under every axis comparator they sort after all genuine points.
pub fn pad_points(ps: &PointSet, n: usize) -> Result<Padded> {
    let cells = checked_pow(n, ps.dim())?;
    if cells < ps.len() {
        return Err(GridError::CapacityTooSmall {
            cells,
            points: ps.len(),
        });
    }
    let mut points = ps.points.clone();
    let mut padding_ids = Vec::with_capacity(cells - ps.len());
    if cells > ps.len() {
        let corner: Vec<f64> = (0..ps.dim())
            .map(|k| {
                ps.points
                    .iter()
                    .map(|p| p.coords[k])
                    .fold(f64::NEG_INFINITY, f64::max)
                    + 1.0
            })
            .map(|v| if v.is_finite() { v } else { 1.0 })
            .collect();
        for id in ps.len() + 1..=cells {
            points.push(Point::new(id, corner.clone()));
            padding_ids.push(id);
        }
    }
    Ok(Padded {
        points: PointSet::new(ps.dim(), points)?,
        padding_ids,
    })
}

/// Pads `ps` to the next full grid and arranges it by repeated
/// sort-and-split: sort by axis 1, cut into `n` blocks (block k gets
/// `c_1 = k`), then recurse into each block on the next axis.
pub fn build_stable(ps: &PointSet) -> Result<Grid> {
    if ps.is_empty() {
        return Err(GridError::EmptyPointSet);
    }
    let n = side_length_for(ps.len(), ps.dim());
    let Padded {
        points,
        padding_ids,
    } = pad_points(ps, n)?;
    let mut ids: Vec<usize> = (1..=points.len()).collect();
    let mut cell_ids = vec![0; points.len()];
    arrange(&points, &mut ids, 0, n, 0, &mut cell_ids);
    Grid::from_cell_ids(points, n, cell_ids, &padding_ids)
}

fn arrange(
    points: &PointSet,
    ids: &mut [usize],
    axis: usize,
    n: usize,
    offset: usize,
    cell_ids: &mut [usize],
) {
    if axis == points.dim() {
        debug_assert_eq!(ids.len(), 1);
        cell_ids[offset] = ids[0];
        return;
    }
    ids.sort_unstable_by(|&a, &b| cmp_on_axis(&points.points[a - 1], &points.points[b - 1], axis));
    let block = ids.len() / n;
    let stride = n.pow(axis as u32);
    for (k, chunk) in ids.chunks_mut(block).enumerate() {
        arrange(points, chunk, axis + 1, n, offset + k * stride, cell_ids);
    }
}

/// Replaces every coordinate axis by ranks `1..=N`. Axis `k` is ranked with
/// the axis-`k` comparator (cyclic lexicographic, then id), so each axis
/// order, and hence every stability verdict, is preserved.
pub fn normalize_ranks(ps: &PointSet) -> Result<PointSet> {
    let d = ps.dim();
    let mut coords = vec![vec![0.0; d]; ps.len()];
    let mut order: Vec<usize> = (0..ps.len()).collect();
    for axis in 0..d {
        order.sort_unstable_by(|&a, &b| cmp_on_axis(&ps.points[a], &ps.points[b], axis));
        for (rank, &i) in order.iter().enumerate() {
            coords[i][axis] = (rank + 1) as f64;
        }
    }
    PointSet::from_coords(d, coords)
}

/// Cell currently holding `id`.
pub fn locate(g: &Grid, id: usize) -> Result<GridIndex> {
    g.placement
        .cell_of(id)
        .map(|cell| g.index_of(cell))
        .ok_or(GridError::UnknownId(id))
}
