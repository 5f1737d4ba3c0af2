//! Rank configurations, backtracking enumeration of stable placements and the
//! two necessary conditions for uniqueness (bins and submatrices).

use std::fmt;

use serde::Serialize;

use crate::error::{GridError, Result};
use crate::grid::{is_stable_fast, normalize_ranks, side_length_for, Grid, Point, PointSet};

/// Default ceiling on `N = n^2` for exhaustive enumeration.
pub const STATE_GUARD: usize = 16;
/// The search keeps the used set in a `u64`.
const HARD_LIMIT: usize = 64;

/// A rank-normalized planar point set: point `i` is `(i, perm[i - 1])`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RankConfig {
    n: usize,
    perm: Vec<usize>,
}

impl RankConfig {
    pub fn new(n: usize, perm: Vec<usize>) -> Result<Self> {
        let total = n * n;
        if n == 0 {
            return Err(GridError::ZeroSide);
        }
        if perm.len() != total {
            return Err(GridError::InvalidPermutation(total));
        }
        let mut seen = vec![false; total];
        for &v in &perm {
            if v == 0 || v > total || std::mem::replace(&mut seen[v - 1], true) {
                return Err(GridError::InvalidPermutation(total));
            }
        }
        Ok(Self { n, perm })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            perm: (1..=n * n).collect(),
        }
    }

    /// Rank-normalizes a planar set of `n^2` points.
    pub fn from_point_set(ps: &PointSet) -> Result<Self> {
        if ps.dim() != 2 {
            return Err(GridError::UnsupportedDimension {
                expected: 2,
                found: ps.dim(),
            });
        }
        let n = side_length_for(ps.len(), 2);
        if n * n != ps.len() {
            return Err(GridError::InvalidArgument(format!(
                "{} points do not fill a square grid",
                ps.len()
            )));
        }
        let ranked = normalize_ranks(ps)?;
        let mut perm = vec![0; ps.len()];
        for p in ranked.points() {
            perm[p.x() as usize - 1] = p.y() as usize;
        }
        Self::new(n, perm)
    }

    /// The `index`-th permutation of `1..=n^2` in lexicographic order.
    pub fn nth_lexicographic(n: usize, index: u64) -> Result<Self> {
        let total = n * n;
        let count = lexicographic_count(n)?;
        if index >= count {
            return Err(GridError::InvalidArgument(format!(
                "index {index} out of range for {count} configurations"
            )));
        }
        let mut pool: Vec<usize> = (1..=total).collect();
        let mut rest = index;
        let mut perm = Vec::with_capacity(total);
        for k in (0..total).rev() {
            let f = (1..=k as u64).product::<u64>();
            let digit = (rest / f) as usize;
            rest %= f;
            perm.push(pool.remove(digit));
        }
        Self::new(n, perm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn to_point_set(&self) -> PointSet {
        PointSet::from_coords(
            2,
            self.perm
                .iter()
                .enumerate()
                .map(|(i, &y)| vec![(i + 1) as f64, y as f64]),
        )
        .expect("rank configuration is a valid point set")
    }
}

impl fmt::Display for RankConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.perm.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `(n^2)!` as a `u64`; fails beyond `n = 4`.
pub fn lexicographic_count(n: usize) -> Result<u64> {
    (1..=(n * n) as u64)
        .try_fold(1u64, |acc, i| acc.checked_mul(i))
        .ok_or_else(|| GridError::InvalidArgument(format!("({n}^2)! overflows u64")))
}

/// Backtracking over placements of `points` into an `n x n` grid, filling the
/// bottom row left to right, then the next row. A candidate must exceed its
/// left neighbour on axis 1 and its lower neighbour on axis 2.
pub(crate) struct StableSearch {
    n: usize,
    /// `above[axis][a]`: positions `b` with `a < b` on that axis.
    above: [Vec<u64>; 2],
    all: u64,
}

impl StableSearch {
    pub(crate) fn new(points: &[&Point], n: usize) -> Self {
        let len = points.len();
        debug_assert_eq!(len, n * n);
        debug_assert!(len <= HARD_LIMIT);
        let mask = |axis: usize| -> Vec<u64> {
            (0..len)
                .map(|a| {
                    (0..len)
                        .filter(|&b| {
                            crate::grid::cmp_on_axis(points[a], points[b], axis)
                                == std::cmp::Ordering::Less
                        })
                        .fold(0u64, |m, b| m | 1 << b)
                })
                .collect()
        };
        let all = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self {
            n,
            above: [mask(0), mask(1)],
            all,
        }
    }

    /// Visits placements (slot `i` of the slice holds a position into
    /// `points`) until `visit` returns false or `limit` are found.
    pub(crate) fn run(&self, limit: usize, mut visit: impl FnMut(&[usize]) -> bool) -> usize {
        let mut cells = vec![0usize; self.n * self.n];
        let mut found = 0;
        if limit > 0 {
            self.fill(0, 0, &mut cells, &mut found, limit, &mut visit);
        }
        found
    }

    pub(crate) fn count(&self, limit: usize) -> usize {
        self.run(limit, |_| true)
    }

    fn fill(
        &self,
        pos: usize,
        used: u64,
        cells: &mut [usize],
        found: &mut usize,
        limit: usize,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if pos == cells.len() {
            *found += 1;
            return visit(cells) && *found < limit;
        }
        let mut mask = self.all & !used;
        if pos % self.n > 0 {
            mask &= self.above[0][cells[pos - 1]];
        }
        if pos >= self.n {
            mask &= self.above[1][cells[pos - self.n]];
        }
        while mask != 0 {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            cells[pos] = b;
            if !self.fill(pos + 1, used | 1 << b, cells, found, limit, visit) {
                return false;
            }
        }
        true
    }
}

fn check_size(ps: &PointSet, n: usize, allow_large: bool) -> Result<()> {
    if ps.dim() != 2 {
        return Err(GridError::UnsupportedDimension {
            expected: 2,
            found: ps.dim(),
        });
    }
    if n == 0 {
        return Err(GridError::ZeroSide);
    }
    if ps.len() != n * n {
        return Err(GridError::NotBijective(format!(
            "{} points for {} cells",
            ps.len(),
            n * n
        )));
    }
    let limit = if allow_large { HARD_LIMIT } else { STATE_GUARD };
    if ps.len() > limit {
        return Err(GridError::GuardExceeded {
            what: "N",
            size: ps.len(),
            limit,
        });
    }
    Ok(())
}

/// Number of stable placements of `ps` in an `n x n` grid, stopping early at
/// `limit` when given.
pub fn count_stable_placements(
    ps: &PointSet,
    n: usize,
    limit: Option<usize>,
    allow_large: bool,
) -> Result<usize> {
    check_size(ps, n, allow_large)?;
    let refs: Vec<&Point> = ps.points().iter().collect();
    Ok(StableSearch::new(&refs, n).count(limit.unwrap_or(usize::MAX)))
}

/// Every stable placement of `ps`, as linear cell to id vectors.
pub fn stable_placements(ps: &PointSet, n: usize, allow_large: bool) -> Result<Vec<Vec<usize>>> {
    check_size(ps, n, allow_large)?;
    let refs: Vec<&Point> = ps.points().iter().collect();
    let mut out = Vec::new();
    StableSearch::new(&refs, n).run(usize::MAX, |cells| {
        out.push(cells.iter().map(|&i| i + 1).collect());
        true
    });
    Ok(out)
}

pub fn enumerate_stable_states(cfg: &RankConfig, allow_large: bool) -> Result<Vec<Grid>> {
    let ps = cfg.to_point_set();
    stable_placements(&ps, cfg.n, allow_large)?
        .into_iter()
        .map(|cells| Grid::from_cell_ids(ps.clone(), cfg.n, cells, &[]))
        .collect()
}

pub fn count_stable_states(cfg: &RankConfig, limit: Option<usize>, allow_large: bool) -> Result<usize> {
    count_stable_placements(&cfg.to_point_set(), cfg.n, limit, allow_large)
}

/// `(x_bin, y_bin)`: column `k` holds exactly the `k`-th block of `n`
/// axis-1 ranks, and row `k` the `k`-th block of axis-2 ranks.
pub fn check_bin_conditions(g: &Grid) -> Result<(bool, bool)> {
    if g.dim() != 2 {
        return Err(GridError::UnsupportedDimension {
            expected: 2,
            found: g.dim(),
        });
    }
    let ranked = normalize_ranks(g.points())?;
    let n = g.n();
    let block = |rank: f64| (rank as usize - 1) / n;
    let mut x_bin = true;
    let mut y_bin = true;
    for cell in 0..g.cell_count() {
        let p = ranked.get(g.placement().id_at(cell)).expect("placed id");
        x_bin &= block(p.x()) == cell % n;
        y_bin &= block(p.y()) == cell / n;
    }
    Ok((x_bin, y_bin))
}

/// Whether every contiguous `k x k` window of `g` with `k` in `sizes` holds
/// a point set with exactly one stable placement.
pub(crate) fn windows_unique(g: &Grid, sizes: impl IntoIterator<Item = usize>) -> bool {
    let n = g.n();
    sizes.into_iter().filter(|&k| k >= 2).all(|k| {
        (0..=n - k).all(|r0| {
            (0..=n - k).all(|c0| {
                let pts: Vec<&Point> = (0..k * k)
                    .map(|i| g.point_at_linear((r0 + i / k) * n + c0 + i % k))
                    .collect();
                StableSearch::new(&pts, k).count(2) == 1
            })
        })
    })
}

/// True iff every contiguous `k x k` submatrix of the stable grid `g`, for
/// every `k` in `1..=n`, is the only stable placement of its points.
pub fn check_submatrix_unique(cfg: &RankConfig, g: &Grid) -> Result<bool> {
    if g.dim() != 2 {
        return Err(GridError::UnsupportedDimension {
            expected: 2,
            found: g.dim(),
        });
    }
    if g.cell_count() > HARD_LIMIT {
        return Err(GridError::GuardExceeded {
            what: "N",
            size: g.cell_count(),
            limit: HARD_LIMIT,
        });
    }
    if !is_stable_fast(g) {
        return Err(GridError::NotStable);
    }
    if g.n() != cfg.n || RankConfig::from_point_set(g.points())? != *cfg {
        return Err(GridError::ConfigMismatch);
    }
    Ok(windows_unique(g, 1..=g.n()))
}
