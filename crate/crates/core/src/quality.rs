//! Neighbour estimates from k-rings of a stable grid, the exact oracle they
//! are measured against, and point-set generators (two adversarial, one
//! random).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::{build_stable, locate, pad_points, side_length_for, Grid, GridIndex, PointSet};
use crate::iterate::{default_step_limit, run_until_stable, Strategy};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Euclidean,
    Chebyshev,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|v| v * v).sum::<f64>().sqrt(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
            Metric::Manhattan => diffs.sum(),
        }
    }
}

/// Closest candidate to `query` by `(distance, id)`.
fn closest(
    points: &PointSet,
    query: usize,
    candidates: impl Iterator<Item = usize>,
    metric: Metric,
) -> Option<(usize, f64)> {
    let q = &points.get(query)?.coords;
    candidates
        .filter(|&id| id != query)
        .map(|id| (id, metric.distance(q, &points.get(id).expect("known id").coords)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

fn genuine_query(g: &Grid, id: usize) -> Result<GridIndex> {
    let cell = locate(g, id)?;
    if g.is_padding(id) {
        return Err(GridError::InvalidArgument(format!("point {id} is padding")));
    }
    Ok(cell)
}

/// Ids in the Chebyshev `k`-ring around `center`, clipped at the border.
fn ring_ids(g: &Grid, center: &GridIndex, k: usize) -> Vec<usize> {
    let n = g.n();
    let ranges: Vec<(usize, usize)> = center
        .coords()
        .iter()
        .map(|&c| (c.saturating_sub(k).max(1), (c + k).min(n)))
        .collect();
    let mut cursor: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut ids = Vec::new();
    loop {
        let lin = g.linear(&GridIndex(cursor.clone())).expect("inside grid");
        ids.push(g.placement().id_at(lin));
        let mut axis = 0;
        loop {
            if axis == cursor.len() {
                return ids;
            }
            if cursor[axis] < ranges[axis].1 {
                cursor[axis] += 1;
                break;
            }
            cursor[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}

/// Closest genuine point in the `k`-ring around `id`'s cell, ties to the
/// smaller id. `None` when the ring holds no other genuine point.
pub fn estimated_nn(g: &Grid, id: usize, k: usize, metric: Metric) -> Result<Option<(usize, f64)>> {
    if k == 0 {
        return Err(GridError::InvalidArgument("ring radius must be at least 1".into()));
    }
    let cell = genuine_query(g, id)?;
    let ring = ring_ids(g, &cell, k);
    Ok(closest(
        g.points(),
        id,
        ring.into_iter().filter(|&c| !g.is_padding(c)),
        metric,
    ))
}

/// Linear-scan nearest neighbour, ties to the smaller id.
pub fn exact_nn(ps: &PointSet, id: usize, metric: Metric) -> Result<(usize, f64)> {
    if ps.get(id).is_none() {
        return Err(GridError::UnknownId(id));
    }
    if ps.len() < 2 {
        return Err(GridError::TooFewPoints);
    }
    Ok(closest(ps, id, 1..=ps.len(), metric).expect("at least one other point"))
}

/// [`exact_nn`] restricted to the genuine points of a grid.
pub fn exact_nn_in_grid(g: &Grid, id: usize, metric: Metric) -> Result<(usize, f64)> {
    genuine_query(g, id)?;
    closest(g.points(), id, g.genuine_ids(), metric).ok_or(GridError::TooFewPoints)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborEstimate {
    pub query_id: usize,
    pub estimated_id: Option<usize>,
    pub estimated_distance: Option<f64>,
    pub ring_radius: usize,
    pub true_id: usize,
    pub true_distance: f64,
    /// Chebyshev distance in cells between the query and its true neighbour.
    pub ring_distance_to_true: usize,
    /// The estimate is as close as the true neighbour (ties count).
    pub hit: bool,
    /// Same, for the one-ring.
    pub one_ring_hit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builder {
    Direct,
    FullPass,
    OddEven,
    MaxSwap,
}

impl Builder {
    fn strategy(self) -> Option<Strategy> {
        match self {
            Builder::Direct => None,
            Builder::FullPass => Some(Strategy::FullPass),
            Builder::OddEven => Some(Strategy::OddEvenCycle),
            Builder::MaxSwap => Some(Strategy::MaxSwap),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub n: usize,
    pub d: usize,
    /// Genuine points only.
    pub point_count: usize,
    pub ring_radius: usize,
    pub metric: Metric,
    pub builder: Option<Builder>,
    /// Rates and means are 0 when there are no records.
    pub hit_rate: f64,
    pub one_ring_hit_rate: f64,
    pub mean_ring_distance: f64,
    pub max_ring_distance: usize,
    pub records: Vec<NeighborEstimate>,
}

/// Builds a stable grid for `ps`. Iterative builders start from the padded
/// set in id order.
pub fn build_with(ps: &PointSet, builder: Builder) -> Result<Grid> {
    let Some(strategy) = builder.strategy() else {
        return build_stable(ps);
    };
    if ps.is_empty() {
        return Err(GridError::EmptyPointSet);
    }
    let n = side_length_for(ps.len(), ps.dim());
    let padded = pad_points(ps, n)?;
    let cells = padded.points.len();
    let start = Grid::from_cell_ids(padded.points, n, (1..=cells).collect(), &padded.padding_ids)?;
    let limit = default_step_limit(cells);
    let trace = run_until_stable(&start, strategy, limit, false)?;
    if !trace.converged {
        return Err(GridError::NotConverged { steps: limit });
    }
    Ok(trace.final_grid)
}

pub fn quality_report(ps: &PointSet, builder: Builder, k: usize, metric: Metric) -> Result<QualityReport> {
    let g = build_with(ps, builder)?;
    let mut report = quality_for_grid(&g, k, metric)?;
    report.builder = Some(builder);
    Ok(report)
}

/// Estimates for every genuine point of an already built grid.
pub fn quality_for_grid(g: &Grid, k: usize, metric: Metric) -> Result<QualityReport> {
    if k == 0 {
        return Err(GridError::InvalidArgument("ring radius must be at least 1".into()));
    }
    let genuine: Vec<usize> = g.genuine_ids().collect();
    let records = if genuine.len() < 2 {
        Vec::new()
    } else {
        genuine
            .par_iter()
            .map(|&id| estimate_record(g, id, k, metric))
            .collect::<Result<Vec<_>>>()?
    };
    let count = records.len();
    let rate = |f: fn(&NeighborEstimate) -> bool| {
        if count == 0 {
            0.0
        } else {
            records.iter().filter(|r| f(r)).count() as f64 / count as f64
        }
    };
    let hit_rate = rate(|r| r.hit);
    let one_ring_hit_rate = rate(|r| r.one_ring_hit);
    let mean_ring_distance = if count == 0 {
        0.0
    } else {
        records.iter().map(|r| r.ring_distance_to_true as f64).sum::<f64>() / count as f64
    };
    Ok(QualityReport {
        n: g.n(),
        d: g.dim(),
        point_count: genuine.len(),
        ring_radius: k,
        metric,
        builder: None,
        hit_rate,
        one_ring_hit_rate,
        mean_ring_distance,
        max_ring_distance: records.iter().map(|r| r.ring_distance_to_true).max().unwrap_or(0),
        records,
    })
}

fn estimate_record(g: &Grid, id: usize, k: usize, metric: Metric) -> Result<NeighborEstimate> {
    let (true_id, true_distance) = exact_nn_in_grid(g, id, metric)?;
    let estimate = estimated_nn(g, id, k, metric)?;
    let one_ring = if k == 1 {
        estimate
    } else {
        estimated_nn(g, id, 1, metric)?
    };
    let is_hit = |e: Option<(usize, f64)>| e.is_some_and(|(_, dist)| dist == true_distance);
    Ok(NeighborEstimate {
        query_id: id,
        estimated_id: estimate.map(|e| e.0),
        estimated_distance: estimate.map(|e| e.1),
        ring_radius: k,
        true_id,
        true_distance,
        ring_distance_to_true: locate(g, id)?.ring_distance(&locate(g, true_id)?),
        hit: is_hit(estimate),
        one_ring_hit: is_hit(one_ring),
    })
}

/// A generated point set together with a stable arrangement given for it
/// by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialSet {
    pub points: PointSet,
    pub reference: Grid,
    /// `labels[id - 1]` names the point, e.g. `p`, `q_2`, `r_3_1`.
    pub labels: Vec<String>,
}

impl AdversarialSet {
    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label).map(|i| i + 1)
    }
}

struct Layout {
    n: usize,
    coords: Vec<[f64; 2]>,
    labels: Vec<String>,
    /// 1-based `(column, row)` per point.
    cells: Vec<(usize, usize)>,
}

impl Layout {
    fn new(n: usize) -> Self {
        Self {
            n,
            coords: Vec::new(),
            labels: Vec::new(),
            cells: Vec::new(),
        }
    }

    fn push(&mut self, label: String, x: f64, y: f64, column: usize, row: usize) {
        self.coords.push([x, y]);
        self.labels.push(label);
        self.cells.push((column, row));
    }

    fn finish(self) -> Result<AdversarialSet> {
        let points = PointSet::from_coords(2, self.coords.iter().map(|c| c.to_vec()))?;
        let mut cell_ids = vec![0; self.n * self.n];
        for (i, &(c, r)) in self.cells.iter().enumerate() {
            cell_ids[(r - 1) * self.n + (c - 1)] = i + 1;
        }
        let reference = Grid::from_cell_ids(points.clone(), self.n, cell_ids, &[])?;
        Ok(AdversarialSet {
            points,
            reference,
            labels: self.labels,
        })
    }
}

/// Two mutual nearest neighbours `p = (0,0)` and `q = (1,1)` padded with
/// columns of points that force them into opposite corners: `p` at `(1,1)`,
/// `q` at `(n,n)`.
pub fn gen_adversarial_single(n: usize) -> Result<AdversarialSet> {
    if n < 2 {
        return Err(GridError::InvalidArgument("need n >= 2".into()));
    }
    let nf = n as f64;
    let mut layout = Layout::new(n);
    layout.push("p".into(), 0.0, 0.0, 1, 1);
    layout.push("q".into(), 1.0, 1.0, n, n);
    for i in 1..n {
        layout.push(format!("p_{i}"), 0.0, 2.0 + i as f64 / nf, 1, i + 1);
    }
    for i in 1..n {
        layout.push(format!("q_{i}"), 1.0, -2.0 - i as f64 / nf, n, n - i);
    }
    for i in 2..n {
        for j in 1..=n {
            layout.push(
                format!("r_{i}_{j}"),
                1.0 - 1.0 / i as f64,
                2.0 + j as f64 / nf,
                i,
                j,
            );
        }
    }
    layout.finish()
}

/// `depth^2` interleaved families of `(n/depth)^2` points each. Family
/// `(u, v)` holds `(i + u*n + v/depth, j + v*n + u/depth)` at cell
/// `(depth*i + v + 1, depth*j + u + 1)`, so same-family neighbours sit
/// `depth` cells apart. `depth = 2` gives the families `p, q, r, s`.
pub fn gen_adversarial_all(n: usize, depth: usize) -> Result<AdversarialSet> {
    if n % 2 != 0 {
        return Err(GridError::InvalidArgument(format!("n = {n} must be even")));
    }
    if depth < 2 || n % depth != 0 || n / depth < 2 {
        return Err(GridError::InvalidArgument(format!(
            "depth {depth} must be at least 2 and divide n = {n} at least twice"
        )));
    }
    let m = n / depth;
    let (nf, bf) = (n as f64, depth as f64);
    let mut layout = Layout::new(n);
    for v in 0..depth {
        for u in 0..depth {
            let family = if depth == 2 {
                ["p", "q", "r", "s"][2 * v + u].to_string()
            } else {
                format!("f{u}{v}")
            };
            for i in 0..m {
                for j in 0..m {
                    layout.push(
                        format!("{family}_{i}_{j}"),
                        i as f64 + u as f64 * nf + v as f64 / bf,
                        j as f64 + v as f64 * nf + u as f64 / bf,
                        depth * i + v + 1,
                        depth * j + u + 1,
                    );
                }
            }
        }
    }
    layout.finish()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    /// Independent uniform coordinates in `[0, 1)`.
    #[default]
    UniformBox,
    /// Every axis an independent permutation of `1..=N`.
    IntegerRanks,
}

/// `n^d` random points, reproducible from `seed`.
pub fn gen_random(n: usize, d: usize, seed: u64, distribution: Distribution) -> Result<PointSet> {
    if n == 0 {
        return Err(GridError::ZeroSide);
    }
    let count = n
        .checked_pow(d as u32)
        .ok_or_else(|| GridError::InvalidArgument(format!("{n}^{d} overflows")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<f64>> = match distribution {
        Distribution::UniformBox => (0..count)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect(),
        Distribution::IntegerRanks => {
            let axes: Vec<Vec<usize>> = (0..d)
                .map(|_| {
                    let mut perm: Vec<usize> = (1..=count).collect();
                    perm.shuffle(&mut rng);
                    perm
                })
                .collect();
            (0..count)
                .map(|i| axes.iter().map(|a| a[i] as f64).collect())
                .collect()
        }
    };
    PointSet::from_coords(d, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::is_stable;

    fn sample_grid() -> Grid {
        Grid::from_rows_bottom_up(&[
            vec![(1.53, 1.30), (4.27, 1.45), (8.41, 1.96)],
            vec![(1.77, 5.46), (4.07, 5.13), (8.23, 4.79)],
            vec![(2.06, 7.76), (3.73, 6.84), (9.18, 9.05)],
        ])
        .unwrap()
    }

    #[test]
    fn metrics() {
        let (a, b) = ([0.0, 0.0], [3.0, -4.0]);
        assert_eq!(Metric::Euclidean.distance(&a, &b), 5.0);
        assert_eq!(Metric::Chebyshev.distance(&a, &b), 4.0);
        assert_eq!(Metric::Manhattan.distance(&a, &b), 7.0);
    }

    #[test]
    fn upper_left_estimate() {
        let g = sample_grid();
        assert!(is_stable(&g).stable);
        // ids follow the bottom-up row order: (2.06,7.76) is 7, (3.73,6.84) is 8
        let (est, dist) = estimated_nn(&g, 7, 1, Metric::Euclidean).unwrap().unwrap();
        assert_eq!(est, 8);
        assert!((dist - 1.906).abs() < 1e-3);
        let mut ring = ring_ids(&g, &GridIndex::new(vec![1, 3]), 1);
        ring.sort();
        assert_eq!(ring, vec![4, 5, 7, 8]);
    }

    #[test]
    fn single_cell_has_no_estimate() {
        let g = build_stable(&PointSet::from_pairs(&[(1.0, 1.0)]).unwrap()).unwrap();
        assert_eq!(estimated_nn(&g, 1, 1, Metric::Euclidean).unwrap(), None);
        assert_eq!(
            exact_nn(g.points(), 1, Metric::Euclidean),
            Err(GridError::TooFewPoints)
        );
    }

    #[test]
    fn estimate_errors() {
        let g = sample_grid();
        assert!(estimated_nn(&g, 1, 0, Metric::Euclidean).is_err());
        assert_eq!(estimated_nn(&g, 10, 1, Metric::Euclidean), Err(GridError::UnknownId(10)));
        let padded = build_stable(&PointSet::from_pairs(&[(0.0, 0.0), (1.0, 1.0)]).unwrap()).unwrap();
        assert!(estimated_nn(&padded, 3, 1, Metric::Euclidean).is_err());
    }

    #[test]
    fn two_points_see_each_other() {
        let ps = PointSet::from_pairs(&[(0.0, 0.0), (5.0, 5.0)]).unwrap();
        assert_eq!(exact_nn(&ps, 1, Metric::Euclidean).unwrap().0, 2);
        assert_eq!(exact_nn(&ps, 2, Metric::Euclidean).unwrap().0, 1);
        let g = build_stable(&ps).unwrap();
        assert_eq!(estimated_nn(&g, 1, 1, Metric::Euclidean).unwrap().unwrap().0, 2);
    }

    #[test]
    fn exact_ties_go_to_smaller_id() {
        let ps = PointSet::from_pairs(&[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]).unwrap();
        assert_eq!(exact_nn(&ps, 1, Metric::Euclidean).unwrap(), (2, 1.0));
    }

    #[test]
    fn single_generator_counts_and_corners() {
        for n in 2..=8 {
            let set = gen_adversarial_single(n).unwrap();
            assert_eq!(set.points.len(), n * n);
            assert_eq!(2 + 2 * (n - 1) + n * (n - 2), n * n);
            assert!(is_stable(&set.reference).stable, "n = {n}");
            let p = set.id_of("p").unwrap();
            let q = set.id_of("q").unwrap();
            assert_eq!(locate(&set.reference, p).unwrap(), GridIndex::new(vec![1, 1]));
            assert_eq!(locate(&set.reference, q).unwrap(), GridIndex::new(vec![n, n]));
            assert_eq!(exact_nn(&set.points, p, Metric::Euclidean).unwrap().0, q);
        }
        let two = gen_adversarial_single(2).unwrap();
        assert_eq!(two.labels, vec!["p", "q", "p_1", "q_1"]);
        assert!(gen_adversarial_single(1).is_err());
    }

    #[test]
    fn single_generator_built_grid_matches_reference_for_four() {
        let set = gen_adversarial_single(4).unwrap();
        let built = build_stable(&set.points).unwrap();
        assert_eq!(built, set.reference);
    }

    #[test]
    fn mutual_neighbours_only_for_small_n() {
        for n in [2, 3] {
            let set = gen_adversarial_single(n).unwrap();
            let (p, q) = (set.id_of("p").unwrap(), set.id_of("q").unwrap());
            assert_eq!(exact_nn(&set.points, q, Metric::Euclidean).unwrap().0, p);
        }
        // from n = 4 on, r_(n-1)_1 = (1 - 1/(n-1), 2 + 1/n) is closer to q than p is
        let set = gen_adversarial_single(4).unwrap();
        let q = set.id_of("q").unwrap();
        let r = set.id_of("r_3_1").unwrap();
        assert_eq!(exact_nn(&set.points, q, Metric::Euclidean).unwrap().0, r);
    }

    #[test]
    fn all_generator_matches_the_small_picture() {
        let set = gen_adversarial_all(4, 2).unwrap();
        let coord = |l: &str| set.points.get(set.id_of(l).unwrap()).unwrap().coords.clone();
        assert_eq!(coord("p_1_0"), vec![1.0, 0.0]);
        assert_eq!(coord("q_0_1"), vec![4.0, 1.5]);
        assert_eq!(coord("r_1_1"), vec![1.5, 5.0]);
        assert_eq!(coord("s_1_0"), vec![5.5, 4.5]);
        let cell = |l: &str| locate(&set.reference, set.id_of(l).unwrap()).unwrap();
        assert_eq!(cell("p_0_0"), GridIndex::new(vec![1, 1]));
        assert_eq!(cell("r_0_0"), GridIndex::new(vec![2, 1]));
        assert_eq!(cell("q_0_0"), GridIndex::new(vec![1, 2]));
        assert_eq!(cell("s_1_1"), GridIndex::new(vec![4, 4]));
    }

    #[test]
    fn all_generator_defeats_the_one_ring() {
        for n in [4, 6, 8] {
            let set = gen_adversarial_all(n, 2).unwrap();
            assert!(is_stable(&set.reference).stable);
            let report = quality_for_grid(&set.reference, 1, Metric::Euclidean).unwrap();
            assert_eq!(report.one_ring_hit_rate, 0.0);
            for id in 1..=n * n {
                let (nn, _) = exact_nn(&set.points, id, Metric::Euclidean).unwrap();
                assert_eq!(set.labels[nn - 1][..1], set.labels[id - 1][..1]);
            }
        }
    }

    #[test]
    fn deeper_interleaving() {
        assert!(matches!(gen_adversarial_all(10, 4), Err(GridError::InvalidArgument(_))));
        let set = gen_adversarial_all(12, 3).unwrap();
        assert!(is_stable(&set.reference).stable);
        let report = quality_for_grid(&set.reference, 2, Metric::Euclidean).unwrap();
        assert_eq!(report.hit_rate, 0.0);
        assert!(gen_adversarial_all(5, 2).is_err());
        assert!(gen_adversarial_all(2, 2).is_err());
    }

    #[test]
    fn random_generator() {
        let a = gen_random(10, 2, 7, Distribution::UniformBox).unwrap();
        assert_eq!(a, gen_random(10, 2, 7, Distribution::UniformBox).unwrap());
        assert_ne!(a, gen_random(10, 2, 8, Distribution::UniformBox).unwrap());
        assert_eq!(a.len(), 100);
        assert!(a.points().iter().flat_map(|p| &p.coords).all(|&v| (0.0..1.0).contains(&v)));

        let r = gen_random(3, 3, 1, Distribution::IntegerRanks).unwrap();
        for axis in 0..3 {
            let mut vals: Vec<usize> = r.points().iter().map(|p| p.coords[axis] as usize).collect();
            vals.sort();
            assert_eq!(vals, (1..=27).collect::<Vec<_>>());
        }
    }

    #[test]
    fn full_ring_is_exact() {
        let ps = gen_random(6, 2, 11, Distribution::UniformBox).unwrap();
        for builder in [Builder::Direct, Builder::FullPass, Builder::OddEven, Builder::MaxSwap] {
            let report = quality_report(&ps, builder, 5, Metric::Euclidean).unwrap();
            assert_eq!(report.hit_rate, 1.0, "{builder:?}");
            assert!(report.max_ring_distance <= 5);
        }
    }

    #[test]
    fn trivial_report_is_empty() {
        let ps = PointSet::from_pairs(&[(0.3, 0.3)]).unwrap();
        let report = quality_report(&ps, Builder::Direct, 1, Metric::Euclidean).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.point_count, 1);
    }

    #[test]
    fn padding_never_reported() {
        let ps = gen_random(5, 2, 3, Distribution::UniformBox).unwrap();
        let few = PointSet::from_coords(2, ps.points()[..17].iter().map(|p| p.coords.clone())).unwrap();
        let report = quality_report(&few, Builder::Direct, 1, Metric::Euclidean).unwrap();
        assert_eq!(report.records.len(), 17);
        for r in &report.records {
            assert!(r.query_id <= 17 && r.true_id <= 17);
            assert!(r.estimated_id.is_none_or(|e| e <= 17));
        }
    }
}
