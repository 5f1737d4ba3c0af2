//! Census of rank configurations with a unique stable state.
//!
//! Up to `n = 3` every configuration is examined. For `n = 4` the search runs
//! over bin-condition states only, pruned by requiring every filled `k x k`
//! window (`k < n`) to be a unique configuration of its own size.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::counts::square_tableaux_count;
use super::enumerate::{
    check_bin_conditions, count_stable_states, lexicographic_count, windows_unique, RankConfig,
};
use crate::error::{GridError, Result};
use crate::grid::build_stable;

/// Candidate count for `n = 4` given in the literature, for comparison only.
pub const PUBLISHED_N4_CANDIDATES: u64 = 37_536;

/// Largest `n` the census runs exhaustively.
pub const EXHAUSTIVE_MAX_N: usize = 3;
/// Largest `n` the census runs at all.
pub const CENSUS_MAX_N: usize = 4;

#[derive(Clone, Copy, Debug, Default)]
pub struct CensusOptions {
    /// Required for `n = 4`.
    pub long_run: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusMethod {
    Exhaustive,
    PrunedCandidates,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRecord {
    pub config: RankConfig,
    pub stable_count: usize,
    pub unique: bool,
    /// Bin conditions of the canonical (directly built) state.
    pub x_bin: bool,
    pub y_bin: bool,
    /// Every proper `k x k` window (`k < n`) of the canonical state has a
    /// unique stable placement.
    pub submatrix_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusResult {
    pub n: usize,
    pub method: CensusMethod,
    pub configs_examined: u64,
    pub unique_count: u64,
    pub max_stable_states: usize,
    pub argmax: RankConfig,
    pub min_stable_states: usize,
    pub argmin: RankConfig,
    pub runtime_seconds: f64,
    /// Only for the pruned search.
    pub published_candidates: Option<u64>,
    #[serde(skip)]
    pub records: Vec<CensusRecord>,
}

impl CensusResult {
    pub fn unique_configs(&self) -> impl Iterator<Item = &RankConfig> {
        self.records.iter().filter(|r| r.unique).map(|r| &r.config)
    }
}

pub fn census_unique(n: usize, opts: CensusOptions) -> Result<CensusResult> {
    if n == 0 {
        return Err(GridError::ZeroSide);
    }
    if n > CENSUS_MAX_N {
        return Err(GridError::GuardExceeded {
            what: "n",
            size: n,
            limit: CENSUS_MAX_N,
        });
    }
    if n > EXHAUSTIVE_MAX_N && !opts.long_run {
        return Err(GridError::GuardExceeded {
            what: "n",
            size: n,
            limit: EXHAUSTIVE_MAX_N,
        });
    }
    let start = Instant::now();
    let (method, records) = if n <= EXHAUSTIVE_MAX_N {
        let total = lexicographic_count(n)?;
        let records = (0..total)
            .into_par_iter()
            .map(|i| exhaustive_record(RankConfig::nth_lexicographic(n, i)?))
            .collect::<Result<Vec<_>>>()?;
        (CensusMethod::Exhaustive, records)
    } else {
        let candidates = pruned_candidates(n)?;
        let records = candidates
            .into_par_iter()
            .map(|config| {
                let stable_count = count_stable_states(&config, None, false)?;
                Ok(CensusRecord {
                    config,
                    stable_count,
                    unique: stable_count == 1,
                    x_bin: true,
                    y_bin: true,
                    submatrix_ok: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (CensusMethod::PrunedCandidates, records)
    };
    let runtime_seconds = start.elapsed().as_secs_f64();

    let mut max_rec = &records[0];
    let mut min_rec = &records[0];
    for r in &records {
        if r.stable_count > max_rec.stable_count {
            max_rec = r;
        }
        if r.stable_count < min_rec.stable_count {
            min_rec = r;
        }
    }
    Ok(CensusResult {
        n,
        method,
        configs_examined: records.len() as u64,
        unique_count: records.iter().filter(|r| r.unique).count() as u64,
        max_stable_states: max_rec.stable_count,
        argmax: max_rec.config.clone(),
        min_stable_states: min_rec.stable_count,
        argmin: min_rec.config.clone(),
        runtime_seconds,
        published_candidates: (method == CensusMethod::PrunedCandidates)
            .then_some(PUBLISHED_N4_CANDIDATES),
        records,
    })
}

fn exhaustive_record(config: RankConfig) -> Result<CensusRecord> {
    let stable_count = count_stable_states(&config, None, false)?;
    let canonical = build_stable(&config.to_point_set())?;
    let (x_bin, y_bin) = check_bin_conditions(&canonical)?;
    let submatrix_ok = windows_unique(&canonical, 2..config.n());
    Ok(CensusRecord {
        config,
        stable_count,
        unique: stable_count == 1,
        x_bin,
        y_bin,
        submatrix_ok,
    })
}

/// Relative rank pattern of a small configuration: y-ranks listed in
/// x order, zero-based.
type Pattern = Vec<u8>;

fn pattern_of(pairs: &mut [(usize, usize)]) -> Pattern {
    pairs.sort_unstable();
    let mut ys: Vec<usize> = pairs.iter().map(|&(_, y)| y).collect();
    ys.sort_unstable();
    pairs
        .iter()
        .map(|&(_, y)| ys.binary_search(&y).expect("present") as u8)
        .collect()
}

fn pattern_of_config(cfg: &RankConfig) -> Pattern {
    cfg.perm().iter().map(|&y| (y - 1) as u8).collect()
}

/// Unique configurations of side `k`, for every `k < n`, as rank patterns.
fn unique_patterns_below(n: usize) -> Result<Vec<HashSet<Pattern>>> {
    let mut sets: Vec<HashSet<Pattern>> = vec![HashSet::new(), HashSet::from([vec![0u8]])];
    for k in 2..n {
        let unique: HashSet<Pattern> = bin_candidates(k, &sets)
            .into_par_iter()
            .filter(|cfg| count_stable_states(cfg, Some(2), false).is_ok_and(|c| c == 1))
            .map(|cfg| pattern_of_config(&cfg))
            .collect();
        sets.push(unique);
    }
    Ok(sets)
}

/// Configurations whose bin-condition state passes the window filter for
/// every `k < n`. Every unique configuration of side `n` is among them.
pub fn pruned_candidates(n: usize) -> Result<Vec<RankConfig>> {
    if n == 0 {
        return Err(GridError::ZeroSide);
    }
    if n > CENSUS_MAX_N {
        return Err(GridError::GuardExceeded {
            what: "n",
            size: n,
            limit: CENSUS_MAX_N,
        });
    }
    let sets = unique_patterns_below(n)?;
    Ok(bin_candidates(n, &sets))
}

/// The unique configurations of side `n` found through the pruned search.
pub fn unique_configs_pruned(n: usize) -> Result<Vec<RankConfig>> {
    Ok(pruned_candidates(n)?
        .into_par_iter()
        .filter(|cfg| count_stable_states(cfg, Some(2), false).is_ok_and(|c| c == 1))
        .collect())
}

/// Cells in shell order: the `s x s` corner is complete after `s^2` steps.
fn shell_order(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..n {
        for r in 0..s {
            order.push((s, r));
        }
        for c in 0..=s {
            order.push((c, s));
        }
    }
    order
}

#[derive(Clone)]
struct Partial {
    /// `(x, y)` per linear cell, 1-based ranks; 0 when empty.
    cells: Vec<(usize, usize)>,
    used_x: u64,
    used_y: u64,
    pos: usize,
}

struct BinSearch<'a> {
    n: usize,
    order: Vec<(usize, usize)>,
    unique: &'a [HashSet<Pattern>],
}

impl BinSearch<'_> {
    fn windows_ok(&self, cells: &[(usize, usize)], c: usize, r: usize) -> bool {
        let n = self.n;
        for k in 2..n {
            for c0 in c.saturating_sub(k - 1)..=c.min(n - k) {
                for r0 in r.saturating_sub(k - 1)..=r.min(n - k) {
                    let mut pairs = Vec::with_capacity(k * k);
                    for rr in r0..r0 + k {
                        for cc in c0..c0 + k {
                            pairs.push(cells[rr * n + cc]);
                        }
                    }
                    if pairs.iter().any(|&(x, _)| x == 0) {
                        continue;
                    }
                    if !self.unique[k].contains(&pattern_of(&mut pairs)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn children(&self, state: &Partial) -> Vec<Partial> {
        let n = self.n;
        let (c, r) = self.order[state.pos];
        let mut out = Vec::new();
        for x in c * n + 1..=(c + 1) * n {
            if state.used_x & (1 << x) != 0 {
                continue;
            }
            for y in r * n + 1..=(r + 1) * n {
                if state.used_y & (1 << y) != 0 {
                    continue;
                }
                let mut next = state.clone();
                next.cells[r * n + c] = (x, y);
                next.used_x |= 1 << x;
                next.used_y |= 1 << y;
                next.pos += 1;
                if self.windows_ok(&next.cells, c, r) {
                    out.push(next);
                }
            }
        }
        out
    }

    fn finish(&self, state: Partial, out: &mut Vec<RankConfig>) {
        if state.pos == self.order.len() {
            let mut perm = vec![0; self.n * self.n];
            for &(x, y) in &state.cells {
                perm[x - 1] = y;
            }
            out.push(RankConfig::new(self.n, perm).expect("bin state is a permutation"));
            return;
        }
        for child in self.children(&state) {
            self.finish(child, out);
        }
    }
}

fn bin_candidates(n: usize, unique: &[HashSet<Pattern>]) -> Vec<RankConfig> {
    let search = BinSearch {
        n,
        order: shell_order(n),
        unique,
    };
    let root = Partial {
        cells: vec![(0, 0); n * n],
        used_x: 0,
        used_y: 0,
        pos: 0,
    };
    // expand a few levels serially so the parallel split has enough pieces
    let mut frontier = vec![root];
    while frontier.len() < 256 && frontier.iter().all(|s| s.pos < search.order.len()) {
        frontier = frontier.iter().flat_map(|s| search.children(s)).collect();
    }
    let mut out: Vec<RankConfig> = frontier
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut local = Vec::new();
            search.finish(s, &mut local);
            local
        })
        .collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub n: usize,
    pub exhaustive: bool,
    pub configs_examined: u64,
    pub max_observed: usize,
    pub argmax: RankConfig,
    /// `f^(n,...,n)`, the stable-state count of the identity.
    pub identity_count: u64,
    /// Set when some configuration has more stable states than the identity.
    pub counterexample: bool,
}

/// Largest stable-state count seen over all (or sampled) configurations,
/// compared with the identity's count.
pub fn max_stable_states_probe(n: usize, sampling: Sampling) -> Result<ProbeResult> {
    if n == 0 {
        return Err(GridError::ZeroSide);
    }
    let configs: Vec<RankConfig> = match sampling {
        Sampling::Exhaustive => {
            if n > EXHAUSTIVE_MAX_N {
                return Err(GridError::GuardExceeded {
                    what: "n",
                    size: n,
                    limit: EXHAUSTIVE_MAX_N,
                });
            }
            let total = lexicographic_count(n)?;
            (0..total)
                .map(|i| RankConfig::nth_lexicographic(n, i))
                .collect::<Result<_>>()?
        }
        Sampling::Random { samples, seed } => {
            if n > CENSUS_MAX_N {
                return Err(GridError::GuardExceeded {
                    what: "n",
                    size: n,
                    limit: CENSUS_MAX_N,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples.max(1))
                .map(|_| {
                    let mut perm: Vec<usize> = (1..=n * n).collect();
                    perm.shuffle(&mut rng);
                    RankConfig::new(n, perm)
                })
                .collect::<Result<_>>()?
        }
    };
    let counts = configs
        .par_iter()
        .map(|cfg| count_stable_states(cfg, None, false))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    let identity_count: u64 = square_tableaux_count(n)
        .try_into()
        .expect("guarded sizes fit in u64");
    Ok(ProbeResult {
        n,
        exhaustive: matches!(sampling, Sampling::Exhaustive),
        configs_examined: configs.len() as u64,
        max_observed: counts[best],
        argmax: configs[best].clone(),
        identity_count,
        counterexample: counts[best] as u64 > identity_count,
    })
}
