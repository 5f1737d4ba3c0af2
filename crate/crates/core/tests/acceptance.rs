//! Acceptance run: one PASS/FAIL line per criterion. Criterion 2 is a long
//! run and only executes with `NGRID_LONG_RUN=1` or `--long-run`; otherwise
//! it prints SKIP. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ngrid_core::combinatorics::{
    census_unique, check_bin_conditions, count_bin_stable, count_fillings,
    count_stable_fillings, count_stable_states, count_tableaux_hook, enumerate_stable_states,
    enumerate_tableaux, max_stable_states_probe, partitions, stable_fraction, CensusOptions,
    Partition, RankConfig, Sampling, PUBLISHED_N4_CANDIDATES,
};
use ngrid_core::quality::{
    estimated_nn, exact_nn, gen_adversarial_all, gen_adversarial_single, gen_random,
    quality_for_grid, Distribution, Metric,
};
use ngrid_core::{
    build_stable, default_step_limit, is_stable, is_stable_fast, locate, odd_even_step,
    run_until_stable, Grid, GridIndex, PointSet, StepKind, Strategy,
};

// Time limits and tolerances.
const SMALL_CENSUS_LIMIT: Duration = Duration::from_secs(1);
const N3_CENSUS_LIMIT: Duration = Duration::from_secs(600);
const EXHAUSTIVE_N2_LIMIT: Duration = Duration::from_secs(1);
const HOOK_LIMIT: Duration = Duration::from_secs(10);
const CONVERGENCE_LIMIT: Duration = Duration::from_secs(60);
const SCALING_BAND: f64 = 2.0;
const RANDOM_SETS: usize = 10_000;
const CONVERGENCE_SEEDS: u64 = 1000;
const ORACLE_CONFIGS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Option<Outcome> {
    Some(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn main() {
    let long_run = std::env::var("NGRID_LONG_RUN").is_ok_and(|v| v == "1")
        || std::env::args().any(|a| a == "--long-run");
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Option<Outcome>>)> = vec![
        (1, "unique-state census for n = 1, 2, 3", Box::new(c1_census)),
        (2, "no unique 4x4 configuration", Box::new(move || c2_census_four(long_run))),
        (3, "stable fillings of the 2x2 grid", Box::new(c3_stable_fillings)),
        (4, "bin-condition fillings of the 2x2 grid", Box::new(c4_bin_fillings)),
        (5, "hook formula against enumeration", Box::new(c5_hook_formula)),
        (6, "stable states of the identity", Box::new(c6_identity)),
        (7, "maximum stable-state probe", Box::new(c7_probe)),
        (8, "iterative convergence", Box::new(c8_convergence)),
        (9, "four-phase cycling trace", Box::new(c9_cycle_trace)),
        (10, "direct construction is stable and N log N", Box::new(c10_direct_build)),
        (11, "single-pair adversarial set", Box::new(c11_single_pair)),
        (12, "all-points adversarial set", Box::new(c12_all_points)),
        (13, "backtracking against naive filtering", Box::new(c13_oracle)),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
        let elapsed = secs(start.elapsed());
        match result {
            Ok(Some(o)) if o.pass => println!("criterion {id:>2} PASS  {name}: {} [{elapsed}]", o.detail),
            Ok(Some(o)) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {} [{elapsed}]", o.detail);
            }
            Ok(None) => println!(
                "criterion {id:>2} SKIP  {name}: long run, set NGRID_LONG_RUN=1 or pass --long-run"
            ),
            Err(_) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: panicked [{elapsed}]");
            }
        }
    }
    println!("acceptance: {} criteria, {failed} failed", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_census() -> Option<Outcome> {
    let expected = [(1, 1u64), (2, 12), (3, 966)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, want) in expected {
        let start = Instant::now();
        let r = census_unique(n, CensusOptions::default()).expect("census");
        let took = start.elapsed();
        let limit = if n <= 2 { SMALL_CENSUS_LIMIT } else { N3_CENSUS_LIMIT };
        ok &= r.unique_count == want && took < limit;
        parts.push(format!("n={n}: {} unique of {} in {}", r.unique_count, r.configs_examined, secs(took)));
    }
    outcome(ok, parts.join("; "))
}

fn c2_census_four(long_run: bool) -> Option<Outcome> {
    if !long_run {
        return None;
    }
    let r = census_unique(4, CensusOptions { long_run: true }).expect("census");
    outcome(
        r.unique_count == 0,
        format!(
            "{} unique among {} candidates (published candidate count {PUBLISHED_N4_CANDIDATES}); stable-state counts range {}..={}",
            r.unique_count, r.configs_examined, r.min_stable_states, r.max_stable_states
        ),
    )
}

/// Every filling of the 2x2 grid: 24 rank configurations times 24
/// placements, returning `(fillings, stable, stable with both bins)`.
fn two_by_two_fillings() -> (u64, u64, u64) {
    let mut counts = (0, 0, 0);
    for c in 0..24 {
        let ps = RankConfig::nth_lexicographic(2, c).unwrap().to_point_set();
        for p in 0..24 {
            let cells = RankConfig::nth_lexicographic(2, p).unwrap().perm().to_vec();
            let g = Grid::from_cell_ids(ps.clone(), 2, cells, &[]).unwrap();
            counts.0 += 1;
            if is_stable_fast(&g) {
                counts.1 += 1;
                if check_bin_conditions(&g).unwrap() == (true, true) {
                    counts.2 += 1;
                }
            }
        }
    }
    counts
}

fn c3_stable_fillings() -> Option<Outcome> {
    let start = Instant::now();
    let (fillings, stable, _) = two_by_two_fillings();
    let took = start.elapsed();
    let formula = count_stable_fillings(2);
    let fraction = stable_fraction(2);
    let ok = fillings == 576
        && BigUint::from(fillings) == count_fillings(2).1
        && stable == 36
        && BigUint::from(stable) == formula
        && fraction == BigRational::new(1.into(), 16.into())
        && BigRational::new(stable.into(), fillings.into()) == fraction
        && took < EXHAUSTIVE_N2_LIMIT;
    outcome(
        ok,
        format!("{stable} of {fillings} stable, formula {formula}, fraction {fraction}, {}", secs(took)),
    )
}

fn c4_bin_fillings() -> Option<Outcome> {
    let start = Instant::now();
    let (_, stable, both) = two_by_two_fillings();
    let took = start.elapsed();
    let ok = both == 16 && BigUint::from(both) == count_bin_stable(2) && took < EXHAUSTIVE_N2_LIMIT;
    outcome(ok, format!("{both} of {stable} stable fillings satisfy both bins, {}", secs(took)))
}

fn c5_hook_formula() -> Option<Outcome> {
    let start = Instant::now();
    let mut shapes = 0;
    let mut mismatches = Vec::new();
    for total in 1..=10 {
        for shape in partitions(total) {
            shapes += 1;
            let listed = enumerate_tableaux(&shape, false).unwrap().len();
            if BigUint::from(listed) != count_tableaux_hook(&shape) {
                mismatches.push(shape.to_string());
            }
        }
    }
    let f22 = count_tableaux_hook(&Partition::square(2));
    let f333 = count_tableaux_hook(&Partition::square(3));
    let took = start.elapsed();
    let ok = mismatches.is_empty()
        && f22 == BigUint::from(2u32)
        && f333 == BigUint::from(42u32)
        && took < HOOK_LIMIT;
    outcome(
        ok,
        format!("{shapes} shapes, {} mismatches, f(2,2) = {f22}, f(3,3,3) = {f333}", mismatches.len()),
    )
}

fn c6_identity() -> Option<Outcome> {
    let two = enumerate_stable_states(&RankConfig::identity(2), false).unwrap().len();
    let three = enumerate_stable_states(&RankConfig::identity(3), false).unwrap().len();
    let hook2 = count_tableaux_hook(&Partition::square(2));
    let hook3 = count_tableaux_hook(&Partition::square(3));
    let ok = two == 2 && three == 42 && BigUint::from(two) == hook2 && BigUint::from(three) == hook3;
    outcome(ok, format!("n=2: {two} (hook {hook2}); n=3: {three} (hook {hook3})"))
}

fn c7_probe() -> Option<Outcome> {
    let two = max_stable_states_probe(2, Sampling::Exhaustive).unwrap();
    let three = max_stable_states_probe(3, Sampling::Exhaustive).unwrap();
    let mut detail = format!(
        "n=2: max {} over {} configs (identity {}); n=3: max {} over {} configs (identity {}) at [{}]",
        two.max_observed,
        two.configs_examined,
        two.identity_count,
        three.max_observed,
        three.configs_examined,
        three.identity_count,
        three.argmax
    );
    if three.counterexample {
        detail.push_str(&format!("; COUNTEREXAMPLE at n=3: [{}]", three.argmax));
    }
    // an n = 3 counterexample is reported, not failed
    outcome(two.max_observed == 2 && two.identity_count == 2 && !two.counterexample, detail)
}

fn converges(g: &Grid, strategy: Strategy) -> bool {
    let trace = run_until_stable(g, strategy, default_step_limit(g.cell_count()), false).unwrap();
    let energies: Vec<_> = trace.energies().collect();
    trace.converged
        && is_stable(&trace.final_grid).stable
        && energies.windows(2).all(|w| w[0] <= w[1])
}

fn c8_convergence() -> Option<Outcome> {
    let start = Instant::now();
    let strategies = [Strategy::FullPass, Strategy::OddEvenCycle];
    let mut runs = 0;
    let mut failures = 0;
    for c in 0..24 {
        let ps = RankConfig::nth_lexicographic(2, c).unwrap().to_point_set();
        for p in 0..24 {
            let cells = RankConfig::nth_lexicographic(2, p).unwrap().perm().to_vec();
            let g = Grid::from_cell_ids(ps.clone(), 2, cells, &[]).unwrap();
            for s in strategies {
                runs += 1;
                failures += usize::from(!converges(&g, s));
            }
        }
    }
    for n in [4, 8] {
        for seed in 0..CONVERGENCE_SEEDS {
            let ps = gen_random(n, 2, seed, Distribution::UniformBox).unwrap();
            let g = Grid::from_id_order(ps, n).unwrap();
            for s in strategies {
                runs += 1;
                failures += usize::from(!converges(&g, s));
            }
        }
    }
    let took = start.elapsed();
    outcome(
        failures == 0 && took < CONVERGENCE_LIMIT,
        format!("{runs} runs, {failures} failures, {}", secs(took)),
    )
}

fn rows(r: [[(f64, f64); 2]; 2]) -> Grid {
    Grid::from_rows_bottom_up(&[r[0].to_vec(), r[1].to_vec()]).unwrap()
}

fn c9_cycle_trace() -> Option<Outcome> {
    let printed = [
        rows([[(0.0, 3.0), (1.0, 0.0)], [(3.0, 1.0), (2.0, 2.0)]]),
        rows([[(0.0, 3.0), (1.0, 0.0)], [(2.0, 2.0), (3.0, 1.0)]]),
        rows([[(2.0, 2.0), (1.0, 0.0)], [(0.0, 3.0), (3.0, 1.0)]]),
        rows([[(1.0, 0.0), (2.0, 2.0)], [(0.0, 3.0), (3.0, 1.0)]]),
        rows([[(1.0, 0.0), (3.0, 1.0)], [(0.0, 3.0), (2.0, 2.0)]]),
    ];
    let kinds = [
        StepKind::OddColExchange,
        StepKind::OddRowExchange,
        StepKind::OddColExchange,
        StepKind::OddRowExchange,
    ];
    let mut g = printed[0].clone();
    let mut ok = true;
    let mut tracked = Vec::new();
    let id_22 = 4; // (2,2) is the last point of the bottom-up rows
    tracked.push(locate(&g, id_22).unwrap());
    for (kind, want) in kinds.iter().zip(&printed[1..]) {
        g = odd_even_step(&g, *kind).unwrap().0;
        ok &= g.rows_bottom_up() == want.rows_bottom_up();
        tracked.push(locate(&g, id_22).unwrap());
    }
    ok &= is_stable(&g).stable;

    // the full cycle with snapshots must pass through the same grids
    let trace = run_until_stable(&printed[0], Strategy::OddEvenCycle, 100, true).unwrap();
    let changed: Vec<Vec<usize>> = trace
        .steps
        .iter()
        .filter(|s| s.changed)
        .map(|s| s.snapshot.clone().unwrap())
        .collect();
    let wanted: Vec<Vec<usize>> = printed[1..]
        .iter()
        .map(|p| {
            p.placement()
                .cell_ids()
                .iter()
                .map(|&id| {
                    let target = &p.point(id).unwrap().coords;
                    printed[0].points().points().iter().find(|q| &q.coords == target).unwrap().id
                })
                .collect()
        })
        .collect();
    ok &= changed == wanted && trace.converged;

    let mut visited: Vec<GridIndex> = tracked[..4].to_vec();
    visited.sort();
    visited.dedup();
    ok &= visited.len() == 4 && tracked[0] == tracked[4];
    let path: Vec<String> = tracked.iter().map(|c| c.to_string()).collect();
    outcome(
        ok,
        format!(
            "{} phases, {} changing, snapshots match; (2,2) path {}",
            trace.step_count,
            changed.len(),
            path.join(" -> ")
        ),
    )
}

/// Seconds per `N log2 N` for direct construction at doubling sizes.
fn scaling_constants() -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for exp in 12..=18 {
        let side = 1usize << (exp / 2);
        let side = if exp % 2 == 0 { side } else { (side as f64 * std::f64::consts::SQRT_2) as usize };
        let ps = gen_random(side, 2, exp as u64, Distribution::UniformBox).unwrap();
        let n = ps.len();
        let best = (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(build_stable(&ps).unwrap());
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        out.push((n, best / (n as f64 * (n as f64).log2())));
    }
    out
}

fn c10_direct_build() -> Option<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut unstable = 0;
    let mut total_points = 0;
    for i in 0..RANDOM_SETS {
        let n = rng.random_range(2..=16usize);
        let d = if i % 2 == 0 { 2 } else { 3 };
        let full = n.pow(d as u32);
        let lower = (n - 1).pow(d as u32) + 1;
        let count = rng.random_range(lower..=full);
        let ps = gen_random(n, d, rng.random(), Distribution::UniformBox).unwrap();
        let ps = PointSet::from_coords(d, ps.points()[..count].iter().map(|p| p.coords.clone())).unwrap();
        total_points += count;
        let g = build_stable(&ps).unwrap();
        if g.n() != n || !is_stable_fast(&g) {
            unstable += 1;
        }
    }
    let constants = scaling_constants();
    let mut sorted: Vec<f64> = constants.iter().map(|c| c.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let in_band = constants
        .iter()
        .all(|&(_, c)| c <= median * SCALING_BAND && c >= median / SCALING_BAND);
    let ratios: Vec<String> = constants
        .iter()
        .map(|&(n, c)| format!("{n}:{:.2}", c / median))
        .collect();
    outcome(
        unstable == 0 && in_band,
        format!(
            "{RANDOM_SETS} sets ({total_points} points), {unstable} unstable; time/(N log N) relative to median {}",
            ratios.join(" ")
        ),
    )
}

fn c11_single_pair() -> Option<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 4, 8] {
        let set = gen_adversarial_single(n).unwrap();
        let (p, q) = (set.id_of("p").unwrap(), set.id_of("q").unwrap());
        let nn_p = exact_nn(&set.points, p, Metric::Euclidean).unwrap().0;
        let stable = is_stable(&set.reference).stable;
        let (cp, cq) = (locate(&set.reference, p).unwrap(), locate(&set.reference, q).unwrap());
        let corners = cp == GridIndex::new(vec![1, 1]) && cq == GridIndex::new(vec![n, n]);
        let ring = cp.ring_distance(&cq);
        let estimate = estimated_nn(&set.reference, p, 1, Metric::Euclidean).unwrap().map(|e| e.0);
        let differs = estimate != Some(q);
        ok &= nn_p == q && stable && corners && ring == n - 1 && differs;
        let est_label = estimate.map_or("none".to_string(), |e| set.labels[e - 1].clone());
        parts.push(format!(
            "n={n}: nn(p)={}, stable={stable}, p at {cp}, q at {cq}, ring {ring}, one-ring estimate {est_label}{}",
            set.labels[nn_p - 1],
            if differs { "" } else { " (equals q: the one-ring of a 2x2 corner is the whole grid)" }
        ));
    }
    outcome(ok, parts.join("; "))
}

fn c12_all_points() -> Option<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [4, 6, 8] {
        let set = gen_adversarial_all(n, 2).unwrap();
        let stable = is_stable(&set.reference).stable;
        let report = quality_for_grid(&set.reference, 1, Metric::Euclidean).unwrap();
        ok &= stable && report.one_ring_hit_rate == 0.0 && report.point_count == n * n;
        parts.push(format!("n={n}: stable={stable}, one-ring hit rate {}", report.one_ring_hit_rate));
    }
    outcome(ok, parts.join("; "))
}

/// Counts stable placements of a rank configuration by trying all `N!`
/// placements (Heap's algorithm). Ranks are distinct, so rows must increase
/// in x and columns in y.
fn naive_stable_count(cfg: &RankConfig) -> usize {
    let n = cfg.n();
    let total = n * n;
    let pts: Vec<(usize, usize)> = cfg.perm().iter().enumerate().map(|(i, &y)| (i + 1, y)).collect();
    let stable = |cells: &[usize]| {
        (0..total).all(|c| {
            let (x, y) = pts[cells[c]];
            (c % n + 1 == n || x < pts[cells[c + 1]].0) && (c + n >= total || y < pts[cells[c + n]].1)
        })
    };
    let mut cells: Vec<usize> = (0..total).collect();
    let mut count = usize::from(stable(&cells));
    let mut c = vec![0; total];
    let mut i = 1;
    while i < total {
        if c[i] < i {
            cells.swap(if i % 2 == 0 { 0 } else { c[i] }, i);
            count += usize::from(stable(&cells));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    count
}

fn c13_oracle() -> Option<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut mismatches = 0;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let mut checked = 0;
        for _ in 0..ORACLE_CONFIGS {
            let mut perm: Vec<usize> = (1..=n * n).collect();
            perm.shuffle(&mut rng);
            let cfg = RankConfig::new(n, perm).unwrap();
            let fast = count_stable_states(&cfg, None, false).unwrap();
            if fast != naive_stable_count(&cfg) {
                mismatches += 1;
            }
            checked += 1;
        }
        parts.push(format!("N={}: {checked} configs", n * n));
    }
    outcome(mismatches == 0, format!("{}, {mismatches} mismatches", parts.join(", ")))
}
