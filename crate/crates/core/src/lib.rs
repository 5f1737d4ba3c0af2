//! Neighbourhood grids: `n^d` arrangements of points that are sorted along
//! every axis, the iterative strategies that reach them, combinatorics of
//! their stable states, and neighbour-estimation quality measurements.

pub mod combinatorics;
pub mod error;
pub mod grid;
pub mod io;
pub mod iterate;
pub mod quality;

pub use error::{GridError, Result};
pub use grid::{
    build_stable, cmp_on_axis, is_stable, is_stable_fast, locate, normalize_ranks, pad_points,
    side_length_for, total_less, Grid, GridIndex, Padded, Placement, Point, PointSet,
    StabilityReport, Violation,
};
pub use iterate::{
    default_step_limit, energy, exchange_pairs, full_pass, max_energy_swap_pass, odd_even_step,
    placement_digest, rank_energy, run_until_stable, EnergyValue, SortTrace, StepKind, Strategy,
    TraceStep,
};
pub use quality::{
    build_with, estimated_nn, exact_nn, exact_nn_in_grid, gen_adversarial_all,
    gen_adversarial_single, gen_random, quality_for_grid, quality_report, AdversarialSet, Builder,
    Distribution, Metric, NeighborEstimate, QualityReport,
};
