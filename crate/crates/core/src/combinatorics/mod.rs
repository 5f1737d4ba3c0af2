//! Counting and enumeration over rank-normalized square grids.

pub mod census;
pub mod counts;
pub mod enumerate;
pub mod tableaux;

pub use census::{
    census_unique, max_stable_states_probe, pruned_candidates, unique_configs_pruned,
    CensusMethod, CensusOptions, CensusRecord, CensusResult, ProbeResult, Sampling,
    PUBLISHED_N4_CANDIDATES,
};
pub use counts::{
    count_bin_stable, count_fillings, count_stable_fillings, factorial, log2_big,
    lower_bound_bits, square_tableaux_count, stable_fraction, LowerBound,
};
pub use enumerate::{
    check_bin_conditions, check_submatrix_unique, count_stable_placements, count_stable_states,
    enumerate_stable_states, stable_placements, RankConfig, STATE_GUARD,
};
pub use tableaux::{
    count_linear_extensions_lattice, count_tableaux_hook, enumerate_tableaux, partitions,
    tableau_from_lattice_labels, Partition, Tableau, ENUMERATION_GUARD,
};
