//! Integer partitions, standard Young tableaux and the hook length formula.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use super::counts::factorial;
use crate::error::{GridError, Result};

/// Default ceiling on `N` for exhaustive enumeration.
pub const ENUMERATION_GUARD: usize = 16;

/// A partition `lambda_1 >= lambda_2 >= ... >= lambda_l > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(GridError::InvalidPartition(format!(
                "{parts:?} has a zero part"
            )));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(GridError::InvalidPartition(format!(
                "{parts:?} is not non-increasing"
            )));
        }
        Ok(Self(parts))
    }

    /// The `n x n` square shape `(n, ..., n)`.
    pub fn square(n: usize) -> Self {
        Self(vec![n; n])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn num_rows(&self) -> usize {
        self.0.len()
    }

    /// Hook length of the 1-based cell `(i, j)`: the cell itself, the cells
    /// to its right in row `i`, and the cells below it in column `j`.
    pub fn hook_length(&self, i: usize, j: usize) -> Option<usize> {
        let row_len = *self.0.get(i.checked_sub(1)?)?;
        if j == 0 || j > row_len {
            return None;
        }
        let arm = row_len - j;
        let leg = self.0[i..].iter().take_while(|&&len| len >= j).count();
        Some(arm + leg + 1)
    }

    pub fn hook_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(move |(i, &len)| {
            (1..=len).map(move |j| self.hook_length(i + 1, j).expect("inside diagram"))
        })
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// All partitions of `total`, largest first part first.
pub fn partitions(total: usize) -> Vec<Partition> {
    fn go(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            prefix.push(part);
            go(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(total, total, &mut Vec::new(), &mut out);
    out
}

/// `N! / prod(hook lengths)`.
pub fn count_tableaux_hook(shape: &Partition) -> BigUint {
    let hooks = shape
        .hook_lengths()
        .fold(BigUint::one(), |acc, h| acc * h);
    factorial(shape.size() as u64) / hooks
}

/// A filling of a Ferrers diagram; `rows[i][j]` is the entry of cell
/// `(i + 1, j + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Tableau {
    shape: Partition,
    rows: Vec<Vec<usize>>,
}

impl Tableau {
    /// Checks that `rows` fills `shape` with `1..=N` bijectively.
    pub fn new(shape: Partition, rows: Vec<Vec<usize>>) -> Result<Self> {
        let lens: Vec<usize> = rows.iter().map(Vec::len).collect();
        if lens != shape.0 {
            return Err(GridError::InvalidArgument(format!(
                "row lengths {lens:?} do not match shape {shape}"
            )));
        }
        let total = shape.size();
        let mut seen = vec![false; total];
        for &v in rows.iter().flatten() {
            if v == 0 || v > total || std::mem::replace(&mut seen[v - 1], true) {
                return Err(GridError::InvalidPermutation(total));
            }
        }
        Ok(Self { shape, rows })
    }

    pub fn shape(&self) -> &Partition {
        &self.shape
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn is_standard(&self) -> bool {
        let rows_ok = self.rows.iter().all(|r| r.windows(2).all(|w| w[0] < w[1]));
        let cols_ok = self
            .rows
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(below, above)| above < below));
        rows_ok && cols_ok
    }
}

/// All standard tableaux of the given shape, by placing `1, 2, ..., N` one
/// at a time into cells whose left and upper neighbours are already filled.
pub fn enumerate_tableaux(shape: &Partition, allow_large: bool) -> Result<Vec<Tableau>> {
    let total = shape.size();
    if total > ENUMERATION_GUARD && !allow_large {
        return Err(GridError::GuardExceeded {
            what: "N",
            size: total,
            limit: ENUMERATION_GUARD,
        });
    }
    let mut rows: Vec<Vec<usize>> = shape.0.iter().map(|&l| Vec::with_capacity(l)).collect();
    let mut out = Vec::new();
    fill_next(shape, 1, &mut rows, &mut out);
    Ok(out)
}

fn fill_next(shape: &Partition, next: usize, rows: &mut [Vec<usize>], out: &mut Vec<Tableau>) {
    if next > shape.size() {
        out.push(Tableau {
            shape: shape.clone(),
            rows: rows.to_vec(),
        });
        return;
    }
    for i in 0..rows.len() {
        let filled = rows[i].len();
        if filled < shape.0[i] && (i == 0 || rows[i - 1].len() > filled) {
            rows[i].push(next);
            fill_next(shape, next + 1, rows, out);
            rows[i].pop();
        }
    }
}

/// Number of linear extensions of the `n x n` product order. Reading a
/// linear extension `f` as the matrix `(f(i, j))` is a bijection onto the
/// standard tableaux of shape `(n, ..., n)`.
pub fn count_linear_extensions_lattice(n: usize) -> BigUint {
    super::counts::square_tableaux_count(n)
}

/// The tableau induced by a labelling `labels[i][j] = f(i + 1, j + 1)` of the
/// `n x n` lattice. Fails unless the labelling is a bijection onto `1..=n^2`;
/// the result is standard exactly when `f` is order preserving.
pub fn tableau_from_lattice_labels(labels: Vec<Vec<usize>>) -> Result<Tableau> {
    Tableau::new(Partition::square(labels.len()), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![3, 1]).is_ok());
        assert!(Partition::new(vec![1, 3]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=10).map(|n| partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
        assert_eq!(
            partitions(4),
            vec![
                Partition(vec![4]),
                Partition(vec![3, 1]),
                Partition(vec![2, 2]),
                Partition(vec![2, 1, 1]),
                Partition(vec![1, 1, 1, 1]),
            ]
        );
    }

    #[test]
    fn hook_example() {
        let shape = Partition::new(vec![5, 4, 3, 3, 1]).unwrap();
        assert_eq!(shape.hook_length(2, 2), Some(5));
        assert_eq!(shape.hook_length(1, 1), Some(9));
        assert_eq!(shape.hook_length(5, 1), Some(1));
        assert_eq!(shape.hook_length(5, 2), None);
        assert_eq!(shape.hook_length(0, 1), None);
    }

    #[test]
    fn hook_formula_examples() {
        let count = |p: Vec<usize>| count_tableaux_hook(&Partition::new(p).unwrap());
        assert_eq!(count(vec![3, 1]), BigUint::from(3u32));
        assert_eq!(count(vec![2, 2]), BigUint::from(2u32));
        assert_eq!(count(vec![3, 3, 3]), BigUint::from(42u32));
        assert_eq!(count(vec![4, 4, 4, 4]), BigUint::from(24_024u32));
    }

    #[test]
    fn enumeration_examples() {
        let column = enumerate_tableaux(&Partition::new(vec![1, 1, 1]).unwrap(), false).unwrap();
        assert_eq!(column.len(), 1);
        assert_eq!(column[0].rows(), &[vec![1], vec![2], vec![3]]);

        let square = enumerate_tableaux(&Partition::square(2), false).unwrap();
        let fillings: Vec<&[Vec<usize>]> = square.iter().map(|t| t.rows()).collect();
        assert_eq!(
            fillings,
            vec![&[vec![1, 2], vec![3, 4]][..], &[vec![1, 3], vec![2, 4]][..]]
        );

        assert_eq!(enumerate_tableaux(&Partition::square(3), false).unwrap().len(), 42);
    }

    #[test]
    fn enumeration_guard() {
        let big = Partition::new(vec![9, 8]).unwrap();
        assert!(matches!(
            enumerate_tableaux(&big, false),
            Err(GridError::GuardExceeded { size: 17, .. })
        ));
        let shape = Partition::new(vec![16, 1]).unwrap();
        assert_eq!(enumerate_tableaux(&shape, true).unwrap().len(), 16);
    }

    #[test]
    fn hook_formula_matches_enumeration_up_to_twelve() {
        for total in 1..=12 {
            for shape in partitions(total) {
                let listed = enumerate_tableaux(&shape, false).unwrap();
                assert!(listed.iter().all(Tableau::is_standard));
                assert_eq!(BigUint::from(listed.len()), count_tableaux_hook(&shape), "{shape}");
            }
        }
    }

    #[test]
    fn standardness() {
        let shape = Partition::new(vec![3, 1]).unwrap();
        let good = Tableau::new(shape.clone(), vec![vec![1, 2, 3], vec![4]]).unwrap();
        let bad = Tableau::new(shape.clone(), vec![vec![4, 1, 3], vec![2]]).unwrap();
        assert!(good.is_standard());
        assert!(!bad.is_standard());
        assert!(Tableau::new(shape.clone(), vec![vec![1, 1, 3], vec![2]]).is_err());
        assert!(Tableau::new(shape, vec![vec![1, 2], vec![3, 4]]).is_err());
    }

    #[test]
    fn lattice_extensions() {
        assert_eq!(count_linear_extensions_lattice(1), BigUint::from(1u32));
        assert_eq!(count_linear_extensions_lattice(2), BigUint::from(2u32));
        assert_eq!(count_linear_extensions_lattice(3), BigUint::from(42u32));
        let t = tableau_from_lattice_labels(vec![vec![1, 3], vec![2, 4]]).unwrap();
        assert!(t.is_standard());
    }
}
