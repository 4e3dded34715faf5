//! Brute-force ground truth for tiny instances.
//!
//! Everything here is defined by enumeration so it can serve as the
//! independent side of every check: feasible-set listing with exact
//! objectives, orbit enumeration under declared column symmetries, and
//! forced-cell computation for orbitope grids. Hard caps keep the
//! enumerations tractable; exceeding a cap is an error, never an
//! approximation.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::lp::complete_exact;
use crate::model::{MixedBinaryProgram, Rat, Sense, VarId, VarKind};
use crate::orbitope::{CellDomain, DomainGrid, FixDelta};
use crate::model::OrbitopeKind;
use crate::par;

/// Enumeration refuses binary spaces above this size.
pub const MAX_ENUM_BINARIES: usize = 24;
/// `forced_cells` refuses grids above this many cells.
pub const MAX_GRID_CELLS: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration cap exceeded: {got} binary variables, cap {cap}")]
    TooManyBinaries { got: usize, cap: usize },
    #[error("grid cap exceeded: {got} cells, cap {cap}")]
    GridTooLarge { got: usize, cap: usize },
}

/// One feasible point: the 0/1 pattern over binary variables (in variable
/// order), the full exact assignment, and its exact objective. For programs
/// with continuous variables the objective is optimized over the continuous
/// completion of the pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasiblePoint {
    pub pattern: Vec<bool>,
    pub assignment: Vec<Rat>,
    pub objective: Rat,
}

/// Binary variables of a program, in declaration order.
pub fn binary_positions(program: &MixedBinaryProgram) -> Vec<usize> {
    (0..program.n_vars())
        .filter(|&i| program.variables[i].kind == VarKind::Binary)
        .collect()
}

struct IntRow {
    terms: Vec<(usize, i64)>, // (pattern position, coefficient)
    lower: Option<i64>,
    upper: Option<i64>,
}

/// Pure-binary integer view for fast enumeration, when all data permits.
struct IntView {
    rows: Vec<IntRow>,
    forced: Vec<Option<bool>>, // per pattern position, from variable bounds
}

fn as_i64(r: &Rat) -> Option<i64> {
    if !r.denom().is_one() {
        return None;
    }
    r.numer().to_i64()
}

use num_traits::One;

fn int_view(program: &MixedBinaryProgram, binaries: &[usize]) -> Option<IntView> {
    if program.has_continuous() {
        return None;
    }
    let pos: BTreeMap<usize, usize> = binaries.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut forced = vec![None; binaries.len()];
    for (&i, &p) in &pos {
        let v = &program.variables[i];
        let lo = as_i64(&v.lower)?;
        let up = as_i64(&v.upper)?;
        forced[p] = match (lo, up) {
            (0, 1) => None,
            (1, 1) => Some(true),
            (0, 0) => Some(false),
            _ => return None,
        };
    }
    let mut rows = Vec::new();
    for c in &program.constraints {
        let mut terms = Vec::new();
        for t in &c.terms {
            terms.push((*pos.get(&t.var.idx())?, as_i64(&t.coeff)?));
        }
        let bound = |b: &Option<Rat>| -> Option<Option<i64>> {
            match b {
                Some(r) => as_i64(r).map(Some),
                None => Some(None),
            }
        };
        rows.push(IntRow {
            terms,
            lower: bound(&c.lower)?,
            upper: bound(&c.upper)?,
        });
    }
    Some(IntView {
        rows,
        forced,
    })
}

fn bit(code: u32, p: usize) -> bool {
    code >> p & 1 == 1
}

/// Exhaustively lists the feasible set with exact objectives.
///
/// Feasibility of each 0/1 pattern is decided by `evaluate` (exact rational
/// arithmetic); continuous variables, when present, are completed by the
/// exact LP and the pattern is kept only if a feasible completion exists.
pub fn enumerate_feasible(
    program: &MixedBinaryProgram,
) -> Result<Vec<FeasiblePoint>, OracleError> {
    let binaries = binary_positions(program);
    let k = binaries.len();
    if k > MAX_ENUM_BINARIES {
        return Err(OracleError::TooManyBinaries {
            got: k,
            cap: MAX_ENUM_BINARIES,
        });
    }
    let total: u32 = 1u32 << k;
    let view = int_view(program, &binaries);
    let has_continuous = program.has_continuous();

    let chunk = 1u32 << k.min(12);
    let starts: Vec<u32> = (0..total).step_by(chunk as usize).collect();
    let chunks = par::map(starts, |start| {
        let mut found = Vec::new();
        'next: for code in start..(start + chunk).min(total) {
            if let Some(v) = &view {
                for (p, f) in v.forced.iter().enumerate() {
                    if f.is_some_and(|want| want != bit(code, p)) {
                        continue 'next;
                    }
                }
                for row in &v.rows {
                    let acc: i64 = row
                        .terms
                        .iter()
                        .map(|&(p, c)| if bit(code, p) { c } else { 0 })
                        .sum();
                    if row.lower.is_some_and(|l| acc < l) || row.upper.is_some_and(|u| acc > u) {
                        continue 'next;
                    }
                }
            }
            let pattern: Vec<bool> = (0..k).map(|p| bit(code, p)).collect();
            let mut fixed: Vec<Option<Rat>> = vec![None; program.n_vars()];
            for (p, &i) in binaries.iter().enumerate() {
                fixed[i] = Some(if pattern[p] { Rat::one() } else { Rat::zero() });
            }
            if !has_continuous {
                let assignment: Vec<Rat> = fixed.into_iter().map(Option::unwrap).collect();
                match view {
                    // the integer view already decided feasibility exactly
                    Some(_) => {
                        let objective = program
                            .evaluate(&assignment)
                            .expect("complete assignment")
                            .objective;
                        found.push(FeasiblePoint {
                            pattern,
                            assignment,
                            objective,
                        });
                    }
                    None => {
                        let eval = program.evaluate(&assignment).expect("complete assignment");
                        if eval.feasible {
                            found.push(FeasiblePoint {
                                pattern,
                                assignment,
                                objective: eval.objective,
                            });
                        }
                    }
                }
            } else if let Some((assignment, objective)) = complete_exact(program, &fixed) {
                found.push(FeasiblePoint {
                    pattern,
                    assignment,
                    objective,
                });
            }
        }
        found
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Exact optimum over the feasible set, `None` when it is empty.
pub fn optimum(program: &MixedBinaryProgram) -> Result<Option<Rat>, OracleError> {
    let pts = enumerate_feasible(program)?;
    Ok(match program.sense {
        Sense::Maximize => pts.into_iter().map(|p| p.objective).max(),
        Sense::Minimize => pts.into_iter().map(|p| p.objective).min(),
    })
}

/// A column-permutation action on binary patterns: `columns[c]` lists the
/// variables moved together when column `c` is permuted (matrix cells plus
/// any companion variables that must travel with the column).
#[derive(Clone, Debug)]
pub struct ColumnAction {
    pub columns: Vec<Vec<VarId>>,
}

impl ColumnAction {
    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    /// Applies a permutation of the columns to a pattern (the image's
    /// column `perm[c]` receives the values from column `c`).
    pub fn apply(
        &self,
        perm: &[usize],
        pattern: &[bool],
        pos_of: &BTreeMap<usize, usize>,
    ) -> Vec<bool> {
        let mut out = pattern.to_vec();
        for (c, col) in self.columns.iter().enumerate() {
            let target = &self.columns[perm[c]];
            debug_assert_eq!(col.len(), target.len());
            for (v, t) in col.iter().zip(target) {
                out[pos_of[&t.idx()]] = pattern[pos_of[&v.idx()]];
            }
        }
        out
    }
}

/// An orbit of the feasible set under a column action.
#[derive(Clone, Debug)]
pub struct Orbit {
    /// Feasible members, ascending in variable-order lexicographic reading.
    pub members: Vec<Vec<bool>>,
    /// Lexicographically maximal member under the declared variable order.
    pub representative: Vec<bool>,
    /// True when every permutation image of every member is again feasible;
    /// false flags an unsound action.
    pub closed: bool,
}

/// Partitions the feasible set into orbits under all permutations of the
/// action's columns (identity elsewhere).
pub fn enumerate_orbits(
    program: &MixedBinaryProgram,
    action: &ColumnAction,
) -> Result<Vec<Orbit>, OracleError> {
    let binaries = binary_positions(program);
    let pos_of: BTreeMap<usize, usize> =
        binaries.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let feasible = enumerate_feasible(program)?;
    let feasible_set: std::collections::BTreeSet<Vec<bool>> =
        feasible.iter().map(|p| p.pattern.clone()).collect();

    let perms: Vec<Vec<usize>> = (0..action.arity()).permutations(action.arity()).collect();
    let mut groups: BTreeMap<Vec<bool>, (Vec<Vec<bool>>, bool)> = BTreeMap::new();
    for point in &feasible {
        let mut canon = point.pattern.clone();
        let mut closed = true;
        for perm in &perms {
            let image = action.apply(perm, &point.pattern, &pos_of);
            if !feasible_set.contains(&image) {
                closed = false;
            }
            if image > canon {
                canon = image;
            }
        }
        let entry = groups.entry(canon).or_insert_with(|| (Vec::new(), true));
        entry.0.push(point.pattern.clone());
        entry.1 &= closed;
    }
    Ok(groups
        .into_values()
        .map(|(mut members, closed)| {
            members.sort();
            let representative = members.last().cloned().expect("nonempty orbit");
            Orbit {
                members,
                representative,
                closed,
            }
        })
        .collect())
}

/// Reference forced-cell computation by full enumeration of completions.
///
/// Mirrors the contract of [`crate::orbitope::propagate_orbitope`]: the
/// delta holds exactly the free cells sharing one value across all sorted,
/// row-rule-respecting completions of the grid.
pub fn forced_cells(grid: &DomainGrid, kind: OrbitopeKind) -> Result<FixDelta, OracleError> {
    let (m, n) = (grid.rows(), grid.cols());
    let cells = m * n;
    if cells > MAX_GRID_CELLS {
        return Err(OracleError::GridTooLarge {
            got: cells,
            cap: MAX_GRID_CELLS,
        });
    }
    let free: Vec<(usize, usize)> = (0..m)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .filter(|&(r, c)| grid.get(r, c) == CellDomain::Free)
        .collect();

    let mut seen0 = vec![false; free.len()];
    let mut seen1 = vec![false; free.len()];
    let mut any = false;
    let mut matrix = vec![vec![false; n]; m];
    for r in 0..m {
        for c in 0..n {
            matrix[r][c] = grid.get(r, c) == CellDomain::Only1;
        }
    }

    for code in 0..1u32 << free.len() {
        for (p, &(r, c)) in free.iter().enumerate() {
            matrix[r][c] = bit(code, p);
        }
        let rows_ok = match kind {
            OrbitopeKind::Full => true,
            OrbitopeKind::Packing => matrix
                .iter()
                .all(|row| row.iter().filter(|&&v| v).count() <= 1),
            OrbitopeKind::Partitioning => matrix
                .iter()
                .all(|row| row.iter().filter(|&&v| v).count() == 1),
        };
        if !rows_ok {
            continue;
        }
        let sorted = (1..n).all(|c| {
            let left: Vec<bool> = (0..m).map(|r| matrix[r][c - 1]).collect();
            let right: Vec<bool> = (0..m).map(|r| matrix[r][c]).collect();
            left >= right
        });
        if !sorted {
            continue;
        }
        any = true;
        for (p, &(r, c)) in free.iter().enumerate() {
            if matrix[r][c] {
                seen1[p] = true;
            } else {
                seen0[p] = true;
            }
        }
    }

    if !any {
        return Ok(FixDelta {
            fixes: Vec::new(),
            infeasible: true,
        });
    }
    let mut fixes = Vec::new();
    for (p, &(r, c)) in free.iter().enumerate() {
        match (seen0[p], seen1[p]) {
            (true, false) => fixes.push((r, c, false)),
            (false, true) => fixes.push((r, c, true)),
            _ => {}
        }
    }
    fixes.sort_unstable();
    Ok(FixDelta {
        fixes,
        infeasible: false,
    })
}
