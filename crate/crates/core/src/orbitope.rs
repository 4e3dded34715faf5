//! Lexicographic utilities and orbitopal fixing.
//!
//! [`propagate_orbitope`] receives a grid of cell domains (`only0`, `only1`,
//! `free`) and computes *exactly* the set of cells that take the same value
//! in every completion whose columns are lexicographically non-increasing
//! and whose rows satisfy the kind's row rule (none / sum <= 1 / sum = 1).
//! The contract is forced-cell exactness; `oracle::forced_cells` re-derives
//! the same set by enumeration and the two are tested against each other.
//!
//! Two algorithms back the contract:
//!
//! * **Full orbitopes.** For column `j`, the values it can take across all
//!   sorted completions are exactly the admissible strings between the
//!   lexicographically minimal chain built right-to-left and the maximal
//!   chain built left-to-right. Membership queries with one extra pinned
//!   cell then decide every cell in `O(m)` per query.
//! * **Packing/partitioning orbitopes.** Row sums <= 1 make a sorted matrix
//!   equivalent to a restricted-growth sequence: writing `c(i)` for the
//!   column holding row `i`'s one (0 for an empty row), sortedness holds iff
//!   `c(i) <= 1 + max` of the previous nonzero values. A forward/backward
//!   reachability pass over the (row, running-max) states decides every
//!   cell in `O(m n^2)`.

use std::cmp::Ordering;

use thiserror::Error;

use crate::model::OrbitopeKind;

/// Domain of a single grid cell.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CellDomain {
    Only0,
    Only1,
    Free,
}

/// An `m x n` grid of cell domains, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainGrid {
    rows: usize,
    cols: usize,
    cells: Vec<CellDomain>,
}

impl DomainGrid {
    pub fn free(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "grid must be at least 1x1");
        Self {
            rows,
            cols,
            cells: vec![CellDomain::Free; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> CellDomain {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, dom: CellDomain) {
        self.cells[row * self.cols + col] = dom;
    }

    pub fn fix(&mut self, row: usize, col: usize, value: bool) {
        self.set(
            row,
            col,
            if value { CellDomain::Only1 } else { CellDomain::Only0 },
        );
    }

    fn column(&self, col: usize) -> Vec<CellDomain> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }
}

/// Fixings implied by the orbitope condition, or infeasibility.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixDelta {
    /// `(row, col, value)` for every newly forced free cell.
    pub fixes: Vec<(usize, usize, bool)>,
    pub infeasible: bool,
}

impl FixDelta {
    fn infeasible() -> Self {
        Self {
            fixes: Vec::new(),
            infeasible: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty() && !self.infeasible
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("lexicographic comparison of sequences with different lengths ({left} vs {right})")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

/// Lexicographic comparison of two equal-length 0/1 sequences.
/// `a` is greater iff at the first differing position it holds a 1.
pub fn lex_cmp(a: &[bool], b: &[bool]) -> Result<Ordering, LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.cmp(b))
}

/// Maximal exact propagation for the given orbitope kind; see module docs.
pub fn propagate_orbitope(grid: &DomainGrid, kind: OrbitopeKind) -> FixDelta {
    match kind {
        OrbitopeKind::Full => propagate_full(grid),
        OrbitopeKind::Packing => propagate_row_rule(grid, false),
        OrbitopeKind::Partitioning => propagate_row_rule(grid, true),
    }
}

// --- full orbitope -------------------------------------------------------

/// Lexicographically minimal admissible string `s >= lo`, or `None`.
fn lex_min_geq(dom: &[CellDomain], lo: &[bool]) -> Option<Vec<bool>> {
    let m = dom.len();
    let mut raise = None; // last free position where lo holds a 0
    for i in 0..m {
        match dom[i] {
            CellDomain::Only1 if !lo[i] => {
                // strictly above lo from here on: minimal suffix
                let mut s = lo[..i].to_vec();
                s.push(true);
                s.extend(dom[i + 1..].iter().map(|&d| d == CellDomain::Only1));
                return Some(s);
            }
            CellDomain::Only1 => {}
            CellDomain::Only0 if lo[i] => {
                // forced below lo: raise an earlier free 0 to 1
                let j = raise?;
                let mut s = lo[..j].to_vec();
                s.push(true);
                s.extend(dom[j + 1..].iter().map(|&d| d == CellDomain::Only1));
                return Some(s);
            }
            CellDomain::Only0 => {}
            CellDomain::Free => {
                if !lo[i] {
                    raise = Some(i);
                }
            }
        }
    }
    Some(lo.to_vec())
}

/// Lexicographically maximal admissible string `s <= hi`, or `None`.
fn lex_max_leq(dom: &[CellDomain], hi: &[bool]) -> Option<Vec<bool>> {
    let m = dom.len();
    let mut lower = None; // last free position where hi holds a 1
    for i in 0..m {
        match dom[i] {
            CellDomain::Only0 if hi[i] => {
                let mut s = hi[..i].to_vec();
                s.push(false);
                s.extend(dom[i + 1..].iter().map(|&d| d != CellDomain::Only0));
                return Some(s);
            }
            CellDomain::Only0 => {}
            CellDomain::Only1 if !hi[i] => {
                let j = lower?;
                let mut s = hi[..j].to_vec();
                s.push(false);
                s.extend(dom[j + 1..].iter().map(|&d| d != CellDomain::Only0));
                return Some(s);
            }
            CellDomain::Only1 => {}
            CellDomain::Free => {
                if hi[i] {
                    lower = Some(i);
                }
            }
        }
    }
    Some(hi.to_vec())
}

/// Is there an admissible string in `[lo, hi]` with position `pin` = `val`?
fn exists_pinned(dom: &[CellDomain], lo: &[bool], hi: &[bool], pin: usize, val: bool) -> bool {
    match (dom[pin], val) {
        (CellDomain::Only0, true) | (CellDomain::Only1, false) => return false,
        _ => {}
    }
    let mut pinned = dom.to_vec();
    pinned[pin] = if val { CellDomain::Only1 } else { CellDomain::Only0 };
    match lex_min_geq(&pinned, lo) {
        Some(s) => s.as_slice() <= hi,
        None => false,
    }
}

fn propagate_full(grid: &DomainGrid) -> FixDelta {
    let (m, n) = (grid.rows, grid.cols);
    let cols: Vec<Vec<CellDomain>> = (0..n).map(|j| grid.column(j)).collect();

    // lower[j]: minimal value of column j over chains of columns j..n-1
    let mut lower = vec![vec![false; m]; n + 1];
    for j in (0..n).rev() {
        let floor = lower[j + 1].clone();
        match lex_min_geq(&cols[j], &floor) {
            Some(s) => lower[j] = s,
            None => return FixDelta::infeasible(),
        }
    }
    // upper[j]: maximal value of column j over chains of columns 0..j
    let mut upper = vec![vec![true; m]; n];
    let mut ceil = vec![true; m];
    for j in 0..n {
        match lex_max_leq(&cols[j], &ceil) {
            Some(s) => {
                upper[j] = s;
                ceil = upper[j].clone();
            }
            None => return FixDelta::infeasible(),
        }
    }

    let mut delta = FixDelta::default();
    let all_true = vec![true; m];
    for j in 0..n {
        let lo = &lower[j + 1];
        let hi = if j == 0 { &all_true } else { &upper[j - 1] };
        for i in 0..m {
            if grid.get(i, j) != CellDomain::Free {
                continue;
            }
            let can0 = exists_pinned(&cols[j], lo, hi, i, false);
            let can1 = exists_pinned(&cols[j], lo, hi, i, true);
            match (can0, can1) {
                (false, false) => return FixDelta::infeasible(),
                (true, false) => delta.fixes.push((i, j, false)),
                (false, true) => delta.fixes.push((i, j, true)),
                (true, true) => {}
            }
        }
    }
    delta.fixes.sort_unstable();
    delta
}

// --- packing / partitioning ----------------------------------------------

/// Choice mask for a row: bit 0 = empty row, bit `c` = one in column `c-1`.
fn row_choices(grid: &DomainGrid, row: usize, allow_empty: bool) -> u64 {
    let n = grid.cols;
    let mut forced = None;
    for j in 0..n {
        if grid.get(row, j) == CellDomain::Only1 {
            if forced.is_some() {
                return 0; // two ones in a row can never satisfy the row rule
            }
            forced = Some(j);
        }
    }
    if let Some(j) = forced {
        return 1u64 << (j + 1);
    }
    let mut mask = if allow_empty { 1 } else { 0 };
    for j in 0..n {
        if grid.get(row, j) != CellDomain::Only0 {
            mask |= 1u64 << (j + 1);
        }
    }
    mask
}

fn propagate_row_rule(grid: &DomainGrid, partitioning: bool) -> FixDelta {
    let (m, n) = (grid.rows, grid.cols);
    assert!(n < 63, "row-rule propagation supports at most 62 columns");
    let choices: Vec<u64> = (0..m)
        .map(|i| row_choices(grid, i, !partitioning))
        .collect();

    // reach[i][p]: rows 0..i admit a sorted completion with running max p
    let mut reach = vec![vec![false; n + 1]; m + 1];
    reach[0][0] = true;
    for i in 0..m {
        for p in 0..=n {
            if !reach[i][p] {
                continue;
            }
            for c in 0..=(p + 1).min(n) {
                if choices[i] & (1u64 << c) != 0 {
                    reach[i + 1][p.max(c)] = true;
                }
            }
        }
    }
    // done[i][p]: rows i..m-1 can be completed starting from running max p
    let mut done = vec![vec![false; n + 1]; m + 1];
    done[m] = vec![true; n + 1];
    for i in (0..m).rev() {
        for p in 0..=n {
            done[i][p] = (0..=(p + 1).min(n))
                .any(|c| choices[i] & (1u64 << c) != 0 && done[i + 1][p.max(c)]);
        }
    }
    if !done[0][0] {
        return FixDelta::infeasible();
    }

    let mut delta = FixDelta::default();
    for i in 0..m {
        for j in 0..n {
            if grid.get(i, j) != CellDomain::Free {
                continue;
            }
            let target = j + 1;
            let mut can1 = false;
            let mut can0 = false;
            for p in 0..=n {
                if !reach[i][p] {
                    continue;
                }
                for c in 0..=(p + 1).min(n) {
                    if choices[i] & (1u64 << c) == 0 || !done[i + 1][p.max(c)] {
                        continue;
                    }
                    if c == target {
                        can1 = true;
                    } else {
                        can0 = true;
                    }
                }
            }
            match (can0, can1) {
                (false, false) => return FixDelta::infeasible(),
                (true, false) => delta.fixes.push((i, j, false)),
                (false, true) => delta.fixes.push((i, j, true)),
                (true, true) => {}
            }
        }
    }
    delta.fixes.sort_unstable();
    delta
}
