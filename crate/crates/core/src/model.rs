//! Mixed-binary programs with exact rational data.
//!
//! The model layer is the single source of truth for feasibility: all
//! coefficients are [`Rat`] (arbitrary-precision rationals) and
//! [`MixedBinaryProgram::evaluate`] checks constraints exactly, so oracle
//! tests and incumbent acceptance never depend on floating-point tolerances.
//! The LP layer converts to floating point on its own.
//!
//! Binary variables may additionally be arranged in [`VarMatrix`] grids.
//! A matrix declares that permuting its columns maps feasible solutions to
//! feasible solutions of equal objective; it is the object the symmetry
//! machinery in [`crate::orbitope`] and [`crate::subsym`] acts on. Matrices
//! are declared by the model builder, never inferred.
//!
//! ## Canonical text form
//!
//! [`MixedBinaryProgram::to_canonical_json`] emits a stable JSON document:
//! struct keys in declaration order, variables/constraints/matrices in index
//! order, rationals as `"n"` or `"n/d"` strings and missing bounds as
//! `null`. Two equal programs serialize to byte-identical documents, which
//! golden-file tests rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational scalar used throughout the model layer.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat(v: i64) -> Rat {
    Rat::from_integer(v.into())
}

/// Rational from a numerator/denominator pair.
pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

/// Identifier of a variable inside its owning program (a dense index).
#[derive(
    Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VarId(pub u32);

impl VarId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// True if `a` is a strictly better objective value than `b`.
    pub fn better(self, a: &Rat, b: &Rat) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Continuous,
}

/// Row-sum rule attached to a variable matrix (or a submatrix activation).
///
/// `Full` leaves rows unconstrained, `Packing` requires row sums `<= 1`,
/// `Partitioning` requires row sums `= 1`. In all three cases the handled
/// symmetry condition is that columns are lexicographically non-increasing.
#[derive(
    Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OrbitopeKind {
    Full,
    Packing,
    Partitioning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub kind: VarKind,
    #[serde(with = "rat_text")]
    pub lower: Rat,
    #[serde(with = "rat_text")]
    pub upper: Rat,
    #[serde(with = "rat_text")]
    pub objective: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub var: VarId,
    #[serde(with = "rat_text")]
    pub coeff: Rat,
}

/// `lower <= sum(terms) <= upper`; a `None` bound leaves that side open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<Term>,
    #[serde(with = "rat_bound")]
    pub lower: Option<Rat>,
    #[serde(with = "rat_bound")]
    pub upper: Option<Rat>,
}

/// An `rows x cols` arrangement of distinct binary variables, stored
/// row-major. Declaring a matrix asserts that permuting its columns is a
/// symmetry of the program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarMatrix {
    pub label: String,
    pub kind: OrbitopeKind,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<VarId>,
}

impl VarMatrix {
    pub fn entry(&self, row: usize, col: usize) -> VarId {
        debug_assert!(row < self.rows && col < self.cols);
        self.entries[row * self.cols + col]
    }
}

/// A submatrix of a declared [`VarMatrix`]: a set of rows and an ordered
/// list of columns, both strictly increasing in the matrix's native order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Submatrix {
    /// Index of the matrix in the owning program.
    pub matrix: usize,
    pub row_set: Vec<usize>,
    pub col_list: Vec<usize>,
}

impl Submatrix {
    /// Checks index ranges and strict monotonicity against `m`.
    pub fn validate(&self, m: &VarMatrix) -> Result<(), String> {
        let mono = |v: &[usize], n: usize| {
            v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|&i| i < n) && !v.is_empty()
        };
        if !mono(&self.row_set, m.rows) {
            return Err(format!(
                "submatrix of '{}': row set must be strictly increasing and in range",
                m.label
            ));
        }
        if !mono(&self.col_list, m.cols) {
            return Err(format!(
                "submatrix of '{}': column list must be strictly increasing and in range",
                m.label
            ));
        }
        Ok(())
    }
}

/// Result of an exact evaluation of an assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: Rat,
    pub feasible: bool,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("incomplete assignment: expected {expected} values, got {got}")]
    IncompleteAssignment { expected: usize, got: usize },
}

/// Objective, variables, linear constraints and declared symmetry matrices.
///
/// Immutable once handed to a solver; safe to share read-only across
/// concurrent solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedBinaryProgram {
    pub name: String,
    pub sense: Sense,
    pub variables: Vec<VariableDecl>,
    pub constraints: Vec<LinearConstraint>,
    pub matrices: Vec<VarMatrix>,
}

impl MixedBinaryProgram {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            matrices: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, id: VarId) -> &VariableDecl {
        &self.variables[id.idx()]
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: Rat) -> VarId {
        self.add_var(VariableDecl {
            name: name.into(),
            kind: VarKind::Binary,
            lower: Rat::zero(),
            upper: Rat::one(),
            objective,
        })
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: Rat,
        upper: Rat,
        objective: Rat,
    ) -> VarId {
        self.add_var(VariableDecl {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
            objective,
        })
    }

    pub fn add_var(&mut self, decl: VariableDecl) -> VarId {
        let id = VarId(self.variables.len() as u32);
        self.variables.push(decl);
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, Rat)>,
        lower: Option<Rat>,
        upper: Option<Rat>,
    ) -> usize {
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms: terms
                .into_iter()
                .map(|(var, coeff)| Term { var, coeff })
                .collect(),
            lower,
            upper,
        });
        self.constraints.len() - 1
    }

    pub fn add_le(&mut self, name: impl Into<String>, terms: Vec<(VarId, Rat)>, ub: Rat) -> usize {
        self.add_constraint(name, terms, None, Some(ub))
    }

    pub fn add_ge(&mut self, name: impl Into<String>, terms: Vec<(VarId, Rat)>, lb: Rat) -> usize {
        self.add_constraint(name, terms, Some(lb), None)
    }

    pub fn add_eq(&mut self, name: impl Into<String>, terms: Vec<(VarId, Rat)>, rhs: Rat) -> usize {
        self.add_constraint(name, terms, Some(rhs.clone()), Some(rhs))
    }

    pub fn add_matrix(&mut self, matrix: VarMatrix) -> usize {
        self.matrices.push(matrix);
        self.matrices.len() - 1
    }

    /// Binary variables in index order.
    pub fn binary_vars(&self) -> Vec<VarId> {
        (0..self.variables.len())
            .filter(|&i| self.variables[i].kind == VarKind::Binary)
            .map(|i| VarId(i as u32))
            .collect()
    }

    pub fn has_continuous(&self) -> bool {
        self.variables.iter().any(|v| v.kind == VarKind::Continuous)
    }

    /// Checks every structural invariant and returns one description per
    /// violation. An empty list means the program is well-formed.
    ///
    /// Violations are data, not failures: builders are tested to produce
    /// none, but hand-built programs may legitimately be probed with this.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let nv = self.variables.len();

        let mut seen = BTreeMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if let Some(first) = seen.insert(v.name.clone(), i) {
                out.push(format!(
                    "duplicate variable identifier '{}' (variables {} and {})",
                    v.name, first, i
                ));
            }
            match v.kind {
                VarKind::Binary => {
                    let zero = Rat::zero();
                    let one = Rat::one();
                    let bin = |b: &Rat| *b == zero || *b == one;
                    if !bin(&v.lower) || !bin(&v.upper) || v.lower > v.upper {
                        out.push(format!(
                            "binary variable '{}' must have bounds in {{0,1}} with lower <= upper",
                            v.name
                        ));
                    }
                }
                VarKind::Continuous => {
                    if v.lower > v.upper {
                        out.push(format!(
                            "continuous variable '{}' has lower > upper",
                            v.name
                        ));
                    }
                }
            }
        }

        for c in &self.constraints {
            let mut used = BTreeSet::new();
            for t in &c.terms {
                if t.var.idx() >= nv {
                    out.push(format!(
                        "constraint '{}' references unknown variable {}",
                        c.name, t.var
                    ));
                } else if !used.insert(t.var) {
                    out.push(format!(
                        "constraint '{}' repeats variable {}",
                        c.name,
                        self.variables[t.var.idx()].name
                    ));
                }
            }
            if let (Some(lo), Some(up)) = (&c.lower, &c.upper) {
                if lo > up {
                    out.push(format!("constraint '{}' has lower > upper", c.name));
                }
            }
        }

        for m in &self.matrices {
            if m.entries.len() != m.rows * m.cols {
                out.push(format!(
                    "matrix '{}' has {} entries, expected {}x{}",
                    m.label,
                    m.entries.len(),
                    m.rows,
                    m.cols
                ));
                continue;
            }
            let mut used = BTreeSet::new();
            for &id in &m.entries {
                if id.idx() >= nv {
                    out.push(format!("matrix '{}' references unknown variable {}", m.label, id));
                } else {
                    if self.variables[id.idx()].kind != VarKind::Binary {
                        out.push(format!(
                            "matrix '{}' entry '{}' is not binary",
                            m.label,
                            self.variables[id.idx()].name
                        ));
                    }
                    if !used.insert(id) {
                        out.push(format!(
                            "matrix '{}' repeats variable '{}'",
                            m.label,
                            self.variables[id.idx()].name
                        ));
                    }
                }
            }
            if used.len() == m.entries.len() {
                match m.kind {
                    OrbitopeKind::Full => {}
                    OrbitopeKind::Packing => {
                        for r in 0..m.rows {
                            if !self.has_row_sum_constraint(m, r, false) {
                                out.push(format!(
                                    "matrix '{}' row {} lacks a row-sum <= 1 constraint",
                                    m.label, r
                                ));
                            }
                        }
                    }
                    OrbitopeKind::Partitioning => {
                        for r in 0..m.rows {
                            if !self.has_row_sum_constraint(m, r, true) {
                                out.push(format!(
                                    "matrix '{}' row {} lacks a row-sum = 1 constraint",
                                    m.label, r
                                ));
                            }
                        }
                    }
                }
            }
        }

        out
    }

    /// Looks for a constraint over exactly the row's variables, all with
    /// unit coefficients, with upper bound <= 1 (and, for `equality`,
    /// lower = upper = 1).
    fn has_row_sum_constraint(&self, m: &VarMatrix, row: usize, equality: bool) -> bool {
        let row_vars: BTreeSet<VarId> = (0..m.cols).map(|c| m.entry(row, c)).collect();
        let one = Rat::one();
        self.constraints.iter().any(|c| {
            if c.terms.len() != row_vars.len() {
                return false;
            }
            let vars: BTreeSet<VarId> = c.terms.iter().map(|t| t.var).collect();
            if vars != row_vars || c.terms.iter().any(|t| t.coeff != one) {
                return false;
            }
            match (&c.lower, &c.upper) {
                (Some(lo), Some(up)) if equality => *lo == one && *up == one,
                (_, Some(up)) if !equality => *up <= one,
                _ => false,
            }
        })
    }

    /// Exact evaluation of a complete assignment (one value per variable,
    /// in index order). Feasibility requires every variable bound, binary
    /// integrality, and every constraint to hold exactly.
    pub fn evaluate(&self, assignment: &[Rat]) -> Result<Evaluation, ModelError> {
        if assignment.len() != self.variables.len() {
            return Err(ModelError::IncompleteAssignment {
                expected: self.variables.len(),
                got: assignment.len(),
            });
        }
        let mut objective = Rat::zero();
        let mut feasible = true;
        for (v, val) in self.variables.iter().zip(assignment) {
            objective += &v.objective * val;
            if *val < v.lower || *val > v.upper {
                feasible = false;
            }
            if v.kind == VarKind::Binary && !val.is_zero() && !val.is_one() {
                feasible = false;
            }
        }
        if feasible {
            for c in &self.constraints {
                let mut acc = Rat::zero();
                for t in &c.terms {
                    acc += &t.coeff * &assignment[t.var.idx()];
                }
                if c.lower.as_ref().is_some_and(|lo| acc < *lo)
                    || c.upper.as_ref().is_some_and(|up| acc > *up)
                {
                    feasible = false;
                    break;
                }
            }
        }
        Ok(Evaluation { objective, feasible })
    }

    /// Stable text serialization (see module docs).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serialization cannot fail")
    }

    pub fn from_canonical_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

mod rat_text {
    use super::Rat;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|e| D::Error::custom(format!("bad rational '{text}': {e}")))
    }
}

mod rat_bound {
    use super::Rat;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| {
            t.parse()
                .map_err(|e| D::Error::custom(format!("bad rational '{t}': {e}")))
        })
        .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_mkp(weights: &[i64], profits: &[i64], caps: &[i64]) -> MixedBinaryProgram {
        // Hand-rolled here so model tests do not depend on the builders.
        let mut p = MixedBinaryProgram::new("tiny", Sense::Maximize);
        let m = weights.len();
        let n = caps.len();
        let mut y = vec![vec![VarId(0); n]; m];
        for i in 0..m {
            for j in 0..n {
                y[i][j] = p.add_binary(format!("y_{i}_{j}"), rat(profits[i]));
            }
        }
        for j in 0..n {
            let terms = (0..m).map(|i| (y[i][j], rat(weights[i]))).collect();
            p.add_le(format!("cap_{j}"), terms, rat(caps[j]));
        }
        for i in 0..m {
            let terms = (0..n).map(|j| (y[i][j], rat(1))).collect();
            p.add_le(format!("row_{i}"), terms, rat(1));
        }
        p
    }

    #[test]
    fn validate_accepts_well_formed_single_variable_program() {
        let mut p = MixedBinaryProgram::new("one", Sense::Maximize);
        p.add_binary("x", rat(1));
        assert_eq!(p.validate(), Vec::<String>::new());
    }

    #[test]
    fn validate_reports_unknown_variable() {
        let mut p = MixedBinaryProgram::new("bad", Sense::Maximize);
        p.add_binary("x", rat(1));
        p.add_le("c", vec![(VarId(7), rat(1))], rat(1));
        let violations = p.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("x7"), "{violations:?}");
    }

    #[test]
    fn validate_reports_missing_partitioning_row_constraint() {
        let mut p = MixedBinaryProgram::new("bad", Sense::Maximize);
        let a = p.add_binary("a", rat(1));
        let b = p.add_binary("b", rat(1));
        p.add_matrix(VarMatrix {
            label: "m".into(),
            kind: OrbitopeKind::Partitioning,
            rows: 1,
            cols: 2,
            entries: vec![a, b],
        });
        let violations = p.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("row-sum = 1"), "{violations:?}");
    }

    #[test]
    fn evaluate_checks_capacity_exactly() {
        let p = tiny_mkp(&[5], &[7], &[4]);
        let e = p.evaluate(&[rat(1)]).unwrap();
        assert!(!e.feasible); // 5 > 4
        let e = p.evaluate(&[rat(0)]).unwrap();
        assert!(e.feasible);
        assert_eq!(e.objective, rat(0));
    }

    #[test]
    fn evaluate_two_items_one_knapsack() {
        // weights (3,4), capacity 6: packing only item 2 is feasible, profit 4.
        let p = tiny_mkp(&[3, 4], &[3, 4], &[6]);
        let e = p.evaluate(&[rat(0), rat(1)]).unwrap();
        assert!(e.feasible);
        assert_eq!(e.objective, rat(4));
        // both items together exceed the capacity
        let e = p.evaluate(&[rat(1), rat(1)]).unwrap();
        assert!(!e.feasible);
    }

    #[test]
    fn evaluate_rejects_incomplete_assignment() {
        let p = tiny_mkp(&[3, 4], &[3, 4], &[6]);
        let err = p.evaluate(&[rat(0)]).unwrap_err();
        assert!(err.to_string().contains("incomplete assignment"));
    }

    #[test]
    fn evaluate_rejects_fractional_binary() {
        let p = tiny_mkp(&[1], &[1], &[2]);
        let e = p.evaluate(&[ratio(1, 2)]).unwrap();
        assert!(!e.feasible);
    }

    #[test]
    fn canonical_json_round_trips_and_is_stable() {
        let mut p = tiny_mkp(&[3, 4], &[3, 4], &[6]);
        let y: Vec<VarId> = (0..2).map(|i| VarId(i as u32)).collect();
        p.add_matrix(VarMatrix {
            label: "items".into(),
            kind: OrbitopeKind::Full,
            rows: 2,
            cols: 1,
            entries: y,
        });
        let text = p.to_canonical_json();
        let back = MixedBinaryProgram::from_canonical_json(&text).unwrap();
        assert_eq!(p, back);
        assert_eq!(text, back.to_canonical_json());
    }

    #[test]
    fn scaling_a_constraint_preserves_feasibility() {
        // Metamorphic check: multiplying a constraint by a positive rational
        // leaves exact feasibility unchanged on every 0/1 assignment.
        let p = tiny_mkp(&[3, 4, 5], &[1, 2, 3], &[7]);
        let mut scaled = p.clone();
        let factor = ratio(7, 3);
        for t in &mut scaled.constraints[0].terms {
            t.coeff *= &factor;
        }
        scaled.constraints[0].upper =
            scaled.constraints[0].upper.clone().map(|u| u * &factor);
        for bits in 0..1u32 << 3 {
            let assignment: Vec<Rat> =
                (0..3).map(|i| rat(((bits >> i) & 1) as i64)).collect();
            let a = p.evaluate(&assignment).unwrap();
            let b = scaled.evaluate(&assignment).unwrap();
            assert_eq!(a.feasible, b.feasible, "bits {bits:b}");
            assert_eq!(a.objective, b.objective);
        }
    }
}
