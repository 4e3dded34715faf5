//! Activation handlers and sub-symmetry-handling inequalities (SHIs).
//!
//! Three problem families are supported. Each gets an [`ActivationHandler`]
//! that inspects a node's fixing sets and reports the submatrices whose
//! column symmetry is currently active, to be handled by orbitopal fixing:
//!
//! * **Multiple knapsack.** Once the placement of a prefix of items is
//!   fully decided, knapsacks with equal remaining capacity are
//!   interchangeable for the remaining items ([`MkpHandler`]).
//! * **Unit commitment.** Identical units that are all fixed to be ready to
//!   start up (down throughout the min-downtime window), or ready to shut
//!   down (up throughout the min-uptime window), have interchangeable
//!   schedules from that period on ([`MucpHandler`]).
//! * **Max-k-colorable subgraph.** For a color pair, vertices fixed to use
//!   neither color cut the graph; the two colors can be swapped within each
//!   remaining connected component ([`MkcsHandler`]).
//!
//! The static alternative encodes the same sub-symmetries as inequalities:
//! [`add_mkp_shis`] (with auxiliary indicator variables linearizing the
//! equal-remaining-capacity test) and [`add_mucp_shis`] (plain and
//! strengthened forms; the indicator has a linear description in `x`, so no
//! auxiliary variables are needed).
//!
//! Handlers read only `F0`/`F1`, never LP values.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bnb::{Activation, ActivationHandler, NodeState};
use crate::instances::Graph;
use crate::model::{rat, MixedBinaryProgram, OrbitopeKind, Rat, Submatrix, VarId};

/// Multiple-knapsack instance: weights/profits per item, capacity per
/// knapsack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MkpData {
    pub weights: Vec<i64>,
    pub profits: Vec<i64>,
    pub capacities: Vec<i64>,
}

impl MkpData {
    pub fn n_items(&self) -> usize {
        self.weights.len()
    }

    pub fn n_knapsacks(&self) -> usize {
        self.capacities.len()
    }
}

/// Properties of one production unit (identical tuples form a type).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitProps {
    pub p_min: i64,
    pub p_max: i64,
    pub min_up: usize,
    pub min_down: usize,
    pub startup_cost: i64,
    pub fixed_cost: i64,
    pub prod_cost: i64,
}

/// Min-up/min-down unit-commitment instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MucpData {
    pub periods: usize,
    pub demand: Vec<i64>,
    pub units: Vec<UnitProps>,
}

impl MucpData {
    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    /// Partition of unit indices into types (identical property tuples),
    /// ordered by first occurrence.
    pub fn types(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<(UnitProps, Vec<usize>)> = Vec::new();
        for (j, props) in self.units.iter().enumerate() {
            match order.iter_mut().find(|(p, _)| p == props) {
                Some((_, members)) => members.push(j),
                None => order.push((props.clone(), vec![j])),
            }
        }
        order.into_iter().map(|(_, members)| members).collect()
    }
}

/// Max-k-colorable-subgraph instance.
#[derive(Clone, Debug)]
pub struct MkcsData {
    pub graph: Graph,
    pub k: usize,
}

/// Color pairs an [`MkcsHandler`] watches.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PairMode {
    Consecutive,
    AllPairs,
}

// --- multiple knapsack -----------------------------------------------------

/// Capacity sub-symmetry handler: one linear scan over the rows of `y`.
pub struct MkpHandler {
    weights: Vec<i64>,
    capacities: Vec<i64>,
    matrix: usize,
    /// Handle all-column groups with the partitioning orbitope instead of
    /// the packing one. Rows only satisfy `<= 1`, so this stronger variant
    /// is not asserted sound; it is off unless explicitly requested.
    pub partitioning_variant: bool,
}

impl MkpHandler {
    pub fn new(data: &MkpData, matrix: usize) -> Self {
        Self {
            weights: data.weights.clone(),
            capacities: data.capacities.clone(),
            matrix,
            partitioning_variant: false,
        }
    }
}

impl ActivationHandler for MkpHandler {
    fn name(&self) -> &str {
        "mkp-capacity"
    }

    fn activations(&self, node: &NodeState, program: &MixedBinaryProgram) -> Vec<Activation> {
        let y = &program.matrices[self.matrix];
        let (m, n) = (y.rows, y.cols);
        let mut remaining = self.capacities.clone();
        let mut out = Vec::new();
        for i in 0..m {
            // remaining capacities reflect the decided placement of items < i
            let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (j, &cap) in remaining.iter().enumerate() {
                groups.entry(cap).or_default().push(j);
            }
            for cols in groups.into_values() {
                if cols.len() < 2 {
                    continue;
                }
                let kind = if cols.len() == n && self.partitioning_variant {
                    OrbitopeKind::Partitioning
                } else {
                    OrbitopeKind::Packing
                };
                out.push(Activation::new(
                    Submatrix {
                        matrix: self.matrix,
                        row_set: (i..m).collect(),
                        col_list: cols,
                    },
                    kind,
                ));
            }
            // a row counts as decided only when every entry is fixed
            let mut decided = true;
            for (j, rem) in remaining.iter_mut().enumerate() {
                match node.fixing(y.entry(i, j)) {
                    Some(true) => *rem -= self.weights[i],
                    Some(false) => {}
                    None => decided = false,
                }
            }
            if !decided {
                break;
            }
        }
        out
    }
}

/// A generated MKP SHI block: four auxiliary variables, five linearization
/// constraints and the inequality itself, for item `item` (0-based) and the
/// consecutive knapsack pair `pair`.
#[derive(Clone, Debug)]
pub struct MkpShi {
    pub item: usize,
    pub pair: (usize, usize),
    pub alpha_plus: VarId,
    pub alpha_minus: VarId,
    pub z_plus: VarId,
    pub z_minus: VarId,
    pub constraints: Vec<usize>,
    pub shi: usize,
}

/// Adds, for every item `i` and consecutive knapsack pair `(j, j+1)`, the
/// linearized indicator `z = z+ + z-` of unequal remaining capacities and
/// the inequality `y[i][j+1] <= z+ + z- + y[i][j]`. The big-M constant is
/// `max(c_j, c_j') + sum of prefix weights`.
pub fn add_mkp_shis(
    program: &mut MixedBinaryProgram,
    data: &MkpData,
    y: &[Vec<VarId>],
) -> Vec<MkpShi> {
    let (m, n) = (data.n_items(), data.n_knapsacks());
    let mut out = Vec::new();
    for j in 0..n.saturating_sub(1) {
        let (cj, cj1) = (data.capacities[j], data.capacities[j + 1]);
        for i in 0..m {
            let prefix_weight: i64 = data.weights[..i].iter().sum();
            let big_m = cj.max(cj1) + prefix_weight;
            let tag = format!("i{i}_j{j}");
            let ap = program.add_continuous(
                format!("shi_ap_{tag}"),
                Rat::zero(),
                rat(big_m),
                Rat::zero(),
            );
            let an = program.add_continuous(
                format!("shi_an_{tag}"),
                Rat::zero(),
                rat(big_m),
                Rat::zero(),
            );
            let zp = program.add_binary(format!("shi_zp_{tag}"), Rat::zero());
            let zn = program.add_binary(format!("shi_zn_{tag}"), Rat::zero());

            let mut constraints = Vec::new();
            constraints.push(program.add_le(
                format!("shi_capp_{tag}"),
                vec![(ap, rat(1)), (zp, rat(-big_m))],
                Rat::zero(),
            ));
            constraints.push(program.add_le(
                format!("shi_capn_{tag}"),
                vec![(an, rat(1)), (zn, rat(-big_m))],
                Rat::zero(),
            ));
            constraints.push(program.add_ge(
                format!("shi_link_{tag}"),
                vec![(ap, rat(1)), (an, rat(1)), (zp, rat(-1)), (zn, rat(-1))],
                Rat::zero(),
            ));
            let mut alpha_terms = vec![(ap, rat(1)), (an, rat(-1))];
            for k in 0..i {
                alpha_terms.push((y[k][j], rat(data.weights[k])));
                alpha_terms.push((y[k][j + 1], rat(-data.weights[k])));
            }
            constraints.push(program.add_eq(
                format!("shi_alpha_{tag}"),
                alpha_terms,
                rat(cj - cj1),
            ));
            constraints.push(program.add_le(
                format!("shi_one_{tag}"),
                vec![(zp, rat(1)), (zn, rat(1))],
                rat(1),
            ));
            let shi = program.add_le(
                format!("shi_mkp_{tag}"),
                vec![
                    (y[i][j + 1], rat(1)),
                    (zp, rat(-1)),
                    (zn, rat(-1)),
                    (y[i][j], rat(-1)),
                ],
                Rat::zero(),
            );
            out.push(MkpShi {
                item: i,
                pair: (j, j + 1),
                alpha_plus: ap,
                alpha_minus: an,
                z_plus: zp,
                z_minus: zn,
                constraints,
                shi,
            });
        }
    }
    out
}

/// Extends a 0/1 assignment of the original `y` variables with the forced
/// values of the SHI auxiliaries (`alpha` split by sign, `z` its
/// indicator). The result is a full assignment of the augmented program.
pub fn mkp_assignment_with_aux(
    program: &MixedBinaryProgram,
    data: &MkpData,
    y: &[Vec<VarId>],
    shis: &[MkpShi],
    y_values: &[Vec<bool>],
) -> Vec<Rat> {
    let mut assignment = vec![Rat::zero(); program.n_vars()];
    for (i, row) in y.iter().enumerate() {
        for (j, &var) in row.iter().enumerate() {
            assignment[var.idx()] = if y_values[i][j] {
                Rat::one()
            } else {
                Rat::zero()
            };
        }
    }
    for shi in shis {
        let (j, j1) = shi.pair;
        let mut alpha = data.capacities[j] - data.capacities[j1];
        for k in 0..shi.item {
            let lhs = y_values[k][j] as i64 - y_values[k][j1] as i64;
            alpha -= data.weights[k] * lhs;
        }
        assignment[shi.alpha_plus.idx()] = rat(alpha.max(0));
        assignment[shi.alpha_minus.idx()] = rat((-alpha).max(0));
        assignment[shi.z_plus.idx()] = rat((alpha > 0) as i64);
        assignment[shi.z_minus.idx()] = rat((alpha < 0) as i64);
    }
    assignment
}

// --- unit commitment --------------------------------------------------------

/// Start-up/shut-down sub-symmetry handler for one unit type, sliding over
/// the horizon in `O(n T)`.
pub struct MucpHandler {
    label: String,
    matrix: usize,
    /// Unit indices backing the matrix columns.
    members: Vec<usize>,
    min_up: usize,
    min_down: usize,
    /// Start-up variables, `[period][unit]` over all units.
    u: Vec<Vec<VarId>>,
}

impl MucpHandler {
    pub fn new(
        type_index: usize,
        matrix: usize,
        members: Vec<usize>,
        props: &UnitProps,
        u: Vec<Vec<VarId>>,
    ) -> Self {
        Self {
            label: format!("mucp-ready-type{type_index}"),
            matrix,
            members,
            min_up: props.min_up,
            min_down: props.min_down,
            u,
        }
    }
}

impl ActivationHandler for MucpHandler {
    fn name(&self) -> &str {
        &self.label
    }

    fn activations(&self, node: &NodeState, program: &MixedBinaryProgram) -> Vec<Activation> {
        let x = &program.matrices[self.matrix];
        let (periods, n) = (x.rows, x.cols);
        let mut run0 = vec![0usize; n];
        let mut run1 = vec![0usize; n];
        let mut out = Vec::new();
        for t in 0..periods {
            // runs cover periods < t; readiness needs the full window fixed
            if t >= self.min_down {
                let cols: Vec<usize> = (0..n).filter(|&k| run0[k] >= self.min_down).collect();
                if cols.len() >= 2 {
                    out.push(Activation::new(
                        Submatrix {
                            matrix: self.matrix,
                            row_set: (t..periods).collect(),
                            col_list: cols,
                        },
                        OrbitopeKind::Full,
                    ));
                }
            }
            if t >= self.min_up {
                let cols: Vec<usize> = (0..n).filter(|&k| run1[k] >= self.min_up).collect();
                if cols.len() >= 2 {
                    out.push(Activation::new(
                        Submatrix {
                            matrix: self.matrix,
                            row_set: (t..periods).collect(),
                            col_list: cols,
                        },
                        OrbitopeKind::Full,
                    ));
                }
            }
            for k in 0..n {
                match node.fixing(x.entry(t, k)) {
                    Some(false) => {
                        run0[k] += 1;
                        run1[k] = 0;
                    }
                    Some(true) => {
                        run1[k] += 1;
                        run0[k] = 0;
                    }
                    None => {
                        run0[k] = 0;
                        run1[k] = 0;
                    }
                }
            }
        }
        out
    }

    /// Permuting a unit's schedule from period `t` on moves its start-up
    /// indicators along with the up/down pattern.
    fn action_columns(
        &self,
        act: &Activation,
        program: &MixedBinaryProgram,
    ) -> Vec<Vec<VarId>> {
        let x = &program.matrices[act.target.matrix];
        act.target
            .col_list
            .iter()
            .map(|&c| {
                let unit = self.members[c];
                let mut col: Vec<VarId> = act
                    .target
                    .row_set
                    .iter()
                    .map(|&t| x.entry(t, c))
                    .collect();
                col.extend(act.target.row_set.iter().map(|&t| self.u[t][unit]));
                col
            })
            .collect()
    }
}

/// One generated MUCP SHI (for reporting and golden tests).
#[derive(Clone, Debug)]
pub struct MucpShi {
    /// Unit pair (consecutive within a type).
    pub pair: (usize, usize),
    /// 0-based period the inequality anchors at.
    pub period: usize,
    pub startup: bool,
    pub constraint: usize,
}

/// Adds start-up and shut-down SHIs for consecutive same-type unit pairs.
///
/// With `strengthened` the start-up family is
/// `u[t][j'] <= x[t-down][j] + x[t][j] + sum of u[t'][j]` over the window
/// interior, and the shut-down family mirrors it on the second unit:
/// `x[t-1][j] - x[t][j] <= (1 - x[t-up][j']) + (1 - x[t][j']) + sum of
/// u[t'][j']` with `t'` in `(t-up, t]`. Without it, the plain inequality
/// `x[t][j'] <= z + x[t][j]` is emitted with the readiness indicator `z`
/// substituted by its linear expression in `x`. No tie-break sets are
/// needed for either family.
pub fn add_mucp_shis(
    program: &mut MixedBinaryProgram,
    data: &MucpData,
    x: &[Vec<VarId>],
    u: &[Vec<VarId>],
    strengthened: bool,
) -> Vec<MucpShi> {
    let periods = data.periods;
    let mut out = Vec::new();
    for members in data.types() {
        for pair in members.windows(2) {
            let (j, j1) = (pair[0], pair[1]);
            let props = &data.units[j];
            let (up, down) = (props.min_up, props.min_down);
            for t in down..periods {
                let name = format!("shi_start_u{j}_u{j1}_t{t}");
                let constraint = if strengthened {
                    let mut terms = vec![
                        (u[t][j1], rat(1)),
                        (x[t - down][j], rat(-1)),
                        (x[t][j], rat(-1)),
                    ];
                    for t2 in (t - down + 1)..t {
                        terms.push((u[t2][j], rat(-1)));
                    }
                    program.add_le(name, terms, Rat::zero())
                } else {
                    let mut terms = vec![(x[t][j1], rat(1)), (x[t][j], rat(-1))];
                    for t2 in (t - down)..t {
                        terms.push((x[t2][j], rat(-1)));
                        terms.push((x[t2][j1], rat(-1)));
                    }
                    program.add_le(name, terms, Rat::zero())
                };
                out.push(MucpShi {
                    pair: (j, j1),
                    period: t,
                    startup: true,
                    constraint,
                });
            }
            for t in up..periods {
                let name = format!("shi_stop_u{j}_u{j1}_t{t}");
                let constraint = if strengthened {
                    let mut terms = vec![
                        (x[t - 1][j], rat(1)),
                        (x[t][j], rat(-1)),
                        (x[t - up][j1], rat(1)),
                        (x[t][j1], rat(1)),
                    ];
                    for t2 in (t - up + 1)..=t {
                        terms.push((u[t2][j1], rat(-1)));
                    }
                    let dedup = dedup_terms(terms);
                    program.add_le(name, dedup, rat(2))
                } else {
                    let mut terms = vec![(x[t][j1], rat(1)), (x[t][j], rat(-1))];
                    for t2 in (t - up)..t {
                        terms.push((x[t2][j], rat(1)));
                        terms.push((x[t2][j1], rat(1)));
                    }
                    let dedup = dedup_terms(terms);
                    program.add_le(name, dedup, rat(2 * up as i64))
                };
                out.push(MucpShi {
                    pair: (j, j1),
                    period: t,
                    startup: false,
                    constraint,
                });
            }
        }
    }
    out
}

/// Merges repeated variables by summing coefficients (constraints must not
/// repeat a variable).
fn dedup_terms(terms: Vec<(VarId, Rat)>) -> Vec<(VarId, Rat)> {
    let mut acc: BTreeMap<VarId, Rat> = BTreeMap::new();
    for (v, c) in terms {
        *acc.entry(v).or_insert_with(Rat::zero) += c;
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

// --- max-k-colorable subgraph ----------------------------------------------

/// Color-pair sub-symmetry handler: iterated depth-first search over the
/// subgraph induced by vertices not yet excluded from both colors.
pub struct MkcsHandler {
    matrix: usize,
    adj: Vec<Vec<usize>>,
    k: usize,
    pub pair_mode: PairMode,
}

impl MkcsHandler {
    pub fn new(data: &MkcsData, matrix: usize, pair_mode: PairMode) -> Self {
        Self {
            matrix,
            adj: data.graph.adjacency(),
            k: data.k,
            pair_mode,
        }
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        match self.pair_mode {
            PairMode::Consecutive => (0..self.k.saturating_sub(1)).map(|r| (r, r + 1)).collect(),
            PairMode::AllPairs => (0..self.k)
                .flat_map(|a| ((a + 1)..self.k).map(move |b| (a, b)))
                .collect(),
        }
    }
}

impl ActivationHandler for MkcsHandler {
    fn name(&self) -> &str {
        "mkcs-color-pair"
    }

    fn activations(&self, node: &NodeState, program: &MixedBinaryProgram) -> Vec<Activation> {
        let x = &program.matrices[self.matrix];
        let n = x.rows;
        let mut out = Vec::new();
        for (c1, c2) in self.pairs() {
            let in_r: Vec<bool> = (0..n)
                .map(|i| {
                    !(node.fixing(x.entry(i, c1)) == Some(false)
                        && node.fixing(x.entry(i, c2)) == Some(false))
                })
                .collect();
            let mut seen = vec![false; n];
            for start in 0..n {
                if seen[start] || !in_r[start] {
                    continue;
                }
                let mut component = Vec::new();
                let mut stack = vec![start];
                seen[start] = true;
                while let Some(v) = stack.pop() {
                    component.push(v);
                    for &w in &self.adj[v] {
                        if in_r[w] && !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                if component.len() < 2 {
                    continue;
                }
                component.sort_unstable();
                out.push(Activation::new(
                    Submatrix {
                        matrix: self.matrix,
                        row_set: component,
                        col_list: vec![c1, c2],
                    },
                    OrbitopeKind::Packing,
                ));
            }
        }
        out
    }
}

/// Do the MKP SHIs hold for a 0/1 placement, with the auxiliary indicator
/// derived from the placement itself? Independent of the linearization;
/// used as the static exclusion test for the inequality setting.
pub fn mkp_shis_hold(data: &MkpData, y_values: &[Vec<bool>]) -> bool {
    let (m, n) = (data.n_items(), data.n_knapsacks());
    for j in 0..n.saturating_sub(1) {
        for i in 0..m {
            let mut alpha = data.capacities[j] - data.capacities[j + 1];
            for k in 0..i {
                alpha -= data.weights[k] * (y_values[k][j] as i64 - y_values[k][j + 1] as i64);
            }
            let z = (alpha != 0) as i64;
            if (y_values[i][j + 1] as i64) > z + y_values[i][j] as i64 {
                return false;
            }
        }
    }
    true
}
