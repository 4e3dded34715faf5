//! Deterministic branch-and-bound over binary variables.
//!
//! Each node carries fixing sets `F0`/`F1`; a propagation loop applies
//! orbitopal fixing for globally declared matrices and for whatever
//! submatrices the registered [`ActivationHandler`]s report as currently
//! sub-symmetric, until a fixpoint. Bounds come from the LP relaxation,
//! branching picks the most fractional binary, and node selection is
//! best-bound with FIFO tie-break (depth-first is available for tests).
//!
//! Incumbents are only accepted after an exact rational feasibility check
//! through `model::evaluate` (with continuous variables completed by the
//! exact simplex), so reported optima never rest on LP tolerances. Objective
//! values closer than ~1e-9 to the incumbent are treated as unable to
//! improve it; with integer-valued objectives this is exact.

use std::collections::BinaryHeap;
use std::time::Instant;

use num_traits::{One, ToPrimitive, Zero};

use crate::lp::{self, LpError, LpStatus, SimplexOptions};
use crate::model::{
    MixedBinaryProgram, OrbitopeKind, Rat, Sense, Submatrix, VarId, VarKind,
};
use crate::orbitope::{propagate_orbitope, DomainGrid};

/// Bit-packed set of variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet {
    words: Vec<u64>,
}

impl VarSet {
    pub fn new(n_vars: usize) -> Self {
        Self {
            words: vec![0; n_vars.div_ceil(64)],
        }
    }

    pub fn contains(&self, v: VarId) -> bool {
        let i = v.idx();
        self.words
            .get(i / 64)
            .is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    /// Returns true when the variable was not yet in the set.
    pub fn insert(&mut self, v: VarId) -> bool {
        let i = v.idx();
        let fresh = self.words[i / 64] >> (i % 64) & 1 == 0;
        self.words[i / 64] |= 1 << (i % 64);
        fresh
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
            && self.words.len() <= other.words.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| w >> b & 1 == 1)
                .map(move |b| VarId((wi * 64 + b) as u32))
        })
    }
}

/// Search-tree node: fixings plus bookkeeping an activation handler reads.
#[derive(Clone, Debug)]
pub struct NodeState {
    pub id: u64,
    pub depth: u32,
    pub parent: Option<u64>,
    pub fixed_zero: VarSet,
    pub fixed_one: VarSet,
    pub lp_bound: Option<f64>,
}

impl NodeState {
    pub fn root(program: &MixedBinaryProgram) -> Self {
        Self {
            id: 0,
            depth: 0,
            parent: None,
            fixed_zero: VarSet::new(program.n_vars()),
            fixed_one: VarSet::new(program.n_vars()),
            lp_bound: None,
        }
    }

    /// `Some(value)` when the variable is fixed at this node.
    pub fn fixing(&self, v: VarId) -> Option<bool> {
        if self.fixed_one.contains(v) {
            Some(true)
        } else if self.fixed_zero.contains(v) {
            Some(false)
        } else {
            None
        }
    }

    /// Node-local bound override implied by the fixing sets.
    pub fn bound_override(&self, v: VarId) -> Option<(Rat, Rat)> {
        self.fixing(v).map(|b| {
            let val = if b { Rat::one() } else { Rat::zero() };
            (val.clone(), val)
        })
    }

    fn fix(&mut self, v: VarId, value: bool) -> bool {
        debug_assert!(self.fixing(v).map_or(true, |cur| cur == value));
        if value {
            self.fixed_one.insert(v)
        } else {
            self.fixed_zero.insert(v)
        }
    }
}

/// A submatrix whose column symmetry is active at the current node,
/// together with the orbitope kind used to handle it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Activation {
    pub target: Submatrix,
    pub kind: OrbitopeKind,
}

impl Activation {
    pub fn new(target: Submatrix, kind: OrbitopeKind) -> Self {
        debug_assert!(target.col_list.len() >= 2, "activation needs >= 2 columns");
        debug_assert!(!target.row_set.is_empty(), "activation needs rows");
        Self { target, kind }
    }
}

/// A rule set that reports the sub-symmetries active at a node.
///
/// Implementers promise that for every returned activation, every feasible
/// completion of the node's fixings lies in a solution subset that is
/// sub-symmetric with respect to the activation's rows and columns, i.e.
/// permuting the activation's columns (with their companion variables) maps
/// feasible completions to feasible completions of equal objective.
pub trait ActivationHandler: Send + Sync {
    fn name(&self) -> &str;

    /// Handlers read only the node's fixing sets, never LP values.
    fn activations(&self, node: &NodeState, program: &MixedBinaryProgram) -> Vec<Activation>;

    /// Variables moved together when a column of `act` is permuted. The
    /// default is the submatrix cells themselves; handlers whose symmetry
    /// drags companion variables along (start-up indicators, say) override
    /// this. Used by soundness checks, not by propagation.
    fn action_columns(
        &self,
        act: &Activation,
        program: &MixedBinaryProgram,
    ) -> Vec<Vec<VarId>> {
        let m = &program.matrices[act.target.matrix];
        act.target
            .col_list
            .iter()
            .map(|&c| act.target.row_set.iter().map(|&r| m.entry(r, c)).collect())
            .collect()
    }
}

/// Symmetry machinery attached to one solve.
#[derive(Default)]
pub struct Plugins {
    /// Indices of program matrices handled globally by orbitopal fixing.
    pub global_matrices: Vec<usize>,
    pub handlers: Vec<Box<dyn ActivationHandler>>,
}

impl Plugins {
    pub fn none() -> Self {
        Self::default()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NodeOrder {
    /// Best LP bound first, FIFO among ties.
    BestBound,
    DepthFirst,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub setting: String,
    pub time_limit_s: f64,
    /// Node cap; exceeding it reports `TimeLimit` with the best incumbent.
    pub node_limit: Option<u64>,
    pub eps_int: f64,
    pub eps_feas: f64,
    pub eps_opt: f64,
    pub degen_pivot_cap: usize,
    pub lp_iter_cap: usize,
    pub prop_round_cap: usize,
    pub node_order: NodeOrder,
    pub rounding_heuristic: bool,
    /// Opt-in assertion mode: exhaustively verify the soundness obligation
    /// of every emitted activation at every node (tiny instances only).
    pub check_handlers: bool,
    pub record_nodes: bool,
    pub record_activations: bool,
    /// Recorded for provenance; nothing inside the engine depends on it.
    pub random_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            setting: String::new(),
            time_limit_s: 3600.0,
            node_limit: None,
            eps_int: 1e-6,
            eps_feas: 1e-7,
            eps_opt: 1e-7,
            degen_pivot_cap: 100,
            lp_iter_cap: 50_000,
            prop_round_cap: 50,
            node_order: NodeOrder::BestBound,
            rounding_heuristic: false,
            check_handlers: false,
            record_nodes: false,
            record_activations: false,
            random_seed: 0,
        }
    }
}

impl SolverConfig {
    fn simplex_options(&self) -> SimplexOptions {
        SimplexOptions {
            iter_cap: self.lp_iter_cap,
            degen_cap: self.degen_pivot_cap,
            bland_from_start: false,
            feas_tol: self.eps_feas,
            price_tol: self.eps_opt.min(1e-9),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

/// Minimal per-node record kept when `record_nodes` is on.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: u32,
    pub fixed_zero: VarSet,
    pub fixed_one: VarSet,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: Option<Rat>,
    pub incumbent: Option<Vec<Rat>>,
    pub nodes: u64,
    pub time_s: f64,
    pub setting: String,
    pub instance: String,
    /// Distinct `(handler name, activation)` pairs seen during the solve
    /// (`record_activations`).
    pub activations: Vec<(String, Activation)>,
    /// Node trace (`record_nodes`).
    pub node_trace: Vec<NodeRecord>,
}

/// Outcome of one propagation fixpoint computation.
#[derive(Clone, Debug, Default)]
pub struct Propagation {
    pub fixings: Vec<(VarId, bool)>,
    pub infeasible: bool,
    pub rounds: usize,
}

fn grid_for(program: &MixedBinaryProgram, node: &NodeState, target: &Submatrix) -> DomainGrid {
    let m = &program.matrices[target.matrix];
    let mut grid = DomainGrid::free(target.row_set.len(), target.col_list.len());
    for (gi, &r) in target.row_set.iter().enumerate() {
        for (gj, &c) in target.col_list.iter().enumerate() {
            if let Some(v) = node.fixing(m.entry(r, c)) {
                grid.fix(gi, gj, v);
            }
        }
    }
    grid
}

fn full_submatrix(program: &MixedBinaryProgram, matrix: usize) -> Submatrix {
    let m = &program.matrices[matrix];
    Submatrix {
        matrix,
        row_set: (0..m.rows).collect(),
        col_list: (0..m.cols).collect(),
    }
}

/// Applies orbitopal fixing for one (sub)matrix; returns false on conflict.
fn apply_orbitope(
    program: &MixedBinaryProgram,
    node: &mut NodeState,
    target: &Submatrix,
    kind: OrbitopeKind,
    fixings: &mut Vec<(VarId, bool)>,
    changed: &mut bool,
) -> bool {
    let grid = grid_for(program, node, target);
    let delta = propagate_orbitope(&grid, kind);
    if delta.infeasible {
        return false;
    }
    let m = &program.matrices[target.matrix];
    for (gi, gj, value) in delta.fixes {
        let var = m.entry(target.row_set[gi], target.col_list[gj]);
        if node.fix(var, value) {
            fixings.push((var, value));
            *changed = true;
        }
    }
    true
}

/// Runs global orbitope propagation and all activation handlers to a
/// fixpoint (or the round cap). Every fixing added is implied: no feasible
/// completion surviving the configured symmetry handling violates it.
pub fn propagate(
    node: &mut NodeState,
    program: &MixedBinaryProgram,
    plugins: &Plugins,
    config: &SolverConfig,
) -> Propagation {
    let mut out = Propagation::default();
    loop {
        out.rounds += 1;
        let mut changed = false;
        for &mi in &plugins.global_matrices {
            let target = full_submatrix(program, mi);
            let kind = program.matrices[mi].kind;
            if !apply_orbitope(program, node, &target, kind, &mut out.fixings, &mut changed) {
                out.infeasible = true;
                return out;
            }
        }
        for handler in &plugins.handlers {
            for act in handler.activations(node, program) {
                if !apply_orbitope(
                    program,
                    node,
                    &act.target,
                    act.kind,
                    &mut out.fixings,
                    &mut changed,
                ) {
                    out.infeasible = true;
                    return out;
                }
            }
        }
        if !changed || out.rounds >= config.prop_round_cap {
            return out;
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BranchError {
    #[error("nothing to branch: all binary variables are integral")]
    NothingToBranch,
}

/// Most-fractional branching: smallest `|value - 1/2|`, ties by smallest
/// variable index. Children fix the variable to 0 and 1 respectively.
pub fn branch(
    node: &NodeState,
    program: &MixedBinaryProgram,
    lp_values: &[f64],
    eps_int: f64,
    ids: (u64, u64),
) -> Result<(NodeState, NodeState), BranchError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in program.variables.iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        let x = lp_values[i];
        if x <= eps_int || x >= 1.0 - eps_int {
            continue;
        }
        let score = (x - 0.5).abs();
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, i));
        }
    }
    let (_, var_idx) = best.ok_or(BranchError::NothingToBranch)?;
    Ok(make_children(node, VarId(var_idx as u32), ids))
}

fn make_children(node: &NodeState, var: VarId, ids: (u64, u64)) -> (NodeState, NodeState) {
    let mut child0 = node.clone();
    child0.id = ids.0;
    child0.parent = Some(node.id);
    child0.depth = node.depth + 1;
    child0.lp_bound = None;
    let mut child1 = child0.clone();
    child1.id = ids.1;
    child0.fix(var, false);
    child1.fix(var, true);
    (child0, child1)
}

struct HeapEntry {
    key: f64,
    seq: u64,
    slot: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap: larger key first, then earlier insertion
        self.key
            .partial_cmp(&other.key)
            .expect("bound keys are never NaN")
            .then(other.seq.cmp(&self.seq))
    }
}

struct Frontier {
    order: NodeOrder,
    heap: BinaryHeap<HeapEntry>,
    stack: Vec<usize>,
    seq: u64,
}

impl Frontier {
    fn new(order: NodeOrder) -> Self {
        Self {
            order,
            heap: BinaryHeap::new(),
            stack: Vec::new(),
            seq: 0,
        }
    }

    fn push(&mut self, slot: usize, key: f64) {
        match self.order {
            NodeOrder::BestBound => {
                self.heap.push(HeapEntry {
                    key,
                    seq: self.seq,
                    slot,
                });
                self.seq += 1;
            }
            NodeOrder::DepthFirst => self.stack.push(slot),
        }
    }

    fn pop(&mut self) -> Option<usize> {
        match self.order {
            NodeOrder::BestBound => self.heap.pop().map(|e| e.slot),
            NodeOrder::DepthFirst => self.stack.pop(),
        }
    }
}

struct Search<'a> {
    program: &'a MixedBinaryProgram,
    plugins: &'a Plugins,
    config: &'a SolverConfig,
    base_bounds: Vec<(f64, f64)>,
    incumbent: Option<(Vec<Rat>, Rat)>,
    nodes: u64,
    next_id: u64,
    store: Vec<(NodeState, f64)>,
    frontier: Frontier,
    activations: std::collections::BTreeSet<(String, Activation)>,
    trace: Vec<NodeRecord>,
    started: Instant,
}

impl<'a> Search<'a> {
    fn sign(&self) -> f64 {
        match self.program.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }

    /// Could a node with this relaxation bound still beat the incumbent?
    fn can_improve(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((_, inc)) => {
                let inc = inc.to_f64().expect("objective in f64 range");
                let slack = 1e-9 * (1.0 + inc.abs());
                self.sign() * (bound - inc) > slack
            }
        }
    }

    fn node_bounds(&self, node: &NodeState) -> Vec<(f64, f64)> {
        let mut bounds = self.base_bounds.clone();
        for v in node.fixed_zero.iter() {
            bounds[v.idx()] = (0.0, 0.0);
        }
        for v in node.fixed_one.iter() {
            bounds[v.idx()] = (1.0, 1.0);
        }
        bounds
    }

    /// Exact certification of a candidate binary pattern; updates the
    /// incumbent when the completion is feasible and strictly better.
    fn try_incumbent(&mut self, binary_values: &[Option<bool>]) -> bool {
        let mut fixed: Vec<Option<Rat>> = vec![None; self.program.n_vars()];
        for (i, v) in self.program.variables.iter().enumerate() {
            if v.kind == VarKind::Binary {
                let b = binary_values[i].expect("complete binary pattern");
                fixed[i] = Some(if b { Rat::one() } else { Rat::zero() });
            }
        }
        let Some((assignment, objective)) = lp::complete_exact(self.program, &fixed) else {
            return false;
        };
        let better = match &self.incumbent {
            None => true,
            Some((_, cur)) => self.program.sense.better(&objective, cur),
        };
        if better {
            self.incumbent = Some((assignment, objective));
        }
        true
    }

    fn push_children(&mut self, child0: NodeState, child1: NodeState, key: f64) {
        // under maximize the one-branch is explored first, mirrored for
        // minimize; FIFO tie-break in best-bound preserves that preference
        let (first, second) = match self.program.sense {
            Sense::Maximize => (child1, child0),
            Sense::Minimize => (child0, child1),
        };
        match self.config.node_order {
            NodeOrder::BestBound => {
                for child in [first, second] {
                    self.store.push((child, key));
                    self.frontier.push(self.store.len() - 1, key * self.sign());
                }
            }
            NodeOrder::DepthFirst => {
                for child in [second, first] {
                    self.store.push((child, key));
                    self.frontier.push(self.store.len() - 1, key * self.sign());
                }
            }
        }
    }

    fn first_unfixed_binary(&self, node: &NodeState) -> Option<VarId> {
        (0..self.program.n_vars())
            .map(|i| VarId(i as u32))
            .find(|&v| {
                self.program.var(v).kind == VarKind::Binary && node.fixing(v).is_none()
            })
    }

    fn record(&mut self, node: &NodeState) {
        if self.config.record_nodes {
            self.trace.push(NodeRecord {
                id: node.id,
                parent: node.parent,
                depth: node.depth,
                fixed_zero: node.fixed_zero.clone(),
                fixed_one: node.fixed_one.clone(),
            });
        }
    }
}

/// Solves the program to optimality under the configured symmetry handling.
///
/// Handled symmetries preserve feasibility and objective, so the reported
/// objective equals the true optimum whenever the handlers meet their
/// obligations (which `check_handlers` can verify exhaustively).
pub fn solve(
    program: &MixedBinaryProgram,
    plugins: &Plugins,
    config: &SolverConfig,
) -> SolveReport {
    debug_assert!(program.validate().is_empty(), "program must validate");
    let mut search = Search {
        program,
        plugins,
        config,
        base_bounds: lp::base_bounds(program),
        incumbent: None,
        nodes: 0,
        next_id: 1,
        store: Vec::new(),
        frontier: Frontier::new(config.node_order),
        activations: std::collections::BTreeSet::new(),
        trace: Vec::new(),
        started: Instant::now(),
    };
    let simplex = config.simplex_options();
    let root_key = search.sign() * f64::INFINITY;
    search.store.push((NodeState::root(program), root_key));
    search.frontier.push(0, f64::INFINITY);

    let mut hit_limit = false;
    while let Some(slot) = search.frontier.pop() {
        if search.started.elapsed().as_secs_f64() > config.time_limit_s {
            hit_limit = true;
            break;
        }
        if config.node_limit.is_some_and(|cap| search.nodes >= cap) {
            hit_limit = true;
            break;
        }
        let (mut node, key) = search.store[slot].clone();
        search.nodes += 1;
        search.record(&node);
        if key.is_finite() && !search.can_improve(key) {
            continue;
        }

        let prop = propagate(&mut node, program, plugins, config);
        if prop.infeasible {
            continue;
        }
        if config.record_activations || config.check_handlers {
            observe_activations(&mut search, &node);
        }

        let bounds = search.node_bounds(&node);
        let lp_result = match lp::solve_lp(program, &bounds, &simplex) {
            Ok(r) => r,
            // iteration limit or a failed numerical audit: no usable
            // bound, keep searching below this node
            Err(LpError::IterationLimit | LpError::Numerical) => {
                match search.first_unfixed_binary(&node) {
                    Some(var) => {
                        let ids = (search.next_id, search.next_id + 1);
                        search.next_id += 2;
                        let (c0, c1) = make_children(&node, var, ids);
                        search.push_children(c0, c1, key);
                    }
                    None => {
                        let pattern = full_pattern(program, &node);
                        search.try_incumbent(&pattern);
                    }
                }
                continue;
            }
        };
        match lp_result.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                unreachable!("all variables carry finite bounds")
            }
            LpStatus::Optimal => {}
        }
        let bound = lp_result.objective;
        node.lp_bound = Some(bound);
        if !search.can_improve(bound) {
            continue;
        }

        if config.rounding_heuristic {
            let rounded = rounded_pattern(program, &node, &lp_result.values);
            search.try_incumbent(&rounded);
            if !search.can_improve(bound) {
                continue;
            }
        }

        let integral = (0..program.n_vars()).all(|i| {
            program.variables[i].kind != VarKind::Binary || {
                let v = lp_result.values[i];
                v <= config.eps_int || v >= 1.0 - config.eps_int
            }
        });
        if integral {
            let pattern = rounded_pattern(program, &node, &lp_result.values);
            if search.try_incumbent(&pattern) {
                continue; // the relaxation optimum is attained; node closed
            }
            // exact check rejected the LP's integral point: split further
            match search.first_unfixed_binary(&node) {
                Some(var) => {
                    let ids = (search.next_id, search.next_id + 1);
                    search.next_id += 2;
                    let (c0, c1) = make_children(&node, var, ids);
                    search.push_children(c0, c1, bound);
                }
                None => continue,
            }
            continue;
        }

        let ids = (search.next_id, search.next_id + 1);
        search.next_id += 2;
        match branch(&node, program, &lp_result.values, config.eps_int, ids) {
            Ok((c0, c1)) => search.push_children(c0, c1, bound),
            Err(BranchError::NothingToBranch) => unreachable!("integrality checked above"),
        }
    }

    let status = if hit_limit {
        SolveStatus::TimeLimit
    } else if search.incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let (incumbent, objective) = match search.incumbent {
        Some((assignment, obj)) => (Some(assignment), Some(obj)),
        None => (None, None),
    };
    SolveReport {
        status,
        objective,
        incumbent,
        nodes: search.nodes,
        time_s: search.started.elapsed().as_secs_f64(),
        setting: config.setting.clone(),
        instance: program.name.clone(),
        activations: search.activations.into_iter().collect(),
        node_trace: search.trace,
    }
}

fn full_pattern(program: &MixedBinaryProgram, node: &NodeState) -> Vec<Option<bool>> {
    (0..program.n_vars())
        .map(|i| node.fixing(VarId(i as u32)))
        .collect()
}

fn rounded_pattern(
    program: &MixedBinaryProgram,
    node: &NodeState,
    values: &[f64],
) -> Vec<Option<bool>> {
    (0..program.n_vars())
        .map(|i| {
            let v = VarId(i as u32);
            if program.var(v).kind != VarKind::Binary {
                return None;
            }
            Some(node.fixing(v).unwrap_or(values[i] >= 0.5))
        })
        .collect()
}

fn observe_activations(search: &mut Search, node: &NodeState) {
    for handler in &search.plugins.handlers {
        for act in handler.activations(node, search.program) {
            if search.config.check_handlers {
                check_activation_soundness(search.program, node, handler.as_ref(), &act);
            }
            if search.config.record_activations {
                search.activations.insert((handler.name().to_string(), act));
            }
        }
    }
}

/// Exhaustive soundness check of one activation at one node: every feasible
/// completion of the node's fixings must stay feasible with unchanged
/// objective under adjacent column transpositions of the activation.
/// Nodes with more than 2^12 open completions are skipped.
fn check_activation_soundness(
    program: &MixedBinaryProgram,
    node: &NodeState,
    handler: &dyn ActivationHandler,
    act: &Activation,
) {
    let binaries: Vec<usize> = (0..program.n_vars())
        .filter(|&i| program.variables[i].kind == VarKind::Binary)
        .collect();
    let free: Vec<usize> = binaries
        .iter()
        .copied()
        .filter(|&i| node.fixing(VarId(i as u32)).is_none())
        .collect();
    if free.len() > 12 {
        return;
    }
    let columns = handler.action_columns(act, program);
    for code in 0..1u64 << free.len() {
        let mut fixed: Vec<Option<Rat>> = vec![None; program.n_vars()];
        for &i in &binaries {
            let value = match node.fixing(VarId(i as u32)) {
                Some(v) => v,
                None => {
                    let p = free.iter().position(|&f| f == i).unwrap();
                    code >> p & 1 == 1
                }
            };
            fixed[i] = Some(if value { Rat::one() } else { Rat::zero() });
        }
        let Some((_, objective)) = lp::complete_exact(program, &fixed) else {
            continue;
        };
        for c in 0..columns.len() - 1 {
            let mut image = fixed.clone();
            for (a, b) in columns[c].iter().zip(&columns[c + 1]) {
                image.swap(a.idx(), b.idx());
            }
            match lp::complete_exact(program, &image) {
                Some((_, swapped)) => assert_eq!(
                    objective,
                    swapped,
                    "handler '{}' emitted an activation whose column swap changes the objective",
                    handler.name()
                ),
                None => panic!(
                    "handler '{}' emitted an activation whose column swap loses feasibility \
                     (node {}, matrix {}, rows {:?}, cols {:?})",
                    handler.name(),
                    node.id,
                    act.target.matrix,
                    act.target.row_set,
                    act.target.col_list,
                ),
            }
        }
    }
}

/// Dives from the root toward `pattern` (values per binary variable, in
/// variable order), applying the configured propagation at every step and
/// fixing the first still-free binary to the pattern's value. Returns false
/// iff propagation contradicts the pattern or proves infeasibility, i.e.
/// the pattern is excluded by the configured symmetry handling.
pub fn dive_survives(
    program: &MixedBinaryProgram,
    plugins: &Plugins,
    config: &SolverConfig,
    pattern: &[bool],
) -> bool {
    let binaries: Vec<usize> = (0..program.n_vars())
        .filter(|&i| program.variables[i].kind == VarKind::Binary)
        .collect();
    assert_eq!(pattern.len(), binaries.len());
    let mut node = NodeState::root(program);
    loop {
        let prop = propagate(&mut node, program, plugins, config);
        if prop.infeasible {
            return false;
        }
        for (p, &i) in binaries.iter().enumerate() {
            if node.fixing(VarId(i as u32)).is_some_and(|v| v != pattern[p]) {
                return false;
            }
        }
        let next = binaries
            .iter()
            .enumerate()
            .find(|&(_, &i)| node.fixing(VarId(i as u32)).is_none());
        match next {
            Some((p, &i)) => {
                node.fix(VarId(i as u32), pattern[p]);
            }
            None => return true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rat, VarMatrix};

    fn mkp(weights: &[i64], profits: &[i64], caps: &[i64]) -> (MixedBinaryProgram, Vec<Vec<VarId>>) {
        let mut p = MixedBinaryProgram::new("mkp", Sense::Maximize);
        let (m, n) = (weights.len(), caps.len());
        let mut y = vec![vec![VarId(0); n]; m];
        for i in 0..m {
            for j in 0..n {
                y[i][j] = p.add_binary(format!("y_{i}_{j}"), rat(profits[i]));
            }
        }
        for j in 0..n {
            p.add_le(
                format!("cap_{j}"),
                (0..m).map(|i| (y[i][j], rat(weights[i]))).collect(),
                rat(caps[j]),
            );
        }
        for i in 0..m {
            p.add_le(
                format!("row_{i}"),
                (0..n).map(|j| (y[i][j], rat(1))).collect(),
                rat(1),
            );
        }
        (p, y)
    }

    #[test]
    fn oversized_item_yields_zero_objective() {
        let (p, _) = mkp(&[5], &[7], &[4]);
        let report = solve(&p, &Plugins::none(), &SolverConfig::default());
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.objective, Some(rat(0)));
    }

    #[test]
    fn two_items_one_knapsack_packs_the_heavier() {
        let (p, _) = mkp(&[3, 4], &[3, 4], &[6]);
        let report = solve(&p, &Plugins::none(), &SolverConfig::default());
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.objective, Some(rat(4)));
        let inc = report.incumbent.unwrap();
        assert!(p.evaluate(&inc).unwrap().feasible);
    }

    #[test]
    fn branch_picks_most_fractional_with_index_tie_break() {
        let mut p = MixedBinaryProgram::new("b", Sense::Maximize);
        for i in 0..3 {
            p.add_binary(format!("x{i}"), rat(1));
        }
        let node = NodeState::root(&p);
        // most fractional wins
        let (c0, _c1) = branch(&node, &p, &[0.5, 0.9, 0.0], 1e-6, (1, 2)).unwrap();
        assert_eq!(c0.fixing(VarId(0)), Some(false));
        // tie at |v - 0.5| = 0.2: smaller index wins
        let (c0, c1) = branch(&node, &p, &[0.7, 0.3, 1.0], 1e-6, (3, 4)).unwrap();
        assert_eq!(c0.fixing(VarId(0)), Some(false));
        assert_eq!(c1.fixing(VarId(0)), Some(true));
        // integral first value: variable 2 is the most fractional
        let (c0, _c1) = branch(&node, &p, &[0.2, 0.5, 0.5], 1e-6, (5, 6)).unwrap();
        assert_eq!(c0.fixing(VarId(1)), Some(false));
    }

    #[test]
    fn branch_errors_when_integral() {
        let mut p = MixedBinaryProgram::new("b", Sense::Maximize);
        p.add_binary("x", rat(1));
        let node = NodeState::root(&p);
        assert!(branch(&node, &p, &[1.0], 1e-6, (1, 2)).is_err());
    }

    fn with_full_matrix(p: &mut MixedBinaryProgram, y: &[Vec<VarId>]) -> usize {
        let entries: Vec<VarId> = y.iter().flat_map(|row| row.iter().copied()).collect();
        p.add_matrix(VarMatrix {
            label: "grid".into(),
            kind: OrbitopeKind::Full,
            rows: y.len(),
            cols: y[0].len(),
            entries,
        })
    }

    #[test]
    fn propagation_reaches_fixpoint_without_fixings() {
        let (mut p, y) = mkp(&[3, 3], &[2, 2], &[5, 5]);
        let mi = with_full_matrix(&mut p, &y);
        let plugins = Plugins {
            global_matrices: vec![mi],
            handlers: Vec::new(),
        };
        let mut node = NodeState::root(&p);
        let prop = propagate(&mut node, &p, &plugins, &SolverConfig::default());
        assert!(!prop.infeasible);
        assert!(prop.fixings.is_empty());
        assert_eq!(prop.rounds, 1);
    }

    #[test]
    fn full_orbitope_propagates_first_row_zero() {
        let (mut p, y) = mkp(&[3, 3], &[2, 2], &[5, 5]);
        let mi = with_full_matrix(&mut p, &y);
        let plugins = Plugins {
            global_matrices: vec![mi],
            handlers: Vec::new(),
        };
        let mut node = NodeState::root(&p);
        node.fix(y[0][0], false);
        let prop = propagate(&mut node, &p, &plugins, &SolverConfig::default());
        assert!(!prop.infeasible);
        assert!(prop.fixings.contains(&(y[0][1], false)));
    }

    #[test]
    fn contradictory_fixings_are_infeasible_under_full_orbitope() {
        let (mut p, y) = mkp(&[3, 3], &[2, 2], &[5, 5]);
        let mi = with_full_matrix(&mut p, &y);
        let plugins = Plugins {
            global_matrices: vec![mi],
            handlers: Vec::new(),
        };
        let mut node = NodeState::root(&p);
        node.fix(y[0][0], false);
        node.fix(y[0][1], true);
        let prop = propagate(&mut node, &p, &plugins, &SolverConfig::default());
        assert!(prop.infeasible);
    }

    #[test]
    fn fixings_grow_monotonically_along_paths() {
        let (p, _) = mkp(&[3, 4, 5], &[3, 4, 5], &[7]);
        let config = SolverConfig {
            record_nodes: true,
            ..SolverConfig::default()
        };
        let report = solve(&p, &Plugins::none(), &config);
        assert_eq!(report.status, SolveStatus::Optimal);
        let by_id: std::collections::BTreeMap<u64, &NodeRecord> =
            report.node_trace.iter().map(|r| (r.id, r)).collect();
        for rec in &report.node_trace {
            if let Some(parent) = rec.parent.and_then(|pid| by_id.get(&pid)) {
                assert!(parent.fixed_zero.is_subset_of(&rec.fixed_zero));
                assert!(parent.fixed_one.is_subset_of(&rec.fixed_one));
            }
        }
    }

    #[test]
    fn identical_runs_are_identical() {
        let (p, _) = mkp(&[3, 4, 5, 6], &[3, 4, 5, 6], &[9, 9]);
        let a = solve(&p, &Plugins::none(), &SolverConfig::default());
        let b = solve(&p, &Plugins::none(), &SolverConfig::default());
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.incumbent, b.incumbent);
    }

    #[test]
    fn node_limit_reports_time_limit_status() {
        let (p, _) = mkp(&[3, 4, 5, 6, 7], &[3, 4, 5, 6, 7], &[9, 9]);
        let config = SolverConfig {
            node_limit: Some(1),
            ..SolverConfig::default()
        };
        let report = solve(&p, &Plugins::none(), &config);
        assert_eq!(report.status, SolveStatus::TimeLimit);
    }

    #[test]
    fn varset_roundtrips() {
        let mut s = VarSet::new(130);
        assert!(s.insert(VarId(0)));
        assert!(s.insert(VarId(64)));
        assert!(s.insert(VarId(129)));
        assert!(!s.insert(VarId(64)));
        assert_eq!(s.len(), 3);
        let ids: Vec<u32> = s.iter().map(|v| v.0).collect();
        assert_eq!(ids, vec![0, 64, 129]);
    }
}
