//! Bounded-variable dense simplex.
//!
//! One tableau implementation, generic over the scalar: `f64` for the node
//! relaxations inside branch-and-bound, [`Rat`] for exact completions of
//! continuous variables once all binaries are fixed (incumbent
//! certification, oracle support). Phase 1 minimizes artificial variables
//! added for rows whose initial activity violates a bound; phase 2 optimizes
//! the real objective. Entering variables are picked by largest reduced-cost
//! violation with a switch to Bland's rule after a configurable run of
//! degenerate pivots, which guarantees termination. Everything is solved
//! from scratch; warm starts are deliberately absent.

use num_traits::{FromPrimitive, One, Signed, Zero};
use thiserror::Error;

use crate::model::{MixedBinaryProgram, Rat, Sense, VarKind};

/// Scalar the simplex can run on.
pub trait LpScalar:
    Clone + PartialOrd + Zero + One + Signed + std::ops::Div<Output = Self> + std::fmt::Debug
{
    fn from_f64_lossy(v: f64) -> Self;
    /// Minimal pivot magnitude considered nonzero.
    fn tol_pivot() -> Self;
    /// Step length at or below which a pivot counts as degenerate.
    fn tol_step() -> Self;
    /// Ratio-test steps within this window of the minimum count as tied,
    /// letting the test prefer large pivot elements for stability.
    fn tol_ratio_tie() -> Self;
    /// Pivots between tableau rebuilds from the original equations
    /// (0 disables; pointless under exact arithmetic).
    const REINVERT_EVERY: usize;
}

impl LpScalar for f64 {
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
    fn tol_pivot() -> Self {
        1e-7
    }
    fn tol_step() -> Self {
        1e-12
    }
    fn tol_ratio_tie() -> Self {
        1e-9
    }
    const REINVERT_EVERY: usize = 40;
}

impl LpScalar for Rat {
    fn from_f64_lossy(v: f64) -> Self {
        Rat::from_f64(v).expect("finite float")
    }
    fn tol_pivot() -> Self {
        Rat::zero()
    }
    fn tol_step() -> Self {
        Rat::zero()
    }
    fn tol_ratio_tie() -> Self {
        Rat::zero()
    }
    const REINVERT_EVERY: usize = 0;
}

/// `None` means the side is unbounded.
#[derive(Clone, Debug)]
pub struct Range<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

/// A minimization problem in dense row form.
#[derive(Clone, Debug)]
pub struct DenseLp<T> {
    pub minimize: Vec<T>,
    pub var_bounds: Vec<Range<T>>,
    pub rows: Vec<(Vec<(usize, T)>, Range<T>)>,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub iter_cap: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degen_cap: usize,
    pub bland_from_start: bool,
    /// Phase-1 residual above which the LP is declared infeasible.
    pub feas_tol: f64,
    /// Reduced-cost threshold for entering candidates.
    pub price_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            iter_cap: 50_000,
            degen_cap: 100,
            bland_from_start: false,
            feas_tol: 1e-7,
            price_tol: 1e-9,
        }
    }
}

impl SimplexOptions {
    /// Options for exact arithmetic: zero tolerances, Bland's rule
    /// throughout (Dantzig pricing may cycle without perturbation).
    pub fn exact() -> Self {
        Self {
            iter_cap: 200_000,
            degen_cap: 0,
            bland_from_start: true,
            feas_tol: 0.0,
            price_tol: 0.0,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolvedStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub status: SolvedStatus,
    /// Variable values; meaningful only when optimal.
    pub values: Vec<T>,
    /// Objective of `values` under the minimization objective.
    pub objective: T,
    /// Lower bound on the true minimum derived from final reduced costs;
    /// `None` when a wrong-sign reduced cost sits on an unbounded range.
    pub dual_bound: Option<T>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("iteration limit")]
    IterationLimit,
    #[error("numerical trouble: solution fails the feasibility audit")]
    Numerical,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Simplex<T> {
    ncols: usize,
    nrows: usize,
    art_start: usize,
    tab: Vec<Vec<T>>,
    cost: Vec<T>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<Option<T>>,
    up: Vec<Option<T>>,
    beta: Vec<T>,
    bland: bool,
    degen_run: usize,
    pivots: usize,
    since_reinvert: usize,
    opts: SimplexOptions,
    price_tol: T,
    /// Original equation rows (`sum = 0` form, slacks and artificials
    /// included); the source of truth for tableau rebuilds.
    equations: Vec<Vec<(usize, T)>>,
    /// Objective of the phase currently being optimized.
    phase_cost: Vec<T>,
}

enum Step {
    Moved,
    Optimal,
    Unbounded,
}

impl<T: LpScalar> Simplex<T> {
    fn value(&self, j: usize) -> T {
        match self.state[j] {
            VarState::Basic(r) => self.beta[r].clone(),
            VarState::AtLower => self.lo[j].clone().expect("nonbasic at finite lower"),
            VarState::AtUpper => self.up[j].clone().expect("nonbasic at finite upper"),
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        match (&self.lo[j], &self.up[j]) {
            (Some(l), Some(u)) => l == u,
            _ => false,
        }
    }

    /// Entering-variable selection; `phase2` hides artificial columns.
    fn price(&self, phase2: bool) -> Option<(usize, bool)> {
        let mut best: Option<(T, usize, bool)> = None;
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::Basic(_)) || self.is_fixed(j) {
                continue;
            }
            if phase2 && j >= self.art_start {
                continue;
            }
            let d = &self.cost[j];
            let (viol, up_dir) = match self.state[j] {
                VarState::AtLower if *d < -self.price_tol.clone() => (-d.clone(), true),
                VarState::AtUpper if *d > self.price_tol.clone() => (d.clone(), false),
                _ => continue,
            };
            if self.bland {
                return Some((j, up_dir));
            }
            match &best {
                Some((v, _, _)) if *v >= viol => {}
                _ => best = Some((viol, j, up_dir)),
            }
        }
        best.map(|(_, j, d)| (j, d))
    }

    /// One ratio test plus pivot or bound flip for entering column `q`.
    ///
    /// Two passes in the spirit of Harris: the first finds the minimal
    /// blocking step, the second picks, among blockers within a small
    /// window of it, the one with the largest pivot element.
    fn step(&mut self, q: usize, up_dir: bool) -> Step {
        let dir = if up_dir { T::one() } else { -T::one() };
        let blocking = |s: &Self, r: usize| -> Option<(T, bool)> {
            let rate = dir.clone() * s.tab[r][q].clone();
            let b = s.basis[r];
            let (theta, to_upper) = if rate > T::tol_pivot() {
                ((s.beta[r].clone() - s.lo[b].clone()?) / rate, false)
            } else if rate < -T::tol_pivot() {
                ((s.beta[r].clone() - s.up[b].clone()?) / rate, true)
            } else {
                return None;
            };
            let theta = if theta < T::zero() { T::zero() } else { theta };
            Some((theta, to_upper))
        };

        let own_range = match (&self.lo[q], &self.up[q]) {
            (Some(l), Some(u)) => Some(u.clone() - l.clone()),
            _ => None,
        };
        let mut min_theta = own_range.clone();
        for r in 0..self.nrows {
            if let Some((theta, _)) = blocking(self, r) {
                if min_theta.as_ref().is_none_or(|t| theta < *t) {
                    min_theta = Some(theta);
                }
            }
        }
        let Some(min_theta) = min_theta else {
            return Step::Unbounded;
        };
        let window = min_theta.clone()
            + T::tol_ratio_tie() * (T::one() + min_theta.clone());
        let mut chosen: Option<(T, T, usize, bool)> = None; // theta, |pivot|, row
        for r in 0..self.nrows {
            if let Some((theta, to_upper)) = blocking(self, r) {
                if theta > window {
                    continue;
                }
                let mag = self.tab[r][q].abs();
                let replace = match &chosen {
                    None => true,
                    Some((_, m, pr, _)) => {
                        mag > *m || (mag == *m && self.basis[*pr] > self.basis[r])
                    }
                };
                if replace {
                    chosen = Some((theta, mag, r, to_upper));
                }
            }
        }
        // prefer a plain bound flip when it is (tied for) shortest
        let blocker = match (&own_range, &chosen) {
            (Some(range), Some((theta, _, _, _))) if *range <= *theta => None,
            (Some(range), None) => {
                debug_assert!(*range >= min_theta);
                None
            }
            (None, None) => unreachable!("min_theta came from somewhere"),
            _ => chosen.as_ref().map(|&(_, _, r, up)| (r, up)),
        };
        let theta = match blocker {
            None => own_range.expect("bound flip needs a finite range"),
            Some((r, _)) => blocking(self, r).expect("chosen row blocks").0,
        };

        let entering_value = self.value(q) + dir.clone() * theta.clone();
        for r in 0..self.nrows {
            let shift = dir.clone() * theta.clone() * self.tab[r][q].clone();
            self.beta[r] = self.beta[r].clone() - shift;
        }
        match blocker {
            None => {
                self.state[q] = match self.state[q] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!("entering variable is nonbasic"),
                };
            }
            Some((r, to_upper)) => {
                let leaving = self.basis[r];
                self.state[leaving] = if to_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.basis[r] = q;
                self.state[q] = VarState::Basic(r);
                self.beta[r] = entering_value;
                self.reduce_on(r, q);
            }
        }
        if theta <= T::tol_step() {
            self.degen_run += 1;
            if self.opts.degen_cap > 0 && self.degen_run >= self.opts.degen_cap {
                self.bland = true;
            }
        } else {
            self.degen_run = 0;
        }
        self.since_reinvert += 1;
        if T::REINVERT_EVERY > 0 && self.since_reinvert >= T::REINVERT_EVERY {
            self.reinvert();
        }
        Step::Moved
    }

    /// Rebuilds the tableau, basic values, and reduced costs from the
    /// original equations by Gauss-Jordan elimination with full pivoting
    /// over the basis submatrix, resetting accumulated roundoff. A
    /// numerically singular basis leaves the state untouched.
    fn reinvert(&mut self) {
        self.since_reinvert = 0;
        let mut dense: Vec<Vec<T>> = self
            .equations
            .iter()
            .map(|eq| {
                let mut row = vec![T::zero(); self.ncols];
                for (j, a) in eq {
                    row[*j] = a.clone();
                }
                row
            })
            .collect();
        let mut remaining: Vec<usize> = self.basis.clone();
        let mut done = vec![false; self.nrows];
        let mut assignment = vec![usize::MAX; self.nrows]; // row -> basis var
        while !remaining.is_empty() {
            let mut pick: Option<(T, usize, usize)> = None; // |a|, row, position
            for (r, row) in dense.iter().enumerate() {
                if done[r] {
                    continue;
                }
                for (pos, &b) in remaining.iter().enumerate() {
                    let mag = row[b].abs();
                    if pick.as_ref().is_none_or(|(m, _, _)| mag > *m) {
                        pick = Some((mag, r, pos));
                    }
                }
            }
            let (mag, r, pos) = pick.expect("as many rows as basis variables");
            if mag <= T::tol_pivot() {
                return; // singular under roundoff: keep the running tableau
            }
            let b = remaining.swap_remove(pos);
            done[r] = true;
            assignment[r] = b;
            let piv = dense[r][b].clone();
            for x in &mut dense[r] {
                *x = x.clone() / piv.clone();
            }
            for r2 in 0..self.nrows {
                if r2 == r || dense[r2][b].is_zero() {
                    continue;
                }
                let f = dense[r2][b].clone();
                for j in 0..self.ncols {
                    let delta = f.clone() * dense[r][j].clone();
                    dense[r2][j] = dense[r2][j].clone() - delta;
                }
            }
        }
        self.tab = dense;
        self.basis = assignment;
        for (r, &b) in self.basis.iter().enumerate() {
            self.state[b] = VarState::Basic(r);
        }
        // basic values from the nonbasic bounds: x_b = -sum tab * x_n
        for r in 0..self.nrows {
            let mut acc = T::zero();
            for j in 0..self.ncols {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let a = self.tab[r][j].clone();
                if a.is_zero() {
                    continue;
                }
                acc = acc + a * self.value(j);
            }
            self.beta[r] = -acc;
        }
        let cost = self.phase_cost.clone();
        self.set_cost(&cost);
    }

    /// Gaussian elimination of column `q` everywhere except pivot row `r`.
    fn reduce_on(&mut self, r: usize, q: usize) {
        let piv = self.tab[r][q].clone();
        debug_assert!(piv.abs() > T::tol_pivot(), "pivot too small");
        for x in &mut self.tab[r] {
            *x = x.clone() / piv.clone();
        }
        for r2 in 0..self.nrows {
            if r2 == r {
                continue;
            }
            let f = self.tab[r2][q].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                let delta = f.clone() * self.tab[r][j].clone();
                self.tab[r2][j] = self.tab[r2][j].clone() - delta;
            }
        }
        let f = self.cost[q].clone();
        if !f.is_zero() {
            for j in 0..self.ncols {
                let delta = f.clone() * self.tab[r][j].clone();
                self.cost[j] = self.cost[j].clone() - delta;
            }
        }
    }

    fn run(&mut self, phase2: bool) -> Result<Step, LpError> {
        loop {
            let Some((q, dir)) = self.price(phase2) else {
                return Ok(Step::Optimal);
            };
            self.pivots += 1;
            if self.pivots > self.opts.iter_cap {
                return Err(LpError::IterationLimit);
            }
            match self.step(q, dir) {
                Step::Moved => {}
                other => return Ok(other),
            }
        }
    }

    /// Reduced costs for an explicit objective over all columns.
    fn set_cost(&mut self, full_cost: &[T]) {
        self.phase_cost = full_cost.to_vec();
        self.cost = full_cost.to_vec();
        for r in 0..self.nrows {
            let cb = full_cost[self.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                let delta = cb.clone() * self.tab[r][j].clone();
                self.cost[j] = self.cost[j].clone() - delta;
            }
        }
    }
}

/// Solves a dense LP; `lp.minimize` is the objective to minimize.
pub fn solve_dense<T: LpScalar>(
    lp: &DenseLp<T>,
    opts: &SimplexOptions,
) -> Result<Solved<T>, LpError> {
    let n = lp.var_bounds.len();
    let nrows = lp.rows.len();
    let ncols = n + nrows * 2; // structurals, slacks, artificials (some unused)
    let art_start = n + nrows;

    let mut s = Simplex {
        ncols,
        nrows,
        art_start,
        tab: vec![vec![T::zero(); ncols]; nrows],
        cost: vec![T::zero(); ncols],
        basis: vec![0; nrows],
        state: vec![VarState::AtLower; ncols],
        lo: vec![Some(T::zero()); ncols],
        up: vec![Some(T::zero()); ncols],
        beta: vec![T::zero(); nrows],
        bland: opts.bland_from_start,
        degen_run: 0,
        pivots: 0,
        since_reinvert: 0,
        opts: opts.clone(),
        price_tol: T::from_f64_lossy(opts.price_tol),
        equations: Vec::new(),
        phase_cost: vec![T::zero(); ncols],
    };

    for j in 0..n {
        s.lo[j] = lp.var_bounds[j].lower.clone();
        s.up[j] = lp.var_bounds[j].upper.clone();
        s.state[j] = match (&s.lo[j], &s.up[j]) {
            (Some(_), _) => VarState::AtLower,
            (None, Some(_)) => VarState::AtUpper,
            (None, None) => panic!("free variables are not supported"),
        };
    }

    // rows: sum(terms) - slack = 0, slack within the row range
    let mut n_art = 0usize;
    for (r, (terms, range)) in lp.rows.iter().enumerate() {
        let slack = n + r;
        let mut equation: Vec<(usize, T)> = terms.clone();
        equation.push((slack, -T::one()));
        for (j, a) in terms {
            s.tab[r][*j] = s.tab[r][*j].clone() + a.clone();
        }
        s.tab[r][slack] = -T::one();
        s.lo[slack] = range.lower.clone();
        s.up[slack] = range.upper.clone();

        let mut activity = T::zero();
        for (j, a) in terms {
            activity = activity + a.clone() * s.value(*j);
        }
        let below = range.lower.as_ref().is_some_and(|l| activity < *l);
        let above = range.upper.as_ref().is_some_and(|u| activity > *u);
        if below || above {
            let art = art_start + n_art;
            n_art += 1;
            s.lo[art] = Some(T::zero());
            s.up[art] = None;
            if below {
                // activity - slack + art = 0 with slack at its lower bound
                s.state[slack] = VarState::AtLower;
                s.tab[r][art] = T::one();
                equation.push((art, T::one()));
                s.basis[r] = art;
                s.state[art] = VarState::Basic(r);
                s.beta[r] = range.lower.clone().unwrap() - activity;
            } else {
                s.state[slack] = VarState::AtUpper;
                s.tab[r][art] = -T::one();
                equation.push((art, -T::one()));
                for x in &mut s.tab[r] {
                    *x = -x.clone();
                }
                s.basis[r] = art;
                s.state[art] = VarState::Basic(r);
                s.beta[r] = activity - range.upper.clone().unwrap();
            }
        } else {
            // slack is basic; normalize its coefficient to +1
            for x in &mut s.tab[r] {
                *x = -x.clone();
            }
            s.basis[r] = slack;
            s.state[slack] = VarState::Basic(r);
            s.beta[r] = activity;
        }
        s.equations.push(equation);
    }
    // unused artificial columns stay fixed at zero
    for k in n_art..nrows {
        let art = art_start + k;
        s.lo[art] = Some(T::zero());
        s.up[art] = Some(T::zero());
    }

    let infeasible = |status| Solved {
        status,
        values: Vec::new(),
        objective: T::zero(),
        dual_bound: None,
    };

    if n_art > 0 {
        let mut phase1 = vec![T::zero(); ncols];
        for k in 0..n_art {
            phase1[art_start + k] = T::one();
        }
        s.set_cost(&phase1);
        match s.run(false)? {
            Step::Optimal => {}
            Step::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
            Step::Moved => unreachable!(),
        }
        let mut residual = T::zero();
        for k in 0..n_art {
            residual = residual + s.value(art_start + k);
        }
        if residual > T::from_f64_lossy(opts.feas_tol) {
            return Ok(infeasible(SolvedStatus::Infeasible));
        }
        // drive artificials out of the basis where possible, then pin them
        for r in 0..nrows {
            if s.basis[r] < art_start {
                continue;
            }
            if let Some(q) = (0..art_start)
                .find(|&j| !matches!(s.state[j], VarState::Basic(_)) && s.tab[r][j].abs() > T::tol_pivot())
            {
                let leaving = s.basis[r];
                let entering_value = s.value(q);
                s.state[leaving] = VarState::AtLower;
                s.basis[r] = q;
                s.state[q] = VarState::Basic(r);
                s.beta[r] = entering_value;
                s.reduce_on(r, q);
            }
        }
        for k in 0..n_art {
            let art = art_start + k;
            s.lo[art] = Some(T::zero());
            s.up[art] = Some(T::zero());
        }
    }

    let mut full_cost = vec![T::zero(); ncols];
    full_cost[..n].clone_from_slice(&lp.minimize);
    s.set_cost(&full_cost);
    match s.run(true)? {
        Step::Optimal => {}
        Step::Unbounded => return Ok(infeasible(SolvedStatus::Unbounded)),
        Step::Moved => unreachable!(),
    }

    let values: Vec<T> = (0..n).map(|j| s.value(j)).collect();
    let mut objective = T::zero();
    for j in 0..n {
        objective = objective + lp.minimize[j].clone() * values[j].clone();
    }
    // weak-duality slack from wrong-sign reduced costs; at termination
    // these are all below the pricing tolerance, so columns with an
    // unbounded range and a sub-tolerance residual contribute nothing
    let mut slack = Some(T::zero());
    for j in 0..art_start {
        if matches!(s.state[j], VarState::Basic(_)) || s.is_fixed(j) {
            continue;
        }
        let d = &s.cost[j];
        let wrong = match s.state[j] {
            VarState::AtLower if *d < T::zero() => d.abs(),
            VarState::AtUpper if *d > T::zero() => d.clone(),
            _ => continue,
        };
        match (&s.lo[j], &s.up[j], slack.take()) {
            (Some(l), Some(u), Some(acc)) => {
                slack = Some(acc + wrong * (u.clone() - l.clone()));
            }
            (_, _, acc) if wrong <= s.price_tol => slack = acc,
            _ => {
                slack = None;
                break;
            }
        }
    }
    let dual_bound = slack.map(|sl| objective.clone() - sl);

    Ok(Solved {
        status: SolvedStatus::Optimal,
        values,
        objective,
        dual_bound,
    })
}

// --- program-facing wrappers ----------------------------------------------

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a node relaxation, in the program's own sense.
#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective of the relaxation optimum; 0 unless `status` is optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Dual bound in the program's sense (an upper bound under maximize);
    /// `None` when no finite certificate is available.
    pub dual_bound: Option<f64>,
}

fn rat_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational within f64 range")
}

/// Original variable bounds as floats, ready for node-level overrides.
pub fn base_bounds(program: &MixedBinaryProgram) -> Vec<(f64, f64)> {
    program
        .variables
        .iter()
        .map(|v| (rat_f64(&v.lower), rat_f64(&v.upper)))
        .collect()
}

/// Solves the continuous relaxation under per-variable bounds
/// (`node_bounds` must refine the original bounds; one pair per variable).
pub fn solve_lp(
    program: &MixedBinaryProgram,
    node_bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> Result<LpResult, LpError> {
    assert_eq!(node_bounds.len(), program.n_vars());
    let maximize = program.sense == Sense::Maximize;
    let lp = DenseLp {
        minimize: program
            .variables
            .iter()
            .map(|v| {
                let c = rat_f64(&v.objective);
                if maximize {
                    -c
                } else {
                    c
                }
            })
            .collect(),
        var_bounds: node_bounds
            .iter()
            .map(|&(l, u)| Range {
                lower: Some(l),
                upper: Some(u),
            })
            .collect(),
        rows: program
            .constraints
            .iter()
            .filter(|c| c.lower.is_some() || c.upper.is_some())
            .map(|c| {
                (
                    c.terms
                        .iter()
                        .map(|t| (t.var.idx(), rat_f64(&t.coeff)))
                        .collect(),
                    Range {
                        lower: c.lower.as_ref().map(rat_f64),
                        upper: c.upper.as_ref().map(rat_f64),
                    },
                )
            })
            .collect(),
    };
    let solved = solve_dense(&lp, opts)?;
    Ok(match solved.status {
        SolvedStatus::Infeasible => LpResult {
            status: LpStatus::Infeasible,
            objective: 0.0,
            values: Vec::new(),
            dual_bound: None,
        },
        SolvedStatus::Unbounded => LpResult {
            status: LpStatus::Unbounded,
            objective: 0.0,
            values: Vec::new(),
            dual_bound: None,
        },
        SolvedStatus::Optimal => {
            audit(&lp, &solved.values)?;
            LpResult {
                status: LpStatus::Optimal,
                objective: if maximize {
                    -solved.objective
                } else {
                    solved.objective
                },
                values: solved.values,
                dual_bound: solved.dual_bound.map(|b| if maximize { -b } else { b }),
            }
        }
    })
}

/// Rejects claimed-optimal solutions with material constraint violations,
/// so a numerically lost solve degrades to "no usable bound" rather than a
/// wrong one.
fn audit(lp: &DenseLp<f64>, values: &[f64]) -> Result<(), LpError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LpError::Numerical);
    }
    for (j, b) in lp.var_bounds.iter().enumerate() {
        let scale = 1.0 + values[j].abs();
        if b.lower.is_some_and(|l| values[j] < l - 1e-5 * scale)
            || b.upper.is_some_and(|u| values[j] > u + 1e-5 * scale)
        {
            return Err(LpError::Numerical);
        }
    }
    for (terms, range) in &lp.rows {
        let activity: f64 = terms.iter().map(|&(j, a)| a * values[j]).sum();
        let scale = 1.0 + terms.iter().map(|&(j, a)| (a * values[j]).abs()).sum::<f64>();
        if range.lower.is_some_and(|l| activity < l - 1e-5 * scale)
            || range.upper.is_some_and(|u| activity > u + 1e-5 * scale)
        {
            return Err(LpError::Numerical);
        }
    }
    Ok(())
}

/// Completes a partially fixed assignment exactly: every `None` entry must
/// be a continuous variable, and the free part is optimized in the
/// program's sense by the exact simplex. Returns `None` when no feasible
/// completion exists. The completed assignment is re-checked through
/// `evaluate`, which is the final feasibility arbiter.
pub fn complete_exact(
    program: &MixedBinaryProgram,
    fixed: &[Option<Rat>],
) -> Option<(Vec<Rat>, Rat)> {
    assert_eq!(fixed.len(), program.n_vars());
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    debug_assert!(free
        .iter()
        .all(|&i| program.variables[i].kind == VarKind::Continuous));

    let mut assignment: Vec<Rat> = fixed
        .iter()
        .map(|v| v.clone().unwrap_or_else(Rat::zero))
        .collect();
    if !free.is_empty() {
        let maximize = program.sense == Sense::Maximize;
        let col_of: std::collections::HashMap<usize, usize> =
            free.iter().enumerate().map(|(c, &i)| (i, c)).collect();
        let mut rows = Vec::new();
        for c in &program.constraints {
            if c.lower.is_none() && c.upper.is_none() {
                continue;
            }
            let mut terms = Vec::new();
            let mut shift = Rat::zero();
            for t in &c.terms {
                match col_of.get(&t.var.idx()) {
                    Some(&col) => terms.push((col, t.coeff.clone())),
                    None => shift += &t.coeff * &assignment[t.var.idx()],
                }
            }
            if terms.is_empty() {
                // fully fixed row: let evaluate() decide at the end
                continue;
            }
            rows.push((
                terms,
                Range {
                    lower: c.lower.as_ref().map(|b| b - &shift),
                    upper: c.upper.as_ref().map(|b| b - &shift),
                },
            ));
        }
        let lp = DenseLp {
            minimize: free
                .iter()
                .map(|&i| {
                    let c = program.variables[i].objective.clone();
                    if maximize {
                        -c
                    } else {
                        c
                    }
                })
                .collect(),
            var_bounds: free
                .iter()
                .map(|&i| Range {
                    lower: Some(program.variables[i].lower.clone()),
                    upper: Some(program.variables[i].upper.clone()),
                })
                .collect(),
            rows,
        };
        let solved = solve_dense::<Rat>(&lp, &SimplexOptions::exact())
            .expect("exact simplex with Bland's rule terminates");
        match solved.status {
            SolvedStatus::Optimal => {
                for (c, &i) in free.iter().enumerate() {
                    assignment[i] = solved.values[c].clone();
                }
            }
            SolvedStatus::Infeasible => return None,
            SolvedStatus::Unbounded => unreachable!("all variables have finite bounds"),
        }
    }
    let eval = program.evaluate(&assignment).expect("complete assignment");
    if eval.feasible {
        Some((assignment, eval.objective))
    } else {
        None
    }
}
