//! Instance generators, file formats, and program builders.
//!
//! Generators are pure functions of their seed: randomness comes from
//! ChaCha8 with one documented stream per instance field (stream 0 weights
//! or unit properties, stream 1 duplication counts or demand, stream 2
//! profits), so instances are byte-reproducible across runs and platforms.
//!
//! ## File formats
//!
//! * MKP: JSON `{"format":"mkp-v1","name",...,"weights","profits",
//!   "capacities"}`.
//! * MUCP: JSON `{"format":"mucp-v1","name","periods","demand","units"}`
//!   with one record of `p_min/p_max/min_up/min_down/startup_cost/
//!   fixed_cost/prod_cost` per unit.
//! * MKCS: standard DIMACS `.col` text (`c` comments, one `p edge <n> <m>`
//!   header, `e <u> <v>` lines, 1-based) plus a `k` parameter given out of
//!   band.
//!
//! The generator CLI writes instances together with a manifest recording
//! seed, parameters and format version.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{rat, MixedBinaryProgram, OrbitopeKind, Rat, Sense, VarId, VarMatrix};
use crate::subsym::{MkcsData, MkpData, MucpData, MucpHandler, UnitProps};

pub const WEIGHT_LO: i64 = 10;
pub const WEIGHT_HI: i64 = 1000;
/// Profit spread for the correlated classes: `(L - l) / 10`.
pub const PROFIT_SPREAD: i64 = (WEIGHT_HI - WEIGHT_LO) / 10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemClass {
    Uncorrelated,
    WeaklyCorrelated,
    StronglyCorrelated,
    SubsetSum,
}

impl std::str::FromStr for ItemClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uncorrelated" => Ok(Self::Uncorrelated),
            "weakly" | "weakly-correlated" => Ok(Self::WeaklyCorrelated),
            "strongly" | "strongly-correlated" => Ok(Self::StronglyCorrelated),
            "subset-sum" => Ok(Self::SubsetSum),
            other => Err(format!("unknown item class '{other}'")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitMode {
    /// Every item of an equal-weight group gets the group's profit.
    Equal,
    /// Profits are drawn per item even inside a group.
    Free,
}

impl std::str::FromStr for ProfitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal" => Ok(Self::Equal),
            "free" => Ok(Self::Free),
            other => Err(format!("unknown profit mode '{other}'")),
        }
    }
}

fn stream(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Random MKP instance: weights uniform in `[10, 1000]`, duplicated into
/// equal-weight groups of size uniform in `[1, m/sym_factor_den]` (the
/// symmetry factor `f = 1/sym_factor_den`), the last group truncated so
/// exactly `m` items exist. Every knapsack gets capacity
/// `floor(total_weight / (2 n))`. Profits follow the item class.
pub fn gen_mkp(
    seed: u64,
    m: usize,
    n: usize,
    class: ItemClass,
    sym_factor_den: u32,
    profit_mode: ProfitMode,
) -> MkpData {
    assert!(m >= 1 && n >= 1);
    assert!(sym_factor_den >= 1);
    let mut w_rng = stream(seed, 0);
    let mut d_rng = stream(seed, 1);
    let mut p_rng = stream(seed, 2);

    let group_cap = (m / sym_factor_den as usize).max(1) as i64;
    let mut weights = Vec::with_capacity(m);
    let mut profits = Vec::with_capacity(m);
    while weights.len() < m {
        let w = w_rng.gen_range(WEIGHT_LO..=WEIGHT_HI);
        let d = d_rng.gen_range(1..=group_cap) as usize;
        let take = d.min(m - weights.len());
        let draw = |rng: &mut ChaCha8Rng| match class {
            ItemClass::Uncorrelated => rng.gen_range(WEIGHT_LO..=WEIGHT_HI),
            ItemClass::WeaklyCorrelated => {
                rng.gen_range(1.max(w - PROFIT_SPREAD)..=w + PROFIT_SPREAD)
            }
            ItemClass::StronglyCorrelated => w + PROFIT_SPREAD,
            ItemClass::SubsetSum => w,
        };
        let group_profit = draw(&mut p_rng);
        for _ in 0..take {
            weights.push(w);
            profits.push(match profit_mode {
                ProfitMode::Equal => group_profit,
                ProfitMode::Free => draw(&mut p_rng),
            });
        }
    }
    let total: i64 = weights.iter().sum();
    let capacity = total / (2 * n as i64);
    MkpData {
        weights,
        profits,
        capacities: vec![capacity; n],
    }
}

/// Random MUCP instance with `type_sizes[h]` identical units of type `h`
/// (at least one type must have two or more units so symmetry exists).
/// Demand never exceeds the fleet's total maximum production, which makes
/// the all-up schedule feasible.
pub fn gen_mucp(seed: u64, periods: usize, type_sizes: &[usize]) -> MucpData {
    assert!(periods >= 1);
    assert!(
        type_sizes.iter().any(|&s| s >= 2),
        "at least one unit type needs two or more units"
    );
    let mut prop_rng = stream(seed, 0);
    let mut d_rng = stream(seed, 1);

    let mut units = Vec::new();
    for &size in type_sizes {
        let p_max = prop_rng.gen_range(20..=60);
        let props = UnitProps {
            p_max,
            p_min: prop_rng.gen_range(5..=15.min(p_max)),
            min_up: prop_rng.gen_range(1..=3usize.min(periods)),
            min_down: prop_rng.gen_range(1..=3usize.min(periods)),
            startup_cost: prop_rng.gen_range(20..=100),
            fixed_cost: prop_rng.gen_range(10..=50),
            prod_cost: prop_rng.gen_range(1..=5),
        };
        units.extend(std::iter::repeat_n(props, size));
    }
    let fleet_max: i64 = units.iter().map(|u| u.p_max).sum();
    let mut demand = Vec::with_capacity(periods);
    for _ in 0..periods {
        let mut d = d_rng.gen_range(0..=fleet_max * 9 / 10);
        // regenerate any draw that would exceed the fleet capacity
        while d > fleet_max {
            d = d_rng.gen_range(0..=fleet_max * 9 / 10);
        }
        demand.push(d);
    }
    MucpData {
        periods,
        demand,
        units,
    }
}

// --- graphs and DIMACS -------------------------------------------------------

/// Simple undirected graph with vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a simple graph; rejects out-of-range endpoints and loops,
    /// ignores duplicate edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, String> {
        let mut set = std::collections::BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(format!("edge ({a},{b}) out of range for {n} vertices"));
            }
            if a == b {
                return Err(format!("self-loop at vertex {a}"));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Path on `n` vertices.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path is simple")
    }

    /// The Petersen graph: outer 5-cycle, inner pentagram, five spokes.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Self::from_edges(10, &edges).expect("petersen is simple")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing 'p edge <n> <m>' header")]
    MissingHeader,
}

/// Parses DIMACS `.col` text. Self-loops and duplicate edges are dropped
/// with a warning recorded per occurrence; structural problems (missing
/// header, out-of-range endpoints) are errors carrying the line number.
pub fn parse_dimacs(text: &str) -> Result<(Graph, Vec<String>), DimacsError> {
    let mut n: Option<usize> = None;
    let mut edges = std::collections::BTreeSet::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.first() {
            None => continue,
            Some(&"c") => continue,
            Some(&"p") => {
                if n.is_some() {
                    return Err(DimacsError::Malformed {
                        line,
                        message: "duplicate problem line".into(),
                    });
                }
                if fields.len() != 4 || fields[1] != "edge" {
                    return Err(DimacsError::Malformed {
                        line,
                        message: "expected 'p edge <n> <m>'".into(),
                    });
                }
                let vertices: usize = fields[2].parse().map_err(|_| DimacsError::Malformed {
                    line,
                    message: format!("bad vertex count '{}'", fields[2]),
                })?;
                n = Some(vertices);
            }
            Some(&"e") => {
                let n = n.ok_or(DimacsError::MissingHeader)?;
                if fields.len() != 3 {
                    return Err(DimacsError::Malformed {
                        line,
                        message: "expected 'e <u> <v>'".into(),
                    });
                }
                let parse = |s: &str| -> Result<usize, DimacsError> {
                    let v: usize = s.parse().map_err(|_| DimacsError::Malformed {
                        line,
                        message: format!("bad vertex '{s}'"),
                    })?;
                    if v < 1 || v > n {
                        return Err(DimacsError::Malformed {
                            line,
                            message: format!("vertex {v} out of range 1..={n}"),
                        });
                    }
                    Ok(v - 1)
                };
                let a = parse(fields[1])?;
                let b = parse(fields[2])?;
                if a == b {
                    warnings.push(format!("line {line}: dropped self-loop at vertex {}", a + 1));
                    continue;
                }
                if !edges.insert((a.min(b), a.max(b))) {
                    warnings.push(format!(
                        "line {line}: dropped duplicate edge {} {}",
                        a + 1,
                        b + 1
                    ));
                }
            }
            Some(other) => {
                return Err(DimacsError::Malformed {
                    line,
                    message: format!("unknown record type '{other}'"),
                })
            }
        }
    }
    let n = n.ok_or(DimacsError::MissingHeader)?;
    Ok((
        Graph {
            n,
            edges: edges.into_iter().collect(),
        },
        warnings,
    ))
}

/// Canonical DIMACS text (sorted edges, 1-based).
pub fn write_dimacs(graph: &Graph) -> String {
    let mut out = format!("p edge {} {}\n", graph.n, graph.edges.len());
    for &(a, b) in &graph.edges {
        out.push_str(&format!("e {} {}\n", a + 1, b + 1));
    }
    out
}

// --- builders ----------------------------------------------------------------

pub struct BuiltMkp {
    pub program: MixedBinaryProgram,
    pub data: MkpData,
    /// `y[item][knapsack]`.
    pub y: Vec<Vec<VarId>>,
    pub knapsack_matrix: usize,
    /// One transposed full-orbitope matrix per group of identical items.
    pub item_matrices: Vec<usize>,
}

/// Standard MKP formulation: maximize total profit subject to per-knapsack
/// capacities and at most one knapsack per item. Declares the item-by-
/// knapsack packing matrix (knapsack symmetry) and, per group of items with
/// equal weight and profit, a transposed full-orbitope matrix (item
/// symmetry); the variable order keeps both kinds of representatives
/// simultaneously attainable.
pub fn build_mkp(data: &MkpData, name: &str) -> BuiltMkp {
    let (m, n) = (data.n_items(), data.n_knapsacks());
    let mut program = MixedBinaryProgram::new(name, Sense::Maximize);
    let mut y = vec![vec![VarId(0); n]; m];
    for i in 0..m {
        for j in 0..n {
            y[i][j] = program.add_binary(format!("y_{i}_{j}"), rat(data.profits[i]));
        }
    }
    for j in 0..n {
        program.add_le(
            format!("cap_{j}"),
            (0..m).map(|i| (y[i][j], rat(data.weights[i]))).collect(),
            rat(data.capacities[j]),
        );
    }
    for i in 0..m {
        program.add_le(
            format!("item_{i}"),
            (0..n).map(|j| (y[i][j], rat(1))).collect(),
            rat(1),
        );
    }
    let knapsack_matrix = program.add_matrix(VarMatrix {
        label: "knapsacks".into(),
        kind: OrbitopeKind::Packing,
        rows: m,
        cols: n,
        entries: y.iter().flatten().copied().collect(),
    });
    let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for i in 0..m {
        groups
            .entry((data.weights[i], data.profits[i]))
            .or_default()
            .push(i);
    }
    let mut item_matrices = Vec::new();
    for ((w, p), items) in groups {
        if items.len() < 2 {
            continue;
        }
        let mut entries = Vec::with_capacity(n * items.len());
        for j in 0..n {
            for &i in &items {
                entries.push(y[i][j]);
            }
        }
        item_matrices.push(program.add_matrix(VarMatrix {
            label: format!("items_w{w}_p{p}"),
            kind: OrbitopeKind::Full,
            rows: n,
            cols: items.len(),
            entries,
        }));
    }
    BuiltMkp {
        program,
        data: data.clone(),
        y,
        knapsack_matrix,
        item_matrices,
    }
}

pub struct BuiltMucp {
    pub program: MixedBinaryProgram,
    pub data: MucpData,
    /// `x[period][unit]`: unit is up.
    pub x: Vec<Vec<VarId>>,
    /// `u[period][unit]`: unit starts up.
    pub u: Vec<Vec<VarId>>,
    /// `p[period][unit]`: production level.
    pub p: Vec<Vec<VarId>>,
    /// `(type index, members, matrix)` for every type with >= 2 units.
    pub type_matrices: Vec<(usize, Vec<usize>, usize)>,
}

impl BuiltMucp {
    /// One start-up/shut-down handler per symmetric type.
    pub fn handlers(&self) -> Vec<MucpHandler> {
        self.type_matrices
            .iter()
            .map(|(h, members, matrix)| {
                MucpHandler::new(
                    *h,
                    *matrix,
                    members.clone(),
                    &self.data.units[members[0]],
                    self.u.clone(),
                )
            })
            .collect()
    }
}

/// Three-constraint min-up/min-down formulation: production bounded by
/// `P_min x <= p <= P_max x`, demand covered per period, start-up variables
/// linked by `u >= x_t - x_(t-1)` (with `x_0 = 0`), min-up
/// `sum u over the trailing window <= x_t`, and min-down
/// `sum u over the trailing window <= 1 - x_(t-down)` (window truncated at
/// the horizon start). Cost: startups plus fixed running cost plus
/// production. Declares one full-orbitope matrix per type of identical
/// units.
pub fn build_mucp(data: &MucpData, name: &str) -> BuiltMucp {
    let t_max = data.periods;
    let n = data.n_units();
    assert_eq!(data.demand.len(), t_max, "one demand entry per period");
    let mut program = MixedBinaryProgram::new(name, Sense::Minimize);
    let grid = |prefix: &str, program: &mut MixedBinaryProgram, f: &dyn Fn(&UnitProps) -> Rat, kind: u8| {
        let mut g = vec![vec![VarId(0); n]; t_max];
        for (t, row) in g.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let obj = f(&data.units[j]);
                *cell = match kind {
                    0 => program.add_binary(format!("{prefix}_{t}_{j}"), obj),
                    _ => program.add_continuous(
                        format!("{prefix}_{t}_{j}"),
                        Rat::zero(),
                        rat(data.units[j].p_max),
                        obj,
                    ),
                };
            }
        }
        g
    };
    let x = grid("x", &mut program, &|u| rat(u.fixed_cost), 0);
    let u = grid("u", &mut program, &|u| rat(u.startup_cost), 0);
    let p = grid("p", &mut program, &|u| rat(u.prod_cost), 1);

    for t in 0..t_max {
        for j in 0..n {
            let props = &data.units[j];
            program.add_ge(
                format!("pmin_{t}_{j}"),
                vec![(p[t][j], rat(1)), (x[t][j], rat(-props.p_min))],
                Rat::zero(),
            );
            program.add_le(
                format!("pmax_{t}_{j}"),
                vec![(p[t][j], rat(1)), (x[t][j], rat(-props.p_max))],
                Rat::zero(),
            );
            let mut start_terms = vec![(u[t][j], rat(1)), (x[t][j], rat(-1))];
            if t > 0 {
                start_terms.push((x[t - 1][j], rat(1)));
            }
            program.add_ge(format!("ustart_{t}_{j}"), start_terms, Rat::zero());
            let up_from = (t + 1).saturating_sub(props.min_up);
            let mut minup = vec![(x[t][j], rat(-1))];
            minup.extend((up_from..=t).map(|t2| (u[t2][j], rat(1))));
            program.add_le(format!("minup_{t}_{j}"), minup, Rat::zero());
            let down_from = (t + 1).saturating_sub(props.min_down);
            let mut mindown: Vec<(VarId, Rat)> =
                (down_from..=t).map(|t2| (u[t2][j], rat(1))).collect();
            if t >= props.min_down {
                mindown.push((x[t - props.min_down][j], rat(1)));
            }
            program.add_le(format!("mindown_{t}_{j}"), mindown, rat(1));
        }
        program.add_ge(
            format!("demand_{t}"),
            (0..n).map(|j| (p[t][j], rat(1))).collect(),
            rat(data.demand[t]),
        );
    }

    let mut type_matrices = Vec::new();
    for (h, members) in data.types().into_iter().enumerate() {
        if members.len() < 2 {
            continue;
        }
        let mut entries = Vec::with_capacity(t_max * members.len());
        for t in 0..t_max {
            for &j in &members {
                entries.push(x[t][j]);
            }
        }
        let matrix = program.add_matrix(VarMatrix {
            label: format!("type{h}"),
            kind: OrbitopeKind::Full,
            rows: t_max,
            cols: members.len(),
            entries,
        });
        type_matrices.push((h, members, matrix));
    }
    BuiltMucp {
        program,
        data: data.clone(),
        x,
        u,
        p,
        type_matrices,
    }
}

pub struct BuiltMkcs {
    pub program: MixedBinaryProgram,
    /// `x[vertex][color]`.
    pub x: Vec<Vec<VarId>>,
    pub color_matrix: usize,
}

/// Standard max-k-colorable-subgraph formulation: maximize colored
/// vertices, adjacent vertices never share a color, every vertex takes at
/// most one color. Declares the vertex-by-color packing matrix.
pub fn build_mkcs(data: &MkcsData, name: &str) -> BuiltMkcs {
    let n = data.graph.n_vertices();
    let k = data.k;
    let mut program = MixedBinaryProgram::new(name, Sense::Maximize);
    let mut x = vec![vec![VarId(0); k]; n];
    for (i, row) in x.iter_mut().enumerate() {
        for (r, cell) in row.iter_mut().enumerate() {
            *cell = program.add_binary(format!("x_{i}_{r}"), rat(1));
        }
    }
    for &(i, j) in data.graph.edges() {
        for r in 0..k {
            program.add_le(
                format!("edge_{i}_{j}_c{r}"),
                vec![(x[i][r], rat(1)), (x[j][r], rat(1))],
                rat(1),
            );
        }
    }
    for i in 0..n {
        program.add_le(
            format!("vertex_{i}"),
            (0..k).map(|r| (x[i][r], rat(1))).collect(),
            rat(1),
        );
    }
    let color_matrix = program.add_matrix(VarMatrix {
        label: "colors".into(),
        kind: OrbitopeKind::Packing,
        rows: n,
        cols: k,
        entries: x.iter().flatten().copied().collect(),
    });
    BuiltMkcs {
        program,
        x,
        color_matrix,
    }
}

// --- instance files ------------------------------------------------------------

pub const MKP_FORMAT: &str = "mkp-v1";
pub const MUCP_FORMAT: &str = "mucp-v1";
pub const MANIFEST_FORMAT: &str = "gen-manifest-v1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("bad instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected format tag '{got}' (expected '{expected}')")]
    Format { expected: &'static str, got: String },
    #[error(transparent)]
    Dimacs(#[from] DimacsError),
}

#[derive(Serialize, Deserialize)]
struct MkpFile {
    format: String,
    name: String,
    weights: Vec<i64>,
    profits: Vec<i64>,
    capacities: Vec<i64>,
}

pub fn mkp_to_json(name: &str, data: &MkpData) -> String {
    serde_json::to_string_pretty(&MkpFile {
        format: MKP_FORMAT.into(),
        name: name.into(),
        weights: data.weights.clone(),
        profits: data.profits.clone(),
        capacities: data.capacities.clone(),
    })
    .expect("serialization cannot fail")
}

pub fn mkp_from_json(text: &str) -> Result<(String, MkpData), InstanceError> {
    let file: MkpFile = serde_json::from_str(text)?;
    if file.format != MKP_FORMAT {
        return Err(InstanceError::Format {
            expected: MKP_FORMAT,
            got: file.format,
        });
    }
    Ok((
        file.name,
        MkpData {
            weights: file.weights,
            profits: file.profits,
            capacities: file.capacities,
        },
    ))
}

#[derive(Serialize, Deserialize)]
struct MucpFile {
    format: String,
    name: String,
    periods: usize,
    demand: Vec<i64>,
    units: Vec<UnitProps>,
}

pub fn mucp_to_json(name: &str, data: &MucpData) -> String {
    serde_json::to_string_pretty(&MucpFile {
        format: MUCP_FORMAT.into(),
        name: name.into(),
        periods: data.periods,
        demand: data.demand.clone(),
        units: data.units.clone(),
    })
    .expect("serialization cannot fail")
}

pub fn mucp_from_json(text: &str) -> Result<(String, MucpData), InstanceError> {
    let file: MucpFile = serde_json::from_str(text)?;
    if file.format != MUCP_FORMAT {
        return Err(InstanceError::Format {
            expected: MUCP_FORMAT,
            got: file.format,
        });
    }
    Ok((
        file.name,
        MucpData {
            periods: file.periods,
            demand: file.demand,
            units: file.units,
        },
    ))
}

/// Manifest written next to generated instances.
#[derive(Serialize, Deserialize)]
pub struct GenManifest {
    pub format: String,
    pub generator: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub format_version: String,
    pub files: Vec<String>,
}
