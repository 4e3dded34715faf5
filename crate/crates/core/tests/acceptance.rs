//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! 1. Oracle optimality: every setting reproduces the brute-force optimum
//!    on 300+ generated tiny MKP instances (all four item classes,
//!    symmetry factors 1/2 and 1/4), exactly.
//! 2. Propagator exactness: orbitopal fixing equals enumeration-based
//!    forced cells on every domain grid with at most 9 cells, all kinds.
//! 3. Representative survival: no orbit of a declared matrix or emitted
//!    activation loses all members to its family's exclusions, and no
//!    orbit of the joint symmetry group loses all members to the full
//!    exclusion set of any setting.
//! 4. SHI safety: the MKP and MUCP inequality families preserve the exact
//!    optimum on 100+ tiny instances each; the strengthened start-up
//!    inequality instantiates to its known form.
//! 5. Handler soundness: solves in assertion mode (exhaustive column-swap
//!    feasibility/objective preservation at every node) over 1000+ nodes.
//! 6. Symmetry benefit at scale m=20, n=4: median node counts satisfy
//!    act <= orbitope <= no-sym with act at most half of no-sym.
//! 7. Protocol fidelity: shifted geometric mean and class semantics against
//!    hand-computed tables.
//! 8. MKCS sanity on the Petersen graph with k in {2, 3}, plus DIMACS
//!    round-trips.

use std::collections::BTreeSet;

use actsym::bench::{
    declared_column_actions, prepare, read_csv, shifted_geomean, summarize, write_csv,
    ProblemInstance, ReportRow, Setting,
};
use actsym::bnb::{dive_survives, solve, Plugins, SolveStatus, SolverConfig};
use actsym::instances::{
    build_mkcs, build_mkp, build_mucp, gen_mkp, gen_mucp, parse_dimacs, write_dimacs, Graph,
    ItemClass, ProfitMode,
};
use actsym::lp::complete_exact;
use actsym::model::{MixedBinaryProgram, Rat, VarMatrix};
use actsym::oracle::{self, ColumnAction};
use actsym::orbitope::{propagate_orbitope, CellDomain, DomainGrid};
use actsym::model::OrbitopeKind;
use actsym::par;
use actsym::subsym::{add_mkp_shis, add_mucp_shis, mkp_shis_hold, MkcsData, MkpHandler};

fn config(setting: Setting) -> SolverConfig {
    SolverConfig {
        setting: setting.to_string(),
        ..SolverConfig::default()
    }
}

fn solve_setting(instance: &ProblemInstance, setting: Setting) -> Option<Rat> {
    let prepared = prepare(instance, setting).unwrap();
    let report = solve(&prepared.program, &prepared.plugins, &config(setting));
    assert_eq!(
        report.status,
        SolveStatus::Optimal,
        "{} under {setting} must solve",
        instance.name()
    );
    report.objective
}

// --- criterion 1 -----------------------------------------------------------

#[test]
fn acceptance_1_oracle_optimality() {
    let class_modes = [
        (ItemClass::Uncorrelated, ProfitMode::Equal),
        (ItemClass::Uncorrelated, ProfitMode::Free),
        (ItemClass::WeaklyCorrelated, ProfitMode::Equal),
        (ItemClass::WeaklyCorrelated, ProfitMode::Free),
        (ItemClass::StronglyCorrelated, ProfitMode::Equal),
        (ItemClass::SubsetSum, ProfitMode::Equal),
    ];
    let sizes = [(4, 2), (5, 2), (6, 2), (4, 3)];
    let mut tasks = Vec::new();
    for &(class, mode) in &class_modes {
        for &f_den in &[2u32, 4] {
            for &(m, n) in &sizes {
                for seed in 0..7 {
                    tasks.push((class, mode, f_den, m, n, seed));
                }
            }
        }
    }
    assert!(tasks.len() >= 300, "need at least 300 instances");
    let total = tasks.len();
    let failures: usize = par::map(tasks, |(class, mode, f_den, m, n, seed)| {
        let data = gen_mkp(seed, m, n, class, f_den, mode);
        let instance = ProblemInstance::Mkp {
            name: format!("a1-{seed}"),
            data,
        };
        let base = prepare(&instance, Setting::NoSym).unwrap();
        let expect = oracle::optimum(&base.program).unwrap();
        let mut bad = 0;
        for setting in [Setting::NoSym, Setting::Orbitope, Setting::Ineq, Setting::Act] {
            if solve_setting(&instance, setting) != expect {
                eprintln!(
                    "mismatch: class {class:?} mode {mode:?} f 1/{f_den} {m}x{n} seed {seed} {setting}"
                );
                bad += 1;
            }
        }
        bad
    })
    .into_iter()
    .sum();
    assert_eq!(failures, 0);
    println!("acceptance 1 (oracle optimality, {total} instances x 4 settings): PASS");
}

// --- criterion 2 -----------------------------------------------------------

fn grid_from_code(rows: usize, cols: usize, mut code: u32) -> DomainGrid {
    let mut g = DomainGrid::free(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let dom = match code % 3 {
                0 => CellDomain::Free,
                1 => CellDomain::Only0,
                _ => CellDomain::Only1,
            };
            g.set(r, c, dom);
            code /= 3;
        }
    }
    g
}

#[test]
fn acceptance_2_propagator_exactness() {
    let mut shapes = Vec::new();
    for m in 1..=9usize {
        for n in 1..=9usize {
            if m * n <= 9 {
                shapes.push((m, n));
            }
        }
    }
    let kinds = [
        OrbitopeKind::Full,
        OrbitopeKind::Packing,
        OrbitopeKind::Partitioning,
    ];
    let tasks: Vec<(usize, usize, OrbitopeKind)> = shapes
        .iter()
        .flat_map(|&(m, n)| kinds.iter().map(move |&k| (m, n, k)))
        .collect();
    let mut grids_checked = 0u64;
    for count in par::map(tasks, |(m, n, kind)| {
        let total = 3u32.pow((m * n) as u32);
        for code in 0..total {
            let grid = grid_from_code(m, n, code);
            let got = propagate_orbitope(&grid, kind);
            let want = oracle::forced_cells(&grid, kind).unwrap();
            assert_eq!(got, want, "{m}x{n} {kind:?} grid {code}");
        }
        total as u64
    }) {
        grids_checked += count;
    }
    println!("acceptance 2 (propagator exactness, {grids_checked} grids): PASS");
}

// --- criterion 3 -----------------------------------------------------------

/// Orbits of the feasible pattern set under the group generated by adjacent
/// column swaps of all given matrices together.
fn joint_orbits(
    matrices: &[&VarMatrix],
    feasible: &BTreeSet<Vec<bool>>,
) -> Vec<Vec<Vec<bool>>> {
    let mut gens: Vec<Vec<(usize, usize)>> = Vec::new();
    for m in matrices {
        for c in 0..m.cols.saturating_sub(1) {
            gens.push(
                (0..m.rows)
                    .map(|r| (m.entry(r, c).idx(), m.entry(r, c + 1).idx()))
                    .collect(),
            );
        }
    }
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut orbits = Vec::new();
    for p in feasible {
        if seen.contains(p) {
            continue;
        }
        let mut orbit = vec![p.clone()];
        seen.insert(p.clone());
        let mut stack = vec![p.clone()];
        while let Some(q) = stack.pop() {
            for g in &gens {
                let mut img = q.clone();
                for &(a, b) in g {
                    img.swap(a, b);
                }
                assert!(
                    feasible.contains(&img),
                    "declared symmetry must preserve feasibility"
                );
                if seen.insert(img.clone()) {
                    orbit.push(img.clone());
                    stack.push(img);
                }
            }
        }
        orbits.push(orbit);
    }
    orbits
}

fn check_orbits_survive(
    label: &str,
    program: &MixedBinaryProgram,
    action: &ColumnAction,
    survives: &dyn Fn(&[bool]) -> bool,
) {
    for orbit in oracle::enumerate_orbits(program, action).unwrap() {
        assert!(orbit.closed, "{label}: orbit left the feasible set");
        assert!(
            orbit.members.iter().any(|m| survives(m)),
            "{label}: an orbit lost all its members"
        );
    }
}

#[test]
fn acceptance_3_representative_survival() {
    let cfg = &SolverConfig::default();
    let mut orbit_groups = 0usize;

    // MKP: knapsack-column family (global orbitope + capacity activations,
    // or the SHIs), item-row family (item orbitopes), and the joint group
    // against each setting's full exclusion set.
    for seed in 0..6u64 {
        for &(m, n) in &[(4usize, 2usize), (3, 3)] {
            for class in [ItemClass::SubsetSum, ItemClass::Uncorrelated] {
                let data = gen_mkp(seed, m, n, class, 2, ProfitMode::Equal);
                let built = &build_mkp(&data, "a3");
                let instance = ProblemInstance::Mkp {
                    name: "a3".into(),
                    data: data.clone(),
                };
                let feasible: BTreeSet<Vec<bool>> = oracle::enumerate_feasible(&built.program)
                    .unwrap()
                    .into_iter()
                    .map(|p| p.pattern)
                    .collect();
                let y_grid = |pattern: &[bool]| -> Vec<Vec<bool>> {
                    (0..m).map(|i| (0..n).map(|j| pattern[i * n + j]).collect()).collect()
                };

                let knapsack_family = &Plugins {
                    global_matrices: vec![built.knapsack_matrix],
                    handlers: vec![Box::new(MkpHandler::new(&data, built.knapsack_matrix))],
                };
                let knapsack_only = &Plugins {
                    global_matrices: vec![built.knapsack_matrix],
                    handlers: Vec::new(),
                };
                let item_family = &Plugins {
                    global_matrices: built.item_matrices.clone(),
                    handlers: Vec::new(),
                };
                // each matrix is its own sub-symmetry family; orbits of one
                // group may legitimately lose members to *other* groups'
                // conditions (the joint-orbit check below covers that)
                let single: std::collections::BTreeMap<String, Plugins> = built
                    .program
                    .matrices
                    .iter()
                    .enumerate()
                    .map(|(mi, mx)| {
                        (
                            mx.label.clone(),
                            Plugins {
                                global_matrices: vec![mi],
                                handlers: Vec::new(),
                            },
                        )
                    })
                    .collect();
                for setting in [Setting::NoSym, Setting::Orbitope, Setting::Ineq, Setting::Act] {
                    let prepared_full = match setting {
                        Setting::Orbitope | Setting::Act => {
                            Some(prepare(&instance, setting).unwrap())
                        }
                        _ => None,
                    };
                    let knapsack_excl: Box<dyn Fn(&[bool]) -> bool> = match setting {
                        Setting::NoSym => Box::new(|_| true),
                        Setting::Ineq => Box::new(|p| mkp_shis_hold(&data, &y_grid(p))),
                        Setting::Orbitope => {
                            Box::new(|p| dive_survives(&built.program, knapsack_only, cfg, p))
                        }
                        _ => Box::new(|p| dive_survives(&built.program, knapsack_family, cfg, p)),
                    };
                    for (label, action) in declared_column_actions(&instance) {
                        if label == "knapsacks" {
                            check_orbits_survive(&label, &built.program, &action, &*knapsack_excl);
                        } else if setting == Setting::NoSym {
                            check_orbits_survive(&label, &built.program, &action, &|_| true);
                        } else {
                            let plugins = &single[&label];
                            check_orbits_survive(&label, &built.program, &action, &|p| {
                                dive_survives(&built.program, plugins, cfg, p)
                            });
                        }
                        orbit_groups += 1;
                    }
                    // joint orbits against the full exclusion set
                    let full: Box<dyn Fn(&[bool]) -> bool> = match setting {
                        Setting::NoSym => Box::new(|_| true),
                        Setting::Ineq => Box::new(|p| {
                            mkp_shis_hold(&data, &y_grid(p))
                                && dive_survives(&built.program, item_family, cfg, p)
                        }),
                        _ => {
                            let prepared = prepared_full.as_ref().unwrap();
                            Box::new(move |p| {
                                dive_survives(&prepared.program, &prepared.plugins, cfg, p)
                            })
                        }
                    };
                    let matrices: Vec<&VarMatrix> = built.program.matrices.iter().collect();
                    for orbit in joint_orbits(&matrices, &feasible) {
                        assert!(
                            orbit.iter().any(|member| full(member)),
                            "joint orbit lost all members under {setting}"
                        );
                    }
                    orbit_groups += 1;
                }

                // emitted activations, against the capacity family
                let act = prepare(&instance, Setting::Act).unwrap();
                let record = SolverConfig {
                    record_activations: true,
                    ..SolverConfig::default()
                };
                let report = solve(&act.program, &act.plugins, &record);
                for (handler_name, activation) in &report.activations {
                    let handler = act
                        .plugins
                        .handlers
                        .iter()
                        .find(|h| h.name() == handler_name.as_str())
                        .expect("recorded handler");
                    let action = ColumnAction {
                        columns: handler.action_columns(activation, &act.program),
                    };
                    check_orbits_survive("mkp activation", &built.program, &action, &|p| {
                        dive_survives(&built.program, knapsack_family, cfg, p)
                    });
                    orbit_groups += 1;
                }
            }
        }
    }

    // MUCP: single family (type matrices + start-up/shut-down activations)
    for seed in 0..4u64 {
        let data = gen_mucp(seed, 3, &[2]);
        let built = &build_mucp(&data, "a3");
        let instance = ProblemInstance::Mucp {
            name: "a3".into(),
            data: data.clone(),
        };
        let act = &prepare(&instance, Setting::Act).unwrap();
        let ineq = &prepare(&instance, Setting::Ineq).unwrap();
        let orbitope = &prepare(&instance, Setting::Orbitope).unwrap();
        for setting in [Setting::NoSym, Setting::Orbitope, Setting::Ineq, Setting::Act] {
            let survives: Box<dyn Fn(&[bool]) -> bool> = match setting {
                Setting::NoSym => Box::new(|_| true),
                Setting::Ineq => Box::new(|p| {
                    let mut fixed = vec![None; ineq.program.n_vars()];
                    for (pos, idx) in oracle::binary_positions(&ineq.program).iter().enumerate() {
                        fixed[*idx] = Some(Rat::from_integer((p[pos] as i64).into()));
                    }
                    complete_exact(&ineq.program, &fixed).is_some()
                }),
                Setting::Orbitope => {
                    Box::new(|p| dive_survives(&orbitope.program, &orbitope.plugins, cfg, p))
                }
                _ => Box::new(|p| dive_survives(&act.program, &act.plugins, cfg, p)),
            };
            for (label, action) in declared_column_actions(&instance) {
                check_orbits_survive(&label, &built.program, &action, &*survives);
                orbit_groups += 1;
            }
            if setting == Setting::Act {
                let record = SolverConfig {
                    record_activations: true,
                    ..SolverConfig::default()
                };
                let report = solve(&act.program, &act.plugins, &record);
                for (handler_name, activation) in &report.activations {
                    let handler = act
                        .plugins
                        .handlers
                        .iter()
                        .find(|h| h.name() == handler_name.as_str())
                        .expect("recorded handler");
                    let action = ColumnAction {
                        columns: handler.action_columns(activation, &act.program),
                    };
                    check_orbits_survive("mucp activation", &built.program, &action, &*survives);
                    orbit_groups += 1;
                }
            }
        }
    }

    // MKCS: single family (color matrix + pair activations)
    let graphs = [
        (Graph::path(3), 2usize),
        (Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(), 3),
        (Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap(), 2),
    ];
    for (graph, k) in graphs {
        let data = MkcsData { graph, k };
        let built = build_mkcs(&data, "a3");
        let instance = ProblemInstance::Mkcs {
            name: "a3".into(),
            data: MkcsData {
                graph: data.graph.clone(),
                k,
            },
        };
        for setting in [
            Setting::NoSym,
            Setting::Orbitope,
            Setting::ActConsec,
            Setting::ActAllPairs,
        ] {
            let prepared = prepare(&instance, setting).unwrap();
            let survives = |p: &[bool]| {
                setting == Setting::NoSym
                    || dive_survives(&prepared.program, &prepared.plugins, cfg, p)
            };
            for (label, action) in declared_column_actions(&instance) {
                check_orbits_survive(&label, &built.program, &action, &survives);
                orbit_groups += 1;
            }
            if matches!(setting, Setting::ActConsec | Setting::ActAllPairs) {
                let record = SolverConfig {
                    record_activations: true,
                    ..SolverConfig::default()
                };
                let report = solve(&prepared.program, &prepared.plugins, &record);
                for (handler_name, activation) in &report.activations {
                    let handler = prepared
                        .plugins
                        .handlers
                        .iter()
                        .find(|h| h.name() == handler_name.as_str())
                        .expect("recorded handler");
                    let action = ColumnAction {
                        columns: handler.action_columns(activation, &prepared.program),
                    };
                    check_orbits_survive("mkcs activation", &built.program, &action, &survives);
                    orbit_groups += 1;
                }
            }
        }
    }

    println!("acceptance 3 (representative survival, {orbit_groups} orbit groups): PASS");
}

// --- criterion 4 -----------------------------------------------------------

#[test]
fn acceptance_4_shi_safety() {
    // MKP: the auxiliaries are forced by the placement, so the augmented
    // optimum equals the best base-feasible placement satisfying the
    // derived inequalities
    let mut mkp_count = 0usize;
    let mkp_tasks: Vec<(u64, usize, ItemClass)> = (0..13u64)
        .flat_map(|seed| {
            [(seed, 3usize), (seed, 4)].into_iter().flat_map(move |(s, m)| {
                [
                    ItemClass::Uncorrelated,
                    ItemClass::WeaklyCorrelated,
                    ItemClass::StronglyCorrelated,
                    ItemClass::SubsetSum,
                ]
                .into_iter()
                .map(move |c| (s, m, c))
            })
        })
        .collect();
    for failures in par::map(mkp_tasks.clone(), |(seed, m, class)| {
        let data = gen_mkp(seed, m, 2, class, 2, ProfitMode::Equal);
        let built = build_mkp(&data, "a4");
        let feasible = oracle::enumerate_feasible(&built.program).unwrap();
        let base_opt = feasible.iter().map(|p| p.objective.clone()).max();
        let shi_opt = feasible
            .iter()
            .filter(|p| {
                let grid: Vec<Vec<bool>> = (0..m)
                    .map(|i| (0..2).map(|j| p.pattern[i * 2 + j]).collect())
                    .collect();
                mkp_shis_hold(&data, &grid)
            })
            .map(|p| p.objective.clone())
            .max();
        (base_opt != shi_opt) as usize
    }) {
        assert_eq!(failures, 0);
        mkp_count += 1;
    }
    assert!(mkp_count >= 100);

    // cross-validate the linearization itself: full enumeration of the
    // augmented program with the auxiliary variables and constraints
    for seed in 0..8u64 {
        let data = gen_mkp(seed, 3, 2, ItemClass::SubsetSum, 2, ProfitMode::Equal);
        let built = build_mkp(&data, "a4x");
        let base_opt = oracle::optimum(&built.program).unwrap();
        let mut augmented = built.program.clone();
        add_mkp_shis(&mut augmented, &data, &built.y);
        assert_eq!(oracle::optimum(&augmented).unwrap(), base_opt, "seed {seed}");
    }

    // MUCP: both the plain and the strengthened family preserve the optimum
    let mucp_tasks: Vec<(u64, usize)> = (0..60u64)
        .map(|s| (s, 2usize))
        .chain((0..40u64).map(|s| (s, 3)))
        .collect();
    let mucp_count = mucp_tasks.len();
    for failures in par::map(mucp_tasks, |(seed, periods)| {
        let data = gen_mucp(seed, periods, &[2]);
        let built = build_mucp(&data, "a4");
        let base_opt = oracle::optimum(&built.program).unwrap();
        let mut bad = 0;
        for strengthened in [false, true] {
            let mut augmented = built.program.clone();
            add_mucp_shis(&mut augmented, &data, &built.x, &built.u, strengthened);
            if oracle::optimum(&augmented).unwrap() != base_opt {
                eprintln!("mucp shi mismatch: seed {seed} T {periods} strengthened {strengthened}");
                bad += 1;
            }
        }
        bad
    }) {
        assert_eq!(failures, 0);
    }
    assert!(mucp_count >= 100);

    // golden instantiation of the strengthened start-up inequality:
    // min-down 2, anchor period 3 (1-based) gives
    // u[3][j'] <= x[1][j] + x[3][j] + u[2][j]
    let data = gen_mucp(0, 3, &[2]);
    let data = actsym::subsym::MucpData {
        units: data
            .units
            .iter()
            .map(|u| actsym::subsym::UnitProps {
                min_down: 2,
                ..u.clone()
            })
            .collect(),
        ..data
    };
    let mut built = build_mucp(&data, "a4g");
    let shis = add_mucp_shis(&mut built.program, &data, &built.x, &built.u, true);
    let golden = shis
        .iter()
        .find(|s| s.startup && s.period == 2)
        .expect("window fits the horizon");
    let row = &built.program.constraints[golden.constraint];
    let vars: BTreeSet<_> = row.terms.iter().map(|t| t.var).collect();
    let expect: BTreeSet<_> = [built.u[2][1], built.x[0][0], built.x[2][0], built.u[1][0]]
        .into_iter()
        .collect();
    assert_eq!(vars, expect);

    println!(
        "acceptance 4 (SHI safety, {mkp_count} MKP + {mucp_count} MUCP instances): PASS"
    );
}

// --- criterion 5 -----------------------------------------------------------

#[test]
fn acceptance_5_handler_soundness() {
    let assert_cfg = |setting: Setting| SolverConfig {
        setting: setting.to_string(),
        check_handlers: true,
        ..SolverConfig::default()
    };
    let mut nodes = 0u64;

    let mkp_nodes: u64 = par::map((0..20u64).collect(), |seed| {
        let instance = ProblemInstance::Mkp {
            name: format!("a5-{seed}"),
            data: gen_mkp(seed, 6, 2, ItemClass::SubsetSum, 2, ProfitMode::Equal),
        };
        let prepared = prepare(&instance, Setting::Act).unwrap();
        solve(&prepared.program, &prepared.plugins, &assert_cfg(Setting::Act)).nodes
    })
    .into_iter()
    .sum();
    nodes += mkp_nodes;

    let mucp_nodes: u64 = par::map((0..10u64).collect(), |seed| {
        let instance = ProblemInstance::Mucp {
            name: format!("a5-{seed}"),
            data: gen_mucp(seed, 2, &[2]),
        };
        let prepared = prepare(&instance, Setting::Act).unwrap();
        solve(&prepared.program, &prepared.plugins, &assert_cfg(Setting::Act)).nodes
    })
    .into_iter()
    .sum();
    nodes += mucp_nodes;

    let graphs = [
        (Graph::path(5), 2usize),
        (Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap(), 2),
        (Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)]).unwrap(), 2),
    ];
    for (graph, k) in graphs {
        for setting in [Setting::ActConsec, Setting::ActAllPairs] {
            let instance = ProblemInstance::Mkcs {
                name: "a5".into(),
                data: MkcsData {
                    graph: graph.clone(),
                    k,
                },
            };
            let prepared = prepare(&instance, setting).unwrap();
            nodes += solve(&prepared.program, &prepared.plugins, &assert_cfg(setting)).nodes;
        }
    }

    assert!(
        nodes >= 1000,
        "need at least 1000 assertion-checked nodes, saw {nodes}"
    );
    println!("acceptance 5 (handler soundness over {nodes} nodes): PASS");
}

// --- criterion 6 -----------------------------------------------------------

#[test]
fn acceptance_6_symmetry_benefit_at_scale() {
    // Node counts replace wall time; no-sym is censored at the node cap,
    // which only understates its median, keeping every asserted inequality
    // conservative.
    const CAP: u64 = 50_000;
    let settings = [Setting::NoSym, Setting::Orbitope, Setting::Act];
    let counts: Vec<[u64; 3]> = par::map((0..50u64).collect(), |seed| {
        let instance = ProblemInstance::Mkp {
            name: format!("a6-{seed}"),
            data: gen_mkp(seed, 20, 4, ItemClass::Uncorrelated, 2, ProfitMode::Equal),
        };
        let mut row = [0u64; 3];
        for (i, &setting) in settings.iter().enumerate() {
            let prepared = prepare(&instance, setting).unwrap();
            let cfg = SolverConfig {
                setting: setting.to_string(),
                node_limit: Some(CAP),
                ..SolverConfig::default()
            };
            let report = solve(&prepared.program, &prepared.plugins, &cfg);
            if setting != Setting::NoSym {
                assert_eq!(
                    report.status,
                    SolveStatus::Optimal,
                    "seed {seed}: {setting} must finish within the cap"
                );
            }
            row[i] = report.nodes;
        }
        row
    });
    let median = |i: usize| -> u64 {
        let mut v: Vec<u64> = counts.iter().map(|r| r[i]).collect();
        v.sort_unstable();
        v[v.len() / 2]
    };
    let (no_sym, orbitope, act) = (median(0), median(1), median(2));
    println!("medians over 50 instances: no-sym {no_sym} orbitope {orbitope} act {act}");
    assert!(orbitope < CAP && act < CAP, "symmetric settings must not be censored");
    assert!(act <= orbitope, "act median {act} vs orbitope median {orbitope}");
    assert!(orbitope <= no_sym, "orbitope median {orbitope} vs no-sym median {no_sym}");
    assert!(
        2 * act <= no_sym,
        "act median {act} must be at most half of no-sym median {no_sym}"
    );
    println!("acceptance 6 (symmetry benefit, m=20 n=4 f=1/2): PASS");
}

// --- criterion 7 -----------------------------------------------------------

#[test]
fn acceptance_7_protocol_fidelity() {
    // shifted geometric mean: single element, all-zero, and [1,3]
    assert!((shifted_geomean(&[7.25], 1.0) - 7.25).abs() < 1e-9);
    assert!(shifted_geomean(&[0.0, 0.0], 1.0).abs() < 1e-9);
    let two_sqrt_two = 2.0 * 2.0f64.sqrt();
    assert!((shifted_geomean(&[1.0, 3.0], 1.0) - (two_sqrt_two - 1.0)).abs() < 1e-9);

    let row = |instance: &str, setting: &str, status: &str, time_s: f64| ReportRow {
        instance: instance.into(),
        setting: setting.into(),
        status: status.into(),
        objective: None,
        nodes: 1,
        time_s,
        seed: 0,
    };
    let rows = vec![
        row("i1", "no-sym", "optimal", 2.0),
        row("i1", "act", "optimal", 1.0),
        row("i2", "no-sym", "time_limit", 100.0),
        row("i2", "act", "optimal", 50.0),
        row("i3", "no-sym", "time_limit", 100.0),
        row("i3", "act", "time_limit", 100.0),
        row("i4", "no-sym", "optimal", 5.0),
        row("i4", "act", "optimal", 20.0),
    ];
    // survive a CSV round trip first
    let rows = read_csv(&write_csv(&rows)).unwrap();
    let summary = summarize(&rows, &[10.0]);

    // i3 is excluded (all settings at the limit); i1 lands in [0,10);
    // i2 lands in [10,inf); i4 straddles and counts only under "all"
    assert_eq!(summary.excluded_all_timeout, 1);
    assert_eq!(summary.settings, vec!["no-sym", "act"]);
    assert_eq!(summary.rows.len(), 3);

    let all = &summary.rows[0];
    assert_eq!((all.label.as_str(), all.count), ("all", 3));
    assert_eq!(all.cells[0].solved, 2); // no-sym: i1, i4
    assert_eq!(all.cells[1].solved, 3); // act: i1, i2, i4
    let expect_nosym = ((3.0f64.ln() + 101.0f64.ln() + 6.0f64.ln()) / 3.0).exp() - 1.0;
    assert!((all.cells[0].mean_time - expect_nosym).abs() < 1e-9);
    let expect_act = ((2.0f64.ln() + 51.0f64.ln() + 21.0f64.ln()) / 3.0).exp() - 1.0;
    assert!((all.cells[1].mean_time - expect_act).abs() < 1e-9);

    let fast = &summary.rows[1];
    assert_eq!((fast.label.as_str(), fast.count), ("[0,10)", 1));
    assert!((fast.cells[0].mean_time - 2.0).abs() < 1e-9);
    assert_eq!(fast.cells[1].solved, 1);

    let slow = &summary.rows[2];
    assert_eq!((slow.label.as_str(), slow.count), ("[10,inf)", 1));
    assert_eq!(slow.cells[0].solved, 0);
    assert!((slow.cells[1].mean_time - 50.0).abs() < 1e-9);

    // class counts plus stragglers account for every included instance
    let class_total: usize = summary.rows[1..].iter().map(|r| r.count).sum();
    assert_eq!(class_total + 1, all.count); // i4 is the straggler

    println!("acceptance 7 (protocol fidelity): PASS");
}

// --- criterion 8 -----------------------------------------------------------

/// Independent brute force: assignments of `{uncolored, 1..k}` per vertex.
fn brute_force_mkcs(graph: &Graph, k: usize) -> i64 {
    let n = graph.n_vertices();
    let edges = graph.edges();
    let mut best = 0i64;
    let mut assign = vec![0usize; n]; // 0 = uncolored
    loop {
        let proper = edges
            .iter()
            .all(|&(a, b)| assign[a] == 0 || assign[a] != assign[b]);
        if proper {
            best = best.max(assign.iter().filter(|&&c| c != 0).count() as i64);
        }
        // odometer over (k+1)^n
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assign[pos] += 1;
            if assign[pos] <= k {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn acceptance_8_mkcs_sanity() {
    for k in [2usize, 3] {
        let expect = brute_force_mkcs(&Graph::petersen(), k);
        let instance = ProblemInstance::Mkcs {
            name: format!("petersen-k{k}"),
            data: MkcsData {
                graph: Graph::petersen(),
                k,
            },
        };
        for setting in [
            Setting::NoSym,
            Setting::Orbitope,
            Setting::ActConsec,
            Setting::ActAllPairs,
        ] {
            let got = solve_setting(&instance, setting);
            assert_eq!(
                got,
                Some(Rat::from_integer(expect.into())),
                "petersen k={k} {setting}"
            );
        }
    }

    // DIMACS round trip on a Color02-style golden header
    let golden = "c FILE: petersen.col\n\
                  c SOURCE: classic construction\n\
                  c DESCRIPTION: outer cycle, inner pentagram, spokes\n\
                  p edge 10 15\n\
                  e 1 2\ne 2 3\ne 3 4\ne 4 5\ne 1 5\n\
                  e 1 6\ne 2 7\ne 3 8\ne 4 9\ne 5 10\n\
                  e 6 8\ne 7 9\ne 8 10\ne 6 9\ne 7 10\n";
    let (graph, warnings) = parse_dimacs(golden).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(graph, Graph::petersen());
    let canonical = write_dimacs(&graph);
    let (again, _) = parse_dimacs(&canonical).unwrap();
    assert_eq!(graph, again);
    assert_eq!(canonical, write_dimacs(&again));

    println!("acceptance 8 (MKCS sanity on the Petersen graph): PASS");
}
