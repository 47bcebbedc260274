//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so that it survives output capture.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::{Duration, Instant};

use coxcent::geometry::{GroupElement, RootVector, System};
use coxcent::graph::{CoxeterGraph, GenSet, Instance, Order};
use coxcent::oracle::{brute_force_centralizer, DEFAULT_CAP};
use coxcent::presentation::Verdict;
use coxcent::report::{analyze, Analysis, Config};
use coxcent::symmetry::PresentedGroup;
use coxcent::tours::verify_tables;

use common::props;

const WORKED_LIMIT: Duration = Duration::from_secs(10);
const TABLES_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_LIMIT: Duration = Duration::from_secs(120);
/// Powers of `a′b′` checked to differ from the identity.
const DIHEDRAL_POWERS: u32 = 24;

fn record(n: u32, title: &str, failures: &[String], detail: &str) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance criterion {n} [{verdict}] {title}: {detail}");
    for f in failures {
        let _ = writeln!(out, "    {f}");
    }
    drop(out);
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

fn check(failures: &mut Vec<String>, cond: bool, msg: impl FnOnce() -> String) {
    if !cond {
        failures.push(msg());
    }
}

/// Vertex labels of the worked example, 1-based generator indices.
const LABELLED_VERTICES: [[u8; 3]; 10] = [
    [1, 3, 4],
    [1, 4, 5],
    [1, 5, 6],
    [2, 5, 6],
    [2, 4, 5],
    [2, 5, 4],
    [2, 6, 5],
    [1, 6, 5],
    [1, 5, 4],
    [1, 4, 3],
];

/// Our vertex index of labelled vertex `v_i`, 1-based.
fn vertex_of(a: &Analysis, i: usize) -> usize {
    let t: Vec<u8> = LABELLED_VERTICES[i - 1].iter().map(|&k| k - 1).collect();
    a.cg.vertex_index(&t).expect("labelled vertex exists")
}

/// Inverse of [`vertex_of`].
fn label_of(a: &Analysis, v: usize) -> usize {
    (1..=10).find(|&i| vertex_of(a, i) == v).expect("vertex is labelled")
}

#[test]
fn criterion_1_worked_example_complex() {
    let start = Instant::now();
    let a = common::worked_example(2);
    let elapsed = start.elapsed();
    let mut f = Vec::new();
    let g = a.system().graph();
    check(&mut f, a.cg.vertices().len() == 10, || format!("{} vertices", a.cg.vertices().len()));
    for (i, t) in LABELLED_VERTICES.iter().enumerate() {
        let t: Vec<u8> = t.iter().map(|&k| k - 1).collect();
        check(&mut f, a.cg.vertex_index(&t).is_some(), || format!("v{} missing", i + 1));
    }
    let loops: BTreeSet<(usize, String)> = a
        .cg
        .loop_edges()
        .map(|e| (label_of(&a, a.cg.edge(e).source), g.name(a.cg.edge(e).s).to_string()))
        .collect();
    let want_loops: BTreeSet<(usize, String)> =
        [(1, "s6"), (3, "s3"), (4, "s3"), (7, "s3"), (8, "s3"), (10, "s6")].iter().map(|&(v, s)| (v, s.to_string())).collect();
    check(&mut f, loops == want_loops, || format!("loops {loops:?}"));
    let nonloop = a.cg.nonloop_edges().count();
    check(&mut f, nonloop == 12, || format!("{nonloop} non-loop edges"));
    let cells: BTreeSet<BTreeSet<usize>> = a
        .tours
        .cells
        .iter()
        .map(|c| c.boundary.iter().map(|&st| label_of(&a, a.cg.step_source(st))).collect())
        .collect();
    let want_cells: BTreeSet<BTreeSet<usize>> = [[2, 3, 4, 5], [6, 7, 8, 9]].iter().map(|c| c.iter().copied().collect()).collect();
    check(&mut f, cells == want_cells, || format!("cells {cells:?}"));
    let mut tours: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for t in &a.tours.shuttles {
        let (x, y) = (label_of(&a, t.x), label_of(&a, t.y));
        tours.insert((x.min(y), x.max(y)), t.order);
    }
    let want_tours: BTreeMap<(usize, usize), u32> =
        [((1, 10), 1), ((1, 3), 1), ((8, 10), 1), ((4, 7), 1), ((3, 4), 2), ((7, 8), 2)].into_iter().collect();
    check(&mut f, a.tours.shuttles.len() == 6, || format!("{} tours", a.tours.shuttles.len()));
    check(&mut f, tours == want_tours, || format!("tours {tours:?}"));
    check(&mut f, elapsed < WORKED_LIMIT, || format!("took {elapsed:?}"));
    record(
        1,
        "worked example complex",
        &f,
        &format!("10 vertices, 6 loops, 12 edges, 2 cells, 6 tours in {:.2?}", elapsed),
    );
}

fn power(sys: &System, x: &GroupElement, k: i64) -> GroupElement {
    let base = if k < 0 { sys.inverse(x) } else { x.clone() };
    let mut acc = sys.identity();
    for _ in 0..k.unsigned_abs() {
        acc = sys.mul(&acc, &base);
    }
    acc
}

/// Checks that the recognized involutions generate an infinite dihedral group.
fn dihedral_failures(sys: &System, name: &str, pg: &PresentedGroup, f: &mut Vec<String>) {
    let Some([ap, bp]) = &pg.presentation.infinite_dihedral else {
        f.push(format!("{name}: not recognized as infinite dihedral"));
        return;
    };
    check(f, pg.presentation.generators.len() == 2, || format!("{name}: {} generators", pg.presentation.generators.len()));
    let a = pg.evaluate(sys, ap);
    let b = pg.evaluate(sys, bp);
    check(f, !a.is_identity() && sys.mul(&a, &a).is_identity(), || format!("{name}: a' is not an involution"));
    check(f, !b.is_identity() && sys.mul(&b, &b).is_identity(), || format!("{name}: b' is not an involution"));
    let ab = sys.mul(&a, &b);
    let mut p = sys.identity();
    for k in 1..=DIHEDRAL_POWERS {
        p = sys.mul(&p, &ab);
        check(f, !p.is_identity(), || format!("{name}: (a'b')^{k} = 1"));
    }
    for r in &pg.presentation.relators {
        check(f, pg.evaluate(sys, r).is_identity(), || format!("{name}: relator fails"));
    }
}

#[test]
fn criterion_2_worked_example_presentations() {
    let a = common::worked_example(2);
    let sys = a.system();
    let mut f = Vec::new();
    check(&mut f, a.pi1.rank_if_free == Some(1), || format!("pi1 rank {:?}", a.pi1.rank_if_free));
    check(&mut f, a.pi1.simplified.relators.is_empty(), || "pi1 keeps relators".into());
    dihedral_failures(sys, "B_I", &a.b, &mut f);
    dihedral_failures(sys, "Ytilde_I", &a.normalizer.presentation, &mut f);
    check(&mut f, a.half_turns.center == vec![sys.generator(0)], || "center is not <s1>".into());
    record(2, "worked example presentations", &f, "Y free of rank 1; B and Ytilde infinite dihedral; center <s1>");
}

/// `a = (e_2)_(v1)` with `e_2` running from `v5` to `v6`.
fn labelled_a(a: &Analysis) -> GroupElement {
    let sys = a.system();
    let g = a.pi1.simplified.surviving[0];
    let edge = a.cg.edge(a.pi1.generators[g]);
    let (v5, v6) = (vertex_of(a, 5), vertex_of(a, 6));
    if edge.source == v5 && edge.target == v6 {
        a.pi1.elements[g].clone()
    } else {
        assert!(edge.source == v6 && edge.target == v5, "surviving generator is not the v5-v6 edge");
        sys.inverse(&a.pi1.elements[g])
    }
}

fn loop_root_at(a: &Analysis, label: usize) -> RootVector {
    let v = vertex_of(a, label);
    let li = a.window.loops.iter().position(|&e| a.cg.edge(e).source == v).expect("loop at vertex");
    a.window.loop_roots[li].clone()
}

#[test]
fn criterion_3_worked_example_window() {
    let a = common::worked_example(2);
    let sys = a.system();
    let win = &a.window;
    let mut f = Vec::new();
    let av = labelled_a(&a);
    let (xi1, xi4) = (loop_root_at(&a, 1), loop_root_at(&a, 4));
    let r1 = |k: i64| sys.positive_part(&sys.apply(&power(sys, &av, k), &xi1));
    let r4 = |k: i64| sys.positive_part(&sys.apply(&power(sys, &av, k), &xi4));
    let ks: Vec<i64> = (-2..=2).collect();
    let mut named: Vec<((u8, i64), usize)> = Vec::new();
    for &k in &ks {
        for (fam, root) in [(1u8, r1(k)), (4u8, r4(k))] {
            match win.class_of_root(&root) {
                Some(c) => named.push(((fam, k), c)),
                None => f.push(format!("r_{{{fam},{k}}} not in the window")),
            }
        }
    }
    let distinct: BTreeSet<usize> = named.iter().map(|&(_, c)| c).collect();
    check(&mut f, distinct.len() == 10, || format!("{} distinct classes among 10 names", distinct.len()));
    let mut commuting = 0;
    for (i, &((fa, ka), ca)) in named.iter().enumerate() {
        for &((fb, kb), cb) in &named[i + 1..] {
            let (k1, k4) = match (fa, fb) {
                (1, 4) => (ka, kb),
                (4, 1) => (kb, ka),
                _ => (0, i64::MAX),
            };
            let want = if k4 == k1 || k4 == k1 + 1 { Order::Finite(2) } else { Order::Infinite };
            let got = win.order(ca, cb);
            if want == Order::Finite(2) {
                commuting += 1;
            }
            check(&mut f, got == want, || format!("m(r_{{{fa},{ka}}}, r_{{{fb},{kb}}}) = {got}, want {want}"));
        }
    }
    // Action table by matrix conjugation, for (a′, b′) and for the normalizer pair (ã, c̃).
    let g = &a.half_turns.tilde[a.half_turns.basis[0]].g;
    let h = &a.normalizer.symmetries[a.normalizer.generators[0]].h;
    let mut conjugations = 0;
    for (side, b) in [("B", g), ("N", h)] {
        let ap = sys.mul(b, &av);
        let api = sys.inverse(&ap);
        let bi = sys.inverse(b);
        for &k in &ks {
            let table: [(&str, &GroupElement, &GroupElement, RootVector, RootVector); 4] = [
                ("a' r1", &ap, &api, r1(k), r1(-k - 1)),
                ("a' r4", &ap, &api, r4(k), r4(-k)),
                ("b' r1", b, &bi, r1(k), r1(-k)),
                ("b' r4", b, &bi, r4(k), r4(1 - k)),
            ];
            for (label, x, xi, src, dst) in table {
                let lhs = sys.mul(&sys.mul(x, &sys.reflection(&src)), xi);
                check(&mut f, lhs == sys.reflection(&dst), || format!("{side}: {label} at k = {k}"));
                conjugations += 1;
            }
        }
    }
    check(&mut f, a.actions.iter().all(|x| x.verified == win.pairs.len()), || "action formula unverified".into());
    record(
        3,
        "worked example window",
        &f,
        &format!("10 named classes distinct, {commuting} commuting pairs, {conjugations} conjugations checked"),
    );
}

#[test]
fn criterion_4_tables() {
    let start = Instant::now();
    let rows = verify_tables();
    let elapsed = start.elapsed();
    let mut f: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| format!("{} at {}: {:?}", r.row, r.instance, r.error)).collect();
    check(&mut f, !rows.is_empty(), || "no rows".into());
    check(&mut f, elapsed < TABLES_LIMIT, || format!("took {elapsed:?}"));
    record(4, "tour order tables", &f, &format!("{} instantiated rows agree in {:.2?}", rows.len(), elapsed));
}

#[test]
fn criterion_5_finite_oracle() {
    let start = Instant::now();
    let mut f = Vec::new();
    let instances = common::finite_instances();
    for (_, inst) in &instances {
        let a = match analyze(inst, &Config { bound: 1, ..Config::default() }) {
            Ok(a) => a,
            Err(e) => {
                f.push(format!("{}: {e}", inst.name));
                continue;
            }
        };
        let o = match brute_force_centralizer(a.system(), &inst.subset, DEFAULT_CAP) {
            Ok(o) => o,
            Err(e) => {
                f.push(format!("{}: oracle {e}", inst.name));
                continue;
            }
        };
        check(&mut f, a.y_trivial(), || format!("{}: Y_I not trivial", inst.name));
        let Some(wp) = a.wperp_order() else {
            f.push(format!("{}: W^perp order not certified", inst.name));
            continue;
        };
        let z = a.half_turns.center_order();
        let ag = a.half_turns.a_group.len() as u64;
        let an = a.normalizer.order() as u64;
        let wi = a.parabolic_order().unwrap_or(0) as u64;
        check(&mut f, z * wp * ag == o.centralizer_order, || {
            format!("{}: centralizer {} vs {z}*{wp}*{ag}", inst.name, o.centralizer_order)
        });
        check(&mut f, wi * wp * an == o.normalizer_order, || {
            format!("{}: normalizer {} vs {wi}*{wp}*{an}", inst.name, o.normalizer_order)
        });
        check(&mut f, o.normalizer_order % o.centralizer_order == 0 && o.group_order % o.normalizer_order == 0, || {
            format!("{}: orders do not divide", inst.name)
        });
    }
    let elapsed = start.elapsed();
    check(&mut f, elapsed < ORACLE_LIMIT, || format!("took {elapsed:?}"));
    record(
        5,
        "finite oracle equivalence",
        &f,
        &format!("{} instances, centralizer and normalizer orders agree in {:.2?}", instances.len(), elapsed),
    );
}

#[test]
fn criterion_6_property_suites() {
    let suites: [(&str, fn() -> Result<(), String>); 6] = [
        ("length of products", props::length_of_multiple_equivalences),
        ("form preservation", props::form_is_preserved),
        ("loop dichotomy", props::loop_dichotomy_on_every_edge),
        ("loop count", props::loop_count_matches_lp),
        ("tour path identities", props::tour_path_identities),
        ("relators", props::relators_evaluate_to_identity),
    ];
    let mut f = Vec::new();
    for (name, run) in suites {
        if let Err(e) = run() {
            f.push(format!("{name}: {e}"));
        }
    }
    record(6, "property suites", &f, &format!("6 suites x {} cases", props::CASES));
}

fn graph(n: usize, bonds: &[(usize, usize, u32)]) -> CoxeterGraph {
    let edges: Vec<_> = bonds.iter().map(|&(a, b, m)| (a, b, if m == 0 { Order::Infinite } else { Order::Finite(m) })).collect();
    CoxeterGraph::from_bonds(n, &edges)
}

/// Infinite instances with every subset; `0` marks an infinite bond.
fn infinite_instances() -> Vec<Instance> {
    let graphs = [
        ("affine A2 x A1", graph(4, &[(0, 1, 3), (1, 2, 3), (0, 2, 3)])),
        ("affine A2 x B2", graph(5, &[(0, 1, 3), (1, 2, 3), (0, 2, 3), (3, 4, 4)])),
        ("affine A2 x A1 x A1", graph(5, &[(0, 1, 3), (1, 2, 3), (0, 2, 3)])),
        ("affine C2 x A1", graph(4, &[(0, 1, 4), (1, 2, 4)])),
        ("affine G2 x A1", graph(4, &[(0, 1, 3), (1, 2, 6)])),
        ("affine B3", graph(4, &[(0, 2, 3), (1, 2, 3), (2, 3, 4)])),
        ("affine A3", graph(4, &[(0, 1, 3), (1, 2, 3), (2, 3, 3), (0, 3, 3)])),
        ("hyperbolic", graph(4, &[(0, 1, 4), (1, 2, 3), (2, 3, 5)])),
        ("B4 + infinite bond", graph(5, &[(0, 1, 4), (1, 2, 3), (2, 3, 3), (3, 4, 0)])),
    ];
    let mut out = Vec::new();
    for (name, g) in graphs {
        for mask in 1..(1u64 << g.rank()) {
            out.push(Instance { name: format!("{name} I={:?}", GenSet(mask).to_vec()), graph: g.clone(), subset: GenSet(mask).to_vec() });
        }
    }
    out
}

#[test]
fn criterion_7_y_fixes_finite_part() {
    let mut f = Vec::new();
    let mut instances: Vec<Instance> = common::finite_instances().into_iter().map(|(_, i)| i).collect();
    instances.extend(infinite_instances());
    instances.push(coxcent::graph::parse_instance(common::WORKED_EXAMPLE).unwrap());
    let (mut applicable, mut roots, mut nontrivial) = (0, 0, 0);
    for inst in &instances {
        let a = match analyze(inst, &Config { bound: 2, ..Config::default() }) {
            Ok(a) => a,
            Err(e) => {
                f.push(format!("{}: {e}", inst.name));
                continue;
            }
        };
        let certified = a.finite.components.iter().any(|c| matches!(c.verdict, Verdict::Finite { .. }));
        if !(a.y_fix.applicable && certified) {
            continue;
        }
        applicable += 1;
        roots += a.y_fix.checked;
        if a.pi1.elements.iter().any(|e| !e.is_identity()) {
            nontrivial += 1;
        }
        for v in &a.y_fix.violations {
            f.push(format!("{}: {v}", inst.name));
        }
    }
    check(&mut f, nontrivial > 0, || "no instance with nontrivial Y_I was checked".into());
    record(
        7,
        "Y_I fixes the certified finite part",
        &f,
        &format!("{applicable} applicable instances ({nontrivial} with nontrivial Y_I), {roots} root checks, 0 violations"),
    );
}
