//! End-to-end analysis of an instance and its serializable report.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoxError, Result};
use crate::geometry::System;
use crate::graph::{Instance, Order};
use crate::groupoid::{CGraph, Groupoid};
use crate::presentation::{
    check_y_fixes_finite, finite_part, format_word, FinitePartReport, IGraph, Pi1Presentation, ShiftFamilies,
    SpanningTree, TreePreference, Verdict, Window, WindowChecks, YFixCheck,
};
use crate::symmetry::{
    actions, b_presentation, perm_name, ClassAction, GroupPresentation, HalfTurns, LambdaComponent, Normalizer,
    PresentedGroup,
};
use crate::tours::{self, Tours};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BOUND: usize = 3;
pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Path length up to which the map from `ℐ` into `W` is checked for injectivity.
const INJECTIVITY_LENGTH: usize = 4;

#[derive(Clone, Debug)]
pub struct Config {
    pub bound: usize,
    pub budget: usize,
    pub tree_preference: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config { bound: DEFAULT_BOUND, budget: DEFAULT_BUDGET, tree_preference: None }
    }
}

/// Every intermediate object of the pipeline.
pub struct Analysis {
    pub instance: Instance,
    pub cg: CGraph,
    pub tours: Tours,
    pub tree: SpanningTree,
    pub pi1: Pi1Presentation,
    pub igraph: IGraph,
    pub window: Window,
    pub finite: FinitePartReport,
    pub y_fix: YFixCheck,
    pub half_turns: HalfTurns,
    pub b: PresentedGroup,
    pub normalizer: Normalizer,
    pub actions: Vec<ClassAction>,
}

pub fn analyze(instance: &Instance, config: &Config) -> Result<Analysis> {
    if config.budget == 0 {
        return Err(CoxError::Input("vertex budget must be positive".into()));
    }
    let sys = Arc::new(System::new(instance.graph.clone())?);
    let cg = CGraph::build(Arc::new(Groupoid::new(sys)), &instance.subset, config.budget)?;
    cg.check_edges()?;
    let tours = tours::enumerate(&cg)?;
    tours::check_all_gbm(&cg, &tours)?;
    let pref = match &config.tree_preference {
        Some(text) => TreePreference::parse(cg.system().graph(), text)?,
        None => TreePreference::default(),
    };
    let tree = SpanningTree::build(&cg, &pref)?;
    let pi1 = Pi1Presentation::build(&cg, &tree, &tours.cells)?;
    pi1.check(&cg, &tree)?;
    let igraph = IGraph::build(&cg, &tours)?;
    igraph.check_injectivity(&cg, INJECTIVITY_LENGTH)?;
    let window = Window::build(&cg, &tree, &pi1, &tours, config.bound)?;
    let finite = finite_part(&cg, &pi1, &igraph, &tours.cells, &window)?;
    let y_fix = check_y_fixes_finite(&cg, &pi1, &window, &finite);
    if let Some(v) = y_fix.violations.first() {
        return Err(CoxError::Invariant(format!("Y_I moves a certified finite root: {v}")));
    }
    let half_turns = HalfTurns::build(&cg, &tree)?;
    let b = b_presentation(&cg, &tree, &pi1, &half_turns)?;
    let normalizer = Normalizer::build(&cg, &tree, &pi1)?;
    let actions = actions(&cg, &tree, &pi1, &window, &half_turns, &normalizer)?;
    Ok(Analysis {
        instance: instance.clone(),
        cg,
        tours,
        tree,
        pi1,
        igraph,
        window,
        finite,
        y_fix,
        half_turns,
        b,
        normalizer,
        actions,
    })
}

impl Analysis {
    pub fn system(&self) -> &Arc<System> {
        self.cg.system()
    }

    /// True when every `π₁` generator is the identity matrix.
    pub fn y_trivial(&self) -> bool {
        self.pi1.elements.iter().all(|e| e.is_identity())
    }

    /// `|W^⊥I|` when the window is exhaustive (`Y_I` trivial) and every component is certified finite.
    pub fn wperp_order(&self) -> Option<u64> {
        if !self.y_trivial() {
            return None;
        }
        self.finite.components.iter().try_fold(1u64, |acc, c| match &c.verdict {
            Verdict::Finite { order, .. } => acc.checked_mul(*order),
            _ => None,
        })
    }

    pub fn parabolic_order(&self) -> Option<u128> {
        crate::finite_type::parabolic_order(self.system().graph(), self.instance.subset_set())
    }

    /// Name of window class `c` as `r(word, ξ)` from its first pair.
    pub fn class_name(&self, c: usize) -> String {
        let pair = self.window.pairs.iter().find(|p| p.class == c).expect("class has a pair");
        let word = format_word(&self.window.words[pair.word], &self.pi1.names());
        format!("r({}, {})", if word.is_empty() { "1".into() } else { word }, self.loop_name(pair.loop_edge))
    }

    fn loop_name(&self, e: usize) -> String {
        let g = self.system().graph();
        let ed = self.cg.edge(e);
        format!("{}@{}", g.name(ed.s), ed.source)
    }

    pub fn report(&self) -> Report {
        let sys = self.system();
        let g = sys.graph();
        let cg = &self.cg;
        let names = self.pi1.names();
        let vertices = cg.vertices().iter().map(|v| g.format_tuple(v)).collect();
        let mut edges = Vec::new();
        let mut loops = Vec::new();
        for (i, e) in cg.edges().iter().enumerate() {
            if e.is_loop() {
                let root = e.forward.loop_root.as_ref().map(|r| sys.format_vector(r)).unwrap_or_default();
                loops.push(LoopReport { edge: i, vertex: e.source, generator: g.name(e.s).into(), root });
            } else {
                edges.push(EdgeReport {
                    edge: i,
                    source: e.source,
                    generator: g.name(e.s).into(),
                    target: e.target,
                    target_generator: g.name(e.t).into(),
                    length: e.forward.length,
                    in_tree: self.tree.in_tree[i],
                });
            }
        }
        let cells = self
            .tours
            .cells
            .iter()
            .map(|c| {
                let mut vs: Vec<usize> = c.boundary.iter().map(|&st| cg.step_source(st)).collect();
                vs.sort_unstable();
                vs.dedup();
                vs
            })
            .collect();
        let tours = self
            .tours
            .shuttles
            .iter()
            .map(|t| TourReport {
                x: t.x,
                beta: t.beta.edge,
                y: t.y,
                gamma: t.gamma.edge,
                order: t.order,
                path_length: t.q.len(),
            })
            .collect();
        let s = &self.pi1.simplified;
        let y_presentation = YReport {
            generators: names.clone(),
            generator_edges: self.pi1.generators.clone(),
            relators: self.pi1.relators.iter().map(|r| format_word(r, &names)).collect(),
            surviving: s.surviving.iter().map(|&i| names[i].clone()).collect(),
            simplified_relators: s.relators.iter().map(|r| format_word(r, &names)).collect(),
            free_rank: self.pi1.rank_if_free,
        };
        let i_graph = IGraphReport {
            vertices: self.igraph.vertices.clone(),
            edges: self.igraph.edges.iter().map(|e| (e.from, e.to, e.tour)).collect(),
            component_ranks: self.igraph.component_ranks.clone(),
        };
        let win = &self.window;
        let wperp_window = WindowReport {
            bound: win.bound,
            words: win.words.iter().map(|w| format_word(w, &names)).collect(),
            classes: (0..win.classes.len())
                .map(|c| ClassReport { name: self.class_name(c), root: sys.format_vector(&win.classes[c]) })
                .collect(),
            orders: win.orders.iter().map(|(&(i, j), &m)| (i, j, m)).collect(),
            checks: win.checks.clone(),
            families: win.families.clone(),
        };
        let ht = &self.half_turns;
        let one_based = |a: &[usize]| a.iter().map(|p| p + 1).collect::<Vec<_>>();
        let zwi_decomposition = ZReport {
            lambda_components: ht.components.clone(),
            center: ht
                .center
                .iter()
                .map(|w| sys.reduced_word(w).iter().map(|&s| g.name(s)).collect::<Vec<_>>().join(" "))
                .collect(),
            a_tilde: ht.tilde.iter().map(|h| one_based(&h.a)).collect(),
            a_group: ht.a_group.iter().map(|&i| one_based(&ht.tilde[i].a)).collect(),
            a_prime: ht.a_prime.iter().map(|&i| one_based(&ht.tilde[i].a)).collect(),
            a_basis: ht.basis.iter().map(|&i| one_based(&ht.tilde[i].a)).collect(),
            half_turn_vertices: ht.tilde.iter().map(|h| h.vertex).collect(),
            b_presentation: self.b.presentation.clone(),
            splits: ht.splits,
        };
        let nz = &self.normalizer;
        let normalizer = NReport {
            a_n: nz.symmetries.iter().map(|s| one_based(&s.rho)).collect(),
            vertices: nz.symmetries.iter().map(|s| s.vertex).collect(),
            generators: nz.generators.iter().map(|&i| perm_name(&nz.symmetries[i].rho)).collect(),
            perm_relators: nz.perm_relators.clone(),
            presentation: nz.presentation.presentation.clone(),
            splits: nz.splits,
        };
        Report {
            schema_version: SCHEMA_VERSION,
            instance: self.instance.name.clone(),
            generators: g.names().to_vec(),
            subset: self.instance.subset.iter().map(|&s| g.name(s).to_string()).collect(),
            field_n: sys.field().n(),
            cgraph: CGraphReport { vertices, edges, loops, cells },
            tours,
            warnings: self.tours.warnings.clone(),
            y_presentation,
            i_graph,
            wperp_window,
            finite_part: self.finite.clone(),
            y_fix: self.y_fix.clone(),
            zwi_decomposition,
            normalizer,
            actions: self.actions.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub instance: String,
    pub generators: Vec<String>,
    pub subset: Vec<String>,
    /// `N` with the field `ℚ(2cos(π/N))`.
    pub field_n: u64,
    pub cgraph: CGraphReport,
    pub tours: Vec<TourReport>,
    pub warnings: Vec<String>,
    pub y_presentation: YReport,
    pub i_graph: IGraphReport,
    pub wperp_window: WindowReport,
    pub finite_part: FinitePartReport,
    pub y_fix: YFixCheck,
    pub zwi_decomposition: ZReport,
    pub normalizer: NReport,
    pub actions: Vec<ClassAction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CGraphReport {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeReport>,
    pub loops: Vec<LoopReport>,
    /// Vertex sets of the 2-cells.
    pub cells: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub edge: usize,
    pub source: usize,
    pub generator: String,
    pub target: usize,
    pub target_generator: String,
    pub length: usize,
    pub in_tree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopReport {
    pub edge: usize,
    pub vertex: usize,
    pub generator: String,
    pub root: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TourReport {
    pub x: usize,
    pub beta: usize,
    pub y: usize,
    pub gamma: usize,
    pub order: u32,
    pub path_length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YReport {
    pub generators: Vec<String>,
    pub generator_edges: Vec<usize>,
    pub relators: Vec<String>,
    pub surviving: Vec<String>,
    pub simplified_relators: Vec<String>,
    pub free_rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IGraphReport {
    /// Loop edge ids.
    pub vertices: Vec<usize>,
    /// `(from, to, tour)` over vertex positions.
    pub edges: Vec<(usize, usize, usize)>,
    pub component_ranks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub root: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowReport {
    pub bound: usize,
    pub words: Vec<String>,
    pub classes: Vec<ClassReport>,
    pub orders: Vec<(usize, usize, Order)>,
    pub checks: WindowChecks,
    pub families: Option<ShiftFamilies>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZReport {
    pub lambda_components: Vec<LambdaComponent>,
    /// Reduced words of `w_0(J)` over the (−1)-type components.
    pub center: Vec<String>,
    /// Position sets, 1-based.
    pub a_tilde: Vec<Vec<usize>>,
    pub a_group: Vec<Vec<usize>>,
    pub a_prime: Vec<Vec<usize>>,
    pub a_basis: Vec<Vec<usize>>,
    pub half_turn_vertices: Vec<usize>,
    pub b_presentation: GroupPresentation,
    /// `None` means unknown.
    pub splits: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NReport {
    /// Images of positions, 1-based.
    pub a_n: Vec<Vec<usize>>,
    pub vertices: Vec<usize>,
    pub generators: Vec<String>,
    pub perm_relators: Vec<Vec<usize>>,
    pub presentation: GroupPresentation,
    pub splits: Option<bool>,
}

fn splits_text(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "yes",
        Some(false) => "no",
        None => "unknown",
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Finite { type_name, order } => format!("finite {type_name} (order {order})"),
        Verdict::Infinite { witness } => format!("infinite ({})", serde_json::to_string(witness).unwrap_or_default()),
        Verdict::Unknown { bound } => format!("unknown at bound {bound}"),
    }
}

fn presentation_text(out: &mut String, p: &GroupPresentation) {
    let _ = writeln!(out, "  generators: {}", p.generators.join(", "));
    for (r, k) in p.format_relators().iter().zip(&p.relator_kinds) {
        let _ = writeln!(out, "  [{k}] {r}");
    }
    if let Some([a, b]) = &p.infinite_dihedral {
        let _ = writeln!(
            out,
            "  infinite dihedral on a' = {}, b' = {}",
            format_word(a, &p.generators),
            format_word(b, &p.generators)
        );
    }
}

/// Human-readable summary of the centralizer side.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instance: {}", r.instance);
    let _ = writeln!(out, "I = {{{}}}, field N = {}", r.subset.join(", "), r.field_n);
    let _ = writeln!(
        out,
        "C: {} vertices, {} loops, {} non-loop edges, {} 2-cells, {} shuttling tours",
        r.cgraph.vertices.len(),
        r.cgraph.loops.len(),
        r.cgraph.edges.len(),
        r.cgraph.cells.len(),
        r.tours.len()
    );
    for (i, v) in r.cgraph.vertices.iter().enumerate() {
        let _ = writeln!(out, "  v{i} = {v}");
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let y = &r.y_presentation;
    let _ = writeln!(out, "Y_I: generators {}", y.surviving.join(", "));
    for rel in &y.simplified_relators {
        let _ = writeln!(out, "  {rel} = 1");
    }
    if let Some(k) = y.free_rank {
        let _ = writeln!(out, "  free of rank {k}");
    }
    let w = &r.wperp_window;
    let _ = writeln!(out, "W^perp window (L = {}): {} classes", w.bound, w.classes.len());
    for (i, c) in w.classes.iter().enumerate() {
        let _ = writeln!(out, "  [{i}] {} root {}", c.name, c.root);
    }
    let finite: Vec<String> = w
        .orders
        .iter()
        .filter(|(_, _, m)| m.is_finite())
        .map(|(i, j, m)| format!("m({i},{j}) = {m}"))
        .collect();
    let _ = writeln!(out, "  finite orders: {}", if finite.is_empty() { "none".into() } else { finite.join(", ") });
    for c in &r.finite_part.components {
        let _ = writeln!(out, "  component {:?}: {}", c.classes, verdict_text(&c.verdict));
    }
    let z = &r.zwi_decomposition;
    let _ = writeln!(out, "Z(W_I) generators: {}", if z.center.is_empty() { "none".into() } else { z.center.join("; ") });
    let _ = writeln!(out, "A-group: {:?}, A': {:?}, basis {:?}", z.a_group, z.a_prime, z.a_basis);
    let _ = writeln!(out, "B_I presentation (splits: {}):", splits_text(z.splits));
    presentation_text(&mut out, &z.b_presentation);
    for a in &r.actions {
        let images: Vec<String> = a
            .images
            .iter()
            .enumerate()
            .map(|(i, (_, _, c))| match c {
                Some(c) => format!("{i}->{c}"),
                None => format!("{i}->out"),
            })
            .collect();
        let _ = writeln!(out, "action {}: {}", a.actor, images.join(" "));
    }
    let _ = writeln!(
        out,
        "Y-fix check: {} ({} roots checked)",
        if r.y_fix.applicable { "applicable" } else { "not applicable" },
        r.y_fix.checked
    );
    out
}

/// Human-readable summary of the normalizer side.
pub fn render_normalizer_text(r: &Report) -> String {
    let mut out = String::new();
    let n = &r.normalizer;
    let _ = writeln!(out, "instance: {}", r.instance);
    let _ = writeln!(out, "A_N: {} permutations", n.a_n.len());
    for (p, v) in n.a_n.iter().zip(&n.vertices) {
        let _ = writeln!(out, "  {:?} at v{v}", p);
    }
    let _ = writeln!(out, "generators: {}", n.generators.join(", "));
    let _ = writeln!(out, "Ytilde_I presentation (splits: {}):", splits_text(n.splits));
    presentation_text(&mut out, &n.presentation);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_instance;

    const EXAMPLE: &str = include_str!("../instances/worked_example.toml");

    #[test]
    fn worked_example_report_round_trips() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let a = analyze(&inst, &Config { bound: 2, ..Config::default() }).unwrap();
        let r = a.report();
        assert_eq!(r.cgraph.vertices.len(), 10);
        assert_eq!(r.y_presentation.free_rank, Some(1));
        assert_eq!(r.zwi_decomposition.center, vec!["s1".to_string()]);
        let text = serde_json::to_string_pretty(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(render_text(&r).contains("free of rank 1"));
    }

    #[test]
    fn empty_subset_window_is_the_system() {
        let inst = parse_instance("name = \"t\"\ngenerators = [\"a\", \"b\"]\nsubset = []\nedges = [{ a = \"a\", b = \"b\", m = 4 }]\n").unwrap();
        let a = analyze(&inst, &Config { bound: 1, ..Config::default() }).unwrap();
        assert_eq!(a.window.classes.len(), 2);
        assert_eq!(a.wperp_order(), Some(8));
    }
}
