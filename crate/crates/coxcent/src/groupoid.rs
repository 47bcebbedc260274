//! The groupoid `C`: tuple vertices, the generators `w_x^s`, the graph `𝒞`,
//! standard expressions, loop counts and the splitting `C_I = W^⊥I ⋊ Y_I`.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, RwLock};

use crate::error::{ensure, CoxError, Result};
use crate::geometry::{GroupElement, RootVector, System};
use crate::graph::GenSet;

/// A duplicate-free tuple of generator indices.
pub type Tuple = Vec<u8>;

pub fn tuple_set(x: &[u8]) -> GenSet {
    GenSet::from_iter(x.iter().map(|&u| u as usize))
}

/// Data of `w_x^s` that depends only on `K = [x]_∼s` and `s`.
#[derive(Debug)]
pub struct GenData {
    pub k: GenSet,
    pub s: usize,
    /// `map[u]` is the image of `u ∈ K∖{s}`; identity elsewhere.
    pub map: Vec<usize>,
    /// The unique element of `K ∖ map(K∖{s})`.
    pub partner: usize,
    pub element: GroupElement,
    pub length: usize,
    pub loop_root: Option<RootVector>,
}

impl GenData {
    pub fn is_loop(&self) -> bool {
        self.loop_root.is_some()
    }
}

/// Result of applying a generator at a vertex.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub target: Tuple,
    pub partner: usize,
    pub data: Arc<GenData>,
}

type GenCache = HashMap<(GenSet, usize), Option<Arc<GenData>>>;

/// Generator expansion with a cache keyed by `(K, s)`.
pub struct Groupoid {
    sys: Arc<System>,
    cache: RwLock<GenCache>,
}

impl Groupoid {
    pub fn new(sys: Arc<System>) -> Self {
        Groupoid { sys, cache: RwLock::new(HashMap::new()) }
    }

    pub fn system(&self) -> &Arc<System> {
        &self.sys
    }

    /// `w_x^s`, or `None` when `[x]_∼s` is not of finite type.
    pub fn expand(&self, x: &[u8], s: usize) -> Result<Option<Expansion>> {
        let xs = tuple_set(x);
        ensure(!xs.contains(s), || "generator already in the vertex".into())?;
        let k = self.sys.graph().tilde_closure(xs, GenSet::singleton(s));
        let Some(data) = self.data(k, s)? else {
            return Ok(None);
        };
        let target: Tuple = x.iter().map(|&u| data.map[u as usize] as u8).collect();
        Ok(Some(Expansion { target, partner: data.partner, data }))
    }

    /// Cached generator data for `K` and `s ∈ K`; builds and cross-checks the
    /// partner entry `(K, t)` together with `(K, s)`.
    pub fn data(&self, k: GenSet, s: usize) -> Result<Option<Arc<GenData>>> {
        if let Some(d) = self.cache.read().expect("cache lock").get(&(k, s)) {
            return Ok(d.clone());
        }
        if !self.sys.is_finite(k) {
            self.cache.write().expect("cache lock").insert((k, s), None);
            return Ok(None);
        }
        let d = Arc::new(self.build(k, s)?);
        if d.partner == s && !d.is_loop() {
            self.check_partners(&d, &d)?;
        } else if d.partner != s {
            let e = Arc::new(self.build(k, d.partner)?);
            self.check_partners(&d, &e)?;
            let mut c = self.cache.write().expect("cache lock");
            c.insert((k, d.partner), Some(e));
        }
        self.cache.write().expect("cache lock").insert((k, s), Some(d.clone()));
        Ok(Some(d))
    }

    fn build(&self, k: GenSet, s: usize) -> Result<GenData> {
        let sys = &*self.sys;
        let g = sys.graph();
        let ks = k.without(s);
        let big = sys.longest(k)?;
        let small = sys.longest(ks)?;
        let element = sys.mul(&big.element, &small.element);
        let length = big.word.len() - small.word.len();
        let mut map: Vec<usize> = (0..sys.rank()).collect();
        for u in ks.iter() {
            map[u] = big.sigma[small.sigma[u]];
        }
        let image = GenSet::from_iter(ks.iter().map(|u| map[u]));
        let rest = k.difference(image);
        ensure(rest.len() == 1, || {
            format!("v[{}, {}] has no unique partner", g.name(s), g.format_set(k))
        })?;
        let partner = rest.min().expect("one element");
        for u in ks.iter() {
            ensure(element.column(u) == sys.simple_root(map[u]), || {
                format!(
                    "v[{}, {}] does not map a[{}] to a[{}]",
                    g.name(s),
                    g.format_set(k),
                    g.name(u),
                    g.name(map[u])
                )
            })?;
        }
        // Loop iff the orthogonal complement of Π_{K∖s} in Φ_K is nonempty, and
        // then it is a single pair ±γ with s_γ = w_x^s.
        let is_loop = ks.iter().all(|u| map[u] == u);
        let orth: Vec<RootVector> = sys
            .positive_roots(k)?
            .iter()
            .filter(|r| sys.orthogonal_to(r, ks))
            .cloned()
            .collect();
        let loop_root = if is_loop {
            ensure(orth.len() == 1, || {
                format!(
                    "loop v[{}, {}] has {} orthogonal positive roots",
                    g.name(s),
                    g.format_set(k),
                    orth.len()
                )
            })?;
            let gamma = orth.into_iter().next().expect("one root");
            ensure(sys.reflection(&gamma) == element, || {
                format!("loop v[{}, {}] is not the reflection of its root", g.name(s), g.format_set(k))
            })?;
            Some(gamma)
        } else {
            ensure(orth.is_empty(), || {
                format!("non-loop v[{}, {}] has orthogonal roots", g.name(s), g.format_set(k))
            })?;
            None
        };
        ensure(!is_loop || partner == s, || "loop partner mismatch".into())?;
        Ok(GenData { k, s, map, partner, element, length, loop_root })
    }

    fn check_partners(&self, d: &GenData, e: &GenData) -> Result<()> {
        let sys = &*self.sys;
        ensure(e.partner == d.s, || "partner of partner differs".into())?;
        ensure(sys.mul(&e.element, &d.element).is_identity(), || {
            format!(
                "generator pair ({}, {}) in {} is not mutually inverse",
                sys.graph().name(d.s),
                sys.graph().name(e.s),
                sys.graph().format_set(d.k)
            )
        })?;
        for u in d.k.without(d.s).iter() {
            ensure(e.map[d.map[u]] == u, || "partner maps are not inverse".into())?;
        }
        Ok(())
    }
}

/// One unoriented edge of `𝒞`; the stored orientation is `source --s--> target`.
#[derive(Clone, Debug)]
pub struct Edge {
    pub source: usize,
    pub s: usize,
    pub target: usize,
    pub t: usize,
    pub forward: Arc<GenData>,
    pub backward: Arc<GenData>,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.forward.is_loop()
    }
}

/// An edge traversed in a given direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub edge: usize,
    pub forward: bool,
}

impl Step {
    pub fn reversed(self) -> Step {
        Step { edge: self.edge, forward: !self.forward }
    }
}

/// A path of steps in application order (the first step is applied first).
pub type Path = Vec<Step>;

pub fn reverse_path(p: &[Step]) -> Path {
    p.iter().rev().map(|s| s.reversed()).collect()
}

pub const DEFAULT_VERTEX_BUDGET: usize = 1_000_000;

/// The graph `𝒞` of the connected component of `x_I`.
pub struct CGraph {
    groupoid: Arc<Groupoid>,
    vertices: Vec<Tuple>,
    index: HashMap<Tuple, usize>,
    edges: Vec<Edge>,
    out: HashMap<(usize, usize), Step>,
}

impl CGraph {
    /// BFS from `x_I` in (discovery index, generator index) order.
    pub fn build(groupoid: Arc<Groupoid>, base: &[usize], budget: usize) -> Result<Self> {
        let sys = groupoid.system().clone();
        let n = sys.rank();
        let base: Tuple = base.iter().map(|&u| u as u8).collect();
        ensure(tuple_set(&base).len() == base.len(), || "subset has repeated generators".into())?;
        let mut cg = CGraph {
            groupoid,
            vertices: vec![base.clone()],
            index: HashMap::from([(base, 0)]),
            edges: Vec::new(),
            out: HashMap::new(),
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let x = cg.vertices[v].clone();
            let xs = tuple_set(&x);
            for s in 0..n {
                if xs.contains(s) || cg.out.contains_key(&(v, s)) {
                    continue;
                }
                let Some(exp) = cg.groupoid.expand(&x, s)? else {
                    continue;
                };
                let target = match cg.index.get(&exp.target) {
                    Some(&i) => i,
                    None => {
                        if cg.vertices.len() >= budget {
                            return Err(CoxError::Budget(format!(
                                "graph too large: more than {budget} vertices"
                            )));
                        }
                        let i = cg.vertices.len();
                        cg.vertices.push(exp.target.clone());
                        cg.index.insert(exp.target.clone(), i);
                        queue.push_back(i);
                        i
                    }
                };
                let backward = if exp.data.is_loop() {
                    exp.data.clone()
                } else {
                    let k = exp.data.k;
                    cg.groupoid.data(k, exp.partner)?.expect("partner data exists")
                };
                let id = cg.edges.len();
                cg.edges.push(Edge {
                    source: v,
                    s,
                    target,
                    t: exp.partner,
                    forward: exp.data,
                    backward,
                });
                cg.out.insert((v, s), Step { edge: id, forward: true });
                if !(target == v && exp.partner == s) {
                    cg.out.insert((target, exp.partner), Step { edge: id, forward: false });
                }
            }
        }
        Ok(cg)
    }

    pub fn groupoid(&self) -> &Arc<Groupoid> {
        &self.groupoid
    }

    pub fn system(&self) -> &Arc<System> {
        self.groupoid.system()
    }

    pub fn vertices(&self) -> &[Tuple] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Tuple {
        &self.vertices[i]
    }

    pub fn vertex_index(&self, x: &[u8]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn base(&self) -> usize {
        0
    }

    /// The step leaving `v` along generator `s`.
    pub fn step_at(&self, v: usize, s: usize) -> Option<Step> {
        self.out.get(&(v, s)).copied()
    }

    pub fn loop_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_loop())
    }

    pub fn nonloop_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_loop())
    }

    pub fn step_source(&self, st: Step) -> usize {
        let e = &self.edges[st.edge];
        if st.forward {
            e.source
        } else {
            e.target
        }
    }

    pub fn step_target(&self, st: Step) -> usize {
        let e = &self.edges[st.edge];
        if st.forward {
            e.target
        } else {
            e.source
        }
    }

    /// Generator used by the step at its source.
    pub fn step_generator(&self, st: Step) -> usize {
        let e = &self.edges[st.edge];
        if st.forward {
            e.s
        } else {
            e.t
        }
    }

    pub fn step_data(&self, st: Step) -> &Arc<GenData> {
        let e = &self.edges[st.edge];
        if st.forward {
            &e.forward
        } else {
            &e.backward
        }
    }

    pub fn step_element(&self, st: Step) -> &GroupElement {
        &self.step_data(st).element
    }

    /// Product `step_k ⋯ step_1` of a path.
    pub fn path_element(&self, p: &[Step]) -> GroupElement {
        let sys = self.system();
        let mut acc = sys.identity();
        for &st in p {
            acc = sys.mul(self.step_element(st), &acc);
        }
        acc
    }

    /// Checks that consecutive steps compose.
    pub fn is_composable(&self, p: &[Step]) -> bool {
        p.windows(2).all(|w| self.step_target(w[0]) == self.step_source(w[1]))
    }

    /// Per-edge invariants: form preservation and simple-root transport.
    pub fn check_edges(&self) -> Result<()> {
        let sys = self.system();
        for (i, e) in self.edges.iter().enumerate() {
            let x = &self.vertices[e.source];
            let y = &self.vertices[e.target];
            ensure(sys.preserves_form(&e.forward.element), || format!("edge {i} breaks the form"))?;
            for (lam, &u) in x.iter().enumerate() {
                ensure(
                    e.forward.element.column(u as usize) == sys.simple_root(y[lam] as usize),
                    || format!("edge {i} does not transport simple roots"),
                )?;
            }
            ensure(
                sys.mul(&e.forward.element, &e.backward.element).is_identity(),
                || format!("edge {i} is not inverted by its partner"),
            )?;
        }
        Ok(())
    }

    /// Target vertex of `w` viewed in `C` with the given source, if `w ∈ C`.
    pub fn target_of(&self, w: &GroupElement, source: usize) -> Option<usize> {
        let sys = self.system();
        let x = &self.vertices[source];
        let mut y = Vec::with_capacity(x.len());
        for &u in x {
            let col = w.column(u as usize);
            let supp = sys.support(&col);
            if supp.len() != 1 {
                return None;
            }
            let v = supp.min().expect("nonempty");
            if col != sys.simple_root(v) {
                return None;
            }
            y.push(v as u8);
        }
        self.vertex_index(&y)
    }

    /// A standard expression of `w ∈ C` with the given source, as a path.
    /// `prefer` is tried first for the first step (the rightmost factor).
    pub fn standard_expression(
        &self,
        w: &GroupElement,
        source: usize,
        prefer: Option<usize>,
    ) -> Result<Path> {
        let sys = self.system();
        self.target_of(w, source)
            .ok_or_else(|| CoxError::Invariant("element is not in the groupoid".into()))?;
        let mut cur = w.clone();
        let mut v = source;
        let mut path = Vec::new();
        let mut first = true;
        let mut remaining = sys.length(w);
        while !cur.is_identity() {
            let xs = tuple_set(&self.vertices[v]);
            let mut order: Vec<usize> = (0..sys.rank()).collect();
            if first {
                if let Some(p) = prefer {
                    order.retain(|&s| s != p);
                    order.insert(0, p);
                }
            }
            first = false;
            let s = order
                .into_iter()
                .find(|&s| !xs.contains(s) && sys.has_right_descent(&cur, s))
                .ok_or_else(|| CoxError::Invariant("no descent outside the vertex".into()))?;
            let st = self
                .step_at(v, s)
                .ok_or_else(|| CoxError::Invariant("descent generator undefined".into()))?;
            let data = self.step_data(st).clone();
            ensure(data.length <= remaining, || "standard expression overshoots".into())?;
            remaining -= data.length;
            let inv = self.step_data(st.reversed()).element.clone();
            cur = sys.mul(&cur, &inv);
            path.push(st);
            v = self.step_target(st);
        }
        ensure(remaining == 0, || "standard expression lengths do not add".into())?;
        Ok(path)
    }

    /// `|Φ^{⊥[x]}[w]|` for `w` with source `x`.
    pub fn lp(&self, w: &GroupElement, source: usize) -> usize {
        let sys = self.system();
        let xs = tuple_set(&self.vertices[source]);
        sys.inversions(w).iter().filter(|r| sys.orthogonal_to(r, xs)).count()
    }

    /// Free reduction: removes adjacent `e e⁻¹` pairs; a loop followed by
    /// itself also cancels since loops are involutions.
    pub fn reduce_path(&self, p: &[Step]) -> Path {
        let mut out: Path = Vec::with_capacity(p.len());
        for &st in p {
            if let Some(&last) = out.last() {
                if last.edge == st.edge && (last.forward != st.forward || self.edges[st.edge].is_loop()) {
                    out.pop();
                    continue;
                }
            }
            out.push(st);
        }
        out
    }

    /// Number of loop steps in a path.
    pub fn loop_count(&self, p: &[Step]) -> usize {
        p.iter().filter(|st| self.edges[st.edge].is_loop()).count()
    }

    /// Splits `w ∈ C_{x,x}` as `(s_{β_1}⋯s_{β_n})·y` with `β_i ∈ Φ^{⊥[x]}` positive
    /// and `lp(y) = 0`; returns the roots, `y` and a loop-free path for `y`.
    pub fn split(&self, w: &GroupElement, base: usize) -> Result<Split> {
        let sys = self.system();
        let path = self.standard_expression(w, base, None)?;
        ensure(
            self.step_target(*path.last().unwrap_or(&Step { edge: 0, forward: true })) == base
                || path.is_empty(),
            || "element does not fix the vertex".into(),
        )?;
        // Factors left to right are the steps in reverse; w_i is the product of
        // the non-loop factors to the left of the i-th loop.
        let mut prefix = sys.identity();
        let mut roots = Vec::new();
        let mut y_path_rev: Vec<Step> = Vec::new();
        for &st in path.iter().rev() {
            let data = self.step_data(st);
            match &data.loop_root {
                Some(gamma) => roots.push(sys.positive_part(&sys.apply(&prefix, gamma))),
                None => {
                    prefix = sys.mul(&prefix, &data.element);
                    y_path_rev.push(st);
                }
            }
        }
        y_path_rev.reverse();
        let xs = tuple_set(&self.vertices[base]);
        for r in &roots {
            ensure(sys.orthogonal_to(r, xs), || "split root not orthogonal to the base".into())?;
        }
        let mut recomposed = sys.identity();
        for r in &roots {
            recomposed = sys.mul(&recomposed, &sys.reflection(r));
        }
        recomposed = sys.mul(&recomposed, &prefix);
        ensure(&recomposed == w, || "split does not recompose".into())?;
        ensure(self.lp(&prefix, base) == 0, || "Y part has loops".into())?;
        Ok(Split { roots, y: prefix, y_path: y_path_rev })
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub roots: Vec<RootVector>,
    pub y: GroupElement,
    pub y_path: Path,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_instance;

    pub(crate) const EXAMPLE: &str = r#"name = "worked example"
generators = ["s1", "s2", "s3", "s4", "s5", "s6"]
subset = ["s1", "s3", "s4"]
edges = [
  { a = "s1", b = "s2", m = 3 },
  { a = "s2", b = "s3", m = 4 },
  { a = "s3", b = "s4", m = 3 },
  { a = "s4", b = "s5", m = 3 },
  { a = "s5", b = "s6", m = 3 },
]
"#;

    fn example() -> CGraph {
        let inst = parse_instance(EXAMPLE).unwrap();
        let sys = Arc::new(System::new(inst.graph).unwrap());
        CGraph::build(Arc::new(Groupoid::new(sys)), &inst.subset, 1000).unwrap()
    }

    fn t(v: &[u8]) -> Tuple {
        v.iter().map(|&i| i - 1).collect()
    }

    #[test]
    fn example_vertices_and_edges() {
        let cg = example();
        let expected = [
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
        assert_eq!(cg.vertices().len(), 10);
        for v in expected {
            assert!(cg.vertex_index(&t(&v)).is_some(), "{v:?}");
        }
        assert_eq!(cg.loop_edges().count(), 6);
        assert_eq!(cg.nonloop_edges().count(), 12);
        cg.check_edges().unwrap();
    }

    #[test]
    fn example_first_expansion() {
        let cg = example();
        let st = cg.step_at(0, 4).unwrap();
        assert_eq!(cg.vertex(cg.step_target(st)), &t(&[1, 4, 5]));
        assert_eq!(cg.step_generator(st.reversed()), 2);
        let lp = cg.step_at(0, 5).unwrap();
        assert!(cg.edge(lp.edge).is_loop());
        let sys = cg.system();
        assert_eq!(cg.step_data(lp).loop_root.as_ref().unwrap(), &sys.simple_root(5));
    }

    #[test]
    fn standard_expressions_and_split() {
        let cg = example();
        let sys = cg.system().clone();
        // A closed path v1 -> v2 -> v1 via the loop at v10 etc.: use the loop at v1.
        let l = cg.step_at(0, 5).unwrap();
        let w = cg.step_element(l).clone();
        let p = cg.standard_expression(&w, 0, None).unwrap();
        assert_eq!(p, vec![l]);
        assert_eq!(cg.lp(&w, 0), 1);
        let sp = cg.split(&w, 0).unwrap();
        assert_eq!(sp.roots, vec![sys.simple_root(5)]);
        assert!(sp.y.is_identity());
        let id = sys.identity();
        assert!(cg.standard_expression(&id, 0, None).unwrap().is_empty());
    }

    #[test]
    fn empty_subset_has_only_loops() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let sys = Arc::new(System::new(inst.graph).unwrap());
        let cg = CGraph::build(Arc::new(Groupoid::new(sys)), &[], 10).unwrap();
        assert_eq!(cg.vertices().len(), 1);
        assert_eq!(cg.edges().len(), 6);
        assert!(cg.edges().iter().all(|e| e.is_loop()));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let sys = Arc::new(System::new(inst.graph).unwrap());
        let r = CGraph::build(Arc::new(Groupoid::new(sys)), &inst.subset, 5);
        assert!(matches!(r, Err(CoxError::Budget(_))));
    }
}
