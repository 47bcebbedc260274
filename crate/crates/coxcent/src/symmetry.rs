//! Outer symmetry layers of the centralizer and the normalizer: the half-turn
//! groups `𝒜̃ = 𝒜 × 𝒜′` with `g_A` and `τ_A`, the permutation group `𝒜_N` with
//! `h_ρ`, presentations of `B_I` and `Ỹ_I`, their actions on the `W^⊥I`
//! window, and decomposition of centralizer elements.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, CoxError, Result};
use crate::finite_type::{classify_component, w0_diagram_action};
use crate::geometry::{GroupElement, RootVector, System};
use crate::graph::GenSet;
use crate::groupoid::{tuple_set, CGraph, Path, Step};
use crate::presentation::{format_word, free_reduce, invert_word, Letter, Pi1Presentation, SpanningTree, Window, Word};

/// Largest number of non-(−1)-type finite components of `Λ` enumerated.
pub const MAX_HALF_TURN_COMPONENTS: usize = 16;
/// Largest `|Λ|` for which `𝒜_N` is enumerated.
pub const MAX_PERMUTATION_DEGREE: usize = 12;

/// Irreducible component of `Λ` (positions of `x_I`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaComponent {
    pub positions: Vec<usize>,
    pub type_name: Option<String>,
    pub minus_one: bool,
}

/// `A ∈ 𝒜̃` with `σ_A`, `x_I^A`, `g_A` and `τ_A` on vertices.
#[derive(Clone, Debug)]
pub struct HalfTurn {
    /// Sorted positions.
    pub a: Vec<usize>,
    pub sigma: Vec<usize>,
    pub vertex: usize,
    pub g: GroupElement,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
    /// `A ∈ 𝒜′`.
    pub central: bool,
}

/// A group given by generators (with matrices) and relators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPresentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
    /// Which relation family each relator instantiates.
    pub relator_kinds: Vec<String>,
    /// Words for two involutions generating the group as `W(Ã₁)`, if recognized.
    pub infinite_dihedral: Option<[Word; 2]>,
}

impl GroupPresentation {
    pub fn format_relators(&self) -> Vec<String> {
        self.relators.iter().map(|r| format!("{} = 1", format_word(r, &self.generators))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PresentedGroup {
    pub presentation: GroupPresentation,
    pub elements: Vec<GroupElement>,
    inverses: Vec<GroupElement>,
}

impl PresentedGroup {
    fn new(generators: Vec<String>, elements: Vec<GroupElement>, sys: &System) -> Self {
        let inverses = elements.iter().map(|e| sys.inverse(e)).collect();
        PresentedGroup {
            presentation: GroupPresentation {
                generators,
                relators: Vec::new(),
                relator_kinds: Vec::new(),
                infinite_dihedral: None,
            },
            elements,
            inverses,
        }
    }

    pub fn evaluate(&self, sys: &System, w: &[Letter]) -> GroupElement {
        let mut acc = sys.identity();
        for &(g, e) in w {
            acc = sys.mul(&acc, if e > 0 { &self.elements[g] } else { &self.inverses[g] });
        }
        acc
    }

    /// Adds a relator after checking it evaluates to the identity.
    fn relate(&mut self, sys: &System, kind: &str, w: Word) -> Result<()> {
        let w = free_reduce(&w);
        ensure(self.evaluate(sys, &w).is_identity(), || {
            format!(
                "relation {kind} fails: {}",
                format_word(&w, &self.presentation.generators)
            )
        })?;
        if !w.is_empty() && !self.presentation.relators.contains(&w) {
            self.presentation.relators.push(w);
            self.presentation.relator_kinds.push(kind.into());
        }
        Ok(())
    }

    /// Recognizes `⟨a⟩ ⋊ ⟨c⟩` with `c² = 1`, `c a c⁻¹ = a⁻¹` as `W(Ã₁)` on `{c a, c}`.
    fn recognize_infinite_dihedral(&mut self, sys: &System) {
        if self.elements.len() != 2 {
            return;
        }
        let (a, c) = (&self.elements[0], &self.elements[1]);
        let c2 = sys.mul(c, c);
        let conj = sys.mul(&sys.mul(c, a), &self.inverses[1]);
        if c2.is_identity() && conj == self.inverses[0] && !a.is_identity() {
            let ap = vec![(1, 1), (0, 1)];
            let bp = vec![(1, 1)];
            let ok = [&ap, &bp].iter().all(|w| {
                let e = self.evaluate(sys, w);
                sys.mul(&e, &e).is_identity()
            });
            if ok {
                self.presentation.infinite_dihedral = Some([ap, bp]);
            }
        }
    }
}

/// Applies a vertex map to a path via `w_y^s ↦ w_{φ(y)}^s`.
fn map_path(cg: &CGraph, vertex_map: &[usize], p: &[Step]) -> Result<Path> {
    p.iter()
        .map(|&st| {
            cg.step_at(vertex_map[cg.step_source(st)], cg.step_generator(st))
                .ok_or_else(|| CoxError::Invariant("symmetry does not map edges to edges".into()))
        })
        .collect()
}

fn edge_map(cg: &CGraph, vertex_map: &[usize]) -> Result<Vec<usize>> {
    (0..cg.edges().len())
        .map(|e| Ok(map_path(cg, vertex_map, &[Step { edge: e, forward: true }])?[0].edge))
        .collect()
}

/// Y-word of a path that is closed at the root.
fn y_word(cg: &CGraph, pi1: &Pi1Presentation, p: &[Step]) -> Result<Word> {
    let reduced = cg.reduce_path(p);
    ensure(
        reduced.is_empty() || (cg.step_source(reduced[0]) == cg.base() && cg.step_target(*reduced.last().unwrap()) == cg.base()),
        || "path is not closed at the root".into(),
    )?;
    pi1.surviving_word(cg, &reduced)
}

/// Y generators as presentation letters: surviving generator `g` becomes its
/// position in the surviving list.
fn y_letters(pi1: &Pi1Presentation, w: &[Letter]) -> Word {
    w.iter()
        .map(|&(g, e)| (pi1.simplified.surviving.iter().position(|&s| s == g).expect("surviving"), e))
        .collect()
}

fn y_generator_names(pi1: &Pi1Presentation) -> Vec<String> {
    let names = pi1.names();
    pi1.simplified.surviving.iter().map(|&g| names[g].clone()).collect()
}

// ---- half-turns ----

#[derive(Clone, Debug)]
pub struct HalfTurns {
    pub components: Vec<LambdaComponent>,
    /// `𝒜̃`, the identity first.
    pub tilde: Vec<HalfTurn>,
    /// Indices into `tilde` of `𝒜` and `𝒜′`.
    pub a_group: Vec<usize>,
    pub a_prime: Vec<usize>,
    /// Greedy basis `𝒜₀` of `𝒜`, indices into `tilde`.
    pub basis: Vec<usize>,
    /// `w_0(J)` over the (−1)-type components `J` of `I`.
    pub center: Vec<GroupElement>,
    /// `Some(true)` when the tree is `τ_A`-stable for all `A ∈ 𝒜`.
    pub splits: Option<bool>,
}

impl HalfTurns {
    pub fn build(cg: &CGraph, tree: &SpanningTree) -> Result<Self> {
        let sys = cg.system();
        let g = sys.graph();
        let x = cg.vertex(cg.base()).clone();
        let xs = tuple_set(&x);
        let mut components = Vec::new();
        for comp in g.components(xs) {
            let positions: Vec<usize> = (0..x.len()).filter(|&l| comp.contains(x[l] as usize)).collect();
            let label = classify_component(g, comp);
            components.push(LambdaComponent {
                positions,
                type_name: label.as_ref().map(|l| l.name.to_string()),
                minus_one: label.is_some_and(|l| l.name.is_minus_one_type()),
            });
        }
        components.sort_by(|a, b| a.positions.cmp(&b.positions));
        let plain: Vec<usize> = (0..components.len())
            .filter(|&c| components[c].type_name.is_some() && !components[c].minus_one)
            .collect();
        let minus: Vec<usize> = (0..components.len()).filter(|&c| components[c].minus_one).collect();
        if plain.len() > MAX_HALF_TURN_COMPONENTS {
            return Err(CoxError::Budget(format!(
                "{} finite components to combine (at most {MAX_HALF_TURN_COMPONENTS})",
                plain.len()
            )));
        }
        let positions_of = |mask: u64, list: &[usize]| -> Vec<usize> {
            let mut a: Vec<usize> = list
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .flat_map(|(_, &c)| components[c].positions.clone())
                .collect();
            a.sort_unstable();
            a
        };

        let mut tilde: Vec<HalfTurn> = Vec::new();
        let mut a_group = Vec::new();
        let mut a_prime = Vec::new();
        for pm in 0..(1u64 << plain.len()) {
            if let Some(h) = half_turn(cg, tree, &x, &positions_of(pm, &plain), false)? {
                a_group.push(tilde.len());
                tilde.push(h);
            }
        }
        for mm in 1..(1u64 << minus.len()) {
            let h = half_turn(cg, tree, &x, &positions_of(mm, &minus), true)?
                .ok_or_else(|| CoxError::Invariant("(−1)-type union moves the base vertex".into()))?;
            a_prime.push(tilde.len());
            tilde.push(h);
        }
        a_prime.insert(0, 0);
        // Products with 𝒜′ complete 𝒜̃ = 𝒜 × 𝒜′.
        for &ai in &a_group[1..] {
            for &pi in &a_prime[1..] {
                let a = sym_diff(&tilde[ai].a, &tilde[pi].a);
                let h = half_turn(cg, tree, &x, &a, false)?
                    .ok_or_else(|| CoxError::Invariant("𝒜̃ is not closed under products".into()))?;
                tilde.push(h);
            }
        }

        let by_set: HashMap<Vec<usize>, usize> = tilde.iter().enumerate().map(|(i, h)| (h.a.clone(), i)).collect();
        for h in &tilde {
            for h2 in &tilde {
                ensure(by_set.contains_key(&sym_diff(&h.a, &h2.a)), || {
                    "𝒜̃ is not closed under symmetric difference".into()
                })?;
            }
        }

        // Relation II on all pairs: g_A g_A′ = τ_A(p_{x_I,x_I^A′})_(x_I) g_{AA′}.
        for h in &tilde {
            for h2 in &tilde {
                let prod = &tilde[by_set[&sym_diff(&h.a, &h2.a)]];
                let p = map_path(cg, &h.vertex_map, &tree.to_root(cg, h2.vertex))?;
                let corr = cg.path_element(&tree.extend(cg, prod.vertex, &p));
                ensure(sys.mul(&h.g, &h2.g) == sys.mul(&corr, &prod.g), || {
                    "relation II fails for a pair of half-turns".into()
                })?;
            }
        }

        let mut basis = Vec::new();
        let mut span: Vec<u64> = Vec::new();
        let mask_of = |a: &[usize]| a.iter().fold(0u64, |m, &p| m | 1 << p);
        for &i in &a_group {
            let mut v = mask_of(&tilde[i].a);
            for &b in &span {
                v = v.min(v ^ b);
            }
            if v != 0 {
                span.push(v);
                span.sort_unstable_by(|a, b| b.cmp(a));
                basis.push(i);
            }
        }
        ensure(1usize << basis.len() == a_group.len(), || "𝒜 is not an elementary abelian 2-group".into())?;

        let center = minus
            .iter()
            .map(|&c| {
                let set = GenSet::from_iter(components[c].positions.iter().map(|&l| x[l] as usize));
                Ok(sys.longest(set)?.element.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let splits = a_group
            .iter()
            .all(|&i| tree.is_stable(&tilde[i].edge_map))
            .then_some(true);
        Ok(HalfTurns { components, tilde, a_group, a_prime, basis, center, splits })
    }

    pub fn center_order(&self) -> u64 {
        1 << self.center.len()
    }

    pub fn find(&self, a: &[usize]) -> Option<&HalfTurn> {
        self.tilde.iter().find(|h| h.a == a)
    }

    pub fn name(h: &HalfTurn) -> String {
        let items: Vec<String> = h.a.iter().map(|p| (p + 1).to_string()).collect();
        format!("g[{}]", items.join(","))
    }
}

fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let sa: BTreeSet<usize> = a.iter().copied().collect();
    let sb: BTreeSet<usize> = b.iter().copied().collect();
    sa.symmetric_difference(&sb).copied().collect()
}

/// Builds the half-turn for positions `a` if `x_I^A` is a vertex of `𝒞`.
fn half_turn(cg: &CGraph, tree: &SpanningTree, x: &[u8], a: &[usize], central: bool) -> Result<Option<HalfTurn>> {
    let sys = cg.system();
    let g = sys.graph();
    let aset = GenSet::from_iter(a.iter().map(|&l| x[l] as usize));
    let action = w0_diagram_action(g, aset)?;
    let mut sigma: Vec<usize> = (0..x.len()).collect();
    for &l in a {
        let img = action[x[l] as usize];
        sigma[l] = x.iter().position(|&u| u as usize == img).expect("component is closed");
    }
    let xa: Vec<u8> = (0..x.len()).map(|l| x[sigma[l]]).collect();
    let Some(vertex) = cg.vertex_index(&xa) else { return Ok(None) };
    let w0 = sys.longest(aset)?.element.clone();
    let g_a = sys.mul(&cg.path_element(&tree.to_root(cg, vertex)), &w0);
    for (l, &u) in x.iter().enumerate() {
        let alpha = sys.simple_root(u as usize);
        let want = if a.contains(&l) { sys.negate(&alpha) } else { alpha };
        ensure(sys.apply(&g_a, &sys.simple_root(u as usize)) == want, || {
            "g_A does not act on the base roots by the sign pattern of A".into()
        })?;
    }
    let mut vertex_map = Vec::with_capacity(cg.vertices().len());
    for y in cg.vertices() {
        let ya: Vec<u8> = (0..y.len()).map(|l| y[sigma[l]]).collect();
        vertex_map.push(
            cg.vertex_index(&ya)
                .ok_or_else(|| CoxError::Invariant("τ_A leaves the vertex set".into()))?,
        );
    }
    let emap = edge_map(cg, &vertex_map)?;
    // w_0(z_A) w w_0(y_A) = τ_A(w) on every edge.
    for (e, ed) in cg.edges().iter().enumerate() {
        let part = |v: usize| GenSet::from_iter(a.iter().map(|&l| cg.vertex(v)[l] as usize));
        let wz = sys.longest(part(ed.target))?.element.clone();
        let wy = sys.longest(part(ed.source))?.element.clone();
        let lhs = sys.mul(&sys.mul(&wz, &ed.forward.element), &wy);
        let img = map_path(cg, &vertex_map, &[Step { edge: e, forward: true }])?[0];
        ensure(&lhs == cg.step_element(img), || format!("τ_A formula fails on edge {e}"))?;
    }
    Ok(Some(HalfTurn { a: a.to_vec(), sigma, vertex, g: g_a, vertex_map, edge_map: emap, central }))
}

/// Presentation of `B_I` over the surviving `Y_I` generators and `g_A`, `A ∈ 𝒜₀`.
pub fn b_presentation(cg: &CGraph, tree: &SpanningTree, pi1: &Pi1Presentation, ht: &HalfTurns) -> Result<PresentedGroup> {
    let sys = cg.system();
    let ny = pi1.simplified.surviving.len();
    let mut names = y_generator_names(pi1);
    let mut elements: Vec<GroupElement> = pi1.simplified.surviving.iter().map(|&g| pi1.elements[g].clone()).collect();
    for &b in &ht.basis {
        names.push(HalfTurns::name(&ht.tilde[b]));
        elements.push(ht.tilde[b].g.clone());
    }
    let mut pg = PresentedGroup::new(names, elements, sys);
    for r in &pi1.simplified.relators {
        pg.relate(sys, "Y", y_letters(pi1, r))?;
    }
    for (bi, &b) in ht.basis.iter().enumerate() {
        let h = &ht.tilde[b];
        let gi = ny + bi;
        // I: g_A q g_A⁻¹ = τ_A(q)_(x_I).
        for (qi, &q) in pi1.simplified.surviving.iter().enumerate() {
            let tp = map_path(cg, &h.vertex_map, &pi1.generator_path(cg, tree, q))?;
            let rhs = y_letters(pi1, &y_word(cg, pi1, &tree.extend(cg, h.vertex, &tp))?);
            let mut w = vec![(gi, 1), (qi, 1), (gi, -1)];
            w.extend(invert_word(&rhs));
            pg.relate(sys, "I", w)?;
        }
        // III: g_A² = τ_A(p_{x_I,x_I^A})_(x_I).
        let tp = map_path(cg, &h.vertex_map, &tree.to_root(cg, h.vertex))?;
        let rhs = y_letters(pi1, &y_word(cg, pi1, &tree.extend(cg, cg.base(), &tp))?);
        let mut w = vec![(gi, 1), (gi, 1)];
        w.extend(invert_word(&rhs));
        pg.relate(sys, "III", w)?;
    }
    // IV: [g_A, g_A′] = τ_A(p_{x_I,x_I^A′})_(x_I) τ_A′(p_{x_I^A,x_I})_(x_I).
    for (bi, &b) in ht.basis.iter().enumerate() {
        for (bj, &b2) in ht.basis.iter().enumerate() {
            if bi == bj {
                continue;
            }
            let (h, h2) = (&ht.tilde[b], &ht.tilde[b2]);
            let prod = ht.find(&sym_diff(&h.a, &h2.a)).expect("closed").vertex;
            let p1 = map_path(cg, &h.vertex_map, &tree.to_root(cg, h2.vertex))?;
            let p2 = map_path(cg, &h2.vertex_map, &tree.from_root(cg, h.vertex))?;
            let mut rhs = y_word(cg, pi1, &tree.extend(cg, prod, &p1))?;
            rhs.extend(y_word(cg, pi1, &tree.extend(cg, h2.vertex, &p2))?);
            let rhs = y_letters(pi1, &rhs);
            let (gi, gj) = (ny + bi, ny + bj);
            let mut w = vec![(gi, 1), (gj, 1), (gi, -1), (gj, -1)];
            w.extend(invert_word(&rhs));
            pg.relate(sys, "IV", w)?;
        }
    }
    pg.recognize_infinite_dihedral(sys);
    Ok(pg)
}

// ---- normalizer side ----

/// `ρ ∈ 𝒜_N` with `h_ρ = p_{x_I,ρ(x_I)}`.
#[derive(Clone, Debug)]
pub struct NormalizerSymmetry {
    /// `rho[λ]` is the image of position `λ`.
    pub rho: Vec<usize>,
    pub vertex: usize,
    pub h: GroupElement,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Normalizer {
    /// `𝒜_N`, the identity first.
    pub symmetries: Vec<NormalizerSymmetry>,
    /// Greedy generating set `𝒜′_N`, indices into `symmetries`.
    pub generators: Vec<usize>,
    /// Positive words over `generators` that are trivial in `𝒜_N`.
    pub perm_relators: Vec<Vec<usize>>,
    pub presentation: PresentedGroup,
    pub splits: Option<bool>,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

fn perm_inverse(a: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

fn perm_order(a: &[usize]) -> usize {
    let id: Vec<usize> = (0..a.len()).collect();
    let mut p = a.to_vec();
    let mut k = 1;
    while p != id {
        p = compose(a, &p);
        k += 1;
    }
    k
}

/// `ρ(y)_λ = y_{ρ⁻¹(λ)}`.
fn apply_perm(rho: &[usize], y: &[u8]) -> Vec<u8> {
    let inv = perm_inverse(rho);
    (0..y.len()).map(|l| y[inv[l]]).collect()
}

impl Normalizer {
    pub fn build(cg: &CGraph, tree: &SpanningTree, pi1: &Pi1Presentation) -> Result<Self> {
        let sys = cg.system();
        let x = cg.vertex(cg.base()).clone();
        if x.len() > MAX_PERMUTATION_DEGREE {
            return Err(CoxError::Budget(format!(
                "|I| = {} exceeds {MAX_PERMUTATION_DEGREE} for the normalizer layer",
                x.len()
            )));
        }
        let xs = tuple_set(&x);
        let mut symmetries = Vec::new();
        for (v, y) in cg.vertices().iter().enumerate() {
            if tuple_set(y) != xs {
                continue;
            }
            let rho: Vec<usize> = (0..x.len())
                .map(|mu| y.iter().position(|&u| u == x[mu]).expect("same set"))
                .collect();
            ensure(apply_perm(&rho, &x) == *y, || "permutation does not reproduce the vertex".into())?;
            let mut vertex_map = Vec::with_capacity(cg.vertices().len());
            for z in cg.vertices() {
                vertex_map.push(
                    cg.vertex_index(&apply_perm(&rho, z))
                        .ok_or_else(|| CoxError::Invariant("ρ leaves the vertex set".into()))?,
                );
            }
            let emap = edge_map(cg, &vertex_map)?;
            for e in 0..cg.edges().len() {
                let st = Step { edge: e, forward: true };
                let img = map_path(cg, &vertex_map, &[st])?[0];
                ensure(cg.step_element(st) == cg.step_element(img), || {
                    format!("ρ changes the element of edge {e}")
                })?;
            }
            let h = cg.path_element(&tree.to_root(cg, v));
            symmetries.push(NormalizerSymmetry { rho, vertex: v, h, vertex_map, edge_map: emap });
        }
        ensure(symmetries.first().is_some_and(|s| s.vertex == cg.base()), || "identity missing from 𝒜_N".into())?;
        let perms: Vec<Vec<usize>> = symmetries.iter().map(|s| s.rho.clone()).collect();
        for a in &perms {
            for b in &perms {
                ensure(perms.contains(&compose(a, b)), || "𝒜_N is not closed under composition".into())?;
            }
        }

        // Greedy generating set.
        let mut generators: Vec<usize> = Vec::new();
        let mut reached: BTreeSet<Vec<usize>> = BTreeSet::from([perms[0].clone()]);
        for (i, p) in perms.iter().enumerate().skip(1) {
            if reached.contains(p) {
                continue;
            }
            generators.push(i);
            reached = closure(&generators.iter().map(|&g| perms[g].clone()).collect::<Vec<_>>(), x.len());
        }
        let perm_relators = cayley_relators(&generators.iter().map(|&g| perms[g].clone()).collect::<Vec<_>>(), x.len());

        let ny = pi1.simplified.surviving.len();
        let mut names = y_generator_names(pi1);
        let mut elements: Vec<GroupElement> = pi1.simplified.surviving.iter().map(|&g| pi1.elements[g].clone()).collect();
        for &gi in &generators {
            names.push(perm_name(&perms[gi]));
            elements.push(symmetries[gi].h.clone());
        }
        let mut pg = PresentedGroup::new(names, elements, sys);
        for r in &pi1.simplified.relators {
            pg.relate(sys, "Y", y_letters(pi1, r))?;
        }
        let index_of = |p: &[usize]| perms.iter().position(|q| q == p).expect("in 𝒜_N");
        for (k, &gi) in generators.iter().enumerate() {
            let s = &symmetries[gi];
            let inv = &symmetries[index_of(&perm_inverse(&s.rho))];
            // N1: h_ρ⁻¹ q h_ρ = ρ⁻¹(q_(ρ(x_I))).
            for (qi, &q) in pi1.simplified.surviving.iter().enumerate() {
                let mut closed = tree.to_root(cg, s.vertex);
                closed.extend(pi1.generator_path(cg, tree, q));
                closed.extend(tree.from_root(cg, s.vertex));
                let mapped = map_path(cg, &inv.vertex_map, &closed)?;
                let rhs = y_letters(pi1, &y_word(cg, pi1, &mapped)?);
                let hi = ny + k;
                let mut w = vec![(hi, -1), (qi, 1), (hi, 1)];
                w.extend(invert_word(&rhs));
                pg.relate(sys, "N1", w)?;
            }
        }
        // N2: h_{ρ1}⋯h_{ρk} equals the product of translated tree paths.
        for rel in &perm_relators {
            let mut acc: Vec<usize> = (0..x.len()).collect();
            let mut path: Path = Vec::new();
            for &k in rel {
                let s = &symmetries[generators[k]];
                let seg = map_path(cg, &symmetries[index_of(&acc)].vertex_map, &tree.to_root(cg, s.vertex))?;
                // Later factors are applied first.
                let mut p = seg;
                p.extend(path);
                path = p;
                acc = compose(&acc, &s.rho);
            }
            ensure(acc.iter().enumerate().all(|(i, &j)| i == j), || "permutation relator is not trivial".into())?;
            let rhs = y_letters(pi1, &y_word(cg, pi1, &path)?);
            let mut w: Word = rel.iter().map(|&k| (ny + k, 1)).collect();
            w.extend(invert_word(&rhs));
            pg.relate(sys, "N2", w)?;
        }
        pg.recognize_infinite_dihedral(sys);
        let splits = symmetries.iter().all(|s| tree.is_stable(&s.edge_map)).then_some(true);
        Ok(Normalizer { symmetries, generators, perm_relators, presentation: pg, splits })
    }

    pub fn order(&self) -> usize {
        self.symmetries.len()
    }
}

pub fn perm_name(p: &[usize]) -> String {
    let items: Vec<String> = p.iter().map(|i| (i + 1).to_string()).collect();
    format!("h[{}]", items.join(","))
}

fn closure(gens: &[Vec<usize>], n: usize) -> BTreeSet<Vec<usize>> {
    let id: Vec<usize> = (0..n).collect();
    let mut seen = BTreeSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q = compose(&p, g);
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    seen
}

/// Positive relators of a finite permutation group: generator powers and the
/// Cayley-graph cycles `u_g r u_{gr}⁻¹`, with inverses written as positive powers.
fn cayley_relators(gens: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    let id: Vec<usize> = (0..n).collect();
    let orders: Vec<usize> = gens.iter().map(|g| perm_order(g)).collect();
    let mut word: HashMap<Vec<usize>, Vec<usize>> = HashMap::from([(id.clone(), vec![])]);
    let mut order = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for (k, g) in gens.iter().enumerate() {
            let q = compose(&p, g);
            if !word.contains_key(&q) {
                let mut w = word[&p].clone();
                w.push(k);
                word.insert(q.clone(), w);
                order.push(q.clone());
                queue.push_back(q);
            }
        }
    }
    let positive_inverse = |w: &[usize]| -> Vec<usize> {
        w.iter()
            .rev()
            .flat_map(|&k| std::iter::repeat_n(k, orders[k] - 1))
            .collect()
    };
    let mut out: Vec<Vec<usize>> = (0..gens.len()).map(|k| vec![k; orders[k]]).collect();
    for p in &order {
        for (k, g) in gens.iter().enumerate() {
            let q = compose(p, g);
            let mut w = word[p].clone();
            w.push(k);
            if w == word[&q] {
                continue;
            }
            w.extend(positive_inverse(&word[&q]));
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

// ---- actions on W^⊥I ----

/// Image of a window class under an outer generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAction {
    pub actor: String,
    /// Per class: `(image word over Y generators, image loop edge, image class if in the window)`.
    pub images: Vec<(Word, usize, Option<usize>)>,
    /// Pairs whose formula image was confirmed by matrix conjugation.
    pub verified: usize,
}

fn conjugate_check(sys: &System, g: &GroupElement, root: &RootVector, image_root: &RootVector) -> bool {
    let lhs = sys.mul(&sys.mul(g, &sys.reflection(root)), &sys.inverse(g));
    lhs == sys.reflection(image_root)
}

/// Action of `φ` (a `τ_A` or `ρ`) by the formula
/// `x r(w, w_y^s) x⁻¹ = r(φ(w p_{x_I,y})_(x_I), w_{φ(y)}^s)`.
#[allow(clippy::too_many_arguments)]
fn symmetry_action(
    cg: &CGraph,
    tree: &SpanningTree,
    pi1: &Pi1Presentation,
    win: &Window,
    actor: String,
    element: &GroupElement,
    vertex_map: &[usize],
) -> Result<ClassAction> {
    let sys = cg.system();
    let mut images: Vec<Option<(Word, usize, Option<usize>)>> = vec![None; win.classes.len()];
    let mut verified = 0;
    for pair in &win.pairs {
        let y = cg.edge(pair.loop_edge).source;
        let s = cg.edge(pair.loop_edge).s;
        let mut p = tree.to_root(cg, y);
        p.extend(pi1.word_path(cg, tree, &win.words[pair.word]));
        let mapped = map_path(cg, vertex_map, &p)?;
        let start = vertex_map[y];
        let word = y_word(cg, pi1, &tree.extend(cg, start, &mapped))?;
        let st = cg
            .step_at(start, s)
            .ok_or_else(|| CoxError::Invariant("image of a loop is missing".into()))?;
        ensure(cg.edge(st.edge).is_loop(), || "image of a loop is not a loop".into())?;
        let li = win.loops.iter().position(|&e| e == st.edge).expect("loop");
        let root = sys.apply(&pi1.evaluate(sys, &word), &win.loop_roots[li]);
        ensure(conjugate_check(sys, element, &pair.root, &root), || {
            format!("{actor}: conjugation disagrees with the action formula")
        })?;
        verified += 1;
        if images[pair.class].is_none() {
            images[pair.class] = Some((word, st.edge, win.class_of_root(&root)));
        }
    }
    Ok(ClassAction { actor, images: images.into_iter().map(|i| i.expect("every class has a pair")).collect(), verified })
}

/// Action of a surviving `Y_I` generator: `u r(w, ξ) u⁻¹ = r(uw, ξ)`.
fn y_action(cg: &CGraph, pi1: &Pi1Presentation, win: &Window, g: usize) -> Result<ClassAction> {
    let sys = cg.system();
    let u = &pi1.elements[g];
    let mut images: Vec<Option<(Word, usize, Option<usize>)>> = vec![None; win.classes.len()];
    let mut verified = 0;
    for pair in &win.pairs {
        let mut word = vec![(g, 1)];
        word.extend_from_slice(&win.words[pair.word]);
        let word = free_reduce(&word);
        let li = win.loops.iter().position(|&e| e == pair.loop_edge).expect("loop");
        let root = sys.apply(&pi1.evaluate(sys, &word), &win.loop_roots[li]);
        ensure(conjugate_check(sys, u, &pair.root, &root), || "Y action formula fails".into())?;
        verified += 1;
        if images[pair.class].is_none() {
            images[pair.class] = Some((word, pair.loop_edge, win.class_of_root(&root)));
        }
    }
    Ok(ClassAction {
        actor: pi1.names()[g].clone(),
        images: images.into_iter().map(|i| i.expect("every class has a pair")).collect(),
        verified,
    })
}

/// Actions of the `Y_I` generators, `g_A` (`A ∈ 𝒜₀`) and `h_ρ` (`ρ ∈ 𝒜′_N`).
pub fn actions(
    cg: &CGraph,
    tree: &SpanningTree,
    pi1: &Pi1Presentation,
    win: &Window,
    ht: &HalfTurns,
    nz: &Normalizer,
) -> Result<Vec<ClassAction>> {
    let mut out = Vec::new();
    for &g in &pi1.simplified.surviving {
        out.push(y_action(cg, pi1, win, g)?);
    }
    for &b in &ht.basis {
        let h = &ht.tilde[b];
        out.push(symmetry_action(cg, tree, pi1, win, HalfTurns::name(h), &h.g, &h.vertex_map)?);
    }
    for &gi in &nz.generators {
        let s = &nz.symmetries[gi];
        out.push(symmetry_action(cg, tree, pi1, win, perm_name(&s.rho), &s.h, &s.vertex_map)?);
    }
    Ok(out)
}

// ---- element decomposition ----

/// `w = (s_{β_1}⋯s_{β_n}) · y · g_A` with `β_i ∈ (Φ^⊥I)⁺`, `y ∈ Y_I`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub a: Vec<usize>,
    pub perp: Vec<RootVector>,
    pub y: GroupElement,
    pub y_word: Word,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Centralizer(Decomposition),
    /// A generator of `I` whose root is not sent to `±` itself.
    NotInCentralizer { generator: usize },
}

pub fn decompose_element(
    cg: &CGraph,
    pi1: &Pi1Presentation,
    ht: &HalfTurns,
    w: &GroupElement,
) -> Result<Membership> {
    let sys = cg.system();
    let x = cg.vertex(cg.base()).clone();
    let mut a = Vec::new();
    for (l, &u) in x.iter().enumerate() {
        let alpha = sys.simple_root(u as usize);
        let img = sys.apply(w, &alpha);
        if img == sys.negate(&alpha) {
            a.push(l);
        } else if img != alpha {
            return Ok(Membership::NotInCentralizer { generator: u as usize });
        }
    }
    let h = ht
        .find(&a)
        .ok_or_else(|| CoxError::Invariant("sign pattern of a centralizer element is not in 𝒜̃".into()))?;
    let c = sys.mul(w, &sys.inverse(&h.g));
    let split = cg.split(&c, cg.base())?;
    let y_word = y_word(cg, pi1, &split.y_path)?;
    ensure(pi1.evaluate(sys, &y_word) == split.y, || "Y word does not match the Y part".into())?;
    let mut re = sys.identity();
    for r in &split.roots {
        re = sys.mul(&re, &sys.reflection(r));
    }
    re = sys.mul(&sys.mul(&re, &split.y), &h.g);
    ensure(&re == w, || "decomposition does not reassemble".into())?;
    Ok(Membership::Centralizer(Decomposition { a, perp: split.roots, y: split.y, y_word }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_instance;
    use crate::groupoid::Groupoid;
    use crate::presentation::TreePreference;
    use crate::tours;
    use std::sync::Arc;

    const EXAMPLE: &str = include_str!("../instances/worked_example.toml");
    const AVOID: &str = "!s1,s5,s6:s2; !s2,s4,s5:s3; !s2,s6,s5:s1";

    struct Fixture {
        cg: CGraph,
        tree: SpanningTree,
        pi1: Pi1Presentation,
        t: tours::Tours,
    }

    fn fixture(text: &str, pref: &str) -> Fixture {
        let inst = parse_instance(text).unwrap();
        let sys = Arc::new(System::new(inst.graph).unwrap());
        let cg = CGraph::build(Arc::new(Groupoid::new(sys)), &inst.subset, 10_000).unwrap();
        let t = tours::enumerate(&cg).unwrap();
        let tree = SpanningTree::build(&cg, &TreePreference::parse(cg.system().graph(), pref).unwrap()).unwrap();
        let pi1 = Pi1Presentation::build(&cg, &tree, &t.cells).unwrap();
        Fixture { cg, tree, pi1, t }
    }

    #[test]
    fn worked_example_half_turns() {
        let f = fixture(EXAMPLE, AVOID);
        let ht = HalfTurns::build(&f.cg, &f.tree).unwrap();
        assert_eq!(ht.a_group.len(), 2);
        assert_eq!(ht.tilde[ht.a_group[1]].a, vec![1, 2]);
        let g = f.cg.system().graph();
        assert_eq!(g.format_tuple(f.cg.vertex(ht.tilde[ht.a_group[1]].vertex)), "(s1,s4,s3)");
        assert_eq!(ht.a_prime.len(), 2);
        assert_eq!(ht.center, vec![f.cg.system().generator(0)]);
        assert_eq!(ht.splits, Some(true));
        let b = b_presentation(&f.cg, &f.tree, &f.pi1, &ht).unwrap();
        assert!(b.presentation.infinite_dihedral.is_some());
        let nz = Normalizer::build(&f.cg, &f.tree, &f.pi1).unwrap();
        assert_eq!(nz.order(), 2);
        assert_eq!(nz.symmetries[1].rho, vec![0, 2, 1]);
        assert!(nz.presentation.presentation.infinite_dihedral.is_some());
        assert_eq!(nz.splits, Some(true));
        let win = Window::build(&f.cg, &f.tree, &f.pi1, &f.t, 2).unwrap();
        let acts = actions(&f.cg, &f.tree, &f.pi1, &win, &ht, &nz).unwrap();
        assert_eq!(acts.len(), 3);
        assert!(acts.iter().all(|a| a.verified == win.pairs.len()));
    }

    #[test]
    fn decomposition_examples() {
        let f = fixture(EXAMPLE, AVOID);
        let ht = HalfTurns::build(&f.cg, &f.tree).unwrap();
        let sys = f.cg.system();
        let s1 = sys.generator(0);
        match decompose_element(&f.cg, &f.pi1, &ht, &s1).unwrap() {
            Membership::Centralizer(d) => {
                assert_eq!(d.a, vec![0]);
                assert!(d.perp.is_empty() && d.y.is_identity());
            }
            _ => panic!("s1 centralizes W_I"),
        }
        let s6 = sys.generator(5);
        match decompose_element(&f.cg, &f.pi1, &ht, &s6).unwrap() {
            Membership::Centralizer(d) => {
                assert!(d.a.is_empty() && d.y.is_identity());
                assert_eq!(d.perp, vec![sys.simple_root(5)]);
            }
            _ => panic!("s6 centralizes W_I"),
        }
        assert!(matches!(
            decompose_element(&f.cg, &f.pi1, &ht, &sys.generator(1)).unwrap(),
            Membership::NotInCentralizer { generator: 0 }
        ));
    }

    #[test]
    fn cayley_relators_are_trivial() {
        let gens = vec![vec![1, 0, 2], vec![1, 2, 0]];
        for r in cayley_relators(&gens, 3) {
            let mut acc = vec![0, 1, 2];
            for k in r {
                acc = compose(&acc, &gens[k]);
            }
            assert_eq!(acc, vec![0, 1, 2]);
        }
        assert_eq!(closure(&gens, 3).len(), 6);
    }
}
