//! The geometric representation of `W` on `V = ⊕ ℝα_s` with exact arithmetic.
//!
//! All bilinear values are stored doubled: `G = 2B`, so `G_ss = 2`,
//! `G_st = −2cos(π/m_st)` and `G_st = −2` for `m_st = ∞`. Every root then has
//! algebraic-integer coordinates and `s·v = v − (Gv)_s α_s`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{ensure, CoxError, Result};
use crate::field::{FieldElement, FieldSpec, DEFAULT_MAX_N};
use crate::finite_type::{self, FiniteTypeLabel};
use crate::graph::{CoxeterGraph, GenSet, Order};

/// Coordinates of a vector of `V` in the basis of simple roots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootVector(pub Vec<FieldElement>);

/// A group element as the matrix of its action on `V`; column `j` is `w·α_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    n: usize,
    m: Vec<FieldElement>,
}

impl GroupElement {
    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &FieldElement {
        &self.m[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> RootVector {
        RootVector((0..self.n).map(|i| self.entry(i, j).clone()).collect())
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let e = self.entry(i, j);
                if i == j {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }
}

/// `w_0(J)` with a reduced word and the induced involution of `J`.
#[derive(Clone, Debug)]
pub struct Longest {
    pub element: GroupElement,
    pub word: Vec<usize>,
    /// `w_0(J)·α_t = −α_{sigma[t]}` for `t ∈ J`; identity outside `J`.
    pub sigma: Vec<usize>,
}

#[derive(Default)]
struct Caches {
    types: HashMap<GenSet, Option<Arc<Vec<FiniteTypeLabel>>>>,
    longest: HashMap<GenSet, Arc<Longest>>,
    roots: HashMap<GenSet, Arc<Vec<RootVector>>>,
}

/// A Coxeter system with its field, doubled Gram matrix and caches.
pub struct System {
    graph: CoxeterGraph,
    field: FieldSpec,
    gram: Vec<Vec<FieldElement>>,
    /// `nbrs[s]` lists `t ≠ s` with `G_st ≠ 0`.
    nbrs: Vec<Vec<usize>>,
    caches: RwLock<Caches>,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("graph", &self.graph)
            .field("n", &self.field.n())
            .finish()
    }
}

impl System {
    pub fn new(graph: CoxeterGraph) -> Result<Self> {
        Self::with_field_bound(graph, DEFAULT_MAX_N)
    }

    pub fn with_field_bound(graph: CoxeterGraph, bound: u64) -> Result<Self> {
        let field = FieldSpec::build_with_bound(graph.finite_labels(), bound)?;
        let n = graph.rank();
        let mut gram = vec![vec![field.zero(); n]; n];
        let mut nbrs = vec![Vec::new(); n];
        for s in 0..n {
            gram[s][s] = field.from_int(2);
            for t in 0..n {
                if s == t {
                    continue;
                }
                let g = match graph.bond(s, t) {
                    Order::Infinite => field.from_int(-2),
                    Order::Finite(m) => -&field.embed_cos(m as u64)?,
                };
                if !g.is_zero() {
                    nbrs[s].push(t);
                }
                gram[s][t] = g;
            }
        }
        Ok(System { graph, field, gram, nbrs, caches: RwLock::new(Caches::default()) })
    }

    pub fn graph(&self) -> &CoxeterGraph {
        &self.graph
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rank(&self) -> usize {
        self.graph.rank()
    }

    /// `G_st = 2B(α_s, α_t)`.
    pub fn gram(&self, s: usize, t: usize) -> &FieldElement {
        &self.gram[s][t]
    }

    // ---- vectors ----

    pub fn zero_vector(&self) -> RootVector {
        RootVector(vec![self.field.zero(); self.rank()])
    }

    pub fn simple_root(&self, s: usize) -> RootVector {
        let mut v = self.zero_vector();
        v.0[s] = self.field.one();
        v
    }

    /// `2B(u, v) = uᵀGv`.
    pub fn form2(&self, u: &RootVector, v: &RootVector) -> FieldElement {
        let mut acc = self.field.zero();
        for (s, us) in u.0.iter().enumerate() {
            if us.is_zero() {
                continue;
            }
            let gv = self.gram_row_dot(s, v);
            if !gv.is_zero() {
                acc.add_assign_ref(&self.field.mul(us, &gv));
            }
        }
        acc
    }

    /// `(Gv)_s`.
    fn gram_row_dot(&self, s: usize, v: &RootVector) -> FieldElement {
        let mut acc = v.0[s].mul_int(2);
        for &t in &self.nbrs[s] {
            if !v.0[t].is_zero() {
                acc.add_assign_ref(&self.field.mul(&self.gram[s][t], &v.0[t]));
            }
        }
        acc
    }

    /// In-place `v ← s·v`.
    pub fn apply_generator(&self, s: usize, v: &mut RootVector) {
        let c = self.gram_row_dot(s, v);
        v.0[s].sub_assign_ref(&c);
    }

    pub fn apply(&self, w: &GroupElement, v: &RootVector) -> RootVector {
        let n = self.rank();
        let mut out = self.zero_vector();
        for (j, vj) in v.0.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            for i in 0..n {
                let e = w.entry(i, j);
                if !e.is_zero() {
                    out.0[i].add_assign_ref(&self.field.mul(e, vj));
                }
            }
        }
        out
    }

    /// Sign of the first nonzero coordinate; for roots this is the sign of the root.
    pub fn sign(&self, v: &RootVector) -> i32 {
        v.0.iter()
            .find(|c| !c.is_zero())
            .map(|c| self.field.sign(c))
            .unwrap_or(0)
    }

    pub fn is_positive(&self, v: &RootVector) -> bool {
        self.sign(v) > 0
    }

    pub fn negate(&self, v: &RootVector) -> RootVector {
        RootVector(v.0.iter().map(|c| -c).collect())
    }

    /// `v` or `−v`, whichever is positive.
    pub fn positive_part(&self, v: &RootVector) -> RootVector {
        if self.sign(v) < 0 {
            self.negate(v)
        } else {
            v.clone()
        }
    }

    /// True if `u = ±v`.
    pub fn same_line(&self, u: &RootVector, v: &RootVector) -> bool {
        u == v || *u == self.negate(v)
    }

    /// Set of `s` in the support of `v`.
    pub fn support(&self, v: &RootVector) -> GenSet {
        GenSet::from_iter(v.0.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| i))
    }

    /// `v ⊥ α_s` for all `s ∈ j`.
    pub fn orthogonal_to(&self, v: &RootVector, j: GenSet) -> bool {
        j.iter().all(|s| self.gram_row_dot(s, v).is_zero())
    }

    pub fn format_vector(&self, v: &RootVector) -> String {
        let parts: Vec<String> = v
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let name = self.graph.name(i);
                if c.is_one() {
                    format!("a[{name}]")
                } else if (-c).is_one() {
                    format!("-a[{name}]")
                } else {
                    format!("({c})a[{name}]")
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    // ---- group elements ----

    pub fn identity(&self) -> GroupElement {
        let n = self.rank();
        let mut m = vec![self.field.zero(); n * n];
        for i in 0..n {
            m[i * n + i] = self.field.one();
        }
        GroupElement { n, m }
    }

    pub fn generator(&self, s: usize) -> GroupElement {
        let mut g = self.identity();
        self.right_mul_generator(&mut g, s);
        g
    }

    /// `w ← w·s`: `col_u −= G_su·col_s` for `u ≠ s`, then `col_s = −col_s`.
    pub fn right_mul_generator(&self, w: &mut GroupElement, s: usize) {
        let n = w.n;
        for &u in &self.nbrs[s] {
            let g = &self.gram[s][u];
            for i in 0..n {
                let cs = &w.m[i * n + s];
                if !cs.is_zero() {
                    let d = self.field.mul(g, cs);
                    w.m[i * n + u].sub_assign_ref(&d);
                }
            }
        }
        for i in 0..n {
            w.m[i * n + s].neg_in_place();
        }
    }

    /// `w ← s·w`: `row_s = −row_s − Σ_{u≠s} G_su·row_u`.
    pub fn left_mul_generator(&self, w: &mut GroupElement, s: usize) {
        let n = w.n;
        for j in 0..n {
            let mut acc = -&w.m[s * n + j];
            for &u in &self.nbrs[s] {
                let e = &w.m[u * n + j];
                if !e.is_zero() {
                    acc.sub_assign_ref(&self.field.mul(&self.gram[s][u], e));
                }
            }
            w.m[s * n + j] = acc;
        }
    }

    /// Product of a word read left to right.
    pub fn from_word(&self, word: &[usize]) -> GroupElement {
        let mut g = self.identity();
        for &s in word {
            self.right_mul_generator(&mut g, s);
        }
        g
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let n = a.n;
        let mut m = vec![self.field.zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = a.entry(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let y = b.entry(k, j);
                    if !y.is_zero() {
                        m[i * n + j].add_assign_ref(&self.field.mul(x, y));
                    }
                }
            }
        }
        GroupElement { n, m }
    }

    pub fn product<'a, I: IntoIterator<Item = &'a GroupElement>>(&self, it: I) -> GroupElement {
        let mut acc = self.identity();
        for g in it {
            acc = self.mul(&acc, g);
        }
        acc
    }

    /// The reflection `s_γ: v ↦ v − 2B(γ, v)γ`, for `B(γ, γ) = 1`.
    pub fn reflection(&self, gamma: &RootVector) -> GroupElement {
        let n = self.rank();
        let ggam: Vec<FieldElement> = (0..n).map(|j| self.gram_row_dot(j, gamma)).collect();
        let mut g = self.identity();
        for i in 0..n {
            if gamma.0[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if !ggam[j].is_zero() {
                    let d = self.field.mul(&gamma.0[i], &ggam[j]);
                    g.m[i * n + j].sub_assign_ref(&d);
                }
            }
        }
        g
    }

    fn column_sign(&self, w: &GroupElement, j: usize) -> i32 {
        (0..w.n)
            .map(|i| w.entry(i, j))
            .find(|c| !c.is_zero())
            .map(|c| self.field.sign(c))
            .unwrap_or(0)
    }

    /// True iff `ℓ(ws) < ℓ(w)`, i.e. `w·α_s` is negative.
    pub fn has_right_descent(&self, w: &GroupElement, s: usize) -> bool {
        self.column_sign(w, s) < 0
    }

    /// A reduced word for `w`, read left to right.
    pub fn reduced_word(&self, w: &GroupElement) -> Vec<usize> {
        let mut cur = w.clone();
        let mut stripped = Vec::new();
        'outer: loop {
            for s in 0..self.rank() {
                if self.has_right_descent(&cur, s) {
                    self.right_mul_generator(&mut cur, s);
                    stripped.push(s);
                    continue 'outer;
                }
            }
            break;
        }
        debug_assert!(cur.is_identity());
        stripped.reverse();
        stripped
    }

    pub fn length(&self, w: &GroupElement) -> usize {
        self.reduced_word(w).len()
    }

    pub fn inverse(&self, w: &GroupElement) -> GroupElement {
        let mut word = self.reduced_word(w);
        word.reverse();
        self.from_word(&word)
    }

    /// Positive roots sent to negative roots by `w`.
    pub fn inversions(&self, w: &GroupElement) -> Vec<RootVector> {
        // For a reduced word t_1…t_L, the roots are t_L⋯t_{j+1}·α_{t_j}.
        let word = self.reduced_word(w);
        let mut suffix = self.identity();
        let mut out = Vec::with_capacity(word.len());
        for &t in word.iter().rev() {
            out.push(suffix.column(t));
            self.right_mul_generator(&mut suffix, t);
        }
        out
    }

    /// `MᵀGM = G`.
    pub fn preserves_form(&self, w: &GroupElement) -> bool {
        let n = self.rank();
        let cols: Vec<RootVector> = (0..n).map(|j| w.column(j)).collect();
        (0..n).all(|i| (i..n).all(|j| self.form2(&cols[i], &cols[j]) == self.gram[i][j]))
    }

    /// Multiplicative order of `w`, if at most `cap`.
    pub fn order_of(&self, w: &GroupElement, cap: u64) -> Option<u64> {
        let mut p = w.clone();
        for k in 1..=cap {
            if p.is_identity() {
                return Some(k);
            }
            p = self.mul(&p, w);
        }
        None
    }

    // ---- rank-two subsystems ----

    /// Order of `s_β s_γ` for roots `β`, `γ`.
    pub fn pairwise_order(&self, beta: &RootVector, gamma: &RootVector) -> Result<Order> {
        if self.same_line(beta, gamma) {
            return Ok(Order::Finite(1));
        }
        let f = &self.field;
        let d = self.form2(beta, gamma);
        let d2 = f.mul(&d, &d);
        if f.sign(&(&d2 - &f.from_int(4))) >= 0 {
            return Ok(Order::Infinite);
        }
        let nd = -&d;
        // On span{β, γ}: s_β = [[-1, -d], [0, 1]], s_γ = [[1, 0], [-d, -1]].
        let sb = [[f.from_int(-1), nd.clone()], [f.zero(), f.one()]];
        let sg = [[f.one(), f.zero()], [nd, f.from_int(-1)]];
        let p2 = mul2(f, &sb, &sg);
        let cap = 4 * f.n() + 16;
        let mut acc = p2.clone();
        for k in 1..=cap {
            if acc[0][0].is_one() && acc[1][1].is_one() && acc[0][1].is_zero() && acc[1][0].is_zero() {
                return Ok(Order::Finite(k as u32));
            }
            acc = mul2(f, &acc, &p2);
        }
        Err(CoxError::Invariant(format!(
            "rank-two subsystem with |B| < 1 has order above {cap}"
        )))
    }

    /// Whether `Ψ` satisfies `B(β, γ) ∈ {−cos(π/m) : m ≥ 2} ∪ (−∞, −1]` pairwise.
    pub fn is_root_basis(&self, psi: &[RootVector]) -> Result<bool> {
        for (a, beta) in psi.iter().enumerate() {
            if self.form2(beta, beta) != self.field.from_int(2) {
                return Ok(false);
            }
            for gamma in &psi[a + 1..] {
                let d = self.form2(beta, gamma);
                match self.pairwise_order(beta, gamma)? {
                    Order::Finite(1) => return Ok(false),
                    Order::Finite(k) => match self.field.embed_cos(k as u64) {
                        Ok(c) if d == -&c => {}
                        _ => return Ok(false),
                    },
                    Order::Infinite => {
                        if self.field.sign(&d) >= 0 {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// Canonical simple system of the finite reflection subgroup generated by
    /// reflections in `psi`. Fails if more than `cap` positive roots appear.
    pub fn canonical_simple_system(
        &self,
        psi: &[RootVector],
        cap: usize,
    ) -> Result<Vec<RootVector>> {
        let mut roots: Vec<RootVector> = Vec::new();
        let mut seen: HashSet<RootVector> = HashSet::new();
        let gens: Vec<GroupElement> = psi.iter().map(|g| self.reflection(g)).collect();
        let mut queue = VecDeque::new();
        for g in psi {
            let p = self.positive_part(g);
            if seen.insert(p.clone()) {
                roots.push(p.clone());
                queue.push_back(p);
            }
        }
        while let Some(r) = queue.pop_front() {
            for g in &gens {
                let img = self.positive_part(&self.apply(g, &r));
                if seen.insert(img.clone()) {
                    if roots.len() >= cap {
                        return Err(CoxError::Budget(format!(
                            "reflection subgroup has more than {cap} positive roots"
                        )));
                    }
                    roots.push(img.clone());
                    queue.push_back(img);
                }
            }
        }
        let mut simple = Vec::new();
        for beta in &roots {
            let sb = self.reflection(beta);
            let ok = roots
                .iter()
                .filter(|g| *g != beta)
                .all(|g| self.is_positive(&self.apply(&sb, g)));
            if ok {
                simple.push(beta.clone());
            }
        }
        Ok(simple)
    }

    // ---- parabolic subgroups ----

    pub fn classify(&self, j: GenSet) -> Option<Arc<Vec<FiniteTypeLabel>>> {
        if let Some(v) = self.caches.read().expect("cache lock").types.get(&j) {
            return v.clone();
        }
        let v = finite_type::classify(&self.graph, j).map(Arc::new);
        self.caches.write().expect("cache lock").types.insert(j, v.clone());
        v
    }

    pub fn is_finite(&self, j: GenSet) -> bool {
        self.classify(j).is_some()
    }

    fn require_finite(&self, j: GenSet) -> Result<Arc<Vec<FiniteTypeLabel>>> {
        self.classify(j).ok_or_else(|| {
            CoxError::Invariant(format!("{} is not of finite type", self.graph.format_set(j)))
        })
    }

    /// Positive roots of the finite parabolic subsystem `Φ_J`.
    pub fn positive_roots(&self, j: GenSet) -> Result<Arc<Vec<RootVector>>> {
        if let Some(v) = self.caches.read().expect("cache lock").roots.get(&j) {
            return Ok(v.clone());
        }
        let types = self.require_finite(j)?;
        let expected: usize = types.iter().map(|l| l.name.positive_roots()).sum();
        let mut seen: HashSet<RootVector> = HashSet::new();
        let mut out = Vec::with_capacity(expected);
        let mut queue = VecDeque::new();
        for s in j.iter() {
            let r = self.simple_root(s);
            seen.insert(r.clone());
            out.push(r.clone());
            queue.push_back(r);
        }
        while let Some(r) = queue.pop_front() {
            for s in j.iter() {
                let mut img = r.clone();
                self.apply_generator(s, &mut img);
                if self.is_positive(&img) && seen.insert(img.clone()) {
                    out.push(img.clone());
                    queue.push_back(img);
                }
            }
        }
        ensure(out.len() == expected, || {
            format!(
                "{} has {} positive roots, expected {expected}",
                self.graph.format_set(j),
                out.len()
            )
        })?;
        let out = Arc::new(out);
        self.caches.write().expect("cache lock").roots.insert(j, out.clone());
        Ok(out)
    }

    /// `w_0(J)`, checked against the catalog diagram involution.
    pub fn longest(&self, j: GenSet) -> Result<Arc<Longest>> {
        if let Some(v) = self.caches.read().expect("cache lock").longest.get(&j) {
            return Ok(v.clone());
        }
        let types = self.require_finite(j)?;
        let expected: usize = types.iter().map(|l| l.name.positive_roots()).sum();
        let mut w = self.identity();
        let mut word = Vec::with_capacity(expected);
        'grow: loop {
            for s in j.iter() {
                if !self.has_right_descent(&w, s) {
                    self.right_mul_generator(&mut w, s);
                    word.push(s);
                    ensure(word.len() <= expected, || {
                        format!("longest element of {} too long", self.graph.format_set(j))
                    })?;
                    continue 'grow;
                }
            }
            break;
        }
        ensure(word.len() == expected, || {
            format!("longest element of {} has wrong length", self.graph.format_set(j))
        })?;
        let sigma = finite_type::w0_diagram_action(&self.graph, j)?;
        for t in j.iter() {
            let col = w.column(t);
            let want = self.negate(&self.simple_root(sigma[t]));
            ensure(col == want, || {
                format!(
                    "w0({}) does not send a[{}] to -a[{}]",
                    self.graph.format_set(j),
                    self.graph.name(t),
                    self.graph.name(sigma[t])
                )
            })?;
        }
        let out = Arc::new(Longest { element: w, word, sigma });
        self.caches.write().expect("cache lock").longest.insert(j, out.clone());
        Ok(out)
    }
}

fn mul2(f: &FieldSpec, a: &[[FieldElement; 2]; 2], b: &[[FieldElement; 2]; 2]) -> [[FieldElement; 2]; 2] {
    let e = |i: usize, j: usize| {
        let mut x = f.mul(&a[i][0], &b[0][j]);
        x.add_assign_ref(&f.mul(&a[i][1], &b[1][j]));
        x
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}
