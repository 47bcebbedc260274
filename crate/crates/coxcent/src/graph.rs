//! Coxeter graphs, generator subsets and the input document format.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of generators; subsets are stored as 64-bit masks.
pub const MAX_GENERATORS: usize = 64;

/// A bond label or an element order: a positive integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn is_finite(self) -> bool {
        matches!(self, Order::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Order::Finite(m) => Some(m),
            Order::Infinite => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(m) => write!(f, "{m}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Order::Finite(m) => s.serialize_u32(*m),
            Order::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) if m >= 1 && m <= u32::MAX as i64 => Ok(Order::Finite(m as u32)),
            Raw::Int(m) => Err(serde::de::Error::custom(format!("invalid label {m}"))),
            Raw::Str(s) if s == "inf" => Ok(Order::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "invalid label {s:?}, expected an integer or \"inf\""
            ))),
        }
    }
}

/// A subset of generators as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenSet(pub u64);

impl FromIterator<usize> for GenSet {
    fn from_iter<I: IntoIterator<Item = usize>>(it: I) -> Self {
        GenSet(it.into_iter().fold(0, |acc, s| acc | (1u64 << s)))
    }
}

impl GenSet {
    pub const EMPTY: GenSet = GenSet(0);

    pub fn singleton(s: usize) -> Self {
        GenSet(1 << s)
    }

    pub fn full(n: usize) -> Self {
        if n == 64 {
            GenSet(u64::MAX)
        } else {
            GenSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, s: usize) -> bool {
        self.0 >> s & 1 == 1
    }

    pub fn insert(&mut self, s: usize) {
        self.0 |= 1 << s;
    }

    pub fn remove(&mut self, s: usize) {
        self.0 &= !(1 << s);
    }

    pub fn with(self, s: usize) -> Self {
        GenSet(self.0 | 1 << s)
    }

    pub fn without(self, s: usize) -> Self {
        GenSet(self.0 & !(1 << s))
    }

    pub fn union(self, o: GenSet) -> Self {
        GenSet(self.0 | o.0)
    }

    pub fn intersection(self, o: GenSet) -> Self {
        GenSet(self.0 & o.0)
    }

    pub fn difference(self, o: GenSet) -> Self {
        GenSet(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, o: GenSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(s)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("too many generators: {0} (at most {MAX_GENERATORS})")]
    TooManyGenerators(usize),
}

/// Coxeter graph: ordered generator names and a symmetric bond matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoxeterGraph {
    names: Vec<String>,
    bonds: Vec<Vec<Order>>,
}

impl CoxeterGraph {
    /// Graph with all bonds equal to 2.
    pub fn new(names: Vec<String>) -> Result<Self, GraphError> {
        let n = names.len();
        if n > MAX_GENERATORS {
            return Err(GraphError::TooManyGenerators(n));
        }
        let bonds = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Order::Finite(if i == j { 1 } else { 2 }))
                    .collect()
            })
            .collect();
        Ok(CoxeterGraph { names, bonds })
    }

    /// Graph with generators `s1..sn` and the given bonds (0-based indices).
    pub fn from_bonds(n: usize, edges: &[(usize, usize, Order)]) -> Self {
        let names = (1..=n).map(|i| format!("s{i}")).collect();
        let mut g = CoxeterGraph::new(names).expect("rank within bound");
        for &(a, b, m) in edges {
            g.set_bond(a, b, m);
        }
        g
    }

    pub fn set_bond(&mut self, a: usize, b: usize, m: Order) {
        assert!(a != b, "diagonal bonds are fixed at 1");
        assert!(m != Order::Finite(0) && m != Order::Finite(1));
        self.bonds[a][b] = m;
        self.bonds[b][a] = m;
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn bond(&self, s: usize, t: usize) -> Order {
        self.bonds[s][t]
    }

    pub fn all(&self) -> GenSet {
        GenSet::full(self.rank())
    }

    /// `s` and `t` are joined in the Coxeter graph (`m ≥ 3`).
    pub fn adjacent(&self, s: usize, t: usize) -> bool {
        s != t && self.bonds[s][t] != Order::Finite(2)
    }

    /// Distinct finite labels `m ≥ 3` occurring in the graph.
    pub fn finite_labels(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for i in 0..self.rank() {
            for j in i + 1..self.rank() {
                if let Order::Finite(m) = self.bonds[i][j] {
                    if m >= 3 && !out.contains(&(m as u64)) {
                        out.push(m as u64);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Connected components of `Γ_J`, ordered by least element.
    pub fn components(&self, j: GenSet) -> Vec<GenSet> {
        let mut remaining = j;
        let mut out = Vec::new();
        while let Some(start) = remaining.min() {
            let mut comp = GenSet::singleton(start);
            let mut stack = vec![start];
            while let Some(s) = stack.pop() {
                for t in remaining.iter() {
                    if !comp.contains(t) && self.adjacent(s, t) {
                        comp.insert(t);
                        stack.push(t);
                    }
                }
            }
            remaining = remaining.difference(comp);
            out.push(comp);
        }
        out
    }

    /// `J_∼K`: union of the components of `Γ_{J∪K}` meeting `K`.
    pub fn tilde_closure(&self, j: GenSet, k: GenSet) -> GenSet {
        self.components(j.union(k))
            .into_iter()
            .filter(|c| !c.intersection(k).is_empty())
            .fold(GenSet::EMPTY, GenSet::union)
    }

    /// Elements of `S ∖ J` adjacent to no element of `J`.
    pub fn perp(&self, j: GenSet) -> GenSet {
        GenSet::from_iter(
            self.all()
                .difference(j)
                .iter()
                .filter(|&s| j.iter().all(|t| !self.adjacent(s, t))),
        )
    }

    /// Induced subgraph on `J`, generators renumbered in increasing order.
    pub fn restrict(&self, j: GenSet) -> CoxeterGraph {
        let idx = j.to_vec();
        CoxeterGraph {
            names: idx.iter().map(|&s| self.names[s].clone()).collect(),
            bonds: idx
                .iter()
                .map(|&a| idx.iter().map(|&b| self.bonds[a][b]).collect())
                .collect(),
        }
    }

    pub fn format_set(&self, j: GenSet) -> String {
        let names: Vec<&str> = j.iter().map(|s| self.name(s)).collect();
        format!("{{{}}}", names.join(","))
    }

    pub fn format_tuple(&self, x: &[u8]) -> String {
        let names: Vec<&str> = x.iter().map(|&s| self.name(s as usize)).collect();
        format!("({})", names.join(","))
    }
}

/// A parsed input document: a Coxeter graph plus the ordered subset `x_I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub graph: CoxeterGraph,
    /// Generator indices in the order given, i.e. the tuple `x_I`.
    pub subset: Vec<usize>,
}

impl Instance {
    pub fn subset_set(&self) -> GenSet {
        GenSet::from_iter(self.subset.iter().copied())
    }

    /// Renders the instance back into the input format.
    pub fn to_document(&self) -> String {
        let g = &self.graph;
        let quote = |s: &str| format!("{s:?}");
        let mut out = format!("name = {}\n", quote(&self.name));
        let gens: Vec<String> = g.names().iter().map(|n| quote(n)).collect();
        out.push_str(&format!("generators = [{}]\n", gens.join(", ")));
        let sub: Vec<String> = self.subset.iter().map(|&s| quote(g.name(s))).collect();
        out.push_str(&format!("subset = [{}]\n", sub.join(", ")));
        out.push_str("edges = [\n");
        for a in 0..g.rank() {
            for b in a + 1..g.rank() {
                let m = g.bond(a, b);
                if m == Order::Finite(2) {
                    continue;
                }
                let label = match m {
                    Order::Finite(k) => k.to_string(),
                    Order::Infinite => "\"inf\"".to_string(),
                };
                out.push_str(&format!(
                    "  {{ a = {}, b = {}, m = {} }},\n",
                    quote(g.name(a)),
                    quote(g.name(b)),
                    label
                ));
            }
        }
        out.push_str("]\n");
        out
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    name: toml::Spanned<String>,
    generators: Vec<toml::Spanned<String>>,
    #[serde(default)]
    edges: Vec<toml::Spanned<RawEdge>>,
    #[serde(default)]
    subset: Vec<toml::Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    a: toml::Spanned<String>,
    b: toml::Spanned<String>,
    m: toml::Spanned<toml::Value>,
}

fn line_col(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    format!("line {line}, column {col}")
}

fn parse_error(text: &str, span: std::ops::Range<usize>, message: String) -> GraphError {
    GraphError::Parse {
        location: line_col(text, span.start),
        message,
    }
}

/// Parses an input document (TOML; see the repository README for the grammar).
pub fn parse_instance(text: &str) -> Result<Instance, GraphError> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| GraphError::Parse {
        location: e
            .span()
            .map(|s| line_col(text, s.start))
            .unwrap_or_else(|| "document".to_string()),
        message: e.message().to_string(),
    })?;
    if raw.generators.len() > MAX_GENERATORS {
        return Err(GraphError::TooManyGenerators(raw.generators.len()));
    }
    let mut names: Vec<String> = Vec::new();
    for g in &raw.generators {
        let name = g.get_ref().trim().to_string();
        if name.is_empty() {
            return Err(parse_error(text, g.span(), "empty generator name".into()));
        }
        if names.contains(&name) {
            return Err(parse_error(
                text,
                g.span(),
                format!("duplicate generator name {name:?}"),
            ));
        }
        names.push(name);
    }
    let mut graph = CoxeterGraph::new(names)?;
    let lookup = |graph: &CoxeterGraph, s: &toml::Spanned<String>| {
        graph
            .index_of(s.get_ref().trim())
            .ok_or_else(|| parse_error(text, s.span(), format!("unknown generator {:?}", s.get_ref())))
    };
    let mut seen = std::collections::HashSet::new();
    for e in &raw.edges {
        let edge = e.get_ref();
        let a = lookup(&graph, &edge.a)?;
        let b = lookup(&graph, &edge.b)?;
        if a == b {
            return Err(parse_error(text, e.span(), "edge joins a generator to itself".into()));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(parse_error(text, e.span(), "duplicate edge".into()));
        }
        let m = match edge.m.get_ref() {
            toml::Value::Integer(k) if *k >= 2 && *k <= u32::MAX as i64 => Order::Finite(*k as u32),
            toml::Value::Integer(k) => {
                return Err(parse_error(
                    text,
                    edge.m.span(),
                    format!("bond label {k} is below 2"),
                ))
            }
            toml::Value::String(s) if s == "inf" => Order::Infinite,
            other => {
                return Err(parse_error(
                    text,
                    edge.m.span(),
                    format!("bond label must be an integer or \"inf\", found {other}"),
                ))
            }
        };
        graph.set_bond(a, b, m);
    }
    let mut subset = Vec::new();
    for s in &raw.subset {
        let idx = lookup(&graph, s)?;
        if subset.contains(&idx) {
            return Err(parse_error(
                text,
                s.span(),
                format!("generator {:?} repeated in subset", s.get_ref()),
            ));
        }
        subset.push(idx);
    }
    Ok(Instance {
        name: raw.name.into_inner(),
        graph,
        subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE: &str = r#"
name = "worked example"
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

    #[test]
    fn parses_example() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let g = &inst.graph;
        assert_eq!(g.rank(), 6);
        assert_eq!(g.bond(1, 2), Order::Finite(4));
        assert_eq!(g.bond(2, 1), Order::Finite(4));
        assert_eq!(g.bond(0, 5), Order::Finite(2));
        assert_eq!(g.bond(3, 3), Order::Finite(1));
        assert_eq!(inst.subset, vec![0, 2, 3]);
        let again = parse_instance(&inst.to_document()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn default_bonds_and_infinity() {
        let text = "name = \"x\"\ngenerators = [\"a\", \"b\", \"c\"]\nedges = [{ a = \"a\", b = \"c\", m = \"inf\" }]\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.graph.bond(0, 1), Order::Finite(2));
        assert_eq!(inst.graph.bond(0, 2), Order::Infinite);
        assert!(inst.subset.is_empty());
    }

    #[test]
    fn parse_errors_carry_locations() {
        let dup = "name = \"x\"\ngenerators = [\"a\", \"a\"]\n";
        let err = parse_instance(dup).unwrap_err().to_string();
        assert!(err.contains("duplicate generator") && err.contains("line 2"), "{err}");
        let unknown = "name = \"x\"\ngenerators = [\"a\"]\nedges = [{ a = \"a\", b = \"z\", m = 3 }]\n";
        let err = parse_instance(unknown).unwrap_err().to_string();
        assert!(err.contains("unknown generator") && err.contains("line 3"), "{err}");
        let low = "name = \"x\"\ngenerators = [\"a\", \"b\"]\nedges = [{ a = \"a\", b = \"b\", m = 1 }]\n";
        assert!(parse_instance(low).unwrap_err().to_string().contains("below 2"));
        let bad = "name = \"x\"\ngenerators = [\"a\", \"b\"]\nedges = [{ a = \"a\", b = \"b\", m = \"oo\" }]\n";
        assert!(parse_instance(bad).is_err());
        assert!(parse_instance("name = ").is_err());
    }

    #[test]
    fn tilde_closure_examples() {
        let g = parse_instance(EXAMPLE).unwrap().graph;
        let i = GenSet::from_iter([0, 2, 3]);
        assert_eq!(g.tilde_closure(i, GenSet::singleton(4)), GenSet::from_iter([2, 3, 4]));
        assert_eq!(g.tilde_closure(i, GenSet::singleton(1)), GenSet::from_iter([0, 1, 2, 3]));
        assert_eq!(g.tilde_closure(i, GenSet::singleton(5)), GenSet::singleton(5));
    }

    #[test]
    fn genset_ops() {
        let a = GenSet::from_iter([1, 3, 5]);
        assert_eq!(a.to_vec(), vec![1, 3, 5]);
        assert_eq!(a.len(), 3);
        assert!(a.contains(3) && !a.contains(2));
        assert_eq!(a.without(3).with(0).to_vec(), vec![0, 1, 5]);
        assert_eq!(GenSet::full(64).len(), 64);
    }
}
