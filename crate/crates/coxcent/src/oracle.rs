//! Brute-force oracle for finite `W`: enumerate the group as matrices and
//! compute the centralizer and normalizer of `W_I` directly.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{CoxError, Result};
use crate::geometry::{GroupElement, System};

pub const DEFAULT_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub group_order: u64,
    pub parabolic_order: u64,
    pub centralizer_order: u64,
    pub normalizer_order: u64,
    /// Reduced words of a greedy generating set of `Z_W(W_I)`.
    pub centralizer_generators: Vec<Vec<usize>>,
}

/// BFS over right multiplication by generators; `words[i]` reaches `elements[i]`.
pub struct Enumeration {
    pub elements: Vec<GroupElement>,
    pub words: Vec<Vec<usize>>,
}

pub fn enumerate_group(sys: &System, gens: &[usize], cap: usize) -> Result<Enumeration> {
    let mut index: HashMap<GroupElement, usize> = HashMap::new();
    let id = sys.identity();
    index.insert(id.clone(), 0);
    let mut elements = vec![id];
    let mut words = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for &s in gens {
            let mut w = elements[i].clone();
            sys.right_mul_generator(&mut w, s);
            if index.contains_key(&w) {
                continue;
            }
            if elements.len() >= cap {
                return Err(CoxError::Budget(format!("group too large for oracle (cap {cap})")));
            }
            index.insert(w.clone(), elements.len());
            let mut word = words[i].clone();
            word.push(s);
            elements.push(w);
            words.push(word);
            queue.push_back(elements.len() - 1);
        }
    }
    Ok(Enumeration { elements, words })
}

fn subgroup_closure(sys: &System, gens: &[GroupElement]) -> HashSet<GroupElement> {
    let id = sys.identity();
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(w) = queue.pop_front() {
        for g in gens {
            let v = sys.mul(&w, g);
            if seen.insert(v.clone()) {
                queue.push_back(v);
            }
        }
    }
    seen
}

pub fn brute_force_centralizer(sys: &System, subset: &[usize], cap: usize) -> Result<OracleResult> {
    let all: Vec<usize> = (0..sys.rank()).collect();
    let group = enumerate_group(sys, &all, cap)?;
    let parabolic = enumerate_group(sys, subset, cap)?;
    let parabolic_set: HashSet<&GroupElement> = parabolic.elements.iter().collect();
    let gens: Vec<GroupElement> = subset.iter().map(|&s| sys.generator(s)).collect();
    let mut centralizer = Vec::new();
    let mut normalizer_order = 0u64;
    for (i, w) in group.elements.iter().enumerate() {
        let winv = sys.inverse(w);
        let conj: Vec<GroupElement> = gens.iter().map(|s| sys.mul(&sys.mul(w, s), &winv)).collect();
        if conj.iter().zip(&gens).all(|(c, s)| c == s) {
            centralizer.push(i);
        }
        if conj.iter().all(|c| parabolic_set.contains(c)) {
            normalizer_order += 1;
        }
    }
    let mut chosen: Vec<GroupElement> = Vec::new();
    let mut words = Vec::new();
    let mut span = subgroup_closure(sys, &chosen);
    for &i in &centralizer {
        let w = &group.elements[i];
        if span.contains(w) {
            continue;
        }
        chosen.push(w.clone());
        words.push(group.words[i].clone());
        span = subgroup_closure(sys, &chosen);
    }
    Ok(OracleResult {
        group_order: group.elements.len() as u64,
        parabolic_order: parabolic.elements.len() as u64,
        centralizer_order: centralizer.len() as u64,
        normalizer_order,
        centralizer_generators: words,
    })
}
