//! Seeded property suites over random Coxeter systems and subsets.
//! `COXCENT_SEED` overrides the default seed.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use coxcent::error::CoxError;
use coxcent::geometry::{RootVector, System};
use coxcent::graph::{CoxeterGraph, GenSet, Instance, Order};
use coxcent::groupoid::{CGraph, Groupoid, Step};
use coxcent::report::{analyze, Config as RunConfig};
use coxcent::tours;

pub const CASES: u32 = 256;
const DEFAULT_SEED: u64 = 0x00c0_ffee;
/// Labels keep the field degree small: `N | 12`.
const LABELS: [Option<u32>; 5] = [Some(2), Some(3), Some(4), Some(6), None];

fn runner() -> TestRunner {
    let seed = std::env::var("COXCENT_SEED").ok().and_then(|s| s.parse::<u64>().ok()).unwrap_or(DEFAULT_SEED);
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

#[derive(Clone, Debug)]
struct Case {
    rank: usize,
    labels: Vec<usize>,
    subset: u64,
}

impl Case {
    fn graph(&self) -> CoxeterGraph {
        let mut bonds = Vec::new();
        let mut k = 0;
        for a in 0..self.rank {
            for b in a + 1..self.rank {
                let m = match LABELS[self.labels[k]] {
                    Some(m) => Order::Finite(m),
                    None => Order::Infinite,
                };
                bonds.push((a, b, m));
                k += 1;
            }
        }
        CoxeterGraph::from_bonds(self.rank, &bonds)
    }

    fn system(&self) -> Arc<System> {
        Arc::new(System::new(self.graph()).unwrap())
    }

    fn cgraph(&self) -> Result<CGraph, CoxError> {
        let sys = self.system();
        CGraph::build(Arc::new(Groupoid::new(sys)), &GenSet(self.subset).to_vec(), 5_000)
    }
}

/// A path backbone labelled mostly 3, plus sparse extra bonds, so that `𝒞`
/// usually has several vertices.
fn case(min_rank: usize, max_rank: usize, max_subset: usize) -> impl Strategy<Value = Case> {
    (min_rank..=max_rank).prop_flat_map(move |rank| {
        let pairs = rank * (rank - 1) / 2;
        let backbone = prop_oneof![6 => Just(1usize), 1 => Just(2usize), 1 => Just(3usize), 1 => Just(4usize)];
        let extra = prop_oneof![12 => Just(0usize), 1 => Just(1usize), 1 => Just(4usize)];
        let lo = usize::from(max_subset > 0);
        (
            proptest::collection::vec(backbone, rank - 1),
            proptest::collection::vec(extra, pairs),
            proptest::collection::vec(0..rank, lo..=max_subset),
        )
            .prop_map(move |(path, mut labels, picks)| {
                let mut k = 0;
                for a in 0..rank {
                    for b in a + 1..rank {
                        if b == a + 1 {
                            labels[k] = path[a];
                        }
                        k += 1;
                    }
                }
                Case { rank, labels, subset: picks.iter().fold(0u64, |m, &s| m | 1 << s) }
            })
    })
}

fn words(rank: usize, max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..rank, 0..=max_len)
}

fn inversion_set(sys: &System, w: &coxcent::geometry::GroupElement) -> HashSet<RootVector> {
    sys.inversions(w).into_iter().collect()
}

pub fn length_of_multiple_equivalences() -> Result<(), String> {
    let strategy = case(2, 4, 0).prop_flat_map(|c| {
        let r = c.rank;
        (Just(c), words(r, 8), words(r, 8))
    });
    runner()
        .run(&strategy, |(c, u, v)| {
            let sys = c.system();
            let w1 = sys.from_word(&u);
            let w2 = sys.from_word(&v);
            let w12 = sys.mul(&w1, &w2);
            let lengths_add = sys.length(&w12) == sys.length(&w1) + sys.length(&w2);
            let p1 = inversion_set(&sys, &w1);
            let p2inv = inversion_set(&sys, &sys.inverse(&w2));
            let disjoint = p1.is_disjoint(&p2inv);
            let p12 = inversion_set(&sys, &w12);
            let p2 = inversion_set(&sys, &w2);
            let w2inv = sys.inverse(&w2);
            let moved: HashSet<RootVector> = p1.iter().map(|r| sys.apply(&w2inv, r)).collect();
            let split = moved.is_disjoint(&p2)
                && moved.len() + p2.len() == p12.len()
                && moved.iter().chain(p2.iter()).all(|r| p12.contains(r));
            prop_assert_eq!(lengths_add, disjoint);
            prop_assert_eq!(lengths_add, split);
            for s in 0..c.rank {
                let mut ws = w1.clone();
                sys.right_mul_generator(&mut ws, s);
                let up = sys.length(&ws) > sys.length(&w1);
                prop_assert_eq!(up, sys.is_positive(&w1.column(s)));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn form_is_preserved() -> Result<(), String> {
    let strategy = case(2, 4, 0).prop_flat_map(|c| {
        let r = c.rank;
        (Just(c), words(r, 12))
    });
    runner()
        .run(&strategy, |(c, u)| {
            let sys = c.system();
            let w = sys.from_word(&u);
            prop_assert!(sys.preserves_form(&w));
            prop_assert!(sys.mul(&w, &sys.inverse(&w)).is_identity());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn skip_budget<T>(r: Result<T, CoxError>) -> Result<T, TestCaseError> {
    match r {
        Ok(v) => Ok(v),
        Err(CoxError::Budget(m)) => Err(TestCaseError::reject(m)),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

pub fn loop_dichotomy_on_every_edge() -> Result<(), String> {
    runner()
        .run(&case(4, 7, 3), |c| {
            let cg = skip_budget(c.cgraph())?;
            let sys = cg.system();
            for e in cg.edges() {
                let fwd = &e.forward;
                prop_assert_eq!(e.is_loop(), e.source == e.target);
                prop_assert_eq!(e.is_loop(), fwd.loop_root.is_some());
                if let Some(root) = &fwd.loop_root {
                    prop_assert!(sys.is_positive(root));
                    prop_assert!(sys.orthogonal_to(root, coxcent::groupoid::tuple_set(cg.vertex(e.source))));
                    prop_assert_eq!(&fwd.element, &sys.reflection(root));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn loop_count_matches_lp() -> Result<(), String> {
    let strategy = (case(4, 7, 3), proptest::collection::vec(0usize..64, 0..10), 0usize..8);
    runner()
        .run(&strategy, |(c, walk, prefer)| {
            let cg = skip_budget(c.cgraph())?;
            let mut v = cg.base();
            let mut path: Vec<Step> = Vec::new();
            for pick in walk {
                let steps: Vec<Step> = (0..c.rank).filter_map(|s| cg.step_at(v, s)).collect();
                if steps.is_empty() {
                    break;
                }
                let st = steps[pick % steps.len()];
                path.push(st);
                v = cg.step_target(st);
            }
            let w = cg.path_element(&path);
            let std = cg
                .standard_expression(&w, cg.base(), Some(prefer % c.rank))
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(cg.path_element(&std), w.clone());
            prop_assert_eq!(cg.loop_count(&std), cg.lp(&w, cg.base()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn tour_path_identities() -> Result<(), String> {
    runner()
        .run(&case(4, 7, 3), |c| {
            let cg = skip_budget(c.cgraph())?;
            let t = skip_budget(tours::enumerate(&cg))?;
            skip_budget(tours::check_all_gbm(&cg, &t))?;
            for cell in &t.cells {
                prop_assert!(cg.path_element(&cell.boundary).is_identity());
            }
            for s in &t.shuttles {
                let p = cg.path_element(&s.closed_path());
                prop_assert_eq!(cg.system().order_of(&p, 64), Some(s.order as u64));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn relators_evaluate_to_identity() -> Result<(), String> {
    runner()
        .run(&case(4, 7, 3), |c| {
            let inst = Instance { name: "random".into(), graph: c.graph(), subset: GenSet(c.subset).to_vec() };
            let a = skip_budget(analyze(&inst, &RunConfig { bound: 1, budget: 5_000, tree_preference: None }))?;
            let sys = a.system();
            for r in a.pi1.relators.iter().chain(&a.pi1.simplified.relators) {
                prop_assert!(a.pi1.evaluate(sys, r).is_identity());
            }
            for r in &a.b.presentation.relators {
                prop_assert!(a.b.evaluate(sys, r).is_identity());
            }
            let nz = &a.normalizer.presentation;
            for r in &nz.presentation.relators {
                prop_assert!(nz.evaluate(sys, r).is_identity());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}
