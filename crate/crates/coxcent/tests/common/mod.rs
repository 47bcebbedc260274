#![allow(dead_code)]

pub mod props;

use coxcent::finite_type::{Family, TypeName};
use coxcent::graph::{parse_instance, GenSet, Instance};
use coxcent::report::{analyze, Analysis, Config};

pub const WORKED_EXAMPLE: &str = include_str!("../../instances/worked_example.toml");
/// Tree choice that keeps the three named edges out of the spanning tree.
pub const WORKED_TREE: &str = "!s1,s5,s6:s2; !s2,s4,s5:s3; !s2,s6,s5:s1";

pub fn worked_example(bound: usize) -> Analysis {
    let inst = parse_instance(WORKED_EXAMPLE).unwrap();
    let config = Config { bound, tree_preference: Some(WORKED_TREE.into()), ..Config::default() };
    analyze(&inst, &config).unwrap()
}

/// Finite test matrix: A1–A4, B2–B4, D4, F4, H3, I2(5..=8).
pub fn finite_types() -> Vec<TypeName> {
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push(TypeName::new(Family::A, n));
    }
    for n in 2..=4 {
        out.push(TypeName::new(Family::B, n));
    }
    out.push(TypeName::new(Family::D, 4));
    out.push(TypeName::new(Family::F, 4));
    out.push(TypeName::new(Family::H, 3));
    for m in 5..=8 {
        out.push(TypeName::i2(m));
    }
    out
}

/// Every nonempty-or-empty subset `I` of a finite type, as instances.
pub fn finite_instances() -> Vec<(TypeName, Instance)> {
    let mut out = Vec::new();
    for ty in finite_types() {
        let graph = ty.graph();
        let n = graph.rank();
        for mask in 0..(1u64 << n) {
            let subset = GenSet(mask).to_vec();
            let name = format!("{ty} I={}", graph.format_set(GenSet(mask)));
            out.push((ty, Instance { name, graph: graph.clone(), subset }));
        }
    }
    out
}
