pub mod error;
pub mod dot;
pub mod field;
pub mod finite_type;
pub mod geometry;
pub mod graph;
pub mod oracle;
pub mod groupoid;
pub mod presentation;
pub mod report;
pub mod symmetry;
pub mod tours;
