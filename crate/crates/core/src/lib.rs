#![allow(clippy::needless_range_loop)]

pub mod engine;
pub mod eqlift;
pub mod harness;
pub mod json;
pub mod kstruct;
pub mod lattice;
pub mod space;
pub mod sqo;
pub mod structure;
pub mod transfer;
