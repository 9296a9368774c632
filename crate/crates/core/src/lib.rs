pub mod dsl;
pub mod executor;
pub mod fmgd;
pub mod ilp;
pub mod ir;
pub mod random;
pub mod smt;
pub mod solver;
pub mod zoo;
