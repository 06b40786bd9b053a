//! Autoformalization harness: turns informal olympiad problems into candidate
//! Lean 4 theorem statements with an ensemble of models refined by compiler
//! feedback, stores candidates for human annotation, and scores both
//! formalization quality and theorem-proving ability.

pub mod config;
pub mod contextkb;
pub mod corpus;
pub mod evalmetrics;
pub mod formalize;
pub mod hub;
pub mod lean_syntax;
pub mod leanrun;
pub mod modelgw;
mod pool;
mod proc;
pub mod prover;
