//! Seeded random models and brute-force reference checkers.
//!
//! The checkers restate the rules directly over the raw node and link
//! lists, without the indexes or ordering tricks of the real code, so a
//! disagreement points at one side or the other.

pub mod fuzz;
pub mod gen;
pub mod oracle;

pub use rand;
