//! Dynamic fault tree synthesis and Markov-chain based safety analysis.

pub mod dft;
pub mod engine;
pub mod io;
pub mod measures;
pub mod rewrite;
pub mod scenario;
pub mod approx;
pub mod statespace;
