//! Worst-case revenue assignment of budget-constrained travelers to
//! capacitated mobility services, with dual-based pricing and brute-force
//! property verification.

pub mod cli;
pub mod lp;
pub mod mechanism;
pub mod model;
pub mod verify;
