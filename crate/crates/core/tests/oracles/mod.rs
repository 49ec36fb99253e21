//! Reference implementations shared by the integration tests and the
//! acceptance runner. Nothing here calls the code under test except to
//! build inputs.
#![allow(dead_code)]

pub mod implicature;
pub mod lattice;
pub mod network;
pub mod strat;
