//! Exact integer lattices with finite signed-permutation group actions.

pub mod exactla;
pub mod fingroup;
pub mod glattice;
pub mod cohomology;
pub mod resolutions;
pub mod qp;
pub mod cayleymaps;
