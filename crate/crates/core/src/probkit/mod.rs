//! Finite-alphabet probability types, information measures in nats, and the
//! simplex grids that discretize every minimization over distributions.

mod dist;
mod grid;
mod info;

pub use dist::{Channel, Distribution, JointDistribution, LOAD_TOLERANCE};
pub use grid::{
    enumerate_couplings, enumerate_joints_fixed_row, FixedRowLattice, SimplexGrid,
    SimplexPoints, MARGINAL_SLACK,
};
pub use info::{
    compose, conditional_divergence, entropy, kl_divergence, linf_distance, mutual_information,
};

pub(crate) use info::{entropy_slice, kl_slice, mutual_information_table};
