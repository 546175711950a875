pub mod density;
pub mod label;
pub mod norm;
pub mod purified;
pub mod symmetry;
