pub mod adversary;
pub mod attack;
pub mod haar;
pub mod hybrids;
