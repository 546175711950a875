pub mod bounds;
pub mod op;
