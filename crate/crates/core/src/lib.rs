pub mod bundle;
pub mod cli;
pub mod distribution;
pub mod expr;
pub mod operators;
pub mod quadrature;
pub mod topology;
pub mod verify;
