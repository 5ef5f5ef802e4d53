pub mod crypto;
pub mod geometry;
pub mod protocol;
pub mod sim;
pub mod cli;
