pub mod error;
pub mod field;
pub mod io;
pub mod model_io;
pub mod network;
pub mod penalty;
pub mod quadrature;
pub mod rng;
pub mod datagen;
pub mod solver;
pub mod analysis;
pub mod cli;
