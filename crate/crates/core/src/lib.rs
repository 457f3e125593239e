pub mod analysis;
pub mod cli;
pub mod coherent;
pub mod detection;
pub mod elements;
pub mod error;
pub mod gates;
pub mod pipelines;
pub mod program;
pub mod state;
pub mod synthesis;
