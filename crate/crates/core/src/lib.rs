pub mod embedding;
pub mod error;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod solver;
pub mod transcript;
pub mod types;
pub mod utility;
pub mod verbalizer;
