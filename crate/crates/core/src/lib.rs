pub mod clustering;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod models;
pub mod seed;
pub mod selection;
pub mod text;

pub use error::{Error, ErrorKind, Result};
