//! Ranking news-event triples against short descriptions of notable events.

pub mod corpus;
pub mod entities;
pub mod error;
pub mod eval;
pub mod features;
pub mod labels;
pub mod ltr;
pub mod pairing;
pub mod synth;
pub mod textproc;

pub use error::{Error, Result};
