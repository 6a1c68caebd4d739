//! Toolkit for out-of-vocabulary scene-text benchmarks.
//!
//! Builds an in-vocabulary dictionary from a harmonized corpus, derives
//! OOV-constrained validation and test splits, and scores end-to-end
//! text-spotting and cropped-word recognition submissions separately on
//! in-vocabulary (IV) and out-of-vocabulary (OOV) words.

pub mod analysis;
pub mod e2e;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod model;
pub mod rec;
pub mod vocab;

pub use error::{Error, Result, Violation};
pub use model::{Alphabet, EvalConfig, ImageAnnotation, Point2D, Polygon, Split, TextInstance};
