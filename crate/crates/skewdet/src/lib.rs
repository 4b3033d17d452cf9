//! File formats, tiling front end and the batch CLI around `skewdet-core`.

pub mod annotation;
pub mod cli;
pub mod detections;
pub mod error;
mod lines;
pub mod report;

pub use annotation::{parse_dota, parse_srss, parse_srss_contour, Annotation, ContourRecord};
pub use cli::run_with;
pub use detections::{read_detections, write_detections, ClassMap, DetectionRecord};
pub use error::IoError;
pub use report::{evaluate_files, EvalReportJson, TilePlanJson};
