pub mod analysis;
pub mod config;
pub mod controldesign;
pub mod detgeom;
pub mod detmetrics;
pub mod error;
pub mod hitprob;
pub mod io;
pub mod lti;
pub mod pipeline;
pub mod report;
pub mod simengine;
pub mod stats;
pub mod svg;
pub mod synthetic;
pub mod turretmodel;
pub mod units;

pub use error::{Error, ErrorKind, Result};
