pub mod control;
pub mod data;
pub mod federation;
pub mod interpret;
pub mod metrics;
pub mod model;
pub mod nam;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod task;

mod error;
mod parallel;

pub use error::{Error, Result};
pub use task::Task;
