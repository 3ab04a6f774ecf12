//! Command-line front end and HTTP control plane for resilab experiments.

pub mod api;
pub mod report;
pub mod store;

pub use api::router;
pub use store::{EventBatch, Handle, Status, Store, StoreError};
