//! Comparison methods.

pub mod granger;
pub mod ksg;

pub use granger::{granger_f_test, GrangerResult};
pub use ksg::{ksg_mutual_information, mi_pushforward_score, MiEstimate};
