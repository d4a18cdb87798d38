//! Command line and HTTP front ends for the inverse transportation toolkit.

pub mod api;
pub mod commands;
pub mod session;
pub mod store;
