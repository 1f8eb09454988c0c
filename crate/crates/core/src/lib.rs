pub mod descriptor;
pub mod dsl;
pub mod featmap;
pub mod ingest;
pub mod query;
pub mod segment;
pub mod simsearch;
pub mod task;
pub mod engine;
