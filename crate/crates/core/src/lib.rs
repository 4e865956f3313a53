pub mod analysis;
pub mod cli;
pub mod machine;
pub mod syntax;
pub mod trace_format;
pub mod tracer;
