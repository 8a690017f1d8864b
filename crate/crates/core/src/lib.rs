//! Graph workspaces, metamodel-defined DSLs, model queries and
//! comment-driven template code generation.

pub mod graph;
pub mod metamodel;
pub mod query;
pub mod script;
pub mod template;
pub mod codegen;
pub mod synth;
pub mod store;
pub mod batch;
