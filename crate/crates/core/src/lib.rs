//! Template-driven generation of unit tests and documentation for Java
//! methods. A template pairs a test method skeleton with a description;
//! invocations bind its placeholders for one focal method each.

pub mod doc_generation;
pub mod invocation_store;
pub mod lexer;
pub mod names;
pub mod pipeline;
pub mod placeholder_typing;
pub mod source_model;
pub mod template_catalog;
pub mod test_generation;
