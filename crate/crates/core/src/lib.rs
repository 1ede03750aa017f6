//! Core of the model workbench: a UML-flavored textual modeling language
//! that is parsed, checked, executed and tested directly, plus a catalog of
//! behavior-preserving model refactorings and a template code generator.
//!
//! Modules:
//! - [`model`]: the in-memory notation set and its static semantics
//! - [`syntax`]: parser, canonical printer, project loading
//! - [`mod@eval`]: constraint evaluation over a runtime object store
//! - [`runtime`]: object instantiation, method dispatch, traces
//! - [`testkit`]: fixtures, drivers, oracles, suite runner
//! - [`testgen`]: statechart exploration and coverage test derivation
//! - [`refactor`]: transformation catalog with context conditions
//! - [`codegen`]: placeholder/loop template rendering

pub mod codegen;
pub mod diag;
pub mod eval;
pub mod model;
pub mod refactor;
pub mod runtime;
pub mod syntax;
pub mod testgen;
pub mod testkit;

pub use diag::{Diagnostic, Severity};
pub use eval::{eval, EvalContext, EvalError, Value};
pub use model::check::{check_wellformed, lookup_member, published_surface, PublishedSurface};
pub use model::{Model, TestCategory};
pub use runtime::{instantiate, Engine, ExecBudget, ObjId, ObjectStore};
pub use syntax::{load_project, parse_model, parse_source, print_model, SourceUnit};
pub use testkit::{run_suite, run_test, SuiteFilter, SuiteReport, Verdict};
