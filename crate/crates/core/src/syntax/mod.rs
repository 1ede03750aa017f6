//! Concrete textual syntax: lexer, parser, canonical printer and project
//! loading for `.amw` files.

pub mod lexer;
pub mod parser;
pub mod printer;
pub mod project;

pub use parser::{parse_expression, parse_literal_list, parse_literal_text, parse_model,
    parse_source, SourceUnit};
pub use printer::{print_expr, print_file, print_model, source_paths};
pub use project::{collect_sources, load_project, LoadError};
