//! Template-parameterized text generation from models.
//!
//! Template syntax: `${var.field}` placeholders, `@foreach <kind> <var>@ …
//! @end@` loops (kinds: class, attribute, method, state, transition,
//! test), `@if [!]<var.field>@ … @end@` conditionals and `@file <path>@ …
//! @end@` output-file blocks. `@@` renders a literal `@`. Rendering is a
//! pure function of (model, template).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::diag::{codes, Diagnostic};
use crate::model::{
    AttributeDef, ClassDef, MethodDef, Model, Statechart, TestCase, TransitionDef,
};
use crate::syntax::printer::print_expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterKind {
    Class,
    Attribute,
    Method,
    State,
    Transition,
    Test,
}

impl IterKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "class" => Some(IterKind::Class),
            "attribute" => Some(IterKind::Attribute),
            "method" => Some(IterKind::Method),
            "state" => Some(IterKind::State),
            "transition" => Some(IterKind::Transition),
            "test" => Some(IterKind::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Text(String),
    Placeholder {
        var: String,
        field: String,
        line: u32,
    },
    Foreach {
        kind: IterKind,
        var: String,
        body: Vec<Node>,
        line: u32,
    },
    If {
        negated: bool,
        var: String,
        field: String,
        body: Vec<Node>,
        line: u32,
    },
    File {
        path: Vec<Node>,
        body: Vec<Node>,
        line: u32,
    },
}

#[derive(Clone, Debug)]
pub struct Template {
    pub name: String,
    nodes: Vec<Node>,
}

/// Rendered files: unique relative paths plus content.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenOutput {
    pub files: Vec<(String, String)>,
}

fn template_err(line: u32, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(codes::E_TEMPLATE, line, 1, message)
}

/// Parses template text. Directives are delimited by `@…@`; nesting must
/// be proper.
pub fn parse_template(name: &str, text: &str) -> Result<Template, Diagnostic> {
    let mut parser = TplParser {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
    };
    let nodes = parser.parse_nodes(&mut Vec::new())?;
    Ok(Template {
        name: name.to_string(),
        nodes,
    })
}

struct TplParser {
    chars: Vec<char>,
    i: usize,
    line: u32,
}

impl TplParser {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied();
        if let Some(c) = c {
            self.i += 1;
            if c == '\n' {
                self.line += 1;
            }
        }
        c
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    /// Parses until an `@end@` matching the current nesting (or EOF at the
    /// top level). `stack` tracks open directives for error messages.
    fn parse_nodes(&mut self, stack: &mut Vec<&'static str>) -> Result<Vec<Node>, Diagnostic> {
        let mut nodes = Vec::new();
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    if let Some(open) = stack.last() {
                        return Err(template_err(
                            self.line,
                            format!("unterminated @{open}@ (missing @end@)"),
                        ));
                    }
                    if !text.is_empty() {
                        nodes.push(Node::Text(std::mem::take(&mut text)));
                    }
                    return Ok(nodes);
                }
                Some('$') if self.chars.get(self.i + 1) == Some(&'{') => {
                    if !text.is_empty() {
                        nodes.push(Node::Text(std::mem::take(&mut text)));
                    }
                    let line = self.line;
                    self.bump();
                    self.bump();
                    let mut path = String::new();
                    loop {
                        match self.bump() {
                            Some('}') => break,
                            Some(c) => path.push(c),
                            None => {
                                return Err(template_err(line, "unterminated `${` placeholder"))
                            }
                        }
                    }
                    let (var, field) = split_path(&path, line)?;
                    nodes.push(Node::Placeholder { var, field, line });
                }
                Some('@') => {
                    if self.chars.get(self.i + 1) == Some(&'@') {
                        self.bump();
                        self.bump();
                        text.push('@');
                        continue;
                    }
                    let line = self.line;
                    self.bump();
                    let mut directive = String::new();
                    loop {
                        match self.bump() {
                            Some('@') => break,
                            Some(c) => directive.push(c),
                            None => return Err(template_err(line, "unterminated directive")),
                        }
                    }
                    let words: Vec<&str> = directive.split_whitespace().collect();
                    match words.as_slice() {
                        ["end"] => {
                            if stack.is_empty() {
                                return Err(template_err(line, "@end@ without an open directive"));
                            }
                            if !text.is_empty() {
                                nodes.push(Node::Text(std::mem::take(&mut text)));
                            }
                            return Ok(nodes);
                        }
                        ["foreach", kind, var] => {
                            if !text.is_empty() {
                                nodes.push(Node::Text(std::mem::take(&mut text)));
                            }
                            let kind = IterKind::parse(kind).ok_or_else(|| {
                                template_err(line, format!("unknown foreach kind `{kind}`"))
                            })?;
                            stack.push("foreach");
                            let body = self.parse_nodes(stack)?;
                            stack.pop();
                            nodes.push(Node::Foreach {
                                kind,
                                var: var.to_string(),
                                body,
                                line,
                            });
                        }
                        ["if", cond] => {
                            if !text.is_empty() {
                                nodes.push(Node::Text(std::mem::take(&mut text)));
                            }
                            let (negated, path) = match cond.strip_prefix('!') {
                                Some(rest) => (true, rest),
                                None => (false, *cond),
                            };
                            let (var, field) = split_path(path, line)?;
                            stack.push("if");
                            let body = self.parse_nodes(stack)?;
                            stack.pop();
                            nodes.push(Node::If {
                                negated,
                                var,
                                field,
                                body,
                                line,
                            });
                        }
                        ["file", rest @ ..] if !rest.is_empty() => {
                            if !text.is_empty() {
                                nodes.push(Node::Text(std::mem::take(&mut text)));
                            }
                            let path_tpl = rest.join(" ");
                            let path_nodes = parse_inline(&path_tpl, line)?;
                            stack.push("file");
                            let body = self.parse_nodes(stack)?;
                            stack.pop();
                            nodes.push(Node::File {
                                path: path_nodes,
                                body,
                                line,
                            });
                        }
                        _ => {
                            return Err(template_err(
                                line,
                                format!("unknown directive `@{directive}@`"),
                            ))
                        }
                    }
                }
                Some(_) => {
                    let c = self.bump().expect("peeked");
                    text.push(c);
                }
            }
        }
    }
}

/// Parses a one-line sub-template (file paths): text plus placeholders.
fn parse_inline(text: &str, line: u32) -> Result<Vec<Node>, Diagnostic> {
    let mut parser = TplParser {
        chars: text.chars().collect(),
        i: 0,
        line,
    };
    parser.parse_nodes(&mut Vec::new())
}

fn split_path(path: &str, line: u32) -> Result<(String, String), Diagnostic> {
    let mut parts = path.split('.');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(var), Some(field), None) if !var.is_empty() && !field.is_empty() => {
            Ok((var.to_string(), field.to_string()))
        }
        _ => Err(template_err(
            line,
            format!("placeholder path `{path}` must be `var.field`"),
        )),
    }
}

/// One bound iteration element.
#[derive(Clone, Copy)]
enum Elem<'m> {
    Model(&'m Model),
    Class(&'m ClassDef),
    Attribute(&'m AttributeDef),
    Method(&'m MethodDef),
    State {
        chart: &'m Statechart,
        name: &'m str,
    },
    Transition {
        t: &'m TransitionDef,
        index: usize,
    },
    Test(&'m TestCase),
}

enum FieldValue {
    Text(String),
    Flag(bool),
}

impl<'m> Elem<'m>
{
    fn field(&self, field: &str) -> Option<FieldValue> {
        use FieldValue::{Flag, Text};
        match self {
            Elem::Model(m) => match field {
                "name" => Some(Text(m.name.clone())),
                _ => None,
            },
            Elem::Class(c) => match field {
                "name" => Some(Text(c.name.clone())),
                "superclass" => Some(Text(c.superclass.clone().unwrap_or_default())),
                "has_superclass" => Some(Flag(c.superclass.is_some())),
                "abstract" => Some(Flag(c.is_abstract)),
                "published" => Some(Flag(c.published)),
                _ => None,
            },
            Elem::Attribute(a) => match field {
                "name" => Some(Text(a.name.clone())),
                "type" => Some(Text(a.ty.to_string())),
                "published" => Some(Flag(a.published)),
                _ => None,
            },
            Elem::Method(m) => match field {
                "name" => Some(Text(m.name.clone())),
                "params" => Some(Text(
                    m.params
                        .iter()
                        .map(|p| format!("{}: {}", p.name, p.ty))
                        .collect::<Vec<_>>()
                        .join(", "),
                )),
                "return" => Some(Text(
                    m.return_type
                        .as_ref()
                        .map(|t| t.to_string())
                        .unwrap_or_default(),
                )),
                "has_return" => Some(Flag(m.return_type.is_some())),
                "has_body" => Some(Flag(m.body.is_some())),
                "abstract" => Some(Flag(m.is_abstract)),
                "published" => Some(Flag(m.published)),
                _ => None,
            },
            Elem::State { chart, name } => match field {
                "name" => Some(Text(name.to_string())),
                "initial" => Some(Flag(chart.initial == *name)),
                _ => None,
            },
            Elem::Transition { t, index } => match field {
                "index" => Some(Text(index.to_string())),
                "source" => Some(Text(t.source.clone())),
                "target" => Some(Text(t.target.clone())),
                "trigger" => Some(Text(t.trigger.clone())),
                "params" => Some(Text(t.params.join(", "))),
                "guard" => Some(Text(
                    t.guard.as_ref().map(print_expr).unwrap_or_default(),
                )),
                "has_guard" => Some(Flag(t.guard.is_some())),
                "result" => Some(Text(
                    t.result.as_ref().map(print_expr).unwrap_or_default(),
                )),
                "has_result" => Some(Flag(t.result.is_some())),
                _ => None,
            },
            Elem::Test(t) => match field {
                "name" => Some(Text(t.name.clone())),
                "category" => Some(Text(t.category.to_string())),
                "fixture" => Some(Text(t.fixture.clone())),
                "driver" => Some(Text(t.driver.clone())),
                "has_oracle" => Some(Flag(t.oracle.is_some())),
                _ => None,
            },
        }
    }
}

struct Renderer<'m> {
    model: &'m Model,
    bindings: Vec<(String, Elem<'m>)>,
    files: Vec<(String, String)>,
    current: String,
    in_file: bool,
}

impl<'m> Renderer<'m> {
    fn lookup(&self, var: &str, line: u32) -> Result<Elem<'m>, Diagnostic> {
        if var == "model" {
            return Ok(Elem::Model(self.model));
        }
        self.bindings
            .iter()
            .rev()
            .find(|(name, _)| name == var)
            .map(|(_, e)| *e)
            .ok_or_else(|| template_err(line, format!("unbound template variable `{var}`")))
    }

    fn field_of(&self, var: &str, field: &str, line: u32) -> Result<FieldValue, Diagnostic> {
        let elem = self.lookup(var, line)?;
        // `has_chart` needs the whole model, not just the class.
        if let (Elem::Class(c), "has_chart") = (&elem, field) {
            return Ok(FieldValue::Flag(self.model.find_chart(&c.name).is_some()));
        }
        elem.field(field)
            .ok_or_else(|| template_err(line, format!("unknown field `{var}.{field}`")))
    }

    fn enclosing_class(&self, line: u32, what: &str) -> Result<&'m ClassDef, Diagnostic> {
        self.bindings
            .iter()
            .rev()
            .find_map(|(_, e)| match e {
                Elem::Class(c) => Some(*c),
                _ => None,
            })
            .ok_or_else(|| {
                template_err(line, format!("foreach {what} requires an enclosing class loop"))
            })
    }

    fn render_nodes(&mut self, nodes: &[Node]) -> Result<(), Diagnostic> {
        for node in nodes {
            match node {
                Node::Text(t) => self.current.push_str(t),
                Node::Placeholder { var, field, line } => {
                    match self.field_of(var, field, *line)? {
                        FieldValue::Text(t) => self.current.push_str(&t),
                        FieldValue::Flag(b) => {
                            let _ = write!(self.current, "{b}");
                        }
                    }
                }
                Node::If {
                    negated,
                    var,
                    field,
                    body,
                    line,
                } => {
                    let value = match self.field_of(var, field, *line)? {
                        FieldValue::Flag(b) => b,
                        FieldValue::Text(_) => {
                            return Err(template_err(
                                *line,
                                format!("`{var}.{field}` is not a flag; @if needs one"),
                            ))
                        }
                    };
                    if value != *negated {
                        self.render_nodes(body)?;
                    }
                }
                Node::Foreach {
                    kind,
                    var,
                    body,
                    line,
                } => {
                    let elems: Vec<Elem<'m>> = match kind {
                        IterKind::Class => {
                            self.model.classes.iter().map(Elem::Class).collect()
                        }
                        IterKind::Test => self.model.tests.iter().map(Elem::Test).collect(),
                        IterKind::Attribute => {
                            let class = self.enclosing_class(*line, "attribute")?;
                            class.attributes.iter().map(Elem::Attribute).collect()
                        }
                        IterKind::Method => {
                            let class = self.enclosing_class(*line, "method")?;
                            class.methods.iter().map(Elem::Method).collect()
                        }
                        IterKind::State => {
                            let class = self.enclosing_class(*line, "state")?;
                            match self.model.find_chart(&class.name) {
                                Some(chart) => chart
                                    .states
                                    .iter()
                                    .map(|s| Elem::State {
                                        chart,
                                        name: s.as_str(),
                                    })
                                    .collect(),
                                None => Vec::new(),
                            }
                        }
                        IterKind::Transition => {
                            let class = self.enclosing_class(*line, "transition")?;
                            match self.model.find_chart(&class.name) {
                                Some(chart) => chart
                                    .transitions
                                    .iter()
                                    .enumerate()
                                    .map(|(index, t)| Elem::Transition { t, index })
                                    .collect(),
                                None => Vec::new(),
                            }
                        }
                    };
                    for elem in elems {
                        self.bindings.push((var.clone(), elem));
                        self.render_nodes(body)?;
                        self.bindings.pop();
                    }
                }
                Node::File { path, body, line } => {
                    if self.in_file {
                        return Err(template_err(*line, "@file@ blocks cannot nest"));
                    }
                    let outer = std::mem::take(&mut self.current);
                    self.render_nodes(path)?;
                    let file_path = std::mem::take(&mut self.current);
                    validate_path(&file_path, *line)?;
                    self.in_file = true;
                    self.render_nodes(body)?;
                    self.in_file = false;
                    let content = std::mem::replace(&mut self.current, outer);
                    self.files.push((file_path, content));
                }
            }
        }
        Ok(())
    }
}

fn validate_path(path: &str, line: u32) -> Result<(), Diagnostic> {
    if path.is_empty() {
        return Err(template_err(line, "empty output path"));
    }
    if path.starts_with('/') || path.contains('\\') {
        return Err(template_err(line, format!("output path `{path}` must be relative")));
    }
    if path.split('/').any(|seg| seg == ".." || seg.is_empty()) {
        return Err(template_err(
            line,
            format!("output path `{path}` escapes the output root"),
        ));
    }
    Ok(())
}

/// Renders the template over the model. Without `@file@` directives the
/// whole expansion lands in `<template>.txt`; with them, only whitespace
/// may appear outside the blocks.
pub fn render(model: &Model, template: &Template) -> Result<GenOutput, Diagnostic> {
    let mut renderer = Renderer {
        model,
        bindings: Vec::new(),
        files: Vec::new(),
        current: String::new(),
        in_file: false,
    };
    renderer.render_nodes(&template.nodes)?;
    let leftover = std::mem::take(&mut renderer.current);
    let mut files = renderer.files;
    if files.is_empty() {
        if !leftover.is_empty() {
            files.push((format!("{}.txt", template.name), leftover));
        }
    } else if !leftover.trim().is_empty() {
        return Err(template_err(1, "stray text outside @file@ blocks"));
    }
    let mut seen = BTreeSet::new();
    for (path, _) in &files {
        if !seen.insert(path.clone()) {
            return Err(template_err(1, format!("duplicate output path `{path}`")));
        }
    }
    Ok(GenOutput { files })
}

const DOC_TEMPLATE: &str = "@foreach class c@@file ${c.name}.md@# Class ${c.name}\n\
\n\
@if c.has_superclass@- extends: ${c.superclass}\n@end@\
- abstract: ${c.abstract}\n\
- published: ${c.published}\n\
\n\
## Attributes\n\
\n\
@foreach attribute a@- ${a.name}: ${a.type}@if a.published@ (published)@end@\n@end@\
\n\
## Methods\n\
\n\
@foreach method m@- ${m.name}(${m.params})@if m.has_return@: ${m.return}@end@@if m.abstract@ (abstract)@end@@if m.published@ (published)@end@\n@end@\
@if c.has_chart@\n\
## Statechart\n\
\n\
@foreach state s@- state ${s.name}@if s.initial@ (initial)@end@\n@end@\
@foreach transition t@- ${t.source} -> ${t.target} on ${t.trigger}(${t.params})@if t.has_guard@ [${t.guard}]@end@@if t.has_result@ returns ${t.result}@end@\n@end@\
@end@@end@@end@";

const SKELETON_TEMPLATE: &str = "@foreach class c@@file ${c.name}.skeleton.txt@\
@if c.abstract@abstract @end@class ${c.name}@if c.has_superclass@ extends ${c.superclass}@end@\n\
@foreach attribute a@\x20\x20attr ${a.name}: ${a.type}\n@end@\
@foreach method m@\x20\x20method ${m.name}(${m.params})@if m.has_return@: ${m.return}@end@\n\
@if !m.abstract@\x20\x20\x20\x20TODO implement\n@end@@end@\
@end@@end@\
@foreach test t@@file test_${t.name}.skeleton.txt@test ${t.name} (${t.category})\n\
\x20\x20setup fixture ${t.fixture}\n\
\x20\x20run driver ${t.driver}\n\
@if t.has_oracle@\x20\x20TODO check oracle\n@end@@end@@end@";

/// The shipped templates: `doc` (per-class summaries) and `skeleton`
/// (pseudocode class and test stubs).
pub fn builtin_templates() -> Vec<Template> {
    vec![
        parse_template("doc", DOC_TEMPLATE).expect("doc template parses"),
        parse_template("skeleton", SKELETON_TEMPLATE).expect("skeleton template parses"),
    ]
}

pub fn find_builtin(name: &str) -> Option<Template> {
    builtin_templates().into_iter().find(|t| t.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directives_must_nest() {
        assert!(parse_template("t", "@foreach class c@${c.name}").is_err());
        assert!(parse_template("t", "@end@").is_err());
        assert!(parse_template("t", "@frobnicate x@@end@").is_err());
    }

    #[test]
    fn literal_at_escape() {
        let t = parse_template("t", "a@@b").expect("parses");
        let out = render(&Model::named("m"), &t).expect("renders");
        assert_eq!(out.files[0].1, "a@b");
    }

    #[test]
    fn builtins_parse() {
        assert_eq!(builtin_templates().len(), 2);
    }
}
