//! Canonical pretty-printer.
//!
//! The canonical form uses 2-space indentation, one member per line, LF
//! endings, and orders sections classes, statecharts, configurations and
//! patterns (interleaved in declaration order), sequences, invariants,
//! tests. `print` composed with `parse` is a fixed point, and parsing a
//! print reproduces the model structurally.

use std::fmt::Write as _;

use crate::model::{
    ActionBlock, BinOp, ClassDef, ConfigValue, Expr, ExprKind, Literal, MethodDef, Model,
    NamedInvariant, ObjectConfiguration, ObjectDecl, Oracle, PatternConfiguration, ProjectDecl,
    SequenceDefinition, Statechart, Statement, Step, TestCase, TransitionDef, escape_str,
};

const INDENT: &str = "  ";

/// Renders the whole model in canonical form.
pub fn print_model(model: &Model) -> String {
    let mut sections: Vec<String> = Vec::new();
    if let Some(m) = &model.manifest {
        sections.push(print_project(m));
    }
    sections.extend(model.classes.iter().map(print_class));
    sections.extend(model.statecharts.iter().map(print_statechart));
    sections.extend(configs_and_patterns(model, None));
    sections.extend(model.sequences.iter().map(print_sequence));
    sections.extend(model.invariants.iter().map(print_invariant));
    sections.extend(model.tests.iter().map(print_test));
    join_items(sections)
}

/// Renders only the items originating from `path`, for per-file rewrites.
pub fn print_file(model: &Model, path: &str) -> String {
    let from = |p: &crate::model::Origin| p.path.as_deref() == Some(path);
    let mut sections: Vec<String> = Vec::new();
    if let Some(m) = &model.manifest {
        if from(&m.origin) {
            sections.push(print_project(m));
        }
    }
    sections.extend(model.classes.iter().filter(|c| from(&c.origin)).map(print_class));
    sections.extend(
        model
            .statecharts
            .iter()
            .filter(|s| from(&s.origin))
            .map(print_statechart),
    );
    sections.extend(configs_and_patterns(model, Some(path)));
    sections.extend(
        model
            .sequences
            .iter()
            .filter(|s| from(&s.origin))
            .map(print_sequence),
    );
    sections.extend(
        model
            .invariants
            .iter()
            .filter(|i| from(&i.origin))
            .map(print_invariant),
    );
    sections.extend(model.tests.iter().filter(|t| from(&t.origin)).map(print_test));
    join_items(sections)
}

/// The source paths a model was assembled from, in merge order.
pub fn source_paths(model: &Model) -> Vec<String> {
    let mut paths: Vec<String> = Vec::new();
    let mut push = |p: &Option<String>| {
        if let Some(p) = p {
            if !paths.contains(p) {
                paths.push(p.clone());
            }
        }
    };
    if let Some(m) = &model.manifest {
        push(&m.origin.path);
    }
    model.classes.iter().for_each(|i| push(&i.origin.path));
    model.statecharts.iter().for_each(|i| push(&i.origin.path));
    model.configs.iter().for_each(|i| push(&i.origin.path));
    model.patterns.iter().for_each(|i| push(&i.origin.path));
    model.sequences.iter().for_each(|i| push(&i.origin.path));
    model.invariants.iter().for_each(|i| push(&i.origin.path));
    model.tests.iter().for_each(|i| push(&i.origin.path));
    paths.sort();
    paths
}

fn join_items(sections: Vec<String>) -> String {
    let mut out = String::new();
    for (i, s) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(s);
    }
    out
}

/// Configurations and patterns form one section, interleaved in their
/// original declaration order.
fn configs_and_patterns(model: &Model, path: Option<&str>) -> Vec<String> {
    enum Entry<'a> {
        Config(&'a ObjectConfiguration),
        Pattern(&'a PatternConfiguration),
    }
    let mut entries: Vec<(u32, Entry)> = Vec::new();
    for c in &model.configs {
        if path.is_none() || c.origin.path.as_deref() == path {
            entries.push((c.origin.seq, Entry::Config(c)));
        }
    }
    for p in &model.patterns {
        if path.is_none() || p.origin.path.as_deref() == path {
            entries.push((p.origin.seq, Entry::Pattern(p)));
        }
    }
    entries.sort_by_key(|(seq, _)| *seq);
    entries
        .into_iter()
        .map(|(_, e)| match e {
            Entry::Config(c) => print_config(c),
            Entry::Pattern(p) => print_pattern(p),
        })
        .collect()
}

fn print_project(p: &ProjectDecl) -> String {
    let mut out = format!("project {} {{\n", p.name);
    for g in &p.globs {
        let _ = writeln!(out, "{INDENT}files \"{}\";", escape_str(g));
    }
    out.push_str("}\n");
    out
}

fn print_class(class: &ClassDef) -> String {
    let mut out = String::new();
    if class.published {
        out.push_str("published ");
    }
    if class.is_abstract {
        out.push_str("abstract ");
    }
    let _ = write!(out, "class {}", class.name);
    if let Some(sup) = &class.superclass {
        let _ = write!(out, " extends {sup}");
    }
    out.push_str(" {\n");
    for attr in &class.attributes {
        out.push_str(INDENT);
        if attr.published {
            out.push_str("published ");
        }
        let _ = writeln!(out, "attr {}: {};", attr.name, attr.ty);
    }
    for method in &class.methods {
        out.push_str(&print_method(method));
    }
    out.push_str("}\n");
    out
}

fn print_method(method: &MethodDef) -> String {
    let mut out = String::from(INDENT);
    if method.published {
        out.push_str("published ");
    }
    if method.is_abstract {
        out.push_str("abstract ");
    }
    let params: Vec<String> = method
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty))
        .collect();
    let _ = write!(out, "method {}({})", method.name, params.join(", "));
    if let Some(rt) = &method.return_type {
        let _ = write!(out, ": {rt}");
    }
    match &method.body {
        Some(body) => {
            out.push_str(" {\n");
            print_block(body, 2, &mut out);
            out.push_str(INDENT);
            out.push_str("}\n");
        }
        None => out.push_str(";\n"),
    }
    out
}

fn print_block(block: &ActionBlock, depth: usize, out: &mut String) {
    for stmt in &block.statements {
        print_statement(stmt, depth, out);
    }
}

fn print_statement(stmt: &Statement, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match stmt {
        Statement::Local { name, value, .. } => {
            let _ = writeln!(out, "{pad}var {name} = {};", print_expr(value));
        }
        Statement::Assign { target, value, .. } => {
            let _ = writeln!(out, "{pad}{} = {};", print_expr(target), print_expr(value));
        }
        Statement::If {
            condition,
            then_block,
            else_block,
            ..
        } => {
            let _ = writeln!(out, "{pad}if ({}) {{", print_expr(condition));
            print_block(then_block, depth + 1, out);
            match else_block {
                Some(eb) => {
                    let _ = writeln!(out, "{pad}}} else {{");
                    print_block(eb, depth + 1, out);
                    let _ = writeln!(out, "{pad}}}");
                }
                None => {
                    let _ = writeln!(out, "{pad}}}");
                }
            }
        }
        Statement::Return { value, .. } => {
            let _ = writeln!(out, "{pad}return {};", print_expr(value));
        }
        Statement::Call {
            receiver,
            method,
            args,
            ..
        } => {
            let rendered: Vec<String> = args.iter().map(print_expr).collect();
            let _ = writeln!(
                out,
                "{pad}call {}.{method}({});",
                print_expr(receiver),
                rendered.join(", ")
            );
        }
    }
}

fn print_statechart(chart: &Statechart) -> String {
    let mut out = format!("statechart for {} {{\n", chart.owner);
    let _ = writeln!(out, "{INDENT}initial {};", chart.initial);
    for s in &chart.states {
        let _ = writeln!(out, "{INDENT}state {s};");
    }
    for t in &chart.transitions {
        out.push_str(&print_transition(t));
    }
    out.push_str("}\n");
    out
}

fn print_transition(t: &TransitionDef) -> String {
    let mut out = format!(
        "{INDENT}trans {} -> {} on {}({})",
        t.source,
        t.target,
        t.trigger,
        t.params.join(", ")
    );
    if let Some(guard) = &t.guard {
        let _ = write!(out, " [{}]", print_expr(guard));
    }
    if let Some(actions) = &t.actions {
        out.push_str(" / {\n");
        print_block(actions, 2, &mut out);
        out.push_str(INDENT);
        out.push('}');
    }
    if let Some(result) = &t.result {
        let _ = write!(out, " returns {}", print_expr(result));
    }
    out.push_str(";\n");
    out
}

fn print_object_decl(obj: &ObjectDecl, anchored: bool) -> String {
    let mut out = String::from(INDENT);
    if anchored {
        out.push_str("anchor ");
    }
    let _ = write!(out, "object {}: {} {{", obj.name, obj.class_name);
    out.push('\n');
    for a in &obj.assignments {
        let _ = writeln!(out, "{INDENT}{INDENT}{} = {};", a.attr, print_config_value(&a.value));
    }
    out.push_str(INDENT);
    out.push_str("}\n");
    out
}

fn print_config_value(v: &ConfigValue) -> String {
    match v {
        ConfigValue::Literal(lit) => lit.to_string(),
        ConfigValue::Ref(name) => name.clone(),
        ConfigValue::Set(names) => format!("{{{}}}", names.join(", ")),
    }
}

fn print_config(config: &ObjectConfiguration) -> String {
    let mut out = format!("objects {} {{\n", config.name);
    for obj in &config.objects {
        out.push_str(&print_object_decl(obj, false));
    }
    out.push_str("}\n");
    out
}

fn print_pattern(pattern: &PatternConfiguration) -> String {
    let mut out = format!("pattern {} {{\n", pattern.name);
    for obj in &pattern.objects {
        out.push_str(&print_object_decl(&obj.object, obj.anchored));
    }
    out.push_str("}\n");
    out
}

fn print_sequence(seq: &SequenceDefinition) -> String {
    let mut out = format!("sequence {}", seq.name);
    if seq.strict {
        out.push_str(" strict");
    }
    out.push_str(" {\n");
    for step in &seq.steps {
        match step {
            Step::Stimulus {
                target,
                method,
                args,
                expect,
                ..
            } => {
                let rendered: Vec<String> = args.iter().map(Literal::to_string).collect();
                let _ = write!(out, "{INDENT}call {target}.{method}({})", rendered.join(", "));
                if let Some(lit) = expect {
                    let _ = write!(out, " expect {lit}");
                }
                out.push_str(";\n");
            }
            Step::ExpectMessage {
                caller,
                callee,
                method,
                ..
            } => {
                let _ = writeln!(out, "{INDENT}expect {caller} -> {callee}: {method};");
            }
            Step::Assert { expr, .. } => {
                let _ = writeln!(out, "{INDENT}assert {};", print_expr(expr));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn print_invariant(inv: &NamedInvariant) -> String {
    format!(
        "inv {} for {}: {};\n",
        inv.name,
        inv.context_class,
        print_expr(&inv.expr)
    )
}

fn print_test(test: &TestCase) -> String {
    let mut out = format!("test {} category {} {{\n", test.name, test.category);
    let _ = writeln!(out, "{INDENT}fixture {};", test.fixture);
    let _ = writeln!(out, "{INDENT}driver {};", test.driver);
    if let Some(Oracle {
        pattern,
        assertions,
    }) = &test.oracle
    {
        let _ = writeln!(out, "{INDENT}oracle {{");
        if let Some(p) = pattern {
            let _ = writeln!(out, "{INDENT}{INDENT}matches {p};");
        }
        for a in assertions {
            let _ = writeln!(out, "{INDENT}{INDENT}assert {};", print_expr(a));
        }
        let _ = writeln!(out, "{INDENT}}}");
    }
    out.push_str("}\n");
    out
}

// Expression printing with minimal parentheses. Binding strength, loosest
// first: implies(1, right) or(2) and(3) not(4) comparison(5, non-assoc)
// additive(6) multiplicative(7) postfix(8).
fn prec(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Binary(op, ..) => match op {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul => 7,
        },
        ExprKind::Not(_) => 4,
        _ => 8,
    }
}

/// Renders an expression in canonical form.
pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(expr, 0, &mut out);
    out
}

fn write_expr(expr: &Expr, min_prec: u8, out: &mut String) {
    let p = prec(&expr.kind);
    let parens = p < min_prec;
    if parens {
        out.push('(');
    }
    match &expr.kind {
        ExprKind::IntLit(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::BoolLit(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::StrLit(s) => {
            let _ = write!(out, "\"{}\"", escape_str(s));
        }
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Attr(base, attr) => {
            write_expr(base, 8, out);
            let _ = write!(out, ".{attr}");
        }
        ExprKind::StateOf(base) => {
            write_expr(base, 8, out);
            out.push_str("@state");
        }
        ExprKind::Not(inner) => {
            out.push_str("not ");
            write_expr(inner, 4, out);
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let (lmin, rmin) = match op {
                // Right-associative.
                BinOp::Implies => (p + 1, p),
                // Non-associative: nested comparisons are parenthesized.
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    (p + 1, p + 1)
                }
                // Left-associative.
                _ => (p, p + 1),
            };
            write_expr(lhs, lmin, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(rhs, rmin, out);
        }
        ExprKind::Size(inner) => {
            write_expr(inner, 8, out);
            out.push_str("->size()");
        }
        ExprKind::Includes(inner, arg) => {
            write_expr(inner, 8, out);
            out.push_str("->includes(");
            write_expr(arg, 0, out);
            out.push(')');
        }
        ExprKind::ForAll(inner, var, body) => {
            write_expr(inner, 8, out);
            let _ = write!(out, "->forAll({var} | ");
            write_expr(body, 0, out);
            out.push(')');
        }
        ExprKind::Exists(inner, var, body) => {
            write_expr(inner, 8, out);
            let _ = write!(out, "->exists({var} | ");
            write_expr(body, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}
