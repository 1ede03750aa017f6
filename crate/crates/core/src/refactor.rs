//! The transformation catalog: pull-up-attribute, the three
//! pull-up-method variants and renames, each guarded by statically checked
//! context conditions. Applying a rule returns a fresh model plus the
//! co-transformations performed on glass-box tests; acceptance tests are
//! never touched unless explicitly allowed, and behavior preservation is
//! verified by re-running them.

use std::collections::BTreeSet;
use std::fmt;

use crate::diag::codes;
use crate::model::check::{
    class_chain, is_subclass_of, lookup_attribute, lookup_member, lookup_method,
};
use crate::model::types::{type_of, TypeScope};
use crate::model::{
    ActionBlock, Assignment, AttributeDef, ClassDef, ConfigValue, Expr, ExprKind, Literal,
    MethodDef, Model, ObjectConfiguration, Oracle, Origin, Pos, Statement, Step, TestCase,
    TestCategory, TypeRef,
};
use crate::syntax::printer::{print_expr, print_model};
use crate::testkit::{run_suite, SuiteFilter, SuiteReport};

use crate::model::TestCategory as Cat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MethodPullVariant {
    Override { donor: String },
    Abstract,
    Unify,
}

impl fmt::Display for MethodPullVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodPullVariant::Override { donor } => write!(f, "override({donor})"),
            MethodPullVariant::Abstract => write!(f, "abstract"),
            MethodPullVariant::Unify => write!(f, "unify"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenameKind {
    Class,
    Attribute,
    Method,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleKind {
    PullUpAttribute {
        super_class: String,
        attr: String,
    },
    PullUpMethod {
        super_class: String,
        method: String,
        variant: MethodPullVariant,
    },
    Rename {
        kind: RenameKind,
        owner: String,
        old: String,
        new: String,
    },
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::PullUpAttribute { .. } => "pull_up_attribute",
            RuleKind::PullUpMethod { .. } => "pull_up_method",
            RuleKind::Rename { kind, .. } => match kind {
                RenameKind::Class => "rename_class",
                RenameKind::Attribute => "rename_attribute",
                RenameKind::Method => "rename_method",
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RefactoringRequest {
    pub rule: RuleKind,
    pub default_value: Option<Literal>,
    pub clone_values: Vec<Literal>,
    pub allow_published: bool,
}

impl RefactoringRequest {
    pub fn new(rule: RuleKind) -> Self {
        RefactoringRequest {
            rule,
            default_value: None,
            clone_values: Vec::new(),
            allow_published: false,
        }
    }
}

/// Builds a rule from its catalog name and positional arguments. The error
/// string is a usage message.
pub fn rule_from_args(rule: &str, args: &[&str]) -> Result<RuleKind, String> {
    let need = |n: usize| -> Result<(), String> {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("rule `{rule}` expects {n} argument(s), got {}", args.len()))
        }
    };
    match rule {
        "pull_up_attribute" => {
            need(2)?;
            Ok(RuleKind::PullUpAttribute {
                super_class: args[0].to_string(),
                attr: args[1].to_string(),
            })
        }
        "pull_up_method" => {
            if args.len() == 3 {
                let variant = match args[2] {
                    "abstract" => MethodPullVariant::Abstract,
                    "unify" => MethodPullVariant::Unify,
                    other => {
                        return Err(format!(
                            "unknown variant `{other}` (override needs a donor: override,DONOR)"
                        ))
                    }
                };
                Ok(RuleKind::PullUpMethod {
                    super_class: args[0].to_string(),
                    method: args[1].to_string(),
                    variant,
                })
            } else if args.len() == 4 && args[2] == "override" {
                Ok(RuleKind::PullUpMethod {
                    super_class: args[0].to_string(),
                    method: args[1].to_string(),
                    variant: MethodPullVariant::Override {
                        donor: args[3].to_string(),
                    },
                })
            } else {
                Err("pull_up_method expects SUPER,METHOD,VARIANT[,DONOR]".to_string())
            }
        }
        "rename_class" => {
            need(2)?;
            Ok(RuleKind::Rename {
                kind: RenameKind::Class,
                owner: args[0].to_string(),
                old: args[0].to_string(),
                new: args[1].to_string(),
            })
        }
        "rename_attribute" => {
            need(3)?;
            Ok(RuleKind::Rename {
                kind: RenameKind::Attribute,
                owner: args[0].to_string(),
                old: args[1].to_string(),
                new: args[2].to_string(),
            })
        }
        "rename_method" => {
            need(3)?;
            Ok(RuleKind::Rename {
                kind: RenameKind::Method,
                owner: args[0].to_string(),
                old: args[1].to_string(),
                new: args[2].to_string(),
            })
        }
        other => Err(format!("{}: unknown rule `{other}`", codes::E_UNKNOWN_RULE)),
    }
}

/// A violated context condition; each cites a concrete model element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextViolation {
    pub code: &'static str,
    pub subject: String,
    pub message: String,
}

impl ContextViolation {
    fn new(code: &'static str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        ContextViolation {
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TestChangeKind {
    Patched,
    ClonedFrom(String),
    Obsoleted,
}

impl fmt::Display for TestChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestChangeKind::Patched => write!(f, "patched"),
            TestChangeKind::ClonedFrom(orig) => write!(f, "cloned-from {orig}"),
            TestChangeKind::Obsoleted => write!(f, "obsoleted-warning"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestChange {
    pub test: String,
    pub kind: TestChangeKind,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct RefactoringReport {
    pub rule: String,
    pub applied: bool,
    pub violations: Vec<ContextViolation>,
    pub model_after: Option<Model>,
    pub test_changes: Vec<TestChange>,
}

impl RefactoringReport {
    fn rejected(rule: &RuleKind, violations: Vec<ContextViolation>) -> Self {
        RefactoringReport {
            rule: rule.name().to_string(),
            applied: false,
            violations,
            model_after: None,
            test_changes: Vec::new(),
        }
    }

    /// Machine lines: `RULE`, `VIOLATION` and `TESTCHANGE` records.
    pub fn render_machine(&self) -> String {
        let mut out = format!(
            "RULE {} {}\n",
            self.rule,
            if self.applied { "applied" } else { "rejected" }
        );
        for v in &self.violations {
            out.push_str(&format!("VIOLATION {} {}\n", v.code, v.subject));
        }
        for c in &self.test_changes {
            if c.detail.is_empty() {
                out.push_str(&format!("TESTCHANGE {} {}\n", c.test, c.kind));
            } else {
                out.push_str(&format!("TESTCHANGE {} {} [{}]\n", c.test, c.kind, c.detail));
            }
        }
        out
    }
}

/// Evaluates the rule's context conditions without mutating anything. An
/// empty list means the rule is applicable.
pub fn check_context(model: &Model, request: &RefactoringRequest) -> Vec<ContextViolation> {
    match &request.rule {
        RuleKind::PullUpAttribute { super_class, attr } => {
            check_pull_up_attribute(model, super_class, attr, request)
        }
        RuleKind::PullUpMethod {
            super_class,
            method,
            variant,
        } => check_pull_up_method(model, super_class, method, variant),
        RuleKind::Rename {
            kind,
            owner,
            old,
            new,
        } => check_rename(model, *kind, owner, old, new, request.allow_published),
    }
}

/// Applies the rule, or returns the violations untouched. The input model
/// is never mutated.
pub fn apply(model: &Model, request: &RefactoringRequest) -> RefactoringReport {
    let violations = check_context(model, request);
    if !violations.is_empty() {
        return RefactoringReport::rejected(&request.rule, violations);
    }
    let (after, test_changes) = match &request.rule {
        RuleKind::PullUpAttribute { super_class, attr } => {
            apply_pull_up_attribute(model, super_class, attr, request)
        }
        RuleKind::PullUpMethod {
            super_class,
            method,
            variant,
        } => (apply_pull_up_method(model, super_class, method, variant), Vec::new()),
        RuleKind::Rename {
            kind,
            owner,
            old,
            new,
        } => apply_rename(model, *kind, owner, old, new, request.allow_published),
    };
    let mut test_changes = test_changes;
    // Tests that the transformation makes obsolete (and that were not
    // obsolete before) are flagged rather than silently left behind.
    let before_obsolete: BTreeSet<String> = report_obsolete(model)
        .into_iter()
        .map(|w| w.test)
        .collect();
    for warning in report_obsolete(&after) {
        if !before_obsolete.contains(&warning.test) {
            test_changes.push(TestChange {
                test: warning.test,
                kind: TestChangeKind::Obsoleted,
                detail: warning.reason,
            });
        }
    }
    RefactoringReport {
        rule: request.rule.name().to_string(),
        applied: true,
        violations: Vec::new(),
        model_after: Some(after),
        test_changes,
    }
}

// --- pull up attribute ----------------------------------------------------

/// Proper descendants of `super_class` declaring `attr`, document order.
fn declaring_descendants<'m>(
    model: &'m Model,
    super_class: &str,
    attr: &str,
) -> Vec<&'m ClassDef> {
    model
        .classes
        .iter()
        .filter(|c| {
            c.name != super_class
                && is_subclass_of(model, &c.name, super_class)
                && c.attributes.iter().any(|a| a.name == attr)
        })
        .collect()
}

fn check_pull_up_attribute(
    model: &Model,
    super_class: &str,
    attr: &str,
    request: &RefactoringRequest,
) -> Vec<ContextViolation> {
    let mut out = Vec::new();
    if model.find_class(super_class).is_none() {
        out.push(ContextViolation::new(
            codes::E_UNKNOWN_CLASS,
            super_class,
            format!("unknown class `{super_class}`"),
        ));
        return out;
    }
    let declaring = declaring_descendants(model, super_class, attr);
    let direct_declares = model
        .direct_subclasses(super_class)
        .iter()
        .any(|c| c.attributes.iter().any(|a| a.name == attr));
    if !direct_declares {
        out.push(ContextViolation::new(
            codes::E_NOT_DECLARED,
            format!("{super_class}.{attr}"),
            format!("no direct subclass of `{super_class}` declares `{attr}`"),
        ));
        return out;
    }
    let reference = declaring[0]
        .attributes
        .iter()
        .find(|a| a.name == attr)
        .expect("declaring class has the attribute");
    for class in &declaring[1..] {
        let decl = class
            .attributes
            .iter()
            .find(|a| a.name == attr)
            .expect("declaring class has the attribute");
        if decl.ty != reference.ty {
            out.push(ContextViolation::new(
                codes::E_NAME_CLASH,
                format!("{}.{attr}", class.name),
                format!(
                    "`{}` declares `{attr}: {}`, clashing with `{attr}: {}` in `{}`",
                    class.name, decl.ty, reference.ty, declaring[0].name
                ),
            ));
        }
    }
    if lookup_attribute(model, super_class, attr).is_some() {
        out.push(ContextViolation::new(
            codes::E_NAME_CLASH,
            format!("{super_class}.{attr}"),
            format!("`{super_class}` already has an attribute `{attr}`"),
        ));
    }
    match &request.default_value {
        None => out.push(ContextViolation::new(
            codes::E_TYPE,
            format!("{super_class}.{attr}"),
            "pull_up_attribute requires a concrete default value",
        )),
        Some(lit) if lit.type_ref() != reference.ty => out.push(ContextViolation::new(
            codes::E_TYPE,
            format!("{super_class}.{attr}"),
            format!("default value has type {}, attribute is {}", lit.type_ref(), reference.ty),
        )),
        Some(_) => {}
    }
    for value in &request.clone_values {
        if value.type_ref() != reference.ty {
            out.push(ContextViolation::new(
                codes::E_TYPE,
                format!("{super_class}.{attr}"),
                format!("clone value has type {}, attribute is {}", value.type_ref(), reference.ty),
            ));
        }
    }
    let published = declaring.iter().any(|c| {
        c.attributes
            .iter()
            .any(|a| a.name == attr && a.published)
    });
    if published && !model.find_class(super_class).map(|c| c.published).unwrap_or(false) {
        out.push(ContextViolation::new(
            codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
            super_class,
            format!("pulled attribute `{attr}` is published but `{super_class}` is not"),
        ));
    }
    out
}

/// Configurations and patterns referenced by acceptance tests are frozen
/// unless the request explicitly allows touching the published surface.
fn protected_items(model: &Model, allow_published: bool) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut configs = BTreeSet::new();
    let mut patterns = BTreeSet::new();
    if allow_published {
        return (configs, patterns);
    }
    for test in &model.tests {
        if test.category == Cat::Acceptance {
            configs.insert(test.fixture.clone());
            if let Some(Oracle {
                pattern: Some(p), ..
            }) = &test.oracle
            {
                patterns.insert(p.clone());
            }
        }
    }
    (configs, patterns)
}

fn apply_pull_up_attribute(
    model: &Model,
    super_class: &str,
    attr: &str,
    request: &RefactoringRequest,
) -> (Model, Vec<TestChange>) {
    let default = request
        .default_value
        .clone()
        .expect("context conditions checked");
    let declaring: BTreeSet<String> = declaring_descendants(model, super_class, attr)
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let reference_ty = model
        .find_class(declaring.iter().next().expect("non-empty"))
        .and_then(|c| c.attributes.iter().find(|a| a.name == attr))
        .map(|a| a.ty.clone())
        .expect("declaring class has the attribute");
    let published = declaring.iter().any(|name| {
        model
            .find_class(name)
            .map(|c| c.attributes.iter().any(|a| a.name == attr && a.published))
            .unwrap_or(false)
    });

    // Classes that gain the attribute: the superclass and every descendant
    // that did not see it before.
    let gaining: BTreeSet<String> = model
        .classes
        .iter()
        .filter(|c| {
            is_subclass_of(model, &c.name, super_class)
                && lookup_attribute(model, &c.name, attr).is_none()
        })
        .map(|c| c.name.clone())
        .collect();

    let mut after = model.clone();
    for class in &mut after.classes {
        if class.name == super_class {
            class.attributes.push(AttributeDef {
                name: attr.to_string(),
                ty: reference_ty.clone(),
                published,
                pos: Pos::default(),
            });
        } else if declaring.contains(&class.name) {
            class.attributes.retain(|a| a.name != attr);
        }
    }

    let (protected_configs, protected_patterns) =
        protected_items(model, request.allow_published);
    let mut changes: Vec<TestChange> = Vec::new();
    let mut patched_configs: Vec<String> = Vec::new();

    for config in &mut after.configs {
        if protected_configs.contains(&config.name) {
            continue;
        }
        let mut touched = false;
        for obj in &mut config.objects {
            if gaining.contains(&obj.class_name) {
                obj.assignments.push(Assignment {
                    attr: attr.to_string(),
                    value: ConfigValue::Literal(default.clone()),
                    pos: Pos::default(),
                });
                touched = true;
            }
        }
        if touched {
            patched_configs.push(config.name.clone());
        }
    }

    for test in &model.tests {
        if test.category == Cat::Acceptance && !request.allow_published {
            continue;
        }
        if patched_configs.contains(&test.fixture) {
            changes.push(TestChange {
                test: test.name.clone(),
                kind: TestChangeKind::Patched,
                detail: format!("fixture {} gained {attr} = {default}", test.fixture),
            });
        }
        if let Some(Oracle {
            pattern: Some(p), ..
        }) = &test.oracle
        {
            if !protected_patterns.contains(p) {
                let pattern_has_affected = model
                    .find_pattern(p)
                    .map(|pat| {
                        pat.objects
                            .iter()
                            .any(|o| gaining.contains(&o.object.class_name))
                    })
                    .unwrap_or(false);
                if pattern_has_affected {
                    changes.push(TestChange {
                        test: test.name.clone(),
                        kind: TestChangeKind::Patched,
                        detail: format!("pattern {p} left partial (not constrained)"),
                    });
                }
            }
        }
    }

    // Cloning: one clone per value, for every glass-box test whose fixture
    // was patched. Clone configs are shared between tests per value.
    if !request.clone_values.is_empty() {
        let mut cloned_configs: BTreeSet<(String, usize)> = BTreeSet::new();
        let mut new_configs: Vec<ObjectConfiguration> = Vec::new();
        let mut new_tests: Vec<TestCase> = Vec::new();
        let mut seq = after.next_seq();
        for test in &model.tests {
            if test.category == Cat::Acceptance && !request.allow_published {
                continue;
            }
            if !patched_configs.contains(&test.fixture) {
                continue;
            }
            for (i, value) in request.clone_values.iter().enumerate() {
                let clone_config_name = format!("{}_clone{}", test.fixture, i + 1);
                if cloned_configs.insert((test.fixture.clone(), i)) {
                    let base = after
                        .configs
                        .iter()
                        .find(|c| c.name == test.fixture)
                        .expect("patched config exists")
                        .clone();
                    let mut clone = base;
                    clone.name = clone_config_name.clone();
                    for obj in &mut clone.objects {
                        if gaining.contains(&obj.class_name) {
                            for assignment in &mut obj.assignments {
                                if assignment.attr == attr {
                                    assignment.value = ConfigValue::Literal(value.clone());
                                }
                            }
                        }
                    }
                    clone.origin = Origin {
                        path: clone.origin.path.clone(),
                        seq,
                        pos: Pos::default(),
                    };
                    seq += 1;
                    new_configs.push(clone);
                }
                let clone_test_name = format!("{}_clone{}", test.name, i + 1);
                let mut clone_test = test.clone();
                clone_test.name = clone_test_name.clone();
                clone_test.fixture = clone_config_name;
                clone_test.origin = Origin {
                    path: test.origin.path.clone(),
                    seq,
                    pos: Pos::default(),
                };
                seq += 1;
                new_tests.push(clone_test);
                changes.push(TestChange {
                    test: clone_test_name,
                    kind: TestChangeKind::ClonedFrom(test.name.clone()),
                    detail: format!("{attr} = {value}"),
                });
            }
        }
        after.configs.extend(new_configs);
        after.tests.extend(new_tests);
    }

    (after, changes)
}

// --- pull up method ---------------------------------------------------------

/// The self-rooted members a body references: `self.x` navigations and
/// `call self.m(...)` receivers.
fn self_members_of_block(block: &ActionBlock, out: &mut BTreeSet<String>) {
    for stmt in &block.statements {
        match stmt {
            Statement::Local { value, .. } => self_members_of_expr(value, out),
            Statement::Assign { target, value, .. } => {
                self_members_of_expr(target, out);
                self_members_of_expr(value, out);
            }
            Statement::If {
                condition,
                then_block,
                else_block,
                ..
            } => {
                self_members_of_expr(condition, out);
                self_members_of_block(then_block, out);
                if let Some(e) = else_block {
                    self_members_of_block(e, out);
                }
            }
            Statement::Return { value, .. } => self_members_of_expr(value, out),
            Statement::Call {
                receiver,
                method,
                args,
                ..
            } => {
                if matches!(&receiver.kind, ExprKind::Name(n) if n == "self") {
                    out.insert(method.clone());
                }
                self_members_of_expr(receiver, out);
                for a in args {
                    self_members_of_expr(a, out);
                }
            }
        }
    }
}

fn self_members_of_expr(expr: &Expr, out: &mut BTreeSet<String>) {
    match &expr.kind {
        ExprKind::Attr(base, attr) => {
            if matches!(&base.kind, ExprKind::Name(n) if n == "self") {
                out.insert(attr.clone());
            }
            self_members_of_expr(base, out);
        }
        ExprKind::StateOf(e) | ExprKind::Not(e) | ExprKind::Size(e) => {
            self_members_of_expr(e, out)
        }
        ExprKind::Binary(_, l, r) | ExprKind::Includes(l, r) => {
            self_members_of_expr(l, out);
            self_members_of_expr(r, out);
        }
        ExprKind::ForAll(e, _, b) | ExprKind::Exists(e, _, b) => {
            self_members_of_expr(e, out);
            self_members_of_expr(b, out);
        }
        _ => {}
    }
}

fn canonical_body(method: &MethodDef) -> Option<String> {
    method.body.as_ref().map(|b| {
        let mut out = String::new();
        for stmt in &b.statements {
            render_stmt(stmt, &mut out);
        }
        out
    })
}

fn render_stmt(stmt: &Statement, out: &mut String) {
    match stmt {
        Statement::Local { name, value, .. } => {
            out.push_str(&format!("var {name}={};", print_expr(value)))
        }
        Statement::Assign { target, value, .. } => {
            out.push_str(&format!("{}={};", print_expr(target), print_expr(value)))
        }
        Statement::If {
            condition,
            then_block,
            else_block,
            ..
        } => {
            out.push_str(&format!("if({}){{", print_expr(condition)));
            for s in &then_block.statements {
                render_stmt(s, out);
            }
            out.push('}');
            if let Some(e) = else_block {
                out.push_str("else{");
                for s in &e.statements {
                    render_stmt(s, out);
                }
                out.push('}');
            }
        }
        Statement::Return { value, .. } => {
            out.push_str(&format!("return {};", print_expr(value)))
        }
        Statement::Call {
            receiver,
            method,
            args,
            ..
        } => {
            let rendered: Vec<String> = args.iter().map(print_expr).collect();
            out.push_str(&format!(
                "call {}.{method}({});",
                print_expr(receiver),
                rendered.join(",")
            ));
        }
    }
}

fn check_pull_up_method(
    model: &Model,
    super_class: &str,
    method: &str,
    variant: &MethodPullVariant,
) -> Vec<ContextViolation> {
    let mut out = Vec::new();
    let Some(super_def) = model.find_class(super_class) else {
        out.push(ContextViolation::new(
            codes::E_UNKNOWN_CLASS,
            super_class,
            format!("unknown class `{super_class}`"),
        ));
        return out;
    };
    let declaring: Vec<&ClassDef> = model
        .direct_subclasses(super_class)
        .into_iter()
        .filter(|c| c.methods.iter().any(|m| m.name == method))
        .collect();
    if declaring.len() < 2 {
        out.push(ContextViolation::new(
            codes::E_NOT_DECLARED,
            format!("{super_class}.{method}"),
            format!(
                "`{method}` is declared in {} direct subclass(es) of `{super_class}`, need at least 2",
                declaring.len()
            ),
        ));
        return out;
    }
    let defs: Vec<&MethodDef> = declaring
        .iter()
        .map(|c| {
            c.methods
                .iter()
                .find(|m| m.name == method)
                .expect("filtered above")
        })
        .collect();
    for (class, def) in declaring.iter().zip(&defs).skip(1) {
        if def.signature() != defs[0].signature() {
            out.push(ContextViolation::new(
                codes::E_OVERRIDE_MISMATCH,
                format!("{}.{method}", class.name),
                format!(
                    "signature of `{method}` in `{}` differs from `{}`",
                    class.name, declaring[0].name
                ),
            ));
        }
    }
    if lookup_member(model, super_class, method).is_ok() {
        out.push(ContextViolation::new(
            codes::E_NAME_CLASH,
            format!("{super_class}.{method}"),
            format!("`{super_class}` already has a member `{method}`"),
        ));
    }

    let availability = |body_owner: &ClassDef, out: &mut Vec<ContextViolation>| {
        let def = body_owner
            .methods
            .iter()
            .find(|m| m.name == method)
            .expect("declaring class has the method");
        let Some(body) = &def.body else {
            out.push(ContextViolation::new(
                codes::E_NOT_DECLARED,
                format!("{}.{method}", body_owner.name),
                format!("`{method}` in `{}` has no textual body to move", body_owner.name),
            ));
            return;
        };
        let mut used = BTreeSet::new();
        self_members_of_block(body, &mut used);
        for member in used {
            if member == method {
                continue; // the moved method itself stays resolvable
            }
            if lookup_member(model, super_class, &member).is_err() {
                out.push(ContextViolation::new(
                    codes::E_SUBCLASS_ATTR_USE,
                    format!("{}.{member}", body_owner.name),
                    format!(
                        "body of `{method}` uses `{member}`, which is not available at `{super_class}`"
                    ),
                ));
            }
        }
    };

    match variant {
        MethodPullVariant::Override { donor } => {
            match declaring.iter().find(|c| c.name == *donor) {
                Some(donor_class) => availability(donor_class, &mut out),
                None => out.push(ContextViolation::new(
                    codes::E_UNKNOWN_DONOR,
                    donor,
                    format!("`{donor}` is not a direct subclass of `{super_class}` declaring `{method}`"),
                )),
            }
        }
        MethodPullVariant::Unify => {
            let bodies: Vec<Option<String>> = defs.iter().map(|d| canonical_body(d)).collect();
            let all_same = bodies.windows(2).all(|w| w[0] == w[1]);
            if bodies.iter().any(Option::is_none) || !all_same {
                for (class, body) in declaring.iter().zip(&bodies).skip(1) {
                    if *body != bodies[0] {
                        out.push(ContextViolation::new(
                            codes::E_BODIES_DIFFER,
                            format!("{}.{method}", class.name),
                            format!(
                                "body of `{method}` in `{}` differs from `{}`",
                                class.name, declaring[0].name
                            ),
                        ));
                    }
                }
                if out.iter().all(|v| v.code != codes::E_BODIES_DIFFER) {
                    out.push(ContextViolation::new(
                        codes::E_BODIES_DIFFER,
                        format!("{super_class}.{method}"),
                        "bodies are missing or differ".to_string(),
                    ));
                }
            } else {
                availability(declaring[0], &mut out);
            }
        }
        MethodPullVariant::Abstract => {
            for config in &model.configs {
                for obj in &config.objects {
                    if obj.class_name == super_class {
                        out.push(ContextViolation::new(
                            codes::E_ABSTRACT_INSTANCES,
                            format!("{}.{}", config.name, obj.name),
                            format!(
                                "configuration `{}` instantiates `{super_class}` directly",
                                config.name
                            ),
                        ));
                    }
                }
            }
            // Every concrete descendant must provide the method below the
            // superclass, or the abstract signature stays unimplemented.
            for class in &model.classes {
                if class.is_abstract
                    || class.name == super_class
                    || !is_subclass_of(model, &class.name, super_class)
                {
                    continue;
                }
                let implemented = class_chain(model, &class.name)
                    .iter()
                    .take_while(|c| c.name != super_class)
                    .any(|c| c.methods.iter().any(|m| m.name == method && !m.is_abstract));
                if !implemented {
                    out.push(ContextViolation::new(
                        codes::E_ABSTRACT_UNIMPLEMENTED,
                        class.name.clone(),
                        format!(
                            "concrete class `{}` would inherit abstract `{method}` unimplemented",
                            class.name
                        ),
                    ));
                }
            }
        }
    }

    let published = defs.iter().any(|d| d.published);
    if published && !super_def.published {
        out.push(ContextViolation::new(
            codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
            super_class,
            format!("pulled method `{method}` is published but `{super_class}` is not"),
        ));
    }
    out
}

fn apply_pull_up_method(
    model: &Model,
    super_class: &str,
    method: &str,
    variant: &MethodPullVariant,
) -> Model {
    let declaring: Vec<String> = model
        .direct_subclasses(super_class)
        .into_iter()
        .filter(|c| c.methods.iter().any(|m| m.name == method))
        .map(|c| c.name.clone())
        .collect();
    let template_owner = match variant {
        MethodPullVariant::Override { donor } => donor.clone(),
        _ => declaring[0].clone(),
    };
    let mut moved = model
        .find_class(&template_owner)
        .and_then(|c| c.methods.iter().find(|m| m.name == method))
        .expect("context conditions checked")
        .clone();
    moved.published = declaring.iter().any(|name| {
        model
            .find_class(name)
            .and_then(|c| c.methods.iter().find(|m| m.name == method))
            .map(|m| m.published)
            .unwrap_or(false)
    });
    moved.pos = Pos::default();

    let mut after = model.clone();
    match variant {
        MethodPullVariant::Override { donor } => {
            // The donor body moves up; the other subclasses now override.
            if let Some(class) = after.find_class_mut(donor) {
                class.methods.retain(|m| m.name != method);
            }
        }
        MethodPullVariant::Abstract => {
            moved.body = None;
            moved.is_abstract = true;
            if let Some(class) = after.find_class_mut(super_class) {
                class.is_abstract = true;
            }
        }
        MethodPullVariant::Unify => {
            for name in &declaring {
                if let Some(class) = after.find_class_mut(name) {
                    class.methods.retain(|m| m.name != method);
                }
            }
        }
    }
    if let Some(class) = after.find_class_mut(super_class) {
        class.methods.push(moved);
    }
    after
}

// --- rename -----------------------------------------------------------------

fn check_rename(
    model: &Model,
    kind: RenameKind,
    owner: &str,
    old: &str,
    new: &str,
    allow_published: bool,
) -> Vec<ContextViolation> {
    let mut out = Vec::new();
    if old == new {
        out.push(ContextViolation::new(
            codes::E_SAME_NAME,
            format!("{owner}.{old}"),
            "old and new names are identical",
        ));
        return out;
    }
    if !new.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
        || !new.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        || crate::syntax::lexer::KEYWORDS.contains(&new)
    {
        out.push(ContextViolation::new(
            codes::E_NAME_CLASH,
            new,
            format!("`{new}` is not a usable identifier"),
        ));
        return out;
    }
    match kind {
        RenameKind::Class => {
            let Some(class) = model.find_class(old) else {
                out.push(ContextViolation::new(
                    codes::E_UNKNOWN_CLASS,
                    old,
                    format!("unknown class `{old}`"),
                ));
                return out;
            };
            if model.find_class(new).is_some() || matches!(new, "Int" | "Bool" | "String") {
                out.push(ContextViolation::new(
                    codes::E_NAME_CLASH,
                    new,
                    format!("a class named `{new}` already exists or is reserved"),
                ));
            }
            if class.published && !allow_published {
                out.push(ContextViolation::new(
                    codes::E_PUBLISHED_IMPACT,
                    old,
                    format!("class `{old}` is published; pass allow-published to rename it"),
                ));
            }
        }
        RenameKind::Attribute | RenameKind::Method => {
            if model.find_class(owner).is_none() {
                out.push(ContextViolation::new(
                    codes::E_UNKNOWN_CLASS,
                    owner,
                    format!("unknown class `{owner}`"),
                ));
                return out;
            }
            let Some(defining) = root_declaring(model, owner, old, kind) else {
                out.push(ContextViolation::new(
                    codes::E_UNKNOWN_MEMBER,
                    format!("{owner}.{old}"),
                    format!("`{owner}` has no member `{old}`"),
                ));
                return out;
            };
            let published = match kind {
                RenameKind::Attribute => lookup_attribute(model, &defining, old)
                    .map(|(_, a)| a.published)
                    .unwrap_or(false),
                _ => lookup_method(model, &defining, old)
                    .map(|(_, m)| m.published)
                    .unwrap_or(false),
            };
            // The new name must be free in the whole subtree of the
            // defining class, in both member namespaces.
            for class in &model.classes {
                if !is_subclass_of(model, &class.name, &defining) {
                    continue;
                }
                if lookup_member(model, &class.name, new).is_ok() {
                    out.push(ContextViolation::new(
                        codes::E_NAME_CLASH,
                        format!("{}.{new}", class.name),
                        format!("`{new}` is already visible on `{}`", class.name),
                    ));
                    break;
                }
            }
            let family_published = published
                || model.classes.iter().any(|c| {
                    is_subclass_of(model, &c.name, &defining)
                        && c.methods.iter().any(|m| m.name == old && m.published)
                });
            if family_published && !allow_published {
                out.push(ContextViolation::new(
                    codes::E_PUBLISHED_IMPACT,
                    format!("{defining}.{old}"),
                    format!("`{old}` is published; pass allow-published to rename it"),
                ));
            }
        }
    }
    out
}

fn apply_rename(
    model: &Model,
    kind: RenameKind,
    owner: &str,
    old: &str,
    new: &str,
    allow_published: bool,
) -> (Model, Vec<TestChange>) {
    let renamer = Renamer::prepare(model, kind, owner, old, new);
    let mut after = model.clone();
    renamer.rewrite_model(&mut after);

    // Glass-box tests touched by the rewrite are reported as patched.
    let mut changes = Vec::new();
    for (before_test, after_test) in model.tests.iter().zip(&after.tests) {
        if before_test.category == Cat::Acceptance && !allow_published {
            continue;
        }
        let fixture_changed = differs(model, &after, |m| {
            m.find_config(&before_test.fixture).map(print_via_config)
        });
        let driver_changed = differs(model, &after, |m| {
            m.find_sequence(&before_test.driver).map(print_via_sequence)
        });
        let pattern_changed = match &before_test.oracle {
            Some(Oracle {
                pattern: Some(p), ..
            }) => differs(model, &after, |m| m.find_pattern(p).map(print_via_pattern)),
            _ => false,
        };
        let own_changed = before_test != after_test;
        if fixture_changed || driver_changed || pattern_changed || own_changed {
            changes.push(TestChange {
                test: before_test.name.clone(),
                kind: TestChangeKind::Patched,
                detail: format!("references to `{old}` renamed to `{new}`"),
            });
        }
    }
    (after, changes)
}

fn differs<T: PartialEq>(
    before: &Model,
    after: &Model,
    select: impl Fn(&Model) -> Option<T>,
) -> bool {
    select(before) != select(after)
}

fn print_via_config(c: &ObjectConfiguration) -> String {
    let mut m = Model::named("x");
    m.configs.push(c.clone());
    print_model(&m)
}

fn print_via_sequence(s: &crate::model::SequenceDefinition) -> String {
    let mut m = Model::named("x");
    m.sequences.push(s.clone());
    print_model(&m)
}

fn print_via_pattern(p: &crate::model::PatternConfiguration) -> String {
    let mut m = Model::named("x");
    m.patterns.push(p.clone());
    print_model(&m)
}

/// The highest class in `owner`'s chain declaring `member`: the root of
/// the override family a method rename must carry along. Attributes cannot
/// be shadowed, so their single declaration is the root.
fn root_declaring(model: &Model, owner: &str, member: &str, kind: RenameKind) -> Option<String> {
    let declares = |c: &ClassDef| match kind {
        RenameKind::Attribute => c.attributes.iter().any(|a| a.name == member),
        _ => c.methods.iter().any(|m| m.name == member),
    };
    class_chain(model, owner)
        .iter()
        .rev()
        .find(|c| declares(c))
        .map(|c| c.name.clone())
}

/// Typed rewriting of every reference to the renamed element. Resolution
/// runs against the pre-rename model, so shadowing-free lookups decide
/// which occurrences belong to the renamed declaration.
struct Renamer<'m> {
    model: &'m Model,
    kind: RenameKind,
    defining: String,
    old: String,
    new: String,
}

impl<'m> Renamer<'m> {
    fn prepare(model: &'m Model, kind: RenameKind, owner: &str, old: &str, new: &str) -> Self {
        let defining = match kind {
            RenameKind::Class => old.to_string(),
            _ => root_declaring(model, owner, old, kind).unwrap_or_else(|| owner.to_string()),
        };
        Renamer {
            model,
            kind,
            defining,
            old: old.to_string(),
            new: new.to_string(),
        }
    }

    fn class_name(&self, name: &str) -> String {
        if self.kind == RenameKind::Class && name == self.old {
            self.new.clone()
        } else {
            name.to_string()
        }
    }

    fn type_ref(&self, ty: &TypeRef) -> TypeRef {
        if self.kind != RenameKind::Class {
            return ty.clone();
        }
        match ty {
            TypeRef::Class(c) if c == &self.old => TypeRef::Class(self.new.clone()),
            TypeRef::SetOf(c) if c == &self.old => TypeRef::SetOf(self.new.clone()),
            other => other.clone(),
        }
    }

    /// True when attribute `attr` on static type `class` resolves to the
    /// renamed declaration.
    fn attr_hits(&self, class: &str, attr: &str) -> bool {
        self.kind == RenameKind::Attribute
            && attr == self.old
            && lookup_attribute(self.model, class, attr)
                .map(|(c, _)| c.name == self.defining)
                .unwrap_or(false)
    }

    fn method_hits(&self, class: &str, method: &str) -> bool {
        self.kind == RenameKind::Method
            && method == self.old
            && is_subclass_of(self.model, class, &self.defining)
            && lookup_method(self.model, class, method).is_some()
    }

    fn rewrite_model(&self, model: &mut Model) {
        for class in &mut model.classes {
            let class_before = class.name.clone();
            class.name = self.class_name(&class.name);
            class.superclass = class.superclass.as_deref().map(|s| self.class_name(s));
            for attr in &mut class.attributes {
                if self.kind == RenameKind::Attribute
                    && attr.name == self.old
                    && class_before == self.defining
                {
                    attr.name = self.new.clone();
                }
                attr.ty = self.type_ref(&attr.ty);
            }
            for method in &mut class.methods {
                let params_before = method.params.clone();
                if self.kind == RenameKind::Method
                    && method.name == self.old
                    && is_subclass_of(self.model, &class_before, &self.defining)
                {
                    method.name = self.new.clone();
                }
                for param in &mut method.params {
                    param.ty = self.type_ref(&param.ty);
                }
                method.return_type = method.return_type.as_ref().map(|t| self.type_ref(t));
                if let Some(body) = &mut method.body {
                    // Scope resolution runs against the pre-rename model,
                    // so the captured pre-rename parameter types apply.
                    let mut scope = TypeScope::new(self.model);
                    scope.bind("self", TypeRef::Class(class_before.clone()));
                    for p in &params_before {
                        scope.bind(&p.name, p.ty.clone());
                    }
                    *body = self.rewrite_block(body, &mut scope);
                }
            }
        }
        for chart in &mut model.statecharts {
            let owner_before = chart.owner.clone();
            chart.owner = self.class_name(&chart.owner);
            for trans in &mut chart.transitions {
                if self.method_hits(&owner_before, &trans.trigger) {
                    trans.trigger = self.new.clone();
                }
                let trigger_before = if trans.trigger == self.new && self.kind == RenameKind::Method
                {
                    self.old.clone()
                } else {
                    trans.trigger.clone()
                };
                let mut scope = TypeScope::new(self.model);
                scope.bind("self", TypeRef::Class(owner_before.clone()));
                if let Some((_, def)) = lookup_method(self.model, &owner_before, &trigger_before) {
                    for (name, param) in trans.params.iter().zip(&def.params) {
                        scope.bind(name, param.ty.clone());
                    }
                }
                if let Some(guard) = &trans.guard {
                    trans.guard = Some(self.rewrite_expr(guard, &scope));
                }
                if let Some(actions) = &trans.actions {
                    let mut body_scope = TypeScope::new(self.model);
                    body_scope.bind("self", TypeRef::Class(owner_before.clone()));
                    if let Some((_, def)) =
                        lookup_method(self.model, &owner_before, &trigger_before)
                    {
                        for (name, param) in trans.params.iter().zip(&def.params) {
                            body_scope.bind(name, param.ty.clone());
                        }
                    }
                    trans.actions = Some(self.rewrite_block(actions, &mut body_scope));
                }
                if let Some(result) = &trans.result {
                    trans.result = Some(self.rewrite_expr(result, &scope));
                }
            }
        }
        for config in &mut model.configs {
            self.rewrite_objects(&mut config.objects);
        }
        for pattern in &mut model.patterns {
            let mut objects: Vec<crate::model::ObjectDecl> =
                pattern.objects.iter().map(|o| o.object.clone()).collect();
            self.rewrite_objects(&mut objects);
            for (po, obj) in pattern.objects.iter_mut().zip(objects) {
                po.object = obj;
            }
        }
        let sequence_scopes = self.sequence_scopes();
        for seq in &mut model.sequences {
            let scope_map = sequence_scopes
                .iter()
                .find(|(name, _)| name == &seq.name)
                .map(|(_, m)| m.clone())
                .unwrap_or_default();
            for step in &mut seq.steps {
                match step {
                    Step::Stimulus { target, method, .. } => {
                        if let Some(class) = scope_map.iter().find(|(n, _)| n == target) {
                            if self.method_hits(&class.1, method) {
                                *method = self.new.clone();
                            }
                        }
                    }
                    Step::ExpectMessage { callee, method, .. } => {
                        if let Some(class) = scope_map.iter().find(|(n, _)| n == callee) {
                            if self.method_hits(&class.1, method) {
                                *method = self.new.clone();
                            }
                        }
                    }
                    Step::Assert { expr, .. } => {
                        let mut scope = TypeScope::new(self.model);
                        for (name, class) in &scope_map {
                            scope.bind(name, TypeRef::Class(class.clone()));
                        }
                        *expr = self.rewrite_expr(expr, &scope);
                    }
                }
            }
        }
        for inv in &mut model.invariants {
            let context_before = inv.context_class.clone();
            inv.context_class = self.class_name(&inv.context_class);
            let mut scope = TypeScope::new(self.model);
            scope.bind("self", TypeRef::Class(context_before));
            inv.expr = self.rewrite_expr(&inv.expr, &scope);
        }
        for test in &mut model.tests {
            let fixture_classes: Vec<(String, String)> = self
                .model
                .find_config(&test.fixture)
                .map(|c| {
                    c.objects
                        .iter()
                        .map(|o| (o.name.clone(), o.class_name.clone()))
                        .collect()
                })
                .unwrap_or_default();
            if let Some(oracle) = &mut test.oracle {
                let mut scope = TypeScope::new(self.model);
                for (name, class) in &fixture_classes {
                    scope.bind(name, TypeRef::Class(class.clone()));
                }
                for assertion in &mut oracle.assertions {
                    *assertion = self.rewrite_expr(assertion, &scope);
                }
            }
        }
    }

    /// Object name to class name, per sequence, collected from every test
    /// referencing the sequence (first binding wins on conflicts).
    fn sequence_scopes(&self) -> Vec<(String, Vec<(String, String)>)> {
        let mut out: Vec<(String, Vec<(String, String)>)> = Vec::new();
        for seq in &self.model.sequences {
            let mut map: Vec<(String, String)> = Vec::new();
            for test in &self.model.tests {
                if test.driver != seq.name {
                    continue;
                }
                if let Some(config) = self.model.find_config(&test.fixture) {
                    for obj in &config.objects {
                        if !map.iter().any(|(n, _)| n == &obj.name) {
                            map.push((obj.name.clone(), obj.class_name.clone()));
                        }
                    }
                }
            }
            out.push((seq.name.clone(), map));
        }
        out
    }

    fn rewrite_objects(&self, objects: &mut [crate::model::ObjectDecl]) {
        for obj in objects {
            let class_before = obj.class_name.clone();
            obj.class_name = self.class_name(&obj.class_name);
            for assignment in &mut obj.assignments {
                if self.attr_hits(&class_before, &assignment.attr) {
                    assignment.attr = self.new.clone();
                }
            }
        }
    }

    fn rewrite_block(&self, block: &ActionBlock, scope: &mut TypeScope<'m>) -> ActionBlock {
        let mut statements = Vec::with_capacity(block.statements.len());
        for stmt in &block.statements {
            statements.push(match stmt {
                Statement::Local { name, value, pos } => {
                    let rewritten = self.rewrite_expr(value, scope);
                    if let Ok(ty) = type_of(value, scope) {
                        scope.bind(name, ty);
                    }
                    Statement::Local {
                        name: name.clone(),
                        value: rewritten,
                        pos: *pos,
                    }
                }
                Statement::Assign { target, value, pos } => Statement::Assign {
                    target: self.rewrite_expr(target, scope),
                    value: self.rewrite_expr(value, scope),
                    pos: *pos,
                },
                Statement::If {
                    condition,
                    then_block,
                    else_block,
                    pos,
                } => {
                    let mut then_scope = clone_scope(scope);
                    let mut else_scope = clone_scope(scope);
                    Statement::If {
                        condition: self.rewrite_expr(condition, scope),
                        then_block: self.rewrite_block(then_block, &mut then_scope),
                        else_block: else_block
                            .as_ref()
                            .map(|b| self.rewrite_block(b, &mut else_scope)),
                        pos: *pos,
                    }
                }
                Statement::Return { value, pos } => Statement::Return {
                    value: self.rewrite_expr(value, scope),
                    pos: *pos,
                },
                Statement::Call {
                    receiver,
                    method,
                    args,
                    pos,
                } => {
                    let method_name = match type_of(receiver, scope) {
                        Ok(TypeRef::Class(c)) if self.method_hits(&c, method) => self.new.clone(),
                        _ => method.clone(),
                    };
                    Statement::Call {
                        receiver: self.rewrite_expr(receiver, scope),
                        method: method_name,
                        args: args.iter().map(|a| self.rewrite_expr(a, scope)).collect(),
                        pos: *pos,
                    }
                }
            });
        }
        ActionBlock { statements }
    }

    fn rewrite_expr(&self, expr: &Expr, scope: &TypeScope<'m>) -> Expr {
        let kind = match &expr.kind {
            ExprKind::Attr(base, attr) => {
                let attr_name = match type_of(base, scope) {
                    Ok(TypeRef::Class(c)) if self.attr_hits(&c, attr) => self.new.clone(),
                    _ => attr.clone(),
                };
                ExprKind::Attr(Box::new(self.rewrite_expr(base, scope)), attr_name)
            }
            ExprKind::StateOf(base) => {
                ExprKind::StateOf(Box::new(self.rewrite_expr(base, scope)))
            }
            ExprKind::Not(e) => ExprKind::Not(Box::new(self.rewrite_expr(e, scope))),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(
                *op,
                Box::new(self.rewrite_expr(l, scope)),
                Box::new(self.rewrite_expr(r, scope)),
            ),
            ExprKind::Size(e) => ExprKind::Size(Box::new(self.rewrite_expr(e, scope))),
            ExprKind::Includes(l, r) => ExprKind::Includes(
                Box::new(self.rewrite_expr(l, scope)),
                Box::new(self.rewrite_expr(r, scope)),
            ),
            ExprKind::ForAll(inner, var, body) => {
                let rewritten_inner = self.rewrite_expr(inner, scope);
                let body = match type_of(inner, scope) {
                    Ok(TypeRef::SetOf(c)) => {
                        let mut child = clone_scope(scope);
                        child.bind(var, TypeRef::Class(c));
                        self.rewrite_expr(body, &child)
                    }
                    _ => self.rewrite_expr(body, scope),
                };
                ExprKind::ForAll(Box::new(rewritten_inner), var.clone(), Box::new(body))
            }
            ExprKind::Exists(inner, var, body) => {
                let rewritten_inner = self.rewrite_expr(inner, scope);
                let body = match type_of(inner, scope) {
                    Ok(TypeRef::SetOf(c)) => {
                        let mut child = clone_scope(scope);
                        child.bind(var, TypeRef::Class(c));
                        self.rewrite_expr(body, &child)
                    }
                    _ => self.rewrite_expr(body, scope),
                };
                ExprKind::Exists(Box::new(rewritten_inner), var.clone(), Box::new(body))
            }
            other => other.clone(),
        };
        Expr::new(kind, expr.pos)
    }
}

fn clone_scope<'m>(scope: &TypeScope<'m>) -> TypeScope<'m> {
    scope.clone_vars()
}

// --- obsolescence and preservation -------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsoleteWarning {
    pub test: String,
    pub reason: String,
}

/// Flags tests whose fixture, driver or oracle reference elements that no
/// longer exist, and generated statechart tests whose goal state is gone.
/// Tolerates ill-formed models so it can run after manual edits.
pub fn report_obsolete(model: &Model) -> Vec<ObsoleteWarning> {
    let mut out = Vec::new();
    for test in &model.tests {
        let mut warn = |reason: String| {
            out.push(ObsoleteWarning {
                test: test.name.clone(),
                reason,
            })
        };
        let fixture = model.find_config(&test.fixture);
        if fixture.is_none() {
            warn(format!("fixture `{}` no longer exists", test.fixture));
        }
        let driver = model.find_sequence(&test.driver);
        if driver.is_none() {
            warn(format!("driver `{}` no longer exists", test.driver));
        }
        if let Some(Oracle {
            pattern: Some(p), ..
        }) = &test.oracle
        {
            if model.find_pattern(p).is_none() {
                warn(format!("pattern `{p}` no longer exists"));
            }
        }
        let object_class = |name: &str| -> Option<String> {
            fixture.and_then(|f| {
                f.objects
                    .iter()
                    .find(|o| o.name == name)
                    .map(|o| o.class_name.clone())
            })
        };
        if let Some(fixture) = fixture {
            for obj in &fixture.objects {
                if model.find_class(&obj.class_name).is_none() {
                    warn(format!(
                        "fixture object `{}` references deleted class `{}`",
                        obj.name, obj.class_name
                    ));
                }
            }
        }
        if let Some(driver) = driver {
            for step in &driver.steps {
                if let Step::Stimulus { target, method, .. } = step {
                    if let Some(class) = object_class(target) {
                        if model.find_class(&class).is_some()
                            && lookup_method(model, &class, method).is_none()
                        {
                            warn(format!("stimulus method `{class}.{method}` no longer exists"));
                        }
                    }
                }
            }
        }
        // Generated tests assert `subject@state = "S"`; a missing chart or
        // state makes the goal element meaningless.
        if let Some(oracle) = &test.oracle {
            for assertion in &oracle.assertions {
                if let ExprKind::Binary(crate::model::BinOp::Eq, lhs, rhs) = &assertion.kind {
                    if let (ExprKind::StateOf(base), ExprKind::StrLit(state)) =
                        (&lhs.kind, &rhs.kind)
                    {
                        if let ExprKind::Name(subject) = &base.kind {
                            if let Some(class) = object_class(subject) {
                                match crate::model::check::effective_chart(model, &class) {
                                    None => warn(format!(
                                        "goal statechart of `{class}` no longer exists"
                                    )),
                                    Some(chart) if !chart.states.contains(state) => warn(
                                        format!("goal state `{state}` no longer exists"),
                                    ),
                                    Some(_) => {}
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PreservationResult {
    pub before: SuiteReport,
    pub after: SuiteReport,
    pub preserved: bool,
    pub warnings: Vec<String>,
}

impl PreservationResult {
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            out.push_str(&format!("WARNING {w}\n"));
        }
        out.push_str(&format!("PRESERVED {}\n", self.preserved));
        out
    }
}

/// Runs the acceptance suite on both models; behavior counts as preserved
/// when the per-test verdicts are identical. An empty acceptance suite is
/// vacuously preserved and flagged.
pub fn verify_preservation(before: &Model, after: &Model) -> PreservationResult {
    let filter = SuiteFilter::category(TestCategory::Acceptance);
    let before_report = run_suite(before, &filter);
    let after_report = run_suite(after, &filter);
    let preserved = before_report.verdicts_equal(&after_report);
    let mut warnings = Vec::new();
    if before_report.total() == 0 {
        warnings.push(format!(
            "{} acceptance suite is empty; preservation is vacuous",
            codes::W_NO_OBSERVERS
        ));
    }
    PreservationResult {
        before: before_report,
        after: after_report,
        preserved,
        warnings,
    }
}
