//! Static semantics: well-formedness checking, member lookup and the
//! published surface.
//!
//! The checker never aborts; it collects every violation it can see, in
//! document order. All sibling modules assume they are handed a model with
//! an empty diagnostic list.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{codes, Diagnostic};
use crate::model::types::{check_body, expr_mentions_state, type_of, BodyContext, TypeScope};
use crate::model::{
    AttributeDef, ClassDef, ConfigValue, Literal, MethodDef, Model, ObjectConfiguration,
    ObjectDecl, Oracle, PatternConfiguration, Pos, SequenceDefinition, Statechart, Step,
    TestCase, TestCategory, TypeRef,
};

/// Successful member lookup: the class the member is declared in plus the
/// definition itself.
#[derive(Clone, Copy, Debug)]
pub struct MemberResolution<'m> {
    pub defining_class: &'m ClassDef,
    pub member: MemberRef<'m>,
}

#[derive(Clone, Copy, Debug)]
pub enum MemberRef<'m> {
    Attribute(&'m AttributeDef),
    Method(&'m MethodDef),
}

/// Inheritance chain from `class` upward (inclusive). Tolerates unknown
/// superclasses and cycles so it can run on ill-formed models.
pub fn class_chain<'m>(model: &'m Model, class: &str) -> Vec<&'m ClassDef> {
    let mut chain = Vec::new();
    let mut seen = BTreeSet::new();
    let mut cur = model.find_class(class);
    while let Some(c) = cur {
        if !seen.insert(c.name.clone()) {
            break;
        }
        chain.push(c);
        cur = c.superclass.as_deref().and_then(|s| model.find_class(s));
    }
    chain
}

/// Reflexive subclass test: `sub` equals `sup` or inherits from it.
pub fn is_subclass_of(model: &Model, sub: &str, sup: &str) -> bool {
    class_chain(model, sub).iter().any(|c| c.name == sup)
}

/// Finds an attribute or method by walking the inheritance chain upward.
pub fn lookup_member<'m>(
    model: &'m Model,
    class: &str,
    member: &str,
) -> Result<MemberResolution<'m>, Diagnostic> {
    for c in class_chain(model, class) {
        if let Some(a) = c.attributes.iter().find(|a| a.name == member) {
            return Ok(MemberResolution {
                defining_class: c,
                member: MemberRef::Attribute(a),
            });
        }
        if let Some(m) = c.methods.iter().find(|m| m.name == member) {
            return Ok(MemberResolution {
                defining_class: c,
                member: MemberRef::Method(m),
            });
        }
    }
    Err(Diagnostic::error(
        codes::E_UNKNOWN_MEMBER,
        0,
        0,
        format!("no member `{member}` on class `{class}` or its ancestors"),
    ))
}

pub fn lookup_attribute<'m>(
    model: &'m Model,
    class: &str,
    attr: &str,
) -> Option<(&'m ClassDef, &'m AttributeDef)> {
    for c in class_chain(model, class) {
        if let Some(a) = c.attributes.iter().find(|a| a.name == attr) {
            return Some((c, a));
        }
    }
    None
}

pub fn lookup_method<'m>(
    model: &'m Model,
    class: &str,
    method: &str,
) -> Option<(&'m ClassDef, &'m MethodDef)> {
    for c in class_chain(model, class) {
        if let Some(m) = c.methods.iter().find(|m| m.name == method) {
            return Some((c, m));
        }
    }
    None
}

/// True when `member` resolves from `descendant` but not from `ancestor`,
/// i.e. it is declared strictly below `ancestor` in the hierarchy.
pub fn declared_below_only(model: &Model, ancestor: &str, descendant: &str, member: &str) -> bool {
    lookup_member(model, descendant, member).is_ok()
        && lookup_member(model, ancestor, member).is_err()
}

/// The statechart governing instances of `class`: the chart owned by the
/// nearest class in the inheritance chain, if any.
pub fn effective_chart<'m>(model: &'m Model, class: &str) -> Option<&'m Statechart> {
    class_chain(model, class)
        .iter()
        .find_map(|c| model.find_chart(&c.name))
}

/// All attributes visible on `class` (declared and inherited), nearest
/// declaration first.
pub fn effective_attributes<'m>(
    model: &'m Model,
    class: &str,
) -> Vec<(&'m ClassDef, &'m AttributeDef)> {
    let mut out = Vec::new();
    for c in class_chain(model, class) {
        for a in &c.attributes {
            out.push((c, a));
        }
    }
    out
}

/// The explicitly published part of the model: class names plus
/// `(defining class, member)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PublishedSurface {
    pub classes: BTreeSet<String>,
    pub members: BTreeSet<(String, String)>,
}

impl PublishedSurface {
    pub fn has_class(&self, class: &str) -> bool {
        self.classes.contains(class)
    }

    pub fn has_member(&self, class: &str, member: &str) -> bool {
        self.members
            .contains(&(class.to_string(), member.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.members.is_empty()
    }
}

/// Collects the published surface. A published member inside an unpublished
/// class violates the closure rule and is an error.
pub fn published_surface(model: &Model) -> Result<PublishedSurface, Diagnostic> {
    let mut surface = PublishedSurface::default();
    for class in &model.classes {
        if class.published {
            surface.classes.insert(class.name.clone());
        }
        for attr in &class.attributes {
            if attr.published {
                if !class.published {
                    return Err(Diagnostic::error(
                        codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
                        attr.pos.line,
                        attr.pos.column,
                        format!(
                            "attribute `{}` is published but its class `{}` is not",
                            attr.name, class.name
                        ),
                    ));
                }
                surface
                    .members
                    .insert((class.name.clone(), attr.name.clone()));
            }
        }
        for method in &class.methods {
            if method.published {
                if !class.published {
                    return Err(Diagnostic::error(
                        codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
                        method.pos.line,
                        method.pos.column,
                        format!(
                            "method `{}` is published but its class `{}` is not",
                            method.name, class.name
                        ),
                    ));
                }
                surface
                    .members
                    .insert((class.name.clone(), method.name.clone()));
            }
        }
    }
    Ok(surface)
}

/// Validates every well-formedness rule and returns the violations in
/// document order. An empty list means the model is well-formed.
pub fn check_wellformed(model: &Model) -> Vec<Diagnostic> {
    Checker { model, diags: Vec::new() }.run()
}

struct Checker<'m> {
    model: &'m Model,
    diags: Vec<Diagnostic>,
}

impl<'m> Checker<'m> {
    fn run(mut self) -> Vec<Diagnostic> {
        self.check_classes();
        self.check_statecharts();
        self.check_configs();
        self.check_patterns();
        self.check_sequence_names();
        self.check_invariants();
        self.check_tests();
        self.diags
    }

    fn err(&mut self, code: &'static str, pos: Pos, message: impl Into<String>) {
        self.diags
            .push(Diagnostic::error(code, pos.line, pos.column, message));
    }

    fn resolve_type(&mut self, ty: &TypeRef, pos: Pos) {
        match ty {
            TypeRef::Int | TypeRef::Bool | TypeRef::String => {}
            TypeRef::Class(name) => {
                if self.model.find_class(name).is_none() {
                    self.err(codes::E_UNKNOWN_CLASS, pos, format!("unknown class `{name}`"));
                }
            }
            TypeRef::SetOf(name) => {
                if matches!(name.as_str(), "Int" | "Bool" | "String") {
                    self.err(
                        codes::E_SET_OF_PRIMITIVE,
                        pos,
                        format!("set<{name}>: sets hold class instances only"),
                    );
                } else if self.model.find_class(name).is_none() {
                    self.err(codes::E_UNKNOWN_CLASS, pos, format!("unknown class `{name}`"));
                }
            }
        }
    }

    fn participates_in_cycle(&self, name: &str) -> bool {
        let mut seen = BTreeSet::new();
        seen.insert(name.to_string());
        let mut cur = self
            .model
            .find_class(name)
            .and_then(|c| c.superclass.clone());
        while let Some(s) = cur {
            if s == name {
                return true;
            }
            if !seen.insert(s.clone()) {
                return false;
            }
            cur = self.model.find_class(&s).and_then(|c| c.superclass.clone());
        }
        false
    }

    fn check_classes(&mut self) {
        let mut seen = BTreeSet::new();
        for class in &self.model.classes {
            let pos = class.origin.pos;
            if matches!(class.name.as_str(), "Int" | "Bool" | "String") {
                self.err(
                    codes::E_RESERVED_NAME,
                    pos,
                    format!("class name `{}` collides with a primitive type", class.name),
                );
            }
            if !seen.insert(class.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    pos,
                    format!("duplicate class `{}`", class.name),
                );
                continue;
            }
            if let Some(sup) = &class.superclass {
                if self.model.find_class(sup).is_none() {
                    self.err(
                        codes::E_UNKNOWN_CLASS,
                        pos,
                        format!("unknown superclass `{sup}` of `{}`", class.name),
                    );
                } else if self.participates_in_cycle(&class.name) {
                    self.err(
                        codes::E_INHERIT_CYCLE,
                        pos,
                        format!("inheritance cycle through `{}`", class.name),
                    );
                    continue;
                }
            }
            self.check_class_members(class);
        }
    }

    fn check_class_members(&mut self, class: &ClassDef) {
        let ancestors: Vec<&ClassDef> = class_chain(self.model, &class.name)
            .into_iter()
            .skip(1)
            .collect();

        let mut attr_names = BTreeSet::new();
        for attr in &class.attributes {
            if !attr_names.insert(attr.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    attr.pos,
                    format!("duplicate attribute `{}` in `{}`", attr.name, class.name),
                );
                continue;
            }
            if let Some(anc) = ancestors
                .iter()
                .find(|a| a.attributes.iter().any(|x| x.name == attr.name))
            {
                self.err(
                    codes::E_ATTR_SHADOW,
                    attr.pos,
                    format!(
                        "attribute `{}` in `{}` shadows declaration in `{}`",
                        attr.name, class.name, anc.name
                    ),
                );
            }
            self.resolve_type(&attr.ty, attr.pos);
        }

        let mut method_names = BTreeSet::new();
        for method in &class.methods {
            if !method_names.insert(method.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    method.pos,
                    format!("duplicate method `{}` in `{}`", method.name, class.name),
                );
                continue;
            }
            let mut param_names = BTreeSet::new();
            for p in &method.params {
                if !param_names.insert(p.name.clone()) {
                    self.err(
                        codes::E_DUP_NAME,
                        method.pos,
                        format!("duplicate parameter `{}` in `{}`", p.name, method.name),
                    );
                }
                self.resolve_type(&p.ty, method.pos);
            }
            if let Some(rt) = &method.return_type {
                self.resolve_type(rt, method.pos);
            }
            if let Some(overridden) = ancestors
                .iter()
                .find_map(|a| a.methods.iter().find(|x| x.name == method.name))
            {
                if overridden.signature() != method.signature() {
                    self.err(
                        codes::E_OVERRIDE_MISMATCH,
                        method.pos,
                        format!(
                            "override of `{}` in `{}` does not match the overridden signature",
                            method.name, class.name
                        ),
                    );
                }
            }
            if method.is_abstract && method.body.is_some() {
                self.err(
                    codes::E_ABSTRACT_BODY,
                    method.pos,
                    format!("abstract method `{}` has a body", method.name),
                );
            }
            if let Some(body) = &method.body {
                let ctx = BodyContext {
                    model: self.model,
                    owner: &class.name,
                    params: &method.params,
                    return_type: method.return_type.as_ref(),
                    in_transition: false,
                };
                self.diags.extend(check_body(&ctx, body));
            }
        }

        // Behavior-source exclusivity at the class level: a concrete class
        // must have every abstract method (declared or inherited) overridden
        // with a body or a statechart trigger somewhere below the
        // declaration point. Nearest declaration wins.
        if !class.is_abstract {
            let mut effective: BTreeMap<&str, &MethodDef> = BTreeMap::new();
            for c in class_chain(self.model, &class.name) {
                for m in &c.methods {
                    effective.entry(m.name.as_str()).or_insert(m);
                }
            }
            for (name, m) in effective {
                if m.is_abstract {
                    self.err(
                        codes::E_ABSTRACT_UNIMPLEMENTED,
                        class.origin.pos,
                        format!(
                            "non-abstract class `{}` leaves method `{name}` abstract",
                            class.name
                        ),
                    );
                }
            }
        }

        for attr in &class.attributes {
            if attr.published && !class.published {
                self.err(
                    codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
                    attr.pos,
                    format!(
                        "attribute `{}` is published but its class `{}` is not",
                        attr.name, class.name
                    ),
                );
            }
        }
        for method in &class.methods {
            if method.published && !class.published {
                self.err(
                    codes::E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS,
                    method.pos,
                    format!(
                        "method `{}` is published but its class `{}` is not",
                        method.name, class.name
                    ),
                );
            }
        }
    }

    fn check_statecharts(&mut self) {
        let mut seen = BTreeSet::new();
        for chart in &self.model.statecharts {
            let pos = chart.origin.pos;
            if !seen.insert(chart.owner.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    pos,
                    format!("duplicate statechart for `{}`", chart.owner),
                );
                continue;
            }
            if self.model.find_class(&chart.owner).is_none() {
                self.err(
                    codes::E_UNKNOWN_CLASS,
                    pos,
                    format!("statechart for unknown class `{}`", chart.owner),
                );
                continue;
            }
            // One chart per inheritance chain keeps dispatch unambiguous.
            if let Some(anc) = class_chain(self.model, &chart.owner)
                .into_iter()
                .skip(1)
                .find(|c| self.model.find_chart(&c.name).is_some())
            {
                self.err(
                    codes::E_CHART_CONFLICT,
                    pos,
                    format!(
                        "statechart for `{}` conflicts with the chart of ancestor `{}`",
                        chart.owner, anc.name
                    ),
                );
            }
            let mut states = BTreeSet::new();
            for s in &chart.states {
                if !states.insert(s.clone()) {
                    self.err(codes::E_DUP_NAME, pos, format!("duplicate state `{s}`"));
                }
            }
            if !states.contains(&chart.initial) {
                self.err(
                    codes::E_UNKNOWN_STATE,
                    pos,
                    format!("initial state `{}` is not declared", chart.initial),
                );
            }
            for trans in &chart.transitions {
                self.check_transition(chart, &states, trans);
            }
        }
    }

    fn check_transition(
        &mut self,
        chart: &Statechart,
        states: &BTreeSet<String>,
        trans: &crate::model::TransitionDef,
    ) {
        for s in [&trans.source, &trans.target] {
            if !states.contains(s) {
                self.err(codes::E_UNKNOWN_STATE, trans.pos, format!("unknown state `{s}`"));
            }
        }
        let method = match lookup_method(self.model, &chart.owner, &trans.trigger) {
            Some((_, m)) => m,
            None => {
                self.err(
                    codes::E_UNKNOWN_TRIGGER,
                    trans.pos,
                    format!(
                        "trigger `{}` is not a method of `{}`",
                        trans.trigger, chart.owner
                    ),
                );
                return;
            }
        };
        if method.body.is_some() {
            self.err(
                codes::E_TRIGGER_HAS_BODY,
                trans.pos,
                format!("trigger `{}` has a textual body", trans.trigger),
            );
            return;
        }
        if method.is_abstract {
            self.err(
                codes::E_TRIGGER_ABSTRACT,
                trans.pos,
                format!("trigger `{}` is abstract", trans.trigger),
            );
            return;
        }
        if method.params.len() != trans.params.len() {
            self.err(
                codes::E_TRIGGER_ARITY,
                trans.pos,
                format!(
                    "transition declares {} parameter(s), trigger `{}` has {}",
                    trans.params.len(),
                    trans.trigger,
                    method.params.len()
                ),
            );
            return;
        }
        let mut param_names = BTreeSet::new();
        for p in &trans.params {
            if p == "self" || !param_names.insert(p.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    trans.pos,
                    format!("invalid transition parameter `{p}`"),
                );
            }
        }
        // Transition parameters take the trigger's declared types,
        // positionally.
        let params: Vec<crate::model::Param> = trans
            .params
            .iter()
            .zip(&method.params)
            .map(|(name, mp)| crate::model::Param {
                name: name.clone(),
                ty: mp.ty.clone(),
            })
            .collect();
        let mut scope = TypeScope::new(self.model);
        scope.bind("self", TypeRef::Class(chart.owner.clone()));
        for p in &params {
            scope.bind(&p.name, p.ty.clone());
        }
        if let Some(guard) = &trans.guard {
            match type_of(guard, &scope) {
                Ok(TypeRef::Bool) => {}
                Ok(other) => self.err(
                    codes::E_TYPE,
                    guard.pos,
                    format!("guard must be Bool, found {other}"),
                ),
                Err(d) => self.diags.push(d),
            }
        }
        if let Some(actions) = &trans.actions {
            let ctx = BodyContext {
                model: self.model,
                owner: &chart.owner,
                params: &params,
                return_type: None,
                in_transition: true,
            };
            self.diags.extend(check_body(&ctx, actions));
        }
        match (&method.return_type, &trans.result) {
            (Some(rt), Some(result)) => match type_of(result, &scope) {
                Ok(t) if conforms(self.model, &t, rt) => {}
                Ok(t) => self.err(
                    codes::E_TYPE,
                    result.pos,
                    format!("transition result has type {t}, trigger returns {rt}"),
                ),
                Err(d) => self.diags.push(d),
            },
            (Some(_), None) => self.err(
                codes::E_MISSING_RETURN,
                trans.pos,
                format!(
                    "trigger `{}` has a return type but the transition has no `returns`",
                    trans.trigger
                ),
            ),
            (None, Some(result)) => self.err(
                codes::E_TYPE,
                result.pos,
                format!("trigger `{}` returns nothing", trans.trigger),
            ),
            (None, None) => {}
        }
    }

    fn check_object_decl(
        &mut self,
        decl: &ObjectDecl,
        names: &BTreeSet<String>,
        classes: &BTreeMap<String, String>,
        allow_abstract: bool,
    ) {
        let class = match self.model.find_class(&decl.class_name) {
            Some(c) => c,
            None => {
                self.err(
                    codes::E_UNKNOWN_CLASS,
                    decl.pos,
                    format!("unknown class `{}`", decl.class_name),
                );
                return;
            }
        };
        if class.is_abstract && !allow_abstract {
            self.err(
                codes::E_ABSTRACT_INSTANTIATION,
                decl.pos,
                format!("cannot instantiate abstract class `{}`", class.name),
            );
        }
        let mut assigned = BTreeSet::new();
        for a in &decl.assignments {
            if !assigned.insert(a.attr.clone()) {
                self.err(
                    codes::E_DUP_ASSIGN,
                    a.pos,
                    format!("attribute `{}` assigned twice", a.attr),
                );
                continue;
            }
            let attr = match lookup_attribute(self.model, &decl.class_name, &a.attr) {
                Some((_, attr)) => attr,
                None => {
                    self.err(
                        codes::E_UNKNOWN_ATTR,
                        a.pos,
                        format!("class `{}` has no attribute `{}`", decl.class_name, a.attr),
                    );
                    continue;
                }
            };
            match (&attr.ty, &a.value) {
                (ty, ConfigValue::Literal(lit)) => {
                    if *ty != lit.type_ref() {
                        self.err(
                            codes::E_VALUE_TYPE,
                            a.pos,
                            format!("attribute `{}` has type {ty}, value is {}", a.attr, lit.type_ref()),
                        );
                    }
                }
                (TypeRef::Class(target), ConfigValue::Ref(name)) => {
                    self.check_object_ref(name, target, names, classes, a.pos);
                }
                (TypeRef::SetOf(target), ConfigValue::Set(members)) => {
                    let mut elems = BTreeSet::new();
                    for m in members {
                        if !elems.insert(m.clone()) {
                            self.err(
                                codes::E_DUP_SET_ELEM,
                                a.pos,
                                format!("duplicate element `{m}` in set"),
                            );
                        }
                        self.check_object_ref(m, target, names, classes, a.pos);
                    }
                }
                (ty, value) => {
                    self.err(
                        codes::E_VALUE_TYPE,
                        a.pos,
                        format!("attribute `{}` has type {ty}, incompatible value `{value}`", a.attr),
                    );
                }
            }
        }
    }

    fn check_object_ref(
        &mut self,
        name: &str,
        target_class: &str,
        names: &BTreeSet<String>,
        classes: &BTreeMap<String, String>,
        pos: Pos,
    ) {
        if !names.contains(name) {
            self.err(
                codes::E_UNKNOWN_OBJECT,
                pos,
                format!("object `{name}` is not declared in this configuration"),
            );
            return;
        }
        if let Some(cls) = classes.get(name) {
            if !is_subclass_of(self.model, cls, target_class) {
                self.err(
                    codes::E_VALUE_TYPE,
                    pos,
                    format!("object `{name}` of class `{cls}` does not conform to `{target_class}`"),
                );
            }
        }
    }

    fn config_tables(objects: &[ObjectDecl]) -> (BTreeSet<String>, BTreeMap<String, String>) {
        let names: BTreeSet<String> = objects.iter().map(|o| o.name.clone()).collect();
        let classes: BTreeMap<String, String> = objects
            .iter()
            .map(|o| (o.name.clone(), o.class_name.clone()))
            .collect();
        (names, classes)
    }

    fn check_configs(&mut self) {
        let mut seen = BTreeSet::new();
        for config in &self.model.configs {
            if !seen.insert(config.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    config.origin.pos,
                    format!("duplicate configuration `{}`", config.name),
                );
                continue;
            }
            let (names, classes) = Self::config_tables(&config.objects);
            let mut declared = BTreeSet::new();
            for obj in &config.objects {
                if !declared.insert(obj.name.clone()) {
                    self.err(
                        codes::E_DUP_NAME,
                        obj.pos,
                        format!("duplicate object `{}`", obj.name),
                    );
                    continue;
                }
                self.check_object_decl(obj, &names, &classes, false);
            }
        }
    }

    fn check_patterns(&mut self) {
        let mut seen = BTreeSet::new();
        for pattern in &self.model.patterns {
            if !seen.insert(pattern.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    pattern.origin.pos,
                    format!("duplicate pattern `{}`", pattern.name),
                );
                continue;
            }
            let objects: Vec<ObjectDecl> =
                pattern.objects.iter().map(|p| p.object.clone()).collect();
            let (names, classes) = Self::config_tables(&objects);
            let mut declared = BTreeSet::new();
            for obj in &objects {
                if !declared.insert(obj.name.clone()) {
                    self.err(
                        codes::E_DUP_NAME,
                        obj.pos,
                        format!("duplicate object `{}`", obj.name),
                    );
                    continue;
                }
                self.check_object_decl(obj, &names, &classes, true);
            }
        }
    }

    fn check_sequence_names(&mut self) {
        let mut seen = BTreeSet::new();
        for seq in &self.model.sequences {
            if !seen.insert(seq.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    seq.origin.pos,
                    format!("duplicate sequence `{}`", seq.name),
                );
            }
        }
    }

    fn check_invariants(&mut self) {
        let mut seen = BTreeSet::new();
        for inv in &self.model.invariants {
            if !seen.insert(inv.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    inv.origin.pos,
                    format!("duplicate invariant `{}`", inv.name),
                );
                continue;
            }
            if self.model.find_class(&inv.context_class).is_none() {
                self.err(
                    codes::E_UNKNOWN_CLASS,
                    inv.origin.pos,
                    format!("invariant context class `{}` is unknown", inv.context_class),
                );
                continue;
            }
            let mut scope = TypeScope::new(self.model);
            scope.bind("self", TypeRef::Class(inv.context_class.clone()));
            match type_of(&inv.expr, &scope) {
                Ok(TypeRef::Bool) => {}
                Ok(other) => self.err(
                    codes::E_TYPE,
                    inv.expr.pos,
                    format!("invariant must be Bool, found {other}"),
                ),
                Err(d) => self.diags.push(d),
            }
        }
    }

    fn check_tests(&mut self) {
        let mut seen = BTreeSet::new();
        for test in &self.model.tests {
            if !seen.insert(test.name.clone()) {
                self.err(
                    codes::E_DUP_NAME,
                    test.origin.pos,
                    format!("duplicate test `{}`", test.name),
                );
                continue;
            }
            self.check_test(test);
        }
    }

    fn check_test(&mut self, test: &TestCase) {
        let pos = test.origin.pos;
        let fixture = match self.model.find_config(&test.fixture) {
            Some(f) => f,
            None => {
                self.err(
                    codes::E_UNKNOWN_FIXTURE,
                    pos,
                    format!("test `{}` references unknown fixture `{}`", test.name, test.fixture),
                );
                return;
            }
        };
        let driver = match self.model.find_sequence(&test.driver) {
            Some(d) => d,
            None => {
                self.err(
                    codes::E_UNKNOWN_DRIVER,
                    pos,
                    format!("test `{}` references unknown driver `{}`", test.name, test.driver),
                );
                return;
            }
        };
        let pattern = match &test.oracle {
            Some(Oracle { pattern: Some(p), .. }) => match self.model.find_pattern(p) {
                Some(pat) => Some(pat),
                None => {
                    self.err(
                        codes::E_UNKNOWN_PATTERN,
                        pos,
                        format!("test `{}` references unknown pattern `{p}`", test.name),
                    );
                    return;
                }
            },
            _ => None,
        };

        let object_classes: BTreeMap<String, String> = fixture
            .objects
            .iter()
            .map(|o| (o.name.clone(), o.class_name.clone()))
            .collect();
        let mut scope = TypeScope::new(self.model);
        for (name, class) in &object_classes {
            scope.bind(name, TypeRef::Class(class.clone()));
        }

        self.check_driver(test, driver, &object_classes, &scope);

        if let Some(oracle) = &test.oracle {
            for assert in &oracle.assertions {
                match type_of(assert, &scope) {
                    Ok(TypeRef::Bool) => {}
                    Ok(other) => self.err(
                        codes::E_TYPE,
                        assert.pos,
                        format!("oracle assertion must be Bool, found {other}"),
                    ),
                    Err(d) => self.diags.push(d),
                }
            }
        }

        if test.category == TestCategory::Acceptance {
            self.check_acceptance_surface(test, fixture, driver, pattern);
        }
    }

    fn check_driver(
        &mut self,
        test: &TestCase,
        driver: &SequenceDefinition,
        object_classes: &BTreeMap<String, String>,
        scope: &TypeScope,
    ) {
        for step in &driver.steps {
            match step {
                Step::Stimulus { target, method, args, expect, pos } => {
                    let class = match object_classes.get(target) {
                        Some(c) => c.clone(),
                        None => {
                            self.err(
                                codes::E_UNKNOWN_OBJECT,
                                *pos,
                                format!(
                                    "object `{target}` is not in fixture `{}` of test `{}`",
                                    test.fixture, test.name
                                ),
                            );
                            continue;
                        }
                    };
                    let m = match lookup_method(self.model, &class, method) {
                        Some((_, m)) => m,
                        None => {
                            self.err(
                                codes::E_UNKNOWN_MEMBER,
                                *pos,
                                format!("class `{class}` has no method `{method}`"),
                            );
                            continue;
                        }
                    };
                    if m.params.len() != args.len() {
                        self.err(
                            codes::E_TYPE,
                            *pos,
                            format!(
                                "`{method}` expects {} argument(s), got {}",
                                m.params.len(),
                                args.len()
                            ),
                        );
                        continue;
                    }
                    for (arg, param) in args.iter().zip(&m.params) {
                        if arg.type_ref() != param.ty {
                            self.err(
                                codes::E_TYPE,
                                *pos,
                                format!(
                                    "argument for `{}` has type {}, expected {}",
                                    param.name,
                                    arg.type_ref(),
                                    param.ty
                                ),
                            );
                        }
                    }
                    if let Some(lit) = expect {
                        match &m.return_type {
                            Some(rt) if *rt == lit.type_ref() => {}
                            Some(rt) => self.err(
                                codes::E_TYPE,
                                *pos,
                                format!("expected literal has type {}, method returns {rt}", lit.type_ref()),
                            ),
                            None => self.err(
                                codes::E_TYPE,
                                *pos,
                                format!("`{method}` returns nothing; `expect` is invalid"),
                            ),
                        }
                    }
                }
                Step::ExpectMessage { caller, callee, method, pos } => {
                    for obj in [caller, callee] {
                        if !object_classes.contains_key(obj) {
                            self.err(
                                codes::E_UNKNOWN_OBJECT,
                                *pos,
                                format!(
                                    "object `{obj}` is not in fixture `{}` of test `{}`",
                                    test.fixture, test.name
                                ),
                            );
                        }
                    }
                    if let Some(class) = object_classes.get(callee) {
                        if lookup_method(self.model, class, method).is_none() {
                            self.err(
                                codes::E_UNKNOWN_MEMBER,
                                *pos,
                                format!("class `{class}` has no method `{method}`"),
                            );
                        }
                    }
                }
                Step::Assert { expr, pos } => match type_of(expr, scope) {
                    Ok(TypeRef::Bool) => {}
                    Ok(other) => self.err(
                        codes::E_TYPE,
                        *pos,
                        format!("assertion must be Bool, found {other}"),
                    ),
                    Err(d) => self.diags.push(d),
                },
            }
        }
    }

    /// Acceptance tests may only mention published classes and members; the
    /// `@state` pseudo-attribute observes internal statechart state and is
    /// therefore excluded as well.
    fn check_acceptance_surface(
        &mut self,
        test: &TestCase,
        fixture: &ObjectConfiguration,
        driver: &SequenceDefinition,
        pattern: Option<&PatternConfiguration>,
    ) {
        let surface = match published_surface(self.model) {
            Ok(s) => s,
            Err(_) => return, // already reported per class
        };
        let pos = test.origin.pos;
        let check_class = |this: &mut Self, class: &str| {
            if this.model.find_class(class).is_some() && !surface.has_class(class) {
                this.err(
                    codes::E_ACCEPTANCE_UNPUBLISHED,
                    pos,
                    format!("acceptance test `{}` mentions unpublished class `{class}`", test.name),
                );
            }
        };
        let check_member = |this: &mut Self, class: &str, member: &str| {
            if let Ok(res) = lookup_member(this.model, class, member) {
                if !surface.has_member(&res.defining_class.name, member) {
                    this.err(
                        codes::E_ACCEPTANCE_UNPUBLISHED,
                        pos,
                        format!(
                            "acceptance test `{}` mentions unpublished member `{}.{member}`",
                            test.name, res.defining_class.name
                        ),
                    );
                }
            }
        };

        let mut decls: Vec<&ObjectDecl> = fixture.objects.iter().collect();
        let pattern_decls: Vec<&ObjectDecl> = pattern
            .map(|p| p.objects.iter().map(|o| &o.object).collect())
            .unwrap_or_default();
        decls.extend(pattern_decls);
        for obj in decls {
            check_class(self, &obj.class_name);
            for a in &obj.assignments {
                check_member(self, &obj.class_name, &a.attr);
            }
        }

        let object_classes: BTreeMap<String, String> = fixture
            .objects
            .iter()
            .map(|o| (o.name.clone(), o.class_name.clone()))
            .collect();
        let mut exprs: Vec<&crate::model::Expr> = Vec::new();
        for step in &driver.steps {
            match step {
                Step::Stimulus { target, method, .. } => {
                    if let Some(class) = object_classes.get(target) {
                        check_member(self, class, method);
                    }
                }
                Step::ExpectMessage { callee, method, .. } => {
                    if let Some(class) = object_classes.get(callee) {
                        check_member(self, class, method);
                    }
                }
                Step::Assert { expr, .. } => exprs.push(expr),
            }
        }
        if let Some(oracle) = &test.oracle {
            exprs.extend(oracle.assertions.iter());
        }
        let scope = {
            let mut s = TypeScope::new(self.model);
            for (name, class) in &object_classes {
                s.bind(name, TypeRef::Class(class.clone()));
            }
            s
        };
        for expr in exprs {
            if expr_mentions_state(expr) {
                self.err(
                    codes::E_ACCEPTANCE_UNPUBLISHED,
                    expr.pos,
                    format!(
                        "acceptance test `{}` observes internal state via `@state`",
                        test.name
                    ),
                );
            }
            for (class, member) in crate::model::types::navigated_members(expr, &scope) {
                check_member(self, &class, &member);
            }
        }
    }
}

/// Assignment compatibility: exact for primitives and sets, covariant for
/// single object references.
pub fn conforms(model: &Model, actual: &TypeRef, expected: &TypeRef) -> bool {
    match (actual, expected) {
        (TypeRef::Class(a), TypeRef::Class(b)) => is_subclass_of(model, a, b),
        (a, b) => a == b,
    }
}

/// True when `lit` can be stored in an attribute of type `ty`.
pub fn literal_matches(lit: &Literal, ty: &TypeRef) -> bool {
    lit.type_ref() == *ty
}
