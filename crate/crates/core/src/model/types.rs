//! Typing of constraint expressions and the action language.

use std::collections::BTreeMap;

use crate::diag::{codes, Diagnostic};
use crate::model::check::{
    conforms, effective_chart, lookup_attribute, lookup_method,
};
use crate::model::{
    ActionBlock, BinOp, Expr, ExprKind, Model, Param, Pos, Statement, TypeRef,
};

/// Static types of the free names an expression may use.
pub struct TypeScope<'m> {
    pub model: &'m Model,
    vars: BTreeMap<String, TypeRef>,
}

impl<'m> TypeScope<'m> {
    pub fn new(model: &'m Model) -> Self {
        TypeScope {
            model,
            vars: BTreeMap::new(),
        }
    }

    pub fn bind(&mut self, name: &str, ty: TypeRef) {
        self.vars.insert(name.to_string(), ty);
    }

    pub fn get(&self, name: &str) -> Option<&TypeRef> {
        self.vars.get(name)
    }

    fn child_with(&self, name: &str, ty: TypeRef) -> TypeScope<'m> {
        let mut vars = self.vars.clone();
        vars.insert(name.to_string(), ty);
        TypeScope {
            model: self.model,
            vars,
        }
    }

    /// An independent copy sharing the same model.
    pub fn clone_vars(&self) -> TypeScope<'m> {
        TypeScope {
            model: self.model,
            vars: self.vars.clone(),
        }
    }
}

fn type_err(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(codes::E_TYPE, pos.line, pos.column, message)
}

/// Equality (`=`, `<>`) is defined between equal primitive types, between
/// any two object types, and between any two set types.
fn eq_comparable(a: &TypeRef, b: &TypeRef) -> bool {
    match (a, b) {
        (TypeRef::Class(_), TypeRef::Class(_)) => true,
        (TypeRef::SetOf(_), TypeRef::SetOf(_)) => true,
        (x, y) => x == y,
    }
}

/// Computes the type of `expr`, or a diagnostic pointing at the offending
/// node. `forAll`/`exists` yield Bool; `size` yields Int.
pub fn type_of(expr: &Expr, scope: &TypeScope) -> Result<TypeRef, Diagnostic> {
    match &expr.kind {
        ExprKind::IntLit(_) => Ok(TypeRef::Int),
        ExprKind::BoolLit(_) => Ok(TypeRef::Bool),
        ExprKind::StrLit(_) => Ok(TypeRef::String),
        ExprKind::Name(name) => scope
            .get(name)
            .cloned()
            .ok_or_else(|| type_err(expr.pos, format!("unknown name `{name}`"))),
        ExprKind::Attr(base, attr) => {
            let base_ty = type_of(base, scope)?;
            let class = match base_ty {
                TypeRef::Class(c) => c,
                other => {
                    return Err(type_err(
                        expr.pos,
                        format!("cannot navigate `{attr}` on {other}"),
                    ))
                }
            };
            match lookup_attribute(scope.model, &class, attr) {
                Some((_, a)) => Ok(a.ty.clone()),
                None => Err(type_err(
                    expr.pos,
                    format!("class `{class}` has no attribute `{attr}`"),
                )),
            }
        }
        ExprKind::StateOf(base) => {
            let base_ty = type_of(base, scope)?;
            let class = match base_ty {
                TypeRef::Class(c) => c,
                other => return Err(type_err(expr.pos, format!("`@state` on {other}"))),
            };
            if effective_chart(scope.model, &class).is_none() {
                return Err(type_err(
                    expr.pos,
                    format!("class `{class}` has no statechart; `@state` is undefined"),
                ));
            }
            Ok(TypeRef::String)
        }
        ExprKind::Not(inner) => match type_of(inner, scope)? {
            TypeRef::Bool => Ok(TypeRef::Bool),
            other => Err(type_err(expr.pos, format!("`not` needs Bool, found {other}"))),
        },
        ExprKind::Binary(op, lhs, rhs) => {
            let lt = type_of(lhs, scope)?;
            let rt = type_of(rhs, scope)?;
            match op {
                BinOp::And | BinOp::Or | BinOp::Implies => {
                    if lt == TypeRef::Bool && rt == TypeRef::Bool {
                        Ok(TypeRef::Bool)
                    } else {
                        Err(type_err(
                            expr.pos,
                            format!("`{}` needs Bool operands, found {lt} and {rt}", op.symbol()),
                        ))
                    }
                }
                BinOp::Eq | BinOp::Ne => {
                    if eq_comparable(&lt, &rt) {
                        Ok(TypeRef::Bool)
                    } else {
                        Err(type_err(
                            expr.pos,
                            format!("cannot compare {lt} with {rt}"),
                        ))
                    }
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    if lt == TypeRef::Int && rt == TypeRef::Int {
                        Ok(TypeRef::Bool)
                    } else {
                        Err(type_err(
                            expr.pos,
                            format!("`{}` needs Int operands, found {lt} and {rt}", op.symbol()),
                        ))
                    }
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    if lt == TypeRef::Int && rt == TypeRef::Int {
                        Ok(TypeRef::Int)
                    } else {
                        Err(type_err(
                            expr.pos,
                            format!("`{}` needs Int operands, found {lt} and {rt}", op.symbol()),
                        ))
                    }
                }
            }
        }
        ExprKind::Size(inner) => match type_of(inner, scope)? {
            TypeRef::SetOf(_) => Ok(TypeRef::Int),
            other => Err(type_err(expr.pos, format!("`size` on non-set {other}"))),
        },
        ExprKind::Includes(inner, arg) => {
            let set_ty = type_of(inner, scope)?;
            if !matches!(set_ty, TypeRef::SetOf(_)) {
                return Err(type_err(expr.pos, format!("`includes` on non-set {set_ty}")));
            }
            match type_of(arg, scope)? {
                TypeRef::Class(_) => Ok(TypeRef::Bool),
                other => Err(type_err(
                    expr.pos,
                    format!("`includes` argument must be an object, found {other}"),
                )),
            }
        }
        ExprKind::ForAll(inner, var, body) | ExprKind::Exists(inner, var, body) => {
            let elem_class = match type_of(inner, scope)? {
                TypeRef::SetOf(c) => c,
                other => {
                    return Err(type_err(expr.pos, format!("quantifier on non-set {other}")))
                }
            };
            if scope.get(var).is_some() || var == "self" {
                return Err(type_err(
                    expr.pos,
                    format!("quantifier variable `{var}` shadows an existing binding"),
                ));
            }
            let inner_scope = scope.child_with(var, TypeRef::Class(elem_class));
            match type_of(body, &inner_scope)? {
                TypeRef::Bool => Ok(TypeRef::Bool),
                other => Err(type_err(
                    body.pos,
                    format!("quantifier body must be Bool, found {other}"),
                )),
            }
        }
    }
}

/// True when the expression uses the `@state` pseudo-attribute anywhere.
pub fn expr_mentions_state(expr: &Expr) -> bool {
    match &expr.kind {
        ExprKind::StateOf(_) => true,
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::StrLit(_) | ExprKind::Name(_) => {
            false
        }
        ExprKind::Attr(base, _) | ExprKind::Not(base) | ExprKind::Size(base) => {
            expr_mentions_state(base)
        }
        ExprKind::Binary(_, l, r) | ExprKind::Includes(l, r) => {
            expr_mentions_state(l) || expr_mentions_state(r)
        }
        ExprKind::ForAll(inner, _, body) | ExprKind::Exists(inner, _, body) => {
            expr_mentions_state(inner) || expr_mentions_state(body)
        }
    }
}

/// Every `(defining class, attribute)` pair the expression navigates, for
/// published-surface checking. Unresolvable navigations are skipped (the
/// type checker reports those separately).
pub fn navigated_members(expr: &Expr, scope: &TypeScope) -> Vec<(String, String)> {
    let mut out = Vec::new();
    collect_navigations(expr, scope, &mut out);
    out
}

fn collect_navigations(expr: &Expr, scope: &TypeScope, out: &mut Vec<(String, String)>) {
    match &expr.kind {
        ExprKind::Attr(base, attr) => {
            collect_navigations(base, scope, out);
            if let Ok(TypeRef::Class(c)) = type_of(base, scope) {
                if let Some((def, _)) = lookup_attribute(scope.model, &c, attr) {
                    out.push((def.name.clone(), attr.clone()));
                }
            }
        }
        ExprKind::StateOf(base) | ExprKind::Not(base) | ExprKind::Size(base) => {
            collect_navigations(base, scope, out)
        }
        ExprKind::Binary(_, l, r) | ExprKind::Includes(l, r) => {
            collect_navigations(l, scope, out);
            collect_navigations(r, scope, out);
        }
        ExprKind::ForAll(inner, var, body) | ExprKind::Exists(inner, var, body) => {
            collect_navigations(inner, scope, out);
            if let Ok(TypeRef::SetOf(c)) = type_of(inner, scope) {
                let child = scope.child_with(var, TypeRef::Class(c));
                collect_navigations(body, &child, out);
            }
        }
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::StrLit(_) | ExprKind::Name(_) => {}
    }
}

/// Context for checking a method body or transition action block.
pub struct BodyContext<'m> {
    pub model: &'m Model,
    pub owner: &'m str,
    pub params: &'m [Param],
    pub return_type: Option<&'m TypeRef>,
    pub in_transition: bool,
}

/// Type-checks a statement block: name resolution, assignment compatibility,
/// call signatures, return typing and (for value-returning methods) a
/// definite-return analysis.
pub fn check_body(ctx: &BodyContext, block: &ActionBlock) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut scope = TypeScope::new(ctx.model);
    scope.bind("self", TypeRef::Class(ctx.owner.to_string()));
    for p in ctx.params {
        scope.bind(&p.name, p.ty.clone());
    }
    check_block(ctx, block, &mut scope, &mut diags);
    if !ctx.in_transition && ctx.return_type.is_some() && !definitely_returns(block) {
        diags.push(Diagnostic::error(
            codes::E_MISSING_RETURN,
            0,
            0,
            format!("a body in `{}` does not return on every path", ctx.owner),
        ));
    }
    diags
}

fn check_block(
    ctx: &BodyContext,
    block: &ActionBlock,
    scope: &mut TypeScope,
    diags: &mut Vec<Diagnostic>,
) {
    for stmt in &block.statements {
        match stmt {
            Statement::Local { name, value, pos } => {
                if scope.get(name).is_some() || name == "self" {
                    diags.push(Diagnostic::error(
                        codes::E_DUP_NAME,
                        pos.line,
                        pos.column,
                        format!("`{name}` is already bound"),
                    ));
                    continue;
                }
                match type_of(value, scope) {
                    Ok(ty) => scope.bind(name, ty),
                    Err(d) => diags.push(d),
                }
            }
            Statement::Assign { target, value, pos } => {
                let target_ty = match &target.kind {
                    ExprKind::Name(name) => {
                        if name == "self" {
                            diags.push(type_err(*pos, "cannot assign to `self`"));
                            continue;
                        }
                        match scope.get(name) {
                            Some(ty) => Some(ty.clone()),
                            None => {
                                diags.push(type_err(*pos, format!("unknown name `{name}`")));
                                None
                            }
                        }
                    }
                    ExprKind::Attr(..) => match type_of(target, scope) {
                        Ok(ty) => Some(ty),
                        Err(d) => {
                            diags.push(d);
                            None
                        }
                    },
                    _ => {
                        diags.push(type_err(*pos, "assignment target must be a navigation"));
                        None
                    }
                };
                let value_ty = match type_of(value, scope) {
                    Ok(ty) => Some(ty),
                    Err(d) => {
                        diags.push(d);
                        None
                    }
                };
                if let (Some(t), Some(v)) = (target_ty, value_ty) {
                    if !conforms(ctx.model, &v, &t) {
                        diags.push(type_err(
                            *pos,
                            format!("cannot assign {v} to a target of type {t}"),
                        ));
                    }
                }
            }
            Statement::If { condition, then_block, else_block, pos } => {
                match type_of(condition, scope) {
                    Ok(TypeRef::Bool) => {}
                    Ok(other) => {
                        diags.push(type_err(*pos, format!("condition must be Bool, found {other}")))
                    }
                    Err(d) => diags.push(d),
                }
                let mut then_scope = scope.child_with("self", TypeRef::Class(ctx.owner.to_string()));
                check_block(ctx, then_block, &mut then_scope, diags);
                if let Some(else_block) = else_block {
                    let mut else_scope =
                        scope.child_with("self", TypeRef::Class(ctx.owner.to_string()));
                    check_block(ctx, else_block, &mut else_scope, diags);
                }
            }
            Statement::Return { value, pos } => {
                if ctx.in_transition {
                    diags.push(Diagnostic::error(
                        codes::E_RETURN_IN_ACTIONS,
                        pos.line,
                        pos.column,
                        "return statements are not allowed in transition actions",
                    ));
                    continue;
                }
                match (ctx.return_type, type_of(value, scope)) {
                    (Some(rt), Ok(ty)) => {
                        if !conforms(ctx.model, &ty, rt) {
                            diags.push(type_err(
                                *pos,
                                format!("return value has type {ty}, method returns {rt}"),
                            ));
                        }
                    }
                    (None, Ok(_)) => {
                        diags.push(type_err(*pos, "return with a value in a method returning nothing"))
                    }
                    (_, Err(d)) => diags.push(d),
                }
            }
            Statement::Call { receiver, method, args, pos } => {
                let class = match type_of(receiver, scope) {
                    Ok(TypeRef::Class(c)) => c,
                    Ok(other) => {
                        diags.push(type_err(*pos, format!("cannot call a method on {other}")));
                        continue;
                    }
                    Err(d) => {
                        diags.push(d);
                        continue;
                    }
                };
                let m = match lookup_method(ctx.model, &class, method) {
                    Some((_, m)) => m,
                    None => {
                        diags.push(Diagnostic::error(
                            codes::E_UNKNOWN_MEMBER,
                            pos.line,
                            pos.column,
                            format!("class `{class}` has no method `{method}`"),
                        ));
                        continue;
                    }
                };
                if m.params.len() != args.len() {
                    diags.push(type_err(
                        *pos,
                        format!("`{method}` expects {} argument(s), got {}", m.params.len(), args.len()),
                    ));
                    continue;
                }
                for (arg, param) in args.iter().zip(&m.params) {
                    match type_of(arg, scope) {
                        Ok(ty) => {
                            if !conforms(ctx.model, &ty, &param.ty) {
                                diags.push(type_err(
                                    arg.pos,
                                    format!("argument for `{}` has type {ty}, expected {}", param.name, param.ty),
                                ));
                            }
                        }
                        Err(d) => diags.push(d),
                    }
                }
            }
        }
    }
}

/// Conservative definite-return analysis: a block returns when any of its
/// statements is a `return` or an `if` whose branches both return.
pub fn definitely_returns(block: &ActionBlock) -> bool {
    block.statements.iter().any(|stmt| match stmt {
        Statement::Return { .. } => true,
        Statement::If { then_block, else_block: Some(else_block), .. } => {
            definitely_returns(then_block) && definitely_returns(else_block)
        }
        _ => false,
    })
}
