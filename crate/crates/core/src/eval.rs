//! Evaluation of constraint expressions against a runtime object store.
//!
//! Semantics are strict except `and`/`or`/`implies`, which short-circuit
//! left to right. Navigation through an unset reference is an error, not a
//! truth value; quantifiers iterate set elements in ascending store-id
//! order and stop at the first deciding element. Equality is structural
//! (`Undefined` equals only itself).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diag::codes;
use crate::model::check::is_subclass_of;
use crate::model::{escape_str, BinOp, Expr, ExprKind, Literal, Model};
use crate::runtime::{ObjId, ObjectStore};

/// A runtime value of the constraint and action languages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Obj(ObjId),
    Set(BTreeSet<ObjId>),
    /// An unset object reference. Arises only from reference slots.
    Undefined,
}

impl Value {
    pub fn from_literal(lit: &Literal) -> Value {
        match lit {
            Literal::Int(v) => Value::Int(*v),
            Literal::Bool(v) => Value::Bool(*v),
            Literal::Str(v) => Value::Str(v.clone()),
        }
    }
}

impl fmt::Display for Value {
    /// Canonical rendering: strings quoted, sets in ascending id order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Str(v) => write!(f, "\"{}\"", escape_str(v)),
            Value::Obj(id) => write!(f, "{id}"),
            Value::Set(ids) => {
                let rendered: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
                write!(f, "{{{}}}", rendered.join(", "))
            }
            Value::Undefined => write!(f, "undefined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("navigation `{0}` through an unset reference")]
    NavUnset(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("`self` is already bound")]
    SelfRebound,
    #[error("evaluation error: {0}")]
    Internal(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::NavUnset(_) => codes::E_NAV_UNSET,
            EvalError::Overflow => codes::E_OVERFLOW,
            EvalError::UnboundName(_) => codes::E_UNBOUND_NAME,
            EvalError::SelfRebound => codes::E_SELF_REBOUND,
            EvalError::Internal(_) => codes::E_EVAL,
        }
    }
}

/// Evaluation context: a store snapshot plus name bindings (`self`,
/// quantifier variables, fixture object names).
pub struct EvalContext<'a> {
    pub model: &'a Model,
    pub store: &'a ObjectStore,
    bindings: BTreeMap<String, Value>,
}

impl<'a> EvalContext<'a> {
    pub fn new(model: &'a Model, store: &'a ObjectStore) -> Self {
        EvalContext {
            model,
            store,
            bindings: BTreeMap::new(),
        }
    }

    /// Binds a name. Rebinding `self` is an error; other rebinds replace.
    pub fn bind(&mut self, name: &str, value: Value) -> Result<(), EvalError> {
        if name == "self" && self.bindings.contains_key("self") {
            return Err(EvalError::SelfRebound);
        }
        self.bindings.insert(name.to_string(), value);
        Ok(())
    }

    /// Binds every fixture object name to its object.
    pub fn bind_fixture_names(&mut self) {
        for (name, id) in self.store.name_entries() {
            self.bindings.insert(name.clone(), Value::Obj(*id));
        }
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    fn child_with(&self, name: &str, value: Value) -> EvalContext<'a> {
        let mut bindings = self.bindings.clone();
        bindings.insert(name.to_string(), value);
        EvalContext {
            model: self.model,
            store: self.store,
            bindings,
        }
    }
}

fn expect_bool(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Internal(format!("expected Bool, got {other}"))),
    }
}

fn expect_int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        other => Err(EvalError::Internal(format!("expected Int, got {other}"))),
    }
}

fn expect_set(v: Value) -> Result<BTreeSet<ObjId>, EvalError> {
    match v {
        Value::Set(s) => Ok(s),
        other => Err(EvalError::Internal(format!("expected a set, got {other}"))),
    }
}

/// Evaluates a type-checked expression.
pub fn eval(expr: &Expr, ctx: &EvalContext) -> Result<Value, EvalError> {
    match &expr.kind {
        ExprKind::IntLit(v) => Ok(Value::Int(*v)),
        ExprKind::BoolLit(v) => Ok(Value::Bool(*v)),
        ExprKind::StrLit(v) => Ok(Value::Str(v.clone())),
        ExprKind::Name(name) => ctx
            .lookup(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundName(name.clone())),
        ExprKind::Attr(base, attr) => {
            let id = object_of(eval(base, ctx)?, attr)?;
            let obj = ctx
                .store
                .get(id)
                .ok_or_else(|| EvalError::Internal(format!("dangling object {id}")))?;
            obj.slots
                .get(attr)
                .cloned()
                .ok_or_else(|| EvalError::Internal(format!("missing slot `{attr}` on {id}")))
        }
        ExprKind::StateOf(base) => {
            let id = object_of(eval(base, ctx)?, "@state")?;
            let obj = ctx
                .store
                .get(id)
                .ok_or_else(|| EvalError::Internal(format!("dangling object {id}")))?;
            match &obj.current_state {
                Some(s) => Ok(Value::Str(s.clone())),
                None => Err(EvalError::Internal(format!(
                    "object {id} of class `{}` has no statechart state",
                    obj.class
                ))),
            }
        }
        ExprKind::Not(inner) => Ok(Value::Bool(!expect_bool(eval(inner, ctx)?)?)),
        ExprKind::Binary(op, lhs, rhs) => match op {
            BinOp::And => {
                if !expect_bool(eval(lhs, ctx)?)? {
                    Ok(Value::Bool(false))
                } else {
                    Ok(Value::Bool(expect_bool(eval(rhs, ctx)?)?))
                }
            }
            BinOp::Or => {
                if expect_bool(eval(lhs, ctx)?)? {
                    Ok(Value::Bool(true))
                } else {
                    Ok(Value::Bool(expect_bool(eval(rhs, ctx)?)?))
                }
            }
            BinOp::Implies => {
                if !expect_bool(eval(lhs, ctx)?)? {
                    Ok(Value::Bool(true))
                } else {
                    Ok(Value::Bool(expect_bool(eval(rhs, ctx)?)?))
                }
            }
            BinOp::Eq => Ok(Value::Bool(eval(lhs, ctx)? == eval(rhs, ctx)?)),
            BinOp::Ne => Ok(Value::Bool(eval(lhs, ctx)? != eval(rhs, ctx)?)),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = expect_int(eval(lhs, ctx)?)?;
                let r = expect_int(eval(rhs, ctx)?)?;
                Ok(Value::Bool(match op {
                    BinOp::Lt => l < r,
                    BinOp::Le => l <= r,
                    BinOp::Gt => l > r,
                    _ => l >= r,
                }))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                let l = expect_int(eval(lhs, ctx)?)?;
                let r = expect_int(eval(rhs, ctx)?)?;
                let out = match op {
                    BinOp::Add => l.checked_add(r),
                    BinOp::Sub => l.checked_sub(r),
                    _ => l.checked_mul(r),
                };
                out.map(Value::Int).ok_or(EvalError::Overflow)
            }
        },
        ExprKind::Size(inner) => {
            let set = expect_set(eval(inner, ctx)?)?;
            Ok(Value::Int(set.len() as i64))
        }
        ExprKind::Includes(inner, arg) => {
            let set = expect_set(eval(inner, ctx)?)?;
            match eval(arg, ctx)? {
                Value::Obj(id) => Ok(Value::Bool(set.contains(&id))),
                // A set of objects never contains the unset marker.
                Value::Undefined => Ok(Value::Bool(false)),
                other => Err(EvalError::Internal(format!(
                    "`includes` argument must be an object, got {other}"
                ))),
            }
        }
        ExprKind::ForAll(inner, var, body) => {
            let set = expect_set(eval(inner, ctx)?)?;
            for id in set {
                let child = ctx.child_with(var, Value::Obj(id));
                if !expect_bool(eval(body, &child)?)? {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }
        ExprKind::Exists(inner, var, body) => {
            let set = expect_set(eval(inner, ctx)?)?;
            for id in set {
                let child = ctx.child_with(var, Value::Obj(id));
                if expect_bool(eval(body, &child)?)? {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(false))
        }
    }
}

fn object_of(v: Value, what: &str) -> Result<ObjId, EvalError> {
    match v {
        Value::Obj(id) => Ok(id),
        Value::Undefined => Err(EvalError::NavUnset(what.to_string())),
        other => Err(EvalError::Internal(format!(
            "cannot navigate `{what}` on {other}"
        ))),
    }
}

/// Outcome of checking one invariant against one object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvariantVerdict {
    Holds,
    Fails,
    Error(String),
}

impl fmt::Display for InvariantVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantVerdict::Holds => write!(f, "holds"),
            InvariantVerdict::Fails => write!(f, "fails"),
            InvariantVerdict::Error(reason) => write!(f, "error({reason})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantResult {
    pub invariant: String,
    pub object: ObjId,
    pub verdict: InvariantVerdict,
}

/// Evaluates every named invariant against every live object whose class
/// conforms to the invariant's context class. The result is the complete
/// cartesian product in document order then store-id order.
pub fn check_invariants(model: &Model, store: &ObjectStore) -> Vec<InvariantResult> {
    let mut out = Vec::new();
    for inv in &model.invariants {
        for (id, obj) in store.iter() {
            if !is_subclass_of(model, &obj.class, &inv.context_class) {
                continue;
            }
            let mut ctx = EvalContext::new(model, store);
            let verdict = match ctx.bind("self", Value::Obj(*id)) {
                Ok(()) => match eval(&inv.expr, &ctx) {
                    Ok(Value::Bool(true)) => InvariantVerdict::Holds,
                    Ok(Value::Bool(false)) => InvariantVerdict::Fails,
                    Ok(other) => InvariantVerdict::Error(format!("non-boolean result {other}")),
                    Err(e) => InvariantVerdict::Error(e.to_string()),
                },
                Err(e) => InvariantVerdict::Error(e.to_string()),
            };
            out.push(InvariantResult {
                invariant: inv.name.clone(),
                object: *id,
                verdict,
            });
        }
    }
    out
}
