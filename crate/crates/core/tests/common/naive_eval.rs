//! Independent reference evaluator for constraint expressions.
//!
//! Written directly from the semantic clauses and deliberately structured
//! differently from the production evaluator: operands are evaluated
//! eagerly into `Result` values and combined afterwards (evaluation is
//! pure, so discarding an operand's outcome is observationally identical
//! to short-circuiting), and arithmetic runs in `i128` with an explicit
//! range check.

use std::collections::BTreeMap;

use amw_core::eval::Value;
use amw_core::model::check::is_subclass_of;
use amw_core::model::{BinOp, Expr, ExprKind, Model};
use amw_core::runtime::ObjectStore;

pub type Outcome = Result<Value, &'static str>;

#[allow(clippy::only_used_in_recursion)]
pub fn naive_eval(
    expr: &Expr,
    model: &Model,
    store: &ObjectStore,
    env: &BTreeMap<String, Value>,
) -> Outcome {
    match &expr.kind {
        ExprKind::IntLit(v) => Ok(Value::Int(*v)),
        ExprKind::BoolLit(v) => Ok(Value::Bool(*v)),
        ExprKind::StrLit(v) => Ok(Value::Str(v.clone())),
        ExprKind::Name(n) => env.get(n).cloned().ok_or("E_UNBOUND_NAME"),
        ExprKind::Attr(base, attr) => match naive_eval(base, model, store, env)? {
            Value::Obj(id) => store
                .get(id)
                .and_then(|o| o.slots.get(attr))
                .cloned()
                .ok_or("E_EVAL"),
            Value::Undefined => Err("E_NAV_UNSET"),
            _ => Err("E_EVAL"),
        },
        ExprKind::StateOf(base) => match naive_eval(base, model, store, env)? {
            Value::Obj(id) => store
                .get(id)
                .and_then(|o| o.current_state.clone())
                .map(Value::Str)
                .ok_or("E_EVAL"),
            Value::Undefined => Err("E_NAV_UNSET"),
            _ => Err("E_EVAL"),
        },
        ExprKind::Not(inner) => match naive_eval(inner, model, store, env)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            _ => Err("E_EVAL"),
        },
        ExprKind::Binary(op, lhs, rhs) => {
            let left = naive_eval(lhs, model, store, env);
            let right = naive_eval(rhs, model, store, env);
            combine(*op, left, right)
        }
        ExprKind::Size(inner) => match naive_eval(inner, model, store, env)? {
            Value::Set(s) => Ok(Value::Int(s.len() as i64)),
            _ => Err("E_EVAL"),
        },
        ExprKind::Includes(inner, arg) => {
            let set = match naive_eval(inner, model, store, env)? {
                Value::Set(s) => s,
                _ => return Err("E_EVAL"),
            };
            match naive_eval(arg, model, store, env)? {
                Value::Obj(id) => Ok(Value::Bool(set.contains(&id))),
                Value::Undefined => Ok(Value::Bool(false)),
                _ => Err("E_EVAL"),
            }
        }
        ExprKind::ForAll(inner, var, body) => {
            let set = match naive_eval(inner, model, store, env)? {
                Value::Set(s) => s,
                _ => return Err("E_EVAL"),
            };
            // Eager: evaluate the body for every element, then scan for the
            // first deciding outcome in ascending id order.
            let outcomes: Vec<Outcome> = set
                .iter()
                .map(|id| {
                    let mut child = env.clone();
                    child.insert(var.clone(), Value::Obj(*id));
                    naive_eval(body, model, store, &child)
                })
                .collect();
            for outcome in outcomes {
                match outcome {
                    Err(e) => return Err(e),
                    Ok(Value::Bool(false)) => return Ok(Value::Bool(false)),
                    Ok(Value::Bool(true)) => {}
                    Ok(_) => return Err("E_EVAL"),
                }
            }
            Ok(Value::Bool(true))
        }
        ExprKind::Exists(inner, var, body) => {
            let set = match naive_eval(inner, model, store, env)? {
                Value::Set(s) => s,
                _ => return Err("E_EVAL"),
            };
            let outcomes: Vec<Outcome> = set
                .iter()
                .map(|id| {
                    let mut child = env.clone();
                    child.insert(var.clone(), Value::Obj(*id));
                    naive_eval(body, model, store, &child)
                })
                .collect();
            for outcome in outcomes {
                match outcome {
                    Err(e) => return Err(e),
                    Ok(Value::Bool(true)) => return Ok(Value::Bool(true)),
                    Ok(Value::Bool(false)) => {}
                    Ok(_) => return Err("E_EVAL"),
                }
            }
            Ok(Value::Bool(false))
        }
    }
}

fn combine(op: BinOp, left: Outcome, right: Outcome) -> Outcome {
    match op {
        BinOp::And => match left? {
            Value::Bool(false) => Ok(Value::Bool(false)),
            Value::Bool(true) => as_bool(right),
            _ => Err("E_EVAL"),
        },
        BinOp::Or => match left? {
            Value::Bool(true) => Ok(Value::Bool(true)),
            Value::Bool(false) => as_bool(right),
            _ => Err("E_EVAL"),
        },
        BinOp::Implies => match left? {
            Value::Bool(false) => Ok(Value::Bool(true)),
            Value::Bool(true) => as_bool(right),
            _ => Err("E_EVAL"),
        },
        BinOp::Eq => Ok(Value::Bool(left? == right?)),
        BinOp::Ne => Ok(Value::Bool(left? != right?)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let (l, r) = (as_int(left)?, as_int(right)?);
            Ok(Value::Bool(match op {
                BinOp::Lt => l < r,
                BinOp::Le => l <= r,
                BinOp::Gt => l > r,
                _ => l >= r,
            }))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => {
            let (l, r) = (as_int(left)? as i128, as_int(right)? as i128);
            let wide = match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                _ => l * r,
            };
            if wide < i64::MIN as i128 || wide > i64::MAX as i128 {
                Err("E_OVERFLOW")
            } else {
                Ok(Value::Int(wide as i64))
            }
        }
    }
}

fn as_bool(outcome: Outcome) -> Outcome {
    match outcome? {
        Value::Bool(b) => Ok(Value::Bool(b)),
        _ => Err("E_EVAL"),
    }
}

fn as_int(outcome: Outcome) -> Result<i64, &'static str> {
    match outcome? {
        Value::Int(v) => Ok(v),
        _ => Err("E_EVAL"),
    }
}

/// Keep the subclass helper referenced so the module stands alone even if
/// callers stop using it directly.
#[allow(dead_code)]
pub fn conforms(model: &Model, sub: &str, sup: &str) -> bool {
    is_subclass_of(model, sub, sup)
}
