//! Independent well-formedness predicates for the class-structure
//! invariants, written as direct set computations over the model rather
//! than as a traversal with diagnostics. Used to cross-check the checker
//! on randomly generated (possibly invalid) models.

use std::collections::BTreeSet;

use amw_core::model::{ClassDef, Model, TypeRef};

/// All predicates the checker must agree with on class-only models.
pub fn class_rules_hold(model: &Model) -> bool {
    unique_class_names(model)
        && extends_resolve(model)
        && acyclic(model)
        && types_resolve(model)
        && no_reserved_class_names(model)
        && no_shadowing(model)
        && members_unique(model)
        && overrides_match(model)
        && abstract_consistent(model)
        && concrete_complete(model)
}

fn unique_class_names(model: &Model) -> bool {
    let mut seen = BTreeSet::new();
    model.classes.iter().all(|c| seen.insert(c.name.clone()))
}

fn no_reserved_class_names(model: &Model) -> bool {
    model
        .classes
        .iter()
        .all(|c| !matches!(c.name.as_str(), "Int" | "Bool" | "String"))
}

fn extends_resolve(model: &Model) -> bool {
    model.classes.iter().all(|c| match &c.superclass {
        Some(s) => model.classes.iter().any(|d| d.name == *s),
        None => true,
    })
}

/// Ancestor set computed by fixpoint iteration; a class in its own
/// ancestor set sits on a cycle.
fn ancestors(model: &Model, class: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut frontier: Vec<String> = model
        .find_class(class)
        .and_then(|c| c.superclass.clone())
        .into_iter()
        .collect();
    while let Some(next) = frontier.pop() {
        if out.insert(next.clone()) {
            if let Some(sup) = model.find_class(&next).and_then(|c| c.superclass.clone()) {
                frontier.push(sup);
            }
        }
    }
    out
}

fn acyclic(model: &Model) -> bool {
    model
        .classes
        .iter()
        .all(|c| !ancestors(model, &c.name).contains(&c.name))
}

fn type_ok(model: &Model, ty: &TypeRef) -> bool {
    match ty {
        TypeRef::Int | TypeRef::Bool | TypeRef::String => true,
        TypeRef::Class(n) => model.classes.iter().any(|c| c.name == *n),
        TypeRef::SetOf(n) => {
            !matches!(n.as_str(), "Int" | "Bool" | "String")
                && model.classes.iter().any(|c| c.name == *n)
        }
    }
}

fn types_resolve(model: &Model) -> bool {
    model.classes.iter().all(|c| {
        c.attributes.iter().all(|a| type_ok(model, &a.ty))
            && c.methods.iter().all(|m| {
                m.params.iter().all(|p| type_ok(model, &p.ty))
                    && m.return_type.as_ref().map(|t| type_ok(model, t)).unwrap_or(true)
            })
    })
}

/// Attribute names must be unique across a class and all its ancestors.
/// Only meaningful on acyclic models; callers guard with `acyclic`.
fn no_shadowing(model: &Model) -> bool {
    if !acyclic(model) || !unique_class_names(model) {
        return true; // reported through other predicates
    }
    model.classes.iter().all(|c| {
        let above: BTreeSet<&str> = ancestors(model, &c.name)
            .into_iter()
            .filter_map(|name| model.find_class(&name).map(|d| d.name.as_str()))
            .flat_map(|name| {
                model
                    .find_class(name)
                    .map(|d| d.attributes.iter().map(|a| a.name.as_str()).collect::<Vec<_>>())
                    .unwrap_or_default()
            })
            .collect();
        c.attributes.iter().all(|a| !above.contains(a.name.as_str()))
    })
}

fn members_unique(model: &Model) -> bool {
    model.classes.iter().all(|c| {
        let mut attrs = BTreeSet::new();
        let mut methods = BTreeSet::new();
        c.attributes.iter().all(|a| attrs.insert(a.name.clone()))
            && c.methods.iter().all(|m| methods.insert(m.name.clone()))
    })
}

fn signature(def: &amw_core::model::MethodDef) -> (Vec<TypeRef>, Option<TypeRef>) {
    (
        def.params.iter().map(|p| p.ty.clone()).collect(),
        def.return_type.clone(),
    )
}

fn overrides_match(model: &Model) -> bool {
    if !acyclic(model) || !unique_class_names(model) {
        return true;
    }
    model.classes.iter().all(|c| {
        c.methods.iter().all(|m| {
            ancestors(model, &c.name).iter().all(|anc| {
                model
                    .find_class(anc)
                    .and_then(|d| d.methods.iter().find(|x| x.name == m.name))
                    .map(|overridden| signature(overridden) == signature(m))
                    .unwrap_or(true)
            })
        })
    })
}

fn abstract_consistent(model: &Model) -> bool {
    model
        .classes
        .iter()
        .all(|c| c.methods.iter().all(|m| !(m.is_abstract && m.body.is_some())))
}

/// A concrete class must override every abstract method it can see.
fn concrete_complete(model: &Model) -> bool {
    if !acyclic(model) || !unique_class_names(model) {
        return true;
    }
    model.classes.iter().filter(|c| !c.is_abstract).all(|c| {
        let mut chain_ordered: Vec<&ClassDef> = vec![c];
        let mut cur = c.superclass.clone();
        while let Some(name) = cur {
            if let Some(def) = model.find_class(&name) {
                chain_ordered.push(def);
                cur = def.superclass.clone();
            } else {
                break;
            }
        }
        let mut decided: BTreeSet<String> = BTreeSet::new();
        for class in &chain_ordered {
            for m in &class.methods {
                if decided.insert(m.name.clone()) && m.is_abstract {
                    return false;
                }
            }
        }
        true
    })
}
