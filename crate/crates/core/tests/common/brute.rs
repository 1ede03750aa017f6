//! Exhaustive pattern-match oracle: enumerates every injective mapping
//! from pattern objects to store objects in (declaration order, ascending
//! candidate id) lexicographic order and checks all conditions on each
//! complete mapping. No pruning, no backtracking shortcuts.

use std::collections::{BTreeMap, BTreeSet};

use amw_core::eval::Value;
use amw_core::model::check::is_subclass_of;
use amw_core::model::{ConfigValue, Model, PatternConfiguration};
use amw_core::runtime::{ObjId, ObjectStore};

pub enum BruteOutcome {
    AnchorUnknown(String),
    Unmatched,
    Matched(BTreeMap<String, ObjId>),
}

pub fn brute_match(
    model: &Model,
    pattern: &PatternConfiguration,
    store: &ObjectStore,
    anchors: &BTreeMap<String, ObjId>,
) -> BruteOutcome {
    for po in &pattern.objects {
        if po.anchored && !anchors.contains_key(&po.object.name) {
            return BruteOutcome::AnchorUnknown(po.object.name.clone());
        }
    }
    let candidates: Vec<Vec<ObjId>> = pattern
        .objects
        .iter()
        .map(|po| match anchors.get(&po.object.name) {
            Some(id) => vec![*id],
            None => store.ids(),
        })
        .collect();

    let mut assignment: Vec<ObjId> = Vec::new();
    if enumerate(&candidates, 0, &mut assignment, &mut |mapping| {
        valid(model, pattern, store, mapping)
    }) {
        let witness = pattern
            .objects
            .iter()
            .zip(&assignment)
            .map(|(po, id)| (po.object.name.clone(), *id))
            .collect();
        BruteOutcome::Matched(witness)
    } else {
        BruteOutcome::Unmatched
    }
}

/// Depth-first enumeration in lexicographic order; `assignment` holds the
/// first accepted complete mapping on success.
fn enumerate(
    candidates: &[Vec<ObjId>],
    depth: usize,
    assignment: &mut Vec<ObjId>,
    accept: &mut impl FnMut(&[ObjId]) -> bool,
) -> bool {
    if depth == candidates.len() {
        return accept(assignment);
    }
    for id in &candidates[depth] {
        if assignment.contains(id) {
            continue; // injectivity
        }
        assignment.push(*id);
        if enumerate(candidates, depth + 1, assignment, accept) {
            return true;
        }
        assignment.pop();
    }
    false
}

/// Re-checks a witness produced elsewhere: every pattern object must be
/// mapped, injectively, and the full conditions must hold.
pub fn check_witness(
    model: &Model,
    pattern: &PatternConfiguration,
    store: &ObjectStore,
    witness: &BTreeMap<String, ObjId>,
) -> bool {
    let mapping: Option<Vec<ObjId>> = pattern
        .objects
        .iter()
        .map(|po| witness.get(&po.object.name).copied())
        .collect();
    let Some(mapping) = mapping else {
        return false;
    };
    let distinct: BTreeSet<ObjId> = mapping.iter().copied().collect();
    if distinct.len() != mapping.len() {
        return false;
    }
    valid(model, pattern, store, &mapping)
}

/// Full condition check on a complete mapping: class conformance, literal
/// attribute equality, link images and set-image equality.
fn valid(
    model: &Model,
    pattern: &PatternConfiguration,
    store: &ObjectStore,
    mapping: &[ObjId],
) -> bool {
    let index: BTreeMap<&str, ObjId> = pattern
        .objects
        .iter()
        .zip(mapping)
        .map(|(po, id)| (po.object.name.as_str(), *id))
        .collect();
    for (po, id) in pattern.objects.iter().zip(mapping) {
        let Some(obj) = store.get(*id) else {
            return false;
        };
        if !is_subclass_of(model, &obj.class, &po.object.class_name) {
            return false;
        }
        for a in &po.object.assignments {
            match &a.value {
                ConfigValue::Literal(lit) => {
                    if obj.slots.get(&a.attr) != Some(&Value::from_literal(lit)) {
                        return false;
                    }
                }
                ConfigValue::Ref(name) => {
                    let Some(target) = index.get(name.as_str()) else {
                        return false;
                    };
                    if obj.slots.get(&a.attr) != Some(&Value::Obj(*target)) {
                        return false;
                    }
                }
                ConfigValue::Set(names) => {
                    let mut image = BTreeSet::new();
                    for name in names {
                        let Some(target) = index.get(name.as_str()) else {
                            return false;
                        };
                        image.insert(*target);
                    }
                    if obj.slots.get(&a.attr) != Some(&Value::Set(image)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}
