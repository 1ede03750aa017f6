//! Seeded random generators: well-formed models for round-trip testing,
//! object stores and well-typed expressions for evaluator equivalence, and
//! pattern-match cases for the matcher oracle.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use amw_core::eval::Value;
use amw_core::model::check::effective_chart;
use amw_core::model::{
    ActionBlock, Assignment, AttributeDef, BinOp, ClassDef, ConfigValue, Expr, ExprKind, Literal,
    MethodDef, Model, NamedInvariant, ObjectConfiguration, ObjectDecl, Oracle, Origin, Param,
    PatternConfiguration, PatternObject, Pos, SequenceDefinition, Statechart, Statement, Step,
    TestCase, TestCategory, TransitionDef, TypeRef,
};
use amw_core::runtime::{instantiate, ObjectStore};

/// Seed comes from AMW_SEED when set, so the whole self-test suite can be
/// replayed bit-identically.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var("AMW_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pos() -> Pos {
    Pos::default()
}

fn origin(seq: u32) -> Origin {
    Origin {
        path: None,
        seq,
        pos: pos(),
    }
}

// --- fixed world for evaluator and matcher cases ---------------------------

/// A small fixed class table: an abstract base with primitive attributes,
/// a linked node class with a statechart, and a leaf class.
pub fn eval_world() -> Model {
    let mut model = Model::named("world");
    model.classes.push(ClassDef {
        name: "Base".into(),
        superclass: None,
        is_abstract: true,
        published: false,
        attributes: vec![
            attr("id", TypeRef::Int),
            attr("tag", TypeRef::String),
            attr("flag", TypeRef::Bool),
        ],
        methods: vec![],
        origin: origin(0),
    });
    model.classes.push(ClassDef {
        name: "Node".into(),
        superclass: Some("Base".into()),
        is_abstract: false,
        published: false,
        attributes: vec![
            attr("next", TypeRef::Class("Node".into())),
            attr("peers", TypeRef::SetOf("Node".into())),
        ],
        methods: vec![MethodDef {
            name: "step".into(),
            params: vec![],
            return_type: None,
            body: None,
            is_abstract: false,
            published: false,
            pos: pos(),
        }],
        origin: origin(1),
    });
    model.classes.push(ClassDef {
        name: "Leaf".into(),
        superclass: Some("Base".into()),
        is_abstract: false,
        published: false,
        attributes: vec![attr("score", TypeRef::Int)],
        methods: vec![],
        origin: origin(2),
    });
    model.statecharts.push(Statechart {
        owner: "Node".into(),
        initial: "N0".into(),
        states: vec!["N0".into(), "N1".into()],
        transitions: vec![TransitionDef {
            source: "N0".into(),
            target: "N1".into(),
            trigger: "step".into(),
            params: vec![],
            guard: None,
            actions: None,
            result: None,
            pos: pos(),
        }],
        origin: origin(3),
    });
    model
}

fn attr(name: &str, ty: TypeRef) -> AttributeDef {
    AttributeDef {
        name: name.into(),
        ty,
        published: false,
        pos: pos(),
    }
}

const STRING_POOL: &[&str] = &["", "x", "alpha", "N0", "N1"];
const INT_POOL: &[i64] = &[0, 1, -1, 7, i64::MAX, i64::MIN];

/// Builds a random store of up to `max_objects` Node/Leaf objects with
/// random slots: some references left unset, some links and sets wired up,
/// statechart states chosen freely.
pub fn gen_store(rng: &mut ChaCha8Rng, model: &Model, max_objects: usize) -> ObjectStore {
    let n = rng.gen_range(0..=max_objects);
    let mut decls = Vec::new();
    let classes: Vec<&str> = (0..n)
        .map(|_| if rng.gen_bool(0.7) { "Node" } else { "Leaf" })
        .collect();
    let node_names: Vec<String> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == "Node")
        .map(|(i, _)| format!("o{i}"))
        .collect();
    for (i, class) in classes.iter().enumerate() {
        let mut assignments = vec![
            Assignment {
                attr: "id".into(),
                value: ConfigValue::Literal(Literal::Int(rng.gen_range(-3..=3))),
                pos: pos(),
            },
            Assignment {
                attr: "tag".into(),
                value: ConfigValue::Literal(Literal::Str(
                    STRING_POOL.choose(rng).expect("non-empty").to_string(),
                )),
                pos: pos(),
            },
        ];
        if rng.gen_bool(0.5) {
            assignments.push(Assignment {
                attr: "flag".into(),
                value: ConfigValue::Literal(Literal::Bool(rng.gen_bool(0.5))),
                pos: pos(),
            });
        }
        if *class == "Node" {
            if !node_names.is_empty() && rng.gen_bool(0.6) {
                assignments.push(Assignment {
                    attr: "next".into(),
                    value: ConfigValue::Ref(node_names.choose(rng).expect("non-empty").clone()),
                    pos: pos(),
                });
            }
            if !node_names.is_empty() && rng.gen_bool(0.6) {
                let mut members = node_names.clone();
                members.shuffle(rng);
                members.truncate(rng.gen_range(0..=members.len()));
                members.sort();
                assignments.push(Assignment {
                    attr: "peers".into(),
                    value: ConfigValue::Set(members),
                    pos: pos(),
                });
            }
        } else if rng.gen_bool(0.7) {
            assignments.push(Assignment {
                attr: "score".into(),
                value: ConfigValue::Literal(Literal::Int(*INT_POOL.choose(rng).expect("non-empty"))),
                pos: pos(),
            });
        }
        decls.push(ObjectDecl {
            name: format!("o{i}"),
            class_name: class.to_string(),
            assignments,
            pos: pos(),
        });
    }
    let config = ObjectConfiguration {
        name: "gen".into(),
        objects: decls,
        origin: origin(0),
    };
    let mut store = instantiate(model, &config).expect("generated config instantiates");
    // Scatter the statechart states.
    for id in store.ids() {
        let class = store.get(id).expect("live").class.clone();
        if effective_chart(model, &class).is_some() && rng.gen_bool(0.5) {
            store.get_mut(id).expect("live").current_state = Some("N1".into());
        }
    }
    store
}

/// Scope for expression generation: bound names with their static types.
pub struct ExprScope {
    pub vars: Vec<(String, TypeRef)>,
    fresh: u32,
}

impl ExprScope {
    pub fn from_store(store: &ObjectStore) -> Self {
        let vars = store
            .name_entries()
            .map(|(name, id)| {
                let class = store.get(*id).expect("live").class.clone();
                (name.clone(), TypeRef::Class(class))
            })
            .collect();
        ExprScope { vars, fresh: 0 }
    }

    fn of_type(&self, ty: &TypeRef) -> Vec<&str> {
        self.vars
            .iter()
            .filter(|(_, t)| t == ty)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

fn e(kind: ExprKind) -> Expr {
    Expr::new(kind, pos())
}

/// Generates a well-typed expression of the requested type. Depth bounds
/// recursion; at depth 0 only literals and variables are produced.
pub fn gen_expr(rng: &mut ChaCha8Rng, scope: &mut ExprScope, ty: &TypeRef, depth: u32) -> Expr {
    match ty {
        TypeRef::Int => gen_int(rng, scope, depth),
        TypeRef::Bool => gen_bool(rng, scope, depth),
        TypeRef::String => gen_string(rng, scope, depth),
        TypeRef::Class(c) => gen_object(rng, scope, c, depth).unwrap_or_else(|| {
            // No object expression available: fall back to a literal-typed
            // expression wrapped in an equality that callers never request.
            unreachable!("object generation is only requested when reachable: {c}")
        }),
        TypeRef::SetOf(c) => gen_set(rng, scope, c, depth)
            .expect("set generation is only requested when reachable"),
    }
}

fn gen_int(rng: &mut ChaCha8Rng, scope: &mut ExprScope, depth: u32) -> Expr {
    let mut options: Vec<u8> = vec![0, 0];
    if !scope.of_type(&TypeRef::Int).is_empty() {
        options.push(1);
    }
    if depth > 0 {
        options.extend([2, 2, 3, 4]);
    }
    match options.choose(rng).expect("non-empty") {
        0 => e(ExprKind::IntLit(*INT_POOL.choose(rng).expect("non-empty"))),
        1 => {
            let names = scope.of_type(&TypeRef::Int);
            e(ExprKind::Name(names.choose(rng).expect("non-empty").to_string()))
        }
        2 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul]
                .choose(rng)
                .expect("non-empty");
            e(ExprKind::Binary(
                *op,
                Box::new(gen_int(rng, scope, depth - 1)),
                Box::new(gen_int(rng, scope, depth - 1)),
            ))
        }
        3 => match gen_set(rng, scope, "Node", depth - 1) {
            Some(set) => e(ExprKind::Size(Box::new(set))),
            None => e(ExprKind::IntLit(rng.gen_range(-4..=4))),
        },
        _ => match gen_object(rng, scope, "Base", depth - 1) {
            Some(obj) => e(ExprKind::Attr(Box::new(obj), "id".into())),
            None => e(ExprKind::IntLit(rng.gen_range(-4..=4))),
        },
    }
}

fn gen_string(rng: &mut ChaCha8Rng, scope: &mut ExprScope, depth: u32) -> Expr {
    let roll = rng.gen_range(0..10);
    if depth > 0 && roll < 3 {
        if let Some(obj) = gen_object(rng, scope, "Base", depth - 1) {
            return e(ExprKind::Attr(Box::new(obj), "tag".into()));
        }
    }
    if depth > 0 && roll < 5 {
        if let Some(obj) = gen_object(rng, scope, "Node", depth - 1) {
            return e(ExprKind::StateOf(Box::new(obj)));
        }
    }
    e(ExprKind::StrLit(
        STRING_POOL.choose(rng).expect("non-empty").to_string(),
    ))
}

fn gen_bool(rng: &mut ChaCha8Rng, scope: &mut ExprScope, depth: u32) -> Expr {
    if depth == 0 {
        let names = scope.of_type(&TypeRef::Bool);
        if !names.is_empty() && rng.gen_bool(0.3) {
            return e(ExprKind::Name(names.choose(rng).expect("non-empty").to_string()));
        }
        return e(ExprKind::BoolLit(rng.gen_bool(0.5)));
    }
    match rng.gen_range(0..12) {
        0 => e(ExprKind::BoolLit(rng.gen_bool(0.5))),
        1 => e(ExprKind::Not(Box::new(gen_bool(rng, scope, depth - 1)))),
        2 | 3 => {
            let op = [BinOp::And, BinOp::Or, BinOp::Implies]
                .choose(rng)
                .expect("non-empty");
            e(ExprKind::Binary(
                *op,
                Box::new(gen_bool(rng, scope, depth - 1)),
                Box::new(gen_bool(rng, scope, depth - 1)),
            ))
        }
        4 | 5 => {
            let op = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]
                .choose(rng)
                .expect("non-empty");
            e(ExprKind::Binary(
                *op,
                Box::new(gen_int(rng, scope, depth - 1)),
                Box::new(gen_int(rng, scope, depth - 1)),
            ))
        }
        6 | 7 => {
            let op = if rng.gen_bool(0.5) { BinOp::Eq } else { BinOp::Ne };
            let pick = rng.gen_range(0..5);
            let (l, r) = match pick {
                0 => (
                    gen_int(rng, scope, depth - 1),
                    gen_int(rng, scope, depth - 1),
                ),
                1 => (
                    gen_string(rng, scope, depth - 1),
                    gen_string(rng, scope, depth - 1),
                ),
                2 => (
                    gen_bool(rng, scope, depth - 1),
                    gen_bool(rng, scope, depth - 1),
                ),
                3 => match (
                    gen_object(rng, scope, "Base", depth - 1),
                    gen_object(rng, scope, "Base", depth - 1),
                ) {
                    (Some(l), Some(r)) => (l, r),
                    _ => (
                        gen_int(rng, scope, depth - 1),
                        gen_int(rng, scope, depth - 1),
                    ),
                },
                _ => match (
                    gen_set(rng, scope, "Node", depth - 1),
                    gen_set(rng, scope, "Node", depth - 1),
                ) {
                    (Some(l), Some(r)) => (l, r),
                    _ => (
                        gen_int(rng, scope, depth - 1),
                        gen_int(rng, scope, depth - 1),
                    ),
                },
            };
            e(ExprKind::Binary(op, Box::new(l), Box::new(r)))
        }
        8 => match (
            gen_set(rng, scope, "Node", depth - 1),
            gen_object(rng, scope, "Node", depth - 1),
        ) {
            (Some(set), Some(arg)) => e(ExprKind::Includes(Box::new(set), Box::new(arg))),
            _ => e(ExprKind::BoolLit(true)),
        },
        9 | 10 => match gen_set(rng, scope, "Node", depth - 1) {
            Some(set) => {
                let var = format!("q{}", scope.fresh);
                scope.fresh += 1;
                scope.vars.push((var.clone(), TypeRef::Class("Node".into())));
                let body = gen_bool(rng, scope, depth - 1);
                scope.vars.pop();
                if rng.gen_bool(0.5) {
                    e(ExprKind::ForAll(Box::new(set), var, Box::new(body)))
                } else {
                    e(ExprKind::Exists(Box::new(set), var, Box::new(body)))
                }
            }
            None => e(ExprKind::BoolLit(false)),
        },
        _ => {
            let names = scope.of_type(&TypeRef::Bool);
            if names.is_empty() {
                match gen_object(rng, scope, "Base", depth - 1) {
                    Some(obj) => e(ExprKind::Attr(Box::new(obj), "flag".into())),
                    None => e(ExprKind::BoolLit(rng.gen_bool(0.5))),
                }
            } else {
                e(ExprKind::Name(names.choose(rng).expect("non-empty").to_string()))
            }
        }
    }
}

/// Object-typed expression whose static class is (a subclass of) `class`.
fn gen_object(
    rng: &mut ChaCha8Rng,
    scope: &mut ExprScope,
    class: &str,
    depth: u32,
) -> Option<Expr> {
    let mut candidates: Vec<Expr> = Vec::new();
    for (name, ty) in &scope.vars {
        if let TypeRef::Class(c) = ty {
            if c == class || class == "Base" {
                candidates.push(e(ExprKind::Name(name.clone())));
            }
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let base = candidates.choose(rng).expect("non-empty").clone();
    // Chain `.next` navigations for class Node (Base narrows to whatever
    // the variable already is).
    if class != "Base" && depth > 0 && rng.gen_bool(0.4) {
        let hops = rng.gen_range(1..=2);
        let mut cur = base;
        for _ in 0..hops {
            cur = e(ExprKind::Attr(Box::new(cur), "next".into()));
        }
        return Some(cur);
    }
    Some(base)
}

fn gen_set(
    rng: &mut ChaCha8Rng,
    scope: &mut ExprScope,
    class: &str,
    depth: u32,
) -> Option<Expr> {
    let obj = gen_object(rng, scope, class, depth)?;
    Some(e(ExprKind::Attr(Box::new(obj), "peers".into())))
}

pub fn env_from_store(store: &ObjectStore) -> BTreeMap<String, Value> {
    store
        .name_entries()
        .map(|(n, id)| (n.clone(), Value::Obj(*id)))
        .collect()
}

// --- pattern cases ----------------------------------------------------------

/// A random matcher case over the fixed world: a store of up to 6 objects
/// and a pattern of up to 4 objects with literal, link and set constraints.
pub fn gen_match_case(
    rng: &mut ChaCha8Rng,
    model: &Model,
) -> (PatternConfiguration, ObjectStore) {
    let store = gen_store(rng, model, 6);
    let pattern_len = rng.gen_range(0..=4usize);
    let mut objects = Vec::new();
    let store_names: Vec<String> = store.name_entries().map(|(n, _)| n.clone()).collect();
    let pattern_names: Vec<String> = (0..pattern_len)
        .map(|i| {
            // Name collisions with fixture objects create implicit anchors.
            if !store_names.is_empty() && rng.gen_bool(0.3) {
                store_names.choose(rng).expect("non-empty").clone()
            } else {
                format!("p{i}")
            }
        })
        .collect();
    for (i, name) in pattern_names.iter().enumerate() {
        let class = ["Base", "Node", "Leaf"].choose(rng).expect("non-empty");
        let mut assignments = Vec::new();
        if rng.gen_bool(0.6) {
            assignments.push(Assignment {
                attr: "id".into(),
                value: ConfigValue::Literal(Literal::Int(rng.gen_range(-3..=3))),
                pos: pos(),
            });
        }
        if rng.gen_bool(0.3) {
            assignments.push(Assignment {
                attr: "tag".into(),
                value: ConfigValue::Literal(Literal::Str(
                    STRING_POOL.choose(rng).expect("non-empty").to_string(),
                )),
                pos: pos(),
            });
        }
        if *class == "Node" {
            let mut peers: Vec<String> = pattern_names
                .iter()
                .filter(|_| rng.gen_bool(0.25))
                .cloned()
                .collect();
            peers.dedup();
            if rng.gen_bool(0.3) && !pattern_names.is_empty() {
                assignments.push(Assignment {
                    attr: "next".into(),
                    value: ConfigValue::Ref(
                        pattern_names.choose(rng).expect("non-empty").clone(),
                    ),
                    pos: pos(),
                });
            }
            if rng.gen_bool(0.25) {
                assignments.push(Assignment {
                    attr: "peers".into(),
                    value: ConfigValue::Set(peers),
                    pos: pos(),
                });
            }
        }
        objects.push(PatternObject {
            anchored: !store_names.contains(name) && rng.gen_bool(0.05),
            object: ObjectDecl {
                name: name.clone(),
                class_name: class.to_string(),
                assignments,
                pos: pos(),
            },
        });
        let _ = i;
    }
    // Deduplicate pattern object names (duplicates break the witness map).
    let mut seen = std::collections::BTreeSet::new();
    objects.retain(|po| seen.insert(po.object.name.clone()));
    (
        PatternConfiguration {
            name: "genPat".into(),
            objects,
            origin: origin(0),
        },
        store,
    )
}


// --- random well-formed models -----------------------------------------------

/// A small well-formed model: single-inheritance hierarchy, typed members,
/// simple bodies, at most one statechart, configurations, patterns,
/// sequences and glass-box tests. Correct by construction.
pub fn gen_wellformed_model(rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::named("genmodel");
    let mut item_seq: u32 = 0;
    let mut attr_counter: u32 = 0;
    let mut method_counter: u32 = 0;

    // Classes. Superclasses point at earlier indices only, so the
    // hierarchy is acyclic; fresh member names rule out shadowing and
    // override mismatches.
    let class_count = rng.gen_range(1..=4usize);
    let root_abstract = class_count > 1 && rng.gen_bool(0.3);
    for i in 0..class_count {
        let superclass = if i == 0 {
            None
        } else if rng.gen_bool(0.8) {
            Some(format!("K{}", rng.gen_range(0..i)))
        } else {
            None
        };
        let mut attributes = Vec::new();
        for _ in 0..rng.gen_range(0..3u32) {
            let ty = match rng.gen_range(0..5u32) {
                0 => TypeRef::Int,
                1 => TypeRef::Bool,
                2 => TypeRef::String,
                3 => TypeRef::Class(format!("K{}", rng.gen_range(0..class_count))),
                _ => TypeRef::SetOf(format!("K{}", rng.gen_range(0..class_count))),
            };
            attributes.push(AttributeDef {
                name: format!("a{attr_counter}"),
                ty,
                published: false,
                pos: pos(),
            });
            attr_counter += 1;
        }
        let mut methods: Vec<MethodDef> = Vec::new();
        for _ in 0..rng.gen_range(0..3u32) {
            let name = format!("m{method_counter}");
            method_counter += 1;
            let params = if rng.gen_bool(0.5) {
                vec![Param {
                    name: "p".into(),
                    ty: TypeRef::Int,
                }]
            } else {
                vec![]
            };
            let returning = rng.gen_bool(0.5);
            let body = if returning {
                let value = if params.is_empty() {
                    e(ExprKind::IntLit(rng.gen_range(-5..=5)))
                } else {
                    e(ExprKind::Binary(
                        BinOp::Add,
                        Box::new(e(ExprKind::Name("p".into()))),
                        Box::new(e(ExprKind::IntLit(rng.gen_range(-5..=5)))),
                    ))
                };
                ActionBlock {
                    statements: vec![Statement::Return { value, pos: pos() }],
                }
            } else {
                // Void methods sometimes call an earlier method of the same
                // class, so executed traces exercise call nesting. Only
                // earlier methods are called, which rules out recursion.
                let mut statements = Vec::new();
                if !methods.is_empty() && rng.gen_bool(0.6) {
                    let callee = &methods[rng.gen_range(0..methods.len())];
                    let args = if callee.params.is_empty() {
                        vec![]
                    } else {
                        vec![e(ExprKind::IntLit(rng.gen_range(-5..=5)))]
                    };
                    statements.push(Statement::Call {
                        receiver: e(ExprKind::Name("self".into())),
                        method: callee.name.clone(),
                        args,
                        pos: pos(),
                    });
                }
                ActionBlock { statements }
            };
            methods.push(MethodDef {
                name,
                params,
                return_type: returning.then_some(TypeRef::Int),
                body: Some(body),
                is_abstract: false,
                published: false,
                pos: pos(),
            });
        }
        model.classes.push(ClassDef {
            name: format!("K{i}"),
            superclass,
            is_abstract: i == 0 && root_abstract,
            published: false,
            attributes,
            methods,
            origin: origin(item_seq),
        });
        item_seq += 1;
    }

    // Optional statechart on one class, driven by fresh body-less triggers.
    if rng.gen_bool(0.5) {
        let owner_idx = rng.gen_range(0..class_count);
        let owner = format!("K{owner_idx}");
        let trigger = format!("m{method_counter}");
        method_counter += 1;
        let _ = method_counter;
        model.classes[owner_idx].methods.push(MethodDef {
            name: trigger.clone(),
            params: vec![],
            return_type: None,
            body: None,
            is_abstract: false,
            published: false,
            pos: pos(),
        });
        let state_count = rng.gen_range(1..=3usize);
        let states: Vec<String> = (0..state_count).map(|i| format!("S{i}")).collect();
        let mut transitions = Vec::new();
        for _ in 0..rng.gen_range(0..3u32) {
            transitions.push(TransitionDef {
                source: states[rng.gen_range(0..state_count)].clone(),
                target: states[rng.gen_range(0..state_count)].clone(),
                trigger: trigger.clone(),
                params: vec![],
                guard: rng.gen_bool(0.3).then(|| e(ExprKind::BoolLit(true))),
                actions: None,
                result: None,
                pos: pos(),
            });
        }
        model.statecharts.push(Statechart {
            owner,
            initial: states[0].clone(),
            states,
            transitions,
            origin: origin(item_seq),
        });
        item_seq += 1;
    }

    let concrete: Vec<usize> = (0..class_count)
        .filter(|i| !model.classes[*i].is_abstract)
        .collect();

    // Configurations over concrete classes, wiring conforming references.
    let config_count = if concrete.is_empty() {
        0
    } else {
        rng.gen_range(0..=2usize)
    };
    for c in 0..config_count {
        let object_count = rng.gen_range(0..=3usize);
        let classes: Vec<usize> = (0..object_count)
            .map(|_| *concrete.choose(rng).expect("non-empty"))
            .collect();
        let names: Vec<String> = (0..object_count).map(|i| format!("x{c}_{i}")).collect();
        let mut objects = Vec::new();
        for (i, class_idx) in classes.iter().enumerate() {
            let mut assignments = Vec::new();
            for (def_idx, attr) in visible_attributes(&model, *class_idx) {
                let _ = def_idx;
                if rng.gen_bool(0.5) {
                    continue;
                }
                let value = match &attr.1 {
                    TypeRef::Int => ConfigValue::Literal(Literal::Int(rng.gen_range(-9..=9))),
                    TypeRef::Bool => ConfigValue::Literal(Literal::Bool(rng.gen_bool(0.5))),
                    TypeRef::String => ConfigValue::Literal(Literal::Str(
                        STRING_POOL.choose(rng).expect("non-empty").to_string(),
                    )),
                    TypeRef::Class(target) => {
                        let conforming: Vec<&String> = names
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| {
                                class_conforms(&model, classes[*j], target)
                            })
                            .map(|(_, n)| n)
                            .collect();
                        match conforming.choose(rng) {
                            Some(n) => ConfigValue::Ref((*n).clone()),
                            None => continue,
                        }
                    }
                    TypeRef::SetOf(target) => {
                        let mut members: Vec<String> = names
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| {
                                class_conforms(&model, classes[*j], target) && rng.gen_bool(0.5)
                            })
                            .map(|(_, n)| n.clone())
                            .collect();
                        members.dedup();
                        ConfigValue::Set(members)
                    }
                };
                assignments.push(Assignment {
                    attr: attr.0.clone(),
                    value,
                    pos: pos(),
                });
            }
            objects.push(ObjectDecl {
                name: names[i].clone(),
                class_name: format!("K{}", class_idx),
                assignments,
                pos: pos(),
            });
        }
        model.configs.push(ObjectConfiguration {
            name: format!("cfg{c}"),
            objects,
            origin: origin(item_seq),
        });
        item_seq += 1;
    }

    // An optional partial pattern, possibly over the abstract root.
    if !model.classes.is_empty() && rng.gen_bool(0.4) {
        let class_idx = rng.gen_range(0..class_count);
        model.patterns.push(PatternConfiguration {
            name: "pat0".into(),
            objects: vec![PatternObject {
                anchored: rng.gen_bool(0.3),
                object: ObjectDecl {
                    name: "w0".into(),
                    class_name: format!("K{class_idx}"),
                    assignments: vec![],
                    pos: pos(),
                },
            }],
            origin: origin(item_seq),
        });
        item_seq += 1;
    }

    // Tests: one driver sequence each, over an existing configuration.
    let test_count = if model.configs.is_empty() {
        0
    } else {
        rng.gen_range(0..=2usize)
    };
    for t in 0..test_count {
        let config = model.configs[rng.gen_range(0..model.configs.len())].clone();
        let mut steps = Vec::new();
        for obj in &config.objects {
            let class_idx = class_index(&model, &obj.class_name);
            if rng.gen_bool(0.5) {
                if let Some((method, has_param)) = callable_method(&model, class_idx, rng) {
                    steps.push(Step::Stimulus {
                        target: obj.name.clone(),
                        method,
                        args: if has_param {
                            vec![Literal::Int(rng.gen_range(-5..=5))]
                        } else {
                            vec![]
                        },
                        expect: None,
                        pos: pos(),
                    });
                }
            }
            if let Some(assert) = simple_assert(&model, &config, rng) {
                steps.push(Step::Assert {
                    expr: assert,
                    pos: pos(),
                });
            }
        }
        let seq_name = format!("seq{t}");
        model.sequences.push(SequenceDefinition {
            name: seq_name.clone(),
            strict: rng.gen_bool(0.2),
            steps,
            origin: origin(item_seq),
        });
        item_seq += 1;
        let oracle = if rng.gen_bool(0.5) {
            Some(Oracle {
                pattern: model
                    .patterns
                    .first()
                    .filter(|_| rng.gen_bool(0.5))
                    .map(|p| p.name.clone()),
                assertions: simple_assert(&model, &config, rng).into_iter().collect(),
            })
        } else {
            None
        };
        model.tests.push(TestCase {
            name: format!("t{t}"),
            category: if rng.gen_bool(0.5) {
                TestCategory::Unit
            } else {
                TestCategory::Integration
            },
            fixture: config.name.clone(),
            driver: seq_name,
            oracle,
            origin: origin(item_seq),
        });
        item_seq += 1;
    }

    // Invariants over primitive attributes.
    if rng.gen_bool(0.4) {
        for (idx, class) in model.classes.clone().iter().enumerate() {
            if let Some((name, _)) = visible_attributes(&model, idx)
                .into_iter()
                .map(|(_, a)| a)
                .find(|(_, ty)| *ty == TypeRef::Int)
            {
                model.invariants.push(NamedInvariant {
                    name: format!("inv_{}", class.name),
                    context_class: class.name.clone(),
                    expr: e(ExprKind::Binary(
                        BinOp::Ge,
                        Box::new(e(ExprKind::Attr(
                            Box::new(e(ExprKind::Name("self".into()))),
                            name,
                        ))),
                        Box::new(e(ExprKind::IntLit(i64::MIN))),
                    )),
                    origin: origin(item_seq),
                });
                item_seq += 1;
                let _ = item_seq;
                break;
            }
        }
    }

    model
}

fn class_index(model: &Model, name: &str) -> usize {
    model
        .classes
        .iter()
        .position(|c| c.name == name)
        .expect("generated classes resolve")
}

fn class_conforms(model: &Model, class_idx: usize, target: &str) -> bool {
    amw_core::model::check::is_subclass_of(model, &model.classes[class_idx].name, target)
}

/// `(defining index, (attribute name, type))` for declared plus inherited
/// attributes, nearest first.
fn visible_attributes(model: &Model, class_idx: usize) -> Vec<(usize, (String, TypeRef))> {
    let mut out = Vec::new();
    let mut cur = Some(class_idx);
    while let Some(idx) = cur {
        let class = &model.classes[idx];
        for a in &class.attributes {
            out.push((idx, (a.name.clone(), a.ty.clone())));
        }
        cur = class
            .superclass
            .as_ref()
            .map(|s| class_index(model, s));
    }
    out
}

/// A bodied method callable on the class (declared or inherited), plus
/// whether it takes the single Int parameter the generator uses.
fn callable_method(model: &Model, class_idx: usize, rng: &mut ChaCha8Rng) -> Option<(String, bool)> {
    let mut candidates = Vec::new();
    let mut cur = Some(class_idx);
    while let Some(idx) = cur {
        let class = &model.classes[idx];
        for m in &class.methods {
            if m.body.is_some() {
                candidates.push((m.name.clone(), !m.params.is_empty()));
            }
        }
        cur = class.superclass.as_ref().map(|s| class_index(model, s));
    }
    candidates.choose(rng).cloned()
}

/// `obj.attr <op> literal` over some primitive attribute of some fixture
/// object, or a plain boolean literal when nothing fits.
fn simple_assert(
    model: &Model,
    config: &ObjectConfiguration,
    rng: &mut ChaCha8Rng,
) -> Option<Expr> {
    if !rng.gen_bool(0.6) {
        return None;
    }
    for obj in &config.objects {
        let idx = class_index(model, &obj.class_name);
        for (_, (name, ty)) in visible_attributes(model, idx) {
            let nav = e(ExprKind::Attr(
                Box::new(e(ExprKind::Name(obj.name.clone()))),
                name,
            ));
            let lit = match ty {
                TypeRef::Int => e(ExprKind::IntLit(rng.gen_range(-9..=9))),
                TypeRef::Bool => e(ExprKind::BoolLit(rng.gen_bool(0.5))),
                TypeRef::String => e(ExprKind::StrLit("x".into())),
                _ => continue,
            };
            return Some(e(ExprKind::Binary(BinOp::Eq, Box::new(nav), Box::new(lit))));
        }
    }
    Some(e(ExprKind::BoolLit(true)))
}

// --- random possibly-invalid models -------------------------------------------

/// Small class-only models with deliberate violation opportunities:
/// duplicate names, dangling or cyclic superclasses, shadowed attributes,
/// mismatched overrides, abstract methods with bodies, concrete classes
/// with unimplemented abstract methods.
pub fn gen_random_model(rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::named("rand");
    let class_names = ["A", "B", "C", "D"];
    let attr_names = ["x", "y"];
    let method_names = ["f", "g"];
    let count = rng.gen_range(1..=4usize);
    for i in 0..count {
        // Duplicate class names appear with low probability.
        let name = if rng.gen_bool(0.1) && i > 0 {
            class_names[rng.gen_range(0..i)].to_string()
        } else {
            class_names[i].to_string()
        };
        let superclass = match rng.gen_range(0..10u32) {
            0 => Some(name.clone()),                                // self-cycle
            1 => Some("Ghost".to_string()),                         // dangling
            2..=5 => Some(class_names[rng.gen_range(0..count)].to_string()),
            _ => None,
        };
        let mut attributes = Vec::new();
        for _ in 0..rng.gen_range(0..3u32) {
            attributes.push(AttributeDef {
                name: attr_names.choose(rng).expect("non-empty").to_string(),
                ty: match rng.gen_range(0..4u32) {
                    0 => TypeRef::Int,
                    1 => TypeRef::Bool,
                    2 => TypeRef::SetOf(if rng.gen_bool(0.2) {
                        "Int".to_string() // set<primitive> violation
                    } else {
                        class_names[rng.gen_range(0..count)].to_string()
                    }),
                    _ => TypeRef::Class(class_names[rng.gen_range(0..count)].to_string()),
                },
                published: false,
                pos: pos(),
            });
        }
        let mut methods = Vec::new();
        for _ in 0..rng.gen_range(0..3u32) {
            let is_abstract = rng.gen_bool(0.3);
            let body = if rng.gen_bool(if is_abstract { 0.15 } else { 0.0 }) {
                Some(ActionBlock { statements: vec![] }) // abstract with body
            } else {
                None
            };
            methods.push(MethodDef {
                name: method_names.choose(rng).expect("non-empty").to_string(),
                params: if rng.gen_bool(0.5) {
                    vec![Param {
                        name: "p".into(),
                        ty: if rng.gen_bool(0.5) {
                            TypeRef::Int
                        } else {
                            TypeRef::String
                        },
                    }]
                } else {
                    vec![]
                },
                return_type: rng.gen_bool(0.4).then_some(TypeRef::Int),
                body,
                is_abstract,
                published: false,
                pos: pos(),
            });
        }
        model.classes.push(ClassDef {
            name,
            superclass,
            is_abstract: rng.gen_bool(0.4),
            published: false,
            attributes,
            methods,
            origin: origin(i as u32),
        });
    }
    model
}
