//! Direct model execution: object stores, method dispatch (textual bodies
//! and statechart transitions), interaction traces and coverage logging.
//!
//! One store is confined to one run. Every `invoke` appends a balanced
//! call/return pair to the trace, including error returns, so a trace is
//! always a well-nested bracket string.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diag::codes;
use crate::eval::{eval, EvalContext, EvalError, Value};
use crate::model::check::{effective_attributes, effective_chart, lookup_method};
use crate::model::{
    ActionBlock, ConfigValue, Expr, ExprKind, Model, ObjectConfiguration, Statement, TypeRef,
};

/// Store-unique object identity. Ids start at 1 and are never reused
/// within a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjId(pub u32);

impl fmt::Display for ObjId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuntimeObject {
    pub id: ObjId,
    pub class: String,
    pub slots: BTreeMap<String, Value>,
    /// Present iff the class (or an ancestor) owns a statechart.
    pub current_state: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObjectStore {
    objects: BTreeMap<ObjId, RuntimeObject>,
    next_id: u32,
    name_index: BTreeMap<String, ObjId>,
}

impl ObjectStore {
    pub fn new() -> Self {
        ObjectStore {
            objects: BTreeMap::new(),
            next_id: 1,
            name_index: BTreeMap::new(),
        }
    }

    pub fn allocate(&mut self, class: &str) -> ObjId {
        let id = ObjId(self.next_id);
        self.next_id += 1;
        self.objects.insert(
            id,
            RuntimeObject {
                id,
                class: class.to_string(),
                slots: BTreeMap::new(),
                current_state: None,
            },
        );
        id
    }

    pub fn get(&self, id: ObjId) -> Option<&RuntimeObject> {
        self.objects.get(&id)
    }

    pub fn get_mut(&mut self, id: ObjId) -> Option<&mut RuntimeObject> {
        self.objects.get_mut(&id)
    }

    pub fn by_name(&self, name: &str) -> Option<ObjId> {
        self.name_index.get(name).copied()
    }

    pub fn register_name(&mut self, name: &str, id: ObjId) {
        self.name_index.insert(name.to_string(), id);
    }

    /// Fixture name of an object, when it has one.
    pub fn name_of(&self, id: ObjId) -> Option<&str> {
        self.name_index
            .iter()
            .find(|(_, v)| **v == id)
            .map(|(k, _)| k.as_str())
    }

    pub fn name_entries(&self) -> impl Iterator<Item = (&String, &ObjId)> {
        self.name_index.iter()
    }

    /// Objects in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (&ObjId, &RuntimeObject)> {
        self.objects.iter()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn ids(&self) -> Vec<ObjId> {
        self.objects.keys().copied().collect()
    }

    /// Deterministic rendering of the whole store, used as a node key by
    /// the statechart explorer.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (id, obj) in &self.objects {
            out.push_str(&format!("{id}:{}", obj.class));
            if let Some(s) = &obj.current_state {
                out.push_str(&format!("@{s}"));
            }
            out.push('{');
            for (slot, value) in &obj.slots {
                out.push_str(&format!("{slot}={value};"));
            }
            out.push('}');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecBudget {
    pub max_steps: u64,
    pub max_depth: u32,
}

impl Default for ExecBudget {
    fn default() -> Self {
        ExecBudget {
            max_steps: 100_000,
            max_depth: 256,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Caller {
    Driver,
    Obj(ObjId),
}

impl fmt::Display for Caller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Caller::Driver => write!(f, "DRIVER"),
            Caller::Obj(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReturnValue {
    None,
    Value(Value),
    Error(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Call {
        seq: u64,
        caller: Caller,
        callee: ObjId,
        method: String,
        args: Vec<Value>,
    },
    Return {
        seq: u64,
        caller: Caller,
        callee: ObjId,
        method: String,
        result: ReturnValue,
    },
}

impl TraceEvent {
    /// One line per event: `SEQ kind caller->callee method(args)[=result]`.
    pub fn render(&self) -> String {
        match self {
            TraceEvent::Call {
                seq,
                caller,
                callee,
                method,
                args,
            } => {
                let rendered: Vec<String> = args.iter().map(|v| v.to_string()).collect();
                format!("{seq} call {caller}->{callee} {method}({})", rendered.join(", "))
            }
            TraceEvent::Return {
                seq,
                caller,
                callee,
                method,
                result,
            } => {
                let suffix = match result {
                    ReturnValue::None => String::new(),
                    ReturnValue::Value(v) => format!("={v}"),
                    ReturnValue::Error(code) => format!("=!{code}"),
                };
                format!("{seq} return {caller}->{callee} {method}{suffix}")
            }
        }
    }
}

/// Renders a full trace, one event per line.
pub fn render_trace(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&e.render());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("{count} transitions enabled in state `{state}` of `{class}` for `{method}`")]
    Nondeterminism {
        class: String,
        state: String,
        method: String,
        count: usize,
    },
    #[error("no transition enabled in state `{state}` of `{class}` for `{method}`")]
    NoTransition {
        class: String,
        state: String,
        method: String,
    },
    #[error("execution budget exceeded ({0})")]
    Budget(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot instantiate abstract class `{0}`")]
    AbstractInstantiation(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("class `{class}` has no method `{method}`")]
    UnknownMember { class: String, method: String },
    #[error("method `{method}` of `{class}` has no behavior source")]
    NoBehavior { class: String, method: String },
    #[error("method `{method}` of `{class}` fell through without a return value")]
    MissingReturn { class: String, method: String },
}

impl RuntimeError {
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::Nondeterminism { .. } => codes::E_NONDETERMINISM,
            RuntimeError::NoTransition { .. } => codes::E_NO_TRANSITION,
            RuntimeError::Budget(_) => codes::E_BUDGET,
            RuntimeError::Eval(e) => e.code(),
            RuntimeError::AbstractInstantiation(_) => codes::E_ABSTRACT_INSTANTIATION,
            RuntimeError::UnknownClass(_) => codes::E_UNKNOWN_CLASS,
            RuntimeError::UnknownMember { .. } => codes::E_UNKNOWN_MEMBER,
            RuntimeError::NoBehavior { .. } => codes::E_NO_BEHAVIOR,
            RuntimeError::MissingReturn { .. } => codes::E_MISSING_RETURN,
        }
    }
}

fn default_value(ty: &TypeRef) -> Value {
    match ty {
        TypeRef::Int => Value::Int(0),
        TypeRef::Bool => Value::Bool(false),
        TypeRef::String => Value::Str(String::new()),
        TypeRef::Class(_) => Value::Undefined,
        TypeRef::SetOf(_) => Value::Set(BTreeSet::new()),
    }
}

/// Builds a store from a configuration: one object per declaration, slots
/// defaulted then overwritten by assignments, statechart-bearing objects
/// in their initial state.
pub fn instantiate(model: &Model, config: &ObjectConfiguration) -> Result<ObjectStore, RuntimeError> {
    let mut store = ObjectStore::new();
    for decl in &config.objects {
        let class = model
            .find_class(&decl.class_name)
            .ok_or_else(|| RuntimeError::UnknownClass(decl.class_name.clone()))?;
        if class.is_abstract {
            return Err(RuntimeError::AbstractInstantiation(class.name.clone()));
        }
        let id = store.allocate(&class.name);
        let obj = store.get_mut(id).expect("freshly allocated");
        for (_, attr) in effective_attributes(model, &class.name) {
            obj.slots.insert(attr.name.clone(), default_value(&attr.ty));
        }
        obj.current_state = effective_chart(model, &class.name).map(|c| c.initial.clone());
        store.register_name(&decl.name, id);
    }
    // Second pass: assignments may reference objects declared later.
    for decl in &config.objects {
        let id = store.by_name(&decl.name).expect("registered above");
        for assignment in &decl.assignments {
            let value = match &assignment.value {
                ConfigValue::Literal(lit) => Value::from_literal(lit),
                ConfigValue::Ref(name) => Value::Obj(store.by_name(name).ok_or_else(|| {
                    RuntimeError::Eval(EvalError::UnboundName(name.clone()))
                })?),
                ConfigValue::Set(names) => {
                    let mut ids = BTreeSet::new();
                    for name in names {
                        ids.insert(store.by_name(name).ok_or_else(|| {
                            RuntimeError::Eval(EvalError::UnboundName(name.clone()))
                        })?);
                    }
                    Value::Set(ids)
                }
            };
            store
                .get_mut(id)
                .expect("object exists")
                .slots
                .insert(assignment.attr.clone(), value);
        }
    }
    Ok(store)
}

/// Per-run coverage: states entered and transitions fired, per chart owner.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageLog {
    pub states_entered: BTreeMap<String, BTreeSet<String>>,
    pub transitions_fired: BTreeMap<String, BTreeSet<usize>>,
}

impl CoverageLog {
    pub fn merge(&mut self, other: &CoverageLog) {
        for (owner, states) in &other.states_entered {
            self.states_entered
                .entry(owner.clone())
                .or_default()
                .extend(states.iter().cloned());
        }
        for (owner, transitions) in &other.transitions_fired {
            self.transitions_fired
                .entry(owner.clone())
                .or_default()
                .extend(transitions.iter().copied());
        }
    }
}

/// Local variable scopes of one body execution.
struct Env {
    scopes: Vec<BTreeMap<String, Value>>,
}

impl Env {
    fn new(bindings: BTreeMap<String, Value>) -> Self {
        Env {
            scopes: vec![bindings],
        }
    }

    fn push(&mut self) {
        self.scopes.push(BTreeMap::new());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, value: Value) {
        self.scopes
            .last_mut()
            .expect("at least one scope")
            .insert(name.to_string(), value);
    }

    fn assign(&mut self, name: &str, value: Value) -> bool {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return true;
            }
        }
        false
    }

    fn flatten(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for scope in &self.scopes {
            for (k, v) in scope {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }
}

/// Outcome of a statement: continue, or an early return with a value.
enum Flow {
    Continue,
    Return(Value),
}

/// Executes method calls against a store, recording the trace and coverage.
pub struct Engine<'m> {
    pub model: &'m Model,
    pub store: ObjectStore,
    pub trace: Vec<TraceEvent>,
    pub coverage: CoverageLog,
    /// Transitions in dispatch order: `(chart owner, transition index)`.
    /// The selected transition is logged before its actions run, so the
    /// first entry of a fresh engine is the directly dispatched one.
    pub fired_log: Vec<(String, usize)>,
    budget: ExecBudget,
    steps: u64,
    seq: u64,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m Model, store: ObjectStore, budget: ExecBudget) -> Self {
        let mut coverage = CoverageLog::default();
        for (_, obj) in store.iter() {
            if let (Some(state), Some(chart)) =
                (&obj.current_state, effective_chart(model, &obj.class))
            {
                coverage
                    .states_entered
                    .entry(chart.owner.clone())
                    .or_default()
                    .insert(state.clone());
            }
        }
        Engine {
            model,
            store,
            trace: Vec::new(),
            coverage,
            fired_log: Vec::new(),
            budget,
            steps: 0,
            seq: 0,
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn step(&mut self) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.budget.max_steps {
            return Err(RuntimeError::Budget("steps"));
        }
        Ok(())
    }

    /// Invokes `method` on `target`. The call and its return (normal or
    /// error) are always traced.
    pub fn invoke(
        &mut self,
        caller: Caller,
        target: ObjId,
        method: &str,
        args: Vec<Value>,
    ) -> Result<Option<Value>, RuntimeError> {
        self.invoke_at(caller, target, method, args, 0)
    }

    fn invoke_at(
        &mut self,
        caller: Caller,
        target: ObjId,
        method: &str,
        args: Vec<Value>,
        depth: u32,
    ) -> Result<Option<Value>, RuntimeError> {
        let seq = self.next_seq();
        self.trace.push(TraceEvent::Call {
            seq,
            caller,
            callee: target,
            method: method.to_string(),
            args: args.clone(),
        });
        let outcome = self.dispatch(target, method, args, depth);
        let seq = self.next_seq();
        let result = match &outcome {
            Ok(Some(v)) => ReturnValue::Value(v.clone()),
            Ok(None) => ReturnValue::None,
            Err(e) => ReturnValue::Error(e.code()),
        };
        self.trace.push(TraceEvent::Return {
            seq,
            caller,
            callee: target,
            method: method.to_string(),
            result,
        });
        outcome
    }

    fn dispatch(
        &mut self,
        target: ObjId,
        method: &str,
        args: Vec<Value>,
        depth: u32,
    ) -> Result<Option<Value>, RuntimeError> {
        self.step()?;
        if depth > self.budget.max_depth {
            return Err(RuntimeError::Budget("depth"));
        }
        let class = self
            .store
            .get(target)
            .ok_or_else(|| EvalError::Internal(format!("dangling object {target}")))
            .map_err(RuntimeError::Eval)?
            .class
            .clone();
        let (_, def) = lookup_method(self.model, &class, method)
            .ok_or_else(|| RuntimeError::UnknownMember {
                class: class.clone(),
                method: method.to_string(),
            })?;

        if let Some(body) = &def.body {
            let mut bindings = BTreeMap::new();
            bindings.insert("self".to_string(), Value::Obj(target));
            for (param, arg) in def.params.iter().zip(args) {
                bindings.insert(param.name.clone(), arg);
            }
            let mut env = Env::new(bindings);
            return match self.exec_block(body, &mut env, target, depth)? {
                Flow::Return(v) => Ok(Some(v)),
                Flow::Continue => {
                    if def.return_type.is_some() {
                        Err(RuntimeError::MissingReturn {
                            class,
                            method: method.to_string(),
                        })
                    } else {
                        Ok(None)
                    }
                }
            };
        }

        let chart = effective_chart(self.model, &class);
        if let Some(chart) = chart {
            if chart.transitions.iter().any(|t| t.trigger == method) {
                return self.dispatch_transition(target, &class, chart.owner.clone(), method, args, depth);
            }
        }

        Err(RuntimeError::NoBehavior {
            class,
            method: method.to_string(),
        })
    }

    fn dispatch_transition(
        &mut self,
        target: ObjId,
        class: &str,
        chart_owner: String,
        method: &str,
        args: Vec<Value>,
        depth: u32,
    ) -> Result<Option<Value>, RuntimeError> {
        let chart = self
            .model
            .find_chart(&chart_owner)
            .expect("chart existence checked by caller");
        let state = self
            .store
            .get(target)
            .and_then(|o| o.current_state.clone())
            .ok_or_else(|| {
                EvalError::Internal(format!("object {target} has no statechart state"))
            })
            .map_err(RuntimeError::Eval)?;

        let mut enabled: Vec<usize> = Vec::new();
        for (idx, trans) in chart.transitions.iter().enumerate() {
            if trans.source != state || trans.trigger != method {
                continue;
            }
            let mut ctx = EvalContext::new(self.model, &self.store);
            ctx.bind("self", Value::Obj(target)).map_err(RuntimeError::Eval)?;
            for (name, arg) in trans.params.iter().zip(&args) {
                ctx.bind(name, arg.clone()).map_err(RuntimeError::Eval)?;
            }
            let open = match &trans.guard {
                None => true,
                Some(guard) => match eval(guard, &ctx).map_err(RuntimeError::Eval)? {
                    Value::Bool(b) => b,
                    other => {
                        return Err(RuntimeError::Eval(EvalError::Internal(format!(
                            "guard evaluated to {other}"
                        ))))
                    }
                },
            };
            if open {
                enabled.push(idx);
            }
        }

        match enabled.len() {
            0 => Err(RuntimeError::NoTransition {
                class: class.to_string(),
                state,
                method: method.to_string(),
            }),
            1 => {
                let idx = enabled[0];
                self.fired_log.push((chart_owner.clone(), idx));
                let trans = &chart.transitions[idx];
                let mut bindings = BTreeMap::new();
                bindings.insert("self".to_string(), Value::Obj(target));
                for (name, arg) in trans.params.iter().zip(&args) {
                    bindings.insert(name.clone(), arg.clone());
                }
                if let Some(actions) = &trans.actions {
                    let mut env = Env::new(bindings.clone());
                    match self.exec_block(actions, &mut env, target, depth)? {
                        Flow::Continue => {}
                        Flow::Return(_) => {
                            return Err(RuntimeError::Eval(EvalError::Internal(
                                "return inside transition actions".to_string(),
                            )))
                        }
                    }
                }
                let target_state = trans.target.clone();
                if let Some(obj) = self.store.get_mut(target) {
                    obj.current_state = Some(target_state.clone());
                }
                self.coverage
                    .states_entered
                    .entry(chart_owner.clone())
                    .or_default()
                    .insert(target_state);
                self.coverage
                    .transitions_fired
                    .entry(chart_owner)
                    .or_default()
                    .insert(idx);
                match &trans.result {
                    None => Ok(None),
                    Some(result) => {
                        let mut ctx = EvalContext::new(self.model, &self.store);
                        for (name, value) in &bindings {
                            ctx.bind(name, value.clone()).map_err(RuntimeError::Eval)?;
                        }
                        Ok(Some(eval(result, &ctx).map_err(RuntimeError::Eval)?))
                    }
                }
            }
            n => Err(RuntimeError::Nondeterminism {
                class: class.to_string(),
                state,
                method: method.to_string(),
                count: n,
            }),
        }
    }

    fn exec_block(
        &mut self,
        block: &ActionBlock,
        env: &mut Env,
        this: ObjId,
        depth: u32,
    ) -> Result<Flow, RuntimeError> {
        for stmt in &block.statements {
            self.step()?;
            match stmt {
                Statement::Local { name, value, .. } => {
                    let v = self.eval_in_env(value, env)?;
                    env.declare(name, v);
                }
                Statement::Assign { target, value, .. } => {
                    let v = self.eval_in_env(value, env)?;
                    match &target.kind {
                        ExprKind::Name(name) => {
                            if !env.assign(name, v) {
                                return Err(RuntimeError::Eval(EvalError::UnboundName(
                                    name.clone(),
                                )));
                            }
                        }
                        ExprKind::Attr(base, attr) => {
                            let base_val = self.eval_in_env(base, env)?;
                            let id = match base_val {
                                Value::Obj(id) => id,
                                Value::Undefined => {
                                    return Err(RuntimeError::Eval(EvalError::NavUnset(
                                        attr.clone(),
                                    )))
                                }
                                other => {
                                    return Err(RuntimeError::Eval(EvalError::Internal(format!(
                                        "cannot assign `{attr}` on {other}"
                                    ))))
                                }
                            };
                            self.store
                                .get_mut(id)
                                .ok_or_else(|| {
                                    RuntimeError::Eval(EvalError::Internal(format!(
                                        "dangling object {id}"
                                    )))
                                })?
                                .slots
                                .insert(attr.clone(), v);
                        }
                        _ => {
                            return Err(RuntimeError::Eval(EvalError::Internal(
                                "invalid assignment target".to_string(),
                            )))
                        }
                    }
                }
                Statement::If {
                    condition,
                    then_block,
                    else_block,
                    ..
                } => {
                    let cond = match self.eval_in_env(condition, env)? {
                        Value::Bool(b) => b,
                        other => {
                            return Err(RuntimeError::Eval(EvalError::Internal(format!(
                                "condition evaluated to {other}"
                            ))))
                        }
                    };
                    let branch = if cond {
                        Some(then_block)
                    } else {
                        else_block.as_ref()
                    };
                    if let Some(branch) = branch {
                        env.push();
                        let flow = self.exec_block(branch, env, this, depth);
                        env.pop();
                        match flow? {
                            Flow::Continue => {}
                            ret => return Ok(ret),
                        }
                    }
                }
                Statement::Return { value, .. } => {
                    let v = self.eval_in_env(value, env)?;
                    return Ok(Flow::Return(v));
                }
                Statement::Call {
                    receiver,
                    method,
                    args,
                    ..
                } => {
                    let recv = match self.eval_in_env(receiver, env)? {
                        Value::Obj(id) => id,
                        Value::Undefined => {
                            return Err(RuntimeError::Eval(EvalError::NavUnset(method.clone())))
                        }
                        other => {
                            return Err(RuntimeError::Eval(EvalError::Internal(format!(
                                "cannot call `{method}` on {other}"
                            ))))
                        }
                    };
                    let mut values = Vec::with_capacity(args.len());
                    for arg in args {
                        values.push(self.eval_in_env(arg, env)?);
                    }
                    self.invoke_at(Caller::Obj(this), recv, method, values, depth + 1)?;
                }
            }
        }
        Ok(Flow::Continue)
    }

    fn eval_in_env(&self, expr: &Expr, env: &Env) -> Result<Value, RuntimeError> {
        let mut ctx = EvalContext::new(self.model, &self.store);
        for (name, value) in env.flatten() {
            if name == "self" {
                ctx.bind("self", value).map_err(RuntimeError::Eval)?;
            } else {
                ctx.bind(&name, value).map_err(RuntimeError::Eval)?;
            }
        }
        eval(expr, &ctx).map_err(RuntimeError::Eval)
    }
}
