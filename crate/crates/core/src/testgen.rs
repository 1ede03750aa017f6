//! Statechart test derivation: concrete-state exploration plus coverage
//! goals (states, transitions, bounded paths).
//!
//! Exploration runs breadth-first over whole-store snapshots, so two
//! configurations only merge when every object agrees. Stimuli come from
//! finite parameter domains; anything the domains cannot reach is reported
//! as uncoverable rather than silently dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::diag::{codes, Diagnostic};
use crate::eval::Value;
use crate::model::check::{effective_chart, lookup_method};
use crate::model::{
    BinOp, Expr, ExprKind, Literal, Model, ObjectConfiguration, ObjectDecl, Oracle, Origin,
    Pos, SequenceDefinition, Statechart, Step, TestCase, TestCategory, TypeRef,
};
use crate::runtime::{instantiate, Caller, Engine, ExecBudget};
use crate::syntax::printer::print_model;

pub const NODE_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageKind {
    State,
    Transition,
    Path,
}

impl CoverageKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "state" => Some(CoverageKind::State),
            "transition" => Some(CoverageKind::Transition),
            "path" => Some(CoverageKind::Path),
            _ => None,
        }
    }
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageKind::State => write!(f, "state"),
            CoverageKind::Transition => write!(f, "transition"),
            CoverageKind::Path => write!(f, "path"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CoverageGoal {
    pub kind: CoverageKind,
    /// Path length bound; also scales the exploration depth. At least 1.
    pub k: u32,
}

impl CoverageGoal {
    pub fn new(kind: CoverageKind, k: u32) -> Self {
        CoverageGoal { kind, k: k.max(1) }
    }
}

/// Finite stimulus domains per parameter type. Booleans are `{false,
/// true}`; integers span `[-bound, bound]`; strings are the literals
/// harvested from the chart's guards plus `""`.
#[derive(Clone, Copy, Debug)]
pub struct ParamDomain {
    pub int_bound: i64,
}

impl Default for ParamDomain {
    fn default() -> Self {
        ParamDomain { int_bound: 8 }
    }
}

impl ParamDomain {
    fn values_for(&self, ty: &TypeRef, strings: &[String]) -> Option<Vec<Literal>> {
        match ty {
            TypeRef::Bool => Some(vec![Literal::Bool(false), Literal::Bool(true)]),
            TypeRef::Int => Some((-self.int_bound..=self.int_bound).map(Literal::Int).collect()),
            TypeRef::String => Some(strings.iter().cloned().map(Literal::Str).collect()),
            TypeRef::Class(_) | TypeRef::SetOf(_) => None,
        }
    }
}

/// String literals appearing in any guard of the chart, `""` first, then
/// in document order without duplicates.
pub fn guard_string_literals(chart: &Statechart) -> Vec<String> {
    let mut out = vec![String::new()];
    for trans in &chart.transitions {
        if let Some(guard) = &trans.guard {
            collect_strings(guard, &mut out);
        }
    }
    out
}

fn collect_strings(expr: &Expr, out: &mut Vec<String>) {
    match &expr.kind {
        ExprKind::StrLit(s) => {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        ExprKind::Attr(e, _) | ExprKind::StateOf(e) | ExprKind::Not(e) | ExprKind::Size(e) => {
            collect_strings(e, out)
        }
        ExprKind::Binary(_, l, r) | ExprKind::Includes(l, r) => {
            collect_strings(l, out);
            collect_strings(r, out);
        }
        ExprKind::ForAll(e, _, b) | ExprKind::Exists(e, _, b) => {
            collect_strings(e, out);
            collect_strings(b, out);
        }
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StimulusCall {
    pub method: String,
    pub args: Vec<Literal>,
}

impl fmt::Display for StimulusCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(Literal::to_string).collect();
        write!(f, "{}({})", self.method, args.join(", "))
    }
}

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub key: String,
    pub state: String,
    pub depth: u32,
    /// Shortest stimulus path from the initial configuration.
    pub path: Vec<StimulusCall>,
}

#[derive(Clone, Debug)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub stimulus: StimulusCall,
    /// Index into the chart's transition list.
    pub transition: usize,
    /// Shortest stimulus path that ends by taking this edge.
    pub path: Vec<StimulusCall>,
}

#[derive(Clone, Debug, Default)]
pub struct ReachabilityGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// True when the node cap was hit and the graph is partial.
    pub explosion: bool,
    /// Triggers whose parameters have no finite domain.
    pub skipped_triggers: Vec<String>,
}

impl ReachabilityGraph {
    pub fn first_node_in_state(&self, state: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.state == state)
    }

    pub fn first_edge_firing(&self, transition: usize) -> Option<&GraphEdge> {
        self.edges.iter().find(|e| e.transition == transition)
    }
}

/// The default seed: one object of the chart's class, all slots defaulted.
pub fn auto_seed(chart: &Statechart) -> ObjectConfiguration {
    ObjectConfiguration {
        name: format!("gen_{}_fix", chart.owner),
        objects: vec![ObjectDecl {
            name: "it".to_string(),
            class_name: chart.owner.clone(),
            assignments: Vec::new(),
            pos: Pos::default(),
        }],
        origin: Origin::default(),
    }
}

fn subject_of<'a>(
    model: &Model,
    chart: &Statechart,
    seed: &'a ObjectConfiguration,
) -> Result<&'a ObjectDecl, Diagnostic> {
    let mut subjects = seed.objects.iter().filter(|o| {
        effective_chart(model, &o.class_name).map(|c| c.owner.as_str()) == Some(chart.owner.as_str())
    });
    match (subjects.next(), subjects.next()) {
        (Some(obj), None) => Ok(obj),
        (None, _) => Err(Diagnostic::error(
            codes::E_UNKNOWN_OBJECT,
            0,
            0,
            format!("seed configuration `{}` has no object governed by the chart of `{}`",
                seed.name, chart.owner),
        )),
        (Some(_), Some(_)) => Err(Diagnostic::error(
            codes::E_DUP_NAME,
            0,
            0,
            format!("seed configuration `{}` has more than one object of `{}`",
                seed.name, chart.owner),
        )),
    }
}

/// Breadth-first exploration of concrete configurations. Nodes are whole
/// store snapshots; edges are accepted stimuli. Truncated at depth
/// `k * |transitions|` and at [`NODE_CAP`] nodes.
pub fn explore(
    model: &Model,
    chart: &Statechart,
    seed: Option<&ObjectConfiguration>,
    k: u32,
    domain: &ParamDomain,
) -> Result<ReachabilityGraph, Diagnostic> {
    let auto;
    let seed = match seed {
        Some(s) => s,
        None => {
            auto = auto_seed(chart);
            &auto
        }
    };
    let subject = subject_of(model, chart, seed)?.name.clone();
    let initial_store = instantiate(model, seed).map_err(|e| {
        Diagnostic::error(codes::E_ABSTRACT_INSTANTIATION, 0, 0, e.to_string())
    })?;

    let strings = guard_string_literals(chart);
    let mut triggers: Vec<&str> = Vec::new();
    for t in &chart.transitions {
        if !triggers.contains(&t.trigger.as_str()) {
            triggers.push(&t.trigger);
        }
    }

    // Precompute the stimulus menu; triggers without finite domains are
    // recorded and reported by `derive`.
    let mut menu: Vec<StimulusCall> = Vec::new();
    let mut skipped: Vec<String> = Vec::new();
    for trigger in &triggers {
        let Some((_, def)) = lookup_method(model, &chart.owner, trigger) else {
            continue;
        };
        let mut domains: Vec<Vec<Literal>> = Vec::new();
        let mut enumerable = true;
        for p in &def.params {
            match domain.values_for(&p.ty, &strings) {
                Some(values) => domains.push(values),
                None => {
                    enumerable = false;
                    break;
                }
            }
        }
        if !enumerable {
            skipped.push(trigger.to_string());
            continue;
        }
        for combo in cartesian(&domains) {
            menu.push(StimulusCall {
                method: trigger.to_string(),
                args: combo,
            });
        }
    }

    let depth_limit = k * chart.transitions.len().max(1) as u32;
    let mut graph = ReachabilityGraph {
        skipped_triggers: skipped,
        ..ReachabilityGraph::default()
    };
    let mut key_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut stores: Vec<crate::runtime::ObjectStore> = Vec::new();

    let initial_state = initial_store
        .by_name(&subject)
        .and_then(|id| initial_store.get(id))
        .and_then(|o| o.current_state.clone())
        .unwrap_or_else(|| chart.initial.clone());
    let key = initial_store.snapshot();
    key_index.insert(key.clone(), 0);
    graph.nodes.push(GraphNode {
        key,
        state: initial_state,
        depth: 0,
        path: Vec::new(),
    });
    stores.push(initial_store);

    let mut cursor = 0usize;
    'bfs: while cursor < graph.nodes.len() {
        let node_idx = cursor;
        cursor += 1;
        if graph.nodes[node_idx].depth >= depth_limit {
            continue;
        }
        for stimulus in &menu {
            let base = stores[node_idx].clone();
            let subject_id = match base.by_name(&subject) {
                Some(id) => id,
                None => continue,
            };
            let mut engine = Engine::new(model, base, ExecBudget::default());
            let args: Vec<Value> = stimulus.args.iter().map(Value::from_literal).collect();
            let accepted = engine
                .invoke(Caller::Driver, subject_id, &stimulus.method, args)
                .is_ok();
            if !accepted {
                continue;
            }
            let Some(&(_, fired)) = engine.fired_log.first() else {
                continue;
            };
            let key = engine.store.snapshot();
            let to = match key_index.get(&key) {
                Some(&idx) => idx,
                None => {
                    if graph.nodes.len() >= NODE_CAP {
                        graph.explosion = true;
                        break 'bfs;
                    }
                    let idx = graph.nodes.len();
                    let state = engine
                        .store
                        .by_name(&subject)
                        .and_then(|id| engine.store.get(id))
                        .and_then(|o| o.current_state.clone())
                        .unwrap_or_default();
                    let mut path = graph.nodes[node_idx].path.clone();
                    path.push(stimulus.clone());
                    graph.nodes.push(GraphNode {
                        key: key.clone(),
                        state,
                        depth: graph.nodes[node_idx].depth + 1,
                        path,
                    });
                    stores.push(engine.store.clone());
                    key_index.insert(key, idx);
                    idx
                }
            };
            let mut path = graph.nodes[node_idx].path.clone();
            path.push(stimulus.clone());
            graph.edges.push(GraphEdge {
                from: node_idx,
                to,
                stimulus: stimulus.clone(),
                transition: fired,
                path,
            });
        }
    }
    Ok(graph)
}

fn cartesian(domains: &[Vec<Literal>]) -> Vec<Vec<Literal>> {
    let mut out: Vec<Vec<Literal>> = vec![Vec::new()];
    for domain in domains {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for prefix in &out {
            for value in domain {
                let mut row = prefix.clone();
                row.push(value.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoalElement {
    State(String),
    Transition(usize),
    Path(Vec<usize>),
}

impl fmt::Display for GoalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalElement::State(s) => write!(f, "state {s}"),
            GoalElement::Transition(i) => write!(f, "transition {i}"),
            GoalElement::Path(p) => {
                let steps: Vec<String> = p.iter().map(|i| i.to_string()).collect();
                write!(f, "path {}", steps.join("-"))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedTest {
    pub name: String,
    pub goal: GoalElement,
    pub stimuli: Vec<StimulusCall>,
    pub expected_state: String,
    pub coverable: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DeriveOutcome {
    pub tests: Vec<GeneratedTest>,
    pub graph: ReachabilityGraph,
    /// Concrete-syntax block for the `<chart>_gen.amw` file.
    pub emitted: String,
}

/// Derives a test per goal element. Coverable goals carry a replayable
/// stimulus list; everything else is reported with a reason.
pub fn derive(
    model: &Model,
    chart: &Statechart,
    goal: CoverageGoal,
    seed: Option<&ObjectConfiguration>,
    domain: &ParamDomain,
) -> Result<DeriveOutcome, Diagnostic> {
    let auto;
    let seed = match seed {
        Some(s) => s,
        None => {
            auto = auto_seed(chart);
            &auto
        }
    };
    let subject = subject_of(model, chart, seed)?.name.clone();
    let graph = explore(model, chart, Some(seed), goal.k, domain)?;

    let mut tests: Vec<GeneratedTest> = Vec::new();
    match goal.kind {
        CoverageKind::State => {
            for state in &chart.states {
                let name = format!("gen_{}_state_{state}", chart.owner);
                match graph.first_node_in_state(state) {
                    Some(node) => tests.push(GeneratedTest {
                        name,
                        goal: GoalElement::State(state.clone()),
                        stimuli: node.path.clone(),
                        expected_state: state.clone(),
                        coverable: true,
                        reason: None,
                    }),
                    None => tests.push(GeneratedTest {
                        name,
                        goal: GoalElement::State(state.clone()),
                        stimuli: Vec::new(),
                        expected_state: state.clone(),
                        coverable: false,
                        reason: Some("state not reached within explored bounds".to_string()),
                    }),
                }
            }
        }
        CoverageKind::Transition => {
            for (idx, trans) in chart.transitions.iter().enumerate() {
                let name = format!("gen_{}_trans_{idx}", chart.owner);
                match graph.first_edge_firing(idx) {
                    Some(edge) => tests.push(GeneratedTest {
                        name,
                        goal: GoalElement::Transition(idx),
                        stimuli: edge.path.clone(),
                        expected_state: trans.target.clone(),
                        coverable: true,
                        reason: None,
                    }),
                    None => {
                        let reason = if graph.skipped_triggers.contains(&trans.trigger) {
                            format!("trigger `{}` has parameters outside the finite domains", trans.trigger)
                        } else {
                            "no enabling stimulus found within explored bounds".to_string()
                        };
                        tests.push(GeneratedTest {
                            name,
                            goal: GoalElement::Transition(idx),
                            stimuli: Vec::new(),
                            expected_state: trans.target.clone(),
                            coverable: false,
                            reason: Some(reason),
                        });
                    }
                }
            }
        }
        CoverageKind::Path => {
            let paths = chart_paths(chart, goal.k);
            for (n, path) in paths.iter().enumerate() {
                let name = format!("gen_{}_path_{}", chart.owner, n + 1);
                let expected = chart.transitions[*path.last().expect("paths are non-empty")]
                    .target
                    .clone();
                match realize_path(&graph, path) {
                    Some(stimuli) => tests.push(GeneratedTest {
                        name,
                        goal: GoalElement::Path(path.clone()),
                        stimuli,
                        expected_state: expected,
                        coverable: true,
                        reason: None,
                    }),
                    None => tests.push(GeneratedTest {
                        name,
                        goal: GoalElement::Path(path.clone()),
                        stimuli: Vec::new(),
                        expected_state: expected,
                        coverable: false,
                        reason: Some("no stimulus realization within explored bounds".to_string()),
                    }),
                }
            }
        }
    }

    let emitted = emit(chart, seed, &subject, &tests);
    Ok(DeriveOutcome {
        tests,
        graph,
        emitted,
    })
}

/// Chart-level paths from the initial state: at most `k` edges, each
/// transition used at most twice (loop-free-extended).
fn chart_paths(chart: &Statechart, k: u32) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut usage = vec![0u8; chart.transitions.len()];
    let mut current = Vec::new();
    fn rec(
        chart: &Statechart,
        state: &str,
        k: u32,
        usage: &mut Vec<u8>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() as u32 >= k {
            return;
        }
        for (idx, trans) in chart.transitions.iter().enumerate() {
            if trans.source != state || usage[idx] >= 2 {
                continue;
            }
            usage[idx] += 1;
            current.push(idx);
            out.push(current.clone());
            rec(chart, &trans.target, k, usage, current, out);
            current.pop();
            usage[idx] -= 1;
        }
    }
    rec(chart, &chart.initial, k, &mut usage, &mut current, &mut out);
    out
}

/// Finds stimuli that drive the explored graph along the given transition
/// sequence, backtracking over argument choices.
fn realize_path(graph: &ReachabilityGraph, path: &[usize]) -> Option<Vec<StimulusCall>> {
    fn rec(
        graph: &ReachabilityGraph,
        node: usize,
        rest: &[usize],
        acc: &mut Vec<StimulusCall>,
    ) -> bool {
        let Some((&next, tail)) = rest.split_first() else {
            return true;
        };
        for edge in graph.edges.iter().filter(|e| e.from == node && e.transition == next) {
            acc.push(edge.stimulus.clone());
            if rec(graph, edge.to, tail, acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    if graph.nodes.is_empty() {
        return None;
    }
    let mut acc = Vec::new();
    rec(graph, 0, path, &mut acc).then_some(acc)
}

/// Renders fixture, drivers and tests for the coverable goals, plus one
/// comment line per uncoverable goal.
fn emit(
    chart: &Statechart,
    seed: &ObjectConfiguration,
    subject: &str,
    tests: &[GeneratedTest],
) -> String {
    let fixture_name = format!("gen_{}_fix", chart.owner);
    let mut mini = Model::named("generated");
    let mut seq: u32 = 0;
    let mut next_seq = || {
        seq += 1;
        seq
    };

    let mut fixture = seed.clone();
    fixture.name = fixture_name.clone();
    fixture.origin = Origin {
        path: None,
        seq: next_seq(),
        pos: Pos::default(),
    };
    mini.configs.push(fixture);

    for test in tests.iter().filter(|t| t.coverable) {
        let driver_name = format!("{}_seq", test.name);
        let steps: Vec<Step> = test
            .stimuli
            .iter()
            .map(|s| Step::Stimulus {
                target: subject.to_string(),
                method: s.method.clone(),
                args: s.args.clone(),
                expect: None,
                pos: Pos::default(),
            })
            .collect();
        mini.sequences.push(SequenceDefinition {
            name: driver_name.clone(),
            strict: false,
            steps,
            origin: Origin {
                path: None,
                seq: next_seq(),
                pos: Pos::default(),
            },
        });
        let assert_state = Expr::new(
            ExprKind::Binary(
                BinOp::Eq,
                Box::new(Expr::new(
                    ExprKind::StateOf(Box::new(Expr::new(
                        ExprKind::Name(subject.to_string()),
                        Pos::default(),
                    ))),
                    Pos::default(),
                )),
                Box::new(Expr::new(
                    ExprKind::StrLit(test.expected_state.clone()),
                    Pos::default(),
                )),
            ),
            Pos::default(),
        );
        mini.tests.push(TestCase {
            name: test.name.clone(),
            category: TestCategory::Unit,
            fixture: fixture_name.clone(),
            driver: driver_name,
            oracle: Some(Oracle {
                pattern: None,
                assertions: vec![assert_state],
            }),
            origin: Origin {
                path: None,
                seq: next_seq(),
                pos: Pos::default(),
            },
        });
    }

    let mut out = print_model(&mini);
    let uncoverable: Vec<&GeneratedTest> = tests.iter().filter(|t| !t.coverable).collect();
    if !uncoverable.is_empty() {
        out.push('\n');
        for t in &uncoverable {
            out.push_str(&format!(
                "// uncoverable {}: {}\n",
                t.goal,
                t.reason.as_deref().unwrap_or("unreachable")
            ));
        }
    }
    out
}

pub const GEN_BEGIN: &str = "// GEN-BEGIN";
pub const GEN_END: &str = "// GEN-END";

/// Writes (or rewrites) `<owner>_gen.amw` in the project directory,
/// replacing only the marked region and leaving user content alone.
pub fn write_gen_file(dir: &Path, chart_owner: &str, emitted: &str) -> io::Result<PathBuf> {
    let path = dir.join(format!("{chart_owner}_gen.amw"));
    let block = format!("{GEN_BEGIN}\n{emitted}{GEN_END}\n");
    let content = if path.exists() {
        let existing = fs::read_to_string(&path)?;
        match (existing.find(GEN_BEGIN), existing.find(GEN_END)) {
            (Some(begin), Some(end)) if end >= begin => {
                let after = existing[end..]
                    .find('\n')
                    .map(|i| end + i + 1)
                    .unwrap_or(existing.len());
                format!("{}{}{}", &existing[..begin], block, &existing[after..])
            }
            _ => format!("{existing}\n{block}"),
        }
    } else {
        block
    };
    let tmp = path.with_extension("amw.tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// One report line per goal: `GOAL <element> covered|uncoverable [reason]`.
pub fn render_goals(tests: &[GeneratedTest]) -> String {
    let mut out = String::new();
    for t in tests {
        if t.coverable {
            out.push_str(&format!("GOAL {} covered {}\n", t.goal, t.name));
        } else {
            out.push_str(&format!(
                "GOAL {} uncoverable [{}]\n",
                t.goal,
                t.reason.as_deref().unwrap_or("unreachable")
            ));
        }
    }
    out
}
