//! Model-level test execution: instantiate the fixture, drive the run,
//! check expected interactions against the trace, match the oracle pattern
//! and evaluate oracle assertions.
//!
//! A test FAILs only on oracle or expectation mismatches; execution and
//! evaluation problems are ERRORs. Each test runs in a fresh store, so
//! suite order never influences verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Duration;

use crate::diag::{codes, Diagnostic};
use crate::eval::{eval, EvalContext, Value};
use crate::model::check::is_subclass_of;
use crate::model::{
    ConfigValue, Model, PatternConfiguration, SequenceDefinition, Step, TestCase, TestCategory,
};
use crate::runtime::{
    instantiate, Caller, CoverageLog, Engine, ExecBudget, ObjId, ObjectStore, TraceEvent,
};
use crate::syntax::project::glob_match;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailReason {
    StimulusMismatch {
        step: usize,
        expected: Value,
        actual: Option<Value>,
    },
    AssertFailed {
        step: usize,
    },
    ExpectationMismatch {
        index: usize,
        detail: String,
    },
    PatternUnmatched {
        pattern: String,
        explanation: String,
    },
    OracleAssertFailed {
        index: usize,
    },
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::StimulusMismatch {
                step,
                expected,
                actual,
            } => match actual {
                Some(v) => write!(f, "step {step} expected {expected} got {v}"),
                None => write!(f, "step {step} expected {expected} got nothing"),
            },
            FailReason::AssertFailed { step } => write!(f, "step {step} assertion failed"),
            FailReason::ExpectationMismatch { index, detail } => {
                write!(f, "expectation {index}: {detail}")
            }
            FailReason::PatternUnmatched {
                pattern,
                explanation,
            } => write!(f, "pattern {pattern}: {explanation}"),
            FailReason::OracleAssertFailed { index } => {
                write!(f, "oracle assertion {index} failed")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorReason {
    pub code: String,
    pub message: String,
    pub step: Option<usize>,
}

impl fmt::Display for ErrorReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(step) => write!(f, "{} at step {step}: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Vec<FailReason>),
    Error(ErrorReason),
}

impl Verdict {
    pub fn word(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail(_) => "FAIL",
            Verdict::Error(_) => "ERROR",
        }
    }

    /// Compact single-line detail for report lines; empty for PASS.
    pub fn detail(&self) -> String {
        match self {
            Verdict::Pass => String::new(),
            Verdict::Fail(reasons) => reasons
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join("; "),
            Verdict::Error(reason) => reason.to_string(),
        }
    }
}

/// Everything a single test run produces.
#[derive(Clone, Debug)]
pub struct TestRun {
    pub verdict: Verdict,
    pub trace: Vec<TraceEvent>,
    pub store: ObjectStore,
    pub coverage: CoverageLog,
}

fn error_verdict(code: &str, message: impl Into<String>, step: Option<usize>) -> Verdict {
    Verdict::Error(ErrorReason {
        code: code.to_string(),
        message: message.into(),
        step,
    })
}

/// Runs one test: fixture, driver steps in order, then post-run checks.
pub fn run_test(model: &Model, test: &TestCase) -> TestRun {
    let empty = TestRun {
        verdict: Verdict::Pass,
        trace: Vec::new(),
        store: ObjectStore::new(),
        coverage: CoverageLog::default(),
    };

    let fixture = match model.find_config(&test.fixture) {
        Some(f) => f,
        None => {
            return TestRun {
                verdict: error_verdict(
                    codes::E_UNKNOWN_FIXTURE,
                    format!("fixture `{}` not found", test.fixture),
                    None,
                ),
                ..empty
            }
        }
    };
    let driver = match model.find_sequence(&test.driver) {
        Some(d) => d,
        None => {
            return TestRun {
                verdict: error_verdict(
                    codes::E_UNKNOWN_DRIVER,
                    format!("driver `{}` not found", test.driver),
                    None,
                ),
                ..empty
            }
        }
    };

    let store = match instantiate(model, fixture) {
        Ok(s) => s,
        Err(e) => {
            return TestRun {
                verdict: error_verdict(e.code(), e.to_string(), None),
                ..empty
            }
        }
    };
    let mut engine = Engine::new(model, store, ExecBudget::default());

    // Driver phase. The first failed expectation or error stops the run.
    for (idx, step) in driver.steps.iter().enumerate() {
        let step_no = idx + 1;
        match step {
            Step::Stimulus {
                target,
                method,
                args,
                expect,
                ..
            } => {
                let target_id = match engine.store.by_name(target) {
                    Some(id) => id,
                    None => {
                        return finish(
                            engine,
                            error_verdict(
                                codes::E_UNKNOWN_OBJECT,
                                format!("object `{target}` not in fixture"),
                                Some(step_no),
                            ),
                        )
                    }
                };
                let values: Vec<Value> = args.iter().map(Value::from_literal).collect();
                match engine.invoke(Caller::Driver, target_id, method, values) {
                    Ok(result) => {
                        if let Some(lit) = expect {
                            let expected = Value::from_literal(lit);
                            if result.as_ref() != Some(&expected) {
                                return finish(
                                    engine,
                                    Verdict::Fail(vec![FailReason::StimulusMismatch {
                                        step: step_no,
                                        expected,
                                        actual: result,
                                    }]),
                                );
                            }
                        }
                    }
                    Err(e) => {
                        return finish(
                            engine,
                            error_verdict(e.code(), e.to_string(), Some(step_no)),
                        )
                    }
                }
            }
            Step::Assert { expr, .. } => {
                let mut ctx = EvalContext::new(model, &engine.store);
                ctx.bind_fixture_names();
                match eval(expr, &ctx) {
                    Ok(Value::Bool(true)) => {}
                    Ok(Value::Bool(false)) => {
                        return finish(
                            engine,
                            Verdict::Fail(vec![FailReason::AssertFailed { step: step_no }]),
                        )
                    }
                    Ok(other) => {
                        return finish(
                            engine,
                            error_verdict(
                                codes::E_EVAL,
                                format!("assertion evaluated to {other}"),
                                Some(step_no),
                            ),
                        )
                    }
                    Err(e) => {
                        return finish(
                            engine,
                            error_verdict(e.code(), e.to_string(), Some(step_no)),
                        )
                    }
                }
            }
            Step::ExpectMessage { .. } => {} // checked post-run against the trace
        }
    }

    // Post-run checks: expectations, then pattern, then oracle assertions.
    let mut fails: Vec<FailReason> = Vec::new();
    if let Err(fail) = match_expectations(driver, &engine.trace, &engine.store) {
        fails.push(fail);
    }

    if let Some(oracle) = &test.oracle {
        if let Some(pattern_name) = &oracle.pattern {
            let pattern = match model.find_pattern(pattern_name) {
                Some(p) => p,
                None => {
                    return finish(
                        engine,
                        error_verdict(
                            codes::E_UNKNOWN_PATTERN,
                            format!("pattern `{pattern_name}` not found"),
                            None,
                        ),
                    )
                }
            };
            let anchors: BTreeMap<String, ObjId> = engine
                .store
                .name_entries()
                .map(|(n, id)| (n.clone(), *id))
                .collect();
            match match_pattern(model, pattern, &engine.store, &anchors) {
                Ok(result) if result.matched => {}
                Ok(result) => fails.push(FailReason::PatternUnmatched {
                    pattern: pattern_name.clone(),
                    explanation: result
                        .first_failure
                        .unwrap_or_else(|| "no admissible mapping".to_string()),
                }),
                Err(d) => {
                    let msg = d.message.clone();
                    return finish(engine, error_verdict(d.code, msg, None));
                }
            }
        }
        for (idx, assertion) in oracle.assertions.iter().enumerate() {
            let mut ctx = EvalContext::new(model, &engine.store);
            ctx.bind_fixture_names();
            match eval(assertion, &ctx) {
                Ok(Value::Bool(true)) => {}
                Ok(Value::Bool(false)) => {
                    fails.push(FailReason::OracleAssertFailed { index: idx + 1 })
                }
                Ok(other) => {
                    return finish(
                        engine,
                        error_verdict(
                            codes::E_EVAL,
                            format!("oracle assertion evaluated to {other}"),
                            None,
                        ),
                    )
                }
                Err(e) => return finish(engine, error_verdict(e.code(), e.to_string(), None)),
            }
        }
    }

    let verdict = if fails.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(fails)
    };
    finish(engine, verdict)
}

fn finish(engine: Engine, verdict: Verdict) -> TestRun {
    TestRun {
        verdict,
        trace: engine.trace,
        store: engine.store,
        coverage: engine.coverage,
    }
}

/// Result of matching a pattern against a store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchResult {
    pub matched: bool,
    /// Pattern object name to store id; injective.
    pub witness: BTreeMap<String, ObjId>,
    pub first_failure: Option<String>,
}

/// Backtracking injective pattern match. Pattern objects are tried in
/// declaration order, candidates in ascending store id; the first witness
/// wins. Objects explicitly anchored, or named like a fixture object, bind
/// to that object.
pub fn match_pattern(
    model: &Model,
    pattern: &PatternConfiguration,
    store: &ObjectStore,
    anchors: &BTreeMap<String, ObjId>,
) -> Result<MatchResult, Diagnostic> {
    // Anchor resolution first: an explicit anchor must be present.
    let mut fixed: Vec<Option<ObjId>> = Vec::with_capacity(pattern.objects.len());
    for po in &pattern.objects {
        let name = &po.object.name;
        match anchors.get(name) {
            Some(id) => fixed.push(Some(*id)),
            None if po.anchored => {
                return Err(Diagnostic::error(
                    codes::E_ANCHOR_UNKNOWN,
                    po.object.pos.line,
                    po.object.pos.column,
                    format!("anchored object `{name}` has no fixture counterpart"),
                ))
            }
            None => fixed.push(None),
        }
    }

    let mut search = Search {
        model,
        pattern,
        store,
        fixed,
        witness: BTreeMap::new(),
        used: BTreeSet::new(),
        deepest: 0,
        deepest_reason: String::from("no candidates"),
    };
    if search.descend(0) {
        let witness = search.witness.clone();
        return Ok(MatchResult {
            matched: true,
            witness,
            first_failure: None,
        });
    }
    let failing = pattern
        .objects
        .get(search.deepest)
        .map(|po| po.object.name.clone())
        .unwrap_or_default();
    Ok(MatchResult {
        matched: false,
        witness: BTreeMap::new(),
        first_failure: Some(format!(
            "pattern object `{failing}`: {}",
            search.deepest_reason
        )),
    })
}

struct Search<'a> {
    model: &'a Model,
    pattern: &'a PatternConfiguration,
    store: &'a ObjectStore,
    fixed: Vec<Option<ObjId>>,
    witness: BTreeMap<String, ObjId>,
    used: BTreeSet<ObjId>,
    deepest: usize,
    deepest_reason: String,
}

impl<'a> Search<'a> {
    fn note(&mut self, depth: usize, reason: impl Into<String>) {
        if depth >= self.deepest {
            self.deepest = depth;
            self.deepest_reason = reason.into();
        }
    }

    fn descend(&mut self, depth: usize) -> bool {
        if depth == self.pattern.objects.len() {
            return self.check_links(depth);
        }
        let po = &self.pattern.objects[depth];
        let candidates: Vec<ObjId> = match self.fixed[depth] {
            Some(id) => vec![id],
            None => self.store.ids(),
        };
        for id in candidates {
            if self.used.contains(&id) {
                self.note(depth, "all candidates already bound elsewhere");
                continue;
            }
            if let Err(reason) = self.local_check(po, id) {
                self.note(depth, reason);
                continue;
            }
            self.witness.insert(po.object.name.clone(), id);
            self.used.insert(id);
            if self.descend(depth + 1) {
                return true;
            }
            self.witness.remove(&po.object.name);
            self.used.remove(&id);
        }
        false
    }

    /// Class conformance and literal attribute equality.
    fn local_check(&self, po: &crate::model::PatternObject, id: ObjId) -> Result<(), String> {
        let obj = self.store.get(id).ok_or("dangling candidate")?;
        if !is_subclass_of(self.model, &obj.class, &po.object.class_name) {
            return Err(format!(
                "candidate {id} has class `{}`, needs `{}`",
                obj.class, po.object.class_name
            ));
        }
        for a in &po.object.assignments {
            if let ConfigValue::Literal(lit) = &a.value {
                let expected = Value::from_literal(lit);
                match obj.slots.get(&a.attr) {
                    Some(actual) if *actual == expected => {}
                    Some(actual) => return Err(format!("candidate {id} has {}={actual}", a.attr)),
                    None => return Err(format!("candidate {id} lacks slot `{}`", a.attr)),
                }
            }
        }
        Ok(())
    }

    /// Reference and set constraints, validated on the complete witness:
    /// each specified link must equal the image of the referenced pattern
    /// objects (sets: image-set equality).
    fn check_links(&mut self, depth: usize) -> bool {
        for po in &self.pattern.objects {
            let id = self.witness[&po.object.name];
            let obj = self.store.get(id).expect("bound candidate");
            for a in &po.object.assignments {
                match &a.value {
                    ConfigValue::Literal(_) => {}
                    ConfigValue::Ref(name) => {
                        let expected = Value::Obj(self.witness[name]);
                        if obj.slots.get(&a.attr) != Some(&expected) {
                            self.note(
                                depth.saturating_sub(1),
                                format!(
                                    "link `{}` of `{}` does not map correctly",
                                    a.attr, po.object.name
                                ),
                            );
                            return false;
                        }
                    }
                    ConfigValue::Set(names) => {
                        let image: BTreeSet<ObjId> =
                            names.iter().map(|n| self.witness[n]).collect();
                        if obj.slots.get(&a.attr) != Some(&Value::Set(image)) {
                            self.note(
                                depth.saturating_sub(1),
                                format!(
                                    "set `{}` of `{}` does not map correctly",
                                    a.attr, po.object.name
                                ),
                            );
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Checks expected inter-object messages against the recorded trace.
/// DRIVER stimuli are excluded. Non-strict: expectations must embed as a
/// subsequence; strict: the filtered trace must equal them exactly.
pub fn match_expectations(
    sequence: &SequenceDefinition,
    trace: &[TraceEvent],
    store: &ObjectStore,
) -> Result<(), FailReason> {
    let expects: Vec<(String, String, String)> = sequence
        .steps
        .iter()
        .filter_map(|s| match s {
            Step::ExpectMessage {
                caller,
                callee,
                method,
                ..
            } => Some((caller.clone(), callee.clone(), method.clone())),
            _ => None,
        })
        .collect();

    let observed: Vec<(String, String, String)> = trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Call {
                caller: Caller::Obj(caller),
                callee,
                method,
                ..
            } => Some((
                store.name_of(*caller).unwrap_or("?").to_string(),
                store.name_of(*callee).unwrap_or("?").to_string(),
                method.clone(),
            )),
            _ => None,
        })
        .collect();

    let show = |m: &(String, String, String)| format!("{} -> {}: {}", m.0, m.1, m.2);

    if sequence.strict {
        for (i, (exp, obs)) in expects.iter().zip(observed.iter()).enumerate() {
            if exp != obs {
                return Err(FailReason::ExpectationMismatch {
                    index: i + 1,
                    detail: format!("expected `{}`, observed `{}`", show(exp), show(obs)),
                });
            }
        }
        if observed.len() > expects.len() {
            return Err(FailReason::ExpectationMismatch {
                index: expects.len() + 1,
                detail: format!("unexpected message `{}`", show(&observed[expects.len()])),
            });
        }
        if expects.len() > observed.len() {
            return Err(FailReason::ExpectationMismatch {
                index: observed.len() + 1,
                detail: format!("missing message `{}`", show(&expects[observed.len()])),
            });
        }
        return Ok(());
    }

    let mut cursor = 0usize;
    for (i, exp) in expects.iter().enumerate() {
        match observed[cursor..].iter().position(|obs| obs == exp) {
            Some(offset) => cursor += offset + 1,
            None => {
                return Err(FailReason::ExpectationMismatch {
                    index: i + 1,
                    detail: format!("message `{}` not observed in order", show(exp)),
                })
            }
        }
    }
    Ok(())
}

/// Which tests a suite run includes.
#[derive(Clone, Debug, Default)]
pub struct SuiteFilter {
    pub categories: Option<BTreeSet<TestCategory>>,
    pub name_glob: Option<String>,
}

impl SuiteFilter {
    pub fn category(cat: TestCategory) -> Self {
        SuiteFilter {
            categories: Some([cat].into_iter().collect()),
            name_glob: None,
        }
    }

    pub fn matches(&self, test: &TestCase) -> bool {
        if let Some(cats) = &self.categories {
            if !cats.contains(&test.category) {
                return false;
            }
        }
        if let Some(glob) = &self.name_glob {
            if !glob_match(glob, &test.name) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestResult {
    pub name: String,
    pub category: TestCategory,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartCoverage {
    pub owner: String,
    pub states_entered: Vec<String>,
    pub states_total: usize,
    pub transitions_fired: Vec<usize>,
    pub transitions_total: usize,
}

/// Aggregated outcome of a suite run.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub results: Vec<TestResult>,
    pub coverage: Vec<ChartCoverage>,
    pub wall: Duration,
}

impl SuiteReport {
    pub fn total(&self) -> usize {
        self.results.len()
    }

    pub fn count(&self, word: &str) -> usize {
        self.results
            .iter()
            .filter(|r| r.verdict.word() == word)
            .count()
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn category_counts(&self, cat: TestCategory) -> (usize, usize) {
        let in_cat: Vec<&TestResult> = self.results.iter().filter(|r| r.category == cat).collect();
        let passed = in_cat
            .iter()
            .filter(|r| r.verdict == Verdict::Pass)
            .count();
        (passed, in_cat.len())
    }

    pub fn verdict_of(&self, test: &str) -> Option<&Verdict> {
        self.results
            .iter()
            .find(|r| r.name == test)
            .map(|r| &r.verdict)
    }

    /// Per-test verdict equality, the operational notion of preserved
    /// behavior used by the refactoring engine.
    pub fn verdicts_equal(&self, other: &SuiteReport) -> bool {
        if self.results.len() != other.results.len() {
            return false;
        }
        self.results.iter().zip(&other.results).all(|(a, b)| {
            a.name == b.name && a.category == b.category && a.verdict.word() == b.verdict.word()
        })
    }

    /// Machine-readable lines; deterministic (no timing).
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let detail = r.verdict.detail();
            if detail.is_empty() {
                out.push_str(&format!(
                    "TEST {} {} {}\n",
                    r.name,
                    r.category,
                    r.verdict.word()
                ));
            } else {
                out.push_str(&format!(
                    "TEST {} {} {} [{detail}]\n",
                    r.name,
                    r.category,
                    r.verdict.word()
                ));
            }
        }
        for c in &self.coverage {
            let states = if c.states_entered.is_empty() {
                "-".to_string()
            } else {
                c.states_entered.join(",")
            };
            let transitions = if c.transitions_fired.is_empty() {
                "-".to_string()
            } else {
                c.transitions_fired
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!(
                "COVERAGE {} states {}/{} {states} transitions {}/{} {transitions}\n",
                c.owner,
                c.states_entered.len(),
                c.states_total,
                c.transitions_fired.len(),
                c.transitions_total,
            ));
        }
        let (up, ut) = self.category_counts(TestCategory::Unit);
        let (ip, it) = self.category_counts(TestCategory::Integration);
        let (ap, at) = self.category_counts(TestCategory::Acceptance);
        out.push_str(&format!(
            "SUITE total {} pass {} fail {} error {} unit {up}/{ut} integration {ip}/{it} acceptance {ap}/{at}\n",
            self.total(),
            self.count("PASS"),
            self.count("FAIL"),
            self.count("ERROR"),
        ));
        out
    }

    /// Human rendering: the machine lines plus wall time.
    pub fn render_human(&self) -> String {
        format!(
            "{}elapsed {} ms\n",
            self.render_machine(),
            self.wall.as_millis()
        )
    }
}

/// Runs every matching test in document order, each in a fresh store, and
/// aggregates verdicts and statechart coverage.
pub fn run_suite(model: &Model, filter: &SuiteFilter) -> SuiteReport {
    let start = std::time::Instant::now();
    let mut results = Vec::new();
    let mut coverage = CoverageLog::default();
    for test in &model.tests {
        if !filter.matches(test) {
            continue;
        }
        let run = run_test(model, test);
        coverage.merge(&run.coverage);
        results.push(TestResult {
            name: test.name.clone(),
            category: test.category,
            verdict: run.verdict,
        });
    }
    let chart_coverage = model
        .statecharts
        .iter()
        .map(|chart| {
            let states_entered: Vec<String> = coverage
                .states_entered
                .get(&chart.owner)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default();
            let transitions_fired: Vec<usize> = coverage
                .transitions_fired
                .get(&chart.owner)
                .map(|s| s.iter().copied().collect())
                .unwrap_or_default();
            ChartCoverage {
                owner: chart.owner.clone(),
                states_entered,
                states_total: chart.states.len(),
                transitions_fired,
                transitions_total: chart.transitions.len(),
            }
        })
        .collect();
    SuiteReport {
        results,
        coverage: chart_coverage,
        wall: start.elapsed(),
    }
}
