//! Acceptance suite: the binding exit criteria of the workbench, one test
//! per criterion, each printing a single pass/fail line and enforcing its
//! runtime bound. AMW_SEED fixes every randomized run.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use amw_core::diag::codes;
use amw_core::eval::{eval, EvalContext};
use amw_core::model::{Literal, Model, TypeRef};
use amw_core::refactor::{
    apply, rule_from_args, verify_preservation, RefactoringRequest,
};
use amw_core::syntax::parser::parse_source;
use amw_core::syntax::printer::print_model;
use amw_core::testgen::{derive, CoverageGoal, CoverageKind, GoalElement, ParamDomain};
use amw_core::testkit::{match_pattern, run_suite, SuiteFilter};
use amw_core::TestCategory;

use common::brute::{brute_match, check_witness, BruteOutcome};
use common::gen::{
    env_from_store, eval_world, gen_expr, gen_match_case, gen_store, gen_wellformed_model, rng,
    seed_from_env, ExprScope,
};
use common::naive_eval::naive_eval;
use common::{assert_golden, load_sample, sample, samples_dir};

const DEFAULT_SEED: u64 = 20260809;

fn finish(criterion: u32, name: &str, start: Instant, bound: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < bound,
        "criterion {criterion} exceeded its bound: {elapsed:?} >= {bound:?}"
    );
    println!("ACCEPTANCE {criterion} {name}: PASS ({} ms)", elapsed.as_millis());
}

/// Every `.amw` file shipped under samples/, sorted for determinism.
fn corpus_files() -> Vec<std::path::PathBuf> {
    fn walk(dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .expect("samples readable")
            .map(|e| e.expect("entry").path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out);
            } else if path.extension().and_then(|e| e.to_str()) == Some("amw") {
                out.push(path);
            }
        }
    }
    let mut out = Vec::new();
    walk(&samples_dir(), &mut out);
    out
}

fn roundtrip_once(model: &Model) -> (bool, bool) {
    let printed = print_model(model);
    let reparsed = parse_source(&printed).expect("canonical print reparses");
    let roundtrip = &reparsed == model;
    let fixpoint = print_model(&reparsed) == printed;
    (roundtrip, fixpoint)
}

#[test]
fn criterion_1_roundtrip_law() {
    let start = Instant::now();
    let files = corpus_files();
    assert!(
        files.len() >= 20,
        "the shipped corpus must hold at least 20 models, found {}",
        files.len()
    );
    for path in &files {
        let text = std::fs::read_to_string(path).expect("readable");
        let model = parse_source(&text)
            .unwrap_or_else(|e| panic!("{} does not parse: {}", path.display(), e[0]));
        let (roundtrip, fixpoint) = roundtrip_once(&model);
        assert!(roundtrip, "round trip failed for {}", path.display());
        assert!(fixpoint, "fmt not idempotent for {}", path.display());
    }

    let mut r = rng(seed_from_env(DEFAULT_SEED));
    for i in 0..500 {
        let model = gen_wellformed_model(&mut r);
        debug_assert!(amw_core::check_wellformed(&model).is_empty());
        let (roundtrip, fixpoint) = roundtrip_once(&model);
        assert!(roundtrip, "round trip failed for random model {i}:\n{}", print_model(&model));
        assert!(fixpoint, "fmt not idempotent for random model {i}");
    }
    finish(1, "round-trip law", start, Duration::from_secs(10));
}

#[test]
fn criterion_2_ocl_oracle_equivalence() {
    let start = Instant::now();
    let world = eval_world();
    let mut r = rng(seed_from_env(DEFAULT_SEED).wrapping_add(1));
    let mut errors = 0usize;
    let mut non_bool = 0usize;
    for i in 0..500 {
        let store = gen_store(&mut r, &world, 6);
        let mut scope = ExprScope::from_store(&store);
        let ty = match i % 4 {
            0 => TypeRef::Int,
            1 => TypeRef::String,
            _ => TypeRef::Bool,
        };
        if ty != TypeRef::Bool {
            non_bool += 1;
        }
        let expr = gen_expr(&mut r, &mut scope, &ty, 5);
        let mut ctx = EvalContext::new(&world, &store);
        ctx.bind_fixture_names();
        let main = eval(&expr, &ctx).map_err(|e| e.code());
        let reference = naive_eval(&expr, &world, &store, &env_from_store(&store));
        if main.is_err() {
            errors += 1;
        }
        assert_eq!(
            main, reference,
            "case {i}: evaluators disagree on {}",
            amw_core::syntax::printer::print_expr(&expr)
        );
    }
    assert!(errors > 0, "error outcomes must be exercised");
    assert!(non_bool > 0, "non-boolean expressions must be exercised");
    finish(2, "evaluator equals naive reference", start, Duration::from_secs(10));
}

#[test]
fn criterion_3_pattern_match_equivalence() {
    let start = Instant::now();
    let world = eval_world();
    let mut r = rng(seed_from_env(DEFAULT_SEED).wrapping_add(2));
    let mut matched = 0usize;
    let mut unmatched = 0usize;
    let mut anchor_errors = 0usize;
    for i in 0..200 {
        let (pattern, store) = gen_match_case(&mut r, &world);
        let anchors: BTreeMap<String, amw_core::ObjId> = store
            .name_entries()
            .map(|(n, id)| (n.clone(), *id))
            .collect();
        let implementation = match_pattern(&world, &pattern, &store, &anchors);
        let oracle = brute_match(&world, &pattern, &store, &anchors);
        match (implementation, oracle) {
            (Err(diag), BruteOutcome::AnchorUnknown(name)) => {
                anchor_errors += 1;
                assert_eq!(diag.code, codes::E_ANCHOR_UNKNOWN);
                assert!(diag.message.contains(&name), "case {i}");
            }
            (Ok(result), BruteOutcome::Matched(witness)) => {
                matched += 1;
                assert!(result.matched, "case {i}: oracle matched, implementation did not");
                assert_eq!(result.witness, witness, "case {i}: first witness differs");
                assert!(
                    check_witness(&world, &pattern, &store, &result.witness),
                    "case {i}: witness fails the condition re-check"
                );
            }
            (Ok(result), BruteOutcome::Unmatched) => {
                unmatched += 1;
                assert!(!result.matched, "case {i}: implementation matched, oracle did not");
                assert!(result.first_failure.is_some(), "unmatched cases carry an explanation");
            }
            (implementation, _) => {
                panic!("case {i}: outcome kinds diverge: {implementation:?}");
            }
        }
    }
    assert!(matched >= 20, "matchable cases must be exercised, saw {matched}");
    assert!(unmatched >= 20, "unmatchable cases must be exercised, saw {unmatched}");
    let _ = anchor_errors;
    finish(3, "pattern matcher equals exhaustive oracle", start, Duration::from_secs(10));
}

fn request(rule: &str, args: &[&str]) -> RefactoringRequest {
    RefactoringRequest::new(rule_from_args(rule, args).expect("valid rule"))
}

fn with_default(rule: &str, args: &[&str], default: Literal) -> RefactoringRequest {
    let mut req = request(rule, args);
    req.default_value = Some(default);
    req
}

#[test]
fn criterion_4_pull_up_behavior_with_goldens() {
    let start = Instant::now();

    // Rejected exactly when a sibling declares a clashing attribute.
    let clash = load_sample("hotel_clash");
    let req = with_default("pull_up_attribute", &["Person", "passwd"], Literal::Str(String::new()));
    let report = apply(&clash, &req);
    assert!(!report.applied);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].code, codes::E_NAME_CLASH);
    assert_eq!(report.violations[0].subject, "Guest.passwd");
    assert_golden("refactor_pull_up_attr_clash.txt", &report.render_machine());

    // Otherwise applied, with affected glass-box ODs gaining the value.
    let hotel = load_sample("hotel");
    let report = apply(&hotel, &req);
    assert!(report.applied);
    let after = report.model_after.as_ref().expect("applied");
    let fix = after.find_config("loginFix").expect("present");
    let root = fix.objects.iter().find(|o| o.name == "root").expect("present");
    assert!(
        root.assignments
            .iter()
            .any(|a| a.attr == "passwd" && a.value.to_string() == "\"\""),
        "affected OD gains the supplied concrete value"
    );
    let preservation = verify_preservation(&hotel, after);
    assert!(preservation.preserved);
    assert_golden(
        "refactor_pull_up_attr_hotel.txt",
        &format!("{}{}", report.render_machine(), preservation.render_machine()),
    );
    assert_golden("hotel_after_pull_up.amw", &print_model(after));

    // Unify is rejected while the body still reads a subclass-only attribute.
    let hm = load_sample("hotel_methods");
    let unify = apply(&hm, &request("pull_up_method", &["Person", "checkPasswd", "unify"]));
    assert!(!unify.applied);
    assert!(unify
        .violations
        .iter()
        .any(|v| v.code == codes::E_SUBCLASS_ATTR_USE && v.subject == "Guest.passwd"));
    assert_golden("refactor_unify_rejected.txt", &unify.render_machine());

    // The abstract variant adds the abstract signature.
    let hd = load_sample("hotel_methods_diff");
    let abs = apply(&hd, &request("pull_up_method", &["Person", "checkPasswd", "abstract"]));
    assert!(abs.applied);
    let after = abs.model_after.as_ref().expect("applied");
    let person = after.find_class("Person").expect("present");
    let added = person.methods.iter().find(|m| m.name == "checkPasswd").expect("added");
    assert!(added.is_abstract && added.body.is_none());
    let preservation = verify_preservation(&hd, after);
    assert!(preservation.preserved);
    assert_golden(
        "refactor_abstract.txt",
        &format!("{}{}", abs.render_machine(), preservation.render_machine()),
    );

    finish(4, "pull-up context conditions and reports", start, Duration::from_secs(10));
}

/// Every catalog rule instance with satisfied context conditions over the
/// sample corpus.
fn preserving_catalog_cases() -> Vec<(&'static str, Model, RefactoringRequest)> {
    vec![
        (
            "pull_up_attribute(hotel)",
            load_sample("hotel"),
            with_default("pull_up_attribute", &["Person", "passwd"], Literal::Str(String::new())),
        ),
        (
            "pull_up_attribute(hotel_methods)",
            load_sample("hotel_methods"),
            with_default("pull_up_attribute", &["Person", "passwd"], Literal::Str(String::new())),
        ),
        (
            "pull_up_method abstract(hotel_methods_diff)",
            load_sample("hotel_methods_diff"),
            request("pull_up_method", &["Person", "checkPasswd", "abstract"]),
        ),
        (
            "pull_up_method override(hotel_methods_diff)",
            load_sample("hotel_methods_diff"),
            request("pull_up_method", &["Person", "greet", "override", "Guest"]),
        ),
        (
            "rename_attribute(hotel)",
            load_sample("hotel"),
            request("rename_attribute", &["Guest", "passwd", "secret"]),
        ),
        (
            "rename_class(hotel)",
            load_sample("hotel"),
            request("rename_class", &["Staff", "Crew"]),
        ),
    ]
}

fn print_acceptance_tests(model: &Model) -> String {
    let mut out = String::new();
    for test in model.tests.iter().filter(|t| t.category == TestCategory::Acceptance) {
        let mut mini = Model::named("x");
        mini.tests.push(test.clone());
        out.push_str(&print_model(&mini));
    }
    out
}

#[test]
fn criterion_5_behavior_preservation() {
    let start = Instant::now();
    for (label, model, req) in preserving_catalog_cases() {
        let violations = amw_core::refactor::check_context(&model, &req);
        assert!(violations.is_empty(), "{label}: {violations:?}");
        let report = apply(&model, &req);
        assert!(report.applied, "{label}");
        let after = report.model_after.expect("applied");
        assert!(
            amw_core::check_wellformed(&after).is_empty(),
            "{label}: transformed model must stay well-formed"
        );
        assert_eq!(
            print_acceptance_tests(&model),
            print_acceptance_tests(&after),
            "{label}: acceptance tests must be byte-identical"
        );
        let preservation = verify_preservation(&model, &after);
        assert!(preservation.preserved, "{label}: behavior must be preserved");
    }

    // The two-step pull-up (attribute, then method body) also preserves.
    let hm = load_sample("hotel_methods");
    let mid = apply(
        &hm,
        &with_default("pull_up_attribute", &["Person", "passwd"], Literal::Str(String::new())),
    )
    .model_after
    .expect("applied");
    let after = apply(&mid, &request("pull_up_method", &["Person", "checkPasswd", "unify"]))
        .model_after
        .expect("applied");
    assert!(verify_preservation(&hm, &after).preserved);

    // The committed counterexample is caught.
    let before = load_sample("hotel_break/before");
    let broken = load_sample("hotel_break/after");
    let result = verify_preservation(&before, &broken);
    assert!(!result.preserved);
    assert_golden("preservation_break.txt", &result.render_machine());

    finish(5, "behavior preservation by regression", start, Duration::from_secs(30));
}

#[test]
fn criterion_6_statechart_coverage() {
    let start = Instant::now();
    let model = load_sample("charts");
    let mut merged_text = format!(
        "{}\n{}\n",
        std::fs::read_to_string(sample("charts/login.amw")).expect("readable"),
        std::fs::read_to_string(sample("charts/meter.amw")).expect("readable"),
    );
    let mut expected_uncoverable: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    expected_uncoverable.insert("Guest", vec![]);
    expected_uncoverable.insert("Meter", vec![5, 8]);

    let mut discovered: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for owner in ["Guest", "Meter"] {
        let chart = model.find_chart(owner).expect("present");
        let outcome = derive(
            &model,
            chart,
            CoverageGoal::new(CoverageKind::Transition, 3),
            None,
            &ParamDomain::default(),
        )
        .expect("derives");
        let uncoverable: Vec<usize> = outcome
            .tests
            .iter()
            .filter(|t| !t.coverable)
            .filter_map(|t| match &t.goal {
                GoalElement::Transition(i) => Some(*i),
                _ => None,
            })
            .collect();
        assert_eq!(
            &uncoverable, expected_uncoverable.get(owner).expect("listed"),
            "{owner}: every uncoverable transition is reported, none silently dropped"
        );
        let covered: BTreeSet<usize> = outcome
            .tests
            .iter()
            .filter(|t| t.coverable)
            .filter_map(|t| match &t.goal {
                GoalElement::Transition(i) => Some(*i),
                _ => None,
            })
            .collect();
        let edges: BTreeSet<usize> = outcome.graph.edges.iter().map(|e| e.transition).collect();
        assert_eq!(covered, edges, "{owner}: goals mirror the discovered edges");
        discovered.insert(owner.to_string(), edges);
        merged_text.push_str(&outcome.emitted);
        merged_text.push('\n');
    }

    let merged = parse_source(&merged_text).expect("merged model parses");
    assert!(amw_core::check_wellformed(&merged).is_empty());
    let report = run_suite(&merged, &SuiteFilter::default());
    assert!(report.all_passed(), "{}", report.render_machine());
    for chart in &report.coverage {
        let fired: BTreeSet<usize> = chart.transitions_fired.iter().copied().collect();
        assert_eq!(
            &fired,
            discovered.get(&chart.owner).expect("listed"),
            "{}: transition suite must fire 100% of discovered transitions",
            chart.owner
        );
    }
    finish(6, "statechart transition coverage", start, Duration::from_secs(20));
}

/// One deterministic self-test pass: every report the workbench renders,
/// concatenated. Criterion 7 runs it twice and compares bytes.
fn self_test_report(seed: u64) -> String {
    let mut out = String::new();

    // Suite reports for every runnable sample project.
    for dir in [
        "hotel",
        "hotel_methods",
        "hotel_methods_diff",
        "hotel_break/before",
        "hotel_break/after",
        "multi",
    ] {
        let model = load_sample(dir);
        let report = run_suite(&model, &SuiteFilter::default());
        let _ = writeln!(out, "== suite {dir}");
        out.push_str(&report.render_machine());
    }

    // Refactoring reports.
    for (label, model, req) in preserving_catalog_cases() {
        let report = apply(&model, &req);
        let _ = writeln!(out, "== refactor {label}");
        out.push_str(&report.render_machine());
        if let Some(after) = &report.model_after {
            out.push_str(&verify_preservation(&model, after).render_machine());
        }
    }

    // Derivation reports.
    let charts = load_sample("charts");
    for owner in ["Guest", "Meter"] {
        let chart = charts.find_chart(owner).expect("present");
        for kind in [CoverageKind::State, CoverageKind::Transition, CoverageKind::Path] {
            let outcome = derive(&charts, chart, CoverageGoal::new(kind, 2), None, &ParamDomain::default())
                .expect("derives");
            let _ = writeln!(out, "== testgen {owner} {kind}");
            out.push_str(&amw_core::testgen::render_goals(&outcome.tests));
        }
    }

    // Seeded random digests: canonical prints and evaluator outcomes.
    let mut r = rng(seed);
    for _ in 0..50 {
        let model = gen_wellformed_model(&mut r);
        out.push_str(&print_model(&model));
    }
    let world = eval_world();
    for _ in 0..100 {
        let store = gen_store(&mut r, &world, 5);
        let mut scope = ExprScope::from_store(&store);
        let expr = gen_expr(&mut r, &mut scope, &TypeRef::Bool, 4);
        let mut ctx = EvalContext::new(&world, &store);
        ctx.bind_fixture_names();
        let _ = writeln!(
            out,
            "eval {} => {:?}",
            amw_core::syntax::printer::print_expr(&expr),
            eval(&expr, &ctx).map_err(|e| e.code())
        );
    }
    out
}

#[test]
fn criterion_7_deterministic_reports() {
    let start = Instant::now();
    let seed = seed_from_env(DEFAULT_SEED);
    let first = self_test_report(seed);
    let second = self_test_report(seed);
    assert!(
        first == second,
        "two consecutive self-test passes with AMW_SEED={seed} differ"
    );
    assert!(!first.is_empty());
    finish(7, "byte-identical self-test reports", start, Duration::from_secs(60));
}
