//! `amw`, the modeling workbench CLI.
//!
//! Exit codes: 0 success / all tests pass, 1 diagnostics or failures,
//! 2 usage errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amw_core::diag::render_diagnostics;
use amw_core::model::{Literal, Model, TestCategory};
use amw_core::refactor::{
    apply, report_obsolete, rule_from_args, verify_preservation, RefactoringRequest,
};
use amw_core::syntax::parser::{parse_literal_list, parse_literal_text};
use amw_core::syntax::printer::{print_file, source_paths};
use amw_core::syntax::project::LoadError;
use amw_core::testgen::{derive, render_goals, write_gen_file, CoverageGoal, CoverageKind, ParamDomain};
use amw_core::testkit::{run_suite, SuiteFilter};
use amw_core::{check_wellformed, load_project};

#[derive(Parser)]
#[command(name = "amw", version, about = "Model workbench: check, run and evolve .amw projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the project and report well-formedness diagnostics.
    Check { dir: PathBuf },
    /// Run model-defined tests.
    Test(TestArgs),
    /// Derive coverage tests from a statechart into <chart>_gen.amw.
    Testgen(TestgenArgs),
    /// Apply a catalog refactoring with context-condition checks.
    Refactor(RefactorArgs),
    /// Render a template over the model into gen/<template>/.
    Generate(GenerateArgs),
    /// Rewrite all project files in canonical form.
    Fmt { dir: PathBuf },
}

#[derive(Args)]
struct TestArgs {
    dir: PathBuf,
    /// unit, integration or acceptance
    #[arg(long)]
    category: Option<String>,
    /// Glob over test names, e.g. 'login_*'
    #[arg(long)]
    filter: Option<String>,
    /// Write the machine-readable report to a file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TestgenArgs {
    dir: PathBuf,
    /// Class owning the statechart.
    #[arg(long)]
    chart: String,
    /// state | transition | path
    #[arg(long)]
    coverage: String,
    /// Path length bound (also scales exploration depth).
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Integer stimulus domain is [-B, B].
    #[arg(long = "int-bound", default_value_t = 8)]
    int_bound: i64,
    /// Name of a configuration to use as the seed object.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct RefactorArgs {
    dir: PathBuf,
    /// pull_up_attribute | pull_up_method | rename_class | rename_attribute | rename_method
    #[arg(long)]
    rule: String,
    /// Comma-separated rule parameters, e.g. 'Person,passwd'.
    #[arg(long)]
    args: String,
    /// Default value for attributes gained by configurations (a literal).
    #[arg(long)]
    default: Option<String>,
    /// Comma-separated literals; each clones the patched tests once.
    #[arg(long)]
    clone: Option<String>,
    /// Allow changes that touch the published surface and acceptance tests.
    #[arg(long = "allow-published")]
    allow_published: bool,
    /// Print the report without writing any file.
    #[arg(long = "dry-run")]
    dry_run: bool,
    /// Re-run the acceptance suite on both models and require equality.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct GenerateArgs {
    dir: PathBuf,
    /// Built-in template name (doc, skeleton) or <name>.amt in templates/.
    #[arg(long)]
    template: String,
    /// Output root; defaults to the project directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_checked(dir: &Path) -> Result<Result<Model, String>, String> {
    match load_project(dir) {
        Ok(model) => {
            let diags = check_wellformed(&model);
            if diags.is_empty() {
                Ok(Ok(model))
            } else {
                Ok(Err(render_diagnostics(&diags)))
            }
        }
        Err(LoadError::Syntax(diags)) => Ok(Err(render_diagnostics(&diags))),
        Err(other) => Err(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Check { dir } => match load_checked(&dir)? {
            Ok(_) => Ok(ExitCode::SUCCESS),
            Err(rendered) => {
                print!("{rendered}");
                Ok(ExitCode::FAILURE)
            }
        },
        Command::Test(args) => cmd_test(args),
        Command::Testgen(args) => cmd_testgen(args),
        Command::Refactor(args) => cmd_refactor(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Fmt { dir } => cmd_fmt(&dir),
    }
}

fn cmd_test(args: TestArgs) -> Result<ExitCode, String> {
    let model = match load_checked(&args.dir)? {
        Ok(m) => m,
        Err(rendered) => {
            print!("{rendered}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let mut filter = SuiteFilter::default();
    if let Some(cat) = &args.category {
        let parsed = TestCategory::parse(cat)
            .ok_or_else(|| format!("unknown category `{cat}` (unit, integration, acceptance)"))?;
        filter.categories = Some([parsed].into_iter().collect::<BTreeSet<_>>());
    }
    filter.name_glob = args.filter.clone();
    let report = run_suite(&model, &filter);
    print!("{}", report.render_human());
    if let Some(path) = &args.report {
        write_atomic(path, report.render_machine().as_bytes()).map_err(|e| e.to_string())?;
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_testgen(args: TestgenArgs) -> Result<ExitCode, String> {
    let model = match load_checked(&args.dir)? {
        Ok(m) => m,
        Err(rendered) => {
            print!("{rendered}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let chart = model
        .find_chart(&args.chart)
        .ok_or_else(|| format!("no statechart for class `{}`", args.chart))?;
    let kind = CoverageKind::parse(&args.coverage)
        .ok_or_else(|| format!("unknown coverage `{}` (state, transition, path)", args.coverage))?;
    let seed = match &args.seed {
        Some(name) => Some(
            model
                .find_config(name)
                .ok_or_else(|| format!("unknown seed configuration `{name}`"))?,
        ),
        None => None,
    };
    let domain = ParamDomain {
        int_bound: args.int_bound,
    };
    let outcome = derive(&model, chart, CoverageGoal::new(kind, args.k), seed, &domain)
        .map_err(|d| d.to_string())?;
    print!("{}", render_goals(&outcome.tests));
    if outcome.graph.explosion {
        println!("E_EXPLOSION exploration truncated at the node cap; graph is partial");
    }
    let path = write_gen_file(&args.dir, &chart.owner, &outcome.emitted)
        .map_err(|e| e.to_string())?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_refactor(args: RefactorArgs) -> Result<ExitCode, String> {
    let model = match load_checked(&args.dir)? {
        Ok(m) => m,
        Err(rendered) => {
            print!("{rendered}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let arg_list: Vec<&str> = args.args.split(',').map(str::trim).collect();
    let rule = rule_from_args(&args.rule, &arg_list)?;
    let mut request = RefactoringRequest::new(rule);
    request.allow_published = args.allow_published;
    if let Some(default) = &args.default {
        request.default_value = Some(parse_literal(default)?);
    }
    if let Some(clone) = &args.clone {
        request.clone_values = parse_literal_list(clone)
            .map_err(|ds| format!("--clone: {}", ds[0].message))?;
    }

    let report = apply(&model, &request);
    print!("{}", report.render_machine());
    if !report.applied {
        return Ok(ExitCode::FAILURE);
    }
    let after = report.model_after.as_ref().expect("applied");

    for warning in report_obsolete(after) {
        println!("OBSOLETE {} [{}]", warning.test, warning.reason);
    }

    let mut preserved = true;
    if args.verify {
        let result = verify_preservation(&model, after);
        print!("{}", result.render_machine());
        preserved = result.preserved;
    }

    if !args.dry_run {
        write_model_files(after).map_err(|e| e.to_string())?;
    }

    Ok(if preserved {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, String> {
    if args.template.is_empty()
        || args.template.contains('/')
        || args.template.contains('\\')
        || args.template.contains("..")
    {
        return Err(format!("invalid template name `{}`", args.template));
    }
    let model = match load_checked(&args.dir)? {
        Ok(m) => m,
        Err(rendered) => {
            print!("{rendered}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let template = match amw_core::codegen::find_builtin(&args.template) {
        Some(t) => t,
        None => {
            let path = args.dir.join("templates").join(format!("{}.amt", args.template));
            let text = fs::read_to_string(&path)
                .map_err(|e| format!("template `{}`: {e}", path.display()))?;
            amw_core::codegen::parse_template(&args.template, &text).map_err(|d| d.to_string())?
        }
    };
    let output = amw_core::codegen::render(&model, &template).map_err(|d| d.to_string())?;
    let root = args
        .out
        .unwrap_or_else(|| args.dir.clone())
        .join("gen")
        .join(&args.template);
    for (rel, content) in &output.files {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
        write_atomic(&path, content.as_bytes()).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fmt(dir: &Path) -> Result<ExitCode, String> {
    let model = match load_checked(dir)? {
        Ok(m) => m,
        Err(rendered) => {
            print!("{rendered}");
            return Ok(ExitCode::FAILURE);
        }
    };
    write_model_files(&model).map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

/// Rewrites every source file of the model in canonical form, atomically
/// (write to a temp file, then rename) and only when the content changed.
fn write_model_files(model: &Model) -> std::io::Result<()> {
    for path in source_paths(model) {
        let rendered = print_file(model, &path);
        let existing = fs::read_to_string(&path).unwrap_or_default();
        if existing != rendered {
            write_atomic(Path::new(&path), rendered.as_bytes())?;
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, content: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn parse_literal(text: &str) -> Result<Literal, String> {
    parse_literal_text(text).map_err(|ds| format!("--default: {}", ds[0].message))
}
