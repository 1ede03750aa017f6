//! In-memory representation of a modeling project and its static semantics.
//!
//! The types here cover every notation the workbench understands: class
//! definitions with a small action language, flat statecharts, object
//! configurations (complete fixtures), pattern configurations (partial
//! oracles), sequence definitions (test drivers), named invariants and test
//! cases. [`check::check_wellformed`] validates the whole set.
//!
//! Equality on model types is *structural*: source positions and item
//! provenance never participate (see [`Pos`] and [`Origin`]), so a model
//! compares equal to its reparsed canonical print.

pub mod check;
pub mod types;

use std::fmt;

/// 1-based source position. Compares equal to every other position so that
/// derived `PartialEq` on the AST gives structural equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}
impl Eq for Pos {}

/// Provenance of a top-level item: source file, global declaration index,
/// and position. Like [`Pos`] it is invisible to structural equality.
#[derive(Clone, Debug, Default)]
pub struct Origin {
    pub path: Option<String>,
    pub seq: u32,
    pub pos: Pos,
}

impl PartialEq for Origin {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}
impl Eq for Origin {}

/// Reference to one of the built-in primitive types, a declared class, or a
/// set of instances of a declared class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeRef {
    Int,
    Bool,
    String,
    Class(String),
    SetOf(String),
}

impl TypeRef {
    pub fn is_primitive(&self) -> bool {
        matches!(self, TypeRef::Int | TypeRef::Bool | TypeRef::String)
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int => write!(f, "Int"),
            TypeRef::Bool => write!(f, "Bool"),
            TypeRef::String => write!(f, "String"),
            TypeRef::Class(name) => write!(f, "{name}"),
            TypeRef::SetOf(name) => write!(f, "set<{name}>"),
        }
    }
}

/// A literal value as it appears in drivers, configurations and refactoring
/// parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl Literal {
    pub fn type_ref(&self) -> TypeRef {
        match self {
            Literal::Int(_) => TypeRef::Int,
            Literal::Bool(_) => TypeRef::Bool,
            Literal::Str(_) => TypeRef::String,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Bool(v) => write!(f, "{v}"),
            Literal::Str(v) => write!(f, "\"{}\"", escape_str(v)),
        }
    }
}

/// Escapes `"` and `\`, the only escapes the surface syntax knows.
pub fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            other => out.push(other),
        }
    }
    out
}

/// Binary operators of the constraint language, loosest-binding first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "implies",
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Constraint-language expression. Used for guards, transition results,
/// invariants, driver assertions and oracle assertions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    BoolLit(bool),
    StrLit(String),
    /// A free name: `self`, a parameter, a local, a fixture object or a
    /// quantifier variable.
    Name(String),
    /// Attribute navigation `expr.attr`.
    Attr(Box<Expr>, String),
    /// `expr@state`: the current statechart state name, as a String.
    StateOf(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `expr->size()`
    Size(Box<Expr>),
    /// `expr->includes(arg)`
    Includes(Box<Expr>, Box<Expr>),
    /// `expr->forAll(var | body)`
    ForAll(Box<Expr>, String, Box<Expr>),
    /// `expr->exists(var | body)`
    Exists(Box<Expr>, String, Box<Expr>),
}

/// A block of imperative statements (method bodies, transition actions).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ActionBlock {
    pub statements: Vec<Statement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    /// `var name = expr;` declares a local, type inferred.
    Local { name: String, value: Expr, pos: Pos },
    /// `nav = expr;` where the target is a bare name (local/param) or an attribute
    /// navigation rooted in one (or `self`).
    Assign { target: Expr, value: Expr, pos: Pos },
    If {
        condition: Expr,
        then_block: ActionBlock,
        else_block: Option<ActionBlock>,
        pos: Pos,
    },
    Return { value: Expr, pos: Pos },
    /// `call nav.method(args);` with the result, if any, discarded.
    Call {
        receiver: Expr,
        method: String,
        args: Vec<Expr>,
        pos: Pos,
    },
}

impl Statement {
    pub fn pos(&self) -> Pos {
        match self {
            Statement::Local { pos, .. }
            | Statement::Assign { pos, .. }
            | Statement::If { pos, .. }
            | Statement::Return { pos, .. }
            | Statement::Call { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub ty: TypeRef,
    pub published: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: Option<TypeRef>,
    pub body: Option<ActionBlock>,
    pub is_abstract: bool,
    pub published: bool,
    pub pos: Pos,
}

impl MethodDef {
    /// Signature identity used for override checking: parameter types plus
    /// return type. Parameter names are local to each declaration.
    pub fn signature(&self) -> (Vec<&TypeRef>, Option<&TypeRef>) {
        (
            self.params.iter().map(|p| &p.ty).collect(),
            self.return_type.as_ref(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub superclass: Option<String>,
    pub is_abstract: bool,
    pub published: bool,
    pub attributes: Vec<AttributeDef>,
    pub methods: Vec<MethodDef>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statechart {
    pub owner: String,
    pub initial: String,
    pub states: Vec<String>,
    pub transitions: Vec<TransitionDef>,
    pub origin: Origin,
}

/// One statechart transition. Parameters are bare names bound positionally
/// to the trigger method's declared parameters; their types come from the
/// method signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionDef {
    pub source: String,
    pub target: String,
    pub trigger: String,
    pub params: Vec<String>,
    pub guard: Option<Expr>,
    pub actions: Option<ActionBlock>,
    pub result: Option<Expr>,
    pub pos: Pos,
}

/// A value on the right-hand side of a configuration assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigValue {
    Literal(Literal),
    /// Reference to another object declared in the same configuration.
    Ref(String),
    /// Set of references, in written order.
    Set(Vec<String>),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Literal(lit) => write!(f, "{lit}"),
            ConfigValue::Ref(name) => write!(f, "{name}"),
            ConfigValue::Set(names) => write!(f, "{{{}}}", names.join(", ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub attr: String,
    pub value: ConfigValue,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDecl {
    pub name: String,
    pub class_name: String,
    pub assignments: Vec<Assignment>,
    pub pos: Pos,
}

/// A complete object diagram: the test-data side of a test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectConfiguration {
    pub name: String,
    pub objects: Vec<ObjectDecl>,
    pub origin: Origin,
}

/// A pattern object: like an object declaration but possibly partial, with
/// an optional anchor. Anchored objects bind by name to fixture objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternObject {
    pub anchored: bool,
    pub object: ObjectDecl,
}

/// A partial object diagram used as an oracle property description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternConfiguration {
    pub name: String,
    pub objects: Vec<PatternObject>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// `call target.method(args) [expect literal];`
    Stimulus {
        target: String,
        method: String,
        args: Vec<Literal>,
        expect: Option<Literal>,
        pos: Pos,
    },
    /// `expect caller -> callee: method;`
    ExpectMessage {
        caller: String,
        callee: String,
        method: String,
        pos: Pos,
    },
    /// `assert expr;`
    Assert { expr: Expr, pos: Pos },
}

impl Step {
    pub fn pos(&self) -> Pos {
        match self {
            Step::Stimulus { pos, .. }
            | Step::ExpectMessage { pos, .. }
            | Step::Assert { pos, .. } => *pos,
        }
    }
}

/// An ordered test driver: stimuli, expected inter-object messages and
/// mid-run assertions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceDefinition {
    pub name: String,
    pub strict: bool,
    pub steps: Vec<Step>,
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestCategory {
    Unit,
    Integration,
    Acceptance,
}

impl TestCategory {
    pub const ALL: [TestCategory; 3] = [
        TestCategory::Unit,
        TestCategory::Integration,
        TestCategory::Acceptance,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit" => Some(TestCategory::Unit),
            "integration" => Some(TestCategory::Integration),
            "acceptance" => Some(TestCategory::Acceptance),
            _ => None,
        }
    }
}

impl fmt::Display for TestCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestCategory::Unit => write!(f, "unit"),
            TestCategory::Integration => write!(f, "integration"),
            TestCategory::Acceptance => write!(f, "acceptance"),
        }
    }
}

/// Oracle of a test: an optional pattern to match against the final store
/// plus constraint assertions evaluated over it.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Oracle {
    pub pattern: Option<String>,
    pub assertions: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    pub category: TestCategory,
    pub fixture: String,
    pub driver: String,
    pub oracle: Option<Oracle>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedInvariant {
    pub name: String,
    pub context_class: String,
    pub expr: Expr,
    pub origin: Origin,
}

/// The optional `project` manifest item of a multi-file project.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectDecl {
    pub name: String,
    pub globs: Vec<String>,
    pub origin: Origin,
}

/// A complete parsed project.
#[derive(Clone, Debug, Default)]
pub struct Model {
    /// Project name; comes from the manifest when present, otherwise from
    /// the loader (directory name) or defaults to `"model"`.
    pub name: String,
    pub manifest: Option<ProjectDecl>,
    pub classes: Vec<ClassDef>,
    pub statecharts: Vec<Statechart>,
    pub configs: Vec<ObjectConfiguration>,
    pub patterns: Vec<PatternConfiguration>,
    pub sequences: Vec<SequenceDefinition>,
    pub invariants: Vec<NamedInvariant>,
    pub tests: Vec<TestCase>,
}

/// Structural equality: the derived field comparisons already ignore
/// positions and provenance; `name` is loader metadata and is ignored too.
impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.manifest == other.manifest
            && self.classes == other.classes
            && self.statecharts == other.statecharts
            && self.configs == other.configs
            && self.patterns == other.patterns
            && self.sequences == other.sequences
            && self.invariants == other.invariants
            && self.tests == other.tests
    }
}
impl Eq for Model {}

impl Model {
    pub fn named(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            ..Model::default()
        }
    }

    pub fn find_class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn find_class_mut(&mut self, name: &str) -> Option<&mut ClassDef> {
        self.classes.iter_mut().find(|c| c.name == name)
    }

    pub fn find_chart(&self, owner: &str) -> Option<&Statechart> {
        self.statecharts.iter().find(|s| s.owner == owner)
    }

    pub fn find_config(&self, name: &str) -> Option<&ObjectConfiguration> {
        self.configs.iter().find(|c| c.name == name)
    }

    pub fn find_pattern(&self, name: &str) -> Option<&PatternConfiguration> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn find_sequence(&self, name: &str) -> Option<&SequenceDefinition> {
        self.sequences.iter().find(|s| s.name == name)
    }

    pub fn find_test(&self, name: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Direct subclasses of `class`, in document order.
    pub fn direct_subclasses(&self, class: &str) -> Vec<&ClassDef> {
        self.classes
            .iter()
            .filter(|c| c.superclass.as_deref() == Some(class))
            .collect()
    }

    /// The next free item sequence number, for items synthesized after
    /// parsing (clones, generated tests).
    pub fn next_seq(&self) -> u32 {
        let mut max = 0;
        let mut bump = |o: &Origin| max = max.max(o.seq + 1);
        if let Some(m) = &self.manifest {
            bump(&m.origin);
        }
        self.classes.iter().for_each(|i| bump(&i.origin));
        self.statecharts.iter().for_each(|i| bump(&i.origin));
        self.configs.iter().for_each(|i| bump(&i.origin));
        self.patterns.iter().for_each(|i| bump(&i.origin));
        self.sequences.iter().for_each(|i| bump(&i.origin));
        self.invariants.iter().for_each(|i| bump(&i.origin));
        self.tests.iter().for_each(|i| bump(&i.origin));
        max
    }
}
