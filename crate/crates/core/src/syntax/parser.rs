//! Recursive-descent parser: one-token lookahead plus keyword dispatch.
//!
//! On a syntax error the parser records a diagnostic and skips to the next
//! top-level keyword at brace depth zero, so a single malformed construct
//! does not hide later ones.

use std::collections::BTreeMap;

use crate::diag::{codes, Diagnostic};
use crate::model::{
    ActionBlock, Assignment, AttributeDef, BinOp, ClassDef, ConfigValue, Expr, ExprKind, Literal,
    MethodDef, Model, NamedInvariant, ObjectConfiguration, ObjectDecl, Oracle, Origin, Param,
    PatternConfiguration, PatternObject, Pos, ProjectDecl, SequenceDefinition, Statechart,
    Statement, Step, TestCase, TestCategory, TransitionDef, TypeRef,
};
use crate::syntax::lexer::{lex, Tok, Token};

/// One input file. Multi-file projects are merged in path-lexicographic
/// order, then document order.
#[derive(Clone, Debug)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceUnit {
            path: path.into(),
            text: text.into(),
        }
    }
}

enum Item {
    Class(ClassDef),
    Chart(Statechart),
    Config(ObjectConfiguration),
    Pattern(PatternConfiguration),
    Sequence(SequenceDefinition),
    Invariant(NamedInvariant),
    Test(TestCase),
    Project(ProjectDecl),
}

impl Item {
    /// (namespace, name, position) for cross-file duplicate detection.
    fn key(&self) -> (&'static str, String, Pos) {
        match self {
            Item::Class(c) => ("class", c.name.clone(), c.origin.pos),
            Item::Chart(s) => ("statechart", s.owner.clone(), s.origin.pos),
            Item::Config(c) => ("objects", c.name.clone(), c.origin.pos),
            Item::Pattern(p) => ("pattern", p.name.clone(), p.origin.pos),
            Item::Sequence(s) => ("sequence", s.name.clone(), s.origin.pos),
            Item::Invariant(i) => ("inv", i.name.clone(), i.origin.pos),
            Item::Test(t) => ("test", t.name.clone(), t.origin.pos),
            Item::Project(p) => ("project", "project".to_string(), p.origin.pos),
        }
    }
}

/// Parses and merges all sources into one model. On failure returns every
/// syntax diagnostic found across all sources.
pub fn parse_model(sources: &[SourceUnit]) -> Result<Model, Vec<Diagnostic>> {
    let mut sorted: Vec<&SourceUnit> = sources.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));

    let mut diags = Vec::new();
    let mut all_items: Vec<(String, Item)> = Vec::new();
    for unit in sorted {
        let lexed = lex(&unit.text);
        diags.extend(
            lexed
                .diags
                .into_iter()
                .map(|d| d.with_path(unit.path.clone())),
        );
        let mut parser = Parser {
            tokens: &lexed.tokens,
            i: 0,
            diags: Vec::new(),
        };
        let items = parser.parse_items();
        diags.extend(
            parser
                .diags
                .into_iter()
                .map(|d| d.with_path(unit.path.clone())),
        );
        for item in items {
            all_items.push((unit.path.clone(), item));
        }
    }

    // Duplicate top-level names across files are a merge error at the
    // second site; duplicates within one file are left to the checker.
    // The project manifest is the exception: it has no per-name namespace,
    // so a second manifest anywhere is a merge error.
    let mut first_file: BTreeMap<(&'static str, String), String> = BTreeMap::new();
    for (path, item) in &all_items {
        let (kind, name, pos) = item.key();
        match first_file.get(&(kind, name.clone())) {
            Some(existing) if existing != path || kind == "project" => {
                diags.push(
                    Diagnostic::error(
                        codes::E_DUPLICATE,
                        pos.line,
                        pos.column,
                        format!("duplicate {kind} `{name}` (first declared in {existing})"),
                    )
                    .with_path(path.clone()),
                );
            }
            Some(_) => {}
            None => {
                first_file.insert((kind, name), path.clone());
            }
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }

    let mut model = Model::named("model");
    for (seq, (path, item)) in (0u32..).zip(all_items) {
        let origin = |pos: Pos| Origin {
            path: Some(path.clone()),
            seq,
            pos,
        };
        match item {
            Item::Class(mut c) => {
                c.origin = origin(c.origin.pos);
                model.classes.push(c);
            }
            Item::Chart(mut s) => {
                s.origin = origin(s.origin.pos);
                model.statecharts.push(s);
            }
            Item::Config(mut c) => {
                c.origin = origin(c.origin.pos);
                model.configs.push(c);
            }
            Item::Pattern(mut p) => {
                p.origin = origin(p.origin.pos);
                model.patterns.push(p);
            }
            Item::Sequence(mut s) => {
                s.origin = origin(s.origin.pos);
                model.sequences.push(s);
            }
            Item::Invariant(mut i) => {
                i.origin = origin(i.origin.pos);
                model.invariants.push(i);
            }
            Item::Test(mut t) => {
                t.origin = origin(t.origin.pos);
                model.tests.push(t);
            }
            Item::Project(mut p) => {
                p.origin = origin(p.origin.pos);
                model.name = p.name.clone();
                model.manifest = Some(p);
            }
        }
    }
    Ok(model)
}

/// Parses a single anonymous source. Handy for tests and tools.
pub fn parse_source(text: &str) -> Result<Model, Vec<Diagnostic>> {
    parse_model(&[SourceUnit::new("<input>", text)])
}

struct Parser<'t> {
    tokens: &'t [Token],
    i: usize,
    diags: Vec<Diagnostic>,
}

const TOP_KEYWORDS: &[&str] = &[
    "class",
    "published",
    "abstract",
    "statechart",
    "objects",
    "pattern",
    "sequence",
    "inv",
    "test",
    "project",
];

impl<'t> Parser<'t> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.i].pos
    }

    fn advance(&mut self) -> &'t Token {
        let t = &self.tokens[self.i];
        if self.i + 1 < self.tokens.len() {
            self.i += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Kw(k) if *k == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let pos = self.pos();
        self.diags
            .push(Diagnostic::error(codes::E_SYNTAX, pos.line, pos.column, message));
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ()> {
        if *self.peek() == tok {
            let pos = self.pos();
            self.advance();
            Ok(pos)
        } else {
            self.error_here(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ));
            Err(())
        }
    }

    fn expect_kw(&mut self, kw: &'static str) -> Result<Pos, ()> {
        self.expect(Tok::Kw(kw))
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ()> {
        match self.peek() {
            Tok::Ident(name) => {
                let name = name.clone();
                let pos = self.pos();
                self.advance();
                Ok((name, pos))
            }
            other => {
                let msg = format!("expected {what}, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    /// Skips to the next top-level keyword. Item keywords never occur
    /// inside braces, so they anchor recovery at any depth; the modifier
    /// keywords (`published`, `abstract`) only count at depth zero because
    /// they also prefix class members.
    fn recover(&mut self) {
        const ANCHORS: &[&str] = &[
            "class", "statechart", "objects", "pattern", "sequence", "inv", "test", "project",
        ];
        let mut depth: i32 = 0;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::LBrace => {
                    depth += 1;
                    self.advance();
                }
                Tok::RBrace => {
                    depth = (depth - 1).max(0);
                    self.advance();
                }
                Tok::Kw(k) if ANCHORS.contains(k) => return,
                Tok::Kw(k) if depth == 0 && TOP_KEYWORDS.contains(k) => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn parse_items(&mut self) -> Vec<Item> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Kw("class") | Tok::Kw("published") | Tok::Kw("abstract") => {
                    match self.parse_class() {
                        Ok(c) => items.push(Item::Class(c)),
                        Err(()) => self.recover(),
                    }
                }
                Tok::Kw("statechart") => match self.parse_statechart() {
                    Ok(s) => items.push(Item::Chart(s)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("objects") => match self.parse_config() {
                    Ok(c) => items.push(Item::Config(c)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("pattern") => match self.parse_pattern() {
                    Ok(p) => items.push(Item::Pattern(p)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("sequence") => match self.parse_sequence() {
                    Ok(s) => items.push(Item::Sequence(s)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("inv") => match self.parse_invariant() {
                    Ok(i) => items.push(Item::Invariant(i)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("test") => match self.parse_test() {
                    Ok(t) => items.push(Item::Test(t)),
                    Err(()) => self.recover(),
                },
                Tok::Kw("project") => match self.parse_project() {
                    Ok(p) => items.push(Item::Project(p)),
                    Err(()) => self.recover(),
                },
                other => {
                    let msg = format!("expected a top-level item, found {}", other.describe());
                    self.error_here(msg);
                    self.advance();
                    self.recover();
                }
            }
        }
        items
    }

    fn parse_class(&mut self) -> Result<ClassDef, ()> {
        let pos = self.pos();
        let published = self.eat_kw("published");
        let is_abstract = self.eat_kw("abstract");
        self.expect_kw("class")?;
        let (name, _) = self.expect_ident("class name")?;
        let superclass = if self.eat_kw("extends") {
            Some(self.expect_ident("superclass name")?.0)
        } else {
            None
        };
        self.expect(Tok::LBrace)?;
        let mut attributes = Vec::new();
        let mut methods = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let member_pos = self.pos();
            let published = self.eat_kw("published");
            if self.at_kw("attr") {
                self.advance();
                let (attr_name, _) = self.expect_ident("attribute name")?;
                self.expect(Tok::Colon)?;
                let ty = self.parse_type()?;
                self.expect(Tok::Semi)?;
                attributes.push(AttributeDef {
                    name: attr_name,
                    ty,
                    published,
                    pos: member_pos,
                });
            } else {
                let is_abstract = self.eat_kw("abstract");
                self.expect_kw("method")?;
                let (method_name, _) = self.expect_ident("method name")?;
                self.expect(Tok::LParen)?;
                let params = self.parse_typed_params()?;
                self.expect(Tok::RParen)?;
                let return_type = if *self.peek() == Tok::Colon {
                    self.advance();
                    Some(self.parse_type()?)
                } else {
                    None
                };
                let body = if *self.peek() == Tok::LBrace {
                    Some(self.parse_block()?)
                } else {
                    self.expect(Tok::Semi)?;
                    None
                };
                methods.push(MethodDef {
                    name: method_name,
                    params,
                    return_type,
                    body,
                    is_abstract,
                    published,
                    pos: member_pos,
                });
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(ClassDef {
            name,
            superclass,
            is_abstract,
            published,
            attributes,
            methods,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_type(&mut self) -> Result<TypeRef, ()> {
        if self.eat_kw("set") {
            self.expect(Tok::Lt)?;
            let (name, _) = self.expect_ident("element class")?;
            self.expect(Tok::Gt)?;
            return Ok(TypeRef::SetOf(name));
        }
        let (name, _) = self.expect_ident("type name")?;
        Ok(match name.as_str() {
            "Int" => TypeRef::Int,
            "Bool" => TypeRef::Bool,
            "String" => TypeRef::String,
            _ => TypeRef::Class(name),
        })
    }

    fn parse_typed_params(&mut self) -> Result<Vec<Param>, ()> {
        let mut params = Vec::new();
        if *self.peek() == Tok::RParen {
            return Ok(params);
        }
        loop {
            let (name, _) = self.expect_ident("parameter name")?;
            self.expect(Tok::Colon)?;
            let ty = self.parse_type()?;
            params.push(Param { name, ty });
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        Ok(params)
    }

    fn parse_block(&mut self) -> Result<ActionBlock, ()> {
        self.expect(Tok::LBrace)?;
        let mut statements = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            statements.push(self.parse_statement()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(ActionBlock { statements })
    }

    fn parse_statement(&mut self) -> Result<Statement, ()> {
        let pos = self.pos();
        match self.peek() {
            Tok::Kw("var") => {
                self.advance();
                let (name, _) = self.expect_ident("local name")?;
                self.expect(Tok::Assign)?;
                let value = self.parse_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Statement::Local { name, value, pos })
            }
            Tok::Kw("return") => {
                self.advance();
                let value = self.parse_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Statement::Return { value, pos })
            }
            Tok::Kw("if") => {
                self.advance();
                self.expect(Tok::LParen)?;
                let condition = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                let then_block = self.parse_block()?;
                let else_block = if self.eat_kw("else") {
                    let b = self.parse_block()?;
                    if b.statements.is_empty() {
                        None
                    } else {
                        Some(b)
                    }
                } else {
                    None
                };
                Ok(Statement::If {
                    condition,
                    then_block,
                    else_block,
                    pos,
                })
            }
            Tok::Kw("call") => {
                self.advance();
                let mut names = vec![self.expect_ident("receiver")?];
                while *self.peek() == Tok::Dot {
                    self.advance();
                    names.push(self.expect_ident("name")?);
                }
                if names.len() < 2 {
                    self.error_here("`call` needs an explicit receiver: call nav.method(...)");
                    return Err(());
                }
                let (method, _) = names.pop().expect("len checked");
                let receiver = nav_expr(&names);
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.parse_expr()?);
                        if *self.peek() == Tok::Comma {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                Ok(Statement::Call {
                    receiver,
                    method,
                    args,
                    pos,
                })
            }
            Tok::Ident(_) => {
                let mut names = vec![self.expect_ident("navigation")?];
                while *self.peek() == Tok::Dot {
                    self.advance();
                    names.push(self.expect_ident("attribute")?);
                }
                let target = nav_expr(&names);
                self.expect(Tok::Assign)?;
                let value = self.parse_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Statement::Assign { target, value, pos })
            }
            other => {
                let msg = format!("expected a statement, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    fn parse_statechart(&mut self) -> Result<Statechart, ()> {
        let pos = self.pos();
        self.expect_kw("statechart")?;
        self.expect_kw("for")?;
        let (owner, _) = self.expect_ident("class name")?;
        self.expect(Tok::LBrace)?;
        self.expect_kw("initial")?;
        let (initial, _) = self.expect_ident("state name")?;
        self.expect(Tok::Semi)?;
        let mut states = Vec::new();
        while self.at_kw("state") {
            self.advance();
            let (s, _) = self.expect_ident("state name")?;
            self.expect(Tok::Semi)?;
            states.push(s);
        }
        let mut transitions = Vec::new();
        while self.at_kw("trans") {
            transitions.push(self.parse_transition()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(Statechart {
            owner,
            initial,
            states,
            transitions,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_transition(&mut self) -> Result<TransitionDef, ()> {
        let pos = self.pos();
        self.expect_kw("trans")?;
        let (source, _) = self.expect_ident("source state")?;
        self.expect(Tok::Arrow)?;
        let (target, _) = self.expect_ident("target state")?;
        self.expect_kw("on")?;
        let (trigger, _) = self.expect_ident("trigger method")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.expect_ident("parameter name")?.0);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let guard = if *self.peek() == Tok::LBracket {
            self.advance();
            let e = self.parse_expr()?;
            self.expect(Tok::RBracket)?;
            Some(e)
        } else {
            None
        };
        let actions = if *self.peek() == Tok::Slash {
            self.advance();
            let block = self.parse_block()?;
            if block.statements.is_empty() {
                None
            } else {
                Some(block)
            }
        } else {
            None
        };
        let result = if self.eat_kw("returns") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(TransitionDef {
            source,
            target,
            trigger,
            params,
            guard,
            actions,
            result,
            pos,
        })
    }

    fn parse_object_decl(&mut self) -> Result<ObjectDecl, ()> {
        let pos = self.pos();
        self.expect_kw("object")?;
        let (name, _) = self.expect_ident("object name")?;
        self.expect(Tok::Colon)?;
        let (class_name, _) = self.expect_ident("class name")?;
        self.expect(Tok::LBrace)?;
        let mut assignments = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let apos = self.pos();
            let (attr, _) = self.expect_ident("attribute name")?;
            self.expect(Tok::Assign)?;
            let value = self.parse_config_value()?;
            self.expect(Tok::Semi)?;
            assignments.push(Assignment {
                attr,
                value,
                pos: apos,
            });
        }
        self.expect(Tok::RBrace)?;
        Ok(ObjectDecl {
            name,
            class_name,
            assignments,
            pos,
        })
    }

    fn parse_config_value(&mut self) -> Result<ConfigValue, ()> {
        match self.peek() {
            Tok::LBrace => {
                self.advance();
                let mut names = Vec::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        names.push(self.expect_ident("object name")?.0);
                        if *self.peek() == Tok::Comma {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(ConfigValue::Set(names))
            }
            Tok::Ident(_) => Ok(ConfigValue::Ref(self.expect_ident("object name")?.0)),
            _ => Ok(ConfigValue::Literal(self.parse_literal()?)),
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, ()> {
        match self.peek().clone() {
            Tok::Int(v) => {
                if v > i64::MAX as u64 {
                    self.error_here("integer literal out of range");
                    return Err(());
                }
                self.advance();
                Ok(Literal::Int(v as i64))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(v) if v <= i64::MAX as u64 + 1 => {
                        self.advance();
                        Ok(Literal::Int((-(v as i128)) as i64))
                    }
                    _ => {
                        self.error_here("expected an integer literal after `-`");
                        Err(())
                    }
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::Str(s))
            }
            Tok::Kw("true") => {
                self.advance();
                Ok(Literal::Bool(true))
            }
            Tok::Kw("false") => {
                self.advance();
                Ok(Literal::Bool(false))
            }
            other => {
                let msg = format!("expected a literal, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    fn parse_config(&mut self) -> Result<ObjectConfiguration, ()> {
        let pos = self.pos();
        self.expect_kw("objects")?;
        let (name, _) = self.expect_ident("configuration name")?;
        self.expect(Tok::LBrace)?;
        let mut objects = Vec::new();
        while self.at_kw("object") {
            objects.push(self.parse_object_decl()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(ObjectConfiguration {
            name,
            objects,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_pattern(&mut self) -> Result<PatternConfiguration, ()> {
        let pos = self.pos();
        self.expect_kw("pattern")?;
        let (name, _) = self.expect_ident("pattern name")?;
        self.expect(Tok::LBrace)?;
        let mut objects = Vec::new();
        while self.at_kw("anchor") || self.at_kw("object") {
            let anchored = self.eat_kw("anchor");
            objects.push(PatternObject {
                anchored,
                object: self.parse_object_decl()?,
            });
        }
        self.expect(Tok::RBrace)?;
        Ok(PatternConfiguration {
            name,
            objects,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_sequence(&mut self) -> Result<SequenceDefinition, ()> {
        let pos = self.pos();
        self.expect_kw("sequence")?;
        let (name, _) = self.expect_ident("sequence name")?;
        let strict = self.eat_kw("strict");
        self.expect(Tok::LBrace)?;
        let mut steps = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            steps.push(self.parse_step()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(SequenceDefinition {
            name,
            strict,
            steps,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_step(&mut self) -> Result<Step, ()> {
        let pos = self.pos();
        match self.peek() {
            Tok::Kw("call") => {
                self.advance();
                let (target, _) = self.expect_ident("target object")?;
                self.expect(Tok::Dot)?;
                let (method, _) = self.expect_ident("method name")?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.parse_literal()?);
                        if *self.peek() == Tok::Comma {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                let expect = if self.eat_kw("expect") {
                    Some(self.parse_literal()?)
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                Ok(Step::Stimulus {
                    target,
                    method,
                    args,
                    expect,
                    pos,
                })
            }
            Tok::Kw("expect") => {
                self.advance();
                let (caller, _) = self.expect_ident("caller object")?;
                self.expect(Tok::Arrow)?;
                let (callee, _) = self.expect_ident("callee object")?;
                self.expect(Tok::Colon)?;
                let (method, _) = self.expect_ident("method name")?;
                self.expect(Tok::Semi)?;
                Ok(Step::ExpectMessage {
                    caller,
                    callee,
                    method,
                    pos,
                })
            }
            Tok::Kw("assert") => {
                self.advance();
                let expr = self.parse_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Step::Assert { expr, pos })
            }
            other => {
                let msg = format!("expected a driver step, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    fn parse_invariant(&mut self) -> Result<NamedInvariant, ()> {
        let pos = self.pos();
        self.expect_kw("inv")?;
        let (name, _) = self.expect_ident("invariant name")?;
        self.expect_kw("for")?;
        let (context_class, _) = self.expect_ident("context class")?;
        self.expect(Tok::Colon)?;
        let expr = self.parse_expr()?;
        self.expect(Tok::Semi)?;
        Ok(NamedInvariant {
            name,
            context_class,
            expr,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_test(&mut self) -> Result<TestCase, ()> {
        let pos = self.pos();
        self.expect_kw("test")?;
        let (name, _) = self.expect_ident("test name")?;
        self.expect_kw("category")?;
        let (cat_word, cat_pos) = self.expect_ident("test category")?;
        let category = match TestCategory::parse(&cat_word) {
            Some(c) => c,
            None => {
                self.diags.push(Diagnostic::error(
                    codes::E_SYNTAX,
                    cat_pos.line,
                    cat_pos.column,
                    format!("unknown category `{cat_word}` (unit, integration or acceptance)"),
                ));
                return Err(());
            }
        };
        self.expect(Tok::LBrace)?;
        self.expect_kw("fixture")?;
        let (fixture, _) = self.expect_ident("configuration name")?;
        self.expect(Tok::Semi)?;
        self.expect_kw("driver")?;
        let (driver, _) = self.expect_ident("sequence name")?;
        self.expect(Tok::Semi)?;
        let oracle = if self.eat_kw("oracle") {
            self.expect(Tok::LBrace)?;
            let pattern = if self.eat_kw("matches") {
                let (p, _) = self.expect_ident("pattern name")?;
                self.expect(Tok::Semi)?;
                Some(p)
            } else {
                None
            };
            let mut assertions = Vec::new();
            while self.eat_kw("assert") {
                assertions.push(self.parse_expr()?);
                self.expect(Tok::Semi)?;
            }
            self.expect(Tok::RBrace)?;
            Some(Oracle {
                pattern,
                assertions,
            })
        } else {
            None
        };
        self.expect(Tok::RBrace)?;
        Ok(TestCase {
            name,
            category,
            fixture,
            driver,
            oracle,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    fn parse_project(&mut self) -> Result<ProjectDecl, ()> {
        let pos = self.pos();
        self.expect_kw("project")?;
        let (name, _) = self.expect_ident("project name")?;
        self.expect(Tok::LBrace)?;
        let mut globs = Vec::new();
        while matches!(self.peek(), Tok::Ident(w) if w == "files") {
            self.advance();
            match self.peek().clone() {
                Tok::Str(glob) => {
                    self.advance();
                    globs.push(glob);
                }
                other => {
                    let msg = format!("expected a glob string, found {}", other.describe());
                    self.error_here(msg);
                    return Err(());
                }
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        Ok(ProjectDecl {
            name,
            globs,
            origin: Origin {
                path: None,
                seq: 0,
                pos,
            },
        })
    }

    // Expressions. Precedence, loosest first:
    //   implies (right) < or < and < not < comparison < additive
    //   < multiplicative < postfix navigation.
    pub fn parse_expr(&mut self) -> Result<Expr, ()> {
        self.parse_implies()
    }

    fn parse_implies(&mut self) -> Result<Expr, ()> {
        let lhs = self.parse_or()?;
        if self.at_kw("implies") {
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_implies()?;
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Implies, Box::new(lhs), Box::new(rhs)),
                pos,
            ));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Expr, ()> {
        let mut lhs = self.parse_and()?;
        while self.at_kw("or") {
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_and()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ()> {
        let mut lhs = self.parse_not()?;
        while self.at_kw("and") {
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_not()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, ()> {
        if self.at_kw("not") {
            let pos = self.pos();
            self.advance();
            let inner = self.parse_not()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), pos));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, ()> {
        let mut lhs = self.parse_additive()?;
        loop {
            let op = match self.peek() {
                Tok::Assign => BinOp::Eq,
                Tok::Ne => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_additive()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn parse_additive(&mut self) -> Result<Expr, ()> {
        let mut lhs = self.parse_multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_multiplicative()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, ()> {
        let mut lhs = self.parse_postfix()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.advance();
            let rhs = self.parse_postfix()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn parse_postfix(&mut self) -> Result<Expr, ()> {
        let mut expr = self.parse_primary()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    let pos = self.pos();
                    self.advance();
                    let (attr, _) = self.expect_ident("attribute name")?;
                    expr = Expr::new(ExprKind::Attr(Box::new(expr), attr), pos);
                }
                Tok::At => {
                    let pos = self.pos();
                    self.advance();
                    self.expect_kw("state")?;
                    expr = Expr::new(ExprKind::StateOf(Box::new(expr)), pos);
                }
                Tok::Arrow => {
                    let pos = self.pos();
                    self.advance();
                    let (op, _) = self.expect_ident("collection operation")?;
                    expr = match op.as_str() {
                        "size" => {
                            self.expect(Tok::LParen)?;
                            self.expect(Tok::RParen)?;
                            Expr::new(ExprKind::Size(Box::new(expr)), pos)
                        }
                        "includes" => {
                            self.expect(Tok::LParen)?;
                            let arg = self.parse_expr()?;
                            self.expect(Tok::RParen)?;
                            Expr::new(ExprKind::Includes(Box::new(expr), Box::new(arg)), pos)
                        }
                        "forAll" | "exists" => {
                            self.expect(Tok::LParen)?;
                            let (var, _) = self.expect_ident("quantifier variable")?;
                            self.expect(Tok::Pipe)?;
                            let body = self.parse_expr()?;
                            self.expect(Tok::RParen)?;
                            if op == "forAll" {
                                Expr::new(
                                    ExprKind::ForAll(Box::new(expr), var, Box::new(body)),
                                    pos,
                                )
                            } else {
                                Expr::new(
                                    ExprKind::Exists(Box::new(expr), var, Box::new(body)),
                                    pos,
                                )
                            }
                        }
                        other => {
                            self.error_here(format!(
                                "unknown collection operation `{other}` (size, includes, forAll, exists)"
                            ));
                            return Err(());
                        }
                    };
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn parse_primary(&mut self) -> Result<Expr, ()> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(_) | Tok::Minus | Tok::Str(_) | Tok::Kw("true") | Tok::Kw("false") => {
                let lit = self.parse_literal()?;
                Ok(Expr::new(
                    match lit {
                        Literal::Int(v) => ExprKind::IntLit(v),
                        Literal::Bool(v) => ExprKind::BoolLit(v),
                        Literal::Str(v) => ExprKind::StrLit(v),
                    },
                    pos,
                ))
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(Expr::new(ExprKind::Name(name), pos))
            }
            Tok::LParen => {
                self.advance();
                let expr = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(expr)
            }
            other => {
                let msg = format!("expected an expression, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }
}

/// Builds a navigation expression from a dotted name chain.
fn nav_expr(names: &[(String, Pos)]) -> Expr {
    let (first, first_pos) = &names[0];
    let mut expr = Expr::new(ExprKind::Name(first.clone()), *first_pos);
    for (name, pos) in &names[1..] {
        expr = Expr::new(ExprKind::Attr(Box::new(expr), name.clone()), *pos);
    }
    expr
}

/// Parses a single constraint expression (used by tools and tests).
pub fn parse_expression(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let lexed = lex(text);
    if !lexed.diags.is_empty() {
        return Err(lexed.diags);
    }
    let mut parser = Parser {
        tokens: &lexed.tokens,
        i: 0,
        diags: Vec::new(),
    };
    match parser.parse_expr() {
        Ok(expr) if parser.diags.is_empty() && *parser.peek() == Tok::Eof => Ok(expr),
        _ => {
            if parser.diags.is_empty() {
                parser.error_here("trailing input after expression");
            }
            Err(parser.diags)
        }
    }
}

/// Parses a single literal (used for CLI parameters).
pub fn parse_literal_text(text: &str) -> Result<Literal, Vec<Diagnostic>> {
    let lexed = lex(text);
    if !lexed.diags.is_empty() {
        return Err(lexed.diags);
    }
    let mut parser = Parser {
        tokens: &lexed.tokens,
        i: 0,
        diags: Vec::new(),
    };
    match parser.parse_literal() {
        Ok(lit) if parser.diags.is_empty() && *parser.peek() == Tok::Eof => Ok(lit),
        _ => {
            if parser.diags.is_empty() {
                parser.error_here("trailing input after literal");
            }
            Err(parser.diags)
        }
    }
}

/// Parses a comma-separated literal list (used for `--clone`).
pub fn parse_literal_list(text: &str) -> Result<Vec<Literal>, Vec<Diagnostic>> {
    let lexed = lex(text);
    if !lexed.diags.is_empty() {
        return Err(lexed.diags);
    }
    let mut parser = Parser {
        tokens: &lexed.tokens,
        i: 0,
        diags: Vec::new(),
    };
    let mut out = Vec::new();
    loop {
        match parser.parse_literal() {
            Ok(lit) => out.push(lit),
            Err(()) => return Err(parser.diags),
        }
        match parser.peek() {
            Tok::Comma => {
                parser.advance();
            }
            Tok::Eof => break,
            _ => {
                parser.error_here("expected `,` or end of list");
                return Err(parser.diags);
            }
        }
    }
    Ok(out)
}
