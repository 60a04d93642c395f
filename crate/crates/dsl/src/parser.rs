//! Recursive-descent parser from tokens to a span-carrying AST. All
//! name resolution happens later, in [`crate::lower`]; the parser only
//! enforces shape.

use fairadapt_core::model::CmpOp;

use crate::diag::{self, Diagnostic, SourceSpan};
use crate::lexer::{lex, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindAst {
    Int,
    Bool,
    Text,
    Time,
    Enum(Vec<Spanned<String>>),
    Ref(Spanned<String>),
    Set(Spanned<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathAst {
    pub segments: Vec<Spanned<String>>,
}

impl PathAst {
    /// Span covering the whole dotted path.
    pub fn span(&self) -> SourceSpan {
        let first = &self.segments[0].span;
        let last = &self.segments[self.segments.len() - 1].span;
        let mut s = first.clone();
        if first.line == last.line {
            s.length = (last.column + last.length).saturating_sub(first.column);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiteralAst {
    Int(i64),
    Bool(bool),
    Text(String),
    /// A bare identifier; resolves to an enum value.
    Word(String),
    Time(u16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperandAst {
    Literal(Spanned<LiteralAst>),
    Path(PathAst),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionAst {
    pub lhs: PathAst,
    pub op: CmpOp,
    pub rhs: OperandAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionAst {
    pub name: Spanned<String>,
    pub verb: Spanned<String>,
    pub params: Vec<(Spanned<String>, OperandAst)>,
    pub reads: Vec<Spanned<String>>,
    pub writes: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReqBodyAst {
    Decompose {
        or: bool,
        children: Vec<Spanned<String>>,
    },
    Leaf {
        ofr: Spanned<String>,
        resources: Option<Vec<Spanned<String>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Stakeholder {
        id: Spanned<String>,
        kind: Spanned<String>,
        name: Option<Spanned<String>>,
    },
    Resource {
        id: Spanned<String>,
        fields: Vec<(Spanned<String>, KindAst)>,
    },
    Requirement {
        id: Spanned<String>,
        description: Spanned<String>,
        specified_by: Spanned<String>,
        affects: Vec<Spanned<String>>,
        priority: Option<Spanned<i64>>,
        body: ReqBodyAst,
    },
    Operation {
        id: Spanned<String>,
        ofr: Spanned<String>,
        rule: Vec<ConditionAst>,
        action: ActionAst,
    },
}

pub fn parse_decls(text: &str, file: &str) -> Result<Vec<Decl>, Vec<Diagnostic>> {
    let tokens = lex(text, file)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut decls = Vec::new();
    loop {
        match p.peek().kind.clone() {
            TokenKind::Eof => break,
            TokenKind::Ident(word) => {
                let decl = match word.as_str() {
                    "stakeholder" => p.stakeholder_decl(),
                    "resource" => p.resource_decl(),
                    "requirement" => p.requirement_decl(),
                    "operation" => p.operation_decl(),
                    other => {
                        return Err(vec![Diagnostic::error(
                            diag::UNKNOWN_DECL,
                            format!(
                                "unknown declaration `{other}` (expected stakeholder, \
                                 resource, requirement, or operation)"
                            ),
                            p.peek().span.clone(),
                        )])
                    }
                };
                decls.push(decl.map_err(|d| vec![d])?);
            }
            _ => {
                return Err(vec![Diagnostic::error(
                    diag::UNEXPECTED_TOKEN,
                    "expected a declaration keyword",
                    p.peek().span.clone(),
                )])
            }
        }
    }
    Ok(decls)
}

pub struct Parser {
    pub tokens: Vec<Token>,
    pub pos: usize,
}

impl Parser {
    pub fn new(text: &str, file: &str) -> Result<Self, Vec<Diagnostic>> {
        Ok(Parser {
            tokens: lex(text, file)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn err(&self, message: impl Into<String>) -> Diagnostic {
        let code = if self.at_eof() {
            diag::UNEXPECTED_EOF
        } else {
            diag::UNEXPECTED_TOKEN
        };
        Diagnostic::error(code, message, self.peek().span.clone())
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<Spanned<String>, Diagnostic> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) => {
                let span = self.bump().span;
                Ok(Spanned { value: s, span })
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.err(format!("expected `{kw}`"))),
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<SourceSpan, Diagnostic> {
        match self.peek().kind {
            TokenKind::Punct(p) if p == c => Ok(self.bump().span),
            _ => Err(self.err(format!("expected `{c}`"))),
        }
    }

    fn expect_string(&mut self, what: &str) -> Result<Spanned<String>, Diagnostic> {
        match self.peek().kind.clone() {
            TokenKind::Str(s) => {
                let span = self.bump().span;
                Ok(Spanned { value: s, span })
            }
            _ => Err(self.err(format!("expected {what} (a quoted string)"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if matches!(self.peek().kind, TokenKind::Punct(p) if p == c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// `[ ID, ID, … ]`, possibly empty.
    fn id_list(&mut self) -> Result<Vec<Spanned<String>>, Diagnostic> {
        self.expect_punct('[')?;
        let mut ids = Vec::new();
        if !self.eat_punct(']') {
            loop {
                ids.push(self.expect_ident("an identifier")?);
                if self.eat_punct(']') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        Ok(ids)
    }

    fn stakeholder_decl(&mut self) -> Result<Decl, Diagnostic> {
        self.expect_keyword("stakeholder")?;
        let id = self.expect_ident("a stakeholder id")?;
        self.expect_keyword("kind")?;
        self.expect_punct('=')?;
        let kind = self.expect_ident("a stakeholder kind")?;
        let name = if self.eat_keyword("name") {
            self.expect_punct('=')?;
            Some(self.expect_string("the display name")?)
        } else {
            None
        };
        Ok(Decl::Stakeholder { id, kind, name })
    }

    fn resource_decl(&mut self) -> Result<Decl, Diagnostic> {
        self.expect_keyword("resource")?;
        let id = self.expect_ident("a resource type name")?;
        self.expect_punct('{')?;
        let mut fields = Vec::new();
        while !self.eat_punct('}') {
            let field = self.expect_ident("a field name")?;
            self.expect_punct(':')?;
            let kind = self.field_kind()?;
            self.expect_punct(';')?;
            fields.push((field, kind));
        }
        Ok(Decl::Resource { id, fields })
    }

    fn field_kind(&mut self) -> Result<KindAst, Diagnostic> {
        let kw = self.expect_ident("a field kind")?;
        Ok(match kw.value.as_str() {
            "int" => KindAst::Int,
            "bool" => KindAst::Bool,
            "text" => KindAst::Text,
            "time" => KindAst::Time,
            "enum" => {
                self.expect_punct('(')?;
                let mut variants = Vec::new();
                loop {
                    variants.push(self.expect_ident("an enum variant")?);
                    if self.eat_punct(')') {
                        break;
                    }
                    self.expect_punct(',')?;
                }
                KindAst::Enum(variants)
            }
            "ref" => {
                self.expect_punct('(')?;
                let ty = self.expect_ident("a resource type name")?;
                self.expect_punct(')')?;
                KindAst::Ref(ty)
            }
            "set" => {
                self.expect_punct('(')?;
                let ty = self.expect_ident("a resource type name")?;
                self.expect_punct(')')?;
                KindAst::Set(ty)
            }
            other => {
                return Err(Diagnostic::error(
                    diag::UNKNOWN_KIND,
                    format!("unknown field kind `{other}`"),
                    kw.span,
                ))
            }
        })
    }

    fn requirement_decl(&mut self) -> Result<Decl, Diagnostic> {
        self.expect_keyword("requirement")?;
        let id = self.expect_ident("a requirement id")?;
        let description = self.expect_string("the description")?;
        self.expect_keyword("specified_by")?;
        self.expect_punct('=')?;
        let specified_by = self.expect_ident("a stakeholder id")?;
        self.expect_keyword("affects")?;
        self.expect_punct('=')?;
        let affects = self.id_list()?;
        let priority = if self.eat_keyword("priority") {
            self.expect_punct('=')?;
            match self.peek().kind {
                TokenKind::Int(n) => {
                    let span = self.bump().span;
                    Some(Spanned { value: n, span })
                }
                _ => return Err(self.err("expected an integer priority")),
            }
        } else {
            None
        };
        let body = if self.eat_keyword("decompose") {
            let kw = self.expect_ident("`AND` or `OR`")?;
            let or = match kw.value.as_str() {
                "AND" => false,
                "OR" => true,
                other => {
                    return Err(Diagnostic::error(
                        diag::UNEXPECTED_TOKEN,
                        format!("expected `AND` or `OR`, found `{other}`"),
                        kw.span,
                    ))
                }
            };
            self.expect_punct('{')?;
            let mut children = Vec::new();
            loop {
                children.push(self.expect_ident("a child requirement id")?);
                if self.eat_punct('}') {
                    break;
                }
                self.expect_punct(',')?;
            }
            ReqBodyAst::Decompose { or, children }
        } else if self.eat_keyword("leaf") {
            let ofr = self.expect_ident("an operational requirement id")?;
            let resources = if self.eat_keyword("resources") {
                self.expect_punct('=')?;
                Some(self.id_list()?)
            } else {
                None
            };
            ReqBodyAst::Leaf { ofr, resources }
        } else {
            return Err(self.err("expected `decompose` or `leaf`"));
        };
        Ok(Decl::Requirement {
            id,
            description,
            specified_by,
            affects,
            priority,
            body,
        })
    }

    fn operation_decl(&mut self) -> Result<Decl, Diagnostic> {
        self.expect_keyword("operation")?;
        let id = self.expect_ident("an operation id")?;
        self.expect_keyword("for")?;
        let ofr = self.expect_ident("an operational requirement id")?;
        self.expect_punct('{')?;
        self.expect_keyword("rule")?;
        self.expect_punct(':')?;
        let mut rule = vec![self.condition()?];
        while self.eat_keyword("and") {
            rule.push(self.condition()?);
        }
        self.expect_punct(';')?;
        self.expect_keyword("action")?;
        self.expect_punct(':')?;
        let action = self.action()?;
        self.expect_punct(';')?;
        self.expect_punct('}')?;
        Ok(Decl::Operation {
            id,
            ofr,
            rule,
            action,
        })
    }

    fn condition(&mut self) -> Result<ConditionAst, Diagnostic> {
        let lhs = self.path()?;
        let op = match self.peek().kind {
            TokenKind::Cmp(sym) => {
                self.bump();
                match sym {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    ">=" => CmpOp::Ge,
                    "==" => CmpOp::Eq,
                    _ => CmpOp::Ne,
                }
            }
            _ => return Err(self.err("expected a comparison operator")),
        };
        let rhs = self.operand()?;
        Ok(ConditionAst { lhs, op, rhs })
    }

    fn path(&mut self) -> Result<PathAst, Diagnostic> {
        let mut segments = vec![self.expect_ident("a resource path")?];
        while self.eat_punct('.') {
            segments.push(self.expect_ident("a field name")?);
        }
        Ok(PathAst { segments })
    }

    pub fn operand(&mut self) -> Result<OperandAst, Diagnostic> {
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                let span = self.bump().span;
                Ok(OperandAst::Literal(Spanned {
                    value: LiteralAst::Int(n),
                    span,
                }))
            }
            TokenKind::Time(t) => {
                let span = self.bump().span;
                Ok(OperandAst::Literal(Spanned {
                    value: LiteralAst::Time(t),
                    span,
                }))
            }
            TokenKind::Str(s) => {
                let span = self.bump().span;
                Ok(OperandAst::Literal(Spanned {
                    value: LiteralAst::Text(s),
                    span,
                }))
            }
            TokenKind::Ident(word) => {
                if matches!(self.peek2().kind, TokenKind::Punct('.')) {
                    Ok(OperandAst::Path(self.path()?))
                } else {
                    let span = self.bump().span;
                    let value = match word.as_str() {
                        "true" => LiteralAst::Bool(true),
                        "false" => LiteralAst::Bool(false),
                        _ => LiteralAst::Word(word),
                    };
                    Ok(OperandAst::Literal(Spanned { value, span }))
                }
            }
            _ => Err(self.err("expected a literal or a path")),
        }
    }

    fn action(&mut self) -> Result<ActionAst, Diagnostic> {
        let first = self.expect_ident("an action name or verb")?;
        // `name verb(...)` in canonical form; a bare `verb(...)` names the
        // action after its verb.
        let (name, verb) = if matches!(self.peek().kind, TokenKind::Ident(_)) {
            (first, self.expect_ident("a verb")?)
        } else {
            (first.clone(), first)
        };
        self.expect_punct('(')?;
        let mut params = Vec::new();
        if !self.eat_punct(')') {
            loop {
                let key = self.expect_ident("a parameter name")?;
                self.expect_punct('=')?;
                let value = self.operand()?;
                params.push((key, value));
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        let reads = if self.eat_keyword("reads") {
            self.id_list()?
        } else {
            Vec::new()
        };
        self.expect_keyword("writes")?;
        let writes = self.id_list()?;
        Ok(ActionAst {
            name,
            verb,
            params,
            reads,
            writes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_operation() {
        let text = "operation OP1 for OF1 {\n  rule: Shopper.age < 65 and Clock.time > 10:00;\n  action: send_away redirect_out() writes [Shopper];\n}\n";
        let decls = parse_decls(text, "t.frm").unwrap();
        assert_eq!(decls.len(), 1);
        match &decls[0] {
            Decl::Operation { id, ofr, rule, action } => {
                assert_eq!(id.value, "OP1");
                assert_eq!(ofr.value, "OF1");
                assert_eq!(rule.len(), 2);
                assert_eq!(action.verb.value, "redirect_out");
                assert_eq!(action.writes[0].value, "Shopper");
            }
            other => panic!("unexpected decl {other:?}"),
        }
    }

    #[test]
    fn bare_verb_action_takes_the_verb_as_name() {
        let text = "operation OP1 for OF1 {\n  rule: Shopper.age < 65;\n  action: redirect_out() writes [Shopper];\n}\n";
        match &parse_decls(text, "t").unwrap()[0] {
            Decl::Operation { action, .. } => {
                assert_eq!(action.name.value, "redirect_out");
                assert_eq!(action.verb.value, "redirect_out");
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_declaration_keyword_is_e005() {
        let errs = parse_decls("gadget X", "t").unwrap_err();
        assert_eq!(errs[0].code, crate::diag::UNKNOWN_DECL);
    }

    #[test]
    fn missing_brace_is_reported_at_eof() {
        let errs = parse_decls("resource R { x: int;", "t").unwrap_err();
        assert_eq!(errs[0].code, crate::diag::UNEXPECTED_EOF);
    }

    #[test]
    fn requirement_with_decomposition() {
        let text = "requirement FR1 \"elder window\" specified_by = shop affects = [a, b] priority = 5 decompose OR { FR1_1, FR1_2 }";
        match &parse_decls(text, "t").unwrap()[0] {
            Decl::Requirement { priority, body, .. } => {
                assert_eq!(priority.as_ref().unwrap().value, 5);
                match body {
                    ReqBodyAst::Decompose { or, children } => {
                        assert!(*or);
                        assert_eq!(children.len(), 2);
                    }
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        }
    }
}
