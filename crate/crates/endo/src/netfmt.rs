//! The `.endo` network description format.
//!
//! Line oriented; `#` starts a comment; whitespace within a line is free.
//!
//! ```text
//! node <id> [intuition <b> <c>] [threshold <T>] [label "<text>"]
//! support <src> -> <dst> <s>
//! meta <endorser> -> (<src> -> <dst>) <t>
//! xor <dst> { <id> [, <id>]* } [inhibition <l>] [metric belief|combined]
//! ```
//!
//! Ids may be declared anywhere in the file (two-pass resolution). Parsing
//! collects every violation instead of stopping at the first; serialization
//! is canonical (sorted sections, defaults omitted, shortest round-trip
//! number rendering), so `parse(serialize(n)) == n` and serialization is
//! byte-stable.

use std::fmt;

use crate::model::{Network, NetworkBuilder, PropositionNode, Violation, WinnerMetric};
use crate::model::{Intuition, DEFAULT_THRESHOLD};

/// Position of a diagnostic in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

/// One problem found while parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

impl Diagnostic {
    fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Word(String),
    Number(f64),
    Str(String),
    Arrow,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    span: SourceSpan,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn tokenize_line(line: &str, line_no: usize) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan {
            line: line_no,
            column: i + 1,
        };
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(Token {
                kind: TokenKind::Arrow,
                span,
            });
            i += 2;
        } else if c == '(' || c == ')' || c == '{' || c == '}' || c == ',' {
            let kind = match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                _ => TokenKind::Comma,
            };
            tokens.push(Token { kind, span });
            i += 1;
        } else if c == '"' {
            let mut text = String::new();
            let mut j = i + 1;
            let mut closed = false;
            while j < chars.len() {
                match chars[j] {
                    '\\' => {
                        match chars.get(j + 1) {
                            Some('\\') => text.push('\\'),
                            Some('"') => text.push('"'),
                            Some('n') => text.push('\n'),
                            Some('t') => text.push('\t'),
                            other => {
                                return Err(Diagnostic::new(
                                    SourceSpan {
                                        line: line_no,
                                        column: j + 1,
                                    },
                                    format!(
                                        "unknown escape `\\{}`",
                                        other.map(|c| c.to_string()).unwrap_or_default()
                                    ),
                                ))
                            }
                        }
                        j += 2;
                    }
                    '"' => {
                        closed = true;
                        break;
                    }
                    other => {
                        text.push(other);
                        j += 1;
                    }
                }
            }
            if !closed {
                return Err(Diagnostic::new(span, "unterminated string"));
            }
            tokens.push(Token {
                kind: TokenKind::Str(text),
                span,
            });
            i = j + 1;
        } else if is_word_start(c) {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j]) {
                // stop before an arrow so `a->b` splits into three tokens
                if chars[j] == '-' && chars.get(j + 1) == Some(&'>') {
                    break;
                }
                j += 1;
            }
            // identifiers never end in `-`
            while j > i + 1 && chars[j - 1] == '-' {
                j -= 1;
            }
            tokens.push(Token {
                kind: TokenKind::Word(chars[i..j].iter().collect()),
                span,
            });
            i = j;
        } else if c.is_ascii_digit() || c == '.' || c == '+' || c == '-' {
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_ascii_digit()
                    || chars[j] == '.'
                    || chars[j] == 'e'
                    || chars[j] == 'E'
                    || ((chars[j] == '+' || chars[j] == '-')
                        && matches!(chars[j - 1], 'e' | 'E')))
            {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    tokens.push(Token {
                        kind: TokenKind::Number(v),
                        span,
                    });
                    i = j;
                }
                _ => return Err(Diagnostic::new(span, format!("malformed number `{text}`"))),
            }
        } else {
            return Err(Diagnostic::new(span, format!("unexpected character `{c}`")));
        }
    }
    Ok(tokens)
}

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    line_len: usize,
}

impl Cursor {
    fn new(tokens: Vec<Token>, line: usize, line_len: usize) -> Self {
        Cursor {
            tokens,
            pos: 0,
            line,
            line_len,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> SourceSpan {
        self.tokens
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or(SourceSpan {
                line: self.line,
                column: self.line_len + 1,
            })
    }

    fn expect_word(&mut self, what: &str) -> Result<(String, SourceSpan), Diagnostic> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Word(w),
                span,
            }) => Ok((w, span)),
            Some(t) => Err(Diagnostic::new(t.span, format!("expected {what}"))),
            None => Err(Diagnostic::new(self.here(), format!("expected {what}"))),
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<(f64, SourceSpan), Diagnostic> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Number(v),
                span,
            }) => Ok((v, span)),
            Some(t) => Err(Diagnostic::new(t.span, format!("expected {what}"))),
            None => Err(Diagnostic::new(self.here(), format!("expected {what}"))),
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> Result<SourceSpan, Diagnostic> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(t.span),
            Some(t) => Err(Diagnostic::new(t.span, format!("expected {what}"))),
            None => Err(Diagnostic::new(self.here(), format!("expected {what}"))),
        }
    }

    fn expect_end(&mut self) -> Result<(), Diagnostic> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(Diagnostic::new(t.span, "unexpected trailing input")),
        }
    }
}

struct NodeStmt {
    id: String,
    span: SourceSpan,
    intuition: Option<(f64, f64)>,
    threshold: Option<f64>,
    label: Option<String>,
}

struct SupportStmt {
    src: String,
    dst: String,
    strength: f64,
    span: SourceSpan,
}

struct MetaStmt {
    endorser: String,
    src: String,
    dst: String,
    strength: f64,
    span: SourceSpan,
}

struct XorStmt {
    target: String,
    members: Vec<String>,
    inhibition: Option<f64>,
    metric: Option<WinnerMetric>,
    span: SourceSpan,
}

enum Stmt {
    Node(NodeStmt),
    Support(SupportStmt),
    Meta(MetaStmt),
    Xor(XorStmt),
}

fn check_span_range(
    what: &str,
    value: f64,
    min: f64,
    max: f64,
    span: SourceSpan,
) -> Result<(), Diagnostic> {
    if value >= min && value <= max {
        Ok(())
    } else {
        Err(Diagnostic::new(
            span,
            format!("{what} must be within [{min}, {max}], got {value}"),
        ))
    }
}

fn check_strength(what: &str, value: f64, span: SourceSpan) -> Result<(), Diagnostic> {
    if value == 0.0 {
        return Err(Diagnostic::new(span, format!("{what} must be nonzero")));
    }
    check_span_range(what, value, -1.0, 1.0, span)
}

fn parse_stmt(cursor: &mut Cursor) -> Result<Option<Stmt>, Diagnostic> {
    let Some(first) = cursor.next() else {
        return Ok(None);
    };
    let keyword = match first.kind {
        TokenKind::Word(ref w) => w.as_str(),
        _ => return Err(Diagnostic::new(first.span, "expected a statement keyword")),
    };
    let stmt = match keyword {
        "node" => {
            let (id, span) = cursor.expect_word("node id")?;
            let mut stmt = NodeStmt {
                id,
                span,
                intuition: None,
                threshold: None,
                label: None,
            };
            while let Some(tok) = cursor.next() {
                match tok.kind {
                    TokenKind::Word(w) if w == "intuition" => {
                        if stmt.intuition.is_some() {
                            return Err(Diagnostic::new(tok.span, "duplicate `intuition`"));
                        }
                        let (b, bspan) = cursor.expect_number("intuition belief")?;
                        let (c, cspan) = cursor.expect_number("intuition certainty")?;
                        check_span_range("belief", b, -1.0, 1.0, bspan)?;
                        check_span_range("certainty", c, 0.0, 1.0, cspan)?;
                        stmt.intuition = Some((b, c));
                    }
                    TokenKind::Word(w) if w == "threshold" => {
                        if stmt.threshold.is_some() {
                            return Err(Diagnostic::new(tok.span, "duplicate `threshold`"));
                        }
                        let (t, tspan) = cursor.expect_number("threshold")?;
                        check_span_range("threshold", t, 0.0, 2.0, tspan)?;
                        stmt.threshold = Some(t);
                    }
                    TokenKind::Word(w) if w == "label" => {
                        if stmt.label.is_some() {
                            return Err(Diagnostic::new(tok.span, "duplicate `label`"));
                        }
                        match cursor.next() {
                            Some(Token {
                                kind: TokenKind::Str(s),
                                ..
                            }) => stmt.label = Some(s),
                            Some(t) => {
                                return Err(Diagnostic::new(t.span, "expected a quoted label"))
                            }
                            None => {
                                return Err(Diagnostic::new(
                                    cursor.here(),
                                    "expected a quoted label",
                                ))
                            }
                        }
                    }
                    _ => {
                        return Err(Diagnostic::new(
                            tok.span,
                            "expected `intuition`, `threshold` or `label`",
                        ))
                    }
                }
            }
            Stmt::Node(stmt)
        }
        "support" => {
            let (src, span) = cursor.expect_word("source id")?;
            cursor.expect_kind(TokenKind::Arrow, "`->`")?;
            let (dst, _) = cursor.expect_word("destination id")?;
            let (strength, sspan) = cursor.expect_number("support strength")?;
            check_strength("support strength", strength, sspan)?;
            cursor.expect_end()?;
            Stmt::Support(SupportStmt {
                src,
                dst,
                strength,
                span,
            })
        }
        "meta" => {
            let (endorser, span) = cursor.expect_word("endorser id")?;
            cursor.expect_kind(TokenKind::Arrow, "`->`")?;
            cursor.expect_kind(TokenKind::LParen, "`(`")?;
            let (src, _) = cursor.expect_word("source id")?;
            cursor.expect_kind(TokenKind::Arrow, "`->`")?;
            let (dst, _) = cursor.expect_word("destination id")?;
            cursor.expect_kind(TokenKind::RParen, "`)`")?;
            let (strength, sspan) = cursor.expect_number("meta strength")?;
            check_strength("meta strength", strength, sspan)?;
            cursor.expect_end()?;
            Stmt::Meta(MetaStmt {
                endorser,
                src,
                dst,
                strength,
                span,
            })
        }
        "xor" => {
            let (target, span) = cursor.expect_word("target id")?;
            cursor.expect_kind(TokenKind::LBrace, "`{`")?;
            let mut members = Vec::new();
            loop {
                let (member, _) = cursor.expect_word("member id")?;
                members.push(member);
                match cursor.next() {
                    Some(Token {
                        kind: TokenKind::Comma,
                        ..
                    }) => continue,
                    Some(Token {
                        kind: TokenKind::RBrace,
                        ..
                    }) => break,
                    Some(t) => return Err(Diagnostic::new(t.span, "expected `,` or `}`")),
                    None => return Err(Diagnostic::new(cursor.here(), "expected `,` or `}`")),
                }
            }
            let mut inhibition = None;
            let mut metric = None;
            while let Some(tok) = cursor.next() {
                match tok.kind {
                    TokenKind::Word(w) if w == "inhibition" => {
                        if inhibition.is_some() {
                            return Err(Diagnostic::new(tok.span, "duplicate `inhibition`"));
                        }
                        let (v, vspan) = cursor.expect_number("inhibition level")?;
                        check_span_range("inhibition", v, 0.0, 1.0, vspan)?;
                        inhibition = Some(v);
                    }
                    TokenKind::Word(w) if w == "metric" => {
                        if metric.is_some() {
                            return Err(Diagnostic::new(tok.span, "duplicate `metric`"));
                        }
                        let (m, mspan) = cursor.expect_word("`belief` or `combined`")?;
                        metric = Some(match m.as_str() {
                            "belief" => WinnerMetric::Belief,
                            "combined" => WinnerMetric::Combined,
                            _ => {
                                return Err(Diagnostic::new(
                                    mspan,
                                    "expected `belief` or `combined`",
                                ))
                            }
                        });
                    }
                    _ => {
                        return Err(Diagnostic::new(
                            tok.span,
                            "expected `inhibition` or `metric`",
                        ))
                    }
                }
            }
            Stmt::Xor(XorStmt {
                target,
                members,
                inhibition,
                metric,
                span,
            })
        }
        other => {
            return Err(Diagnostic::new(
                first.span,
                format!("unknown statement `{other}`"),
            ))
        }
    };
    Ok(Some(stmt))
}

/// Parse `.endo` text into a network, or return every diagnostic found.
pub fn parse(text: &str) -> Result<Network, Vec<Diagnostic>> {
    let mut stmts = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let line_no = idx + 1;
        match tokenize_line(line, line_no) {
            Ok(tokens) => {
                if tokens.is_empty() {
                    continue;
                }
                let mut cursor = Cursor::new(tokens, line_no, line.chars().count());
                match parse_stmt(&mut cursor) {
                    Ok(Some(stmt)) => stmts.push(stmt),
                    Ok(None) => {}
                    Err(d) => diagnostics.push(d),
                }
            }
            Err(d) => diagnostics.push(d),
        }
    }

    let mut builder = NetworkBuilder::new();
    let mut node_spans: Vec<(String, SourceSpan)> = Vec::new();

    // nodes first so later statements can reference ids declared anywhere
    for stmt in &stmts {
        let Stmt::Node(n) = stmt else { continue };
        let added = (|| -> Result<(), crate::error::ModelError> {
            let mut p = PropositionNode::new(n.id.as_str())?;
            if let Some((b, c)) = n.intuition {
                p = p.with_intuition(Intuition::new(b, c)?);
            }
            if let Some(t) = n.threshold {
                p = p.with_threshold(t)?;
            }
            if let Some(label) = &n.label {
                p = p.with_label(label.clone());
            }
            builder.add_node(p)?;
            Ok(())
        })();
        match added {
            Ok(()) => node_spans.push((n.id.clone(), n.span)),
            Err(e) => diagnostics.push(Diagnostic::new(n.span, e.to_string())),
        }
    }
    for stmt in &stmts {
        if let Stmt::Support(s) = stmt {
            if let Err(e) = builder.add_edge(&s.src, &s.dst, s.strength) {
                diagnostics.push(Diagnostic::new(s.span, e.to_string()));
            }
        }
    }
    for stmt in &stmts {
        if let Stmt::Meta(m) = stmt {
            if let Err(e) = builder.add_meta(&m.endorser, &m.src, &m.dst, m.strength) {
                diagnostics.push(Diagnostic::new(m.span, e.to_string()));
            }
        }
    }
    for stmt in &stmts {
        if let Stmt::Xor(x) = stmt {
            let members = x.members.iter().map(String::as_str);
            if let Err(e) = builder.add_cluster(
                &x.target,
                members,
                x.inhibition.unwrap_or(1.0),
                x.metric.unwrap_or_default(),
            ) {
                diagnostics.push(Diagnostic::new(x.span, e.to_string()));
            }
        }
    }

    match builder.build() {
        Ok(network) if diagnostics.is_empty() => Ok(network),
        Ok(_) => {
            diagnostics.sort_by_key(|d| (d.span.line, d.span.column));
            Err(diagnostics)
        }
        Err(report) => {
            for violation in report.violations() {
                let span = match violation {
                    Violation::SourceLacksIntuition { node } => node_spans
                        .iter()
                        .find(|(id, _)| id == node.as_str())
                        .map(|(_, span)| *span),
                    _ => None,
                }
                .unwrap_or(SourceSpan { line: 1, column: 1 });
                diagnostics.push(Diagnostic::new(span, violation.to_string()));
            }
            diagnostics.sort_by_key(|d| (d.span.line, d.span.column));
            Err(diagnostics)
        }
    }
}

fn fmt_num(v: f64) -> String {
    // shortest representation that parses back to the same f64
    format!("{v}")
}

fn escape_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len() + 2);
    out.push('"');
    for c in label.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// Render a network in canonical form: nodes, supports, metas, clusters,
/// each section sorted, defaults omitted. Parsing the output reproduces the
/// network exactly.
pub fn serialize(network: &Network) -> String {
    let mut out = String::new();
    for node in network.nodes() {
        out.push_str("node ");
        out.push_str(node.id().as_str());
        if let Some(i) = node.intuition() {
            out.push_str(" intuition ");
            out.push_str(&fmt_num(i.belief()));
            out.push(' ');
            out.push_str(&fmt_num(i.certainty()));
        }
        if node.threshold() != DEFAULT_THRESHOLD {
            out.push_str(" threshold ");
            out.push_str(&fmt_num(node.threshold()));
        }
        if let Some(label) = node.label() {
            out.push_str(" label ");
            out.push_str(&escape_label(label));
        }
        out.push('\n');
    }
    for edge in network.edges() {
        out.push_str("support ");
        out.push_str(edge.src().as_str());
        out.push_str(" -> ");
        out.push_str(edge.dst().as_str());
        out.push(' ');
        out.push_str(&fmt_num(edge.base_strength()));
        out.push('\n');
    }
    for edge in network.edges() {
        for meta in edge.meta() {
            out.push_str("meta ");
            out.push_str(meta.endorser().as_str());
            out.push_str(" -> (");
            out.push_str(edge.src().as_str());
            out.push_str(" -> ");
            out.push_str(edge.dst().as_str());
            out.push_str(") ");
            out.push_str(&fmt_num(meta.strength()));
            out.push('\n');
        }
    }
    for cluster in network.clusters() {
        out.push_str("xor ");
        out.push_str(cluster.target().as_str());
        out.push_str(" { ");
        let members: Vec<&str> = cluster.members().map(|m| m.as_str()).collect();
        out.push_str(&members.join(", "));
        out.push_str(" }");
        if cluster.inhibition() != 1.0 {
            out.push_str(" inhibition ");
            out.push_str(&fmt_num(cluster.inhibition()));
        }
        if cluster.metric() != WinnerMetric::Belief {
            out.push_str(" metric combined");
        }
        out.push('\n');
    }
    out
}
