//! Recursive-descent recognizer for the Java expression subset accepted in
//! `EXPR` and `EXPR_LIST` values. The grammar is written out in
//! `docs/expression.ebnf`.
//!
//! Only syntax is checked. Identifiers are never resolved.

use std::fmt;

use crate::lexer::{self, Delim, Span, TokenKind, TokenTree};
use crate::names;
use crate::source_model::PRIMITIVES;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    /// Byte offset into the checked text.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

type PResult<T> = Result<T, ExprError>;

fn trees_of(src: &str) -> PResult<Vec<TokenTree>> {
    let tokens = lexer::lex(src).map_err(|e| ExprError { offset: e.offset, message: e.message })?;
    if let Some(t) = tokens.iter().find(|t| t.kind == TokenKind::Unknown) {
        return Err(ExprError { offset: t.span.start, message: format!("unexpected character `{}`", t.text(src)) });
    }
    lexer::build_trees(&tokens).map_err(|e| ExprError { offset: e.offset, message: e.message })
}

/// Check that `src` is exactly one expression.
pub fn parse_expression(src: &str) -> PResult<()> {
    let trees = trees_of(src)?;
    if trees.is_empty() {
        return Err(ExprError { offset: 0, message: "empty expression".into() });
    }
    let mut c = Cursor::new(&trees, src, src.len());
    c.expression()?;
    c.finish()
}

/// Check a comma-separated list of expressions and return the span of each
/// element. Empty (or blank) input is the empty list.
pub fn parse_expression_list(src: &str) -> PResult<Vec<Span>> {
    let trees = trees_of(src)?;
    if trees.is_empty() {
        return Ok(Vec::new());
    }
    let mut c = Cursor::new(&trees, src, src.len());
    let mut spans = Vec::new();
    loop {
        let start = c.offset();
        c.expression()?;
        spans.push(Span::new(start, c.last_end));
        if c.eat(",") {
            if c.at_end() {
                return Err(c.error("expected an expression after `,`"));
            }
            continue;
        }
        c.finish()?;
        return Ok(spans);
    }
}

/// Delimiter-balanced text, the lenient fallback.
pub fn is_balanced(src: &str) -> bool {
    lexer::lex(src).ok().and_then(|t| lexer::build_trees(&t).ok()).is_some()
}

struct Cursor<'t> {
    trees: &'t [TokenTree],
    src: &'t str,
    pos: usize,
    /// Where errors at the end of this sequence are reported.
    end_offset: usize,
    last_end: usize,
}

const BINARY_PRECEDENCE: &[(&str, u8)] = &[
    ("||", 1),
    ("&&", 2),
    ("|", 3),
    ("^", 4),
    ("&", 5),
    ("==", 6),
    ("!=", 6),
    ("<", 7),
    (">", 7),
    ("<=", 7),
    (">=", 7),
    ("instanceof", 7),
    ("<<", 8),
    (">>", 8),
    (">>>", 8),
    ("+", 9),
    ("-", 9),
    ("*", 10),
    ("/", 10),
    ("%", 10),
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

impl<'t> Cursor<'t> {
    fn new(trees: &'t [TokenTree], src: &'t str, end_offset: usize) -> Self {
        Cursor { trees, src, pos: 0, end_offset, last_end: trees.first().map_or(0, |t| t.span().start) }
    }

    fn sub(&self, g: &'t lexer::Group) -> Cursor<'t> {
        let mut c = Cursor::new(&g.children, self.src, g.close.span.start);
        c.last_end = g.open.span.end;
        c
    }

    fn peek(&self) -> Option<&'t TokenTree> {
        self.trees.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenTree> {
        self.trees.get(self.pos + n)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.trees.len()
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end_offset, |t| t.span().start)
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        let message = message.into();
        let message = match self.peek() {
            Some(t) => format!("{message}, found `{}`", t.span().slice(self.src)),
            None => format!("{message}, found end of input"),
        };
        ExprError { offset: self.offset(), message }
    }

    fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            if let Some(t) = self.peek() {
                self.last_end = t.span().end;
                self.pos += 1;
            }
        }
    }

    fn is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is_text(self.src, text))
    }

    fn is_at(&self, n: usize, text: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_text(self.src, text))
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.advance(1);
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{text}`")))
        }
    }

    fn peek_group(&self, delim: Delim) -> Option<&'t lexer::Group> {
        self.peek().and_then(TokenTree::as_group).filter(|g| g.delim == delim)
    }

    fn peek_ident(&self) -> Option<&'t str> {
        match self.peek() {
            Some(TokenTree::Leaf(t)) if t.kind == TokenKind::Ident => Some(t.text(self.src)),
            _ => None,
        }
    }

    fn expect_identifier(&mut self) -> PResult<&'t str> {
        match self.peek_ident() {
            Some(s) if names::is_identifier(s) => {
                self.advance(1);
                Ok(s)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    /// Operator at the cursor and the number of tokens it spans. Adjacent `>`
    /// tokens (and a trailing `=`) are reassembled here.
    fn peek_op(&self) -> Option<(String, usize)> {
        let first = self.peek()?.as_leaf()?;
        let text = first.text(self.src);
        if first.kind == TokenKind::Ident {
            return (text == "instanceof").then(|| (text.to_string(), 1));
        }
        if first.kind != TokenKind::Punct {
            return None;
        }
        if text != ">" {
            return Some((text.to_string(), 1));
        }
        let mut op = String::from(">");
        let mut n = 1;
        let mut end = first.span.end;
        while let Some(TokenTree::Leaf(t)) = self.peek_at(n) {
            let tt = t.text(self.src);
            if t.span.start != end {
                break;
            }
            if tt == ">" && op.len() < 3 && !op.ends_with('=') {
                op.push('>');
            } else if tt == "=" && !op.ends_with('=') {
                op.push('=');
            } else {
                break;
            }
            n += 1;
            end = t.span.end;
        }
        Some((op, n))
    }

    fn expression(&mut self) -> PResult<()> {
        if self.at_lambda() {
            return self.lambda();
        }
        self.ternary()?;
        if let Some((op, n)) = self.peek_op() {
            if ASSIGN_OPS.contains(&op.as_str()) {
                self.advance(n);
                return self.expression();
            }
        }
        Ok(())
    }

    fn at_lambda(&self) -> bool {
        let arrow_next = self.is_at(1, "->");
        arrow_next && (self.peek_ident().is_some() || self.peek_group(Delim::Paren).is_some())
    }

    fn lambda(&mut self) -> PResult<()> {
        if let Some(g) = self.peek_group(Delim::Paren) {
            self.lambda_params(g)?;
        } else {
            self.expect_identifier()?;
        }
        self.advance(1); // `->`
        if self.peek_group(Delim::Brace).is_some() {
            // block bodies are taken as balanced token trees
            self.advance(1);
            Ok(())
        } else if self.at_end() {
            Err(self.error("expected a lambda body"))
        } else {
            self.expression()
        }
    }

    fn lambda_params(&mut self, g: &'t lexer::Group) -> PResult<()> {
        let mut c = self.sub(g);
        self.advance(1);
        if c.at_end() {
            return Ok(());
        }
        loop {
            c.eat("final");
            // `x` alone, or a declared type (`var` included) followed by the name
            if c.peek_ident().is_some() && (c.is_at(1, ",") || c.peek_at(1).is_none()) {
                c.expect_identifier()?;
            } else {
                if !c.eat("var") {
                    c.parse_type(false)?;
                }
                c.expect_identifier()?;
            }
            if !c.eat(",") {
                return c.finish();
            }
        }
    }

    fn ternary(&mut self) -> PResult<()> {
        self.binary(1)?;
        if self.eat("?") {
            self.expression()?;
            self.expect(":")?;
            if self.at_lambda() {
                return self.lambda();
            }
            self.ternary()?;
        }
        Ok(())
    }

    fn binary(&mut self, min_prec: u8) -> PResult<()> {
        self.unary()?;
        loop {
            let Some((op, n)) = self.peek_op() else { return Ok(()) };
            let Some(&(_, prec)) = BINARY_PRECEDENCE.iter().find(|(o, _)| *o == op) else {
                return Ok(());
            };
            if prec < min_prec {
                return Ok(());
            }
            self.advance(n);
            if op == "instanceof" {
                self.eat("final");
                self.parse_type(false)?;
                // type pattern binding
                if self.peek_ident().is_some_and(names::is_identifier) {
                    self.advance(1);
                }
                continue;
            }
            self.binary(prec + 1)?;
        }
    }

    fn unary(&mut self) -> PResult<()> {
        if let Some((op, n)) = self.peek_op() {
            if matches!(op.as_str(), "+" | "-" | "++" | "--" | "!" | "~") {
                self.advance(n);
                return self.unary();
            }
        }
        if let Some(g) = self.peek_group(Delim::Paren) {
            if let Some(primitive) = self.cast_type(g) {
                let operand_ok = match self.peek_at(1) {
                    None => false,
                    Some(t) if primitive => !t.is_text(self.src, "->"),
                    Some(_) => self.starts_unary_not_plus_minus(1),
                };
                if operand_ok {
                    self.advance(1);
                    if self.at_lambda() {
                        return self.lambda();
                    }
                    return self.unary();
                }
            }
        }
        self.postfix()
    }

    /// `Some(is_primitive)` when the group holds exactly one type.
    fn cast_type(&self, g: &'t lexer::Group) -> Option<bool> {
        let mut c = self.sub(g);
        if c.at_end() {
            return None;
        }
        let primitive = c.peek_ident().is_some_and(|s| PRIMITIVES.contains(&s) && s != "void");
        c.parse_type(false).ok()?;
        // intersection casts: (A & B) x
        while c.eat("&") {
            c.parse_type(false).ok()?;
        }
        c.at_end().then_some(primitive)
    }

    fn starts_unary_not_plus_minus(&self, n: usize) -> bool {
        match self.peek_at(n) {
            Some(TokenTree::Group(g)) => g.delim == Delim::Paren,
            Some(TokenTree::Leaf(t)) => match t.kind {
                TokenKind::Ident => {
                    let s = t.text(self.src);
                    s != "instanceof" && (names::is_identifier(s) || matches!(s, "this" | "super" | "new" | "true" | "false" | "null"))
                }
                k if k.is_literal() => true,
                TokenKind::Punct => matches!(t.text(self.src), "!" | "~"),
                _ => false,
            },
            None => false,
        }
    }

    fn postfix(&mut self) -> PResult<()> {
        let mut name_chain = self.primary()?;
        loop {
            if self.is(".") {
                self.advance(1);
                match self.peek_ident() {
                    Some("class") if name_chain => {
                        self.advance(1);
                        name_chain = false;
                    }
                    Some("this") if name_chain => {
                        self.advance(1);
                        name_chain = false;
                    }
                    _ => {
                        // explicit type arguments: `Collections.<String>emptyList()`
                        let generic = self.is("<");
                        if generic {
                            self.type_arguments(false)?;
                        }
                        self.expect_identifier()?;
                        if generic && self.peek_group(Delim::Paren).is_none() {
                            return Err(self.error("expected method arguments"));
                        }
                        if let Some(g) = self.peek_group(Delim::Paren) {
                            self.arguments(g)?;
                            name_chain = false;
                        }
                    }
                }
            } else if let Some(g) = self.peek_group(Delim::Bracket) {
                if g.children.is_empty() {
                    // `Name[].class`
                    if !name_chain {
                        return Err(self.error("expected an index expression"));
                    }
                    self.array_class_literal()?;
                    name_chain = false;
                } else {
                    let mut c = self.sub(g);
                    self.advance(1);
                    c.expression()?;
                    c.finish()?;
                    name_chain = false;
                }
            } else {
                break;
            }
        }
        while self.is("++") || self.is("--") {
            self.advance(1);
        }
        Ok(())
    }

    fn array_class_literal(&mut self) -> PResult<()> {
        while self.peek_group(Delim::Bracket).is_some_and(|g| g.children.is_empty()) {
            self.advance(1);
        }
        self.expect(".")?;
        self.expect("class")
    }

    /// Returns whether the primary is a bare name (so `.class` may follow).
    fn primary(&mut self) -> PResult<bool> {
        let Some(t) = self.peek() else {
            return Err(self.error("expected an expression"));
        };
        match t {
            TokenTree::Group(g) => match g.delim {
                Delim::Paren => {
                    let mut c = self.sub(g);
                    self.advance(1);
                    if c.at_end() {
                        return Err(ExprError { offset: g.open.span.start, message: "empty parentheses".into() });
                    }
                    c.expression()?;
                    c.finish()?;
                    Ok(false)
                }
                _ => Err(self.error("expected an expression")),
            },
            TokenTree::Leaf(tok) => {
                let text = tok.text(self.src);
                match tok.kind {
                    k if k.is_literal() => {
                        check_literal(k, text).map_err(|m| ExprError { offset: tok.span.start, message: m })?;
                        self.advance(1);
                        Ok(false)
                    }
                    TokenKind::Ident => match text {
                        "true" | "false" | "null" => {
                            self.advance(1);
                            Ok(false)
                        }
                        "this" | "super" => {
                            self.advance(1);
                            if let Some(g) = self.peek_group(Delim::Paren) {
                                self.arguments(g)?;
                            }
                            Ok(false)
                        }
                        "new" => {
                            self.advance(1);
                            self.creator()?;
                            Ok(false)
                        }
                        p if PRIMITIVES.contains(&p) => {
                            // only `int.class`, `int[].class`
                            self.advance(1);
                            self.array_class_literal()?;
                            Ok(false)
                        }
                        _ => {
                            self.expect_identifier()?;
                            if let Some(g) = self.peek_group(Delim::Paren) {
                                self.arguments(g)?;
                                return Ok(false);
                            }
                            Ok(true)
                        }
                    },
                    _ => Err(self.error("expected an expression")),
                }
            }
        }
    }

    fn arguments(&mut self, g: &'t lexer::Group) -> PResult<()> {
        let mut c = self.sub(g);
        self.advance(1);
        if c.at_end() {
            return Ok(());
        }
        loop {
            c.expression()?;
            if !c.eat(",") {
                return c.finish();
            }
        }
    }

    fn creator(&mut self) -> PResult<()> {
        let primitive = self.peek_ident().is_some_and(|s| PRIMITIVES.contains(&s) && s != "void");
        if primitive {
            self.advance(1);
        } else {
            self.class_type(true)?;
        }
        if !primitive {
            if let Some(g) = self.peek_group(Delim::Paren) {
                self.arguments(g)?;
                // anonymous class body, taken as balanced tokens
                if self.peek_group(Delim::Brace).is_some() {
                    self.advance(1);
                }
                return Ok(());
            }
        }
        let Some(first) = self.peek_group(Delim::Bracket) else {
            return Err(self.error(if primitive { "expected array dimensions" } else { "expected `(` or `[`" }));
        };
        if first.children.is_empty() {
            while self.peek_group(Delim::Bracket).is_some_and(|g| g.children.is_empty()) {
                self.advance(1);
            }
            let Some(init) = self.peek_group(Delim::Brace) else {
                return Err(self.error("expected an array initializer"));
            };
            return self.array_initializer(init);
        }
        let mut seen_empty = false;
        while let Some(g) = self.peek_group(Delim::Bracket) {
            if g.children.is_empty() {
                seen_empty = true;
                self.advance(1);
            } else if seen_empty {
                return Err(self.error("dimension expression after `[]`"));
            } else {
                let mut c = self.sub(g);
                self.advance(1);
                c.expression()?;
                c.finish()?;
            }
        }
        Ok(())
    }

    fn array_initializer(&mut self, g: &'t lexer::Group) -> PResult<()> {
        let mut c = self.sub(g);
        self.advance(1);
        while !c.at_end() {
            if let Some(inner) = c.peek_group(Delim::Brace) {
                c.array_initializer(inner)?;
            } else {
                c.expression()?;
            }
            if !c.eat(",") {
                break;
            }
        }
        c.finish()
    }

    /// `A.B<C>.D<E>` with optional dims. Diamonds are only legal after `new`.
    fn class_type(&mut self, allow_diamond: bool) -> PResult<()> {
        loop {
            self.expect_identifier()?;
            if self.is("<") {
                self.type_arguments(allow_diamond)?;
            }
            if self.is(".") && self.peek_at(1).is_some_and(|t| t.is_ident() && !t.is_text(self.src, "class")) {
                self.advance(1);
            } else {
                return Ok(());
            }
        }
    }

    fn type_arguments(&mut self, allow_diamond: bool) -> PResult<()> {
        self.expect("<")?;
        if self.is(">") {
            if !allow_diamond {
                return Err(self.error("empty type arguments"));
            }
            self.advance(1);
            return Ok(());
        }
        loop {
            if self.eat("?") {
                if self.eat("extends") || self.eat("super") {
                    self.parse_type(false)?;
                }
            } else {
                self.parse_type(false)?;
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(">")
    }

    fn parse_type(&mut self, allow_diamond: bool) -> PResult<()> {
        if self.peek_ident().is_some_and(|s| PRIMITIVES.contains(&s) && s != "void") {
            self.advance(1);
        } else {
            self.class_type(allow_diamond)?;
        }
        while self.peek_group(Delim::Bracket).is_some_and(|g| g.children.is_empty()) {
            self.advance(1);
        }
        Ok(())
    }
}

fn check_literal(kind: TokenKind, text: &str) -> Result<(), String> {
    let ok = match kind {
        TokenKind::Int => valid_int(text),
        TokenKind::Float => valid_float(text),
        TokenKind::Char => valid_char(text),
        TokenKind::Str => valid_escapes(&text[1..text.len() - 1]),
        TokenKind::TextBlock => text.len() >= 7 && text[3..].trim_start_matches([' ', '\t']).starts_with(['\n', '\r']),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("malformed literal `{text}`"))
    }
}

fn digits_ok(s: &str, radix: u32) -> bool {
    !s.is_empty()
        && !s.starts_with('_')
        && !s.ends_with('_')
        && s.chars().all(|c| c == '_' || c.is_digit(radix))
}

fn valid_int(text: &str) -> bool {
    let body = text.strip_suffix(['l', 'L']).unwrap_or(text);
    if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        digits_ok(h, 16)
    } else if let Some(b) = body.strip_prefix("0b").or_else(|| body.strip_prefix("0B")) {
        digits_ok(b, 2)
    } else if body.len() > 1 && body.starts_with('0') {
        digits_ok(&body[1..], 8) || body[1..].starts_with('_') && digits_ok(body[1..].trim_start_matches('_'), 8)
    } else {
        digits_ok(body, 10)
    }
}

fn valid_float(text: &str) -> bool {
    let body = text.strip_suffix(['f', 'F', 'd', 'D']).unwrap_or(text);
    if body.starts_with("0x") || body.starts_with("0X") {
        let Some((mantissa, exp)) = body[2..].split_once(['p', 'P']) else { return false };
        let exp = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        let (a, b) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        return (digits_ok(a, 16) || a.is_empty()) && (b.is_empty() || digits_ok(b, 16)) && !(a.is_empty() && b.is_empty()) && digits_ok(exp, 10);
    }
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    if let Some(e) = exp {
        if !digits_ok(e.strip_prefix(['+', '-']).unwrap_or(e), 10) {
            return false;
        }
    }
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return false;
    }
    (int.is_empty() || digits_ok(int, 10)) && (frac.is_empty() || digits_ok(frac, 10))
}

fn valid_escapes(s: &str) -> bool {
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            continue;
        }
        match chars.next() {
            Some('b' | 't' | 'n' | 'f' | 'r' | 's' | '"' | '\'' | '\\') => {}
            Some('0'..='7') => {
                // up to two more octal digits
                for _ in 0..2 {
                    if chars.peek().is_some_and(|c| ('0'..='7').contains(c)) {
                        chars.next();
                    }
                }
            }
            Some('u') => {
                while chars.peek() == Some(&'u') {
                    chars.next();
                }
                for _ in 0..4 {
                    if !chars.next().is_some_and(|c| c.is_ascii_hexdigit()) {
                        return false;
                    }
                }
            }
            _ => return false,
        }
    }
    true
}

fn valid_char(text: &str) -> bool {
    let inner = &text[1..text.len() - 1];
    if let Some(rest) = inner.strip_prefix('\\') {
        valid_escapes(inner) && (inner.len() == 2 || rest.starts_with('u') || rest.chars().all(|c| c.is_digit(8)))
    } else {
        inner.chars().count() == 1 && inner != "'"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(s: &str) {
        if let Err(e) = parse_expression(s) {
            panic!("`{s}` rejected: {e}");
        }
    }

    fn bad(s: &str) {
        assert!(parse_expression(s).is_err(), "`{s}` accepted");
    }

    #[test]
    fn basics() {
        ok("isEmpty()");
        ok("new int[]{1,2}");
        ok("a < b && c > d");
        ok("x >>> 2 >= y >> 1");
        ok("(String) o");
        ok("(int) -1");
        ok("(a) + b");
        ok("new java.util.HashMap<String, java.util.List<Integer>>()");
        ok("(a, b) -> a + b");
        ok("x -> { return x; }");
        ok("String[].class");
        ok("cond ? a : b ? c : d");
        ok("Outer.this.x");
        bad("");
        bad("1 +");
        bad("a b");
        bad("(a");
        bad("return x");
        bad("new int[]");
        bad("-> x");
        bad("x.1");
    }

    #[test]
    fn literals() {
        ok("0x1Fl");
        ok("1_000");
        ok("1e10");
        ok("'\\n'");
        ok("'\\u0041'");
        ok("\"a\\tb\"");
        bad("1_");
        bad("09");
        bad("'ab'");
        bad("\"\\q\"");
        bad("1e");
    }

    #[test]
    fn lists() {
        let src = "1, x.f(a, b), \"s,t\"";
        let spans = parse_expression_list(src).unwrap();
        let parts: Vec<_> = spans.iter().map(|s| s.slice(src)).collect();
        assert_eq!(parts, ["1", "x.f(a, b)", "\"s,t\""]);
        assert!(parse_expression_list("   ").unwrap().is_empty());
        assert_eq!(parse_expression_list("new java.util.HashMap<K, V>(), 2").unwrap().len(), 2);
        assert!(parse_expression_list("a,").is_err());
        assert!(parse_expression_list(",a").is_err());
    }

    #[test]
    fn errors_report_offsets() {
        let e = parse_expression("a + ").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = parse_expression("f(1, #)").unwrap_err();
        assert_eq!(e.offset, 5);
    }
}
