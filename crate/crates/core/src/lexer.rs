//! Lossless tokenizer for Java source text, plus balanced token trees.
//!
//! Every byte of the input belongs to exactly one token, trivia included, so
//! concatenating token texts reproduces the source. Trees are built from the
//! significant (non-trivia) tokens only.

use std::fmt;

/// Half-open byte range into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn slice<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delim {
    Paren,
    Brace,
    Bracket,
}

impl Delim {
    pub fn open_char(self) -> char {
        match self {
            Delim::Paren => '(',
            Delim::Brace => '{',
            Delim::Bracket => '[',
        }
    }

    pub fn close_char(self) -> char {
        match self {
            Delim::Paren => ')',
            Delim::Brace => '}',
            Delim::Bracket => ']',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Whitespace,
    LineComment,
    BlockComment,
    /// `/** ... */`
    DocComment,
    Ident,
    Int,
    Float,
    Str,
    TextBlock,
    Char,
    Punct,
    Open(Delim),
    Close(Delim),
    /// A character that starts no Java token (`#`, a backtick, ...).
    Unknown,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::Whitespace
                | TokenKind::LineComment
                | TokenKind::BlockComment
                | TokenKind::DocComment
        )
    }

    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::Int | TokenKind::Float | TokenKind::Str | TokenKind::TextBlock | TokenKind::Char
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    /// For significant tokens: the doc comment in the trivia run directly
    /// before this token, if any.
    pub leading_doc: Option<Span>,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        self.span.slice(src)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.offset)
    }
}

impl std::error::Error for LexError {}

// Longest first. `>` is never merged here: generic closers like `>>` must
// stay separable, so shift and comparison operators starting with `>` are
// reassembled by consumers from adjacent tokens.
const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "?", ":", ";",
    ",", ".", "@", "&", "|", "^",
];

pub fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Tokenize `src` completely, trivia included.
pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer { src, pos: 0, pending_doc: None, out: Vec::new() };
    lexer.run()?;
    Ok(lexer.out)
}

/// Significant tokens only.
pub fn lex_significant(src: &str) -> Result<Vec<Token>, LexError> {
    Ok(lex(src)?.into_iter().filter(|t| !t.kind.is_trivia()).collect())
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    pending_doc: Option<Span>,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let span = Span::new(start, self.pos);
        let leading_doc = if kind.is_trivia() {
            if kind == TokenKind::DocComment {
                self.pending_doc = Some(span);
            }
            None
        } else {
            self.pending_doc.take()
        };
        self.out.push(Token { kind, span, leading_doc });
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                while self.peek().is_some_and(char::is_whitespace) {
                    self.bump();
                }
                self.push(TokenKind::Whitespace, start);
            } else if self.rest().starts_with("//") {
                while self.peek().is_some_and(|c| c != '\n' && c != '\r') {
                    self.bump();
                }
                self.push(TokenKind::LineComment, start);
            } else if self.rest().starts_with("/*") {
                let doc = self.rest().starts_with("/**") && !self.rest().starts_with("/**/");
                match self.rest()[2..].find("*/") {
                    Some(i) => self.pos += 2 + i + 2,
                    None => {
                        return Err(LexError { offset: start, message: "unterminated comment".into() })
                    }
                }
                self.push(if doc { TokenKind::DocComment } else { TokenKind::BlockComment }, start);
            } else if is_ident_start(c) {
                while self.peek().is_some_and(is_ident_continue) {
                    self.bump();
                }
                self.push(TokenKind::Ident, start);
            } else if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
                let kind = self.number();
                self.push(kind, start);
            } else if self.rest().starts_with("\"\"\"") {
                self.pos += 3;
                loop {
                    if self.rest().starts_with("\"\"\"") {
                        self.pos += 3;
                        break;
                    }
                    match self.bump() {
                        Some('\\') => {
                            self.bump();
                        }
                        Some(_) => {}
                        None => {
                            return Err(LexError { offset: start, message: "unterminated text block".into() })
                        }
                    }
                }
                self.push(TokenKind::TextBlock, start);
            } else if c == '"' || c == '\'' {
                self.bump();
                loop {
                    match self.bump() {
                        Some('\\') => {
                            self.bump();
                        }
                        Some(q) if q == c => break,
                        Some('\n') | Some('\r') | None => {
                            let what = if c == '"' { "string" } else { "character" };
                            return Err(LexError { offset: start, message: format!("unterminated {what} literal") });
                        }
                        Some(_) => {}
                    }
                }
                self.push(if c == '"' { TokenKind::Str } else { TokenKind::Char }, start);
            } else if let Some(d) = open_delim(c) {
                self.bump();
                self.push(TokenKind::Open(d), start);
            } else if let Some(d) = close_delim(c) {
                self.bump();
                self.push(TokenKind::Close(d), start);
            } else if let Some(op) = OPERATORS.iter().find(|op| self.rest().starts_with(**op)) {
                self.pos += op.len();
                self.push(TokenKind::Punct, start);
            } else {
                self.bump();
                self.push(TokenKind::Unknown, start);
            }
        }
        Ok(())
    }

    fn number(&mut self) -> TokenKind {
        let rest = self.rest();
        let hex = rest.starts_with("0x") || rest.starts_with("0X");
        let mut float = false;
        let mut seen_dot = false;
        let mut seen_exp = false;
        while let Some(c) = self.peek() {
            if c == '.' && !seen_dot && !seen_exp {
                // `1.foo` is not a float; only take the dot when a digit, exponent,
                // suffix or non-identifier follows.
                match self.peek_at(1) {
                    Some(n) if n.is_ascii_digit() => {}
                    Some('e' | 'E' | 'f' | 'F' | 'd' | 'D') if !hex => {}
                    Some(n) if is_ident_start(n) || n == '.' => break,
                    _ => {}
                }
                seen_dot = true;
                float = true;
                self.bump();
            } else if (!hex && (c == 'e' || c == 'E')) || (hex && (c == 'p' || c == 'P')) {
                seen_exp = true;
                float = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
            } else if c.is_ascii_alphanumeric() || c == '_' {
                if !hex && matches!(c, 'f' | 'F' | 'd' | 'D') {
                    float = true;
                }
                self.bump();
            } else {
                break;
            }
        }
        if float {
            TokenKind::Float
        } else {
            TokenKind::Int
        }
    }
}

fn open_delim(c: char) -> Option<Delim> {
    match c {
        '(' => Some(Delim::Paren),
        '{' => Some(Delim::Brace),
        '[' => Some(Delim::Bracket),
        _ => None,
    }
}

fn close_delim(c: char) -> Option<Delim> {
    match c {
        ')' => Some(Delim::Paren),
        '}' => Some(Delim::Brace),
        ']' => Some(Delim::Bracket),
        _ => None,
    }
}

/// A token or a delimited group of token trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenTree {
    Leaf(Token),
    Group(Group),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub delim: Delim,
    pub open: Token,
    pub close: Token,
    pub children: Vec<TokenTree>,
}

impl Group {
    pub fn span(&self) -> Span {
        Span::new(self.open.span.start, self.close.span.end)
    }

    /// Span strictly between the delimiters.
    pub fn inner_span(&self) -> Span {
        Span::new(self.open.span.end, self.close.span.start)
    }
}

impl TokenTree {
    pub fn span(&self) -> Span {
        match self {
            TokenTree::Leaf(t) => t.span,
            TokenTree::Group(g) => g.span(),
        }
    }

    /// The first token of the tree (the opening delimiter for groups).
    pub fn first_token(&self) -> &Token {
        match self {
            TokenTree::Leaf(t) => t,
            TokenTree::Group(g) => &g.open,
        }
    }

    pub fn as_leaf(&self) -> Option<&Token> {
        match self {
            TokenTree::Leaf(t) => Some(t),
            TokenTree::Group(_) => None,
        }
    }

    pub fn as_group(&self) -> Option<&Group> {
        match self {
            TokenTree::Group(g) => Some(g),
            TokenTree::Leaf(_) => None,
        }
    }

    pub fn is_group(&self, delim: Delim) -> bool {
        matches!(self, TokenTree::Group(g) if g.delim == delim)
    }

    /// True for leaves whose text is exactly `text`.
    pub fn is_text(&self, src: &str, text: &str) -> bool {
        match self {
            TokenTree::Leaf(t) => t.text(src) == text,
            TokenTree::Group(_) => false,
        }
    }

    pub fn is_ident(&self) -> bool {
        matches!(self, TokenTree::Leaf(t) if t.kind == TokenKind::Ident)
    }

    /// Maximum delimiter nesting depth (0 for a leaf).
    pub fn depth(&self) -> usize {
        match self {
            TokenTree::Leaf(_) => 0,
            TokenTree::Group(g) => 1 + g.children.iter().map(TokenTree::depth).max().unwrap_or(0),
        }
    }

    /// All leaf tokens in source order, delimiters included.
    pub fn flatten(&self, out: &mut Vec<Token>) {
        match self {
            TokenTree::Leaf(t) => out.push(*t),
            TokenTree::Group(g) => {
                out.push(g.open);
                for c in &g.children {
                    c.flatten(out);
                }
                out.push(g.close);
            }
        }
    }
}

/// Group significant tokens by their delimiters. Trivia in the input is skipped.
pub fn build_trees(tokens: &[Token]) -> Result<Vec<TokenTree>, LexError> {
    let mut stack: Vec<(Token, Delim, Vec<TokenTree>)> = Vec::new();
    let mut current: Vec<TokenTree> = Vec::new();
    for tok in tokens.iter().filter(|t| !t.kind.is_trivia()) {
        match tok.kind {
            TokenKind::Open(d) => {
                stack.push((*tok, d, std::mem::take(&mut current)));
            }
            TokenKind::Close(d) => match stack.pop() {
                Some((open, od, parent)) if od == d => {
                    let children = std::mem::replace(&mut current, parent);
                    current.push(TokenTree::Group(Group { delim: d, open, close: *tok, children }));
                }
                Some((open, od, _)) => {
                    return Err(LexError {
                        offset: tok.span.start,
                        message: format!(
                            "mismatched `{}`: expected `{}` to close `{}` at byte {}",
                            d.close_char(),
                            od.close_char(),
                            od.open_char(),
                            open.span.start
                        ),
                    })
                }
                None => {
                    return Err(LexError {
                        offset: tok.span.start,
                        message: format!("unexpected `{}`", d.close_char()),
                    })
                }
            },
            _ => current.push(TokenTree::Leaf(*tok)),
        }
    }
    if let Some((open, d, _)) = stack.pop() {
        return Err(LexError {
            offset: open.span.start,
            message: format!("unclosed `{}`", d.open_char()),
        });
    }
    Ok(current)
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let col = before[line_start..].chars().count() + 1;
    (line, col)
}
