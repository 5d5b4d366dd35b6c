use std::path::Path;

use crate::lexer::{self, Delim, LexError, Span, TokenKind, TokenTree};

use super::{Annotation, CommentBlock, Import, MethodDecl, SourceUnit, SyntaxError, TypeDecl, TypeKind};

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "abstract",
    "final",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

/// Parse one Java source file into its declaration structure.
pub fn parse_unit(text: &str, path: &Path) -> Result<SourceUnit, SyntaxError> {
    let err = |e: LexError| syntax_error(text, path, e.offset, e.message);
    let tokens = lexer::lex(text).map_err(err)?;
    let trees = lexer::build_trees(&tokens).map_err(err)?;
    let mut p = Parser { src: text, path, types: Vec::new() };
    let (package_name, imports, body_start) = p.parse_header(&trees)?;
    p.parse_top_level(&trees[body_start..], &package_name)?;
    Ok(SourceUnit {
        path: path.to_path_buf(),
        package_name,
        imports,
        types: p.types,
        raw_text: text.to_string(),
    })
}

fn syntax_error(src: &str, path: &Path, offset: usize, message: impl Into<String>) -> SyntaxError {
    let (line, column) = lexer::line_col(src, offset);
    SyntaxError { path: path.to_path_buf(), line, column, message: message.into() }
}

fn end_of_statement(trees: &[TokenTree], src: &str, mut i: usize) -> usize {
    while i < trees.len() && !trees[i].is_text(src, ";") {
        i += 1;
    }
    (i + 1).min(trees.len())
}

fn skip_annotations(trees: &[TokenTree], src: &str, mut i: usize) -> usize {
    while trees.get(i).is_some_and(|t| t.is_text(src, "@"))
        && trees.get(i + 1).is_some_and(|t| t.is_ident() && !t.is_text(src, "interface"))
    {
        i += 2;
        while trees.get(i).is_some_and(|t| t.is_text(src, "."))
            && trees.get(i + 1).is_some_and(TokenTree::is_ident)
        {
            i += 2;
        }
        if trees.get(i).is_some_and(|t| t.is_group(Delim::Paren)) {
            i += 1;
        }
    }
    i
}

/// Concatenate token texts, inserting a space only between two word-like tokens.
pub(crate) fn join_tokens(trees: &[TokenTree], src: &str) -> String {
    let mut out = String::new();
    for t in trees {
        let text = match t {
            TokenTree::Leaf(tok) => tok.text(src).to_string(),
            TokenTree::Group(g) => {
                let inner = join_tokens(&g.children, src);
                format!("{}{}{}", g.delim.open_char(), inner, g.delim.close_char())
            }
        };
        let word = |c: char| lexer::is_ident_continue(c);
        if out.chars().last().is_some_and(word) && text.chars().next().is_some_and(word) {
            out.push(' ');
        }
        out.push_str(&text);
    }
    out
}

struct Parser<'a> {
    src: &'a str,
    path: &'a Path,
    types: Vec<TypeDecl>,
}

struct MemberHead {
    annotations: Vec<Annotation>,
    modifiers: Vec<String>,
    next: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> SyntaxError {
        syntax_error(self.src, self.path, offset, message)
    }

    fn text(&self, t: &TokenTree) -> &'a str {
        t.span().slice(self.src)
    }

    fn dotted_name(&self, trees: &[TokenTree], mut i: usize) -> Result<(String, usize), SyntaxError> {
        let mut name = String::new();
        loop {
            match trees.get(i) {
                Some(t) if t.is_ident() || t.is_text(self.src, "*") => {
                    name.push_str(self.text(t));
                    i += 1;
                }
                Some(t) => return Err(self.error(t.span().start, "expected a name")),
                None => return Err(self.error(self.src.len(), "expected a name")),
            }
            if trees.get(i).is_some_and(|t| t.is_text(self.src, ".")) {
                name.push('.');
                i += 1;
            } else {
                return Ok((name, i));
            }
        }
    }

    fn expect_semicolon(&self, trees: &[TokenTree], i: usize) -> Result<usize, SyntaxError> {
        match trees.get(i) {
            Some(t) if t.is_text(self.src, ";") => Ok(i + 1),
            Some(t) => Err(self.error(t.span().start, "expected `;`")),
            None => Err(self.error(self.src.len(), "expected `;`")),
        }
    }

    fn parse_header(&self, trees: &[TokenTree]) -> Result<(String, Vec<Import>, usize), SyntaxError> {
        let mut package = String::new();
        let mut imports = Vec::new();
        let mut i = skip_annotations(trees, self.src, 0);
        if trees.get(i).is_some_and(|t| t.is_text(self.src, "package")) {
            let (name, next) = self.dotted_name(trees, i + 1)?;
            package = name;
            i = self.expect_semicolon(trees, next)?;
        } else {
            i = 0;
        }
        loop {
            match trees.get(i) {
                Some(t) if t.is_text(self.src, ";") => i += 1,
                Some(t) if t.is_text(self.src, "import") => {
                    let is_static = trees.get(i + 1).is_some_and(|t| t.is_text(self.src, "static"));
                    let start = if is_static { i + 2 } else { i + 1 };
                    let (name, next) = self.dotted_name(trees, start)?;
                    imports.push(Import { name, is_static });
                    i = self.expect_semicolon(trees, next)?;
                }
                _ => break,
            }
        }
        Ok((package, imports, i))
    }

    fn parse_top_level(&mut self, trees: &[TokenTree], package: &str) -> Result<(), SyntaxError> {
        let mut i = 0;
        while i < trees.len() {
            if trees[i].is_text(self.src, ";") {
                i += 1;
                continue;
            }
            let head = self.member_head(trees, i)?;
            match self.type_keyword(trees, head.next) {
                Some((kind, name_at)) => {
                    i = self.parse_type(trees, i, kind, name_at, package, None)?;
                }
                None => {
                    let at = trees.get(head.next).unwrap_or(&trees[i]).span().start;
                    return Err(self.error(at, "expected a class, interface, enum or record declaration"));
                }
            }
        }
        Ok(())
    }

    fn member_head(&self, trees: &[TokenTree], mut i: usize) -> Result<MemberHead, SyntaxError> {
        let mut annotations = Vec::new();
        let mut modifiers = Vec::new();
        while let Some(t) = trees.get(i) {
            if t.is_text(self.src, "@") && trees.get(i + 1).is_some_and(|n| n.is_ident() && !n.is_text(self.src, "interface")) {
                let (name, mut next) = self.dotted_name(trees, i + 1)?;
                let mut args = None;
                if let Some(TokenTree::Group(g)) = trees.get(next) {
                    if g.delim == Delim::Paren {
                        args = Some(g.inner_span().slice(self.src).to_string());
                        next += 1;
                    }
                }
                let end = trees[next - 1].span().end;
                annotations.push(Annotation { name, args, span: Span::new(t.span().start, end) });
                i = next;
            } else if t.is_ident() && MODIFIERS.contains(&self.text(t)) {
                modifiers.push(self.text(t).to_string());
                i += 1;
            } else if t.is_text(self.src, "non")
                && trees.get(i + 1).is_some_and(|n| n.is_text(self.src, "-"))
                && trees.get(i + 2).is_some_and(|n| n.is_text(self.src, "sealed"))
            {
                modifiers.push("non-sealed".into());
                i += 3;
            } else {
                break;
            }
        }
        Ok(MemberHead { annotations, modifiers, next: i })
    }

    /// Kind and index of the name token, if a type declaration starts at `i`.
    fn type_keyword(&self, trees: &[TokenTree], i: usize) -> Option<(TypeKind, usize)> {
        let t = trees.get(i)?;
        let kind = match self.text(t) {
            "class" => TypeKind::Class,
            "interface" => TypeKind::Interface,
            "enum" => TypeKind::Enum,
            "@" if trees.get(i + 1)?.is_text(self.src, "interface") => return Some((TypeKind::Annotation, i + 2)),
            // `record` is a contextual keyword
            "record" if trees.get(i + 1).is_some_and(TokenTree::is_ident) => TypeKind::Record,
            _ => return None,
        };
        t.is_ident().then_some((kind, i + 1))
    }

    fn parse_type(
        &mut self,
        trees: &[TokenTree],
        start: usize,
        kind: TypeKind,
        name_at: usize,
        package: &str,
        enclosing: Option<&str>,
    ) -> Result<usize, SyntaxError> {
        let name_tok = match trees.get(name_at) {
            Some(t) if t.is_ident() => t,
            Some(t) => return Err(self.error(t.span().start, "expected a type name")),
            None => return Err(self.error(self.src.len(), "expected a type name")),
        };
        let simple_name = self.text(name_tok).to_string();
        let qualified_name = match (enclosing, package.is_empty()) {
            (Some(outer), _) => format!("{outer}.{simple_name}"),
            (None, true) => simple_name.clone(),
            (None, false) => format!("{package}.{simple_name}"),
        };

        let mut i = name_at + 1;
        let mut super_types = Vec::new();
        let mut angle = 0usize;
        let mut collecting = false;
        let mut current: Vec<TokenTree> = Vec::new();
        let body = loop {
            let Some(t) = trees.get(i) else {
                return Err(self.error(name_tok.span().start, format!("missing body for type `{simple_name}`")));
            };
            if angle == 0 {
                if let TokenTree::Group(g) = t {
                    if g.delim == Delim::Brace {
                        break g;
                    }
                }
            }
            match self.text(t) {
                "<" => angle += 1,
                ">" => angle = angle.saturating_sub(1),
                _ => {}
            }
            if angle == 0 && (t.is_text(self.src, "extends") || t.is_text(self.src, "implements")) {
                flush_super(&mut current, &mut super_types, self.src);
                collecting = true;
            } else if angle == 0 && t.is_text(self.src, "permits") {
                flush_super(&mut current, &mut super_types, self.src);
                collecting = false;
            } else if angle == 0 && t.is_text(self.src, ",") {
                flush_super(&mut current, &mut super_types, self.src);
            } else if collecting && angle == 0 && !t.is_text(self.src, ">") {
                current.push(t.clone());
            }
            i += 1;
        };
        flush_super(&mut current, &mut super_types, self.src);

        let slot = self.types.len();
        let span = Span::new(trees[start].span().start, body.span().end);
        self.types.push(TypeDecl {
            simple_name: simple_name.clone(),
            qualified_name: qualified_name.clone(),
            kind,
            super_types,
            methods: Vec::new(),
            span,
        });
        let methods = self.parse_members(&body.children, kind, &simple_name, &qualified_name, package)?;
        self.types[slot].methods = methods;
        Ok(i + 1)
    }

    fn parse_members(
        &mut self,
        trees: &[TokenTree],
        kind: TypeKind,
        simple_name: &str,
        qualified_name: &str,
        package: &str,
    ) -> Result<Vec<MethodDecl>, SyntaxError> {
        let mut methods = Vec::new();
        let mut i = 0;
        if kind == TypeKind::Enum {
            // constants run up to the first top-level `;`
            while i < trees.len() && !trees[i].is_text(self.src, ";") {
                i += 1;
            }
        }
        while i < trees.len() {
            let t = &trees[i];
            if t.is_text(self.src, ";") {
                i += 1;
                continue;
            }
            let head = self.member_head(trees, i)?;
            if let Some((k, name_at)) = self.type_keyword(trees, head.next) {
                i = self.parse_type(trees, i, k, name_at, package, Some(qualified_name))?;
                continue;
            }
            if trees.get(head.next).is_some_and(|t| t.is_group(Delim::Brace)) {
                // initializer block
                i = head.next + 1;
                continue;
            }
            let mut j = head.next;
            loop {
                let Some(t) = trees.get(j) else {
                    return Err(self.error(trees[i].span().start, "unterminated member declaration"));
                };
                if t.is_text(self.src, ";") {
                    i = j + 1;
                    break;
                }
                if t.is_text(self.src, "=") {
                    i = end_of_statement(trees, self.src, j);
                    if !trees[i - 1].is_text(self.src, ";") {
                        return Err(self.error(t.span().start, "unterminated field initializer"));
                    }
                    break;
                }
                if t.is_group(Delim::Brace) {
                    // compact record constructor or similar; nothing to index
                    i = j + 1;
                    break;
                }
                if t.is_ident() && trees.get(j + 1).is_some_and(|n| n.is_group(Delim::Paren)) {
                    let (method, next) = self.parse_method(trees, i, &head, j, simple_name, qualified_name)?;
                    methods.push(method);
                    i = next;
                    break;
                }
                j += 1;
            }
        }
        Ok(methods)
    }

    fn parse_method(
        &self,
        trees: &[TokenTree],
        start: usize,
        head: &MemberHead,
        name_at: usize,
        type_simple_name: &str,
        type_qualified_name: &str,
    ) -> Result<(MethodDecl, usize), SyntaxError> {
        let name_tok = trees[name_at].first_token();
        let name = name_tok.text(self.src).to_string();
        let params = trees[name_at + 1].as_group().expect("checked by caller");

        // Only a type-parameter list may sit between modifiers and a constructor name.
        let between = &trees[head.next..name_at];
        let is_constructor = name == type_simple_name
            && (between.is_empty()
                || (between.first().is_some_and(|t| t.is_text(self.src, "<"))
                    && between.last().is_some_and(|t| t.is_text(self.src, ">"))));

        let mut i = name_at + 2;
        let (body, end) = loop {
            match trees.get(i) {
                Some(TokenTree::Group(g)) if g.delim == Delim::Brace => break (Some(TokenTree::Group(g.clone())), g.span().end),
                Some(t) if t.is_text(self.src, ";") => break (None, t.span().end),
                Some(_) => i += 1,
                None => return Err(self.error(name_tok.span.start, format!("missing body for method `{name}`"))),
            }
        };

        let first = trees[start].first_token();
        let header_comment = first
            .leading_doc
            .map(|span| CommentBlock::parse(span.slice(self.src), span));

        let method = MethodDecl {
            param_types: self.param_types(&params.children),
            is_static: head.modifiers.iter().any(|m| m == "static"),
            is_constructor,
            modifiers: head.modifiers.clone(),
            annotations: head.annotations.clone(),
            header_comment,
            body_tokens: body,
            span: Span::new(first.span.start, end),
            name_span: name_tok.span,
            declaring_type: type_qualified_name.to_string(),
            name,
        };
        Ok((method, i + 1))
    }

    fn param_types(&self, trees: &[TokenTree]) -> Vec<String> {
        let mut out = Vec::new();
        let mut angle = 0usize;
        let mut current: Vec<TokenTree> = Vec::new();
        for t in trees {
            match self.text(t) {
                "<" => angle += 1,
                ">" => angle = angle.saturating_sub(1),
                "," if angle == 0 => {
                    out.extend(self.one_param(&std::mem::take(&mut current)));
                    continue;
                }
                _ => {}
            }
            current.push(t.clone());
        }
        out.extend(self.one_param(&current));
        out
    }

    fn one_param(&self, trees: &[TokenTree]) -> Option<String> {
        if trees.is_empty() {
            return None;
        }
        let mut i = skip_annotations(trees, self.src, 0);
        while trees.get(i).is_some_and(|t| t.is_text(self.src, "final")) {
            i = skip_annotations(trees, self.src, i + 1);
        }
        let rest = &trees[i..];
        // trailing `[]` after the parameter name belong to the type
        let mut name_at = rest.len();
        while name_at > 0 && rest[name_at - 1].is_group(Delim::Bracket) {
            name_at -= 1;
        }
        let dims = rest.len() - name_at;
        if name_at < 2 {
            return Some(join_tokens(rest, self.src));
        }
        let mut ty = join_tokens(&rest[..name_at - 1], self.src);
        for _ in 0..dims {
            ty.push_str("[]");
        }
        Some(ty)
    }
}

fn flush_super(current: &mut Vec<TokenTree>, out: &mut Vec<String>, src: &str) {
    if current.is_empty() {
        return;
    }
    // drop type arguments and annotations: keep the leading dotted chain
    let mut name = String::new();
    let mut i = skip_annotations(current, src, 0);
    while let Some(t) = current.get(i) {
        if t.first_token().kind == TokenKind::Ident || t.is_text(src, ".") {
            name.push_str(t.span().slice(src));
            i += 1;
        } else {
            break;
        }
    }
    if !name.is_empty() {
        out.push(name);
    }
    current.clear();
}
