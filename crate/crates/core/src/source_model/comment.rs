//! Doc comments split into lines with their gutters kept aside.

use crate::lexer::Span;

/// One physical line of a block comment.
///
/// `prefix + content + suffix` is the exact original text of the line:
/// `prefix` holds the opening `/**` or the `*` gutter with its surrounding
/// blanks, `suffix` holds trailing blanks, the closing `*/` on the last
/// line, and the line terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentLine {
    pub prefix: String,
    pub content: String,
    pub suffix: String,
}

impl CommentLine {
    pub fn emit_into(&self, out: &mut String) {
        out.push_str(&self.prefix);
        out.push_str(&self.content);
        out.push_str(&self.suffix);
    }

    /// True when the first token of the content is exactly `tag`.
    pub fn starts_with_tag(&self, tag: &str) -> bool {
        match self.content.strip_prefix(tag) {
            Some(rest) => rest.is_empty() || rest.starts_with(char::is_whitespace),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentBlock {
    pub lines: Vec<CommentLine>,
    pub span: Span,
}

fn split_horizontal_ws(s: &str) -> (&str, &str) {
    let n = s.len() - s.trim_start_matches([' ', '\t']).len();
    s.split_at(n)
}

impl CommentBlock {
    /// Split the text of a `/* ... */` comment. `span` locates it in its file.
    pub fn parse(text: &str, span: Span) -> CommentBlock {
        let mut physical: Vec<&str> = text.split_inclusive('\n').collect();
        if physical.is_empty() {
            physical.push("");
        }
        let last = physical.len() - 1;
        let mut lines = Vec::with_capacity(physical.len());
        for (i, raw) in physical.into_iter().enumerate() {
            let (body, eol) = if let Some(b) = raw.strip_suffix("\r\n") {
                (b, "\r\n")
            } else if let Some(b) = raw.strip_suffix('\n') {
                (b, "\n")
            } else {
                (raw, "")
            };
            // closing delimiter first, so the opening gutter cannot eat it
            let (body, closing) = if i == last {
                match body.strip_suffix("*/") {
                    Some(b) => (b, "*/"),
                    None => (body, ""),
                }
            } else {
                (body, "")
            };
            let (prefix, rest) = if i == 0 {
                let after_slash = body.strip_prefix('/').unwrap_or(body);
                let stars = after_slash.len() - after_slash.trim_start_matches('*').len();
                let opener_len = body.len() - after_slash.len() + stars;
                let (ws, _) = split_horizontal_ws(&body[opener_len..]);
                body.split_at(opener_len + ws.len())
            } else {
                let (lead, after) = split_horizontal_ws(body);
                match after.strip_prefix('*') {
                    Some(after_star) => {
                        let (ws, _) = split_horizontal_ws(after_star);
                        body.split_at(lead.len() + 1 + ws.len())
                    }
                    None => body.split_at(lead.len()),
                }
            };
            let content = rest.trim_end_matches([' ', '\t']);
            let trailing = &rest[content.len()..];
            lines.push(CommentLine {
                prefix: prefix.to_string(),
                content: content.to_string(),
                suffix: format!("{trailing}{closing}{eol}"),
            });
        }
        CommentBlock { lines, span }
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            l.emit_into(&mut out);
        }
        out
    }

    /// Line contents without gutters, blank lines included.
    pub fn text_lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(|l| l.content.as_str())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.lines.iter().any(|l| l.starts_with_tag(tag))
    }
}
