//! Splicing `@dscribe` lines into header comments.

use crate::lexer::Span;
use crate::source_model::{CommentLine, MethodDecl, SourceUnit};

pub const DSCRIBE_TAG: &str = "@dscribe";

fn eol_of(src: &str) -> &'static str {
    if src.contains("\r\n") {
        "\r\n"
    } else {
        "\n"
    }
}

/// Whitespace between the start of the line and `offset`, or "" when the
/// line has other text before it.
fn line_indent(src: &str, offset: usize) -> &str {
    let start = src[..offset].rfind('\n').map_or(0, |i| i + 1);
    let prefix = &src[start..offset];
    if prefix.chars().all(|c| c == ' ' || c == '\t') {
        prefix
    } else {
        ""
    }
}

fn comment_edit(src: &str, method: &MethodDecl, lines: &[String]) -> Option<(Span, String)> {
    let eol = eol_of(src);
    let Some(comment) = &method.header_comment else {
        if lines.is_empty() {
            return None;
        }
        let indent = line_indent(src, method.span.start);
        let mut out = format!("/**{eol}");
        for l in lines {
            out.push_str(&format!("{indent} * {l}{eol}"));
        }
        out.push_str(&format!("{indent} */{eol}{indent}"));
        return Some((Span::new(method.span.start, method.span.start), out));
    };

    let indent = line_indent(src, comment.span.start);
    let n = comment.lines.len();
    let mut removed = 0;
    let mut kept: Vec<CommentLine> = Vec::new();
    for (i, l) in comment.lines.iter().enumerate() {
        if !l.starts_with_tag(DSCRIBE_TAG) {
            kept.push(l.clone());
            continue;
        }
        removed += 1;
        if i == 0 {
            kept.push(CommentLine { prefix: l.prefix.trim_end().to_string(), content: String::new(), suffix: l.suffix.clone() });
        } else if i == n - 1 {
            kept.push(CommentLine {
                prefix: format!("{indent} "),
                content: String::new(),
                suffix: l.suffix.trim_start_matches([' ', '\t']).to_string(),
            });
        }
    }
    if lines.is_empty() && removed == 0 {
        return None;
    }

    let text = if lines.is_empty() {
        if kept.iter().all(|l| l.content.is_empty()) {
            let gap = &src[comment.span.end..method.span.start];
            let end = if gap.trim().is_empty() { method.span.start } else { comment.span.end };
            return Some((Span::new(comment.span.start, end), String::new()));
        }
        if kept.len() == 2 && kept[1].content.is_empty() && n > 2 {
            format!("{}{} */", kept[0].prefix, kept[0].content)
        } else {
            emit(&kept)
        }
    } else {
        let mut out = String::new();
        let closes_alone = kept.len() >= 2 && kept.last().is_some_and(|l| l.content.is_empty());
        let body = if closes_alone { &kept[..kept.len() - 1] } else { &kept[..] };
        for (i, l) in body.iter().enumerate() {
            if closes_alone || i + 1 < body.len() {
                l.emit_into(&mut out);
            } else {
                // closer shares this line: keep its text, move `*/` down
                let prefix = if l.content.is_empty() { l.prefix.trim_end() } else { l.prefix.as_str() };
                out.push_str(prefix);
                out.push_str(&l.content);
                out.push_str(eol);
            }
        }
        for l in lines {
            out.push_str(&format!("{indent} * {l}{eol}"));
        }
        if closes_alone {
            kept.last().unwrap().emit_into(&mut out);
        } else {
            out.push_str(&format!("{indent} */"));
        }
        out
    };
    Some((comment.span, text))
}

fn emit(lines: &[CommentLine]) -> String {
    let mut out = String::new();
    for l in lines {
        l.emit_into(&mut out);
    }
    out
}

/// Replace the `@dscribe` lines of `method`'s header comment by `lines`.
/// Bytes outside that comment are untouched, except that a comment is
/// created when needed and removed again when it ends up empty.
pub fn integrate_doc(src: &str, method: &MethodDecl, lines: &[String]) -> String {
    integrate_docs(src, &[(method, lines)])
}

/// Apply several methods' edits to one file in a single pass.
pub fn integrate_docs(src: &str, edits: &[(&MethodDecl, &[String])]) -> String {
    let mut spans: Vec<(Span, String)> = edits.iter().filter_map(|(m, lines)| comment_edit(src, m, lines)).collect();
    spans.sort_by_key(|(s, _)| std::cmp::Reverse(s.start));
    let mut out = src.to_string();
    for (span, text) in spans {
        out.replace_range(span.start..span.end, &text);
    }
    out
}

/// Remove every `@dscribe` line from the file.
pub fn clean_doc(unit: &SourceUnit) -> String {
    let edits: Vec<(&MethodDecl, &[String])> = unit
        .methods()
        .filter(|m| m.header_comment.as_ref().is_some_and(|c| c.has_tag(DSCRIBE_TAG)))
        .map(|m| (m, &[][..]))
        .collect();
    integrate_docs(&unit.raw_text, &edits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::parse_unit;
    use std::path::Path;

    fn apply(src: &str, method: &str, lines: &[&str]) -> String {
        let unit = parse_unit(src, Path::new("A.java")).unwrap();
        let m = unit.methods().find(|m| m.name == method).unwrap();
        let lines: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        integrate_doc(src, m, &lines)
    }

    fn clean(src: &str) -> String {
        clean_doc(&parse_unit(src, Path::new("A.java")).unwrap())
    }

    const STACK: &str = "class S {\n    /** Pops. */\n    int pop() { return 0; }\n    int peek() { return 0; }\n}\n";

    #[test]
    fn single_line_comment_expands_and_collapses() {
        let out = apply(STACK, "pop", &["@dscribe If x, then y."]);
        assert_eq!(
            out,
            "class S {\n    /** Pops.\n     * @dscribe If x, then y.\n     */\n    int pop() { return 0; }\n    int peek() { return 0; }\n}\n"
        );
        assert_eq!(apply(&out, "pop", &["@dscribe If x, then y."]), out);
        assert_eq!(clean(&out), STACK);
    }

    #[test]
    fn comment_is_created_and_removed() {
        let out = apply(STACK, "peek", &["@dscribe a", "@dscribe b"]);
        assert_eq!(
            out,
            "class S {\n    /** Pops. */\n    int pop() { return 0; }\n    /**\n     * @dscribe a\n     * @dscribe b\n     */\n    int peek() { return 0; }\n}\n"
        );
        assert_eq!(apply(&out, "peek", &["@dscribe a", "@dscribe b"]), out);
        assert_eq!(clean(&out), STACK);
    }

    #[test]
    fn manual_tags_survive() {
        let src = "class S {\n  /**\n   * Adds.\n   * @param x the value\n   * @dscribe stale\n   * @dscribe older\n   */\n  void add(int x) {}\n}\n";
        let out = apply(src, "add", &["@dscribe fresh"]);
        assert_eq!(out, "class S {\n  /**\n   * Adds.\n   * @param x the value\n   * @dscribe fresh\n   */\n  void add(int x) {}\n}\n");
        assert_eq!(clean(&out), "class S {\n  /**\n   * Adds.\n   * @param x the value\n   */\n  void add(int x) {}\n}\n");
    }

    #[test]
    fn crlf_files_stay_crlf() {
        let src = STACK.replace('\n', "\r\n");
        let out = apply(&src, "pop", &["@dscribe t"]);
        assert!(!out.replace("\r\n", "").contains('\n'));
        assert_eq!(clean(&out), src);
    }

    #[test]
    fn closer_after_text_moves_down() {
        let src = "class S {\n    /**\n     * Pops. */\n    int pop() { return 0; }\n}\n";
        let out = apply(src, "pop", &["@dscribe t"]);
        assert_eq!(out, "class S {\n    /**\n     * Pops.\n     * @dscribe t\n     */\n    int pop() { return 0; }\n}\n");
    }

    #[test]
    fn several_methods_in_one_pass() {
        let unit = parse_unit(STACK, Path::new("A.java")).unwrap();
        let ms: Vec<&MethodDecl> = unit.methods().collect();
        let a = vec!["@dscribe a".to_string()];
        let b = vec!["@dscribe b".to_string()];
        let out = integrate_docs(STACK, &[(ms[0], &a), (ms[1], &b)]);
        assert!(out.contains("Pops.\n     * @dscribe a\n") && out.contains("/**\n     * @dscribe b\n     */\n    int peek()"));
        assert_eq!(clean(&out), STACK);
    }

    #[test]
    fn untouched_without_lines_or_tags() {
        assert_eq!(apply(STACK, "pop", &[]), STACK);
        assert_eq!(apply(STACK, "peek", &[]), STACK);
        assert_eq!(clean(STACK), STACK);
    }
}
