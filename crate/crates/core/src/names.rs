//! Lexical rules for Java names.

use crate::lexer::{is_ident_continue, is_ident_start};

pub const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long", "native",
    "new", "package", "private", "protected", "public", "return", "short", "static", "strictfp",
    "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try", "void",
    "volatile", "while", "true", "false", "null", "_",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// A legal Java identifier that is not a reserved word or literal.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    chars.all(is_ident_continue) && !is_keyword(s)
}

/// `a.b.C`: one or more identifiers joined by single dots.
pub fn is_dotted_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_identifier)
}

/// A dotted name optionally followed by `[]` pairs; returns the element name
/// and the number of dimensions.
pub fn split_array_suffix(s: &str) -> (&str, usize) {
    let mut base = s;
    let mut dims = 0;
    while let Some(b) = base.strip_suffix("[]") {
        base = b;
        dims += 1;
    }
    (base, dims)
}

pub fn last_segment(s: &str) -> &str {
    s.rsplit('.').next().unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(is_identifier("pop"));
        assert!(is_identifier("$x_1"));
        assert!(is_identifier("ölçü"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier("do()"));
        assert!(!is_identifier("class"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a.b"));
    }

    #[test]
    fn dotted_names() {
        assert!(is_dotted_name("java.lang.String"));
        assert!(!is_dotted_name("java..String"));
        assert!(!is_dotted_name(".String"));
        assert!(!is_dotted_name("java.lang.String[]"));
        assert_eq!(split_array_suffix("int[][]"), ("int", 2));
    }
}
