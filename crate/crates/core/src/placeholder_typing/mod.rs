//! Placeholder types and the rules their values must satisfy.
//!
//! `TYPE` and `EXCEPTION` values are resolved against the class index.
//! `METHOD`, `FIELD`, `EXPR` and `EXPR_LIST` values are purely syntactic:
//! the index is never consulted for them.

pub mod expr;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::names;
use crate::source_model::{is_throwable, resolve_type, HierarchyError, ResolveError, TypeLookup, PRIMITIVES};

pub use expr::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceholderType {
    Type,
    Exception,
    Method,
    Field,
    Expr,
    ExprList,
}

impl PlaceholderType {
    pub const ALL: [PlaceholderType; 6] = [
        PlaceholderType::Type,
        PlaceholderType::Exception,
        PlaceholderType::Method,
        PlaceholderType::Field,
        PlaceholderType::Expr,
        PlaceholderType::ExprList,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlaceholderType::Type => "TYPE",
            PlaceholderType::Exception => "EXCEPTION",
            PlaceholderType::Method => "METHOD",
            PlaceholderType::Field => "FIELD",
            PlaceholderType::Expr => "EXPR",
            PlaceholderType::ExprList => "EXPR_LIST",
        }
    }
}

impl fmt::Display for PlaceholderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlaceholderType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlaceholderType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown placeholder type `{s}`"))
    }
}

/// A placeholder value that passed its type's checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedValue {
    pub ptype: PlaceholderType,
    pub raw: String,
    /// Text spliced into templates. Always the value as supplied: a
    /// qualified type name stays qualified, so no import is needed.
    pub substitution_text: String,
    /// `EXPR_LIST` elements, trimmed. Empty for other types.
    pub elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypingError {
    #[error(transparent)]
    UnresolvedType(#[from] ResolveError),
    #[error("`{0}` does not inherit from java.lang.Throwable")]
    NotThrowable(String),
    #[error(transparent)]
    UnknownHierarchy(#[from] HierarchyError),
    #[error("`{0}` is not a single identifier")]
    BadIdentifier(String),
    #[error("invalid expression `{text}`: {error}")]
    ExprSyntaxError { text: String, error: ExprError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TypingOptions {
    /// Downgrade incomplete hierarchies and unrecognized (but balanced)
    /// expressions to warnings.
    pub lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checked {
    pub value: TypedValue,
    pub warnings: Vec<String>,
}

pub fn check_value(
    ptype: PlaceholderType,
    raw: &str,
    focal_package: &str,
    index: &impl TypeLookup,
    options: TypingOptions,
) -> Result<Checked, TypingError> {
    let mut warnings = Vec::new();
    let mut elements = Vec::new();
    match ptype {
        PlaceholderType::Type => {
            let (base, _) = names::split_array_suffix(raw);
            if !PRIMITIVES.contains(&base) {
                resolve_type(base, focal_package, index)?;
            }
        }
        PlaceholderType::Exception => {
            let qualified = resolve_type(raw, focal_package, index)?;
            let throwable = match is_throwable(&qualified, index) {
                Ok(t) => t,
                Err(e) if options.lenient => {
                    warnings.push(format!("{e}; treating `{qualified}` as not throwable"));
                    false
                }
                Err(e) => return Err(e.into()),
            };
            if !throwable {
                return Err(TypingError::NotThrowable(qualified));
            }
        }
        PlaceholderType::Method | PlaceholderType::Field => {
            if !names::is_identifier(raw) {
                return Err(TypingError::BadIdentifier(raw.to_string()));
            }
        }
        PlaceholderType::Expr => {
            if let Err(error) = expr::parse_expression(raw) {
                if options.lenient && !raw.trim().is_empty() && expr::is_balanced(raw) {
                    warnings.push(format!("accepting unrecognized expression `{raw}`: {error}"));
                } else {
                    return Err(TypingError::ExprSyntaxError { text: raw.to_string(), error });
                }
            }
        }
        PlaceholderType::ExprList => match expr::parse_expression_list(raw) {
            Ok(spans) => elements = spans.iter().map(|s| s.slice(raw).trim().to_string()).collect(),
            Err(error) if options.lenient && expr::is_balanced(raw) => {
                warnings.push(format!("accepting unrecognized expression list `{raw}`: {error}"));
                elements = split_top_level(raw);
            }
            Err(error) => return Err(TypingError::ExprSyntaxError { text: raw.to_string(), error }),
        },
    }
    Ok(Checked {
        value: TypedValue { ptype, raw: raw.to_string(), substitution_text: raw.to_string(), elements },
        warnings,
    })
}

/// Split on commas outside brackets and string or char literals.
pub fn split_top_level(raw: &str) -> Vec<String> {
    if raw.trim().is_empty() {
        return Vec::new();
    }
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut start = 0;
    for (i, c) in raw.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(raw[start..i].trim().to_string());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(raw[start..].trim().to_string());
    parts
}
