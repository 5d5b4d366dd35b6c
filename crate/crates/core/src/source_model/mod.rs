//! Lightweight structural model of Java source files and a project-wide
//! class index used for name resolution.
//!
//! Only declaration structure is recognized (package, imports, types,
//! methods, annotations, header comments). Method bodies are kept as token
//! trees without any semantic analysis.

mod comment;
mod index;
mod parser;

use std::path::PathBuf;

use thiserror::Error;

use crate::lexer::{Span, TokenTree};

pub use comment::{CommentBlock, CommentLine};
pub use index::{
    build_class_index, find_focal_method, is_throwable, resolve_type, ClassIndex, EntryKind,
    FocalError, HierarchyError, IndexError, KnownType, KnownTypesFile, ResolveError, TypeEntry,
    TypeLookup, DEFAULT_KNOWN_TYPES,
};
pub use parser::parse_unit;

pub const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    /// Dotted name as written, `.*` included for on-demand imports.
    pub name: String,
    pub is_static: bool,
}

impl Import {
    pub fn is_wildcard(&self) -> bool {
        self.name.ends_with(".*")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: PathBuf,
    /// Empty for the default package.
    pub package_name: String,
    pub imports: Vec<Import>,
    /// All type declarations in document order, nested ones included.
    pub types: Vec<TypeDecl>,
    pub raw_text: String,
}

impl SourceUnit {
    /// The unit's bytes. Nothing is normalized, so this is the input file.
    pub fn emit(&self) -> &str {
        &self.raw_text
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodDecl> {
        self.types.iter().flat_map(|t| t.methods.iter())
    }

    pub fn find_type(&self, qualified: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.qualified_name == qualified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub simple_name: String,
    /// Package plus the dotted chain of enclosing simple names.
    pub qualified_name: String,
    pub kind: TypeKind,
    /// Names after `extends`/`implements`, as written, type arguments dropped.
    pub super_types: Vec<String>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Dotted name without the `@`.
    pub name: String,
    /// Raw text between the parentheses, when present.
    pub args: Option<String>,
    pub span: Span,
}

impl Annotation {
    /// Last segment of the name, so `@org.junit.Test` matches "Test".
    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    /// Parameter types as written, whitespace removed (`List<String>`, `int[]`, `Object...`).
    pub param_types: Vec<String>,
    pub is_static: bool,
    pub is_constructor: bool,
    pub modifiers: Vec<String>,
    pub annotations: Vec<Annotation>,
    pub header_comment: Option<CommentBlock>,
    /// `None` for abstract and interface methods.
    pub body_tokens: Option<TokenTree>,
    /// From the first annotation or modifier to the closing brace or `;`.
    pub span: Span,
    pub name_span: Span,
    pub declaring_type: String,
}

impl MethodDecl {
    pub fn annotation(&self, simple_name: &str) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.simple_name() == simple_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}:{line}:{column}: {message}", path.display())]
pub struct SyntaxError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}
