//! Templates: annotated test methods whose header comment is a fact
//! description, collected from a directory of Java files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use thiserror::Error;

use crate::lexer::Span;
use crate::placeholder_typing::PlaceholderType;
use crate::source_model::{Annotation, Import, MethodDecl, SourceUnit};

/// Placeholders bound from the focal method rather than from invocation values.
pub const PREDEFINED: [&str; 3] = ["method", "class", "package"];

pub const TEMPLATE_ANNOTATION: &str = "Template";
pub const TYPES_ANNOTATION: &str = "Types";
pub const TEST_CLASS_ANNOTATION: &str = "TestClass";

pub const DEFAULT_TEST_CLASS: &str = "$class$DScribeTest";
pub const DEFAULT_TEST_PACKAGE: &str = "$package$";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placeholder {
    pub name: String,
    pub ptype: PlaceholderType,
}

/// Subject, relation and object of a statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Triple { subject: subject.into(), relation: relation.into(), object: object.into() }
    }

    pub fn map(&self, f: impl Fn(&str) -> String) -> Triple {
        Triple { subject: f(&self.subject), relation: f(&self.relation), object: f(&self.object) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatementTemplate {
    Structured(Triple),
    Freeform(String),
}

impl StatementTemplate {
    pub fn map(&self, f: impl Fn(&str) -> String) -> StatementTemplate {
        match self {
            StatementTemplate::Structured(t) => StatementTemplate::Structured(t.map(f)),
            StatementTemplate::Freeform(s) => StatementTemplate::Freeform(f(s)),
        }
    }

    fn texts(&self) -> Vec<&str> {
        match self {
            StatementTemplate::Structured(t) => vec![&t.subject, &t.relation, &t.object],
            StatementTemplate::Freeform(s) => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentTemplate {
    Pair { condition: StatementTemplate, consequence: StatementTemplate },
    Whole(String),
}

impl FragmentTemplate {
    pub fn map(&self, f: impl Fn(&str) -> String) -> FragmentTemplate {
        match self {
            FragmentTemplate::Pair { condition, consequence } => {
                FragmentTemplate::Pair { condition: condition.map(&f), consequence: consequence.map(&f) }
            }
            FragmentTemplate::Whole(s) => FragmentTemplate::Whole(f(s)),
        }
    }

    pub fn texts(&self) -> Vec<&str> {
        match self {
            FragmentTemplate::Pair { condition, consequence } => {
                let mut v = condition.texts();
                v.extend(consequence.texts());
                v
            }
            FragmentTemplate::Whole(s) => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    /// As declared in `@Types`, in declaration order.
    pub placeholders: Vec<Placeholder>,
    pub description: FragmentTemplate,
    /// Simple-name pattern of the generated test class.
    pub test_class_pattern: String,
    pub test_package_pattern: String,
    pub method: MethodDecl,
    /// The test method with template annotations removed, dedented to
    /// column zero, tabs in indentation expanded, `\n` line endings.
    pub test_text: String,
    /// Imports of the template file.
    pub imports: Vec<Import>,
    pub source_path: PathBuf,
}

impl Template {
    pub fn placeholder_type(&self, name: &str) -> Option<PlaceholderType> {
        self.placeholders.iter().find(|p| p.name == name).map(|p| p.ptype)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    /// Sorted by name.
    pub templates: Vec<Template>,
}

impl Catalog {
    pub fn get(&self, name: &str) -> Option<&Template> {
        self.templates
            .binary_search_by(|t| t.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.templates[i])
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("{}: template `{template}` uses undeclared placeholders: {}", path.display(), placeholders.join(", "))]
    MissingTypesAnnotation { path: PathBuf, template: String, placeholders: Vec<String> },
    #[error("{}: template `{template}` declares unused placeholders: {}", path.display(), placeholders.join(", "))]
    UnusedPlaceholder { path: PathBuf, template: String, placeholders: Vec<String> },
    #[error("{}: template `{template}` declares predefined placeholder `{placeholder}`", path.display())]
    PredefinedPlaceholder { path: PathBuf, template: String, placeholder: String },
    #[error("template `{name}` is defined more than once: {}", paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    DuplicateTemplateName { name: String, paths: Vec<PathBuf> },
    #[error("{}: template `{template}`: {message}", path.display())]
    BadPlaceholderType { path: PathBuf, template: String, message: String },
    #[error("{}: template `{template}`: malformed description: {message}", path.display())]
    MalformedDescription { path: PathBuf, template: String, message: String },
    #[error("{}: {message}", path.display())]
    MalformedAnnotation { path: PathBuf, message: String },
}

impl CatalogError {
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::MissingTypesAnnotation { .. } => "MissingTypesAnnotation",
            CatalogError::UnusedPlaceholder { .. } => "UnusedPlaceholder",
            CatalogError::PredefinedPlaceholder { .. } => "PredefinedPlaceholder",
            CatalogError::DuplicateTemplateName { .. } => "DuplicateTemplateName",
            CatalogError::BadPlaceholderType { .. } => "BadPlaceholderType",
            CatalogError::MalformedDescription { .. } => "MalformedDescription",
            CatalogError::MalformedAnnotation { .. } => "MalformedAnnotation",
        }
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_placeholder_name(s: &str) -> bool {
    let mut b = s.bytes();
    matches!(b.next(), Some(c) if c.is_ascii_alphabetic() || c == b'_')
        && b.all(|c| c.is_ascii_alphanumeric() || c == b'_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceholderMatch {
    pub name: String,
    /// Dollar signs included.
    pub span: Span,
}

/// Left-to-right, non-overlapping matches of `$name$`.
pub fn scan_placeholders(text: &str) -> Vec<PlaceholderMatch> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'$' {
            let start = i + 1;
            let mut j = start;
            if j < bytes.len() && (bytes[j].is_ascii_alphabetic() || bytes[j] == b'_') {
                j += 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'$' {
                    out.push(PlaceholderMatch { name: text[start..j].to_string(), span: Span::new(i, j + 1) });
                    i = j + 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

pub fn placeholder_names(text: &str) -> BTreeSet<String> {
    scan_placeholders(text).into_iter().map(|m| m.name).collect()
}

/// Replace every placeholder bound in `bindings`; others stay as written.
pub fn substitute(text: &str, bindings: &BTreeMap<&str, &str>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in scan_placeholders(text) {
        if let Some(v) = bindings.get(m.name.as_str()) {
            out.push_str(&text[last..m.span.start]);
            out.push_str(v);
            last = m.span.end;
        }
    }
    out.push_str(&text[last..]);
    out
}

/// Contents of a single string literal argument, `value = "..."` allowed.
fn string_argument(args: Option<&str>) -> Option<String> {
    let mut a = args?.trim();
    if let Some(rest) = a.strip_prefix("value") {
        a = rest.trim_start().strip_prefix('=')?.trim_start();
    }
    let inner = a.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next()? {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                c @ ('"' | '\\' | '\'') => out.push(c),
                _ => return None,
            },
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}

fn parse_types(args: &str) -> Result<Vec<Placeholder>, String> {
    let mut out: Vec<Placeholder> = Vec::new();
    for entry in args.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            if args.trim().is_empty() {
                break;
            }
            return Err("empty entry in @Types".into());
        }
        let (key, value) = entry.split_once('=').ok_or_else(|| format!("`{entry}` is not of the form $name$=TYPE"))?;
        let key = key.trim();
        let name = key
            .strip_prefix('$')
            .and_then(|k| k.strip_suffix('$'))
            .filter(|k| is_placeholder_name(k))
            .ok_or_else(|| format!("`{key}` is not a placeholder"))?;
        let value = value.trim();
        let ptype = value.rsplit('.').next().unwrap_or(value).parse::<PlaceholderType>()?;
        if out.iter().any(|p| p.name == name) {
            return Err(format!("placeholder `{name}` is declared twice"));
        }
        out.push(Placeholder { name: name.to_string(), ptype });
    }
    Ok(out)
}

fn split_unescaped_bars(s: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' && chars.peek() == Some(&'|') {
            parts.last_mut().unwrap().push('|');
            chars.next();
        } else if c == '|' {
            parts.push(String::new());
        } else {
            parts.last_mut().unwrap().push(c);
        }
    }
    parts.into_iter().map(|p| p.trim().to_string()).collect()
}

fn parse_statement(tag: &str, rest: &str) -> Result<StatementTemplate, String> {
    let rest = rest.trim();
    if let Some(free) = rest.strip_prefix("text:") {
        let free = free.trim();
        if free.is_empty() {
            return Err(format!("{tag} has empty free-form text"));
        }
        return Ok(StatementTemplate::Freeform(free.to_string()));
    }
    let parts = split_unescaped_bars(rest);
    if parts.len() != 3 {
        return Err(format!("{tag} needs `subject | relation | object`, found {} part(s)", parts.len()));
    }
    if parts.iter().any(String::is_empty) {
        return Err(format!("{tag} has an empty part"));
    }
    let [s, r, o]: [String; 3] = parts.try_into().unwrap();
    Ok(StatementTemplate::Structured(Triple::new(s, r, o)))
}

/// Read the fragment structure from the lines of a header comment.
pub fn parse_description<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<FragmentTemplate, String> {
    let lines: Vec<&str> = lines.into_iter().map(str::trim).filter(|l| !l.is_empty()).collect();
    let tag_of = |l: &str| -> Option<&'static str> {
        ["@cond", "@conseq"]
            .into_iter()
            .find(|t| l.strip_prefix(t).is_some_and(|r| r.is_empty() || r.starts_with(char::is_whitespace)))
    };
    if !lines.iter().any(|l| tag_of(l).is_some()) {
        if lines.is_empty() {
            return Err("description is empty".into());
        }
        return Ok(FragmentTemplate::Whole(lines.join(" ")));
    }
    let mut condition = None;
    let mut consequence = None;
    for l in lines {
        let Some(tag) = tag_of(l) else {
            return Err(format!("untagged line `{l}` mixed with @cond/@conseq lines"));
        };
        let slot = if tag == "@cond" { &mut condition } else { &mut consequence };
        if slot.is_some() {
            return Err(format!("{tag} appears more than once"));
        }
        *slot = Some(parse_statement(tag, &l[tag.len()..])?);
    }
    match (condition, consequence) {
        (Some(condition), Some(consequence)) => Ok(FragmentTemplate::Pair { condition, consequence }),
        (None, _) => Err("missing @cond line".into()),
        (_, None) => Err("missing @conseq line".into()),
    }
}

fn expand_leading_tabs(line: &str) -> String {
    let ws = line.len() - line.trim_start_matches([' ', '\t']).len();
    let mut out = String::new();
    for c in line[..ws].chars() {
        if c == '\t' {
            let pad = 4 - out.len() % 4;
            out.extend(std::iter::repeat_n(' ', pad));
        } else {
            out.push(' ');
        }
    }
    out.push_str(&line[ws..]);
    out
}

/// Cut `spans` (relative to `text`) out of `text`, dropping lines left blank.
fn remove_spans(text: &str, spans: &[Span]) -> String {
    let mut spans = spans.to_vec();
    spans.sort_by_key(|s| std::cmp::Reverse(s.start));
    let mut out = text.to_string();
    for s in spans {
        let line_start = out[..s.start].rfind('\n').map_or(0, |i| i + 1);
        let line_end = out[s.end..].find('\n').map_or(out.len(), |i| s.end + i + 1);
        let before_blank = out[line_start..s.start].trim().is_empty();
        let after_blank = out[s.end..line_end].trim().is_empty();
        if before_blank && after_blank {
            out.replace_range(line_start..line_end, "");
        } else {
            let ws = out[s.end..].len() - out[s.end..].trim_start_matches([' ', '\t']).len();
            out.replace_range(s.start..s.end + ws, "");
        }
    }
    out
}

/// Normalize the method text: template annotations gone, common indentation
/// removed, leading tabs expanded, `\n` endings.
fn test_text(src: &str, method: &MethodDecl, stripped: &[&Annotation]) -> String {
    let start = method.span.start;
    let text = method.span.slice(src);
    let spans: Vec<Span> = stripped.iter().map(|a| Span::new(a.span.start - start, a.span.end - start)).collect();
    let text = remove_spans(text, &spans).replace("\r\n", "\n");
    let line_start = src[..start].rfind('\n').map_or(0, |i| i + 1);
    let base = expand_leading_tabs(&src[line_start..start]).len();
    let mut out = String::new();
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
            let expanded = expand_leading_tabs(line);
            let ws = expanded.len() - expanded.trim_start_matches(' ').len();
            out.push_str(&expanded[ws.min(base)..]);
        } else {
            out.push_str(line);
        }
    }
    out
}

fn load_template(unit: &SourceUnit, method: &MethodDecl, marker: &Annotation) -> Result<Template, CatalogError> {
    let path = unit.path.clone();
    let name = string_argument(marker.args.as_deref()).filter(|n| !n.trim().is_empty()).ok_or_else(|| {
        CatalogError::MalformedAnnotation {
            path: path.clone(),
            message: format!("@Template on `{}` needs a non-empty string argument", method.name),
        }
    })?;
    let placeholders = match method.annotation(TYPES_ANNOTATION) {
        Some(a) => parse_types(a.args.as_deref().unwrap_or("")).map_err(|message| CatalogError::BadPlaceholderType {
            path: path.clone(),
            template: name.clone(),
            message,
        })?,
        None => Vec::new(),
    };
    if let Some(p) = placeholders.iter().find(|p| PREDEFINED.contains(&p.name.as_str())) {
        return Err(CatalogError::PredefinedPlaceholder { path, template: name, placeholder: p.name.clone() });
    }
    let (test_class_pattern, test_package_pattern) = match method.annotation(TEST_CLASS_ANNOTATION) {
        Some(a) => {
            let pattern = string_argument(a.args.as_deref()).filter(|p| !p.trim().is_empty()).ok_or_else(|| {
                CatalogError::MalformedAnnotation {
                    path: path.clone(),
                    message: format!("@TestClass on template `{name}` needs a non-empty string argument"),
                }
            })?;
            match pattern.rsplit_once('.') {
                Some((pkg, class)) => (class.to_string(), pkg.to_string()),
                None => (pattern, DEFAULT_TEST_PACKAGE.to_string()),
            }
        }
        None => (DEFAULT_TEST_CLASS.to_string(), DEFAULT_TEST_PACKAGE.to_string()),
    };
    let malformed = |message: String| CatalogError::MalformedDescription {
        path: path.clone(),
        template: name.clone(),
        message,
    };
    let description = match &method.header_comment {
        Some(c) => parse_description(c.text_lines()).map_err(malformed)?,
        None => return Err(malformed("the template has no header comment".into())),
    };
    let stripped: Vec<&Annotation> = method
        .annotations
        .iter()
        .filter(|a| [TEMPLATE_ANNOTATION, TYPES_ANNOTATION, TEST_CLASS_ANNOTATION].contains(&a.simple_name()))
        .collect();
    let test_text = test_text(&unit.raw_text, method, &stripped);

    let mut used = placeholder_names(&test_text);
    for t in description.texts() {
        used.extend(placeholder_names(t));
    }
    used.extend(placeholder_names(&test_class_pattern));
    used.extend(placeholder_names(&test_package_pattern));
    let declared: BTreeSet<String> = placeholders.iter().map(|p| p.name.clone()).collect();
    let undeclared: Vec<String> = used
        .iter()
        .filter(|n| !declared.contains(*n) && !PREDEFINED.contains(&n.as_str()))
        .cloned()
        .collect();
    if !undeclared.is_empty() {
        return Err(CatalogError::MissingTypesAnnotation { path, template: name, placeholders: undeclared });
    }
    let unused: Vec<String> = declared.difference(&used).cloned().collect();
    if !unused.is_empty() {
        return Err(CatalogError::UnusedPlaceholder { path, template: name, placeholders: unused });
    }
    Ok(Template {
        name,
        placeholders,
        description,
        test_class_pattern,
        test_package_pattern,
        method: method.clone(),
        test_text,
        imports: unit.imports.clone(),
        source_path: unit.path.clone(),
    })
}

/// Collect every `@Template` method of the given files. All errors are
/// reported, not only the first.
pub fn load_catalog(files: &[SourceUnit]) -> Result<Catalog, Vec<CatalogError>> {
    let mut errors = Vec::new();
    let mut by_name: BTreeMap<String, Vec<Template>> = BTreeMap::new();
    for unit in files {
        for method in unit.methods() {
            let Some(marker) = method.annotation(TEMPLATE_ANNOTATION) else {
                continue;
            };
            match load_template(unit, method, marker) {
                Ok(t) => by_name.entry(t.name.clone()).or_default().push(t),
                Err(e) => errors.push(e),
            }
        }
    }
    let mut templates = Vec::new();
    for (name, mut group) in by_name {
        if group.len() > 1 {
            let mut paths: Vec<PathBuf> = group.iter().map(|t| t.source_path.clone()).collect();
            paths.sort();
            errors.push(CatalogError::DuplicateTemplateName { name, paths });
        } else {
            templates.push(group.pop().unwrap());
        }
    }
    if errors.is_empty() {
        Ok(Catalog { templates })
    } else {
        errors.sort_by_key(|e| e.to_string());
        Err(errors)
    }
}
