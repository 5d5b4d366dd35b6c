//! Project configuration and the check / generate / clean / list commands.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::doc_generation::{fragment_from, instantiate_fragment, integrate_docs, render_lines, render_statements, DSCRIBE_TAG};
use crate::invocation_store::{load_invocations, resolve_context, Invocation, InvocationContext};
use crate::placeholder_typing::TypingOptions;
use crate::source_model::{build_class_index, parse_unit, ClassIndex, MethodDecl, SourceUnit, DEFAULT_KNOWN_TYPES};
use crate::template_catalog::{load_catalog, Catalog, FragmentTemplate, Template};
use crate::test_generation::{check_guard, group_tests, instantiate_test, resolve_collisions, write_generated_folder, GeneratedTest};

pub const CONFIG_FILE: &str = "dscribe.json";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    source_roots: Vec<PathBuf>,
    templates_dir: Option<PathBuf>,
    #[serde(default)]
    invocations: Vec<String>,
    gen_tests_dir: Option<PathBuf>,
    known_types_path: Option<PathBuf>,
    #[serde(default)]
    lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectConfig {
    /// Directory relative paths and invocation patterns are resolved against.
    pub base_dir: PathBuf,
    pub source_roots: Vec<PathBuf>,
    pub templates_dir: PathBuf,
    /// File paths or glob patterns.
    pub invocations: Vec<String>,
    pub gen_tests_dir: PathBuf,
    pub known_types_path: Option<PathBuf>,
    pub lenient: bool,
}

/// Command-line values that replace configuration keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub source_roots: Vec<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub invocations: Vec<String>,
    pub gen_tests_dir: Option<PathBuf>,
    pub known_types_path: Option<PathBuf>,
    pub lenient: bool,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{0}")]
    Inconsistent(String),
}

/// Lexical normalization: `.` dropped, `..` folded.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other),
        }
    }
    out
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    normalize(&base.join(p))
}

impl ProjectConfig {
    /// Read a configuration file and apply overrides. Override paths are
    /// relative to the current directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<ProjectConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Invalid { path: path.to_path_buf(), message: e.to_string() })?;
        let cwd = std::env::current_dir().unwrap_or_default();
        let base_dir = absolute(&cwd, path.parent().unwrap_or(Path::new("")));
        let missing = |key: &str| ConfigError::Invalid { path: path.to_path_buf(), message: format!("missing `{key}`") };

        let source_roots = if overrides.source_roots.is_empty() {
            file.source_roots.iter().map(|p| absolute(&base_dir, p)).collect()
        } else {
            overrides.source_roots.iter().map(|p| absolute(&cwd, p)).collect()
        };
        let templates_dir = match (&overrides.templates_dir, &file.templates_dir) {
            (Some(p), _) => absolute(&cwd, p),
            (None, Some(p)) => absolute(&base_dir, p),
            (None, None) => return Err(missing("templates_dir")),
        };
        let gen_tests_dir = match (&overrides.gen_tests_dir, &file.gen_tests_dir) {
            (Some(p), _) => absolute(&cwd, p),
            (None, Some(p)) => absolute(&base_dir, p),
            (None, None) => return Err(missing("gen_tests_dir")),
        };
        let invocations = if overrides.invocations.is_empty() {
            file.invocations.iter().map(|p| absolute(&base_dir, Path::new(p)).to_string_lossy().into_owned()).collect()
        } else {
            overrides.invocations.iter().map(|p| absolute(&cwd, Path::new(p)).to_string_lossy().into_owned()).collect()
        };
        let known_types_path = match (&overrides.known_types_path, &file.known_types_path) {
            (Some(p), _) => Some(absolute(&cwd, p)),
            (None, Some(p)) => Some(absolute(&base_dir, p)),
            (None, None) => None,
        };
        let config = ProjectConfig {
            base_dir,
            source_roots,
            templates_dir,
            invocations,
            gen_tests_dir,
            known_types_path,
            lenient: file.lenient || overrides.lenient,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.source_roots.is_empty() {
            return Err(ConfigError::Inconsistent("no source roots configured".into()));
        }
        for root in &self.source_roots {
            if root.starts_with(&self.gen_tests_dir) || self.gen_tests_dir.starts_with(root) {
                return Err(ConfigError::Inconsistent(format!(
                    "gen_tests_dir {} overlaps source root {}",
                    self.gen_tests_dir.display(),
                    root.display()
                )));
            }
            if !root.is_dir() {
                return Err(ConfigError::Inconsistent(format!("source root {} is not a directory", root.display())));
            }
        }
        Ok(())
    }

    fn display(&self, p: &Path) -> String {
        p.strip_prefix(&self.base_dir).unwrap_or(p).display().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: String,
    pub code: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub loaded: usize,
    pub valid: usize,
    pub invalid: usize,
    pub tests_written: usize,
    pub doc_lines_written: usize,
    pub files_touched: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub counts: Counts,
    pub diagnostics: Vec<Diagnostic>,
}

impl RunReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.has_errors())
    }

    fn error(&mut self, location: impl Into<String>, code: &str, message: impl Into<String>) {
        self.push(Severity::Error, location, code, message);
    }

    fn warning(&mut self, location: impl Into<String>, code: &str, message: impl Into<String>) {
        self.push(Severity::Warning, location, code, message);
    }

    fn push(&mut self, severity: Severity, location: impl Into<String>, code: &str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity,
            location: location.into(),
            code: code.to_string(),
            message: message.into(),
        });
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let c = &self.counts;
        vec![
            format!("invocations loaded: {}", c.loaded),
            format!("invocations valid: {}", c.valid),
            format!("invocations invalid: {}", c.invalid),
            format!("tests written: {}", c.tests_written),
            format!("doc lines written: {}", c.doc_lines_written),
            format!("files touched: {}", c.files_touched),
        ]
    }
}

fn java_files(root: &Path, skip: &[&Path]) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_entry(|e| !skip.iter().any(|s| e.path() == *s))
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "java"))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

fn parse_files(config: &ProjectConfig, files: &[PathBuf], report: &mut RunReport) -> Option<Vec<SourceUnit>> {
    let results: Vec<Result<SourceUnit, Diagnostic>> = files
        .par_iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| Diagnostic {
                severity: Severity::Error,
                location: config.display(path),
                code: "Io".into(),
                message: e.to_string(),
            })?;
            parse_unit(&text, path).map_err(|e| Diagnostic {
                severity: Severity::Error,
                location: format!("{}:{}:{}", config.display(path), e.line, e.column),
                code: "SyntaxError".into(),
                message: e.message,
            })
        })
        .collect();
    let mut units = Vec::new();
    for r in results {
        match r {
            Ok(u) => units.push(u),
            Err(d) => report.diagnostics.push(d),
        }
    }
    (!report.has_errors()).then_some(units)
}

fn load_sources(config: &ProjectConfig, report: &mut RunReport) -> Option<Vec<SourceUnit>> {
    let skip = [config.templates_dir.as_path(), config.gen_tests_dir.as_path()];
    let mut files: Vec<PathBuf> = config.source_roots.iter().flat_map(|r| java_files(r, &skip)).collect();
    files.sort();
    files.dedup();
    parse_files(config, &files, report)
}

fn load_templates(config: &ProjectConfig, report: &mut RunReport) -> Option<Catalog> {
    if !config.templates_dir.is_dir() {
        report.error(config.display(&config.templates_dir), "Io", "templates directory does not exist");
        return None;
    }
    let units = parse_files(config, &java_files(&config.templates_dir, &[]), report)?;
    match load_catalog(&units) {
        Ok(c) => Some(c),
        Err(errors) => {
            for e in errors {
                report.error(config.display(&config.templates_dir), e.code(), e.to_string());
            }
            None
        }
    }
}

fn load_index(config: &ProjectConfig, units: &[SourceUnit], report: &mut RunReport) -> Option<ClassIndex> {
    let known = match &config.known_types_path {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                report.error(config.display(p), "Io", e.to_string());
                return None;
            }
        },
        None => DEFAULT_KNOWN_TYPES.to_string(),
    };
    match build_class_index(units, &known) {
        Ok(i) => Some(i),
        Err(e) => {
            let code = match e {
                crate::source_model::IndexError::KnownTypes(_) => "KnownTypes",
                crate::source_model::IndexError::DuplicateType { .. } => "DuplicateType",
                crate::source_model::IndexError::CyclicHierarchy { .. } => "CyclicHierarchy",
            };
            report.error("class index", code, e.to_string());
            None
        }
    }
}

fn has_glob_chars(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

/// Invocations with their location, duplicates collapsed.
fn load_all_invocations(config: &ProjectConfig, report: &mut RunReport) -> Vec<(String, Invocation)> {
    let mut files = Vec::new();
    for pattern in &config.invocations {
        if !has_glob_chars(pattern) {
            files.push(PathBuf::from(pattern));
            continue;
        }
        match glob::glob(pattern) {
            Ok(paths) => {
                let mut matched: Vec<PathBuf> = paths.filter_map(Result::ok).filter(|p| p.is_file()).collect();
                if matched.is_empty() {
                    report.warning(pattern.clone(), "NoInvocationFiles", "pattern matches no file");
                }
                matched.sort();
                files.extend(matched);
            }
            Err(e) => report.error(pattern.clone(), "BadPattern", e.to_string()),
        }
    }
    files.dedup();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for path in files {
        let shown = config.display(&path);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                report.error(shown, "Io", e.to_string());
                continue;
            }
        };
        match load_invocations(&text) {
            Ok(invs) => {
                for (i, inv) in invs.into_iter().enumerate() {
                    let location = format!("{shown}#invocations[{i}]");
                    if !seen.insert(inv.clone()) {
                        report.warning(location, "DuplicateInvocation", "identical to an earlier invocation; ignored");
                        continue;
                    }
                    out.push((location, inv));
                }
            }
            Err(e) => {
                let code = match e {
                    crate::invocation_store::LoadError::Json { .. } => "InvalidJson",
                    crate::invocation_store::LoadError::Schema { .. } => "SchemaError",
                    crate::invocation_store::LoadError::UnsupportedVersion(_) => "UnsupportedVersion",
                };
                report.error(shown, code, e.to_string());
            }
        }
    }
    out
}

fn check_invocations<'a>(
    config: &ProjectConfig,
    catalog: &'a Catalog,
    index: &'a ClassIndex,
    report: &mut RunReport,
) -> Vec<(String, InvocationContext<'a>)> {
    let invocations = load_all_invocations(config, report);
    report.counts.loaded = invocations.len();
    let options = TypingOptions { lenient: config.lenient };
    let mut contexts = Vec::new();
    for (location, inv) in invocations {
        match resolve_context(&inv, catalog, index, options) {
            Ok(ctx) => {
                for w in &ctx.warnings {
                    report.warning(location.clone(), "Lenient", w.clone());
                }
                contexts.push((location, ctx));
            }
            Err(errors) => {
                report.counts.invalid += 1;
                for e in errors {
                    report.error(location.clone(), e.code(), e.to_string());
                }
            }
        }
    }
    report.counts.valid = contexts.len();
    contexts
}

/// Validate sources, templates and invocations without writing anything.
pub fn cmd_check(config: &ProjectConfig) -> RunReport {
    let mut report = RunReport::default();
    let Some(units) = load_sources(config, &mut report) else {
        return report;
    };
    let Some(catalog) = load_templates(config, &mut report) else {
        return report;
    };
    let Some(index) = load_index(config, &units, &mut report) else {
        return report;
    };
    check_invocations(config, &catalog, &index, &mut report);
    report
}

/// Key of a method in the project sources.
type MethodKey = (PathBuf, usize);

fn method_key(path: &Path, m: &MethodDecl) -> MethodKey {
    (path.to_path_buf(), m.span.start)
}

/// Rewrite the header comments of every file; returns files changed.
fn write_docs(
    config: &ProjectConfig,
    units: &[SourceUnit],
    lines: &BTreeMap<MethodKey, Vec<String>>,
    report: &mut RunReport,
) -> usize {
    let mut touched = 0;
    let no_lines: Vec<String> = Vec::new();
    for unit in units {
        let edits: Vec<(&MethodDecl, &[String])> = unit
            .methods()
            .filter_map(|m| {
                let new = lines.get(&method_key(&unit.path, m));
                let tagged = m.header_comment.as_ref().is_some_and(|c| c.has_tag(DSCRIBE_TAG));
                match new {
                    Some(l) => Some((m, l.as_slice())),
                    None if tagged => Some((m, no_lines.as_slice())),
                    None => None,
                }
            })
            .collect();
        if edits.is_empty() {
            continue;
        }
        let out = integrate_docs(&unit.raw_text, &edits);
        if out == unit.raw_text {
            continue;
        }
        match fs::write(&unit.path, out) {
            Ok(()) => touched += 1,
            Err(e) => report.error(config.display(&unit.path), "Io", e.to_string()),
        }
    }
    touched
}

fn guard(config: &ProjectConfig, report: &mut RunReport) -> bool {
    match check_guard(&config.gen_tests_dir) {
        Ok(()) => true,
        Err(e) => {
            let code = match e {
                crate::test_generation::WriteError::GuardError(_) => "GuardError",
                crate::test_generation::WriteError::Io { .. } => "Io",
            };
            report.error(config.display(&config.gen_tests_dir), code, e.to_string());
            false
        }
    }
}

fn write_tests(config: &ProjectConfig, tests: &[GeneratedTest], report: &mut RunReport) -> bool {
    let files = group_tests(tests);
    match write_generated_folder(&files, &config.gen_tests_dir) {
        Ok(r) => {
            report.counts.files_touched += r.touched();
            true
        }
        Err(e) => {
            let code = match e {
                crate::test_generation::WriteError::GuardError(_) => "GuardError",
                crate::test_generation::WriteError::Io { .. } => "Io",
            };
            report.error(config.display(&config.gen_tests_dir), code, e.to_string());
            false
        }
    }
}

/// Check, then regenerate the test folder and the `@dscribe` lines of every
/// source file from the valid invocations.
pub fn cmd_generate(config: &ProjectConfig) -> RunReport {
    let mut report = RunReport::default();
    let Some(units) = load_sources(config, &mut report) else {
        return report;
    };
    let Some(catalog) = load_templates(config, &mut report) else {
        return report;
    };
    let Some(index) = load_index(config, &units, &mut report) else {
        return report;
    };
    let contexts = check_invocations(config, &catalog, &index, &mut report);
    if !guard(config, &mut report) {
        return report;
    }

    let results: Vec<_> = contexts.par_iter().map(|(_, ctx)| instantiate_test(ctx)).collect();
    let mut tests = Vec::new();
    let mut fragments: BTreeMap<MethodKey, Vec<_>> = BTreeMap::new();
    for ((location, ctx), result) in contexts.iter().zip(results) {
        match result {
            Ok(t) => {
                tests.push(t);
                fragments.entry(method_key(ctx.focal_path, ctx.focal)).or_default().push(instantiate_fragment(ctx));
            }
            Err(e) => {
                report.counts.valid -= 1;
                report.counts.invalid += 1;
                let code = match e {
                    crate::test_generation::GenerationError::ResyntaxError { .. } => "ResyntaxError",
                    crate::test_generation::GenerationError::BadTestClass { .. } => "BadTestClass",
                };
                report.error(location.clone(), code, e.to_string());
            }
        }
    }
    for w in resolve_collisions(&mut tests) {
        report.warning(config.display(&config.gen_tests_dir), "IdentifierCollision", w);
    }
    report.counts.tests_written = tests.len();
    let lines: BTreeMap<MethodKey, Vec<String>> = fragments.into_iter().map(|(k, f)| (k, render_lines(&f))).collect();
    report.counts.doc_lines_written = lines.values().map(Vec::len).sum();

    if !write_tests(config, &tests, &mut report) {
        return report;
    }
    report.counts.files_touched += write_docs(config, &units, &lines, &mut report);
    report
}

/// Empty the generated folder and remove every `@dscribe` line.
pub fn cmd_clean(config: &ProjectConfig) -> RunReport {
    let mut report = RunReport::default();
    let Some(units) = load_sources(config, &mut report) else {
        return report;
    };
    if !guard(config, &mut report) {
        return report;
    }
    if !write_tests(config, &[], &mut report) {
        return report;
    }
    report.counts.files_touched += write_docs(config, &units, &BTreeMap::new(), &mut report);
    report
}

/// Description of a template with its placeholders left in place.
pub fn describe(template: &Template) -> String {
    let f = fragment_from(&template.description, &BTreeMap::new(), &Default::default(), &template.name);
    match &f.body {
        FragmentTemplate::Whole(text) => text.clone(),
        FragmentTemplate::Pair { condition, consequence } => format!(
            "If {}, then {}.",
            render_statements(std::slice::from_ref(condition), "or"),
            render_statements(std::slice::from_ref(consequence), "and")
        ),
    }
}

/// The catalog as text: a count line, then one entry per template.
pub fn cmd_list(config: &ProjectConfig) -> (RunReport, Vec<String>) {
    let mut report = RunReport::default();
    let Some(catalog) = load_templates(config, &mut report) else {
        return (report, Vec::new());
    };
    let mut out = vec![format!("{} template{}", catalog.len(), if catalog.len() == 1 { "" } else { "s" })];
    for t in &catalog.templates {
        let placeholders: Vec<String> = t.placeholders.iter().map(|p| format!("{}:{}", p.name, p.ptype)).collect();
        let shown = if placeholders.is_empty() { "no placeholders".to_string() } else { placeholders.join(", ") };
        out.push(format!("{} \u{2014} {}", t.name, shown));
        out.push(format!("    {}", describe(t)));
    }
    (report, out)
}
