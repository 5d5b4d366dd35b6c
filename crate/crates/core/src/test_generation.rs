//! Unit tests instantiated from templates, grouped into classes and written
//! to a generated folder owned by the tool.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use walkdir::WalkDir;

use crate::invocation_store::{FocalSignature, InvocationContext};
use crate::lexer::{lex, Span, TokenKind};
use crate::names;
use crate::source_model::{parse_unit, Import};
use crate::template_catalog::{scan_placeholders, substitute, TEMPLATE_ANNOTATION, TEST_CLASS_ANNOTATION, TYPES_ANNOTATION};

/// Marks a directory as owned by the tool.
pub const MARKER_FILE: &str = ".dscribe-generated";

pub const BANNER: &str = "// Generated by dscribe from template invocations. Do not edit: changes are overwritten.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTest {
    pub package_name: String,
    pub class_name: String,
    pub method_name: String,
    /// Method source at column zero, provenance comment first, `\n` endings.
    pub method_text: String,
    pub imports: Vec<Import>,
    pub template_name: String,
    pub signature: FocalSignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("template `{template}` applied to {signature} does not parse: {message}")]
    ResyntaxError { template: String, signature: FocalSignature, message: String },
    #[error("template `{template}` applied to {signature} yields invalid test class name `{name}`")]
    BadTestClass { template: String, signature: FocalSignature, name: String },
}

/// Keep `[A-Za-z0-9_]`, collapse `_` runs, fall back to `v`.
pub fn sanitize_identifier_part(value: &str) -> String {
    let mut out = String::new();
    for c in value.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
        if !(c == '_' && out.ends_with('_')) {
            out.push(c);
        }
    }
    if out.is_empty() {
        out.push('v');
    }
    out
}

/// Substitute placeholders in Java text. A placeholder forming a whole
/// identifier is replaced verbatim; one embedded in a longer identifier is
/// sanitized first. Comments and literals get verbatim values.
pub fn substitute_code(text: &str, bindings: &BTreeMap<&str, &str>) -> String {
    let Ok(tokens) = lex(text) else {
        return substitute(text, bindings);
    };
    let mut out = String::with_capacity(text.len());
    for t in tokens {
        let tok = t.text(text);
        if t.kind != TokenKind::Ident {
            out.push_str(&substitute(tok, bindings));
            continue;
        }
        let matches = scan_placeholders(tok);
        if matches.len() == 1 && matches[0].span == Span::new(0, tok.len()) {
            out.push_str(&substitute(tok, bindings));
            continue;
        }
        let sanitized: BTreeMap<&str, String> =
            bindings.iter().map(|(k, v)| (*k, sanitize_identifier_part(v))).collect();
        let refs = sanitized.iter().map(|(k, v)| (*k, v.as_str())).collect();
        out.push_str(&substitute(tok, &refs));
    }
    out
}

fn is_template_import(i: &Import) -> bool {
    [TEMPLATE_ANNOTATION, TYPES_ANNOTATION, TEST_CLASS_ANNOTATION].contains(&names::last_segment(&i.name))
}

fn provenance(ctx: &InvocationContext) -> String {
    format!("// dscribe: {}#{}", ctx.template.name, ctx.invocation.signature)
}

/// Instantiate the template's test for one validated context.
pub fn instantiate_test(ctx: &InvocationContext) -> Result<GeneratedTest, GenerationError> {
    let bindings = ctx.binding_texts();
    let template = ctx.template;
    let signature = ctx.invocation.signature.clone();
    let body = substitute_code(&template.test_text, &bindings);
    let method_text = format!("{}\n{}", provenance(ctx), body);

    let resyntax = |message: String| GenerationError::ResyntaxError {
        template: template.name.clone(),
        signature: signature.clone(),
        message,
    };
    let wrapped = format!("class X {{\n{method_text}\n}}\n");
    let unit = parse_unit(&wrapped, Path::new(&template.source_path)).map_err(|e| resyntax(e.message))?;
    let methods: Vec<_> = unit.methods().collect();
    let [method] = methods.as_slice() else {
        return Err(resyntax(format!("expected one method declaration, found {}", methods.len())));
    };

    let sanitized: BTreeMap<&str, String> =
        bindings.iter().map(|(k, v)| (*k, sanitize_identifier_part(v))).collect();
    let class_name = substitute(&template.test_class_pattern, &sanitized.iter().map(|(k, v)| (*k, v.as_str())).collect());
    let package_name = substitute(&template.test_package_pattern, &bindings);
    let package_name = package_name.trim_matches('.').to_string();
    if !names::is_identifier(&class_name) || !(package_name.is_empty() || names::is_dotted_name(&package_name)) {
        return Err(GenerationError::BadTestClass {
            template: template.name.clone(),
            signature,
            name: format!("{package_name}.{class_name}"),
        });
    }
    Ok(GeneratedTest {
        package_name,
        class_name,
        method_name: method.name.clone(),
        method_text,
        imports: template.imports.iter().filter(|i| !is_template_import(i)).cloned().collect(),
        template_name: template.name.clone(),
        signature,
    })
}

/// Rename tests whose method name is already taken in their class, in the
/// given order: `name`, `name_2`, `name_3`... Returns one warning per rename.
pub fn resolve_collisions(tests: &mut [GeneratedTest]) -> Vec<String> {
    let mut taken: HashMap<(String, String), BTreeSet<String>> = HashMap::new();
    for t in tests.iter() {
        taken.entry((t.package_name.clone(), t.class_name.clone())).or_default().insert(t.method_name.clone());
    }
    let mut seen: HashMap<(String, String), BTreeSet<String>> = HashMap::new();
    let mut warnings = Vec::new();
    for t in tests.iter_mut() {
        let key = (t.package_name.clone(), t.class_name.clone());
        let used = seen.entry(key.clone()).or_default();
        if used.insert(t.method_name.clone()) {
            continue;
        }
        let all = taken.get_mut(&key).unwrap();
        let mut n = 2;
        let fresh = loop {
            let candidate = format!("{}_{n}", t.method_name);
            if !all.contains(&candidate) && !used.contains(&candidate) {
                break candidate;
            }
            n += 1;
        };
        warnings.push(format!(
            "IdentifierCollision: test `{}` from {} in {}.{} renamed to `{fresh}`",
            t.method_name, t.signature, t.package_name, t.class_name
        ));
        rename_method(t, &fresh);
        used.insert(fresh.clone());
        all.insert(fresh);
    }
    warnings
}

fn rename_method(test: &mut GeneratedTest, fresh: &str) {
    let wrapped = format!("class X {{\n{}\n}}\n", test.method_text);
    let unit = parse_unit(&wrapped, Path::new("X.java")).expect("instantiated tests parse");
    let method = unit.methods().next().expect("one method");
    let offset = "class X {\n".len();
    let span = method.name_span;
    test.method_text.replace_range(span.start - offset..span.end - offset, fresh);
    test.method_name = fresh.to_string();
}

fn indent(text: &str, by: &str) -> String {
    text.split('\n')
        .map(|l| if l.is_empty() { String::new() } else { format!("{by}{l}") })
        .collect::<Vec<_>>()
        .join("\n")
}

fn import_line(i: &Import) -> String {
    format!("import {}{};", if i.is_static { "static " } else { "" }, i.name)
}

/// One file per test class, keyed by path relative to the generated root.
pub fn group_tests(tests: &[GeneratedTest]) -> BTreeMap<PathBuf, String> {
    let mut classes: BTreeMap<(String, String), Vec<&GeneratedTest>> = BTreeMap::new();
    for t in tests {
        classes.entry((t.package_name.clone(), t.class_name.clone())).or_default().push(t);
    }
    let mut files = BTreeMap::new();
    for ((package, class), mut members) in classes {
        members.sort_by(|a, b| a.method_name.cmp(&b.method_name).then_with(|| a.method_text.cmp(&b.method_text)));
        let mut imports: Vec<&Import> = members.iter().flat_map(|t| &t.imports).collect();
        imports.sort_by(|a, b| (a.is_static, &a.name).cmp(&(b.is_static, &b.name)));
        imports.dedup();

        let mut out = String::new();
        out.push_str(BANNER);
        out.push('\n');
        if !package.is_empty() {
            out.push_str(&format!("package {package};\n"));
        }
        if !imports.is_empty() {
            out.push('\n');
            for i in imports {
                out.push_str(&import_line(i));
                out.push('\n');
            }
        }
        out.push_str(&format!("\npublic class {class} {{\n"));
        for m in members {
            out.push('\n');
            out.push_str(&indent(&m.method_text, "    "));
            out.push('\n');
        }
        out.push_str("}\n");

        let mut path: PathBuf = package.split('.').filter(|s| !s.is_empty()).collect();
        path.push(format!("{class}.java"));
        files.insert(path, out);
    }
    files
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteReport {
    pub files_written: usize,
    pub files_removed: usize,
}

impl WriteReport {
    pub fn touched(&self) -> usize {
        self.files_written + self.files_removed
    }
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("refusing to write into {}: the directory is not empty and has no {MARKER_FILE} marker", .0.display())]
    GuardError(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WriteError + '_ {
    move |source| WriteError::Io { path: path.to_path_buf(), source }
}

/// Files under `root` except the marker, as relative path to bytes.
fn read_tree(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, WriteError> {
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(root).min_depth(1) {
        let entry = entry.map_err(|e| WriteError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("walk failed")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("under root").to_path_buf();
        if rel == Path::new(MARKER_FILE) {
            continue;
        }
        out.insert(rel, fs::read(entry.path()).map_err(io_err(entry.path()))?);
    }
    Ok(out)
}

/// Check that `root` may be replaced: missing, empty, or marked.
pub fn check_guard(root: &Path) -> Result<(), WriteError> {
    if !root.exists() || root.join(MARKER_FILE).is_file() {
        return Ok(());
    }
    let mut entries = fs::read_dir(root).map_err(io_err(root))?;
    if entries.next().is_some() {
        return Err(WriteError::GuardError(root.to_path_buf()));
    }
    Ok(())
}

/// Replace the contents of `root` by `files`. Nothing is written when the
/// folder already holds exactly these files. Otherwise the new tree is built
/// beside `root` and swapped in.
pub fn write_generated_folder(files: &BTreeMap<PathBuf, String>, root: &Path) -> Result<WriteReport, WriteError> {
    check_guard(root)?;
    let existing = if root.exists() { read_tree(root)? } else { BTreeMap::new() };
    let marked = root.join(MARKER_FILE).is_file();
    let wanted: BTreeMap<&Path, &[u8]> = files.iter().map(|(p, c)| (p.as_path(), c.as_bytes())).collect();
    let current: BTreeMap<&Path, &[u8]> = existing.iter().map(|(p, c)| (p.as_path(), c.as_slice())).collect();
    if marked && wanted == current {
        return Ok(WriteReport::default());
    }
    let report = WriteReport {
        files_written: wanted.iter().filter(|(p, c)| current.get(*p) != Some(*c)).count(),
        files_removed: current.keys().filter(|p| !wanted.contains_key(*p)).count(),
    };

    let parent = match root.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let base = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "generated".into());
    let staging = parent.join(format!(".{base}.dscribe-new-{}", std::process::id()));
    let retired = parent.join(format!(".{base}.dscribe-old-{}", std::process::id()));
    for stale in [&staging, &retired] {
        if stale.exists() {
            fs::remove_dir_all(stale).map_err(io_err(stale))?;
        }
    }
    fs::create_dir_all(&staging).map_err(io_err(&staging))?;
    fs::write(staging.join(MARKER_FILE), "").map_err(io_err(&staging))?;
    for (rel, content) in files {
        let path = staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, content).map_err(io_err(&path))?;
    }
    if root.exists() {
        fs::rename(root, &retired).map_err(io_err(root))?;
    }
    fs::rename(&staging, root).map_err(io_err(root))?;
    if retired.exists() {
        fs::remove_dir_all(&retired).map_err(io_err(&retired))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invocation_store::{load_invocations, resolve_context};
    use crate::placeholder_typing::TypingOptions;
    use crate::source_model::{build_class_index, DEFAULT_KNOWN_TYPES};
    use crate::template_catalog::{load_catalog, tests::EXAMPLE_TEMPLATE};

    const BUFFER: &str = "package com.ex;\n\npublic class Buffer {\n    public static Buffer createEmpty() { return new Buffer(); }\n    public boolean isEmpty() { return true; }\n    public int pop() { return 0; }\n}\n";

    fn example_tests(values: &[&str]) -> Vec<GeneratedTest> {
        let catalog = load_catalog(&[parse_unit(EXAMPLE_TEMPLATE, Path::new("Templates.java")).unwrap()]).unwrap();
        let index = build_class_index(&[parse_unit(BUFFER, Path::new("Buffer.java")).unwrap()], DEFAULT_KNOWN_TYPES).unwrap();
        values
            .iter()
            .map(|state| {
                let json = format!(
                    r#"{{"version":1,"invocations":[{{"template":"Example","class":"com.ex.Buffer","method":"pop","params":[],"values":{{"ex":"java.lang.IllegalStateException","state":{},"factory":"createEmpty"}}}}]}}"#,
                    serde_json::to_string(state).unwrap()
                );
                let inv = &load_invocations(&json).unwrap()[0];
                // lenient, so that values such as `a.` reach the sanitizer
                let ctx = resolve_context(inv, &catalog, &index, TypingOptions { lenient: true }).unwrap();
                instantiate_test(&ctx).unwrap()
            })
            .collect()
    }

    #[test]
    fn example_instantiation() {
        let t = &example_tests(&["isEmpty()"])[0];
        assert_eq!(t.method_name, "testpop_isEmpty");
        assert_eq!((t.package_name.as_str(), t.class_name.as_str()), ("com.ex", "BufferDScribeTest"));
        // hand substitution of the template body
        let expected = "// dscribe: Example#com.ex.Buffer.pop()\n@Test\npublic void testpop_isEmpty() {\n    Buffer instance = createEmpty();\n    try {\n        instance.pop();\n        fail();\n    } catch (java.lang.IllegalStateException e) {}\n}";
        assert_eq!(t.method_text, expected);
        assert!(scan_placeholders(&t.method_text).is_empty());
    }

    #[test]
    fn collisions_get_suffixes_in_order() {
        let mut tests = example_tests(&["a", "a."]);
        let warnings = resolve_collisions(&mut tests);
        assert_eq!(tests[0].method_name, "testpop_a");
        assert_eq!(tests[1].method_name, "testpop_a_2");
        assert!(tests[1].method_text.contains("public void testpop_a_2()"));
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn collision_suffix_skips_taken_names() {
        let mut tests = example_tests(&["a", "a_2", "a."]);
        resolve_collisions(&mut tests);
        let names: Vec<&str> = tests.iter().map(|t| t.method_name.as_str()).collect();
        assert_eq!(names, ["testpop_a", "testpop_a_2", "testpop_a_3"]);
    }

    #[test]
    fn sanitization() {
        assert_eq!(sanitize_identifier_part("isEmpty()"), "isEmpty");
        assert_eq!(sanitize_identifier_part("a == b"), "ab");
        assert_eq!(sanitize_identifier_part("x__y_"), "x_y_");
        assert_eq!(sanitize_identifier_part("()"), "v");
        assert_eq!(sanitize_identifier_part("étoile"), "toile");
    }

    #[test]
    fn whole_token_placeholders_are_verbatim() {
        let b = BTreeMap::from([("e", "a.b()"), ("n", "x y")]);
        assert_eq!(substitute_code("f($e$); m$n$(); // $n$ \"$e$\"", &b), "f(a.b()); mxy(); // x y \"a.b()\"");
    }

    #[test]
    fn grouping() {
        assert!(group_tests(&[]).is_empty());
        let tests = example_tests(&["c", "a", "b"]);
        let files = group_tests(&tests);
        assert_eq!(files.len(), 1);
        let (path, text) = files.iter().next().unwrap();
        assert_eq!(path, &PathBuf::from("com/ex/BufferDScribeTest.java"));
        let pos: Vec<usize> = ["testpop_a", "testpop_b", "testpop_c"].iter().map(|n| text.find(n).unwrap()).collect();
        assert!(pos[0] < pos[1] && pos[1] < pos[2]);
        assert!(text.starts_with(BANNER));
        assert!(text.contains("package com.ex;\n"));
        assert!(text.contains("import org.junit.Test;\nimport static org.junit.Assert.fail;\n"));
        assert!(!text.contains("Template"));
    }

    #[test]
    fn two_packages_two_files() {
        let mut a = example_tests(&["a"]).remove(0);
        let b = a.clone();
        a.package_name = "org.other".into();
        let files = group_tests(&[a, b]);
        let paths: Vec<_> = files.keys().cloned().collect();
        assert_eq!(paths, [PathBuf::from("com/ex/BufferDScribeTest.java"), PathBuf::from("org/other/BufferDScribeTest.java")]);
    }

    #[test]
    fn folder_writing() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("gen");
        let files = BTreeMap::from([(PathBuf::from("a/A.java"), "A".to_string())]);
        let r = write_generated_folder(&files, &root).unwrap();
        assert_eq!(r.files_written, 1);
        assert!(root.join(MARKER_FILE).is_file());
        assert_eq!(write_generated_folder(&files, &root).unwrap().touched(), 0);

        let files2 = BTreeMap::from([(PathBuf::from("b/B.java"), "B".to_string())]);
        let r = write_generated_folder(&files2, &root).unwrap();
        assert_eq!((r.files_written, r.files_removed), (1, 1));
        assert!(!root.join("a/A.java").exists());
        assert_eq!(fs::read_to_string(root.join("b/B.java")).unwrap(), "B");

        let manual = dir.path().join("manual");
        fs::create_dir_all(&manual).unwrap();
        fs::write(manual.join("Keep.java"), "keep").unwrap();
        assert!(matches!(write_generated_folder(&files, &manual), Err(WriteError::GuardError(_))));
        assert_eq!(fs::read_to_string(manual.join("Keep.java")).unwrap(), "keep");
        assert_eq!(fs::read_dir(&manual).unwrap().count(), 1);
    }
}
