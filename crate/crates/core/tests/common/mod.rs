#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dscribe::invocation_store::{FocalSignature, Invocation};
use dscribe::pipeline::{Overrides, ProjectConfig};
use proptest::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn corpus_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name)
}

/// Copy a checked-in fixture project into a fresh temporary directory.
pub fn copy_fixture(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&fixture_dir(name), dir.path());
    dir
}

pub fn copy_tree(from: &Path, to: &Path) {
    for entry in WalkDir::new(from).min_depth(1) {
        let entry = entry.unwrap();
        let target = to.join(entry.path().strip_prefix(from).unwrap());
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target).unwrap();
        } else {
            fs::create_dir_all(target.parent().unwrap()).unwrap();
            fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// Every file under `root`, relative path to bytes.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    WalkDir::new(root)
        .min_depth(1)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

/// SHA-256 over sorted relative paths and contents.
pub fn tree_hash(root: &Path) -> String {
    let mut h = Sha256::new();
    for (path, content) in snapshot(root) {
        let name = path.to_string_lossy();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((content.len() as u64).to_le_bytes());
        h.update(&content);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config(project: &Path) -> ProjectConfig {
    ProjectConfig::load(&project.join("dscribe.json"), &Overrides::default()).unwrap()
}

/// Corpus cases: one per line, `# ` comments skipped, `<empty>` is "".
pub fn corpus(name: &str) -> Vec<String> {
    let text = fs::read_to_string(corpus_path(name)).unwrap();
    assert!(text.starts_with("# corpus-version: 1\n"), "{name} lacks a version header");
    text.lines()
        .filter(|l| !l.starts_with("# ") && !l.is_empty())
        .map(|l| if l == "<empty>" { String::new() } else { l.to_string() })
        .collect()
}

/// Random invocations that satisfy the file schema.
pub fn invocation() -> impl Strategy<Value = Invocation> {
    (
        "[A-Z][A-Za-z0-9 ]{0,8}",
        prop::collection::vec("[a-z][a-z0-9]{0,4}", 1..4),
        "[A-Z][a-z]{0,5}",
        "[a-z][A-Za-z0-9_]{0,6}",
        prop::collection::vec(prop::sample::select(&["int", "long[]", "java.lang.String", "Foo", "a.B[][]"][..]), 0..3),
        prop::collection::btree_map("[a-z_][a-z0-9_]{0,5}", any::<String>(), 0..4),
    )
        .prop_filter("keys must not be predefined or keywords", |(_, _, _, m, _, v)| {
            dscribe::names::is_identifier(m) && v.keys().all(|k| !dscribe::template_catalog::PREDEFINED.contains(&k.as_str()))
        })
        .prop_filter("package segments must be identifiers", |(_, pkg, _, _, _, _)| pkg.iter().all(|s| dscribe::names::is_identifier(s)))
        .prop_map(|(template, pkg, class, method, params, values)| Invocation {
            template_name: template,
            signature: FocalSignature {
                class_name: format!("{}.{class}", pkg.join(".")),
                method_name: method,
                param_types: params.into_iter().map(String::from).collect(),
            },
            values,
        })
}

pub fn invocation_lists() -> impl Strategy<Value = Vec<Invocation>> {
    prop::collection::vec(invocation(), 0..5)
}
