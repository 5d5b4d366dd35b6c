//! Project-wide class index: project declarations plus a declared list of
//! external ("known") types standing in for the build path.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invocation_store::FocalSignature;
use crate::names;

use super::{Import, MethodDecl, SourceUnit, TypeDecl, PRIMITIVES};

/// Shipped description of common `java.lang`, `java.io` and `java.util` types.
pub const DEFAULT_KNOWN_TYPES: &str = include_str!("../../data/known_types.json");

pub const THROWABLE: &str = "java.lang.Throwable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownTypesFile {
    pub types: Vec<KnownType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownType {
    pub name: String,
    #[serde(default)]
    pub supertypes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Project,
    Known,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeEntry {
    pub qualified_name: String,
    pub simple_name: String,
    /// Qualified where resolution succeeded, otherwise as written.
    pub super_types: Vec<String>,
    pub kind: EntryKind,
    pub package: String,
    /// Project types only.
    pub decl: Option<TypeDecl>,
    pub imports: Vec<Import>,
    pub source_path: Option<PathBuf>,
}

/// Read access to type entries by qualified name.
pub trait TypeLookup {
    fn lookup(&self, qualified: &str) -> Option<&TypeEntry>;
}

#[derive(Debug, Clone, Default)]
pub struct ClassIndex {
    entries: BTreeMap<String, TypeEntry>,
}

impl ClassIndex {
    pub fn get(&self, qualified: &str) -> Option<&TypeEntry> {
        self.entries.get(qualified)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &TypeEntry> {
        self.entries.values()
    }

    pub fn project_types(&self) -> impl Iterator<Item = &TypeEntry> {
        self.entries.values().filter(|e| e.kind == EntryKind::Project)
    }
}

impl TypeLookup for ClassIndex {
    fn lookup(&self, qualified: &str) -> Option<&TypeEntry> {
        self.entries.get(qualified)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("invalid known-types file: {0}")]
    KnownTypes(String),
    #[error("type `{name}` is declared in both {} and {}", first.display(), second.display())]
    DuplicateType { name: String, first: PathBuf, second: PathBuf },
    #[error("cyclic type hierarchy: {}", cycle.join(" -> "))]
    CyclicHierarchy { cycle: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot resolve type `{name}` from package `{context_package}`")]
pub struct ResolveError {
    pub name: String,
    pub context_package: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("hierarchy of `{type_name}` is incomplete: `{missing}` is not in the class index")]
pub struct HierarchyError {
    pub type_name: String,
    pub missing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FocalError {
    #[error("class `{0}` is not declared in the project sources")]
    UnknownClass(String),
    #[error("no method matches {0}")]
    FocalMethodNotFound(FocalSignature),
    #[error("{count} methods match {signature}")]
    AmbiguousFocalMethod { signature: FocalSignature, count: usize },
}

fn package_of(qualified: &str) -> &str {
    qualified.rsplit_once('.').map_or("", |(p, _)| p)
}

pub fn build_class_index(units: &[SourceUnit], known: &str) -> Result<ClassIndex, IndexError> {
    let file: KnownTypesFile = serde_json::from_str(known).map_err(|e| IndexError::KnownTypes(e.to_string()))?;
    let mut entries: BTreeMap<String, TypeEntry> = BTreeMap::new();
    for k in file.types {
        if !names::is_dotted_name(&k.name) {
            return Err(IndexError::KnownTypes(format!("`{}` is not a qualified name", k.name)));
        }
        if entries.contains_key(&k.name) {
            return Err(IndexError::KnownTypes(format!("`{}` is listed twice", k.name)));
        }
        entries.insert(
            k.name.clone(),
            TypeEntry {
                simple_name: names::last_segment(&k.name).to_string(),
                package: package_of(&k.name).to_string(),
                qualified_name: k.name,
                super_types: k.supertypes,
                kind: EntryKind::Known,
                decl: None,
                imports: Vec::new(),
                source_path: None,
            },
        );
    }

    let mut seen: HashMap<&str, &PathBuf> = HashMap::new();
    for unit in units {
        for ty in &unit.types {
            if let Some(first) = seen.insert(&ty.qualified_name, &unit.path) {
                return Err(IndexError::DuplicateType {
                    name: ty.qualified_name.clone(),
                    first: first.clone(),
                    second: unit.path.clone(),
                });
            }
            // project declarations shadow known entries
            entries.insert(
                ty.qualified_name.clone(),
                TypeEntry {
                    qualified_name: ty.qualified_name.clone(),
                    simple_name: ty.simple_name.clone(),
                    super_types: Vec::new(),
                    kind: EntryKind::Project,
                    package: unit.package_name.clone(),
                    decl: Some(ty.clone()),
                    imports: unit.imports.clone(),
                    source_path: Some(unit.path.clone()),
                },
            );
        }
    }

    // second pass: supertypes need every name in place
    let resolved: Vec<(String, Vec<String>)> = entries
        .values()
        .filter(|e| e.kind == EntryKind::Project)
        .map(|e| {
            let decl = e.decl.as_ref().expect("project entry");
            let supers = decl.super_types.iter().map(|s| resolve_in_scope(s, e, &entries).unwrap_or_else(|| s.clone())).collect();
            (e.qualified_name.clone(), supers)
        })
        .collect();
    for (name, supers) in resolved {
        entries.get_mut(&name).expect("present").super_types = supers;
    }

    check_acyclic(&entries)?;
    Ok(ClassIndex { entries })
}

/// Resolve a name as written inside `scope`'s source file: enclosing types,
/// single-type imports, the package, on-demand imports, then `java.lang`.
fn resolve_in_scope(name: &str, scope: &TypeEntry, entries: &BTreeMap<String, TypeEntry>) -> Option<String> {
    let has = |q: &str| entries.contains_key(q);
    if name.contains('.') {
        if has(name) {
            return Some(name.to_string());
        }
        let (head, _) = name.split_once('.').expect("dotted");
        if let Some(q) = resolve_in_scope(head, scope, entries) {
            let candidate = format!("{q}{}", &name[head.len()..]);
            if has(&candidate) {
                return Some(candidate);
            }
        }
        return None;
    }
    let mut outer = scope.qualified_name.as_str();
    while outer.len() > scope.package.len() {
        let candidate = format!("{outer}.{name}");
        if has(&candidate) {
            return Some(candidate);
        }
        match outer.rsplit_once('.') {
            Some((o, _)) => outer = o,
            None => break,
        }
    }
    for imp in scope.imports.iter().filter(|i| !i.is_static && !i.is_wildcard()) {
        if names::last_segment(&imp.name) == name {
            return Some(imp.name.clone());
        }
    }
    let same_package = if scope.package.is_empty() { name.to_string() } else { format!("{}.{name}", scope.package) };
    if has(&same_package) {
        return Some(same_package);
    }
    for imp in scope.imports.iter().filter(|i| !i.is_static && i.is_wildcard()) {
        let candidate = format!("{}{name}", imp.name.trim_end_matches('*'));
        if has(&candidate) {
            return Some(candidate);
        }
    }
    let lang = format!("java.lang.{name}");
    has(&lang).then_some(lang)
}

fn check_acyclic(entries: &BTreeMap<String, TypeEntry>) -> Result<(), IndexError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        name: &'a str,
        entries: &'a BTreeMap<String, TypeEntry>,
        marks: &mut HashMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Result<(), IndexError> {
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let from = path.iter().position(|p| *p == name).unwrap_or(0);
                let mut cycle: Vec<String> = path[from..].iter().map(|s| s.to_string()).collect();
                cycle.push(name.to_string());
                return Err(IndexError::CyclicHierarchy { cycle });
            }
            None => {}
        }
        let Some(entry) = entries.get(name) else { return Ok(()) };
        marks.insert(name, Mark::Active);
        path.push(name);
        for s in &entry.super_types {
            visit(s, entries, marks, path)?;
        }
        path.pop();
        marks.insert(name, Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for name in entries.keys() {
        visit(name, entries, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

/// Resolve a type name against the index.
///
/// Dotted names must match an entry verbatim. A simple name is tried as a
/// member of `context_package`, then of `java.lang`.
pub fn resolve_type(name: &str, context_package: &str, index: &impl TypeLookup) -> Result<String, ResolveError> {
    let err = || ResolveError { name: name.to_string(), context_package: context_package.to_string() };
    if !names::is_dotted_name(name) {
        return Err(err());
    }
    if name.contains('.') {
        return index.lookup(name).map(|e| e.qualified_name.clone()).ok_or_else(err);
    }
    let local = if context_package.is_empty() { name.to_string() } else { format!("{context_package}.{name}") };
    [local, format!("java.lang.{name}")]
        .into_iter()
        .find(|q| index.lookup(q).is_some())
        .ok_or_else(err)
}

/// Whether the supertype closure of `qualified` reaches `java.lang.Throwable`.
///
/// A path to `Throwable` wins even if another branch of the hierarchy is
/// incomplete; otherwise any supertype missing from the index is an error.
pub fn is_throwable(qualified: &str, index: &impl TypeLookup) -> Result<bool, HierarchyError> {
    let mut stack = vec![qualified.to_string()];
    let mut visited: HashSet<String> = HashSet::new();
    let mut missing = None;
    while let Some(name) = stack.pop() {
        if name == THROWABLE {
            return Ok(true);
        }
        if !visited.insert(name.clone()) {
            continue;
        }
        match index.lookup(&name) {
            Some(e) => stack.extend(e.super_types.iter().rev().cloned()),
            None => {
                missing.get_or_insert(name);
            }
        }
    }
    match missing {
        Some(missing) => Err(HierarchyError { type_name: qualified.to_string(), missing }),
        None => Ok(false),
    }
}

#[derive(Debug, PartialEq, Eq)]
struct ParamKey {
    base: String,
    dims: usize,
    resolved: bool,
}

impl ParamKey {
    fn matches(&self, other: &ParamKey) -> bool {
        self.dims == other.dims
            && if self.resolved && other.resolved {
                self.base == other.base
            } else {
                names::last_segment(&self.base) == names::last_segment(&other.base)
            }
    }
}

fn erase_generics(written: &str) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    for c in written.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            c if depth == 0 && !c.is_whitespace() => out.push(c),
            _ => {}
        }
    }
    out
}

fn param_key(written: &str, scope: &TypeEntry, index: &ClassIndex) -> ParamKey {
    let mut erased = erase_generics(written);
    let mut dims = 0;
    if let Some(b) = erased.strip_suffix("...") {
        erased = b.to_string();
        dims += 1;
    }
    let (base, more) = names::split_array_suffix(&erased);
    dims += more;
    if PRIMITIVES.contains(&base) {
        return ParamKey { base: base.to_string(), dims, resolved: true };
    }
    let import = scope
        .imports
        .iter()
        .find(|i| !i.is_static && !i.is_wildcard() && !base.contains('.') && names::last_segment(&i.name) == base);
    let resolved = match import {
        Some(i) => Some(i.name.clone()),
        None => resolve_type(base, &scope.package, index)
            .ok()
            .or_else(|| resolve_in_scope(base, scope, &index.entries)),
    };
    match resolved {
        Some(q) => ParamKey { base: q, dims, resolved: true },
        None => ParamKey { base: base.to_string(), dims, resolved: false },
    }
}

/// Find the method a signature designates, among the methods declared
/// directly in the signature's class.
pub fn find_focal_method<'i>(signature: &FocalSignature, index: &'i ClassIndex) -> Result<&'i MethodDecl, FocalError> {
    let entry = index
        .get(&signature.class_name)
        .filter(|e| e.kind == EntryKind::Project)
        .ok_or_else(|| FocalError::UnknownClass(signature.class_name.clone()))?;
    let decl = entry.decl.as_ref().expect("project entry");
    let wanted: Vec<ParamKey> = signature.param_types.iter().map(|p| param_key(p, entry, index)).collect();
    let candidates: Vec<&MethodDecl> = decl
        .methods
        .iter()
        .filter(|m| m.name == signature.method_name && m.param_types.len() == wanted.len())
        .filter(|m| {
            m.param_types
                .iter()
                .zip(&wanted)
                .all(|(written, w)| param_key(written, entry, index).matches(w))
        })
        .collect();
    match candidates.as_slice() {
        [one] => Ok(one),
        [] => Err(FocalError::FocalMethodNotFound(signature.clone())),
        many => Err(FocalError::AmbiguousFocalMethod { signature: signature.clone(), count: many.len() }),
    }
}
