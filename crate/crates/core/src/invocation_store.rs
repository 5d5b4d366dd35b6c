//! Invocation files: strict JSON loading, canonical serialization, and
//! resolution of an invocation into a fully bound context.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::names;
use crate::placeholder_typing::{check_value, TypedValue, TypingError, TypingOptions};
use crate::source_model::{find_focal_method, ClassIndex, FocalError, MethodDecl};
use crate::template_catalog::{is_placeholder_name, Catalog, Template, PREDEFINED};

pub const SCHEMA_VERSION: u64 = 1;

/// Class, method name and parameter types identifying a focal method.
/// Constructors use the simple class name as method name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FocalSignature {
    pub class_name: String,
    pub method_name: String,
    pub param_types: Vec<String>,
}

impl fmt::Display for FocalSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}({})", self.class_name, self.method_name, self.param_types.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Invocation {
    pub template_name: String,
    pub signature: FocalSignature,
    /// Placeholder name (no dollar signs) to verbatim value.
    pub values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported invocation file version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(String),
}

/// JSON tree that keeps object members in order, duplicates included.
#[derive(Debug, Clone)]
enum Json {
    Null,
    Bool,
    Number(serde_json::Number),
    String(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    fn kind(&self) -> &'static str {
        match self {
            Json::Null => "null",
            Json::Bool => "a boolean",
            Json::Number(_) => "a number",
            Json::String(_) => "a string",
            Json::Array(_) => "an array",
            Json::Object(_) => "an object",
        }
    }
}

impl<'de> Deserialize<'de> for Json {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Json;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON value")
            }
            fn visit_unit<E>(self) -> Result<Json, E> {
                Ok(Json::Null)
            }
            fn visit_bool<E>(self, _: bool) -> Result<Json, E> {
                Ok(Json::Bool)
            }
            fn visit_i64<E>(self, v: i64) -> Result<Json, E> {
                Ok(Json::Number(v.into()))
            }
            fn visit_u64<E>(self, v: u64) -> Result<Json, E> {
                Ok(Json::Number(v.into()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Json, E> {
                serde_json::Number::from_f64(v).map(Json::Number).ok_or_else(|| E::custom("non-finite number"))
            }
            fn visit_str<E>(self, v: &str) -> Result<Json, E> {
                Ok(Json::String(v.to_string()))
            }
            fn visit_string<E>(self, v: String) -> Result<Json, E> {
                Ok(Json::String(v))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Json, A::Error> {
                let mut items = Vec::new();
                while let Some(item) = seq.next_element()? {
                    items.push(item);
                }
                Ok(Json::Array(items))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Json, A::Error> {
                let mut members = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Json>()? {
                    members.push((k, v));
                }
                Ok(Json::Object(members))
            }
        }
        d.deserialize_any(V)
    }
}

fn schema(path: &str, message: impl Into<String>) -> LoadError {
    LoadError::Schema { path: path.to_string(), message: message.into() }
}

/// Members of an object, checked against the allowed keys.
fn object<'j>(value: &'j Json, path: &str, allowed: &[&str]) -> Result<BTreeMap<&'j str, &'j Json>, LoadError> {
    let Json::Object(members) = value else {
        return Err(schema(path, format!("expected an object, found {}", value.kind())));
    };
    let mut out = BTreeMap::new();
    for (k, v) in members {
        if !allowed.is_empty() && !allowed.contains(&k.as_str()) {
            return Err(schema(&format!("{path}.{k}"), "unknown key"));
        }
        if out.insert(k.as_str(), v).is_some() {
            return Err(schema(&format!("{path}.{k}"), "duplicate key"));
        }
    }
    Ok(out)
}

fn string<'j>(value: Option<&&'j Json>, path: &str) -> Result<&'j str, LoadError> {
    match value {
        Some(Json::String(s)) => Ok(s),
        Some(other) => Err(schema(path, format!("expected a string, found {}", other.kind()))),
        None => Err(schema(path, "missing required key")),
    }
}

fn param_type_ok(s: &str) -> bool {
    let (base, _) = names::split_array_suffix(s);
    names::is_dotted_name(base) || crate::source_model::PRIMITIVES.contains(&base)
}

/// Parse an invocation file. Order is preserved.
pub fn load_invocations(content: &str) -> Result<Vec<Invocation>, LoadError> {
    let doc: Json = serde_json::from_str(content).map_err(|e| LoadError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let top = object(&doc, "$", &["version", "invocations"])?;
    match top.get("version") {
        Some(Json::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(Json::Number(n)) => return Err(LoadError::UnsupportedVersion(n.to_string())),
        Some(other) => return Err(schema("$.version", format!("expected a number, found {}", other.kind()))),
        None => return Err(schema("$.version", "missing required key")),
    }
    let items = match top.get("invocations") {
        Some(Json::Array(items)) => items,
        Some(other) => return Err(schema("$.invocations", format!("expected an array, found {}", other.kind()))),
        None => return Err(schema("$.invocations", "missing required key")),
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| parse_invocation(item, &format!("$.invocations[{i}]")))
        .collect()
}

fn parse_invocation(item: &Json, path: &str) -> Result<Invocation, LoadError> {
    let obj = object(item, path, &["template", "class", "method", "params", "values"])?;
    let template_name = string(obj.get("template"), &format!("{path}.template"))?;
    if template_name.trim().is_empty() {
        return Err(schema(&format!("{path}.template"), "template name is empty"));
    }
    let class_name = string(obj.get("class"), &format!("{path}.class"))?;
    if !names::is_dotted_name(class_name) || !class_name.contains('.') {
        return Err(schema(&format!("{path}.class"), format!("`{class_name}` is not a qualified class name")));
    }
    let method_name = string(obj.get("method"), &format!("{path}.method"))?;
    if !names::is_identifier(method_name) {
        return Err(schema(&format!("{path}.method"), format!("`{method_name}` is not an identifier")));
    }
    let mut param_types = Vec::new();
    match obj.get("params") {
        None => {}
        Some(Json::Array(ps)) => {
            for (i, p) in ps.iter().enumerate() {
                let ppath = format!("{path}.params[{i}]");
                let Json::String(p) = p else {
                    return Err(schema(&ppath, format!("expected a string, found {}", p.kind())));
                };
                if !param_type_ok(p) {
                    return Err(schema(&ppath, format!("`{p}` is not a type name")));
                }
                param_types.push(p.clone());
            }
        }
        Some(other) => return Err(schema(&format!("{path}.params"), format!("expected an array, found {}", other.kind()))),
    }
    let mut values = BTreeMap::new();
    if let Some(v) = obj.get("values") {
        let vpath = format!("{path}.values");
        for (k, v) in object(v, &vpath, &[])? {
            let kpath = format!("{vpath}.{k}");
            if PREDEFINED.contains(&k) {
                return Err(schema(&kpath, format!("`{k}` is predefined and cannot be bound")));
            }
            if !is_placeholder_name(k) {
                return Err(schema(&kpath, format!("`{k}` is not a placeholder name")));
            }
            let Json::String(s) = v else {
                return Err(schema(&kpath, format!("expected a string, found {}", v.kind())));
            };
            values.insert(k.to_string(), s.clone());
        }
    }
    Ok(Invocation {
        template_name: template_name.to_string(),
        signature: FocalSignature {
            class_name: class_name.to_string(),
            method_name: method_name.to_string(),
            param_types,
        },
        values,
    })
}

#[derive(Serialize)]
struct DocOut<'a> {
    version: u64,
    invocations: Vec<InvocationOut<'a>>,
}

#[derive(Serialize)]
struct InvocationOut<'a> {
    template: &'a str,
    class: &'a str,
    method: &'a str,
    params: &'a [String],
    values: &'a BTreeMap<String, String>,
}

/// Canonical form: fixed key order, sorted values, two-space indent, final newline.
pub fn serialize_invocations(invocations: &[Invocation]) -> String {
    let doc = DocOut {
        version: SCHEMA_VERSION,
        invocations: invocations
            .iter()
            .map(|i| InvocationOut {
                template: &i.template_name,
                class: &i.signature.class_name,
                method: &i.signature.method_name,
                params: &i.signature.param_types,
                values: &i.values,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    out.push('\n');
    out
}

/// Value bound to a placeholder in a context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    /// `$method$`, `$class$`, `$package$`.
    Predefined(String),
    Typed(TypedValue),
}

impl Binding {
    pub fn text(&self) -> &str {
        match self {
            Binding::Predefined(s) => s,
            Binding::Typed(v) => &v.substitution_text,
        }
    }
}

/// An invocation with its template, focal method and complete bindings.
#[derive(Debug, Clone)]
pub struct InvocationContext<'a> {
    pub invocation: Invocation,
    pub template: &'a Template,
    pub focal: &'a MethodDecl,
    pub focal_package: String,
    pub focal_path: &'a Path,
    pub bindings: BTreeMap<String, Binding>,
    pub warnings: Vec<String>,
}

impl InvocationContext<'_> {
    pub fn binding_texts(&self) -> BTreeMap<&str, &str> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v.text())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error(transparent)]
    Focal(#[from] FocalError),
    #[error("missing value for placeholder `{0}`")]
    MissingPlaceholderValue(String),
    #[error("template does not declare placeholder `{0}`")]
    ExtraPlaceholderValue(String),
    #[error("placeholder `{placeholder}`: {error}")]
    Value { placeholder: String, error: TypingError },
}

impl ContextError {
    pub fn code(&self) -> &'static str {
        match self {
            ContextError::UnknownTemplate(_) => "UnknownTemplate",
            ContextError::Focal(FocalError::UnknownClass(_)) => "UnknownClass",
            ContextError::Focal(FocalError::FocalMethodNotFound(_)) => "FocalMethodNotFound",
            ContextError::Focal(FocalError::AmbiguousFocalMethod { .. }) => "AmbiguousFocalMethod",
            ContextError::MissingPlaceholderValue(_) => "MissingPlaceholderValue",
            ContextError::ExtraPlaceholderValue(_) => "ExtraPlaceholderValue",
            ContextError::Value { error, .. } => match error {
                TypingError::UnresolvedType(_) => "UnresolvedType",
                TypingError::NotThrowable(_) => "NotThrowable",
                TypingError::UnknownHierarchy(_) => "UnknownHierarchy",
                TypingError::BadIdentifier(_) => "BadIdentifier",
                TypingError::ExprSyntaxError { .. } => "ExprSyntaxError",
            },
        }
    }
}

/// Validate an invocation and bind every placeholder of its template.
/// All problems with the invocation are reported together.
pub fn resolve_context<'a>(
    invocation: &Invocation,
    catalog: &'a Catalog,
    index: &'a ClassIndex,
    options: TypingOptions,
) -> Result<InvocationContext<'a>, Vec<ContextError>> {
    let template = catalog
        .get(&invocation.template_name)
        .ok_or_else(|| vec![ContextError::UnknownTemplate(invocation.template_name.clone())])?;
    let focal = find_focal_method(&invocation.signature, index).map_err(|e| vec![e.into()])?;
    let entry = index.get(&invocation.signature.class_name).expect("focal class is indexed");
    let focal_path = entry.source_path.as_deref().expect("project type has a path");

    let mut bindings = BTreeMap::new();
    bindings.insert("method".to_string(), Binding::Predefined(focal.name.clone()));
    bindings.insert("class".to_string(), Binding::Predefined(entry.simple_name.clone()));
    bindings.insert("package".to_string(), Binding::Predefined(entry.package.clone()));

    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let declared: BTreeSet<&str> = template.placeholders.iter().map(|p| p.name.as_str()).collect();
    for key in invocation.values.keys() {
        if !declared.contains(key.as_str()) {
            errors.push(ContextError::ExtraPlaceholderValue(key.clone()));
        }
    }
    for p in &template.placeholders {
        let Some(raw) = invocation.values.get(&p.name) else {
            errors.push(ContextError::MissingPlaceholderValue(p.name.clone()));
            continue;
        };
        match check_value(p.ptype, raw, &entry.package, index, options) {
            Ok(checked) => {
                warnings.extend(checked.warnings.into_iter().map(|w| format!("placeholder `{}`: {w}", p.name)));
                bindings.insert(p.name.clone(), Binding::Typed(checked.value));
            }
            Err(error) => errors.push(ContextError::Value { placeholder: p.name.clone(), error }),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(InvocationContext {
        invocation: invocation.clone(),
        template,
        focal,
        focal_package: entry.package.clone(),
        focal_path,
        bindings,
        warnings,
    })
}
