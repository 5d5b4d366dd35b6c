//! Documentation fragments: instantiation, aggregation of similar
//! fragments of one method, and rendering as `@dscribe` lines.

mod integrate;

use std::collections::BTreeMap;

use crate::invocation_store::{FocalSignature, InvocationContext};
use crate::template_catalog::{substitute, FragmentTemplate, StatementTemplate};

pub use crate::template_catalog::Triple;
pub use integrate::{clean_doc, integrate_doc, integrate_docs, DSCRIBE_TAG};

/// An instantiated statement. Parts are whitespace-normalized, so equality
/// is structural.
pub type Statement = StatementTemplate;

/// An instantiated description with the method it documents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fragment {
    pub body: FragmentTemplate,
    pub focal: FocalSignature,
    pub origin: String,
}

impl Fragment {
    pub fn is_structured(&self) -> bool {
        matches!(
            &self.body,
            FragmentTemplate::Pair { condition: Statement::Structured(_), consequence: Statement::Structured(_) }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AggregatedFragment {
    /// Disjunctive.
    pub conditions: Vec<Statement>,
    /// Conjunctive.
    pub consequences: Vec<Statement>,
    pub freeform_lines: Vec<String>,
    pub focal: FocalSignature,
}

/// Trim and collapse internal whitespace runs to one space.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn instantiate_fragment(ctx: &InvocationContext) -> Fragment {
    let bindings = ctx.binding_texts();
    fragment_from(&ctx.template.description, &bindings, &ctx.invocation.signature, &ctx.template.name)
}

pub fn fragment_from(
    description: &FragmentTemplate,
    bindings: &BTreeMap<&str, &str>,
    focal: &FocalSignature,
    origin: &str,
) -> Fragment {
    Fragment {
        body: description.map(|s| normalize_ws(&substitute(s, bindings))),
        focal: focal.clone(),
        origin: origin.to_string(),
    }
}

fn render_statement(s: &Statement) -> String {
    match s {
        Statement::Structured(t) => format!("{} {} {}", t.subject, t.relation, t.object),
        Statement::Freeform(text) => text.clone(),
    }
}

fn triples(stmts: &[Statement]) -> Option<Vec<&Triple>> {
    stmts
        .iter()
        .map(|s| match s {
            Statement::Structured(t) => Some(t),
            Statement::Freeform(_) => None,
        })
        .collect()
}

/// Render a list of statements, collapsing a shared subject and relation
/// (or a shared relation and object) around `joiner`.
pub fn render_statements(stmts: &[Statement], joiner: &str) -> String {
    if let [one] = stmts {
        return render_statement(one);
    }
    if let Some(ts) = triples(stmts) {
        let first = ts[0];
        let sep = format!(" {joiner} ");
        if ts.iter().all(|t| t.subject == first.subject && t.relation == first.relation) {
            let objects: Vec<&str> = ts.iter().map(|t| t.object.as_str()).collect();
            return format!("{} {} {}", first.subject, first.relation, objects.join(&sep));
        }
        if ts.iter().all(|t| t.relation == first.relation && t.object == first.object) {
            let subjects: Vec<&str> = ts.iter().map(|t| t.subject.as_str()).collect();
            return format!("{} {} {}", subjects.join(&sep), first.relation, first.object);
        }
    }
    stmts.iter().map(render_statement).collect::<Vec<_>>().join("; ")
}

/// The comment line for one aggregate or free-form fragment, tag included.
pub fn render(agg: &AggregatedFragment) -> String {
    let body = if agg.conditions.is_empty() && agg.consequences.is_empty() {
        agg.freeform_lines.join(" ")
    } else {
        format!(
            "If {}, then {}.",
            render_statements(&agg.conditions, "or"),
            render_statements(&agg.consequences, "and")
        )
    };
    format!("{DSCRIBE_TAG} {body}")
}

fn singleton(f: &Fragment) -> AggregatedFragment {
    match &f.body {
        FragmentTemplate::Pair { condition, consequence } => AggregatedFragment {
            conditions: vec![condition.clone()],
            consequences: vec![consequence.clone()],
            freeform_lines: Vec::new(),
            focal: f.focal.clone(),
        },
        FragmentTemplate::Whole(text) => AggregatedFragment {
            conditions: Vec::new(),
            consequences: Vec::new(),
            freeform_lines: vec![text.clone()],
            focal: f.focal.clone(),
        },
    }
}

/// Groups in first-seen order of their key.
fn group_by<T, K: Ord + Clone>(items: Vec<T>, key: impl Fn(&T) -> K) -> Vec<Vec<T>> {
    let mut slots: BTreeMap<K, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<T>> = Vec::new();
    for item in items {
        let k = key(&item);
        let slot = *slots.entry(k).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(item);
    }
    groups
}

/// Merge fragments of one method: first fragments sharing a consequence,
/// then the remaining ones sharing a condition. Free-form fragments pass
/// through alone. The result does not depend on input order.
pub fn aggregate(fragments: &[Fragment]) -> Vec<AggregatedFragment> {
    let mut canonical: Vec<(String, &FragmentTemplate, &Fragment)> =
        fragments.iter().map(|f| (render(&singleton(f)), &f.body, f)).collect();
    canonical.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    canonical.dedup_by(|a, b| a.1 == b.1);

    let mut out = Vec::new();
    let mut structured: Vec<(Statement, Statement, &Fragment)> = Vec::new();
    for (_, body, f) in canonical {
        match body {
            FragmentTemplate::Pair { condition, consequence } if f.is_structured() => {
                structured.push((condition.clone(), consequence.clone(), f));
            }
            _ => out.push(singleton(f)),
        }
    }

    let mut remaining = Vec::new();
    for group in group_by(structured, |(_, conseq, _)| conseq.clone()) {
        if group.len() >= 2 {
            out.push(AggregatedFragment {
                conditions: group.iter().map(|(c, _, _)| c.clone()).collect(),
                consequences: vec![group[0].1.clone()],
                freeform_lines: Vec::new(),
                focal: group[0].2.focal.clone(),
            });
        } else {
            remaining.extend(group);
        }
    }
    for group in group_by(remaining, |(cond, _, _)| cond.clone()) {
        out.push(AggregatedFragment {
            conditions: vec![group[0].0.clone()],
            consequences: group.iter().map(|(_, c, _)| c.clone()).collect(),
            freeform_lines: Vec::new(),
            focal: group[0].2.focal.clone(),
        });
    }
    out.sort_by_cached_key(|a| (render(a), a.clone()));
    out
}

/// Sorted, distinct `@dscribe` lines for the fragments of one method.
pub fn render_lines(fragments: &[Fragment]) -> Vec<String> {
    let mut lines: Vec<String> = aggregate(fragments).iter().map(render).collect();
    lines.sort();
    lines.dedup();
    lines
}
