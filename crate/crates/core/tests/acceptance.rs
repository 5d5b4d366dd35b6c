mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use itertools::Itertools;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use common::{config, copy_fixture, snapshot, tree_hash};
use dscribe::doc_generation::{aggregate, AggregatedFragment, Fragment, Statement, Triple, DSCRIBE_TAG};
use dscribe::invocation_store::{load_invocations, serialize_invocations, FocalSignature};
use dscribe::pipeline::{cmd_clean, cmd_generate};
use dscribe::placeholder_typing::expr::parse_expression;
use dscribe::placeholder_typing::{check_value, PlaceholderType, TypingOptions};
use dscribe::source_model::{build_class_index, parse_unit, DEFAULT_KNOWN_TYPES};
use dscribe::template_catalog::FragmentTemplate;
use dscribe::test_generation::MARKER_FILE;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure!(elapsed < limit, "{label} took {elapsed:?}, limit {limit:?}");
    Ok(())
}

fn dscribe_tagged(src: &str, method: &str) -> Vec<String> {
    let unit = parse_unit(src, Path::new("F.java")).unwrap();
    let m = unit.methods().find(|m| m.name == method).unwrap();
    m.header_comment
        .as_ref()
        .map(|c| c.text_lines().filter(|l| l.starts_with(DSCRIBE_TAG)).map(String::from).collect())
        .unwrap_or_default()
}

/// Hand substitution of the Example template: plain text replacement,
/// tabs to four spaces, one level of class indentation.
fn example_oracle() -> String {
    let template = fs::read_to_string(common::fixture_dir("buffer/templates/Templates.java")).unwrap();
    let lines: Vec<&str> = template.lines().collect();
    let start = lines.iter().position(|l| *l == "@Test").unwrap();
    let end = start + lines[start..].iter().position(|l| *l == "}").unwrap();
    let mut out = String::from("    // dscribe: Example#com.ex.Buffer.pop()\n");
    for line in &lines[start..=end] {
        let text = line
            .replace("test$method$_$state$", "testpop_isEmpty")
            .replace("$class$", "Buffer")
            .replace("$factory$", "createEmpty")
            .replace("$method$", "pop")
            .replace("$ex$", "java.lang.IllegalStateException")
            .replace('\t', "    ");
        out.push_str("    ");
        out.push_str(&text);
        out.push('\n');
    }
    out
}

fn example_end_to_end() -> Outcome {
    let dir = copy_fixture("buffer");
    let t = Instant::now();
    let report = cmd_generate(&config(dir.path()));
    let elapsed = t.elapsed();
    ensure!(!report.has_errors(), "diagnostics: {:?}", report.diagnostics);

    let mut files = snapshot(&dir.path().join("src/test/generated"));
    files.remove(Path::new(MARKER_FILE));
    ensure!(files.len() == 1, "expected one generated file, got {:?}", files.keys().collect::<Vec<_>>());
    let text = String::from_utf8(files.into_values().next().unwrap()).unwrap();
    let head = "public class BufferDScribeTest {\n\n";
    let body = text.split_once(head).map(|(_, b)| b).and_then(|b| b.strip_suffix("}\n"));
    ensure!(body == Some(example_oracle().as_str()), "method body differs from the hand substitution:\n{text}");

    let buffer = fs::read_to_string(dir.path().join("src/main/java/com/ex/Buffer.java")).unwrap();
    let tagged = dscribe_tagged(&buffer, "pop");
    let expected = "@dscribe pop throws an exception of type java.lang.IllegalStateException when isEmpty().";
    ensure!(tagged == [expected], "pop carries {tagged:?}");
    within("buffer", elapsed, Duration::from_secs(1))?;
    Ok(format!("1 test file, 1 @dscribe line, {elapsed:?}"))
}

fn math_log() -> Outcome {
    let dir = copy_fixture("mathlog");
    let t = Instant::now();
    let report = cmd_generate(&config(dir.path()));
    let elapsed = t.elapsed();
    ensure!(!report.has_errors(), "diagnostics: {:?}", report.diagnostics);
    let src = fs::read_to_string(dir.path().join("src/demo/Math.java")).unwrap();
    let tagged = dscribe_tagged(&src, "log");
    ensure!(tagged == ["@dscribe If a is NaN or negative, then the result is NaN."], "log carries {tagged:?}");
    within("mathlog", elapsed, Duration::from_secs(1))?;
    Ok(format!("{elapsed:?}"))
}

const SUBJECTS: [&str; 3] = ["a", "b", "c"];
const RELATIONS: [&str; 2] = ["is", "has"];
const OBJECTS: [&str; 3] = ["x", "y", "z"];

fn alphabet() -> Vec<Statement> {
    SUBJECTS
        .iter()
        .cartesian_product(RELATIONS)
        .cartesian_product(OBJECTS)
        .map(|((s, r), o)| Statement::Structured(Triple::new(*s, r, o)))
        .collect()
}

/// Restricted growth strings of length `k`: every partition of `k`
/// positions into equality classes, once each.
fn partitions(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                let next = p.iter().max().map_or(0, |m| m + 1);
                (0..=next).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

type Pair = (Statement, Statement);

fn fragments(pairs: &[Pair]) -> Vec<Fragment> {
    let focal = FocalSignature { class_name: "p.C".into(), method_name: "m".into(), param_types: vec![] };
    pairs
        .iter()
        .map(|(c, q)| Fragment {
            body: FragmentTemplate::Pair { condition: c.clone(), consequence: q.clone() },
            focal: focal.clone(),
            origin: "T".into(),
        })
        .collect()
}

type Group = (BTreeSet<Statement>, BTreeSet<Statement>);

/// Straightforward two-pass grouping over a deduplicated pair set.
fn naive_groups(pairs: &BTreeSet<Pair>) -> BTreeSet<Group> {
    let mut groups = BTreeSet::new();
    let mut leftover = Vec::new();
    for (_, q) in pairs {
        let with_q: Vec<&Pair> = pairs.iter().filter(|(_, q2)| q2 == q).collect();
        if with_q.len() >= 2 {
            groups.insert((with_q.iter().map(|(c, _)| c.clone()).collect(), BTreeSet::from([q.clone()])));
        } else {
            leftover.push(with_q[0].clone());
        }
    }
    for (c, _) in &leftover {
        let qs = leftover.iter().filter(|(c2, _)| c2 == c).map(|(_, q)| q.clone()).collect();
        groups.insert((BTreeSet::from([c.clone()]), qs));
    }
    groups
}

fn as_groups(aggs: &[AggregatedFragment]) -> BTreeSet<Group> {
    aggs.iter().map(|a| (a.conditions.iter().cloned().collect(), a.consequences.iter().cloned().collect())).collect()
}

fn expand(aggs: &[AggregatedFragment]) -> BTreeSet<Pair> {
    aggs.iter()
        .flat_map(|a| a.conditions.iter().cartesian_product(&a.consequences).map(|(c, q)| (c.clone(), q.clone())))
        .collect()
}

fn check_pairs(pairs: &[Pair], permutations: &[Vec<usize>]) -> Result<(), String> {
    let input = fragments(pairs);
    let out = aggregate(&input);
    let set: BTreeSet<Pair> = pairs.iter().cloned().collect();
    ensure!(expand(&out) == set, "expansion differs for {pairs:?}");
    ensure!(as_groups(&out) == naive_groups(&set), "grouping differs from the naive oracle for {pairs:?}");
    for perm in permutations {
        let permuted: Vec<Fragment> = perm.iter().map(|&i| input[i].clone()).collect();
        ensure!(aggregate(&permuted) == out, "permutation {perm:?} changes the output for {pairs:?}");
    }
    Ok(())
}

fn permutations_for(k: usize, rng: &mut StdRng) -> Vec<Vec<usize>> {
    if k <= 4 {
        return (0..k).permutations(k).collect();
    }
    let mut perms: Vec<Vec<usize>> = (1..k).map(|r| (0..k).cycle().skip(r).take(k).collect()).collect();
    perms.push((0..k).rev().collect());
    for _ in 0..4 {
        let mut p: Vec<usize> = (0..k).collect();
        p.shuffle(rng);
        perms.push(p);
    }
    perms
}

/// Grouping only compares statements for equality, so the output shape of
/// a fragment set is fixed by which conditions and which consequences are
/// equal. Every such equality structure for up to six fragments is
/// checked under several injective placements into the alphabet. Sets of
/// up to two fragments are additionally enumerated literally.
fn aggregation_oracle() -> Outcome {
    let t = Instant::now();
    let alpha = alphabet();
    let n = alpha.len();
    let placements: [fn(usize, usize) -> usize; 3] = [|j, _| j, |j, n| n - 1 - j, |j, n| (j * 5 + 3) % n];
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut checked = 0usize;

    for k in 1..=6 {
        let parts = partitions(k);
        for cond in &parts {
            for conseq in &parts {
                let shapes: BTreeSet<(usize, usize)> = cond.iter().copied().zip(conseq.iter().copied()).collect();
                if shapes.len() < k {
                    continue;
                }
                let perms = permutations_for(k, &mut rng);
                for (pc, pq) in [(0, 0), (1, 2), (2, 1)] {
                    let pairs: Vec<Pair> = cond
                        .iter()
                        .zip(conseq)
                        .map(|(&c, &q)| (alpha[placements[pc](c, n)].clone(), alpha[placements[pq](q, n)].clone()))
                        .collect();
                    check_pairs(&pairs, &perms)?;
                    checked += 1;
                }
            }
        }
    }

    let all: Vec<Pair> = alpha.iter().cartesian_product(&alpha).map(|(c, q)| (c.clone(), q.clone())).collect();
    for size in 1..=2 {
        for combo in all.iter().cloned().combinations(size) {
            check_pairs(&combo, &(0..size).permutations(size).collect::<Vec<_>>())?;
            checked += 1;
        }
    }
    let elapsed = t.elapsed();
    within("aggregation", elapsed, Duration::from_secs(60))?;
    Ok(format!("{checked} fragment sets, {elapsed:?}"))
}

const RETURNS_TEMPLATE: &str = "package templates;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class Returns {

    /** $method$ returns $value$ on a fresh instance. */
    @Template(\"Returns\")
    @Types($value$=EXPR, $factory$=METHOD)
    @Test
    public void test$method$_fresh() {
        assertEquals($value$, $factory$().$method$());
    }
}
";

fn source_file(i: usize) -> String {
    let pop_doc = match i % 4 {
        0 => "",
        1 => "    /** Removes the top element. */\n",
        2 => "    /**\n     * Removes the top element.\n     *\n     * @return the element\n     */\n",
        _ => "    /**\n     * Removes the top element.\n     * @throws IllegalStateException when empty\n     */\n",
    };
    format!(
        "package gen.p{pkg};\n\npublic class C{i} {{\n    private int n;\n\n    public static C{i} create() {{ return new C{i}(); }}\n\n{pop_doc}    public int pop() {{\n        if (n == 0) throw new IllegalStateException();\n        return --n;\n    }}\n\n    /** Current size. */\n    public int size() {{ return n; }}\n\n    public double log(double a) {{ return Math.log(a); }}\n}}\n",
        pkg = i % 3
    )
}

fn invocation_json(i: usize) -> Vec<serde_json::Value> {
    let class = format!("gen.p{}.C{i}", i % 3);
    let ex = if i.is_multiple_of(2) { "IllegalStateException" } else { "java.lang.RuntimeException" };
    let mut out = vec![
        serde_json::json!({"template": "Example", "class": class, "method": "pop", "params": [],
            "values": {"ex": ex, "state": "size() == 0", "factory": "create"}}),
        serde_json::json!({"template": "Returns", "class": class, "method": "size", "params": [],
            "values": {"value": "0", "factory": "create"}}),
    ];
    if i.is_multiple_of(2) {
        for (state, input) in [("NaN", "Double.NaN"), ("negative", "-1.0")] {
            out.push(serde_json::json!({"template": "SpecialResult", "class": class, "method": "log", "params": ["double"],
                "values": {"arg": "a", "state": state, "outcome": "NaN", "input": input, "expected": "Double.NaN"}}));
        }
    }
    out
}

fn build_project(root: &Path) -> usize {
    fs::create_dir_all(root.join("templates")).unwrap();
    fs::create_dir_all(root.join("inv")).unwrap();
    fs::copy(common::fixture_dir("buffer/templates/Templates.java"), root.join("templates/Templates.java")).unwrap();
    fs::copy(common::fixture_dir("mathlog/templates/SpecialValues.java"), root.join("templates/SpecialValues.java")).unwrap();
    fs::write(root.join("templates/Returns.java"), RETURNS_TEMPLATE).unwrap();
    let mut invocations = Vec::new();
    for i in 0..20 {
        let path = root.join(format!("src/gen/p{}/C{i}.java", i % 3));
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, source_file(i)).unwrap();
        invocations.extend(invocation_json(i));
    }
    let count = invocations.len();
    for (n, chunk) in invocations.chunks(count.div_ceil(3)).enumerate() {
        let doc = serde_json::json!({"version": 1, "invocations": chunk});
        fs::write(root.join(format!("inv/part{n}.json")), serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    }
    fs::write(
        root.join("dscribe.json"),
        r#"{"source_roots": ["src"], "templates_dir": "templates", "invocations": ["inv/*.json"], "gen_tests_dir": "gentests"}"#,
    )
    .unwrap();
    count
}

fn regeneration_fixpoint() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let invocations = build_project(dir.path());
    let templates = fs::read_dir(dir.path().join("templates")).unwrap().count();
    ensure!(invocations >= 30 && templates >= 3, "project too small");
    let cfg = config(dir.path());
    let sources = snapshot(&dir.path().join("src"));
    ensure!(sources.len() == 20, "expected 20 source files");

    let t = Instant::now();
    let first = cmd_generate(&cfg);
    ensure!(!first.has_errors(), "diagnostics: {:?}", first.diagnostics);
    ensure!(first.counts.valid == invocations, "valid {} of {invocations}", first.counts.valid);
    let after_first = snapshot(dir.path());
    let second = cmd_generate(&cfg);
    ensure!(second.counts.files_touched == 0, "second run touched {} files", second.counts.files_touched);
    ensure!(snapshot(dir.path()) == after_first, "second run changed bytes");
    let clean = cmd_clean(&cfg);
    let elapsed = t.elapsed();
    ensure!(!clean.has_errors(), "clean diagnostics: {:?}", clean.diagnostics);
    let restored = snapshot(&dir.path().join("src"));
    let differing: Vec<_> = sources.iter().filter(|(p, b)| restored.get(*p) != Some(b)).map(|(p, _)| p.display().to_string()).collect();
    ensure!(differing.is_empty(), "clean did not restore {differing:?}");
    within("fixpoint", elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{invocations} invocations, {} files touched then 0, {elapsed:?}",
        first.counts.files_touched
    ))
}

fn round_trip() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 500, failure_persistence: None, ..Config::default() });
    runner
        .run(&common::invocation_lists(), |list| {
            let text = serialize_invocations(&list);
            let back = load_invocations(&text).map_err(|e| proptest::test_runner::TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(&back, &list);
            proptest::prop_assert_eq!(serialize_invocations(&back), text);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("500 lists".into())
}

/// Throwable descendants computed directly from the shipped file.
fn throwable_closure(known: &serde_json::Value) -> (Vec<String>, BTreeSet<String>) {
    let supers: BTreeMap<String, Vec<String>> = known["types"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let name = t["name"].as_str().unwrap().to_string();
            let s = t["supertypes"].as_array().map(|a| a.iter().map(|v| v.as_str().unwrap().to_string()).collect());
            (name, s.unwrap_or_default())
        })
        .collect();
    let mut closure = BTreeSet::from(["java.lang.Throwable".to_string()]);
    loop {
        let before = closure.len();
        for (name, s) in &supers {
            if s.iter().any(|x| closure.contains(x)) {
                closure.insert(name.clone());
            }
        }
        if closure.len() == before {
            break;
        }
    }
    (supers.into_keys().collect(), closure)
}

fn typing_corpus() -> Outcome {
    let accept = common::corpus("expr_accept.txt");
    let reject = common::corpus("expr_reject.txt");
    ensure!(accept.len() >= 40 && reject.len() >= 40, "corpus too small: {} / {}", accept.len(), reject.len());
    let mut wrong: Vec<String> = accept.iter().filter(|e| parse_expression(e).is_err()).map(|e| format!("rejected {e:?}")).collect();
    wrong.extend(reject.iter().filter(|e| parse_expression(e).is_ok()).map(|e| format!("accepted {e:?}")));
    ensure!(wrong.is_empty(), "{} misclassified: {wrong:?}", wrong.len());

    let known: serde_json::Value = serde_json::from_str(DEFAULT_KNOWN_TYPES).unwrap();
    let (names, throwables) = throwable_closure(&known);
    let index = build_class_index(&[], DEFAULT_KNOWN_TYPES).unwrap();
    let mut bad = Vec::new();
    for name in &names {
        let ok = check_value(PlaceholderType::Exception, name, "", &index, TypingOptions::default()).is_ok();
        if ok != throwables.contains(name) {
            bad.push(name.clone());
        }
    }
    ensure!(bad.is_empty(), "EXCEPTION misclassified: {bad:?}");
    ensure!(throwables.len() > 1 && throwables.len() < names.len(), "degenerate known-types index");
    Ok(format!(
        "{} accept, {} reject, {} of {} known types throwable",
        accept.len(),
        reject.len(),
        throwables.len(),
        names.len()
    ))
}

fn guard_safety() -> Outcome {
    let dir = copy_fixture("buffer");
    let gen = dir.path().join("src/test/generated");
    fs::create_dir_all(gen.join("com/ex")).unwrap();
    fs::write(gen.join("com/ex/HandWritten.java"), "class HandWritten {}\n").unwrap();
    let before = tree_hash(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_dscribe")).current_dir(dir.path()).arg("generate").output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure!(out.status.code() == Some(1), "exit code {:?}", out.status.code());
    ensure!(stderr.contains("GuardError"), "stderr: {stderr}");
    ensure!(tree_hash(dir.path()) == before, "the project tree changed");
    Ok("exit 1, tree hash unchanged".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("example-end-to-end", example_end_to_end),
        ("mathlog-aggregation", math_log),
        ("aggregation-oracle", aggregation_oracle),
        ("regeneration-fixpoint", regeneration_fixpoint),
        ("invocation-round-trip", round_trip),
        ("typing-corpus", typing_corpus),
        ("guard-safety", guard_safety),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
