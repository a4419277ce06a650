use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use massred::base::BitString;
use massred::error::Error;
use serde_json::{json, Value};

use crate::{Failure, Outcome};

/// Artifact files named by `inputs`; directories contribute their `*.json`
/// files in name order, skipping earlier reports.
fn collect(inputs: &[PathBuf]) -> Outcome<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Failure::Usage(format!("cannot list {}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .filter(|f| f.file_name().is_some_and(|n| n != "report.json"))
                .collect();
            files.sort();
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(Error::MissingArtifact(p.display().to_string()).into());
        }
    }
    Ok(out)
}

fn read(p: &Path) -> Outcome<(String, String, Value)> {
    let bad = |m: String| Failure::Module(Error::MissingArtifact(format!("{}: {m}", p.display())));
    let text = fs::read_to_string(p).map_err(|e| bad(e.to_string()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let verb = v["verb"]
        .as_str()
        .ok_or_else(|| bad("no verb".into()))?
        .to_string();
    if v.get("result").is_none() {
        return Err(bad("no result".into()));
    }
    let name = p
        .file_stem()
        .map_or(String::new(), |s| s.to_string_lossy().into_owned());
    Ok((name, verb, v["result"].clone()))
}

fn cell(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(true) => "pass".into(),
        Value::Bool(false) => "fail".into(),
        v => v.to_string(),
    };
    s.replace(',', ";")
}

/// One section as CSV under a `# name` line.
fn csv_section(name: &str, cols: &[&str], rows: &[Value]) -> String {
    let mut s = format!("# {name}\n{}\n", cols.join(","));
    for r in rows {
        let line: Vec<String> = cols.iter().map(|c| cell(&r[*c])).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Running agreement density of `z`, one row per prefix.
fn density_rows(artifact: &str, z: &BitString) -> Vec<Value> {
    let mut ones = 0usize;
    (0..z.len())
        .map(|i| {
            ones += z.get(i) as usize;
            json!({ "artifact": artifact, "m": i + 1, "ones": ones, "density": format!("{ones}/{}", i + 1) })
        })
        .collect()
}

const STAGE_COLS: &[&str] = &["artifact", "direction", "stage", "relation", "verdict"];
const CODE_COLS: &[&str] = &[
    "artifact",
    "r",
    "q",
    "L",
    "size",
    "log2_size",
    "target_log2",
];
const DENSITY_COLS: &[&str] = &["artifact", "m", "ones", "density"];
const VERB_COLS: &[&str] = &["verb", "artifacts"];

/// Stage table, code rate table, density series, and per-verb counts.
pub fn build(inputs: &[PathBuf], verbose: bool) -> Outcome<(Value, String)> {
    let files = collect(inputs)?;
    let (mut stages, mut codes, mut density) = (Vec::new(), Vec::new(), Vec::new());
    let mut verbs: BTreeMap<String, usize> = BTreeMap::new();
    for f in &files {
        let (name, verb, result) = read(f)?;
        if verbose {
            eprintln!("[report] {name}: {verb}");
        }
        *verbs.entry(verb.clone()).or_default() += 1;
        match verb.as_str() {
            "pipeline-d" | "pipeline-b" => {
                let trace = &result["trace"];
                for s in trace["stages"].as_array().into_iter().flatten() {
                    stages.push(json!({
                        "artifact": name,
                        "direction": trace["direction"],
                        "stage": s["stage"],
                        "relation": s["relation"],
                        "verdict": s.get("verdict").cloned().unwrap_or(Value::Null),
                    }));
                }
                if let Some(z) = result["z"].as_str() {
                    let z = BitString::parse(z)?;
                    density.extend(density_rows(&name, &z));
                }
            }
            "code-build" => {
                let mut row = json!({ "artifact": name });
                for c in &CODE_COLS[1..] {
                    row[*c] = result[*c].clone();
                }
                codes.push(row);
            }
            _ => {}
        }
    }
    let verb_rows: Vec<Value> = verbs
        .iter()
        .map(|(v, n)| json!({ "verb": v, "artifacts": n }))
        .collect();
    let summary = json!({
        "artifacts": files.len(),
        "sections": {
            "verbs": verb_rows,
            "stages": stages,
            "codes": codes,
            "density": density,
        }
    });
    let csv = [
        csv_section("verbs", VERB_COLS, &verb_rows),
        csv_section("stages", STAGE_COLS, &stages),
        csv_section("codes", CODE_COLS, &codes),
        csv_section("density", DENSITY_COLS, &density),
    ]
    .join("\n");
    Ok((summary, csv))
}
