//! Report assembly: canonical JSON with a graph fingerprint, so identical
//! inputs and seeds produce byte-identical output.

use curvgraph_core::canonical::{fmt_float, to_canonical_string};
use curvgraph_core::graph::WeightedGraph;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

/// Prints one line to stdout. A closed pipe ends the run quietly instead of
/// panicking; any other write failure is fatal.
pub fn print_line(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{line}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(2);
    }
}

/// Hex SHA-256 of the canonical graph rendering.
pub fn fingerprint(g: &WeightedGraph) -> String {
    let mut hasher = Sha256::new();
    hasher.update(g.to_canonical_json().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps per-command results into the stable report envelope and prints it.
pub fn emit(command: &str, args: Value, g: &WeightedGraph, body: Value, status: &str) {
    let mut report = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": args,
        "fingerprint": fingerprint(g),
        "status": status,
    });
    let map = report.as_object_mut().expect("report is an object");
    for (key, value) in body.as_object().expect("body is an object") {
        map.insert(key.clone(), value.clone());
    }
    print_line(&to_canonical_string(&report));
}

/// One CSV line; floats rendered exactly like the canonical JSON writer.
pub fn csv_row(fields: &[CsvField]) -> String {
    let rendered: Vec<String> = fields
        .iter()
        .map(|f| match f {
            CsvField::Int(v) => v.to_string(),
            CsvField::Float(v) => fmt_float(*v),
            CsvField::Text(s) => s.clone(),
        })
        .collect();
    rendered.join(",")
}

pub enum CsvField {
    Int(usize),
    Float(f64),
    Text(String),
}

/// Reads a graph from a file path, or stdin for `-`.
pub fn load_graph(path: &str) -> Result<WeightedGraph, Failure> {
    let text = if path == "-" {
        use std::io::Read;
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?
    };
    WeightedGraph::from_json_str(&text).map_err(|e| Failure::Input(format!("{path}: {e}")))
}
