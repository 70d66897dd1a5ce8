use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use gfix_core::IterationTrace;

use crate::config::{ConfigError, ConfigResult};

pub const TRACE_HEADER: &str = "n,alpha_n,residual,true_error,bound,slack";

/// 17 significant digits: round-trips every 64-bit float.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// The trace CSV; absent values are empty fields.
pub fn trace_csv(trace: &IterationTrace, slack: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, r) in trace.records.iter().enumerate() {
        let s = slack.and_then(|s| s.get(i).copied());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            opt(r.alpha_n),
            real(r.residual),
            opt(r.true_error),
            opt(r.bound),
            opt(s)
        );
    }
    out
}

/// `key = value` lines, with the resolved configuration first.
pub fn summary_text(command: &str, config: &BTreeMap<&'static str, String>, fields: &[(&str, String)]) -> String {
    let mut out = format!("# gfix {command}\n[config]\n");
    for (k, v) in config {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("[result]\n");
    for (k, v) in fields {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

pub fn emit(path: Option<&Path>, content: &str) -> ConfigResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| ConfigError(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| ConfigError(format!("cannot write to stdout: {e}")))
        }
    }
}
