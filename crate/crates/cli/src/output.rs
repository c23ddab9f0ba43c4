//! Result emission: one CSV of per-(strategy, sweep, realization, terminal,
//! subcarrier) rates and powers, a JSON summary of mean utilities, and one
//! empirical-CDF CSV per strategy.

use crate::experiment::{format_sweep_value, ExperimentResult};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Empirical CDF at the sorted sample points, right-continuous: one pair per
/// distinct value with `F(v) = #(samples <= v) / n`.
pub fn compute_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, String> {
    if samples.is_empty() {
        return Err("cannot build a CDF from no samples".into());
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

pub fn results_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("strategy,sweep,realization,terminal,subcarrier,rate,power\n");
    for r in &result.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.strategy, r.sweep, r.realization, r.terminal, r.subcarrier, r.rate, r.power
        );
    }
    s
}

pub fn summary_json(result: &ExperimentResult) -> String {
    let mut root = BTreeMap::new();
    for (strategy, per_sweep) in &result.summary {
        let mut sweep_map = BTreeMap::new();
        for (sweep, entry) in per_sweep {
            let mut obj = BTreeMap::new();
            obj.insert(
                "mean_utility".to_string(),
                serde_json::json!(entry.mean_utility),
            );
            obj.insert(
                "realizations".to_string(),
                serde_json::json!(entry.realizations),
            );
            obj.insert("failures".to_string(), serde_json::json!(entry.failures));
            if !entry.failure_messages.is_empty() {
                obj.insert(
                    "failure_messages".to_string(),
                    serde_json::json!(entry.failure_messages),
                );
            }
            sweep_map.insert(sweep.clone(), obj);
        }
        root.insert(strategy.clone(), sweep_map);
    }
    serde_json::to_string_pretty(&root).expect("summary serializes")
}

pub fn cdf_csv(result: &ExperimentResult, strategy: &str) -> Option<String> {
    let samples = result.samples.get(strategy)?;
    let mut per_sweep: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (sweep, per_terminal) in samples {
        per_sweep
            .entry(format_sweep_value(*sweep))
            .or_default()
            .extend(per_terminal.iter().cloned());
    }
    let mut s = String::from("sweep,rate,probability\n");
    for (sweep, vals) in &per_sweep {
        if let Ok(cdf) = compute_cdf(vals) {
            for (v, p) in cdf {
                let _ = writeln!(s, "{sweep},{v},{p}");
            }
        }
    }
    Some(s)
}

/// Write all output files into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(result))?;
    fs::write(dir.join("summary.json"), summary_json(result))?;
    for strategy in result.samples.keys() {
        if let Some(text) = cdf_csv(result, strategy) {
            fs::write(dir.join(format!("cdf_{strategy}.csv")), text)?;
        }
    }
    Ok(())
}
