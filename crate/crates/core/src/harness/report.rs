use std::fmt::Write as _;

use super::BenchmarkReport;

/// Accuracy table: one row per method, one column per train fraction, cells
/// `mean (±std)` in percent.
pub fn table_csv(report: &BenchmarkReport) -> String {
    let fractions = &report.config.fractions;
    let mut out = String::from("method");
    for f in fractions {
        let _ = write!(out, ",{f}");
    }
    out.push('\n');
    for method in &report.config.methods {
        out.push_str(method);
        for &f in fractions {
            match report.cell(method, f) {
                Some(c) if c.count > 0 => {
                    let _ = write!(out, ",{:.2} (±{:.2})", 100.0 * c.mean, 100.0 * c.std);
                }
                _ => out.push_str(",n/a"),
            }
        }
        out.push('\n');
    }
    out
}

/// Mean test accuracy per selection step of `method` at `fraction`.
/// Repetitions whose selection stopped earlier contribute their last value.
pub fn curve_rows(report: &BenchmarkReport, method: &str, fraction: f64) -> Vec<(usize, f64)> {
    let curves: Vec<&Vec<f64>> = report
        .runs_of(method, fraction)
        .into_iter()
        .filter_map(|r| r.curve.as_ref())
        .filter(|c| !c.is_empty())
        .collect();
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let sum: f64 = curves.iter().map(|c| c[t.min(c.len() - 1)]).sum();
            (t, sum / curves.len() as f64)
        })
        .collect()
}

/// Mean weight per (class, kernel) of `method` at `fraction`; a kernel
/// absent from a repetition counts as weight 0 there.
pub fn weight_rows(report: &BenchmarkReport, method: &str, fraction: f64) -> Vec<(String, String, f64)> {
    let runs = report.runs_of(method, fraction);
    let with_weights: Vec<_> = runs.iter().filter_map(|r| r.weights.as_ref()).collect();
    if with_weights.is_empty() {
        return Vec::new();
    }
    let mut classes: Vec<String> = Vec::new();
    let mut kernels: Vec<String> = Vec::new();
    for ws in &with_weights {
        for cw in ws.iter() {
            if !classes.contains(&cw.class) {
                classes.push(cw.class.clone());
            }
            for k in &cw.kernels {
                if !kernels.contains(k) {
                    kernels.push(k.clone());
                }
            }
        }
    }
    let n = with_weights.len() as f64;
    let mut rows = Vec::new();
    for class in &classes {
        for kernel in &kernels {
            let total: f64 = with_weights
                .iter()
                .filter_map(|ws| ws.iter().find(|cw| &cw.class == class))
                .filter_map(|cw| cw.kernels.iter().position(|k| k == kernel).map(|i| cw.weights[i]))
                .sum();
            rows.push((class.clone(), kernel.clone(), total / n));
        }
    }
    rows
}
