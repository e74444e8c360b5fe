//! Machine-readable result emission.

use syncmarket_core::simulator::ExperimentResult;

/// Fixed CSV header.
pub const CSV_HEADER: &str = "mechanism,sweep_var,sweep_value,metric,mean,stderr,n_seeds";

/// Emit one row per (mechanism, sweep point, metric). Floats print in
/// shortest round-trip form, so parsing the output recovers the exact values.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &result.cells {
        for stat in &cell.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cell.mechanism,
                cell.sweep_var,
                cell.sweep_value,
                stat.metric,
                stat.mean,
                stat.stderr,
                cell.n_seeds
            ));
        }
    }
    out
}

/// Parse rows written by `to_csv` back into (mechanism, sweep_var,
/// sweep_value, metric, mean, stderr, n_seeds) tuples.
pub fn parse_csv(text: &str) -> Result<Vec<(String, String, f64, String, f64, f64, u64)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad CSV header: {other:?}")),
    }
    lines
        .map(|line| {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 7 {
                return Err(format!("bad CSV row: {line}"));
            }
            Ok((
                parts[0].to_string(),
                parts[1].to_string(),
                parts[2].parse().map_err(|e| format!("{line}: {e}"))?,
                parts[3].to_string(),
                parts[4].parse().map_err(|e| format!("{line}: {e}"))?,
                parts[5].parse().map_err(|e| format!("{line}: {e}"))?,
                parts[6].parse().map_err(|e| format!("{line}: {e}"))?,
            ))
        })
        .collect()
}
