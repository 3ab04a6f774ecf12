//! Side-by-side summary of finished runs.

use resilab_core::monitor::PhaseState;
use resilab_core::runner::ExperimentResult;

pub struct Row {
    pub name: String,
    pub mechanism: String,
    pub policy: String,
    pub first_recovery: usize,
    pub final_disruption: Option<usize>,
    pub recovered: bool,
    pub human: u32,
    pub overrides: usize,
    pub grams_co2: f64,
    pub model_seconds: f64,
}

impl Row {
    pub fn from_result(name: &str, r: &ExperimentResult) -> Self {
        let policy = serde_json::to_value(r.config.update_policy)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        Self {
            name: name.to_string(),
            mechanism: r.config.mechanism.id.clone(),
            policy,
            first_recovery: r.recovery.first,
            final_disruption: r.recovery.second,
            recovered: r.timeline.find(PhaseState::Recovered).is_some(),
            human: r.totals.human_interactions,
            overrides: r.totals.overrides,
            grams_co2: r.totals.grams_co2,
            model_seconds: r.totals.model_seconds,
        }
    }
}

const HEADER: [&str; 10] = [
    "run",
    "mechanism",
    "policy",
    "recovery",
    "recovered",
    "final_disruption",
    "human",
    "overrides",
    "co2_g",
    "time_s",
];

/// Plain text table, columns padded to their widest cell.
pub fn table(rows: &[Row]) -> String {
    let cells: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.mechanism.clone(),
                r.policy.clone(),
                r.first_recovery.to_string(),
                if r.recovered { "yes" } else { "no" }.to_string(),
                r.final_disruption.map_or("-".to_string(), |n| n.to_string()),
                r.human.to_string(),
                r.overrides.to_string(),
                format!("{:.3}", r.grams_co2),
                format!("{:.1}", r.model_seconds),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..HEADER.len())
        .map(|i| cells.iter().map(|c| c[i].len()).chain([HEADER[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |vals: Vec<&str>| {
        vals.iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(HEADER.to_vec());
    out.push('\n');
    for c in &cells {
        out += &line(c.iter().map(String::as_str).collect());
        out.push('\n');
    }
    out
}
