use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::mechanisms::Rule;
use crate::simulator::Phase;
use crate::{Decision, Error, Result};

pub const LOG_HEADER: [&str; 14] = [
    "timestamp_ms",
    "iteration",
    "phase",
    "true_label",
    "predicted_label",
    "epsilon",
    "original_decision",
    "final_action",
    "overridden",
    "mechanism_rule",
    "et_est_s",
    "ecf_est_g",
    "nhi_remaining",
    "adr",
];

/// One iteration of the loop, as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Model time at the end of the executed action.
    pub timestamp_ms: u64,
    pub iteration: usize,
    pub phase: Phase,
    pub true_label: String,
    pub predicted_label: Option<String>,
    pub epsilon: f64,
    pub original_decision: Decision,
    pub final_action: Decision,
    pub overridden: bool,
    pub mechanism_rule: Rule,
    /// Smoothed estimates of the executed action, after this observation.
    pub et_est_s: f64,
    pub ecf_est_g: f64,
    /// Human interactions left after this iteration.
    pub nhi_remaining: u32,
    /// Ratio the monitor checked, i.e. with the model's own decision.
    pub adr: f64,
}

impl DecisionRecord {
    fn to_row(&self) -> [String; 14] {
        [
            self.timestamp_ms.to_string(),
            self.iteration.to_string(),
            self.phase.as_str().to_string(),
            self.true_label.clone(),
            self.predicted_label.clone().unwrap_or_default(),
            self.epsilon.to_string(),
            self.original_decision.to_string(),
            self.final_action.to_string(),
            self.overridden.to_string(),
            self.mechanism_rule.to_string(),
            self.et_est_s.to_string(),
            self.ecf_est_g.to_string(),
            self.nhi_remaining.to_string(),
            self.adr.to_string(),
        ]
    }

    fn from_row(row: &csv::StringRecord, line: usize) -> Result<Self> {
        if row.len() != LOG_HEADER.len() {
            return Err(Error::InvalidInput(format!(
                "log line {line}: expected {} fields, got {}",
                LOG_HEADER.len(),
                row.len()
            )));
        }
        let field = |i: usize| &row[i];
        let bad = |i: usize| Error::InvalidInput(format!("log line {line}: bad {}", LOG_HEADER[i]));
        let num = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let flag = |i: usize| match field(i) {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad(i)),
        };
        Ok(Self {
            timestamp_ms: field(0).parse().map_err(|_| bad(0))?,
            iteration: field(1).parse().map_err(|_| bad(1))?,
            phase: field(2).parse().map_err(|_| bad(2))?,
            true_label: field(3).to_string(),
            predicted_label: Some(field(4)).filter(|s| !s.is_empty()).map(str::to_string),
            epsilon: num(5)?,
            original_decision: field(6).parse().map_err(|_| bad(6))?,
            final_action: field(7).parse().map_err(|_| bad(7))?,
            overridden: flag(8)?,
            mechanism_rule: field(9).parse().map_err(|_| bad(9))?,
            et_est_s: num(10)?,
            ecf_est_g: num(11)?,
            nhi_remaining: field(12).parse().map_err(|_| bad(12))?,
            adr: num(13)?,
        })
    }
}

/// Writes the decision log. Reals use the shortest text that parses back to
/// the same value.
pub fn write_log_to<W: Write>(records: &[DecisionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOG_HEADER)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn log_to_string(records: &[DecisionRecord]) -> String {
    let mut buf = Vec::new();
    write_log_to(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("log is utf-8")
}

pub fn write_log(records: &[DecisionRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_log_to(records, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Csv(c) if c.is_io_error() => Error::io(path, std::io::Error::other(c.to_string())),
        other => other,
    })
}

pub fn read_log_from<R: Read>(input: R) -> Result<Vec<DecisionRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(LOG_HEADER) {
        return Err(Error::InvalidInput("decision log header does not match".into()));
    }
    rdr.records()
        .enumerate()
        .map(|(i, row)| DecisionRecord::from_row(&row?, i + 2))
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<DecisionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_log_from(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize) -> DecisionRecord {
        DecisionRecord {
            timestamp_ms: 2000 * i as u64,
            iteration: i,
            phase: Phase::Disrupted,
            true_label: "red".into(),
            predicted_label: (i % 2 == 0).then(|| "blue".to_string()),
            epsilon: 1.0 / 3.0,
            original_decision: Decision::Human,
            final_action: Decision::Autonomous,
            overridden: true,
            mechanism_rule: Rule::Psne,
            et_est_s: 2.0000000000000004,
            ecf_est_g: 0.022222222222222223,
            nhi_remaining: 97,
            adr: 0.65,
        }
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(
            log_to_string(&[]),
            "timestamp_ms,iteration,phase,true_label,predicted_label,epsilon,original_decision,\
             final_action,overridden,mechanism_rule,et_est_s,ecf_est_g,nhi_remaining,adr\n"
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let recs: Vec<_> = (0..5).map(sample).collect();
        let text = log_to_string(&recs);
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains(",true,psne,"));
        assert_eq!(read_log_from(text.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn file_round_trip_and_io_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let recs: Vec<_> = (0..3).map(sample).collect();
        write_log(&recs, &path).unwrap();
        assert_eq!(read_log(&path).unwrap(), recs);
        let missing = dir.path().join("nope").join("log.csv");
        let err = write_log(&recs, &missing).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(read_log_from("a,b\n1,2\n".as_bytes()).is_err());
        let mut text = log_to_string(&[sample(0)]);
        text = text.replace(",true,psne,", ",maybe,psne,");
        assert!(read_log_from(text.as_bytes()).is_err());
    }
}
