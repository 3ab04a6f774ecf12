//! Incremental nearest-centroid classifier with a softmax-style confidence.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

use crate::{Decision, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    pub temperature: f64,
    pub min_prob: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            min_prob: 0.4,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learner.temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(0.0..=1.0).contains(&self.min_prob) {
            return Err(Error::InvalidInput(format!(
                "learner.min_prob must be in [0,1], got {}",
                self.min_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub mean: Vec<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub predicted: Option<String>,
    pub epsilon: f64,
}

/// Per-class running means over fixed-width feature vectors.
///
/// When the class set is declared up front, confidence stays at zero until
/// every declared class has been taught at least once.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineModel {
    dim: usize,
    params: LearnerParams,
    classes: Vec<String>,
    centroids: BTreeMap<String, Centroid>,
}

impl OnlineModel {
    pub fn new(dim: usize, params: LearnerParams) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(Error::InvalidInput("feature dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            params,
            classes: Vec::new(),
            centroids: BTreeMap::new(),
        })
    }

    pub fn with_classes(mut self, classes: impl IntoIterator<Item = String>) -> Self {
        self.classes = classes.into_iter().collect();
        self.classes.sort();
        self.classes.dedup();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    pub fn centroids(&self) -> &BTreeMap<String, Centroid> {
        &self.centroids
    }

    fn check_shape(&self, payload: &[f64]) -> Result<()> {
        if payload.len() == self.dim {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "payload has {} features, model expects {}",
                payload.len(),
                self.dim
            )))
        }
    }

    fn ready(&self) -> bool {
        self.centroids.len() >= 2 && self.classes.iter().all(|c| self.centroids.contains_key(c))
    }

    /// Distance used by the confidence: mean squared difference per feature.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / self.dim as f64
    }

    /// Nearest class and its share of the summed similarities. `epsilon` is 0
    /// until the model has enough classes to compare.
    pub fn estimate(&self, payload: &[f64]) -> Result<Estimate> {
        self.check_shape(payload)?;
        let dists: Vec<(&String, f64)> = self
            .centroids
            .iter()
            .map(|(k, c)| (k, self.distance(payload, &c.mean)))
            .collect();
        let Some(&(nearest, dmin)) = dists.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
            return Ok(Estimate {
                predicted: None,
                epsilon: 0.0,
            });
        };
        if !self.ready() {
            return Ok(Estimate {
                predicted: Some(nearest.clone()),
                epsilon: 0.0,
            });
        }
        // shifting by the minimum keeps exp() away from underflow
        let total: f64 = dists
            .iter()
            .map(|(_, d)| (-(d - dmin) / self.params.temperature).exp())
            .sum();
        Ok(Estimate {
            predicted: Some(nearest.clone()),
            epsilon: (1.0 / total).clamp(0.0, 1.0),
        })
    }

    pub fn learn(&mut self, payload: &[f64], label: &str) -> Result<()> {
        self.check_shape(payload)?;
        match self.centroids.get_mut(label) {
            Some(c) => {
                c.count += 1;
                let n = c.count as f64;
                for (m, x) in c.mean.iter_mut().zip(payload) {
                    *m += (x - *m) / n;
                }
            }
            None => {
                self.centroids.insert(
                    label.to_string(),
                    Centroid {
                        mean: payload.to_vec(),
                        count: 1,
                    },
                );
            }
        }
        Ok(())
    }

    /// Debug dump: `class,count,c0..c{dim-1}`.
    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["class".to_string(), "count".to_string()];
        header.extend((0..self.dim).map(|i| format!("c{i}")));
        w.write_record(&header)?;
        for (class, c) in &self.centroids {
            let mut row = vec![class.clone(), c.count.to_string()];
            row.extend(c.mean.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// The autonomy gate: inclusive at `min_prob`.
pub fn decide(epsilon: f64, min_prob: f64) -> Decision {
    if epsilon >= min_prob {
        Decision::Autonomous
    } else {
        Decision::Human
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(dim: usize) -> OnlineModel {
        OnlineModel::new(dim, LearnerParams::default()).unwrap()
    }

    #[test]
    fn gate() {
        assert_eq!(decide(0.4, 0.4), Decision::Autonomous);
        assert_eq!(decide(0.39, 0.4), Decision::Human);
        assert_eq!(decide(0.95, 0.4), Decision::Autonomous);
    }

    #[test]
    fn running_mean() {
        let mut m = model(2);
        m.learn(&[1.0, 0.0], "a").unwrap();
        assert_eq!(m.centroids()["a"].mean, vec![1.0, 0.0]);
        m.learn(&[0.0, 1.0], "a").unwrap();
        assert_eq!(m.centroids()["a"].mean, vec![0.5, 0.5]);
        for _ in 0..5 {
            m.learn(&[0.25, 0.75], "b").unwrap();
        }
        assert_eq!(m.centroids()["b"].count, 5);
        assert_eq!(m.centroids()["b"].mean, vec![0.25, 0.75]);
    }

    #[test]
    fn fewer_than_two_classes_is_unsure() {
        let mut m = model(1);
        assert_eq!(m.estimate(&[0.3]).unwrap(), Estimate { predicted: None, epsilon: 0.0 });
        m.learn(&[0.3], "a").unwrap();
        let e = m.estimate(&[0.3]).unwrap();
        assert_eq!(e.predicted.as_deref(), Some("a"));
        assert_eq!(e.epsilon, 0.0);
    }

    #[test]
    fn declared_classes_must_all_be_seen() {
        let mut m = model(1).with_classes(["a", "b", "c"].map(String::from));
        m.learn(&[0.0], "a").unwrap();
        m.learn(&[1.0], "b").unwrap();
        assert_eq!(m.estimate(&[0.0]).unwrap().epsilon, 0.0);
        m.learn(&[0.5], "c").unwrap();
        assert!(m.estimate(&[0.0]).unwrap().epsilon > 0.0);
    }

    #[test]
    fn equidistant_is_uniform() {
        let mut m = model(2);
        m.learn(&[1.0, 0.0], "a").unwrap();
        m.learn(&[0.0, 1.0], "b").unwrap();
        m.learn(&[-1.0, 0.0], "c").unwrap();
        m.learn(&[0.0, -1.0], "d").unwrap();
        let e = m.estimate(&[0.0, 0.0]).unwrap();
        assert!((e.epsilon - 0.25).abs() < 1e-12);
    }

    #[test]
    fn far_classes_give_full_confidence() {
        let mut m = model(1);
        m.learn(&[0.0], "near").unwrap();
        m.learn(&[50.0], "far").unwrap();
        let e = m.estimate(&[0.0]).unwrap();
        assert_eq!(e.predicted.as_deref(), Some("near"));
        assert!(e.epsilon > 1.0 - 1e-12);
    }

    #[test]
    fn shape_is_checked() {
        let mut m = model(3);
        assert!(m.learn(&[1.0], "a").is_err());
        assert!(m.estimate(&[1.0, 2.0]).is_err());
        assert!(OnlineModel::new(0, LearnerParams::default()).is_err());
        let bad = LearnerParams { temperature: 0.0, ..Default::default() };
        assert!(OnlineModel::new(2, bad).is_err());
    }

    #[test]
    fn snapshot_layout() {
        let mut m = model(2);
        m.learn(&[0.5, 0.25], "x").unwrap();
        let mut buf = Vec::new();
        m.write_snapshot(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "class,count,c0,c1\nx,1,0.5,0.25\n");
    }
}
