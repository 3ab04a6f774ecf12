use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::{Error, Result};

pub const HIST_BINS: usize = 8;
/// Mean RGB followed by one histogram per channel.
pub const FEATURE_DIM: usize = 3 + 3 * HIST_BINS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: u64,
    pub payload: Vec<f64>,
    pub true_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    pub color: [f64; 3],
}

/// Muted cubes. At a fifth of the light every channel falls into the lowest
/// histogram bin, so the classes become hard to tell apart.
pub fn default_palette() -> Vec<ClassSpec> {
    palette(3)
}

/// `k` colours spaced evenly around the hue circle, each channel between
/// 0.15 and 0.5. Three classes get the names red, green and blue.
pub fn palette(k: usize) -> Vec<ClassSpec> {
    use std::f64::consts::TAU;
    (0..k)
        .map(|i| {
            let hue = TAU * i as f64 / k as f64;
            let color = [0, 1, 2].map(|c| {
                let v = 0.15 + 0.35 * (hue - TAU * c as f64 / 3.0).cos().max(0.0);
                // keep the three primaries exact
                (v * 1e12).round() / 1e12
            });
            let name = match (k, i) {
                (3, 0) => "red".to_string(),
                (3, 1) => "green".to_string(),
                (3, 2) => "blue".to_string(),
                _ => format!("class-{i}"),
            };
            ClassSpec { name, color }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n: usize,
    pub classes: Vec<ClassSpec>,
    pub noise_sigma: f64,
    /// Spread of a face's pixel intensities around its mean, per channel.
    pub hist_width: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n: 300,
            classes: default_palette(),
            noise_sigma: 0.05,
            hist_width: 0.1,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("dataset.n must be at least 1".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidInput("dataset.classes must not be empty".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dataset.noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.hist_width > 0.0 && self.hist_width.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dataset.hist_width must be positive, got {}",
                self.hist_width
            )));
        }
        for c in &self.classes {
            if c.color.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInput(format!(
                    "class '{}' colour must lie in [0,1]^3",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

/// Mean RGB plus, per channel, a Gaussian spread of pixel values binned into
/// `HIST_BINS` equal bins on [0,1] and normalized to sum to one.
pub fn color_features(rgb: [f64; 3], hist_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_DIM);
    out.extend(rgb);
    for c in rgb {
        let weights: Vec<f64> = (0..HIST_BINS)
            .map(|k| {
                let center = (k as f64 + 0.5) / HIST_BINS as f64;
                (-(center - c).powi(2) / (2.0 * hist_width * hist_width)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            out.extend(weights.iter().map(|w| w / total));
        } else {
            // a spike far from every bin centre: put it in its own bin
            let bin = ((c * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            out.extend((0..HIST_BINS).map(|k| if k == bin { 1.0 } else { 0.0 }));
        }
    }
    out
}

/// Labels are dealt round-robin and shuffled, so class counts differ by at
/// most one. Each record jitters its class colour, then derives features.
pub fn generate_cube_dataset(params: &GeneratorParams, seed: u64) -> Result<Vec<RawRecord>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.classes.len();
    let mut labels: Vec<usize> = (0..params.n).map(|i| i % k).collect();
    labels.shuffle(&mut rng);
    let noise = Normal::new(0.0, params.noise_sigma)
        .map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    Ok(labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let class = &params.classes[l];
            let rgb = class.color.map(|c| (c + noise.sample(&mut rng)).clamp(0.0, 1.0));
            RawRecord {
                id: i as u64,
                payload: color_features(rgb, params.hist_width),
                true_label: class.name.clone(),
            }
        })
        .collect())
}

pub fn write_dataset_csv<W: Write>(records: &[RawRecord], out: W) -> Result<()> {
    let dim = records.first().map_or(FEATURE_DIM, |r| r.payload.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in records {
        if r.payload.len() != dim {
            return Err(Error::InvalidInput(format!(
                "record {} has {} features, expected {dim}",
                r.id,
                r.payload.len()
            )));
        }
        let mut row = vec![r.id.to_string(), r.true_label.clone()];
        row.extend(r.payload.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let ok_header = headers.len() > 2
        && &headers[0] == "id"
        && &headers[1] == "label"
        && headers.iter().skip(2).enumerate().all(|(i, h)| h == format!("f{i}"));
    if !ok_header {
        return Err(Error::InvalidInput(
            "dataset header must be id,label,f0..f{n-1}".into(),
        ));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::InvalidInput(format!("dataset row {}: bad {what}", line + 1));
        let id = row[0].parse::<u64>().map_err(|_| bad("id"))?;
        let payload = row
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|_| bad("feature")))
            .collect::<Result<Vec<f64>>>()?;
        if payload.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(bad("feature range (expected [0,1])"));
        }
        out.push(RawRecord {
            id,
            payload,
            true_label: row[1].to_string(),
        });
    }
    Ok(out)
}
