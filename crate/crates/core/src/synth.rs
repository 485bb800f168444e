//! Synthetic latent spaces with known structure.
//!
//! Generative model, for descriptor `d`, magnitude level `m` (fraction in
//! `(0, 1]`) and pitch `p`:
//!
//! ```text
//! cell centroid = P_p
//!               + descriptor_offset · (m + step_jitter · j[d,m,p]) · dir[d,p]
//!               + curvature · m · (1 − m) · w_d
//! dir[d,p]      = normalize((1 − pitch_coupling) · u_d + pitch_coupling · v[d,p])
//! sample        = cell centroid + noise_sigma · N(0, I)
//! ```
//!
//! `P_p` are pitch centers at distance `pitch_spread` from the origin along
//! mutually orthogonal random directions (so all pitch centers are
//! equidistant) when `dims` ≥ number of pitches, and along independent
//! random directions otherwise. `u_d`, `v[d,p]` are uniform random unit
//! vectors, `w_d` a random unit vector orthogonal to `u_d`, `j` standard
//! normal draws.
//!
//! All draws come from one ChaCha8 stream seeded with `seed_from_u64(seed)`
//! and are consumed in a fixed order: pitch centers; per descriptor `u_d`
//! then `w_d`; `v[d,p]` for every (d, p); `j[d,m,p]` for every (d, m, p);
//! then per-sample noise in row order. Every stage always draws, whatever
//! the knob values, so changing one knob never shifts another stage's
//! stream. Rows are ordered by descriptor, magnitude, pitch, then sample.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{LatentDataset, SampleLabel};
use crate::geometry::Matrix;
use crate::schema::LabelSchema;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Invalid(String),
    #[error("failed to read synth config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed synth config {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub dims: usize,
    pub schema: LabelSchema,
    pub samples_per_cell: usize,
    pub pitch_spread: f64,
    pub descriptor_offset: f64,
    pub curvature: f64,
    pub step_jitter: f64,
    /// 0: descriptor directions shared by every pitch; 1: independent per pitch.
    pub pitch_coupling: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dims: 128,
            schema: LabelSchema::default(),
            samples_per_cell: 2,
            pitch_spread: 10.0,
            descriptor_offset: 2.0,
            curvature: 0.0,
            step_jitter: 0.0,
            pitch_coupling: 0.0,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: SynthConfig = serde_json::from_str(&text).map_err(|source| SynthError::Json {
            path: path.display().to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.dims < 2 {
            return bad(format!("dims must be at least 2, got {}", self.dims));
        }
        if self.samples_per_cell < 1 {
            return bad("samples_per_cell must be at least 1".into());
        }
        for (name, v) in [
            ("pitch_spread", self.pitch_spread),
            ("descriptor_offset", self.descriptor_offset),
            ("curvature", self.curvature),
            ("step_jitter", self.step_jitter),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.pitch_coupling) {
            return bad(format!("pitch_coupling must lie in [0, 1], got {}", self.pitch_coupling));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dims: usize) -> Vec<f64> {
    (0..dims).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Removes the components of `v` along each (unit) vector in `basis`.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for b in basis {
        let c = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    v
}

pub fn generate(cfg: &SynthConfig) -> Result<LatentDataset, SynthError> {
    cfg.validate()?;
    let dims = cfg.dims;
    let schema = &cfg.schema;
    let (n_desc, n_mag, n_pitch) = (
        schema.descriptors().len(),
        schema.magnitudes().len(),
        schema.pitches().len(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let raw_pitch: Vec<Vec<f64>> = (0..n_pitch).map(|_| gaussian(&mut rng, dims)).collect();
    let orthogonal = dims >= n_pitch;
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n_pitch);
    for g in raw_pitch {
        let dir = if orthogonal {
            normalize(orthogonalize(g, &frame))
        } else {
            normalize(g)
        };
        frame.push(dir);
    }
    let pitch_centers: Vec<Vec<f64>> = frame
        .iter()
        .map(|e| e.iter().map(|x| x * cfg.pitch_spread).collect())
        .collect();

    let mut base = Vec::with_capacity(n_desc);
    let mut bend = Vec::with_capacity(n_desc);
    for _ in 0..n_desc {
        let u = normalize(gaussian(&mut rng, dims));
        let w = normalize(orthogonalize(gaussian(&mut rng, dims), std::slice::from_ref(&u)));
        base.push(u);
        bend.push(w);
    }

    let c = cfg.pitch_coupling;
    let mut directions = vec![Vec::with_capacity(n_pitch); n_desc];
    for (d, u) in base.iter().enumerate() {
        for _ in 0..n_pitch {
            let v = normalize(gaussian(&mut rng, dims));
            let blend = u.iter().zip(&v).map(|(a, b)| (1.0 - c) * a + c * b).collect();
            directions[d].push(normalize(blend));
        }
    }

    let mut jitter = vec![vec![vec![0.0; n_pitch]; n_mag]; n_desc];
    for per_desc in jitter.iter_mut() {
        for per_mag in per_desc.iter_mut() {
            for j in per_mag.iter_mut() {
                *j = rng.sample(StandardNormal);
            }
        }
    }

    let n = n_desc * n_mag * n_pitch * cfg.samples_per_cell;
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for d in 0..n_desc {
        for (m, &frac) in schema.magnitudes().iter().enumerate() {
            for p in 0..n_pitch {
                let along = cfg.descriptor_offset * (frac + cfg.step_jitter * jitter[d][m][p]);
                let arc = cfg.curvature * frac * (1.0 - frac);
                let center: Vec<f64> = (0..dims)
                    .map(|k| pitch_centers[p][k] + along * directions[d][p][k] + arc * bend[d][k])
                    .collect();
                for _ in 0..cfg.samples_per_cell {
                    for &x in &center {
                        let z: f64 = rng.sample(StandardNormal);
                        data.push(x + cfg.noise_sigma * z);
                    }
                    labels.push(SampleLabel::new(d, m, p));
                }
            }
        }
    }
    LatentDataset::new(Matrix::from_flat(data, n, dims), labels, schema.clone(), "synthetic")
        .map_err(|e| SynthError::Invalid(e.to_string()))
}
