//! Increment batches on a uniform time grid, model dispatch and binary replay.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::decomposition::{EpsilonRule, JumpDecomposition, TruncationInfo};
use super::subordinator::{fill_subordinated_bm, sample_subordinator, standard_stable};
use crate::error::{ensure, Error, Result};
use crate::models::{LevyModel, ModelKind, SubordinatorSpec};
use crate::rng::RngStream;

/// `n` increments of a `d`-dimensional process over steps of length `dt`,
/// stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementBatch {
    pub model: LevyModel,
    pub dt: f64,
    pub dim: usize,
    pub values: Vec<f64>,
    /// Present only for decomposition samplers.
    pub truncation: Option<TruncationInfo>,
}

impl IncrementBatch {
    pub fn new(
        model: LevyModel,
        dt: f64,
        values: Vec<f64>,
        truncation: Option<TruncationInfo>,
    ) -> Result<Self> {
        let dim = model.dim();
        ensure(dt > 0.0 && dt.is_finite(), "dt", dt, "(0, ∞)")?;
        if values.is_empty() || values.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow { step: i / dim });
        }
        Ok(Self {
            model,
            dt,
            dim,
            values,
            truncation,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `L_{t_k}` for `k = 0..=n`, starting from zero.
    pub fn cumulative(&self) -> Vec<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(self.rows() + 1);
        out.push(acc.clone());
        for i in 0..self.rows() {
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += x;
            }
            out.push(acc.clone());
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Method {
    Brownian,
    Stable1d { alpha: f64 },
    Subordinated(SubordinatorSpec),
    Decomposition(JumpDecomposition),
}

/// Reusable sampler of increments of one model over a fixed step `dt`.
///
/// Exact samplers are used for the stable, Brownian and subordinated families;
/// tempered, truncated and layered models go through the jump decomposition.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    model: LevyModel,
    dt: f64,
    method: Method,
}

impl IncrementSampler {
    pub fn new(model: &LevyModel, dt: f64) -> Result<Self> {
        Self::with_rule(model, dt, EpsilonRule::default())
    }

    pub fn with_rule(model: &LevyModel, dt: f64, rule: EpsilonRule) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), "dt", dt, "(0, ∞)")?;
        let d = model.dim();
        let method = match *model.kind() {
            ModelKind::BrownianMotion => Method::Brownian,
            ModelKind::IsotropicStable { alpha } if alpha == 2.0 => Method::Brownian,
            ModelKind::IsotropicStable { alpha } if d == 1 => Method::Stable1d { alpha },
            ModelKind::TemperedStable { .. }
            | ModelKind::TruncatedStable { .. }
            | ModelKind::LayeredStable { .. } => {
                Method::Decomposition(JumpDecomposition::for_step(model, dt, rule)?)
            }
            _ => match model.subordinator() {
                Some(sub) => Method::Subordinated(sub),
                None => {
                    return Err(Error::UnsupportedModel(format!(
                        "no increment sampler for {model}"
                    )))
                }
            },
        };
        Ok(Self {
            model: *model,
            dt,
            method,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn truncation(&self) -> Option<TruncationInfo> {
        match &self.method {
            Method::Decomposition(dec) => Some(dec.info()),
            _ => None,
        }
    }

    /// Writes one increment into `out` (length `d`).
    pub fn fill(&self, out: &mut [f64], rng: &mut RngStream) -> Result<()> {
        let dt = self.dt;
        match &self.method {
            Method::Brownian => fill_subordinated_bm(2.0 * dt, out, rng),
            Method::Stable1d { alpha } => out[0] = dt.powf(1.0 / alpha) * standard_stable(*alpha, rng),
            Method::Subordinated(sub) => {
                let s = sample_subordinator(sub, dt, rng)?;
                fill_subordinated_bm(2.0 * s, out, rng);
            }
            Method::Decomposition(dec) => out[0] = dec.draw(dt, rng)?.0,
        }
        Ok(())
    }

    /// `n` consecutive increments.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<IncrementBatch> {
        ensure(n >= 1, "n", n as f64, "≥ 1")?;
        let d = self.model.dim();
        let mut values = vec![0.0; n * d];
        for row in values.chunks_mut(d) {
            self.fill(row, rng)?;
        }
        IncrementBatch::new(self.model, self.dt, values, self.truncation())
    }
}

/// `n` i.i.d. increments of `model` over `dt = T/n`.
pub fn increments(model: &LevyModel, t: f64, n: usize, rng: &mut RngStream) -> Result<IncrementBatch> {
    ensure(t > 0.0 && t.is_finite(), "T", t, "(0, ∞)")?;
    ensure(n >= 1, "n", n as f64, "≥ 1")?;
    IncrementSampler::new(model, t / n as f64)?.sample(n, rng)
}

const MAGIC: &[u8; 8] = b"LVYINC01";

/// Writes a batch with a replay header: magic, model fingerprint, seed,
/// stream id, row count, dimension and `dt`, then the values as
/// little-endian `f64`, row-major.
pub fn write_batch(
    batch: &IncrementBatch,
    seed: u64,
    stream_id: u64,
    mut w: impl Write,
) -> Result<()> {
    w.write_all(MAGIC)?;
    for word in [
        batch.model.fingerprint(),
        seed,
        stream_id,
        batch.rows() as u64,
        batch.dim as u64,
    ] {
        w.write_all(&word.to_le_bytes())?;
    }
    w.write_all(&batch.dt.to_le_bytes())?;
    for v in &batch.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Header of a dumped batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchHeader {
    pub fingerprint: u64,
    pub seed: u64,
    pub stream_id: u64,
}

/// Reads a batch written by [`write_batch`]; the model must match the
/// recorded fingerprint.
pub fn read_batch(model: &LevyModel, mut r: impl Read) -> Result<(IncrementBatch, BatchHeader)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not an increment dump".into()));
    }
    let mut word = || -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    };
    let fingerprint = word()?;
    let seed = word()?;
    let stream_id = word()?;
    let n = word()? as usize;
    let d = word()? as usize;
    let dt = f64::from_bits(word()?);
    if fingerprint != model.fingerprint() {
        return Err(Error::Io(format!(
            "dump was written for model {fingerprint:016x}, not {model}"
        )));
    }
    if d != model.dim() {
        return Err(Error::Shape(format!("dump has dimension {d}, model {}", model.dim())));
    }
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        values.push(f64::from_bits(word()?));
    }
    let batch = IncrementBatch::new(*model, dt, values, None)?;
    Ok((
        batch,
        BatchHeader {
            fingerprint,
            seed,
            stream_id,
        },
    ))
}
