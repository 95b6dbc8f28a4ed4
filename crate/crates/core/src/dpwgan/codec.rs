use serde::{Deserialize, Serialize};

use super::{GanError, Result};
use crate::tabular::{ColumnKind, Dataset, Provenance, Schema};

/// Where one schema column lives in the encoded vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Segment {
    /// Min-max scaled to [-1, 1].
    Numeric { offset: usize, min: f64, max: f64 },
    /// One-hot group; the label is a two-way group.
    OneHot { offset: usize, size: usize },
}

/// Mixed-type row codec between datasets and fixed-width real vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedCodec {
    schema: Schema,
    segments: Vec<Segment>,
    width: usize,
}

impl MixedCodec {
    /// Numeric ranges come from `d`; group sizes come from the schema.
    pub fn fit(d: &Dataset) -> Self {
        let mut offset = 0;
        let mut segments = Vec::with_capacity(d.schema().len());
        for (j, c) in d.schema().columns().iter().enumerate() {
            let seg = match c.kind {
                ColumnKind::Numeric => {
                    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                    for r in d.rows() {
                        min = min.min(r[j]);
                        max = max.max(r[j]);
                    }
                    if !min.is_finite() {
                        (min, max) = (0.0, 0.0);
                    }
                    offset += 1;
                    Segment::Numeric { offset: offset - 1, min, max }
                }
                ColumnKind::Categorical => {
                    let size = c.categories.len().max(1);
                    offset += size;
                    Segment::OneHot { offset: offset - size, size }
                }
                ColumnKind::BinaryLabel => {
                    offset += 2;
                    Segment::OneHot { offset: offset - 2, size: 2 }
                }
            };
            segments.push(seg);
        }
        Self {
            schema: d.schema().clone(),
            segments,
            width: offset,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn encode_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width];
        for (j, (seg, &v)) in self.segments.iter().zip(row).enumerate() {
            match *seg {
                Segment::Numeric { offset, min, max } => {
                    out[offset] = if max > min { 2.0 * (v - min) / (max - min) - 1.0 } else { -1.0 };
                }
                Segment::OneHot { offset, size } => {
                    let code = v as usize;
                    if v < 0.0 || v.fract() != 0.0 || code >= size {
                        return Err(GanError::OutOfSchema {
                            column: self.schema.columns()[j].name.clone(),
                            value: v,
                        });
                    }
                    out[offset + code] = 1.0;
                }
            }
        }
        Ok(out)
    }

    pub fn encode(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        if !self.schema.is_compatible(d.schema()) {
            return Err(GanError::SchemaMismatch);
        }
        d.rows().iter().map(|r| self.encode_row(r)).collect()
    }

    /// Total on any real vector of the right width: groups decode by argmax
    /// (first maximum wins), numerics are inverse-scaled then clamped.
    pub fn decode_row(&self, v: &[f64]) -> Vec<f64> {
        self.segments
            .iter()
            .map(|seg| match *seg {
                Segment::Numeric { offset, min, max } => {
                    let x = v[offset];
                    let x = if x.is_nan() { -1.0 } else { x };
                    ((x + 1.0) / 2.0 * (max - min) + min).clamp(min, max)
                }
                Segment::OneHot { offset, size } => {
                    let group = &v[offset..offset + size];
                    let mut best = 0;
                    for (k, &g) in group.iter().enumerate() {
                        if g > group[best] {
                            best = k;
                        }
                    }
                    best as f64
                }
            })
            .collect()
    }

    pub fn decode(&self, m: &[Vec<f64>], provenance: Provenance) -> Result<Dataset> {
        if let Some(r) = m.iter().find(|r| r.len() != self.width) {
            return Err(GanError::WidthMismatch {
                expected: self.width,
                found: r.len(),
            });
        }
        let rows = m.iter().map(|r| self.decode_row(r)).collect();
        Ok(Dataset::new(self.schema.clone(), rows, provenance)?)
    }

    /// Generator output nonlinearity: tanh on numeric coordinates, softmax
    /// within each one-hot group.
    pub fn activate(&self, logits: &[f64]) -> Vec<f64> {
        let mut out = logits.to_vec();
        for seg in &self.segments {
            match *seg {
                Segment::Numeric { offset, .. } => out[offset] = logits[offset].tanh(),
                Segment::OneHot { offset, size } => {
                    let g = &logits[offset..offset + size];
                    let m = g.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let exps: Vec<f64> = g.iter().map(|x| (x - m).exp()).collect();
                    let z: f64 = exps.iter().sum();
                    for (k, e) in exps.into_iter().enumerate() {
                        out[offset + k] = e / z;
                    }
                }
            }
        }
        out
    }

    /// Pulls a gradient with respect to [`activate`](Self::activate)'s
    /// output back to its input, given that output.
    pub fn activate_backward(&self, activated: &[f64], grad: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grad.len()];
        for seg in &self.segments {
            match *seg {
                Segment::Numeric { offset, .. } => {
                    let t = activated[offset];
                    out[offset] = grad[offset] * (1.0 - t * t);
                }
                Segment::OneHot { offset, size } => {
                    let s = &activated[offset..offset + size];
                    let g = &grad[offset..offset + size];
                    let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
                    for k in 0..size {
                        out[offset + k] = s[k] * (g[k] - dot);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    fn data() -> Dataset {
        let schema = Schema::new(vec![
            Column::numeric("x"),
            Column::categorical("c", vec!["a".into(), "b".into(), "c".into(), "d".into()]),
            Column::label("y"),
        ])
        .unwrap();
        Dataset::new(
            schema,
            vec![vec![2.0, 2.0, 1.0], vec![-1.0, 0.0, 0.0], vec![0.5, 3.0, 1.0]],
            Provenance::Real,
        )
        .unwrap()
    }

    #[test]
    fn encoding_layout() {
        let d = data();
        let codec = MixedCodec::fit(&d);
        assert_eq!(codec.width(), 1 + 4 + 2);
        let m = codec.encode(&d).unwrap();
        assert_eq!(m[0], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m[1][0], -1.0);
    }

    #[test]
    fn round_trip() {
        let d = data();
        let codec = MixedCodec::fit(&d);
        let back = codec.decode(&codec.encode(&d).unwrap(), Provenance::Real).unwrap();
        for (a, b) in back.rows().iter().zip(d.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn decode_argmax_and_clamp() {
        let schema = Schema::new(vec![
            Column::numeric("x"),
            Column::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
            Column::label("y"),
        ])
        .unwrap();
        let d = Dataset::new(schema, vec![vec![0.0, 0.0, 0.0], vec![10.0, 1.0, 1.0]], Provenance::Real)
            .unwrap();
        let codec = MixedCodec::fit(&d);
        let row = codec.decode_row(&[1.3, 0.2, 0.9, 0.1, 0.7, 0.3]);
        assert_eq!(row, vec![10.0, 1.0, 0.0]);
        let row = codec.decode_row(&[-5.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(row[0], 0.0);
    }

    #[test]
    fn out_of_schema_category() {
        let d = data();
        let codec = MixedCodec::fit(&d);
        assert!(matches!(
            codec.encode_row(&[0.0, 4.0, 0.0]),
            Err(GanError::OutOfSchema { .. })
        ));
    }

    #[test]
    fn activation_gradient() {
        let codec = MixedCodec::fit(&data());
        let logits = [0.3, -0.2, 0.5, 1.2, -1.0, 0.4, -0.4];
        let weights = [0.7, -1.1, 0.2, 0.9, 1.5, -0.3, 0.8];
        let f = |l: &[f64]| codec.activate(l).iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
        let act = codec.activate(&logits);
        let g = codec.activate_backward(&act, &weights);
        for i in 0..logits.len() {
            let mut p = logits;
            p[i] += 1e-6;
            let up = f(&p);
            p[i] -= 2e-6;
            let fd = (up - f(&p)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7);
        }
        let group: f64 = act[1..5].iter().sum();
        assert!((group - 1.0).abs() < 1e-12);
    }
}
