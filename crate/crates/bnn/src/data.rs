//! Labeled datasets with [0,1]-normalized features, plus a synthetic
//! two-blob toy problem for fast training tests.

use rram::rng::Stream;

use crate::error::{BnnError, Result};

#[derive(Clone, Debug)]
pub struct Dataset {
    features: Vec<f32>,
    labels: Vec<u8>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f32>, labels: Vec<u8>, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(BnnError::InvalidParameter("empty dataset shape".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(BnnError::LengthMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= classes) {
            return Err(BnnError::InvalidParameter(format!(
                "label {l} outside {classes} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    /// First `n` items as a new dataset (for slice experiments).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            features: self.features[..n * self.dim].to_vec(),
            labels: self.labels[..n].to_vec(),
            dim: self.dim,
            classes: self.classes,
        }
    }
}

/// Two Gaussian blobs in `dim` dimensions mapped into [0,1]: class 0 centers
/// low, class 1 centers high, separable after binarization at 0.5 by
/// construction.
pub fn two_blobs(per_class: usize, dim: usize, separation: f32, stream: &mut Stream) -> Dataset {
    let mut features = Vec::with_capacity(2 * per_class * dim);
    let mut labels = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let class = (i % 2) as u8;
        let center = if class == 0 {
            0.5 - separation / 2.0
        } else {
            0.5 + separation / 2.0
        };
        for _ in 0..dim {
            let v = center + 0.18 * stream.normal() as f32;
            features.push(v.clamp(0.0, 1.0));
        }
        labels.push(class);
    }
    Dataset::new(features, labels, dim, 2).expect("toy dataset is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rram::rng::StreamKey;

    #[test]
    fn validation_catches_shape_and_label_errors() {
        assert!(Dataset::new(vec![0.0; 9], vec![0, 1], 4, 2).is_err());
        assert!(Dataset::new(vec![0.0; 8], vec![0, 3], 4, 2).is_err());
        assert!(Dataset::new(vec![0.0; 8], vec![0, 1], 4, 2).is_ok());
    }

    #[test]
    fn blobs_are_balanced_and_in_range() {
        let mut s = StreamKey::new(1).stream("blobs", &[]);
        let d = two_blobs(50, 16, 0.6, &mut s);
        assert_eq!(d.len(), 100);
        assert_eq!(d.labels.iter().filter(|&&l| l == 1).count(), 50);
        assert!(d.features.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
