//! IDX-format dataset loader (optionally gzip-compressed files).
//!
//! Big-endian magic 0x00000803 for image files, 0x00000801 for label files;
//! pixels are normalized to [0, 1].

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::bufread::GzDecoder;

use bnn::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug)]
pub enum MnistError {
    Open {
        path: String,
        error: String,
    },
    MagicMismatch {
        path: String,
        expected: u32,
        got: u32,
    },
    Truncated {
        path: String,
        offset: usize,
    },
    CountMismatch {
        images: usize,
        labels: usize,
    },
    BadLabel {
        index: usize,
        label: u8,
    },
}

impl fmt::Display for MnistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MnistError::Open { path, error } => write!(f, "cannot open {path}: {error}"),
            MnistError::MagicMismatch {
                path,
                expected,
                got,
            } => write!(
                f,
                "{path}: bad magic {got:#010x} (expected {expected:#010x})"
            ),
            MnistError::Truncated { path, offset } => {
                write!(f, "{path}: truncated at byte offset {offset}")
            }
            MnistError::CountMismatch { images, labels } => {
                write!(f, "{images} images but {labels} labels")
            }
            MnistError::BadLabel { index, label } => {
                write!(f, "item {index}: label {label} outside 0..=9")
            }
        }
    }
}

impl std::error::Error for MnistError {}

struct IdxReader {
    path: String,
    inner: Box<dyn Read>,
    offset: usize,
}

impl IdxReader {
    fn open(path: &Path) -> Result<Self, MnistError> {
        let file = File::open(path).map_err(|e| MnistError::Open {
            path: path.display().to_string(),
            error: e.to_string(),
        })?;
        let buf = BufReader::new(file);
        let inner: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
            Box::new(GzDecoder::new(buf))
        } else {
            Box::new(buf)
        };
        Ok(IdxReader {
            path: path.display().to_string(),
            inner,
            offset: 0,
        })
    }

    fn read_exact(&mut self, out: &mut [u8]) -> Result<(), MnistError> {
        // read_exact may consume a partial tail before failing; track how far
        // we actually got for the error report
        let mut filled = 0usize;
        while filled < out.len() {
            match self.inner.read(&mut out[filled..]) {
                Ok(0) => {
                    return Err(MnistError::Truncated {
                        path: self.path.clone(),
                        offset: self.offset + filled,
                    })
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(_) => {
                    return Err(MnistError::Truncated {
                        path: self.path.clone(),
                        offset: self.offset + filled,
                    })
                }
            }
        }
        self.offset += out.len();
        Ok(())
    }

    fn read_u32(&mut self) -> Result<u32, MnistError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_be_bytes(b))
    }
}

/// Load an image/label file pair into a dataset with [0,1] pixel values.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset, MnistError> {
    let mut images = IdxReader::open(images_path)?;
    let magic = images.read_u32()?;
    if magic != IMAGES_MAGIC {
        return Err(MnistError::MagicMismatch {
            path: images.path,
            expected: IMAGES_MAGIC,
            got: magic,
        });
    }
    let n_images = images.read_u32()? as usize;
    let rows = images.read_u32()? as usize;
    let cols = images.read_u32()? as usize;
    let dim = rows * cols;
    let mut pixels = vec![0u8; n_images * dim];
    images.read_exact(&mut pixels)?;

    let mut labels = IdxReader::open(labels_path)?;
    let magic = labels.read_u32()?;
    if magic != LABELS_MAGIC {
        return Err(MnistError::MagicMismatch {
            path: labels.path,
            expected: LABELS_MAGIC,
            got: magic,
        });
    }
    let n_labels = labels.read_u32()? as usize;
    if n_labels != n_images {
        return Err(MnistError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let mut label_bytes = vec![0u8; n_labels];
    labels.read_exact(&mut label_bytes)?;
    if let Some((index, &label)) = label_bytes.iter().enumerate().find(|&(_, &l)| l > 9) {
        return Err(MnistError::BadLabel { index, label });
    }

    let features: Vec<f32> = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    Ok(Dataset::new(features, label_bytes, dim, 10).expect("validated above"))
}

/// Standard file names inside a dataset directory, .gz or raw.
pub fn load_mnist_dir(dir: &Path, train: bool) -> Result<Dataset, MnistError> {
    let prefix = if train { "train" } else { "t10k" };
    let pick = |stem: String| {
        let gz = dir.join(format!("{stem}.gz"));
        if gz.exists() {
            gz
        } else {
            dir.join(stem)
        }
    };
    load_mnist(
        &pick(format!("{prefix}-images-idx3-ubyte")),
        &pick(format!("{prefix}-labels-idx1-ubyte")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_images(path: &Path, n: u32, rows: u32, cols: u32, data: &[u8]) {
        let mut f = File::create(path).unwrap();
        f.write_all(&IMAGES_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&n.to_be_bytes()).unwrap();
        f.write_all(&rows.to_be_bytes()).unwrap();
        f.write_all(&cols.to_be_bytes()).unwrap();
        f.write_all(data).unwrap();
    }

    fn write_labels(path: &Path, labels: &[u8]) {
        let mut f = File::create(path).unwrap();
        f.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
        f.write_all(labels).unwrap();
    }

    #[test]
    fn loads_synthetic_idx_pair() {
        let dir = std::env::temp_dir().join("bnn-rram-mnist-ok");
        std::fs::create_dir_all(&dir).unwrap();
        let img = dir.join("img.idx");
        let lab = dir.join("lab.idx");
        write_images(
            &img,
            3,
            2,
            2,
            &[0, 128, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90],
        );
        write_labels(&lab, &[1, 0, 9]);
        let d = load_mnist(&img, &lab).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.label(2), 9);
        assert!((d.feature(0)[3] - 10.0 / 255.0).abs() < 1e-7);
        assert!((d.feature(0)[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn magic_and_truncation_and_count_errors() {
        let dir = std::env::temp_dir().join("bnn-rram-mnist-bad");
        std::fs::create_dir_all(&dir).unwrap();

        // wrong magic
        let img = dir.join("bad-magic.idx");
        let mut f = File::create(&img).unwrap();
        f.write_all(&0xdeadbeefu32.to_be_bytes()).unwrap();
        f.write_all(&[0; 12]).unwrap();
        drop(f);
        let lab = dir.join("labels.idx");
        write_labels(&lab, &[0]);
        assert!(matches!(
            load_mnist(&img, &lab),
            Err(MnistError::MagicMismatch {
                got: 0xdeadbeef,
                ..
            })
        ));

        // truncated pixel payload: header says 2 images of 2x2 but only 5
        // bytes follow; the error carries the byte offset where data ended
        let img = dir.join("trunc.idx");
        write_images(&img, 2, 2, 2, &[1, 2, 3, 4, 5]);
        match load_mnist(&img, &lab) {
            Err(MnistError::Truncated { offset, .. }) => assert_eq!(offset, 16 + 5),
            other => panic!("expected truncation, got {other:?}"),
        }

        // image/label count mismatch names both counts
        let img = dir.join("count.idx");
        write_images(&img, 2, 2, 2, &[0; 8]);
        match load_mnist(&img, &lab) {
            Err(MnistError::CountMismatch {
                images: 2,
                labels: 1,
            }) => {}
            other => panic!("expected count mismatch, got {other:?}"),
        }

        // label outside 0..=9
        let lab_bad = dir.join("label-bad.idx");
        write_labels(&lab_bad, &[3, 11]);
        let img2 = dir.join("img2.idx");
        write_images(&img2, 2, 2, 2, &[0; 8]);
        assert!(matches!(
            load_mnist(&img2, &lab_bad),
            Err(MnistError::BadLabel {
                index: 1,
                label: 11
            })
        ));
    }

    #[test]
    fn loads_real_mnist_when_vendored() {
        let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist"));
        if !dir.exists() {
            eprintln!("skipping: {dir:?} not present");
            return;
        }
        let train = load_mnist_dir(dir, true).unwrap();
        let test = load_mnist_dir(dir, false).unwrap();
        assert_eq!(train.len(), 60_000);
        assert_eq!(test.len(), 10_000);
        assert_eq!(train.dim(), 28 * 28);
    }
}
