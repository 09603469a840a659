//! IDX binary format (MNIST): big-endian magic, dimension sizes, raw bytes.
//! Gzip-compressed files are detected by their header and inflated.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::Dataset;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset: offset as u64,
            message: "truncated IDX header".into(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = be_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic number {magic:#010x}, expected {expected:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    bytes.get(header..header + len).ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        message: format!("truncated IDX payload: expected {len} bytes after the header"),
    })
}

/// Decodes an IDX3 image file into `(images, rows * cols)` with pixels scaled
/// to `[0, 1]`.
pub fn read_idx_images(bytes: &[u8]) -> Result<(Vec<f64>, usize)> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let dim = rows * cols;
    let data = payload(bytes, 16, count * dim)?;
    Ok((data.iter().map(|&p| f64::from(p) / 255.0).collect(), dim))
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let data = payload(bytes, 8, count)?;
    if let Some(pos) = data.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            offset: 8 + pos as u64,
            message: format!("label {} outside 0..=9", data[pos]),
        });
    }
    Ok(data.iter().map(|&l| l as usize).collect())
}

pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (pixels, dim) = read_idx_images(&read_maybe_gz(images_path.as_ref())?)?;
    let labels = read_idx_labels(&read_maybe_gz(labels_path.as_ref())?)?;
    if dim == 0 || pixels.len() / dim != labels.len() {
        return Err(Error::Format {
            offset: 4,
            message: format!(
                "image file holds {} items but label file holds {}",
                pixels.len().checked_div(dim).unwrap_or(0),
                labels.len()
            ),
        });
    }
    let names = (0..10).map(|d| d.to_string()).collect();
    Dataset::new(pixels, dim, labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn images_fixture() -> Vec<u8> {
        let mut b = Vec::new();
        for word in [IMAGES_MAGIC, 2, 2, 2] {
            b.extend_from_slice(&word.to_be_bytes());
        }
        b.extend_from_slice(&[0, 51, 255, 128, 1, 2, 3, 254]);
        b
    }

    fn labels_fixture() -> Vec<u8> {
        let mut b = Vec::new();
        for word in [LABELS_MAGIC, 2] {
            b.extend_from_slice(&word.to_be_bytes());
        }
        b.extend_from_slice(&[7, 0]);
        b
    }

    #[test]
    fn hand_built_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img.idx");
        let lab = dir.path().join("lab.idx.gz");
        fs::write(&img, images_fixture()).unwrap();
        let mut gz = GzEncoder::new(Vec::new(), Compression::default());
        gz.write_all(&labels_fixture()).unwrap();
        fs::write(&lab, gz.finish().unwrap()).unwrap();

        let ds = load_mnist_idx(&img, &lab).unwrap();
        assert_eq!((ds.len(), ds.cols(), ds.num_classes()), (2, 4, 10));
        let expected: Vec<f64> = [0u8, 51, 255, 128, 1, 2, 3, 254].iter().map(|&p| p as f64 / 255.0).collect();
        assert_eq!(ds.features(), &expected[..]);
        assert_eq!(ds.labels(), &[7, 0]);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bad = images_fixture();
        bad[3] = 0x01;
        assert!(matches!(read_idx_images(&bad), Err(Error::Format { offset: 0, .. })));

        let short = &images_fixture()[..20];
        assert!(matches!(read_idx_images(short), Err(Error::Format { offset: 20, .. })));
        assert!(matches!(read_idx_labels(&labels_fixture()[..6]), Err(Error::Format { offset: 4, .. })));

        let mut bad_label = labels_fixture();
        bad_label[9] = 10;
        assert!(matches!(read_idx_labels(&bad_label), Err(Error::Format { offset: 9, .. })));
    }
}
