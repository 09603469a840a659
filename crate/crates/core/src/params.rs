//! Flat parameter vectors, deterministic random streams and weight initialization.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Deref;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_finite, Error, Result};

/// A flat vector of model weights.
///
/// Every optimizer, objective and genetic operator in the crate exchanges
/// weights through this type. The length is fixed by the model shape and all
/// entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension(
                "parameter vector must have at least one entry".into(),
            ));
        }
        check_finite("parameter vector", &values)?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    /// Wraps values the caller has already checked.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Mutable access for in-place updates. Callers are responsible for keeping
    /// the entries finite.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Serializes as a little-endian `u64` length followed by little-endian
    /// IEEE-754 doubles.
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for v in &self.0 {
            writer.write_all(&v.to_le_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let mut word = [0u8; 8];
        read_word(&mut reader, &mut word, 0)?;
        let len = u64::from_le_bytes(word);
        if len == 0 {
            return Err(Error::Format {
                offset: 0,
                message: "checkpoint declares an empty parameter vector".into(),
            });
        }
        let mut values = Vec::new();
        for i in 0..len {
            read_word(&mut reader, &mut word, 8 * (i + 1))?;
            values.push(f64::from_le_bytes(word));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format {
                offset: 8 * (index as u64 + 1),
                message: "non-finite weight in checkpoint".into(),
            });
        }
        Ok(Self(values))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_word<R: Read>(reader: &mut R, word: &mut [u8; 8], offset: u64) -> Result<()> {
    reader.read_exact(word).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format {
            offset,
            message: "truncated checkpoint".into(),
        },
        _ => Error::Io(e),
    })
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Deterministic random stream backed by ChaCha8.
///
/// A stream is identified by a 64-bit seed and an optional path of tags; the
/// tags select one of ChaCha's independent 64-bit stream ids. Two streams with
/// the same seed and tags yield identical draws on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent sub-stream for a `(seed, tags...)` path, e.g.
    /// `(master, [INIT, model_index])`.
    pub fn derive(seed: u64, tags: &[u64]) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(fold_tags(tags));
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fold_tags(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Which initialization distribution a model should use; models translate
/// this into a concrete [`InitScheme`] using their own layer shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    StandardNormal,
    #[default]
    FanInScaled,
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "standard-normal" | "paper-normal" => Ok(InitKind::StandardNormal),
            "fan-in" | "fan-in-scaled" => Ok(InitKind::FanInScaled),
            other => Err(Error::Config(format!("unknown init scheme '{other}'"))),
        }
    }
}

/// Weight initialization distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme<'a> {
    /// Every entry from N(0, 1).
    StandardNormal,
    /// Contiguous `(len, fan_in)` blocks; entries of a block are drawn from
    /// N(0, 1/fan_in). Block lengths must sum to the requested dimension.
    FanInScaled { blocks: &'a [(usize, usize)] },
}

pub fn init_params(dim: usize, scheme: InitScheme<'_>, rng: &mut RngStream) -> Result<ParamVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "cannot initialize a zero-length parameter vector".into(),
        ));
    }
    let values = match scheme {
        InitScheme::StandardNormal => (0..dim).map(|_| rng.standard_normal()).collect(),
        InitScheme::FanInScaled { blocks } => {
            let total: usize = blocks.iter().map(|&(len, _)| len).sum();
            if total != dim {
                return Err(Error::InvalidDimension(format!(
                    "fan-in blocks cover {total} entries, expected {dim}"
                )));
            }
            let mut values = Vec::with_capacity(dim);
            for &(len, fan_in) in blocks {
                if fan_in == 0 {
                    return Err(Error::InvalidDimension("fan-in must be positive".into()));
                }
                let std = 1.0 / (fan_in as f64).sqrt();
                values.extend((0..len).map(|_| std * rng.standard_normal()));
            }
            values
        }
    };
    Ok(ParamVector::from_vec_unchecked(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_std(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let mut rng = RngStream::new(1);
        assert!(matches!(
            init_params(0, InitScheme::StandardNormal, &mut rng),
            Err(Error::InvalidDimension(_))
        ));
        assert!(ParamVector::new(vec![]).is_err());
        assert!(ParamVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn same_seed_same_values() {
        let blocks = [(3, 2)];
        for scheme in [InitScheme::StandardNormal, InitScheme::FanInScaled { blocks: &blocks }] {
            let a = init_params(3, scheme, &mut RngStream::new(42)).unwrap();
            let b = init_params(3, scheme, &mut RngStream::new(42)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn standard_normal_moments() {
        let w = init_params(10_000, InitScheme::StandardNormal, &mut RngStream::new(7)).unwrap();
        let (mean, std) = mean_std(&w);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((std - 1.0).abs() < 0.05, "std {std}");
    }

    #[test]
    fn fan_in_scaled_std() {
        let mut rng = RngStream::new(11);
        let blocks = [(1, 4)];
        let draws: Vec<f64> = (0..10_000)
            .map(|_| init_params(1, InitScheme::FanInScaled { blocks: &blocks }, &mut rng).unwrap()[0])
            .collect();
        assert!(draws.iter().all(|v| v.is_finite()));
        let (_, std) = mean_std(&draws);
        assert!((std - 0.5).abs() < 0.05, "std {std}");
    }

    #[test]
    fn fan_in_blocks_must_cover_dim() {
        let blocks = [(2, 3)];
        let err = init_params(3, InitScheme::FanInScaled { blocks: &blocks }, &mut RngStream::new(0));
        assert!(matches!(err, Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn derived_streams_differ_and_repeat() {
        let a: Vec<u64> = {
            let mut r = RngStream::derive(5, &[1, 0]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngStream::derive(5, &[1, 1]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let a2: Vec<u64> = {
            let mut r = RngStream::derive(5, &[1, 0]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn checkpoint_layout() {
        let w = ParamVector::new(vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        w.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &1.5f64.to_le_bytes());
        assert_eq!(ParamVector::read_from(&buf[..]).unwrap(), w);

        let err = ParamVector::read_from(&buf[..20]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 16, .. }), "{err}");
    }

    proptest::proptest! {
        #[test]
        fn checkpoint_roundtrip(values in proptest::collection::vec(-1e300f64..1e300, 1..64)) {
            let w = ParamVector::new(values).unwrap();
            let mut buf = Vec::new();
            w.write_to(&mut buf).unwrap();
            proptest::prop_assert_eq!(ParamVector::read_from(&buf[..]).unwrap(), w);
        }
    }
}
