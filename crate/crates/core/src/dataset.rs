//! Labeled `{(location, channel)}` databases.
//!
//! # `LBBD` binary layout (little-endian)
//!
//! | field            | type                                   |
//! |------------------|----------------------------------------|
//! | magic            | `b"LBBD"`                              |
//! | format version   | `u32` (= 1)                            |
//! | A (antennas)     | `u32`                                  |
//! | D (location dim) | `u32`                                  |
//! | N (records)      | `u64`                                  |
//! | carrier (Hz)     | `f64`                                  |
//! | N records        | `D × f64` location, then `2A × f32` channel: all real parts, then all imaginary parts |
//! | trailer (opt.)   | `b"META"`, `u32` byte length, UTF-8 JSON [`Provenance`] |
//!
//! Readers accept files without the trailer; the array spacing then defaults
//! to half a wavelength.

use std::fs;
use std::path::Path as FsPath;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::scene::geometry::Point;
use crate::scene::{sample_users, synthesize_channel, ChannelVector, Location, Scene, Tracer};

pub const DATASET_MAGIC: &[u8; 4] = b"LBBD";
pub const DATASET_FORMAT_VERSION: u32 = 1;
const TRAILER_MAGIC: &[u8; 4] = b"META";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8;

/// Base-station placement a dataset was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsPose {
    pub position: Point,
    pub height: f64,
    /// Height assumed for 2D user locations.
    pub user_height: f64,
}

impl BsPose {
    pub fn of_scene(scene: &Scene) -> Self {
        BsPose {
            position: scene.bs_position,
            height: scene.bs_height,
            user_height: scene.user_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
    pub element_spacing: f64,
    pub base_station: Option<BsPose>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub location: Location,
    pub channel: ChannelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub array_cfg: ArrayConfig,
    pub dim: usize,
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl LabeledDataset {
    /// Checks shapes and rounds channels to the on-disk `f32` precision so
    /// that save/load is the identity.
    pub fn new(array_cfg: ArrayConfig, records: Vec<Record>, provenance: Provenance) -> Result<Self> {
        array_cfg.validate()?;
        let Some(first) = records.first() else {
            return Err(Error::InvalidConfig("a dataset needs at least one record".into()));
        };
        let dim = first.location.dim();
        if !(dim == 2 || dim == 3) {
            return Err(Error::DimensionMismatch(format!("location dimension {dim} not in {{2, 3}}")));
        }
        let a = array_cfg.num_antennas();
        let records = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                if r.location.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "record {i}: location has {} coordinates, expected {dim}",
                        r.location.dim()
                    )));
                }
                if r.channel.len() != a {
                    return Err(Error::DimensionMismatch(format!(
                        "record {i}: channel has {} entries, expected {a}",
                        r.channel.len()
                    )));
                }
                Ok(Record { location: r.location, channel: r.channel.quantized() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset { array_cfg, dim, records, provenance })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn zero_norm_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.records[i].channel.is_zero()).collect()
    }

    /// Indices of all records with a nonzero channel.
    pub fn usable_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.records[i].channel.is_zero()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let a = self.array_cfg.num_antennas();
        let rec_len = 8 * self.dim + 8 * a;
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * rec_len + 256);
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(a as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.array_cfg.carrier_frequency.to_le_bytes());
        for r in &self.records {
            for x in &r.location.0 {
                out.extend_from_slice(&x.to_le_bytes());
            }
            for z in &r.channel.0 {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
            }
            for z in &r.channel.0 {
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
        let meta = serde_json::to_vec(&self.provenance).expect("provenance serializes");
        out.extend_from_slice(TRAILER_MAGIC);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader::new(bytes);
        if bytes.len() < 4 || &bytes[..4] != DATASET_MAGIC {
            return Err(Error::Format("missing LBBD magic".into()));
        }
        rd.skip(4);
        let version = rd.u32()?;
        if version != DATASET_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported dataset format version {version}")));
        }
        let a = rd.u32()? as usize;
        let dim = rd.u32()? as usize;
        let n = rd.u64()? as usize;
        let carrier = rd.f64()?;
        if !(dim == 2 || dim == 3) {
            return Err(Error::Format(format!("location dimension {dim} not in {{2, 3}}")));
        }
        let side = (a as f64).sqrt().round() as u32;
        if a == 0 || (side as usize) * (side as usize) != a {
            return Err(Error::Format(format!("antenna count {a} is not a nonzero square")));
        }
        if n == 0 {
            return Err(Error::Format("dataset holds no records".into()));
        }
        let rec_len = 8 * dim + 8 * a;
        let need = n
            .checked_mul(rec_len)
            .ok_or_else(|| Error::Format("record count overflows".into()))?;
        if rd.remaining() < need {
            return Err(Error::DimensionMismatch(format!(
                "header announces {n} records ({need} bytes) but only {} bytes follow",
                rd.remaining()
            )));
        }
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let loc = (0..dim).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
            let re = (0..a).map(|_| rd.f32()).collect::<Result<Vec<_>>>()?;
            let im = (0..a).map(|_| rd.f32()).collect::<Result<Vec<_>>>()?;
            let channel = re
                .iter()
                .zip(&im)
                .map(|(&r, &i)| Complex64::new(r as f64, i as f64))
                .collect();
            records.push(Record { location: Location(loc), channel: ChannelVector(channel) });
        }
        let half_wave = ArrayConfig::half_wavelength(side, carrier);
        let provenance = if rd.remaining() == 0 {
            Provenance {
                source: "unknown".into(),
                seed: None,
                element_spacing: half_wave.element_spacing,
                base_station: None,
            }
        } else {
            if rd.remaining() < 8 {
                return Err(Error::DimensionMismatch("truncated metadata trailer".into()));
            }
            if rd.take(4)? != TRAILER_MAGIC {
                return Err(Error::Format("unexpected bytes after the records".into()));
            }
            let len = rd.u32()? as usize;
            if rd.remaining() != len {
                return Err(Error::DimensionMismatch(format!(
                    "metadata trailer announces {len} bytes, {} present",
                    rd.remaining()
                )));
            }
            serde_json::from_slice(rd.take(len)?)
                .map_err(|e| Error::Format(format!("bad metadata trailer: {e}")))?
        };
        let array_cfg = ArrayConfig { element_spacing: provenance.element_spacing, ..half_wave };
        array_cfg.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(LabeledDataset { array_cfg, dim, records, provenance })
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        LabeledDataset::from_bytes(&fs::read(path)?)
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn skip(&mut self, n: usize) {
        self.pos += n;
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::DimensionMismatch(format!(
                "file truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub(crate) use Reader as ByteReader;

/// Samples `n` users in `scene`, traces and synthesizes their channels.
/// Deterministic in `seed` and independent of the thread count.
pub fn build_dataset(scene: &Scene, array_cfg: &ArrayConfig, n: usize, seed: u64) -> Result<LabeledDataset> {
    array_cfg.validate()?;
    scene.validate()?;
    let users = sample_users(scene, n, seed)?;
    let tracer = Tracer::new(scene, array_cfg);
    let records = users
        .into_par_iter()
        .map(|location| {
            let paths = tracer.trace(&location)?;
            let channel = synthesize_channel(&paths, array_cfg);
            Ok(Record { location, channel })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(
        *array_cfg,
        records,
        Provenance {
            source: "scene".into(),
            seed: Some(seed),
            element_spacing: array_cfg.element_spacing,
            base_station: Some(BsPose::of_scene(scene)),
        },
    )
}

/// Disjoint train/test partition of the records with nonzero channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Zero-norm records, left out of both sides.
    pub excluded_indices: Vec<usize>,
}

impl Split {
    /// Every usable record goes to training.
    pub fn all_train(ds: &LabeledDataset) -> Self {
        Split {
            train_indices: ds.usable_indices(),
            test_indices: Vec::new(),
            excluded_indices: ds.zero_norm_indices(),
        }
    }
}

pub fn split(ds: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig("test fraction must lie in (0, 1)".into()));
    }
    let mut usable = ds.usable_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    usable.shuffle(&mut rng);
    let n_test = ((usable.len() as f64) * test_fraction).round() as usize;
    let mut test_indices = usable[..n_test].to_vec();
    let mut train_indices = usable[n_test..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(Split { train_indices, test_indices, excluded_indices: ds.zero_norm_indices() })
}

fn parse_rows(text: &str, what: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(lineno, l)| {
            l.split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::Format(format!("{what} line {}: {e} ({:?})", lineno + 1, f.trim()))
                    })
                })
                .collect()
        })
        .collect()
}

/// Builds a dataset from comma-separated text.
///
/// Each channel row holds `2A` numbers (all real parts, then all imaginary
/// parts); each location row holds `D ∈ {2, 3}` coordinates in meters. Blank
/// lines and lines starting with `#` are skipped.
pub fn ingest_external(channel_csv: &str, location_csv: &str, array_cfg: &ArrayConfig) -> Result<LabeledDataset> {
    array_cfg.validate()?;
    let channels = parse_rows(channel_csv, "channel")?;
    let locations = parse_rows(location_csv, "location")?;
    if channels.len() != locations.len() {
        return Err(Error::RowCountMismatch { channels: channels.len(), locations: locations.len() });
    }
    let a = array_cfg.num_antennas();
    let records = channels
        .into_iter()
        .zip(locations)
        .enumerate()
        .map(|(i, (c, l))| {
            if c.len() != 2 * a {
                return Err(Error::DimensionMismatch(format!(
                    "channel row {i} has {} values, expected {}",
                    c.len(),
                    2 * a
                )));
            }
            let channel = (0..a).map(|k| Complex64::new(c[k], c[a + k])).collect();
            Ok(Record { location: Location(l), channel: ChannelVector(channel) })
        })
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        return Err(Error::RowCountMismatch { channels: 0, locations: 0 });
    }
    LabeledDataset::new(
        *array_cfg,
        records,
        Provenance {
            source: "external".into(),
            seed: None,
            element_spacing: array_cfg.element_spacing,
            base_station: None,
        },
    )
}

pub fn ingest_external_files(
    channel_file: impl AsRef<FsPath>,
    location_file: impl AsRef<FsPath>,
    array_cfg: &ArrayConfig,
) -> Result<LabeledDataset> {
    ingest_external(&fs::read_to_string(channel_file)?, &fs::read_to_string(location_file)?, array_cfg)
}
