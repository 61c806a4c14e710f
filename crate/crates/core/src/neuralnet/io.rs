//! `LBBM` model files (little-endian).
//!
//! ```text
//! magic "LBBM" | version u32
//! antennas_per_side u32 | carrier f64 | element_spacing f64
//! arch u32 (0 = rff, 1 = mlp) | D u32
//! input_offset D×f64 | input_scale D×f64
//! R u32 | sigma f64 | rff seed u64
//! depth u32 | width u32 | output_dim u32
//! frequencies R×D f64 (rff only)
//! layer count u32, then per layer: inputs u32 | outputs u32 |
//!     weights outputs×inputs f32 (row-major) | bias outputs×f32
//! ```

use std::fs;
use std::path::Path as FsPath;

use super::dense::Dense;
use super::{Arch, MlpConfig, RffConfig, RffModel};
use crate::array::ArrayConfig;
use crate::dataset::ByteReader;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"LBBM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

impl RffModel<f32> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        put_u32(&mut out, MODEL_FORMAT_VERSION as usize);
        put_u32(&mut out, self.array_cfg.antennas_per_side as usize);
        put_f64(&mut out, self.array_cfg.carrier_frequency);
        put_f64(&mut out, self.array_cfg.element_spacing);
        put_u32(&mut out, matches!(self.arch, Arch::Mlp) as usize);
        put_u32(&mut out, self.dim);
        self.input_offset.iter().for_each(|&v| put_f64(&mut out, v));
        self.input_scale.iter().for_each(|&v| put_f64(&mut out, v));
        put_u32(&mut out, self.rff.num_frequencies);
        put_f64(&mut out, self.rff.sigma);
        out.extend_from_slice(&self.rff.seed.to_le_bytes());
        put_u32(&mut out, self.mlp.depth);
        put_u32(&mut out, self.mlp.width);
        put_u32(&mut out, self.mlp.output_dim);
        self.frequencies.iter().for_each(|&v| put_f64(&mut out, v));
        put_u32(&mut out, self.layers.len());
        for l in &self.layers {
            put_u32(&mut out, l.inputs);
            put_u32(&mut out, l.outputs);
            for w in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Format("missing LBBM magic".into()));
        }
        let mut rd = ByteReader::new(bytes);
        rd.skip(4);
        let version = rd.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format version {version}")));
        }
        let array_cfg = ArrayConfig {
            antennas_per_side: rd.u32()?,
            carrier_frequency: rd.f64()?,
            element_spacing: rd.f64()?,
        };
        array_cfg.validate().map_err(|e| Error::Format(e.to_string()))?;
        let arch = match rd.u32()? {
            0 => Arch::Rff,
            1 => Arch::Mlp,
            other => return Err(Error::Format(format!("unknown architecture tag {other}"))),
        };
        let dim = rd.u32()? as usize;
        if !(dim == 2 || dim == 3) {
            return Err(Error::Format(format!("location dimension {dim} not in {{2, 3}}")));
        }
        let input_offset = (0..dim).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
        let input_scale = (0..dim).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
        let rff = RffConfig {
            num_frequencies: rd.u32()? as usize,
            sigma: rd.f64()?,
            seed: rd.u64()?,
        };
        let mlp = MlpConfig {
            depth: rd.u32()? as usize,
            width: rd.u32()? as usize,
            output_dim: rd.u32()? as usize,
        };
        let n_freq = match arch {
            Arch::Rff => rff.num_frequencies * dim,
            Arch::Mlp => 0,
        };
        if rd.remaining() < n_freq * 8 {
            return Err(Error::DimensionMismatch("truncated frequency matrix".into()));
        }
        let frequencies = (0..n_freq).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
        let n_layers = rd.u32()? as usize;
        let expected_layers = mlp.depth + matches!(arch, Arch::Mlp) as usize;
        if n_layers != expected_layers {
            return Err(Error::Format(format!("{n_layers} layers stored, architecture implies {expected_layers}")));
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut expected_in = match arch {
            Arch::Rff => 2 * rff.num_frequencies,
            Arch::Mlp => dim,
        };
        for i in 0..n_layers {
            let inputs = rd.u32()? as usize;
            let outputs = rd.u32()? as usize;
            if inputs != expected_in {
                return Err(Error::Format(format!("layer {i} expects {inputs} inputs, previous width is {expected_in}")));
            }
            let count = inputs * outputs + outputs;
            if rd.remaining() < count * 4 {
                return Err(Error::DimensionMismatch(format!("layer {i} truncated")));
            }
            let mut vals = (0..count).map(|_| rd.f32()).collect::<Result<Vec<_>>>()?;
            let bias = vals.split_off(inputs * outputs);
            layers.push(Dense { inputs, outputs, weights: vals, bias });
            expected_in = outputs;
        }
        if expected_in != mlp.output_dim || mlp.output_dim != 2 * array_cfg.num_antennas() {
            return Err(Error::Format("output width does not match the array".into()));
        }
        if rd.remaining() != 0 {
            return Err(Error::Format("trailing bytes after the last layer".into()));
        }
        Ok(RffModel { array_cfg, arch, rff, mlp, dim, input_offset, input_scale, frequencies, layers })
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        RffModel::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::ModelSpec;

    fn model(arch: Arch) -> RffModel<f32> {
        let cfg = ArrayConfig::half_wavelength(2, 3.5e9);
        let spec = ModelSpec {
            arch,
            rff: RffConfig { num_frequencies: 5, sigma: 0.02, seed: 8 },
            mlp: MlpConfig::new(3, 7, &cfg),
        };
        RffModel::new(cfg, 2, &spec, vec![100.0, 75.0], 2).unwrap()
    }

    #[test]
    fn round_trip_both_archs() {
        for arch in [Arch::Rff, Arch::Mlp] {
            let m = model(arch);
            let back = RffModel::from_bytes(&m.to_bytes()).unwrap();
            assert_eq!(m, back);
        }
    }

    #[test]
    fn corrupt_model_files() {
        let bytes = model(Arch::Rff).to_bytes();
        let mut bad = bytes.clone();
        bad[3] = b'D';
        assert!(matches!(RffModel::from_bytes(&bad), Err(Error::Format(_))));
        for cut in [6, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(RffModel::from_bytes(&bytes[..cut]), Err(Error::DimensionMismatch(_))),
                "cut {cut}"
            );
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(RffModel::from_bytes(&long), Err(Error::Format(_))));
    }
}
