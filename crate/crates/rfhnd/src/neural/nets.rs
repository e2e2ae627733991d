//! Parameter containers, initialization, and the binary snapshot format.

use std::io::{Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::neural::mat::Mat;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Mat,
    pub b: Mat,
}

impl Linear {
    pub fn init(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.random_range(-a..a)).collect();
        Linear { w: Mat::from_vec(fan_in, fan_out, data), b: Mat::zeros(1, fan_out) }
    }
}

/// Two dense layers with a relu in between.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub l1: Linear,
    pub l2: Linear,
}

impl Mlp {
    pub fn init(rng: &mut ChaCha8Rng, d_in: usize, hidden: usize, d_out: usize) -> Self {
        Mlp { l1: Linear::init(rng, d_in, hidden), l2: Linear::init(rng, hidden, d_out) }
    }
}

/// Everything the classifier learns: encoder, the two hypernet MLPs, and
/// the decoder. The fixed per-edge values replace the hypernet output in the
/// hypernet-free ablation.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub encoder: Linear,
    pub mlp1: Mlp,
    pub mlp2: Mlp,
    pub decoder: Linear,
    pub fixed_kprime: Vec<f64>,
}

impl ModelParams {
    pub fn init(seed: u64, d_in: usize, hidden: usize, classes: usize, num_edges: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Linear::init(&mut rng, d_in, hidden);
        let mlp1 = Mlp::init(&mut rng, hidden, hidden, hidden);
        let mlp2 = Mlp::init(&mut rng, hidden, hidden, 1);
        let decoder = Linear::init(&mut rng, hidden, classes);
        // The hypernet-free variant replaces the head with one randomly
        // generated value shared by every edge.
        let fixed_kprime: Vec<f64> = vec![rng.random_range(0.0..1.0); num_edges];
        ModelParams { encoder, mlp1, mlp2, decoder, fixed_kprime }
    }

    /// Named tensors in a fixed order; weights first within each block.
    pub fn tensors(&self) -> Vec<(&'static str, &Mat)> {
        vec![
            ("encoder.w", &self.encoder.w),
            ("encoder.b", &self.encoder.b),
            ("mlp1.l1.w", &self.mlp1.l1.w),
            ("mlp1.l1.b", &self.mlp1.l1.b),
            ("mlp1.l2.w", &self.mlp1.l2.w),
            ("mlp1.l2.b", &self.mlp1.l2.b),
            ("mlp2.l1.w", &self.mlp2.l1.w),
            ("mlp2.l1.b", &self.mlp2.l1.b),
            ("mlp2.l2.w", &self.mlp2.l2.w),
            ("mlp2.l2.b", &self.mlp2.l2.b),
            ("decoder.w", &self.decoder.w),
            ("decoder.b", &self.decoder.b),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        vec![
            ("encoder.w", &mut self.encoder.w),
            ("encoder.b", &mut self.encoder.b),
            ("mlp1.l1.w", &mut self.mlp1.l1.w),
            ("mlp1.l1.b", &mut self.mlp1.l1.b),
            ("mlp1.l2.w", &mut self.mlp1.l2.w),
            ("mlp1.l2.b", &mut self.mlp1.l2.b),
            ("mlp2.l1.w", &mut self.mlp2.l1.w),
            ("mlp2.l1.b", &mut self.mlp2.l1.b),
            ("mlp2.l2.w", &mut self.mlp2.l2.w),
            ("mlp2.l2.b", &mut self.mlp2.l2.b),
            ("decoder.w", &mut self.decoder.w),
            ("decoder.b", &mut self.decoder.b),
        ]
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data.len()).sum()
    }
}

const MAGIC: &[u8; 4] = b"RFNP";
const VERSION: u32 = 1;

/// Snapshot format, little-endian throughout:
/// magic "RFNP", u32 version, u32 tensor count, then per tensor
/// u16 name length, name bytes, u32 rows, u32 cols, rows*cols f64 values;
/// finally u32 fixed-kprime length and its f64 values.
pub fn save_params(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let tensors = params.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(m.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(m.cols as u32).to_le_bytes());
        for v in &m.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf.extend_from_slice(&(params.fixed_kprime.len() as u32).to_le_bytes());
    for v in &params.fixed_kprime {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cur = 0usize;
    let take = |cur: &mut usize, n: usize| -> Result<&[u8]> {
        if *cur + n > bytes.len() {
            return Err(Error::parse(path.display().to_string(), "truncated snapshot"));
        }
        let s = &bytes[*cur..*cur + n];
        *cur += n;
        Ok(s)
    };
    if take(&mut cur, 4)? != MAGIC {
        return Err(Error::parse(path.display().to_string(), "bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unsupported snapshot version {version}"),
        ));
    }
    let count = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
    let mut mats: Vec<(String, Mat)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(take(&mut cur, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8_lossy(take(&mut cur, name_len)?).into_owned();
        let rows = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let raw = take(&mut cur, rows * cols * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        mats.push((name, Mat::from_vec(rows, cols, data)));
    }
    let klen = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
    let raw = take(&mut cur, klen * 8)?;
    let fixed_kprime: Vec<f64> =
        raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();

    let lookup = |name: &str| -> Result<Mat> {
        mats.iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::parse(path.display().to_string(), format!("missing {name}")))
    };
    Ok(ModelParams {
        encoder: Linear { w: lookup("encoder.w")?, b: lookup("encoder.b")? },
        mlp1: Mlp {
            l1: Linear { w: lookup("mlp1.l1.w")?, b: lookup("mlp1.l1.b")? },
            l2: Linear { w: lookup("mlp1.l2.w")?, b: lookup("mlp1.l2.b")? },
        },
        mlp2: Mlp {
            l1: Linear { w: lookup("mlp2.l1.w")?, b: lookup("mlp2.l1.b")? },
            l2: Linear { w: lookup("mlp2.l2.w")?, b: lookup("mlp2.l2.b")? },
        },
        decoder: Linear { w: lookup("decoder.w")?, b: lookup("decoder.b")? },
        fixed_kprime,
    })
}
