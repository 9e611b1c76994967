//! Versioned binary checkpoints.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! u32 version | b"SNNIIRCK" | u64 seed | u64 epoch | u32 n_layers
//! per layer:   u32 n_in | u32 n_out | f64 lambda, theta, v_th, sigma
//!              f64 weights[n_out * n_in] (row-major)
//!              per input channel: u32 P | u32 Q | u8 trainable | f64 a[P] | f64 b[Q + 1]
//! optimizer:   f64 lr, beta1, beta2, eps | u64 step | u64 n | f64 m[n] | f64 v[n]
//! ```

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::FilterCoeffs;
use crate::network::{LayerSpec, Matrix, NetworkSpec};
use crate::neuron::NeuronParams;
use crate::training::{AdamConfig, AdamState};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SNNIIRCK";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: NetworkSpec,
    pub optimizer: AdamState,
    pub seed: u64,
    pub epoch: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&self.seed.to_le_bytes());
        b.extend_from_slice(&self.epoch.to_le_bytes());
        b.extend_from_slice(&(self.network.layers().len() as u32).to_le_bytes());
        let put_f64 = |b: &mut Vec<u8>, x: f64| b.extend_from_slice(&x.to_le_bytes());
        for layer in self.network.layers() {
            b.extend_from_slice(&(layer.n_in() as u32).to_le_bytes());
            b.extend_from_slice(&(layer.n_out() as u32).to_le_bytes());
            let n = layer.neuron();
            for x in [n.lambda, n.theta, n.v_th, n.sigma] {
                put_f64(&mut b, x);
            }
            for &w in layer.weights().as_slice() {
                put_f64(&mut b, w);
            }
            for f in layer.filters() {
                b.extend_from_slice(&(f.feedback_order() as u32).to_le_bytes());
                b.extend_from_slice(&(f.feedforward_order() as u32).to_le_bytes());
                b.push(f.trainable() as u8);
                for &a in f.feedback().iter().chain(f.feedforward()) {
                    put_f64(&mut b, a);
                }
            }
        }
        let c = &self.optimizer.config;
        for x in [c.lr, c.beta1, c.beta2, c.eps] {
            put_f64(&mut b, x);
        }
        b.extend_from_slice(&self.optimizer.step.to_le_bytes());
        b.extend_from_slice(&(self.optimizer.m.len() as u64).to_le_bytes());
        for &x in self.optimizer.m.iter().chain(&self.optimizer.v) {
            put_f64(&mut b, x);
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        if r.take(8)? != MAGIC {
            return Err(r.error(4, "bad magic"));
        }
        let seed = r.u64()?;
        let epoch = r.u64()?;
        let n_layers = r.u32()? as usize;
        let mut layers = Vec::new();
        for _ in 0..n_layers {
            let n_in = r.u32()? as usize;
            let n_out = r.u32()? as usize;
            let neuron = NeuronParams::new(r.f64()?, r.f64()?, r.f64()?, r.f64()?)?;
            let weights = Matrix::from_vec(n_out, n_in, r.f64s(n_in.saturating_mul(n_out))?)?;
            let mut filters = Vec::with_capacity(n_in.min(r.remaining()));
            for _ in 0..n_in {
                let p = r.u32()? as usize;
                let q = r.u32()? as usize;
                let trainable = match r.take(1)?[0] {
                    0 => false,
                    1 => true,
                    other => return Err(r.error(r.pos as u64 - 1, &format!("trainable flag {other}"))),
                };
                let fb = r.f64s(p)?;
                let ff = r.f64s(q.saturating_add(1))?;
                filters.push(FilterCoeffs::new(fb, ff, trainable)?);
            }
            layers.push(LayerSpec::new(weights, filters, neuron)?);
        }
        let network = NetworkSpec::new(layers)?;
        let config = AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            eps: r.f64()?,
        };
        let step = r.u64()?;
        let n = r.u64()? as usize;
        if n != network.num_params() {
            return Err(r.error(
                r.pos as u64 - 8,
                &format!("{n} optimizer moments for {} parameters", network.num_params()),
            ));
        }
        let m = r.f64s(n)?;
        let v = r.f64s(n)?;
        if r.remaining() != 0 {
            return Err(r.error(r.pos as u64, &format!("{} trailing bytes", r.remaining())));
        }
        Ok(Checkpoint {
            network,
            optimizer: AdamState { config, step, m, v },
            seed,
            epoch,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, offset: u64, reason: &str) -> Error {
        Error::Parse {
            what: "checkpoint".into(),
            offset,
            reason: reason.to_string(),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(self.error(
                self.pos as u64,
                &format!("length field asks for {n} bytes, {} remain", self.remaining()),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| self.error(self.pos as u64, "length overflow"))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&ckpt.to_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
