use std::fs;
use std::io;
use std::path::Path;

use ndarray::{ArrayView1, ArrayView2};
use rand::distr::{Distribution, Uniform};

use super::{MlpConfig, MlpError};
use crate::rng;

/// Flat weights and biases of one fully connected network.
///
/// Layer `l` occupies a contiguous block: its weight matrix in row-major
/// order (`out x in`, one row per output unit) followed by its bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    config: MlpConfig,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"RXNP";
const FORMAT_VERSION: u32 = 1;

impl ParamSet {
    pub fn zeros(config: MlpConfig) -> Self {
        let offsets = layer_offsets(&config);
        let total = *offsets.last().expect("offsets are never empty");
        Self {
            config,
            offsets,
            data: vec![0.0; total],
        }
    }

    pub fn from_vec(config: MlpConfig, data: Vec<f64>) -> Result<Self, MlpError> {
        let offsets = layer_offsets(&config);
        let total = *offsets.last().unwrap();
        if data.len() != total {
            return Err(MlpError::ParamCount {
                expected: total,
                got: data.len(),
            });
        }
        if let Some(&v) = data.iter().find(|v| !v.is_finite()) {
            return Err(MlpError::NonFinite(v));
        }
        Ok(Self {
            config,
            offsets,
            data,
        })
    }

    /// He-uniform weights, `U(-sqrt(6/fan_in), sqrt(6/fan_in))` per layer,
    /// with zero biases.
    pub fn init_he_uniform(config: MlpConfig, seed: u64, stream: rng::Stream) -> Self {
        let mut params = Self::zeros(config);
        let mut rng = rng::stream(seed, stream);
        for l in 0..params.num_layers() {
            let (fan_out, fan_in) = params.config.layer_shape(l);
            let bound = he_uniform_bound(fan_in);
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
            let start = params.offsets[l];
            for w in &mut params.data[start..start + fan_out * fan_in] {
                *w = dist.sample(&mut rng);
            }
        }
        params
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn num_layers(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Offset of layer `l` in the flat vector; `l == num_layers()` gives the
    /// total length.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    pub fn weight(&self, l: usize) -> ArrayView2<'_, f64> {
        let (o, i) = self.config.layer_shape(l);
        let start = self.offsets[l];
        ArrayView2::from_shape((o, i), &self.data[start..start + o * i]).unwrap()
    }

    pub fn bias(&self, l: usize) -> ArrayView1<'_, f64> {
        let (o, i) = self.config.layer_shape(l);
        let start = self.offsets[l] + o * i;
        ArrayView1::from(&self.data[start..start + o])
    }

    /// Index of weight `(row, col)` of layer `l` in the flat vector.
    pub fn weight_index(&self, l: usize, row: usize, col: usize) -> usize {
        let (_, i) = self.config.layer_shape(l);
        self.offsets[l] + row * i + col
    }

    pub fn bias_index(&self, l: usize, row: usize) -> usize {
        let (o, i) = self.config.layer_shape(l);
        self.offsets[l] + o * i + row
    }

    /// Serialises to the checkpoint byte format.
    ///
    /// All integers are little-endian `u32`, all reals little-endian `f64`:
    ///
    /// | field             | size                      |
    /// |-------------------|---------------------------|
    /// | magic `RXNP`      | 4 bytes                   |
    /// | format version (1)| u32                       |
    /// | layer count `L`   | u32                       |
    /// | dims `d_0..d_L`   | `(L + 1)` u32             |
    /// | layer offsets     | `(L + 1)` u32, last = total |
    /// | parameters        | `total` f64               |
    ///
    /// `d_0` is the input dimension and `d_L` the output dimension.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.config.dims();
        let mut out = Vec::with_capacity(12 + 8 * dims.len() + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_layers() as u32).to_le_bytes());
        for d in &dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for o in &self.offsets {
            out.extend_from_slice(&(*o as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MlpError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(MlpError::Format("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != FORMAT_VERSION {
            return Err(MlpError::Format(format!("unsupported version {version}")));
        }
        let layers = cur.u32()? as usize;
        if layers == 0 {
            return Err(MlpError::Format("zero layers".into()));
        }
        let dims = (0..=layers)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let config = MlpConfig::from_dims(&dims)?;
        let offsets = (0..=layers)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if offsets != layer_offsets(&config) {
            return Err(MlpError::Format("layer offsets disagree with dims".into()));
        }
        let total = offsets[layers];
        let data = (0..total)
            .map(|_| cur.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())))
            .collect::<Result<Vec<_>, _>>()?;
        if cur.pos != bytes.len() {
            return Err(MlpError::Format("trailing bytes".into()));
        }
        Self::from_vec(config, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MlpError> {
        let bytes = fs::read(path).map_err(|e| MlpError::Format(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

pub fn he_uniform_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

fn layer_offsets(config: &MlpConfig) -> Vec<usize> {
    let mut offsets = vec![0];
    for l in 0..config.num_layers() {
        let (o, i) = config.layer_shape(l);
        offsets.push(offsets[l] + o * i + o);
    }
    offsets
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MlpError> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| MlpError::Format("truncated".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, MlpError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn cfg(dims: &[usize]) -> MlpConfig {
        MlpConfig::from_dims(dims).unwrap()
    }

    #[test]
    fn sizes_and_offsets() {
        let p = ParamSet::zeros(cfg(&[2, 8, 8, 1]));
        assert_eq!(p.len(), 2 * 8 + 8 + 8 * 8 + 8 + 8 + 1);
        assert_eq!(p.layer_offset(1), 24);
        assert_eq!(p.weight(1).dim(), (8, 8));
        assert_eq!(p.bias(2).len(), 1);
        assert_eq!(p.weight_index(1, 2, 3), 24 + 2 * 8 + 3);
        assert_eq!(p.bias_index(1, 0), 24 + 64);
    }

    #[test]
    fn he_bound_closed_form() {
        assert!((he_uniform_bound(128) - 0.216_506_350_946_109_67).abs() < 1e-15);
    }

    #[test]
    fn he_init_is_deterministic_and_biases_zero() {
        let c = cfg(&[2, 16, 16, 1]);
        let a = ParamSet::init_he_uniform(c.clone(), 1, Stream::SolutionNet);
        let b = ParamSet::init_he_uniform(c.clone(), 1, Stream::SolutionNet);
        let d = ParamSet::init_he_uniform(c, 2, Stream::SolutionNet);
        assert_eq!(a, b);
        assert_ne!(a, d);
        for l in 0..a.num_layers() {
            assert!(a.bias(l).iter().all(|&b| b == 0.0));
            let bound = he_uniform_bound(a.config().layer_shape(l).1);
            assert!(a.weight(l).iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn he_statistics_at_fan_in_64() {
        // 10^4 weights drawn with fan_in 64; U(-b, b) has sd b/sqrt(3).
        let p = ParamSet::init_he_uniform(cfg(&[64, 10_000, 1]), 1, Stream::Check);
        let w = p.weight(0);
        let n = w.len() as f64;
        let bound = 0.3062;
        let (lo, hi) = w.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(lo >= -bound && hi <= bound, "{lo} {hi}");
        let mean = w.sum() / n;
        let sd = he_uniform_bound(64) / 3f64.sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
        // the range is actually covered
        assert!(hi > 0.30 && lo < -0.30);
    }

    #[test]
    fn corrupt_bytes_are_rejected() {
        let p = ParamSet::init_he_uniform(cfg(&[2, 3, 1]), 1, Stream::Check);
        let bytes = p.to_bytes();
        assert!(ParamSet::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ParamSet::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(ParamSet::from_bytes(&long).is_err());
    }

    #[test]
    fn header_layout() {
        let p = ParamSet::zeros(cfg(&[2, 3, 1]));
        let b = p.to_bytes();
        assert_eq!(&b[0..4], b"RXNP");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        // dims 2,3,1 then offsets 0,9,13
        let words: Vec<u32> = b[12..36]
            .chunks(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(words, vec![2, 3, 1, 0, 9, 13]);
        assert_eq!(b.len(), 36 + 13 * 8);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(seed in 0u64..1000, w in 1usize..6, d in 0usize..3) {
            let mut dims = vec![3];
            dims.extend(std::iter::repeat_n(w, d));
            dims.push(2);
            let p = ParamSet::init_he_uniform(cfg(&dims), seed, Stream::Check);
            let q = ParamSet::from_bytes(&p.to_bytes()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
