use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ngm::NetConfig;
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

// Independent streams so that optional blocks never shift the draws of the
// shared ones (e.g. NHGM with lambda3 = 0 reproduces NGM exactly).
const STREAM_CORE: u64 = 0;
const STREAM_HYPER: u64 = 1;
const STREAM_EDGE: u64 = 2;
const STREAM_CLASSIFIER: u64 = 3;

/// Indices of an affine map `x W + b` in the parameter store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: usize,
    pub bias: usize,
}

/// Two affine maps, each followed by a rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerParams {
    pub f_m: Mlp,
    pub f_v: Mlp,
    pub f_e: Option<Mlp>,
    pub f_m3: Option<Mlp>,
    pub classifier: Option<Linear>,
}

/// Flat named parameter store plus the per-layer index structure.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    pub layers: Vec<LayerParams>,
    pub f_c: Linear,
    names: Vec<String>,
    values: Vec<DenseMatrix<T>>,
}

struct Builder<T> {
    names: Vec<String>,
    values: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> Builder<T> {
    fn linear(&mut self, rng: &mut ChaCha8Rng, name: &str, fan_in: usize, fan_out: usize) -> Linear {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = |r, c| DenseMatrix::from_fn(r, c, |_, _| T::lit(rng.random_range(-bound..=bound)));
        let w = draw(fan_in, fan_out);
        let b = draw(1, fan_out);
        let weight = self.push(format!("{name}.weight"), w);
        let bias = self.push(format!("{name}.bias"), b);
        Linear { weight, bias }
    }

    fn mlp(&mut self, rng: &mut ChaCha8Rng, name: &str, fan_in: usize, hidden: usize, out: usize) -> Mlp {
        Mlp {
            fc1: self.linear(rng, &format!("{name}.0"), fan_in, hidden),
            fc2: self.linear(rng, &format!("{name}.1"), hidden, out),
        }
    }

    fn push(&mut self, name: String, m: DenseMatrix<T>) -> usize {
        self.names.push(name);
        self.values.push(m);
        self.values.len() - 1
    }
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

impl<T: Scalar> NetParams<T> {
    /// Uniform `±1/sqrt(fan_in)` initialization, deterministic in `seed`.
    pub fn init(cfg: &NetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut b = Builder {
            names: Vec::new(),
            values: Vec::new(),
        };
        let mut core = stream(seed, STREAM_CORE);
        let mut hyper = stream(seed, STREAM_HYPER);
        let mut edge = stream(seed, STREAM_EDGE);
        let mut cls = stream(seed, STREAM_CLASSIFIER);
        let c = cfg.channels;
        let mut width = 1;
        let mut edge_width = 1;
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for k in 0..cfg.num_layers {
            let f_m = b.mlp(&mut core, &format!("layer{k}.f_m"), width, c, c);
            let f_v = b.mlp(&mut core, &format!("layer{k}.f_v"), width, c, c);
            let f_e = cfg
                .edge_embedding
                .then(|| b.mlp(&mut edge, &format!("layer{k}.f_e"), edge_width + width, c, c));
            let f_m3 = cfg.hyper.then(|| b.mlp(&mut hyper, &format!("layer{k}.f_m3"), width, c, c));
            let classifier = cfg
                .sinkhorn_embedding
                .then(|| b.linear(&mut cls, &format!("layer{k}.classifier"), c, 1));
            layers.push(LayerParams {
                f_m,
                f_v,
                f_e,
                f_m3,
                classifier,
            });
            width = cfg.layer_output_width();
            edge_width = c;
        }
        let f_c = b.linear(&mut core, "f_c", width, 1);
        Ok(Self {
            layers,
            f_c,
            names: b.names,
            values: b.values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[DenseMatrix<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [DenseMatrix<T>] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> Option<&DenseMatrix<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|m| m.data().len()).sum()
    }

    /// Replaces every parameter by a named value of the same shape.
    pub fn load_named(&mut self, named: Vec<(String, DenseMatrix<T>)>) -> Result<()> {
        if named.len() != self.values.len() {
            return Err(Error::Parse(format!(
                "expected {} parameter blocks, found {}",
                self.values.len(),
                named.len()
            )));
        }
        for (name, m) in named {
            let i = self
                .names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::Parse(format!("unexpected parameter '{name}'")))?;
            if m.shape() != self.values[i].shape() {
                return Err(Error::Shape(format!(
                    "parameter '{name}' is {:?}, expected {:?}",
                    m.shape(),
                    self.values[i].shape()
                )));
            }
            self.values[i] = m;
        }
        Ok(())
    }

    /// Flat copy of all parameters in store order.
    pub fn flatten(&self) -> Vec<T> {
        self.values.iter().flat_map(|m| m.data().iter().copied()).collect()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::Shape(format!("{} scalars for {} parameters", flat.len(), self.num_scalars())));
        }
        let mut off = 0;
        for m in &mut self.values {
            let n = m.data().len();
            m.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> NetParams<U> {
        NetParams {
            layers: self.layers.clone(),
            f_c: self.f_c,
            names: self.names.clone(),
            values: self.values.iter().map(DenseMatrix::cast).collect(),
        }
    }

    /// Checks the store against the layout `cfg` would produce.
    pub fn check_matches(&self, cfg: &NetConfig) -> Result<()> {
        let fresh = NetParams::<T>::init(cfg, 0)?;
        if fresh.names != self.names || fresh.values.iter().zip(&self.values).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::Config("parameters do not match the network configuration".into()));
        }
        Ok(())
    }
}
