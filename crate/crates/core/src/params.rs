//! Named parameter storage, optimisers and the checkpoint file format.
//!
//! Checkpoint layout:
//!
//! ```text
//! SOCIALPRUNE-CHECKPOINT 1\n
//! {"kind":..,"config":..,"arrays":[{"name":..,"shape":[..],"offset":..}, ..]}\n
//! <raw little-endian f64 values, arrays back to back in manifest order>
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

const MAGIC: &str = "SOCIALPRUNE-CHECKPOINT";
const FORMAT_VERSION: u32 = 1;

/// Ordered map of named parameter tensors with gradient slots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    params: BTreeMap<String, Tensor>,
}

/// Graph handles for every parameter of a store.
#[derive(Debug, Clone)]
pub struct Bindings {
    vars: BTreeMap<String, Var>,
}

impl Bindings {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Contract(format!("unknown parameter {name}")))
    }
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.params.insert(name.into(), t);
    }

    /// Xavier-uniform weight matrix.
    pub fn insert_xavier<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        self.insert(name, Tensor::uniform(&[rows, cols], -bound, bound, rng));
    }

    pub fn insert_zeros(&mut self, name: &str, rows: usize, cols: usize) {
        self.insert(name, Tensor::zeros(&[rows, cols]));
    }

    pub fn insert_ones(&mut self, name: &str, rows: usize, cols: usize) {
        self.insert(name, Tensor::full(&[rows, cols], 1.0));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Registers every parameter as a leaf of `g`. Frozen bindings do not
    /// require gradients, so nothing flows back into them.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Bindings {
        let vars = self
            .params
            .iter()
            .map(|(name, t)| (name.clone(), g.leaf(t.clone(), trainable)))
            .collect();
        Bindings { vars }
    }

    /// Adds the graph gradients of bound parameters into their grad slots.
    pub fn accumulate_grads(&mut self, g: &Graph, bindings: &Bindings) {
        for (name, t) in self.params.iter_mut() {
            if let Some(&v) = bindings.vars.get(name) {
                if g.requires_grad(v) {
                    t.accumulate_grad(&g.grad(v));
                }
            }
        }
    }

    /// Adds gradients from a flat buffer laid out in name order.
    pub fn accumulate_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for t in self.params.values_mut() {
            let n = t.numel();
            t.accumulate_grad(&flat[off..off + n]);
            off += n;
        }
    }

    /// Graph gradients of all parameters as one name-ordered buffer.
    pub fn flat_grads(&self, g: &Graph, bindings: &Bindings) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for name in self.params.keys() {
            let v = bindings.vars[name];
            out.extend(g.grad(v));
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for t in self.params.values_mut() {
            t.grad = None;
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .values()
            .filter_map(|t| t.grad.as_ref())
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Plain gradient descent with global-norm clipping. Returns the
    /// pre-clipping gradient norm and clears the gradients.
    pub fn descend(&mut self, lr: f64, max_norm: f64) -> Result<f64> {
        let norm = self.grad_norm();
        if !norm.is_finite() {
            return Err(Error::Divergence(format!("gradient norm {norm}")));
        }
        let scale = if norm > max_norm { max_norm / norm } else { 1.0 };
        for t in self.params.values_mut() {
            if let Some(g) = t.grad.take() {
                for (p, gv) in t.data_mut().iter_mut().zip(&g) {
                    *p -= lr * scale * gv;
                }
            }
        }
        Ok(norm)
    }

    /// Fails unless `other` has exactly the same names and shapes.
    pub fn check_layout(&self, expected: &ParameterStore) -> Result<()> {
        if self.params.len() != expected.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} arrays, found {}",
                expected.params.len(),
                self.params.len()
            )));
        }
        for (name, t) in &expected.params {
            match self.params.get(name) {
                Some(found) if found.shape() == t.shape() => {}
                Some(found) => {
                    return Err(Error::Checkpoint(format!(
                        "{name}: expected shape {:?}, found {:?}",
                        t.shape(),
                        found.shape()
                    )))
                }
                None => return Err(Error::Checkpoint(format!("missing array {name}"))),
            }
        }
        Ok(())
    }
}

/// Adam moment estimates keyed by parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: BTreeMap::new(),
        }
    }
}

impl Adam {
    /// One update from the accumulated gradients after global-norm clipping.
    /// Returns the pre-clipping norm and clears the gradients.
    pub fn step(&mut self, store: &mut ParameterStore, lr: f64, max_norm: f64) -> Result<f64> {
        let norm = store.grad_norm();
        if !norm.is_finite() {
            return Err(Error::Divergence(format!("gradient norm {norm}")));
        }
        let scale = if norm > max_norm { max_norm / norm } else { 1.0 };
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (name, t) in store.params.iter_mut() {
            let Some(g) = t.grad.take() else { continue };
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; g.len()], vec![0.0; g.len()]));
            for (i, p) in t.data_mut().iter_mut().enumerate() {
                let gi = g[i] * scale;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                *p -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
        Ok(norm)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    kind: String,
    config: serde_json::Value,
    arrays: Vec<ArrayEntry>,
}

/// A parameter store tagged with its model kind and a config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub config: serde_json::Value,
    pub params: ParameterStore,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut arrays = Vec::with_capacity(self.params.len());
        let mut offset = 0;
        for (name, t) in self.params.iter() {
            arrays.push(ArrayEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                offset,
            });
            offset += t.numel();
        }
        let manifest = Manifest {
            kind: self.kind.clone(),
            config: self.config.clone(),
            arrays,
        };
        let json =
            serde_json::to_string(&manifest).map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
        writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(w, "{json}")?;
        let mut bytes = Vec::with_capacity(offset * 8);
        for (_, t) in self.params.iter() {
            for v in t.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = String::new();
        r.read_line(&mut header)?;
        let expected = format!("{MAGIC} {FORMAT_VERSION}");
        if header.trim_end() != expected {
            return Err(Error::Checkpoint(format!(
                "bad header {:?}, expected {expected:?}",
                header.trim_end()
            )));
        }
        let mut line = String::new();
        r.read_line(&mut line)?;
        let manifest: Manifest =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() % 8 != 0 {
            return Err(Error::Checkpoint("payload is not a whole number of f64".into()));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let mut params = ParameterStore::new();
        let mut expected_offset = 0;
        for entry in manifest.arrays {
            let n: usize = entry.shape.iter().product();
            if entry.offset != expected_offset || entry.offset + n > values.len() {
                return Err(Error::Checkpoint(format!(
                    "{}: offset {} with {} values does not fit payload of {}",
                    entry.name,
                    entry.offset,
                    n,
                    values.len()
                )));
            }
            let t = Tensor::new(&entry.shape, values[entry.offset..entry.offset + n].to_vec())
                .map_err(|e| Error::Checkpoint(format!("{}: {e}", entry.name)))?;
            if !t.is_finite() {
                return Err(Error::Checkpoint(format!("{}: non-finite values", entry.name)));
            }
            params.insert(entry.name, t);
            expected_offset += n;
        }
        if expected_offset != values.len() {
            return Err(Error::Checkpoint(format!(
                "payload has {} values, manifest covers {expected_offset}",
                values.len()
            )));
        }
        Ok(Self {
            kind: manifest.kind,
            config: manifest.config,
            params,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
        Self::read_from(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_store() -> ParameterStore {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = ParameterStore::new();
        s.insert_xavier("a.w", 3, 2, &mut rng);
        s.insert_zeros("a.b", 1, 2);
        s
    }

    #[test]
    fn checkpoint_round_trips() {
        let ck = Checkpoint {
            kind: "test".into(),
            config: serde_json::json!({"d": 2}),
            params: sample_store(),
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let ck = Checkpoint {
            kind: "test".into(),
            config: serde_json::Value::Null,
            params: sample_store(),
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        assert!(matches!(
            Checkpoint::read_from(&buf[..]),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn layout_check_catches_shape_drift() {
        let a = sample_store();
        let mut b = sample_store();
        b.insert_zeros("a.b", 1, 3);
        assert!(b.check_layout(&a).is_err());
        assert!(a.check_layout(&sample_store()).is_ok());
    }

    #[test]
    fn descend_clips_to_max_norm() {
        let mut s = ParameterStore::new();
        s.insert("p", Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        s.get_mut("p").unwrap().accumulate_grad(&[30.0, 40.0]);
        let norm = s.descend(1.0, 1.0).unwrap();
        assert_eq!(norm, 50.0);
        let p = s.get("p").unwrap().data();
        assert!((p[0] + 0.6).abs() < 1e-15 && (p[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut s = sample_store();
        let before = s.get("a.b").unwrap().data().to_vec();
        s.get_mut("a.b").unwrap().accumulate_grad(&[0.3, -0.2]);
        let mut adam = Adam::default();
        adam.step(&mut s, 0.01, 10.0).unwrap();
        let after = s.get("a.b").unwrap().data();
        assert!((after[0] - (before[0] - 0.01)).abs() < 1e-9);
        assert!((after[1] - (before[1] + 0.01)).abs() < 1e-9);
        assert_eq!(s.grad_norm(), 0.0);
    }
}
