use super::tensor::Tensor;
use super::{NnError, Result};
use rand::Rng;

/// Handle to a parameter inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// A named trainable tensor together with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Flat arena of parameters. Models hold `ParamId`s; the optimizer and the
/// checkpoint code walk the set in insertion order.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    items: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter. Names must be unique; they key the checkpoint
    /// format.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(
            self.items.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        let grad = Tensor::zeros(value.shape().to_vec());
        self.items.push(Parameter { name, value, grad });
        ParamId(self.items.len() - 1)
    }

    /// Registers a matrix initialized uniformly in ±1/sqrt(fan_in).
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| rng.random::<f64>() * 2.0 * bound - bound)
            .collect();
        self.add(name, Tensor::from_raw(vec![rows, cols], values))
    }

    /// Registers an all-zero vector (bias or zero-init output head).
    pub fn add_zeros(&mut self, name: impl Into<String>, len: usize) -> ParamId {
        self.add(name, Tensor::zeros(vec![len]))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.items[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.items[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.items.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.items.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.items.len()).map(ParamId)
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.items.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.items {
            p.grad.fill(0.0);
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, grad: &Tensor) -> Result<()> {
        let p = &mut self.items[id.0];
        if p.grad.shape() != grad.shape() {
            return Err(NnError::Shape {
                op: "gradient accumulation",
                lhs: p.grad.shape().to_vec(),
                rhs: grad.shape().to_vec(),
            });
        }
        for (g, d) in p.grad.values_mut().iter_mut().zip(grad.values()) {
            *g += d;
        }
        Ok(())
    }

    /// FNV-1a over every parameter's name and value bits, in insertion order.
    /// Used by the frozen-weights check: any drift in any coordinate changes
    /// the checksum.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for p in &self.items {
            for b in p.name.as_bytes() {
                eat(*b);
            }
            for v in p.value.values() {
                for b in v.to_le_bytes() {
                    eat(b);
                }
            }
        }
        h
    }
}
