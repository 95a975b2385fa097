use std::collections::HashMap;

use super::params::{ParamId, ParamSet};
use super::tensor::{matmul, matmul_nt, matmul_tn, Tensor, EXP_CLAMP};
use super::{NnError, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracedTensor(usize);

enum Back {
    Leaf,
    /// Watched parameter leaf; gradients flow into the bound `ParamId`.
    Param(ParamId),
    Matmul {
        a: usize,
        b: usize,
    },
    /// x (m,n) + bias row (n,) broadcast over rows.
    AddRowBias {
        x: usize,
        b: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    /// a*x + b elementwise with constant scalars.
    AffineScalar {
        x: usize,
        a: f64,
    },
    Relu {
        x: usize,
    },
    Sigmoid {
        x: usize,
    },
    Tanh {
        x: usize,
    },
    Exp {
        x: usize,
    },
    Softmax {
        x: usize,
    },
    LogSoftmax {
        x: usize,
    },
    /// out[r] = x[r, idx[r]], one picked column per row.
    GatherCols {
        x: usize,
        idx: Vec<usize>,
    },
    /// out[r, :] = table[idx[r], :], an embedding lookup.
    EmbedRows {
        table: usize,
        idx: Vec<usize>,
    },
    ConcatCols {
        a: usize,
        b: usize,
    },
    MinElem {
        a: usize,
        b: usize,
    },
    Clamp {
        x: usize,
        lo: f64,
        hi: f64,
    },
    Sum {
        x: usize,
    },
}

struct Node {
    value: Tensor,
    back: Back,
}

/// Wengert-list recorder for reverse-mode differentiation.
///
/// Ops push nodes referencing earlier nodes only, so reverse creation order
/// is a valid topological order for the backward sweep. A tape is single-use:
/// `backward` consumes the recording.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    watched: HashMap<ParamId, usize>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, t: TracedTensor) -> &Tensor {
        &self.nodes[t.0].value
    }

    fn push(&mut self, value: Tensor, back: Back) -> TracedTensor {
        self.nodes.push(Node { value, back });
        TracedTensor(self.nodes.len() - 1)
    }

    /// Records an input with no gradient of its own.
    pub fn constant(&mut self, value: Tensor) -> TracedTensor {
        self.push(value, Back::Leaf)
    }

    /// Records a parameter leaf. Repeated calls for the same parameter on one
    /// tape return the same node, so sharing a layer across inputs accumulates
    /// gradients naturally.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> TracedTensor {
        if let Some(&node) = self.watched.get(&id) {
            return TracedTensor(node);
        }
        let t = self.push(params.get(id).value.clone(), Back::Param(id));
        self.watched.insert(id, t.0);
        t
    }

    fn shapes_match(&self, op: &'static str, a: TracedTensor, b: TracedTensor) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(NnError::Shape {
                op,
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        let (m, k) = self.value(a).as_matrix();
        let (k2, n) = self.value(b).as_matrix();
        if k != k2 {
            return Err(NnError::Shape {
                op: "matmul",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let vals = matmul(self.value(a).values(), self.value(b).values(), m, k, n);
        Ok(self.push(
            Tensor::from_raw(vec![m, n], vals),
            Back::Matmul { a: a.0, b: b.0 },
        ))
    }

    /// Broadcasts a bias vector over every row of a matrix.
    pub fn add_row_bias(&mut self, x: TracedTensor, bias: TracedTensor) -> Result<TracedTensor> {
        let (m, n) = self.value(x).as_matrix();
        if self.value(bias).numel() != n {
            return Err(NnError::Shape {
                op: "add_row_bias",
                lhs: self.value(x).shape().to_vec(),
                rhs: self.value(bias).shape().to_vec(),
            });
        }
        let mut vals = self.value(x).values().to_vec();
        let b = self.value(bias).values();
        for row in vals.chunks_mut(n) {
            for (v, bv) in row.iter_mut().zip(b) {
                *v += bv;
            }
        }
        Ok(self.push(
            Tensor::from_raw(vec![m, n], vals),
            Back::AddRowBias { x: x.0, b: bias.0 },
        ))
    }

    pub fn add(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        self.shapes_match("add", a, b)?;
        let vals = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::from_raw(shape, vals), Back::Add { a: a.0, b: b.0 }))
    }

    pub fn sub(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        self.shapes_match("sub", a, b)?;
        let vals = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x - y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::from_raw(shape, vals), Back::Sub { a: a.0, b: b.0 }))
    }

    pub fn mul(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        self.shapes_match("mul", a, b)?;
        let vals = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::from_raw(shape, vals), Back::Mul { a: a.0, b: b.0 }))
    }

    /// Elementwise a*x + b with constant coefficients.
    pub fn affine_scalar(&mut self, x: TracedTensor, a: f64, b: f64) -> TracedTensor {
        let vals = self.value(x).values().iter().map(|v| a * v + b).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(
            Tensor::from_raw(shape, vals),
            Back::AffineScalar { x: x.0, a },
        )
    }

    pub fn relu(&mut self, x: TracedTensor) -> TracedTensor {
        let vals = self.value(x).values().iter().map(|v| v.max(0.0)).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Tensor::from_raw(shape, vals), Back::Relu { x: x.0 })
    }

    pub fn sigmoid(&mut self, x: TracedTensor) -> TracedTensor {
        let vals = self
            .value(x)
            .values()
            .iter()
            .map(|v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Tensor::from_raw(shape, vals), Back::Sigmoid { x: x.0 })
    }

    pub fn tanh(&mut self, x: TracedTensor) -> TracedTensor {
        let vals = self.value(x).values().iter().map(|v| v.tanh()).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Tensor::from_raw(shape, vals), Back::Tanh { x: x.0 })
    }

    pub fn exp(&mut self, x: TracedTensor) -> TracedTensor {
        let vals = self
            .value(x)
            .values()
            .iter()
            .map(|v| v.min(EXP_CLAMP).exp())
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Tensor::from_raw(shape, vals), Back::Exp { x: x.0 })
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: TracedTensor) -> TracedTensor {
        let (m, n) = self.value(x).as_matrix();
        let mut vals = self.value(x).values().to_vec();
        for row in vals.chunks_mut(n) {
            super::tensor::softmax_slice(row);
        }
        self.push(Tensor::from_raw(vec![m, n], vals), Back::Softmax { x: x.0 })
    }

    /// Row-wise log-softmax (the fused, numerically stable path used by
    /// cross-entropy and the policy log-probabilities).
    pub fn log_softmax(&mut self, x: TracedTensor) -> TracedTensor {
        let (m, n) = self.value(x).as_matrix();
        let mut vals = self.value(x).values().to_vec();
        for row in vals.chunks_mut(n) {
            super::tensor::log_softmax_slice(row);
        }
        self.push(
            Tensor::from_raw(vec![m, n], vals),
            Back::LogSoftmax { x: x.0 },
        )
    }

    /// Picks one column per row: out[r] = x[r, idx[r]]. Output is (m, 1).
    pub fn gather_cols(&mut self, x: TracedTensor, idx: &[usize]) -> Result<TracedTensor> {
        let (m, n) = self.value(x).as_matrix();
        if idx.len() != m || idx.iter().any(|&j| j >= n) {
            return Err(NnError::Contract(format!(
                "gather_cols needs {m} in-range indices, got {:?}",
                idx.len()
            )));
        }
        let xv = self.value(x).values();
        let vals = idx
            .iter()
            .enumerate()
            .map(|(r, &j)| xv[r * n + j])
            .collect();
        Ok(self.push(
            Tensor::from_raw(vec![m, 1], vals),
            Back::GatherCols {
                x: x.0,
                idx: idx.to_vec(),
            },
        ))
    }

    /// Embedding lookup: out[r, :] = table[idx[r], :].
    pub fn embed(&mut self, table: TracedTensor, idx: &[usize]) -> Result<TracedTensor> {
        let (rows, dim) = self.value(table).as_matrix();
        if idx.iter().any(|&j| j >= rows) {
            return Err(NnError::Contract(format!(
                "embedding index out of range (table has {rows} rows)"
            )));
        }
        let tv = self.value(table).values();
        let mut vals = Vec::with_capacity(idx.len() * dim);
        for &j in idx {
            vals.extend_from_slice(&tv[j * dim..(j + 1) * dim]);
        }
        Ok(self.push(
            Tensor::from_raw(vec![idx.len(), dim], vals),
            Back::EmbedRows {
                table: table.0,
                idx: idx.to_vec(),
            },
        ))
    }

    /// Concatenates two matrices with equal row counts along columns.
    pub fn concat_cols(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        let (ma, na) = self.value(a).as_matrix();
        let (mb, nb) = self.value(b).as_matrix();
        if ma != mb {
            return Err(NnError::Shape {
                op: "concat_cols",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let av = self.value(a).values();
        let bv = self.value(b).values();
        let mut vals = Vec::with_capacity(ma * (na + nb));
        for r in 0..ma {
            vals.extend_from_slice(&av[r * na..(r + 1) * na]);
            vals.extend_from_slice(&bv[r * nb..(r + 1) * nb]);
        }
        Ok(self.push(
            Tensor::from_raw(vec![ma, na + nb], vals),
            Back::ConcatCols { a: a.0, b: b.0 },
        ))
    }

    /// Elementwise minimum. On ties the gradient follows the first operand.
    pub fn min_elem(&mut self, a: TracedTensor, b: TracedTensor) -> Result<TracedTensor> {
        self.shapes_match("min_elem", a, b)?;
        let vals = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x.min(*y))
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(
            Tensor::from_raw(shape, vals),
            Back::MinElem { a: a.0, b: b.0 },
        ))
    }

    /// Clamp to [lo, hi]; the gradient passes only strictly inside the band
    /// or exactly at its edges when the input equals the bound.
    pub fn clamp(&mut self, x: TracedTensor, lo: f64, hi: f64) -> TracedTensor {
        let vals = self
            .value(x)
            .values()
            .iter()
            .map(|v| v.clamp(lo, hi))
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(
            Tensor::from_raw(shape, vals),
            Back::Clamp { x: x.0, lo, hi },
        )
    }

    /// Sum of all elements, a scalar.
    pub fn sum(&mut self, x: TracedTensor) -> TracedTensor {
        let s: f64 = self.value(x).values().iter().sum();
        self.push(Tensor::scalar(s), Back::Sum { x: x.0 })
    }

    /// Mean of all elements, a scalar.
    pub fn mean(&mut self, x: TracedTensor) -> TracedTensor {
        let n = self.value(x).numel().max(1);
        let s = self.sum(x);
        self.affine_scalar(s, 1.0 / n as f64, 0.0)
    }

    /// Affine map x*W + b in one call.
    pub fn affine(
        &mut self,
        x: TracedTensor,
        w: TracedTensor,
        b: TracedTensor,
    ) -> Result<TracedTensor> {
        let xw = self.matmul(x, w)?;
        self.add_row_bias(xw, b)
    }

    /// Cross-entropy of logits against integer labels: mean over rows of
    /// -log_softmax(logits)[label]. Log-softmax is fused for stability.
    pub fn cross_entropy(
        &mut self,
        logits: TracedTensor,
        labels: &[usize],
    ) -> Result<TracedTensor> {
        let lsm = self.log_softmax(logits);
        let picked = self.gather_cols(lsm, labels)?;
        let mean = self.mean(picked);
        Ok(self.affine_scalar(mean, -1.0, 0.0))
    }

    /// Reverse sweep from a scalar loss. Accumulates d(loss)/d(param) into
    /// every watched parameter's gradient buffer and clears the tape.
    pub fn backward(&mut self, loss: TracedTensor, params: &mut ParamSet) -> Result<()> {
        if loss.0 >= self.nodes.len() {
            return Err(NnError::Contract(
                "backward called on a value from a cleared tape".into(),
            ));
        }
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(NnError::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..self.nodes.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[i].back {
                Back::Leaf => {}
                Back::Param(id) => params.accumulate_grad(*id, &g)?,
                Back::Matmul { a, b } => {
                    let (m, k) = self.nodes[*a].value.as_matrix();
                    let (_, n) = self.nodes[*b].value.as_matrix();
                    let da = matmul_nt(g.values(), self.nodes[*b].value.values(), m, n, k);
                    let db = matmul_tn(self.nodes[*a].value.values(), g.values(), m, k, n);
                    accumulate(&mut grads, *a, self.nodes[*a].value.shape(), da);
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::AddRowBias { x, b } => {
                    let (m, n) = self.nodes[*x].value.as_matrix();
                    let mut db = vec![0.0; n];
                    for r in 0..m {
                        for (dv, gv) in db.iter_mut().zip(&g.values()[r * n..(r + 1) * n]) {
                            *dv += gv;
                        }
                    }
                    accumulate(
                        &mut grads,
                        *x,
                        self.nodes[*x].value.shape(),
                        g.values().to_vec(),
                    );
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::Add { a, b } => {
                    accumulate(
                        &mut grads,
                        *a,
                        self.nodes[*a].value.shape(),
                        g.values().to_vec(),
                    );
                    accumulate(
                        &mut grads,
                        *b,
                        self.nodes[*b].value.shape(),
                        g.values().to_vec(),
                    );
                }
                Back::Sub { a, b } => {
                    accumulate(
                        &mut grads,
                        *a,
                        self.nodes[*a].value.shape(),
                        g.values().to_vec(),
                    );
                    let db = g.values().iter().map(|v| -v).collect();
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::Mul { a, b } => {
                    let da = g
                        .values()
                        .iter()
                        .zip(self.nodes[*b].value.values())
                        .map(|(gv, bv)| gv * bv)
                        .collect();
                    let db = g
                        .values()
                        .iter()
                        .zip(self.nodes[*a].value.values())
                        .map(|(gv, av)| gv * av)
                        .collect();
                    accumulate(&mut grads, *a, self.nodes[*a].value.shape(), da);
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::AffineScalar { x, a } => {
                    let dx = g.values().iter().map(|gv| gv * a).collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Relu { x } => {
                    let dx = g
                        .values()
                        .iter()
                        .zip(self.nodes[*x].value.values())
                        .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Sigmoid { x } => {
                    let dx = g
                        .values()
                        .iter()
                        .zip(self.nodes[i].value.values())
                        .map(|(gv, s)| gv * s * (1.0 - s))
                        .collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Tanh { x } => {
                    let dx = g
                        .values()
                        .iter()
                        .zip(self.nodes[i].value.values())
                        .map(|(gv, t)| gv * (1.0 - t * t))
                        .collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Exp { x } => {
                    let dx = g
                        .values()
                        .iter()
                        .zip(self.nodes[i].value.values())
                        .map(|(gv, e)| gv * e)
                        .collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Softmax { x } => {
                    let (m, n) = self.nodes[i].value.as_matrix();
                    let s = self.nodes[i].value.values();
                    let mut dx = vec![0.0; m * n];
                    for r in 0..m {
                        let srow = &s[r * n..(r + 1) * n];
                        let grow = &g.values()[r * n..(r + 1) * n];
                        let dot: f64 = srow.iter().zip(grow).map(|(sv, gv)| sv * gv).sum();
                        for ((d, sv), gv) in dx[r * n..(r + 1) * n].iter_mut().zip(srow).zip(grow) {
                            *d = sv * (gv - dot);
                        }
                    }
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::LogSoftmax { x } => {
                    let (m, n) = self.nodes[i].value.as_matrix();
                    let lsm = self.nodes[i].value.values();
                    let mut dx = vec![0.0; m * n];
                    for r in 0..m {
                        let lrow = &lsm[r * n..(r + 1) * n];
                        let grow = &g.values()[r * n..(r + 1) * n];
                        let gsum: f64 = grow.iter().sum();
                        for ((d, lv), gv) in dx[r * n..(r + 1) * n].iter_mut().zip(lrow).zip(grow) {
                            *d = gv - lv.exp() * gsum;
                        }
                    }
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::GatherCols { x, idx } => {
                    let (m, n) = self.nodes[*x].value.as_matrix();
                    let mut dx = vec![0.0; m * n];
                    for (r, &j) in idx.iter().enumerate() {
                        dx[r * n + j] += g.values()[r];
                    }
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::EmbedRows { table, idx } => {
                    let (_, dim) = self.nodes[*table].value.as_matrix();
                    let mut dt = vec![0.0; self.nodes[*table].value.numel()];
                    for (r, &j) in idx.iter().enumerate() {
                        for (d, gv) in dt[j * dim..(j + 1) * dim]
                            .iter_mut()
                            .zip(&g.values()[r * dim..(r + 1) * dim])
                        {
                            *d += gv;
                        }
                    }
                    accumulate(&mut grads, *table, self.nodes[*table].value.shape(), dt);
                }
                Back::ConcatCols { a, b } => {
                    let (m, na) = self.nodes[*a].value.as_matrix();
                    let (_, nb) = self.nodes[*b].value.as_matrix();
                    let mut da = vec![0.0; m * na];
                    let mut db = vec![0.0; m * nb];
                    for r in 0..m {
                        let grow = &g.values()[r * (na + nb)..(r + 1) * (na + nb)];
                        da[r * na..(r + 1) * na].copy_from_slice(&grow[..na]);
                        db[r * nb..(r + 1) * nb].copy_from_slice(&grow[na..]);
                    }
                    accumulate(&mut grads, *a, self.nodes[*a].value.shape(), da);
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::MinElem { a, b } => {
                    let av = self.nodes[*a].value.values();
                    let bv = self.nodes[*b].value.values();
                    let mut da = vec![0.0; av.len()];
                    let mut db = vec![0.0; bv.len()];
                    for (k, gv) in g.values().iter().enumerate() {
                        if av[k] <= bv[k] {
                            da[k] = *gv;
                        } else {
                            db[k] = *gv;
                        }
                    }
                    accumulate(&mut grads, *a, self.nodes[*a].value.shape(), da);
                    accumulate(&mut grads, *b, self.nodes[*b].value.shape(), db);
                }
                Back::Clamp { x, lo, hi } => {
                    let dx = g
                        .values()
                        .iter()
                        .zip(self.nodes[*x].value.values())
                        .map(|(gv, xv)| if *xv >= *lo && *xv <= *hi { *gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
                Back::Sum { x } => {
                    let gv = g.values()[0];
                    let dx = vec![gv; self.nodes[*x].value.numel()];
                    accumulate(&mut grads, *x, self.nodes[*x].value.shape(), dx);
                }
            }
        }

        self.nodes.clear();
        self.watched.clear();
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Tensor>], node: usize, shape: &[usize], add: Vec<f64>) {
    match &mut grads[node] {
        Some(t) => {
            for (g, a) in t.values_mut().iter_mut().zip(&add) {
                *g += a;
            }
        }
        slot @ None => {
            *slot = Some(Tensor::from_raw(shape.to_vec(), add));
        }
    }
}
