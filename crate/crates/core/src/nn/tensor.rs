use super::{NnError, Result};

/// Logits further than this below the row maximum are pinned before
/// exponentiation, so softmax never sees an argument outside [-80, 0].
pub(crate) const EXP_CLAMP: f64 = 80.0;

/// Dense n-dimensional real array in row-major order.
///
/// Rank 1 and 2 cover every use in this crate; the shape is kept as a vector
/// so checkpoints can round-trip arbitrary ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, rejecting shape/length mismatches and non-finite values.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != values.len() {
            return Err(NnError::Shape {
                op: "tensor construction",
                lhs: shape,
                rhs: vec![values.len()],
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("tensor construction"));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; numel],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![1],
            values: vec![v],
        }
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Interprets the tensor as a matrix: rank 2 as-is, rank 1 as a single row.
    pub fn as_matrix(&self) -> (usize, usize) {
        match self.shape.len() {
            2 => (self.shape[0], self.shape[1]),
            1 => (1, self.shape[0]),
            _ => (self.numel(), 1),
        }
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1);
        self.values[0]
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub(crate) fn from_raw(shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        Self { shape, values }
    }
}

/// C = A(m,k) * B(k,n), accumulated in p-ascending order for every output
/// element so batched and single-row forwards are bit-identical.
pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    out
}

/// C = A(m,k) * B(n,k)^T.
pub(crate) fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            out[i * n + j] = a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// C = A(m,k)^T * B(m,n).
pub(crate) fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let b_row = &b[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Numerically stable in-place softmax of one row: subtract the max, pin
/// shifted logits at -80, exponentiate, normalize.
pub fn softmax_slice(row: &mut [f64]) {
    if row.is_empty() {
        return;
    }
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        let z = (*v - max).max(-EXP_CLAMP);
        *v = z.exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// In-place log-softmax of one row, sharing the shift-and-clamp scheme of
/// [`softmax_slice`].
pub fn log_softmax_slice(row: &mut [f64]) {
    if row.is_empty() {
        return;
    }
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).max(-EXP_CLAMP);
        sum += v.exp();
    }
    let log_sum = sum.ln();
    for v in row.iter_mut() {
        *v -= log_sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_rejects_bad_shape() {
        assert!(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(matches!(
            Tensor::new(vec![2], vec![1.0, f64::NAN]),
            Err(NnError::NonFinite(_))
        ));
        assert!(Tensor::new(vec![1], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let mut row = vec![0.0; 5];
        softmax_slice(&mut row);
        for v in &row {
            assert_eq!(*v, 0.2);
        }
    }

    #[test]
    fn matmul_hand_case() {
        // [[1,2],[3,4]] * [[5,6],[7,8]] = [[19,22],[43,50]]
        let c = matmul(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0], 2, 2, 2);
        assert_eq!(c, vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transposed_matmuls_agree_with_plain() {
        let a = [1.0, -2.0, 0.5, 3.0, 4.0, -1.0]; // 2x3
        let b = [2.0, 1.0, 0.0, -1.0, 1.5, 2.5]; // 3x2
        let c = matmul(&a, &b, 2, 3, 2);
        // A * B == A * ((B^T)^T) via matmul_nt with B^T laid out as (n,k)
        let bt = [2.0, 0.0, 1.5, 1.0, -1.0, 2.5]; // 2x3 = B^T
        let c_nt = matmul_nt(&a, &bt, 2, 3, 2);
        assert_eq!(c, c_nt);
        // (A^T)^T * B via matmul_tn with A^T laid out as (m=3,k=2)
        let at = [1.0, 3.0, -2.0, 4.0, 0.5, -1.0]; // 3x2 = A^T
        let c_tn = matmul_tn(&at, &b, 3, 2, 2);
        assert_eq!(c, c_tn);
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one(mut logits in proptest::collection::vec(-50.0f64..50.0, 1..12)) {
            softmax_slice(&mut logits);
            let sum: f64 = logits.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(logits.iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn softmax_shift_invariant(logits in proptest::collection::vec(-30.0f64..30.0, 2..8), shift in -100.0f64..100.0) {
            let mut a = logits.clone();
            let mut b: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            softmax_slice(&mut a);
            softmax_slice(&mut b);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn softmax_finite_on_huge_logits(logits in proptest::collection::vec(-1e12f64..1e12, 2..8)) {
            let mut a = logits;
            softmax_slice(&mut a);
            let sum: f64 = a.iter().sum();
            prop_assert!(a.iter().all(|p| p.is_finite()));
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
