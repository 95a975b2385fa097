use rand::Rng;

use super::params::{ParamId, ParamSet};
use super::tape::{Tape, TracedTensor};
use super::Result;

/// Fully connected layer, y = x*W + b.
#[derive(Debug, Clone)]
pub struct Affine {
    pub w: ParamId,
    pub b: ParamId,
}

impl Affine {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let w = params.add_uniform(format!("{prefix}.w"), in_dim, out_dim, in_dim, rng);
        let b = params.add_zeros(format!("{prefix}.b"), out_dim);
        Self { w, b }
    }

    /// Like `new` but with zero-initialized weights, for output heads that
    /// should start uniform.
    pub fn new_zeroed(params: &mut ParamSet, prefix: &str, in_dim: usize, out_dim: usize) -> Self {
        let w = params.add(
            format!("{prefix}.w"),
            super::tensor::Tensor::zeros(vec![in_dim, out_dim]),
        );
        let b = params.add_zeros(format!("{prefix}.b"), out_dim);
        Self { w, b }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        x: TracedTensor,
    ) -> Result<TracedTensor> {
        let w = tape.param(params, self.w);
        let b = tape.param(params, self.b);
        tape.affine(x, w, b)
    }
}

/// Single-layer gated recurrent cell:
///
///   z = sigmoid(x*Wz + h*Uz + bz)
///   r = sigmoid(x*Wr + h*Ur + br)
///   c = tanh(x*Wc + (r.h)*Uc + bc)
///   h' = h + z.(c - h)
#[derive(Debug, Clone)]
pub struct GruCell {
    pub hidden: usize,
    wz: ParamId,
    uz: ParamId,
    bz: ParamId,
    wr: ParamId,
    ur: ParamId,
    br: ParamId,
    wc: ParamId,
    uc: ParamId,
    bc: ParamId,
}

impl GruCell {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut gate = |g: &str, dim: usize| {
            params.add_uniform(format!("{prefix}.{g}"), dim, hidden, dim, rng)
        };
        let wz = gate("wz", in_dim);
        let uz = gate("uz", hidden);
        let wr = gate("wr", in_dim);
        let ur = gate("ur", hidden);
        let wc = gate("wc", in_dim);
        let uc = gate("uc", hidden);
        let bz = params.add_zeros(format!("{prefix}.bz"), hidden);
        let br = params.add_zeros(format!("{prefix}.br"), hidden);
        let bc = params.add_zeros(format!("{prefix}.bc"), hidden);
        Self {
            hidden,
            wz,
            uz,
            bz,
            wr,
            ur,
            br,
            wc,
            uc,
            bc,
        }
    }

    pub fn step(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        x: TracedTensor,
        h: TracedTensor,
    ) -> Result<TracedTensor> {
        let gate = |tape: &mut Tape, w, u, b, x, h| -> Result<TracedTensor> {
            let (w, u, b) = (
                tape.param(params, w),
                tape.param(params, u),
                tape.param(params, b),
            );
            let xw = tape.matmul(x, w)?;
            let hu = tape.matmul(h, u)?;
            let s = tape.add(xw, hu)?;
            tape.add_row_bias(s, b)
        };
        let z_pre = gate(tape, self.wz, self.uz, self.bz, x, h)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = gate(tape, self.wr, self.ur, self.br, x, h)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let c_pre = gate(tape, self.wc, self.uc, self.bc, x, rh)?;
        let c = tape.tanh(c_pre);
        let delta = tape.sub(c, h)?;
        let zd = tape.mul(z, delta)?;
        tape.add(h, zd)
    }

    /// Runs the cell over a sequence of equal-batch inputs from a zero state
    /// and returns the final hidden state.
    pub fn run(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        sequence: &[TracedTensor],
    ) -> Result<TracedTensor> {
        let batch = sequence
            .first()
            .map(|t| tape.value(*t).as_matrix().0)
            .unwrap_or(1);
        let mut h = tape.constant(super::tensor::Tensor::zeros(vec![batch, self.hidden]));
        for &x in sequence {
            h = self.step(tape, params, x, h)?;
        }
        Ok(h)
    }
}

/// Learned token-embedding table.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
}

impl Embedding {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        vocab: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let table = params.add_uniform(format!("{prefix}.table"), vocab, dim, dim, rng);
        Self { table, dim }
    }

    /// Looks up one row per index; output is (len, dim).
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        indices: &[usize],
    ) -> Result<TracedTensor> {
        let t = tape.param(params, self.table);
        tape.embed(t, indices)
    }
}

/// Strided-patch affine encoder for pixel observations: cuts an image into
/// non-overlapping patches, maps each through a shared affine+ReLU, and
/// mean-pools into one embedding. The input must arrive as a (patches,
/// patch_dim) matrix produced by [`PatchAffine::patches`].
#[derive(Debug, Clone)]
pub struct PatchAffine {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub patch: usize,
    inner: Affine,
}

impl PatchAffine {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        height: usize,
        width: usize,
        channels: usize,
        patch: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        assert!(patch > 0 && height.is_multiple_of(patch) && width.is_multiple_of(patch));
        let patch_dim = patch * patch * channels;
        let inner = Affine::new(params, prefix, patch_dim, out_dim, rng);
        Self {
            height,
            width,
            channels,
            patch,
            inner,
        }
    }

    /// Rearranges a flat HxWxC image (channel-last) into (patches, patch_dim).
    pub fn patches(&self, image: &[f64]) -> Vec<f64> {
        let (h, w, c, p) = (self.height, self.width, self.channels, self.patch);
        debug_assert_eq!(image.len(), h * w * c);
        let mut out = Vec::with_capacity(h * w * c);
        for py in (0..h).step_by(p) {
            for px in (0..w).step_by(p) {
                for dy in 0..p {
                    for dx in 0..p {
                        let base = ((py + dy) * w + (px + dx)) * c;
                        out.extend_from_slice(&image[base..base + c]);
                    }
                }
            }
        }
        out
    }

    pub fn num_patches(&self) -> usize {
        (self.height / self.patch) * (self.width / self.patch)
    }

    /// Encodes one image's patch matrix into a (1, out_dim) embedding.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        patch_matrix: TracedTensor,
    ) -> Result<TracedTensor> {
        let n = self.num_patches();
        let h = self.inner.forward(tape, params, patch_matrix)?;
        let h = tape.relu(h);
        // mean over patches = (1/n) * ones(1,n) * H
        let ones = tape.constant(super::tensor::Tensor::from_raw(vec![1, n], vec![1.0; n]));
        let pooled = tape.matmul(ones, h)?;
        Ok(tape.affine_scalar(pooled, 1.0 / n as f64, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{gradient_check, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn patch_rearrangement_keeps_every_pixel_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut ps = ParamSet::new();
        let enc = PatchAffine::new(&mut ps, "px", 4, 6, 2, 2, 3, &mut rng);
        assert_eq!(enc.num_patches(), 6);
        let image: Vec<f64> = (0..4 * 6 * 2).map(|i| i as f64).collect();
        let patches = enc.patches(&image);
        assert_eq!(patches.len(), image.len());
        let mut sorted = patches.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect = image.clone();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, expect);
        // first patch is the top-left 2x2 block, channel-last
        assert_eq!(&patches[..8], &[0.0, 1.0, 2.0, 3.0, 12.0, 13.0, 14.0, 15.0]);
    }

    #[test]
    fn patch_encoder_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut ps = ParamSet::new();
        let enc = PatchAffine::new(&mut ps, "px", 6, 6, 2, 3, 4, &mut rng);
        let image: Vec<f64> = (0..6 * 6 * 2).map(|i| ((i as f64) * 0.13).sin()).collect();
        let patches = enc.patches(&image);
        let rows = enc.num_patches();
        let cols = patches.len() / rows;

        let run = |ps: &ParamSet, tape: &mut Tape| -> Result<TracedTensor> {
            let p = tape.constant(Tensor::from_raw(vec![rows, cols], patches.clone()));
            let emb = enc.forward(tape, ps, p)?;
            let sq = tape.mul(emb, emb)?;
            Ok(tape.sum(sq))
        };
        let mut tape = Tape::new();
        let loss = run(&ps, &mut tape).unwrap();
        tape.backward(loss, &mut ps).unwrap();
        let err = gradient_check(
            &mut ps,
            |ps| {
                let mut tape = Tape::new();
                let l = run(ps, &mut tape)?;
                Ok(tape.value(l).item())
            },
            1e-5,
            &mut rng,
        )
        .unwrap();
        assert!(err < 1e-4, "patch encoder gradient error {err}");
    }
}
