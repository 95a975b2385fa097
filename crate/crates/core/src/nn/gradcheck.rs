use rand::Rng;

use super::params::ParamSet;
use super::Result;

/// Coordinates above this count are spot-checked on a random subsample
/// instead of exhaustively.
const EXHAUSTIVE_LIMIT: usize = 10_000;

/// Compares analytic gradients against central finite differences.
///
/// `loss_fn` must evaluate the model's scalar loss for the current parameter
/// values without mutating them; the analytic side is whatever `backward`
/// left in the gradient buffers before this call. Returns the maximum
/// relative error max |g_an - g_fd| / max(1, |g_an|, |g_fd|) over the checked
/// coordinates.
pub fn gradient_check<F, R>(
    params: &mut ParamSet,
    mut loss_fn: F,
    h: f64,
    rng: &mut R,
) -> Result<f64>
where
    F: FnMut(&ParamSet) -> Result<f64>,
    R: Rng,
{
    let total: usize = params.iter().map(|p| p.value.numel()).sum();
    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad.values().to_vec()).collect();

    let mut worst = 0.0f64;
    for (pi, id) in params.ids().enumerate().collect::<Vec<_>>() {
        let numel = params.get(id).value.numel();
        #[allow(clippy::needless_range_loop)]
        // k indexes both the analytic table and the live values
        for k in 0..numel {
            if total > EXHAUSTIVE_LIMIT && !rng.random_bool(EXHAUSTIVE_LIMIT as f64 / total as f64)
            {
                continue;
            }
            let orig = params.get(id).value.values()[k];
            params.get_mut(id).value.values_mut()[k] = orig + h;
            let plus = loss_fn(params)?;
            params.get_mut(id).value.values_mut()[k] = orig - h;
            let minus = loss_fn(params)?;
            params.get_mut(id).value.values_mut()[k] = orig;

            let fd = (plus - minus) / (2.0 * h);
            let an = analytic[pi][k];
            let denom = 1.0f64.max(an.abs()).max(fd.abs());
            worst = worst.max((an - fd).abs() / denom);
        }
    }
    Ok(worst)
}
