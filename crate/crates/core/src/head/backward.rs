use super::forward::{load_tile, pass, Workspace, TILE};
use super::kernel::{sum, unfold_gradient, weight_grads, Linear};
use super::params::{logistic, HeadParams};
use crate::cover::CoverVector;
use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Residuals at or below this many percentage points count as an exact fit
/// and contribute a zero subgradient.
pub const ZERO_RESIDUAL: f64 = 1e-9;

/// Result of one backward pass: the loss, the prediction it was computed
/// from, and the gradient laid out like [`HeadParams::flat`].
#[derive(Debug, Clone)]
pub struct Backward {
    pub loss: f64,
    pub cover: CoverVector,
    pub grad: Vec<f64>,
}

/// Loss and exact gradient of the species-mean absolute cover error
/// (percentage points) with respect to every head parameter.
pub fn backward(
    features: &FeatureMap,
    params: &HeadParams,
    target: &CoverVector,
) -> Result<Backward> {
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; params.len()];
    let (loss, cover) = backward_with(features, params, target, &mut ws, &mut grad)?;
    Ok(Backward { loss, cover, grad })
}

/// Like [`backward`] but writes into caller-owned buffers. `grad` is
/// overwritten.
pub fn backward_with(
    features: &FeatureMap,
    params: &HeadParams,
    target: &CoverVector,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> Result<(f64, CoverVector)> {
    let s = params.species();
    if target.len() != s {
        return Err(Error::Dimension(format!(
            "target has {} species, head has {s}",
            target.len()
        )));
    }
    if grad.len() != params.len() {
        return Err(Error::Dimension(
            "gradient buffer has the wrong length".into(),
        ));
    }
    let sums = pass(features, params, ws)?;
    let cover = sums.cover()?;
    let den = sums.denominator();

    // dL/dcover_p as a subgradient of |.|, then the chain through
    // cover_p = 100 * N_p / D.
    let upstream: Vec<f64> = cover
        .values()
        .iter()
        .zip(target.values())
        .map(|(c, t)| {
            let r = c - t;
            if r.abs() <= ZERO_RESIDUAL {
                0.0
            } else {
                r.signum() / s as f64
            }
        })
        .collect();
    let loss = super::forward::loss_mae(&cover, target);
    let d_mass: Vec<f64> = upstream.iter().map(|u| 100.0 * u / den).collect();
    let d_den: f64 = -upstream
        .iter()
        .zip(cover.values())
        .map(|(u, c)| u * c)
        .sum::<f64>()
        / den;

    grad.fill(0.0);
    let lin = Linear::of(params);
    let d_kappa = backward_tiles(features, &lin, params.kappa(), d_den, &d_mass, ws, grad);
    let last = grad.len() - 1;
    grad[last] = d_kappa * logistic(params.kappa_raw());
    unfold_gradient(params, grad);

    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok((loss, cover))
}

fn backward_tiles(
    features: &FeatureMap,
    lin: &Linear,
    kappa: f64,
    d_den: f64,
    d_mass: &[f64],
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    let s = d_mass.len();
    let rows = lin.bias.len();
    let dim = lin.dim;
    let n = ws.pixels;
    let bias_off = rows * dim;
    let mut d_kappa = 0.0;
    let mut start = 0;
    while start < n {
        let len = TILE.min(n - start);
        load_tile(features, start, len, &mut ws.ftile);
        let total = &ws.total[start..start + len];
        let q = &ws.bg_share[start..start + len];
        // per-pixel score gradients, one TILE row per score row and zero past
        // `len`; the last two rows first hold factors shared by all species
        ws.tile.fill(0.0);
        let (g, shared) = ws.tile.split_at_mut(s * TILE);
        let (via_total, split) = shared.split_at_mut(TILE);
        let mut dk = 0.0;
        for t in 0..len {
            let inv = 1.0 / (kappa + total[t]);
            let a = (1.0 - q[t]) * inv * inv;
            // A_bio + A_bg sums 1 - (1 - q) kappa / (kappa + T) per pixel
            via_total[t] = d_den * kappa * a;
            split[t] = d_den * kappa * inv * q[t] * (1.0 - q[t]);
            dk += a * total[t];
        }
        d_kappa -= d_den * dk;
        for p in 0..s {
            let probs = &ws.probs[p * n + start..p * n + start + len];
            for ((o, &pr), &v) in g[p * TILE..].iter_mut().zip(probs).zip(&via_total[..len]) {
                *o = (d_mass[p] + v) * pr * (1.0 - pr);
            }
        }
        via_total.copy_from_slice(split);
        for v in split.iter_mut() {
            *v = -*v;
        }
        for k in 0..rows {
            grad[bias_off + k] += sum(&ws.tile[k * TILE..k * TILE + len]);
        }
        weight_grads(&ws.tile, &ws.ftile, rows, dim, grad);
        start += len;
    }
    d_kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::head::forward::forward;
    use crate::registry::SpeciesRegistry;

    #[test]
    fn zero_gradient_at_exact_fit() {
        let data: Vec<f32> = (0..4 * 24)
            .map(|i| ((i * 17 % 29) as f32 - 14.0) / 7.0)
            .collect();
        let f = FeatureMap::from_planar(6, 4, 4, data).unwrap();
        let p = HeadParams::init(SpeciesRegistry::new(["a", "b", "c"]).unwrap(), 4, 2).unwrap();
        let (_, _, cover) = forward(&f, &p).unwrap();
        let b = backward(&f, &p, &cover).unwrap();
        assert_eq!(b.loss, 0.0);
        assert!(b.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn target_length_checked() {
        let f = FeatureMap::from_planar(1, 1, 1, vec![0.0]).unwrap();
        let p = HeadParams::init(SpeciesRegistry::new(["a"]).unwrap(), 1, 0).unwrap();
        assert!(backward(&f, &p, &CoverVector::zeros(2)).is_err());
    }
}
