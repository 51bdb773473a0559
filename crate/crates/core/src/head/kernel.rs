//! Tile kernels for the head. Every kernel has a portable version and an
//! AVX2 version chosen at runtime; both perform the same IEEE operations in
//! the same order (no fused multiply-add), so results are bit-identical.

use super::params::HeadParams;

/// Pixels per tile. Tile rows are always `TILE` long; pixels past the end of
/// the image are zero features.
pub(crate) const TILE: usize = 128;
const LANES: usize = 4;

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_164_9e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
// adding 1.5 * 2^52 rounds to an integer held in the low mantissa bits
const ROUND: f64 = 6_755_399_441_055_744.0;
const EXP_MIN: f64 = -708.0;
const EXP_MAX: f64 = 709.0;
// above ln(f64::MAX) the result overflows to infinity
const EXP_OVERFLOW: f64 = 709.782_712_893_384;
// Taylor coefficients 1/0! .. 1/13!
const EXP_COEF: [f64; 14] = [
    1.0,
    1.0,
    0.5,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5_040.0,
    1.0 / 40_320.0,
    1.0 / 362_880.0,
    1.0 / 3_628_800.0,
    1.0 / 39_916_800.0,
    1.0 / 479_001_600.0,
    1.0 / 6_227_020_800.0,
];

/// `exp(x)` accurate to a few ulp on `[-708, 709]`, infinite past overflow
/// and clamped otherwise.
#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    if x > EXP_OVERFLOW {
        return f64::INFINITY;
    }
    let x = x.max(EXP_MIN).min(EXP_MAX);
    let t = x * LOG2E + ROUND;
    let k = t - ROUND;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Estrin's scheme: shallow dependency chains vectorize well
    let c = &EXP_COEF;
    let r2 = r * r;
    let r4 = r2 * r2;
    let r8 = r4 * r4;
    let b: [f64; 7] = std::array::from_fn(|i| c[2 * i] + c[2 * i + 1] * r);
    let d0 = (b[0] + b[1] * r2) + (b[2] + b[3] * r2) * r4;
    let d1 = (b[4] + b[5] * r2) + b[6] * r4;
    let p = d0 + d1 * r8;
    let ki = (t.to_bits() as i64).wrapping_sub(ROUND.to_bits() as i64);
    p * f64::from_bits(((ki + 1023) as u64) << 52)
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

#[cfg(target_arch = "x86_64")]
fn use_avx2() -> bool {
    std::arch::is_x86_feature_detected!("avx2")
}

/// `out[k * TILE + t] = bias[k] + sum_d weights[k * dim + d] * ftile[d * TILE + t]`,
/// accumulated in increasing `d`.
pub(crate) fn scores(lin: &Linear, ftile: &[f64], out: &mut [f64]) {
    let rows = lin.bias.len();
    assert!(ftile.len() >= lin.dim * TILE && out.len() >= rows * TILE);
    assert_eq!(lin.weights.len(), rows * lin.dim);
    #[cfg(target_arch = "x86_64")]
    if use_avx2() {
        // SAFETY: AVX2 is available and the slice bounds were checked above
        return unsafe { avx2::scores(lin, ftile, out) };
    }
    let dim = lin.dim;
    for k in 0..rows {
        let w = &lin.weights[k * dim..(k + 1) * dim];
        let o = &mut out[k * TILE..(k + 1) * TILE];
        for (t, o) in o.iter_mut().enumerate() {
            let mut acc = lin.bias[k];
            for (d, &wd) in w.iter().enumerate() {
                acc += wd * ftile[d * TILE + t];
            }
            *o = acc;
        }
    }
}

/// Applies the logistic function to one tile row.
pub(crate) fn logistic_row(row: &mut [f64]) {
    assert_eq!(row.len(), TILE);
    #[cfg(target_arch = "x86_64")]
    if use_avx2() {
        // SAFETY: AVX2 is available and the row holds TILE values
        return unsafe { avx2::logistic_row(row) };
    }
    for x in row {
        *x = logistic(*x);
    }
}

/// Sum with four interleaved partial sums, reduced as `(l0 + l2) + (l1 + l3)`.
pub(crate) fn sum(xs: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let chunks = xs.chunks_exact(LANES);
    let tail: f64 = chunks.remainder().iter().sum();
    for c in chunks {
        for j in 0..LANES {
            acc[j] += c[j];
        }
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// `grad[k * dim + d] += <g_k, f_d>` over full tile rows.
pub(crate) fn weight_grads(g: &[f64], ftile: &[f64], rows: usize, dim: usize, grad: &mut [f64]) {
    assert!(g.len() >= rows * TILE && ftile.len() >= dim * TILE && grad.len() >= rows * dim);
    #[cfg(target_arch = "x86_64")]
    if use_avx2() {
        // SAFETY: AVX2 is available and the slice bounds were checked above
        return unsafe { avx2::weight_grads(g, ftile, rows, dim, grad) };
    }
    for k in 0..rows {
        let gk = &g[k * TILE..(k + 1) * TILE];
        for d in 0..dim {
            let f = &ftile[d * TILE..(d + 1) * TILE];
            let mut acc = [0.0; LANES];
            for (a, b) in gk.chunks_exact(LANES).zip(f.chunks_exact(LANES)) {
                for j in 0..LANES {
                    acc[j] += a[j] * b[j];
                }
            }
            grad[k * dim + d] += (acc[0] + acc[2]) + (acc[1] + acc[3]);
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use super::*;
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn scores(lin: &Linear, ftile: &[f64], out: &mut [f64]) {
        let dim = lin.dim;
        let fp = ftile.as_ptr();
        let op = out.as_mut_ptr();
        for k in 0..lin.bias.len() {
            let w = &lin.weights[k * dim..(k + 1) * dim];
            let b = _mm256_set1_pd(lin.bias[k]);
            for t in (0..TILE).step_by(2 * LANES) {
                let (mut a0, mut a1) = (b, b);
                for (d, &wd) in w.iter().enumerate() {
                    let wv = _mm256_set1_pd(wd);
                    let x = fp.add(d * TILE + t);
                    a0 = _mm256_add_pd(a0, _mm256_mul_pd(wv, _mm256_loadu_pd(x)));
                    a1 = _mm256_add_pd(a1, _mm256_mul_pd(wv, _mm256_loadu_pd(x.add(LANES))));
                }
                _mm256_storeu_pd(op.add(k * TILE + t), a0);
                _mm256_storeu_pd(op.add(k * TILE + t + LANES), a1);
            }
        }
    }

    #[inline]
    #[target_feature(enable = "avx2")]
    unsafe fn exp4(x: __m256d) -> __m256d {
        let overflow = _mm256_cmp_pd::<_CMP_GT_OQ>(x, _mm256_set1_pd(EXP_OVERFLOW));
        let x = _mm256_min_pd(
            _mm256_max_pd(x, _mm256_set1_pd(EXP_MIN)),
            _mm256_set1_pd(EXP_MAX),
        );
        let round = _mm256_set1_pd(ROUND);
        let t = _mm256_add_pd(_mm256_mul_pd(x, _mm256_set1_pd(LOG2E)), round);
        let k = _mm256_sub_pd(t, round);
        let r = _mm256_sub_pd(
            _mm256_sub_pd(x, _mm256_mul_pd(k, _mm256_set1_pd(LN2_HI))),
            _mm256_mul_pd(k, _mm256_set1_pd(LN2_LO)),
        );
        let c = |i: usize| _mm256_set1_pd(EXP_COEF[i]);
        let add = |a, b| _mm256_add_pd(a, b);
        let mul = |a, b| _mm256_mul_pd(a, b);
        let r2 = mul(r, r);
        let r4 = mul(r2, r2);
        let r8 = mul(r4, r4);
        let b: [__m256d; 7] = std::array::from_fn(|i| add(c(2 * i), mul(c(2 * i + 1), r)));
        let d0 = add(add(b[0], mul(b[1], r2)), mul(add(b[2], mul(b[3], r2)), r4));
        let d1 = add(add(b[4], mul(b[5], r2)), mul(b[6], r4));
        let p = add(d0, mul(d1, r8));
        let ki = _mm256_sub_epi64(_mm256_castpd_si256(t), _mm256_castpd_si256(round));
        let bits = _mm256_slli_epi64::<52>(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)));
        let y = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
        _mm256_blendv_pd(y, _mm256_set1_pd(f64::INFINITY), overflow)
    }

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn logistic_row(row: &mut [f64]) {
        let one = _mm256_set1_pd(1.0);
        let zero = _mm256_setzero_pd();
        let p = row.as_mut_ptr();
        for t in (0..TILE).step_by(LANES) {
            let x = _mm256_loadu_pd(p.add(t));
            let e = exp4(_mm256_sub_pd(zero, x));
            _mm256_storeu_pd(p.add(t), _mm256_div_pd(one, _mm256_add_pd(one, e)));
        }
    }

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn weight_grads(
        g: &[f64],
        ftile: &[f64],
        rows: usize,
        dim: usize,
        grad: &mut [f64],
    ) {
        let gp = g.as_ptr();
        let fp = ftile.as_ptr();
        for k in 0..rows {
            for d in 0..dim {
                let mut acc = _mm256_setzero_pd();
                for t in (0..TILE).step_by(LANES) {
                    let a = _mm256_loadu_pd(gp.add(k * TILE + t));
                    let b = _mm256_loadu_pd(fp.add(d * TILE + t));
                    acc = _mm256_add_pd(acc, _mm256_mul_pd(a, b));
                }
                let mut l = [0.0; LANES];
                _mm256_storeu_pd(l.as_mut_ptr(), acc);
                grad[k * dim + d] += (l[0] + l[2]) + (l[1] + l[3]);
            }
        }
    }
}

/// Weights and biases acting on raw features, with the parameters'
/// normalization folded in: `W' = W / sd`, `b' = b - W' mean`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Linear {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub dim: usize,
}

impl Linear {
    pub fn of(params: &HeadParams) -> Self {
        let dim = params.feature_dim();
        let mut weights = params.weights().to_vec();
        let mut bias = params.bias().to_vec();
        if let Some(norm) = &params.normalization {
            for (k, b) in bias.iter_mut().enumerate() {
                let row = &mut weights[k * dim..(k + 1) * dim];
                for d in 0..dim {
                    row[d] /= norm.sd[d];
                    *b -= row[d] * norm.mean[d];
                }
            }
        }
        Self { weights, bias, dim }
    }
}

/// Chains gradients with respect to the folded weights back to the stored
/// parameters. `grad` holds `[dW' | db' | ..]` on entry.
pub(crate) fn unfold_gradient(params: &HeadParams, grad: &mut [f64]) {
    let Some(norm) = &params.normalization else {
        return;
    };
    let dim = params.feature_dim();
    let off = params.bias_offset();
    for k in 0..params.rows() {
        let gb = grad[off + k];
        for d in 0..dim {
            grad[k * dim + d] = (grad[k * dim + d] - gb * norm.mean[d]) / norm.sd[d];
        }
    }
}
