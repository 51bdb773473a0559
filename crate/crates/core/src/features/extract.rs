use super::FeatureMap;
use crate::image::RgbImage;

pub const FEATURE_CHANNELS: usize = 14;

/// Channel order of [`extract`]'s output.
pub const CHANNEL_NAMES: [&str; FEATURE_CHANNELS] = [
    "r",
    "g",
    "b",
    "mean_r",
    "mean_g",
    "mean_b",
    "sd_r",
    "sd_g",
    "sd_b",
    "grad_mag",
    "hue_m1_cos",
    "hue_m1_sin",
    "hue_m2_len",
    "mean_sat",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ExtractorConfig {
    /// Half-width of the square window; the window is `(2r+1)^2` pixels.
    pub radius: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self { radius: 3 }
    }
}

/// Summed-area table over an edge-clamped padding of `pad` pixels.
struct Integral<T> {
    stride: usize,
    sums: Vec<T>,
}

impl<T> Integral<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    fn build(width: usize, height: usize, pad: usize, value: impl Fn(usize, usize) -> T) -> Self {
        let pw = width + 2 * pad;
        let ph = height + 2 * pad;
        let stride = pw + 1;
        let mut sums = vec![T::default(); stride * (ph + 1)];
        for py in 0..ph {
            let y = py.saturating_sub(pad).min(height - 1);
            let mut row = T::default();
            for px in 0..pw {
                let x = px.saturating_sub(pad).min(width - 1);
                row = row + value(x, y);
                sums[(py + 1) * stride + px + 1] = sums[py * stride + px + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Sum over the window centered on image pixel (x, y).
    #[inline]
    fn window(&self, x: usize, y: usize, r: usize) -> T {
        // padded coordinates of the window are x..=x+2r, y..=y+2r
        let s = self.stride;
        let (x0, y0, x1, y1) = (x, y, x + 2 * r + 1, y + 2 * r + 1);
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0]
    }
}

fn hue_sat(rgb: [u8; 3]) -> (f64, f64) {
    let [r, g, b] = rgb.map(|v| v as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if max <= 0.0 || delta <= 0.0 {
        return (0.0, 0.0);
    }
    let sat = delta / max;
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    (sector * std::f64::consts::PI / 3.0, sat)
}

/// Sobel gradient magnitude of the intensity `(r+g+b)/(3*255)`, edge-clamped,
/// scaled so an intensity ramp rising by 1 per pixel has magnitude 1.
pub fn intensity_gradient(image: &RgbImage) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    // summed channels, in units of 1/765 intensity
    let intensity = |x: isize, y: isize| -> i32 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        let [r, g, b] = image.get(x, y);
        r as i32 + g as i32 + b as i32
    };
    let scale = 1.0 / (8.0 * 3.0 * 255.0);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = intensity(x + 1, y - 1) + 2 * intensity(x + 1, y) + intensity(x + 1, y + 1)
                - intensity(x - 1, y - 1)
                - 2 * intensity(x - 1, y)
                - intensity(x - 1, y + 1);
            let gy = intensity(x - 1, y + 1) + 2 * intensity(x, y + 1) + intensity(x + 1, y + 1)
                - intensity(x - 1, y - 1)
                - 2 * intensity(x, y - 1)
                - intensity(x + 1, y - 1);
            out.push((gx as f64).hypot(gy as f64) * scale);
        }
    }
    out
}

/// Computes the 14 per-pixel features listed in [`CHANNEL_NAMES`].
///
/// Window statistics use a `(2r+1)^2` square with clamp-to-edge borders.
/// Color statistics are computed in exact integer arithmetic, so a constant
/// image has local standard deviations of exactly zero.
pub fn extract(image: &RgbImage, config: ExtractorConfig) -> FeatureMap {
    let (w, h) = (image.width(), image.height());
    let r = config.radius.max(1);
    let n = ((2 * r + 1) * (2 * r + 1)) as i64;
    let npx = w * h;
    let mut map = FeatureMap::zeros(w, h, FEATURE_CHANNELS);
    if npx == 0 {
        return map;
    }

    let sums: Vec<Integral<i64>> = (0..3)
        .map(|c| Integral::build(w, h, r, |x, y| image.get(x, y)[c] as i64))
        .collect();
    let squares: Vec<Integral<i64>> = (0..3)
        .map(|c| {
            Integral::build(w, h, r, |x, y| {
                let v = image.get(x, y)[c] as i64;
                v * v
            })
        })
        .collect();

    let hs: Vec<(f64, f64)> = (0..npx).map(|i| hue_sat(image.get(i % w, i / w))).collect();
    let hue_at = |x: usize, y: usize| hs[y * w + x];
    let m1c = Integral::build(w, h, r, |x, y| {
        let (hue, s) = hue_at(x, y);
        s * hue.cos()
    });
    let m1s = Integral::build(w, h, r, |x, y| {
        let (hue, s) = hue_at(x, y);
        s * hue.sin()
    });
    let m2c = Integral::build(w, h, r, |x, y| {
        let (hue, s) = hue_at(x, y);
        s * (2.0 * hue).cos()
    });
    let m2s = Integral::build(w, h, r, |x, y| {
        let (hue, s) = hue_at(x, y);
        s * (2.0 * hue).sin()
    });
    let sat = Integral::build(w, h, r, |x, y| hue_at(x, y).1);
    let grad = intensity_gradient(image);

    let nf = n as f64;
    let data = map.data_mut();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let px = image.get(x, y);
            for c in 0..3 {
                let s = sums[c].window(x, y, r);
                let sq = squares[c].window(x, y, r);
                let var_num = n * sq - s * s; // exact, n^2 * variance * 255^2
                data[c * npx + i] = (px[c] as f64 / 255.0) as f32;
                data[(3 + c) * npx + i] = (s as f64 / (nf * 255.0)) as f32;
                data[(6 + c) * npx + i] = ((var_num as f64).sqrt() / (nf * 255.0)) as f32;
            }
            data[9 * npx + i] = grad[i] as f32;
            data[10 * npx + i] = (m1c.window(x, y, r) / nf) as f32;
            data[11 * npx + i] = (m1s.window(x, y, r) / nf) as f32;
            let (c2, s2) = (m2c.window(x, y, r) / nf, m2s.window(x, y, r) / nf);
            data[12 * npx + i] = (c2 * c2 + s2 * s2).sqrt() as f32;
            data[13 * npx + i] = (sat.window(x, y, r) / nf) as f32;
        }
    }
    map
}
