use crate::error::{Error, Result};
use crate::raster::Video;

/// Serialized stand-in for an infinite PSNR.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 8;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &Video, b: &Video) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "videos differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.frames == 0 || a.frame_len() == 0 {
        return Err(Error::shape("empty video".to_string()));
    }
    Ok(())
}

/// Mean over frames of `10 log10(1 / MSE)` for values in `[0, 1]`.
///
/// Returns `+inf` when the videos are identical. A frame that matches exactly
/// while others do not contributes [`PSNR_CAP_DB`].
pub fn psnr(a: &Video, b: &Video) -> Result<f64> {
    check_shapes(a, b)?;
    if a.data == b.data {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for f in 0..a.frames {
        let (fa, fb) = (a.frame(f), b.frame(f));
        let mse = fa.iter().zip(fb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / fa.len() as f64;
        total += if mse == 0.0 {
            PSNR_CAP_DB
        } else {
            (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
        };
    }
    Ok(total / a.frames as f64)
}

pub fn psnr_capped(db: f64) -> f64 {
    db.min(PSNR_CAP_DB)
}

/// Mean SSIM over all 8x8 windows (stride 1), channels and frames, with
/// uniform window weights, population statistics, and `L = 1`. Images
/// smaller than the window use a single window covering the whole frame.
pub fn ssim(a: &Video, b: &Video) -> Result<f64> {
    check_shapes(a, b)?;
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let wh = SSIM_WINDOW.min(a.height);
    let ww = SSIM_WINDOW.min(a.width);
    let n = (wh * ww) as f64;
    let ch = a.channels;
    let mut total = 0.0;
    let mut count = 0usize;
    for f in 0..a.frames {
        let (fa, fb) = (a.frame(f), b.frame(f));
        for c in 0..ch {
            for y0 in 0..=a.height - wh {
                for x0 in 0..=a.width - ww {
                    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for y in y0..y0 + wh {
                        for x in x0..x0 + ww {
                            let i = (y * a.width + x) * ch + c;
                            let (va, vb) = (fa[i], fb[i]);
                            sa += va;
                            sb += vb;
                            saa += va * va;
                            sbb += vb * vb;
                            sab += va * vb;
                        }
                    }
                    let (ma, mb) = (sa / n, sb / n);
                    let var_a = (saa / n - ma * ma).max(0.0);
                    let var_b = (sbb / n - mb * mb).max(0.0);
                    let cov = sab / n - ma * mb;
                    total +=
                        ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
                    count += 1;
                }
            }
        }
    }
    Ok(total / count as f64)
}
