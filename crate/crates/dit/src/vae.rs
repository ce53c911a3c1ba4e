use trajdiff_core::Video;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Per-channel `pool x pool` average pooling of an `F x H x W x C` video into
/// an `F x H/pool x W/pool x C` latent. No temporal pooling.
pub fn vae_stub_encode<T: Scalar>(video: &Video, pool: usize) -> Result<Tensor<T>> {
    let [f, h, w, c] = video.shape();
    if pool == 0 || h % pool != 0 || w % pool != 0 || f == 0 || c == 0 {
        return Err(Error::shape(
            "vae_stub_encode",
            format!("{f}x{h}x{w}x{c} with pool {pool}"),
        ));
    }
    let (lh, lw) = (h / pool, w / pool);
    let norm = (pool * pool) as f64;
    let mut data = Vec::with_capacity(f * lh * lw * c);
    for fi in 0..f {
        for y in 0..lh {
            for x in 0..lw {
                for ch in 0..c {
                    let mut s = 0.0;
                    for dy in 0..pool {
                        for dx in 0..pool {
                            s += video.pixel(fi, y * pool + dy, x * pool + dx)[ch];
                        }
                    }
                    data.push(T::of(s / norm));
                }
            }
        }
    }
    Tensor::new(vec![f, lh, lw, c], data)
}

/// Nearest-neighbor upsampling of an `F x H' x W' x C` latent by `pool`.
pub fn vae_stub_decode<T: Scalar>(latent: &Tensor<T>, pool: usize) -> Result<Video> {
    let &[f, lh, lw, c] = latent.shape.as_slice() else {
        return Err(Error::shape("vae_stub_decode", format!("{:?}", latent.shape)));
    };
    if pool == 0 {
        return Err(Error::shape("vae_stub_decode", "pool 0"));
    }
    let (h, w) = (lh * pool, lw * pool);
    let mut out = Video::zeros(f, h, w, c);
    for fi in 0..f {
        let frame = out.frame_mut(fi);
        for y in 0..h {
            for x in 0..w {
                let src = ((fi * lh + y / pool) * lw + x / pool) * c;
                for ch in 0..c {
                    frame[(y * w + x) * c + ch] = latent.data[src + ch].as_f64();
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_mean() {
        let v = Video::from_data(1, 2, 2, 1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let z: Tensor<f64> = vae_stub_encode(&v, 2).unwrap();
        assert_eq!(z.shape, vec![1, 1, 1, 1]);
        assert_eq!(z.data, vec![0.5]);
    }

    #[test]
    fn constant_video() {
        let v = Video::from_data(2, 4, 6, 3, vec![0.25; 144]).unwrap();
        let z: Tensor<f64> = vae_stub_encode(&v, 2).unwrap();
        assert!(z.data.iter().all(|&x| x == 0.25));
        assert_eq!(vae_stub_decode(&z, 2).unwrap(), v);
    }

    #[test]
    fn indivisible_rejected() {
        let v = Video::zeros(1, 3, 4, 3);
        assert!(vae_stub_encode::<f32>(&v, 2).is_err());
    }
}
