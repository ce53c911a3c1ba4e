/// Normalized 1D Gaussian taps over `[-ceil(3 sigma), ceil(3 sigma)]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Half-sample symmetric index: `... b a | a b c ... y z | z y ...`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

fn convolve_axis(
    src: &[f64],
    dst: &mut [f64],
    width: usize,
    height: usize,
    channels: usize,
    kernel: &[f64],
    horizontal: bool,
) {
    let radius = (kernel.len() / 2) as isize;
    let (len, lines) = if horizontal { (width, height) } else { (height, width) };
    let (step, line_step) = if horizontal {
        (channels, width * channels)
    } else {
        (width * channels, channels)
    };
    for line in 0..lines {
        let base = line * line_step;
        for pos in 0..len {
            for c in 0..channels {
                let mut acc = 0.0;
                for (t, w) in kernel.iter().enumerate() {
                    let j = reflect(pos as isize + t as isize - radius, len);
                    acc += w * src[base + j * step + c];
                }
                dst[base + pos * step + c] = acc;
            }
        }
    }
}

/// Separable Gaussian blur of an interleaved `height x width x channels`
/// frame. Borders use half-sample symmetric reflection, which together with
/// the unit-sum kernel keeps each channel's total mass. `sigma == 0` returns
/// the input unchanged.
pub fn gaussian_blur(frame: &[f64], width: usize, height: usize, channels: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(frame.len(), width * height * channels, "frame size");
    if sigma <= 0.0 || frame.is_empty() {
        return frame.to_vec();
    }
    let kernel = gaussian_kernel(sigma);
    let mut tmp = vec![0.0; frame.len()];
    let mut out = vec![0.0; frame.len()];
    convolve_axis(frame, &mut tmp, width, height, channels, &kernel, true);
    convolve_axis(&tmp, &mut out, width, height, channels, &kernel, false);
    out
}
