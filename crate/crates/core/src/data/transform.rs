use crate::tensor::Tensor;

/// Source coordinate and weight pair for one output position (half-pixel centres, edge clamped).
fn taps(out: usize, input: usize) -> Vec<(usize, usize, f32)> {
    let scale = input as f64 / out as f64;
    (0..out)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(input - 1);
            (lo, hi, (src - lo as f64) as f32)
        })
        .collect()
}

/// Bilinear resize of an HWC image, channel by channel.
pub fn resize_bilinear(image: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let (h, w, c) = image.hwc().expect("HWC image");
    let rows = taps(out_h, h);
    let cols = taps(out_w, w);
    let src = image.data();
    let at = |y: usize, x: usize, ch: usize| src[(y * w + x) * c + ch];
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                let top = at(y0, x0, ch) * (1.0 - fx) + at(y0, x1, ch) * fx;
                let bottom = at(y1, x0, ch) * (1.0 - fx) + at(y1, x1, ch) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Tensor::new(vec![out_h, out_w, c], out).expect("sized above")
}

/// Replicates a single-channel image into `channels` identical channels.
pub fn expand_channels(image: &Tensor, channels: usize) -> Tensor {
    let (h, w, c) = image.hwc().expect("HWC image");
    assert_eq!(c, 1, "expand_channels needs a single-channel image");
    let data = image.data().iter().flat_map(|&v| std::iter::repeat(v).take(channels)).collect();
    Tensor::new(vec![h, w, channels], data).expect("sized above")
}

/// 48x48x1 face crops to the 40x40x3 network input.
pub fn resize_and_expand(image: &Tensor) -> Tensor {
    expand_channels(&resize_bilinear(image, 40, 40), 3)
}
