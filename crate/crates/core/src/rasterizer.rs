//! Waveform-to-image conversion for the CNN demodulator.
//!
//! A normalized frame is drawn as a polyline on a high-resolution canvas,
//! shrunk to 28×28 with a bicubic kernel and binarized with Otsu's threshold.

use std::io::Write;
use std::path::Path;

use crate::Result;

pub const IMAGE_SIDE: usize = 28;
pub const DEFAULT_CANVAS: usize = 280;
/// Keys cubic convolution parameter.
pub const BICUBIC_A: f64 = -0.5;

/// Square single-channel image with real pixel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    side: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(side: usize) -> Self {
        GrayImage {
            side,
            data: vec![0.0; side * side],
        }
    }

    pub fn from_vec(side: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), side * side, "image data must be side²");
        GrayImage { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.side + col] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// 28×28 image with pixels in `{0, 1}`; 1 is the waveform (foreground).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros() -> Self {
        BinaryImage {
            pixels: vec![0; IMAGE_SIDE * IMAGE_SIDE],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * IMAGE_SIDE + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Mean (row, col) of the foreground pixels, if any.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut r, mut c, mut k) = (0.0, 0.0, 0.0);
        for row in 0..IMAGE_SIDE {
            for col in 0..IMAGE_SIDE {
                if self.get(row, col) == 1 {
                    r += row as f64;
                    c += col as f64;
                    k += 1.0;
                }
            }
        }
        (k > 0.0).then(|| (r / k, c / k))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    /// Binary PGM (P5), foreground white.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n")?;
        let bytes: Vec<u8> = self.pixels.iter().map(|&p| p * 255).collect();
        f.write_all(&bytes)?;
        Ok(())
    }
}

/// Points `(n, ȳ_n)` for `n = 1..=N`.
pub fn frame_to_points(frame: &[f64]) -> Vec<(f64, f64)> {
    frame
        .iter()
        .enumerate()
        .map(|(i, &y)| ((i + 1) as f64, y))
        .collect()
}

/// Canvas pixel of a point: x in `[1, N]` spans the columns, y in `[0, 1]`
/// spans the rows with row 0 at y = 1. Coordinates are rounded half away
/// from zero, and clamped onto the canvas.
fn to_pixel(x: f64, y: f64, n_points: usize, side: usize) -> (i64, i64) {
    let last = (side - 1) as f64;
    let col = if n_points > 1 {
        (x - 1.0) / (n_points - 1) as f64 * last
    } else {
        0.0
    };
    let row = (1.0 - y) * last;
    (
        row.round().clamp(0.0, last) as i64,
        col.round().clamp(0.0, last) as i64,
    )
}

/// Draw the polyline through `points` with 1-pixel, 4-connected Bresenham
/// segments. Ink is 1, background 0.
pub fn rasterize(points: &[(f64, f64)], canvas_px: usize) -> GrayImage {
    assert!(
        canvas_px >= IMAGE_SIDE && canvas_px % IMAGE_SIDE == 0,
        "canvas must be a positive multiple of {IMAGE_SIDE}"
    );
    let mut img = GrayImage::new(canvas_px);
    let pixels: Vec<(i64, i64)> = points
        .iter()
        .map(|&(x, y)| to_pixel(x, y, points.len(), canvas_px))
        .collect();
    if let Some(&(r, c)) = pixels.first() {
        img.set(r as usize, c as usize, 1.0);
    }
    for w in pixels.windows(2) {
        draw_segment(&mut img, w[0], w[1]);
    }
    img
}

fn draw_segment(img: &mut GrayImage, from: (i64, i64), to: (i64, i64)) {
    let (mut r, mut c) = from;
    let dr = (to.0 - r).abs();
    let dc = (to.1 - c).abs();
    let sr = if to.0 > r { 1 } else { -1 };
    let sc = if to.1 > c { 1 } else { -1 };
    // Error term of the classic integer Bresenham; a diagonal move is split
    // into a column step then a row step so the path stays 4-connected.
    let mut err = dc - dr;
    img.set(r as usize, c as usize, 1.0);
    while (r, c) != to {
        let e2 = 2 * err;
        let step_c = e2 >= -dr;
        let step_r = e2 <= dc;
        if step_c {
            err -= dr;
            c += sc;
            img.set(r as usize, c as usize, 1.0);
        }
        if step_r {
            err += dc;
            r += sr;
            img.set(r as usize, c as usize, 1.0);
        }
    }
}

/// Keys cubic kernel with parameter [`BICUBIC_A`].
pub fn cubic_kernel(x: f64) -> f64 {
    let a = BICUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

/// Per-output-index source taps `(first_index, weights)` for shrinking
/// `src` samples to `dst`. The kernel is stretched by the shrink factor so
/// every source pixel contributes (antialiased resampling), taps are
/// clamped at the borders, and weights are normalized to sum to 1.
fn resample_taps(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = dst as f64 / src as f64;
    let stretch = if scale < 1.0 { scale } else { 1.0 };
    let support = 2.0 / stretch;
    (0..dst)
        .map(|o| {
            let center = (o as f64 + 0.5) / scale - 0.5;
            let lo = (center - support).floor() as i64;
            let hi = (center + support).ceil() as i64;
            let mut taps: Vec<(usize, f64)> = Vec::new();
            for s in lo..=hi {
                let w = stretch * cubic_kernel((center - s as f64) * stretch);
                if w == 0.0 {
                    continue;
                }
                let idx = s.clamp(0, src as i64 - 1) as usize;
                match taps.iter_mut().find(|(i, _)| *i == idx) {
                    Some(t) => t.1 += w,
                    None => taps.push((idx, w)),
                }
            }
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Bicubic resize of a square image to 28×28, clamped to `[0, 1]`.
pub fn downsample_bicubic(gray: &GrayImage) -> GrayImage {
    let src = gray.side();
    let taps = resample_taps(src, IMAGE_SIDE);
    // Rows first: src×src -> 28 rows × src cols.
    let mut tmp = vec![0.0; IMAGE_SIDE * src];
    for (o, t) in taps.iter().enumerate() {
        for &(s, w) in t {
            let row = &gray.data()[s * src..(s + 1) * src];
            for (acc, &v) in tmp[o * src..(o + 1) * src].iter_mut().zip(row) {
                *acc += w * v;
            }
        }
    }
    let mut out = GrayImage::new(IMAGE_SIDE);
    for r in 0..IMAGE_SIDE {
        let row = &tmp[r * src..(r + 1) * src];
        for (c, t) in taps.iter().enumerate() {
            let v: f64 = t.iter().map(|&(s, w)| w * row[s]).sum();
            out.set(r, c, v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Otsu's threshold over the exact pixel values. Returns `None` for a
/// constant image. The threshold is the midpoint between the two adjacent
/// distinct values that maximize the between-class variance (first maximum
/// wins).
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for v in sorted {
        match levels.last_mut() {
            Some((lv, cnt)) if *lv == v => *cnt += 1.0,
            _ => levels.push((v, 1.0)),
        }
    }
    if levels.len() < 2 {
        return None;
    }
    let total: f64 = levels.iter().map(|l| l.1).sum();
    let total_sum: f64 = levels.iter().map(|l| l.0 * l.1).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, &(v, cnt)) in levels[..levels.len() - 1].iter().enumerate() {
        w0 += cnt;
        s0 += v * cnt;
        let w1 = total - w0;
        let mu0 = s0 / w0;
        let mu1 = (total_sum - s0) / w1;
        let between = w0 * w1 * (mu0 - mu1).powi(2);
        if between > best.0 {
            best = (between, k);
        }
    }
    let k = best.1;
    Some(0.5 * (levels[k].0 + levels[k + 1].0))
}

/// Global Otsu binarization; pixels strictly above the threshold are 1.
pub fn binarize_global(gray28: &GrayImage) -> BinaryImage {
    assert_eq!(gray28.side(), IMAGE_SIDE);
    let mut out = BinaryImage::zeros();
    if let Some(t) = otsu_threshold(gray28.data()) {
        for (p, &v) in out.pixels.iter_mut().zip(gray28.data()) {
            *p = u8::from(v > t);
        }
    }
    out
}

/// Full visualization pipeline for one normalized frame.
pub fn visualize(frame: &[f64]) -> BinaryImage {
    let canvas = rasterize(&frame_to_points(frame), DEFAULT_CANVAS);
    binarize_global(&downsample_bicubic(&canvas))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_follow_the_frame() {
        assert_eq!(frame_to_points(&[0.0, 1.0]), vec![(1.0, 0.0), (2.0, 1.0)]);
        let pts = frame_to_points(&[0.5; 4]);
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.1 == 0.5));
    }

    #[test]
    fn coincident_points_set_one_pixel() {
        let img = rasterize(&[(1.0, 0.3), (1.0, 0.3)], 28);
        assert_eq!(img.data().iter().filter(|&&v| v == 1.0).count(), 1);
    }

    #[test]
    fn horizontal_line_fills_one_row() {
        let img = rasterize(&frame_to_points(&[0.5; 10]), 280);
        // Enumerate pixels directly: row (1 - 0.5) * 279 = 139.5 rounds to 140.
        for r in 0..280 {
            let ink = (0..280).filter(|&c| img.get(r, c) == 1.0).count();
            assert_eq!(ink, if r == 140 { 280 } else { 0 }, "row {r}");
        }
    }

    fn four_connected(img: &GrayImage, a: (usize, usize), b: (usize, usize)) -> bool {
        let side = img.side();
        let mut seen = vec![false; side * side];
        let mut stack = vec![a];
        seen[a.0 * side + a.1] = true;
        while let Some((r, c)) = stack.pop() {
            if (r, c) == b {
                return true;
            }
            let mut nb = Vec::new();
            if r > 0 {
                nb.push((r - 1, c));
            }
            if c > 0 {
                nb.push((r, c - 1));
            }
            if r + 1 < side {
                nb.push((r + 1, c));
            }
            if c + 1 < side {
                nb.push((r, c + 1));
            }
            for (nr, nc) in nb {
                if img.get(nr, nc) == 1.0 && !seen[nr * side + nc] {
                    seen[nr * side + nc] = true;
                    stack.push((nr, nc));
                }
            }
        }
        false
    }

    #[test]
    fn vertical_step_is_four_connected() {
        let img = rasterize(&frame_to_points(&[0.0, 1.0, 1.0, 0.0, 0.3]), 280);
        assert!(four_connected(&img, (279, 0), (0, 70)));
        assert!(four_connected(&img, (279, 0), (to_pixel(5.0, 0.3, 5, 280).0 as usize, 279)));
        // Steep diagonal segments too.
        let img = rasterize(&[(1.0, 0.0), (2.0, 1.0), (3.0, 0.1)], 56);
        assert!(four_connected(&img, (55, 0), (to_pixel(3.0, 0.1, 3, 56).0 as usize, 55)));
    }

    #[test]
    fn bicubic_constant_and_identity() {
        let c = GrayImage::from_vec(280, vec![0.37; 280 * 280]);
        assert!(downsample_bicubic(&c).data().iter().all(|v| (v - 0.37).abs() < 1e-12));
        let data: Vec<f64> = (0..784).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        let img = GrayImage::from_vec(28, data.clone());
        let out = downsample_bicubic(&img);
        for (a, b) in out.data().iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bicubic_matches_direct_two_dimensional_evaluation() {
        // Independent route: evaluate the 2-D tensor-product kernel per output
        // pixel over the whole source, with clamped indexing and normalized weights.
        let src = 56;
        let mut img = GrayImage::new(src);
        for c in 0..src {
            img.set(20, c, 1.0);
            img.set((c * 3) % src, c, 0.5);
        }
        let out = downsample_bicubic(&img);
        let scale = 28.0 / src as f64;
        let kern = |d: f64| scale * cubic_kernel(d * scale);
        for orow in 0..28 {
            for ocol in 0..28 {
                let cy = (orow as f64 + 0.5) / scale - 0.5;
                let cx = (ocol as f64 + 0.5) / scale - 0.5;
                let (mut acc, mut wsum) = (0.0, 0.0);
                for sy in -10i64..(src as i64 + 10) {
                    for sx in -10i64..(src as i64 + 10) {
                        let w = kern(cy - sy as f64) * kern(cx - sx as f64);
                        if w == 0.0 {
                            continue;
                        }
                        let yy = sy.clamp(0, src as i64 - 1) as usize;
                        let xx = sx.clamp(0, src as i64 - 1) as usize;
                        acc += w * img.get(yy, xx);
                        wsum += w;
                    }
                }
                let want = (acc / wsum).clamp(0.0, 1.0);
                assert!((out.get(orow, ocol) - want).abs() < 1e-9, "({orow},{ocol})");
            }
        }
    }

    #[test]
    fn horizontal_line_mass_concentrates_in_one_band() {
        let canvas = rasterize(&frame_to_points(&[0.5; 40]), 280);
        let small = downsample_bicubic(&canvas);
        let sums: Vec<f64> = (0..28).map(|r| (0..28).map(|c| small.get(r, c)).sum()).collect();
        let total: f64 = sums.iter().sum();
        // Row 140 of 280 sits on the boundary of output rows 13 and 14.
        assert!((sums[13] + sums[14]) / total > 0.9, "{sums:?}");
    }

    #[test]
    fn otsu_separates_two_levels() {
        let mut data = vec![0.1; 784];
        for v in data.iter_mut().take(78) {
            *v = 0.9;
        }
        let t = otsu_threshold(&data).unwrap();
        assert!(t > 0.1 && t < 0.9);
        let bin = binarize_global(&GrayImage::from_vec(28, data));
        assert_eq!(bin.foreground_count(), 78);
    }

    #[test]
    fn constant_image_binarizes_to_zero() {
        let bin = binarize_global(&GrayImage::from_vec(28, vec![0.4; 784]));
        assert_eq!(bin, BinaryImage::zeros());
    }

    #[test]
    fn visualize_outputs_binary_28x28_with_ink() {
        let frame: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin() * 0.5 + 0.5).collect();
        let img = visualize(&frame);
        assert_eq!(img.pixels().len(), 784);
        assert!(img.pixels().iter().all(|&p| p <= 1));
        assert!(img.foreground_count() > 0);
        assert_eq!(img, visualize(&frame));
    }

    #[test]
    fn higher_level_moves_centroid_up() {
        let mut prev = f64::INFINITY;
        for level in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let (row, _) = visualize(&[level; 20]).centroid().unwrap();
            assert!(row < prev, "level {level}: {row}");
            prev = row;
        }
    }

    #[test]
    fn shift_moves_centroid_by_one_sample_width() {
        let n = 20;
        let base: Vec<f64> = (0..n).map(|i| if (5..9).contains(&i) { 1.0 } else { 0.0 }).collect();
        let mut shifted = vec![0.0; n];
        shifted[1..].copy_from_slice(&base[..n - 1]);
        let (_, c0) = visualize(&base).centroid().unwrap();
        let (_, c1) = visualize(&shifted).centroid().unwrap();
        let expected = 28.0 / n as f64;
        assert!(((c1 - c0) - expected).abs() <= 1.0, "{c0} -> {c1}");
    }

    #[test]
    fn pgm_export() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        visualize(&[0.0, 1.0, 0.5, 0.2]).write_pgm(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n28 28\n255\n"));
        assert_eq!(bytes.len(), 13 + 784);
    }
}
