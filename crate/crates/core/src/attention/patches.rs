use super::{AttentionConfig, AttentionError};
use crate::Frame;

/// Sliding-window patches of a frame, scaled to `[0, 1]`.
///
/// Byte-identical windows are stored once; `patch(i)` resolves the shared
/// copy. Scoring exploits the sharing, which matters for frames dominated by
/// a flat background.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid {
    rows: usize,
    cols: usize,
    patch_size: usize,
    stride: usize,
    frame_height: usize,
    frame_width: usize,
    patch_len: usize,
    /// Distinct patches, flattened, `unique_count × patch_len`.
    unique: Vec<f64>,
    /// Distinct-patch index of each patch, row-major over the grid.
    index: Vec<usize>,
    /// How many patches share each distinct patch.
    multiplicity: Vec<usize>,
}

/// Cuts `frame` into `patch_size` windows every `patch_stride` pixels.
/// Trailing pixels that do not fill a window are dropped.
pub fn extract_patches(frame: &Frame, cfg: &AttentionConfig) -> Result<PatchGrid, AttentionError> {
    let (h, w) = (frame.height(), frame.width());
    let (rows, cols) = cfg.grid_dims(h, w).ok_or(AttentionError::FrameTooSmall {
        height: h,
        width: w,
        patch_size: cfg.patch_size,
    })?;
    let size = cfg.patch_size;
    let row_bytes = size * Frame::CHANNELS;
    let patch_len = size * row_bytes;
    let n = rows * cols;

    let mut windows = vec![0u8; n * patch_len];
    let data = frame.data();
    for r in 0..rows {
        for c in 0..cols {
            let dst = &mut windows[(r * cols + c) * patch_len..][..patch_len];
            let (y0, x0) = (r * cfg.patch_stride, c * cfg.patch_stride);
            for dy in 0..size {
                let src = ((y0 + dy) * w + x0) * Frame::CHANNELS;
                dst[dy * row_bytes..][..row_bytes].copy_from_slice(&data[src..src + row_bytes]);
            }
        }
    }

    let mut hashes: Vec<u64> = Vec::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut index = Vec::with_capacity(n);
    let mut multiplicity = Vec::new();
    for p in 0..n {
        let bytes = &windows[p * patch_len..][..patch_len];
        let h = fingerprint(bytes);
        let found = (0..reps.len())
            .find(|&u| hashes[u] == h && &windows[reps[u] * patch_len..][..patch_len] == bytes);
        match found {
            Some(u) => {
                index.push(u);
                multiplicity[u] += 1;
            }
            None => {
                index.push(reps.len());
                hashes.push(h);
                reps.push(p);
                multiplicity.push(1);
            }
        }
    }
    let mut unique = Vec::with_capacity(reps.len() * patch_len);
    for &p in &reps {
        unique.extend(windows[p * patch_len..][..patch_len].iter().map(|&b| f64::from(b) / 255.0));
    }

    Ok(PatchGrid {
        rows,
        cols,
        patch_size: size,
        stride: cfg.patch_stride,
        frame_height: h,
        frame_width: w,
        patch_len,
        unique,
        index,
        multiplicity,
    })
}

fn fingerprint(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    let mut chunks = bytes.chunks_exact(8);
    for c in &mut chunks {
        h = (h ^ u64::from_le_bytes(c.try_into().expect("8 bytes"))).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(23);
    }
    for &b in chunks.remainder() {
        h = (h ^ u64::from(b)).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(23);
    }
    h
}

impl PatchGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        (self.frame_height, self.frame_width)
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }

    /// Flattened patch `i` (row-major over the grid), values in `[0, 1]`.
    pub fn patch(&self, i: usize) -> &[f64] {
        &self.unique[self.index[i] * self.patch_len..][..self.patch_len]
    }

    pub fn patches(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.patch(i))
    }

    /// Top-left pixel `(y, x)` of patch `i`.
    pub fn origin(&self, i: usize) -> (usize, usize) {
        ((i / self.cols) * self.stride, (i % self.cols) * self.stride)
    }

    /// Pixel center `(y, x)` of patch `i`.
    pub fn center(&self, i: usize) -> (f64, f64) {
        let (y, x) = self.origin(i);
        let half = (self.patch_size as f64 - 1.0) / 2.0;
        (y as f64 + half, x as f64 + half)
    }

    pub fn unique_count(&self) -> usize {
        self.multiplicity.len()
    }

    pub(super) fn unique_patch(&self, u: usize) -> &[f64] {
        &self.unique[u * self.patch_len..][..self.patch_len]
    }

    pub(super) fn unique_index(&self) -> &[usize] {
        &self.index
    }

    pub(super) fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Seed;
    use rand::Rng;

    fn cfg(size: usize, stride: usize) -> AttentionConfig {
        AttentionConfig { patch_size: size, patch_stride: stride, ..Default::default() }
    }

    /// Enumerates window origins directly: every `(y, x)` on the stride lattice
    /// whose window fits inside the frame.
    fn enumerate_windows(h: usize, w: usize, size: usize, stride: usize) -> (usize, usize, usize) {
        let ys: Vec<usize> = (0..h).step_by(stride).filter(|y| y + size <= h).collect();
        let xs: Vec<usize> = (0..w).step_by(stride).filter(|x| x + size <= w).collect();
        (ys.len(), xs.len(), ys.len() * xs.len())
    }

    #[test]
    fn atari_sized_frame() {
        let f = Frame::filled(210, 160, [0, 0, 0]);
        let g = extract_patches(&f, &cfg(10, 5)).unwrap();
        assert_eq!((g.rows(), g.cols(), g.len()), (41, 31, 1271));
        assert_eq!(enumerate_windows(210, 160, 10, 5), (41, 31, 1271));
    }

    #[test]
    fn single_window() {
        let f = Frame::filled(10, 10, [9, 9, 9]);
        let g = extract_patches(&f, &cfg(10, 5)).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.center(0), (4.5, 4.5));
    }

    #[test]
    fn board_sized_frame() {
        let f = Frame::filled(64, 64, [0, 0, 0]);
        let g = extract_patches(&f, &cfg(10, 5)).unwrap();
        assert_eq!((g.rows(), g.cols(), g.len()), (11, 11, 121));
        assert_eq!(g.unique_count(), 1);
    }

    #[test]
    fn too_small() {
        let f = Frame::filled(9, 20, [0, 0, 0]);
        assert!(matches!(extract_patches(&f, &cfg(10, 5)), Err(AttentionError::FrameTooSmall { .. })));
    }

    #[test]
    fn patch_contents_match_pixels() {
        let mut rng = Seed(4).rng();
        let data: Vec<u8> = (0..23 * 17 * 3).map(|_| rng.random()).collect();
        let f = Frame::new(23, 17, data).unwrap();
        let c = cfg(4, 3);
        let g = extract_patches(&f, &c).unwrap();
        for i in 0..g.len() {
            let (y0, x0) = g.origin(i);
            let p = g.patch(i);
            for dy in 0..4 {
                for dx in 0..4 {
                    let px = f.pixel(y0 + dy, x0 + dx);
                    for ch in 0..3 {
                        assert_eq!(p[(dy * 4 + dx) * 3 + ch], f64::from(px[ch]) / 255.0);
                    }
                }
            }
        }
    }

    #[test]
    fn randomized_counts_match_enumeration() {
        let mut rng = Seed(5).rng();
        for _ in 0..300 {
            let size = rng.random_range(1..8);
            let stride = rng.random_range(1..6);
            let h = rng.random_range(size..40);
            let w = rng.random_range(size..40);
            let g = extract_patches(&Frame::filled(h, w, [1, 2, 3]), &cfg(size, stride)).unwrap();
            assert_eq!((g.rows(), g.cols(), g.len()), enumerate_windows(h, w, size, stride));
        }
    }
}
