use super::{ImportanceRanking, PatchGrid};
use crate::Frame;

/// Pixel rectangle of an outlined patch window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutlinedWindow {
    pub y: usize,
    pub x: usize,
    pub size: usize,
}

pub const OUTLINE: [u8; 3] = [255, 220, 0];

/// Copy of `frame` with every selected patch window outlined in yellow.
pub fn draw_selection(frame: &Frame, grid: &PatchGrid, ranking: &ImportanceRanking) -> (Frame, Vec<OutlinedWindow>) {
    let mut out = frame.clone();
    let size = grid.patch_size();
    let mut windows = Vec::with_capacity(ranking.top_k.len());
    for &i in &ranking.top_k {
        let (y, x) = grid.origin(i);
        let (y1, x1) = (y + size - 1, x + size - 1);
        for xx in x..=x1 {
            out.set_pixel(y, xx, OUTLINE);
            out.set_pixel(y1, xx, OUTLINE);
        }
        for yy in y..=y1 {
            out.set_pixel(yy, x, OUTLINE);
            out.set_pixel(yy, x1, OUTLINE);
        }
        windows.push(OutlinedWindow { y, x, size });
    }
    (out, windows)
}
