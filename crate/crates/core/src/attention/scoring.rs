use super::{AttentionConfig, AttentionError, AttentionParams, PatchGrid};

/// Patch importances and the selected patch indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceRanking {
    /// Column sums of the attention matrix; they total the patch count.
    pub scores: Vec<f64>,
    /// Selected patches, best first; equal scores favor the lower index.
    pub top_k: Vec<usize>,
}

/// Per distinct patch: `[key (d) | query (d)]` of `[patch, 1] · W`.
fn project(grid: &PatchGrid, params: &AttentionParams) -> Vec<f64> {
    let d = params.dim();
    let m = grid.patch_len();
    // fuse key and query so one pass over the patch feeds both
    let mut fused = vec![0.0; (m + 1) * 2 * d];
    for r in 0..=m {
        fused[r * 2 * d..][..d].copy_from_slice(&params.key()[r * d..][..d]);
        fused[r * 2 * d + d..][..d].copy_from_slice(&params.query()[r * d..][..d]);
    }
    let bias = &fused[m * 2 * d..];
    let mut out = Vec::with_capacity(grid.unique_count() * 2 * d);
    for u in 0..grid.unique_count() {
        let mut acc = bias.to_vec();
        for (x, row) in grid.unique_patch(u).iter().zip(fused.chunks_exact(2 * d)) {
            if *x != 0.0 {
                for (a, w) in acc.iter_mut().zip(row) {
                    *a += x * w;
                }
            }
        }
        out.extend_from_slice(&acc);
    }
    out
}

fn logit_scale(d: usize) -> f64 {
    if d == 0 {
        1.0
    } else {
        1.0 / (d as f64).sqrt()
    }
}

/// Scores every patch and selects the `top_k` most important.
///
/// With `X` the patch matrix plus a ones column, `A = softmax_rows((X Wk)(X Wq)ᵀ / √d)`
/// and the importance of patch `j` is `Σ_i A[i][j]`. Identical patches share
/// rows and columns of `A`, so the computation runs over distinct patches
/// weighted by their multiplicity; the result equals the dense computation.
pub fn score_patches(
    grid: &PatchGrid,
    params: &AttentionParams,
    cfg: &AttentionConfig,
) -> Result<ImportanceRanking, AttentionError> {
    params.check_shape(cfg)?;
    if grid.patch_len() != cfg.patch_len() {
        return Err(AttentionError::ShapeMismatch {
            expected_rows: grid.patch_len() + 1,
            expected_dim: cfg.transformation_dimension,
            rows: params.rows(),
            dim: params.dim(),
        });
    }
    if cfg.top_k > grid.len() {
        return Err(AttentionError::TooFewPatches { k: cfg.top_k, patches: grid.len() });
    }
    let d = params.dim();
    let u = grid.unique_count();
    let kq = project(grid, params);
    let counts: Vec<f64> = grid.multiplicity().iter().map(|&c| c as f64).collect();
    let scale = logit_scale(d);

    let mut importance = vec![0.0; u];
    let mut row = vec![0.0; u];
    for a in 0..u {
        let key = &kq[a * 2 * d..][..d];
        let mut max = f64::NEG_INFINITY;
        for (b, slot) in row.iter_mut().enumerate() {
            let query = &kq[b * 2 * d + d..][..d];
            let s = key.iter().zip(query).map(|(k, q)| k * q).sum::<f64>() * scale;
            *slot = s;
            max = max.max(s);
        }
        let mut z = 0.0;
        for (slot, c) in row.iter_mut().zip(&counts) {
            *slot = (*slot - max).exp();
            z += c * *slot;
        }
        let weight = counts[a] / z;
        for (imp, e) in importance.iter_mut().zip(&row) {
            *imp += weight * e;
        }
    }
    let scores: Vec<f64> = grid.unique_index().iter().map(|&k| importance[k]).collect();
    let top_k = top_k_indices(&scores, cfg.top_k);
    Ok(ImportanceRanking { scores, top_k })
}

/// Indices of the `k` largest scores, descending; ties go to the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let k = k.min(idx.len());
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < idx.len() && k > 0 {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx.sort_by(cmp);
    idx
}

/// Dense `n × n` attention matrix (row-stochastic). Intended for inspection;
/// [`score_patches`] does not materialize it.
pub fn attention_matrix(
    grid: &PatchGrid,
    params: &AttentionParams,
    cfg: &AttentionConfig,
) -> Result<Vec<Vec<f64>>, AttentionError> {
    params.check_shape(cfg)?;
    let d = params.dim();
    let kq = project(grid, params);
    let idx = grid.unique_index();
    let scale = logit_scale(d);
    Ok((0..grid.len())
        .map(|i| {
            let key = &kq[idx[i] * 2 * d..][..d];
            let logits: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let query = &kq[idx[j] * 2 * d + d..][..d];
                    key.iter().zip(query).map(|(k, q)| k * q).sum::<f64>() * scale
                })
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / z).collect()
        })
        .collect())
}

/// Normalized centers of the selected patches in rank order:
/// `[y0/(H-1), x0/(W-1), y1/(H-1), ...]`, length `2k`.
pub fn patch_centers(ranking: &ImportanceRanking, grid: &PatchGrid) -> Vec<f64> {
    let (h, w) = grid.frame_dims();
    let norm = |v: f64, extent: usize| if extent > 1 { v / (extent - 1) as f64 } else { 0.0 };
    ranking
        .top_k
        .iter()
        .flat_map(|&i| {
            let (cy, cx) = grid.center(i);
            [norm(cy, h), norm(cx, w)]
        })
        .collect()
}
