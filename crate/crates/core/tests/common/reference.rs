#![allow(clippy::needless_range_loop, clippy::manual_clamp)]

//! Straight-line fusion reference on plain vectors. Shares no code with the
//! library: similarity, selection, grouping and merging are all spelled out
//! again here in the most direct form.

#![allow(dead_code)]

pub struct RefOutput {
    pub frames: Vec<Vec<f64>>,
    pub provenance: Vec<(usize, usize)>,
    pub density: Vec<f64>,
    /// Frame count after each iteration.
    pub lengths: Vec<usize>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    let na = na.sqrt();
    let nb = nb.sqrt();
    if na < 1e-8 || nb < 1e-8 {
        return 0.0;
    }
    let c = dot / (na * nb);
    if c > 1.0 {
        1.0
    } else if c < -1.0 {
        -1.0
    } else {
        c
    }
}

/// `T/2` while `T > 2L`, then `L`.
pub fn next_length(t: usize, l: usize) -> usize {
    if t > 2 * l {
        t / 2
    } else {
        l
    }
}

/// Positions of the `r` largest values, larger index losing ties, by
/// repeated linear scans.
pub fn top_r(values: &[f64], r: usize) -> Vec<bool> {
    let mut taken = vec![false; values.len()];
    for _ in 0..r {
        let mut best: Option<usize> = None;
        for i in 0..values.len() {
            if taken[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if values[i] > values[b] => best = Some(i),
                _ => {}
            }
        }
        taken[best.unwrap()] = true;
    }
    taken
}

/// Density-weighted iterative fusion (`weighted = true`) or the plain
/// variant whose frames average the original inputs they cover.
pub fn reference_fusion(frames: &[Vec<f64>], density: &[f64], target: usize, weighted: bool) -> RefOutput {
    let mut cur: Vec<Vec<f64>> = frames.to_vec();
    let mut dens: Vec<f64> = if weighted { density.to_vec() } else { vec![1.0; frames.len()] };
    let mut prov: Vec<(usize, usize)> = (0..frames.len()).map(|j| (j, j + 1)).collect();
    let mut lengths = Vec::new();
    while cur.len() > target {
        let t = cur.len();
        let r = t - next_length(t, target);
        let mut sims = Vec::new();
        for j in 0..t - 1 {
            sims.push(cosine(&cur[j], &cur[j + 1]));
        }
        let joined = top_r(&sims, r);

        let mut new_frames = Vec::new();
        let mut new_dens = Vec::new();
        let mut new_prov = Vec::new();
        let mut start = 0;
        while start < t {
            let mut end = start + 1;
            while end < t && joined[end - 1] {
                end += 1;
            }
            let lo = prov[start].0;
            let hi = prov[end - 1].1;
            let dim = cur[start].len();
            let mut out = vec![0.0; dim];
            if weighted {
                let total: f64 = dens[start..end].iter().sum();
                for j in start..end {
                    let w = if total < 1e-8 { 1.0 / (end - start) as f64 } else { dens[j] / total };
                    for k in 0..dim {
                        out[k] += w * cur[j][k];
                    }
                }
                new_dens.push(total);
            } else {
                for j in lo..hi {
                    for k in 0..dim {
                        out[k] += frames[j][k] / (hi - lo) as f64;
                    }
                }
                new_dens.push((hi - lo) as f64);
            }
            new_frames.push(out);
            new_prov.push((lo, hi));
            start = end;
        }
        cur = new_frames;
        dens = new_dens;
        prov = new_prov;
        lengths.push(cur.len());
    }
    RefOutput {
        frames: cur,
        provenance: prov,
        density: dens,
        lengths,
    }
}
