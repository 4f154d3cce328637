//! Forward-backward CTC in log space and the exhaustive alignment oracle.

use super::{is_log_zero, log_add, Alignment, PosteriorGrid, BLANK};
use crate::{Error, LabelSequence, Result, Scalar};

/// Upper bound on `(V + 1)^T` accepted by [`enumerate_alignments_oracle`].
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

fn check_label<S: Scalar>(grid: &PosteriorGrid<S>, label: &LabelSequence) -> Result<()> {
    label.validate(grid.vocab_size())?;
    let required = min_frames(label);
    if required > grid.frames() || grid.frames() == 0 {
        return Err(Error::InfeasibleLabel {
            label_len: label.len(),
            frames: grid.frames(),
            required: required.max(1),
        });
    }
    Ok(())
}

/// Shortest alignment that collapses to `label`: one frame per token plus a
/// separating blank between each pair of equal neighbours.
pub fn min_frames(label: &LabelSequence) -> usize {
    let t = label.tokens();
    t.len() + t.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Blank-interleaved label `ε c_1 ε c_2 ... c_U ε`.
fn extend(label: &LabelSequence) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * label.len() + 1);
    ext.push(BLANK as usize);
    for &c in label.tokens() {
        ext.push(c as usize);
        ext.push(BLANK as usize);
    }
    ext
}

/// Whether state `s` may be entered from `s - 2` (skipping a blank).
#[inline]
fn can_skip(ext: &[usize], s: usize) -> bool {
    s >= 2 && ext[s] != BLANK as usize && ext[s] != ext[s - 2]
}

/// `log alpha`, row-major `T x S'`.
fn forward<S: Scalar>(grid: &PosteriorGrid<S>, ext: &[usize]) -> Vec<S> {
    let t_len = grid.frames();
    let n = ext.len();
    let mut alpha = vec![S::neg_infinity(); t_len * n];
    alpha[0] = grid.log_prob(0, ext[0]);
    if n > 1 {
        alpha[1] = grid.log_prob(0, ext[1]);
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * n);
        let prev = &prev[(t - 1) * n..];
        let cur = &mut cur[..n];
        for s in 0..n {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if can_skip(ext, s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = if is_log_zero(acc) {
                S::neg_infinity()
            } else {
                acc + grid.log_prob(t, ext[s])
            };
        }
    }
    alpha
}

/// `log beta`, row-major `T x S'`; includes the emission at `t`.
fn backward<S: Scalar>(grid: &PosteriorGrid<S>, ext: &[usize]) -> Vec<S> {
    let t_len = grid.frames();
    let n = ext.len();
    let mut beta = vec![S::neg_infinity(); t_len * n];
    let last = (t_len - 1) * n;
    beta[last + n - 1] = grid.log_prob(t_len - 1, ext[n - 1]);
    if n > 1 {
        beta[last + n - 2] = grid.log_prob(t_len - 1, ext[n - 2]);
    }
    for t in (0..t_len - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * n);
        let cur = &mut cur[t * n..];
        let next = &next[..n];
        for s in 0..n {
            let mut acc = next[s];
            if s + 1 < n {
                acc = log_add(acc, next[s + 1]);
            }
            if s + 2 < n && can_skip(ext, s + 2) {
                acc = log_add(acc, next[s + 2]);
            }
            cur[s] = if is_log_zero(acc) {
                S::neg_infinity()
            } else {
                acc + grid.log_prob(t, ext[s])
            };
        }
    }
    beta
}

fn total_log_prob<S: Scalar>(alpha: &[S], t_len: usize, n: usize) -> S {
    let last = &alpha[(t_len - 1) * n..];
    if n > 1 {
        log_add(last[n - 1], last[n - 2])
    } else {
        last[0]
    }
}

/// `log sum_{a in Gamma(c)} prod_j p(a_j | h_j)`. The CTC loss is the negation.
///
/// Requires tokens in `[1, V]` and `T >= min_frames(label)`.
pub fn ctc_log_loss<S: Scalar>(grid: &PosteriorGrid<S>, label: &LabelSequence) -> Result<S> {
    check_label(grid, label)?;
    let ext = extend(label);
    let alpha = forward(grid, &ext);
    Ok(total_log_prob(&alpha, grid.frames(), ext.len()))
}

/// Returns the loss `-log p(c | h)` and its gradient with respect to the
/// pre-softmax logits, row-major `T x (V + 1)`.
///
/// Treats the grid as `log_softmax(logits)`, so the gradient at `(t, k)` is
/// `p_t(k) - (1 / p(c|h)) sum_{s : l'_s = k} alpha_t(s) beta_t(s) / p_t(k)`.
pub fn ctc_loss_and_grad<S: Scalar>(
    grid: &PosteriorGrid<S>,
    label: &LabelSequence,
) -> Result<(S, Vec<S>)> {
    check_label(grid, label)?;
    let ext = extend(label);
    let (t_len, n, classes) = (grid.frames(), ext.len(), grid.classes());
    let alpha = forward(grid, &ext);
    let beta = backward(grid, &ext);
    let log_p = total_log_prob(&alpha, t_len, n);

    let mut grad = Vec::with_capacity(t_len * classes);
    let mut occupancy = vec![S::neg_infinity(); classes];
    for t in 0..t_len {
        occupancy.iter_mut().for_each(|o| *o = S::neg_infinity());
        for s in 0..n {
            let ab = alpha[t * n + s] + beta[t * n + s];
            if !is_log_zero(alpha[t * n + s]) && !is_log_zero(beta[t * n + s]) {
                occupancy[ext[s]] = log_add(occupancy[ext[s]], ab);
            }
        }
        let row = grid.row(t);
        for k in 0..classes {
            let p = row[k].exp();
            let gamma = if is_log_zero(occupancy[k]) || is_log_zero(log_p) {
                S::zero()
            } else {
                (occupancy[k] - row[k] - log_p).exp()
            };
            grad.push(p - gamma);
        }
    }
    Ok((-log_p, grad))
}

/// Gradient of the CTC loss with respect to the logits.
pub fn ctc_grad<S: Scalar>(grid: &PosteriorGrid<S>, label: &LabelSequence) -> Result<Vec<S>> {
    ctc_loss_and_grad(grid, label).map(|(_, g)| g)
}

/// Brute-force reference: enumerates all `(V + 1)^T` alignments, collapses
/// each and sums the probabilities of those equal to `label`. Returns `-inf`
/// when nothing collapses to the label.
pub fn enumerate_alignments_oracle<S: Scalar>(
    grid: &PosteriorGrid<S>,
    label: &LabelSequence,
) -> Result<S> {
    let (t_len, classes) = (grid.frames(), grid.classes());
    let guard = Err(Error::GuardExceeded {
        classes,
        frames: t_len,
        limit: ENUMERATION_LIMIT,
    });
    match u32::try_from(t_len).ok().and_then(|t| (classes as u64).checked_pow(t)) {
        Some(count) if count <= ENUMERATION_LIMIT => {}
        _ => return guard,
    }
    let mut path = Alignment(vec![0u32; t_len]);
    let mut total = S::neg_infinity();
    loop {
        if path.collapse() == *label {
            let lp = path
                .0
                .iter()
                .enumerate()
                .fold(S::zero(), |acc, (j, &a)| acc + grid.log_prob(j, a as usize));
            total = log_add(total, lp);
        }
        // Odometer increment, last frame fastest.
        let mut pos = t_len;
        loop {
            if pos == 0 {
                return Ok(total);
            }
            pos -= 1;
            path.0[pos] += 1;
            if (path.0[pos] as usize) < classes {
                break;
            }
            path.0[pos] = 0;
        }
    }
}
