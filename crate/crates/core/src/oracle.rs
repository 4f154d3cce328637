//! Randomized self-checks that compare the optimized routines against
//! brute-force references. The CLI `oracle` subcommand and the acceptance
//! suite both run these.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ctc::{ctc_grad, ctc_log_loss, enumerate_alignments_oracle, is_log_zero, min_frames};
use crate::fusion::select_pairs;
use crate::seed::derive_seed;
use crate::{LabelSequence, PosteriorGrid, Result, SimilarityVector};

pub const CTC_TOLERANCE: f64 = 1e-9;
pub const GRAD_TOLERANCE: f64 = 1e-4;
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// Secondary check, such as gradient row sums, when the suite has one.
    pub max_aux_error: Option<f64>,
    pub passed: bool,
}

fn random_label(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize, frames: usize) -> LabelSequence {
    loop {
        let len = rng.random_range(0..=max_len);
        let l = LabelSequence::new((0..len).map(|_| rng.random_range(1..=vocab as u32)).collect());
        if min_frames(&l) <= frames {
            return l;
        }
    }
}

fn random_grid(rng: &mut ChaCha8Rng, frames: usize, classes: usize) -> Result<PosteriorGrid<f64>> {
    let logits = (0..frames * classes).map(|_| rng.random_range(-3.0..3.0)).collect();
    PosteriorGrid::from_logits(logits, classes)
}

/// Forward DP against full alignment enumeration, `T <= max_t`, `V <= 3`,
/// `|label| <= 3`.
pub fn ctc_suite(instances: usize, max_t: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "oracle/ctc"));
    let max_t = max_t.max(1);
    let mut max_error = 0.0f64;
    for _ in 0..instances {
        let t = rng.random_range(1..=max_t);
        let v = rng.random_range(1..=3usize);
        let grid = random_grid(&mut rng, t, v + 1)?;
        let label = random_label(&mut rng, v, 3, t);
        let dp = ctc_log_loss(&grid, &label)?;
        let brute = enumerate_alignments_oracle(&grid, &label)?;
        let err = if is_log_zero(dp) && is_log_zero(brute) {
            0.0
        } else {
            (dp - brute).abs()
        };
        max_error = max_error.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(SuiteResult {
        suite: "ctc",
        instances,
        max_error,
        tolerance: CTC_TOLERANCE,
        max_aux_error: None,
        passed: max_error <= CTC_TOLERANCE,
    })
}

/// Analytic logit gradients against central differences, `T <= 6`, `V <= 4`.
/// The error of one instance is `max|analytic - numeric| / max|numeric|`.
pub fn grad_suite(instances: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "oracle/grad"));
    let mut max_error = 0.0f64;
    let mut max_row = 0.0f64;
    for _ in 0..instances {
        let t = rng.random_range(1..=6usize);
        let v = rng.random_range(1..=4usize);
        let classes = v + 1;
        let logits: Vec<f64> = (0..t * classes).map(|_| rng.random_range(-2.0..2.0)).collect();
        let label = random_label(&mut rng, v, 3, t);
        let loss = |l: &[f64]| -> Result<f64> { Ok(-ctc_log_loss(&PosteriorGrid::from_logits(l.to_vec(), classes)?, &label)?) };
        let analytic = ctc_grad(&PosteriorGrid::from_logits(logits.clone(), classes)?, &label)?;
        let mut numeric = Vec::with_capacity(logits.len());
        for i in 0..logits.len() {
            let mut up = logits.clone();
            let mut down = logits.clone();
            up[i] += FD_STEP;
            down[i] -= FD_STEP;
            numeric.push((loss(&up)? - loss(&down)?) / (2.0 * FD_STEP));
        }
        let scale = numeric.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        let diff = analytic.iter().zip(&numeric).fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
        max_error = max_error.max(diff / scale);
        for row in analytic.chunks(classes) {
            max_row = max_row.max(row.iter().sum::<f64>().abs());
        }
    }
    Ok(SuiteResult {
        suite: "grad",
        instances,
        max_error,
        tolerance: GRAD_TOLERANCE,
        max_aux_error: Some(max_row),
        passed: max_error <= GRAD_TOLERANCE && max_row <= ROW_SUM_TOLERANCE,
    })
}

/// Reference selection: full sort by descending value, ascending index on ties.
pub fn select_pairs_by_sort(values: &[f64], r: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(r);
    idx.sort_unstable();
    idx
}

/// Random similarity vectors drawn from a small value pool so that at least
/// 30% of the entries repeat an earlier one.
pub fn random_similarities(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let pool: Vec<f64> = (0..(len / 5).max(1)).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (0..len)
        .map(|_| {
            if rng.random_bool(0.6) {
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(-1.0..=1.0)
            }
        })
        .collect()
}

fn duplicate_fraction(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    (v.len() - s.len()) as f64 / v.len().max(1) as f64
}

/// `select_pairs` against the sort reference. Counts a mismatch as error 1.
pub fn select_suite(instances: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "oracle/select"));
    let mut mismatches = 0usize;
    let mut done = 0;
    while done < instances {
        let len = rng.random_range(10..=200usize);
        let v = random_similarities(&mut rng, len);
        if duplicate_fraction(&v) < 0.3 {
            continue;
        }
        done += 1;
        let r = rng.random_range(0..=len);
        if select_pairs(&SimilarityVector(v.clone()), r)? != select_pairs_by_sort(&v, r) {
            mismatches += 1;
        }
    }
    Ok(SuiteResult {
        suite: "select",
        instances,
        max_error: if mismatches > 0 { 1.0 } else { 0.0 },
        tolerance: 0.0,
        max_aux_error: None,
        passed: mismatches == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_small() {
        assert!(ctc_suite(50, 6, 1).unwrap().passed);
        assert!(grad_suite(20, 1).unwrap().passed);
        assert!(select_suite(50, 1).unwrap().passed);
    }

    #[test]
    fn generator_produces_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_similarities(&mut rng, 100);
        assert!(duplicate_fraction(&v) >= 0.3);
    }

    #[test]
    fn sort_reference_tie_break() {
        assert_eq!(select_pairs_by_sort(&[0.5, 0.9, 0.5, 0.9], 3), vec![0, 1, 3]);
    }
}
