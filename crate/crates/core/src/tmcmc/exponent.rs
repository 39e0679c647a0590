//! Selection of the next tempering exponent from the weight COV.

use crate::scalar::Real;

/// Stop bisecting once the COV is this close to the target...
pub const COV_TOLERANCE: f64 = 1e-3;
/// ...or the exponent bracket is narrower than this.
pub const STEP_TOLERANCE: f64 = 1e-6;

/// Sample coefficient of variation of `exp(dq · ln_l)`, with `-∞` entries
/// contributing zero weight.
pub fn weight_cov<T: Real>(ln_l: &[T], dq: T) -> T {
    let n = ln_l.len();
    if n < 2 {
        return T::zero();
    }
    let max = ln_l.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return T::zero();
    }
    let w: Vec<T> = ln_l
        .iter()
        .map(|&l| {
            if l == T::neg_infinity() {
                T::zero()
            } else {
                (dq * (l - max)).exp()
            }
        })
        .collect();
    let nf = T::from_usize(n).unwrap();
    let mean = w.iter().copied().sum::<T>() / nf;
    if mean <= T::zero() {
        return T::zero();
    }
    let var = w.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (nf - T::one());
    var.sqrt() / mean
}

/// Next exponent from log-likelihoods of the previous stage.
///
/// Bisects `Δq ∈ (0, 1 - q_prev]` for `COV{L^Δq} = cov_target`, clipping to
/// one when the full step stays under the target. The result is always
/// strictly greater than `q_prev`.
pub fn solve_exponent_ln<T: Real>(ln_l: &[T], q_prev: T, cov_target: T) -> T {
    assert!(
        q_prev >= T::zero() && q_prev < T::one(),
        "q_prev must lie in [0, 1)"
    );
    let first = ln_l.first().copied();
    if ln_l.iter().all(|&l| Some(l) == first) {
        return T::one();
    }
    let max_step = T::one() - q_prev;
    if weight_cov(ln_l, max_step) <= cov_target {
        return T::one();
    }

    let tol_cov = T::lit(COV_TOLERANCE);
    let tol_step = T::lit(STEP_TOLERANCE);
    let (mut lo, mut hi) = (T::zero(), max_step);
    while hi - lo >= tol_step {
        let mid = (lo + hi) / T::lit(2.0);
        let cov = weight_cov(ln_l, mid);
        if (cov - cov_target).abs() <= tol_cov {
            return (q_prev + mid).min(T::one());
        }
        if cov > cov_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let step = if lo > T::zero() { lo } else { hi };
    (q_prev + step).min(T::one())
}

/// Next exponent from raw (non-negative) consequences.
pub fn solve_exponent<T: Real>(consequences: &[T], q_prev: T, cov_target: T) -> T {
    let ln_l: Vec<T> = consequences.iter().map(|&c| c.ln()).collect();
    solve_exponent_ln(&ln_l, q_prev, cov_target)
}
