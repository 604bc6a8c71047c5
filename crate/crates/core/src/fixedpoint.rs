//! Optimal common rate fraction and power vector for a fixed beam configuration.
//!
//! The mapping
//!
//! ```text
//! T_n(p) = min_m  R̄_n p_n / (W log2(1 + s_n(p, m)))
//! ```
//!
//! is positive, monotone and scalable. The normalized iteration
//! `p <- P̄ T(p) / ||T(p)||_inf` converges to the conditional eigenvector
//! `T(p*) = λ p*`, `||p*||_inf = P̄`, and the max-min fraction is `c* = 1 / λ`.

use crate::channel::{achievable_rate, interference, sinr, ChannelMatrix, LinkBudget};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default iteration budget for evaluation solves.
pub const DEFAULT_ITERATIONS: usize = 100;

/// Solver output for one beam configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    /// Common fraction `c` of the interference-free rates.
    pub fraction: T,
    /// Transmit powers, watts.
    pub powers: Vec<T>,
    /// Serving AP of each UE.
    pub assignment: Vec<usize>,
    pub iterations_used: usize,
    /// `max_n |R_n(p) / R̄_n - c| / c` at the returned powers.
    pub residual: T,
}

fn check_dims<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, r_bar: &[T]) {
    assert_eq!(p.len(), h.n_ues(), "power vector length must match the UE count");
    assert_eq!(r_bar.len(), h.n_ues(), "rate vector length must match the UE count");
}

/// Per-UE best value over APs of `h[m][n] / (interference + noise)`.
#[inline]
fn best_normalized_gain<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, noise: T, n: usize) -> T {
    (0..h.n_aps())
        .map(|m| h.gain(m, n) / interference(p, h, noise, n, m))
        .fold(T::zero(), T::max)
}

fn map_into<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, r_bar: &[T], budget: &LinkBudget<T>, out: &mut [T]) {
    for (n, t) in out.iter_mut().enumerate() {
        let g = best_normalized_gain(p, h, budget.noise_power, n);
        *t = if p[n] > T::zero() {
            // min over m of the ratio is attained at the best SINR
            r_bar[n] * p[n] / budget.rate(p[n] * g)
        } else {
            // limit p_n -> 0 of p_n / log2(1 + p_n g) = ln 2 / g
            r_bar[n] * T::LN_2() / (budget.bandwidth * g)
        };
    }
}

/// Evaluates `T(p)`. Components with `p_n = 0` use the continuous extension.
pub fn interference_map<T: Scalar>(
    p: &[T],
    h: &ChannelMatrix<T>,
    r_bar: &[T],
    budget: &LinkBudget<T>,
) -> Vec<T> {
    check_dims(p, h, r_bar);
    let mut out = vec![T::zero(); p.len()];
    map_into(p, h, r_bar, budget, &mut out);
    out
}

fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Runs the normalized fixed-point iteration from `p = P̄ 1`.
///
/// Stops after `max_iters` updates, or earlier once the sup-norm step
/// relative to `P̄` is at most `tol`. With `tol == 0` exactly `max_iters`
/// updates are performed.
pub fn solve<T: Scalar>(
    h: &ChannelMatrix<T>,
    r_bar: &[T],
    budget: &LinkBudget<T>,
    max_iters: usize,
    tol: T,
) -> Allocation<T> {
    assert!(max_iters >= 1, "at least one fixed-point iteration is required");
    let n = h.n_ues();
    let p_max = budget.max_power;
    let mut p = vec![p_max; n];
    check_dims(&p, h, r_bar);
    let mut t = vec![T::zero(); n];
    let mut iterations_used = 0;
    for _ in 0..max_iters {
        map_into(&p, h, r_bar, budget, &mut t);
        let scale = inf_norm(&t);
        let mut step = T::zero();
        for (pn, &tn) in p.iter_mut().zip(&t) {
            let next = p_max * (tn / scale);
            step = step.max((next - *pn).abs());
            *pn = next;
        }
        iterations_used += 1;
        if tol > T::zero() && step / p_max <= tol {
            break;
        }
    }
    map_into(&p, h, r_bar, budget, &mut t);
    let fraction = p_max / inf_norm(&t);
    let residual = fairness_residual(&p, h, r_bar, budget, fraction);
    let assignment = recover_assignment(&p, h, r_bar, budget);
    Allocation {
        fraction,
        powers: p,
        assignment,
        iterations_used,
        residual,
    }
}

/// `max_n |R_n(p) / R̄_n - c| / c`.
pub fn fairness_residual<T: Scalar>(
    p: &[T],
    h: &ChannelMatrix<T>,
    r_bar: &[T],
    budget: &LinkBudget<T>,
    fraction: T,
) -> T {
    (0..p.len())
        .map(|n| ((achievable_rate(p, h, budget, n) / r_bar[n] - fraction) / fraction).abs())
        .fold(T::zero(), T::max)
}

/// Serving AP per UE: the AP minimizing `R̄_n p_n / (W log2(1 + s_n(p, m)))`,
/// ties to the lowest index.
pub fn recover_assignment<T: Scalar>(
    p: &[T],
    h: &ChannelMatrix<T>,
    r_bar: &[T],
    budget: &LinkBudget<T>,
) -> Vec<usize> {
    check_dims(p, h, r_bar);
    (0..p.len())
        .map(|n| {
            let mut best = (0, T::infinity());
            for m in 0..h.n_aps() {
                let v = r_bar[n] * p[n] / budget.rate(sinr(p, h, budget.noise_power, n, m));
                if v < best.1 {
                    best = (m, v);
                }
            }
            best.0
        })
        .collect()
}

/// Ratio of an achieved fraction to the exhaustive optimum.
pub fn solution_efficiency<T: Scalar>(fraction: T, optimum: T) -> Result<T> {
    if !(optimum > T::zero()) {
        return Err(Error::Config(format!(
            "optimal fraction must be positive, got {optimum}"
        )));
    }
    Ok(fraction / optimum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_budget(p_max: f64) -> LinkBudget<f64> {
        LinkBudget::new(p_max, 1.0, 1.0)
    }

    #[test]
    fn lone_ue_reaches_interference_free_rate() {
        let budget = unit_budget(2.0);
        let h = ChannelMatrix::from_rows(&[vec![3.0]]).unwrap();
        let r_bar = vec![budget.rate(2.0 * 3.0)];
        let t = interference_map(&[2.0], &h, &r_bar, &budget);
        assert_relative_eq!(t[0], 2.0, max_relative = 1e-14);
        let a = solve(&h, &r_bar, &budget, 100, 0.0);
        assert_relative_eq!(a.fraction, 1.0, max_relative = 1e-14);
        assert_eq!(a.powers, vec![2.0]);
        assert_eq!(a.assignment, vec![0]);
        assert_eq!(a.iterations_used, 100);
    }

    #[test]
    fn symmetric_pair_closed_form() {
        // P̄ h / σ² = 10
        let budget = unit_budget(1.0);
        let h = ChannelMatrix::from_rows(&[vec![10.0, 10.0]]).unwrap();
        let r_bar = vec![budget.rate(10.0); 2];
        let a = solve(&h, &r_bar, &budget, 100, 0.0);
        let expected = (1.0f64 + 10.0 / 11.0).log2() / 11f64.log2();
        assert_relative_eq!(a.fraction, expected, max_relative = 1e-12);
        assert!((a.fraction - 0.2697).abs() < 1e-4);
        assert_eq!(a.powers, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_power_extension_is_the_limit() {
        let budget = unit_budget(1.0);
        let h = ChannelMatrix::from_rows(&[vec![2.0, 0.5], vec![1.0, 3.0]]).unwrap();
        let r_bar = vec![5.0, 7.0];
        let at_zero = interference_map(&[0.0, 0.4], &h, &r_bar, &budget);
        let near = interference_map(&[1e-9, 0.4], &h, &r_bar, &budget);
        assert!(at_zero.iter().all(|&t| t > 0.0));
        assert_relative_eq!(at_zero[0], near[0], max_relative = 1e-8);
    }

    #[test]
    fn early_stop_uses_fewer_iterations() {
        let budget = unit_budget(1.0);
        let h = ChannelMatrix::from_rows(&[vec![4.0, 0.3, 0.2], vec![0.5, 2.0, 0.6]]).unwrap();
        let r_bar = vec![3.0, 2.5, 1.5];
        let a = solve(&h, &r_bar, &budget, 1000, 1e-10);
        assert!(a.iterations_used < 1000);
        let b = solve(&h, &r_bar, &budget, 1000, 0.0);
        assert_relative_eq!(a.fraction, b.fraction, max_relative = 1e-8);
    }

    #[test]
    fn assignment_follows_best_sinr() {
        let budget = unit_budget(1.0);
        // UE 1 sees AP 1 far better
        let h = ChannelMatrix::from_rows(&[vec![5.0, 0.1], vec![0.2, 4.0]]).unwrap();
        let r_bar = vec![3.0, 3.0];
        assert_eq!(recover_assignment(&[1.0, 1.0], &h, &r_bar, &budget), vec![0, 1]);
        let single = ChannelMatrix::from_rows(&[vec![5.0, 0.1, 2.0]]).unwrap();
        assert_eq!(
            recover_assignment(&[1.0, 0.5, 0.2], &single, &[1.0; 3], &budget),
            vec![0, 0, 0]
        );
    }

    #[test]
    fn assignment_ties_go_to_lowest_index() {
        let budget = unit_budget(1.0);
        let h = ChannelMatrix::from_rows(&[vec![2.0], vec![2.0]]).unwrap();
        assert_eq!(recover_assignment(&[1.0], &h, &[1.0], &budget), vec![0]);
    }

    #[test]
    fn assignment_matches_sinr_argmax_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let budget = unit_budget(1.0);
        for _ in 0..500 {
            let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..8));
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0.01..10.0)).collect())
                .collect();
            let h = ChannelMatrix::from_rows(&rows).unwrap();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let r_bar: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
            let a = recover_assignment(&p, &h, &r_bar, &budget);
            for k in 0..n {
                let s: Vec<f64> = (0..m).map(|j| sinr(&p, &h, 1.0, k, j)).collect();
                let best = s.iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(s[a[k]], best);
            }
        }
    }

    #[test]
    fn efficiency_definition() {
        assert_eq!(solution_efficiency(0.5, 0.5).unwrap(), 1.0);
        assert_relative_eq!(solution_efficiency(0.8 * 0.3, 0.3).unwrap(), 0.8, epsilon = 1e-15);
        assert!(solution_efficiency(0.5, 0.0).is_err());
        assert!(solution_efficiency(0.5, -1.0).is_err());
    }

    #[test]
    fn solve_is_deterministic_and_power_binding() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let budget = unit_budget(0.7);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| rng.gen_range(0.01..10.0)).collect())
            .collect();
        let h = ChannelMatrix::from_rows(&rows).unwrap();
        let r_bar: Vec<f64> = (0..6)
            .map(|n| (0..3).map(|m| budget.rate(0.7 * h.gain(m, n))).fold(0.0, f64::max))
            .collect();
        let a = solve(&h, &r_bar, &budget, 100, 0.0);
        let b = solve(&h, &r_bar, &budget, 100, 0.0);
        assert_eq!(a, b);
        assert_eq!(a.powers.iter().cloned().fold(0.0, f64::max), 0.7);
        assert!(a.fraction <= 1.0 + 1e-9);
        assert!(a.residual < 1e-9);
    }
}
