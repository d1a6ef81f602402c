//! Finite-sample bound calculators and subagging design statistics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, LN_2};

use libm::{ceil, exp, log, pow, sqrt};

use crate::ensemble::{Design, SbpmtModel};
use crate::{Dataset, Error, Result};

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

/// Coverage statistics of a subagging design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignStats {
    /// `coverage[k]`: number of subsets containing row `k`.
    pub coverage: Vec<usize>,
    /// `Σ_k R_k² / M²`.
    pub a: f64,
    /// `Σ_{k≠l} R_kl² / M²` over ordered pairs, `R_kl` counting the subsets
    /// that contain both `k` and `l`.
    pub b: f64,
    /// `max_k R_k / M`.
    pub c: f64,
}

/// Computes [`DesignStats`]. The pair sum uses
/// `Σ_{k≠l} R_kl² = Σ_{i,j} |D_i∩D_j|·(|D_i∩D_j| - 1)`.
pub fn design_stats(design: &Design) -> Result<DesignStats> {
    let members = design.subsets.len();
    if members == 0 {
        return Err(invalid("design", "has no subsets"));
    }
    let mut coverage = vec![0usize; design.n];
    for s in &design.subsets {
        for &i in s {
            if i >= design.n {
                return Err(invalid("design", "subset index out of range"));
            }
            coverage[i] += 1;
        }
    }
    let mut pair_sum: u128 = 0;
    for (i, di) in design.subsets.iter().enumerate() {
        let own = di.len() as u128;
        pair_sum += own * own.saturating_sub(1);
        for dj in &design.subsets[i + 1..] {
            let shared = sorted_intersection(di, dj) as u128;
            pair_sum += 2 * shared * shared.saturating_sub(1);
        }
    }
    let m2 = (members * members) as f64;
    let a = coverage.iter().map(|&r| (r * r) as f64).sum::<f64>() / m2;
    let c = coverage.iter().copied().max().unwrap_or(0) as f64 / members as f64;
    Ok(DesignStats {
        coverage,
        a,
        b: pair_sum as f64 / m2,
        c,
    })
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Inputs of the voting-classifier generalization bound. The kernel
/// moments `sigma1_sq`, `beta` and `gamma` must come from the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub m: usize,
    pub members: usize,
    pub delta: f64,
    pub p_sub: f64,
    pub sigma1_sq: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub q_a: f64,
    pub q_b: f64,
    pub q_c: f64,
    pub t: f64,
    pub rhs: f64,
    /// `M > ln² n` and `p_sub < ½`.
    pub hypothesis_ok: bool,
    /// `t ≤ 0`; `rhs` is then reported as 1.
    pub degenerate: bool,
}

/// Tail bound on the generalization error of the subagged vote.
pub fn theorem3_bound(inp: &BoundInputs) -> Result<BoundReport> {
    if inp.n == 0 || inp.m == 0 || inp.m > inp.n {
        return Err(invalid("m", "must satisfy 1 <= m <= n"));
    }
    if inp.members == 0 {
        return Err(invalid("members", "must be at least 1"));
    }
    if !(inp.delta > 0.0 && inp.delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if !(0.0..=1.0).contains(&inp.p_sub) {
        return Err(invalid("p_sub", "must lie in [0, 1]"));
    }
    for v in [inp.sigma1_sq, inp.beta, inp.gamma] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid("kernel moment", "must be finite and non-negative"));
        }
    }
    let n = inp.n as f64;
    let m = inp.m as f64;
    let big_m = inp.members as f64;
    let l3 = log(3.0 / inp.delta);
    let k = 1.0 + 4.0 * sqrt(l3);
    let q_a = sqrt(m * m / n) + k * sqrt(m / big_m);
    let q_b = m * m / n + k * m / sqrt(big_m);
    let q_c = m / n + (sqrt(2.0 * m) + 3.0) / sqrt(big_m) * l3;
    let t = (ceil(big_m / 2.0) - big_m / 2.0) / big_m + 1.0 - 2.0 * inp.p_sub;
    let ln_n = log(n);
    let hypothesis_ok = big_m > ln_n * ln_n && inp.p_sub < 0.5;
    let degenerate = t <= 0.0;
    let rhs = if degenerate {
        1.0
    } else {
        let denom = 2.0 * q_a * q_a * inp.sigma1_sq
            + q_b * q_b * inp.beta / 2.0
            + (sqrt(q_b * inp.gamma) + 4.0 * q_c * q_c / 3.0) * t;
        exp(-t * t / denom)
    };
    Ok(BoundReport {
        q_a,
        q_b,
        q_c,
        t,
        rhs,
        hypothesis_ok,
        degenerate,
    })
}

/// `√(32·[T ln(en/T) + d ln(en/d) + ln(8/δ)] / n)`.
fn complexity_term(n: usize, rounds: usize, vc_dim: usize, delta: f64) -> Result<f64> {
    if rounds == 0 || vc_dim == 0 {
        return Err(invalid("rounds/vc_dim", "must be at least 1"));
    }
    if n < rounds.max(vc_dim) {
        return Err(invalid("n", "must be at least max(rounds, vc_dim)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    let (n, t, d) = (n as f64, rounds as f64, vc_dim as f64);
    Ok(sqrt(
        32.0 * (t * log(E * n / t) + d * log(E * n / d) + log(8.0 / delta)) / n,
    ))
}

/// Empirical error plus the complexity term for `rounds` boosting rounds
/// over a base class of VC dimension `vc_dim`.
pub fn theorem4_bound(
    n: usize,
    rounds: usize,
    vc_dim: usize,
    delta: f64,
    empirical_error: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&empirical_error) {
        return Err(invalid("empirical error", "must lie in [0, 1]"));
    }
    Ok(empirical_error + complexity_term(n, rounds, vc_dim, delta)?)
}

/// `2^T Π_t √(err_t^(1-θ) (1-err_t)^(1+θ))`.
pub fn theorem5_bound(errors: &[f64], theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let mut v = 1.0;
    for &e in errors {
        if !(e > 0.0 && e < 1.0) {
            return Err(invalid("stage error", "must lie in (0, 1)"));
        }
        v *= 2.0 * sqrt(pow(e, 1.0 - theta) * pow(1.0 - e, 1.0 + theta));
    }
    Ok(v)
}

/// `exp(-2 Σ_t (½ - err_t)²)`.
pub fn exponential_bound(errors: &[f64]) -> f64 {
    let s: f64 = errors.iter().map(|e| (0.5 - e) * (0.5 - e)).sum();
    exp(-2.0 * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem6Report {
    /// `exp(-2 Σ γ_t²)` with `γ_t = ½ - ε_t/ln 2`, or 1 when the hypothesis
    /// fails.
    pub first_term: f64,
    pub complexity: f64,
    pub value: f64,
    /// Every `ε_t/ln 2` lies in `[0, ½)`.
    pub hypothesis_ok: bool,
}

/// Bound driven by the weighted probit risks of the boosted trees.
pub fn theorem6_bound(
    probit_risks: &[f64],
    n: usize,
    rounds: usize,
    vc_dim: usize,
    delta: f64,
) -> Result<Theorem6Report> {
    if probit_risks.iter().any(|r| !r.is_finite()) {
        return Err(invalid("probit risk", "must be finite"));
    }
    let complexity = complexity_term(n, rounds, vc_dim, delta)?;
    let hypothesis_ok = probit_risks.iter().all(|&r| r >= 0.0 && r / LN_2 < 0.5);
    let first_term = if hypothesis_ok {
        let s: f64 = probit_risks
            .iter()
            .map(|&r| (0.5 - r / LN_2) * (0.5 - r / LN_2))
            .sum();
        exp(-2.0 * s)
    } else {
        1.0
    };
    Ok(Theorem6Report {
        first_term,
        complexity,
        value: first_term + complexity,
        hypothesis_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSubEstimate {
    pub value: f64,
    /// No member had rows outside its subset; `value` is the training
    /// error of the ensemble instead.
    pub fallback: bool,
}

/// Average out-of-subset error of the members on their training data.
pub fn estimate_p_sub(model: &SbpmtModel, data: &Dataset) -> Result<PSubEstimate> {
    if data.n_rows() != model.design.n {
        return Err(Error::LengthMismatch {
            what: "training rows",
            expected: model.design.n,
            actual: data.n_rows(),
        });
    }
    if data.n_features() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            actual: data.n_features(),
        });
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut inside = vec![false; data.n_rows()];
    for (member, subset) in model.members.iter().zip(&model.design.subsets) {
        inside.iter_mut().for_each(|b| *b = false);
        subset.iter().for_each(|&i| inside[i] = true);
        let held_out: Vec<usize> = (0..data.n_rows()).filter(|&i| !inside[i]).collect();
        if held_out.is_empty() {
            continue;
        }
        let wrong = held_out
            .iter()
            .filter(|&&i| member.predict_unchecked(data.row(i)) != data.label(i))
            .count();
        sum += wrong as f64 / held_out.len() as f64;
        used += 1;
    }
    if used == 0 {
        return Ok(PSubEstimate {
            value: model.error_rate(data)?,
            fallback: true,
        });
    }
    Ok(PSubEstimate {
        value: sum / used as f64,
        fallback: false,
    })
}

#[cfg(test)]
#[allow(
    clippy::excessive_precision,
    clippy::too_many_arguments,
    clippy::type_complexity,
    clippy::needless_range_loop
)]
mod tests {
    use super::*;
    use crate::ensemble::{draw_design, fit_sbpmt, SbpmtConfig};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn design(n: usize, subsets: Vec<Vec<usize>>) -> Design {
        Design {
            n,
            m: subsets[0].len(),
            subsets,
            seed: 0,
        }
    }

    /// Direct `R_kl` counting over all ordered pairs.
    fn brute_force(d: &Design) -> (Vec<usize>, u64) {
        let mut r = vec![0usize; d.n];
        let mut pair = 0u64;
        for k in 0..d.n {
            r[k] = d.subsets.iter().filter(|s| s.contains(&k)).count();
            for l in 0..d.n {
                if k != l {
                    let rkl = d
                        .subsets
                        .iter()
                        .filter(|s| s.contains(&k) && s.contains(&l))
                        .count() as u64;
                    pair += rkl * rkl;
                }
            }
        }
        (r, pair)
    }

    #[test]
    fn design_stats_examples() {
        let s = design_stats(&design(3, vec![vec![0, 1], vec![1, 2]])).unwrap();
        assert_eq!(s.coverage, vec![1, 2, 1]);
        assert_eq!((s.a, s.b, s.c), (1.5, 1.0, 1.0));
        let s = design_stats(&design(5, vec![(0..5).collect()])).unwrap();
        assert_eq!((s.a, s.b, s.c), (5.0, 20.0, 1.0));
        let s = design_stats(&design(4, vec![vec![0, 1], vec![2, 3]])).unwrap();
        assert_eq!((s.a, s.b, s.c), (1.0, 1.0, 0.5));
    }

    fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize == m)
            .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn design_stats_match_brute_force_exhaustively() {
        let mut checked = 0;
        for n in 1..=6 {
            for m in 1..=3.min(n) {
                let subsets = combinations(n, m);
                for members in 1..=3 {
                    let mut idx = vec![0usize; members];
                    loop {
                        let d = design(n, idx.iter().map(|&i| subsets[i].clone()).collect());
                        let s = design_stats(&d).unwrap();
                        let (r, pair) = brute_force(&d);
                        let mm = (members * members) as f64;
                        assert_eq!(s.coverage, r);
                        assert_eq!(s.b, pair as f64 / mm);
                        assert_eq!(s.a, r.iter().map(|&x| (x * x) as f64).sum::<f64>() / mm);
                        assert_eq!(s.c, *r.iter().max().unwrap() as f64 / members as f64);
                        assert_eq!(r.iter().sum::<usize>(), members * m);
                        checked += 1;
                        let mut pos = 0;
                        while pos < members {
                            idx[pos] += 1;
                            if idx[pos] < subsets.len() {
                                break;
                            }
                            idx[pos] = 0;
                            pos += 1;
                        }
                        if pos == members {
                            break;
                        }
                    }
                }
            }
        }
        assert!(checked > 10_000);
    }

    fn inputs(
        n: usize,
        m: usize,
        members: usize,
        delta: f64,
        p_sub: f64,
        s: f64,
        b: f64,
        g: f64,
    ) -> BoundInputs {
        BoundInputs {
            n,
            m,
            members,
            delta,
            p_sub,
            sigma1_sq: s,
            beta: b,
            gamma: g,
        }
    }

    #[test]
    fn theorem3_matches_oracle() {
        let cases = [
            (
                inputs(100, 70, 21, 0.05, 0.1, 0.01, 0.001, 0.001),
                [
                    23.602921674489763,
                    187.91000888721783,
                    13.951929898882672,
                    0.8238095238095238,
                    0.99721067163815365,
                ],
            ),
            (
                inputs(20000, 14000, 99, 0.05, 0.05, 1e-6, 1e-9, 1e-9),
                [
                    207.13624461828351,
                    22595.450611191016,
                    70.791128158195358,
                    0.90505050505050504,
                    0.99986456771759201,
                ],
            ),
            (
                inputs(1000, 700, 50, 0.1, 0.2, 0.001, 1e-5, 1e-5),
                [
                    53.47956132768936,
                    1319.2741764050801,
                    20.140450703080544,
                    0.6,
                    0.99893862198342516,
                ],
            ),
            (
                inputs(500, 350, 200, 0.01, 0.3, 0.0, 0.0, 0.0),
                [
                    29.612831835913594,
                    506.17434562377673,
                    12.580754894297279,
                    0.4,
                    0.99810636474846272,
                ],
            ),
            (
                inputs(50, 25, 7, 0.2, 0.45, 0.05, 0.01, 0.02),
                [
                    17.865039778900976,
                    84.147529364841193,
                    10.808208900504058,
                    0.17142857142857141,
                    0.99968822070534132,
                ],
            ),
        ];
        for (inp, want) in cases {
            let r = theorem3_bound(&inp).unwrap();
            for (got, want) in [r.q_a, r.q_b, r.q_c, r.t, r.rhs].into_iter().zip(want) {
                assert!(close(got, want, 1e-12), "{got} vs {want}");
            }
            assert!(!r.degenerate);
        }
    }

    #[test]
    fn theorem3_hypothesis_threshold() {
        let base = inputs(20000, 14000, 98, 0.05, 0.1, 0.0, 0.0, 0.0);
        assert!(close(
            log(20000.0) * log(20000.0),
            98.079065703238028,
            1e-14
        ));
        assert!(!theorem3_bound(&base).unwrap().hypothesis_ok);
        assert!(
            theorem3_bound(&BoundInputs {
                members: 99,
                ..base
            })
            .unwrap()
            .hypothesis_ok
        );
        assert!(
            !theorem3_bound(&BoundInputs {
                members: 99,
                p_sub: 0.5,
                ..base
            })
            .unwrap()
            .hypothesis_ok
        );
    }

    #[test]
    fn theorem3_parity_term() {
        let even = theorem3_bound(&inputs(100, 70, 20, 0.05, 0.25, 0.0, 0.0, 0.0)).unwrap();
        let odd = theorem3_bound(&inputs(100, 70, 21, 0.05, 0.25, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(even.t, 0.5);
        assert!(close(odd.t, 0.5 + 0.5 / 21.0, 1e-15));
    }

    #[test]
    fn theorem3_degenerate_and_errors() {
        let r = theorem3_bound(&inputs(100, 70, 20, 0.05, 0.5, 0.1, 0.1, 0.1)).unwrap();
        assert!(r.degenerate && r.rhs == 1.0);
        assert!(theorem3_bound(&inputs(100, 170, 20, 0.05, 0.1, 0.1, 0.1, 0.1)).is_err());
        assert!(theorem3_bound(&inputs(100, 70, 20, 1.0, 0.1, 0.1, 0.1, 0.1)).is_err());
        assert!(theorem3_bound(&inputs(100, 70, 20, 0.05, 0.1, -0.1, 0.1, 0.1)).is_err());
        assert!(theorem3_bound(&inputs(100, 70, 0, 0.05, 0.1, 0.1, 0.1, 0.1)).is_err());
    }

    #[test]
    fn theorem3_monotone_in_p_sub() {
        for &(s, b, g) in &[(0.0, 0.0, 0.0), (0.01, 0.001, 0.001), (1e-4, 1e-6, 1e-3)] {
            for &members in &[5usize, 21, 100, 101] {
                let mut prev = 0.0;
                for i in 0..100 {
                    let p = i as f64 / 200.0;
                    let r = theorem3_bound(&inputs(1000, 700, members, 0.05, p, s, b, g)).unwrap();
                    assert!(r.rhs > 0.0 && r.rhs.is_finite());
                    assert!(r.rhs >= prev);
                    prev = r.rhs;
                }
            }
        }
    }

    #[test]
    fn theorem3_decreasing_in_members() {
        let grid = |start: usize, lo: usize| {
            for &(s, b, g) in &[(0.0, 0.0, 0.0), (0.01, 0.001, 0.001), (1e-4, 1e-6, 1e-3)] {
                for &p in &[0.0, 0.1, 0.3, 0.45] {
                    let mut prev = f64::INFINITY;
                    for members in (start..600).step_by(2).filter(|&m| m >= lo) {
                        let r =
                            theorem3_bound(&inputs(1000, 700, members, 0.05, p, s, b, g)).unwrap();
                        assert!(r.rhs <= prev, "M={members} p={p}");
                        prev = r.rhs;
                    }
                }
            }
        };
        // Even M: the parity term vanishes.
        grid(2, 0);
        // Odd M inside the hypothesis region M > ln² n.
        grid(1, 48);
    }

    #[test]
    fn theorem3_small_odd_members_can_increase() {
        // The ½/M parity bonus in t shrinks faster than the Q terms here.
        let r = |members| {
            theorem3_bound(&inputs(1000, 700, members, 0.05, 0.45, 0.01, 0.001, 0.001))
                .unwrap()
                .rhs
        };
        assert!(r(3) > r(1));
        assert!(r(5) > r(3));
    }

    #[test]
    fn theorem4_matches_oracle() {
        let cases = [
            ((1000, 5, 20, 0.05, 0.0), 2.0769764236045583),
            ((20000, 5, 100, 0.05, 0.02), 1.0641280830783531),
            ((500, 10, 10, 0.1, 0.1), 2.6627795752984991),
            ((100, 100, 100, 0.05, 0.0), 8.1008675844550641),
            ((5000, 1, 3, 0.01, 0.25), 0.76510028617241391),
        ];
        for ((n, t, d, delta, err), want) in cases {
            assert!(close(
                theorem4_bound(n, t, d, delta, err).unwrap(),
                want,
                1e-12
            ));
        }
        assert!(theorem4_bound(10, 20, 1, 0.05, 0.0).is_err());
        assert!(theorem4_bound(100, 0, 1, 0.05, 0.0).is_err());
        assert!(theorem4_bound(100, 1, 1, 0.05, 1.5).is_err());
    }

    #[test]
    fn theorem4_increases_with_rounds() {
        let mut prev = 0.0;
        for t in 1..1000 {
            let v = theorem4_bound(1000, t, 20, 0.05, 0.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn theorem5_matches_oracle() {
        let cases: [(&[f64], f64, f64); 6] = [
            (&[0.25], 0.0, 0.86602540378443865),
            (&[0.5, 0.5, 0.5], 0.0, 1.0),
            (&[0.1, 0.2, 0.3], 0.0, 0.43992726671576066),
            (&[0.1, 0.2, 0.3], 0.1, 0.54902844374724968),
            (&[0.05, 0.4, 0.45, 0.3, 0.2], 0.25, 0.64204226896264652),
            (&[0.01; 5], -0.5, 9.9929559170387374e-7),
        ];
        for (errs, theta, want) in cases {
            assert!(close(theorem5_bound(errs, theta).unwrap(), want, 1e-12));
        }
        assert_eq!(theorem5_bound(&[], 0.0).unwrap(), 1.0);
        assert!(theorem5_bound(&[0.0], 0.0).is_err());
        assert!(theorem5_bound(&[0.2], f64::NAN).is_err());
    }

    #[test]
    fn theorem6_matches_oracle() {
        let cases: [(&[f64], usize, usize, usize, f64, f64); 5] = [
            (&[0.0; 5], 1000, 5, 20, 0.05, 2.1590614222284571),
            (&[0.1, 0.2, 0.05], 2000, 3, 30, 0.05, 2.2061225246780244),
            (&[0.3; 5], 500, 5, 10, 0.1, 3.2401071791468357),
            (
                &[0.17328679513998632; 4],
                10000,
                4,
                50,
                0.01,
                1.6752070958312482,
            ),
            (
                &[0.01, 0.02, 0.03, 0.04, 0.05, 0.06],
                800,
                6,
                40,
                0.05,
                2.9181415743606545,
            ),
        ];
        for (risks, n, t, d, delta, want) in cases {
            let r = theorem6_bound(risks, n, t, d, delta).unwrap();
            assert!(r.hypothesis_ok);
            assert!(close(r.value, want, 1e-12), "{} vs {want}", r.value);
        }
        let r = theorem6_bound(&[0.0; 4], 1000, 4, 20, 0.05).unwrap();
        assert!(close(r.first_term, exp(-2.0), 1e-15));
        let r = theorem6_bound(&[0.4], 1000, 1, 20, 0.05).unwrap();
        assert!(!r.hypothesis_ok);
        assert_eq!(r.first_term, 1.0);
    }

    proptest! {
        #[test]
        fn theorem5_is_below_exponential_bound(errs in proptest::collection::vec(1e-6f64..0.5, 0..20)) {
            prop_assert!(theorem5_bound(&errs, 0.0).unwrap() <= exponential_bound(&errs) * (1.0 + 1e-12));
        }

        #[test]
        fn random_designs_match_brute_force(n in 1usize..25, frac in 0.05f64..1.0, members in 1usize..6, seed in 0u64..1000) {
            let ratio = frac.max(1.0 / n as f64);
            let d = draw_design(n, ratio, members, seed).unwrap();
            let s = design_stats(&d).unwrap();
            let (r, pair) = brute_force(&d);
            prop_assert_eq!(&s.coverage, &r);
            prop_assert_eq!(s.b, pair as f64 / (members * members) as f64);
            prop_assert_eq!(s.coverage.iter().sum::<usize>(), members * d.m);
        }
    }

    fn blobs() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let c = i % 2;
            rows.push(vec![c as f64 * 10.0 + (i / 2) as f64 * 0.01]);
            labels.push(c);
        }
        Dataset::from_rows(&rows, labels, 2).unwrap()
    }

    #[test]
    fn p_sub_for_perfect_members_is_zero() {
        let d = blobs();
        let cfg = SbpmtConfig {
            min_leaf_size: 5,
            ..SbpmtConfig::benchmark()
        };
        let fit = fit_sbpmt(&d, &cfg).unwrap();
        let est = estimate_p_sub(&fit.model, &d).unwrap();
        assert_eq!(
            est,
            PSubEstimate {
                value: 0.0,
                fallback: false
            }
        );
        let full = fit_sbpmt(
            &d,
            &SbpmtConfig {
                subsample_ratio: 1.0,
                ..cfg
            },
        )
        .unwrap();
        assert!(estimate_p_sub(&full.model, &d).unwrap().fallback);
    }

    #[test]
    fn p_sub_counts_held_out_errors() {
        // Member 0 is trained on rows {0,1}, member 1 on {2,3}; both then
        // replaced by constant predictors to make the count explicit.
        let d = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 1, 1],
            2,
        )
        .unwrap();
        let cfg = SbpmtConfig {
            members: 2,
            subsample_ratio: 0.5,
            min_leaf_size: 1,
            ..SbpmtConfig::benchmark()
        };
        let mut fit = fit_sbpmt(&d, &cfg).unwrap();
        fit.model.design.subsets = vec![vec![0, 1], vec![2, 3]];
        let always = |class: usize| {
            let mut m = fit.model.members[0].clone();
            m.stages.truncate(1);
            let leaf = &mut m.stages[0].model;
            leaf.tree = crate::cart::Tree::stump(1);
            let mut s = crate::probitboost::LinearScore::zeros(1);
            s.intercept = if class == 1 { 1.0 } else { -1.0 };
            leaf.leaves = vec![crate::pmt::LeafModel::Binary(s)];
            m
        };
        fit.model.members = vec![always(1), always(0)];
        // Member 0 on rows {2,3}: both label 1, predicts 1 -> 0 errors.
        // Member 1 on rows {0,1}: labels 0,1, predicts 0 -> 1 error of 2.
        let est = estimate_p_sub(&fit.model, &d).unwrap();
        assert_eq!(est.value, 0.25);
        assert!(estimate_p_sub(
            &fit.model,
            &Dataset::from_rows(&[vec![0.0]], vec![0], 2).unwrap()
        )
        .is_err());
    }
}
