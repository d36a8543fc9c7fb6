//! Photon-counting decision theory for threshold readout.
//!
//! The detector count for spin state |gᵢ⟩ is Poisson with mean Nᵢ. The spin
//! is reported as |g₀⟩ when at most k photons arrive. With equal priors the
//! best k is ⌊(N₁ − N₀)/(ln N₁ − ln N₀)⌋ and the success probability is
//! ½ + ½ Σ_{j≤M} (N₀ʲe^{−N₀} − N₁ʲe^{−N₁})/j!.

use crate::error::{Error, Result};
use crate::models::PhysicalParams;

/// Expected collected photon numbers for the two initial spin states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountsPair {
    pub n0: f64,
    pub n1: f64,
}

impl CountsPair {
    pub fn new(n0: f64, n1: f64) -> Result<Self> {
        for v in [n0, n1] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "photon counts must be finite and non-negative, got ({n0}, {n1})"
                )));
            }
        }
        Ok(Self { n0, n1 })
    }
}

/// Poisson pmf terms nʲe^{−n}/j! for j = 0, 1, 2, …
///
/// Multiplicative recursion while e^{−n} is representable, log-domain
/// recursion beyond that.
struct PoissonTerms {
    n: f64,
    j: u64,
    term: f64,
    log_term: f64,
    log_domain: bool,
}

impl PoissonTerms {
    fn new(n: f64) -> Self {
        let log_domain = n > 700.0;
        Self {
            n,
            j: 0,
            term: (-n).exp(),
            log_term: -n,
            log_domain,
        }
    }
}

impl Iterator for PoissonTerms {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = if self.log_domain {
            self.log_term.exp()
        } else {
            self.term
        };
        self.j += 1;
        let j = self.j as f64;
        if self.log_domain {
            self.log_term += self.n.ln() - j.ln();
        } else {
            self.term *= self.n / j;
        }
        Some(out)
    }
}

fn poisson_cdf(k: u64, n: f64) -> f64 {
    let mut sum = 0.0;
    for (j, t) in PoissonTerms::new(n).enumerate() {
        sum += t;
        if j as u64 >= k {
            break;
        }
        // past the mode the remaining terms cannot change the sum
        if j as f64 > n && t < f64::EPSILON * 1e-3 * sum {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// N₁ = ηTn_in, N₀ = ηTn_in/(1+C)².
pub fn analytic_counts(eta_t_nin: f64, c: f64) -> Result<CountsPair> {
    if !(eta_t_nin >= 0.0 && c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "analytic counts need eta*T*n_in >= 0 and C >= 0, got ({eta_t_nin}, {c})"
        )));
    }
    CountsPair::new(eta_t_nin / ((1.0 + c) * (1.0 + c)), eta_t_nin)
}

/// p₀(k) = P(X₀ ≤ k): probability of correctly reporting |g₀⟩.
pub fn correct_prob_g0(k: i64, n0: f64) -> Result<f64> {
    if k < 0 {
        return Err(Error::NegativeThreshold(k));
    }
    Ok(poisson_cdf(k as u64, n0))
}

/// p₁(k) = P(X₁ > k): probability of correctly reporting |g₁⟩.
pub fn correct_prob_g1(k: i64, n1: f64) -> Result<f64> {
    if k < 0 {
        return Err(Error::NegativeThreshold(k));
    }
    Ok((1.0 - poisson_cdf(k as u64, n1)).clamp(0.0, 1.0))
}

/// M = ⌊(N₁ − N₀)/(ln N₁ − ln N₀)⌋, and 0 when N₀ = 0.
pub fn optimal_threshold(counts: CountsPair) -> Result<u64> {
    let CountsPair { n0, n1 } = counts;
    if n1 <= n0 {
        return Err(Error::NoContrast { n0, n1 });
    }
    if n0 == 0.0 {
        return Ok(0);
    }
    // logarithmic mean of (n0, n1); ln_1p keeps the denominator accurate
    // when the two counts nearly coincide
    let log_mean = ((n1 - n0) / ((n1 - n0) / n0).ln_1p()).clamp(n0, n1);
    Ok(log_mean.floor() as u64)
}

/// Success probability and the threshold used. Without contrast
/// (N₁ ≤ N₀) the best the rule can do is 1/2, reported with threshold 0.
pub fn readout(counts: CountsPair) -> (f64, u64) {
    let m = match optimal_threshold(counts) {
        Ok(m) => m,
        Err(_) => return (0.5, 0),
    };
    let mut sum = 0.0;
    for (t0, t1) in PoissonTerms::new(counts.n0)
        .zip(PoissonTerms::new(counts.n1))
        .take(m as usize + 1)
    {
        sum += t0 - t1;
    }
    ((0.5 + 0.5 * sum).clamp(0.5, 1.0), m)
}

/// Equal-prior success probability.
pub fn success_probability(counts: CountsPair) -> f64 {
    readout(counts).0
}

/// P_s = max_k {q₀p₀(k) + q₁p₁(k)} by exhaustive scan over
/// k ∈ [0, ⌈N + 10√(N+1)⌉], N = max(N₀, N₁). Ties go to the smallest k.
pub fn success_probability_general(counts: CountsPair, q0: f64, q1: f64) -> Result<(f64, u64)> {
    if !(q0 >= 0.0 && q1 >= 0.0) || (q0 + q1 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPriors { q0, q1 });
    }
    let top = counts.n0.max(counts.n1);
    let k_max = (top + 10.0 * (top + 1.0).sqrt()).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut cdf0 = 0.0;
    let mut cdf1 = 0.0;
    for (k, (t0, t1)) in PoissonTerms::new(counts.n0)
        .zip(PoissonTerms::new(counts.n1))
        .take(k_max + 1)
        .enumerate()
    {
        cdf0 += t0;
        cdf1 += t1;
        let p = q0 * cdf0.min(1.0) + q1 * (1.0 - cdf1).max(0.0);
        if p > best.0 {
            best = (p, k as u64);
        }
    }
    Ok((best.0.min(1.0), best.1))
}

/// Accumulated (pre-efficiency) counts for both initial spin states.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsCurve {
    pub times: Vec<f64>,
    pub acc0: Vec<f64>,
    pub acc1: Vec<f64>,
}

impl CountsCurve {
    pub fn new(times: Vec<f64>, acc0: Vec<f64>, acc1: Vec<f64>) -> Result<Self> {
        if acc0.len() != times.len() || acc1.len() != times.len() {
            return Err(Error::GridMismatch(format!(
                "{} times, {} and {} count samples",
                times.len(),
                acc0.len(),
                acc1.len()
            )));
        }
        Ok(Self { times, acc0, acc1 })
    }
}

/// P_s(T) over a time grid and its maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutCurve {
    pub times: Vec<f64>,
    pub ps: Vec<f64>,
    pub thresholds: Vec<u64>,
    /// Collected counts ηN entering each P_s evaluation.
    pub n0: Vec<f64>,
    pub n1: Vec<f64>,
    pub t_opt: f64,
    pub m_opt: u64,
    pub ps_opt: f64,
    pub opt_index: usize,
}

impl ReadoutCurve {
    fn from_parts(
        times: Vec<f64>,
        ps: Vec<f64>,
        thresholds: Vec<u64>,
        n0: Vec<f64>,
        n1: Vec<f64>,
    ) -> Self {
        let mut opt_index = 0;
        for (i, &p) in ps.iter().enumerate() {
            if p > ps[opt_index] {
                opt_index = i;
            }
        }
        Self {
            t_opt: times[opt_index],
            m_opt: thresholds[opt_index],
            ps_opt: ps[opt_index],
            times,
            ps,
            thresholds,
            n0,
            n1,
            opt_index,
        }
    }

    /// Weighted pointwise average of curves on a common grid, then the
    /// maximum over T. Thresholds and counts are taken from `reference`.
    pub fn average(curves: &[ReadoutCurve], weights: &[f64], reference: usize) -> Result<Self> {
        if curves.is_empty() || curves.len() != weights.len() || reference >= curves.len() {
            return Err(Error::GridMismatch(format!(
                "{} curves with {} weights",
                curves.len(),
                weights.len()
            )));
        }
        let times = &curves[0].times;
        if curves.iter().any(|c| c.times != *times) {
            return Err(Error::GridMismatch(
                "curves sampled on different grids".into(),
            ));
        }
        let mut ps = vec![0.0; times.len()];
        for (c, &w) in curves.iter().zip(weights) {
            for (acc, &p) in ps.iter_mut().zip(&c.ps) {
                *acc += w * p;
            }
        }
        let r = &curves[reference];
        Ok(Self::from_parts(
            times.clone(),
            ps,
            r.thresholds.clone(),
            r.n0.clone(),
            r.n1.clone(),
        ))
    }
}

/// Applies collection efficiency `eta` and evaluates P_s at every time.
pub fn ps_curve(counts: &CountsCurve, eta: f64) -> Result<ReadoutCurve> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} outside [0, 1]"
        )));
    }
    if counts.times.is_empty() {
        return Err(Error::GridMismatch("empty time grid".into()));
    }
    let len = counts.times.len();
    let (mut ps, mut thresholds) = (Vec::with_capacity(len), Vec::with_capacity(len));
    let (mut n0s, mut n1s) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for (&a0, &a1) in counts.acc0.iter().zip(&counts.acc1) {
        // tiny negative round-off in a dark trajectory counts as zero
        let pair = CountsPair::new((eta * a0).max(0.0), (eta * a1).max(0.0))?;
        let (p, m) = readout(pair);
        ps.push(p);
        thresholds.push(m);
        n0s.push(pair.n0);
        n1s.push(pair.n1);
    }
    Ok(ReadoutCurve::from_parts(
        counts.times.clone(),
        ps,
        thresholds,
        n0s,
        n1s,
    ))
}

/// Transmitted flux of the empty resonant cavity, κ|⟨a⟩_ss|², photons/ns.
/// For a drive √(fκ)·ε(a + a†) this is 4fε².
pub fn calibrate_nin(p: &PhysicalParams) -> f64 {
    let eps = p.epsilon();
    4.0 * p.drive_coupling * eps * eps
}
