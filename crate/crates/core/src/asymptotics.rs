//! Closed-form limiting constants for the many-action regime, plus Poisson
//! reference laws and a total-variation helper for goodness-of-fit.
//!
//! For n >= 3 players the limiting fraction of PNE-having games that fail to
//! be connected is
//!
//! ```text
//! zeta_n = 1 - e^{-lambda_n} (1 - e^{lambda_n - 1}) / (1 - e^{-1})
//! ```
//!
//! where `lambda_n` is the smallest positive solution of
//! `x^{1/n} = e^{(n-1)(x^{1/n} - 1)}`. Writing `eta` for the extinction
//! probability of a Poisson(n-1) branching process, `lambda_n = eta^n`; the
//! crate computes it through the pgf fixed point (unconditionally stable,
//! and free of the spurious root x = 1 of the direct equation) and then
//! verifies the defining equation to 1e-10.

use crate::branching::{extinction_fixed_point, OffspringSpec};
use crate::error::{Error, Result};
use crate::numeric::ln_factorial;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const RESIDUAL_TOL: f64 = 1e-10;

/// Limiting constants for a fixed player count n >= 3.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub n: u32,
    /// Extinction probability of a Poisson(n-1) branching process.
    pub eta: f64,
    /// eta^n: the limiting probability that a given sink is bad.
    pub p: f64,
    /// Equal to `p`; satisfies the defining equation of the smallest
    /// positive solution.
    pub lambda_n: f64,
    /// Limiting fraction of PNE-having games that are not connected.
    pub zeta: f64,
    pub connected_fraction_limit: f64,
    /// 1 - e^{-1}, independent of n.
    pub pne_fraction_limit: f64,
}

/// Compute the constants for `n >= 3` (the n = 2 limit is degenerate: the
/// connected fraction tends to 0 and is out of scope here).
pub fn constants(n: u32) -> Result<AsymptoticConstants> {
    if n < 3 {
        return Err(Error::Domain(format!("constants are defined for n >= 3, got {n}")));
    }
    let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: (n - 1) as f64 })?;
    let p = eta.powi(n as i32);
    let lambda_n = p;
    // lambda^{1/n} = eta must satisfy eta = e^{(n-1)(eta - 1)}.
    let root = lambda_n.powf(1.0 / n as f64);
    let residual = (root - ((n - 1) as f64 * (root - 1.0)).exp()).abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    let zeta = zeta_from_lambda(lambda_n);
    // Cross-check against the sink-census route: connected in the limit
    // means at least one good sink and no bad one, i.e. probability
    // (1 - e^{p-1}) e^{-p}, conditioned on having a sink at all.
    let zeta_census = 1.0 - (1.0 - (p - 1.0).exp()) * (-p).exp() / (1.0 - (-1.0f64).exp());
    if (zeta - zeta_census).abs() > RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    Ok(AsymptoticConstants {
        n,
        eta,
        p,
        lambda_n,
        zeta,
        connected_fraction_limit: 1.0 - zeta,
        pne_fraction_limit: 1.0 - (-1.0f64).exp(),
    })
}

/// The zeta formula as a function of lambda.
///
/// `1 - e^{-x}(1 - e^{x-1})/(1 - e^{-1})` collapses to
/// `(1 - e^{-x})/(1 - e^{-1})` since `e^{-x} e^{x-1} = e^{-1}`; the reduced
/// form survives x near 0, where the literal one loses all precision.
pub fn zeta_from_lambda(lambda: f64) -> f64 {
    -(-lambda).exp_m1() / (1.0 - (-1.0f64).exp())
}

/// Independent route to lambda_n: bisection on the defining equation in
/// y = x^{1/n} space, avoiding the fixed-point iteration entirely. Used to
/// cross-check [`constants`].
pub fn lambda_by_bisection(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("lambda_n is defined for n >= 3, got {n}")));
    }
    let m = (n - 1) as f64;
    let f = |y: f64| y - (m * (y - 1.0)).exp();
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-9);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).powi(n as i32))
}

/// Poisson pmf in log space.
pub fn poisson_pmf(rate: f64, j: u64) -> f64 {
    debug_assert!(rate >= 0.0);
    if rate == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    (j as f64 * rate.ln() - rate - ln_factorial(j)).exp()
}

/// Joint pmf of two independent Poisson counts.
pub fn joint_poisson_pmf(rate_a: f64, rate_b: f64, a: u64, b: u64) -> f64 {
    poisson_pmf(rate_a, a) * poisson_pmf(rate_b, b)
}

/// Total variation distance between an empirical histogram and a reference
/// pmf: half the L1 gap over the observed support plus half the reference
/// mass never observed.
pub fn tv_distance<K: Ord>(
    histogram: &BTreeMap<K, u64>,
    reference: impl Fn(&K) -> f64,
) -> Result<f64> {
    let total: u64 = histogram.values().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut l1 = 0.0;
    let mut seen_mass = 0.0;
    for (key, &count) in histogram {
        let p_ref = reference(key);
        seen_mass += p_ref;
        l1 += (count as f64 / total as f64 - p_ref).abs();
    }
    Ok(0.5 * (l1 + (1.0 - seen_mass).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_constant_values() {
        let c3 = constants(3).unwrap();
        assert!((c3.zeta - 0.0132).abs() < 5e-4, "zeta_3 = {}", c3.zeta);
        let c4 = constants(4).unwrap();
        assert!(c4.zeta >= 1e-5 && c4.zeta <= 3e-5, "zeta_4 = {}", c4.zeta);
        assert!((c3.pne_fraction_limit - 0.6321).abs() < 1e-4);
        assert!(constants(2).is_err());
    }

    #[test]
    fn lambda_routes_agree() {
        for n in 3..=12 {
            let c = constants(n).unwrap();
            let direct = lambda_by_bisection(n).unwrap();
            assert!((c.lambda_n - direct).abs() < 1e-10, "n={n}");
            let alt_zeta = zeta_from_lambda(direct);
            assert!((c.zeta - alt_zeta).abs() < 1e-10, "n={n}");
            assert!((c.p - c.lambda_n).abs() < 1e-10);
        }
    }

    #[test]
    fn zeta_decreases_and_connected_limit_climbs() {
        // zeta stays strictly positive and strictly decreasing; 1 - zeta
        // climbs toward 1, saturating at f64 resolution for large n.
        let mut prev_zeta = 1.0;
        let mut prev_conn = 0.0;
        for n in 3..=12 {
            let c = constants(n).unwrap();
            assert!(c.zeta > 0.0 && c.zeta < 1.0);
            assert!(c.zeta < prev_zeta);
            assert!(c.connected_fraction_limit >= prev_conn);
            prev_zeta = c.zeta;
            prev_conn = c.connected_fraction_limit;
        }
        assert!(prev_conn >= 1.0 - 1e-10);
    }

    #[test]
    fn poisson_pmf_behaviour() {
        assert_eq!(poisson_pmf(0.0, 0), 1.0);
        assert_eq!(poisson_pmf(0.0, 3), 0.0);
        // Joint at the origin with total rate 1 is e^{-1}.
        let p = 0.0084;
        let joint = joint_poisson_pmf(1.0 - p, p, 0, 0);
        assert!((joint - (-1.0f64).exp()).abs() < 1e-12);
        // Total joint mass within a + b <= 20 at total rate 1.
        let mut mass = 0.0;
        for a in 0..=20u64 {
            for b in 0..=(20 - a) {
                mass += joint_poisson_pmf(1.0 - p, p, a, b);
            }
        }
        assert!(mass >= 1.0 - 1e-12);
    }

    #[test]
    fn tv_examples() {
        let mut hist = BTreeMap::new();
        hist.insert(0u64, 5u64);
        hist.insert(1, 5);
        // Identical distribution: zero distance.
        let tv = tv_distance(&hist, |&k| if k <= 1 { 0.5 } else { 0.0 }).unwrap();
        assert!(tv.abs() < 1e-12);
        // Disjoint point masses: distance one.
        let tv = tv_distance(&hist, |&k| if k == 7 { 1.0 } else { 0.0 }).unwrap();
        assert!((tv - 1.0).abs() < 1e-12);
        // Hand-evaluated distance to Poi(1): 1/2 (|1/2 - 1/e| * 2 + (1 - 2/e)).
        let tv = tv_distance(&hist, |&k| poisson_pmf(1.0, k)).unwrap();
        let e_inv = (-1.0f64).exp();
        let want = 0.5 * (2.0 * (0.5 - e_inv).abs() + (1.0 - 2.0 * e_inv));
        assert!((tv - want).abs() < 1e-12);
        let empty: BTreeMap<u64, u64> = BTreeMap::new();
        assert!(tv_distance(&empty, |_| 0.0).is_err());
    }
}
