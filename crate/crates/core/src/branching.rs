//! Galton-Watson machinery: capped simulation, extinction fixed points,
//! conditioned-process duality, and the total-population pmf.
//!
//! Simulation tracks generation sizes only; the offspring of a whole
//! generation is drawn in one shot (sums of i.i.d. Poisson or binomial
//! variables stay in the family), which leaves the law of the generation
//! chain, and hence of the total population, exact.

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, ln_gamma};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Offspring distribution of a branching process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffspringSpec {
    Poisson { mean: f64 },
    Binomial { trials: u64, success: f64 },
}

impl OffspringSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OffspringSpec::Poisson { mean } => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::Domain(format!("Poisson mean must be positive, got {mean}")));
                }
            }
            OffspringSpec::Binomial { trials, success } => {
                if trials < 1 {
                    return Err(Error::Domain("binomial trials must be >= 1".into()));
                }
                if !(0.0..=1.0).contains(&success) {
                    return Err(Error::Domain(format!(
                        "binomial success probability must lie in [0,1], got {success}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            OffspringSpec::Poisson { mean } => mean,
            OffspringSpec::Binomial { trials, success } => trials as f64 * success,
        }
    }

    /// Probability generating function, in closed form.
    pub fn pgf(&self, z: f64) -> f64 {
        match *self {
            OffspringSpec::Poisson { mean } => (mean * (z - 1.0)).exp(),
            OffspringSpec::Binomial { trials, success } => {
                (1.0 - success + success * z).powf(trials as f64)
            }
        }
    }

    pub fn pgf_derivative(&self, z: f64) -> f64 {
        match *self {
            OffspringSpec::Poisson { mean } => mean * (mean * (z - 1.0)).exp(),
            OffspringSpec::Binomial { trials, success } => {
                trials as f64 * success * (1.0 - success + success * z).powf(trials as f64 - 1.0)
            }
        }
    }

    /// Total offspring of `parents` individuals in one draw.
    fn sample_progeny(&self, parents: u64, rng: &mut impl Rng) -> u64 {
        match *self {
            OffspringSpec::Poisson { mean } => sample_poisson(mean * parents as f64, rng),
            OffspringSpec::Binomial { trials, success } => {
                Binomial::new(trials * parents, success)
                    .expect("validated binomial parameters")
                    .sample(rng)
            }
        }
    }
}

/// Result of one capped branching-process run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GwOutcome {
    pub extinct: bool,
    /// Individuals ever born (including the initial population); exact when
    /// extinct, the first value at or above the cap when `cap_hit`.
    pub total_population: u64,
    pub cap_hit: bool,
}

/// Run a branching process generation by generation until extinction or
/// until the cumulative population reaches `pop_cap`.
pub fn gw_run(
    spec: OffspringSpec,
    init: u64,
    pop_cap: u64,
    rng: &mut impl Rng,
) -> Result<GwOutcome> {
    spec.validate()?;
    if init < 1 {
        return Err(Error::Domain("initial population must be >= 1".into()));
    }
    if pop_cap < init {
        return Err(Error::Domain("pop_cap must be >= initial population".into()));
    }
    let mut current = init;
    let mut total = init;
    loop {
        if total >= pop_cap {
            return Ok(GwOutcome { extinct: false, total_population: total, cap_hit: true });
        }
        let next = spec.sample_progeny(current, rng);
        if next == 0 {
            return Ok(GwOutcome { extinct: true, total_population: total, cap_hit: false });
        }
        total = total.saturating_add(next);
        current = next;
    }
}

const FP_TOLERANCE: f64 = 1e-12;

/// Extinction probability: the smallest non-negative solution of G(z) = z.
///
/// At or below criticality (mean offspring <= 1) the smallest fixed point is
/// exactly 1. Above it, monotone iteration z <- G(z) from 0 climbs to the
/// fixed point and a Newton polish brings the residual under 1e-12.
pub fn extinction_fixed_point(spec: OffspringSpec) -> Result<f64> {
    spec.validate()?;
    if spec.mean() <= 1.0 {
        return Ok(1.0);
    }
    let mut z = 0.0f64;
    let coarse_cap: u64 = 1_000_000;
    for _ in 0..coarse_cap {
        let next = spec.pgf(z);
        let done = (next - z).abs() <= 1e-9;
        z = next;
        if done {
            break;
        }
    }
    for _ in 0..200 {
        let f = spec.pgf(z) - z;
        let fp = spec.pgf_derivative(z) - 1.0;
        if fp == 0.0 {
            break;
        }
        let step = f / fp;
        z -= step;
        if step.abs() <= 1e-16 {
            break;
        }
    }
    z = z.clamp(0.0, 1.0);
    if (spec.pgf(z) - z).abs() > FP_TOLERANCE {
        return Err(Error::NoConvergence { iterations: coarse_cap + 200 });
    }
    Ok(z)
}

/// For a supercritical Poisson(lambda) process, the offspring rate nu < 1 of
/// the process conditioned on extinction: the unique solution of
/// `nu e^{-nu} = lambda e^{-lambda}` below 1.
pub fn dual_parameter(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("dual parameter needs lambda > 1, got {lambda}")));
    }
    let target = lambda * (-lambda).exp();
    let g = |nu: f64| nu * (-nu).exp() - target;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // g is strictly increasing on (0, 1); g(0) < 0 <= g(1).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Otter-Dwass total-population pmf: for a process with Poisson(mu)
/// offspring started from `init` individuals,
/// `P(Z = total) = (init/total) P(Poisson(mu*total) = total - init)`,
/// evaluated in log space.
pub fn otter_dwass_pmf(init: u64, mu: f64, total: u64) -> Result<f64> {
    if init < 1 {
        return Err(Error::Domain("initial population must be >= 1".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if total < init {
        return Err(Error::Domain("total population cannot be below the initial one".into()));
    }
    let n = total as f64;
    let j = total - init;
    let rate = mu * n;
    let ln_p = (init as f64).ln() - n.ln() - rate + j as f64 * rate.ln() - ln_factorial(j);
    Ok(ln_p.exp())
}

/// Exact Poisson sampler: CDF inversion for small means, transformed
/// rejection (PTRS) for large ones. Both draw from the exact distribution.
pub fn sample_poisson(mean: f64, rng: &mut impl Rng) -> u64 {
    debug_assert!(mean >= 0.0);
    if mean == 0.0 {
        0
    } else if mean <= 10.0 {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion(mean: f64, rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cum = p;
    // Mean <= 10: the loop ends long before the guard in all but
    // pathological rounding cases.
    while u > cum && k < 400 {
        k += 1;
        p *= mean / k as f64;
        cum += p;
    }
    k
}

/// Hormann's PTRS rejection sampler, valid for mean >= 10.
fn poisson_ptrs(mean: f64, rng: &mut impl Rng) -> u64 {
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let kf = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return kf as u64;
        }
        if kf < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = kf * ln_mean - mean - ln_gamma(kf + 1.0);
        if lhs <= rhs {
            return kf as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, substream};

    /// Independent oracle for Poisson extinction: bisection on
    /// z = e^{mu (z-1)} over (0, 1).
    fn poisson_extinction_bisect(mu: f64) -> f64 {
        let f = |z: f64| (mu * (z - 1.0)).exp() - z;
        // Root below 1: f(0) > 0, f just under 1 is negative for mu > 1.
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fixed_point_subcritical_is_one() {
        assert_eq!(extinction_fixed_point(OffspringSpec::Poisson { mean: 0.5 }).unwrap(), 1.0);
        assert_eq!(extinction_fixed_point(OffspringSpec::Poisson { mean: 1.0 }).unwrap(), 1.0);
        assert_eq!(
            extinction_fixed_point(OffspringSpec::Binomial { trials: 4, success: 0.25 }).unwrap(),
            1.0
        );
    }

    #[test]
    fn fixed_point_matches_bisection_oracle() {
        for &mu in &[1.2, 1.5, 2.0, 3.0, 5.0] {
            let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: mu }).unwrap();
            let oracle = poisson_extinction_bisect(mu);
            assert!((eta - oracle).abs() < 1e-10, "mu={mu}: {eta} vs {oracle}");
        }
        // The value quoted to four decimals for Poisson(2).
        let eta2 = extinction_fixed_point(OffspringSpec::Poisson { mean: 2.0 }).unwrap();
        assert!((eta2 - 0.2032).abs() < 5e-5);
    }

    #[test]
    fn fixed_point_decreasing_in_mean() {
        let mut prev = 1.0;
        for i in 0..40 {
            let mu = 1.1 + 0.1 * i as f64;
            let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: mu }).unwrap();
            assert!(eta < prev, "eta not strictly decreasing at mu={mu}");
            prev = eta;
        }
    }

    #[test]
    fn binomial_extinction_bound() {
        // Extinction of Bin(m, 1-x) offspring is below 2 x^m for x in (0, 1/4).
        for &m in &[2u64, 3, 5] {
            for &x in &[0.05f64, 0.1, 0.2] {
                let eta = extinction_fixed_point(OffspringSpec::Binomial {
                    trials: m,
                    success: 1.0 - x,
                })
                .unwrap();
                assert!(eta < 2.0 * x.powi(m as i32), "m={m} x={x}: eta={eta}");
                assert!(eta > 0.0);
            }
        }
        // Spec case m=3, x=0.1: eta < 0.002.
        let eta = extinction_fixed_point(OffspringSpec::Binomial { trials: 3, success: 0.9 })
            .unwrap();
        assert!(eta < 0.002);
    }

    #[test]
    fn dual_parameter_identities() {
        let nu = dual_parameter(2.0).unwrap();
        assert!((nu * (-nu).exp() - 2.0 * (-2.0f64).exp()).abs() < 1e-10);
        assert!((nu - 0.406).abs() < 5e-4);
        // lambda -> 1+ pushes nu -> 1.
        assert!(dual_parameter(1.0 + 1e-9).unwrap() > 0.999);
        // eta_lambda = nu / lambda (exact identity; checked numerically).
        for &lambda in &[2.0, 3.0] {
            let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: lambda }).unwrap();
            let nu = dual_parameter(lambda).unwrap();
            assert!((eta - nu / lambda).abs() < 1e-8, "lambda={lambda}");
        }
        assert!(dual_parameter(1.0).is_err());
        assert!(dual_parameter(0.5).is_err());
    }

    #[test]
    fn otter_dwass_basics() {
        // total == init collapses to e^{-mu init}.
        let p = otter_dwass_pmf(2, 0.5, 2).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-14);
        // Subcritical: mass sums to 1.
        let total: f64 = (2..1000).map(|n| otter_dwass_pmf(2, 0.5, n).unwrap()).sum();
        assert!((1.0 - 1e-12..=1.0 + 1e-12).contains(&total));
        // Supercritical: mass sums to eta^init.
        for &init in &[1u64, 2, 3] {
            let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: 2.0 }).unwrap();
            let sum: f64 = (init..2500).map(|n| otter_dwass_pmf(init, 2.0, n).unwrap()).sum();
            assert!((sum - eta.powi(init as i32)).abs() < 1e-6, "init={init}");
        }
        assert!(otter_dwass_pmf(2, 0.5, 1).is_err());
        assert!(otter_dwass_pmf(0, 0.5, 1).is_err());
    }

    #[test]
    fn gw_run_contract() {
        let mut rng = stream(5);
        for i in 0..2000 {
            let spec = if i % 2 == 0 {
                OffspringSpec::Poisson { mean: 0.3 + (i % 7) as f64 * 0.4 }
            } else {
                OffspringSpec::Binomial { trials: 1 + (i % 5) as u64, success: 0.4 }
            };
            let init = 1 + (i % 3) as u64;
            let out = gw_run(spec, init, 500, &mut rng).unwrap();
            assert!(!(out.extinct && out.cap_hit));
            assert!(out.total_population >= init);
            if out.cap_hit {
                assert!(out.total_population >= 500);
            }
        }
        assert!(gw_run(OffspringSpec::Poisson { mean: 1.0 }, 5, 2, &mut rng).is_err());
    }

    #[test]
    fn subcritical_always_goes_extinct() {
        let mut rng = stream(17);
        for _ in 0..10_000 {
            let out = gw_run(OffspringSpec::Poisson { mean: 0.5 }, 1, 100_000, &mut rng).unwrap();
            assert!(out.extinct);
        }
    }

    #[test]
    fn supercritical_extinction_frequency_matches_fixed_point() {
        let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: 2.0 }).unwrap();
        let runs = 20_000u64;
        let mut extinct = 0u64;
        let mut extinct3 = 0u64;
        for j in 0..runs {
            let mut rng = substream(99, j);
            if gw_run(OffspringSpec::Poisson { mean: 2.0 }, 1, 100_000, &mut rng)
                .unwrap()
                .extinct
            {
                extinct += 1;
            }
            if gw_run(OffspringSpec::Poisson { mean: 2.0 }, 3, 100_000, &mut rng)
                .unwrap()
                .extinct
            {
                extinct3 += 1;
            }
        }
        let f = extinct as f64 / runs as f64;
        assert!((f - eta).abs() <= 0.01, "init 1: {f} vs {eta}");
        // Independent lines of descent: starting from 3, extinction is eta^3.
        let f3 = extinct3 as f64 / runs as f64;
        assert!((f3 - eta.powi(3)).abs() <= 0.01, "init 3: {f3} vs {}", eta.powi(3));
    }

    #[test]
    fn poisson_samplers_match_pmf() {
        for &mean in &[2.0f64, 9.5, 30.0, 200.0] {
            let mut rng = stream(1234);
            let samples = 200_000usize;
            let mut hist = std::collections::BTreeMap::new();
            let mut sum = 0f64;
            for _ in 0..samples {
                let x = sample_poisson(mean, &mut rng);
                *hist.entry(x).or_insert(0u64) += 1;
                sum += x as f64;
            }
            let emp_mean = sum / samples as f64;
            assert!(
                (emp_mean - mean).abs() < 4.0 * (mean / samples as f64).sqrt() + 0.02,
                "mean {mean}: got {emp_mean}"
            );
            let tv: f64 = hist
                .iter()
                .map(|(&k, &c)| {
                    let p = (k as f64 * mean.ln() - mean - ln_factorial(k)).exp();
                    (c as f64 / samples as f64 - p).abs()
                })
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.01, "mean {mean}: TV {tv}");
        }
    }

    #[test]
    fn subcritical_tail_decays_geometrically() {
        // P(Z >= t) should decay at least like (mu e^{1-mu})^t; compare the
        // fitted log-slope of the simulated survival function to ln(rate).
        let mu = 0.8f64;
        let rate = mu * (1.0 - mu).exp();
        let runs = 200_000u64;
        let mut totals = Vec::with_capacity(runs as usize);
        for j in 0..runs {
            let mut rng = substream(4242, j);
            let out = gw_run(OffspringSpec::Poisson { mean: mu }, 1, 1_000_000, &mut rng).unwrap();
            totals.push(out.total_population);
        }
        let survival = |t: u64| totals.iter().filter(|&&z| z >= t).count() as f64;
        let pts: Vec<(f64, f64)> = (5..=40u64)
            .filter(|&t| survival(t) >= 50.0)
            .map(|t| (t as f64, (survival(t) / runs as f64).ln()))
            .collect();
        assert!(pts.len() >= 10);
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(slope <= rate.ln() + 0.02, "slope {slope} vs ln rate {}", rate.ln());
    }

    #[test]
    fn total_population_matches_otter_dwass() {
        // Moderate-size version of the acceptance check.
        let runs = 100_000u64;
        let mut hist = std::collections::BTreeMap::new();
        for j in 0..runs {
            let mut rng = substream(777, j);
            let out = gw_run(OffspringSpec::Poisson { mean: 0.5 }, 2, 1_000_000, &mut rng).unwrap();
            assert!(out.extinct);
            *hist.entry(out.total_population).or_insert(0u64) += 1;
        }
        let mut tv: f64 = hist
            .iter()
            .map(|(&z, &c)| {
                (c as f64 / runs as f64 - otter_dwass_pmf(2, 0.5, z).unwrap()).abs()
            })
            .sum::<f64>();
        let seen_mass: f64 = hist.keys().map(|&z| otter_dwass_pmf(2, 0.5, z).unwrap()).sum();
        tv = (tv + (1.0 - seen_mass).max(0.0)) / 2.0;
        assert!(tv <= 0.01, "TV {tv}");
    }
}
