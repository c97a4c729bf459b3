//! Experiment design and hypothesis testing: where the two rate laws differ
//! most, how many emissions decide between them, and which law simulated
//! counts support.
//!
//! The design objective is the per-emission Hellinger distance between the
//! Bernoulli coincidence distributions, which weighs low-rate settings the
//! way count statistics do; the raw rate difference is reported alongside.

use serde::{Serialize, Serializer};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measurement::AngleSettings;
use crate::models::{predict_rate, RateModel};
use crate::montecarlo::{
    derive_stream_seed, effective_coincidence_probability, sample_binomial, simulate_counts,
    CountRecord, SimulationConfig,
};
use crate::state::Angle;

/// Default number of parametric-bootstrap resamples for the LR test.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

/// Lower edge of the k search interval; the true parameter space is (0, 1].
pub const K_SEARCH_FLOOR: f64 = 1e-9;

/// Absolute tolerance of the golden-section search in [`fit_k`].
pub const K_FIT_TOLERANCE: f64 = 1e-6;

/// Two model rates closer than this are considered indistinguishable.
const DIVERGENCE_FLOOR: f64 = 1e-12;

/// Plan for a discrimination run between two rate models.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationConfig {
    pub model_a: RateModel,
    pub model_b: RateModel,
    /// Grid steps per angle axis over [0, π).
    pub angle_grid: usize,
    /// Outer coordinate-descent sweeps during refinement.
    pub refine_iterations: usize,
    /// Significance level for the likelihood-ratio decision.
    pub alpha: f64,
    /// One minus the target power of the sample-size bound.
    pub beta: f64,
    /// Emissions per setting; 0 means "use the computed requirement".
    pub n_emitted_per_setting: u64,
    /// Parametric-bootstrap resamples for the LR p-value.
    pub n_resamples: usize,
    /// Test against the best-fit k (profile likelihood) instead of the
    /// configured fixed k.
    pub fit_k: bool,
}

impl DiscriminationConfig {
    pub fn new(model_a: RateModel, model_b: RateModel) -> Self {
        DiscriminationConfig {
            model_a,
            model_b,
            angle_grid: 64,
            refine_iterations: 50,
            alpha: 0.01,
            beta: 0.01,
            n_emitted_per_setting: 0,
            n_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            fit_k: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.angle_grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "angle_grid must be at least 2, got {}",
                self.angle_grid
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && 0.0 < v && v < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} out of range (0,1): {v}"
                )));
            }
        }
        if self.n_resamples == 0 {
            return Err(Error::InvalidArgument(
                "n_resamples must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// One grid cell of a model-vs-model comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub settings: AngleSettings,
    pub rate_a: f64,
    pub rate_b: f64,
    pub divergence: f64,
}

/// The optimizer's chosen setting and the scores achieved there.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSettings {
    pub settings: AngleSettings,
    pub rate_a: f64,
    pub rate_b: f64,
    pub divergence: f64,
    pub hellinger: f64,
}

/// Outcome of the likelihood-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestDecision {
    ModelA,
    ModelB,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrTestOutcome {
    pub decision: TestDecision,
    /// Σ per-setting binomial log-likelihood differences (model A minus
    /// model B); ±∞ when one model assigns probability zero to the data.
    pub log_likelihood_ratio: f64,
    pub p_value_estimate: f64,
}

/// Maximum-likelihood estimate of the time-symmetric coupling k.
#[derive(Debug, Clone, PartialEq)]
pub struct KFit {
    pub k: f64,
    /// Log-likelihood at the estimate, up to the count-only additive
    /// constant shared by every k.
    pub log_likelihood: f64,
    /// True when the likelihood kept decreasing all the way to the search
    /// floor (e.g. all-zero counts), so k̂ is a bound rather than a peak.
    pub at_lower_bound: bool,
}

/// Full record of a designed, simulated and decided experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationReport {
    pub best_settings: AngleSettings,
    pub rate_a: f64,
    pub rate_b: f64,
    pub divergence: f64,
    pub required_n: u64,
    /// Tag of the selected model, or "inconclusive".
    pub decision: String,
    #[serde(serialize_with = "serialize_maybe_infinite")]
    pub log_likelihood_ratio: f64,
    pub p_value_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_k: Option<f64>,
}

/// Report plus the simulated counts it was decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationRun {
    pub report: DiscriminationReport,
    pub records: Vec<CountRecord>,
}

/// JSON has no literal for IEEE infinities; emit them as strings.
fn serialize_maybe_infinite<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("Infinity")
    } else {
        s.serialize_str("-Infinity")
    }
}

/// Inverse standard-normal CDF via Acklam's rational approximation.
///
/// Coefficients from P. J. Acklam's algorithm; relative error below
/// 1.15e-9 over (0, 1), ample for integer sample sizes.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile needs p in (0,1), got {p}");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |p: f64| -> f64 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// Hellinger distance between Bernoulli(p) and Bernoulli(q).
pub fn hellinger_bernoulli(p: f64, q: f64) -> f64 {
    let bc = (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt();
    (1.0 - bc).max(0.0).sqrt()
}

/// Binomial log-likelihood of `successes` out of `trials` at rate `p`,
/// omitting the ln C(n,k) term: it depends only on the data, so it cancels
/// in every likelihood comparison this crate performs.
pub fn binomial_log_likelihood(successes: u64, trials: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if successes == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if successes == trials { 0.0 } else { f64::NEG_INFINITY };
    }
    successes as f64 * p.ln() + (trials - successes) as f64 * (1.0 - p).ln()
}

fn checked_arity(model_a: &RateModel, model_b: &RateModel) -> Result<usize> {
    let arity = model_a.arity();
    if model_b.arity() != arity {
        return Err(Error::ArityMismatch {
            expected: arity,
            actual: model_b.arity(),
        });
    }
    Ok(arity)
}

fn rate_at(model: &RateModel, angles: &[f64]) -> Result<f64> {
    let angles = angles
        .iter()
        .map(|&r| Angle::new(r))
        .collect::<Result<Vec<_>>>()?;
    let settings = AngleSettings::new(angles)?;
    Ok(predict_rate(model, &settings.to_polarizer_settings())?.relative_rate)
}

/// Exhaustive comparison of two models over a `grid_steps`-per-axis grid on
/// [0, π)^arity, rows ordered by descending rate difference.
pub fn divergence_map(
    model_a: &RateModel,
    model_b: &RateModel,
    grid_steps: usize,
) -> Result<Vec<DivergenceRow>> {
    let arity = checked_arity(model_a, model_b)?;
    if grid_steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 steps per axis, got {grid_steps}"
        )));
    }
    let total = grid_steps
        .checked_pow(arity as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("grid of {grid_steps}^{arity} points is too large"))
        })?;

    let step = std::f64::consts::PI / grid_steps as f64;
    let mut rows = Vec::with_capacity(total);
    let mut angles = vec![0.0f64; arity];
    for flat in 0..total {
        let mut rem = flat;
        for slot in angles.iter_mut().rev() {
            *slot = (rem % grid_steps) as f64 * step;
            rem /= grid_steps;
        }
        let rate_a = rate_at(model_a, &angles)?;
        let rate_b = rate_at(model_b, &angles)?;
        rows.push(DivergenceRow {
            settings: AngleSettings::new(
                angles
                    .iter()
                    .map(|&r| Angle::new(r))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            rate_a,
            rate_b,
            divergence: (rate_a - rate_b).abs(),
        });
    }
    rows.sort_by(|x, y| y.divergence.total_cmp(&x.divergence));
    Ok(rows)
}

/// Golden-section search for the maximum of a unimodal function on
/// [lo, hi], to absolute tolerance `tol` in the argument.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    // The interval cannot contract below float spacing, so never ask it to.
    let tol = tol.max(1e-14 * (1.0 + lo.abs() + hi.abs()));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iterations += 1;
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Find the angle setting that best separates the two models.
///
/// A full grid scan supplies the global structure; coordinate descent with
/// restarts from the top three grid cells then polishes the winner. The
/// refinement only ever accepts improvements, so the achieved Hellinger
/// score is monotone over the best grid cell's.
pub fn optimal_settings(config: &DiscriminationConfig) -> Result<OptimalSettings> {
    config.validate()?;
    let arity = checked_arity(&config.model_a, &config.model_b)?;
    let steps = config.angle_grid;
    let grid_step = std::f64::consts::PI / steps as f64;

    let score = |angles: &[f64]| -> Result<f64> {
        let p = rate_at(&config.model_a, angles)?;
        let q = rate_at(&config.model_b, angles)?;
        Ok(hellinger_bernoulli(p, q))
    };

    // Grid scan: keep the three best cells by Hellinger score and the
    // largest raw rate gap (used to detect indistinguishable models).
    let total = steps
        .checked_pow(arity as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::InvalidArgument(format!("grid of {steps}^{arity} points is too large")))?;
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut max_divergence = 0.0f64;
    let mut angles = vec![0.0f64; arity];
    for flat in 0..total {
        let mut rem = flat;
        for slot in angles.iter_mut().rev() {
            *slot = (rem % steps) as f64 * grid_step;
            rem /= steps;
        }
        let p = rate_at(&config.model_a, &angles)?;
        let q = rate_at(&config.model_b, &angles)?;
        max_divergence = max_divergence.max((p - q).abs());
        let h = hellinger_bernoulli(p, q);
        if top.len() < 3 {
            top.push((h, angles.clone()));
            top.sort_by(|x, y| y.0.total_cmp(&x.0));
        } else if h > top[2].0 {
            top[2] = (h, angles.clone());
            top.sort_by(|x, y| y.0.total_cmp(&x.0));
        }
    }
    if max_divergence < DIVERGENCE_FLOOR {
        return Err(Error::NoDiscriminatingSetting);
    }

    // Coordinate descent from each seed cell.
    let mut best_angles = top[0].1.clone();
    let mut best_score = top[0].0;
    for (seed_score, seed) in &top {
        let mut x = seed.clone();
        let mut current = *seed_score;
        let mut span = grid_step;
        for _ in 0..config.refine_iterations {
            for axis in 0..arity {
                let profile = |t: f64| {
                    let mut candidate = x.clone();
                    candidate[axis] = t;
                    score(&candidate).unwrap_or(f64::NEG_INFINITY)
                };
                let (t, value) =
                    golden_section_max(profile, x[axis] - span, x[axis] + span, span * 1e-4);
                if value > current {
                    current = value;
                    x[axis] = t;
                }
            }
            span *= 0.6;
        }
        if current > best_score {
            best_score = current;
            best_angles = x;
        }
    }

    // Report against the canonical [0, π) representatives so the returned
    // settings reproduce the returned rates on re-evaluation.
    let canonical: Vec<Angle> = best_angles
        .iter()
        .map(|&r| Angle::new(r).map(Angle::canonical))
        .collect::<Result<Vec<_>>>()?;
    let settings = AngleSettings::new(canonical)?;
    let rate_a =
        predict_rate(&config.model_a, &settings.to_polarizer_settings())?.relative_rate;
    let rate_b =
        predict_rate(&config.model_b, &settings.to_polarizer_settings())?.relative_rate;
    Ok(OptimalSettings {
        settings,
        rate_a,
        rate_b,
        divergence: (rate_a - rate_b).abs(),
        hellinger: hellinger_bernoulli(rate_a, rate_b),
    })
}

/// Smallest per-setting emission count that separates coincidence rates
/// `p_a` and `p_b` at significance `alpha` and power `1 - beta`.
///
/// Uses the two-proportion normal bound
/// n = ⌈((z₁₋α√(p_a(1-p_a)) + z₁₋β√(p_b(1-p_b))) / (p_a-p_b))²⌉.
/// When either rate is exactly 0 or 1 that bound degenerates, and the exact
/// geometric bound applies instead: a single contrary observation falsifies
/// the deterministic model, so n makes missing it rarer than min(α, β).
pub fn required_samples(p_a: f64, p_b: f64, alpha: f64, beta: f64) -> Result<u64> {
    for (name, p) in [("p_a", p_a), ("p_b", p_b)] {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidArgument(format!(
                "{name} out of range [0,1]: {p}"
            )));
        }
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && 0.0 < v && v < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} out of range (0,1): {v}"
            )));
        }
    }
    if p_a == p_b {
        return Err(Error::InvalidArgument(
            "p_a and p_b are equal: no sample size separates them".to_string(),
        ));
    }

    let deterministic = |p: f64| p == 0.0 || p == 1.0;
    if deterministic(p_a) || deterministic(p_b) {
        // Probability, under the non-deterministic model, of the single
        // observation the deterministic model forbids.
        let q = if deterministic(p_a) {
            if p_a == 0.0 {
                p_b
            } else {
                1.0 - p_b
            }
        } else if p_b == 0.0 {
            p_a
        } else {
            1.0 - p_a
        };
        let err = alpha.min(beta);
        let n = (err.ln() / (1.0 - q).ln()).ceil();
        return Ok(n.max(1.0) as u64);
    }

    let z_a = normal_quantile(1.0 - alpha);
    let z_b = normal_quantile(1.0 - beta);
    let spread = z_a * (p_a * (1.0 - p_a)).sqrt() + z_b * (p_b * (1.0 - p_b)).sqrt();
    let n = (spread / (p_a - p_b)).powi(2).ceil();
    Ok(n.max(1.0) as u64)
}

/// Decide between two models on observed counts.
///
/// The statistic is the summed binomial log-likelihood difference. The
/// higher-likelihood model is selected when a parametric-bootstrap mid
/// p-value, resampled under the disfavored model, falls below `alpha`.
/// A model that assigns probability zero to any observed count is rejected
/// outright with a ±∞ sentinel statistic.
pub fn likelihood_ratio_test(
    records: &[CountRecord],
    model_a: &RateModel,
    model_b: &RateModel,
    alpha: f64,
) -> Result<LrTestOutcome> {
    likelihood_ratio_test_with(records, model_a, model_b, alpha, DEFAULT_BOOTSTRAP_RESAMPLES, 0)
}

/// [`likelihood_ratio_test`] with explicit bootstrap size and seed.
pub fn likelihood_ratio_test_with(
    records: &[CountRecord],
    model_a: &RateModel,
    model_b: &RateModel,
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<LrTestOutcome> {
    let mut counts = Vec::with_capacity(records.len());
    let mut probs = Vec::with_capacity(records.len());
    for record in records {
        let settings = record.settings.to_polarizer_settings();
        let p_a = predict_rate(model_a, &settings)?.relative_rate;
        let p_b = predict_rate(model_b, &settings)?.relative_rate;
        counts.push((record.n_emitted, record.n_coincidence));
        probs.push((p_a, p_b));
    }
    lr_test_on_probabilities(&counts, &probs, alpha, n_resamples, seed)
}

/// LR test core over explicit (trials, successes) counts and per-record
/// model probabilities. Records are processed in a canonical sort order so
/// the outcome does not depend on input ordering.
pub(crate) fn lr_test_on_probabilities(
    counts: &[(u64, u64)],
    probs: &[(f64, f64)],
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<LrTestOutcome> {
    if counts.is_empty() || counts.len() != probs.len() {
        return Err(Error::InvalidArgument(
            "likelihood ratio test needs a non-empty record set".to_string(),
        ));
    }
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha out of range (0,1): {alpha}"
        )));
    }
    if n_resamples == 0 {
        return Err(Error::InvalidArgument(
            "n_resamples must be positive".to_string(),
        ));
    }

    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&i, &j| {
        probs[i]
            .0
            .total_cmp(&probs[j].0)
            .then(probs[i].1.total_cmp(&probs[j].1))
            .then(counts[i].cmp(&counts[j]))
    });

    let statistic = |observed: &dyn Fn(usize) -> u64| -> f64 {
        let mut ll_a = 0.0;
        let mut ll_b = 0.0;
        for &i in &order {
            let (n, _) = counts[i];
            let k = observed(i);
            ll_a += binomial_log_likelihood(k, n, probs[i].0);
            ll_b += binomial_log_likelihood(k, n, probs[i].1);
        }
        match (ll_a == f64::NEG_INFINITY, ll_b == f64::NEG_INFINITY) {
            (true, true) => f64::NAN,
            (true, false) => f64::NEG_INFINITY,
            (false, true) => f64::INFINITY,
            (false, false) => ll_a - ll_b,
        }
    };

    let observed_stat = statistic(&|i| counts[i].1);
    if observed_stat.is_nan() {
        return Err(Error::InvalidArgument(
            "observed counts are impossible under both models".to_string(),
        ));
    }
    if observed_stat == f64::INFINITY {
        return Ok(LrTestOutcome {
            decision: TestDecision::ModelA,
            log_likelihood_ratio: observed_stat,
            p_value_estimate: 0.0,
        });
    }
    if observed_stat == f64::NEG_INFINITY {
        return Ok(LrTestOutcome {
            decision: TestDecision::ModelB,
            log_likelihood_ratio: observed_stat,
            p_value_estimate: 0.0,
        });
    }
    if observed_stat == 0.0 {
        return Ok(LrTestOutcome {
            decision: TestDecision::Inconclusive,
            log_likelihood_ratio: 0.0,
            p_value_estimate: 1.0,
        });
    }

    let favors_a = observed_stat > 0.0;
    // Resample under the disfavored model (the null being rejected).
    let null_prob = |i: usize| if favors_a { probs[i].1 } else { probs[i].0 };

    // Mid p-value: strictly-more-extreme resamples plus half the ties.
    // Count statistics are discrete, so the plain inclusive p-value is
    // systematically conservative at exactly the sample sizes the design
    // bound returns.
    let tol = 1e-9 * (1.0 + observed_stat.abs());
    let mut more_extreme = 0usize;
    let mut ties = 0usize;
    let mut resampled = vec![0u64; counts.len()];
    for r in 0..n_resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, r as u64));
        for &i in &order {
            resampled[i] = sample_binomial(&mut rng, counts[i].0, null_prob(i));
        }
        let stat = statistic(&|i| resampled[i]);
        let toward_favored = if favors_a {
            stat - observed_stat
        } else {
            observed_stat - stat
        };
        if toward_favored > tol {
            more_extreme += 1;
        } else if toward_favored >= -tol {
            ties += 1;
        }
    }
    let p_value = (more_extreme as f64 + 0.5 * ties as f64) / n_resamples as f64;

    let decision = if p_value < alpha {
        if favors_a {
            TestDecision::ModelA
        } else {
            TestDecision::ModelB
        }
    } else {
        TestDecision::Inconclusive
    };
    Ok(LrTestOutcome {
        decision,
        log_likelihood_ratio: observed_stat,
        p_value_estimate: p_value,
    })
}

/// Maximum-likelihood k for the time-symmetric triphoton law on counted
/// records, by golden-section search on the unimodal 1-D likelihood.
pub fn fit_k(records: &[CountRecord]) -> Result<KFit> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(
            "fit_k needs at least one record".to_string(),
        ));
    }
    let mut weights = Vec::with_capacity(records.len());
    for record in records {
        let angles = record.settings.angles();
        if angles.len() != 3 {
            return Err(Error::ArityMismatch {
                expected: 3,
                actual: angles.len(),
            });
        }
        let delta = angles[2].radians() - angles[0].radians() - angles[1].radians();
        let c = delta.cos() * delta.cos();
        weights.push(c);
    }
    if weights.iter().all(|&c| c <= 1e-9) {
        return Err(Error::KUnidentifiable);
    }

    let log_likelihood = |k: f64| -> f64 {
        records
            .iter()
            .zip(&weights)
            .map(|(record, &c)| {
                binomial_log_likelihood(record.n_coincidence, record.n_emitted, (k * c).min(1.0))
            })
            .sum()
    };

    let (k, ll) = golden_section_max(log_likelihood, K_SEARCH_FLOOR, 1.0, K_FIT_TOLERANCE);
    Ok(KFit {
        k,
        log_likelihood: ll,
        at_lower_bound: k < K_SEARCH_FLOOR + 2.0 * K_FIT_TOLERANCE,
    })
}

/// Design, simulate and decide one discriminating experiment.
///
/// Finds the best setting, computes the required emission count (unless the
/// config pins one), simulates counts under `generate_under`, and runs the
/// LR test at effective (efficiency-thinned) probabilities. With `fit_k`
/// enabled the alternative is re-fit to the counts first, so the fitted
/// coupling absorbs detector losses and is compared without re-thinning.
pub fn run_discrimination(
    config: &DiscriminationConfig,
    generate_under: &RateModel,
    detector_efficiency: f64,
    seed: u64,
) -> Result<DiscriminationRun> {
    config.validate()?;
    let optimal = optimal_settings(config)?;
    let arms = optimal.settings.arity() as u32;
    let (p_a_eff, _) =
        effective_coincidence_probability(optimal.rate_a, arms, detector_efficiency, 0.0);
    let (p_b_eff, _) =
        effective_coincidence_probability(optimal.rate_b, arms, detector_efficiency, 0.0);
    let required_n = required_samples(p_a_eff, p_b_eff, config.alpha, config.beta)?;
    let n_emitted = if config.n_emitted_per_setting > 0 {
        config.n_emitted_per_setting
    } else {
        required_n
    };

    let records = simulate_counts(&SimulationConfig {
        model: generate_under.clone(),
        settings_list: vec![optimal.settings.clone()],
        n_emitted,
        detector_efficiency,
        dark_coincidence_rate: 0.0,
        master_seed: seed,
    })?;

    let (model_b_name, fitted_k, probs) = if config.fit_k
        && matches!(config.model_b, RateModel::TimeSymmetricTriphoton { .. })
    {
        let fit = fit_k(&records)?;
        let probs = record_probabilities(&records, &config.model_a, detector_efficiency, |c| {
            (fit.k * c).min(1.0)
        })?;
        ("time_symmetric_triphoton", Some(fit.k), probs)
    } else {
        let model_b = config.model_b.clone();
        let probs = record_probabilities(&records, &config.model_a, detector_efficiency, |c| {
            match &model_b {
                RateModel::TimeSymmetricTriphoton { k } => (k * c).min(1.0),
                _ => c,
            }
        })?;
        (config.model_b.tag(), None, probs)
    };

    let counts: Vec<(u64, u64)> = records
        .iter()
        .map(|r| (r.n_emitted, r.n_coincidence))
        .collect();
    let outcome = lr_test_on_probabilities(
        &counts,
        &probs,
        config.alpha,
        config.n_resamples,
        derive_stream_seed(seed, u64::MAX),
    )?;

    let decision = match outcome.decision {
        TestDecision::ModelA => config.model_a.tag().to_string(),
        TestDecision::ModelB => model_b_name.to_string(),
        TestDecision::Inconclusive => "inconclusive".to_string(),
    };
    Ok(DiscriminationRun {
        report: DiscriminationReport {
            best_settings: optimal.settings,
            rate_a: optimal.rate_a,
            rate_b: optimal.rate_b,
            divergence: optimal.divergence,
            required_n,
            decision,
            log_likelihood_ratio: outcome.log_likelihood_ratio,
            p_value_estimate: outcome.p_value_estimate,
            fitted_k,
        },
        records,
    })
}

/// Effective (model A, model B) probability pairs per record. Model B's
/// probability is supplied through `b_of_weight`, a function of the
/// record's cos²(θ_c − θ_a − θ_b) weight — or of the raw model-B rate for
/// non-triphoton models, in which case the weight argument carries it.
fn record_probabilities(
    records: &[CountRecord],
    model_a: &RateModel,
    detector_efficiency: f64,
    b_of_weight: impl Fn(f64) -> f64,
) -> Result<Vec<(f64, f64)>> {
    let mut probs = Vec::with_capacity(records.len());
    for record in records {
        let settings = record.settings.to_polarizer_settings();
        let rate_a = predict_rate(model_a, &settings)?.relative_rate;
        let arms = record.settings.arity() as u32;
        let (p_a, _) = effective_coincidence_probability(rate_a, arms, detector_efficiency, 0.0);
        let angles = record.settings.angles();
        let p_b = if angles.len() == 3 {
            let delta = angles[2].radians() - angles[0].radians() - angles[1].radians();
            let c = delta.cos() * delta.cos();
            b_of_weight(c)
        } else {
            // Two-photon configuration: model B is the shared closed form.
            let rate_b = crate::models::bell_coincidence_rate(angles[0], angles[1]).relative_rate;
            let (p, _) =
                effective_coincidence_probability(rate_b, arms, detector_efficiency, 0.0);
            p
        };
        probs.push((p_a, p_b));
    }
    Ok(probs)
}
