//! Fusion statistics computed at the fusion center: the counting rule, the
//! optimal cluster-weighted rule, the exact log-likelihood ratio for the
//! noisy two-hop observation, the linear fusion rule, and the estimator-based
//! linear rule with its constrained-ML machinery.
//!
//! All statistics are deterministic functions of their inputs; every infinite
//! series is truncated adaptively and evaluated in the log domain.

use crate::channel::ChannelDerived;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::sensing::ClusterIntensities;
use crate::stats::LogSum;

/// Default relative tolerance for truncated series.
pub const DEFAULT_REL_TOL: f64 = 1e-12;
/// Hard cap on series terms before reporting a numeric failure.
pub const MAX_TERMS: u64 = 100_000;

/// Precomputed weights tying intensities to channel quality.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionContext<F> {
    pub intensities: ClusterIntensities<F>,
    pub channels: ChannelDerived<F>,
    /// Count weights `c_m = ln(λ₁,ₘ/λ₀)` for the ideal-channel rule.
    pub weights_ocr: Vec<F>,
    /// Linear weights `d_m = √P̃_m (λ₁,ₘ − λ₀)/σ̃²_m`.
    pub weights_lfr: Vec<F>,
}

impl<F: Float> FusionContext<F> {
    pub fn new(intensities: ClusterIntensities<F>, channels: ChannelDerived<F>) -> Result<Self> {
        if intensities.num_clusters() != channels.num_clusters() {
            return Err(Error::InvalidArgument(format!(
                "intensities cover {} clusters, channels {}",
                intensities.num_clusters(),
                channels.num_clusters()
            )));
        }
        let weights_ocr = intensities
            .lambda1
            .iter()
            .map(|&l1| (l1 / intensities.lambda0).ln())
            .collect();
        let weights_lfr = lfr_weights(&intensities, &channels)?;
        Ok(Self {
            intensities,
            channels,
            weights_ocr,
            weights_lfr,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.weights_lfr.len()
    }
}

/// Counting rule: plain sum of the per-cluster detecting counts.
pub fn cr_statistic<F: Float>(counts: &[F]) -> F {
    counts.iter().copied().sum()
}

/// Optimal cluster-based rule on ideal channels: `Σ c_m Λ_m`.
///
/// A benchmark, not a realizable rule under noisy channels; the weights use
/// the true intensities.
pub fn ocr_statistic<F: Float>(counts: &[F], ctx: &FusionContext<F>) -> F {
    assert_eq!(counts.len(), ctx.num_clusters());
    counts
        .iter()
        .zip(&ctx.weights_ocr)
        .map(|(&c, &w)| w * c)
        .sum()
}

/// Linear weights `d_m = √P̃_m (λ₁,ₘ − λ₀)/σ̃²_m`.
///
/// Clusters with zero effective power get zero weight (they carry no signal);
/// any other cluster must have positive aggregate noise.
pub fn lfr_weights<F: Float>(
    intensities: &ClusterIntensities<F>,
    channels: &ChannelDerived<F>,
) -> Result<Vec<F>> {
    let m = intensities.num_clusters();
    if channels.num_clusters() != m {
        return Err(Error::InvalidArgument(
            "intensities and channels disagree on the cluster count".into(),
        ));
    }
    (0..m)
        .map(|i| {
            let pt = channels.p_tilde[i];
            if pt == F::zero() {
                return Ok(F::zero());
            }
            let st = channels.sigma_tilde_sq[i];
            if !(st > F::zero()) {
                return Err(Error::DegenerateChannel(format!(
                    "cluster {i} has zero aggregate noise; linear weights undefined"
                )));
            }
            Ok(pt.sqrt() * (intensities.lambda1[i] - intensities.lambda0) / st)
        })
        .collect()
}

/// Linear fusion rule: `Σ d_m z_m` over raw receptions.
pub fn lfr_statistic<F: Float>(observations: &[F], weights: &[F]) -> F {
    assert_eq!(observations.len(), weights.len());
    observations
        .iter()
        .zip(weights)
        .map(|(&z, &w)| w * z)
        .sum()
}

/// Log of the Poisson–Gaussian mixture `Σ_k Pois(k; λ) exp(−s(z̃−k)²/2)`,
/// truncated adaptively and summed in the log domain.
///
/// The normalization of the Gaussian kernel is omitted; the likelihood-ratio
/// and posterior-mean uses cancel it.
fn log_poisson_gauss_mixture<F: Float>(
    z_tilde: F,
    lambda: F,
    snr: F,
    rel_tol: F,
) -> Result<F> {
    if !(lambda > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "mixture mean must be positive, got {lambda}"
        )));
    }
    if !(snr > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "channel SNR must be positive, got {snr}"
        )));
    }

    let ln_lambda = lambda.ln();
    let half = F::of(0.5);
    let mut acc = LogSum::new();
    let mut ln_fact = 0.0f64;
    let mut k = 0u64;
    let mut k_hi = initial_terms(lambda.as_f64(), z_tilde.as_f64(), snr.as_f64());
    let first = k_hi;
    let log_tol = rel_tol.ln();

    loop {
        let mut block = LogSum::new();
        while k < k_hi {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            let kf = F::of(k as f64);
            let diff = z_tilde - kf;
            let term = kf * ln_lambda - lambda - F::of(ln_fact) - snr * diff * diff * half;
            block.push(term);
            acc.push(term);
            k += 1;
        }
        // The first pass covers the designed range; afterwards stop once the
        // last doubling block is relatively negligible.
        if k_hi != first {
            let blockv = block.value();
            if blockv == F::neg_infinity() || blockv - acc.value() < log_tol {
                return Ok(acc.value());
            }
        }
        if k >= MAX_TERMS {
            return Err(Error::Numeric(format!(
                "mixture truncation cap {MAX_TERMS} reached (z_tilde {}, lambda {}, snr {})",
                z_tilde.as_f64(),
                lambda.as_f64(),
                snr.as_f64()
            )));
        }
        k_hi = (k_hi * 2).min(MAX_TERMS);
    }
}

/// Designed truncation range: covers the Poisson bulk and the Gaussian kernel
/// width, `⌈max(λ, z̃) + 12 √max(λ, z̃, 1) + 12/√s⌉`.
fn initial_terms(lambda: f64, z_tilde: f64, snr: f64) -> u64 {
    let bulk = lambda.max(z_tilde).max(0.0);
    let spread = lambda.max(z_tilde).max(1.0).sqrt();
    ((bulk + 12.0 * spread + 12.0 / snr.sqrt()).ceil() as u64)
        .clamp(2, MAX_TERMS)
}

/// Exact log-likelihood ratio of the raw receptions `z_m` under the
/// Poisson-count-plus-Gaussian-noise model.
///
/// Clusters with zero effective power are uninformative and contribute
/// nothing. Clusters whose intensities coincide under both hypotheses
/// contribute exactly zero.
pub fn llr_statistic<F: Float>(
    observations: &[F],
    ctx: &FusionContext<F>,
    rel_tol: F,
) -> Result<F> {
    assert_eq!(observations.len(), ctx.num_clusters());
    let mut total = F::zero();
    for m in 0..ctx.num_clusters() {
        let pt = ctx.channels.p_tilde[m];
        if pt == F::zero() {
            continue;
        }
        let l1 = ctx.intensities.lambda1[m];
        let l0 = ctx.intensities.lambda0;
        if l1 == l0 {
            continue;
        }
        let z_tilde = observations[m] / pt.sqrt();
        let s = ctx.channels.snr[m];
        total += log_poisson_gauss_mixture(z_tilde, l1, s, rel_tol)?
            - log_poisson_gauss_mixture(z_tilde, l0, s, rel_tol)?;
    }
    Ok(total)
}

/// Posterior-mean count estimate from one normalized reception:
/// `Λ̂ = Σ k w_k / Σ w_k` with Gaussian kernel weights `w_k = e^{−s(z̃−k)²/2}`.
pub fn posterior_mean_count<F: Float>(z_tilde: F, snr: F, rel_tol: F) -> Result<F> {
    if !(snr > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "posterior mean needs positive SNR, got {snr}"
        )));
    }
    let half = F::of(0.5);
    let mut den = LogSum::new();
    let mut num = LogSum::new();
    let mut k = 0u64;
    let z = z_tilde.as_f64();
    let mut k_hi = initial_terms(0.0, z, snr.as_f64());
    let first = k_hi;
    let log_tol = rel_tol.ln();

    loop {
        let mut block_den = LogSum::new();
        while k < k_hi {
            let kf = F::of(k as f64);
            let diff = z_tilde - kf;
            let lw = -snr * diff * diff * half;
            den.push(lw);
            block_den.push(lw);
            if k > 0 {
                num.push(F::of((k as f64).ln()) + lw);
            }
            k += 1;
        }
        if k_hi != first {
            let blockv = block_den.value();
            if blockv == F::neg_infinity() || blockv - den.value() < log_tol {
                break;
            }
        }
        if k >= MAX_TERMS {
            return Err(Error::Numeric(format!(
                "posterior-mean truncation cap {MAX_TERMS} reached (z_tilde {z}, snr {})",
                snr.as_f64()
            )));
        }
        k_hi = (k_hi * 2).min(MAX_TERMS);
    }

    if num.value() == F::neg_infinity() {
        return Ok(F::zero());
    }
    Ok((num.value() - den.value()).exp())
}

/// Constrained-ML intensity estimate from per-sample posterior means.
///
/// Returns `(λ̂₁, η)`: the average `Λ̂` of the samples clamped from below at
/// `λ₀`, and the non-negative slack `η = max(0, 1 − Λ̂/λ₀)` whose sign split
/// decides which branch is active.
pub fn estimate_lambda1<F: Float>(per_sample_means: &[F], lambda0: F) -> (F, F) {
    assert!(!per_sample_means.is_empty());
    let mean = per_sample_means.iter().copied().sum::<F>()
        / F::of_usize(per_sample_means.len());
    let eta = (F::one() - mean / lambda0).max(F::zero());
    (mean.max(lambda0), eta)
}

/// Jensen lower bound on the log-likelihood of one normalized reception:
/// `Λ̂ ln λ₁ − λ₁ + C₁` with `C₁ = ln C₀ − Σ π_k ln k!` computed under the
/// normalized Gaussian kernel.
pub fn loglik_lower_bound<F: Float>(
    z_tilde: F,
    lambda1: F,
    snr: F,
    rel_tol: F,
) -> Result<F> {
    if !(lambda1 > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "intensity must be positive, got {lambda1}"
        )));
    }
    let post_mean = posterior_mean_count(z_tilde, snr, rel_tol)?;

    // ln p(z̃|k) = ½ ln(s/2π) − s(z̃−k)²/2; collect terms for the π-weighted
    // factorial sum after normalizing.
    let ln_norm = F::of(0.5) * (snr / F::of(std::f64::consts::TAU)).ln();
    let half = F::of(0.5);
    let mut log_terms: Vec<F> = Vec::new();
    let mut c0 = LogSum::new();
    let mut k = 0u64;
    let mut k_hi = initial_terms(0.0, z_tilde.as_f64(), snr.as_f64());
    let first = k_hi;
    let log_tol = rel_tol.ln();
    loop {
        let mut block = LogSum::new();
        while k < k_hi {
            let diff = z_tilde - F::of(k as f64);
            let term = ln_norm - snr * diff * diff * half;
            log_terms.push(term);
            c0.push(term);
            block.push(term);
            k += 1;
        }
        if k_hi != first {
            let blockv = block.value();
            if blockv == F::neg_infinity() || blockv - c0.value() < log_tol {
                break;
            }
        }
        if k >= MAX_TERMS {
            return Err(Error::Numeric(
                "lower-bound truncation cap reached".into(),
            ));
        }
        k_hi = (k_hi * 2).min(MAX_TERMS);
    }
    let log_c0 = c0.value();
    let mut ln_fact = 0.0f64;
    let mut pi_lnfact = F::zero();
    for (k, &lt) in log_terms.iter().enumerate() {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        pi_lnfact += (lt - log_c0).exp() * F::of(ln_fact);
    }
    let c1 = log_c0 - pi_lnfact;
    Ok(post_mean * lambda1.ln() - lambda1 + c1)
}

/// A window of `L` receptions per cluster, raw and normalized by `√P̃_m`.
///
/// Unpowered clusters carry no signal; their normalized entries are stored as
/// zero and never enter any statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSampleObservation<F> {
    pub samples: Vec<Vec<F>>,
    pub normalized: Vec<Vec<F>>,
    pub sample_count: usize,
}

impl<F: Float> MultiSampleObservation<F> {
    pub fn new(samples: Vec<Vec<F>>, channels: &ChannelDerived<F>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one sample per window".into(),
            ));
        }
        let m = channels.num_clusters();
        if samples.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidArgument(format!(
                "every sample row must have {m} clusters"
            )));
        }
        let normalized = samples
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&channels.p_tilde)
                    .map(|(&z, &pt)| {
                        if pt > F::zero() {
                            z / pt.sqrt()
                        } else {
                            F::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let sample_count = samples.len();
        Ok(Self {
            samples,
            normalized,
            sample_count,
        })
    }
}

/// Output of the estimation phase preceding the estimator-based linear rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult<F> {
    /// Posterior-mean count per sample and cluster.
    pub per_sample_means: Vec<Vec<F>>,
    /// Sample-averaged posterior means `Λ̂_m`.
    pub cluster_means: Vec<F>,
    /// Constrained-ML intensity estimates `λ̂₁,ₘ ≥ λ₀`.
    pub lambda1_hat: Vec<F>,
    /// Non-negative slack values `η_m`.
    pub slack: Vec<F>,
    /// Estimated linear weights `d̂_m = √P̃_m (λ̂₁,ₘ − λ₀)/σ̃²_m`.
    pub weights_aml: Vec<F>,
    /// Sample-averaged normalized receptions `ẑ_m`.
    pub z_hat: Vec<F>,
}

/// Run the estimation phase on a sample window: posterior means per sample,
/// constrained-ML intensities, estimated weights, and averaged data.
pub fn estimate<F: Float>(
    observation: &MultiSampleObservation<F>,
    channels: &ChannelDerived<F>,
    lambda0: F,
    rel_tol: F,
) -> Result<EstimationResult<F>> {
    let m = channels.num_clusters();
    let l = observation.sample_count;
    let mut per_sample_means = vec![vec![F::zero(); m]; l];
    for (li, row) in observation.normalized.iter().enumerate() {
        for mi in 0..m {
            if channels.p_tilde[mi] > F::zero() {
                per_sample_means[li][mi] =
                    posterior_mean_count(row[mi], channels.snr[mi], rel_tol)?;
            }
        }
    }

    let mut cluster_means = Vec::with_capacity(m);
    let mut lambda1_hat = Vec::with_capacity(m);
    let mut slack = Vec::with_capacity(m);
    let mut weights_aml = Vec::with_capacity(m);
    let mut z_hat = Vec::with_capacity(m);
    for mi in 0..m {
        let col: Vec<F> = (0..l).map(|li| per_sample_means[li][mi]).collect();
        let mean = col.iter().copied().sum::<F>() / F::of_usize(l);
        let (l1_hat, eta) = estimate_lambda1(&col, lambda0);
        cluster_means.push(mean);
        lambda1_hat.push(l1_hat);
        slack.push(eta);
        let pt = channels.p_tilde[mi];
        let st = channels.sigma_tilde_sq[mi];
        weights_aml.push(if pt > F::zero() {
            pt.sqrt() * (l1_hat - lambda0) / st
        } else {
            F::zero()
        });
        z_hat.push(
            observation
                .normalized
                .iter()
                .map(|row| row[mi])
                .sum::<F>()
                / F::of_usize(l),
        );
    }

    Ok(EstimationResult {
        per_sample_means,
        cluster_means,
        lambda1_hat,
        slack,
        weights_aml,
        z_hat,
    })
}

/// Estimator-based linear rule: `Σ d̂_m ẑ_m` over the averaged normalized
/// data.
pub fn lfr_aml_statistic<F: Float>(estimation: &EstimationResult<F>) -> F {
    estimation
        .weights_aml
        .iter()
        .zip(&estimation.z_hat)
        .map(|(&w, &z)| w * z)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{derive, ChannelConfig};

    fn single_cluster_ctx(lambda0: f64, lambda1: f64, snr: f64) -> FusionContext<f64> {
        // p_tilde = 1 so raw and normalized receptions coincide;
        // sigma_tilde_sq = 1/snr.
        let channels = ChannelDerived {
            p_tilde: vec![1.0],
            sigma_tilde_sq: vec![1.0 / snr],
            snr: vec![snr],
        };
        let intensities = ClusterIntensities::new(lambda0, vec![lambda1]).unwrap();
        FusionContext::new(intensities, channels).unwrap()
    }

    /// Independent brute-force evaluation of the unnormalized log mixture.
    fn brute_force_log_mixture(z_tilde: f64, lambda: f64, snr: f64, k_max: u64) -> f64 {
        let terms: Vec<f64> = (0..=k_max)
            .map(|k| {
                let kf = k as f64;
                kf * lambda.ln() - lambda - libm::lgamma(kf + 1.0)
                    - snr * (z_tilde - kf).powi(2) / 2.0
            })
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    #[test]
    fn cr_is_the_plain_sum() {
        assert_eq!(cr_statistic::<f64>(&[]), 0.0);
        assert_eq!(cr_statistic(&[3.0, 0.0, 2.0]), 5.0);
        assert_eq!(cr_statistic(&[0.0, 2.0, 3.0]), 5.0);
    }

    #[test]
    fn ocr_reference_values() {
        let ctx = single_cluster_ctx(2.0, 4.0, 1.0);
        // Single cluster with λ1 = 2λ0 and Λ = 4: statistic is 4 ln 2.
        let s = ocr_statistic(&[4.0], &ctx);
        assert!((s - 2.772_588_722_239_781).abs() < 1e-12);

        // Equal intensities zero the weights regardless of counts.
        let flat = single_cluster_ctx(3.0, 3.0, 1.0);
        assert_eq!(ocr_statistic(&[17.0], &flat), 0.0);

        // With one global cluster the rule is the counting rule up to the
        // positive scale c_1.
        for counts in [1.0, 5.0, 11.0] {
            let ratio = ocr_statistic(&[counts], &ctx) / cr_statistic(&[counts]);
            assert!((ratio - 2.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn llr_zero_when_hypotheses_coincide() {
        let ctx = single_cluster_ctx(2.0, 2.0, 1.5);
        for z in [-3.0, 0.0, 1.7, 25.0] {
            assert_eq!(llr_statistic(&[z], &ctx, 1e-12).unwrap(), 0.0);
        }
    }

    #[test]
    fn llr_matches_brute_force_sum() {
        let ctx = single_cluster_ctx(1.0, 4.0, 1.0);
        let z = 3.0;
        let got = llr_statistic(&[z], &ctx, 1e-12).unwrap();
        let want = brute_force_log_mixture(z, 4.0, 1.0, 200)
            - brute_force_log_mixture(z, 1.0, 1.0, 200);
        assert!(
            ((got - want) / want).abs() < 1e-12,
            "llr {got} vs brute force {want}"
        );
    }

    #[test]
    fn llr_strictly_increasing_in_observation() {
        let ctx = single_cluster_ctx(1.0, 4.0, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let z = -5.0 + 35.0 * i as f64 / 199.0;
            let v = llr_statistic(&[z], &ctx, 1e-12).unwrap();
            assert!(v > prev, "llr not increasing at z = {z}");
            prev = v;
        }
    }

    #[test]
    fn lfr_weight_reference_values() {
        let channels: ChannelDerived<f64> = ChannelDerived {
            p_tilde: vec![4.0],
            sigma_tilde_sq: vec![2.0],
            snr: vec![2.0],
        };
        let ints = ClusterIntensities::new(1.0, vec![4.0]).unwrap();
        let d = lfr_weights(&ints, &channels).unwrap();
        assert!((d[0] - 3.0).abs() < 1e-15);

        // Doubling the aggregate noise halves the weight.
        let channels2: ChannelDerived<f64> = ChannelDerived {
            p_tilde: vec![4.0],
            sigma_tilde_sq: vec![4.0],
            snr: vec![1.0],
        };
        let d2 = lfr_weights(&ints, &channels2).unwrap();
        assert!((d2[0] - 1.5).abs() < 1e-15);

        // Equal intensities zero the weight.
        let flat = ClusterIntensities::new(1.0, vec![1.0]).unwrap();
        assert_eq!(lfr_weights(&flat, &channels).unwrap()[0], 0.0);
    }

    #[test]
    fn lfr_statistic_is_a_dot_product() {
        assert_eq!(lfr_statistic::<f64>(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert_eq!(lfr_statistic(&[3.0, -1.0], &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn approx_llr_is_affine_in_the_linear_statistic() {
        // The quadratic-form approximation of the LLR differs from the
        // negated linear statistic only by a z-independent constant.
        let cfg: ChannelConfig<f64> = ChannelConfig::new(
            2.0,
            vec![1.0, 0.5, 2.0],
            vec![0.5, 1.0, 0.25],
            vec![1.0, 0.75, 0.5],
        )
        .unwrap();
        let channels = derive(&cfg).unwrap();
        let ints = ClusterIntensities::new(2.0, vec![5.0, 2.5, 9.0]).unwrap();
        let ctx = FusionContext::new(ints.clone(), channels.clone()).unwrap();

        let app_llr = |z: &[f64]| -> f64 {
            (0..3)
                .map(|m| {
                    let pt = channels.p_tilde[m];
                    let st = channels.sigma_tilde_sq[m];
                    let a = z[m] - ints.lambda1[m] * pt.sqrt();
                    let b = z[m] - ints.lambda0 * pt.sqrt();
                    (a * a - b * b) / (2.0 * st)
                })
                .sum()
        };
        let constant = app_llr(&[0.0, 0.0, 0.0]);
        for z in [[1.0, -2.0, 3.0], [10.0, 0.5, -4.0], [0.0, 7.0, 1.0]] {
            let lin = lfr_statistic(&z, &ctx.weights_lfr);
            assert!(
                (app_llr(&z) - constant - (-lin)).abs() < 1e-9,
                "affine identity failed for {z:?}"
            );
        }
    }

    #[test]
    fn posterior_mean_concentrates_at_high_snr() {
        let m = posterior_mean_count(3.2f64, 1e4, 1e-12).unwrap();
        assert!((m - 3.0).abs() < 1e-3, "got {m}");
    }

    #[test]
    fn posterior_mean_of_deep_negative_observation_is_tiny() {
        let m = posterior_mean_count(-10.0f64, 1.0, 1e-12).unwrap();
        assert!(m >= 0.0 && m < 1e-3, "got {m}");
    }

    #[test]
    fn posterior_mean_midpoint_matches_brute_force() {
        // k >= 0 truncation breaks exact symmetry; the brute-force sum is the
        // oracle and the ideal midpoint is only approximate.
        let (z, s) = (2.5f64, 1.0f64);
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for k in 0..=100u64 {
            let w = (-s * (z - k as f64).powi(2) / 2.0).exp();
            num += k as f64 * w;
            den += w;
        }
        let oracle = num / den;
        let got = posterior_mean_count(z, s, 1e-12).unwrap();
        assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
        assert!((got - 2.5).abs() < 0.01);
    }

    #[test]
    fn lambda1_estimate_clamps_at_the_null_intensity() {
        let l0 = 50.0f64 / 9.0;
        let (l1, eta) = estimate_lambda1(&[7.2], l0);
        assert_eq!((l1, eta), (7.2, 0.0));

        let (l1, eta) = estimate_lambda1(&[3.0], l0);
        assert_eq!(l1, l0);
        assert!((eta - 0.46).abs() < 1e-12);

        let (l1, eta) = estimate_lambda1(&[l0], l0);
        assert_eq!((l1, eta), (l0, 0.0));

        // Averaging happens before the clamp.
        let (l1, _) = estimate_lambda1(&[2.0, 12.0], l0);
        assert_eq!(l1, 7.0);
    }

    #[test]
    fn lower_bound_never_exceeds_true_loglikelihood() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            let z: f64 = rng.random::<f64>() * 40.0 - 5.0;
            let lambda = rng.random::<f64>() * 20.0 + 0.05;
            let s = rng.random::<f64>() * 30.0 + 0.05;
            let bound = loglik_lower_bound(z, lambda, s, 1e-12).unwrap();
            let truth = brute_force_normalized_loglik(z, lambda, s);
            assert!(
                truth - bound >= -1e-10,
                "bound {bound} above truth {truth} at z={z}, lambda={lambda}, s={s}"
            );
        }
    }

    /// Brute-force `ln p(z̃; λ)` with the normalized Gaussian kernel.
    fn brute_force_normalized_loglik(z: f64, lambda: f64, s: f64) -> f64 {
        let ln_norm = 0.5 * (s / std::f64::consts::TAU).ln();
        let terms: Vec<f64> = (0..2000u64)
            .map(|k| {
                let kf = k as f64;
                ln_norm - s * (z - kf).powi(2) / 2.0 + kf * lambda.ln()
                    - lambda
                    - libm::lgamma(kf + 1.0)
            })
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    #[test]
    fn lower_bound_is_concave_with_maximizer_at_posterior_mean() {
        let (z, s) = (6.3f64, 2.0f64);
        let post = posterior_mean_count(z, s, 1e-12).unwrap();
        let at = |l: f64| loglik_lower_bound(z, l, s, 1e-12).unwrap();
        let delta = 1e-4;
        assert!(at(post) > at(post - delta));
        assert!(at(post) > at(post + delta));
        // Second difference negative: concavity.
        let h = 0.5;
        assert!(at(post - h) + at(post + h) - 2.0 * at(post) < 0.0);
    }

    #[test]
    fn lower_bound_gap_shrinks_with_snr() {
        let (z, lambda) = (4.0f64, 4.0f64);
        let mut prev_gap = f64::INFINITY;
        for &s in &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let gap = brute_force_normalized_loglik(z, lambda, s)
                - loglik_lower_bound(z, lambda, s, 1e-12).unwrap();
            assert!(gap >= -1e-10);
            assert!(gap <= prev_gap + 1e-9, "gap {gap} grew at s={s}");
            prev_gap = gap;
        }
    }

    #[test]
    fn aml_statistic_with_true_intensities_reduces_to_linear_rule() {
        let cfg: ChannelConfig<f64> =
            ChannelConfig::new(2.0, vec![1.5, 0.8], vec![0.5, 0.3], vec![0.6, 0.9]).unwrap();
        let channels = derive(&cfg).unwrap();
        let ints = ClusterIntensities::new(2.0, vec![6.0, 3.0]).unwrap();
        let ctx = FusionContext::new(ints.clone(), channels.clone()).unwrap();

        let z = vec![4.2, -1.3];
        let obs = MultiSampleObservation::new(vec![z.clone()], &channels).unwrap();
        // Estimation with the true intensities substituted.
        let est = EstimationResult {
            per_sample_means: obs.normalized.clone(),
            cluster_means: ints.lambda1.clone(),
            lambda1_hat: ints.lambda1.clone(),
            slack: vec![0.0, 0.0],
            weights_aml: ctx.weights_lfr.clone(),
            z_hat: obs.normalized[0].clone(),
        };
        let aml = lfr_aml_statistic(&est);
        let lin = lfr_statistic(&obs.normalized[0], &ctx.weights_lfr);
        assert!((aml - lin).abs() < 1e-12);
    }

    #[test]
    fn aml_statistic_zero_when_estimates_clamp() {
        let cfg: ChannelConfig<f64> =
            ChannelConfig::new(1.0, vec![1.0], vec![1.0], vec![1.0]).unwrap();
        let channels = derive(&cfg).unwrap();
        // Deeply negative receptions push the posterior means to zero, so the
        // constrained estimates clamp to λ0 and the weights vanish.
        let obs =
            MultiSampleObservation::new(vec![vec![-20.0], vec![-25.0]], &channels).unwrap();
        let est = estimate(&obs, &channels, 5.0, 1e-12).unwrap();
        assert_eq!(est.lambda1_hat, vec![5.0]);
        assert_eq!(lfr_aml_statistic(&est), 0.0);
    }

    #[test]
    fn aml_statistic_is_permutation_equivariant() {
        let cfg: ChannelConfig<f64> =
            ChannelConfig::new(1.0, vec![1.0, 2.0], vec![0.4, 0.2], vec![0.3, 0.7]).unwrap();
        let channels = derive(&cfg).unwrap();
        let obs = MultiSampleObservation::new(vec![vec![7.0, 9.0]], &channels).unwrap();
        let est = estimate(&obs, &channels, 2.0, 1e-12).unwrap();

        let cfg_p =
            ChannelConfig::new(1.0, vec![2.0, 1.0], vec![0.2, 0.4], vec![0.7, 0.3]).unwrap();
        let channels_p = derive(&cfg_p).unwrap();
        let obs_p = MultiSampleObservation::new(vec![vec![9.0, 7.0]], &channels_p).unwrap();
        let est_p = estimate(&obs_p, &channels_p, 2.0, 1e-12).unwrap();

        assert!((lfr_aml_statistic(&est) - lfr_aml_statistic(&est_p)).abs() < 1e-12);
    }

    #[test]
    fn estimation_respects_the_stationarity_invariants() {
        let cfg: ChannelConfig<f64> = ChannelConfig::new(
            1.0,
            vec![1.0, 1.0, 1.0],
            vec![0.5, 0.5, 0.5],
            vec![0.5, 0.5, 0.5],
        )
        .unwrap();
        let channels = derive(&cfg).unwrap();
        let obs = MultiSampleObservation::new(
            vec![vec![9.0, 1.0, 4.0], vec![11.0, 0.0, 5.0]],
            &channels,
        )
        .unwrap();
        let l0 = 4.0;
        let est = estimate(&obs, &channels, l0, 1e-12).unwrap();
        for m in 0..3 {
            assert!(est.lambda1_hat[m] >= l0);
            assert!(est.slack[m] >= 0.0);
            // Complementary slackness.
            assert!(est.slack[m] * (est.lambda1_hat[m] - l0) < 1e-12);
            assert!(
                (est.lambda1_hat[m] - est.cluster_means[m].max(l0)).abs() < 1e-12,
                "closed form mismatch in cluster {m}"
            );
        }
    }
}
