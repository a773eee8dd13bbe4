//! Target signature model, per-node local detection, and the cluster-level
//! Poisson intensities of detecting nodes.
//!
//! Local detectors are single-sample matched filters on a Gaussian shift
//! model: the decision statistic is N(0, σ_s²) with no target and
//! N(a(x), σ_s²) with one, giving P_fa = Q(τ/σ_s) and
//! P_d(x) = Q((τ − a(x))/σ_s).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::deployment::{cluster_of, Point, RegionLayout, SensorField};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::quad::{integrate_rect, Rect};
use crate::stats::{normal_quantile, normal_tail};

/// Relative tolerance used for the intensity quadrature.
pub const INTENSITY_QUAD_TOL: f64 = 1e-6;

/// Emitter parameters: signal power and planar location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams<F> {
    pub power: F,
    pub location: Point<F>,
}

impl<F: Float> TargetParams<F> {
    pub fn new(power: F, location: Point<F>) -> Result<Self> {
        if power < F::zero() {
            return Err(Error::InvalidArgument(format!(
                "target power must be non-negative, got {power}"
            )));
        }
        Ok(Self { power, location })
    }
}

/// Local sensing parameters shared by every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingConfig<F> {
    pub noise_std: F,
    pub ref_distance: F,
    pub local_threshold: F,
    pub local_pfa: F,
}

impl<F: Float> SensingConfig<F> {
    /// Build from a false-alarm target; the threshold follows from the
    /// matched-filter tail.
    pub fn from_pfa(noise_std: F, ref_distance: F, local_pfa: F) -> Result<Self> {
        if !(noise_std > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "sensing noise std must be positive, got {noise_std}"
            )));
        }
        if !(ref_distance > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "reference distance must be positive, got {ref_distance}"
            )));
        }
        let local_threshold = threshold_for_pfa(local_pfa, noise_std)?;
        Ok(Self {
            noise_std,
            ref_distance,
            local_threshold,
            local_pfa,
        })
    }

    /// Build from an explicit threshold; the false-alarm probability follows.
    pub fn from_threshold(noise_std: F, ref_distance: F, threshold: F) -> Result<Self> {
        if !(noise_std > F::zero()) || !(ref_distance > F::zero()) {
            return Err(Error::InvalidArgument(
                "noise std and reference distance must be positive".into(),
            ));
        }
        Ok(Self {
            noise_std,
            ref_distance,
            local_threshold: threshold,
            local_pfa: local_pfa_of(threshold, noise_std),
        })
    }
}

/// Expected detecting-node counts per cluster under both hypotheses.
///
/// `lambda1` entries are clamped from below at `lambda0`: the matched-filter
/// model guarantees pointwise P_d ≥ P_fa, so any dip below is quadrature
/// round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterIntensities<F> {
    pub lambda0: F,
    pub lambda1: Vec<F>,
}

impl<F: Float> ClusterIntensities<F> {
    pub fn new(lambda0: F, lambda1: Vec<F>) -> Result<Self> {
        if !(lambda0 > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "lambda0 must be positive, got {lambda0}"
            )));
        }
        let lambda1 = lambda1.into_iter().map(|l| l.max(lambda0)).collect();
        Ok(Self { lambda0, lambda1 })
    }

    pub fn num_clusters(&self) -> usize {
        self.lambda1.len()
    }
}

/// Noise-free signal amplitude at `point`: `√P_t / max(d₀, ‖X_t − x‖)`.
///
/// The signature saturates inside the reference distance, so the amplitude is
/// finite even at the emitter location.
pub fn amplitude<F: Float>(target: &TargetParams<F>, point: &Point<F>, ref_distance: F) -> F {
    let d = target.location.distance_to(point);
    target.power.sqrt() / d.max(ref_distance)
}

/// Threshold achieving a given local false-alarm probability:
/// `τ = σ_s Φ⁻¹(1 − P_fa)`.
pub fn threshold_for_pfa<F: Float>(pfa: F, noise_std: F) -> Result<F> {
    if !(pfa > F::zero() && pfa < F::one()) {
        return Err(Error::InvalidArgument(format!(
            "local false-alarm probability must lie in (0, 1), got {pfa}"
        )));
    }
    // Computed as -Φ⁻¹(pfa) rather than Φ⁻¹(1-pfa) to keep full precision at
    // small pfa.
    Ok(-noise_std * normal_quantile(pfa))
}

/// Local false-alarm probability of a threshold: `Q(τ/σ_s)`.
pub fn local_pfa_of<F: Float>(threshold: F, noise_std: F) -> F {
    normal_tail(threshold / noise_std)
}

/// Local detection probability for a received amplitude:
/// `Q((τ − a)/σ_s)`; equals the false-alarm probability at `a = 0` and is
/// strictly increasing in `a`.
pub fn local_pd<F: Float>(signal_amplitude: F, config: &SensingConfig<F>) -> F {
    normal_tail((config.local_threshold - signal_amplitude) / config.noise_std)
}

/// Simulate one round of local decisions and count the positive ones per
/// cluster.
///
/// Each node draws a single matched-filter statistic `a(x)·[target] + Q` with
/// `Q ~ N(0, σ_s²)` and compares it against the threshold. Exactly one
/// standard-normal draw is consumed per node whether or not a target is
/// present, so hypothesis pairs sharing a stream share their noise.
pub fn simulate_decisions<F: Float, R: Rng + ?Sized>(
    field: &SensorField<F>,
    region: &RegionLayout<F>,
    target: Option<&TargetParams<F>>,
    config: &SensingConfig<F>,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; region.num_clusters()];
    for p in &field.positions {
        let cluster = cluster_of(p, region)?;
        let noise = config.noise_std * F::of(<StandardNormal as Distribution<f64>>::sample(
            &StandardNormal,
            rng,
        ));
        let signal = match target {
            Some(t) => amplitude(t, p, config.ref_distance),
            None => F::zero(),
        };
        if signal + noise >= config.local_threshold {
            counts[cluster] += 1;
        }
    }
    Ok(counts)
}

/// Null-hypothesis mean detecting count: `λ₀ = λ P_fa |C|`.
pub fn lambda0<F: Float>(intensity: F, pfa: F, cluster_area: F) -> F {
    intensity * pfa * cluster_area
}

/// Target-present mean detecting count: `λ₁ = λ ∫_C P_d(x) dx` by adaptive
/// quadrature over the cluster rectangle.
pub fn lambda1<F: Float>(
    intensity: F,
    target: &TargetParams<F>,
    cluster: &Rect<F>,
    config: &SensingConfig<F>,
) -> Result<F> {
    let integral = integrate_rect(
        |x, y| local_pd(amplitude(target, &Point::new(x, y), config.ref_distance), config),
        cluster,
        F::of(INTENSITY_QUAD_TOL),
    )?;
    Ok(intensity * integral)
}

/// Assemble the per-cluster intensities for a full region.
pub fn intensities_for<F: Float>(
    region: &RegionLayout<F>,
    target: &TargetParams<F>,
    config: &SensingConfig<F>,
    intensity: F,
) -> Result<ClusterIntensities<F>> {
    let l0 = lambda0(intensity, config.local_pfa, region.cluster_area());
    let l1 = (0..region.num_clusters())
        .map(|m| lambda1(intensity, target, &region.cluster_rect(m), config))
        .collect::<Result<Vec<_>>>()?;
    ClusterIntensities::new(l0, l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::sample_ppp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_sensing() -> SensingConfig<f64> {
        SensingConfig::from_pfa(1.0, 1.0, 0.01).unwrap()
    }

    #[test]
    fn amplitude_decays_and_saturates() {
        let target: TargetParams<f64> = TargetParams::new(1.0, Point::new(0.0, 0.0)).unwrap();
        assert!((amplitude(&target, &Point::new(2.0, 0.0), 1.0) - 0.5).abs() < 1e-15);
        // Inside the reference distance the signal saturates at √P_t/d₀.
        assert!((amplitude(&target, &Point::new(0.3, 0.0), 1.0) - 1.0).abs() < 1e-15);
        let strong: TargetParams<f64> = TargetParams::new(4.0, Point::new(0.0, 0.0)).unwrap();
        assert!((amplitude(&strong, &Point::new(0.0, 4.0), 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_matches_inverse_normal_tail() {
        // Median of symmetric noise.
        assert!(threshold_for_pfa(0.5f64, 1.0).unwrap().abs() < 1e-14);
        // Φ⁻¹(0.99), and its σ_s-scaled version.
        let t: f64 = threshold_for_pfa(0.01, 1.0).unwrap();
        assert!((t - 2.326_347_874_040_841).abs() < 1e-12, "tau = {t}");
        let t2: f64 = threshold_for_pfa(0.01, 2.0).unwrap();
        assert!((t2 - 4.652_695_748_081_682).abs() < 1e-12);
        assert!(threshold_for_pfa(0.0, 1.0).is_err());
        assert!(threshold_for_pfa(1.0, 1.0).is_err());
    }

    #[test]
    fn threshold_pfa_round_trip() {
        for &pfa in &[1e-8, 1e-4, 1e-2, 0.1, 0.5, 0.9, 0.999] {
            let tau: f64 = threshold_for_pfa(pfa, 1.7).unwrap();
            let back = local_pfa_of(tau, 1.7);
            assert!(
                (back - pfa).abs() < 1e-12,
                "pfa {pfa} -> tau {tau} -> {back}"
            );
        }
    }

    #[test]
    fn local_pd_reference_points() {
        let cfg = default_sensing();
        assert!((local_pd(0.0, &cfg) - cfg.local_pfa).abs() < 1e-14);
        assert!((local_pd(cfg.local_threshold, &cfg) - 0.5).abs() < 1e-14);
        let high = local_pd(cfg.local_threshold + 3.0, &cfg);
        assert!((high - 0.998_650_101_968_369_9).abs() < 1e-12);
    }

    #[test]
    fn empty_field_yields_zero_counts() {
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let field = sample_ppp(0.0, &region, &mut rng).unwrap();
        let counts =
            simulate_decisions(&field, &region, None, &default_sensing(), &mut rng).unwrap();
        assert!(counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn null_counts_match_thinned_intensity() {
        // λ₀ = λ P_fa |C| = 2 * 0.01 * (50/3)² = 50/9; sample mean of Λ_m over
        // 10^4 draws within 3·sqrt((50/9)/10^4).
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let field = sample_ppp(2.0, &region, &mut rng).unwrap();
            let counts = simulate_decisions(&field, &region, None, &cfg, &mut rng).unwrap();
            total += counts[4] as f64;
        }
        let mean = total / draws as f64;
        let expect = 50.0 / 9.0;
        let tol = 3.0 * (expect / draws as f64).sqrt();
        assert!(
            (mean - expect).abs() < tol,
            "mean {mean}, expected {expect} +/- {tol}"
        );
    }

    #[test]
    fn zero_power_target_behaves_like_no_target() {
        // Same stream, a(x) = 0 everywhere: identical decisions.
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        let target = TargetParams::new(0.0, Point::new(10.0, 10.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let field = sample_ppp(2.0, &region, &mut rng).unwrap();

        let mut rng_a = ChaCha8Rng::seed_from_u64(77);
        let mut rng_b = ChaCha8Rng::seed_from_u64(77);
        let with = simulate_decisions(&field, &region, Some(&target), &cfg, &mut rng_a).unwrap();
        let without = simulate_decisions(&field, &region, None, &cfg, &mut rng_b).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn lambda0_is_the_product() {
        let area = (50.0f64 / 3.0).powi(2);
        assert!((lambda0(2.0, 0.01, area) - 50.0 / 9.0).abs() < 1e-12);
        assert_eq!(lambda0(2.0, 0.0, area), 0.0);
        assert!((lambda0(1.0, 1.0, area) - area).abs() < 1e-12);
    }

    #[test]
    fn lambda1_reduces_to_lambda0_without_signal() {
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        let target = TargetParams::new(0.0, Point::new(25.0, 25.0)).unwrap();
        let l1 = lambda1(2.0, &target, &region.cluster_rect(4), &cfg).unwrap();
        let l0 = lambda0(2.0, cfg.local_pfa, region.cluster_area());
        assert!((l1 - l0).abs() < 1e-6 * l0, "l1 {l1} vs l0 {l0}");
    }

    #[test]
    fn lambda1_far_target_approaches_lambda0() {
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        // Distance (~550) dwarfs the cluster diagonal (~23.6); the detection
        // gain decays like the amplitude, so the excess shrinks below 1%.
        let target = TargetParams::new(1.0, Point::new(400.0, 400.0)).unwrap();
        let l1 = lambda1(2.0, &target, &region.cluster_rect(0), &cfg).unwrap();
        let l0 = lambda0(2.0, cfg.local_pfa, region.cluster_area());
        assert!(l1 >= l0);
        assert!((l1 - l0) / l0 < 0.01, "far-cluster l1 {l1} vs l0 {l0}");
    }

    #[test]
    fn lambda1_matches_monte_carlo_mean() {
        // Quadrature vs a Monte Carlo oracle on the cluster holding the
        // target, 10^5 draws, 3 standard errors.
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        let target = TargetParams::new(1.0, Point::new(25.0, 25.0)).unwrap();
        let l1 = lambda1(2.0, &target, &region.cluster_rect(4), &cfg).unwrap();

        let draws = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut total = 0.0;
        let mut totsq = 0.0;
        for _ in 0..draws {
            let field = sample_ppp(2.0, &region, &mut rng).unwrap();
            let counts =
                simulate_decisions(&field, &region, Some(&target), &cfg, &mut rng).unwrap();
            let c = counts[4] as f64;
            total += c;
            totsq += c * c;
        }
        let n = draws as f64;
        let mean = total / n;
        let var = (totsq - n * mean * mean) / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - l1).abs() < 3.0 * se,
            "MC mean {mean} vs quadrature {l1} (se {se})"
        );
    }

    #[test]
    fn lambda1_decreases_away_from_cluster() {
        let region = RegionLayout::new(50.0, 50.0, 3, 3).unwrap();
        let cfg = default_sensing();
        let rect = region.cluster_rect(0);
        let (cx, cy) = rect.center();
        for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (0.7071, 0.7071)] {
            let mut prev = f64::INFINITY;
            for step in 0..6 {
                let r = 4.0 * step as f64;
                let target =
                    TargetParams::new(1.0, Point::new(cx + dx * r, cy + dy * r)).unwrap();
                let l1 = lambda1(2.0, &target, &rect, &cfg).unwrap();
                assert!(
                    l1 <= prev + 1e-9,
                    "lambda1 rose from {prev} to {l1} at radius {r}"
                );
                prev = l1;
            }
        }
    }
}
