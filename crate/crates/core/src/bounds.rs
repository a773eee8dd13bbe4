//! Gaussian-tail upper bounds on the linear fusion rule's false-alarm and
//! detection probabilities, from the second-order moment-generating-function
//! approximation.

use crate::float::Float;
use crate::fusion::FusionContext;
use crate::Hypothesis;

/// Mean and variance of the approximated linear-statistic distribution under
/// each hypothesis:
/// `λ̄_{j,d} = Σ λ_{j,m} d_m √P̃_m` and
/// `σ̃²_{j,d} = Σ d²_m (λ_{j,m} P̃_m + σ̃²_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundParams<F> {
    pub mean_h0: F,
    pub var_h0: F,
    pub mean_h1: F,
    pub var_h1: F,
}

impl<F: Float> TailBoundParams<F> {
    pub fn mean(&self, hypothesis: Hypothesis) -> F {
        match hypothesis {
            Hypothesis::H0 => self.mean_h0,
            Hypothesis::H1 => self.mean_h1,
        }
    }

    pub fn variance(&self, hypothesis: Hypothesis) -> F {
        match hypothesis {
            Hypothesis::H0 => self.var_h0,
            Hypothesis::H1 => self.var_h1,
        }
    }
}

/// Compute both hypotheses' moments from the fusion context.
pub fn bound_params<F: Float>(ctx: &FusionContext<F>) -> TailBoundParams<F> {
    let mut p = TailBoundParams {
        mean_h0: F::zero(),
        var_h0: F::zero(),
        mean_h1: F::zero(),
        var_h1: F::zero(),
    };
    for m in 0..ctx.num_clusters() {
        let d = ctx.weights_lfr[m];
        let pt = ctx.channels.p_tilde[m];
        let st = ctx.channels.sigma_tilde_sq[m];
        let l0 = ctx.intensities.lambda0;
        let l1 = ctx.intensities.lambda1[m];
        p.mean_h0 += l0 * d * pt.sqrt();
        p.mean_h1 += l1 * d * pt.sqrt();
        p.var_h0 += d * d * (l0 * pt + st);
        p.var_h1 += d * d * (l1 * pt + st);
    }
    p
}

/// Chernoff-style tail bound `P(Λ_LFR > z; H_j) ≤ exp(−(z − λ̄)²/(2σ̃²))`.
///
/// The optimizing exponent is interior only for `z > λ̄`; at or below the mean
/// the bound is vacuous and 1 is returned so the result stays a true bound
/// everywhere. A degenerate zero-variance statistic has no mass above its
/// mean.
pub fn tail_bound<F: Float>(z: F, params: &TailBoundParams<F>, hypothesis: Hypothesis) -> F {
    let mean = params.mean(hypothesis);
    let var = params.variance(hypothesis);
    if z <= mean {
        return F::one();
    }
    if var == F::zero() {
        return F::zero();
    }
    let d = z - mean;
    (-(d * d) / (F::of(2.0) * var)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelDerived;
    use crate::sensing::ClusterIntensities;

    fn ctx(lambda0: f64, lambda1: Vec<f64>, p_tilde: Vec<f64>, sigma: Vec<f64>) -> FusionContext<f64> {
        let snr = p_tilde
            .iter()
            .zip(&sigma)
            .map(|(&p, &s)| if s > 0.0 { p / s } else { 0.0 })
            .collect();
        FusionContext::new(
            ClusterIntensities::new(lambda0, lambda1).unwrap(),
            ChannelDerived {
                p_tilde,
                sigma_tilde_sq: sigma,
                snr,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_degenerate_params() {
        // λ1 = λ0 zeroes every weight.
        let c = ctx(2.0, vec![2.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0]);
        let p = bound_params(&c);
        assert_eq!((p.mean_h0, p.var_h0, p.mean_h1, p.var_h1), (0.0, 0.0, 0.0, 0.0));
        // Degenerate point mass at zero: nothing above positive thresholds.
        assert_eq!(tail_bound(1.0, &p, Hypothesis::H0), 0.0);
        assert_eq!(tail_bound(0.0, &p, Hypothesis::H0), 1.0);
    }

    #[test]
    fn single_cluster_reference_values() {
        // d = 1 needs λ1 − λ0 = σ̃²/√P̃: λ0=2, λ1=5, P̃=1, σ̃²=3.
        let c = ctx(2.0, vec![5.0], vec![1.0], vec![3.0]);
        assert!((c.weights_lfr[0] - 1.0).abs() < 1e-15);
        let p = bound_params(&c);
        assert!((p.mean_h0 - 2.0).abs() < 1e-15);
        assert!((p.var_h0 - 5.0).abs() < 1e-15);
        assert!((p.mean_h1 - 5.0).abs() < 1e-15);
        assert!((p.var_h1 - 8.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_clusters_double_the_params() {
        let one = bound_params(&ctx(2.0, vec![5.0], vec![1.0], vec![3.0]));
        let two = bound_params(&ctx(2.0, vec![5.0, 5.0], vec![1.0, 1.0], vec![3.0, 3.0]));
        assert!((two.mean_h0 - 2.0 * one.mean_h0).abs() < 1e-14);
        assert!((two.var_h1 - 2.0 * one.var_h1).abs() < 1e-14);
    }

    #[test]
    fn bound_reference_points() {
        let p: TailBoundParams<f64> = TailBoundParams {
            mean_h0: 3.0,
            var_h0: 4.0,
            mean_h1: 10.0,
            var_h1: 9.0,
        };
        // At the mean the exponent vanishes (clamped boundary).
        assert_eq!(tail_bound(3.0, &p, Hypothesis::H0), 1.0);
        // One standard deviation above: exp(-1/2).
        let b = tail_bound(5.0, &p, Hypothesis::H0);
        assert!((b - 0.606_530_659_712_633_4).abs() < 1e-15);
        // Below the mean the bound is vacuous.
        assert_eq!(tail_bound(-5.0, &p, Hypothesis::H1), 1.0);
    }

    #[test]
    fn bound_is_monotone_and_within_unit_interval() {
        let p = TailBoundParams {
            mean_h0: 1.0,
            var_h0: 2.5,
            mean_h1: 4.0,
            var_h1: 2.5,
        };
        let mut prev = 1.0;
        for i in 0..100 {
            let z = 1.0 + 0.2 * i as f64;
            let b = tail_bound(z, &p, Hypothesis::H0);
            assert!((0.0..=1.0).contains(&b));
            assert!(b <= prev + 1e-15);
            prev = b;
        }
    }
}
