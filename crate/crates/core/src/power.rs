//! Relay transmit-power allocation minimizing total power subject to a
//! mean-difference floor, via the closed-form stationarity solution inside an
//! active-set iteration.

use crate::error::{Error, Result};
use crate::float::Float;

/// Inputs to the allocation: per-cluster intensity gaps
/// `λ_{d,m} = λ₁,ₘ − λ₀`, per-hop noise variances, the node transmit power
/// `P₀`, and the mean-difference floor `D₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem<F> {
    pub lambda_d: Vec<F>,
    pub snch_noise_vars: Vec<F>,
    pub chfc_noise_vars: Vec<F>,
    pub sn_power: F,
    pub md_floor: F,
}

impl<F: Float> AllocationProblem<F> {
    pub fn new(
        lambda_d: Vec<F>,
        snch_noise_vars: Vec<F>,
        chfc_noise_vars: Vec<F>,
        sn_power: F,
        md_floor: F,
    ) -> Result<Self> {
        let m = lambda_d.len();
        if snch_noise_vars.len() != m || chfc_noise_vars.len() != m {
            return Err(Error::InvalidArgument(
                "allocation lists must share a length".into(),
            ));
        }
        if snch_noise_vars.iter().any(|v| !(*v > F::zero())) {
            return Err(Error::InvalidArgument(
                "sensor-to-head noise variances must be positive".into(),
            ));
        }
        if chfc_noise_vars.iter().any(|v| *v < F::zero()) {
            return Err(Error::InvalidArgument(
                "head-to-fusion noise variances must be non-negative".into(),
            ));
        }
        if lambda_d.iter().any(|v| *v < F::zero()) {
            return Err(Error::InvalidArgument(
                "intensity gaps must be non-negative".into(),
            ));
        }
        if !(sn_power > F::zero()) {
            return Err(Error::InvalidArgument("node power must be positive".into()));
        }
        if !(md_floor > F::zero()) {
            return Err(Error::InvalidArgument(
                "mean-difference floor must be positive".into(),
            ));
        }
        Ok(Self {
            lambda_d,
            snch_noise_vars,
            chfc_noise_vars,
            sn_power,
            md_floor,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.lambda_d.len()
    }

    /// Normalized floor `D₁ = D₀/P₀`.
    pub fn d1(&self) -> F {
        self.md_floor / self.sn_power
    }

    /// Supremum of the achievable mean difference (all powers to infinity):
    /// `P₀ Σ λ²_{d,m}/σ²_c,m`.
    pub fn md_supremum(&self) -> F {
        self.sn_power
            * self
                .lambda_d
                .iter()
                .zip(&self.snch_noise_vars)
                .map(|(&l, &sc)| l * l / sc)
                .sum::<F>()
    }
}

/// Result of the allocation with its dual value and active set.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<F> {
    pub powers: Vec<F>,
    pub nu: F,
    pub active_set: Vec<usize>,
    pub achieved_md: F,
}

impl<F: Float> PowerAllocation<F> {
    pub fn total_power(&self) -> F {
        self.powers.iter().copied().sum()
    }
}

/// Mean difference of the linear statistic under a given power vector:
/// `MD = P₀ Σ P_m λ²_{d,m} / (σ²_c,m P_m + σ²_f,m)`.
pub fn mean_difference<F: Float>(powers: &[F], problem: &AllocationProblem<F>) -> F {
    assert_eq!(powers.len(), problem.num_clusters());
    problem.sn_power
        * powers
            .iter()
            .enumerate()
            .map(|(m, &p)| {
                let l = problem.lambda_d[m];
                let denom = problem.snch_noise_vars[m] * p + problem.chfc_noise_vars[m];
                if denom > F::zero() {
                    p * l * l / denom
                } else {
                    F::zero()
                }
            })
            .sum::<F>()
}

/// Solve the allocation by active-set iteration around the closed form.
///
/// With the active set fixed, the dual level is
/// `√ν = (Σ λ_d σ_f/σ²_c) / (Σ λ²_d/σ²_c − D₁)` and each power is
/// `P_m = (λ_d σ_f √ν/σ²_c − σ²_f/σ²_c)⁺`. Clusters whose unclamped value is
/// non-positive are removed and the dual recomputed until all retained powers
/// are positive. The stationarity level only binds clusters that end up with
/// positive power, so the plain clamp alone would leave the floor violated;
/// the re-solve restores it.
pub fn allocate<F: Float>(problem: &AllocationProblem<F>) -> Result<PowerAllocation<F>> {
    let m = problem.num_clusters();
    let d1 = problem.d1();
    let sup = problem.md_supremum() / problem.sn_power;
    if !(sup > d1) {
        return Err(Error::Infeasible {
            demanded: problem.md_floor.as_f64(),
            supremum: (sup * problem.sn_power).as_f64(),
        });
    }

    let mut active: Vec<bool> = problem.lambda_d.iter().map(|&l| l > F::zero()).collect();
    if active.iter().all(|a| !a) {
        return Err(Error::Infeasible {
            demanded: problem.md_floor.as_f64(),
            supremum: 0.0,
        });
    }

    for _ in 0..=m {
        let mut num = F::zero();
        let mut den = -d1;
        for i in 0..m {
            if active[i] {
                let l = problem.lambda_d[i];
                let sc = problem.snch_noise_vars[i];
                let sf = problem.chfc_noise_vars[i].sqrt();
                num += l * sf / sc;
                den += l * l / sc;
            }
        }
        if !(den > F::zero()) {
            return Err(Error::Infeasible {
                demanded: problem.md_floor.as_f64(),
                supremum: ((den + d1) * problem.sn_power).as_f64(),
            });
        }
        let sqrt_nu = num / den;

        let mut powers = vec![F::zero(); m];
        let mut dropped = false;
        for i in 0..m {
            if !active[i] {
                continue;
            }
            let sc = problem.snch_noise_vars[i];
            let sf = problem.chfc_noise_vars[i].sqrt();
            let unclamped = problem.lambda_d[i] * sf * sqrt_nu / sc
                - problem.chfc_noise_vars[i] / sc;
            if unclamped > F::zero() {
                powers[i] = unclamped;
            } else {
                active[i] = false;
                dropped = true;
            }
        }
        if dropped {
            continue;
        }

        let achieved_md = mean_difference(&powers, problem);
        return Ok(PowerAllocation {
            powers,
            nu: sqrt_nu * sqrt_nu,
            active_set: (0..m).filter(|&i| active[i]).collect(),
            achieved_md,
        });
    }
    Err(Error::Numeric(
        "active-set iteration failed to settle".into(),
    ))
}

/// Power saving of an allocation against a reference total budget, percent.
pub fn power_saving<F: Float>(powers: &[F], reference_total: F) -> F {
    assert!(reference_total > F::zero());
    (reference_total - powers.iter().copied().sum::<F>()) / reference_total * F::of(100.0)
}

/// The saving formula as a per-cluster sum, `Σ_m (P_ref − P_m)/P_ref × 100`,
/// which exceeds 100% as soon as more than one cluster saves power. Exposed
/// for comparison only.
pub fn power_saving_literal<F: Float>(powers: &[F], reference_total: F) -> F {
    assert!(reference_total > F::zero());
    powers
        .iter()
        .map(|&p| (reference_total - p) / reference_total)
        .sum::<F>()
        * F::of(100.0)
}
