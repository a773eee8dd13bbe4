//! Two-hop communication model: the shared on-off-keyed multiple-access
//! channel from sensor nodes to their cluster head, and the
//! amplify-and-forward relay from cluster head to fusion center. Both hops add
//! white Gaussian noise.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::float::Float;

/// Transmit powers and per-hop noise variances, one entry per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig<F> {
    pub sn_power: F,
    pub ch_powers: Vec<F>,
    pub snch_noise_vars: Vec<F>,
    pub chfc_noise_vars: Vec<F>,
}

impl<F: Float> ChannelConfig<F> {
    pub fn new(
        sn_power: F,
        ch_powers: Vec<F>,
        snch_noise_vars: Vec<F>,
        chfc_noise_vars: Vec<F>,
    ) -> Result<Self> {
        if !(sn_power > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "sensor transmit power must be positive, got {sn_power}"
            )));
        }
        let m = ch_powers.len();
        if snch_noise_vars.len() != m || chfc_noise_vars.len() != m {
            return Err(Error::InvalidArgument(format!(
                "per-cluster lists must share a length: powers {m}, \
                 sn-ch vars {}, ch-fc vars {}",
                snch_noise_vars.len(),
                chfc_noise_vars.len()
            )));
        }
        for (name, list) in [
            ("ch_powers", &ch_powers),
            ("snch_noise_vars", &snch_noise_vars),
            ("chfc_noise_vars", &chfc_noise_vars),
        ] {
            if list.iter().any(|v| *v < F::zero() || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} entries must be finite and non-negative"
                )));
            }
        }
        Ok(Self {
            sn_power,
            ch_powers,
            snch_noise_vars,
            chfc_noise_vars,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.ch_powers.len()
    }

    /// Same noise environment with different relay powers (used by the
    /// power-allocated fusion variant).
    pub fn with_ch_powers(&self, ch_powers: Vec<F>) -> Result<Self> {
        Self::new(
            self.sn_power,
            ch_powers,
            self.snch_noise_vars.clone(),
            self.chfc_noise_vars.clone(),
        )
    }
}

/// Per-cluster end-to-end quantities: effective power `P̃_m = P_m P₀`,
/// aggregate noise `σ̃²_m = P_m σ²_c,m + σ²_f,m`, and SNR `s_m = P̃_m/σ̃²_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDerived<F> {
    pub p_tilde: Vec<F>,
    pub sigma_tilde_sq: Vec<F>,
    pub snr: Vec<F>,
}

impl<F> ChannelDerived<F> {
    pub fn num_clusters(&self) -> usize {
        self.p_tilde.len()
    }
}

/// Compute the derived end-to-end channel quantities.
///
/// A cluster with positive effective power but zero aggregate noise has an
/// infinite SNR, which the likelihood evaluation cannot represent; that
/// combination is rejected.
pub fn derive<F: Float>(config: &ChannelConfig<F>) -> Result<ChannelDerived<F>> {
    let m = config.num_clusters();
    let mut p_tilde = Vec::with_capacity(m);
    let mut sigma_tilde_sq = Vec::with_capacity(m);
    let mut snr = Vec::with_capacity(m);
    for i in 0..m {
        let pt = config.ch_powers[i] * config.sn_power;
        let st = config.ch_powers[i] * config.snch_noise_vars[i] + config.chfc_noise_vars[i];
        if st == F::zero() && pt > F::zero() {
            return Err(Error::DegenerateChannel(format!(
                "cluster {i} has zero aggregate noise with effective power {pt}"
            )));
        }
        p_tilde.push(pt);
        sigma_tilde_sq.push(st);
        snr.push(if st > F::zero() { pt / st } else { F::zero() });
    }
    Ok(ChannelDerived {
        p_tilde,
        sigma_tilde_sq,
        snr,
    })
}

/// First hop: `Y_m = √P₀ Λ_m + W_m`, `W_m ~ N(0, σ²_c,m)`.
pub fn sn_ch_transmit<F: Float, R: Rng + ?Sized>(
    count: u64,
    sn_power: F,
    noise_var: F,
    rng: &mut R,
) -> F {
    let n = F::of(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng));
    sn_power.sqrt() * F::of(count as f64) + noise_var.sqrt() * n
}

/// Second hop: `Z_m = √P_m Y_m + V_m`, `V_m ~ N(0, σ²_f,m)`.
pub fn ch_fc_relay<F: Float, R: Rng + ?Sized>(
    reception: F,
    ch_power: F,
    noise_var: F,
    rng: &mut R,
) -> F {
    let n = F::of(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng));
    ch_power.sqrt() * reception + noise_var.sqrt() * n
}

/// Map per-hop SNR targets (dB) to noise variances.
///
/// The convention isolates one hop per ratio: `σ²_c,m = P₀ / 10^(SNR_c/10)`
/// (per-decision received power over cluster-head noise) and
/// `σ²_f,m = P_m P₀ / 10^(SNR_f/10)` (post-amplification power over fusion
/// noise). The experiment harness echoes this convention into every output
/// header.
pub fn noise_vars_from_snr<F: Float>(
    snr_c_db: &[F],
    snr_f_db: &[F],
    sn_power: F,
    ch_powers: &[F],
) -> (Vec<F>, Vec<F>) {
    assert_eq!(snr_c_db.len(), ch_powers.len());
    assert_eq!(snr_f_db.len(), ch_powers.len());
    let ten = F::of(10.0);
    let snch = snr_c_db
        .iter()
        .map(|&db| sn_power / ten.powf(db / ten))
        .collect();
    let chfc = snr_f_db
        .iter()
        .zip(ch_powers)
        .map(|(&db, &pm)| pm * sn_power / ten.powf(db / ten))
        .collect();
    (snch, chfc)
}
