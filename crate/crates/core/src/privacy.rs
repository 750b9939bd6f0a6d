//! Gaussian-mechanism noise for shared parameters, per-round budget
//! schedules, and a pairwise additive-masking secure sum.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng as _, RngCore};
use rand_distr::StandardNormal;

use crate::cluster::ViewWeights;
use crate::error::{bail, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::{self, Rng, SECAGG_STREAM};
use crate::Centers;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetSchedule {
    /// `ε_t = ε_total / √T / √(t+1)`. Front-loaded; does not sum to `ε_total`.
    Paper,
    /// `ε_t = ε_total / T`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyConfig {
    pub enabled: bool,
    pub epsilon_total: f64,
    pub delta: f64,
    pub sensitivity: f64,
    pub schedule: BudgetSchedule,
    /// Aggregate client contributions through [`secure_sum`].
    pub secure_aggregation: bool,
    pub fixed_point_scale: u64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            epsilon_total: 1.0,
            delta: 1e-5,
            sensitivity: 1.0,
            schedule: BudgetSchedule::Paper,
            secure_aggregation: false,
            fixed_point_scale: 1 << 20,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_total > 0.0 && self.epsilon_total.is_finite()) {
            bail!(InvalidBudget, "epsilon_total must be positive, got {}", self.epsilon_total);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!(InvalidBudget, "delta must lie in (0, 1), got {}", self.delta);
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            bail!(InvalidBudget, "sensitivity must be positive, got {}", self.sensitivity);
        }
        if !self.fixed_point_scale.is_power_of_two() {
            bail!(InvalidConfig, "fixed_point_scale must be a power of two, got {}", self.fixed_point_scale);
        }
        Ok(())
    }
}

/// Gaussian-mechanism variance `2Δ²·ln(1.25/δ)/ε²`.
pub fn gaussian_variance(eps: f64, delta: f64, sensitivity: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        bail!(InvalidBudget, "per-round epsilon must be positive, got {}", eps);
    }
    if !(delta > 0.0 && delta < 1.0) {
        bail!(InvalidBudget, "delta must lie in (0, 1), got {}", delta);
    }
    Ok(2.0 * sensitivity * sensitivity * math::ln(1.25 / delta) / (eps * eps))
}

/// Adds i.i.d. Gaussian noise to every center coordinate.
pub fn dp_noise_centers(centers: &[Matrix], eps_t: f64, delta: f64, sensitivity: f64, rng: &mut Rng) -> Result<Centers> {
    let sd = math::sqrt(gaussian_variance(eps_t, delta, sensitivity)?);
    let mut out = centers.to_vec();
    for a in out.iter_mut() {
        for x in a.as_mut_slice() {
            *x += sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(out)
}

/// Adds noise with variance `2·ln(1.25/δ)/(ε²n²)` to each weight, clips at
/// zero and renormalizes.
pub fn dp_noise_view_weights(
    weights: &ViewWeights,
    eps_t: f64,
    delta: f64,
    n_client: usize,
    rng: &mut Rng,
) -> Result<ViewWeights> {
    if n_client == 0 {
        bail!(InvalidInput, "client sample count must be positive");
    }
    let n = n_client as f64;
    let sd = math::sqrt(gaussian_variance(eps_t, delta, 1.0)? / (n * n));
    let v = weights
        .as_slice()
        .iter()
        .map(|&w| (w + sd * rng.sample::<f64, _>(StandardNormal)).max(0.0))
        .collect();
    Ok(ViewWeights::onto_simplex(v))
}

pub fn budget_schedule(epsilon_total: f64, rounds: usize, schedule: BudgetSchedule) -> Result<Vec<f64>> {
    if rounds < 1 {
        bail!(InvalidBudget, "schedule needs at least one round");
    }
    if !(epsilon_total > 0.0 && epsilon_total.is_finite()) {
        bail!(InvalidBudget, "epsilon_total must be positive, got {}", epsilon_total);
    }
    let t = rounds as f64;
    Ok(match schedule {
        BudgetSchedule::Paper => (0..rounds)
            .map(|i| epsilon_total / math::sqrt(t) / math::sqrt(i as f64 + 1.0))
            .collect(),
        BudgetSchedule::Uniform => vec![epsilon_total / t; rounds],
    })
}

/// One client's upload: fixed-point plaintext plus pairwise masks, in
/// wrapping 64-bit arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedShare {
    pub client_id: usize,
    pub values: Vec<u64>,
}

fn encode(x: f64, scale: u64) -> Result<u64> {
    let v = math::round(x * scale as f64);
    if !v.is_finite() || v.abs() >= 9.0e18 {
        bail!(InvalidInput, "value {} does not fit the fixed-point range", x);
    }
    Ok(v as i64 as u64)
}

fn pair_mask(session_seed: u64, a: usize, b: usize, len: usize) -> Vec<u64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut r = rng::seeded(rng::derive(session_seed, SECAGG_STREAM, lo as u64, hi as u64));
    (0..len).map(|_| r.next_u64()).collect()
}

/// Masks `plaintext` for `client_id`. Against every other participant the
/// lower id adds the shared pseudorandom mask and the higher id subtracts it,
/// so the masks cancel only when every participant's share is summed.
pub fn mask_share(
    client_id: usize,
    plaintext: &[f64],
    participants: &[usize],
    session_seed: u64,
    scale: u64,
) -> Result<MaskedShare> {
    if !participants.contains(&client_id) {
        bail!(InvalidInput, "client {} is not a participant", client_id);
    }
    let mut values = plaintext.iter().map(|&x| encode(x, scale)).collect::<Result<Vec<_>>>()?;
    for &other in participants.iter().filter(|&&o| o != client_id) {
        let mask = pair_mask(session_seed, client_id, other, values.len());
        for (v, m) in values.iter_mut().zip(mask) {
            *v = if client_id < other { v.wrapping_add(m) } else { v.wrapping_sub(m) };
        }
    }
    Ok(MaskedShare { client_id, values })
}

/// Server side: sums the shares and decodes. Aborts unless exactly one
/// share per participant is present.
pub fn unmask_sum(shares: &[MaskedShare], participants: &[usize], scale: u64) -> Result<Vec<f64>> {
    let mut missing: Vec<usize> = participants
        .iter()
        .copied()
        .filter(|p| shares.iter().filter(|s| s.client_id == *p).count() != 1)
        .collect();
    missing.extend(shares.iter().map(|s| s.client_id).filter(|id| !participants.contains(id)));
    if !missing.is_empty() {
        return Err(Error::ProtocolAbort(alloc::format!(
            "shares missing, duplicated or unexpected for clients {:?}; masks cannot cancel",
            missing
        )));
    }
    let len = shares.first().map_or(0, |s| s.values.len());
    if shares.iter().any(|s| s.values.len() != len) {
        bail!(Shape, "masked shares have different lengths");
    }
    let mut acc = vec![0u64; len];
    for s in shares {
        for (a, &v) in acc.iter_mut().zip(&s.values) {
            *a = a.wrapping_add(v);
        }
    }
    Ok(acc.into_iter().map(|a| a as i64 as f64 / scale as f64).collect())
}

/// Sum of the clients' vectors computed through masked shares.
pub fn secure_sum(vectors: &[Vec<f64>], client_ids: &[usize], session_seed: u64, scale: u64) -> Result<Vec<f64>> {
    if vectors.len() != client_ids.len() {
        bail!(Shape, "{} vectors for {} clients", vectors.len(), client_ids.len());
    }
    let shares = vectors
        .iter()
        .zip(client_ids)
        .map(|(v, &id)| mask_share(id, v, client_ids, session_seed, scale))
        .collect::<Result<Vec<_>>>()?;
    unmask_sum(&shares, client_ids, scale)
}

/// Fixed-point image of `values`, the exact result [`secure_sum`] decodes to.
pub fn fixed_point_sum(vectors: &[Vec<f64>], scale: u64) -> Result<Vec<f64>> {
    let len = vectors.first().map_or(0, Vec::len);
    let mut acc = vec![0u64; len];
    for v in vectors {
        for (a, &x) in acc.iter_mut().zip(v) {
            *a = a.wrapping_add(encode(x, scale)?);
        }
    }
    Ok(acc.into_iter().map(|a| a as i64 as f64 / scale as f64).collect())
}
