//! BPSK over block fading with real AWGN, interuser link outcomes and relay
//! silence, and per-bit destination observations.
//!
//! Bit `b` is sent as `x' = 2b - 1`; a slot with gain `alpha` receives
//! `y = alpha x' + n` with `n ~ N(0, 1/(2 gamma))`. Observations are reported as
//! `4 alpha gamma y`, so a positive value favours bit 1.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::codes::{Codeword, JnccCode, PointToPointCode};
use crate::decoder::{BpConfig, BpDecoder};
use crate::error::{JnccError, Result};
use crate::topology::NetworkTopology;

/// Default relay decoding threshold on `alpha^2 gamma`, in dB.
pub const DEFAULT_RELAY_THRESHOLD_DB: f64 = 5.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteruserModel {
    Perfect,
    Rayleigh,
    /// Unit gain, noise only.
    Gaussian,
    Bec(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DestinationModel {
    Rayleigh,
    Bec(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelayDecodeRule {
    /// Decoding succeeds iff `alpha^2 gamma` exceeds the threshold (dB).
    Threshold(f64),
    /// Run BP on the interuser observation of the source codeword.
    FullBp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelConfig {
    pub gamma: f64,
    pub interuser: InteruserModel,
    pub destination: DestinationModel,
    pub relay_rule: RelayDecodeRule,
    pub reciprocal: bool,
}

impl ChannelConfig {
    pub fn new(gamma: f64) -> Self {
        ChannelConfig {
            gamma,
            interuser: InteruserModel::Perfect,
            destination: DestinationModel::Rayleigh,
            relay_rule: RelayDecodeRule::Threshold(DEFAULT_RELAY_THRESHOLD_DB),
            reciprocal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(JnccError::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        for eps in [
            match self.interuser {
                InteruserModel::Bec(e) => Some(e),
                _ => None,
            },
            match self.destination {
                DestinationModel::Bec(e) => Some(e),
                _ => None,
            },
        ]
        .into_iter()
        .flatten()
        {
            if !(0.0..=1.0).contains(&eps) {
                return Err(JnccError::Config(format!("erasure probability {eps} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn parse_bec(s: &str) -> Option<f64> {
    s.strip_prefix("bec(")?.strip_suffix(')')?.trim().parse().ok()
}

impl FromStr for InteruserModel {
    type Err = JnccError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(InteruserModel::Perfect),
            "rayleigh" => Ok(InteruserModel::Rayleigh),
            "gaussian" => Ok(InteruserModel::Gaussian),
            _ => parse_bec(s)
                .map(InteruserModel::Bec)
                .ok_or_else(|| JnccError::Config(format!("unknown interuser model `{s}`"))),
        }
    }
}

impl fmt::Display for InteruserModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteruserModel::Perfect => f.write_str("perfect"),
            InteruserModel::Rayleigh => f.write_str("rayleigh"),
            InteruserModel::Gaussian => f.write_str("gaussian"),
            InteruserModel::Bec(e) => write!(f, "bec({e})"),
        }
    }
}

impl FromStr for DestinationModel {
    type Err = JnccError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rayleigh" => Ok(DestinationModel::Rayleigh),
            _ => parse_bec(s)
                .map(DestinationModel::Bec)
                .ok_or_else(|| JnccError::Config(format!("unknown destination model `{s}`"))),
        }
    }
}

impl FromStr for RelayDecodeRule {
    type Err = JnccError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full-bp" {
            return Ok(RelayDecodeRule::FullBp);
        }
        s.strip_prefix("threshold(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|r| r.trim().parse().ok())
            .map(RelayDecodeRule::Threshold)
            .ok_or_else(|| JnccError::Config(format!("unknown relay decode rule `{s}`")))
    }
}

/// Everything random about one network use.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingRealization {
    /// Gain from each node (indexed by relay index) to the destination.
    pub alpha_dest: Vec<f64>,
    /// `interuser[r][u]`: gain of the link from source `u` to relay `r`.
    pub interuser: Vec<Vec<f64>>,
    /// `decoded[r][u]`: whether relay `r` decoded source `u` (only meaningful
    /// for `u` in the decoding set of `r`).
    pub decoded: Vec<Vec<bool>>,
    pub silent_relays: Vec<bool>,
}

/// `alpha` with `alpha^2 ~ Exp(1)`.
pub fn rayleigh_gain(rng: &mut impl Rng) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e.sqrt()
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Draws destination and interuser gains and decides relay silence. With the
/// full-BP rule every link is marked decoded here; call
/// [`apply_full_bp_relay_rule`] once the source codewords are known.
pub fn draw_realization(cfg: &ChannelConfig, t: &NetworkTopology, rng: &mut impl Rng) -> FadingRealization {
    let (m_s, m_r) = (t.m_s(), t.m_r());
    let alpha_dest: Vec<f64> = (0..m_r)
        .map(|_| match cfg.destination {
            DestinationModel::Rayleigh => rayleigh_gain(rng),
            DestinationModel::Bec(eps) => {
                if rng.random::<f64>() < eps {
                    0.0
                } else {
                    1.0
                }
            }
        })
        .collect();
    let mut interuser: Vec<Vec<f64>> = (0..m_r)
        .map(|_| {
            (0..m_s)
                .map(|_| match cfg.interuser {
                    InteruserModel::Perfect | InteruserModel::Gaussian => 1.0,
                    InteruserModel::Rayleigh => rayleigh_gain(rng),
                    InteruserModel::Bec(eps) => {
                        if rng.random::<f64>() < eps {
                            0.0
                        } else {
                            1.0
                        }
                    }
                })
                .collect()
        })
        .collect();
    if cfg.reciprocal {
        for r in 0..m_s {
            for u in 0..r {
                interuser[r][u] = interuser[u][r];
            }
        }
    }
    let threshold = match cfg.relay_rule {
        RelayDecodeRule::Threshold(db) => Some(db_to_linear(db)),
        RelayDecodeRule::FullBp => None,
    };
    let decoded: Vec<Vec<bool>> = (0..m_r)
        .map(|r| {
            (0..m_s)
                .map(|u| {
                    let a = interuser[r][u];
                    match cfg.interuser {
                        InteruserModel::Perfect => true,
                        InteruserModel::Bec(_) => a > 0.0,
                        InteruserModel::Rayleigh | InteruserModel::Gaussian => {
                            threshold.is_none_or(|th| a * a * cfg.gamma > th)
                        }
                    }
                })
                .collect()
        })
        .collect();
    let silent_relays = silence_from(t, &decoded);
    FadingRealization {
        alpha_dest,
        interuser,
        decoded,
        silent_relays,
    }
}

fn silence_from(t: &NetworkTopology, decoded: &[Vec<bool>]) -> Vec<bool> {
    (0..t.m_r())
        .map(|r| t.decoding_set(r).iter().any(|&u| u != r && !decoded[r][u]))
        .collect()
}

/// Replaces the decode outcomes with actual BP runs of the point-to-point
/// code on each interuser observation.
pub fn apply_full_bp_relay_rule(
    real: &mut FadingRealization,
    cfg: &ChannelConfig,
    t: &NetworkTopology,
    p2p: &PointToPointCode,
    source_codewords: &[Vec<u8>],
    bp: &BpConfig,
    rng: &mut impl Rng,
) {
    if matches!(cfg.interuser, InteruserModel::Perfect) {
        return;
    }
    let mut dec = BpDecoder::new(&p2p.h_sparse);
    for r in 0..t.m_r() {
        for &u in t.decoding_set(r) {
            if u == r {
                continue;
            }
            let a = real.interuser[r][u];
            let ok = if a == 0.0 {
                false
            } else if matches!(cfg.interuser, InteruserModel::Bec(_)) {
                true
            } else {
                let llr = observe(&source_codewords[u], a, cfg.gamma, rng);
                dec.decode(&llr, bp);
                dec.hard_decision()[..p2p.k] == source_codewords[u][..p2p.k]
            };
            real.decoded[r][u] = ok;
        }
    }
    real.silent_relays = silence_from(t, &real.decoded);
}

/// Observation values for one block sent with gain `alpha`.
pub fn observe(bits: &[u8], alpha: f64, gamma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let sigma = (0.5 / gamma).sqrt();
    let scale = 4.0 * alpha * gamma;
    bits.iter()
        .map(|&b| {
            let x = if b & 1 == 1 { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(rng);
            scale * (alpha * x + sigma * n)
        })
        .collect()
}

fn perfect(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b & 1 == 1 { f64::INFINITY } else { f64::NEG_INFINITY })
        .collect()
}

/// Destination observations for a whole network codeword. Silent slots and
/// zero-gain slots are all zero.
pub fn transmit(
    code: &JnccCode,
    cw: &Codeword,
    real: &FadingRealization,
    cfg: &ChannelConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let m_s = code.m_s();
    let mut out = vec![0.0; code.len()];
    for (slot, cols) in code.slot_columns.iter().enumerate() {
        let node = if slot < m_s { slot } else { slot - m_s };
        let alpha = real.alpha_dest[node];
        if cw.silent_slots[slot] || alpha == 0.0 {
            continue;
        }
        let bits = &cw.bits[cols.clone()];
        let vals = match cfg.destination {
            DestinationModel::Rayleigh => observe(bits, alpha, cfg.gamma, rng),
            DestinationModel::Bec(_) => perfect(bits),
        };
        out[cols.clone()].copy_from_slice(&vals);
    }
    out
}

/// Known/erased mask when the given nodes' links to the destination are
/// erased and all others are perfect.
pub fn bec_transmit(code: &JnccCode, erased_nodes: &[usize]) -> Vec<bool> {
    let mut known = vec![true; code.len()];
    for &node in erased_nodes {
        for s in code.node_slots(node) {
            for c in code.slot_columns[s].clone() {
                known[c] = false;
            }
        }
    }
    known
}

/// Converts `E_b/N_0` in dB to the per-symbol SNR `gamma` at spectral
/// efficiency `rate`.
pub fn ebn0_db_to_gamma(ebn0_db: f64, rate: f64) -> f64 {
    rate * db_to_linear(ebn0_db)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` at SNR point `point`, independent of execution
/// order.
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ trial.rotate_left(17))
}

pub fn trial_rng(master: u64, point: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, point, trial))
}
