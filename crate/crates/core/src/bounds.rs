//! Outage-based lower bounds on the word error rate.
//!
//! Link mutual information is that of BPSK over a real AWGN channel with gain
//! `alpha`, as a function of `s = alpha^2 gamma`:
//! `I(s) = 1 - E[log2(1 + exp(-z))]` with `z ~ N(4s, 8s)`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{observe, trial_seed, InteruserModel};
use crate::codes::PointToPointCode;
use crate::decoder::{BpConfig, BpDecoder};
use crate::error::{JnccError, Result};
use crate::stats::wilson95;
use crate::topology::NetworkTopology;

/// `log2(1 + exp(-z))` without overflow.
pub fn softplus_neg_log2(z: f64) -> f64 {
    let v = if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    };
    v / std::f64::consts::LN_2
}

fn gauss_legendre_8() -> &'static ([f64; 8], [f64; 8]) {
    static GL: OnceLock<([f64; 8], [f64; 8])> = OnceLock::new();
    GL.get_or_init(|| {
        (
            [
                -0.960_289_856_497_536_2,
                -0.796_666_477_413_626_7,
                -0.525_532_409_916_329,
                -0.183_434_642_495_649_8,
                0.183_434_642_495_649_8,
                0.525_532_409_916_329,
                0.796_666_477_413_626_7,
                0.960_289_856_497_536_2,
            ],
            [
                0.101_228_536_290_376_26,
                0.222_381_034_453_374_47,
                0.313_706_645_877_887_3,
                0.362_683_783_378_362,
                0.362_683_783_378_362,
                0.313_706_645_877_887_3,
                0.222_381_034_453_374_47,
                0.101_228_536_290_376_26,
            ],
        )
    })
}

/// Mutual information of a BPSK link at `s = alpha^2 gamma`, by composite
/// Gauss-Legendre quadrature of the Gaussian observation density over
/// `mean +- 12 sd`, panels no wider than one unit or one standard deviation.
pub fn bpsk_mi(s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let mean = 4.0 * s;
    let sd = (8.0 * s).sqrt();
    if mean - 12.0 * sd > 60.0 {
        return 1.0;
    }
    let (lo, hi) = (mean - 12.0 * sd, mean + 12.0 * sd);
    let width = sd.min(1.0);
    let panels = ((hi - lo) / width).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    let (nodes, weights) = gauss_legendre_8();
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            let z = a + 0.5 * h * (x + 1.0);
            let u = (z - mean) / sd;
            acc += w * 0.5 * h * norm * (-0.5 * u * u).exp() * softplus_neg_log2(z);
        }
    }
    (1.0 - acc).clamp(0.0, 1.0)
}

/// Mutual information as a function of `s = alpha^2 gamma`, tabulated on a
/// logarithmic grid and linearly interpolated in `log s`.
#[derive(Clone, Debug, Serialize)]
pub struct MiTable {
    pub log10_min: f64,
    pub points_per_decade: usize,
    pub values: Vec<f64>,
}

pub const TABLE_POINTS_PER_DECADE: usize = 60;

impl MiTable {
    /// Grid `s = 10^(log10_min + i / points_per_decade)`.
    pub fn grid(log10_min: f64, log10_max: f64, points_per_decade: usize) -> Vec<f64> {
        let n = ((log10_max - log10_min) * points_per_decade as f64).round() as usize + 1;
        (0..n)
            .map(|i| 10f64.powf(log10_min + i as f64 / points_per_decade as f64))
            .collect()
    }

    /// Tabulates `f` and forces the values to be nondecreasing.
    pub fn from_fn(log10_min: f64, log10_max: f64, points_per_decade: usize, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let grid = Self::grid(log10_min, log10_max, points_per_decade);
        let raw: Vec<f64> = grid.par_iter().map(|&s| f(s)).collect();
        Self::from_values(log10_min, points_per_decade, raw)
    }

    pub fn from_values(log10_min: f64, points_per_decade: usize, raw: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(raw.len());
        let mut run = 0.0f64;
        for v in raw {
            run = run.max(v.clamp(0.0, 1.0));
            values.push(run);
        }
        MiTable {
            log10_min,
            points_per_decade,
            values,
        }
    }

    /// Raw channel table over `1e-4 ..= 1e4`.
    pub fn bpsk() -> Self {
        Self::from_fn(-4.0, 4.0, TABLE_POINTS_PER_DECADE, bpsk_mi)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|i| 10f64.powf(self.log10_min + i as f64 / self.points_per_decade as f64))
            .collect()
    }

    pub fn lookup(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let pos = (s.log10() - self.log10_min) * self.points_per_decade as f64;
        if pos <= 0.0 {
            // Near zero the information grows linearly in s.
            let s0 = 10f64.powf(self.log10_min);
            return self.values[0] * (s / s0);
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Per-realization link information needed by the outage events.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkInfo {
    /// Information of each source slot at the destination.
    pub source: Vec<f64>,
    /// Information of each relay slot at the destination.
    pub relay: Vec<f64>,
    /// Whether every member of a relay's transmission set crossed the
    /// interuser rate.
    pub relay_active: Vec<bool>,
}

/// Conventional-style outage event with per-source rate `rate` (in bits per
/// channel use of one slot): sum clause `m_s rate >= total` or some source
/// with `rate >= own + carried`.
pub fn network_outage(t: &NetworkTopology, rate: f64, info: &LinkInfo) -> bool {
    let m_s = t.m_s();
    let relay_term = |j: usize| if info.relay_active[j] { info.relay[j] } else { 0.0 };
    let total: f64 = info.source.iter().sum::<f64>() + (0..t.m_r()).map(relay_term).sum::<f64>();
    if m_s as f64 * rate >= total {
        return true;
    }
    (0..m_s).any(|u| {
        let carried: f64 = (0..t.m_r())
            .filter(|&j| t.transmission_set(j).contains(&u))
            .map(relay_term)
            .sum();
        rate >= info.source[u] + carried
    })
}

/// Layered outage: more than `m_r` lost packets, or some source with no
/// surviving carrier.
pub fn layered_outage(t: &NetworkTopology, r_cp: f64, info: &LinkInfo) -> bool {
    let lost_src: Vec<bool> = info.source.iter().map(|&i| i < r_cp).collect();
    let lost_rel: Vec<bool> = (0..t.m_r())
        .map(|j| !(info.relay_active[j] && info.relay[j] > r_cp))
        .collect();
    let lost = lost_src.iter().chain(&lost_rel).filter(|&&l| l).count();
    if lost > t.m_r() {
        return true;
    }
    (0..t.m_s()).any(|u| {
        lost_src[u] && (0..t.m_r()).filter(|&j| t.transmission_set(j).contains(&u)).all(|j| lost_rel[j])
    })
}

#[derive(Clone, Debug)]
pub struct OutageConfig {
    pub topology: NetworkTopology,
    pub r_cp: f64,
    pub interuser: InteruserModel,
    /// Spectral efficiency used for the `E_b/N_0` axis.
    pub rate: f64,
    pub ebn0_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl OutageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ebn0_db.is_empty() {
            return Err(JnccError::Config("empty SNR grid".into()));
        }
        if !(self.r_cp > 0.0 && self.r_cp < 1.0) {
            return Err(JnccError::Config(format!("point-to-point rate {} outside (0, 1)", self.r_cp)));
        }
        if self.trials == 0 {
            return Err(JnccError::Config("need at least one trial".into()));
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.ebn0_db
            .iter()
            .map(|&db| crate::channel::ebn0_db_to_gamma(db, self.rate))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Jncc,
    Layered,
    Tightened,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Jncc => "jncc",
            BoundKind::Layered => "layered",
            BoundKind::Tightened => "tightened",
        }
    }
}

/// Event counts at one SNR point, all kinds evaluated on the same draws.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutagePoint {
    pub ebn0_db: f64,
    pub snr_db: f64,
    pub trials: u64,
    pub jncc: u64,
    pub layered: u64,
    pub tightened: Option<u64>,
    /// Draws where the network-coded event held but the layered one did not.
    pub dominance_violations: u64,
}

impl OutagePoint {
    pub fn events(&self, kind: BoundKind) -> Option<u64> {
        match kind {
            BoundKind::Jncc => Some(self.jncc),
            BoundKind::Layered => Some(self.layered),
            BoundKind::Tightened => self.tightened,
        }
    }

    pub fn p_out(&self, kind: BoundKind) -> Option<f64> {
        self.events(kind).map(|e| e as f64 / self.trials as f64)
    }
}

pub const OUTAGE_CSV_HEADER: &str = "eb_n0_db,snr_db,trials,outage_events,p_out,ci_low,ci_high";

/// CSV rows for one bound kind.
pub fn outage_csv(points: &[OutagePoint], kind: BoundKind) -> String {
    let mut s = String::from(OUTAGE_CSV_HEADER);
    s.push('\n');
    for p in points {
        if let Some(e) = p.events(kind) {
            let (lo, hi) = wilson95(e, p.trials);
            s.push_str(&format!(
                "{},{:.4},{},{},{:.6e},{:.6e},{:.6e}\n",
                p.ebn0_db,
                p.snr_db,
                p.trials,
                e,
                e as f64 / p.trials as f64,
                lo,
                hi
            ));
        }
    }
    s
}

/// `(snr_db, p_out)` pairs for one kind, for slope and gap fits.
pub fn curve(points: &[OutagePoint], kind: BoundKind) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter_map(|p| p.p_out(kind).map(|v| (p.ebn0_db, v)))
        .collect()
}

const CHUNK: u64 = 50_000;

/// Monte Carlo over fading draws. Every draw is evaluated at every SNR point
/// and for every bound kind, so the curves share randomness. The tightened
/// kind is evaluated when `decoded` is given.
pub fn outage_sweep(cfg: &OutageConfig, raw: &MiTable, decoded: Option<&MiTable>) -> Result<Vec<OutagePoint>> {
    cfg.validate()?;
    let t = &cfg.topology;
    let (m_s, m_r) = (t.m_s(), t.m_r());
    let gammas = cfg.gammas();
    let chunks = cfg.trials.div_ceil(CHUNK);
    let zero = || vec![[0u64; 4]; gammas.len()];
    let tallies = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, u64::MAX, chunk));
            let n = CHUNK.min(cfg.trials - chunk * CHUNK);
            let mut tally = zero();
            let mut dest = vec![0.0; m_r];
            let mut inter = vec![vec![0.0; m_s]; m_r];
            let mut info = LinkInfo {
                source: vec![0.0; m_s],
                relay: vec![0.0; m_r],
                relay_active: vec![true; m_r],
            };
            let mut info2 = info.clone();
            for _ in 0..n {
                for d in dest.iter_mut() {
                    *d = Exp1.sample(&mut rng);
                }
                match cfg.interuser {
                    InteruserModel::Rayleigh => {
                        for j in 0..m_r {
                            for &u in t.transmission_set(j) {
                                inter[j][u] = Exp1.sample(&mut rng);
                            }
                        }
                    }
                    InteruserModel::Bec(eps) => {
                        for j in 0..m_r {
                            for &u in t.transmission_set(j) {
                                inter[j][u] = if rng.random::<f64>() < eps { 0.0 } else { 1.0 };
                            }
                        }
                    }
                    _ => {}
                }
                for (g, &gamma) in gammas.iter().enumerate() {
                    for j in 0..m_r {
                        info.relay_active[j] = t.transmission_set(j).iter().all(|&u| {
                            u == j
                                || match cfg.interuser {
                                    InteruserModel::Perfect => true,
                                    InteruserModel::Gaussian => raw.lookup(gamma) > cfg.r_cp,
                                    InteruserModel::Rayleigh => raw.lookup(inter[j][u] * gamma) > cfg.r_cp,
                                    InteruserModel::Bec(_) => inter[j][u] > 0.0,
                                }
                        });
                        info.relay[j] = raw.lookup(dest[j] * gamma);
                    }
                    for u in 0..m_s {
                        info.source[u] = info.relay[u];
                    }
                    let jn = network_outage(t, cfg.r_cp, &info);
                    let la = layered_outage(t, cfg.r_cp, &info);
                    tally[g][0] += jn as u64;
                    tally[g][1] += la as u64;
                    tally[g][3] += (jn && !la) as u64;
                    if let Some(dec) = decoded {
                        for j in 0..m_r {
                            info2.relay[j] = dec.lookup(dest[j] * gamma);
                            info2.relay_active[j] = info.relay_active[j];
                        }
                        for u in 0..m_s {
                            info2.source[u] = info2.relay[u];
                        }
                        tally[g][2] += network_outage(t, 1.0, &info2) as u64;
                    }
                }
            }
            tally
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..4 {
                    x[k] += y[k];
                }
            }
            a
        });
    Ok(gammas
        .iter()
        .zip(&cfg.ebn0_db)
        .zip(tallies)
        .map(|((&gamma, &db), t)| OutagePoint {
            ebn0_db: db,
            snr_db: 10.0 * gamma.log10(),
            trials: cfg.trials,
            jncc: t[0],
            layered: t[1],
            tightened: decoded.map(|_| t[2]),
            dominance_violations: t[3],
        })
        .collect())
}

/// Samples of the decoder output value `L x'` (folded so the transmitted
/// symbol is always `+1`).
#[derive(Clone, Debug, Default)]
pub struct LlrDensity {
    pub samples: Vec<f64>,
}

impl LlrDensity {
    /// `E[exp(-L)]`, which equals one for a consistent density.
    pub fn consistency(&self) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.iter().map(|&l| (-l).exp()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Decoder settings used for density capture: a fixed number of iterations
/// so converged words reach the same confidence level.
pub fn capture_bp_config() -> BpConfig {
    BpConfig {
        max_iterations: 50,
        early_stop: false,
        llr_clamp: 30.0,
        min_sum: false,
    }
}

/// Runs BP on the point-to-point code for `codewords` random words sent with
/// gain `alpha` and records every bit's final posterior.
pub fn capture_llr_density(
    p2p: &PointToPointCode,
    alpha: f64,
    gamma: f64,
    codewords: usize,
    seed: u64,
    bp: &BpConfig,
) -> LlrDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dec = BpDecoder::new(&p2p.h_sparse);
    let mut samples = Vec::with_capacity(codewords * p2p.l);
    for _ in 0..codewords {
        let info: Vec<u8> = (0..p2p.k).map(|_| rng.random_range(0..2u8)).collect();
        let cw = p2p.encode(&info);
        if alpha == 0.0 {
            samples.extend(std::iter::repeat_n(0.0, p2p.l));
            continue;
        }
        let llr = observe(&cw, alpha, gamma, &mut rng);
        dec.decode(&llr, bp);
        for (l, &b) in dec.posteriors().into_iter().zip(&cw) {
            samples.push(if b == 1 { l } else { -l });
        }
    }
    LlrDensity { samples }
}

/// `1 - mean log2(1 + exp(-L))`, clamped to `[0, 1]`.
pub fn mi_from_density(d: &LlrDensity) -> f64 {
    if d.samples.is_empty() {
        return 0.0;
    }
    let mean = d.samples.iter().map(|&l| softplus_neg_log2(l)).sum::<f64>() / d.samples.len() as f64;
    (1.0 - mean).clamp(0.0, 1.0)
}

/// Information after point-to-point decoding, tabulated over `s = alpha^2
/// gamma` with `gamma = 1`.
pub fn decoded_mi_table(
    p2p: &PointToPointCode,
    log10_min: f64,
    log10_max: f64,
    points_per_decade: usize,
    codewords: usize,
    seed: u64,
) -> MiTable {
    let bp = capture_bp_config();
    let grid = MiTable::grid(log10_min, log10_max, points_per_decade);
    let raw: Vec<f64> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let d = capture_llr_density(p2p, s.sqrt(), 1.0, codewords, trial_seed(seed, 1, i as u64), &bp);
            mi_from_density(&d)
        })
        .collect();
    MiTable::from_values(log10_min, points_per_decade, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::algorithm1_transmission_sets;

    #[test]
    fn mi_limits() {
        assert_eq!(bpsk_mi(0.0), 0.0);
        assert!(bpsk_mi(1e4) > 1.0 - 1e-12);
        assert!(bpsk_mi(1e-6) < 1e-5);
    }

    #[test]
    fn mi_monotone_on_grid() {
        let grid = MiTable::grid(-3.0, 3.0, 20);
        let vals: Vec<f64> = grid.iter().map(|&s| bpsk_mi(s)).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
            assert!((0.0..=1.0).contains(&w[0]));
        }
    }

    #[test]
    fn table_interpolates() {
        let t = MiTable::from_fn(-2.0, 2.0, 60, bpsk_mi);
        for s in [0.013, 0.5, 1.7, 33.0] {
            assert!((t.lookup(s) - bpsk_mi(s)).abs() < 2e-3, "{s}");
        }
        assert_eq!(t.lookup(0.0), 0.0);
        assert!(t.lookup(1e6) > 0.999);
    }

    #[test]
    fn erasure_degenerate_outage() {
        // Links fully on or off with perfect relays: outage iff more than m_r
        // slots are lost, or a source loses every carrier.
        let t = algorithm1_transmission_sets(5, 5).unwrap();
        let r_cp = 6.0 / 7.0;
        for mask in 0u32..32 {
            let on: Vec<bool> = (0..5).map(|i| mask & (1 << i) != 0).collect();
            let i: Vec<f64> = on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let info = LinkInfo {
                source: i.clone(),
                relay: i.clone(),
                relay_active: vec![true; 5],
            };
            let erased = on.iter().filter(|&&b| !b).count();
            let uncovered = (0..5).any(|u| !on[u] && t.carriers(u).iter().all(|&j| !on[j]));
            let expected = 2 * erased > 5 || uncovered;
            assert_eq!(network_outage(&t, r_cp, &info), expected, "{on:?}");
        }
    }

    #[test]
    fn zero_gain_density() {
        use crate::codes::{build_p2p_code, DegreeDistributions};
        let p2p = build_p2p_code(&DegreeDistributions::regular(3, 6), 40, 20, 1).unwrap();
        let d = capture_llr_density(&p2p, 0.0, 1.0, 3, 0, &capture_bp_config());
        assert_eq!(mi_from_density(&d), 0.0);
        let d = LlrDensity { samples: vec![f64::INFINITY; 4] };
        assert_eq!(mi_from_density(&d), 1.0);
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = OutageConfig {
            topology: algorithm1_transmission_sets(3, 3).unwrap(),
            r_cp: 0.5,
            interuser: InteruserModel::Perfect,
            rate: 0.25,
            ebn0_db: vec![],
            trials: 10,
            seed: 0,
        };
        assert!(outage_sweep(&cfg, &MiTable::from_fn(-1.0, 1.0, 4, bpsk_mi), None).is_err());
    }
}
