//! Experiment specs, Monte Carlo sweeps and CSV output.
//!
//! Specs are flat `key = value` files. `include = <path>` pulls in another
//! file (relative to the including file) at that point; later keys override
//! earlier ones.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{decoded_mi_table, outage_sweep, MiTable, OutageConfig, OutagePoint, TABLE_POINTS_PER_DECADE};
use crate::channel::{
    apply_full_bp_relay_rule, draw_realization, ebn0_db_to_gamma, transmit, trial_rng, ChannelConfig,
    DestinationModel, InteruserModel, RelayDecodeRule,
};
use crate::codes::{assemble, build_p2p_code, DegreeDistributions, JnccCode, PointToPointCode, Variant};
use crate::decoder::{bp_decode_with, layered_decode, BpConfig, BpDecoder};
use crate::diversity::{verify_bec_diversity, DiversityReport, ErasureDecoder};
use crate::error::{JnccError, Result};
use crate::stats::wilson95;
use crate::topology::{algorithm1_transmission_sets, random_transmission_sets, NetworkTopology};

#[derive(Clone, Debug, PartialEq)]
pub enum SetConstruction {
    Algorithm1,
    Random { n: usize, seed: u64 },
    Explicit(NetworkTopology),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    Bp,
    Layered,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub m_s: usize,
    pub m_r: usize,
    pub sets: SetConstruction,
    pub variant: Variant,
    pub l: usize,
    pub k: usize,
    pub dd: DegreeDistributions,
    pub code_seed: u64,
    pub interuser: InteruserModel,
    pub destination: DestinationModel,
    pub relay_rule: RelayDecodeRule,
    pub reciprocal: bool,
    pub decoder: DecoderKind,
    pub bp: BpConfig,
    pub ebn0_db: Vec<f64>,
    /// Spectral efficiency for the `E_b/N_0` axis; defaults to the overall
    /// code rate.
    pub rate: Option<f64>,
    pub min_errors: u64,
    pub max_trials: u64,
    pub master_seed: u64,
    /// Point-to-point rate for the bounds; defaults to `K / L`.
    pub r_cp: Option<f64>,
    pub outage_trials: u64,
    pub table_codewords: usize,
    /// Resolved key/value pairs, used for the spec hash.
    pub resolved: BTreeMap<String, String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "unnamed".into(),
            m_s: 5,
            m_r: 5,
            sets: SetConstruction::Algorithm1,
            variant: Variant::Smarc,
            l: 707,
            k: 606,
            dd: DegreeDistributions::irregular_rate_6_7(),
            code_seed: 1,
            interuser: InteruserModel::Perfect,
            destination: DestinationModel::Rayleigh,
            relay_rule: RelayDecodeRule::Threshold(crate::channel::DEFAULT_RELAY_THRESHOLD_DB),
            reciprocal: false,
            decoder: DecoderKind::Bp,
            bp: BpConfig::default(),
            ebn0_db: Vec::new(),
            rate: None,
            min_errors: 100,
            max_trials: 100_000,
            master_seed: 1,
            r_cp: None,
            outage_trials: 1_000_000,
            table_codewords: 100,
            resolved: BTreeMap::new(),
        }
    }
}

/// Reads `key = value` lines, following includes.
pub fn read_spec_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    collect_pairs(path, &mut out, 0)?;
    Ok(out)
}

fn collect_pairs(path: &Path, out: &mut BTreeMap<String, String>, depth: usize) -> Result<()> {
    if depth > 16 {
        return Err(JnccError::Config(format!("include nesting too deep at {}", path.display())));
    }
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(JnccError::Parse {
            line: i + 1,
            msg: format!("expected `key = value` in {}", path.display()),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k == "include" {
            collect_pairs(&base.join(v), out, depth + 1)?;
        } else {
            out.insert(k.to_string(), v.to_string());
        }
    }
    Ok(())
}

/// Parses `a,b,c` or `start:step:stop` (inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || JnccError::Config(format!("bad SNR grid `{s}`"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn parse_degree_map(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .map(|item| {
            let (d, f) = item
                .split_once(':')
                .ok_or_else(|| JnccError::Config(format!("bad degree entry `{item}`")))?;
            let d = d.trim().parse().map_err(|_| JnccError::Config(format!("bad degree `{d}`")))?;
            let f = f.trim().parse().map_err(|_| JnccError::Config(format!("bad fraction `{f}`")))?;
            Ok((d, f))
        })
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| JnccError::Config(format!("bad value `{v}` for `{key}`")))
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let pairs = read_spec_pairs(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_pairs(pairs, base)
    }

    /// Builds a spec from resolved pairs. `base` resolves topology file
    /// paths.
    pub fn from_pairs(pairs: BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let mut s = ExperimentSpec::default();
        let mut sets = "algorithm1".to_string();
        let mut set_n = 2usize;
        let mut set_seed = 0u64;
        let mut topology_file: Option<String> = None;
        let mut permissive = false;
        let mut lambda: Option<String> = None;
        let mut rho: Option<String> = None;
        for (k, v) in &pairs {
            let v = v.as_str();
            match k.as_str() {
                "name" => s.name = v.to_string(),
                "m_s" => s.m_s = num(k, v)?,
                "m_r" => s.m_r = num(k, v)?,
                "sets" => sets = v.to_string(),
                "n" => set_n = num(k, v)?,
                "topology_seed" => set_seed = num(k, v)?,
                "topology_file" => topology_file = Some(v.to_string()),
                "permissive" => permissive = num(k, v)?,
                "variant" => s.variant = v.parse()?,
                "L" | "l" => s.l = num(k, v)?,
                "K" | "k" => s.k = num(k, v)?,
                "dd" => {
                    s.dd = match v {
                        "rate-6-7" => DegreeDistributions::irregular_rate_6_7(),
                        _ => {
                            let inner = v
                                .strip_prefix("regular(")
                                .and_then(|r| r.strip_suffix(')'))
                                .ok_or_else(|| JnccError::Config(format!("unknown dd `{v}`")))?;
                            let (a, b) = inner
                                .split_once(',')
                                .ok_or_else(|| JnccError::Config(format!("unknown dd `{v}`")))?;
                            DegreeDistributions::regular(num(k, a.trim())?, num(k, b.trim())?)
                        }
                    }
                }
                "lambda" => lambda = Some(v.to_string()),
                "rho" => rho = Some(v.to_string()),
                "code_seed" => s.code_seed = num(k, v)?,
                "interuser" => s.interuser = v.parse()?,
                "destination" => s.destination = v.parse()?,
                "relay_rule" => s.relay_rule = v.parse()?,
                "reciprocal" => s.reciprocal = num(k, v)?,
                "decoder" => {
                    s.decoder = match v {
                        "bp" => DecoderKind::Bp,
                        "layered" => DecoderKind::Layered,
                        _ => return Err(JnccError::Config(format!("unknown decoder `{v}`"))),
                    }
                }
                "max_iterations" => s.bp.max_iterations = num(k, v)?,
                "min_sum" => s.bp.min_sum = num(k, v)?,
                "llr_clamp" => s.bp.llr_clamp = num(k, v)?,
                "ebn0_db" => s.ebn0_db = parse_grid(v)?,
                "rate" => s.rate = Some(num(k, v)?),
                "min_errors" => s.min_errors = num(k, v)?,
                "max_trials" => s.max_trials = num(k, v)?,
                "master_seed" | "seed" => s.master_seed = num(k, v)?,
                "r_cp" => s.r_cp = Some(num(k, v)?),
                "outage_trials" => s.outage_trials = num(k, v)?,
                "table_codewords" => s.table_codewords = num(k, v)?,
                _ => return Err(JnccError::Config(format!("unknown key `{k}`"))),
            }
        }
        if lambda.is_some() || rho.is_some() {
            let (Some(l), Some(r)) = (lambda, rho) else {
                return Err(JnccError::Config("`lambda` and `rho` must be given together".into()));
            };
            s.dd = DegreeDistributions::new(parse_degree_map(&l)?, parse_degree_map(&r)?)?;
        }
        s.sets = match sets.as_str() {
            "algorithm1" => SetConstruction::Algorithm1,
            "random" => SetConstruction::Random { n: set_n, seed: set_seed },
            "explicit" => {
                let file = topology_file
                    .ok_or_else(|| JnccError::Config("`sets = explicit` needs `topology_file`".into()))?;
                let text = std::fs::read_to_string(base.join(file))?;
                SetConstruction::Explicit(NetworkTopology::from_text(&text, permissive)?)
            }
            _ => return Err(JnccError::Config(format!("unknown set construction `{sets}`"))),
        };
        s.resolved = pairs;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_trials == 0 {
            return Err(JnccError::Config("max_trials must be positive".into()));
        }
        if self.bp.max_iterations == 0 || !(self.bp.llr_clamp > 0.0) {
            return Err(JnccError::Config("BP needs at least one iteration and a positive clamp".into()));
        }
        if self.decoder == DecoderKind::Layered && !self.variant.uses_identity_blocks() {
            return Err(JnccError::Config("layered decoding needs an identity variant".into()));
        }
        if self.relay_rule == RelayDecodeRule::FullBp && self.variant.is_glnc_only() {
            return Err(JnccError::Config("full-BP relay rule needs a point-to-point code".into()));
        }
        Ok(())
    }

    /// SHA-256 of the resolved key/value pairs, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.resolved {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        let mut t = match &self.sets {
            SetConstruction::Algorithm1 => algorithm1_transmission_sets(self.m_s, self.m_r)?,
            SetConstruction::Random { n, seed } => random_transmission_sets(self.m_s, self.m_r, *n, *seed)?,
            SetConstruction::Explicit(t) => t.clone(),
        };
        t.interuser_reciprocal = self.reciprocal;
        Ok(t)
    }

    pub fn p2p_code(&self) -> Result<PointToPointCode> {
        build_p2p_code(&self.dd, self.l, self.k, self.code_seed)
    }

    pub fn build_code(&self) -> Result<JnccCode> {
        let t = self.topology()?;
        if self.variant.is_glnc_only() {
            if self.l != self.k {
                return Err(JnccError::Config("network-layer-only variants need K = L".into()));
            }
            return assemble(self.variant, &t, None, self.k, self.code_seed);
        }
        let p2p = self.p2p_code()?;
        assemble(self.variant, &t, Some(&p2p), self.k, self.code_seed)
    }

    pub fn channel(&self, gamma: f64) -> ChannelConfig {
        ChannelConfig {
            gamma,
            interuser: self.interuser,
            destination: self.destination,
            relay_rule: self.relay_rule,
            reciprocal: self.reciprocal,
        }
    }

    pub fn r_cp(&self) -> f64 {
        self.r_cp.unwrap_or(self.k as f64 / self.l as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WerPoint {
    pub ebn0_db: f64,
    pub snr_db: f64,
    pub trials: u64,
    pub word_errors: u64,
    pub per_source_errors: Vec<u64>,
    pub iterations: u64,
    /// Stopped by the trial cap before reaching the error target.
    pub hit_max_trials: bool,
}

impl WerPoint {
    pub fn wer(&self) -> f64 {
        self.word_errors as f64 / self.trials as f64
    }

    pub fn mean_iters(&self) -> f64 {
        self.iterations as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub name: String,
    pub spec_hash: String,
    pub rate: f64,
    pub points: Vec<WerPoint>,
}

pub const WER_CSV_HEADER: &str = "eb_n0_db,snr_db,trials,word_errors,wer,ci_low,ci_high,mean_iters";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# name={}\n# spec_sha256={}\n{WER_CSV_HEADER}\n", self.name, self.spec_hash);
        for p in &self.points {
            let (lo, hi) = wilson95(p.word_errors, p.trials);
            let _ = writeln!(
                s,
                "{},{:.4},{},{},{:.6e},{:.6e},{:.6e},{:.3}",
                p.ebn0_db,
                p.snr_db,
                p.trials,
                p.word_errors,
                p.wer(),
                lo,
                hi,
                p.mean_iters()
            );
        }
        s
    }

    /// `(eb_n0_db, wer)` pairs.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.ebn0_db, p.wer())).collect()
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    trials: u64,
    errors: u64,
    per_source: Vec<u64>,
    iterations: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.errors += o.errors;
        self.iterations += o.iterations;
        if self.per_source.len() < o.per_source.len() {
            self.per_source.resize(o.per_source.len(), 0);
        }
        for (a, b) in self.per_source.iter_mut().zip(o.per_source) {
            *a += b;
        }
        self
    }
}

const BATCH: u64 = 16;
const ROUND_BATCHES: u64 = 16;

/// One simulated network use. Returns `(word error, per-source errors,
/// iterations)`.
fn run_trial(
    spec: &ExperimentSpec,
    code: &JnccCode,
    chan: &ChannelConfig,
    dec: &mut BpDecoder,
    point: u64,
    trial: u64,
) -> (bool, Vec<bool>, usize) {
    let mut rng = trial_rng(spec.master_seed, point, trial);
    let info: Vec<Vec<u8>> = (0..code.m_s())
        .map(|_| (0..code.k).map(|_| rng.random_range(0..2u8)).collect())
        .collect();
    let t = &code.topology;
    let mut real = draw_realization(chan, t, &mut rng);
    if chan.relay_rule == RelayDecodeRule::FullBp {
        let p2p = code.p2p.as_ref().expect("validated: full-BP rule has a slot code");
        let words: Vec<Vec<u8>> = info.iter().map(|b| p2p.encode(b)).collect();
        apply_full_bp_relay_rule(&mut real, chan, t, p2p, &words, &spec.bp, &mut rng);
    }
    let cw = code.encode(&info, &real.silent_relays).expect("dimensions fixed by the code");
    assert!(code.h.syndrome_is_zero(&cw.bits), "encoder produced a non-codeword");
    let llr = transmit(code, &cw, &real, chan, &mut rng);
    let mut res = match spec.decoder {
        DecoderKind::Bp => bp_decode_with(dec, code, &llr, &spec.bp),
        DecoderKind::Layered => layered_decode(code, &llr, &spec.bp),
    };
    res.check(&info);
    (res.word_error, res.per_source_error, res.iterations_used)
}

/// Word error rate sweep. Trials run in fixed batches and rounds so the stop
/// decision, and therefore the output, does not depend on the thread count.
pub fn run_wer_sweep(spec: &ExperimentSpec, code: &JnccCode) -> Result<SweepResult> {
    if spec.ebn0_db.is_empty() {
        return Err(JnccError::Config("empty SNR grid".into()));
    }
    let rate = spec.rate.unwrap_or_else(|| code.rate());
    let m_s = code.m_s();
    let mut points = Vec::with_capacity(spec.ebn0_db.len());
    for (pi, &db) in spec.ebn0_db.iter().enumerate() {
        let gamma = ebn0_db_to_gamma(db, rate);
        let chan = spec.channel(gamma);
        chan.validate()?;
        let mut total = Tally {
            per_source: vec![0; m_s],
            ..Tally::default()
        };
        let mut next_batch = 0u64;
        while total.errors < spec.min_errors && total.trials < spec.max_trials {
            let round: Vec<u64> = (next_batch..next_batch + ROUND_BATCHES)
                .take_while(|&b| b * BATCH < spec.max_trials)
                .collect();
            next_batch += ROUND_BATCHES;
            let tally = round
                .par_iter()
                .map_init(
                    || BpDecoder::new(&code.h),
                    |dec, &b| {
                        let mut t = Tally {
                            per_source: vec![0; m_s],
                            ..Tally::default()
                        };
                        let end = ((b + 1) * BATCH).min(spec.max_trials);
                        for trial in b * BATCH..end {
                            let (err, per, it) = run_trial(spec, code, &chan, dec, pi as u64, trial);
                            t.trials += 1;
                            t.errors += err as u64;
                            t.iterations += it as u64;
                            for (a, e) in t.per_source.iter_mut().zip(per) {
                                *a += e as u64;
                            }
                        }
                        t
                    },
                )
                .reduce(Tally::default, Tally::merge);
            total = total.merge(tally);
        }
        points.push(WerPoint {
            ebn0_db: db,
            snr_db: 10.0 * gamma.log10(),
            trials: total.trials,
            word_errors: total.errors,
            per_source_errors: total.per_source,
            iterations: total.iterations,
            hit_max_trials: total.errors < spec.min_errors,
        });
    }
    Ok(SweepResult {
        name: spec.name.clone(),
        spec_hash: spec.hash(),
        rate,
        points,
    })
}

/// Outage sweep with the spec's topology and rates. The decoded-information
/// table (and with it the tightened bound) is built when `tightened` is set.
pub fn run_bound_sweep(spec: &ExperimentSpec, tightened: bool) -> Result<Vec<OutagePoint>> {
    let t = spec.topology()?;
    let r_cp = spec.r_cp();
    let rate = spec
        .rate
        .unwrap_or(r_cp * t.m_s() as f64 / (t.m_s() + t.m_r()) as f64);
    let cfg = OutageConfig {
        topology: t,
        r_cp,
        interuser: spec.interuser,
        rate,
        ebn0_db: spec.ebn0_db.clone(),
        trials: spec.outage_trials,
        seed: spec.master_seed,
    };
    cfg.validate()?;
    let raw = MiTable::bpsk();
    let decoded = if tightened {
        let p2p = spec.p2p_code()?;
        Some(decoded_mi_table(&p2p, -2.0, 2.0, TABLE_POINTS_PER_DECADE, spec.table_codewords, spec.master_seed))
    } else {
        None
    };
    outage_sweep(&cfg, &raw, decoded.as_ref())
}

/// Raw and (if a slot code is available) decoded information tables as CSV.
pub fn run_llr_table(spec: &ExperimentSpec) -> Result<String> {
    let raw = MiTable::bpsk();
    let decoded = if spec.variant.is_glnc_only() {
        None
    } else {
        let p2p = spec.p2p_code()?;
        Some(decoded_mi_table(&p2p, -2.0, 2.0, TABLE_POINTS_PER_DECADE, spec.table_codewords, spec.master_seed))
    };
    let mut s = format!("# name={}\n# spec_sha256={}\nalpha2gamma,mi_raw,mi_decoded\n", spec.name, spec.hash());
    let grid = match &decoded {
        Some(d) => d.grid_points(),
        None => raw.grid_points(),
    };
    for x in grid {
        let dv = decoded.as_ref().map_or(String::new(), |d| format!("{:.6}", d.lookup(x)));
        let _ = writeln!(s, "{x:.6e},{:.6},{dv}", raw.lookup(x));
    }
    Ok(s)
}

/// Diversity report for the spec's topology; with `verify_up_to` the code is
/// built and its erasure diversity measured.
pub fn run_analyze(spec: &ExperimentSpec, verify_up_to: Option<usize>) -> Result<DiversityReport> {
    let t = spec.topology()?;
    let mut report = DiversityReport::for_topology(&t);
    if let Some(max_e) = verify_up_to {
        let code = spec.build_code()?;
        report.measured_d_bec = Some(verify_bec_diversity(&code, max_e, ErasureDecoder::Peeling));
    }
    Ok(report)
}

/// CSV for all bound kinds present in the sweep, one block per kind.
pub fn bounds_csv(spec: &ExperimentSpec, points: &[OutagePoint]) -> String {
    use crate::bounds::{outage_csv, BoundKind};
    let mut s = format!("# name={}\n# spec_sha256={}\n", spec.name, spec.hash());
    for kind in [BoundKind::Jncc, BoundKind::Layered, BoundKind::Tightened] {
        if points.iter().all(|p| p.events(kind).is_some()) {
            let _ = writeln!(s, "# bound={}", kind.name());
            s.push_str(&outage_csv(points, kind));
        }
    }
    s
}
