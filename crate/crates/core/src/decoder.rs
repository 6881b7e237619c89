//! Destination decoders: flooding sum-product on a parity-check matrix,
//! erasure peeling, and the layered baseline (per-slot decoding followed by a
//! packet-level network solve).
//!
//! Input observations use the channel convention (positive favours bit 1).

use crate::codes::JnccCode;
use crate::gf2::{BitVec, Gf2Matrix, SparseMatrix};
use crate::topology::coding_matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpConfig {
    pub max_iterations: usize,
    pub early_stop: bool,
    pub llr_clamp: f64,
    pub min_sum: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iterations: 200,
            early_stop: true,
            llr_clamp: 30.0,
            min_sum: false,
        }
    }
}

/// Flooding sum-product decoder with reusable message buffers.
#[derive(Clone, Debug)]
pub struct BpDecoder {
    n_vars: usize,
    chk_start: Vec<usize>,
    edge_var: Vec<u32>,
    var_start: Vec<usize>,
    var_edges: Vec<u32>,
    channel: Vec<f64>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    total: Vec<f64>,
    hard: Vec<u8>,
    scratch: Vec<f64>,
}

impl BpDecoder {
    pub fn new(h: &SparseMatrix) -> Self {
        let mut chk_start = Vec::with_capacity(h.rows() + 1);
        let mut edge_var = Vec::with_capacity(h.nnz());
        chk_start.push(0);
        for r in 0..h.rows() {
            edge_var.extend_from_slice(h.row(r));
            chk_start.push(edge_var.len());
        }
        let n = h.cols();
        let mut var_start = vec![0usize; n + 1];
        for &v in &edge_var {
            var_start[v as usize + 1] += 1;
        }
        for v in 0..n {
            var_start[v + 1] += var_start[v];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        let e = edge_var.len();
        BpDecoder {
            n_vars: n,
            chk_start,
            edge_var,
            var_start,
            var_edges,
            channel: vec![0.0; n],
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            total: vec![0.0; n],
            hard: vec![0; n],
            scratch: Vec::new(),
        }
    }

    fn syndrome_ok(&self) -> bool {
        (0..self.chk_start.len() - 1).all(|c| {
            self.edge_var[self.chk_start[c]..self.chk_start[c + 1]]
                .iter()
                .fold(0u8, |a, &v| a ^ self.hard[v as usize])
                == 0
        })
    }

    fn decide(&mut self) {
        for (h, &t) in self.hard.iter_mut().zip(&self.total) {
            *h = (t < 0.0) as u8;
        }
    }

    /// Runs BP and returns `(iterations used, syndrome satisfied)`.
    pub fn decode(&mut self, llr: &[f64], cfg: &BpConfig) -> (usize, bool) {
        assert_eq!(llr.len(), self.n_vars, "observation length mismatch");
        let clamp = cfg.llr_clamp;
        // Internally positive favours bit 0.
        for (c, &l) in self.channel.iter_mut().zip(llr) {
            *c = (-l).clamp(-clamp, clamp);
        }
        self.total.copy_from_slice(&self.channel);
        self.decide();
        if cfg.early_stop && self.syndrome_ok() {
            return (0, true);
        }
        for (e, m) in self.v2c.iter_mut().enumerate() {
            *m = self.channel[self.edge_var[e] as usize];
        }
        let mut ok = false;
        let mut iters = 0;
        for it in 1..=cfg.max_iterations.max(1) {
            iters = it;
            self.check_update(cfg);
            for v in 0..self.n_vars {
                let edges = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let sum: f64 = self.channel[v] + edges.iter().map(|&e| self.c2v[e as usize]).sum::<f64>();
                self.total[v] = sum;
                for &e in edges {
                    self.v2c[e as usize] = (sum - self.c2v[e as usize]).clamp(-clamp, clamp);
                }
            }
            self.decide();
            ok = self.syndrome_ok();
            if ok && cfg.early_stop {
                break;
            }
        }
        (iters, ok)
    }

    fn check_update(&mut self, cfg: &BpConfig) {
        let clamp = cfg.llr_clamp;
        for c in 0..self.chk_start.len() - 1 {
            let (a, b) = (self.chk_start[c], self.chk_start[c + 1]);
            let deg = b - a;
            if deg == 0 {
                continue;
            }
            if deg == 1 {
                self.c2v[a] = 0.0;
                continue;
            }
            if cfg.min_sum {
                let mut sign = 1.0;
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, a);
                for e in a..b {
                    let m = self.v2c[e];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let mag = m.abs();
                    if mag < min1 {
                        min2 = min1;
                        min1 = mag;
                        arg = e;
                    } else if mag < min2 {
                        min2 = mag;
                    }
                }
                for e in a..b {
                    let s = if self.v2c[e] < 0.0 { -sign } else { sign };
                    self.c2v[e] = s * if e == arg { min2 } else { min1 };
                }
                continue;
            }
            // Exact tanh rule with prefix/suffix products.
            self.scratch.clear();
            self.scratch.extend(self.v2c[a..b].iter().map(|&m| (0.5 * m).tanh()));
            let t = &self.scratch;
            let mut prefix = 1.0;
            for i in 0..deg {
                self.c2v[a + i] = prefix;
                prefix *= t[i];
            }
            let mut suffix = 1.0;
            for i in (0..deg).rev() {
                let p = (self.c2v[a + i] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                self.c2v[a + i] = (2.0 * p.atanh()).clamp(-clamp, clamp);
                suffix *= t[i];
            }
        }
    }

    /// Hard decisions after the last decode.
    pub fn hard_decision(&self) -> &[u8] {
        &self.hard
    }

    /// Posterior values after the last decode, channel convention
    /// (positive favours bit 1).
    pub fn posteriors(&self) -> Vec<f64> {
        self.total.iter().map(|&t| -t).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub info_bits: Vec<Vec<u8>>,
    pub word_error: bool,
    pub per_source_error: Vec<bool>,
    pub iterations_used: usize,
    pub syndrome_ok: bool,
}

impl DecodeResult {
    /// Marks sources whose decoded information differs from `truth` and
    /// recomputes `word_error` from the per-source flags.
    pub fn check(&mut self, truth: &[Vec<u8>]) {
        for (u, t) in truth.iter().enumerate() {
            if self.info_bits[u] != *t {
                self.per_source_error[u] = true;
            }
        }
        self.word_error = self.per_source_error.iter().any(|&e| e);
    }
}

fn extract_info(code: &JnccCode, bits: &[u8]) -> Vec<Vec<u8>> {
    (0..code.m_s()).map(|u| bits[code.info_columns(u)].to_vec()).collect()
}

/// BP on the full network code. Until [`DecodeResult::check`] is called,
/// `word_error` only reflects the parity checks.
pub fn bp_decode(code: &JnccCode, llr: &[f64], cfg: &BpConfig) -> DecodeResult {
    bp_decode_with(&mut BpDecoder::new(&code.h), code, llr, cfg)
}

/// Same as [`bp_decode`] with a caller-owned decoder built for `code.h`.
pub fn bp_decode_with(dec: &mut BpDecoder, code: &JnccCode, llr: &[f64], cfg: &BpConfig) -> DecodeResult {
    let (iters, ok) = dec.decode(llr, cfg);
    DecodeResult {
        info_bits: extract_info(code, dec.hard_decision()),
        word_error: !ok,
        per_source_error: vec![false; code.m_s()],
        iterations_used: iters,
        syndrome_ok: ok,
    }
}

/// Erasure peeling. `values` holds the bits at known positions (others are
/// ignored). A source is in error when any of its information bits remains
/// unresolved.
pub fn peel_decode(code: &JnccCode, known: &[bool], values: &[u8]) -> DecodeResult {
    let mut x = values.to_vec();
    let mut k = known.to_vec();
    let steps = code.h.peel_erasures(&mut x, &mut k);
    for (xi, &ki) in x.iter_mut().zip(&k) {
        if !ki {
            *xi = 0;
        }
    }
    let per_source_error: Vec<bool> = (0..code.m_s())
        .map(|u| code.info_columns(u).any(|c| !k[c]))
        .collect();
    DecodeResult {
        info_bits: extract_info(code, &x),
        word_error: per_source_error.iter().any(|&e| e),
        per_source_error,
        iterations_used: steps.len(),
        syndrome_ok: k.iter().all(|&b| b),
    }
}

/// Layered baseline: decode each slot on its own, treat slots that fail the
/// parity check (or carry no observation) as lost packets, then solve for
/// the source packets over the coding matrix. Requires identity blocks.
pub fn layered_decode(code: &JnccCode, llr: &[f64], cfg: &BpConfig) -> DecodeResult {
    assert!(
        code.variant.uses_identity_blocks(),
        "layered decoding needs an identity network layer"
    );
    let mut dec = code.p2p.as_ref().map(|p| BpDecoder::new(&p.h_sparse));
    let mut packets: Vec<Option<BitVec>> = Vec::with_capacity(code.n_slots());
    let mut iters = 0;
    for cols in &code.slot_columns {
        let obs = &llr[cols.clone()];
        if obs.iter().all(|&l| l == 0.0) {
            packets.push(None);
            continue;
        }
        match dec.as_mut() {
            Some(d) => {
                let (it, ok) = d.decode(obs, cfg);
                iters = iters.max(it);
                packets.push(ok.then(|| BitVec::from_bits(&d.hard_decision()[..code.k])));
            }
            None => {
                let bits: Vec<u8> = obs.iter().map(|&l| (l > 0.0) as u8).collect();
                packets.push(Some(BitVec::from_bits(&bits)));
            }
        }
    }
    let cm = coding_matrix(&code.topology);
    let rows: Vec<usize> = (0..packets.len()).filter(|&i| packets[i].is_some()).collect();
    let a: Gf2Matrix = cm.m.select_rows(&rows);
    let rhs: Vec<BitVec> = rows.iter().map(|&i| packets[i].clone().unwrap()).collect();
    let solved = crate::gf2::solve_packets(&a, &rhs);
    let per_source_error: Vec<bool> = solved.iter().map(Option::is_none).collect();
    let info_bits = solved
        .into_iter()
        .map(|p| p.map_or_else(|| vec![0u8; code.k], |b| b.to_bits()))
        .collect();
    DecodeResult {
        info_bits,
        word_error: per_source_error.iter().any(|&e| e),
        per_source_error,
        iterations_used: iters,
        syndrome_ok: rows.len() == code.n_slots(),
    }
}
