//! Parity-check matrix construction: the point-to-point LDPC code used inside
//! every slot, the network-coding (GLNC) layer binding relay slots to source
//! slots, and the overall stacked matrix.
//!
//! Slot layout of an overall codeword is `[s_1 .. s_ms, r_1 .. r_mr]`, each
//! slot `L` bits. Within a slot the first `K` bits are information bits and
//! the last `L - K` are parity bits.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{JnccError, Result};
use crate::gf2::{BitVec, Gf2Matrix, SparseMatrix};
use crate::topology::NetworkTopology;

const DD_TOLERANCE: f64 = 1e-3 + 1e-9;
const CONSTRUCTION_RETRIES: u64 = 20;

/// Edge-perspective degree distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistributions {
    pub lambda: BTreeMap<usize, f64>,
    pub rho: BTreeMap<usize, f64>,
}

impl DegreeDistributions {
    /// Validates and renormalizes. Each map must sum to one within 1e-3.
    pub fn new(
        lambda: impl IntoIterator<Item = (usize, f64)>,
        rho: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let lambda = normalize("lambda", lambda.into_iter().collect())?;
        let rho = normalize("rho", rho.into_iter().collect())?;
        Ok(DegreeDistributions { lambda, rho })
    }

    /// The rate-6/7 irregular ensemble used for the network simulations.
    pub fn irregular_rate_6_7() -> Self {
        Self::new(
            [(2, 0.173), (3, 0.223), (4, 0.095), (5, 0.51)],
            [(24, 0.96), (25, 0.04)],
        )
        .expect("built-in distribution is valid")
    }

    pub fn regular(var_degree: usize, check_degree: usize) -> Self {
        Self::new([(var_degree, 1.0)], [(check_degree, 1.0)]).expect("regular distribution")
    }

    /// `1 - (sum rho_d / d) / (sum lambda_d / d)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - inverse_mean(&self.rho) / inverse_mean(&self.lambda)
    }
}

fn inverse_mean(map: &BTreeMap<usize, f64>) -> f64 {
    map.iter().map(|(&d, &f)| f / d as f64).sum()
}

fn normalize(name: &str, map: BTreeMap<usize, f64>) -> Result<BTreeMap<usize, f64>> {
    if map.is_empty() {
        return Err(JnccError::Config(format!("{name} is empty")));
    }
    if map.iter().any(|(&d, &f)| d == 0 || !(f >= 0.0) || !f.is_finite()) {
        return Err(JnccError::Config(format!("{name} has a zero degree or invalid fraction")));
    }
    let total: f64 = map.values().sum();
    if (total - 1.0).abs() > DD_TOLERANCE {
        return Err(JnccError::Config(format!("{name} sums to {total}, expected 1")));
    }
    Ok(map
        .into_iter()
        .filter(|&(_, f)| f > 0.0)
        .map(|(d, f)| (d, f / total))
        .collect())
}

/// Integer node counts realizing a degree distribution pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeRealization {
    /// `(degree, node count)` for variable nodes.
    pub variable_counts: Vec<(usize, usize)>,
    /// `(degree, node count)` for check nodes.
    pub check_counts: Vec<(usize, usize)>,
    pub edges: usize,
}

impl DegreeRealization {
    /// Largest absolute deviation between realized and target edge fractions
    /// over both sides.
    pub fn max_deviation(&self, dd: &DegreeDistributions) -> f64 {
        let side = |counts: &[(usize, usize)], target: &BTreeMap<usize, f64>| {
            counts
                .iter()
                .map(|&(d, n)| (d * n) as f64 / self.edges as f64 - target.get(&d).copied().unwrap_or(0.0))
                .fold(0.0f64, |a, x| a.max(x.abs()))
        };
        side(&self.variable_counts, &dd.lambda).max(side(&self.check_counts, &dd.rho))
    }
}

/// Chooses node counts for `n_vars` variable nodes and `n_checks` check nodes
/// with matching edge totals, minimizing the worst edge-fraction deviation.
pub fn realize_degrees(dd: &DegreeDistributions, n_vars: usize, n_checks: usize) -> Result<DegreeRealization> {
    let check_degrees: Vec<usize> = dd.rho.keys().copied().collect();
    let base_checks = round_node_counts(&dd.rho, n_checks);
    let mut check_candidates = vec![base_checks.clone()];
    for a in 0..check_degrees.len() {
        for b in 0..check_degrees.len() {
            if a == b {
                continue;
            }
            for shift in 1..=6 {
                if base_checks[a] >= shift {
                    let mut c = base_checks.clone();
                    c[a] -= shift;
                    c[b] += shift;
                    check_candidates.push(c);
                }
            }
        }
    }
    let var_degrees: Vec<usize> = dd.lambda.keys().copied().collect();
    let mut best: Option<(f64, DegreeRealization)> = None;
    for checks in check_candidates {
        let edges: usize = checks.iter().zip(&check_degrees).map(|(n, d)| n * d).sum();
        let Some(vars) = fit_variable_counts(&dd.lambda, &var_degrees, n_vars, edges) else {
            continue;
        };
        let real = DegreeRealization {
            variable_counts: var_degrees.iter().copied().zip(vars).collect(),
            check_counts: check_degrees.iter().copied().zip(checks.iter().copied()).collect(),
            edges,
        };
        let dev = real.max_deviation(dd);
        if best.as_ref().is_none_or(|(b, _)| dev < *b) {
            best = Some((dev, real));
        }
    }
    best.map(|(_, r)| r).ok_or_else(|| {
        JnccError::InfeasibleDegrees(format!(
            "no integer node counts for {n_vars} variables and {n_checks} checks"
        ))
    })
}

/// Largest-remainder rounding of node-perspective fractions.
fn round_node_counts(edge_fractions: &BTreeMap<usize, f64>, total: usize) -> Vec<usize> {
    let norm = inverse_mean(edge_fractions);
    let exact: Vec<f64> = edge_fractions
        .iter()
        .map(|(&d, &f)| f / d as f64 / norm * total as f64)
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    let mut missing = total - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    counts
}

/// Finds variable node counts summing to `n_vars` with exactly `edges` edges.
/// Classes other than the last two are searched in a window around their
/// targets; the last two are then determined by the two constraints.
fn fit_variable_counts(
    lambda: &BTreeMap<usize, f64>,
    degrees: &[usize],
    n_vars: usize,
    edges: usize,
) -> Option<Vec<usize>> {
    let targets: Vec<f64> = degrees
        .iter()
        .map(|d| lambda[d] * edges as f64 / *d as f64)
        .collect();
    let score = |counts: &[usize]| {
        counts
            .iter()
            .zip(degrees)
            .zip(lambda.values())
            .map(|((&n, &d), &l)| ((n * d) as f64 / edges as f64 - l).abs())
            .fold(0.0f64, f64::max)
    };
    if degrees.len() == 1 {
        return (n_vars * degrees[0] == edges).then(|| vec![n_vars]);
    }
    let free = degrees.len() - 2;
    let window: i64 = match free {
        0 => 0,
        1 => 40,
        2 => 15,
        3 => 6,
        _ => 3,
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut offsets = vec![-window; free];
    loop {
        let mut counts = vec![0usize; degrees.len()];
        let mut ok = true;
        for i in 0..free {
            let v = targets[i].round() as i64 + offsets[i];
            if v < 0 {
                ok = false;
                break;
            }
            counts[i] = v as usize;
        }
        if ok {
            let used_n: usize = counts[..free].iter().sum();
            let used_e: usize = counts[..free].iter().zip(degrees).map(|(n, d)| n * d).sum();
            if used_n <= n_vars && used_e <= edges {
                let (da, db) = (degrees[free], degrees[free + 1]);
                let rest_n = n_vars - used_n;
                let rest_e = edges - used_e;
                // n_a + n_b = rest_n, da n_a + db n_b = rest_e
                if rest_e >= da * rest_n {
                    let num = rest_e - da * rest_n;
                    if num % (db - da) == 0 && num / (db - da) <= rest_n {
                        counts[free + 1] = num / (db - da);
                        counts[free] = rest_n - counts[free + 1];
                        let s = score(&counts);
                        if best.as_ref().is_none_or(|(b, _)| s < *b) {
                            best = Some((s, counts));
                        }
                    }
                }
            }
        }
        // advance the odometer
        let mut i = 0;
        loop {
            if i == free {
                return best.map(|(_, c)| c);
            }
            offsets[i] += 1;
            if offsets[i] > window {
                offsets[i] = -window;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Progressive edge-growth placement. Variable nodes are processed in order of
/// increasing degree; each new edge goes to a check outside the current
/// neighbourhood tree (or at its deepest level) with spare capacity, lowest
/// current degree first, ties broken at random.
pub fn progressive_edge_growth(
    var_degrees: &[usize],
    check_degrees: &[usize],
    rng: &mut impl Rng,
) -> Option<SparseMatrix> {
    let n = var_degrees.len();
    let m = check_degrees.len();
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut chk_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| var_degrees[v]);
    let mut seen_chk = vec![usize::MAX; m];
    let mut seen_var = vec![usize::MAX; n];
    let mut stamp = 0usize;

    for &v in &order {
        for _ in 0..var_degrees[v] {
            let spare = |c: usize, chk_adj: &Vec<Vec<usize>>| chk_adj[c].len() < check_degrees[c];
            let mut candidates: Vec<usize>;
            if var_adj[v].is_empty() {
                candidates = (0..m).filter(|&c| spare(c, &chk_adj)).collect();
            } else {
                stamp += 1;
                seen_var[v] = stamp;
                let mut frontier: Vec<usize> = Vec::new();
                let mut reached = 0usize;
                for &c in &var_adj[v] {
                    if seen_chk[c] != stamp {
                        seen_chk[c] = stamp;
                        frontier.push(c);
                        reached += 1;
                    }
                }
                loop {
                    // Expand one level: checks -> variables -> checks.
                    let mut next = Vec::new();
                    for &c in &frontier {
                        for &u in &chk_adj[c] {
                            if seen_var[u] == stamp {
                                continue;
                            }
                            seen_var[u] = stamp;
                            for &c2 in &var_adj[u] {
                                if seen_chk[c2] != stamp {
                                    next.push(c2);
                                }
                            }
                        }
                    }
                    next.sort_unstable();
                    next.dedup();
                    let unreached_spare = (0..m)
                        .filter(|&c| seen_chk[c] != stamp && !next.contains(&c) && spare(c, &chk_adj))
                        .count();
                    if next.is_empty() || unreached_spare == 0 {
                        // Stop here: take spare checks not yet in the tree if
                        // any exist, else the deepest new level.
                        candidates = (0..m)
                            .filter(|&c| seen_chk[c] != stamp && spare(c, &chk_adj))
                            .collect();
                        if candidates.is_empty() {
                            candidates = next.into_iter().filter(|&c| spare(c, &chk_adj)).collect();
                        }
                        break;
                    }
                    for &c in &next {
                        seen_chk[c] = stamp;
                    }
                    reached += next.len();
                    frontier = next;
                }
                let _ = reached;
            }
            candidates.retain(|c| !var_adj[v].contains(c));
            if candidates.is_empty() {
                candidates = (0..m)
                    .filter(|&c| spare(c, &chk_adj) && !var_adj[v].contains(&c))
                    .collect();
            }
            let min_deg = candidates.iter().map(|&c| chk_adj[c].len()).min()?;
            let lowest: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| chk_adj[c].len() == min_deg)
                .collect();
            let c = lowest[rng.random_range(0..lowest.len())];
            var_adj[v].push(c);
            chk_adj[c].push(v);
        }
    }
    Some(SparseMatrix::from_entries(
        m,
        n,
        chk_adj
            .iter()
            .enumerate()
            .flat_map(|(c, vs)| vs.iter().map(move |&v| (c, v))),
    ))
}

/// Systematic LDPC code used inside each slot. Columns are ordered so that the
/// first `K` are information bits and the last `L - K` are parity bits.
#[derive(Clone, Debug)]
pub struct PointToPointCode {
    pub h_p: Gf2Matrix,
    pub h_sparse: SparseMatrix,
    pub l: usize,
    pub k: usize,
    /// Information column positions, always `0..K` after reordering.
    pub systematic_map: Vec<usize>,
    /// `(L - K) x K` map from information bits to parity bits.
    parity_map: Gf2Matrix,
}

impl PointToPointCode {
    /// Builds a code from an `(L - K) x L` matrix of full row rank by moving
    /// a set of pivot columns to the end.
    pub fn from_parity_check(h: &Gf2Matrix) -> Result<Self> {
        let (m, l) = (h.rows(), h.cols());
        let pivots = h.pivot_columns();
        if pivots.len() != m {
            return Err(JnccError::Construction(format!(
                "parity-check matrix has rank {} < {m}",
                pivots.len()
            )));
        }
        let mut is_pivot = vec![false; l];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let order: Vec<usize> = (0..l).filter(|&c| !is_pivot[c]).chain(pivots.iter().copied()).collect();
        let h_p = h.select_cols(&order);
        let k = l - m;
        let info_part = h_p.select_cols(&(0..k).collect::<Vec<_>>());
        let parity_part = h_p.select_cols(&(k..l).collect::<Vec<_>>());
        let inv = parity_part
            .inverse()
            .ok_or_else(|| JnccError::Construction("parity part not invertible".into()))?;
        let parity_map = inv.mul(&info_part);
        Ok(PointToPointCode {
            h_sparse: h_p.to_sparse(),
            h_p,
            l,
            k,
            systematic_map: (0..k).collect(),
            parity_map,
        })
    }

    /// Systematic codeword `[info | parity]`.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.k, "info length must equal K");
        let parity = self.parity_map.mul_vec(&BitVec::from_bits(info));
        let mut out = info.to_vec();
        out.extend(parity.to_bits());
        out
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.l as f64
    }
}

/// Builds the point-to-point code by progressive edge growth. Redraws with a
/// derived seed when the result is rank deficient.
pub fn build_p2p_code(dd: &DegreeDistributions, l: usize, k: usize, seed: u64) -> Result<PointToPointCode> {
    if k == 0 || k >= l {
        return Err(JnccError::Config(format!("need 0 < K < L (K = {k}, L = {l})")));
    }
    let requested = k as f64 / l as f64;
    let design = dd.design_rate();
    if (design - requested).abs() > 0.02 * requested.max(design) {
        return Err(JnccError::InfeasibleDegrees(format!(
            "design rate {design:.4} of the degree distributions differs from K/L = {requested:.4}"
        )));
    }
    let real = realize_degrees(dd, l, l - k)?;
    let var_degrees: Vec<usize> = real
        .variable_counts
        .iter()
        .flat_map(|&(d, n)| std::iter::repeat_n(d, n))
        .collect();
    let check_degrees: Vec<usize> = real
        .check_counts
        .iter()
        .flat_map(|&(d, n)| std::iter::repeat_n(d, n))
        .collect();
    if var_degrees.iter().any(|&d| d > l - k) {
        return Err(JnccError::InfeasibleDegrees("variable degree exceeds number of checks".into()));
    }
    let mut last_err = None;
    for attempt in 0..CONSTRUCTION_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut checks = check_degrees.clone();
        checks.shuffle(&mut rng);
        let Some(h) = progressive_edge_growth(&var_degrees, &checks, &mut rng) else {
            last_err = Some(JnccError::Construction("edge placement ran out of check capacity".into()));
            continue;
        };
        match PointToPointCode::from_parity_check(&h.to_dense()) {
            Ok(code) => return Ok(code),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| JnccError::Construction("no attempts".into())))
}

/// Which network-coding layer to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Triangular blocks with random sub-blocks in every information column.
    Smarc,
    /// Identity blocks: relay information equals the XOR of member sources.
    Identity,
    /// Identity blocks over a topology with unequal transmission set sizes.
    IdentityIrregular,
    /// Only the network-coding rows with triangular blocks (requires K = L).
    GlncOnly,
    /// Only the network-coding rows with identity blocks (requires K = L).
    GlncOnlyIdentity,
}

impl Variant {
    pub fn is_glnc_only(self) -> bool {
        matches!(self, Variant::GlncOnly | Variant::GlncOnlyIdentity)
    }

    pub fn uses_identity_blocks(self) -> bool {
        matches!(self, Variant::Identity | Variant::IdentityIrregular | Variant::GlncOnlyIdentity)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Smarc => "smarc",
            Variant::Identity => "identity",
            Variant::IdentityIrregular => "identity-irregular",
            Variant::GlncOnly => "glnc-only",
            Variant::GlncOnlyIdentity => "glnc-only-identity",
        })
    }
}

impl FromStr for Variant {
    type Err = JnccError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "smarc" => Variant::Smarc,
            "identity" => Variant::Identity,
            "identity-irregular" => Variant::IdentityIrregular,
            "glnc-only" => Variant::GlncOnly,
            "glnc-only-identity" => Variant::GlncOnlyIdentity,
            _ => return Err(JnccError::Config(format!("unknown variant `{s}`"))),
        })
    }
}

/// Shape of one triangular `K x K` information block, in terms of its four
/// `K/2 x K/2` quadrants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// `[I R; 0 I]`
    H1,
    /// `[R I; I 0]`
    H1Prime,
    /// `[0 I; I R]`
    H2,
    /// `[I 0; R I]`
    H2Prime,
}

impl BlockKind {
    /// Which information half (0 or 1) holds the random quadrant.
    pub fn random_half(self) -> usize {
        match self {
            BlockKind::H1 | BlockKind::H2 => 1,
            BlockKind::H1Prime | BlockKind::H2Prime => 0,
        }
    }

    fn second_with_random_half(half: usize) -> Self {
        if half == 1 {
            BlockKind::H2
        } else {
            BlockKind::H2Prime
        }
    }

    /// Quadrant layout: `None` is zero, `Some(false)` identity, `Some(true)`
    /// the random matrix.
    fn quadrants(self) -> [[Option<bool>; 2]; 2] {
        let (i, r, z) = (Some(false), Some(true), None);
        match self {
            BlockKind::H1 => [[i, r], [z, i]],
            BlockKind::H1Prime => [[r, i], [i, z]],
            BlockKind::H2 => [[z, i], [i, r]],
            BlockKind::H2Prime => [[i, z], [r, i]],
        }
    }
}

/// A `rows x cols` matrix with column weight `min(2, rows)` whose rows are as
/// balanced as possible.
pub fn random_balanced_weight2(rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let w = rows.min(2);
    if w == 0 {
        return Vec::new();
    }
    let mut slots: Vec<usize> = (0..w * cols).map(|i| i % rows).collect();
    slots.shuffle(rng);
    // Remove repeats inside a column by swapping with a random other slot.
    if w == 2 {
        for _ in 0..100 * cols.max(1) {
            let Some(c) = (0..cols).find(|&c| slots[2 * c] == slots[2 * c + 1]) else {
                break;
            };
            let j = rng.random_range(0..slots.len());
            let other = j / 2;
            if other != c {
                slots.swap(2 * c + 1, j);
                if slots[2 * other] == slots[2 * other + 1] || slots[2 * c] == slots[2 * c + 1] {
                    slots.swap(2 * c + 1, j);
                }
            }
        }
    }
    (0..cols)
        .flat_map(|c| slots[w * c..w * (c + 1)].iter().map(move |&r| (r, c)).collect::<Vec<_>>())
        .collect()
}

/// An invertible `k x k` matrix, every column of weight two except one,
/// tracing a random path through all rows.
pub fn random_path_matrix(k: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut rows: Vec<usize> = (0..k).collect();
    rows.shuffle(rng);
    let mut cols: Vec<usize> = (0..k).collect();
    cols.shuffle(rng);
    let mut out = Vec::with_capacity(2 * k);
    for t in 0..k {
        out.push((rows[t], cols[t]));
        if t + 1 < k {
            out.push((rows[t + 1], cols[t]));
        }
    }
    out
}

fn triangular_block(kind: BlockKind, k: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let h = k / 2;
    let random = random_balanced_weight2(h, h, rng);
    let mut out = Vec::new();
    for (qr, row) in kind.quadrants().iter().enumerate() {
        for (qc, q) in row.iter().enumerate() {
            match q {
                None => {}
                Some(false) => out.extend((0..h).map(|i| (qr * h + i, qc * h + i))),
                Some(true) => out.extend(random.iter().map(|&(r, c)| (qr * h + r, qc * h + c))),
            }
        }
    }
    out
}

/// The network-coding rows of one relay: `sum_j B_j s_j + A r = 0`, with
/// every block supported on information columns only.
#[derive(Clone, Debug)]
pub struct RelayEquations {
    pub relay: usize,
    /// `(source, kind, K x K entries)`; kind is `None` for identity blocks.
    pub source_blocks: Vec<(usize, Option<BlockKind>, SparseMatrix)>,
    pub relay_block: SparseMatrix,
    relay_inverse: Option<Gf2Matrix>,
}

impl RelayEquations {
    /// Relay information bits for the given source information blocks.
    pub fn relay_info(&self, source_info: &[Vec<u8>]) -> Vec<u8> {
        let k = self.relay_block.rows();
        let mut rhs = vec![0u8; k];
        for (u, _, block) in &self.source_blocks {
            for (acc, b) in rhs.iter_mut().zip(block.mul_bits(&source_info[*u])) {
                *acc ^= b;
            }
        }
        match &self.relay_inverse {
            None => rhs,
            Some(inv) => inv.mul_vec(&BitVec::from_bits(&rhs)).to_bits(),
        }
    }
}

/// Triangular-block network-coding layer. The first member of each relay's
/// transmission set gets an `H1`-type block and the second an `H2`-type block.
/// The `H1` type alternates between relays; each `H2` type is chosen so its
/// random quadrant lands in an information half of that source not yet
/// covered by a random quadrant.
pub fn build_smarc_glnc(t: &NetworkTopology, k: usize, seed: u64) -> Result<Vec<RelayEquations>> {
    if k % 2 != 0 || k == 0 {
        return Err(JnccError::Config(format!("K must be even and positive, got {k}")));
    }
    let m_r = t.m_r();
    for r in 0..m_r {
        if t.n(r) != 2 {
            return Err(JnccError::InvalidTopology(format!(
                "triangular blocks need exactly two sources per relay (relay {} has {})",
                r + 1,
                t.n(r)
            )));
        }
    }
    let members: Vec<Vec<usize>> = (0..m_r).map(|r| t.ordered_members(r)).collect();
    let firsts: Vec<BlockKind> = (0..m_r)
        .map(|r| if r % 2 == 0 { BlockKind::H1 } else { BlockKind::H1Prime })
        .collect();
    let mut covered = vec![[false; 2]; t.m_s()];
    for r in 0..m_r {
        covered[members[r][0]][firsts[r].random_half()] = true;
    }
    let mut seconds = Vec::with_capacity(m_r);
    for r in 0..m_r {
        let u = members[r][1];
        let half = match covered[u] {
            [false, _] => 0,
            [true, false] => 1,
            // Both halves covered: keep the alternation going.
            [true, true] => {
                if r % 2 == 0 {
                    1
                } else {
                    0
                }
            }
        };
        covered[u][half] = true;
        seconds.push(BlockKind::second_with_random_half(half));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m_r);
    for r in 0..m_r {
        let b1 = SparseMatrix::from_entries(k, k, triangular_block(firsts[r], k, &mut rng));
        let b2 = SparseMatrix::from_entries(k, k, triangular_block(seconds[r], k, &mut rng));
        let a = SparseMatrix::from_entries(k, k, random_path_matrix(k, &mut rng));
        let inv = a
            .to_dense()
            .inverse()
            .ok_or_else(|| JnccError::Construction("relay block not invertible".into()))?;
        out.push(RelayEquations {
            relay: r,
            source_blocks: vec![
                (members[r][0], Some(firsts[r]), b1),
                (members[r][1], Some(seconds[r]), b2),
            ],
            relay_block: a,
            relay_inverse: Some(inv),
        });
    }
    Ok(out)
}

/// Identity network-coding layer: every block is `[I_K | 0]`.
pub fn build_identity_glnc(t: &NetworkTopology, k: usize) -> Vec<RelayEquations> {
    let eye = SparseMatrix::from_entries(k, k, (0..k).map(|i| (i, i)));
    (0..t.m_r())
        .map(|r| RelayEquations {
            relay: r,
            source_blocks: t
                .ordered_members(r)
                .into_iter()
                .map(|u| (u, None, eye.clone()))
                .collect(),
            relay_block: eye.clone(),
            relay_inverse: None,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Source,
    Relay,
}

/// Fully assembled network code.
#[derive(Clone, Debug)]
pub struct JnccCode {
    pub h: SparseMatrix,
    pub topology: NetworkTopology,
    pub l: usize,
    pub k: usize,
    pub slot_columns: Vec<Range<usize>>,
    pub glnc_row_range: Range<usize>,
    pub variant: Variant,
    pub p2p: Option<PointToPointCode>,
    pub relays: Vec<RelayEquations>,
}

/// Encoded network codeword plus the slots that carry no transmission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    pub bits: Vec<u8>,
    pub silent_slots: Vec<bool>,
}

impl JnccCode {
    pub fn m_s(&self) -> usize {
        self.topology.m_s()
    }

    pub fn m_r(&self) -> usize {
        self.topology.m_r()
    }

    pub fn n_slots(&self) -> usize {
        self.slot_columns.len()
    }

    pub fn len(&self) -> usize {
        self.h.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.h.cols() == 0
    }

    pub fn slot_kind(&self, slot: usize) -> SlotKind {
        if slot < self.m_s() {
            SlotKind::Source
        } else {
            SlotKind::Relay
        }
    }

    /// Columns of the information bits of source `u`.
    pub fn info_columns(&self, u: usize) -> Range<usize> {
        let start = self.slot_columns[u].start;
        start..start + self.k
    }

    /// Overall rate `K m_s / ((m_s + m_r) L)`.
    pub fn rate(&self) -> f64 {
        (self.k * self.m_s()) as f64 / self.len() as f64
    }

    /// Slots whose channel is lost when node `node` is erased: its source slot
    /// (if it is a source) and its relay slot.
    pub fn node_slots(&self, node: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(2);
        if node < self.m_s() {
            s.push(node);
        }
        s.push(self.m_s() + node);
        s
    }

    /// Encodes one information block per source. Silent relays still get
    /// their consistent codeword bits but are flagged in `silent_slots`, so the
    /// channel delivers no observation for them.
    pub fn encode(&self, info: &[Vec<u8>], silent_relays: &[bool]) -> Result<Codeword> {
        let m_s = self.m_s();
        if info.len() != m_s || info.iter().any(|b| b.len() != self.k) {
            return Err(JnccError::Dimension(format!(
                "expected {m_s} information blocks of {} bits",
                self.k
            )));
        }
        if !silent_relays.is_empty() && silent_relays.len() != self.m_r() {
            return Err(JnccError::Dimension("silent mask length must equal m_r".into()));
        }
        let slot = |bits: &[u8]| -> Vec<u8> {
            match &self.p2p {
                Some(p) => p.encode(bits),
                None => bits.to_vec(),
            }
        };
        let mut out = Vec::with_capacity(self.len());
        for block in info {
            out.extend(slot(block));
        }
        for rel in &self.relays {
            out.extend(slot(&rel.relay_info(info)));
        }
        let mut silent_slots = vec![false; self.n_slots()];
        for (r, &s) in silent_relays.iter().enumerate() {
            silent_slots[m_s + r] = s;
        }
        Ok(Codeword { bits: out, silent_slots })
    }

    /// Text sidecar describing the slot layout.
    pub fn slot_sidecar(&self) -> String {
        let mut s = String::new();
        for (i, cols) in self.slot_columns.iter().enumerate() {
            let kind = match self.slot_kind(i) {
                SlotKind::Source => "source",
                SlotKind::Relay => "relay",
            };
            let _ = writeln!(s, "slot {} cols {}..{} kind {kind}", i + 1, cols.start, cols.end);
        }
        s
    }
}

/// Parses a slot sidecar into `(column range, kind)` per slot.
pub fn parse_slot_sidecar(text: &str) -> Result<Vec<(Range<usize>, SlotKind)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let err = |msg: &str| JnccError::Parse { line: i + 1, msg: msg.into() };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [ "slot", idx, "cols", range, "kind", kind ] = toks[..] else {
            return Err(err("expected `slot <i> cols <a>..<b> kind source|relay`"));
        };
        let idx: usize = idx.parse().map_err(|_| err("bad slot index"))?;
        if idx != out.len() + 1 {
            return Err(err("slots must be listed in order"));
        }
        let (a, b) = range.split_once("..").ok_or_else(|| err("bad column range"))?;
        let a: usize = a.parse().map_err(|_| err("bad column range"))?;
        let b: usize = b.parse().map_err(|_| err("bad column range"))?;
        let kind = match kind {
            "source" => SlotKind::Source,
            "relay" => SlotKind::Relay,
            _ => return Err(err("kind must be source or relay")),
        };
        out.push((a..b, kind));
    }
    Ok(out)
}

/// Stacks the slot codes over the network-coding rows.
///
/// Full variants need `p2p`; the GLNC-only variants ignore it and use `k` as
/// the slot length.
pub fn assemble(
    variant: Variant,
    t: &NetworkTopology,
    p2p: Option<&PointToPointCode>,
    k: usize,
    seed: u64,
) -> Result<JnccCode> {
    let (l, k, p2p) = if variant.is_glnc_only() {
        (k, k, None)
    } else {
        let p = p2p.ok_or_else(|| JnccError::Config(format!("variant {variant} needs a point-to-point code")))?;
        if p.k != k {
            return Err(JnccError::Dimension(format!("K = {k} but the slot code has K = {}", p.k)));
        }
        (p.l, p.k, Some(p.clone()))
    };
    let relays = if variant.uses_identity_blocks() {
        build_identity_glnc(t, k)
    } else {
        build_smarc_glnc(t, k, seed)?
    };
    let n_slots = t.m_s() + t.m_r();
    let slot_columns: Vec<Range<usize>> = (0..n_slots).map(|i| i * l..(i + 1) * l).collect();
    let mut entries = Vec::new();
    let mut row = 0;
    if let Some(p) = &p2p {
        for cols in &slot_columns {
            entries.extend(p.h_sparse.entries_at(row, cols.start));
            row += l - k;
        }
    }
    let glnc_start = row;
    for rel in &relays {
        for (u, _, block) in &rel.source_blocks {
            entries.extend(block.entries_at(row, slot_columns[*u].start));
        }
        entries.extend(rel.relay_block.entries_at(row, slot_columns[t.m_s() + rel.relay].start));
        row += k;
    }
    let h = SparseMatrix::from_entries(row, n_slots * l, entries);
    Ok(JnccCode {
        h,
        topology: t.clone(),
        l,
        k,
        slot_columns,
        glnc_row_range: glnc_start..row,
        variant,
        p2p,
        relays,
    })
}

/// Writes a matrix in alist format.
pub fn write_alist(h: &SparseMatrix) -> String {
    let mut s = String::new();
    let max_col = (0..h.cols()).map(|c| h.col(c).len()).max().unwrap_or(0);
    let max_row = (0..h.rows()).map(|r| h.row(r).len()).max().unwrap_or(0);
    let _ = writeln!(s, "{} {}", h.cols(), h.rows());
    let _ = writeln!(s, "{max_col} {max_row}");
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(s, "{}", join((0..h.cols()).map(|c| h.col(c).len().to_string()).collect()));
    let _ = writeln!(s, "{}", join((0..h.rows()).map(|r| h.row(r).len().to_string()).collect()));
    let padded = |list: &[u32], width: usize| {
        let mut v: Vec<String> = list.iter().map(|&i| (i + 1).to_string()).collect();
        v.resize(width, "0".into());
        v.join(" ")
    };
    for c in 0..h.cols() {
        let _ = writeln!(s, "{}", padded(h.col(c), max_col));
    }
    for r in 0..h.rows() {
        let _ = writeln!(s, "{}", padded(h.row(r), max_row));
    }
    s
}

/// Reads an alist matrix. Column and row lists must agree.
pub fn read_alist(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next_nums = |expect: Option<usize>| -> Result<(usize, Vec<usize>)> {
        let (i, line) = lines
            .next()
            .ok_or(JnccError::Parse { line: 0, msg: "unexpected end of alist".into() })?;
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| JnccError::Parse { line: i + 1, msg: e.to_string() })?;
        if let Some(n) = expect {
            if nums.len() != n {
                return Err(JnccError::Parse { line: i + 1, msg: format!("expected {n} numbers") });
            }
        }
        Ok((i + 1, nums))
    };
    let (_, dims) = next_nums(Some(2))?;
    let (cols, rows) = (dims[0], dims[1]);
    next_nums(Some(2))?;
    let (_, col_deg) = next_nums(Some(cols))?;
    let (_, row_deg) = next_nums(Some(rows))?;
    let mut from_cols = Vec::new();
    for (c, &deg) in col_deg.iter().enumerate() {
        let (ln, list) = next_nums(None)?;
        let idx: Vec<usize> = list.into_iter().filter(|&x| x != 0).collect();
        if idx.len() != deg || idx.iter().any(|&r| r > rows) {
            return Err(JnccError::Parse { line: ln, msg: format!("bad entries for column {}", c + 1) });
        }
        from_cols.extend(idx.into_iter().map(|r| (r - 1, c)));
    }
    let mut from_rows = Vec::new();
    for (r, &deg) in row_deg.iter().enumerate() {
        let (ln, list) = next_nums(None)?;
        let idx: Vec<usize> = list.into_iter().filter(|&x| x != 0).collect();
        if idx.len() != deg || idx.iter().any(|&c| c > cols) {
            return Err(JnccError::Parse { line: ln, msg: format!("bad entries for row {}", r + 1) });
        }
        from_rows.extend(idx.into_iter().map(|c| (r, c - 1)));
    }
    let a = SparseMatrix::from_entries(rows, cols, from_cols);
    let b = SparseMatrix::from_entries(rows, cols, from_rows);
    if a != b {
        return Err(JnccError::Parse { line: 0, msg: "column and row lists disagree".into() });
    }
    Ok(a)
}
