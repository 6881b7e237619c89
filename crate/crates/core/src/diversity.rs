//! Analytic diversity metrics and exhaustive erasure checks.

use serde::Serialize;

use crate::codes::JnccCode;
use crate::gf2::{determined_variables, Gf2Matrix};
use crate::topology::{coding_matrix, restrict_to_unerased, CodingMatrix, NetworkTopology};

/// Largest diversity order any linear network code can reach.
pub fn d_max(m_s: usize, m_r: usize) -> usize {
    assert!(m_r >= m_s && m_s >= 1, "need m_r >= m_s >= 1");
    if m_r <= 2 * m_s {
        (1 + m_r).div_ceil(2)
    } else {
        1 + m_r - m_s
    }
}

/// Number of relays that must include each source for full diversity.
pub fn required_inclusions(m_s: usize, m_r: usize) -> usize {
    assert!(m_r >= m_s && m_s >= 1, "need m_r >= m_s >= 1");
    if m_r <= 2 * m_s {
        m_r / 2
    } else {
        m_r - m_s
    }
}

/// Smallest transmission set size compatible with full diversity.
pub fn min_n_for_full_diversity(m_s: usize, m_r: usize) -> usize {
    assert!(m_r >= m_s && m_s >= 1, "need m_r >= m_s >= 1");
    if m_r == m_s {
        m_s / 2
    } else if m_r <= 2 * m_s {
        m_s.div_ceil(2)
    } else {
        m_s - (m_s * m_s) / m_r
    }
}

pub fn t_min(t: &NetworkTopology) -> usize {
    t.inclusion_counts().into_iter().min().unwrap_or(0)
}

/// Whether the inclusion counts allow full diversity.
pub fn full_diversity_feasible(t: &NetworkTopology) -> bool {
    t_min(t) >= required_inclusions(t.m_s(), t.m_r())
}

/// Visits every `e`-subset of `0..n` in lexicographic order until `f`
/// returns `true`; returns the subset that stopped the walk.
pub fn find_subset(n: usize, e: usize, mut f: impl FnMut(&[usize]) -> bool) -> Option<Vec<usize>> {
    if e > n {
        return None;
    }
    let mut idx: Vec<usize> = (0..e).collect();
    loop {
        if f(&idx) {
            return Some(idx);
        }
        let mut i = e;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < n - e + i {
                idx[i] += 1;
                for j in i + 1..e {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// First erasure cardinality at which some restricted coding matrix loses
/// full column rank.
pub fn d_m(cm: &CodingMatrix) -> usize {
    let m_s = cm.m_s();
    for e in 1..=cm.m_r() {
        if find_subset(cm.m_r(), e, |set| restrict_to_unerased(cm, set).rank() < m_s).is_some() {
            return e;
        }
    }
    cm.m_r() + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErasureDecoder {
    Peeling,
    Gaussian,
}

/// Whether every information bit survives erasure of the given nodes.
pub fn recovers_all_info(code: &JnccCode, erased_nodes: &[usize], decoder: ErasureDecoder) -> bool {
    let n = code.len();
    let mut erased = vec![false; n];
    for &node in erased_nodes {
        for s in code.node_slots(node) {
            for c in code.slot_columns[s].clone() {
                erased[c] = true;
            }
        }
    }
    let info_ok = |known: &dyn Fn(usize) -> bool| {
        (0..code.m_s()).all(|u| code.info_columns(u).all(known))
    };
    match decoder {
        ErasureDecoder::Peeling => {
            let mut x = vec![0u8; n];
            let mut known: Vec<bool> = erased.iter().map(|&e| !e).collect();
            code.h.peel_erasures(&mut x, &mut known);
            info_ok(&|c| known[c])
        }
        ErasureDecoder::Gaussian => {
            let cols: Vec<usize> = (0..n).filter(|&c| erased[c]).collect();
            let mut pos = vec![usize::MAX; n];
            for (i, &c) in cols.iter().enumerate() {
                pos[c] = i;
            }
            let rows: Vec<usize> = (0..code.h.rows())
                .filter(|&r| code.h.row(r).iter().any(|&c| erased[c as usize]))
                .collect();
            let mut a = Gf2Matrix::zeros(rows.len(), cols.len());
            for (i, &r) in rows.iter().enumerate() {
                for &c in code.h.row(r) {
                    if erased[c as usize] {
                        a.set(i, pos[c as usize], true);
                    }
                }
            }
            let det = determined_variables(&a);
            info_ok(&|c| !erased[c] || det[pos[c]])
        }
    }
}

/// Smallest number of erased node-to-destination links for which some
/// pattern loses information, searching up to `max_e`. Returns `max_e + 1`
/// when every pattern up to `max_e` is recoverable.
pub fn verify_bec_diversity(code: &JnccCode, max_e: usize, decoder: ErasureDecoder) -> usize {
    failing_pattern(code, max_e, decoder).map_or(max_e + 1, |p| p.len())
}

/// The first failing erasure pattern in order of cardinality.
pub fn failing_pattern(code: &JnccCode, max_e: usize, decoder: ErasureDecoder) -> Option<Vec<usize>> {
    (1..=max_e.min(code.m_r()))
        .find_map(|e| find_subset(code.m_r(), e, |set| !recovers_all_info(code, set, decoder)))
}

/// Every failing pattern with exactly `e` erased nodes.
pub fn failing_patterns(code: &JnccCode, e: usize, decoder: ErasureDecoder) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    find_subset(code.m_r(), e, |set| {
        if !recovers_all_info(code, set, decoder) {
            out.push(set.to_vec());
        }
        false
    });
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiversityReport {
    pub m_s: usize,
    pub m_r: usize,
    pub d_max: usize,
    pub t_min: usize,
    pub d_r: usize,
    pub d_m: usize,
    pub full_diversity_feasible: bool,
    pub min_n_for_full_diversity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_d_bec: Option<usize>,
}

impl DiversityReport {
    pub fn for_topology(t: &NetworkTopology) -> Self {
        let tm = t_min(t);
        DiversityReport {
            m_s: t.m_s(),
            m_r: t.m_r(),
            d_max: d_max(t.m_s(), t.m_r()),
            t_min: tm,
            d_r: 1 + tm,
            d_m: d_m(&coding_matrix(t)),
            full_diversity_feasible: full_diversity_feasible(t),
            min_n_for_full_diversity: min_n_for_full_diversity(t.m_s(), t.m_r()),
            measured_d_bec: None,
        }
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "m_s={}\nm_r={}\nd_max={}\nt_min={}\nd_r={}\nd_m={}\nfull_diversity_feasible={}\nmin_n={}\n",
            self.m_s,
            self.m_r,
            self.d_max,
            self.t_min,
            self.d_r,
            self.d_m,
            self.full_diversity_feasible,
            self.min_n_for_full_diversity
        );
        if let Some(d) = self.measured_d_bec {
            s.push_str(&format!("measured_d_bec={d}\n"));
        }
        s
    }
}
