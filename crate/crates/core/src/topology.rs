//! Network description: `m_s` sources that also act as relays, plus
//! `m_r - m_s` relay-only nodes, each relay with a decoding set and a
//! transmission set of sources.
//!
//! All indices in the Rust API are 0-based: source `u` is node `u`, relay `r`
//! is node `r`, and relays `r < m_s` are the sources themselves. The text
//! format written by [`NetworkTopology::to_text`] is 1-based.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{JnccError, Result};
use crate::gf2::Gf2Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkTopology {
    m_s: usize,
    m_r: usize,
    decoding_sets: Vec<Vec<usize>>,
    transmission_sets: Vec<Vec<usize>>,
    pub interuser_reciprocal: bool,
}

impl NetworkTopology {
    /// Builds a topology whose decoding sets equal the transmission sets.
    /// Enforces every structural invariant, including that a source-relay
    /// never includes its own message.
    pub fn new(m_s: usize, m_r: usize, transmission_sets: Vec<Vec<usize>>) -> Result<Self> {
        let t = Self::build(m_s, m_r, transmission_sets)?;
        for (r, set) in t.transmission_sets.iter().enumerate() {
            if r < m_s && set.contains(&r) {
                return Err(JnccError::InvalidTopology(format!(
                    "relay {} includes its own source in its transmission set",
                    r + 1
                )));
            }
        }
        Ok(t)
    }

    /// Like [`NetworkTopology::new`] but accepts relays that include their own
    /// source. Needed to reproduce published irregular coding matrices that do
    /// this; such relays do not count towards `t_u` of their own source.
    pub fn new_permissive(m_s: usize, m_r: usize, transmission_sets: Vec<Vec<usize>>) -> Result<Self> {
        Self::build(m_s, m_r, transmission_sets)
    }

    fn build(m_s: usize, m_r: usize, mut sets: Vec<Vec<usize>>) -> Result<Self> {
        if m_s == 0 {
            return Err(JnccError::InvalidTopology("need at least one source".into()));
        }
        if m_r < m_s {
            return Err(JnccError::InvalidTopology(format!(
                "m_r ({m_r}) must be at least m_s ({m_s})"
            )));
        }
        if sets.len() != m_r {
            return Err(JnccError::InvalidTopology(format!(
                "expected {m_r} transmission sets, got {}",
                sets.len()
            )));
        }
        for (r, set) in sets.iter_mut().enumerate() {
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(JnccError::InvalidTopology(format!(
                    "relay {} lists a source twice",
                    r + 1
                )));
            }
            if let Some(&bad) = set.iter().find(|&&u| u >= m_s) {
                return Err(JnccError::InvalidTopology(format!(
                    "relay {} references source {} but m_s = {m_s}",
                    r + 1,
                    bad + 1
                )));
            }
        }
        Ok(NetworkTopology {
            m_s,
            m_r,
            decoding_sets: sets.clone(),
            transmission_sets: sets,
            interuser_reciprocal: false,
        })
    }

    pub fn m_s(&self) -> usize {
        self.m_s
    }

    pub fn m_r(&self) -> usize {
        self.m_r
    }

    pub fn decoding_set(&self, relay: usize) -> &[usize] {
        &self.decoding_sets[relay]
    }

    /// Sources in `T(relay)`, sorted ascending.
    pub fn transmission_set(&self, relay: usize) -> &[usize] {
        &self.transmission_sets[relay]
    }

    /// Members of `T(relay)` in construction order (first, second, ...).
    /// For cyclic topologies this is the order `f(r+1), f(r+2)`, which the
    /// GLNC layer uses to decide which member gets which block type.
    pub fn ordered_members(&self, relay: usize) -> Vec<usize> {
        let set = &self.transmission_sets[relay];
        let start = (relay + 1) % self.m_s;
        let mut members = set.clone();
        members.sort_by_key(|&u| (u + self.m_s - start) % self.m_s);
        members
    }

    pub fn n(&self, relay: usize) -> usize {
        self.transmission_sets[relay].len()
    }

    /// `t_u`: number of relays other than `u` that include source `u`.
    pub fn inclusion_counts(&self) -> Vec<usize> {
        let mut t = vec![0; self.m_s];
        for (r, set) in self.transmission_sets.iter().enumerate() {
            for &u in set {
                if u != r {
                    t[u] += 1;
                }
            }
        }
        t
    }

    /// Relays that carry source `u` in their transmission set (excluding `u`
    /// itself).
    pub fn carriers(&self, u: usize) -> Vec<usize> {
        (0..self.m_r)
            .filter(|&r| r != u && self.transmission_sets[r].contains(&u))
            .collect()
    }

    /// 1-based text form: header `m_s m_r`, then `relay: s1 s2 ...` per relay.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.m_s, self.m_r);
        for r in 0..self.m_r {
            let _ = write!(s, "{}:", r + 1);
            for u in self.ordered_members(r) {
                let _ = write!(s, " {}", u + 1);
            }
            s.push('\n');
        }
        s
    }

    /// Parses the text form. Self-inclusion is accepted when `permissive`.
    pub fn from_text(text: &str, permissive: bool) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines
            .next()
            .ok_or(JnccError::Parse { line: 1, msg: "empty topology".into() })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| JnccError::Parse { line: hl, msg: e.to_string() })?;
        let [m_s, m_r] = nums[..] else {
            return Err(JnccError::Parse { line: hl, msg: "expected `m_s m_r`".into() });
        };
        let mut sets = vec![None; m_r];
        for (ln, line) in lines {
            let (id, rest) = line
                .split_once(':')
                .ok_or(JnccError::Parse { line: ln, msg: "expected `relay: sources`".into() })?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| JnccError::Parse { line: ln, msg: e.to_string() })?;
            if id == 0 || id > m_r {
                return Err(JnccError::Parse { line: ln, msg: format!("relay id {id} out of range") });
            }
            let members = rest
                .split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(JnccError::Parse { line: ln, msg: format!("bad source index `{t}`") }),
                })
                .collect::<Result<Vec<_>>>()?;
            if sets[id - 1].replace(members).is_some() {
                return Err(JnccError::Parse { line: ln, msg: format!("relay {id} listed twice") });
            }
        }
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(r, s)| {
                s.ok_or(JnccError::Parse { line: 0, msg: format!("relay {} missing", r + 1) })
            })
            .collect::<Result<Vec<_>>>()?;
        if permissive {
            Self::new_permissive(m_s, m_r, sets)
        } else {
            Self::new(m_s, m_r, sets)
        }
    }
}

/// `f_m(x) = ((x - 1) mod m) + 1` on 1-based indices.
pub fn wrap_index(x: usize, m: usize) -> usize {
    ((x - 1) % m) + 1
}

/// Deterministic cyclic construction: relay `u_r` (1-based) decodes and
/// transmits sources `f(u_r + 1)` and `f(u_r + 2)`.
///
/// Rejects `m_s < 3`: for two sources the rule places a relay's own source in
/// its transmission set.
pub fn algorithm1_transmission_sets(m_s: usize, m_r: usize) -> Result<NetworkTopology> {
    if m_s < 3 {
        return Err(JnccError::InvalidTopology(format!(
            "cyclic construction needs m_s >= 3 (got {m_s}); smaller networks would \
             place a relay's own source in its transmission set"
        )));
    }
    let sets = (1..=m_r)
        .map(|ur| vec![wrap_index(ur + 1, m_s) - 1, wrap_index(ur + 2, m_s) - 1])
        .collect();
    NetworkTopology::new(m_s, m_r, sets)
}

/// Each relay picks `n` distinct sources uniformly at random, never its own.
pub fn random_transmission_sets(m_s: usize, m_r: usize, n: usize, seed: u64) -> Result<NetworkTopology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_transmission_sets_with(m_s, m_r, n, &mut rng)
}

pub fn random_transmission_sets_with(
    m_s: usize,
    m_r: usize,
    n: usize,
    rng: &mut impl rand::Rng,
) -> Result<NetworkTopology> {
    if n >= m_s {
        return Err(JnccError::InvalidTopology(format!("need n < m_s (n = {n}, m_s = {m_s})")));
    }
    let sets = (0..m_r)
        .map(|r| {
            if r < m_s {
                // Draw from the m_s - 1 other sources, skipping r.
                sample(rng, m_s - 1, n)
                    .into_iter()
                    .map(|i| if i >= r { i + 1 } else { i })
                    .collect()
            } else {
                sample(rng, m_s, n).into_vec()
            }
        })
        .collect();
    NetworkTopology::new(m_s, m_r, sets)
}

/// The `(m_s + m_r) x m_s` indicator of which source codeword appears in which
/// transmission slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingMatrix {
    pub m: Gf2Matrix,
    m_s: usize,
    m_r: usize,
}

impl CodingMatrix {
    pub fn m_s(&self) -> usize {
        self.m_s
    }

    pub fn m_r(&self) -> usize {
        self.m_r
    }
}

pub fn coding_matrix(t: &NetworkTopology) -> CodingMatrix {
    let (m_s, m_r) = (t.m_s(), t.m_r());
    let mut m = Gf2Matrix::zeros(m_s + m_r, m_s);
    for u in 0..m_s {
        m.set(u, u, true);
    }
    for r in 0..m_r {
        for &u in t.transmission_set(r) {
            m.set(m_s + r, u, true);
        }
    }
    CodingMatrix { m, m_s, m_r }
}

/// Rows of the slots that survive when the nodes in `erased` lose their link
/// to the destination. Erasing node `e < m_s` drops its source row and its
/// relay row; erasing a relay-only node drops its relay row.
pub fn restrict_to_unerased(cm: &CodingMatrix, erased: &[usize]) -> Gf2Matrix {
    let mut keep = vec![true; cm.m_s + cm.m_r];
    for &e in erased {
        assert!(e < cm.m_r, "erased node {e} out of range");
        if e < cm.m_s {
            keep[e] = false;
        }
        keep[cm.m_s + e] = false;
    }
    let rows: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
    cm.m.select_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq12() -> Gf2Matrix {
        Gf2Matrix::from_rows(&[
            vec![1, 0, 0, 0, 0],
            vec![0, 1, 0, 0, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 0, 1, 0],
            vec![0, 0, 0, 0, 1],
            vec![0, 1, 1, 0, 0],
            vec![0, 0, 1, 1, 0],
            vec![0, 0, 0, 1, 1],
            vec![1, 0, 0, 0, 1],
            vec![1, 1, 0, 0, 0],
        ])
    }

    fn eq11_topology() -> NetworkTopology {
        NetworkTopology::new(3, 3, vec![vec![1, 2], vec![0, 2], vec![0, 1]]).unwrap()
    }

    #[test]
    fn cyclic_sets_m5() {
        let t = algorithm1_transmission_sets(5, 5).unwrap();
        // T(3) = {4, 5} in 1-based terms.
        assert_eq!(t.transmission_set(2), &[3, 4]);
        assert_eq!(coding_matrix(&t).m, eq12());
    }

    #[test]
    fn cyclic_rejects_two_sources() {
        // f_2(2) = 2 and f_2(3) = 1, so relay 1 would carry itself.
        assert_eq!(wrap_index(2, 2), 2);
        assert_eq!(wrap_index(3, 2), 1);
        assert!(algorithm1_transmission_sets(2, 2).is_err());
        assert!(NetworkTopology::new(2, 2, vec![vec![1, 0], vec![0, 1]]).is_err());
        assert!(algorithm1_transmission_sets(1, 3).is_err());
    }

    #[test]
    fn eq11_coding_matrix() {
        let cm = coding_matrix(&eq11_topology());
        let expected = Gf2Matrix::from_rows(&[
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
        ]);
        assert_eq!(cm.m, expected);
        let me = restrict_to_unerased(&cm, &[0]);
        let expected_me = Gf2Matrix::from_rows(&[
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
        ]);
        assert_eq!(me, expected_me);
        assert_eq!(restrict_to_unerased(&cm, &[]), cm.m);
    }

    #[test]
    fn eq12_two_erasures_full_rank() {
        let cm = CodingMatrix { m: eq12(), m_s: 5, m_r: 5 };
        let me = restrict_to_unerased(&cm, &[0, 1]);
        assert_eq!((me.rows(), me.cols()), (6, 5));
        assert_eq!(me.rank(), 5);
    }

    #[test]
    fn column_sums_are_one_plus_t() {
        for (m_s, m_r) in [(3, 3), (5, 5), (4, 7), (6, 6)] {
            let t = algorithm1_transmission_sets(m_s, m_r).unwrap();
            let cm = coding_matrix(&t);
            let counts = t.inclusion_counts();
            for u in 0..m_s {
                assert_eq!(cm.m.col_weight(u), 1 + counts[u]);
            }
        }
    }

    #[test]
    fn cyclic_balanced_inclusions() {
        for m in 3..=10 {
            let t = algorithm1_transmission_sets(m, m).unwrap();
            assert!(t.inclusion_counts().iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn cyclic_non_reciprocal_above_four() {
        for m_s in 5..=9 {
            for m_r in m_s..=m_s + 3 {
                let t = algorithm1_transmission_sets(m_s, m_r).unwrap();
                for i in 0..m_s {
                    for &j in t.transmission_set(i) {
                        assert!(!t.transmission_set(j).contains(&i), "m_s={m_s} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn adding_a_source_keeps_invariants() {
        for m_s in 3..8 {
            let grown = algorithm1_transmission_sets(m_s + 1, m_s + 3).unwrap();
            for r in 0..=m_s {
                assert!(!grown.transmission_set(r).contains(&r));
            }
        }
    }

    #[test]
    fn random_sets_deterministic_and_valid() {
        let a = random_transmission_sets(5, 5, 2, 42).unwrap();
        let b = random_transmission_sets(5, 5, 2, 42).unwrap();
        assert_eq!(a, b);
        for r in 0..5 {
            assert_eq!(a.n(r), 2);
            assert!(!a.transmission_set(r).contains(&r));
        }
        assert!(random_transmission_sets(3, 3, 3, 1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let t = algorithm1_transmission_sets(5, 7).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("5 7\n1: 2 3\n"));
        assert_eq!(NetworkTopology::from_text(&text, false).unwrap(), t);
    }

    #[test]
    fn text_rejects_self_inclusion_unless_permissive() {
        let text = "3 3\n1: 1 2\n2: 1 3\n3: 1 2\n";
        assert!(NetworkTopology::from_text(text, false).is_err());
        assert!(NetworkTopology::from_text(text, true).is_ok());
    }

    #[test]
    fn ordered_members_follow_cyclic_order() {
        let t = algorithm1_transmission_sets(5, 5).unwrap();
        // Relay 4 (1-based) carries f(5) = 5 then f(6) = 1.
        assert_eq!(t.ordered_members(3), vec![4, 0]);
        assert_eq!(t.ordered_members(0), vec![1, 2]);
    }
}
