//! Binary linear algebra over GF(2).
//!
//! Two matrix views are provided. [`Gf2Matrix`] is dense and bit-packed
//! (row-major, 64 columns per word) and is used for rank computation and
//! Gaussian elimination. [`SparseMatrix`] keeps row and column incidence
//! lists and is used for peeling and message passing. Both views of the same
//! matrix agree entrywise and can be converted into each other.

use std::collections::BTreeSet;
use std::fmt;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Packed bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds from a slice of 0/1 bytes; any nonzero byte is a one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "BitVec({s})")
    }
}

/// Dense bit-packed binary matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Gf2Matrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Gf2Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds from row-major 0/1 bytes.
    pub fn from_dense(rows: usize, cols: usize, data: &[u8]) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        let mut m = Gf2Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if data[r * cols + c] != 0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Gf2Matrix::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let mask = 1u64 << (c % WORD);
        let w = &mut self.data[r * self.stride + c / WORD];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + c / WORD] ^= 1u64 << (c % WORD);
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for k in 0..s {
            self.data.swap(a * s + k, b * s + k);
        }
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols, "dimension mismatch in mul_vec");
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let parity = self
                .row_words(r)
                .iter()
                .zip(v.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            if parity == 1 {
                out.set(r, true);
            }
        }
        out
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = Gf2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in self.row(r).iter_ones() {
                let src = other.row_words(k);
                let dst = &mut out.data[r * out.stride..(r + 1) * out.stride];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
        }
        out
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Gf2Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Gf2Matrix {
        let mut out = Gf2Matrix::zeros(idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.data[i * self.stride..(i + 1) * self.stride].copy_from_slice(self.row_words(r));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Gf2Matrix {
        let mut out = Gf2Matrix::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        out
    }

    /// Reduces in place to reduced row echelon form; returns the pivot column of
    /// each leading row, in order.
    fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let (w, bit) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (lead..self.rows).find(|&r| self.data[r * self.stride + w] & bit != 0)
            else {
                continue;
            };
            self.swap_rows(lead, p);
            for r in 0..self.rows {
                if r != lead && self.data[r * self.stride + w] & bit != 0 {
                    self.xor_rows(r, lead);
                }
            }
            pivots.push(c);
            lead += 1;
        }
        pivots
    }

    /// Forward elimination only (row echelon form); returns the rank.
    fn echelon_rank(&mut self) -> usize {
        let mut lead = 0;
        for c in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let (w, bit) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (lead..self.rows).find(|&r| self.data[r * self.stride + w] & bit != 0)
            else {
                continue;
            };
            self.swap_rows(lead, p);
            for r in lead + 1..self.rows {
                if self.data[r * self.stride + w] & bit != 0 {
                    self.xor_rows(r, lead);
                }
            }
            lead += 1;
        }
        lead
    }

    pub fn rank(&self) -> usize {
        self.clone().echelon_rank()
    }

    /// Column indices forming a maximal independent set, chosen greedily from
    /// the left.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.clone().rref_in_place()
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Gf2Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Gf2Matrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in self.row(r).iter_ones() {
                aug.set(r, c, true);
            }
            aug.set(r, n + r, true);
        }
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let right: Vec<usize> = (n..2 * n).collect();
        Some(aug.select_cols(&right))
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let entries = (0..self.rows)
            .flat_map(|r| self.row(r).iter_ones().map(move |c| (r, c)).collect::<Vec<_>>());
        SparseMatrix::from_entries(self.rows, self.cols, entries)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Sparse binary matrix with both row and column incidence lists, each sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<u32>>,
    col_adj: Vec<Vec<u32>>,
}

impl SparseMatrix {
    /// Builds from `(row, col)` positions of the ones. Duplicate positions
    /// cancel in pairs, as they would when adding over GF(2).
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut row_adj: Vec<Vec<u32>> = vec![Vec::new(); rows];
        for (r, c) in entries {
            assert!(r < rows && c < cols, "entry ({r}, {c}) out of bounds");
            row_adj[r].push(c as u32);
        }
        for list in row_adj.iter_mut() {
            list.sort_unstable();
            let mut out: Vec<u32> = Vec::with_capacity(list.len());
            for &c in list.iter() {
                if out.last() == Some(&c) {
                    out.pop();
                } else {
                    out.push(c);
                }
            }
            *list = out;
        }
        Self::from_row_adjacency(rows, cols, row_adj)
    }

    fn from_row_adjacency(rows: usize, cols: usize, row_adj: Vec<Vec<u32>>) -> Self {
        let mut col_adj: Vec<Vec<u32>> = vec![Vec::new(); cols];
        for (r, list) in row_adj.iter().enumerate() {
            for &c in list {
                col_adj[c as usize].push(r as u32);
            }
        }
        SparseMatrix {
            rows,
            cols,
            row_adj,
            col_adj,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.col_adj[c]
    }

    pub fn nnz(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&(c as u32)).is_ok()
    }

    pub fn to_dense(&self) -> Gf2Matrix {
        let mut m = Gf2Matrix::zeros(self.rows, self.cols);
        for (r, list) in self.row_adj.iter().enumerate() {
            for &c in list {
                m.set(r, c as usize, true);
            }
        }
        m
    }

    pub fn transpose(&self) -> SparseMatrix {
        Self::from_row_adjacency(self.cols, self.rows, self.col_adj.clone())
    }

    /// Product with a 0/1 byte vector.
    pub fn mul_bits(&self, x: &[u8]) -> Vec<u8> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_bits");
        self.row_adj
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1)))
            .collect()
    }

    pub fn syndrome_is_zero(&self, x: &[u8]) -> bool {
        self.row_adj
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1)) == 0)
    }

    /// Places `block` with its top-left corner at `(row0, col0)` in a larger
    /// matrix being assembled from entries.
    pub fn entries_at(&self, row0: usize, col0: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_adj.iter().enumerate().flat_map(move |(r, list)| {
            list.iter().map(move |&c| (row0 + r, col0 + c as usize))
        })
    }

    /// Erasure peeling on `H x = 0`: repeatedly takes a check with exactly one
    /// unknown variable and resolves it. `known` is updated in place and `x`
    /// receives the recovered values (values at unknown positions are ignored
    /// on entry). Checks are processed lowest index first. Returns the
    /// `(check, variable)` trace.
    pub fn peel_erasures(&self, x: &mut [u8], known: &mut [bool]) -> Vec<(usize, usize)> {
        assert_eq!(x.len(), self.cols);
        assert_eq!(known.len(), self.cols);
        let mut unknown_count: Vec<u32> = vec![0; self.rows];
        let mut acc: Vec<u8> = vec![0; self.rows];
        for (r, row) in self.row_adj.iter().enumerate() {
            for &c in row {
                let c = c as usize;
                if known[c] {
                    acc[r] ^= x[c] & 1;
                } else {
                    unknown_count[r] += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..self.rows).filter(|&r| unknown_count[r] == 1).collect();
        let mut trace = Vec::new();
        while let Some(r) = ready.pop_first() {
            if unknown_count[r] != 1 {
                continue;
            }
            let Some(&v) = self.row_adj[r].iter().find(|&&c| !known[c as usize]) else {
                continue;
            };
            let v = v as usize;
            x[v] = acc[r];
            known[v] = true;
            trace.push((r, v));
            for &r2 in &self.col_adj[v] {
                let r2 = r2 as usize;
                unknown_count[r2] -= 1;
                acc[r2] ^= x[v];
                if unknown_count[r2] == 1 {
                    ready.insert(r2);
                }
            }
        }
        trace
    }
}

/// Status of a linear solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    UniqueSolution,
    /// The coefficient matrix has rank below its column count.
    RankDeficient,
    /// Peeling ran out of single-unknown equations although the matrix has
    /// full column rank.
    Stalled,
    /// Full column rank but the right-hand side is outside the column space.
    Inconsistent,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<BitVec>,
    pub peeling_trace: Option<Vec<(usize, usize)>>,
}

impl SolveOutcome {
    fn failed(status: SolveStatus) -> Self {
        SolveOutcome {
            status,
            solution: None,
            peeling_trace: None,
        }
    }

    pub fn is_unique(&self) -> bool {
        self.status == SolveStatus::UniqueSolution
    }
}

/// GF(2) rank.
pub fn rank(m: &Gf2Matrix) -> usize {
    m.rank()
}

/// Solves `a z = c` by Gaussian elimination.
pub fn gaussian_solve(a: &Gf2Matrix, c: &BitVec) -> SolveOutcome {
    assert_eq!(a.rows(), c.len(), "rows of a must match length of c");
    let n = a.cols();
    let mut aug = Gf2Matrix::zeros(a.rows(), n + 1);
    for r in 0..a.rows() {
        for col in a.row(r).iter_ones() {
            aug.set(r, col, true);
        }
        if c.get(r) {
            aug.set(r, n, true);
        }
    }
    let pivots = aug.rref_in_place();
    if pivots.last() == Some(&n) {
        // A row reduced to 0 = 1.
        let coeff_rank = pivots.len() - 1;
        return SolveOutcome::failed(if coeff_rank < n {
            SolveStatus::RankDeficient
        } else {
            SolveStatus::Inconsistent
        });
    }
    if pivots.len() < n {
        return SolveOutcome::failed(SolveStatus::RankDeficient);
    }
    let mut z = BitVec::zeros(n);
    for (row, &col) in pivots.iter().enumerate() {
        if aug.get(row, n) {
            z.set(col, true);
        }
    }
    SolveOutcome {
        status: SolveStatus::UniqueSolution,
        solution: Some(z),
        peeling_trace: None,
    }
}

/// Solves `a z = c` by backward substitution (peeling): repeatedly solves an
/// equation with exactly one unknown, lowest equation index first.
pub fn peel_solve(a: &Gf2Matrix, c: &BitVec) -> SolveOutcome {
    assert_eq!(a.rows(), c.len(), "rows of a must match length of c");
    let sparse = a.to_sparse();
    let n = a.cols();
    let mut known = vec![false; n];
    let mut z = vec![0u8; n];
    let mut unknown_count: Vec<usize> = (0..a.rows()).map(|r| sparse.row(r).len()).collect();
    let mut acc: Vec<u8> = (0..a.rows()).map(|r| c.get(r) as u8).collect();
    let mut ready: BTreeSet<usize> = (0..a.rows()).filter(|&r| unknown_count[r] == 1).collect();
    let mut trace = Vec::new();
    let mut consistent = true;
    for r in 0..a.rows() {
        if unknown_count[r] == 0 && acc[r] != 0 {
            consistent = false;
        }
    }
    while let Some(r) = ready.pop_first() {
        if unknown_count[r] != 1 {
            continue;
        }
        let v = sparse
            .row(r)
            .iter()
            .map(|&v| v as usize)
            .find(|&v| !known[v])
            .expect("row with one unknown");
        z[v] = acc[r];
        known[v] = true;
        trace.push((r, v));
        for &r2 in sparse.col(v) {
            let r2 = r2 as usize;
            unknown_count[r2] -= 1;
            acc[r2] ^= z[v];
            match unknown_count[r2] {
                1 => {
                    ready.insert(r2);
                }
                0 if acc[r2] != 0 => consistent = false,
                _ => {}
            }
        }
    }
    if known.iter().all(|&k| k) {
        if !consistent {
            return SolveOutcome::failed(SolveStatus::Inconsistent);
        }
        return SolveOutcome {
            status: SolveStatus::UniqueSolution,
            solution: Some(BitVec::from_bits(&z)),
            peeling_trace: Some(trace),
        };
    }
    if a.rank() < n {
        SolveOutcome::failed(SolveStatus::RankDeficient)
    } else {
        SolveOutcome::failed(SolveStatus::Stalled)
    }
}

/// For a homogeneous-style system in unknowns `z` with coefficient matrix `a`,
/// reports which unknowns are uniquely determined by any consistent right-hand
/// side, i.e. which unit vectors lie in the row space of `a`.
pub fn determined_variables(a: &Gf2Matrix) -> Vec<bool> {
    let mut m = a.clone();
    let pivots = m.rref_in_place();
    let mut is_pivot = vec![false; a.cols()];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let free_mask: Vec<u64> = {
        let mut mask = BitVec::zeros(a.cols());
        for (c, &p) in is_pivot.iter().enumerate() {
            if !p {
                mask.set(c, true);
            }
        }
        mask.words
    };
    let mut out = vec![false; a.cols()];
    for (row, &col) in pivots.iter().enumerate() {
        let touches_free = m
            .row_words(row)
            .iter()
            .zip(&free_mask)
            .any(|(w, f)| w & f != 0);
        out[col] = !touches_free;
    }
    out
}

/// Packet-level elimination: solves `a z = rhs` where each unknown and each
/// right-hand side entry is a whole bit vector (packet). Returns the packets of
/// the uniquely determined unknowns; undetermined ones are `None`.
pub fn solve_packets(a: &Gf2Matrix, rhs: &[BitVec]) -> Vec<Option<BitVec>> {
    assert_eq!(a.rows(), rhs.len());
    let mut m = a.clone();
    let mut payload: Vec<BitVec> = rhs.to_vec();
    let mut lead = 0;
    let mut pivots = Vec::new();
    for c in 0..m.cols() {
        if lead == m.rows() {
            break;
        }
        let Some(p) = (lead..m.rows()).find(|&r| m.get(r, c)) else {
            continue;
        };
        m.swap_rows(lead, p);
        payload.swap(lead, p);
        for r in 0..m.rows() {
            if r != lead && m.get(r, c) {
                m.xor_rows(r, lead);
                let src = payload[lead].clone();
                payload[r].xor_assign(&src);
            }
        }
        pivots.push(c);
        lead += 1;
    }
    let mut out = vec![None; m.cols()];
    for (row, &col) in pivots.iter().enumerate() {
        if m.row_weight(row) == 1 {
            out[col] = Some(payload[row].clone());
        }
    }
    out
}
