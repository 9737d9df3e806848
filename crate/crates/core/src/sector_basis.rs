//! Fixed-magnetization computational basis.
//!
//! Sites are numbered `1..=L` in every public interface. Site `i` lives in
//! bit `i - 1` of an occupation word, and a set bit means spin up. Sector
//! states are stored in ascending integer order of their words, so ordinals
//! are reproducible across runs.

use crate::error::{Error, Result};

/// Largest chain length whose words fit the fixed-width representation.
pub const MAX_SITES: usize = 32;

/// `binomial(n, k)` as `u64`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Next larger word with the same popcount (Gosper's hack).
#[inline]
fn next_same_popcount(w: u64) -> u64 {
    let c = w & w.wrapping_neg();
    let r = w + c;
    (((r ^ w) >> 2) / c) | r
}

/// Ordered basis of one `S^z_tot` sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    sites: usize,
    n_up: usize,
    states: Vec<u64>,
}

impl PartialEq for SectorBasis {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.n_up == other.n_up
    }
}

impl SectorBasis {
    /// Enumerate the sector with `2 * S^z_tot = twice_sz`.
    ///
    /// `L` must be even and at least 2; `twice_sz` must have the parity of
    /// `L` and satisfy `|twice_sz| <= L`.
    pub fn new(sites: usize, twice_sz: i32) -> Result<Self> {
        if sites < 2 || sites % 2 != 0 {
            return Err(Error::param(format!("chain length must be even and >= 2, got {sites}")));
        }
        if sites > MAX_SITES {
            return Err(Error::Capacity(format!("chain length {sites} exceeds {MAX_SITES}")));
        }
        let l = sites as i64;
        let tw = twice_sz as i64;
        if tw.abs() > l || (l + tw) % 2 != 0 {
            return Err(Error::param(format!(
                "S^z_tot = {}/2 is not a valid sector for L = {sites}",
                twice_sz
            )));
        }
        let n_up = ((l + tw) / 2) as usize;
        let dim = binomial(sites, n_up) as usize;
        let mut states = Vec::with_capacity(dim);
        if n_up == 0 {
            states.push(0);
        } else {
            let last = ((1u64 << n_up) - 1) << (sites - n_up);
            let mut w = (1u64 << n_up) - 1;
            loop {
                states.push(w);
                if w == last {
                    break;
                }
                w = next_same_popcount(w);
            }
        }
        debug_assert_eq!(states.len(), dim);
        Ok(Self { sites, n_up, states })
    }

    /// The `S^z_tot = 0` sector.
    pub fn half_filling(sites: usize) -> Result<Self> {
        Self::new(sites, 0)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    /// Twice the total magnetization.
    pub fn twice_sz(&self) -> i32 {
        2 * self.n_up as i32 - self.sites as i32
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    #[inline]
    pub fn word(&self, ordinal: usize) -> u64 {
        self.states[ordinal]
    }

    /// Ordinal of `word`, or a lookup error when it is outside the sector.
    pub fn index_of(&self, word: u64) -> Result<usize> {
        self.states.binary_search(&word).map_err(|_| Error::Lookup {
            word,
            sites: self.sites,
            n_up: self.n_up,
        })
    }

    #[inline]
    pub(crate) fn find(&self, word: u64) -> Option<usize> {
        self.states.binary_search(&word).ok()
    }

    /// Regroup the sector by the magnetization of `subset` (1-based sites).
    pub fn split(&self, subset: &[usize]) -> Result<SubsystemSplit> {
        SubsystemSplit::new(self, subset)
    }
}

/// Bit mask for 1-based site list; checks range and duplicates.
pub(crate) fn subset_mask(sites: usize, subset: &[usize]) -> Result<u64> {
    let mut mask = 0u64;
    for &s in subset {
        if s == 0 || s > sites {
            return Err(Error::param(format!("site {s} outside 1..={sites}")));
        }
        let bit = 1u64 << (s - 1);
        if mask & bit != 0 {
            return Err(Error::param(format!("site {s} listed twice")));
        }
        mask |= bit;
    }
    Ok(mask)
}

/// Gather the bits of `word` selected by `mask` into the low bits.
#[inline]
pub(crate) fn compress(word: u64, mask: u64) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if word & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m ^= low;
    }
    out
}

/// Colexicographic rank of a word among words of equal popcount.
#[inline]
pub(crate) fn colex_rank(word: u64) -> usize {
    let mut rank = 0u64;
    let mut w = word;
    let mut j = 1;
    while w != 0 {
        let pos = w.trailing_zeros() as usize;
        rank += binomial(pos, j);
        j += 1;
        w &= w - 1;
    }
    rank as usize
}

/// One magnetization block of a [`SubsystemSplit`].
#[derive(Debug, Clone)]
pub struct SplitBlock {
    /// Number of up spins inside the subset.
    pub a_popcount: usize,
    /// Number of distinct subset configurations (matrix rows).
    pub rows: usize,
    /// Number of distinct complement configurations (matrix columns).
    pub cols: usize,
}

/// Location of one sector state inside the block decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitEntry {
    pub block: u32,
    pub row: u32,
    pub col: u32,
}

/// Sector states regrouped as `(subset word, complement word)` pairs.
///
/// Every state with `k` up spins in the subset lands in the block for `k`,
/// at the row given by the colex rank of its compressed subset word and the
/// column given by that of its complement word. The map is a bijection onto
/// the union of block cells.
#[derive(Debug, Clone)]
pub struct SubsystemSplit {
    subset: Vec<usize>,
    mask: u64,
    blocks: Vec<SplitBlock>,
    entries: Vec<SplitEntry>,
}

impl SubsystemSplit {
    fn new(basis: &SectorBasis, subset: &[usize]) -> Result<Self> {
        let l = basis.sites();
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let mask = subset_mask(l, &sorted)?;
        let na = sorted.len();
        if na == 0 || na == l {
            return Err(Error::param(format!(
                "subset must be a nonempty proper subset of 1..={l}, got {} sites",
                na
            )));
        }
        let nb = l - na;
        let full = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        let comp = full & !mask;

        let n_up = basis.n_up();
        let mut block_of_k = vec![u32::MAX; na + 1];
        let mut blocks = Vec::new();
        for k in 0..=na.min(n_up) {
            if n_up - k > nb {
                continue;
            }
            block_of_k[k] = blocks.len() as u32;
            blocks.push(SplitBlock {
                a_popcount: k,
                rows: binomial(na, k) as usize,
                cols: binomial(nb, n_up - k) as usize,
            });
        }

        let entries = basis
            .states()
            .iter()
            .map(|&w| {
                let a = compress(w, mask);
                let b = compress(w, comp);
                let k = a.count_ones() as usize;
                SplitEntry {
                    block: block_of_k[k],
                    row: colex_rank(a) as u32,
                    col: colex_rank(b) as u32,
                }
            })
            .collect();

        Ok(Self {
            subset: sorted,
            mask,
            blocks,
            entries,
        })
    }

    /// Sorted 1-based sites of the subset.
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn blocks(&self) -> &[SplitBlock] {
        &self.blocks
    }

    /// Per-ordinal placement, indexed like the basis states.
    pub fn entries(&self) -> &[SplitEntry] {
        &self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_sectors() {
        let b = SectorBasis::half_filling(2).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        assert_eq!(SectorBasis::half_filling(4).unwrap().dim(), 6);
        assert_eq!(SectorBasis::half_filling(16).unwrap().dim(), 12870);
    }

    #[test]
    fn non_zero_magnetization() {
        let b = SectorBasis::new(4, 2).unwrap();
        assert_eq!(b.n_up(), 3);
        assert_eq!(b.dim(), 4);
        assert_eq!(SectorBasis::new(4, 4).unwrap().states(), &[0b1111]);
        assert_eq!(SectorBasis::new(4, -4).unwrap().states(), &[0]);
    }

    #[test]
    fn invalid_sectors_are_rejected() {
        assert!(SectorBasis::new(4, 1).is_err());
        assert!(SectorBasis::new(4, 6).is_err());
        assert!(SectorBasis::new(3, 1).is_err());
        assert!(SectorBasis::new(0, 0).is_err());
    }

    #[test]
    fn lookup_round_trip_and_error() {
        let b = SectorBasis::half_filling(4).unwrap();
        for (k, &w) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(w).unwrap(), k);
        }
        assert!(matches!(b.index_of(0b0111), Err(Error::Lookup { .. })));
    }

    #[test]
    fn split_block_sizes_for_l4() {
        let b = SectorBasis::half_filling(4).unwrap();
        let s = b.split(&[1, 2]).unwrap();
        let sizes: Vec<usize> = s.blocks().iter().map(|bl| bl.rows * bl.cols).collect();
        assert_eq!(sizes, vec![1, 4, 1]);

        let single = b.split(&[1]).unwrap();
        assert_eq!(single.blocks().len(), 2);

        let comp = b.split(&[3, 4]).unwrap();
        let mut a: Vec<usize> = s.blocks().iter().map(|bl| bl.rows * bl.cols).collect();
        let mut c: Vec<usize> = comp.blocks().iter().map(|bl| bl.rows * bl.cols).collect();
        a.sort();
        c.sort();
        assert_eq!(a, c);
        // the complement split is the transpose of the original
        for (e, f) in s.entries().iter().zip(comp.entries()) {
            let be = &s.blocks()[e.block as usize];
            let bf = &comp.blocks()[f.block as usize];
            assert_eq!(be.rows, bf.cols);
            assert_eq!((e.row, e.col), (f.col, f.row));
        }
    }

    #[test]
    fn split_rejects_empty_and_full() {
        let b = SectorBasis::half_filling(4).unwrap();
        assert!(b.split(&[]).is_err());
        assert!(b.split(&[1, 2, 3, 4]).is_err());
        assert!(b.split(&[5]).is_err());
        assert!(b.split(&[2, 2]).is_err());
    }

    #[test]
    fn split_is_a_bijection() {
        let b = SectorBasis::half_filling(8).unwrap();
        let s = b.split(&[2, 3, 7]).unwrap();
        let cells: HashSet<_> = s.entries().iter().copied().collect();
        assert_eq!(cells.len(), b.dim());
        let total: usize = s.blocks().iter().map(|bl| bl.rows * bl.cols).sum();
        assert_eq!(total, b.dim());
        for e in s.entries() {
            let bl = &s.blocks()[e.block as usize];
            assert!((e.row as usize) < bl.rows && (e.col as usize) < bl.cols);
        }
    }

    #[test]
    fn colex_rank_is_dense() {
        for n in 1..10usize {
            for k in 0..=n {
                let mut seen: Vec<usize> = (0u64..1 << n)
                    .filter(|w| w.count_ones() as usize == k)
                    .map(colex_rank)
                    .collect();
                seen.sort();
                assert_eq!(seen, (0..binomial(n, k) as usize).collect::<Vec<_>>());
            }
        }
    }
}
