//! Markov chain on equal-size bipartitions induced by random adjacent SWAPs.
//!
//! A SWAP on bond `(i, i+1)` relabels two sites, so tracking which sites a
//! fixed subsystem occupies turns a random SWAP circuit into a random walk
//! over canonical bipartitions. Transition entries are `k_ij / (L-1)` with
//! integer `k_ij`; they are kept as integers and exposed either exactly
//! (`Ratio<u64>`) or in any [`Scalar`] precision.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entanglement::{enumerate_bipartitions, Bipartition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest chain length for which the dense transition matrix is built.
pub const MAX_MARKOV_SITES: usize = 14;

/// Bipartition after a SWAP on sites `(bond, bond+1)`.
pub fn swap_action(b: Bipartition, bond: usize) -> Result<Bipartition> {
    let l = b.sites();
    if bond == 0 || bond >= l {
        return Err(Error::param(format!("bond ({bond}, {}) outside 1..{l}", bond + 1)));
    }
    Ok(swap_mask(l, b.mask(), bond - 1))
}

#[inline]
fn swap_mask(sites: usize, mask: u64, shift: usize) -> Bipartition {
    let pair = (mask >> shift) & 0b11;
    let m = if pair == 0b01 || pair == 0b10 { mask ^ (0b11 << shift) } else { mask };
    Bipartition::canonical(sites, m)
}

/// Integer transition counts over canonical bipartitions.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    sites: usize,
    states: Vec<Bipartition>,
    counts: Vec<u32>,
}

impl TransitionMatrix {
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of states `N`.
    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Bipartition] {
        &self.states
    }

    pub fn index_of(&self, b: &Bipartition) -> Option<usize> {
        self.states.binary_search_by_key(&b.mask(), |s| s.mask()).ok()
    }

    /// Number of bonds taking state `i` to state `j`.
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n() + j]
    }

    /// Exact `P_ij`.
    pub fn exact(&self, i: usize, j: usize) -> Ratio<u64> {
        Ratio::new(self.count(i, j) as u64, (self.sites - 1) as u64)
    }

    pub fn probability<T: Scalar>(&self, i: usize, j: usize) -> T {
        T::of(self.count(i, j) as f64) / T::of((self.sites - 1) as f64)
    }

    pub fn matrix<T: Scalar>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| self.probability(i, j))
    }

    /// `k_ij == k_ji` for every pair.
    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (i + 1..n).all(|j| self.count(i, j) == self.count(j, i)))
    }

    /// Every row and column of counts sums to `L - 1` (exact).
    pub fn is_doubly_stochastic(&self) -> bool {
        let n = self.n();
        let target = (self.sites - 1) as u32;
        (0..n).all(|i| (0..n).map(|j| self.count(i, j)).sum::<u32>() == target)
            && (0..n).all(|j| (0..n).map(|i| self.count(i, j)).sum::<u32>() == target)
    }

    /// Row sums in floating point.
    pub fn row_sums<T: Scalar>(&self) -> Vec<T> {
        (0..self.n())
            .map(|i| (0..self.n()).fold(T::zero(), |a, j| a + self.probability::<T>(i, j)))
            .collect()
    }

    /// Column sums in floating point.
    pub fn col_sums<T: Scalar>(&self) -> Vec<T> {
        (0..self.n())
            .map(|j| (0..self.n()).fold(T::zero(), |a, i| a + self.probability::<T>(i, j)))
            .collect()
    }

    /// `max |u - uP|` for the uniform vector `u`.
    pub fn uniform_residual<T: Scalar>(&self) -> T {
        let n = self.n();
        let u = T::one() / T::of(n as f64);
        let mut worst = T::zero();
        for j in 0..n {
            let col = (0..n).fold(T::zero(), |a, i| a + u * self.probability::<T>(i, j));
            let d = (col - u).abs();
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

/// Build `P_ij = k_ij / (L-1)` for `4 <= L <= MAX_MARKOV_SITES`.
pub fn transition_matrix(sites: usize) -> Result<TransitionMatrix> {
    if sites < 4 || sites % 2 != 0 {
        return Err(Error::param(format!("SWAP chain needs even L >= 4, got {sites}")));
    }
    if sites > MAX_MARKOV_SITES {
        return Err(Error::Capacity(format!(
            "dense transition matrix limited to L <= {MAX_MARKOV_SITES}, got {sites}"
        )));
    }
    let states = enumerate_bipartitions(sites)?;
    let n = states.len();
    let mut counts = vec![0u32; n * n];
    for (i, b) in states.iter().enumerate() {
        for shift in 0..sites - 1 {
            let next = swap_mask(sites, b.mask(), shift);
            let j = states
                .binary_search_by_key(&next.mask(), |s| s.mask())
                .expect("SWAP keeps bipartitions canonical");
            counts[i * n + j] += 1;
        }
    }
    Ok(TransitionMatrix { sites, states, counts })
}

/// Left eigenvector for eigenvalue 1: solves `(P^T - I) pi = 0` with the
/// last equation replaced by `sum(pi) = 1`, then polishes the residual once.
pub fn stationary_distribution<T: Scalar>(p: &TransitionMatrix) -> Result<DVector<T>> {
    let n = p.n();
    let mut a = p.matrix::<T>().transpose();
    for i in 0..n {
        a[(i, i)] -= T::one();
    }
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut rhs = DVector::<T>::zeros(n);
    rhs[n - 1] = T::one();
    let lu = a.clone().lu();
    let mut pi = lu.solve(&rhs).ok_or_else(|| Error::numeric("stationary system is singular (chain not irreducible)"))?;
    let r = &rhs - &a * &pi;
    if let Some(dx) = lu.solve(&r) {
        pi += dx;
    }
    Ok(pi)
}

/// Second-largest eigenvalue modulus of `P` (symmetric, so a real spectrum).
pub fn slem<T: Scalar>(p: &TransitionMatrix) -> T {
    let mut ev: Vec<T> = p.matrix::<T>().symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    ev.get(1).copied().unwrap_or_else(T::zero)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    pub has_self_loop: bool,
    /// gcd of cycle lengths through the class of state 0.
    pub period: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Irreducibility by reachability both ways from state 0; period from BFS
/// levels (gcd of `level(u) + 1 - level(v)` over edges).
pub fn verify_ergodicity(p: &TransitionMatrix) -> ErgodicityReport {
    let n = p.n();
    let bfs = |forward: bool| -> Vec<Option<usize>> {
        let mut level = vec![None; n];
        level[0] = Some(0);
        let mut q = VecDeque::from([0usize]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                let c = if forward { p.count(u, v) } else { p.count(v, u) };
                if c > 0 && level[v].is_none() {
                    level[v] = Some(level[u].unwrap() + 1);
                    q.push_back(v);
                }
            }
        }
        level
    };
    let fwd = bfs(true);
    let bwd = bfs(false);
    let irreducible = fwd.iter().all(Option::is_some) && bwd.iter().all(Option::is_some);
    let mut period = 0;
    for u in 0..n {
        for v in 0..n {
            if let (Some(lu), Some(lv)) = (fwd[u], fwd[v]) {
                if p.count(u, v) > 0 {
                    period = gcd(period, (lu + 1).abs_diff(lv));
                }
            }
        }
    }
    let has_self_loop = (0..n).any(|i| p.count(i, i) > 0);
    ErgodicityReport { irreducible, aperiodic: period == 1, has_self_loop, period }
}

/// Empirical occupation of a simulated SWAP walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Total-variation distance to the uniform law.
    pub tv_distance: f64,
}

/// Walk from the half-chain bipartition for `steps` SWAPs, counting the
/// states visited after the first `burn_in`.
pub fn monte_carlo_occupation<R: Rng + ?Sized>(
    sites: usize,
    steps: u64,
    burn_in: u64,
    rng: &mut R,
) -> Result<Occupation> {
    if steps <= burn_in {
        return Err(Error::param(format!("steps ({steps}) must exceed burn-in ({burn_in})")));
    }
    let states = enumerate_bipartitions(sites)?;
    let n = states.len();
    let mut counts = vec![0u64; n];
    let mut mask = (1u64 << (sites / 2)) - 1;
    for step in 0..steps {
        let shift = rng.random_range(0..sites - 1);
        mask = swap_mask(sites, mask, shift).mask();
        if step >= burn_in {
            let j = states.binary_search_by_key(&mask, |s| s.mask()).expect("canonical state");
            counts[j] += 1;
        }
    }
    let total = (steps - burn_in) as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let u = 1.0 / n as f64;
    let tv_distance = 0.5 * frequencies.iter().map(|f| (f - u).abs()).sum::<f64>();
    Ok(Occupation { counts, frequencies, tv_distance })
}

/// Summary written by the `markov` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub symmetric: bool,
    pub doubly_stochastic: bool,
    pub irreducible: bool,
    pub aperiodic: bool,
    pub slem: f64,
    pub tv_distance: f64,
    pub stationary: Vec<f64>,
}

/// Build, verify, and simulate the chain for one `L`.
pub fn markov_report<R: Rng + ?Sized>(sites: usize, mc_steps: u64, burn_in: u64, rng: &mut R) -> Result<MarkovReport> {
    let p = transition_matrix(sites)?;
    let erg = verify_ergodicity(&p);
    let w = stationary_distribution::<f64>(&p)?;
    let occ = monte_carlo_occupation(sites, mc_steps, burn_in, rng)?;
    Ok(MarkovReport {
        sites,
        n: p.n(),
        symmetric: p.is_symmetric(),
        doubly_stochastic: p.is_doubly_stochastic(),
        irreducible: erg.irreducible,
        aperiodic: erg.aperiodic,
        slem: slem::<f64>(&p),
        tv_distance: occ.tv_distance,
        stationary: w.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(l: usize, s: &[usize]) -> Bipartition {
        Bipartition::new(l, s).unwrap()
    }

    #[test]
    fn swap_examples() {
        assert_eq!(swap_action(bp(4, &[1, 2]), 2).unwrap(), bp(4, &[1, 3]));
        assert_eq!(swap_action(bp(4, &[1, 2]), 1).unwrap(), bp(4, &[1, 2]));
        assert_eq!(swap_action(bp(4, &[1, 3]), 1).unwrap(), bp(4, &[1, 4]));
        assert!(swap_action(bp(4, &[1, 3]), 4).is_err());
    }

    #[test]
    fn l4_matrix() {
        let p = transition_matrix(4).unwrap();
        let want = [[2, 1, 0], [1, 0, 2], [0, 2, 1]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.exact(i, j), Ratio::new(want[i][j], 3));
            }
        }
    }

    #[test]
    fn half_chain_self_loop() {
        for l in [4, 6, 8, 10] {
            let p = transition_matrix(l).unwrap();
            let half = bp(l, &(1..=l / 2).collect::<Vec<_>>());
            let i = p.index_of(&half).unwrap();
            assert_eq!(p.exact(i, i), Ratio::new((l - 2) as u64, (l - 1) as u64));
        }
    }

    #[test]
    fn size_limits() {
        assert!(transition_matrix(2).is_err());
        assert!(transition_matrix(5).is_err());
        assert!(matches!(transition_matrix(16), Err(Error::Capacity(_))));
    }

    #[test]
    fn l4_ergodicity() {
        let p = transition_matrix(4).unwrap();
        let r = verify_ergodicity(&p);
        assert!(r.irreducible && r.aperiodic && r.has_self_loop);
        let loops: Vec<bool> = (0..3).map(|i| p.count(i, i) > 0).collect();
        assert_eq!(loops, vec![true, false, true]);
    }

    #[test]
    fn empty_walk_is_rejected() {
        let mut rng = rand::rng();
        assert!(monte_carlo_occupation(4, 10, 10, &mut rng).is_err());
    }
}
