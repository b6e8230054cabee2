//! Multi-indices, their graded enumeration, and the symmetric Diophantine
//! system γ_j = 2β_jj + Σ_{i≠j} β_ij.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A finitely supported multi-index. Trailing zeros are not significant:
/// `(1,0)` and `(1)` are the same index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(mut entries: Vec<u32>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        Self { entries }
    }

    pub fn zero() -> Self {
        Self { entries: Vec::new() }
    }

    /// The unit index e_j (0-based position).
    pub fn unit(j: usize) -> Self {
        let mut e = vec![0; j + 1];
        e[j] = 1;
        Self { entries: e }
    }

    /// Entries without trailing zeros.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, j: usize) -> u32 {
        self.entries.get(j).copied().unwrap_or(0)
    }

    /// Entries padded with zeros to length `d`.
    pub fn padded(&self, d: usize) -> Vec<u32> {
        let mut v = self.entries.clone();
        v.resize(d.max(v.len()), 0);
        v
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// Number of positions up to the last nonzero entry.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.entries.len().max(other.entries.len());
        Self::new((0..n).map(|j| self.get(j) + other.get(j)).collect())
    }

    /// self - other when other ≤ self componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let n = self.entries.len().max(other.entries.len());
        let mut v = Vec::with_capacity(n);
        for j in 0..n {
            v.push(self.get(j).checked_sub(other.get(j))?);
        }
        Some(Self::new(v))
    }

    /// Index with entry `j` increased by one.
    pub fn raise(&self, j: usize) -> Self {
        let mut v = self.padded(j + 1);
        v[j] += 1;
        Self::new(v)
    }

    /// Index with entry `j` decreased by one, if positive.
    pub fn lower(&self, j: usize) -> Option<Self> {
        if self.get(j) == 0 {
            return None;
        }
        let mut v = self.entries.clone();
        v[j] -= 1;
        Some(Self::new(v))
    }

    /// γ! = Π γ_j!
    pub fn factorial(&self) -> BigUint {
        self.entries.iter().map(|&g| factorial(g)).product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.entries
    }
}

/// Graded order: total degree first, then lexicographically *descending*
/// entries, so that within degree 2 in two variables (2,0) < (1,1) < (0,2).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let n = self.entries.len().max(other.entries.len());
            for j in 0..n {
                match other.get(j).cmp(&self.get(j)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = if self.entries.is_empty() {
            vec!["0".into()]
        } else {
            self.entries.iter().map(|x| x.to_string()).collect()
        };
        write!(f, "({})", parts.join(","))
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;

    /// Accepts `2,2`, `(2,2)` or `[2,2]`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        if t.trim().is_empty() {
            return Ok(Self::zero());
        }
        let v = t
            .split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad multi-index entry `{x}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(v))
    }
}

/// Symmetric nonnegative integer matrix β, upper triangle stored densely.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairAssignment {
    d: usize,
    upper: Vec<u32>,
}

impl PairAssignment {
    pub fn zeros(d: usize) -> Self {
        Self { d, upper: vec![0; d * (d + 1) / 2] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.d - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// β_ij = β_ji.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.upper[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        let s = self.slot(i, j);
        self.upper[s] = v;
    }

    /// |β| = Σ_{i≤j} β_ij
    pub fn total(&self) -> u32 {
        self.upper.iter().sum()
    }

    /// Upper-triangle entries (i ≤ j) as `(i, j, β_ij)`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.d).flat_map(move |i| (i..self.d).map(move |j| (i, j, self.get(i, j))))
    }

    /// Row sums with doubled diagonal: 2β_jj + Σ_{i≠j} β_ij.
    pub fn marginal(&self) -> MultiIndex {
        MultiIndex::new(
            (0..self.d)
                .map(|j| (0..self.d).map(|i| if i == j { 2 * self.get(j, j) } else { self.get(i, j) }).sum())
                .collect(),
        )
    }
}

/// All γ supported in the first `d` positions with |γ| = n, in graded order.
pub fn enumerate_graded(d: usize, n: u32) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, n, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, rest: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex::new(cur.clone()));
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        fill(cur, pos + 1, rest - v, out);
    }
    cur[pos] = 0;
}

/// All γ in `d` variables with |γ| ≤ n, in graded order.
pub fn enumerate_up_to(d: usize, n: u32) -> Vec<MultiIndex> {
    (0..=n).flat_map(|k| enumerate_graded(d, k)).collect()
}

/// Every symmetric β with γ_j = 2β_jj + Σ_{i≠j} β_ij. Empty when |γ| is odd.
///
/// Rows are filled in order; within row i the off-diagonal entries β_ij (j>i)
/// are chosen first and the diagonal takes whatever even residual remains.
pub fn solve_diophantine(gamma: &MultiIndex) -> Vec<PairAssignment> {
    let d = gamma.support_len();
    let mut out = Vec::new();
    if gamma.degree() % 2 == 1 {
        return out;
    }
    if d == 0 {
        out.push(PairAssignment::zeros(0));
        return out;
    }
    let mut residual: Vec<u32> = gamma.padded(d);
    let mut beta = PairAssignment::zeros(d);
    solve_row(0, 1, &mut residual, &mut beta, &mut out);
    out
}

fn solve_row(i: usize, j: usize, residual: &mut [u32], beta: &mut PairAssignment, out: &mut Vec<PairAssignment>) {
    let d = residual.len();
    if i == d {
        out.push(beta.clone());
        return;
    }
    if j == d {
        // close row i with the diagonal
        if residual[i] % 2 == 1 {
            return;
        }
        let b = residual[i] / 2;
        beta.set(i, i, b);
        let saved = residual[i];
        residual[i] = 0;
        solve_row(i + 1, i + 2, residual, beta, out);
        residual[i] = saved;
        beta.set(i, i, 0);
        return;
    }
    let cap = residual[i].min(residual[j]);
    for v in (0..=cap).rev() {
        beta.set(i, j, v);
        residual[i] -= v;
        residual[j] -= v;
        solve_row(i, j + 1, residual, beta, out);
        residual[i] += v;
        residual[j] += v;
    }
    beta.set(i, j, 0);
}

/// n! exactly.
pub fn factorial(n: u32) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// n! / Π parts! exactly.
pub fn multinomial(n: u32, parts: &[u32]) -> Result<BigUint> {
    let s: u64 = parts.iter().map(|&p| p as u64).sum();
    if s != n as u64 {
        return Err(Error::InvalidParameter(format!("parts sum to {s}, expected {n}")));
    }
    // product of binomials avoids the large intermediate n!
    let mut acc = BigUint::one();
    let mut used = 0u32;
    for &p in parts {
        acc *= binomial(used + p, p);
        used += p;
    }
    Ok(acc)
}

/// C(n, k) exactly.
pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn graded_examples() {
        assert_eq!(enumerate_graded(2, 0), vec![mi(&[0, 0])]);
        assert_eq!(enumerate_graded(2, 2), vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        assert_eq!(enumerate_graded(3, 4).len(), 15);
    }

    #[test]
    fn graded_counts_are_stars_and_bars() {
        for d in 1..5usize {
            for n in 0..7u32 {
                let v = enumerate_graded(d, n);
                assert_eq!(BigUint::from(v.len()), binomial(n + d as u32 - 1, d as u32 - 1));
                assert!(v.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn worked_example_solutions() {
        let sols = solve_diophantine(&mi(&[2, 2]));
        assert_eq!(sols.len(), 2);
        let mut a = PairAssignment::zeros(2);
        a.set(0, 0, 1);
        a.set(1, 1, 1);
        let mut b = PairAssignment::zeros(2);
        b.set(0, 1, 2);
        assert!(sols.contains(&a) && sols.contains(&b));

        let sols = solve_diophantine(&mi(&[1, 1]));
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].get(0, 1), 1);
        assert!(solve_diophantine(&mi(&[3])).is_empty());
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(2, &[1, 1]).unwrap(), BigUint::from(2u32));
        assert_eq!(multinomial(5, &[5]).unwrap(), BigUint::from(1u32));
        assert_eq!(multinomial(6, &[2, 2, 2]).unwrap(), BigUint::from(90u32));
        assert!(multinomial(4, &[1, 1]).is_err());
        // against the factorial quotient
        let q = factorial(20) / (factorial(7) * factorial(6) * factorial(7));
        assert_eq!(multinomial(20, &[7, 6, 7]).unwrap(), q);
    }

    #[test]
    fn ordering_and_parsing() {
        assert!(mi(&[2, 0]) < mi(&[1, 1]) && mi(&[1, 1]) < mi(&[0, 2]));
        assert!(mi(&[0, 0, 5]) > mi(&[4]));
        assert_eq!(mi(&[1, 0, 0]), mi(&[1]));
        assert_eq!("(2,2)".parse::<MultiIndex>().unwrap(), mi(&[2, 2]));
        assert_eq!(mi(&[2, 2]).to_string(), "(2,2)");
        assert!("a,b".parse::<MultiIndex>().is_err());
    }
}
