use std::fmt;
use std::ops::{Add, Deref};

use serde::{Deserialize, Serialize};

/// Multi-index `α = (α₁, …, αₙ)` with order `|α| = Σ αᵢ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit index `eᵢ` in dimension `n`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `self ≤ other` componentwise.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self - other`, if `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        other
            .le(self)
            .then(|| MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn with_incremented(&self, i: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    /// `C(α, β) = Π C(αᵢ, βᵢ)`; zero unless `β ≤ α`.
    pub fn binomial(&self, beta: &MultiIndex) -> u64 {
        if !beta.le(self) {
            return 0;
        }
        self.0
            .iter()
            .zip(&beta.0)
            .map(|(&a, &b)| binomial(a, b))
            .product()
    }

    /// All `β ≤ α`, in lexicographic order.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.0.len()))];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=a).map(move |b| {
                        let mut v = prefix.0.clone();
                        v.push(b);
                        MultiIndex(v)
                    })
                })
                .collect();
        }
        out
    }

    /// All multi-indices in dimension `n` with `|α| ≤ m`, graded then
    /// lexicographic.
    pub fn up_to(n: usize, m: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=m {
            out.extend(Self::of_order(n, order));
        }
        out
    }

    /// All multi-indices in dimension `n` with `|α| = m`.
    pub fn of_order(n: usize, m: u32) -> Vec<MultiIndex> {
        if n == 0 {
            return if m == 0 { vec![MultiIndex(vec![])] } else { vec![] };
        }
        let mut out = Vec::new();
        for first in (0..=m).rev() {
            for rest in Self::of_order(n - 1, m - first) {
                let mut v = vec![first];
                v.extend(rest.0);
                out.push(MultiIndex(v));
            }
        }
        out
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl Deref for MultiIndex {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.0.len(), rhs.0.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_binomials() {
        assert_eq!(MultiIndex::up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex::of_order(3, 2).len(), 6);
        let a = MultiIndex::new(vec![2, 1]);
        assert_eq!(a.below().len(), 6);
        assert_eq!(a.binomial(&MultiIndex::new(vec![1, 1])), 2);
        assert_eq!(a.binomial(&MultiIndex::new(vec![3, 0])), 0);
        assert_eq!(MultiIndex::new(vec![4]).binomial(&MultiIndex::new(vec![2])), 6);
    }

    #[test]
    fn sum_and_difference() {
        let a = MultiIndex::new(vec![1, 2]);
        let b = MultiIndex::new(vec![1, 0]);
        assert_eq!(&a + &b, MultiIndex::new(vec![2, 2]));
        assert_eq!(a.checked_sub(&b), Some(MultiIndex::new(vec![0, 2])));
        assert_eq!(b.checked_sub(&a), None);
    }
}
