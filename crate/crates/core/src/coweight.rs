use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SphError};

/// Label of the double coset `U pi^m U`: a non-increasing integer vector with
/// zero sum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct DominantCoweight(Vec<i64>);

impl DominantCoweight {
    pub fn new(m: Vec<i64>) -> Result<Self> {
        if m.windows(2).any(|w| w[0] < w[1]) {
            return Err(SphError::InvalidCoweight(format!("{m:?} is not non-increasing")));
        }
        let s: i64 = m.iter().sum();
        if s != 0 {
            return Err(SphError::InvalidCoweight(format!("{m:?} has sum {s}")));
        }
        if m.len() < 2 {
            return Err(SphError::InvalidCoweight(format!("{m:?} has fewer than 2 entries")));
        }
        Ok(DominantCoweight(m))
    }

    /// Dominant representative of the Weyl orbit of a zero-sum vector.
    pub fn sorted(mut m: Vec<i64>) -> Result<Self> {
        m.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(m)
    }

    pub fn zero(n: usize) -> Self {
        DominantCoweight(vec![0; n])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// `m_1 - m_n`
    pub fn spread(&self) -> i64 {
        self.0[0] - self.0[self.0.len() - 1]
    }

    /// Label of the inverse double coset, `sort-descending(-m)`.
    pub fn dual(&self) -> Self {
        DominantCoweight(self.0.iter().rev().map(|&x| -x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        DominantCoweight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Partial-sum dominance order: `self <= other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        let mut a = 0;
        let mut b = 0;
        for (x, y) in self.0.iter().zip(&other.0) {
            a += x;
            b += y;
            if a > b {
                return false;
            }
        }
        true
    }

    /// All dominant coweights of rank `n` with `m_1 - m_n <= max_spread`,
    /// in lexicographic order.
    pub fn all_up_to_spread(n: usize, max_spread: i64) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        fn rec(n: usize, lo: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            let top = cur.last().copied().unwrap_or(hi);
            for v in (lo..=top).rev() {
                cur.push(v);
                rec(n, lo, hi, cur, out);
                cur.pop();
            }
        }
        let mut raw = Vec::new();
        rec(n, -max_spread, max_spread, &mut cur, &mut raw);
        for m in raw {
            if m.iter().sum::<i64>() == 0 && m[0] - m[n - 1] <= max_spread {
                out.push(DominantCoweight(m));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Dominant coweights that can occur in the product of the double cosets
    /// labeled `a` and `b`: everything dominated by `a + b`.
    pub fn product_candidates(a: &Self, b: &Self) -> Vec<Self> {
        let top = a.add(b);
        Self::all_up_to_spread(a.rank(), top.spread())
            .into_iter()
            .filter(|m| m.dominated_by(&top))
            .collect()
    }
}

impl TryFrom<Vec<i64>> for DominantCoweight {
    type Error = SphError;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DominantCoweight> for Vec<i64> {
    fn from(m: DominantCoweight) -> Vec<i64> {
        m.0
    }
}

impl fmt::Debug for DominantCoweight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for DominantCoweight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}
