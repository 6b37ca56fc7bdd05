use std::fmt;

use serde::{Deserialize, Serialize};

/// Zero-based type indices `(n_1, ..., n_t)`.
///
/// The date-`T` history is never stored: date-`T` values are indexed by the
/// date-`(T-1)` history.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeHistory(pub Vec<usize>);

impl TypeHistory {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// The `t`-tuple of lowest types.
    pub fn lowest(t: usize) -> Self {
        Self(vec![0; t])
    }

    pub fn push(&self, n: usize) -> Self {
        let mut v = self.0.clone();
        v.push(n);
        Self(v)
    }

    /// Mixed-radix rank of the entries after the first, in lexicographic
    /// order. Histories sharing a root map onto `0..n_types^(len-1)`.
    pub fn tail_rank(&self, n_types: usize) -> usize {
        self.0.iter().skip(1).fold(0, |acc, &i| acc * n_types + i)
    }

    /// Inverse of [`TypeHistory::tail_rank`].
    pub fn from_tail_rank(root: usize, len: usize, n_types: usize, mut rank: usize) -> Self {
        let mut v = vec![0; len];
        v[0] = root;
        for slot in v.iter_mut().skip(1).rev() {
            *slot = rank % n_types;
            rank /= n_types;
        }
        Self(v)
    }

    /// Lexicographically ordered histories of length `t`, optionally with the
    /// first entry fixed.
    pub fn enumerate(n_types: usize, t: usize, root: Option<usize>) -> Vec<Self> {
        let roots: Vec<usize> = match root {
            Some(r) => vec![r],
            None => (0..n_types).collect(),
        };
        let per_root = n_types.pow(t.saturating_sub(1) as u32);
        let mut out = Vec::with_capacity(roots.len() * per_root);
        for r in roots {
            for k in 0..per_root {
                out.push(Self::from_tail_rank(r, t, n_types, k));
            }
        }
        out
    }
}

impl fmt::Display for TypeHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}
