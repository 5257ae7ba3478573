use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product state with the listed sites flipped up and every other spin down.
/// Sites are 1-based, unique and kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExcitationPattern {
    n_ions: usize,
    flipped: Vec<usize>,
}

impl ExcitationPattern {
    pub fn new(n_ions: usize, sites: &[usize]) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::InvalidSize {
                what: "pattern chain",
                got: 0,
                min: 1,
            });
        }
        let mut flipped = sites.to_vec();
        flipped.sort_unstable();
        if let Some(&bad) = flipped.iter().find(|&&s| s == 0 || s > n_ions) {
            return Err(Error::domain(format!("site {bad} outside 1..={n_ions}")));
        }
        if flipped.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("duplicate site in pattern {sites:?}")));
        }
        Ok(ExcitationPattern { n_ions, flipped })
    }

    pub fn empty(n_ions: usize) -> Self {
        ExcitationPattern {
            n_ions,
            flipped: Vec::new(),
        }
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn flipped(&self) -> &[usize] {
        &self.flipped
    }

    pub fn excitations(&self) -> usize {
        self.flipped.len()
    }

    /// The site-inverted pattern, i → N + 1 − i.
    pub fn mirror(&self) -> Self {
        let mut flipped: Vec<usize> = self.flipped.iter().map(|&s| self.n_ions + 1 - s).collect();
        flipped.sort_unstable();
        ExcitationPattern {
            n_ions: self.n_ions,
            flipped,
        }
    }

    /// Bitmask with bit `i − 1` set for each flipped site.
    pub fn mask(&self) -> Result<u64> {
        if self.n_ions > 64 {
            return Err(Error::TooLarge {
                what: "chain for bitmask basis",
                got: self.n_ions,
                cap: 64,
                hint: "",
            });
        }
        Ok(self.flipped.iter().fold(0u64, |m, &s| m | 1 << (s - 1)))
    }

    /// n_i ∈ {0, 1} per site.
    pub fn occupations(&self) -> Vec<f64> {
        let mut n = vec![0.0; self.n_ions];
        for &s in &self.flipped {
            n[s - 1] = 1.0;
        }
        n
    }

    /// ⟨σ_i^z⟩ of the product state: +1 on flipped sites, −1 elsewhere.
    pub fn sz(&self) -> Vec<f64> {
        self.occupations().iter().map(|n| 2.0 * n - 1.0).collect()
    }
}

impl fmt::Display for ExcitationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.flipped.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", sites.join(","))
    }
}
