//! Finite product spaces `X = K_1 × … × K_n` and the mixed-radix word codec.
//!
//! Sites are indexed from 0. A word is encoded with site 0 as the most
//! significant digit, so for binary pairs `(0,0) → 0`, `(0,1) → 1`,
//! `(1,0) → 2`, `(1,1) → 3`. Everything that stores a dense vector over a
//! product space relies on this ordering.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on `|X|` for dense representations.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

/// A point of a product space: one letter code per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_letters(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(letters: Vec<usize>) -> Self {
        Word(letters)
    }
}

impl From<&[usize]> for Word {
    fn from(letters: &[usize]) -> Self {
        Word(letters.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// The index set `Λ = {0, …, n-1}` together with per-site alphabet sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ProductSpace {
    /// Builds a space with the default state cap of `2^24`.
    pub fn new(alphabet_sizes: Vec<usize>) -> Result<Self> {
        Self::with_cap(alphabet_sizes, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(alphabet_sizes: Vec<usize>, cap: usize) -> Result<Self> {
        if alphabet_sizes.is_empty() {
            return Err(Error::NoSites);
        }
        if let Some(site) = alphabet_sizes.iter().position(|&k| k == 0) {
            return Err(Error::EmptyAlphabet { site });
        }
        let size: u128 = alphabet_sizes.iter().map(|&k| k as u128).product();
        if size > cap as u128 {
            return Err(Error::CapExceeded { size, cap });
        }
        Ok(Self::from_radices(alphabet_sizes))
    }

    /// Unchecked constructor; also used for the (possibly empty) sub-spaces of
    /// a validated space, whose size is bounded by the parent's.
    pub(crate) fn from_radices(radices: Vec<usize>) -> Self {
        let mut strides = vec![1; radices.len()];
        for i in (0..radices.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radices[i + 1];
        }
        let size = radices.iter().product();
        ProductSpace {
            radices,
            strides,
            size,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.radices.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.radices
    }

    pub fn alphabet_size(&self, site: usize) -> usize {
        self.radices[site]
    }

    /// `|X|`
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sites(&self) -> std::ops::Range<usize> {
        0..self.radices.len()
    }

    pub fn check_letters(&self, letters: &[usize]) -> Result<()> {
        if letters.len() != self.n_sites() {
            return Err(Error::InvalidWord(format!(
                "expected {} letters, got {}",
                self.n_sites(),
                letters.len()
            )));
        }
        for (site, (&l, &k)) in letters.iter().zip(&self.radices).enumerate() {
            if l >= k {
                return Err(Error::InvalidWord(format!(
                    "letter {l} at site {site} outside alphabet of size {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn encode(&self, word: &Word) -> Result<usize> {
        self.encode_letters(word.letters())
    }

    pub fn encode_letters(&self, letters: &[usize]) -> Result<usize> {
        self.check_letters(letters)?;
        Ok(self.encode_unchecked(letters))
    }

    pub(crate) fn encode_unchecked(&self, letters: &[usize]) -> usize {
        letters.iter().zip(&self.strides).map(|(l, s)| l * s).sum()
    }

    /// Inverse of [`encode`](Self::encode). Panics if `index >= size()`.
    pub fn decode(&self, index: usize) -> Word {
        assert!(index < self.size, "state index {index} out of range");
        Word(self.decode_letters(index))
    }

    fn decode_letters(&self, mut index: usize) -> Vec<usize> {
        let mut letters = vec![0; self.radices.len()];
        for i in (0..self.radices.len()).rev() {
            letters[i] = index % self.radices[i];
            index /= self.radices[i];
        }
        letters
    }

    /// Iterates over all words in codec order.
    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.size).map(|s| self.decode(s))
    }

    /// Validates a site subset and returns it sorted in site order.
    pub fn check_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidSubset(format!("site {} repeated", w[0])));
            }
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= self.n_sites()) {
            return Err(Error::InvalidSubset(format!(
                "site {bad} not in a space with {} sites",
                self.n_sites()
            )));
        }
        Ok(sorted)
    }

    /// Sites not in `subset`. Assumes `subset` is valid.
    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        self.sites().filter(|i| !subset.contains(i)).collect()
    }

    /// The space `∏_{i∈M} K_i` of sub-words over a validated, sorted subset.
    pub fn sub_space(&self, subset: &[usize]) -> ProductSpace {
        ProductSpace::from_radices(subset.iter().map(|&i| self.radices[i]).collect())
    }

    /// For every sub-word index `a` over `subset` (codec order of the
    /// sub-space), the contribution of those letters to the full index.
    ///
    /// For complementary subsets `I` and `C`, every state is uniquely
    /// `offsets(I)[a] + offsets(C)[b]`.
    pub fn offsets(&self, subset: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for &site in subset {
            let stride = self.strides[site];
            let k = self.radices[site];
            let mut next = Vec::with_capacity(out.len() * k);
            for &base in &out {
                for l in 0..k {
                    next.push(base + l * stride);
                }
            }
            out = next;
        }
        out
    }

    /// Index of `x_M` in the sub-space over `subset`, for a full state index.
    pub fn project_index(&self, index: usize, subset: &[usize]) -> usize {
        let mut sub = 0;
        for &site in subset {
            let letter = (index / self.strides[site]) % self.radices[site];
            sub = sub * self.radices[site] + letter;
        }
        sub
    }

    /// Restriction `x_M`: the letters of `word` at the sites of `subset`, in site order.
    pub fn restrict(&self, word: &Word, subset: &[usize]) -> Result<Word> {
        self.check_letters(word.letters())?;
        let subset = self.check_subset(subset)?;
        Ok(Word(subset.iter().map(|&i| word.0[i]).collect()))
    }
}

impl fmt::Display for ProductSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.radices.iter().map(|k| k.to_string()).collect();
        write!(f, "{} ({} states)", sizes.join("×"), self.size)
    }
}
