//! Dense probability measures on a product space and their marginals.

use crate::error::{Error, Result};
use crate::space::{ProductSpace, Word};

/// Tolerance on `|Σ μ − 1|` for a vector to count as a probability measure.
pub const MASS_TOL: f64 = 1e-12;

/// Default threshold separating support from numerical zero.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;

fn check_simplex(probs: &[f64], expected_len: usize) -> Result<()> {
    if probs.len() != expected_len {
        return Err(Error::InvalidMeasure(format!(
            "expected {expected_len} entries, got {}",
            probs.len()
        )));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidMeasure(format!("entry {i} = {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMeasure(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

/// Sums `probs` (a vector over `space`) onto the sites in `subset`
/// (sorted, validated).
pub(crate) fn marginalize(space: &ProductSpace, probs: &[f64], subset: &[usize]) -> Vec<f64> {
    let comp = space.complement(subset);
    let inner = space.offsets(subset);
    let outer = space.offsets(&comp);
    inner
        .iter()
        .map(|&a| outer.iter().map(|&b| probs[a + b]).sum())
        .collect()
}

/// Sums an arbitrary vector over `space` onto the sites in `subset`, e.g. to
/// project a time derivative.
pub fn project(space: &ProductSpace, values: &[f64], subset: &[usize]) -> Result<Vec<f64>> {
    if values.len() != space.size() {
        return Err(Error::InvalidMeasure(format!(
            "expected {} entries, got {}",
            space.size(),
            values.len()
        )));
    }
    let subset = space.check_subset(subset)?;
    Ok(marginalize(space, values, &subset))
}

/// A probability vector over every word of a [`ProductSpace`], indexed by
/// the word's codec index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMeasure {
    space: ProductSpace,
    probs: Vec<f64>,
}

impl DenseMeasure {
    /// Validates nonnegativity and unit mass (within [`MASS_TOL`]).
    pub fn new(space: ProductSpace, probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, space.size())?;
        Ok(DenseMeasure { space, probs })
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn from_weights(space: ProductSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::InvalidMeasure(format!(
                "expected {} weights, got {}",
                space.size(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("weights sum to zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(DenseMeasure { space, probs })
    }

    pub(crate) fn from_raw(space: ProductSpace, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), space.size());
        DenseMeasure { space, probs }
    }

    pub fn uniform(space: ProductSpace) -> Self {
        let n = space.size();
        DenseMeasure {
            space,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(space: ProductSpace, word: &Word) -> Result<Self> {
        let idx = space.encode(word)?;
        let mut probs = vec![0.0; space.size()];
        probs[idx] = 1.0;
        Ok(DenseMeasure { space, probs })
    }

    /// Uniform over a list of words; repeated words receive proportionally more mass.
    pub fn uniform_on(space: ProductSpace, words: &[Word]) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidMeasure("empty word list".into()));
        }
        let mut weights = vec![0.0; space.size()];
        for w in words {
            weights[space.encode(w)?] += 1.0;
        }
        Self::from_weights(space, weights)
    }

    /// `∏_i p_i(x_i)` for the given per-site distributions.
    pub fn product(space: ProductSpace, site_marginals: &[Vec<f64>]) -> Result<Self> {
        if site_marginals.len() != space.n_sites() {
            return Err(Error::InvalidMeasure(format!(
                "expected {} site marginals, got {}",
                space.n_sites(),
                site_marginals.len()
            )));
        }
        for (i, m) in site_marginals.iter().enumerate() {
            check_simplex(m, space.alphabet_size(i))
                .map_err(|e| Error::InvalidMeasure(format!("site {i} marginal: {e}")))?;
        }
        let mut probs = vec![1.0; space.size()];
        for (site, m) in site_marginals.iter().enumerate() {
            scale_by_block(&space, &mut probs, &[site], m);
        }
        Ok(DenseMeasure { space, probs })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, word: &Word) -> Result<f64> {
        Ok(self.probs[self.space.encode(word)?])
    }

    /// The projection `μ_M` onto a site subset.
    pub fn marginal(&self, subset: &[usize]) -> Result<MarginalTable> {
        let sites = self.space.check_subset(subset)?;
        let probs = marginalize(&self.space, &self.probs, &sites);
        Ok(MarginalTable {
            space: self.space.sub_space(&sites),
            sites,
            probs,
        })
    }

    /// All single-site marginals `μ_i`, in site order.
    pub fn site_marginals(&self) -> Vec<Vec<f64>> {
        self.space
            .sites()
            .map(|i| marginalize(&self.space, &self.probs, &[i]))
            .collect()
    }

    /// `ν(x) = ∏_i μ_i(x_i)`.
    pub fn product_of_site_marginals(&self) -> DenseMeasure {
        let blocks: Vec<Vec<usize>> = self.space.sites().map(|i| vec![i]).collect();
        self.block_product_unchecked(&blocks)
    }

    /// `ν(x) = ∏_j μ_{Λ_j}(x_{Λ_j})` for a partition `{Λ_j}` of the sites.
    pub fn block_product(&self, blocks: &[Vec<usize>]) -> Result<DenseMeasure> {
        let blocks = check_partition(&self.space, blocks)?;
        Ok(self.block_product_unchecked(&blocks))
    }

    fn block_product_unchecked(&self, blocks: &[Vec<usize>]) -> DenseMeasure {
        let mut probs = vec![1.0; self.space.size()];
        for block in blocks {
            let m = marginalize(&self.space, &self.probs, block);
            scale_by_block(&self.space, &mut probs, block, &m);
        }
        DenseMeasure {
            space: self.space.clone(),
            probs,
        }
    }

    /// `½ Σ |μ − ν|`.
    pub fn tv_distance(&self, other: &DenseMeasure) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(tv_slices(&self.probs, &other.probs))
    }

    /// Words with `μ(x) > threshold`, in codec order.
    pub fn support(&self, threshold: f64) -> Vec<Word> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(i, _)| self.space.decode(i))
            .collect()
    }

    pub fn support_size(&self, threshold: f64) -> usize {
        self.probs.iter().filter(|&&p| p > threshold).count()
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &DenseMeasure) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Multiplies every state by `factor[x_block]`.
fn scale_by_block(space: &ProductSpace, probs: &mut [f64], block: &[usize], factor: &[f64]) {
    let comp = space.complement(block);
    let inner = space.offsets(block);
    let outer = space.offsets(&comp);
    for (&a, &f) in inner.iter().zip(factor) {
        for &b in &outer {
            probs[a + b] *= f;
        }
    }
}

/// Validates that `blocks` partition the sites; returns each block sorted.
pub fn check_partition(space: &ProductSpace, blocks: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; space.n_sites()];
    let mut out = Vec::with_capacity(blocks.len());
    for block in blocks {
        if block.is_empty() {
            return Err(Error::NotAPartition("empty block".into()));
        }
        let sorted = space
            .check_subset(block)
            .map_err(|e| Error::NotAPartition(e.to_string()))?;
        for &i in &sorted {
            if seen[i] {
                return Err(Error::NotAPartition(format!("site {i} in two blocks")));
            }
            seen[i] = true;
        }
        out.push(sorted);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::NotAPartition(format!("site {i} not covered")));
    }
    Ok(out)
}

/// A distribution over sub-words of a site subset `M`, in the codec order of
/// the sub-space `∏_{i∈M} K_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    sites: Vec<usize>,
    space: ProductSpace,
    probs: Vec<f64>,
}

impl MarginalTable {
    /// `sites` are the global site ids (sorted); `alphabet_sizes` their alphabets.
    pub fn new(sites: Vec<usize>, alphabet_sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if sites.len() != alphabet_sizes.len() {
            return Err(Error::InvalidSubset(
                "one alphabet size per site required".into(),
            ));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(
                "sites must be strictly increasing".into(),
            ));
        }
        if alphabet_sizes.contains(&0) {
            return Err(Error::InvalidSubset("empty alphabet".into()));
        }
        let space = ProductSpace::from_radices(alphabet_sizes);
        check_simplex(&probs, space.size())?;
        Ok(MarginalTable {
            sites,
            space,
            probs,
        })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Further projection onto `subset ⊆ self.sites()` (global site ids).
    pub fn marginal(&self, subset: &[usize]) -> Result<MarginalTable> {
        let mut local = Vec::with_capacity(subset.len());
        for s in subset {
            match self.sites.iter().position(|x| x == s) {
                Some(p) => local.push(p),
                None => {
                    return Err(Error::InvalidSubset(format!(
                        "site {s} not in marginal over {:?}",
                        self.sites
                    )))
                }
            }
        }
        let local = self.space.check_subset(&local)?;
        let probs = marginalize(&self.space, &self.probs, &local);
        Ok(MarginalTable {
            sites: local.iter().map(|&p| self.sites[p]).collect(),
            space: self.space.sub_space(&local),
            probs,
        })
    }

    pub fn same_domain(&self, other: &MarginalTable) -> bool {
        self.sites == other.sites && self.space == other.space
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ProductSpace {
        ProductSpace::new(vec![2, 2]).unwrap()
    }

    fn correlated_pair() -> DenseMeasure {
        DenseMeasure::new(pair(), vec![0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn rejects_non_simplex_vectors() {
        assert!(DenseMeasure::new(pair(), vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(DenseMeasure::new(pair(), vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(DenseMeasure::new(pair(), vec![1.0]).is_err());
        assert!(DenseMeasure::new(pair(), vec![0.25 + 1e-13, 0.25, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn marginal_examples() {
        let m = correlated_pair().marginal(&[0]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.5]);

        let point = DenseMeasure::point_mass(pair(), &Word::new(vec![1, 0])).unwrap();
        assert_eq!(point.marginal(&[1]).unwrap().probs(), &[1.0, 0.0]);

        // Codec order (0,0),(0,1),(1,0),(1,1): site 0 = 1 collects 0.3 + 0.4.
        let mu = DenseMeasure::new(pair(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = mu.marginal(&[0]).unwrap();
        assert!((m.probs()[0] - 0.3).abs() < 1e-15);
        assert!((m.probs()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_of_site_marginals_examples() {
        let nu = correlated_pair().product_of_site_marginals();
        assert_eq!(nu.probs(), &[0.25; 4]);

        let w = Word::new(vec![0, 1]);
        let point = DenseMeasure::point_mass(pair(), &w).unwrap();
        assert_eq!(point.product_of_site_marginals(), point);

        let prod = DenseMeasure::product(pair(), &[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let again = prod.product_of_site_marginals();
        assert!(again.max_abs_diff(&prod).unwrap() <= 1e-15);
    }

    #[test]
    fn block_product_examples() {
        let space = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let mu = DenseMeasure::uniform_on(
            space.clone(),
            &[Word::new(vec![0, 0, 0]), Word::new(vec![1, 1, 1])],
        )
        .unwrap();

        let singletons: Vec<Vec<usize>> = (0..3).map(|i| vec![i]).collect();
        assert_eq!(
            mu.block_product(&singletons).unwrap(),
            mu.product_of_site_marginals()
        );
        assert_eq!(mu.block_product(&[vec![0, 1, 2]]).unwrap(), mu);

        // Enumerated by hand: ¼ on (0,0,0),(0,0,1),(1,1,0),(1,1,1).
        let nu = mu.block_product(&[vec![0, 1], vec![2]]).unwrap();
        let expected = [0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25];
        assert_eq!(nu.probs(), &expected);
    }

    #[test]
    fn block_product_rejects_non_partitions() {
        let space = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let mu = DenseMeasure::uniform(space);
        assert!(matches!(
            mu.block_product(&[vec![0, 1]]),
            Err(Error::NotAPartition(_))
        ));
        assert!(mu.block_product(&[vec![0, 1], vec![1, 2]]).is_err());
        assert!(mu.block_product(&[vec![0, 1, 2], vec![]]).is_err());
        assert!(mu.block_product(&[vec![0, 1], vec![2, 3]]).is_err());
    }

    #[test]
    fn tv_examples() {
        let uniform = DenseMeasure::uniform(pair());
        assert_eq!(uniform.tv_distance(&uniform).unwrap(), 0.0);
        let point = DenseMeasure::point_mass(pair(), &Word::new(vec![0, 0])).unwrap();
        assert!((point.tv_distance(&uniform).unwrap() - 0.75).abs() < 1e-15);
        let half = DenseMeasure::new(pair(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((half.tv_distance(&uniform).unwrap() - 0.5).abs() < 1e-15);

        let other = DenseMeasure::uniform(ProductSpace::new(vec![4]).unwrap());
        assert_eq!(uniform.tv_distance(&other), Err(Error::SpaceMismatch));
    }

    #[test]
    fn support_examples() {
        let w = Word::new(vec![1, 0]);
        let point = DenseMeasure::point_mass(pair(), &w).unwrap();
        assert_eq!(point.support(0.0), vec![w]);
        assert_eq!(DenseMeasure::uniform(pair()).support(0.0).len(), 4);
        let mu = DenseMeasure::new(pair(), vec![0.1, 0.9, 0.0, 0.0]).unwrap();
        assert_eq!(
            mu.support(0.05),
            vec![Word::new(vec![0, 0]), Word::new(vec![0, 1])]
        );
    }

    #[test]
    fn nested_marginal_of_table() {
        let space = ProductSpace::new(vec![2, 3, 2]).unwrap();
        let mu = DenseMeasure::from_weights(space, (1..=12).map(|k| k as f64).collect()).unwrap();
        let m02 = mu.marginal(&[0, 2]).unwrap();
        let direct = mu.marginal(&[2]).unwrap();
        let nested = m02.marginal(&[2]).unwrap();
        assert_eq!(nested.sites(), &[2]);
        for (a, b) in nested.probs().iter().zip(direct.probs()) {
            assert!((a - b).abs() <= 1e-14);
        }
        assert!(m02.marginal(&[1]).is_err());
    }
}
