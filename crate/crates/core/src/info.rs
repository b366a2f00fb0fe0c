//! Entropy and relative entropy, with the convention `0 ln 0 = 0`.

use crate::error::{Error, Result};
use crate::measure::{DenseMeasure, MarginalTable};

/// `Σ p ln p` over a probability vector (the negative Shannon entropy).
pub fn neg_entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum()
}

/// `H(μ) = Σ_x μ(x) ln μ(x)`, the Lyapunov function of the recombination
/// flow. Lies in `[-ln |X|, 0]` and never increases along trajectories.
pub fn entropy(mu: &DenseMeasure) -> f64 {
    neg_entropy_of(mu.probs())
}

/// `Σ p ln(p/q)`. Fails when `p > 0` at an index where `q = 0`.
pub fn kl_of(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::DivergenceUndefined { index: i, p: pi });
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc)
}

/// `H(p | q) = Σ p ln(p/q)` for two tables over the same site subset.
pub fn kl_divergence(p: &MarginalTable, q: &MarginalTable) -> Result<f64> {
    if !p.same_domain(q) {
        return Err(Error::InvalidSubset(format!(
            "tables over {:?} and {:?}",
            p.sites(),
            q.sites()
        )));
    }
    kl_of(p.probs(), q.probs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ProductSpace, Word};

    fn table(probs: Vec<f64>) -> MarginalTable {
        MarginalTable::new(vec![0], vec![probs.len()], probs).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let point = DenseMeasure::point_mass(space.clone(), &Word::new(vec![1, 1])).unwrap();
        assert_eq!(entropy(&point), 0.0);

        let uniform = DenseMeasure::uniform(space);
        assert!((entropy(&uniform) + 4f64.ln()).abs() < 1e-15);
        assert!((entropy(&uniform) + 1.386294).abs() < 1e-6);

        let mu = DenseMeasure::new(ProductSpace::new(vec![2]).unwrap(), vec![0.3, 0.7]).unwrap();
        let direct = 0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln();
        assert!((entropy(&mu) - direct).abs() < 1e-15);
        assert!((entropy(&mu) + 0.610864).abs() < 1e-6);
    }

    #[test]
    fn kl_examples() {
        let p = table(vec![0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);

        let point = table(vec![1.0, 0.0]);
        let half = table(vec![0.5, 0.5]);
        assert!((kl_divergence(&point, &half).unwrap() - 2f64.ln()).abs() < 1e-15);

        let direct = 0.3 * (0.3f64 / 0.5).ln() + 0.7 * (0.7f64 / 0.5).ln();
        let kl = kl_divergence(&p, &half).unwrap();
        assert!((kl - direct).abs() < 1e-15);
        assert!((kl - 0.082282).abs() < 1e-6);
    }

    #[test]
    fn kl_undefined_outside_support() {
        let p = table(vec![0.5, 0.5]);
        let q = table(vec![1.0, 0.0]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::DivergenceUndefined { index: 1, .. })
        ));
        // Zero mass in p where q vanishes is fine.
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn kl_rejects_mismatched_domains() {
        let p = table(vec![0.5, 0.5]);
        let q = MarginalTable::new(vec![1], vec![2], vec![0.5, 0.5]).unwrap();
        assert!(kl_divergence(&p, &q).is_err());
    }
}
