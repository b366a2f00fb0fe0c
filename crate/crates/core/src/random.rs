//! Seeded random instances for property tests and experiments.
//!
//! Measures are drawn from the flat Dirichlet distribution (normalized
//! `Exp(1)` weights), i.e. uniformly over the probability simplex.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::frames::{FrameSystem, Legend, SimilarityMatrix};
use crate::measure::DenseMeasure;
use crate::space::{ProductSpace, Word};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform point of the simplex with `n` vertices.
pub fn flat_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn random_measure<R: Rng + ?Sized>(rng: &mut R, space: &ProductSpace) -> DenseMeasure {
    DenseMeasure::from_raw(space.clone(), flat_simplex(rng, space.size()))
}

/// Product of independently drawn flat-simplex site marginals.
pub fn random_product_measure<R: Rng + ?Sized>(rng: &mut R, space: &ProductSpace) -> DenseMeasure {
    let marginals: Vec<Vec<f64>> = space
        .alphabet_sizes()
        .iter()
        .map(|&k| flat_simplex(rng, k))
        .collect();
    DenseMeasure::product(space.clone(), &marginals).expect("marginals lie on the simplex")
}

/// Between 1 and `max_sites` sites with alphabets of size 2..=`max_alphabet`,
/// redrawn until `|X| ≤ max_states`.
pub fn random_space<R: Rng + ?Sized>(
    rng: &mut R,
    min_sites: usize,
    max_sites: usize,
    max_alphabet: usize,
    max_states: usize,
) -> ProductSpace {
    loop {
        let n = rng.random_range(min_sites..=max_sites);
        let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_alphabet)).collect();
        if let Ok(s) = ProductSpace::with_cap(sizes, max_states) {
            return s;
        }
    }
}

/// Random frames (nonempty subsets). `t0 = Some(b)` redraws until the T0
/// verdict equals `b`; asking for a non-T0 system on one site never returns.
pub fn random_frame_system<R: Rng + ?Sized>(
    rng: &mut R,
    space: &ProductSpace,
    t0: Option<bool>,
) -> FrameSystem {
    let n = space.n_sites();
    assert!(
        !(n < 2 && t0 == Some(false)),
        "every system on one site is T0"
    );
    loop {
        let count = rng.random_range(0..=n + 2);
        let frames: Vec<Vec<usize>> = (0..count)
            .map(|_| loop {
                let f: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                if !f.is_empty() {
                    break f;
                }
            })
            .collect();
        let fs = FrameSystem::new(space.clone(), &frames).expect("valid frames");
        match t0 {
            Some(want) if fs.is_t0().holds != want => continue,
            _ => return fs,
        }
    }
}

/// Symmetric matrices with entries uniform in `[lo, hi]`.
pub fn random_legend<R: Rng + ?Sized>(
    rng: &mut R,
    system: &FrameSystem,
    lo: f64,
    hi: f64,
) -> Legend {
    let space = system.space();
    let matrices = system
        .frames()
        .iter()
        .map(|f| {
            let d: usize = f.sites().iter().map(|&i| space.alphabet_size(i)).product();
            let mut v = vec![0.0; d * d];
            for a in 0..d {
                for c in a..d {
                    let x = rng.random_range(lo..=hi);
                    v[a * d + c] = x;
                    v[c * d + a] = x;
                }
            }
            SimilarityMatrix::new(space, f.clone(), v).expect("symmetric and positive")
        })
        .collect();
    Legend::new(system, matrices).expect("one matrix per frame")
}

/// A seed in which every site shows every letter: `max_k |K_i|` words built
/// from per-site shuffles, plus up to `extra` random words.
pub fn covering_seed<R: Rng + ?Sized>(
    rng: &mut R,
    space: &ProductSpace,
    extra: usize,
) -> Vec<Word> {
    let m = space.alphabet_sizes().iter().copied().max().unwrap_or(1);
    let perms: Vec<Vec<usize>> = space
        .alphabet_sizes()
        .iter()
        .map(|&k| {
            let mut p: Vec<usize> = (0..k).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let mut words: Vec<Word> = (0..m)
        .map(|j| Word::new(perms.iter().map(|p| p[j % p.len()]).collect()))
        .collect();
    for _ in 0..rng.random_range(0..=extra) {
        words.push(space.decode(rng.random_range(0..space.size())));
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reach::WordSet;

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = seeded(1);
        for _ in 0..50 {
            let s = random_space(&mut rng, 2, 4, 3, 81);
            assert!(s.size() <= 81);
            let mu = random_measure(&mut rng, &s);
            assert!(DenseMeasure::new(s.clone(), mu.probs().to_vec()).is_ok());
            assert!(random_frame_system(&mut rng, &s, Some(true)).is_t0().holds);
            let fs = random_frame_system(&mut rng, &s, Some(false));
            assert!(!fs.is_t0().holds);
            random_legend(&mut rng, &fs, 0.5, 2.0);
            let seed = WordSet::new(s.clone(), &covering_seed(&mut rng, &s, 2)).unwrap();
            assert!(seed.covers_all_letters());
        }
    }
}
