//! Closure of word sets under `I`-recombination.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameSystem};
use crate::space::{ProductSpace, Word};

/// `(x_I, x_{Λ∖I}) ↦ (y_I, x_{Λ∖I})`: letters from `y` on the frame, from `x`
/// elsewhere.
pub fn recombine(x: &Word, y: &Word, frame: &Frame) -> Word {
    let mut letters = x.letters().to_vec();
    for &i in frame.sites() {
        letters[i] = y.letters()[i];
    }
    Word::new(letters)
}

/// A deduplicated set of words over one space, kept in codec order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSet {
    space: ProductSpace,
    indices: BTreeSet<usize>,
}

impl WordSet {
    pub fn new(space: ProductSpace, words: &[Word]) -> Result<Self> {
        let indices = words
            .iter()
            .map(|w| space.encode(w))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(WordSet { space, indices })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, word: &Word) -> bool {
        self.space
            .encode(word)
            .map(|i| self.indices.contains(&i))
            .unwrap_or(false)
    }

    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        self.indices.iter().map(|&i| self.space.decode(i))
    }

    pub fn is_subset(&self, other: &WordSet) -> bool {
        self.space == other.space && self.indices.is_subset(&other.indices)
    }

    /// Whether the set is all of `X`.
    pub fn is_full(&self) -> bool {
        self.indices.len() == self.space.size()
    }

    /// Whether every site sees every letter of its alphabet among the words.
    pub fn covers_all_letters(&self) -> bool {
        self.space.sites().all(|i| {
            let mut seen = vec![false; self.space.alphabet_size(i)];
            for w in self.words() {
                seen[w.letters()[i]] = true;
            }
            seen.iter().all(|&s| s)
        })
    }
}

/// One recombination in a witness sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecombinationStep {
    pub source: Word,
    pub partner: Word,
    pub frame: Frame,
    pub result: Word,
}

#[derive(Debug, Clone, Copy)]
struct Parent {
    source: usize,
    partner: usize,
    frame: usize,
}

/// The least superset of a seed closed under every frame's recombination.
#[derive(Debug, Clone)]
pub struct Closure {
    set: WordSet,
    seed: WordSet,
    frames: Vec<Frame>,
    parents: HashMap<usize, Parent>,
}

impl Closure {
    pub fn set(&self) -> &WordSet {
        &self.set
    }

    pub fn seed(&self) -> &WordSet {
        &self.seed
    }

    pub fn into_set(self) -> WordSet {
        self.set
    }

    /// A sequence of recombinations, each using only seed words and earlier
    /// results, that ends with `target`. Empty when `target` is a seed word;
    /// `None` when it is not reachable.
    pub fn witness(&self, target: &Word) -> Option<Vec<RecombinationStep>> {
        let space = self.set.space();
        let t = space.encode(target).ok()?;
        if !self.set.indices.contains(&t) {
            return None;
        }
        let mut steps = Vec::new();
        let mut done = BTreeSet::new();
        self.collect(t, &mut done, &mut steps);
        Some(steps)
    }

    fn collect(&self, s: usize, done: &mut BTreeSet<usize>, out: &mut Vec<RecombinationStep>) {
        if self.seed.indices.contains(&s) || !done.insert(s) {
            return;
        }
        let p = self.parents[&s];
        self.collect(p.source, done, out);
        self.collect(p.partner, done, out);
        let space = self.set.space();
        out.push(RecombinationStep {
            source: space.decode(p.source),
            partner: space.decode(p.partner),
            frame: self.frames[p.frame].clone(),
            result: space.decode(s),
        });
    }
}

/// Worklist saturation in FIFO order: each dequeued word is recombined, in
/// both roles, with every word found so far, over every frame.
pub fn closure(seed: &WordSet, system: &FrameSystem) -> Result<Closure> {
    if seed.is_empty() {
        return Err(Error::InvalidWord("closure needs a nonempty seed".into()));
    }
    if seed.space() != system.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = seed.space();
    let frames = system.frames();
    let mut found = vec![false; space.size()];
    let mut members: Vec<(usize, Word)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut parents = HashMap::new();

    for s in seed.indices.iter().copied() {
        found[s] = true;
        members.push((s, space.decode(s)));
        queue.push_back(members.len() - 1);
    }

    while let Some(pos) = queue.pop_front() {
        let (w_idx, w) = members[pos].clone();
        for m in 0..members.len() {
            let (u_idx, u) = members[m].clone();
            for (fi, frame) in frames.iter().enumerate() {
                for (src, src_word, partner, partner_word) in
                    [(w_idx, &w, u_idx, &u), (u_idx, &u, w_idx, &w)]
                {
                    let r = recombine(src_word, partner_word, frame);
                    let r_idx = space.encode_unchecked(r.letters());
                    if !found[r_idx] {
                        found[r_idx] = true;
                        parents.insert(
                            r_idx,
                            Parent {
                                source: src,
                                partner,
                                frame: fi,
                            },
                        );
                        members.push((r_idx, r));
                        queue.push_back(members.len() - 1);
                    }
                }
            }
        }
    }

    let set = WordSet {
        space: space.clone(),
        indices: members.iter().map(|(i, _)| *i).collect(),
    };
    Ok(Closure {
        set,
        seed: seed.clone(),
        frames: frames.to_vec(),
        parents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ProductSpace {
        ProductSpace::new(vec![2, 2]).unwrap()
    }

    fn w(l: &[usize]) -> Word {
        Word::from(l)
    }

    #[test]
    fn recombine_examples() {
        let s = pair();
        let f = Frame::new(&s, &[0]).unwrap();
        let x = w(&[0, 0]);
        let y = w(&[1, 1]);
        assert_eq!(recombine(&x, &x, &f), x);
        assert_eq!(recombine(&x, &y, &f), w(&[1, 0]));
        assert_eq!(recombine(&recombine(&x, &y, &f), &x, &f), x);
    }

    #[test]
    fn closure_examples() {
        let s = pair();
        let fs = FrameSystem::new(s.clone(), &[vec![0]]).unwrap();
        let seed = WordSet::new(s.clone(), &[w(&[0, 0]), w(&[1, 1])]).unwrap();
        let c = closure(&seed, &fs).unwrap();
        assert!(c.set().is_full());
        assert_eq!(c.set().len(), 4);

        let single = WordSet::new(s.clone(), &[w(&[0, 1])]).unwrap();
        let c = closure(&single, &fs).unwrap();
        assert_eq!(c.set(), &single);

        assert!(closure(&WordSet::new(s, &[]).unwrap(), &fs).is_err());
    }

    #[test]
    fn covering_seed_on_t0_system_fills_space() {
        let s = ProductSpace::new(vec![3, 3, 3, 3]).unwrap();
        let fs =
            FrameSystem::new(s.clone(), &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3]]).unwrap();
        assert!(fs.is_t0().holds);
        let seed =
            WordSet::new(s, &[w(&[0, 0, 0, 0]), w(&[1, 1, 1, 1]), w(&[2, 2, 2, 2])]).unwrap();
        assert!(seed.covers_all_letters());
        assert!(closure(&seed, &fs).unwrap().set().is_full());
    }

    #[test]
    fn covers_all_letters_examples() {
        let s = pair();
        assert!(WordSet::new(s.clone(), &[w(&[0, 0]), w(&[1, 1])])
            .unwrap()
            .covers_all_letters());
        assert!(!WordSet::new(s.clone(), &[w(&[0, 0]), w(&[0, 1])])
            .unwrap()
            .covers_all_letters());
        let all: Vec<Word> = s.words().collect();
        assert!(WordSet::new(s, &all).unwrap().covers_all_letters());
    }

    #[test]
    fn non_t0_closure_keeps_blocks_together() {
        let s = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let fs = FrameSystem::new(s.clone(), &[vec![0, 1]]).unwrap();
        let seed = WordSet::new(s, &[w(&[0, 0, 0]), w(&[1, 1, 1])]).unwrap();
        let c = closure(&seed, &fs).unwrap();
        let got: Vec<Word> = c.set().words().collect();
        assert_eq!(
            got,
            vec![w(&[0, 0, 0]), w(&[0, 0, 1]), w(&[1, 1, 0]), w(&[1, 1, 1])]
        );
    }

    #[test]
    fn witness_replays_to_target() {
        let s = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let fs = FrameSystem::new(s.clone(), &[vec![0], vec![1], vec![2]]).unwrap();
        let seed = WordSet::new(s.clone(), &[w(&[0, 0, 0]), w(&[1, 1, 1])]).unwrap();
        let c = closure(&seed, &fs).unwrap();
        for target in s.words() {
            let steps = c.witness(&target).unwrap();
            let mut have: Vec<Word> = seed.words().collect();
            for st in &steps {
                assert!(have.contains(&st.source) && have.contains(&st.partner));
                assert_eq!(recombine(&st.source, &st.partner, &st.frame), st.result);
                have.push(st.result.clone());
            }
            assert!(have.contains(&target));
            if seed.contains(&target) {
                assert!(steps.is_empty());
            }
        }

        let fs = FrameSystem::new(s.clone(), &[vec![0, 1]]).unwrap();
        let c = closure(&seed, &fs).unwrap();
        assert!(c.witness(&w(&[0, 1, 0])).is_none());
    }
}
