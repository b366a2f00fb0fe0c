//! Frame systems, legends of similarity matrices, the T0 property and
//! separation of measures along frames.

use std::collections::HashMap;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::measure::DenseMeasure;
use crate::space::{ProductSpace, Word};

/// Default absolute per-state tolerance for separation checks.
pub const DEFAULT_SEPARATION_TOL: f64 = 1e-9;

/// A nonempty set of sites, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    sites: Vec<usize>,
}

impl Frame {
    pub fn new(space: &ProductSpace, sites: &[usize]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidFrame("frames must be nonempty".into()));
        }
        let sites = space
            .check_subset(sites)
            .map_err(|e| Error::InvalidFrame(e.to_string()))?;
        Ok(Frame { sites })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.sites.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", s.join(","))
    }
}

/// The collection `J` of frames over a product space. Duplicates are dropped,
/// keeping first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSystem {
    space: ProductSpace,
    frames: Vec<Frame>,
}

impl FrameSystem {
    pub fn new(space: ProductSpace, frames: &[Vec<usize>]) -> Result<Self> {
        let mut out: Vec<Frame> = Vec::with_capacity(frames.len());
        for sites in frames {
            let frame = Frame::new(&space, sites)?;
            if frame.len() == space.n_sites() {
                warn!("a frame covers every site and never constrains separation");
            }
            if !out.contains(&frame) {
                out.push(frame);
            }
        }
        Ok(FrameSystem { space, frames: out })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn position(&self, frame: &Frame) -> Option<usize> {
        self.frames.iter().position(|f| f == frame)
    }

    /// Whether every pair of distinct sites is split by some frame.
    pub fn is_t0(&self) -> T0Verdict {
        let n = self.space.n_sites();
        for i in 0..n {
            for j in i + 1..n {
                if !self.frames.iter().any(|f| f.contains(i) != f.contains(j)) {
                    return T0Verdict {
                        holds: false,
                        witness: Some((i, j)),
                    };
                }
            }
        }
        T0Verdict {
            holds: true,
            witness: None,
        }
    }

    /// Classes of sites that no frame tells apart, ordered by smallest member.
    pub fn equivalence_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut by_signature: HashMap<Vec<bool>, usize> = HashMap::new();
        for site in self.space.sites() {
            let sig: Vec<bool> = self.frames.iter().map(|f| f.contains(site)).collect();
            match by_signature.get(&sig) {
                Some(&c) => classes[c].push(site),
                None => {
                    by_signature.insert(sig, classes.len());
                    classes.push(vec![site]);
                }
            }
        }
        classes
    }

    /// The induced frame system on equivalence classes, which is always T0.
    pub fn quotient(&self) -> Quotient {
        let classes = self.equivalence_classes();
        let mut class_of = vec![0; self.space.n_sites()];
        for (c, members) in classes.iter().enumerate() {
            for &i in members {
                class_of[i] = c;
            }
        }
        let radices = classes
            .iter()
            .map(|members| {
                members
                    .iter()
                    .map(|&i| self.space.alphabet_size(i))
                    .product()
            })
            .collect();
        let space = ProductSpace::from_radices(radices);

        let mut frames = Vec::with_capacity(self.frames.len());
        for frame in &self.frames {
            let mut covered: Vec<usize> = frame.sites.iter().map(|&i| class_of[i]).collect();
            covered.sort_unstable();
            covered.dedup();
            for &c in &covered {
                assert!(
                    classes[c].iter().all(|&i| frame.contains(i)),
                    "frame {frame} splits equivalence class {c}"
                );
            }
            frames.push(Frame { sites: covered });
        }
        let mut unique: Vec<Frame> = Vec::with_capacity(frames.len());
        for f in frames {
            if !unique.contains(&f) {
                unique.push(f);
            }
        }
        let system = FrameSystem {
            space: space.clone(),
            frames: unique,
        };
        assert!(system.is_t0().holds, "quotient system is not T0");
        Quotient {
            parent: self.space.clone(),
            classes,
            system,
        }
    }

    /// Checks that, for every frame `I`, `x_I` and `x_{Λ∖I}` are independent
    /// under `mu` to within `tol` per state. A frame covering every site has an
    /// empty complement and is trivially separated.
    pub fn separation(&self, mu: &DenseMeasure, tol: f64) -> Result<SeparationReport> {
        if mu.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut report = SeparationReport {
            separated: true,
            max_violation: 0.0,
            worst_frame: None,
        };
        for (k, frame) in self.frames.iter().enumerate() {
            let v = frame_separation_violation(&self.space, mu.probs(), frame.sites());
            if report.worst_frame.is_none() || v > report.max_violation {
                report.max_violation = v;
                report.worst_frame = Some(k);
            }
        }
        report.separated = report.max_violation <= tol;
        Ok(report)
    }

    /// Checks full independence of all sites, `|μ(x) − ∏_i μ_i(x_i)| ≤ tol`.
    /// Only meaningful as a cross-check on T0 systems, where it must agree
    /// with [`separation`](Self::separation).
    pub fn factorization_oracle(&self, mu: &DenseMeasure, tol: f64) -> Result<bool> {
        if mu.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let verdict = self.is_t0();
        if let Some((i, j)) = verdict.witness {
            return Err(Error::NotT0(i, j));
        }
        Ok(factorization_deviation(mu) <= tol)
    }
}

/// `max_x |μ(x) − ∏_i μ_i(x_i)|`.
pub fn factorization_deviation(mu: &DenseMeasure) -> f64 {
    mu.max_abs_diff(&mu.product_of_site_marginals())
        .expect("same space")
}

/// `max_x |μ(x) − μ_I(x_I) μ_{Λ∖I}(x_{Λ∖I})|` for one frame.
pub(crate) fn frame_separation_violation(
    space: &ProductSpace,
    probs: &[f64],
    frame: &[usize],
) -> f64 {
    let comp = space.complement(frame);
    let inner = space.offsets(frame);
    let outer = space.offsets(&comp);
    let mu_i: Vec<f64> = inner
        .iter()
        .map(|&a| outer.iter().map(|&b| probs[a + b]).sum())
        .collect();
    let mu_c: Vec<f64> = outer
        .iter()
        .map(|&b| inner.iter().map(|&a| probs[a + b]).sum())
        .collect();
    let mut worst = 0.0f64;
    for (&a, &pa) in inner.iter().zip(&mu_i) {
        for (&b, &pb) in outer.iter().zip(&mu_c) {
            worst = worst.max((probs[a + b] - pa * pb).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct T0Verdict {
    pub holds: bool,
    /// A pair of sites no frame separates, when `holds` is false.
    pub witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub separated: bool,
    pub max_violation: f64,
    /// Index of the frame attaining `max_violation`; `None` for an empty system.
    pub worst_frame: Option<usize>,
}

/// The quotient of a frame system by its site equivalence classes. Each class
/// becomes a single site whose alphabet is the product of its members'
/// alphabets (encoded with the codec of the class's own sub-space).
#[derive(Debug, Clone)]
pub struct Quotient {
    parent: ProductSpace,
    classes: Vec<Vec<usize>>,
    system: FrameSystem,
}

impl Quotient {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn system(&self) -> &FrameSystem {
        &self.system
    }

    pub fn space(&self) -> &ProductSpace {
        self.system.space()
    }

    /// Maps a word of the parent space to its class-letter word.
    pub fn project_word(&self, word: &Word) -> Result<Word> {
        self.parent.check_letters(word.letters())?;
        let letters = self
            .classes
            .iter()
            .map(|members| {
                members.iter().fold(0, |acc, &i| {
                    acc * self.parent.alphabet_size(i) + word.letters()[i]
                })
            })
            .collect();
        Ok(Word::new(letters))
    }

    /// Inverse of [`project_word`](Self::project_word).
    pub fn lift_word(&self, word: &Word) -> Result<Word> {
        self.space().check_letters(word.letters())?;
        let mut letters = vec![0; self.parent.n_sites()];
        for (members, &code) in self.classes.iter().zip(word.letters()) {
            let mut code = code;
            for &i in members.iter().rev() {
                let k = self.parent.alphabet_size(i);
                letters[i] = code % k;
                code /= k;
            }
        }
        Ok(Word::new(letters))
    }

    /// Re-indexes a measure on the parent space as a measure on the quotient space.
    pub fn project_measure(&self, mu: &DenseMeasure) -> Result<DenseMeasure> {
        if mu.space() != &self.parent {
            return Err(Error::SpaceMismatch);
        }
        let mut probs = vec![0.0; self.space().size()];
        for (s, &p) in mu.probs().iter().enumerate() {
            let w = self.project_word(&self.parent.decode(s))?;
            probs[self.space().encode_unchecked(w.letters())] = p;
        }
        Ok(DenseMeasure::from_raw(self.space().clone(), probs))
    }
}

/// A symmetric, strictly positive matrix `Φ_I` over sub-words of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    frame: Frame,
    dim: usize,
    values: Vec<f64>,
    max: f64,
}

impl SimilarityMatrix {
    /// `values` is row-major over the frame's sub-space codec order.
    pub fn new(space: &ProductSpace, frame: Frame, values: Vec<f64>) -> Result<Self> {
        let dim: usize = frame
            .sites()
            .iter()
            .map(|&i| space.alphabet_size(i))
            .product();
        let invalid = |reason: String| Error::InvalidSimilarity {
            frame: frame.to_string(),
            reason,
        };
        if values.len() != dim * dim {
            return Err(invalid(format!(
                "expected {dim}x{dim} = {} entries, got {}",
                dim * dim,
                values.len()
            )));
        }
        for a in 0..dim {
            for c in 0..dim {
                let v = values[a * dim + c];
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(format!(
                        "entry ({a},{c}) = {v} is not strictly positive"
                    )));
                }
                if v != values[c * dim + a] {
                    return Err(invalid(format!(
                        "entry ({a},{c}) differs from entry ({c},{a})"
                    )));
                }
            }
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        Ok(SimilarityMatrix {
            frame,
            dim,
            values,
            max,
        })
    }

    /// `φ_I ≡ c`.
    pub fn constant(space: &ProductSpace, frame: Frame, c: f64) -> Result<Self> {
        let dim: usize = frame
            .sites()
            .iter()
            .map(|&i| space.alphabet_size(i))
            .product();
        Self::new(space, frame, vec![c; dim * dim])
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, a: usize, c: usize) -> f64 {
        self.values[a * self.dim + c]
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// One similarity matrix per frame, in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct Legend {
    matrices: Vec<SimilarityMatrix>,
}

impl Legend {
    pub fn new(system: &FrameSystem, matrices: Vec<SimilarityMatrix>) -> Result<Self> {
        if matrices.len() != system.len() {
            return Err(Error::LegendMismatch(format!(
                "{} frames but {} matrices",
                system.len(),
                matrices.len()
            )));
        }
        for (k, (frame, m)) in system.frames().iter().zip(&matrices).enumerate() {
            if frame != m.frame() {
                return Err(Error::LegendMismatch(format!(
                    "matrix {k} is for frame {} but frame {k} is {frame}",
                    m.frame()
                )));
            }
        }
        Ok(Legend { matrices })
    }

    /// `φ_I ≡ 1` for every frame.
    pub fn uniform(system: &FrameSystem) -> Self {
        let matrices = system
            .frames()
            .iter()
            .map(|f| SimilarityMatrix::constant(system.space(), f.clone(), 1.0).expect("valid"))
            .collect();
        Legend { matrices }
    }

    pub fn matrices(&self) -> &[SimilarityMatrix] {
        &self.matrices
    }

    /// `Σ_I max φ_I`, an upper bound on any state's total outflow rate.
    pub fn outflow_bound(&self) -> f64 {
        self.matrices.iter().map(|m| m.max()).sum()
    }

    pub(crate) fn check_system(&self, system: &FrameSystem) -> Result<()> {
        if self.matrices.len() != system.len()
            || self
                .matrices
                .iter()
                .zip(system.frames())
                .any(|(m, f)| m.frame() != f)
        {
            return Err(Error::LegendMismatch(
                "legend frames differ from the frame system".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> ProductSpace {
        ProductSpace::new(vec![2; n]).unwrap()
    }

    /// Cells (r,c) of a 2×2 grid numbered r*2 + c; frames are rows and columns.
    fn grid() -> FrameSystem {
        FrameSystem::new(space(4), &[vec![0, 1], vec![2, 3], vec![0, 2], vec![1, 3]]).unwrap()
    }

    #[test]
    fn frames_must_be_nonempty_and_valid() {
        let s = space(2);
        assert!(matches!(Frame::new(&s, &[]), Err(Error::InvalidFrame(_))));
        assert!(Frame::new(&s, &[2]).is_err());
        assert!(Frame::new(&s, &[1, 1]).is_err());
        assert_eq!(Frame::new(&s, &[1, 0]).unwrap().sites(), &[0, 1]);
    }

    #[test]
    fn duplicate_frames_are_dropped() {
        let fs = FrameSystem::new(space(3), &[vec![0], vec![1, 0], vec![0], vec![0, 1]]).unwrap();
        assert_eq!(fs.len(), 2);
    }

    #[test]
    fn t0_examples() {
        let fs = FrameSystem::new(space(2), &[vec![0]]).unwrap();
        assert!(fs.is_t0().holds);

        let fs = FrameSystem::new(space(2), &[vec![0, 1]]).unwrap();
        assert_eq!(
            fs.is_t0(),
            T0Verdict {
                holds: false,
                witness: Some((0, 1))
            }
        );

        // Exhaustive pairwise check: distinct cells differ in row or column.
        let g = grid();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(g.frames().iter().any(|f| f.contains(i) != f.contains(j)));
            }
        }
        assert!(g.is_t0().holds);
    }

    #[test]
    fn equivalence_class_examples() {
        let fs = FrameSystem::new(space(3), &[vec![0], vec![1]]).unwrap();
        assert_eq!(fs.equivalence_classes(), vec![vec![0], vec![1], vec![2]]);

        let fs = FrameSystem::new(space(3), &[vec![0, 1]]).unwrap();
        assert_eq!(fs.equivalence_classes(), vec![vec![0, 1], vec![2]]);

        let fs = FrameSystem::new(space(3), &[]).unwrap();
        assert_eq!(fs.equivalence_classes(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn quotient_examples() {
        let g = grid();
        let q = g.quotient();
        assert_eq!(q.system().frames(), g.frames());
        assert_eq!(q.space(), g.space());

        let fs = FrameSystem::new(space(3), &[vec![0, 1]]).unwrap();
        let q = fs.quotient();
        assert_eq!(q.classes(), &[vec![0, 1], vec![2]]);
        assert_eq!(q.space().alphabet_sizes(), &[4, 2]);
        assert_eq!(q.system().frames().len(), 1);
        assert_eq!(q.system().frames()[0].sites(), &[0]);
        assert!(q.system().is_t0().holds);

        let fs = FrameSystem::new(space(2), &[]).unwrap();
        let q = fs.quotient();
        assert_eq!(q.classes(), &[vec![0, 1]]);
        assert!(q.system().is_empty());
        assert!(q.system().is_t0().holds);
    }

    #[test]
    fn quotient_word_maps_invert() {
        let s = ProductSpace::new(vec![2, 3, 2, 3]).unwrap();
        let fs = FrameSystem::new(s.clone(), &[vec![0, 2], vec![0, 1, 2]]).unwrap();
        let q = fs.quotient();
        assert_eq!(q.classes(), &[vec![0, 2], vec![1], vec![3]]);
        for w in s.words() {
            let p = q.project_word(&w).unwrap();
            assert_eq!(q.lift_word(&p).unwrap(), w);
        }
    }

    #[test]
    fn separation_examples() {
        let s = space(2);
        let fs = FrameSystem::new(s.clone(), &[vec![0]]).unwrap();
        let corr = DenseMeasure::new(s.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = fs.separation(&corr, 1e-12).unwrap();
        assert!(!r.separated);
        assert!((r.max_violation - 0.25).abs() < 1e-15);
        assert_eq!(r.worst_frame, Some(0));
        assert!(!fs.factorization_oracle(&corr, 1e-12).unwrap());

        let prod = DenseMeasure::product(s.clone(), &[vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert!(fs.separation(&prod, 1e-12).unwrap().separated);
        assert!(fs.factorization_oracle(&prod, 1e-12).unwrap());

        let point = DenseMeasure::point_mass(s, &Word::new(vec![1, 0])).unwrap();
        assert!(fs.separation(&point, 0.0).unwrap().separated);
    }

    #[test]
    fn full_frame_is_trivially_separated() {
        let s = space(2);
        let fs = FrameSystem::new(s.clone(), &[vec![0, 1]]).unwrap();
        let corr = DenseMeasure::new(s, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = fs.separation(&corr, 0.0).unwrap();
        assert!(r.separated);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn factorization_oracle_requires_t0() {
        let s = space(2);
        let fs = FrameSystem::new(s.clone(), &[vec![0, 1]]).unwrap();
        let mu = DenseMeasure::uniform(s);
        assert_eq!(fs.factorization_oracle(&mu, 1e-9), Err(Error::NotT0(0, 1)));
    }

    #[test]
    fn grid_product_of_fair_bits() {
        let g = grid();
        let mu = DenseMeasure::product(g.space().clone(), &vec![vec![0.5, 0.5]; 4]).unwrap();
        // Exhaustive check over all 16 states.
        for p in mu.probs() {
            assert!((p - 1.0 / 16.0).abs() < 1e-16);
        }
        assert!(g.separation(&mu, 1e-12).unwrap().separated);
        assert!(g.factorization_oracle(&mu, 1e-12).unwrap());
    }

    #[test]
    fn similarity_validation() {
        let s = ProductSpace::new(vec![2, 3]).unwrap();
        let f = Frame::new(&s, &[0]).unwrap();
        assert!(SimilarityMatrix::new(&s, f.clone(), vec![1.0, 2.0, 2.0, 1.0]).is_ok());
        assert!(matches!(
            SimilarityMatrix::new(&s, f.clone(), vec![1.0, 2.0, 3.0, 1.0]),
            Err(Error::InvalidSimilarity { .. })
        ));
        assert!(SimilarityMatrix::new(&s, f.clone(), vec![1.0, 0.0, 0.0, 1.0]).is_err());
        assert!(SimilarityMatrix::new(&s, f.clone(), vec![1.0, -1.0, -1.0, 1.0]).is_err());
        assert!(SimilarityMatrix::new(&s, f.clone(), vec![1.0; 9]).is_err());
        assert!(SimilarityMatrix::new(&s, f, vec![1.0, f64::NAN, f64::NAN, 1.0]).is_err());
        let g = Frame::new(&s, &[1]).unwrap();
        assert_eq!(SimilarityMatrix::constant(&s, g, 2.0).unwrap().dim(), 3);
    }

    #[test]
    fn legend_must_match_frames() {
        let s = space(2);
        let fs = FrameSystem::new(s.clone(), &[vec![0], vec![1]]).unwrap();
        let m0 = SimilarityMatrix::constant(&s, Frame::new(&s, &[0]).unwrap(), 1.0).unwrap();
        let m1 = SimilarityMatrix::constant(&s, Frame::new(&s, &[1]).unwrap(), 3.0).unwrap();
        assert!(Legend::new(&fs, vec![m0.clone()]).is_err());
        assert!(Legend::new(&fs, vec![m1.clone(), m0.clone()]).is_err());
        let legend = Legend::new(&fs, vec![m0, m1]).unwrap();
        assert_eq!(legend.outflow_bound(), 4.0);
        assert_eq!(Legend::uniform(&fs).outflow_bound(), 2.0);
    }
}
