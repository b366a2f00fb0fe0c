//! Right-hand side of the nonlinear recombination master equation
//!
//! ```text
//! dμ(x)/dt = Σ_I Σ_{y_I} [ φ_I(y_I, x_I) μ_I(x_I) μ(y_I, x_{Λ∖I})
//!                          − φ_I(x_I, y_I) μ_I(y_I) μ(x) ]
//! ```
//!
//! For a frame `I`, write a state as `(a, b)` with `a = x_I` and
//! `b = x_{Λ∖I}`, and view `μ` as a matrix `M[a][b]`. The frame's term is then
//! `μ_I(a) (Φᵀ M)[a][b] − M[a][b] (Φ μ_I)[a]`, which costs
//! `O(|X| · |K_I|)` per frame.

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameSystem, Legend, SimilarityMatrix};
use crate::info::{kl_of, neg_entropy_of};
use crate::measure::{marginalize, DenseMeasure};
use crate::space::{ProductSpace, Word};

/// Split of the state index along a frame: `state = inner[a] + outer[b]`.
#[derive(Debug, Clone)]
struct FrameSplit {
    inner: Vec<usize>,
    outer: Vec<usize>,
}

impl FrameSplit {
    fn new(space: &ProductSpace, frame: &Frame) -> Self {
        FrameSplit {
            inner: space.offsets(frame.sites()),
            outer: space.offsets(&space.complement(frame.sites())),
        }
    }
}

/// Adds (or writes, when `overwrite`) the frame-`I` term of the RHS into `out`.
fn frame_term(
    split: &FrameSplit,
    phi: &SimilarityMatrix,
    probs: &[f64],
    out: &mut [f64],
    overwrite: bool,
) {
    let FrameSplit { inner, outer } = split;
    let dim = inner.len();

    let mu_i: Vec<f64> = inner
        .iter()
        .map(|&a| outer.iter().map(|&b| probs[a + b]).sum())
        .collect();
    // Total outflow rate from letter-segment a: Σ_c φ(a,c) μ_I(c).
    let loss: Vec<f64> = (0..dim)
        .map(|a| (0..dim).map(|c| phi.get(a, c) * mu_i[c]).sum())
        .collect();

    let mut column = vec![0.0; dim];
    for &b in outer {
        for (slot, &c) in column.iter_mut().zip(inner) {
            *slot = probs[c + b];
        }
        for (a, &ia) in inner.iter().enumerate() {
            let gain: f64 = (0..dim).map(|c| phi.get(c, a) * column[c]).sum();
            let term = mu_i[a] * gain - column[a] * loss[a];
            if overwrite {
                out[ia + b] = term;
            } else {
                out[ia + b] += term;
            }
        }
    }
}

/// A transition-rate query `λ_I(x, x̃, μ)` for the move
/// `x = (x_I, x_{Λ∖I}) → x̃ = (y_I, x_{Λ∖I})`.
#[derive(Debug, Clone)]
pub struct RateQuery<'a> {
    pub from: Word,
    pub frame: Frame,
    /// `y_I`, letters over the frame's sites in site order.
    pub to_segment: Word,
    pub measure: &'a DenseMeasure,
}

/// The recombination vector field for a frame system and its legend.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    system: FrameSystem,
    legend: Legend,
    splits: Vec<FrameSplit>,
}

impl MasterEquation {
    pub fn new(system: FrameSystem, legend: Legend) -> Result<Self> {
        legend.check_system(&system)?;
        let splits = system
            .frames()
            .iter()
            .map(|f| FrameSplit::new(system.space(), f))
            .collect();
        Ok(MasterEquation {
            system,
            legend,
            splits,
        })
    }

    /// `φ_I ≡ 1` on every frame.
    pub fn uniform(system: FrameSystem) -> Self {
        let legend = Legend::uniform(&system);
        Self::new(system, legend).expect("uniform legend matches its system")
    }

    pub fn system(&self) -> &FrameSystem {
        &self.system
    }

    pub fn legend(&self) -> &Legend {
        &self.legend
    }

    pub fn space(&self) -> &ProductSpace {
        self.system.space()
    }

    fn check_measure(&self, mu: &DenseMeasure) -> Result<()> {
        if mu.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// `λ_I(x, x̃, μ) = φ_I(x_I, y_I) μ_I(y_I)`.
    pub fn transition_rate(&self, q: &RateQuery<'_>) -> Result<f64> {
        self.check_measure(q.measure)?;
        let k = self.system.position(&q.frame).ok_or_else(|| {
            Error::LegendMismatch(format!("frame {} is not in the system", q.frame))
        })?;
        let sites = q.frame.sites();
        let sub = self.space().sub_space(sites);
        let from = self.space().restrict(&q.from, sites)?;
        let a = sub.encode(&from)?;
        let c = sub.encode(&q.to_segment)?;
        let mu_i = marginalize(self.space(), q.measure.probs(), sites);
        Ok(self.legend.matrices()[k].get(a, c) * mu_i[c])
    }

    /// Writes the full RHS for an arbitrary vector over `X` (RK stages need not
    /// be exact probability vectors).
    pub fn rhs_into(&self, probs: &[f64], out: &mut [f64]) {
        assert_eq!(probs.len(), self.space().size());
        assert_eq!(out.len(), self.space().size());
        out.iter_mut().for_each(|v| *v = 0.0);
        for (split, phi) in self.splits.iter().zip(self.legend.matrices()) {
            frame_term(split, phi, probs, out, false);
        }
    }

    pub fn rhs_full(&self, mu: &DenseMeasure) -> Result<Vec<f64>> {
        self.check_measure(mu)?;
        let mut out = vec![0.0; self.space().size()];
        self.rhs_into(mu.probs(), &mut out);
        Ok(out)
    }

    /// The term of the RHS contributed by frame number `k` alone.
    pub fn rhs_single_frame(&self, mu: &DenseMeasure, k: usize) -> Result<Vec<f64>> {
        self.check_measure(mu)?;
        let phi = self
            .legend
            .matrices()
            .get(k)
            .ok_or_else(|| Error::LegendMismatch(format!("no frame with index {k}")))?;
        let mut out = vec![0.0; self.space().size()];
        frame_term(&self.splits[k], phi, mu.probs(), &mut out, true);
        Ok(out)
    }

    /// Sup-norm of the RHS; zero exactly at the fixed points of the flow.
    pub fn stationarity_residual(&self, mu: &DenseMeasure) -> Result<f64> {
        Ok(sup_norm(&self.rhs_full(mu)?))
    }

    pub(crate) fn residual_of(&self, probs: &[f64], scratch: &mut [f64]) -> f64 {
        self.rhs_into(probs, scratch);
        sup_norm(scratch)
    }
}

/// The single-frame RHS for a standalone similarity matrix.
pub fn rhs_single_frame(mu: &DenseMeasure, phi: &SimilarityMatrix) -> Vec<f64> {
    let split = FrameSplit::new(mu.space(), phi.frame());
    let mut out = vec![0.0; mu.space().size()];
    frame_term(&split, phi, mu.probs(), &mut out, true);
    out
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Terms of the identity
/// `H(μ) = Σ_b μ_{Λ∖I}(b) KL(μ(·|b) ‖ μ_I) + H(μ_I) + H(μ_{Λ∖I})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDecomposition {
    pub entropy: f64,
    /// `Σ_b μ_{Λ∖I}(b) KL(μ(·|b) ‖ μ_I)`, the mutual information of `x_I` and `x_{Λ∖I}`.
    pub conditional_kl: f64,
    pub frame_entropy: f64,
    pub rest_entropy: f64,
    /// `|H(μ) − (conditional_kl + frame_entropy + rest_entropy)|`.
    pub defect: f64,
}

/// Evaluates both sides of the entropy decomposition along `frame`.
/// Slices with `μ_{Λ∖I}(b) = 0` carry zero weight and are skipped.
pub fn entropy_decomposition(mu: &DenseMeasure, frame: &Frame) -> Result<EntropyDecomposition> {
    let space = mu.space();
    let sites = space.check_subset(frame.sites())?;
    let comp = space.complement(&sites);
    let inner = space.offsets(&sites);
    let outer = space.offsets(&comp);
    let probs = mu.probs();

    let mu_i = marginalize(space, probs, &sites);
    let mu_c = marginalize(space, probs, &comp);

    let mut conditional_kl = 0.0;
    let mut cond = vec![0.0; inner.len()];
    for (&b, &wb) in outer.iter().zip(&mu_c) {
        if wb <= 0.0 {
            continue;
        }
        for (slot, &a) in cond.iter_mut().zip(&inner) {
            *slot = probs[a + b] / wb;
        }
        conditional_kl += wb * kl_of(&cond, &mu_i)?;
    }

    let entropy = neg_entropy_of(probs);
    let frame_entropy = neg_entropy_of(&mu_i);
    let rest_entropy = neg_entropy_of(&mu_c);
    let defect = (entropy - (conditional_kl + frame_entropy + rest_entropy)).abs();
    Ok(EntropyDecomposition {
        entropy,
        conditional_kl,
        frame_entropy,
        rest_entropy,
        defect,
    })
}
