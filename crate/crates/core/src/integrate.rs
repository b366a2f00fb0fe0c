//! Fixed-step RK4 integration of the master equation, trajectory diagnostics
//! and the convergence driver.
//!
//! After every step, entries in `[-CLAMP_TOL, 0)` are treated as roundoff and
//! clamped to zero; anything more negative aborts with
//! [`Error::PositivityViolated`]. The vector is renormalized only when its mass
//! drifts from 1 by more than `renorm_tol`.

use log::debug;

use crate::dynamics::MasterEquation;
use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::info::neg_entropy_of;
use crate::measure::{tv_slices, DenseMeasure, DEFAULT_SUPPORT_THRESHOLD, MASS_TOL};

/// Negative entries down to `-CLAMP_TOL` are roundoff.
pub const CLAMP_TOL: f64 = 1e-12;

/// Largest admissible `step · Σ_I max φ_I`.
pub const MAX_STEP_RATE: f64 = 0.5;

/// Fraction of [`MAX_STEP_RATE`]'s bound used when no step is given.
pub const DEFAULT_STEP_SAFETY: f64 = 0.1;

/// Per-record slack when checking that `H` is non-increasing.
pub const ENTROPY_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub t_end: f64,
    /// Record every `snapshot_stride` steps (plus the initial and final state).
    pub snapshot_stride: usize,
    pub renorm_tol: f64,
}

impl IntegratorConfig {
    pub fn new(step: f64, t_end: f64) -> Result<Self> {
        let cfg = IntegratorConfig {
            step,
            t_end,
            snapshot_stride: 1,
            renorm_tol: MASS_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Step `DEFAULT_STEP_SAFETY / Σ_I max φ_I`.
    pub fn for_equation(eq: &MasterEquation, t_end: f64) -> Result<Self> {
        Self::new(default_step(eq), t_end)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        self.snapshot_stride = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn with_renorm_tol(mut self, tol: f64) -> Result<Self> {
        self.renorm_tol = tol;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be finite and nonnegative, got {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidConfig(
                "snapshot_stride must be at least 1".into(),
            ));
        }
        if !(self.renorm_tol.is_finite() && self.renorm_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "renorm_tol must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_step(eq: &MasterEquation) -> f64 {
    let bound = eq.legend().outflow_bound();
    if bound > 0.0 {
        DEFAULT_STEP_SAFETY / bound
    } else {
        1.0
    }
}

fn check_step(eq: &MasterEquation, step: f64) -> Result<()> {
    let product = step * eq.legend().outflow_bound();
    if product > MAX_STEP_RATE {
        return Err(Error::StepTooLarge { step, product });
    }
    Ok(())
}

/// What the trajectory is expected to converge to.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// `∏_i μ_i⁰` (T0 system).
    SiteProduct,
    /// `∏_j μ⁰_{Λ_j}` over the equivalence classes (non-T0 system).
    BlockProduct(Vec<Vec<usize>>),
    /// Supplied by the caller.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitTarget {
    pub kind: TargetKind,
    pub measure: DenseMeasure,
}

/// The predicted limit of the flow started at `mu0`: the product of site
/// marginals for T0 systems, otherwise the product over equivalence classes.
pub fn limit_target(eq: &MasterEquation, mu0: &DenseMeasure) -> Result<LimitTarget> {
    if mu0.space() != eq.space() {
        return Err(Error::SpaceMismatch);
    }
    if eq.system().is_t0().holds {
        Ok(LimitTarget {
            kind: TargetKind::SiteProduct,
            measure: mu0.product_of_site_marginals(),
        })
    } else {
        let classes = eq.system().equivalence_classes();
        let measure = mu0.block_product(&classes)?;
        Ok(LimitTarget {
            kind: TargetKind::BlockProduct(classes),
            measure,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub measure: DenseMeasure,
    /// `Σ μ ln μ`
    pub entropy: f64,
    pub max_residual: f64,
    pub tv_to_limit: f64,
    pub separation_violation: f64,
    /// Number of states above [`DEFAULT_SUPPORT_THRESHOLD`].
    pub support_size: usize,
}

/// RK4 stepper with reusable stage buffers.
struct Rk4<'a> {
    eq: &'a MasterEquation,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
    renorm_tol: f64,
}

impl<'a> Rk4<'a> {
    fn new(eq: &'a MasterEquation, renorm_tol: f64) -> Self {
        let n = eq.space().size();
        Rk4 {
            eq,
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
            renorm_tol,
        }
    }

    fn step(&mut self, y: &mut [f64], h: f64, t_after: f64) -> Result<()> {
        let eq = self.eq;
        eq.rhs_into(y, &mut self.k1);
        for ((s, &yi), &k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k1) {
            *s = yi + 0.5 * h * k;
        }
        eq.rhs_into(&self.stage, &mut self.k2);
        for ((s, &yi), &k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k2) {
            *s = yi + 0.5 * h * k;
        }
        eq.rhs_into(&self.stage, &mut self.k3);
        for ((s, &yi), &k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k3) {
            *s = yi + h * k;
        }
        eq.rhs_into(&self.stage, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        self.settle(y, t_after)
    }

    fn settle(&self, y: &mut [f64], time: f64) -> Result<()> {
        for (index, v) in y.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -CLAMP_TOL {
                    return Err(Error::PositivityViolated {
                        time,
                        index,
                        value: *v,
                    });
                }
                *v = 0.0;
            }
        }
        let total: f64 = y.iter().sum();
        if (total - 1.0).abs() > self.renorm_tol {
            debug!("renormalizing at t = {time}: mass {total}");
            y.iter_mut().for_each(|v| *v /= total);
        }
        Ok(())
    }
}

/// Computes the diagnostics of one snapshot.
struct Recorder<'a> {
    eq: &'a MasterEquation,
    target: &'a DenseMeasure,
    scratch: Vec<f64>,
}

impl Recorder<'_> {
    fn record(&mut self, time: f64, probs: &[f64]) -> TrajectoryRecord {
        let eq = self.eq;
        let space = eq.space();
        let separation_violation = eq
            .system()
            .frames()
            .iter()
            .map(|f: &Frame| crate::frames::frame_separation_violation(space, probs, f.sites()))
            .fold(0.0, f64::max);
        TrajectoryRecord {
            time,
            measure: DenseMeasure::from_raw(space.clone(), probs.to_vec()),
            entropy: neg_entropy_of(probs),
            max_residual: eq.residual_of(probs, &mut self.scratch),
            tv_to_limit: tv_slices(probs, self.target.probs()),
            separation_violation,
            support_size: probs
                .iter()
                .filter(|&&p| p > DEFAULT_SUPPORT_THRESHOLD)
                .count(),
        }
    }
}

/// Step-time grid `min(k h, t_end)`.
fn n_steps(step: f64, t_end: f64) -> usize {
    let n = (t_end / step).ceil();
    // Absorb a final sliver caused by floating division.
    if n >= 1.0 && (n - 1.0) * step >= t_end - 1e-12 * t_end.max(1.0) {
        (n - 1.0) as usize
    } else {
        n as usize
    }
}

fn grid_time(k: usize, n: usize, step: f64, t_end: f64) -> f64 {
    if k >= n {
        t_end
    } else {
        k as f64 * step
    }
}

/// Integrates from `t = 0` to `cfg.t_end`, recording the initial state, every
/// `snapshot_stride`-th step and the final state.
pub fn integrate(
    eq: &MasterEquation,
    mu0: &DenseMeasure,
    cfg: &IntegratorConfig,
) -> Result<Vec<TrajectoryRecord>> {
    check_step(eq, cfg.step)?;
    let target = limit_target(eq, mu0)?;
    let mut rk = Rk4::new(eq, cfg.renorm_tol);
    let mut rec = Recorder {
        eq,
        target: &target.measure,
        scratch: vec![0.0; eq.space().size()],
    };
    let mut y = mu0.probs().to_vec();
    let n = n_steps(cfg.step, cfg.t_end);
    let mut records = vec![rec.record(0.0, &y)];
    for k in 1..=n {
        let t0 = grid_time(k - 1, n, cfg.step, cfg.t_end);
        let t1 = grid_time(k, n, cfg.step, cfg.t_end);
        rk.step(&mut y, t1 - t0, t1)?;
        if k % cfg.snapshot_stride == 0 || k == n {
            records.push(rec.record(t1, &y));
        }
    }
    Ok(records)
}

/// Outcome of the entropy monotonicity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropyTrace {
    pub monotone: bool,
    /// Indices `(k, k+1)` of the first pair of records where `H` rose by more
    /// than [`ENTROPY_STEP_TOL`].
    pub first_violation: Option<(usize, usize)>,
}

/// Checks that `H = Σ μ ln μ` never increases between consecutive records.
pub fn entropy_trace_check(records: &[TrajectoryRecord]) -> EntropyTrace {
    for (k, pair) in records.windows(2).enumerate() {
        if pair[1].entropy > pair[0].entropy + ENTROPY_STEP_TOL {
            return EntropyTrace {
                monotone: false,
                first_violation: Some((k, k + 1)),
            };
        }
    }
    EntropyTrace {
        monotone: true,
        first_violation: None,
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceOptions {
    pub tv_tol: f64,
    pub t_max: f64,
    /// Defaults to [`default_step`].
    pub step: Option<f64>,
    pub snapshot_stride: usize,
    pub renorm_tol: f64,
    /// Overrides the automatically chosen limit.
    pub target: Option<DenseMeasure>,
}

impl ConvergenceOptions {
    pub fn new(tv_tol: f64, t_max: f64) -> Self {
        ConvergenceOptions {
            tv_tol,
            t_max,
            step: None,
            snapshot_stride: 1,
            renorm_tol: MASS_TOL,
            target: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Time of the last state computed.
    pub time: f64,
    pub final_tv: f64,
    pub target: LimitTarget,
    pub records: Vec<TrajectoryRecord>,
    pub final_measure: DenseMeasure,
}

impl ConvergenceReport {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().expect("at least the initial record")
    }
}

/// Integrates until `TV(μ^t, target) ≤ tv_tol` or `t_max` is reached. Running
/// out of time is reported through `converged = false`, not as an error.
pub fn run_to_convergence(
    eq: &MasterEquation,
    mu0: &DenseMeasure,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    let step = opts.step.unwrap_or_else(|| default_step(eq));
    let cfg = IntegratorConfig::new(step, opts.t_max)?
        .with_stride(opts.snapshot_stride)?
        .with_renorm_tol(opts.renorm_tol)?;
    check_step(eq, step)?;

    let target = match &opts.target {
        Some(m) => {
            if m.space() != eq.space() {
                return Err(Error::SpaceMismatch);
            }
            LimitTarget {
                kind: TargetKind::Custom,
                measure: m.clone(),
            }
        }
        None => limit_target(eq, mu0)?,
    };

    let mut rk = Rk4::new(eq, cfg.renorm_tol);
    let mut rec = Recorder {
        eq,
        target: &target.measure,
        scratch: vec![0.0; eq.space().size()],
    };
    let mut y = mu0.probs().to_vec();
    let mut records = vec![rec.record(0.0, &y)];
    let mut tv = records[0].tv_to_limit;
    let mut time = 0.0;
    let n = n_steps(cfg.step, cfg.t_end);
    let mut k = 0;
    while tv > opts.tv_tol && k < n {
        k += 1;
        let t0 = grid_time(k - 1, n, cfg.step, cfg.t_end);
        time = grid_time(k, n, cfg.step, cfg.t_end);
        rk.step(&mut y, time - t0, time)?;
        tv = tv_slices(&y, target.measure.probs());
        let done = tv <= opts.tv_tol || k == n;
        if k % cfg.snapshot_stride == 0 || done {
            records.push(rec.record(time, &y));
        }
    }
    let final_measure = DenseMeasure::from_raw(eq.space().clone(), y);
    Ok(ConvergenceReport {
        converged: tv <= opts.tv_tol,
        time,
        final_tv: tv,
        target,
        records,
        final_measure,
    })
}
