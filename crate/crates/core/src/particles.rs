//! Mean-field particle realization of the recombination process.
//!
//! `N` words evolve jointly. Particle `k` replaces its `I`-segment with the
//! `I`-segment `y_I` at rate `φ_I(x^k_I, y_I) μ̂_I(y_I)`, where `μ̂` is the
//! empirical measure of the ensemble (the particle itself included). Events
//! are generated by thinning: candidates arrive at the constant rate
//! `N Σ_I max φ_I`, pick a frame with probability proportional to `max φ_I`,
//! a particle `k` and partner `l` uniformly, and are accepted with probability
//! `φ_I(x^k_I, x^l_I) / max φ_I`.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::dynamics::MasterEquation;
use crate::error::{Error, Result};
use crate::measure::DenseMeasure;
use crate::space::Word;

/// One proposed recombination.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Receiving particle.
    pub k: usize,
    /// Partner whose segment is copied.
    pub l: usize,
    pub frame: usize,
    /// `x^k_I` before the event.
    pub before: Word,
    /// `x^k_I` after the event (equal to `before` when rejected).
    pub after: Word,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub proposed: u64,
    pub accepted: u64,
}

impl EventLog {
    /// CSV with columns `time,k,l,frame_id,accepted`; times carry 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,k,l,frame_id,accepted\n");
        for e in &self.events {
            writeln!(
                out,
                "{:.16e},{},{},{},{}",
                e.time, e.k, e.l, e.frame, e.accepted as u8
            )
            .expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    eq: MasterEquation,
    particles: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
    seed: u64,
    time: f64,
    frame_choice: Option<WeightedIndex<f64>>,
    proposal_rate: f64,
    log: EventLog,
    keep_events: bool,
}

impl ParticleEnsemble {
    /// Starts from explicit words. The random stream is ChaCha8 seeded with
    /// `seed`, on stream `run`, so runs sharing a seed are independent.
    pub fn new(eq: MasterEquation, words: Vec<Word>, seed: u64, run: u64) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for w in &words {
            eq.space().check_letters(w.letters())?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        Ok(Self::assemble(
            eq,
            words.into_iter().map(Word::into_letters).collect(),
            rng,
            seed,
        ))
    }

    /// Draws `n` i.i.d. words from `mu0`, then continues on the same stream.
    pub fn sample(
        eq: MasterEquation,
        mu0: &DenseMeasure,
        n: usize,
        seed: u64,
        run: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if mu0.space() != eq.space() {
            return Err(Error::SpaceMismatch);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        let dist =
            WeightedIndex::new(mu0.probs()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let particles = (0..n)
            .map(|_| eq.space().decode(dist.sample(&mut rng)).into_letters())
            .collect();
        Ok(Self::assemble(eq, particles, rng, seed))
    }

    fn assemble(
        eq: MasterEquation,
        particles: Vec<Vec<usize>>,
        rng: ChaCha8Rng,
        seed: u64,
    ) -> Self {
        let maxima: Vec<f64> = eq.legend().matrices().iter().map(|m| m.max()).collect();
        let total: f64 = maxima.iter().sum();
        let frame_choice = if maxima.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(&maxima).expect("similarities are strictly positive"))
        };
        let n = particles.len();
        ParticleEnsemble {
            eq,
            particles,
            rng,
            seed,
            time: 0.0,
            frame_choice,
            proposal_rate: n as f64 * total,
            log: EventLog::default(),
            keep_events: false,
        }
    }

    /// Keep every proposed event in the log (counters are always kept).
    pub fn with_event_log(mut self) -> Self {
        self.keep_events = true;
        self
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn words(&self) -> Vec<Word> {
        self.particles
            .iter()
            .map(|p| Word::new(p.clone()))
            .collect()
    }

    /// Rate of candidate events, `N Σ_I max φ_I`.
    pub fn proposal_rate(&self) -> f64 {
        self.proposal_rate
    }

    /// `Σ_k Σ_I (1/N) Σ_l φ_I(x^k_I, x^l_I)`: the rate of accepted events,
    /// self-copies and identical-segment copies included.
    pub fn total_rate(&self) -> f64 {
        let n = self.len() as f64;
        let mut total = 0.0;
        for (fi, m) in self.eq.legend().matrices().iter().enumerate() {
            let segs: Vec<usize> = (0..self.len()).map(|k| self.segment_index(k, fi)).collect();
            for &a in &segs {
                total += segs.iter().map(|&c| m.get(a, c)).sum::<f64>() / n;
            }
        }
        total
    }

    fn segment_index(&self, k: usize, frame: usize) -> usize {
        let space = self.eq.space();
        self.eq.system().frames()[frame]
            .sites()
            .iter()
            .fold(0, |acc, &i| {
                acc * space.alphabet_size(i) + self.particles[k][i]
            })
    }

    fn segment(&self, k: usize, frame: usize) -> Word {
        let sites = self.eq.system().frames()[frame].sites();
        Word::new(sites.iter().map(|&i| self.particles[k][i]).collect())
    }

    /// Performs the next candidate event, or returns `None` when the system
    /// has no frames and nothing can ever happen.
    pub fn gillespie_step(&mut self) -> Option<Event> {
        self.step_before(f64::INFINITY)
    }

    /// Draws the next candidate; if it would fall after `horizon`, the clock
    /// stops at `horizon` and the candidate is discarded (exact by
    /// memorylessness).
    fn step_before(&mut self, horizon: f64) -> Option<Event> {
        if self.frame_choice.is_none() {
            if horizon.is_finite() {
                self.time = self.time.max(horizon);
            }
            return None;
        }
        let dt: f64 = self.rng.sample::<f64, _>(Exp1) / self.proposal_rate;
        if self.time + dt > horizon {
            self.time = horizon;
            return None;
        }
        self.time += dt;

        let frame = self
            .frame_choice
            .as_ref()
            .expect("checked above")
            .sample(&mut self.rng);
        let n = self.len();
        let k = self.rng.random_range(0..n);
        let l = self.rng.random_range(0..n);
        let phi = &self.eq.legend().matrices()[frame];
        let a = self.segment_index(k, frame);
        let c = self.segment_index(l, frame);
        let accept_prob = phi.get(a, c) / phi.max();
        let accepted = self.rng.random::<f64>() < accept_prob;

        let before = self.segment(k, frame);
        if accepted {
            for &i in self.eq.system().frames()[frame].sites() {
                self.particles[k][i] = self.particles[l][i];
            }
            self.log.accepted += 1;
        }
        self.log.proposed += 1;
        let event = Event {
            time: self.time,
            k,
            l,
            frame,
            after: self.segment(k, frame),
            before,
            accepted,
        };
        if self.keep_events {
            self.log.events.push(event.clone());
        }
        Some(event)
    }

    /// Runs every event up to time `t`.
    pub fn advance_to(&mut self, t: f64) {
        while self.time < t {
            if self.step_before(t).is_none() {
                break;
            }
        }
        self.time = self.time.max(t);
    }

    /// `μ̂^N`, the uniform distribution over the particles.
    pub fn empirical_measure(&self) -> DenseMeasure {
        let space = self.eq.space();
        let mut counts = vec![0.0; space.size()];
        for p in &self.particles {
            counts[space.encode_unchecked(p)] += 1.0;
        }
        let n = self.len() as f64;
        DenseMeasure::from_raw(space.clone(), counts.into_iter().map(|c| c / n).collect())
    }

    /// Advances to `t_end`, returning the empirical measure at each snapshot
    /// time (which must be sorted, not before the current time, and `≤ t_end`).
    pub fn simulate(
        &mut self,
        t_end: f64,
        snapshot_times: &[f64],
    ) -> Result<Vec<(f64, DenseMeasure)>> {
        if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("snapshot times must be sorted".into()));
        }
        if let Some(&bad) = snapshot_times.iter().find(|&&t| t > t_end || t < self.time) {
            return Err(Error::InvalidConfig(format!(
                "snapshot time {bad} outside [{}, {t_end}]",
                self.time
            )));
        }
        let mut out = Vec::with_capacity(snapshot_times.len());
        for &t in snapshot_times {
            self.advance_to(t);
            out.push((t, self.empirical_measure()));
        }
        self.advance_to(t_end);
        Ok(out)
    }
}

/// Three-sigma band on `TV(μ̂^N, p)` from per-state binomial errors:
/// `½ Σ_x 3 sqrt(p(x)(1 − p(x)) / N)`.
pub fn tv_band(p: &DenseMeasure, n: usize) -> f64 {
    0.5 * p
        .probs()
        .iter()
        .map(|&q| 3.0 * (q * (1.0 - q) / n as f64).sqrt())
        .sum::<f64>()
}
