//! Subcommand bodies. Each validates its config, prints a short report on
//! stdout and writes data files under the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use recomb_core::integrate::entropy_trace_check;
use recomb_core::measure::DEFAULT_SUPPORT_THRESHOLD;
use recomb_core::particles::tv_band;
use recomb_core::{
    closure, integrate, run_to_convergence, ConvergenceOptions, DenseMeasure, FrameSystem,
    IntegratorConfig, MasterEquation, ParticleEnsemble, TargetKind, TrajectoryRecord, WordSet,
};

use crate::config::{one_based, ExperimentConfig, Names};
use crate::error::CliError;

pub const TRAJECTORY_HEADER: &str =
    "t,entropy,max_residual,tv_to_limit,max_separation_violation,support_size";

fn classes_line(classes: &[Vec<usize>]) -> String {
    classes
        .iter()
        .map(|c| one_based(c))
        .collect::<Vec<_>>()
        .join(",")
}

fn t0_line(system: &FrameSystem) -> String {
    let classes = classes_line(&system.equivalence_classes());
    let verdict = system.is_t0();
    match verdict.witness {
        Some((i, j)) if !verdict.holds => format!(
            "T0: false; witness ({},{}); classes: {classes}",
            i + 1,
            j + 1
        ),
        _ => format!("T0: true; classes: {classes}"),
    }
}

fn frames_line(system: &FrameSystem) -> String {
    if system.is_empty() {
        return "(none)".into();
    }
    system
        .frames()
        .iter()
        .map(|f| one_based(f.sites()))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn check(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let exp = cfg.build()?;
    let system = exp.equation.system();
    println!("{}", t0_line(system));
    println!("space: {}", exp.space);
    println!("frames: {}", frames_line(system));
    let q = system.quotient();
    println!(
        "quotient: classes {}; frames over class indices: {}; T0: {}",
        classes_line(q.classes()),
        frames_line(q.system()),
        q.system().is_t0().holds
    );
    println!(
        "legend: valid (symmetric, strictly positive; max outflow rate {})",
        exp.equation.legend().outflow_bound()
    );
    println!(
        "initial: support {}/{}",
        exp.initial.support_size(DEFAULT_SUPPORT_THRESHOLD),
        exp.space.size()
    );
    Ok(())
}

fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.time,
            r.entropy,
            r.max_residual,
            r.tv_to_limit,
            r.separation_violation,
            r.support_size
        )
        .expect("writing to a String");
    }
    out
}

/// One `word<TAB>probability` line per state, in codec order.
fn measure_text(names: &Names, mu: &DenseMeasure, header: &str) -> String {
    let mut out = format!("# {header}\n");
    for (w, p) in mu.space().words().zip(mu.probs()) {
        writeln!(out, "{}\t{p:.16e}", names.display(&w)).expect("writing to a String");
    }
    out
}

fn target_description(kind: &TargetKind) -> String {
    match kind {
        TargetKind::SiteProduct => "product of site marginals".into(),
        TargetKind::BlockProduct(classes) => {
            format!(
                "block product over classes {} (system is not T0)",
                classes_line(classes)
            )
        }
        TargetKind::Custom => "custom target".into(),
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let exp = cfg.build()?;
    let i = &cfg.integrator;
    let opts = ConvergenceOptions {
        step: Some(exp.step()),
        snapshot_stride: i.snapshot_stride,
        ..ConvergenceOptions::new(i.tv_tol, i.t_end)
    };
    let report = run_to_convergence(&exp.equation, &exp.initial, &opts)?;

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(&report.records))?;
    fs::write(
        dir.join("final_measure.txt"),
        measure_text(
            &exp.names,
            &report.final_measure,
            &format!("t = {:.16e}", report.time),
        ),
    )?;

    let target = target_description(&report.target.kind);
    if report.converged {
        println!(
            "converged: true at t = {} (TV {:.3e} ≤ {:e} to {target})",
            report.time, report.final_tv, i.tv_tol
        );
    } else {
        println!(
            "converged: false by t = {} (TV {:.3e} > {:e} to {target})",
            report.time, report.final_tv, i.tv_tol
        );
    }
    let trace = entropy_trace_check(&report.records);
    println!("entropy non-increasing: {}", trace.monotone);
    println!(
        "final support: {}/{}; step {}; {} records written to {}",
        report.final_record().support_size,
        exp.space.size(),
        exp.step(),
        report.records.len(),
        dir.display()
    );
    Ok(())
}

/// Exact flow from `mu` over `duration`, with steps no longer than `max_step`.
fn advance_exact(
    eq: &MasterEquation,
    mu: &DenseMeasure,
    duration: f64,
    max_step: f64,
) -> Result<DenseMeasure, CliError> {
    if duration <= 0.0 {
        return Ok(mu.clone());
    }
    let n = (duration / max_step).ceil().max(1.0) as usize;
    let cfg = IntegratorConfig::new(duration / n as f64, duration)?.with_stride(n)?;
    let mut records = integrate(eq, mu, &cfg)?;
    Ok(records.pop().expect("final record").measure)
}

pub fn particle(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let exp = cfg.build()?;
    let p = &cfg.particles;
    if p.n == 0 {
        return Err(CliError::Config("particles.n: must be at least 1".into()));
    }
    let times = p
        .snapshot_times
        .clone()
        .unwrap_or_else(|| vec![0.0, cfg.integrator.t_end]);
    let t_end = times.last().copied().unwrap_or(0.0);

    let mut ens = ParticleEnsemble::sample(exp.equation.clone(), &exp.initial, p.n, p.seed, 0)?
        .with_event_log();
    let snaps = ens.simulate(t_end, &times)?;

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let mut summary = String::from("t,tv_to_exact,band_3sigma\n");
    let mut exact = exp.initial.clone();
    let mut t_prev = 0.0;
    for (k, (t, emp)) in snaps.iter().enumerate() {
        exact = advance_exact(&exp.equation, &exact, t - t_prev, exp.step())?;
        t_prev = *t;
        let tv = emp.tv_distance(&exact)?;
        let band = tv_band(&exact, p.n);
        writeln!(summary, "{t:.16e},{tv:.16e},{band:.16e}").expect("writing to a String");
        fs::write(
            dir.join(format!("snapshot_{k:03}.txt")),
            measure_text(
                &exp.names,
                emp,
                &format!("t = {t:.16e}; N = {}; seed = {}", p.n, p.seed),
            ),
        )?;
        println!(
            "t = {t}: TV to exact {tv:.4e} (3σ band {band:.4e}, {})",
            if tv <= band { "inside" } else { "outside" }
        );
    }
    fs::write(dir.join("particle_summary.csv"), summary)?;
    fs::write(dir.join("events.csv"), ens.log().to_csv())?;
    println!(
        "events: {} proposed, {} accepted; N = {}, seed = {}; output in {}",
        ens.log().proposed,
        ens.log().accepted,
        p.n,
        p.seed,
        dir.display()
    );
    Ok(())
}

pub fn reach(cfg: &ExperimentConfig, seeds: &Path, target: Option<&str>) -> Result<(), CliError> {
    let exp = cfg.build()?;
    let text = fs::read_to_string(seeds)
        .map_err(|e| CliError::Config(format!("cannot read seeds {}: {e}", seeds.display())))?;
    let words = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            exp.names
                .parse_word(&exp.space, l)
                .map_err(|m| CliError::Config(format!("seeds line {}: {m}", n + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if words.is_empty() {
        return Err(CliError::Config(format!(
            "seeds: {} lists no words",
            seeds.display()
        )));
    }
    let seed = WordSet::new(exp.space.clone(), &words)?;
    let system = exp.equation.system();
    let c = closure(&seed, system)?;

    println!("{}", t0_line(system));
    println!("seed words: {}", seed.len());
    println!("covers_all_letters: {}", seed.covers_all_letters());
    let size = exp.space.size();
    if c.set().is_full() {
        println!("closure = X ({size}/{size})");
    } else {
        println!("closure ⊊ X ({}/{size})", c.set().len());
    }

    if let Some(t) = target {
        let word = exp
            .names
            .parse_word(&exp.space, t)
            .map_err(|m| CliError::Config(format!("target: {m}")))?;
        let shown = exp.names.display(&word);
        match c.witness(&word) {
            None => println!("target {shown}: not reachable"),
            Some(steps) if steps.is_empty() => println!("target {shown}: in the seed"),
            Some(steps) => {
                println!(
                    "target {shown}: reachable in {} step{}",
                    steps.len(),
                    if steps.len() == 1 { "" } else { "s" }
                );
                for (k, s) in steps.iter().enumerate() {
                    println!(
                        "  {}. recombine {} with {} on {} -> {}",
                        k + 1,
                        exp.names.display(&s.source),
                        exp.names.display(&s.partner),
                        one_based(s.frame.sites()),
                        exp.names.display(&s.result)
                    );
                }
            }
        }
    }
    Ok(())
}
