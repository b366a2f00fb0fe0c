use recomb_core::integrate::limit_target;
use recomb_core::particles::tv_band;
use recomb_core::random::{
    random_frame_system, random_legend, random_measure, random_space, seeded,
};
use recomb_core::{
    integrate, DenseMeasure, FrameSystem, IntegratorConfig, MasterEquation, ParticleEnsemble,
    ProductSpace, Word,
};

fn correlated_pair() -> (MasterEquation, DenseMeasure) {
    let space = ProductSpace::new(vec![2, 2]).unwrap();
    let fs = FrameSystem::new(space.clone(), &[vec![0]]).unwrap();
    let mu0 = DenseMeasure::uniform_on(space, &[Word::from(&[0, 0][..]), Word::from(&[1, 1][..])])
        .unwrap();
    (MasterEquation::uniform(fs), mu0)
}

fn exact_at(eq: &MasterEquation, mu0: &DenseMeasure, t: f64) -> DenseMeasure {
    let cfg = IntegratorConfig::new(0.01, t).unwrap();
    integrate(eq, mu0, &cfg).unwrap().pop().unwrap().measure
}

#[test]
fn same_seed_same_log_other_run_other_log() {
    let (eq, mu0) = correlated_pair();
    let log = |run| {
        let mut e = ParticleEnsemble::sample(eq.clone(), &mu0, 200, 11, run)
            .unwrap()
            .with_event_log();
        e.advance_to(1.0);
        e.log().to_csv()
    };
    assert_eq!(log(0), log(0));
    assert_ne!(log(0), log(1));
}

#[test]
fn expected_site_marginals_are_conserved() {
    let mut rng = seeded(3);
    let space = random_space(&mut rng, 2, 3, 3, 27);
    let fs = random_frame_system(&mut rng, &space, Some(true));
    let legend = random_legend(&mut rng, &fs, 0.5, 2.0);
    let eq = MasterEquation::new(fs, legend).unwrap();
    let words: Vec<Word> = (0..200).map(|k| space.decode(k % space.size())).collect();
    let start = ParticleEnsemble::new(eq.clone(), words.clone(), 0, 0)
        .unwrap()
        .empirical_measure()
        .site_marginals();

    let runs = 30;
    let finals: Vec<Vec<Vec<f64>>> = (0..runs)
        .map(|run| {
            let mut e = ParticleEnsemble::new(eq.clone(), words.clone(), 5, run).unwrap();
            e.advance_to(2.0);
            e.empirical_measure().site_marginals()
        })
        .collect();
    for i in space.sites() {
        for a in 0..space.alphabet_size(i) {
            let xs: Vec<f64> = finals.iter().map(|m| m[i][a]).collect();
            let mean = xs.iter().sum::<f64>() / runs as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
            let se = (var / runs as f64).sqrt().max(1e-3);
            assert!(
                (mean - start[i][a]).abs() <= 4.0 * se,
                "site {i} letter {a}: {mean} vs {}",
                start[i][a]
            );
        }
    }
}

#[test]
fn mean_field_error_shrinks_with_n() {
    let mut rng = seeded(8);
    let space = ProductSpace::new(vec![2, 3]).unwrap();
    let fs = random_frame_system(&mut rng, &space, Some(true));
    let legend = random_legend(&mut rng, &fs, 0.5, 2.0);
    let eq = MasterEquation::new(fs, legend).unwrap();
    let mu0 = random_measure(&mut rng, &space);
    let exact = exact_at(&eq, &mu0, 1.0);

    let median_tv = |n: usize| {
        let mut tvs: Vec<f64> = (0..10)
            .map(|run| {
                let mut e = ParticleEnsemble::sample(eq.clone(), &mu0, n, 21, run).unwrap();
                e.advance_to(1.0);
                e.empirical_measure().tv_distance(&exact).unwrap()
            })
            .collect();
        tvs.sort_by(f64::total_cmp);
        0.5 * (tvs[4] + tvs[5])
    };
    let (a, b, c) = (median_tv(100), median_tv(1000), median_tv(10_000));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn snapshots_track_the_closed_form() {
    let (eq, mu0) = correlated_pair();
    let exact = exact_at(&eq, &mu0, 5.0);
    assert!(
        (limit_target(&eq, &mu0)
            .unwrap()
            .measure
            .tv_distance(&exact)
            .unwrap()
            - 0.5 * (-5f64).exp())
        .abs()
            < 1e-6
    );
    let mut e = ParticleEnsemble::sample(eq, &mu0, 10_000, 1, 0).unwrap();
    let snaps = e.simulate(5.0, &[0.0, 5.0]).unwrap();
    assert_eq!(snaps.len(), 2);
    assert!(snaps[1].1.tv_distance(&exact).unwrap() <= 2.0 * tv_band(&exact, 10_000));
    assert_eq!(e.time(), 5.0);
}
