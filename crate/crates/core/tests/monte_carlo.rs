use persuasion_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ks_distance(d: &CostDistribution, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x).unwrap();
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn inverse_cdf_samples_match_cdf() {
    let laws = [
        CostDistribution::uniform(0.1, 0.9).unwrap(),
        CostDistribution::scaled_uniform(0.4).unwrap(),
        CostDistribution::beta_rescaled(2.0, 5.0, 0.5).unwrap(),
        CostDistribution::beta_rescaled(0.5, 0.5, 1.0).unwrap(),
        CostDistribution::piecewise_linear(vec![(0.0, 0.0), (0.1, 0.6), (0.2, 0.6), (0.7, 1.0)]).unwrap(),
    ];
    for (k, d) in laws.iter().enumerate() {
        let ks = ks_distance(d, 1_000_000, 11 + k as u64);
        assert!(ks <= 0.002, "{:?}: KS distance {ks}", d.family());
    }
}

#[test]
fn verification_se_is_calibrated() {
    let d = CostDistribution::uniform(0.0, 1.0).unwrap();
    let mu = Belief::new(0.3).unwrap();
    let lambda = verifying_mass(mu, &d);
    let covered = (0..1000u64)
        .filter(|&seed| {
            let cfg = SimConfig::new(10_000, seed, 1).unwrap();
            let est = simulate_verification(mu, State::Zero, &d, &cfg).unwrap();
            (est.lambda_hat - lambda).abs() <= 4.0 * est.se_lambda
        })
        .count();
    assert!(covered >= 990, "covered {covered} of 1000");
}

#[test]
fn aggregate_variance_shrinks_like_one_over_n() {
    let d = CostDistribution::uniform(0.0, 1.0).unwrap();
    let mu = Belief::new(0.5).unwrap();
    let reps = 400;
    let mut pts = Vec::new();
    for n in [100usize, 1000, 10_000, 100_000] {
        let a: Vec<f64> = (0..reps)
            .map(|r| {
                let cfg = SimConfig::new(n, 1000 + r, 1).unwrap();
                simulate_verification(mu, State::One, &d, &cfg).unwrap().a_hat
            })
            .collect();
        let m = a.iter().sum::<f64>() / reps as f64;
        let var = a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        pts.push(((n as f64).ln(), var.ln()));
    }
    let k = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / k,
        pts.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn sender_value_matches_closed_forms() {
    let d = CostDistribution::uniform(0.0, 1.0).unwrap();
    let mu = Belief::new(0.5).unwrap();
    let cfg = SimConfig::new(1_000_000, 5, 100).unwrap();
    let est = simulate_sender_value(mu, &d, 0.0, &cfg, None, None).unwrap();
    assert!((est.v_hat + 0.140625).abs() <= 4.0 * est.se, "{est:?}");

    let kappa = 2.0;
    let fs = FalsificationSpec::quadratic(kappa, Domain::Unbounded).unwrap();
    let b = 0.1;
    let est = simulate_sender_value(mu, &d, b, &cfg, Some(&fs), None).unwrap();
    let target = kappa / (2.0 + kappa) * indirect_value(mu, &d, b);
    assert!((est.v_hat - target).abs() <= 4.0 * est.se, "{est:?} vs {target}");
}
