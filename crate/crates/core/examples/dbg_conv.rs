// temporary diagnostic
use mlfa::ecme::ecme_solve;
use mlfa::faan::{faan_solve, StopRule};
use mlfa::model::{generate_snapshots, sample_covariance, ScenarioConfig};
use mlfa::numerics::HermitianMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn scenario_instance(seed: u64) -> (mlfa::model::SampleCovariance, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4 + (rng.random::<u64>() % 3) as usize; // 4..=6
    let m = 1 + (rng.random::<u64>() % 2) as usize; // 1..=2
    let deg = std::f64::consts::PI / 180.0;
    let mut thetas: Vec<f64> = Vec::new();
    while thetas.len() < m {
        let t = (20.0 + 140.0 * rng.random::<f64>()) * deg;
        if thetas.iter().all(|&u| (u - t).abs() > 20.0 * deg) {
            thetas.push(t);
        }
    }
    let p_diag: Vec<f64> = (0..m).map(|_| 5.0 + 10.0 * rng.random::<f64>()).collect();
    let q: Vec<f64> = (0..n).map(|_| 0.5 + 3.0 * rng.random::<f64>()).collect();
    let l = 50 * n;
    let cfg = ScenarioConfig::new(
        n, m, thetas,
        HermitianMatrix::from_real_diagonal(&p_diag),
        q, l, rng.random(),
    ).unwrap();
    (sample_covariance(&generate_snapshots(&cfg)), m)
}

fn main() {
    let stop = StopRule::new(1e-12);
    let mut worst_e = 0usize;
    let mut worst_f = 0usize;
    for seed in 0..20u64 {
        let (rhat, m) = scenario_instance(1000 + seed);
        let n = rhat.order();
        let t0 = Instant::now();
        let (_, te) = ecme_solve(&rhat, m, &vec![1.0; n], 500_000, Some(stop)).unwrap();
        let t1 = Instant::now();
        let (_, tf) = faan_solve(&rhat, m, &vec![1.0; n], 500_000, 30, Some(stop)).unwrap();
        let t2 = Instant::now();
        let fe = *te.objectives.last().unwrap();
        let ff = *tf.objectives.last().unwrap();
        worst_e = worst_e.max(te.iterations_run());
        worst_f = worst_f.max(tf.iterations_run());
        println!(
            "seed {seed:>2} N={n} M={m}: ecme k={:>7} ({:.2?})  faan k={:>7} ({:.2?})  |fe-ff|={:.2e}",
            te.iterations_run(), t1 - t0, tf.iterations_run(), t2 - t1, (fe - ff).abs()
        );
    }
    println!("worst ecme {worst_e}, worst faan {worst_f}");
}
