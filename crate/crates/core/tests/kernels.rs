use bbm_core::kernels::{
    sample_branch_time, sample_bridge_path, sample_gaussian_increment, sample_offspring, OffspringLaw, RngStream,
};
use bbm_core::stats::inference::chi_square_gof;
use bbm_core::stats::MeanEstimate;

const DRAWS: usize = 1_000_000;

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn gaussian_increment_moments() {
    let mut rng = RngStream::new(11, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| sample_gaussian_increment(&mut rng, 1.0).unwrap()).collect();
    let m = MeanEstimate::from_slice(&xs);
    assert!(m.mean.abs() < 0.004, "mean {}", m.mean);
    assert!((variance(&xs) - 1.0).abs() < 0.01, "variance {}", variance(&xs));
}

#[test]
fn streams_are_uncorrelated() {
    let mut a = RngStream::new(5, 1);
    let mut b = RngStream::new(5, 2);
    let n = 100_000;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).map(|_| (a.normal(), b.normal())).unzip();
    let r = bbm_core::stats::inference::correlation(&xs, &ys);
    assert!(r.abs() < 0.01, "correlation {r}");
}

#[test]
fn branch_time_is_unit_exponential() {
    let mut rng = RngStream::new(12, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| sample_branch_time(&mut rng)).collect();
    assert!(xs.iter().all(|&x| x > 0.0));
    let mean = xs.iter().sum::<f64>() / DRAWS as f64;
    assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
    let tail = xs.iter().filter(|&&x| x > 2.0).count() as f64 / DRAWS as f64;
    assert!((tail - (-2.0f64).exp()).abs() < 0.002, "P[T > 2] = {tail}");
}

#[test]
fn offspring_frequencies() {
    let law = OffspringLaw::parse("1:0.5,3:0.5").unwrap();
    let mut rng = RngStream::new(13, 0);
    let mut counts = vec![0u64; 3];
    let mut sum = 0usize;
    for _ in 0..DRAWS {
        let k = sample_offspring(&mut rng, &law);
        sum += k;
        counts[k - 1] += 1;
    }
    let mean = sum as f64 / DRAWS as f64;
    assert!((mean - 2.0).abs() < 0.005, "mean {mean}");
    assert_eq!(counts[1], 0);
    let test = chi_square_gof(&[counts[0], counts[2]], &[0.5, 0.5]).unwrap();
    assert!(test.p_value > 0.01, "{test:?}");

    let mut rng = RngStream::new(14, 0);
    assert!((0..1000).all(|_| sample_offspring(&mut rng, &OffspringLaw::binary()) == 2));
}

#[test]
fn bridge_marginals() {
    let paths = 100_000;
    let mut rng = RngStream::new(15, 0);
    let mid: Vec<f64> = (0..paths)
        .map(|_| sample_bridge_path(&mut rng, 10.0, 0.0, 0.0, 0.1).unwrap()[50].1)
        .collect();
    let v = variance(&mid);
    assert!((v / 2.5 - 1.0).abs() < 0.02, "variance at t/2 {v}");

    let at4: Vec<f64> = (0..paths)
        .map(|_| {
            let p = sample_bridge_path(&mut rng, 10.0, 0.0, 5.0, 0.1).unwrap();
            assert_eq!(p[0], (0.0, 0.0));
            assert_eq!(p[100], (10.0, 5.0));
            p[40].1
        })
        .collect();
    let m = at4.iter().sum::<f64>() / paths as f64;
    assert!((m - 2.0).abs() < 0.03, "mean at s=4 {m}");
}
