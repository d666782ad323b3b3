use std::f64::consts::SQRT_2;

use bbm_core::campaign::par_replicas;
use bbm_core::engine::{simulate, SimulationConfig};
use bbm_core::fkpp::{self, FkppConfig, FkppState, Reaction};
use bbm_core::kernels::{OffspringLaw, RngStream};
use bbm_core::stats::Rate;

#[test]
fn mckean_representation() {
    let t = 0.5;
    let cfg = SimulationConfig::binary(t);
    let maxima = par_replicas(20_000, 1, |i| Ok(simulate(&cfg, &mut RngStream::new(31, i))?.max_position().unwrap())).unwrap();
    let mut state = FkppState::heaviside(0.02, 80.0, Reaction::Law(OffspringLaw::binary())).unwrap();
    state.advance_to(t, 1e-4).unwrap();
    for x in [0.0, 0.5, 1.0] {
        let mc = Rate::new(maxima.iter().filter(|&&m| m <= x).count() as u64, maxima.len() as u64);
        let u = state.value_at(x);
        assert!((u - mc.estimate).abs() <= 3.0 * mc.se(), "x={x}: u {u} vs {mc:?}");
    }
}

#[test]
fn residual_shrinks_with_the_grid() {
    // at finite t the front is slower than sqrt2; measured against the
    // instantaneous speed the residual is dominated by the grid
    let t = 60.0;
    let speed = SQRT_2 - 1.5 / (SQRT_2 * t);
    let residual = |dx: f64| {
        let cfg = FkppConfig {
            dx,
            dt: 0.25 * dx * dx,
            ..FkppConfig::default()
        };
        let run = fkpp::solve(&OffspringLaw::binary(), &cfg, &[t], &[]).unwrap();
        run.state.wave_residual_with_speed(speed).unwrap()
    };
    let r: Vec<f64> = [0.4, 0.2, 0.1].into_iter().map(residual).collect();
    assert!(r[1] < r[0] && r[2] < r[1], "{r:?}");
}

#[test]
fn front_advances_near_sqrt2() {
    let cfg = FkppConfig {
        dx: 0.05,
        dt: 0.25 * 0.05 * 0.05,
        ..FkppConfig::default()
    };
    let record: Vec<f64> = (1..=20).map(f64::from).collect();
    let run = fkpp::solve(&OffspringLaw::binary(), &cfg, &record, &[]).unwrap();
    let speed = fkpp::front_speed(&run.samples, 20.0).unwrap();
    assert!(speed > 1.3 && speed < SQRT_2, "{speed}");
    // the lag keeps growing
    assert!(run.samples.windows(2).skip(5).all(|w| w[1].lag > w[0].lag));
}

#[test]
fn non_binary_law_runs_without_residual() {
    let law = OffspringLaw::parse("1:0.5,3:0.5").unwrap();
    let cfg = FkppConfig {
        dx: 0.1,
        dt: 0.0025,
        ..FkppConfig::default()
    };
    let run = fkpp::solve(&law, &cfg, &[5.0], &[5.0]).unwrap();
    assert!(run.samples[0].residual.is_none());
    let p = &run.profiles[0].1;
    assert!(p.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}
