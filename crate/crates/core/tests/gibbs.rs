use std::io::BufReader;

use mfbvar::aggregation::triangular_weights;
use mfbvar::dgp::{simulate_dgp, DgpSpec};
use mfbvar::gibbs::{read_draws, run_chain, write_draws, SamplerConfig};
use mfbvar::priors::{model_prior, ModelSpec, PriorSettings};
use mfbvar::stats::RngStream;
use mfbvar::tsdata::Month;

fn spec() -> DgpSpec {
    DgpSpec {
        ids: vec!["a".into(), "b".into(), "q".into()],
        n_m: 2,
        pi: vec![
            vec![0.5, 0.0, 0.1, 0.0, 0.0, 0.0],
            vec![0.1, 0.4, 0.0, 0.0, 0.0, 0.0],
            vec![0.1, 0.0, 0.6, 0.0, 0.0, 0.0],
        ],
        sigma: vec![vec![1.0, 0.2, 0.1], vec![0.2, 1.0, 0.1], vec![0.1, 0.1, 0.5]],
        psi: vec![3.0, -2.0, 1.0],
        phi: 0.9,
        sigma2_h: 0.03,
        burn: 100,
    }
}

fn config(draws: usize, burnin: usize) -> SamplerConfig {
    SamplerConfig { draws, burnin, batch: 100, seed: 21, fixed_sigma2: None }
}

#[test]
fn every_model_recovers_the_steady_state() {
    let out = simulate_dgp(&spec(), 240, Month::new(2000, 1).unwrap(), &triangular_weights(), &mut RngStream::new(21, 0).rng())
        .unwrap();
    let settings = PriorSettings::new(4, vec![0.0; 3], vec![2.0; 3]);
    for model in ModelSpec::ALL {
        let prior = model_prior(model, &out.panel, &settings).unwrap();
        let chain = run_chain(&out.panel, &prior, &config(1500, 500), RngStream::new(21, 1)).unwrap();
        assert_eq!(chain.states.len(), 1000);
        let n = chain.states.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|j| chain.states.iter().map(|s| s.steady_state().unwrap()[j]).sum::<f64>() / n)
            .collect();
        for (j, (m, t)) in mean.iter().zip([3.0, -2.0, 1.0]).enumerate() {
            assert!((m - t).abs() < 0.6, "{}: variable {j} steady state {m}", model.name());
        }
    }
}

#[test]
fn chains_are_reproducible_and_draws_round_trip() {
    let out = simulate_dgp(&spec(), 120, Month::new(2000, 1).unwrap(), &triangular_weights(), &mut RngStream::new(22, 0).rng())
        .unwrap();
    let settings = PriorSettings::new(4, vec![3.0, -2.0, 1.0], vec![1.0; 3]);
    let prior = model_prior(ModelSpec::from_name("SSNG-CSV").unwrap(), &out.panel, &settings).unwrap();
    let a = run_chain(&out.panel, &prior, &config(150, 100), RngStream::new(22, 1)).unwrap();
    let b = run_chain(&out.panel, &prior, &config(150, 100), RngStream::new(22, 1)).unwrap();
    assert_eq!(a.states, b.states);
    let mut buf = Vec::new();
    write_draws(&a.states, &mut buf).unwrap();
    let back = read_draws(BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.len(), 50);
    assert_eq!(back, a.states);
    assert!(read_draws(BufReader::new(&b"{not json}\n"[..])).unwrap_err().to_string().contains("draw 1"));
}

#[test]
fn invalid_configuration_rejected() {
    let out = simulate_dgp(&spec(), 60, Month::new(2000, 1).unwrap(), &triangular_weights(), &mut RngStream::new(23, 0).rng())
        .unwrap();
    let settings = PriorSettings::new(4, vec![0.0; 3], vec![1.0; 3]);
    let prior = model_prior(ModelSpec::from_name("SS-IW").unwrap(), &out.panel, &settings).unwrap();
    assert!(run_chain(&out.panel, &prior, &config(100, 100), RngStream::new(23, 1)).is_err());
}
