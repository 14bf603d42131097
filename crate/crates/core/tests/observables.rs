use z2lab::disorder::Disorder;
use z2lab::observables::{
    classify_decay, ensemble_average, loop_shapes, specific_heat, specific_heat_error, EnergySeries, WilsonEstimate,
    WilsonMeter,
};
use z2lab::rng;
use z2lab::spins::{enumerate_states, MetropolisChain, SpinConfig, System};
use z2lab::{Lattice, Model, SiteId, WilsonLoopSpec};

struct Run {
    series: EnergySeries,
    wilson: Vec<WilsonEstimate>,
}

fn simulate(lat: &Lattice, dis: &Disorder, beta: f64, sweeps: usize, r_max: usize, seed: u64) -> Run {
    let sys = System::new(lat.clone(), Model::Gauge);
    let mut r = rng::stream(seed, rng::DYNAMICS_STREAM);
    let start = SpinConfig::random(&sys, &mut r);
    let mut chain = MetropolisChain::new(&sys, dis, start).unwrap();
    for _ in 0..1000 {
        chain.sweep(beta, &mut r);
    }
    let mut meter = WilsonMeter::new(lat, loop_shapes(r_max)).unwrap();
    let mut energies = Vec::with_capacity(sweeps);
    for i in 0..sweeps {
        chain.sweep(beta, &mut r);
        energies.push(chain.energy() as f64);
        if i % 5 == 0 {
            meter.measure(chain.config()).unwrap();
        }
    }
    Run {
        series: EnergySeries::new(energies, beta, lat.n_sites()).unwrap(),
        wilson: meter.estimates(),
    }
}

#[test]
fn small_lattice_matches_exact_enumeration() {
    let lat = Lattice::new(3, 2).unwrap();
    let sys = System::new(lat.clone(), Model::Gauge);
    let dis = Disorder::uniform(&lat, Model::Gauge);
    let beta = 0.5;
    let specs: Vec<WilsonLoopSpec> = (0..lat.n_sites())
        .flat_map(|s| lat.planes().iter().map(move |&ax| WilsonLoopSpec::new(ax, SiteId(s), (1, 1))))
        .collect();
    let ex = enumerate_states(&sys, &dis, &specs).unwrap().at_beta(beta);
    let w_exact = ex.wilson.iter().map(|(_, w)| w).sum::<f64>() / ex.wilson.len() as f64;
    // independent check of the enumeration at 1x1: W = ⟨Π_P σ⟩ = -⟨E⟩ / n_plaquettes at p = 0
    assert!((w_exact + ex.mean_energy / lat.n_plaquettes() as f64).abs() < 1e-12);

    let run = simulate(&lat, &dis, beta, 200_000, 1, 11);
    let c = specific_heat(&run.series).unwrap();
    let c_err = specific_heat_error(&run.series).unwrap();
    let c_exact = beta * beta * ex.energy_variance / lat.n_sites() as f64;
    assert!((c - c_exact).abs() < 3.0 * c_err, "c {c} ± {c_err} vs {c_exact}");
    let w = &run.wilson[0];
    assert!((w.mean - w_exact).abs() < 3.0 * w.std_error, "W {} ± {} vs {w_exact}", w.mean, w.std_error);
}

#[test]
fn string_tension_falls_from_confined_to_higgs() {
    let lat = Lattice::new(3, 8).unwrap();
    let dis = Disorder::uniform(&lat, Model::Gauge);
    let confined = classify_decay(&simulate(&lat, &dis, 0.5, 4000, 4, 21).wilson);
    let higgs = classify_decay(&simulate(&lat, &dis, 1.0, 4000, 4, 22).wilson);
    assert!(confined.alpha > higgs.alpha, "{} vs {}", confined.alpha, higgs.alpha);
    assert!(higgs.alpha.abs() <= 3.0 * higgs.alpha_err, "{} ± {}", higgs.alpha, higgs.alpha_err);
}

#[test]
fn pure_model_sample_spread_shrinks_with_run_length() {
    let lat = Lattice::new(3, 3).unwrap();
    let dis = Disorder::uniform(&lat, Model::Gauge);
    let spread = |sweeps: usize| {
        let c: Vec<f64> = (0..8)
            .map(|s| specific_heat(&simulate(&lat, &dis, 0.6, sweeps, 1, 100 + s).series).unwrap())
            .collect();
        ensemble_average(&c).unwrap().sample_fluctuation
    };
    let short = spread(500);
    let long = spread(20_000);
    assert!(long < short, "{long} vs {short}");
}
