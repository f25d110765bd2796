use geodepth::depth::{marginal_survival_bound, population_depth_product, ProductMethod};
use geodepth::{DistributionSpec, RngSpec, Vector};

/// Frozen from the first verified quadrature run.
const PARETO_32_AT_181: f64 = 0.434_247_209_356_309_56;

fn point() -> Vector {
    let c = 1.81 / 2f64.sqrt();
    Vector::new(vec![c, c]).unwrap()
}

#[test]
fn pareto_population_depth_fixture() {
    let m = DistributionSpec::pareto(2, 3.2).marginals().unwrap();
    let q = population_depth_product(&m, &point(), 256, ProductMethod::default()).unwrap();
    assert!((q.depth.value - PARETO_32_AT_181).abs() < 1e-9, "{}", q.depth.value);
    assert!(q.stderr < 1e-6);

    let mc = population_depth_product(
        &m,
        &point(),
        256,
        ProductMethod::MonteCarlo {
            draws: 1_000_000,
            rng: RngSpec::new(9, 9),
        },
    )
    .unwrap();
    assert!(
        (mc.depth.value - PARETO_32_AT_181).abs() <= 3.0 * mc.stderr,
        "{} ± {}",
        mc.depth.value,
        mc.stderr
    );

    let unit = Vector::new(vec![0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
    let bound = marginal_survival_bound(&m, &unit, 1.81).unwrap();
    assert!(q.depth.value <= bound);
}
