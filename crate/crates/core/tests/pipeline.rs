use multilattice::approx::{mult_coeffs, ShiftConfig};
use multilattice::construction::{build_plan, verify_plan, MultiLatticePlan, PlanParams};
use multilattice::cross::HyperbolicCross;
use multilattice::lattice::Rank1Lattice;
use multilattice::testbed::{
    convergence_experiment, random_on_cross_poly, BernoulliProductFunction, ConvergenceConfig, SamplingMode,
};
use multilattice::weights::{SmoothnessParams, WeightSpec};

#[test]
fn plan_rebuilt_from_serialized_lattices_matches() {
    let params = SmoothnessParams::new(1.5, 16.0, 3).unwrap();
    let cross = HyperbolicCross::enumerate(params, WeightSpec::product(vec![1.0, 0.7, 0.5])).unwrap();
    let pp = PlanParams::new(8.0, 0.5, 3).unwrap();
    let plan = build_plan(&cross, &pp).unwrap();
    let json = serde_json::to_value(&plan).unwrap();
    let lattices: Vec<Rank1Lattice> = serde_json::from_value(json["lattices"].clone()).unwrap();
    let rebuilt = MultiLatticePlan::from_lattices(&cross, lattices, &pp).unwrap();
    assert_eq!(rebuilt.xi, plan.xi);
    assert_eq!(rebuilt.covered, plan.covered);
    assert!(
        verify_plan(&cross, &rebuilt, cross.span())
            .unwrap()
            .translate_violations
            == 0
    );

    let poly = random_on_cross_poly(&cross, 4, true).unwrap();
    let a = mult_coeffs(&poly, &plan, &cross).unwrap();
    let b = mult_coeffs(&poly, &rebuilt, &cross).unwrap();
    assert_eq!(a, b);
}

#[test]
fn l2_errors_decrease_along_the_grid() {
    let f = BernoulliProductFunction::new(1, vec![1.0, 1.0]).unwrap();
    let cfg = ConvergenceConfig {
        alpha_eff: 1.4,
        weights: WeightSpec::unit(2),
        m_grid: vec![4.0, 8.0, 16.0, 32.0, 64.0],
        plan: PlanParams::new(122.0, 0.5, 1).unwrap(),
        shifts: ShiftConfig {
            num_shifts: 16,
            seed: 1,
        },
        grid_per_dim: 32,
        mode: SamplingMode::Multiple,
        single_tries_per_prime: 64,
    };
    let res = convergence_experiment(&f, 2, &cfg).unwrap();
    assert!(res.rows.iter().all(|r| r.covered));
    for w in res.rows.windows(2) {
        assert!(w[1].err_l2_rms <= 1.05 * w[0].err_l2_rms);
        assert!(w[1].total_points > w[0].total_points);
    }
}
