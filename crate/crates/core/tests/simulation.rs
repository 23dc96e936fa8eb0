use ortrend::dist::Sides;
use ortrend::estimators::VarianceMode;
use ortrend::procedures::{global_p_value, standard_grid, EvalOptions, TestFamily, TestSpec};
use ortrend::sim::{
    calibrate_span, rejections_for_run, run_scenario, run_seed, run_study, simulate_layout,
    Scenario,
};
use ortrend::dist::MvtOptions;

fn scenario(label: &str, mu: Vec<f64>, runs: usize, tests: Vec<TestSpec>) -> Scenario {
    let k = mu.len();
    Scenario {
        label: label.into(),
        group_sizes: vec![10; k],
        mu,
        sigma: vec![1.0; k],
        runs,
        alpha: 0.05,
        seed: 9_001,
        tests,
        mvt_tolerance: 1e-3,
    }
}

fn pooled_tests() -> Vec<TestSpec> {
    vec![
        TestSpec::new(TestFamily::AnovaF),
        TestSpec::new(TestFamily::GrandMeanMCT),
        TestSpec::new(TestFamily::GrandMeanMCT).sides(Sides::TwoSided),
        TestSpec::new(TestFamily::GrandMeanMCTPava),
        TestSpec::new(TestFamily::WilliamsMCT),
        TestSpec::new(TestFamily::BartholomewPermutation).permutations(199),
    ]
}

#[test]
fn identical_across_parallelism() {
    let tests: Vec<TestSpec> = standard_grid().into_iter().map(|s| s.permutations(99)).collect();
    let scenarios = vec![
        scenario("null", vec![0.0; 4], 40, tests.clone()),
        Scenario { sigma: vec![3.0, 1.0, 1.0, 1.0], ..scenario("het", vec![0.0, 0.2, 0.4, 0.6], 40, tests) },
    ];
    let one = run_study(&scenarios, 1).unwrap();
    for threads in [4, 16] {
        let other = run_study(&scenarios, threads).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&other).unwrap(),
            "{threads} threads"
        );
    }
}

#[test]
fn every_test_sees_the_same_dataset() {
    let s = scenario("pairing", vec![0.0, 0.0, 0.3, 0.8], 30, pooled_tests());
    let rows = run_scenario(&s).unwrap();
    let mut counts = vec![0usize; s.tests.len()];
    for run in 0..s.runs {
        let decisions = rejections_for_run(&s, run).unwrap();
        // Recompute each decision from the regenerated dataset of this run.
        let layout = simulate_layout(&s, run).unwrap();
        let opts = EvalOptions {
            mvt: MvtOptions::default().with_tolerance(s.mvt_tolerance),
            perm_seed: run_seed(s.seed, run),
        };
        for (t, spec) in s.tests.iter().enumerate() {
            let p = global_p_value(&layout, spec, &opts).unwrap();
            assert_eq!(decisions[t], p <= s.alpha, "run {run} test {}", spec.short_name());
            counts[t] += usize::from(decisions[t]);
        }
    }
    for (row, c) in rows.iter().zip(counts) {
        assert_eq!(row.rejections, c);
    }
}

#[test]
fn rates_and_standard_errors() {
    let s = scenario("se", vec![0.0, 0.1, 0.4, 0.7], 50, pooled_tests());
    for row in run_scenario(&s).unwrap() {
        assert!((0.0..=1.0).contains(&row.rate));
        assert_eq!(row.rate, row.rejections as f64 / 50.0);
        let se = (row.rate * (1.0 - row.rate) / 50.0).sqrt();
        assert!((row.se - se).abs() < 1e-12);
        assert!(!row.null);
    }
    let single = run_scenario(&scenario("one", vec![0.0; 4], 1, pooled_tests())).unwrap();
    for row in single {
        assert!(row.rate == 0.0 || row.rate == 1.0);
        assert_eq!(row.se, 0.0);
        assert!(row.null);
    }
}

#[test]
fn sizes_are_controlled_under_the_null() {
    let s = scenario("H0", vec![0.0; 4], 800, pooled_tests());
    for row in run_scenario(&s).unwrap() {
        assert!(row.rate <= 0.05 + 3.0 * row.se, "{}: {}", row.test, row.rate);
        if row.estimand_label() == "pava" {
            let se = (0.05f64 * 0.95 / row.runs as f64).sqrt();
            assert!(row.rate <= 0.05 + 2.0 * se, "{}: {}", row.test, row.rate);
        }
    }
}

#[test]
fn power_grows_with_the_span() {
    let mut previous: Option<Vec<f64>> = None;
    for span in [0.4, 0.8, 1.2] {
        let mu = [0.0, 0.0, 0.5, 1.0].iter().map(|x| x * span).collect();
        let rows = run_scenario(&scenario("span", mu, 300, pooled_tests())).unwrap();
        let rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
        if let Some(prev) = &previous {
            for (row, p) in rows.iter().zip(prev) {
                assert!(row.rate >= p - 2.0 * row.se.max(1.0 / 300.0), "{} at span {span}", row.test);
            }
        }
        previous = Some(rates);
    }
}

#[test]
fn sandwich_tests_run_on_heteroscedastic_data() {
    let tests = vec![
        TestSpec::new(TestFamily::GrandMeanMCT).variance(VarianceMode::Sandwich),
        TestSpec::new(TestFamily::GrandMeanMCTPava).variance(VarianceMode::Sandwich),
    ];
    let s = Scenario { sigma: vec![3.0, 1.0, 1.0, 1.0], ..scenario("het", vec![0.0; 4], 100, tests) };
    let rows = run_scenario(&s).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.null && r.rate < 0.2));
}

#[test]
fn calibration_hits_the_target() {
    let template = scenario("cal", vec![0.0; 4], 300, vec![TestSpec::new(TestFamily::AnovaF)]);
    let c = calibrate_span(&template, &[0.0, 0.0, 0.0, 1.0], 0.6, 2).unwrap();
    assert!(c.achieved >= 0.6 && c.achieved < 0.6 + 0.02, "{c:?}");
    let check = Scenario { mu: vec![0.0, 0.0, 0.0, c.span], ..template };
    assert_eq!(run_scenario(&check).unwrap()[0].rate, c.achieved);
}
