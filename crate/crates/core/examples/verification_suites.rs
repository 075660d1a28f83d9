//! Running the identity checks against the reference calculus and against
//! a deliberately broken one.
//!
//! ```bash
//! cargo run --example verification_suites
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::distribution::TransversalDistribution;
use transversal::expr::{parse, AxisBox, MultiIndex};
use transversal::verify::{corrupt, run_suite, uniform_grid, CheckConfig, Reference, Suite, SuiteInputs};

fn main() {
    let bundle = TrivialBundle::new(1, 1).unwrap();
    let base = |s: &str| parse(s, bundle.base_layout()).unwrap();
    let total = |s: &str| parse(s, bundle.layout()).unwrap();

    let mut inputs = SuiteInputs::new(bundle);
    let sigma = Section::new(bundle, vec![base("x0 + x0^2/4")], None).unwrap();
    inputs.distributions = vec![
        ("dirac".into(), TransversalDistribution::dirac(sigma, base("bump(x0)"), MultiIndex::new(vec![1])).unwrap()),
        ("density".into(), TransversalDistribution::density(bundle, total("bump(x0)*bump(y0)")).unwrap()),
    ];
    inputs.functions = vec![("F".into(), total("sin(y0)*exp(x0/2)")), ("G".into(), total("2 + x0*y0"))];
    inputs.grid = uniform_grid(&AxisBox::cube(1, 1.0), 9);
    inputs.localization_points = vec![vec![0.0]];

    let config = CheckConfig::default();
    for suite in [Suite::Restriction, Suite::Leibniz, Suite::Duality] {
        let good = run_suite(suite, &inputs, &Reference, &config).unwrap();
        let fixture = corrupt::for_suite(suite);
        let bad = run_suite(suite, &inputs, fixture.as_ref(), &config).unwrap();
        println!(
            "{suite:<12} reference: {} (max error {:.1e}); {}: {}",
            if good.passed() { "pass" } else { "FAIL" },
            good.max_error(),
            fixture.name(),
            if bad.passed() { "missed" } else { "caught" },
        );
    }
    print!("{}", run_suite(Suite::Leibniz, &inputs, &Reference, &config).unwrap());
}
