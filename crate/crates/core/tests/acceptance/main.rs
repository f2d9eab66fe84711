//! One line per acceptance criterion. Pass numbers as arguments to run a subset.

use std::time::Instant;

mod design;
mod estimation;
mod montecarlo;
mod structure;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(u32, &str, Criterion); 10] = [
        (1, "representation round trips", structure::representation_suite),
        (2, "QCS orthogonality and decay dominance", structure::qcs_orthogonality),
        (3, "perturbation Jacobians", structure::perturbation_jacobians),
        (4, "state decomposition identity", structure::state_decomposition),
        (5, "estimator equivalences", estimation::equivalences),
        (6, "chi-square limit of LR(a; Lambda)", montecarlo::chi_square_size),
        (7, "LR(Lambda) quantile vs limit table", montecarlo::lambda_quantile),
        (8, "limit-distribution anchor", montecarlo::dickey_fuller_anchor),
        (9, "conditional interval coverage", montecarlo::conditional_coverage),
        (10, "Bonferroni coverage and half-life anchors", montecarlo::bonferroni_coverage),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag}: {name}: {} [{:.1}s]", out.detail, t.elapsed().as_secs_f64());
        if !out.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
