use distaf_core::{assessment_scorecard, AssessmentStatus};
use distaf_testkit::gen::{self, Fill, Shape};
use distaf_testkit::oracle::check_scorecard;

#[test]
fn engine_matches_exact_oracle_on_random_frameworks() {
    let mut nodes = 0;
    for seed in 0..1000u64 {
        let mut rng = gen::rng(seed);
        let t = gen::framework(&mut rng, Shape::default());
        let report = distaf_core::validate::validate_template(&t);
        assert!(
            !report.has_errors(),
            "seed {seed}: generator produced an invalid template:\n{report}"
        );
        let status = AssessmentStatus::ALL[(seed % 3) as usize];
        let a = gen::assessment(&mut rng, &t, Fill::MIXED, status);
        let card = assessment_scorecard(&t, &a).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        nodes +=
            check_scorecard(&t, &a, &card, 1e-9).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
    assert!(nodes > 10_000);
}

#[test]
fn complete_assessments_match_oracle() {
    for seed in 5000..5300u64 {
        let mut rng = gen::rng(seed);
        let t = gen::framework(&mut rng, Shape::default());
        let a = gen::assessment(&mut rng, &t, Fill::COMPLETE, AssessmentStatus::Public);
        let card = assessment_scorecard(&t, &a).unwrap();
        check_scorecard(&t, &a, &card, 1e-9).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(card.design.completeness, 1.0);
        assert_eq!(card.operational.completeness, 1.0);
    }
}
