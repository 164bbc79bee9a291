mod common;

use common::*;

#[test]
fn every_operation_matches_central_differences() {
    let cases = gradient_cases();
    assert!(cases.len() >= 10);
    for c in &cases {
        assert!(
            c.passed(),
            "{}: max rel err {:.3e} (tolerance {:.0e}), flagged {:?}",
            c.name,
            c.report.max_rel_error,
            c.tolerance,
            c.report.flagged().collect::<Vec<_>>()
        );
    }
}

#[test]
fn penalty_setup_avoids_kinks_and_matches_closed_form() {
    use wdtl::wdgrl::{assemble_h, critic_objective, empirical_wasserstein, gradient_penalty};
    let (critic, h_s, h_t, h_r) = kink_free_critic_setup(11, 1e-3);
    let obj = critic_objective(&h_s, &h_t, &h_r, &critic, 10.0).unwrap();
    let all = assemble_h(&h_s, &h_t, &h_r).unwrap();
    let penalty = gradient_penalty(&all, &critic).unwrap();
    let wd = empirical_wasserstein(&h_s, &h_t, &critic).unwrap();
    assert!((obj.penalty - penalty).abs() < 1e-12);
    assert!((obj.wasserstein - wd).abs() < 1e-12);
    assert!((obj.value - (wd - 10.0 * penalty)).abs() < 1e-12);
}

#[test]
fn whole_network_gradient_on_sampled_coordinates() {
    let (report, skipped) = network_gradient_check(3, 150);
    assert!(skipped < 15, "{skipped} coordinates on kinks");
    assert!(report.max_rel_error < FIRST_ORDER_TOL, "max rel err {:.3e}", report.max_rel_error);
}
