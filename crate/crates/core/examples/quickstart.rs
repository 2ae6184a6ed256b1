//! Minimal end-to-end use of the library: design an exploration sequence
//! for a rotation-type target, then drive a quadratic objective with it.
//!
//! Run with `cargo run -p ncmap-core --example quickstart`.

use ncmap_core::{
    construct_w, counter_rotation, harmonic_schedule, objectives, run, GeneratingPair,
    MapParameters, RunSettings, StopCriteria, TargetFamily, TargetSpec,
};

fn main() {
    // Two-point scheme, rank-collapsed rotation target, sin/cos pair.
    let params = MapParameters::two_point();
    let target = TargetSpec::new(TargetFamily::H2, 2)
        .with_a(1.0)
        .with_b(1.0)
        .with_q(counter_rotation(2));
    let pair = GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();

    let em = construct_w(&target, &params, &[2.0, 2.0]).expect("construction");
    println!("exploration matrix: {em}");
    println!(
        "zero-sum defect {:.2e}, reconstruction residual {:.2e}",
        em.zero_sum_defect(),
        em.reconstruction_residual().unwrap()
    );

    let settings = RunSettings {
        schedule: harmonic_schedule(0.1, em.m),
        stop: StopCriteria::max_iters(2000),
    };
    let mut objective = objectives::quadratic(&[1.0, 2.0]);
    let record = run(&em, &pair, &params, &settings, &mut objective, &[0.0, 1.0]).unwrap();

    let x = record.final_iterate();
    println!(
        "{} steps, stop = {}, final x = ({:.4}, {:.4}), final J = {:.6}, {} evaluations",
        record.steps(),
        record.stop_reason.tag(),
        x[0],
        x[1],
        record.final_objective(),
        record.eval_count
    );
}
