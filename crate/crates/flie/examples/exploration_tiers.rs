//! The escalation ladder when the surface disappears: a forward sweep
//! over the half circle, a full-circle sweep, then a backtrack of the
//! stored view poses with headings flipped outward. Positive
//! information gain at any candidate re-engages inspection; running out
//! of candidates at the last tier ends the search.

use flie::explorer::{
    e1_headings, e2_headings, ExplorationState, ExploreOutcome, PoseRepository, Tier,
};
use flie::geometry::{Pose, Vec3};

fn main() {
    let alpha = 86f64.to_radians();
    let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), 0.0);

    println!("sweep headings from yaw 0 at fov {:.0} deg:", alpha.to_degrees());
    let e1: Vec<String> = e1_headings(&pose, alpha).iter().map(|y| format!("{y:+.3}")).collect();
    let e2: Vec<String> = e2_headings(&pose, alpha).iter().map(|y| format!("{y:+.3}")).collect();
    println!("  half circle: {}", e1.join("  "));
    println!("  full circle: {}", e2.join("  "));
    println!();

    // A small repository, as if five view poses were stored while
    // inspecting; the backtrack revisits them newest first, turned
    // around to look away from the inspected surface.
    let mut repo = PoseRepository::new();
    for i in 0..5 {
        repo.push(Pose::new(Vec3::new(i as f64 * 0.4, 0.0, 1.0), 0.3));
    }
    repo.freeze_base_loop();

    // An engaged agent loses the surface: tier one first. Gains are
    // zero everywhere, so watch it escalate.
    let mut state = ExplorationState::from_inspection(true, &pose, alpha, &repo);
    println!("candidate walk, zero gain everywhere:");
    let mut current = state.current_target().unwrap();
    loop {
        print!(
            "  {} at ({:+.2}, {:+.2}, {:.2}) yaw {:+.3}",
            state.tier(),
            current.position.x,
            current.position.y,
            current.position.z,
            current.yaw
        );
        match state.report_gain(0, &current, alpha, &repo) {
            ExploreOutcome::Next(next) => {
                println!();
                current = next;
            }
            ExploreOutcome::TierChange { tier, next } => {
                println!("  -> escalate to {tier}");
                current = next;
            }
            ExploreOutcome::Found(_) => unreachable!("no gain anywhere"),
            ExploreOutcome::Exhausted => {
                println!("  -> exhausted");
                break;
            }
        }
    }
    println!();

    // Same ladder, but the second full-circle heading sees something.
    // The sweep still visits every heading before picking the winner.
    let mut state = ExplorationState::from_inspection(false, &pose, alpha, &repo);
    assert_eq!(state.tier(), Tier::E2, "an unengaged agent skips the forward sweep");
    let mut current = state.current_target().unwrap();
    for gain in [0usize, 240, 35, 0] {
        match state.report_gain(gain, &current, alpha, &repo) {
            ExploreOutcome::Next(next) => current = next,
            ExploreOutcome::Found(p) => {
                println!(
                    "gains [0, 240, 35, 0] over the full circle: best view wins, re-engage at yaw {:+.3}",
                    p.yaw
                );
                return;
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
