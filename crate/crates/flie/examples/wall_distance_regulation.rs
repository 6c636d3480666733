//! Stand-off regulation against a flat wall. The agent starts half a
//! meter too far out; the first planner step closes almost all of the
//! error and the rest of the run holds the safety distance while
//! sliding along the face.

use std::path::PathBuf;

use flie::mission::run_mission;
use flie::world::Scenario;

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/flat_wall.toml");
    let scenario = Scenario::from_file(&path).expect("scenario parses");
    let d_safety = scenario.planner.d_safety;
    let log = run_mission(&scenario);

    println!("target stand-off {d_safety} m, start error 0.5 m");
    println!();
    println!("tick  measured-distance  error");
    for t in log.ticks.iter().take(12) {
        if let Some(d) = t.surface_distance {
            println!("{:>4}  {:>17.4}  {:>+7.4}", t.step, d, d - d_safety);
        }
    }
    println!();

    // Steady state, skipping the deliberate initial offset.
    let errors: Vec<f64> = log
        .ticks
        .iter()
        .skip(1)
        .filter_map(|t| t.surface_distance.map(|d| (d - d_safety).abs()))
        .collect();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let max = errors.iter().cloned().fold(0.0, f64::max);
    println!("steady-state over {} inspection ticks: mean {:.4} m, max {:.4} m", errors.len(), mean, max);
}
