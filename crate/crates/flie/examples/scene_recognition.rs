//! Loop closure by landmark overlap. A query view is captured when the
//! agent engages a surface; every later view is scored against it and
//! the firing threshold adapts to the recent score history, so the
//! agent learns what "unfamiliar" looks like on this structure and
//! fires only when the old view genuinely comes back.

use flie::geometry::{Pose, Vec3};
use flie::recognizer::{Recognizer, RecognitionParams, SceneSignature};

fn sig(ids: impl IntoIterator<Item = u32>) -> SceneSignature {
    SceneSignature::new(ids, Pose::new(Vec3::ZERO, 0.0))
}

fn main() {
    let params = RecognitionParams::default();
    let mut rec = Recognizer::new(params);

    // The query: thirty landmarks seen at the engagement pose.
    rec.set_query(sig(0..30));
    println!("query captured, threshold starts at {:.3}", rec.threshold());
    println!();

    // Walking away: each view shares fewer landmarks with the query,
    // then the loop closes and the overlap comes back. While the score
    // window fills, the threshold stays at its initial value; after
    // that it tracks the recent history downward, so the modest overlap
    // of the returning view is enough to fire.
    let walk: Vec<Vec<u32>> = vec![
        (14..44).collect(),              // one step out, strong overlap
        (17..47).collect(),
        (21..51).collect(),
        (26..56).collect(),
        (30..60).collect(),              // far side, disjoint
        (30..60).collect(),
        (30..60).collect(),
        (30..60).collect(),
        (0..9).chain(40..60).collect(),  // coming back around
        (0..21).chain(50..60).collect(), // the query view again
    ];

    println!("view  score  threshold  verdict");
    for (i, ids) in walk.into_iter().enumerate() {
        let n = ids.len();
        let obs = rec.observe(&sig(ids)).expect("query is set");
        println!(
            "{:>4}  {:.3}  {:>9.3}  {}",
            i,
            obs.score,
            obs.threshold,
            if obs.visited { "visited" } else { "new" }
        );
        let _ = n;
    }
    println!();
    println!(
        "threshold after the walk: {:.3} (sliding mean of the last {} scores)",
        rec.threshold(),
        params.horizon
    );
}
