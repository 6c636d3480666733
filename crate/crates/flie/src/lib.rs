//! Deterministic desk-scale simulator of a UAV autonomy that
//! alternates surface inspection with staged exploration.
//!
//! The agent keeps a fixed standoff from whatever surface it sees, slides
//! sideways in overlapping camera footprints, climbs a level when scene
//! recognition says the current ring is closed, and when it loses the
//! surface escalates through yaw sweeps and a backtrack of its own past
//! view poses to find more structure. Everything is deterministic under a
//! scenario seed: same input, byte-identical output files.
//!
//! Modules, roughly bottom up:
//!
//! * [`geometry`]: vectors, yaw poses, frame-tagged point clouds.
//! * [`kdtree`]: exact nearest-neighbor lookups for clouds.
//! * [`world`]: axis-aligned block structures, landmark scatter,
//!   surface sampling, scenario files.
//! * [`sensor`]: ray-cast depth fan, measurement filter, landmark
//!   visibility.
//! * [`planner`]: overlap-driven next-view geometry and the safety
//!   standoff.
//! * [`recognizer`]: landmark-overlap scene scores with an adaptive
//!   threshold.
//! * [`explorer`]: escalating search tiers and the pose repository.
//! * [`mission`]: the mode machine, vehicle tracking, tick loop.
//! * [`metrics`]: run logs, summary metrics, file export and readback.
//!
//! The quickest way in is [`mission::run_mission`] with a
//! [`world::Scenario`], then [`metrics::metrics_report`] and
//! [`metrics::export`] on the returned log.

pub mod explorer;
pub mod geometry;
pub mod kdtree;
pub mod metrics;
pub mod mission;
pub mod planner;
pub mod recognizer;
pub mod sensor;
pub mod world;
