//! Tiered search for new surface when inspection runs out of structure.
//!
//! Escalation ladder: a yaw-in-place sweep reusing the current position
//! (first tier only when the agent was actively inspecting, second tier
//! always), then backtracking travel through the stored base-loop poses
//! with reversed headings, then exhaustion, which ends the mission. Each
//! sweep visits every candidate, records the point count seen there, and
//! only then commits to the best one.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{wrap_angle, Pose};

#[derive(Debug, Error, PartialEq)]
pub enum ExplorerError {
    #[error("backtrack index {k} outside the base loop of length {j}")]
    IndexOutOfRange { k: usize, j: usize },
}

/// Every inspection pose ever commanded, in command order. The base-loop
/// length is frozen at the first ascent and marks how much of the prefix
/// the backtracker may revisit.
#[derive(Debug, Clone, Default)]
pub struct PoseRepository {
    poses: Vec<Pose>,
    frozen_base_len: Option<usize>,
}

impl PoseRepository {
    pub fn new() -> Self {
        PoseRepository::default()
    }

    pub fn push(&mut self, pose: Pose) {
        self.poses.push(pose);
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    /// Freeze the base-loop length at the current size. Only the first
    /// call has any effect.
    pub fn freeze_base_loop(&mut self) {
        if self.frozen_base_len.is_none() {
            self.frozen_base_len = Some(self.poses.len());
        }
    }

    /// Length of the base inspection loop: frozen at the first ascent,
    /// otherwise everything recorded so far is base level.
    pub fn base_loop_len(&self) -> usize {
        self.frozen_base_len.unwrap_or(self.poses.len())
    }
}

/// Headings for the forward-continuation sweep: cumulative full-fov
/// increments from the current heading, count sized to half-fov sectors.
pub fn e1_headings(pose: &Pose, alpha: f64) -> Vec<f64> {
    let m = (PI / (0.5 * alpha)).round() as usize;
    cumulative_headings(pose.yaw, alpha, m)
}

/// Headings for the full-circle sweep: same increments, count sized to
/// cover one full turn.
pub fn e2_headings(pose: &Pose, alpha: f64) -> Vec<f64> {
    let m = (2.0 * PI / alpha).round() as usize;
    cumulative_headings(pose.yaw, alpha, m)
}

fn cumulative_headings(psi0: f64, alpha: f64, m: usize) -> Vec<f64> {
    (1..=m).map(|k| wrap_angle(psi0 + k as f64 * alpha)).collect()
}

/// The k-th backtrack pose: walk the base loop backwards and face the
/// opposite way, so the sensor looks outward from the inspected surface.
pub fn e3_backtrack(repo: &PoseRepository, k: usize) -> Result<Pose, ExplorerError> {
    let j = repo.base_loop_len();
    if k < 1 || k > j {
        return Err(ExplorerError::IndexOutOfRange { k, j });
    }
    let stored = repo.poses[j - k];
    Ok(Pose::new(stored.position, wrap_angle(PI + stored.yaw)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    E1,
    E2,
    E3,
    Exhausted,
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tier::E1 => "E1",
            Tier::E2 => "E2",
            Tier::E3 => "E3",
            Tier::Exhausted => "EXHAUSTED",
        };
        f.write_str(s)
    }
}

/// What the search wants after a gain report.
#[derive(Debug, Clone, PartialEq)]
pub enum ExploreOutcome {
    /// Sweep continues: settle at this candidate and report its gain.
    Next(Pose),
    /// Sweep finished and a candidate saw surface: fly there and resume
    /// inspection.
    Found(Pose),
    /// Sweep finished empty; escalated, first candidate of the new tier.
    TierChange { tier: Tier, next: Pose },
    /// Every tier came back empty.
    Exhausted,
}

/// One exploration episode: the current tier, its candidate list and the
/// gains recorded so far.
#[derive(Debug, Clone)]
pub struct ExplorationState {
    tier: Tier,
    engaged: bool,
    pending: Vec<Pose>,
    k: usize,
    candidates: Vec<(Pose, usize)>,
}

impl ExplorationState {
    /// Episode entered from inspection. An engaged agent (one that was
    /// actually tracking surface this episode) earns the forward sweep;
    /// otherwise the search starts with the full circle.
    pub fn from_inspection(
        engaged: bool,
        pose: &Pose,
        alpha: f64,
        repo: &PoseRepository,
    ) -> Self {
        let tier = if engaged { Tier::E1 } else { Tier::E2 };
        let mut state = ExplorationState {
            tier,
            engaged,
            pending: Vec::new(),
            k: 0,
            candidates: Vec::new(),
        };
        state.load_tier(tier, pose, alpha, repo);
        state
    }

    /// Episode entered after returning to base with the structure top
    /// reached: backtracking only.
    pub fn from_base(repo: &PoseRepository) -> Self {
        let mut state = ExplorationState {
            tier: Tier::E3,
            engaged: false,
            pending: Vec::new(),
            k: 0,
            candidates: Vec::new(),
        };
        // Pose and fov are irrelevant for the backtrack candidate list.
        state.load_tier(Tier::E3, &Pose::new(crate::geometry::Vec3::ZERO, 0.0), 1.0, repo);
        state
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn engaged(&self) -> bool {
        self.engaged
    }

    /// Candidate the agent should currently be settling at.
    pub fn current_target(&self) -> Option<Pose> {
        self.pending.get(self.k).copied()
    }

    pub fn sweep_len(&self) -> usize {
        self.pending.len()
    }

    pub fn sweep_index(&self) -> usize {
        self.k
    }

    fn load_tier(&mut self, tier: Tier, pose: &Pose, alpha: f64, repo: &PoseRepository) {
        self.tier = tier;
        self.k = 0;
        self.candidates.clear();
        self.pending = match tier {
            Tier::E1 => e1_headings(pose, alpha)
                .into_iter()
                .map(|psi| Pose::new(pose.position, psi))
                .collect(),
            Tier::E2 => e2_headings(pose, alpha)
                .into_iter()
                .map(|psi| Pose::new(pose.position, psi))
                .collect(),
            Tier::E3 => (1..=repo.base_loop_len())
                .map(|k| e3_backtrack(repo, k).expect("k ranges over the base loop"))
                .collect(),
            Tier::Exhausted => Vec::new(),
        };
        // A tier with nothing to visit (backtracking an empty repository)
        // falls straight through to the next one.
        if self.pending.is_empty() && tier != Tier::Exhausted {
            self.escalate(pose, alpha, repo);
        }
    }

    fn escalate(&mut self, pose: &Pose, alpha: f64, repo: &PoseRepository) {
        match self.tier {
            Tier::E1 => self.load_tier(Tier::E2, pose, alpha, repo),
            Tier::E2 => self.load_tier(Tier::E3, pose, alpha, repo),
            Tier::E3 | Tier::Exhausted => {
                self.tier = Tier::Exhausted;
                self.pending.clear();
                self.k = 0;
                self.candidates.clear();
            }
        }
    }

    /// Record the point count seen at the current candidate and decide
    /// what happens next. `pose` is the agent's settled pose, used as the
    /// anchor if a fresh sweep must be built.
    pub fn report_gain(
        &mut self,
        gain: usize,
        pose: &Pose,
        alpha: f64,
        repo: &PoseRepository,
    ) -> ExploreOutcome {
        if self.tier == Tier::Exhausted {
            return ExploreOutcome::Exhausted;
        }
        let Some(current) = self.current_target() else {
            return ExploreOutcome::Exhausted;
        };
        self.candidates.push((current, gain));
        self.k += 1;
        if let Some(next) = self.current_target() {
            return ExploreOutcome::Next(next);
        }
        // Sweep complete: strict-majority argmax, earliest index wins.
        let winner = self
            .candidates
            .iter()
            .enumerate()
            .filter(|(_, (_, g))| *g > 0)
            .max_by(|(ia, (_, ga)), (ib, (_, gb))| ga.cmp(gb).then(ib.cmp(ia)))
            .map(|(_, (p, _))| *p);
        if let Some(p) = winner {
            return ExploreOutcome::Found(p);
        }
        self.escalate(pose, alpha, repo);
        if self.tier == Tier::Exhausted {
            ExploreOutcome::Exhausted
        } else {
            ExploreOutcome::TierChange {
                tier: self.tier,
                next: self.current_target().expect("freshly loaded tier has candidates"),
            }
        }
    }

    /// Recorded (pose, gain) pairs of the sweep in progress.
    pub fn recorded(&self) -> &[(Pose, usize)] {
        &self.candidates
    }
}
