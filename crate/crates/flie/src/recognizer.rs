//! Loop-closure detection by landmark-set matching.
//!
//! A query signature is captured at the start of each inspection loop.
//! Every later view is scored against it: the score is the matched
//! fraction of the candidate's landmarks, and the decision threshold is
//! the running mean of recent scores once enough of them exist. The
//! check always uses the threshold as it stood before the new score is
//! folded in, so a view is judged against history, not against itself.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::geometry::Pose;

#[derive(Debug, Error, PartialEq)]
pub enum RecognizerError {
    #[error("candidate signature has no landmarks to match against")]
    NoDescriptors,
}

#[derive(Debug, Clone, Copy)]
pub struct RecognitionParams {
    pub initial_threshold: f64,
    /// Number of recent scores averaged into the threshold.
    pub horizon: usize,
}

impl Default for RecognitionParams {
    fn default() -> Self {
        RecognitionParams { initial_threshold: 0.6, horizon: 6 }
    }
}

/// The landmarks seen from one pose, standing in for an image's feature
/// descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSignature {
    pub landmark_ids: BTreeSet<u32>,
    pub pose_at_capture: Pose,
}

impl SceneSignature {
    pub fn new(ids: impl IntoIterator<Item = u32>, pose_at_capture: Pose) -> Self {
        SceneSignature { landmark_ids: ids.into_iter().collect(), pose_at_capture }
    }

    pub fn len(&self) -> usize {
        self.landmark_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmark_ids.is_empty()
    }
}

/// Matched fraction of the candidate: |query ∩ candidate| / |candidate|.
pub fn similarity(query: &SceneSignature, candidate: &SceneSignature) -> Result<f64, RecognizerError> {
    if candidate.is_empty() {
        return Err(RecognizerError::NoDescriptors);
    }
    let matches = query.landmark_ids.intersection(&candidate.landmark_ids).count();
    Ok(matches as f64 / candidate.len() as f64)
}

/// Outcome of scoring one view against the current query.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub score: f64,
    /// Threshold the decision was made against (pre-update value).
    pub threshold: f64,
    pub visited: bool,
}

#[derive(Debug, Clone)]
pub struct Recognizer {
    params: RecognitionParams,
    threshold: f64,
    window: VecDeque<f64>,
    query: Option<SceneSignature>,
}

impl Recognizer {
    pub fn new(params: RecognitionParams) -> Self {
        Recognizer {
            threshold: params.initial_threshold,
            window: VecDeque::with_capacity(params.horizon),
            query: None,
            params,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn query(&self) -> Option<&SceneSignature> {
        self.query.as_ref()
    }

    pub fn has_query(&self) -> bool {
        self.query.is_some()
    }

    /// Install a fresh query; scores and threshold carry over, since the
    /// threshold tracks the score regime of the whole mission.
    pub fn set_query(&mut self, query: SceneSignature) {
        self.query = Some(query);
    }

    /// Fold a score into the window. The threshold stays at its initial
    /// value until a full horizon of scores exists, then becomes the
    /// sliding mean of the most recent horizon.
    pub fn update_threshold(&mut self, score: f64) {
        self.window.push_back(score);
        while self.window.len() > self.params.horizon {
            self.window.pop_front();
        }
        if self.window.len() == self.params.horizon {
            self.threshold = self.window.iter().sum::<f64>() / self.params.horizon as f64;
        }
    }

    /// Score a candidate view against the query. Returns `None` when no
    /// query is installed. A candidate with no landmarks scores zero and
    /// is kept out of the threshold window, since there was nothing to
    /// match against.
    pub fn observe(&mut self, candidate: &SceneSignature) -> Option<Observation> {
        self.query.as_ref()?;
        let threshold = self.threshold;
        let Ok(score) = similarity(self.query.as_ref().unwrap(), candidate) else {
            return Some(Observation { score: 0.0, threshold, visited: false });
        };
        // Decision against the pre-update threshold; the positive-score
        // guard keeps a fully unmatched view from closing a loop when the
        // threshold itself has slid to zero.
        let visited = score > 0.0 && score >= threshold;
        self.update_threshold(score);
        Some(Observation { score, threshold, visited })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use approx::assert_relative_eq;

    fn sig(ids: impl IntoIterator<Item = u32>) -> SceneSignature {
        SceneSignature::new(ids, Pose::new(Vec3::ZERO, 0.0))
    }

    #[test]
    fn similarity_basics() {
        let a = sig(0..40);
        assert_relative_eq!(similarity(&a, &a).unwrap(), 1.0);
        let b = sig(100..140);
        assert_relative_eq!(similarity(&a, &b).unwrap(), 0.0);
        // 31 of the candidate's 100 ids shared.
        let query = sig(0..31);
        let candidate = sig(0..100);
        assert_relative_eq!(similarity(&query, &candidate).unwrap(), 0.31);
    }

    #[test]
    fn similarity_normalizes_by_candidate() {
        let query = sig(0..20);
        let candidate = sig(0..10);
        assert_relative_eq!(similarity(&query, &candidate).unwrap(), 1.0);
        let reversed = similarity(&candidate, &query).unwrap();
        assert_relative_eq!(reversed, 0.5);
    }

    #[test]
    fn adding_a_shared_id_never_lowers_the_score() {
        let query = sig(0..50);
        let mut ids: Vec<u32> = (40..60).collect();
        let mut last = similarity(&query, &sig(ids.clone())).unwrap();
        for extra in 0..10 {
            ids.push(extra);
            let s = similarity(&query, &sig(ids.clone())).unwrap();
            // Candidate size grows too, so compare matched counts scaled.
            assert!(s * ids.len() as f64 >= last * (ids.len() - 1) as f64 - 1e-12);
            last = s;
        }
    }

    #[test]
    fn empty_candidate_is_an_error() {
        let q = sig(0..5);
        assert_eq!(similarity(&q, &sig([])), Err(RecognizerError::NoDescriptors));
    }

    #[test]
    fn threshold_frozen_through_warmup_then_mean() {
        let mut r = Recognizer::new(RecognitionParams::default());
        r.set_query(sig(0..31));
        let candidate = sig(0..100);
        for _ in 0..5 {
            let obs = r.observe(&candidate).unwrap();
            assert_relative_eq!(obs.threshold, 0.6);
        }
        assert_relative_eq!(r.threshold(), 0.6);
        // Sixth score completes the horizon: mean of six 0.31 scores.
        r.observe(&candidate).unwrap();
        assert_relative_eq!(r.threshold(), 0.31, epsilon = 1e-12);
    }

    #[test]
    fn threshold_slides_after_warmup() {
        let mut r = Recognizer::new(RecognitionParams { initial_threshold: 0.6, horizon: 3 });
        r.set_query(sig(0..100));
        // Candidates sized to give scores 0.3, 0.6, 0.9, then 0.0.
        let scores = [(30, 100), (60, 100), (90, 100)];
        for (shared, total) in scores {
            let ids: Vec<u32> = (0..shared).chain(1000..1000 + (total - shared)).collect();
            r.observe(&sig(ids)).unwrap();
        }
        assert_relative_eq!(r.threshold(), 0.6, epsilon = 1e-12);
        let disjoint: Vec<u32> = (1000..1100).collect();
        r.observe(&sig(disjoint)).unwrap();
        // Window is now [0.6, 0.9, 0.0].
        assert_relative_eq!(r.threshold(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_horizon_tracks_last_score() {
        let mut r = Recognizer::new(RecognitionParams { initial_threshold: 0.6, horizon: 1 });
        r.set_query(sig(0..10));
        let half: Vec<u32> = (0..5).chain(100..105).collect();
        r.observe(&sig(half)).unwrap();
        assert_relative_eq!(r.threshold(), 0.5);
    }

    #[test]
    fn decision_uses_pre_update_threshold_and_equality_fires() {
        let mut r = Recognizer::new(RecognitionParams { initial_threshold: 0.6, horizon: 1 });
        r.set_query(sig(0..10));
        let half: Vec<u32> = (0..5).chain(100..105).collect();
        // First view: 0.5 < 0.6, no fire; threshold becomes 0.5.
        let first = r.observe(&sig(half.clone())).unwrap();
        assert!(!first.visited);
        // Same view again: 0.5 >= 0.5 against the stored threshold.
        let second = r.observe(&sig(half)).unwrap();
        assert!(second.visited);
        assert_relative_eq!(second.threshold, 0.5);
    }

    #[test]
    fn zero_score_never_fires_even_at_zero_threshold() {
        let mut r = Recognizer::new(RecognitionParams { initial_threshold: 0.6, horizon: 1 });
        r.set_query(sig(0..10));
        let disjoint: Vec<u32> = (100..110).collect();
        r.observe(&sig(disjoint.clone())).unwrap();
        assert_relative_eq!(r.threshold(), 0.0);
        let again = r.observe(&sig(disjoint)).unwrap();
        assert!(!again.visited, "disjoint views must never close a loop");
    }

    #[test]
    fn empty_candidate_logs_zero_without_touching_the_window() {
        let mut r = Recognizer::new(RecognitionParams { initial_threshold: 0.6, horizon: 1 });
        r.set_query(sig(0..10));
        let obs = r.observe(&sig([])).unwrap();
        assert_relative_eq!(obs.score, 0.0);
        assert!(!obs.visited);
        // An unmatched view must not update the threshold window.
        assert_relative_eq!(r.threshold(), 0.6);
    }

    #[test]
    fn no_query_means_no_observation() {
        let mut r = Recognizer::new(RecognitionParams::default());
        assert!(r.observe(&sig(0..10)).is_none());
        assert!(!r.has_query());
        r.set_query(sig(0..10));
        assert!(r.has_query());
        assert!(r.query().is_some());
    }
}
