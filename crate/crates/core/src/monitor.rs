//! Sliding-window autonomous-decision ratio and post-hoc state labelling.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::{Decision, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub window_size: usize,
    pub adr_threshold: f64,
    pub warmup_iterations: usize,
    /// Consecutive at-or-above-threshold values needed to call a recovery.
    pub recovery_sustain: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            window_size: 20,
            adr_threshold: 0.7,
            warmup_iterations: 0,
            recovery_sustain: 1,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 {
            return Err(Error::InvalidInput("monitor.window_size must be positive".into()));
        }
        if !(self.adr_threshold > 0.0 && self.adr_threshold <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "monitor.adr_threshold must be in (0,1], got {}",
                self.adr_threshold
            )));
        }
        if self.recovery_sustain == 0 {
            return Err(Error::InvalidInput("monitor.recovery_sustain must be positive".into()));
        }
        Ok(())
    }
}

/// Fixed-size FIFO of 0/1 marks, pre-filled with zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdrWindow {
    marks: VecDeque<u8>,
    sum: usize,
}

impl AdrWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInput("window capacity must be positive".into()));
        }
        Ok(Self {
            marks: std::iter::repeat_n(0, capacity).collect(),
            sum: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.marks.len()
    }

    pub fn adr(&self) -> f64 {
        self.sum as f64 / self.marks.len() as f64
    }

    pub fn marks(&self) -> impl Iterator<Item = u8> + '_ {
        self.marks.iter().copied()
    }

    /// Drops the oldest mark, appends this one, returns the new ratio.
    pub fn record(&mut self, kind: Decision) -> f64 {
        let old = self.marks.pop_front().unwrap_or(0);
        self.sum -= old as usize;
        self.marks.push_back(kind.mark());
        self.sum += kind.mark() as usize;
        self.adr()
    }

    /// Rewrites the newest mark, e.g. once a mechanism has overridden it.
    pub fn replace_last(&mut self, kind: Decision) -> f64 {
        if let Some(last) = self.marks.back_mut() {
            self.sum = self.sum - *last as usize + kind.mark() as usize;
            *last = kind.mark();
        }
        self.adr()
    }
}

pub fn should_intervene(adr: f64, config: &MonitorConfig, iteration: usize) -> bool {
    iteration >= config.warmup_iterations && adr < config.adr_threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseState {
    Steady,
    Disruption,
    Recovered,
    FinalDisruption,
    FinalSteady,
}

/// Half-open `[start, end)` span of iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub state: PhaseState,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimeline {
    pub segments: Vec<Segment>,
    pub disruption_onset: usize,
    pub fix_event: usize,
}

impl PhaseTimeline {
    pub fn find(&self, state: PhaseState) -> Option<&Segment> {
        self.segments.iter().find(|s| s.state == state)
    }

    /// State label of one iteration.
    pub fn state_at(&self, iteration: usize) -> Option<PhaseState> {
        self.segments
            .iter()
            .find(|s| s.start <= iteration && iteration < s.end)
            .map(|s| s.state)
    }
}

/// Labels `[0, onset)` steady, then tracks one degradation and recovery
/// before `fix` and one after it.
///
/// A span with no value below `threshold` stays steady. Otherwise the
/// disruption runs from the span start to the first index after the dip
/// where `sustain` consecutive values are back at or above threshold.
pub fn segment_states(
    adr: &[f64],
    threshold: f64,
    onset: usize,
    fix: usize,
    sustain: usize,
) -> Result<PhaseTimeline> {
    if onset > fix || fix > adr.len() {
        return Err(Error::InvalidInput(format!(
            "need onset <= fix <= {}, got onset={onset} fix={fix}",
            adr.len()
        )));
    }
    let sustain = sustain.max(1);
    let mut segments: Vec<Segment> = Vec::new();
    let mut push = |state, start, end| {
        if end <= start {
            return;
        }
        match segments.last_mut() {
            Some(last) if last.state == state && last.end == start => last.end = end,
            _ => segments.push(Segment { state, start, end }),
        }
    };

    push(PhaseState::Steady, 0, onset);
    match recovery_point(adr, threshold, onset, fix, sustain) {
        None => push(PhaseState::Steady, onset, fix),
        Some(rec) => {
            push(PhaseState::Disruption, onset, rec);
            push(PhaseState::Recovered, rec, fix);
        }
    }
    match recovery_point(adr, threshold, fix, adr.len(), sustain) {
        None => push(PhaseState::FinalSteady, fix, adr.len()),
        Some(rec) => {
            push(PhaseState::FinalDisruption, fix, rec);
            push(PhaseState::FinalSteady, rec, adr.len());
        }
    }
    Ok(PhaseTimeline {
        segments,
        disruption_onset: onset,
        fix_event: fix,
    })
}

/// `None` when `[from, to)` never dips below threshold; otherwise the index
/// where a sustained recovery starts, or `to` if it never does.
fn recovery_point(adr: &[f64], threshold: f64, from: usize, to: usize, sustain: usize) -> Option<usize> {
    let dip = (from..to).find(|&k| adr[k] < threshold)?;
    let mut run = 0;
    for (k, v) in adr.iter().enumerate().take(to).skip(dip) {
        if *v >= threshold {
            run += 1;
            if run == sustain {
                return Some(k + 1 - sustain);
            }
        } else {
            run = 0;
        }
    }
    Some(to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryTimes {
    pub first: usize,
    pub second: Option<usize>,
}

pub fn recovery_time(timeline: &PhaseTimeline) -> RecoveryTimes {
    RecoveryTimes {
        first: timeline.find(PhaseState::Disruption).map_or(0, Segment::len),
        second: timeline.find(PhaseState::FinalDisruption).map(Segment::len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Decision::{Autonomous as A, Human as H};

    #[test]
    fn prefilled_window() {
        let mut w = AdrWindow::new(4).unwrap();
        assert_eq!(w.adr(), 0.0);
        assert_eq!(w.record(A), 0.25);
        let mut w = AdrWindow::new(4).unwrap();
        for d in [A, A, H, A] {
            w.record(d);
        }
        assert_eq!(w.adr(), 0.75);
        assert_eq!(w.capacity(), 4);
    }

    #[test]
    fn replace_last_amends_newest_mark() {
        let mut w = AdrWindow::new(3).unwrap();
        w.record(A);
        assert!((w.record(H) - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.replace_last(A) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(w.marks().collect::<Vec<_>>(), vec![0, 1, 1]);
    }

    #[test]
    fn intervention_guard() {
        let c = MonitorConfig::default();
        assert!(should_intervene(0.69, &c, 0));
        assert!(!should_intervene(0.70, &c, 0));
        let warm = MonitorConfig {
            warmup_iterations: 20,
            ..c
        };
        assert!(!should_intervene(0.0, &warm, 3));
        assert!(should_intervene(0.0, &warm, 20));
    }

    #[test]
    fn config_validation() {
        assert!(MonitorConfig::default().validate().is_ok());
        for bad in [
            MonitorConfig { window_size: 0, ..Default::default() },
            MonitorConfig { adr_threshold: 0.0, ..Default::default() },
            MonitorConfig { adr_threshold: 1.5, ..Default::default() },
            MonitorConfig { recovery_sustain: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn seg(state: PhaseState, start: usize, end: usize) -> Segment {
        Segment { state, start, end }
    }

    #[test]
    fn never_degraded() {
        let t = segment_states(&[0.9; 30], 0.7, 10, 20, 1).unwrap();
        assert_eq!(
            t.segments,
            vec![seg(PhaseState::Steady, 0, 20), seg(PhaseState::FinalSteady, 20, 30)]
        );
        assert_eq!(recovery_time(&t), RecoveryTimes { first: 0, second: None });
    }

    #[test]
    fn dip_and_recover_by_hand() {
        let mut s = vec![0.9; 10];
        s.extend([0.3; 10]);
        s.extend([0.8; 10]);
        let t = segment_states(&s, 0.7, 10, 30, 1).unwrap();
        assert_eq!(
            t.segments,
            vec![
                seg(PhaseState::Steady, 0, 10),
                seg(PhaseState::Disruption, 10, 20),
                seg(PhaseState::Recovered, 20, 30),
            ]
        );
        assert_eq!(recovery_time(&t).first, 10);
    }

    #[test]
    fn all_five_states() {
        let mut s = vec![0.9; 5];
        s.extend([0.5; 3]);
        s.extend([0.9; 2]);
        s.extend([0.8, 0.6, 0.6, 0.75, 0.8]);
        let t = segment_states(&s, 0.7, 5, 10, 1).unwrap();
        assert_eq!(
            t.segments,
            vec![
                seg(PhaseState::Steady, 0, 5),
                seg(PhaseState::Disruption, 5, 8),
                seg(PhaseState::Recovered, 8, 10),
                seg(PhaseState::FinalDisruption, 10, 13),
                seg(PhaseState::FinalSteady, 13, 15),
            ]
        );
        assert_eq!(recovery_time(&t), RecoveryTimes { first: 3, second: Some(3) });
        assert_eq!(t.state_at(11), Some(PhaseState::FinalDisruption));
    }

    #[test]
    fn sustain_skips_flapping() {
        let s = [0.9, 0.9, 0.5, 0.8, 0.5, 0.8, 0.8, 0.8, 0.9, 0.9];
        let t = segment_states(&s, 0.7, 2, 9, 2).unwrap();
        assert_eq!(t.find(PhaseState::Disruption), Some(&seg(PhaseState::Disruption, 2, 5)));
        let t1 = segment_states(&s, 0.7, 2, 9, 1).unwrap();
        assert_eq!(t1.find(PhaseState::Disruption), Some(&seg(PhaseState::Disruption, 2, 3)));
    }

    #[test]
    fn unrecovered_runs_to_the_boundary() {
        let s = [0.9, 0.2, 0.2, 0.2, 0.2];
        let t = segment_states(&s, 0.7, 1, 3, 1).unwrap();
        assert_eq!(
            t.segments,
            vec![
                seg(PhaseState::Steady, 0, 1),
                seg(PhaseState::Disruption, 1, 3),
                seg(PhaseState::FinalDisruption, 3, 5),
            ]
        );
        assert_eq!(recovery_time(&t), RecoveryTimes { first: 2, second: Some(2) });
    }

    #[test]
    fn out_of_range_indices() {
        assert!(segment_states(&[0.5; 4], 0.7, 3, 2, 1).is_err());
        assert!(segment_states(&[0.5; 4], 0.7, 1, 5, 1).is_err());
    }
}
