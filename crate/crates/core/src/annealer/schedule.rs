use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Piecewise-linear anneal fraction `s(t)` over time in microseconds.
///
/// Starts at `(0, 0)`, ends at `(total_time, 1)`, times strictly increase
/// and `s` never decreases. Two consecutive vertices with equal `s` form a
/// pause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Schedule {
    vertices: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a schedule needs at least two vertices"));
        }
        if vertices
            .iter()
            .any(|(t, s)| !t.is_finite() || !s.is_finite())
        {
            return Err(Error::invalid("schedule vertices must be finite"));
        }
        if vertices[0] != (0.0, 0.0) {
            return Err(Error::invalid("schedule must start at (0, 0)"));
        }
        if vertices[vertices.len() - 1].1 != 1.0 {
            return Err(Error::invalid("schedule must end at s = 1"));
        }
        for w in vertices.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if t1 <= t0 {
                return Err(Error::invalid(format!(
                    "schedule times must strictly increase ({t0} then {t1})"
                )));
            }
            if s1 < s0 || !(0.0..=1.0).contains(&s1) {
                return Err(Error::invalid(format!(
                    "anneal fraction must be nondecreasing within [0, 1] ({s0} then {s1})"
                )));
            }
        }
        Ok(Schedule { vertices })
    }

    /// Plain ramp from `s = 0` to `s = 1` over `anneal_time`.
    pub fn linear(anneal_time: f64) -> Result<Self> {
        Schedule::new(vec![(0.0, 0.0), (anneal_time, 1.0)])
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn total_time(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].0
    }

    /// Interpolated anneal fraction, clamped outside `[0, total_time]`.
    pub fn s_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.total_time() {
            return 1.0;
        }
        let k = self.vertices.partition_point(|&(vt, _)| vt <= t);
        let (t0, s0) = self.vertices[k - 1];
        let (t1, s1) = self.vertices[k];
        if t == t0 {
            return s0;
        }
        s0 + (s1 - s0) * (t - t0) / (t1 - t0)
    }

    /// `(start, end, s)` of every plateau.
    pub fn pauses(&self) -> Vec<(f64, f64, f64)> {
        self.vertices
            .windows(2)
            .filter(|w| w[0].1 == w[1].1)
            .map(|w| (w[0].0, w[1].0, w[0].1))
            .collect()
    }

    /// Monte Carlo sweeps for this schedule: `round(total_time × rate)`.
    pub fn sweep_count(&self, sweeps_per_microsecond: u32) -> usize {
        (self.total_time() * sweeps_per_microsecond as f64).round() as usize
    }

    /// Anneal fraction at each sweep; sweep `k` sits at the midpoint
    /// `(k + ½)·T/K` of its time slice.
    pub fn sweep_fractions(&self, sweeps_per_microsecond: u32) -> Vec<f64> {
        let k = self.sweep_count(sweeps_per_microsecond);
        let dt = self.total_time() / k as f64;
        (0..k).map(|i| self.s_at((i as f64 + 0.5) * dt)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl TryFrom<Vec<[f64; 2]>> for Schedule {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Schedule::new(pairs.into_iter().map(|[t, s]| (t, s)).collect())
    }
}

impl From<Schedule> for Vec<[f64; 2]> {
    fn from(s: Schedule) -> Self {
        s.vertices.into_iter().map(|(t, s)| [t, s]).collect()
    }
}

/// Linear ramp of length `anneal_time` with the ramp held at
/// `s_p = pause_start / anneal_time` for `pause_duration` microseconds.
/// The pause extends the total time; a zero-length pause gives the plain ramp.
pub fn make_pause_schedule(
    anneal_time: f64,
    pause_start: f64,
    pause_duration: f64,
) -> Result<Schedule> {
    if !(anneal_time.is_finite() && pause_start.is_finite() && pause_duration.is_finite()) {
        return Err(Error::invalid("schedule parameters must be finite"));
    }
    if !(0.0 < pause_start && pause_start < anneal_time) {
        return Err(Error::invalid(format!(
            "pause start {pause_start} must lie strictly inside (0, {anneal_time})"
        )));
    }
    if pause_duration < 0.0 {
        return Err(Error::invalid(format!(
            "pause duration {pause_duration} is negative"
        )));
    }
    if pause_duration == 0.0 {
        return Schedule::linear(anneal_time);
    }
    let sp = pause_start / anneal_time;
    Schedule::new(vec![
        (0.0, 0.0),
        (pause_start, sp),
        (pause_start + pause_duration, sp),
        (anneal_time + pause_duration, 1.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pause_schedule_examples() {
        let s = make_pause_schedule(20.0, 10.0, 40.0).unwrap();
        assert_eq!(
            s.vertices(),
            &[(0.0, 0.0), (10.0, 0.5), (50.0, 0.5), (60.0, 1.0)]
        );
        assert_eq!(s.pauses(), vec![(10.0, 50.0, 0.5)]);

        let plain = make_pause_schedule(20.0, 10.0, 0.0).unwrap();
        assert_eq!(plain.vertices(), &[(0.0, 0.0), (20.0, 1.0)]);
        assert!(plain.pauses().is_empty());

        let long = make_pause_schedule(20.0, 10.0, 120.0).unwrap();
        assert_eq!(long.total_time(), 140.0);
        assert_eq!(long.s_at(70.0), 0.5);
    }

    #[test]
    fn pause_schedule_rejects_bad_input() {
        assert!(make_pause_schedule(20.0, 0.0, 10.0).is_err());
        assert!(make_pause_schedule(20.0, 20.0, 10.0).is_err());
        assert!(make_pause_schedule(20.0, 10.0, -1.0).is_err());
        assert!(make_pause_schedule(f64::NAN, 10.0, 1.0).is_err());
    }

    #[test]
    fn validates_vertices() {
        assert!(Schedule::new(vec![(0.0, 0.0)]).is_err());
        assert!(Schedule::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        assert!(Schedule::new(vec![(0.0, 0.0), (1.0, 0.9)]).is_err());
        assert!(Schedule::new(vec![(0.0, 0.0), (1.0, 0.6), (1.0, 1.0)]).is_err());
        assert!(Schedule::new(vec![(0.0, 0.0), (1.0, 0.6), (2.0, 0.5), (3.0, 1.0)]).is_err());
        assert!(Schedule::from_json("[[0,0],[5,0.5],[9,0.5],[15,1]]").is_ok());
        assert!(Schedule::from_json("[[0,0],[5,0.5],[4,0.6],[15,1]]").is_err());
    }

    #[test]
    fn sweep_counts_follow_durations() {
        for d in [0.0, 10.0, 40.0, 60.0, 100.0, 120.0] {
            let s = make_pause_schedule(20.0, 10.0, d).unwrap();
            let fr = s.sweep_fractions(100);
            assert_eq!(fr.len(), ((20.0 + d) * 100.0) as usize);
            if d > 0.0 {
                let plateau = fr.iter().filter(|&&v| v == 0.5).count();
                assert_eq!(plateau, (d * 100.0) as usize);
            }
        }
    }

    #[test]
    fn json_is_a_list_of_pairs() {
        let s = make_pause_schedule(20.0, 10.0, 40.0).unwrap();
        assert_eq!(
            s.to_json().unwrap(),
            "[[0.0,0.0],[10.0,0.5],[50.0,0.5],[60.0,1.0]]"
        );
        assert_eq!(Schedule::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn interpolation_is_monotone_and_exact_at_vertices(
            anneal in 1.0f64..100.0,
            frac in 0.01f64..0.99,
            dur in 0.0f64..200.0,
            probes in prop::collection::vec(0.0f64..1.0, 1..50),
        ) {
            let s = make_pause_schedule(anneal, anneal * frac, dur).unwrap();
            for &(t, v) in s.vertices() {
                prop_assert_eq!(s.s_at(t), v);
            }
            let mut ts: Vec<f64> = probes.iter().map(|p| p * s.total_time()).collect();
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                prop_assert!(s.s_at(w[0]) <= s.s_at(w[1]));
            }
            for (a, b, sp) in s.pauses() {
                for p in &probes {
                    prop_assert_eq!(s.s_at(a + p * (b - a)), sp);
                }
            }
        }
    }
}
