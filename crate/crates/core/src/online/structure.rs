//! Checks of the monotone and threshold structure of a solved MDP.
//!
//! Distortion decreases with `d_index` for `d_index >= 1`, and index 0 (no
//! transmission yet) has the largest distortion, so "increasing distortion"
//! means decreasing `d_index`.

use rayon::prelude::*;
use serde::Serialize;

use super::{MdpState, PolicyTable, StateSpace, ValueTable};

const TOL: f64 = 1e-9;
const KEPT_COUNTEREXAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub states: Vec<MdpState>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    /// Letter `a` to `g`.
    pub id: char,
    pub name: &'static str,
    pub passed: bool,
    /// Number of comparisons made.
    pub checked: usize,
    pub violations: usize,
    /// The first few violations.
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub checks: Vec<PropertyCheck>,
}

impl StructureReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.checks.len()
    }

    pub fn total_counterexamples(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

#[derive(Default)]
struct Tally {
    checked: usize,
    violations: usize,
    kept: Vec<Counterexample>,
}

impl Tally {
    fn record(&mut self, ok: bool, states: impl FnOnce() -> (Vec<MdpState>, String)) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.kept.len() < KEPT_COUNTEREXAMPLES {
                let (states, detail) = states();
                self.kept.push(Counterexample { states, detail });
            }
        }
    }

    fn finish(self, id: char, name: &'static str) -> PropertyCheck {
        PropertyCheck {
            id,
            name,
            passed: self.violations == 0,
            checked: self.checked,
            violations: self.violations,
            counterexamples: self.kept,
        }
    }
}

#[derive(Clone, Copy)]
enum Axis {
    Delta,
    /// Ordered by increasing distortion.
    Distortion,
    Buffer,
}

// Kept states along `axis` with the other two coordinates fixed, in axis order.
fn lines(space: &StateSpace, axis: Axis) -> Vec<Vec<MdpState>> {
    let (dm, bm) = (space.delta_max(), space.b_max());
    let mut out = Vec::new();
    let mut push = |line: Vec<MdpState>| {
        let kept: Vec<_> = line.into_iter().filter(|&s| space.contains(s)).collect();
        if !kept.is_empty() {
            out.push(kept);
        }
    };
    match axis {
        Axis::Delta => {
            for d in 0..=bm {
                for b in 0..=bm {
                    push((1..=dm).map(|delta| MdpState::new(delta, d, b)).collect());
                }
            }
        }
        Axis::Distortion => {
            for delta in 1..=dm {
                for b in 0..=bm {
                    push((0..=bm).rev().map(|d| MdpState::new(delta, d, b)).collect());
                }
            }
        }
        Axis::Buffer => {
            for delta in 1..=dm {
                for d in 0..=bm {
                    push((0..=bm).map(|b| MdpState::new(delta, d, b)).collect());
                }
            }
        }
    }
    out
}

// Consecutive kept states that differ by one step along the axis.
fn adjacent(a: MdpState, b: MdpState) -> bool {
    a.delta.abs_diff(b.delta) + a.d_index.abs_diff(b.d_index) + a.b.abs_diff(b.b) == 1
}

fn monotone(v: &ValueTable, axis: Axis, increasing: bool) -> Tally {
    let mut t = Tally::default();
    for line in lines(v.space(), axis) {
        for pair in line.windows(2) {
            let (s0, s1) = (pair[0], pair[1]);
            if !adjacent(s0, s1) {
                continue;
            }
            let (v0, v1) = (v.get(s0).unwrap(), v.get(s1).unwrap());
            let ok = if increasing { v1 >= v0 - TOL } else { v1 <= v0 + TOL };
            t.record(ok, || (vec![s0, s1], format!("V = {v0} then {v1}")));
        }
    }
    t
}

fn convex_in_buffer(v: &ValueTable) -> Tally {
    let mut t = Tally::default();
    for line in lines(v.space(), Axis::Buffer) {
        for tri in line.windows(3) {
            if !(adjacent(tri[0], tri[1]) && adjacent(tri[1], tri[2])) {
                continue;
            }
            let [a, b, c] = [tri[0], tri[1], tri[2]].map(|s| v.get(s).unwrap());
            let second = a - 2.0 * b + c;
            t.record(second >= -TOL, || (tri.to_vec(), format!("second difference {second}")));
        }
    }
    t
}

fn policy_monotone_in_buffer(pol: &PolicyTable) -> Tally {
    let mut t = Tally::default();
    for line in lines(pol.space(), Axis::Buffer) {
        for pair in line.windows(2) {
            if !adjacent(pair[0], pair[1]) {
                continue;
            }
            let (p0, p1) = (pol.get(pair[0]).unwrap(), pol.get(pair[1]).unwrap());
            t.record(p1 >= p0, || (pair.to_vec(), format!("power {p0} then {p1}")));
        }
    }
    t
}

// Along each line the policy must be 0 up to some point and one fixed positive
// power afterwards.
fn threshold(pol: &PolicyTable, axis: Axis) -> Tally {
    let mut t = Tally::default();
    for line in lines(pol.space(), axis) {
        let actions: Vec<usize> = line.iter().map(|&s| pol.get(s).unwrap()).collect();
        let first_pos = actions.iter().position(|&p| p > 0);
        let ok = match first_pos {
            None => true,
            Some(i) => actions[i..].iter().all(|&p| p == actions[i]),
        };
        t.record(ok, || {
            let i = first_pos.unwrap_or(0);
            let j = (i..actions.len())
                .find(|&j| actions[j] != actions[i])
                .unwrap_or(i);
            (vec![line[i], line[j]], format!("power {} then {}", actions[i], actions[j]))
        });
    }
    t
}

/// Runs checks (a) to (g) on a converged value table and its policy.
///
/// (a) `V` non-decreasing in `delta`; (b) `V` non-decreasing in distortion;
/// (c) `V` non-increasing in `b`; (d) `V` discretely convex in `b`;
/// (e) policy non-decreasing in `b`; (f) threshold policy in `delta`;
/// (g) threshold policy in distortion.
pub fn verify_structure(values: &ValueTable, policy: &PolicyTable) -> StructureReport {
    type Check<'a> = Box<dyn Fn() -> PropertyCheck + Sync + 'a>;
    let checks: Vec<Check> = vec![
        Box::new(|| monotone(values, Axis::Delta, true).finish('a', "value non-decreasing in AoI")),
        Box::new(|| {
            monotone(values, Axis::Distortion, true).finish('b', "value non-decreasing in distortion")
        }),
        Box::new(|| monotone(values, Axis::Buffer, false).finish('c', "value non-increasing in energy")),
        Box::new(|| convex_in_buffer(values).finish('d', "value convex in energy")),
        Box::new(|| policy_monotone_in_buffer(policy).finish('e', "power non-decreasing in energy")),
        Box::new(|| threshold(policy, Axis::Delta).finish('f', "threshold in AoI")),
        Box::new(|| threshold(policy, Axis::Distortion).finish('g', "threshold in distortion")),
    ];
    StructureReport {
        checks: checks.par_iter().map(|c| c()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;
    use crate::online::{build_state_space, value_iteration, ViOptions};

    #[test]
    fn small_converged_run_passes() {
        let params = SystemParams {
            delta_max: 25,
            b_max: 8,
            alpha: 0.98,
            ..SystemParams::default()
        };
        let sol = value_iteration(&params, &ViOptions::default()).unwrap();
        let report = verify_structure(&sol.values, &sol.policy);
        assert_eq!(report.checks.len(), 7);
        for c in report.checks.iter().filter(|c| c.id != 'd') {
            assert!(c.passed, "{c:?}");
            assert!(c.checked > 0);
        }
    }

    #[test]
    fn convexity_in_energy_can_fail_with_integer_powers() {
        let params = SystemParams {
            delta_max: 25,
            b_max: 8,
            alpha: 0.98,
            ..SystemParams::default()
        };
        let sol = value_iteration(&params, &ViOptions { eps: 1e-9, ..ViOptions::default() }).unwrap();
        let convex = &verify_structure(&sol.values, &sol.policy).checks[3];
        assert_eq!(convex.id, 'd');
        assert!(!convex.passed);
        let first = &convex.counterexamples[0];
        assert_eq!(first.states[0], MdpState::new(1, 1, 0));
    }

    #[test]
    fn scrambled_table_is_caught() {
        let params = SystemParams {
            delta_max: 6,
            b_max: 4,
            ..SystemParams::default()
        };
        let space = build_state_space(&params);
        let n = space.dense_len();
        let values: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64).collect();
        let actions: Vec<u16> = (0..n).map(|i| (space.state(i).b % 3) as u16).collect();
        let v = ValueTable::from_dense(space.clone(), values).unwrap();
        let p = PolicyTable::from_dense(space, actions).unwrap();
        let report = verify_structure(&v, &p);
        assert!(!report.all_passed());
        let failed: Vec<char> = report.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
        assert!(failed.contains(&'a') && failed.contains(&'e'));
        assert!(report.checks.iter().all(|c| c.counterexamples.len() <= KEPT_COUNTEREXAMPLES));
    }
}
