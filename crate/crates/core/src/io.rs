//! Plain-text export of trajectories: RFC-4180 CSV with CRLF line endings,
//! '.' decimal separator, and a fixed column order
//! `t, q_1..q_m, x_1..x_n, p_1..p_n, S[, L]` (the energy column appears
//! only when the trajectory recorded it).

use std::fmt::Write as _;

use crate::closed_loop::Trajectory;
use crate::scalar::Scalar;

/// Renders a trajectory as a CSV document (header plus one row per
/// recorded sample). Numbers are written in shortest round-trip form, so
/// identical trajectories serialize byte-identically.
pub fn trajectory_csv<S: Scalar>(traj: &Trajectory<S>) -> String {
    let m = traj.tasks.first().map_or(0, Vec::len);
    let n = traj.populations.first().map_or(0, Vec::len);
    let mut out = String::new();
    out.push('t');
    for i in 1..=m {
        let _ = write!(out, ",q_{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",p_{i}");
    }
    out.push_str(",S");
    if traj.antistorage.is_some() {
        out.push_str(",L");
    }
    out.push_str("\r\n");
    for k in 0..traj.len() {
        let _ = write!(out, "{}", traj.times[k]);
        for v in &traj.tasks[k] {
            let _ = write!(out, ",{v}");
        }
        for v in &traj.populations[k] {
            let _ = write!(out, ",{v}");
        }
        for v in &traj.payoffs[k] {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{}", traj.storage[k]);
        if let Some(l) = &traj.antistorage {
            let _ = write!(out, ",{}", l[k]);
        }
        out.push_str("\r\n");
    }
    out
}
