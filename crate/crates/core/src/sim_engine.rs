//! Executing a grounded script against a home layout.
//!
//! The agent starts at the first step's room center, walks planned paths at
//! a fixed speed, and mutates the environment graph when it opens, closes,
//! or switches objects. Its position is sampled every `dt` over the whole
//! script span on an integer microsecond clock, so identical inputs always
//! produce bit-identical trajectories.
//!
//! Script times have minute resolution. Steps that share a start minute are
//! serialized in listed order, splitting the available stretch (at least the
//! shared minute, at most up to the next distinct start) into equal slices.
//! The final step group is never extended past its stated end, which keeps
//! the simulated span equal to the script span.

use chrono::NaiveDate;
use thiserror::Error;

use crate::action_script::{ActionVerb, Script};
use crate::env_model::{
    apply_state_change, EnvironmentGraph, HomeLayout, ObjectState, Room, StateTransition, Vec3,
};
use crate::time::{Timestamp, MICROS_PER_MINUTE, MICROS_PER_SECOND};

/// Simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Sampling interval in seconds.
    pub dt: f64,
    /// Walking speed in m/s.
    pub walk_speed: f64,
    /// Running speed in m/s.
    pub run_speed: f64,
    /// Displacement below this is treated as jitter by motion sensors (m).
    pub jitter_eps: f64,
    /// Calendar date of the script's first day.
    pub epoch_date: NaiveDate,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.2,
            walk_speed: 1.2,
            run_speed: 3.0,
            jitter_eps: 0.1,
            epoch_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        }
    }
}

impl SimParams {
    pub fn dt_micros(&self) -> i64 {
        (self.dt * MICROS_PER_SECOND as f64).round() as i64
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.dt.is_nan() || self.dt <= 0.0 || self.dt_micros() == 0 {
            return Err(SimError::InvalidParams("dt must be positive".into()));
        }
        if !(self.walk_speed.is_finite() && self.walk_speed > 0.0)
            || !(self.run_speed.is_finite() && self.run_speed > 0.0)
        {
            return Err(SimError::InvalidParams("speeds must be positive".into()));
        }
        if self.run_speed < self.walk_speed {
            return Err(SimError::InvalidParams(
                "run_speed must be at least walk_speed".into(),
            ));
        }
        Ok(())
    }
}

/// One position sample on the fixed-step clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    /// Microseconds since midnight of the epoch date.
    pub t_us: i64,
    pub position: Vec3,
    /// The step active at this sample (the last step that has started).
    pub step_index: usize,
}

impl TrajectorySample {
    pub fn t_seconds(&self) -> f64 {
        self.t_us as f64 / MICROS_PER_SECOND as f64
    }
}

/// Fixed-step position log over one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epoch_date: NaiveDate,
    pub dt_us: i64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn timestamp_at(&self, t_us: i64) -> Timestamp {
        Timestamp::from_midnight_micros(self.epoch_date, t_us)
    }
}

/// A state transition attributed to the script step that caused it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LoggedTransition {
    pub step_index: usize,
    #[serde(flatten)]
    pub transition: StateTransition,
}

pub type StateTransitionLog = Vec<LoggedTransition>;

/// A non-fatal problem encountered while executing one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepIssue {
    pub step_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trajectory: Trajectory,
    pub transitions: StateTransitionLog,
    /// Steps that could not be executed (unknown object, state guard, ...).
    pub step_errors: Vec<StepIssue>,
    /// Executed steps with caveats (e.g. motion truncated at the window end).
    pub warnings: Vec<StepIssue>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("script has no steps")]
    EmptyScript,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown room {0:?}")]
    UnknownRoom(String),
    #[error("no route between rooms {from:?} and {to:?}")]
    Disconnected { from: String, to: String },
}

// ---------------------------------------------------------------------------
// Path planning
// ---------------------------------------------------------------------------

/// Where two rooms connect, and through which point.
fn crossing_point(layout: &HomeLayout, a: &Room, b: &Room) -> Option<Vec3> {
    // A declared door wins; the first one for the pair is used.
    for door in &layout.doors {
        let [da, db] = [&door.rooms[0], &door.rooms[1]];
        if (da == &a.name && db == &b.name) || (da == &b.name && db == &a.name) {
            return Some(door.anchor);
        }
    }
    // Otherwise rooms are adjacent when their footprints share a boundary of
    // positive length; cross at the middle of the shared stretch.
    let ix_min = a.bbox_min.x.max(b.bbox_min.x);
    let ix_max = a.bbox_max.x.min(b.bbox_max.x);
    let iz_min = a.bbox_min.z.max(b.bbox_min.z);
    let iz_max = a.bbox_max.z.min(b.bbox_max.z);
    if ix_min > ix_max || iz_min > iz_max {
        return None;
    }
    if (ix_max - ix_min) + (iz_max - iz_min) <= 0.0 {
        return None; // corner touch only
    }
    let y = a.bbox_min.y.max(b.bbox_min.y);
    Some(Vec3::new(
        (ix_min + ix_max) / 2.0,
        y,
        (iz_min + iz_max) / 2.0,
    ))
}

/// Plan waypoints from `from` to `to`. Same room: straight line. Different
/// rooms: a shortest room sequence (fewest rooms, BFS in declaration order)
/// through door anchors where declared and footprint-boundary midpoints
/// otherwise, passing through the center of every intermediate room.
pub fn plan_path(
    layout: &HomeLayout,
    from: Vec3,
    to: Vec3,
    from_room: &str,
    to_room: &str,
) -> Result<Vec<Vec3>, SimError> {
    let start = layout
        .rooms
        .iter()
        .position(|r| r.name == from_room)
        .ok_or_else(|| SimError::UnknownRoom(from_room.to_string()))?;
    let goal = layout
        .rooms
        .iter()
        .position(|r| r.name == to_room)
        .ok_or_else(|| SimError::UnknownRoom(to_room.to_string()))?;

    if from == to {
        return Ok(vec![from]);
    }
    if start == goal {
        return Ok(vec![from, to]);
    }

    // BFS over room adjacency.
    let n = layout.rooms.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    visited[start] = true;
    queue.push_back(start);
    'search: while let Some(cur) = queue.pop_front() {
        for next in 0..n {
            if visited[next]
                || crossing_point(layout, &layout.rooms[cur], &layout.rooms[next]).is_none()
            {
                continue;
            }
            visited[next] = true;
            parent[next] = Some(cur);
            if next == goal {
                break 'search;
            }
            queue.push_back(next);
        }
    }
    if !visited[goal] {
        return Err(SimError::Disconnected {
            from: from_room.to_string(),
            to: to_room.to_string(),
        });
    }

    let mut rooms = vec![goal];
    while let Some(p) = parent[*rooms.last().unwrap()] {
        rooms.push(p);
        if p == start {
            break;
        }
    }
    rooms.reverse();

    let mut waypoints = vec![from];
    for hop in 0..rooms.len() - 1 {
        let a = &layout.rooms[rooms[hop]];
        let b = &layout.rooms[rooms[hop + 1]];
        let cross = crossing_point(layout, a, b).expect("adjacent rooms cross");
        waypoints.push(cross);
        if hop + 1 < rooms.len() - 1 {
            waypoints.push(b.floor_center());
        }
    }
    waypoints.push(to);
    Ok(waypoints)
}

// ---------------------------------------------------------------------------
// Step scheduling
// ---------------------------------------------------------------------------

/// Effective `[start, end]` execution windows in microseconds.
///
/// Steps are grouped by equal start minute. A group of `k` steps divides
/// `[start, B)` into `k` equal slices, where `B` is capped by the next
/// distinct start and stretches to at least one minute (or the group's
/// latest stated end, whichever is larger). The last group is not extended
/// past its stated end.
fn effective_windows_us(windows_min: &[(u32, u32)]) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(windows_min.len());
    let mut i = 0;
    while i < windows_min.len() {
        let start_min = windows_min[i].0;
        let mut j = i;
        let mut max_end_min = windows_min[i].1;
        while j + 1 < windows_min.len() && windows_min[j + 1].0 == start_min {
            j += 1;
            max_end_min = max_end_min.max(windows_min[j].1);
        }
        let s = start_min as i64 * MICROS_PER_MINUTE;
        let max_end = max_end_min as i64 * MICROS_PER_MINUTE;
        let is_last_group = j + 1 == windows_min.len();
        let cap = if is_last_group {
            max_end.max(s)
        } else {
            max_end.max(s + MICROS_PER_MINUTE)
        };
        let b = if is_last_group {
            cap
        } else {
            cap.min(windows_min[j + 1].0 as i64 * MICROS_PER_MINUTE)
        };
        let k = (j - i + 1) as i64;
        for slot in 0..k {
            let t0 = s + (b - s) * slot / k;
            let t1 = s + (b - s) * (slot + 1) / k;
            out.push((t0, t1));
        }
        i = j + 1;
    }
    out
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

fn planar_norm(v: Vec3) -> f64 {
    (v.x * v.x + v.z * v.z).sqrt()
}

fn rotate_left(h: (f64, f64)) -> (f64, f64) {
    (h.1, -h.0)
}

fn rotate_right(h: (f64, f64)) -> (f64, f64) {
    (-h.1, h.0)
}

/// Where a walk/run ends: a room name targets its floor center, an object
/// class targets a point 0.5 m from the object toward its room's center.
fn resolve_walk_target(
    layout: &HomeLayout,
    token: &str,
    step_room: &str,
) -> Result<(Vec3, String), String> {
    if let Some(room) = layout.room(token) {
        return Ok((room.floor_center(), token.to_string()));
    }
    let obj = layout
        .graph
        .object_by_class_in_room(token, step_room)
        .or_else(|| layout.graph.object_by_class(token))
        .ok_or_else(|| format!("unknown walk target {token:?}"))?;
    let room = layout.room(&obj.room).expect("object rooms are validated");
    let center = room.floor_center();
    let dir = center - obj.position;
    let dist = planar_norm(dir);
    let target = if dist > 0.0 {
        let step = 0.5f64.min(dist) / dist;
        Vec3::new(
            obj.position.x + dir.x * step,
            room.bbox_min.y,
            obj.position.z + dir.z * step,
        )
    } else {
        Vec3::new(obj.position.x, room.bbox_min.y, obj.position.z)
    };
    Ok((target, obj.room.clone()))
}

struct AgentState {
    position: Vec3,
    room: String,
    heading: (f64, f64),
    held: Vec<String>,
    /// Piecewise-linear keyframes (time, position); constant in between.
    keyframes: Vec<(i64, Vec3)>,
}

impl AgentState {
    fn push_keyframe(&mut self, t: i64, p: Vec3) {
        if let Some(&(last_t, _)) = self.keyframes.last() {
            if last_t == t {
                return; // continuity: same instant, same position
            }
        }
        self.keyframes.push((t, p));
    }

    /// Walk a waypoint polyline at `speed` within `[t0, t1]`; truncates at
    /// the window end when the path is too long. Returns whether truncated.
    fn walk(&mut self, waypoints: &[Vec3], speed: f64, t0: i64, t1: i64) -> bool {
        if waypoints.len() < 2 {
            return false;
        }
        self.push_keyframe(t0, self.position);
        let mut cum = 0.0;
        let mut truncated = false;
        let mut last = waypoints[0];
        for &w in waypoints.iter().skip(1) {
            let leg = w - last;
            let leg_len = last.distance(&w);
            let arrive = t0 + ((cum + leg_len) / speed * MICROS_PER_SECOND as f64).round() as i64;
            if arrive > t1 {
                // Cut the leg where the window closes.
                let avail = (t1 - t0) as f64 / MICROS_PER_SECOND as f64 * speed;
                let into_leg = (avail - cum).max(0.0);
                let frac = if leg_len > 0.0 {
                    (into_leg / leg_len).min(1.0)
                } else {
                    0.0
                };
                let cut = last + leg * frac;
                self.push_keyframe(t1, cut);
                self.position = cut;
                if planar_norm(leg) > 0.0 {
                    self.heading = (leg.x / planar_norm(leg), leg.z / planar_norm(leg));
                }
                truncated = true;
                break;
            }
            cum += leg_len;
            self.push_keyframe(arrive, w);
            self.position = w;
            if planar_norm(leg) > 0.0 {
                self.heading = (leg.x / planar_norm(leg), leg.z / planar_norm(leg));
            }
            last = w;
        }
        truncated
    }

    fn update_room(&mut self, layout: &HomeLayout, fallback: &str) {
        if let Some(room) = layout.rooms.iter().find(|r| r.contains(&self.position)) {
            self.room = room.name.clone();
        } else {
            self.room = fallback.to_string();
        }
    }
}

fn position_at(keyframes: &[(i64, Vec3)], initial: Vec3, cursor: &mut usize, t: i64) -> Vec3 {
    if keyframes.is_empty() || t < keyframes[0].0 {
        return initial;
    }
    while *cursor + 1 < keyframes.len() && keyframes[*cursor + 1].0 <= t {
        *cursor += 1;
    }
    let (ta, pa) = keyframes[*cursor];
    if *cursor + 1 == keyframes.len() {
        return pa;
    }
    let (tb, pb) = keyframes[*cursor + 1];
    let frac = (t - ta) as f64 / (tb - ta) as f64;
    pa + (pb - pa) * frac
}

/// Execute a grounded, time-ordered script. Position is sampled every `dt`
/// over `[first step start, last step end]`; state-changing verbs invoke
/// transitions at their step's effective start time. Steps that cannot be
/// executed are recorded as errors and the simulation continues.
pub fn simulate(
    script: &Script,
    layout: &HomeLayout,
    params: &SimParams,
) -> Result<SimOutput, SimError> {
    params.validate()?;
    if script.steps.is_empty() {
        return Err(SimError::EmptyScript);
    }
    let windows = effective_windows_us(&script.minute_windows());
    let first_room_name = &script.steps[0].room;
    let first_room = layout
        .room(first_room_name)
        .ok_or_else(|| SimError::UnknownRoom(first_room_name.clone()))?;

    let mut graph: EnvironmentGraph = layout.graph.clone();
    let start_pos = first_room.floor_center();
    let mut agent = AgentState {
        position: start_pos,
        room: first_room_name.clone(),
        heading: initial_heading(script, layout, start_pos),
        held: Vec::new(),
        keyframes: Vec::new(),
    };
    let mut transitions: StateTransitionLog = Vec::new();
    let mut step_errors = Vec::new();
    let mut warnings = Vec::new();

    for (i, step) in script.steps.iter().enumerate() {
        let (t0, t1) = windows[i];
        let record_error = |msg: String, errs: &mut Vec<StepIssue>| {
            errs.push(StepIssue {
                step_index: i,
                message: msg,
            });
        };
        match step.verb {
            ActionVerb::Walk | ActionVerb::Run => {
                let token = &step.objects[0];
                match resolve_walk_target(layout, token, &step.room) {
                    Ok((target, target_room)) => {
                        match plan_path(layout, agent.position, target, &agent.room, &target_room) {
                            Ok(waypoints) => {
                                let speed = if step.verb == ActionVerb::Run {
                                    params.run_speed
                                } else {
                                    params.walk_speed
                                };
                                if agent.walk(&waypoints, speed, t0, t1) {
                                    warnings.push(StepIssue {
                                        step_index: i,
                                        message: format!(
                                            "travel to {token:?} exceeds the step window; motion truncated"
                                        ),
                                    });
                                }
                                agent.update_room(layout, &target_room);
                            }
                            Err(e) => record_error(e.to_string(), &mut step_errors),
                        }
                    }
                    Err(msg) => record_error(msg, &mut step_errors),
                }
            }
            ActionVerb::WalkForward => {
                let room = layout.room(&agent.room).expect("agent room exists");
                let target = Vec3::new(
                    (agent.position.x + agent.heading.0).clamp(room.bbox_min.x, room.bbox_max.x),
                    agent.position.y,
                    (agent.position.z + agent.heading.1).clamp(room.bbox_min.z, room.bbox_max.z),
                );
                let from = agent.position;
                agent.walk(&[from, target], params.walk_speed, t0, t1);
            }
            ActionVerb::TurnLeft => agent.heading = rotate_left(agent.heading),
            ActionVerb::TurnRight => agent.heading = rotate_right(agent.heading),
            ActionVerb::Open | ActionVerb::Close | ActionVerb::SwitchOn | ActionVerb::SwitchOff => {
                let token = &step.objects[0];
                let target_state = match step.verb {
                    ActionVerb::Open => ObjectState::Open,
                    ActionVerb::Close => ObjectState::Closed,
                    ActionVerb::SwitchOn => ObjectState::On,
                    _ => ObjectState::Off,
                };
                let object_id = graph
                    .object_by_class_in_room(token, &step.room)
                    .or_else(|| graph.object_by_class(token))
                    .map(|o| o.id.clone());
                match object_id {
                    Some(id) => {
                        let stamp = Timestamp::from_midnight_micros(params.epoch_date, t0);
                        match apply_state_change(&mut graph, &id, target_state, stamp) {
                            Ok(Some(transition)) => transitions.push(LoggedTransition {
                                step_index: i,
                                transition,
                            }),
                            Ok(None) => {}
                            Err(e) => record_error(e.to_string(), &mut step_errors),
                        }
                    }
                    None => record_error(format!("unknown object {token:?}"), &mut step_errors),
                }
            }
            ActionVerb::Grab => {
                let token = &step.objects[0];
                let object_id = graph
                    .object_by_class_in_room(token, &step.room)
                    .or_else(|| graph.object_by_class(token))
                    .map(|o| o.id.clone());
                match object_id {
                    Some(id) => {
                        graph.remove_placement_edges(&id);
                        // Grabbing with full hands is allowed; all held
                        // objects are retained.
                        agent.held.push(id);
                    }
                    None => record_error(format!("unknown object {token:?}"), &mut step_errors),
                }
            }
            ActionVerb::Put => {
                let (what, dest) = (&step.objects[0], &step.objects[1]);
                let held_pos = agent.held.iter().position(|id| {
                    graph
                        .object(id)
                        .map(|o| &o.class_name == what)
                        .unwrap_or(false)
                });
                match held_pos {
                    Some(pos) => {
                        let held_id = agent.held.remove(pos);
                        let dest_id = graph
                            .object_by_class_in_room(dest, &step.room)
                            .or_else(|| graph.object_by_class(dest))
                            .map(|o| o.id.clone());
                        match dest_id {
                            Some(dest_id) => {
                                if let Err(e) = graph.add_edge(
                                    &held_id,
                                    crate::env_model::Relation::On,
                                    &dest_id,
                                ) {
                                    record_error(e.to_string(), &mut step_errors);
                                }
                            }
                            None => record_error(
                                format!("unknown destination {dest:?}"),
                                &mut step_errors,
                            ),
                        }
                    }
                    None => record_error(
                        format!("agent does not hold any {what:?}"),
                        &mut step_errors,
                    ),
                }
            }
            ActionVerb::Sit
            | ActionVerb::StandUp
            | ActionVerb::Drink
            | ActionVerb::Touch
            | ActionVerb::LookAt => {
                // Position holds; just validate the referenced object.
                if let Some(token) = step.objects.first() {
                    let known =
                        layout.room(token).is_some() || graph.object_by_class(token).is_some();
                    if !known {
                        record_error(format!("unknown object {token:?}"), &mut step_errors);
                    }
                }
            }
        }
    }

    // Sample the whole span on the integer microsecond grid.
    let span_start = windows[0].0;
    let span_end = windows.last().unwrap().1;
    let dt_us = params.dt_micros();
    let count = ((span_end - span_start) / dt_us) as usize + 1;
    let starts: Vec<i64> = windows.iter().map(|w| w.0).collect();
    let mut samples = Vec::with_capacity(count);
    let mut kf_cursor = 0usize;
    let mut step_cursor = 0usize;
    for k in 0..count {
        let t = span_start + k as i64 * dt_us;
        while step_cursor + 1 < starts.len() && starts[step_cursor + 1] <= t {
            step_cursor += 1;
        }
        let position = position_at(&agent.keyframes, start_pos, &mut kf_cursor, t);
        samples.push(TrajectorySample {
            t_us: t,
            position,
            step_index: step_cursor,
        });
    }

    Ok(SimOutput {
        trajectory: Trajectory {
            epoch_date: params.epoch_date,
            dt_us,
            samples,
        },
        transitions,
        step_errors,
        warnings,
    })
}

/// Heading starts toward the first walk/run target, +x when none resolves.
fn initial_heading(script: &Script, layout: &HomeLayout, start: Vec3) -> (f64, f64) {
    for step in &script.steps {
        if matches!(step.verb, ActionVerb::Walk | ActionVerb::Run) {
            if let Ok((target, _)) = resolve_walk_target(layout, &step.objects[0], &step.room) {
                let dir = target - start;
                let n = planar_norm(dir);
                if n > 0.0 {
                    return (dir.x / n, dir.z / n);
                }
            }
            break;
        }
    }
    (1.0, 0.0)
}
