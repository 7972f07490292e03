//! Virtual ambient sensors: placement, detection, and trigger derivation.
//!
//! Motion sensors are placed per room by footprint area (1 for small, 2 for
//! medium, 3 for large rooms) at corners inset 0.3 m from the walls and
//! 0.3 m below the ceiling, each with a 5 m detection radius. Door sensors
//! bind to every object that can open, device sensors to every object with a
//! switch. Triggers are derived from trajectories and state transition logs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env_model::{HomeLayout, ObjectProperty, ObjectState, Room, Vec3};
use crate::sim_engine::{SimParams, StateTransitionLog, Trajectory};
use crate::time::Timestamp;

pub const DEFAULT_SENSOR_RADIUS: f64 = 5.0;

/// A placed motion sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSensor {
    pub id: String,
    pub room: String,
    pub position: Vec3,
    pub radius: f64,
}

/// A sensor bound to an object (door or device activation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSensor {
    pub id: String,
    pub object_id: String,
    pub object_class: String,
    pub room: String,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorKind {
    Motion,
    Door,
    Device,
}

impl SensorKind {
    pub fn name(&self) -> &'static str {
        match self {
            SensorKind::Motion => "Motion",
            SensorKind::Door => "Door",
            SensorKind::Device => "Device",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SensorValue {
    On,
    Off,
    Open,
    Close,
}

impl SensorValue {
    pub fn name(&self) -> &'static str {
        match self {
            SensorValue::On => "ON",
            SensorValue::Off => "OFF",
            SensorValue::Open => "OPEN",
            SensorValue::Close => "CLOSE",
        }
    }

    pub fn parse(s: &str) -> Option<SensorValue> {
        match s {
            "ON" => Some(SensorValue::On),
            "OFF" => Some(SensorValue::Off),
            "OPEN" => Some(SensorValue::Open),
            "CLOSE" => Some(SensorValue::Close),
            _ => None,
        }
    }
}

impl std::fmt::Display for SensorValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One timestamped sensor reading; the atomic dataset unit.
///
/// Motion events carry ON/OFF, door events OPEN/CLOSE, device events ON/OFF;
/// the constructors enforce the pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub timestamp: Timestamp,
    pub sensor_id: String,
    pub kind: SensorKind,
    pub value: SensorValue,
    pub room: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_class: Option<String>,
}

impl SensorEvent {
    pub fn motion(timestamp: Timestamp, sensor_id: &str, room: &str, on: bool) -> SensorEvent {
        SensorEvent {
            timestamp,
            sensor_id: sensor_id.to_string(),
            kind: SensorKind::Motion,
            value: if on {
                SensorValue::On
            } else {
                SensorValue::Off
            },
            room: room.to_string(),
            object_class: None,
        }
    }

    pub fn door(
        timestamp: Timestamp,
        sensor_id: &str,
        room: &str,
        class: &str,
        open: bool,
    ) -> SensorEvent {
        SensorEvent {
            timestamp,
            sensor_id: sensor_id.to_string(),
            kind: SensorKind::Door,
            value: if open {
                SensorValue::Open
            } else {
                SensorValue::Close
            },
            room: room.to_string(),
            object_class: Some(class.to_string()),
        }
    }

    pub fn device(
        timestamp: Timestamp,
        sensor_id: &str,
        room: &str,
        class: &str,
        on: bool,
    ) -> SensorEvent {
        SensorEvent {
            timestamp,
            sensor_id: sensor_id.to_string(),
            kind: SensorKind::Device,
            value: if on {
                SensorValue::On
            } else {
                SensorValue::Off
            },
            room: room.to_string(),
            object_class: Some(class.to_string()),
        }
    }
}

/// All sensors instrumenting one layout.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorSuite {
    pub motion: Vec<MotionSensor>,
    pub doors: Vec<BoundSensor>,
    pub devices: Vec<BoundSensor>,
}

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("room area must be positive, got {0}")]
    NonPositiveArea(f64),
    #[error("sensor count must be 1..=3, got {0}")]
    BadCount(usize),
    #[error("room {room:?} is too small for corner insets (needs > 0.6 m in x and z and > 0.3 m in height)")]
    RoomTooSmall { room: String },
    #[error("detection radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("sensor map: {0}")]
    Map(String),
}

/// Motion sensors per room by footprint area: small rooms (at most 30 m²)
/// get 1, medium (over 30 up to 60 m²) get 2, large (over 60 m²) get 3.
pub fn determine_sensor_count(area: f64) -> Result<usize, SensorError> {
    if area.is_nan() || area <= 0.0 {
        return Err(SensorError::NonPositiveArea(area));
    }
    Ok(if area <= 30.0 {
        1
    } else if area <= 60.0 {
        2
    } else {
        3
    })
}

const WALL_INSET: f64 = 0.3;
const CEILING_INSET: f64 = 0.3;

/// Corner positions inset 0.3 m from two walls and 0.3 m below the ceiling.
/// Corner order is fixed: (min x, min z), (max x, max z), (min x, max z).
pub fn calculate_sensor_positions(room: &Room, count: usize) -> Result<Vec<Vec3>, SensorError> {
    if !(1..=3).contains(&count) {
        return Err(SensorError::BadCount(count));
    }
    let dx = room.bbox_max.x - room.bbox_min.x;
    let dz = room.bbox_max.z - room.bbox_min.z;
    let dy = room.bbox_max.y - room.bbox_min.y;
    if dx <= 2.0 * WALL_INSET || dz <= 2.0 * WALL_INSET || dy <= CEILING_INSET {
        return Err(SensorError::RoomTooSmall {
            room: room.name.clone(),
        });
    }
    let y = room.bbox_max.y - CEILING_INSET;
    let corners = [
        Vec3::new(
            room.bbox_min.x + WALL_INSET,
            y,
            room.bbox_min.z + WALL_INSET,
        ),
        Vec3::new(
            room.bbox_max.x - WALL_INSET,
            y,
            room.bbox_max.z - WALL_INSET,
        ),
        Vec3::new(
            room.bbox_min.x + WALL_INSET,
            y,
            room.bbox_max.z - WALL_INSET,
        ),
    ];
    Ok(corners[..count].to_vec())
}

/// Instrument a layout: motion sensors (`M001`, ...) per room in declaration
/// order, then door sensors on every object that can open and device sensors
/// on every switchable object (`D001`, ... with a shared counter, doors
/// first), following the object document order.
pub fn instrument(layout: &HomeLayout, radius: f64) -> Result<SensorSuite, SensorError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(SensorError::BadRadius(radius));
    }
    let mut suite = SensorSuite::default();
    let mut motion_seq = 0usize;
    for room in &layout.rooms {
        let count = determine_sensor_count(room.area())?;
        for position in calculate_sensor_positions(room, count)? {
            motion_seq += 1;
            suite.motion.push(MotionSensor {
                id: format!("M{motion_seq:03}"),
                room: room.name.clone(),
                position,
                radius,
            });
        }
    }
    let mut bound_seq = 0usize;
    for obj in layout.graph.objects() {
        if obj.has_property(ObjectProperty::CanOpen) {
            bound_seq += 1;
            suite.doors.push(BoundSensor {
                id: format!("D{bound_seq:03}"),
                object_id: obj.id.clone(),
                object_class: obj.class_name.clone(),
                room: obj.room.clone(),
                position: obj.position,
            });
        }
    }
    for obj in layout.graph.objects() {
        if obj.has_property(ObjectProperty::HasSwitch) {
            bound_seq += 1;
            suite.devices.push(BoundSensor {
                id: format!("D{bound_seq:03}"),
                object_id: obj.id.clone(),
                object_class: obj.class_name.clone(),
                room: obj.room.clone(),
                position: obj.position,
            });
        }
    }
    Ok(suite)
}

/// One raw per-sample detection record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub t_us: i64,
    pub sensor_id: String,
    pub room: String,
    pub position: Vec3,
}

/// Raw detections: every sample where the agent is within a sensor's radius
/// (inclusive).
pub fn detect_motion(trajectory: &Trajectory, suite: &SensorSuite) -> Vec<Detection> {
    let mut out = Vec::new();
    for sensor in &suite.motion {
        for sample in &trajectory.samples {
            if sample.position.distance(&sensor.position) <= sensor.radius {
                out.push(Detection {
                    t_us: sample.t_us,
                    sensor_id: sensor.id.clone(),
                    room: sensor.room.clone(),
                    position: sample.position,
                });
            }
        }
    }
    out
}

/// Derive motion ON/OFF triggers. A sample is active for a sensor when the
/// agent is within the radius and moved more than the jitter threshold since
/// the previous sample; the first sample has no predecessor and is never
/// active. Each maximal active run emits ON at its first sample and OFF at
/// the first inactive sample after it (no OFF if the run reaches the end).
/// Events are grouped per sensor in suite order; [`merge_events`] produces
/// the chronological stream.
pub fn motion_triggers(
    trajectory: &Trajectory,
    suite: &SensorSuite,
    params: &SimParams,
) -> Vec<SensorEvent> {
    let mut events = Vec::new();
    let samples = &trajectory.samples;
    if samples.len() < 2 {
        return events;
    }
    for sensor in &suite.motion {
        let mut in_run = false;
        for i in 1..samples.len() {
            let within = samples[i].position.distance(&sensor.position) <= sensor.radius;
            let moving = samples[i].position.distance(&samples[i - 1].position) > params.jitter_eps;
            let active = within && moving;
            if active && !in_run {
                events.push(SensorEvent::motion(
                    trajectory.timestamp_at(samples[i].t_us),
                    &sensor.id,
                    &sensor.room,
                    true,
                ));
                in_run = true;
            } else if !active && in_run {
                events.push(SensorEvent::motion(
                    trajectory.timestamp_at(samples[i].t_us),
                    &sensor.id,
                    &sensor.room,
                    false,
                ));
                in_run = false;
            }
        }
    }
    events
}

/// Door and device events from a transition log. Closed-to-open on a
/// door-sensed object emits OPEN; off-to-on on a device-sensed object emits
/// ON. With `emit_reverse` set, the reverse transitions emit CLOSE and OFF,
/// giving paired logs like real deployments.
pub fn door_device_events(
    transitions: &StateTransitionLog,
    suite: &SensorSuite,
    emit_reverse: bool,
) -> Vec<SensorEvent> {
    let mut events = Vec::new();
    for logged in transitions {
        let tr = &logged.transition;
        match (tr.from_state, tr.to_state) {
            (ObjectState::Closed, ObjectState::Open) => {
                if let Some(s) = suite.doors.iter().find(|s| s.object_id == tr.object_id) {
                    events.push(SensorEvent::door(
                        tr.timestamp,
                        &s.id,
                        &s.room,
                        &s.object_class,
                        true,
                    ));
                }
            }
            (ObjectState::Open, ObjectState::Closed) if emit_reverse => {
                if let Some(s) = suite.doors.iter().find(|s| s.object_id == tr.object_id) {
                    events.push(SensorEvent::door(
                        tr.timestamp,
                        &s.id,
                        &s.room,
                        &s.object_class,
                        false,
                    ));
                }
            }
            (ObjectState::Off, ObjectState::On) => {
                if let Some(s) = suite.devices.iter().find(|s| s.object_id == tr.object_id) {
                    events.push(SensorEvent::device(
                        tr.timestamp,
                        &s.id,
                        &s.room,
                        &s.object_class,
                        true,
                    ));
                }
            }
            (ObjectState::On, ObjectState::Off) if emit_reverse => {
                if let Some(s) = suite.devices.iter().find(|s| s.object_id == tr.object_id) {
                    events.push(SensorEvent::device(
                        tr.timestamp,
                        &s.id,
                        &s.room,
                        &s.object_class,
                        false,
                    ));
                }
            }
            _ => {}
        }
    }
    events
}

/// Merge internally-ordered streams into one chronological stream. Ties
/// break by kind name (Device, Door, Motion) then sensor id, so merging is
/// deterministic and stable under re-merge.
pub fn merge_events(streams: &[Vec<SensorEvent>]) -> Vec<SensorEvent> {
    let mut merged: Vec<SensorEvent> = streams.iter().flatten().cloned().collect();
    merged.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.kind.name().cmp(b.kind.name()))
            .then_with(|| a.sensor_id.cmp(&b.sensor_id))
    });
    merged
}

// ---------------------------------------------------------------------------
// Sensor map file
// ---------------------------------------------------------------------------

/// Unified sensor map entry as written to `sensors.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMapEntry {
    pub id: String,
    pub kind: SensorKind,
    pub room: String,
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMapFile {
    pub layout: String,
    /// Corner choice for 1-2 sensors is an assumption, recorded here.
    pub corner_order: String,
    pub sensors: Vec<SensorMapEntry>,
}

pub const CORNER_ORDER_NOTE: &str =
    "(min x, min z), (max x, max z), (min x, max z); inset 0.3 m from walls and ceiling";

impl SensorSuite {
    pub fn to_map_file(&self, layout_name: &str) -> SensorMapFile {
        let mut sensors = Vec::new();
        for m in &self.motion {
            sensors.push(SensorMapEntry {
                id: m.id.clone(),
                kind: SensorKind::Motion,
                room: m.room.clone(),
                position: m.position,
                radius: Some(m.radius),
                object_id: None,
                object_class: None,
            });
        }
        for (list, kind) in [
            (&self.doors, SensorKind::Door),
            (&self.devices, SensorKind::Device),
        ] {
            for s in list {
                sensors.push(SensorMapEntry {
                    id: s.id.clone(),
                    kind,
                    room: s.room.clone(),
                    position: s.position,
                    radius: None,
                    object_id: Some(s.object_id.clone()),
                    object_class: Some(s.object_class.clone()),
                });
            }
        }
        SensorMapFile {
            layout: layout_name.to_string(),
            corner_order: CORNER_ORDER_NOTE.to_string(),
            sensors,
        }
    }

    pub fn from_map_file(map: &SensorMapFile) -> Result<SensorSuite, SensorError> {
        let mut suite = SensorSuite::default();
        for entry in &map.sensors {
            match entry.kind {
                SensorKind::Motion => suite.motion.push(MotionSensor {
                    id: entry.id.clone(),
                    room: entry.room.clone(),
                    position: entry.position,
                    radius: entry
                        .radius
                        .ok_or_else(|| SensorError::Map(format!("{}: missing radius", entry.id)))?,
                }),
                SensorKind::Door | SensorKind::Device => {
                    let bound = BoundSensor {
                        id: entry.id.clone(),
                        object_id: entry.object_id.clone().ok_or_else(|| {
                            SensorError::Map(format!("{}: missing object_id", entry.id))
                        })?,
                        object_class: entry.object_class.clone().ok_or_else(|| {
                            SensorError::Map(format!("{}: missing object_class", entry.id))
                        })?,
                        room: entry.room.clone(),
                        position: entry.position,
                    };
                    if entry.kind == SensorKind::Door {
                        suite.doors.push(bound);
                    } else {
                        suite.devices.push(bound);
                    }
                }
            }
        }
        Ok(suite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::load_layout;
    use crate::sim_engine::{Trajectory, TrajectorySample};
    use chrono::NaiveDate;

    fn home_a() -> HomeLayout {
        let json = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/layouts/home_a.json"
        ))
        .unwrap();
        load_layout(&json).unwrap()
    }

    fn epoch() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()
    }

    fn traj(positions: &[Vec3]) -> Trajectory {
        let dt_us = 200_000;
        Trajectory {
            epoch_date: epoch(),
            dt_us,
            samples: positions
                .iter()
                .enumerate()
                .map(|(i, &position)| TrajectorySample {
                    t_us: i as i64 * dt_us,
                    position,
                    step_index: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn sensor_count_boundaries() {
        assert_eq!(determine_sensor_count(30.0).unwrap(), 1);
        assert_eq!(determine_sensor_count(45.0).unwrap(), 2);
        assert_eq!(determine_sensor_count(60.0).unwrap(), 2);
        assert_eq!(determine_sensor_count(60.0001).unwrap(), 3);
        assert!(determine_sensor_count(0.0).is_err());
        assert!(determine_sensor_count(-3.0).is_err());
    }

    #[test]
    fn corner_positions_follow_fixed_order() {
        let room = Room {
            name: "r".into(),
            bbox_min: Vec3::new(0.0, 0.0, 0.0),
            bbox_max: Vec3::new(5.0, 3.0, 4.0),
        };
        assert_eq!(
            calculate_sensor_positions(&room, 1).unwrap(),
            vec![Vec3::new(0.3, 2.7, 0.3)]
        );
        assert_eq!(
            calculate_sensor_positions(&room, 2).unwrap(),
            vec![Vec3::new(0.3, 2.7, 0.3), Vec3::new(4.7, 2.7, 3.7)]
        );
        assert_eq!(
            calculate_sensor_positions(&room, 3).unwrap()[2],
            Vec3::new(0.3, 2.7, 3.7)
        );
    }

    #[test]
    fn too_narrow_room_is_rejected() {
        let room = Room {
            name: "closet".into(),
            bbox_min: Vec3::new(0.0, 0.0, 0.0),
            bbox_max: Vec3::new(0.5, 2.5, 3.0),
        };
        assert!(matches!(
            calculate_sensor_positions(&room, 1),
            Err(SensorError::RoomTooSmall { .. })
        ));
    }

    #[test]
    fn instrument_home_a() {
        let layout = home_a();
        let suite = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        // bedroom 20 m² -> 1, kitchen 35 m² -> 2, bathroom 8 m² -> 1
        assert_eq!(suite.motion.len(), 4);
        let ids: Vec<&str> = suite.motion.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["M001", "M002", "M003", "M004"]);
        assert_eq!(suite.motion[0].room, "bedroom");
        assert_eq!(suite.motion[1].room, "kitchen");
        assert_eq!(suite.motion[3].room, "bathroom");
        // one openable object, four switchable ones, shared D counter
        assert_eq!(suite.doors.len(), 1);
        assert_eq!(suite.doors[0].id, "D001");
        assert_eq!(suite.doors[0].object_class, "fridge");
        let device_ids: Vec<&str> = suite.devices.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(device_ids, vec!["D002", "D003", "D004", "D005"]);
    }

    #[test]
    fn non_positive_radius_is_rejected() {
        let layout = home_a();
        assert!(matches!(
            instrument(&layout, 0.0),
            Err(SensorError::BadRadius(_))
        ));
        assert!(matches!(
            instrument(&layout, -1.0),
            Err(SensorError::BadRadius(_))
        ));
    }

    #[test]
    fn identical_rooms_get_distinct_deterministic_ids() {
        let layout = load_layout(
            r#"{
            "name": "twins",
            "rooms": [
                {"name": "left", "bbox_min": [0,0,0], "bbox_max": [5,2.5,4]},
                {"name": "right", "bbox_min": [5,0,0], "bbox_max": [10,2.5,4]}
            ]
        }"#,
        )
        .unwrap();
        let a = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        let b = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        assert_eq!(a, b);
        let ids: Vec<&str> = a.motion.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, vec!["M001", "M002"]);
        assert_eq!(a.motion[0].room, "left");
        assert_eq!(a.motion[1].room, "right");
    }

    #[test]
    fn layout_without_openables_has_empty_door_set() {
        let layout = load_layout(
            r#"{
            "name": "plain",
            "rooms": [{"name": "a", "bbox_min": [0,0,0], "bbox_max": [5,2.5,4]}],
            "objects": [{"id": "t1", "class": "table", "room": "a", "position": [1,0,1],
                         "properties": ["surface"]}]
        }"#,
        )
        .unwrap();
        let suite = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        assert!(suite.doors.is_empty());
        assert!(suite.devices.is_empty());
    }

    fn single_sensor_suite(position: Vec3, radius: f64) -> SensorSuite {
        SensorSuite {
            motion: vec![MotionSensor {
                id: "M001".into(),
                room: "a".into(),
                position,
                radius,
            }],
            doors: vec![],
            devices: vec![],
        }
    }

    #[test]
    fn detection_radius_is_inclusive() {
        let sensor_pos = Vec3::new(0.0, 2.4, 0.0);
        let suite = single_sensor_suite(sensor_pos, 5.0);
        // standing exactly at the sensor, exactly at radius, and beyond it
        let at_sensor = traj(&[sensor_pos, sensor_pos]);
        assert_eq!(detect_motion(&at_sensor, &suite).len(), 2);

        let at_radius = traj(&[Vec3::new(5.0, 2.4, 0.0)]);
        assert_eq!(detect_motion(&at_radius, &suite).len(), 1);

        let beyond = traj(&[Vec3::new(6.0, 2.4, 0.0)]);
        assert!(detect_motion(&beyond, &suite).is_empty());
    }

    #[test]
    fn stationary_agent_triggers_nothing() {
        let sensor_pos = Vec3::new(0.0, 2.4, 0.0);
        let suite = single_sensor_suite(sensor_pos, 5.0);
        let positions = vec![Vec3::new(1.0, 0.0, 1.0); 50];
        let events = motion_triggers(&traj(&positions), &suite, &SimParams::default());
        assert!(events.is_empty());
    }

    #[test]
    fn walkthrough_fires_one_on_off_pair() {
        let suite = single_sensor_suite(Vec3::new(0.0, 0.0, 0.0), 5.0);
        let params = SimParams::default();
        // 1.2 m/s walk along x through the disk: 0.24 m per 0.2 s sample.
        let positions: Vec<Vec3> = (0..100)
            .map(|i| Vec3::new(-12.0 + 0.24 * i as f64, 0.0, 0.0))
            .collect();
        let trajectory = traj(&positions);
        let events = motion_triggers(&trajectory, &suite, &params);

        // Independent oracle: per-sample conditions, then run-length encode.
        let mut expected = Vec::new();
        let mut in_run = false;
        for i in 1..positions.len() {
            let within = positions[i].distance(&suite.motion[0].position) <= 5.0;
            let moving = positions[i].distance(&positions[i - 1]) > params.jitter_eps;
            let active = within && moving;
            if active != in_run {
                expected.push((trajectory.samples[i].t_us, active));
                in_run = active;
            }
        }
        assert_eq!(events.len(), expected.len());
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].value, SensorValue::On);
        assert_eq!(events[1].value, SensorValue::Off);
        assert!(events[0].timestamp < events[1].timestamp);
    }

    #[test]
    fn overlapping_sensors_stay_balanced() {
        let suite = SensorSuite {
            motion: vec![
                MotionSensor {
                    id: "M001".into(),
                    room: "a".into(),
                    position: Vec3::new(0.0, 0.0, 0.0),
                    radius: 5.0,
                },
                MotionSensor {
                    id: "M002".into(),
                    room: "a".into(),
                    position: Vec3::new(4.0, 0.0, 0.0),
                    radius: 5.0,
                },
            ],
            doors: vec![],
            devices: vec![],
        };
        let positions: Vec<Vec3> = (0..150)
            .map(|i| Vec3::new(-12.0 + 0.24 * i as f64, 0.0, 0.0))
            .collect();
        let events = motion_triggers(&traj(&positions), &suite, &SimParams::default());
        for id in ["M001", "M002"] {
            let seq: Vec<SensorValue> = events
                .iter()
                .filter(|e| e.sensor_id == id)
                .map(|e| e.value)
                .collect();
            assert_eq!(seq, vec![SensorValue::On, SensorValue::Off], "{id}");
        }
    }

    fn logged(
        object_id: &str,
        room: &str,
        from: ObjectState,
        to: ObjectState,
        micros: i64,
    ) -> crate::sim_engine::LoggedTransition {
        crate::sim_engine::LoggedTransition {
            step_index: 0,
            transition: crate::env_model::StateTransition {
                timestamp: Timestamp::from_midnight_micros(epoch(), micros),
                object_id: object_id.into(),
                room: room.into(),
                from_state: from,
                to_state: to,
            },
        }
    }

    #[test]
    fn door_and_device_events_from_transitions() {
        let layout = home_a();
        let suite = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        let log = vec![
            logged(
                "fridge1",
                "kitchen",
                ObjectState::Closed,
                ObjectState::Open,
                0,
            ),
            logged(
                "fridge1",
                "kitchen",
                ObjectState::Open,
                ObjectState::Closed,
                1_000_000,
            ),
            logged(
                "toaster1",
                "kitchen",
                ObjectState::Off,
                ObjectState::On,
                2_000_000,
            ),
        ];
        let events = door_device_events(&log, &suite, true);
        assert_eq!(events.len(), 3);
        assert_eq!(events[0].kind, SensorKind::Door);
        assert_eq!(events[0].value, SensorValue::Open);
        assert_eq!(events[0].sensor_id, "D001");
        assert_eq!(events[0].room, "kitchen");
        assert_eq!(events[1].value, SensorValue::Close);
        assert_eq!(events[2].kind, SensorKind::Device);
        assert_eq!(events[2].value, SensorValue::On);

        // One-sided definition: reverse transitions emit nothing.
        let events = door_device_events(&log, &suite, false);
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.value != SensorValue::Close));
    }

    #[test]
    fn merge_orders_and_breaks_ties() {
        assert!(merge_events(&[vec![], vec![]]).is_empty());
        let t0 = Timestamp::from_midnight_micros(epoch(), 0);
        let t1 = Timestamp::from_midnight_micros(epoch(), 1_000_000);
        let motion = vec![
            SensorEvent::motion(t0, "M001", "a", true),
            SensorEvent::motion(t1, "M001", "a", false),
        ];
        let door = vec![SensorEvent::door(t0, "D001", "a", "fridge", true)];
        let merged = merge_events(&[motion, door]);
        // Door sorts before Motion on equal timestamps.
        assert_eq!(merged[0].kind, SensorKind::Door);
        assert_eq!(merged[1].kind, SensorKind::Motion);
        assert_eq!(merged[2].value, SensorValue::Off);
        // Stable under re-merge.
        let again = merge_events(std::slice::from_ref(&merged));
        assert_eq!(again, merged);
    }

    #[test]
    fn sensor_map_round_trip() {
        let layout = home_a();
        let suite = instrument(&layout, DEFAULT_SENSOR_RADIUS).unwrap();
        let map = suite.to_map_file(&layout.name);
        let json = serde_json::to_string_pretty(&map).unwrap();
        let parsed: SensorMapFile = serde_json::from_str(&json).unwrap();
        let rebuilt = SensorSuite::from_map_file(&parsed).unwrap();
        assert_eq!(rebuilt, suite);
    }
}
