//! Home layouts: rooms, objects, and the environment graph.
//!
//! A [`HomeLayout`] is the simulated world. It is immutable after load and
//! can be shared across concurrent simulation runs; the contained
//! [`EnvironmentGraph`] is cloned per run when state mutation is needed.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Timestamp;

/// A point or extent in meters. `y` is vertical (up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// An axis-aligned room. The footprint is the x-z extent of the bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub bbox_min: Vec3,
    pub bbox_max: Vec3,
}

impl Room {
    /// Footprint area in square meters (x extent times z extent).
    /// Vertical extent is ignored: sensor-count rules concern floor coverage.
    pub fn area(&self) -> f64 {
        (self.bbox_max.x - self.bbox_min.x) * (self.bbox_max.z - self.bbox_min.z)
    }

    /// Inclusive containment test.
    pub fn contains(&self, p: &Vec3) -> bool {
        p.x >= self.bbox_min.x
            && p.x <= self.bbox_max.x
            && p.y >= self.bbox_min.y
            && p.y <= self.bbox_max.y
            && p.z >= self.bbox_min.z
            && p.z <= self.bbox_max.z
    }

    /// Center of the footprint at floor height; agents navigate to this point.
    pub fn floor_center(&self) -> Vec3 {
        Vec3::new(
            (self.bbox_min.x + self.bbox_max.x) / 2.0,
            self.bbox_min.y,
            (self.bbox_min.z + self.bbox_max.z) / 2.0,
        )
    }
}

/// Free area in square meters of a room's bounding box footprint.
pub fn room_area(room: &Room) -> f64 {
    room.area()
}

/// Static object capabilities. `CanOpen` and `HasSwitch` drive sensor emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectProperty {
    CanOpen,
    HasSwitch,
    Grabbable,
    Surface,
}

/// Dynamic object state. An object holds at most one of {Open, Closed} and at
/// most one of {On, Off}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectState {
    Open,
    Closed,
    On,
    Off,
}

/// The two independent state families an object can participate in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    Openable,
    Switchable,
}

impl ObjectState {
    pub fn family(&self) -> StateFamily {
        match self {
            ObjectState::Open | ObjectState::Closed => StateFamily::Openable,
            ObjectState::On | ObjectState::Off => StateFamily::Switchable,
        }
    }

    /// Property an object must carry to hold this state.
    pub fn required_property(&self) -> ObjectProperty {
        match self.family() {
            StateFamily::Openable => ObjectProperty::CanOpen,
            StateFamily::Switchable => ObjectProperty::HasSwitch,
        }
    }

    /// Initial state assumed for a capable object that declares none.
    fn family_default(family: StateFamily) -> ObjectState {
        match family {
            StateFamily::Openable => ObjectState::Closed,
            StateFamily::Switchable => ObjectState::Off,
        }
    }
}

/// One object instance in the home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    #[serde(rename = "class")]
    pub class_name: String,
    pub room: String,
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub properties: BTreeSet<ObjectProperty>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub states: BTreeSet<ObjectState>,
}

impl SceneObject {
    pub fn has_property(&self, p: ObjectProperty) -> bool {
        self.properties.contains(&p)
    }

    /// Current state within a family, if any.
    pub fn state_in(&self, family: StateFamily) -> Option<ObjectState> {
        self.states.iter().copied().find(|s| s.family() == family)
    }
}

/// Spatial or semantic relation between two objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    On,
    Inside,
    NextTo,
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub relation: Relation,
    pub to: String,
}

/// Objects as nodes plus their relations as edges. Object order follows the
/// layout document, which keeps every traversal deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvironmentGraph {
    objects: Vec<SceneObject>,
    edges: Vec<Edge>,
}

/// Record of one actual state change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTransition {
    pub timestamp: Timestamp,
    pub object_id: String,
    pub room: String,
    pub from_state: ObjectState,
    pub to_state: ObjectState,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("object {object:?} cannot take state {state:?}: property {missing:?} is absent")]
    StateNotPermitted {
        object: String,
        state: ObjectState,
        missing: ObjectProperty,
    },
    #[error("edge endpoint {0:?} does not exist")]
    EdgeUnknownObject(String),
    #[error("self-edge on {0:?}")]
    SelfEdge(String),
}

impl EnvironmentGraph {
    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// First object of the given class inside `room`, in document order.
    pub fn object_by_class_in_room(&self, class: &str, room: &str) -> Option<&SceneObject> {
        self.objects
            .iter()
            .find(|o| o.class_name == class && o.room == room)
    }

    /// First object of the given class anywhere, in document order.
    pub fn object_by_class(&self, class: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.class_name == class)
    }

    pub fn add_edge(&mut self, from: &str, relation: Relation, to: &str) -> Result<(), GraphError> {
        if from == to {
            return Err(GraphError::SelfEdge(from.to_string()));
        }
        for end in [from, to] {
            if self.object(end).is_none() {
                return Err(GraphError::EdgeUnknownObject(end.to_string()));
            }
        }
        self.edges.push(Edge {
            from: from.to_string(),
            relation,
            to: to.to_string(),
        });
        Ok(())
    }

    /// Drop the placement edges (`On`/`Inside`) originating at an object;
    /// used when an agent picks it up.
    pub fn remove_placement_edges(&mut self, id: &str) {
        self.edges
            .retain(|e| !(e.from == id && matches!(e.relation, Relation::On | Relation::Inside)));
    }
}

/// Replace an object's state and report the transition, or report a no-op if
/// the object already holds `new_state`.
pub fn apply_state_change(
    graph: &mut EnvironmentGraph,
    object_id: &str,
    new_state: ObjectState,
    timestamp: Timestamp,
) -> Result<Option<StateTransition>, GraphError> {
    let obj = graph
        .objects
        .iter_mut()
        .find(|o| o.id == object_id)
        .ok_or_else(|| GraphError::UnknownObject(object_id.to_string()))?;
    let required = new_state.required_property();
    if !obj.properties.contains(&required) {
        return Err(GraphError::StateNotPermitted {
            object: object_id.to_string(),
            state: new_state,
            missing: required,
        });
    }
    let family = new_state.family();
    let from = obj
        .state_in(family)
        .unwrap_or_else(|| ObjectState::family_default(family));
    if from == new_state {
        obj.states.insert(new_state);
        return Ok(None);
    }
    obj.states.retain(|s| s.family() != family);
    obj.states.insert(new_state);
    Ok(Some(StateTransition {
        timestamp,
        object_id: object_id.to_string(),
        room: obj.room.clone(),
        from_state: from,
        to_state: new_state,
    }))
}

/// A doorway between two rooms with the point agents walk through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub rooms: [String; 2],
    pub anchor: Vec3,
}

/// A validated home: rooms, the object graph, and optional doorways.
#[derive(Debug, Clone, PartialEq)]
pub struct HomeLayout {
    pub name: String,
    pub rooms: Vec<Room>,
    pub graph: EnvironmentGraph,
    pub doors: Vec<Door>,
}

impl HomeLayout {
    pub fn room(&self, name: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        let doc = LayoutDoc {
            name: self.name.clone(),
            rooms: self.rooms.clone(),
            objects: self.graph.objects.clone(),
            edges: self.graph.edges.clone(),
            doors: self.doors.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("layout serializes")
    }
}

/// All rooms of a layout in declaration order.
pub fn find_all_rooms(layout: &HomeLayout) -> &[Room] {
    &layout.rooms
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("schema violation at {path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("non-finite coordinate on {0}")]
    NonFinite(String),
    #[error("room {0:?}: bbox_min must be strictly below bbox_max on every axis")]
    DegenerateRoom(String),
    #[error("duplicate room name {0:?}")]
    DuplicateRoom(String),
    #[error("rooms {a:?} and {b:?} overlap in footprint")]
    OverlappingRooms { a: String, b: String },
    #[error("rooms {a:?} and {b:?} share no floor band; multi-story layouts are not supported")]
    NoCommonFloor { a: String, b: String },
    #[error("duplicate object id {0:?}")]
    DuplicateObject(String),
    #[error("object {0:?} has an empty class name")]
    EmptyClass(String),
    #[error("object {object:?} names room {room:?}, which does not exist")]
    UnknownRoom { object: String, room: String },
    #[error("object {object:?} lies outside its room {room:?}")]
    ObjectOutsideRoom { object: String, room: String },
    #[error("object {object:?}: state {state:?} requires property {property:?}")]
    StateWithoutProperty {
        object: String,
        state: ObjectState,
        property: ObjectProperty,
    },
    #[error("object {object:?} holds conflicting states {a:?} and {b:?}")]
    ConflictingStates {
        object: String,
        a: ObjectState,
        b: ObjectState,
    },
    #[error("edge references unknown object {0:?}")]
    EdgeUnknownObject(String),
    #[error("self-edge on object {0:?}")]
    SelfEdge(String),
    #[error("door references unknown room {0:?}")]
    DoorUnknownRoom(String),
}

/// Wire schema of a layout file.
#[derive(Debug, Serialize, Deserialize)]
struct LayoutDoc {
    name: String,
    rooms: Vec<Room>,
    #[serde(default)]
    objects: Vec<SceneObject>,
    #[serde(default)]
    edges: Vec<Edge>,
    #[serde(default)]
    doors: Vec<Door>,
}

/// Parse and validate a layout document.
pub fn load_layout(json: &str) -> Result<HomeLayout, LayoutError> {
    let mut de = serde_json::Deserializer::from_str(json);
    let doc: LayoutDoc =
        serde_path_to_error::deserialize(&mut de).map_err(|e| LayoutError::Schema {
            path: e.path().to_string(),
            detail: e.inner().to_string(),
        })?;
    validate(doc)
}

fn validate(doc: LayoutDoc) -> Result<HomeLayout, LayoutError> {
    let LayoutDoc {
        name,
        rooms,
        mut objects,
        edges,
        doors,
    } = doc;

    let mut room_names = HashSet::new();
    for room in &rooms {
        for (v, what) in [(&room.bbox_min, "bbox_min"), (&room.bbox_max, "bbox_max")] {
            if !v.is_finite() {
                return Err(LayoutError::NonFinite(format!(
                    "room {:?} {what}",
                    room.name
                )));
            }
        }
        let min = &room.bbox_min;
        let max = &room.bbox_max;
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(LayoutError::DegenerateRoom(room.name.clone()));
        }
        if !room_names.insert(room.name.clone()) {
            return Err(LayoutError::DuplicateRoom(room.name.clone()));
        }
    }
    for (i, a) in rooms.iter().enumerate() {
        for b in &rooms[i + 1..] {
            // Single-story: every pair of rooms must share a vertical band.
            if a.bbox_min.y.max(b.bbox_min.y) >= a.bbox_max.y.min(b.bbox_max.y) {
                return Err(LayoutError::NoCommonFloor {
                    a: a.name.clone(),
                    b: b.name.clone(),
                });
            }
            let ox = a.bbox_min.x.max(b.bbox_min.x) < a.bbox_max.x.min(b.bbox_max.x);
            let oz = a.bbox_min.z.max(b.bbox_min.z) < a.bbox_max.z.min(b.bbox_max.z);
            if ox && oz {
                return Err(LayoutError::OverlappingRooms {
                    a: a.name.clone(),
                    b: b.name.clone(),
                });
            }
        }
    }

    let mut object_ids = HashSet::new();
    for obj in &mut objects {
        if obj.class_name.is_empty() {
            return Err(LayoutError::EmptyClass(obj.id.clone()));
        }
        if !obj.position.is_finite() {
            return Err(LayoutError::NonFinite(format!(
                "object {:?} position",
                obj.id
            )));
        }
        if !object_ids.insert(obj.id.clone()) {
            return Err(LayoutError::DuplicateObject(obj.id.clone()));
        }
        let room =
            rooms
                .iter()
                .find(|r| r.name == obj.room)
                .ok_or_else(|| LayoutError::UnknownRoom {
                    object: obj.id.clone(),
                    room: obj.room.clone(),
                })?;
        if !room.contains(&obj.position) {
            return Err(LayoutError::ObjectOutsideRoom {
                object: obj.id.clone(),
                room: obj.room.clone(),
            });
        }
        let mut seen: Vec<ObjectState> = Vec::new();
        for &state in &obj.states {
            if let Some(&other) = seen.iter().find(|s| s.family() == state.family()) {
                return Err(LayoutError::ConflictingStates {
                    object: obj.id.clone(),
                    a: other,
                    b: state,
                });
            }
            seen.push(state);
            let required = state.required_property();
            if !obj.properties.contains(&required) {
                return Err(LayoutError::StateWithoutProperty {
                    object: obj.id.clone(),
                    state,
                    property: required,
                });
            }
        }
        // Capable objects start Closed / Off unless the document says otherwise.
        for family in [StateFamily::Openable, StateFamily::Switchable] {
            let capable = obj
                .properties
                .contains(&ObjectState::family_default(family).required_property());
            if capable && obj.state_in(family).is_none() {
                obj.states.insert(ObjectState::family_default(family));
            }
        }
    }

    for edge in &edges {
        if edge.from == edge.to {
            return Err(LayoutError::SelfEdge(edge.from.clone()));
        }
        for end in [&edge.from, &edge.to] {
            if !object_ids.contains(end) {
                return Err(LayoutError::EdgeUnknownObject(end.clone()));
            }
        }
    }

    for door in &doors {
        for r in &door.rooms {
            if !room_names.contains(r) {
                return Err(LayoutError::DoorUnknownRoom(r.clone()));
            }
        }
    }

    Ok(HomeLayout {
        name,
        rooms,
        graph: EnvironmentGraph { objects, edges },
        doors,
    })
}
