//! Closed vocabularies shared by the content table, the network variables
//! and the wire formats.

use serde::{Deserialize, Serialize};

pub const WEATHER: &str = "weather";
pub const TEMPERATURE: &str = "temperature";
pub const LOCALITY: &str = "locality";
pub const WILLINGNESS: &str = "willingness";
pub const PURPOSE: &str = "purpose";
pub const WALK_ABILITY: &str = "walk_ability";
pub const BARRIER: &str = "barrier";
pub const REACTION: &str = "reaction";

pub const WEATHER_STATES: &[&str] = &["Fine", "Cloudy", "Rain"];
pub const TEMPERATURE_STATES: &[&str] = &["30C+", "5C-", "other"];
pub const LOCALITY_STATES: &[&str] = &["Yes", "No", "Little"];
pub const WILLINGNESS_STATES: &[&str] = &["walk for exercise", "not walk", "other"];
pub const PURPOSE_STATES: &[&str] = &["errand", "stroll", "rehabilitation", "other"];
pub const WALK_ABILITY_STATES: &[&str] = &["long", "short"];

pub const NEGLECT: &str = "neglect";
pub const NOTIFY: &str = "notify";

pub const REACTION_STATES: &[&str] = &[
    "proceed with caution",
    "detour",
    "escalator",
    "elevator",
    "change time slot",
    "across",
    NEGLECT,
];

pub const BARRIER_CLASSES: &[&str] = &[
    "stairs_in_station",
    "pedestrian_bridge",
    "bicycles_on_sidewalk",
    "bicycles_on_street",
    "road_without_sidewalk",
    "crowd_in_station",
    "street_people",
    "road_construction",
    "road_under_sun",
    "steep_stairs",
    "no_resting_place",
    "hawkers",
    "children_in_public_space",
    "space_without_people_night",
    "other",
];

/// Barrier classes that appear in the published example dataset rows.
pub const EXAMPLE_DATASET_BARRIERS: &[&str] = &[
    "bicycles_on_street",
    "stairs_in_station",
    "bicycles_on_sidewalk",
    "crowd_in_station",
    "road_without_sidewalk",
    "street_people",
];

pub const USEFUL_CLASSES: &[&str] = &[
    "police_box",
    "bench_in_shade",
    "park_map",
    "toilet",
    "resting_place",
    "restaurant",
    "vending_machine",
    "other",
];

const STATIC_BARRIERS: &[&str] = &[
    "steep_stairs",
    "pedestrian_bridge",
    "road_without_sidewalk",
    "no_resting_place",
    "stairs_in_station",
];

/// States of one of the built-in network variables.
pub fn states_of(variable: &str) -> Option<&'static [&'static str]> {
    Some(match variable {
        WEATHER => WEATHER_STATES,
        TEMPERATURE => TEMPERATURE_STATES,
        LOCALITY => LOCALITY_STATES,
        WILLINGNESS => WILLINGNESS_STATES,
        PURPOSE => PURPOSE_STATES,
        WALK_ABILITY => WALK_ABILITY_STATES,
        BARRIER => BARRIER_CLASSES,
        REACTION => REACTION_STATES,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Barrier,
    Useful,
}

impl Kind {
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Kind::Barrier => BARRIER_CLASSES,
            Kind::Useful => USEFUL_CLASSES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Static,
    Dynamic,
}

impl Category {
    /// Structural barriers are static, time-varying ones dynamic. Useful
    /// spots are fixed facilities and count as static.
    pub fn default_for(kind: Kind, class: &str) -> Category {
        match kind {
            Kind::Useful => Category::Static,
            Kind::Barrier if STATIC_BARRIERS.contains(&class) => Category::Static,
            Kind::Barrier if class == "other" => Category::Static,
            Kind::Barrier => Category::Dynamic,
        }
    }
}
