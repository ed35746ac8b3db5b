//! Bundled scenario, catalog and day, plus the named cost presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{parse_catalog, parse_day_csv, parse_scenario};
use crate::model::{ComponentCatalog, DayProfile, Scenario};

pub const SCENARIO_TOML: &str = include_str!("../data/scenario.toml");
pub const CATALOG_TOML: &str = include_str!("../data/catalog.toml");
pub const DAY_CSV: &str = include_str!("../data/day.csv");

pub fn scenario() -> Scenario {
    parse_scenario(SCENARIO_TOML).expect("bundled scenario parses")
}

pub fn catalog() -> ComponentCatalog {
    parse_catalog(CATALOG_TOML).expect("bundled catalog parses")
}

pub fn day() -> DayProfile {
    parse_day_csv(DAY_CSV).expect("bundled day parses")
}

/// The first farm of the bundled scenario on its own.
pub fn single_farm_scenario() -> Scenario {
    let mut s = scenario();
    s.farm_count = 1;
    s.farm_capacity_mw.truncate(1);
    s.dist_farm_substation_km.truncate(1);
    s.dist_farm_hsc_km.truncate(1);
    s
}

/// Named cost assumptions applied on top of a catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Catalog as given.
    Current,
    /// Electrolyzer, fuel-cell and pipeline capital cost halved.
    FutureHalved,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown preset `{0}` (expected current or future_halved)")]
pub struct UnknownPreset(pub String);

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Current => "current",
            Preset::FutureHalved => "future_halved",
        }
    }

    pub fn apply(self, c: &mut ComponentCatalog) {
        if self == Preset::FutureHalved {
            c.electrolyzer.capex_per_unit *= 0.5;
            c.fuel_cell.capex_per_unit *= 0.5;
            c.pipeline_lp.capex_per_km *= 0.5;
            c.pipeline_hp.capex_per_km *= 0.5;
        }
    }

    pub fn applied(self, mut c: ComponentCatalog) -> ComponentCatalog {
        self.apply(&mut c);
        c
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" => Ok(Preset::Current),
            "future_halved" => Ok(Preset::FutureHalved),
            other => Err(UnknownPreset(other.to_string())),
        }
    }
}

/// Set the fuel-cell yield so that yield / intensity equals `round_trip`.
pub fn set_round_trip(c: &mut ComponentCatalog, round_trip: f64) {
    c.fuel_cell.energy_yield_mwh_per_kg = round_trip * c.electrolyzer.energy_intensity_mwh_per_kg;
}
