//! Reading configuration and day profiles, generating synthetic days, and
//! rendering per-hour dispatch tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::dispatch::DispatchResult;
use crate::model::{ComponentCatalog, DayProfile, Scenario, HOURS_PER_DAY};

/// Version accepted in the `schema_version` key of every config file.
pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error("{what}: schema_version {found} is not supported (expected {SCHEMA_VERSION})")]
    Schema { what: &'static str, found: i64 },
    #[error("{what}: missing schema_version")]
    MissingSchema { what: &'static str },
    #[error("day profile: {0}")]
    Profile(String),
}

fn parse_versioned<T: DeserializeOwned>(what: &'static str, text: &str) -> Result<T, IoError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| IoError::Parse { what, message: e.to_string() })?;
    match table.remove("schema_version") {
        None => return Err(IoError::MissingSchema { what }),
        Some(toml::Value::Integer(v)) if v == SCHEMA_VERSION => {}
        Some(toml::Value::Integer(v)) => return Err(IoError::Schema { what, found: v }),
        Some(other) => {
            return Err(IoError::Parse {
                what,
                message: format!("schema_version must be an integer, found {other}"),
            })
        }
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| IoError::Parse { what, message: e.to_string() })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, IoError> {
    parse_versioned("scenario", text)
}

pub fn parse_catalog(text: &str) -> Result<ComponentCatalog, IoError> {
    parse_versioned("catalog", text)
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    parse_scenario(&read(path)?)
}

pub fn load_catalog(path: &Path) -> Result<ComponentCatalog, IoError> {
    parse_catalog(&read(path)?)
}

pub fn load_day(path: &Path) -> Result<DayProfile, IoError> {
    parse_day_csv(&read(path)?)
}

/// Parse `hour,cf_farm1,...,cf_farmN,lmp` with one row per hour.
pub fn parse_day_csv(text: &str) -> Result<DayProfile, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| IoError::Profile(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let farms = cols.len().saturating_sub(2);
    let well_formed = cols.len() >= 3
        && cols[0] == "hour"
        && cols[cols.len() - 1] == "lmp"
        && (1..=farms).all(|k| cols[k] == format!("cf_farm{k}"));
    if !well_formed {
        return Err(IoError::Profile(format!(
            "header must be hour,cf_farm1..cf_farmN,lmp; found {}",
            cols.join(",")
        )));
    }
    let mut cf = vec![Vec::new(); farms];
    let mut lmp = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IoError::Profile(e.to_string()))?;
        let num = |i: usize| -> Result<f64, IoError> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| IoError::Profile(format!("row {}: column {} is not a number", row + 1, cols[i])))
        };
        let hour = num(0)?;
        if hour != row as f64 {
            return Err(IoError::Profile(format!("row {}: expected hour {row}, found {hour}", row + 1)));
        }
        for (k, series) in cf.iter_mut().enumerate() {
            series.push(num(k + 1)?);
        }
        lmp.push(num(farms + 1)?);
    }
    Ok(DayProfile { wind_capacity_factor: cf, lmp_usd_per_mwh: lmp, dt_hours: 1.0 })
}

/// Render a day in the format read by [`parse_day_csv`].
pub fn day_to_csv(day: &DayProfile) -> String {
    let mut s = String::from("hour");
    for k in 1..=day.farm_count() {
        let _ = write!(s, ",cf_farm{k}");
    }
    s.push_str(",lmp\n");
    for t in 0..day.hours() {
        let _ = write!(s, "{t}");
        for series in &day.wind_capacity_factor {
            let _ = write!(s, ",{:.4}", series[t]);
        }
        let _ = writeln!(s, ",{:.2}", day.lmp_usd_per_mwh[t]);
    }
    s
}

/// Shape of a synthetic day.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDay {
    /// Daily mean capacity factor per farm; also fixes the farm count.
    pub mean_capacity_factor: Vec<f64>,
    pub lmp_mean: f64,
    pub lmp_amplitude: f64,
    /// Hour of the price peak.
    pub lmp_peak_hour: f64,
}

impl SyntheticDay {
    pub fn for_farms(farm_count: usize) -> Self {
        SyntheticDay {
            mean_capacity_factor: (0..farm_count).map(|k| 0.46 - 0.02 * (k % 3) as f64).collect(),
            lmp_mean: 40.0,
            lmp_amplitude: 22.0,
            lmp_peak_hour: 19.0,
        }
    }

    /// Sinusoidal wind with a farm-specific phase plus bounded noise whose
    /// sample mean is removed, so each farm hits its mean exactly and never
    /// leaves `[0, 1]`. Prices follow a cosine peaking at `lmp_peak_hour`.
    pub fn generate(&self, seed: u64) -> DayProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = HOURS_PER_DAY;
        let two_pi = std::f64::consts::TAU;
        let cf = self
            .mean_capacity_factor
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let room = m.min(1.0 - m).max(0.0);
                let amp = 0.5 * room;
                let phase = 3.0 + 2.0 * k as f64;
                let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.25..=0.25) * room).collect();
                let bias = noise.iter().sum::<f64>() / n as f64;
                (0..n)
                    .map(|t| {
                        let wave = amp * (two_pi * (t as f64 + phase) / n as f64).sin();
                        (m + wave + noise[t] - bias).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        let lmp = (0..n)
            .map(|t| {
                let x = two_pi * (t as f64 - self.lmp_peak_hour) / n as f64;
                (self.lmp_mean + self.lmp_amplitude * x.cos()).max(0.0)
            })
            .collect();
        DayProfile { wind_capacity_factor: cf, lmp_usd_per_mwh: lmp, dt_hours: 1.0 }
    }
}

/// Synthetic day with the default shape for `farm_count` farms.
pub fn generate_synthetic_day(farm_count: usize, seed: u64) -> DayProfile {
    SyntheticDay::for_farms(farm_count).generate(seed)
}

/// Per-hour dispatch table.
pub fn hourly_csv(r: &DispatchResult) -> String {
    let mut s = String::from("hour,available_mw");
    for l in &r.lines {
        let _ = write!(s, ",line{0}_in_mw,line{0}_out_mw", l.farm + 1);
    }
    for site in &r.sites {
        let tag = match site.site {
            crate::model::NodeKind::Farm(k) => format!("farm{}", k + 1),
            crate::model::NodeKind::Hsc => "hsc".to_string(),
            crate::model::NodeKind::Substation => "substation".to_string(),
        };
        let _ = write!(s, ",{tag}_electrolyzer_mw,{tag}_h2_kgph,{tag}_compressor_mw");
    }
    for p in &r.pipes {
        let _ = write!(s, ",{0}_flow_kgph,{0}_inlet_bar", p.leg);
    }
    s.push_str(",booster_mw,storage_in_kgph,storage_out_kgph,storage_kg,fuel_cell_mw,delivered_mw,curtailed_mw\n");
    for t in 0..r.hours() {
        let _ = write!(s, "{t},{:.6}", r.available_mw[t]);
        for l in &r.lines {
            let _ = write!(s, ",{:.6},{:.6}", l.p_in_mw[t], l.p_out_mw[t]);
        }
        for site in &r.sites {
            let _ = write!(
                s,
                ",{:.6},{:.6},{:.6}",
                site.electrolyzer_mw[t], site.h2_kgph[t], site.compressor_mw[t]
            );
        }
        for p in &r.pipes {
            let _ = write!(s, ",{:.6},{:.6}", p.flow_kgph[t], p.inlet_pressure_bar[t]);
        }
        let _ = writeln!(
            s,
            ",{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.booster_mw[t],
            r.storage_in_kgph[t],
            r.storage_out_kgph[t],
            r.storage_kg[t],
            r.fuel_cell_mw[t],
            r.delivered_mw[t],
            r.curtailed_mw[t]
        );
    }
    s
}
