//! Domain types shared by every stage of the planner: the scenario geometry,
//! the component catalog, gas properties, the three delivery topologies and
//! the representative day of wind and prices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slots in a representative day.
pub const HOURS_PER_DAY: usize = 24;

/// Days per planning year; revenue of the representative day is scaled by this.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Delivery topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    /// Point-to-point HVDC from every farm to the onshore substation.
    #[serde(rename = "HVDC")]
    Hvdc,
    /// HVDC from the farms to the hydrogen hub, then one high-pressure pipeline ashore.
    #[serde(rename = "HYBRID")]
    Hybrid,
    /// Electrolysis at the farms, low-pressure pipelines to the hub, high-pressure pipeline ashore.
    #[serde(rename = "HP")]
    Hp,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::Hvdc, CaseId::Hybrid, CaseId::Hp];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Hvdc => "HVDC",
            CaseId::Hybrid => "HYBRID",
            CaseId::Hp => "HP",
        }
    }

    /// Constraint families active in this case.
    pub fn constraints(self) -> &'static [Constraint] {
        use Constraint::*;
        match self {
            CaseId::Hvdc => &[LineLimit, LineLoss],
            CaseId::Hybrid => &[
                LineLimit,
                LineLoss,
                Electrolysis,
                FuelCellYield,
                Compression,
                PipeLimit,
                PipeFlow,
                StorageBalance,
                StorageBounds,
                ElectrolyzerCount,
                FuelCellCount,
            ],
            CaseId::Hp => &[
                Electrolysis,
                FuelCellYield,
                Compression,
                PipeLimit,
                PipeFlow,
                StorageBalance,
                StorageBounds,
                ElectrolyzerCount,
                FuelCellCount,
            ],
        }
    }

    pub fn uses_lines(self) -> bool {
        matches!(self, CaseId::Hvdc | CaseId::Hybrid)
    }

    pub fn uses_hydrogen(self) -> bool {
        matches!(self, CaseId::Hybrid | CaseId::Hp)
    }

    /// Number of electrolyzer sites: the hub in the hybrid case, every farm in the HP case.
    pub fn electrolyzer_sites(self, farm_count: usize) -> usize {
        match self {
            CaseId::Hvdc => 0,
            CaseId::Hybrid => 1,
            CaseId::Hp => farm_count,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown case id `{0}` (expected HVDC, HYBRID or HP)")]
pub struct UnknownCase(pub String);

impl FromStr for CaseId {
    type Err = UnknownCase;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HVDC" => Ok(CaseId::Hvdc),
            "HYBRID" => Ok(CaseId::Hybrid),
            "HP" => Ok(CaseId::Hp),
            _ => Err(UnknownCase(s.to_string())),
        }
    }
}

/// Families of physical and sizing constraints that make up the planning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    LineLimit,
    LineLoss,
    Electrolysis,
    FuelCellYield,
    Compression,
    PipeLimit,
    PipeFlow,
    StorageBalance,
    StorageBounds,
    ElectrolyzerCount,
    FuelCellCount,
}

/// Geometry, capacities and storage bounds of one planning study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub farm_count: usize,
    pub farm_capacity_mw: Vec<f64>,
    pub dist_farm_substation_km: Vec<f64>,
    pub dist_farm_hsc_km: Vec<f64>,
    pub dist_hsc_substation_km: f64,
    pub horizon_years: u32,
    pub storage_capacity_kg: f64,
    pub storage_min_kg: f64,
    pub storage_initial_kg: f64,
    #[serde(default = "unit_scale")]
    pub distance_scale: f64,
    /// Annual discount rate applied to revenue and operating cost. Zero keeps
    /// the plain `365 * Y` lifetime multiplier.
    #[serde(default)]
    pub discount_rate: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Scenario {
    pub fn farm_substation_km(&self, farm: usize) -> f64 {
        self.dist_farm_substation_km[farm] * self.distance_scale
    }

    pub fn farm_hsc_km(&self, farm: usize) -> f64 {
        self.dist_farm_hsc_km[farm] * self.distance_scale
    }

    pub fn hsc_substation_km(&self) -> f64 {
        self.dist_hsc_substation_km * self.distance_scale
    }

    pub fn total_capacity_mw(&self) -> f64 {
        self.farm_capacity_mw.iter().sum()
    }

    /// Mean unscaled farm-to-substation distance.
    pub fn mean_farm_substation_km(&self) -> f64 {
        let n = self.dist_farm_substation_km.len().max(1) as f64;
        self.dist_farm_substation_km.iter().sum::<f64>() / n
    }

    /// Lifetime multiplier on annual flows: `Y` without discounting, the
    /// annuity factor otherwise.
    pub fn lifetime_factor(&self) -> f64 {
        let years = self.horizon_years;
        if self.discount_rate == 0.0 {
            return f64::from(years);
        }
        (1..=years)
            .map(|y| (1.0 + self.discount_rate).powi(-(y as i32)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub p_lim_mw: f64,
    pub voltage_kv: f64,
    pub resistance_ohm_per_km: f64,
    pub converter_eff: f64,
    pub capex_per_km: f64,
    pub capex_converter_pair: f64,
    pub opex_frac_per_year: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrolyzerSpec {
    pub rated_mw: f64,
    pub energy_intensity_mwh_per_kg: f64,
    pub capex_per_unit: f64,
    pub opex_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelCellSpec {
    pub rated_mw: f64,
    pub energy_yield_mwh_per_kg: f64,
    pub capex_per_unit: f64,
    pub opex_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorSpec {
    pub energy_per_kg_mwh: f64,
    pub capex_per_kgph_capacity: f64,
    pub opex_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub h_lim_kgph: f64,
    pub diameter_m: f64,
    pub outlet_pressure_bar: f64,
    pub max_inlet_pressure_bar: f64,
    pub capex_per_km: f64,
    pub opex_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSpec {
    pub capex_per_kg: f64,
    pub opex_frac: f64,
}

/// Coefficients of the loss and pipeline-flow relations plus the inputs of the
/// hydrogen property correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConstants {
    /// Scale of the squared-current loss term (MW, kV, ohm/km, km).
    pub loss_coeff: f64,
    /// Scale of the squared-pressure pipeline relation (bar, m, km).
    pub weymouth_coeff: f64,
    /// Hydrogen mass flow, in kg/h, represented by one unit of flow in the
    /// squared-pressure relation.
    pub flow_unit_kgph: f64,
    /// Linear compressibility slope `Z = 1 + alpha * p` at the reference temperature.
    pub z_alpha_per_bar: f64,
    pub z_reference_temperature_k: f64,
    pub mean_temperature_k: f64,
    pub density_kg_m3: f64,
    pub roughness_m: f64,
    pub viscosity_pa_s: f64,
}

/// Ratings, efficiencies and costs of every component class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentCatalog {
    pub line: LineSpec,
    pub electrolyzer: ElectrolyzerSpec,
    pub fuel_cell: FuelCellSpec,
    pub compressor: CompressorSpec,
    pub pipeline_lp: PipelineSpec,
    pub pipeline_hp: PipelineSpec,
    pub storage: StorageSpec,
    pub physics: PhysicsConstants,
}

impl ComponentCatalog {
    /// Electricity recovered per unit of electricity spent on electrolysis.
    pub fn round_trip_efficiency(&self) -> f64 {
        self.fuel_cell.energy_yield_mwh_per_kg / self.electrolyzer.energy_intensity_mwh_per_kg
    }
}

/// Hydrogen and pipe-wall properties entering the squared-pressure relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasProperties {
    /// Darcy friction factor.
    pub friction: f64,
    pub compressibility: f64,
    pub mean_temperature_k: f64,
    pub density_kg_m3: f64,
    pub roughness_m: f64,
    pub viscosity_pa_s: f64,
}

impl GasProperties {
    /// `lambda * Z * T' / rho`, the gas group of the squared-pressure relation.
    pub fn flow_group(&self) -> f64 {
        self.friction * self.compressibility * self.mean_temperature_k / self.density_kg_m3
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut v = Issues::default();
        v.check(
            self.friction > 0.005 && self.friction < 0.1,
            "gas.friction",
            "friction factor must lie in (0.005, 0.1)",
        );
        v.check(self.compressibility >= 1.0, "gas.compressibility", "compressibility must be >= 1");
        v.check(self.mean_temperature_k > 0.0, "gas.mean_temperature_k", "must be positive");
        v.check(self.density_kg_m3 > 0.0, "gas.density_kg_m3", "must be positive");
        v.finish()
    }
}

/// One representative day of wind and prices at the onshore substation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayProfile {
    /// Capacity factor per farm and hour.
    pub wind_capacity_factor: Vec<Vec<f64>>,
    pub lmp_usd_per_mwh: Vec<f64>,
    pub dt_hours: f64,
}

impl DayProfile {
    pub fn hours(&self) -> usize {
        self.lmp_usd_per_mwh.len()
    }

    pub fn farm_count(&self) -> usize {
        self.wind_capacity_factor.len()
    }

    pub fn validate(&self, farm_count: usize) -> Result<(), ValidationErrors> {
        let mut v = Issues::default();
        if self.lmp_usd_per_mwh.is_empty() {
            v.push("profile", "day profile is empty");
            return v.finish();
        }
        v.check(
            self.hours() == HOURS_PER_DAY,
            "profile.lmp_usd_per_mwh",
            &format!("expected {HOURS_PER_DAY} hourly rows, found {}", self.hours()),
        );
        v.check(
            self.farm_count() == farm_count,
            "profile.wind_capacity_factor",
            &format!("expected {farm_count} farm columns, found {}", self.farm_count()),
        );
        v.check(self.dt_hours > 0.0, "profile.dt_hours", "must be positive");
        for (k, series) in self.wind_capacity_factor.iter().enumerate() {
            if series.len() != self.hours() {
                v.push(
                    &format!("profile.wind_capacity_factor[{k}]"),
                    "series length differs from the price series",
                );
            }
            for (t, cf) in series.iter().enumerate() {
                if !(0.0..=1.0).contains(cf) {
                    v.push(
                        &format!("profile.wind_capacity_factor[{k}][{t}]"),
                        &format!("capacity factor {cf} outside [0, 1]"),
                    );
                }
            }
        }
        for (t, p) in self.lmp_usd_per_mwh.iter().enumerate() {
            if !(*p >= 0.0) {
                v.push(&format!("profile.lmp_usd_per_mwh[{t}]"), "price must be nonnegative");
            }
        }
        v.finish()
    }
}

/// One invariant violation, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<Issue>);

impl ValidationErrors {
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|i| i.message.contains(needle) || i.path.contains(needle))
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Issues(Vec<Issue>);

impl Issues {
    fn push(&mut self, path: &str, message: &str) {
        self.0.push(Issue { path: path.to_string(), message: message.to_string() });
    }

    fn check(&mut self, ok: bool, path: &str, message: &str) {
        if !ok {
            self.push(path, message);
        }
    }

    fn positive(&mut self, value: f64, path: &str) {
        self.check(value > 0.0 && value.is_finite(), path, "must be positive");
    }

    fn fraction(&mut self, value: f64, path: &str) {
        self.check(value > 0.0 && value <= 1.0, path, "efficiency must lie in (0, 1]");
    }

    fn nonnegative(&mut self, value: f64, path: &str) {
        self.check(value >= 0.0 && value.is_finite(), path, "must be nonnegative");
    }

    fn finish(self) -> Result<(), ValidationErrors> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(self.0))
        }
    }
}

/// Check every scenario and catalog invariant, reporting all violations at once.
pub fn validate_scenario<'a>(
    s: &'a Scenario,
    c: &ComponentCatalog,
) -> Result<&'a Scenario, ValidationErrors> {
    let mut v = Issues::default();
    scenario_issues(s, &mut v);
    catalog_issues(c, &mut v);
    v.finish().map(|()| s)
}

pub fn validate_catalog(c: &ComponentCatalog) -> Result<(), ValidationErrors> {
    let mut v = Issues::default();
    catalog_issues(c, &mut v);
    v.finish()
}

/// Scenario, catalog and day profile together.
pub fn validate_inputs(
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
) -> Result<(), ValidationErrors> {
    let mut v = Issues::default();
    scenario_issues(s, &mut v);
    catalog_issues(c, &mut v);
    if let Err(e) = day.validate(s.farm_count) {
        v.0.extend(e.0);
    }
    v.finish()
}

fn scenario_issues(s: &Scenario, v: &mut Issues) {
    v.check(s.farm_count >= 1, "scenario.farm_count", "at least one farm is required");
    let per_farm = [
        ("scenario.farm_capacity_mw", s.farm_capacity_mw.len()),
        ("scenario.dist_farm_substation_km", s.dist_farm_substation_km.len()),
        ("scenario.dist_farm_hsc_km", s.dist_farm_hsc_km.len()),
    ];
    for (path, len) in per_farm {
        v.check(
            len == s.farm_count,
            path,
            &format!("expected {} entries, found {len}", s.farm_count),
        );
    }
    for (k, cap) in s.farm_capacity_mw.iter().enumerate() {
        v.nonnegative(*cap, &format!("scenario.farm_capacity_mw[{k}]"));
    }
    for (k, d) in s.dist_farm_substation_km.iter().enumerate() {
        v.check(*d > 0.0, &format!("scenario.dist_farm_substation_km[{k}]"), "distance must be positive");
    }
    for (k, d) in s.dist_farm_hsc_km.iter().enumerate() {
        v.check(*d > 0.0, &format!("scenario.dist_farm_hsc_km[{k}]"), "distance must be positive");
    }
    v.check(
        s.dist_hsc_substation_km > 0.0,
        "scenario.dist_hsc_substation_km",
        "distance must be positive",
    );
    v.check(s.horizon_years >= 1, "scenario.horizon_years", "horizon must be at least one year");
    v.check(
        s.distance_scale > 0.0 && s.distance_scale.is_finite(),
        "scenario.distance_scale",
        "distance_scale must be positive",
    );
    v.check(s.storage_min_kg >= 0.0, "scenario.storage_min_kg", "must be nonnegative");
    if s.storage_min_kg > s.storage_capacity_kg {
        v.push("scenario.storage_min_kg", "storage bounds inverted");
    } else if s.storage_initial_kg < s.storage_min_kg || s.storage_initial_kg > s.storage_capacity_kg {
        v.push("scenario.storage_initial_kg", "initial storage level outside bounds");
    }
    v.check(
        s.discount_rate >= 0.0 && s.discount_rate < 1.0,
        "scenario.discount_rate",
        "discount rate must lie in [0, 1)",
    );
}

fn catalog_issues(c: &ComponentCatalog, v: &mut Issues) {
    let l = &c.line;
    v.positive(l.p_lim_mw, "catalog.line.p_lim_mw");
    v.positive(l.voltage_kv, "catalog.line.voltage_kv");
    v.nonnegative(l.resistance_ohm_per_km, "catalog.line.resistance_ohm_per_km");
    v.fraction(l.converter_eff, "catalog.line.converter_eff");
    v.positive(l.capex_per_km, "catalog.line.capex_per_km");
    v.positive(l.capex_converter_pair, "catalog.line.capex_converter_pair");
    v.nonnegative(l.opex_frac_per_year, "catalog.line.opex_frac_per_year");

    let e = &c.electrolyzer;
    v.positive(e.rated_mw, "catalog.electrolyzer.rated_mw");
    v.positive(e.energy_intensity_mwh_per_kg, "catalog.electrolyzer.energy_intensity_mwh_per_kg");
    v.positive(e.capex_per_unit, "catalog.electrolyzer.capex_per_unit");
    v.nonnegative(e.opex_frac, "catalog.electrolyzer.opex_frac");

    let f = &c.fuel_cell;
    v.positive(f.rated_mw, "catalog.fuel_cell.rated_mw");
    v.positive(f.energy_yield_mwh_per_kg, "catalog.fuel_cell.energy_yield_mwh_per_kg");
    v.positive(f.capex_per_unit, "catalog.fuel_cell.capex_per_unit");
    v.nonnegative(f.opex_frac, "catalog.fuel_cell.opex_frac");
    if f.energy_yield_mwh_per_kg >= e.energy_intensity_mwh_per_kg {
        v.push(
            "catalog.fuel_cell.energy_yield_mwh_per_kg",
            "fuel-cell yield must be below electrolyzer intensity (round trip < 1)",
        );
    }

    let k = &c.compressor;
    v.positive(k.energy_per_kg_mwh, "catalog.compressor.energy_per_kg_mwh");
    v.positive(k.capex_per_kgph_capacity, "catalog.compressor.capex_per_kgph_capacity");
    v.nonnegative(k.opex_frac, "catalog.compressor.opex_frac");

    for (name, p) in [("pipeline_lp", &c.pipeline_lp), ("pipeline_hp", &c.pipeline_hp)] {
        v.positive(p.h_lim_kgph, &format!("catalog.{name}.h_lim_kgph"));
        v.positive(p.diameter_m, &format!("catalog.{name}.diameter_m"));
        v.positive(p.outlet_pressure_bar, &format!("catalog.{name}.outlet_pressure_bar"));
        v.positive(p.capex_per_km, &format!("catalog.{name}.capex_per_km"));
        v.nonnegative(p.opex_frac, &format!("catalog.{name}.opex_frac"));
        v.check(
            p.max_inlet_pressure_bar > p.outlet_pressure_bar,
            &format!("catalog.{name}.max_inlet_pressure_bar"),
            "max inlet pressure must exceed outlet pressure",
        );
    }

    v.positive(c.storage.capex_per_kg, "catalog.storage.capex_per_kg");
    v.nonnegative(c.storage.opex_frac, "catalog.storage.opex_frac");

    let p = &c.physics;
    v.positive(p.loss_coeff, "catalog.physics.loss_coeff");
    v.positive(p.weymouth_coeff, "catalog.physics.weymouth_coeff");
    v.positive(p.flow_unit_kgph, "catalog.physics.flow_unit_kgph");
    v.nonnegative(p.z_alpha_per_bar, "catalog.physics.z_alpha_per_bar");
    v.positive(p.z_reference_temperature_k, "catalog.physics.z_reference_temperature_k");
    v.positive(p.mean_temperature_k, "catalog.physics.mean_temperature_k");
    v.positive(p.density_kg_m3, "catalog.physics.density_kg_m3");
    v.nonnegative(p.roughness_m, "catalog.physics.roughness_m");
    v.positive(p.viscosity_pa_s, "catalog.physics.viscosity_pa_s");
}

/// Location in the delivery network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Farm(usize),
    Hsc,
    Substation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Line,
    LpPipe,
    HpPipe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub from: NodeKind,
    pub to: NodeKind,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Line,
    Pipeline,
    Electrolyzer,
    Compressor,
    FuelCell,
    Storage,
}

impl ComponentKind {
    /// Constraint families that govern this component.
    pub fn governed_by(self) -> &'static [Constraint] {
        use Constraint::*;
        match self {
            ComponentKind::Line => &[LineLimit, LineLoss],
            ComponentKind::Pipeline => &[PipeLimit, PipeFlow],
            ComponentKind::Electrolyzer => &[Electrolysis, ElectrolyzerCount],
            ComponentKind::Compressor => &[Compression],
            ComponentKind::FuelCell => &[FuelCellYield, FuelCellCount],
            ComponentKind::Storage => &[StorageBalance, StorageBounds],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub kind: ComponentKind,
    pub at: NodeKind,
}

/// Flow graph of one case: transmission legs and where converters sit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub case: CaseId,
    pub farm_count: usize,
    pub edges: Vec<Edge>,
    pub placements: Vec<Placement>,
}

impl Topology {
    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges_of(kind).count()
    }

    /// Distance of the edge leaving `farm` (line or LP pipe), if any.
    pub fn farm_leg_km(&self, farm: usize) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| e.from == NodeKind::Farm(farm) && e.kind != EdgeKind::HpPipe)
            .map(|e| e.distance_km)
    }

    pub fn hp_leg_km(&self) -> Option<f64> {
        self.edges_of(EdgeKind::HpPipe).next().map(|e| e.distance_km)
    }

    pub fn component_kinds(&self) -> Vec<ComponentKind> {
        let mut kinds: Vec<ComponentKind> = Vec::new();
        for p in &self.placements {
            if !kinds.contains(&p.kind) {
                kinds.push(p.kind);
            }
        }
        kinds
    }
}

/// Build the flow graph of `case` for a scenario with already-scaled distances.
pub fn build_topology(case: CaseId, s: &Scenario) -> Topology {
    let farms = 0..s.farm_count;
    let mut edges = Vec::new();
    let mut placements = Vec::new();
    let place = |kind, at| Placement { kind, at };

    match case {
        CaseId::Hvdc => {
            for k in farms {
                edges.push(Edge {
                    kind: EdgeKind::Line,
                    from: NodeKind::Farm(k),
                    to: NodeKind::Substation,
                    distance_km: s.farm_substation_km(k),
                });
                placements.push(place(ComponentKind::Line, NodeKind::Farm(k)));
            }
        }
        CaseId::Hybrid => {
            for k in farms {
                edges.push(Edge {
                    kind: EdgeKind::Line,
                    from: NodeKind::Farm(k),
                    to: NodeKind::Hsc,
                    distance_km: s.farm_hsc_km(k),
                });
                placements.push(place(ComponentKind::Line, NodeKind::Farm(k)));
            }
            placements.push(place(ComponentKind::Electrolyzer, NodeKind::Hsc));
            placements.push(place(ComponentKind::Compressor, NodeKind::Hsc));
        }
        CaseId::Hp => {
            for k in farms {
                edges.push(Edge {
                    kind: EdgeKind::LpPipe,
                    from: NodeKind::Farm(k),
                    to: NodeKind::Hsc,
                    distance_km: s.farm_hsc_km(k),
                });
                placements.push(place(ComponentKind::Electrolyzer, NodeKind::Farm(k)));
                placements.push(place(ComponentKind::Compressor, NodeKind::Farm(k)));
                placements.push(place(ComponentKind::Pipeline, NodeKind::Farm(k)));
            }
            placements.push(place(ComponentKind::Compressor, NodeKind::Hsc));
        }
    }

    if case.uses_hydrogen() {
        edges.push(Edge {
            kind: EdgeKind::HpPipe,
            from: NodeKind::Hsc,
            to: NodeKind::Substation,
            distance_km: s.hsc_substation_km(),
        });
        placements.push(place(ComponentKind::Pipeline, NodeKind::Hsc));
        placements.push(place(ComponentKind::Storage, NodeKind::Substation));
        placements.push(place(ComponentKind::FuelCell, NodeKind::Substation));
    }

    Topology { case, farm_count: s.farm_count, edges, placements }
}
