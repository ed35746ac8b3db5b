//! Hourly dispatch of one representative day for a fixed build.
//!
//! The day is posed as a linear program. The two quadratic relations of the
//! chain, line loss and pipeline pressure drop, enter as convex
//! piecewise-linear over-estimators ("chords") of the input-for-output
//! curve: a line must be fed at least the chord value of its landed power,
//! and a pipe inlet must hold at least the chord value of the squared
//! pressure its flow needs. Spending more than the chord is never profitable,
//! so the relaxation binds at the optimum; [`verify_tightness`] checks it.
//!
//! Inside the LP hydrogen is carried in tonnes and tonnes per hour to keep
//! coefficients well scaled. Results are reported in kg and kg/h.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, Sense, VarId};
use crate::model::{
    build_topology, CaseId, ComponentCatalog, DayProfile, NodeKind, Scenario, Topology,
};
use crate::physics::{catalog_gas, LineLeg, PhysicsError, PipeLeg};
use crate::sizing::SizingDecision;

pub const DEFAULT_SEGMENTS: usize = 10;

const KG_PER_TONNE: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error("invalid dispatch problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("dispatch infeasible; constraints violated even at rest: {}", violated.join(", "))]
    Infeasible { violated: Vec<String> },
    #[error("internal dispatch failure: {0}")]
    Internal(String),
}

/// `c0 + c1 x + c2 x^2` with `c2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + self.c2 * x)
    }
}

/// Piecewise-linear interpolant of a convex quadratic through `points`
/// equidistant samples on `[0, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chords {
    pub curve: Quadratic,
    pub upper: f64,
    pub points: usize,
}

impl Chords {
    pub fn new(curve: Quadratic, upper: f64, points: usize) -> Self {
        debug_assert!(points >= 2);
        Chords { curve, upper, points }
    }

    pub fn step(&self) -> f64 {
        self.upper / (self.points - 1) as f64
    }

    pub fn breakpoint(&self, j: usize) -> f64 {
        if j == self.points - 1 {
            self.upper
        } else {
            j as f64 * self.step()
        }
    }

    /// `(slope, intercept)` of every segment.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.points - 1).map(move |j| {
            let (x0, x1) = (self.breakpoint(j), self.breakpoint(j + 1));
            let (y0, y1) = (self.curve.eval(x0), self.curve.eval(x1));
            let slope = (y1 - y0) / (x1 - x0);
            (slope, y0 - slope * x0)
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.upper <= 0.0 {
            return self.curve.eval(x);
        }
        let j = ((x / self.step()).floor().max(0.0) as usize).min(self.points - 2);
        let (x0, x1) = (self.breakpoint(j), self.breakpoint(j + 1));
        let (y0, y1) = (self.curve.eval(x0), self.curve.eval(x1));
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Largest vertical gap between chord and curve: `c2 * h^2 / 4`.
    pub fn gap_bound(&self) -> f64 {
        let h = self.step();
        self.curve.c2 * h * h / 4.0
    }
}

/// Chord model of a line bundle: sending-end MW as a function of landed MW.
pub fn line_chords(leg: &LineLeg, points: usize) -> Chords {
    let eta = leg.converter_eff;
    Chords::new(
        Quadratic { c0: 0.0, c1: 1.0 / eta, c2: leg.loss_factor() / eta },
        leg.capacity_mw(),
        points,
    )
}

/// Chord model of a pipeline bundle: squared inlet pressure (bar^2) as a
/// function of total flow in kg/h.
pub fn pipe_chords(leg: &PipeLeg, points: usize) -> Chords {
    let per_unit = f64::from(leg.count) * leg.flow_unit_kgph;
    Chords::new(
        Quadratic {
            c0: leg.outlet_pressure_bar.powi(2),
            c1: 0.0,
            c2: leg.resistance() / (per_unit * per_unit),
        },
        leg.capacity_kgph(),
        points,
    )
}

/// Identifies a pipeline bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PipeLegId {
    /// Low-pressure leg from a farm to the hub.
    Lp(usize),
    /// High-pressure leg from the hub ashore.
    Hp,
}

impl std::fmt::Display for PipeLegId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipeLegId::Lp(k) => write!(f, "lp{}", k + 1),
            PipeLegId::Hp => f.write_str("hp"),
        }
    }
}

/// Line and pipe bundles instantiated for a build.
#[derive(Debug, Clone)]
pub struct Legs {
    pub lines: Vec<Option<LineLeg>>,
    pub lp_pipes: Vec<Option<PipeLeg>>,
    pub hp_pipe: Option<PipeLeg>,
}

impl Legs {
    pub fn build(
        topology: &Topology,
        catalog: &ComponentCatalog,
        decision: &SizingDecision,
    ) -> Result<Self, PhysicsError> {
        let farms = topology.farm_count;
        let case = topology.case;
        let mut lines = vec![None; farms];
        let mut lp_pipes = vec![None; farms];
        let mut hp_pipe = None;
        let needs_gas = case.uses_hydrogen();
        let gas = if needs_gas { Some(catalog_gas(catalog)?) } else { None };
        for k in 0..farms {
            let Some(d) = topology.farm_leg_km(k) else { continue };
            if case.uses_lines() && decision.lines_per_farm[k] > 0 {
                lines[k] = Some(LineLeg::from_spec(
                    &catalog.line,
                    &catalog.physics,
                    d,
                    decision.lines_per_farm[k],
                ));
            }
            if case == CaseId::Hp && decision.lp_pipes_per_farm[k] > 0 {
                let (lp_gas, _) = gas.expect("gas computed for hydrogen cases");
                lp_pipes[k] = Some(PipeLeg::from_spec(
                    &catalog.pipeline_lp,
                    &catalog.physics,
                    lp_gas,
                    d,
                    decision.lp_pipes_per_farm[k],
                ));
            }
        }
        if let (Some(d), Some((_, hp_gas))) = (topology.hp_leg_km(), gas) {
            if decision.hp_pipes > 0 {
                hp_pipe = Some(PipeLeg::from_spec(
                    &catalog.pipeline_hp,
                    &catalog.physics,
                    hp_gas,
                    d,
                    decision.hp_pipes,
                ));
            }
        }
        Ok(Legs { lines, lp_pipes, hp_pipe })
    }
}

/// One day of dispatch for a fixed case, build and profile.
#[derive(Debug, Clone)]
pub struct DispatchProblem<'a> {
    pub case: CaseId,
    pub scenario: &'a Scenario,
    pub catalog: &'a ComponentCatalog,
    pub day: &'a DayProfile,
    pub topology: Topology,
    pub decision: SizingDecision,
    /// Sample points of every chord model (two points give a single chord).
    pub segments: usize,
}

impl<'a> DispatchProblem<'a> {
    pub fn new(
        scenario: &'a Scenario,
        catalog: &'a ComponentCatalog,
        day: &'a DayProfile,
        decision: SizingDecision,
    ) -> Result<Self, DispatchError> {
        decision
            .validate(scenario.farm_count)
            .map_err(DispatchError::Invalid)?;
        if day.farm_count() != scenario.farm_count {
            return Err(DispatchError::Invalid(format!(
                "profile has {} farms, scenario has {}",
                day.farm_count(),
                scenario.farm_count
            )));
        }
        let case = decision.case;
        Ok(DispatchProblem {
            case,
            scenario,
            catalog,
            day,
            topology: build_topology(case, scenario),
            decision,
            segments: DEFAULT_SEGMENTS,
        })
    }

    pub fn with_segments(mut self, segments: usize) -> Result<Self, DispatchError> {
        if segments < 2 {
            return Err(DispatchError::Invalid("segment count must be at least 2".into()));
        }
        self.segments = segments;
        Ok(self)
    }

    pub fn legs(&self) -> Result<Legs, DispatchError> {
        Ok(Legs::build(&self.topology, self.catalog, &self.decision)?)
    }
}

/// How electrolyzer and fuel-cell capacity enters the LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityMode {
    /// Capacity is fixed by the unit counts of the decision.
    Fixed,
    /// Capacity is a continuous variable priced per MW and per day.
    Priced { electrolyzer_usd_per_mw_day: f64, fuel_cell_usd_per_mw_day: f64 },
}

#[derive(Debug, Clone, Default)]
struct Layout {
    line_in: Vec<Vec<Option<VarId>>>,
    line_out: Vec<Vec<Option<VarId>>>,
    h2: Vec<Vec<Option<VarId>>>,
    lp_sq: Vec<Vec<Option<VarId>>>,
    hp_flow: Vec<Option<VarId>>,
    hp_sq: Vec<Option<VarId>>,
    fuel_cell: Vec<Option<VarId>>,
    level: Vec<Option<VarId>>,
    cap_electrolyzer: Vec<Option<VarId>>,
    cap_fuel_cell: Option<VarId>,
}

struct Assembled {
    lp: LinearProgram,
    layout: Layout,
    legs: Legs,
}

fn assemble(p: &DispatchProblem, mode: CapacityMode) -> Result<Assembled, DispatchError> {
    let legs = p.legs()?;
    let case = p.case;
    let cat = p.catalog;
    let day = p.day;
    let hours = day.hours();
    let dt = day.dt_hours;
    let farms = p.scenario.farm_count;
    let cp_e = cat.electrolyzer.energy_intensity_mwh_per_kg * KG_PER_TONNE;
    let cp_fc = cat.fuel_cell.energy_yield_mwh_per_kg * KG_PER_TONNE;
    let cp_c = cat.compressor.energy_per_kg_mwh * KG_PER_TONNE;
    let sites = case.electrolyzer_sites(farms);
    let priced = matches!(mode, CapacityMode::Priced { .. });

    let mut lp = LinearProgram::new(format!("seagrid dispatch {case}"));
    let mut lay = Layout {
        line_in: vec![vec![None; hours]; farms],
        line_out: vec![vec![None; hours]; farms],
        h2: vec![vec![None; hours]; sites],
        lp_sq: vec![vec![None; hours]; farms],
        hp_flow: vec![None; hours],
        hp_sq: vec![None; hours],
        fuel_cell: vec![None; hours],
        level: vec![None; hours],
        cap_electrolyzer: vec![None; sites],
        cap_fuel_cell: None,
    };
    let wind = |k: usize, t: usize| day.wind_capacity_factor[k][t] * p.scenario.farm_capacity_mw[k];

    // transmission lines
    for (k, leg) in legs.lines.iter().enumerate() {
        let Some(leg) = leg else { continue };
        let chords = line_chords(leg, p.segments);
        for t in 0..hours {
            let w = wind(k, t);
            if w <= 0.0 {
                continue;
            }
            let sell = if case == CaseId::Hvdc { day.lmp_usd_per_mwh[t] * dt } else { 0.0 };
            let x_in = lp.add_var(format!("line_in_f{k}_t{t}"), 0.0, w, 0.0);
            let x_out = lp.add_var(format!("line_out_f{k}_t{t}"), 0.0, leg.capacity_mw(), sell);
            for (j, (slope, icpt)) in chords.pieces().enumerate() {
                lp.add_row(
                    format!("line_loss_f{k}_t{t}_s{j}"),
                    vec![(x_in, 1.0), (x_out, -slope)],
                    Sense::Ge,
                    icpt,
                );
            }
            lay.line_in[k][t] = Some(x_in);
            lay.line_out[k][t] = Some(x_out);
        }
    }

    if !case.uses_hydrogen() {
        return Ok(Assembled { lp, layout: lay, legs });
    }
    let Some(hp_leg) = legs.hp_pipe else {
        // no route ashore for hydrogen
        return Ok(Assembled { lp, layout: lay, legs });
    };
    let hp_cap_t = hp_leg.capacity_kgph() / KG_PER_TONNE;
    let hp_curve = pipe_chords(&hp_leg, p.segments);

    // electrolyzer capacity variables
    if let CapacityMode::Priced { electrolyzer_usd_per_mw_day, .. } = mode {
        for s in 0..sites {
            let ub = match case {
                CaseId::Hybrid => legs.lines.iter().flatten().map(LineLeg::capacity_mw).sum(),
                _ => p.scenario.farm_capacity_mw[s],
            };
            if ub > 0.0 {
                lay.cap_electrolyzer[s] = Some(lp.add_var(
                    format!("cap_electrolyzer_s{s}"),
                    0.0,
                    ub,
                    -electrolyzer_usd_per_mw_day,
                ));
            }
        }
    }
    let fixed_electrolysis_t = |s: usize| {
        f64::from(p.decision.electrolyzers_per_site[s]) * cat.electrolyzer.rated_mw / cp_e
    };

    match case {
        CaseId::Hybrid => {
            for t in 0..hours {
                let feeders: Vec<VarId> = (0..farms).filter_map(|k| lay.line_out[k][t]).collect();
                if feeders.is_empty() {
                    continue;
                }
                let mut ub = hp_cap_t;
                if !priced {
                    ub = ub.min(fixed_electrolysis_t(0));
                } else if lay.cap_electrolyzer[0].is_none() {
                    ub = 0.0;
                }
                if ub <= 0.0 {
                    continue;
                }
                let h = lp.add_var(format!("h2_hsc_t{t}"), 0.0, ub, 0.0);
                let mut bus: Vec<(VarId, f64)> = feeders.iter().map(|&v| (v, 1.0)).collect();
                bus.push((h, -(cp_e + cp_c)));
                lp.add_row(format!("hsc_bus_t{t}"), bus, Sense::Ge, 0.0);
                if let Some(cap) = lay.cap_electrolyzer[0] {
                    lp.add_row(format!("elec_cap_s0_t{t}"), vec![(h, cp_e), (cap, -1.0)], Sense::Le, 0.0);
                }
                lay.h2[0][t] = Some(h);
                lay.hp_flow[t] = Some(h);
            }
        }
        CaseId::Hp => {
            for (k, lp_leg) in legs.lp_pipes.iter().enumerate() {
                let Some(lp_leg) = lp_leg else { continue };
                let chords = pipe_chords(lp_leg, p.segments);
                let p_max_sq = lp_leg.max_inlet_pressure_bar.powi(2);
                for t in 0..hours {
                    let w = wind(k, t);
                    let mut ub = (w / (cp_e + 2.0 * cp_c)).min(lp_leg.capacity_kgph() / KG_PER_TONNE);
                    if !priced {
                        ub = ub.min(fixed_electrolysis_t(k));
                    } else if lay.cap_electrolyzer[k].is_none() {
                        ub = 0.0;
                    }
                    if ub <= 0.0 {
                        continue;
                    }
                    let h = lp.add_var(format!("h2_f{k}_t{t}"), 0.0, ub, 0.0);
                    if let Some(cap) = lay.cap_electrolyzer[k] {
                        lp.add_row(
                            format!("elec_cap_s{k}_t{t}"),
                            vec![(h, cp_e), (cap, -1.0)],
                            Sense::Le,
                            0.0,
                        );
                    }
                    let sq = lp.add_var(
                        format!("lp_psq_f{k}_t{t}"),
                        lp_leg.outlet_pressure_bar.powi(2),
                        p_max_sq,
                        0.0,
                    );
                    for (j, (slope, icpt)) in chords.pieces().enumerate() {
                        lp.add_row(
                            format!("lp_flow_f{k}_t{t}_s{j}"),
                            vec![(sq, 1.0), (h, -slope * KG_PER_TONNE)],
                            Sense::Ge,
                            icpt,
                        );
                    }
                    lay.h2[k][t] = Some(h);
                    lay.lp_sq[k][t] = Some(sq);
                }
            }
            for t in 0..hours {
                let feeders: Vec<VarId> = (0..farms).filter_map(|k| lay.h2[k][t]).collect();
                if feeders.is_empty() {
                    continue;
                }
                let g = lp.add_var(format!("hp_flow_t{t}"), 0.0, hp_cap_t, 0.0);
                let mut row: Vec<(VarId, f64)> = feeders.iter().map(|&v| (v, 1.0)).collect();
                row.push((g, -1.0));
                lp.add_row(format!("hsc_merge_t{t}"), row, Sense::Eq, 0.0);
                lay.hp_flow[t] = Some(g);
            }
        }
        CaseId::Hvdc => unreachable!(),
    }

    // high-pressure pipeline squared inlet pressure
    let hp_max_sq = hp_leg.max_inlet_pressure_bar.powi(2);
    for t in 0..hours {
        let Some(flow) = lay.hp_flow[t] else { continue };
        let sq = lp.add_var(
            format!("hp_psq_t{t}"),
            hp_leg.outlet_pressure_bar.powi(2),
            hp_max_sq,
            0.0,
        );
        for (j, (slope, icpt)) in hp_curve.pieces().enumerate() {
            lp.add_row(
                format!("hp_flow_t{t}_s{j}"),
                vec![(sq, 1.0), (flow, -slope * KG_PER_TONNE)],
                Sense::Ge,
                icpt,
            );
        }
        lay.hp_sq[t] = Some(sq);
    }

    // storage and fuel cells at the substation
    let s = p.scenario;
    let (lo, hi, init) = (
        s.storage_min_kg / KG_PER_TONNE,
        s.storage_capacity_kg / KG_PER_TONNE,
        s.storage_initial_kg / KG_PER_TONNE,
    );
    let fc_fixed_t = f64::from(p.decision.fuel_cells) * cat.fuel_cell.rated_mw / cp_fc;
    let fc_ub_t = match mode {
        CapacityMode::Fixed => fc_fixed_t,
        CapacityMode::Priced { fuel_cell_usd_per_mw_day, .. } => {
            let ub_t = hp_cap_t + (hi - lo) / dt;
            if ub_t > 0.0 {
                lay.cap_fuel_cell = Some(lp.add_var(
                    "cap_fuel_cell",
                    0.0,
                    ub_t * cp_fc,
                    -fuel_cell_usd_per_mw_day,
                ));
            }
            ub_t
        }
    };
    let mut prev: Option<VarId> = None;
    for t in 0..hours {
        let level = lp.add_var(format!("storage_t{t}"), lo, hi, 0.0);
        let mut row = vec![(level, 1.0)];
        if let Some(pv) = prev {
            row.push((pv, -1.0));
        }
        if let Some(flow) = lay.hp_flow[t] {
            row.push((flow, -dt));
        }
        if fc_ub_t > 0.0 {
            let fc = lp.add_var(
                format!("fc_h2_t{t}"),
                0.0,
                fc_ub_t,
                day.lmp_usd_per_mwh[t] * dt * cp_fc,
            );
            row.push((fc, dt));
            if let Some(cap) = lay.cap_fuel_cell {
                lp.add_row(format!("fc_cap_t{t}"), vec![(fc, cp_fc), (cap, -1.0)], Sense::Le, 0.0);
            }
            lay.fuel_cell[t] = Some(fc);
        }
        lp.add_row(
            format!("storage_balance_t{t}"),
            row,
            Sense::Eq,
            if prev.is_none() { init } else { 0.0 },
        );
        lay.level[t] = Some(level);
        prev = Some(level);
    }
    if let Some(last) = prev {
        // end the day no emptier than it started
        lp.add_row("storage_cyclic", vec![(last, 1.0)], Sense::Ge, init);
    }

    Ok(Assembled { lp, layout: lay, legs })
}

/// The dispatch LP for a fixed build.
pub fn build_dispatch(problem: &DispatchProblem) -> Result<LinearProgram, DispatchError> {
    Ok(assemble(problem, CapacityMode::Fixed)?.lp)
}

/// Per-line hourly flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFlows {
    pub farm: usize,
    pub count: u32,
    pub p_in_mw: Vec<f64>,
    pub p_out_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeFlows {
    pub leg: PipeLegId,
    pub count: u32,
    pub flow_kgph: Vec<f64>,
    pub inlet_pressure_bar: Vec<f64>,
}

/// Electrolysis and compression at one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteFlows {
    pub site: NodeKind,
    pub electrolyzer_mw: Vec<f64>,
    pub h2_kgph: Vec<f64>,
    pub compressor_mw: Vec<f64>,
    pub compressor_kgph: Vec<f64>,
}

/// Optimal hourly operation of one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub case: CaseId,
    pub dt_hours: f64,
    pub delivered_mw: Vec<f64>,
    /// Storage level at the end of every hour.
    pub storage_kg: Vec<f64>,
    pub storage_initial_kg: f64,
    pub lines: Vec<LineFlows>,
    pub pipes: Vec<PipeFlows>,
    pub sites: Vec<SiteFlows>,
    /// Hub booster compressor (HP case only).
    pub booster_mw: Vec<f64>,
    pub storage_in_kgph: Vec<f64>,
    pub storage_out_kgph: Vec<f64>,
    pub fuel_cell_h2_kgph: Vec<f64>,
    pub fuel_cell_mw: Vec<f64>,
    pub available_mw: Vec<f64>,
    pub curtailed_mw: Vec<f64>,
    pub curtailed_mwh: f64,
    pub day_revenue_usd: f64,
    /// Largest chord-minus-curve gap over all line legs and hours (MW).
    pub max_line_residual_mw: f64,
    /// Largest chord-minus-curve gap over all pipe legs and hours (bar^2).
    pub max_pressure_residual_bar2: f64,
}

impl DispatchResult {
    pub fn hours(&self) -> usize {
        self.delivered_mw.len()
    }

    pub fn delivered_mwh(&self) -> f64 {
        self.delivered_mw.iter().sum::<f64>() * self.dt_hours
    }

    pub fn electrolysis_mwh(&self) -> f64 {
        self.sites.iter().flat_map(|s| &s.electrolyzer_mw).sum::<f64>() * self.dt_hours
    }

    pub fn fuel_cell_mwh(&self) -> f64 {
        self.fuel_cell_mw.iter().sum::<f64>() * self.dt_hours
    }
}

/// Capacities chosen by the LP in priced mode.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PricedCapacities {
    pub electrolyzer_mw: Vec<f64>,
    pub fuel_cell_mw: f64,
    /// LP objective: day revenue minus daily capacity charges.
    pub objective: f64,
}

fn solve_assembled(p: &DispatchProblem, a: &Assembled) -> Result<crate::lp::LpSolution, DispatchError> {
    match a.lp.solve() {
        Ok(sol) => Ok(sol),
        Err(LpError::Infeasible) => {
            // every flow at zero with storage parked at its initial level
            let init_t = p.scenario.storage_initial_kg / KG_PER_TONNE;
            let mut rest = vec![0.0; a.lp.vars.len()];
            for v in a.layout.level.iter().flatten() {
                rest[v.index()] = init_t;
            }
            for v in a.layout.lp_sq.iter().flatten().flatten().chain(a.layout.hp_sq.iter().flatten()) {
                rest[v.index()] = a.lp.var(*v).lower;
            }
            Err(DispatchError::Infeasible { violated: a.lp.violations(&rest, 1e-9) })
        }
        Err(LpError::Unbounded) => Err(DispatchError::Internal(
            "LP reported unbounded although every variable is bounded".into(),
        )),
        Err(LpError::Solver(msg)) => Err(DispatchError::Internal(msg)),
    }
}

pub(crate) fn solve_priced(
    p: &DispatchProblem,
    electrolyzer_usd_per_mw_day: f64,
    fuel_cell_usd_per_mw_day: f64,
) -> Result<PricedCapacities, DispatchError> {
    let a = assemble(
        p,
        CapacityMode::Priced { electrolyzer_usd_per_mw_day, fuel_cell_usd_per_mw_day },
    )?;
    let sol = solve_assembled(p, &a)?;
    let cap = |v: Option<VarId>| v.map_or(0.0, |v| sol.value(v).max(0.0));
    Ok(PricedCapacities {
        electrolyzer_mw: a.layout.cap_electrolyzer.iter().map(|&v| cap(v)).collect(),
        fuel_cell_mw: cap(a.layout.cap_fuel_cell),
        objective: sol.objective,
    })
}

/// Solve the day for a fixed build and map the LP optimum to physical flows.
pub fn solve_dispatch(problem: &DispatchProblem) -> Result<DispatchResult, DispatchError> {
    let a = assemble(problem, CapacityMode::Fixed)?;
    let sol = solve_assembled(problem, &a)?;
    Ok(map_solution(problem, &a, &sol))
}

fn map_solution(p: &DispatchProblem, a: &Assembled, sol: &crate::lp::LpSolution) -> DispatchResult {
    let cat = p.catalog;
    let day = p.day;
    let hours = day.hours();
    let dt = day.dt_hours;
    let farms = p.scenario.farm_count;
    let cp_e = cat.electrolyzer.energy_intensity_mwh_per_kg;
    let cp_fc = cat.fuel_cell.energy_yield_mwh_per_kg;
    let cp_c = cat.compressor.energy_per_kg_mwh;
    let lay = &a.layout;
    let val = |v: Option<VarId>| v.map_or(0.0, |v| sol.value(v).max(0.0));

    let available: Vec<Vec<f64>> = (0..farms)
        .map(|k| {
            (0..hours)
                .map(|t| day.wind_capacity_factor[k][t] * p.scenario.farm_capacity_mw[k])
                .collect()
        })
        .collect();
    let mut curtailed = vec![0.0; hours];
    let mut max_line_residual: f64 = 0.0;
    let mut max_pressure_residual: f64 = 0.0;

    let mut lines = Vec::new();
    for (k, leg) in a.legs.lines.iter().enumerate() {
        let Some(leg) = leg else { continue };
        let chords = line_chords(leg, p.segments);
        let p_out: Vec<f64> = (0..hours).map(|t| val(lay.line_out[k][t]).min(leg.capacity_mw())).collect();
        // feed exactly the chord value; anything above it was spilled at the farm
        let p_in: Vec<f64> = p_out
            .iter()
            .enumerate()
            .map(|(t, &po)| if po > 0.0 { chords.eval(po).min(available[k][t]) } else { 0.0 })
            .collect();
        for &po in &p_out {
            if po > 0.0 {
                max_line_residual = max_line_residual.max(chords.eval(po) - leg.input_for_output(po));
            }
        }
        lines.push(LineFlows { farm: k, count: leg.count, p_in_mw: p_in, p_out_mw: p_out });
    }

    let mut sites = Vec::new();
    let mut pipes = Vec::new();
    let mut booster_mw = vec![0.0; hours];
    let hp_flow_kg: Vec<f64> = (0..hours).map(|t| val(lay.hp_flow[t]) * KG_PER_TONNE).collect();

    match p.case {
        CaseId::Hvdc => {
            for line in &lines {
                for t in 0..hours {
                    curtailed[t] += available[line.farm][t] - line.p_in_mw[t];
                }
            }
            for k in (0..farms).filter(|k| a.legs.lines[*k].is_none()) {
                for t in 0..hours {
                    curtailed[t] += available[k][t];
                }
            }
        }
        CaseId::Hybrid => {
            let h2: Vec<f64> = hp_flow_kg.clone();
            let electrolyzer_mw: Vec<f64> = h2.iter().map(|h| cp_e * h).collect();
            let compressor_mw: Vec<f64> = h2.iter().map(|h| cp_c * h).collect();
            for (k, avail) in available.iter().enumerate() {
                let line = lines.iter().find(|l| l.farm == k);
                for t in 0..hours {
                    curtailed[t] += avail[t] - line.map_or(0.0, |l| l.p_in_mw[t]);
                }
            }
            for t in 0..hours {
                let landed: f64 = lines.iter().map(|l| l.p_out_mw[t]).sum();
                curtailed[t] += landed - electrolyzer_mw[t] - compressor_mw[t];
            }
            sites.push(SiteFlows {
                site: NodeKind::Hsc,
                electrolyzer_mw,
                h2_kgph: h2.clone(),
                compressor_mw,
                compressor_kgph: h2,
            });
        }
        CaseId::Hp => {
            for (k, avail) in available.iter().enumerate() {
                let h2: Vec<f64> = (0..hours).map(|t| val(lay.h2[k][t]) * KG_PER_TONNE).collect();
                let electrolyzer_mw: Vec<f64> = h2.iter().map(|h| cp_e * h).collect();
                let compressor_mw: Vec<f64> = h2.iter().map(|h| cp_c * h).collect();
                for t in 0..hours {
                    // farm bus also feeds this farm's share of the hub booster
                    let used = electrolyzer_mw[t] + 2.0 * compressor_mw[t];
                    curtailed[t] += avail[t] - used;
                    booster_mw[t] += compressor_mw[t];
                }
                if let Some(leg) = &a.legs.lp_pipes[k] {
                    let chords = pipe_chords(leg, p.segments);
                    let pressure = h2
                        .iter()
                        .map(|&h| {
                            let sq = chords.eval(h);
                            max_pressure_residual =
                                max_pressure_residual.max(sq - leg.inlet_pressure_squared(h));
                            sq.sqrt()
                        })
                        .collect();
                    pipes.push(PipeFlows {
                        leg: PipeLegId::Lp(k),
                        count: leg.count,
                        flow_kgph: h2.clone(),
                        inlet_pressure_bar: pressure,
                    });
                }
                sites.push(SiteFlows {
                    site: NodeKind::Farm(k),
                    electrolyzer_mw,
                    h2_kgph: h2.clone(),
                    compressor_mw,
                    compressor_kgph: h2,
                });
            }
        }
    }

    if let Some(leg) = &a.legs.hp_pipe {
        let chords = pipe_chords(leg, p.segments);
        let pressure = hp_flow_kg
            .iter()
            .map(|&h| {
                let sq = chords.eval(h);
                max_pressure_residual = max_pressure_residual.max(sq - leg.inlet_pressure_squared(h));
                sq.sqrt()
            })
            .collect();
        pipes.push(PipeFlows {
            leg: PipeLegId::Hp,
            count: leg.count,
            flow_kgph: hp_flow_kg.clone(),
            inlet_pressure_bar: pressure,
        });
    }

    let fuel_cell_h2: Vec<f64> = (0..hours).map(|t| val(lay.fuel_cell[t]) * KG_PER_TONNE).collect();
    let fuel_cell_mw: Vec<f64> = fuel_cell_h2.iter().map(|h| cp_fc * h).collect();
    let storage_kg: Vec<f64> = (0..hours)
        .map(|t| lay.level[t].map_or(p.scenario.storage_initial_kg, |v| sol.value(v) * KG_PER_TONNE))
        .collect();

    let delivered_mw: Vec<f64> = match p.case {
        CaseId::Hvdc => (0..hours).map(|t| lines.iter().map(|l| l.p_out_mw[t]).sum()).collect(),
        _ => fuel_cell_mw.clone(),
    };
    let day_revenue_usd = delivered_mw
        .iter()
        .zip(&day.lmp_usd_per_mwh)
        .map(|(p, price)| p * price * dt)
        .sum();
    let available_mw = (0..hours).map(|t| available.iter().map(|a| a[t]).sum()).collect();
    let curtailed_mwh = curtailed.iter().sum::<f64>() * dt;

    DispatchResult {
        case: p.case,
        dt_hours: dt,
        delivered_mw,
        storage_kg,
        storage_initial_kg: p.scenario.storage_initial_kg,
        lines,
        pipes,
        sites,
        booster_mw: if p.case == CaseId::Hp { booster_mw } else { vec![0.0; hours] },
        storage_in_kgph: if p.case.uses_hydrogen() { hp_flow_kg } else { vec![0.0; hours] },
        storage_out_kgph: fuel_cell_h2.clone(),
        fuel_cell_h2_kgph: fuel_cell_h2,
        fuel_cell_mw,
        available_mw,
        curtailed_mw: curtailed,
        curtailed_mwh,
        day_revenue_usd,
        max_line_residual_mw: max_line_residual,
        max_pressure_residual_bar2: max_pressure_residual,
    }
}

/// Chord-versus-curve residual of one leg in one hour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub leg: String,
    pub hour: usize,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub residuals: Vec<Residual>,
    pub max_line_residual_mw: f64,
    pub max_pressure_residual_bar2: f64,
    /// Residuals outside `[0, bound]` beyond round-off.
    pub violations: Vec<Residual>,
}

impl TightnessReport {
    pub fn is_tight(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compare the relaxed loss and pressure values of a result against the exact
/// quadratic relations, hour by hour and leg by leg.
pub fn verify_tightness(result: &DispatchResult, problem: &DispatchProblem) -> Result<TightnessReport, DispatchError> {
    let legs = problem.legs()?;
    let mut residuals = Vec::new();
    let mut max_line: f64 = 0.0;
    let mut max_pressure: f64 = 0.0;
    for line in &result.lines {
        let Some(leg) = legs.lines.get(line.farm).copied().flatten() else {
            return Err(DispatchError::Invalid(format!("no line leg at farm {}", line.farm)));
        };
        let bound = line_chords(&leg, problem.segments).gap_bound();
        for (t, (&p_in, &p_out)) in line.p_in_mw.iter().zip(&line.p_out_mw).enumerate() {
            if p_out <= 0.0 {
                continue;
            }
            let r = p_in - leg.input_for_output(p_out);
            max_line = max_line.max(r);
            residuals.push(Residual { leg: format!("line{}", line.farm + 1), hour: t, residual: r, bound });
        }
    }
    for pipe in &result.pipes {
        let leg = match pipe.leg {
            PipeLegId::Lp(k) => legs.lp_pipes.get(k).copied().flatten(),
            PipeLegId::Hp => legs.hp_pipe,
        };
        let Some(leg) = leg else {
            return Err(DispatchError::Invalid(format!("no pipe leg {}", pipe.leg)));
        };
        let bound = pipe_chords(&leg, problem.segments).gap_bound();
        for (t, (&h, &p_in)) in pipe.flow_kgph.iter().zip(&pipe.inlet_pressure_bar).enumerate() {
            if h <= 0.0 {
                continue;
            }
            let r = p_in * p_in - leg.inlet_pressure_squared(h);
            max_pressure = max_pressure.max(r);
            residuals.push(Residual { leg: pipe.leg.to_string(), hour: t, residual: r, bound });
        }
    }
    let violations = residuals
        .iter()
        .filter(|r| {
            let tol = 1e-9 * (1.0 + r.bound.abs()) + 1e-9;
            r.residual < -tol || r.residual > r.bound + tol
        })
        .cloned()
        .collect();
    Ok(TightnessReport {
        residuals,
        max_line_residual_mw: max_line,
        max_pressure_residual_bar2: max_pressure,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::model::HOURS_PER_DAY;

    fn flat_day(farms: usize, cf: f64, lmp: f64) -> DayProfile {
        DayProfile {
            wind_capacity_factor: vec![vec![cf; HOURS_PER_DAY]; farms],
            lmp_usd_per_mwh: vec![lmp; HOURS_PER_DAY],
            dt_hours: 1.0,
        }
    }

    fn lossless(mut c: ComponentCatalog) -> ComponentCatalog {
        c.line.resistance_ohm_per_km = 0.0;
        c.line.converter_eff = 1.0;
        c
    }

    #[test]
    fn zero_wind_day_earns_nothing() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = flat_day(3, 0.0, 50.0);
        for case in CaseId::ALL {
            let d = SizingDecision::reference(case, &s);
            let p = DispatchProblem::new(&s, &c, &day, d).unwrap();
            let r = solve_dispatch(&p).unwrap();
            assert!(r.day_revenue_usd.abs() < 1e-6, "{case}: {}", r.day_revenue_usd);
            for level in &r.storage_kg {
                assert!((level - s.storage_initial_kg).abs() < 1e-3, "{case}: {level}");
            }
        }
    }

    #[test]
    fn lossless_hvdc_closed_form() {
        let s = defaults::scenario();
        let c = lossless(defaults::catalog());
        let day = flat_day(3, 1.0, 50.0);
        let d = SizingDecision { lines_per_farm: vec![1; 3], ..SizingDecision::zero(CaseId::Hvdc, 3) };
        let p = DispatchProblem::new(&s, &c, &day, d).unwrap();
        let r = solve_dispatch(&p).unwrap();
        let expected = 50.0 * 2160.0 * 24.0;
        assert!((r.day_revenue_usd - expected).abs() < 1e-8 * expected, "{}", r.day_revenue_usd);
        assert!((expected - 2.592e6).abs() < 1e-6);
    }

    #[test]
    fn hvdc_lp_has_no_hydrogen_blocks() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = defaults::day();
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::reference(CaseId::Hvdc, &s)).unwrap();
        let lp = build_dispatch(&p).unwrap();
        assert!(lp.vars.iter().any(|v| v.name.starts_with("line_out_f2")));
        assert!(lp.vars.iter().all(|v| v.name.starts_with("line_")));
    }

    #[test]
    fn hp_lp_has_every_hydrogen_block() {
        let s = defaults::single_farm_scenario();
        let c = defaults::catalog();
        let day = flat_day(1, 0.5, 40.0);
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::reference(CaseId::Hp, &s)).unwrap();
        let lp = build_dispatch(&p).unwrap();
        for prefix in ["h2_f0", "lp_psq_f0", "hp_flow", "hp_psq", "storage_t", "fc_h2"] {
            assert!(lp.vars.iter().any(|v| v.name.starts_with(prefix)), "missing {prefix}");
        }
        assert!(lp.rows.iter().any(|r| r.name.starts_with("storage_balance")));
        assert!(!lp.vars.iter().any(|v| v.name.starts_with("line_")));
    }

    #[test]
    fn coarser_chords_never_earn_more() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = defaults::day();
        for case in CaseId::ALL {
            let d = SizingDecision::reference(case, &s);
            let fine = DispatchProblem::new(&s, &c, &day, d.clone()).unwrap();
            let coarse = fine.clone().with_segments(2).unwrap();
            let rf = solve_dispatch(&fine).unwrap().day_revenue_usd;
            let rc = solve_dispatch(&coarse).unwrap().day_revenue_usd;
            assert!(rc <= rf * (1.0 + 1e-9) + 1e-6, "{case}: {rc} > {rf}");
        }
    }

    #[test]
    fn segments_below_two_rejected() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = defaults::day();
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::zero(CaseId::Hvdc, 3)).unwrap();
        assert!(p.with_segments(1).is_err());
    }

    #[test]
    fn chord_interpolates_at_breakpoints() {
        let ch = Chords::new(Quadratic { c0: 4.0, c1: 0.5, c2: 0.3 }, 9.0, 10);
        for j in 0..10 {
            let x = ch.breakpoint(j);
            assert!((ch.eval(x) - ch.curve.eval(x)).abs() < 1e-12);
        }
        for i in 0..=900 {
            let x = 9.0 * f64::from(i) / 900.0;
            let gap = ch.eval(x) - ch.curve.eval(x);
            assert!(gap >= -1e-12 && gap <= ch.gap_bound() + 1e-12);
        }
        assert!((ch.gap_bound() - 0.3 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_segments_at_least_halves_gap_bound() {
        // oracle: the chord error of a*x^2 on width h peaks at mid-chord at a*h^2/4
        let leg = LineLeg {
            distance_km: 380.0,
            resistance_ohm_per_km: 1.5e-5,
            voltage_kv: 525.0,
            converter_eff: 0.97,
            count: 1,
            p_lim_mw: 2000.0,
            loss_coeff: 1000.0,
        };
        for n in [2usize, 5, 10, 20] {
            let a = line_chords(&leg, n).gap_bound();
            let b = line_chords(&leg, 2 * n).gap_bound();
            assert!(b <= 0.5 * a, "{n}: {b} vs {a}");
            // brute-force maximum gap agrees with the closed form
            let ch = line_chords(&leg, n);
            let sampled = (0..=20000)
                .map(|i| {
                    let x = ch.upper * f64::from(i) / 20000.0;
                    ch.eval(x) - leg.input_for_output(x)
                })
                .fold(0.0_f64, f64::max);
            assert!((sampled - a).abs() <= 1e-6 * a.max(1e-12));
        }
    }

    #[test]
    fn zero_flow_hours_have_zero_residual_and_breakpoints_are_exact() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = defaults::day();
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::reference(CaseId::Hvdc, &s)).unwrap();
        let mut r = solve_dispatch(&p).unwrap();
        let legs = p.legs().unwrap();
        let leg = legs.lines[0].unwrap();
        let ch = line_chords(&leg, p.segments);
        // hour 0 idle, hour j at breakpoint j
        for t in 0..r.hours() {
            let x = if t == 0 { 0.0 } else { ch.breakpoint(t % p.segments) };
            r.lines[0].p_out_mw[t] = x;
            r.lines[0].p_in_mw[t] = if x > 0.0 { ch.eval(x) } else { 0.0 };
        }
        let rep = verify_tightness(&r, &p).unwrap();
        for res in rep.residuals.iter().filter(|res| res.leg == "line1") {
            assert!(res.residual.abs() < 1e-9 * (1.0 + res.bound), "{res:?}");
        }
        assert!(rep.residuals.iter().all(|res| !(res.leg == "line1" && res.hour == 0)));
    }

    #[test]
    fn infeasible_storage_reports_offending_constraints() {
        let mut s = defaults::scenario();
        s.storage_initial_kg = s.storage_capacity_kg * 2.0;
        let c = defaults::catalog();
        let day = defaults::day();
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::reference(CaseId::Hybrid, &s)).unwrap();
        match solve_dispatch(&p) {
            Err(DispatchError::Infeasible { violated }) => {
                assert!(violated.iter().any(|v| v.contains("storage")), "{violated:?}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn dispatch_is_deterministic() {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = defaults::day();
        let p = DispatchProblem::new(&s, &c, &day, SizingDecision::reference(CaseId::Hp, &s)).unwrap();
        let a = solve_dispatch(&p).unwrap();
        let b = solve_dispatch(&p).unwrap();
        assert_eq!(a, b);
    }
}
