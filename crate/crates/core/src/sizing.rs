//! Capital cost, net benefit and the integer sizing search.
//!
//! Line and pipe counts are enumerated exactly over a bounded box. For each
//! such transport build the day is solved once with electrolyzer and fuel-cell
//! capacity left continuous and priced at their daily-equivalent cost; that
//! optimum bounds every integer completion of the build from above. Builds are
//! then visited in order of decreasing bound, their unit counts rounded and
//! re-evaluated with the counts fixed, until no remaining bound can beat the
//! incumbent.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    solve_dispatch, solve_priced, DispatchError, DispatchProblem, DispatchResult, DEFAULT_SEGMENTS,
};
use crate::model::{
    build_topology, validate_inputs, CaseId, ComponentCatalog, DayProfile, Scenario, ValidationErrors,
    DAYS_PER_YEAR,
};
use crate::physics::{catalog_gas, pipeline_max_flow, PipeLeg};

/// Integer build of one case.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SizingDecision {
    pub case: CaseId,
    pub lines_per_farm: Vec<u32>,
    pub lp_pipes_per_farm: Vec<u32>,
    pub hp_pipes: u32,
    pub electrolyzers_per_site: Vec<u32>,
    pub fuel_cells: u32,
}

impl SizingDecision {
    /// Build nothing.
    pub fn zero(case: CaseId, farm_count: usize) -> Self {
        SizingDecision {
            case,
            lines_per_farm: vec![0; farm_count],
            lp_pipes_per_farm: vec![0; farm_count],
            hp_pipes: 0,
            electrolyzers_per_site: vec![0; case.electrolyzer_sites(farm_count)],
            fuel_cells: 0,
        }
    }

    /// A modest hand-picked build that exercises every component of the case.
    pub fn reference(case: CaseId, s: &Scenario) -> Self {
        let n = s.farm_count;
        let mut d = SizingDecision::zero(case, n);
        match case {
            CaseId::Hvdc => d.lines_per_farm = vec![1; n],
            CaseId::Hybrid => {
                d.lines_per_farm = vec![1; n];
                d.hp_pipes = 2;
                d.electrolyzers_per_site = vec![4000];
                d.fuel_cells = 6000;
            }
            CaseId::Hp => {
                d.lp_pipes_per_farm = vec![1; n];
                d.hp_pipes = 2;
                d.electrolyzers_per_site = vec![2000; n];
                d.fuel_cells = 6000;
            }
        }
        d
    }

    /// Vector shapes match the farm count and absent components are zero.
    pub fn validate(&self, farm_count: usize) -> Result<(), String> {
        let sites = self.case.electrolyzer_sites(farm_count);
        if self.lines_per_farm.len() != farm_count || self.lp_pipes_per_farm.len() != farm_count {
            return Err(format!("per-farm counts must have {farm_count} entries"));
        }
        if self.electrolyzers_per_site.len() != sites {
            return Err(format!(
                "{} case needs {sites} electrolyzer site counts, found {}",
                self.case,
                self.electrolyzers_per_site.len()
            ));
        }
        if !self.case.uses_lines() && self.total_lines() > 0 {
            return Err(format!("{} case has no transmission lines", self.case));
        }
        if self.case != CaseId::Hp && self.total_lp_pipes() > 0 {
            return Err(format!("{} case has no low-pressure pipelines", self.case));
        }
        if !self.case.uses_hydrogen() && (self.hp_pipes > 0 || self.fuel_cells > 0) {
            return Err(format!("{} case has no hydrogen components", self.case));
        }
        Ok(())
    }

    pub fn total_lines(&self) -> u32 {
        self.lines_per_farm.iter().sum()
    }

    pub fn total_lp_pipes(&self) -> u32 {
        self.lp_pipes_per_farm.iter().sum()
    }

    pub fn total_electrolyzers(&self) -> u32 {
        self.electrolyzers_per_site.iter().sum()
    }

    fn key(&self) -> Vec<u32> {
        let mut k = self.lines_per_farm.clone();
        k.extend(&self.lp_pipes_per_farm);
        k.push(self.hp_pipes);
        k.extend(&self.electrolyzers_per_site);
        k.push(self.fuel_cells);
        k
    }
}

/// Capital cost by component class plus lifetime operating cost, in USD.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub lines: f64,
    pub lp_pipes: f64,
    pub hp_pipes: f64,
    pub electrolyzers: f64,
    pub compressors: f64,
    pub fuel_cells: f64,
    pub storage: f64,
    pub capex: f64,
    pub opex: f64,
    pub total: f64,
}

/// Installed compressor throughput (kg/h): the electrolyzer-side bank, plus
/// the hub booster in the HP case.
pub fn compressor_capacity_kgph(d: &SizingDecision, c: &ComponentCatalog) -> f64 {
    let produced = f64::from(d.total_electrolyzers()) * c.electrolyzer.rated_mw
        / c.electrolyzer.energy_intensity_mwh_per_kg;
    match d.case {
        CaseId::Hvdc => 0.0,
        CaseId::Hybrid => produced,
        CaseId::Hp => 2.0 * produced,
    }
}

/// Capital and lifetime operating cost of a build.
pub fn total_cost(d: &SizingDecision, s: &Scenario, c: &ComponentCatalog) -> CostBreakdown {
    let topo = build_topology(d.case, s);
    let life = s.lifetime_factor();
    let mut lines = 0.0;
    let mut lp_pipes = 0.0;
    for k in 0..s.farm_count {
        let Some(km) = topo.farm_leg_km(k) else { continue };
        if d.case.uses_lines() {
            lines += f64::from(d.lines_per_farm[k]) * (c.line.capex_per_km * km + c.line.capex_converter_pair);
        }
        if d.case == CaseId::Hp {
            lp_pipes += f64::from(d.lp_pipes_per_farm[k]) * c.pipeline_lp.capex_per_km * km;
        }
    }
    let hp_pipes = topo
        .hp_leg_km()
        .map_or(0.0, |km| f64::from(d.hp_pipes) * c.pipeline_hp.capex_per_km * km);
    let electrolyzers = f64::from(d.total_electrolyzers()) * c.electrolyzer.capex_per_unit;
    let compressors = compressor_capacity_kgph(d, c) * c.compressor.capex_per_kgph_capacity;
    let fuel_cells = f64::from(d.fuel_cells) * c.fuel_cell.capex_per_unit;
    let storage = if d.case.uses_hydrogen() && d.hp_pipes > 0 {
        s.storage_capacity_kg * c.storage.capex_per_kg
    } else {
        0.0
    };
    let capex = lines + lp_pipes + hp_pipes + electrolyzers + compressors + fuel_cells + storage;
    let opex = life
        * (lines * c.line.opex_frac_per_year
            + lp_pipes * c.pipeline_lp.opex_frac
            + hp_pipes * c.pipeline_hp.opex_frac
            + electrolyzers * c.electrolyzer.opex_frac
            + compressors * c.compressor.opex_frac
            + fuel_cells * c.fuel_cell.opex_frac
            + storage * c.storage.opex_frac);
    CostBreakdown {
        lines,
        lp_pipes,
        hp_pipes,
        electrolyzers,
        compressors,
        fuel_cells,
        storage,
        capex,
        opex,
        total: capex + opex,
    }
}

/// Lifetime multiplier on representative-day revenue.
pub fn revenue_multiplier(s: &Scenario) -> f64 {
    DAYS_PER_YEAR * s.lifetime_factor()
}

/// Lifetime sales minus total cost.
pub fn lifetime_benefit(day_revenue_usd: f64, total_cost_usd: f64, s: &Scenario) -> f64 {
    revenue_multiplier(s) * day_revenue_usd - total_cost_usd
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SizingError {
    #[error("invalid inputs: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
}

/// A build with its dispatch and economics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub decision: SizingDecision,
    pub cost: CostBreakdown,
    pub day_revenue_usd: f64,
    pub lifetime_revenue_usd: f64,
    pub net_benefit_usd: f64,
    pub dispatch: DispatchResult,
}

/// Dispatch a fixed build over the day and price it over the horizon.
pub fn net_benefit(
    d: &SizingDecision,
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
    segments: usize,
) -> Result<Evaluation, SizingError> {
    let problem = DispatchProblem::new(s, c, day, d.clone())?.with_segments(segments)?;
    let dispatch = solve_dispatch(&problem)?;
    let cost = total_cost(d, s, c);
    let lifetime_revenue_usd = revenue_multiplier(s) * dispatch.day_revenue_usd;
    Ok(Evaluation {
        decision: d.clone(),
        day_revenue_usd: dispatch.day_revenue_usd,
        lifetime_revenue_usd,
        net_benefit_usd: lifetime_revenue_usd - cost.total,
        cost,
        dispatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingOptions {
    /// Sample points of the chord models in every dispatch.
    pub segments: usize,
    /// Extra line and pipe counts enumerated above the count that carries peak output.
    pub count_slack: u32,
    /// Unit counts up to this size are also tried one step beyond floor and ceiling.
    pub polish_threshold: u32,
}

impl Default for SizingOptions {
    fn default() -> Self {
        SizingOptions { segments: DEFAULT_SEGMENTS, count_slack: 1, polish_threshold: 64 }
    }
}

/// Result of the sizing search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingOutcome {
    pub best: Evaluation,
    /// Transport builds enumerated.
    pub builds_enumerated: usize,
    /// Fixed-count evaluations performed.
    pub evaluations: usize,
}

impl SizingOutcome {
    pub fn decision(&self) -> &SizingDecision {
        &self.best.decision
    }

    pub fn net_benefit_usd(&self) -> f64 {
        self.best.net_benefit_usd
    }
}

#[derive(Debug, Clone)]
struct Bounded {
    build: SizingDecision,
    upper_bound: f64,
    electrolyzer_mw: Vec<f64>,
    fuel_cell_mw: f64,
}

fn ceil_div(x: f64, unit: f64) -> u32 {
    if unit <= 0.0 || !x.is_finite() {
        return 0;
    }
    (x / unit - 1e-9).ceil().max(0.0) as u32
}

/// Flow one pipe of a leg can carry: the rating, or less if pressure binds.
fn pipe_unit_flow(leg: &PipeLeg) -> f64 {
    match pipeline_max_flow(leg) {
        Ok(h) => h.min(leg.h_lim_kgph),
        Err(_) => leg.h_lim_kgph,
    }
}

/// Every transport build in the enumeration box.
fn transport_builds(
    case: CaseId,
    s: &Scenario,
    c: &ComponentCatalog,
    slack: u32,
) -> Result<Vec<SizingDecision>, SizingError> {
    let n = s.farm_count;
    let topo = build_topology(case, s);
    let cp_e = c.electrolyzer.energy_intensity_mwh_per_kg;
    let cp_c = c.compressor.energy_per_kg_mwh;
    let mut per_farm_max = vec![0u32; n];
    let mut hp_max = 0u32;
    if case.uses_hydrogen() {
        let (lp_gas, hp_gas) = catalog_gas(c).map_err(DispatchError::from)?;
        let peak_total_kgph = match case {
            CaseId::Hybrid => s.total_capacity_mw() / (cp_e + cp_c),
            _ => s.total_capacity_mw() / (cp_e + 2.0 * cp_c),
        };
        let hp_leg = PipeLeg::from_spec(&c.pipeline_hp, &c.physics, hp_gas, topo.hp_leg_km().unwrap_or(0.0), 1);
        hp_max = ceil_div(peak_total_kgph, pipe_unit_flow(&hp_leg)) + slack;
        if case == CaseId::Hp {
            for (k, m) in per_farm_max.iter_mut().enumerate() {
                let km = topo.farm_leg_km(k).unwrap_or(0.0);
                let leg = PipeLeg::from_spec(&c.pipeline_lp, &c.physics, lp_gas, km, 1);
                let peak = s.farm_capacity_mw[k] / (cp_e + 2.0 * cp_c);
                *m = ceil_div(peak, pipe_unit_flow(&leg)) + slack;
            }
        }
    }
    if case.uses_lines() {
        for (k, m) in per_farm_max.iter_mut().enumerate() {
            *m = ceil_div(s.farm_capacity_mw[k], c.line.p_lim_mw) + slack;
        }
    }

    let mut out = Vec::new();
    let mut counts = vec![0u32; n];
    loop {
        let any_farm = counts.iter().any(|&x| x > 0);
        for hp in 0..=hp_max {
            // builds that cannot deliver anything are dominated by building nothing
            let delivers = any_farm && (!case.uses_hydrogen() || hp > 0);
            if delivers {
                let mut d = SizingDecision::zero(case, n);
                if case.uses_lines() {
                    d.lines_per_farm = counts.clone();
                } else {
                    d.lp_pipes_per_farm = counts.clone();
                }
                d.hp_pipes = hp;
                out.push(d);
            }
            if !case.uses_hydrogen() {
                break;
            }
        }
        // odometer over per-farm counts
        let mut k = 0;
        loop {
            if k == n {
                return Ok(out);
            }
            if counts[k] < per_farm_max[k] {
                counts[k] += 1;
                break;
            }
            counts[k] = 0;
            k += 1;
        }
    }
}

fn fixed_cost(build: &SizingDecision, s: &Scenario, c: &ComponentCatalog) -> f64 {
    total_cost(build, s, c).total
}

/// Daily-equivalent cost of one MW of electrolysis (with its compression) and
/// of one MW of fuel cell.
fn daily_capacity_prices(case: CaseId, s: &Scenario, c: &ComponentCatalog) -> (f64, f64) {
    let life = s.lifetime_factor();
    let per_day = revenue_multiplier(s);
    let e = &c.electrolyzer;
    let banks = if case == CaseId::Hp { 2.0 } else { 1.0 };
    let comp_per_mw = banks / e.energy_intensity_mwh_per_kg * c.compressor.capex_per_kgph_capacity;
    let elec = (e.capex_per_unit / e.rated_mw) * (1.0 + life * e.opex_frac)
        + comp_per_mw * (1.0 + life * c.compressor.opex_frac);
    let f = &c.fuel_cell;
    let fc = (f.capex_per_unit / f.rated_mw) * (1.0 + life * f.opex_frac);
    (elec / per_day, fc / per_day)
}

fn bound_build(
    build: SizingDecision,
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
    opts: &SizingOptions,
) -> Result<Bounded, SizingError> {
    let fixed = fixed_cost(&build, s, c);
    let problem = DispatchProblem::new(s, c, day, build.clone())?.with_segments(opts.segments)?;
    if !build.case.uses_hydrogen() {
        let r = solve_dispatch(&problem)?;
        return Ok(Bounded {
            upper_bound: lifetime_benefit(r.day_revenue_usd, fixed, s),
            build,
            electrolyzer_mw: Vec::new(),
            fuel_cell_mw: 0.0,
        });
    }
    let (pe, pf) = daily_capacity_prices(build.case, s, c);
    let priced = solve_priced(&problem, pe, pf)?;
    Ok(Bounded {
        upper_bound: lifetime_benefit(priced.objective, fixed, s),
        build,
        electrolyzer_mw: priced.electrolyzer_mw,
        fuel_cell_mw: priced.fuel_cell_mw,
    })
}

fn rounding_candidates(units: f64, polish_threshold: u32) -> Vec<u32> {
    let lo = units.max(0.0).floor() as u32;
    let hi = units.max(0.0).ceil() as u32;
    let mut v = vec![lo, hi];
    if hi <= polish_threshold {
        v.push(hi + 1);
        if lo > 0 {
            v.push(lo - 1);
        }
    }
    v.sort_unstable();
    v.dedup();
    v
}

fn completions(b: &Bounded, c: &ComponentCatalog, opts: &SizingOptions) -> Vec<SizingDecision> {
    if !b.build.case.uses_hydrogen() {
        return vec![b.build.clone()];
    }
    let per_site: Vec<Vec<u32>> = b
        .electrolyzer_mw
        .iter()
        .map(|mw| rounding_candidates(mw / c.electrolyzer.rated_mw, opts.polish_threshold))
        .collect();
    let fc = rounding_candidates(b.fuel_cell_mw / c.fuel_cell.rated_mw, opts.polish_threshold);
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_site.len()];
    loop {
        for &f in &fc {
            let mut d = b.build.clone();
            d.electrolyzers_per_site = idx.iter().zip(&per_site).map(|(&i, v)| v[i]).collect();
            d.fuel_cells = f;
            out.push(d);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < per_site[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Preference order: higher benefit, then cheaper build, then the
/// lexicographically smaller count vector.
fn better(a: &Evaluation, b: &Evaluation) -> bool {
    if !near(a.net_benefit_usd, b.net_benefit_usd) {
        return a.net_benefit_usd > b.net_benefit_usd;
    }
    match a.cost.capex.partial_cmp(&b.cost.capex) {
        Some(Ordering::Less) if !near(a.cost.capex, b.cost.capex) => true,
        Some(Ordering::Greater) if !near(a.cost.capex, b.cost.capex) => false,
        _ => a.decision.key() < b.decision.key(),
    }
}

/// Find the build of `case` with the largest net benefit.
pub fn optimize_sizing(
    case: CaseId,
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
    opts: &SizingOptions,
) -> Result<SizingOutcome, SizingError> {
    validate_inputs(s, c, day)?;
    let zero = SizingDecision::zero(case, s.farm_count);
    let mut best = net_benefit(&zero, s, c, day, opts.segments)?;
    let mut evaluations = 1;

    let builds = transport_builds(case, s, c, opts.count_slack)?;
    let builds_enumerated = builds.len();
    let mut bounded: Vec<Bounded> = builds
        .into_par_iter()
        .map(|b| bound_build(b, s, c, day, opts))
        .collect::<Result<_, _>>()?;
    // stable sort keeps enumeration order among equal bounds
    bounded.sort_by(|a, b| b.upper_bound.total_cmp(&a.upper_bound));

    for b in &bounded {
        if b.upper_bound < best.net_benefit_usd && !near(b.upper_bound, best.net_benefit_usd) {
            break;
        }
        let candidates = completions(b, c, opts);
        evaluations += candidates.len();
        let evaluated: Vec<Evaluation> = candidates
            .par_iter()
            .map(|d| net_benefit(d, s, c, day, opts.segments))
            .collect::<Result<_, _>>()?;
        for e in evaluated {
            if better(&e, &best) {
                best = e;
            }
        }
    }
    Ok(SizingOutcome { best, builds_enumerated, evaluations })
}

/// One row of the sizing summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingRow {
    pub case: CaseId,
    pub lines: Option<u32>,
    pub lp_pipes: Option<u32>,
    pub hp_pipes: Option<u32>,
    pub electrolyzers: Option<u32>,
    pub fuel_cells: Option<u32>,
    pub line_km: Option<f64>,
    pub net_benefit_usd: f64,
}

impl SizingRow {
    pub fn new(e: &Evaluation, s: &Scenario) -> Self {
        let d = &e.decision;
        let h2 = d.case.uses_hydrogen();
        SizingRow {
            case: d.case,
            lines: d.case.uses_lines().then(|| d.total_lines()),
            lp_pipes: (d.case == CaseId::Hp).then(|| d.total_lp_pipes()),
            hp_pipes: h2.then_some(d.hp_pipes),
            electrolyzers: h2.then(|| d.total_electrolyzers()),
            fuel_cells: h2.then_some(d.fuel_cells),
            line_km: d.case.uses_lines().then(|| total_line_km(d, s)),
            net_benefit_usd: e.net_benefit_usd,
        }
    }
}

/// Total route length of installed lines.
pub fn total_line_km(d: &SizingDecision, s: &Scenario) -> f64 {
    let topo = build_topology(d.case, s);
    (0..s.farm_count)
        .filter_map(|k| topo.farm_leg_km(k).map(|km| km * f64::from(d.lines_per_farm[k])))
        .sum()
}

/// Plain-text sizing summary, one row per case.
pub fn sizing_table(rows: &[SizingRow]) -> String {
    fn cell(v: Option<u32>) -> String {
        v.map_or_else(|| "-".to_string(), |x| x.to_string())
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>7} {:>6} {:>6} {:>13} {:>10} {:>10} {:>12}",
        "case", "lines", "lphp", "hphp", "electrolyzers", "fuel_cells", "line_km", "benefit_busd"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8} {:>7} {:>6} {:>6} {:>13} {:>10} {:>10} {:>12.2}",
            r.case.as_str(),
            cell(r.lines),
            cell(r.lp_pipes),
            cell(r.hp_pipes),
            cell(r.electrolyzers),
            cell(r.fuel_cells),
            r.line_km.map_or_else(|| "-".to_string(), |km| format!("{km:.1}")),
            r.net_benefit_usd / 1e9
        );
    }
    s
}
