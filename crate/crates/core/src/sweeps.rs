//! One-dimensional parameter studies: re-size every case at each point of an
//! axis, locate where two cases swap order, and compare cases side by side.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults::set_round_trip;
use crate::model::{CaseId, ComponentCatalog, DayProfile, Scenario};
use crate::sizing::{optimize_sizing, Evaluation, SizingDecision, SizingError, SizingOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Fuel-cell yield over electrolyzer intensity.
    RoundTripEfficiency,
    /// Fractional cut in electrolyzer and fuel-cell capital cost.
    ConversionCostReduction,
    /// Mean farm-to-substation distance; every route is scaled together.
    DistanceKm,
    /// Nameplate capacity of each farm.
    FarmCapacityMw,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("{axis} value {value}: {reason}")]
    BadValue { axis: Axis, value: f64, reason: &'static str },
    #[error("unknown axis `{0}` (expected round_trip_efficiency, conversion_cost_reduction, distance_km or farm_capacity_mw)")]
    UnknownAxis(String),
    #[error("sweep needs at least one value and one case")]
    Empty,
    #[error(transparent)]
    Sizing(#[from] SizingError),
}

impl Axis {
    pub const ALL: [Axis; 4] =
        [Axis::RoundTripEfficiency, Axis::ConversionCostReduction, Axis::DistanceKm, Axis::FarmCapacityMw];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::RoundTripEfficiency => "round_trip_efficiency",
            Axis::ConversionCostReduction => "conversion_cost_reduction",
            Axis::DistanceKm => "distance_km",
            Axis::FarmCapacityMw => "farm_capacity_mw",
        }
    }

    /// Scenario and catalog with this axis set to `value`.
    pub fn apply(
        self,
        value: f64,
        s: &Scenario,
        c: &ComponentCatalog,
    ) -> Result<(Scenario, ComponentCatalog), SweepError> {
        let bad = |reason| Err(SweepError::BadValue { axis: self, value, reason });
        let mut s = s.clone();
        let mut c = c.clone();
        match self {
            Axis::RoundTripEfficiency => {
                if !(value > 0.0 && value < 1.0) {
                    return bad("round trip must lie in (0, 1)");
                }
                set_round_trip(&mut c, value);
            }
            Axis::ConversionCostReduction => {
                if !(0.0..1.0).contains(&value) {
                    return bad("reduction must lie in [0, 1)");
                }
                c.electrolyzer.capex_per_unit *= 1.0 - value;
                c.fuel_cell.capex_per_unit *= 1.0 - value;
            }
            Axis::DistanceKm => {
                if !(value > 0.0 && value.is_finite()) {
                    return bad("distance must be positive");
                }
                s.distance_scale = value / s.mean_farm_substation_km();
            }
            Axis::FarmCapacityMw => {
                if !(value > 0.0 && value.is_finite()) {
                    return bad("capacity must be positive");
                }
                s.farm_capacity_mw = vec![value; s.farm_count];
            }
        }
        Ok((s, c))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| SweepError::UnknownAxis(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub cases: Vec<CaseId>,
    pub options: SizingOptions,
}

/// Optimal benefit and build of every case at every axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub cases: Vec<CaseId>,
    /// `[value][case]`, USD.
    pub net_benefit_usd: Vec<Vec<f64>>,
    /// `[value][case]`.
    pub decisions: Vec<Vec<SizingDecision>>,
}

impl SweepResult {
    pub fn series(&self, case: CaseId) -> Option<Vec<f64>> {
        let j = self.cases.iter().position(|&c| c == case)?;
        Some(self.net_benefit_usd.iter().map(|row| row[j]).collect())
    }

    /// One row per axis value, one column per case, in billions to one decimal.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(self.axis.as_str());
        for c in &self.cases {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (v, row) in self.values.iter().zip(&self.net_benefit_usd) {
            let _ = write!(s, "{v}");
            for b in row {
                let _ = write!(s, ",{:.1}", b / 1e9);
            }
            s.push('\n');
        }
        s
    }

    /// Axis value against full-precision benefit for one case.
    pub fn case_csv(&self, case: CaseId) -> Option<String> {
        let series = self.series(case)?;
        let mut s = format!("{},net_benefit_usd\n", self.axis);
        for (v, b) in self.values.iter().zip(series) {
            let _ = writeln!(s, "{v},{b:.2}");
        }
        Some(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }
}

/// Re-size every case at every axis value.
pub fn run_sweep(
    spec: &SweepSpec,
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
) -> Result<SweepResult, SweepError> {
    if spec.values.is_empty() || spec.cases.is_empty() {
        return Err(SweepError::Empty);
    }
    let inputs: Vec<(Scenario, ComponentCatalog)> = spec
        .values
        .iter()
        .map(|&v| spec.axis.apply(v, s, c))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, CaseId)> = (0..spec.values.len())
        .flat_map(|i| spec.cases.iter().map(move |&case| (i, case)))
        .collect();
    let outcomes: Vec<Evaluation> = jobs
        .par_iter()
        .map(|&(i, case)| {
            let (s, c) = &inputs[i];
            optimize_sizing(case, s, c, day, &spec.options).map(|o| o.best)
        })
        .collect::<Result<_, _>>()?;
    let width = spec.cases.len();
    let rows = outcomes.chunks(width);
    Ok(SweepResult {
        axis: spec.axis,
        values: spec.values.clone(),
        cases: spec.cases.clone(),
        net_benefit_usd: rows.clone().map(|r| r.iter().map(|e| e.net_benefit_usd).collect()).collect(),
        decisions: rows.map(|r| r.iter().map(|e| e.decision.clone()).collect()).collect(),
    })
}

/// Bracket around a point where two cases are equally good.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lower: f64,
    pub upper: f64,
}

impl Crossing {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub axis: Axis,
    pub first: CaseId,
    pub second: CaseId,
    /// Every sign change of `first - second` inside the grid, refined.
    pub crossings: Vec<Crossing>,
    /// With no sign change on the grid, where a straight-line fit of the gap
    /// reaches zero (possibly outside the grid).
    pub extrapolated: Option<f64>,
}

/// Locate where `first` and `second` swap order along `axis`.
///
/// The gap is sampled on `grid` (ascending); each sign change is bisected,
/// re-sizing both cases at every probe, until the bracket is at most
/// `rel_width` of the grid span.
#[allow(clippy::too_many_arguments)]
pub fn find_crossover(
    first: CaseId,
    second: CaseId,
    axis: Axis,
    grid: &[f64],
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
    opts: &SizingOptions,
    rel_width: f64,
) -> Result<CrossoverReport, SweepError> {
    if grid.len() < 2 {
        return Err(SweepError::Empty);
    }
    let gap = |v: f64| -> Result<f64, SweepError> {
        let (s, c) = axis.apply(v, s, c)?;
        let (a, b) = rayon::join(
            || optimize_sizing(first, &s, &c, day, opts),
            || optimize_sizing(second, &s, &c, day, opts),
        );
        Ok(a?.net_benefit_usd() - b?.net_benefit_usd())
    };
    let gaps: Vec<f64> = grid.par_iter().map(|&v| gap(v)).collect::<Result<_, _>>()?;
    let span = grid[grid.len() - 1] - grid[0];
    let width = rel_width * span.abs();
    let mut crossings = Vec::new();
    for i in 0..grid.len() - 1 {
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let (mut g_lo, g_hi) = (gaps[i], gaps[i + 1]);
        if g_lo == 0.0 {
            crossings.push(Crossing { lower: lo, upper: lo });
            continue;
        }
        if g_lo.signum() == g_hi.signum() || g_hi == 0.0 {
            continue;
        }
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            let g = gap(mid)?;
            if g == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if g.signum() == g_lo.signum() {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
            }
        }
        crossings.push(Crossing { lower: lo, upper: hi });
    }
    if gaps[gaps.len() - 1] == 0.0 {
        let v = grid[grid.len() - 1];
        crossings.push(Crossing { lower: v, upper: v });
    }
    let extrapolated = if crossings.is_empty() { linear_root(grid, &gaps) } else { None };
    Ok(CrossoverReport { axis, first, second, crossings, extrapolated })
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn linear_root(x: &[f64], y: &[f64]) -> Option<f64> {
    let slope = linear_slope(x, y);
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    Some(mx - my / slope)
}

/// Optimal build and benefit of each case on the same inputs.
pub fn compare_cases(
    cases: &[CaseId],
    s: &Scenario,
    c: &ComponentCatalog,
    day: &DayProfile,
    opts: &SizingOptions,
) -> Result<Vec<Evaluation>, SizingError> {
    cases
        .par_iter()
        .map(|&case| optimize_sizing(case, s, c, day, opts).map(|o| o.best))
        .collect()
}
