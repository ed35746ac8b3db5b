//! Physical relations of the delivery chain: DC line losses, conversion
//! efficiencies, pipeline hydraulics, hydrogen property correlations and the
//! storage balance. Everything here is a pure function of its inputs.
//!
//! Units: power in MW, voltage in kV, line resistance in ohm/km, distances in
//! km, hydrogen flow in kg/h, pipe diameter in m, pressure in bar. The loss
//! and pipeline relations carry configurable scale coefficients; changing
//! them rescales results without changing their shape.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentCatalog, GasProperties, LineSpec, PhysicsConstants, PipelineSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("no {what} installed but {value} requested")]
    NoUnits { what: &'static str, value: f64 },
    #[error("Colebrook-White iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("Reynolds number {0} is not turbulent (must exceed 4000)")]
    Laminar(f64),
    #[error("inlet pressure {required:.3} bar exceeds the {limit:.3} bar limit")]
    PressureLimit { required: f64, limit: f64 },
    #[error("flow {flow} kg/h exceeds the installed limit {limit} kg/h")]
    FlowLimit { flow: f64, limit: f64 },
    #[error("degenerate pipeline leg: {0}")]
    DegenerateLeg(&'static str),
    #[error("storage {direction}: level would miss its bound by {magnitude_kg} kg")]
    StorageBound { direction: BoundDirection, magnitude_kg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundDirection {
    Overflow,
    Underflow,
}

impl std::fmt::Display for BoundDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundDirection::Overflow => "overflow",
            BoundDirection::Underflow => "underflow",
        })
    }
}

fn nonnegative(what: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(PhysicsError::Negative { what, value })
    }
}

/// A bundle of identical parallel HVDC lines between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineLeg {
    pub distance_km: f64,
    pub resistance_ohm_per_km: f64,
    pub voltage_kv: f64,
    pub converter_eff: f64,
    pub count: u32,
    pub p_lim_mw: f64,
    pub loss_coeff: f64,
}

impl LineLeg {
    pub fn from_spec(spec: &LineSpec, phys: &PhysicsConstants, distance_km: f64, count: u32) -> Self {
        LineLeg {
            distance_km,
            resistance_ohm_per_km: spec.resistance_ohm_per_km,
            voltage_kv: spec.voltage_kv,
            converter_eff: spec.converter_eff,
            count,
            p_lim_mw: spec.p_lim_mw,
            loss_coeff: phys.loss_coeff,
        }
    }

    /// Coefficient `c` of the loss term `c * P_out^2` for the whole bundle.
    pub fn loss_factor(&self) -> f64 {
        self.loss_coeff * self.distance_km * self.resistance_ohm_per_km
            / (self.voltage_kv * self.voltage_kv * f64::from(self.count))
    }

    pub fn capacity_mw(&self) -> f64 {
        self.p_lim_mw * f64::from(self.count)
    }

    /// Sending-end power needed to land `p_out` at the receiving end.
    pub fn input_for_output(&self, p_out: f64) -> f64 {
        (p_out + self.loss_factor() * p_out * p_out) / self.converter_eff
    }
}

/// Receiving-end power of a line bundle fed with `p_in_mw`.
///
/// Solves `eta * P_in - P_out = c * P_out^2` for its nonnegative root and caps
/// the result at the bundle rating.
pub fn hvdc_receive(leg: &LineLeg, p_in_mw: f64) -> Result<f64, PhysicsError> {
    nonnegative("line input power", p_in_mw)?;
    if p_in_mw == 0.0 {
        return Ok(0.0);
    }
    if leg.count == 0 {
        return Err(PhysicsError::NoUnits { what: "HVDC lines", value: p_in_mw });
    }
    let sent = leg.converter_eff * p_in_mw;
    let c = leg.loss_factor();
    // rationalized root, exact for c = 0 and free of cancellation for small c
    let p_out = 2.0 * sent / (1.0 + (1.0 + 4.0 * c * sent).sqrt());
    Ok(p_out.min(leg.capacity_mw()))
}

/// Electrolyzer input power (MW) for a hydrogen output in kg/h.
pub fn electrolyzer_power(cp_e_mwh_per_kg: f64, h_out_kgph: f64) -> Result<f64, PhysicsError> {
    nonnegative("electrolyzer hydrogen flow", h_out_kgph)?;
    Ok(cp_e_mwh_per_kg * h_out_kgph)
}

/// Fuel-cell output power (MW) for a hydrogen input in kg/h.
pub fn fuel_cell_power(cp_fc_mwh_per_kg: f64, h_in_kgph: f64) -> Result<f64, PhysicsError> {
    nonnegative("fuel-cell hydrogen flow", h_in_kgph)?;
    Ok(cp_fc_mwh_per_kg * h_in_kgph)
}

/// Compressor power (MW) for a compressed hydrogen flow in kg/h.
pub fn compressor_power(cp_c_mwh_per_kg: f64, h_kgph: f64) -> Result<f64, PhysicsError> {
    nonnegative("compressor hydrogen flow", h_kgph)?;
    Ok(cp_c_mwh_per_kg * h_kgph)
}

const COLEBROOK_MAX_ITER: usize = 100;
const COLEBROOK_TOL: f64 = 1e-12;
const COLEBROOK_DAMPING: f64 = 0.9;

/// Residual of the Colebrook-White equation written in `x = 1/sqrt(lambda)`.
pub fn colebrook_residual(lambda: f64, reynolds: f64, relative_roughness: f64) -> f64 {
    let x = 1.0 / lambda.sqrt();
    x + 2.0 * (relative_roughness / 3.7 + 2.51 * x / reynolds).log10()
}

/// Darcy friction factor from the Colebrook-White equation by damped
/// fixed-point iteration on `1/sqrt(lambda)`.
pub fn friction_factor(reynolds: f64, relative_roughness: f64) -> Result<f64, PhysicsError> {
    if !(reynolds > 4000.0) {
        return Err(PhysicsError::Laminar(reynolds));
    }
    nonnegative("relative roughness", relative_roughness)?;
    let g = |x: f64| -2.0 * (relative_roughness / 3.7 + 2.51 * x / reynolds).log10();
    // Swamee-Jain start
    let start = 0.25 / (relative_roughness / 3.7 + 5.74 / reynolds.powf(0.9)).log10().powi(2);
    let mut x = 1.0 / start.sqrt();
    for _ in 0..COLEBROOK_MAX_ITER {
        let next = x + COLEBROOK_DAMPING * (g(x) - x);
        let done = (next - x).abs() <= COLEBROOK_TOL * next.abs();
        x = next;
        if done {
            break;
        }
    }
    let lambda = 1.0 / (x * x);
    let residual = colebrook_residual(lambda, reynolds, relative_roughness);
    if residual.abs() < 1e-10 {
        Ok(lambda)
    } else {
        Err(PhysicsError::NoConvergence { residual, iterations: COLEBROOK_MAX_ITER })
    }
}

pub const DEFAULT_Z_ALPHA_PER_BAR: f64 = 6.4e-4;
pub const DEFAULT_Z_REFERENCE_K: f64 = 288.0;

/// Hydrogen compressibility with the default linear correlation.
pub fn compressibility(pressure_bar: f64, temperature_k: f64) -> Result<f64, PhysicsError> {
    compressibility_with(DEFAULT_Z_ALPHA_PER_BAR, DEFAULT_Z_REFERENCE_K, pressure_bar, temperature_k)
}

/// `Z = 1 + alpha(T) * p` where the slope follows the second-virial scaling
/// `alpha(T) = alpha_ref * T_ref / T`.
pub fn compressibility_with(
    alpha_per_bar: f64,
    reference_temperature_k: f64,
    pressure_bar: f64,
    temperature_k: f64,
) -> Result<f64, PhysicsError> {
    nonnegative("pressure", pressure_bar)?;
    if !(temperature_k > 0.0) {
        return Err(PhysicsError::Negative { what: "temperature", value: temperature_k });
    }
    Ok(1.0 + alpha_per_bar * reference_temperature_k / temperature_k * pressure_bar)
}

/// Gas properties of a pipeline class evaluated at its design flow (the
/// per-pipe flow limit) and mean pressure.
pub fn gas_for_pipeline(
    spec: &PipelineSpec,
    phys: &PhysicsConstants,
) -> Result<GasProperties, PhysicsError> {
    let mean_pressure = 0.5 * (spec.max_inlet_pressure_bar + spec.outlet_pressure_bar);
    let z = compressibility_with(
        phys.z_alpha_per_bar,
        phys.z_reference_temperature_k,
        mean_pressure,
        phys.mean_temperature_k,
    )?;
    let mass_flow_kgps = spec.h_lim_kgph / 3600.0;
    let reynolds =
        4.0 * mass_flow_kgps / (std::f64::consts::PI * spec.diameter_m * phys.viscosity_pa_s);
    let friction = friction_factor(reynolds, phys.roughness_m / spec.diameter_m)?;
    Ok(GasProperties {
        friction,
        compressibility: z,
        mean_temperature_k: phys.mean_temperature_k,
        density_kg_m3: phys.density_kg_m3,
        roughness_m: phys.roughness_m,
        viscosity_pa_s: phys.viscosity_pa_s,
    })
}

/// A bundle of identical parallel hydrogen pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeLeg {
    pub distance_km: f64,
    pub diameter_m: f64,
    pub outlet_pressure_bar: f64,
    pub max_inlet_pressure_bar: f64,
    pub count: u32,
    pub h_lim_kgph: f64,
    pub gas: GasProperties,
    pub weymouth_coeff: f64,
    pub flow_unit_kgph: f64,
}

impl PipeLeg {
    pub fn from_spec(
        spec: &PipelineSpec,
        phys: &PhysicsConstants,
        gas: GasProperties,
        distance_km: f64,
        count: u32,
    ) -> Self {
        PipeLeg {
            distance_km,
            diameter_m: spec.diameter_m,
            outlet_pressure_bar: spec.outlet_pressure_bar,
            max_inlet_pressure_bar: spec.max_inlet_pressure_bar,
            count,
            h_lim_kgph: spec.h_lim_kgph,
            gas,
            weymouth_coeff: phys.weymouth_coeff,
            flow_unit_kgph: phys.flow_unit_kgph,
        }
    }

    /// `p_I^2 - p_O^2` per squared flow unit through a single pipe.
    pub fn resistance(&self) -> f64 {
        self.weymouth_coeff * self.gas.flow_group() * self.distance_km / self.diameter_m.powi(5)
    }

    /// Squared inlet pressure for a total bundle flow, without limit checks.
    pub fn inlet_pressure_squared(&self, h_total_kgph: f64) -> f64 {
        let per_pipe = h_total_kgph / (f64::from(self.count) * self.flow_unit_kgph);
        self.outlet_pressure_bar.powi(2) + self.resistance() * per_pipe * per_pipe
    }

    /// Installed flow limit of the bundle.
    pub fn capacity_kgph(&self) -> f64 {
        self.h_lim_kgph * f64::from(self.count)
    }
}

/// Inlet pressure needed to push `h_kgph` through the bundle.
pub fn pipeline_inlet_pressure(leg: &PipeLeg, h_kgph: f64) -> Result<f64, PhysicsError> {
    nonnegative("pipeline flow", h_kgph)?;
    if h_kgph == 0.0 {
        return Ok(leg.outlet_pressure_bar);
    }
    if leg.count == 0 {
        return Err(PhysicsError::NoUnits { what: "pipelines", value: h_kgph });
    }
    if h_kgph > leg.capacity_kgph() {
        return Err(PhysicsError::FlowLimit { flow: h_kgph, limit: leg.capacity_kgph() });
    }
    let p_in = leg.inlet_pressure_squared(h_kgph).sqrt();
    if p_in > leg.max_inlet_pressure_bar * (1.0 + 1e-12) {
        return Err(PhysicsError::PressureLimit { required: p_in, limit: leg.max_inlet_pressure_bar });
    }
    Ok(p_in)
}

/// Largest flow one pipe of the leg carries at its maximum inlet pressure.
pub fn pipeline_max_flow(leg: &PipeLeg) -> Result<f64, PhysicsError> {
    if !(leg.distance_km > 0.0) {
        return Err(PhysicsError::DegenerateLeg("distance must be positive"));
    }
    if !(leg.diameter_m > 0.0) {
        return Err(PhysicsError::DegenerateLeg("diameter must be positive"));
    }
    let drive = leg.max_inlet_pressure_bar.powi(2) - leg.outlet_pressure_bar.powi(2);
    if drive < 0.0 {
        return Err(PhysicsError::DegenerateLeg("max inlet pressure below outlet pressure"));
    }
    Ok((drive / leg.resistance()).sqrt() * leg.flow_unit_kgph)
}

/// Total bundle flow sustained by inlet pressure `p_in_bar`; inverse of
/// [`pipeline_inlet_pressure`] without the rating checks.
pub fn pipeline_flow_for_inlet(leg: &PipeLeg, p_in_bar: f64) -> Result<f64, PhysicsError> {
    let drive = p_in_bar * p_in_bar - leg.outlet_pressure_bar.powi(2);
    if drive < 0.0 {
        return Err(PhysicsError::DegenerateLeg("inlet pressure below outlet pressure"));
    }
    if !(leg.distance_km > 0.0 && leg.diameter_m > 0.0) {
        return Err(PhysicsError::DegenerateLeg("distance and diameter must be positive"));
    }
    Ok((drive / leg.resistance()).sqrt() * leg.flow_unit_kgph * f64::from(leg.count))
}

/// Hydrogen storage level with its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageState {
    pub level_kg: f64,
    pub min_kg: f64,
    pub max_kg: f64,
    pub dt_hours: f64,
}

const STORAGE_TOL_KG: f64 = 1e-9;

/// Advance the storage level by one interval of charge and discharge.
pub fn storage_step(s: StorageState, h_in_kgph: f64, h_out_kgph: f64) -> Result<StorageState, PhysicsError> {
    nonnegative("storage inflow", h_in_kgph)?;
    nonnegative("storage outflow", h_out_kgph)?;
    let level = s.level_kg + s.dt_hours * (h_in_kgph - h_out_kgph);
    if level > s.max_kg + STORAGE_TOL_KG {
        return Err(PhysicsError::StorageBound {
            direction: BoundDirection::Overflow,
            magnitude_kg: level - s.max_kg,
        });
    }
    if level < s.min_kg - STORAGE_TOL_KG {
        return Err(PhysicsError::StorageBound {
            direction: BoundDirection::Underflow,
            magnitude_kg: s.min_kg - level,
        });
    }
    Ok(StorageState { level_kg: level, ..s })
}

/// Gas properties for both pipeline classes of a catalog.
pub fn catalog_gas(c: &ComponentCatalog) -> Result<(GasProperties, GasProperties), PhysicsError> {
    Ok((gas_for_pipeline(&c.pipeline_lp, &c.physics)?, gas_for_pipeline(&c.pipeline_hp, &c.physics)?))
}
