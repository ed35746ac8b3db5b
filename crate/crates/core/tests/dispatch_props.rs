use proptest::prelude::*;

use seagrid_core::defaults::{self, set_round_trip};
use seagrid_core::dispatch::PipeLegId;
use seagrid_core::io::generate_synthetic_day;
use seagrid_core::{solve_dispatch, verify_tightness, CaseId, DispatchProblem, SizingDecision};

const TOL: f64 = 1e-6;

fn case_strategy() -> impl Strategy<Value = CaseId> {
    prop_oneof![Just(CaseId::Hvdc), Just(CaseId::Hybrid), Just(CaseId::Hp)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dispatch_respects_physical_bounds(
        case in case_strategy(),
        seed in 0u64..1_000,
        round_trip in 0.35f64..0.95,
        storage_scale in 0.05f64..2.0,
        initial_frac in 0.0f64..1.0,
    ) {
        let mut s = defaults::scenario();
        s.storage_capacity_kg *= storage_scale;
        s.storage_initial_kg = initial_frac * s.storage_capacity_kg;
        let mut c = defaults::catalog();
        set_round_trip(&mut c, round_trip);
        let day = generate_synthetic_day(s.farm_count, seed);
        let decision = SizingDecision::reference(case, &s);
        let problem = DispatchProblem::new(&s, &c, &day, decision).unwrap();
        let r = solve_dispatch(&problem).unwrap();

        prop_assert!(r.day_revenue_usd >= -TOL);
        let mut prev = r.storage_initial_kg;
        for t in 0..r.hours() {
            let level = r.storage_kg[t];
            prop_assert!(level >= s.storage_min_kg - TOL && level <= s.storage_capacity_kg + TOL);
            let expected = prev + r.dt_hours * (r.storage_in_kgph[t] - r.storage_out_kgph[t]);
            prop_assert!((level - expected).abs() <= TOL * (1.0 + level.abs()), "balance at hour {t}");
            prev = level;
            prop_assert!(r.curtailed_mw[t] >= -TOL);
            prop_assert!(r.delivered_mw[t] >= -TOL);
            prop_assert!(r.storage_in_kgph[t] >= -TOL && r.storage_out_kgph[t] >= -TOL);
            prop_assert!(r.fuel_cell_mw[t] >= -TOL && r.booster_mw[t] >= -TOL);
        }
        prop_assert!(prev >= r.storage_initial_kg - TOL, "storage must not end below its start");

        for line in &r.lines {
            let limit = f64::from(line.count) * c.line.p_lim_mw;
            for (&p_in, &p_out) in line.p_in_mw.iter().zip(&line.p_out_mw) {
                prop_assert!(p_out >= -TOL && p_out <= limit + TOL);
                prop_assert!(p_in + TOL >= p_out, "a line cannot gain power");
            }
        }
        for pipe in &r.pipes {
            let spec = match pipe.leg { PipeLegId::Lp(_) => &c.pipeline_lp, PipeLegId::Hp => &c.pipeline_hp };
            let limit = f64::from(pipe.count) * spec.h_lim_kgph;
            for (&h, &p) in pipe.flow_kgph.iter().zip(&pipe.inlet_pressure_bar) {
                prop_assert!(h >= -TOL && h <= limit * (1.0 + 1e-9) + TOL);
                prop_assert!(p >= spec.outlet_pressure_bar - TOL && p <= spec.max_inlet_pressure_bar + TOL);
            }
        }
        for site in &r.sites {
            prop_assert!(site.electrolyzer_mw.iter().all(|&x| x >= -TOL));
            prop_assert!(site.h2_kgph.iter().all(|&x| x >= -TOL));
        }

        let report = verify_tightness(&r, &problem).unwrap();
        prop_assert!(report.is_tight(), "{:?}", report.violations);
    }

    #[test]
    fn more_wind_never_earns_less(case in case_strategy(), seed in 0u64..1_000, boost in 1.0f64..1.5) {
        let s = defaults::scenario();
        let c = defaults::catalog();
        let day = generate_synthetic_day(s.farm_count, seed);
        let mut windier = day.clone();
        for farm in &mut windier.wind_capacity_factor {
            for cf in farm.iter_mut() {
                *cf = (*cf * boost).min(1.0);
            }
        }
        let d = SizingDecision::reference(case, &s);
        let base = solve_dispatch(&DispatchProblem::new(&s, &c, &day, d.clone()).unwrap()).unwrap();
        let more = solve_dispatch(&DispatchProblem::new(&s, &c, &windier, d).unwrap()).unwrap();
        prop_assert!(more.day_revenue_usd >= base.day_revenue_usd * (1.0 - 1e-9) - TOL);
    }
}
