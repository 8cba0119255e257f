use chrono::NaiveDate;
use proptest::prelude::*;

use super::*;
use crate::network::EssUnit;

fn limits(min: f64, max: f64) -> GenerationLimits {
    GenerationLimits {
        zone: "East".into(),
        period: 1,
        mu: 0.5 * (min + max),
        sigma: (max - min) / 3.0,
        gen_max_lim: max,
        gen_min_lim: min,
    }
}

fn unit(power: f64, energy: f64) -> EssUnit {
    EssUnit {
        id: "B".into(),
        bus: "H".into(),
        zone: "East".into(),
        power_capacity: power,
        energy_capacity: energy,
        soc: 50.0,
        soc_balance: 50.0,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
    }
}

#[test]
fn truth_table() {
    use Classification::{None as N, SocBalancing as B, VariabilityMitigation as V};
    use EssMode::{Charging as C, Discharging as D, Standby as S};
    let lim = limits(200.0, 800.0);
    // (gen, in_peak, soc) -> (mode, classification); balance is 50.
    #[rustfmt::skip]
    let table: [(f64, bool, f64, EssMode, Classification); 30] = [
        (100.0, true, 40.0, D, V), (100.0, true, 50.0, D, V), (100.0, true, 60.0, D, V),
        (100.0, false, 40.0, D, V), (100.0, false, 50.0, D, V), (100.0, false, 60.0, D, V),
        (200.0, true, 40.0, D, V), (200.0, true, 50.0, D, V), (200.0, true, 60.0, D, V),
        (200.0, false, 40.0, D, V), (200.0, false, 50.0, D, V), (200.0, false, 60.0, D, V),
        (500.0, true, 40.0, C, B), (500.0, true, 50.0, S, N), (500.0, true, 60.0, D, B),
        (500.0, false, 40.0, C, B), (500.0, false, 50.0, S, N), (500.0, false, 60.0, D, B),
        (800.0, true, 40.0, S, N), (800.0, true, 50.0, S, N), (800.0, true, 60.0, S, N),
        (800.0, false, 40.0, C, V), (800.0, false, 50.0, C, V), (800.0, false, 60.0, C, V),
        (900.0, true, 40.0, S, N), (900.0, true, 50.0, S, N), (900.0, true, 60.0, S, N),
        (900.0, false, 40.0, C, V), (900.0, false, 50.0, C, V), (900.0, false, 60.0, C, V),
    ];
    let mut mismatches = 0;
    for (gen, peak, soc, mode, class) in table {
        let d = select_mode(gen, &lim, soc, 50.0, peak, PeakRule::SurplusOnly);
        if d.mode != mode || d.classification != class {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn listed_examples() {
    let lim = limits(200.0, 800.0);
    let d = select_mode(900.0, &lim, 50.0, 50.0, true, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.branch), (EssMode::Standby, ModeBranch::SurplusInPeak));
    let d = select_mode(900.0, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.classification), (EssMode::Charging, Classification::VariabilityMitigation));
    let d = select_mode(100.0, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.classification), (EssMode::Discharging, Classification::VariabilityMitigation));
    let d = select_mode(500.0, &lim, 40.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.classification), (EssMode::Charging, Classification::SocBalancing));
    let d = select_mode(500.0, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.branch), (EssMode::Standby, ModeBranch::AtBalance));
}

#[test]
fn non_finite_input_is_standby() {
    let lim = limits(200.0, 800.0);
    let d = select_mode(f64::NAN, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!((d.mode, d.branch), (EssMode::Standby, ModeBranch::Undefined));
}

#[test]
fn peak_rule_flag_blocks_balancing_charge() {
    let lim = limits(200.0, 800.0);
    let d = select_mode(500.0, &lim, 40.0, 50.0, true, PeakRule::AllCharging);
    assert_eq!((d.mode, d.branch), (EssMode::Standby, ModeBranch::BalancingInPeak));
    let d = select_mode(500.0, &lim, 60.0, 50.0, true, PeakRule::AllCharging);
    assert_eq!(d.mode, EssMode::Discharging);
}

#[test]
fn surplus_charge_and_energy_caps() {
    let lim = limits(200.0, 800.0);
    let u = unit(860.0, 3440.0);
    let d = select_mode(900.0, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!(dispatch_power(&d, 900.0, &lim, &u, 50.0, 5), (100.0, CapKind::None));
    // 20 MWh of headroom over 5 minutes allows 240 MW; 5 MWh allows 60 MW.
    let soc_20 = 100.0 - 20.0 / 3440.0 * 100.0;
    let (p, cap) = dispatch_power(&d, 900.0, &lim, &u, soc_20, 5);
    assert!((p - 100.0).abs() < 1e-9 && cap == CapKind::None);
    let soc_5 = 100.0 - 5.0 / 3440.0 * 100.0;
    let (p, cap) = dispatch_power(&d, 900.0, &lim, &u, soc_5, 5);
    assert!((p - 60.0).abs() < 1e-9);
    assert_eq!(cap, CapKind::Energy);
}

#[test]
fn balancing_charge_hits_power_rating() {
    let lim = limits(200.0, 2000.0);
    let u = unit(860.0, 3440.0);
    let d = select_mode(1500.0, &lim, 40.0, 50.0, false, PeakRule::SurplusOnly);
    // 344 MWh needed, 71.67 MWh possible per 5-minute step.
    assert_eq!(dispatch_power(&d, 1500.0, &lim, &u, 40.0, 5), (860.0, CapKind::Power));
}

#[test]
fn balancing_stays_inside_band() {
    let lim = limits(200.0, 800.0);
    let u = unit(860.0, 3440.0);
    let d = select_mode(500.0, &lim, 40.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!(dispatch_power(&d, 500.0, &lim, &u, 40.0, 5), (300.0, CapKind::Band));
    let d = select_mode(780.0, &lim, 60.0, 50.0, false, PeakRule::SurplusOnly);
    let (p, cap) = dispatch_power(&d, 780.0, &lim, &u, 60.0, 5);
    assert!((p - 20.0).abs() < 1e-9 && cap == CapKind::Band);
}

#[test]
fn shortage_discharge_target() {
    let lim = limits(200.0, 800.0);
    let u = unit(860.0, 3440.0);
    let d = select_mode(150.0, &lim, 50.0, 50.0, false, PeakRule::SurplusOnly);
    assert_eq!(dispatch_power(&d, 150.0, &lim, &u, 50.0, 5), (50.0, CapKind::None));
}

#[test]
fn soc_updates() {
    let u = unit(860.0, 3440.0);
    assert_eq!(update_soc(&u, 50.0, 0.0, 60), (50.0, false));
    let (s, c) = update_soc(&u, 50.0, -860.0, 60);
    assert!((s - 75.0).abs() < 1e-12 && !c);
    assert_eq!(update_soc(&u, 1.0, 860.0, 60), (0.0, true));
}

#[test]
fn efficiencies_enter_both_directions() {
    let mut u = unit(100.0, 1000.0);
    u.charge_efficiency = 0.9;
    u.discharge_efficiency = 0.8;
    let (s, _) = update_soc(&u, 50.0, -100.0, 60);
    assert!((s - 59.0).abs() < 1e-12);
    let (s, _) = update_soc(&u, 50.0, 80.0, 60);
    assert!((s - 40.0).abs() < 1e-12);
}

#[test]
fn ledger_buckets_and_ratio() {
    let day = NaiveDate::from_ymd_opt(2035, 1, 1).unwrap();
    let mut l = EnergyLedger::default();
    let standby = EssDecision {
        mode: EssMode::Standby,
        power: 0.0,
        classification: Classification::None,
        branch: ModeBranch::AtBalance,
    };
    l.accumulate("B", day, &standby, 0.0, 5);
    assert!(l.days.is_empty());
    let charge = EssDecision {
        mode: EssMode::Charging,
        power: -100.0,
        classification: Classification::VariabilityMitigation,
        branch: ModeBranch::Surplus,
    };
    l.accumulate("B", day, &charge, -100.0, 5);
    let b = l.window(Some("B"), day, day);
    assert!((b.charge_mitigation - 100.0 / 12.0).abs() < 1e-12);

    let buckets = EnergyBuckets {
        charge_mitigation: 40.0,
        discharge_mitigation: 30.0,
        charge_balancing: 30.0,
        discharge_balancing: 0.0,
    };
    assert!((buckets.marketable_ratio().unwrap() - 0.7).abs() < 1e-12);
    assert_eq!(EnergyBuckets::default().marketable_ratio(), None);
}

proptest! {
    #[test]
    fn soc_stays_bounded_and_energy_balances(
        gens in proptest::collection::vec(0.0f64..1000.0, 1..300),
        soc0 in 0.0f64..100.0,
        eff_c in 0.7f64..1.0,
        eff_d in 0.7f64..1.0,
        peak_mask in proptest::collection::vec(any::<bool>(), 300),
    ) {
        let lim = limits(300.0, 700.0);
        let mut u = unit(150.0, 600.0);
        u.charge_efficiency = eff_c;
        u.discharge_efficiency = eff_d;
        let mut soc = soc0;
        let (mut charged, mut discharged) = (0.0, 0.0);
        for (k, &g) in gens.iter().enumerate() {
            let s = step_unit(&u, soc, g, &lim, peak_mask[k], PeakRule::SurplusOnly, 5);
            prop_assert!((0.0..=100.0).contains(&s.soc_after));
            prop_assert!(s.decision.power.abs() <= u.power_capacity + 1e-12);
            if peak_mask[k] {
                prop_assert!(!(s.decision.mode == EssMode::Charging
                    && s.decision.classification == Classification::VariabilityMitigation));
            }
            let e = s.decision.power.abs() / 12.0;
            match s.decision.mode {
                EssMode::Charging => charged += e * eff_c,
                EssMode::Discharging => discharged += e / eff_d,
                EssMode::Standby => {}
            }
            soc = s.soc_after;
        }
        let stored = (soc - soc0) / 100.0 * u.energy_capacity;
        prop_assert!((stored - (charged - discharged)).abs() < 1e-9);
    }

    #[test]
    fn uncapped_dispatch_lands_inside_limits(g in 0.0f64..1000.0, soc in 10.0f64..90.0) {
        let lim = limits(300.0, 700.0);
        let u = unit(1000.0, 100_000.0);
        let s = step_unit(&u, soc, g, &lim, false, PeakRule::SurplusOnly, 5);
        if s.decision.classification != Classification::None && s.cap == CapKind::None || s.cap == CapKind::Band {
            let net = g + s.decision.power;
            prop_assert!(net >= lim.gen_min_lim - 1e-9 && net <= lim.gen_max_lim + 1e-9);
        }
    }
}
