//! Built-in networks: small textbook cases for solver checks and the
//! `desk30` two-zone system used by the bundled scenario.

use crate::network::{
    Branch, Bus, BusKind, DemandKind, DemandResource, EssUnit, Generator, GeneratorKind, Intertie,
    IntertieDirection, Load, NetworkModel, ShuntBank, ShuntKind, Transformer, VoltageClass, Zone,
};

pub(crate) fn bus(id: &str, kv: f64, kind: BusKind, target: Option<f64>, class: VoltageClass) -> Bus {
    let (v_min, v_max) = match class {
        VoltageClass::High => (0.95, 1.05),
        VoltageClass::Low => (0.94, 1.06),
    };
    Bus {
        id: id.into(),
        base_kv: kv,
        kind,
        voltage_target: target,
        v_min,
        v_max,
        voltage_class: class,
        zone: None,
    }
}

pub(crate) fn line(id: &str, from: &str, to: &str, r: f64, x: f64, b: f64, limit: f64) -> Branch {
    Branch {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        resistance: r,
        reactance: x,
        charging_susceptance: b,
        thermal_limit: limit,
        switchable: false,
        in_service: true,
    }
}

pub(crate) fn transformer(id: &str, from: &str, to: &str, r: f64, x: f64) -> Transformer {
    Transformer {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        resistance: r,
        reactance: x,
        tap_min: 0.9,
        tap_max: 1.1,
        tap_step: 0.00625,
        tap_position: 0,
        regulated_bus: Some(to.into()),
        deadband: 0.01,
        thermal_limit: None,
    }
}

pub(crate) fn generator(id: &str, bus: &str, p_min: f64, p_max: f64, q_min: f64, q_max: f64) -> Generator {
    Generator {
        id: id.into(),
        bus: bus.into(),
        kind: GeneratorKind::Conventional,
        p_min,
        p_max,
        q_min,
        q_max,
        ramp_up: 20.0,
        ramp_down: 20.0,
        agc_participant: true,
        optimal_dispatch: 0.5 * (p_min + p_max),
        committed: true,
        startup_priority: 0,
    }
}

pub(crate) fn load(id: &str, bus: &str, p: f64, q: f64) -> Load {
    Load {
        id: id.into(),
        bus: bus.into(),
        p_mw: p,
        q_mvar: q,
    }
}

pub(crate) fn shunt(id: &str, bus: &str, kind: ShuntKind, step: f64, total: u32, on: u32) -> ShuntBank {
    ShuntBank {
        id: id.into(),
        bus: bus.into(),
        kind,
        step_mvar: step,
        steps_total: total,
        steps_on: on,
    }
}

/// Slack `B1` at 1.0 pu feeding load `B2` over a lossless `x = 0.1` line.
/// `p` and `q` are the per-unit load on a 100 MVA base.
pub fn two_bus(p: f64, q: f64) -> NetworkModel {
    let mut m = NetworkModel::new("two_bus", 100.0);
    m.buses.push(bus("B1", 230.0, BusKind::Slack, Some(1.0), VoltageClass::High));
    m.buses.push(bus("B2", 230.0, BusKind::Pq, None, VoltageClass::High));
    m.buses[1].v_min = 0.5;
    m.branches.push(line("L12", "B1", "B2", 0.0, 0.1, 0.0, 1000.0));
    m.loads.push(load("D2", "B2", p * 100.0, q * 100.0));
    m
}

/// Three buses joined pairwise by lossless `x = 0.1` lines, no load.
pub fn triangle_lossless() -> NetworkModel {
    let mut m = NetworkModel::new("triangle_lossless", 100.0);
    m.buses.push(bus("B1", 230.0, BusKind::Slack, Some(1.0), VoltageClass::High));
    m.buses.push(bus("B2", 230.0, BusKind::Pq, None, VoltageClass::High));
    m.buses.push(bus("B3", 230.0, BusKind::Pq, None, VoltageClass::High));
    m.branches.push(line("L12", "B1", "B2", 0.0, 0.1, 0.0, 1000.0));
    m.branches.push(line("L13", "B1", "B3", 0.0, 0.1, 0.0, 1000.0));
    m.branches.push(line("L23", "B2", "B3", 0.0, 0.1, 0.0, 1000.0));
    m
}

/// Triangle with a PV generator at `B2` and a load at `B3`.
pub fn triangle_pv() -> NetworkModel {
    let mut m = NetworkModel::new("triangle_pv", 100.0);
    m.buses.push(bus("B1", 230.0, BusKind::Slack, Some(1.02), VoltageClass::High));
    m.buses.push(bus("B2", 230.0, BusKind::Pv, Some(1.01), VoltageClass::High));
    m.buses.push(bus("B3", 230.0, BusKind::Pq, None, VoltageClass::High));
    m.branches.push(line("L12", "B1", "B2", 0.01, 0.1, 0.02, 500.0));
    m.branches.push(line("L13", "B1", "B3", 0.02, 0.12, 0.02, 500.0));
    m.branches.push(line("L23", "B2", "B3", 0.015, 0.08, 0.02, 500.0));
    let mut g1 = generator("G1", "B1", 0.0, 300.0, -200.0, 200.0);
    g1.optimal_dispatch = 0.0;
    m.generators.push(g1);
    let mut g2 = generator("G2", "B2", 0.0, 150.0, -100.0, 100.0);
    g2.optimal_dispatch = 60.0;
    g2.agc_participant = false;
    m.generators.push(g2);
    m.loads.push(load("D3", "B3", 120.0, 40.0));
    m
}

/// The classic five-bus Stagg–El-Abiad test system.
pub fn five_bus() -> NetworkModel {
    let mut m = NetworkModel::new("five_bus", 100.0);
    m.buses.push(bus("North", 138.0, BusKind::Slack, Some(1.06), VoltageClass::High));
    m.buses.push(bus("South", 138.0, BusKind::Pv, Some(1.0), VoltageClass::High));
    for id in ["Lake", "Main", "Elm"] {
        m.buses.push(bus(id, 138.0, BusKind::Pq, None, VoltageClass::High));
    }
    for b in &mut m.buses {
        b.v_min = 0.9;
        b.v_max = 1.1;
    }
    let data = [
        ("North", "South", 0.02, 0.06, 0.030),
        ("North", "Lake", 0.08, 0.24, 0.025),
        ("South", "Lake", 0.06, 0.18, 0.020),
        ("South", "Main", 0.06, 0.18, 0.020),
        ("South", "Elm", 0.04, 0.12, 0.015),
        ("Lake", "Main", 0.01, 0.03, 0.010),
        ("Main", "Elm", 0.08, 0.24, 0.025),
    ];
    for (f, t, r, x, half_b) in data {
        m.branches.push(line(&format!("{f}-{t}"), f, t, r, x, 2.0 * half_b, 300.0));
    }
    let mut g = generator("G-North", "North", 0.0, 300.0, -200.0, 300.0);
    g.optimal_dispatch = 0.0;
    m.generators.push(g);
    let mut g = generator("G-South", "South", 0.0, 100.0, -100.0, 300.0);
    g.optimal_dispatch = 40.0;
    g.agc_participant = false;
    m.generators.push(g);
    for (id, p, q) in [("South", 20.0, 10.0), ("Lake", 45.0, 15.0), ("Main", 40.0, 5.0), ("Elm", 60.0, 10.0)] {
        m.loads.push(load(&format!("D-{id}"), id, p, q));
    }
    m
}

/// The three-machine, nine-bus system with generator step-up transformers.
pub fn nine_bus() -> NetworkModel {
    let mut m = NetworkModel::new("nine_bus", 100.0);
    m.buses.push(bus("1", 16.5, BusKind::Slack, Some(1.04), VoltageClass::High));
    m.buses.push(bus("2", 18.0, BusKind::Pv, Some(1.025), VoltageClass::High));
    m.buses.push(bus("3", 13.8, BusKind::Pv, Some(1.025), VoltageClass::High));
    for i in 4..=9 {
        m.buses.push(bus(&i.to_string(), 230.0, BusKind::Pq, None, VoltageClass::High));
    }
    for b in &mut m.buses {
        b.v_min = 0.9;
        b.v_max = 1.1;
    }
    for (id, f, t, x) in [("T14", "4", "1", 0.0576), ("T27", "7", "2", 0.0625), ("T39", "9", "3", 0.0586)] {
        let mut tr = transformer(id, f, t, 0.0, x);
        tr.regulated_bus = None;
        m.transformers.push(tr);
    }
    let data = [
        ("4", "5", 0.01, 0.085, 0.176),
        ("4", "6", 0.017, 0.092, 0.158),
        ("5", "7", 0.032, 0.161, 0.306),
        ("6", "9", 0.039, 0.17, 0.358),
        ("7", "8", 0.0085, 0.072, 0.149),
        ("8", "9", 0.0119, 0.1008, 0.209),
    ];
    for (f, t, r, x, b) in data {
        m.branches.push(line(&format!("L{f}{t}"), f, t, r, x, b, 250.0));
    }
    let mut g1 = generator("G1", "1", 10.0, 250.0, -300.0, 300.0);
    g1.optimal_dispatch = 72.0;
    m.generators.push(g1);
    let mut g2 = generator("G2", "2", 10.0, 300.0, -300.0, 300.0);
    g2.optimal_dispatch = 163.0;
    g2.agc_participant = false;
    m.generators.push(g2);
    let mut g3 = generator("G3", "3", 10.0, 270.0, -300.0, 300.0);
    g3.optimal_dispatch = 85.0;
    g3.agc_participant = false;
    m.generators.push(g3);
    for (id, p, q) in [("5", 125.0, 50.0), ("6", 90.0, 30.0), ("8", 100.0, 35.0)] {
        m.loads.push(load(&format!("D{id}"), id, p, q));
    }
    m
}

/// Cases used for solver cross-checks, smallest first.
pub fn powerflow_cases() -> Vec<NetworkModel> {
    vec![two_bus(0.5, 0.0), triangle_pv(), five_bus(), nine_bus(), desk30()]
}

/// EHV buses of [`desk30`]: (id, kind, voltage target, zone).
const DESK30_EHV: [(&str, BusKind, f64, &str); 10] = [
    ("H1", BusKind::Slack, 1.03, "NonEast"),
    ("H2", BusKind::Pv, 1.03, "NonEast"),
    ("H3", BusKind::Pv, 1.02, "NonEast"),
    ("H4", BusKind::Pq, 1.02, "NonEast"),
    ("H5", BusKind::Pq, 1.02, "NonEast"),
    ("H6", BusKind::Pv, 1.02, "NonEast"),
    ("H7", BusKind::Pv, 1.02, "East"),
    ("H8", BusKind::Pq, 1.02, "East"),
    ("H9", BusKind::Pq, 1.02, "NonEast"),
    ("H10", BusKind::Pq, 1.02, "East"),
];

/// 25 kV load buses of [`desk30`]: (id, supplying EHV bus, peak MW).
pub const DESK30_LOADS: [(&str, &str, f64); 20] = [
    ("D1", "H4", 170.0),
    ("D2", "H4", 160.0),
    ("D3", "H4", 150.0),
    ("D4", "H5", 170.0),
    ("D5", "H5", 150.0),
    ("D6", "H5", 140.0),
    ("D7", "H6", 170.0),
    ("D8", "H6", 160.0),
    ("D9", "H6", 130.0),
    ("D10", "H7", 160.0),
    ("D11", "H7", 150.0),
    ("D12", "H7", 140.0),
    ("D13", "H10", 150.0),
    ("D14", "H10", 140.0),
    ("D15", "H8", 130.0),
    ("D16", "H8", 120.0),
    ("D17", "H9", 140.0),
    ("D18", "H9", 130.0),
    ("D19", "H2", 150.0),
    ("D20", "H3", 150.0),
];

/// Synthetic two-zone transmission system: a 735 kV backbone of ten buses
/// with hydro plants in the west, wind in the east, and twenty 25 kV load
/// buses behind tap-changing transformers. Loads are set at their peak.
pub fn desk30() -> NetworkModel {
    let mut m = NetworkModel::new("desk30", 100.0);
    m.zones.push(Zone {
        name: "East".into(),
        description: Some("wind-rich eastern zone".into()),
    });
    m.zones.push(Zone {
        name: "NonEast".into(),
        description: Some("hydro-dominated remainder".into()),
    });
    for (id, kind, target, zone) in DESK30_EHV {
        let mut b = bus(id, 735.0, kind, Some(target), VoltageClass::High);
        b.zone = Some(zone.into());
        m.buses.push(b);
    }
    for (id, feeder, _) in DESK30_LOADS {
        let zone = m.buses.iter().find(|b| b.id == feeder).and_then(|b| b.zone.clone());
        let mut b = bus(id, 25.0, BusKind::Pq, Some(1.0), VoltageClass::Low);
        b.zone = zone;
        m.buses.push(b);
    }

    let lines = [
        ("L1", "H1", "H4", 0.020, false),
        ("L2", "H1", "H4", 0.020, false),
        ("L3", "H2", "H4", 0.025, false),
        ("L4", "H4", "H5", 0.015, false),
        ("L5", "H4", "H5", 0.015, true),
        ("L6", "H3", "H5", 0.030, false),
        ("L7", "H5", "H6", 0.015, false),
        ("L8", "H4", "H6", 0.020, true),
        ("L9", "H6", "H7", 0.020, false),
        ("L10", "H7", "H8", 0.025, false),
        ("L11", "H7", "H8", 0.025, true),
        ("L12", "H8", "H9", 0.030, false),
        ("L13", "H9", "H10", 0.020, false),
        ("L14", "H10", "H7", 0.020, false),
        ("L15", "H5", "H10", 0.030, true),
        ("L16", "H3", "H9", 0.035, false),
    ];
    for (id, f, t, x, switchable) in lines {
        let mut l = line(id, f, t, x / 25.0, x, 50.0 * x, 2500.0);
        l.switchable = switchable;
        m.branches.push(l);
    }
    for (id, feeder, _) in DESK30_LOADS {
        let mut t = transformer(&format!("T{}", &id[1..]), feeder, id, 0.002, 0.04);
        t.thermal_limit = Some(300.0);
        t.tap_position = 0;
        m.transformers.push(t);
    }

    let ehv_shunts = [
        ("R4", "H4", ShuntKind::Reactor, 3, 1),
        ("R5", "H5", ShuntKind::Reactor, 2, 1),
        ("C5", "H5", ShuntKind::Capacitor, 2, 0),
        ("C6", "H6", ShuntKind::Capacitor, 2, 0),
        ("R8", "H8", ShuntKind::Reactor, 3, 2),
        ("R9", "H9", ShuntKind::Reactor, 2, 1),
        ("R10", "H10", ShuntKind::Reactor, 2, 1),
    ];
    for (id, b, kind, total, on) in ehv_shunts {
        m.shunts.push(shunt(id, b, kind, 100.0, total, on));
    }
    for id in ["D2", "D5", "D8", "D11", "D14", "D17", "D20"] {
        m.shunts.push(shunt(&format!("C{id}"), id, ShuntKind::Capacitor, 25.0, 3, 1));
    }

    // Hydro plants of identical 400 MW units; one unit per plant starts
    // committed-first so every plant keeps regulating its bus.
    let plants = [("H1", 5), ("H2", 3), ("H3", 2)];
    let priority_order = ["G1a", "G2a", "G3a", "G1b", "G2b", "G1c", "G3b", "G1d", "G2c", "G1e"];
    for (plant, units) in plants {
        for k in 0..units {
            let id = format!("G{}{}", &plant[1..], (b'a' + k as u8) as char);
            let mut g = generator(&id, plant, 50.0, 400.0, -150.0, 200.0);
            g.optimal_dispatch = 250.0;
            g.startup_priority = priority_order.iter().position(|p| *p == id).unwrap() as u32 + 1;
            g.committed = g.startup_priority <= 9;
            m.generators.push(g);
        }
    }
    for (id, b) in [("SC6", "H6"), ("SC7", "H7")] {
        let mut g = generator(id, b, 0.0, 0.0, -250.0, 300.0);
        g.kind = GeneratorKind::Compensator;
        g.agc_participant = false;
        g.optimal_dispatch = 0.0;
        g.ramp_up = 0.0;
        g.ramp_down = 0.0;
        m.generators.push(g);
    }
    for (id, b, cap) in [("W8", "H8", 800.0), ("W9", "H9", 600.0)] {
        let mut g = generator(id, b, 0.0, cap, 0.0, 0.0);
        g.kind = GeneratorKind::Wind;
        g.agc_participant = false;
        g.optimal_dispatch = 0.0;
        g.ramp_up = 0.0;
        g.ramp_down = 0.0;
        m.generators.push(g);
    }

    for (id, _, peak) in DESK30_LOADS {
        m.loads.push(load(&format!("LD{}", &id[1..]), id, peak, 0.3 * peak));
    }

    m.ess.push(EssUnit {
        id: "BESS-E".into(),
        bus: "H8".into(),
        zone: "East".into(),
        power_capacity: 172.0,
        energy_capacity: 688.0,
        soc: 50.0,
        soc_balance: 50.0,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
    });
    m.ess.push(EssUnit {
        id: "BESS-W".into(),
        bus: "H9".into(),
        zone: "NonEast".into(),
        power_capacity: 128.0,
        energy_capacity: 512.0,
        soc: 50.0,
        soc_balance: 50.0,
        charge_efficiency: 1.0,
        discharge_efficiency: 1.0,
    });

    m.interties.push(Intertie {
        id: "IMP-NE".into(),
        bus: "H10".into(),
        direction: IntertieDirection::Import,
        schedule_limit_min: 0.0,
        schedule_limit_max: 1200.0,
        current_schedule: 400.0,
    });
    m.interties.push(Intertie {
        id: "EXP-W".into(),
        bus: "H3".into(),
        direction: IntertieDirection::Export,
        schedule_limit_min: 0.0,
        schedule_limit_max: 1000.0,
        current_schedule: 300.0,
    });

    let demand = [
        ("IDR1", "D3", DemandKind::InterruptibleDemand, 100.0, 2, 24),
        ("IDR2", "D11", DemandKind::InterruptibleDemand, 80.0, 1, 12),
        ("CVR1", "D5", DemandKind::VoltageReductionBlock, 40.0, 0, 1),
        ("CVR2", "D12", DemandKind::VoltageReductionBlock, 40.0, 0, 1),
    ];
    for (id, b, kind, cap, delay, dur) in demand {
        m.demand_resources.push(DemandResource {
            id: id.into(),
            bus: b.into(),
            kind,
            capacity: cap,
            activation_delay: delay,
            max_duration: dur,
            active: false,
        });
    }
    m
}
