use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BusKind, GeneratorKind, NetworkModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnresolvedReference,
    DuplicateId,
    LimitInversion,
    InvalidValue,
    LoadIslandWithoutSlack,
    MultipleSlack,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::UnresolvedReference => "unresolved reference",
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::LimitInversion => "limit inversion",
            ViolationKind::InvalidValue => "invalid value",
            ViolationKind::LoadIslandWithoutSlack => "load island without slack",
            ViolationKind::MultipleSlack => "multiple slack buses in island",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending element, as `section/id`.
    pub element: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn push(&mut self, kind: ViolationKind, element: String, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            element,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {} [{}]: {}", v.element, v.kind, v.message)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    report: ValidationReport,
    buses: HashMap<&'a str, usize>,
}

impl<'a> Checker<'a> {
    fn bus_ref(&mut self, element: &str, field: &str, bus: &str) -> Option<usize> {
        let found = self.buses.get(bus).copied();
        if found.is_none() {
            self.report.push(
                ViolationKind::UnresolvedReference,
                element.to_string(),
                format!("{field} `{bus}` is not a defined bus"),
            );
        }
        found
    }

    fn require(&mut self, ok: bool, kind: ViolationKind, element: &str, message: impl Into<String>) {
        if !ok {
            self.report.push(kind, element.to_string(), message);
        }
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for id in ids {
        if !seen.insert(id) {
            dups.push(id);
        }
    }
    dups
}

/// Checks a model for dangling references, limit inversions, invalid
/// values and islands that carry load without a slack bus.
///
/// The report is empty iff the model can be compiled into a [`super::Grid`].
pub fn validate(model: &NetworkModel) -> ValidationReport {
    let mut c = Checker {
        report: ValidationReport::default(),
        buses: HashMap::new(),
    };
    use ViolationKind::*;

    c.require(
        model.system_base_mva > 0.0 && model.system_base_mva.is_finite(),
        InvalidValue,
        "model",
        "system_base_mva must be positive",
    );
    c.require(!model.buses.is_empty(), InvalidValue, "model", "no buses defined");

    macro_rules! dup_check {
        ($section:literal, $items:expr) => {
            for d in duplicates($items.iter().map(|x| x.id.as_str())) {
                c.report
                    .push(DuplicateId, format!("{}/{}", $section, d), "identifier appears more than once");
            }
        };
    }
    dup_check!("buses", model.buses);
    dup_check!("branches", model.branches);
    dup_check!("transformers", model.transformers);
    dup_check!("shunts", model.shunts);
    dup_check!("generators", model.generators);
    dup_check!("loads", model.loads);
    dup_check!("ess", model.ess);
    dup_check!("interties", model.interties);
    dup_check!("demand_resources", model.demand_resources);

    for (i, b) in model.buses.iter().enumerate() {
        c.buses.entry(b.id.as_str()).or_insert(i);
    }
    let zone_names: HashSet<&str> = model.zones.iter().map(|z| z.name.as_str()).collect();

    for b in &model.buses {
        let el = format!("buses/{}", b.id);
        c.require(b.base_kv > 0.0, InvalidValue, &el, "base_kv must be positive");
        c.require(b.v_min < b.v_max, LimitInversion, &el, "v_min must be below v_max");
        match b.voltage_target {
            Some(t) => c.require(
                b.v_min < t && t <= b.v_max,
                LimitInversion,
                &el,
                format!("voltage_target {t} outside ({}, {}]", b.v_min, b.v_max),
            ),
            None => c.require(
                b.kind == BusKind::Pq,
                InvalidValue,
                &el,
                "slack and PV buses need a voltage_target",
            ),
        }
        if let Some(z) = &b.zone {
            if !model.zones.is_empty() {
                c.require(
                    zone_names.contains(z.as_str()),
                    UnresolvedReference,
                    &el,
                    format!("zone `{z}` is not defined"),
                );
            }
        }
    }

    for br in &model.branches {
        let el = format!("branches/{}", br.id);
        c.bus_ref(&el, "from_bus", &br.from_bus);
        c.bus_ref(&el, "to_bus", &br.to_bus);
        c.require(br.from_bus != br.to_bus, InvalidValue, &el, "from_bus equals to_bus");
        c.require(br.reactance != 0.0, InvalidValue, &el, "reactance must be non-zero");
        c.require(br.thermal_limit > 0.0, InvalidValue, &el, "thermal_limit must be positive");
    }

    for t in &model.transformers {
        let el = format!("transformers/{}", t.id);
        c.bus_ref(&el, "from_bus", &t.from_bus);
        c.bus_ref(&el, "to_bus", &t.to_bus);
        if let Some(r) = &t.regulated_bus {
            c.bus_ref(&el, "regulated_bus", r);
        }
        c.require(t.from_bus != t.to_bus, InvalidValue, &el, "from_bus equals to_bus");
        c.require(t.reactance != 0.0, InvalidValue, &el, "reactance must be non-zero");
        c.require(t.tap_step > 0.0, InvalidValue, &el, "tap_step must be positive");
        c.require(t.deadband > 0.0, InvalidValue, &el, "deadband must be positive");
        c.require(t.tap_min <= t.tap_max, LimitInversion, &el, "tap_min above tap_max");
        let ratio = t.ratio(t.tap_position);
        c.require(
            t.tap_min - 1e-12 <= ratio && ratio <= t.tap_max + 1e-12,
            LimitInversion,
            &el,
            format!("tap ratio {ratio} outside [{}, {}]", t.tap_min, t.tap_max),
        );
    }

    for s in &model.shunts {
        let el = format!("shunts/{}", s.id);
        c.bus_ref(&el, "bus", &s.bus);
        c.require(s.steps_on <= s.steps_total, LimitInversion, &el, "steps_on exceeds steps_total");
        c.require(s.step_mvar > 0.0, InvalidValue, &el, "step_mvar must be positive");
    }

    for g in &model.generators {
        let el = format!("generators/{}", g.id);
        c.bus_ref(&el, "bus", &g.bus);
        c.require(g.p_min <= g.p_max, LimitInversion, &el, "p_min above p_max");
        c.require(g.q_min <= g.q_max, LimitInversion, &el, "q_min above q_max");
        if g.kind == GeneratorKind::Conventional {
            c.require(
                g.p_min <= g.optimal_dispatch && g.optimal_dispatch <= g.p_max,
                LimitInversion,
                &el,
                "optimal_dispatch outside [p_min, p_max]",
            );
        }
        c.require(g.ramp_up >= 0.0 && g.ramp_down >= 0.0, InvalidValue, &el, "ramp rates must be non-negative");
    }

    for l in &model.loads {
        let el = format!("loads/{}", l.id);
        c.bus_ref(&el, "bus", &l.bus);
    }

    for e in &model.ess {
        let el = format!("ess/{}", e.id);
        c.bus_ref(&el, "bus", &e.bus);
        if !model.zones.is_empty() {
            c.require(
                zone_names.contains(e.zone.as_str()),
                UnresolvedReference,
                &el,
                format!("zone `{}` is not defined", e.zone),
            );
        }
        c.require((0.0..=100.0).contains(&e.soc), InvalidValue, &el, "soc outside [0, 100]");
        c.require(
            e.soc_balance > 0.0 && e.soc_balance < 100.0,
            InvalidValue,
            &el,
            "soc_balance outside (0, 100)",
        );
        c.require(
            e.charge_efficiency > 0.0
                && e.charge_efficiency <= 1.0
                && e.discharge_efficiency > 0.0
                && e.discharge_efficiency <= 1.0,
            InvalidValue,
            &el,
            "efficiencies must lie in (0, 1]",
        );
        c.require(
            e.power_capacity > 0.0 && e.energy_capacity > 0.0,
            InvalidValue,
            &el,
            "capacities must be positive",
        );
    }

    for it in &model.interties {
        let el = format!("interties/{}", it.id);
        c.bus_ref(&el, "bus", &it.bus);
        c.require(
            it.schedule_limit_min <= it.current_schedule && it.current_schedule <= it.schedule_limit_max,
            LimitInversion,
            &el,
            "current_schedule outside schedule limits",
        );
    }

    for d in &model.demand_resources {
        let el = format!("demand_resources/{}", d.id);
        c.bus_ref(&el, "bus", &d.bus);
        c.require(d.capacity > 0.0, InvalidValue, &el, "capacity must be positive");
    }

    check_islands(model, &mut c);
    c.report
}

/// Walks the in-service topology and reports islands that carry load but
/// no slack bus, and islands with more than one slack bus.
fn check_islands(model: &NetworkModel, c: &mut Checker<'_>) {
    let n = model.buses.len();
    if n == 0 {
        return;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let edges = model
        .branches
        .iter()
        .filter(|b| b.in_service)
        .map(|b| (b.from_bus.as_str(), b.to_bus.as_str()))
        .chain(model.transformers.iter().map(|t| (t.from_bus.as_str(), t.to_bus.as_str())));
    for (f, t) in edges {
        if let (Some(&i), Some(&j)) = (c.buses.get(f), c.buses.get(t)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let islands = components(&adj);

    let mut loaded = vec![false; n];
    for l in &model.loads {
        if let Some(&i) = c.buses.get(l.bus.as_str()) {
            loaded[i] = true;
        }
    }
    for island in islands {
        let slacks = island
            .iter()
            .filter(|&&i| model.buses[i].kind == BusKind::Slack)
            .count();
        let names: Vec<&str> = island.iter().map(|&i| model.buses[i].id.as_str()).collect();
        if slacks == 0 && island.iter().any(|&i| loaded[i]) {
            c.report.push(
                ViolationKind::LoadIslandWithoutSlack,
                format!("buses/{}", names[0]),
                format!("island {{{}}} carries load but has no slack bus", names.join(", ")),
            );
        } else if slacks > 1 {
            c.report.push(
                ViolationKind::MultipleSlack,
                format!("buses/{}", names[0]),
                format!("island {{{}}} has {slacks} slack buses", names.join(", ")),
            );
        }
    }
}

/// Connected components by breadth-first search, each sorted ascending,
/// ordered by their smallest member.
pub(crate) fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
