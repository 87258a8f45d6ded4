//! Four-layer intermodal network: walking, autonomous-vehicle roads,
//! micromobility roads, and transit, connected by mode-switch arcs.
//!
//! The graph is loaded from a JSON file, filtered for AV-admissible arcs,
//! annotated with per-arc travel times and speeds, and then frozen. All
//! downstream consumers treat the built network as immutable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("arc {tail:?} -> {head:?} references unknown node {missing:?}")]
    UnknownNode { tail: String, head: String, missing: String },
    #[error("arc {tail:?} -> {head:?}: {kind:?} arc requires field {field}")]
    MissingField { tail: String, head: String, kind: ArcKind, field: &'static str },
    #[error("arc {tail:?} -> {head:?}: {kind:?} arc between layers {from:?} and {to:?} is not allowed")]
    LayerMismatch { tail: String, head: String, kind: ArcKind, from: Layer, to: Layer },
    #[error("boarding arc {tail:?} -> {head:?} has no station frequency and no default is set")]
    MissingFrequency { tail: String, head: String },
    #[error("AV speed {speed} mph falls outside the energy table")]
    SpeedOutsideTable { speed: f64 },
    #[error("arc {tail:?} -> {head:?} has non-positive travel time {time} s")]
    NonPositiveTime { tail: String, head: String, time: f64 },
    #[error("request {origin:?} -> {destination:?}: {problem}")]
    BadRequest { origin: String, destination: String, problem: String },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Walk,
    RoadAV,
    RoadMM,
    Transit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcKind {
    Walk,
    RoadAV,
    RoadMM,
    Transit,
    ModeSwitch,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub layer: Layer,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub kind: ArcKind,
    pub length_miles: Option<f64>,
    pub limit_av_mph: Option<f64>,
    pub limit_mm_mph: Option<f64>,
    pub capacity_vph: Option<f64>,
    pub baseline_vph: Option<f64>,
    pub transit_time_s: Option<f64>,
    pub station_frequency_per_min: Option<f64>,
    /// Realized speed on road arcs, min(achievable, limit); set by
    /// `compute_travel_times`.
    pub speed_mph: Option<f64>,
    /// Set by `compute_travel_times`; zero until then.
    pub travel_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    index: BTreeMap<String, usize>,
}

// ---------------------------------------------------------------------------
// File formats. Unknown fields are rejected so typos fail loudly.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    layer: Layer,
    x: f64,
    y: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcRecord {
    tail: String,
    head: String,
    kind: ArcKind,
    #[serde(default)]
    length_miles: Option<f64>,
    #[serde(default)]
    limit_av_mph: Option<f64>,
    #[serde(default)]
    limit_mm_mph: Option<f64>,
    #[serde(default)]
    capacity_vph: Option<f64>,
    #[serde(default)]
    baseline_vph: Option<f64>,
    #[serde(default)]
    transit_time_s: Option<f64>,
    #[serde(default)]
    station_frequency_per_min: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    nodes: Vec<NodeRecord>,
    arcs: Vec<ArcRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelRequest {
    pub origin: String,
    pub destination: String,
    pub rate_per_hour: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSet {
    pub requests: Vec<TravelRequest>,
}

impl DemandSet {
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn alpha_tot(&self) -> f64 {
        self.requests.iter().map(|r| r.rate_per_hour).sum()
    }

    /// Partial order on demand sets: `self <= other` iff every request of
    /// `self` appears in `other` (same origin/destination) with rate at least
    /// as large.
    pub fn le(&self, other: &DemandSet) -> bool {
        self.requests.iter().all(|r| {
            other
                .requests
                .iter()
                .any(|s| s.origin == r.origin && s.destination == r.destination && s.rate_per_hour >= r.rate_per_hour)
        })
    }

    pub fn validate(&self, network: &Network) -> Result<(), NetworkError> {
        for r in &self.requests {
            let check = |id: &str| -> Result<(), NetworkError> {
                match network.node(id) {
                    Some(n) if n.layer == Layer::Walk => Ok(()),
                    Some(_) => Err(NetworkError::BadRequest {
                        origin: r.origin.clone(),
                        destination: r.destination.clone(),
                        problem: format!("node {id:?} is not on the Walk layer"),
                    }),
                    None => Err(NetworkError::BadRequest {
                        origin: r.origin.clone(),
                        destination: r.destination.clone(),
                        problem: format!("unknown node {id:?}"),
                    }),
                }
            };
            check(&r.origin)?;
            check(&r.destination)?;
            if r.origin == r.destination {
                return Err(NetworkError::BadRequest {
                    origin: r.origin.clone(),
                    destination: r.destination.clone(),
                    problem: "origin equals destination".into(),
                });
            }
            if !(r.rate_per_hour > 0.0) {
                return Err(NetworkError::BadRequest {
                    origin: r.origin.clone(),
                    destination: r.destination.clone(),
                    problem: format!("rate must be positive, got {}", r.rate_per_hour),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parameters.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkParams {
    pub walk_speed_mph: f64,
    /// Fraction of the speed limit the AV must be able to sustain for an arc
    /// to stay in the road network.
    pub beta: f64,
    pub t_ws_s: f64,
    pub t_wv_s: f64,
    pub t_vw_s: f64,
    pub t_wm_s: f64,
    pub t_mw_s: f64,
    pub t_sw_s: f64,
    /// Default station frequency (departures per minute) where the arc does
    /// not carry its own.
    pub phi_base_per_min: f64,
    /// Frequency multiplier from the subway design (train fleet scaling).
    pub phi_scale: f64,
    /// AV achievable speed, mph.
    pub v_v_a_mph: f64,
    /// Micromobility achievable speed, mph.
    pub v_m_a_mph: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            walk_speed_mph: 3.1,
            beta: 1.0 / 1.3,
            t_ws_s: 60.0,
            t_wv_s: 300.0,
            t_vw_s: 60.0,
            t_wm_s: 60.0,
            t_mw_s: 60.0,
            t_sw_s: 60.0,
            phi_base_per_min: 1.0 / 6.0,
            phi_scale: 1.0,
            v_v_a_mph: 30.0,
            v_m_a_mph: 15.0,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(NetworkError::BadParam(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.walk_speed_mph > 0.0) {
            return Err(NetworkError::BadParam("walk speed must be positive".into()));
        }
        for (name, t) in [
            ("t_ws_s", self.t_ws_s),
            ("t_wv_s", self.t_wv_s),
            ("t_vw_s", self.t_vw_s),
            ("t_wm_s", self.t_wm_s),
            ("t_mw_s", self.t_mw_s),
            ("t_sw_s", self.t_sw_s),
        ] {
            if t < 0.0 {
                return Err(NetworkError::BadParam(format!("{name} must be >= 0, got {t}")));
            }
        }
        if !(self.phi_base_per_min > 0.0) || !(self.phi_scale > 0.0) {
            return Err(NetworkError::BadParam("station frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Energy and emission factors for road vehicles and trains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyModel {
    /// 5 mph speed buckets (bucket center, kJ per mile) for AV arcs.
    pub av_energy_per_mile: Vec<(f64, f64)>,
    /// Flat kJ per mile for micromobility arcs.
    pub mm_energy_per_mile: f64,
    /// Grams of CO2 per kJ.
    pub gamma_g_per_kj: f64,
    /// kg of CO2 per train per year.
    pub train_emissions_kg_per_year: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        // Flat consumption across buckets; overridable per scenario.
        let av = (1..=12).map(|k| (5.0 * k as f64, 900.0)).collect();
        EnergyModel {
            av_energy_per_mile: av,
            mm_energy_per_mile: 50.0,
            gamma_g_per_kj: 0.14,
            train_emissions_kg_per_year: 140_000.0,
        }
    }
}

impl EnergyModel {
    /// kJ/mile for an AV travelling at `speed_mph`, via the nearest bucket.
    pub fn av_rate(&self, speed_mph: f64) -> Result<f64, NetworkError> {
        self.av_energy_per_mile
            .iter()
            .find(|(b, _)| (b - speed_mph).abs() <= 2.5)
            .map(|&(_, e)| e)
            .ok_or(NetworkError::SpeedOutsideTable { speed: speed_mph })
    }
}

// ---------------------------------------------------------------------------
// Construction and operations.

impl Network {
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let mut nodes = Vec::with_capacity(file.nodes.len());
        let mut index = BTreeMap::new();
        for rec in file.nodes {
            if index.contains_key(&rec.id) {
                return Err(NetworkError::DuplicateNode(rec.id));
            }
            index.insert(rec.id.clone(), nodes.len());
            nodes.push(Node { id: rec.id, layer: rec.layer, x: rec.x, y: rec.y });
        }
        let mut arcs = Vec::with_capacity(file.arcs.len());
        for rec in file.arcs {
            let lookup = |id: &String| {
                index.get(id).copied().ok_or_else(|| NetworkError::UnknownNode {
                    tail: rec.tail.clone(),
                    head: rec.head.clone(),
                    missing: id.clone(),
                })
            };
            let tail = lookup(&rec.tail)?;
            let head = lookup(&rec.head)?;
            let missing = |field| NetworkError::MissingField {
                tail: rec.tail.clone(),
                head: rec.head.clone(),
                kind: rec.kind,
                field,
            };
            match rec.kind {
                ArcKind::Walk | ArcKind::RoadMM => {
                    rec.length_miles.ok_or_else(|| missing("length_miles"))?;
                }
                ArcKind::RoadAV => {
                    rec.length_miles.ok_or_else(|| missing("length_miles"))?;
                    rec.limit_av_mph.ok_or_else(|| missing("limit_av_mph"))?;
                    rec.capacity_vph.ok_or_else(|| missing("capacity_vph"))?;
                }
                ArcKind::Transit => {
                    rec.transit_time_s.ok_or_else(|| missing("transit_time_s"))?;
                }
                ArcKind::ModeSwitch => {}
            }
            arcs.push(Arc {
                tail,
                head,
                kind: rec.kind,
                length_miles: rec.length_miles,
                limit_av_mph: rec.limit_av_mph,
                limit_mm_mph: rec.limit_mm_mph,
                capacity_vph: rec.capacity_vph,
                baseline_vph: rec.baseline_vph,
                transit_time_s: rec.transit_time_s,
                station_frequency_per_min: rec.station_frequency_per_min,
                speed_mph: None,
                travel_time_s: 0.0,
            });
        }
        Ok(Network { nodes, arcs, index })
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn arc_name(&self, arc: &Arc) -> String {
        format!("{} -> {}", self.nodes[arc.tail].id, self.nodes[arc.head].id)
    }
}

/// Drops RoadAV arcs the vehicle cannot legally sustain: an arc is kept iff
/// the achievable speed reaches at least `beta` times its limit.
pub fn filter_av_arcs(mut network: Network, params: &NetworkParams) -> Network {
    network.arcs.retain(|a| match (a.kind, a.limit_av_mph) {
        (ArcKind::RoadAV, Some(limit)) => params.v_v_a_mph >= params.beta * limit,
        _ => true,
    });
    network
}

/// Annotates every arc with its travel time (and road arcs with realized
/// speed). Expects `filter_av_arcs` to have run already.
pub fn compute_travel_times(
    mut network: Network,
    params: &NetworkParams,
) -> Result<Network, NetworkError> {
    params.validate()?;
    let layers: Vec<Layer> = network.nodes.iter().map(|n| n.layer).collect();
    let names: Vec<String> = network.nodes.iter().map(|n| n.id.clone()).collect();
    for arc in &mut network.arcs {
        let (from, to) = (layers[arc.tail], layers[arc.head]);
        let time = match arc.kind {
            ArcKind::Walk => {
                let len = arc.length_miles.unwrap_or(0.0);
                len / params.walk_speed_mph * 3600.0
            }
            ArcKind::RoadAV => {
                let len = arc.length_miles.unwrap_or(0.0);
                let limit = arc.limit_av_mph.unwrap_or(params.v_v_a_mph);
                let speed = params.v_v_a_mph.min(limit);
                arc.speed_mph = Some(speed);
                len / speed * 3600.0
            }
            ArcKind::RoadMM => {
                let len = arc.length_miles.unwrap_or(0.0);
                let limit = arc.limit_mm_mph.unwrap_or(params.v_m_a_mph);
                let speed = params.v_m_a_mph.min(limit);
                arc.speed_mph = Some(speed);
                len / speed * 3600.0
            }
            ArcKind::Transit => arc.transit_time_s.unwrap_or(0.0),
            ArcKind::ModeSwitch => match (from, to) {
                (Layer::Walk, Layer::Transit) => {
                    let phi = arc
                        .station_frequency_per_min
                        .unwrap_or(params.phi_base_per_min)
                        * params.phi_scale;
                    if !(phi > 0.0) {
                        return Err(NetworkError::MissingFrequency {
                            tail: names[arc.tail].clone(),
                            head: names[arc.head].clone(),
                        });
                    }
                    // Boarding: access time plus half the headway.
                    params.t_ws_s + 60.0 / (2.0 * phi)
                }
                (Layer::Transit, Layer::Walk) => params.t_sw_s,
                (Layer::Walk, Layer::RoadAV) => params.t_wv_s,
                (Layer::RoadAV, Layer::Walk) => params.t_vw_s,
                (Layer::Walk, Layer::RoadMM) => params.t_wm_s,
                (Layer::RoadMM, Layer::Walk) => params.t_mw_s,
                _ => {
                    return Err(NetworkError::LayerMismatch {
                        tail: names[arc.tail].clone(),
                        head: names[arc.head].clone(),
                        kind: arc.kind,
                        from,
                        to,
                    })
                }
            },
        };
        if !(time > 0.0) {
            return Err(NetworkError::NonPositiveTime {
                tail: names[arc.tail].clone(),
                head: names[arc.head].clone(),
                time,
            });
        }
        arc.travel_time_s = time;
    }
    Ok(network)
}

/// Energy drawn by one vehicle traversing a road arc, in kJ.
pub fn arc_energy(arc: &Arc, model: &EnergyModel) -> Result<f64, NetworkError> {
    let len = arc.length_miles.unwrap_or(0.0);
    match arc.kind {
        ArcKind::RoadAV => {
            if len == 0.0 {
                return Ok(0.0);
            }
            let speed = arc.speed_mph.unwrap_or(0.0);
            Ok(model.av_rate(speed)? * len)
        }
        ArcKind::RoadMM => Ok(model.mm_energy_per_mile * len),
        _ => Ok(0.0),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub strongly_connected: bool,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.strongly_connected && self.issues.is_empty()
    }
}

/// Structural checks: strong connectivity, mode-switch layer legality, and
/// baseline usage within capacity. Failures are reported, not raised.
pub fn validate_network(network: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = network.nodes.len();
    if n == 0 {
        report.issues.push("network has no nodes".into());
        return report;
    }

    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for a in &network.arcs {
        fwd[a.tail].push(a.head);
        rev[a.head].push(a.tail);
    }
    let reach = |adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let f = reach(&fwd);
    let b = reach(&rev);
    report.strongly_connected = f.iter().all(|&x| x) && b.iter().all(|&x| x);
    if !report.strongly_connected {
        let unreachable: Vec<&str> = (0..n)
            .filter(|&i| !f[i] || !b[i])
            .map(|i| network.nodes[i].id.as_str())
            .collect();
        report
            .issues
            .push(format!("graph is not strongly connected; nodes outside the component of {:?}: {}",
                network.nodes[0].id, unreachable.join(", ")));
    }

    for a in &network.arcs {
        let (from, to) = (network.nodes[a.tail].layer, network.nodes[a.head].layer);
        match a.kind {
            ArcKind::ModeSwitch => {
                let legal = matches!(
                    (from, to),
                    (Layer::Walk, Layer::RoadAV)
                        | (Layer::RoadAV, Layer::Walk)
                        | (Layer::Walk, Layer::RoadMM)
                        | (Layer::RoadMM, Layer::Walk)
                        | (Layer::Walk, Layer::Transit)
                        | (Layer::Transit, Layer::Walk)
                );
                if !legal {
                    report.issues.push(format!(
                        "mode-switch arc {} joins layers {from:?} and {to:?}",
                        network.arc_name(a)
                    ));
                }
            }
            ArcKind::Walk | ArcKind::RoadAV | ArcKind::RoadMM | ArcKind::Transit => {
                let expect = match a.kind {
                    ArcKind::Walk => Layer::Walk,
                    ArcKind::RoadAV => Layer::RoadAV,
                    ArcKind::RoadMM => Layer::RoadMM,
                    _ => Layer::Transit,
                };
                if from != expect || to != expect {
                    report.issues.push(format!(
                        "{:?} arc {} must stay on layer {expect:?}, found {from:?} -> {to:?}",
                        a.kind,
                        network.arc_name(a)
                    ));
                }
            }
        }
        if let (Some(u), Some(c)) = (a.baseline_vph, a.capacity_vph) {
            if u > c {
                report.issues.push(format!(
                    "arc {} baseline usage {u} exceeds capacity {c}",
                    network.arc_name(a)
                ));
            }
        }
    }
    report
}
