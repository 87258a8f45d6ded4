//! Concrete design problems for the mobility system: vehicle catalogs, the
//! subway, the network-flow design problem, cost/emission aggregation, and
//! the top-level co-design diagram.
//!
//! Catalog numbers ship as a JSON fixture embedded in the binary; custom
//! catalog files with the same schema can replace it per scenario.

use std::collections::BTreeMap;
use std::sync::Arc as StdArc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{CoDesignDiagram, DiagramBuilder, DiagramError};
use crate::dp::{DesignProblem, DpError, Implementation, Provenance};
use crate::flow::{solve_flow, FlowError, FlowProblem, FlowSolution, FlowStatus};
use crate::network::{
    compute_travel_times, filter_av_arcs, DemandSet, EnergyModel, Network, NetworkError,
    NetworkParams, TravelRequest,
};
use crate::poset::{Ext, Point};

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("unknown catalog scenario {0:?}")]
    UnknownScenario(String),
    #[error("no subway operating cost tabulated for frequency level {0}")]
    UnknownSubwayLevel(f64),
    #[error("unknown micromobility type {0:?}")]
    UnknownMmType(String),
    #[error("no catalog entry reaches {speed} mph in scenario {scenario:?}")]
    NoEntryForSpeed { scenario: String, speed: f64 },
    #[error("catalog file: {0}")]
    BadCatalog(String),
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

// ---------------------------------------------------------------------------
// Catalogs.

/// One row of a vehicle catalog (AV or micromobility).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleCatalogEntry {
    pub speed_mph: f64,
    pub fixed_cost_usd: f64,
    pub op_cost_usd_per_mile: f64,
    pub life_years: f64,
    pub mm_type: Option<String>,
    pub co2_kg_per_mile: Option<f64>,
}

impl VehicleCatalogEntry {
    /// Amortized fixed cost, $/vehicle/month.
    pub fn fixed_cost_usd_per_month(&self) -> f64 {
        self.fixed_cost_usd / (self.life_years * 12.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubwayParams {
    pub n_s_base: f64,
    pub fixed_cost_usd_per_train: f64,
    pub life_years: f64,
    /// Frequency multiplier (as a string key, e.g. "1.5") -> $/year.
    pub op_cost_usd_per_year_by_level: BTreeMap<String, f64>,
    pub co2_kg_per_train_year: f64,
    pub phi_base_per_min: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AvCatalogRecord {
    vehicle_cost_usd: f64,
    op_cost_usd_per_mile: f64,
    life_years: f64,
    automation_cost_usd_by_speed: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MmCatalogRecord {
    mm_type: String,
    speed_mph: f64,
    fixed_cost_usd: f64,
    op_cost_usd_per_mile: f64,
    life_years: f64,
    co2_kg_per_mile: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    av: BTreeMap<String, AvCatalogRecord>,
    mm: Vec<MmCatalogRecord>,
    subway: SubwayParams,
}

#[derive(Debug, Clone)]
pub struct Catalogs {
    /// Scenario key (e.g. "S2-2020") -> entries sorted by speed.
    pub av: BTreeMap<String, Vec<VehicleCatalogEntry>>,
    pub mm: Vec<VehicleCatalogEntry>,
    pub subway: SubwayParams,
}

pub fn catalogs_from_json(text: &str) -> Result<Catalogs, MobilityError> {
    let file: CatalogFile = serde_json::from_str(text)?;
    let mut av = BTreeMap::new();
    for (scenario, rec) in file.av {
        let mut entries = Vec::new();
        for (speed_key, automation) in &rec.automation_cost_usd_by_speed {
            let speed: f64 = speed_key
                .parse()
                .map_err(|_| MobilityError::BadCatalog(format!("bad speed key {speed_key:?}")))?;
            entries.push(VehicleCatalogEntry {
                speed_mph: speed,
                fixed_cost_usd: rec.vehicle_cost_usd + automation,
                op_cost_usd_per_mile: rec.op_cost_usd_per_mile,
                life_years: rec.life_years,
                mm_type: None,
                co2_kg_per_mile: None,
            });
        }
        entries.sort_by(|a, b| a.speed_mph.total_cmp(&b.speed_mph));
        av.insert(scenario, entries);
    }
    let mm = file
        .mm
        .into_iter()
        .map(|r| VehicleCatalogEntry {
            speed_mph: r.speed_mph,
            fixed_cost_usd: r.fixed_cost_usd,
            op_cost_usd_per_mile: r.op_cost_usd_per_mile,
            life_years: r.life_years,
            mm_type: Some(r.mm_type),
            co2_kg_per_mile: Some(r.co2_kg_per_mile),
        })
        .collect();
    Ok(Catalogs {
        av,
        mm,
        subway: file.subway,
    })
}

/// The shipped catalog numbers (S1-S5 plus the 2020/2025 cost projections).
pub fn builtin_catalogs() -> Catalogs {
    catalogs_from_json(include_str!("../fixtures/catalogs.json"))
        .expect("embedded catalog fixture parses")
}

impl Catalogs {
    pub fn av_catalog(&self, scenario: &str) -> Result<&[VehicleCatalogEntry], MobilityError> {
        self.av
            .get(scenario)
            .map(|v| v.as_slice())
            .ok_or_else(|| MobilityError::UnknownScenario(scenario.to_string()))
    }

    pub fn mm_entry(&self, mm_type: &str) -> Result<&VehicleCatalogEntry, MobilityError> {
        self.mm
            .iter()
            .find(|e| e.mm_type.as_deref() == Some(mm_type))
            .ok_or_else(|| MobilityError::UnknownMmType(mm_type.to_string()))
    }

    /// Cheapest AV entry achieving at least `speed_mph`.
    pub fn query_av(
        &self,
        scenario: &str,
        speed_mph: f64,
    ) -> Result<&VehicleCatalogEntry, MobilityError> {
        self.av_catalog(scenario)?
            .iter()
            .filter(|e| e.speed_mph >= speed_mph)
            .min_by(|a, b| {
                a.fixed_cost_usd
                    .total_cmp(&b.fixed_cost_usd)
                    .then(a.op_cost_usd_per_mile.total_cmp(&b.op_cost_usd_per_mile))
                    .then(a.speed_mph.total_cmp(&b.speed_mph))
            })
            .ok_or_else(|| MobilityError::NoEntryForSpeed {
                scenario: scenario.to_string(),
                speed: speed_mph,
            })
    }
}

// ---------------------------------------------------------------------------
// Costs and emissions.

impl SubwayParams {
    pub fn op_cost_usd_per_year(&self, level: f64) -> Result<f64, MobilityError> {
        self.op_cost_usd_per_year_by_level
            .iter()
            .find(|(k, _)| k.parse::<f64>().map(|v| (v - level).abs() < 1e-9).unwrap_or(false))
            .map(|(_, &c)| c)
            .ok_or(MobilityError::UnknownSubwayLevel(level))
    }

    /// Trains acquired beyond the baseline fleet for a frequency level.
    pub fn acquired_trains(&self, level: f64) -> f64 {
        self.n_s_base * (level - 1.0)
    }
}

/// Monthly subway cost: amortized acquisitions plus the level's operating
/// cost.
pub fn subway_cost(subway: &SubwayParams, level: f64) -> Result<f64, MobilityError> {
    let amortized =
        subway.fixed_cost_usd_per_train / subway.life_years * subway.acquired_trains(level);
    Ok((amortized + subway.op_cost_usd_per_year(level)?) / 12.0)
}

/// One concrete choice from the scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub av_entry: VehicleCatalogEntry,
    pub n_v_max: f64,
    pub mm_entry: Option<VehicleCatalogEntry>,
    pub n_m_max: f64,
    pub subway_level: f64,
}

impl DesignPoint {
    /// Deterministic sort/merge key.
    pub fn key(&self) -> String {
        format!(
            "av={:02.0}mph,nv={:05.0},mm={},nm={:05.0},sub={:.1}",
            self.av_entry.speed_mph,
            self.n_v_max,
            self.mm_entry
                .as_ref()
                .and_then(|e| e.mm_type.clone())
                .unwrap_or_else(|| "none".to_string()),
            self.n_m_max,
            self.subway_level,
        )
    }
}

/// Monthly average travel time / cost / emissions triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceTriple {
    pub t_avg_s: f64,
    pub cost_usd_per_month: f64,
    pub co2_kg_per_month: f64,
}

impl ResourceTriple {
    pub fn to_point(&self) -> Point {
        Point::from_values(&[self.t_avg_s, self.cost_usd_per_month, self.co2_kg_per_month])
    }
}

/// Monthly fleet costs (C_V, C_M): amortized acquisition plus mileage-based
/// operation.
pub fn fleet_costs(
    solution: &FlowSolution,
    point: &DesignPoint,
    hours_per_month: f64,
) -> (f64, f64) {
    let c_v = point.av_entry.fixed_cost_usd_per_month() * point.n_v_max
        + point.av_entry.op_cost_usd_per_mile * solution.s_v_tot * hours_per_month;
    let c_m = match &point.mm_entry {
        Some(mm) => {
            mm.fixed_cost_usd_per_month() * point.n_m_max
                + mm.op_cost_usd_per_mile * solution.s_m_tot * hours_per_month
        }
        None => 0.0,
    };
    (c_v, c_m)
}

/// Folds a flow solution and a design point into the three shared resources.
pub fn total_resources(
    solution: &FlowSolution,
    point: &DesignPoint,
    subway: &SubwayParams,
    hours_per_month: f64,
) -> Result<ResourceTriple, MobilityError> {
    let (c_v, c_m) = fleet_costs(solution, point, hours_per_month);
    let c_s = subway_cost(subway, point.subway_level)?;
    let n_s = subway.n_s_base * point.subway_level;
    let co2 = (solution.m_co2_v + solution.m_co2_m) * hours_per_month
        + subway.co2_kg_per_train_year * n_s / 12.0;
    Ok(ResourceTriple {
        t_avg_s: solution.t_avg_s,
        cost_usd_per_month: c_v + c_m + c_s,
        co2_kg_per_month: co2,
    })
}

/// Collapses emissions into cost at a fixed price, yielding the 2D view.
pub fn monetize_2d(r: &ResourceTriple, price_usd_per_kg: f64) -> (f64, f64) {
    (
        r.t_avg_s,
        r.cost_usd_per_month + price_usd_per_kg * r.co2_kg_per_month,
    )
}

// ---------------------------------------------------------------------------
// Design grids.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignGrid {
    pub av_speeds_mph: Vec<f64>,
    pub av_fleet_sizes: Vec<f64>,
    /// Empty means no micromobility in this scenario.
    pub mm_types: Vec<String>,
    pub mm_fleet_sizes: Vec<f64>,
    pub subway_levels: Vec<f64>,
}

impl Default for DesignGrid {
    /// The basic grid: 10 fleet sizes x 7 speeds x 3 subway levels.
    fn default() -> Self {
        DesignGrid {
            av_speeds_mph: (4..=10).map(|k| 5.0 * k as f64).collect(),
            av_fleet_sizes: (0..10).map(|k| 500.0 * k as f64).collect(),
            mm_types: Vec::new(),
            mm_fleet_sizes: vec![0.0],
            subway_levels: vec![1.0, 1.5, 2.0],
        }
    }
}

impl DesignGrid {
    /// The micromobility extension: every shipped type over fleet sizes
    /// 0, 500, ..., 4000.
    pub fn with_micromobility(mut self) -> Self {
        self.mm_types = vec![
            "e-scooter".into(),
            "shared-bike".into(),
            "moped".into(),
            "four-wheeled".into(),
        ];
        self.mm_fleet_sizes = (0..9).map(|k| 500.0 * k as f64).collect();
        self
    }

    /// Enumerates the grid into concrete design points, deterministically
    /// ordered by key.
    pub fn enumerate(
        &self,
        catalogs: &Catalogs,
        scenario: &str,
    ) -> Result<Vec<DesignPoint>, MobilityError> {
        let mut points = Vec::new();
        let mm_choices: Vec<(Option<VehicleCatalogEntry>, Vec<f64>)> = if self.mm_types.is_empty() {
            vec![(None, vec![0.0])]
        } else {
            self.mm_types
                .iter()
                .map(|t| {
                    catalogs
                        .mm_entry(t)
                        .map(|e| (Some(e.clone()), self.mm_fleet_sizes.clone()))
                })
                .collect::<Result<_, _>>()?
        };
        for &speed in &self.av_speeds_mph {
            let av_entry = catalogs.query_av(scenario, speed)?.clone();
            for &n_v in &self.av_fleet_sizes {
                for (mm_entry, mm_fleets) in &mm_choices {
                    for &n_m in mm_fleets {
                        for &level in &self.subway_levels {
                            points.push(DesignPoint {
                                av_entry: av_entry.clone(),
                                n_v_max: n_v,
                                mm_entry: mm_entry.clone(),
                                n_m_max: n_m,
                                subway_level: level,
                            });
                        }
                    }
                }
            }
        }
        points.sort_by(|a, b| a.key().cmp(&b.key()));
        points.dedup_by(|a, b| a.key() == b.key());
        Ok(points)
    }
}

// ---------------------------------------------------------------------------
// Per-design-point evaluation (the scenario runner's work unit).

/// Everything needed to evaluate design points on one network/demand pair.
#[derive(Debug, Clone)]
pub struct MobilityScenario {
    /// Raw network, before AV filtering and travel-time annotation.
    pub network: Network,
    pub demand: DemandSet,
    /// Catalog scenario key, e.g. "S1".
    pub scenario: String,
    pub grid: DesignGrid,
    pub params: NetworkParams,
    pub energy: EnergyModel,
    pub catalogs: Catalogs,
    pub hours_per_month: f64,
}

/// Solves the flow LP for one design point and aggregates resources.
/// `None` means the point is infeasible (no routing exists).
pub fn evaluate_design_point(
    scenario: &MobilityScenario,
    point: &DesignPoint,
) -> Result<Option<(ResourceTriple, FlowSolution)>, MobilityError> {
    evaluate_design_point_for_demand(scenario, point, &scenario.demand)
}

pub fn evaluate_design_point_for_demand(
    scenario: &MobilityScenario,
    point: &DesignPoint,
    demand: &DemandSet,
) -> Result<Option<(ResourceTriple, FlowSolution)>, MobilityError> {
    let mut params = scenario.params.clone();
    params.v_v_a_mph = point.av_entry.speed_mph;
    if let Some(mm) = &point.mm_entry {
        params.v_m_a_mph = mm.speed_mph;
    }
    params.phi_base_per_min = scenario.catalogs.subway.phi_base_per_min;
    params.phi_scale = point.subway_level;

    let net = compute_travel_times(filter_av_arcs(scenario.network.clone(), &params), &params)?;
    let problem = FlowProblem {
        network: &net,
        demand,
        n_v_max: point.n_v_max,
        n_m_max: point.n_m_max,
        energy: &scenario.energy,
        mm_co2_kg_per_mile: point
            .mm_entry
            .as_ref()
            .and_then(|e| e.co2_kg_per_mile)
            .unwrap_or(0.0),
    };
    let solution = solve_flow(&problem)?;
    if solution.status == FlowStatus::Infeasible {
        return Ok(None);
    }
    let triple = total_resources(&solution, point, &scenario.catalogs.subway, scenario.hours_per_month)?;
    Ok(Some((triple, solution)))
}

// ---------------------------------------------------------------------------
// Design problems and the co-design diagram.

/// AV catalog as a design problem: achievable speed -> (fixed cost $, op
/// cost $/mile).
pub fn av_design_problem(
    catalog: &[VehicleCatalogEntry],
    name: &str,
) -> Result<DesignProblem, MobilityError> {
    let imps = catalog
        .iter()
        .map(|e| {
            Implementation::new(
                format!("{name}@{}mph", e.speed_mph),
                Point::from_values(&[e.speed_mph]),
                Point::from_values(&[e.fixed_cost_usd, e.op_cost_usd_per_mile]),
            )
        })
        .collect();
    Ok(DesignProblem::from_catalog(name, 1, 2, imps)?)
}

/// Micromobility catalog as a design problem: achievable speed -> (fixed
/// cost $, op cost $/mile, CO2 kg/mile).
pub fn mm_design_problem(catalog: &[VehicleCatalogEntry]) -> Result<DesignProblem, MobilityError> {
    let imps = catalog
        .iter()
        .map(|e| {
            Implementation::new(
                e.mm_type.clone().unwrap_or_else(|| "mm".into()),
                Point::from_values(&[e.speed_mph]),
                Point::from_values(&[
                    e.fixed_cost_usd,
                    e.op_cost_usd_per_mile,
                    e.co2_kg_per_mile.unwrap_or(0.0),
                ]),
            )
        })
        .collect();
    Ok(DesignProblem::from_catalog("mm-vehicle", 1, 3, imps)?)
}

/// Subway as a design problem: acquired trains -> $/month.
pub fn subway_design_problem(
    subway: &SubwayParams,
    levels: &[f64],
) -> Result<DesignProblem, MobilityError> {
    let mut imps = Vec::new();
    for &level in levels {
        imps.push(Implementation::new(
            format!("subway@{level:.1}x"),
            Point::from_values(&[subway.acquired_trains(level)]),
            Point::from_values(&[subway_cost(subway, level)?]),
        ));
    }
    Ok(DesignProblem::from_catalog("subway", 1, 1, imps)?)
}

/// Index map of the network-flow node's resource coordinates.
mod flow_res {
    pub const T_AVG_S: usize = 0;
    pub const AV_SPEED: usize = 1;
    pub const N_V: usize = 2;
    pub const MM_SPEED: usize = 3;
    pub const N_M: usize = 4;
    pub const N_S_A: usize = 5;
    pub const S_V_MONTH: usize = 6;
    pub const S_M_MONTH: usize = 7;
    pub const CO2_V_MONTH: usize = 8;
    pub const ARITY: usize = 9;
}

/// Builds the full co-design diagram: demand feeds the network-flow node,
/// whose required speeds/fleets feed the vehicle, micromobility, and subway
/// catalogs; an aggregation node folds everything into the
/// (time, cost, emissions) sinks.
pub fn build_mobility_cdpi(sc: &MobilityScenario) -> Result<CoDesignDiagram, MobilityError> {
    let n_requests = sc.demand.requests.len();
    let od_pairs: Vec<(String, String)> = sc
        .demand
        .requests
        .iter()
        .map(|r| (r.origin.clone(), r.destination.clone()))
        .collect();

    // Flow combos: AV speed x AV fleet x MM speed x MM fleet x subway level.
    // Vehicle *types* are not fixed here; the catalogs downstream branch over
    // every entry achieving the required speed.
    let mut mm_speed_choices: Vec<f64> = if sc.grid.mm_types.is_empty() {
        vec![0.0]
    } else {
        let mut speeds: Vec<f64> = sc
            .grid
            .mm_types
            .iter()
            .map(|t| sc.catalogs.mm_entry(t).map(|e| e.speed_mph))
            .collect::<Result<_, _>>()?;
        speeds.sort_by(f64::total_cmp);
        speeds.dedup();
        speeds
    };
    if mm_speed_choices.is_empty() {
        mm_speed_choices.push(0.0);
    }

    let mut combos = Vec::new();
    for &v_av in &sc.grid.av_speeds_mph {
        for &n_v in &sc.grid.av_fleet_sizes {
            for &v_mm in &mm_speed_choices {
                for &n_m in &sc.grid.mm_fleet_sizes {
                    for &level in &sc.grid.subway_levels {
                        combos.push((v_av, n_v, v_mm, n_m, level));
                    }
                }
            }
        }
    }

    let flow_sc = sc.clone();
    let flow_eval = move |f: &Point| -> Vec<(Point, Provenance)> {
        let mut out = Vec::new();
        let mut requests = Vec::new();
        for (i, (o, d)) in od_pairs.iter().enumerate() {
            match f.coord(i).as_finite() {
                Some(rate) if rate > 0.0 => requests.push(TravelRequest {
                    origin: o.clone(),
                    destination: d.clone(),
                    rate_per_hour: rate,
                }),
                Some(_) => {}
                None => return out, // unbounded demand: nothing feasible
            }
        }
        let demand = DemandSet { requests };
        if demand.requests.is_empty() {
            return out;
        }
        for &(v_av, n_v, v_mm, n_m, level) in &combos {
            let mut params = flow_sc.params.clone();
            params.v_v_a_mph = v_av;
            params.v_m_a_mph = if v_mm > 0.0 { v_mm } else { params.v_m_a_mph };
            params.phi_base_per_min = flow_sc.catalogs.subway.phi_base_per_min;
            params.phi_scale = level;
            let net = match compute_travel_times(
                filter_av_arcs(flow_sc.network.clone(), &params),
                &params,
            ) {
                Ok(n) => n,
                Err(_) => continue,
            };
            let problem = FlowProblem {
                network: &net,
                demand: &demand,
                n_v_max: n_v,
                n_m_max: n_m,
                energy: &flow_sc.energy,
                mm_co2_kg_per_mile: 0.0, // MM emissions priced by the catalog node
            };
            let sol = match solve_flow(&problem) {
                Ok(s) if s.status == FlowStatus::Optimal => s,
                _ => continue,
            };
            let h = flow_sc.hours_per_month;
            let resources = Point::from_values(&[
                sol.t_avg_s,
                v_av,
                n_v,
                v_mm,
                n_m,
                flow_sc.catalogs.subway.acquired_trains(level),
                sol.s_v_tot * h,
                sol.s_m_tot * h,
                sol.m_co2_v * h,
            ]);
            let label = format!(
                "av={v_av:02.0}mph,nv={n_v:05.0},vmm={v_mm:02.0}mph,nm={n_m:05.0},sub={level:.1}"
            );
            out.push((resources, Provenance::Computed { label }));
        }
        out
    };
    let flow_dp = DesignProblem::from_hook(
        "network-flow",
        n_requests,
        flow_res::ARITY,
        Vec::new(),
        StdArc::new(flow_eval),
    );

    // Catalog nodes with amortized monthly fixed costs so the aggregation is
    // a plain bilinear fold.
    let av_catalog = sc.catalogs.av_catalog(&sc.scenario)?;
    let av_imps: Vec<Implementation> = av_catalog
        .iter()
        .map(|e| {
            Implementation::new(
                format!("av@{}mph", e.speed_mph),
                Point::from_values(&[e.speed_mph]),
                Point::from_values(&[e.fixed_cost_usd_per_month(), e.op_cost_usd_per_mile]),
            )
        })
        .collect();
    let av_dp = DesignProblem::from_catalog("av-vehicle", 1, 2, av_imps)?;

    let mut mm_imps = vec![Implementation::new(
        "mm-none",
        Point::from_values(&[0.0]),
        Point::from_values(&[0.0, 0.0, 0.0]),
    )];
    for t in &sc.grid.mm_types {
        let e = sc.catalogs.mm_entry(t)?;
        mm_imps.push(Implementation::new(
            t.clone(),
            Point::from_values(&[e.speed_mph]),
            Point::from_values(&[
                e.fixed_cost_usd_per_month(),
                e.op_cost_usd_per_mile,
                e.co2_kg_per_mile.unwrap_or(0.0),
            ]),
        ));
    }
    let mm_dp = DesignProblem::from_catalog("mm-vehicle", 1, 3, mm_imps)?;

    let subway_dp = subway_design_problem(&sc.catalogs.subway, &sc.grid.subway_levels)?;

    // Aggregation: 13 functionality coords fold into the three sinks.
    let train_kg_year = sc.catalogs.subway.co2_kg_per_train_year;
    let n_s_base = sc.catalogs.subway.n_s_base;
    let agg_eval = move |f: &Point| -> Vec<(Point, Provenance)> {
        let vals: Option<Vec<f64>> = (0..13).map(|i| f.coord(i).as_finite()).collect();
        let Some(v) = vals else {
            return vec![(
                Point::new(vec![Ext::Top, Ext::Top, Ext::Top]),
                Provenance::Computed { label: "aggregate".into() },
            )];
        };
        let (t, n_v, n_m, n_s_a, s_v, s_m, co2_v) =
            (v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
        let (av_fixed_m, av_op, mm_fixed_m, mm_op, mm_co2_mile, c_s) =
            (v[7], v[8], v[9], v[10], v[11], v[12]);
        let cost = av_fixed_m * n_v + av_op * s_v + mm_fixed_m * n_m + mm_op * s_m + c_s;
        let co2 = co2_v + mm_co2_mile * s_m + train_kg_year * (n_s_base + n_s_a) / 12.0;
        vec![(
            Point::from_values(&[t, cost, co2]),
            Provenance::Computed { label: "aggregate".into() },
        )]
    };
    let agg_dp = DesignProblem::from_hook("aggregate", 13, 3, Vec::new(), StdArc::new(agg_eval));

    let mut b = DiagramBuilder::new();
    let req_units: Vec<String> = (0..n_requests).map(|i| format!("req{i}-per-hour")).collect();
    let req_unit_refs: Vec<&str> = req_units.iter().map(String::as_str).collect();
    let flow = b.add_node(
        flow_dp,
        &req_unit_refs,
        &[
            "t-avg-s",
            "av-mph",
            "av-vehicles",
            "mm-mph",
            "mm-vehicles",
            "trains",
            "av-miles-month",
            "mm-miles-month",
            "av-kg-month",
        ],
    );
    let av = b.add_node(av_dp, &["av-mph"], &["av-usd-vehicle-month", "av-usd-mile"]);
    let mm = b.add_node(
        mm_dp,
        &["mm-mph"],
        &["mm-usd-vehicle-month", "mm-usd-mile", "mm-kg-mile"],
    );
    let subway = b.add_node(subway_dp, &["trains"], &["subway-usd-month"]);
    let agg = b.add_node(
        agg_dp,
        &[
            "t-avg-s",
            "av-vehicles",
            "mm-vehicles",
            "trains",
            "av-miles-month",
            "mm-miles-month",
            "av-kg-month",
            "av-usd-vehicle-month",
            "av-usd-mile",
            "mm-usd-vehicle-month",
            "mm-usd-mile",
            "mm-kg-mile",
            "subway-usd-month",
        ],
        &["t-avg-s", "usd-month", "kg-month"],
    );

    for i in 0..n_requests {
        b.expose_source((flow, i));
    }
    b.connect((flow, flow_res::AV_SPEED), (av, 0));
    b.connect((flow, flow_res::MM_SPEED), (mm, 0));
    b.connect((flow, flow_res::N_S_A), (subway, 0));
    b.connect((flow, flow_res::T_AVG_S), (agg, 0));
    b.connect((flow, flow_res::N_V), (agg, 1));
    b.connect((flow, flow_res::N_M), (agg, 2));
    // Train count feeds both the subway catalog and the emission fold.
    // (A resource coordinate may fan out; functionality coords may not.)
    b.connect((flow, flow_res::N_S_A), (agg, 3));
    b.connect((flow, flow_res::S_V_MONTH), (agg, 4));
    b.connect((flow, flow_res::S_M_MONTH), (agg, 5));
    b.connect((flow, flow_res::CO2_V_MONTH), (agg, 6));
    b.connect((av, 0), (agg, 7));
    b.connect((av, 1), (agg, 8));
    b.connect((mm, 0), (agg, 9));
    b.connect((mm, 1), (agg, 10));
    b.connect((mm, 2), (agg, 11));
    b.connect((subway, 0), (agg, 12));
    b.expose_sink((agg, 0));
    b.expose_sink((agg, 1));
    b.expose_sink((agg, 2));
    Ok(b.build()?)
}
