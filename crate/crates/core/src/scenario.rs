//! Scenario configuration, batch execution, and result persistence.
//!
//! A scenario is a TOML file naming a network, a demand set, a catalog, and a
//! design grid. `run_solve` evaluates every design point (in parallel, with a
//! deterministic merge), writes the 3D front, the monetized 2D front, the
//! full per-point log, and a manifest with a content hash of all inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flow::FlowProblem;
use crate::mobility::{
    builtin_catalogs, catalogs_from_json, evaluate_design_point, monetize_2d, subway_cost,
    Catalogs, DesignGrid, DesignPoint, MobilityError, MobilityScenario, ResourceTriple,
};
use crate::network::{
    validate_network, DemandSet, EnergyModel, Network, NetworkError, NetworkParams,
};
use crate::poset::{pareto_min, Point};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    BadConfig { path: PathBuf, message: String },
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("every design point failed; first error: {0}")]
    AllPointsFailed(String),
    #[error("result set has an empty front")]
    EmptyFront,
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl CliError {
    /// Process exit code contract: 2 for unreadable inputs, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration.

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamOverrides {
    pub beta: Option<f64>,
    pub walk_speed_mph: Option<f64>,
    pub gamma_g_per_kj: Option<f64>,
    /// Replaces every bucket of the AV energy table with a flat value.
    pub av_energy_kj_per_mile: Option<f64>,
    pub hours_per_month: Option<f64>,
    pub emission_price_usd_per_kg: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: String,
    pub demand: String,
    /// Catalog scenario key (S1, S2-2020, ...) resolved against the shipped
    /// fixture, or against `catalog_file` when given.
    pub catalog: String,
    #[serde(default)]
    pub catalog_file: Option<String>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub grid: DesignGrid,
    #[serde(default)]
    pub params: ParamOverrides,
}

/// CLI-level knobs; explicit flags take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub dump_lp: bool,
    pub emission_price_usd_per_kg: Option<f64>,
    pub hours_per_month: Option<f64>,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(path: &Path) -> Result<(ScenarioConfig, PathBuf), CliError> {
    let text = read_file(path)?;
    let config: ScenarioConfig = toml::from_str(&text).map_err(|e| CliError::BadConfig {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    Ok((config, base))
}

/// Resolved scenario plus the raw input texts (kept for content hashing).
pub struct LoadedScenario {
    pub scenario: MobilityScenario,
    pub emission_price_usd_per_kg: f64,
    pub input_texts: Vec<(String, String)>,
    pub output_dir: PathBuf,
}

pub fn load_scenario(
    config_path: &Path,
    opts: &RunOptions,
) -> Result<LoadedScenario, CliError> {
    let (config, base) = load_config(config_path)?;
    let config_text = read_file(config_path)?;
    let network_path = base.join(&config.network);
    let demand_path = base.join(&config.demand);
    let network_text = read_file(&network_path)?;
    let demand_text = read_file(&demand_path)?;

    let (catalogs, catalog_text): (Catalogs, String) = match &config.catalog_file {
        Some(rel) => {
            let text = read_file(&base.join(rel))?;
            (catalogs_from_json(&text)?, text)
        }
        None => (
            builtin_catalogs(),
            include_str!("../fixtures/catalogs.json").to_string(),
        ),
    };
    catalogs.av_catalog(&config.catalog)?;

    let network = Network::from_json(&network_text)?;
    let demand = DemandSet::from_json(&demand_text)?;

    let mut params = NetworkParams::default();
    let mut energy = EnergyModel::default();
    if let Some(beta) = config.params.beta {
        params.beta = beta;
    }
    if let Some(w) = config.params.walk_speed_mph {
        params.walk_speed_mph = w;
    }
    if let Some(g) = config.params.gamma_g_per_kj {
        energy.gamma_g_per_kj = g;
    }
    if let Some(e) = config.params.av_energy_kj_per_mile {
        for bucket in energy.av_energy_per_mile.iter_mut() {
            bucket.1 = e;
        }
    }
    energy.train_emissions_kg_per_year = catalogs.subway.co2_kg_per_train_year;

    let hours = opts
        .hours_per_month
        .or(config.params.hours_per_month)
        .unwrap_or(730.0);
    let price = opts
        .emission_price_usd_per_kg
        .or(config.params.emission_price_usd_per_kg)
        .unwrap_or(40.0);

    let output_dir = base.join(config.output_dir.as_deref().unwrap_or("results"));

    if config.grid.av_speeds_mph.is_empty()
        || config.grid.av_fleet_sizes.is_empty()
        || config.grid.subway_levels.is_empty()
    {
        return Err(CliError::BadConfig {
            path: config_path.to_path_buf(),
            message: "design grid must be non-empty in every declared dimension".into(),
        });
    }

    Ok(LoadedScenario {
        scenario: MobilityScenario {
            network,
            demand,
            scenario: config.catalog.clone(),
            grid: config.grid.clone(),
            params,
            energy,
            catalogs,
            hours_per_month: hours,
        },
        emission_price_usd_per_kg: price,
        input_texts: vec![
            ("config".into(), config_text),
            ("network".into(), network_text),
            ("demand".into(), demand_text),
            ("catalog".into(), catalog_text),
        ],
        output_dir,
    })
}

// ---------------------------------------------------------------------------
// validate.

pub fn run_validate(config_path: &Path, opts: &RunOptions) -> Result<String, CliError> {
    let loaded = load_scenario(config_path, opts)?;
    let sc = &loaded.scenario;
    let mut issues = Vec::new();

    let report = validate_network(&sc.network);
    issues.extend(report.issues.iter().cloned());
    if let Err(e) = sc.demand.validate(&sc.network) {
        issues.push(e.to_string());
    }
    if let Err(e) = sc.params.validate() {
        issues.push(e.to_string());
    }
    for &level in &sc.grid.subway_levels {
        if let Err(e) = subway_cost(&sc.catalogs.subway, level) {
            issues.push(e.to_string());
        }
    }
    for &speed in &sc.grid.av_speeds_mph {
        if let Err(e) = sc.catalogs.query_av(&sc.scenario, speed) {
            issues.push(e.to_string());
        }
    }
    for t in &sc.grid.mm_types {
        if let Err(e) = sc.catalogs.mm_entry(t) {
            issues.push(e.to_string());
        }
    }

    if issues.is_empty() {
        Ok(format!(
            "ok: {} nodes, {} arcs, {} requests, {} design points",
            sc.network.nodes.len(),
            sc.network.arcs.len(),
            sc.demand.requests.len(),
            sc.grid.enumerate(&sc.catalogs, &sc.scenario)?.len(),
        ))
    } else {
        Err(CliError::Validation(issues.join("\n")))
    }
}

// ---------------------------------------------------------------------------
// solve.

#[derive(Debug)]
enum PointOutcome {
    Solved(ResourceTriple),
    Infeasible,
    Failed(String),
}

pub struct SolveSummary {
    pub output_dir: PathBuf,
    pub points_total: usize,
    pub points_solved: usize,
    pub front3d_len: usize,
    pub front2d_len: usize,
    pub hash: String,
}

pub fn run_solve(config_path: &Path, opts: &RunOptions) -> Result<SolveSummary, CliError> {
    let loaded = load_scenario(config_path, opts)?;
    run_validate(config_path, opts)?;
    let sc = &loaded.scenario;
    let points = sc.grid.enumerate(&sc.catalogs, &sc.scenario)?;

    let evaluate = |point: &DesignPoint| -> PointOutcome {
        match evaluate_design_point(sc, point) {
            Ok(Some((triple, _))) => PointOutcome::Solved(triple),
            Ok(None) => PointOutcome::Infeasible,
            Err(e) => PointOutcome::Failed(e.to_string()),
        }
    };
    // Indexed parallel map: the output order equals the input order no
    // matter how many workers run, which keeps the CSVs byte-identical
    // across --jobs settings.
    let outcomes: Vec<PointOutcome> = match opts.jobs {
        Some(1) => points.iter().map(evaluate).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| points.par_iter().map(evaluate).collect()),
        None => points.par_iter().map(evaluate).collect(),
    };

    let solved: Vec<(usize, &ResourceTriple)> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o {
            PointOutcome::Solved(t) => Some((i, t)),
            _ => None,
        })
        .collect();
    if solved.is_empty() {
        let first = outcomes
            .iter()
            .find_map(|o| match o {
                PointOutcome::Failed(e) => Some(e.clone()),
                PointOutcome::Infeasible => Some("infeasible".to_string()),
                _ => None,
            })
            .unwrap_or_else(|| "no design points".into());
        return Err(CliError::AllPointsFailed(first));
    }

    // 3D front: Pareto-minimal triples; the representative design point for
    // each minimal triple is the first one in grid order that attains it.
    let triples: Vec<Point> = solved.iter().map(|(_, t)| t.to_point()).collect();
    let front3d = pareto_min(3, triples.clone()).expect("triples share arity");
    let mut front3d_rows = Vec::new();
    for p in front3d.points() {
        let (idx, triple) = solved[triples.iter().position(|q| q == p).expect("from solved")];
        front3d_rows.push((points[idx].clone(), *triple));
    }

    // 2D front: minimize after monetizing, which can keep points the 3D
    // front drops and vice versa.
    let price = loaded.emission_price_usd_per_kg;
    let pairs: Vec<Point> = solved
        .iter()
        .map(|(_, t)| {
            let (time, cost2d) = monetize_2d(t, price);
            Point::from_values(&[time, cost2d])
        })
        .collect();
    let front2d = pareto_min(2, pairs.clone()).expect("pairs share arity");
    let mut front2d_rows = Vec::new();
    for p in front2d.points() {
        let pos = pairs.iter().position(|q| q == p).expect("from solved");
        let (idx, triple) = solved[pos];
        let (time, cost2d) = monetize_2d(triple, price);
        front2d_rows.push((points[idx].clone(), time, cost2d));
    }

    fs::create_dir_all(&loaded.output_dir).map_err(|source| CliError::Write {
        path: loaded.output_dir.clone(),
        source,
    })?;
    let write = |name: &str, contents: String| -> Result<(), CliError> {
        let path = loaded.output_dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
    };

    let design_header = "av_speed_mph,n_v_max,mm_type,n_m_max,subway_level";
    let design_cols = |p: &DesignPoint| {
        format!(
            "{},{},{},{},{}",
            fmt_g(p.av_entry.speed_mph),
            fmt_g(p.n_v_max),
            p.mm_entry
                .as_ref()
                .and_then(|e| e.mm_type.clone())
                .unwrap_or_else(|| "none".into()),
            fmt_g(p.n_m_max),
            fmt_g(p.subway_level),
        )
    };

    let mut f3 = format!("t_avg_s,cost_usd_per_month,co2_kg_per_month,{design_header}\n");
    for (point, t) in &front3d_rows {
        f3.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g(t.t_avg_s),
            fmt_g(t.cost_usd_per_month),
            fmt_g(t.co2_kg_per_month),
            design_cols(point),
        ));
    }
    write("front3d.csv", f3)?;

    let mut f2 = format!("t_avg_s,cost2d_usd_per_month,{design_header}\n");
    for (point, time, cost2d) in &front2d_rows {
        f2.push_str(&format!(
            "{},{},{}\n",
            fmt_g(*time),
            fmt_g(*cost2d),
            design_cols(point),
        ));
    }
    write("front2d.csv", f2)?;

    let mut fa = format!("{design_header},status,t_avg_s,cost_usd_per_month,co2_kg_per_month\n");
    for (point, outcome) in points.iter().zip(&outcomes) {
        match outcome {
            PointOutcome::Solved(t) => fa.push_str(&format!(
                "{},optimal,{},{},{}\n",
                design_cols(point),
                fmt_g(t.t_avg_s),
                fmt_g(t.cost_usd_per_month),
                fmt_g(t.co2_kg_per_month),
            )),
            PointOutcome::Infeasible => {
                fa.push_str(&format!("{},infeasible,,,\n", design_cols(point)))
            }
            PointOutcome::Failed(e) => fa.push_str(&format!(
                "{},error: {},,,\n",
                design_cols(point),
                e.replace([',', '\n'], ";"),
            )),
        }
    }
    write("all_points.csv", fa)?;

    if opts.dump_lp {
        let lp_dir = loaded.output_dir.join("lp");
        fs::create_dir_all(&lp_dir).map_err(|source| CliError::Write {
            path: lp_dir.clone(),
            source,
        })?;
        for point in &points {
            if let Ok(lp_text) = dump_point_lp(sc, point) {
                let path = lp_dir.join(format!("{}.lp", point.key()));
                fs::write(&path, lp_text).map_err(|source| CliError::Write { path, source })?;
            }
        }
    }

    // Manifest: content hash of all inputs plus full-precision settings.
    let mut hasher = Sha256::new();
    for (name, text) in &loaded.input_texts {
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(text.as_bytes());
        hasher.update([0]);
    }
    hasher.update(format!("price={price:?};hours={:?}", sc.hours_per_month).as_bytes());
    let hash = format!("{:x}", hasher.finalize());

    let mut manifest = BTreeMap::new();
    manifest.insert("input_hash", serde_json::json!(hash));
    manifest.insert("tool_version", serde_json::json!(env!("CARGO_PKG_VERSION")));
    manifest.insert("catalog", serde_json::json!(sc.scenario));
    manifest.insert(
        "emission_price_usd_per_kg",
        serde_json::json!(price),
    );
    manifest.insert("hours_per_month", serde_json::json!(sc.hours_per_month));
    manifest.insert("beta", serde_json::json!(sc.params.beta));
    manifest.insert("walk_speed_mph", serde_json::json!(sc.params.walk_speed_mph));
    manifest.insert("gamma_g_per_kj", serde_json::json!(sc.energy.gamma_g_per_kj));
    manifest.insert("points_total", serde_json::json!(points.len()));
    manifest.insert("points_solved", serde_json::json!(solved.len()));
    manifest.insert("front3d_len", serde_json::json!(front3d_rows.len()));
    manifest.insert("front2d_len", serde_json::json!(front2d_rows.len()));
    manifest.insert(
        "lp_residual_tolerance",
        serde_json::json!(1e-6),
    );
    write(
        "manifest.json",
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;

    Ok(SolveSummary {
        output_dir: loaded.output_dir,
        points_total: points.len(),
        points_solved: solved.len(),
        front3d_len: front3d_rows.len(),
        front2d_len: front2d_rows.len(),
        hash,
    })
}

/// Stage-1 LP of one design point in LP text interchange format.
fn dump_point_lp(sc: &MobilityScenario, point: &DesignPoint) -> Result<String, MobilityError> {
    use crate::network::{compute_travel_times, filter_av_arcs};
    let mut params = sc.params.clone();
    params.v_v_a_mph = point.av_entry.speed_mph;
    if let Some(mm) = &point.mm_entry {
        params.v_m_a_mph = mm.speed_mph;
    }
    params.phi_base_per_min = sc.catalogs.subway.phi_base_per_min;
    params.phi_scale = point.subway_level;
    let net = compute_travel_times(filter_av_arcs(sc.network.clone(), &params), &params)?;
    let problem = FlowProblem {
        network: &net,
        demand: &sc.demand,
        n_v_max: point.n_v_max,
        n_m_max: point.n_m_max,
        energy: &sc.energy,
        mm_co2_kg_per_mile: 0.0,
    };
    let flp = crate::flow::build_lp(&problem)?;
    Ok(flp.lp.to_lp_format(&point.key()))
}

// ---------------------------------------------------------------------------
// plot-data.

/// Reads `front2d.csv` from a results directory and emits step-plot
/// coordinates (`plot2d.csv`): cost ascending, time flat-then-dropping.
pub fn run_plotdata(results_dir: &Path) -> Result<String, CliError> {
    let path = results_dir.join("front2d.csv");
    let text = read_file(&path)?;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let (Some(t), Some(c)) = (cols.next(), cols.next()) else {
            continue;
        };
        let (Ok(t), Ok(c)) = (t.parse::<f64>(), c.parse::<f64>()) else {
            continue;
        };
        rows.push((t, c));
    }
    if rows.is_empty() {
        return Err(CliError::EmptyFront);
    }
    // Antichain in (time, cost): ascending cost means descending time.
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));

    let mut out = String::from("cost_usd_per_month,t_avg_s\n");
    for (i, &(t, c)) in rows.iter().enumerate() {
        if i > 0 {
            let (prev_t, _) = rows[i - 1];
            out.push_str(&format!("{},{}\n", fmt_g(c), fmt_g(prev_t)));
        }
        out.push_str(&format!("{},{}\n", fmt_g(c), fmt_g(t)));
    }
    let out_path = results_dir.join("plot2d.csv");
    fs::write(&out_path, &out).map_err(|source| CliError::Write {
        path: out_path,
        source,
    })?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Formatting.

/// Six significant digits, shortest form (fixed or scientific), matching the
/// classic `%g` behavior closely enough to be stable and human-diffable.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        trimmed.to_string()
    } else {
        let s = format!("{x:.5e}");
        // Normalize "1.20000e8" -> "1.2e8".
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}
