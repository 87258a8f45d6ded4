//! Shared oracles and generators for the integration suites.
//!
//! Everything here is deliberately written from scratch, with different
//! algorithms than the library uses, so that agreement between the two sides
//! is meaningful: an all-pairs dominance filter, a naive full-tableau simplex
//! with Bland's rule, an exhaustive basis (vertex) enumerator, and a
//! path-decomposition model of the routing problem.

#![allow(dead_code)]

use rand::Rng;

use mobility_codesign::network::{DemandSet, Network, TravelRequest};
use mobility_codesign::poset::{Ext, Point};

pub fn pt(v: &[f64]) -> Point {
    Point::from_values(v)
}

// ---------------------------------------------------------------------------
// Pareto oracle: O(n^2) all-pairs dominance filter.

/// Keeps every point not strictly dominated by another, deduplicates equal
/// points, and sorts lexicographically — the reference behavior for the
/// library's minimization.
pub fn pareto_oracle(points: &[Point]) -> Vec<Point> {
    let mut kept: Vec<Point> = Vec::new();
    'outer: for p in points {
        for q in points {
            if q != p && q.le(p) {
                continue 'outer;
            }
        }
        if !kept.contains(p) {
            kept.push(p.clone());
        }
    }
    kept.sort_by(|a, b| a.lex_cmp(b));
    kept
}

/// Random point on a coarse grid (to force ties and duplicates), with an
/// occasional unbounded coordinate.
pub fn random_point(rng: &mut impl Rng, dims: usize, allow_top: bool) -> Point {
    let coords = (0..dims)
        .map(|_| {
            if allow_top && rng.gen_ratio(1, 12) {
                Ext::Top
            } else {
                Ext::from_f64(rng.gen_range(0..9) as f64 * 0.5)
            }
        })
        .collect();
    Point::new(coords)
}

// ---------------------------------------------------------------------------
// Naive simplex: two-phase dense tableau with Bland's rule throughout.

/// Row sense for the naive LP: -1 is <=, 0 is =, 1 is >=.
pub struct NaiveRow {
    pub coeffs: Vec<f64>,
    pub sense: i8,
    pub rhs: f64,
}

pub enum NaiveOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

const NAIVE_EPS: f64 = 1e-9;

/// Minimizes `c . x` subject to the rows and `x >= 0`.
pub fn naive_simplex(c: &[f64], rows: &[NaiveRow]) -> NaiveOutcome {
    let n = c.len();
    let m = rows.len();

    // Normalize right-hand sides to be nonnegative.
    let mut sense = Vec::with_capacity(m);
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for row in rows {
        assert_eq!(row.coeffs.len(), n);
        if row.rhs < 0.0 {
            a.push(row.coeffs.iter().map(|v| -v).collect());
            b.push(-row.rhs);
            sense.push(-row.sense);
        } else {
            a.push(row.coeffs.clone());
            b.push(row.rhs);
            sense.push(row.sense);
        }
    }

    // Column layout: structural | slack/surplus | artificial.
    let n_slack = sense.iter().filter(|&&s| s != 0).count();
    let n_art = sense.iter().filter(|&&s| s >= 0).count();
    let n_total = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut tab: Vec<Vec<f64>> = a
        .iter()
        .map(|row| {
            let mut full = vec![0.0; n_total];
            full[..n].copy_from_slice(row);
            full
        })
        .collect();
    let mut basis = vec![0usize; m];
    let mut slack_col = n;
    let mut art_col = art_start;
    for (i, &s) in sense.iter().enumerate() {
        match s {
            -1 => {
                tab[i][slack_col] = 1.0;
                basis[i] = slack_col;
                slack_col += 1;
            }
            1 => {
                tab[i][slack_col] = -1.0;
                slack_col += 1;
                tab[i][art_col] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
            _ => {
                tab[i][art_col] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
        }
    }

    let pivot = |tab: &mut Vec<Vec<f64>>, b: &mut Vec<f64>, r: usize, j: usize| {
        let piv = tab[r][j];
        for v in tab[r].iter_mut() {
            *v /= piv;
        }
        b[r] /= piv;
        for i in 0..tab.len() {
            if i == r {
                continue;
            }
            let factor = tab[i][j];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n_total {
                let delta = factor * tab[r][k];
                tab[i][k] -= delta;
            }
            b[i] -= factor * b[r];
        }
    };

    // One phase of Bland-rule iterations against cost vector `cost`;
    // `entering_limit` excludes artificial columns in phase 2.
    let run_phase = |tab: &mut Vec<Vec<f64>>,
                         b: &mut Vec<f64>,
                         basis: &mut Vec<usize>,
                         cost: &[f64],
                         entering_limit: usize|
     -> bool {
        for _ in 0..50_000 {
            let reduced = |j: usize| -> f64 {
                let mut r = cost[j];
                for i in 0..m {
                    r -= cost[basis[i]] * tab[i][j];
                }
                r
            };
            let entering = (0..entering_limit).find(|&j| reduced(j) < -NAIVE_EPS);
            let Some(j) = entering else {
                return true; // optimal for this phase
            };
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if tab[i][j] > NAIVE_EPS {
                    let ratio = b[i] / tab[i][j];
                    let better = match leave {
                        None => true,
                        Some(r) => {
                            let best = b[r] / tab[r][j];
                            ratio < best - NAIVE_EPS
                                || (ratio < best + NAIVE_EPS && basis[i] < basis[r])
                        }
                    };
                    if better {
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return false; // unbounded direction
            };
            pivot(tab, b, r, j);
            basis[r] = j;
        }
        panic!("naive simplex exceeded its iteration budget");
    };

    // Phase 1.
    let mut phase1_cost = vec![0.0; n_total];
    for item in phase1_cost.iter_mut().skip(art_start) {
        *item = 1.0;
    }
    assert!(
        run_phase(&mut tab, &mut b, &mut basis, &phase1_cost, n_total),
        "phase 1 cannot be unbounded"
    );
    let art_level: f64 = (0..m)
        .filter(|&i| basis[i] >= art_start)
        .map(|i| b[i])
        .sum();
    if art_level > 1e-7 {
        return NaiveOutcome::Infeasible;
    }
    // Drive artificials out of the basis where possible; rows where no
    // structural pivot exists are redundant and stay harmlessly at zero.
    for r in 0..m {
        if basis[r] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| tab[r][j].abs() > 1e-7) {
                pivot(&mut tab, &mut b, r, j);
                basis[r] = j;
            }
        }
    }

    // Phase 2: original objective, artificials barred from entering.
    let mut cost = vec![0.0; n_total];
    cost[..n].copy_from_slice(c);
    if !run_phase(&mut tab, &mut b, &mut basis, &cost, art_start) {
        return NaiveOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = b[i];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    NaiveOutcome::Optimal { x, objective }
}

// ---------------------------------------------------------------------------
// Vertex enumeration: exhaustive basic-solution search.

/// Minimum objective over all basic feasible solutions of the system, or
/// `None` when no feasible basis exists. Only sound on bounded instances.
pub fn vertex_enum_min(c: &[f64], rows: &[NaiveRow]) -> Option<f64> {
    let n = c.len();
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.sense != 0).count();
    let n_total = n + n_slack;

    // Equality form: append one signed slack column per inequality.
    let mut eq: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut slack = n;
    for row in rows {
        let mut full = vec![0.0; n_total];
        full[..n].copy_from_slice(&row.coeffs);
        if row.sense != 0 {
            full[slack] = if row.sense < 0 { 1.0 } else { -1.0 };
            slack += 1;
        }
        eq.push(full);
        rhs.push(row.rhs);
    }

    let mut best: Option<f64> = None;
    let mut cols = vec![0usize; m];
    enumerate_bases(&eq, &rhs, c, n, n_total, 0, 0, &mut cols, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate_bases(
    eq: &[Vec<f64>],
    rhs: &[f64],
    c: &[f64],
    n_structural: usize,
    n_total: usize,
    depth: usize,
    start: usize,
    cols: &mut Vec<usize>,
    best: &mut Option<f64>,
) {
    let m = eq.len();
    if depth == m {
        if let Some(x) = solve_square(eq, rhs, cols) {
            if x.iter().all(|&v| v >= -1e-7) {
                let mut obj = 0.0;
                for (k, &j) in cols.iter().enumerate() {
                    if j < n_structural {
                        obj += c[j] * x[k];
                    }
                }
                if best.map_or(true, |b| obj < b) {
                    *best = Some(obj);
                }
            }
        }
        return;
    }
    for j in start..n_total {
        cols[depth] = j;
        enumerate_bases(eq, rhs, c, n_structural, n_total, depth + 1, j + 1, cols, best);
    }
}

/// Gaussian elimination on the m x m system restricted to `cols`; `None` when
/// near-singular.
fn solve_square(eq: &[Vec<f64>], rhs: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = eq.len();
    let mut a: Vec<Vec<f64>> = eq
        .iter()
        .map(|row| cols.iter().map(|&j| row[j]).collect())
        .collect();
    let mut b = rhs.to_vec();
    for k in 0..m {
        let piv_row = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv_row][k].abs() < 1e-9 {
            return None;
        }
        a.swap(k, piv_row);
        b.swap(k, piv_row);
        let piv = a[k][k];
        for i in 0..m {
            if i == k {
                continue;
            }
            let factor = a[i][k] / piv;
            if factor == 0.0 {
                continue;
            }
            for j in k..m {
                let delta = factor * a[k][j];
                a[i][j] -= delta;
            }
            b[i] -= factor * b[k];
        }
    }
    Some((0..m).map(|k| b[k] / a[k][k]).collect())
}

// ---------------------------------------------------------------------------
// Path-decomposition model of the routing problem.

pub struct PathFlowOracle {
    pub t_avg_s: f64,
    /// Stage-2 minimum road mileage rate (miles/hour), at the stage-1 time.
    pub mileage_per_hour: f64,
}

/// Enumerates all simple paths (by node) from `from` to `to`, as arc-index
/// sequences.
pub fn simple_paths(net: &Network, from: usize, to: usize) -> Vec<Vec<usize>> {
    let mut paths = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut visited = vec![false; net.nodes.len()];
    dfs_paths(net, from, to, &mut visited, &mut stack, &mut paths);
    paths
}

fn dfs_paths(
    net: &Network,
    at: usize,
    to: usize,
    visited: &mut Vec<bool>,
    stack: &mut Vec<usize>,
    paths: &mut Vec<Vec<usize>>,
) {
    if at == to {
        paths.push(stack.clone());
        return;
    }
    visited[at] = true;
    for (a, arc) in net.arcs.iter().enumerate() {
        if arc.tail == at && !visited[arc.head] {
            stack.push(a);
            dfs_paths(net, arc.head, to, visited, stack, paths);
            stack.pop();
        }
    }
    visited[at] = false;
}

/// Solves the routing problem over an explicit path decomposition: one
/// variable per simple path per request plus per-arc rebalancing variables,
/// minimizing average time, then road mileage at the fixed time optimum.
/// `None` means the instance is infeasible.
pub fn path_flow_oracle(
    net: &Network,
    demand: &DemandSet,
    n_v_max: f64,
    n_m_max: f64,
) -> Option<PathFlowOracle> {
    use mobility_codesign::network::ArcKind;

    let av_arcs: Vec<usize> = (0..net.arcs.len())
        .filter(|&a| net.arcs[a].kind == ArcKind::RoadAV)
        .collect();
    let mm_arcs: Vec<usize> = (0..net.arcs.len())
        .filter(|&a| net.arcs[a].kind == ArcKind::RoadMM)
        .collect();

    // Variables: request paths (concatenated) then AV rebal then MM rebal.
    let mut path_sets: Vec<Vec<Vec<usize>>> = Vec::new();
    for req in &demand.requests {
        let from = net.node_index(&req.origin)?;
        let to = net.node_index(&req.destination)?;
        let paths = simple_paths(net, from, to);
        if paths.is_empty() {
            return None;
        }
        path_sets.push(paths);
    }
    let n_paths: usize = path_sets.iter().map(|p| p.len()).sum();
    let av_base = n_paths;
    let mm_base = av_base + av_arcs.len();
    let n_vars = mm_base + mm_arcs.len();
    let alpha_tot: f64 = demand.requests.iter().map(|r| r.rate_per_hour).sum();

    let path_col = |m: usize, p: usize| -> usize {
        path_sets[..m].iter().map(|s| s.len()).sum::<usize>() + p
    };
    let path_uses = |m: usize, p: usize, a: usize| -> f64 {
        path_sets[m][p].iter().filter(|&&x| x == a).count() as f64
    };

    let mut rows: Vec<NaiveRow> = Vec::new();

    // Demand satisfaction per request.
    for (m, req) in demand.requests.iter().enumerate() {
        let mut coeffs = vec![0.0; n_vars];
        for p in 0..path_sets[m].len() {
            coeffs[path_col(m, p)] = 1.0;
        }
        rows.push(NaiveRow { coeffs, sense: 0, rhs: req.rate_per_hour });
    }

    // Vehicle balance at every road node, per layer.
    for (arcs, base) in [(&av_arcs, av_base), (&mm_arcs, mm_base)] {
        let road_nodes: std::collections::BTreeSet<usize> = arcs
            .iter()
            .flat_map(|&a| [net.arcs[a].tail, net.arcs[a].head])
            .collect();
        for &v in &road_nodes {
            let mut coeffs = vec![0.0; n_vars];
            for (k, &a) in arcs.iter().enumerate() {
                let arc = &net.arcs[a];
                let sign = if arc.tail == v {
                    1.0
                } else if arc.head == v {
                    -1.0
                } else {
                    continue;
                };
                for (m, set) in path_sets.iter().enumerate() {
                    for p in 0..set.len() {
                        coeffs[path_col(m, p)] += sign * path_uses(m, p, a);
                    }
                }
                coeffs[base + k] += sign;
            }
            rows.push(NaiveRow { coeffs, sense: 0, rhs: 0.0 });
        }
    }

    // Congestion headroom per AV arc.
    for (k, &a) in av_arcs.iter().enumerate() {
        let arc = &net.arcs[a];
        let cap = arc.capacity_vph.unwrap_or(f64::INFINITY);
        if !cap.is_finite() {
            continue;
        }
        let mut coeffs = vec![0.0; n_vars];
        for (m, set) in path_sets.iter().enumerate() {
            for p in 0..set.len() {
                coeffs[path_col(m, p)] += path_uses(m, p, a);
            }
        }
        coeffs[av_base + k] += 1.0;
        rows.push(NaiveRow {
            coeffs,
            sense: -1,
            rhs: cap - arc.baseline_vph.unwrap_or(0.0),
        });
    }

    // Fleet budgets.
    for (arcs, base, budget) in [(&av_arcs, av_base, n_v_max), (&mm_arcs, mm_base, n_m_max)] {
        let mut coeffs = vec![0.0; n_vars];
        for (k, &a) in arcs.iter().enumerate() {
            let t = net.arcs[a].travel_time_s / 3600.0;
            for (m, set) in path_sets.iter().enumerate() {
                for p in 0..set.len() {
                    coeffs[path_col(m, p)] += t * path_uses(m, p, a);
                }
            }
            coeffs[base + k] += t;
        }
        rows.push(NaiveRow { coeffs, sense: -1, rhs: budget });
    }

    // Stage 1: average travel time in hours.
    let mut time_cost = vec![0.0; n_vars];
    for (m, set) in path_sets.iter().enumerate() {
        for (p, path) in set.iter().enumerate() {
            let t: f64 = path.iter().map(|&a| net.arcs[a].travel_time_s).sum();
            time_cost[path_col(m, p)] = t / 3600.0 / alpha_tot;
        }
    }
    let t1 = match naive_simplex(&time_cost, &rows) {
        NaiveOutcome::Optimal { objective, .. } => objective,
        NaiveOutcome::Infeasible => return None,
        NaiveOutcome::Unbounded => panic!("time stage cannot be unbounded"),
    };

    // Stage 2: road mileage at the time optimum.
    rows.push(NaiveRow {
        coeffs: time_cost.clone(),
        sense: -1,
        rhs: t1 * (1.0 + 1e-9) + 1e-12,
    });
    let mut mile_cost = vec![0.0; n_vars];
    for (arcs, base) in [(&av_arcs, av_base), (&mm_arcs, mm_base)] {
        for (k, &a) in arcs.iter().enumerate() {
            let len = net.arcs[a].length_miles.unwrap_or(0.0);
            for (m, set) in path_sets.iter().enumerate() {
                for p in 0..set.len() {
                    mile_cost[path_col(m, p)] += len * path_uses(m, p, a);
                }
            }
            mile_cost[base + k] += len;
        }
    }
    let mileage = match naive_simplex(&mile_cost, &rows) {
        NaiveOutcome::Optimal { objective, .. } => objective,
        _ => panic!("mileage stage shares the feasible region of stage 1"),
    };

    Some(PathFlowOracle { t_avg_s: t1 * 3600.0, mileage_per_hour: mileage })
}

/// Largest constraint violation of reported flows, recomputed from the
/// network and demand without going through the LP builder.
pub fn flow_residual(
    net: &Network,
    demand: &DemandSet,
    primal: &[f64],
    n_v_max: f64,
    n_m_max: f64,
) -> f64 {
    use mobility_codesign::network::ArcKind;

    let n_arcs = net.arcs.len();
    let col = |m: usize, a: usize| m * n_arcs + a;
    let av_arcs: Vec<usize> =
        (0..n_arcs).filter(|&a| net.arcs[a].kind == ArcKind::RoadAV).collect();
    let mm_arcs: Vec<usize> =
        (0..n_arcs).filter(|&a| net.arcs[a].kind == ArcKind::RoadMM).collect();
    let av_rebal = demand.requests.len() * n_arcs;
    let mm_rebal = av_rebal + av_arcs.len();
    let mut worst: f64 = primal.iter().fold(0.0, |w, &v| w.max(-v));

    for (m, req) in demand.requests.iter().enumerate() {
        let origin = net.node_index(&req.origin).unwrap();
        let dest = net.node_index(&req.destination).unwrap();
        for v in 0..net.nodes.len() {
            let mut net_out = 0.0;
            for (a, arc) in net.arcs.iter().enumerate() {
                if arc.tail == v {
                    net_out += primal[col(m, a)];
                }
                if arc.head == v {
                    net_out -= primal[col(m, a)];
                }
            }
            let want = if v == origin {
                req.rate_per_hour
            } else if v == dest {
                -req.rate_per_hour
            } else {
                0.0
            };
            worst = worst.max((net_out - want).abs());
        }
    }

    for (arcs, rebal, budget) in [(&av_arcs, av_rebal, n_v_max), (&mm_arcs, mm_rebal, n_m_max)] {
        let mut balance = std::collections::BTreeMap::new();
        let mut busy = 0.0;
        for (k, &a) in arcs.iter().enumerate() {
            let arc = &net.arcs[a];
            let total: f64 = (0..demand.requests.len())
                .map(|m| primal[col(m, a)])
                .sum::<f64>()
                + primal[rebal + k];
            *balance.entry(arc.tail).or_insert(0.0) += total;
            *balance.entry(arc.head).or_insert(0.0) -= total;
            busy += total * arc.travel_time_s / 3600.0;
            if arc.kind == ArcKind::RoadAV {
                if let Some(cap) = arc.capacity_vph {
                    let headroom = cap - arc.baseline_vph.unwrap_or(0.0);
                    worst = worst.max(total - headroom);
                }
            }
        }
        for v in balance.values() {
            worst = worst.max(v.abs());
        }
        worst = worst.max(busy - budget);
    }
    worst
}

/// The worked two-layer corridor: one-mile walk (1161 s) against an AV ride
/// (300 s pickup + 180 s drive + 60 s exit).
pub fn hand_instance() -> (Network, DemandSet) {
    use mobility_codesign::network::{compute_travel_times, filter_av_arcs, NetworkParams};

    let json = serde_json::json!({
        "nodes": [
            {"id": "W_A", "layer": "Walk", "x": 0.0, "y": 0.0},
            {"id": "W_B", "layer": "Walk", "x": 1.0, "y": 0.0},
            {"id": "R_A", "layer": "RoadAV", "x": 0.0, "y": 0.0},
            {"id": "R_B", "layer": "RoadAV", "x": 1.0, "y": 0.0}
        ],
        "arcs": [
            {"tail": "W_A", "head": "W_B", "kind": "Walk", "length_miles": 0.99975},
            {"tail": "W_B", "head": "W_A", "kind": "Walk", "length_miles": 0.99975},
            {"tail": "W_A", "head": "R_A", "kind": "ModeSwitch"},
            {"tail": "R_A", "head": "R_B", "kind": "RoadAV", "length_miles": 1.5,
             "limit_av_mph": 30.0, "capacity_vph": 1000.0, "baseline_vph": 0.0},
            {"tail": "R_B", "head": "R_A", "kind": "RoadAV", "length_miles": 1.5,
             "limit_av_mph": 30.0, "capacity_vph": 1000.0, "baseline_vph": 0.0},
            {"tail": "R_B", "head": "W_B", "kind": "ModeSwitch"}
        ]
    })
    .to_string();
    let params = NetworkParams::default();
    let net = Network::from_json(&json).unwrap();
    let net = compute_travel_times(filter_av_arcs(net, &params), &params).unwrap();
    let demand = DemandSet {
        requests: vec![TravelRequest {
            origin: "W_A".into(),
            destination: "W_B".into(),
            rate_per_hour: 100.0,
        }],
    };
    (net, demand)
}

// ---------------------------------------------------------------------------
// Random routing instances.

/// Small random multilayer instance: 2-3 walk nodes fully interconnected,
/// plus a 2-3 node road layer (AV or MM) bridged by mode switches, and 1-3
/// requests. Six nodes at most.
pub fn random_flow_instance(rng: &mut impl Rng) -> (Network, DemandSet, f64, f64) {
    use mobility_codesign::network::{compute_travel_times, NetworkParams};

    let n_walk = rng.gen_range(2..=3usize);
    let n_road = rng.gen_range(2..=3usize);
    let road_is_av = rng.gen_bool(0.6);
    let (road_layer, road_kind) = if road_is_av {
        ("RoadAV", "RoadAV")
    } else {
        ("RoadMM", "RoadMM")
    };

    let mut nodes = Vec::new();
    for i in 0..n_walk {
        nodes.push(serde_json::json!({
            "id": format!("W{i}"), "layer": "Walk", "x": i as f64, "y": 0.0
        }));
    }
    for i in 0..n_road {
        nodes.push(serde_json::json!({
            "id": format!("R{i}"), "layer": road_layer, "x": i as f64, "y": 1.0
        }));
    }

    let len = |rng: &mut dyn rand::RngCore| (rng.gen_range(2..=20) as f64) * 0.05;
    let mut arcs = Vec::new();
    for i in 0..n_walk {
        for j in 0..n_walk {
            if i != j {
                arcs.push(serde_json::json!({
                    "tail": format!("W{i}"), "head": format!("W{j}"),
                    "kind": "Walk", "length_miles": len(rng)
                }));
            }
        }
    }
    for i in 0..n_road {
        for j in 0..n_road {
            if i == j || !rng.gen_bool(0.8) {
                continue;
            }
            let mut arc = serde_json::json!({
                "tail": format!("R{i}"), "head": format!("R{j}"),
                "kind": road_kind, "length_miles": len(rng)
            });
            if road_is_av {
                arc["limit_av_mph"] = 30.0.into();
                arc["capacity_vph"] = [8.0, 25.0, 1e6][rng.gen_range(0..3)].into();
                arc["baseline_vph"] = (rng.gen_range(0..3) as f64).into();
            } else {
                arc["limit_mm_mph"] = 15.0.into();
            }
            arcs.push(arc);
        }
    }
    // Bridge each road node to one walk node, both directions.
    for i in 0..n_road {
        let w = i % n_walk;
        arcs.push(serde_json::json!({
            "tail": format!("W{w}"), "head": format!("R{i}"), "kind": "ModeSwitch"
        }));
        arcs.push(serde_json::json!({
            "tail": format!("R{i}"), "head": format!("W{w}"), "kind": "ModeSwitch"
        }));
    }

    let json = serde_json::json!({ "nodes": nodes, "arcs": arcs }).to_string();
    let net = Network::from_json(&json).expect("generated network parses");
    let net = compute_travel_times(net, &NetworkParams::default()).expect("valid layers");

    let n_requests = rng.gen_range(1..=3usize);
    let mut requests = Vec::new();
    for _ in 0..n_requests {
        let o = rng.gen_range(0..n_walk);
        let mut d = rng.gen_range(0..n_walk);
        while d == o {
            d = rng.gen_range(0..n_walk);
        }
        requests.push(TravelRequest {
            origin: format!("W{o}"),
            destination: format!("W{d}"),
            rate_per_hour: [5.0, 10.0, 20.0][rng.gen_range(0..3)],
        });
    }
    let demand = DemandSet { requests };

    let fleet = [0.0, 0.3, 1.0, 4.0, 1000.0][rng.gen_range(0..5)];
    let (n_v_max, n_m_max) = if road_is_av { (fleet, 0.0) } else { (0.0, fleet) };
    (net, demand, n_v_max, n_m_max)
}

// ---------------------------------------------------------------------------
// Random catalogs and exhaustive composition oracles.

use mobility_codesign::dp::Implementation;

/// Random catalog on coarse integer grids; deliberately may be non-monotone.
pub fn random_catalog(
    rng: &mut impl Rng,
    fun_arity: usize,
    res_arity: usize,
) -> Vec<Implementation> {
    let n = rng.gen_range(1..=10usize);
    (0..n)
        .map(|i| {
            let provides = Point::from_values(
                &(0..fun_arity)
                    .map(|_| rng.gen_range(0..5) as f64)
                    .collect::<Vec<_>>(),
            );
            let requires = Point::from_values(
                &(0..res_arity)
                    .map(|_| rng.gen_range(0..6) as f64)
                    .collect::<Vec<_>>(),
            );
            Implementation::new(format!("e{i}"), provides, requires)
        })
        .collect()
}

/// Exhaustive resource enumeration of a catalog chain evaluated at `f`:
/// every implementation tuple whose provides cover the running requirement.
pub fn chain_oracle(catalogs: &[&[Implementation]], f: &Point) -> Vec<Point> {
    let mut frontier: Vec<Point> = vec![f.clone()];
    for catalog in catalogs {
        let mut next = Vec::new();
        for need in &frontier {
            for imp in catalog.iter() {
                if need.le(&imp.provides) {
                    next.push(imp.requires.clone());
                }
            }
        }
        frontier = next;
    }
    pareto_oracle(&frontier)
}

/// Exhaustive oracle for a two-catalog parallel composition at `(f1, f2)`.
pub fn parallel_oracle(
    c1: &[Implementation],
    c2: &[Implementation],
    f1: &Point,
    f2: &Point,
) -> Vec<Point> {
    let mut products = Vec::new();
    for a in c1 {
        if !f1.le(&a.provides) {
            continue;
        }
        for b in c2 {
            if f2.le(&b.provides) {
                products.push(a.requires.concat(&b.requires));
            }
        }
    }
    pareto_oracle(&products)
}
