//! Acyclic co-design diagrams.
//!
//! A diagram wires design problems together: an edge feeds a resource
//! coordinate of one node into a functionality coordinate of another, meaning
//! the downstream functionality must be provided at least at the level the
//! upstream node requires. Evaluation walks the nodes in topological order,
//! branching over each node's minimal resource antichain, and returns the
//! Pareto-minimal sink points with full per-node provenance.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dp::{DesignProblem, DpError, Provenance};
use crate::poset::{pareto_min, Ext, Point, PosetError};

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("diagram contains a cycle through node '{0}'")]
    Cyclic(String),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("coordinate index {coord} out of range for node '{node}' ({what})")]
    CoordOutOfRange {
        node: String,
        coord: usize,
        what: &'static str,
    },
    #[error("functionality coordinate {coord} of node '{node}' is fed more than once")]
    DuplicateFeed { node: String, coord: usize },
    #[error("functionality coordinate {coord} of node '{node}' is neither wired nor a source")]
    UnfedCoordinate { node: String, coord: usize },
    #[error("edge units mismatch: '{from_unit}' ({from_node}) -> '{to_unit}' ({to_node})")]
    UnitMismatch {
        from_node: String,
        from_unit: String,
        to_node: String,
        to_unit: String,
    },
    #[error("source assignment has {got} values, diagram declares {expected} sources")]
    SourceArity { expected: usize, got: usize },
    #[error("provenance for node '{0}' does not match any query result")]
    ReplayMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// A co-design constraint: resource coordinate `from.1` of node `from.0`
/// lower-bounds functionality coordinate `to.1` of node `to.0`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: (NodeId, usize),
    pub to: (NodeId, usize),
}

struct DiagramNode {
    dp: DesignProblem,
    fun_units: Vec<String>,
    res_units: Vec<String>,
}

/// Builder-validated acyclic diagram.
pub struct CoDesignDiagram {
    nodes: Vec<DiagramNode>,
    edges: Vec<Edge>,
    sources: Vec<(NodeId, usize)>,
    sinks: Vec<(NodeId, usize)>,
    topo_order: Vec<usize>,
    /// For each (node, functionality coord): where its value comes from.
    feeds: Vec<Vec<Feed>>,
}

#[derive(Debug, Clone, Copy)]
enum Feed {
    Source(usize),
    Edge { node: usize, coord: usize },
}

#[derive(Default)]
pub struct DiagramBuilder {
    nodes: Vec<DiagramNode>,
    edges: Vec<Edge>,
    sources: Vec<(NodeId, usize)>,
    sinks: Vec<(NodeId, usize)>,
}

impl DiagramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node; `fun_units` and `res_units` name the semantic unit of
    /// each coordinate and must match across wired edges.
    pub fn add_node(
        &mut self,
        dp: DesignProblem,
        fun_units: &[&str],
        res_units: &[&str],
    ) -> NodeId {
        assert_eq!(dp.functionality_arity(), fun_units.len());
        assert_eq!(dp.resource_arity(), res_units.len());
        self.nodes.push(DiagramNode {
            dp,
            fun_units: fun_units.iter().map(|s| s.to_string()).collect(),
            res_units: res_units.iter().map(|s| s.to_string()).collect(),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn connect(&mut self, from: (NodeId, usize), to: (NodeId, usize)) {
        self.edges.push(Edge { from, to });
    }

    pub fn expose_source(&mut self, at: (NodeId, usize)) {
        self.sources.push(at);
    }

    pub fn expose_sink(&mut self, at: (NodeId, usize)) {
        self.sinks.push(at);
    }

    pub fn build(self) -> Result<CoDesignDiagram, DiagramError> {
        let n = self.nodes.len();
        let node_name = |i: usize| self.nodes[i].dp.name().to_string();
        let check_node = |id: NodeId| -> Result<usize, DiagramError> {
            if id.0 < n {
                Ok(id.0)
            } else {
                Err(DiagramError::NodeOutOfRange(id.0))
            }
        };

        let mut feeds: Vec<Vec<Option<Feed>>> = self
            .nodes
            .iter()
            .map(|nd| vec![None; nd.dp.functionality_arity()])
            .collect();
        for (si, &(id, coord)) in self.sources.iter().enumerate() {
            let i = check_node(id)?;
            if coord >= feeds[i].len() {
                return Err(DiagramError::CoordOutOfRange {
                    node: node_name(i),
                    coord,
                    what: "functionality",
                });
            }
            if feeds[i][coord].is_some() {
                return Err(DiagramError::DuplicateFeed {
                    node: node_name(i),
                    coord,
                });
            }
            feeds[i][coord] = Some(Feed::Source(si));
        }
        for edge in &self.edges {
            let from = check_node(edge.from.0)?;
            let to = check_node(edge.to.0)?;
            if edge.from.1 >= self.nodes[from].res_units.len() {
                return Err(DiagramError::CoordOutOfRange {
                    node: node_name(from),
                    coord: edge.from.1,
                    what: "resource",
                });
            }
            if edge.to.1 >= feeds[to].len() {
                return Err(DiagramError::CoordOutOfRange {
                    node: node_name(to),
                    coord: edge.to.1,
                    what: "functionality",
                });
            }
            let from_unit = &self.nodes[from].res_units[edge.from.1];
            let to_unit = &self.nodes[to].fun_units[edge.to.1];
            if from_unit != to_unit {
                return Err(DiagramError::UnitMismatch {
                    from_node: node_name(from),
                    from_unit: from_unit.clone(),
                    to_node: node_name(to),
                    to_unit: to_unit.clone(),
                });
            }
            if feeds[to][edge.to.1].is_some() {
                return Err(DiagramError::DuplicateFeed {
                    node: node_name(to),
                    coord: edge.to.1,
                });
            }
            feeds[to][edge.to.1] = Some(Feed::Edge {
                node: from,
                coord: edge.from.1,
            });
        }
        let mut resolved_feeds = Vec::with_capacity(n);
        for (i, node_feeds) in feeds.into_iter().enumerate() {
            let mut row = Vec::with_capacity(node_feeds.len());
            for (coord, feed) in node_feeds.into_iter().enumerate() {
                row.push(feed.ok_or_else(|| DiagramError::UnfedCoordinate {
                    node: node_name(i),
                    coord,
                })?);
            }
            resolved_feeds.push(row);
        }
        for &(id, coord) in &self.sinks {
            let i = check_node(id)?;
            if coord >= self.nodes[i].res_units.len() {
                return Err(DiagramError::CoordOutOfRange {
                    node: node_name(i),
                    coord,
                    what: "resource",
                });
            }
        }

        // Kahn topological sort over node dependencies; ties resolved by
        // node index for determinism.
        let mut indegree = vec![0usize; n];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (to, row) in resolved_feeds.iter().enumerate() {
            for feed in row {
                if let Feed::Edge { node: from, .. } = feed {
                    succs[*from].push(to);
                    indegree[to] += 1;
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo_order = Vec::with_capacity(n);
        while let Some(&i) = ready.first() {
            ready.remove(0);
            topo_order.push(i);
            for &s in &succs[i] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(s);
                    ready.sort_unstable();
                }
            }
        }
        if topo_order.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(DiagramError::Cyclic(node_name(stuck)));
        }

        Ok(CoDesignDiagram {
            nodes: self.nodes,
            edges: self.edges,
            sources: self.sources,
            sinks: self.sinks,
            topo_order,
            feeds: resolved_feeds,
        })
    }
}

/// One Pareto-minimal sink point together with the per-node provenance
/// realizing it.
#[derive(Debug, Clone)]
pub struct ParetoRecord {
    pub resources: Point,
    /// Node name -> provenance of the chosen implementation, and the full
    /// resource point the node was resolved to.
    pub provenance: BTreeMap<String, (Provenance, Point)>,
}

#[derive(Clone)]
struct PartialState {
    /// Resolved resource point and provenance per node (indexed by node).
    resolved: Vec<Option<(Point, Provenance)>>,
}

impl CoDesignDiagram {
    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn num_sinks(&self) -> usize {
        self.sinks.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn functionality_of(
        &self,
        node: usize,
        state: &PartialState,
        source_values: &[Ext],
    ) -> Point {
        let coords = self.feeds[node]
            .iter()
            .map(|feed| match feed {
                Feed::Source(si) => source_values[*si],
                Feed::Edge { node: from, coord } => {
                    let (point, _) = state.resolved[*from]
                        .as_ref()
                        .expect("topological order resolves dependencies first");
                    point.coord(*coord)
                }
            })
            .collect();
        Point::new(coords)
    }

    fn sink_point(&self, state: &PartialState) -> Point {
        let coords = self
            .sinks
            .iter()
            .map(|&(id, coord)| {
                let (point, _) = state.resolved[id.0].as_ref().expect("all nodes resolved");
                point.coord(coord)
            })
            .collect();
        Point::new(coords)
    }

    /// Evaluates the diagram for one assignment of the exposed source
    /// coordinates. Returns the Pareto-minimal sink antichain with
    /// provenance, sorted lexicographically by sink point.
    pub fn solve(&self, source_values: &[Ext]) -> Result<Vec<ParetoRecord>, DiagramError> {
        if source_values.len() != self.sources.len() {
            return Err(DiagramError::SourceArity {
                expected: self.sources.len(),
                got: source_values.len(),
            });
        }
        let mut states = vec![PartialState {
            resolved: vec![None; self.nodes.len()],
        }];
        for &node in &self.topo_order {
            let mut next_states = Vec::new();
            for state in &states {
                let f = self.functionality_of(node, state, source_values);
                // Branch over all feasible implementations, not just the
                // node-local minimal ones: a non-monotone downstream node can
                // turn a dominated intermediate into a minimal sink point.
                for entry in &self.nodes[node].dp.feasible(&f)? {
                    let mut branched = state.clone();
                    branched.resolved[node] =
                        Some((entry.resources.clone(), entry.provenance.clone()));
                    next_states.push(branched);
                }
            }
            states = next_states;
            if states.is_empty() {
                return Ok(Vec::new()); // some node is infeasible everywhere
            }
        }

        let sink_points: Vec<Point> = states.iter().map(|s| self.sink_point(s)).collect();
        let front = pareto_min(self.sinks.len(), sink_points.clone())?;
        let mut records = Vec::with_capacity(front.len());
        for p in front.points() {
            let idx = sink_points
                .iter()
                .position(|q| q == p)
                .expect("minimal point comes from a state");
            let state = &states[idx];
            let mut provenance = BTreeMap::new();
            for (i, resolved) in state.resolved.iter().enumerate() {
                let (point, prov) = resolved.as_ref().expect("all nodes resolved");
                provenance.insert(
                    self.nodes[i].dp.name().to_string(),
                    (prov.clone(), point.clone()),
                );
            }
            records.push(ParetoRecord {
                resources: p.clone(),
                provenance,
            });
        }
        Ok(records)
    }

    /// Re-evaluates the diagram pinned to a record's provenance and returns
    /// the reproduced sink point. Fails if the recorded choices no longer
    /// appear among the nodes' query results.
    pub fn replay(
        &self,
        source_values: &[Ext],
        record: &ParetoRecord,
    ) -> Result<Point, DiagramError> {
        if source_values.len() != self.sources.len() {
            return Err(DiagramError::SourceArity {
                expected: self.sources.len(),
                got: source_values.len(),
            });
        }
        let mut state = PartialState {
            resolved: vec![None; self.nodes.len()],
        };
        for &node in &self.topo_order {
            let name = self.nodes[node].dp.name();
            let recorded = record
                .provenance
                .get(name)
                .ok_or_else(|| DiagramError::ReplayMismatch(name.to_string()))?;
            let f = self.functionality_of(node, &state, source_values);
            let candidates = self.nodes[node].dp.feasible(&f)?;
            let entry = candidates
                .iter()
                .find(|e| e.provenance == recorded.0)
                .ok_or_else(|| DiagramError::ReplayMismatch(name.to_string()))?;
            state.resolved[node] = Some((entry.resources.clone(), entry.provenance.clone()));
        }
        Ok(self.sink_point(&state))
    }
}
