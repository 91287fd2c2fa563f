//! Policy-filtered route planning over a multi-region graph.
//!
//! Regions belong to jurisdictions; an edge is a border crossing iff its
//! endpoint jurisdictions differ. Planning runs a Dijkstra-style search on
//! the subgraph of jurisdictions the packet may lawfully visit, so a route
//! never transits a territory where the transfer would be denied. Ties are
//! broken by fewer hops, then by lexicographic hop sequence, which makes
//! planning fully deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{self, DataPacket, PolicyError, Registry, SensitivityClass};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("end-to-end transfer is denied by policy")]
    DeniedTransfer,
    #[error("no policy-compliant route exists")]
    NoCompliantRoute,
    #[error("unknown region '{id}'")]
    UnknownRegion { id: String },
    #[error("no region belongs to jurisdiction '{code}'")]
    NoRegionInJurisdiction { code: String },
    #[error("invalid graph: {reason}")]
    InvalidGraph { reason: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// A deployment region located in exactly one jurisdiction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub jurisdiction: String,
}

#[derive(Debug, Clone)]
pub struct Edge<F> {
    pub a: usize,
    pub b: usize,
    pub latency_ms: F,
    pub border_crossing: bool,
}

/// Undirected region graph with non-negative latency costs.
#[derive(Debug, Clone)]
pub struct RegionGraph<F> {
    regions: Vec<Region>,
    index: BTreeMap<String, usize>,
    edges: Vec<Edge<F>>,
    adjacency: Vec<Vec<(usize, usize)>>, // (neighbor, edge index)
}

impl<F: Real> RegionGraph<F> {
    pub fn new(
        regions: Vec<Region>,
        edges: Vec<(String, String, F)>,
    ) -> Result<Self, RouteError> {
        let mut index = BTreeMap::new();
        for (i, region) in regions.iter().enumerate() {
            if index.insert(region.id.clone(), i).is_some() {
                return Err(RouteError::InvalidGraph {
                    reason: format!("duplicate region id '{}'", region.id),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); regions.len()];
        let mut edge_recs = Vec::with_capacity(edges.len());
        for (a_id, b_id, cost) in edges {
            let a = *index.get(&a_id).ok_or(RouteError::UnknownRegion { id: a_id.clone() })?;
            let b = *index.get(&b_id).ok_or(RouteError::UnknownRegion { id: b_id.clone() })?;
            if a == b {
                return Err(RouteError::InvalidGraph {
                    reason: format!("self-loop on region '{a_id}'"),
                });
            }
            if cost < F::zero() || !cost.is_finite() {
                return Err(RouteError::InvalidGraph {
                    reason: format!("edge {a_id}-{b_id} needs a finite non-negative cost"),
                });
            }
            let border_crossing = regions[a].jurisdiction != regions[b].jurisdiction;
            let e = edge_recs.len();
            edge_recs.push(Edge {
                a,
                b,
                latency_ms: cost,
                border_crossing,
            });
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
        }
        for neighbors in &mut adjacency {
            neighbors.sort_by(|x, y| regions[x.0].id.cmp(&regions[y.0].id));
        }
        Ok(Self {
            regions,
            index,
            edges: edge_recs,
            adjacency,
        })
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.index.get(id).map(|&i| &self.regions[i])
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn edges(&self) -> &[Edge<F>] {
        &self.edges
    }

    /// Region ids within a jurisdiction, in lexicographic order.
    pub fn regions_in(&self, jurisdiction: &str) -> Vec<&Region> {
        self.index
            .values()
            .map(|&i| &self.regions[i])
            .filter(|r| r.jurisdiction == jurisdiction)
            .collect()
    }

    pub fn edge_between(&self, a: &str, b: &str) -> Option<&Edge<F>> {
        let (&ia, &ib) = (self.index.get(a)?, self.index.get(b)?);
        self.edges
            .iter()
            .find(|e| (e.a == ia && e.b == ib) || (e.a == ib && e.b == ia))
    }

    pub fn is_connected(&self) -> bool {
        if self.regions.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.regions.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, _) in &self.adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A planned data path: ordered region ids plus the summed edge cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route<F> {
    pub hops: Vec<String>,
    pub total_cost: F,
}

impl<F: Real> Route<F> {
    /// Border-crossing (from, to) region pairs along the route.
    pub fn crossings<'g>(&self, graph: &'g RegionGraph<F>) -> Vec<(&'g Region, &'g Region)> {
        self.hops
            .windows(2)
            .filter_map(|w| {
                let from = graph.region(&w[0])?;
                let to = graph.region(&w[1])?;
                (from.jurisdiction != to.jurisdiction).then_some((from, to))
            })
            .collect()
    }
}

/// Jurisdictions the packet may transit: those where re-evaluating the
/// transfer with that jurisdiction as destination is not a deny. The
/// packet's own origin and destination are always permitted (the end-to-end
/// decision is checked separately).
fn permitted_jurisdictions<F: Real>(
    packet: &DataPacket,
    class: SensitivityClass,
    graph: &RegionGraph<F>,
    registry: &Registry,
) -> Result<BTreeSet<String>, RouteError> {
    let mut permitted = BTreeSet::new();
    permitted.insert(packet.origin.clone());
    permitted.insert(packet.destination.clone());
    let jurisdictions: BTreeSet<&str> = graph
        .regions()
        .iter()
        .map(|r| r.jurisdiction.as_str())
        .collect();
    for code in jurisdictions {
        if permitted.contains(code) {
            continue;
        }
        let mut probe = packet.clone();
        probe.destination = code.to_owned();
        if !policy::evaluate_transfer_classified(&probe, class, registry)?.is_deny() {
            permitted.insert(code.to_owned());
        }
    }
    Ok(permitted)
}

/// Heap entry ordered by (cost, hop count, lexicographic hop sequence),
/// reversed so `BinaryHeap` pops the smallest key first. The composite key
/// is monotone under path extension for equal-length prefixes, so the first
/// settle per node is optimal.
struct QueueEntry<F> {
    cost: F,
    path: Vec<usize>,
    lex: Vec<String>,
}

impl<F: Real> PartialEq for QueueEntry<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F: Real> Eq for QueueEntry<F> {}
impl<F: Real> PartialOrd for QueueEntry<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Real> Ord for QueueEntry<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("finite costs")
            .then_with(|| other.path.len().cmp(&self.path.len()))
            .then_with(|| other.lex.cmp(&self.lex))
    }
}

fn dijkstra_best<F: Real>(
    graph: &RegionGraph<F>,
    start: usize,
    goal: usize,
    allowed: &[bool],
) -> Result<Route<F>, RouteError> {
    if start == goal {
        return Ok(Route {
            hops: vec![graph.regions[start].id.clone()],
            total_cost: F::zero(),
        });
    }
    if !allowed[start] || !allowed[goal] {
        return Err(RouteError::NoCompliantRoute);
    }
    let render = |path: &[usize]| -> Vec<String> {
        path.iter().map(|&i| graph.regions[i].id.clone()).collect()
    };
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry {
        cost: F::zero(),
        path: vec![start],
        lex: render(&[start]),
    });
    let mut settled = vec![false; graph.regions.len()];
    while let Some(QueueEntry { cost, path, lex }) = heap.pop() {
        let node = *path.last().unwrap();
        if settled[node] {
            continue;
        }
        settled[node] = true;
        if node == goal {
            return Ok(Route {
                hops: lex,
                total_cost: cost,
            });
        }
        for &(next, edge_idx) in &graph.adjacency[node] {
            if settled[next] || !allowed[next] {
                continue;
            }
            let mut p = path.clone();
            p.push(next);
            let lex = render(&p);
            heap.push(QueueEntry {
                cost: cost + graph.edges[edge_idx].latency_ms,
                path: p,
                lex,
            });
        }
    }
    Err(RouteError::NoCompliantRoute)
}

/// Minimum-cost policy-compliant path between two concrete regions.
pub fn plan_route_between<F: Real>(
    packet: &DataPacket,
    origin_region: &str,
    destination_region: &str,
    graph: &RegionGraph<F>,
    registry: &Registry,
) -> Result<Route<F>, RouteError> {
    let class = policy::classify_packet(packet, registry)?;
    plan_route_between_classified(packet, class, origin_region, destination_region, graph, registry)
}

/// [`plan_route_between`] with the effective class supplied by the caller,
/// for pipelines that classify (possibly wrongly) up front.
pub fn plan_route_between_classified<F: Real>(
    packet: &DataPacket,
    class: SensitivityClass,
    origin_region: &str,
    destination_region: &str,
    graph: &RegionGraph<F>,
    registry: &Registry,
) -> Result<Route<F>, RouteError> {
    let decision = policy::evaluate_transfer_classified(packet, class, registry)?;
    if decision.is_deny() {
        return Err(RouteError::DeniedTransfer);
    }
    let start = *graph
        .index
        .get(origin_region)
        .ok_or_else(|| RouteError::UnknownRegion { id: origin_region.to_owned() })?;
    let goal = *graph
        .index
        .get(destination_region)
        .ok_or_else(|| RouteError::UnknownRegion { id: destination_region.to_owned() })?;
    let permitted = permitted_jurisdictions(packet, class, graph, registry)?;
    let allowed: Vec<bool> = graph
        .regions
        .iter()
        .map(|r| permitted.contains(&r.jurisdiction))
        .collect();
    dijkstra_best(graph, start, goal, &allowed)
}

/// Plan a route for a packet addressed at jurisdiction level.
///
/// Entry and exit regions are the lexicographically first region of the
/// origin and destination jurisdictions, keeping planning deterministic.
pub fn plan_route<F: Real>(
    packet: &DataPacket,
    graph: &RegionGraph<F>,
    registry: &Registry,
) -> Result<Route<F>, RouteError> {
    let origin_region = graph
        .regions_in(&packet.origin)
        .first()
        .map(|r| r.id.clone())
        .ok_or_else(|| RouteError::NoRegionInJurisdiction {
            code: packet.origin.clone(),
        })?;
    let dest_region = graph
        .regions_in(&packet.destination)
        .first()
        .map(|r| r.id.clone())
        .ok_or_else(|| RouteError::NoRegionInJurisdiction {
            code: packet.destination.clone(),
        })?;
    plan_route_between(packet, &origin_region, &dest_region, graph, registry)
}

/// Shortest path ignoring policy, used by baseline variants with static
/// routing. Same tie-breaking as [`plan_route`].
pub fn static_shortest_route<F: Real>(
    origin_region: &str,
    destination_region: &str,
    graph: &RegionGraph<F>,
) -> Result<Route<F>, RouteError> {
    let start = *graph
        .index
        .get(origin_region)
        .ok_or_else(|| RouteError::UnknownRegion { id: origin_region.to_owned() })?;
    let goal = *graph
        .index
        .get(destination_region)
        .ok_or_else(|| RouteError::UnknownRegion { id: destination_region.to_owned() })?;
    let allowed = vec![true; graph.regions.len()];
    dijkstra_best(graph, start, goal, &allowed)
}

/// Check a route against the graph and policy. Malformed routes return
/// `false` rather than an error.
pub fn validate_route<F: Real>(
    route: &Route<F>,
    packet: &DataPacket,
    graph: &RegionGraph<F>,
    registry: &Registry,
) -> bool {
    if route.hops.is_empty() {
        return false;
    }
    let regions: Vec<&Region> = match route
        .hops
        .iter()
        .map(|id| graph.region(id))
        .collect::<Option<Vec<_>>>()
    {
        Some(r) => r,
        None => return false,
    };
    if regions.first().unwrap().jurisdiction != packet.origin
        || regions.last().unwrap().jurisdiction != packet.destination
    {
        return false;
    }
    let mut seen = BTreeSet::new();
    if !route.hops.iter().all(|h| seen.insert(h)) {
        return false;
    }
    let mut cost = F::zero();
    for pair in route.hops.windows(2) {
        match graph.edge_between(&pair[0], &pair[1]) {
            Some(edge) => cost += edge.latency_ms,
            None => return false,
        }
    }
    let tolerance = crate::real::<F>(1e-9) * (F::one() + cost.abs());
    if (cost - route.total_cost).abs() > tolerance {
        return false;
    }
    let class = match policy::classify_packet(packet, registry) {
        Ok(c) => c,
        Err(_) => return false,
    };
    match policy::evaluate_transfer(packet, registry) {
        Ok(d) if !d.is_deny() => {}
        _ => return false,
    }
    let permitted = match permitted_jurisdictions(packet, class, graph, registry) {
        Ok(p) => p,
        Err(_) => return false,
    };
    regions.iter().all(|r| permitted.contains(&r.jurisdiction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::SensitivityClass;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn registry() -> Registry {
        crate::policy::tests::test_registry()
    }

    fn graph() -> RegionGraph<f64> {
        // AA: aa-1, aa-2; BB: bb-1; CC: cc-1. AA<->BB direct and via CC.
        RegionGraph::new(
            vec![
                Region { id: "aa-1".into(), jurisdiction: "AA".into() },
                Region { id: "aa-2".into(), jurisdiction: "AA".into() },
                Region { id: "bb-1".into(), jurisdiction: "BB".into() },
                Region { id: "cc-1".into(), jurisdiction: "CC".into() },
            ],
            vec![
                ("aa-1".into(), "aa-2".into(), 10.0),
                ("aa-2".into(), "bb-1".into(), 50.0),
                ("aa-1".into(), "cc-1".into(), 5.0),
                ("cc-1".into(), "bb-1".into(), 5.0),
            ],
        )
        .unwrap()
    }

    fn packet(origin: &str, dest: &str, class: SensitivityClass) -> DataPacket {
        DataPacket::new(7, origin, dest, origin, class, vec![1, 2, 3]).unwrap()
    }

    #[test]
    fn border_crossing_derived_from_jurisdictions() {
        let g = graph();
        assert!(!g.edge_between("aa-1", "aa-2").unwrap().border_crossing);
        assert!(g.edge_between("aa-2", "bb-1").unwrap().border_crossing);
    }

    #[test]
    fn same_region_route_has_zero_cost() {
        let g = graph();
        let p = packet("AA", "AA", SensitivityClass::Personal);
        let r = plan_route_between(&p, "aa-1", "aa-1", &g, &registry()).unwrap();
        assert_eq!(r.hops, vec!["aa-1".to_owned()]);
        assert_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn cheapest_path_through_denied_jurisdiction_is_avoided() {
        // AA -> BB personal: transit through CC is cheaper (10ms) but
        // AA -> CC personal is denied, so the 60ms direct path wins.
        let g = graph();
        let p = packet("AA", "BB", SensitivityClass::Personal);
        let r = plan_route(&p, &g, &registry()).unwrap();
        assert_eq!(r.hops, vec!["aa-1".to_owned(), "aa-2".to_owned(), "bb-1".to_owned()]);
        assert_eq!(r.total_cost, 60.0);
        // Public data may transit CC, making the cheap path legal.
        let p = packet("AA", "BB", SensitivityClass::Public);
        let r = plan_route(&p, &g, &registry()).unwrap();
        assert_eq!(r.hops, vec!["aa-1".to_owned(), "cc-1".to_owned(), "bb-1".to_owned()]);
        assert_eq!(r.total_cost, 10.0);
    }

    #[test]
    fn no_compliant_route_when_all_paths_blocked() {
        // Drop the direct AA-BB edge so every path transits CC, which is
        // denied for personal data.
        let g = RegionGraph::new(
            vec![
                Region { id: "aa-1".into(), jurisdiction: "AA".into() },
                Region { id: "bb-1".into(), jurisdiction: "BB".into() },
                Region { id: "cc-1".into(), jurisdiction: "CC".into() },
            ],
            vec![
                ("aa-1".into(), "cc-1".into(), 5.0),
                ("cc-1".into(), "bb-1".into(), 5.0),
            ],
        )
        .unwrap();
        let p = packet("AA", "BB", SensitivityClass::Personal);
        assert!(matches!(
            plan_route(&p, &g, &registry()),
            Err(RouteError::NoCompliantRoute)
        ));
    }

    #[test]
    fn denied_end_to_end_is_an_error() {
        let g = graph();
        let p = packet("CC", "BB", SensitivityClass::Personal);
        assert!(matches!(
            plan_route(&p, &g, &registry()),
            Err(RouteError::DeniedTransfer)
        ));
    }

    #[test]
    fn planned_routes_validate() {
        let g = graph();
        let reg = registry();
        for class in [SensitivityClass::Public, SensitivityClass::Personal] {
            let p = packet("AA", "BB", class);
            let r = plan_route(&p, &g, &reg).unwrap();
            assert!(validate_route(&r, &p, &g, &reg));
        }
    }

    #[test]
    fn residency_violating_hop_fails_validation() {
        let g = graph();
        let reg = registry();
        let p = packet("AA", "BB", SensitivityClass::Personal);
        let bogus = Route {
            hops: vec!["aa-1".into(), "cc-1".into(), "bb-1".into()],
            total_cost: 10.0,
        };
        assert!(!validate_route(&bogus, &p, &g, &reg));
    }

    #[test]
    fn malformed_routes_fail_validation() {
        let g = graph();
        let reg = registry();
        let p = packet("AA", "BB", SensitivityClass::Public);
        for bogus in [
            Route { hops: vec![], total_cost: 0.0 },
            Route { hops: vec!["aa-1".into(), "bb-1".into()], total_cost: 1.0 }, // no edge
            Route {
                hops: vec!["aa-1".into(), "cc-1".into(), "bb-1".into()],
                total_cost: 99.0, // wrong cost
            },
            Route { hops: vec!["zz-9".into()], total_cost: 0.0 },
        ] {
            assert!(!validate_route(&bogus, &p, &g, &reg));
        }
    }

    /// Enumerate every simple path and keep the best policy-compliant one
    /// under the (cost, hops, lex) order. Independent of the planner.
    pub(crate) fn brute_force_best(
        packet: &DataPacket,
        origin: &str,
        goal: &str,
        graph: &RegionGraph<f64>,
        registry: &Registry,
    ) -> Option<Route<f64>> {
        let decision = policy::evaluate_transfer(packet, registry).ok()?;
        if decision.is_deny() {
            return None;
        }
        let class = policy::classify_packet(packet, registry).ok()?;
        let permitted = permitted_jurisdictions(packet, class, graph, registry).ok()?;
        let start = graph.index.get(origin).copied()?;
        let goal = graph.index.get(goal).copied()?;
        if !permitted.contains(&graph.regions[start].jurisdiction)
            || !permitted.contains(&graph.regions[goal].jurisdiction)
        {
            return None;
        }
        let mut best: Option<Route<f64>> = None;
        let mut stack = vec![(vec![start], 0.0f64)];
        while let Some((path, cost)) = stack.pop() {
            let node = *path.last().unwrap();
            if node == goal {
                let candidate = Route {
                    hops: path.iter().map(|&i| graph.regions[i].id.clone()).collect(),
                    total_cost: cost,
                };
                best = Some(match best.take() {
                    None => candidate,
                    Some(cur) => {
                        let a = (candidate.total_cost, candidate.hops.len(), candidate.hops.clone());
                        let b = (cur.total_cost, cur.hops.len(), cur.hops.clone());
                        if a.partial_cmp(&b) == Some(Ordering::Less) {
                            candidate
                        } else {
                            cur
                        }
                    }
                });
                continue;
            }
            for &(next, edge_idx) in &graph.adjacency[node] {
                if path.contains(&next) {
                    continue;
                }
                if !permitted.contains(&graph.regions[next].jurisdiction) {
                    continue;
                }
                let mut p = path.clone();
                p.push(next);
                stack.push((p, cost + graph.edges[edge_idx].latency_ms));
            }
        }
        best
    }

    /// Random graph over the three test jurisdictions.
    pub(crate) fn random_graph(rng: &mut StdRng, max_nodes: usize) -> RegionGraph<f64> {
        let n = rng.random_range(2..=max_nodes);
        let jurisdictions = ["AA", "BB", "CC"];
        let regions: Vec<Region> = (0..n)
            .map(|i| Region {
                id: format!("r{i:02}"),
                jurisdiction: jurisdictions[rng.random_range(0..3)].to_owned(),
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.45 {
                    let cost = (rng.random_range(1..200) as f64) / 2.0;
                    edges.push((format!("r{i:02}"), format!("r{j:02}"), cost));
                }
            }
        }
        RegionGraph::new(regions, edges).unwrap()
    }

    #[test]
    fn planner_matches_brute_force_on_random_graphs() {
        let reg = registry();
        let mut rng = StdRng::seed_from_u64(0x5EED_0001);
        let mut compared = 0;
        for _ in 0..120 {
            let g = random_graph(&mut rng, 8);
            let classes = [SensitivityClass::Public, SensitivityClass::Personal];
            let origin_idx = rng.random_range(0..g.regions().len());
            let goal_idx = rng.random_range(0..g.regions().len());
            let (o, d) = (
                g.regions()[origin_idx].clone(),
                g.regions()[goal_idx].clone(),
            );
            let class = classes[rng.random_range(0..2)];
            let p = DataPacket::new(1, o.jurisdiction.clone(), d.jurisdiction.clone(), o.jurisdiction.clone(), class, vec![9]).unwrap();
            let expected = brute_force_best(&p, &o.id, &d.id, &g, &reg);
            let got = plan_route_between(&p, &o.id, &d.id, &g, &reg);
            match (expected, got) {
                (Some(exp), Ok(actual)) => {
                    assert_eq!(actual.hops, exp.hops);
                    assert!((actual.total_cost - exp.total_cost).abs() < 1e-9);
                    compared += 1;
                }
                (None, Err(_)) => {}
                (exp, got) => panic!("oracle mismatch: expected {exp:?}, got {got:?}"),
            }
        }
        assert!(compared > 20, "too few comparable cases: {compared}");
    }

    #[test]
    fn planning_works_at_f32() {
        let g: RegionGraph<f32> = RegionGraph::new(
            vec![
                Region { id: "aa-1".into(), jurisdiction: "AA".into() },
                Region { id: "bb-1".into(), jurisdiction: "BB".into() },
            ],
            vec![("aa-1".into(), "bb-1".into(), 42.5f32)],
        )
        .unwrap();
        let p = packet("AA", "BB", SensitivityClass::Personal);
        let r = plan_route(&p, &g, &registry()).unwrap();
        assert_eq!(r.total_cost, 42.5f32);
        assert!(validate_route(&r, &p, &g, &registry()));
    }

    #[test]
    fn replanning_is_deterministic() {
        let g = graph();
        let reg = registry();
        let p = packet("AA", "BB", SensitivityClass::Public);
        let a = plan_route(&p, &g, &reg).unwrap();
        for _ in 0..10 {
            assert_eq!(plan_route(&p, &g, &reg).unwrap().hops, a.hops);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Random hop sequences agree with an independent per-hop re-check:
        /// validate_route is true iff each structural and policy condition
        /// holds.
        #[test]
        fn validation_matches_per_hop_oracle(seed in 0u64..100_000) {
            let g = graph();
            let reg = registry();
            let mut rng = StdRng::seed_from_u64(seed);
            let ids: Vec<String> = g.regions().iter().map(|r| r.id.clone()).collect();
            let len = rng.random_range(1..=4);
            let hops: Vec<String> = (0..len)
                .map(|_| ids[rng.random_range(0..ids.len())].clone())
                .collect();
            let cost: f64 = hops
                .windows(2)
                .map(|w| g.edge_between(&w[0], &w[1]).map(|e| e.latency_ms).unwrap_or(f64::NAN))
                .sum();
            let class = [SensitivityClass::Public, SensitivityClass::Personal][rng.random_range(0..2)];
            let p = packet("AA", "BB", class);
            let route = Route { hops: hops.clone(), total_cost: if cost.is_nan() { 0.0 } else { cost } };

            let oracle = {
                let unique = hops.iter().collect::<BTreeSet<_>>().len() == hops.len();
                let endpoints_ok = g.region(&hops[0]).map(|r| r.jurisdiction == "AA").unwrap_or(false)
                    && g.region(hops.last().unwrap()).map(|r| r.jurisdiction == "BB").unwrap_or(false);
                let edges_ok = hops.windows(2).all(|w| g.edge_between(&w[0], &w[1]).is_some());
                let hops_ok = hops.iter().all(|h| {
                    g.region(h).map(|r| {
                        let mut probe = p.clone();
                        probe.destination = r.jurisdiction.clone();
                        !policy::evaluate_transfer(&probe, &reg).unwrap().is_deny()
                    }).unwrap_or(false)
                });
                let e2e_ok = !policy::evaluate_transfer(&p, &reg).unwrap().is_deny();
                unique && endpoints_ok && edges_ok && hops_ok && e2e_ok && !cost.is_nan()
            };
            prop_assert_eq!(validate_route(&route, &p, &g, &reg), oracle);
        }
    }
}
