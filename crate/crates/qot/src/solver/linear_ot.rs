//! Exact linear optimal transport (the transportation problem) by
//! successive shortest augmenting paths with Dijkstra on reduced costs.

use crate::error::{Error, Result};

const EPS: f64 = 1e-15;

/// Solve `min sum_ij c_ij f_ij` over nonnegative `f` with row sums `mu` and
/// column sums `nu`. `cost` is row-major `n x m`. Returns the optimal flow.
pub fn exact_linear_ot(cost: &[f64], mu: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (mu.len(), nu.len());
    if cost.len() != n * m {
        return Err(Error::SizeMismatch(format!(
            "cost matrix has {} entries, expected {}",
            cost.len(),
            n * m
        )));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCost(f64::NAN, f64::NAN, f64::NAN, f64::NAN));
    }
    let mut supply = mu.to_vec();
    let mut demand = nu.to_vec();
    let mut flow = vec![0.0; n * m];

    // node potentials (sources first, sinks at offset n) keeping the
    // reduced cost c_ij + pot[i] - pot[n+j] of every forward arc
    // nonnegative; one relaxation pass seeds the sink levels
    let mut pot = vec![0.0; n + m];
    for j in 0..m {
        pot[n + j] = (0..n).map(|i| cost[i * m + j]).fold(f64::INFINITY, f64::min);
    }

    loop {
        let active: Vec<usize> = (0..n).filter(|&i| supply[i] > EPS).collect();
        if active.is_empty() {
            break;
        }
        // multi-source Dijkstra over the residual network: forward arcs
        // i -> j always, backward arcs j -> i where flow > 0
        let total = n + m;
        let mut dist = vec![f64::INFINITY; total];
        let mut prev = vec![usize::MAX; total];
        let mut done = vec![false; total];
        for &i in &active {
            dist[i] = 0.0;
        }
        let mut heap = std::collections::BinaryHeap::new();
        for &i in &active {
            heap.push(HeapEntry { dist: 0.0, node: i });
        }
        while let Some(HeapEntry { dist: du, node: u }) = heap.pop() {
            if done[u] || du > dist[u] {
                continue;
            }
            done[u] = true;
            if u < n {
                let i = u;
                for j in 0..m {
                    let rc = cost[i * m + j] + pot[i] - pot[n + j];
                    let nd = du + rc.max(0.0);
                    if nd < dist[n + j] - EPS {
                        dist[n + j] = nd;
                        prev[n + j] = u;
                        heap.push(HeapEntry { dist: nd, node: n + j });
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i * m + j] > EPS {
                        // backward arc; zero reduced cost on flow-carrying
                        // arcs by complementary slackness
                        let rc = -(cost[i * m + j] + pot[i] - pot[n + j]);
                        let nd = du + rc.max(0.0);
                        if nd < dist[i] - EPS {
                            dist[i] = nd;
                            prev[i] = u;
                            heap.push(HeapEntry { dist: nd, node: i });
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| demand[j] > EPS && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].partial_cmp(&dist[n + b]).unwrap());
        let Some(tj) = target else {
            return Err(Error::InvalidMarginal(
                "transportation problem infeasible: supplies and demands do not balance".into(),
            ));
        };

        // walk the path back to a source, find the bottleneck
        let mut path = Vec::new();
        let mut node = n + tj;
        while prev[node] != usize::MAX {
            path.push((prev[node], node));
            node = prev[node];
        }
        let start = node;
        let mut amount = supply[start].min(demand[tj]);
        for &(u, v) in &path {
            if v < n {
                // backward arc v <- u (sink u to source v): capacity is current flow
                amount = amount.min(flow[v * m + (u - n)]);
            }
        }
        for &(u, v) in &path {
            if u < n {
                flow[u * m + (v - n)] += amount;
            } else {
                flow[v * m + (u - n)] -= amount;
            }
        }
        supply[start] -= amount;
        demand[tj] -= amount;

        // Johnson-style potential update keeps reduced costs nonnegative
        let dt = dist[n + tj];
        for v in 0..total {
            pot[v] += dist[v].min(dt);
        }
    }
    Ok(flow)
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on dist, tie-broken by node for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
