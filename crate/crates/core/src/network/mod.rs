//! Directed simple-graph model of a transportation system.
//!
//! A [`Network`] owns its links, the key origin-destination pairs and the
//! intact network capacity, which is computed once when the network is
//! built. Capacity under a damaged [`SystemState`] is the sum of the
//! independent per-OD maximum flows with asset links degraded to their
//! failed capacity.

mod io;
mod maxflow;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::risk::SystemState;
use crate::scalar::Real;

pub use io::{load_network, load_od_pairs, read_network, LoadOptions, DETOUR_CAPACITY};
pub use maxflow::FlowGraph;

/// Dense node index inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: T,
    /// Index into the asset registry, if a vulnerable asset sits on this link.
    pub asset: Option<usize>,
    /// Capacity when the attached asset fails. Equals `capacity` for links
    /// without an asset.
    pub failed_capacity: T,
}

impl<T: Real> Link<T> {
    #[inline]
    pub fn effective_capacity(&self, state: &SystemState) -> T {
        match self.asset {
            Some(a) if state.get(a) => self.failed_capacity,
            _ => self.capacity,
        }
    }
}

/// Maximum flow between one origin and one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult<T> {
    pub value: T,
    /// Flow on each link, indexed like [`Network::links`].
    pub per_link_flow: Vec<T>,
}

/// A parallel link discarded during multigraph reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedLink<T> {
    pub from: String,
    pub to: String,
    pub capacity: T,
}

#[derive(Debug, Clone)]
pub struct Network<T> {
    node_ids: Vec<String>,
    node_index: HashMap<String, NodeId>,
    links: Vec<Link<T>>,
    od_pairs: Vec<(NodeId, NodeId)>,
    asset_count: usize,
    graph: FlowGraph,
    baseline_capacity: T,
}

impl<T: Real> Network<T> {
    pub fn builder(asset_count: usize) -> NetworkBuilder<T> {
        NetworkBuilder::new(asset_count)
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_id(&self, node: NodeId) -> &str {
        &self.node_ids[node.0]
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.node_index.get(id).copied()
    }

    pub fn links(&self) -> &[Link<T>] {
        &self.links
    }

    pub fn od_pairs(&self) -> &[(NodeId, NodeId)] {
        &self.od_pairs
    }

    /// Size of the asset registry this network was built against.
    pub fn asset_count(&self) -> usize {
        self.asset_count
    }

    /// Network capacity of the intact network, cached at build time.
    pub fn baseline_capacity(&self) -> T {
        self.baseline_capacity
    }

    /// Link attached to each asset index, if any.
    pub fn asset_links(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.asset_count];
        for (i, link) in self.links.iter().enumerate() {
            if let Some(a) = link.asset {
                out[a] = Some(i);
            }
        }
        out
    }

    fn check_endpoints(&self, origin: NodeId, destination: NodeId) -> Result<()> {
        let n = self.node_count();
        if origin.0 >= n || destination.0 >= n {
            return Err(input(format!(
                "unknown node index ({}, {}) in network of {n} nodes",
                origin.0, destination.0
            )));
        }
        if origin == destination {
            return Err(input(format!(
                "origin and destination are the same node '{}'",
                self.node_ids[origin.0]
            )));
        }
        Ok(())
    }

    /// Maximum flow on the intact network.
    pub fn max_flow(&self, origin: NodeId, destination: NodeId) -> Result<FlowResult<T>> {
        self.check_endpoints(origin, destination)?;
        let caps: Vec<T> = self.links.iter().map(|l| l.capacity).collect();
        Ok(self.graph.max_flow(&caps, origin.0, destination.0))
    }

    /// Maximum flow with link capacities degraded according to `state`.
    pub fn max_flow_in_state(
        &self,
        state: &SystemState,
        origin: NodeId,
        destination: NodeId,
    ) -> Result<FlowResult<T>> {
        self.check_endpoints(origin, destination)?;
        self.check_state(state)?;
        let caps = self.effective_capacities(state);
        Ok(self.graph.max_flow(&caps, origin.0, destination.0))
    }

    /// Max flow addressed by node identifiers.
    pub fn max_flow_between(&self, origin: &str, destination: &str) -> Result<FlowResult<T>> {
        let o = self
            .node(origin)
            .ok_or_else(|| input(format!("unknown node '{origin}'")))?;
        let d = self
            .node(destination)
            .ok_or_else(|| input(format!("unknown node '{destination}'")))?;
        self.max_flow(o, d)
    }

    pub fn effective_capacities(&self, state: &SystemState) -> Vec<T> {
        self.links
            .iter()
            .map(|l| l.effective_capacity(state))
            .collect()
    }

    fn check_state(&self, state: &SystemState) -> Result<()> {
        if state.len() != self.asset_count {
            return Err(input(format!(
                "state has {} assets, network expects {}",
                state.len(),
                self.asset_count
            )));
        }
        Ok(())
    }

    /// Sum over OD pairs of the independent maximum flows under `state`.
    pub fn network_capacity(&self, state: &SystemState) -> Result<T> {
        self.check_state(state)?;
        Ok(self.capacity_with(&self.effective_capacities(state)))
    }

    /// Sum of per-OD maximum flows for an explicit capacity vector.
    pub(crate) fn capacity_with(&self, caps: &[T]) -> T {
        self.od_pairs
            .iter()
            .map(|&(o, d)| self.graph.max_flow_value(caps, o.0, d.0))
            .sum()
    }
}

/// Incremental constructor for [`Network`].
#[derive(Debug, Clone)]
pub struct NetworkBuilder<T> {
    asset_count: usize,
    node_ids: Vec<String>,
    node_index: HashMap<String, NodeId>,
    links: Vec<Link<T>>,
    link_index: HashMap<(NodeId, NodeId), usize>,
    dropped: Vec<DroppedLink<T>>,
    od_pairs: Vec<(NodeId, NodeId)>,
}

impl<T: Real> NetworkBuilder<T> {
    pub fn new(asset_count: usize) -> Self {
        Self {
            asset_count,
            node_ids: Vec::new(),
            node_index: HashMap::new(),
            links: Vec::new(),
            link_index: HashMap::new(),
            dropped: Vec::new(),
            od_pairs: Vec::new(),
        }
    }

    /// Returns the index of `id`, inserting it if new.
    pub fn node(&mut self, id: &str) -> NodeId {
        if let Some(&n) = self.node_index.get(id) {
            return n;
        }
        let n = NodeId(self.node_ids.len());
        self.node_ids.push(id.to_owned());
        self.node_index.insert(id.to_owned(), n);
        n
    }

    /// Adds a link. A parallel link between the same ordered pair keeps only
    /// the larger capacity; the other is recorded in the dropped list.
    ///
    /// `failed_capacity` defaults to `capacity` for links without an asset
    /// and is required for asset links.
    pub fn link(
        &mut self,
        from: &str,
        to: &str,
        capacity: T,
        asset: Option<usize>,
        failed_capacity: Option<T>,
    ) -> Result<&mut Self> {
        if from == to {
            return Err(input(format!("self-loop on node '{from}'")));
        }
        if !(capacity >= T::zero()) || !capacity.is_finite() {
            return Err(input(format!(
                "link {from}->{to}: capacity must be finite and non-negative, got {capacity}"
            )));
        }
        let failed = match (asset, failed_capacity) {
            (None, None) => capacity,
            (None, Some(f)) if f == capacity => capacity,
            (None, Some(f)) => {
                return Err(input(format!(
                    "link {from}->{to} has no asset but failed capacity {f} differs from capacity {capacity}"
                )))
            }
            (Some(_), None) => {
                return Err(input(format!(
                    "link {from}->{to} carries an asset but no failed capacity"
                )))
            }
            (Some(_), Some(f)) => f,
        };
        if !(failed >= T::zero() && failed <= capacity) {
            return Err(input(format!(
                "link {from}->{to}: failed capacity {failed} outside [0, {capacity}]"
            )));
        }
        if let Some(a) = asset {
            if a >= self.asset_count {
                return Err(input(format!(
                    "link {from}->{to}: asset index {a} out of range ({} assets)",
                    self.asset_count
                )));
            }
            if self.links.iter().any(|l| l.asset == Some(a)) {
                return Err(input(format!(
                    "asset index {a} is attached to more than one link"
                )));
            }
        }

        let u = self.node(from);
        let v = self.node(to);
        let new = Link {
            from: u,
            to: v,
            capacity,
            asset,
            failed_capacity: failed,
        };
        match self.link_index.get(&(u, v)) {
            None => {
                self.link_index.insert((u, v), self.links.len());
                self.links.push(new);
            }
            Some(&existing) => {
                let old = &self.links[existing];
                if old.asset.is_some() && asset.is_some() {
                    return Err(input(format!(
                        "parallel links {from}->{to} both carry assets; one asset per link"
                    )));
                }
                let (keep, drop) = if capacity > old.capacity {
                    (new, old.clone())
                } else {
                    (old.clone(), new)
                };
                if drop.asset.is_some() {
                    return Err(input(format!(
                        "parallel link {from}->{to} with larger capacity would discard an asset link"
                    )));
                }
                self.dropped.push(DroppedLink {
                    from: from.to_owned(),
                    to: to.to_owned(),
                    capacity: drop.capacity,
                });
                self.links[existing] = keep;
            }
        }
        Ok(self)
    }

    pub fn od_pair(&mut self, origin: &str, destination: &str) -> Result<&mut Self> {
        let o = *self
            .node_index
            .get(origin)
            .ok_or_else(|| input(format!("OD origin '{origin}' is not a node")))?;
        let d = *self
            .node_index
            .get(destination)
            .ok_or_else(|| input(format!("OD destination '{destination}' is not a node")))?;
        if o == d {
            return Err(input(format!(
                "OD pair has identical origin and destination '{origin}'"
            )));
        }
        self.od_pairs.push((o, d));
        Ok(self)
    }

    pub fn dropped_links(&self) -> &[DroppedLink<T>] {
        &self.dropped
    }

    /// Finalizes the network and computes the intact capacity.
    pub fn build(self) -> Result<(Network<T>, Vec<DroppedLink<T>>)> {
        if self.node_ids.is_empty() {
            return Err(Error::Input("network has no nodes".into()));
        }
        let graph = FlowGraph::new(
            self.node_ids.len(),
            self.links.iter().map(|l| (l.from.0, l.to.0)),
        );
        let mut net = Network {
            node_ids: self.node_ids,
            node_index: self.node_index,
            links: self.links,
            od_pairs: self.od_pairs,
            asset_count: self.asset_count,
            graph,
            baseline_capacity: T::zero(),
        };
        let caps: Vec<T> = net.links.iter().map(|l| l.capacity).collect();
        net.baseline_capacity = net.capacity_with(&caps);
        Ok((net, self.dropped))
    }
}

/// Link capacity from lane count and speed, `lanes · speed / nominal_speed`.
pub fn link_capacity_from_attributes<T: Real>(lanes: u32, speed: T, nominal_speed: T) -> Result<T> {
    if lanes < 1 {
        return Err(input("lane count must be at least 1"));
    }
    if !(speed > T::zero()) || !(nominal_speed > T::zero()) {
        return Err(input(format!(
            "speeds must be positive (speed {speed}, nominal {nominal_speed})"
        )));
    }
    Ok(T::from_u32(lanes).unwrap() * speed / nominal_speed)
}
