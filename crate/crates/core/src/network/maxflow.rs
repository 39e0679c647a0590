//! FIFO preflow-push maximum flow with gap and global relabeling.
//!
//! The residual topology is stored once in CSR form; capacities are passed
//! per call so one [`FlowGraph`] serves every damaged state of a network.
//! The single-phase variant lets heights climb to `2n` so that excess that
//! cannot reach the sink drains back to the source, leaving a valid flow.

use std::collections::VecDeque;

use super::FlowResult;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct FlowGraph {
    n: usize,
    /// Arc `2e` is link `e` forward, `2e + 1` its reverse.
    head: Vec<u32>,
    /// CSR offsets into `adj`.
    start: Vec<u32>,
    adj: Vec<u32>,
}

struct Scratch<T> {
    residual: Vec<T>,
    excess: Vec<T>,
    height: Vec<usize>,
    current: Vec<u32>,
    count: Vec<usize>,
    active: Vec<bool>,
    queue: VecDeque<usize>,
}

impl FlowGraph {
    pub fn new(n: usize, links: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut head = Vec::new();
        let mut tail = Vec::new();
        for (u, v) in links {
            head.push(v as u32);
            tail.push(u as u32);
            head.push(u as u32);
            tail.push(v as u32);
        }
        let mut degree = vec![0u32; n + 1];
        for &t in &tail {
            degree[t as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let start = degree;
        let mut fill = start.clone();
        let mut adj = vec![0u32; tail.len()];
        for (arc, &t) in tail.iter().enumerate() {
            adj[fill[t as usize] as usize] = arc as u32;
            fill[t as usize] += 1;
        }
        Self {
            n,
            head,
            start,
            adj,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn link_count(&self) -> usize {
        self.head.len() / 2
    }

    /// Max-flow value only.
    pub fn max_flow_value<T: Real>(&self, caps: &[T], s: usize, t: usize) -> T {
        self.run(caps, s, t).excess[t]
    }

    pub fn max_flow<T: Real>(&self, caps: &[T], s: usize, t: usize) -> FlowResult<T> {
        let scratch = self.run(caps, s, t);
        let per_link_flow = caps
            .iter()
            .enumerate()
            .map(|(e, &c)| (c - scratch.residual[2 * e]).max(T::zero()).min(c))
            .collect();
        FlowResult {
            value: scratch.excess[t],
            per_link_flow,
        }
    }

    fn run<T: Real>(&self, caps: &[T], s: usize, t: usize) -> Scratch<T> {
        assert_eq!(caps.len(), self.link_count(), "capacity vector length");
        let n = self.n;
        let mut residual = Vec::with_capacity(2 * caps.len());
        for &c in caps {
            residual.push(c);
            residual.push(T::zero());
        }
        let scale = caps.iter().copied().fold(T::zero(), T::max);
        let eps = scale * T::epsilon() * T::lit(64.0);

        let mut st = Scratch {
            residual,
            excess: vec![T::zero(); n],
            height: vec![0; n],
            current: self.start[..n].to_vec(),
            count: vec![0; 2 * n + 1],
            active: vec![false; n],
            queue: VecDeque::new(),
        };
        if s == t || scale <= T::zero() {
            return st;
        }

        // Saturate source arcs.
        for i in self.start[s]..self.start[s + 1] {
            let a = self.adj[i as usize] as usize;
            let r = st.residual[a];
            if r > T::zero() {
                let v = self.head[a] as usize;
                st.residual[a] = T::zero();
                st.residual[a ^ 1] += r;
                st.excess[v] += r;
                st.excess[s] -= r;
            }
        }
        self.global_relabel(&mut st, s, t, eps);
        for v in 0..n {
            if v != s && v != t && st.excess[v] > eps && st.height[v] < 2 * n {
                st.active[v] = true;
                st.queue.push_back(v);
            }
        }

        let relabel_period = n.max(16) * 2;
        let mut relabels = 0usize;
        while let Some(u) = st.queue.pop_front() {
            st.active[u] = false;
            relabels += self.discharge(&mut st, u, s, t, eps);
            if relabels >= relabel_period {
                relabels = 0;
                self.global_relabel(&mut st, s, t, eps);
            }
        }
        st
    }

    /// Pushes excess out of `u` until it is exhausted or `u` is relabeled.
    /// Returns the number of relabels performed.
    fn discharge<T: Real>(
        &self,
        st: &mut Scratch<T>,
        u: usize,
        s: usize,
        t: usize,
        eps: T,
    ) -> usize {
        let n = self.n;
        let end = self.start[u + 1];
        let mut relabels = 0;
        while st.excess[u] > eps {
            if st.height[u] >= 2 * n {
                // Numerically stranded residue; no residual path exists.
                st.excess[u] = T::zero();
                break;
            }
            if st.current[u] == end {
                relabels += 1;
                self.relabel(st, u, eps);
                st.current[u] = self.start[u];
                continue;
            }
            let a = self.adj[st.current[u] as usize] as usize;
            let v = self.head[a] as usize;
            if st.residual[a] > eps && st.height[u] == st.height[v] + 1 {
                let delta = st.excess[u].min(st.residual[a]);
                st.residual[a] -= delta;
                st.residual[a ^ 1] += delta;
                st.excess[u] -= delta;
                st.excess[v] += delta;
                if v != s && v != t && !st.active[v] && st.excess[v] > eps {
                    st.active[v] = true;
                    st.queue.push_back(v);
                }
            } else {
                st.current[u] += 1;
            }
        }
        relabels
    }

    fn relabel<T: Real>(&self, st: &mut Scratch<T>, u: usize, eps: T) {
        let n = self.n;
        let old = st.height[u];
        let mut best = 2 * n;
        for i in self.start[u]..self.start[u + 1] {
            let a = self.adj[i as usize] as usize;
            if st.residual[a] > eps {
                best = best.min(st.height[self.head[a] as usize] + 1);
            }
        }
        let new = best.min(2 * n);
        st.count[old] -= 1;
        st.height[u] = new;
        st.count[new] += 1;

        // Gap: nobody left at `old` below n, so nodes strictly between old
        // and n can no longer reach the sink.
        if old < n && st.count[old] == 0 {
            for v in 0..n {
                let h = st.height[v];
                if h > old && h < n {
                    st.count[h] -= 1;
                    st.height[v] = n + 1;
                    st.count[n + 1] += 1;
                    st.current[v] = self.start[v];
                }
            }
        }
    }

    /// Exact distance labels: distance to `t` in the residual graph, or
    /// `n` plus the distance to `s`, or `2n` if neither is reachable.
    fn global_relabel<T: Real>(&self, st: &mut Scratch<T>, s: usize, t: usize, eps: T) {
        let n = self.n;
        const UNSET: usize = usize::MAX;
        let mut height = vec![UNSET; n];
        let mut bfs = VecDeque::new();

        let mut sweep = |root: usize, base: usize, height: &mut Vec<usize>| {
            height[root] = base;
            bfs.push_back(root);
            while let Some(v) = bfs.pop_front() {
                for i in self.start[v]..self.start[v + 1] {
                    // Arc a leaves v; its partner a^1 enters v from w.
                    let a = self.adj[i as usize] as usize;
                    let w = self.head[a] as usize;
                    if height[w] == UNSET && w != s && st.residual[a ^ 1] > eps {
                        height[w] = height[v] + 1;
                        bfs.push_back(w);
                    }
                }
            }
        };
        sweep(t, 0, &mut height);
        sweep(s, n, &mut height);

        st.count.iter_mut().for_each(|c| *c = 0);
        for v in 0..n {
            let h = if height[v] == UNSET {
                2 * n
            } else {
                height[v].min(2 * n)
            };
            st.height[v] = h;
            st.count[h] += 1;
            st.current[v] = self.start[v];
        }
    }
}
