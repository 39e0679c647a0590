//! Reference computations shared by the integration tests. None of these
//! go through the library's risk, flow or enumeration code.

#![allow(dead_code)]

use std::collections::VecDeque;

use netrisk::{Network, SystemState};

/// `P(ξ < -β)` for a standard normal `ξ`.
pub fn tail(beta: f64) -> f64 {
    0.5 * libm::erfc(beta / std::f64::consts::SQRT_2)
}

/// `Σ_s p(s) L(s)` over all `2^n` failure patterns.
pub fn brute_force(betas: &[f64], loss: impl Fn(&[bool]) -> f64) -> f64 {
    let n = betas.len();
    let p: Vec<f64> = betas.iter().map(|&b| tail(b)).collect();
    let mut bits = vec![false; n];
    let mut total = 0.0;
    for mask in 0u64..(1 << n) {
        let mut prob = 1.0;
        for i in 0..n {
            bits[i] = mask >> i & 1 == 1;
            prob *= if bits[i] { p[i] } else { 1.0 - p[i] };
        }
        total += prob * loss(&bits);
    }
    total
}

/// Additive loss: failed asset `i` costs `c[i]`.
pub fn additive_loss(c: &[f64]) -> impl Fn(&[bool]) -> f64 + '_ {
    move |s| s.iter().zip(c).filter(|(f, _)| **f).map(|(_, c)| c).sum()
}

/// Product of `c[i]` over failed relevant assets; zero when none fail.
pub fn product_loss<'a>(relevant: &'a [usize], c: &'a [f64]) -> impl Fn(&[bool]) -> f64 + 'a {
    move |s| {
        let failed: Vec<usize> = relevant.iter().copied().filter(|&i| s[i]).collect();
        if failed.is_empty() {
            0.0
        } else {
            failed.iter().map(|&i| c[i]).product()
        }
    }
}

/// Consequences by 1-based rank of `β`, ascending.
pub fn rank_costs(betas: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[a].partial_cmp(&betas[b]).unwrap().then(a.cmp(&b)));
    let mut c = vec![0.0; betas.len()];
    for (r, i) in order.into_iter().enumerate() {
        c[i] = (r + 1) as f64;
    }
    c
}

/// Gray-swan costs `10^((r-1)β/(n-1))` for the `k` most reliable assets.
pub fn swan_costs(betas: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let n = betas.len();
    let ranks = rank_costs(betas);
    let mut relevant: Vec<usize> = (0..n).filter(|&i| ranks[i] as usize > n - k).collect();
    relevant.sort_unstable();
    let mut c = vec![0.0; n];
    for &i in &relevant {
        let r = ranks[i];
        c[i] = if n == 1 {
            1.0
        } else {
            10f64.powf((r - 1.0) * betas[i] / (n as f64 - 1.0))
        };
    }
    (relevant, c)
}

/// Edmonds-Karp on a dense residual matrix.
pub fn max_flow(nodes: usize, edges: &[(usize, usize, f64)], s: usize, t: usize) -> f64 {
    let mut cap = vec![vec![0.0; nodes]; nodes];
    for &(a, b, c) in edges {
        cap[a][b] += c;
    }
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; nodes];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nodes {
                if prev[v] == usize::MAX && cap[u][v] > 1e-12 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        flow += push;
    }
}

/// Sum of OD max flows with failed asset links at their failed capacity.
pub fn network_capacity(net: &Network<f64>, failed: &[bool]) -> f64 {
    let edges: Vec<(usize, usize, f64)> = net
        .links()
        .iter()
        .map(|l| {
            let c = match l.asset {
                Some(a) if failed[a] => l.failed_capacity,
                _ => l.capacity,
            };
            (l.from.0, l.to.0, c)
        })
        .collect();
    net.od_pairs()
        .iter()
        .map(|&(o, d)| max_flow(net.node_count(), &edges, o.0, d.0))
        .sum()
}

/// Capacity drop, optionally as a fraction of the intact capacity.
pub fn capacity_loss(net: &Network<f64>, normalized: bool) -> impl Fn(&[bool]) -> f64 + '_ {
    let base = network_capacity(net, &vec![false; net.asset_count()]);
    move |s| {
        let drop = base - network_capacity(net, s);
        if normalized {
            drop / base
        } else {
            drop
        }
    }
}

pub fn state(bits: &[bool]) -> SystemState {
    SystemState::from_bits(bits)
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let m = x.iter().sum::<f64>() / k;
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
