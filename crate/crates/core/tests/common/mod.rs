//! Brute-force oracles shared by the integration and acceptance suites.
//! Each one recomputes a quantity from its definition, without reusing any
//! code path of the crate.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tgn_transfer::ctdg::TemporalEvent;
use tgn_transfer::structfeat::WindowGraph;

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(1..=max_nodes);
    let p: f64 = rng.gen_range(0.05..0.8);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

pub fn window_graph(n: usize, edges: &[(usize, usize)]) -> WindowGraph {
    WindowGraph::from_edges(n, edges.iter().copied())
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u128>> {
    let mut a = vec![vec![0u128; n]; n];
    for &(u, v) in edges {
        a[u][v] = 1;
        a[v][u] = 1;
    }
    a
}

fn matmul(a: &[Vec<u128>], b: &[Vec<u128>]) -> Vec<Vec<u128>> {
    let n = a.len();
    let mut c = vec![vec![0u128; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Hop distances by Floyd–Warshall and shortest-path counts as walk counts:
/// a walk of length `d(s,t)` between `s` and `t` is necessarily a shortest
/// path, so `σ(s,t) = (A^d)[s][t]`.
pub struct PathOracle {
    pub dist: Vec<Vec<Option<usize>>>,
    pub sigma: Vec<Vec<u128>>,
}

impl PathOracle {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let a = adjacency(n, edges);
        let mut dist = vec![vec![None; n]; n];
        for i in 0..n {
            dist[i][i] = Some(0);
            for j in 0..n {
                if a[i][j] == 1 {
                    dist[i][j] = Some(1);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(x), Some(y)) = (dist[i][k], dist[k][j]) {
                        if dist[i][j].map_or(true, |d| x + y < d) {
                            dist[i][j] = Some(x + y);
                        }
                    }
                }
            }
        }
        let mut powers = vec![identity(n)];
        for _ in 1..n.max(1) {
            let next = matmul(powers.last().unwrap(), &a);
            powers.push(next);
        }
        let mut sigma = vec![vec![0u128; n]; n];
        for s in 0..n {
            for t in 0..n {
                if let Some(d) = dist[s][t] {
                    sigma[s][t] = powers[d][s][t];
                }
            }
        }
        Self { dist, sigma }
    }
}

fn identity(n: usize) -> Vec<Vec<u128>> {
    (0..n).map(|i| (0..n).map(|j| u128::from(i == j)).collect()).collect()
}

/// Non-negative rational with exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0);
        let g = gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn add(self, o: Self) -> Self {
        let g = gcd(self.den, o.den);
        let l = self.den / g * o.den;
        Self::new(self.num * (l / self.den) + o.num * (l / o.den), l)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(self.num * o.num, self.den * o.den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `|x − exact| ≤ 4 ulp(exact)`: the float is the correctly rounded value
/// up to the rounding of a short sum.
pub fn matches_exact(x: f64, exact: Ratio) -> bool {
    let e = exact.to_f64();
    (x - e).abs() <= 4.0 * f64::EPSILON * e.abs().max(f64::MIN_POSITIVE)
}

/// Unnormalized betweenness: `Σ_{s<t, s,t≠v} σ_st(v)/σ_st`.
pub fn betweenness(n: usize, o: &PathOracle) -> Vec<Ratio> {
    (0..n)
        .map(|v| {
            let mut acc = Ratio::zero();
            for s in 0..n {
                for t in s + 1..n {
                    if s == v || t == v || o.sigma[s][t] == 0 {
                        continue;
                    }
                    if let (Some(a), Some(b), Some(c)) = (o.dist[s][v], o.dist[v][t], o.dist[s][t]) {
                        if a + b == c {
                            acc = acc.add(Ratio::new(o.sigma[s][v] * o.sigma[v][t], o.sigma[s][t]));
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

/// Wasserman–Faust closeness with `n` the number of non-isolated nodes.
pub fn closeness(n: usize, edges: &[(usize, usize)], o: &PathOracle, v: usize) -> Ratio {
    let active: Vec<usize> = (0..n).filter(|&u| edges.iter().any(|&(a, b)| a == u || b == u)).collect();
    if !active.contains(&v) {
        return Ratio::zero();
    }
    let (mut r, mut total) = (0u128, 0u128);
    for u in 0..n {
        if let Some(d) = o.dist[v][u] {
            if d > 0 {
                r += 1;
                total += d as u128;
            }
        }
    }
    let na = active.len() as u128;
    if r == 0 || na < 2 {
        return Ratio::zero();
    }
    Ratio::new(r, na - 1).mul(Ratio::new(r, total))
}

pub fn clustering(n: usize, edges: &[(usize, usize)], v: usize) -> Ratio {
    let a = adjacency(n, edges);
    let nb: Vec<usize> = (0..n).filter(|&u| a[v][u] == 1).collect();
    let d = nb.len() as u128;
    if d < 2 {
        return Ratio::zero();
    }
    let mut tri = 0u128;
    for i in 0..nb.len() {
        for j in i + 1..nb.len() {
            tri += a[nb[i]][nb[j]];
        }
    }
    Ratio::new(tri, d * (d - 1) / 2)
}

/// `P^k[v][v]` by dense matrix powers of the transition matrix.
pub fn rwpe(n: usize, edges: &[(usize, usize)], v: usize, steps: usize) -> Vec<f64> {
    let a = adjacency(n, edges);
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum::<u128>() as f64).collect();
    if deg[v] == 0.0 {
        return vec![0.0; steps];
    }
    let p: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if deg[i] > 0.0 { a[i][j] as f64 / deg[i] } else { 0.0 }).collect())
        .collect();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let mut out = Vec::new();
    for _ in 0..steps {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    next[i][j] += m[i][k] * p[k][j];
                }
            }
        }
        m = next;
        out.push(m[v][v]);
    }
    out
}

/// Newman modularity `(1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)` over a
/// symmetric weighted adjacency given as an edge list with `u < v`.
pub fn modularity(n: usize, edges: &[(usize, usize, f64)], community: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, w) in edges {
        a[u][v] += w;
        a[v][u] += w;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if community[i] == community[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over every set partition of `0..n` (restricted growth
/// strings). Feasible up to about 10 nodes.
pub fn best_modularity(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, n: usize, edges: &[(usize, usize, f64)], best: &mut f64) {
        if i == n {
            *best = best.max(modularity(n, edges, labels));
            return;
        }
        for c in 0..=max + 1 {
            labels[i] = c;
            rec(i + 1, max.max(c), labels, n, edges, best);
        }
    }
    if n == 0 {
        return 0.0;
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, n, edges, &mut best);
    best
}

/// Planted two-block regime of the recovery checks: block size and within-
/// and between-block edge probabilities. Sparser plantings (e.g. blocks of
/// 25) produce draws whose planted split is not the modularity optimum, so
/// no modularity maximizer can be asked to recover them.
pub const PLANTED: (usize, f64, f64) = (30, 0.3, 0.02);

/// Two-block stochastic block model with unit weights.
pub fn planted_partition(
    rng: &mut ChaCha8Rng,
    block: usize,
    p_in: f64,
    p_out: f64,
) -> (usize, Vec<(usize, usize, f64)>, Vec<usize>) {
    let n = 2 * block;
    let truth: Vec<usize> = (0..n).map(|i| i / block).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if truth[u] == truth[v] { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    (n, edges, truth)
}

/// Fraction of nodes labeled correctly after matching the two largest
/// detected communities to the two planted blocks; nodes in any other
/// community count as wrong.
pub fn two_block_agreement(found: &[usize], truth: &[usize]) -> f64 {
    let k = found.iter().max().map_or(0, |m| m + 1);
    let mut sizes: Vec<(usize, usize)> = (0..k).map(|c| (found.iter().filter(|&&x| x == c).count(), c)).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let a = sizes.first().map(|s| s.1);
    let b = sizes.get(1).map(|s| s.1);
    let score = |map_a: usize| {
        found
            .iter()
            .zip(truth)
            .filter(|(&f, &t)| (Some(f) == a && t == map_a) || (Some(f) == b && t == 1 - map_a))
            .count()
    };
    score(0).max(score(1)) as f64 / found.len() as f64
}

/// Rank of `true_score` among itself and `negatives` (1 = best), averaged
/// over the optimistic and pessimistic placements among ties, read off a
/// descending sort.
pub fn brute_rank(true_score: f64, negatives: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = negatives.iter().map(|&s| (s, false)).collect();
    all.push((true_score, true));
    all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let first = all.iter().position(|&(s, _)| s == true_score).unwrap() + 1;
    let last = all.iter().rposition(|&(s, _)| s == true_score).unwrap() + 1;
    (first + last) as f64 / 2.0
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Pearson and Spearman correlation of all-pairs Euclidean distances.
pub fn distance_correlation(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            da.push(euclid(&a[i], &a[j]));
            db.push(euclid(&b[i], &b[j]));
        }
    }
    (pearson(&da, &db), pearson(&average_ranks(&da), &average_ranks(&db)))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect()
}

/// Random micro-stream: strictly increasing times, no self-loops.
pub fn micro_stream(rng: &mut ChaCha8Rng, n: usize, m: usize, d_e: usize) -> Vec<TemporalEvent> {
    let mut t = 0.0;
    (0..m)
        .map(|_| {
            t += rng.gen_range(0.5..3.0);
            let s = rng.gen_range(0..n);
            let d = (s + rng.gen_range(1..n)) % n;
            TemporalEvent::new(s, d, t).with_features((0..d_e).map(|_| rng.gen_range(-1.0..1.0)).collect())
        })
        .collect()
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_input_grad(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let plus = f(&x);
            x[i] = orig - eps;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| tgn_transfer::nn::relative_error(a, n))
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compare every structural quantity of one graph against the oracles.
/// Integer quantities must match exactly, real ones to a few ulps of the
/// exact rational (RWPE to 1e-9). Returns a description of each mismatch.
pub fn structfeat_mismatches(n: usize, edges: &[(usize, usize)]) -> Vec<String> {
    use tgn_transfer::structfeat as sf;
    let g = window_graph(n, edges);
    let o = PathOracle::new(n, edges);
    let mut bad = Vec::new();
    for s in 0..n {
        let (dist, sigma) = sf::shortest_path_counts(&g, s);
        for t in 0..n {
            if dist[t] != o.dist[s][t] {
                bad.push(format!("dist({s},{t}) = {:?}, oracle {:?}", dist[t], o.dist[s][t]));
            }
            if u128::from(sigma[t]) != o.sigma[s][t] {
                bad.push(format!("sigma({s},{t}) = {}, oracle {}", sigma[t], o.sigma[s][t]));
            }
        }
    }
    let bc = sf::betweenness(&g);
    for (v, exact) in betweenness(n, &o).into_iter().enumerate() {
        if !matches_exact(bc[v], exact) {
            bad.push(format!("betweenness({v}) = {}, oracle {}/{}", bc[v], exact.num, exact.den));
        }
        let c = sf::closeness(&g, v);
        let ce = closeness(n, edges, &o, v);
        if !matches_exact(c, ce) {
            bad.push(format!("closeness({v}) = {c}, oracle {}/{}", ce.num, ce.den));
        }
        let cl = sf::clustering(&g, v);
        let cle = clustering(n, edges, v);
        if !matches_exact(cl, cle) {
            bad.push(format!("clustering({v}) = {cl}, oracle {}/{}", cle.num, cle.den));
        }
        let r = sf::rwpe(&g, v, 4);
        for (k, (a, b)) in r.iter().zip(rwpe(n, edges, v, 4)).enumerate() {
            if (a - b).abs() > 1e-9 {
                bad.push(format!("rwpe({v})[{k}] = {a}, oracle {b}"));
            }
        }
        let deg = edges.iter().filter(|&&(a, b)| a == v || b == v).count();
        if g.degree(v) != deg {
            bad.push(format!("degree({v}) = {}, oracle {deg}", g.degree(v)));
        }
    }
    bad
}

/// Largest gap between the correlation of a sampled-everything run and the
/// all-pairs oracle over random point clouds of `3..=max_n` points.
pub fn correlation_oracle_gap(rng: &mut ChaCha8Rng, trials: usize, max_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.gen_range(3..=max_n);
        let (da, db) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let a = random_matrix(rng, n, da);
        let b = random_matrix(rng, n, db);
        let (p, s) = distance_correlation(&a, &b);
        let got = tgn_transfer::structfeat::correlate_distances(&a, &b, usize::MAX, rng).unwrap();
        worst = worst.max((got.pearson - p).abs()).max((got.spearman - s).abs());
    }
    worst
}

pub fn tiny_tgn_config(d_e: usize) -> tgn_transfer::tgn::TgnConfig {
    tgn_transfer::tgn::TgnConfig {
        memory_dim: 4,
        embedding_dim: 3,
        time_dim: 3,
        edge_feat_dim: d_e,
        message_hidden: vec![5],
        decoder_hidden: vec![4],
        neighbors: 3,
    }
}

/// Largest gap between the logits a full streaming pass assigns to each
/// event and those of the prefix-replay oracle: replay every earlier batch
/// exactly, then score the event alone. With `leaky` the streaming pass
/// records each batch before predicting it, which the oracle must catch.
pub fn leakage_gap(seed: u64, leaky: bool) -> f64 {
    use rand::SeedableRng;
    use tgn_transfer::ctdg::{make_batches, sample_negatives, EventStream, NegativeSet};
    use tgn_transfer::tgn::{TgnParams, TgnState};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 6;
    let events = micro_stream(&mut rng, n, 24, 2);
    let stream = EventStream::from_events(events, n).unwrap();
    let cfg = tiny_tgn_config(2);
    let mut params = TgnParams::new(&cfg, stream.time_span(), &mut rng).unwrap();
    let negs = sample_negatives(stream.events(), n, 2, &mut rng).unwrap();
    let batches = make_batches(&stream, 4).unwrap();

    let mut state = TgnState::new(n, &cfg);
    let mut streamed = Vec::new();
    for b in &batches {
        let ev = stream.batch_events(b);
        if leaky {
            state.observe(ev).unwrap();
            state.flush(&params).unwrap();
        }
        let out = state.process_batch(&mut params, ev, &negs.slice(b.start..b.end), None, false).unwrap();
        state.observe(ev).unwrap();
        for i in 0..ev.len() {
            let mut row = vec![out.pos_logits[i]];
            row.extend_from_slice(&out.neg_logits[i * out.k..(i + 1) * out.k]);
            streamed.push(row);
        }
    }

    let mut gap: f64 = 0.0;
    let mut prefix = TgnState::new(n, &cfg);
    for b in &batches {
        let ev = stream.batch_events(b);
        for j in b.start..b.end {
            let single = NegativeSet { k: negs.k, nodes: negs.for_event(j).to_vec() };
            let out = prefix
                .clone()
                .process_batch(&mut params, &stream.events()[j..j + 1], &single, None, false)
                .unwrap();
            let mut row = vec![out.pos_logits[0]];
            row.extend_from_slice(&out.neg_logits);
            for (a, o) in streamed[j].iter().zip(&row) {
                gap = gap.max((a - o).abs());
            }
        }
        prefix.process_batch(&mut params, ev, &negs.slice(b.start..b.end), None, false).unwrap();
        prefix.observe(ev).unwrap();
    }
    gap
}
