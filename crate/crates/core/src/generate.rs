//! Random instance generators for the three regimes.
//!
//! Each generator starts from two cliques on the sides A' and B', plants
//! the crossing structure of its regime so that every degree stays equal
//! to D, chooses the exceptional sets and G0, and finally relabels the
//! vertices by a random permutation. The result is checked against the
//! shared pipeline preconditions and the regime classifier before it is
//! returned.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{detect_regime, shared_preconditions};
use crate::error::{Error, Result};
use crate::graph::{edge, Edge, Graph};
use crate::instance::{Instance, Params, Regime, SliceMode};
use crate::numeric::{ceil, q, qu, serde_q, Q};
use crate::partition::{Partition, PartitionSpec};

fn default_eps_close() -> Q {
    q(1, 10)
}

/// What to generate. `d`, `phi` and `crossing` are derived when absent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub regime: Regime,
    /// Upper bound on e(A', B') / n².
    #[serde(with = "serde_q", default = "default_eps_close")]
    pub eps_close: Q,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Lower bound on φn / n; φn is rounded up to the next admissible value.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub phi: Option<Q>,
    /// Number of crossing edges (few-edges regime only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing: Option<usize>,
}

mod opt_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) => serde_q::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "serde_q")] Q);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

impl GeneratorSpec {
    /// Desk-scale defaults: noncritical n = 200, K = 2; critical n = 21,
    /// K = 1; few-edges n = 40, K = 1.
    pub fn default_for(regime: Regime, seed: u64) -> Self {
        let (n, k) = match regime {
            Regime::Noncritical => (200, 2),
            Regime::Critical => (21, 1),
            Regime::FewEdges => (40, 1),
        };
        GeneratorSpec {
            n,
            k,
            regime,
            eps_close: default_eps_close(),
            seed,
            d: None,
            phi: None,
            crossing: None,
        }
    }
}

struct Layout {
    n: usize,
    k: usize,
    eps0: Q,
    a0: Vec<usize>,
    b0: Vec<usize>,
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    g0: Vec<Edge>,
    d: usize,
    phi_n: usize,
}

fn bad(clause: &str, detail: impl Into<String>) -> Error {
    Error::Input(format!("generator: {clause}: {}", detail.into()))
}

fn clique(vs: &[usize], out: &mut Vec<Edge>) {
    for (x, &u) in vs.iter().enumerate() {
        out.extend(vs[x + 1..].iter().map(|&v| edge(u, v)));
    }
}

/// Split `side` into an exceptional prefix of size `s` and K clusters.
fn split_side(side: &[usize], s: usize, k: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let m = (side.len() - s) / k;
    (side[..s].to_vec(), side[s..].chunks(m).map(<[usize]>::to_vec).collect())
}

/// Smallest exceptional-set size that is at least `min` and leaves a
/// multiple of K vertices on a side of size `half`.
fn exceptional_size(half: usize, k: usize, min: usize) -> Option<usize> {
    (min..half).find(|s| (half - s).is_multiple_of(k) && (half - s) / k > 0)
}

/// Smallest φn >= `min` with (D - φn) divisible by 2K² and positive.
fn admissible_phi(d: usize, k: usize, min: usize) -> Option<usize> {
    (min..d).find(|phi| (d - phi).is_multiple_of(2 * k * k))
}

/// G[X0] plus edges from each vertex of X0 to its own clusters, so that
/// every vertex of X0 has exactly φn edges in G0. Cluster targets are
/// dealt round-robin over the clusters.
fn exceptional_g0(x0: &[usize], clusters: &[Vec<usize>], phi_n: usize, out: &mut Vec<Edge>) -> Result<()> {
    clique(x0, out);
    let extra = phi_n + 1 - x0.len().max(1);
    let k = clusters.len();
    let m = clusters[0].len();
    if !x0.is_empty() && (phi_n + 1 < x0.len() || extra > k * m) {
        return Err(bad("iii.degree", format!("phi n = {phi_n} cannot be realized with |X0| = {}", x0.len())));
    }
    for (r, &v) in x0.iter().enumerate() {
        out.extend((0..extra).map(|t| edge(v, clusters[t % k][(r + t / k) % m])));
    }
    Ok(())
}

fn lambda_for(alpha_n: usize, k: usize, regime: Regime) -> Result<usize> {
    let gp = match regime {
        // Keep γ₁n = αn - 2λn/K² at 5 or more when possible so that the
        // degree cap 3γ₁n/5 is positive.
        Regime::Noncritical => (alpha_n / 10).max(2).min(alpha_n.saturating_sub(5) / 2).max(1).min(alpha_n.saturating_sub(1) / 2),
        _ => (alpha_n / 10).max(1).min(alpha_n.saturating_sub(1)),
    };
    if gp == 0 {
        return Err(bad("div.gamma", format!("alpha n = {alpha_n} leaves no room for lambda n / K^2 >= 1")));
    }
    Ok(gp * k * k)
}

fn phi_floor(spec: &GeneratorSpec) -> usize {
    spec.phi.map_or(0, |f| ceil(f * qu(spec.n)).max(0) as usize)
}

fn noncritical(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let (n, k) = (spec.n, spec.k);
    if n % 2 != 0 {
        return Err(bad("sides", "n must be even"));
    }
    let half = n / 2;
    let d = spec.d.unwrap_or(half);
    if d < half || d + 1 - half > half {
        return Err(bad("D", format!("need n/2 <= D <= n - 1, got D = {d}")));
    }
    let c = d + 1 - half;
    if !(c * half).is_multiple_of(2) {
        return Err(bad("iv", format!("e(A',B') = {} is odd", c * half)));
    }
    let eps0 = q(1, 10);
    let s = exceptional_size(half, k, n.div_ceil(200)).ok_or_else(|| bad("clusters", "no cluster size m fits"))?;
    let phi_n = admissible_phi(d, k, phi_floor(spec).max(s - 1))
        .ok_or_else(|| bad("div.alpha", format!("no phi n makes (D - phi n)/(2K^2) a natural number (D = {d}, K = {k})")))?;
    if c > s {
        return Err(bad("D", format!("crossing degree {c} exceeds |A0| = {s}")));
    }
    let side_a: Vec<usize> = (0..half).collect();
    let side_b: Vec<usize> = (half..n).collect();
    let mut edges = Vec::new();
    clique(&side_a, &mut edges);
    clique(&side_b, &mut edges);
    let (a0, a) = split_side(&side_a, s, k);
    let (b0, b) = split_side(&side_b, s, k);
    edges.extend(balanced_matchings(&a, &b, c, rng)?);
    let mut pa0 = a0.clone();
    pa0.shuffle(rng);
    for t in 0..c {
        edges.extend((0..s).map(|x| edge(pa0[x], b0[(x + t) % s])));
    }
    let mut g0 = Vec::new();
    exceptional_g0(&a0, &a, phi_n, &mut g0)?;
    exceptional_g0(&b0, &b, phi_n, &mut g0)?;
    Ok(Layout { n, k, eps0, a0, b0, a, b, edges, g0, d, phi_n })
}

/// `c` edge-disjoint perfect matchings between the clusters of A and B in
/// which every pair (A_i, B_j) receives m/K edges per matching, up to
/// rounding: vertex r of A_i goes to cluster (i + r + t) mod K.
fn balanced_matchings(a: &[Vec<usize>], b: &[Vec<usize>], c: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Edge>> {
    let k = a.len();
    let mut out: Vec<Edge> = Vec::new();
    for t in 0..c {
        let mut placed = false;
        for _ in 0..100 {
            let mut inbox: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, cl) in a.iter().enumerate() {
                let mut cl = cl.clone();
                cl.shuffle(rng);
                for (r, &x) in cl.iter().enumerate() {
                    inbox[(i + r + t) % k].push(x);
                }
            }
            let mut round = Vec::new();
            for (j, xs) in inbox.iter().enumerate() {
                let mut ys = b[j].clone();
                ys.shuffle(rng);
                round.extend(xs.iter().zip(&ys).map(|(&x, &y)| edge(x, y)));
            }
            round.sort_unstable();
            if round.iter().all(|e| out.binary_search(e).is_err()) {
                out.extend(round);
                out.sort_unstable();
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(bad("D", format!("could not place {c} disjoint crossing matchings")));
        }
    }
    Ok(out)
}

/// The critical template: a hub with k neighbours on each side of two
/// 2k-cliques, and a perfect matching between the vertices it misses.
fn critical(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let (n, k) = (spec.n, spec.k);
    if n % 4 != 1 {
        return Err(bad("template", format!("critical instances have n = 4t + 1, got {n}")));
    }
    let t = n / 4;
    let d = 2 * t;
    if spec.d.is_some_and(|x| x != d) {
        return Err(bad("D", format!("the template forces D = {d}")));
    }
    if t % (k * k) != 0 {
        return Err(bad("div.alpha", format!("t = {t} must be divisible by K^2 = {}", k * k)));
    }
    let phi_n = admissible_phi(d, k, phi_floor(spec))
        .ok_or_else(|| bad("div.alpha", format!("no phi n makes (D - phi n)/(2K^2) a natural number (D = {d}, K = {k})")))?;
    let hub = 0;
    let side_a: Vec<usize> = (1..=d).collect();
    let side_b: Vec<usize> = (d + 1..=2 * d).collect();
    let (_, a) = split_side(&side_a, 0, k);
    let (_, b) = split_side(&side_b, 0, k);
    let mut edges = Vec::new();
    clique(&side_a, &mut edges);
    clique(&side_b, &mut edges);
    let per = t / k;
    let block = t / (k * k);
    let mut hub_a = Vec::new();
    let mut hub_b = Vec::new();
    let mut rest_a = Vec::new();
    let mut rest_b = Vec::new();
    for i in 0..k {
        for (cl, hubs, rest) in [(&a[i], &mut hub_a, &mut rest_a), (&b[i], &mut hub_b, &mut rest_b)] {
            let mut cl = cl.clone();
            cl.shuffle(rng);
            hubs.push(cl[..per].to_vec());
            rest.push(cl[per..].to_vec());
        }
    }
    for i in 0..k {
        for j in 0..k {
            let xs = &rest_a[i][j * block..(j + 1) * block];
            let ys = &rest_b[j][i * block..(i + 1) * block];
            edges.extend(xs.iter().zip(ys).map(|(&x, &y)| edge(x, y)));
        }
    }
    edges.extend(hub_a.iter().chain(&hub_b).flatten().map(|&v| edge(hub, v)));
    // G0 at the hub: at least half of it crossing, an even number of crossing edges.
    let cross0 = (phi_n.div_ceil(2) + phi_n.div_ceil(2) % 2).min(phi_n - phi_n % 2);
    if 2 * cross0 < phi_n || cross0 > t {
        return Err(bad("iii.cross", format!("phi n = {phi_n} cannot be split for the hub")));
    }
    let deal = |hubs: &[Vec<usize>], count: usize| -> Vec<Edge> {
        (0..count).map(|x| edge(hub, hubs[x % k][x / k])).collect()
    };
    let mut g0 = deal(&hub_b, cross0);
    g0.extend(deal(&hub_a, phi_n - cross0));
    Ok(Layout { n, k, eps0: q(1, 5), a0: vec![hub], b0: Vec::new(), a, b, edges, g0, d, phi_n })
}

/// Two cliques on n/2 vertices with an even number of crossing edges
/// planted by swaps: each pair x1x2 in A and y1y2 in B becomes x1y1, x2y2.
fn few_edges(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let (n, k) = (spec.n, spec.k);
    if n % 4 != 0 {
        return Err(bad("i.D", format!("n = {n} must be divisible by 4")));
    }
    let half = n / 2;
    let d = half - 1;
    if spec.d.is_some_and(|x| x != d) {
        return Err(bad("i.D", format!("this regime forces D = n/2 - 1 = {d}")));
    }
    let eps0 = q(1, 10);
    let s = exceptional_size(half, k, n.div_ceil(200)).ok_or_else(|| bad("clusters", "no cluster size m fits"))?;
    let phi_n = admissible_phi(d, k, phi_floor(spec).max(s - 1))
        .ok_or_else(|| bad("div.alpha", format!("no phi n makes (D - phi n)/(2K^2) a natural number (D = {d}, K = {k})")))?;
    let alpha_n = (d - phi_n) / (2 * k * k);
    let stray_cap = if k > 1 { lambda_for(alpha_n, k, Regime::FewEdges)? / (k * k) } else { 0 };
    let (a0, a) = split_side(&(0..half).collect::<Vec<_>>(), s, k);
    let (b0, b) = split_side(&(half..n).collect::<Vec<_>>(), s, k);
    let m = a[0].len();
    let cap = [2 * alpha_n, d - phi_n, d - 1, m + stray_cap].into_iter().min().unwrap_or(0) & !1;
    let e = match spec.crossing {
        Some(e) if e % 2 != 0 || e > cap => {
            return Err(bad("v", format!("crossing = {e} must be even and at most {cap}")));
        }
        Some(e) => e,
        None if cap < 2 => 0,
        None => 2 * rng.gen_range(1..=cap / 2),
    };
    // Crossing edges join the first A-cluster to the first B-cluster except
    // for a few strays, which end up in non-localized candidates.
    let stray = if k > 1 { rng.gen_range(e.saturating_sub(m)..=stray_cap.min(e)) } else { 0 };
    let pick = |first: &[usize], rest: &[Vec<usize>], rng: &mut ChaCha8Rng| {
        let mut home = first.to_vec();
        let mut away: Vec<usize> = rest.concat();
        home.shuffle(rng);
        away.shuffle(rng);
        let mut out = home[..e - stray].to_vec();
        out.extend_from_slice(&away[..stray]);
        out
    };
    let xs = pick(&a[0], &a[1..], rng);
    let ys = pick(&b[0], &b[1..], rng);
    let side_a: Vec<usize> = (0..half).collect();
    let side_b: Vec<usize> = (half..n).collect();
    let mut removed: Vec<Edge> = (0..e / 2)
        .flat_map(|r| [edge(xs[2 * r], xs[2 * r + 1]), edge(ys[2 * r], ys[2 * r + 1])])
        .collect();
    removed.sort_unstable();
    let mut edges = Vec::new();
    clique(&side_a, &mut edges);
    clique(&side_b, &mut edges);
    edges.retain(|e| removed.binary_search(e).is_err());
    edges.extend((0..e).map(|t| edge(xs[t], ys[t])));
    let mut g0 = Vec::new();
    exceptional_g0(&a0, &a, phi_n, &mut g0)?;
    exceptional_g0(&b0, &b, phi_n, &mut g0)?;
    Ok(Layout { n, k, eps0, a0, b0, a, b, edges, g0, d, phi_n })
}

/// Generate an instance for `spec.regime`, with suggested parameters.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    if spec.k == 0 {
        return Err(bad("K", "K must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lay = match spec.regime {
        Regime::Noncritical => noncritical(spec, &mut rng)?,
        Regime::Critical => critical(spec, &mut rng)?,
        Regime::FewEdges => few_edges(spec, &mut rng)?,
    };
    let n = lay.n;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let map = |vs: &[usize]| vs.iter().map(|&v| perm[v]).collect::<Vec<_>>();
    let map_edges = |es: &[Edge]| es.iter().map(|&(u, v)| edge(perm[u], perm[v])).collect::<Vec<_>>();
    let graph = Graph::new(n, map_edges(&lay.edges))?;
    let g0 = Graph::new(n, map_edges(&lay.g0))?;
    let partition = Partition::new(
        n,
        PartitionSpec {
            k: lay.k,
            m: lay.a[0].len(),
            eps0: lay.eps0,
            a0: map(&lay.a0),
            b0: map(&lay.b0),
            a: lay.a.iter().map(|c| map(c)).collect(),
            b: lay.b.iter().map(|c| map(c)).collect(),
        },
    )?;
    let e_cross = graph.edges().filter(|&(u, v)| partition.is_crossing(u, v)).count();
    if qu(e_cross) > spec.eps_close * qu(n) * qu(n) {
        return Err(bad("eps_close", format!("e(A',B') = {e_cross} exceeds eps_close n^2")));
    }
    let alpha_n = (lay.d - lay.phi_n) / (2 * lay.k * lay.k);
    let params = Params {
        d: lay.d,
        phi_n: lay.phi_n,
        lambda_n: lambda_for(alpha_n, lay.k, spec.regime)?,
        eps: q(1, 10),
        eps_prime: q(1, 5),
        seed: spec.seed,
        w1: None,
        w2: None,
        two_path_threshold: None,
        critical_seeds: None,
        slice_mode: SliceMode::Stratified,
    };
    let mut inst = Instance::new(graph, partition, g0)?;
    let pre = shared_preconditions(&inst, &params);
    if let Some(c) = pre.first_failure() {
        return Err(Error::Contract(format!("generated instance fails {}: {}", c.clause, c.detail)));
    }
    let detected = detect_regime(&inst, params.d)?;
    if detected != spec.regime {
        return Err(Error::Contract(format!("generated instance classifies as {detected}, not {}", spec.regime)));
    }
    inst.params = Some(params);
    inst.regime = Some(spec.regime);
    inst.meta = Some(serde_json::json!({ "generator": serde_json::to_value(spec).expect("spec serializes") }));
    Ok(inst)
}
