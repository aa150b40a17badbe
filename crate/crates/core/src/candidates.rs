//! Decomposition of a cell's crossing graph into exceptional system
//! candidates, for the non-critical and critical cases, and the integer
//! allocation used by the critical case.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exceptional::ExceptionalCandidate;
use crate::graph::{edge, graph_minus, Edge, Graph};
use crate::matchings::{
    balanced_matching_decomposition, even_matching_decomposition, max_subgraph_capped_forced_even,
    perfect_matching, Matching,
};
use crate::numeric::{floor, qu, to_f64};
use crate::partition::Partition;
use crate::report::Report;

fn crossing_only(h: &Graph, p: &Partition, stage: &str) -> Result<()> {
    match h.edges().find(|&(u, v)| !p.is_crossing(u, v)) {
        Some((u, v)) => Err(Error::precondition(stage, "bipartite", format!("edge ({u},{v}) is not an A'B'-edge"))
            .with_witness(vec![u, v])),
        None => Ok(()),
    }
}

fn esc3_ok(p: &Partition, crossing: usize) -> bool {
    qu(4 * crossing * crossing) <= p.eps0() * qu(p.n()) * qu(p.n())
}

/// Output of [`decompose_noncritical`].
#[derive(Clone, Debug, Serialize)]
pub struct NoncriticalCandidates {
    /// F_1..F_{γn}; the first `extended` of them carry 2-paths.
    pub f: Vec<ExceptionalCandidate>,
    /// F'_1..F'_{γ'n}, each a 2-matching.
    pub f_prime: Vec<ExceptionalCandidate>,
    /// Size of the random subset that was extended by 2-paths.
    pub extended: usize,
    /// Number of 2/3-subset draws used.
    pub attempts: usize,
    pub preconditions: Report,
}

/// Edge of `g` at a maximum-degree vertex avoiding `avoid`, preferring a
/// high-degree partner. Ties break towards lower ids.
fn heavy_edge(g: &Graph, avoid: &BTreeSet<usize>) -> Option<Edge> {
    let mut best: Option<(usize, usize, Edge)> = None;
    for (u, v) in g.edges() {
        if avoid.contains(&u) || avoid.contains(&v) {
            continue;
        }
        let key = (g.degree(u).max(g.degree(v)), g.degree(u).min(g.degree(v)));
        if best.is_none_or(|(a, b, _)| key > (a, b)) {
            best = Some((key.0, key.1, (u, v)));
        }
    }
    best.map(|(_, _, e)| e)
}

/// Decompose the crossing graph `h` of one cell into `gamma_n` candidates
/// F_s and `gamma_prime_n` 2-matchings F'_s.
///
/// The F_s start as even matchings of the degree-capped extremal subgraph;
/// a random two-thirds of them are extended by vertex-disjoint 2-paths
/// centred at exceptional vertices with leftover degree at least
/// `two_path_threshold`; the rest of the leftover is split into even
/// matchings. The random subset is redrawn up to 20 times.
pub fn decompose_noncritical(
    h: &Graph,
    p: &Partition,
    gamma_n: usize,
    gamma_prime_n: usize,
    two_path_threshold: usize,
    seed: u64,
) -> Result<NoncriticalCandidates> {
    const STAGE: &str = "decompose_noncritical";
    crossing_only(h, p, STAGE)?;
    let n = p.n();
    let e = h.edge_count();
    let mut pre = Report::new("noncritical decomposition preconditions");
    if gamma_n == 0 {
        return Err(Error::precondition(STAGE, "gamma", "gamma n must be positive"));
    }
    if !e.is_multiple_of(2) {
        return Err(Error::precondition(STAGE, "i", format!("e(H) = {e} is odd")));
    }
    let gamma = qu(gamma_n);
    let bound_delta = qu(16) * gamma / qu(15);
    pre.advise("i.delta", qu(h.max_degree()) <= bound_delta, format!("Δ(H) = {} vs 16γn/15", h.max_degree()))
        .slack(to_f64(bound_delta) - h.max_degree() as f64);
    let inner = h.filter_edges(|u, v| !p.is_exceptional(u) && !p.is_exceptional(v));
    let bound_inner = qu(3) * gamma / qu(5) - p.eps0() * qu(n);
    pre.advise("i.inner", qu(inner.max_degree()) < bound_inner, format!("Δ(H[A,B]) = {} vs (3γ/5 - eps0) n", inner.max_degree()))
        .slack(to_f64(bound_inner) - inner.max_degree() as f64);

    let cap = floor(qu(3 * gamma_n) / qu(5)).max(0) as usize;
    let forced: Vec<Edge> = h.edges().filter(|&(u, v)| p.is_exceptional(u) && p.is_exceptional(v)).collect();
    let h_cap = max_subgraph_capped_forced_even(h, cap, &forced)?.ok_or_else(|| {
        Error::precondition(STAGE, "ii", format!("no even subgraph with Δ <= {cap} contains H[A0,B0]"))
    })?;
    let need = 2 * (gamma_n + gamma_prime_n);
    pre.check("ii.lower", h_cap.edge_count() >= need, format!("e(H') = {} vs 2(γ+γ')n = {need}", h_cap.edge_count()))
        .slack(h_cap.edge_count() as f64 - need as f64);
    let upper = qu(10) * p.eps0() * gamma * qu(n);
    pre.advise("ii.upper", qu(h_cap.edge_count()) <= upper, "e(H') <= 10 eps0 γ n^2");
    if let Some(f) = pre.to_failure(STAGE) {
        return Err(Error::Precondition(Box::new(f)));
    }

    // Greedy 2-matchings from H'.
    let mut rest = h_cap.clone();
    let mut f_prime = Vec::with_capacity(gamma_prime_n);
    for s in 0..gamma_prime_n {
        let e1 = heavy_edge(&rest, &BTreeSet::new());
        let e2 = e1.and_then(|(a, b)| heavy_edge(&rest, &BTreeSet::from([a, b])));
        let (Some(e1), Some(e2)) = (e1, e2) else {
            return Err(Error::infeasible(STAGE, "2-matching", format!("no 2-matching left for F'_{}", s + 1)));
        };
        rest = rest.filter_edges(|u, v| (u, v) != e1 && (u, v) != e2);
        f_prime.push(ExceptionalCandidate::from_edges(vec![e1, e2], p, None));
    }
    let h1_cap = rest;
    let leftover = graph_minus(h, &h_cap);
    let ms = even_matching_decomposition(&h1_cap, gamma_n)
        .map_err(|err| Error::infeasible(STAGE, "even_matchings", err.to_string()))?;
    if leftover.edge_count() == 0 {
        return Ok(NoncriticalCandidates {
            f: ms.into_iter().map(|m| ExceptionalCandidate::from_edges(m, p, None)).collect(),
            f_prime,
            extended: 0,
            attempts: 0,
            preconditions: pre,
        });
    }
    let x: Vec<usize> = p.v0().into_iter().filter(|&v| leftover.degree(v) > 0).collect();
    let mut last_err = None;
    for attempt in 1..=20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let pick: Vec<bool> = (0..gamma_n).map(|_| rng.gen_bool(2.0 / 3.0)).collect();
        let order: Vec<usize> = (0..gamma_n).filter(|&s| pick[s]).chain((0..gamma_n).filter(|&s| !pick[s])).collect();
        let r = pick.iter().filter(|&&b| b).count();
        let mut remaining = leftover.clone();
        let mut fs: Vec<Vec<Edge>> = Vec::with_capacity(gamma_n);
        for &s in &order[..r] {
            let mut edges = ms[s].clone();
            let mut used: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
            let mut crossing = edges.len();
            let mut taken = Vec::new();
            for &w in &x {
                if used.contains(&w) || remaining.degree(w) < two_path_threshold.max(2) {
                    continue;
                }
                if !esc3_ok(p, crossing + 2) {
                    break;
                }
                let free: Vec<usize> = remaining
                    .neighbors(w)
                    .iter()
                    .copied()
                    .filter(|u| !used.contains(u) && !p.is_exceptional(*u))
                    .take(2)
                    .collect();
                if free.len() < 2 {
                    continue;
                }
                for &u in &free {
                    used.insert(u);
                    taken.push(edge(w, u));
                }
                used.insert(w);
                crossing += 2;
            }
            if !taken.is_empty() {
                remaining = remaining.filter_edges(|u, v| !taken.contains(&(u, v)));
                edges.extend(taken);
            }
            fs.push(edges);
        }
        let mut tail: Vec<Edge> = remaining.edge_vec();
        for &s in &order[r..] {
            tail.extend(ms[s].iter().copied());
        }
        let h3 = Graph::from_valid_edges(n, tail);
        match even_matching_decomposition(&h3, gamma_n - r) {
            Ok(rest_ms) => {
                fs.extend(rest_ms);
                return Ok(NoncriticalCandidates {
                    f: fs.into_iter().map(|m| ExceptionalCandidate::from_edges(m, p, None)).collect(),
                    f_prime,
                    extended: r,
                    attempts: attempt,
                    preconditions: pre,
                });
            }
            Err(err) => last_err = Some(err),
        }
    }
    Err(Error::infeasible(
        STAGE,
        "leftover",
        format!(
            "leftover could not be split into even matchings after 20 draws: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ),
    ))
}

/// A q×r matrix with entries in {0,1,2}, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AllocationMatrix {
    pub rows: Vec<Vec<u8>>,
}

/// Check conditions (a)–(c) of an allocation.
pub fn allocation_holds(a: &[usize], c: &[u8], fours: usize, m: &AllocationMatrix) -> bool {
    let r = c.len();
    if m.rows.len() != a.len() || m.rows.iter().any(|row| row.len() != r || row.iter().any(|&x| x > 2)) {
        return false;
    }
    let rows_ok = m.rows.iter().zip(a).all(|(row, &ai)| row.iter().map(|&x| x as usize).sum::<usize>() == ai);
    let cols_ok = (0..r).all(|j| {
        let total = c[j] as usize + m.rows.iter().map(|row| row[j] as usize).sum::<usize>();
        let ones = m.rows.iter().filter(|row| row[j] == 1).count();
        total == if j < fours { 4 } else { 2 } && ones + c[j] as usize >= 2
    });
    rows_ok && cols_ok
}

/// Distribute the row totals `a` over `r = c.len()` columns so that column
/// `j` reaches 4 for `j < fours` and 2 otherwise, and every column with
/// base `c_j < 2` gets at least `2 - c_j` ones.
pub fn allocate_matrix(a: &[usize], c: &[u8], fours: usize) -> Result<AllocationMatrix> {
    let q = a.len();
    let r = c.len();
    if !(1..=3).contains(&q) || r == 0 {
        return Err(Error::Input(format!("need 1 <= q <= 3 and r >= 1, got q = {q}, r = {r}")));
    }
    if fours >= r {
        return Err(Error::Input(format!("eta r = {fours} must be < r = {r}")));
    }
    if c.iter().any(|&x| x > 2) || c.windows(2).any(|w| w[0] < w[1]) || c[0] > c[r - 1] + 1 {
        return Err(Error::Input("c must be non-increasing in {0,1,2} with c_1 - c_r <= 1".into()));
    }
    let total: usize = a.iter().sum::<usize>() + c.iter().map(|&x| x as usize).sum::<usize>();
    if total != 2 * r + 2 * fours {
        return Err(Error::Input(format!("sum a + sum c = {total} != 2(1+eta) r = {}", 2 * r + 2 * fours)));
    }
    for (i, &ai) in a.iter().enumerate() {
        let hi = if i < 2 { qu(r) } else { qu(31 * r) / qu(30) };
        if qu(60 * ai) < qu(31 * r) || qu(ai) > hi {
            return Err(Error::Input(format!("a_{} = {ai} outside [31r/60, {}]", i + 1, if i < 2 { "r" } else { "31r/30" })));
        }
    }
    let mut col: Vec<usize> = c.iter().map(|&x| x as usize).collect();
    let mut rows = Vec::with_capacity(q);
    for &ai in a {
        let sum: usize = col.iter().sum();
        let mut row = vec![0u8; r];
        if sum >= 2 * r {
            // Case 1: fill greedily up to 4.
            let mut left = ai;
            for j in 0..r {
                let x = left.min(2).min(4 - col[j]);
                row[j] = x as u8;
                left -= x;
            }
            debug_assert_eq!(left, 0);
        } else if sum + ai >= 2 * r {
            // Case 2: bases are 1 or 2; ones on the 1-columns, then 2,..,2,(1),0,..
            debug_assert!(col.iter().all(|&x| x == 1 || x == 2));
            let r2 = col.iter().filter(|&&x| x == 2).count();
            for x in row.iter_mut().skip(r2) {
                *x = 1;
            }
            let mut left = ai - (r - r2);
            debug_assert!(left <= 2 * r2);
            for x in row.iter_mut().take(r2) {
                let y = left.min(2);
                *x = y as u8;
                left -= y;
            }
        } else {
            // Case 3: ones on the lowest columns first, keeping the profile
            // balanced and non-increasing.
            debug_assert!(ai <= r);
            let low = *col.iter().min().unwrap();
            let first_low = col.iter().position(|&x| x == low).unwrap();
            for t in 0..ai {
                row[(first_low + t) % r] = 1;
            }
        }
        for j in 0..r {
            col[j] += row[j] as usize;
        }
        debug_assert!(col.windows(2).all(|w| w[0] >= w[1]) && col[0] <= 4, "profile {col:?}");
        rows.push(row);
    }
    let m = AllocationMatrix { rows };
    if !allocation_holds(a, c, fours, &m) {
        return Err(Error::Contract(format!("allocation failed for a = {a:?}, c = {c:?}, fours = {fours}")));
    }
    Ok(m)
}

/// Output of [`decompose_critical`].
#[derive(Clone, Debug, Serialize)]
pub struct CriticalCandidates {
    /// F_1..F_{αn}: first the r matrix-built candidates, then the seeds.
    pub f: Vec<ExceptionalCandidate>,
    /// Number of seed candidates at the end of `f`; each has two edges and
    /// degree one at every vertex of W0.
    pub seeds: usize,
    pub preconditions: Report,
}

/// Default number of seed candidates: max(ceil(αn/200), λn/K², e_H(W')).
pub fn default_seed_count(alpha_n: usize, lambda_per_cell: usize, e_w_prime: usize) -> usize {
    alpha_n.div_ceil(200).max(lambda_per_cell).max(e_w_prime)
}

/// Decompose the crossing graph `h` of one cell into `alpha_n` candidates,
/// `fours` of which have four edges and the rest two.
pub fn decompose_critical(
    h: &Graph,
    p: &Partition,
    w_prime: &[usize],
    w0: &[usize],
    alpha_n: usize,
    fours: usize,
    seeds: usize,
) -> Result<CriticalCandidates> {
    const STAGE: &str = "decompose_critical";
    crossing_only(h, p, STAGE)?;
    let n = p.n();
    let e = h.edge_count();
    let an = qu(alpha_n);
    let mut pre = Report::new("critical decomposition preconditions");
    if w_prime.is_empty() || w_prime.len() > 3 || w0.len() != w_prime.len().min(2) || w0.iter().any(|w| !w_prime.contains(w)) {
        return Err(Error::precondition(STAGE, "c3", "need 1 <= |W'| <= 3 and W0 the first min(2,|W'|) of W'"));
    }
    pre.check("c1", e == 2 * alpha_n + 2 * fours, format!("e(H) = {e} vs 2(1+η)αn = {}", 2 * alpha_n + 2 * fours));
    pre.advise("c1.eta", 200 * fours < 199 * alpha_n, "η < 199/200");
    let in_w = |v: usize| w_prime.contains(&v);
    let off_w = h.filter_edges(|u, v| !in_w(u) && !in_w(v));
    let bound = qu(199) * an / qu(100);
    pre.advise("c2.sparse", qu(off_w.edge_count()) <= bound, format!("e(H - W') = {} vs 199αn/100", off_w.edge_count()))
        .slack(to_f64(bound) - off_w.edge_count() as f64);
    let low: Vec<usize> = w_prime.iter().copied().filter(|&w| qu(25 * h.degree(w)) < qu(13) * an).collect();
    pre.advise("c2.degree", low.is_empty(), "d(w) >= 13αn/25 on W'").witness(low);
    let high: Vec<usize> = w_prime
        .iter()
        .copied()
        .filter(|&w| {
            let cap = if w0.contains(&w) { an } else { qu(41) * an / qu(40) };
            qu(h.degree(w)) > cap
        })
        .collect();
    pre.check("c3", high.is_empty(), "d(w) <= αn on W0 and <= 41αn/40 on W' \\ W0").witness(high);
    let min_w = w_prime.iter().map(|&w| h.degree(w)).min().unwrap_or(0);
    let max_other = (0..n).filter(|&v| !in_w(v)).map(|v| h.degree(v)).max().unwrap_or(0);
    pre.advise("c4", qu(150) * (qu(min_w) - qu(max_other)) >= an, format!("degree gap {}", min_w as i64 - max_other as i64));
    let c5: Vec<usize> = (0..n).filter(|&v| !p.is_exceptional(v) && qu(h.degree(v)) > p.eps0() * qu(n)).collect();
    pre.advise("c5", c5.is_empty(), "d(v) <= eps0 n on A u B").witness(c5);
    if let Some(f) = pre.to_failure(STAGE) {
        return Err(Error::Precondition(Box::new(f)));
    }
    if seeds > alpha_n {
        return Err(Error::precondition(STAGE, "seeds", format!("{seeds} seeds exceed αn = {alpha_n}")));
    }

    // Seed 2-matchings: first cover H[W'], then pair up edges at W0.
    let mut rest = h.clone();
    let mut seed_list: Vec<Vec<Edge>> = Vec::new();
    let inner: Vec<Edge> = h.edges().filter(|&(u, v)| in_w(u) && in_w(v)).collect();
    let fail = |what: &str| Error::infeasible(STAGE, "seeds", what.to_string());
    let take_at = |g: &Graph, w: usize, avoid: &BTreeSet<usize>| -> Option<Edge> {
        g.neighbors(w)
            .iter()
            .copied()
            .filter(|x| !in_w(*x) && !avoid.contains(x))
            .max_by_key(|&x| (!p.is_exceptional(x), g.degree(x), std::cmp::Reverse(x)))
            .map(|x| edge(w, x))
    };
    for &f in &inner {
        let covered = BTreeSet::from([f.0, f.1]);
        let other: Vec<usize> = w_prime.iter().copied().filter(|w| !covered.contains(w)).collect();
        let g = match other.first() {
            Some(&w) => take_at(&rest, w, &covered),
            None => {
                let off = rest.filter_edges(|u, v| !in_w(u) && !in_w(v));
                heavy_edge(&off, &covered)
            }
        }
        .ok_or_else(|| fail("cannot complete a seed on H[W']"))?;
        rest = rest.filter_edges(|u, v| (u, v) != f && (u, v) != g);
        seed_list.push(vec![f, g]);
    }
    while seed_list.len() < seeds {
        let pair = if w0.len() == 2 {
            let e1 = take_at(&rest, w0[0], &BTreeSet::new()).ok_or_else(|| fail("W0 vertex exhausted"))?;
            let e2 = take_at(&rest, w0[1], &BTreeSet::from([e1.0, e1.1])).ok_or_else(|| fail("W0 vertex exhausted"))?;
            [e1, e2]
        } else {
            let e1 = take_at(&rest, w0[0], &BTreeSet::new()).ok_or_else(|| fail("W0 vertex exhausted"))?;
            let off = rest.filter_edges(|u, v| !in_w(u) && !in_w(v));
            let e2 = heavy_edge(&off, &BTreeSet::from([e1.0, e1.1])).ok_or_else(|| fail("no edge off W'"))?;
            [e1, e2]
        };
        rest = rest.filter_edges(|u, v| (u, v) != pair[0] && (u, v) != pair[1]);
        seed_list.push(pair.to_vec());
    }
    let s0 = seed_list.len();
    if s0 > alpha_n || fours >= alpha_n - s0 {
        return Err(fail("too many seeds for the remaining budget"));
    }
    let r = alpha_n - s0;
    let h1 = rest;
    let h1_off = h1.filter_edges(|u, v| !in_w(u) && !in_w(v));
    if h1_off.edge_count() > 2 * r || h1_off.max_degree() > r {
        return Err(Error::infeasible(
            STAGE,
            "matchings",
            format!("H1 - W' has {} edges and Δ = {}, r = {r}", h1_off.edge_count(), h1_off.max_degree()),
        ));
    }
    let mut ms: Vec<Matching> = balanced_matching_decomposition(&h1_off, r)?;
    ms.sort_by_key(|m| std::cmp::Reverse(m.len()));
    let c: Vec<u8> = ms.iter().map(|m| m.len() as u8).collect();
    let a: Vec<usize> = w_prime.iter().map(|&w| h1.degree(w)).collect();
    let matrix = allocate_matrix(&a, &c, fours).map_err(|err| Error::infeasible(STAGE, "allocate_matrix", err.to_string()))?;

    let mut fj: Vec<Vec<Edge>> = ms;
    for (i, &w) in w_prime.iter().enumerate() {
        let row = &matrix.rows[i];
        let mut left: Vec<usize> = h1.neighbors(w).to_vec();
        let mut a_rem: Vec<u8> = row.clone();
        // Step one: a V0-neighbour for each column that takes two edges.
        for j in 0..r {
            if row[j] != 2 {
                continue;
            }
            let touched: BTreeSet<usize> = fj[j].iter().flat_map(|&(x, y)| [x, y]).collect();
            let pick = left.iter().position(|&v| p.is_exceptional(v) && !touched.contains(&v));
            if let Some(pos) = pick {
                let v = left.remove(pos);
                fj[j].push(edge(w, v));
                a_rem[j] = 1;
            }
        }
        // Step two: perfect matching between the remaining neighbours and
        // copies of the partial candidates that avoid them.
        let copies: Vec<usize> = (0..r).flat_map(|j| std::iter::repeat_n(j, a_rem[j] as usize)).collect();
        if copies.len() != left.len() {
            return Err(Error::infeasible(STAGE, "Q", format!("|N_r| = {} but |V'| = {}", left.len(), copies.len()))
                .with_witness(vec![w]));
        }
        let touched: Vec<BTreeSet<usize>> = fj.iter().map(|f| f.iter().flat_map(|&(x, y)| [x, y]).collect()).collect();
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|&v| (0..copies.len()).filter(|&t| !touched[copies[t]].contains(&v)).collect())
            .collect();
        match perfect_matching(copies.len(), &adj) {
            Ok(mate) => {
                for (idx, &t) in mate.iter().enumerate() {
                    fj[copies[t]].push(edge(w, left[idx]));
                }
            }
            Err(violator) => {
                return Err(Error::infeasible(STAGE, "Q", format!("no perfect matching in Q for w = {w}"))
                    .with_witness(violator.into_iter().map(|idx| left[idx]).collect()));
            }
        }
    }
    let mut f: Vec<ExceptionalCandidate> = fj
        .into_iter()
        .map(|mut edges| {
            edges.sort_unstable();
            ExceptionalCandidate::from_edges(edges, p, None)
        })
        .collect();
    f.extend(seed_list.into_iter().map(|s| ExceptionalCandidate::from_edges(s, p, None)));
    Ok(CriticalCandidates {
        f,
        seeds: s0,
        preconditions: pre,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exceptional::verify_candidate;
    use crate::partition::tests::small;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive feasibility by dynamic programming over columns with the
    /// vector of partial row sums as state.
    fn feasible(a: &[usize], c: &[u8], fours: usize) -> bool {
        let q = a.len();
        let cols: Vec<Vec<usize>> = (0..3usize.pow(q as u32))
            .map(|code| (0..q).map(|i| code / 3usize.pow(i as u32) % 3).collect())
            .collect();
        let mut states: BTreeSet<Vec<usize>> = BTreeSet::from([vec![0; q]]);
        for (j, &cj) in c.iter().enumerate() {
            let want = if j < fours { 4 } else { 2 };
            let mut next = BTreeSet::new();
            for s in &states {
                for col in &cols {
                    let total: usize = cj as usize + col.iter().sum::<usize>();
                    let ones = col.iter().filter(|&&x| x == 1).count();
                    if total != want || ones + (cj as usize) < 2 {
                        continue;
                    }
                    let t: Vec<usize> = s.iter().zip(col).map(|(x, y)| x + y).collect();
                    if t.iter().zip(a).all(|(x, y)| x <= y) {
                        next.insert(t);
                    }
                }
            }
            states = next;
        }
        states.contains(a)
    }

    #[test]
    fn matrix_examples() {
        let m = allocate_matrix(&[2], &[1, 1], 0);
        // a_1 = 2 < 31r/60 fails (iii) for r = 2? 31*2/60 ≈ 1.03, fine.
        assert_eq!(m.unwrap().rows, vec![vec![1, 1]]);
        let m = allocate_matrix(&[4, 4], &[0, 0, 0, 0], 0).unwrap();
        assert_eq!(m.rows, vec![vec![1, 1, 1, 1], vec![1, 1, 1, 1]]);
        // Every column at 4 forces sum a = 2r when c = 2.
        let m = allocate_matrix(&[2, 2], &[2, 2], 1);
        assert!(m.is_err() || allocation_holds(&[2, 2], &[2, 2], 1, &m.unwrap()));
        assert!(allocate_matrix(&[1], &[1, 1], 0).is_err());
    }

    fn feasible_input() -> impl Strategy<Value = (Vec<usize>, Vec<u8>, usize)> {
        (1usize..=3, 1usize..=40, any::<u64>()).prop_filter_map("infeasible draw", |(q, r, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hi = rng.gen_range(1u8..=2);
            let highs = rng.gen_range(0..=r);
            let c: Vec<u8> = (0..r).map(|j| if j < highs { hi } else { hi - 1 }).collect();
            let lo = (31 * r).div_ceil(60);
            let mut a: Vec<usize> = (0..q - 1).map(|_| rng.gen_range(lo..=r)).collect();
            let fours = rng.gen_range(0..r);
            let need = 2 * r + 2 * fours;
            let have: usize = a.iter().sum::<usize>() + c.iter().map(|&x| x as usize).sum::<usize>();
            let last = need.checked_sub(have)?;
            let top = if q == 3 { 31 * r / 30 } else { r };
            (last >= lo && last <= top).then(|| {
                a.push(last);
                (a, c, fours)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 2000, ..ProptestConfig::default() })]
        #[test]
        fn matrix_conditions((a, c, fours) in feasible_input()) {
            let m = allocate_matrix(&a, &c, fours).unwrap();
            prop_assert!(allocation_holds(&a, &c, fours, &m));
            if c.len() <= 6 {
                prop_assert!(feasible(&a, &c, fours));
            }
        }
    }

    // small(1, 20): A0={0}, B0={1}, A1={2..21}, B1={22..41}.
    #[test]
    fn noncritical_disjoint_edges() {
        let p = {
            let mut spec = small(1, 20).spec();
            spec.eps0 = crate::numeric::q(1, 5);
            Partition::new(42, spec).unwrap()
        };
        // 2γn disjoint crossing edges with γn = 4, γ' = 0.
        let h = Graph::new(42, (0..8).map(|t| (2 + t, 22 + t))).unwrap();
        let out = decompose_noncritical(&h, &p, 4, 0, 2, 1).unwrap();
        assert_eq!(out.f.len(), 4);
        assert!(out.f.iter().all(|f| f.edges().len() == 2 && verify_candidate(f, &p).passed()));
        let out = decompose_noncritical(&Graph::new(42, (0..10).map(|t| (2 + t, 22 + t))).unwrap(), &p, 4, 1, 2, 1).unwrap();
        assert_eq!(out.f_prime.len(), 1);
        assert_eq!(out.f_prime[0].edges().len(), 2);
    }

    #[test]
    fn noncritical_with_two_paths() {
        let p = {
            let mut spec = small(1, 20).spec();
            spec.eps0 = crate::numeric::q(1, 5);
            Partition::new(42, spec).unwrap()
        };
        // Exceptional vertex 0 (A0) sees 5 B-vertices: more than the cap of 3.
        let mut edges: Vec<Edge> = (22..27).map(|b| (0, b)).collect();
        edges.extend((0..9).map(|t| (2 + t, 32 + t)));
        let h = Graph::new(42, edges).unwrap();
        let out = decompose_noncritical(&h, &p, 5, 0, 2, 3).unwrap();
        let mut all: Vec<Edge> = out.f.iter().chain(&out.f_prime).flat_map(|f| f.edges().to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, h.edge_vec());
        for f in &out.f {
            assert!(verify_candidate(f, &p).passed(), "{f:?}");
        }
        assert!(out.f.iter().any(|f| f.edges().iter().filter(|e| e.0 == 0).count() == 2));
    }

    #[test]
    fn critical_template_pairs_matching_and_hub_edges() {
        // One exceptional hub 0 in A0 adjacent to B-vertices 22..27, plus a
        // perfect matching 2..7 - 28..33: every candidate is one of each.
        let p = {
            let mut spec = small(1, 20).spec();
            spec.eps0 = crate::numeric::q(1, 5);
            spec.b0 = vec![];
            spec.a0 = vec![0, 1];
            Partition::new(42, spec).unwrap()
        };
        let mut edges: Vec<Edge> = (22..28).map(|b| (0, b)).collect();
        edges.extend((0..6).map(|t| (2 + t, 28 + t)));
        let h = Graph::new(42, edges).unwrap();
        let out = decompose_critical(&h, &p, &[0], &[0], 6, 0, 1).unwrap();
        assert_eq!(out.f.len(), 6);
        for f in &out.f {
            assert!(verify_candidate(f, &p).passed());
            assert_eq!(f.edges().len(), 2);
            assert_eq!(f.edges().iter().filter(|e| e.0 == 0).count(), 1);
        }
        let mut all: Vec<Edge> = out.f.iter().flat_map(|f| f.edges().to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, h.edge_vec());
    }

    #[test]
    fn critical_rejects_overloaded_hub() {
        let p = {
            let mut spec = small(1, 20).spec();
            spec.eps0 = crate::numeric::q(1, 5);
            Partition::new(42, spec).unwrap()
        };
        let h = Graph::new(42, (22..34).map(|b| (0, b))).unwrap();
        assert!(matches!(decompose_critical(&h, &p, &[0], &[0], 6, 0, 1), Err(Error::Precondition(_))));
    }
}
