//! Random slicing of G⋄ into per-cell pieces and the edge moves that
//! repair cell parities and sizes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, Side};
use crate::instance::SliceMode;
use crate::matchings::max_subgraph_capped_forced_even;
use crate::numeric::{floor, floor_sqrt_eps_n, qu, to_f64, Q};
use crate::partition::{Block, Partition};
use crate::report::Report;

/// A K×K grid of edge lists, indexed `cell(i, j) = i * K + j`.
#[derive(Clone, Debug, Serialize)]
pub struct Slices {
    pub k: usize,
    /// Exceptional-to-cluster parts H(i,i').
    pub h: Vec<Vec<Edge>>,
    /// Crossing parts H'(i,i') before moves, H''(i,i') after.
    pub cross: Vec<Vec<Edge>>,
    /// Edges added to or removed from each crossing part by moves.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub moved: Vec<usize>,
}

impl Slices {
    pub fn cells(&self) -> usize {
        self.k * self.k
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * self.k + j
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c / self.k, c % self.k)
    }

    pub fn h_graph(&self, n: usize, c: usize) -> Graph {
        Graph::from_valid_edges(n, self.h[c].iter().copied())
    }

    pub fn cross_graph(&self, n: usize, c: usize) -> Graph {
        Graph::from_valid_edges(n, self.cross[c].iter().copied())
    }
}

/// Whether the crossing edge `e` lies in G[A0 ∪ A_i, B0 ∪ B_j].
pub fn is_local(p: &Partition, (u, v): Edge, i: usize, j: usize) -> bool {
    p.in_locale(u, i, j) && p.in_locale(v, i, j)
}

fn cluster(b: Block) -> Option<usize> {
    match b {
        Block::A(i) | Block::B(i) => Some(i),
        _ => None,
    }
}

/// Split G⋄ into the grids H(i,i') and H'(i,i'). The only random choice for
/// an edge is its free cell coordinate; edges between A0 and B0 get a
/// random cell.
pub fn random_slice(g: &Graph, p: &Partition, seed: u64, mode: SliceMode) -> Result<Slices> {
    let k = p.k();
    if let Some((u, v)) = g.edges().find(|&(u, v)| {
        p.is_internal(u, v)
            || (p.block(u) == Block::A0 && p.block(v) == Block::A0)
            || (p.block(u) == Block::B0 && p.block(v) == Block::B0)
    }) {
        return Err(Error::Input(format!(
            "edge ({u},{v}) lies inside A0, B0, A or B; slicing needs G⋄"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = vec![Vec::new(); k * k];
    let mut cross = vec![Vec::new(); k * k];
    // Edges whose cell is fixed up to one coordinate, grouped by exceptional
    // endpoint and the fixed coordinate.
    let mut groups: std::collections::BTreeMap<(usize, bool, usize), Vec<Edge>> = Default::default();
    let mut exceptional_pairs: std::collections::BTreeMap<usize, Vec<Edge>> = Default::default();
    for (u, v) in g.edges() {
        let (bu, bv) = (p.block(u), p.block(v));
        match (bu.is_exceptional(), bv.is_exceptional()) {
            (false, false) => {
                let (a, b) = if bu.side() == Side::A { (bu, bv) } else { (bv, bu) };
                let c = cluster(a).unwrap() * k + cluster(b).unwrap();
                cross[c].push((u, v));
            }
            (true, true) => exceptional_pairs.entry(u.min(v)).or_default().push((u, v)),
            _ => {
                let (x, y) = if bu.is_exceptional() { (u, v) } else { (v, u) };
                // The fixed coordinate is the cluster of y; `row` says whether
                // it indexes rows (A-cluster) or columns (B-cluster).
                let row = p.side(y) == Side::A;
                groups.entry((x, row, cluster(p.block(y)).unwrap())).or_default().push((u, v));
            }
        }
    }
    for ((x, row, fixed), mut list) in groups {
        let free: Vec<usize> = match mode {
            SliceMode::Independent => (0..list.len()).map(|_| rng.gen_range(0..k)).collect(),
            SliceMode::Stratified => {
                list.shuffle(&mut rng);
                let offset = rng.gen_range(0..k);
                (0..list.len()).map(|t| (offset + t) % k).collect()
            }
        };
        for (e, f) in list.into_iter().zip(free) {
            let c = if row { fixed * k + f } else { f * k + fixed };
            let y = if e.0 == x { e.1 } else { e.0 };
            if p.side(x) == p.side(y) {
                h[c].push(e);
            } else {
                cross[c].push(e);
            }
        }
    }
    for (_, mut list) in exceptional_pairs {
        let cells: Vec<usize> = match mode {
            SliceMode::Independent => (0..list.len()).map(|_| rng.gen_range(0..k * k)).collect(),
            SliceMode::Stratified => {
                list.shuffle(&mut rng);
                let mut order: Vec<usize> = (0..k * k).collect();
                order.shuffle(&mut rng);
                (0..list.len()).map(|t| order[t % (k * k)]).collect()
            }
        };
        for (e, c) in list.into_iter().zip(cells) {
            cross[c].push(e);
        }
    }
    for list in h.iter_mut().chain(cross.iter_mut()) {
        list.sort_unstable();
    }
    Ok(Slices {
        k,
        h,
        cross,
        moved: Vec::new(),
    })
}

/// Per-cell degree tables of the exceptional vertices.
fn v0_degrees(lists: &[Vec<Edge>], v0: &[usize]) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|list| {
            v0.iter()
                .map(|&v| list.iter().filter(|&&(a, b)| a == v || b == v).count())
                .collect()
        })
        .collect()
}

fn crossing_degree(g: &Graph, p: &Partition, v: usize) -> usize {
    let s = p.side(v);
    g.degree_where(v, |u| p.side(u) != s)
}

/// Checks (a1)–(a5) of a raw slicing. (a1) and (a2) are exact; the
/// concentration clauses are advisory.
pub fn slice_report(g: &Graph, p: &Partition, s: &Slices, eps: Q) -> Report {
    let mut r = Report::new("random slice");
    let n = p.n();
    let k = p.k();
    let k2 = k * k;
    let mut a1 = true;
    let mut a2 = true;
    for c in 0..k2 {
        let (i, j) = s.coords(c);
        a1 &= s.h[c].iter().all(|&(u, v)| {
            p.is_exceptional_to_cluster(u, v) && is_local(p, (u, v), i, j)
        });
        a2 &= s.cross[c]
            .iter()
            .all(|&e| p.is_crossing(e.0, e.1) && is_local(p, e, i, j));
    }
    let total: usize = s.h.iter().chain(&s.cross).map(Vec::len).sum();
    r.check("a1", a1, "H(i,i') has only A0A_i- and B0B_i'-edges");
    r.check("a2", a2, "H'(i,i') inside G[A0 u A_i, B0 u B_i']");
    r.check("cover", total == g.edge_count(), "cells partition E(G)");

    let e_cross = g.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    let tol3 = qu(4) * eps * qu(n.max(e_cross));
    let dev3 = s.cross.iter().map(|c| (k2 * c.len()).abs_diff(e_cross)).max().unwrap_or(0);
    r.advise("a3", qu(dev3) <= tol3, format!("max |K^2 e(H') - e(A',B')| = {dev3}"))
        .slack(to_f64(tol3) - dev3 as f64);

    let v0 = p.v0();
    let cross_deg = v0_degrees(&s.cross, &v0);
    let full: Vec<Vec<Edge>> = (0..k2).map(|c| s.h[c].iter().chain(&s.cross[c]).copied().collect()).collect();
    let full_deg = v0_degrees(&full, &v0);
    let mut dev4 = 0;
    let mut dev5 = 0;
    for (t, &v) in v0.iter().enumerate() {
        let dc = crossing_degree(g, p, v);
        let d = g.degree(v);
        for c in 0..k2 {
            dev4 = dev4.max((k2 * cross_deg[c][t]).abs_diff(dc));
            dev5 = dev5.max((k2 * full_deg[c][t]).abs_diff(d));
        }
    }
    let tol4 = qu(2) * eps * qu(n);
    let tol5 = qu(4) * eps * qu(n);
    r.advise("a4", qu(dev4) <= tol4, format!("max |K^2 d_H'(v) - d_cross(v)| = {dev4}"))
        .slack(to_f64(tol4) - dev4 as f64);
    r.advise("a5", qu(dev5) <= tol5, format!("max |K^2 d_G(i,i')(v) - d(v)| = {dev5}"))
        .slack(to_f64(tol5) - dev5 as f64);
    r
}

/// Move one edge from cell `from` to cell `to`, choosing among the edges
/// allowed by `movable` one that stays local in `to` if possible and then
/// has the smallest endpoint degree in `to`.
fn move_one(
    s: &mut Slices,
    p: &Partition,
    from: usize,
    to: usize,
    movable: impl Fn(Edge) -> bool,
) -> Option<Edge> {
    let (ti, tj) = s.coords(to);
    let deg_in = |list: &[Edge], v: usize| list.iter().filter(|&&(a, b)| a == v || b == v).count();
    let target = &s.cross[to];
    let best = s.cross[from]
        .iter()
        .enumerate()
        .filter(|&(_, &e)| movable(e))
        .min_by_key(|&(_, &e)| {
            let load = deg_in(target, e.0).max(deg_in(target, e.1));
            (!is_local(p, e, ti, tj), load, e)
        })
        .map(|(idx, &e)| (idx, e))?;
    s.cross[from].remove(best.0);
    let pos = s.cross[to].binary_search(&best.1).unwrap_err();
    s.cross[to].insert(pos, best.1);
    s.moved[from] += 1;
    s.moved[to] += 1;
    Some(best.1)
}

/// αn = (D − φn)/(2K²) when that is a natural number.
pub fn alpha_n(d: usize, phi_n: usize, k: usize) -> Option<usize> {
    let budget = d.checked_sub(phi_n)?;
    (budget % (2 * k * k) == 0).then_some(budget / (2 * k * k))
}

/// Numeric parameters shared by the edge-moving steps.
#[derive(Clone, Copy, Debug)]
pub struct MoveParams {
    /// αn = (D − φn) / (2K²).
    pub alpha_n: usize,
    /// γn used by the extremal-subgraph clause (b6).
    pub gamma_n: usize,
    pub eps: Q,
    pub eps_prime: Q,
}

/// Repair every crossing part to an even size of at least 2αn by moving
/// whole crossing edges between cells.
pub fn move_for_parity(raw: &Slices, p: &Partition, params: MoveParams) -> Result<Slices> {
    const STAGE: &str = "move_for_parity";
    let k2 = raw.cells();
    let mut s = raw.clone();
    s.moved = vec![0; k2];
    let total: usize = s.cross.iter().map(Vec::len).sum();
    let floor_target = 2 * params.alpha_n;
    if !total.is_multiple_of(2) {
        return Err(Error::precondition(STAGE, "iv", format!("e(A',B') = {total} is odd")));
    }
    if total < k2 * floor_target {
        return Err(Error::precondition(
            STAGE,
            "ii",
            format!("e(A',B') = {total} < 2 K^2 alpha n = {}", k2 * floor_target),
        ));
    }
    // Targets: round each size down to even, lift to 2αn, then hand the
    // remaining surplus in pairs to the cells that had the most edges.
    let mut target: Vec<usize> = s.cross.iter().map(|c| (c.len() / 2 * 2).max(floor_target)).collect();
    let mut assigned: usize = target.iter().sum();
    let mut order: Vec<usize> = (0..k2).collect();
    if assigned < total {
        order.sort_by_key(|&c| (std::cmp::Reverse(s.cross[c].len() as isize - target[c] as isize), c));
        let mut t = 0;
        while assigned < total {
            target[order[t % k2]] += 2;
            assigned += 2;
            t += 1;
        }
    } else {
        order.sort_by_key(|&c| (std::cmp::Reverse(target[c] as isize - s.cross[c].len() as isize), c));
        let mut t = 0;
        while assigned > total {
            let c = order[t % k2];
            if target[c] >= floor_target + 2 {
                target[c] -= 2;
                assigned -= 2;
            }
            t += 1;
        }
    }
    let donors: Vec<usize> = (0..k2).filter(|&c| s.cross[c].len() > target[c]).collect();
    let receivers: Vec<usize> = (0..k2).filter(|&c| s.cross[c].len() < target[c]).collect();
    for &to in &receivers {
        while s.cross[to].len() < target[to] {
            let from = *donors
                .iter()
                .find(|&&d| s.cross[d].len() > target[d])
                .expect("targets sum to the total");
            move_one(&mut s, p, from, to, |_| true).expect("donor has edges");
        }
    }
    let limit = floor_sqrt_eps_n(params.eps, p.n()).max(0) as usize;
    if let Some(c) = (0..k2).find(|&c| s.moved[c] > limit) {
        let (i, j) = s.coords(c);
        return Err(Error::infeasible(
            STAGE,
            "moves",
            format!("cell ({i},{j}) needs {} moves, more than sqrt(eps) n = {limit}", s.moved[c]),
        ));
    }
    Ok(s)
}

/// Checks (b1)–(b6) of a parity-repaired slicing. Exact clauses are hard;
/// the concentration and extremal clauses are advisory.
pub fn move_report(g: &Graph, p: &Partition, s: &Slices, params: MoveParams) -> Report {
    let mut r = Report::new("move for parity");
    let n = p.n();
    common_b1_b2(&mut r, p, s, params.eps_prime * qu(n), "eps' n");
    let upper = qu(11) * p.eps0() * qu(n) * qu(n) / qu(10 * s.cells());
    let floor_target = 2 * params.alpha_n;
    let bad3: Vec<usize> = (0..s.cells())
        .filter(|&c| s.cross[c].len() % 2 == 1 || s.cross[c].len() < floor_target)
        .collect();
    r.check("b3", bad3.is_empty(), format!("every e(H'') even and >= 2 alpha n = {floor_target}"))
        .witness(bad3);
    let max_e = s.cross.iter().map(Vec::len).max().unwrap_or(0);
    r.advise("b3.upper", qu(max_e) <= upper, format!("max e(H'') = {max_e}, bound 11 eps0 n^2/(10K^2)"))
        .slack(to_f64(upper) - max_e as f64);
    let cap4 = qu(31 * params.alpha_n) / qu(30);
    let max_deg = (0..s.cells()).map(|c| s.cross_graph(n, c).max_degree()).max().unwrap_or(0);
    r.advise("b4", qu(max_deg) <= cap4, format!("max Δ(H'') = {max_deg}, bound 31 alpha n / 30"))
        .slack(to_f64(cap4) - max_deg as f64);
    b5_window(&mut r, g, p, s, |_| qu(2 * params.alpha_n), params.eps_prime * qu(n), "2 alpha n ± eps' n");
    let cap6 = floor(qu(3 * params.gamma_n) / qu(5)).max(0) as usize;
    let mut worst6 = usize::MAX;
    let mut bad6 = Vec::new();
    for c in 0..s.cells() {
        let h = s.cross_graph(n, c);
        let forced: Vec<Edge> = h.edges().filter(|&(u, v)| p.is_exceptional(u) && p.is_exceptional(v)).collect();
        let value = max_subgraph_capped_forced_even(&h, cap6, &forced)
            .ok()
            .flatten()
            .map_or(0, |x| x.edge_count());
        worst6 = worst6.min(value);
        if value < floor_target {
            bad6.push(c);
        }
    }
    r.advise("b6", bad6.is_empty(), format!("min extremal e(H~) = {worst6} under cap {cap6}"))
        .witness(bad6)
        .slack(worst6 as f64 - floor_target as f64);
    r
}

fn common_b1_b2(r: &mut Report, p: &Partition, s: &Slices, nonlocal_cap: Q, cap_name: &str) {
    let mut b1 = true;
    let mut b2 = true;
    let mut worst = 0;
    for c in 0..s.cells() {
        let (i, j) = s.coords(c);
        b1 &= s.h[c]
            .iter()
            .all(|&e| p.is_exceptional_to_cluster(e.0, e.1) && is_local(p, e, i, j));
        b2 &= s.cross[c].iter().all(|&(u, v)| p.is_crossing(u, v));
        let nonlocal = s.cross[c].iter().filter(|&&e| !is_local(p, e, i, j)).count();
        worst = worst.max(nonlocal);
    }
    r.check("b1", b1, "H(i,i') has only A0A_i- and B0B_i'-edges");
    r.check("b2", b2, "H''(i,i') inside G[A',B']");
    r.advise("b2.local", qu(worst) <= nonlocal_cap, format!("max non-local edges per cell {worst}, bound {cap_name}"))
        .slack(to_f64(nonlocal_cap) - worst as f64);
}

fn b5_window(
    r: &mut Report,
    g: &Graph,
    p: &Partition,
    s: &Slices,
    centre: impl Fn(usize) -> Q,
    tol: Q,
    what: &str,
) {
    let v0 = p.v0();
    let mut worst = 0f64;
    let mut bad = Vec::new();
    for c in 0..s.cells() {
        for &v in &v0 {
            let d = s.h[c].iter().chain(&s.cross[c]).filter(|&&(a, b)| a == v || b == v).count();
            let dev = num_traits::Signed::abs(&(qu(d) - centre(g.degree(v))));
            worst = worst.max(to_f64(dev));
            if dev > tol && !bad.contains(&v) {
                bad.push(v);
            }
        }
    }
    r.advise("b5", bad.is_empty(), format!("d_G'(i,i')(v) within {what}; worst deviation {worst}"))
        .witness(bad)
        .slack(to_f64(tol) - worst);
}

/// Per-cell edge targets: `e = 2K²b + 2q`; the `q` cells listed first in
/// `preference` get `2b + 2`, the rest `2b`.
pub fn cell_edge_targets(e: usize, cells: usize, preference: &[usize]) -> Vec<usize> {
    debug_assert!(e.is_multiple_of(2) && preference.len() == cells);
    let b = e / (2 * cells);
    let q = (e - 2 * cells * b) / 2;
    let mut t = vec![2 * b; cells];
    for &c in &preference[..q] {
        t[c] += 2;
    }
    t
}

/// Per-cell degree targets for one vertex with crossing degree `d`, given
/// edge targets from [`cell_edge_targets`]: every value is ⌊d/K²⌋ or
/// ⌈d/K²⌉, at most half the cell's edge target, and they sum to `d`.
/// Cells earlier in `preference` receive the larger value first.
pub fn cell_degree_targets(d: usize, edge_targets: &[usize], preference: &[usize]) -> Option<Vec<usize>> {
    let cells = edge_targets.len();
    let a = d / cells;
    let p = d - a * cells;
    let b = edge_targets.iter().copied().min()? / 2;
    let mut t = vec![a; cells];
    if a < b {
        for &c in &preference[..p] {
            t[c] += 1;
        }
    } else if a == b {
        let big: Vec<usize> = preference.iter().copied().filter(|&c| edge_targets[c] > 2 * b).collect();
        if big.len() < p {
            return None;
        }
        for &c in &big[..p] {
            t[c] += 1;
        }
    } else {
        return None;
    }
    Some(t)
}

/// Slicing with exact per-cell edge counts and exact per-cell degrees for
/// the (at most two) vertices of `w0`.
pub fn move_critical(raw: &Slices, p: &Partition, w0: &[usize]) -> Result<Slices> {
    const STAGE: &str = "move_critical";
    let k2 = raw.cells();
    let mut s = raw.clone();
    s.moved = vec![0; k2];
    let e: usize = s.cross.iter().map(Vec::len).sum();
    if w0.len() > 2 {
        return Err(Error::precondition(STAGE, "W0", format!("|W0| = {} > 2", w0.len())));
    }
    if !e.is_multiple_of(2) {
        return Err(Error::precondition(STAGE, "parity", format!("e(A',B') = {e} is odd")));
    }
    let deg_in = |list: &[Edge], v: usize| list.iter().filter(|&&(a, b)| a == v || b == v).count();
    let cross_deg: Vec<usize> = w0.iter().map(|&w| s.cross.iter().map(|c| deg_in(c, w)).sum()).collect();
    for (&w, &d) in w0.iter().zip(&cross_deg) {
        if d < k2 || 2 * d > e {
            return Err(Error::precondition(
                STAGE,
                "4.13",
                format!("d(w) = {d} outside [K^2, e/2] = [{k2}, {}]", e / 2),
            )
            .with_witness(vec![w]));
        }
    }
    let mut by_size: Vec<usize> = (0..k2).collect();
    by_size.sort_by_key(|&c| (std::cmp::Reverse(s.cross[c].len()), c));
    let edge_t = cell_edge_targets(e, k2, &by_size);
    let mut deg_t = Vec::new();
    for (&w, &d) in w0.iter().zip(&cross_deg) {
        let mut pref: Vec<usize> = (0..k2).collect();
        pref.sort_by_key(|&c| (std::cmp::Reverse(deg_in(&s.cross[c], w)), c));
        let t = cell_degree_targets(d, &edge_t, &pref).ok_or_else(|| {
            Error::Contract(format!("degree targets infeasible for w = {w} (d = {d}, e = {e})"))
        })?;
        deg_t.push(t);
    }
    let pair = (w0.len() == 2).then(|| crate::graph::edge(w0[0], w0[1]));
    for (t, &w) in w0.iter().enumerate() {
        let others: Vec<usize> = w0.iter().copied().filter(|&x| x != w).collect();
        while let Some(to) = (0..k2).find(|&c| deg_in(&s.cross[c], w) < deg_t[t][c]) {
            let from = (0..k2)
                .find(|&c| deg_in(&s.cross[c], w) > deg_t[t][c])
                .expect("degree targets sum to the degree");
            move_one(&mut s, p, from, to, |e| {
                (e.0 == w || e.1 == w) && Some(e) != pair && !others.contains(&e.0) && !others.contains(&e.1)
            })
            .ok_or_else(|| Error::infeasible(STAGE, "b6", format!("no movable edge at {w}")).with_witness(vec![w]))?;
        }
    }
    while let Some(to) = (0..k2).find(|&c| s.cross[c].len() < edge_t[c]) {
        let from = (0..k2).find(|&c| s.cross[c].len() > edge_t[c]).expect("edge targets sum to e");
        move_one(&mut s, p, from, to, |e| !w0.contains(&e.0) && !w0.contains(&e.1))
            .ok_or_else(|| Error::infeasible(STAGE, "b3", "no edge avoiding W0 left to move"))?;
    }
    Ok(s)
}

/// Checks (b1)–(b7) of a critical slicing.
pub fn move_critical_report(g: &Graph, p: &Partition, s: &Slices, w0: &[usize], eps: Q) -> Report {
    let mut r = Report::new("move critical");
    let n = p.n();
    let k2 = s.cells();
    common_b1_b2(&mut r, p, s, qu(20) * eps * qu(n) / qu(k2), "20 eps n / K^2");
    let e: usize = s.cross.iter().map(Vec::len).sum();
    let lo = 2 * (e / (2 * k2));
    let hi = 2 * e.div_ceil(2 * k2);
    let bad3: Vec<usize> = (0..k2).filter(|&c| s.cross[c].len() != lo && s.cross[c].len() != hi).collect();
    r.check("b3", bad3.is_empty(), format!("every e(H'') in {{{lo}, {hi}}}")).witness(bad3);
    let deg_in = |list: &[Edge], v: usize| list.iter().filter(|&&(a, b)| a == v || b == v).count();
    let v0 = p.v0();
    let mut worst4 = 0;
    for &v in &v0 {
        let d: usize = s.cross.iter().map(|c| deg_in(c, v)).sum();
        for c in &s.cross {
            worst4 = worst4.max((k2 * deg_in(c, v)).abs_diff(d));
        }
    }
    let tol = qu(25) * eps * qu(n);
    r.advise("b4", qu(worst4) <= tol, format!("max |K^2 d_H''(v) - d_cross(v)| = {worst4}"))
        .slack(to_f64(tol) - worst4 as f64);
    b5_window(&mut r, g, p, s, |d| qu(d) / qu(k2), tol / qu(k2), "(d(v) ± 25 eps n)/K^2");
    let mut ok6 = true;
    let mut ok7 = true;
    for &w in w0 {
        let d: usize = s.cross.iter().map(|c| deg_in(c, w)).sum();
        for c in &s.cross {
            let x = deg_in(c, w);
            ok6 &= x == d / k2 || x == d.div_ceil(k2);
            ok7 &= 2 * x <= c.len();
        }
    }
    r.check("b6", ok6, "W0 degrees are floor or ceil of d/K^2").witness(w0.to_vec());
    r.check("b7", ok7, "2 d_H''(w) <= e(H'') on W0").witness(w0.to_vec());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;
    use crate::partition::tests::small;
    use proptest::prelude::*;

    // small(2, 3): A0={0}, B0={1}, A_0={2,3,4}, A_1={5,6,7}, B_0={8,9,10}, B_1={11,12,13}
    fn diamond() -> Graph {
        let mut e = vec![(0, 1)];
        for a in 2..8 {
            e.push((0, a));
            e.push((a, 8 + (a - 2)));
            e.push((a, 1));
        }
        for b in 8..14 {
            e.push((1, b));
            e.push((0, b));
        }
        Graph::new(14, e).unwrap()
    }

    #[test]
    fn slice_is_exact_partition() {
        let p = small(2, 3);
        let g = diamond();
        for mode in [SliceMode::Stratified, SliceMode::Independent] {
            let s = random_slice(&g, &p, 7, mode).unwrap();
            let r = slice_report(&g, &p, &s, q(1, 2));
            assert!(r.passed(), "{r:?}");
            let again = random_slice(&g, &p, 7, mode).unwrap();
            assert_eq!(s.cross, again.cross);
        }
    }

    #[test]
    fn forced_locality_and_empty_h() {
        let p = small(2, 3);
        let g = Graph::new(14, [(2, 8), (3, 9), (4, 10)]).unwrap();
        let s = random_slice(&g, &p, 1, SliceMode::Stratified).unwrap();
        assert_eq!(s.cross[0].len(), 3);
        assert!(s.cross[1..].iter().all(Vec::is_empty));
        assert!(s.h.iter().all(Vec::is_empty));
    }

    #[test]
    fn rejects_internal_edges() {
        let p = small(2, 3);
        let g = Graph::new(14, [(2, 3)]).unwrap();
        assert!(random_slice(&g, &p, 1, SliceMode::Stratified).is_err());
    }

    fn grid(k: usize, cross: Vec<Vec<Edge>>) -> Slices {
        Slices {
            k,
            h: vec![Vec::new(); k * k],
            cross,
            moved: Vec::new(),
        }
    }

    #[test]
    fn parity_fixed_point_and_single_move() {
        let p = small(2, 3);
        let params = MoveParams {
            alpha_n: 1,
            gamma_n: 1,
            eps: q(1, 2),
            eps_prime: q(1, 2),
        };
        let even = grid(2, vec![vec![(2, 8), (3, 9)], vec![(2, 11), (3, 12)], vec![(5, 8), (6, 9)], vec![(5, 11), (6, 12)]]);
        let out = move_for_parity(&even, &p, params).unwrap();
        assert!(out.moved.iter().all(|&m| m == 0));
        let odd = grid(
            2,
            vec![vec![(2, 8), (3, 9), (4, 10)], vec![(2, 11), (3, 12), (4, 13)], vec![(5, 8), (6, 9)], vec![(5, 11), (6, 12)]],
        );
        let out = move_for_parity(&odd, &p, params).unwrap();
        assert_eq!(out.moved.iter().sum::<usize>(), 2);
        assert!(out.cross.iter().all(|c| c.len() % 2 == 0 && c.len() >= 2));
    }

    #[test]
    fn alpha_from_degree_budget() {
        assert_eq!(alpha_n(500, 100, 2), Some(50));
        assert_eq!(alpha_n(500, 101, 2), None);
        assert_eq!(alpha_n(10, 20, 1), None);
    }

    #[test]
    fn claim_examples() {
        let pref: Vec<usize> = (0..4).collect();
        let t = cell_edge_targets(16, 4, &pref);
        assert_eq!(t, vec![4, 4, 4, 4]);
        assert_eq!(cell_degree_targets(8, &t, &pref).unwrap(), vec![2, 2, 2, 2]);
        let t = cell_edge_targets(18, 4, &pref);
        assert_eq!(t, vec![6, 4, 4, 4]);
        let d = cell_degree_targets(8, &t, &pref).unwrap();
        assert_eq!(d, vec![2, 2, 2, 2]);
        assert!(d.iter().zip(&t).all(|(a, b)| 2 * a <= *b));
    }

    proptest! {
        #[test]
        fn claim_bullets(k in 1usize..5, b in 1usize..30, q in 0usize..25, a_raw in 1usize..30, p_raw in 0usize..25, seed in any::<u64>()) {
            let cells = k * k;
            let q = q % cells;
            let e = 2 * cells * b + 2 * q;
            let a = 1 + (a_raw - 1) % b;
            let p = p_raw % cells;
            let d = cells * a + p;
            prop_assume!(2 * d <= e);
            let mut pref: Vec<usize> = (0..cells).collect();
            pref.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let et = cell_edge_targets(e, cells, &pref);
            prop_assert_eq!(et.iter().sum::<usize>(), e);
            prop_assert!(et.iter().all(|&x| x == 2 * b || x == 2 * b + 2));
            let dt = cell_degree_targets(d, &et, &pref).unwrap();
            prop_assert_eq!(dt.iter().sum::<usize>(), d);
            for c in 0..cells {
                prop_assert!(dt[c] == d / cells || dt[c] == d.div_ceil(cells));
                prop_assert!(2 * dt[c] <= et[c]);
            }
        }
    }
}
