//! Exceptional covers, systems, candidates and schemes, with verifiers and
//! the faithful extension of a candidate to a system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_path_system, count_ab_paths_by, Edge, Graph, PathSystem, PathWitness};
use crate::numeric::{floor_sqrt_eps_n, qu, to_f64, Q};
use crate::partition::{Block, Partition};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "HES")]
    Hamilton,
    #[serde(rename = "MES")]
    Matching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CandidateKind {
    #[serde(rename = "HESC")]
    Hamilton,
    #[serde(rename = "MESC")]
    Matching,
}

impl CandidateKind {
    pub fn system_kind(self) -> SystemKind {
        match self {
            CandidateKind::Hamilton => SystemKind::Hamilton,
            CandidateKind::Matching => SystemKind::Matching,
        }
    }
}

/// A cell `(i, i')` of the cluster grid, 0-based.
pub type Locale = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalSystem {
    pub kind: SystemKind,
    pub locale: Option<Locale>,
    #[serde(flatten)]
    pub ps: PathSystem,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalCandidate {
    pub kind: CandidateKind,
    pub locale: Option<Locale>,
    #[serde(flatten)]
    pub ps: PathSystem,
}

impl ExceptionalCandidate {
    /// A candidate from an edge list; HESC when it has crossing edges.
    pub fn from_edges(edges: Vec<Edge>, p: &Partition, locale: Option<Locale>) -> Self {
        let kind = if edges.iter().any(|&(u, v)| p.is_crossing(u, v)) {
            CandidateKind::Hamilton
        } else {
            CandidateKind::Matching
        };
        ExceptionalCandidate {
            kind,
            locale,
            ps: PathSystem::from_parts(edges, Vec::new()),
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.ps.edges
    }

    pub fn crossing_edges(&self, p: &Partition) -> usize {
        crossing(&self.ps.edges, p)
    }

    /// Number of maximal paths joining A' to B'.
    pub fn b(&self, p: &Partition) -> usize {
        ab_paths(&self.ps.edges, p)
    }
}

impl ExceptionalSystem {
    pub fn edges(&self) -> &[Edge] {
        &self.ps.edges
    }

    pub fn crossing_edges(&self, p: &Partition) -> usize {
        crossing(&self.ps.edges, p)
    }

    pub fn ab_paths(&self, p: &Partition) -> usize {
        ab_paths(&self.ps.edges, p)
    }
}

fn crossing(edges: &[Edge], p: &Partition) -> usize {
    edges.iter().filter(|&&(u, v)| p.is_crossing(u, v)).count()
}

fn ab_paths(edges: &[Edge], p: &Partition) -> usize {
    count_ab_paths_by(edges, |v| (v < p.n()).then(|| p.side(v))).unwrap_or(0)
}

fn path_witness(w: &PathWitness) -> Vec<usize> {
    match w {
        PathWitness::Degree { vertex, .. } => vec![*vertex],
        PathWitness::Cycle { vertices } => vertices.clone(),
    }
}

fn out_of_range(ps: &PathSystem, p: &Partition) -> Option<usize> {
    ps.support().into_iter().find(|&v| v >= p.n())
}

/// Clauses EC1–EC3.
pub fn verify_cover(ps: &PathSystem, p: &Partition) -> Report {
    let mut r = Report::new("exceptional cover");
    if let Some(v) = out_of_range(ps, p) {
        r.check("EC1", false, format!("vertex {v} out of range")).witness(vec![v]);
        return r;
    }
    let support = ps.support();
    match ps.is_path_system() {
        Err(w) => {
            r.check("EC1", false, format!("not a path system: {w:?}"))
                .witness(path_witness(&w));
        }
        Ok(()) => {
            let missing: Vec<usize> = p.v0().into_iter().filter(|v| !support.contains(v)).collect();
            r.check("EC1", missing.is_empty(), "V0 contained in the support")
                .witness(missing);
        }
    }
    let deg = ps.degrees();
    let bad: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&v| {
            let d = deg.get(&v).copied().unwrap_or(0);
            if p.is_exceptional(v) { d != 2 } else { d > 1 }
        })
        .chain(p.v0().into_iter().filter(|v| !support.contains(v)))
        .collect();
    r.check("EC2", bad.is_empty(), "degree 2 on V0, at most 1 elsewhere")
        .witness(bad);
    let internal: Vec<usize> = ps
        .edges
        .iter()
        .find(|&&(u, v)| p.is_internal(u, v))
        .map(|&(u, v)| vec![u, v])
        .unwrap_or_default();
    r.check("EC3", internal.is_empty(), "no edges inside A or inside B")
        .witness(internal);
    r
}

fn check_locale(r: &mut Report, ps: &PathSystem, p: &Partition, locale: Option<Locale>) {
    if let Some((i, j)) = locale {
        if i >= p.k() || j >= p.k() {
            r.check("LOC", false, format!("locale ({i},{j}) out of range"));
            return;
        }
        let outside: Vec<usize> = ps
            .support()
            .into_iter()
            .filter(|&v| !p.in_locale(v, i, j))
            .collect();
        r.check("LOC", outside.is_empty(), format!("support inside V0 u A_{i} u B_{j}"))
            .witness(outside);
    }
}

/// Clauses ES1–ES3 plus localization when a locale is set.
pub fn verify_system(j: &ExceptionalSystem, p: &Partition) -> Report {
    let mut r = Report::new("exceptional system");
    let cover = verify_cover(&j.ps, p);
    let cover_ok = cover.passed();
    r.absorb("ES1/", cover);
    if !cover_ok {
        return r;
    }
    let paths = j.ab_paths(p);
    let cross = j.crossing_edges(p);
    match j.kind {
        SystemKind::Hamilton => {
            r.check(
                "ES2",
                paths > 0 && paths.is_multiple_of(2),
                format!("HES with {paths} AB-paths"),
            );
        }
        SystemKind::Matching => {
            r.check("ES2", cross == 0, format!("MES with {cross} crossing edges"));
        }
    }
    let bound = floor_sqrt_eps_n(p.eps0(), p.n());
    r.check("ES3", (paths as i64) <= bound, format!("{paths} AB-paths, bound {bound}"))
        .slack((bound - paths as i64) as f64);
    check_locale(&mut r, &j.ps, p, j.locale);
    r
}

/// Clauses ESC1–ESC4 plus localization when a locale is set.
pub fn verify_candidate(f: &ExceptionalCandidate, p: &Partition) -> Report {
    let mut r = Report::new("exceptional system candidate");
    if let Some(v) = out_of_range(&f.ps, p) {
        r.check("ESC1", false, format!("vertex {v} out of range")).witness(vec![v]);
        return r;
    }
    let is_path = check_path_system(&f.ps.edges);
    let internal = f.ps.edges.iter().find(|&&(u, v)| p.is_internal(u, v));
    match (&is_path, internal) {
        (Err(w), _) => {
            r.check("ESC1", false, format!("not a path system: {w:?}"))
                .witness(path_witness(w));
        }
        (Ok(()), Some(&(u, v))) => {
            r.check("ESC1", false, "edge inside A or inside B").witness(vec![u, v]);
        }
        (Ok(()), None) => {
            r.check("ESC1", true, "path system without A- or B-internal edges");
        }
    }
    let deg = f.ps.degrees();
    let mut bad: Vec<usize> = deg
        .iter()
        .filter(|&(&v, &d)| if p.is_exceptional(v) { d > 2 } else { d != 1 })
        .map(|(&v, _)| v)
        .collect();
    bad.extend(f.ps.isolated.iter().filter(|&&v| !p.is_exceptional(v)));
    r.check("ESC2", bad.is_empty(), "degree <= 2 on V0, exactly 1 elsewhere")
        .witness(bad);
    let cross = f.crossing_edges(p);
    // 2 e(A',B') <= sqrt(eps0) n, squared to stay exact.
    let lhs = qu(4 * cross * cross);
    let rhs = p.eps0() * qu(p.n()) * qu(p.n());
    let half_bound = floor_sqrt_eps_n(p.eps0(), p.n()) / 2;
    r.check("ESC3", lhs <= rhs, format!("{cross} crossing edges, bound sqrt(eps0) n / 2"))
        .slack(half_bound as f64 - cross as f64);
    if is_path.is_ok() {
        match f.kind {
            CandidateKind::Hamilton => {
                let b = f.b(p);
                r.check("ESC4", b > 0 && b.is_multiple_of(2), format!("HESC with b(F) = {b}"));
            }
            CandidateKind::Matching => {
                r.check("ESC4", cross == 0, format!("MESC with {cross} crossing edges"));
            }
        }
    }
    check_locale(&mut r, &f.ps, p, f.locale);
    r
}

fn in_cluster_a(p: &Partition, v: usize) -> Option<usize> {
    match p.block(v) {
        Block::A(i) => Some(i),
        _ => None,
    }
}

fn in_cluster_b(p: &Partition, v: usize) -> Option<usize> {
    match p.block(v) {
        Block::B(i) => Some(i),
        _ => None,
    }
}

/// Clauses ESch1–ESch5 of a (K, m, eps0, eps)-exceptional scheme on `g`.
pub fn verify_scheme(g: &Graph, p: &Partition, eps: Q) -> Report {
    let mut r = Report::new("exceptional scheme");
    let n = p.n();
    let k = p.k();
    r.check("ESch1", g.n() == n, "partition is a valid (K,m,eps0)-partition of V(G)");
    if g.n() != n {
        return r;
    }
    let internal = g.edges().find(|&(u, v)| p.is_internal(u, v));
    r.check("ESch2", internal.is_none(), "e(A) = e(B) = 0")
        .witness(internal.map(|(u, v)| vec![u, v]).unwrap_or_default());

    let limit = p.eps0() * qu(n);
    let mut worst3: Option<(usize, usize)> = None;
    let mut bad3 = Vec::new();
    for v in 0..n {
        let opposite = match p.block(v) {
            Block::A(_) => g.degree_where(v, |u| p.side(u) == crate::graph::Side::B),
            Block::B(_) => g.degree_where(v, |u| p.side(u) == crate::graph::Side::A),
            _ => continue,
        };
        if qu(opposite) >= limit {
            bad3.push(v);
        }
        if worst3.is_none_or(|(_, d)| opposite > d) {
            worst3 = Some((v, opposite));
        }
    }
    let max3 = worst3.map_or(0, |(_, d)| d);
    r.check(
        "ESch3",
        bad3.is_empty(),
        format!("max cross degree from A u B is {max3}, bound < eps0 n"),
    )
    .witness(bad3)
    .slack(to_f64(limit) - max3 as f64);

    // ESch4: |K d(v,A_i) - d(v,A)| <= eps n.
    let eps_n = eps * qu(n);
    let mut worst4 = 0usize;
    let mut bad4 = Vec::new();
    for v in 0..n {
        let mut per_a = vec![0usize; k];
        let mut per_b = vec![0usize; k];
        for &u in g.neighbors(v) {
            if let Some(i) = in_cluster_a(p, u) {
                per_a[i] += 1;
            } else if let Some(i) = in_cluster_b(p, u) {
                per_b[i] += 1;
            }
        }
        for per in [&per_a, &per_b] {
            let total: usize = per.iter().sum();
            let dev = per.iter().map(|&d| (k * d).abs_diff(total)).max().unwrap_or(0);
            worst4 = worst4.max(dev);
            if qu(dev) > eps_n && bad4.last() != Some(&v) {
                bad4.push(v);
            }
        }
    }
    r.check(
        "ESch4",
        bad4.is_empty(),
        format!("max |K d(v,X_i) - d(v,X)| = {worst4}, bound eps n"),
    )
    .witness(bad4)
    .slack(to_f64(eps_n) - worst4 as f64);

    // ESch5: exceptional-to-cluster and cluster-to-cluster counts.
    let mut a0_a = vec![0usize; k];
    let mut b0_a = vec![0usize; k];
    let mut a0_b = vec![0usize; k];
    let mut b0_b = vec![0usize; k];
    let mut cells = vec![vec![0usize; k]; k];
    for (u, v) in g.edges() {
        for (x, y) in [(u, v), (v, u)] {
            match (p.block(x), p.block(y)) {
                (Block::A0, Block::A(i)) => a0_a[i] += 1,
                (Block::B0, Block::A(i)) => b0_a[i] += 1,
                (Block::A0, Block::B(i)) => a0_b[i] += 1,
                (Block::B0, Block::B(i)) => b0_b[i] += 1,
                (Block::A(i), Block::B(j)) => cells[i][j] += 1,
                _ => {}
            }
        }
    }
    let mut ok5 = true;
    let mut worst5 = f64::INFINITY;
    let mut detail = Vec::new();
    let mut test = |name: &str, counts: &[usize], scale: usize| {
        let total: usize = counts.iter().sum();
        let tol = eps * qu(total.max(n));
        for (idx, &c) in counts.iter().enumerate() {
            let dev = (scale * c).abs_diff(total);
            let s = to_f64(tol) - dev as f64;
            worst5 = worst5.min(s);
            if qu(dev) > tol {
                ok5 = false;
                detail.push(format!("{name}[{idx}]={c}"));
            }
        }
    };
    test("e(A0,A_i)", &a0_a, k);
    test("e(B0,A_i)", &b0_a, k);
    test("e(A0,B_i)", &a0_b, k);
    test("e(B0,B_i)", &b0_b, k);
    let flat: Vec<usize> = cells.iter().flatten().copied().collect();
    test("e(A_i,B_j)", &flat, k * k);
    let msg = if detail.is_empty() {
        "all localization counts within bounds".to_string()
    } else {
        format!("out of bounds: {}", detail.join(", "))
    };
    r.check("ESch5", ok5, msg).slack(worst5);
    r
}

/// Advisory check of the extension hypotheses: |V0| <= eps0 n and every
/// exceptional vertex has at least sqrt(eps0) n neighbours in its own
/// side's clusters within `host`.
pub fn extension_hypotheses(host: &Graph, p: &Partition) -> Report {
    let mut r = Report::new("faithful extension hypotheses");
    r.advise("i", qu(p.v0_len()) <= p.eps0() * qu(p.n()), "|V0| <= eps0 n");
    let bound = floor_sqrt_eps_n(p.eps0(), p.n());
    let low: Vec<usize> = p
        .v0()
        .into_iter()
        .filter(|&v| {
            let own = p.side(v);
            let d = host.degree_where(v, |u| !p.is_exceptional(u) && p.side(u) == own);
            (d as i64) < bound
        })
        .collect();
    r.advise("ii", low.is_empty(), format!("own-side cluster degree >= {bound}"))
        .witness(low);
    r
}

/// Complete `f` to an exceptional system by adding A0A- and B0B-edges of
/// `host`. Exceptional vertices are processed in increasing order; each
/// takes its lowest-id own-side cluster neighbours not yet touched by the
/// partial system.
pub fn faithful_extend(f: &ExceptionalCandidate, host: &Graph, p: &Partition) -> Result<ExceptionalSystem> {
    faithful_extend_preferring(f, host, p, |_| false)
}

/// [`faithful_extend`], trying neighbours for which `prefer` holds first.
pub fn faithful_extend_preferring(
    f: &ExceptionalCandidate,
    host: &Graph,
    p: &Partition,
    prefer: impl Fn(usize) -> bool,
) -> Result<ExceptionalSystem> {
    let n = p.n();
    let mut deg = vec![0usize; n];
    for &(u, v) in &f.ps.edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut edges = f.ps.edges.clone();
    for v in p.v0() {
        let own = p.side(v);
        let mut order: Vec<usize> = host.neighbors(v).to_vec();
        order.sort_by_key(|&u| !prefer(u));
        for u in order {
            if deg[v] >= 2 {
                break;
            }
            if p.is_exceptional(u) || p.side(u) != own || deg[u] != 0 {
                continue;
            }
            edges.push(crate::graph::edge(u, v));
            deg[u] += 1;
            deg[v] += 1;
        }
        if deg[v] < 2 {
            return Err(Error::infeasible(
                "faithful_extend",
                "starvation",
                format!("exceptional vertex {v} reaches only degree {}", deg[v]),
            )
            .with_witness(vec![v]));
        }
    }
    Ok(ExceptionalSystem {
        kind: f.kind.system_kind(),
        locale: f.locale,
        ps: PathSystem::from_parts(edges, Vec::new()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::count_ab_paths;
    use crate::numeric::q;
    use crate::partition::tests::small;
    use proptest::prelude::*;

    // small(1, 4): A0={0}, B0={1}, A1={2,3,4,5}, B1={6,7,8,9}.
    fn sys(kind: SystemKind, edges: &[Edge]) -> ExceptionalSystem {
        ExceptionalSystem {
            kind,
            locale: None,
            ps: PathSystem::from_parts(edges.to_vec(), vec![]),
        }
    }

    fn cand(kind: CandidateKind, edges: &[Edge], isolated: &[usize]) -> ExceptionalCandidate {
        ExceptionalCandidate {
            kind,
            locale: None,
            ps: PathSystem::from_parts(edges.to_vec(), isolated.to_vec()),
        }
    }

    #[test]
    fn cover_examples() {
        let p = small(1, 4);
        let ok = PathSystem::from_parts(vec![(2, 0), (0, 3), (6, 1), (1, 7)], vec![]);
        assert!(verify_cover(&ok, &p).passed());
        let internal = PathSystem::from_parts(vec![(2, 0), (0, 3), (6, 1), (1, 7), (4, 5)], vec![]);
        let r = verify_cover(&internal, &p);
        assert!(!r.get("EC3").unwrap().pass);
        assert_eq!(r.get("EC3").unwrap().witness, vec![4, 5]);
        let low = PathSystem::from_parts(vec![(2, 0), (6, 1), (1, 7)], vec![]);
        let r = verify_cover(&low, &p);
        assert_eq!(r.first_failure().unwrap().clause, "EC2");
        assert_eq!(r.get("EC2").unwrap().witness, vec![0]);
    }

    #[test]
    fn system_examples() {
        let p = small(1, 4);
        // a2-a0-b6 and a3... : two AB-paths 2-0-6? 0 and 1 each of degree 2.
        let hes = sys(SystemKind::Hamilton, &[(2, 0), (0, 6), (3, 1), (1, 7)]);
        let r = verify_system(&hes, &p);
        assert!(r.passed(), "{r:?}");
        assert_eq!(hes.ab_paths(&p), 2);
        let one = sys(SystemKind::Hamilton, &[(2, 0), (0, 6), (7, 1), (1, 8)]);
        assert!(!verify_system(&one, &p).get("ES2").unwrap().pass);
        let mes = sys(SystemKind::Matching, &[(2, 0), (0, 3), (6, 1), (1, 7)]);
        assert!(verify_system(&mes, &p).passed());
        let mut loc = mes.clone();
        loc.locale = Some((0, 0));
        assert!(verify_system(&loc, &p).passed());
    }

    #[test]
    fn candidate_examples() {
        let p = small(1, 4);
        let two = cand(CandidateKind::Hamilton, &[(2, 6), (3, 7)], &[]);
        assert!(verify_candidate(&two, &p).passed());
        assert_eq!(two.b(&p), 2);
        let empty = cand(CandidateKind::Matching, &[], &[]);
        assert!(verify_candidate(&empty, &p).passed());
        let iso = cand(CandidateKind::Matching, &[], &[4]);
        assert!(!verify_candidate(&iso, &p).get("ESC2").unwrap().pass);
    }

    #[test]
    fn scheme_examples() {
        let p = small(2, 2);
        // Complete bipartite between A = {2..5} and B = {6..9}: uniform.
        let mut edges = Vec::new();
        for a in 2..6 {
            for b in 6..10 {
                edges.push((a, b));
            }
        }
        let g = Graph::new(10, edges.clone()).unwrap();
        let r = verify_scheme(&g, &p, q(1, 2));
        assert!(r.get("ESch5").unwrap().pass);
        assert!(r.get("ESch4").unwrap().pass);
        // Vertex 2 has 4 B-neighbours >= eps0 n = 5? no; shrink eps0.
        let mut spec = p.spec();
        spec.eps0 = q(1, 5);
        let tight = Partition::new(10, spec).unwrap();
        let r = verify_scheme(&g, &tight, q(1, 2));
        assert!(!r.get("ESch3").unwrap().pass);
        assert!(r.get("ESch3").unwrap().witness.contains(&2));
    }

    #[test]
    fn extend_examples() {
        let p = small(1, 12);
        // A0={0}, B0={1}, A1={2..13}, B1={14..25}
        let done = cand(CandidateKind::Hamilton, &[(0, 14), (0, 2), (1, 3), (1, 15)], &[]);
        let host = Graph::new(26, (4..14).map(|a| (0, a))).unwrap();
        let j = faithful_extend(&done, &host, &p).unwrap();
        assert_eq!(j.ps.edges, done.ps.edges);

        let f = cand(CandidateKind::Hamilton, &[(2, 14), (3, 15), (1, 16), (1, 17)], &[]);
        let j = faithful_extend(&f, &host, &p).unwrap();
        assert_eq!(j.edge_count_added(&f), 2);
        assert!(verify_system(&j, &p).passed());
        assert_eq!(j.ab_paths(&p), f.b(&p));

        let starving = Graph::new(26, [(0, 2), (0, 3)]).unwrap();
        let err = faithful_extend(&f, &starving, &p).unwrap_err();
        assert_eq!(err.failure().unwrap().witness, vec![0]);
    }

    impl ExceptionalSystem {
        fn edge_count_added(&self, f: &ExceptionalCandidate) -> usize {
            self.ps.edges.len() - f.ps.edges.len()
        }
    }

    /// Random localized candidate plus a host rich in A0A/B0B edges.
    fn random_case() -> impl Strategy<Value = (Vec<Edge>, Vec<Edge>)> {
        // small(1, 10): A0={0}, B0={1}, A1={2..11}, B1={12..21}
        let cross: Vec<Edge> = (2..12).flat_map(|a| (12..22).map(move |b| (a, b))).collect();
        let host: Vec<Edge> = (2..12).map(|a| (0, a)).chain((12..22).map(|b| (1, b))).collect();
        (
            proptest::sample::subsequence(cross, 0..8),
            proptest::sample::subsequence(host, 0..20),
        )
    }

    proptest! {
        #[test]
        fn extension_round_trip((cross, host) in random_case()) {
            let p = small(1, 10);
            // Keep a matching of crossing edges.
            let mut used = std::collections::BTreeSet::new();
            let mut edges = Vec::new();
            for (a, b) in cross {
                if used.insert(a) && used.insert(b) {
                    edges.push((a, b));
                } else {
                    used.remove(&a);
                }
            }
            let f = ExceptionalCandidate::from_edges(edges, &p, None);
            prop_assume!(verify_candidate(&f, &p).passed());
            let host = Graph::new(22, host).unwrap();
            match faithful_extend(&f, &host, &p) {
                Ok(j) => {
                    prop_assert!(verify_system(&j, &p).passed());
                    prop_assert_eq!(j.ab_paths(&p), f.b(&p));
                    let a: Vec<usize> = p.a_prime();
                    let b: Vec<usize> = p.b_prime();
                    prop_assert_eq!(count_ab_paths(&j.ps, &a, &b).unwrap(), f.b(&p));
                    for e in j.ps.edges.iter().filter(|e| !f.ps.edges.contains(e)) {
                        prop_assert!(p.is_exceptional_to_cluster(e.0, e.1));
                    }
                }
                Err(e) => prop_assert!(matches!(e, Error::Infeasible(_))),
            }
        }
    }
}
