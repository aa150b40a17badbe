//! Criticality, extension of candidates into exceptional systems, and the
//! three end-to-end pipelines producing a [`Certificate`].

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{decompose_critical, decompose_noncritical, default_seed_count};
use crate::error::{Error, Failure, Result};
use crate::exceptional::{
    faithful_extend_preferring, verify_candidate, verify_scheme, ExceptionalCandidate, ExceptionalSystem, Locale,
};
use crate::graph::{edge, Edge, Graph, Side};
use crate::instance::{Instance, Params, Regime};
use crate::matchings::{balanced_matching_decomposition, max_subgraph_degree_capped, perfect_matching};
use crate::numeric::{floor, qu, serde_q, Q};
use crate::partition::Partition;
use crate::report::Report;
use crate::slicing::{
    alpha_n, is_local, move_critical, move_critical_report, move_for_parity, move_report, random_slice,
    slice_report, MoveParams, Slices,
};
use crate::verify::verify_certificate;

/// Criticality of a graph with respect to a bipartition A', B' and degree D.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalityReport {
    pub is_critical: bool,
    pub delta_cross: usize,
    /// floor(11D/40).
    pub cap: usize,
    /// Maximum number of crossing edges in a subgraph of maximum degree `cap`.
    pub capped_max_edges: usize,
    /// Vertices of crossing degree at least 11D/40.
    pub w: Vec<usize>,
    /// Shortest prefix of the degree order containing W and followed by a
    /// degree gap of at least D/240; only computed for critical graphs.
    pub w_prime: Option<Vec<usize>>,
    /// The four largest crossing degrees as (vertex, degree).
    pub top: Vec<(usize, usize)>,
    pub bounds: Report,
}

/// Vertices ordered by crossing degree, descending, ties towards lower ids.
pub fn crossing_order(cross: &Graph) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = (0..cross.n()).map(|v| (v, cross.degree(v))).collect();
    order.sort_by_key(|&(v, d)| (std::cmp::Reverse(d), v));
    order
}

/// Classify `g` against the bipartition `side` for degree `d`.
pub fn classify_criticality(g: &Graph, side: &[Side], d: usize) -> Result<CriticalityReport> {
    if side.len() != g.n() {
        return Err(Error::Input(format!("side labels for {} vertices, graph has {}", side.len(), g.n())));
    }
    let cross = g.filter_edges(|u, v| side[u] != side[v]);
    let dq = qu(d);
    let cap = floor(qu(11) * dq / qu(40)) as usize;
    let delta_cross = cross.max_degree();
    let capped_max_edges = max_subgraph_degree_capped(&cross, cap)?.edge_count();
    let is_critical = qu(40 * delta_cross) >= qu(11) * dq && qu(40 * capped_max_edges) <= qu(41) * dq;
    let order = crossing_order(&cross);
    let w: Vec<usize> = order.iter().take_while(|&&(_, dv)| 40 * dv >= 11 * d).map(|&(v, _)| v).collect();
    let w_prime = is_critical.then(|| {
        let high = order.iter().take_while(|&&(_, dv)| 80 * dv > 21 * d).count();
        (w.len().max(1)..=high.min(3)).find_map(|i| {
            let next = order.get(i).map_or(0, |&(_, dv)| dv);
            (240 * (order[i - 1].1 - next) >= d).then(|| order[..i].iter().map(|&(v, _)| v).collect::<Vec<_>>())
        })
    });
    let w_prime = w_prime.flatten();
    let mut bounds = Report::new("criticality bounds");
    if is_critical {
        let e = cross.edge_count();
        bounds.advise("i", (1..=3).contains(&w.len()), format!("|W| = {}", w.len()));
        let n = g.n();
        let ii = (n % 4 == 1 && 2 * d + 1 == n && w.len() == 1) || (n.is_multiple_of(4) && 2 * d + 2 == n);
        bounds.advise("ii", ii, format!("n = {n}, D = {d}"));
        bounds
            .advise("iii", qu(10 * e) <= qu(17) * dq + qu(50), format!("e(A',B') = {e} vs 17D/10 + 5"))
            .slack(1.7 * d as f64 + 5.0 - e as f64);
        let in_w: BTreeSet<usize> = w.iter().copied().collect();
        let rest = cross.edges().filter(|(a, b)| !in_w.contains(a) && !in_w.contains(b)).count();
        let bound = match w.len() {
            1 => qu(3) * dq / qu(4),
            2 => qu(19) * dq / qu(40),
            _ => dq / qu(5),
        } + qu(5);
        bounds.advise("iv", qu(rest) <= bound, format!("e_(G-W)(A',B') = {rest}"));
        bounds.advise("v", w_prime.is_some(), "a prefix W' with degree gap D/240 exists");
    }
    Ok(CriticalityReport {
        is_critical,
        delta_cross,
        cap,
        capped_max_edges,
        w,
        w_prime,
        top: order.into_iter().take(4).collect(),
        bounds,
    })
}

fn sides(p: &Partition) -> Vec<Side> {
    (0..p.n()).map(|v| p.side(v)).collect()
}

/// Systems built from candidates, with the part of the host left unused.
#[derive(Clone, Debug)]
pub struct Extended {
    pub systems: Vec<ExceptionalSystem>,
    pub leftover: Graph,
    pub hypotheses: Report,
}

fn check_candidates(fs: &[ExceptionalCandidate], p: &Partition, stage: &str) -> Result<()> {
    for (s, f) in fs.iter().enumerate() {
        let r = verify_candidate(f, p);
        if let Some(c) = r.first_failure() {
            return Err(Error::precondition(stage, "ii", format!("candidate {s}: {} {}", c.clause, c.detail))
                .with_witness(c.witness.clone()));
        }
    }
    Ok(())
}

fn check_exceptional_to_cluster(h: &Graph, p: &Partition, locale: Option<Locale>, stage: &str) -> Result<()> {
    let bad = h.edges().find(|&(u, v)| {
        !p.is_exceptional_to_cluster(u, v) || locale.is_some_and(|(i, j)| !is_local(p, (u, v), i, j))
    });
    match bad {
        Some((u, v)) => Err(Error::precondition(stage, "i", format!("edge ({u},{v}) is not an allowed A0A- or B0B-edge"))
            .with_witness(vec![u, v])),
        None => Ok(()),
    }
}

/// Extend each `(i,i')`-candidate in turn to an `(i,i')`-system using
/// edges of `h` not taken by earlier systems.
pub fn extend_localized(h: &Graph, fs: &[ExceptionalCandidate], p: &Partition, locale: Locale) -> Result<Extended> {
    extend_localized_preferring(h, fs, p, locale, &BTreeSet::new())
}

/// [`extend_localized`], spending edges to `prefer` first so that they stay
/// out of the leftover.
pub fn extend_localized_preferring(
    h: &Graph,
    fs: &[ExceptionalCandidate],
    p: &Partition,
    locale: Locale,
    prefer: &BTreeSet<usize>,
) -> Result<Extended> {
    const STAGE: &str = "extend_localized";
    check_exceptional_to_cluster(h, p, Some(locale), STAGE)?;
    let fs: Vec<ExceptionalCandidate> = fs
        .iter()
        .map(|f| ExceptionalCandidate {
            locale: Some(locale),
            ..f.clone()
        })
        .collect();
    check_candidates(&fs, p, STAGE)?;
    let mut hyp = Report::new("localized extension hypotheses");
    let need = 2 * fs.len() + crate::numeric::floor_sqrt_eps_n(p.eps0(), p.n()).max(0) as usize;
    let low: Vec<usize> = p
        .v0()
        .into_iter()
        .filter(|&v| h.degree(v) + fs.iter().map(|f| f.ps.degree(v)).sum::<usize>() < need)
        .collect();
    hyp.advise("iii", low.is_empty(), format!("d(v) >= 2 gamma n + sqrt(eps0) n = {need} on V0")).witness(low);
    let mut host = h.clone();
    let mut systems = Vec::with_capacity(fs.len());
    for (s, f) in fs.iter().enumerate() {
        let j = faithful_extend_preferring(f, &host, p, |u| prefer.contains(&u)).map_err(|err| match err {
            Error::Infeasible(mut fail) => {
                fail.stage = STAGE.into();
                fail.detail = format!("cell {locale:?}, candidate {s}: {}", fail.detail);
                Error::Infeasible(fail)
            }
            other => other,
        })?;
        let added: BTreeSet<Edge> = j.edges().iter().copied().filter(|e| !f.edges().contains(e)).collect();
        host = host.filter_edges(|u, v| !added.contains(&(u, v)));
        systems.push(j);
    }
    Ok(Extended {
        systems,
        leftover: host,
        hypotheses: hyp,
    })
}

/// Decompose `h + Σ F_s` into systems extending the `F_s`, assigning the
/// edges at each exceptional vertex by a perfect matching.
pub fn extend_global(h: &Graph, fs: &[ExceptionalCandidate], p: &Partition) -> Result<Extended> {
    const STAGE: &str = "extend_global";
    check_exceptional_to_cluster(h, p, None, STAGE)?;
    check_candidates(fs, p, STAGE)?;
    let l = fs.len();
    let mut hyp = Report::new("global extension hypotheses");
    let v0 = p.v0();
    let total_deg = |v: usize| h.degree(v) + fs.iter().map(|f| f.ps.degree(v)).sum::<usize>();
    let off: Vec<usize> = v0.iter().copied().filter(|&v| total_deg(v) != 2 * l).collect();
    if !off.is_empty() {
        return Err(Error::precondition(STAGE, "iv", format!("d(v) != 2L = {} on V0", 2 * l)).with_witness(off));
    }
    let irregular = fs
        .iter()
        .filter(|f| !(f.edges().is_empty() || f.crossing_edges(p) == 2 && f.edges().len() == 2))
        .count();
    hyp.advise("iii", true, format!("{irregular} of {l} candidates are neither empty nor a 2-matching"));
    let cap = qu(2) * p.eps0() * qu(p.n());
    let heavy: Vec<usize> = (0..p.n()).filter(|&v| !p.is_exceptional(v) && qu(total_deg(v)) > cap).collect();
    hyp.advise("v", heavy.is_empty(), "d(v) <= 2 eps0 n on A u B").witness(heavy);

    let mut extra: Vec<Vec<Edge>> = vec![Vec::new(); l];
    let mut touched: Vec<BTreeSet<usize>> = fs.iter().map(|f| f.ps.support()).collect();
    for (i, &vi) in v0.iter().enumerate() {
        let left: Vec<usize> = h.neighbors(vi).to_vec();
        let copies: Vec<usize> = (0..l).flat_map(|s| std::iter::repeat_n(s, 2 - fs[s].ps.degree(vi).min(2))).collect();
        debug_assert_eq!(left.len(), copies.len());
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|&v| (0..copies.len()).filter(|&t| !touched[copies[t]].contains(&v)).collect())
            .collect();
        let mate = perfect_matching(copies.len(), &adj).map_err(|violator| {
            Error::infeasible(STAGE, "Hall", format!("no perfect matching in Q_{i} for exceptional vertex {vi}"))
                .with_witness(violator.into_iter().map(|t| left[t]).collect())
        })?;
        for (idx, &t) in mate.iter().enumerate() {
            let s = copies[t];
            extra[s].push(edge(vi, left[idx]));
            touched[s].insert(left[idx]);
            touched[s].insert(vi);
        }
    }
    let systems = fs
        .iter()
        .zip(extra)
        .map(|(f, add)| ExceptionalSystem {
            kind: f.kind.system_kind(),
            locale: None,
            ps: crate::graph::PathSystem::from_parts(f.edges().iter().copied().chain(add).collect(), Vec::new()),
        })
        .collect();
    Ok(Extended {
        systems,
        leftover: Graph::empty(p.n()),
        hypotheses: hyp,
    })
}

/// Candidates of one cell after relabelling: the localized `f` slots and
/// the unlocalized `f_prime` slots, with a flag for the extra property the
/// pipeline tracks.
#[derive(Clone, Debug, Default)]
pub struct CellCandidates {
    pub f: Vec<(ExceptionalCandidate, bool)>,
    pub f_prime: Vec<(ExceptionalCandidate, bool)>,
}

/// One system of an assembled decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedSystem {
    #[serde(flatten)]
    pub system: ExceptionalSystem,
    /// Cell whose candidate the system extends.
    pub cell: Locale,
    /// Claimed to carry the tracked extra property.
    #[serde(default)]
    pub special: bool,
}

/// Extend every cell's localized candidates inside its H(i,i'), then
/// decompose the leftover together with all unlocalized candidates.
pub fn construct_all_systems(
    p: &Partition,
    h_cells: &[Graph],
    cells: &[CellCandidates],
) -> Result<(Vec<CertifiedSystem>, Report)> {
    let k = p.k();
    if h_cells.len() != k * k || cells.len() != k * k {
        return Err(Error::Input(format!("expected {} cells", k * k)));
    }
    // Vertices already on a global candidate cannot receive its extension
    // edges, so the localized stage uses them up first.
    let global_support: BTreeSet<usize> =
        cells.iter().flat_map(|c| &c.f_prime).flat_map(|(f, _)| f.ps.support()).collect();
    let local: Vec<Extended> = (0..k * k)
        .into_par_iter()
        .map(|c| {
            let fs: Vec<ExceptionalCandidate> = cells[c].f.iter().map(|(f, _)| f.clone()).collect();
            extend_localized_preferring(&h_cells[c], &fs, p, (c / k, c % k), &global_support)
        })
        .collect::<Result<_>>()?;
    let mut hyp = Report::new("construction hypotheses");
    let mut out = Vec::new();
    let mut leftover = Vec::new();
    for (c, ext) in local.into_iter().enumerate() {
        hyp.absorb(&format!("cell({},{})/", c / k, c % k), ext.hypotheses);
        leftover.extend(ext.leftover.edges());
        for (system, (_, special)) in ext.systems.into_iter().zip(&cells[c].f) {
            out.push(CertifiedSystem {
                system,
                cell: (c / k, c % k),
                special: *special,
            });
        }
    }
    let h0 = Graph::new(p.n(), leftover)?;
    let mut prov = Vec::new();
    let mut fs = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        for (f, special) in &cell.f_prime {
            prov.push(((c / k, c % k), *special));
            fs.push(ExceptionalCandidate {
                locale: None,
                ..f.clone()
            });
        }
    }
    let global = extend_global(&h0, &fs, p)?;
    hyp.absorb("global/", global.hypotheses);
    for (system, (cell, special)) in global.systems.into_iter().zip(prov) {
        out.push(CertifiedSystem { system, cell, special });
    }
    Ok((out, hyp))
}

/// Split a cell's candidates into `gamma_n` localized slots and the rest.
/// Localized candidates with the tracked property fill the first
/// `gamma_prime_n` slots when available.
pub fn relabel(
    cands: Vec<(ExceptionalCandidate, bool)>,
    p: &Partition,
    cell: Locale,
    gamma_n: usize,
    gamma_prime_n: usize,
) -> Result<CellCandidates> {
    let (i, j) = cell;
    let (mut local, nonlocal): (Vec<_>, Vec<_>) =
        cands.into_iter().partition(|(f, _)| f.edges().iter().all(|&e| is_local(p, e, i, j)));
    if local.len() < gamma_n {
        return Err(Error::infeasible(
            "relabel",
            "b",
            format!("cell ({i},{j}) has {} localized candidates, {gamma_n} needed", local.len()),
        ));
    }
    // Specials first up to gamma' n, then ordinary ones, then the remaining specials.
    let mut rank: Vec<usize> = Vec::with_capacity(local.len());
    let mut seen = 0;
    for (_, special) in &local {
        rank.push(if *special && seen < gamma_prime_n {
            seen += 1;
            0
        } else if *special {
            2
        } else {
            1
        });
    }
    let mut idx: Vec<usize> = (0..local.len()).collect();
    idx.sort_by_key(|&t| (rank[t], t));
    let mut slots: Vec<Option<(ExceptionalCandidate, bool)>> = local.drain(..).map(Some).collect();
    let ordered: Vec<(ExceptionalCandidate, bool)> = idx.into_iter().map(|t| slots[t].take().unwrap()).collect();
    let mut f = ordered;
    let surplus = f.split_off(gamma_n);
    for (cand, _) in f.iter_mut() {
        cand.locale = Some(cell);
    }
    let f_prime = surplus.into_iter().chain(nonlocal).map(|(mut c, s)| {
        c.locale = None;
        (c, s)
    });
    Ok(CellCandidates {
        f,
        f_prime: f_prime.collect(),
    })
}

/// Numeric parameters recorded in a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    #[serde(rename = "D")]
    pub d: usize,
    pub phi_n: usize,
    pub lambda_n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(with = "serde_q")]
    pub eps0: Q,
    #[serde(with = "serde_q")]
    pub eps: Q,
    #[serde(with = "serde_q")]
    pub eps_prime: Q,
    pub seed: u64,
    pub alpha_n: usize,
    pub gamma_n: usize,
    pub gamma_prime_n: usize,
}

/// Per-cell tally of localized systems.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub cell: Locale,
    pub localized: usize,
    pub target: usize,
    pub special: usize,
    pub special_target: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Few-edges regime: "spread" or "single-cell".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w_prime: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w0: Vec<usize>,
    /// Critical regime: the two vertices of largest crossing degree.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w12: Vec<usize>,
    /// Per-cell number of random-subset draws (non-critical regime).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moved: Vec<usize>,
    /// Advisory and exact stage reports in pipeline order.
    #[serde(default)]
    pub stages: Vec<Report>,
}

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: u32,
    pub instance_hash: String,
    pub regime: Regime,
    pub params: CertParams,
    pub systems: Vec<CertifiedSystem>,
    pub counts: Vec<CellCount>,
    #[serde(default)]
    pub flags: Vec<String>,
    pub provenance: Provenance,
    pub verification: Report,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Certificate = serde_json::from_str(text).map_err(|e| Error::Input(format!("certificate: {e}")))?;
        if c.schema != SCHEMA {
            return Err(Error::Input(format!("unsupported certificate schema {}", c.schema)));
        }
        Ok(c)
    }
}

/// Budget and split sizes shared by the pipelines.
#[derive(Clone, Copy, Debug)]
struct Budget {
    alpha_n: usize,
    gamma_n: usize,
    gamma_prime_n: usize,
}

fn fail_if(report: &Report, stage: &str) -> Result<()> {
    match report.to_failure(stage) {
        Some(f) => Err(Error::Precondition(Box::new(f))),
        None => Ok(()),
    }
}

/// Checks shared by all pipelines; returns G⋄ and the budget.
fn common_preconditions(inst: &Instance, params: &Params, stage: &str, pre: &mut Report) -> Result<(Graph, Budget)> {
    let g = &inst.graph;
    let p = &inst.partition;
    let k2 = p.k() * p.k();
    let irregular: Vec<usize> = (0..g.n()).filter(|&v| g.degree(v) != params.d).collect();
    pre.check("i", irregular.is_empty(), format!("G is {}-regular", params.d)).witness(irregular);
    let missing: Vec<usize> = g
        .edges()
        .filter(|&(u, v)| p.is_exceptional(u) && p.is_exceptional(v) && p.side(u) == p.side(v) && !inst.g0.has_edge(u, v))
        .flat_map(|(u, v)| [u, v])
        .collect();
    pre.check("iii.contains", missing.is_empty(), "G[A0] + G[B0] inside G0").witness(missing);
    let off: Vec<usize> = p.v0().into_iter().filter(|&v| inst.g0.degree(v) != params.phi_n).collect();
    pre.check("iii.degree", off.is_empty(), format!("d_G0(v) = phi n = {} on V0", params.phi_n)).witness(off);
    let diamond = inst.diamond();
    let e_cross = diamond.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    pre.check("iv", e_cross % 2 == 0, format!("e_(G-diamond)(A',B') = {e_cross} is even"));
    let a = alpha_n(params.d, params.phi_n, p.k());
    pre.check("div.alpha", a.is_some(), "(D - phi n) / (2K^2) is a natural number");
    pre.check("div.lambda", params.lambda_n.is_multiple_of(k2), "lambda n / K^2 is a natural number");
    let scheme = verify_scheme(&diamond, p, params.eps);
    let mut scheme_soft = scheme.clone();
    for c in scheme_soft.checks.iter_mut() {
        c.advisory = !matches!(c.clause.as_str(), "ESch1" | "ESch2");
    }
    pre.absorb("iv.scheme/", scheme_soft);
    pre.advise("ii.dense", qu(e_cross) <= p.eps0() * qu(p.n()) * qu(p.n()), "e(A',B') <= eps0 n^2");
    fail_if(pre, stage)?;
    let alpha_n = a.unwrap();
    let gamma_prime_n = params.lambda_n / k2;
    if gamma_prime_n >= alpha_n {
        return Err(Error::precondition(stage, "div.gamma", format!("lambda n / K^2 = {gamma_prime_n} >= alpha n = {alpha_n}")));
    }
    Ok((
        diamond,
        Budget {
            alpha_n,
            gamma_n: alpha_n - gamma_prime_n,
            gamma_prime_n,
        },
    ))
}

/// The preconditions every pipeline shares, collected into one report.
pub fn shared_preconditions(inst: &Instance, params: &Params) -> Report {
    let mut pre = Report::new("shared preconditions");
    if let Err(e) = common_preconditions(inst, params, "preconditions", &mut pre) {
        if let Some(f) = e.failure().filter(|_| pre.passed()) {
            pre.check(&f.clause, false, f.detail.clone());
        }
    }
    pre
}

fn cell_seed(seed: u64, c: usize) -> u64 {
    seed ^ ((c as u64 + 1).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

fn cert_params(inst: &Instance, params: &Params, b: Budget) -> CertParams {
    let p = &inst.partition;
    CertParams {
        d: params.d,
        phi_n: params.phi_n,
        lambda_n: params.lambda_n,
        k: p.k(),
        eps0: p.eps0(),
        eps: params.eps,
        eps_prime: params.eps_prime,
        seed: params.seed,
        alpha_n: b.alpha_n,
        gamma_n: b.gamma_n,
        gamma_prime_n: b.gamma_prime_n,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &Instance,
    params: &Params,
    regime: Regime,
    b: Budget,
    slices: &Slices,
    cells: Vec<CellCandidates>,
    mut provenance: Provenance,
) -> Result<Certificate> {
    let p = &inst.partition;
    let k = p.k();
    let h_cells: Vec<Graph> = (0..k * k).map(|c| slices.h_graph(p.n(), c)).collect();
    let (systems, hyp) = construct_all_systems(p, &h_cells, &cells)?;
    provenance.stages.push(hyp);
    provenance.moved = slices.moved.clone();
    let counts: Vec<CellCount> = (0..k * k)
        .map(|c| {
            let cell = (c / k, c % k);
            let here = systems.iter().filter(|s| s.system.locale == Some(cell));
            CellCount {
                cell,
                localized: here.clone().count(),
                target: b.gamma_n,
                special: here.filter(|s| s.special).count(),
                special_target: if regime == Regime::FewEdges { 0 } else { b.gamma_prime_n },
            }
        })
        .collect();
    let flags = counts
        .iter()
        .filter(|c| c.special < c.special_target)
        .map(|c| format!("cell {:?}: {} of {} tracked systems", c.cell, c.special, c.special_target))
        .collect();
    let mut cert = Certificate {
        schema: SCHEMA,
        instance_hash: inst.hash(),
        regime,
        params: cert_params(inst, params, b),
        systems,
        counts,
        flags,
        provenance,
        verification: Report::default(),
    };
    cert.verification = verify_certificate(inst, &cert);
    Ok(cert)
}

/// Turn a failing hard check of a stage report into an infeasibility.
fn stage_gate(report: &Report, stage: &str) -> Result<()> {
    match report.to_failure(stage) {
        Some(f) => Err(Error::Infeasible(Box::new(f))),
        None => Ok(()),
    }
}

fn cell_cross(slices: &Slices, n: usize) -> Vec<Graph> {
    (0..slices.cells()).map(|c| slices.cross_graph(n, c)).collect()
}

/// Decomposition of G⋄ when G has at least D crossing edges and is not critical.
pub fn pipeline_noncritical(inst: &Instance, params: &Params) -> Result<Certificate> {
    const STAGE: &str = "pipeline_noncritical";
    let g = &inst.graph;
    let p = &inst.partition;
    let n = p.n();
    let k2 = p.k() * p.k();
    let mut pre = Report::new("non-critical pipeline preconditions");
    let (diamond, b) = common_preconditions(inst, params, STAGE, &mut pre)?;
    let e_g = g.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    pre.check("ii.lower", e_g >= params.d, format!("e_G(A',B') = {e_g} >= D"));
    let crit = classify_criticality(g, &sides(p), params.d)?;
    pre.check("iii", !crit.is_critical, "G is not critical");
    pre.advise("ii.delta", 2 * crit.delta_cross <= params.d, "Delta(G[A',B']) <= D/2");
    let gamma1 = b.alpha_n.checked_sub(2 * b.gamma_prime_n).filter(|&x| x > 0);
    pre.check("div.gamma1", gamma1.is_some(), "alpha n > 2 lambda n / K^2");
    fail_if(&pre, STAGE)?;
    let gamma1 = gamma1.unwrap();
    let raw = random_slice(&diamond, p, params.seed, params.slice_mode)?;
    let sr = slice_report(&diamond, p, &raw, params.eps);
    stage_gate(&sr, "random_slice")?;
    let mp = MoveParams {
        alpha_n: b.alpha_n,
        gamma_n: gamma1,
        eps: params.eps,
        eps_prime: params.eps_prime,
    };
    let moved = move_for_parity(&raw, p, mp)?;
    let mr = move_report(&diamond, p, &moved, mp);
    stage_gate(&mr, "move_for_parity")?;
    let threshold = params.two_path_threshold.unwrap_or(2);
    let cross = cell_cross(&moved, n);
    let decomposed: Vec<_> = (0..k2)
        .into_par_iter()
        .map(|c| decompose_noncritical(&cross[c], p, gamma1, 2 * b.gamma_prime_n, threshold, cell_seed(params.seed, c)))
        .collect::<Result<_>>()?;
    let mut provenance = Provenance {
        stages: vec![pre, sr, mr],
        ..Provenance::default()
    };
    let mut cells = Vec::with_capacity(k2);
    for (c, out) in decomposed.into_iter().enumerate() {
        provenance.attempts.push(out.attempts);
        let mut cpre = out.preconditions;
        cpre.subject = format!("cell {:?}: {}", moved.coords(c), cpre.subject);
        provenance.stages.push(cpre);
        let list: Vec<(ExceptionalCandidate, bool)> = out
            .f
            .into_iter()
            .chain(out.f_prime)
            .map(|f| {
                let special = f.crossing_edges(p) == 2;
                (f, special)
            })
            .collect();
        verify_all(&list, p, moved.coords(c))?;
        cells.push(relabel(list, p, moved.coords(c), b.gamma_n, b.gamma_prime_n)?);
    }
    finish(inst, params, Regime::Noncritical, b, &moved, cells, provenance)
}

fn verify_all(list: &[(ExceptionalCandidate, bool)], p: &Partition, cell: Locale) -> Result<()> {
    for (s, (f, _)) in list.iter().enumerate() {
        let r = verify_candidate(f, p);
        if let Some(c) = r.first_failure() {
            return Err(Error::Infeasible(Box::new(
                Failure::new("candidates", &c.clause, format!("cell {cell:?}, candidate {s}: {}", c.detail))
                    .with_witness(c.witness.clone()),
            )));
        }
    }
    Ok(())
}

/// The two vertices of largest crossing degree, from `params` when given.
fn top_two(g: &Graph, p: &Partition, params: &Params) -> Result<(usize, usize)> {
    let cross = g.filter_edges(|u, v| p.is_crossing(u, v));
    let order = crossing_order(&cross);
    let w1 = params.w1.unwrap_or(order[0].0);
    let w2 = params.w2.unwrap_or_else(|| order.iter().map(|&(v, _)| v).find(|&v| v != w1).unwrap_or(w1));
    let third = order.iter().map(|&(_, d)| d).nth(2).unwrap_or(0);
    let ok = w1 != w2 && cross.degree(w1) >= cross.degree(w2) && cross.degree(w2) >= third
        && order.iter().all(|&(v, d)| v == w1 || v == w2 || d <= cross.degree(w2));
    if !ok {
        return Err(Error::precondition("pipeline_critical", "v", format!("w1 = {w1}, w2 = {w2} are not the two largest crossing degrees")));
    }
    Ok((w1, w2))
}

/// Decomposition of G⋄ when G is critical with at least D crossing edges.
pub fn pipeline_critical(inst: &Instance, params: &Params) -> Result<Certificate> {
    const STAGE: &str = "pipeline_critical";
    let g = &inst.graph;
    let p = &inst.partition;
    let n = p.n();
    let k2 = p.k() * p.k();
    let mut pre = Report::new("critical pipeline preconditions");
    let (diamond, b) = common_preconditions(inst, params, STAGE, &mut pre)?;
    let e_g = g.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    pre.check("ii.lower", e_g >= params.d, format!("e_G(A',B') = {e_g} >= D"));
    let crit = classify_criticality(g, &sides(p), params.d)?;
    pre.check("ii.critical", crit.is_critical, "G is critical");
    pre.advise("ii.delta", 2 * crit.delta_cross <= params.d, "Delta(G[A',B']) <= D/2");
    let g0_cross = inst.g0.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    pre.check("iii.cross", g0_cross <= params.phi_n, format!("e_G0(A',B') = {g0_cross} <= phi n"));
    pre.absorb("critical/", crit.bounds.clone());
    pre.check("W'", crit.w_prime.is_some(), "a set W' with the degree gap exists");
    fail_if(&pre, STAGE)?;
    let w_prime = crit.w_prime.clone().unwrap();
    let (w1, w2) = top_two(g, p, params)?;
    let cross_diamond = diamond.filter_edges(|u, v| p.is_crossing(u, v));
    let budget = params.d - params.phi_n;
    let heavy: Vec<usize> = [w1, w2].into_iter().filter(|&w| 2 * cross_diamond.degree(w) > budget).collect();
    if !heavy.is_empty() {
        return Err(Error::precondition(STAGE, "v", "d_(G-diamond)[A',B'](w) <= (D - phi n)/2").with_witness(heavy));
    }
    let w0: Vec<usize> = w_prime.iter().copied().filter(|&w| w == w1 || w == w2).collect();
    if !w_prime.starts_with(&w0) {
        return Err(Error::precondition(STAGE, "v", "W' must list the vertices of W0 first"));
    }
    let raw = random_slice(&diamond, p, params.seed, params.slice_mode)?;
    let sr = slice_report(&diamond, p, &raw, params.eps);
    stage_gate(&sr, "random_slice")?;
    let moved = move_critical(&raw, p, &w0)?;
    let mr = move_critical_report(&diamond, p, &moved, &w0, params.eps);
    stage_gate(&mr, "move_critical")?;
    let cross = cell_cross(&moved, n);
    let decomposed: Vec<_> = (0..k2)
        .into_par_iter()
        .map(|c| {
            let h = &cross[c];
            let e = h.edge_count();
            let fours = (e - 2 * b.alpha_n.min(e / 2)) / 2;
            let e_w = h.edges().filter(|(u, v)| w_prime.contains(u) && w_prime.contains(v)).count();
            let seeds = params
                .critical_seeds
                .unwrap_or_else(|| default_seed_count(b.alpha_n, b.gamma_prime_n, e_w))
                .max(e_w);
            decompose_critical(h, p, &w_prime, &w0, b.alpha_n, fours, seeds)
        })
        .collect::<Result<_>>()?;
    let mut provenance = Provenance {
        w_prime: w_prime.clone(),
        w0: w0.clone(),
        w12: vec![w1, w2],
        stages: vec![pre, sr, mr],
        ..Provenance::default()
    };
    let mut cells = Vec::with_capacity(k2);
    for (c, out) in decomposed.into_iter().enumerate() {
        let mut cpre = out.preconditions;
        cpre.subject = format!("cell {:?}: {}", moved.coords(c), cpre.subject);
        provenance.stages.push(cpre);
        let list: Vec<(ExceptionalCandidate, bool)> = out
            .f
            .into_iter()
            .map(|f| {
                let special = f.edges().len() == 2 && w0.iter().all(|&w| f.ps.degree(w) == 1);
                (f, special)
            })
            .collect();
        verify_all(&list, p, moved.coords(c))?;
        cells.push(relabel(list, p, moved.coords(c), b.gamma_n, b.gamma_prime_n)?);
    }
    finish(inst, params, Regime::Critical, b, &moved, cells, provenance)
}

/// Decomposition of G⋄ when G has fewer than D crossing edges.
pub fn pipeline_few_edges(inst: &Instance, params: &Params) -> Result<Certificate> {
    const STAGE: &str = "pipeline_few_edges";
    let g = &inst.graph;
    let p = &inst.partition;
    let n = p.n();
    let k = p.k();
    let k2 = k * k;
    let mut pre = Report::new("few-edges pipeline preconditions");
    pre.check("i.D", 2 * params.d + 2 == n && n.is_multiple_of(4), format!("D = n/2 - 1 with 4 | n (n = {n}, D = {})", params.d));
    let a_size = p.a_prime().len();
    pre.check("ii.sides", 2 * a_size == n, format!("|A'| = {a_size} = n/2"));
    let (diamond, b) = common_preconditions(inst, params, STAGE, &mut pre)?;
    let cross_g = g.filter_edges(|u, v| p.is_crossing(u, v));
    pre.check("ii.delta", 4 * cross_g.max_degree() <= n, format!("Delta(G[A',B']) = {} <= n/4", cross_g.max_degree()));
    let cross = diamond.filter_edges(|u, v| p.is_crossing(u, v));
    let e = cross.edge_count();
    pre.check(
        "v",
        2 * cross.max_degree() <= e && e <= params.d - params.phi_n,
        format!("Delta = {}, e = {e}, (D - phi n) = {}", cross.max_degree(), params.d - params.phi_n),
    );
    fail_if(&pre, STAGE)?;
    let raw = random_slice(&diamond, p, params.seed, params.slice_mode)?;
    let sr = slice_report(&diamond, p, &raw, params.eps);
    stage_gate(&sr, "random_slice")?;
    let spread = qu(e) > qu(300) * params.eps * qu(n);
    let (slices, w0, mr) = if spread {
        let w0: Vec<usize> = (0..n).filter(|&v| 8 * cross.degree(v) >= 3 * e).collect();
        let moved = move_critical(&raw, p, &w0)?;
        let mr = move_critical_report(&diamond, p, &moved, &w0, params.eps);
        stage_gate(&mr, "move_critical")?;
        (moved, w0, Some(mr))
    } else {
        let mut one = raw.clone();
        let all: Vec<Edge> = {
            let mut v: Vec<Edge> = one.cross.iter_mut().flat_map(std::mem::take).collect();
            v.sort_unstable();
            v
        };
        one.cross[0] = all;
        (one, Vec::new(), None)
    };
    let cross_cells = cell_cross(&slices, n);
    let mut provenance = Provenance {
        branch: Some(if spread { "spread" } else { "single-cell" }.into()),
        w0,
        stages: [Some(pre), Some(sr), mr].into_iter().flatten().collect(),
        ..Provenance::default()
    };
    let mut cells = Vec::with_capacity(k2);
    for (c, h) in cross_cells.iter().enumerate() {
        let e_c = h.edge_count();
        if e_c % 2 != 0 || e_c > 2 * b.alpha_n || 2 * h.max_degree() > e_c {
            return Err(Error::infeasible(
                STAGE,
                "b'",
                format!("cell {:?}: e = {e_c}, Delta = {}, alpha n = {}", slices.coords(c), h.max_degree(), b.alpha_n),
            ));
        }
        let ms = if e_c == 0 { Vec::new() } else { balanced_matching_decomposition(h, e_c / 2)? };
        let mut list: Vec<(ExceptionalCandidate, bool)> =
            ms.into_iter().map(|m| (ExceptionalCandidate::from_edges(m, p, None), false)).collect();
        list.extend((list.len()..b.alpha_n).map(|_| (ExceptionalCandidate::from_edges(Vec::new(), p, None), false)));
        verify_all(&list, p, slices.coords(c))?;
        cells.push(relabel(list, p, slices.coords(c), b.gamma_n, 0)?);
    }
    provenance.stages.push({
        let mut r = Report::new("few-edges padding");
        r.check("padding", true, format!("each cell padded to alpha n = {} candidates", b.alpha_n));
        r
    });
    finish(inst, params, Regime::FewEdges, b, &slices, cells, provenance)
}

/// Pick the regime by the crossing edge count and criticality.
pub fn detect_regime(inst: &Instance, d: usize) -> Result<Regime> {
    let p = &inst.partition;
    let e = inst.graph.edges().filter(|&(u, v)| p.is_crossing(u, v)).count();
    if e < d {
        return Ok(Regime::FewEdges);
    }
    let crit = classify_criticality(&inst.graph, &sides(p), d)?;
    Ok(if crit.is_critical { Regime::Critical } else { Regime::Noncritical })
}

/// Run the pipeline for `regime`, or the detected one.
pub fn run_pipeline(inst: &Instance, params: &Params, regime: Option<Regime>) -> Result<Certificate> {
    let regime = match regime {
        Some(r) => r,
        None => detect_regime(inst, params.d)?,
    };
    tracing::info!(%regime, n = inst.graph.n(), "running pipeline");
    match regime {
        Regime::Noncritical => pipeline_noncritical(inst, params),
        Regime::Critical => pipeline_critical(inst, params),
        Regime::FewEdges => pipeline_few_edges(inst, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exceptional::{verify_system, CandidateKind, SystemKind};
    use crate::partition::tests::small;

    /// The critical template: cliques A and B of size 2k, a hub adjacent to
    /// k vertices on each side, and a perfect matching between the vertices
    /// of A and B the hub misses. Vertex 0 is the hub.
    pub(crate) fn g_crit(k: usize) -> (Graph, Vec<Side>) {
        let n = 4 * k + 1;
        let a: Vec<usize> = (1..=2 * k).collect();
        let b: Vec<usize> = (2 * k + 1..=4 * k).collect();
        let mut edges = Vec::new();
        for side in [&a, &b] {
            for x in 0..side.len() {
                for y in x + 1..side.len() {
                    edges.push((side[x], side[y]));
                }
            }
            edges.extend(side[..k].iter().map(|&v| (0, v)));
        }
        edges.extend((k..2 * k).map(|t| (a[t], b[t])));
        let mut side = vec![Side::A; n];
        for &v in &b {
            side[v] = Side::B;
        }
        (Graph::new(n, edges).unwrap(), side)
    }

    #[test]
    fn g_crit_is_critical_with_hub() {
        let (g, side) = g_crit(2);
        assert!((0..9).all(|v| g.degree(v) == 4));
        let r = classify_criticality(&g, &side, 4).unwrap();
        assert!(r.is_critical);
        assert_eq!(r.delta_cross, 2);
        assert_eq!(r.cap, 1);
        assert_eq!(r.capped_max_edges, 3);
        assert_eq!(r.w, vec![0]);
    }

    #[test]
    fn complete_bipartite_is_not_critical() {
        let n = 40;
        let edges = (0..20).flat_map(|a| (20..40).map(move |b| (a, b)));
        let g = Graph::new(n, edges).unwrap();
        let side: Vec<Side> = (0..n).map(|v| if v < 20 { Side::A } else { Side::B }).collect();
        let r = classify_criticality(&g, &side, 20).unwrap();
        assert_eq!(r.cap, 5);
        assert_eq!(r.capped_max_edges, 100);
        assert!(!r.is_critical);
        let r = classify_criticality(&g, &side, 20).unwrap();
        assert!(r.w_prime.is_none());
    }

    #[test]
    fn no_crossing_edges_is_not_critical() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let side = vec![Side::A, Side::A, Side::B, Side::B];
        assert!(!classify_criticality(&g, &side, 1).unwrap().is_critical);
    }

    // small(1, 6): A0={0}, B0={1}, A1={2..7}, B1={8..13}.
    #[test]
    fn localized_extension_of_empty_candidates() {
        let p = small(1, 6);
        assert!(extend_localized(&Graph::empty(14), &[], &p, (0, 0)).unwrap().systems.is_empty());
        let h = Graph::new(14, [(0, 2), (0, 3), (0, 4), (0, 5), (1, 8), (1, 9), (1, 10), (1, 11)]).unwrap();
        let empty = ExceptionalCandidate::from_edges(vec![], &p, None);
        let out = extend_localized(&h, &[empty.clone(), empty], &p, (0, 0)).unwrap();
        assert_eq!(out.systems.len(), 2);
        assert_eq!(out.leftover.edge_count(), 0);
        for j in &out.systems {
            assert_eq!(j.kind, SystemKind::Matching);
            assert!(verify_system(j, &p).passed());
        }
    }

    #[test]
    fn full_candidate_is_its_own_extension() {
        let p = small(1, 6);
        let f = ExceptionalCandidate::from_edges(vec![(0, 3), (0, 8), (1, 2), (1, 9)], &p, None);
        assert_eq!(f.kind, CandidateKind::Hamilton);
        let h = Graph::new(14, [(0, 4)]).unwrap();
        let out = extend_localized(&h, std::slice::from_ref(&f), &p, (0, 0)).unwrap();
        assert_eq!(out.systems[0].edges(), f.edges());
        assert_eq!(out.leftover, h);
    }

    #[test]
    fn global_extension_single_vertex() {
        // Only A0 = {0}; F_1 empty and two edges at 0.
        let mut spec = small(1, 6).spec();
        spec.b0 = vec![];
        spec.a0 = vec![0, 1];
        let p = Partition::new(14, spec).unwrap();
        let f = ExceptionalCandidate::from_edges(vec![(0, 8), (1, 9)], &p, None);
        let h = Graph::new(14, [(0, 2), (1, 3)]).unwrap();
        let out = extend_global(&h, &[f], &p).unwrap();
        assert_eq!(out.systems[0].edges(), &[(0, 2), (0, 8), (1, 3), (1, 9)]);
        assert!(verify_system(&out.systems[0], &p).passed());
        assert!(matches!(extend_global(&Graph::new(14, [(0, 2)]).unwrap(), &[], &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn global_extension_full_candidates_need_empty_host() {
        let p = small(1, 6);
        let f = ExceptionalCandidate::from_edges(vec![(0, 3), (0, 8), (1, 2), (1, 9)], &p, None);
        let out = extend_global(&Graph::empty(14), std::slice::from_ref(&f), &p).unwrap();
        assert_eq!(out.systems[0].edges(), f.edges());
    }

    #[test]
    fn relabel_puts_local_specials_first() {
        let p = small(2, 3);
        // A1 = {2,3,4}, A2 = {5,6,7}, B1 = {8,9,10}, B2 = {11,12,13}.
        let local2 = ExceptionalCandidate::from_edges(vec![(2, 8), (3, 9)], &p, None);
        let local4 = ExceptionalCandidate::from_edges(vec![(2, 8), (3, 9), (4, 10), (0, 1)], &p, None);
        let far = ExceptionalCandidate::from_edges(vec![(2, 11), (3, 9)], &p, None);
        let out = relabel(
            vec![(local4.clone(), false), (far.clone(), true), (local2.clone(), true)],
            &p,
            (0, 0),
            2,
            1,
        )
        .unwrap();
        assert_eq!(out.f[0].0.edges(), local2.edges());
        assert_eq!(out.f[0].0.locale, Some((0, 0)));
        assert_eq!(out.f_prime.len(), 1);
        assert!(relabel(vec![(far, false)], &p, (0, 0), 1, 0).is_err());
    }
}
