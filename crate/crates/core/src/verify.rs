//! Independent re-verification of a certificate against its instance.

use std::collections::{BTreeMap, BTreeSet};

use crate::assembly::{Certificate, CertifiedSystem, SCHEMA};
use crate::exceptional::{verify_system, SystemKind};
use crate::graph::{Edge, Graph};
use crate::instance::{Instance, Regime};
use crate::partition::Partition;
use crate::report::Report;
use crate::slicing::alpha_n;

fn crossing_degree(edges: &[Edge], p: &Partition, v: usize) -> usize {
    edges.iter().filter(|&&(a, b)| (a == v || b == v) && p.is_crossing(a, b)).count()
}

/// Vertices among the two largest crossing degrees of `g` with crossing
/// degree at least 11D/40. Uses the recorded pair when it is a valid
/// choice of the two largest.
fn tracked_vertices(g: &Graph, p: &Partition, d: usize, recorded: &[usize]) -> Vec<usize> {
    let cross = g.filter_edges(|u, v| p.is_crossing(u, v));
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(cross.degree(v)), v));
    let pair: Vec<usize> = match recorded {
        [a, b] if a != b && {
            let third = order.iter().filter(|v| *v != a && *v != b).map(|&v| cross.degree(v)).max().unwrap_or(0);
            cross.degree(*a).min(cross.degree(*b)) >= third
        } =>
        {
            vec![*a, *b]
        }
        _ => order.iter().take(2).copied().collect(),
    };
    pair.into_iter().filter(|&w| 40 * cross.degree(w) >= 11 * d).collect()
}

fn has_property(s: &CertifiedSystem, p: &Partition, regime: Regime, tracked: &[usize]) -> bool {
    let edges = s.system.edges();
    let two = edges.iter().filter(|&&(u, v)| p.is_crossing(u, v)).count() == 2;
    match regime {
        Regime::Noncritical => two,
        Regime::Critical => two && tracked.iter().all(|&w| crossing_degree(edges, p, w) == 1),
        Regime::FewEdges => false,
    }
}

/// Re-check a certificate from scratch: parameters, exact cover of G⋄,
/// every system, regime-specific kinds and the per-cell count identities.
pub fn verify_certificate(inst: &Instance, cert: &Certificate) -> Report {
    let mut r = Report::new("certificate");
    let p = &inst.partition;
    let k = p.k();
    let k2 = k * k;
    let cp = &cert.params;
    r.check("schema", cert.schema == SCHEMA, format!("schema {}", cert.schema));
    r.check("hash", cert.instance_hash == inst.hash(), "certificate belongs to this instance");
    let alpha = alpha_n(cp.d, cp.phi_n, k);
    let params_ok = cp.k == k
        && cp.eps0 == p.eps0()
        && alpha == Some(cp.alpha_n)
        && cp.lambda_n.is_multiple_of(k2)
        && cp.gamma_prime_n == cp.lambda_n / k2
        && cp.gamma_n + cp.gamma_prime_n == cp.alpha_n;
    r.check("params", params_ok, format!("alpha n = {}, gamma n = {}, gamma' n = {}", cp.alpha_n, cp.gamma_n, cp.gamma_prime_n));

    let diamond = inst.diamond();
    let mut seen: BTreeMap<Edge, usize> = BTreeMap::new();
    for s in &cert.systems {
        for &e in s.system.edges() {
            *seen.entry(e).or_insert(0) += 1;
        }
    }
    let dup: Vec<usize> = seen.iter().filter(|&(_, &c)| c > 1).flat_map(|(&(u, v), _)| [u, v]).take(2).collect();
    r.check("a.disjoint", dup.is_empty(), "systems are pairwise edge-disjoint").witness(dup);
    let extra: Vec<usize> = seen.keys().filter(|&&(u, v)| u >= p.n() || v >= p.n() || !diamond.has_edge(u, v)).flat_map(|&(u, v)| [u, v]).take(2).collect();
    let missing: Vec<usize> = diamond.edges().filter(|e| !seen.contains_key(e)).flat_map(|(u, v)| [u, v]).take(2).collect();
    r.check("a.cover", extra.is_empty() && missing.is_empty(), format!("union of systems is E(G-diamond) ({} edges)", diamond.edge_count()))
        .witness(if extra.is_empty() { missing } else { extra });
    let expected = k2 * cp.alpha_n;
    r.check("a.count", cert.systems.len() == expected, format!("{} systems, expected K^2 alpha n = {expected}", cert.systems.len()));

    let mut first_bad: BTreeMap<String, (usize, String, Vec<usize>)> = BTreeMap::new();
    for (idx, s) in cert.systems.iter().enumerate() {
        let sr = verify_system(&s.system, p);
        for c in sr.checks.iter().filter(|c| !c.pass && !c.advisory) {
            first_bad.entry(c.clause.clone()).or_insert((idx, c.detail.clone(), c.witness.clone()));
        }
    }
    if first_bad.is_empty() {
        r.check("systems", true, "every system passes ES1-ES3 and its localization");
    }
    for (clause, (idx, detail, witness)) in first_bad {
        r.check(&clause, false, format!("system {idx}: {detail}")).witness(witness);
    }

    let bad_kind = cert.systems.iter().position(|s| match cert.regime {
        Regime::Noncritical | Regime::Critical => s.system.kind != SystemKind::Hamilton,
        Regime::FewEdges => {
            s.system.kind == SystemKind::Hamilton && s.system.crossing_edges(p) != 2
        }
    });
    r.check(
        "kinds",
        bad_kind.is_none(),
        match cert.regime {
            Regime::FewEdges => "every system is an MES or an HES with two crossing edges".to_string(),
            _ => "every system is an HES".to_string(),
        },
    )
    .witness(bad_kind.into_iter().collect());

    let tracked = if cert.regime == Regime::Critical {
        tracked_vertices(&inst.graph, p, cp.d, &cert.provenance.w12)
    } else {
        Vec::new()
    };
    let mut bad_cells = Vec::new();
    let mut short = Vec::new();
    let mut counts_ok = cert.counts.len() == k2;
    let special_target = if cert.regime == Regime::FewEdges { 0 } else { cp.gamma_prime_n };
    for c in 0..k2 {
        let cell = (c / k, c % k);
        let here: Vec<&CertifiedSystem> = cert.systems.iter().filter(|s| s.system.locale == Some(cell)).collect();
        let special = here.iter().filter(|s| has_property(s, p, cert.regime, &tracked)).count();
        if here.len() != cp.gamma_n {
            bad_cells.push(c);
        }
        if special < special_target {
            short.push(c);
        }
        counts_ok &= cert.counts.get(c).is_some_and(|cc| {
            cc.cell == cell && cc.localized == here.len() && cc.target == cp.gamma_n && cc.special_target == special_target
        });
    }
    r.check("b", bad_cells.is_empty(), format!("each cell has exactly gamma n = {} localized systems", cp.gamma_n))
        .witness(bad_cells);
    r.check("b.counts", counts_ok, "recorded tallies match the systems");
    let false_claims: Vec<usize> = cert
        .systems
        .iter()
        .enumerate()
        .filter(|(_, s)| s.special && cert.regime != Regime::FewEdges && !has_property(s, p, cert.regime, &tracked))
        .map(|(i, _)| i)
        .collect();
    r.check("special", false_claims.is_empty(), "systems marked as tracked have the tracked property")
        .witness(false_claims);
    r.advise("b.moreover", short.is_empty(), format!("each cell has {special_target} localized systems with the tracked property"))
        .witness(short);
    let locales: BTreeSet<usize> = cert
        .systems
        .iter()
        .filter_map(|s| s.system.locale)
        .filter(|&(i, j)| i >= k || j >= k)
        .map(|(i, _)| i)
        .collect();
    r.check("locales", locales.is_empty(), "locales lie in the K x K grid");
    r
}
