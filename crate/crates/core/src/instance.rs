//! JSON interchange format for instances and pipeline parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::numeric::{q, serde_q, Q};
use crate::partition::{Partition, PartitionSpec};

/// How `random_slice` draws the free cell coordinate of an edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    /// Per exceptional vertex, a random permutation of its edges is dealt
    /// round-robin over the free coordinate. Marginally uniform.
    #[default]
    Stratified,
    /// Every free coordinate drawn independently and uniformly.
    Independent,
}

/// Which of the three pipelines applies to an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Noncritical,
    Critical,
    FewEdges,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Noncritical => "noncritical",
            Regime::Critical => "critical",
            Regime::FewEdges => "few_edges",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noncritical" => Ok(Regime::Noncritical),
            "critical" => Ok(Regime::Critical),
            "few_edges" => Ok(Regime::FewEdges),
            other => Err(Error::Input(format!("unknown regime {other:?}"))),
        }
    }
}

fn default_eps_prime() -> Q {
    q(1, 5)
}

/// Numeric parameters of a pipeline run. `phi_n` and `lambda_n` are the
/// integers φn and λn; K and eps0 come from the partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "D")]
    pub d: usize,
    pub phi_n: usize,
    pub lambda_n: usize,
    #[serde(with = "serde_q")]
    pub eps: Q,
    #[serde(with = "serde_q", default = "default_eps_prime")]
    pub eps_prime: Q,
    #[serde(default)]
    pub seed: u64,
    /// The two vertices of largest crossing degree (critical regime only);
    /// computed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<usize>,
    /// Minimum leftover degree for a 2-path centre in the non-critical
    /// candidate construction. Defaults to 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_path_threshold: Option<usize>,
    /// Number of seed candidates in the critical construction. Defaults to
    /// max(ceil(αn/200), λn/K², e_H(W')).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_seeds: Option<usize>,
    #[serde(default)]
    pub slice_mode: SliceMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: Vec<[usize; 2]>,
    partition: PartitionSpec,
    #[serde(default)]
    g0: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

/// A graph, its (K, m, eps0)-partition, the removed subgraph G0, and
/// optional suggested parameters.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub partition: Partition,
    pub g0: Graph,
    pub params: Option<Params>,
    pub regime: Option<Regime>,
    pub meta: Option<serde_json::Value>,
}

fn pairs(v: &[[usize; 2]]) -> impl Iterator<Item = Edge> + '_ {
    v.iter().map(|&[a, b]| (a, b))
}

impl Instance {
    pub fn new(graph: Graph, partition: Partition, g0: Graph) -> Result<Self> {
        if graph.n() != partition.n() || g0.n() != graph.n() {
            return Err(Error::Input("graph, partition and G0 sizes differ".into()));
        }
        if let Some((u, v)) = g0.edges().find(|&(u, v)| !graph.has_edge(u, v)) {
            return Err(Error::Input(format!("G0 edge ({u},{v}) is not an edge of G")));
        }
        Ok(Instance {
            graph,
            partition,
            g0,
            params: None,
            regime: None,
            meta: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("instance JSON: {e}")))?;
        let graph = Graph::new(file.n, pairs(&file.edges))?;
        let g0 = Graph::new(file.n, pairs(&file.g0))?;
        let partition = Partition::new(file.n, file.partition)?;
        let mut inst = Instance::new(graph, partition, g0)?;
        inst.params = file.params;
        inst.regime = file.regime;
        inst.meta = file.meta;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.graph.n(),
            edges: self.graph.edges().map(|(u, v)| [u, v]).collect(),
            partition: self.partition.spec(),
            g0: self.g0.edges().map(|(u, v)| [u, v]).collect(),
            params: self.params.clone(),
            regime: self.regime,
            meta: self.meta.clone(),
        };
        serde_json::to_string(&file).expect("instance serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::Input(format!("writing {}: {e}", path.display())))
    }

    /// SHA-256 over the canonical edge lists and partition, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({
            "n": self.graph.n(),
            "edges": self.graph.edge_vec(),
            "g0": self.g0.edge_vec(),
            "partition": self.partition.spec(),
        });
        let mut hasher = Sha256::new();
        hasher.update(canonical.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }

    /// G⋄ = G − G[A] − G[B] − G0.
    pub fn diamond(&self) -> Graph {
        let p = &self.partition;
        self.graph
            .filter_edges(|u, v| !p.is_internal(u, v) && !self.g0.has_edge(u, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::tests::small;

    #[test]
    fn json_round_trip_and_diamond() {
        let p = small(1, 2);
        // A0=0, B0=1, A1={2,3}, B1={4,5}
        let g = Graph::new(6, [(0, 1), (0, 2), (2, 3), (1, 4), (3, 5), (4, 5)]).unwrap();
        let g0 = Graph::new(6, [(0, 1)]).unwrap();
        let inst = Instance::new(g, p, g0).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back.graph, inst.graph);
        assert_eq!(back.hash(), inst.hash());
        assert_eq!(inst.diamond().edge_vec(), vec![(0, 2), (1, 4), (3, 5)]);
    }

    #[test]
    fn params_accept_floats_and_fractions() {
        let p: Params =
            serde_json::from_str(r#"{"D":10,"phi_n":2,"lambda_n":4,"eps":0.1,"eps_prime":"1/3"}"#)
                .unwrap();
        assert_eq!(p.eps, q(1, 10));
        assert_eq!(p.eps_prime, q(1, 3));
        assert_eq!(p.slice_mode, SliceMode::Stratified);
    }
}
