//! (K, m, eps0)-partitions: two exceptional sets and 2K equal clusters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Side;
use crate::numeric::{qu, serde_q, Q};

/// Which block of a partition a vertex belongs to. Cluster indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    A0,
    B0,
    A(usize),
    B(usize),
}

impl Block {
    pub fn side(self) -> Side {
        match self {
            Block::A0 | Block::A(_) => Side::A,
            Block::B0 | Block::B(_) => Side::B,
        }
    }

    pub fn is_exceptional(self) -> bool {
        matches!(self, Block::A0 | Block::B0)
    }
}

/// Serialized form; see [`Partition`] for the validated form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    #[serde(with = "serde_q")]
    pub eps0: Q,
    #[serde(rename = "A0")]
    pub a0: Vec<usize>,
    #[serde(rename = "B0")]
    pub b0: Vec<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<usize>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Partition {
    n: usize,
    k: usize,
    m: usize,
    eps0: Q,
    a0: Vec<usize>,
    b0: Vec<usize>,
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
    label: Vec<Block>,
}

impl Partition {
    /// Validate the partition invariants against a vertex count `n`.
    pub fn new(n: usize, spec: PartitionSpec) -> Result<Self> {
        let PartitionSpec {
            k,
            m,
            eps0,
            mut a0,
            mut b0,
            mut a,
            mut b,
        } = spec;
        if k == 0 {
            return Err(Error::Input("partition needs K >= 1".into()));
        }
        if a.len() != k || b.len() != k {
            return Err(Error::Input(format!(
                "expected {k} A-clusters and {k} B-clusters, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if eps0 <= qu(0) || eps0 >= qu(1) {
            return Err(Error::Input(format!("eps0 = {eps0} outside (0,1)")));
        }
        let mut label: Vec<Option<Block>> = vec![None; n];
        let mut assign = |v: usize, blk: Block| -> Result<()> {
            if v >= n {
                return Err(Error::Input(format!("partition vertex {v} out of range for n={n}")));
            }
            if let Some(prev) = label[v] {
                return Err(Error::Input(format!("vertex {v} in both {prev:?} and {blk:?}")));
            }
            label[v] = Some(blk);
            Ok(())
        };
        for &v in &a0 {
            assign(v, Block::A0)?;
        }
        for &v in &b0 {
            assign(v, Block::B0)?;
        }
        for (i, cl) in a.iter().enumerate() {
            if cl.len() != m {
                return Err(Error::Input(format!("|A_{i}| = {} but m = {m}", cl.len())));
            }
            for &v in cl {
                assign(v, Block::A(i))?;
            }
        }
        for (i, cl) in b.iter().enumerate() {
            if cl.len() != m {
                return Err(Error::Input(format!("|B_{i}| = {} but m = {m}", cl.len())));
            }
            for &v in cl {
                assign(v, Block::B(i))?;
            }
        }
        let label: Vec<Block> = label
            .into_iter()
            .enumerate()
            .map(|(v, l)| l.ok_or_else(|| Error::Input(format!("vertex {v} not in any block"))))
            .collect::<Result<_>>()?;
        if qu(a0.len() + b0.len()) > eps0 * qu(n) {
            return Err(Error::Input(format!(
                "|A0 u B0| = {} exceeds eps0 * n = {}",
                a0.len() + b0.len(),
                eps0 * qu(n)
            )));
        }
        a0.sort_unstable();
        b0.sort_unstable();
        a.iter_mut().for_each(|c| c.sort_unstable());
        b.iter_mut().for_each(|c| c.sort_unstable());
        Ok(Partition {
            n,
            k,
            m,
            eps0,
            a0,
            b0,
            a,
            b,
            label,
        })
    }

    pub fn spec(&self) -> PartitionSpec {
        PartitionSpec {
            k: self.k,
            m: self.m,
            eps0: self.eps0,
            a0: self.a0.clone(),
            b0: self.b0.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn eps0(&self) -> Q {
        self.eps0
    }
    pub fn a0(&self) -> &[usize] {
        &self.a0
    }
    pub fn b0(&self) -> &[usize] {
        &self.b0
    }
    pub fn cluster_a(&self, i: usize) -> &[usize] {
        &self.a[i]
    }
    pub fn cluster_b(&self, i: usize) -> &[usize] {
        &self.b[i]
    }

    pub fn block(&self, v: usize) -> Block {
        self.label[v]
    }

    pub fn side(&self, v: usize) -> Side {
        self.label[v].side()
    }

    pub fn is_exceptional(&self, v: usize) -> bool {
        self.label[v].is_exceptional()
    }

    /// V0 = A0 u B0, sorted.
    pub fn v0(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.a0.iter().chain(&self.b0).copied().collect();
        v.sort_unstable();
        v
    }

    /// A = union of the A-clusters (no exceptional vertices).
    pub fn a_set(&self) -> Vec<usize> {
        self.vertices_where(|b| matches!(b, Block::A(_)))
    }

    pub fn b_set(&self) -> Vec<usize> {
        self.vertices_where(|b| matches!(b, Block::B(_)))
    }

    /// A' = A0 u A.
    pub fn a_prime(&self) -> Vec<usize> {
        self.vertices_where(|b| b.side() == Side::A)
    }

    pub fn b_prime(&self) -> Vec<usize> {
        self.vertices_where(|b| b.side() == Side::B)
    }

    fn vertices_where(&self, pred: impl Fn(Block) -> bool) -> Vec<usize> {
        (0..self.n).filter(|&v| pred(self.label[v])).collect()
    }

    /// An A'B'-edge has its endpoints on different sides.
    pub fn is_crossing(&self, u: usize, v: usize) -> bool {
        self.side(u) != self.side(v)
    }

    /// An edge inside A or inside B (both endpoints non-exceptional, same side).
    pub fn is_internal(&self, u: usize, v: usize) -> bool {
        matches!(
            (self.block(u), self.block(v)),
            (Block::A(_), Block::A(_)) | (Block::B(_), Block::B(_))
        )
    }

    /// An A0A- or B0B-edge.
    pub fn is_exceptional_to_cluster(&self, u: usize, v: usize) -> bool {
        matches!(
            (self.block(u), self.block(v)),
            (Block::A0, Block::A(_))
                | (Block::A(_), Block::A0)
                | (Block::B0, Block::B(_))
                | (Block::B(_), Block::B0)
        )
    }

    /// Whether `v` lies in V0 u A_i u B_j.
    pub fn in_locale(&self, v: usize, i: usize, j: usize) -> bool {
        match self.block(v) {
            Block::A0 | Block::B0 => true,
            Block::A(c) => c == i,
            Block::B(c) => c == j,
        }
    }

    /// |A0 u B0| as a count.
    pub fn v0_len(&self) -> usize {
        self.a0.len() + self.b0.len()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numeric::q;

    /// A0={0}, B0={1}, A_i and B_i of size m laid out consecutively.
    pub(crate) fn small(k: usize, m: usize) -> Partition {
        let n = 2 + 2 * k * m;
        let mut next = 2;
        let mut take = || {
            let c: Vec<usize> = (next..next + m).collect();
            next += m;
            c
        };
        let a: Vec<Vec<usize>> = (0..k).map(|_| take()).collect();
        let b: Vec<Vec<usize>> = (0..k).map(|_| take()).collect();
        Partition::new(
            n,
            PartitionSpec {
                k,
                m,
                eps0: q(1, 2),
                a0: vec![0],
                b0: vec![1],
                a,
                b,
            },
        )
        .unwrap()
    }

    #[test]
    fn labels_and_sides() {
        let p = small(2, 2);
        assert_eq!(p.n(), 10);
        assert_eq!(p.block(0), Block::A0);
        assert_eq!(p.block(2), Block::A(0));
        assert_eq!(p.block(4), Block::A(1));
        assert_eq!(p.block(6), Block::B(0));
        assert_eq!(p.a_prime(), vec![0, 2, 3, 4, 5]);
        assert!(p.is_crossing(0, 1));
        assert!(p.is_internal(2, 4));
        assert!(p.is_exceptional_to_cluster(0, 3));
        assert!(!p.is_exceptional_to_cluster(0, 6));
        assert!(p.in_locale(7, 1, 0));
        assert!(!p.in_locale(8, 1, 0));
    }

    #[test]
    fn rejects_invalid() {
        let spec = small(1, 2).spec();
        let mut bad = spec.clone();
        bad.a[0].push(1);
        assert!(Partition::new(6, bad).is_err());
        let mut bad = spec.clone();
        bad.eps0 = q(1, 10);
        assert!(Partition::new(6, bad).is_err());
        assert!(Partition::new(7, spec).is_err());
    }
}
