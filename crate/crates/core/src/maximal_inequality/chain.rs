use num_traits::Signed;
use serde::Serialize;

use super::IntervalTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopKind {
    /// The point is already an endpoint of the parent interval.
    Equal,
    /// Inner endpoint of a bad split, reached from the parent endpoint on its side.
    BadHop,
    /// Shared endpoint of a good split, reached from whichever parent endpoint
    /// gives the smaller increment.
    GoodMinHop,
    /// `0 → n` across the root interval.
    Root,
    /// Over a run of zero-variance steps.
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Hop {
    /// Original prefix indices.
    pub from: usize,
    pub to: usize,
    pub kind: HopKind,
    /// Tree node whose endpoint `to` is.
    pub node: Option<usize>,
}

/// `0 = i_0, i_1, …, i_d = i`, listed as hops from the root down.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainPath {
    pub i: usize,
    pub hops: Vec<Hop>,
}

impl ChainPath {
    pub fn points(&self) -> Vec<usize> {
        std::iter::once(0)
            .chain(self.hops.iter().map(|h| h.to))
            .collect()
    }

    pub fn telescope<T: Signed + Copy>(&self, s: &[T]) -> T {
        self.hops
            .iter()
            .fold(T::zero(), |acc, h| acc + (s[h.to] - s[h.from]))
    }

    /// Whether consecutive hops connect and each lands on its node's endpoints.
    pub fn is_well_formed(&self, tree: &IntervalTree) -> bool {
        let profile = tree.profile();
        let mut at = 0;
        for h in &self.hops {
            if h.from != at {
                return false;
            }
            at = h.to;
            if let Some(id) = h.node {
                let node = &tree.nodes()[id];
                let ends = [
                    profile.original_index(node.a),
                    profile.original_index(node.b),
                ];
                if !ends.contains(&h.to) {
                    return false;
                }
                if let Some(p) = node.parent {
                    let parent = &tree.nodes()[p];
                    let pe = [
                        profile.original_index(parent.a),
                        profile.original_index(parent.b),
                    ];
                    if !pe.contains(&h.from) && h.kind != HopKind::Equal {
                        return false;
                    }
                }
            }
        }
        at == self.i
    }
}

/// Decompose `S_i` along the interval tree, given prefix sums `s` of length n + 1.
pub fn chain_path<T>(tree: &IntervalTree, s: &[T], i: usize) -> Result<ChainPath>
where
    T: Signed + Copy + PartialOrd,
{
    let profile = tree.profile();
    let n = profile.n();
    if s.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            actual: s.len(),
        });
    }
    if i > n {
        return Err(Error::OutOfRange {
            index: i,
            lo: 0,
            hi: n,
        });
    }
    let nodes = tree.nodes();
    let orig = |j: usize| profile.original_index(j);
    let j = profile.compressed_index(i);

    let mut descent = vec![0usize];
    while let Some([l, r]) = nodes[*descent.last().unwrap()].children {
        descent.push(if j <= nodes[l].b { l } else { r });
    }

    let mut x = j;
    let mut rev = Vec::with_capacity(descent.len() + 1);
    for w in descent.windows(2).rev() {
        let (parent, child) = (&nodes[w[0]], w[1]);
        let from = if x == parent.a || x == parent.b {
            rev.push((x, x, HopKind::Equal, child));
            continue;
        } else {
            let [l, r] = parent.children.unwrap();
            let (left, right) = (&nodes[l], &nodes[r]);
            if left.b == right.a {
                let to_a = (s[orig(x)] - s[orig(parent.a)]).abs();
                let to_b = (s[orig(parent.b)] - s[orig(x)]).abs();
                let from = if to_a <= to_b { parent.a } else { parent.b };
                rev.push((from, x, HopKind::GoodMinHop, child));
                from
            } else {
                let from = if x == left.b { parent.a } else { parent.b };
                rev.push((from, x, HopKind::BadHop, child));
                from
            }
        };
        x = from;
    }

    let mut hops = Vec::with_capacity(rev.len() + 2);
    if x != 0 {
        hops.push(Hop {
            from: 0,
            to: orig(x),
            kind: HopKind::Root,
            node: Some(0),
        });
    }
    hops.extend(rev.into_iter().rev().map(|(from, to, kind, node)| Hop {
        from: orig(from),
        to: orig(to),
        kind,
        node: Some(node),
    }));
    if orig(j) != i {
        hops.push(Hop {
            from: orig(j),
            to: i,
            kind: HopKind::NoOp,
            node: None,
        });
    }
    Ok(ChainPath { i, hops })
}
