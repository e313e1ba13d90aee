use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use super::VarianceProfile;
use crate::error::Result;

const LOW: f64 = 0.45;
const HIGH: f64 = 0.55;

/// One interval `[a, b]` of compressed prefix indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalNode {
    pub level: u32,
    /// 1-based position among the nodes of its level, left to right.
    pub s: usize,
    pub a: usize,
    pub b: usize,
    pub bad: bool,
    /// Number of bad nodes on the path from the root to this node, set only
    /// for bad nodes.
    pub rank: Option<u32>,
    #[serde(skip)]
    pub parent: Option<usize>,
    #[serde(skip)]
    pub children: Option<[usize; 2]>,
}

#[derive(Debug, Clone)]
pub struct IntervalTree {
    profile: VarianceProfile,
    /// Breadth-first, so every level is a contiguous run ordered by `s`.
    nodes: Vec<IntervalNode>,
}

impl IntervalTree {
    pub fn build(profile: &VarianceProfile) -> Result<Self> {
        let t = profile.cumulative();
        let n = profile.compressed_len();
        let mut nodes = vec![IntervalNode {
            level: 0,
            s: 1,
            a: 0,
            b: n,
            bad: false,
            rank: None,
            parent: None,
            children: None,
        }];
        let mut queue = VecDeque::from([0usize]);
        let mut next_s: Vec<usize> = vec![2];
        while let Some(id) = queue.pop_front() {
            let (a, b, level) = (nodes[id].a, nodes[id].b, nodes[id].level);
            if a == b {
                continue;
            }
            let [left, right] = split(t, a, b);
            let child_level = level + 1;
            if next_s.len() <= child_level as usize {
                next_s.push(1);
            }
            let mut ids = [0usize; 2];
            for (slot, (ca, cb)) in ids.iter_mut().zip([left, right]) {
                let s = next_s[child_level as usize];
                next_s[child_level as usize] += 1;
                *slot = nodes.len();
                nodes.push(IntervalNode {
                    level: child_level,
                    s,
                    a: ca,
                    b: cb,
                    bad: false,
                    rank: None,
                    parent: Some(id),
                    children: None,
                });
                queue.push_back(*slot);
            }
            nodes[id].children = Some(ids);
        }
        let mut tree = IntervalTree {
            profile: profile.clone(),
            nodes,
        };
        classify_and_rank(&mut tree);
        Ok(tree)
    }

    pub fn profile(&self) -> &VarianceProfile {
        &self.profile
    }

    pub fn nodes(&self) -> &[IntervalNode] {
        &self.nodes
    }

    pub fn root(&self) -> &IntervalNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> u32 {
        self.nodes.last().map_or(0, |n| n.level)
    }

    pub fn t_length(&self, node: &IntervalNode) -> f64 {
        let t = self.profile.cumulative();
        t[node.b] - t[node.a]
    }

    pub fn level(&self, r: u32) -> impl Iterator<Item = &IntervalNode> {
        self.nodes.iter().filter(move |n| n.level == r)
    }

    pub fn bad_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.bad).count()
    }

    pub fn max_rank(&self) -> u32 {
        self.nodes.iter().filter_map(|n| n.rank).max().unwrap_or(0)
    }

    /// Total T-length of the bad nodes of rank exactly `q`.
    pub fn bad_mass(&self, q: u32) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.rank == Some(q))
            .map(|n| self.t_length(n))
            .sum()
    }

    /// Check every structural invariant, reporting the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.profile.compressed_len();
        if self.root().a != 0 || self.root().b != n {
            return Err("root is not [0, n]".into());
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if node.a > node.b {
                return Err(format!("node {id} has a > b"));
            }
            let bound = HIGH.powi(node.level as i32) + 1e-12;
            if self.t_length(node) > bound {
                return Err(format!(
                    "node {id} at level {} has T-length {} > {bound}",
                    node.level,
                    self.t_length(node)
                ));
            }
            match node.children {
                None if node.a != node.b => {
                    return Err(format!("node {id} is a non-singleton leaf"));
                }
                Some(_) if node.a == node.b => {
                    return Err(format!("singleton node {id} has children"));
                }
                Some([l, r]) => {
                    let (l, r) = (&self.nodes[l], &self.nodes[r]);
                    if l.a != node.a || r.b != node.b {
                        return Err(format!("children of node {id} do not span it"));
                    }
                    if l.bad != r.bad {
                        return Err(format!("children of node {id} disagree on badness"));
                    }
                    let expected_gap = usize::from(l.bad);
                    if r.a != l.b + expected_gap {
                        return Err(format!("children of node {id} neither share nor abut"));
                    }
                    if l.bad && (l.rank.is_none() || l.rank != r.rank) {
                        return Err(format!("bad children of node {id} lack a common rank"));
                    }
                }
                None => {}
            }
        }
        // Coverage and ordering of each level's frontier: the nodes at that
        // level together with leaves from shallower levels.
        for r in 0..=self.depth() {
            let mut frontier: Vec<&IntervalNode> = self
                .nodes
                .iter()
                .filter(|x| x.level == r || (x.level < r && x.children.is_none()))
                .collect();
            frontier.sort_by_key(|x| (x.a, x.b));
            let at_level: Vec<&IntervalNode> = self.level(r).collect();
            if at_level
                .windows(2)
                .any(|w| w[0].s + 1 != w[1].s || w[0].b > w[1].a)
            {
                return Err(format!("level {r} is not ordered left to right"));
            }
            if frontier.first().map(|x| x.a) != Some(0) {
                return Err(format!("level {r} misses index 0"));
            }
            let mut reach = 0usize;
            for x in &frontier {
                if x.a > reach + 1 {
                    return Err(format!("level {r} misses index {}", reach + 1));
                }
                reach = reach.max(x.b);
            }
            if reach != n {
                return Err(format!("level {r} does not cover 0..={n}"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.nodes)?)
    }

    /// Depth-first indented listing, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let x = &self.nodes[id];
            let _ = write!(
                out,
                "{:indent$}[{}, {}] r={} s={}",
                "",
                x.a,
                x.b,
                x.level,
                x.s,
                indent = 2 * x.level as usize
            );
            if let Some(q) = x.rank {
                let _ = write!(out, " bad rank={q}");
            }
            out.push('\n');
            if let Some([l, r]) = x.children {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }
}

fn split(t: &[f64], a: usize, b: usize) -> [(usize, usize); 2] {
    let (ta, delta) = (t[a], t[b] - t[a]);
    let ratio = |x: usize| (t[x] - ta) / delta;
    let first = a + t[a..=b].partition_point(|&v| (v - ta) / delta < LOW);
    if ratio(first) <= HIGH {
        [(a, first), (first, b)]
    } else {
        [(a, first - 1), (first, b)]
    }
}

/// Mark sibling pairs that do not share an endpoint as bad and assign every
/// bad node its rank.
pub fn classify_and_rank(tree: &mut IntervalTree) {
    let mut bad_above = vec![0u32; tree.nodes.len()];
    for id in 0..tree.nodes.len() {
        let node = &tree.nodes[id];
        let inherited = node.parent.map_or(0, |p| bad_above[p]);
        let bad = match node.parent.and_then(|p| tree.nodes[p].children) {
            Some([l, r]) => tree.nodes[l].b != tree.nodes[r].a,
            None => false,
        };
        bad_above[id] = inherited + u32::from(bad);
        let node = &mut tree.nodes[id];
        node.bad = bad;
        node.rank = bad.then_some(bad_above[id]);
    }
}
