//! Search tree over compatible subsets. A node's path from the root is a
//! partial solution; `remaining` holds the proposals its subtree may still
//! add.

use serde::{Deserialize, Serialize};

use crate::proposals::{MemberSet, ProposalId, ProposalPool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Children ordered by proximity, with a Skip node.
    Object,
    /// Children restricted to edge-connected layouts; no Skip.
    Layout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeContent {
    Root,
    Proposal(ProposalId),
    Skip,
}

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Node {
    pub content: NodeContent,
    pub parent: Option<NodeId>,
    pub children: Option<Vec<NodeId>>,
    pub q: f64,
    pub q_max: f64,
    pub n: u64,
    pub path: MemberSet,
    pub remaining: MemberSet,
    /// Proposal proximity is measured from; the nearest proposal ancestor.
    pub anchor: Option<ProposalId>,
}

impl Node {
    pub fn proposal(&self) -> Option<ProposalId> {
        match self.content {
            NodeContent::Proposal(p) => Some(p),
            _ => None,
        }
    }
}

pub struct SearchTree<'a> {
    pool: &'a ProposalPool,
    fitness: &'a [f64],
    mode: SearchMode,
    nodes: Vec<Node>,
}

/// Fitness descending, then id.
fn by_fitness(fitness: &[f64], a: ProposalId, b: ProposalId) -> std::cmp::Ordering {
    fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b))
}

/// Children of a node with `remaining` candidates, proximity `anchor` and
/// own proposal `last`: the first pick plus everything incompatible with it,
/// by fitness descending then id.
pub fn child_group(
    pool: &ProposalPool,
    fitness: &[f64],
    mode: SearchMode,
    remaining: &MemberSet,
    anchor: Option<ProposalId>,
    last: Option<ProposalId>,
) -> Vec<ProposalId> {
    let candidates = match (mode, last) {
        (SearchMode::Layout, Some(p)) => {
            let mut c = remaining.clone();
            c.intersect_with(pool.neighbors(p));
            c
        }
        _ => remaining.clone(),
    };
    let best_fitness = |set: &MemberSet| set.iter().min_by(|&a, &b| by_fitness(fitness, a, b));
    let first = match (mode, anchor) {
        (SearchMode::Object, Some(a)) => candidates
            .iter()
            .min_by(|&x, &y| pool.distance(a, x).total_cmp(&pool.distance(a, y)).then(x.cmp(&y))),
        _ => best_fitness(&candidates),
    };
    let Some(o) = first else { return Vec::new() };
    let mut group = candidates;
    group.intersect_with(pool.incompatible_with(o));
    group.insert(o);
    let mut ids = group.to_vec();
    ids.sort_by(|&a, &b| by_fitness(fitness, a, b));
    ids
}

impl<'a> SearchTree<'a> {
    /// `candidates` are the proposals the search may pick.
    pub fn new(pool: &'a ProposalPool, fitness: &'a [f64], candidates: MemberSet, mode: SearchMode) -> Self {
        let root = Node {
            content: NodeContent::Root,
            parent: None,
            children: None,
            q: 0.0,
            q_max: f64::NEG_INFINITY,
            n: 0,
            path: pool.empty_set(),
            remaining: candidates,
            anchor: None,
        };
        Self {
            pool,
            fitness,
            mode,
            nodes: vec![root],
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Proposal ids the children of `id` would hold, in order.
    pub fn child_proposals(&self, id: NodeId) -> Vec<ProposalId> {
        let node = &self.nodes[id];
        child_group(self.pool, self.fitness, self.mode, &node.remaining, node.anchor, node.proposal())
    }

    /// Materializes the children of `id` if needed and returns them.
    pub fn expand(&mut self, id: NodeId) -> &[NodeId] {
        if self.nodes[id].children.is_none() {
            let proposals = self.child_proposals(id);
            let parent = self.nodes[id].clone();
            let mut kids = Vec::with_capacity(proposals.len() + 1);
            for &p in &proposals {
                let mut remaining = parent.remaining.clone();
                remaining.remove(p);
                remaining.subtract(self.pool.incompatible_with(p));
                let mut path = parent.path.clone();
                path.insert(p);
                kids.push(self.push(Node {
                    content: NodeContent::Proposal(p),
                    parent: Some(id),
                    children: None,
                    q: 0.0,
                    q_max: f64::NEG_INFINITY,
                    n: 0,
                    path,
                    remaining,
                    anchor: Some(p),
                }));
            }
            if self.mode == SearchMode::Object && !proposals.is_empty() {
                let mut remaining = parent.remaining.clone();
                for &p in &proposals {
                    remaining.remove(p);
                }
                kids.push(self.push(Node {
                    content: NodeContent::Skip,
                    parent: Some(id),
                    children: None,
                    q: 0.0,
                    q_max: f64::NEG_INFINITY,
                    n: 0,
                    path: parent.path.clone(),
                    remaining,
                    anchor: parent.anchor,
                }));
            }
            self.nodes[id].children = Some(kids);
        }
        self.nodes[id].children.as_deref().unwrap_or(&[])
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Nodes from the root down to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// First proposal child of `id`'s parent, which a Skip node is compared to.
    pub fn skip_sibling(&self, id: NodeId) -> Option<ProposalId> {
        let parent = self.nodes[id].parent?;
        self.nodes[parent]
            .children
            .as_ref()?
            .iter()
            .find_map(|&c| self.nodes[c].proposal())
    }
}
