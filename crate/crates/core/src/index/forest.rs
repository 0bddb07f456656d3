//! Random-projection forest for approximate angular search.
//!
//! Each tree splits its points by the hyperplane equidistant from two randomly drawn
//! members until a leaf holds at most `leaf_size` points. A query walks all trees at once
//! through a priority queue ordered by the smallest margin seen on the way down, collects
//! candidates until `max(k * search_per_k, min_candidates)` are gathered and reranks them exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    pub leaf_size: usize,
    /// Candidates gathered per requested neighbor, before exact reranking.
    pub search_per_k: usize,
    /// Lower bound on gathered candidates regardless of `k`.
    pub min_candidates: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 16,
            leaf_size: 16,
            search_per_k: 60,
            min_candidates: 400,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
enum Node<S> {
    Leaf(Vec<u32>),
    Split {
        normal: Vec<S>,
        offset: S,
        above: usize,
        below: usize,
    },
}

#[derive(Debug, Clone)]
pub(super) struct Forest<S> {
    nodes: Vec<Node<S>>,
    roots: Vec<usize>,
}

struct Pending {
    priority: f64,
    node: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(other.node.cmp(&self.node))
    }
}

impl<S: Scalar> Forest<S> {
    pub(super) fn build(vectors: &[&[S]], params: &ForestParams) -> Self {
        let mut f = Forest {
            nodes: Vec::new(),
            roots: Vec::new(),
        };
        let all: Vec<u32> = (0..vectors.len() as u32).collect();
        for t in 0..params.trees.max(1) {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let root = f.grow(vectors, all.clone(), params.leaf_size.max(1), &mut rng, 0);
            f.roots.push(root);
        }
        f
    }

    fn grow(&mut self, vectors: &[&[S]], mut ids: Vec<u32>, leaf: usize, rng: &mut ChaCha8Rng, depth: usize) -> usize {
        if ids.len() <= leaf || depth > 64 {
            self.nodes.push(Node::Leaf(ids));
            return self.nodes.len() - 1;
        }
        let a = vectors[ids[rng.random_range(0..ids.len())] as usize];
        let b = vectors[ids[rng.random_range(0..ids.len())] as usize];
        let normal: Vec<S> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
        let mid: Vec<S> = a.iter().zip(b).map(|(x, y)| (*x + *y) / (S::one() + S::one())).collect();
        let offset = dot(&normal, &mid);
        let (mut above, mut below): (Vec<u32>, Vec<u32>) =
            ids.iter().partition(|&&i| dot(&normal, vectors[i as usize]) - offset >= S::zero());
        let (normal, offset) = if above.is_empty() || below.is_empty() {
            // Degenerate plane (identical points): split the shuffled list in half.
            ids.shuffle(rng);
            below = ids.split_off(ids.len() / 2);
            above = ids;
            (Vec::new(), S::zero())
        } else {
            (normal, offset)
        };
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf(Vec::new()));
        let above = self.grow(vectors, above, leaf, rng, depth + 1);
        let below = self.grow(vectors, below, leaf, rng, depth + 1);
        self.nodes[slot] = Node::Split {
            normal,
            offset,
            above,
            below,
        };
        slot
    }

    /// Candidate row indices for `q`, stopping once `want` rows accepted by `keep` are
    /// gathered or every leaf has been visited. May contain duplicates.
    pub(super) fn candidates(&self, q: &[S], want: usize, keep: impl Fn(u32) -> bool) -> Vec<u32> {
        let mut heap: BinaryHeap<Pending> = self
            .roots
            .iter()
            .map(|&r| Pending {
                priority: f64::INFINITY,
                node: r,
            })
            .collect();
        let mut out = Vec::new();
        let mut kept = 0;
        while let Some(Pending { priority, node }) = heap.pop() {
            match &self.nodes[node] {
                Node::Leaf(ids) => {
                    for &i in ids {
                        if keep(i) {
                            kept += 1;
                        }
                        out.push(i);
                    }
                    if kept >= want {
                        break;
                    }
                }
                Node::Split {
                    normal,
                    offset,
                    above,
                    below,
                } => {
                    // Empty normal marks a random split; both sides are equally likely.
                    let margin = if normal.is_empty() {
                        0.0
                    } else {
                        (dot(normal, q) - *offset).to_f64_lossy()
                    };
                    heap.push(Pending {
                        priority: priority.min(margin),
                        node: *above,
                    });
                    heap.push(Pending {
                        priority: priority.min(-margin),
                        node: *below,
                    });
                }
            }
        }
        out
    }
}
