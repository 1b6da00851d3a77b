//! Exact K-nearest-neighbour search and intra/inter neighbourhood partition.
//!
//! Results are ordered with the anchor first, then by squared Euclidean
//! distance, then by point index. The k-d tree returns exactly what a
//! brute-force scan under that order would.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    /// Squared Euclidean distance to the anchor.
    pub dist2: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// k-d tree over a copy of the positions.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    positions: Vec<[f64; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Bounded candidate list kept sorted by (anchor-first, distance, index).
struct Candidates {
    k: usize,
    anchor: Option<usize>,
    items: Vec<Neighbor>,
}

impl Candidates {
    fn new(k: usize, anchor: Option<usize>) -> Self {
        Self {
            k,
            anchor,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn cmp(&self, a: &Neighbor, b: &Neighbor) -> Ordering {
        let rank = |n: &Neighbor| u8::from(Some(n.index) != self.anchor);
        rank(a)
            .cmp(&rank(b))
            .then(a.dist2.total_cmp(&b.dist2))
            .then(a.index.cmp(&b.index))
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        if self.full() {
            self.items[self.k - 1].dist2
        } else {
            f64::INFINITY
        }
    }

    fn offer(&mut self, cand: Neighbor) {
        if self.full() && self.cmp(&cand, &self.items[self.k - 1]) != Ordering::Less {
            return;
        }
        let at = self
            .items
            .partition_point(|x| self.cmp(x, &cand) == Ordering::Less);
        self.items.insert(at, cand);
        self.items.truncate(self.k);
    }
}

impl NeighborIndex {
    pub fn build(positions: &[[f64; 3]]) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidCloud(
                "cannot index an empty point set".into(),
            ));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        let mut index = Self {
            positions: positions.to_vec(),
            order: (0..positions.len()).collect(),
            nodes: Vec::new(),
        };
        index.split(0, positions.len());
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for d in 0..3 {
                lo[d] = lo[d].min(self.positions[i][d]);
                hi[d] = hi[d].max(self.positions[i][d]);
            }
        }
        let dim = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        if hi[dim] - lo[dim] == 0.0 {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let positions = &self.positions;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            positions[a][dim].total_cmp(&positions[b][dim])
        });
        let value = self.positions[self.order[mid]][dim];
        self.nodes.push(Node::Split {
            dim,
            value,
            left: 0,
            right: 0,
        });
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn search(&self, node: usize, query: &[f64; 3], cands: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == cands.anchor {
                        continue;
                    }
                    cands.offer(Neighbor {
                        index: i,
                        dist2: math::dist2(query, &self.positions[i]),
                    });
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, cands);
                // `<=` keeps equal-distance candidates with smaller indices reachable
                if diff * diff <= cands.worst() {
                    self.search(far, query, cands);
                }
            }
        }
    }

    /// The `k` nearest points to point `anchor`, anchor first.
    pub fn knn(&self, anchor: usize, k: usize) -> Result<Vec<Neighbor>> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::NeighborhoodTooLarge { k, n });
        }
        if anchor >= n {
            return Err(Error::InvalidConfig(alloc::format!(
                "anchor {anchor} outside {n} points"
            )));
        }
        let mut cands = Candidates::new(k, Some(anchor));
        cands.offer(Neighbor {
            index: anchor,
            dist2: 0.0,
        });
        let query = self.positions[anchor];
        self.search(0, &query, &mut cands);
        Ok(cands.items)
    }

    /// The `k` nearest indexed points to an arbitrary query location.
    pub fn knn_point(&self, query: &[f64; 3], k: usize) -> Result<Vec<Neighbor>> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::NeighborhoodTooLarge { k, n });
        }
        let mut cands = Candidates::new(k, None);
        self.search(0, query, &mut cands);
        Ok(cands.items)
    }

    pub fn nearest(&self, query: &[f64; 3]) -> Neighbor {
        self.knn_point(query, 1).expect("index is non-empty")[0]
    }
}

/// An anchor's neighbourhood split by label.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPartition {
    pub anchor: usize,
    /// Same-label neighbours, anchor included.
    pub intra: Vec<usize>,
    pub inter: Vec<usize>,
    /// Sum of squared distances from the anchor to `intra`.
    pub d_plus: f64,
    pub d_minus: f64,
}

impl NeighborPartition {
    /// Neighbourhood size `|intra| + |inter|`.
    pub fn k(&self) -> usize {
        self.intra.len() + self.inter.len()
    }

    /// True if any neighbour carries a different label.
    pub fn is_mixed(&self) -> bool {
        !self.inter.is_empty()
    }
}

pub fn partition(neighbors: &[Neighbor], labels: &[usize], anchor: usize) -> NeighborPartition {
    let own = labels[anchor];
    let mut part = NeighborPartition {
        anchor,
        intra: Vec::new(),
        inter: Vec::new(),
        d_plus: 0.0,
        d_minus: 0.0,
    };
    for nb in neighbors {
        if labels[nb.index] == own {
            part.intra.push(nb.index);
            part.d_plus += nb.dist2;
        } else {
            part.inter.push(nb.index);
            part.d_minus += nb.dist2;
        }
    }
    part
}

/// Partitions of every point's `k`-neighbourhood.
pub fn partition_all(
    index: &NeighborIndex,
    labels: &[usize],
    k: usize,
) -> Result<Vec<NeighborPartition>> {
    if labels.len() != index.len() {
        return Err(Error::Shape(alloc::format!(
            "{} labels for {} indexed points",
            labels.len(),
            index.len()
        )));
    }
    (0..index.len())
        .map(|i| index.knn(i, k).map(|nb| partition(&nb, labels, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn collinear(n: usize) -> NeighborIndex {
        let pos: Vec<[f64; 3]> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        NeighborIndex::build(&pos).unwrap()
    }

    #[test]
    fn ties_broken_by_index() {
        let idx = collinear(4);
        let nb = idx.knn(1, 3).unwrap();
        assert_eq!(
            nb,
            vec![
                Neighbor {
                    index: 1,
                    dist2: 0.0
                },
                Neighbor {
                    index: 0,
                    dist2: 1.0
                },
                Neighbor {
                    index: 2,
                    dist2: 1.0
                }
            ]
        );
    }

    #[test]
    fn k_one_is_self() {
        let idx = collinear(30);
        assert_eq!(
            idx.knn(17, 1).unwrap(),
            vec![Neighbor {
                index: 17,
                dist2: 0.0
            }]
        );
    }

    #[test]
    fn single_point_index() {
        let idx = NeighborIndex::build(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(idx.knn(0, 1).unwrap().len(), 1);
        assert_eq!(
            idx.knn(0, 2),
            Err(Error::NeighborhoodTooLarge { k: 2, n: 1 })
        );
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            NeighborIndex::build(&[[0.0; 3], [f64::INFINITY, 0.0, 0.0]]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
    }

    #[test]
    fn duplicates_anchor_first() {
        let pos = vec![[0.0; 3]; 20];
        let idx = NeighborIndex::build(&pos).unwrap();
        let nb = idx.knn(5, 4).unwrap();
        let order: Vec<usize> = nb.iter().map(|n| n.index).collect();
        assert_eq!(order, vec![5, 0, 1, 2]);
    }

    #[test]
    fn partition_hand_sums() {
        let nb = vec![
            Neighbor {
                index: 0,
                dist2: 0.0,
            },
            Neighbor {
                index: 1,
                dist2: 1.0,
            },
            Neighbor {
                index: 2,
                dist2: 1.0,
            },
            Neighbor {
                index: 3,
                dist2: 4.0,
            },
            Neighbor {
                index: 4,
                dist2: 4.0,
            },
        ];
        let part = partition(&nb, &[0, 0, 0, 1, 1], 0);
        assert_eq!(part.intra, vec![0, 1, 2]);
        assert_eq!(part.inter, vec![3, 4]);
        assert_eq!(part.d_plus, 2.0);
        assert_eq!(part.d_minus, 8.0);
    }

    #[test]
    fn partition_pure_neighbourhood() {
        let idx = collinear(10);
        let nb = idx.knn(3, 5).unwrap();
        let part = partition(&nb, &[1; 10], 3);
        assert_eq!(part.intra.len(), 5);
        assert!(part.inter.is_empty());
        assert_eq!(part.d_minus, 0.0);
    }

    #[test]
    fn partition_two_plane_boundary() {
        let idx = collinear(16);
        let labels: Vec<usize> = (0..16).map(|i| usize::from(i >= 8)).collect();
        let part = partition(&idx.knn(7, 3).unwrap(), &labels, 7);
        assert_eq!(part.intra, vec![7, 6]);
        assert_eq!(part.inter, vec![8]);
        assert_eq!((part.d_plus, part.d_minus), (1.0, 1.0));
    }

    #[test]
    fn nearest_point_query() {
        let idx = collinear(10);
        assert_eq!(idx.nearest(&[3.4, 0.0, 0.0]).index, 3);
        // equidistant: smaller index
        assert_eq!(idx.nearest(&[3.5, 0.0, 0.0]).index, 3);
    }
}
