use serde::{Deserialize, Serialize};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Partition of graph vertices. Component ids are assigned in order of
/// each component's smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSet {
    /// Component id of each vertex.
    pub labels: Vec<usize>,
    /// Smallest vertex of each component.
    pub representatives: Vec<usize>,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn members(&self, component: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == component)
            .map(|(v, _)| v)
    }
}

pub fn components_from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> ComponentSet {
    let mut uf = UnionFind::new(vertex_count);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    ComponentSet::from_union_find(&mut uf)
}

impl ComponentSet {
    pub fn from_union_find(uf: &mut UnionFind) -> Self {
        let count = uf.parent.len();
        let mut root_label = vec![usize::MAX; count];
        let mut labels = Vec::with_capacity(count);
        let mut representatives = Vec::new();
        for v in 0..count {
            let root = uf.find(v);
            if root_label[root] == usize::MAX {
                root_label[root] = representatives.len();
                representatives.push(v);
            }
            labels.push(root_label[root]);
        }
        ComponentSet {
            labels,
            representatives,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graphs() {
        assert!(components_from_edges(0, &[]).is_empty());
        let c = components_from_edges(3, &[(0, 1)]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.labels, vec![0, 0, 1]);
        assert_eq!(c.representatives, vec![0, 2]);
        let path = components_from_edges(5, &[(3, 4), (0, 1), (2, 3), (1, 2)]);
        assert_eq!(path.len(), 1);
        assert_eq!(path.members(0).count(), 5);
    }

    #[test]
    fn ids_follow_smallest_vertex() {
        let c = components_from_edges(6, &[(5, 0), (4, 1), (2, 3)]);
        assert_eq!(c.representatives, vec![0, 1, 2]);
        assert_eq!(c.labels, vec![0, 1, 2, 2, 1, 0]);
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        assert!(uf.same(0, 1));
        assert!(!uf.same(2, 3));
    }
}
