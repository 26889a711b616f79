//! Finite relational structures for the random ternary relation and the graph theories.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Relations {
    pub r: BTreeSet<[usize; 3]>,
    /// Edges stored as `(min, max)`.
    pub e: BTreeSet<(usize, usize)>,
}

impl Relations {
    pub fn holds_r(&self, a: usize, b: usize, c: usize) -> bool {
        self.r.contains(&[a, b, c])
    }

    pub fn holds_e(&self, a: usize, b: usize) -> bool {
        a != b && self.e.contains(&(a.min(b), a.max(b)))
    }

    pub fn add_r(&mut self, a: usize, b: usize, c: usize) {
        self.r.insert([a, b, c]);
    }

    /// Adds an edge; loops are rejected by returning `false`.
    pub fn add_e(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        self.e.insert((a.min(b), a.max(b)));
        true
    }

    pub fn neighbours(&self, v: usize) -> BTreeSet<usize> {
        self.e
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    /// Some clique of size `s` in the edge graph, if one exists.
    pub fn find_clique(&self, s: usize) -> Option<Vec<usize>> {
        if s == 0 {
            return Some(Vec::new());
        }
        let verts: BTreeSet<usize> = self.e.iter().flat_map(|&(a, b)| [a, b]).collect();
        if s == 1 {
            return verts.into_iter().next().map(|v| vec![v]);
        }
        let mut chosen = Vec::new();
        self.extend_clique(s, verts, &mut chosen).then_some(chosen)
    }

    fn extend_clique(&self, s: usize, cands: BTreeSet<usize>, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == s {
            return true;
        }
        if chosen.len() + cands.len() < s {
            return false;
        }
        for &v in &cands {
            let next: BTreeSet<usize> =
                cands.iter().copied().filter(|&w| w > v && self.holds_e(v, w)).collect();
            chosen.push(v);
            if self.extend_clique(s, next, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_detection() {
        let mut g = Relations::default();
        g.add_e(0, 1);
        g.add_e(1, 2);
        assert!(g.find_clique(3).is_none());
        g.add_e(2, 0);
        assert_eq!(g.find_clique(3), Some(vec![0, 1, 2]));
        assert!(!g.add_e(3, 3));
        assert!(g.holds_e(2, 1));
    }
}
