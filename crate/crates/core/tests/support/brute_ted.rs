//! Exhaustive edit distance by breadth-first search over small ordered
//! forests. Slow and obviously correct; used to check the fast algorithm.

use std::collections::{HashMap, VecDeque};

use proofforge::evalmetrics::OpTree;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct T {
    pub label: char,
    pub kids: Vec<T>,
}

impl T {
    pub fn size(&self) -> usize {
        1 + self.kids.iter().map(T::size).sum::<usize>()
    }

    pub fn to_optree(&self) -> OpTree {
        OpTree::node(self.label.to_string(), self.kids.iter().map(T::to_optree).collect())
    }
}

fn forest_size(f: &[T]) -> usize {
    f.iter().map(T::size).sum()
}

/// Every forest one edit away: relabel a node, delete a node (its children
/// take its place), or insert a node adopting a run of siblings.
fn neighbours(f: &[T], labels: &[char], grow: bool) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for i in 0..f.len() {
        for &l in labels {
            if l != f[i].label {
                let mut g = f.to_vec();
                g[i].label = l;
                out.push(g);
            }
        }
        let mut g = f[..i].to_vec();
        g.extend(f[i].kids.iter().cloned());
        g.extend(f[i + 1..].iter().cloned());
        out.push(g);
        for sub in neighbours(&f[i].kids, labels, grow) {
            let mut g = f.to_vec();
            g[i].kids = sub;
            out.push(g);
        }
    }
    if grow {
        for i in 0..=f.len() {
            for j in i..=f.len() {
                for &l in labels {
                    let mut g = f[..i].to_vec();
                    g.push(T {
                        label: l,
                        kids: f[i..j].to_vec(),
                    });
                    g.extend(f[j..].iter().cloned());
                    out.push(g);
                }
            }
        }
    }
    out
}

/// Distances from `source` to every forest of at most `max_nodes` nodes.
/// An optimal script can always run its deletions before its insertions,
/// so capping the size at the larger of the two trees loses nothing.
pub fn distances_from(source: &T, labels: &[char], max_nodes: usize) -> HashMap<Vec<T>, usize> {
    let start = vec![source.clone()];
    let mut dist = HashMap::from([(start.clone(), 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some(f) = queue.pop_front() {
        let d = dist[&f];
        for g in neighbours(&f, labels, forest_size(&f) < max_nodes) {
            if !dist.contains_key(&g) {
                dist.insert(g.clone(), d + 1);
                queue.push_back(g);
            }
        }
    }
    dist
}

fn forests(n: usize, labels: &[char]) -> Vec<Vec<T>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for head in trees(first, labels) {
            for rest in forests(n - first, labels) {
                let mut f = vec![head.clone()];
                f.extend(rest);
                out.push(f);
            }
        }
    }
    out
}

/// All ordered labelled trees with exactly `n` nodes.
pub fn trees(n: usize, labels: &[char]) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &l in labels {
        for kids in forests(n - 1, labels) {
            out.push(T { label: l, kids });
        }
    }
    out
}

pub fn trees_up_to(n: usize, labels: &[char]) -> Vec<T> {
    (1..=n).flat_map(|k| trees(k, labels)).collect()
}

pub fn brute_ted(a: &T, b: &T, labels: &[char]) -> usize {
    let cap = a.size().max(b.size());
    distances_from(a, labels, cap)[&vec![b.clone()]]
}
