//! Ordered tree edit distance (Zhang–Shasha, unit costs) and the normalized
//! similarity built on it.

use serde::{Deserialize, Serialize};

use super::OpTree;

/// Postorder view of a tree: labels, leftmost-leaf indices and keyroots.
struct Flat<'a> {
    labels: Vec<&'a str>,
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Flat<'a> {
    fn new(root: &'a OpTree) -> Self {
        let mut labels = Vec::new();
        let mut lml = Vec::new();
        fn walk<'a>(t: &'a OpTree, labels: &mut Vec<&'a str>, lml: &mut Vec<usize>) -> usize {
            let mut first = None;
            for c in &t.children {
                let l = walk(c, labels, lml);
                first.get_or_insert(l);
            }
            let me = labels.len();
            labels.push(&t.label);
            let l = first.unwrap_or(me);
            lml.push(l);
            l
        }
        walk(root, &mut labels, &mut lml);
        // a keyroot is the highest node with a given leftmost leaf
        let n = labels.len();
        let mut keyroots = Vec::new();
        let mut seen = vec![false; n];
        for i in (0..n).rev() {
            if !seen[lml[i]] {
                seen[lml[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Flat { labels, lml, keyroots }
    }
}

/// Minimum number of node insertions, deletions and relabelings turning `a`
/// into `b`.
pub fn ted(a: &OpTree, b: &OpTree) -> usize {
    let fa = Flat::new(a);
    let fb = Flat::new(b);
    let (n, m) = (fa.labels.len(), fb.labels.len());
    let mut tree = vec![vec![0usize; m]; n];
    let mut forest = vec![vec![0usize; m + 1]; n + 1];
    for &i in &fa.keyroots {
        for &j in &fb.keyroots {
            let (li, lj) = (fa.lml[i], fb.lml[j]);
            // forest[x][y]: distance between a[li..li+x) and b[lj..lj+y)
            forest[0][0] = 0;
            for x in 1..=i - li + 1 {
                forest[x][0] = forest[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                forest[0][y] = forest[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                let ai = li + x - 1;
                for y in 1..=j - lj + 1 {
                    let bj = lj + y - 1;
                    let del = forest[x - 1][y] + 1;
                    let ins = forest[x][y - 1] + 1;
                    if fa.lml[ai] == li && fb.lml[bj] == lj {
                        let relabel = usize::from(fa.labels[ai] != fb.labels[bj]);
                        let d = del.min(ins).min(forest[x - 1][y - 1] + relabel);
                        forest[x][y] = d;
                        tree[ai][bj] = d;
                    } else {
                        let px = fa.lml[ai] - li;
                        let py = fb.lml[bj] - lj;
                        forest[x][y] = del.min(ins).min(forest[px][py] + tree[ai][bj]);
                    }
                }
            }
        }
    }
    tree[n - 1][m - 1]
}

/// How the edit cost is scaled into a similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `1 - ted / (|A| + |B|)`
    #[default]
    SumOfSizes,
    /// `1 - ted / max(|A|, |B|)`
    MaxSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtedResult {
    pub ted_cost: usize,
    pub size_a: usize,
    pub size_b: usize,
    pub similarity: f64,
}

pub fn gted_similarity(a: &OpTree, b: &OpTree) -> GtedResult {
    gted_with(a, b, Normalization::SumOfSizes)
}

pub fn gted_with(a: &OpTree, b: &OpTree, norm: Normalization) -> GtedResult {
    let cost = ted(a, b);
    let (size_a, size_b) = (a.size(), b.size());
    let denom = match norm {
        Normalization::SumOfSizes => size_a + size_b,
        Normalization::MaxSize => size_a.max(size_b),
    };
    GtedResult {
        ted_cost: cost,
        size_a,
        size_b,
        similarity: 1.0 - cost as f64 / denom as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leaf(l: &str) -> OpTree {
        OpTree::leaf(l)
    }

    fn f(l: &str, kids: Vec<OpTree>) -> OpTree {
        OpTree::node(l, kids)
    }

    #[test]
    fn small_cases() {
        let fab = f("f", vec![leaf("a"), leaf("b")]);
        let fac = f("f", vec![leaf("a"), leaf("c")]);
        assert_eq!(ted(&fab, &fab), 0);
        assert_eq!(ted(&fab, &fac), 1);
        assert_eq!(ted(&leaf("x"), &leaf("y")), 1);
        let g = gted_similarity(&fab, &fac);
        assert_eq!((g.ted_cost, g.size_a, g.size_b), (1, 3, 3));
        assert!((g.similarity - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(gted_with(&fab, &fac, Normalization::MaxSize).similarity, 1.0 - 1.0 / 3.0);
    }

    #[test]
    fn textbook_example() {
        // the textbook pair for Zhang-Shasha: distance 2
        let t1 = f("f", vec![f("d", vec![leaf("a"), f("c", vec![leaf("b")])]), leaf("e")]);
        let t2 = f("f", vec![f("c", vec![f("d", vec![leaf("a"), leaf("b")])]), leaf("e")]);
        assert_eq!(ted(&t1, &t2), 2);
    }

    #[test]
    fn insert_and_delete_whole_trees() {
        let a = f("r", vec![leaf("a"), leaf("b"), leaf("c")]);
        assert_eq!(ted(&a, &leaf("r")), 3);
        assert_eq!(ted(&leaf("r"), &a), 3);
        assert_eq!(ted(&a, &f("r", vec![f("x", vec![leaf("a"), leaf("b")]), leaf("c")])), 1);
    }

    fn arb_tree() -> impl Strategy<Value = OpTree> {
        let leafy = prop::sample::select(vec!["a", "b", "c"]).prop_map(OpTree::leaf);
        leafy.prop_recursive(3, 6, 3, |inner| {
            (prop::sample::select(vec!["a", "b", "c"]), prop::collection::vec(inner, 1..3))
                .prop_map(|(l, kids)| OpTree::node(l, kids))
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_tree(), b in arb_tree(), c in arb_tree()) {
            prop_assert_eq!(ted(&a, &a), 0);
            prop_assert_eq!(ted(&a, &b), ted(&b, &a));
            prop_assert!(ted(&a, &c) <= ted(&a, &b) + ted(&b, &c));
            prop_assert!(ted(&a, &b) <= a.size() + b.size());
            prop_assert!(ted(&a, &b) >= a.size().abs_diff(b.size()));
            prop_assert_eq!(ted(&a, &b) == 0, a == b);
        }
    }
}
