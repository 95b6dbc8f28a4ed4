use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `1 - sum p_i^2` over the two classes. `None` when both counts are zero.
pub fn gini_impurity(counts: [usize; 2]) -> Option<f64> {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return None;
    }
    let (p0, p1) = (counts[0] as f64 / n, counts[1] as f64 / n);
    Some(1.0 - p0 * p0 - p1 * p1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        /// Training rows reaching this leaf, `[non-churn, churn]`.
        counts: [usize; 2],
    },
}

/// Binary tree stored as a node array with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub width: usize,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index stops at a leaf"),
        }
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

/// What a split tries to purify.
pub(crate) enum Target<'a> {
    /// Gini impurity of the 0/1 labels.
    Class,
    /// Squared error of real-valued targets.
    Regression(&'a [f64]),
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: Option<usize>,
}

/// Weighted impurity `n * impurity` from `(n, sum t, sum t^2)`.
fn weighted_impurity(target: &Target, n: f64, s1: f64, s2: f64) -> f64 {
    match target {
        // n * gini = 2 c1 (n - c1) / n
        Target::Class => 2.0 * s1 * (n - s1) / n,
        Target::Regression(_) => (s2 - s1 * s1 / n).max(0.0),
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(
    x: &[Vec<f64>],
    t: &[f64],
    target: &Target,
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = idx.len();
    let (tot1, tot2) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + t[i], b + t[i] * t[i]));
    let parent = weighted_impurity(target, n as f64, tot1, tot2);
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let (mut l1, mut l2) = (0.0, 0.0);
        for pos in 0..n - 1 {
            let i = order[pos];
            l1 += t[i];
            l2 += t[i] * t[i];
            let nl = pos + 1;
            let (a, b) = (x[i][f], x[order[pos + 1]][f]);
            if a == b || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let child = weighted_impurity(target, nl as f64, l1, l2)
                + weighted_impurity(target, (n - nl) as f64, tot1 - l1, tot2 - l2);
            let gain = parent - child;
            if gain > 1e-12 && best.as_ref().is_none_or(|s| gain > s.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some(Split {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Greedy top-down growth. `idx` lists the training rows (repeats allowed,
/// as in a bootstrap sample); `leaf_value` maps a leaf's rows to its value.
pub(crate) fn grow<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[u8],
    target: &Target,
    idx: Vec<usize>,
    params: &GrowParams,
    rng: &mut R,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    let width = x[0].len();
    let t: Vec<f64> = match target {
        Target::Class => y.iter().map(|&v| f64::from(v)).collect(),
        Target::Regression(r) => r.to_vec(),
    };
    let n_features = params.max_features.map_or(width, |m| m.clamp(1, width));
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows, depth)
    let mut stack = vec![(0usize, idx, 0usize)];
    nodes.push(Node::Leaf {
        value: 0.0,
        counts: [0, 0],
    });
    while let Some((slot, rows, depth)) = stack.pop() {
        let churn = rows.iter().filter(|&&i| y[i] == 1).count();
        let counts = [rows.len() - churn, churn];
        let can_split = params.max_depth.is_none_or(|d| depth < d) && rows.len() >= 2 * params.min_leaf;
        let split = if can_split {
            let features: Vec<usize> = if n_features < width {
                let mut f = sample(rng, width, n_features).into_vec();
                f.sort_unstable();
                f
            } else {
                (0..width).collect()
            };
            best_split(x, &t, target, &rows, &features, params.min_leaf)
        } else {
            None
        };
        match split {
            Some(s) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
                let left = nodes.len();
                let right = left + 1;
                let placeholder = Node::Leaf {
                    value: 0.0,
                    counts: [0, 0],
                };
                nodes.push(placeholder.clone());
                nodes.push(placeholder);
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                stack.push((right, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
            None => {
                nodes[slot] = Node::Leaf {
                    value: leaf_value(&rows),
                    counts,
                };
            }
        }
    }
    Tree { nodes, width }
}

pub(crate) fn churn_fraction(y: &[u8]) -> impl Fn(&[usize]) -> f64 + '_ {
    move |rows: &[usize]| rows.iter().filter(|&&i| y[i] == 1).count() as f64 / rows.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DTreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for DTreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

/// CART classification tree on Gini gain; the score is the leaf's churn
/// fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree: Tree,
}

impl DecisionTree {
    pub(crate) fn fit(p: &DTreeParams, x: &[Vec<f64>], y: &[u8]) -> Self {
        let params = GrowParams {
            max_depth: Some(p.max_depth),
            min_leaf: p.min_leaf,
            max_features: None,
        };
        // all features at every node; the generator is never drawn from
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = grow(x, y, &Target::Class, (0..x.len()).collect(), &params, &mut rng, &churn_fraction(y));
        Self { tree }
    }

    pub fn width(&self) -> usize {
        self.tree.width
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        self.tree.leaf_value(row)
    }
}
