//! Greedy top-down tree construction shared by every learner.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{gini_impurity, LeafValue, Node, Tree};
use crate::scalar::Scalar;

/// One training sample. Bootstrap duplicates appear as repeated entries.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample<T> {
    pub row: usize,
    pub y: u8,
    /// Weight used by the Gini criterion.
    pub w: T,
    pub g: T,
    pub h: T,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Criterion<T> {
    /// Weighted Gini decrease; leaves hold a distribution or a vote.
    Gini { vote: bool },
    /// Second-order gain on (g, h); leaves hold `-G / (H + lambda)`.
    Newton { lambda: T, gamma: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ThresholdRule {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams<T> {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` examines every non-constant one.
    pub max_features: Option<usize>,
    pub thresholds: ThresholdRule,
    pub criterion: Criterion<T>,
}

#[derive(Debug, Clone, Copy)]
struct Stats<T> {
    count: usize,
    w: [T; 2],
    labels: [usize; 2],
    g: T,
    h: T,
}

impl<T: Scalar> Stats<T> {
    fn zero() -> Self {
        Stats { count: 0, w: [T::zero(); 2], labels: [0; 2], g: T::zero(), h: T::zero() }
    }

    fn add(&mut self, s: &Sample<T>) {
        let c = usize::from(s.y);
        self.count += 1;
        self.w[c] = self.w[c] + s.w;
        self.labels[c] += 1;
        self.g = self.g + s.g;
        self.h = self.h + s.h;
    }

    fn minus(&self, o: &Stats<T>) -> Stats<T> {
        Stats {
            count: self.count - o.count,
            w: [self.w[0] - o.w[0], self.w[1] - o.w[1]],
            labels: [self.labels[0] - o.labels[0], self.labels[1] - o.labels[1]],
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    gain: T,
}

struct Grower<'a, T> {
    cols: &'a [Vec<T>],
    samples: &'a [Sample<T>],
    params: GrowParams<T>,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node<T>>,
    tol: T,
}

/// Grow one tree on `samples`, reading feature values column-major from `cols`.
pub(crate) fn grow<T: Scalar>(
    cols: &[Vec<T>],
    samples: &[Sample<T>],
    params: GrowParams<T>,
    rng: &mut ChaCha8Rng,
) -> Tree<T> {
    let mut g = Grower { cols, samples, params, rng, nodes: Vec::new(), tol: T::epsilon() * T::cast(64.0) };
    let all: Vec<usize> = (0..samples.len()).collect();
    g.build(all, 0);
    Tree { nodes: g.nodes }
}

impl<T: Scalar> Grower<'_, T> {
    fn stats(&self, idx: &[usize]) -> Stats<T> {
        let mut s = Stats::zero();
        for &i in idx {
            s.add(&self.samples[i]);
        }
        s
    }

    /// `(weight, impurity)` recorded on a node.
    fn node_measure(&self, s: &Stats<T>) -> (T, T) {
        match self.params.criterion {
            Criterion::Gini { .. } => {
                let w = s.w[0] + s.w[1];
                (w, gini_impurity(s.w).unwrap_or_else(T::zero))
            }
            Criterion::Newton { .. } => {
                let c = [T::from_count(s.labels[0]), T::from_count(s.labels[1])];
                (T::from_count(s.count), gini_impurity(c).unwrap_or_else(T::zero))
            }
        }
    }

    fn leaf_value(&self, s: &Stats<T>) -> LeafValue<T> {
        match self.params.criterion {
            Criterion::Gini { vote: false } => {
                let total = s.w[0] + s.w[1];
                if total > T::zero() {
                    LeafValue::Distribution([s.w[0] / total, s.w[1] / total])
                } else {
                    let total = T::from_count(s.count.max(1));
                    LeafValue::Distribution([
                        T::from_count(s.labels[0]) / total,
                        T::from_count(s.labels[1]) / total,
                    ])
                }
            }
            Criterion::Gini { vote: true } => LeafValue::Vote(u8::from(s.w[1] > s.w[0])),
            Criterion::Newton { lambda, .. } => LeafValue::Score(-s.g / (s.h + lambda)),
        }
    }

    /// Score of a split; `None` when it is not admissible.
    fn gain(&self, parent: &Stats<T>, left: &Stats<T>) -> Option<T> {
        let msl = self.params.min_samples_leaf;
        let right = parent.minus(left);
        if left.count < msl || right.count < msl {
            return None;
        }
        match self.params.criterion {
            Criterion::Gini { .. } => {
                let weighted = |s: &Stats<T>| {
                    let w = s.w[0] + s.w[1];
                    w * gini_impurity(s.w).unwrap_or_else(T::zero)
                };
                Some(weighted(parent) - weighted(left) - weighted(&right))
            }
            Criterion::Newton { lambda, gamma } => {
                let term = |s: &Stats<T>| s.g * s.g / (s.h + lambda);
                Some(T::cast(0.5) * (term(left) + term(&right) - term(parent)) - gamma)
            }
        }
    }

    fn min_gain(&self, parent: &Stats<T>) -> T {
        let scale = match self.params.criterion {
            Criterion::Gini { .. } => parent.w[0] + parent.w[1],
            Criterion::Newton { lambda, .. } => T::one() + parent.g * parent.g / (parent.h + lambda),
        };
        self.tol * scale
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let stats = self.stats(&idx);
        let (weight, impurity) = self.node_measure(&stats);
        let id = self.nodes.len();
        let leaf = Node::Leaf { value: self.leaf_value(&stats), n_samples: stats.count, weight, impurity };
        self.nodes.push(leaf);

        let depth_left = self.params.max_depth.is_none_or(|m| depth < m);
        let splittable = match self.params.criterion {
            Criterion::Gini { .. } => impurity > T::zero(),
            Criterion::Newton { .. } => true,
        };
        if !depth_left || !splittable || stats.count < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(best) = self.find_split(&idx, &stats) else {
            return id;
        };
        let col = &self.cols[best.feature];
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| col[self.samples[i].row] < best.threshold);
        let n_samples = stats.count;
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] =
            Node::Split { feature: best.feature, threshold: best.threshold, left, right, n_samples, weight, impurity };
        id
    }

    fn find_split(&mut self, idx: &[usize], parent: &Stats<T>) -> Option<Candidate<T>> {
        let mut features: Vec<usize> = (0..self.cols.len())
            .filter(|&f| {
                let col = &self.cols[f];
                let first = col[self.samples[idx[0]].row];
                idx.iter().any(|&i| col[self.samples[i].row] != first)
            })
            .collect();
        if let Some(m) = self.params.max_features {
            if m < features.len() {
                features.shuffle(self.rng);
                features.truncate(m);
                features.sort_unstable();
            }
        }
        let min_gain = self.min_gain(parent);
        let mut best: Option<Candidate<T>> = None;
        for f in features {
            let cand = match self.params.thresholds {
                ThresholdRule::Best => self.best_threshold(f, idx, parent),
                ThresholdRule::Random => self.random_threshold(f, idx, parent),
            };
            if let Some(c) = cand {
                if c.gain > min_gain && best.as_ref().is_none_or(|b| c.gain > b.gain + self.tol * b.gain.abs()) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_threshold(&self, f: usize, idx: &[usize], parent: &Stats<T>) -> Option<Candidate<T>> {
        let col = &self.cols[f];
        let mut order: Vec<(T, usize)> = idx.iter().map(|&i| (col[self.samples[i].row], i)).collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        let mut left = Stats::zero();
        let mut best: Option<Candidate<T>> = None;
        for k in 0..order.len() - 1 {
            left.add(&self.samples[order[k].1]);
            let (a, b) = (order[k].0, order[k + 1].0);
            if !(a < b) {
                continue;
            }
            let Some(gain) = self.gain(parent, &left) else { continue };
            if best.as_ref().is_none_or(|c| gain > c.gain + self.tol * c.gain.abs()) {
                best = Some(Candidate { feature: f, threshold: midpoint(a, b), gain });
            }
        }
        best
    }

    fn random_threshold(&mut self, f: usize, idx: &[usize], parent: &Stats<T>) -> Option<Candidate<T>> {
        let col = &self.cols[f];
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &i in idx {
            let v = col[self.samples[i].row];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let u: f64 = self.rng.gen();
        let mut threshold = lo + T::cast(u) * (hi - lo);
        if !(threshold > lo) || threshold > hi {
            threshold = hi;
        }
        let mut left = Stats::zero();
        for &i in idx {
            if col[self.samples[i].row] < threshold {
                left.add(&self.samples[i]);
            }
        }
        let gain = self.gain(parent, &left)?;
        Some(Candidate { feature: f, threshold, gain })
    }
}

/// Midpoint of `a < b`, guaranteed to satisfy `a < m <= b`.
pub(crate) fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = a + (b - a) / T::cast(2.0);
    if m > a && m <= b {
        m
    } else {
        b
    }
}
