//! Composite Gauss–Legendre grids.
//!
//! A continuous support is discretized once into panels, each carrying the
//! same reference Gauss–Legendre rule. Every downstream computation (moments,
//! entropies, cumulative utility) runs on the resulting node/weight pairs, so
//! a continuous problem becomes a weighted discrete one.
//!
//! Panel edges may be pinned at interior *knots*. A function with a jump at a
//! knot (an indicator constraint, an assessed utility point) is then smooth on
//! every panel and is integrated exactly.

use std::ops::Range;
use std::sync::Arc;

/// Gauss–Legendre rule on [-1, 1] with its spectral integration matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `integration[i * n + j]` = ∫_{-1}^{t_i} ℓ_j(t) dt for the Lagrange basis ℓ_j.
    integration: Vec<f64>,
}

/// Legendre polynomials P_0..=P_max evaluated at `t`.
fn legendre_table(t: f64, max: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(max + 1);
    p.push(1.0);
    if max >= 1 {
        p.push(t);
    }
    for k in 1..max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

impl ReferenceRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least two nodes");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let p = legendre_table(t, n);
                let step = p[n] / (nf * (t * p[n] - p[n - 1]) / (t * t - 1.0));
                t -= step;
                if step.abs() <= 1e-16 {
                    break;
                }
            }
            let p = legendre_table(t, n);
            let deriv = nf * (t * p[n] - p[n - 1]) / (t * t - 1.0);
            nodes.push(t);
            weights.push(2.0 / ((1.0 - t * t) * deriv * deriv));
        }
        // Newton from the cosine guesses yields descending roots.
        nodes.reverse();
        weights.reverse();

        let mut rule = ReferenceRule {
            nodes,
            weights,
            integration: Vec::new(),
        };
        let mut integration = Vec::with_capacity(n * n);
        for i in 0..n {
            integration.extend(rule.partial_row(rule.nodes[i]));
        }
        rule.integration = integration;
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coefficients c_j with ∫_{-1}^{t} f ≈ Σ_j c_j f(t_j), exact for
    /// polynomials of degree below the node count.
    pub fn partial_row(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        let at = legendre_table(t, n);
        // ∫_{-1}^{t} P_k = (P_{k+1}(t) - P_{k-1}(t)) / (2k + 1) for k >= 1
        let mut antideriv = Vec::with_capacity(n);
        antideriv.push(t + 1.0);
        for k in 1..n {
            antideriv.push((at[k + 1] - at[k - 1]) / (2.0 * k as f64 + 1.0));
        }
        (0..n)
            .map(|j| {
                let pj = legendre_table(self.nodes[j], n - 1);
                let sum: f64 = (0..n)
                    .map(|k| (2.0 * k as f64 + 1.0) * 0.5 * pj[k] * antideriv[k])
                    .sum();
                self.weights[j] * sum
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    /// Index of the panel's first node in the grid.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Discrete,
    Composite {
        rule: Arc<ReferenceRule>,
        panels: Vec<Panel>,
    },
}

/// Quadrature grid: nodes with weights, plus the panel layout for continuous
/// supports. Discrete supports carry unit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Node index ranges between consecutive knots (or the whole grid).
    segments: Vec<Range<usize>>,
    layout: Layout,
}

impl Grid {
    pub fn discrete(points: &[f64]) -> Self {
        Grid {
            nodes: points.to_vec(),
            weights: vec![1.0; points.len()],
            segments: std::iter::once(0..points.len()).collect(),
            layout: Layout::Discrete,
        }
    }

    /// Composite rule over `edges` (panel boundaries, strictly increasing).
    /// `knots` lists the interior edges where segments break.
    pub fn composite(edges: &[f64], knots: &[f64], rule: Arc<ReferenceRule>) -> Self {
        let per = rule.len();
        let mut nodes = Vec::with_capacity(per * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut panels = Vec::with_capacity(edges.len() - 1);
        let mut segments = Vec::new();
        let mut seg_start = 0;
        for (k, pair) in edges.windows(2).enumerate() {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            panels.push(Panel {
                lo,
                hi,
                start: k * per,
            });
            for (t, w) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(mid + half * t);
                weights.push(half * w);
            }
            if knots.contains(&hi) {
                segments.push(seg_start..nodes.len());
                seg_start = nodes.len();
            }
        }
        if seg_start < nodes.len() {
            segments.push(seg_start..nodes.len());
        }
        Grid {
            nodes,
            weights,
            segments,
            layout: Layout::Composite { rule, panels },
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.layout, Layout::Composite { .. })
    }

    pub fn panels(&self) -> &[Panel] {
        match &self.layout {
            Layout::Discrete => &[],
            Layout::Composite { panels, .. } => panels,
        }
    }

    /// Node ranges between knots; differences never straddle a segment edge.
    pub fn segments(&self) -> &[Range<usize>] {
        &self.segments
    }

    /// Σ w_i f_i, accumulated in node order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Running integral of `values` from the left end up to each node.
    /// For a discrete grid this is the running sum of masses.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len());
        match &self.layout {
            Layout::Discrete => values
                .iter()
                .scan(0.0, |acc, v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect(),
            Layout::Composite { rule, panels } => {
                let per = rule.len();
                let mut out = Vec::with_capacity(self.len());
                let mut base = 0.0;
                for panel in panels {
                    let local = &values[panel.start..panel.start + per];
                    let half = 0.5 * (panel.hi - panel.lo);
                    for i in 0..per {
                        let row = &rule.integration[i * per..(i + 1) * per];
                        let part: f64 = row.iter().zip(local).map(|(c, v)| c * v).sum();
                        out.push(base + half * part);
                    }
                    let full: f64 = rule.weights().iter().zip(local).map(|(w, v)| w * v).sum();
                    base += half * full;
                }
                out
            }
        }
    }

    /// Integral of `values` (interpolated panel-wise) from the left end to `x`.
    pub fn cumulative_at(&self, values: &[f64], x: f64) -> f64 {
        assert_eq!(values.len(), self.len());
        match &self.layout {
            Layout::Discrete => self
                .nodes
                .iter()
                .zip(values)
                .take_while(|(n, _)| **n <= x)
                .map(|(_, v)| v)
                .sum(),
            Layout::Composite { rule, panels } => {
                let per = rule.len();
                let mut base = 0.0;
                for panel in panels {
                    let local = &values[panel.start..panel.start + per];
                    let half = 0.5 * (panel.hi - panel.lo);
                    if x >= panel.hi {
                        let full: f64 = rule.weights().iter().zip(local).map(|(w, v)| w * v).sum();
                        base += half * full;
                        continue;
                    }
                    if x <= panel.lo {
                        break;
                    }
                    let t = (x - 0.5 * (panel.hi + panel.lo)) / half;
                    let row = rule.partial_row(t);
                    let part: f64 = row.iter().zip(local).map(|(c, v)| c * v).sum();
                    return base + half * part;
                }
                base
            }
        }
    }

    /// Three-point derivative estimate at every node. Interior nodes of a
    /// segment use the non-uniform central stencil, segment ends the
    /// one-sided three-point stencil; both are exact for quadratics.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len());
        let x = &self.nodes;
        let mut out = vec![0.0; self.len()];
        for seg in &self.segments {
            let (s, e) = (seg.start, seg.end);
            if e - s < 3 {
                if e - s == 2 {
                    let d = (values[s + 1] - values[s]) / (x[s + 1] - x[s]);
                    out[s] = d;
                    out[s + 1] = d;
                }
                continue;
            }
            for i in s..e {
                let (j0, j1, j2) = if i == s {
                    (s, s + 1, s + 2)
                } else if i == e - 1 {
                    (e - 3, e - 2, e - 1)
                } else {
                    (i - 1, i, i + 1)
                };
                out[i] = lagrange_slope(
                    [x[j0], x[j1], x[j2]],
                    [values[j0], values[j1], values[j2]],
                    x[i],
                );
            }
        }
        out
    }

    /// True when node `i` has a neighbour on each side within its segment.
    pub fn is_segment_interior(&self, i: usize) -> bool {
        self.segments
            .iter()
            .any(|seg| i > seg.start && i + 1 < seg.end)
    }
}

/// Slope at `at` of the parabola through three points.
fn lagrange_slope(x: [f64; 3], f: [f64; 3], at: f64) -> f64 {
    let d0 = ((at - x[1]) + (at - x[2])) / ((x[0] - x[1]) * (x[0] - x[2]));
    let d1 = ((at - x[0]) + (at - x[2])) / ((x[1] - x[0]) * (x[1] - x[2]));
    let d2 = ((at - x[0]) + (at - x[1])) / ((x[2] - x[0]) * (x[2] - x[1]));
    d0 * f[0] + d1 * f[1] + d2 * f[2]
}
