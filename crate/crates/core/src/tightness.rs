//! A family of channels whose leakage approaches the diameter bound.
//!
//! The graph is a 4-clique plus `n − 1` disjoint edges, so it has `n`
//! components of diameter 1 and is not regular. The channel is block
//! diagonal with one block per component and is private at level
//! `ln(1 + δ)`. As `δ → 0` the ratio of bound to leakage tends to 1.

use crate::bounds::leakage_upper_bound;
use crate::channel::{leakage_uniform, minimal_epsilon, ChannelMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::report::Float;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "the tight family needs n ≥ 2, got {n}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "δ must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}

/// `K₄` on `0..4` plus edges `{2k, 2k+1}` for `k = 2..=n`.
pub fn sharpness_graph(n: usize) -> Result<Graph> {
    check_n(n)?;
    let mut edges: Vec<(usize, usize)> = Graph::complete(4).edges().collect();
    edges.extend((2..=n).map(|k| (2 * k, 2 * k + 1)));
    Graph::from_edges(2 * n + 2, edges)
}

/// Block-diagonal channel on [`sharpness_graph`]. The 4×4 block has rows
/// `(1+δ, 1+δ, 1, 1)` rotated right by one per row; each 2×2 block is
/// `[[2+2δ, 2], [2, 2+2δ]]`. Every block is scaled by `1/(4+2δ)`.
pub fn sharpness_channel(n: usize, delta: f64) -> Result<ChannelMatrix> {
    check_n(n)?;
    check_delta(delta)?;
    let l = 2 * n + 2;
    let z = 4.0 + 2.0 * delta;
    let hi = (1.0 + delta) / z;
    let lo = 1.0 / z;
    let mut data = vec![0.0; l * l];
    for i in 0..4 {
        for j in 0..4 {
            data[i * l + j] = if (j + 4 - i) % 4 < 2 { hi } else { lo };
        }
    }
    let diag = (2.0 + 2.0 * delta) / z;
    let off = 2.0 / z;
    for k in 2..=n {
        let (a, b) = (2 * k, 2 * k + 1);
        data[a * l + a] = diag;
        data[a * l + b] = off;
        data[b * l + a] = off;
        data[b * l + b] = diag;
    }
    ChannelMatrix::new(l, l, data)
}

/// `log₂(n(1+δ))`, the bound at level `ln(1+δ)`.
pub fn closed_form_bound(n: usize, delta: f64) -> f64 {
    (n as f64 * (1.0 + delta)).log2()
}

/// `log₂((4(1+δ) + (2n−2)(2+2δ)) / (4+2δ))`, the channel's leakage.
pub fn closed_form_leakage(n: usize, delta: f64) -> f64 {
    let num = 4.0 * (1.0 + delta) + (2.0 * n as f64 - 2.0) * (2.0 + 2.0 * delta);
    (num / (4.0 + 2.0 * delta)).log2()
}

/// `(bound_bits, leakage_bits, bound / leakage)` from the closed forms.
pub fn sharpness_ratio(n: usize, delta: f64) -> Result<(f64, f64, f64)> {
    check_n(n)?;
    check_delta(delta)?;
    let b = closed_form_bound(n, delta);
    let l = closed_form_leakage(n, delta);
    Ok((b, l, b / l))
}

/// One member of the family with closed-form and measured values.
#[derive(Debug, Clone)]
pub struct SharpnessInstance {
    pub n: usize,
    pub delta: f64,
    pub graph: Graph,
    pub channel: ChannelMatrix,
    /// `ln(1+δ)`.
    pub epsilon: f64,
    pub bound_bits: f64,
    pub leakage_bits: f64,
    pub ratio: f64,
    pub measured_epsilon: f64,
    pub measured_leakage_bits: f64,
    /// Bound recomputed from the graph's components at `measured_epsilon`.
    pub measured_bound_bits: f64,
}

impl SharpnessInstance {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        let (bound_bits, leakage_bits, ratio) = sharpness_ratio(n, delta)?;
        let graph = sharpness_graph(n)?;
        let channel = sharpness_channel(n, delta)?;
        let measured_epsilon = minimal_epsilon(&channel, &graph)?;
        let measured_leakage_bits = leakage_uniform(&channel).leakage_bits;
        let measured_bound_bits = leakage_upper_bound(&graph, measured_epsilon);
        Ok(Self {
            n,
            delta,
            epsilon: delta.ln_1p(),
            graph,
            channel,
            bound_bits,
            leakage_bits,
            ratio,
            measured_epsilon,
            measured_leakage_bits,
            measured_bound_bits,
        })
    }

    /// `|measured leakage − closed-form leakage|`.
    pub fn closed_form_gap(&self) -> f64 {
        (self.measured_leakage_bits - self.leakage_bits).abs()
    }
}

pub const SWEEP_HEADER: [&str; 7] = [
    "n",
    "delta",
    "epsilon",
    "bound_bits",
    "leakage_bits",
    "ratio",
    "closed_form_gap",
];

/// One instance per `(n, δ)`, `n` outer and `δ` inner.
pub fn sharpness_sweep(ns: &[usize], deltas: &[f64]) -> Result<Vec<SharpnessInstance>> {
    let mut out = Vec::with_capacity(ns.len() * deltas.len());
    for &n in ns {
        for &d in deltas {
            out.push(SharpnessInstance::new(n, d)?);
        }
    }
    Ok(out)
}

pub fn sweep_csv(rows: &[SharpnessInstance]) -> String {
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            Float(r.delta),
            Float(r.epsilon),
            Float(r.bound_bits),
            Float(r.leakage_bits),
            Float(r.ratio),
            Float(r.closed_form_gap())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn graph_shape() {
        let g = sharpness_graph(2).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (6, 7));
        let c = g.components();
        assert_eq!(c.diameters, vec![1, 1]);

        let g = sharpness_graph(5).unwrap();
        let mut degrees: Vec<usize> = (0..12).map(|v| g.degree(v)).collect();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(degrees, vec![3, 3, 3, 3, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert!(sharpness_graph(1).is_err());
    }

    #[test]
    fn channel_layout() {
        let k = sharpness_channel(2, 1.0).unwrap();
        let first = [2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0];
        for (j, &x) in first.iter().enumerate() {
            assert_abs_diff_eq!(k.get(0, j), x, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(k.get(1, 0), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(1, 1), 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(3, 0), 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(3, 3), 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(4, 4), 4.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(5, 4), 2.0 / 6.0, epsilon = 1e-15);
        assert!(sharpness_channel(2, 0.0).is_err());
        assert!(sharpness_channel(2, -1.0).is_err());
    }

    #[test]
    fn small_instance_values() {
        let s = SharpnessInstance::new(2, 1.0).unwrap();
        assert_abs_diff_eq!(
            s.measured_leakage_bits,
            (8.0f64 / 3.0).log2(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.measured_leakage_bits, 1.415_037_5, epsilon = 1e-7);
        assert_abs_diff_eq!(s.bound_bits, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.ratio, 2.0 / (8.0f64 / 3.0).log2(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.measured_epsilon, 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.measured_bound_bits, s.bound_bits, epsilon = 1e-12);
    }

    #[test]
    fn ratio_tends_to_one() {
        let rows = sharpness_sweep(&[2], &[1.0, 0.1, 0.01]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        for n in [2, 4, 8] {
            let (_, _, r) = sharpness_ratio(n, 1e-4).unwrap();
            assert!((r - 1.0).abs() < 1e-3, "n={n} ratio={r}");
        }
        assert!(sharpness_sweep(&[], &[1.0]).unwrap().is_empty());
        assert!(sharpness_sweep(&[2], &[]).unwrap().is_empty());
    }

    #[test]
    fn sweep_layout() {
        let rows = sharpness_sweep(&[2, 4], &[1.0, 0.5]).unwrap();
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(
            lines[0],
            "n,delta,epsilon,bound_bits,leakage_bits,ratio,closed_form_gap"
        );
        assert!(lines[1].starts_with("2,1,"));
        assert!(lines[4].starts_with("4,0.5,"));
    }

    proptest! {
        #[test]
        fn family_invariants(n in 2usize..12, delta in 1e-6f64..4.0) {
            let s = SharpnessInstance::new(n, delta).unwrap();
            prop_assert!((s.measured_epsilon - delta.ln_1p()).abs() <= 1e-12);
            prop_assert!(s.closed_form_gap() <= 1e-12);
            prop_assert!(s.bound_bits >= s.leakage_bits);
            prop_assert!(s.channel.validate().is_empty());
            let degrees: Vec<usize> = (0..s.graph.vertex_count()).map(|v| s.graph.degree(v)).collect();
            prop_assert!(degrees.contains(&3) && degrees.contains(&1));
        }
    }
}
