//! Channel matrices, the per-edge privacy condition, and min-entropy
//! leakage.
//!
//! Entropies and leakage are in bits. Privacy levels are natural-log
//! quantities: a channel is private at level `eps` on a graph when every
//! column ratio across an edge lies in `[exp(-eps), exp(eps)]`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::report::{Float, KeyValues};

/// Tolerance on row sums and on the upper entry bound of channels and priors.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// A dense `rows × cols` matrix of response probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum {
        row: usize,
        sum: f64,
        deviation: f64,
    },
    Range {
        row: usize,
        col: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum {
                row,
                sum,
                deviation,
            } => {
                write!(f, "row {row} sums to {sum} (off by {deviation:e})")
            }
            Violation::Range { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is outside [0, 1]")
            }
        }
    }
}

impl ChannelMatrix {
    /// Builds and validates a channel.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(rows, cols, data)?;
        let violations = m.validate();
        if let Some(v) = violations.first() {
            return Err(Error::InvalidParameter(format!(
                "not a channel matrix: {v}{}",
                if violations.len() > 1 {
                    format!(" (and {} more)", violations.len() - 1)
                } else {
                    String::new()
                }
            )));
        }
        Ok(m)
    }

    /// Shape-checked but otherwise unvalidated; pair with [`validate`](Self::validate).
    pub fn unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("channel matrix must be non-empty".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c) = Self::shape_of(rows)?;
        Self::new(r, c, rows.concat())
    }

    pub fn from_rows_unchecked(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c) = Self::shape_of(rows)?;
        Self::unchecked(r, c, rows.concat())
    }

    fn shape_of(rows: &[Vec<f64>]) -> Result<(usize, usize)> {
        let c = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != c) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {c}",
                r.len()
            )));
        }
        Ok((rows.len(), c))
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column_max(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn column_max_sum(&self) -> f64 {
        (0..self.cols).map(|j| self.column_max(j)).sum()
    }

    pub fn diagonal_sum(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Range and row-sum violations. An empty list means the matrix is a
    /// channel.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for (j, &x) in self.row(i).iter().enumerate() {
                if !(0.0..=1.0 + STOCHASTIC_TOL).contains(&x) {
                    out.push(Violation::Range {
                        row: i,
                        col: j,
                        value: x,
                    });
                }
            }
            let sum: f64 = self.row(i).iter().sum();
            let deviation = (sum - 1.0).abs();
            if deviation.is_nan() || deviation > STOCHASTIC_TOL {
                out.push(Violation::RowSum {
                    row: i,
                    sum,
                    deviation,
                });
            }
        }
        out
    }

    /// Same matrix with columns reordered: output column `k` is input
    /// column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.cols {
            return Err(Error::Dimension("column order has wrong length".into()));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(order.iter().map(|&j| row[j]));
        }
        Self::unchecked(self.rows, self.cols, data)
    }

    /// Parses CSV: one row per input, optionally preceded by a header row
    /// of output labels. Returns the matrix (unvalidated) and the header.
    pub fn from_csv(text: &str) -> Result<(Self, Option<Vec<String>>)> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut header = None;
        let mut rows = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if k == 0 => header = Some(record.iter().map(str::to_string).collect()),
                Err(e) => {
                    return Err(Error::Malformed(format!("line {}: {e}", k + 1)));
                }
            }
        }
        let m = Self::from_rows_unchecked(&rows)?;
        if let Some(h) = &header {
            let h: &Vec<String> = h;
            if h.len() != m.cols {
                return Err(Error::Dimension(format!(
                    "header has {} labels for {} columns",
                    h.len(),
                    m.cols
                )));
            }
        }
        Ok((m, header))
    }

    /// CSV with LF line endings; header labels are quoted when needed.
    pub fn to_csv(&self, header: Option<&[String]>) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let write_err = "writing CSV to memory cannot fail";
        if let Some(h) = header {
            w.write_record(h).expect(write_err);
        }
        for i in 0..self.rows {
            w.write_record(self.row(i).iter().map(|&x| Float(x).to_string()))
                .expect(write_err);
        }
        String::from_utf8(w.into_inner().expect(write_err)).expect("CSV output is UTF-8")
    }
}

/// Smallest `eps` at which `m` satisfies the privacy condition on `g`.
/// `0/0` ratios are ignored, `x/0` with `x > 0` gives `+inf`.
pub fn minimal_epsilon(m: &ChannelMatrix, g: &Graph) -> Result<f64> {
    if g.vertex_count() != m.rows() {
        return Err(Error::Dimension(format!(
            "graph has {} vertices, channel has {} rows",
            g.vertex_count(),
            m.rows()
        )));
    }
    let mut eps: f64 = 0.0;
    for (i, h) in g.edges() {
        for (&a, &b) in m.row(i).iter().zip(m.row(h)) {
            let e = match (a == 0.0, b == 0.0) {
                (true, true) => 0.0,
                (true, false) | (false, true) => return Ok(f64::INFINITY),
                _ => (a / b).ln().abs(),
            };
            eps = eps.max(e);
        }
    }
    Ok(eps)
}

/// Probability distribution over channel inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidParameter("prior is empty".into()));
        }
        if probabilities.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidParameter(
                "prior has a negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParameter(format!("prior sums to {sum}")));
        }
        Ok(Self(probabilities))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }
}

/// Vulnerabilities and min-entropies of a channel under a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    pub vulnerability: f64,
    pub conditional_vulnerability: f64,
    pub min_entropy_bits: f64,
    pub conditional_min_entropy_bits: f64,
    pub leakage_bits: f64,
}

impl LeakageReport {
    fn from_vulnerabilities(v: f64, v_cond: f64) -> Self {
        let h = -v.log2();
        let h_cond = -v_cond.log2();
        Self {
            vulnerability: v,
            conditional_vulnerability: v_cond,
            min_entropy_bits: h,
            conditional_min_entropy_bits: h_cond,
            leakage_bits: h - h_cond,
        }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push_float("vulnerability", self.vulnerability);
        kv.push_float("conditional_vulnerability", self.conditional_vulnerability);
        kv.push_float("min_entropy_bits", self.min_entropy_bits);
        kv.push_float(
            "conditional_min_entropy_bits",
            self.conditional_min_entropy_bits,
        );
        kv.push_float("leakage_bits", self.leakage_bits);
        kv
    }
}

/// Leakage under an arbitrary prior.
pub fn leakage(m: &ChannelMatrix, prior: &Prior) -> Result<LeakageReport> {
    let pi = prior.probabilities();
    if pi.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "prior has {} entries, channel has {} rows",
            pi.len(),
            m.rows()
        )));
    }
    let v = pi.iter().copied().fold(0.0, f64::max);
    let v_cond = (0..m.cols())
        .map(|j| {
            (0..m.rows())
                .map(|i| pi[i] * m.get(i, j))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(LeakageReport::from_vulnerabilities(v, v_cond))
}

/// Leakage under the uniform prior, via the column-maxima sum.
pub fn leakage_uniform(m: &ChannelMatrix) -> LeakageReport {
    let l = m.rows() as f64;
    LeakageReport::from_vulnerabilities(1.0 / l, m.column_max_sum() / l)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "privacy level must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}

/// Square channel with `K[i][j] ∝ w_j · exp(-(eps/2)·d(i,j))` within each
/// component of `g` and zero across components.
fn weighted_distance_response(g: &Graph, eps: f64, weights: &[f64]) -> Result<ChannelMatrix> {
    check_epsilon(eps)?;
    let l = g.vertex_count();
    let mut data = vec![0.0; l * l];
    for i in 0..l {
        let dist = g.bfs(i);
        let row = &mut data[i * l..(i + 1) * l];
        for (j, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                row[j] = weights[j] * (-(eps / 2.0) * *d as f64).exp();
            }
        }
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= z);
    }
    ChannelMatrix::new(l, l, data)
}

/// Graph-distance randomized response: outputs are the inputs, and the
/// probability of reporting `j` from `i` decays as `exp(-(eps/2)·d(i,j))`.
/// Private at level `eps` on `g`.
pub fn graph_randomized_response(g: &Graph, eps: f64) -> Result<ChannelMatrix> {
    weighted_distance_response(g, eps, &vec![1.0; g.vertex_count()])
}

/// A random channel private at level `eps` on `g`: distance response
/// with random positive output weights, with each output column then split
/// into up to three sub-outputs by random fractions. Splitting and
/// weighting both keep every column ratio across an edge within
/// `exp(eps)`.
pub fn random_private_channel<R: Rng + ?Sized>(
    g: &Graph,
    eps: f64,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let l = g.vertex_count();
    let weights: Vec<f64> = (0..l).map(|_| rng.gen_range(0.05..1.0)).collect();
    let base = weighted_distance_response(g, eps, &weights)?;
    let mut fractions: Vec<(usize, f64)> = Vec::new();
    for j in 0..l {
        let parts = rng.gen_range(1..=3);
        let raw: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        fractions.extend(raw.into_iter().map(|r| (j, r / total)));
    }
    let cols = fractions.len();
    let mut data = Vec::with_capacity(l * cols);
    for i in 0..l {
        data.extend(fractions.iter().map(|&(j, f)| base.get(i, j) * f));
    }
    ChannelMatrix::new(l, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn m(rows: &[&[f64]]) -> ChannelMatrix {
        ChannelMatrix::from_rows_unchecked(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn validation() {
        assert!(ChannelMatrix::identity(2).validate().is_empty());
        let v = m(&[&[0.5, 0.6]]).validate();
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::RowSum { row, deviation, .. } => {
                assert_eq!(*row, 0);
                assert_abs_diff_eq!(*deviation, 0.1, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let v = m(&[&[-0.5, 1.5]]).validate();
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::Range { col: 0, .. })));
        assert!(ChannelMatrix::from_rows(&[vec![0.5, 0.6]]).is_err());
        assert!(ChannelMatrix::from_rows(&[vec![1.0], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn minimal_epsilon_examples() {
        let edge = Graph::path(2);
        let k = m(&[&[0.6, 0.4], &[0.4, 0.6]]);
        assert_abs_diff_eq!(
            minimal_epsilon(&k, &edge).unwrap(),
            1.5f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(
            minimal_epsilon(&ChannelMatrix::identity(2), &edge).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            minimal_epsilon(&ChannelMatrix::identity(2), &Graph::empty(2)).unwrap(),
            0.0
        );
        // 0/0 in a column is compatible with any level
        let k = m(&[&[0.5, 0.5, 0.0], &[0.5, 0.5, 0.0]]);
        assert_eq!(minimal_epsilon(&k, &edge).unwrap(), 0.0);
        assert!(minimal_epsilon(&k, &Graph::path(3)).is_err());
    }

    #[test]
    fn leakage_examples() {
        let r = leakage_uniform(&ChannelMatrix::identity(2));
        assert_abs_diff_eq!(r.leakage_bits, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.min_entropy_bits, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.conditional_min_entropy_bits, 0.0, epsilon = 1e-15);
        let r = leakage_uniform(&m(&[&[0.5, 0.5], &[0.5, 0.5]]));
        assert_abs_diff_eq!(r.leakage_bits, 0.0, epsilon = 1e-15);

        let k = m(&[&[0.6, 0.4], &[0.4, 0.6]]);
        let skewed = Prior::new(vec![0.9, 0.1]).unwrap();
        let r = leakage(&k, &skewed).unwrap();
        // V(X|Z) = max(.54,.04) + max(.36,.06) = .9 = V(X): nothing leaks
        assert_abs_diff_eq!(r.conditional_vulnerability, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(r.leakage_bits, 0.0, epsilon = 1e-15);
        assert!(leakage(&k, &Prior::uniform(3)).is_err());
        assert!(Prior::new(vec![0.5, 0.6]).is_err());
        assert!(Prior::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn randomized_response_on_path() {
        let g = Graph::path(3);
        let k = graph_randomized_response(&g, 4f64.ln()).unwrap();
        let expect = [[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0], [0.25, 0.5, 0.25]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_abs_diff_eq!(k.get(i, j), x, epsilon = 1e-15);
            }
        }
        let eps = minimal_epsilon(&k, &g).unwrap();
        assert_abs_diff_eq!(eps, (16.0f64 / 7.0).ln(), epsilon = 1e-12);
        assert!(eps <= 4f64.ln());
    }

    #[test]
    fn randomized_response_edge_cases() {
        let k = graph_randomized_response(&Graph::empty(1), 1.0).unwrap();
        assert_eq!(k.to_rows(), vec![vec![1.0]]);
        assert!(graph_randomized_response(&Graph::path(2), 0.0).is_err());
        assert!(graph_randomized_response(&Graph::path(2), -1.0).is_err());
        // cross-component entries vanish
        let k = graph_randomized_response(&Graph::from_edges(3, [(0, 1)]).unwrap(), 1.0).unwrap();
        assert_eq!(k.get(0, 2), 0.0);
        assert_eq!(k.get(2, 2), 1.0);
    }

    #[test]
    fn csv_roundtrip() {
        let k = m(&[&[0.25, 0.75], &[1.0, 0.0]]);
        let text = k.to_csv(Some(&["a".to_string(), "b".to_string()]));
        assert_eq!(text, "a,b\n0.25,0.75\n1,0\n");
        let (back, header) = ChannelMatrix::from_csv(&text).unwrap();
        assert_eq!(back, k);
        assert_eq!(header.unwrap(), ["a", "b"]);
        let (back, header) = ChannelMatrix::from_csv(&k.to_csv(None)).unwrap();
        assert_eq!(back, k);
        assert!(header.is_none());
        let labels = ["(1,1)".to_string(), "(1,2)".to_string()];
        let text = k.to_csv(Some(&labels));
        assert!(text.starts_with("\"(1,1)\",\"(1,2)\"\n"));
        assert_eq!(ChannelMatrix::from_csv(&text).unwrap().1.unwrap(), labels);
        assert!(ChannelMatrix::from_csv("1,0\nx,1\n").is_err());
        assert!(ChannelMatrix::from_csv("a\n1,0\n").is_err());
    }

    fn random_graph(rng: &mut impl Rng, max_n: usize) -> Graph {
        let n = rng.gen_range(1..=max_n);
        let p = rng.gen_range(0.1..0.9);
        let edges: Vec<_> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.gen_bool(p))
            .collect();
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn randomized_response_is_private() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let g = random_graph(&mut rng, 9);
            let eps = rng.gen_range(0.01..3.0);
            let k = graph_randomized_response(&g, eps).unwrap();
            assert!(minimal_epsilon(&k, &g).unwrap() <= eps + 1e-9);
            let r = random_private_channel(&g, eps, &mut rng).unwrap();
            assert!(r.validate().is_empty());
            assert!(minimal_epsilon(&r, &g).unwrap() <= eps + 1e-9);
        }
    }

    #[test]
    fn uniform_prior_paths_agree_and_dominate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = random_graph(&mut rng, 8);
            let k = random_private_channel(&g, rng.gen_range(0.1..2.0), &mut rng).unwrap();
            let fast = leakage_uniform(&k);
            let general = leakage(&k, &Prior::uniform(k.rows())).unwrap();
            assert_abs_diff_eq!(
                fast.conditional_min_entropy_bits,
                general.conditional_min_entropy_bits,
                epsilon = 1e-12
            );
            assert!(fast.leakage_bits >= -1e-12);

            let raw: Vec<f64> = (0..k.rows()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let prior = Prior::new(raw.iter().map(|x| x / total).collect()).unwrap();
            assert!(leakage(&k, &prior).unwrap().leakage_bits <= fast.leakage_bits + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn column_permutation_invariance(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, 6);
            let k = random_private_channel(&g, 1.0, &mut rng).unwrap();
            let mut order: Vec<usize> = (0..k.cols()).collect();
            order.reverse();
            order.rotate_left(seed as usize % k.cols());
            let p = k.permute_columns(&order).unwrap();
            prop_assert_eq!(minimal_epsilon(&p, &g).unwrap(), minimal_epsilon(&k, &g).unwrap());
            let (a, b) = (leakage_uniform(&p).leakage_bits, leakage_uniform(&k).leakage_bits);
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
