//! Leakage-preserving channel transformations.
//!
//! [`diagonal_maximise`] merges output columns so that the result is square
//! with every column maximum on the diagonal. [`group_average`] then
//! averages entries over a group of graph automorphisms, which equalises
//! diagonal entries within each orbit. Both keep the uniform-prior
//! conditional min-entropy and never raise the privacy level.

use std::collections::BTreeMap;

use crate::channel::{minimal_epsilon, ChannelMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::group::PermutationGroup;
use crate::report::KeyValues;

/// Absolute tolerance for sums and entry equalities.
pub const EQUALITY_TOL: f64 = 1e-12;
/// Absolute tolerance for privacy-level comparisons.
pub const EPSILON_TOL: f64 = 1e-9;

/// Groups the columns of `m` by the smallest row attaining their maximum
/// and sums each group: `out[h][i] = Σ_{j: r(j) = i} m[h][j]`. Returns the
/// square result and `r` for every input column.
///
/// When `m` has fewer columns than rows the missing columns are zero and
/// stay zero.
pub fn diagonal_maximise(m: &ChannelMatrix, g: &Graph) -> Result<(ChannelMatrix, Vec<usize>)> {
    let l = m.rows();
    if g.vertex_count() != l {
        return Err(Error::Dimension(format!(
            "graph has {} vertices, channel has {l} rows",
            g.vertex_count()
        )));
    }
    let assignment: Vec<usize> = (0..m.cols())
        .map(|j| {
            let max = m.column_max(j);
            (0..l)
                .find(|&i| m.get(i, j) == max)
                .expect("non-empty column")
        })
        .collect();
    let mut data = vec![0.0; l * l];
    for h in 0..l {
        let row = m.row(h);
        for (j, &r) in assignment.iter().enumerate() {
            data[h * l + r] += row[j];
        }
    }
    Ok((ChannelMatrix::unchecked(l, l, data)?, assignment))
}

/// How [`group_average`] evaluates the group mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageStrategy {
    /// Sum over every group element.
    FullGroup,
    /// Average each entry over the orbit of its index pair. Equal to the full
    /// mean because every pair in an orbit is hit by the same number of
    /// elements.
    PairOrbits,
}

fn check_average_inputs(m: &ChannelMatrix, group: &PermutationGroup) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "group averaging needs a square channel, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    if group.degree() != m.rows() {
        return Err(Error::Dimension(format!(
            "group of degree {} acting on a channel with {} rows",
            group.degree(),
            m.rows()
        )));
    }
    Ok(())
}

/// `out[i][j] = (1/|Γ|) Σ_{σ∈Γ} m[σ(i)][σ(j)]`.
pub fn group_average(
    m: &ChannelMatrix,
    group: &PermutationGroup,
    strategy: AverageStrategy,
) -> Result<ChannelMatrix> {
    check_average_inputs(m, group)?;
    let l = m.rows();
    let data = match strategy {
        AverageStrategy::FullGroup => {
            let mut acc = vec![0.0; l * l];
            for s in group.elements() {
                let img = s.image();
                for i in 0..l {
                    let src = m.row(img[i]);
                    let dst = &mut acc[i * l..(i + 1) * l];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d += src[img[j]];
                    }
                }
            }
            let order = group.order() as f64;
            acc.iter_mut().for_each(|x| *x /= order);
            acc
        }
        AverageStrategy::PairOrbits => {
            let mut out = vec![f64::NAN; l * l];
            let mut seen = vec![false; l * l];
            let mut orbit = Vec::new();
            for start in 0..l * l {
                if seen[start] {
                    continue;
                }
                seen[start] = true;
                orbit.clear();
                orbit.push(start);
                let mut head = 0;
                while head < orbit.len() {
                    let (i, j) = (orbit[head] / l, orbit[head] % l);
                    head += 1;
                    for s in group.generators() {
                        let next = s.apply(i) * l + s.apply(j);
                        if !seen[next] {
                            seen[next] = true;
                            orbit.push(next);
                        }
                    }
                }
                orbit.sort_unstable();
                let mean =
                    orbit.iter().map(|&p| m.get(p / l, p % l)).sum::<f64>() / orbit.len() as f64;
                for &p in &orbit {
                    out[p] = mean;
                }
            }
            out
        }
    };
    ChannelMatrix::unchecked(l, l, data)
}

/// Runs both strategies and returns the full-group result together with
/// the largest entrywise difference between them.
pub fn group_average_cross_checked(
    m: &ChannelMatrix,
    group: &PermutationGroup,
) -> Result<(ChannelMatrix, f64)> {
    let full = group_average(m, group, AverageStrategy::FullGroup)?;
    let orbits = group_average(m, group, AverageStrategy::PairOrbits)?;
    let mut gap: f64 = 0.0;
    for i in 0..full.rows() {
        for (a, b) in full.row(i).iter().zip(orbits.row(i)) {
            gap = gap.max((a - b).abs());
        }
    }
    Ok((full, gap))
}

/// One numeric property check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Size of the worst violation, or of the slack when it passes.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrisationReport {
    pub epsilon_original: f64,
    pub epsilon_merged: f64,
    pub epsilon_averaged: f64,
    pub column_max_sum_original: f64,
    pub diagonal_sum_merged: f64,
    pub diagonal_sum_averaged: f64,
    pub group_order: usize,
    pub group_is_automorphism: bool,
    pub checks: Vec<Check>,
}

impl SymmetrisationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push_float("epsilon_original", self.epsilon_original);
        kv.push_float("epsilon_merged", self.epsilon_merged);
        kv.push_float("epsilon_averaged", self.epsilon_averaged);
        kv.push_float("column_max_sum_original", self.column_max_sum_original);
        kv.push_float("diagonal_sum_merged", self.diagonal_sum_merged);
        kv.push_float("diagonal_sum_averaged", self.diagonal_sum_averaged);
        kv.push("group_order", self.group_order);
        kv.push("group_is_automorphism", self.group_is_automorphism);
        for c in &self.checks {
            kv.push(c.name, if c.passed { "pass" } else { "fail" });
            kv.push_float(&format!("{}_magnitude", c.name), c.magnitude);
        }
        kv.push("all_passed", self.all_passed());
        kv
    }
}

fn stochastic_check(name: &'static str, m: &ChannelMatrix, l: usize) -> Check {
    let worst = m
        .validate()
        .iter()
        .map(|v| match v {
            crate::channel::Violation::RowSum { deviation, .. } => *deviation,
            crate::channel::Violation::Range { value, .. } => {
                if *value < 0.0 {
                    -value
                } else {
                    value - 1.0
                }
            }
        })
        .fold(0.0, f64::max);
    let shape_ok = m.rows() == l && m.cols() == l;
    Check {
        name,
        passed: shape_ok && m.validate().is_empty(),
        magnitude: worst,
    }
}

fn diagonal_max_gap(m: &ChannelMatrix) -> f64 {
    (0..m.cols().min(m.rows()))
        .map(|j| m.column_max(j) - m.get(j, j))
        .fold(0.0, f64::max)
}

fn epsilon_check(name: &'static str, before: f64, after: f64) -> Check {
    let passed = before.is_infinite() || after <= before + EPSILON_TOL;
    Check {
        name,
        passed,
        magnitude: after - before,
    }
}

fn tolerance_check(name: &'static str, gap: f64, tol: f64) -> Check {
    Check {
        name,
        passed: gap <= tol,
        magnitude: gap,
    }
}

/// Evaluates every property of both transformations numerically.
pub fn check_symmetrisation(
    original: &ChannelMatrix,
    merged: &ChannelMatrix,
    averaged: &ChannelMatrix,
    group: &PermutationGroup,
    g: &Graph,
) -> Result<SymmetrisationReport> {
    let l = original.rows();
    for (name, m) in [("merged", merged), ("averaged", averaged)] {
        if m.rows() != l {
            return Err(Error::Dimension(format!(
                "{name} channel has {} rows, expected {l}",
                m.rows()
            )));
        }
    }
    let eps_k = minimal_epsilon(original, g)?;
    let eps_merged = minimal_epsilon(merged, g)?;
    let eps_avg = minimal_epsilon(averaged, g)?;
    let colmax = original.column_max_sum();
    let diag_merged = merged.diagonal_sum();
    let diag_avg = averaged.diagonal_sum();

    let orbit_gap = if averaged.is_square() && group.degree() == l {
        group
            .orbits()
            .orbits
            .iter()
            .map(|o| {
                let d: Vec<f64> = o.iter().map(|&i| averaged.get(i, i)).collect();
                let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let checks = vec![
        stochastic_check("merged_is_channel", merged, l),
        tolerance_check("merged_diagonal_maxima", diagonal_max_gap(merged), 0.0),
        epsilon_check("merged_privacy_preserved", eps_k, eps_merged),
        tolerance_check(
            "merged_min_entropy_preserved",
            (diag_merged - colmax).abs(),
            EQUALITY_TOL,
        ),
        stochastic_check("averaged_is_channel", averaged, l),
        tolerance_check(
            "averaged_diagonal_maxima",
            diagonal_max_gap(averaged),
            EQUALITY_TOL,
        ),
        tolerance_check("averaged_orbit_diagonals_equal", orbit_gap, EQUALITY_TOL),
        epsilon_check("averaged_privacy_preserved", eps_merged, eps_avg),
        tolerance_check(
            "averaged_min_entropy_preserved",
            (diag_avg - diag_merged).abs(),
            EQUALITY_TOL,
        ),
    ];

    Ok(SymmetrisationReport {
        epsilon_original: eps_k,
        epsilon_merged: eps_merged,
        epsilon_averaged: eps_avg,
        column_max_sum_original: colmax,
        diagonal_sum_merged: diag_merged,
        diagonal_sum_averaged: diag_avg,
        group_order: group.order(),
        group_is_automorphism: group.is_automorphism_group_of(g),
        checks,
    })
}

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct Symmetrisation {
    pub merged: ChannelMatrix,
    pub column_assignment: Vec<usize>,
    pub averaged: ChannelMatrix,
    /// Entrywise gap between the two averaging strategies, when both ran.
    pub strategy_gap: Option<f64>,
    pub report: SymmetrisationReport,
}

/// `K -> K' -> K''` with all properties checked. With `strategy = None`
/// both averaging strategies run and are compared.
pub fn symmetrise(
    k: &ChannelMatrix,
    g: &Graph,
    group: &PermutationGroup,
    strategy: Option<AverageStrategy>,
) -> Result<Symmetrisation> {
    let (merged, column_assignment) = diagonal_maximise(k, g)?;
    let (averaged, strategy_gap) = match strategy {
        Some(s) => (group_average(&merged, group, s)?, None),
        None => {
            let (m, gap) = group_average_cross_checked(&merged, group)?;
            (m, Some(gap))
        }
    };
    let mut report = check_symmetrisation(k, &merged, &averaged, group, g)?;
    if let Some(gap) = strategy_gap {
        report.checks.push(tolerance_check(
            "pair_orbit_matches_full_group",
            gap,
            EQUALITY_TOL,
        ));
    }
    Ok(Symmetrisation {
        merged,
        column_assignment,
        averaged,
        strategy_gap,
        report,
    })
}

/// Column groups of a [`diagonal_maximise`] assignment, keyed by target row.
pub fn column_groups(assignment: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, &r) in assignment.iter().enumerate() {
        groups.entry(r).or_default().push(j);
    }
    groups
}
