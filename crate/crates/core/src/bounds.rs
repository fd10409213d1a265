//! Diameter-based leakage bounds.
//!
//! For an `ε`-private channel on a database adjacency graph with components
//! of diameters `d_1..d_q` over `ℓ` inputs, uniform-prior leakage is at most
//! `log₂ Σ_t e^{ε d_t}` bits and conditional min-entropy is at least
//! `log₂ ℓ` minus that. `ε` is in natural units, entropies in bits.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, LOG2_E};

use crate::adjacency::{induce_adjacency_graph, AdjacencyGraph};
use crate::channel::{leakage_uniform, minimal_epsilon, ChannelMatrix, LeakageReport};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::BlowfishPolicy;
use crate::report::{Float, KeyValues};

/// Tolerance for the bound checks in [`audit`].
pub const AUDIT_TOL: f64 = 1e-9;

/// Vertex count and component diameters of a graph, with diameters stored
/// as multiplicities so that products of many components stay compact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentProfile {
    vertex_count: u128,
    diameters: BTreeMap<usize, u128>,
}

impl ComponentProfile {
    pub fn from_graph(g: &Graph) -> Self {
        let comps = g.components();
        Self::from_diameters(g.vertex_count() as u128, &comps.diameters)
    }

    pub fn from_diameters(vertex_count: u128, diameters: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        for &d in diameters {
            *map.entry(d).or_insert(0) += 1;
        }
        Self {
            vertex_count,
            diameters: map,
        }
    }

    /// Profile of the `n`-fold Cartesian power of `g`, which is the
    /// adjacency graph of an unconstrained policy with secret graph `g`.
    /// Components multiply and their diameters add.
    pub fn cartesian_power(g: &Graph, n: usize) -> Result<Self> {
        let base = Self::from_graph(g);
        let overflow =
            || Error::InvalidParameter(format!("{}^{n} databases overflow", g.vertex_count()));
        let vertex_count = base
            .vertex_count
            .checked_pow(n as u32)
            .ok_or_else(overflow)?;
        let mut acc: BTreeMap<usize, u128> = BTreeMap::from([(0, 1)]);
        for _ in 0..n {
            let mut next: BTreeMap<usize, u128> = BTreeMap::new();
            for (&d, &c) in &acc {
                for (&e, &k) in &base.diameters {
                    let slot = next.entry(d + e).or_insert(0);
                    *slot = c
                        .checked_mul(k)
                        .and_then(|x| slot.checked_add(x))
                        .ok_or_else(overflow)?;
                }
            }
            acc = next;
        }
        Ok(Self {
            vertex_count,
            diameters: acc,
        })
    }

    /// Profile of a policy's adjacency graph. Unconstrained policies use
    /// [`Self::cartesian_power`] and never enumerate; constrained ones are
    /// induced under `cap`.
    pub fn of_policy(policy: &BlowfishPolicy, cap: usize) -> Result<Self> {
        if policy.is_unconstrained() {
            Self::cartesian_power(&policy.secret_graph().to_graph(), policy.n())
        } else {
            Ok(Self::from_graph(
                &induce_adjacency_graph(policy, cap)?.graph,
            ))
        }
    }

    pub fn vertex_count(&self) -> u128 {
        self.vertex_count
    }

    pub fn component_count(&self) -> u128 {
        self.diameters.values().sum()
    }

    pub fn max_diameter(&self) -> usize {
        self.diameters.keys().next_back().copied().unwrap_or(0)
    }

    /// Diameter to number of components with that diameter.
    pub fn diameters(&self) -> &BTreeMap<usize, u128> {
        &self.diameters
    }

    /// `log₂ Σ_t e^{ε d_t}`, evaluated stably.
    pub fn leakage_upper_bound(&self, eps: f64) -> f64 {
        let dmax = self.max_diameter();
        if dmax == 0 {
            return (self.component_count() as f64).log2();
        }
        if eps.is_infinite() {
            return f64::INFINITY;
        }
        let rest: f64 = self
            .diameters
            .iter()
            .map(|(&d, &c)| c as f64 * (eps * (d as f64 - dmax as f64)).exp())
            .sum();
        eps * dmax as f64 * LOG2_E + rest.log2()
    }

    /// `−log₂((1/ℓ) Σ_t e^{ε d_t}) = log₂ ℓ − leakage_upper_bound`.
    pub fn min_entropy_lower_bound(&self, eps: f64) -> f64 {
        (self.vertex_count as f64).log2() - self.leakage_upper_bound(eps)
    }
}

pub fn leakage_upper_bound(g: &Graph, eps: f64) -> f64 {
    ComponentProfile::from_graph(g).leakage_upper_bound(eps)
}

pub fn min_entropy_lower_bound(g: &Graph, eps: f64) -> f64 {
    ComponentProfile::from_graph(g).min_entropy_lower_bound(eps)
}

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "privacy level must be finite and non-negative, got {eps}"
        )));
    }
    Ok(())
}

/// Both bounds at one privacy level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub epsilon: f64,
    pub input_count: u128,
    pub component_count: u128,
    pub max_diameter: usize,
    pub diameters: BTreeMap<usize, u128>,
    pub min_entropy_lower_bits: f64,
    pub leakage_upper_bits: f64,
}

impl BoundReport {
    pub fn new(profile: &ComponentProfile, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            epsilon: eps,
            input_count: profile.vertex_count(),
            component_count: profile.component_count(),
            max_diameter: profile.max_diameter(),
            diameters: profile.diameters().clone(),
            min_entropy_lower_bits: profile.min_entropy_lower_bound(eps),
            leakage_upper_bits: profile.leakage_upper_bound(eps),
        })
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push_float("epsilon", self.epsilon);
        kv.push("inputs", self.input_count);
        kv.push("components", self.component_count);
        kv.push("max_diameter", self.max_diameter);
        kv.push("diameters", format_multiplicities(&self.diameters));
        kv.push_float("min_entropy_lower_bits", self.min_entropy_lower_bits);
        kv.push_float("leakage_upper_bits", self.leakage_upper_bits);
        kv.push_float("leakage_upper_nats", self.leakage_upper_bits * LN_2);
        kv
    }
}

/// `d:count` pairs, comma separated, by increasing diameter.
pub fn format_multiplicities(diameters: &BTreeMap<usize, u128>) -> String {
    diameters
        .iter()
        .map(|(d, c)| format!("{d}:{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Measurements of a concrete channel against the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAudit {
    pub minimal_epsilon: f64,
    pub leakage: LeakageReport,
    /// Bounds at the channel's own privacy level; `None` when unbounded.
    pub bounds_at_minimal: Option<BoundReport>,
    pub private_at_target: bool,
    /// Bound at the target level minus measured leakage.
    pub margin_bits: f64,
    pub leakage_within_bound: bool,
    pub min_entropy_above_floor: bool,
}

impl ChannelAudit {
    pub fn is_bounded(&self) -> bool {
        self.bounds_at_minimal.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub bounds: BoundReport,
    pub channel: Option<ChannelAudit>,
}

impl AuditReport {
    /// Both bound checks hold and the channel meets the target level.
    /// Always true without a channel.
    pub fn passed(&self) -> bool {
        self.channel.as_ref().is_none_or(|c| {
            c.is_bounded()
                && c.private_at_target
                && c.leakage_within_bound
                && c.min_entropy_above_floor
        })
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = self.bounds.to_key_values();
        if let Some(c) = &self.channel {
            kv.push_float("minimal_epsilon", c.minimal_epsilon);
            kv.push_float("leakage_bits", c.leakage.leakage_bits);
            kv.push_float(
                "conditional_min_entropy_bits",
                c.leakage.conditional_min_entropy_bits,
            );
            match &c.bounds_at_minimal {
                Some(b) => {
                    kv.push_float("leakage_upper_bits_at_minimal", b.leakage_upper_bits);
                    kv.push_float(
                        "min_entropy_lower_bits_at_minimal",
                        b.min_entropy_lower_bits,
                    );
                }
                None => {
                    kv.push("leakage_upper_bits_at_minimal", "unbounded");
                    kv.push("min_entropy_lower_bits_at_minimal", "unbounded");
                }
            }
            kv.push_float("margin_bits", c.margin_bits);
            kv.push("private_at_target", c.private_at_target);
            kv.push("leakage_within_bound", c.leakage_within_bound);
            kv.push("min_entropy_above_floor", c.min_entropy_above_floor);
        }
        kv.push("status", if self.passed() { "pass" } else { "fail" });
        kv
    }
}

/// Measures `channel` on an already induced graph against bounds at
/// `eps_target` and at the channel's own minimal level.
pub fn audit_channel(adj: &Graph, eps_target: f64, channel: &ChannelMatrix) -> Result<AuditReport> {
    check_eps(eps_target)?;
    if channel.rows() != adj.vertex_count() {
        return Err(Error::Dimension(format!(
            "channel has {} rows but the policy has {} permissible databases",
            channel.rows(),
            adj.vertex_count()
        )));
    }
    let profile = ComponentProfile::from_graph(adj);
    let bounds = BoundReport::new(&profile, eps_target)?;
    let eps = minimal_epsilon(channel, adj)?;
    let leak = leakage_uniform(channel);
    let bounds_at_minimal = if eps.is_finite() {
        Some(BoundReport::new(&profile, eps)?)
    } else {
        None
    };
    let (within, above) = match &bounds_at_minimal {
        Some(b) => (
            leak.leakage_bits <= b.leakage_upper_bits + AUDIT_TOL,
            leak.conditional_min_entropy_bits >= b.min_entropy_lower_bits - AUDIT_TOL,
        ),
        None => (false, false),
    };
    let channel = ChannelAudit {
        minimal_epsilon: eps,
        margin_bits: bounds.leakage_upper_bits - leak.leakage_bits,
        leakage: leak,
        bounds_at_minimal,
        private_at_target: eps <= eps_target + AUDIT_TOL,
        leakage_within_bound: within,
        min_entropy_above_floor: above,
    };
    Ok(AuditReport {
        bounds,
        channel: Some(channel),
    })
}

/// Bounds for `policy` at `eps_target`, plus channel measurements when a
/// channel over the permissible databases (canonical order) is given.
///
/// Without a channel an unconstrained policy is never enumerated.
pub fn audit(
    policy: &BlowfishPolicy,
    eps_target: f64,
    channel: Option<&ChannelMatrix>,
    cap: usize,
) -> Result<AuditReport> {
    match channel {
        None => {
            let profile = ComponentProfile::of_policy(policy, cap)?;
            Ok(AuditReport {
                bounds: BoundReport::new(&profile, eps_target)?,
                channel: None,
            })
        }
        Some(k) => {
            let adj: AdjacencyGraph = induce_adjacency_graph(policy, cap)?;
            audit_channel(&adj.graph, eps_target, k)
        }
    }
}

/// One row of a bound sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub kind: String,
    pub epsilon: f64,
    pub component_count: u128,
    pub max_diameter: usize,
    pub bound_bits: f64,
    /// Leakage of graph randomized response, when measured.
    pub leakage_bits: Option<f64>,
}

impl SweepRow {
    pub fn margin_bits(&self) -> Option<f64> {
        self.leakage_bits.map(|l| self.bound_bits - l)
    }
}

pub const SWEEP_HEADER: [&str; 8] = [
    "n",
    "theta_or_kind",
    "epsilon",
    "q",
    "max_diameter",
    "bound_bits",
    "leakage_bits",
    "margin_bits",
];

/// CSV with [`SWEEP_HEADER`]; unmeasured cells are empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    let opt = |x: Option<f64>| x.map(|v| Float(v).to_string()).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.kind,
            Float(r.epsilon),
            r.component_count,
            r.max_diameter,
            Float(r.bound_bits),
            opt(r.leakage_bits),
            opt(r.margin_bits()),
        ));
    }
    out
}
