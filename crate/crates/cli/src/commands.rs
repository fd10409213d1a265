use std::path::{Path, PathBuf};

use blowfish_core::adjacency::{induce_adjacency_graph, induce_brute_force};
use blowfish_core::bounds::{self, audit, ComponentProfile, SweepRow};
use blowfish_core::channel::{
    graph_randomized_response, leakage, leakage_uniform, minimal_epsilon, random_private_channel,
    ChannelMatrix, Prior,
};
use blowfish_core::group::symmetry_group;
use blowfish_core::group::DEFAULT_VERTEX_CAP;
use blowfish_core::policy::{build_policy, BlowfishPolicy, PermissibleSpec, PolicyKind};
use blowfish_core::symmetrise::{symmetrise, AverageStrategy};
use blowfish_core::tightness::{self, sharpness_sweep};
use blowfish_core::KeyValues;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::io::{
    emit, load_graph, read_channel, read_numbers, read_policy, read_text, write_all, CliError,
    CliResult,
};
use crate::{
    AdjacencyCommand, BoundCommand, ChannelCommand, Cli, Command, FigureCommand, GraphSource, Kind,
    KindArgs, Mechanism, PolicyCommand, Strategy, SymmetriseCommand, TightnessCommand,
};

pub enum Outcome {
    Success,
    CheckFailed(String),
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Policy(c) => policy(cli, c),
        Command::Adjacency(c) => adjacency(cli, c),
        Command::Bound(c) => bound(cli, c),
        Command::Channel(c) => channel(cli, c),
        Command::Symmetrise(c) => symmetrise_cmd(cli, c),
        Command::Tightness(c) => tightness_cmd(c),
        Command::Figure(c) => figure(c),
    }
}

fn policy_kind(args: &KindArgs, theta: Option<f64>) -> CliResult<PolicyKind> {
    let need_m = || {
        args.m
            .ok_or_else(|| CliError::input("--m is required for this kind"))
    };
    Ok(match args.kind {
        Kind::DistanceThreshold => PolicyKind::DistanceThreshold {
            values: args.values.clone(),
            theta: theta
                .ok_or_else(|| CliError::input("--theta is required for distance-threshold"))?,
        },
        Kind::Cycle => PolicyKind::Cycle { m: need_m()? },
        Kind::Complete => PolicyKind::Complete { m: need_m()? },
        Kind::Custom => {
            let edges = args
                .edges
                .iter()
                .map(|e| {
                    e.split_once(':')
                        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                        .ok_or_else(|| {
                            CliError::input(format!("edge `{e}` is not of the form a:b"))
                        })
                })
                .collect::<CliResult<_>>()?;
            PolicyKind::Custom {
                labels: args.tuples.clone(),
                values: (!args.values.is_empty()).then(|| args.values.clone()),
                edges,
            }
        }
    })
}

fn read_permissible(path: &Path) -> CliResult<PermissibleSpec> {
    let rows = read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok(PermissibleSpec::Explicit(rows))
}

fn policy_summary(p: &BlowfishPolicy) -> KeyValues {
    let secrets = p.secret_graph().to_graph().components();
    let mut kv = KeyValues::new();
    kv.push("valid", true);
    kv.push("tuples", p.universe().len());
    kv.push("secret_edges", p.secret_graph().edge_count());
    kv.push("secret_components", secrets.count());
    kv.push("secret_max_diameter", secrets.max_diameter());
    kv.push("n", p.n());
    kv.push(
        "permissible",
        if p.is_unconstrained() {
            "all"
        } else {
            "explicit"
        },
    );
    match p.permissible_count() {
        Some(c) => kv.push("databases", c),
        None => kv.push("databases", "overflow"),
    }
    kv
}

fn policy(_cli: &Cli, cmd: &PolicyCommand) -> CliResult<Outcome> {
    match cmd {
        PolicyCommand::Build {
            kind,
            theta,
            n,
            permissible,
            out,
        } => {
            let spec = match permissible {
                Some(p) => read_permissible(p)?,
                None => PermissibleSpec::All,
            };
            let p = build_policy(&policy_kind(kind, *theta)?, *n, spec)?;
            emit(out.as_deref(), &(p.to_json() + "\n"))?;
            Ok(Outcome::Success)
        }
        PolicyCommand::Validate { policy, out } => {
            let text = read_text(policy)?;
            match BlowfishPolicy::from_json(&text) {
                Ok(p) => {
                    emit(out.as_deref(), &policy_summary(&p).to_string())?;
                    Ok(Outcome::Success)
                }
                Err(e) => {
                    let mut kv = KeyValues::new();
                    kv.push("valid", false);
                    kv.push("error", &e);
                    emit(out.as_deref(), &kv.to_string())?;
                    Ok(Outcome::CheckFailed(e.to_string()))
                }
            }
        }
    }
}

fn adjacency(cli: &Cli, cmd: &AdjacencyCommand) -> CliResult<Outcome> {
    let AdjacencyCommand::Induce {
        policy,
        brute_force,
        out,
    } = cmd;
    let p = read_policy(policy)?;
    let adj = if *brute_force {
        induce_brute_force(&p, cli.max_databases)?
    } else {
        induce_adjacency_graph(&p, cli.max_databases)?
    };
    let doc = adj.to_document(p.universe());
    let text = serde_json::to_string(&doc).expect("documents serialise") + "\n";
    emit(out.as_deref(), &text)?;
    Ok(Outcome::Success)
}

fn validated(channel: ChannelMatrix, path: &Path) -> CliResult<ChannelMatrix> {
    match channel.validate().first() {
        None => Ok(channel),
        Some(v) => Err(CliError::input(format!(
            "{} is not a channel: {v}",
            path.display()
        ))),
    }
}

fn bound(cli: &Cli, cmd: &BoundCommand) -> CliResult<Outcome> {
    let BoundCommand::Compute {
        policy,
        epsilon,
        channel,
        out,
    } = cmd;
    let p = read_policy(policy)?;
    let k = match channel {
        Some(path) => Some(validated(read_channel(path)?.0, path)?),
        None => None,
    };
    let report = audit(&p, *epsilon, k.as_ref(), cli.max_databases)?;
    emit(out.as_deref(), &report.to_key_values().to_string())?;
    Ok(if report.passed() {
        Outcome::Success
    } else {
        Outcome::CheckFailed("channel violates the target privacy level or a bound".into())
    })
}

fn channel(cli: &Cli, cmd: &ChannelCommand) -> CliResult<Outcome> {
    match cmd {
        ChannelCommand::Verify {
            channel,
            source,
            epsilon,
            out,
        } => {
            let (k, _) = read_channel(channel)?;
            let g = load_source(cli, source)?;
            let violations = k.validate();
            let mut kv = KeyValues::new();
            kv.push("rows", k.rows());
            kv.push("cols", k.cols());
            kv.push("stochastic", violations.is_empty());
            kv.push("violations", violations.len());
            if let Some(v) = violations.first() {
                kv.push("first_violation", v);
            }
            let eps = minimal_epsilon(&k, &g.graph)?;
            kv.push_float("minimal_epsilon", eps);
            let mut ok = violations.is_empty() && eps.is_finite();
            if let Some(target) = epsilon {
                let private = eps <= target + bounds::AUDIT_TOL;
                kv.push_float("target_epsilon", *target);
                kv.push("private_at_target", private);
                ok &= private;
            }
            kv.push("status", if ok { "pass" } else { "fail" });
            emit(out.as_deref(), &kv.to_string())?;
            Ok(if ok {
                Outcome::Success
            } else {
                Outcome::CheckFailed("channel verification failed".into())
            })
        }
        ChannelCommand::Leakage {
            channel,
            prior,
            out,
        } => {
            let k = validated(read_channel(channel)?.0, channel)?;
            let report = match prior {
                Some(path) => leakage(&k, &Prior::new(read_numbers(path)?)?)?,
                None => leakage_uniform(&k),
            };
            emit(out.as_deref(), &report.to_key_values().to_string())?;
            Ok(Outcome::Success)
        }
        ChannelCommand::Generate {
            source,
            epsilon,
            mechanism,
            seed,
            out,
        } => {
            let g = load_source(cli, source)?;
            let (k, header) = match mechanism {
                Mechanism::RandomizedResponse => (
                    graph_randomized_response(&g.graph, *epsilon)?,
                    Some(g.labels),
                ),
                Mechanism::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    (random_private_channel(&g.graph, *epsilon, &mut rng)?, None)
                }
            };
            emit(out.as_deref(), &k.to_csv(header.as_deref()))?;
            Ok(Outcome::Success)
        }
    }
}

fn load_source(cli: &Cli, source: &GraphSource) -> CliResult<crate::io::LabelledGraph> {
    load_graph(
        source.policy.as_deref(),
        source.graph.as_deref(),
        cli.max_databases,
    )
}

fn symmetrise_cmd(cli: &Cli, cmd: &SymmetriseCommand) -> CliResult<Outcome> {
    let SymmetriseCommand::Run {
        channel,
        source,
        strategy,
        merged,
        averaged,
        out,
    } = cmd;
    let k = validated(read_channel(channel)?.0, channel)?;
    let g = load_source(cli, source)?;
    let adj = match g.induced {
        Some((policy, adj)) => (Some(policy), adj),
        None => (
            None,
            blowfish_core::AdjacencyGraph {
                vertices: Vec::new(),
                graph: g.graph.clone(),
                asymmetric_pairs: Vec::new(),
            },
        ),
    };
    let (group, source_kind) =
        symmetry_group(adj.0.as_ref(), &adj.1, DEFAULT_VERTEX_CAP, cli.max_group)?;
    let strategy = match strategy {
        Strategy::Full => Some(AverageStrategy::FullGroup),
        Strategy::PairOrbits => Some(AverageStrategy::PairOrbits),
        Strategy::Both => None,
    };
    let s = symmetrise(&k, &g.graph, &group, strategy)?;

    let mut kv = KeyValues::new();
    kv.push("group_source", source_kind);
    kv.extend(s.report.to_key_values());
    let mut outputs: Vec<(PathBuf, String)> = Vec::new();
    let header = Some(g.labels.as_slice());
    if let Some(p) = merged {
        outputs.push((p.clone(), s.merged.to_csv(header)));
    }
    if let Some(p) = averaged {
        outputs.push((p.clone(), s.averaged.to_csv(header)));
    }
    match out {
        Some(p) => {
            outputs.push((p.clone(), kv.to_string()));
            write_all(&outputs)?;
        }
        None => {
            write_all(&outputs)?;
            emit(None, &kv.to_string())?;
        }
    }
    Ok(if s.report.all_passed() {
        Outcome::Success
    } else {
        Outcome::CheckFailed(format!("failed: {}", s.report.failed().join(", ")))
    })
}

fn tightness_cmd(cmd: &TightnessCommand) -> CliResult<Outcome> {
    let TightnessCommand::Sweep { n, delta, out } = cmd;
    let rows = sharpness_sweep(n, delta)?;
    emit(out.as_deref(), &tightness::sweep_csv(&rows))?;
    Ok(Outcome::Success)
}

fn parse_family(spec: &str) -> CliResult<PolicyKind> {
    let bad = || CliError::input(format!("family `{spec}` must be cycle:M or complete:M"));
    let (name, m) = spec.split_once(':').ok_or_else(bad)?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    match name.trim() {
        "cycle" => Ok(PolicyKind::Cycle { m }),
        "complete" => Ok(PolicyKind::Complete { m }),
        _ => Err(bad()),
    }
}

fn figure(cmd: &FigureCommand) -> CliResult<Outcome> {
    let FigureCommand::BoundSweep {
        values,
        theta,
        family,
        n,
        epsilon,
        measure_up_to,
        out,
    } = cmd;
    let mut kinds: Vec<(String, PolicyKind)> = theta
        .iter()
        .map(|&t| {
            (
                t.to_string(),
                PolicyKind::DistanceThreshold {
                    values: values.clone(),
                    theta: t,
                },
            )
        })
        .collect();
    for f in family {
        kinds.push((f.trim().to_string(), parse_family(f)?));
    }
    let mut rows = Vec::new();
    for (label, kind) in &kinds {
        for &records in n {
            let p = build_policy(kind, records, PermissibleSpec::All)?;
            let profile = ComponentProfile::of_policy(&p, *measure_up_to)?;
            let leakage_bits = match p.permissible_count() {
                Some(c) if c <= *measure_up_to as u128 => {
                    let adj = induce_adjacency_graph(&p, *measure_up_to)?;
                    let k = graph_randomized_response(&adj.graph, *epsilon)?;
                    Some(leakage_uniform(&k).leakage_bits)
                }
                _ => None,
            };
            rows.push(SweepRow {
                n: records,
                kind: label.clone(),
                epsilon: *epsilon,
                component_count: profile.component_count(),
                max_diameter: profile.max_diameter(),
                bound_bits: profile.leakage_upper_bound(*epsilon),
                leakage_bits,
            });
        }
    }
    emit(out.as_deref(), &bounds::sweep_csv(&rows))?;
    Ok(Outcome::Success)
}
