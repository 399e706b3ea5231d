use std::collections::BTreeMap;
use std::path::Path;

use fedct_core::analysis::{communication_cost, convergence_bound, per_round_change_bound, CommSpec, ConvergenceQuery};
use fedct_core::attacks::{average_epochs, confidence_threshold_attack, label_query_attack, AttackResult};
use fedct_core::privacy::{estimate_sensitivity, flip_probability, sensitivity_bound};
use fedct_core::protocol;
use fedct_core::rng::derive_seed;
use ndarray::ArrayView2;
use serde::Serialize;
use serde_json::json;

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, Manifest, MANIFEST_FILE, ROUNDS_FILE, SUMMARY_FILE};
use crate::{BoundsArgs, CommArgs};

const SENSITIVITY_STREAM: u64 = 0x5e45;
const ATTACK_STREAM: u64 = 0xa77a;

pub fn run(config: &Path, out_dir: &Path) -> CliResult<()> {
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let cfg = LoadedConfig::read(config)?;
    let exp = cfg.experiment()?;
    let data = cfg.experiment_data()?;
    std::fs::create_dir_all(out_dir)?;
    let outcome = protocol::run(&exp, &data)?;
    output::write_rounds(&out_dir.join(ROUNDS_FILE), &outcome.records)?;
    let summary = output::summary(&exp, &data, &outcome)?;
    output::write_json(&out_dir.join(SUMMARY_FILE), &summary)?;
    output::write_json(&out_dir.join(MANIFEST_FILE), &Manifest::new(&cfg, started_at, out_dir))?;
    println!(
        "{} with {} clients: {} communication rounds, final mean test accuracy {:.4}",
        exp.protocol.name(),
        data.num_clients(),
        outcome.records.len(),
        outcome.final_accuracy()
    );
    Ok(())
}

fn print_table(pairs: &[(&str, String)], json: bool) {
    if json {
        let map: BTreeMap<_, _> = pairs.iter().map(|(k, v)| (*k, v.clone())).collect();
        println!("{}", serde_json::to_string_pretty(&map).expect("string map"));
        return;
    }
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in pairs {
        println!("{k:<width$} = {v}");
    }
}

pub fn bounds(args: &BoundsArgs) -> CliResult<()> {
    let convergence = [args.u.is_some(), args.m.is_some(), args.c.is_some(), args.t0.is_some()];
    let sensitivity = [args.n.is_some(), args.rate.is_some(), args.delta.is_some()];
    let bad = |e: fedct_core::Error| match e {
        fedct_core::Error::Config { .. } => CliError::Config(e.to_string()),
        other => CliError::config("bounds", other),
    };
    match (convergence.iter().any(|&b| b), sensitivity.iter().any(|&b| b)) {
        (true, false) => {
            let (Some(u), Some(m), Some(c), Some(t0)) = (args.u, args.m, args.c, args.t0) else {
                return Err(CliError::config("bounds", "the convergence bound needs --u, --m, --c and --t0"));
            };
            let b = convergence_bound(&ConvergenceQuery { u_size: u, m, c, t0 }).map_err(bad)?;
            let mut rows = vec![("raw", format!("{:e}", b.raw)), ("clamped", format!("{:.6}", b.clamped))];
            if let Some(a) = args.accuracy {
                rows.push(("per_round_change_bound", format!("{:e}", per_round_change_bound(u, m, a).map_err(bad)?)));
            }
            print_table(&rows, args.json);
        }
        (false, true) => {
            let (Some(n), Some(rate), Some(delta)) = (args.n, args.rate, args.delta) else {
                return Err(CliError::config("bounds", "the sensitivity bound needs --n, --rate and --delta"));
            };
            let s = sensitivity_bound(n, rate, delta).map_err(bad)?;
            print_table(&[("sensitivity_bound", s.to_string())], args.json);
        }
        _ => {
            return Err(CliError::config(
                "bounds",
                "give either --u --m --c --t0 (convergence) or --n --rate --delta (sensitivity)",
            ))
        }
    }
    Ok(())
}

pub fn sensitivity(config: &Path) -> CliResult<()> {
    let cfg = LoadedConfig::read(config)?;
    let section = cfg.file.sensitivity.clone().unwrap_or(crate::config::SensitivitySection { k: 100, client: 0 });
    let exp = cfg.experiment()?;
    let data = cfg.experiment_data()?;
    if section.client >= data.num_clients() {
        return Err(CliError::config("sensitivity.client", format!("only {} clients configured", data.num_clients())));
    }
    let seed = derive_seed(cfg.file.master_seed, &[SENSITIVITY_STREAM]);
    let report = estimate_sensitivity(
        &exp.learner_config(section.client),
        &data.clients[section.client],
        &data.unlabeled,
        section.k,
        seed,
    )
    .map_err(|e| match e {
        fedct_core::Error::InvalidArgument(_) => CliError::config("sensitivity", e),
        other => other.into(),
    })?;
    let flip_prob = match (cfg.file.noise.as_ref().and_then(|n| n.epsilon), report.entry_hamming_max) {
        (Some(eps), s) if s > 0 => Some(flip_probability(eps, s as u64)?),
        _ => None,
    };
    let value = json!({
        "client": section.client,
        "k": section.k,
        "u_size": data.unlabeled.len(),
        "row_hamming_max": report.row_hamming_max,
        "entry_hamming_max": report.entry_hamming_max,
        "trial_rows": report.trial_rows,
        "flip_prob_for_epsilon": flip_prob,
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

#[derive(Serialize)]
struct AttackSummary {
    auc: f64,
    n_members: usize,
    n_nonmembers: usize,
}

impl From<&AttackResult> for AttackSummary {
    fn from(r: &AttackResult) -> Self {
        Self { auc: r.auc, n_members: r.n_members, n_nonmembers: r.n_nonmembers }
    }
}

/// Members are the pooled client training sets and nonmembers the test set.
/// Epoch `k > 0` retrains under a seed derived from the master seed and `k`.
pub fn attack(config: &Path) -> CliResult<()> {
    let cfg = LoadedConfig::read(config)?;
    let epochs = cfg.file.attack.as_ref().map_or(1, |a| a.epochs);
    if epochs == 0 {
        return Err(CliError::config("attack.epochs", "need at least one epoch"));
    }
    let data = cfg.experiment_data()?;
    let members = data.pooled()?;
    let mut labels = Vec::with_capacity(epochs);
    let mut confidences = Vec::with_capacity(epochs);
    for k in 0..epochs {
        let mut exp = cfg.experiment()?;
        if k > 0 {
            exp.master_seed = derive_seed(cfg.file.master_seed, &[ATTACK_STREAM, k as u64]);
        }
        let outcome = protocol::run(&exp, &data)?;
        let predictors: Vec<_> = outcome.states.iter().map(|s| move |x: ArrayView2<'_, f64>| s.predict_hard(x)).collect();
        labels.push(label_query_attack(&predictors, &members, &data.test)?);
        confidences.push(confidence_threshold_attack(&outcome.states[0], &members, &data.test)?);
    }
    let value = json!({
        "protocol": cfg.file.protocol,
        "epochs": epochs,
        "label_query": AttackSummary::from(&average_epochs(&labels)?),
        "confidence": AttackSummary::from(&average_epochs(&confidences)?),
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

pub fn comm(args: &CommArgs) -> CliResult<()> {
    if args.period == 0 || args.period > args.rounds.max(1) {
        return Err(CliError::config("period", "need 1 <= period <= rounds"));
    }
    let cost = communication_cost(&CommSpec {
        protocol: args.protocol,
        u_size: args.u,
        num_classes: args.classes,
        parameter_count: args.params,
        bits_per_parameter: args.bits,
        rounds: args.rounds,
        period: args.period,
    });
    println!("{}", serde_json::to_string_pretty(&json!({ "protocol": args.protocol, "cost": cost }))?);
    Ok(())
}

pub fn report(dir: &Path) -> CliResult<()> {
    let path = dir.join(ROUNDS_FILE);
    if !path.exists() {
        return Err(CliError::config("dir", format!("{} not found", path.display())));
    }
    let rows = output::read_rounds(&path)?;
    let mut by_round: BTreeMap<usize, Vec<output::RoundRow>> = BTreeMap::new();
    for r in rows {
        by_round.entry(r.round).or_default().push(r);
    }
    println!("# round mean_train_acc mean_test_acc std_test_acc consensus_changes pool_size bytes_sent");
    for (round, rs) in by_round {
        let n = rs.len() as f64;
        let mean = |f: fn(&output::RoundRow) -> f64| rs.iter().map(f).sum::<f64>() / n;
        let test = mean(|r| r.test_acc);
        let std = (rs.iter().map(|r| (r.test_acc - test).powi(2)).sum::<f64>() / n).sqrt();
        println!(
            "{round} {:.6} {test:.6} {std:.6} {} {} {}",
            mean(|r| r.train_acc),
            rs[0].consensus_changes,
            rs[0].pool_size,
            rs.iter().map(|r| r.bytes_sent).sum::<u64>()
        );
    }
    Ok(())
}
