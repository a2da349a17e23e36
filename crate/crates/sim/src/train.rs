//! Training harness: workers compute gradients on their shards, Byzantine
//! workers substitute attack vectors, and the chosen protocol aggregates.

use aegis_core::oracles::{ReferenceAggregator, Rule, WeightVector};
use aegis_core::protocol::{RoundOptions, TwoServerProtocol};
use aegis_core::ring::{decode_fixed, encode_fixed};
use aegis_core::securenn::run_three_server_multikrum;
use aegis_core::{Error, SeedRng};
use serde::Serialize;

use crate::config::{Protocol, SimConfig};
use crate::error::CliError;
use crate::task::Task;

#[derive(Debug, Clone, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub loss: f64,
    pub selected: Vec<usize>,
    pub byzantine_selected: usize,
    pub aborted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub rounds: Vec<RoundMetrics>,
    pub final_loss: f64,
    pub weights: Vec<f64>,
}

/// Per-worker submissions for one round: honest gradients, with attack
/// vectors substituted for the Byzantine set. Updates point down the loss
/// (`-gradient`) and stay inside the encoding bound.
fn build_updates(
    task: &Task,
    w: &[f64],
    cfg: &SimConfig,
    rng: &mut SeedRng,
) -> Vec<Vec<f64>> {
    let bound = cfg.round.ring.bound;
    (0..cfg.round.n)
        .map(|i| {
            let honest: Vec<f64> =
                task.gradient(i, w, bound).iter().map(|g| -g).collect();
            if cfg.byzantine.contains(&i) {
                cfg.attack
                    .apply(&honest, rng)
                    .iter()
                    .map(|v| v.clamp(-bound, bound))
                    .collect()
            } else {
                honest
            }
        })
        .collect()
}

pub fn train(cfg: &SimConfig, seed: u64) -> Result<TrainReport, CliError> {
    let spec = cfg
        .task
        .ok_or_else(|| CliError::Config("training needs a [task] section".into()))?;
    let tr = cfg
        .train
        .ok_or_else(|| CliError::Config("training needs a [train] section".into()))?;
    if spec.dim == 0 || tr.rounds == 0 {
        return Err(CliError::Config("task.dim and train.rounds must be positive".into()));
    }
    let ring = cfg.round.ring;
    let mut rng = SeedRng::from_seed(seed);
    let task = Task::generate(spec, cfg.round.n, &mut rng.fork());
    let mut attack_rng = rng.fork();

    let mut w = vec![0.0; spec.dim];
    let w0 = w.clone();
    let mut proto = TwoServerProtocol::new(cfg.round.clone());
    let mut reference = ReferenceAggregator::new(cfg.round.rule, ring);
    let mut metrics = Vec::with_capacity(tr.rounds);

    for round in 0..tr.rounds {
        let updates = build_updates(&task, &w, cfg, &mut attack_rng);
        let delta: Vec<f64> = w.iter().zip(&w0).map(|(a, b)| a - b).collect();
        let opts = RoundOptions::default();
        let outcome: Result<(Vec<f64>, WeightVector), Error> = match tr.protocol {
            Protocol::Plain => {
                let xs = updates
                    .iter()
                    .map(|u| encode_fixed(u, &ring))
                    .collect::<Result<Vec<_>, _>>()?;
                let denc = encode_fixed(&delta, &ring)?;
                reference.aggregate(&xs, Some(&denc)).map(|(z, p)| {
                    let div = if cfg.round.average {
                        p.count_selected().max(1) as f64
                    } else {
                        1.0
                    };
                    let zr = decode_fixed(&z, &ring).iter().map(|v| v / div).collect();
                    (zr, p)
                })
            }
            Protocol::TwoServer => {
                let res = match cfg.round.rule {
                    Rule::Mean => match cfg.round.ldp {
                        Some(ldp) => proto
                            .ldp_aggregate(&updates, ldp.sigma, &opts, &mut rng)
                            .map(|(o, _)| o),
                        None => proto.run_round_nonrobust(&updates, &opts, &mut rng),
                    },
                    _ => proto.run_round_robust(&updates, Some(&delta), &opts, &mut rng),
                };
                res.map(|o| (o.z_real(&cfg.round), o.selected))
            }
            Protocol::ThreeServer => {
                run_three_server_multikrum(&updates, &cfg.round, &opts, &mut rng)
                    .map(|o| (o.z_real(&cfg.round), o.selected))
            }
        };
        match outcome {
            Ok((z, p)) => {
                for (wi, zi) in w.iter_mut().zip(&z) {
                    *wi += tr.eta * zi;
                }
                let selected = p.selected();
                let byz = selected.iter().filter(|i| cfg.byzantine.contains(i)).count();
                metrics.push(RoundMetrics {
                    round,
                    loss: task.loss(&w),
                    selected,
                    byzantine_selected: byz,
                    aborted: false,
                });
            }
            Err(Error::OracleAbort) => {
                // round dropped, model and oracle state untouched
                metrics.push(RoundMetrics {
                    round,
                    loss: task.loss(&w),
                    selected: Vec::new(),
                    byzantine_selected: 0,
                    aborted: true,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }

    Ok(TrainReport { final_loss: task.loss(&w), weights: w, rounds: metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn base_config(rule: &str, protocol: &str, attack: &str) -> SimConfig {
        let text = format!(
            r#"
seed = 3
[ring]
bit_width = 64
frac_bits = 16
bound = 64.0
{rule}
[round]
n = 5
alpha = 0.3
{attack}
[task]
kind = "linear_regression"
dim = 4
samples = 40
[train]
rounds = 15
eta = 0.3
protocol = "{protocol}"
"#
        );
        parse_config(&text).unwrap()
    }

    const MEAN: &str = "[rule]\nkind = \"mean\"";
    const KRUM: &str = "[rule]\nkind = \"multi_krum\"\nf = 1\nm = 3";
    const FLIP: &str =
        "[attack]\nkind = \"sign_flip\"\nfactor = 3.0\nbyzantine = [4]";

    #[test]
    fn mean_training_converges_without_attack() {
        let cfg = base_config(MEAN, "two_server", "");
        let report = train(&cfg, 3).unwrap();
        let first = report.rounds.first().unwrap().loss;
        assert!(report.final_loss < first / 4.0, "{report:?}");
    }

    #[test]
    fn multikrum_filters_sign_flip_attacker() {
        let cfg = base_config(KRUM, "two_server", FLIP);
        let report = train(&cfg, 4).unwrap();
        let byz_picks: usize =
            report.rounds.iter().map(|r| r.byzantine_selected).sum();
        assert_eq!(byz_picks, 0, "attacker must never be selected");
        let first = report.rounds.first().unwrap().loss;
        assert!(report.final_loss < first);
    }

    #[test]
    fn mean_training_is_poisoned_by_sign_flip() {
        let robust = train(&base_config(KRUM, "two_server", FLIP), 5).unwrap();
        let naive = train(&base_config(MEAN, "two_server", FLIP), 5).unwrap();
        assert!(robust.final_loss < naive.final_loss);
    }

    #[test]
    fn secure_training_matches_plain_oracle() {
        let secure = train(&base_config(KRUM, "two_server", FLIP), 6).unwrap();
        let plain = train(&base_config(KRUM, "plain", FLIP), 6).unwrap();
        // same rule, same data, same attack stream: identical trajectories
        for (a, b) in secure.rounds.iter().zip(&plain.rounds) {
            assert_eq!(a.selected, b.selected);
        }
        for (a, b) in secure.weights.iter().zip(&plain.weights) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
