//! TOML experiment configuration and its translation into protocol types.

use std::collections::BTreeSet;
use std::path::Path;

use aegis_core::oracles::{ByzSgdParams, Rule};
use aegis_core::protocol::{LdpConfig, RoundConfig};
use aegis_core::RingConfig;
use serde::{Deserialize, Serialize};

use crate::attack::AttackSpec;
use crate::error::CliError;
use crate::task::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// No secret sharing; the baseline the secure paths are compared to.
    Plain,
    #[default]
    TwoServer,
    ThreeServer,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RingSection {
    bit_width: u32,
    frac_bits: u32,
    bound: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RuleSection {
    Mean,
    MultiKrum {
        f: usize,
        m: usize,
    },
    /// Real-valued thresholds; `t_a`, `t_b` and `nu2` are encoded at the
    /// squared-distance scale.
    ByzSgd {
        t_a: f64,
        t_b: f64,
        nu2: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundSection {
    n: usize,
    #[serde(default)]
    alpha: f64,
    #[serde(default = "default_true")]
    average: bool,
}

fn default_true() -> bool {
    true
}

// no deny_unknown_fields here: serde cannot combine it with flatten
#[derive(Debug, Clone, Deserialize)]
struct AttackSection {
    #[serde(flatten)]
    spec: AttackSpec,
    #[serde(default)]
    byzantine: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub rounds: usize,
    pub eta: f64,
    #[serde(default)]
    pub protocol: Protocol,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    ring: RingSection,
    rule: RuleSection,
    round: RoundSection,
    ldp: Option<LdpConfig>,
    attack: Option<AttackSection>,
    task: Option<TaskSpec>,
    train: Option<TrainSection>,
}

fn default_seed() -> u64 {
    0
}

/// Fully resolved experiment setup.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub round: RoundConfig,
    pub attack: AttackSpec,
    pub byzantine: BTreeSet<usize>,
    pub task: Option<TaskSpec>,
    pub train: Option<TrainSection>,
}

/// Encode a non-negative real threshold at the squared-distance scale.
fn encode_scale2(v: f64, ring: &RingConfig) -> Result<u64, CliError> {
    if v.is_nan() || v < 0.0 {
        return Err(CliError::Config(format!("threshold {v} must be >= 0")));
    }
    let scaled = v * (2f64.powi(ring.frac_bits as i32)).powi(2);
    if scaled >= 2f64.powi(ring.bit_width as i32 - 1) {
        return Err(CliError::Config(format!("threshold {v} overflows the ring")));
    }
    Ok(scaled.round() as u64)
}

pub fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let file: FileConfig =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let ring = RingConfig::new(file.ring.bit_width, file.ring.frac_bits, file.ring.bound)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rule = match file.rule {
        RuleSection::Mean => Rule::Mean,
        RuleSection::MultiKrum { f, m } => Rule::MultiKrum { f, m },
        RuleSection::ByzSgd { t_a, t_b, nu2 } => Rule::ByzSgd {
            params: ByzSgdParams {
                t_a: encode_scale2(t_a, &ring)?,
                t_b: encode_scale2(t_b, &ring)?,
                nu: encode_scale2(nu2, &ring)?,
            },
        },
    };
    if file.round.n == 0 {
        return Err(CliError::Config("round.n must be positive".into()));
    }
    if !(0.0..0.5).contains(&file.round.alpha) {
        return Err(CliError::Config(format!(
            "alpha {} outside [0, 0.5)",
            file.round.alpha
        )));
    }
    let (attack, byzantine) = match file.attack {
        Some(a) => {
            let byz: BTreeSet<usize> = a.byzantine.iter().copied().collect();
            if let Some(&bad) = byz.iter().find(|&&i| i >= file.round.n) {
                return Err(CliError::Config(format!(
                    "byzantine worker {bad} out of range (n = {})",
                    file.round.n
                )));
            }
            let max_byz = (file.round.alpha * file.round.n as f64).floor() as usize;
            if byz.len() > max_byz {
                return Err(CliError::Config(format!(
                    "{} byzantine workers exceeds floor(alpha * n) = {max_byz}",
                    byz.len()
                )));
            }
            (a.spec, byz)
        }
        None => (AttackSpec::None, BTreeSet::new()),
    };
    let round = RoundConfig {
        n: file.round.n,
        alpha: file.round.alpha,
        rule,
        ring,
        ldp: file.ldp,
        average: file.round.average,
    };
    Ok(SimConfig {
        seed: file.seed,
        round,
        attack,
        byzantine,
        task: file.task,
        train: file.train,
    })
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Effective root seed: the `AEGIS_SEED` environment variable wins over the
/// `--seed` flag, which wins over the config file.
pub fn resolve_seed(cli: Option<u64>, cfg: &SimConfig) -> Result<u64, CliError> {
    if let Ok(v) = std::env::var("AEGIS_SEED") {
        return v
            .parse()
            .map_err(|_| CliError::Config(format!("AEGIS_SEED {v:?} is not an integer")));
    }
    Ok(cli.unwrap_or(cfg.seed))
}
