use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aegis_core::beaver::{dealer_make_triples, triples_to_bytes, TripleForm};
use aegis_core::oracles::Rule;
use aegis_core::protocol::{audit_views, AuditReport, RoundOptions, TwoServerProtocol};
use aegis_core::securenn::run_three_server_multikrum;
use aegis_core::transcript::{export_jsonl, import_jsonl, Net};
use aegis_core::{PartyId, RingConfig, SeedRng};
use clap::{Parser, Subcommand, ValueEnum};

use aegis_sim::bench::{bench_round, write_csv};
use aegis_sim::config::{load_config, resolve_seed, Protocol, SimConfig};
use aegis_sim::error::CliError;
use aegis_sim::task::Task;
use aegis_sim::train::train;

#[derive(Parser)]
#[command(name = "aegis", about = "Secure Byzantine-robust aggregation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    TwoServer,
    ThreeServer,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Protocol {
        match p {
            ProtocolArg::TwoServer => Protocol::TwoServer,
            ProtocolArg::ThreeServer => Protocol::ThreeServer,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Elementwise,
    Inner,
}

#[derive(Subcommand)]
enum Command {
    /// Run one aggregation round and print the revealed aggregate.
    Round {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the protocol from the config file.
        #[arg(long)]
        protocol: Option<ProtocolArg>,
        /// Write per-party transcripts as JSON lines into this directory.
        #[arg(long)]
        transcript_dir: Option<PathBuf>,
    },
    /// Run the full training loop and report per-round metrics.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-round metrics as CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Measure round traffic at growing model dimensions.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        protocol: Option<ProtocolArg>,
        /// Comma-separated list of model dimensions.
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        dims: Vec<usize>,
        /// Write rows as CSV to this path instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check recorded transcripts against the allowed party views.
    Audit {
        #[arg(long)]
        config: PathBuf,
        /// Directory of `<party>.jsonl` transcripts from `round`.
        #[arg(long)]
        transcripts: PathBuf,
    },
    /// Generate Beaver triple share files for both servers.
    Dealer {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value = "inner")]
        form: FormArg,
        #[arg(long, default_value_t = 64)]
        bit_width: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn round_inputs(cfg: &SimConfig, rng: &mut SeedRng) -> Vec<Vec<f64>> {
    let bound = cfg.round.ring.bound;
    let honest: Vec<Vec<f64>> = match cfg.task {
        Some(spec) => {
            let task = Task::generate(spec, cfg.round.n, &mut rng.fork());
            let w = vec![0.0; spec.dim];
            (0..cfg.round.n)
                .map(|i| task.gradient(i, &w, bound).iter().map(|g| -g).collect())
                .collect()
        }
        None => (0..cfg.round.n)
            .map(|_| {
                (0..8)
                    .map(|_| (rng.uniform_below(2000) as f64 / 1000.0) - 1.0)
                    .collect()
            })
            .collect(),
    };
    let mut attack_rng = rng.fork();
    honest
        .iter()
        .enumerate()
        .map(|(i, u)| {
            if cfg.byzantine.contains(&i) {
                cfg.attack
                    .apply(u, &mut attack_rng)
                    .iter()
                    .map(|v| v.clamp(-bound, bound))
                    .collect()
            } else {
                u.clone()
            }
        })
        .collect()
}

fn print_audit(report: &AuditReport) {
    for clause in &report.clauses {
        let status = if clause.pass { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", clause.name, clause.detail);
    }
}

fn cmd_round(
    config: &Path,
    seed: Option<u64>,
    protocol: Option<ProtocolArg>,
    transcript_dir: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = resolve_seed(seed, &cfg)?;
    let protocol = protocol
        .map(Protocol::from)
        .or(cfg.train.map(|t| t.protocol))
        .unwrap_or(Protocol::TwoServer);
    let mut rng = SeedRng::from_seed(seed);
    let inputs = round_inputs(&cfg, &mut rng);
    let opts = RoundOptions::default();
    let out = match protocol {
        Protocol::Plain => {
            return Err(CliError::Config("round runs a secure protocol; use train for the plain baseline".into()))
        }
        Protocol::TwoServer => {
            let mut proto = TwoServerProtocol::new(cfg.round.clone());
            match cfg.round.rule {
                Rule::Mean => match cfg.round.ldp {
                    Some(ldp) => proto
                        .ldp_aggregate(&inputs, ldp.sigma, &opts, &mut rng)
                        .map(|(o, _)| o)?,
                    None => proto.run_round_nonrobust(&inputs, &opts, &mut rng)?,
                },
                _ => {
                    let dim = inputs[0].len();
                    proto.run_round_robust(&inputs, Some(&vec![0.0; dim]), &opts, &mut rng)?
                }
            }
        }
        Protocol::ThreeServer => {
            run_three_server_multikrum(&inputs, &cfg.round, &opts, &mut rng)?
        }
    };
    let z = out.z_real(&cfg.round);
    println!(
        "{}",
        serde_json::json!({
            "seed": seed,
            "participants": out.participants,
            "selected": out.selected.selected(),
            "z": z,
        })
    );
    if let Some(dir) = transcript_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        for (party, t) in &out.net.transcripts {
            let path = dir.join(format!("{party}.jsonl"));
            std::fs::write(&path, export_jsonl(t))
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
    }
    print_audit(&audit_views(&out.net, &cfg.round));
    Ok(())
}

fn cmd_train(config: &Path, seed: Option<u64>, metrics: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = resolve_seed(seed, &cfg)?;
    let report = train(&cfg, seed)?;
    for r in &report.rounds {
        let sel: Vec<String> = r.selected.iter().map(|i| i.to_string()).collect();
        println!(
            "round {:>3}  loss {:>10.6}  selected [{}]  byzantine_selected {}{}",
            r.round,
            r.loss,
            sel.join(" "),
            r.byzantine_selected,
            if r.aborted { "  (aborted)" } else { "" }
        );
    }
    println!("final loss {:.6}", report.final_loss);
    if let Some(path) = metrics {
        let mut text = String::from("round,loss,selected,byzantine_selected,aborted\n");
        for r in &report.rounds {
            let sel: Vec<String> = r.selected.iter().map(|i| i.to_string()).collect();
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round,
                r.loss,
                sel.join(";"),
                r.byzantine_selected,
                r.aborted
            ));
        }
        std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_bench(
    config: &Path,
    seed: Option<u64>,
    protocol: Option<ProtocolArg>,
    dims: &[usize],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let seed = resolve_seed(seed, &cfg)?;
    let protocol = protocol
        .map(Protocol::from)
        .or(cfg.train.map(|t| t.protocol))
        .unwrap_or(Protocol::TwoServer);
    let mut rows = Vec::new();
    for &dim in dims {
        rows.push(bench_round(
            protocol,
            cfg.round.rule,
            cfg.round.n,
            dim,
            cfg.round.ring,
            seed,
        )?);
    }
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            write_csv(&rows, file)?;
        }
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_audit(config: &Path, dir: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mut transcripts = BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Config(e.to_string()))?
            .path();
        if path.extension().is_none_or(|e| e != "jsonl") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Config(format!("bad file name {}", path.display())))?;
        let party: PartyId = stem
            .parse()
            .map_err(|_| CliError::Config(format!("{stem:?} is not a party name")))?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let t = import_jsonl(party, &text).map_err(|e| CliError::Config(e.to_string()))?;
        transcripts.insert(party, t);
    }
    if transcripts.is_empty() {
        return Err(CliError::Config(format!(
            "no .jsonl transcripts in {}",
            dir.display()
        )));
    }
    let net = Net { transcripts };
    let report = audit_views(&net, &cfg.round);
    print_audit(&report);
    if report.pass() {
        Ok(())
    } else {
        Err(CliError::Audit("one or more view clauses failed".into()))
    }
}

fn cmd_dealer(
    count: usize,
    dim: usize,
    form: FormArg,
    bit_width: u32,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let ring = RingConfig::new(bit_width, 0, 1.0).map_err(CliError::from)?;
    let seed = match std::env::var("AEGIS_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("AEGIS_SEED {v:?} is not an integer")))?,
        Err(_) => seed.unwrap_or(0),
    };
    let form = match form {
        FormArg::Elementwise => TripleForm::Elementwise,
        FormArg::Inner => TripleForm::Inner,
    };
    let mut rng = SeedRng::from_seed(seed);
    let (t1, t2) = dealer_make_triples(count, dim, form, &ring, &mut rng);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", out_dir.display())))?;
    for (name, triples) in [("s1.triples", &t1), ("s2.triples", &t2)] {
        let bytes = triples_to_bytes(triples, &ring).map_err(CliError::from)?;
        let path = out_dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    println!("wrote {count} {form:?} triples of dim {dim} to {}", out_dir.display());
    Ok(())
}

impl std::fmt::Debug for FormArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormArg::Elementwise => write!(f, "elementwise"),
            FormArg::Inner => write!(f, "inner"),
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Round { config, seed, protocol, transcript_dir } => {
            cmd_round(&config, seed, protocol, transcript_dir.as_deref())
        }
        Command::Train { config, seed, metrics } => {
            cmd_train(&config, seed, metrics.as_deref())
        }
        Command::Bench { config, seed, protocol, dims, out } => {
            cmd_bench(&config, seed, protocol, &dims, out.as_deref())
        }
        Command::Audit { config, transcripts } => cmd_audit(&config, &transcripts),
        Command::Dealer { count, dim, form, bit_width, seed, out_dir } => {
            cmd_dealer(count, dim, form, bit_width, seed, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
