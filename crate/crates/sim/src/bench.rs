//! Communication benchmarks: exact byte counts taken from round transcripts,
//! with transfer-time estimates at common link speeds.

use std::io::Write;

use aegis_core::oracles::Rule;
use aegis_core::protocol::{RoundConfig, RoundOptions, TwoServerProtocol};
use aegis_core::securenn::run_three_server_multikrum;
use aegis_core::transcript::Net;
use aegis_core::{PartyId, RingConfig, SeedRng};
use serde::Serialize;

use crate::config::Protocol;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub protocol: String,
    pub rule: String,
    pub n: usize,
    pub dim: usize,
    /// Bytes one worker uploads (both shares, headers included).
    pub worker_uplink_bytes: usize,
    /// Total bytes exchanged between S1 and S2.
    pub server_exchange_bytes: usize,
    /// Total bytes to and from the crypto provider (three-server only).
    pub s3_exchange_bytes: usize,
    /// Uplink of the insecure baseline: one raw vector of 8-byte words.
    pub plaintext_uplink_bytes: usize,
    pub uplink_overhead_ratio: f64,
    pub worker_uplink_ms_100mbps: f64,
    pub worker_uplink_ms_1gbps: f64,
}

fn ms_at(bytes: usize, bits_per_second: f64) -> f64 {
    bytes as f64 * 8.0 / bits_per_second * 1e3
}

fn row_from_net(
    net: &Net,
    protocol: &str,
    rule: &str,
    n: usize,
    dim: usize,
) -> BenchRow {
    let w0 = net.transcript(PartyId::Worker(0));
    let uplink = w0.map(|t| t.bytes_sent()).unwrap_or(0);
    let s1 = net.transcript(PartyId::S1);
    let s2 = net.transcript(PartyId::S2);
    let server_exchange = s1.map(|t| t.bytes_sent_to(PartyId::S2)).unwrap_or(0)
        + s2.map(|t| t.bytes_sent_to(PartyId::S1)).unwrap_or(0);
    let s3_exchange = net
        .transcript(PartyId::S3)
        .map(|t| t.bytes_sent())
        .unwrap_or(0)
        + s1.map(|t| t.bytes_sent_to(PartyId::S3)).unwrap_or(0)
        + s2.map(|t| t.bytes_sent_to(PartyId::S3)).unwrap_or(0);
    let plaintext = 8 * dim;
    BenchRow {
        protocol: protocol.into(),
        rule: rule.into(),
        n,
        dim,
        worker_uplink_bytes: uplink,
        server_exchange_bytes: server_exchange,
        s3_exchange_bytes: s3_exchange,
        plaintext_uplink_bytes: plaintext,
        uplink_overhead_ratio: uplink as f64 / plaintext as f64,
        worker_uplink_ms_100mbps: ms_at(uplink, 100e6),
        worker_uplink_ms_1gbps: ms_at(uplink, 1e9),
    }
}

/// Run one aggregation round at the given size and measure traffic.
pub fn bench_round(
    protocol: Protocol,
    rule: Rule,
    n: usize,
    dim: usize,
    ring: RingConfig,
    seed: u64,
) -> Result<BenchRow, CliError> {
    let cfg = RoundConfig::new(n, rule, ring);
    let mut rng = SeedRng::from_seed(seed);
    let mut data_rng = SeedRng::from_seed(seed ^ 0x5eed);
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| (data_rng.uniform_below(2000) as f64 / 1000.0) - 1.0)
                .collect()
        })
        .collect();
    let opts = RoundOptions::default();
    let (name, rule_name, net) = match (protocol, rule) {
        (Protocol::Plain, _) => {
            return Err(CliError::Config("nothing to measure for the plain baseline".into()))
        }
        (Protocol::TwoServer, Rule::Mean) => {
            let mut proto = TwoServerProtocol::new(cfg.clone());
            let out = proto.run_round_nonrobust(&inputs, &opts, &mut rng)?;
            ("two_server", "mean", out.net)
        }
        (Protocol::TwoServer, r) => {
            let mut proto = TwoServerProtocol::new(cfg.clone());
            let out = proto.run_round_robust(&inputs, Some(&vec![0.0; dim]), &opts, &mut rng)?;
            let rn = if matches!(r, Rule::MultiKrum { .. }) { "multi_krum" } else { "byz_sgd" };
            ("two_server", rn, out.net)
        }
        (Protocol::ThreeServer, Rule::MultiKrum { .. }) => {
            let out = run_three_server_multikrum(&inputs, &cfg, &opts, &mut rng)?;
            ("three_server", "multi_krum", out.net)
        }
        (Protocol::ThreeServer, _) => {
            return Err(CliError::Config(
                "the three-server protocol only implements multi_krum".into(),
            ))
        }
    };
    Ok(row_from_net(&net, name, rule_name, n, dim))
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)
            .map_err(|e| CliError::Protocol(format!("csv: {e}")))?;
    }
    wtr.flush().map_err(|e| CliError::Protocol(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_uplink_is_shares_plus_headers() {
        let ring = RingConfig::new(64, 16, 256.0).unwrap();
        let row =
            bench_round(Protocol::TwoServer, Rule::Mean, 3, 1000, ring, 1).unwrap();
        // two messages of 24-byte header + 10-byte vector header + 8d payload
        assert_eq!(row.worker_uplink_bytes, 2 * (34 + 8 * 1000));
        assert!(row.uplink_overhead_ratio > 2.0 && row.uplink_overhead_ratio < 2.1);
    }

    #[test]
    fn overhead_ratio_shrinks_with_dimension() {
        let ring = RingConfig::new(64, 16, 256.0).unwrap();
        let small =
            bench_round(Protocol::TwoServer, Rule::Mean, 3, 100, ring, 1).unwrap();
        let large =
            bench_round(Protocol::TwoServer, Rule::Mean, 3, 10_000, ring, 1).unwrap();
        assert!(large.uplink_overhead_ratio < small.uplink_overhead_ratio);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let ring = RingConfig::new(64, 16, 256.0).unwrap();
        let rows = vec![
            bench_round(Protocol::TwoServer, Rule::Mean, 3, 50, ring, 1).unwrap(),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("protocol,"));
    }
}
