//! Two-server round schedules: non-robust aggregation, distance-based robust
//! aggregation, the stateful ByzantineSGD variant, and the LDP noise
//! mechanism. Parties are driven in schedule order by a deterministic
//! orchestrator; every transfer goes through [`Net`] and lands in both
//! endpoint transcripts.

use std::collections::BTreeSet;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::beaver::{
    beaver_combine, beaver_open, BeaverTripleShare, BlindedOpen, TripleDealer, TripleForm,
};
use crate::error::{Error, Result};
use crate::oracles::{
    byzantine_sgd_select, mean_weights, multi_krum, DistanceSet, Rule, WeightVector,
};
use crate::ring::{
    decode_fixed, encode_fixed, reconstruct, serialize_elems, share, PartyId, RingConfig,
    RingVector, ShareVector,
};
use crate::rng::SeedRng;
use crate::transcript::{Message, MessageKind, Net, PartyTranscript};

/// Gaussian mechanism parameters: per-coordinate noise deviation and the
/// step size of the model update it protects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdpConfig {
    pub sigma: f64,
    pub eta: f64,
}

/// Per-round configuration shared by all parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub n: usize,
    /// Byzantine fraction bound (< 0.5); at most `floor(alpha * n)` workers
    /// may be marked Byzantine by the harness.
    pub alpha: f64,
    pub rule: Rule,
    pub ring: RingConfig,
    pub ldp: Option<LdpConfig>,
    /// Divide the revealed aggregate by the selected count (plaintext
    /// division on S1 after reveal).
    pub average: bool,
}

impl RoundConfig {
    pub fn new(n: usize, rule: Rule, ring: RingConfig) -> Self {
        RoundConfig { n, alpha: 0.0, rule, ring, ldp: None, average: false }
    }
}

/// Deliberately broken behaviors for audit fault-injection tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// S2 forwards plaintext distances to S1.
    LeakDistancesToS1,
    /// S1 forwards a gradient share to the crypto provider (three-server).
    GradientShareToS3,
}

/// Knobs for a single round: simulated dropouts and fault injection.
#[derive(Debug, Clone, Default)]
pub struct RoundOptions {
    /// Workers whose share never reaches S1.
    pub drop_at_s1: BTreeSet<usize>,
    /// Workers whose share never reaches S2.
    pub drop_at_s2: BTreeSet<usize>,
    pub fault: Option<Fault>,
}

/// Result of one aggregation round.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    /// Revealed ring aggregate `sum_i p_i x_i` (pre-division).
    pub z_ring: RingVector,
    pub selected: WeightVector,
    /// Workers whose shares arrived at both servers, in index order.
    pub participants: Vec<usize>,
    pub net: Net,
}

impl RoundOutput {
    /// Decoded aggregate; divided by the selected count when `average` is set.
    pub fn z_real(&self, cfg: &RoundConfig) -> Vec<f64> {
        let div = if cfg.average { self.selected.count_selected().max(1) as f64 } else { 1.0 };
        decode_fixed(&self.z_ring, &cfg.ring).iter().map(|v| v / div).collect()
    }
}

/// Stateless worker handle. Exists mostly to make statelessness testable:
/// there is nothing to persist between rounds.
#[derive(Debug, Clone, Copy, Default)]
pub struct Worker;

impl Worker {
    /// Serialized persistent state carried across rounds: none.
    pub fn persistent_state(&self) -> Vec<u8> {
        Vec::new()
    }
}

/// Split a private update into two share-upload messages, one per server.
/// The worker keeps no state.
pub fn worker_submit(
    worker: usize,
    x: &[f64],
    cfg: &RoundConfig,
    round: u64,
    rng: &mut SeedRng,
) -> Result<(Message, Message)> {
    let encoded = encode_fixed(x, &cfg.ring)?;
    let (s1, s2) = share(&encoded, &cfg.ring, rng);
    let from = PartyId::Worker(worker as u32);
    let mk = |to, sv: &ShareVector| Message {
        round,
        from,
        to,
        kind: MessageKind::ShareUpload,
        payload: sv.to_bytes(&cfg.ring),
    };
    Ok((mk(PartyId::S1, &s1), mk(PartyId::S2, &s2)))
}

fn index_set_payload(cfg: &RingConfig, indices: &BTreeSet<usize>) -> Vec<u8> {
    let elems: Vec<u64> = indices.iter().map(|&i| i as u64).collect();
    serialize_elems(cfg.bit_width, 0, &elems)
}

/// Collection phase: workers upload shares, servers agree on the worker set
/// whose shares arrived at both, by exchanging index sets.
pub(crate) fn collect_shares(
    inputs: &[Vec<f64>],
    cfg: &RoundConfig,
    opts: &RoundOptions,
    round: u64,
    net: &mut Net,
    rng: &mut SeedRng,
) -> Result<(Vec<usize>, Vec<ShareVector>, Vec<ShareVector>)> {
    let mut at_s1: Vec<Option<ShareVector>> = vec![None; inputs.len()];
    let mut at_s2: Vec<Option<ShareVector>> = vec![None; inputs.len()];
    for (i, x) in inputs.iter().enumerate() {
        let mut wrng = rng.fork();
        let (m1, m2) = worker_submit(i, x, cfg, round, &mut wrng)?;
        if !opts.drop_at_s1.contains(&i) {
            at_s1[i] = Some(ShareVector {
                party: PartyId::S1,
                ..deserialize_share(PartyId::S1, &m1.payload)?
            });
            net.send(m1);
        }
        if !opts.drop_at_s2.contains(&i) {
            at_s2[i] = Some(deserialize_share(PartyId::S2, &m2.payload)?);
            net.send(m2);
        }
    }
    // index agreement: one extra exchange, ShareUpload metadata
    let set1: BTreeSet<usize> =
        (0..inputs.len()).filter(|&i| at_s1[i].is_some()).collect();
    let set2: BTreeSet<usize> =
        (0..inputs.len()).filter(|&i| at_s2[i].is_some()).collect();
    net.send(Message {
        round,
        from: PartyId::S1,
        to: PartyId::S2,
        kind: MessageKind::ShareUpload,
        payload: index_set_payload(&cfg.ring, &set1),
    });
    net.send(Message {
        round,
        from: PartyId::S2,
        to: PartyId::S1,
        kind: MessageKind::ShareUpload,
        payload: index_set_payload(&cfg.ring, &set2),
    });
    let participants: Vec<usize> = set1.intersection(&set2).copied().collect();
    if participants.is_empty() {
        return Err(Error::Protocol("no worker shares arrived at both servers".into()));
    }
    let s1 = participants.iter().map(|&i| at_s1[i].clone().unwrap()).collect();
    let s2 = participants.iter().map(|&i| at_s2[i].clone().unwrap()).collect();
    Ok((participants, s1, s2))
}

fn deserialize_share(party: PartyId, payload: &[u8]) -> Result<ShareVector> {
    let (_, scale, elems) = crate::ring::deserialize_elems(payload)?;
    Ok(ShareVector { party, elems, scale })
}

fn blinded_open_payload(cfg: &RingConfig, open: &BlindedOpen) -> Vec<u8> {
    let mut out = open.triple_id.to_le_bytes().to_vec();
    out.extend_from_slice(&serialize_elems(cfg.bit_width, open.x_scale, &open.x_minus_a));
    out.extend_from_slice(&serialize_elems(cfg.bit_width, open.y_scale, &open.y_minus_b));
    out
}

/// Run one Beaver opening across the two servers, logging the exchanged
/// blinded opens, and return each server's share of the product.
#[allow(clippy::too_many_arguments)]
pub(crate) fn beaver_exchange(
    x1: &ShareVector,
    y1: &ShareVector,
    x2: &ShareVector,
    y2: &ShareVector,
    t1: &mut BeaverTripleShare,
    t2: &mut BeaverTripleShare,
    cfg: &RingConfig,
    round: u64,
    net: &mut Net,
) -> Result<(ShareVector, ShareVector)> {
    let o1 = beaver_open(x1, y1, t1, cfg)?;
    let o2 = beaver_open(x2, y2, t2, cfg)?;
    net.send(Message {
        round,
        from: PartyId::S1,
        to: PartyId::S2,
        kind: MessageKind::BlindedOpen,
        payload: blinded_open_payload(cfg, &o1),
    });
    net.send(Message {
        round,
        from: PartyId::S2,
        to: PartyId::S1,
        kind: MessageKind::BlindedOpen,
        payload: blinded_open_payload(cfg, &o2),
    });
    let public = o1.combine(&o2, cfg)?;
    Ok((beaver_combine(&public, t1, cfg)?, beaver_combine(&public, t2, cfg)?))
}

/// Squared distance revealed to S2 only: S1 sends its product share.
fn reveal_scalar_to_s2(
    z1: &ShareVector,
    z2: &ShareVector,
    label: &str,
    cfg: &RingConfig,
    round: u64,
    net: &mut Net,
) -> Result<u64> {
    net.send(Message {
        round,
        from: PartyId::S1,
        to: PartyId::S2,
        kind: MessageKind::DistanceReveal,
        payload: z1.to_bytes(cfg),
    });
    let v = reconstruct(z1, z2, cfg)?;
    net.reveal(PartyId::S2, round, label, v.clone());
    Ok(v.elems[0])
}

/// Protocol engine for the two-server schedules. Holds the ByzantineSGD
/// oracle state between rounds; workers stay stateless.
pub struct TwoServerProtocol {
    pub cfg: RoundConfig,
    round: u64,
    // ByzantineSGD state: accumulated inner products (plaintext on S2) and
    // accumulated gradient shares on each server, indexed by worker.
    a_old: Vec<u64>,
    b_old_s1: Vec<ShareVector>,
    b_old_s2: Vec<ShareVector>,
}

impl TwoServerProtocol {
    pub fn new(cfg: RoundConfig) -> Self {
        TwoServerProtocol {
            cfg,
            round: 0,
            a_old: Vec::new(),
            b_old_s1: Vec::new(),
            b_old_s2: Vec::new(),
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Non-robust aggregation: servers sum shares locally; S2 sends its sum
    /// share to S1; S1 reveals `z`.
    pub fn run_round_nonrobust(
        &mut self,
        inputs: &[Vec<f64>],
        opts: &RoundOptions,
        rng: &mut SeedRng,
    ) -> Result<RoundOutput> {
        if !matches!(self.cfg.rule, Rule::Mean) {
            return Err(Error::Protocol("non-robust round requires the mean rule".into()));
        }
        let round = self.round;
        let ring = self.cfg.ring;
        let mut net = Net::new();
        let (participants, s1, s2) =
            collect_shares(inputs, &self.cfg, opts, round, &mut net, rng)?;
        let ones = vec![1i64; participants.len()];
        let sum1 = crate::ring::ring_linear(&s1, &ones, &ring)?;
        let sum2 = crate::ring::ring_linear(&s2, &ones, &ring)?;
        net.send(Message {
            round,
            from: PartyId::S2,
            to: PartyId::S1,
            kind: MessageKind::AggregateShare,
            payload: sum2.to_bytes(&ring),
        });
        let z = reconstruct(&sum1, &sum2, &ring)?;
        net.reveal(PartyId::S1, round, "z", z.clone());
        broadcast_model(&z, inputs.len(), &ring, round, &mut net);
        self.round += 1;
        Ok(RoundOutput {
            z_ring: z,
            selected: mean_weights(participants.len()),
            participants,
            net,
        })
    }

    /// Robust aggregation: secure pairwise distances revealed to S2 only,
    /// oracle on S2, secret-shared weights, Beaver-multiplied aggregate
    /// revealed to S1. `model_delta` (`w - w0`) is required by ByzantineSGD.
    pub fn run_round_robust(
        &mut self,
        inputs: &[Vec<f64>],
        model_delta: Option<&[f64]>,
        opts: &RoundOptions,
        rng: &mut SeedRng,
    ) -> Result<RoundOutput> {
        let round = self.round;
        let ring = self.cfg.ring;
        let dim = inputs.first().map(|v| v.len()).unwrap_or(0);
        ring.supports_dim(dim)?;
        let mut dealer_rng = rng.fork();
        let mut net = Net::new();
        let (participants, xs1, xs2) =
            collect_shares(inputs, &self.cfg, opts, round, &mut net, rng)?;
        let k = participants.len();
        let npairs = k * (k - 1) / 2;
        let mut dealer = TripleDealer::new(ring);

        // ByzantineSGD pre-phase: accumulate A_i and B_i
        let (a_vals, b1, b2) = if let Rule::ByzSgd { .. } = self.cfg.rule {
            let delta = model_delta
                .ok_or_else(|| Error::Protocol("byzantine-sgd needs w - w0".into()))?;
            if self.a_old.is_empty() {
                self.a_old = vec![0; inputs.len()];
                let z1 = ShareVector::zeros(PartyId::S1, dim, 1);
                let z2 = ShareVector::zeros(PartyId::S2, dim, 1);
                self.b_old_s1 = vec![z1; inputs.len()];
                self.b_old_s2 = vec![z2; inputs.len()];
            }
            // S1 encodes and shares w - w0, uploading S2's share
            let delta_enc = encode_fixed(delta, &ring)?;
            let (d1, d2) = share(&delta_enc, &ring, rng);
            net.send(Message {
                round,
                from: PartyId::S1,
                to: PartyId::S2,
                kind: MessageKind::ShareUpload,
                payload: d2.to_bytes(&ring),
            });
            let (mut ta1, mut ta2) =
                dealer.make_triples(k, dim, TripleForm::Inner, &mut dealer_rng);
            let mut a_vals = Vec::with_capacity(k);
            for (pos, &i) in participants.iter().enumerate() {
                let (z1, z2) = beaver_exchange(
                    &xs1[pos], &d1, &xs2[pos], &d2, &mut ta1[pos], &mut ta2[pos], &ring,
                    round, &mut net,
                )?;
                let inner =
                    reveal_scalar_to_s2(&z1, &z2, &format!("A({i})"), &ring, round, &mut net)?;
                a_vals.push(ring.add(inner, self.a_old[i]));
            }
            let b1: Vec<ShareVector> = participants
                .iter()
                .zip(&xs1)
                .map(|(&i, x)| x.add(&self.b_old_s1[i], &ring))
                .collect::<Result<_>>()?;
            let b2: Vec<ShareVector> = participants
                .iter()
                .zip(&xs2)
                .map(|(&i, x)| x.add(&self.b_old_s2[i], &ring))
                .collect::<Result<_>>()?;
            (a_vals, b1, b2)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };

        // pairwise squared distances, revealed to S2 only
        let dist_for = |vs1: &[ShareVector],
                            vs2: &[ShareVector],
                            tag: &str,
                            dealer: &mut TripleDealer,
                            dealer_rng: &mut SeedRng,
                            net: &mut Net|
         -> Result<DistanceSet> {
            let (mut t1, mut t2) =
                dealer.make_triples(npairs, dim, TripleForm::Inner, dealer_rng);
            let mut entries = Vec::with_capacity(npairs);
            let mut t = 0;
            for a in 0..k {
                for b in (a + 1)..k {
                    let diff1 = vs1[a].sub(&vs1[b], &ring)?;
                    let diff2 = vs2[a].sub(&vs2[b], &ring)?;
                    let (z1, z2) = beaver_exchange(
                        &diff1, &diff1, &diff2, &diff2, &mut t1[t], &mut t2[t], &ring,
                        round, net,
                    )?;
                    let (i, j) = (participants[a], participants[b]);
                    let d2 = reveal_scalar_to_s2(
                        &z1,
                        &z2,
                        &format!("{tag}({i},{j})"),
                        &ring,
                        round,
                        net,
                    )?;
                    entries.push(d2);
                    t += 1;
                }
            }
            let mut it = entries.into_iter();
            Ok(DistanceSet::from_fn(k, |_, _| it.next().unwrap()))
        };

        let dist_x = dist_for(&xs1, &xs2, "d2", &mut dealer, &mut dealer_rng, &mut net)?;

        // S2 runs the robust oracle
        let p = match self.cfg.rule {
            Rule::Mean => mean_weights(k),
            Rule::MultiKrum { f, m } => multi_krum(&dist_x, f, m, &ring)?,
            Rule::ByzSgd { params } => {
                let dist_b = dist_for(&b1, &b2, "dB2", &mut dealer, &mut dealer_rng, &mut net)?;
                let good: BTreeSet<usize> = (0..k).collect();
                let p = byzantine_sgd_select(&a_vals, &dist_b, &dist_x, &params, &good, &ring)?;
                if p.count_selected() < 2 {
                    return Err(Error::OracleAbort);
                }
                p
            }
        };
        net.reveal(PartyId::S2, round, "p", RingVector { elems: p.p.clone(), scale: 0 });

        if opts.fault == Some(Fault::LeakDistancesToS1) {
            // instrumented fault: plaintext distances forwarded to S1
            for ((i, j), d2) in dist_x.pairs() {
                let v = RingVector { elems: vec![d2], scale: 2 };
                net.send(Message {
                    round,
                    from: PartyId::S2,
                    to: PartyId::S1,
                    kind: MessageKind::DistanceReveal,
                    payload: v.to_bytes(&ring),
                });
                net.reveal(PartyId::S1, round, &format!("d2({i},{j})"), v);
            }
        }

        // S2 secret-shares the weight vector with S1
        let p_ring = RingVector { elems: p.p.clone(), scale: 0 };
        let (p1, p2) = share(&p_ring, &ring, rng);
        net.send(Message {
            round,
            from: PartyId::S2,
            to: PartyId::S1,
            kind: MessageKind::WeightShare,
            payload: p1.to_bytes(&ring),
        });

        // weight multiplication: d element-wise triples per worker; the
        // scalar weight share is repeated across coordinates
        let (mut tw1, mut tw2) =
            dealer.make_triples(k, dim, TripleForm::Elementwise, &mut dealer_rng);
        let mut acc1 = ShareVector::zeros(PartyId::S1, dim, 1);
        let mut acc2 = ShareVector::zeros(PartyId::S2, dim, 1);
        for pos in 0..k {
            let u1 = ShareVector {
                party: PartyId::S1,
                elems: vec![p1.elems[pos]; dim],
                scale: 0,
            };
            let u2 = ShareVector {
                party: PartyId::S2,
                elems: vec![p2.elems[pos]; dim],
                scale: 0,
            };
            let (z1, z2) = beaver_exchange(
                &u1, &xs1[pos], &u2, &xs2[pos], &mut tw1[pos], &mut tw2[pos], &ring, round,
                &mut net,
            )?;
            acc1 = acc1.add(&z1, &ring)?;
            acc2 = acc2.add(&z2, &ring)?;
        }
        net.send(Message {
            round,
            from: PartyId::S2,
            to: PartyId::S1,
            kind: MessageKind::AggregateShare,
            payload: acc2.to_bytes(&ring),
        });
        let z = reconstruct(&acc1, &acc2, &ring)?;
        net.reveal(PartyId::S1, round, "z", z.clone());
        broadcast_model(&z, inputs.len(), &ring, round, &mut net);

        // commit ByzantineSGD state only on success
        if matches!(self.cfg.rule, Rule::ByzSgd { .. }) {
            for (pos, &i) in participants.iter().enumerate() {
                self.a_old[i] = a_vals[pos];
                self.b_old_s1[i] = b1[pos].clone();
                self.b_old_s2[i] = b2[pos].clone();
            }
        }
        self.round += 1;
        Ok(RoundOutput { z_ring: z, selected: p, participants, net })
    }

    /// Non-robust aggregation with the LDP Gaussian mechanism: worker 0
    /// submits `x_0 + n * nu` with `nu ~ N(0, sigma^2)` per coordinate,
    /// encoded before sharing. Returns the output and the noise draw.
    pub fn ldp_aggregate(
        &mut self,
        inputs: &[Vec<f64>],
        sigma: f64,
        opts: &RoundOptions,
        rng: &mut SeedRng,
    ) -> Result<(RoundOutput, Vec<f64>)> {
        if sigma < 0.0 {
            return Err(Error::InvalidConfig(format!("sigma {sigma} must be >= 0")));
        }
        let mut noise_rng = rng.fork();
        let dim = inputs.first().map(|v| v.len()).unwrap_or(0);
        let noise: Vec<f64> = if sigma == 0.0 {
            vec![0.0; dim]
        } else {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (0..dim).map(|_| normal.sample(&mut noise_rng)).collect()
        };
        let n = inputs.len() as f64;
        let mut noised = inputs.to_vec();
        for (v, nu) in noised[0].iter_mut().zip(&noise) {
            *v += n * nu;
        }
        // reject (abort the round) if the noise pushes past the bound
        for (index, &v) in noised[0].iter().enumerate() {
            if v.abs() > self.cfg.ring.bound {
                return Err(Error::CoordinateOutOfBound {
                    index,
                    value: v,
                    bound: self.cfg.ring.bound,
                });
            }
        }
        let out = self.run_round_nonrobust(&noised, opts, rng)?;
        Ok((out, noise))
    }
}

pub(crate) fn broadcast_model(z: &RingVector, n: usize, ring: &RingConfig, round: u64, net: &mut Net) {
    for i in 0..n {
        net.send(Message {
            round,
            from: PartyId::S1,
            to: PartyId::Worker(i as u32),
            kind: MessageKind::ModelBroadcast,
            payload: z.to_bytes(ring),
        });
    }
}

// ---------------------------------------------------------------------------
// Privacy view audit (report-only)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditClause {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub clauses: Vec<AuditClause>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }
}

fn is_byzsgd(rule: &Rule) -> bool {
    matches!(rule, Rule::ByzSgd { .. })
}

/// Check each party's observed view against the sets the protocol is allowed
/// to expose: S1 sees shares, blinded opens, weight shares and the aggregate;
/// S2 reveals only pairwise distances and the weight vector (plus the
/// accumulated inner products in ByzantineSGD mode, which is flagged);
/// workers see only the model broadcast.
pub fn audit_views(net: &Net, cfg: &RoundConfig) -> AuditReport {
    let mut clauses = Vec::new();
    let empty = PartyTranscript::default();
    let s1 = net.transcript(PartyId::S1).unwrap_or(&empty);
    let s2 = net.transcript(PartyId::S2).unwrap_or(&empty);
    let three_server = net.transcript(PartyId::S3).is_some();

    // (a) S1 received-kind containment and reveal set
    let allowed_s1 = [
        MessageKind::ShareUpload,
        MessageKind::BlindedOpen,
        MessageKind::WeightShare,
        MessageKind::AggregateShare,
        MessageKind::PCResponse,
        MessageKind::SelectionShare,
    ];
    let bad_kinds: Vec<String> = s1
        .received()
        .filter(|m| !allowed_s1.contains(&m.kind))
        .map(|m| format!("{:?} from {}", m.kind, m.from))
        .collect();
    let s1_reveals: Vec<&str> = s1.reveals().map(|(l, _)| l).collect();
    let reveal_ok = s1_reveals.iter().all(|l| *l == "z") && !s1_reveals.is_empty();
    clauses.push(AuditClause {
        name: "S1 view containment".into(),
        pass: bad_kinds.is_empty() && reveal_ok,
        detail: if bad_kinds.is_empty() && reveal_ok {
            "received kinds within {ShareUpload, BlindedOpen, WeightShare, AggregateShare}; reveals = {z}".into()
        } else {
            format!("unexpected kinds: {bad_kinds:?}; reveals: {s1_reveals:?}")
        },
    });

    // (b) S2 reveal set: distances and weights only, and nothing equal to a
    // worker input or its S1 share
    let byz = is_byzsgd(&cfg.rule);
    let bad_labels: Vec<String> = s2
        .reveals()
        .filter(|(l, _)| {
            !(l.starts_with("d2(")
                || *l == "p"
                || (byz && (l.starts_with("A(") || l.starts_with("dB2("))))
        })
        .map(|(l, _)| l.to_string())
        .collect();
    // reconstruct worker inputs from the upload shares in both transcripts
    let mut forbidden: Vec<Vec<u64>> = Vec::new();
    for m1 in s1.received().filter(|m| {
        m.kind == MessageKind::ShareUpload && matches!(m.from, PartyId::Worker(_))
    }) {
        if let Ok((_, _, e1)) = crate::ring::deserialize_elems(&m1.payload) {
            forbidden.push(e1.clone());
            for m2 in s2.received().filter(|m| {
                m.kind == MessageKind::ShareUpload && m.from == m1.from && m.round == m1.round
            }) {
                if let Ok((_, _, e2)) = crate::ring::deserialize_elems(&m2.payload) {
                    let x: Vec<u64> =
                        e1.iter().zip(&e2).map(|(&a, &b)| cfg.ring.add(a, b)).collect();
                    forbidden.push(x);
                }
            }
        }
    }
    let leaked_input = s2
        .reveals()
        .any(|(_, v)| forbidden.contains(&v.elems));
    clauses.push(AuditClause {
        name: "S2 reveal set".into(),
        pass: bad_labels.is_empty() && !leaked_input,
        detail: if bad_labels.is_empty() && !leaked_input {
            if byz {
                "reveals limited to distances, weights and accumulated inner products A(i) \
                 (A(i) exposure is inherent to the ByzantineSGD schedule; flagged)"
                    .into()
            } else {
                "reveals limited to pairwise distances and the weight vector".into()
            }
        } else {
            format!("unexpected reveals: {bad_labels:?}; input-equal payload: {leaked_input}")
        },
    });

    // (c) workers receive only the model broadcast
    let mut bad_worker_msgs = Vec::new();
    for (party, t) in &net.transcripts {
        if let PartyId::Worker(i) = party {
            for m in t.received() {
                if m.kind != MessageKind::ModelBroadcast {
                    bad_worker_msgs.push(format!("W{i} got {:?}", m.kind));
                }
            }
        }
    }
    clauses.push(AuditClause {
        name: "worker view".into(),
        pass: bad_worker_msgs.is_empty(),
        detail: if bad_worker_msgs.is_empty() {
            "workers receive only ModelBroadcast".into()
        } else {
            format!("{bad_worker_msgs:?}")
        },
    });

    if three_server {
        let s3 = net.transcript(PartyId::S3).unwrap_or(&empty);
        // no plaintext distance reveals on S1/S2, no gradient shares on S3
        let dist_reveals = s1
            .received()
            .chain(s2.received())
            .filter(|m| m.kind == MessageKind::DistanceReveal)
            .count()
            + s1.reveals().filter(|(l, _)| l.starts_with("d2(")).count()
            + s2.reveals().filter(|(l, _)| l.starts_with("d2(")).count();
        clauses.push(AuditClause {
            name: "three-server distance secrecy".into(),
            pass: dist_reveals == 0,
            detail: format!("{dist_reveals} plaintext distance exposures on S1/S2"),
        });
        let grad_uploads = s3
            .received()
            .filter(|m| m.kind == MessageKind::ShareUpload)
            .count();
        clauses.push(AuditClause {
            name: "crypto provider isolation".into(),
            pass: grad_uploads == 0,
            detail: format!("{grad_uploads} gradient share uploads reached S3"),
        });
    }

    AuditReport { clauses }
}

// ---------------------------------------------------------------------------

/// Reference check used by Lemma-1 style tests: run the secure robust round
/// and the plaintext reference on identical inputs, demanding bit equality.
pub fn reference_check(
    inputs: &[Vec<f64>],
    cfg: &RoundConfig,
    model_delta: Option<&[f64]>,
    seed: u64,
) -> Result<bool> {
    let mut proto = TwoServerProtocol::new(cfg.clone());
    let mut rng = SeedRng::from_seed(seed);
    let out = match cfg.rule {
        Rule::Mean => proto.run_round_nonrobust(inputs, &RoundOptions::default(), &mut rng)?,
        _ => proto.run_round_robust(inputs, model_delta, &RoundOptions::default(), &mut rng)?,
    };
    let xs: Vec<RingVector> = inputs
        .iter()
        .map(|v| encode_fixed(v, &cfg.ring))
        .collect::<Result<_>>()?;
    let delta_enc = model_delta.map(|d| encode_fixed(d, &cfg.ring)).transpose()?;
    let mut reference = crate::oracles::ReferenceAggregator::new(cfg.rule, cfg.ring);
    let (z_ref, p_ref) = reference.aggregate(&xs, delta_enc.as_ref())?;
    Ok(out.z_ring == z_ref && out.selected == p_ref)
}

pub use crate::oracles::ReferenceAggregator;
