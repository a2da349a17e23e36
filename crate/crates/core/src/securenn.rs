//! Three-server protocol: a crypto provider (S3) deals triples and assists
//! comparisons so that even pairwise distances stay secret-shared between
//! S1 and S2.
//!
//! Comparison of a shared difference works in three steps: S1 and S2 mask
//! the shifted difference with a common random offset and open the masked
//! value to S3; S3 bit-decomposes it and re-shares the bits over a small
//! prime field; the servers then run `PrivateCompare` against thresholds
//! only they know. S3 never learns the thresholds or the comparison bit;
//! S1 and S2 never learn the masked value.

use std::cmp::Ordering;

use crate::beaver::{TripleDealer, TripleForm};
use crate::error::{Error, Result};
use crate::oracles::WeightVector;
use crate::protocol::{
    beaver_exchange, broadcast_model, collect_shares, Fault, RoundConfig, RoundOptions,
    RoundOutput,
};
use crate::ring::{
    reconstruct, serialize_elems, PartyId, RingConfig, ShareVector,
};
use crate::oracles::Rule;
use crate::rng::SeedRng;
use crate::transcript::{Message, MessageKind, Net};

/// Field modulus for bitwise comparison shares; must exceed `bit_width + 2`.
pub const PC_PRIME: u64 = 67;

/// Bits of `v`, most significant first (`x[1]` is the MSB).
pub fn bit_decompose(v: u64, ell: u32) -> Vec<u64> {
    (0..ell).map(|i| (v >> (ell - 1 - i)) & 1).collect()
}

/// Additively share each bit over `Z_p`.
pub fn share_bits(bits: &[u64], p: u64, rng: &mut SeedRng) -> (Vec<u64>, Vec<u64>) {
    let s1: Vec<u64> = bits.iter().map(|_| rng.uniform_below(p)).collect();
    let s2: Vec<u64> = bits.iter().zip(&s1).map(|(&b, &m)| (b + p - m) % p).collect();
    (s1, s2)
}

fn modp(v: i128, p: u64) -> u64 {
    (v.rem_euclid(p as i128)) as u64
}

/// One server's `PrivateCompare` contribution: the permuted, scaled field
/// elements whose reconstruction S3 scans for a zero. `j` is 0 on S1 and 1
/// on S2; `s`, `u` and `perm` are common randomness unknown to S3.
#[allow(clippy::too_many_arguments)]
pub fn pc_local(
    j: u64,
    bits_j: &[u64],
    r: u64,
    beta: bool,
    ell: u32,
    p: u64,
    s: &[u64],
    u: &[u64],
    perm: &[usize],
) -> Vec<u64> {
    let ell_us = ell as usize;
    let max = if ell == 64 { u64::MAX } else { (1u64 << ell) - 1 };
    let edge = beta && r == max;
    let t = r.wrapping_add(1) & max;
    let mut c = vec![0u64; ell_us];
    let mut w_sum: i128 = 0;
    // algorithm index i addresses the bit of significance i-1, so the loop
    // ell..1 walks MSB to LSB; the running sum covers more significant bits
    for i in (1..=ell_us).rev() {
        let x = bits_j[ell_us - i] as i128;
        let jj = j as i128;
        if edge {
            c[ell_us - i] = if i != 1 {
                modp((1 - jj) * (u[ell_us - i] as i128 + 1) - jj * u[ell_us - i] as i128, p)
            } else if j == 0 {
                u[ell_us - 1] % p
            } else {
                (p - u[ell_us - 1] % p) % p
            };
        } else if !beta {
            let rb = ((r >> (i - 1)) & 1) as i128;
            let ci = jj * rb - x + jj + w_sum;
            c[ell_us - i] = modp(ci, p);
            w_sum += x + jj * rb - 2 * rb * x;
        } else {
            let tb = ((t >> (i - 1)) & 1) as i128;
            let ci = -jj * tb + x + 1 - jj + w_sum;
            c[ell_us - i] = modp(ci, p);
            w_sum += x + jj * tb - 2 * tb * x;
        }
    }
    perm.iter().map(|&i| s[i] % p * c[i] % p).collect()
}

/// S3's step: reconstruct each field element and report whether any is zero.
pub fn pc_reveal(d1: &[u64], d2: &[u64], p: u64) -> bool {
    d1.iter().zip(d2).any(|(&a, &b)| (a + b) % p == 0)
}

/// Whole-protocol reference for tests: returns `beta ^ (x > r)`.
pub fn private_compare_plain(
    x: u64,
    r: u64,
    beta: bool,
    ell: u32,
    p: u64,
    rng: &mut SeedRng,
) -> bool {
    let bits = bit_decompose(x, ell);
    let (b1, b2) = share_bits(&bits, p, rng);
    let s: Vec<u64> = (0..ell).map(|_| rng.field_elem_nonzero(p)).collect();
    let u: Vec<u64> = (0..ell).map(|_| rng.field_elem_nonzero(p)).collect();
    let perm = rng.permutation(ell as usize);
    let d1 = pc_local(0, &b1, r, beta, ell, p, &s, &u, &perm);
    let d2 = pc_local(1, &b2, r, beta, ell, p, &s, &u, &perm);
    pc_reveal(&d1, &d2, p)
}

/// `z = (1 - alpha) x + alpha y` on shares, for a shared bit `alpha`: one
/// Beaver multiplication of `alpha` with `y - x`, then a common zero share
/// re-randomizes the output.
#[allow(clippy::too_many_arguments)]
pub fn select_share(
    alpha1: u64,
    alpha2: u64,
    x1: &ShareVector,
    x2: &ShareVector,
    y1: &ShareVector,
    y2: &ShareVector,
    t1: &mut crate::beaver::BeaverTripleShare,
    t2: &mut crate::beaver::BeaverTripleShare,
    cfg: &RingConfig,
    common: &mut SeedRng,
) -> Result<(ShareVector, ShareVector)> {
    let dim = x1.dim();
    let w1 = y1.sub(x1, cfg)?;
    let w2 = y2.sub(x2, cfg)?;
    let a1 = ShareVector { party: PartyId::S1, elems: vec![alpha1; dim], scale: 0 };
    let a2 = ShareVector { party: PartyId::S2, elems: vec![alpha2; dim], scale: 0 };
    let (c1, c2) = crate::beaver::secure_multiply(&a1, &a2, &w1, &w2, t1, t2, cfg)?;
    let zero1: Vec<u64> = (0..dim).map(|_| common.ring_elem(cfg.mask())).collect();
    let z1 = ShareVector {
        party: PartyId::S1,
        elems: x1
            .elems
            .iter()
            .zip(&c1.elems)
            .zip(&zero1)
            .map(|((&x, &c), &u)| cfg.add(cfg.add(x, c), u))
            .collect(),
        scale: x1.scale,
    };
    let z2 = ShareVector {
        party: PartyId::S2,
        elems: x2
            .elems
            .iter()
            .zip(&c2.elems)
            .zip(&zero1)
            .map(|((&x, &c), &u)| cfg.add(cfg.add(x, c), cfg.neg(u)))
            .collect(),
        scale: x2.scale,
    };
    Ok((z1, z2))
}

/// Comparison assistant: holds the common S1/S2 randomness (hidden from S3)
/// and S3's own randomness, and logs every transfer.
struct CompareCtx<'a> {
    ring: RingConfig,
    round: u64,
    p: u64,
    common: SeedRng,
    s3: SeedRng,
    net: &'a mut Net,
}

impl CompareCtx<'_> {
    fn payload(&self, elems: &[u64]) -> Vec<u8> {
        serialize_elems(self.ring.bit_width, 0, elems)
    }

    /// One `PrivateCompare` run against a threshold known only to S1/S2.
    /// Returns `mu > r`, learned by S1 and S2.
    fn pc(&mut self, bits1: &[u64], bits2: &[u64], r: u64) -> bool {
        let ell = self.ring.bit_width;
        let beta = self.common.random_bit() == 1;
        let s: Vec<u64> = (0..ell).map(|_| self.common.field_elem_nonzero(self.p)).collect();
        let u: Vec<u64> = (0..ell).map(|_| self.common.field_elem_nonzero(self.p)).collect();
        let perm = self.common.permutation(ell as usize);
        let d1 = pc_local(0, bits1, r, beta, ell, self.p, &s, &u, &perm);
        let d2 = pc_local(1, bits2, r, beta, ell, self.p, &s, &u, &perm);
        for (from, d) in [(PartyId::S1, &d1), (PartyId::S2, &d2)] {
            let payload = self.payload(d);
            self.net.send(Message {
                round: self.round,
                from,
                to: PartyId::S3,
                kind: MessageKind::PCResponse,
                payload,
            });
        }
        let beta_prime = pc_reveal(&d1, &d2, self.p);
        for to in [PartyId::S1, PartyId::S2] {
            let payload = self.payload(&[beta_prime as u64]);
            self.net.send(Message {
                round: self.round,
                from: PartyId::S3,
                to,
                kind: MessageKind::PCResponse,
                payload,
            });
        }
        beta ^ beta_prime
    }

    /// Signed comparison of two shared scalars: S1 and S2 learn the bit
    /// `a >= b`; S3 only sees a uniformly masked value.
    fn geq(&mut self, a: (u64, u64), b: (u64, u64)) -> Result<bool> {
        let ring = self.ring;
        let ell = ring.bit_width;
        let half = 1u64 << (ell - 1);
        // shifted difference: top half of the ring means a >= b
        let mut d1 = ring.sub(a.0, b.0);
        let d2 = ring.sub(a.1, b.1);
        d1 = ring.add(d1, half);
        let rho = self.common.ring_elem(ring.mask());
        let m1 = ring.add(d1, rho);
        for (from, v) in [(PartyId::S1, m1), (PartyId::S2, d2)] {
            let payload = self.payload(&[v]);
            self.net.send(Message {
                round: self.round,
                from,
                to: PartyId::S3,
                kind: MessageKind::BlindedOpen,
                payload,
            });
        }
        let mu = ring.add(m1, d2);
        let bits = bit_decompose(mu, ell);
        let (bits1, bits2) = share_bits(&bits, self.p, &mut self.s3);
        for (to, b) in [(PartyId::S1, &bits1), (PartyId::S2, &bits2)] {
            let payload = self.payload(b);
            self.net.send(Message {
                round: self.round,
                from: PartyId::S3,
                to,
                kind: MessageKind::PCResponse,
                payload,
            });
        }
        // the shifted difference exceeds half-1 iff mu sits in the length
        // 2^(ell-1) window after rho + half - 1; window edges are public to
        // S1/S2 only
        let lo = ring.add(rho, half - 1);
        let hi = ring.add(lo, half);
        let above_lo = self.pc(&bits1, &bits2, lo);
        let above_hi = self.pc(&bits1, &bits2, hi);
        Ok(if lo < hi { above_lo && !above_hi } else { above_lo || !above_hi })
    }
}

/// Fully oblivious Multi-Krum: pairwise distances stay shared, S1/S2 sort
/// permuted rows, S3 ranks permuted scores and hands back a shared selection
/// vector. Output is bit-identical to the two-server robust round.
pub fn run_three_server_multikrum(
    inputs: &[Vec<f64>],
    cfg: &RoundConfig,
    opts: &RoundOptions,
    rng: &mut SeedRng,
) -> Result<RoundOutput> {
    let (f, m) = match cfg.rule {
        Rule::MultiKrum { f, m } => (f, m),
        _ => return Err(Error::Protocol("three-server round requires multi-krum".into())),
    };
    let ring = cfg.ring;
    if u64::from(ring.bit_width) + 2 >= PC_PRIME {
        return Err(Error::FieldOverflow { p: PC_PRIME, l: ring.bit_width });
    }
    let dim = inputs.first().map(|v| v.len()).unwrap_or(0);
    ring.supports_dim(dim)?;
    let round = 0;
    let mut dealer_rng = rng.fork();
    let common_seed = rng.fork();
    let s3_seed = rng.fork();
    let mut net = Net::new();
    let (participants, xs1, xs2) = collect_shares(inputs, cfg, opts, round, &mut net, rng)?;
    let k = participants.len();
    if k < f + 3 {
        return Err(Error::TooFewWorkers { needed: f + 3, got: k });
    }
    if m < 1 || m > k - f {
        return Err(Error::InvalidConfig(format!("multi-krum m={m} outside 1..=n-f")));
    }
    if opts.fault == Some(Fault::GradientShareToS3) {
        // instrumented fault: a gradient share forwarded to the provider
        net.send(Message {
            round,
            from: PartyId::S1,
            to: PartyId::S3,
            kind: MessageKind::ShareUpload,
            payload: xs1[0].to_bytes(&ring),
        });
    }

    let mut dealer = TripleDealer::new(ring);
    let npairs = k * (k - 1) / 2;

    // pairwise distances, kept secret-shared
    let (mut td1, mut td2) = dealer.make_triples(npairs, dim, TripleForm::Inner, &mut dealer_rng);
    let mut dist1 = Vec::with_capacity(npairs);
    let mut dist2 = Vec::with_capacity(npairs);
    let mut pair_index = vec![vec![0usize; k]; k];
    let mut t = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            let diff1 = xs1[i].sub(&xs1[j], &ring)?;
            let diff2 = xs2[i].sub(&xs2[j], &ring)?;
            let (z1, z2) = beaver_exchange(
                &diff1, &diff1, &diff2, &diff2, &mut td1[t], &mut td2[t], &ring, round,
                &mut net,
            )?;
            dist1.push(z1.elems[0]);
            dist2.push(z2.elems[0]);
            pair_index[i][j] = t;
            pair_index[j][i] = t;
            t += 1;
        }
    }
    let dvec1 = ShareVector { party: PartyId::S1, elems: dist1, scale: 2 };
    let dvec2 = ShareVector { party: PartyId::S2, elems: dist2, scale: 2 };

    let mut ctx = CompareCtx {
        ring,
        round,
        p: PC_PRIME,
        common: common_seed,
        s3: s3_seed,
        net: &mut net,
    };

    // S3 walks rows and entries through private permutations, handing S1/S2
    // shared one-hot vectors; an inner-product triple extracts each distance
    // share without anyone learning which pair it belongs to
    let pi1 = ctx.s3.permutation(k);
    let pi2 = ctx.s3.permutation(k - 1);
    let (mut ts1, mut ts2) =
        dealer.make_triples(k * (k - 1), npairs, TripleForm::Inner, &mut dealer_rng);
    let mut sel = 0;
    let mut scores: Vec<(usize, (u64, u64))> = Vec::with_capacity(k);
    for &i in &pi1 {
        let others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
        let mut row: Vec<(u64, u64)> = Vec::with_capacity(k - 1);
        for &pos in &pi2 {
            let j = others[pos];
            let mut onehot = vec![0u64; npairs];
            onehot[pair_index[i][j]] = 1;
            let alpha = crate::ring::RingVector { elems: onehot, scale: 0 };
            let (a1, a2) = crate::ring::share(&alpha, &ring, &mut ctx.s3);
            for (to, a) in [(PartyId::S1, &a1), (PartyId::S2, &a2)] {
                let payload = a.to_bytes(&ring);
                ctx.net.send(Message {
                    round,
                    from: PartyId::S3,
                    to,
                    kind: MessageKind::SelectionShare,
                    payload,
                });
            }
            let (z1, z2) = beaver_exchange(
                &a1, &dvec1, &a2, &dvec2, &mut ts1[sel], &mut ts2[sel], &ring, round,
                ctx.net,
            )?;
            sel += 1;
            row.push((z1.elems[0], z2.elems[0]));
        }
        // S1/S2 sort the permuted row; comparison bits are on permuted,
        // shared values so their order reveals nothing about the pairs
        for a in 1..row.len() {
            let mut b = a;
            while b > 0 && ctx.geq(row[b - 1], row[b])? {
                row.swap(b - 1, b);
                b -= 1;
            }
        }
        let kk = k - f - 2;
        let score = row[..kk].iter().fold((0u64, 0u64), |acc, &(s1, s2)| {
            (ring.add(acc.0, s1), ring.add(acc.1, s2))
        });
        scores.push((i, score));
    }

    // rank permuted scores; S1/S2 forward the comparison bits so S3 (who
    // knows the permutation) can pick the m lowest, ties broken by worker
    // index, exactly like the plaintext oracle
    let kp = scores.len();
    let mut ge = vec![vec![false; kp]; kp];
    for a in 0..kp {
        for b in (a + 1)..kp {
            let ge_ab = ctx.geq(scores[a].1, scores[b].1)?;
            let ge_ba = ctx.geq(scores[b].1, scores[a].1)?;
            ge[a][b] = ge_ab;
            ge[b][a] = ge_ba;
            let payload = ctx.payload(&[ge_ab as u64, ge_ba as u64]);
            ctx.net.send(Message {
                round,
                from: PartyId::S1,
                to: PartyId::S3,
                kind: MessageKind::PCResponse,
                payload,
            });
        }
    }
    let mut order: Vec<usize> = (0..kp).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (scores[a].0, scores[b].0);
        if ge[b][a] && !ge[a][b] {
            Ordering::Less
        } else if ge[a][b] && !ge[b][a] {
            Ordering::Greater
        } else {
            ia.cmp(&ib)
        }
    });
    let mut p = vec![0u64; k];
    for &pos in order.iter().take(m) {
        p[scores[pos].0] = 1;
    }
    let selected = WeightVector { p };

    // S3 shares the selection vector; one element-wise triple per worker
    // turns it into the aggregate
    let alpha = crate::ring::RingVector { elems: selected.p.clone(), scale: 0 };
    let (a1, a2) = crate::ring::share(&alpha, &ring, &mut ctx.s3);
    for (to, a) in [(PartyId::S1, &a1), (PartyId::S2, &a2)] {
        let payload = a.to_bytes(&ring);
        ctx.net.send(Message {
            round,
            from: PartyId::S3,
            to,
            kind: MessageKind::SelectionShare,
            payload,
        });
    }
    let (mut tw1, mut tw2) =
        dealer.make_triples(k, dim, TripleForm::Elementwise, &mut dealer_rng);
    let mut acc1 = ShareVector::zeros(PartyId::S1, dim, 1);
    let mut acc2 = ShareVector::zeros(PartyId::S2, dim, 1);
    for pos in 0..k {
        let u1 = ShareVector { party: PartyId::S1, elems: vec![a1.elems[pos]; dim], scale: 0 };
        let u2 = ShareVector { party: PartyId::S2, elems: vec![a2.elems[pos]; dim], scale: 0 };
        let (z1, z2) = beaver_exchange(
            &u1, &xs1[pos], &u2, &xs2[pos], &mut tw1[pos], &mut tw2[pos], &ring, round,
            ctx.net,
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

    Ok(RoundOutput { z_ring: z, selected, participants, net })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{multi_krum, plaintext_distances};
    use crate::protocol::{audit_views, TwoServerProtocol};
    use crate::ring::encode_fixed;

    #[test]
    fn bit_decompose_msb_first() {
        assert_eq!(bit_decompose(0b1011, 4), vec![1, 0, 1, 1]);
        assert_eq!(bit_decompose(1, 8)[7], 1);
    }

    #[test]
    fn private_compare_exhaustive_small() {
        let p = PC_PRIME;
        let mut rng = SeedRng::from_seed(21);
        for x in (0..256).step_by(7) {
            for r in (0..256).step_by(5).chain([255]) {
                for beta in [false, true] {
                    let got = private_compare_plain(x, r, beta, 8, p, &mut rng);
                    assert_eq!(got, beta ^ (x > r), "x={x} r={r} beta={beta}");
                }
            }
        }
    }

    #[test]
    fn private_compare_max_r_edge() {
        let mut rng = SeedRng::from_seed(22);
        for x in [0u64, 1, 200, 255] {
            // x > 255 is impossible at 8 bits, so beta=1 must map to 1
            assert!(private_compare_plain(x, 255, true, 8, PC_PRIME, &mut rng));
        }
    }

    #[test]
    fn select_share_picks_x_or_y() {
        let ring = RingConfig::new(32, 6, 8.0).unwrap();
        let mut rng = SeedRng::from_seed(23);
        let x = encode_fixed(&[1.5, -2.0], &ring).unwrap();
        let y = encode_fixed(&[0.25, 4.0], &ring).unwrap();
        let (x1, x2) = crate::ring::share(&x, &ring, &mut rng);
        let (y1, y2) = crate::ring::share(&y, &ring, &mut rng);
        for alpha in [0u64, 1] {
            let (a1, a2) = {
                let a = crate::ring::RingVector { elems: vec![alpha], scale: 0 };
                crate::ring::share(&a, &ring, &mut rng)
            };
            let (mut t1s, mut t2s) = crate::beaver::dealer_make_triples(
                1,
                2,
                TripleForm::Elementwise,
                &ring,
                &mut rng,
            );
            let mut common = SeedRng::from_seed(77);
            let (z1, z2) = select_share(
                a1.elems[0], a2.elems[0], &x1, &x2, &y1, &y2, &mut t1s[0], &mut t2s[0],
                &ring, &mut common,
            )
            .unwrap();
            let z = reconstruct(&z1, &z2, &ring).unwrap();
            assert_eq!(z, if alpha == 0 { x.clone() } else { y.clone() });
        }
    }

    #[test]
    fn masked_comparison_matches_signed_order() {
        let ring = RingConfig::new(32, 6, 8.0).unwrap();
        let mut rng = SeedRng::from_seed(24);
        let mut net = Net::new();
        let mut ctx = CompareCtx {
            ring,
            round: 0,
            p: PC_PRIME,
            common: rng.fork(),
            s3: rng.fork(),
            net: &mut net,
        };
        let vals: [i64; 6] = [0, 1, -1, 500_000, -500_000, 123_456];
        for &a in &vals {
            for &b in &vals {
                let av = ring.from_signed(a);
                let bv = ring.from_signed(b);
                let a_sh = {
                    let r = ctx.s3.ring_elem(ring.mask());
                    (r, ring.sub(av, r))
                };
                let b_sh = {
                    let r = ctx.s3.ring_elem(ring.mask());
                    (r, ring.sub(bv, r))
                };
                assert_eq!(ctx.geq(a_sh, b_sh).unwrap(), a >= b, "a={a} b={b}");
            }
        }
    }

    fn mk_cfg(n: usize, f: usize, m: usize) -> RoundConfig {
        let ring = RingConfig::new(32, 6, 8.0).unwrap();
        RoundConfig::new(n, Rule::MultiKrum { f, m }, ring)
    }

    #[test]
    fn three_server_matches_plaintext_oracle() {
        let cfg = mk_cfg(5, 1, 3);
        let mut seeder = SeedRng::from_seed(25);
        for trial in 0..10u64 {
            let inputs: Vec<Vec<f64>> = (0..5)
                .map(|_| {
                    (0..3)
                        .map(|_| (seeder.uniform_below(1200) as f64 / 100.0) - 6.0)
                        .collect()
                })
                .collect();
            let mut rng = SeedRng::from_seed(2500 + trial);
            let out = run_three_server_multikrum(
                &inputs,
                &cfg,
                &RoundOptions::default(),
                &mut rng,
            )
            .unwrap();
            let xs: Vec<_> = inputs
                .iter()
                .map(|v| encode_fixed(v, &cfg.ring).unwrap())
                .collect();
            let d = plaintext_distances(&xs, &cfg.ring).unwrap();
            let p_ref = multi_krum(&d, 1, 3, &cfg.ring).unwrap();
            assert_eq!(out.selected, p_ref, "trial {trial}");
            let z_ref =
                crate::oracles::weighted_sum(&xs, &p_ref, &cfg.ring).unwrap();
            assert_eq!(out.z_ring, z_ref, "trial {trial}");
        }
    }

    #[test]
    fn three_server_matches_two_server() {
        let cfg = mk_cfg(5, 1, 3);
        let inputs = vec![
            vec![1.0, 0.5],
            vec![1.2, 0.4],
            vec![0.8, 0.6],
            vec![1.1, 0.5],
            vec![6.0, -6.0],
        ];
        let mut rng3 = SeedRng::from_seed(26);
        let out3 =
            run_three_server_multikrum(&inputs, &cfg, &RoundOptions::default(), &mut rng3)
                .unwrap();
        let mut proto = TwoServerProtocol::new(cfg.clone());
        let mut rng2 = SeedRng::from_seed(27);
        let out2 = proto
            .run_round_robust(&inputs, None, &RoundOptions::default(), &mut rng2)
            .unwrap();
        assert_eq!(out3.selected, out2.selected);
        assert_eq!(out3.z_ring, out2.z_ring);
    }

    #[test]
    fn three_server_view_structure() {
        let cfg = mk_cfg(5, 1, 3);
        let inputs = vec![
            vec![1.0],
            vec![1.2],
            vec![0.8],
            vec![1.1],
            vec![6.0],
        ];
        let mut rng = SeedRng::from_seed(28);
        let out =
            run_three_server_multikrum(&inputs, &cfg, &RoundOptions::default(), &mut rng)
                .unwrap();
        let report = audit_views(&out.net, &cfg);
        assert!(report.pass(), "{report:?}");
        // S2 reveals nothing at all in the three-server protocol
        let s2 = out.net.transcript(PartyId::S2).unwrap();
        assert_eq!(s2.reveals().count(), 0);
        // S3 sees no share uploads and no distance reveals
        let s3 = out.net.transcript(PartyId::S3).unwrap();
        assert!(s3.received().all(|m| m.kind != MessageKind::ShareUpload));
        assert_eq!(s3.reveals().count(), 0);
    }

    #[test]
    fn three_server_audit_catches_share_forwarding() {
        let cfg = mk_cfg(5, 1, 3);
        let inputs = vec![vec![1.0], vec![1.2], vec![0.8], vec![1.1], vec![6.0]];
        let mut rng = SeedRng::from_seed(29);
        let opts =
            RoundOptions { fault: Some(Fault::GradientShareToS3), ..Default::default() };
        let out = run_three_server_multikrum(&inputs, &cfg, &opts, &mut rng).unwrap();
        let report = audit_views(&out.net, &cfg);
        assert!(!report.pass());
    }
}
