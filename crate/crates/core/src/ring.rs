//! Fixed-point encoding into `Z_{2^w}` and additive secret sharing.
//!
//! Bounded real vectors are encoded as two's-complement fixed point inside a
//! power-of-two ring. All arithmetic wraps modulo `2^bit_width`; the upper
//! half-ring decodes to negative reals. Squared distances live at scale 2
//! (twice the fractional bits) and are never truncated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedRng;

/// Identifies a protocol participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    Worker(u32),
    S1,
    S2,
    S3,
}

impl PartyId {
    pub fn to_u32(self) -> u32 {
        match self {
            PartyId::Worker(i) => i,
            PartyId::S1 => 0xffff_fff1,
            PartyId::S2 => 0xffff_fff2,
            PartyId::S3 => 0xffff_fff3,
        }
    }

    pub fn from_u32(v: u32) -> PartyId {
        match v {
            0xffff_fff1 => PartyId::S1,
            0xffff_fff2 => PartyId::S2,
            0xffff_fff3 => PartyId::S3,
            i => PartyId::Worker(i),
        }
    }

    pub fn is_server(self) -> bool {
        matches!(self, PartyId::S1 | PartyId::S2 | PartyId::S3)
    }
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartyId::Worker(i) => write!(f, "W{i}"),
            PartyId::S1 => write!(f, "S1"),
            PartyId::S2 => write!(f, "S2"),
            PartyId::S3 => write!(f, "S3"),
        }
    }
}

/// Ring and fixed-point parameters shared by all parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    /// Ring modulus is `2^bit_width`; 2..=64.
    pub bit_width: u32,
    /// Fractional bits of the fixed-point encoding.
    pub frac_bits: u32,
    /// Coordinate bound: encodable reals lie in `[-bound, bound]`.
    pub bound: f64,
}

impl Default for RingConfig {
    fn default() -> Self {
        RingConfig { bit_width: 64, frac_bits: 16, bound: 256.0 }
    }
}

impl RingConfig {
    pub fn new(bit_width: u32, frac_bits: u32, bound: f64) -> Result<Self> {
        if !(2..=64).contains(&bit_width) {
            return Err(Error::InvalidConfig(format!("bit_width {bit_width} outside 2..=64")));
        }
        if frac_bits + 1 >= bit_width {
            return Err(Error::InvalidConfig(format!(
                "frac_bits {frac_bits} must satisfy frac_bits < bit_width - 1"
            )));
        }
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::InvalidConfig(format!("bound {bound} must be positive")));
        }
        Ok(RingConfig { bit_width, frac_bits, bound })
    }

    /// Bitmask selecting the low `bit_width` bits.
    #[inline]
    pub fn mask(&self) -> u64 {
        if self.bit_width == 64 { u64::MAX } else { (1u64 << self.bit_width) - 1 }
    }

    /// Squared-distance overflow check: `d * (2 * B * 2^f)^2` must stay below
    /// `2^(bit_width - 1)` so distances remain non-negative under the signed
    /// interpretation.
    pub fn supports_dim(&self, dim: usize) -> Result<()> {
        let span = 2.0 * self.bound * (self.frac_bits as f64).exp2();
        let need = dim as f64 * span * span;
        if need >= ((self.bit_width - 1) as f64).exp2() {
            return Err(Error::OverflowRisk { dim });
        }
        Ok(())
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x & self.mask()
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask()
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask()
    }

    /// Two's-complement signed value of a ring element.
    #[inline]
    pub fn to_signed(&self, e: u64) -> i64 {
        let half = 1u64 << (self.bit_width - 1);
        if self.bit_width == 64 {
            e as i64
        } else if e >= half {
            (e as i64) - (1i64 << self.bit_width)
        } else {
            e as i64
        }
    }

    #[inline]
    pub fn from_signed(&self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }
}

/// Fixed-point-encoded vector over the ring; the protocol's unit of secret
/// data. `scale` counts applied `2^frac_bits` factors: 1 for values, 2 for
/// squared distances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingVector {
    pub elems: Vec<u64>,
    pub scale: u8,
}

impl RingVector {
    pub fn zeros(dim: usize) -> Self {
        RingVector { elems: vec![0; dim], scale: 1 }
    }

    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    pub fn add(&self, other: &RingVector, cfg: &RingConfig) -> Result<RingVector> {
        check_len(self.dim(), other.dim())?;
        check_scale(self.scale, other.scale)?;
        let elems =
            self.elems.iter().zip(&other.elems).map(|(&a, &b)| cfg.add(a, b)).collect();
        Ok(RingVector { elems, scale: self.scale })
    }

    pub fn sub(&self, other: &RingVector, cfg: &RingConfig) -> Result<RingVector> {
        check_len(self.dim(), other.dim())?;
        check_scale(self.scale, other.scale)?;
        let elems =
            self.elems.iter().zip(&other.elems).map(|(&a, &b)| cfg.sub(a, b)).collect();
        Ok(RingVector { elems, scale: self.scale })
    }
}

/// One party's additive share of a secret [`RingVector`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareVector {
    pub party: PartyId,
    pub elems: Vec<u64>,
    pub scale: u8,
}

impl ShareVector {
    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    pub fn zeros(party: PartyId, dim: usize, scale: u8) -> Self {
        ShareVector { party, elems: vec![0; dim], scale }
    }

    pub fn add(&self, other: &ShareVector, cfg: &RingConfig) -> Result<ShareVector> {
        check_party(self.party, other.party)?;
        check_len(self.dim(), other.dim())?;
        check_scale(self.scale, other.scale)?;
        let elems =
            self.elems.iter().zip(&other.elems).map(|(&a, &b)| cfg.add(a, b)).collect();
        Ok(ShareVector { party: self.party, elems, scale: self.scale })
    }

    pub fn sub(&self, other: &ShareVector, cfg: &RingConfig) -> Result<ShareVector> {
        check_party(self.party, other.party)?;
        check_len(self.dim(), other.dim())?;
        check_scale(self.scale, other.scale)?;
        let elems =
            self.elems.iter().zip(&other.elems).map(|(&a, &b)| cfg.sub(a, b)).collect();
        Ok(ShareVector { party: self.party, elems, scale: self.scale })
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

fn check_scale(left: u8, right: u8) -> Result<()> {
    if left != right {
        return Err(Error::ScaleMismatch { left, right });
    }
    Ok(())
}

fn check_party(expected: PartyId, got: PartyId) -> Result<()> {
    if expected != got {
        return Err(Error::PartyMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        });
    }
    Ok(())
}

/// Encode a bounded real vector as fixed point: `round(v * 2^frac_bits)`
/// mapped into the ring.
pub fn encode_fixed(v: &[f64], cfg: &RingConfig) -> Result<RingVector> {
    let factor = (cfg.frac_bits as f64).exp2();
    let mut elems = Vec::with_capacity(v.len());
    for (index, &x) in v.iter().enumerate() {
        if x.is_nan() || x.abs() > cfg.bound {
            return Err(Error::CoordinateOutOfBound { index, value: x, bound: cfg.bound });
        }
        elems.push(cfg.from_signed((x * factor).round() as i64));
    }
    Ok(RingVector { elems, scale: 1 })
}

/// Decode back to reals; the upper half-ring maps to negatives.
pub fn decode_fixed(v: &RingVector, cfg: &RingConfig) -> Vec<f64> {
    let factor = ((cfg.frac_bits * v.scale as u32) as f64).exp2();
    v.elems.iter().map(|&e| cfg.to_signed(e) as f64 / factor).collect()
}

/// Split `x` into `(xi, x - xi)` with a uniform mask `xi`; the S1 share alone
/// is marginally uniform over the ring.
pub fn share(x: &RingVector, cfg: &RingConfig, rng: &mut SeedRng) -> (ShareVector, ShareVector) {
    let mask = cfg.mask();
    let xi: Vec<u64> = (0..x.dim()).map(|_| rng.ring_elem(mask)).collect();
    let rest: Vec<u64> = x.elems.iter().zip(&xi).map(|(&e, &m)| cfg.sub(e, m)).collect();
    (
        ShareVector { party: PartyId::S1, elems: xi, scale: x.scale },
        ShareVector { party: PartyId::S2, elems: rest, scale: x.scale },
    )
}

/// Coordinate-wise modular sum of the two server shares.
pub fn reconstruct(s1: &ShareVector, s2: &ShareVector, cfg: &RingConfig) -> Result<RingVector> {
    check_party(PartyId::S1, s1.party)?;
    check_party(PartyId::S2, s2.party)?;
    check_len(s1.dim(), s2.dim())?;
    check_scale(s1.scale, s2.scale)?;
    let elems = s1.elems.iter().zip(&s2.elems).map(|(&a, &b)| cfg.add(a, b)).collect();
    Ok(RingVector { elems, scale: s1.scale })
}

/// Local affine combination of same-party shares with plaintext integer
/// coefficients. Reconstruction commutes with the combination.
pub fn ring_linear(
    shares: &[ShareVector],
    coeffs: &[i64],
    cfg: &RingConfig,
) -> Result<ShareVector> {
    let first = shares.first().ok_or_else(|| Error::Protocol("empty share list".into()))?;
    check_len(shares.len(), coeffs.len())?;
    let mut acc = ShareVector::zeros(first.party, first.dim(), first.scale);
    for (s, &c) in shares.iter().zip(coeffs) {
        check_party(first.party, s.party)?;
        check_len(first.dim(), s.dim())?;
        check_scale(first.scale, s.scale)?;
        let ce = cfg.from_signed(c);
        for (a, &e) in acc.elems.iter_mut().zip(&s.elems) {
            *a = cfg.add(*a, cfg.mul(ce, e));
        }
    }
    Ok(acc)
}

// Binary vector layout: bit_width (1) | scale (1) | length (8, LE) | length x 8-byte LE elements.
pub fn serialize_elems(bit_width: u32, scale: u8, elems: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 8 * elems.len());
    out.push(bit_width as u8);
    out.push(scale);
    out.extend_from_slice(&(elems.len() as u64).to_le_bytes());
    for &e in elems {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out
}

pub fn deserialize_elems(bytes: &[u8]) -> Result<(u32, u8, Vec<u64>)> {
    if bytes.len() < 10 {
        return Err(Error::Malformed("vector header truncated".into()));
    }
    let bit_width = bytes[0] as u32;
    let scale = bytes[1];
    let len = u64::from_le_bytes(bytes[2..10].try_into().unwrap()) as usize;
    if bytes.len() != 10 + 8 * len {
        return Err(Error::Malformed(format!(
            "vector body: expected {} bytes, got {}",
            10 + 8 * len,
            bytes.len()
        )));
    }
    let elems = bytes[10..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((bit_width, scale, elems))
}

impl RingVector {
    pub fn to_bytes(&self, cfg: &RingConfig) -> Vec<u8> {
        serialize_elems(cfg.bit_width, self.scale, &self.elems)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RingVector> {
        let (_, scale, elems) = deserialize_elems(bytes)?;
        Ok(RingVector { elems, scale })
    }
}

impl ShareVector {
    pub fn to_bytes(&self, cfg: &RingConfig) -> Vec<u8> {
        serialize_elems(cfg.bit_width, self.scale, &self.elems)
    }
}
