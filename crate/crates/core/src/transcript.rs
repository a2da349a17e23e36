//! Message wire format and per-party transcripts.
//!
//! Every inter-party transfer is a [`Message`] logged in both endpoint
//! transcripts; values a party reconstructs for itself are logged as local
//! reveals. Transcripts drive the privacy audit and can be replayed from
//! JSON-lines exports.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{PartyId, RingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    ShareUpload,
    BlindedOpen,
    DistanceReveal,
    WeightShare,
    AggregateShare,
    ModelBroadcast,
    PCResponse,
    SelectionShare,
}

impl MessageKind {
    pub fn to_byte(self) -> u8 {
        match self {
            MessageKind::ShareUpload => 0,
            MessageKind::BlindedOpen => 1,
            MessageKind::DistanceReveal => 2,
            MessageKind::WeightShare => 3,
            MessageKind::AggregateShare => 4,
            MessageKind::ModelBroadcast => 5,
            MessageKind::PCResponse => 6,
            MessageKind::SelectionShare => 7,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => MessageKind::ShareUpload,
            1 => MessageKind::BlindedOpen,
            2 => MessageKind::DistanceReveal,
            3 => MessageKind::WeightShare,
            4 => MessageKind::AggregateShare,
            5 => MessageKind::ModelBroadcast,
            6 => MessageKind::PCResponse,
            7 => MessageKind::SelectionShare,
            k => return Err(Error::Malformed(format!("unknown message kind {k}"))),
        })
    }
}

impl FromStr for PartyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<PartyId> {
        match s {
            "S1" => Ok(PartyId::S1),
            "S2" => Ok(PartyId::S2),
            "S3" => Ok(PartyId::S3),
            _ => s
                .strip_prefix('W')
                .and_then(|d| d.parse().ok())
                .map(PartyId::Worker)
                .ok_or_else(|| Error::Malformed(format!("bad party id {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub round: u64,
    pub from: PartyId,
    pub to: PartyId,
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

impl Message {
    /// 24-byte header (round: 8, from: 4, to: 4, kind: 1, padding: 7) then
    /// the payload in the binary vector layout.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.payload.len());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&self.from.to_u32().to_le_bytes());
        out.extend_from_slice(&self.to.to_u32().to_le_bytes());
        out.push(self.kind.to_byte());
        out.extend_from_slice(&[0u8; 7]);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Message> {
        if bytes.len() < 24 {
            return Err(Error::Malformed("message header truncated".into()));
        }
        Ok(Message {
            round: u64::from_le_bytes(bytes[0..8].try_into().unwrap()),
            from: PartyId::from_u32(u32::from_le_bytes(bytes[8..12].try_into().unwrap())),
            to: PartyId::from_u32(u32::from_le_bytes(bytes[12..16].try_into().unwrap())),
            kind: MessageKind::from_byte(bytes[16])?,
            payload: bytes[24..].to_vec(),
        })
    }

    pub fn wire_len(&self) -> usize {
        24 + self.payload.len()
    }
}

/// One party's view: an append-only event log within a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Sent(Message),
    Received(Message),
    /// A plaintext value the party reconstructed for itself.
    Reveal { round: u64, label: String, value: RingVector },
}

#[derive(Debug, Clone, Default)]
pub struct PartyTranscript {
    pub party: Option<PartyId>,
    pub events: Vec<Event>,
}

impl PartyTranscript {
    pub fn received(&self) -> impl Iterator<Item = &Message> {
        self.events.iter().filter_map(|e| match e {
            Event::Received(m) => Some(m),
            _ => None,
        })
    }

    pub fn sent(&self) -> impl Iterator<Item = &Message> {
        self.events.iter().filter_map(|e| match e {
            Event::Sent(m) => Some(m),
            _ => None,
        })
    }

    pub fn reveals(&self) -> impl Iterator<Item = (&str, &RingVector)> {
        self.events.iter().filter_map(|e| match e {
            Event::Reveal { label, value, .. } => Some((label.as_str(), value)),
            _ => None,
        })
    }

    pub fn bytes_sent_to(&self, to: PartyId) -> usize {
        self.sent().filter(|m| m.to == to).map(|m| m.wire_len()).sum()
    }

    pub fn bytes_sent(&self) -> usize {
        self.sent().map(|m| m.wire_len()).sum()
    }
}

/// In-memory network: delivers messages synchronously and logs them in both
/// endpoint transcripts. Delivery is deterministic because parties execute
/// in schedule order.
#[derive(Debug, Clone, Default)]
pub struct Net {
    pub transcripts: BTreeMap<PartyId, PartyTranscript>,
}

impl Net {
    pub fn new() -> Self {
        Net::default()
    }

    fn entry(&mut self, party: PartyId) -> &mut PartyTranscript {
        let t = self.transcripts.entry(party).or_default();
        t.party = Some(party);
        t
    }

    pub fn send(&mut self, msg: Message) {
        self.entry(msg.from).events.push(Event::Sent(msg.clone()));
        self.entry(msg.to).events.push(Event::Received(msg));
    }

    pub fn reveal(&mut self, party: PartyId, round: u64, label: &str, value: RingVector) {
        self.entry(party)
            .events
            .push(Event::Reveal { round, label: label.to_string(), value });
    }

    pub fn transcript(&self, party: PartyId) -> Option<&PartyTranscript> {
        self.transcripts.get(&party)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum JsonEvent {
    Message {
        dir: String,
        round: u64,
        from: String,
        to: String,
        kind: MessageKind,
        payload: String,
    },
    Reveal {
        round: u64,
        label: String,
        scale: u8,
        elems: Vec<u64>,
    },
}

/// One JSON object per line; message payloads hex-encoded.
pub fn export_jsonl(t: &PartyTranscript) -> String {
    let mut out = String::new();
    for e in &t.events {
        let je = match e {
            Event::Sent(m) | Event::Received(m) => JsonEvent::Message {
                dir: if matches!(e, Event::Sent(_)) { "sent".into() } else { "received".into() },
                round: m.round,
                from: m.from.to_string(),
                to: m.to.to_string(),
                kind: m.kind,
                payload: hex::encode(&m.payload),
            },
            Event::Reveal { round, label, value } => JsonEvent::Reveal {
                round: *round,
                label: label.clone(),
                scale: value.scale,
                elems: value.elems.clone(),
            },
        };
        out.push_str(&serde_json::to_string(&je).expect("transcript event serializes"));
        out.push('\n');
    }
    out
}

pub fn import_jsonl(party: PartyId, text: &str) -> Result<PartyTranscript> {
    let mut t = PartyTranscript { party: Some(party), events: Vec::new() };
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let je: JsonEvent = serde_json::from_str(line)
            .map_err(|e| Error::Malformed(format!("transcript line {}: {e}", lineno + 1)))?;
        let event = match je {
            JsonEvent::Message { dir, round, from, to, kind, payload } => {
                let msg = Message {
                    round,
                    from: from.parse()?,
                    to: to.parse()?,
                    kind,
                    payload: hex::decode(&payload)
                        .map_err(|e| Error::Malformed(format!("bad hex payload: {e}")))?,
                };
                match dir.as_str() {
                    "sent" => Event::Sent(msg),
                    "received" => Event::Received(msg),
                    d => return Err(Error::Malformed(format!("bad direction {d:?}"))),
                }
            }
            JsonEvent::Reveal { round, label, scale, elems } => Event::Reveal {
                round,
                label,
                value: RingVector { elems, scale },
            },
        };
        t.events.push(event);
    }
    Ok(t)
}
