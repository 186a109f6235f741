//! Session records and their line-oriented text form.
//!
//! A transcript file holds one or more sessions. Each session is a header
//! line, its events in the order they happened, and a closing summary line.
//! Fields are tab-separated:
//!
//! ```text
//! # seedqkd transcript v1
//! # classical channel: authenticated (assumed)
//! session <label> <protocol> <n>
//! msg     <phase> <sender> <name> <bits>       public classical message
//! local   <phase> <owner>  <name> <bits>       a party's private string
//! quantum <phase> <sender> <name> <states>     pulses, e.g. psi10,psi01,lost
//! summary n=<n> pulses=<p> aborted=<0|1> key=<name>:<len>:<remaining>:<qber>:<verified> ...
//! ```
//!
//! Bit payloads use `0`/`1` with position 1 first; an empty payload is `-`.
//! `qber` and `verified` are `na` when not measured. Floats are written with
//! Rust's shortest round-trip formatting, so `read(write(r)) == r` exactly.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::bitcore::BitString;
use crate::error::{Error, Result};
use crate::qsim::QubitState;

pub const HEADER: &str = "# seedqkd transcript v1";
pub const CHANNEL_ASSUMPTION: &str = "# classical channel: authenticated (assumed)";

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(concat!("unknown ", stringify!($name), " {:?}"), other)),
                }
            }
        }
    };
}

token_enum!(Protocol {
    Bb84 => "bb84",
    Seed => "seed",
    Swap => "swap",
});

token_enum!(Party {
    Alice => "alice",
    Bob => "bob",
    Central => "central",
    Eve => "eve",
});

token_enum!(Phase {
    Raw => "raw",
    Sift => "sift",
    Seed => "seed",
    Missing => "missing",
    Asymmetric => "asymmetric",
    Reconciliation => "reconciliation",
    Erasure => "erasure",
    Qber => "qber",
    Output => "output",
    Swap => "swap",
});

token_enum!(EventKind {
    Message => "msg",
    Local => "local",
    Quantum => "quantum",
});

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Bits(BitString),
    States(Vec<Option<QubitState>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub phase: Phase,
    pub sender: Party,
    pub name: String,
    pub payload: Payload,
}

impl Event {
    pub fn bits(&self) -> Option<&BitString> {
        match &self.payload {
            Payload::Bits(b) => Some(b),
            Payload::States(_) => None,
        }
    }
}

/// Per-key line of the summary.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyStat {
    pub name: String,
    /// Reconciled length, before any QBER sacrifice.
    pub length: usize,
    /// Length left after disclosed positions are removed.
    pub remaining: usize,
    pub qber: Option<f64>,
    pub verified: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub pulses: usize,
    pub aborted: bool,
    pub keys: Vec<KeyStat>,
}

impl Summary {
    pub fn key(&self, name: &str) -> Option<&KeyStat> {
        self.keys.iter().find(|k| k.name == name)
    }
}

/// Everything one protocol run produced: the ordered event log and a summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionRecord {
    pub label: String,
    pub protocol: Protocol,
    pub n: usize,
    pub events: Vec<Event>,
    pub summary: Summary,
}

impl SessionRecord {
    pub fn new(label: impl Into<String>, protocol: Protocol, n: usize) -> Self {
        SessionRecord {
            label: label.into(),
            protocol,
            n,
            events: Vec::new(),
            summary: Summary {
                n,
                ..Summary::default()
            },
        }
    }

    pub fn message(&mut self, phase: Phase, sender: Party, name: &str, bits: &BitString) {
        self.push(EventKind::Message, phase, sender, name, Payload::Bits(bits.clone()));
    }

    pub fn local(&mut self, phase: Phase, owner: Party, name: &str, bits: &BitString) {
        self.push(EventKind::Local, phase, owner, name, Payload::Bits(bits.clone()));
    }

    pub fn quantum(&mut self, phase: Phase, sender: Party, name: &str, states: Vec<Option<QubitState>>) {
        self.push(EventKind::Quantum, phase, sender, name, Payload::States(states));
    }

    fn push(&mut self, kind: EventKind, phase: Phase, sender: Party, name: &str, payload: Payload) {
        self.events.push(Event {
            kind,
            phase,
            sender,
            name: name.to_owned(),
            payload,
        });
    }

    /// First bit payload recorded by `sender` under `name`.
    pub fn bits(&self, sender: Party, name: &str) -> Option<&BitString> {
        self.events
            .iter()
            .filter(|e| e.sender == sender && e.name == name)
            .find_map(Event::bits)
    }

    /// Public messages only, in transmission order.
    pub fn messages(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Message)
    }

    pub fn states(&self, sender: Party, name: &str) -> Option<&[Option<QubitState>]> {
        self.events
            .iter()
            .filter(|e| e.sender == sender && e.name == name)
            .find_map(|e| match &e.payload {
                Payload::States(s) => Some(s.as_slice()),
                Payload::Bits(_) => None,
            })
    }
}

fn bits_field(bits: &BitString) -> String {
    if bits.is_empty() {
        "-".to_owned()
    } else {
        bits.to_string()
    }
}

fn states_field(states: &[Option<QubitState>]) -> String {
    if states.is_empty() {
        return "-".to_owned();
    }
    states
        .iter()
        .map(|s| s.map_or("lost", QubitState::name))
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders sessions in transcript form.
pub fn render(records: &[SessionRecord]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(CHANNEL_ASSUMPTION);
    out.push('\n');
    for record in records {
        let _ = writeln!(out, "session\t{}\t{}\t{}", record.label, record.protocol, record.n);
        for e in &record.events {
            let payload = match &e.payload {
                Payload::Bits(b) => bits_field(b),
                Payload::States(s) => states_field(s),
            };
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", e.kind, e.phase, e.sender, e.name, payload);
        }
        let s = &record.summary;
        let _ = write!(
            out,
            "summary\tn={}\tpulses={}\taborted={}",
            s.n,
            s.pulses,
            u8::from(s.aborted)
        );
        for k in &s.keys {
            let qber = k.qber.map_or("na".to_owned(), |q| q.to_string());
            let verified = k.verified.map_or("na", |v| if v { "1" } else { "0" });
            let _ = write!(
                out,
                "\tkey={}:{}:{}:{}:{}",
                k.name, k.length, k.remaining, qber, verified
            );
        }
        out.push('\n');
    }
    out
}

/// Parses every session in a transcript.
pub fn parse(text: &str) -> Result<Vec<SessionRecord>> {
    let mut records = Vec::new();
    let mut current: Option<SessionRecord> = None;
    let mut last_good = 0;

    for (offset, raw) in text.lines().enumerate() {
        let line = offset + 1;
        let err = |message: String| Error::Parse {
            line,
            last_good,
            message,
        };
        if raw.trim().is_empty() || raw.starts_with('#') {
            last_good = line;
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        match fields[0] {
            "session" => {
                if current.is_some() {
                    return Err(err("new session before the previous summary".into()));
                }
                let [_, label, protocol, n] = fields[..] else {
                    return Err(err(format!("session line needs 4 fields, got {}", fields.len())));
                };
                let protocol = protocol.parse().map_err(err)?;
                let n = n.parse().map_err(|e| err(format!("bad n {n:?}: {e}")))?;
                current = Some(SessionRecord::new(label, protocol, n));
            }
            "summary" => {
                let record = current
                    .as_mut()
                    .ok_or_else(|| err("summary outside a session".into()))?;
                record.summary = parse_summary(&fields[1..]).map_err(err)?;
                records.push(current.take().expect("checked above"));
            }
            tag => {
                let kind: EventKind = tag.parse().map_err(err)?;
                let record = current
                    .as_mut()
                    .ok_or_else(|| err("event outside a session".into()))?;
                let [_, phase, sender, name, payload] = fields[..] else {
                    return Err(err(format!("event line needs 5 fields, got {}", fields.len())));
                };
                let payload = match kind {
                    EventKind::Quantum => Payload::States(parse_states(payload).map_err(err)?),
                    _ => Payload::Bits(parse_bits(payload).map_err(|e| err(e.to_string()))?),
                };
                record.events.push(Event {
                    kind,
                    phase: phase.parse().map_err(err)?,
                    sender: sender.parse().map_err(err)?,
                    name: name.to_owned(),
                    payload,
                });
            }
        }
        last_good = line;
    }

    if let Some(open) = current {
        return Err(Error::Parse {
            line: last_good + 1,
            last_good,
            message: format!("session {:?} ended without a summary (truncated?)", open.label),
        });
    }
    Ok(records)
}

fn parse_bits(field: &str) -> Result<BitString> {
    if field == "-" {
        Ok(BitString::default())
    } else {
        field.parse()
    }
}

fn parse_states(field: &str) -> std::result::Result<Vec<Option<QubitState>>, String> {
    if field == "-" {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|s| if s == "lost" { Ok(None) } else { s.parse().map(Some) })
        .collect()
}

fn parse_summary(fields: &[&str]) -> std::result::Result<Summary, String> {
    let mut summary = Summary::default();
    let mut seen = [false; 3];
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("summary field {field:?} is not key=value"))?;
        let bad = |e: &dyn fmt::Display| format!("summary {key}: {e}");
        match key {
            "n" => {
                summary.n = value.parse().map_err(|e| bad(&e))?;
                seen[0] = true;
            }
            "pulses" => {
                summary.pulses = value.parse().map_err(|e| bad(&e))?;
                seen[1] = true;
            }
            "aborted" => {
                summary.aborted = match value {
                    "0" => false,
                    "1" => true,
                    other => return Err(bad(&format!("expected 0 or 1, got {other:?}"))),
                };
                seen[2] = true;
            }
            "key" => summary.keys.push(parse_key_stat(value)?),
            other => return Err(format!("unknown summary field {other:?}")),
        }
    }
    if seen != [true; 3] {
        return Err("summary is missing n, pulses or aborted".into());
    }
    Ok(summary)
}

fn parse_key_stat(value: &str) -> std::result::Result<KeyStat, String> {
    let parts: Vec<&str> = value.split(':').collect();
    let [name, length, remaining, qber, verified] = parts[..] else {
        return Err(format!("key stat {value:?} needs 5 parts"));
    };
    let num = |s: &str| s.parse::<usize>().map_err(|e| format!("key stat {name}: {e}"));
    Ok(KeyStat {
        name: name.to_owned(),
        length: num(length)?,
        remaining: num(remaining)?,
        qber: match qber {
            "na" => None,
            q => Some(q.parse().map_err(|e| format!("key stat {name} qber: {e}"))?),
        },
        verified: match verified {
            "na" => None,
            "1" => Some(true),
            "0" => Some(false),
            other => return Err(format!("key stat {name}: bad verified flag {other:?}")),
        },
    })
}

pub fn write_records(records: &[SessionRecord], path: &Path) -> Result<()> {
    fs::write(path, render(records)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_records(path: &Path) -> Result<Vec<SessionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text)
}

pub fn write_transcript(record: &SessionRecord, path: &Path) -> Result<()> {
    write_records(std::slice::from_ref(record), path)
}

/// Reads a file that must hold exactly one session.
pub fn read_transcript(path: &Path) -> Result<SessionRecord> {
    let mut records = read_records(path)?;
    match records.len() {
        1 => Ok(records.remove(0)),
        count => Err(Error::Parse {
            line: 0,
            last_good: 0,
            message: format!("expected one session, found {count}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::Bit;
    use crate::qsim::encode;

    fn sample() -> SessionRecord {
        let mut r = SessionRecord::new("demo", Protocol::Seed, 3);
        r.local(Phase::Raw, Party::Alice, "s", &"101".parse().unwrap());
        r.quantum(
            Phase::Raw,
            Party::Alice,
            "received",
            vec![Some(encode(Bit::ONE, Bit::ZERO)), None, Some(encode(Bit::ZERO, Bit::ONE))],
        );
        r.message(Phase::Sift, Party::Bob, "m", &"011".parse().unwrap());
        r.message(Phase::Erasure, Party::Bob, "discard", &BitString::default());
        r.summary.pulses = 6;
        r.summary.keys.push(KeyStat {
            name: "key_m".into(),
            length: 3,
            remaining: 1,
            qber: Some(0.1 + 0.2),
            verified: Some(true),
        });
        r.summary.keys.push(KeyStat {
            name: "key_i".into(),
            length: 3,
            remaining: 3,
            qber: None,
            verified: None,
        });
        r
    }

    #[test]
    fn render_then_parse_is_exact() {
        let r = sample();
        let text = render(std::slice::from_ref(&r));
        assert!(text.contains("quantum\traw\talice\treceived\tpsi10,lost,psi01"));
        assert!(text.contains("msg\terasure\tbob\tdiscard\t-"));
        assert_eq!(parse(&text).unwrap(), vec![r]);
    }

    #[test]
    fn truncated_file_names_last_good_line() {
        let text = render(&[sample()]);
        let cut: Vec<&str> = text.lines().take(5).collect();
        match parse(&cut.join("\n")).unwrap_err() {
            Error::Parse { last_good, .. } => assert_eq!(last_good, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_line_reports_position() {
        let mut text = render(&[sample()]);
        text = text.replacen("msg\tsift", "msg\tnowhere", 1);
        match parse(&text).unwrap_err() {
            Error::Parse { line, last_good, .. } => {
                assert_eq!(line, 6);
                assert_eq!(last_good, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lookups() {
        let r = sample();
        assert_eq!(r.bits(Party::Alice, "s").unwrap().to_string(), "101");
        assert_eq!(r.messages().count(), 2);
        assert_eq!(r.states(Party::Alice, "received").unwrap().len(), 3);
        assert!(r.bits(Party::Bob, "s").is_none());
    }
}
