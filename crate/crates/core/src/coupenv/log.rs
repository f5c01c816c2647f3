//! NDJSON game log: a header line, then one record per line.
//!
//! ```text
//! {"schema":"coup-game-log","version":1,"n_players":3,"dimensions":["Win","Challenge","Lie","Bait"]}
//! {"type":"move","game":7,"turn":0,"actor":0,"kind":"tax","claim":"duke","target":null,"lie":true,"rewards":[[0,0,0,0],..]}
//! {"type":"decision","game":7,"turn":0,"seat":0,"hand":["captain","duke"],"legal":[0,1,2],"action":2,"obs":{..}}
//! ```
//!
//! Targets are absolute seats. `rewards` holds one K-vector per seat.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Move, Role};
use crate::nnapprox::Observation;
use crate::rlcore::{VectorReward, COUP_DIMENSIONS};
use crate::{Error, Result};

pub const LOG_SCHEMA: &str = "coup-game-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub schema: String,
    pub version: u32,
    pub n_players: usize,
    pub dimensions: Vec<String>,
}

impl LogHeader {
    pub fn new(n_players: usize) -> Self {
        Self {
            schema: LOG_SCHEMA.into(),
            version: LOG_VERSION,
            n_players,
            dimensions: COUP_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub game: u64,
    pub turn: u32,
    pub actor: usize,
    pub kind: String,
    pub claim: Option<Role>,
    pub target: Option<usize>,
    pub lie: bool,
    pub rewards: Vec<Vec<f64>>,
}

impl MoveRecord {
    pub fn new(game: u64, turn: u32, actor: usize, mv: &Move, lie: bool, rewards: &[VectorReward]) -> Self {
        let target = match *mv {
            Move::Act { target, .. } => target,
            _ => None,
        };
        Self {
            game,
            turn,
            actor,
            kind: mv.type_name(),
            claim: mv.claim(),
            target,
            lie,
            rewards: rewards.iter().map(|r| r.components().to_vec()).collect(),
        }
    }
}

/// A learner decision with everything needed to re-query a network under another mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub game: u64,
    pub turn: u32,
    pub seat: usize,
    pub hand: Vec<Role>,
    pub legal: Vec<usize>,
    pub action: usize,
    pub obs: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Move(MoveRecord),
    Decision(DecisionRecord),
}

pub fn write_log<W: Write>(mut w: W, header: &LogHeader, records: &[LogRecord]) -> Result<()> {
    let line = |w: &mut W, s: String| writeln!(w, "{s}").map_err(|e| Error::io("<log>", e));
    line(&mut w, serde_json::to_string(header)?)?;
    for r in records {
        line(&mut w, serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_log<R: BufRead>(r: R) -> Result<(LogHeader, Vec<LogRecord>)> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: "<log>".into(),
        line,
        msg,
    };
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty log".into()))?;
    let first = first.map_err(|e| Error::io("<log>", e))?;
    let header: LogHeader = serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    if header.schema != LOG_SCHEMA {
        return Err(parse_err(1, format!("schema {:?}", header.schema)));
    }
    if header.version != LOG_VERSION {
        return Err(Error::Version {
            found: header.version,
            expected: LOG_VERSION,
        });
    }
    let mut records = Vec::new();
    for (i, l) in lines {
        let l = l.map_err(|e| Error::io("<log>", e))?;
        if l.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&l).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupenv::ActionKind;

    #[test]
    fn round_trip() {
        let rewards = vec![VectorReward::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap(); 3];
        let recs = vec![
            LogRecord::Move(MoveRecord::new(4, 2, 1, &Move::act(ActionKind::Tax), true, &rewards)),
            LogRecord::Decision(DecisionRecord {
                game: 4,
                turn: 2,
                seat: 1,
                hand: vec![Role::Captain],
                legal: vec![0, 2],
                action: 2,
                obs: Observation::with_events(vec![1.0, 2.0], 2, &[vec![0.0, 1.0]]).unwrap(),
            }),
        ];
        let mut buf = Vec::new();
        write_log(&mut buf, &LogHeader::new(3), &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"schema\":\"coup-game-log\",\"version\":1"));
        assert!(text.contains("\"kind\":\"tax\",\"claim\":\"duke\""));
        let (h, back) = read_log(&buf[..]).unwrap();
        assert_eq!(h, LogHeader::new(3));
        assert_eq!(back, recs);
    }

    #[test]
    fn rejects_other_versions() {
        let mut h = LogHeader::new(3);
        h.version = 2;
        let mut buf = Vec::new();
        write_log(&mut buf, &h, &[]).unwrap();
        assert!(matches!(read_log(&buf[..]), Err(Error::Version { found: 2, expected: 1 })));
    }
}
