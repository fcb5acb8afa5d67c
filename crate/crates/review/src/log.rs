//! Append-only decisions log, one JSON record per line.
//!
//! Every record is written and synced before the in-memory state changes, so
//! after a crash the log holds a prefix of the acknowledged decisions plus at
//! most one torn trailing line. Replay drops the torn line and truncates it
//! away so later appends start on a clean line boundary.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use pronoun_audit::rewriter::ReviewDecision;

use crate::SessionError;

/// Destination for log records. `sync` must make written bytes durable.
pub trait LogSink: Write + Send + Sync {
    fn sync(&mut self) -> io::Result<()>;
}

impl LogSink for File {
    fn sync(&mut self) -> io::Result<()> {
        self.sync_data()
    }
}

#[derive(Debug, Default)]
pub struct Replayed {
    /// Decisions with their 1-based line numbers, in log order.
    pub decisions: Vec<(usize, ReviewDecision)>,
    /// A partial final line was found and discarded.
    pub torn_tail: bool,
}

pub struct DecisionLog {
    path: PathBuf,
    sink: Box<dyn LogSink>,
}

impl std::fmt::Debug for DecisionLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecisionLog").field("path", &self.path).finish()
    }
}

fn parse_line(line: &str) -> Result<ReviewDecision, String> {
    let decision: ReviewDecision = serde_json::from_str(line).map_err(|e| e.to_string())?;
    decision.validate().map_err(|e| e.to_string())?;
    Ok(decision)
}

/// Parses log contents. Only an unterminated final line may be torn; any
/// other unreadable line is corruption.
pub fn parse_log(contents: &str) -> Result<Replayed, SessionError> {
    let mut replayed = Replayed::default();
    let terminated = contents.is_empty() || contents.ends_with('\n');
    let lines: Vec<&str> = contents.split_terminator('\n').collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(d) => replayed.decisions.push((i + 1, d)),
            Err(_) if !terminated && i + 1 == lines.len() => replayed.torn_tail = true,
            Err(message) => return Err(SessionError::CorruptLog { line: i + 1, message }),
        }
    }
    Ok(replayed)
}

impl DecisionLog {
    /// Opens (creating if absent) and replays the log at `path`.
    pub fn open(path: &Path) -> Result<(Self, Replayed), SessionError> {
        let io_err = |e: io::Error| SessionError::Io(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err)?;
        // A torn write can split a multi-byte character; only the tail may be
        // invalid.
        let contents = match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => {
                let valid = e.utf8_error().valid_up_to();
                let bytes = e.into_bytes();
                if bytes[valid..].contains(&b'\n') {
                    let line = bytes[..valid].iter().filter(|&&b| b == b'\n').count() + 1;
                    return Err(SessionError::CorruptLog {
                        line,
                        message: "invalid UTF-8".into(),
                    });
                }
                String::from_utf8_lossy(&bytes).into_owned()
            }
        };
        let replayed = parse_log(&contents)?;
        if !contents.is_empty() && !contents.ends_with('\n') {
            if replayed.torn_tail {
                let keep = contents.rfind('\n').map_or(0, |i| i + 1);
                file.set_len(keep as u64).map_err(io_err)?;
            } else {
                file.write_all(b"\n").map_err(io_err)?;
            }
            file.sync_data().map_err(io_err)?;
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                sink: Box::new(file),
            },
            replayed,
        ))
    }

    /// A log writing to an arbitrary sink, e.g. one that fails on demand.
    pub fn with_sink(path: &Path, sink: Box<dyn LogSink>) -> Self {
        Self {
            path: path.to_path_buf(),
            sink,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record and syncs it; returns only once it is durable.
    pub fn append(&mut self, decision: &ReviewDecision) -> io::Result<()> {
        let mut line = serde_json::to_string(decision).map_err(io::Error::other)?;
        line.push('\n');
        self.sink.write_all(line.as_bytes())?;
        self.sink.flush()?;
        self.sink.sync()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pronoun_audit::rewriter::DecisionAction;

    fn decision(id: &str) -> ReviewDecision {
        ReviewDecision {
            suggestion_id: id.into(),
            action: DecisionAction::Accept,
            replacement: None,
            reviewer: "r".into(),
            timestamp: "t".into(),
        }
    }

    fn line(id: &str) -> String {
        serde_json::to_string(&decision(id)).unwrap() + "\n"
    }

    #[test]
    fn empty_log() {
        let r = parse_log("").unwrap();
        assert!(r.decisions.is_empty() && !r.torn_tail);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let text = line("a") + &line("b")[..10];
        let r = parse_log(&text).unwrap();
        assert_eq!(r.decisions.len(), 1);
        assert!(r.torn_tail);
    }

    #[test]
    fn corrupt_middle_line_reports_line_number() {
        let text = line("a") + "{oops\n" + &line("b");
        assert_eq!(
            parse_log(&text).unwrap_err(),
            SessionError::CorruptLog {
                line: 2,
                message: parse_line("{oops").unwrap_err()
            }
        );
    }

    #[test]
    fn edit_without_replacement_is_corrupt() {
        let text = r#"{"suggestion_id":"x","action":"edit"}"#.to_string() + "\n";
        assert!(matches!(parse_log(&text), Err(SessionError::CorruptLog { line: 1, .. })));
    }

    #[test]
    fn open_truncates_torn_tail_and_appends_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("decisions.jsonl");
        std::fs::write(&path, line("a") + &line("b")[..7]).unwrap();
        let (mut log, replayed) = DecisionLog::open(&path).unwrap();
        assert!(replayed.torn_tail);
        log.append(&decision("c")).unwrap();
        drop(log);
        let (_, replayed) = DecisionLog::open(&path).unwrap();
        let ids: Vec<_> = replayed.decisions.iter().map(|(_, d)| d.suggestion_id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert!(!replayed.torn_tail);
    }

    #[test]
    fn open_terminates_complete_unterminated_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, line("a").trim_end()).unwrap();
        let (mut log, replayed) = DecisionLog::open(&path).unwrap();
        assert_eq!(replayed.decisions.len(), 1);
        log.append(&decision("b")).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), line("a") + &line("b"));
    }

    #[test]
    fn torn_multibyte_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut bytes = line("a").into_bytes();
        bytes.extend_from_slice(&"{\"suggestion_id\":\"彼".as_bytes()[..20]);
        std::fs::write(&path, bytes).unwrap();
        let (_, replayed) = DecisionLog::open(&path).unwrap();
        assert!(replayed.torn_tail);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), line("a"));
    }
}
