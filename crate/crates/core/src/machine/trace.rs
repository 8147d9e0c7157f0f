use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub type Address = u64;

/// Header line of the trace dump.
pub const TRACE_HEADER: &str = "op_index,op_label,address,kind";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProbeKind {
    Read,
    Write,
}

impl ProbeKind {
    fn tag(self) -> char {
        match self {
            ProbeKind::Read => 'R',
            ProbeKind::Write => 'W',
        }
    }
}

/// One probe as seen by the adversary: where, and whether it was a write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub address: Address,
    pub kind: ProbeKind,
}

/// The probes issued while serving one operation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperationTrace {
    pub label: String,
    pub probes: Vec<ProbeRecord>,
}

impl OperationTrace {
    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.probes.iter().map(|p| p.address)
    }
}

/// The adversary's view of a session: per-operation probe sequences, with
/// operation boundaries, and nothing about cell contents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionTrace {
    pub operations: Vec<OperationTrace>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TraceParseError {
    #[error("missing or wrong header")]
    Header,
    #[error("line {line}: expected 4 comma-separated fields")]
    FieldCount { line: usize },
    #[error("line {line}: bad {field}")]
    Field { line: usize, field: &'static str },
    #[error("line {line}: operation index {found} out of sequence (expected {expected})")]
    OutOfSequence {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("trailing probes without terminating blank line")]
    Unterminated,
}

impl SessionTrace {
    pub fn total_probes(&self) -> usize {
        self.operations.iter().map(OperationTrace::len).sum()
    }

    pub fn probe_counts(&self) -> Vec<usize> {
        self.operations.iter().map(OperationTrace::len).collect()
    }

    /// Writes the dump format: a header line, then for every operation one
    /// `op_index,op_label,address,R|W` line per probe followed by a blank line.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for (index, op) in self.operations.iter().enumerate() {
            for probe in &op.probes {
                writeln!(
                    out,
                    "{},{},{},{}",
                    index,
                    op.label,
                    probe.address,
                    probe.kind.tag()
                )?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_dump(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ASCII apart from labels, which are UTF-8")
    }

    /// Parses the dump format back. Labels of empty operations are not
    /// recorded in the dump and come back empty.
    pub fn parse_dump(text: &str) -> Result<Self, TraceParseError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == TRACE_HEADER => {}
            _ => return Err(TraceParseError::Header),
        }
        let mut operations = Vec::new();
        let mut current = OperationTrace::default();
        let mut open = false;
        for (n, line) in lines {
            let line_no = n + 1;
            if line.is_empty() {
                operations.push(std::mem::take(&mut current));
                open = false;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(TraceParseError::FieldCount { line: line_no });
            }
            let index: usize = fields[0].parse().map_err(|_| TraceParseError::Field {
                line: line_no,
                field: "op_index",
            })?;
            if index != operations.len() {
                return Err(TraceParseError::OutOfSequence {
                    line: line_no,
                    expected: operations.len(),
                    found: index,
                });
            }
            let address: Address = fields[2].parse().map_err(|_| TraceParseError::Field {
                line: line_no,
                field: "address",
            })?;
            let kind = match fields[3] {
                "R" => ProbeKind::Read,
                "W" => ProbeKind::Write,
                _ => {
                    return Err(TraceParseError::Field {
                        line: line_no,
                        field: "kind",
                    })
                }
            };
            if !open {
                current.label = fields[1].to_string();
                open = true;
            }
            current.probes.push(ProbeRecord { address, kind });
        }
        if open {
            return Err(TraceParseError::Unterminated);
        }
        Ok(SessionTrace { operations })
    }
}

impl fmt::Display for SessionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dump())
    }
}

/// Replaces the characters that would break the line format.
pub(crate) fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c == ',' || c == '\n' || c == '\r' {
                '_'
            } else {
                c
            }
        })
        .collect()
}
