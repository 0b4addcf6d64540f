//! Plain-text snapshot sequence format.
//!
//! ```text
//! 1 20        <- header: time index, node count
//! 0 3         <- one line per edge, i < j
//! 4 17
//!             <- blank line ends the block
//! 2 20
//! ...
//! ```
//!
//! Blocks appear in increasing `t` starting at 1 with no gaps, and every block
//! carries the same `N`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;

/// Writes one block for `graph` at time `t`.
pub fn write_snapshot<W: Write>(out: &mut W, t: u64, graph: &GraphSnapshot) -> Result<()> {
    writeln!(out, "{} {}", t, graph.num_nodes())?;
    for (i, j) in graph.edges() {
        writeln!(out, "{i} {j}")?;
    }
    writeln!(out)?;
    Ok(())
}

/// Writes a whole sequence with time indices starting at 1.
pub fn write_sequence<W: Write>(out: &mut W, graphs: &[GraphSnapshot]) -> Result<()> {
    for (idx, g) in graphs.iter().enumerate() {
        write_snapshot(out, idx as u64 + 1, g)?;
    }
    Ok(())
}

/// Streaming reader; errors carry the 1-based line number of the offending line.
pub struct SnapshotReader<R> {
    input: R,
    line_no: usize,
    next_t: u64,
    num_nodes: Option<usize>,
    buf: String,
}

impl<R: BufRead> SnapshotReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            line_no: 0,
            next_t: 1,
            num_nodes: None,
            buf: String::new(),
        }
    }

    /// Node count, once the first header has been read.
    pub fn num_nodes(&self) -> Option<usize> {
        self.num_nodes
    }

    fn read_line(&mut self) -> Result<Option<&str>> {
        self.buf.clear();
        if self.input.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some(self.buf.trim()))
    }

    fn two_fields(line: &str, line_no: usize, what: &str) -> Result<(u64, u64)> {
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u64> {
            tok.ok_or_else(|| Error::parse(line_no, format!("expected two integers in {what}")))?
                .parse::<u64>()
                .map_err(|_| Error::parse(line_no, format!("non-integer field in {what}: {line:?}")))
        };
        let a = parse(it.next())?;
        let b = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::parse(line_no, format!("trailing fields in {what}: {line:?}")));
        }
        Ok((a, b))
    }

    /// Reads the next block, or `None` at end of input.
    pub fn next_snapshot(&mut self) -> Result<Option<(u64, GraphSnapshot)>> {
        // skip blank lines between blocks
        let header = loop {
            match self.read_line()? {
                None => return Ok(None),
                Some("") => continue,
                Some(line) => break line.to_owned(),
            }
        };
        let header_line = self.line_no;
        let (t, n) = Self::two_fields(&header, header_line, "block header `t N`")?;
        if t != self.next_t {
            return Err(Error::parse(
                header_line,
                format!("expected time index {}, found {t}", self.next_t),
            ));
        }
        let n = n as usize;
        if n < 2 {
            return Err(Error::parse(header_line, format!("node count must be >= 2; got {n}")));
        }
        match self.num_nodes {
            Some(prev) if prev != n => {
                return Err(Error::parse(
                    header_line,
                    format!("node count changed from {prev} to {n}"),
                ))
            }
            _ => self.num_nodes = Some(n),
        }
        let mut graph = GraphSnapshot::empty(n);
        loop {
            let line_no = self.line_no + 1;
            let line = match self.read_line()? {
                None | Some("") => break,
                Some(l) => l.to_owned(),
            };
            let (i, j) = Self::two_fields(&line, line_no, "edge line `i j`")?;
            let (i, j) = (i as usize, j as usize);
            if i >= j {
                return Err(Error::parse(line_no, format!("edge ({i},{j}) must satisfy i < j")));
            }
            if j >= n {
                return Err(Error::parse(line_no, format!("node {j} out of range for N = {n}")));
            }
            if graph.has_edge(i, j) {
                return Err(Error::parse(line_no, format!("duplicate edge ({i},{j})")));
            }
            graph.insert(i, j)?;
        }
        self.next_t += 1;
        Ok(Some((t, graph)))
    }

    pub fn read_all(mut self) -> Result<Vec<GraphSnapshot>> {
        let mut out = Vec::new();
        while let Some((_, g)) = self.next_snapshot()? {
            out.push(g);
        }
        Ok(out)
    }
}
