//! Text formats.
//!
//! Edge list: a header line `n m` followed by `m` lines `u v` with 0-based
//! node indices and `u < v`; the unit diagonal is implicit. Blank lines are
//! skipped. Assignment: one integer label per line, `0` for outliers.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graphmodel::{Adjacency, ClusterAssignment};

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_fields<const K: usize>(line_no: usize, line: &str, what: &str) -> Result<[usize; K]> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != K {
        return Err(Error::parse(line_no, format!("{what}: expected {K} integers, found {} fields", fields.len())));
    }
    let mut out = [0usize; K];
    for (slot, field) in out.iter_mut().zip(&fields) {
        *slot = field
            .parse()
            .map_err(|_| Error::parse(line_no, format!("{what}: '{field}' is not a non-negative integer")))?;
    }
    Ok(out)
}

pub fn parse_graph(text: &str) -> Result<Adjacency> {
    let mut lines = numbered_lines(text);
    let (header_no, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header 'n m'"))?;
    let [n, m] = parse_fields::<2>(header_no, header, "header")?;
    let max_edges = n * n.saturating_sub(1) / 2;
    if m > max_edges {
        return Err(Error::parse(header_no, format!("header claims {m} edges but {n} nodes allow at most {max_edges}")));
    }

    let mut seen = HashSet::with_capacity(m);
    let mut last_line = header_no;
    for (line_no, line) in lines {
        if seen.len() == m {
            return Err(Error::parse(line_no, format!("more than the {m} edges declared in the header")));
        }
        let [u, v] = parse_fields::<2>(line_no, line, "edge")?;
        if u >= n || v >= n {
            return Err(Error::parse(line_no, format!("node index out of range 0..{n} in edge ({u}, {v})")));
        }
        if u == v {
            return Err(Error::parse(line_no, format!("self-loop ({u}, {u}); the diagonal is implicit")));
        }
        if u > v {
            return Err(Error::parse(line_no, format!("edge ({u}, {v}) must be written with u < v")));
        }
        if !seen.insert((u, v)) {
            return Err(Error::parse(line_no, format!("duplicate edge ({u}, {v})")));
        }
        last_line = line_no;
    }
    if seen.len() < m {
        return Err(Error::parse(
            last_line,
            format!("header declares {m} edges but only {} were found ({} missing)", seen.len(), m - seen.len()),
        ));
    }
    Adjacency::from_edges(n, seen)
}

pub fn format_graph(a: &Adjacency) -> String {
    let mut out = format!("{} {}\n", a.n(), a.edge_count());
    for (u, v) in a.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Adjacency> {
    parse_graph(&fs::read_to_string(path)?)
}

pub fn write_graph(a: &Adjacency, path: impl AsRef<Path>) -> Result<()> {
    fs::File::create(path)?.write_all(format_graph(a).as_bytes())?;
    Ok(())
}

pub fn parse_assignment(text: &str) -> Result<ClusterAssignment> {
    let mut labels = Vec::new();
    for (line_no, line) in numbered_lines(text) {
        let [label] = parse_fields::<1>(line_no, line, "label")?;
        labels.push(label);
    }
    ClusterAssignment::new(labels)
}

pub fn format_assignment(assignment: &ClusterAssignment) -> String {
    assignment.labels().iter().map(|l| format!("{l}\n")).collect()
}

pub fn read_assignment(path: impl AsRef<Path>) -> Result<ClusterAssignment> {
    parse_assignment(&fs::read_to_string(path)?)
}

pub fn write_assignment(assignment: &ClusterAssignment, path: impl AsRef<Path>) -> Result<()> {
    fs::File::create(path)?.write_all(format_assignment(assignment).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphmodel::{generate_gsbm, GsbmParams};

    fn parse_error_line(text: &str) -> (usize, String) {
        match parse_graph(text) {
            Err(Error::Parse { line, message }) => (line, message),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn graph_round_trip() {
        let inst = generate_gsbm(&GsbmParams::new(vec![6, 4], 3, 0.7, 0.2).unwrap(), 5);
        let text = format_graph(&inst.adjacency);
        assert_eq!(parse_graph(&text).unwrap(), inst.adjacency);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        write_graph(&inst.adjacency, &path).unwrap();
        assert_eq!(read_graph(&path).unwrap(), inst.adjacency);
    }

    #[test]
    fn empty_graph_round_trip() {
        let a = Adjacency::empty(3);
        assert_eq!(format_graph(&a), "3 0\n");
        assert_eq!(parse_graph("3 0\n").unwrap(), a);
    }

    #[test]
    fn shortfall_names_the_missing_count() {
        let (line, message) = parse_error_line("4 3\n0 1\n1 2\n");
        assert_eq!(line, 3);
        assert!(message.contains("1 missing"), "{message}");
    }

    #[test]
    fn malformed_inputs_are_rejected_with_line_numbers() {
        assert_eq!(parse_error_line("4 2\n0 1\n2 2\n").0, 3);
        assert_eq!(parse_error_line("4 2\n0 1\n1 4\n").0, 3);
        assert_eq!(parse_error_line("4 2\n0 1\n0 1\n").0, 3);
        assert_eq!(parse_error_line("4 2\n0 1\n3 2\n").0, 3);
        assert_eq!(parse_error_line("4 1\n0 1\n1 2\n").0, 3);
        assert_eq!(parse_error_line("4\n").0, 1);
        assert_eq!(parse_error_line("a b\n").0, 1);
        assert_eq!(parse_error_line("3 4\n").0, 1);
        assert_eq!(parse_error_line("4 1\n0 x\n").0, 2);
        assert_eq!(parse_error_line("").0, 1);
    }

    #[test]
    fn assignment_round_trip() {
        let assignment = ClusterAssignment::new(vec![1, 0, 2, 2, 1, 0]).unwrap();
        let text = format_assignment(&assignment);
        assert_eq!(text, "1\n0\n2\n2\n1\n0\n");
        assert_eq!(parse_assignment(&text).unwrap(), assignment);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.txt");
        write_assignment(&assignment, &path).unwrap();
        assert_eq!(read_assignment(&path).unwrap(), assignment);
    }

    #[test]
    fn bad_assignments_are_rejected() {
        assert!(matches!(parse_assignment("1\n-1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_assignment("1\n3\n").is_err());
    }
}
