//! SemEval 2015 SDP column format.
//!
//! Blank-line separated blocks, one tab-separated line per token:
//! `id form lemma pos top pred frame arg_1 … arg_P`, where `P` is the number
//! of tokens marked `pred = +`. Argument column `k` holds the label of the
//! arc from the `k`-th predicate to the current token, or `_`. Lines starting
//! with `#` before a block are kept as the graph comment.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Arc, DepGraph, Token, ROOT_LABEL};

const EMPTY: &str = "_";

fn opt(field: &str) -> Option<String> {
    if field == EMPTY {
        None
    } else {
        Some(field.to_string())
    }
}

fn flag(field: &str, what: &str, line: usize) -> Result<bool> {
    match field {
        "+" => Ok(true),
        "-" => Ok(false),
        other => Err(Error::format(
            line,
            format!("{what} column must be + or -, got {other:?}"),
        )),
    }
}

pub fn read_sdp<R: BufRead>(reader: R) -> Result<Vec<DepGraph>> {
    let mut graphs = Vec::new();
    let mut comments: Vec<String> = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !block.is_empty() {
                graphs.push(parse_block(&block, std::mem::take(&mut comments))?);
                block.clear();
            }
        } else if block.is_empty() && line.starts_with('#') {
            comments.push(line[1..].to_string());
        } else {
            block.push((line_no, line));
        }
    }
    if !block.is_empty() {
        graphs.push(parse_block(&block, comments)?);
    }
    Ok(graphs)
}

fn parse_block(lines: &[(usize, String)], comments: Vec<String>) -> Result<DepGraph> {
    let rows: Vec<(usize, Vec<&str>)> = lines.iter().map(|(n, l)| (*n, l.split('\t').collect())).collect();
    let mut tokens = Vec::with_capacity(rows.len());
    let mut predicates = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (pos, (line, cols)) in rows.iter().enumerate() {
        if cols.len() < 7 {
            return Err(Error::format(
                *line,
                format!("expected at least 7 columns, got {}", cols.len()),
            ));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::format(*line, format!("bad token id {:?}", cols[0])))?;
        if !seen.insert(id) {
            return Err(Error::format(*line, format!("duplicate token id {id}")));
        }
        if id != pos + 1 {
            return Err(Error::format(*line, format!("expected token id {}, got {id}", pos + 1)));
        }
        if flag(cols[5], "pred", *line)? {
            predicates.push(id);
        }
        let mut token = Token::new(id, cols[1]);
        token.lemma = opt(cols[2]);
        token.pos = opt(cols[3]);
        token.frame = opt(cols[6]);
        tokens.push(token);
    }
    let mut arcs = Vec::new();
    for (line, cols) in &rows {
        let expected = 7 + predicates.len();
        if cols.len() != expected {
            return Err(Error::format(
                *line,
                format!(
                    "expected {expected} columns for {} predicates, got {}",
                    predicates.len(),
                    cols.len()
                ),
            ));
        }
        let dep: usize = cols[0].parse().expect("checked above");
        if flag(cols[4], "top", *line)? {
            arcs.push(Arc::new(0, dep, ROOT_LABEL));
        }
        for (k, field) in cols[7..].iter().enumerate() {
            if *field != EMPTY {
                let head = predicates[k];
                if head == dep {
                    return Err(Error::format(*line, format!("token {dep} is its own argument")));
                }
                arcs.push(Arc::new(head, dep, *field));
            }
        }
    }
    let mut graph = DepGraph::new(tokens, arcs).map_err(|e| Error::format(lines[0].0, e.to_string()))?;
    if !comments.is_empty() {
        graph.comment = Some(comments.join("\n"));
    }
    Ok(graph)
}

/// Writes graphs in SDP columns. Predicates are the tokens with at least one
/// outgoing arc; every root arc becomes a `top = +` marker.
pub fn write_sdp<W: Write>(mut w: W, graphs: &[DepGraph]) -> Result<()> {
    for g in graphs {
        if let Some(c) = &g.comment {
            for line in c.split('\n') {
                writeln!(w, "#{line}")?;
            }
        }
        let out = g.out_degrees();
        let predicates: Vec<usize> = (1..=g.len()).filter(|&i| out[i] > 0).collect();
        for t in &g.tokens {
            let top = g.incoming(t.index).any(Arc::is_root);
            write!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.index,
                t.form,
                t.lemma.as_deref().unwrap_or(EMPTY),
                t.pos.as_deref().unwrap_or(EMPTY),
                if top { "+" } else { "-" },
                if out[t.index] > 0 { "+" } else { "-" },
                t.frame.as_deref().unwrap_or(EMPTY),
            )?;
            for &p in &predicates {
                let label = g
                    .incoming(t.index)
                    .find(|a| a.head == p)
                    .map_or(EMPTY, |a| a.label.as_str());
                write!(w, "\t{label}")?;
            }
            writeln!(w)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
