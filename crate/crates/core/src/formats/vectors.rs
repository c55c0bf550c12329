//! Whitespace-separated real vectors: per-token contextual vectors and
//! pretrained embedding tables.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::DepGraph;

fn parse_reals(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| Error::format(line_no, format!("bad real {x:?}")))
        })
        .collect()
}

fn check_width(width: &mut Option<usize>, got: usize, line_no: usize) -> Result<()> {
    match *width {
        Some(w) if w != got => Err(Error::format(line_no, format!("vector width {got}, expected {w}"))),
        _ => {
            *width = Some(got);
            Ok(())
        }
    }
}

/// Reads contextual vectors: one line per token, blank line between
/// sentences. Returns one block per sentence.
pub fn read_contextual<R: BufRead>(reader: R) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    let mut width = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let v = parse_reals(&line, i + 1)?;
        check_width(&mut width, v.len(), i + 1)?;
        current.push(v);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Ok(blocks)
}

/// Attaches contextual vectors by position. A block with one vector more
/// than the sentence has tokens supplies the root's (sequence-start) vector
/// first.
pub fn attach_contextual(graphs: &mut [DepGraph], blocks: Vec<Vec<Vec<f64>>>) -> Result<()> {
    if graphs.len() != blocks.len() {
        return Err(Error::Data(format!(
            "{} sentences but {} contextual blocks",
            graphs.len(),
            blocks.len()
        )));
    }
    for (s, (g, mut block)) in graphs.iter_mut().zip(blocks).enumerate() {
        if block.len() == g.len() + 1 {
            g.root_contextual = Some(block.remove(0));
        } else if block.len() != g.len() {
            return Err(Error::Data(format!(
                "sentence {}: {} tokens but {} contextual vectors",
                s + 1,
                g.len(),
                block.len()
            )));
        }
        for (t, v) in g.tokens.iter_mut().zip(block) {
            t.contextual = Some(v);
        }
    }
    Ok(())
}

/// Reads a pretrained embedding table: one entry per line, the token
/// followed by its values.
pub fn read_embeddings<R: BufRead>(reader: R) -> Result<HashMap<String, Vec<f64>>> {
    let mut table = HashMap::new();
    let mut width = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (word, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::format(i + 1, "entry without values"))?;
        let v = parse_reals(rest, i + 1)?;
        check_width(&mut width, v.len(), i + 1)?;
        table.insert(word.to_string(), v);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attaches_with_optional_root_vector() {
        let mut graphs = vec![
            DepGraph::from_forms(&["a", "b"], &[]).unwrap(),
            DepGraph::from_forms(&["c"], &[]).unwrap(),
        ];
        let text = "0 0\n1 1\n2 2\n\n3 3\n";
        let blocks = read_contextual(text.as_bytes()).unwrap();
        attach_contextual(&mut graphs, blocks).unwrap();
        assert_eq!(graphs[0].root_contextual, Some(vec![0.0, 0.0]));
        assert_eq!(graphs[0].tokens[1].contextual, Some(vec![2.0, 2.0]));
        assert_eq!(graphs[1].root_contextual, None);
        assert_eq!(graphs[1].tokens[0].contextual, Some(vec![3.0, 3.0]));
    }

    #[test]
    fn width_must_be_constant() {
        assert!(read_contextual("1 2\n3\n".as_bytes()).is_err());
        assert!(read_embeddings("a 1 2\nb 3\n".as_bytes()).is_err());
    }

    #[test]
    fn embedding_table() {
        let t = read_embeddings("the 0.5 -1\ncat 2 3\n".as_bytes()).unwrap();
        assert_eq!(t["cat"], vec![2.0, 3.0]);
    }
}
