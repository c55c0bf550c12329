//! Line-oriented edge-list format, lossless for arbitrary graphs.
//!
//! ```text
//! #comment<TAB>free text        (optional, repeatable)
//! #<n><TAB>form_1<TAB>…<TAB>form_n
//! #lemma<TAB>…                  (optional, n fields, empty = missing)
//! #pos<TAB>…                    (optional)
//! #frame<TAB>…                  (optional)
//! head<TAB>dep<TAB>label        (one line per arc)
//! <blank line>
//! ```

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Arc, DepGraph, Token};

pub fn read_native<R: BufRead>(reader: R) -> Result<Vec<DepGraph>> {
    let mut graphs = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            if !block.is_empty() {
                graphs.push(parse_block(&block)?);
                block.clear();
            }
        } else {
            block.push((i + 1, line));
        }
    }
    if !block.is_empty() {
        graphs.push(parse_block(&block)?);
    }
    Ok(graphs)
}

fn fields_for(line: usize, what: &str, fields: &[&str], n: usize) -> Result<Vec<Option<String>>> {
    if fields.len() != n {
        return Err(Error::format(
            line,
            format!("{what} line has {} fields for {n} tokens", fields.len()),
        ));
    }
    Ok(fields
        .iter()
        .map(|f| if f.is_empty() { None } else { Some(f.to_string()) })
        .collect())
}

fn parse_block(lines: &[(usize, String)]) -> Result<DepGraph> {
    let mut comments = Vec::new();
    let mut tokens: Option<Vec<Token>> = None;
    let mut arcs = Vec::new();
    for (line_no, line) in lines {
        let line_no = *line_no;
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest.split_once('\t').unwrap_or((rest, ""));
            let fields: Vec<&str> = if value.is_empty() && !rest.contains('\t') {
                Vec::new()
            } else {
                value.split('\t').collect()
            };
            match key {
                "comment" => comments.push(value.to_string()),
                "lemma" | "pos" | "frame" => {
                    let toks = tokens
                        .as_mut()
                        .ok_or_else(|| Error::format(line_no, format!("#{key} before the token line")))?;
                    let values = fields_for(line_no, key, &fields, toks.len())?;
                    for (t, v) in toks.iter_mut().zip(values) {
                        match key {
                            "lemma" => t.lemma = v,
                            "pos" => t.pos = v,
                            _ => t.frame = v,
                        }
                    }
                }
                count => {
                    let n: usize = count
                        .parse()
                        .map_err(|_| Error::format(line_no, format!("unknown header #{count}")))?;
                    if tokens.is_some() {
                        return Err(Error::format(line_no, "second token line in one sentence"));
                    }
                    if fields.len() != n {
                        return Err(Error::format(
                            line_no,
                            format!("declared {n} tokens, found {}", fields.len()),
                        ));
                    }
                    tokens = Some(fields.iter().enumerate().map(|(i, f)| Token::new(i + 1, *f)).collect());
                }
            }
        } else {
            let n = tokens
                .as_ref()
                .ok_or_else(|| Error::format(line_no, "arc before the token line"))?
                .len();
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::format(
                    line_no,
                    format!("arc line needs 3 fields, got {}", cols.len()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::format(line_no, format!("bad node id {s:?}")))
            };
            let (head, dep) = (parse(cols[0])?, parse(cols[1])?);
            if head > n || dep == 0 || dep > n {
                return Err(Error::format(line_no, format!("arc {head}->{dep} outside 0..={n}")));
            }
            if head == dep {
                return Err(Error::format(line_no, format!("self-loop on {dep}")));
            }
            arcs.push(Arc::new(head, dep, cols[2]));
        }
    }
    let first = lines[0].0;
    let tokens = tokens.ok_or_else(|| Error::format(first, "sentence without a token line"))?;
    let mut g = DepGraph::new(tokens, arcs).map_err(|e| Error::format(first, e.to_string()))?;
    if !comments.is_empty() {
        g.comment = Some(comments.join("\n"));
    }
    Ok(g)
}

fn optional_line<W: Write>(w: &mut W, key: &str, tokens: &[Token], get: impl Fn(&Token) -> Option<&str>) -> Result<()> {
    if tokens.iter().any(|t| get(t).is_some()) {
        let fields: Vec<&str> = tokens.iter().map(|t| get(t).unwrap_or("")).collect();
        writeln!(w, "#{key}\t{}", fields.join("\t"))?;
    }
    Ok(())
}

pub fn write_native<W: Write>(mut w: W, graphs: &[DepGraph]) -> Result<()> {
    for g in graphs {
        if let Some(c) = &g.comment {
            for line in c.split('\n') {
                writeln!(w, "#comment\t{line}")?;
            }
        }
        let forms: Vec<&str> = g.tokens.iter().map(|t| t.form.as_str()).collect();
        if forms.is_empty() {
            writeln!(w, "#0")?;
        } else {
            writeln!(w, "#{}\t{}", forms.len(), forms.join("\t"))?;
        }
        optional_line(&mut w, "lemma", &g.tokens, |t| t.lemma.as_deref())?;
        optional_line(&mut w, "pos", &g.tokens, |t| t.pos.as_deref())?;
        optional_line(&mut w, "frame", &g.tokens, |t| t.frame.as_deref())?;
        for a in g.arcs() {
            writeln!(w, "{}\t{}\t{}", a.head, a.dep, a.label)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
