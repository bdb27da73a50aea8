use std::fmt::Write as _;

use super::cnf::{ClauseSet, Lit};
use super::registry::VarRegistry;
use crate::error::{Error, Result};

/// DIMACS text with a `c <index> <label>` comment per variable.
pub fn write_dimacs(cs: &ClauseSet, reg: Option<&VarRegistry>) -> String {
    let mut s = String::new();
    if let Some(reg) = reg {
        for (v, l) in reg.labels() {
            let _ = writeln!(s, "c {} {}", v.0 + 1, l);
        }
    }
    let _ = writeln!(s, "p cnf {} {}", cs.num_vars, cs.clauses.len());
    for c in &cs.clauses {
        for l in c {
            let _ = write!(s, "{} ", l.to_dimacs());
        }
        s.push_str("0\n");
    }
    s
}

/// Parses DIMACS, also returning the `c <index> <label>` comments.
pub fn parse_dimacs(text: &str) -> Result<(ClauseSet, Vec<(usize, String)>)> {
    let mut header: Option<(usize, usize)> = None;
    let mut comments = Vec::new();
    let mut clauses = Vec::new();
    let mut cur: Vec<Lit> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let mut it = rest.trim().splitn(2, ' ');
            if let (Some(i), Some(lbl)) = (it.next(), it.next()) {
                if let Ok(i) = i.parse::<usize>() {
                    comments.push((i, lbl.trim().to_string()));
                }
            }
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(Error::Parse(format!("line {}: bad header", lineno + 1)));
            }
            let nv = parts[2].parse().map_err(|_| Error::Parse(format!("line {}: bad var count", lineno + 1)))?;
            let nc = parts[3].parse().map_err(|_| Error::Parse(format!("line {}: bad clause count", lineno + 1)))?;
            header = Some((nv, nc));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| Error::Parse(format!("line {}: clause before header", lineno + 1)))?;
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| Error::Parse(format!("line {}: bad literal {tok}", lineno + 1)))?;
            if x == 0 {
                if cur.is_empty() {
                    return Err(Error::Parse(format!("line {}: empty clause", lineno + 1)));
                }
                clauses.push(std::mem::take(&mut cur));
            } else {
                if x.unsigned_abs() as usize > nv {
                    return Err(Error::Parse(format!("line {}: literal {x} exceeds {nv} vars", lineno + 1)));
                }
                cur.push(Lit::from_dimacs(x));
            }
        }
    }
    let (nv, nc) = header.ok_or_else(|| Error::Parse("missing header".into()))?;
    if !cur.is_empty() {
        clauses.push(cur);
    }
    if clauses.len() != nc {
        return Err(Error::Parse(format!("header says {nc} clauses, found {}", clauses.len())));
    }
    let mut cs = ClauseSet::new(nv);
    for c in clauses {
        cs.add(c);
    }
    cs.num_vars = nv;
    Ok((cs, comments))
}
