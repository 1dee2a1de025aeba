//! Plain-text polynomial and QUBO formats.
//!
//! ```text
//! pbo <num_vars> <num_terms>
//! 0 3 7 : -1/2
//! : 4
//! ```
//! The constant is written last as a term with no variables.
//!
//! ```text
//! qubo <num_vars> <offset>
//! i j coefficient        (i ≤ j, i = j for linear terms)
//! ```

use std::io::Write;

use super::poly::{Coeff, PseudoBooleanPoly};
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn parse_coeff(s: &str, line: usize) -> Result<Coeff> {
    s.parse::<Coeff>().map_err(|e| parse_err(line, format!("bad coefficient {s:?}: {e}")))
}

fn parse_var(s: &str, num_vars: usize, line: usize) -> Result<u32> {
    let v: u32 = s.parse().map_err(|_| parse_err(line, format!("bad variable index {s:?}")))?;
    if v as usize >= num_vars {
        return Err(parse_err(line, format!("variable {v} out of range 0..{num_vars}")));
    }
    Ok(v)
}

/// Data lines with their 1-based line numbers; blank lines and `#` comments skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, magic: &str) -> Result<(usize, Vec<&'a str>)> {
    let (n, line) = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(parse_err(n, format!("expected `{magic}` header")));
    }
    Ok((n, parts.collect()))
}

pub fn write_poly(poly: &PseudoBooleanPoly, out: &mut impl Write) -> Result<()> {
    writeln!(out, "pbo {} {}", poly.num_vars(), poly.num_terms())?;
    for (vars, c) in poly.terms() {
        let idx: Vec<String> = vars.iter().map(u32::to_string).collect();
        writeln!(out, "{} : {c}", idx.join(" "))?;
    }
    writeln!(out, ": {}", poly.constant())?;
    Ok(())
}

pub fn read_poly(text: &str) -> Result<PseudoBooleanPoly> {
    let mut lines = data_lines(text);
    let (hn, fields) = header(&mut lines, "pbo")?;
    let [num_vars, num_terms] = fields.as_slice() else {
        return Err(parse_err(hn, "expected `pbo <num_vars> <num_terms>`"));
    };
    let num_vars: usize = num_vars.parse().map_err(|_| parse_err(hn, "bad variable count"))?;
    let num_terms: usize = num_terms.parse().map_err(|_| parse_err(hn, "bad term count"))?;
    let mut poly = PseudoBooleanPoly::new(num_vars);
    let mut seen = 0;
    for (n, line) in lines {
        let (vars, coeff) = line.split_once(':').ok_or_else(|| parse_err(n, "missing `:`"))?;
        let coeff = parse_coeff(coeff.trim(), n)?;
        let vars = vars.split_whitespace().map(|v| parse_var(v, num_vars, n)).collect::<Result<Vec<_>>>()?;
        if vars.is_empty() {
            poly.add_constant(coeff);
        } else {
            let mut sorted = vars.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != vars.len() {
                return Err(parse_err(n, "repeated variable in term"));
            }
            poly.add_term(&vars, coeff);
            seen += 1;
        }
    }
    if seen != num_terms {
        return Err(parse_err(hn, format!("header promises {num_terms} terms, found {seen}")));
    }
    Ok(poly)
}

/// Write a polynomial of degree ≤ 2 as a QUBO.
pub fn write_qubo(poly: &PseudoBooleanPoly, out: &mut impl Write) -> Result<()> {
    if poly.degree() > 2 {
        return Err(crate::error::contract(format!(
            "QUBO export needs degree ≤ 2, polynomial has degree {}",
            poly.degree()
        )));
    }
    writeln!(out, "qubo {} {}", poly.num_vars(), poly.constant())?;
    for (vars, c) in poly.terms() {
        let (i, j) = match *vars {
            [i] => (i, i),
            [i, j] => (i, j),
            _ => unreachable!(),
        };
        writeln!(out, "{i} {j} {c}")?;
    }
    Ok(())
}

pub fn read_qubo(text: &str) -> Result<PseudoBooleanPoly> {
    let mut lines = data_lines(text);
    let (hn, fields) = header(&mut lines, "qubo")?;
    let [num_vars, offset] = fields.as_slice() else {
        return Err(parse_err(hn, "expected `qubo <num_vars> <offset>`"));
    };
    let num_vars: usize = num_vars.parse().map_err(|_| parse_err(hn, "bad variable count"))?;
    let mut poly = PseudoBooleanPoly::new(num_vars);
    poly.add_constant(parse_coeff(offset, hn)?);
    for (n, line) in lines {
        let [i, j, c] = line.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(parse_err(n, "expected `i j coefficient`"));
        };
        let (i, j) = (parse_var(i, num_vars, n)?, parse_var(j, num_vars, n)?);
        if i > j {
            return Err(parse_err(n, "entries must have i ≤ j"));
        }
        poly.add_term(&[i, j], parse_coeff(c, n)?);
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn poly_round_trip() {
        let mut p = PseudoBooleanPoly::new(5);
        p.add_term(&[0, 3, 4], Coeff::new(-1, 2));
        p.add_term(&[2], Coeff::from_integer(7));
        p.add_constant(Coeff::from_integer(-3));
        let text = render(|b| write_poly(&p, b));
        assert!(text.starts_with("pbo 5 2\n"));
        assert_eq!(read_poly(&text).unwrap(), p);
    }

    #[test]
    fn two_variable_qubo_has_three_lines() {
        let mut p = PseudoBooleanPoly::new(2);
        p.add_term(&[0], Coeff::from_integer(1));
        p.add_term(&[1], Coeff::from_integer(-2));
        p.add_term(&[0, 1], Coeff::from_integer(3));
        let text = render(|b| write_qubo(&p, b));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next(), Some("qubo 2 0"));
        assert_eq!(read_qubo(&text).unwrap(), p);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(read_poly("pbo 2 1\n0 5 : 1\n"), Err(Error::Parse(_))));
        assert!(matches!(read_poly("qubo 2 0\n"), Err(Error::Parse(_))));
        assert!(matches!(read_qubo("qubo 2 0\n1 0 1\n"), Err(Error::Parse(_))));
        assert!(matches!(read_poly("pbo 2 2\n0 : 1\n"), Err(Error::Parse(_))));
    }
}
