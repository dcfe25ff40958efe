//! Plain-text file formats.
//!
//! * similarity: header `n m`, then `m` lines `i j value` with `i <= j`
//! * permutation: one 0-based position per line, line `i` is element `i`
//! * counts: one positive integer per line
//! * assignment: line `i` holds the sorted positions of bin `i`
//!
//! Blank lines are ignored. Line numbers in [`SeriationError::Parse`] are
//! 1-based.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::duplication::{AssignmentMatrix, DuplicationCounts};
use crate::error::{Result, SeriationError};
use crate::matrix::SimilarityMatrix;
use crate::permutation::Permutation;
use crate::scalar::Scalar;

fn parse_err(line: usize, message: impl Into<String>) -> SeriationError {
    SeriationError::Parse { line, message: message.into() }
}

fn field<F: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<F> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

/// Nonblank lines with their 1-based numbers.
fn lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(k, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((k + 1, l))),
        Err(e) => Some(Err(e.into())),
    })
}

pub fn read_similarity<T: Scalar + FromStr, R: BufRead>(r: R) -> Result<SimilarityMatrix<T>> {
    let mut it = lines(r);
    let (hl, header) = it.next().transpose()?.ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tok = header.split_whitespace();
    let n: usize = field(tok.next(), hl, "dimension")?;
    let m: usize = field(tok.next(), hl, "entry count")?;
    if tok.next().is_some() {
        return Err(parse_err(hl, "header must be `n nnz`"));
    }
    let mut triplets = Vec::with_capacity(m);
    let mut last = hl;
    for item in it {
        let (ln, l) = item?;
        last = ln;
        let mut tok = l.split_whitespace();
        let i: usize = field(tok.next(), ln, "row index")?;
        let j: usize = field(tok.next(), ln, "column index")?;
        let v: T = field(tok.next(), ln, "value")?;
        if tok.next().is_some() {
            return Err(parse_err(ln, "expected `i j value`"));
        }
        if i > j {
            return Err(parse_err(ln, format!("row index {i} exceeds column index {j}")));
        }
        if j >= n {
            return Err(parse_err(ln, format!("index {j} out of range for n = {n}")));
        }
        if !v.is_finite() || v < T::zero() {
            return Err(parse_err(ln, format!("value {v} must be finite and nonnegative")));
        }
        triplets.push((i, j, v));
    }
    if triplets.len() != m {
        return Err(parse_err(last, format!("header announces {m} entries, found {}", triplets.len())));
    }
    SimilarityMatrix::from_triplets(n, triplets)
}

pub fn write_similarity<T: Scalar, W: Write>(mut w: W, a: &SimilarityMatrix<T>) -> Result<()> {
    writeln!(w, "{} {}", a.n(), a.entries().len())?;
    for &(i, j, v) in a.entries() {
        writeln!(w, "{i} {j} {v}")?;
    }
    Ok(())
}

fn read_integers<R: BufRead>(r: R, what: &str) -> Result<Vec<(usize, usize)>> {
    lines(r)
        .map(|item| {
            let (ln, l) = item?;
            let mut tok = l.split_whitespace();
            let v = field(tok.next(), ln, what)?;
            if tok.next().is_some() {
                return Err(parse_err(ln, format!("expected a single {what}")));
            }
            Ok((ln, v))
        })
        .collect()
}

/// Checks that the numbered values are a permutation of `0..len`.
fn check_positions(v: &[(usize, usize)], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &(ln, p) in v {
        if p >= len {
            return Err(parse_err(ln, format!("position {p} out of range for {len} elements")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(parse_err(ln, format!("position {p} repeated")));
        }
    }
    Ok(())
}

pub fn read_permutation<R: BufRead>(r: R) -> Result<Permutation> {
    let v = read_integers(r, "position")?;
    check_positions(&v, v.len())?;
    Permutation::new(v.into_iter().map(|(_, p)| p).collect())
}

pub fn write_permutation<W: Write>(mut w: W, p: &Permutation) -> Result<()> {
    for &q in p.positions() {
        writeln!(w, "{q}")?;
    }
    Ok(())
}

pub fn read_counts<R: BufRead>(r: R) -> Result<DuplicationCounts> {
    let v = read_integers(r, "count")?;
    if let Some(&(ln, _)) = v.iter().find(|(_, c)| *c == 0) {
        return Err(parse_err(ln, "counts must be positive"));
    }
    DuplicationCounts::new(v.into_iter().map(|(_, c)| c).collect())
}

pub fn write_counts<W: Write>(mut w: W, c: &DuplicationCounts) -> Result<()> {
    for &k in c.counts() {
        writeln!(w, "{k}")?;
    }
    Ok(())
}

pub fn read_assignment<R: BufRead>(r: R) -> Result<AssignmentMatrix> {
    let mut out = Vec::new();
    let mut numbered = Vec::new();
    for item in lines(r) {
        let (ln, l) = item?;
        let list = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad position `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        numbered.extend(list.iter().map(|&p| (ln, p)));
        out.push(list);
    }
    check_positions(&numbered, numbered.len())?;
    AssignmentMatrix::new(out)
}

pub fn write_assignment<W: Write>(mut w: W, z: &AssignmentMatrix) -> Result<()> {
    for list in z.lists() {
        let row: Vec<String> = list.iter().map(|k| k.to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_line(r: Result<impl std::fmt::Debug>) -> usize {
        match r {
            Err(SeriationError::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn similarity_round_trip() {
        let a =
            SimilarityMatrix::from_triplets(4, vec![(0, 0, 2.5), (0, 1, 1.0), (1, 3, 0.125), (2, 3, 1e-7)]).unwrap();
        let mut buf = Vec::new();
        write_similarity(&mut buf, &a).unwrap();
        let back: SimilarityMatrix<f64> = read_similarity(&buf[..]).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn similarity_errors_name_the_line() {
        let bad = "3 2\n0 1 1.0\n3 x 1.0\n";
        assert_eq!(parse_line(read_similarity::<f64, _>(bad.as_bytes())), 3);
        assert_eq!(parse_line(read_similarity::<f64, _>("3 1\n\n2 1 1.0\n".as_bytes())), 3);
        assert_eq!(parse_line(read_similarity::<f64, _>("3 1\n0 5 1.0\n".as_bytes())), 2);
        assert_eq!(parse_line(read_similarity::<f64, _>("3 2\n0 1 1.0\n".as_bytes())), 2);
        assert_eq!(parse_line(read_similarity::<f64, _>("3\n".as_bytes())), 1);
        assert_eq!(parse_line(read_similarity::<f64, _>("2 1\n0 1 -1\n".as_bytes())), 2);
    }

    #[test]
    fn permutation_counts_assignment_round_trip() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let mut buf = Vec::new();
        write_permutation(&mut buf, &p).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2\n0\n3\n1\n");
        assert_eq!(read_permutation(&buf[..]).unwrap(), p);

        let c = DuplicationCounts::new(vec![2, 1, 1]).unwrap();
        let mut buf = Vec::new();
        write_counts(&mut buf, &c).unwrap();
        assert_eq!(read_counts(&buf[..]).unwrap(), c);
        assert_eq!(parse_line(read_counts("1\n0\n".as_bytes())), 2);

        let z = AssignmentMatrix::new(vec![vec![0, 3], vec![1], vec![2]]).unwrap();
        let mut buf = Vec::new();
        write_assignment(&mut buf, &z).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 3\n1\n2\n");
        assert_eq!(read_assignment(&buf[..]).unwrap(), z);
        assert_eq!(parse_line(read_assignment("0 1\n2 y\n".as_bytes())), 2);
        assert_eq!(parse_line(read_assignment("0 1\n\n1 2\n".as_bytes())), 3);
        assert_eq!(parse_line(read_permutation("0\n0\n".as_bytes())), 2);
        assert_eq!(parse_line(read_permutation("1\n2\n".as_bytes())), 2);
    }
}
