//! SVG 1.1 scatter and heatmap emission.

use std::fmt::Write;

use serde::Serialize;

use seriation::{Permutation, Similarity};

/// How a recovered ordering was matched to a reference one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub flipped: bool,
    /// Recovered positions were `(truth + shift) mod n`.
    pub shift: usize,
    /// Elements placed at exactly their reference position after alignment.
    pub agreement: usize,
    /// Aligned recovered position of each element.
    #[serde(skip)]
    pub positions: Vec<usize>,
}

/// Picks the orientation and circular shift of `recovered` with the most
/// exact positional agreements with `truth`. Candidates are tried in the
/// order unflipped before flipped, smaller shift first, and the first
/// maximum wins.
pub fn align(recovered: &Permutation, truth: &Permutation, allow_flip: bool, allow_shift: bool) -> Alignment {
    let n = recovered.len();
    let mut best: Option<Alignment> = None;
    let flips: &[bool] = if allow_flip { &[false, true] } else { &[false] };
    for &flipped in flips {
        let base = if flipped { recovered.flip() } else { recovered.clone() };
        let shifts = if allow_shift { n.max(1) } else { 1 };
        for shift in 0..shifts {
            let positions: Vec<usize> = (0..n).map(|i| (base.position(i) + n - shift) % n).collect();
            let agreement = (0..n).filter(|&i| positions[i] == truth.position(i)).count();
            if best.as_ref().is_none_or(|b| agreement > b.agreement) {
                best = Some(Alignment { flipped, shift, agreement, positions });
            }
        }
    }
    best.unwrap_or(Alignment { flipped: false, shift: 0, agreement: 0, positions: Vec::new() })
}

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;

fn header(out: &mut String, title: &str) {
    let full = SIZE + 2.0 * MARGIN;
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let _ = writeln!(out, "<title>{title}</title>");
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{full}" height="{full}" fill="white"/>"#);
}

/// Screen coordinates of the cell `(x, y)` in an `n`-grid, y pointing up.
fn point(x: usize, y: usize, n: usize) -> (f64, f64) {
    let step = if n > 1 { SIZE / (n - 1) as f64 } else { 0.0 };
    (MARGIN + x as f64 * step, MARGIN + SIZE - y as f64 * step)
}

/// Reference position on x against aligned recovered position on y.
pub fn scatter_svg(alignment: &Alignment, truth: &Permutation) -> String {
    let n = truth.len();
    let mut out = String::new();
    header(&mut out, "recovered vs reference position");
    let (x0, y0) = point(0, 0, n);
    let (x1, y1) = point(n.saturating_sub(1), n.saturating_sub(1), n);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let r = (SIZE / n.max(1) as f64 / 2.0).clamp(1.0, 4.0);
    for i in 0..n {
        let (cx, cy) = point(truth.position(i), alignment.positions[i], n);
        let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="black"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

/// Grayscale raster of `a` laid out by `perm`, darker for larger values.
pub fn heatmap_svg(a: &Similarity, perm: &Permutation) -> seriation::Result<String> {
    let n = a.n();
    let b = a.permuted(perm)?;
    let max = b.max_value();
    let cell = SIZE / n.max(1) as f64;
    let mut out = String::new();
    header(&mut out, "similarity heatmap");
    for &(i, j, v) in b.entries() {
        let level = if max > 0.0 { (255.0 * (1.0 - v / max)).round() as u8 } else { 255 };
        let mut put = |r: usize, c: usize| {
            let (x, y) = (MARGIN + c as f64 * cell, MARGIN + r as f64 * cell);
            let _ = writeln!(
                out,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({level},{level},{level})"/>"#
            );
        };
        put(i, j);
        if i != j {
            put(j, i);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_finds_every_shift_and_flip() {
        let n = 11;
        let truth = Permutation::new(vec![3, 7, 0, 10, 1, 5, 9, 2, 4, 8, 6]).unwrap();
        for k in 0..n {
            let shifted = Permutation::new((0..n).map(|i| (truth.position(i) + k) % n).collect()).unwrap();
            let a = align(&shifted, &truth, true, true);
            assert_eq!((a.flipped, a.shift, a.agreement), (false, k, n));
            let a = align(&shifted.flip(), &truth, true, true);
            assert!(a.flipped);
            assert_eq!(a.agreement, n);
        }
        let a = align(&truth.flip(), &truth, false, false);
        assert_eq!((a.flipped, a.shift), (false, 0));
    }

    #[test]
    fn heatmap_draws_both_triangles() {
        let a = Similarity::from_triplets(3, vec![(0, 0, 1.0), (0, 2, 0.5)]).unwrap();
        let svg = heatmap_svg(&a, &Permutation::identity(3)).unwrap();
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("rgb(0,0,0)") && svg.contains("rgb(128,128,128)"));
    }
}
