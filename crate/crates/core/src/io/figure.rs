//! Coverage figures: SVG with contour-filled region layers and PGM rasters of
//! region codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sigma_arcs_2d, Arc, CoverageMask, RegionTag, ScanGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureFormat {
    Svg,
    Pgm,
}

/// Canvas pixels per unit `k0`.
const SCALE: f64 = 100.0;

struct Canvas {
    k0: f64,
}

impl Canvas {
    fn x(&self, y1: f64) -> f64 {
        (y1 / self.k0 + 2.0) * SCALE
    }

    fn y(&self, y2: f64) -> f64 {
        (2.0 - y2 / self.k0) * SCALE
    }

    fn point(&self, y1: f64, y2: f64) -> String {
        format!("{:.6},{:.6}", self.x(y1), self.y(y2))
    }
}

/// Closed contour loops of the indicator `inside(i0, i1)` on the `n x n`
/// cell-centre lattice, as doubled lattice coordinates of a zero-padded grid.
fn contour_loops(n: usize, inside: impl Fn(usize, usize) -> bool) -> Vec<Vec<(i64, i64)>> {
    let m = n + 2;
    let value = |a: usize, b: usize| a >= 1 && b >= 1 && a <= n && b <= n && inside(a - 1, b - 1);
    let mut segments: Vec<[(i64, i64); 2]> = Vec::new();
    for a in 0..m - 1 {
        for b in 0..m - 1 {
            let case = value(a, b) as u8
                | (value(a + 1, b) as u8) << 1
                | (value(a + 1, b + 1) as u8) << 2
                | (value(a, b + 1) as u8) << 3;
            let (a2, b2) = (2 * a as i64, 2 * b as i64);
            let bottom = (a2 + 1, b2);
            let right = (a2 + 2, b2 + 1);
            let top = (a2 + 1, b2 + 2);
            let left = (a2, b2 + 1);
            let pairs: &[[(i64, i64); 2]] = match case {
                0 | 15 => &[],
                1 | 14 => &[[bottom, left]],
                2 | 13 => &[[bottom, right]],
                3 | 12 => &[[left, right]],
                4 | 11 => &[[right, top]],
                6 | 9 => &[[bottom, top]],
                7 | 8 => &[[left, top]],
                5 => &[[bottom, left], [right, top]],
                10 => &[[bottom, right], [left, top]],
                _ => unreachable!(),
            };
            segments.extend_from_slice(pairs);
        }
    }
    let mut incident: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for p in seg {
            incident.entry(*p).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first = segments[start][0];
        let mut path = vec![first];
        let mut current = segments[start][1];
        while current != first {
            path.push(current);
            let next = incident[&current].iter().copied().find(|&s| !used[s]);
            let Some(s) = next else { break };
            used[s] = true;
            let seg = segments[s];
            current = if seg[0] == current { seg[1] } else { seg[0] };
        }
        loops.push(path);
    }
    loops
}

fn layer_path(mask: &CoverageMask, canvas: &Canvas, tag: RegionTag) -> String {
    let n = mask.n;
    let h = mask.cell_size();
    let coord = |p: i64| -2.0 * mask.k0 + (p as f64 / 2.0 - 0.5) * h;
    let mut d = String::new();
    for lp in contour_loops(n, |i0, i1| mask.tag_2d(i0, i1) == tag) {
        for (j, &(p, q)) in lp.iter().enumerate() {
            let _ = write!(d, "{}{}", if j == 0 { "M" } else { "L" }, canvas.point(coord(p), coord(q)));
        }
        d.push('Z');
    }
    d
}

fn arc_path(arc: &Arc, radius: f64, canvas: &Canvas) -> String {
    // Two halves keep each SVG arc below pi.
    let at = |t: f64| canvas.point(radius * t.cos(), radius * t.sin());
    let r = radius / canvas.k0 * SCALE;
    let mid = arc.start + 0.5 * arc.length;
    format!(
        "M{}A{r:.6},{r:.6} 0 0 0 {}A{r:.6},{r:.6} 0 0 0 {}",
        at(arc.start),
        at(mid),
        at(arc.end())
    )
}

/// Layers `Y_1` (blue), `Y_tilde` (green) and the gray remainder, dashed arcs
/// `-Sigma_1` (orange) and `-Sigma_tilde` (green) and circles of radius `k0`
/// and `2 k0`.
pub fn coverage_svg(mask: &CoverageMask, geometry: &ScanGeometry) -> Result<String> {
    if mask.dim != 2 || geometry.dim() != 2 {
        return Err(Error::UnsupportedDimension(mask.dim.max(geometry.dim())));
    }
    let k0 = mask.k0;
    let canvas = Canvas { k0 };
    let size = 4.0 * SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size:.6}\" height=\"{size:.6}\" viewBox=\"0 0 {size:.6} {size:.6}\">"
    );
    let _ = writeln!(s, "<rect width=\"{size:.6}\" height=\"{size:.6}\" fill=\"white\"/>");
    for (id, tag, colour) in [
        ("y2gray", RegionTag::Y2Gray, "#b0b0b0"),
        ("y2", RegionTag::Y2, "#b0b0b0"),
        ("y1", RegionTag::Y1, "#1f77b4"),
        ("ytilde", RegionTag::YTilde, "#2ca02c"),
    ] {
        let d = layer_path(mask, &canvas, tag);
        let _ = write!(s, "<g id=\"{id}\">");
        if !d.is_empty() {
            let _ = write!(s, "<path fill=\"{colour}\" fill-rule=\"evenodd\" stroke=\"none\" d=\"{d}\"/>");
        }
        let _ = writeln!(s, "</g>");
    }
    let (cx, cy) = (canvas.x(0.0), canvas.y(0.0));
    let _ = writeln!(s, "<g id=\"axes\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\">");
    let _ = writeln!(s, "<line x1=\"0.000000\" y1=\"{cy:.6}\" x2=\"{size:.6}\" y2=\"{cy:.6}\"/>");
    let _ = writeln!(s, "<line x1=\"{cx:.6}\" y1=\"0.000000\" x2=\"{cx:.6}\" y2=\"{size:.6}\"/>");
    for r in [1.0, 2.0] {
        let _ = writeln!(s, "<circle cx=\"{cx:.6}\" cy=\"{cy:.6}\" r=\"{:.6}\"/>", r * SCALE);
    }
    let _ = writeln!(s, "</g>");
    let arcs = sigma_arcs_2d(geometry)?;
    for (id, arc, colour) in [("minus-sigma1", arcs.sigma1, "#ff7f0e"), ("minus-sigma-tilde", arcs.sigma_tilde, "#2ca02c")] {
        if let Some(arc) = arc {
            let _ = writeln!(
                s,
                "<path id=\"{id}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" stroke-dasharray=\"6,4\" d=\"{}\"/>",
                arc_path(&arc.negated(), k0, &canvas)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Binary PGM with `maxval = 4` holding region codes, top row at `y_2 = 2 k0`.
pub fn coverage_pgm(mask: &CoverageMask) -> Result<Vec<u8>> {
    if mask.dim != 2 {
        return Err(Error::UnsupportedDimension(mask.dim));
    }
    let n = mask.n;
    let mut out = format!("P5\n{n} {n}\n4\n").into_bytes();
    for row in 0..n {
        let i1 = n - 1 - row;
        out.extend((0..n).map(|i0| mask.tag_2d(i0, i1).code()));
    }
    Ok(out)
}

pub fn emit_coverage_figure(mask: &CoverageMask, geometry: &ScanGeometry, path: &Path, format: FigureFormat) -> Result<()> {
    let bytes = match format {
        FigureFormat::Svg => coverage_svg(mask, geometry)?.into_bytes(),
        FigureFormat::Pgm => coverage_pgm(mask)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
