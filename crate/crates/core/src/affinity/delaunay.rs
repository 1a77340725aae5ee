//! Bowyer–Watson Delaunay triangulation.

use crate::affinity::geometry::{Graph, PointSet};
use crate::error::{Error, Result};

/// Delaunay graph of a point set; its triangles are kept as hyperedges.
pub fn delaunay(points: &PointSet) -> Result<Graph> {
    let triangles = delaunay_triangles(points)?;
    let mut edges: Vec<(usize, usize)> = triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(Graph::new(points.clone(), edges)?.with_triangles(triangles))
}

/// Counter-clockwise Delaunay triangles.
///
/// Cocircular or nearly collinear configurations that leave the first
/// pass incomplete are retried on a copy perturbed by a deterministic
/// jitter of relative size 1e-9, keyed by point index.
pub fn delaunay_triangles(points: &PointSet) -> Result<Vec<[usize; 3]>> {
    let pts = points.points();
    let n = pts.len();
    if n < 3 {
        return Err(Error::Invalid(format!("triangulation needs >= 3 points, got {n}")));
    }
    let span = bbox_span(pts);
    if all_collinear(pts, span) {
        return Err(Error::Collinear);
    }
    let expected = 2 * n - 2 - boundary_count(pts, span);

    let first = bowyer_watson(pts, 1e4);
    if first.len() == expected && covers_all(&first, n) {
        return Ok(first);
    }
    let jittered: Vec<[f64; 2]> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (dx, dy) = index_jitter(i);
            [p[0] + dx * 1e-9 * span, p[1] + dy * 1e-9 * span]
        })
        .collect();
    let second = bowyer_watson(&jittered, 1e6);
    if !covers_all(&second, n) {
        return Err(Error::Collinear);
    }
    if second.len() != 2 * n - 2 - boundary_count(&jittered, span) {
        log::warn!("delaunay: triangulation of {n} points is incomplete after jitter retry");
    }
    Ok(second)
}

fn bowyer_watson(pts: &[[f64; 2]], super_scale: f64) -> Vec<[usize; 3]> {
    let n = pts.len();
    let (min, max) = bbox(pts);
    let cx = 0.5 * (min[0] + max[0]);
    let cy = 0.5 * (min[1] + max[1]);
    let r = super_scale * (max[0] - min[0]).max(max[1] - min[1]).max(f64::MIN_POSITIVE);

    let mut all = pts.to_vec();
    all.push([cx - 2.0 * r, cy - r]);
    all.push([cx + 2.0 * r, cy - r]);
    all.push([cx, cy + 2.0 * r]);
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];

    for p in 0..n {
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) =
            tris.into_iter().partition(|t| in_circumcircle(&all, *t, all[p]));
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for t in &bad {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let shared = bad.iter().any(|o| o != t && has_edge(o, a, b));
                if !shared {
                    boundary.push((a, b));
                }
            }
        }
        tris = keep;
        tris.extend(boundary.into_iter().map(|(a, b)| [a, b, p]));
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris
}

fn has_edge(t: &[usize; 3], a: usize, b: usize) -> bool {
    t.contains(&a) && t.contains(&b)
}

/// Strictly inside the circumcircle of the counter-clockwise triangle `t`.
fn in_circumcircle(all: &[[f64; 2]], t: [usize; 3], d: [f64; 2]) -> bool {
    let [a, b, c] = t.map(|i| all[i]);
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let det = alift * (bdx * cdy - bdy * cdx) - blift * (adx * cdy - ady * cdx) + clift * (adx * bdy - ady * bdx);
    det > 0.0
}

pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn bbox(pts: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    pts.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
    )
}

fn bbox_span(pts: &[[f64; 2]]) -> f64 {
    let (lo, hi) = bbox(pts);
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

fn all_collinear(pts: &[[f64; 2]], span: f64) -> bool {
    if span == 0.0 {
        return true;
    }
    let tol = 1e-12 * span * span;
    let a = pts[0];
    let Some(&b) = pts.iter().find(|p| (p[0] - a[0]).hypot(p[1] - a[1]) > 1e-12 * span) else {
        return true;
    };
    pts.iter().all(|&c| orient(a, b, c).abs() <= tol)
}

/// Points on the convex hull boundary, including ones in the interior of
/// a hull edge.
fn boundary_count(pts: &[[f64; 2]], span: f64) -> usize {
    let hull = convex_hull(pts);
    let tol = 1e-12 * span * span;
    (0..pts.len())
        .filter(|&i| {
            (0..hull.len()).any(|h| {
                let a = pts[hull[h]];
                let b = pts[hull[(h + 1) % hull.len()]];
                let p = pts[i];
                orient(a, b, p).abs() <= tol
                    && p[0] >= a[0].min(b[0]) - tol
                    && p[0] <= a[0].max(b[0]) + tol
                    && p[1] >= a[1].min(b[1]) - tol
                    && p[1] <= a[1].max(b[1]) + tol
            })
        })
        .count()
}

/// Strict convex hull (monotone chain), counter-clockwise.
fn convex_hull(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| pts[i].partial_cmp(&pts[j]).expect("finite points"));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && orient(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

fn covers_all(tris: &[[usize; 3]], n: usize) -> bool {
    let mut seen = vec![false; n];
    tris.iter().flatten().for_each(|&v| seen[v] = true);
    seen.into_iter().all(|s| s)
}

/// Deterministic offsets in [-1, 1] derived from the point index.
fn index_jitter(i: usize) -> (f64, f64) {
    let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = || {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (next(), next())
}
