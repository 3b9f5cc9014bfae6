use super::{DefectStructure, InteractionType};

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimum-image length of `d` under translations by integer combinations
/// of the in-plane vectors `a` and `b`.
pub fn minimum_image(d: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    // Fractional components of the in-plane projection of d.
    let (aa, ab, bb) = (dot(a, a), dot(a, b), dot(b, b));
    let (da, db) = (dot(d, a), dot(d, b));
    let det = aa * bb - ab * ab;
    let fa = (bb * da - ab * db) / det;
    let fb = (aa * db - ab * da) / det;
    let (na, nb) = (fa.round(), fb.round());
    let mut best = f64::INFINITY;
    // Rounding lands within one cell of the optimum for any 2D lattice basis
    // that is not extremely skewed; scanning the neighbours covers the rest.
    for i in -1..=1 {
        for j in -1..=1 {
            let (ka, kb) = (na + i as f64, nb + j as f64);
            let v = [
                d[0] - ka * a[0] - kb * b[0],
                d[1] - ka * a[1] - kb * b[1],
                d[2] - ka * a[2] - kb * b[2],
            ];
            best = best.min(norm(v));
        }
    }
    best
}

/// `(i, j, r_ij)` for every unordered pair `i < j`.
pub fn pair_distances_indexed(s: &DefectStructure) -> Vec<(usize, usize, f64)> {
    let (a, b) = (s.a(), s.b());
    let n = s.defects.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (p, q) = (s.defects[i].position, s.defects[j].position);
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            out.push((i, j, minimum_image(d, a, b)));
        }
    }
    out
}

/// Interaction type and minimum-image distance (Å) of every unordered
/// defect pair. Fewer than two defects gives an empty list.
pub fn pair_distances(s: &DefectStructure) -> Vec<(InteractionType, f64)> {
    pair_distances_indexed(s)
        .into_iter()
        .map(|(i, j, r)| {
            let t = InteractionType::new(s.defects[i].defect_type(), s.defects[j].defect_type());
            (t, r)
        })
        .collect()
}
