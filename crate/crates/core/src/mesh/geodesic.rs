//! Icosahedral geodesic subdivision of the unit sphere into 6-node triangles.

use std::collections::HashMap;

use crate::Point3;

fn icosahedron() -> ([Point3; 12], [[usize; 3]; 20]) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let v = raw.map(|(x, y, z)| Point3::new(x, y, z).normalize());
    // counterclockwise seen from outside
    let f = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v, f)
}

/// Unit-sphere parameter points and 6-node connectivity for geodesic
/// frequency `m` (each icosahedron edge split into `m` segments).
///
/// Corners are numbered first, then mid-edge nodes. Each element lists its
/// corners counterclockwise seen from outside, followed by the mid-edge nodes
/// of edges (0,1), (1,2), (2,0). A mid-edge node is the arc midpoint of its
/// edge on the unit sphere.
pub(crate) fn geodesic_sphere(m: usize) -> (Vec<Point3>, Vec<[usize; 6]>) {
    assert!(m >= 1);
    let (verts, faces) = icosahedron();
    let mut corner_ids: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut units: Vec<Point3> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(20 * m * m);

    for face in &faces {
        let mut grid = vec![vec![0usize; m + 1]; m + 1];
        for i in 0..=m {
            for j in 0..=(m - i) {
                // integer barycentric weights, keyed by icosahedron vertex so
                // shared edges produce identical keys and coordinates
                let mut key: Vec<(usize, usize)> =
                    [(face[0], m - i - j), (face[1], i), (face[2], j)]
                        .into_iter()
                        .filter(|&(_, w)| w > 0)
                        .collect();
                key.sort_unstable();
                let id = *corner_ids.entry(key.clone()).or_insert_with(|| {
                    let p = key
                        .iter()
                        .fold(Point3::zeros(), |acc, &(v, w)| acc + verts[v] * w as f64);
                    units.push(p.normalize());
                    units.len() - 1
                });
                grid[i][j] = id;
            }
        }
        for i in 0..m {
            for j in 0..(m - i) {
                tris.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                if i + j + 2 <= m {
                    tris.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
            }
        }
    }

    let mut mid_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut el = [t[0], t[1], t[2], 0, 0, 0];
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let key = (a.min(b), a.max(b));
            el[3 + e] = *mid_ids.entry(key).or_insert_with(|| {
                units.push((units[key.0] + units[key.1]).normalize());
                units.len() - 1
            });
        }
        elements.push(el);
    }
    (units, elements)
}
