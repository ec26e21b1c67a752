//! Small triangulated spaces used by tests, the CLI and the benches.
//! All coordinates are rational so exact computations stay small.

use std::sync::Arc;

use crate::linalg::q;
use crate::simplicial::SimplicialComplex;

fn build(verts: Vec<Vec<i64>>, simplices: Vec<Vec<usize>>) -> Arc<SimplicialComplex> {
    let v = verts.into_iter().map(|c| c.into_iter().map(q).collect()).collect();
    Arc::new(SimplicialComplex::new(v, simplices).expect("catalog complexes are valid"))
}

const HEXAGON: [[i64; 2]; 6] = [[2, 0], [1, 2], [-1, 2], [-2, 0], [-1, -2], [1, -2]];

pub fn point() -> Arc<SimplicialComplex> {
    build(vec![vec![0, 0]], vec![])
}

/// `[0, 1]` as a single edge.
pub fn interval() -> Arc<SimplicialComplex> {
    build(vec![vec![0], vec![1]], vec![vec![0, 1]])
}

pub fn triangle_boundary() -> Arc<SimplicialComplex> {
    build(vec![vec![0, 0], vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![1, 2], vec![0, 2]])
}

pub fn full_triangle() -> Arc<SimplicialComplex> {
    build(vec![vec![0, 0], vec![1, 0], vec![0, 1]], vec![vec![0, 1, 2]])
}

/// Boundary of a convex hexagon.
pub fn circle() -> Arc<SimplicialComplex> {
    let verts = HEXAGON.iter().map(|v| v.to_vec()).collect();
    build(verts, (0..6).map(|i| vec![i, (i + 1) % 6]).collect())
}

/// Hexagon fanned from the origin (vertex 6).
pub fn disk() -> Arc<SimplicialComplex> {
    let mut verts: Vec<Vec<i64>> = HEXAGON.iter().map(|v| v.to_vec()).collect();
    verts.push(vec![0, 0]);
    build(verts, (0..6).map(|i| vec![i, (i + 1) % 6, 6]).collect())
}

/// Boundary of the standard 3-simplex in ℝ³.
pub fn tetrahedron_boundary() -> Arc<SimplicialComplex> {
    build(
        vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
    )
}

/// Hexagonal prism side in ℝ³: rings at heights 0 (vertices 0..6) and 1
/// (vertices 6..12), each square split along a diagonal.
pub fn cylinder() -> Arc<SimplicialComplex> {
    let mut verts = Vec::new();
    for h in [0, 1] {
        for v in HEXAGON {
            verts.push(vec![v[0], v[1], h]);
        }
    }
    let mut tris = Vec::new();
    for i in 0..6 {
        let j = (i + 1) % 6;
        tris.push(vec![i, j, 6 + i]);
        tris.push(vec![j, 6 + j, 6 + i]);
    }
    build(verts, tris)
}

/// Planar annulus around the origin: inner triangle `a₀a₁a₂` (vertices
/// 0, 1, 2) left open, outer vertices `b₀b₁b₂` (3, 4, 5), six triangles.
/// No closed triangle contains the origin.
pub fn annulus() -> Arc<SimplicialComplex> {
    let verts = vec![
        vec![0, 2],
        vec![-2, -1],
        vec![2, -1],
        vec![-6, 3],
        vec![0, -6],
        vec![6, 3],
    ];
    let tris = vec![
        vec![0, 1, 3],
        vec![1, 2, 4],
        vec![2, 0, 5],
        vec![3, 4, 1],
        vec![4, 5, 2],
        vec![5, 3, 0],
    ];
    build(verts, tris)
}

/// The named spaces of the nerve-versus-space comparison, with their Betti
/// numbers.
pub fn nerve_catalog() -> Vec<(&'static str, Arc<SimplicialComplex>, Vec<usize>)> {
    vec![
        ("interval", interval(), vec![1, 0]),
        ("circle", circle(), vec![1, 1]),
        ("disk", disk(), vec![1, 0, 0]),
        ("tetrahedron_boundary", tetrahedron_boundary(), vec![1, 0, 1]),
        ("cylinder", cylinder(), vec![1, 1, 0]),
    ]
}

pub fn by_name(name: &str) -> Option<Arc<SimplicialComplex>> {
    Some(match name {
        "point" => point(),
        "interval" => interval(),
        "triangle_boundary" => triangle_boundary(),
        "full_triangle" => full_triangle(),
        "circle" => circle(),
        "disk" => disk(),
        "tetrahedron_boundary" => tetrahedron_boundary(),
        "cylinder" => cylinder(),
        "annulus" => annulus(),
        _ => return None,
    })
}

pub const NAMES: [&str; 9] = [
    "point",
    "interval",
    "triangle_boundary",
    "full_triangle",
    "circle",
    "disk",
    "tetrahedron_boundary",
    "cylinder",
    "annulus",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_characteristics() {
        assert_eq!(circle().euler_characteristic(), 0);
        assert_eq!(disk().euler_characteristic(), 1);
        assert_eq!(cylinder().euler_characteristic(), 0);
        assert_eq!(annulus().euler_characteristic(), 0);
        assert_eq!(tetrahedron_boundary().euler_characteristic(), 2);
    }

    #[test]
    fn annulus_has_one_hole() {
        assert_eq!(annulus().betti_numbers(), vec![1, 1, 0]);
    }

    #[test]
    fn names_resolve() {
        for n in NAMES {
            assert!(by_name(n).is_some(), "{n}");
        }
    }
}
