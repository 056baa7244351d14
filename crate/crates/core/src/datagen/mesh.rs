use crate::error::{Error, Result};
use crate::linalg::{linspace, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Structured `nx × ny` node grid on the unit square with bilinear quads.
///
/// Node `(i, j)` sits at `(i/(nx−1), j/(ny−1))` with index `i + j·nx`.
/// Element corners are listed counter-clockwise from the lower left.
#[derive(Clone, Debug, PartialEq)]
pub struct FemMesh {
    nx: usize,
    ny: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
}

impl FemMesh {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!("mesh needs at least 2×2 nodes, got {nx}×{ny}")));
        }
        let xs = linspace(0.0, 1.0, nx);
        let ys = linspace(0.0, 1.0, ny);
        let nodes = ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect();
        let mut elements = Vec::with_capacity((nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let n0 = i + j * nx;
                elements.push([n0, n0 + 1, n0 + 1 + nx, n0 + nx]);
            }
        }
        Ok(Self { nx, ny, nodes, elements })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn on_edge(&self, node: usize, edge: Edge) -> bool {
        let (i, j) = (node % self.nx, node / self.nx);
        match edge {
            Edge::Left => i == 0,
            Edge::Right => i == self.nx - 1,
            Edge::Bottom => j == 0,
            Edge::Top => j == self.ny - 1,
        }
    }

    /// Nodes on `edge`, ordered along increasing x or y.
    pub fn boundary_nodes(&self, edge: Edge) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&n| self.on_edge(n, edge)).collect()
    }

    /// Node coordinates as a `(num_nodes, 2)` matrix.
    pub fn coords_matrix(&self) -> Matrix {
        Matrix::from_vec(self.num_nodes(), 2, self.nodes.iter().flatten().copied().collect())
            .expect("node buffer matches shape")
    }
}

pub(crate) const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Shape values, physical gradients and `det J` at reference point `(ξ, η)`.
pub(crate) struct ShapeEval {
    pub n: [f64; 4],
    pub dn: [[f64; 2]; 4],
    pub det_j: f64,
}

pub(crate) fn bilinear_shape(coords: &[[f64; 2]; 4], xi: f64, eta: f64) -> ShapeEval {
    let mut n = [0.0; 4];
    let mut dref = [[0.0; 2]; 4];
    for (a, [cx, cy]) in CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + cx * xi) * (1.0 + cy * eta);
        dref[a] = [0.25 * cx * (1.0 + cy * eta), 0.25 * cy * (1.0 + cx * xi)];
    }
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += dref[a][r] * coords[a][c];
            }
        }
    }
    let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det_j, -j[0][1] / det_j], [-j[1][0] / det_j, j[0][0] / det_j]];
    let mut dn = [[0.0; 2]; 4];
    for a in 0..4 {
        dn[a] = [inv[0][0] * dref[a][0] + inv[0][1] * dref[a][1], inv[1][0] * dref[a][0] + inv[1][1] * dref[a][1]];
    }
    ShapeEval { n, dn, det_j }
}

/// Calls `f` at each 2×2 Gauss point with the shape data and quadrature weight `det J`.
pub(crate) fn for_gauss_points(coords: &[[f64; 2]; 4], mut f: impl FnMut(&ShapeEval, f64)) {
    for &eta in &GAUSS_2 {
        for &xi in &GAUSS_2 {
            let s = bilinear_shape(coords, xi, eta);
            let w = s.det_j;
            f(&s, w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_orientation() {
        let m = FemMesh::new(4, 3).unwrap();
        assert_eq!(m.num_nodes(), 12);
        assert_eq!(m.elements().len(), 6);
        for e in 0..m.elements().len() {
            let c = m.element_coords(e);
            let area2: f64 = (0..4)
                .map(|a| {
                    let b = (a + 1) % 4;
                    c[a][0] * c[b][1] - c[b][0] * c[a][1]
                })
                .sum();
            assert!(area2 > 0.0);
        }
        assert_eq!(m.boundary_nodes(Edge::Right), vec![3, 7, 11]);
        assert_eq!(m.boundary_nodes(Edge::Top), vec![8, 9, 10, 11]);
        assert!(m.nodes().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn shape_functions_partition_unity() {
        let coords = [[0.0, 0.0], [0.5, 0.0], [0.5, 0.25], [0.0, 0.25]];
        let mut area = 0.0;
        for_gauss_points(&coords, |s, w| {
            assert!((s.n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let gsum: [f64; 2] = [s.dn.iter().map(|d| d[0]).sum(), s.dn.iter().map(|d| d[1]).sum()];
            assert!(gsum[0].abs() < 1e-14 && gsum[1].abs() < 1e-14);
            area += w;
        });
        assert!((area - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(FemMesh::new(1, 5).is_err());
    }
}
