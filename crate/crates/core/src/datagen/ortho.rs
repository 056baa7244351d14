use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Matrix, SpdSolver, Triplets};
use crate::operator::FusionMode;
use crate::rng::{stream, uniform, Stream};

use super::mesh::{for_gauss_points, Edge, FemMesh};
use super::{split_dataset, Dataset, DEFAULT_TRAIN_FRACTION};

pub const TRACTION_RANGE: (f64, f64) = (-0.3, 0.3);
pub const MODULUS_RANGE: (f64, f64) = (5.0, 20.0);
pub const POISSON_RANGE: (f64, f64) = (0.15, 0.35);

/// Plane-stress orthotropic material plus top-edge traction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthoParams {
    pub t_x: f64,
    pub t_y: f64,
    pub e_x: f64,
    pub e_y: f64,
    pub nu_xy: f64,
    pub nu_yx: f64,
    pub g_xy: f64,
}

impl OrthoParams {
    /// Derives `ν_yx` by symmetry and `G_xy` as the mean of the two isotropic estimates.
    pub fn new(t_x: f64, t_y: f64, e_x: f64, e_y: f64, nu_xy: f64) -> Result<Self> {
        if ![t_x, t_y, e_x, e_y, nu_xy].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("orthotropic parameters"));
        }
        if e_x <= 0.0 || e_y <= 0.0 {
            return Err(Error::InvalidArgument(format!("moduli must be positive, got {e_x}, {e_y}")));
        }
        let nu_yx = nu_xy * e_y / e_x;
        let g_xy = 0.5 * (e_x / (2.0 * (1.0 + nu_xy)) + e_y / (2.0 * (1.0 + nu_yx)));
        if 1.0 - nu_xy * nu_yx <= 0.0 || g_xy <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "material is not positive definite (nu_xy = {nu_xy}, nu_yx = {nu_yx})"
            )));
        }
        Ok(Self { t_x, t_y, e_x, e_y, nu_xy, nu_yx, g_xy })
    }

    /// `[t_x, t_y, E_x, E_y, ν_xy, G_xy]`
    pub fn branch_vector(&self) -> [f64; 6] {
        [self.t_x, self.t_y, self.e_x, self.e_y, self.nu_xy, self.g_xy]
    }

    pub fn in_sampling_ranges(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
        within(self.t_x, TRACTION_RANGE)
            && within(self.t_y, TRACTION_RANGE)
            && within(self.e_x, MODULUS_RANGE)
            && within(self.e_y, MODULUS_RANGE)
            && within(self.nu_xy, POISSON_RANGE)
    }

    /// Inverse of the plane-stress compliance, acting on `(ε_xx, ε_yy, γ_xy)`.
    pub fn stiffness(&self) -> [[f64; 3]; 3] {
        let denom = 1.0 - self.nu_xy * self.nu_yx;
        let d12 = self.nu_xy * self.e_y / denom;
        [[self.e_x / denom, d12, 0.0], [d12, self.e_y / denom, 0.0], [0.0, 0.0, self.g_xy]]
    }
}

pub fn sample_ortho_params<R: Rng + ?Sized>(rng: &mut R) -> OrthoParams {
    let t_x = uniform(rng, TRACTION_RANGE.0, TRACTION_RANGE.1);
    let t_y = uniform(rng, TRACTION_RANGE.0, TRACTION_RANGE.1);
    let e_x = uniform(rng, MODULUS_RANGE.0, MODULUS_RANGE.1);
    let e_y = uniform(rng, MODULUS_RANGE.0, MODULUS_RANGE.1);
    let nu_xy = uniform(rng, POISSON_RANGE.0, POISSON_RANGE.1);
    OrthoParams::new(t_x, t_y, e_x, e_y, nu_xy).expect("sampling ranges are physical")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Displacement {
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
}

impl Displacement {
    pub fn magnitude(&self) -> Vec<f64> {
        self.u_x.iter().zip(&self.u_y).map(|(a, b)| a.hypot(*b)).collect()
    }
}

fn element_stiffness(coords: &[[f64; 2]; 4], d: &[[f64; 3]; 3]) -> [[f64; 8]; 8] {
    let mut ke = [[0.0; 8]; 8];
    for_gauss_points(coords, |s, w| {
        let mut b = [[0.0; 8]; 3];
        for a in 0..4 {
            let [gx, gy] = s.dn[a];
            b[0][2 * a] = gx;
            b[1][2 * a + 1] = gy;
            b[2][2 * a] = gy;
            b[2][2 * a + 1] = gx;
        }
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                ke[i][j] += w * (0..3).map(|k| b[k][i] * db[k][j]).sum::<f64>();
            }
        }
    });
    ke
}

/// Unconstrained global stiffness over `2·num_nodes` DOFs, ordered `(u_x, u_y)` per node.
pub fn assemble_ortho_stiffness(params: &OrthoParams, mesh: &FemMesh) -> CsrMatrix {
    let d = params.stiffness();
    let ndof = 2 * mesh.num_nodes();
    let mut t = Triplets::new(ndof, ndof);
    for (e, conn) in mesh.elements().iter().enumerate() {
        let ke = element_stiffness(&mesh.element_coords(e), &d);
        let dofs: Vec<usize> = conn.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect();
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                t.push(gi, gj, ke[i][j]);
            }
        }
    }
    t.into_csr()
}

/// Roller supports on the bottom (`u_y`) and right (`u_x`) edges, traction on top.
pub fn solve_ortho_fem(params: &OrthoParams, mesh: &FemMesh) -> Result<Displacement> {
    let n = mesh.num_nodes();
    let ndof = 2 * n;
    let mut fixed = vec![false; ndof];
    for node in mesh.boundary_nodes(Edge::Bottom) {
        fixed[2 * node + 1] = true;
    }
    for node in mesh.boundary_nodes(Edge::Right) {
        fixed[2 * node] = true;
    }

    let mut load = vec![0.0; ndof];
    let top = mesh.boundary_nodes(Edge::Top);
    for pair in top.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (mesh.nodes()[b][0] - mesh.nodes()[a][0]);
        for node in [a, b] {
            load[2 * node] += params.t_x * half;
            load[2 * node + 1] += params.t_y * half;
        }
    }

    let mut free_index = vec![usize::MAX; ndof];
    let mut free = Vec::new();
    for dof in 0..ndof {
        if !fixed[dof] {
            free_index[dof] = free.len();
            free.push(dof);
        }
    }
    let k = assemble_ortho_stiffness(params, mesh);
    let mut t = Triplets::new(free.len(), free.len());
    for (fi, &dof) in free.iter().enumerate() {
        for (col, v) in k.row_entries(dof) {
            if !fixed[col] {
                t.push(fi, free_index[col], v);
            }
        }
    }
    let rhs: Vec<f64> = free.iter().map(|&dof| load[dof]).collect();
    let sol = SpdSolver::new(t.into_csr())?.solve(&rhs)?;

    let mut u = vec![0.0; ndof];
    for (fi, &dof) in free.iter().enumerate() {
        u[dof] = sol[fi];
    }
    Ok(Displacement {
        u_x: u.iter().step_by(2).copied().collect(),
        u_y: u.iter().skip(1).step_by(2).copied().collect(),
    })
}

/// Samples in parallel; branch input is [`OrthoParams::branch_vector`], targets are nodal
/// displacement magnitudes.
pub fn gen_ortho_dataset(num_samples: usize, mesh: &FemMesh, seed: u64) -> Result<Dataset> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {num_samples}")));
    }
    let rows: Vec<([f64; 6], Vec<f64>)> = (0..num_samples)
        .into_par_iter()
        .map(|s| {
            let params = sample_ortho_params(&mut stream(seed, Stream::Data, s as u64));
            let field = solve_ortho_fem(&params, mesh)?;
            Ok((params.branch_vector(), field.magnitude()))
        })
        .collect::<Result<_>>()?;
    let mut branch = Matrix::zeros(num_samples, 6);
    let mut targets = Matrix::zeros(num_samples, mesh.num_nodes());
    for (s, (b, t)) in rows.into_iter().enumerate() {
        branch.row_mut(s).copy_from_slice(&b);
        targets.row_mut(s).copy_from_slice(&t);
    }
    let ds = Dataset::new(branch, mesh.coords_matrix(), targets, FusionMode::Scalar)?;
    split_dataset(ds, DEFAULT_TRAIN_FRACTION, seed)
}
