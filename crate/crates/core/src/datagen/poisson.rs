use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{linspace, CsrMatrix, Matrix, SpdSolver, Triplets};
use crate::operator::FusionMode;
use crate::rng::{standard_normal, stream, Stream};

use super::mesh::{for_gauss_points, Edge, FemMesh};
use super::spline::NaturalCubicSpline;
use super::{split_dataset, Dataset, DEFAULT_TRAIN_FRACTION};

/// Length of every boundary series and of every stored field history.
pub const BC_SAMPLES: usize = 100;
pub const BC_CONTROL_POINTS: usize = 5;
pub const BC_SIGMA: f64 = 0.5;

/// Right-edge Dirichlet value over time, sampled at evenly spaced instants on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BcSeries {
    control_points: Vec<(f64, f64)>,
    values: Vec<f64>,
    final_time: f64,
}

impl BcSeries {
    /// Spline through `control_points` sampled at [`BC_SAMPLES`] instants.
    /// The first point must be the origin and control values must lie in [−1, 1].
    pub fn from_control_points(control_points: Vec<(f64, f64)>, final_time: f64) -> Result<Self> {
        check_final_time(final_time)?;
        if control_points.first() != Some(&(0.0, 0.0)) {
            return Err(Error::InvalidArgument("boundary series must start at (0, 0)".into()));
        }
        if control_points.iter().any(|(_, v)| !(-1.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("control values must lie in [-1, 1]".into()));
        }
        let spline = NaturalCubicSpline::new(&control_points)?;
        let values = linspace(0.0, final_time, BC_SAMPLES).into_iter().map(|t| spline.eval(t)).collect();
        Ok(Self { control_points, values, final_time })
    }

    /// Arbitrary samples on `[0, T]`, without control points.
    pub fn from_values(values: Vec<f64>, final_time: f64) -> Result<Self> {
        check_final_time(final_time)?;
        if values.len() < 2 {
            return Err(Error::InvalidArgument("boundary series needs at least 2 samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary series"));
        }
        Ok(Self { control_points: Vec::new(), values, final_time })
    }

    pub fn control_points(&self) -> &[(f64, f64)] {
        &self.control_points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        linspace(0.0, self.final_time, self.values.len())
    }
}

fn check_final_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("final time must be positive, got {t}")))
    }
}

/// Origin plus five clipped `N(0, 0.5)` values at `T/5, 2T/5, …, T`.
pub fn gen_poisson_bc<R: Rng + ?Sized>(rng: &mut R, final_time: f64) -> Result<BcSeries> {
    check_final_time(final_time)?;
    let times = linspace(0.0, final_time, BC_CONTROL_POINTS + 1);
    let mut points = vec![(0.0, 0.0)];
    for &t in &times[1..] {
        points.push((t, (BC_SIGMA * standard_normal(rng)).clamp(-1.0, 1.0)));
    }
    BcSeries::from_control_points(points, final_time)
}

/// Backward-Euler heat equation on a fixed mesh and time grid, factored once.
///
/// `u = 0` on the left edge, `u = bc(t)` on the right edge, zero flux elsewhere.
#[derive(Clone, Debug)]
pub struct TransientPoissonSolver {
    num_nodes: usize,
    steps: usize,
    dt: f64,
    free: Vec<usize>,
    right: Vec<usize>,
    system: SpdSolver,
    /// Mass rows of the free nodes, all columns.
    mass_rows: CsrMatrix,
    /// System rows of the free nodes, Dirichlet columns only.
    coupling: CsrMatrix,
}

impl TransientPoissonSolver {
    pub fn new(mesh: &FemMesh, final_time: f64, steps: usize) -> Result<Self> {
        check_final_time(final_time)?;
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 time frames, got {steps}")));
        }
        let n = mesh.num_nodes();
        let dt = final_time / (steps - 1) as f64;
        let mut mass = Triplets::new(n, n);
        let mut system = Triplets::new(n, n);
        for (e, conn) in mesh.elements().iter().enumerate() {
            let mut me = [[0.0; 4]; 4];
            let mut ke = [[0.0; 4]; 4];
            for_gauss_points(&mesh.element_coords(e), |s, w| {
                for a in 0..4 {
                    for b in 0..4 {
                        me[a][b] += w * s.n[a] * s.n[b];
                        ke[a][b] += w * (s.dn[a][0] * s.dn[b][0] + s.dn[a][1] * s.dn[b][1]);
                    }
                }
            });
            for a in 0..4 {
                for b in 0..4 {
                    mass.push(conn[a], conn[b], me[a][b]);
                    system.push(conn[a], conn[b], me[a][b] / dt + ke[a][b]);
                }
            }
        }
        let mass = mass.into_csr();
        let system = system.into_csr();

        let dirichlet: Vec<bool> =
            (0..n).map(|i| mesh.on_edge(i, Edge::Left) || mesh.on_edge(i, Edge::Right)).collect();
        let free: Vec<usize> = (0..n).filter(|&i| !dirichlet[i]).collect();
        let mut free_index = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            free_index[i] = k;
        }
        let mut aff = Triplets::new(free.len(), free.len());
        let mut mf = Triplets::new(free.len(), n);
        let mut afd = Triplets::new(free.len(), n);
        for (k, &i) in free.iter().enumerate() {
            for (j, v) in system.row_entries(i) {
                if dirichlet[j] {
                    afd.push(k, j, v);
                } else {
                    aff.push(k, free_index[j], v);
                }
            }
            for (j, v) in mass.row_entries(i) {
                mf.push(k, j, v);
            }
        }
        Ok(Self {
            num_nodes: n,
            steps,
            dt,
            free,
            right: mesh.boundary_nodes(Edge::Right),
            system: SpdSolver::new(aff.into_csr())?,
            mass_rows: mf.into_csr(),
            coupling: afd.into_csr(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Field history `(steps, num_nodes)`; frame 0 is the zero initial state.
    pub fn solve(&self, bc: &BcSeries) -> Result<Matrix> {
        if bc.len() != self.steps {
            return Err(Error::dims("boundary series length", self.steps, bc.len()));
        }
        let n = self.num_nodes;
        let mut history = Matrix::zeros(self.steps, n);
        let mut prev = vec![0.0; n];
        let mut boundary = vec![0.0; n];
        let mut rhs = vec![0.0; self.free.len()];
        let mut coupled = vec![0.0; self.free.len()];
        for k in 1..self.steps {
            for &i in &self.right {
                boundary[i] = bc.values()[k];
            }
            self.mass_rows.matvec_into(&prev, &mut rhs);
            self.coupling.matvec_into(&boundary, &mut coupled);
            for (r, c) in rhs.iter_mut().zip(&coupled) {
                *r = *r / self.dt - c;
            }
            let sol = self.system.solve(&rhs).map_err(|e| Error::Solver(format!("time step {k}: {e}")))?;
            let mut next = boundary.clone();
            for (&i, v) in self.free.iter().zip(sol) {
                next[i] = v;
            }
            history.row_mut(k).copy_from_slice(&next);
            prev = next;
        }
        Ok(history)
    }
}

pub fn solve_transient_poisson(bc: &BcSeries, mesh: &FemMesh) -> Result<Matrix> {
    TransientPoissonSolver::new(mesh, bc.final_time(), bc.len())?.solve(bc)
}

/// Branch input is the boundary series; targets are point-major histories of length
/// [`BC_SAMPLES`] per node.
pub fn gen_poisson_dataset(num_samples: usize, mesh: &FemMesh, final_time: f64, seed: u64) -> Result<Dataset> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {num_samples}")));
    }
    let solver = TransientPoissonSolver::new(mesh, final_time, BC_SAMPLES)?;
    let n = mesh.num_nodes();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..num_samples)
        .into_par_iter()
        .map(|s| {
            let bc = gen_poisson_bc(&mut stream(seed, Stream::Data, s as u64), final_time)?;
            let history = solver.solve(&bc)?;
            let mut target = vec![0.0; n * BC_SAMPLES];
            for (k, frame) in history.iter_rows().enumerate() {
                for (p, &v) in frame.iter().enumerate() {
                    target[p * BC_SAMPLES + k] = v;
                }
            }
            Ok((bc.values().to_vec(), target))
        })
        .collect::<Result<_>>()?;
    let mut branch = Matrix::zeros(num_samples, BC_SAMPLES);
    let mut targets = Matrix::zeros(num_samples, n * BC_SAMPLES);
    for (s, (b, t)) in rows.into_iter().enumerate() {
        branch.row_mut(s).copy_from_slice(&b);
        targets.row_mut(s).copy_from_slice(&t);
    }
    let ds = Dataset::new(branch, mesh.coords_matrix(), targets, FusionMode::Transient { steps: BC_SAMPLES })?;
    split_dataset(ds, DEFAULT_TRAIN_FRACTION, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bc_shape_and_origin() {
        let mut rng = stream(11, Stream::Data, 0);
        for _ in 0..50 {
            let bc = gen_poisson_bc(&mut rng, 1.0).unwrap();
            assert_eq!(bc.len(), BC_SAMPLES);
            assert_eq!(bc.values()[0], 0.0);
            assert_eq!(bc.control_points().len(), 6);
            assert!(bc.control_points().iter().all(|(_, v)| (-1.0..=1.0).contains(v)));
            for &(t, v) in bc.control_points() {
                if let Some(k) = bc.times().iter().position(|&s| s == t) {
                    assert!((bc.values()[k] - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_bc_zero_field() {
        let mesh = FemMesh::square(6).unwrap();
        let bc = BcSeries::from_values(vec![0.0; 10], 1.0).unwrap();
        let h = solve_transient_poisson(&bc, &mesh).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_values_are_imposed() {
        let mesh = FemMesh::square(5).unwrap();
        let bc = BcSeries::from_values(linspace(0.0, 1.0, 8), 1.0).unwrap();
        let h = solve_transient_poisson(&bc, &mesh).unwrap();
        assert!(h.row(0).iter().all(|&v| v == 0.0));
        for k in 1..8 {
            for i in mesh.boundary_nodes(Edge::Right) {
                assert_eq!(h[(k, i)], bc.values()[k]);
            }
            for i in mesh.boundary_nodes(Edge::Left) {
                assert_eq!(h[(k, i)], 0.0);
            }
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let mesh = FemMesh::square(4).unwrap();
        let solver = TransientPoissonSolver::new(&mesh, 1.0, 10).unwrap();
        let bc = BcSeries::from_values(vec![0.0; 9], 1.0).unwrap();
        assert!(solver.solve(&bc).is_err());
    }
}
