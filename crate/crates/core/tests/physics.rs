//! Ground-truth generators against closed-form solutions.

use deepokan::datagen::{
    gen_poisson_bc, solve_ortho_fem, solve_transient_poisson, BcSeries, Edge, FemMesh, NaturalCubicSpline, OrthoParams,
    TransientPoissonSolver,
};
use deepokan::rng::{stream, uniform, Stream};

/// Uniform strain under a vertical top traction with rollers on the bottom and right edges.
fn patch_error(p: &OrthoParams, mesh: &FemMesh, e: f64, nu: f64) -> f64 {
    let u = solve_ortho_fem(p, mesh).unwrap();
    let eps_y = p.t_y / e;
    let eps_x = -nu * eps_y;
    mesh.nodes()
        .iter()
        .enumerate()
        .map(|(i, [x, y])| (u.u_x[i] - eps_x * (x - 1.0)).abs().max((u.u_y[i] - eps_y * y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn patch_test_reproduces_uniform_strain() {
    for n in [16, 32] {
        let mesh = FemMesh::square(n).unwrap();
        let p = OrthoParams::new(0.0, -0.2, 12.0, 12.0, 0.3).unwrap();
        let err = patch_error(&p, &mesh, 12.0, 0.3);
        assert!(err < 1e-10, "{n}x{n}: {err:e}");
    }
}

#[test]
fn patch_test_random_isotropic_draws() {
    let mesh = FemMesh::new(9, 6).unwrap();
    let mut rng = stream(3, Stream::Data, 0);
    for _ in 0..20 {
        let e = uniform(&mut rng, 5.0, 20.0);
        let nu = uniform(&mut rng, 0.15, 0.35);
        let ty = uniform(&mut rng, -0.3, 0.3);
        let p = OrthoParams::new(0.0, ty, e, e, nu).unwrap();
        assert!(patch_error(&p, &mesh, e, nu) < 1e-10);
    }
}

#[test]
fn orthotropic_solution_scales_with_traction() {
    let mesh = FemMesh::square(8).unwrap();
    let a = solve_ortho_fem(&OrthoParams::new(0.1, -0.2, 7.0, 15.0, 0.2).unwrap(), &mesh).unwrap();
    let b = solve_ortho_fem(&OrthoParams::new(0.3, -0.6, 7.0, 15.0, 0.2).unwrap(), &mesh).unwrap();
    for i in 0..mesh.num_nodes() {
        assert!((3.0 * a.u_x[i] - b.u_x[i]).abs() < 1e-12);
        assert!((3.0 * a.u_y[i] - b.u_y[i]).abs() < 1e-12);
    }
    for i in mesh.boundary_nodes(Edge::Bottom) {
        assert_eq!(a.u_y[i], 0.0);
    }
    for i in mesh.boundary_nodes(Edge::Right) {
        assert_eq!(a.u_x[i], 0.0);
    }
}

#[test]
fn poisson_zero_boundary_gives_zero_history() {
    let mesh = FemMesh::square(16).unwrap();
    let bc = BcSeries::from_values(vec![0.0; 100], 1.0).unwrap();
    let h = solve_transient_poisson(&bc, &mesh).unwrap();
    assert_eq!((h.rows(), h.cols()), (100, mesh.num_nodes()));
    assert!(h.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn poisson_constant_boundary_reaches_linear_steady_state() {
    let mesh = FemMesh::square(32).unwrap();
    let bc = BcSeries::from_values(vec![1.0; 100], 20.0).unwrap();
    let h = solve_transient_poisson(&bc, &mesh).unwrap();
    let last = h.row(99);
    let dev = mesh.nodes().iter().zip(last).map(|([x, _], u)| (u - x).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-3, "max deviation {dev:e}");
}

#[test]
fn poisson_solution_is_independent_of_y() {
    let mesh = FemMesh::new(7, 5).unwrap();
    let mut rng = stream(8, Stream::Data, 0);
    let bc = gen_poisson_bc(&mut rng, 1.0).unwrap();
    let h = TransientPoissonSolver::new(&mesh, 1.0, 100).unwrap().solve(&bc).unwrap();
    for k in 0..100 {
        for j in 1..5 {
            for i in 0..7 {
                assert!((h[(k, i + 7 * j)] - h[(k, i)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn spline_reference_values() {
    let s = NaturalCubicSpline::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
    assert!((s.eval(0.5) - 0.6875).abs() < 1e-12);
    assert!((s.eval(1.5) - 0.6875).abs() < 1e-12);
    assert!((s.eval(1.0) - 1.0).abs() < 1e-12);
}
