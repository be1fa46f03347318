//! Verification problems shared by the integration tests and the
//! acceptance target.
#![allow(dead_code)]

use std::f64::consts::PI;

use frostsim_core::mesh::{generate_rectangle, BoundaryTag, Mesh};
use frostsim_core::transport::{
    BoundaryConditions, ConstantCoefficients, PicardOptions, PointCoefficients, TransportModel, TransportOptions,
    TransportState,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Unit conductivity and capacity in both fields, no coupling.
pub fn unit_material() -> ConstantCoefficients {
    ConstantCoefficients(PointCoefficients { k_tt: 1.0, k_pp: 1.0, c_tt: 1.0, c_pp: 1.0, ..Default::default() })
}

/// Linear problems converge in one solve with these.
pub fn exact_options(lumped: bool) -> TransportOptions {
    TransportOptions {
        picard: PicardOptions { tol: 1e-13, max_iter: 5, relax: 1.0 },
        lumped_capacity: lumped,
        ..Default::default()
    }
}

/// Decaying first mode of the unit square, an exact solution of the
/// source-free heat equation with zero boundary values.
pub fn mode(x: f64, y: f64, t: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin() * (-2.0 * PI * PI * t).exp()
}

pub const FINAL_TIME: f64 = 0.05;

fn boundary_nodes(mesh: &Mesh) -> Vec<usize> {
    mesh.tagged_nodes(BoundaryTag::Ext)
}

fn heat_model<'a>(mesh: &'a Mesh, material: &'a ConstantCoefficients) -> TransportModel<'a, ConstantCoefficients> {
    let fixed = boundary_nodes(mesh).into_iter().map(|n| (2 * n, 0.0)).collect();
    TransportModel::new(mesh, material, exact_options(false)).with_dirichlet(fixed)
}

fn initial_state(mesh: &Mesh) -> TransportState {
    let mut s = TransportState::uniform(mesh.node_count(), 0.0, 0.0);
    for (k, p) in mesh.nodes().iter().enumerate() {
        s.theta[k] = mode(p.x, p.y, 0.0);
    }
    s
}

/// Steps the heat problem to `FINAL_TIME`.
pub fn integrate(mesh: &Mesh, steps: usize, gamma: f64) -> TransportState {
    let material = unit_material();
    let model = heat_model(mesh, &material);
    let bc = BoundaryConditions::default();
    let mut state = initial_state(mesh);
    state.rdot = model.consistent_rate(&state, &bc).unwrap();
    let dt = FINAL_TIME / steps as f64;
    for _ in 0..steps {
        state = model.step(&state, dt, gamma, &bc).unwrap().0;
    }
    state
}

/// Exact solution of the semi-discrete system `C θ' + K θ = 0` on the free
/// temperature dofs, via the generalized symmetric eigenproblem.
pub fn modal_solution(mesh: &Mesh, t: f64) -> Vec<f64> {
    let material = unit_material();
    let model = heat_model(mesh, &material);
    let n = mesh.node_count();
    let state = initial_state(mesh);
    let sys = model.assemble(&state.packed(), &BoundaryConditions::default(), &vec![false; n]).unwrap();
    let fixed: std::collections::HashSet<usize> = boundary_nodes(mesh).into_iter().collect();
    let free: Vec<usize> = (0..n).filter(|k| !fixed.contains(k)).collect();
    let m = free.len();
    let mut mass = DMatrix::zeros(m, m);
    let mut stiff = DMatrix::zeros(m, m);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            mass[(a, b)] = sys.c.get(2 * i, 2 * j);
            stiff[(a, b)] = sys.k.get(2 * i, 2 * j);
        }
    }
    let l = mass.cholesky().expect("mass matrix is positive definite").l();
    let l_inv = l.clone().try_inverse().unwrap();
    let a = &l_inv * &stiff * l_inv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let r0 = DVector::from_iterator(m, free.iter().map(|&k| state.theta[k]));
    let z0 = eig.eigenvectors.transpose() * (l.transpose() * r0);
    let z = DVector::from_iterator(m, z0.iter().zip(eig.eigenvalues.iter()).map(|(z, lam)| z * (-lam * t).exp()));
    let r = l_inv.transpose() * (&eig.eigenvectors * z);
    let mut out = vec![0.0; n];
    for (a, &k) in free.iter().enumerate() {
        out[k] = r[a];
    }
    out
}

/// Euclidean distance of the stepped solution from the modal oracle for
/// each step count.
pub fn temporal_errors(cells: usize, gamma: f64, step_counts: &[usize]) -> Vec<f64> {
    let mesh = generate_rectangle(1.0, 1.0, cells, cells).unwrap();
    let exact = modal_solution(&mesh, FINAL_TIME);
    step_counts
        .iter()
        .map(|&s| {
            let theta = integrate(&mesh, s, gamma).theta;
            theta.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Degree-5 rule on the reference triangle: barycentric points and weights
/// (weights sum to 1).
const QUADRATURE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// L2 norm of `u_h - u` for a nodal field `u_h`.
pub fn l2_error(mesh: &Mesh, nodal: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for (tri, g) in mesh.elements().iter().zip(mesh.geometry()) {
        let p = tri.map(|k| mesh.nodes()[k]);
        for (bary, w) in QUADRATURE {
            let x: f64 = (0..3).map(|k| bary[k] * p[k].x).sum();
            let y: f64 = (0..3).map(|k| bary[k] * p[k].y).sum();
            let uh: f64 = (0..3).map(|k| bary[k] * nodal[tri[k]]).sum();
            sum += w * g.area * (uh - exact(x, y)).powi(2);
        }
    }
    sum.sqrt()
}

/// `(h, error)` at `FINAL_TIME` for each cell count, with Crank–Nicolson
/// steps fine enough that the time error is negligible.
pub fn spatial_errors(cells: &[usize], steps: usize) -> Vec<(f64, f64)> {
    cells
        .iter()
        .map(|&n| {
            let mesh = generate_rectangle(1.0, 1.0, n, n).unwrap();
            let theta = integrate(&mesh, steps, 0.5).theta;
            (1.0 / n as f64, l2_error(&mesh, &theta, |x, y| mode(x, y, FINAL_TIME)))
        })
        .collect()
}

/// Observed orders between consecutive `(h, error)` pairs.
pub fn orders(errors: &[(f64, f64)]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect()
}

/// Relative drift of the total moisture `1ᵀ C φ` over `steps` steps of an
/// isolated constant-coefficient body.
pub fn moisture_drift(steps: usize) -> f64 {
    let mesh = generate_rectangle(1.0, 0.5, 6, 3).unwrap();
    let material = unit_material();
    let model = TransportModel::new(&mesh, &material, exact_options(false));
    let bc = BoundaryConditions::default();
    let mut state = TransportState::uniform(mesh.node_count(), 5.0, 0.0);
    for (k, p) in mesh.nodes().iter().enumerate() {
        state.phi[k] = 0.3 + 0.4 * (3.0 * p.x).sin().powi(2) * (1.0 + p.y) / 1.5;
    }
    state.rdot = model.consistent_rate(&state, &bc).unwrap();
    let sat = vec![false; mesh.node_count()];
    let total = |s: &TransportState| {
        let c = model.assemble(&s.packed(), &bc, &sat).unwrap().c;
        let cphi = c.mul_vec(&s.packed());
        cphi.iter().skip(1).step_by(2).sum::<f64>()
    };
    let start = total(&state);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        state = model.step(&state, 0.01, 0.5, &bc).unwrap().0;
        worst = worst.max(((total(&state) - start) / start).abs());
    }
    worst
}

/// Largest excursion of nodal temperatures outside the range of initial
/// and boundary values, over a lumped-capacity backward Euler run.
pub fn maximum_principle_excursion(steps: usize, dt: f64) -> f64 {
    let mesh = generate_rectangle(1.0, 1.0, 8, 8).unwrap();
    let material = unit_material();
    let hot: Vec<(usize, f64)> = boundary_nodes(&mesh)
        .into_iter()
        .map(|n| (2 * n, if mesh.nodes()[n].x == 0.0 { 10.0 } else { 0.0 }))
        .collect();
    let model = TransportModel::new(&mesh, &material, exact_options(true)).with_dirichlet(hot.clone());
    let bc = BoundaryConditions::default();
    let mut state = TransportState::uniform(mesh.node_count(), 2.0, 0.0);
    for &(dof, v) in &hot {
        state.theta[dof / 2] = v;
    }
    let (lo, hi) = (0.0, 10.0);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        state = model.step(&state, dt, 1.0, &bc).unwrap().0;
        for &t in &state.theta {
            worst = worst.max(lo - t).max(t - hi);
        }
    }
    worst
}
