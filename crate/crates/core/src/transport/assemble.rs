use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::nonlinear::{nonlinear_iterate, PicardOptions};
use super::{PointCoefficients, TransportCoefficients, TransportError, TransportState};
use crate::linalg::{BandedLu, CsrMatrix, Pattern};
use crate::mesh::{BoundaryTag, Mesh};
use crate::par::Execution;

/// Form of the surface vapour exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VaporExchange {
    /// `β_v (φ p_sat(θ) - φ∞ p_sat(θ∞))`: driven by the vapour pressure difference.
    #[default]
    PartialPressure,
    /// `β_v (φ - φ∞)`.
    Humidity,
}

/// Exchange and prescribed fluxes on one boundary group. Fluxes are
/// positive into the body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfaceCondition {
    pub theta_ambient: f64,
    pub phi_ambient: f64,
    /// Heat transfer coefficient [W m^-2 K^-1].
    pub alpha_h: f64,
    /// Vapour transfer coefficient.
    pub beta_v: f64,
    /// Imposed heat flux [W m^-2].
    pub heat_flux: f64,
    /// Imposed liquid flux [kg m^-2 s^-1]; withheld at saturated nodes.
    pub moisture_flux: f64,
}

/// Surface conditions per boundary tag; `None` is an impermeable adiabatic face.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryConditions {
    pub surfaces: [Option<SurfaceCondition>; 4],
    pub vapor: VaporExchange,
}

impl BoundaryConditions {
    pub fn set(&mut self, tag: BoundaryTag, condition: SurfaceCondition) {
        self.surfaces[tag_index(tag)] = Some(condition);
    }

    pub fn get(&self, tag: BoundaryTag) -> Option<&SurfaceCondition> {
        self.surfaces[tag_index(tag)].as_ref()
    }
}

fn tag_index(tag: BoundaryTag) -> usize {
    match tag {
        BoundaryTag::Ext => 0,
        BoundaryTag::Int => 1,
        BoundaryTag::A => 2,
        BoundaryTag::B => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportOptions {
    pub picard: PicardOptions,
    pub lumped_capacity: bool,
    pub storage: StorageEvaluation,
    pub execution: Execution,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            picard: PicardOptions::default(),
            lumped_capacity: false,
            storage: StorageEvaluation::Chord,
            execution: Execution::Parallel,
        }
    }
}

/// How storage coefficients are evaluated inside a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageEvaluation {
    /// Difference quotient between the start of the step and the iterate.
    #[default]
    Chord,
    /// Tangent at the iterate.
    Tangent,
}

/// `C ṙ + K r = F` at one configuration.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: CsrMatrix,
    pub c: CsrMatrix,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Spatial discretization of the transport problem on a fixed mesh.
pub struct TransportModel<'a, M: TransportCoefficients> {
    mesh: &'a Mesh,
    material: &'a M,
    pattern: Arc<Pattern>,
    dirichlet: Vec<(usize, f64)>,
    options: TransportOptions,
}

const SATURATED: f64 = 1.0 - 1e-12;

impl<'a, M: TransportCoefficients> TransportModel<'a, M> {
    pub fn new(mesh: &'a Mesh, material: &'a M, options: TransportOptions) -> Self {
        let pattern = Arc::new(Pattern::new(mesh.node_count(), mesh.elements(), 2));
        Self { mesh, material, pattern, dirichlet: Vec::new(), options }
    }

    /// Prescribes `(dof, value)` pairs, dof = `2*node + comp`.
    pub fn with_dirichlet(mut self, fixed: Vec<(usize, f64)>) -> Self {
        self.dirichlet = fixed;
        self
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn options(&self) -> &TransportOptions {
        &self.options
    }

    /// Element coefficients at the centroid of the interleaved iterate `r`.
    fn element_coefficients(&self, r: &[f64], r_old: Option<&[f64]>, e: usize) -> Result<PointCoefficients, TransportError> {
        let tri = self.mesh.elements()[e];
        let centroid = |v: &[f64], k: usize| tri.iter().map(|&n| v[2 * n + k]).sum::<f64>() / 3.0;
        let theta = centroid(r, 0);
        let phi = centroid(r, 1).clamp(0.0, 1.0);
        let c = match r_old {
            Some(old) => self.material.evaluate_over_step(centroid(old, 0), theta, phi),
            None => self.material.evaluate(theta, phi),
        };
        c.map_err(|source| TransportError::Coefficient { element: e, source })
    }

    /// Assembles `K`, `C`, `F` with coefficients frozen at `r`.
    ///
    /// `saturated[n]` withholds the imposed moisture flux at node `n`.
    pub fn assemble(
        &self,
        r: &[f64],
        bc: &BoundaryConditions,
        saturated: &[bool],
    ) -> Result<AssembledSystem, TransportError> {
        self.assemble_from(r, None, bc, saturated)
    }

    /// As [`assemble`](Self::assemble), with storage coefficients over the
    /// step from `r_old` to `r` when the options ask for chords.
    pub fn assemble_from(
        &self,
        r: &[f64],
        r_old: Option<&[f64]>,
        bc: &BoundaryConditions,
        saturated: &[bool],
    ) -> Result<AssembledSystem, TransportError> {
        let mesh = self.mesh;
        let lumped = self.options.lumped_capacity;
        let r_old = r_old.filter(|_| self.options.storage == StorageEvaluation::Chord);
        let locals = self.options.execution.try_map_range(mesh.element_count(), |e| {
            let c = self.element_coefficients(r, r_old, e)?;
            let g = &mesh.geometry()[e];
            let mut k = [0.0; 36];
            let mut m = [0.0; 36];
            for a in 0..3 {
                for b in 0..3 {
                    let gab = g.area * (g.gradients[a][0] * g.gradients[b][0] + g.gradients[a][1] * g.gradients[b][1]);
                    let (ra, cb) = (2 * a, 2 * b);
                    k[ra * 6 + cb] = c.k_tt * gab;
                    k[ra * 6 + cb + 1] = c.k_tp * gab;
                    k[(ra + 1) * 6 + cb] = c.k_pt * gab;
                    k[(ra + 1) * 6 + cb + 1] = c.k_pp * gab;
                    let mab = if lumped {
                        if a == b { g.area / 3.0 } else { 0.0 }
                    } else if a == b {
                        g.area / 6.0
                    } else {
                        g.area / 12.0
                    };
                    m[ra * 6 + cb] = c.c_tt * mab;
                    m[(ra + 1) * 6 + cb + 1] = c.c_pp * mab;
                }
            }
            Ok::<_, TransportError>((k, m))
        })?;

        let mut k = CsrMatrix::zeros(Arc::clone(&self.pattern));
        let mut c = CsrMatrix::zeros(Arc::clone(&self.pattern));
        for (e, (ke, me)) in locals.iter().enumerate() {
            k.scatter_element(e, ke);
            c.scatter_element(e, me);
        }
        let mut f = vec![0.0; 2 * mesh.node_count()];
        self.add_boundary(r, bc, saturated, &mut k, &mut f)?;
        Ok(AssembledSystem { k, c, f })
    }

    /// Surface exchange and imposed fluxes. Edge integrals of products of
    /// linear functions use the exact (consistent) edge mass matrix.
    fn add_boundary(
        &self,
        r: &[f64],
        bc: &BoundaryConditions,
        saturated: &[bool],
        k: &mut CsrMatrix,
        f: &mut [f64],
    ) -> Result<(), TransportError> {
        for edge in self.mesh.boundary_edges() {
            let Some(s) = bc.get(edge.tag) else { continue };
            let nodes = self.mesh.edge_nodes(edge);
            let len = self.mesh.edge_length(edge);
            let (vapor_scale, vapor_ambient) = match bc.vapor {
                VaporExchange::PartialPressure => {
                    let theta_mid = 0.5 * (r[2 * nodes[0]] + r[2 * nodes[1]]);
                    let p_surface = self
                        .material
                        .saturation_pressure(theta_mid)
                        .map_err(|source| TransportError::Coefficient { element: edge.element, source })?;
                    let p_ambient = self.material.saturation_pressure(s.theta_ambient)?;
                    (p_surface, s.phi_ambient * p_ambient)
                }
                VaporExchange::Humidity => (1.0, s.phi_ambient),
            };
            let heat = s.alpha_h;
            let vapor = s.beta_v * vapor_scale;
            for (i, &a) in nodes.iter().enumerate() {
                for (j, &b) in nodes.iter().enumerate() {
                    let mass = if i == j { len / 3.0 } else { len / 6.0 };
                    k.add(2 * a, 2 * b, heat * mass);
                    k.add(2 * a + 1, 2 * b + 1, vapor * mass);
                }
                f[2 * a] += 0.5 * len * (s.alpha_h * s.theta_ambient + s.heat_flux);
                f[2 * a + 1] += 0.5 * len * s.beta_v * vapor_ambient;
                if !saturated[a] {
                    f[2 * a + 1] += 0.5 * len * s.moisture_flux;
                }
            }
        }
        Ok(())
    }

    fn project(&self, r: &mut [f64]) {
        for phi in r.iter_mut().skip(1).step_by(2) {
            *phi = phi.clamp(0.0, 1.0);
        }
    }

    fn saturated_nodes(state: &TransportState) -> Vec<bool> {
        state.phi.iter().map(|&p| p >= SATURATED).collect()
    }

    /// Rate consistent with the semi-discrete equations: `C ṙ = F - K r`,
    /// zero on prescribed dofs.
    pub fn consistent_rate(&self, state: &TransportState, bc: &BoundaryConditions) -> Result<Vec<f64>, TransportError> {
        let r = state.packed();
        let sys = self.assemble(&r, bc, &Self::saturated_nodes(state))?;
        let kr = sys.k.mul_vec(&r);
        let mut rhs: Vec<f64> = sys.f.iter().zip(&kr).map(|(f, k)| f - k).collect();
        let mut c = sys.c;
        let zeros: Vec<(usize, f64)> = self.dirichlet.iter().map(|&(d, _)| (d, 0.0)).collect();
        c.apply_dirichlet(&mut rhs, &zeros);
        Ok(BandedLu::factor(&c)?.solve(&rhs)?)
    }

    /// Advances `state` by `dt` with the generalized trapezoidal rule,
    /// `bc` being the boundary conditions at the end of the step.
    pub fn step(
        &self,
        state: &TransportState,
        dt: f64,
        gamma: f64,
        bc: &BoundaryConditions,
    ) -> Result<(TransportState, StepReport), TransportError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TransportError::InvalidOptions(format!("time step must be positive, got {dt}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(TransportError::InvalidOptions(format!("γ must lie in [0, 1], got {gamma}")));
        }
        let r_old = state.packed();
        let saturated = Self::saturated_nodes(state);
        let predictor: Vec<f64> = r_old
            .iter()
            .zip(&state.rdot)
            .map(|(r, v)| r + dt * (1.0 - gamma) * v)
            .collect();

        if gamma == 0.0 {
            let mut r = predictor;
            for &(dof, value) in &self.dirichlet {
                r[dof] = value;
            }
            self.project(&mut r);
            let next = TransportState::from_packed(state.t + dt, &r, Vec::new());
            let rdot = self.consistent_rate(&next, bc)?;
            let report = StepReport { iterations: 1, residuals: Vec::new() };
            return Ok((TransportState { rdot, ..next }, report));
        }

        let gdt = gamma * dt;
        let build = |r: &[f64]| {
            let sys = self.assemble_from(r, Some(&r_old), bc, &saturated)?;
            let mut a = sys.c.combine(1.0, &sys.k, gdt);
            let cp = sys.c.mul_vec(&predictor);
            let mut b: Vec<f64> = sys.f.iter().zip(&cp).map(|(f, c)| gdt * f + c).collect();
            a.apply_dirichlet(&mut b, &self.dirichlet);
            Ok((a, b))
        };
        let out = nonlinear_iterate(build, r_old.clone(), 2, &self.options.picard, |r| self.project(r))?;
        let rdot = out
            .r
            .iter()
            .zip(&r_old)
            .zip(&state.rdot)
            .map(|((r, r0), v)| (r - r0 - dt * (1.0 - gamma) * v) / gdt)
            .collect();
        let report = StepReport { iterations: out.iterations, residuals: out.residuals };
        Ok((TransportState::from_packed(state.t + dt, &out.r, rdot), report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rectangle, BoundaryEdge, Node};
    use crate::transport::{ConstantCoefficients, KunzelMaterial};

    fn unit_triangle() -> Mesh {
        let nodes = vec![Node { x: 0.0, y: 0.0 }, Node { x: 1.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }];
        let boundary = (0..3)
            .map(|k| BoundaryEdge { element: 0, local_edge: k, tag: BoundaryTag::Ext })
            .collect();
        Mesh::new(nodes, vec![[0, 1, 2]], boundary).unwrap()
    }

    fn heat_only(lambda: f64) -> ConstantCoefficients {
        ConstantCoefficients(PointCoefficients { k_tt: lambda, k_pp: 1.0, c_tt: 1.0, c_pp: 1.0, ..Default::default() })
    }

    #[test]
    fn unit_triangle_stiffness() {
        let mesh = unit_triangle();
        let material = heat_only(2.0);
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let sys = model.assemble(&[0.0; 6], &BoundaryConditions::default(), &[false; 3]).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((sys.k.get(2 * a, 2 * b) - 2.0 * expected[a][b]).abs() < 1e-14);
            }
        }
        assert!((sys.c.get(0, 0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((sys.c.get(0, 2) - 1.0 / 24.0).abs() < 1e-15);
    }

    fn exterior(theta: f64, phi: f64) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        bc.set(
            BoundaryTag::Ext,
            SurfaceCondition { theta_ambient: theta, phi_ambient: phi, alpha_h: 8.0, beta_v: 5.6e-8, ..Default::default() },
        );
        bc
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let mesh = generate_rectangle(0.3, 0.2, 3, 2).unwrap();
        let material = KunzelMaterial { params: Default::default(), ice: None };
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let bc = exterior(12.0, 0.65);
        let mut state = TransportState::uniform(mesh.node_count(), 12.0, 0.65);
        let sys = model.assemble(&state.packed(), &bc, &vec![false; mesh.node_count()]).unwrap();
        let kr = sys.k.mul_vec(&state.packed());
        let scale = sys.f.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (x, y) in kr.iter().zip(&sys.f) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
        state.rdot = model.consistent_rate(&state, &bc).unwrap();
        let (next, _) = model.step(&state, 3600.0, 0.5, &bc).unwrap();
        for (a, b) in next.theta.iter().zip(&state.theta) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in next.phi.iter().zip(&state.phi) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn blocks_are_symmetric() {
        let mesh = generate_rectangle(0.3, 0.2, 3, 2).unwrap();
        let material = KunzelMaterial { params: Default::default(), ice: None };
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let n = mesh.node_count();
        let r: Vec<f64> = (0..n).flat_map(|i| [5.0 + i as f64, 0.3 + 0.01 * i as f64]).collect();
        let sys = model.assemble(&r, &exterior(0.0, 0.8), &vec![false; n]).unwrap();
        for i in 0..n {
            for j in 0..n {
                for comp in 0..2 {
                    let (a, b) = (2 * i + comp, 2 * j + comp);
                    assert!((sys.k.get(a, b) - sys.k.get(b, a)).abs() <= 1e-12 * sys.k.get(a, a).abs());
                }
            }
        }
        assert!(sys.c.asymmetry() < 1e-12);
    }

    #[test]
    fn robin_edges_integrate_exactly() {
        let mesh = unit_triangle();
        let material = heat_only(0.0);
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let mut bc = BoundaryConditions { vapor: VaporExchange::Humidity, ..Default::default() };
        bc.set(BoundaryTag::Ext, SurfaceCondition { theta_ambient: 3.0, alpha_h: 1.0, ..Default::default() });
        let sys = model.assemble(&[0.0; 6], &bc, &[false; 3]).unwrap();
        // Perimeter 2 + sqrt(2); constant fields integrate to alpha * perimeter.
        let total: f64 = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| sys.k.get(2 * a, 2 * b)).sum();
        assert!((total - (2.0 + 2f64.sqrt())).abs() < 1e-14);
        let load: f64 = (0..3).map(|a| sys.f[2 * a]).sum();
        assert!((load - 3.0 * (2.0 + 2f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn rain_is_withheld_at_saturated_nodes() {
        let mesh = unit_triangle();
        let material = heat_only(1.0);
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let mut bc = BoundaryConditions { vapor: VaporExchange::Humidity, ..Default::default() };
        bc.set(BoundaryTag::Ext, SurfaceCondition { moisture_flux: 1.0, ..Default::default() });
        let wet = model.assemble(&[0.0; 6], &bc, &[false; 3]).unwrap();
        let sat = model.assemble(&[0.0; 6], &bc, &[true, false, false]).unwrap();
        assert!(wet.f[1] > 0.0);
        assert_eq!(sat.f[1], 0.0);
        assert_eq!(sat.f[3], wet.f[3]);
    }

    #[test]
    fn invalid_step_arguments() {
        let mesh = unit_triangle();
        let material = heat_only(1.0);
        let model = TransportModel::new(&mesh, &material, TransportOptions::default());
        let s = TransportState::uniform(3, 0.0, 0.5);
        let bc = BoundaryConditions::default();
        assert!(model.step(&s, 0.0, 0.5, &bc).is_err());
        assert!(model.step(&s, 1.0, 1.5, &bc).is_err());
    }

    #[test]
    fn sequential_and_parallel_assembly_agree() {
        let mesh = generate_rectangle(1.0, 1.0, 6, 6).unwrap();
        let material = KunzelMaterial { params: Default::default(), ice: None };
        let n = mesh.node_count();
        let r: Vec<f64> = (0..n).flat_map(|i| [-3.0 + 0.1 * i as f64, 0.4 + 0.003 * i as f64]).collect();
        let bc = exterior(-2.0, 0.9);
        let assemble = |execution| {
            let opts = TransportOptions { execution, ..Default::default() };
            TransportModel::new(&mesh, &material, opts).assemble(&r, &bc, &vec![false; n]).unwrap()
        };
        let a = assemble(Execution::Sequential);
        let b = assemble(Execution::Parallel);
        assert_eq!(a.k.values(), b.k.values());
        assert_eq!(a.c.values(), b.c.values());
        assert_eq!(a.f, b.f);
    }
}
