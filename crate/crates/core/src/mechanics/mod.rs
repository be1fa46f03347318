//! Quasi-static plane-strain equilibrium of a porous skeleton loaded by
//! pore pressure and thermal strain, with nonlocal isotropic damage.
//!
//! Sign convention: tension positive. Total stress is
//! `σ = σ' - b p_p i`, effective stress `σ' = (1 - d) D (ε - ε_th)`.
//! Damage and the history variable live at the single quadrature point of
//! each element.

mod material;
mod nonlocal;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use material::{biot_coefficient, damage_function, elastic_stiffness, mazars_equivalent_strain, MechParams};
pub use nonlocal::{kernel, NonlocalAverager};

use crate::linalg::{BandedLu, CsrMatrix, LinalgError, Pattern};
use crate::mesh::{BoundaryTag, Mesh};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanicsError {
    #[error("invalid mechanical parameters: {0}")]
    InvalidParameters(String),
    #[error("field length {got} does not match {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error(transparent)]
    Linear(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechOptions {
    pub damage_enabled: bool,
    /// Convergence threshold on the damage increment.
    pub damage_tol: f64,
    pub max_iter: usize,
    /// Stiffness fraction kept by a fully damaged element.
    pub residual_stiffness: f64,
    /// Volumetric body force [N m^-3].
    pub body_force: [f64; 2],
    pub execution: Execution,
}

impl Default for MechOptions {
    fn default() -> Self {
        Self {
            damage_enabled: true,
            damage_tol: 1e-4,
            max_iter: 30,
            residual_stiffness: 1e-6,
            body_force: [0.0, 0.0],
            execution: Execution::Parallel,
        }
    }
}

/// Displacements (interleaved `[u_x, u_y]` per node) and per-element history.
#[derive(Debug, Clone, PartialEq)]
pub struct MechState {
    pub u: Vec<f64>,
    pub kappa: Vec<f64>,
    pub d_w: Vec<f64>,
}

impl MechState {
    pub fn undeformed(n_nodes: usize, n_elements: usize) -> Self {
        Self { u: vec![0.0; 2 * n_nodes], kappa: vec![0.0; n_elements], d_w: vec![0.0; n_elements] }
    }

    pub fn displacement_magnitude(&self, node: usize) -> f64 {
        self.u[2 * node].hypot(self.u[2 * node + 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechReport {
    pub iterations: usize,
    pub converged: bool,
    pub max_damage_change: f64,
    /// Per element, nonlocal equivalent strain of the final solve.
    pub eq_strain: Vec<f64>,
}

/// Strain-displacement rows of a linear triangle, `[xx, yy, xy]` by six dofs.
fn strain_operator(gradients: &[[f64; 2]; 3]) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for (a, g) in gradients.iter().enumerate() {
        b[0][2 * a] = g[0];
        b[1][2 * a + 1] = g[1];
        b[2][2 * a] = g[1];
        b[2][2 * a + 1] = g[0];
    }
    b
}

fn mat3_vec(d: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| d[i][0] * v[0] + d[i][1] * v[1] + d[i][2] * v[2])
}

struct CachedFactor {
    scales: Vec<f64>,
    /// Stiffness before the supports are eliminated.
    free: CsrMatrix,
    lu: BandedLu,
}

/// Mechanical model on a fixed mesh with fixed supports.
pub struct MechanicsModel<'a> {
    mesh: &'a Mesh,
    params: MechParams,
    biot: f64,
    options: MechOptions,
    pattern: Arc<Pattern>,
    averager: NonlocalAverager,
    supports: Vec<(usize, f64)>,
    d_e: [[f64; 3]; 3],
    cache: Option<CachedFactor>,
}

impl<'a> MechanicsModel<'a> {
    /// Rollers: `u_x = 0` on faces tagged `A`, `u_y = 0` on faces tagged `B`.
    pub fn new(mesh: &'a Mesh, params: MechParams, porosity: f64, options: MechOptions) -> Result<Self, MechanicsError> {
        params.validate()?;
        let biot = biot_coefficient(porosity)?;
        let mut supports: Vec<(usize, f64)> = mesh.tagged_nodes(BoundaryTag::A).iter().map(|&n| (2 * n, 0.0)).collect();
        supports.extend(mesh.tagged_nodes(BoundaryTag::B).iter().map(|&n| (2 * n + 1, 0.0)));
        let averager = NonlocalAverager::new(mesh, params.l_intl, options.execution);
        Ok(Self {
            mesh,
            d_e: elastic_stiffness(params.e, params.nu),
            params,
            biot,
            options,
            pattern: Arc::new(Pattern::new(mesh.node_count(), mesh.elements(), 2)),
            averager,
            supports,
            cache: None,
        })
    }

    /// Replaces the supports with `(dof, value)` prescriptions.
    pub fn with_supports(mut self, supports: Vec<(usize, f64)>) -> Self {
        self.supports = supports;
        self.cache = None;
        self
    }

    pub fn biot(&self) -> f64 {
        self.biot
    }

    pub fn params(&self) -> &MechParams {
        &self.params
    }

    pub fn averager(&self) -> &NonlocalAverager {
        &self.averager
    }

    /// Engineering strain `[ε_xx, ε_yy, γ_xy]` of element `e`.
    pub fn element_strain(&self, u: &[f64], e: usize) -> [f64; 3] {
        let b = strain_operator(&self.mesh.geometry()[e].gradients);
        let tri = self.mesh.elements()[e];
        let ue: [f64; 6] = std::array::from_fn(|k| u[2 * tri[k / 2] + k % 2]);
        b.map(|row| row.iter().zip(&ue).map(|(x, y)| x * y).sum())
    }

    /// Effective stress of element `e` for damage `d` and thermal strain `eps_th`.
    pub fn effective_stress(&self, u: &[f64], e: usize, d: f64, eps_th: f64) -> [f64; 3] {
        let eps = self.element_strain(u, e);
        let mech = [eps[0] - eps_th, eps[1] - eps_th, eps[2]];
        mat3_vec(&self.d_e, mech).map(|s| (1.0 - d) * s)
    }

    fn scale(&self, d: f64) -> f64 {
        (1.0 - d).max(self.options.residual_stiffness)
    }

    fn factor(&mut self, scales: &[f64]) -> Result<(), MechanicsError> {
        if self.cache.as_ref().is_some_and(|c| c.scales == scales) {
            return Ok(());
        }
        let mesh = self.mesh;
        let d_e = self.d_e;
        let locals = self.options.execution.map_range(mesh.element_count(), |e| {
            let g = &mesh.geometry()[e];
            let b = strain_operator(&g.gradients);
            let mut k = [0.0; 36];
            for i in 0..6 {
                let db: [f64; 3] = mat3_vec(&d_e, [b[0][i], b[1][i], b[2][i]]);
                for j in 0..6 {
                    let v = b[0][j] * db[0] + b[1][j] * db[1] + b[2][j] * db[2];
                    k[j * 6 + i] = v * g.area * scales[e];
                }
            }
            k
        });
        let mut k = CsrMatrix::zeros(Arc::clone(&self.pattern));
        for (e, ke) in locals.iter().enumerate() {
            k.scatter_element(e, ke);
        }
        let free = k.clone();
        let mut dummy = vec![0.0; k.size()];
        k.apply_dirichlet(&mut dummy, &self.supports);
        let lu = BandedLu::factor(&k)?;
        self.cache = Some(CachedFactor { scales: scales.to_vec(), free, lu });
        Ok(())
    }

    /// Right-hand side for the current damage, before support elimination.
    fn load(&self, eps_th: &[f64], p_p: &[f64], scales: &[f64]) -> Vec<f64> {
        let mesh = self.mesh;
        let (biot, d_e, body) = (self.biot, self.d_e, self.options.body_force);
        let locals = self.options.execution.map_range(mesh.element_count(), |e| {
            let g = &mesh.geometry()[e];
            let b = strain_operator(&g.gradients);
            let th = mat3_vec(&d_e, [eps_th[e], eps_th[e], 0.0]);
            let s = [0, 1, 2].map(|k| biot * p_p[e] * [1.0, 1.0, 0.0][k] + scales[e] * th[k]);
            std::array::from_fn::<f64, 6, _>(|i| {
                g.area * (b[0][i] * s[0] + b[1][i] * s[1] + b[2][i] * s[2] + body[i % 2] / 3.0)
            })
        });
        let mut f = vec![0.0; 2 * mesh.node_count()];
        for (e, fe) in locals.iter().enumerate() {
            let tri = mesh.elements()[e];
            for (k, v) in fe.iter().enumerate() {
                f[2 * tri[k / 2] + k % 2] += v;
            }
        }
        f
    }

    /// Solves the stiffness system for the given element scales, with
    /// prescribed supports eliminated symmetrically.
    fn solve_linear(&mut self, eps_th: &[f64], p_p: &[f64], scales: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        self.factor(scales)?;
        let mut f = self.load(eps_th, p_p, scales);
        let cache = self.cache.as_ref().expect("factor ran");
        cache.free.clone().apply_dirichlet(&mut f, &self.supports);
        Ok(cache.lu.solve(&f)?)
    }

    /// Secant iteration for equilibrium with damage evolution.
    ///
    /// `theta` is nodal [°C], `p_p` per element [Pa]. History from `prev`
    /// never decreases.
    pub fn solve_equilibrium(
        &mut self,
        theta: &[f64],
        theta_ref: f64,
        p_p: &[f64],
        prev: &MechState,
    ) -> Result<(MechState, MechReport), MechanicsError> {
        let mesh = self.mesh;
        let (n_nodes, n_el) = (mesh.node_count(), mesh.element_count());
        for (expected, got) in [(n_nodes, theta.len()), (n_el, p_p.len()), (n_el, prev.kappa.len()), (n_el, prev.d_w.len())] {
            if expected != got {
                return Err(MechanicsError::FieldLength { expected, got });
            }
        }
        let alpha = self.params.alpha;
        let eps_th: Vec<f64> = mesh.centroid_values(theta).iter().map(|t| alpha * (t - theta_ref)).collect();

        let mut d = prev.d_w.clone();
        let mut kappa = prev.kappa.clone();
        let mut u;
        let mut eq_strain;
        let mut iterations = 0;
        let mut change;
        loop {
            iterations += 1;
            let scales: Vec<f64> = d.iter().map(|&x| self.scale(x)).collect();
            u = self.solve_linear(&eps_th, p_p, &scales)?;
            let local = self.options.execution.map_range(n_el, |e| {
                let eps = self.element_strain(&u, e);
                mazars_equivalent_strain([eps[0] - eps_th[e], eps[1] - eps_th[e], eps[2]])
            });
            eq_strain = self.averager.average(&local, self.options.execution);
            if !self.options.damage_enabled {
                change = 0.0;
                break;
            }
            kappa = prev.kappa.iter().zip(&eq_strain).map(|(k, e)| k.max(*e)).collect();
            let d_new: Vec<f64> = kappa.iter().map(|&k| damage_function(k, &self.params).max(0.0)).collect();
            let d_new: Vec<f64> = d_new.iter().zip(&prev.d_w).map(|(a, b)| a.max(*b)).collect();
            change = d_new.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            d = d_new;
            if change < self.options.damage_tol || iterations >= self.options.max_iter {
                break;
            }
        }
        let converged = change < self.options.damage_tol;
        let state = MechState { u, kappa, d_w: d };
        Ok((state, MechReport { iterations, converged, max_damage_change: change, eq_strain }))
    }
}
