//! Under-relaxed fixed-point iteration for systems `A(r) r = b(r)`.

use serde::{Deserialize, Serialize};

use super::TransportError;
use crate::linalg::{BandedLu, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub relax: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50, relax: 0.7 }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<(), TransportError> {
        if !(self.tol > 0.0) {
            return Err(TransportError::InvalidOptions(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.relax > 0.0 && self.relax <= 1.0) {
            return Err(TransportError::InvalidOptions(format!(
                "relaxation factor must lie in (0, 1], got {}",
                self.relax
            )));
        }
        if self.max_iter == 0 {
            return Err(TransportError::InvalidOptions("at least one iteration is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub r: Vec<f64>,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Relative residual of each assembled iterate.
    pub residuals: Vec<f64>,
}

/// Largest over the interleaved components of `|a_c| / max(|b_c|, floor)`.
fn blockwise_ratio(a: &[f64], b: &[f64], c: &[f64], ndof: usize) -> f64 {
    (0..ndof)
        .map(|comp| {
            let sq = |v: &[f64]| v.iter().skip(comp).step_by(ndof).map(|x| x * x).sum::<f64>().sqrt();
            let scale = sq(b).max(sq(c)).max(1e-300);
            sq(a) / scale
        })
        .fold(0.0, f64::max)
}

/// Runs `r <- (1-ω) r + ω A(r)^{-1} b(r)` from `guess`.
///
/// Converged when the blockwise relative increment or the blockwise
/// relative residual of a freshly assembled system drops below `tol`.
/// `project` is applied to every new iterate, e.g. to clamp bounded fields.
pub fn nonlinear_iterate<B, P>(
    mut build: B,
    guess: Vec<f64>,
    ndof: usize,
    options: &PicardOptions,
    project: P,
) -> Result<PicardOutcome, TransportError>
where
    B: FnMut(&[f64]) -> Result<(CsrMatrix, Vec<f64>), TransportError>,
    P: Fn(&mut [f64]),
{
    options.validate()?;
    let mut r = guess;
    let mut residuals = Vec::new();
    let mut iterations = 0;
    loop {
        let (a, b) = build(&r)?;
        let ar = a.mul_vec(&r);
        let res: Vec<f64> = ar.iter().zip(&b).map(|(x, y)| x - y).collect();
        let rel = blockwise_ratio(&res, &b, &ar, ndof);
        residuals.push(rel);
        if !rel.is_finite() {
            return Err(TransportError::Diverged { iteration: iterations, residual: rel });
        }
        if iterations > 0 && rel < options.tol {
            return Ok(PicardOutcome { r, iterations, residuals });
        }
        let k = residuals.len() - 1;
        if k >= 5 && rel > 10.0 * residuals[k - 5] {
            return Err(TransportError::Diverged { iteration: iterations, residual: rel });
        }
        if iterations == options.max_iter {
            return Err(TransportError::NotConverged { iterations, residual: rel });
        }

        let solution = BandedLu::factor(&a)?.solve(&b)?;
        let w = options.relax;
        let mut next: Vec<f64> = r.iter().zip(&solution).map(|(old, new)| (1.0 - w) * old + w * new).collect();
        project(&mut next);
        iterations += 1;
        let delta: Vec<f64> = next.iter().zip(&r).map(|(x, y)| x - y).collect();
        let increment = blockwise_ratio(&delta, &next, &r, ndof);
        r = next;
        if increment < options.tol {
            return Ok(PicardOutcome { r, iterations, residuals });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Pattern;
    use std::sync::Arc;

    fn pair_pattern() -> Arc<Pattern> {
        Arc::new(Pattern::new(3, &[[0, 1, 2]], 1))
    }

    fn linear_system(pattern: &Arc<Pattern>) -> (CsrMatrix, Vec<f64>) {
        let mut a = CsrMatrix::zeros(pattern.clone());
        for (i, row) in [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]].iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.add(i, j, *v);
            }
        }
        (a, vec![1.0, 2.0, 3.0])
    }

    #[test]
    fn linear_problem_needs_one_solve() {
        let pattern = pair_pattern();
        let opts = PicardOptions { relax: 1.0, ..Default::default() };
        let out = nonlinear_iterate(|_| Ok(linear_system(&pattern)), vec![0.0; 3], 1, &opts, |_| {}).unwrap();
        assert_eq!(out.iterations, 1);
        let (a, b) = linear_system(&pattern);
        let r = a.mul_vec(&out.r);
        for (x, y) in r.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_bounds_are_enforced() {
        let pattern = pair_pattern();
        for relax in [0.0, -0.5, 1.5] {
            let opts = PicardOptions { relax, ..Default::default() };
            let r = nonlinear_iterate(|_| Ok(linear_system(&pattern)), vec![0.0; 3], 1, &opts, |_| {});
            assert!(matches!(r, Err(TransportError::InvalidOptions(_))));
        }
    }

    #[test]
    fn scalar_nonlinear_equation() {
        // (1 + x^2) x = 2 has the root x = 1.
        let pattern = Arc::new(Pattern::new(3, &[[0, 1, 2]], 1));
        let opts = PicardOptions::default();
        let build = |r: &[f64]| {
            let mut a = CsrMatrix::zeros(pattern.clone());
            for i in 0..3 {
                a.add(i, i, 1.0 + r[i] * r[i]);
            }
            Ok((a, vec![2.0; 3]))
        };
        let out = nonlinear_iterate(build, vec![0.5; 3], 1, &opts, |_| {}).unwrap();
        assert!(out.r.iter().all(|x| (x - 1.0).abs() < 1e-5));
        assert!(out.iterations < 50);
    }

    #[test]
    fn iteration_limit_reports_residual() {
        let pattern = Arc::new(Pattern::new(3, &[[0, 1, 2]], 1));
        let opts = PicardOptions { max_iter: 2, relax: 0.1, tol: 1e-12 };
        let build = |r: &[f64]| {
            let mut a = CsrMatrix::zeros(pattern.clone());
            for i in 0..3 {
                a.add(i, i, 1.0 + r[i] * r[i]);
            }
            Ok((a, vec![2.0; 3]))
        };
        match nonlinear_iterate(build, vec![0.0; 3], 1, &opts, |_| {}) {
            Err(TransportError::NotConverged { iterations: 2, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
