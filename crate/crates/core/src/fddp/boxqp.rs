//! Box-constrained quadratic program solved by projected Newton.
//!
//! `min ½ xᵀHx + gᵀx  s.t.  lo ≤ x ≤ hi`. Coordinates with `lo == hi` are
//! eliminated before iterating. A coordinate sitting on a bound is clamped
//! only when the gradient pushes it outward; with an inward gradient it is
//! free.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxQpError {
    /// The free-subspace Hessian is not positive definite.
    NotPositiveDefinite,
}

#[derive(Debug, Clone)]
pub struct BoxQpSolution {
    pub x: DVector<f64>,
    /// Coordinates not clamped at the solution (pinned ones excluded).
    pub free: Vec<usize>,
    /// Cholesky factor of `H` restricted to `free`.
    pub factor: Option<Cholesky<f64, Dyn>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BoxQpSettings {
    pub max_iterations: usize,
    pub min_gradient: f64,
    pub min_relative_improvement: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub min_step: f64,
}

impl Default for BoxQpSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            min_gradient: 1e-12,
            min_relative_improvement: 1e-14,
            armijo: 0.1,
            backtrack: 0.6,
            min_step: 1e-22,
        }
    }
}

fn submatrix(h: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])])
}

fn quadratic(h: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(h * x)) + g.dot(x)
}

pub fn solve_box_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    x0: &DVector<f64>,
    settings: &BoxQpSettings,
) -> Result<BoxQpSolution, BoxQpError> {
    let n = g.len();
    let pinned: Vec<usize> = (0..n).filter(|&i| lo[i] == hi[i]).collect();
    let open: Vec<usize> = (0..n).filter(|&i| lo[i] != hi[i]).collect();

    let mut x = DVector::zeros(n);
    for &i in &pinned {
        x[i] = lo[i];
    }
    if open.is_empty() {
        return Ok(BoxQpSolution {
            x,
            free: Vec::new(),
            factor: None,
            iterations: 0,
        });
    }

    // Reduced problem over the open coordinates.
    let hr = submatrix(h, &open);
    let mut gr = DVector::from_fn(open.len(), |i, _| g[open[i]]);
    for (i, &a) in open.iter().enumerate() {
        for &b in &pinned {
            gr[i] += h[(a, b)] * x[b];
        }
    }
    let lor = DVector::from_fn(open.len(), |i, _| lo[open[i]]);
    let hir = DVector::from_fn(open.len(), |i, _| hi[open[i]]);
    let clamp = |v: &DVector<f64>| v.zip_zip_map(&lor, &hir, |v, l, u| v.max(l).min(u));

    let mut xr = clamp(&DVector::from_fn(open.len(), |i, _| x0[open[i]]));
    let mut value = quadratic(&hr, &gr, &xr);
    let mut old_clamped: Option<Vec<bool>> = None;
    let mut factor: Option<Cholesky<f64, Dyn>> = None;
    let mut free_idx: Vec<usize> = Vec::new();
    let mut iterations = 0;

    for iter in 0..settings.max_iterations {
        iterations = iter + 1;
        let grad = &gr + &hr * &xr;
        let clamped: Vec<bool> = (0..open.len())
            .map(|i| (xr[i] == lor[i] && grad[i] > 0.0) || (xr[i] == hir[i] && grad[i] < 0.0))
            .collect();
        free_idx = (0..open.len()).filter(|&i| !clamped[i]).collect();
        if free_idx.is_empty() {
            factor = None;
            break;
        }
        if old_clamped.as_ref() != Some(&clamped) || factor.is_none() {
            factor = Some(Cholesky::new(submatrix(&hr, &free_idx)).ok_or(BoxQpError::NotPositiveDefinite)?);
        }
        old_clamped = Some(clamped.clone());

        let grad_norm = free_idx.iter().map(|&i| grad[i] * grad[i]).sum::<f64>().sqrt();
        if grad_norm < settings.min_gradient * (1.0 + gr.amax()) {
            break;
        }

        // Newton step on the free set with clamped coordinates held.
        let mut xc = xr.clone();
        for &i in &free_idx {
            xc[i] = 0.0;
        }
        let gc = &gr + &hr * &xc;
        let rhs = DVector::from_fn(free_idx.len(), |k, _| gc[free_idx[k]]);
        let target = factor.as_ref().unwrap().solve(&rhs);
        let mut search = DVector::zeros(open.len());
        for (k, &i) in free_idx.iter().enumerate() {
            search[i] = -target[k] - xr[i];
        }
        let sdotg = search.dot(&grad);
        if sdotg >= 0.0 {
            break;
        }

        let mut step = 1.0;
        let mut accepted = None;
        while step > settings.min_step {
            let cand = clamp(&(&xr + step * &search));
            let v = quadratic(&hr, &gr, &cand);
            if (v - value) / (step * sdotg) > settings.armijo {
                accepted = Some((cand, v));
                break;
            }
            step *= settings.backtrack;
        }
        let Some((cand, v)) = accepted else { break };
        let improvement = value - v;
        xr = cand;
        value = v;
        if improvement <= settings.min_relative_improvement * value.abs().max(1.0) {
            break;
        }
    }

    // Final active set and factor at the returned point.
    let grad = &gr + &hr * &xr;
    let final_free: Vec<usize> = (0..open.len())
        .filter(|&i| !((xr[i] == lor[i] && grad[i] > 0.0) || (xr[i] == hir[i] && grad[i] < 0.0)))
        .collect();
    if final_free != free_idx || (factor.is_none() && !final_free.is_empty()) {
        factor = if final_free.is_empty() {
            None
        } else {
            Some(Cholesky::new(submatrix(&hr, &final_free)).ok_or(BoxQpError::NotPositiveDefinite)?)
        };
    }
    for (i, &a) in open.iter().enumerate() {
        x[a] = xr[i];
    }
    Ok(BoxQpSolution {
        x,
        free: final_free.iter().map(|&i| open[i]).collect(),
        factor,
        iterations,
    })
}
