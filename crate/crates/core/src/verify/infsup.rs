use nalgebra::{DMatrix, DVector};

use crate::assembly::norms::{NormMatrices, VelocityNorm};
use crate::assembly::{assemble_b, assemble_constraints, Discretization};
use crate::error::{Error, Result};
use crate::solver::CsrMatrix;

/// Largest velocity space handled by the dense estimate.
pub const MAX_DENSE_VELOCITY_DOFS: usize = 8000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfSupMode {
    /// `b_h` over `V_h x (Q_h0 x X_h0)` with `|.|_{1,h}` and `|(q, mu)|`.
    Full,
    /// Divergence pairing over the velocity space with zero boundary values
    /// and the pressure space alone.
    PressureOnly,
}

fn dense_block(a: &CsrMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let mut col_pos = vec![usize::MAX; a.ncols()];
    for (j, &c) in cols.iter().enumerate() {
        col_pos[c] = j;
    }
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (c, v) in a.row(r) {
            if col_pos[c] != usize::MAX {
                out[(i, col_pos[c])] += v;
            }
        }
    }
    out
}

/// Basis of `{x : w . x = 0}` as columns.
fn null_basis(w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let p = (0..n).max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs())).unwrap_or(0);
    let mut z = DMatrix::zeros(n, n - 1);
    for (col, i) in (0..n).filter(|&i| i != p).enumerate() {
        z[(i, col)] = 1.0;
        z[(p, col)] = -w[i] / w[p];
    }
    z
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// Smallest eigenvalue of `S x = t M x` with `M` symmetric positive definite.
fn smallest_generalized_eigenvalue(s: DMatrix<f64>, m: DMatrix<f64>) -> Result<f64> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("norm Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("norm Gram factor is singular".into()))?;
    let c = &linv * s * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().min())
}

/// Dense estimate of the discrete inf-sup constant
/// `inf_{(q,mu)} sup_v b_h(v,(q,mu)) / (|v|_{1,h} |(q,mu)|)`.
pub fn infsup_estimate(disc: &Discretization, mode: InfSupMode) -> Result<f64> {
    let layout = disc.layout();
    let nv = layout.velocity_len();
    if nv > MAX_DENSE_VELOCITY_DOFS {
        return Err(Error::TooLargeForDense(nv, MAX_DENSE_VELOCITY_DOFS));
    }
    let norms = NormMatrices::new(disc)?;
    let b = assemble_b(disc)?.to_csr();
    let constraints = assemble_constraints(disc)?.to_csr();
    let np = layout.pressure_len();
    let nm = layout.multiplier_len();
    let p_cols: Vec<usize> = (layout.pressure_offset()..layout.pressure_offset() + np).collect();
    let m_cols: Vec<usize> = (layout.multiplier_offset()..layout.multiplier_offset() + nm).collect();
    let p_mean: Vec<f64> = p_cols.iter().map(|&c| constraints.get(layout.alpha(), c)).collect();

    let (rows, cols, gram, flux): (Vec<usize>, Vec<usize>, _, Option<DVector<f64>>) = match mode {
        InfSupMode::Full => {
            let rows: Vec<usize> = (0..nv).collect();
            let gram = dense_block(&norms.velocity_gram(VelocityNorm::OneH), &rows, &rows);
            let c = DVector::from_iterator(nv, rows.iter().map(|&r| constraints.get(layout.gamma(), r)));
            let cols = p_cols.iter().chain(&m_cols).copied().collect();
            (rows, cols, gram, Some(c))
        }
        InfSupMode::PressureOnly => {
            let mut boundary = vec![false; layout.n_nodes()];
            let nvert = disc.mesh().vertices().len();
            for e in disc.mesh().boundary_edges() {
                boundary[e.vertices[0]] = true;
                boundary[e.vertices[1]] = true;
                boundary[nvert + e.edge] = true;
            }
            let rows: Vec<usize> = (0..nv).filter(|&d| !boundary[d / 2]).collect();
            let gram = dense_block(&norms.velocity_gram(VelocityNorm::OneH), &rows, &rows);
            (rows, p_cols.clone(), gram, None)
        }
    };
    let bd = dense_block(&b, &rows, &cols);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("velocity Gram matrix is not positive definite".into()))?;
    let x = chol.solve(&bd);
    let mut s = bd.transpose() * &x;
    if let Some(c) = flux {
        let y = chol.solve(&c);
        let by = bd.transpose() * &y;
        s -= &by * by.transpose() / c.dot(&y);
    }

    let pm = dense_block(
        &norms.pressure_mass,
        &(0..np).collect::<Vec<_>>(),
        &(0..np).collect::<Vec<_>>(),
    );
    let zp = null_basis(&p_mean);
    let (z, m) = match mode {
        InfSupMode::Full => {
            let mm = dense_block(
                &norms.multiplier_mass,
                &(0..nm).collect::<Vec<_>>(),
                &(0..nm).collect::<Vec<_>>(),
            );
            let m_mean: Vec<f64> = m_cols.iter().map(|&c| constraints.get(layout.beta(), c)).collect();
            (block_diag(&zp, &null_basis(&m_mean)), block_diag(&pm, &mm))
        }
        InfSupMode::PressureOnly => (zp, pm),
    };
    let sz = z.transpose() * s * &z;
    let mz = z.transpose() * m * &z;
    Ok(smallest_generalized_eigenvalue(sz, mz)?.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_basis_is_orthogonal_to_constraint() {
        let w = [0.5, -2.0, 1.0, 0.25];
        let z = null_basis(&w);
        assert_eq!(z.shape(), (4, 3));
        for j in 0..3 {
            let dot: f64 = (0..4).map(|i| w[i] * z[(i, j)]).sum();
            assert!(dot.abs() < 1e-15);
        }
    }

    #[test]
    fn generalized_eigenvalue_of_diagonal_pencil() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0, 3.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 6.0]));
        let t = smallest_generalized_eigenvalue(s, m).unwrap();
        assert!((t - 0.5).abs() < 1e-14);
    }
}
