//! Dense Hermitian eigensolves and matrix exponentials on top of nalgebra.
//!
//! Most operators in this crate are real symmetric even though they are
//! stored as complex matrices (X, Y², the Bogoliubov number operator and every
//! even function of Y). Those take the real solver, which is several times
//! faster than the complex one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Imaginary parts below this fraction of the largest entry are treated as
/// rounding noise and dropped before a real eigensolve.
const REAL_PATH_REL_TOL: f64 = 1e-13;

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn real_part_if_real(m: &DMatrix<C64>) -> Option<DMatrix<f64>> {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let max_im = m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    if max_im <= REAL_PATH_REL_TOL * scale {
        Some(m.map(|z| z.re))
    } else {
        None
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = match real_part_if_real(m) {
        Some(re) => {
            let se = SymmetricEigen::new(re);
            (
                se.eigenvalues.iter().copied().collect(),
                se.eigenvectors.map(|x| C64::new(x, 0.0)),
            )
        }
        None => {
            let se = SymmetricEigen::new(m.clone());
            (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// Ascending eigenvalues only.
pub(crate) fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let mut values: Vec<f64> = match real_part_if_real(m) {
        Some(re) => re.symmetric_eigenvalues().iter().copied().collect(),
        None => m.symmetric_eigenvalues().iter().copied().collect(),
    };
    values.sort_by(f64::total_cmp);
    values
}

/// Reassemble `V diag(weights) V†`.
pub(crate) fn from_spectrum(vectors: &DMatrix<C64>, weights: &[f64]) -> DMatrix<C64> {
    let mut scaled = vectors.clone();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    &scaled * vectors.adjoint()
}

/// `exp(m)` by scaling and squaring with a Padé approximant.
pub(crate) fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.exp()
}

pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn quad_form(m: &DMatrix<C64>, v: &DVector<C64>) -> C64 {
    v.dotc(&(m * v))
}
