use faer::{Mat, Side};

pub(crate) fn symmetrize(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Eigenvalues of a symmetric 2×2 matrix `[[a, b], [b, d]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - radius, mean + radius)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let (lo, hi) = sym2_eigenvalues(m[(0, 0)], 0.5 * (m[(1, 0)] + m[(0, 1)]), m[(1, 1)]);
            vec![lo, hi]
        }
        _ => symmetrize(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .unwrap_or_else(|_| vec![f64::NAN; m.nrows()]),
    }
}

pub(crate) fn min_sym_eigenvalue(m: &Mat<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_general_path() {
        let (lo, hi) = sym2_eigenvalues(2.0, 1.0, 2.0);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);

        let m = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { -1.0 });
        let ev = sym_eigenvalues(&m);
        assert!((ev[0] - 0.0).abs() < 1e-12);
        assert!((ev[2] - 3.0).abs() < 1e-12);
    }
}
