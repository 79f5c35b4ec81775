use crate::error::{Error, Result};
use crate::{CMatrix, Complex, RMatrix};

const MAX_DIM: usize = 200;
const MAX_SWEEPS: usize = 100;

/// Lower Cholesky factor by the textbook column recurrence.
fn cholesky(m: &RMatrix) -> Result<Vec<Vec<f64>>> {
    let d = m.nrows();
    let mut l = vec![vec![0.0; d]; d];
    for j in 0..d {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("mass pivot {j} is {diag}")));
        }
        let ljj = diag.sqrt();
        l[j][j] = ljj;
        for i in j + 1..d {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / ljj;
        }
    }
    Ok(l)
}

/// Solve `L X = B` in place, column by column.
fn forward(l: &[Vec<f64>], b: &mut [Vec<Complex>]) {
    let d = l.len();
    for col in b.iter_mut() {
        for i in 0..d {
            let mut v = col[i];
            for k in 0..i {
                v -= col[k] * l[i][k];
            }
            col[i] = v / l[i][i];
        }
    }
}

/// Eigenvalues of `K f = β M f` through `C = L⁻¹ K L⁻ᴴ` and cyclic complex
/// Jacobi rotations, sorted ascending.
pub fn eig_reference(k: &CMatrix, m: &RMatrix) -> Result<Vec<f64>> {
    let d = k.nrows();
    if k.ncols() != d || m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidArgument("K and M must be square of equal size".into()));
    }
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "reference eigensolver needs 1..={MAX_DIM} dofs, got {d}"
        )));
    }
    let l = cholesky(m)?;
    // columns of K, then of (L⁻¹K)ᴴ
    let mut cols: Vec<Vec<Complex>> = (0..d).map(|j| (0..d).map(|i| k[(i, j)]).collect()).collect();
    forward(&l, &mut cols);
    let mut rows: Vec<Vec<Complex>> = (0..d)
        .map(|i| (0..d).map(|j| cols[j][i].conj()).collect())
        .collect();
    forward(&l, &mut rows);
    // rows[i][j] = conj(C[i][j])
    let mut a: Vec<Vec<Complex>> = rows
        .iter()
        .map(|r| r.iter().map(|z| z.conj()).collect())
        .collect();
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (a[i][j] + a[j][i].conj());
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
        a[i][i].im = 0.0;
    }

    let total: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum();
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // make a_pq real by rescaling row and column q
                let ph = apq / mag;
                for i in 0..d {
                    a[i][q] *= ph.conj();
                }
                for j in 0..d {
                    a[q][j] *= ph;
                }
                let theta = 0.5 * (2.0 * mag).atan2(a[q][q].re - a[p][p].re);
                let (s, c) = theta.sin_cos();
                for i in 0..d {
                    let (x, y) = (a[i][p], a[i][q]);
                    a[i][p] = x * c - y * s;
                    a[i][q] = x * s + y * c;
                }
                for j in 0..d {
                    let (x, y) = (a[p][j], a[q][j]);
                    a[p][j] = x * c - y * s;
                    a[q][j] = x * s + y * c;
                }
                a[p][q] = Complex::new(0.0, 0.0);
                a[q][p] = Complex::new(0.0, 0.0);
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|i| a[i][i].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_two_by_two() {
        let k = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(2.0, 0.0),
                Complex::new(0.0, 1.0),
                Complex::new(0.0, -1.0),
                Complex::new(2.0, 0.0),
            ],
        );
        let ev = eig_reference(&k, &RMatrix::identity(2, 2)).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_diagonal() {
        let k = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex::new(2.0, 0.0),
            Complex::new(6.0, 0.0),
        ]));
        let m = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let ev = eig_reference(&k, &m).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }
}
