//! Eigenvalues of a complex Hermitian matrix by cyclic Jacobi rotations.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Sweeps stop once the off-diagonal Frobenius mass drops below this
/// fraction of the total.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

fn off_and_total(a: &DMatrix<Complex64>) -> (f64, f64) {
    let mut off = 0.0;
    let mut total = 0.0;
    for ((i, j), v) in a.iter().enumerate().map(|(idx, v)| ((idx % a.nrows(), idx / a.nrows()), v)) {
        let n = v.norm_sqr();
        total += n;
        if i != j {
            off += n;
        }
    }
    (off.sqrt(), total.sqrt())
}

/// Eigenvalues in ascending order. The input is symmetrised first, so tiny
/// non-Hermitian noise is ignored.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues need a square matrix");
    let n = m.nrows();
    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    for _ in 0..MAX_SWEEPS {
        let (off, total) = off_and_total(&a);
        if off <= OFF_DIAGONAL_TOL * total || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Zeroes `a[p][q]` with the unitary `J = D R`, where `D` rotates the phase
/// of the pivot away and `R` is the real Jacobi rotation.
fn rotate(a: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.nrows();
    let ph_conj = phase.conj();

    // columns: A ← A J
    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * c - arq * ph_conj * s;
        a[(r, q)] = arp * s + arq * ph_conj * c;
    }
    // rows: A ← J^H A
    for col in 0..n {
        let apc = a[(p, col)];
        let aqc = a[(q, col)];
        a[(p, col)] = apc * c - aqc * phase * s;
        a[(q, col)] = apc * s + aqc * phase * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}
