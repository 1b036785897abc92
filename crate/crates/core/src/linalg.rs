//! Small dense complex matrices and a Hermitian eigensolver.
//!
//! Everything here is fixed-size (`N` is 2 or 4 in practice). The 2x2
//! Hermitian spectrum is computed in closed form; larger matrices go
//! through cyclic complex Jacobi rotations. Singular values needed by the
//! mixed-state concurrence come from a one-sided (Hestenes) Jacobi pass,
//! which keeps small singular values accurate to working precision instead
//! of the square-root-of-roundoff you get from eigenvalues of `A A†`.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat<const N: usize> = [[C64; N]; N];

/// Off-diagonal Frobenius norm at which Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn zeros<const N: usize>() -> Mat<N> {
    [[ZERO; N]; N]
}

pub fn identity<const N: usize>() -> Mat<N> {
    let mut m = zeros::<N>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn matmul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint<const N: usize>(a: &Mat<N>) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn conj<const N: usize>(a: &Mat<N>) -> Mat<N> {
    a.map(|row| row.map(|z| z.conj()))
}

pub fn sub<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] -= b[i][j];
        }
    }
    out
}

pub fn add<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn scale<const N: usize>(a: &Mat<N>, s: f64) -> Mat<N> {
    a.map(|row| row.map(|z| z * s))
}

pub fn trace<const N: usize>(a: &Mat<N>) -> C64 {
    (0..N).map(|i| a[i][i]).sum()
}

/// `|v><w|`
pub fn outer<const N: usize>(v: &[C64; N], w: &[C64; N]) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = v[i] * w[j].conj();
        }
    }
    out
}

pub fn mat_vec<const N: usize>(a: &Mat<N>, v: &[C64; N]) -> [C64; N] {
    let mut out = [ZERO; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| a[i][j] * v[j]).sum();
    }
    out
}

/// `<v|w>`
pub fn inner<const N: usize>(v: &[C64; N], w: &[C64; N]) -> C64 {
    v.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr<const N: usize>(v: &[C64; N]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermiticity_defect<const N: usize>(a: &Mat<N>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

pub fn is_finite<const N: usize>(a: &Mat<N>) -> bool {
    a.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// `values` are sorted in decreasing order; column `k` of `vectors` is the
/// unit eigenvector belonging to `values[k]`.
#[derive(Debug, Clone, Copy)]
pub struct Eigh<const N: usize> {
    pub values: [f64; N],
    pub vectors: Mat<N>,
}

impl<const N: usize> Eigh<N> {
    pub fn vector(&self, k: usize) -> [C64; N] {
        std::array::from_fn(|i| self.vectors[i][k])
    }
}

/// Closed-form spectrum of a 2x2 Hermitian matrix, decreasing.
pub fn eigvalsh2(a: &Mat<2>) -> [f64; 2] {
    let mean = 0.5 * (a[0][0].re + a[1][1].re);
    let half_gap = 0.5 * (a[0][0].re - a[1][1].re);
    let r = half_gap.hypot(a[0][1].norm());
    [mean + r, mean - r]
}

/// Eigenvalues of a Hermitian matrix, decreasing. Closed form for `N == 2`.
pub fn eigvalsh<const N: usize>(a: &Mat<N>) -> [f64; N] {
    if N == 2 {
        let m2 = [[a[0][0], a[0][1]], [a[1][0], a[1][1]]];
        let v = eigvalsh2(&m2);
        return std::array::from_fn(|i| v[i]);
    }
    eigh(a).values
}

/// The complex Jacobi rotation that annihilates the `(p, q)` entry of a
/// Hermitian matrix whose relevant entries are `app`, `aqq`, `apq`.
/// Returns `(c, s, phase)` with `phase = e^{-i arg(apq)}` so that the
/// rotation is `J[p][p] = c, J[p][q] = s, J[q][p] = -s·phase, J[q][q] = c·phase`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let phase = (apq / mag).conj();
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase)
}

/// Hermitian eigen-decomposition by cyclic Jacobi rotations.
pub fn eigh<const N: usize>(a: &Mat<N>) -> Eigh<N> {
    let mut m = *a;
    // symmetrize away any roundoff in the input
    for i in 0..N {
        m[i][i] = C64::new(m[i][i].re, 0.0);
        for j in (i + 1)..N {
            let avg = 0.5 * (m[i][j] + m[j][i].conj());
            m[i][j] = avg;
            m[j][i] = avg.conj();
        }
    }
    let mut v = identity::<N>();
    let scale = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if m[p][q].norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(m[p][p].re, m[q][q].re, m[p][q]);
                // m <- m J
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * c - xq * s * phase;
                    row[q] = xp * s + xq * c * phase;
                }
                // m <- J† m
                for k in 0..N {
                    let (xp, xq) = (m[p][k], m[q][k]);
                    m[p][k] = xp * c - xq * s * phase.conj();
                    m[q][k] = xp * s + xq * c * phase.conj();
                }
                m[p][q] = ZERO;
                m[q][p] = ZERO;
                m[p][p] = C64::new(m[p][p].re, 0.0);
                m[q][q] = C64::new(m[q][q].re, 0.0);
                for row in v.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * c - xq * s * phase;
                    row[q] = xp * s + xq * c * phase;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&x, &y| m[y][y].re.total_cmp(&m[x][x].re));
    let values = order.map(|k| m[k][k].re);
    let mut vectors = zeros::<N>();
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..N {
            vectors[i][dst] = v[i][src];
        }
    }
    Eigh { values, vectors }
}

/// Singular values (decreasing) of the `N x K` matrix given by its columns.
///
/// One-sided Jacobi: columns are rotated pairwise until mutually orthogonal,
/// then the singular values are their norms.
pub fn singular_values<const N: usize>(columns: &[[C64; N]]) -> Vec<f64> {
    let mut cols = columns.to_vec();
    let k = cols.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = norm_sqr(&cols[p]);
                let beta = norm_sqr(&cols[q]);
                let gamma = inner(&cols[p], &cols[q]);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..N {
                    let (xp, xq) = (cols[p][i], cols[q][i]);
                    cols[p][i] = xp * c - xq * s * phase;
                    cols[q][i] = xp * s + xq * c * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_hermitian() -> Mat<4> {
        let mut m = [
            [c(2.0, 0.0), c(0.3, -0.1), c(0.0, 0.5), c(-0.2, 0.0)],
            [ZERO, c(1.0, 0.0), c(0.7, 0.2), c(0.1, 0.1)],
            [ZERO, ZERO, c(-0.5, 0.0), c(0.0, -0.3)],
            [ZERO, ZERO, ZERO, c(0.25, 0.0)],
        ];
        for i in 0..4 {
            for j in 0..i {
                m[i][j] = m[j][i].conj();
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs_the_matrix() {
        let a = sample_hermitian();
        let e = eigh(&a);
        let lam = {
            let mut d = zeros::<4>();
            for k in 0..4 {
                d[k][k] = c(e.values[k], 0.0);
            }
            d
        };
        let back = matmul(&matmul(&e.vectors, &lam), &adjoint(&e.vectors));
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - a[i][j]).norm() < 1e-12);
            }
        }
        let gram = matmul(&adjoint(&e.vectors), &e.vectors);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - c(want, 0.0)).norm() < 1e-12);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let tr: f64 = e.values.iter().sum();
        assert!((tr - trace(&a).re).abs() < 1e-12);
    }

    #[test]
    fn closed_form_2x2_matches_jacobi() {
        let a = [[c(0.7, 0.0), c(0.1, -0.2)], [c(0.1, 0.2), c(0.3, 0.0)]];
        let closed = eigvalsh2(&a);
        let iter = eigh(&a).values;
        assert!((closed[0] - iter[0]).abs() < 1e-14);
        assert!((closed[1] - iter[1]).abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_is_untouched() {
        let mut a = zeros::<4>();
        for (k, v) in [0.1, 0.4, 0.2, 0.3].iter().enumerate() {
            a[k][k] = c(*v, 0.0);
        }
        assert_eq!(eigh(&a).values, [0.4, 0.3, 0.2, 0.1]);
    }

    #[test]
    fn singular_values_keep_tiny_values_tiny() {
        // rank one up to a 1e-9 perturbation in one column
        let u = [c(0.6, 0.0), c(0.0, 0.8), ZERO, ZERO];
        let cols = [u, [u[0] * 1e-9, u[1] * 1e-9, c(0.0, 0.0), ZERO]];
        let sv = singular_values(&cols);
        assert!((sv[0] - (1.0f64 + 1e-18).sqrt()).abs() < 1e-15);
        assert!(sv[1] < 1e-20, "{}", sv[1]);
    }

    #[test]
    fn singular_values_of_unitary_columns_are_one() {
        let e = eigh(&sample_hermitian());
        let cols: Vec<[C64; 4]> = (0..4).map(|k| e.vector(k)).collect();
        for s in singular_values(&cols) {
            assert!((s - 1.0).abs() < 1e-13);
        }
    }
}
