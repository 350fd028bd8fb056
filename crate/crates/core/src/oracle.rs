//! Double-precision reference implementations.
//!
//! Everything the fixed-point pipeline computes has a counterpart here,
//! written independently (cyclic complex Jacobi instead of the hardware's
//! CORDIC two-sided rotations) so that agreement between the two is evidence,
//! not tautology. All comparisons elsewhere are expressed in units of the
//! working format's least significant bit.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::FloatMat;

/// Subtracts each row's mean: the reference centering stage.
pub fn center(x: &FloatMat) -> FloatMat {
    let mut out = x.clone();
    for i in 0..x.rows() {
        let mut mean = Complex64::new(0.0, 0.0);
        for k in 0..x.cols() {
            mean += x.get(i, k);
        }
        mean /= x.cols() as f64;
        for k in 0..x.cols() {
            out.set(i, k, x.get(i, k) - mean);
        }
    }
    out
}

/// Sample covariance `Xc·Xcᴴ / M` of centered data.
pub fn covariance(xc: &FloatMat) -> FloatMat {
    xc.matmul(&xc.hermitian()).scale(1.0 / xc.cols() as f64)
}

/// Eigendecomposition produced by the reference Jacobi solver.
#[derive(Debug, Clone)]
pub struct OracleEvd {
    /// Eigenvalues in diagonal order (unsorted).
    pub eigenvalues: Vec<f64>,
    /// Unitary eigenvector matrix; column `j` pairs with `eigenvalues[j]`.
    pub vectors: FloatMat,
    /// Off-diagonal Frobenius norm after each completed sweep.
    pub off_norm_trace: Vec<f64>,
}

impl OracleEvd {
    /// Eigenvalues sorted descending, with columns permuted to match.
    pub fn sorted_descending(&self) -> (Vec<f64>, FloatMat) {
        let n = self.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.eigenvalues[b].total_cmp(&self.eigenvalues[a]));
        let values = order.iter().map(|&j| self.eigenvalues[j]).collect();
        let vectors = FloatMat::from_fn(n, n, |i, j| self.vectors.get(i, order[j]));
        (values, vectors)
    }
}

/// Off-diagonal Frobenius norm below which a sweep stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Sweep budget; Jacobi converges quadratically, so hitting this is an error.
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation first multiplies row/column `q` by a unit phasor so the
/// `(p, q)` entry becomes real, then applies the real Givens rotation that
/// zeroes it. Eigenvectors accumulate so that `A = V·diag(λ)·Vᴴ`.
pub fn eigendecompose(a: &FloatMat) -> Result<OracleEvd> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigendecomposition needs a square matrix");
    let mut m = a.clone();
    let mut v = FloatMat::identity(n);
    let mut trace = Vec::new();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if m.off_diagonal_norm() < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate_pair(&mut m, &mut v, p, q);
            }
        }
        trace.push(m.off_diagonal_norm());
    }

    let off = m.off_diagonal_norm();
    if off >= JACOBI_TOLERANCE {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off,
        });
    }
    Ok(OracleEvd {
        eigenvalues: (0..n).map(|i| m.get(i, i).re).collect(),
        vectors: v,
        off_norm_trace: trace,
    })
}

/// One two-sided rotation eliminating the `(p, q)` entry.
fn rotate_pair(m: &mut FloatMat, v: &mut FloatMat, p: usize, q: usize) {
    let n = m.rows();
    let b = m.get(p, q);
    if b.norm() == 0.0 {
        return;
    }

    // Phase stage: row q × e^{iβ}, column q × e^{-iβ} makes (p, q) real.
    let beta = b.arg();
    let phasor = Complex64::from_polar(1.0, beta);
    for k in 0..n {
        m.set(q, k, m.get(q, k) * phasor);
    }
    for k in 0..n {
        m.set(k, q, m.get(k, q) * phasor.conj());
    }
    for k in 0..n {
        v.set(k, q, v.get(k, q) * phasor.conj());
    }

    // Real Givens stage on the now-real pivot.
    let r = m.get(p, q).re;
    let phi = 0.5 * (2.0 * r).atan2(m.get(p, p).re - m.get(q, q).re);
    let (s, c) = phi.sin_cos();

    for k in 0..n {
        let mp = m.get(p, k);
        let mq = m.get(q, k);
        m.set(p, k, c * mp + s * mq);
        m.set(q, k, -s * mp + c * mq);
    }
    for k in 0..n {
        let mp = m.get(k, p);
        let mq = m.get(k, q);
        m.set(k, p, c * mp + s * mq);
        m.set(k, q, -s * mp + c * mq);
    }
    for k in 0..n {
        let vp = v.get(k, p);
        let vq = v.get(k, q);
        v.set(k, p, c * vp + s * vq);
        v.set(k, q, -s * vp + c * vq);
    }

    // The pivot is eliminated up to roundoff; pin the structural zeros and
    // the real diagonal so later pivots see a clean Hermitian matrix.
    let sym = 0.5 * (m.get(p, q) + m.get(q, p).conj());
    m.set(p, q, sym);
    m.set(q, p, sym.conj());
    m.set(p, p, Complex64::new(m.get(p, p).re, 0.0));
    m.set(q, q, Complex64::new(m.get(q, q).re, 0.0));
}

/// Whitened covariance `D^{-1/2}·Eᴴ·C·E·D^{-1/2}`.
///
/// Rejects eigenvalues below `floor` relative to the largest: dividing by a
/// vanishing eigenvalue would amplify noise without bound, so the caller gets
/// a [`Error::RankDeficient`] instead of garbage.
pub fn whitened_covariance(
    c: &FloatMat,
    vectors: &FloatMat,
    values: &[f64],
    floor: f64,
) -> Result<FloatMat> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (index, &value) in values.iter().enumerate() {
        if value <= floor * max.max(0.0) {
            return Err(Error::RankDeficient {
                index,
                value,
                floor,
            });
        }
    }
    let n = values.len();
    let inv_sqrt = FloatMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0 / values[i].sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(inv_sqrt
        .matmul(&vectors.hermitian())
        .matmul(c)
        .matmul(vectors)
        .matmul(&inv_sqrt))
}

/// Largest |component| distance of a square matrix from the identity.
pub fn distance_from_identity(m: &FloatMat) -> f64 {
    m.max_component_diff(&FloatMat::identity(m.rows()))
}

/// One standard-normal draw (Box-Muller).
fn gauss(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

/// Haar-like random unitary matrix: modified Gram-Schmidt applied to a
/// complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> FloatMat {
    let a = FloatMat::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let mut q = a;
    for j in 0..n {
        for i in 0..j {
            // proj = ⟨qᵢ, qⱼ⟩
            let mut proj = Complex64::new(0.0, 0.0);
            for k in 0..n {
                proj += q.get(k, i).conj() * q.get(k, j);
            }
            for k in 0..n {
                let val = q.get(k, j) - proj * q.get(k, i);
                q.set(k, j, val);
            }
        }
        let norm: f64 = (0..n).map(|k| q.get(k, j).norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "gram-schmidt hit a degenerate column");
        for k in 0..n {
            let val = q.get(k, j) / norm;
            q.set(k, j, val);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(evd: &OracleEvd) -> FloatMat {
        let n = evd.eigenvalues.len();
        let d = FloatMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(evd.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        evd.vectors.matmul(&d).matmul(&evd.vectors.hermitian())
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> FloatMat {
        let g = FloatMat::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
        g.matmul(&g.hermitian()).scale(1.0 / n as f64)
    }

    #[test]
    fn two_by_two_real_case_has_known_spectrum() {
        let a = FloatMat::from_fn(2, 2, |i, j| {
            Complex64::new(if i == j { 2.0 } else { 1.0 }, 0.0)
        });
        let evd = eigendecompose(&a).unwrap();
        let (vals, _) = evd.sorted_descending();
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_complex_case_has_known_spectrum() {
        // [[1, i], [-i, 1]] has eigenvalues {2, 0}.
        let a = FloatMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, 1.0),
            (1, 0) => Complex64::new(0.0, -1.0),
            _ => Complex64::new(1.0, 0.0),
        });
        let evd = eigendecompose(&a).unwrap();
        let (vals, _) = evd.sorted_descending();
        assert!((vals[0] - 2.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_unitarity_on_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0201);
        for n in [2usize, 3, 4, 8] {
            let a = random_hermitian(n, &mut rng);
            let evd = eigendecompose(&a).unwrap();
            assert!(
                reconstruct(&evd).max_component_diff(&a) < 1e-12,
                "n={n} reconstruction"
            );
            let gram = evd.vectors.hermitian().matmul(&evd.vectors);
            assert!(distance_from_identity(&gram) < 1e-12, "n={n} unitarity");
        }
    }

    #[test]
    fn recovers_a_planted_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x57EC);
        let n = 6;
        let planted: Vec<f64> = (0..n).map(|i| 0.25 + 0.3 * i as f64).collect();
        let u = random_unitary(n, &mut rng);
        let d = FloatMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(planted[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let a = u.matmul(&d).matmul(&u.hermitian());
        let (vals, _) = eigendecompose(&a).unwrap().sorted_descending();
        let mut want = planted.clone();
        want.sort_by(|x, y| y.total_cmp(x));
        for (got, want) in vals.iter().zip(want.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn off_norm_decreases_strictly_until_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xDEC);
        for _ in 0..20 {
            let a = random_hermitian(8, &mut rng);
            let evd = eigendecompose(&a).unwrap();
            assert!(!evd.off_norm_trace.is_empty());
            for w in evd.off_norm_trace.windows(2) {
                assert!(w[1] < w[0], "off-norm must strictly decrease: {w:?}");
            }
            assert!(*evd.off_norm_trace.last().unwrap() < JACOBI_TOLERANCE);
        }
    }

    #[test]
    fn diagonal_input_is_already_converged() {
        let a = FloatMat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new(1.0 + i as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let evd = eigendecompose(&a).unwrap();
        assert!(evd.off_norm_trace.is_empty());
        assert!(distance_from_identity(&evd.vectors) == 0.0);
        assert_eq!(evd.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn centered_rows_have_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xCE);
        let x = FloatMat::from_fn(4, 64, |_, _| {
            Complex64::new(gauss(&mut rng) + 0.3, gauss(&mut rng) - 0.1)
        });
        let xc = center(&x);
        for i in 0..4 {
            let mut mean = Complex64::new(0.0, 0.0);
            for k in 0..64 {
                mean += xc.get(i, k);
            }
            assert!(mean.norm() / 64.0 < 1e-14);
        }
    }

    #[test]
    fn covariance_is_hermitian_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
        let x = FloatMat::from_fn(4, 128, |_, _| {
            Complex64::new(gauss(&mut rng), gauss(&mut rng))
        });
        let c = covariance(&center(&x));
        assert!(c.max_component_diff(&c.hermitian()) < 1e-14);
        let evd = eigendecompose(&c).unwrap();
        for &l in &evd.eigenvalues {
            assert!(l > -1e-12, "covariance eigenvalue {l} negative");
        }
    }

    #[test]
    fn whitening_its_own_decomposition_yields_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x817E);
        let x = FloatMat::from_fn(6, 256, |_, _| {
            Complex64::new(gauss(&mut rng), gauss(&mut rng))
        });
        let c = covariance(&center(&x));
        let evd = eigendecompose(&c).unwrap();
        let w = whitened_covariance(&c, &evd.vectors, &evd.eigenvalues, 1e-8).unwrap();
        assert!(distance_from_identity(&w) < 1e-10);
    }

    #[test]
    fn rank_deficient_covariance_is_rejected() {
        // One source feeding two antennas: rank 1.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5D);
        let s = FloatMat::from_fn(1, 128, |_, _| {
            Complex64::new(gauss(&mut rng), gauss(&mut rng))
        });
        let h = FloatMat::from_fn(2, 1, |i, _| Complex64::new(1.0 + i as f64, 0.5));
        let c = covariance(&center(&h.matmul(&s)));
        let evd = eigendecompose(&c).unwrap();
        let err = whitened_covariance(&c, &evd.vectors, &evd.eigenvalues, 1e-8).unwrap_err();
        match err {
            Error::RankDeficient { value, floor, .. } => {
                assert!(value < floor * evd.eigenvalues.iter().cloned().fold(0.0, f64::max));
            }
            other => panic!("expected RankDeficient, got {other}"),
        }
    }

    #[test]
    fn random_unitary_is_unitary_and_seed_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x11A8);
        for n in [2usize, 4, 8] {
            let u = random_unitary(n, &mut rng);
            let gram = u.hermitian().matmul(&u);
            assert!(distance_from_identity(&gram) < 1e-12, "n={n}");
        }
        let a = random_unitary(4, &mut ChaCha8Rng::seed_from_u64(7));
        let b = random_unitary(4, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a.max_component_diff(&b), 0.0);
    }
}
