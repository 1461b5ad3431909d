//! Dense Hermitian matrix algebra: the lifted variable type, the two proximal
//! maps used by the inner solver, and the phase-ambiguity-aware distance.

use faer::{c64, Col, Mat, Side};

use crate::error::{LiftoffError, Result};
use crate::Field;

/// Complex column vector (signals and measurement vectors).
pub type ComplexVector = Col<c64>;

/// Entry modulus, per the norm definitions used throughout: sqrt(re^2 + im^2).
#[inline]
pub fn cmod(z: c64) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Trace, Frobenius norm and entrywise l1 norm of a matrix, in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    pub trace: f64,
    pub frobenius: f64,
    pub entrywise_l1: f64,
}

/// A d x d complex Hermitian matrix.
///
/// The conjugate symmetry `entry(i, j) == conj(entry(j, i))` and the realness
/// of the diagonal hold exactly (bitwise), not up to a tolerance: every
/// constructor computes the upper triangle and mirrors it, and all arithmetic
/// goes through the same path.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    data: Mat<c64>,
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues sorted ascending.
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    /// c * I with real c.
    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut data = Mat::zeros(dim, dim);
        for i in 0..dim {
            data[(i, i)] = c64::new(c, 0.0);
        }
        Self { data }
    }

    /// Nearest Hermitian matrix (M + M*) / 2.
    pub fn from_dense(m: &Mat<c64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LiftoffError::DimensionMismatch {
                context: format!("from_dense expects a square matrix, got {}x{}", m.nrows(), m.ncols()),
            });
        }
        let d = m.nrows();
        let mut data = Mat::zeros(d, d);
        for i in 0..d {
            data[(i, i)] = c64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..d {
                let upper = m[(i, j)];
                let lower = m[(j, i)];
                let h = c64::new(0.5 * (upper.re + lower.re), 0.5 * (upper.im - lower.im));
                data[(i, j)] = h;
                data[(j, i)] = h.conj();
            }
        }
        Ok(Self { data })
    }

    /// Rank-one outer product v v*.
    pub fn from_outer(v: &Col<c64>) -> Self {
        let d = v.nrows();
        let mut data = Mat::zeros(d, d);
        for i in 0..d {
            let vi = v[i];
            data[(i, i)] = c64::new(vi.re * vi.re + vi.im * vi.im, 0.0);
            for j in (i + 1)..d {
                let z = vi * v[j].conj();
                data[(i, j)] = z;
                data[(j, i)] = z.conj();
            }
        }
        Self { data }
    }

    /// Real linear combination of Hermitian matrices; Hermitian by construction.
    pub fn lincomb(terms: &[(f64, &HermitianMatrix)]) -> Self {
        assert!(!terms.is_empty(), "lincomb of no terms");
        let d = terms[0].1.dim();
        for (_, t) in terms {
            assert_eq!(t.dim(), d, "lincomb dimension mismatch");
        }
        let mut data = Mat::<c64>::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut acc = c64::new(0.0, 0.0);
                for (c, t) in terms {
                    let z = t.data[(i, j)];
                    acc.re += c * z.re;
                    acc.im += c * z.im;
                }
                if i == j {
                    data[(i, i)] = c64::new(acc.re, 0.0);
                } else {
                    data[(i, j)] = acc;
                    data[(j, i)] = acc.conj();
                }
            }
        }
        Self { data }
    }

    /// In-place update `self += c * (a - b)`, used for the dual ascent steps.
    pub fn add_scaled_diff(&mut self, c: f64, a: &HermitianMatrix, b: &HermitianMatrix) {
        let d = self.dim();
        assert!(a.dim() == d && b.dim() == d, "add_scaled_diff dimension mismatch");
        for i in 0..d {
            for j in i..d {
                let mut z = self.data[(i, j)];
                z.re += c * (a.data[(i, j)].re - b.data[(i, j)].re);
                z.im += c * (a.data[(i, j)].im - b.data[(i, j)].im);
                if i == j {
                    self.data[(i, i)] = c64::new(z.re, 0.0);
                } else {
                    self.data[(i, j)] = z;
                    self.data[(j, i)] = z.conj();
                }
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::lincomb(&[(c, self)])
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> c64 {
        self.data[(i, j)]
    }

    pub fn as_mat(&self) -> &Mat<c64> {
        &self.data
    }

    /// Frobenius inner product <A, B> = Tr(A* B); real for Hermitian operands.
    pub fn frobenius_inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "frobenius_inner dimension mismatch");
        let d = self.dim();
        let mut acc = 0.0;
        for j in 0..d {
            for i in 0..d {
                let a = self.data[(i, j)];
                let b = other.data[(i, j)];
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    pub fn norms(&self) -> MatrixNorms {
        let d = self.dim();
        let mut trace = 0.0;
        let mut fro_sq = 0.0;
        let mut l1 = 0.0;
        for j in 0..d {
            for i in 0..d {
                let z = self.data[(i, j)];
                let sq = z.re * z.re + z.im * z.im;
                fro_sq += sq;
                l1 += sq.sqrt();
            }
            trace += self.data[(j, j)].re;
        }
        MatrixNorms {
            trace,
            frobenius: fro_sq.sqrt(),
            entrywise_l1: l1,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let d = self.dim();
        let mut fro_sq = 0.0;
        for j in 0..d {
            for i in 0..d {
                let z = self.data[(i, j)];
                fro_sq += z.re * z.re + z.im * z.im;
            }
        }
        fro_sq.sqrt()
    }

    /// ||a - b||_F without forming the difference.
    pub fn diff_frobenius(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
        assert_eq!(a.dim(), b.dim(), "diff_frobenius dimension mismatch");
        let d = a.dim();
        let mut fro_sq = 0.0;
        for j in 0..d {
            for i in 0..d {
                let re = a.data[(i, j)].re - b.data[(i, j)].re;
                let im = a.data[(i, j)].im - b.data[(i, j)].im;
                fro_sq += re * re + im * im;
            }
        }
        fro_sq.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        let d = self.dim();
        for j in 0..d {
            for i in 0..d {
                let z = self.data[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return false;
                }
            }
        }
        true
    }

    /// Entrywise soft-thresholding: moduli shrink by `tau`, phases are kept,
    /// entries with modulus below `tau` vanish. Commutes with conjugation, so
    /// the result stays Hermitian.
    pub fn soft_threshold(&self, tau: f64) -> Self {
        assert!(tau >= 0.0, "soft_threshold requires tau >= 0");
        if tau == 0.0 {
            return self.clone();
        }
        let d = self.dim();
        let mut data = Mat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let z = self.data[(i, j)];
                let r = cmod(z);
                if r >= tau && r > 0.0 {
                    let s = (r - tau) / r;
                    let out = c64::new(s * z.re, s * z.im);
                    if i == j {
                        data[(i, i)] = c64::new(out.re, 0.0);
                    } else {
                        data[(i, j)] = out;
                        data[(j, i)] = out.conj();
                    }
                }
            }
        }
        Self { data }
    }

    /// Full eigendecomposition; eigenvalues ascending.
    pub fn eigh(&self) -> Result<Eigh> {
        let d = self.dim();
        let evd = self
            .data
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| LiftoffError::EigFailure { dim: d })?;
        let s = evd.S().column_vector();
        let values: Vec<f64> = (0..d).map(|i| s[i].re).collect();
        Ok(Eigh {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    /// Frobenius-nearest positive semidefinite matrix: eigendecompose and zero
    /// out strictly negative eigenvalues. A matrix that is already PSD is
    /// returned unchanged, so PSD inputs are exact fixed points.
    pub fn psd_project(&self) -> Result<Self> {
        let d = self.dim();
        let eig = self.eigh()?;
        if eig.values.iter().all(|&v| v >= 0.0) {
            return Ok(self.clone());
        }
        let kept: Vec<usize> = (0..d).filter(|&i| eig.values[i] > 0.0).collect();
        if kept.is_empty() {
            return Ok(Self::zeros(d));
        }
        // U_+ diag(lambda_+) U_+^*
        let mut scaled = Mat::<c64>::zeros(d, kept.len());
        let mut basis = Mat::<c64>::zeros(d, kept.len());
        for (c, &k) in kept.iter().enumerate() {
            let lam = eig.values[k];
            for r in 0..d {
                let u = eig.vectors[(r, k)];
                basis[(r, c)] = u;
                scaled[(r, c)] = c64::new(lam * u.re, lam * u.im);
            }
        }
        let prod = &scaled * basis.adjoint();
        Self::from_dense(&prod)
    }

    /// Best rank-one PSD approximation, as the scaled top eigenvector
    /// x = sqrt(lambda_1) u_1, together with the eigengap lambda_2 / lambda_1
    /// (0 when lambda_1 = 0). The output phase is normalized so the
    /// largest-modulus entry of x is real and nonnegative.
    pub fn rank_one_extract(&self) -> Result<(ComplexVector, f64)> {
        let d = self.dim();
        let eig = self.eigh()?;
        let top = eig.values[d - 1];
        if top <= 0.0 {
            return Ok((Col::zeros(d), 0.0));
        }
        let second = if d >= 2 { eig.values[d - 2].max(0.0) } else { 0.0 };
        let gap = second / top;
        let scale = top.sqrt();
        let mut x = Col::<c64>::from_fn(d, |i| {
            let u = eig.vectors[(i, d - 1)];
            c64::new(scale * u.re, scale * u.im)
        });
        // deterministic global phase: rotate the largest-modulus entry onto
        // the nonnegative real axis
        let mut imax = 0;
        let mut best = -1.0;
        for i in 0..d {
            let r = cmod(x[i]);
            if r > best {
                best = r;
                imax = i;
            }
        }
        if best > 0.0 {
            let phase = x[imax] * (1.0 / best);
            let rot = phase.conj();
            for i in 0..d {
                x[i] *= rot;
            }
            x[imax] = c64::new(cmod(x[imax]), 0.0);
        }
        Ok((x, gap))
    }

    #[cfg(debug_assertions)]
    pub(crate) fn debug_check_hermitian(&self) {
        let d = self.dim();
        for i in 0..d {
            assert_eq!(self.data[(i, i)].im, 0.0, "diagonal not real at {i}");
            for j in (i + 1)..d {
                let a = self.data[(i, j)];
                let b = self.data[(j, i)];
                assert!(a.re == b.re && a.im == -b.im, "not Hermitian at ({i},{j})");
            }
        }
    }
}

/// Distance between signals modulo the phase ambiguity group: the sign flip
/// for real signals, the full unimodular circle for complex ones (closed form
/// sqrt(||z||^2 + ||x||^2 - 2 |<z, x>|)).
pub fn phase_aligned_distance(z: &ComplexVector, x: &ComplexVector, field: Field) -> Result<f64> {
    if z.nrows() != x.nrows() {
        return Err(LiftoffError::DimensionMismatch {
            context: format!(
                "phase_aligned_distance on vectors of length {} and {}",
                z.nrows(),
                x.nrows()
            ),
        });
    }
    let d = z.nrows();
    match field {
        Field::Real => {
            let mut minus_sq = 0.0;
            let mut plus_sq = 0.0;
            for i in 0..d {
                let dm = z[i] - x[i];
                let dp = z[i] + x[i];
                minus_sq += dm.re * dm.re + dm.im * dm.im;
                plus_sq += dp.re * dp.re + dp.im * dp.im;
            }
            Ok(minus_sq.min(plus_sq).sqrt())
        }
        Field::Complex => {
            let mut z_sq = 0.0;
            let mut x_sq = 0.0;
            let mut inner = c64::new(0.0, 0.0);
            for i in 0..d {
                z_sq += z[i].re * z[i].re + z[i].im * z[i].im;
                x_sq += x[i].re * x[i].re + x[i].im * x[i].im;
                inner += z[i].conj() * x[i];
            }
            Ok((z_sq + x_sq - 2.0 * cmod(inner)).max(0.0).sqrt())
        }
    }
}

/// l2 norm of a complex vector.
pub fn vec_norm_l2(v: &ComplexVector) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.nrows() {
        acc += v[i].re * v[i].re + v[i].im * v[i].im;
    }
    acc.sqrt()
}

/// l1 norm of a complex vector (sum of entry moduli).
pub fn vec_norm_l1(v: &ComplexVector) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.nrows() {
        acc += cmod(v[i]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let m = Mat::<c64>::from_fn(d, d, |_, _| {
            c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermitianMatrix::from_dense(&m).unwrap()
    }

    fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
        Col::from_fn(d, |_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
    }

    fn assert_exactly_hermitian(h: &HermitianMatrix) {
        for i in 0..h.dim() {
            assert_eq!(h.entry(i, i).im, 0.0);
            for j in 0..h.dim() {
                let a = h.entry(i, j);
                let b = h.entry(j, i);
                assert!(a.re == b.re && a.im == -b.im, "asymmetry at ({i},{j})");
            }
        }
    }

    #[test]
    fn norms_zero_matrix() {
        let n = HermitianMatrix::zeros(3).norms();
        assert_eq!(n.trace, 0.0);
        assert_eq!(n.frobenius, 0.0);
        assert_eq!(n.entrywise_l1, 0.0);
    }

    #[test]
    fn norms_identity() {
        let n = HermitianMatrix::identity(4).norms();
        assert_eq!(n.trace, 4.0);
        assert_eq!(n.frobenius, 2.0);
        assert_eq!(n.entrywise_l1, 4.0);
    }

    #[test]
    fn norms_of_outer_product() {
        // ||xx*||_1 = ||x||_1^2 and Tr(xx*) = ||x||_2^2: expand the outer
        // product entrywise and sum.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_vector(6, &mut rng);
            let n = HermitianMatrix::from_outer(&x).norms();
            let l1 = vec_norm_l1(&x);
            let l2 = vec_norm_l2(&x);
            assert!((n.entrywise_l1 - l1 * l1).abs() <= 1e-12 * l1 * l1);
            assert!((n.trace - l2 * l2).abs() <= 1e-12 * l2 * l2);
            // for PSD matrices trace >= frobenius
            assert!(n.trace >= n.frobenius - 1e-12);
            assert!(n.frobenius <= n.entrywise_l1 + 1e-12);
        }
    }

    #[test]
    fn soft_threshold_tau_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = random_hermitian(5, &mut rng);
        let out = z.soft_threshold(0.0);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(out.entry(i, j), z.entry(i, j));
            }
        }
    }

    #[test]
    fn soft_threshold_scalar_cases() {
        // real entry 2 with tau 0.5 -> 1.5
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = c64::new(2.0, 0.0);
        let h = HermitianMatrix::from_dense(&m).unwrap();
        let out = h.soft_threshold(0.5);
        assert!((out.entry(0, 0).re - 1.5).abs() < 1e-15);

        // complex entry 3 e^{i pi/4} with tau 1 -> 2 e^{i pi/4}
        let phase = c64::new((std::f64::consts::FRAC_PI_4).cos(), (std::f64::consts::FRAC_PI_4).sin());
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = phase * 3.0;
        m[(1, 0)] = (phase * 3.0).conj();
        let h = HermitianMatrix::from_dense(&m).unwrap();
        let out = h.soft_threshold(1.0);
        let want = phase * 2.0;
        assert!(cmod(out.entry(0, 1) - want) < 1e-14);
    }

    #[test]
    fn soft_threshold_matches_scalar_rule_on_grid() {
        // independent scalar evaluation of the definition over a grid of
        // complex entries
        fn scalar_soft(z: c64, tau: f64) -> c64 {
            let r = cmod(z);
            if r >= tau && r > 0.0 {
                z * ((r - tau) / r)
            } else {
                c64::new(0.0, 0.0)
            }
        }
        let mut entries = Vec::new();
        for a in -3..=3 {
            for b in -3..=3 {
                entries.push(c64::new(a as f64 * 0.7, b as f64 * 0.7));
            }
        }
        for (idx, &z) in entries.iter().enumerate() {
            let mut m = Mat::<c64>::zeros(2, 2);
            m[(0, 1)] = z;
            m[(1, 0)] = z.conj();
            m[(0, 0)] = c64::new(entries[(idx + 7) % entries.len()].re, 0.0);
            let h = HermitianMatrix::from_dense(&m).unwrap();
            for tau in [0.1, 0.7, 1.4, 5.0] {
                let out = h.soft_threshold(tau);
                assert!(cmod(out.entry(0, 1) - scalar_soft(z, tau)) < 1e-14);
                assert!(cmod(out.entry(0, 0) - scalar_soft(m[(0, 0)], tau)) < 1e-14);
                // phase preserved, modulus shrunk by tau
                if cmod(z) > tau {
                    assert!((cmod(out.entry(0, 1)) - (cmod(z) - tau)).abs() < 1e-14);
                }
                assert_exactly_hermitian(&out);
            }
        }
    }

    #[test]
    fn soft_threshold_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let a = random_hermitian(4, &mut rng);
            let b = random_hermitian(4, &mut rng);
            let tau: f64 = rng.gen_range(0.0..2.0);
            let da = a.soft_threshold(tau);
            let db = b.soft_threshold(tau);
            let lhs = HermitianMatrix::diff_frobenius(&da, &db);
            let rhs = HermitianMatrix::diff_frobenius(&a, &b);
            assert!(lhs <= rhs + 1e-12, "expansive: {lhs} > {rhs}");
        }
    }

    #[test]
    fn psd_project_fixed_point_on_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_vector(5, &mut rng);
        let y = random_vector(5, &mut rng);
        let psd = HermitianMatrix::lincomb(&[
            (1.0, &HermitianMatrix::from_outer(&x)),
            (0.5, &HermitianMatrix::from_outer(&y)),
        ]);
        let proj = psd.psd_project().unwrap();
        assert!(HermitianMatrix::diff_frobenius(&proj, &psd) <= 1e-12 * psd.frobenius_norm());
    }

    #[test]
    fn psd_project_clamps_negative_eigenvalue() {
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = c64::new(1.0, 0.0);
        m[(1, 1)] = c64::new(-1.0, 0.0);
        let h = HermitianMatrix::from_dense(&m).unwrap();
        let p = h.psd_project().unwrap();
        assert!((p.entry(0, 0).re - 1.0).abs() < 1e-14);
        assert!(p.entry(1, 1).re.abs() < 1e-14);
        assert!(cmod(p.entry(0, 1)) < 1e-14);
    }

    #[test]
    fn psd_project_is_frobenius_nearest() {
        // Monte-Carlo nearest-point oracle: no random PSD matrix may be
        // closer to Z than the projection.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let z = random_hermitian(5, &mut rng);
        let p = z.psd_project().unwrap();
        let d_star = HermitianMatrix::diff_frobenius(&z, &p);
        for _ in 0..1000 {
            let a = random_vector(5, &mut rng);
            let b = random_vector(5, &mut rng);
            let cand = HermitianMatrix::lincomb(&[
                (rng.gen_range(0.0..2.0), &HermitianMatrix::from_outer(&a)),
                (rng.gen_range(0.0..2.0), &HermitianMatrix::from_outer(&b)),
            ]);
            let d = HermitianMatrix::diff_frobenius(&z, &cand);
            assert!(d >= d_star - 1e-10, "candidate beat the projection: {d} < {d_star}");
        }
    }

    #[test]
    fn psd_project_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let z = random_hermitian(6, &mut rng);
            let p1 = z.psd_project().unwrap();
            let p2 = p1.psd_project().unwrap();
            let scale = p1.frobenius_norm().max(1.0);
            assert!(HermitianMatrix::diff_frobenius(&p1, &p2) <= 1e-12 * scale);
        }
    }

    #[test]
    fn hermitian_closure_under_operations() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let a = random_hermitian(6, &mut rng);
            let b = random_hermitian(6, &mut rng);
            assert_exactly_hermitian(&a);
            let c = HermitianMatrix::lincomb(&[(0.3, &a), (-1.7, &b)]);
            assert_exactly_hermitian(&c);
            assert_exactly_hermitian(&c.soft_threshold(0.2));
            assert_exactly_hermitian(&c.psd_project().unwrap());
            let mut d = c.clone();
            d.add_scaled_diff(2.5, &a, &b);
            assert_exactly_hermitian(&d);
        }
    }

    #[test]
    fn phase_distance_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = random_vector(7, &mut rng);
        assert_eq!(phase_aligned_distance(&x, &x, Field::Complex).unwrap(), 0.0);
        for theta in [0.3, 1.2, 4.0] {
            let rot = c64::new(theta.cos(), theta.sin());
            let z = Col::from_fn(7, |i| x[i] * rot);
            let d = phase_aligned_distance(&z, &x, Field::Complex).unwrap();
            assert!(d <= 1e-7 * vec_norm_l2(&x), "rotated copy at distance {d}");
        }
        // real case: sign flip
        let xr: ComplexVector = Col::from_fn(5, |i| c64::new(i as f64 - 2.0, 0.0));
        let neg = Col::from_fn(5, |i| -xr[i]);
        assert_eq!(phase_aligned_distance(&neg, &xr, Field::Real).unwrap(), 0.0);
    }

    #[test]
    fn phase_distance_matches_grid_search() {
        // brute-force minimization over a theta grid of 1e5 points
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let z = random_vector(6, &mut rng);
        let x = random_vector(6, &mut rng);
        let closed = phase_aligned_distance(&z, &x, Field::Complex).unwrap();
        let n = 100_000;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            let rot = c64::new((-theta).cos(), (-theta).sin());
            let mut acc = 0.0;
            for i in 0..6 {
                let dz = z[i] * rot - x[i];
                acc += dz.re * dz.re + dz.im * dz.im;
            }
            best = best.min(acc.sqrt());
        }
        // grid resolution: derivative of the distance is bounded by ||z||
        let tol = vec_norm_l2(&z) * (2.0 * std::f64::consts::PI / n as f64) + 1e-12;
        assert!((closed - best).abs() <= tol, "closed {closed} vs grid {best}");
        assert!(closed <= best + 1e-12);
    }

    #[test]
    fn phase_distance_pseudo_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let a = random_vector(5, &mut rng);
            let b = random_vector(5, &mut rng);
            let c = random_vector(5, &mut rng);
            for field in [Field::Real, Field::Complex] {
                let dab = phase_aligned_distance(&a, &b, field).unwrap();
                let dba = phase_aligned_distance(&b, &a, field).unwrap();
                assert!((dab - dba).abs() <= 1e-12 * (1.0 + dab));
                let dac = phase_aligned_distance(&a, &c, field).unwrap();
                let dcb = phase_aligned_distance(&c, &b, field).unwrap();
                assert!(dab <= dac + dcb + 1e-10, "triangle violated");
            }
            // simultaneous global rotation of both arguments
            let rot = c64::new(0.6f64.cos(), 0.6f64.sin());
            let ar = Col::from_fn(5, |i| a[i] * rot);
            let br = Col::from_fn(5, |i| b[i] * rot);
            let d0 = phase_aligned_distance(&a, &b, Field::Complex).unwrap();
            let d1 = phase_aligned_distance(&ar, &br, Field::Complex).unwrap();
            assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0));
        }
    }

    #[test]
    fn phase_distance_dimension_mismatch() {
        let a: ComplexVector = Col::zeros(3);
        let b: ComplexVector = Col::zeros(4);
        assert!(phase_aligned_distance(&a, &b, Field::Complex).is_err());
    }

    #[test]
    fn rank_one_extract_recovers_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let v = random_vector(6, &mut rng);
        let x = HermitianMatrix::from_outer(&v);
        let (got, gap) = x.rank_one_extract().unwrap();
        assert!(gap.abs() < 1e-12);
        let d = phase_aligned_distance(&got, &v, Field::Complex).unwrap();
        assert!(d <= 1e-7 * vec_norm_l2(&v), "extraction off by {d}");
        // phase convention: largest-modulus entry real and nonnegative
        let mut imax = 0;
        let mut best = -1.0;
        for i in 0..6 {
            if cmod(got[i]) > best {
                best = cmod(got[i]);
                imax = i;
            }
        }
        assert_eq!(got[imax].im, 0.0);
        assert!(got[imax].re >= 0.0);
    }

    #[test]
    fn rank_one_extract_zero_matrix() {
        let (x, gap) = HermitianMatrix::zeros(4).rank_one_extract().unwrap();
        assert_eq!(gap, 0.0);
        assert_eq!(vec_norm_l2(&x), 0.0);
    }

    #[test]
    fn rank_one_extract_two_term_spectrum() {
        // X = vv* + 0.01 ww* with orthonormal v, w: eigengap 0.01, top
        // eigenvector aligned with v.
        let d = 5;
        let mut v: ComplexVector = Col::zeros(d);
        let mut w: ComplexVector = Col::zeros(d);
        v[0] = c64::new(1.0, 0.0);
        w[1] = c64::new(0.0, 1.0);
        let x = HermitianMatrix::lincomb(&[
            (1.0, &HermitianMatrix::from_outer(&v)),
            (0.01, &HermitianMatrix::from_outer(&w)),
        ]);
        let (got, gap) = x.rank_one_extract().unwrap();
        assert!((gap - 0.01).abs() < 1e-12);
        assert!(phase_aligned_distance(&got, &v, Field::Complex).unwrap() < 1e-10);
    }

    #[test]
    fn realness_preserved_through_operations() {
        // real-valued inputs keep exactly zero imaginary parts through the
        // threshold, projection and extraction
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let m = Mat::<c64>::from_fn(8, 8, |_, _| c64::new(rng.sample(StandardNormal), 0.0));
        let h = HermitianMatrix::from_dense(&m).unwrap();
        let assert_real = |h: &HermitianMatrix| {
            for i in 0..h.dim() {
                for j in 0..h.dim() {
                    assert_eq!(h.entry(i, j).im, 0.0);
                }
            }
        };
        assert_real(&h);
        assert_real(&h.soft_threshold(0.3));
        let p = h.psd_project().unwrap();
        assert_real(&p);
        let (x, _) = p.rank_one_extract().unwrap();
        for i in 0..8 {
            assert_eq!(x[i].im, 0.0);
        }
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let h = random_hermitian(10, &mut rng);
        let eig = h.eigh().unwrap();
        // ascending order
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let mut recon = Mat::<c64>::zeros(10, 10);
        for k in 0..10 {
            for i in 0..10 {
                for j in 0..10 {
                    recon[(i, j)] += eig.vectors[(i, k)]
                        * eig.vectors[(j, k)].conj()
                        * eig.values[k];
                }
            }
        }
        let diff = HermitianMatrix::from_dense(&recon).unwrap();
        assert!(HermitianMatrix::diff_frobenius(&diff, &h) <= 1e-12 * h.frobenius_norm());
    }
}
