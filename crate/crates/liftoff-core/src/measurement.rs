//! The quadratic lifting operator `A(X) = (a_1* X a_1, ..., a_m* X a_m)`, its
//! adjoint `A*(v) = sum_i v_i a_i a_i*`, the Woodbury-accelerated regularized
//! inverse used by the ADMM X1 update, and an empirical probe for the
//! restricted isometry constants.

use faer::{c64, Col, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

use crate::error::{LiftoffError, Result};
use crate::hermitian::{cmod, ComplexVector, HermitianMatrix};
use crate::Field;

/// The m sensing vectors of one problem instance, stored column-wise.
///
/// Immutable after construction; forward/adjoint/solve are pure, so one
/// ensemble can be shared across concurrent solves.
#[derive(Clone, Debug)]
pub struct MeasurementEnsemble {
    d: usize,
    m: usize,
    field: Field,
    /// d x m, column j holds a_j.
    a: Mat<c64>,
    seed: Option<u64>,
}

/// Factorization cache for `(delta I_m + K)` with `K_ij = |<a_i, a_j>|^2`.
///
/// `K = A A*` under the Frobenius pairing, so solving the m x m system gives
/// the d^2-dimensional regularized inverse `(A* A + delta I)^{-1}` exactly via
/// the Woodbury identity. The Gram matrix is shared across refactorizations;
/// only the Cholesky factor is rebuilt when the penalty changes.
#[derive(Clone, Debug)]
pub struct GramCache {
    delta: f64,
    m: usize,
    gram: Arc<Mat<f64>>,
    factor: faer::linalg::solvers::Llt<f64>,
}

/// Empirical restricted-isometry ratios observed by [`MeasurementEnsemble::rip_ratio_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipProbeReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub sample_count: usize,
    pub sparsity: usize,
}

impl GramCache {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    /// Guards against using a cache after the penalty moved on.
    pub fn ensure_delta(&self, expected: f64) -> Result<()> {
        if self.delta == expected {
            Ok(())
        } else {
            Err(LiftoffError::StaleCache {
                cache_delta: self.delta,
                expected,
            })
        }
    }

    /// New cache for a different penalty, reusing the stored Gram matrix.
    pub fn rebuilt(&self, delta: f64) -> Result<GramCache> {
        Self::factorize(Arc::clone(&self.gram), self.m, delta)
    }

    fn factorize(gram: Arc<Mat<f64>>, m: usize, delta: f64) -> Result<GramCache> {
        if !(delta > 0.0) {
            return Err(LiftoffError::InvalidConfig(format!(
                "gram factorization requires delta > 0, got {delta}"
            )));
        }
        let mut shifted = (*gram).clone();
        for i in 0..m {
            shifted[(i, i)] += delta;
        }
        let factor = shifted.llt(Side::Lower).map_err(|_| {
            LiftoffError::FactorizationFailure(format!(
                "cholesky of (delta I + K) failed at delta={delta}, m={m}"
            ))
        })?;
        Ok(GramCache {
            delta,
            m,
            gram,
            factor,
        })
    }
}

impl MeasurementEnsemble {
    /// Builds an ensemble from sensing vectors given as the columns of `a`.
    pub fn from_columns(a: Mat<c64>, field: Field, seed: Option<u64>) -> Result<Self> {
        let (d, m) = (a.nrows(), a.ncols());
        if d == 0 {
            return Err(LiftoffError::InvalidConfig(
                "ensemble dimension d must be at least 1".into(),
            ));
        }
        for j in 0..m {
            for i in 0..d {
                let z = a[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LiftoffError::InvalidConfig(format!(
                        "non-finite entry in sensing vector {j}"
                    )));
                }
                if field == Field::Real && z.im != 0.0 {
                    return Err(LiftoffError::InvalidConfig(format!(
                        "real-field ensemble has nonzero imaginary part in vector {j}"
                    )));
                }
            }
        }
        Ok(Self { d, m, field, a, seed })
    }

    pub fn from_vectors(vectors: &[ComplexVector], field: Field, seed: Option<u64>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(LiftoffError::InvalidConfig(
                "ensemble needs at least one vector; use from_columns for m = 0".into(),
            ));
        }
        let d = vectors[0].nrows();
        for (j, v) in vectors.iter().enumerate() {
            if v.nrows() != d {
                return Err(LiftoffError::DimensionMismatch {
                    context: format!("sensing vector {j} has length {}, expected {d}", v.nrows()),
                });
            }
        }
        let a = Mat::from_fn(d, vectors.len(), |i, j| vectors[j][i]);
        Self::from_columns(a, field, seed)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The d x m matrix whose columns are the sensing vectors.
    pub fn columns(&self) -> &Mat<c64> {
        &self.a
    }

    pub fn vector(&self, j: usize) -> ComplexVector {
        Col::from_fn(self.d, |i| self.a[(i, j)])
    }

    /// Applies the lifting map: component i is `a_i* X a_i`.
    ///
    /// The result is real for Hermitian X; the imaginary residue is checked
    /// against round-off scale in debug builds and discarded.
    pub fn forward_apply(&self, x: &HermitianMatrix) -> Result<Col<f64>> {
        if x.dim() != self.d {
            return Err(LiftoffError::DimensionMismatch {
                context: format!("forward_apply on X of dim {}, ensemble d={}", x.dim(), self.d),
            });
        }
        let t = x.as_mat() * &self.a;
        let mut out = Col::zeros(self.m);
        for j in 0..self.m {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..self.d {
                let aij = self.a[(i, j)];
                let tij = t[(i, j)];
                // conj(a) * t
                re += aij.re * tij.re + aij.im * tij.im;
                im += aij.re * tij.im - aij.im * tij.re;
            }
            debug_assert!(
                im.abs() <= 1e-9 * (re.abs() + x.frobenius_norm() + 1.0),
                "imaginary residue {im} above round-off scale"
            );
            let _ = im;
            out[j] = re;
        }
        Ok(out)
    }

    /// Applies the adjoint map `A*(v) = sum_i v_i a_i a_i*`.
    pub fn adjoint_apply(&self, v: &Col<f64>) -> Result<HermitianMatrix> {
        if v.nrows() != self.m {
            return Err(LiftoffError::DimensionMismatch {
                context: format!("adjoint_apply on v of length {}, ensemble m={}", v.nrows(), self.m),
            });
        }
        let scaled = Mat::from_fn(self.d, self.m, |i, j| {
            let z = self.a[(i, j)];
            c64::new(v[j] * z.re, v[j] * z.im)
        });
        let prod = &scaled * self.a.adjoint();
        HermitianMatrix::from_dense(&prod)
    }

    /// Builds the Gram matrix `K_ij = |<a_i, a_j>|^2` and factorizes
    /// `(delta I + K)`.
    pub fn gram_factorize(&self, delta: f64) -> Result<GramCache> {
        let g = self.a.adjoint() * &self.a;
        let mut k = Mat::<f64>::zeros(self.m, self.m);
        for i in 0..self.m {
            for j in i..self.m {
                let z = g[(i, j)];
                let sq = z.re * z.re + z.im * z.im;
                k[(i, j)] = sq;
                k[(j, i)] = sq;
            }
        }
        GramCache::factorize(Arc::new(k), self.m, delta)
    }

    /// Solves `(A* A + delta I) X = R` through the m x m Woodbury system:
    /// `X = (R - A*((delta I + K)^{-1} A(R))) / delta`.
    pub fn solve_regularized(&self, cache: &GramCache, r: &HermitianMatrix) -> Result<HermitianMatrix> {
        if r.dim() != self.d {
            return Err(LiftoffError::DimensionMismatch {
                context: format!("solve_regularized on R of dim {}, ensemble d={}", r.dim(), self.d),
            });
        }
        if cache.m != self.m {
            return Err(LiftoffError::DimensionMismatch {
                context: format!("gram cache built for m={}, ensemble m={}", cache.m, self.m),
            });
        }
        let inv_delta = 1.0 / cache.delta;
        if self.m == 0 {
            return Ok(r.scale(inv_delta));
        }
        let ar = self.forward_apply(r)?;
        let u = cache.factor.solve(&ar);
        let t = self.adjoint_apply(&u)?;
        Ok(HermitianMatrix::lincomb(&[(inv_delta, r), (-inv_delta, &t)]))
    }

    /// Estimates the operator norm `||A|| = sup { ||A(X)||_2 : ||X||_F = 1 }`
    /// by power iteration on `A* A` over Hermitian matrices. An estimate, not
    /// a certified bound.
    pub fn operator_norm_estimate(&self) -> f64 {
        if self.m == 0 {
            return 0.0;
        }
        let ones = Col::from_fn(self.m, |_| 1.0);
        let mut h = match self.adjoint_apply(&ones) {
            Ok(h) => h,
            Err(_) => return 0.0,
        };
        let n0 = h.frobenius_norm();
        if n0 == 0.0 {
            return 0.0;
        }
        let mut h = h.scale(1.0 / n0);
        let mut prev = 0.0;
        for _ in 0..1000 {
            let fwd = self.forward_apply(&h).expect("dims fixed");
            let t = self.adjoint_apply(&fwd).expect("dims fixed");
            let lam = h.frobenius_inner(&t);
            let tn = t.frobenius_norm();
            if tn == 0.0 {
                return 0.0;
            }
            h = t.scale(1.0 / tn);
            if lam > 0.0 && (lam - prev).abs() <= 1e-6 * lam {
                prev = lam;
                break;
            }
            prev = lam;
        }
        prev.max(0.0).sqrt()
    }

    /// Samples random unit-Frobenius rank-<=2 Hermitian matrices supported on
    /// a common random s x s principal block and records the extremes of
    /// `||A(X)||_1 / m`, the quantity bounded by the restricted isometry
    /// constants.
    pub fn rip_ratio_probe(&self, s: usize, samples: usize, rng_seed: u64) -> RipProbeReport {
        assert!(s >= 1 && s <= self.d, "probe sparsity must satisfy 1 <= s <= d");
        assert!(samples >= 1, "probe needs at least one sample");
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        for _ in 0..samples {
            let (x, y, alpha, beta) = draw_probe_sample(&mut rng, self.d, s, self.field);
            let candidate = HermitianMatrix::lincomb(&[
                (alpha, &HermitianMatrix::from_outer(&x)),
                (beta, &HermitianMatrix::from_outer(&y)),
            ]);
            let nrm = candidate.frobenius_norm();
            assert!(nrm > 0.0, "degenerate probe sample");
            let unit = candidate.scale(1.0 / nrm);
            let fwd = self.forward_apply(&unit).expect("dims fixed");
            let mut l1 = 0.0;
            for i in 0..self.m {
                l1 += fwd[i].abs();
            }
            let ratio = l1 / self.m as f64;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
        }
        RipProbeReport {
            min_ratio,
            max_ratio,
            sample_count: samples,
            sparsity: s,
        }
    }
}

/// One probe draw: two Gaussian vectors on a shared random s-subset and a
/// mixing direction (alpha, beta) uniform on the unit circle, so both
/// definite and indefinite rank-2 combinations are covered.
pub(crate) fn draw_probe_sample(
    rng: &mut ChaCha8Rng,
    d: usize,
    s: usize,
    field: Field,
) -> (ComplexVector, ComplexVector, f64, f64) {
    let mut support: Vec<usize> = rand::seq::index::sample(rng, d, s).into_vec();
    support.sort_unstable();
    let mut draw = |support: &[usize]| -> ComplexVector {
        let mut v = Col::zeros(d);
        for &idx in support {
            v[idx] = gaussian_entry(rng, field);
        }
        v
    };
    let x = draw(&support);
    let y = draw(&support);
    let phi: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    (x, y, phi.cos(), phi.sin())
}

/// One entry of a standard Gaussian vector for the given field: N(0, 1) when
/// real, N(0, 1/2) + i N(0, 1/2) when complex (unit total variance).
pub(crate) fn gaussian_entry(rng: &mut ChaCha8Rng, field: Field) -> c64 {
    match field {
        Field::Real => c64::new(rng.sample(StandardNormal), 0.0),
        Field::Complex => {
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64::new(scale * re, scale * im)
        }
    }
}
