//! Chebyshev polynomial core: Gauss-Chebyshev-Lobatto nodes, forward and
//! inverse transforms on the truncated spectral space, and the
//! differentiation / product matrices acting on coefficient vectors.
//!
//! Everything here is a pure function of its inputs; the types are plain
//! immutable values and safe to share across worker threads.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("truncation order must be at least 1 (got {0})")]
    DegenerateOrder(usize),
    #[error("sample vector must have at least 2 entries (got {0})")]
    TooFewSamples(usize),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("evaluation point {0} outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("spectral order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

/// Truncated Chebyshev expansion: amplitudes of `T_0 .. T_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    /// Wrap a raw coefficient vector (length N+1 for order N).
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() < 2 {
            return Err(SpectralError::TooFewSamples(coeffs.len()));
        }
        if let Some(i) = coeffs
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(SpectralError::NonFiniteSample(i));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Evaluate the truncated expansion at `t` by the Clenshaw recurrence,
    /// stable up to the interval endpoints. `t` may overshoot [-1, 1] by at
    /// most 1e-12 to absorb rounding in coordinate maps.
    pub fn evaluate(&self, t: f64) -> Result<Complex64, SpectralError> {
        if t.abs() > 1.0 + 1e-12 || !t.is_finite() {
            return Err(SpectralError::OutOfDomain(t));
        }
        let t = t.clamp(-1.0, 1.0);
        let mut b1 = Complex64::ZERO;
        let mut b2 = Complex64::ZERO;
        for &a in self.coeffs.iter().skip(1).rev() {
            let b = 2.0 * t * b1 - b2 + a;
            b2 = b1;
            b1 = b;
        }
        Ok(t * b1 - b2 + self.coeffs[0])
    }

    /// Evaluate at several points.
    pub fn evaluate_many(&self, ts: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
        ts.iter().map(|&t| self.evaluate(t)).collect()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Dense operator on a truncated Chebyshev space (order N acts on N+1
/// coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    entries: Array2<Complex64>,
}

impl SpectralMatrix {
    pub fn from_entries(entries: Array2<Complex64>) -> Result<Self, SpectralError> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(SpectralError::OrderMismatch(r, c));
        }
        Ok(Self { entries })
    }

    pub fn order(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn apply(&self, v: &SpectralCoeffs) -> Result<SpectralCoeffs, SpectralError> {
        if v.order() != self.order() {
            return Err(SpectralError::OrderMismatch(v.order(), self.order()));
        }
        let n = self.entries.nrows();
        let mut out = vec![Complex64::ZERO; n];
        for (i, row) in self.entries.rows().into_iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for (a, b) in row.iter().zip(v.coeffs.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
        SpectralCoeffs::new(out)
    }

    pub fn matmul(&self, rhs: &SpectralMatrix) -> Result<SpectralMatrix, SpectralError> {
        if self.order() != rhs.order() {
            return Err(SpectralError::OrderMismatch(self.order(), rhs.order()));
        }
        let n = self.entries.nrows();
        let mut out = Array2::from_elem((n, n), Complex64::ZERO);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[[i, k]];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out[[i, j]] += a * rhs.entries[[k, j]];
                }
            }
        }
        Ok(SpectralMatrix { entries: out })
    }
}

/// Gauss-Chebyshev-Lobatto nodes `cos(pi*j/N)`, j = 0..N, strictly
/// decreasing from +1 to -1.
pub fn cgl_nodes(order: usize) -> Result<Vec<f64>, SpectralError> {
    if order == 0 {
        return Err(SpectralError::DegenerateOrder(0));
    }
    Ok((0..=order)
        .map(|j| {
            // Pin the endpoints and midpoint so the grid is exactly symmetric.
            if 2 * j == order {
                0.0
            } else {
                (PI * j as f64 / order as f64).cos()
            }
        })
        .collect())
}

/// Discrete Chebyshev transform of samples taken at the CGL nodes.
///
/// Interpolatory normalization: the half-weights on both the j = 0 / j = N
/// quadrature nodes *and* on the i = 0 / i = N coefficients make the
/// round trip through [`SpectralCoeffs::evaluate`] exact at the nodes for
/// every input, and the coefficients exact for polynomials of degree <= N.
pub fn chebyshev_forward(samples: &[Complex64]) -> Result<SpectralCoeffs, SpectralError> {
    let n = samples.len();
    if n < 2 {
        return Err(SpectralError::TooFewSamples(n));
    }
    if let Some(i) = samples
        .iter()
        .position(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(SpectralError::NonFiniteSample(i));
    }
    let order = n - 1;
    let mut coeffs = vec![Complex64::ZERO; n];
    let endpoint = |idx: usize| idx == 0 || idx == order;
    for (i, ci) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (j, &f) in samples.iter().enumerate() {
            // cos(pi*i*j/N) with the angle reduced modulo 2*pi before the
            // cosine; i*j can be large and the reduced form loses no accuracy.
            let m = (i * j) % (2 * order);
            let w = (PI * m as f64 / order as f64).cos();
            let quad = if endpoint(j) { 0.5 } else { 1.0 };
            acc += f * (w * quad);
        }
        let norm = if endpoint(i) { 1.0 } else { 2.0 };
        *ci = acc * (norm / order as f64);
    }
    SpectralCoeffs::new(coeffs)
}

/// Differentiation matrix on the truncated spectral space: if `a` holds the
/// coefficients of `f`, then `D a` holds the coefficients of `f'`.
///
/// Entry (i, j) is `2j/c_i` for j > i with i+j odd (c_0 = 2, 1 otherwise),
/// zero elsewhere, so the matrix is strictly upper triangular with a parity
/// checkerboard.
pub fn derivative_matrix(order: usize) -> Result<SpectralMatrix, SpectralError> {
    if order == 0 {
        return Err(SpectralError::DegenerateOrder(0));
    }
    let n = order + 1;
    let mut d = Array2::from_elem((n, n), Complex64::ZERO);
    for i in 0..n {
        let ci = if i == 0 { 2.0 } else { 1.0 };
        // j runs over i+1, i+3, ... : exactly the i+j odd positions.
        for j in (i + 1..n).step_by(2) {
            d[[i, j]] = Complex64::new(2.0 * j as f64 / ci, 0.0);
        }
    }
    Ok(SpectralMatrix { entries: d })
}

/// Product (convolution) matrix of a fixed factor `v`: `C_v a` approximates
/// the coefficients of the pointwise product `v * f` when `a` holds the
/// coefficients of `f`.
///
/// Built from `T_m T_n = (T_{m+n} + T_{|m-n|}) / 2`; sum terms landing on
/// indices above the truncation order are discarded, which is the one
/// source of aliasing error in this module.
pub fn product_matrix(v: &SpectralCoeffs) -> SpectralMatrix {
    let order = v.order();
    let n = order + 1;
    let mut c = Array2::from_elem((n, n), Complex64::ZERO);
    for m in 0..n {
        for (nn, &vn) in v.coeffs.iter().enumerate() {
            let half = 0.5 * vn;
            let plus = m + nn;
            if plus <= order {
                c[[plus, m]] += half;
            }
            let minus = m.abs_diff(nn);
            c[[minus, m]] += half;
        }
    }
    SpectralMatrix { entries: c }
}

/// Identity on the truncated space, convenience for operator assembly.
pub fn identity_matrix(order: usize) -> SpectralMatrix {
    let n = order + 1;
    let mut e = Array2::from_elem((n, n), Complex64::ZERO);
    for i in 0..n {
        e[[i, i]] = Complex64::ONE;
    }
    SpectralMatrix { entries: e }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn coeffs(values: &[f64]) -> SpectralCoeffs {
        SpectralCoeffs::new(values.iter().map(|&v| c(v)).collect()).unwrap()
    }

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn cgl_endpoints_and_midpoints() {
        assert_eq!(cgl_nodes(1).unwrap(), vec![1.0, -1.0]);
        assert_eq!(cgl_nodes(2).unwrap(), vec![1.0, 0.0, -1.0]);
        let n4 = cgl_nodes(4).unwrap();
        let half_sqrt2 = 0.5f64.sqrt();
        let expected = [1.0, half_sqrt2, 0.0, -half_sqrt2, -1.0];
        for (a, b) in n4.iter().zip(expected) {
            assert_relative_eq!(a, &b, max_relative = 1e-15, epsilon = 1e-15);
        }
        assert!(n4.windows(2).all(|w| w[0] > w[1]));
        assert!(matches!(
            cgl_nodes(0),
            Err(SpectralError::DegenerateOrder(0))
        ));
    }

    #[test]
    fn forward_constant_and_linear() {
        let ones = vec![c(1.0); 8];
        let a = chebyshev_forward(&ones).unwrap();
        assert!((a.coeffs()[0] - c(1.0)).norm() < 1e-14);
        assert!(a.coeffs()[1..].iter().all(|v| v.norm() < 1e-14));

        let nodes = cgl_nodes(2).unwrap();
        let t_samples: Vec<_> = nodes.iter().map(|&t| c(t)).collect();
        let a = chebyshev_forward(&t_samples).unwrap();
        assert!(max_abs_diff(a.coeffs(), &[c(0.0), c(1.0), c(0.0)]) < 1e-14);
    }

    #[test]
    fn forward_t2_is_exact_at_full_order() {
        // f(t) = 2t^2 - 1 = T_2 sampled on the N=2 grid.
        let nodes = cgl_nodes(2).unwrap();
        let samples: Vec<_> = nodes.iter().map(|&t| c(2.0 * t * t - 1.0)).collect();
        let a = chebyshev_forward(&samples).unwrap();
        assert!(max_abs_diff(a.coeffs(), &[c(0.0), c(0.0), c(1.0)]) < 1e-14);
    }

    #[test]
    fn forward_rejects_non_finite() {
        let bad = vec![c(1.0), Complex64::new(f64::NAN, 0.0), c(0.0)];
        assert!(matches!(
            chebyshev_forward(&bad),
            Err(SpectralError::NonFiniteSample(1))
        ));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(coeffs(&[0.0, 1.0]).evaluate(0.5).unwrap(), c(0.5));
        assert_eq!(coeffs(&[0.0, 0.0, 1.0]).evaluate(0.5).unwrap(), c(-0.5));
        assert_eq!(coeffs(&[1.0, 1.0, 1.0]).evaluate(1.0).unwrap(), c(3.0));
        assert!(coeffs(&[1.0, 1.0]).evaluate(1.0 + 1e-13).is_ok());
        assert!(coeffs(&[1.0, 1.0]).evaluate(1.1).is_err());
    }

    #[test]
    fn derivative_matrix_examples() {
        let d = derivative_matrix(2).unwrap();
        let t2 = d.apply(&coeffs(&[0.0, 0.0, 1.0])).unwrap();
        assert!(max_abs_diff(t2.coeffs(), &[c(0.0), c(4.0), c(0.0)]) < 1e-15);
        let t1 = d.apply(&coeffs(&[0.0, 1.0, 0.0])).unwrap();
        assert!(max_abs_diff(t1.coeffs(), &[c(1.0), c(0.0), c(0.0)]) < 1e-15);
        let t0 = d.apply(&coeffs(&[1.0, 0.0, 0.0])).unwrap();
        assert!(t0.coeffs().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn derivative_matrix_is_strictly_upper_triangular_odd_parity() {
        let d = derivative_matrix(9).unwrap();
        for i in 0..=9 {
            for j in 0..=9 {
                let entry = d.entries()[[i, j]];
                if j <= i || (i + j) % 2 == 0 {
                    assert_eq!(entry, Complex64::ZERO, "({i},{j}) should vanish");
                } else {
                    assert!(entry.norm() > 0.0, "({i},{j}) should be set");
                }
            }
        }
    }

    #[test]
    fn product_matrix_examples() {
        // v = 1: identity.
        let one = coeffs(&[1.0, 0.0, 0.0]);
        let cv = product_matrix(&one);
        assert_eq!(cv, identity_matrix(2));

        // v = t applied to 1 gives T_1; applied to t gives (T_0 + T_2)/2.
        let t = coeffs(&[0.0, 1.0, 0.0]);
        let ct = product_matrix(&t);
        let p1 = ct.apply(&one).unwrap();
        assert!(max_abs_diff(p1.coeffs(), &[c(0.0), c(1.0), c(0.0)]) < 1e-15);
        let pt = ct.apply(&t).unwrap();
        assert!(max_abs_diff(pt.coeffs(), &[c(0.5), c(0.0), c(0.5)]) < 1e-15);
    }

    /// Independent oracle: monomial-basis polynomial evaluation by Horner.
    fn horner(poly: &[f64], t: f64) -> f64 {
        poly.iter().rev().fold(0.0, |acc, &p| acc * t + p)
    }

    /// Monomial-basis differentiation, the reference for the spectral
    /// derivative test.
    fn horner_derivative(poly: &[f64]) -> Vec<f64> {
        poly.iter()
            .enumerate()
            .skip(1)
            .map(|(k, &p)| k as f64 * p)
            .collect()
    }

    proptest! {
        #[test]
        fn round_trip_reproduces_samples(
            len in 2usize..48,
            seed in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 48)
        ) {
            let samples: Vec<_> = seed.iter().take(len).map(|&(r, i)| Complex64::new(r, i)).collect();
            let a = chebyshev_forward(&samples).unwrap();
            let nodes = cgl_nodes(len - 1).unwrap();
            let back = a.evaluate_many(&nodes).unwrap();
            let scale = samples.iter().map(|s| s.norm()).fold(1.0, f64::max);
            prop_assert!(max_abs_diff(&back, &samples) <= 1e-12 * scale);
        }

        #[test]
        fn spectral_derivative_matches_monomial_oracle(
            deg in 1usize..10,
            poly in proptest::collection::vec(-2.0f64..2.0, 10)
        ) {
            let poly = &poly[..=deg];
            let order = 12;
            let nodes = cgl_nodes(order).unwrap();
            let samples: Vec<_> = nodes.iter().map(|&t| c(horner(poly, t))).collect();
            let a = chebyshev_forward(&samples).unwrap();
            let da = derivative_matrix(order).unwrap().apply(&a).unwrap();
            let dpoly = horner_derivative(poly);
            let scale = poly.iter().map(|p| p.abs()).fold(1.0, f64::max) * order as f64 * order as f64;
            for &t in &nodes {
                let got = da.evaluate(t).unwrap();
                let want = horner(&dpoly, t);
                prop_assert!((got - c(want)).norm() <= 1e-10 * scale);
            }
        }

        #[test]
        fn product_matrix_matches_sampled_product(
            du in 0usize..6,
            dv in 0usize..6,
            pu in proptest::collection::vec(-2.0f64..2.0, 6),
            pv in proptest::collection::vec(-2.0f64..2.0, 6)
        ) {
            // deg(u) + deg(v) <= N: no truncation, C_v is exact.
            let order = du + dv + 1;
            let nodes = cgl_nodes(order).unwrap();
            let u: Vec<_> = nodes.iter().map(|&t| c(horner(&pu[..=du], t))).collect();
            let v: Vec<_> = nodes.iter().map(|&t| c(horner(&pv[..=dv], t))).collect();
            let prod: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * b).collect();

            let cv = product_matrix(&chebyshev_forward(&v).unwrap());
            let got = cv.apply(&chebyshev_forward(&u).unwrap()).unwrap();
            let want = chebyshev_forward(&prod).unwrap();
            let scale = prod.iter().map(|p| p.norm()).fold(1.0, f64::max);
            prop_assert!(max_abs_diff(got.coeffs(), want.coeffs()) <= 1e-10 * scale);
        }

        #[test]
        fn constructors_commute_with_scaling(
            scale_re in -3.0f64..3.0,
            scale_im in -3.0f64..3.0,
            vals in proptest::collection::vec(-2.0f64..2.0, 6)
        ) {
            let s = Complex64::new(scale_re, scale_im);
            let v = coeffs(&vals);
            let x = coeffs(&[0.3, -1.0, 0.25, 0.0, 2.0, -0.5]);

            // D (s x) = s (D x)
            let d = derivative_matrix(v.order()).unwrap();
            let lhs = d.apply(&x.scale(s)).unwrap();
            let rhs = d.apply(&x).unwrap().scale(s);
            prop_assert!(max_abs_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12 * (1.0 + s.norm()) * 100.0);

            // C_{s v} x = s (C_v x)
            let lhs = product_matrix(&v.scale(s)).apply(&x).unwrap();
            let rhs = product_matrix(&v).apply(&x).unwrap().scale(s);
            prop_assert!(max_abs_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12 * (1.0 + s.norm()) * 100.0);

            // forward(s f) = s forward(f)
            let samples: Vec<Complex64> = vals.iter().map(|&v| c(v)).collect();
            let scaled: Vec<Complex64> = samples.iter().map(|v| v * s).collect();
            let lhs = chebyshev_forward(&scaled).unwrap();
            let rhs = chebyshev_forward(&samples).unwrap().scale(s);
            prop_assert!(max_abs_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12 * (1.0 + s.norm()) * 100.0);
        }
    }

    #[test]
    fn round_trip_at_large_order() {
        // Spot check the longest supported grid rather than sweeping it in
        // the property test.
        let order = 2048;
        let nodes = cgl_nodes(order).unwrap();
        let samples: Vec<_> = nodes
            .iter()
            .enumerate()
            .map(|(j, &t)| Complex64::new((3.0 * t).sin() + 0.01 * j as f64, t * t))
            .collect();
        let a = chebyshev_forward(&samples).unwrap();
        let back = a.evaluate_many(&nodes).unwrap();
        let scale = samples.iter().map(|s| s.norm()).fold(1.0, f64::max);
        assert!(max_abs_diff(&back, &samples) <= 1e-12 * scale);
    }
}
