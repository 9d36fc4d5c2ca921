//! Complex dense linear algebra for Liouvillian dynamics.
//!
//! Density matrices are vectorized by column stacking (column `j` of `rho`
//! occupies entries `j*d..j*d+d`), so a map `rho -> A rho B` becomes
//! `B^T kron A` on the vectorized state. Rates and energies are in GHz
//! (inverse nanoseconds, `hbar = 1`); times are in nanoseconds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Element-wise absolute tolerance for matrix equality.
pub const EQ_TOL: f64 = 1e-12;
/// Hermiticity tolerance for density matrices.
pub const HERM_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor below which a density matrix counts as non-positive.
pub const EIG_FLOOR: f64 = -1e-8;
/// Liouvillian eigenvalues with modulus below this (GHz) count as null.
pub const NULL_TOL: f64 = 1e-6;

/// `true` if `a` and `b` agree element-wise within `tol`.
pub fn mats_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.nrows() == b.nrows()
        && a.ncols() == b.ncols()
        && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
}

/// Matrix unit `|to><from|` in a `d`-dimensional space.
pub fn matrix_unit(dim: usize, to: usize, from: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

/// Column-stack a square matrix into a length-`d^2` vector.
///
/// nalgebra stores matrices column-major, so this is a bit-exact copy and
/// `unvectorize(vectorize(m), d) == m` holds exactly.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &ComplexVector, dim: usize) -> ComplexMatrix {
    assert_eq!(v.len(), dim * dim, "vector length must be dim^2");
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut eigs: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// A physical state: Hermitian, unit trace, positive semidefinite at desk
/// tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix. Hermiticity and trace are checked at
    /// 1e-10, eigenvalues must stay above −1e-8.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim == 0 {
            return Err(Error::InvalidDensity("matrix must be square".into()));
        }
        let herm_dev = max_abs_diff(&matrix, &matrix.adjoint());
        if herm_dev > HERM_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max deviation {herm_dev:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < EIG_FLOOR {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { dim, matrix })
    }

    /// Pure-state projector `|level><level|`.
    pub fn pure(dim: usize, level: usize) -> Self {
        assert!(level < dim);
        Self {
            dim,
            matrix: matrix_unit(dim, level, level),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Population of basis level `i`.
    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }
}

/// A `d^2 x d^2` Liouvillian acting on vectorized density matrices, GHz units.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "superoperator for dim {dim} must be {0}x{0}",
                dim * dim
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        &self.matrix * v
    }
}

/// Assemble the Liouvillian of `drho/dt = -i[H, rho] + sum_j gamma_j
/// (L_j rho L_j^dag - {L_j^dag L_j, rho}/2)` with `H = sum_h omega_h H_h`.
///
/// All operators must be `dim x dim`; rates must be nonnegative and finite.
pub fn liouvillian_from_parts(
    dim: usize,
    hamiltonian: &[(&ComplexMatrix, f64)],
    lindblad: &[(&ComplexMatrix, f64)],
) -> Result<Superoperator> {
    let d2 = dim * dim;
    let id = ComplexMatrix::identity(dim, dim);
    let mut lv = ComplexMatrix::zeros(d2, d2);

    let check = |m: &ComplexMatrix, rate: f64| -> Result<()> {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimMismatch(format!(
                "operator is {}x{}, model dimension is {dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidInput(format!("rate {rate} must be >= 0")));
        }
        Ok(())
    };

    let mut h_total = ComplexMatrix::zeros(dim, dim);
    for (h, omega) in hamiltonian {
        check(h, *omega)?;
        h_total += h.scale(*omega);
    }
    // -i[H, rho]  ->  -i (I kron H - H^T kron I)
    let comm = id.kronecker(&h_total) - h_total.transpose().kronecker(&id);
    lv += comm * C64::new(0.0, -1.0);

    for (l, gamma) in lindblad {
        check(l, *gamma)?;
        if *gamma == 0.0 {
            continue;
        }
        let ldl = l.adjoint() * *l;
        // L rho L^dag  ->  conj(L) kron L
        let jump = l.conjugate().kronecker(l);
        let anti = id.kronecker(&ldl) + ldl.transpose().kronecker(&id);
        lv += (jump - anti.scale(0.5)).scale(*gamma);
    }

    Superoperator::new(dim, lv)
}

const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant. The dimensions here never exceed 16x16, so the fixed
/// high-order form is used unconditionally.
pub fn matrix_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimMismatch("matrix_exp needs a square matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in matrix_exp".into()));
    }
    let norm = one_norm(m);
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(s));

    let id = ComplexMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &PADE13_B;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);

    let q = &v - &u;
    let p = &v + &u;
    let mut f = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))?;
    for _ in 0..s {
        f = &f * &f;
    }
    Ok(f)
}

/// Evolve `rho0` for `t` nanoseconds: `unvectorize(exp(Lv t) |rho0>)`.
pub fn propagate(lv: &Superoperator, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time {t} must be >= 0")));
    }
    if rho0.dim() != lv.dim() {
        return Err(Error::DimMismatch("state and Liouvillian dimensions differ".into()));
    }
    let e = matrix_exp(&lv.matrix().scale(t))?;
    let v = &e * vectorize(rho0.matrix());
    DensityMatrix::new(unvectorize(&v, lv.dim()))
}

/// Steady state of a Liouvillian, with a degeneracy flag when the null
/// space has more than one dimension.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub degenerate: bool,
}

/// Null-space steady state. Eigenvalues with `|lambda| < 1e-6` GHz count as
/// null; if several do, the trace-normalized Hermitian combination of the
/// null basis is returned and flagged degenerate.
pub fn steady_state(lv: &Superoperator) -> Result<SteadyState> {
    let dim = lv.dim();
    let d2 = dim * dim;
    let schur = lv
        .matrix()
        .clone()
        .try_schur(1e-13, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let t = schur.unpack().1;
    let n_null = (0..d2).filter(|&i| t[(i, i)].norm() < NULL_TOL).count();
    if n_null == 0 {
        return Err(Error::NoSteadyState(
            "no Liouvillian eigenvalue within 1e-6 of zero".into(),
        ));
    }

    // Null basis from the right singular vectors of the smallest singular
    // values; combine minimally in norm subject to unit trace.
    let svd = lv.matrix().clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right vectors".into()))?;
    let null_vecs: Vec<ComplexVector> = (d2 - n_null..d2)
        .map(|r| v_t.row(r).adjoint())
        .collect();
    let traces: Vec<C64> = null_vecs
        .iter()
        .map(|k| (0..dim).map(|j| k[j * dim + j]).sum())
        .collect();
    let weight: f64 = traces.iter().map(|t| t.norm_sqr()).sum();
    if weight < 1e-12 {
        return Err(Error::NoSteadyState(
            "null space contains no trace-class state".into(),
        ));
    }
    let mut combo = ComplexVector::zeros(d2);
    for (k, tr) in null_vecs.iter().zip(&traces) {
        combo += k * (tr.conj() / weight);
    }

    let residual = lv.apply(&combo).norm();
    if residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "steady-state residual {residual:.3e} exceeds 1e-8"
        )));
    }

    let raw = unvectorize(&combo, dim);
    let herm = (&raw + raw.adjoint()).scale(0.5);
    let tr = herm.trace();
    let rho = DensityMatrix::new(herm * (C64::new(1.0, 0.0) / tr))?;
    Ok(SteadyState {
        rho,
        degenerate: n_null > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_minus() -> ComplexMatrix {
        // basis order (e, g)
        matrix_unit(2, 1, 0)
    }

    fn sigma_x() -> ComplexMatrix {
        matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&a + a.adjoint()).scale(0.5)
    }

    fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let p = &a * a.adjoint();
        let tr = p.trace();
        DensityMatrix::new(p * (c(1.0, 0.0) / tr)).unwrap()
    }

    #[test]
    fn vectorize_diagonal() {
        let half = ComplexMatrix::identity(2, 2).scale(0.5);
        let v = vectorize(&half);
        assert_eq!(v.as_slice(), &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
    }

    #[test]
    fn vectorize_excited_projector() {
        let rho = DensityMatrix::pure(2, 0); // |e><e| with basis (e, g)
        let v = vectorize(rho.matrix());
        assert_eq!(v.as_slice(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = if seed % 2 == 0 { 2 } else { 4 };
            let m = random_hermitian(dim, &mut rng);
            let back = unvectorize(&vectorize(&m), dim);
            prop_assert_eq!(m, back); // bit-exact
        }
    }

    #[test]
    fn liouvillian_empty_model_is_zero() {
        let lv = liouvillian_from_parts(2, &[], &[]).unwrap();
        assert!(lv.matrix().iter().all(|z| z.norm() == 0.0));
        assert_eq!(lv.matrix().nrows(), 4);
    }

    #[test]
    fn liouvillian_decay_spectrum() {
        // d=2 sigma_minus at gamma=1: eigenvalues {0, -1, -0.5, -0.5} GHz,
        // checked against the dense eigensolver.
        let sm = sigma_minus();
        let lv = liouvillian_from_parts(2, &[], &[(&sm, 1.0)]).unwrap();
        let t = lv.matrix().clone().try_schur(1e-13, 10_000).unwrap().unpack().1;
        let mut eigs: Vec<f64> = (0..4).map(|i| t[(i, i)].re).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, -0.5, -0.5, 0.0];
        for (e, x) in eigs.iter().zip(expected) {
            assert!((e - x).abs() < 1e-10, "eig {e} vs {x}");
        }
        assert!((0..4).all(|i| t[(i, i)].im.abs() < 1e-10));
    }

    #[test]
    fn liouvillian_hamiltonian_only_is_antihermitian() {
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.7)], &[]).unwrap();
        // anti-Hermitian in the Hilbert-Schmidt sense: purely imaginary spectrum
        let t = lv.matrix().clone().try_schur(1e-13, 10_000).unwrap().unpack().1;
        for i in 0..4 {
            assert!(t[(i, i)].re.abs() < 1e-10);
        }
        assert!(mats_close(&lv.matrix().adjoint(), &lv.matrix().scale(-1.0), 1e-12));
    }

    #[test]
    fn liouvillian_rejects_dim_mismatch() {
        let sm = sigma_minus();
        let err = liouvillian_from_parts(4, &[], &[(&sm, 1.0)]);
        assert!(matches!(err, Err(Error::DimMismatch(_))));
    }

    #[test]
    fn trace_preservation_structure() {
        // for any vectorized Hermitian rho, Tr(unvec(Lv |rho>)) = 0
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sm = sigma_minus();
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.4)], &[(&sm, 1.3)]).unwrap();
        for _ in 0..20 {
            let rho = random_hermitian(2, &mut rng);
            let out = unvectorize(&lv.apply(&vectorize(&rho)), 2);
            assert!(out.trace().norm() < 1e-10);
        }
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        let e = matrix_exp(&z).unwrap();
        assert!(mats_close(&e, &ComplexMatrix::identity(3, 3), 1e-15));
    }

    #[test]
    fn expm_diagonal() {
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            c(-1.0, 0.0),
            c(-2.0, 0.0),
        ]));
        let e = matrix_exp(&m).unwrap();
        assert!((e[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)].re - (-2.0f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_antihermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let h = random_hermitian(16, &mut rng);
            let m = h * c(0.0, 1.0);
            let e = matrix_exp(&m).unwrap();
            let should_be_id = &e * e.adjoint();
            assert!(mats_close(&should_be_id, &ComplexMatrix::identity(16, 16), 1e-9));
        }
    }

    #[test]
    fn expm_matches_taylor_for_unit_norm() {
        // 30-term Taylor reference, spectral norm <= 1
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut m = ComplexMatrix::from_fn(6, 6, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let norm = one_norm(&m);
            m = m.scale(0.9 / norm);
            let e = matrix_exp(&m).unwrap();
            let mut taylor = ComplexMatrix::identity(6, 6);
            for k in (1..=30).rev() {
                taylor = ComplexMatrix::identity(6, 6) + (&m * taylor).scale(1.0 / k as f64);
            }
            let rel = max_abs_diff(&e, &taylor) / one_norm(&taylor);
            assert!(rel <= 1e-11, "relative error {rel:.3e}");
        }
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(matrix_exp(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn propagate_zero_time_is_identity() {
        let sm = sigma_minus();
        let lv = liouvillian_from_parts(2, &[], &[(&sm, 1.0)]).unwrap();
        let rho0 = DensityMatrix::pure(2, 0);
        let rho = propagate(&lv, &rho0, 0.0).unwrap();
        assert!(mats_close(rho.matrix(), rho0.matrix(), 1e-15));
    }

    #[test]
    fn propagate_decay_matches_analytic() {
        let sm = sigma_minus();
        let lv = liouvillian_from_parts(2, &[], &[(&sm, 1.0)]).unwrap();
        let rho0 = DensityMatrix::pure(2, 0);
        let rho = propagate(&lv, &rho0, 1.0).unwrap();
        assert!((rho.population(0) - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn propagate_rejects_negative_time() {
        let lv = Superoperator::zero(2);
        let rho0 = DensityMatrix::pure(2, 0);
        assert!(propagate(&lv, &rho0, -0.1).is_err());
    }

    #[test]
    fn propagate_preserves_trace_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let sm = sigma_minus();
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.8)], &[(&sm, 0.6)]).unwrap();
        for _ in 0..10 {
            let rho0 = random_density(2, &mut rng);
            let rho = propagate(&lv, &rho0, 10.0).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sm = sigma_minus();
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.5)], &[(&sm, 1.1)]).unwrap();
        let rho0 = random_density(2, &mut rng);
        let one_step = propagate(&lv, &rho0, 3.7).unwrap();
        let two_step = propagate(&lv, &propagate(&lv, &rho0, 1.4).unwrap(), 2.3).unwrap();
        assert!(mats_close(one_step.matrix(), two_step.matrix(), 1e-9));
    }

    #[test]
    fn steady_state_pure_decay_is_ground() {
        let sm = sigma_minus();
        let lv = liouvillian_from_parts(2, &[], &[(&sm, 1.0)]).unwrap();
        let ss = steady_state(&lv).unwrap();
        assert!(!ss.degenerate);
        assert!(mats_close(ss.rho.matrix(), DensityMatrix::pure(2, 1).matrix(), 1e-10));
    }

    #[test]
    fn steady_state_driven_has_partial_inversion() {
        let sm = sigma_minus();
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.5)], &[(&sm, 1.0)]).unwrap();
        let ss = steady_state(&lv).unwrap();
        let pe = ss.rho.population(0);
        assert!(pe > 0.0 && pe < 0.5, "excited population {pe}");
        // null-space residual
        assert!(lv.apply(&vectorize(ss.rho.matrix())).norm() < 1e-8);
    }

    #[test]
    fn steady_state_zero_generator_flags_degeneracy() {
        let lv = Superoperator::zero(2);
        let ss = steady_state(&lv).unwrap();
        assert!(ss.degenerate);
        assert!(mats_close(ss.rho.matrix(), &ComplexMatrix::identity(2, 2).scale(0.5), 1e-12));
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let sm = sigma_minus();
        let sx = sigma_x();
        let lv = liouvillian_from_parts(2, &[(&sx, 0.3)], &[(&sm, 0.9)]).unwrap();
        let ss = steady_state(&lv).unwrap();
        let later = propagate(&lv, &ss.rho, 50.0).unwrap();
        assert!(mats_close(later.matrix(), ss.rho.matrix(), 1e-7));
    }
}
