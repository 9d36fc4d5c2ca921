//! Shared test support: an independent fixed-step RK4 integrator of the
//! master equation working directly on density matrices (no vectorization,
//! no Liouvillian matrix, no matrix exponential), plus seeded random model
//! generators.

use std::sync::Arc;

use lindblad_learn::library::{OperatorLibrary, OpticalClass};
use lindblad_learn::model::{Model, Process, Rate};
use lindblad_learn::quantum::ComplexMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The right-hand side `-i[H, rho] + sum_j gamma_j D[L_j](rho)` assembled
/// from explicit operator matrices.
pub struct OdeSystem {
    ham: Vec<(ComplexMatrix, f64)>,
    lind: Vec<(ComplexMatrix, f64)>,
}

#[allow(dead_code)]
impl OdeSystem {
    pub fn full(model: &Model) -> Self {
        Self {
            ham: model
                .hamiltonian
                .iter()
                .map(|p| (p.op.matrix.clone(), p.rate.value))
                .collect(),
            lind: model
                .lindblad
                .iter()
                .map(|p| (p.op.matrix.clone(), p.rate.value))
                .collect(),
        }
    }

    /// The lifetime configuration: excitation Lindblads dropped, and the
    /// Hamiltonian drive dropped when `strip_drive` is set.
    pub fn lifetime(model: &Model, strip_drive: bool) -> Self {
        Self {
            ham: model
                .hamiltonian
                .iter()
                .filter(|p| !(strip_drive && p.op.has_off_diagonal()))
                .map(|p| (p.op.matrix.clone(), p.rate.value))
                .collect(),
            lind: model
                .lindblad
                .iter()
                .filter(|p| p.op.optical_class != OpticalClass::Excitation)
                .map(|p| (p.op.matrix.clone(), p.rate.value))
                .collect(),
        }
    }

    pub fn rhs(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let dim = rho.nrows();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (h, omega) in &self.ham {
            let hw = h.scale(*omega);
            out += (&hw * rho - rho * &hw) * C64::new(0.0, -1.0);
        }
        for (l, gamma) in &self.lind {
            if *gamma == 0.0 {
                continue;
            }
            let ldag = l.adjoint();
            let ldl = &ldag * l;
            out += ((l * rho * &ldag) - (&ldl * rho + rho * &ldl).scale(0.5)).scale(*gamma);
        }
        out
    }

    pub fn rk4_step(&self, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(rho + k1.scale(h / 2.0)));
        let k3 = self.rhs(&(rho + k2.scale(h / 2.0)));
        let k4 = self.rhs(&(rho + k3.scale(h)));
        rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
    }

    /// Evolve `rho0` for `t` using `steps` fixed RK4 steps.
    pub fn evolve(&self, rho0: &ComplexMatrix, t: f64, steps: usize) -> ComplexMatrix {
        let h = t / steps as f64;
        let mut rho = rho0.clone();
        for _ in 0..steps {
            rho = self.rk4_step(&rho, h);
        }
        rho
    }

    /// March along a uniform grid starting at `tau[0] = 0`, reading out
    /// `f(rho)` at every grid point, with `substeps` RK4 steps per interval.
    pub fn series<F: FnMut(&ComplexMatrix) -> f64>(
        &self,
        rho0: &ComplexMatrix,
        tau: &[f64],
        substeps: usize,
        mut f: F,
    ) -> Vec<f64> {
        assert!((tau[0]).abs() < 1e-12, "oracle series expects tau[0] = 0");
        let dt = tau[1] - tau[0];
        let h = dt / substeps as f64;
        let mut rho = rho0.clone();
        let mut out = Vec::with_capacity(tau.len());
        out.push(f(&rho));
        for _ in 1..tau.len() {
            for _ in 0..substeps {
                rho = self.rk4_step(&rho, h);
            }
            out.push(f(&rho));
        }
        out
    }
}

/// Total monitored emission intensity `sum_v gamma_v Tr(v'v rho)` computed
/// directly from matrices.
#[allow(dead_code)]
pub fn emission_intensity(model: &Model, rho: &ComplexMatrix) -> f64 {
    model
        .monitored()
        .iter()
        .map(|(op, gamma)| {
            let vdv = op.matrix.adjoint() * &op.matrix;
            gamma * (&vdv * rho).trace().re
        })
        .sum()
}

/// A random model over the full d=4 library guaranteed to possess at least
/// one monitored emission process and one excitation process, with rates in
/// a tame range.
#[allow(dead_code)]
pub fn random_two_emitter_model(lib: &OperatorLibrary, rng: &mut ChaCha8Rng) -> Model {
    assert_eq!(lib.dim(), 4);
    let monitored: Vec<usize> = (0..lib.len())
        .filter(|&i| lib.get(i).optical_class == OpticalClass::MonitoredEmission)
        .collect();
    let excitation: Vec<usize> = (0..lib.len())
        .filter(|&i| lib.get(i).optical_class == OpticalClass::Excitation)
        .collect();

    let mut model = Model::empty(4);
    let mut push = |model: &mut Model, idx: usize, rate: f64| {
        if !model.lindblad.iter().any(|p| p.op.label == lib.get(idx).label) {
            model.lindblad.push(Process {
                op: lib.get(idx).clone(),
                rate: Rate::new(rate),
            });
        }
    };
    push(
        &mut model,
        monitored[rng.random_range(0..monitored.len())],
        rng.random_range(0.3..1.5),
    );
    push(
        &mut model,
        excitation[rng.random_range(0..excitation.len())],
        rng.random_range(0.2..0.8),
    );
    // a couple of random extras of any class
    for _ in 0..rng.random_range(0..3usize) {
        push(
            &mut model,
            rng.random_range(0..lib.len()),
            rng.random_range(0.05..0.9),
        );
    }
    // sometimes a Hamiltonian term
    if rng.random::<f64>() < 0.5 {
        let h_idx = lib.hamiltonian_indices();
        let pick = h_idx[rng.random_range(0..h_idx.len())];
        model.hamiltonian.push(Process {
            op: lib.get(pick).clone(),
            rate: Rate::new(rng.random_range(0.1..0.8)),
        });
    }
    model
}

/// A random valid density matrix.
#[allow(dead_code)]
pub fn random_density_matrix(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let p = &a * a.adjoint();
    let tr = p.trace();
    p * (C64::new(1.0, 0.0) / tr)
}

/// A random model over an arbitrary-dimension library with no structural
/// guarantees, for physicality sweeps.
#[allow(dead_code)]
pub fn random_any_model(lib: &OperatorLibrary, rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::empty(lib.dim());
    for _ in 0..rng.random_range(1..5usize) {
        let idx = rng.random_range(0..lib.len());
        if !model.lindblad.iter().any(|p| p.op.label == lib.get(idx).label) {
            model.lindblad.push(Process {
                op: lib.get(idx).clone(),
                rate: Rate::new(rng.random_range(0.05..2.0)),
            });
        }
    }
    if rng.random::<f64>() < 0.6 {
        let h_idx = lib.hamiltonian_indices();
        let pick = h_idx[rng.random_range(0..h_idx.len())];
        model.hamiltonian.push(Process {
            op: lib.get(pick).clone(),
            rate: Rate::new(rng.random_range(0.05..1.5)),
        });
    }
    model
}

#[allow(dead_code)]
pub fn process(lib: &OperatorLibrary, label: &str, rate: f64) -> Process {
    Process {
        op: lib.get(lib.find(label).expect("label in library")).clone(),
        rate: Rate::new(rate),
    }
}

#[allow(dead_code)]
pub fn arc_process(dim: usize, pairs: &[(usize, usize)], rate: f64) -> Process {
    Process {
        op: Arc::new(lindblad_learn::library::ProcessOperator::from_terms(dim, pairs).unwrap()),
        rate: Rate::new(rate),
    }
}
