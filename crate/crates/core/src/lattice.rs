//! Free dynamics of a finite open chain: the tridiagonal one-particle
//! Hamiltonian, the decoupled two-temperature initial state, unitary
//! evolution of covariance matrices and Cesàro time averages.

use crate::dispersion::DispersionParams;
use crate::error::{invalid, Result};
use crate::quasifree::{fermi, CovarianceMatrix, TemperaturePair};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Sites `−M, …, M` with open ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeWindow {
    half_width: usize,
}

impl LatticeWindow {
    pub fn new(half_width: usize) -> Result<Self> {
        if half_width < 1 {
            return Err(invalid("lattice half-width must be at least 1"));
        }
        Ok(LatticeWindow { half_width })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> Vec<i64> {
        let m = self.half_width as i64;
        (-m..=m).collect()
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        let m = self.half_width as i64;
        (-m..=m).contains(&site).then(|| (site + m) as usize)
    }

    /// Distance from `site` to the nearest open end.
    pub fn distance_to_edge(&self, site: i64) -> i64 {
        self.half_width as i64 - site.abs()
    }
}

/// `(hf)(n) = ½(f(n−1) + f(n+1)) − γ f(n)` on an open chain of `len` sites.
fn chain_hamiltonian(len: usize, gamma: f64) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, j| {
        if i == j {
            -gamma
        } else if i.abs_diff(j) == 1 {
            0.5
        } else {
            0.0
        }
    })
}

pub fn build_h_matrix(window: &LatticeWindow, params: &DispersionParams) -> DMatrix<f64> {
    chain_hamiltonian(window.len(), params.gamma())
}

/// `(1 + e^{βh})^{-1}` by spectral calculus.
fn fermi_of(h: DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    let eig = h.symmetric_eigen();
    let occ = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|e| fermi(beta * e)));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&occ) * v.transpose()
}

/// Real-valued two-point matrix of the decoupled initial state: sites `< 0`
/// at `β₋`, sites `≥ 0` at `β₊`, with the bond between −1 and 0 removed.
fn initial_blocks(window: &LatticeWindow, temps: &TemperaturePair, params: &DispersionParams) -> DMatrix<f64> {
    let m = window.half_width();
    let n = window.len();
    let left = fermi_of(chain_hamiltonian(m, params.gamma()), temps.beta_minus());
    let right = fermi_of(chain_hamiltonian(m + 1, params.gamma()), temps.beta_plus());
    let mut c = DMatrix::<f64>::zeros(n, n);
    c.view_mut((0, 0), (m, m)).copy_from(&left);
    c.view_mut((m, m), (m + 1, m + 1)).copy_from(&right);
    c
}

pub fn initial_two_temperature_covariance(
    window: &LatticeWindow,
    temps: &TemperaturePair,
    params: &DispersionParams,
) -> CovarianceMatrix {
    let c = initial_blocks(window, temps, params).map(|x| Complex64::new(x, 0.0));
    CovarianceMatrix { sites: window.sites(), matrix: c }
}

/// Spectral decomposition of `h`, computed once and reused for all times.
#[derive(Debug, Clone)]
pub struct Evolver {
    energies: DVector<f64>,
    modes: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub covariance: CovarianceMatrix,
    pub time: f64,
}

impl Evolver {
    pub fn new(h: &DMatrix<f64>) -> Self {
        let eig = h.clone().symmetric_eigen();
        Evolver { energies: eig.eigenvalues, modes: eig.eigenvectors }
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `e^{ith}`. With `M[m][n] = ⟨a*(δ_m) a(δ_n)⟩` and `a(f) ↦ a(e^{ith} f)`
    /// the matrix evolves as `M(t) = e^{ith} M e^{−ith}` (h is real symmetric).
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let v = self.modes.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|e| Complex64::from_polar(1.0, e * t)),
        );
        &v * DMatrix::from_diagonal(&phases) * v.transpose()
    }

    pub fn evolve(&self, state: &EvolutionState, dt: f64) -> EvolutionState {
        let u = self.propagator(dt);
        let c = &u * &state.covariance.matrix * u.adjoint();
        EvolutionState {
            covariance: CovarianceMatrix { sites: state.covariance.sites.clone(), matrix: c },
            time: state.time + dt,
        }
    }
}

/// Cesàro average of the probe covariance over uniform sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicMean {
    pub covariance: CovarianceMatrix,
    pub horizon: f64,
    pub samples: usize,
    /// The probe lies within the ballistic horizon of an open end.
    pub horizon_warning: bool,
}

/// Initial state and dynamics in the eigenbasis of `h`, reusable across horizons.
pub struct ErgodicAverager {
    window: LatticeWindow,
    energies: Vec<f64>,
    modes: DMatrix<f64>,
    /// `Vᵀ C₀ V`.
    initial_modes: DMatrix<f64>,
    initial_trace: f64,
}

/// `(1/S) Σ_{s<S} e^{iφs}` in closed form.
fn dirichlet_mean(phi: f64, samples: usize) -> Complex64 {
    let s = samples as f64;
    let half = (0.5 * phi).sin();
    if half.abs() < 1e-12 {
        // φ is a multiple of 2π up to rounding: direct sum
        let mut acc = Complex64::default();
        for j in 0..samples {
            acc += Complex64::from_polar(1.0, phi * j as f64);
        }
        return acc / s;
    }
    Complex64::from_polar((0.5 * s * phi).sin() / (s * half), 0.5 * phi * (s - 1.0))
}

impl ErgodicAverager {
    pub fn new(window: LatticeWindow, temps: &TemperaturePair, params: &DispersionParams) -> Self {
        let h = build_h_matrix(&window, params);
        let eig = h.symmetric_eigen();
        let c0 = initial_blocks(&window, temps, params);
        let initial_trace = c0.trace();
        let v = eig.eigenvectors;
        let initial_modes = v.transpose() * c0 * &v;
        ErgodicAverager {
            window,
            energies: eig.eigenvalues.iter().copied().collect(),
            modes: v,
            initial_modes,
            initial_trace,
        }
    }

    /// `|tr M(t) − tr M(0)|`. The phases cancel on the diagonal of `Vᵀ M(t) V`,
    /// so this measures the particle number lost to the change of basis.
    pub fn particle_number_drift(&self) -> f64 {
        (self.initial_modes.trace() - self.initial_trace).abs()
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    /// Mean of `M(t_j)` on `probe` for `t_j = j T/(S−1)`, `j = 0..S`.
    pub fn mean(&self, horizon: f64, samples: usize, probe: &[i64]) -> Result<ErgodicMean> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon T must be positive"));
        }
        if samples < 2 {
            return Err(invalid("at least two time samples are required"));
        }
        let idx: Vec<usize> = probe
            .iter()
            .map(|&s| self.window.index(s).ok_or_else(|| invalid(format!("probe site {s} outside lattice"))))
            .collect::<Result<_>>()?;
        let n = self.energies.len();
        let p = idx.len();
        let dt = horizon / (samples - 1) as f64;
        // M(t)[a][b] = Σ_{j,l} V[a][j] e^{iε_j t} C'[j][l] e^{−iε_l t} V[b][l]
        let mut z = vec![Complex64::default(); n * p];
        for j in 0..n {
            let row = &mut z[j * p..(j + 1) * p];
            for l in 0..n {
                let c = self.initial_modes[(j, l)];
                if c == 0.0 {
                    continue;
                }
                let kc = dirichlet_mean((self.energies[j] - self.energies[l]) * dt, samples) * c;
                for (q, &b) in idx.iter().enumerate() {
                    row[q] += kc * self.modes[(b, l)];
                }
            }
        }
        let mut mean = DMatrix::<Complex64>::zeros(p, p);
        for (r, &a) in idx.iter().enumerate() {
            for j in 0..n {
                let va = self.modes[(a, j)];
                for q in 0..p {
                    mean[(r, q)] += z[j * p + q] * va;
                }
            }
        }
        let edge = probe.iter().map(|&s| self.window.distance_to_edge(s)).min().unwrap_or(0);
        Ok(ErgodicMean {
            covariance: CovarianceMatrix { sites: probe.to_vec(), matrix: mean },
            horizon,
            samples,
            horizon_warning: (edge as f64) < horizon,
        })
    }
}

pub fn ergodic_mean(
    window: &LatticeWindow,
    temps: &TemperaturePair,
    params: &DispersionParams,
    horizon: f64,
    samples: usize,
    probe: &[i64],
) -> Result<ErgodicMean> {
    ErgodicAverager::new(*window, temps, params).mean(horizon, samples, probe)
}

/// Centered probe `−r..=r`.
pub fn central_probe(radius: usize) -> Vec<i64> {
    let r = radius as i64;
    (-r..=r).collect()
}
