//! Linear-noise-approximation diagnostics around the coexistence
//! equilibrium: stationary covariance, matrix power spectral density,
//! stochastic-sensitivity ellipse and the noisy-precursor indicator.
//!
//! The fluctuation `y = x - K3` follows the OU process
//! `dy = J y dt + B dW` with `B Bᵀ = D* = a(K3)`. All stationary objects
//! exist only when `J` is Hurwitz.
//!
//! Fourier convention: `S(ω) = ∫ e^{-iωτ} R(τ) dτ` with
//! `R(τ) = E[y(t+τ) y(t)ᵀ]`, so `W = R(0) = (1/2π) ∫ S(ω) dω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::closures::{full_covariance, predation_intensity, ClosureKind};
use crate::error::{Error, Result};
use crate::matrix::{CMat2, Mat2, SymMatrix2};
use crate::model::{
    classify_regime, jacobian_at_k3, require_coexistence, Jacobian2, ModelParams, Regime, State2,
};

/// Stationary covariance `W` solving `J W + W Jᵀ + D = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSolution {
    pub w: SymMatrix2,
    /// Max-abs entry of `J W + W Jᵀ + D`.
    pub residual_norm: f64,
}

fn require_hurwitz(j: &Jacobian2) -> Result<()> {
    if j.is_hurwitz() {
        Ok(())
    } else {
        Err(Error::NotHurwitz {
            trace: j.trace(),
            det: j.det(),
        })
    }
}

/// `J W + W Jᵀ + D` (symmetric by construction).
pub fn lyapunov_residual(j: &Jacobian2, w: &SymMatrix2, d: &SymMatrix2) -> Mat2 {
    let jw = j.mul(&w.to_mat2());
    let sum = Mat2::new(
        2.0 * jw.a11 + d.q11,
        jw.a12 + jw.a21 + d.q12,
        jw.a21 + jw.a12 + d.q12,
        2.0 * jw.a22 + d.q22,
    );
    sum
}

/// Determinant and adjugate solution of a 3×3 system. Exact whenever the
/// cofactor products are, e.g. for dyadic entries.
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> (f64, Option<[f64; 3]>) {
    let cof = |r: usize, c: usize| {
        let (r0, r1) = ((r + 1) % 3, (r + 2) % 3);
        let (c0, c1) = ((c + 1) % 3, (c + 2) % 3);
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
    if det == 0.0 {
        return (det, None);
    }
    // x_i = Σ_j adj(M)_ij rhs_j with adj(M)_ij = cof(j, i)
    let x = [0, 1, 2].map(|i| (0..3).map(|jj| cof(jj, i) * rhs[jj]).sum::<f64>() / det);
    (det, Some(x))
}

/// Solves the Lyapunov equation through the equivalent 3×3 system in
/// `(w11, w12, w22)`:
///
/// ```text
/// | 2a   2b    0 | |w11|     |q11|
/// |  c  a+d    b | |w12| = - |q12|
/// |  0   2c   2d | |w22|     |q22|
/// ```
///
/// whose determinant is `4 tr(J) det(J)`.
pub fn solve_lyapunov(j: &Jacobian2, d: &SymMatrix2) -> Result<LyapunovSolution> {
    require_hurwitz(j)?;
    let scale = 8.0 * j.max_abs().powi(3);
    if (4.0 * j.trace() * j.det()).abs() < 1e-14 * scale {
        return Err(Error::SingularSystem {
            det_m: 4.0 * j.trace() * j.det(),
        });
    }
    let (a, b, c, dd) = (j.a11, j.a12, j.a21, j.a22);
    let m = [
        [2.0 * a, 2.0 * b, 0.0],
        [c, a + dd, b],
        [0.0, 2.0 * c, 2.0 * dd],
    ];
    let (det_m, x) = solve3(m, [-d.q11, -d.q12, -d.q22]);
    let [w11, w12, w22] = x.ok_or(Error::SingularSystem { det_m })?;
    let w = SymMatrix2::new(w11, w12, w22);
    let residual_norm = lyapunov_residual(j, &w, d).max_abs();
    Ok(LyapunovSolution { w, residual_norm })
}

/// Spectral matrix `S(ω)` at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdSample {
    pub omega: f64,
    pub s: CMat2,
}

impl PsdSample {
    pub fn s_nn(&self) -> f64 {
        self.s[0][0].re
    }
    pub fn s_pp(&self) -> f64 {
        self.s[1][1].re
    }
    pub fn s_np(&self) -> Complex64 {
        self.s[0][1]
    }
}

/// `S(ω) = (J - iωI)⁻¹ D (Jᵀ + iωI)⁻¹ = R D Rᴴ` with `R = (J - iωI)⁻¹`.
///
/// The diagonal is assembled as a real quadratic form and the lower
/// off-diagonal as the conjugate of the upper one, so every sample is
/// exactly Hermitian.
pub fn psd_matrix(j: &Jacobian2, d: &SymMatrix2, omega: f64) -> Result<PsdSample> {
    require_hurwitz(j)?;
    Ok(psd_unchecked(j, d, omega))
}

fn psd_unchecked(j: &Jacobian2, d: &SymMatrix2, omega: f64) -> PsdSample {
    let iw = Complex64::new(0.0, omega);
    let a11 = Complex64::from(j.a11) - iw;
    let a22 = Complex64::from(j.a22) - iw;
    let a12 = Complex64::from(j.a12);
    let a21 = Complex64::from(j.a21);
    let det = a11 * a22 - a12 * a21;
    let inv = det.inv();
    let r = [[a22 * inv, -a12 * inv], [-a21 * inv, a11 * inv]];
    let dm = [[d.q11, d.q12], [d.q12, d.q22]];
    // (R D) row i
    let rd = |i: usize| -> [Complex64; 2] {
        [
            r[i][0] * dm[0][0] + r[i][1] * dm[1][0],
            r[i][0] * dm[0][1] + r[i][1] * dm[1][1],
        ]
    };
    let rd0 = rd(0);
    let rd1 = rd(1);
    let entry = |row: &[Complex64; 2], k: usize| row[0] * r[k][0].conj() + row[1] * r[k][1].conj();
    let s00 = entry(&rd0, 0).re;
    let s11 = entry(&rd1, 1).re;
    let s01 = entry(&rd0, 1);
    PsdSample {
        omega,
        s: [
            [Complex64::new(s00, 0.0), s01],
            [s01.conj(), Complex64::new(s11, 0.0)],
        ],
    }
}

/// Location and height of a spectral maximum on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPeak {
    pub omega: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdSweep {
    pub samples: Vec<PsdSample>,
    pub peak_nn: SpectralPeak,
    pub peak_pp: SpectralPeak,
}

fn grid_peak(samples: &[PsdSample], f: impl Fn(&PsdSample) -> f64) -> SpectralPeak {
    // First maximum wins on ties.
    samples.iter().fold(
        SpectralPeak {
            omega: f64::NAN,
            height: f64::NEG_INFINITY,
        },
        |best, s| {
            let h = f(s);
            if h > best.height {
                SpectralPeak {
                    omega: s.omega,
                    height: h,
                }
            } else {
                best
            }
        },
    )
}

/// Evaluates `S(ω)` on a strictly increasing grid and reports the grid
/// maxima of `S_NN` and `S_PP`. Grid points are evaluated in parallel; the
/// result does not depend on the number of threads.
pub fn psd_sweep(j: &Jacobian2, d: &SymMatrix2, omega_grid: &[f64]) -> Result<PsdSweep> {
    require_hurwitz(j)?;
    if omega_grid.is_empty() {
        return Err(Error::Domain("frequency grid is empty".into()));
    }
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("frequency grid must be strictly increasing".into()));
    }
    let samples: Vec<PsdSample> = omega_grid
        .par_iter()
        .map(|&w| psd_unchecked(j, d, w))
        .collect();
    let peak_nn = grid_peak(&samples, PsdSample::s_nn);
    let peak_pp = grid_peak(&samples, PsdSample::s_pp);
    Ok(PsdSweep {
        samples,
        peak_nn,
        peak_pp,
    })
}

/// Characteristic frequency of `J`: its Frobenius norm, which bounds the
/// spectral radius from above.
pub fn spectral_scale(j: &Jacobian2) -> f64 {
    (j.a11 * j.a11 + j.a12 * j.a12 + j.a21 * j.a21 + j.a22 * j.a22).sqrt()
}

/// Default one-sided frequency grid for spectra: `[0, 4·scale]`, 2001
/// points, where `scale` is [`spectral_scale`].
pub fn default_sweep_grid(j: &Jacobian2) -> Vec<f64> {
    uniform_grid(0.0, 4.0 * spectral_scale(j), 2001)
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Symmetric quadrature grid for recovering `W` from the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationGrid {
    /// Grid covers `[-omega_max, omega_max]`.
    pub omega_max: f64,
    /// Number of points, including both end points.
    pub points: usize,
}

impl IntegrationGrid {
    /// Multiple of [`spectral_scale`] used for the default cutoff.
    pub const DEFAULT_CUTOFF_FACTOR: f64 = 200.0;
    /// Default point count (odd, so `ω = 0` is on the grid).
    pub const DEFAULT_POINTS: usize = 200_001;

    pub fn default_for(j: &Jacobian2) -> Self {
        Self {
            omega_max: Self::DEFAULT_CUTOFF_FACTOR * spectral_scale(j),
            points: Self::DEFAULT_POINTS,
        }
    }
}

/// Trapezoid approximation of `(1/2π) ∫ S(ω) dω` over the grid. The result
/// is real and symmetric; the odd imaginary part of `S_NP` cancels.
pub fn integrate_psd(j: &Jacobian2, d: &SymMatrix2, grid: &IntegrationGrid) -> Result<SymMatrix2> {
    require_hurwitz(j)?;
    if grid.points < 2 || !(grid.omega_max > 0.0) {
        return Err(Error::Domain("integration grid needs >= 2 points and omega_max > 0".into()));
    }
    let omegas = uniform_grid(-grid.omega_max, grid.omega_max, grid.points);
    let h = 2.0 * grid.omega_max / (grid.points - 1) as f64;
    let last = grid.points - 1;
    let partial: Vec<[f64; 3]> = omegas
        .par_chunks(4096)
        .enumerate()
        .map(|(chunk, ws)| {
            let mut acc = [0.0; 3];
            for (offset, &w) in ws.iter().enumerate() {
                let idx = chunk * 4096 + offset;
                let weight = if idx == 0 || idx == last { 0.5 } else { 1.0 };
                let s = psd_unchecked(j, d, w);
                acc[0] += weight * s.s_nn();
                acc[1] += weight * s.s_np().re;
                acc[2] += weight * s.s_pp();
            }
            acc
        })
        .collect();
    let total = partial.iter().fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]]);
    let norm = h / (2.0 * PI);
    Ok(SymMatrix2::new(total[0] * norm, total[1] * norm, total[2] * norm))
}

/// `p`-quantile of the χ² distribution with two degrees of freedom,
/// `-2 ln(1 - p)`.
pub fn chi2_quantile_2dof(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("confidence level {p} outside (0, 1)")));
    }
    Ok(-2.0 * (-p).ln_1p())
}

/// Confidence ellipse `{z : zᵀ W⁻¹ z <= χ²₂(p)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseGeometry {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub ell_plus: f64,
    pub ell_minus: f64,
    /// Angle from the prey axis to the major axis, in `(-π/2, π/2]`.
    pub theta: f64,
    pub p: f64,
    pub chi2: f64,
}

/// Semi-axes `ℓ± = sqrt(χ²₂(p) λ±)` and major-axis angle
/// `θ = ½ atan2(2 w12, w11 - w22)`. An isotropic `W` gets `θ = 0`.
pub fn ellipse_geometry(w: &SymMatrix2, p: f64) -> Result<EllipseGeometry> {
    let chi2 = chi2_quantile_2dof(p)?;
    let (lambda_plus, lambda_minus) = w.eigenvalues();
    if !(lambda_minus > 1e-14 * lambda_plus.abs()) {
        return Err(Error::NotPositiveDefinite {
            lambda_min: lambda_minus,
        });
    }
    let theta = if w.q12 == 0.0 && w.q11 == w.q22 {
        0.0
    } else {
        let t = 0.5 * (2.0 * w.q12).atan2(w.q11 - w.q22);
        if t <= -0.5 * PI {
            t + PI
        } else {
            t
        }
    };
    Ok(EllipseGeometry {
        lambda_plus,
        lambda_minus,
        ell_plus: (chi2 * lambda_plus).sqrt(),
        ell_minus: (chi2 * lambda_minus).sqrt(),
        theta,
        p,
        chi2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DSepSource {
    UserSupplied,
    /// `min(N*, P*)`: distance from `K3` to the nearest coordinate axis.
    DefaultMinEquilibriumCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecursorReport {
    pub pi_p: f64,
    pub d_sep: f64,
    pub d_sep_source: DSepSource,
    pub regime: Regime,
}

/// `Π_p = ℓ₊ / d_sep`. Without a supplied distance, `d_sep` defaults to the
/// distance from `k3` to the nearest extinction axis.
pub fn precursor_indicator(
    geom: &EllipseGeometry,
    d_sep: Option<f64>,
    k3: State2,
    regime: Regime,
) -> Result<PrecursorReport> {
    let (d_sep, d_sep_source) = match d_sep {
        Some(d) if d.is_finite() && d > 0.0 => (d, DSepSource::UserSupplied),
        Some(d) => return Err(Error::Domain(format!("d_sep must be positive, got {d}"))),
        None => (
            k3.n.min(k3.p),
            DSepSource::DefaultMinEquilibriumCoordinate,
        ),
    };
    Ok(PrecursorReport {
        pi_p: geom.ell_plus / d_sep,
        d_sep,
        d_sep_source,
        regime,
    })
}

/// Everything computed for one parameter set when `J(K3)` is Hurwitz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsfReport {
    pub closure: ClosureKind,
    pub k3: State2,
    pub jacobian: Jacobian2,
    pub d_star: SymMatrix2,
    pub lyapunov: LyapunovSolution,
    pub ellipse: EllipseGeometry,
    pub precursor: PrecursorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum SsfOutcome {
    #[serde(rename = "defined")]
    Defined(Box<SsfReport>),
    #[serde(rename = "not_defined")]
    NotDefined {
        message: &'static str,
        trace: f64,
        det: f64,
        regime: Regime,
    },
}

pub const NOT_DEFINED_MESSAGE: &str = "stationary LNA diagnostics not defined";

impl SsfOutcome {
    pub fn report(&self) -> Option<&SsfReport> {
        match self {
            SsfOutcome::Defined(r) => Some(r),
            SsfOutcome::NotDefined { .. } => None,
        }
    }
}

/// Local diffusion covariance `D* = a(K3)` for a closure.
pub fn local_covariance(params: &ModelParams, closure: ClosureKind) -> Result<SymMatrix2> {
    let k3 = require_coexistence(params)?;
    Ok(full_covariance(params, k3, closure))
}

/// Hurwitz gate, Lyapunov solve, symmetrization, eigenvalues, semi-axes,
/// angle and precursor ratio, in that order. A non-Hurwitz Jacobian is an
/// outcome, not an error.
pub fn ssf_pipeline(
    params: &ModelParams,
    closure: ClosureKind,
    p: f64,
    d_sep: Option<f64>,
) -> Result<SsfOutcome> {
    let k3 = require_coexistence(params)?;
    let j = jacobian_at_k3(params)?;
    let regime = classify_regime(params);
    if !j.is_hurwitz() {
        return Ok(SsfOutcome::NotDefined {
            message: NOT_DEFINED_MESSAGE,
            trace: j.trace(),
            det: j.det(),
            regime,
        });
    }
    let d_star = full_covariance(params, k3, closure);
    let mut lyapunov = solve_lyapunov(&j, &d_star)?;
    lyapunov.w = SymMatrix2::symmetrize(&lyapunov.w.to_mat2());
    let ellipse = ellipse_geometry(&lyapunov.w, p)?;
    let precursor = precursor_indicator(&ellipse, d_sep, k3, regime)?;
    Ok(SsfOutcome::Defined(Box::new(SsfReport {
        closure,
        k3,
        jacobian: j,
        d_star,
        lyapunov,
        ellipse,
        precursor,
    })))
}

/// Analytic `w22(split) - w22(bernoulli)` at `K3`: `e f_pred(K3) / (Ω c)`.
///
/// With `a22 = 0` the `(2,2)` Lyapunov equation fixes `w12` from `q22`
/// alone, so the closures (same `q11`, `q22`) share `w11` and `w12`, and the
/// `(1,2)` equation turns the cross-covariance gap `e f_pred / Ω` into
/// `Δw22 = Δq12 / c`.
pub fn closure_w22_gap(params: &ModelParams) -> Result<f64> {
    let k3 = require_coexistence(params)?;
    Ok(params.e() * predation_intensity(params, k3) / (params.omega() * params.c()))
}
