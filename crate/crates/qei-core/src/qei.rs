//! Worldline quantum energy inequality bounds: the single-mass bound, its
//! extension to generalized free fields with a mass spectrum, an independent
//! vacuum-subtraction route, and tau-scaling curves with fitted exponents.
//!
//! All bounds reduce to moment integrals of the spectral density
//! `D(u) = |ghat_tau(u)|^2`:
//!
//! * single mass: `q = (1/16 pi^3) integral_m^inf u^4 D(u) du`;
//! * mass spectrum: the same integral weighted by the counting function
//!   N(u), evaluated as `sum_j T(m_j)` with `T(m) = integral_m^inf u^4 D`,
//!   the far terms replaced by an Euler-Maclaurin integral remainder;
//! * vacuum route: a double integral over frequency and radial momentum of
//!   the squared worldline operator symbols, reduced to one dimension by
//!   isotropy. Its overall normalization is fixed by exact agreement with
//!   the single-mass route at m = 0.

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::quadrature::{integrate_semi_infinite, TailSpec};
use crate::spectral::SpectralDensity;
use crate::spectrum::{least_squares_slope, ExponentFit, MassSequence, MassSpectrum};
use crate::weights::Weight;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

/// Cap on leading exact terms in a spectral sum before the integral
/// remainder must take over.
const SPECTRUM_TERM_CAP: usize = 20_000_000;

fn qwei_prefactor() -> f64 {
    1.0 / (16.0 * PI.powi(3))
}

fn vacuum_prefactor() -> f64 {
    1.0 / (4.0 * PI.powi(3))
}

/// What a bound was computed against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTarget {
    Mass(f64),
    Spectrum(MassSpectrum),
}

/// A computed lower-bound magnitude: the smeared energy density obeys
/// `<T> >= -q_value` for every Hadamard state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QeiBound {
    pub q_value: f64,
    pub quadrature_error: f64,
    pub mass_or_spectrum: BoundTarget,
    pub weight: Weight,
}

/// One operator in the sum-of-squares form of the worldline energy density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorSymbol {
    pub label: String,
    kind: SymbolKind,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SymbolKind {
    TimeDerivative,
    SpatialGradient { axis: usize },
    MassTerm,
}

impl OperatorSymbol {
    /// `|c_j(p)|^2` at momentum `p` and mass `m`.
    pub fn squared_symbol(&self, p: [f64; 3], m: f64) -> f64 {
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        match self.kind {
            SymbolKind::TimeDerivative => 0.5 * (p2 + m * m),
            SymbolKind::SpatialGradient { axis } => 0.5 * p[axis] * p[axis],
            SymbolKind::MassTerm => 0.5 * m * m,
        }
    }

    /// Angular average of `squared_symbol` over directions at fixed |p|.
    fn isotropic_square(&self, p_mag: f64, m: f64) -> f64 {
        match self.kind {
            SymbolKind::TimeDerivative => 0.5 * (p_mag * p_mag + m * m),
            SymbolKind::SpatialGradient { .. } => p_mag * p_mag / 6.0,
            SymbolKind::MassTerm => 0.5 * m * m,
        }
    }
}

/// The five-term sum-of-squares decomposition of the worldline energy
/// density: one time derivative, three spatial gradient components, and the
/// mass term. The squared symbols sum to
/// `(omega_p^2 + |p|^2 + m^2) / 2 = omega_p^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldlineDecomposition {
    pub components: Vec<OperatorSymbol>,
}

impl WorldlineDecomposition {
    pub fn standard() -> Self {
        let mut components = vec![OperatorSymbol {
            label: "time-derivative".into(),
            kind: SymbolKind::TimeDerivative,
        }];
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            components.push(OperatorSymbol {
                label: format!("spatial-gradient-{name}"),
                kind: SymbolKind::SpatialGradient { axis },
            });
        }
        components.push(OperatorSymbol { label: "mass-term".into(), kind: SymbolKind::MassTerm });
        WorldlineDecomposition { components }
    }

    /// Pointwise sum of the squared symbols; equals `omega_p^2`.
    pub fn squared_symbol_sum(&self, p: [f64; 3], m: f64) -> f64 {
        self.components.iter().map(|c| c.squared_symbol(p, m)).sum()
    }

    /// Direction-averaged sum at radial momentum |p|; equals `omega_p^2`.
    pub fn isotropic_squared_sum(&self, p_mag: f64, m: f64) -> f64 {
        self.components.iter().map(|c| c.isotropic_square(p_mag, m)).sum()
    }
}

/// Bound magnitudes along a grid of scale factors, with an optional
/// log-log slope fit over a window of the grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub tau_values: Vec<f64>,
    pub bound_values: Vec<f64>,
    pub bound_errors: Vec<f64>,
    pub fit_window: (f64, f64),
    pub fitted_slope: Option<f64>,
    pub fit_residual: Option<f64>,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && (1e-13..1.0).contains(&tol)) {
        return Err(Error::InvalidConfig(format!(
            "relative tolerance must lie in [1e-13, 1), got {tol}"
        )));
    }
    Ok(())
}

fn check_mass(m: f64) -> Result<()> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::InvalidConfig(format!("mass must be finite and >= 0, got {m}")));
    }
    Ok(())
}

/// `(1/16 pi^3) integral_m^inf u^4 |ghat_tau(u)|^2 du`, the magnitude of the
/// worldline energy lower bound for a single field of mass `m` sampled with
/// weight `w`. `tol` is the relative quadrature tolerance.
pub fn worldline_qwei_bound(w: &Weight, m: f64, tol: f64) -> Result<QeiBound> {
    check_mass(m)?;
    check_tol(tol)?;
    let d = SpectralDensity::for_weight(w)?;
    let (value, err) = mass_bound_value(&d, m, tol)?;
    Ok(QeiBound {
        q_value: value,
        quadrature_error: err,
        mass_or_spectrum: BoundTarget::Mass(m),
        weight: w.clone(),
    })
}

/// The counting-weighted bound for a generalized free field with mass
/// spectrum `s`: `(1/16 pi^3) integral_0^inf u^4 N(u) |ghat_tau(u)|^2 du`.
pub fn gff_qwei_bound(w: &Weight, s: &MassSpectrum, tol: f64) -> Result<QeiBound> {
    check_tol(tol)?;
    let d = SpectralDensity::for_weight(w)?;
    let (value, err) = gff_bound_value(&d, s, tol)?;
    Ok(QeiBound {
        q_value: value,
        quadrature_error: err,
        mass_or_spectrum: BoundTarget::Spectrum(s.clone()),
        weight: w.clone(),
    })
}

fn mass_bound_value(d: &SpectralDensity, m: f64, tol: f64) -> Result<(f64, f64)> {
    if !d.envelope_sq().integrable_with_monomial(4.0) {
        return Err(Error::DivergenceDetected(
            "the weight's declared Fourier decay cannot integrate the fourth moment".into(),
        ));
    }
    let pref = qwei_prefactor();
    let (v, e) = weighted_mass_tail(d, m, tol)?;
    Ok(((pref * v).max(0.0), pref * e))
}

/// `integral_m^inf u^4 D(u) du` with an error at most `rel` relative:
/// closed form where the density admits one, adaptive quadrature with
/// certified tails otherwise.
fn weighted_mass_tail(d: &SpectralDensity, m: f64, rel: f64) -> Result<(f64, f64)> {
    if let Some((v, e)) = d.analytic_moment_tail(m, 4) {
        if e <= rel * v.abs() || e <= 1e-13 * v.abs() {
            return Ok((v, e));
        }
    }
    let f = |u: f64| u.powi(4) * d.eval(u);
    let env = |a: f64| d.weighted_tail(a, 4.0);
    let an = |a: f64| d.analytic_moment_tail(a, 4).unwrap_or((0.0, f64::INFINITY));
    let r = integrate_semi_infinite(
        &f,
        m,
        rel,
        TailSpec { envelope_tail: Some(&env), analytic_tail: Some(&an) },
    )?;
    Ok((r.value, r.error_estimate))
}

fn gff_bound_value(d: &SpectralDensity, s: &MassSpectrum, tol: f64) -> Result<(f64, f64)> {
    s.validate()?;
    let growth = s.growth_exponent();
    if !d.envelope_sq().integrable_with_monomial(4.0 + growth) {
        return Err(Error::DivergenceDetected(format!(
            "counting function growing like u^{growth:.3} outpaces the weight's declared \
             Fourier decay; the spectral energy integral does not converge"
        )));
    }
    let pref = qwei_prefactor();
    match s.smoothing() {
        None => {
            // finite list: plain sum of per-mass tails, errors additive
            let MassSpectrum::List { masses } = s else { unreachable!() };
            let mut value = 0.0;
            let mut err = 0.0;
            for &m in masses {
                let (v, e) = weighted_mass_tail(d, m, 0.5 * tol)?;
                value += v;
                err += e;
            }
            Ok(((pref * value).max(0.0), pref * err))
        }
        Some((c, p)) => spectral_sum_value(d, s, c, p, tol).map(|(v, e)| ((pref * v).max(0.0), pref * e)),
    }
}

/// `sum_j T(m_j)` for a generator spectrum with `N(u) = c u^p` smoothing:
/// leading terms exactly, then the midpoint Euler-Maclaurin remainder
/// `integral_{J+1/2}^inf T(m(x)) dx`, rewritten by Fubini as the single
/// integral `integral_{m*}^inf u^4 D(u) c (u^p - m*^p) du` with
/// `m* = m(J+1/2)`. The switch waits until the remainder's derivative bound
/// `F(m*) m* / (p (J+1/2)) / 24` is decreasing (past the integrand peak,
/// where it bounds the total variation) and small against the running sum;
/// a factor 2 margin is kept on it.
fn spectral_sum_value(
    d: &SpectralDensity,
    s: &MassSpectrum,
    c: f64,
    p: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut acc = 0.0_f64;
    let mut term_err = 0.0_f64;
    let mut prev_em = f64::INFINITY;
    let mut decreasing_run = 0u32;

    for j in 1..=SPECTRUM_TERM_CAP {
        let m_j = s.mass(j).expect("generator spectra are unbounded");
        let (tv, te) = weighted_mass_tail(d, m_j, 0.2 * tol)?;
        acc += tv;
        term_err += te;

        let x_half = j as f64 + 0.5;
        let m_half = (x_half / c).powf(1.0 / p);
        let em_err = u4_density(d, m_half) * m_half / (p * x_half) / 12.0;
        if em_err <= prev_em {
            decreasing_run += 1;
        } else {
            decreasing_run = 0;
        }
        prev_em = em_err;

        if j >= 8 && decreasing_run >= 2 && em_err <= 0.3 * tol * acc.max(f64::MIN_POSITIVE) {
            let mp = m_half.powf(p);
            let f = |u: f64| u4_density(d, u) * c * (u.powf(p) - mp).max(0.0);
            let env = |a: f64| c * d.weighted_tail(a, 4.0 + p);
            let an = |a: f64| -> (f64, f64) {
                let mono = 4.0 + p;
                if mono.fract() == 0.0 {
                    if let (Some((v1, e1)), Some((v2, e2))) =
                        (d.analytic_moment_tail(a, mono as u32), d.analytic_moment_tail(a, 4))
                    {
                        return (c * (v1 - mp * v2), c * (e1 + mp * e2));
                    }
                }
                (0.0, f64::INFINITY)
            };
            let r = integrate_semi_infinite(
                &f,
                m_half,
                0.3 * tol,
                TailSpec { envelope_tail: Some(&env), analytic_tail: Some(&an) },
            )?;
            return Ok((acc + r.value, term_err + em_err + r.error_estimate));
        }
    }
    Err(Error::NonConvergence(format!(
        "spectral sum not certified after {SPECTRUM_TERM_CAP} exact terms"
    )))
}

fn u4_density(d: &SpectralDensity, u: f64) -> f64 {
    u.powi(4) * d.eval(u)
}

/// The vacuum-subtraction route to the same bound magnitude:
/// `q = (1/4 pi^3) integral_0^inf dk0 integral_{k0+m}^inf
///      sqrt((s-k0)^2 - m^2) * Sigma_j c_j^2 * D(s) ds`,
/// where `Sigma_j c_j^2 = (s-k0)^2` is the isotropic squared-symbol sum of
/// the standard worldline decomposition at omega_p = s - k0. The prefactor
/// is locked by exact agreement with `worldline_qwei_bound` at m = 0, where
/// interchanging the integrals reproduces the fourth-moment formula.
pub fn vacuum_reference_bound(w: &Weight, m: f64, tol: f64) -> Result<QeiBound> {
    check_mass(m)?;
    check_tol(tol)?;
    let d = SpectralDensity::for_weight(w)?;
    if !d.envelope_sq().integrable_with_monomial(4.0) {
        return Err(Error::DivergenceDetected(
            "the weight's declared Fourier decay cannot integrate the fourth moment".into(),
        ));
    }
    let decomp = WorldlineDecomposition::standard();
    let inner_failure: RefCell<Option<Error>> = RefCell::new(None);

    let inner = |k0: f64| -> f64 {
        let f = |s: f64| {
            let omega = s - k0;
            let rad = (omega * omega - m * m).max(0.0).sqrt();
            rad * decomp.isotropic_squared_sum(rad, m) * d.eval(s)
        };
        // integrand <= (s - k0)^3 D(s) <= s^3 D(s) for k0 >= 0
        let env = |a: f64| {
            let e3 = d.weighted_tail(a, 3.0);
            match d.analytic_moment_tail(a, 3) {
                Some((v, e)) => e3.min(v + e),
                None => e3,
            }
        };
        match integrate_semi_infinite(&f, k0 + m, 0.2 * tol, TailSpec::envelope(&env)) {
            Ok(r) => r.value,
            Err(e) => {
                inner_failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };

    // iterated tail: integral_a^inf dk0 integral_{k0+m}^inf (s-k0)^3 D ds
    //   = integral_{a+m}^inf D(s) ((s-a)^4 - m^4)/4 ds
    //  <= (1/4) integral_{a+m}^inf s^4 D(s) ds
    let outer_env = |a: f64| {
        let t4 = d.weighted_tail(a + m, 4.0);
        let t4 = match d.analytic_moment_tail(a + m, 4) {
            Some((v, e)) => t4.min(v + e),
            None => t4,
        };
        0.25 * t4
    };
    let r = integrate_semi_infinite(&inner, 0.0, 0.6 * tol, TailSpec::envelope(&outer_env))?;
    if let Some(e) = inner_failure.into_inner() {
        return Err(e);
    }
    let pref = vacuum_prefactor();
    Ok(QeiBound {
        q_value: (pref * r.value).max(0.0),
        quadrature_error: pref * (r.error_estimate + 0.2 * tol * r.value.abs()),
        mass_or_spectrum: BoundTarget::Mass(m),
        weight: w.clone(),
    })
}

/// Evaluates the bound against `target` for each scale factor in
/// `tau_grid` (each applied multiplicatively to the weight's own tau).
/// Grid points are evaluated concurrently and reduced in grid order, so the
/// output is deterministic. When the grid has at least three points the
/// curve carries an initial least-squares slope over the whole grid;
/// restrict the window with [`fit_scaling_exponent`].
pub fn scaling_curve(
    w: &Weight,
    target: &BoundTarget,
    tau_grid: &[f64],
    tol: f64,
) -> Result<ScalingCurve> {
    check_tol(tol)?;
    if tau_grid.is_empty() {
        return Err(Error::InvalidConfig("tau grid is empty".into()));
    }
    for pair in tau_grid.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidConfig("tau grid must increase strictly".into()));
        }
    }
    if !(tau_grid[0] > 0.0 && tau_grid.iter().all(|t| t.is_finite())) {
        return Err(Error::InvalidConfig("tau grid must be positive and finite".into()));
    }
    if let BoundTarget::Mass(m) = target {
        check_mass(*m)?;
    }
    let base = SpectralDensity::for_weight(w)?;
    let evals: Vec<Result<(f64, f64)>> = exec::map_ordered(tau_grid, |&tau| {
        let d = base.rescaled(tau)?;
        match target {
            BoundTarget::Mass(m) => mass_bound_value(&d, *m, tol),
            BoundTarget::Spectrum(s) => gff_bound_value(&d, s, tol),
        }
    });
    let mut bound_values = Vec::with_capacity(tau_grid.len());
    let mut bound_errors = Vec::with_capacity(tau_grid.len());
    for e in evals {
        let (v, err) = e?;
        bound_values.push(v);
        bound_errors.push(err);
    }
    let mut curve = ScalingCurve {
        tau_values: tau_grid.to_vec(),
        bound_values,
        bound_errors,
        fit_window: (tau_grid[0], tau_grid[tau_grid.len() - 1]),
        fitted_slope: None,
        fit_residual: None,
    };
    if curve.tau_values.len() >= 3 && curve.bound_values.iter().all(|b| *b > 0.0) {
        let window = curve.fit_window;
        let _ = fit_scaling_exponent(&mut curve, window);
    }
    Ok(curve)
}

/// Least-squares slope of log(bound) against log(tau) over the grid points
/// falling inside `window` (endpoints are the caller's choice, inclusive).
/// Updates the curve's fit fields and returns the fit.
pub fn fit_scaling_exponent(curve: &mut ScalingCurve, window: (f64, f64)) -> Result<ExponentFit> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 <= window.1) {
        return Err(Error::InvalidConfig(format!(
            "fit window must be an ordered finite interval, got ({}, {})",
            window.0, window.1
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, b) in curve.tau_values.iter().zip(&curve.bound_values) {
        if (window.0..=window.1).contains(t) {
            if !(*b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "log-log fit needs positive finite bounds; got {b} at tau = {t}"
                )));
            }
            xs.push(t.ln());
            ys.push(b.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: xs.len() });
    }
    let (slope, residual) = least_squares_slope(&xs, &ys);
    curve.fit_window = window;
    curve.fitted_slope = Some(slope);
    curve.fit_residual = Some(residual);
    Ok(ExponentFit { exponent: slope, residual })
}
