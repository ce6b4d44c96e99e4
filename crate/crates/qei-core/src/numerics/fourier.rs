//! Tabulated Fourier transforms of weights on nonnegative frequency grids,
//! under the convention `ghat(u) = integral dt e^{iut} g(t)`.
//!
//! Each grid point is an independent oscillatory integral over the weight's
//! effective support, evaluated by a composite Gauss-Kronrod rule whose panel
//! count grows with `u` so every panel spans at most about half an
//! oscillation period. Points are independent, so the table fills in
//! parallel.

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::quadrature::kronrod_panel_complex;
use crate::weights::Weight;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Resolution and extent of a frequency grid: points at `0, du, 2du, ...`
/// up to the first multiple of `du` at or past `u_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub du: f64,
    pub u_max: f64,
}

impl GridSpec {
    pub fn new(du: f64, u_max: f64) -> Result<Self> {
        if !(du.is_finite() && du > 0.0) {
            return Err(Error::InvalidConfig(format!("grid resolution must be positive, got {du}")));
        }
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(Error::InvalidConfig(format!("grid cutoff must be positive, got {u_max}")));
        }
        Ok(GridSpec { du, u_max })
    }

    fn build(&self) -> Vec<f64> {
        let n = (self.u_max / self.du).ceil() as usize;
        (0..=n).map(|k| k as f64 * self.du).collect()
    }
}

/// A transform tabulated on `[0, cutoff]`. Negative frequencies are not
/// stored: the tabulated functions come from real integrands, so
/// `f(-u) = conj(f(u))`.
///
/// `tail_error` bounds `integral_{cutoff}^inf env(u) du` where `env` is the
/// weight's declared pointwise decay envelope for the tabulated transform;
/// it is infinite when the envelope does not certify an integrable tail.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSamples {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub cutoff: f64,
    pub tail_error: f64,
}

impl SpectralSamples {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Panels per oscillatory integral: at least 32, and enough that each panel
/// covers no more than 3/u of the time axis (about half a period of
/// `e^{iut}`, which a 15-point panel resolves to near machine precision).
fn panel_count(support_width: f64, u: f64) -> usize {
    let oscillatory = (support_width * u.abs() / 3.0).ceil();
    if oscillatory.is_finite() && oscillatory > 32.0 {
        oscillatory as usize
    } else {
        32
    }
}

fn grid_resolves_support(w: &Weight, du: f64) -> Result<()> {
    let (a, b) = w.effective_support();
    let t_extent = a.abs().max(b.abs());
    if du * t_extent > std::f64::consts::PI {
        return Err(Error::ResolutionError(format!(
            "grid spacing {du} cannot resolve a weight extending to |t| = {t_extent:.6}; \
             need du <= {:.6}",
            std::f64::consts::PI / t_extent
        )));
    }
    Ok(())
}

/// Tabulates `integral dt e^{iut} f(t)` over `[a, b]` at every grid point.
pub(crate) fn oscillatory_table<F>(f: &F, a: f64, b: f64, grid: &[f64]) -> Vec<Complex64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let width = b - a;
    let pts: Vec<f64> = grid.to_vec();
    exec::map_indexed(pts.len(), |i| {
        let u = pts[i];
        let n = panel_count(width, u);
        let h = width / n as f64;
        let integrand = |t: f64| Complex64::from_polar(f(t), u * t);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..n {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == n { b } else { a + (p + 1) as f64 * h };
            let (v, _) = kronrod_panel_complex(&integrand, lo, hi);
            acc += v;
        }
        acc
    })
}

/// Samples `ghat(u) = integral dt e^{iut} g_tau(t)` on the grid.
pub fn fourier_transform_weight(w: &Weight, spec: &GridSpec) -> Result<SpectralSamples> {
    w.validate()?;
    grid_resolves_support(w, spec.du)?;
    let grid = spec.build();
    let (a, b) = w.effective_support();
    let profile = w.evaluate_fn();
    let values = oscillatory_table(&profile, a, b, &grid);
    let cutoff = *grid.last().expect("grid is nonempty");
    let tail_error = w.fourier_decay_envelope().tail_integral(cutoff, 0);
    Ok(SpectralSamples { grid, values, cutoff, tail_error })
}

/// Samples `hhat(u)` for `h(t) = |g_tau(t)|^2` on the grid. `hhat(0)` is the
/// squared L2 norm of the weight, and `hhat(-u) = conj(hhat(u))` because h is
/// real.
pub fn power_spectrum_of_square(w: &Weight, spec: &GridSpec) -> Result<SpectralSamples> {
    w.validate()?;
    grid_resolves_support(w, spec.du)?;
    let grid = spec.build();
    let (a, b) = w.effective_support();
    let profile = w.evaluate_fn();
    let values = oscillatory_table(&|t| profile(t).powi(2), a, b, &grid);
    let cutoff = *grid.last().expect("grid is nonempty");
    let tail_error = w.square_transform_decay_envelope().tail_integral(cutoff, 0);
    Ok(SpectralSamples { grid, values, cutoff, tail_error })
}
