//! Pointwise evaluators for the spectral content of a weight: the density
//! `|ghat_tau(u)|^2` that the worldline integrals consume, and the transform
//! `hhat_tau(u)` of the squared weight that mode-space quadratic forms
//! consume.
//!
//! Closed forms are used where they exist (gaussian, cos^2 window); the bump
//! and raw-sample families are tabulated by oscillatory quadrature and
//! interpolated with cubic splines. Tables are built at scale tau = 1 and the
//! scale is folded in algebraically,
//!
//! ```text
//! |ghat_tau(u)|^2 = tau * |ghat_1(tau u)|^2,    hhat_tau(u) = hhat_1(tau u),
//! ```
//!
//! so rescaling a density never rebuilds a table. The fixed bump tables are
//! process-wide: the unit bump profile has no parameters.

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::envelope::{gauss_tail, DecayEnvelope};
use crate::numerics::fourier::oscillatory_table;
use crate::numerics::interp::CubicSpline;
use crate::numerics::quadrature::kronrod_panel;
use crate::weights::{Weight, WeightFamily};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

const TWO_SQRT_PI: f64 = 3.544_907_701_811_032; // 2 sqrt(pi)

/// sin(x)/x with the removable singularity filled in.
fn sincf(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Transform of the unit cos^2 window `cos^2(pi s/2)` on [-1, 1]:
/// `pi^2 sin x / (x (pi^2 - x^2))`, real and even, 1 at 0, 1/2 at pi.
/// Branches keep every removable singularity well conditioned.
pub(crate) fn cos2_window_transform(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.5 {
        PI * PI * sincf(x) / (PI * PI - x * x)
    } else if (x - PI).abs() < 0.5 {
        PI * PI * sincf(x - PI) / (x * (x + PI))
    } else {
        PI * PI * x.sin() / (x * (PI * PI - x * x))
    }
}

/// Transform of the squared unit cos^2 window `cos^4(pi s/2)` on [-1, 1],
/// via its finite harmonic content: `cos^4 = (3 + 4 cos(pi s) + cos(2 pi s))/8`,
/// so the transform is a five-term sinc sum. 3/4 at 0; decays like x^{-5}.
pub(crate) fn cos2_square_transform(x: f64) -> f64 {
    0.75 * sincf(x)
        + 0.5 * (sincf(x - PI) + sincf(x + PI))
        + 0.125 * (sincf(x - 2.0 * PI) + sincf(x + 2.0 * PI))
}

/// Unit bump profile `exp(-1/(1-s^2))` on (-1, 1).
fn unit_bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Tabulates `2 integral_0^b cos(x s) f(s) ds` for even f supported in
/// [-b, b]: the real transform of an even profile, one entry per grid point.
fn cosine_table<F: Fn(f64) -> f64 + Sync>(f: &F, b: f64, grid: &[f64]) -> Vec<f64> {
    let pts: Vec<f64> = grid.to_vec();
    exec::map_indexed(pts.len(), |i| {
        let x = pts[i];
        let oscillatory = (b * x / 3.0).ceil();
        let n = if oscillatory.is_finite() && oscillatory > 32.0 {
            oscillatory as usize
        } else {
            32
        };
        let h = b / n as f64;
        let integrand = |s: f64| (x * s).cos() * f(s);
        let mut acc = 0.0;
        for p in 0..n {
            let lo = p as f64 * h;
            let hi = if p + 1 == n { b } else { (p + 1) as f64 * h };
            let (v, _) = kronrod_panel(&integrand, lo, hi);
            acc += v;
        }
        2.0 * acc
    })
}

fn geometric_grid(zone1_end: f64, du1: f64, end: f64, du2: f64) -> Vec<f64> {
    let n1 = (zone1_end / du1).round() as usize;
    let n2 = ((end - zone1_end) / du2).round() as usize;
    let mut g: Vec<f64> = (0..=n1).map(|k| k as f64 * du1).collect();
    g.extend((1..=n2).map(|k| zone1_end + k as f64 * du2));
    g
}

/// Natural-spline fit of a table over [0, u_max] with the first few nodes
/// mirrored across 0. The free boundary condition then acts at the ghost
/// nodes instead of at u = 0, where even profiles have real curvature (odd
/// ones a real third derivative); its error decays geometrically per node
/// and is negligible by the time the fitted range starts.
fn mirrored_table(grid: Vec<f64>, vals: Vec<f64>, odd: bool) -> Result<CubicSpline> {
    let ghost = grid.len().saturating_sub(1).min(8);
    let mut xs = Vec::with_capacity(grid.len() + ghost);
    let mut ys = Vec::with_capacity(vals.len() + ghost);
    for k in (1..=ghost).rev() {
        xs.push(-grid[k]);
        ys.push(if odd { -vals[k] } else { vals[k] });
    }
    xs.extend(grid);
    ys.extend(vals);
    CubicSpline::natural(xs, ys)
}

/// Signed transform of the unit bump, tabulated on [0, 1600]: dense where the
/// worldline integrals concentrate, coarser in the far oscillatory tail.
/// Beyond 1600 the envelope bound is below 2e-14, and evaluators return 0.
fn unit_bump_window_table() -> &'static Arc<CubicSpline> {
    static TABLE: OnceLock<Arc<CubicSpline>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let grid = geometric_grid(100.0, 0.02, 1600.0, 0.2);
        let vals = cosine_table(&unit_bump, 1.0, &grid);
        Arc::new(mirrored_table(grid, vals, false).expect("static grid is valid"))
    })
}

/// Signed transform of the squared unit bump, tabulated on [0, 96]; its
/// envelope there is below 1e-5 of the value at 0, and evaluators return 0
/// beyond the table.
fn unit_bump_square_table() -> &'static Arc<CubicSpline> {
    static TABLE: OnceLock<Arc<CubicSpline>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let grid: Vec<f64> = (0..=12800).map(|k| k as f64 * 0.0075).collect();
        let vals = cosine_table(&|s| unit_bump(s).powi(2), 1.0, &grid);
        Arc::new(mirrored_table(grid, vals, false).expect("static grid is valid"))
    })
}

#[derive(Clone)]
enum DensityBackend {
    Gauss { width: f64 },
    Cos2 { half_width: f64 },
    BumpSpline { half_width: f64, table: Arc<CubicSpline> },
    /// `|ghat_1|^2` of a sampled weight, tabulated; 0 beyond the table.
    /// `edge` is the last tabulated frequency, `floor_c2` the constant that
    /// anchors the declared decay `c2 * v^{-q2}` to the table's own tail
    /// magnitude over its outer half.
    SampleSpline { table: Arc<CubicSpline>, edge: f64, floor_c2: f64, q2: f64 },
}

/// Evaluator for `|ghat_tau(u)|^2`, even in u, with its pointwise decay
/// envelope and (where the profile admits one) exact moment tails.
#[derive(Clone)]
pub struct SpectralDensity {
    backend: DensityBackend,
    tau: f64,
    /// Pointwise bound on `|ghat_tau(u)|` (modulus, not squared).
    envelope: DecayEnvelope,
}

impl SpectralDensity {
    pub fn for_weight(w: &Weight) -> Result<Self> {
        w.validate()?;
        let envelope = w.fourier_decay_envelope();
        let backend = match &w.family {
            WeightFamily::Gaussian { width, .. } => DensityBackend::Gauss { width: *width },
            WeightFamily::Cos2 { half_width, .. } => {
                DensityBackend::Cos2 { half_width: *half_width }
            }
            WeightFamily::Bump { half_width, .. } => DensityBackend::BumpSpline {
                half_width: *half_width,
                table: unit_bump_window_table().clone(),
            },
            WeightFamily::Samples { decay_q, .. } => {
                let (table, edge, floor_c2) = sample_density_table(w)?;
                DensityBackend::SampleSpline {
                    table: Arc::new(table),
                    edge,
                    floor_c2,
                    q2: 2.0 * decay_q,
                }
            }
        };
        Ok(SpectralDensity { backend, tau: w.tau, envelope })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `|ghat_tau(u)|^2`. Even in u; spline-backed families return 0 beyond
    /// their tabulated range (the envelope there is negligible, and the
    /// integrators stop on the envelope, not on the table).
    pub fn eval(&self, u: f64) -> f64 {
        let v = self.tau * u.abs();
        let base = match &self.backend {
            DensityBackend::Gauss { width } => {
                let z = width * v;
                TWO_SQRT_PI * width * (-z * z).exp()
            }
            DensityBackend::Cos2 { half_width } => {
                let g = cos2_window_transform(half_width * v);
                half_width * half_width * g * g
            }
            DensityBackend::BumpSpline { half_width, table } => {
                let g = table.eval(half_width * v);
                half_width * half_width * g * g
            }
            DensityBackend::SampleSpline { table, .. } => table.eval(v).max(0.0),
        };
        self.tau * base
    }

    /// Density of the same profile at scale `extra * tau`: tables are shared,
    /// only the algebraic scale changes.
    pub fn rescaled(&self, extra: f64) -> Result<Self> {
        if !(extra > 0.0) {
            return Err(Error::NonPositiveScale(extra));
        }
        Ok(SpectralDensity {
            backend: self.backend.clone(),
            tau: self.tau * extra,
            envelope: self.envelope.rescaled(extra, extra.sqrt()),
        })
    }

    pub fn envelope(&self) -> &DecayEnvelope {
        &self.envelope
    }

    /// Pointwise bound on the density itself.
    pub fn envelope_sq(&self) -> DecayEnvelope {
        self.envelope.squared()
    }

    /// Upper bound on `integral_a^inf u^power |ghat_tau(u)|^2 du` from the
    /// declared envelope; INFINITY when the envelope cannot certify it.
    /// `power` may be fractional: the monomial is split at u = 1 between its
    /// integer floor and ceiling, both rigorous majorants on their ranges.
    ///
    /// A sampled density carries a different bound: the declared decay
    /// anchored to the table's own outer-half magnitude. The table is all
    /// the pointwise knowledge there is, so past its edge the bound is
    /// frozen at the edge value; marching further over the (zero) spline
    /// continuation cannot legitimately shrink it.
    pub fn weighted_tail(&self, a: f64, power: f64) -> f64 {
        debug_assert!(power >= 0.0 && a >= 0.0);
        if let DensityBackend::SampleSpline { edge, floor_c2, q2, .. } = &self.backend {
            let x = (self.tau * a).min(*edge);
            let excess = q2 - power - 1.0;
            if x < 0.5 * edge || excess <= 0.0 {
                return f64::INFINITY;
            }
            return self.tau.powf(-power) * floor_c2 * x.powf(-excess) / excess;
        }
        let env2 = self.envelope_sq();
        if power.fract() == 0.0 {
            return env2.tail_integral(a, power as u32);
        }
        let lo = power.floor() as u32;
        let hi = power.ceil() as u32;
        if a >= 1.0 {
            env2.tail_integral(a, hi)
        } else {
            // u^power <= u^lo on [a,1] and <= u^hi on [1,inf)
            env2.tail_integral(a, lo) + env2.tail_integral(1.0, hi)
        }
    }

    /// `integral_a^inf u^monomial |ghat_tau(u)|^2 du` in closed form, with a
    /// rigorous error bound, where the profile admits one:
    /// gaussian (exact, any monomial) and cos^2 window (partial fractions
    /// plus an oscillatory remainder, monomials 0 and 4, valid once the
    /// scaled argument clears 2 pi). A sampled density has no closed form
    /// under its table, but at and past the table edge the remainder is
    /// enclosed by [0, T] with T the anchored decay tail, reported as
    /// T/2 +- T/2. None otherwise.
    pub fn analytic_moment_tail(&self, a: f64, monomial: u32) -> Option<(f64, f64)> {
        if let DensityBackend::SampleSpline { edge, .. } = &self.backend {
            let horizon = edge / self.tau;
            if a < horizon * (1.0 - 1e-12) {
                return None;
            }
            let t = self.weighted_tail(horizon, monomial as f64);
            if !t.is_finite() {
                return None;
            }
            return Some((0.5 * t, 0.5 * t));
        }
        match &self.backend {
            DensityBackend::Gauss { width } => {
                // |ghat_tau(u)|^2 = 2 sqrt(pi) W exp(-(W u)^2) with W = width * tau
                let cap_w = width * self.tau;
                let value = TWO_SQRT_PI * cap_w * gauss_tail(a, cap_w * cap_w, monomial);
                Some((value, value * 1e-14))
            }
            DensityBackend::Cos2 { half_width } => {
                let cap_w = half_width * self.tau;
                let x = cap_w * a;
                if x < 2.0 * PI {
                    return None;
                }
                let pi4 = PI.powi(4);
                match monomial {
                    4 => {
                        let scale = self.tau * half_width * half_width / cap_w.powi(5);
                        let half_frac_tail = 0.5
                            * ((1.0 / (4.0 * PI)) * ((x + PI) / (x - PI)).ln()
                                + 0.25 / (x - PI)
                                + 0.25 / (x + PI));
                        let f = x * x / (x * x - PI * PI).powi(2);
                        Some((scale * pi4 * half_frac_tail, scale * pi4 * 0.5 * f))
                    }
                    0 => {
                        let scale = self.tau * half_width * half_width / cap_w;
                        let r_tail = 1.0 / (pi4 * x)
                            - 3.0 / (4.0 * pi4 * PI) * ((x + PI) / (x - PI)).ln()
                            + (0.25 / pi4) * (1.0 / (x - PI) + 1.0 / (x + PI));
                        let r = 1.0 / (x * x * (x * x - PI * PI).powi(2));
                        Some((scale * pi4 * 0.5 * r_tail, scale * pi4 * 0.5 * r))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

/// Tabulates `|ghat_1(v)|^2` for a sampled weight at scale 1. The grid spans
/// a fixed oscillation budget: resolution pi/(20 t_ext) and extent
/// 1400/t_ext, where t_ext is the largest |t| in the sample support, so the
/// build cost is the same for every table.
///
/// Returns the spline, the table edge, and the anchored decay constant: the
/// largest `density * v^{2 q}` seen over the table's outer half, padded 25%
/// for what the grid can miss between knots. With the declared decay `q`,
/// `floor_c2 * v^{-2q}` then dominates the density from edge/2 outward.
fn sample_density_table(w: &Weight) -> Result<(CubicSpline, f64, f64)> {
    let WeightFamily::Samples { decay_q, .. } = &w.family else {
        return Err(Error::InvalidConfig("not a sampled weight".into()));
    };
    let base = Weight { family: w.family.clone(), tau: 1.0 };
    let (a, b) = base.effective_support();
    let t_ext = a.abs().max(b.abs());
    if !(t_ext > 0.0) {
        return Err(Error::InvalidConfig("sampled weight has empty support".into()));
    }
    let du = PI / (20.0 * t_ext);
    let n = (1400.0 / t_ext / du).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * du).collect();
    let profile = base.evaluate_fn();
    let vals = oscillatory_table(&profile, a, b, &grid);
    let density: Vec<f64> = vals.iter().map(|z| z.norm_sqr()).collect();
    let edge = *grid.last().expect("grid is nonempty");
    let mut floor_c2 = 0.0_f64;
    for (v, d) in grid.iter().zip(&density) {
        if *v >= 0.5 * edge {
            floor_c2 = floor_c2.max(d * v.powf(2.0 * decay_q));
        }
    }
    let table = mirrored_table(grid, density, false)?;
    Ok((table, edge, 1.25 * floor_c2))
}

#[derive(Clone)]
enum SquareBackend {
    Gauss { width: f64, center: f64 },
    Cos2 { half_width: f64, center: f64 },
    BumpSpline { half_width: f64, center: f64, table: Arc<CubicSpline> },
    /// Transform of `|g_1|^2` for a sampled weight: real and imaginary
    /// tables on [0, x_max]; 0 beyond.
    SampleSpline { re: Arc<CubicSpline>, im: Arc<CubicSpline> },
}

/// Evaluator for `hhat_tau(u)` where `h = |g_tau|^2`: complex, with
/// `hhat(-u) = conj(hhat(u))` exact by construction.
#[derive(Clone)]
pub struct SquaredTransform {
    backend: SquareBackend,
    tau: f64,
}

impl SquaredTransform {
    /// `max_abs_arg` sizes the table for sampled weights (closed-form and
    /// fixed-table families ignore it): arguments up to that magnitude are
    /// tabulated rather than truncated to 0.
    pub fn for_weight(w: &Weight, max_abs_arg: f64) -> Result<Self> {
        w.validate()?;
        let backend = match &w.family {
            WeightFamily::Gaussian { width, center } => {
                SquareBackend::Gauss { width: *width, center: *center }
            }
            WeightFamily::Cos2 { half_width, center } => {
                SquareBackend::Cos2 { half_width: *half_width, center: *center }
            }
            WeightFamily::Bump { half_width, center } => SquareBackend::BumpSpline {
                half_width: *half_width,
                center: *center,
                table: unit_bump_square_table().clone(),
            },
            WeightFamily::Samples { .. } => {
                let (re, im) = sample_square_tables(w, max_abs_arg)?;
                SquareBackend::SampleSpline { re: Arc::new(re), im: Arc::new(im) }
            }
        };
        Ok(SquaredTransform { backend, tau: w.tau })
    }

    /// `hhat_tau(0) = ||g||_2^2`, independent of tau.
    pub fn at_zero(&self) -> f64 {
        match &self.backend {
            SquareBackend::Gauss { .. } => 1.0,
            SquareBackend::Cos2 { half_width, .. } => 0.75 * half_width,
            SquareBackend::BumpSpline { half_width, table, .. } => half_width * table.eval(0.0),
            SquareBackend::SampleSpline { re, .. } => re.eval(0.0),
        }
    }

    /// `hhat_tau(u)`; negative arguments by conjugation, which keeps
    /// assembled quadratic forms Hermitian to the bit.
    pub fn eval(&self, u: f64) -> Complex64 {
        if u < 0.0 {
            return self.eval(-u).conj();
        }
        let x = self.tau * u;
        match &self.backend {
            SquareBackend::Gauss { width, center } => {
                let z = width * x * 0.5;
                let phase = Complex64::new(0.0, center * x).exp();
                phase * (-z * z).exp()
            }
            SquareBackend::Cos2 { half_width, center } => {
                let phase = Complex64::new(0.0, center * x).exp();
                phase * (half_width * cos2_square_transform(half_width * x))
            }
            SquareBackend::BumpSpline { half_width, center, table } => {
                let phase = Complex64::new(0.0, center * x).exp();
                phase * (half_width * table.eval(half_width * x))
            }
            SquareBackend::SampleSpline { re, im } => Complex64::new(re.eval(x), im.eval(x)),
        }
    }
}

fn sample_square_tables(w: &Weight, max_abs_arg: f64) -> Result<(CubicSpline, CubicSpline)> {
    let base = Weight { family: w.family.clone(), tau: 1.0 };
    let (a, b) = base.effective_support();
    let t_ext = a.abs().max(b.abs());
    if !(t_ext > 0.0) {
        return Err(Error::InvalidConfig("sampled weight has empty support".into()));
    }
    if !(max_abs_arg.is_finite() && max_abs_arg >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "transform table extent must be finite and nonnegative, got {max_abs_arg}"
        )));
    }
    let x_max = w.tau * max_abs_arg * 1.05 + 1.0;
    let du = PI / (12.0 * t_ext);
    let n = (x_max / du).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * du).collect();
    let profile = base.evaluate_fn();
    let vals = oscillatory_table(&|t| profile(t).powi(2), a, b, &grid);
    let re: Vec<f64> = vals.iter().map(|z| z.re).collect();
    let im: Vec<f64> = vals.iter().map(|z| z.im).collect();
    // h is real, so Re hhat is even and Im hhat is odd
    Ok((mirrored_table(grid.clone(), re, false)?, mirrored_table(grid, im, true)?))
}
