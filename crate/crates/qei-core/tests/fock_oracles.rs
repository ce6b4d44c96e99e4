//! Cross-checks of the assembled energy form against an independent
//! construction: the smeared density is expanded in ladder operators and
//! applied to explicit occupation states, with the squared-weight transform
//! integrated directly. Nothing here shares code with the assembly path
//! beyond the mode set itself.

use num_complex::Complex64;
use qei_core::fock::{
    assemble_smeared_energy_form, build_mode_set, min_eigenvalue, mode_set_from_lattice_points,
    verify_qwei, ModeSet,
};
use qei_core::numerics::integrate_finite;
use qei_core::qei::worldline_qwei_bound;
use qei_core::weights::Weight;

fn hhat_direct(w: &Weight, u: f64) -> Complex64 {
    let (a, b) = w.effective_support();
    let prof = w.evaluate_fn();
    let re = integrate_finite(&|t: f64| prof(t).powi(2) * (u * t).cos(), a, b, 1e-13).value;
    let im = integrate_finite(&|t: f64| prof(t).powi(2) * (u * t).sin(), a, b, 1e-13).value;
    Complex64::new(re, im)
}

/// A truncated Fock state as mode occupations, kept sorted by mode index.
#[derive(Clone, Debug, PartialEq)]
struct Occupation(Vec<(usize, u32)>);

impl Occupation {
    fn vacuum() -> Self {
        Occupation(Vec::new())
    }

    fn pair(i: usize, j: usize) -> Self {
        if i == j {
            Occupation(vec![(i, 2)])
        } else {
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            Occupation(vec![(i, 1), (j, 1)])
        }
    }

    fn count(&self, mode: usize) -> u32 {
        self.0.iter().find(|(m, _)| *m == mode).map_or(0, |(_, n)| *n)
    }

    fn with_count(&self, mode: usize, n: u32) -> Self {
        let mut v: Vec<(usize, u32)> =
            self.0.iter().copied().filter(|(m, _)| *m != mode).collect();
        if n > 0 {
            v.push((mode, n));
        }
        v.sort_unstable();
        Occupation(v)
    }
}

/// Ladder action on a normalized occupation state: returns the amplitude
/// and the resulting state, or None when annihilating an empty mode.
fn annihilate(mode: usize, s: &Occupation) -> Option<(f64, Occupation)> {
    let n = s.count(mode);
    if n == 0 {
        return None;
    }
    Some(((n as f64).sqrt(), s.with_count(mode, n - 1)))
}

fn create(mode: usize, s: &Occupation) -> (f64, Occupation) {
    let n = s.count(mode);
    (((n + 1) as f64).sqrt(), s.with_count(mode, n + 1))
}

/// <bra| a_x^+ a_y |ket>
fn number_elem(bra: &Occupation, x: usize, y: usize, ket: &Occupation) -> f64 {
    match annihilate(y, ket) {
        Some((amp1, mid)) => {
            let (amp2, out) = create(x, &mid);
            if out == *bra {
                amp1 * amp2
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// <bra| a_i^+ a_j^+ |ket>
fn create_pair_elem(bra: &Occupation, i: usize, j: usize, ket: &Occupation) -> f64 {
    let (amp1, mid) = create(j, ket);
    let (amp2, out) = create(i, &mid);
    if out == *bra {
        amp1 * amp2
    } else {
        0.0
    }
}

/// <bra| a_i a_j |ket>
fn annihilate_pair_elem(bra: &Occupation, i: usize, j: usize, ket: &Occupation) -> f64 {
    match annihilate(j, ket) {
        Some((amp1, mid)) => match annihilate(i, &mid) {
            Some((amp2, out)) => {
                if out == *bra {
                    amp1 * amp2
                } else {
                    0.0
                }
            }
            None => 0.0,
        },
        None => 0.0,
    }
}

/// Full matrix of the smeared normal-ordered energy density over the
/// vacuum + pair basis, built term by term from the mode expansion of the
/// field at the origin.
fn ladder_oracle_matrix(ms: &ModeSet, w: &Weight) -> Vec<Vec<Complex64>> {
    let modes = &ms.modes;
    let mcount = modes.len();
    let volume = ms.volume;
    let mass2 = ms.mass * ms.mass;

    let mut states = vec![Occupation::vacuum()];
    for i in 0..mcount {
        for j in i..mcount {
            states.push(Occupation::pair(i, j));
        }
    }
    let dim = states.len();
    let mut h = vec![vec![Complex64::default(); dim]; dim];

    for k in 0..mcount {
        for kp in 0..mcount {
            let (wk, wkp) = (modes[k].omega, modes[kp].omega);
            let nn = 0.5 / (volume * (wk * wkp).sqrt()) * 0.5;
            let kdot: f64 = (0..3).map(|a| modes[k].k[a] * modes[kp].k[a]).sum();
            let create_coeff = (mass2 - wk * wkp - kdot) * nn;
            let number_coeff = (mass2 + wk * wkp + kdot) * nn;
            let h_sum = hhat_direct(w, wk + wkp);
            let h_diff = hhat_direct(w, wk - wkp);

            for (r, bra) in states.iter().enumerate() {
                for (c, ket) in states.iter().enumerate() {
                    let mut e = Complex64::default();
                    e += h_sum * (create_coeff * create_pair_elem(bra, k, kp, ket));
                    e += h_sum.conj() * (create_coeff * annihilate_pair_elem(bra, k, kp, ket));
                    e += h_diff * (number_coeff * number_elem(bra, k, kp, ket));
                    e += h_diff.conj() * (number_coeff * number_elem(bra, kp, k, ket));
                    h[r][c] += e;
                }
            }
        }
    }
    h
}

#[test]
fn assembly_matches_ladder_oracle() {
    let ms = mode_set_from_lattice_points(
        2.0 * std::f64::consts::PI,
        1.0,
        &[[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]],
    )
    .unwrap();
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let form = assemble_smeared_energy_form(&ms, &w).unwrap();
    let oracle = ladder_oracle_matrix(&ms, &w);
    let dim = form.dimension();
    assert_eq!(dim, oracle.len());

    let mut scale = 0.0f64;
    for row in &oracle {
        for z in row {
            scale = scale.max(z.norm());
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            let got = form.entry(r, c);
            let want = oracle[r][c];
            assert!(
                (got - want).norm() <= 1e-9 * scale,
                "({r},{c}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn single_mode_minimum_frozen_value() {
    let ms = mode_set_from_lattice_points(8.0, 1.0, &[[1, 0, 0]]).unwrap();
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let form = assemble_smeared_energy_form(&ms, &w).unwrap();
    let (lambda, _) = min_eigenvalue(&form).unwrap();
    let frozen = -3.559061419674669e-6;
    assert!(
        (lambda - frozen).abs() <= 1e-10 * frozen.abs(),
        "{lambda} vs {frozen}"
    );
}

#[test]
fn nineteen_mode_form_respects_the_bound() {
    let ms = build_mode_set(8.0, 1.25, 1.0).unwrap();
    assert_eq!(ms.len(), 19);
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let form = assemble_smeared_energy_form(&ms, &w).unwrap();
    assert_eq!(form.dimension(), 191);
    let bound = worldline_qwei_bound(&w, 1.0, 1e-10).unwrap();
    let report = verify_qwei(&form, &bound, 0.25).unwrap();
    assert!(report.lambda_min < 0.0, "negative part exists at desk scale");
    assert!(report.pass, "lambda_min {} vs -1.25 q {}", report.lambda_min, -report.q_value);
    assert!(report.ratio < 1.0, "the finite form cannot beat the bound");
}

#[test]
fn spectrum_is_invariant_under_axis_rotation() {
    let ms = build_mode_set(8.0, 1.25, 1.0).unwrap();
    let rotated = ms.axes_rotated();
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let (a, _) = min_eigenvalue(&assemble_smeared_energy_form(&ms, &w).unwrap()).unwrap();
    let (b, _) = min_eigenvalue(&assemble_smeared_energy_form(&rotated, &w).unwrap()).unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
}

#[test]
fn eigenvector_phase_is_deterministic() {
    let ms = build_mode_set(8.0, 1.0, 1.0).unwrap();
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let form = assemble_smeared_energy_form(&ms, &w).unwrap();
    let (l1, v1) = min_eigenvalue(&form).unwrap();
    let (l2, v2) = min_eigenvalue(&form).unwrap();
    assert_eq!(l1.to_bits(), l2.to_bits());
    for (a, b) in v1.iter().zip(&v2) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
    // the pinned component is real positive
    let max = v1.iter().cloned().fold(Complex64::default(), |m, z| {
        if z.norm() > m.norm() {
            z
        } else {
            m
        }
    });
    assert!(max.im.abs() <= 1e-15 * max.re && max.re > 0.0);
}
