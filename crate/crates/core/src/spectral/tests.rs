use std::f64::consts::PI;

use super::*;
use crate::em::DriftSpec;
use crate::models::{balance_check, singularity_exponent, SubordinatorSpec};
use crate::quadrature::{integrate, Tolerance};

fn stable(alpha: f64) -> LevyModel {
    LevyModel::isotropic_stable(alpha, 1).unwrap()
}

fn at_zero(table: &DensityTable) -> f64 {
    table.values[table.grid.len() / 2]
}

#[test]
fn gaussian_density_at_origin() {
    let grid = SpaceGrid::new(20.0, 1024).unwrap();
    let p = density_fft(&stable(2.0), 0.5, grid).unwrap();
    assert!((at_zero(&p) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
    assert!((p.mass - 1.0).abs() < 1e-12);
    let x = grid.node(600);
    let exact = (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
    assert!((p.values[600] - exact).abs() < 1e-12);
    assert!((p.first[600] + x * exact).abs() < 1e-11);
    assert!((p.second[600] - (x * x - 1.0) * exact).abs() < 1e-10);
}

#[test]
fn cauchy_density_against_closed_form() {
    let model = stable(1.0);
    let grid = SpaceGrid::auto(&model, 1.0, 1.0, AutoGrid::default()).unwrap();
    let p = density_fft(&model, 1.0, grid).unwrap();
    // periodization adds Σ_{m≠0} p(2Rm) ≈ (π R)^{-1} ζ(2) / 2 at the origin
    let r = grid.half_width();
    let wrap: f64 = (1..2000).map(|m| 2.0 / (PI * (1.0 + (2.0 * r * m as f64).powi(2)))).sum();
    assert!((at_zero(&p) - 1.0 / PI - wrap).abs() < 1e-10, "{}", at_zero(&p));
    assert!((at_zero(&p) - 1.0 / PI).abs() < 1e-5);
}

#[test]
fn catalog_densities_have_unit_mass() {
    let sub = SubordinatorSpec::tempered(0.8, 1.0).unwrap();
    let models = [
        stable(1.5),
        LevyModel::relativistic_stable(1.5, 1.0, 1).unwrap(),
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
        LevyModel::lamperti_stable(1.5, 1.0, 1).unwrap(),
        LevyModel::truncated_stable(1.5).unwrap(),
        LevyModel::layered_stable(1.5, 3.0).unwrap(),
        LevyModel::subordinated_bm(sub, 1).unwrap(),
        LevyModel::brownian_motion(1).unwrap(),
    ];
    for m in models {
        let grid = SpaceGrid::auto(&m, 0.1, 0.1, AutoGrid::default()).unwrap();
        let p = density_fft(&m, 0.1, grid).unwrap();
        assert!((p.mass - 1.0).abs() < 1e-6, "{m:?}: {}", p.mass);
        assert!(p.values.iter().all(|&v| v >= 0.0));
        assert!(p.cutoff_weight < 1e-14);
    }
}

#[test]
fn coarse_grid_is_a_resolution_error() {
    let grid = SpaceGrid::new(10.0, 16).unwrap();
    let err = density_fft(&stable(1.5), 0.01, grid).unwrap_err();
    assert!(matches!(err, Error::Resolution(_)), "{err}");
}

#[test]
fn multidimensional_model_is_rejected() {
    let grid = SpaceGrid::new(10.0, 64).unwrap();
    let m = LevyModel::isotropic_stable(1.5, 2).unwrap();
    assert!(matches!(density_fft(&m, 1.0, grid), Err(Error::Shape(_))));
}

#[test]
fn standard_normal_gradient_norm() {
    // trapezoid error at the kink of |p′| is h²|p″(0)|/6
    let grid = SpaceGrid::new(20.0, 4096).unwrap();
    let p = density_fft(&stable(2.0), 0.5, grid).unwrap();
    assert!((grad_l1_norm(&p) - 0.79788).abs() < 1e-5);
}

#[test]
fn reflection_leaves_gradient_norm_unchanged() {
    let m = LevyModel::tempered_stable(1.3, 2.0).unwrap();
    let grid = SpaceGrid::auto(&m, 0.2, 0.2, AutoGrid::default()).unwrap();
    let p = density_fft(&m, 0.2, grid).unwrap();
    let q = p.reflected();
    assert_eq!(grad_l1_norm(&p), grad_l1_norm(&q));
    assert_eq!(second_l1_norm(&p), second_l1_norm(&q));
}

#[test]
fn stable_gradient_norm_is_self_similar() {
    let alpha = 1.5;
    let m = stable(alpha);
    let ts = [0.01, 0.03, 0.1, 0.3, 1.0];
    let grid = SpaceGrid::auto(&m, 0.01, 1.0, AutoGrid::default()).unwrap();
    let spec = Spectrum::new(&m, grid).unwrap();
    let scaled: Vec<f64> = ts
        .iter()
        .map(|&t| grad_l1_norm(&density::density_with(&spec, &m, t).unwrap()) * t.powf(1.0 / alpha))
        .collect();
    for s in &scaled {
        assert!((s / scaled[4] - 1.0).abs() < 1e-3, "{scaled:?}");
    }
}

#[test]
fn gradient_scaling_slopes() {
    let ts = [0.05, 0.1, 0.2, 0.4, 0.8];
    let s = gradient_scaling_exponent(&stable(1.5), &ts).unwrap();
    assert!((s.slope + 2.0 / 3.0).abs() < 0.01, "{}", s.slope);
    assert!(s.propagation.iter().all(|c| c.holds));
    let bm = LevyModel::brownian_motion(1).unwrap();
    let s = gradient_scaling_exponent(&bm, &ts).unwrap();
    assert!((s.slope + 0.5).abs() < 0.01, "{}", s.slope);
    let rel = LevyModel::relativistic_stable(1.5, 1.0, 1).unwrap();
    let s = gradient_scaling_exponent(&rel, &[1e-3, 2e-3, 5e-3, 1e-2]).unwrap();
    assert!((s.slope + 2.0 / 3.0).abs() < 0.1, "{}", s.slope);
}

#[test]
fn gradient_scaling_needs_four_times_in_unit_interval() {
    assert!(gradient_scaling_exponent(&stable(1.5), &[0.1, 0.2, 0.4]).is_err());
    assert!(gradient_scaling_exponent(&stable(1.5), &[0.1, 0.2, 0.4, 2.0]).is_err());
}

#[test]
fn tail_bounds_follow_exact_tails() {
    // Gaussian of variance 2t
    let bm = LevyModel::brownian_motion(1).unwrap();
    let v = tail_mass_bound(&bm, 0.5, 3.0).unwrap();
    assert!((v - 0.002_699_796_063_260_19).abs() < 1e-12);
    // Cauchy: P(|X| > R) = 1 − 2 atan(R)/π ~ 2/(πR)
    let c = tail_mass_bound(&stable(1.0), 1.0, 1e4).unwrap();
    let exact = 1.0 - 2.0 * 1e4_f64.atan() / PI;
    assert!((c / exact - 1.0).abs() < 1e-6);
    // Chernoff bounds are decreasing in R and never below the exact Gaussian tail
    let rel = LevyModel::relativistic_stable(2.0, 1.0, 1).unwrap();
    let b = tail_mass_bound(&rel, 0.5, 0.5).unwrap();
    assert!(b >= tail_mass_bound(&bm, 0.5, 0.5).unwrap());
    for m in [
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
        LevyModel::truncated_stable(1.5).unwrap(),
        LevyModel::lamperti_stable(1.5, 2.0, 1).unwrap(),
    ] {
        let a = tail_mass_bound(&m, 0.5, 5.0).unwrap();
        let b = tail_mass_bound(&m, 0.5, 10.0).unwrap();
        assert!(b < a && a <= 1.0, "{m:?}: {a} {b}");
    }
}

#[test]
fn semigroup_conserves_constants_and_damps_modes() {
    let m = stable(1.5);
    let grid = SpaceGrid::new(4.0 * PI, 256).unwrap();
    let ones = vec![1.0; 256];
    let out = semigroup_apply(&ones, 0.7, &m, grid).unwrap();
    assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-8));
    let xi0 = 5.0 * PI / grid.half_width();
    let g: Vec<f64> = grid.nodes().iter().map(|x| (xi0 * x).cos()).collect();
    let out = semigroup_apply(&g, 0.3, &m, grid).unwrap();
    let damp = (-0.3 * xi0.powf(1.5)).exp();
    for (o, x) in out.iter().zip(grid.nodes()) {
        assert!((o - damp * (xi0 * x).cos()).abs() < 1e-13);
    }
}

#[test]
fn semigroup_property() {
    let m = LevyModel::lamperti_stable(1.6, 1.0, 1).unwrap();
    let grid = SpaceGrid::new(10.0, 512).unwrap();
    let spec = Spectrum::new(&m, grid).unwrap();
    let g: Vec<f64> = grid.nodes().iter().map(|x| (-x * x).exp() * (3.0 * x).sin()).collect();
    let a = semigroup_apply_with(&spec, &semigroup_apply_with(&spec, &g, 0.2).unwrap(), 0.35).unwrap();
    let b = semigroup_apply_with(&spec, &g, 0.55).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn small_time_semigroup_matches_gaussian_convolution() {
    let smooth = |x: f64| 0.5 * (((x + 1.0) / 0.1).tanh() - ((x - 1.0) / 0.1).tanh());
    let m = LevyModel::brownian_motion(1).unwrap();
    let grid = SpaceGrid::new(8.0, 2048).unwrap();
    let g: Vec<f64> = grid.nodes().iter().map(|&x| smooth(x)).collect();
    let t = 1e-4;
    let out = semigroup_apply(&g, t, &m, grid).unwrap();
    let s = (2.0 * t).sqrt();
    let mut gap = 0.0_f64;
    for j in (256..1792).step_by(37) {
        let x = grid.node(j);
        let direct = integrate(
            |y: f64| smooth(x + y) * (-y * y / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt()),
            -12.0 * s,
            12.0 * s,
            Tolerance::new(1e-14, 1e-12),
        )
        .unwrap()
        .value;
        assert!((out[j] - direct).abs() < 1e-9, "x = {x}");
        gap = gap.max((out[j] - g[j]).abs());
    }
    assert!(gap < 2e-2);
}

#[test]
fn resolvent_of_constants_and_modes() {
    let m = stable(1.5);
    let grid = SpaceGrid::new(4.0 * PI, 256).unwrap();
    let t = 0.8;
    let u = resolvent_source(|_| vec![1.0; 256], t, &m, grid).unwrap();
    assert!(u.iter().all(|v| (v - t).abs() < 1e-6));
    let xi0 = 3.0 * PI / grid.half_width();
    let g: Vec<f64> = grid.nodes().iter().map(|x| (xi0 * x).cos()).collect();
    let u = resolvent_source(|_| g.clone(), t, &m, grid).unwrap();
    let psi = xi0.powf(1.5);
    let factor = (1.0 - (-t * psi).exp()) / psi;
    for (v, x) in u.iter().zip(grid.nodes()) {
        assert!((v - factor * (xi0 * x).cos()).abs() < 1e-12);
    }
    assert!(sup(&u) <= t * 1.0 + 1e-12);
}

#[test]
fn resolvent_of_time_dependent_source_is_contractive() {
    let m = LevyModel::tempered_stable(1.5, 1.0).unwrap();
    let grid = SpaceGrid::new(4.0 * PI, 256).unwrap();
    let nodes = grid.nodes();
    let t = 0.6;
    let u = resolvent_source(
        |s| nodes.iter().map(|x| (2.0 * x).sin() * (5.0 * s).cos()).collect(),
        t,
        &m,
        grid,
    )
    .unwrap();
    assert!(sup(&u) <= t);
    // single-mode oracle: ∫₀ᵗ e^{−(t−s)ψ} cos(5s) ds
    let psi = radial_exponent(&m, 2.0).unwrap();
    let w = 5.0;
    let exact = (psi * (w * t).cos() + w * (w * t).sin() - psi * (-psi * t).exp()) / (psi * psi + w * w);
    let j = 200;
    assert!((u[j] - exact * (2.0 * nodes[j]).sin()).abs() < 1e-5, "{} {}", u[j], exact);
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn cosine_drift(a: f64) -> DriftSpec {
    DriftSpec::cosine(a, 1.0, 1).unwrap()
}

#[test]
fn zero_drift_truncates_the_recursion() {
    let m = stable(1.5);
    let g = DriftSpec::cosine(1.0, 1.0, 1).unwrap();
    let sol = picard_solve(&DriftSpec::zero(1).unwrap(), &g, 0.5, &m, PicardOptions::default()).unwrap();
    assert_eq!(sol.history.len(), 1);
    let grid = PicardOptions::default().grid;
    let nodes = grid.nodes();
    let res = resolvent_source(|_| nodes.iter().map(|x| x.cos()).collect(), 0.5, &m, grid).unwrap();
    for (a, b) in sol.u[0].iter().zip(&res) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(sol.u[sol.u.len() - 1].iter().all(|&v| v == 0.0));
}

#[test]
fn zero_drift_time_dependent_source_matches_reversed_resolvent() {
    let m = stable(1.7);
    let g = DriftSpec::cosine_time(1.0, 1.0, 3.0, 1).unwrap();
    let sol = picard_solve(&DriftSpec::zero(1).unwrap(), &g, 0.5, &m, PicardOptions::default()).unwrap();
    let grid = PicardOptions::default().grid;
    let nodes = grid.nodes();
    let res = resolvent_source(
        |s| nodes.iter().map(|x| x.cos() * (3.0 * (0.5 - s)).cos()).collect(),
        0.5,
        &m,
        grid,
    )
    .unwrap();
    for (a, b) in sol.u[0].iter().zip(&res) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn zero_source_gives_zero_solution() {
    let m = stable(1.5);
    let zero = DriftSpec::zero(1).unwrap();
    let sol = picard_solve(&cosine_drift(1.0), &zero, 0.5, &m, PicardOptions::default()).unwrap();
    assert_eq!(sol.history, vec![0.0]);
    assert!(sol.u.iter().flatten().all(|&v| v == 0.0));
    assert_eq!(kolmogorov_residual(&sol, &cosine_drift(1.0), &zero, &m).unwrap(), 0.0);
}

#[test]
fn picard_contracts_and_solves_the_equation() {
    let m = stable(1.5);
    let b = cosine_drift(1.0);
    let sol = picard_solve(&b, &b, 0.5, &m, PicardOptions::default()).unwrap();
    assert!(sol.ratios.iter().all(|&r| r <= 0.5), "{:?}", sol.ratios);
    assert!(sol.contracting_run(0.5) >= 5, "{:?}", sol.history);
    let res = kolmogorov_residual(&sol, &b, &b, &m).unwrap();
    assert!(res <= 5e-3, "{res}");
    assert!(sol.certificate.is_some());
}

#[test]
fn single_mode_residual_is_small() {
    let m = stable(1.5);
    let zero = DriftSpec::zero(1).unwrap();
    let g = cosine_drift(1.0);
    let sol = picard_solve(&zero, &g, 0.5, &m, PicardOptions::default()).unwrap();
    let res = kolmogorov_residual(&sol, &zero, &g, &m).unwrap();
    assert!(res <= 1e-4, "{res}");
}

#[test]
fn strong_drift_forces_halving() {
    let m = stable(1.5);
    let b = cosine_drift(8.0);
    let sol = picard_solve(&b, &b, 1.0, &m, PicardOptions::default()).unwrap();
    assert!(sol.halvings > 0);
    assert!(sol.horizon < 1.0);
    assert!(sol.ratios.iter().all(|&r| r <= 0.5));
    let opts = PicardOptions {
        max_halvings: 0,
        ..PicardOptions::default()
    };
    assert!(matches!(picard_solve(&b, &b, 1.0, &m, opts), Err(Error::Stiffness(_))));
}

#[test]
fn certificate_decreases_with_horizon() {
    let m = stable(1.5);
    let b = cosine_drift(1.0);
    let c: Vec<f64> = [0.8, 0.4, 0.2]
        .iter()
        .map(|&t| {
            picard_solve(&b, &b, t, &m, PicardOptions::default())
                .unwrap()
                .certificate
                .unwrap()
                .constant
        })
        .collect();
    assert!(c[0] > c[1] && c[1] > c[2], "{c:?}");
}

#[test]
fn unbalanced_drift_is_refused_unless_forced() {
    let m = stable(1.2);
    let b = DriftSpec::rough_sine(0.1, 1.0, 1).unwrap();
    assert!(!balance_check(1.2, 1.2, 0.1).unwrap().ok);
    assert!(matches!(
        picard_solve(&b, &b, 0.25, &m, PicardOptions::default()),
        Err(Error::Domain { name: "kappa", .. })
    ));
    let opts = PicardOptions {
        force: true,
        ..PicardOptions::default()
    };
    let sol = picard_solve(&b, &b, 0.25, &m, opts).unwrap();
    assert!(sol.kappa >= 1.0);
    assert!(sol.certificate.is_none());
}

#[test]
fn holder_seminorm_examples() {
    let h = 2.0 / 1024.0;
    let xs: Vec<f64> = (0..=1024).map(|j| -1.0 + j as f64 * h).collect();
    assert_eq!(holder_seminorm(&vec![3.0; 1025], h, 0.5).unwrap(), 0.0);
    let lin = holder_seminorm(&xs, h, 1.0).unwrap();
    assert!((lin - 1.0).abs() < 1e-12);
    let cusp: Vec<f64> = xs.iter().map(|x| x.abs().sqrt()).collect();
    assert!((holder_seminorm(&cusp, h, 0.5).unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn kappa_matches_balance_on_picard_inputs() {
    for (a, b) in [(1.5, 1.0), (1.2, 0.1), (1.9, 0.5), (1.3, 0.3)] {
        let ok = balance_check(a, a, b).unwrap().ok;
        assert_eq!(singularity_exponent(a, a, b) < 1.0, ok);
    }
}

#[test]
fn density_csv_has_header_and_rows() {
    let grid = SpaceGrid::new(10.0, 64).unwrap();
    let p = density_fft(&stable(2.0), 1.0, grid).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x,p,dp,d2p"));
    assert_eq!(text.lines().count(), 65);
}
