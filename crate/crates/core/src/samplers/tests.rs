use super::*;
use crate::diagnostics::{cos_moment, ks_one_sample, ks_two_sample, mean_stderr};
use crate::models::{char_exponent, LevyModel, SubordinatorSpec};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::rng::RngStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

fn stable_draws(alpha: f64, scale: f64, m: usize, seed: u64, stream: u64) -> Vec<f64> {
    sample_stable(alpha, scale, m, &mut RngStream::new(seed, stream)).unwrap()
}

fn laplace(samples: &[f64], lambda: f64) -> (f64, f64) {
    let e: Vec<f64> = samples.iter().map(|s| (-lambda * s).exp()).collect();
    mean_stderr(&e)
}

#[test]
fn gaussian_end_of_stable_family_has_variance_two() {
    let x = stable_draws(2.0, 1.0, 400_000, 1, 0);
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (v, se) = mean_stderr(&sq);
    assert!((v - 2.0).abs() < 4.0 * se, "{v} ± {se}");
}

#[test]
fn stable_empirical_cf_matches_exponent() {
    let x = stable_draws(1.5, 1.0, 1_000_000, 2, 0);
    for xi in [0.5f64, 1.0, 2.0] {
        let (c, se) = cos_moment(&x, xi);
        let want = (-xi.powf(1.5)).exp();
        assert!((c - want).abs() < 3.0 * se, "ξ={xi}: {c} vs {want} (se {se})");
    }
}

#[test]
fn stable_cauchy_case_matches_closed_form_cdf() {
    let x = stable_draws(1.0, 1.0, 100_000, 3, 0);
    let ks = ks_one_sample(&x, |v| 0.5 + v.atan() / std::f64::consts::PI);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn stable_scale_is_a_dilation() {
    let a = stable_draws(1.5, 2.0, 50_000, 4, 0);
    let b: Vec<f64> = stable_draws(1.5, 1.0, 50_000, 4, 1).iter().map(|v| 2.0 * v).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn stable_rejects_bad_index() {
    let mut rng = RngStream::new(0, 0);
    assert!(sample_stable(2.5, 1.0, 1, &mut rng).is_err());
    assert!(sample_stable(0.0, 1.0, 1, &mut rng).is_err());
}

fn subordinator_draws(sub: &SubordinatorSpec, t: f64, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..m).map(|_| sample_subordinator(sub, t, &mut rng).unwrap()).collect()
}

#[test]
fn stable_subordinator_laplace_transform() {
    for (rho, t) in [(0.6, 0.5), (0.75, 1.0), (0.9, 2.0)] {
        let s = subordinator_draws(&SubordinatorSpec::stable(rho).unwrap(), t, 1_000_000, 5);
        let (l, se) = laplace(&s, 1.0);
        assert!((l - (-t).exp()).abs() < 3.0 * se, "ρ={rho}: {l} vs {}", (-t as f64).exp());
    }
}

#[test]
fn half_stable_subordinator_is_levy_distributed() {
    // E e^{−λS} = e^{−√λ}: Lévy law with c = 1/2, F(x) = erfc(1/(2√x)).
    let mut rng = RngStream::new(6, 0);
    let s: Vec<f64> = (0..200_000)
        .map(|_| sample_stable_subordinator(0.5, 1.0, &mut rng).unwrap())
        .collect();
    let ks = ks_one_sample(&s, |x| if x <= 0.0 { 0.0 } else { erfc(0.5 / x.sqrt()) });
    assert!(ks.statistic < 0.01, "{ks:?}");
}

#[test]
fn stable_subordinator_self_similarity() {
    let mut rng = RngStream::new(7, 0);
    let a: Vec<f64> = (0..50_000)
        .map(|_| sample_stable_subordinator(0.7, 0.3, &mut rng).unwrap())
        .collect();
    let mut rng = RngStream::new(7, 1);
    let b: Vec<f64> = (0..50_000)
        .map(|_| 0.3f64.powf(1.0 / 0.7) * sample_stable_subordinator(0.7, 1.0, &mut rng).unwrap())
        .collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn tempered_acceptance_rate_matches_laplace_identity() {
    let (rho, m, t) = (0.75, 1.0, 0.5);
    let mut rng = RngStream::new(8, 0);
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    for _ in 0..200_000 {
        let (_, st) = sample_tempered_subordinator_counted(rho, m, t, &mut rng).unwrap();
        assert_eq!(st.pieces, 1);
        accepted += st.pieces;
        proposals += st.proposals;
    }
    let p = accepted as f64 / proposals as f64;
    let want = (-t * m.powf(2.0 * rho)).exp();
    // binomial standard error of the acceptance ratio
    let se = (want * (1.0 - want) / proposals as f64).sqrt();
    assert!((p - want).abs() < 4.0 * se, "{p} vs {want}");
}

#[test]
fn tempered_subordinator_splits_long_horizons() {
    let mut rng = RngStream::new(9, 0);
    let (_, st) = sample_tempered_subordinator_counted(0.75, 2.0, 3.0, &mut rng).unwrap();
    assert_eq!(st.pieces, (3.0 * 2f64.powf(1.5) / 0.7).ceil() as u64);
}

#[test]
fn tempered_subordinator_laplace_transform() {
    for (rho, m, t) in [(0.75, 1.0, 1.0), (0.6, 2.0, 0.7)] {
        let sub = SubordinatorSpec::tempered(rho, m).unwrap();
        let s = subordinator_draws(&sub, t, 1_000_000, 10);
        let (l, se) = laplace(&s, 1.0);
        let want = (-t * ((1.0 + m * m).powf(rho) - m.powf(2.0 * rho))).exp();
        assert!((l - want).abs() < 3.0 * se, "{l} vs {want}");
    }
}

#[test]
fn zero_tilt_recovers_stable_subordinator() {
    let mut rng = RngStream::new(11, 0);
    let a: Vec<f64> = (0..50_000)
        .map(|_| sample_tempered_subordinator(0.8, 0.0, 1.0, &mut rng).unwrap())
        .collect();
    let mut rng = RngStream::new(11, 1);
    let b: Vec<f64> = (0..50_000)
        .map(|_| sample_stable_subordinator(0.8, 1.0, &mut rng).unwrap())
        .collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn lamperti_remainder_mass_matches_quadrature() {
    use super::subordinator::{lamperti_remainder_density, lamperti_remainder_mass};
    for (rho, m) in [(0.6, 0.3), (0.75, 1.0), (0.9, 4.0)] {
        let tol = Tolerance::new(1e-15, 1e-12);
        // r = v^{1/(1−ρ)} absorbs the r^{−ρ} endpoint
        let k = 1.0 / (1.0 - rho);
        let head = integrate(
            |v| {
                if v <= 0.0 {
                    return 0.0;
                }
                let r = v.powf(k);
                lamperti_remainder_density(rho, m, r) * k * v.powf(k - 1.0)
            },
            0.0,
            1.0,
            tol,
        )
        .unwrap()
        .value;
        let tail = integrate_to_infinity(|r| lamperti_remainder_density(rho, m, r), 1.0, tol)
            .unwrap()
            .value;
        let mass = lamperti_remainder_mass(rho, m);
        assert!(((head + tail) / mass - 1.0).abs() < 1e-8, "{} vs {mass}", head + tail);
    }
}

#[test]
fn lamperti_subordinator_laplace_transform() {
    for (rho, m, t) in [(0.75, 1.0, 1.0), (0.6, 0.3, 0.5)] {
        let sub = SubordinatorSpec::lamperti(rho, m).unwrap();
        let s = subordinator_draws(&sub, t, 400_000, 12);
        for lambda in [0.5, 1.0, 4.0] {
            let (l, se) = laplace(&s, lambda);
            let want = (-t * crate::models::bernstein_eval(&sub, lambda).unwrap()).exp();
            assert!((l - want).abs() < 3.5 * se, "λ={lambda}: {l} vs {want} ± {se}");
        }
    }
}

#[test]
fn subordinated_gaussian_basics() {
    let mut rng = RngStream::new(13, 0);
    assert_eq!(sample_subordinated_bm(0.0, 4, &mut rng).unwrap(), vec![0.0; 4]);
    assert!(sample_subordinated_bm(-1.0, 1, &mut rng).is_err());
    let norms: Vec<f64> = (0..50_000)
        .map(|_| {
            let v = sample_subordinated_bm(1.0, 3, &mut rng).unwrap();
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    let chi2 = ChiSquared::new(3.0).unwrap();
    let ks = ks_one_sample(&norms, |r| chi2.cdf(r * r));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

fn cf_check(model: &LevyModel, t: f64, m: usize, seed: u64, xis: &[f64], bias: f64) {
    let sampler = IncrementSampler::new(model, t).unwrap();
    let mut rng = RngStream::new(seed, 0);
    let x: Vec<f64> = (0..m)
        .map(|_| {
            let mut v = [0.0];
            sampler.fill(&mut v, &mut rng).unwrap();
            v[0]
        })
        .collect();
    for &xi in xis {
        let (c, se) = cos_moment(&x, xi);
        let want = (-t * char_exponent(model, &[xi]).unwrap().re).exp();
        let extra = sampler.truncation().map_or(0.0, |tr| tr.cf_bias_bound(xi, t)) + bias;
        assert!(
            (c - want).abs() < 3.0 * se + extra,
            "{model} ξ={xi}: {c} vs {want} (se {se}, bias {extra})"
        );
    }
}

#[test]
fn relativistic_pipeline_matches_exponent() {
    let model = LevyModel::relativistic_stable(1.5, 1.0, 1).unwrap();
    cf_check(&model, 0.7, 400_000, 14, &[0.3, 1.0, 2.5], 0.0);
}

#[test]
fn lamperti_pipeline_matches_exponent() {
    let model = LevyModel::lamperti_stable(1.5, 1.0, 1).unwrap();
    cf_check(&model, 0.7, 400_000, 15, &[0.3, 1.0, 2.5], 0.0);
}

#[test]
fn tempered_decomposition_matches_exponent() {
    let model = LevyModel::tempered_stable(1.5, 1.0).unwrap();
    cf_check(&model, 1.0, 400_000, 16, &[0.3, 1.0, 2.5, 5.0], 0.0);
}

#[test]
fn layered_decomposition_matches_exponent() {
    let model = LevyModel::layered_stable(1.3, 0.8).unwrap();
    cf_check(&model, 0.5, 400_000, 17, &[0.3, 1.0, 2.5], 0.0);
}

#[test]
fn truncation_at_one_leaves_only_the_gaussian_part() {
    let model = LevyModel::truncated_stable(1.5).unwrap();
    let mut rng = RngStream::new(18, 0);
    let dec = JumpDecomposition::new(&model, 1.0).unwrap();
    assert_eq!(dec.info().intensity, 0.0);
    assert!((dec.info().sigma2 - 4.0).abs() < 1e-15);
    let x: Vec<f64> = (0..50_000).map(|_| dec.draw(0.25, &mut rng).unwrap().0).collect();
    let sd = (0.25f64 * 4.0).sqrt();
    let ks = ks_one_sample(&x, |v| 0.5 * erfc(-v / (sd * std::f64::consts::SQRT_2)));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn reported_truncation_data_matches_quadrature() {
    let tol = Tolerance::new(1e-300, 1e-13);
    for model in [
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
        LevyModel::tempered_stable(1.2, 3.0).unwrap(),
        LevyModel::layered_stable(1.7, 1.5).unwrap(),
    ] {
        let q = model.radial_density().unwrap();
        for eps in [1e-3, 0.05, 0.4] {
            let info = JumpDecomposition::new(&model, eps).unwrap().info();
            // dyadic pieces toward 0 for ∫ r² Q over (0, ε)
            let mut sigma2 = 0.0;
            let mut hi = eps;
            for _ in 0..200 {
                let lo = 0.5 * hi;
                sigma2 += integrate(|r| 2.0 * r * r * q.eval(r), lo, hi, tol).unwrap().value;
                hi = lo;
            }
            assert!((info.sigma2 / sigma2 - 1.0).abs() < 1e-8, "{model} ε={eps}");
            let mut mass = 0.0;
            let mut lo = eps;
            while lo < 1e4 {
                let hi = if lo < 1.0 && 2.0 * lo > 1.0 { 1.0 } else { 2.0 * lo };
                mass += integrate(|r| 2.0 * q.eval(r), lo, hi, tol).unwrap().value;
                lo = hi;
            }
            mass += integrate_to_infinity(|r| 2.0 * q.eval(r), lo, tol).unwrap().value;
            assert!((info.intensity / mass - 1.0).abs() < 1e-8, "{model} ε={eps}");
        }
    }
}

#[test]
fn large_jump_count_has_poisson_mean() {
    let model = LevyModel::tempered_stable(1.5, 1.0).unwrap();
    let dec = JumpDecomposition::new(&model, 0.05).unwrap();
    let dt = 0.1;
    let mut rng = RngStream::new(19, 0);
    let counts: Vec<f64> = (0..100_000).map(|_| dec.draw(dt, &mut rng).unwrap().1 as f64).collect();
    let (mean, se) = mean_stderr(&counts);
    let want = dt * dec.info().intensity;
    assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want}");
}

#[test]
fn default_epsilon_rule_caps_jump_work() {
    for model in [
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
        LevyModel::truncated_stable(1.8).unwrap(),
    ] {
        for dt in [1.0, 1.0 / 64.0, 1.0 / 2048.0] {
            let s = IncrementSampler::new(&model, dt).unwrap();
            let info = s.truncation().unwrap();
            assert!(dt * info.intensity <= 32.0 * (1.0 + 1e-8), "{model} dt={dt}: {info:?}");
            assert!(info.epsilon > 0.0 && info.epsilon <= 1.0);
        }
    }
}

#[test]
fn brownian_increments_have_variance_two_dt() {
    let model = LevyModel::brownian_motion(1).unwrap();
    let mut rng = RngStream::new(20, 0);
    let mut sq = Vec::new();
    for _ in 0..50_000 {
        let b = increments(&model, 1.0, 4, &mut rng).unwrap();
        assert_eq!(b.rows(), 4);
        assert!(b.truncation.is_none());
        sq.extend(b.values.iter().map(|v| v * v));
    }
    let (v, se) = mean_stderr(&sq);
    assert!((v - 0.5).abs() < 4.0 * se, "{v}");
}

fn terminal_values(model: &LevyModel, t: f64, n: usize, m: usize, seed: u64) -> Vec<f64> {
    let sampler = IncrementSampler::new(model, t / n as f64).unwrap();
    (0..m)
        .map(|i| {
            let b = sampler.sample(n, &mut RngStream::new(seed, i as u64)).unwrap();
            b.values.iter().sum()
        })
        .collect()
}

#[test]
fn increments_are_additive_in_distribution() {
    for model in [
        LevyModel::isotropic_stable(1.5, 1).unwrap(),
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
    ] {
        let a = terminal_values(&model, 1.0, 8, 20_000, 21);
        let b = terminal_values(&model, 1.0, 4, 20_000, 22);
        assert!(ks_two_sample(&a, &b).p_value > 0.01, "{model}");
    }
}

#[test]
fn stable_increments_are_self_similar() {
    let model = LevyModel::isotropic_stable(1.5, 1).unwrap();
    let a = terminal_values(&model, 3.0, 4, 20_000, 23);
    let b: Vec<f64> = terminal_values(&model, 1.0, 4, 20_000, 24)
        .iter()
        .map(|v| 3f64.powf(1.0 / 1.5) * v)
        .collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn multidimensional_stable_has_isotropic_exponent() {
    let model = LevyModel::isotropic_stable(1.5, 2).unwrap();
    let sampler = IncrementSampler::new(&model, 0.5).unwrap();
    let mut rng = RngStream::new(25, 0);
    let mut proj = Vec::new();
    let dir = [0.6, 0.8];
    for _ in 0..300_000 {
        let mut v = [0.0; 2];
        sampler.fill(&mut v, &mut rng).unwrap();
        proj.push(dir[0] * v[0] + dir[1] * v[1]);
    }
    for xi in [0.5f64, 1.5] {
        let (c, se) = cos_moment(&proj, xi);
        let want = (-0.5 * xi.powf(1.5)).exp();
        assert!((c - want).abs() < 3.0 * se, "{c} vs {want}");
    }
}

#[test]
fn batches_are_reproducible_and_replayable() {
    for model in [
        LevyModel::isotropic_stable(1.5, 1).unwrap(),
        LevyModel::lamperti_stable(1.5, 1.0, 3).unwrap(),
        LevyModel::tempered_stable(1.5, 1.0).unwrap(),
    ] {
        let a = increments(&model, 1.0, 16, &mut RngStream::new(26, 3)).unwrap();
        let b = increments(&model, 1.0, 16, &mut RngStream::new(26, 3)).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_batch(&a, 26, 3, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 6 * 8 + 8 * a.values.len());
        let (c, h) = read_batch(&model, buf.as_slice()).unwrap();
        assert_eq!(c.values, a.values);
        assert_eq!(c.dt.to_bits(), a.dt.to_bits());
        assert_eq!((h.seed, h.stream_id), (26, 3));
        let other = LevyModel::isotropic_stable(1.4, model.dim()).unwrap();
        assert!(read_batch(&other, buf.as_slice()).is_err());
    }
}

#[test]
fn tempered_fourth_moment_is_stable_under_doubling() {
    let model = LevyModel::tempered_stable(1.5, 1.0).unwrap();
    let x = terminal_values(&model, 1.0, 1, 200_000, 27);
    let m4 = |xs: &[f64]| xs.iter().map(|v| v.powi(4)).sum::<f64>() / xs.len() as f64;
    let half = m4(&x[..100_000]);
    let full = m4(&x);
    assert!(full.is_finite() && (full / half - 1.0).abs() < 0.2, "{half} {full}");
}

#[test]
fn stable_first_absolute_moment_converges() {
    // E|X| = 2Γ(1 − 1/α)/π for ψ(ξ) = |ξ|^α
    let alpha: f64 = 1.5;
    let x = stable_draws(alpha, 1.0, 1_000_000, 28, 0);
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let (m, se) = mean_stderr(&abs);
    let want = 2.0 * gamma(1.0 - 1.0 / alpha) / std::f64::consts::PI;
    assert!((m - want).abs() < 4.0 * se, "{m} vs {want} ± {se}");
}

#[test]
fn distinct_streams_are_uncorrelated_through_samplers() {
    let a = stable_draws(2.0, 1.0, 100_000, 29, 0);
    let b = stable_draws(2.0, 1.0, 100_000, 29, 1);
    assert!(crate::diagnostics::correlation(&a, &b).abs() < 0.01);
}
