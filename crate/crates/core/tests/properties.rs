use inertia_core::analysis::{contraction_branches, parameter_box, rate_constants};
use inertia_core::dynamics::energy_nonincreasing;
use inertia_core::perturbations::standard_normals;
use inertia_core::problems::{example51, example52, quadratic};
use inertia_core::rates::{fit_rate, geometric_sum_oracle, oscillation_of};
use inertia_core::{
    check_assumptions, continuous_energy, discrete_energy, integrate, run, AlgorithmConfig,
    Direction, DomainBox, FitKind, OdeConfig, PerturbationSpec, Point, Problem, StoppingRule, Theorem,
};
use proptest::prelude::*;

fn fd_gradient(p: &Problem, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (p.value(&a) - p.value(&b)) / (2.0 * h)
        })
        .collect()
}

/// Maps `u ∈ (0, 1)` into the open β interval at `alpha`.
fn beta_in_box(p: &Problem, theorem: Theorem, alpha: f64, u: f64) -> f64 {
    let bx = parameter_box(p, theorem, Some(alpha), None).unwrap();
    let b = bx.beta_interval.unwrap();
    b.lo + u * (b.hi - b.lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn example51_gradient_matches_finite_differences(x in -10.0f64..10.0) {
        let p = example51();
        let g = p.gradient(&[x]);
        prop_assert!((g[0] - fd_gradient(&p, &[x])[0]).abs() <= 1e-5);
        prop_assert!(p.value(&[x]) >= 0.0);
    }

    #[test]
    fn example52_gradient_matches_finite_differences(x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let p = example52();
        let g = p.gradient(&[x, y]);
        let fd = fd_gradient(&p, &[x, y]);
        prop_assert!((g[0] - fd[0]).abs() <= 1e-5 && (g[1] - fd[1]).abs() <= 1e-5);
        prop_assert!(p.value(&[x, y]) >= p.min_value().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn t41_box_sign_conditions_and_rho(alpha in 1e-3f64..0.4999, u in 1e-6f64..0.999_999) {
        let p = example51();
        let beta = beta_in_box(&p, Theorem::T41, alpha, u);
        prop_assert!(beta < alpha);
        prop_assert!((alpha * alpha + 1.0) * beta - 4.0 * alpha * beta * beta - alpha.powi(3) > 0.0);
        let rho = rate_constants(&p, Theorem::T41, alpha, beta, 1.0 / 6.0).unwrap().rho.unwrap();
        prop_assert!(rho > 0.0 && rho < 1.0, "rho = {rho}");
    }

    #[test]
    fn t42_box_sign_conditions_and_sigma(alpha in 1e-3f64..0.4999, u in 1e-6f64..0.999_999) {
        let p = example52();
        let beta = beta_in_box(&p, Theorem::T42, alpha, u);
        prop_assert!(beta < alpha / 2.0);
        prop_assert!(beta - 4.0 * alpha * beta * beta - alpha.powi(3) > 0.0);
        let d = rate_constants(&p, Theorem::T42, alpha, beta, 0.125).unwrap();
        let sigma = d.sigma.unwrap();
        prop_assert!(sigma > 0.0 && sigma < 1.0, "sigma = {sigma}");
        prop_assert!(d.n.unwrap() > 0.0);
    }

    #[test]
    fn energies_are_nonnegative(
        x in -5.0f64..5.0, y in -5.0f64..5.0, vx in -5.0f64..5.0, vy in -5.0f64..5.0,
        alpha in 0.01f64..1.0, beta in 0.0f64..1.0, c in 0.0f64..100.0,
    ) {
        let p = example52();
        prop_assert!(continuous_energy(&p, alpha, beta, &[x, y], &[vx, vy]).unwrap() >= 0.0);
        prop_assert!(discrete_energy(&p, c, &[x, y], &[vx, vy]).unwrap() >= 0.0);
        let p = example51();
        prop_assert!(continuous_energy(&p, alpha, beta, &[x], &[vx]).unwrap() >= 0.0);
        prop_assert!(discrete_energy(&p, c, &[x], &[vx]).unwrap() >= 0.0);
    }

    #[test]
    fn power_decay_magnitude_law(k in 1u64..=1_000_000, c0 in 1e-3f64..10.0, pw in 0.1f64..3.0, dim in 1usize..6) {
        for dir in [Direction::Axis(0), Direction::Random] {
            let spec = PerturbationSpec::power_decay(c0, pw, dir).unwrap().with_seed(k);
            let e = spec.sample_discrete(k, dim);
            let law = e.norm() * (k as f64).powf(pw);
            prop_assert!((law - c0).abs() <= 1e-12 * c0, "{law} vs {c0}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn assumption_checks_are_deterministic(seed in any::<u64>(), n in 1usize..500) {
        let p = example52();
        let dom = DomainBox::cube(2, -5.0, 5.0);
        prop_assert_eq!(check_assumptions(&p, &dom, n, seed).unwrap(), check_assumptions(&p, &dom, n, seed).unwrap());
    }

    #[test]
    fn geometric_sums_are_bounded(theta in 0.05f64..0.95, q in 0.5f64..3.0) {
        let g = geometric_sum_oracle(theta, q, 10_000).unwrap();
        prop_assert!(g.bounded, "theta={theta} q={q}");
        prop_assert!(g.max_scaled.is_finite());
    }

    #[test]
    fn oscillation_invariant_under_rescaling(
        pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 3..60),
        scale in 1e-3f64..1e3,
    ) {
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * scale).collect()).collect();
        prop_assert_eq!(oscillation_of(&pts).unwrap(), oscillation_of(&scaled).unwrap());
    }

    #[test]
    fn fit_recovers_synthetic_slopes(rate in 0.01f64..3.0, amp in 0.1f64..10.0) {
        let exp: Vec<(f64, f64)> = (1..=100).map(|k| (k as f64, amp * (-rate * k as f64 / 10.0).exp())).collect();
        let fit = fit_rate(&exp, FitKind::Exponential, 0.5).unwrap();
        prop_assert!((fit.rate - rate / 10.0).abs() <= 1e-9 * rate);
        let pow: Vec<(f64, f64)> = (1..=100).map(|k| (k as f64, amp * (k as f64).powf(-rate))).collect();
        let fit = fit_rate(&pow, FitKind::Power, 0.5).unwrap();
        prop_assert!((fit.rate - rate).abs() <= 1e-9 * rate);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn iaa_reduces_to_heavy_ball_and_nesterov(alpha in 0.0f64..0.95, s_frac in 0.05f64..1.0, x0 in -8.0f64..8.0) {
        let p = example51();
        let s = s_frac / p.lipschitz();
        let start = Point::new(vec![x0]);
        let stop = StoppingRule::iterations(100);
        let pairs = [
            (AlgorithmConfig::iaa(alpha, 0.0, s), AlgorithmConfig::hbm(alpha, s)),
            (AlgorithmConfig::iaa(alpha, alpha, s), AlgorithmConfig::nag(alpha, s)),
        ];
        for (iaa, base) in pairs {
            let a = run(&p, &iaa, &start, &start, &stop).unwrap();
            let b = run(&p, &base, &start, &start, &stop).unwrap();
            prop_assert_eq!(a.records.len(), b.records.len());
            for (ra, rb) in a.records.iter().zip(&b.records) {
                prop_assert!((ra.x[0] - rb.x[0]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn iaa_energy_contracts_on_quadratics(
        spectrum in prop::collection::vec(0.1f64..10.0, 1..5),
        alpha in 0.01f64..0.49, u in 0.01f64..0.99,
        x0 in prop::collection::vec(-5.0f64..5.0, 5),
    ) {
        let p = quadratic(spectrum.clone()).unwrap();
        let beta = beta_in_box(&p, Theorem::T41, alpha, u);
        let s = 1.0 / p.lipschitz();
        let rho = rate_constants(&p, Theorem::T41, alpha, beta, s).unwrap().rho.unwrap();
        let start = Point::new(x0[..spectrum.len()].to_vec());
        let r = run(&p, &AlgorithmConfig::iaa(alpha, beta, s), &start, &start, &StoppingRule::iterations(300)).unwrap();
        for w in r.records[1..].windows(2) {
            let (e0, e1) = (w[0].energy.unwrap(), w[1].energy.unwrap());
            prop_assert!(e1 <= (1.0 - rho) * e0 * (1.0 + 1e-9) + 1e-300, "k={} {e1} > {e0}", w[1].k);
        }
    }

    #[test]
    fn unperturbed_iaa_per_is_bitwise_iaa(seed in any::<u64>(), x0 in -5.0f64..5.0, y0 in -5.0f64..5.0) {
        let p = example52();
        let clean = AlgorithmConfig::iaa(0.4, 0.15, 0.125);
        let start = Point::new(vec![x0, y0]);
        let stop = StoppingRule::iterations(200);
        let a = run(&p, &clean, &start, &start, &stop).unwrap();
        let b = run(&p, &clean.clone().with_perturbation(PerturbationSpec::none().with_seed(seed)), &start, &start, &stop).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn t31_energy_is_nonincreasing(a_frac in 0.05f64..1.0, u in 0.01f64..0.99, x0 in -5.0f64..5.0, v0 in -2.0f64..2.0) {
        let p = example51();
        let hi = parameter_box(&p, Theorem::T31, None, None).unwrap().alpha_interval.hi;
        let alpha = a_frac * hi;
        let beta = beta_in_box(&p, Theorem::T31, alpha, u);
        let cfg = OdeConfig::new(alpha, beta, 10.0).with_record_every(10);
        let recs = integrate(&p, &cfg, &Point::new(vec![x0]), &Point::new(vec![v0])).unwrap();
        let (ok, worst) = energy_nonincreasing(&recs, 1e-6).unwrap();
        prop_assert!(ok, "worst increase {worst}");
    }
}

#[test]
fn gaussian_spread_matches_schedule() {
    let spec = PerturbationSpec::gaussian_decay(0.001, 0.01, 0).unwrap();
    let sigma = spec.sigma_at(100).unwrap();
    assert!((sigma - 0.0005).abs() < 1e-18);
    // 10^5 draws at k = 100: ten coordinates under 10^4 seeds
    let draws: Vec<f64> =
        (0..10_000u64).flat_map(|seed| spec.clone().with_seed(seed).sample_discrete(100, 10).into_inner()).collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd / sigma - 1.0).abs() < 0.02, "sd = {sd}");
    // the raw normals themselves
    let z = standard_normals(7, 3, 100_000);
    let sd = (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt();
    assert!((sd - 1.0).abs() < 0.02);
}

#[test]
fn square_integrability_witness() {
    // ∫_1^T ‖ε(t)‖² dt by composite Simpson on the sampled profile; the tail
    // added by doubling T must shrink below 1e-6 for p > 1/2
    let spec = PerturbationSpec::power_decay(1.0, 0.8, Direction::Axis(0)).unwrap();
    let sq = |t: f64| spec.sample_continuous(t, 0, 1).unwrap().norm_sq();
    let simpson = |a: f64, b: f64, n: usize| {
        // geometric substitution t = e^u keeps long ranges cheap
        let (ua, ub) = (a.ln(), b.ln());
        let h = (ub - ua) / n as f64;
        let g = |u: f64| sq(u.exp()) * u.exp();
        let mut acc = g(ua) + g(ub);
        for i in 1..n {
            acc += g(ua + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let mut t = 10.0;
    let mut tail = f64::INFINITY;
    let mut total = 0.0;
    while t < 1e14 {
        tail = simpson(t, 2.0 * t, 64);
        total = simpson(1.0, 2.0 * t, 4096);
        if tail < 1e-6 {
            break;
        }
        t *= 2.0;
    }
    assert!(tail < 1e-6, "tail {tail}");
    // closed form 1/(2p − 1) = 5/3
    assert!((total - 5.0 / 3.0).abs() < 1e-3, "total {total}");
}

#[test]
fn rk4_is_fourth_order() {
    let p = quadratic(vec![1.0]).unwrap();
    let w = 3f64.sqrt() / 2.0;
    let exact = |t: f64| (-t / 2.0).exp() * ((w * t).cos() + (w * t).sin() / (2.0 * w));
    let max_err = |dt: f64| {
        let cfg = OdeConfig::new(1.0, 0.0, 10.0).with_dt(dt).with_record_every(1);
        let recs = integrate(&p, &cfg, &Point::new(vec![1.0]), &Point::zeros(1)).unwrap();
        recs.iter().map(|r| (r.x[0] - exact(r.t)).abs()).fold(0.0, f64::max)
    };
    let ratio = max_err(1e-2) / max_err(5e-3);
    assert!(ratio >= 12.0, "ratio {ratio}");
}

#[test]
fn zero_perturbation_reproduces_clean_flow() {
    let p = example52();
    let base = OdeConfig::new(0.8, 0.1, 5.0).with_span(1.0, 5.0);
    let x0 = Point::new(vec![2.0, -1.0]);
    let v0 = Point::zeros(2);
    let clean = integrate(&p, &base, &x0, &v0).unwrap();
    for spec in [
        PerturbationSpec::power_decay(0.0, 1.0, Direction::Random).unwrap().with_seed(9),
        PerturbationSpec::gaussian_decay(0.0, 0.01, 9).unwrap(),
    ] {
        let cfg = base.clone().perturbed(spec);
        assert_eq!(integrate(&p, &cfg, &x0, &v0).unwrap(), clean);
    }
}

#[test]
fn t32_trajectory_decays_like_the_noise() {
    let p = example51();
    let pw = 1.5;
    let alpha = 1.0;
    let beta = beta_in_box(&p, Theorem::T32, alpha, 0.5);
    let spec = PerturbationSpec::power_decay(0.1, pw, Direction::Axis(0)).unwrap();
    let cfg = OdeConfig::new(alpha, beta, 100.0).perturbed(spec).with_record_every(1000);
    let recs = integrate(&p, &cfg, &Point::new(vec![3.0]), &Point::zeros(1)).unwrap();
    let tail: Vec<(f64, f64)> = recs.iter().filter(|r| r.t >= 50.0).map(|r| (r.t, r.traj_error.unwrap())).collect();
    let fit = fit_rate(&tail, FitKind::Power, 1.0).unwrap();
    assert!(-fit.rate <= -pw + 0.5, "slope {}", -fit.rate);
}

#[test]
fn iaa_per_power_noise_rates() {
    let p = example51();
    let alpha = 0.2;
    let beta = beta_in_box(&p, Theorem::T42, alpha, 0.5);
    for pw in [0.75, 1.5] {
        let spec = PerturbationSpec::power_decay(0.1, pw, Direction::Axis(0)).unwrap();
        let cfg = AlgorithmConfig::iaa(alpha, beta, 1.0 / 6.0).with_perturbation(spec);
        let start = Point::new(vec![3.0]);
        let r = run(&p, &cfg, &start, &start, &StoppingRule::iterations(10_000)).unwrap();
        let fv: Vec<(f64, f64)> = r.records[1..].iter().map(|x| (x.k as f64, x.value_error)).collect();
        let dv: Vec<(f64, f64)> = r.records[1..].iter().map(|x| (x.k as f64, x.dist.unwrap())).collect();
        let sf = -inertia_core::fit_rate_with_floor(&fv, FitKind::Power, 0.5, 0.0).unwrap().rate;
        let sd = -inertia_core::fit_rate_with_floor(&dv, FitKind::Power, 0.5, 0.0).unwrap().rate;
        assert!(sf <= -2.0 * pw + 0.4, "p={pw}: value slope {sf}");
        assert!(sd <= -pw + 0.3, "p={pw}: distance slope {sd}");
    }
}

#[test]
fn contraction_branches_match_rate_constants() {
    let p = example51();
    let (a, b) = contraction_branches(&p, Theorem::T41, 0.3, 0.2);
    let rho = rate_constants(&p, Theorem::T41, 0.3, 0.2, 1.0 / 6.0).unwrap().rho.unwrap();
    assert_eq!(rho, a.min(b));
}
