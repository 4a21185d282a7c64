use std::f64::consts::PI;

use fstefan::operator::normalization_constant;
use fstefan::oracle::{
    antisym_exact_u, antisym_exact_u_with, fractional_laplacian_pv, heat_kernel, HeatKernelSpec,
};
use fstefan::quadrature::adaptive;
use fstefan::{consistency_error, Grid1D, Stencil};

fn gaussian(x: f64) -> f64 {
    (-x * x).exp()
}

/// `(−Δ)^s e^{−x²}` from its Fourier transform `√π e^{−ρ²/4}`.
fn gaussian_fractional_laplacian(s: f64, x: f64) -> f64 {
    let f = |r: f64| r.powf(2.0 * s) * PI.sqrt() * (-0.25 * r * r).exp() * (x * r).cos();
    let mut total = 0.0;
    let mut a = 0.0;
    while a < 16.0 {
        total += adaptive(f, a, a + 0.5, 1e-13);
        a += 0.5;
    }
    total / PI
}

/// `∫_X^∞ P_s(x, 1) dx` from the large-`x` expansion
/// `P_s(x, 1) = (1/π) Σ_k (−1)^{k+1} Γ(2sk + 1) sin(πsk) / k! · x^{−1−2sk}`.
fn kernel_tail_mass(s: f64, x: f64) -> f64 {
    let mut total = 0.0;
    let mut fact = 1.0;
    for k in 1..=14 {
        let kf = k as f64;
        fact *= kf;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let a = 2.0 * s * kf;
        total += sign * libm::tgamma(a + 1.0) * (PI * s * kf).sin() / fact * x.powf(-a) / a;
    }
    total / PI
}

#[test]
fn kernel_has_unit_mass() {
    for s in [0.25, 0.5, 0.75] {
        let spec = HeatKernelSpec::fourier(s).unwrap();
        let x_max = 400.0;
        let mut near = 0.0;
        let mut a = 0.0f64;
        let mut w = 0.25;
        while a < x_max {
            let b = (a + w).min(x_max);
            near += adaptive(|x| heat_kernel(&spec, x, 1.0).unwrap(), a, b, 1e-12);
            a = b;
            w *= 1.5;
        }
        let mass = 2.0 * (near + kernel_tail_mass(s, x_max));
        assert!((mass - 1.0).abs() < 1e-8, "s = {s}: mass {mass}");
    }
}

fn tail_slope(spec: &HeatKernelSpec) -> f64 {
    let xs: Vec<f64> = (0..=40)
        .map(|k| 10.0 * 10f64.powf(k as f64 / 40.0))
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| heat_kernel(spec, *x, 1.0).unwrap())
        .collect();
    fstefan::selfsimilar::fit_loglog(&xs, &ys).unwrap()
}

#[test]
fn kernel_tail_decays_like_a_power() {
    for s in [0.5, 0.75] {
        let slope = tail_slope(&HeatKernelSpec::fourier(s).unwrap());
        let expected = -(1.0 + 2.0 * s);
        assert!(
            (slope - expected).abs() <= 0.05 * expected.abs(),
            "s = {s}: slope {slope}"
        );
    }
}

#[test]
fn kernel_tail_at_quarter_follows_the_expansion() {
    // at s = 1/4 the second term decays only x^{−1/2} faster, so the slope on
    // [10, 100] sits visibly above −3/2; compare with the expansion instead
    let spec = HeatKernelSpec::fourier(0.25).unwrap();
    for x in [10.0, 30.0, 100.0] {
        let h = 1e-3 * x;
        let series = (kernel_tail_mass(0.25, x - h) - kernel_tail_mass(0.25, x + h)) / (2.0 * h);
        let v = heat_kernel(&spec, x, 1.0).unwrap();
        assert!((v - series).abs() < 1e-6 * v, "x = {x}: {v} vs {series}");
    }
    let slope = tail_slope(&spec);
    assert!(slope < -1.3 && slope > -1.5, "{slope}");
}

#[test]
fn kernel_is_positive_and_even() {
    for s in [0.25, 0.5, 0.75] {
        let spec = HeatKernelSpec::new(s).unwrap();
        for t in [0.1, 1.0, 5.0] {
            for x in [0.0, 0.3, 2.0, 17.0] {
                let v = heat_kernel(&spec, x, t).unwrap();
                assert!(v > 0.0);
                assert_eq!(v, heat_kernel(&spec, -x, t).unwrap());
            }
        }
        assert!(heat_kernel(&spec, 1.0, 0.0).is_err());
    }
}

#[test]
fn fourier_route_reproduces_the_cauchy_kernel() {
    let spec = HeatKernelSpec::fourier(0.5).unwrap();
    for t in [0.5, 1.0, 2.0] {
        for x in [0.0, 0.1, 1.0, 3.0, 10.0] {
            let exact = t / (PI * (t * t + x * x));
            let v = heat_kernel(&spec, x, t).unwrap();
            assert!((v - exact).abs() < 1e-9, "x = {x}, t = {t}: {v} vs {exact}");
        }
    }
}

#[test]
fn antisymmetric_temperature_at_half() {
    let spec = HeatKernelSpec::fourier(0.5).unwrap();
    for x in [-3.0, -0.4, 0.05, 1.0, 2.5] {
        let closed = antisym_exact_u(1.5, 0.5, x, 1.0).unwrap();
        assert!((closed - 1.5 * 2.0 / PI * (-x).atan()).abs() < 1e-14);
        let quad = antisym_exact_u_with(&spec, 1.5, x, 1.0).unwrap();
        assert!((quad - closed).abs() < 1e-8, "x = {x}: {quad} vs {closed}");
    }
}

#[test]
fn antisymmetric_temperature_is_odd_and_nonincreasing() {
    for s in [0.25, 0.75] {
        let xs: Vec<f64> = (-20..=20).map(|k| 0.25 * k as f64).collect();
        let u: Vec<f64> = xs
            .iter()
            .map(|x| antisym_exact_u(1.0, s, *x, 1.0).unwrap())
            .collect();
        assert!(u.windows(2).all(|w| w[1] <= w[0]));
        for k in 0..xs.len() {
            assert!((u[k] + u[xs.len() - 1 - k]).abs() < 1e-12);
        }
    }
    assert_eq!(antisym_exact_u(1.0, 0.5, 0.0, 2.0).unwrap(), 0.0);
    assert!((antisym_exact_u(1.0, 0.5, -1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn antisymmetric_temperature_is_linear_near_the_origin() {
    for s in [0.25, 0.5, 0.75] {
        let spec = HeatKernelSpec::new(s).unwrap();
        let p0 = heat_kernel(&spec, 0.0, 1.0).unwrap();
        let c = 2.0 * p0;
        // |P''(z, 1)| <= |P''(0, 1)| = Γ(1 + 3/2s)/π, so |u + Cx| <= |P''(0, 1)|·x³/3
        let k2 = libm::tgamma(1.0 + 1.5 / s) / PI / 3.0 * 0.1;
        for k in 1..=10 {
            let x = 0.01 * k as f64;
            let u = antisym_exact_u(1.0, s, x, 1.0).unwrap();
            assert!(
                (u + c * x).abs() <= k2 * x * x,
                "s = {s}, x = {x}: {u} vs {}",
                -c * x
            );
        }
        let h = 1e-4;
        let slope = antisym_exact_u(1.0, s, h, 1.0).unwrap() / h;
        assert!((slope + c).abs() < 1e-5 * p0, "s = {s}: {slope} vs {}", -c);
    }
}

#[test]
fn kernel_at_origin_matches_gamma_formula() {
    // P_s(0, 1) = Γ(1 + 1/2s) / π
    for s in [0.25, 0.5, 0.75] {
        let spec = HeatKernelSpec::fourier(s).unwrap();
        let exact = libm::tgamma(1.0 + 0.5 / s) / PI;
        let v = heat_kernel(&spec, 0.0, 1.0).unwrap();
        assert!((v - exact).abs() < 1e-9, "s = {s}: {v} vs {exact}");
    }
}

#[test]
fn second_weight_is_a_cell_integral_of_the_kernel() {
    for s in [0.25, 0.5, 0.75] {
        let dx = 0.1;
        let st = Stencil::fractional(s, dx, 50).unwrap();
        let c = normalization_constant(s);
        for gamma in [2usize, 3, 7] {
            let g = gamma as f64;
            let cell = adaptive(
                |z| z.powf(-1.0 - 2.0 * s),
                (g - 0.5) * dx,
                (g + 0.5) * dx,
                1e-14,
            );
            let exact = c * cell;
            let w = st.weight(gamma);
            assert!(
                (w - exact).abs() < 1e-12 * exact,
                "s = {s}, γ = {gamma}: {w} vs {exact}"
            );
        }
    }
}

#[test]
fn row_sum_scales_like_a_power_of_dx() {
    for s in [0.25, 0.5, 0.75] {
        let a = Stencil::fractional(s, 0.1, 200).unwrap().row_sum();
        let b = Stencil::fractional(s, 0.05, 200).unwrap().row_sum();
        let ratio = b / a;
        let expected = 2f64.powf(2.0 * s);
        assert!(
            (ratio - expected).abs() < 1e-12 * expected,
            "s = {s}: {ratio}"
        );
    }
}

#[test]
fn principal_value_oracle_matches_the_fourier_route() {
    for s in [0.25, 0.5, 0.75] {
        for x in [0.0, 0.5, 1.5, 3.0] {
            let pv = fractional_laplacian_pv(&gaussian, (-7.0, 7.0), s, x);
            let ft = gaussian_fractional_laplacian(s, x);
            assert!((pv - ft).abs() < 1e-6, "s = {s}, x = {x}: {pv} vs {ft}");
        }
    }
}

#[test]
fn consistency_improves_with_refinement() {
    for s in [0.25, 0.5, 0.75] {
        let mut errors = Vec::new();
        for dx in [0.2, 0.1, 0.05, 0.025] {
            let grid = Grid1D::from_window(-8.0, 8.0, dx).unwrap();
            let st = Stencil::fractional(s, dx, grid.len()).unwrap();
            errors.push(consistency_error(&st, &grid, &gaussian, (-8.0, 8.0)).unwrap());
        }
        assert!(
            errors.windows(2).all(|w| w[1] < w[0]),
            "s = {s}: {errors:?}"
        );
    }
}

#[test]
fn local_operator_is_second_order() {
    let mut errors = Vec::new();
    for dx in [0.2, 0.1, 0.05] {
        let grid = Grid1D::from_window(-8.0, 8.0, dx).unwrap();
        let st = Stencil::local(dx).unwrap();
        errors.push(consistency_error(&st, &grid, &gaussian, (-8.0, 8.0)).unwrap());
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "{errors:?}");
    }
}
