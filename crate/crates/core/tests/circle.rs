use ertl_core::circle::{
    cd_from_verblunsky, chain_parameters, integrate_schur, kernel_coeffs, map_beta_alpha_cd, opuc_recurrence_coeffs,
    rhs_cd, rhs_schur, verblunsky_from_moments, VerblunskySeq,
};
use ertl_core::lattice::{rhs_ertl, LatticeState};
use ertl_core::lorth::bootstrap_recurrence;
use ertl_core::measures::{compute_moments, toeplitz_moments, CircleBase, CircleFunctional, MomentSpec, MomentTable};
use ertl_core::ode::StepControl;
use ertl_core::C64;
use nalgebra::{DMatrix, DVector};

const MIXED: CircleBase = CircleBase::LebesgueWithMass { mass: 0.3, angle: 1.1 };

fn table(base: CircleBase, functional: CircleFunctional, q: C64, t: f64, k: usize) -> MomentTable {
    let spec = MomentSpec::circle(base, functional, q.conj(), q).unwrap();
    compute_moments(&spec, t, k).unwrap()
}

fn verblunsky(base: CircleBase, q: C64, t: f64, len: usize) -> VerblunskySeq {
    verblunsky_from_moments(&table(base, CircleFunctional::Opuc, q, t, len + 1), len).unwrap()
}

/// `𝔞_n = -conj(Φ_{n+1}(0))` with `Φ_{n+1}` from the orthogonality system
/// `Σ_k c_k m_{k-j} = -m_{n+1-j}`, `j ≤ n`.
fn gram_schmidt(base: CircleBase, q: C64, t: f64, len: usize) -> Vec<C64> {
    let lo = -(len as i32);
    let m = toeplitz_moments(base, q, t, lo, len as i32).unwrap();
    let at = |j: i32| m[(j - lo) as usize];
    (0..len)
        .map(|n| {
            let size = n + 1;
            let a = DMatrix::from_fn(size, size, |j, k| at(k as i32 - j as i32));
            let b = DVector::from_fn(size, |j, _| -at(n as i32 + 1 - j as i32));
            let c = a.lu().solve(&b).unwrap();
            -c[0].conj()
        })
        .collect()
}

#[test]
fn levinson_matches_gram_schmidt() {
    for (base, q, t) in [(CircleBase::Lebesgue, C64::new(0.5, 0.0), 0.3), (MIXED, C64::new(0.3, 0.4), 0.4)] {
        let v = verblunsky(base, q, t, 8);
        let oracle = gram_schmidt(base, q, t, 8);
        for (a, b) in v.coefficients().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn opuc_route_matches_bootstrap() {
    let (q, t, n) = (C64::new(0.3, 0.4), 0.4, 6);
    let tab = table(MIXED, CircleFunctional::Opuc, q, t, n + 2);
    let v = verblunsky_from_moments(&tab, n + 1).unwrap();
    let direct = opuc_recurrence_coeffs(&v).unwrap();
    let (_, boot) = bootstrap_recurrence(&tab, n).unwrap();
    for k in 1..=n {
        assert!((direct.beta(k) - boot.beta(k)).norm() < 1e-8, "β_{k}");
        assert!((direct.alpha(k + 1) - boot.alpha(k + 1)).norm() < 1e-8, "α_{}", k + 1);
    }
}

#[test]
fn kernel_route_matches_bootstrap() {
    let (q, t, n) = (C64::new(0.3, 0.4), 0.4, 6);
    let w = C64::from_polar(1.0, 0.7);
    let tab = table(MIXED, CircleFunctional::Kernel { w }, q, t, n + 2);
    let v = verblunsky(MIXED, q, t, n + 1);
    let k = kernel_coeffs(&v, w).unwrap();
    let (_, boot) = bootstrap_recurrence(&tab, n).unwrap();
    for j in 1..=n {
        assert!((k.coeffs.beta(j) - boot.beta(j)).norm() < 1e-8, "β_{j}");
        assert!((k.coeffs.alpha(j + 1) - boot.alpha(j + 1)).norm() < 1e-8, "α_{}", j + 1);
    }
    for (a, b) in k.rho.iter().zip(&k.rho_raw) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn kernel_coefficients_at_one_follow_the_cd_map() {
    let v = verblunsky(MIXED, C64::new(0.3, 0.4), 0.2, 7);
    let k = kernel_coeffs(&v, C64::new(1.0, 0.0)).unwrap();
    let s = cd_from_verblunsky(&v).unwrap();
    let (beta, alpha) = map_beta_alpha_cd(&s.c, &s.d);
    for n in 1..k.coeffs.depth() {
        assert!((beta[n - 1] - k.coeffs.beta(n)).norm() < 1e-10, "β_{n}");
        assert!((alpha[n] - k.coeffs.alpha(n + 1)).norm() < 1e-10, "α_{}", n + 1);
    }
    let g = chain_parameters(s.g[0], &s.d);
    for (a, b) in g.iter().zip(&s.g) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!(s.g.iter().all(|g| *g > 0.0 && *g < 1.0));
}

/// Chain-rule image of `(ċ, ḋ)` under the map to `(β, α)`.
fn pushed_forward(c: &[f64], d: &[f64], dc: &[f64], dd: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let (beta, alpha) = map_beta_alpha_cd(c, d);
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let c_at = |n: usize| if n == 0 { 1.0 } else { c[n - 1] };
    let dc_at = |n: usize| if n == 0 { 0.0 } else { dc[n - 1] };
    let dbeta = (1..=c.len()).map(|n| beta[n - 1] * (-2.0 * i * dc_at(n) / (1.0 + c_at(n).powi(2)))).collect();
    let dalpha = (1..=c.len())
        .map(|n| {
            let lead = dd[n - 1] * 4.0 / ((one + i * c_at(n)) * (one + i * c_at(n - 1)));
            let rest =
                alpha[n - 1] * (-i * dc_at(n) / (one + i * c_at(n)) - i * dc_at(n - 1) / (one + i * c_at(n - 1)));
            lead + rest
        })
        .collect();
    (dbeta, dalpha)
}

#[test]
fn cd_lattice_is_the_ertl_flow_in_new_variables() {
    let c = [0.4, -0.7, 1.3, 0.2, -0.1];
    let d = [0.0, 0.3, 0.15, 0.6, 0.25];
    for q in [C64::new(0.8, 0.0), C64::new(0.3, -0.9)] {
        let (dc, dd) = rhs_cd(&c, &d, q);
        let (dbeta, dalpha) = pushed_forward(&c, &d, &dc, &dd);
        let (beta, alpha) = map_beta_alpha_cd(&c, &d);
        let state = LatticeState::finite(q.conj(), q, 0.0, beta, alpha[1..].to_vec()).unwrap();
        let (eb, ea) = rhs_ertl(&state).unwrap();
        for n in 1..=c.len() {
            assert!((eb[n - 1] - dbeta[n - 1]).norm() < 1e-11, "β̇_{n}");
            assert!((ea[n - 1] - dalpha[n - 1]).norm() < 1e-11, "α̇_{n}");
        }
    }
}

fn fd<T>(f: impl Fn(f64) -> Vec<T>, t: f64, h: f64) -> Vec<T>
where
    T: Copy + core::ops::Sub<Output = T> + core::ops::Div<f64, Output = T>,
{
    let (a, b) = (f(t + h), f(t - h));
    a.iter().zip(&b).map(|(x, y)| (*x - *y) / (2.0 * h)).collect()
}

#[test]
fn cd_variables_follow_their_lattice() {
    let (q, t, h, len) = (C64::new(0.3, 0.4), 0.3, 1e-4, 9);
    let state = |t: f64| cd_from_verblunsky(&verblunsky(MIXED, q, t, len)).unwrap();
    let s = state(t);
    let fd_c = fd(|t| state(t).c, t, h);
    let fd_d = fd(|t| state(t).d, t, h);
    let (dc, dd) = rhs_cd(&s.c, &s.d, q);
    // the top site needs d_{L+1}
    for n in 1..len {
        assert!((fd_c[n - 1] - dc[n - 1]).abs() < 1e-5, "ċ_{n}");
        assert!((fd_d[n - 1] - dd[n - 1]).abs() < 1e-5, "ḋ_{n}");
    }
    // β̇_n/β_n = -2i ċ_n/(1 + c_n²) along the kernel coefficients at w = 1
    let beta = |t: f64| {
        let k = kernel_coeffs(&verblunsky(MIXED, q, t, len), C64::new(1.0, 0.0)).unwrap();
        k.coeffs.betas().to_vec()
    };
    let fd_beta = fd(beta, t, h);
    let b = beta(t);
    for n in 1..len {
        let lhs = fd_beta[n - 1] / b[n - 1];
        let rhs = C64::new(0.0, -2.0) * fd_c[n - 1] / (1.0 + s.c[n - 1].powi(2));
        assert!((lhs - rhs).norm() < 1e-5, "n = {n}");
    }
}

#[test]
fn verblunsky_coefficients_follow_the_schur_flow() {
    let (t, h, len) = (0.3, 1e-4, 10);
    for q in [C64::new(0.5, 0.0), C64::new(0.3, 0.4)] {
        let v = verblunsky(MIXED, q, t, len);
        let fd_a = fd(|t| verblunsky(MIXED, q, t, len).coefficients().to_vec(), t, h);
        let rhs = rhs_schur(&v, q);
        for n in 0..len - 1 {
            assert!((fd_a[n] - rhs[n]).norm() < 1e-5, "𝔞̇_{n} for q = {q}");
        }
    }
}

#[test]
fn truncated_schur_integration_tracks_quadrature() {
    let q = C64::new(0.3, 0.4);
    let start = verblunsky(CircleBase::Lebesgue, q, 0.0, 1).coefficients().to_vec();
    // the free measure has 𝔞 = 0; pad to a long truncation
    let a0 = VerblunskySeq::new(0.0, q, 1.0, vec![start[0]; 30]).unwrap();
    let ctrl = StepControl::adaptive(1e-12, 1e-14);
    let (seqs, _) = integrate_schur(&a0, &[0.5], &ctrl).unwrap();
    let exact = verblunsky(CircleBase::Lebesgue, q, 0.5, 10);
    for (a, b) in seqs[0].coefficients().iter().zip(exact.coefficients()) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn lebesgue_routes_match_bootstrap() {
    let (q, n) = (C64::new(0.5, 0.0), 6);
    let tab = table(CircleBase::Lebesgue, CircleFunctional::Opuc, q, 0.3, n + 2);
    let direct = opuc_recurrence_coeffs(&verblunsky_from_moments(&tab, n + 1).unwrap()).unwrap();
    let (_, boot) = bootstrap_recurrence(&tab, n).unwrap();
    let one = C64::new(1.0, 0.0);
    let ktab = table(CircleBase::Lebesgue, CircleFunctional::Kernel { w: one }, q, 0.2, n + 2);
    let k = kernel_coeffs(&verblunsky(CircleBase::Lebesgue, q, 0.2, n + 1), one).unwrap();
    let (_, kboot) = bootstrap_recurrence(&ktab, n).unwrap();
    for j in 1..=n {
        assert!((direct.beta(j) - boot.beta(j)).norm() < 1e-8);
        assert!((direct.alpha(j + 1) - boot.alpha(j + 1)).norm() < 1e-8);
        assert!((k.coeffs.beta(j) - kboot.beta(j)).norm() < 1e-8);
        assert!((k.coeffs.alpha(j + 1) - kboot.alpha(j + 1)).norm() < 1e-8);
        // symmetric measure with real q: ρ = 1 and β = -1
        assert!((k.coeffs.beta(j) + one).norm() < 1e-12);
    }
}

#[test]
fn chain_sequence_survives_the_cd_flow() {
    let (q, len, reported) = (C64::new(0.3, 0.4), 24, 8);
    let s0 = cd_from_verblunsky(&verblunsky(MIXED, q, 0.0, len)).unwrap();
    let ctrl = StepControl::adaptive(1e-11, 1e-13);
    let outputs = [0.25, 0.5];
    let (states, _) = ertl_core::circle::integrate_cd(&s0.c, &s0.d, q, 0.0, &outputs, &ctrl).unwrap();
    for (t, (c, d)) in outputs.iter().zip(&states) {
        let exact = cd_from_verblunsky(&verblunsky(MIXED, q, *t, len)).unwrap();
        let g = chain_parameters(exact.g[0], d);
        assert!(g[..reported].iter().all(|g| *g > 0.0 && *g < 1.0));
        for n in 0..reported {
            assert!((c[n] - exact.c[n]).abs() < 1e-7, "c_{} at {t}", n + 1);
            assert!((d[n] - exact.d[n]).abs() < 1e-7, "d_{} at {t}", n + 1);
        }
    }
}
