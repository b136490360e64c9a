use fano_qpt::analysis::{
    self, dephasing_discriminator, Classification, DiscriminatorTolerance, Family,
};
use fano_qpt::channels::{
    self, affine_apply, apply_kraus, channel_to_affine, Channel, CorrelatedDephasing,
};
use fano_qpt::linalg::{hermitian_eigenvalues, max_abs};
use fano_qpt::pauli::{density_to_fano, fano_to_density, fano_to_matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fano_round_trip(seed: u64, n in 1usize..=3) {
        let rho = channels::random_state(n, &mut rng(seed));
        let b = density_to_fano(&rho).unwrap();
        let back = fano_to_density(&b).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn purity_bound(seed: u64, n in 1usize..=3) {
        let rho = channels::random_state(n, &mut rng(seed));
        let b = density_to_fano(&rho).unwrap();
        let dim = (1usize << n) as f64;
        prop_assert!(b.squared_norm() <= dim - 1.0 + 1e-12);
        let purity = (rho.matrix() * rho.matrix()).trace().re;
        prop_assert!((purity - (1.0 + b.squared_norm()) / dim).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn affine_matches_kraus(seed: u64, n in 1usize..=2, k in 1usize..=4) {
        let mut r = rng(seed);
        let ch = channels::random_channel(n, k, &mut r).unwrap();
        let rho = channels::random_state(n, &mut r);
        let direct = density_to_fano(&apply_kraus(&ch, &rho).unwrap()).unwrap();
        let proc = channel_to_affine(&Channel::from(ch));
        let via_map = affine_apply(&proc, &density_to_fano(&rho).unwrap()).unwrap();
        for (a, b) in direct.as_slice().iter().zip(via_map.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cptp_preserves_states(seed: u64, n in 1usize..=2, k in 1usize..=4) {
        let mut r = rng(seed);
        let ch = channels::random_channel(n, k, &mut r).unwrap();
        let rho = channels::random_state(n, &mut r);
        let out = ch.apply_matrix(rho.matrix());
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(max_abs(&(&out - out.adjoint())) < 1e-12);
        prop_assert!(hermitian_eigenvalues(&out)[0] > -1e-12);
        let b = density_to_fano(&apply_kraus(&ch, &rho).unwrap()).unwrap();
        prop_assert!(b.squared_norm() <= (1usize << n) as f64 - 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fit_recovers_parameter(u in 0.0f64..=1.0) {
        for family in Family::ALL {
            let (lo, hi) = family.range();
            // Correlated dephasing is sampled where e^{-λ} is still resolvable.
            let hi = if family == Family::CorrelatedDephasing { 5.0 } else { hi };
            let x = lo + u * (hi - lo);
            let fit = analysis::fit_channel(&family.model(x).unwrap(), family).unwrap();
            prop_assert!((fit.param - x).abs() < 1e-8, "{family}: {x} -> {}", fit.param);
            prop_assert!(fit.residual < 1e-10, "{family}: residual {}", fit.residual);
        }
    }

    #[test]
    fn discriminator_separates_matched_channels(lambda in 1e-3f64..3.0) {
        // Uncorrelated dephasing with g_ud² = h gives the same c_xx.
        let h = 0.5 * (1.0 + (-4.0 * lambda).exp());
        let k = 0.5 * (1.0 - (-4.0 * lambda).exp());
        let tol = DiscriminatorTolerance::EXACT;
        prop_assume!(k > tol.yy);
        let cd = dephasing_discriminator(h, k, tol).unwrap();
        let ud = dephasing_discriminator(h, 0.0, tol).unwrap();
        prop_assert_eq!(cd.classification, Classification::Correlated);
        prop_assert_eq!(ud.classification, Classification::Uncorrelated);
        prop_assert!((cd.g_hat.unwrap() - (-lambda).exp()).abs() < 1e-8);
        prop_assert!((ud.g_hat.unwrap() - h.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sparsity_is_monotone(seed: u64, t1 in 1e-6f64..0.5, t2 in 1e-6f64..0.5) {
        let ch = channels::random_channel(2, 2, &mut rng(seed)).unwrap();
        let proc = channel_to_affine(&ch.into());
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = analysis::sparsity_pattern(&proc, lo).unwrap().nonzero_count;
        let b = analysis::sparsity_pattern(&proc, hi).unwrap().nonzero_count;
        prop_assert!(b <= a);
    }
}

#[test]
fn generic_count_matches_matrix_size() {
    for n in 1..=6usize {
        let d = (1u128 << (2 * n)) - 1;
        // χ_F is d × (d + 1).
        assert_eq!(analysis::parameter_count(n).generic, d * (d + 1));
    }
}

#[test]
fn correlated_dephasing_agrees_with_channel_action() {
    for lambda in [0.0, 0.05, 0.7, 3.0] {
        let direct = channel_to_affine(&CorrelatedDephasing::new(2, lambda).unwrap().into());
        let closed = channels::correlated_dephasing(lambda).unwrap();
        assert!(direct.max_abs_diff(&closed) < 1e-14);
    }
}

#[test]
fn fano_matrix_of_random_state_is_state() {
    let rho = channels::random_state(2, &mut rng(5));
    let m = fano_to_matrix(&density_to_fano(&rho).unwrap());
    assert!(max_abs(&(m - rho.matrix())) < 1e-12);
}
