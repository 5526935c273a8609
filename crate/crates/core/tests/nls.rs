use latdisp::lattice::LatticeField;
use latdisp::nls::{evolve, picard_solve, random_profile, SolverConfig};
use proptest::prelude::*;

fn gap(f: &LatticeField, dt: f64) -> f64 {
    let c =
        SolverConfig { s: 5.0, dt, t_final: 1.0, picard_max_iter: 30, picard_tol: 1e-30, ..SolverConfig::default() };
    let a = evolve(f, 0.0, &c).unwrap();
    let b = picard_solve(f, 0.0, &c).unwrap();
    let (ua, ub) = (a.final_field().unwrap(), b.trajectory.final_field().unwrap());
    ua.values.iter().zip(&ub.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn strang_picard_gap_is_second_order() {
    let f = LatticeField::delta(2, 0.3);
    let (a, b) = (gap(&f, 0.0625), gap(&f, 0.03125));
    assert!(a > 1e-12, "{a}");
    let factor = a / b;
    assert!((3.9..=4.1).contains(&factor), "{a:e} {b:e} factor {factor}");
}

#[test]
fn small_data_methods_agree_to_rounding() {
    // both schemes are trapezoidal in the interaction picture to first order in
    // |u|^{s−1}, so they only differ at O(ε^{2s−1})
    let eps = 1e-2;
    let g = gap(&LatticeField::delta(2, eps), 0.0625);
    assert!(g < 1e-15 * eps, "{g:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_is_conserved(seed in 0u64..1000, s in 2.0f64..6.0, gamma in -10.0f64..4.0, sign in prop_oneof![Just(1i8), Just(-1i8)]) {
        let f = random_profile(2, 3, 0.5, seed);
        let c = SolverConfig { s, sign, dt: 0.05, t_final: 0.5, ..SolverConfig::default() };
        let tr = evolve(&f, gamma, &c).unwrap();
        let m0 = tr.norms[0].l2;
        for r in &tr.norms {
            prop_assert!((r.l2 - m0).abs() < 1e-12 * m0);
        }
    }

    #[test]
    fn one_dimensional_mass_is_conserved(seed in 0u64..1000, s in 2.0f64..6.0) {
        let f = random_profile(1, 5, 1.0, seed);
        let c = SolverConfig { s, dt: 0.05, t_final: 1.0, ..SolverConfig::default() };
        let tr = evolve(&f, 1.0, &c).unwrap();
        let m0 = tr.norms[0].l2;
        prop_assert!(tr.norms.iter().all(|r| (r.l2 - m0).abs() < 1e-12 * m0));
    }
}
