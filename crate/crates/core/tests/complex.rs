use pleb_core::coefficient_lab::{
    adjoint_from_inner, composition_residuals, delta_conditions, family_stencils_generic,
    random_solved_family, solve_b, AdjointCoefficientSet, CoefficientSet, InnerProductSet,
};
use pleb_core::forms::{DIM_E, DIM_EL1, DIM_S, DIM_TM};
use pleb_core::lattice::adjoint_pair_check;
use pleb_core::plebanski_ops::{pleb_grams, pleb_ops, pleb_ops_exact};
use pleb_core::sigma_core::{random_pullback, standard_sigma, standard_triple};
use pleb_core::symbolcheck::{exactness_report, sample_directions};
use pleb_core::twisted::{t2, t2_displayed_inverse, transform_report_generic};
use pleb_core::{Mat, QSqrt2, Scalar};

type Q = QSqrt2;

fn integer_covectors() -> Vec<[Q; 4]> {
    [
        [1, 0, 0, 0],
        [0, 0, 0, 1],
        [1, -2, 3, 1],
        [-3, 1, 1, 2],
        [2, 5, -1, -4],
    ]
    .iter()
    .map(|k| k.map(Q::int))
    .collect()
}

#[test]
fn plebanski_symbols_compose_to_zero_at_integer_covectors() {
    let ops = pleb_ops_exact();
    for k in integer_covectors() {
        let (s1, s2, s3) = (
            ops.d1.symbol_exact(&k),
            ops.d2.symbol_exact(&k),
            ops.d3.symbol_exact(&k),
        );
        assert_eq!((s1.rows, s1.cols), (DIM_S, DIM_TM));
        assert_eq!((s3.rows, s3.cols), (DIM_E, DIM_EL1));
        assert!((&s2 * &s1).is_zero());
        assert!((&s3 * &s2).is_zero());
    }
}

#[test]
fn solved_families_compose_to_zero() {
    let sig = standard_sigma::<Q>();
    let zero = AdjointCoefficientSet::zero();
    for seed in 0..20 {
        let c = random_solved_family(seed);
        let (r1, r2) = composition_residuals(&c);
        assert!(
            r1.iter().chain(r2.iter()).all(|x| *x == Q::int(0)),
            "seed {seed}"
        );
        let fam = family_stencils_generic(&sig, &c, &zero);
        assert!(fam.d2.compose(&fam.d1).is_zero(), "seed {seed}");
        assert!(fam.d3.compose(&fam.d2).is_zero(), "seed {seed}");
    }
}

#[test]
fn solve_b_reproduces_plebanski_coefficients() {
    let b = solve_b(
        &Q::int(1),
        &Q::rational(1, 4),
        &Q::rational(1, 2),
        &Q::int(0),
        &Q::int(1),
        &Q::rational(1, 4),
    )
    .unwrap();
    assert_eq!(b, [Q::int(2), Q::int(0), Q::int(0), Q::int(-1)]);
    assert!(solve_b(
        &Q::int(1),
        &Q::rational(1, 4),
        &Q::rational(1, 2),
        &Q::int(1),
        &Q::int(1),
        &Q::rational(1, 4)
    )
    .is_err());
}

#[test]
fn symbol_sequence_is_exact_for_pullbacks() {
    let dirs = sample_directions(50, 4);
    for seed in 0..20 {
        let t = random_pullback(seed, 0.4).unwrap();
        for k in &dirs {
            exactness_report(&t, k, 1e-10).unwrap_or_else(|e| panic!("pullback {seed}: {e}"));
        }
    }
}

#[test]
fn zero_covector_is_rejected() {
    assert!(exactness_report(&standard_triple(), &[0.0; 4], 1e-10).is_err());
}

#[test]
fn plebanski_adjoints_pair_on_lattice_fields() {
    let t = standard_triple();
    let o = pleb_ops(&t);
    let g = pleb_grams(&standard_sigma::<f64>());
    assert!(adjoint_pair_check(&o.d1, &o.d1_star, &g.tm, &g.s, 5, 1, 8).unwrap() < 1e-10);
    assert!(adjoint_pair_check(&o.d2, &o.d2_star, &g.s, &g.el1, 5, 2, 8).unwrap() < 1e-10);
    assert!(adjoint_pair_check(&o.d3, &o.d3_star, &g.el1, &g.e, 5, 3, 8).unwrap() < 1e-10);
}

#[test]
fn swapped_adjoint_fails_pairing() {
    let t = standard_triple();
    let o = pleb_ops(&t);
    let g = pleb_grams(&standard_sigma::<f64>());
    let wrong = o.d1_star.scale(&-1.0);
    assert!(adjoint_pair_check(&o.d1, &wrong, &g.tm, &g.s, 3, 1, 8).unwrap() > 0.1);
}

#[test]
fn laplace_multipliers_for_the_first_inner_product() {
    let c = CoefficientSet::<Q>::plebanski();
    let cp = adjoint_from_inner(&c, &InnerProductSet::inner_prod_1()).unwrap();
    let dc = delta_conditions(&c, &cp);
    assert!(dc.holds());
    assert_eq!(
        dc.multipliers,
        [Q::int(-1), Q::int(-1), Q::int(-1), Q::int(-2)]
    );
}

#[test]
fn transform_inverse_and_displayed_defect() {
    let sig = standard_sigma::<Q>();
    let tr = t2(&sig);
    assert_eq!(&tr.matrix * &tr.inverse, Mat::identity(16));
    let off = &(&tr.matrix * &t2_displayed_inverse(&sig)) - &Mat::identity(16);
    assert!(!off.is_zero());
    let defect = transform_report_generic(&sig).displayed_inverse_defect;
    assert!((defect - 2.828).abs() < 1e-3, "{defect}");
}
