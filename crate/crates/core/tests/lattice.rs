use pleb_core::lattice::{
    apply_stencil, derivative, inner, inner_fourier, laplacian, laplacian_multiple_check,
    plane_wave, random_field,
};
use pleb_core::plebanski_ops::pleb_ops;
use pleb_core::sigma_core::{standard_sigma, standard_triple};
use pleb_core::twisted::{
    build_d_tilde, mixing_matrix, twisted_codomain_gram, twisted_domain_gram, DIM_TWISTED,
};
use pleb_core::GramForm;

const PLANE_WAVES: [[i64; 4]; 5] = [
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, -1],
    [1, 1, 1, 1],
    [1, -1, 0, 1],
];

#[test]
fn derivative_of_a_plane_wave() {
    for k in PLANE_WAVES {
        let u = plane_wave(4, k, &[1.0, -2.0], 0.3).unwrap();
        for mu in 0..4 {
            let expected = plane_wave(
                4,
                k,
                &[k[mu] as f64, -2.0 * k[mu] as f64],
                0.3 + std::f64::consts::FRAC_PI_2,
            )
            .unwrap();
            let err = derivative(&u, mu)
                .unwrap()
                .sub(&expected)
                .unwrap()
                .max_abs();
            assert!(err < 1e-12, "k {k:?}, mu {mu}: {err:e}");
        }
    }
}

#[test]
fn stencils_act_on_plane_waves_through_their_symbols() {
    let ops = pleb_ops(&standard_triple());
    let amp = [0.5, -1.0, 0.25, 2.0];
    for k in PLANE_WAVES {
        let u = plane_wave(4, k, &amp, 0.0).unwrap();
        let sym = ops.d1.symbol(&k.map(|x| x as f64));
        let expected = plane_wave(4, k, &sym.apply(&amp), std::f64::consts::FRAC_PI_2).unwrap();
        let err = apply_stencil(&ops.d1, &u)
            .unwrap()
            .sub(&expected)
            .unwrap()
            .max_abs();
        assert!(err < 1e-12, "k {k:?}: {err:e}");
    }
}

#[test]
fn laplacian_of_a_plane_wave() {
    let k = [1, -1, 1, 0];
    let u = plane_wave(4, k, &[1.0], 0.0).unwrap();
    let err = laplacian(&u).unwrap().add(&u.scale(3.0)).unwrap().max_abs();
    assert!(err < 1e-12);
}

#[test]
fn real_and_fourier_pairings_agree() {
    let g = GramForm::<f64>::identity(3);
    let u = random_field(3, 8, 1).unwrap();
    let v = random_field(3, 8, 2).unwrap();
    let (a, b) = (
        inner(&u, &v, &g).unwrap(),
        inner_fourier(&u, &v, &g).unwrap(),
    );
    assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
}

#[test]
fn binary_round_trip() {
    let u = random_field(5, 4, 9).unwrap();
    let mut buf = Vec::new();
    u.write_binary(&mut buf).unwrap();
    let back = pleb_core::lattice::LatticeField::read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!((u.n, u.fiber, &u.data), (back.n, back.fiber, &back.data));
    assert!(pleb_core::lattice::LatticeField::read_binary(&mut &buf[..7]).is_err());
}

#[test]
fn twisted_lattice_fit_recovers_the_mixing_matrix() {
    let fit = |n| {
        laplacian_multiple_check(
            &build_d_tilde(&standard_triple()).stencil(),
            &twisted_domain_gram(),
            &twisted_codomain_gram(&standard_sigma::<f64>()),
            3,
            9,
            n,
        )
        .unwrap()
    };
    let m = mixing_matrix::<f64>();
    let (f8, f16) = (fit(8), fit(16));
    for f in [&f8, &f16] {
        assert!(f.residual < 1e-10);
        for a in 0..DIM_TWISTED {
            for b in 0..DIM_TWISTED {
                assert!((f.m[a][b] - m[(a, b)]).abs() < 1e-12, "entry ({a}, {b})");
            }
        }
    }
    for a in 0..DIM_TWISTED {
        for b in 0..DIM_TWISTED {
            assert!((f8.m[a][b] - f16.m[a][b]).abs() < 1e-12);
        }
    }
}

#[test]
fn odd_or_tiny_grids_are_rejected() {
    assert!(random_field(1, 3, 0).is_err());
    assert!(random_field(1, 2, 0).is_err());
}
