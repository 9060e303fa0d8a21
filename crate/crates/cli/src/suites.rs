//! The check sets behind `verify <suite>`.

use pleb_core::coefficient_lab::{
    adjoint_formula_disagreements, adjoint_from_inner, composition_residuals, delta_conditions,
    f_condition, family_stencils, family_stencils_generic, laplacian_formula_stencils,
    pairing_residuals, predicted_compositions, random_solved_family, solve_b, solve_inner_products,
    AdjointCoefficientSet, CoefficientSet, InnerProductSet,
};
use pleb_core::forms::{
    channel_projectors, decompose_two_form, j1_coord_matrix, j1_matrix, j2_coord_matrix, j2_matrix,
    recompose_two_form, s_embed, s_embed_matrix, s_extract, ETwoForm, GramForm, SElement, DIM_E,
    DIM_EL1, DIM_EL2, DIM_S, DIM_TM,
};
use pleb_core::lattice::{adjoint_pair_check, laplacian_multiple_check, random_field};
use pleb_core::mat::Mat;
use pleb_core::plebanski_ops::{
    adjoints_from_grams, d2star_d2, d2star_d2_formula, d2star_d2_stencils, einstein_residual,
    inner_prod_1_grams, pleb_grams, pleb_ops, pleb_ops_exact, pleb_ops_generic, untraced_adjoints,
};
use pleb_core::scalar::{QSqrt2, Scalar};
use pleb_core::sigma_core::{
    gl4_pullback, identity_residuals, input_scale, random_gl4, standard_sigma, standard_triple,
    PerfectTriple, METRIC_FORMULA_CONSTANT,
};
use pleb_core::stencil::OperatorStencil;
use pleb_core::symbolcheck::{
    exactness_diagnostics, exactness_report, kbasis_frame, kbasis_residual, sample_directions,
};
use pleb_core::twisted::{
    action_identities, build_d_tilde, d_tilde_from_plebanski, d_tilde_generic, d_tilde_square,
    delta_multiple, mixing_matrix, mixing_stencil, naive_d_generic, phi_identity_residuals,
    rewriting_residuals, sign_flip_probe, split_check, t1, t2, tilde_ops_displayed,
    tilde_ops_generic, transform_report_generic, twisted_codomain_gram, twisted_domain_gram,
    TwistedBlockOperator, DIM_TWISTED,
};
use pleb_core::PlebError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Check, Options};

type Residual = fn(&pleb_core::sigma_core::IdentityResiduals) -> f64;
type AdjointPair<'a> = (
    &'a str,
    &'a OperatorStencil<f64>,
    &'a OperatorStencil<f64>,
    &'a GramForm<f64>,
    &'a GramForm<f64>,
);

/// Number of random GL(4) pullbacks in the algebra suite.
pub const PULLBACKS: u64 = 20;
/// Spread of the random GL(4) perturbation around the identity.
pub const PULLBACK_SCALE: f64 = 0.4;
/// Random solved coefficient families in the complex suite.
pub const RANDOM_FAMILIES: u64 = 100;

type Q = QSqrt2;

fn q(n: i64, d: i64) -> Q {
    Q::rational(n, d)
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k)
}

/// The fixture triple followed by the random pullbacks of it.
pub fn pullbacks(
    base: &PerfectTriple,
    seed: u64,
    count: u64,
) -> Vec<Result<PerfectTriple, PlebError>> {
    (0..count)
        .map(|t| gl4_pullback(base, &random_gl4(sub_seed(seed, t), PULLBACK_SCALE)))
        .collect()
}

fn rel_max(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

pub fn algebra(o: &Options) -> Vec<Check> {
    let tol = o.tol(1e-9);
    let mut out = Vec::new();
    let mut triples = vec![o.triple.clone()];
    for (t, r) in pullbacks(&o.triple, o.seed, PULLBACKS)
        .into_iter()
        .enumerate()
    {
        match r {
            Ok(p) => triples.push(p),
            Err(e) => out.push(Check::error(
                &format!("algebra.pullback-{t}"),
                "GL(4) pullback",
                e,
                o.seed,
            )),
        }
    }
    let res: Vec<_> = triples.iter().map(identity_residuals).collect();
    let fam: [(&str, &str, Residual); 7] = [
        ("algebra.quaternion-algebra", "sigma algebra", |r| r.algebra),
        ("algebra.sigma-sigma", "sigma-sigma contraction", |r| {
            r.sigma_sigma
        }),
        (
            "algebra.sigma-sigma-epsilon-1",
            "sigma-sigma-epsilon",
            |r| r.sigma_sigma_epsilon_1,
        ),
        (
            "algebra.sigma-sigma-epsilon-2",
            "sigma-sigma-epsilon",
            |r| r.sigma_sigma_epsilon_2,
        ),
        ("algebra.perfectness", "perfectness", |r| r.perfectness),
        ("algebra.metric-formula", "metric from triple", |r| r.metric),
        ("algebra.trace", "sigma trace", |r| r.trace),
    ];
    for (id, tag, f) in fam {
        let worst = res.iter().map(f).fold(0.0, f64::max);
        out.push(
            Check::at_most(id, tag, worst, tol, o.seed)
                .with_note(format!("{} triples", triples.len())),
        );
    }
    let kappa = res
        .iter()
        .map(|r| (r.metric_constant - METRIC_FORMULA_CONSTANT).abs())
        .fold(0.0, f64::max);
    out.push(
        Check::at_most(
            "algebra.metric-constant",
            "metric from triple",
            kappa,
            tol,
            o.seed,
        )
        .with_note(format!("kappa = {METRIC_FORMULA_CONSTANT}")),
    );
    let std = identity_residuals(&standard_triple()).max_identity();
    out.push(Check::at_most(
        "algebra.standard-triple",
        "sigma algebra",
        std,
        o.tol(1e-12),
        o.seed,
    ));

    let mut flip = [[0.0; 4]; 4];
    for (i, row) in flip.iter_mut().enumerate() {
        row[i] = if i == 0 { -1.0 } else { 1.0 };
    }
    let guarded = matches!(
        gl4_pullback(&o.triple, &flip),
        Err(PlebError::OrientationError { .. })
    );
    out.push(Check::exact(
        "algebra.orientation-guard",
        "GL(4) pullback",
        guarded,
        o.seed,
    ));

    let json = serde_json::to_string(&o.triple).expect("triples serialize");
    let round = serde_json::from_str::<PerfectTriple>(&json)
        .map(|t| t.sigma == o.triple.sigma)
        .unwrap_or(false);
    out.push(Check::exact(
        "algebra.fixture-round-trip",
        "triple fixture",
        round,
        o.seed,
    ));
    out
}

fn kernel_dim(m: &Mat<Q>, lambda: Q) -> usize {
    let shifted = m - &Mat::identity(m.rows).scale(&lambda);
    m.rows - shifted.rank()
}

fn random_s_element(t: &PerfectTriple, rng: &mut ChaCha8Rng) -> SElement {
    let mut x = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in m..4 {
            let v = rng.random_range(-1.0..1.0);
            x[m][n] = v;
            x[n][m] = v;
        }
    }
    let tr: f64 = (0..4)
        .flat_map(|m| (0..4).map(move |n| (m, n)))
        .map(|(m, n)| t.inv_metric[m][n] * x[m][n])
        .sum();
    for m in 0..4 {
        for n in 0..4 {
            x[m][n] -= 0.25 * t.metric[m][n] * tr;
        }
    }
    SElement {
        h: rng.random_range(-1.0..1.0),
        hvec: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
        htilde: x,
    }
}

fn s_element_distance(a: &SElement, b: &SElement) -> f64 {
    let mut d = (a.h - b.h).abs();
    for i in 0..3 {
        d = d.max((a.hvec[i] - b.hvec[i]).abs());
    }
    for m in 0..4 {
        for n in 0..4 {
            d = d.max((a.htilde[m][n] - b.htilde[m][n]).abs());
        }
    }
    d
}

pub fn decompose(o: &Options) -> Vec<Check> {
    let mut out = Vec::new();
    let sig = standard_sigma::<Q>();
    let two = Q::int(2);

    let j1 = j1_matrix(&sig);
    let id12 = Mat::<Q>::identity(DIM_EL1);
    let poly1 = &(&(&j1 * &j1) - &id12.scale(&two)) - &j1;
    out.push(Check::exact(
        "decompose.j1-minimal-polynomial",
        "J1 spectrum",
        poly1.is_zero(),
        o.seed,
    ));
    let m1 = (kernel_dim(&j1, two.clone()), kernel_dim(&j1, Q::int(-1)));
    out.push(
        Check::exact(
            "decompose.j1-multiplicities",
            "J1 spectrum",
            m1 == (4, 8),
            o.seed,
        )
        .with_note(format!("eigenvalues (2, -1) with multiplicities {m1:?}")),
    );

    let j2 = j2_matrix(&sig);
    let id18 = Mat::<Q>::identity(DIM_EL2);
    let f = |l: i64| &j2 - &id18.scale(&Q::int(l));
    let poly2 = &(&(&j2 * &f(2)) * &f(1)) * &f(-1);
    out.push(Check::exact(
        "decompose.j2-minimal-polynomial",
        "J2 spectrum",
        poly2.is_zero(),
        o.seed,
    ));
    let m2 = [2, 1, -1, 0].map(|l| kernel_dim(&j2, Q::int(l)));
    out.push(
        Check::exact(
            "decompose.j2-multiplicities",
            "J2 spectrum",
            m2 == [1, 3, 5, 9],
            o.seed,
        )
        .with_note(format!(
            "eigenvalues (2, 1, -1, 0) with multiplicities {m2:?}"
        )),
    );

    let p = channel_projectors(&sig);
    let mut sum = Mat::<Q>::zeros(DIM_EL2, DIM_EL2);
    let mut idem = true;
    for pk in &p {
        sum = &sum + pk;
        idem &= &(pk * pk) - pk == Mat::zeros(DIM_EL2, DIM_EL2);
    }
    let ranks: Vec<usize> = p.iter().map(|m| m.rank()).collect();
    out.push(Check::exact(
        "decompose.projectors-resolve-identity",
        "two-form channels",
        sum == id18 && idem,
        o.seed,
    ));
    out.push(
        Check::exact(
            "decompose.channel-ranks",
            "two-form channels",
            ranks == [5, 3, 1, 9],
            o.seed,
        )
        .with_note(format!("ranks {ranks:?}")),
    );
    out.push(Check::exact(
        "decompose.s-embed-rank",
        "tangent space S",
        s_embed_matrix(&sig).rank() == DIM_S,
        o.seed,
    ));

    let t = &o.triple;
    let scale = input_scale(t).powi(2);
    let j1n = j1_coord_matrix(t);
    let r1 = (&(&(&j1n * &j1n) - &Mat::identity(DIM_EL1).scale(&2.0)) - &j1n).max_abs();
    out.push(Check::at_most(
        "decompose.j1-polynomial-triple",
        "J1 spectrum",
        rel_max(r1, scale),
        o.tol(1e-12),
        o.seed,
    ));
    let j2n = j2_coord_matrix(t);
    let i18 = Mat::<f64>::identity(DIM_EL2);
    let g = |l: f64| &j2n - &i18.scale(&l);
    let r2 = (&(&(&j2n * &g(2.0)) * &g(1.0)) * &g(-1.0)).max_abs();
    out.push(Check::at_most(
        "decompose.j2-polynomial-triple",
        "J2 spectrum",
        rel_max(r2, scale.powi(2)),
        o.tol(1e-12),
        o.seed,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let (mut s_round, mut c_round) = (0.0_f64, 0.0_f64);
    let mut rejects = true;
    for _ in 0..20 {
        let s = random_s_element(t, &mut rng);
        match s_extract(t, &s_embed(t, &s)) {
            Ok(back) => s_round = s_round.max(s_element_distance(&s, &back)),
            Err(_) => s_round = f64::INFINITY,
        }
        let b = ETwoForm::from_vec(
            &(0..DIM_EL2)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect::<Vec<_>>(),
        );
        let back = recompose_two_form(t, &decompose_two_form(t, &b));
        c_round = c_round.max(back.sub(&b).max_abs());
        rejects &= matches!(s_extract(t, &b), Err(PlebError::NotInS { .. }));
    }
    out.push(Check::at_most(
        "decompose.s-round-trip",
        "tangent space S",
        rel_max(s_round, scale),
        o.tol(1e-12),
        o.seed,
    ));
    out.push(Check::at_most(
        "decompose.channel-round-trip",
        "two-form channels",
        rel_max(c_round, scale),
        o.tol(1e-12),
        o.seed,
    ));
    out.push(Check::exact(
        "decompose.extract-rejects-s4",
        "tangent space S",
        rejects,
        o.seed,
    ));
    out
}

pub fn ellipticity(o: &Options) -> Vec<Check> {
    let tol = o.tol(1e-10);
    let mut out = Vec::new();
    let ops = pleb_ops(&o.triple);
    let dirs = sample_directions(o.samples, o.seed);
    let reports: Vec<_> = dirs
        .par_iter()
        .map(|k| exactness_diagnostics(&[&ops.d1, &ops.d2, &ops.d3], k, tol))
        .collect();
    let bad_ranks = reports.iter().filter(|r| r.ranks != [4, 9, 3]).count();
    let bad_kernels = reports
        .iter()
        .filter(|r| r.kernel_dims != [0, 4, 9])
        .count();
    let angle = reports
        .iter()
        .map(|r| r.max_principal_angle)
        .fold(0.0, f64::max);
    let gap = reports
        .iter()
        .map(|r| r.min_gap)
        .fold(f64::INFINITY, f64::min);
    let tag = "symbol exactness";
    out.push(
        Check::exact("ellipticity.ranks", tag, bad_ranks == 0, o.seed).with_note(format!(
            "ranks (4, 9, 3) at {} of {} covectors",
            dirs.len() - bad_ranks,
            dirs.len()
        )),
    );
    out.push(
        Check::exact("ellipticity.kernel-dims", tag, bad_kernels == 0, o.seed)
            .with_note("kernels (0, 4, 9)"),
    );
    out.push(Check::at_most(
        "ellipticity.principal-angle",
        tag,
        angle,
        tol,
        o.seed,
    ));
    out.push(Check::at_least(
        "ellipticity.singular-gap",
        tag,
        gap,
        1e4,
        o.seed,
    ));
    let euler = DIM_TM as i64 - DIM_S as i64 + DIM_EL1 as i64 - DIM_E as i64;
    out.push(
        Check::exact("ellipticity.index-bookkeeping", tag, euler == 0, o.seed)
            .with_note("4 - 13 + 12 - 3 = 0"),
    );

    let kres = dirs
        .iter()
        .map(|k| {
            kbasis_frame(&o.triple, k)
                .map(|e| kbasis_residual(&o.triple, k, &e))
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most(
        "ellipticity.k-adapted-frame",
        "k-adapted frame",
        kres,
        o.tol(1e-12),
        o.seed,
    ));

    let degenerate = matches!(
        exactness_report(&o.triple, &[0.0; 4], tol),
        Err(PlebError::DegenerateK { .. })
    );
    out.push(Check::exact(
        "ellipticity.zero-covector-guard",
        tag,
        degenerate,
        o.seed,
    ));

    let mut all = true;
    for p in pullbacks(&o.triple, o.seed, 5) {
        match p {
            Ok(t) => {
                all &= sample_directions(20, o.seed)
                    .iter()
                    .all(|k| exactness_report(&t, k, tol).is_ok())
            }
            Err(_) => all = false,
        }
    }
    out.push(
        Check::exact("ellipticity.pullbacks", tag, all, o.seed)
            .with_note("5 pullbacks x 44 covectors"),
    );
    out
}

pub fn complex(o: &Options) -> Vec<Check> {
    let tol = o.tol(1e-10);
    let mut out = Vec::new();
    let e = pleb_ops_exact();
    let tag = "complex property";
    out.push(Check::exact(
        "complex.d2-d1-exact",
        tag,
        e.d2.compose(&e.d1).is_zero(),
        o.seed,
    ));
    out.push(Check::exact(
        "complex.d3-d2-exact",
        tag,
        e.d3.compose(&e.d2).is_zero(),
        o.seed,
    ));
    out.push(Check::exact(
        "complex.adjoint-compositions-exact",
        tag,
        e.d1_star.compose(&e.d2_star).is_zero() && e.d2_star.compose(&e.d3_star).is_zero(),
        o.seed,
    ));

    let f = pleb_ops(&o.triple);
    let scale = input_scale(&o.triple).powi(4);
    let num =
        f.d2.compose(&f.d1)
            .max_abs()
            .max(f.d3.compose(&f.d2).max_abs());
    out.push(Check::at_most(
        "complex.compositions-triple",
        tag,
        rel_max(num, scale),
        o.tol(1e-12),
        o.seed,
    ));

    let sig = standard_sigma::<Q>();
    let zero_cp = AdjointCoefficientSet::<Q>::zero();
    let mut solved = true;
    for i in 0..RANDOM_FAMILIES {
        let c = random_solved_family(sub_seed(o.seed, i));
        let (r1, r2) = composition_residuals(&c);
        let fam = family_stencils_generic(&sig, &c, &zero_cp);
        solved &= r1.iter().chain(r2.iter()).all(|x| *x == Q::rational(0, 1))
            && fam.d2.compose(&fam.d1).is_zero()
            && fam.d3.compose(&fam.d2).is_zero();
    }
    out.push(
        Check::exact(
            "complex.solved-families",
            "coefficient solution",
            solved,
            o.seed,
        )
        .with_note(format!("{RANDOM_FAMILIES} random families from solve_b")),
    );

    let mut c = random_solved_family(o.seed);
    c.b[1] = c.b[1].clone() + Q::int(1);
    c.b[3] = c.b[3].clone() - q(1, 3);
    let (r1, r2) = composition_residuals(&c);
    let fam = family_stencils_generic(&sig, &c, &zero_cp);
    let (p21, p32) = predicted_compositions(&sig, &r1, &r2);
    let agrees = fam.d2.compose(&fam.d1) == p21 && fam.d3.compose(&fam.d2) == p32;
    out.push(Check::exact(
        "complex.composition-oracle",
        "composition constraints",
        agrees,
        o.seed,
    ));

    let t = &o.triple;
    let fs = t.frame().sigma;
    let g = pleb_grams(&fs);
    let n = o.n;
    let trials = o.trials;
    let pairs: Vec<AdjointPair> = vec![
        ("complex.adjoint-d1", &f.d1, &f.d1_star, &g.tm, &g.s),
        ("complex.adjoint-d2", &f.d2, &f.d2_star, &g.s, &g.el1),
        ("complex.adjoint-d3", &f.d3, &f.d3_star, &g.el1, &g.e),
    ];
    for (k, (id, op, star, gin, gout)) in pairs.into_iter().enumerate() {
        let s = sub_seed(o.seed, 10 + k as u64);
        out.push(
            match adjoint_pair_check(op, star, gin, gout, trials, s, n) {
                Ok(r) => Check::at_most(id, "adjoint pairing", r, tol, s),
                Err(e) => Check::error(id, "adjoint pairing", e, s),
            },
        );
    }
    let branches = [
        (
            "twisted",
            CoefficientSet::<Q>::twisted(),
            InnerProductSet::<Q>::plebanski(),
            [Some("d1-tilde"), None, Some("d3-tilde"), Some("d4-tilde")],
        ),
        (
            "ip1",
            CoefficientSet::<Q>::plebanski(),
            InnerProductSet::<Q>::inner_prod_1(),
            [Some("d1-ip1"), Some("d2-ip1"), Some("d3-ip1"), None],
        ),
    ];
    for (b, (_, c, ip, names)) in branches.iter().enumerate() {
        let s = sub_seed(o.seed, 20 + b as u64);
        match pairing_residuals(t, c, ip, trials, s, n) {
            Ok(r) => {
                for (name, res) in names.iter().zip(r) {
                    if let Some(name) = name {
                        out.push(Check::at_most(
                            &format!("complex.adjoint-{name}"),
                            "adjoint pairing",
                            res,
                            tol,
                            s,
                        ));
                    }
                }
            }
            Err(e) => out.push(Check::error(
                "complex.adjoint-branch",
                "adjoint pairing",
                e,
                s,
            )),
        }
    }
    let wrong = f.d1_star.scale(&-1.0);
    let s = sub_seed(o.seed, 30);
    out.push(
        match adjoint_pair_check(&f.d1, &wrong, &g.tm, &g.s, 3, s, n) {
            Ok(r) => Check::at_least(
                "complex.adjoint-negative-control",
                "adjoint pairing",
                r,
                0.1,
                s,
            ),
            Err(e) => Check::error("complex.adjoint-negative-control", "adjoint pairing", e, s),
        },
    );

    let sig = standard_sigma::<Q>();
    let exact = pleb_ops_generic(&sig);
    let (u2, u3) = untraced_adjoints(&sig);
    let ip1_table = adjoints_from_grams(&exact, &inner_prod_1_grams(&sig));
    let same = matches!(&ip1_table, Ok((_, a2, a3)) if *a2 == u2 && *a3 == u3);
    out.push(Check::exact(
        "complex.untraced-table-ip1",
        "untraced adjoint table",
        same,
        o.seed,
    ));
    let gap = u2
        .sub(&exact.d2_star)
        .max_abs()
        .max(u3.sub(&exact.d3_star).max_abs());
    out.push(
        Check::at_least(
            "complex.untraced-table-differs",
            "untraced adjoint table",
            gap,
            0.1,
            o.seed,
        )
        .with_note(format!(
            "max coefficient difference from the Plebanski-Gram adjoints {gap:.4}"
        )),
    );
    out
}

pub fn einstein(o: &Options) -> Vec<Check> {
    let tol = o.tol(1e-10);
    let mut out = Vec::new();
    let (composed, formula) = d2star_d2_stencils(&standard_sigma::<Q>());
    out.push(Check::exact(
        "einstein.d2star-d2-exact",
        "second-order operator",
        composed == formula,
        o.seed,
    ));

    let t = &o.triple;
    let run = || -> Result<Vec<Check>, PlebError> {
        let mut v = Vec::new();
        let sigma = random_field(DIM_S, o.n, o.seed)?;
        let lhs = d2star_d2(t, &sigma)?;
        let rhs = d2star_d2_formula(t, &sigma)?;
        let scale = lhs.max_abs().max(1.0);
        for (id, start, len) in [
            ("einstein.channel-h", 0, 1),
            ("einstein.channel-htilde", 4, 9),
        ] {
            let d = lhs.slice(start, len).sub(&rhs.slice(start, len))?.max_abs() / scale;
            v.push(Check::at_most(id, "second-order operator", d, tol, o.seed));
        }
        let hv = lhs.slice(1, 3).max_abs() / scale;
        v.push(Check::at_most(
            "einstein.channel-hi-vanishes",
            "second-order operator",
            hv,
            o.tol(1e-12),
            o.seed,
        ));

        let a = pleb_core::lattice::apply_stencil(&pleb_ops(t).d2, &sigma)?;
        let res = einstein_residual(t, &a)?;
        let norms = res.norms();
        let ascale = a.max_abs().max(1.0);
        v.push(Check::at_most(
            "einstein.three-channel-automatic",
            "linearized Einstein",
            norms.s2 / ascale,
            tol,
            o.seed,
        ));
        v.push(
            Check::at_least(
                "einstein.psi-channel-nontrivial",
                "linearized Einstein",
                norms.psi / ascale,
                1e-3,
                o.seed,
            )
            .with_note(format!(
                "scalar {:.2e}, anti-self-dual {:.2e}",
                norms.s0 / ascale,
                norms.s9 / ascale
            )),
        );
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(Check::error(
            "einstein.lattice",
            "second-order operator",
            e,
            o.seed,
        )),
    }
    out
}

pub fn coefficients(o: &Options) -> Vec<Check> {
    let mut out = Vec::new();
    let seed = o.seed;
    let pleb = CoefficientSet::<Q>::plebanski();
    let ip1 = InnerProductSet::<Q>::inner_prod_1();
    let tag = "Laplace conditions";
    let zero = Q::rational(0, 1);

    let cp1 = adjoint_from_inner(&pleb, &ip1).expect("nonsingular Grams");
    let dc = delta_conditions(&pleb, &cp1);
    out.push(Check::exact(
        "coefficients.delta-conditions-ip1",
        tag,
        dc.holds(),
        seed,
    ));
    let expected = [Q::int(-1), Q::int(-1), Q::int(-1), Q::int(-2)];
    let mult: Vec<String> = dc.multipliers.iter().map(Q::pretty).collect();
    out.push(
        Check::exact(
            "coefficients.multipliers",
            tag,
            dc.multipliers == expected,
            seed,
        )
        .with_note(format!(
            "Laplacian coefficients (h, hi, htilde, chi) = ({})",
            mult.join(", ")
        )),
    );
    out.push(
        Check::exact(
            "coefficients.chi-multiplier",
            tag,
            -dc.multipliers[3].clone() == Q::int(2),
            seed,
        )
        .with_note("d3 d3* = 2(-Laplacian) on chi"),
    );
    let cpp = adjoint_from_inner(&pleb, &InnerProductSet::plebanski()).expect("nonsingular Grams");
    out.push(Check::exact(
        "coefficients.pleb-grams-not-laplacian",
        tag,
        !delta_conditions(&pleb, &cpp).holds(),
        seed,
    ));

    let solved = solve_inner_products(&pleb, &Q::int(1), &zero);
    out.push(Check::exact(
        "coefficients.solve-inner-products",
        "inner-product solution",
        solved.as_ref() == Ok(&ip1),
        seed,
    ));
    let mut family = true;
    for (b3, g2) in [
        (q(1, 1), q(0, 1)),
        (q(2, 1), q(1, 3)),
        (Q::sqrt2(), q(-1, 2)),
        (q(1, 2), q(5, 1)),
    ] {
        family &= match solve_inner_products(&pleb, &b3, &g2) {
            Ok(ip) => adjoint_from_inner(&pleb, &ip)
                .map(|cp| delta_conditions(&pleb, &cp).holds())
                .unwrap_or(false),
            Err(_) => false,
        };
    }
    out.push(
        Check::exact(
            "coefficients.inner-product-family",
            "inner-product solution",
            family,
            seed,
        )
        .with_note("two-parameter family in (beta3, gamma2)"),
    );

    let mut agree = true;
    for (c, ip) in [
        (pleb.clone(), InnerProductSet::plebanski()),
        (pleb.clone(), ip1.clone()),
        (CoefficientSet::twisted(), InnerProductSet::plebanski()),
        (random_solved_family(seed), ip1.clone()),
    ] {
        agree &= adjoint_formula_disagreements(&c, &ip)
            .map(|v| v.is_empty())
            .unwrap_or(false);
    }
    out.push(Check::exact(
        "coefficients.adjoint-formulas",
        "adjoint coefficients",
        agree,
        seed,
    ));

    let s = sub_seed(seed, 40);
    let scaled = ip1.scaled(&q(3, 2));
    out.push(
        match pairing_residuals(&o.triple, &pleb, &scaled, 5, s, o.n) {
            Ok(r) => Check::at_most(
                "coefficients.scaled-pairing",
                "adjoint coefficients",
                r.into_iter().fold(0.0, f64::max),
                o.tol(1e-10),
                s,
            ),
            Err(e) => Check::error("coefficients.scaled-pairing", "adjoint coefficients", e, s),
        },
    );

    let tw = CoefficientSet::<Q>::twisted();
    let twp = adjoint_from_inner(&tw, &InnerProductSet::plebanski()).expect("nonsingular Grams");
    out.push(Check::exact(
        "coefficients.f-condition",
        "mixed block",
        f_condition(&twp, &tw) == zero,
        seed,
    ));

    let sig = standard_sigma::<Q>();
    let fam = family_stencils_generic(&sig, &pleb, &cp1);
    let (ls, le) = laplacian_formula_stencils(&sig, &pleb, &cp1);
    let direct = fam
        .d1
        .compose(&fam.d1_star)
        .add(&fam.d2_star.compose(&fam.d2));
    out.push(Check::exact(
        "coefficients.laplacian-formula",
        tag,
        ls == direct && le == fam.d3.compose(&fam.d3_star),
        seed,
    ));

    let guard = matches!(
        solve_b(&q(1, 1), &q(1, 4), &q(1, 2), &q(1, 1), &q(1, 1), &q(1, 4)),
        Err(PlebError::DegenerateFamily(_))
    );
    out.push(Check::exact(
        "coefficients.degenerate-family-guard",
        "coefficient solution",
        guard,
        seed,
    ));

    let std_triple = standard_triple();
    let fs = standard_sigma::<f64>();
    let fam_ip1 = family_stencils(&std_triple, &pleb, &cp1);
    let p = pleb_ops(&std_triple);
    let naive_ip1 = TwistedBlockOperator {
        s_to_tm: fam_ip1.d1_star,
        e_to_tm: OperatorStencil::zeros(DIM_TM, DIM_E),
        s_to_el1: p.d2.clone(),
        e_to_el1: fam_ip1.d3_star,
    };
    let g1 = ip1.to_f64().grams(&fs);
    let dom = g1.s.direct_sum(&g1.e);
    let cod = g1.tm.direct_sum(&g1.el1);
    let s = sub_seed(seed, 41);
    out.push(
        match laplacian_multiple_check(&naive_ip1.stencil(), &dom, &cod, 3, s, o.n) {
            Ok(fit) => {
                let mut dev = fit.residual;
                for (a, row) in fit.m.iter().enumerate() {
                    for (b, x) in row.iter().enumerate() {
                        let want = if a != b {
                            0.0
                        } else if a >= DIM_S {
                            2.0
                        } else {
                            1.0
                        };
                        dev = dev.max((x - want).abs());
                    }
                }
                Check::at_most("coefficients.lattice-fit-ip1", tag, dev, o.tol(1e-10), s)
                    .with_note("M = diag(1, 2 on chi)")
            }
            Err(e) => Check::error("coefficients.lattice-fit-ip1", tag, e, s),
        },
    );
    let naive = TwistedBlockOperator {
        s_to_tm: p.d1_star,
        e_to_tm: OperatorStencil::zeros(DIM_TM, DIM_E),
        s_to_el1: p.d2,
        e_to_el1: p.d3_star,
    };
    let gp = InnerProductSet::<f64>::plebanski().grams(&fs);
    let s = sub_seed(seed, 42);
    out.push(
        match laplacian_multiple_check(
            &naive.stencil(),
            &gp.s.direct_sum(&gp.e),
            &gp.tm.direct_sum(&gp.el1),
            3,
            s,
            o.n,
        ) {
            Ok(fit) => Check::at_least(
                "coefficients.naive-negative-result",
                tag,
                fit.residual,
                0.1,
                s,
            )
            .with_note(format!("best-fit residual {:.4}", fit.residual)),
            Err(e) => Check::error("coefficients.naive-negative-result", tag, e, s),
        },
    );
    out
}

pub fn twisted(o: &Options) -> Vec<Check> {
    let mut out = Vec::new();
    let seed = o.seed;
    let tag = "twisted operator";
    let (r1, r2) = phi_identity_residuals(&o.triple);
    let scale = input_scale(&o.triple).powi(2);
    out.push(Check::at_most(
        "twisted.phi-identities",
        "Phi identities",
        rel_max(r1.max(r2), scale),
        o.tol(1e-12),
        seed,
    ));

    let sig = standard_sigma::<Q>();
    let (w1, w2) = rewriting_residuals(&sig);
    out.push(Check::exact(
        "twisted.rewriting-identities",
        "tilde rewriting",
        w1 == 0.0 && w2 == 0.0,
        seed,
    ));
    out.push(Check::exact(
        "twisted.displayed-forms",
        "tilde rewriting",
        tilde_ops_displayed(&sig) == tilde_ops_generic(&sig),
        seed,
    ));
    out.push(Check::exact(
        "twisted.plebanski-form",
        tag,
        d_tilde_generic(&sig) == d_tilde_from_plebanski(&sig),
        seed,
    ));
    let square = d_tilde_square(&sig)
        .map(|s| s == mixing_stencil::<Q>())
        .unwrap_or(false);
    out.push(Check::exact(
        "twisted.square-exact",
        "Laplace property",
        square,
        seed,
    ));
    let m = mixing_matrix::<Q>();
    out.push(Check::exact(
        "twisted.mixing-involution",
        "Laplace property",
        &m * &m == Mat::identity(DIM_TWISTED),
        seed,
    ));
    let r2 = Q::sqrt2();
    let block =
        m[(1, 13)] == -(Q::int(1) / (Q::int(2) * r2.clone())) && m[(13, 1)] == Q::int(-2) * r2;
    out.push(
        Check::exact("twisted.mixing-block", "Laplace property", block, seed)
            .with_note("[[0, -1/(2 sqrt2)], [-2 sqrt2, 0]]"),
    );

    let fs = o.triple.frame().sigma;
    let dom = twisted_domain_gram::<f64>().matrix;
    let cod = twisted_codomain_gram(&fs).matrix;
    let dirs = sample_directions(o.samples.min(100), seed);
    let mf = mixing_matrix::<f64>();
    match delta_multiple(&d_tilde_generic(&fs).stencil(), &dom, &cod, &dirs) {
        Ok(dm) => {
            let mut dev = dm.defect;
            for a in 0..DIM_TWISTED {
                for b in 0..DIM_TWISTED {
                    dev = dev.max((dm.m[a][b] + mf[(a, b)]).abs());
                }
            }
            out.push(Check::at_most(
                "twisted.symbol-multiple",
                "Laplace property",
                dev,
                o.tol(1e-12),
                seed,
            ));
            out.push(Check::at_most(
                "twisted.symbol-involution",
                "Laplace property",
                dm.involution_defect,
                o.tol(1e-12),
                seed,
            ));
        }
        Err(e) => out.push(Check::error(
            "twisted.symbol-multiple",
            "Laplace property",
            e,
            seed,
        )),
    }
    match delta_multiple(&naive_d_generic(&fs).stencil(), &dom, &cod, &dirs) {
        Ok(dm) => out.push(Check::at_least(
            "twisted.naive-symbol-defect",
            "Laplace property",
            dm.defect,
            0.1,
            seed,
        )),
        Err(e) => out.push(Check::error(
            "twisted.naive-symbol-defect",
            "Laplace property",
            e,
            seed,
        )),
    }

    let st = standard_triple();
    let s = sub_seed(seed, 50);
    let dom_g = twisted_domain_gram::<f64>();
    let cod_g = twisted_codomain_gram(&standard_sigma::<f64>());
    out.push(
        match laplacian_multiple_check(&build_d_tilde(&st).stencil(), &dom_g, &cod_g, 3, s, o.n) {
            Ok(fit) => {
                let mut dev = fit.residual;
                for a in 0..DIM_TWISTED {
                    for b in 0..DIM_TWISTED {
                        dev = dev.max((fit.m[a][b] - mf[(a, b)]).abs());
                    }
                }
                Check::at_most(
                    "twisted.lattice-fit",
                    "Laplace property",
                    dev,
                    o.tol(1e-10),
                    s,
                )
            }
            Err(e) => Check::error("twisted.lattice-fit", "Laplace property", e, s),
        },
    );

    match sign_flip_probe(&sample_directions(20, seed)) {
        Ok(p) => {
            let chosen = p
                .iter()
                .find(|x| x.signs == [1, 1, 1])
                .map(|x| x.pass)
                .unwrap_or(false);
            let passing: Vec<String> = p
                .iter()
                .filter(|x| x.pass)
                .map(|x| format!("{:?}", x.signs))
                .collect();
            out.push(
                Check::exact("twisted.sign-choice", tag, chosen, seed).with_note(format!(
                    "passing sign patterns (c1, c2, f): {}",
                    passing.join(" ")
                )),
            );
        }
        Err(e) => out.push(Check::error("twisted.sign-choice", tag, e, seed)),
    }
    out
}

pub fn split(o: &Options) -> Vec<Check> {
    let mut out = Vec::new();
    let seed = o.seed;
    let tag = "block splitting";
    match split_check(&o.triple) {
        Ok(r) => {
            let t = if r.exact { 0.0 } else { o.tol(1e-12) };
            let mode = if r.exact { "exact" } else { "floating point" };
            out.push(
                Check::at_most("split.off-diagonal-upper", tag, r.off_diagonal[0], t, seed)
                    .with_note(mode),
            );
            out.push(
                Check::at_most("split.off-diagonal-lower", tag, r.off_diagonal[1], t, seed)
                    .with_note(mode),
            );
            out.push(Check::at_most(
                "split.d4-block",
                tag,
                r.d4_deviation,
                t,
                seed,
            ));
            out.push(Check::at_most(
                "split.d12-block",
                tag,
                r.d12_deviation,
                t,
                seed,
            ));
            out.push(Check::at_most(
                "split.d12-diamond",
                tag,
                r.diamond_deviation,
                t,
                seed,
            ));
            out.push(Check::at_most(
                "split.d4-square-polarized",
                tag,
                r.d4_square,
                t,
                seed,
            ));
            out.push(Check::at_most(
                "split.d12-square-polarized",
                tag,
                r.d12_square,
                t,
                seed,
            ));
        }
        Err(e) => out.push(Check::error("split.blocks", tag, e, seed)),
    }

    let fs = o.triple.frame().sigma;
    let op = d_tilde_generic(&fs)
        .stencil()
        .left_mul(&t2(&fs).matrix)
        .right_mul(&t1::<f64>().matrix);
    let d4 = op.sub_block(0, 4, 0, 4);
    let d12 = op.sub_block(4, 12, 4, 12);
    let w4 = Mat::diag(&[0.5, 2.0, 2.0, 2.0]);
    let (mut e4, mut e12) = (0.0_f64, 0.0_f64);
    for k in sample_directions(o.samples.min(100), seed) {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        let s4 = d4.symbol(&k);
        e4 = e4.max((&(&s4.transpose() * &s4) - &w4.scale(&k2)).max_abs());
        let s12 = d12.symbol(&k);
        e12 = e12.max((&(&s12.transpose() * &s12) - &Mat::identity(DIM_EL1).scale(&k2)).max_abs());
    }
    out.push(
        Check::at_most("split.d4-square", tag, e4, o.tol(1e-12), seed)
            .with_note("diag(1/2, 2, 2, 2)|k|^2"),
    );
    out.push(
        Check::at_most("split.d12-square", tag, e12, o.tol(1e-12), seed).with_note("|k|^2 I12"),
    );

    let sig = standard_sigma::<Q>();
    let tr = transform_report_generic(&sig);
    let exact0 = |x: f64| x == 0.0;
    out.push(Check::exact(
        "split.t1-inverse",
        "fiber transforms",
        exact0(tr.t1_round_trip),
        seed,
    ));
    out.push(
        Check::exact(
            "split.t2-inverse",
            "fiber transforms",
            exact0(tr.t2_round_trip),
            seed,
        )
        .with_note(format!(
            "literal displayed inverse misses by {:.3}",
            tr.displayed_inverse_defect
        )),
    );
    out.push(Check::exact(
        "split.t1-domain-gram",
        "fiber transforms",
        exact0(tr.t1_gram) && exact0(tr.t1_cross),
        seed,
    ));
    let inv = t2(&sig).inverse;
    let omega = &inv.transpose() * &(&twisted_codomain_gram(&sig).matrix * &inv);
    let diagonal = (0..DIM_TWISTED)
        .all(|a| (0..DIM_TWISTED).all(|b| a == b || omega[(a, b)] == Q::rational(0, 1)));
    let pos = (0..DIM_TWISTED)
        .filter(|&a| omega[(a, a)].to_f64() > 0.0)
        .count();
    let neg = (0..DIM_TWISTED)
        .filter(|&a| omega[(a, a)].to_f64() < 0.0)
        .count();
    out.push(
        Check::exact(
            "split.gram-congruence",
            "codomain Gram",
            exact0(tr.congruence) && diagonal && (pos, neg) == (12, 4),
            seed,
        )
        .with_note(format!("signature ({pos}, {neg})")),
    );

    let s = sub_seed(seed, 60);
    let tol = o.tol(1e-10);
    match random_field(DIM_TWISTED, o.n, s).and_then(|u| action_identities(&o.triple, &u, tol)) {
        Ok(a) => {
            out.push(
                Check::at_most(
                    "split.action-first-vs-second",
                    "action",
                    a.rel_first_vs_second,
                    tol,
                    s,
                )
                .with_note(format!(
                    "first {:.6e}, second {:.6e}",
                    a.first_order, a.second_order
                )),
            );
            out.push(
                Check::at_most(
                    "split.action-split-form",
                    "action",
                    a.rel_split_vs_twice,
                    tol,
                    s,
                )
                .with_note(format!("split {:.6e}", a.split)),
            );
        }
        Err(e) => out.push(Check::error("split.action", "action", e, s)),
    }
    out
}
