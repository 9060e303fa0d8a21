//! The twisted operator D̃ on S ⊕ E, the maps Φ and Φ*, the changes of
//! variables T₁ and T₂, the splitting T₂D̃T₁ = D₄ ⊕ D₁₂ and the action
//! identities.

use serde::Serialize;

use crate::coefficient_lab::{
    adjoint_from_inner, family_stencils_generic, gen_d1_star_symbol, gen_d1_symbol,
    gen_d3_star_symbol, gen_d3_symbol, gen_d4_star_symbol, gen_d4_symbol, CoefficientSet,
    InnerProductSet,
};
use crate::error::{PlebError, Result};
use crate::forms::{
    gram_el1, gram_s, gram_tm, htilde_basis, j1_coord_matrix, j1_matrix, s_from_coords,
    s_to_coords, two_form_coords, EOneForm, GramForm, Sq, DIM_E, DIM_EL1, DIM_S, DIM_TM,
};
use crate::lattice::{apply_stencil, inner, LatticeField};
use crate::mat::Mat;
use crate::plebanski_ops::{dot, pleb_ops_generic, sig_k, sq_vec};
use crate::scalar::{QSqrt2, Scalar};
use crate::sigma_core::{standard_sigma, PerfectTriple, Tri};
use crate::stencil::{OperatorStencil, SecondOrderStencil};
use crate::symbolcheck::symbol_square;

/// Fiber dimension of S ⊕ E and of TM ⊕ E⊗Λ¹.
pub const DIM_TWISTED: usize = 16;

/// Φ as a 4×12 matrix: Φ(a)_μ = Σⁱ_{μα}aⁱ_α.
pub fn phi_matrix<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    Mat::from_fn(DIM_TM, DIM_EL1, |m, c| sig.at(c / 4, m, c % 4).clone())
}

/// Φ* = −(1/2)Φᵀ, i.e. Φ*(ξ)ⁱ_μ = (1/2)Σⁱ_μ{}^αξ_α.
pub fn phi_star_matrix<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    phi_matrix(sig).transpose().scale(&T::ratio(-1, 2))
}

/// Φ(a)_μ = Σⁱ_μ{}^αaⁱ_α in coordinates.
pub fn phi_apply(triple: &PerfectTriple, a: &EOneForm) -> [f64; 4] {
    let mx = triple.mixed();
    std::array::from_fn(|m| {
        (0..3)
            .map(|i| (0..4).map(|al| mx[i][m][al] * a.a[i][al]).sum::<f64>())
            .sum()
    })
}

/// Φ*(ξ)ⁱ_μ = (1/2)Σⁱ_μ{}^αξ_α in coordinates.
pub fn phi_star_apply(triple: &PerfectTriple, xi: &[f64; 4]) -> EOneForm {
    let mx = triple.mixed();
    EOneForm {
        a: std::array::from_fn(|i| {
            std::array::from_fn(|m| 0.5 * (0..4).map(|al| mx[i][m][al] * xi[al]).sum::<f64>())
        }),
    }
}

/// Φ and Φ* as coordinate matrices on (TM, E⊗Λ¹) for an arbitrary triple.
pub fn phi_coord_matrices(triple: &PerfectTriple) -> (Mat<f64>, Mat<f64>) {
    let phi = Mat::from_columns(
        DIM_TM,
        &(0..DIM_EL1)
            .map(|c| {
                let mut e = vec![0.0; DIM_EL1];
                e[c] = 1.0;
                phi_apply(triple, &EOneForm::from_vec(&e)).to_vec()
            })
            .collect::<Vec<_>>(),
    );
    let star = Mat::from_columns(
        DIM_EL1,
        &(0..DIM_TM)
            .map(|c| {
                let mut e = [0.0; 4];
                e[c] = 1.0;
                phi_star_apply(triple, &e).to_vec()
            })
            .collect::<Vec<_>>(),
    );
    (phi, star)
}

/// Max-abs residuals of ΦJ₁ − 2Φ and Φ*Φ + (1/2)(I + J₁) for a triple.
pub fn phi_identity_residuals(triple: &PerfectTriple) -> (f64, f64) {
    let (phi, star) = phi_coord_matrices(triple);
    let j = j1_coord_matrix(triple);
    let r1 = (&(&phi * &j) - &phi.scale(&2.0)).max_abs();
    let id = Mat::<f64>::identity(DIM_EL1);
    let r2 = (&(&star * &phi) + &(&id + &j).scale(&0.5)).max_abs();
    (r1, r2)
}

/// The first-order ingredients of D̃ and their adjoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TildeOps<T: Scalar + Serialize> {
    pub d1: OperatorStencil<T>,
    pub d1_star: OperatorStencil<T>,
    pub d3: OperatorStencil<T>,
    pub d3_star: OperatorStencil<T>,
    pub d4: OperatorStencil<T>,
    pub d4_star: OperatorStencil<T>,
}

/// d̃₁ = d₁(−√2, 0, √2/2), d̃₃ = d₃(√2, 1/√2), d̃₄ = d̃₄(−1), with adjoints under
/// β = (1/4, 8, 1), γ = (0, 1).
pub fn tilde_ops_generic<T: Scalar + Serialize>(sig: &Tri<T>) -> TildeOps<T> {
    let c = CoefficientSet::<T>::twisted();
    let cp = adjoint_from_inner(&c, &InnerProductSet::plebanski())
        .expect("Plebański Grams are nonsingular");
    let f = family_stencils_generic(sig, &c, &cp);
    TildeOps {
        d1: f.d1,
        d1_star: f.d1_star,
        d3: f.d3,
        d3_star: f.d3_star,
        d4: f.d4,
        d4_star: f.d4_star,
    }
}

fn tilde_ops(triple: &PerfectTriple) -> TildeOps<f64> {
    let frame = triple.frame();
    let t = tilde_ops_generic(&frame.sigma);
    let c = |s: OperatorStencil<f64>| s.in_coordinates(&frame.e_inv);
    TildeOps {
        d1: c(t.d1),
        d1_star: c(t.d1_star),
        d3: c(t.d3),
        d3_star: c(t.d3_star),
        d4: c(t.d4),
        d4_star: c(t.d4_star),
    }
}

/// (d̃₁, d̃₁*) for a triple.
pub fn build_tilde_d1(triple: &PerfectTriple) -> (OperatorStencil<f64>, OperatorStencil<f64>) {
    let t = tilde_ops(triple);
    (t.d1, t.d1_star)
}

/// (d̃₃, d̃₃*, d̃₄, d̃₄*) for a triple.
pub fn build_tilde_d3_d4(
    triple: &PerfectTriple,
) -> (
    OperatorStencil<f64>,
    OperatorStencil<f64>,
    OperatorStencil<f64>,
    OperatorStencil<f64>,
) {
    let t = tilde_ops(triple);
    (t.d3, t.d3_star, t.d4, t.d4_star)
}

/// The displayed forms d̃₁ξ = √2(−∂^μξ_μ, 0, ∂_⟨μξ_ν⟩), d̃₁*σ = √2((1/4)∂_μh − ∂^νh̃_{μν}),
/// d̃₃*χ = (1/√2)εⁱʲᵏΣʲ_μ{}^α∂_αχᵏ, d̃₄χ = −Σⁱ_μ{}^α∂_αχⁱ, d̃₄*ξ = −Σⁱ^{μν}∂_μξ_ν.
pub fn tilde_ops_displayed<T: Scalar + Serialize>(sig: &Tri<T>) -> TildeOps<T> {
    let s = T::sqrt2();
    let half = T::ratio(1, 2);
    let a = [-s.clone(), T::zero(), s.clone() * half.clone()];
    let ap = [s.clone() * T::ratio(1, 4), T::zero(), -s.clone()];
    let c = [s.clone(), s.clone() * half.clone()];
    let cp = [T::zero(), s * half];
    let m1 = T::int(-1);
    TildeOps {
        d1: OperatorStencil::from_symbol(DIM_S, DIM_TM, |k, u| gen_d1_symbol(sig, &a, k, u)),
        d1_star: OperatorStencil::from_symbol(DIM_TM, DIM_S, |k, u| {
            gen_d1_star_symbol(sig, &ap, k, u)
        }),
        d3: OperatorStencil::from_symbol(DIM_E, DIM_EL1, |k, u| gen_d3_symbol(sig, &c, k, u)),
        d3_star: OperatorStencil::from_symbol(DIM_EL1, DIM_E, |k, u| {
            gen_d3_star_symbol(sig, &cp, k, u)
        }),
        d4: OperatorStencil::from_symbol(DIM_TM, DIM_E, |k, u| gen_d4_symbol(sig, &m1, k, u)),
        d4_star: OperatorStencil::from_symbol(DIM_E, DIM_TM, |k, u| {
            gen_d4_star_symbol(sig, &m1, k, u)
        }),
    }
}

/// A 2×2 block operator S ⊕ E → TM ⊕ E⊗Λ¹.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistedBlockOperator<T: Scalar + Serialize> {
    /// S → TM.
    pub s_to_tm: OperatorStencil<T>,
    /// E → TM.
    pub e_to_tm: OperatorStencil<T>,
    /// S → E⊗Λ¹.
    pub s_to_el1: OperatorStencil<T>,
    /// E → E⊗Λ¹.
    pub e_to_el1: OperatorStencil<T>,
}

impl<T: Scalar + Serialize> TwistedBlockOperator<T> {
    /// The 16 → 16 stencil on (h, hⁱ, h̃, χ) → (ξ, a).
    pub fn stencil(&self) -> OperatorStencil<T> {
        OperatorStencil::block(&[
            vec![&self.s_to_tm, &self.e_to_tm],
            vec![&self.s_to_el1, &self.e_to_el1],
        ])
    }
}

/// diag(¼, 8I₃, I₉, I₃) on S ⊕ E.
pub fn twisted_domain_gram<T: Scalar>() -> GramForm<T> {
    gram_s(T::ratio(1, 4), T::int(8), T::one()).direct_sum(&GramForm::identity(DIM_E))
}

/// diag(I₄, −J₁) on TM ⊕ E⊗Λ¹.
pub fn twisted_codomain_gram<T: Scalar>(sig: &Tri<T>) -> GramForm<T> {
    gram_tm().direct_sum(&gram_el1(T::zero(), T::one(), sig))
}

/// D̃(σ, χ) = (d̃₁*σ + d̃₄χ, d₂σ + d̃₃*χ).
pub fn d_tilde_generic<T: Scalar + Serialize>(sig: &Tri<T>) -> TwistedBlockOperator<T> {
    let t = tilde_ops_generic(sig);
    let p = pleb_ops_generic(sig);
    TwistedBlockOperator {
        s_to_tm: t.d1_star,
        e_to_tm: t.d4,
        s_to_el1: p.d2,
        e_to_el1: t.d3_star,
    }
}

/// D̃ written through the Plebański maps: ((d₁* − Φd₂)/√2, −Φd₃*; d₂, J₁d₃*/√2).
pub fn d_tilde_from_plebanski<T: Scalar + Serialize>(sig: &Tri<T>) -> TwistedBlockOperator<T> {
    let p = pleb_ops_generic(sig);
    let phi = phi_matrix(sig);
    let r = T::one() / T::sqrt2();
    TwistedBlockOperator {
        s_to_tm: p.d1_star.sub(&p.d2.left_mul(&phi)).scale(&r),
        e_to_tm: p.d3_star.left_mul(&phi).scale(&T::int(-1)),
        s_to_el1: p.d2.clone(),
        e_to_el1: p.d3_star.left_mul(&j1_matrix(sig)).scale(&r),
    }
}

/// The naive operator D = (d₁*, 0; d₂, d₃*).
pub fn naive_d_generic<T: Scalar + Serialize>(sig: &Tri<T>) -> TwistedBlockOperator<T> {
    let p = pleb_ops_generic(sig);
    TwistedBlockOperator {
        s_to_tm: p.d1_star,
        e_to_tm: OperatorStencil::zeros(DIM_TM, DIM_E),
        s_to_el1: p.d2,
        e_to_el1: p.d3_star,
    }
}

fn to_coordinates(
    triple: &PerfectTriple,
    op: TwistedBlockOperator<f64>,
) -> TwistedBlockOperator<f64> {
    let e_inv = triple.frame().e_inv;
    let c = |s: OperatorStencil<f64>| s.in_coordinates(&e_inv);
    TwistedBlockOperator {
        s_to_tm: c(op.s_to_tm),
        e_to_tm: c(op.e_to_tm),
        s_to_el1: c(op.s_to_el1),
        e_to_el1: c(op.e_to_el1),
    }
}

/// D̃ for a triple (frame fibers, coordinate derivatives).
pub fn build_d_tilde(triple: &PerfectTriple) -> TwistedBlockOperator<f64> {
    to_coordinates(triple, d_tilde_generic(&triple.frame().sigma))
}

/// The naive D for a triple.
pub fn build_naive_d(triple: &PerfectTriple) -> TwistedBlockOperator<f64> {
    to_coordinates(triple, naive_d_generic(&triple.frame().sigma))
}

/// The channel matrix M with D̃*D̃ = M(−Δ): −1 on h, identity on h̃, and
/// [[0, −1/(2√2)], [−2√2, 0]] on (hⁱ, χⁱ).
pub fn mixing_matrix<T: Scalar>() -> Mat<T> {
    let mut m = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    m[(0, 0)] = T::int(-1);
    for a in 4..13 {
        m[(a, a)] = T::one();
    }
    let s = T::sqrt2();
    for i in 0..3 {
        m[(1 + i, 13 + i)] = -(T::one() / (T::int(2) * s.clone()));
        m[(13 + i, 1 + i)] = T::int(-2) * s.clone();
    }
    m
}

/// The second-order stencil of M(−Δ).
pub fn mixing_stencil<T: Scalar + Serialize>() -> SecondOrderStencil<T> {
    let m = mixing_matrix::<T>();
    SecondOrderStencil::from_symbol(DIM_TWISTED, DIM_TWISTED, |k: &[T; 4], u: &[T]| {
        let k2 = dot(k, k);
        m.apply(u).into_iter().map(|v| -(v * k2.clone())).collect()
    })
}

/// D̃*D̃ as a composed stencil, with D̃* the adjoint for the twisted Grams.
pub fn d_tilde_square<T: Scalar + Serialize>(sig: &Tri<T>) -> Result<SecondOrderStencil<T>> {
    let d = d_tilde_generic(sig).stencil();
    let star = d.adjoint(
        &twisted_domain_gram::<T>().matrix,
        &twisted_codomain_gram(sig).matrix,
    )?;
    Ok(star.compose(&d))
}

/// Deviation of a block operator's symbol square from a k-independent multiple of |k|².
#[derive(Clone, Debug, Serialize)]
pub struct DeltaMultiple {
    /// Mean of σ(L)*σ(L)/|k|² over the sampled directions, row-major.
    pub m: Vec<Vec<f64>>,
    /// max_k ‖σ(L)*σ(L)/|k|² − m‖_max.
    pub defect: f64,
    /// ‖m² − I‖_max.
    pub involution_defect: f64,
}

/// Δ-multiplicity of σ(L)*σ(L) for the Grams on the domain and codomain.
pub fn delta_multiple(
    op: &OperatorStencil<f64>,
    gram_dom: &Mat<f64>,
    gram_cod: &Mat<f64>,
    dirs: &[[f64; 4]],
) -> Result<DeltaMultiple> {
    let d = op.in_dim;
    let mut mats = Vec::with_capacity(dirs.len());
    for k in dirs {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        mats.push(symbol_square(op, None, gram_dom, gram_cod, k)?.scale(&(1.0 / k2)));
    }
    let mut mean = Mat::<f64>::zeros(d, d);
    for m in &mats {
        mean = &mean + m;
    }
    let mean = mean.scale(&(1.0 / mats.len().max(1) as f64));
    let defect = mats
        .iter()
        .map(|m| (m - &mean).max_abs())
        .fold(0.0, f64::max);
    let involution_defect = (&(&mean * &mean) - &Mat::identity(d)).max_abs();
    Ok(DeltaMultiple {
        m: (0..d)
            .map(|a| (0..d).map(|b| mean[(a, b)]).collect())
            .collect(),
        defect,
        involution_defect,
    })
}

/// An invertible fiber map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberTransform<T: Scalar> {
    pub matrix: Mat<T>,
    pub inverse: Mat<T>,
}

impl<T: Scalar> FiberTransform<T> {
    pub fn round_trip_residual(&self) -> f64 {
        let n = self.matrix.rows;
        (&(&self.matrix * &self.inverse) - &Mat::identity(n)).max_abs()
    }
    pub fn to_f64(&self) -> FiberTransform<f64> {
        FiberTransform {
            matrix: self.matrix.to_f64(),
            inverse: self.inverse.to_f64(),
        }
    }
}

impl<T: Scalar + Serialize> Serialize for Mat<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<T>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)].clone()).collect())
            .collect();
        rows.serialize(s)
    }
}

/// T₁: (h, h₊ⁱ, h₋ⁱ, h̃) ↦ (h, hⁱ, h̃, χⁱ) with hⁱ = (h₊+h₋)/4, χⁱ = (h₊−h₋)/√2,
/// inverting h±ⁱ = 2hⁱ ± χⁱ/√2.
pub fn t1<T: Scalar>() -> FiberTransform<T> {
    let mut m = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    let mut inv = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    m[(0, 0)] = T::one();
    inv[(0, 0)] = T::one();
    let s = T::sqrt2();
    let rs = T::one() / s.clone();
    for i in 0..3 {
        m[(1 + i, 1 + i)] = T::ratio(1, 4);
        m[(1 + i, 4 + i)] = T::ratio(1, 4);
        m[(13 + i, 1 + i)] = rs.clone();
        m[(13 + i, 4 + i)] = -rs.clone();
        inv[(1 + i, 1 + i)] = T::int(2);
        inv[(1 + i, 13 + i)] = rs.clone();
        inv[(4 + i, 1 + i)] = T::int(2);
        inv[(4 + i, 13 + i)] = -rs.clone();
    }
    for a in 0..9 {
        m[(4 + a, 7 + a)] = T::one();
        inv[(7 + a, 4 + a)] = T::one();
    }
    FiberTransform {
        matrix: m,
        inverse: inv,
    }
}

/// T₂: (ξ, a) ↦ (ω, Ω) = (ξ + √2Φa, a − √2Φ*ξ), with inverse
/// ξ = −(1/2)ω + Φ(Ω)/√2, a = −Φ*(ω)/√2 + (1/2)(1 − J₁)Ω.
pub fn t2<T: Scalar>(sig: &Tri<T>) -> FiberTransform<T> {
    let phi = phi_matrix(sig);
    let star = phi_star_matrix(sig);
    let s = T::sqrt2();
    let rs = T::one() / s.clone();
    let half = T::ratio(1, 2);
    let mut m = Mat::identity(DIM_TWISTED);
    m.set_block(0, 4, &phi.scale(&s));
    m.set_block(4, 0, &star.scale(&-s));
    let mut inv = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    inv.set_block(0, 0, &Mat::identity(DIM_TM).scale(&-half.clone()));
    inv.set_block(0, 4, &phi.scale(&rs));
    inv.set_block(4, 0, &star.scale(&-rs));
    inv.set_block(
        4,
        4,
        &(&Mat::identity(DIM_EL1) - &j1_matrix(sig)).scale(&half),
    );
    FiberTransform {
        matrix: m,
        inverse: inv,
    }
}

/// The literal inverse display ξ = (1/2)ω + Φ(Ω)/√2, a = (1/2)(1 + J₁)Ω − Φ*(ω)/√2.
pub fn t2_displayed_inverse<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    let half = T::ratio(1, 2);
    let rs = T::one() / T::sqrt2();
    let mut inv = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    inv.set_block(0, 0, &Mat::identity(DIM_TM).scale(&half));
    inv.set_block(0, 4, &phi_matrix(sig).scale(&rs));
    inv.set_block(4, 0, &phi_star_matrix(sig).scale(&-rs));
    inv.set_block(
        4,
        4,
        &(&Mat::identity(DIM_EL1) + &j1_matrix(sig)).scale(&half),
    );
    inv
}

/// (T₁, T₂) for a triple in frame components.
pub fn build_t1_t2(triple: &PerfectTriple) -> (FiberTransform<f64>, FiberTransform<f64>) {
    (t1(), t2(&triple.frame().sigma))
}

/// Residuals of the fiber identities carried by T₁ and T₂.
#[derive(Clone, Debug, Serialize)]
pub struct TransformReport {
    pub t1_round_trip: f64,
    pub t2_round_trip: f64,
    /// ‖T₂⁻ᵀdiag(I₄, −J₁)T₂⁻¹ − diag(−½I₄, I₁₂)‖.
    pub congruence: f64,
    /// ‖T₁ᵀ G_dom T₁ − diag(¼, I₁₅)‖.
    pub t1_gram: f64,
    /// ‖T₁ᵀ C T₁ − diag(0, I₃, −I₃, 0)‖ for the cross form C with uᵀCu = 4√2hⁱχⁱ.
    pub t1_cross: f64,
    /// ‖T₂ · (displayed inverse) − I‖.
    pub displayed_inverse_defect: f64,
}

pub fn transform_report_generic<T: Scalar>(sig: &Tri<T>) -> TransformReport {
    let (a, b) = (t1::<T>(), t2(sig));
    let cod = twisted_codomain_gram(sig).matrix;
    let mut target = Mat::identity(DIM_TWISTED);
    for m in 0..4 {
        target[(m, m)] = T::ratio(-1, 2);
    }
    let congruence = (&(&b.inverse.transpose() * &(&cod * &b.inverse)) - &target).max_abs();
    let dom = twisted_domain_gram::<T>().matrix;
    let mut g_target = Mat::identity(DIM_TWISTED);
    g_target[(0, 0)] = T::ratio(1, 4);
    let t1_gram = (&(&a.matrix.transpose() * &(&dom * &a.matrix)) - &g_target).max_abs();
    let mut cross = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    let mut c_target = Mat::zeros(DIM_TWISTED, DIM_TWISTED);
    for i in 0..3 {
        cross[(1 + i, 13 + i)] = T::int(2) * T::sqrt2();
        cross[(13 + i, 1 + i)] = T::int(2) * T::sqrt2();
        c_target[(1 + i, 1 + i)] = T::one();
        c_target[(4 + i, 4 + i)] = T::int(-1);
    }
    let t1_cross = (&(&a.matrix.transpose() * &(&cross * &a.matrix)) - &c_target).max_abs();
    let displayed =
        (&(&b.matrix * &t2_displayed_inverse(sig)) - &Mat::identity(DIM_TWISTED)).max_abs();
    TransformReport {
        t1_round_trip: a.round_trip_residual(),
        t2_round_trip: b.round_trip_residual(),
        congruence,
        t1_gram,
        t1_cross,
        displayed_inverse_defect: displayed,
    }
}

/// (h̃⋄Σⁱ)_{μν} = h̃_{μα}Σⁱ_{αν} − h̃_{να}Σⁱ_{αμ}.
pub fn diamond<T: Scalar>(sig: &Tri<T>, ht: &Sq<T>) -> Vec<Sq<T>> {
    (0..3)
        .map(|i| {
            let a: Sq<T> = std::array::from_fn(|m| {
                std::array::from_fn(|n| {
                    (0..4).fold(T::zero(), |acc, al| {
                        acc + ht[m][al].clone() * sig.at(i, al, n).clone()
                    })
                })
            });
            std::array::from_fn(|m| std::array::from_fn(|n| a[m][n].clone() - a[n][m].clone()))
        })
        .collect()
}

/// The diamond as a map Sym²₀ → E⊗Λ² in coordinates.
pub fn diamond_coords<T: Scalar>(sig: &Tri<T>, ht_coords: &[T]) -> Vec<T> {
    let mut x = vec![T::zero(); DIM_S];
    x[4..].clone_from_slice(ht_coords);
    let (_, _, ht) = s_from_coords(&x);
    two_form_coords(&diamond(sig, &ht))
}

/// D₄(h, h₊) = −(1/√2)(∂_μh − 2Σⁱ_μ{}^α∂_αh₊ⁱ).
pub fn d4_split_stencil<T: Scalar + Serialize>(sig: &Tri<T>) -> OperatorStencil<T> {
    let r = -(T::one() / T::sqrt2());
    OperatorStencil::from_symbol(DIM_TM, 4, |k: &[T; 4], u: &[T]| {
        let mut out: Vec<T> = k.iter().map(|km| km.clone() * u[0].clone()).collect();
        for i in 0..3 {
            let sk = sig_k(sig, i, k);
            for m in 0..4 {
                out[m] -= T::int(2) * sk[m].clone() * u[1 + i].clone();
            }
        }
        out.into_iter().map(|v| v * r.clone()).collect()
    })
}

/// D₁₂(h₋, h̃) = ∂_μh₋ⁱ + Σⁱ_μ{}^α∂^βh̃_{αβ} − Σⁱ^{αβ}∂_αh̃_{μβ}.
pub fn d12_split_stencil<T: Scalar + Serialize>(sig: &Tri<T>) -> OperatorStencil<T> {
    OperatorStencil::from_symbol(DIM_EL1, DIM_EL1, |k: &[T; 4], u: &[T]| {
        let mut x = vec![T::zero(); DIM_S];
        x[4..].clone_from_slice(&u[3..]);
        let (_, _, ht) = s_from_coords(&x);
        let hk = sq_vec(&ht, k);
        let mut out = vec![T::zero(); DIM_EL1];
        for i in 0..3 {
            let sk = sig_k(sig, i, k);
            for m in 0..4 {
                let mut v = u[i].clone() * k[m].clone();
                for r in 0..4 {
                    v += sig.at(i, m, r).clone() * hk[r].clone();
                    v += ht[m][r].clone() * sk[r].clone();
                }
                out[4 * i + m] = v;
            }
        }
        out
    })
}

/// D₁₂ with the h̃ part written as −∂^μ(h̃⋄Σⁱ)_{μν}.
pub fn d12_diamond_stencil<T: Scalar + Serialize>(sig: &Tri<T>) -> OperatorStencil<T> {
    OperatorStencil::from_symbol(DIM_EL1, DIM_EL1, |k: &[T; 4], u: &[T]| {
        let mut x = vec![T::zero(); DIM_S];
        x[4..].clone_from_slice(&u[3..]);
        let (_, _, ht) = s_from_coords(&x);
        let dia = diamond(sig, &ht);
        let mut out = vec![T::zero(); DIM_EL1];
        for i in 0..3 {
            for n in 0..4 {
                let mut v = u[i].clone() * k[n].clone();
                for m in 0..4 {
                    v -= k[m].clone() * dia[i][m][n].clone();
                }
                out[4 * i + n] = v;
            }
        }
        out
    })
}

/// Outcome of the splitting check; all norms are max-abs.
#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    /// Norms of the (TM, (h₋, h̃)) and (E⊗Λ¹, (h, h₊)) blocks of T₂D̃T₁.
    pub off_diagonal: [f64; 2],
    pub d4_deviation: f64,
    pub d12_deviation: f64,
    pub diamond_deviation: f64,
    /// ‖σ(D₄)ᵀσ(D₄) − |k|²diag(½, 2, 2, 2)‖ over the polarization points.
    pub d4_square: f64,
    /// ‖σ(D₁₂)ᵀσ(D₁₂) − |k|²I₁₂‖ over the polarization points.
    pub d12_square: f64,
    pub exact: bool,
    pub pass: bool,
}

/// e_μ and e_μ + e_ν: a quadratic form in k is fixed by its values here.
fn polarization_points<T: Scalar>() -> Vec<[T; 4]> {
    let mut v = Vec::new();
    for m in 0..4 {
        for n in m..4 {
            v.push(std::array::from_fn(|a| {
                if a == m || a == n {
                    T::one()
                } else {
                    T::zero()
                }
            }));
        }
    }
    v
}

fn split_generic<T: Scalar + Serialize>(sig: &Tri<T>) -> (SplitReport, OperatorStencil<T>) {
    let d = d_tilde_generic(sig).stencil();
    let split = d.left_mul(&t2(sig).matrix).right_mul(&t1::<T>().matrix);
    let off = [
        split.sub_block(0, 4, 4, 12).max_abs(),
        split.sub_block(4, 12, 0, 4).max_abs(),
    ];
    let d4 = split.sub_block(0, 4, 0, 4);
    let d12 = split.sub_block(4, 12, 4, 12);
    let d4_dev = d4.sub(&d4_split_stencil(sig)).max_abs();
    let d12_dev = d12.sub(&d12_split_stencil(sig)).max_abs();
    let dia = d12_split_stencil(sig)
        .sub(&d12_diamond_stencil(sig))
        .max_abs();
    let mut d4_sq: f64 = 0.0;
    let mut d12_sq: f64 = 0.0;
    let w4 = Mat::diag(&[T::ratio(1, 2), T::int(2), T::int(2), T::int(2)]);
    for k in polarization_points::<T>() {
        let k2 = dot(&k, &k);
        let s4 = d4.symbol_exact(&k);
        d4_sq = d4_sq.max((&(&s4.transpose() * &s4) - &w4.scale(&k2)).max_abs());
        let s12 = d12.symbol_exact(&k);
        d12_sq =
            d12_sq.max((&(&s12.transpose() * &s12) - &Mat::identity(DIM_EL1).scale(&k2)).max_abs());
    }
    let r = SplitReport {
        off_diagonal: off,
        d4_deviation: d4_dev,
        d12_deviation: d12_dev,
        diamond_deviation: dia,
        d4_square: d4_sq,
        d12_square: d12_sq,
        exact: false,
        pass: false,
    };
    (r, split)
}

/// Exact splitting check for the standard triple in ℚ(√2).
pub fn split_check_exact() -> Result<SplitReport> {
    let (mut r, _) = split_generic(&standard_sigma::<QSqrt2>());
    r.exact = true;
    finish_split(r, 0.0)
}

/// Splitting check for an arbitrary triple in floating point.
pub fn split_check(triple: &PerfectTriple) -> Result<SplitReport> {
    if let Some(sig) = triple.exact_frame_sigma() {
        let (mut r, _) = split_generic(&sig);
        r.exact = true;
        return finish_split(r, 0.0);
    }
    let (r, _) = split_generic(&triple.frame().sigma);
    finish_split(r, 1e-12)
}

fn finish_split(mut r: SplitReport, tol: f64) -> Result<SplitReport> {
    let checks = [
        ("upper-right block of T2 D T1", r.off_diagonal[0]),
        ("lower-left block of T2 D T1", r.off_diagonal[1]),
        ("D4 block", r.d4_deviation),
        ("D12 block", r.d12_deviation),
        ("diamond form of D12", r.diamond_deviation),
        ("D4 symbol square", r.d4_square),
        ("D12 symbol square", r.d12_square),
    ];
    for (block, norm) in checks {
        if norm > tol {
            return Err(PlebError::SplitFailure {
                block: block.to_string(),
                norm,
            });
        }
    }
    r.pass = true;
    Ok(r)
}

/// The three evaluations of the action on a lattice configuration (σ, χ).
#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    /// ∫ξ·ξ′ + εΣa a′ − ½ξ² − ½εΣaa at ξ = ξ′ = d̃₁*σ + d̃₄χ, a = a′ = d₂σ + d̃₃*χ.
    pub first_order: f64,
    /// ½∫ −¼(∂h)² − 4√2∂hⁱ∂χⁱ + (∂h̃)².
    pub second_order: f64,
    /// ∫(D₁₂)² − ½∫(D₄)².
    pub split: f64,
    pub rel_first_vs_second: f64,
    pub rel_split_vs_twice: f64,
    pub pass: bool,
}

fn gradient_stencil(dim: usize, e_inv: &[[f64; 4]; 4]) -> OperatorStencil<f64> {
    let mut s = OperatorStencil::zeros(4 * dim, dim);
    for c in 0..dim {
        for a in 0..4 {
            s.set(4 * c + a, a, c, 1.0);
        }
    }
    s.in_coordinates(e_inv)
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Evaluates the first-order action, the second-order action and the split
/// form on a 16-component field (h, hⁱ, h̃, χ).
pub fn action_identities(
    triple: &PerfectTriple,
    u: &LatticeField,
    tol: f64,
) -> Result<ActionReport> {
    if u.fiber != DIM_TWISTED {
        return Err(PlebError::FiberMismatch {
            expected: DIM_TWISTED,
            found: u.fiber,
        });
    }
    let frame = triple.frame();
    let sig = &frame.sigma;
    let d = build_d_tilde(triple).stencil();
    let w = apply_stencil(&d, u)?;
    let cod = twisted_codomain_gram(sig);
    let first_order = inner(&w, &w, &cod)? - 0.5 * inner(&w, &w, &cod)?;

    let grad = gradient_stencil(DIM_TWISTED, &frame.e_inv);
    let du = apply_stencil(&grad, u)?;
    let mut weights = Mat::<f64>::zeros(4 * DIM_TWISTED, 4 * DIM_TWISTED);
    let s2 = std::f64::consts::SQRT_2;
    for a in 0..4 {
        weights[(a, a)] = -0.25;
        for i in 0..3 {
            let (p, q) = (4 * (1 + i) + a, 4 * (13 + i) + a);
            weights[(p, q)] = -2.0 * s2;
            weights[(q, p)] = -2.0 * s2;
        }
        for c in 4..13 {
            weights[(4 * c + a, 4 * c + a)] = 1.0;
        }
    }
    let second_order = 0.5
        * inner(
            &du,
            &du,
            &GramForm {
                matrix: weights,
                positive: false,
            },
        )?;

    let split_op = d.left_mul(&t2(sig).matrix).right_mul(&t1::<f64>().matrix);
    let v = u.map_fiber(&t1::<f64>().inverse)?;
    let z = apply_stencil(&split_op, &v)?;
    let omega = z.slice(0, 4);
    let big = z.slice(4, 12);
    let split = inner(&big, &big, &GramForm::identity(DIM_EL1))?
        - 0.5 * inner(&omega, &omega, &GramForm::identity(4))?;

    let r1 = rel(first_order, second_order);
    let r2 = rel(split, 2.0 * second_order);
    Ok(ActionReport {
        first_order,
        second_order,
        split,
        rel_first_vs_second: r1,
        rel_split_vs_twice: r2,
        pass: r1 < tol && r2 < tol,
    })
}

/// Sign assignment (s₁, s₂, s₃) for (c₁, c₂, f) = (s₁√2, s₂/√2, −s₃) and its Δ-test outcome.
#[derive(Clone, Debug, Serialize)]
pub struct SignProbe {
    pub signs: [i8; 3],
    pub delta_defect: f64,
    pub involution_defect: f64,
    pub pass: bool,
}

/// Flips the signs of c₁, c₂ and f in D̃ and reports which choices still give
/// a k-independent involutive channel matrix.
pub fn sign_flip_probe(dirs: &[[f64; 4]]) -> Result<Vec<SignProbe>> {
    let sig = standard_sigma::<f64>();
    let dom = twisted_domain_gram::<f64>().matrix;
    let cod = twisted_codomain_gram(&sig).matrix;
    let mut out = Vec::new();
    for bits in 0..8u8 {
        let signs: [i8; 3] = std::array::from_fn(|b| if bits & (1 << b) != 0 { -1 } else { 1 });
        let mut c = CoefficientSet::<f64>::twisted();
        c.c[0] *= signs[0] as f64;
        c.c[1] *= signs[1] as f64;
        c.f *= signs[2] as f64;
        let cp = adjoint_from_inner(&c, &InnerProductSet::plebanski())?;
        let fam = family_stencils_generic(&sig, &c, &cp);
        let p = pleb_ops_generic(&sig);
        let op = TwistedBlockOperator {
            s_to_tm: fam.d1_star,
            e_to_tm: fam.d4,
            s_to_el1: p.d2,
            e_to_el1: fam.d3_star,
        };
        let dm = delta_multiple(&op.stencil(), &dom, &cod, dirs)?;
        let pass = dm.defect < 1e-10 && dm.involution_defect < 1e-10;
        out.push(SignProbe {
            signs,
            delta_defect: dm.defect,
            involution_defect: dm.involution_defect,
            pass,
        });
    }
    Ok(out)
}

/// (d̃₁* − ...) rewriting residuals: ‖d₁* − Φd₂ − √2d̃₁*‖ and ‖d₁ − d₂*Φ* − √2d̃₁‖.
pub fn rewriting_residuals<T: Scalar + Serialize>(sig: &Tri<T>) -> (f64, f64) {
    let p = pleb_ops_generic(sig);
    let t = tilde_ops_generic(sig);
    let s = T::sqrt2();
    let r1 = p
        .d1_star
        .sub(&p.d2.left_mul(&phi_matrix(sig)))
        .sub(&t.d1_star.scale(&s))
        .max_abs();
    let r2 =
        p.d1.sub(&p.d2_star.right_mul(&phi_star_matrix(sig)))
            .sub(&t.d1.scale(&s))
            .max_abs();
    (r1, r2)
}

/// Components of σ ∈ S with only h̃ set from basis coefficients.
pub fn htilde_element<T: Scalar>(coeffs: &[T]) -> Vec<T> {
    let basis = htilde_basis::<T>();
    let mut ht: Sq<T> = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    for (c, b) in coeffs.iter().zip(basis.iter()) {
        for m in 0..4 {
            for n in 0..4 {
                ht[m][n] += c.clone() * b[m][n].clone();
            }
        }
    }
    s_to_coords(T::zero(), std::array::from_fn(|_| T::zero()), &ht)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{xi_one_form, DIM_S};
    use crate::lattice::random_field;
    use crate::scalar::{One, Zero};
    use crate::sigma_core::standard_triple;
    use crate::symbolcheck::sample_directions;

    type Q = QSqrt2;

    #[test]
    fn phi_identities_exact() {
        let sig = standard_sigma::<Q>();
        let phi = phi_matrix(&sig);
        let star = phi_star_matrix(&sig);
        let j = j1_matrix(&sig);
        assert!((&(&phi * &j) - &phi.scale(&Q::int(2))).is_zero());
        let id = Mat::<Q>::identity(DIM_EL1);
        assert!((&(&star * &phi) + &(&id + &j).scale(&Q::ratio(1, 2))).is_zero());
        // Φ* is the adjoint of Φ for diag(I₄) and −J₁.
        let g = gram_el1(Q::zero(), Q::one(), &sig).matrix;
        let adj = &g.inverse().unwrap() * &phi.transpose();
        assert_eq!(adj, star);
    }

    #[test]
    fn phi_on_four_channel() {
        let t = standard_triple();
        let xi = [0.3, -1.2, 0.5, 2.0];
        let a = xi_one_form(&t, &xi);
        let p = phi_apply(&t, &a);
        for m in 0..4 {
            assert!((p[m] - 3.0 * xi[m]).abs() < 1e-14);
        }
        let mx = t.mixed();
        let b = EOneForm {
            a: std::array::from_fn(|i| {
                std::array::from_fn(|m| (0..4).map(|al| mx[i][m][al] * xi[al]).sum())
            }),
        };
        let q = phi_apply(&t, &b);
        for m in 0..4 {
            assert!((q[m] + 3.0 * xi[m]).abs() < 1e-14);
        }
        assert_eq!(phi_apply(&t, &EOneForm::zero()), [0.0; 4]);
    }

    #[test]
    fn tilde_ops_match_display() {
        let sig = standard_sigma::<Q>();
        assert_eq!(tilde_ops_generic(&sig), tilde_ops_displayed(&sig));
    }

    #[test]
    fn rewriting_identities_exact() {
        assert_eq!(rewriting_residuals(&standard_sigma::<Q>()), (0.0, 0.0));
    }

    #[test]
    fn tilde_adjoints_exact() {
        let sig = standard_sigma::<Q>();
        let t = tilde_ops_generic(&sig);
        let gs = gram_s(Q::ratio(1, 4), Q::int(8), Q::one()).matrix;
        let ga = gram_el1(Q::zero(), Q::one(), &sig).matrix;
        let i3 = Mat::<Q>::identity(3);
        let i4 = Mat::<Q>::identity(4);
        assert_eq!(t.d1.adjoint(&i4, &gs).unwrap(), t.d1_star);
        assert_eq!(t.d3.adjoint(&ga, &i3).unwrap(), t.d3_star);
        assert_eq!(t.d4.adjoint(&i3, &i4).unwrap(), t.d4_star);
        let chi_sq = t.d4_star.compose(&t.d4).add(&t.d3.compose(&t.d3_star));
        assert!(chi_sq.is_zero());
    }

    #[test]
    fn d_tilde_two_forms_agree() {
        let sig = standard_sigma::<Q>();
        assert_eq!(d_tilde_generic(&sig), d_tilde_from_plebanski(&sig));
    }

    #[test]
    fn d_tilde_square_is_mixing_laplacian() {
        let sig = standard_sigma::<Q>();
        assert_eq!(d_tilde_square(&sig).unwrap(), mixing_stencil::<Q>());
        let m = mixing_matrix::<Q>();
        assert_eq!(&m * &m, Mat::identity(DIM_TWISTED));
    }

    #[test]
    fn adjoint_block_structure() {
        let sig = standard_sigma::<Q>();
        let d = d_tilde_generic(&sig).stencil();
        let star = d
            .adjoint(
                &twisted_domain_gram::<Q>().matrix,
                &twisted_codomain_gram(&sig).matrix,
            )
            .unwrap();
        let t = tilde_ops_generic(&sig);
        let p = pleb_ops_generic(&sig);
        let expected = OperatorStencil::block(&[vec![&t.d1, &p.d2_star], vec![&t.d4_star, &t.d3]]);
        assert_eq!(star, expected);
    }

    #[test]
    fn mixed_block_carries_f_condition() {
        let sig = standard_sigma::<f64>();
        let mut c = CoefficientSet::<f64>::twisted();
        c.f = 0.0;
        let cp = adjoint_from_inner(&c, &InnerProductSet::plebanski()).unwrap();
        let fc = crate::coefficient_lab::f_condition(&cp, &c);
        assert!((fc + std::f64::consts::SQRT_2).abs() < 1e-15);
        let fam = family_stencils_generic(&sig, &c, &cp);
        let p = pleb_ops_generic(&sig);
        let op = TwistedBlockOperator {
            s_to_tm: fam.d1_star,
            e_to_tm: fam.d4,
            s_to_el1: p.d2,
            e_to_el1: fam.d3_star,
        }
        .stencil();
        let star = op
            .adjoint(
                &twisted_domain_gram::<f64>().matrix,
                &twisted_codomain_gram(&sig).matrix,
            )
            .unwrap();
        let (_, p32) = crate::coefficient_lab::predicted_compositions(&sig, &[0.0; 3], &[0.0, fc]);
        for k in sample_directions(5, 3) {
            let sq = symbol_square(
                &op,
                None,
                &twisted_domain_gram::<f64>().matrix,
                &twisted_codomain_gram(&sig).matrix,
                &k,
            )
            .unwrap();
            let direct = &star.symbol(&k) * &op.symbol(&k);
            assert!((&sq - &direct).max_abs() < 1e-12);
            let pred = p32.symbol(&k);
            for i in 0..3 {
                for a in 4..DIM_S {
                    assert!((sq[(13 + i, a)] - pred[(i, a)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transforms() {
        let r = transform_report_generic(&standard_sigma::<Q>());
        assert_eq!(r.t1_round_trip, 0.0);
        assert_eq!(r.t2_round_trip, 0.0);
        assert_eq!(r.congruence, 0.0);
        assert_eq!(r.t1_gram, 0.0);
        assert_eq!(r.t1_cross, 0.0);
        assert!(r.displayed_inverse_defect > 0.1);
    }

    #[test]
    fn t2_on_pure_xi() {
        let sig = standard_sigma::<f64>();
        let t = t2(&sig);
        let mut v = vec![0.0; DIM_TWISTED];
        v[..4].copy_from_slice(&[0.5, -1.0, 2.0, 0.25]);
        let w = t.matrix.apply(&v);
        assert_eq!(&w[..4], &v[..4]);
        let expect = phi_star_matrix(&sig)
            .scale(&-std::f64::consts::SQRT_2)
            .apply(&v[..4]);
        for (a, b) in w[4..].iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn split_exact() {
        let r = split_check_exact().unwrap();
        assert_eq!(r.off_diagonal, [0.0, 0.0]);
        assert!(r.pass && r.exact);
    }

    #[test]
    fn delta_multiple_directions() {
        let sig = standard_sigma::<f64>();
        let d = build_d_tilde(&standard_triple()).stencil();
        let dm = delta_multiple(
            &d,
            &twisted_domain_gram::<f64>().matrix,
            &twisted_codomain_gram(&sig).matrix,
            &sample_directions(100, 4),
        )
        .unwrap();
        assert!(dm.defect < 1e-12);
        assert!(dm.involution_defect < 1e-12);
        let m = mixing_matrix::<f64>();
        for a in 0..DIM_TWISTED {
            for b in 0..DIM_TWISTED {
                assert!((dm.m[a][b] + m[(a, b)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn naive_operator_not_laplacian() {
        let sig = standard_sigma::<f64>();
        let d = build_naive_d(&standard_triple()).stencil();
        let dm = delta_multiple(
            &d,
            &twisted_domain_gram::<f64>().matrix,
            &twisted_codomain_gram(&sig).matrix,
            &sample_directions(50, 5),
        )
        .unwrap();
        assert!(dm.defect > 0.1);
    }

    #[test]
    fn action_identities_random_field() {
        let u = random_field(DIM_TWISTED, 8, 11).unwrap();
        let r = action_identities(&standard_triple(), &u, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn action_h_only() {
        let u = random_field(DIM_TWISTED, 8, 12).unwrap();
        let mut m = Mat::<f64>::zeros(DIM_TWISTED, DIM_TWISTED);
        m[(0, 0)] = 1.0;
        let h = u.map_fiber(&m).unwrap();
        let r = action_identities(&standard_triple(), &h, 1e-10).unwrap();
        let grad = apply_stencil(
            &gradient_stencil(DIM_TWISTED, &standard_triple().frame().e_inv),
            &h,
        )
        .unwrap();
        let dh2 = inner(&grad, &grad, &GramForm::identity(4 * DIM_TWISTED)).unwrap();
        assert!((r.second_order + dh2 / 8.0).abs() < 1e-10 * dh2);
        assert!(r.pass);
    }

    #[test]
    fn sign_probe_contains_the_exhibited_choice() {
        let p = sign_flip_probe(&sample_directions(20, 6)).unwrap();
        assert!(p[0].pass);
    }

    #[test]
    fn htilde_element_roundtrip() {
        let v = htilde_element(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(v.len(), DIM_S);
        assert_eq!(v[4], 1.0);
        assert!((v[12] - 2.0).abs() < 1e-15);
    }
}
