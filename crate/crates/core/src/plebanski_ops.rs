//! The Plebański complex TM → S → E⊗Λ¹ → E, its adjoints, d₂*d₂ and the
//! linearized Einstein residual.
//!
//! Symbols are written for the frame components of Σ (so indices are raised
//! with δ) over any [`Scalar`]; [`pleb_ops`] turns them into coordinate
//! stencils for an arbitrary triple and [`pleb_ops_exact`] keeps them exact
//! for the standard triple.

use serde::Serialize;

use crate::error::Result;
use crate::forms::{
    decompose_generic, gram_e, gram_el1, gram_s, gram_tm, j1_matrix, s_embed_generic,
    s_from_coords, s_to_coords, sq_zero, stf, two_form_coords, GramForm, Sq, DIM_E, DIM_EL1,
    DIM_EL2, DIM_S, DIM_TM,
};
use crate::lattice::{apply_second_order, apply_stencil, LatticeField};
use crate::mat::Mat;
use crate::scalar::{QSqrt2, Scalar};
use crate::sigma_core::{eps3, eps4, standard_sigma, PerfectTriple, Tri};
use crate::stencil::{OperatorStencil, SecondOrderStencil};

/// Σⁱ_{μν} k_μ ξ_ν.
pub(crate) fn sig_kx<T: Scalar>(sig: &Tri<T>, i: usize, k: &[T; 4], x: &[T]) -> T {
    let mut acc = T::zero();
    for m in 0..4 {
        if k[m].is_zero() {
            continue;
        }
        for n in 0..4 {
            let s = sig.at(i, m, n);
            if !s.is_zero() && !x[n].is_zero() {
                acc += s.clone() * k[m].clone() * x[n].clone();
            }
        }
    }
    acc
}

/// (Σⁱ k)_μ = Σⁱ_{μν} k_ν.
pub(crate) fn sig_k<T: Scalar>(sig: &Tri<T>, i: usize, k: &[T; 4]) -> [T; 4] {
    std::array::from_fn(|m| {
        let mut acc = T::zero();
        for n in 0..4 {
            let s = sig.at(i, m, n);
            if !s.is_zero() && !k[n].is_zero() {
                acc += s.clone() * k[n].clone();
            }
        }
        acc
    })
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x.clone() * y.clone();
        }
    }
    acc
}

pub(crate) fn outer<T: Scalar>(a: &[T; 4], b: &[T]) -> Sq<T> {
    std::array::from_fn(|m| std::array::from_fn(|n| a[m].clone() * b[n].clone()))
}

pub(crate) fn sq_vec<T: Scalar>(t: &Sq<T>, k: &[T; 4]) -> [T; 4] {
    std::array::from_fn(|m| dot(&t[m], k))
}

/// εⁱʲᵏ Σʲ_{μν} k_μ aᵏ_ν for a in E⊗Λ¹ coordinates.
pub(crate) fn eps_sig_ka<T: Scalar>(sig: &Tri<T>, k: &[T; 4], a: &[T]) -> [T; 3] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for j in 0..3 {
            for kk in 0..3 {
                let e = eps3(i, j, kk);
                if e != 0 {
                    acc += T::int(e) * sig_kx(sig, j, k, &a[4 * kk..4 * kk + 4]);
                }
            }
        }
        acc
    })
}

/// d₁ξ = (∂^μξ_μ, (1/4)Σⁱ^{μν}∂_μξ_ν, ∂_⟨μξ_ν⟩).
pub fn d1_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], xi: &[T]) -> Vec<T> {
    let hv = std::array::from_fn(|i| sig_kx(sig, i, k, xi) * T::ratio(1, 4));
    s_to_coords(dot(k, xi), hv, &stf(&outer(k, xi)))
}

/// d₂σ = (1/4)Σⁱ_μ{}^ν∂_νh + 2∂_μhⁱ − Σⁱ^{αβ}∂_αh̃_{μβ}.
pub fn d2_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], x: &[T]) -> Vec<T> {
    let (h, hv, ht) = s_from_coords(x);
    let mut out = vec![T::zero(); DIM_EL1];
    for i in 0..3 {
        let sk = sig_k(sig, i, k);
        for m in 0..4 {
            let mut acc = sk[m].clone() * h.clone() * T::ratio(1, 4)
                + T::int(2) * hv[i].clone() * k[m].clone();
            acc -= sig_kx(sig, i, k, &ht[m]);
            out[4 * i + m] = acc;
        }
    }
    out
}

/// d₂ through the defining map: σ ↦ (1/2)J₁⁻¹(ε_μ{}^{αβγ}∂_ασⁱ_{βγ}) with J₁⁻¹ = (J₁ − I)/2.
pub fn d2_map_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], x: &[T]) -> Vec<T> {
    let s = s_embed_generic(sig, x);
    let mut st = vec![T::zero(); DIM_EL1];
    for i in 0..3 {
        for m in 0..4 {
            let mut acc = T::zero();
            for a in 0..4 {
                if k[a].is_zero() {
                    continue;
                }
                for b in 0..4 {
                    for c in 0..4 {
                        let e = eps4(m, a, b, c);
                        if e != 0 && !s[i][b][c].is_zero() {
                            acc += T::int(e) * k[a].clone() * s[i][b][c].clone();
                        }
                    }
                }
            }
            st[4 * i + m] = acc;
        }
    }
    let j = j1_matrix(sig);
    let jinv = (&j - &Mat::identity(DIM_EL1)).scale(&T::ratio(1, 2));
    jinv.apply(&st)
        .into_iter()
        .map(|v| v * T::ratio(1, 2))
        .collect()
}

/// d₃a = εⁱʲᵏΣʲ^{μν}∂_μaᵏ_ν.
pub fn d3_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], a: &[T]) -> Vec<T> {
    eps_sig_ka(sig, k, a).to_vec()
}

/// d₃ from its definition εⁱʲᵏ Σʲ∧daᵏ / v, with (A∧B) = (1/4)ε̃^{αβγδ}A_{αβ}B_{γδ}.
pub fn d3_wedge_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], a: &[T]) -> Vec<T> {
    // (da)ᵏ_{γδ} = k_γ aᵏ_δ − k_δ aᵏ_γ
    let da: Vec<Sq<T>> = (0..3)
        .map(|kk| {
            let ak = &a[4 * kk..4 * kk + 4];
            std::array::from_fn(|g| {
                std::array::from_fn(|d| k[g].clone() * ak[d].clone() - k[d].clone() * ak[g].clone())
            })
        })
        .collect();
    (0..3)
        .map(|i| {
            let mut acc = T::zero();
            for j in 0..3 {
                for kk in 0..3 {
                    let e = eps3(i, j, kk);
                    if e == 0 {
                        continue;
                    }
                    let mut w = T::zero();
                    for al in 0..4 {
                        for be in 0..4 {
                            if sig.at(j, al, be).is_zero() {
                                continue;
                            }
                            for ga in 0..4 {
                                for de in 0..4 {
                                    let p = eps4(al, be, ga, de);
                                    if p != 0 && !da[kk][ga][de].is_zero() {
                                        w += T::int(p)
                                            * sig.at(j, al, be).clone()
                                            * da[kk][ga][de].clone();
                                    }
                                }
                            }
                        }
                    }
                    acc += T::int(e) * w * T::ratio(1, 4);
                }
            }
            acc
        })
        .collect()
}

/// d₁*σ = −(1/4)∂_μh + 2Σⁱ_μ{}^ν∂_νhⁱ − ∂^νh̃_{μν}.
pub fn d1_star_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], x: &[T]) -> Vec<T> {
    let (h, hv, ht) = s_from_coords(x);
    let hk = sq_vec(&ht, k);
    let sks: Vec<[T; 4]> = (0..3).map(|i| sig_k(sig, i, k)).collect();
    (0..4)
        .map(|m| {
            let mut acc = -(k[m].clone() * h.clone() * T::ratio(1, 4)) - hk[m].clone();
            for i in 0..3 {
                acc += T::int(2) * sks[i][m].clone() * hv[i].clone();
            }
            acc
        })
        .collect()
}

/// d₂*a = (−2Σⁱ^{μν}∂_μaⁱ_ν, (1/4)εⁱʲᵏΣʲ^{μν}∂_μaᵏ_ν, Σⁱ_⟨μ{}^α∂_ν⟩aⁱ_α − Σⁱ_⟨μ{}^α∂_αaⁱ_ν⟩).
pub fn d2_star_symbol<T: Scalar>(sig: &Tri<T>, k: &[T; 4], a: &[T]) -> Vec<T> {
    let mut h = T::zero();
    for i in 0..3 {
        h += sig_kx(sig, i, k, &a[4 * i..4 * i + 4]);
    }
    let hv = eps_sig_ka(sig, k, a).map(|v| v * T::ratio(1, 4));
    let mut t = sq_zero::<T>();
    for i in 0..3 {
        let ai = &a[4 * i..4 * i + 4];
        let sk = sig_k(sig, i, k);
        for m in 0..4 {
            let sa = dot(
                &(0..4).map(|n| sig.at(i, m, n).clone()).collect::<Vec<_>>(),
                ai,
            );
            for n in 0..4 {
                t[m][n] += sa.clone() * k[n].clone() - sk[m].clone() * ai[n].clone();
            }
        }
    }
    s_to_coords(h * T::int(-2), hv, &stf(&t))
}

/// d₃*χ = ∂_μχⁱ.
pub fn d3_star_symbol<T: Scalar>(k: &[T; 4], chi: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(DIM_EL1);
    for c in chi.iter().take(3) {
        for km in k {
            out.push(c.clone() * km.clone());
        }
    }
    out
}

/// Symbol of d₂*d₂: ((3/2)∂²h − 2∂^μ∂^νh̃_{μν}, 0, −(1/2)∂_⟨μ∂_ν⟩h + 2∂_⟨μ∂^ρh̃_{ν⟩ρ} − ∂²h̃_{μν}).
pub fn d2star_d2_formula_symbol<T: Scalar>(k: &[T; 4], x: &[T]) -> Vec<T> {
    let (h, _, ht) = s_from_coords(x);
    let k2 = dot(k, k);
    let hk = sq_vec(&ht, k);
    let khk = dot(k, &hk);
    let top = T::ratio(3, 2) * k2.clone() * h.clone() - T::int(2) * khk;
    let a = stf(&outer(k, k));
    let b = stf(&outer(k, &hk));
    let t: Sq<T> = std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            -(T::ratio(1, 2) * a[m][n].clone() * h.clone()) + T::int(2) * b[m][n].clone()
                - k2.clone() * ht[m][n].clone()
        })
    });
    s_to_coords(top, std::array::from_fn(|_| T::zero()), &t)
}

/// Exterior derivative E⊗Λ¹ → E⊗Λ²: (da)ⁱ_{μν} = ∂_μaⁱ_ν − ∂_νaⁱ_μ.
pub fn exterior_d_symbol<T: Scalar>(k: &[T; 4], a: &[T]) -> Vec<T> {
    let full: Vec<Sq<T>> = (0..3)
        .map(|i| {
            let ai = &a[4 * i..4 * i + 4];
            std::array::from_fn(|m| {
                std::array::from_fn(|n| k[m].clone() * ai[n].clone() - k[n].clone() * ai[m].clone())
            })
        })
        .collect();
    two_form_coords(&full)
}

/// The three operators of the complex and their adjoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlebanskiOps<T: Scalar + Serialize> {
    pub d1: OperatorStencil<T>,
    pub d2: OperatorStencil<T>,
    pub d3: OperatorStencil<T>,
    pub d1_star: OperatorStencil<T>,
    pub d2_star: OperatorStencil<T>,
    pub d3_star: OperatorStencil<T>,
}

/// Builds all six stencils from frame components of Σ.
pub fn pleb_ops_generic<T: Scalar + Serialize>(sig: &Tri<T>) -> PlebanskiOps<T> {
    PlebanskiOps {
        d1: OperatorStencil::from_symbol(DIM_S, DIM_TM, |k, u| d1_symbol(sig, k, u)),
        d2: OperatorStencil::from_symbol(DIM_EL1, DIM_S, |k, u| d2_symbol(sig, k, u)),
        d3: OperatorStencil::from_symbol(DIM_E, DIM_EL1, |k, u| d3_symbol(sig, k, u)),
        d1_star: OperatorStencil::from_symbol(DIM_TM, DIM_S, |k, u| d1_star_symbol(sig, k, u)),
        d2_star: OperatorStencil::from_symbol(DIM_S, DIM_EL1, |k, u| d2_star_symbol(sig, k, u)),
        d3_star: OperatorStencil::from_symbol(DIM_EL1, DIM_E, |k, u| d3_star_symbol(k, u)),
    }
}

/// Exact stencils for the standard triple.
pub fn pleb_ops_exact() -> PlebanskiOps<QSqrt2> {
    pleb_ops_generic(&standard_sigma())
}

/// Stencils for an arbitrary triple. Fibers carry orthonormal-frame
/// components; derivatives are coordinate derivatives.
pub fn pleb_ops(triple: &PerfectTriple) -> PlebanskiOps<f64> {
    let frame = triple.frame();
    let ops = pleb_ops_generic(&frame.sigma);
    let c = |s: OperatorStencil<f64>| s.in_coordinates(&frame.e_inv);
    PlebanskiOps {
        d1: c(ops.d1),
        d2: c(ops.d2),
        d3: c(ops.d3),
        d1_star: c(ops.d1_star),
        d2_star: c(ops.d2_star),
        d3_star: c(ops.d3_star),
    }
}

pub fn build_d1(triple: &PerfectTriple) -> OperatorStencil<f64> {
    pleb_ops(triple).d1
}

pub fn build_d2(triple: &PerfectTriple) -> OperatorStencil<f64> {
    pleb_ops(triple).d2
}

pub fn build_d3(triple: &PerfectTriple) -> OperatorStencil<f64> {
    pleb_ops(triple).d3
}

/// (d₁*, d₂*, d₃*) of the operator table paired with [`pleb_grams`].
pub fn build_adjoints_pleb(
    triple: &PerfectTriple,
) -> (
    OperatorStencil<f64>,
    OperatorStencil<f64>,
    OperatorStencil<f64>,
) {
    let o = pleb_ops(triple);
    (o.d1_star, o.d2_star, o.d3_star)
}

/// Fiber Grams on (TM, S, E⊗Λ¹, E).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrams<T> {
    pub tm: GramForm<T>,
    pub s: GramForm<T>,
    pub el1: GramForm<T>,
    pub e: GramForm<T>,
}

impl<T: Scalar> ComplexGrams<T> {
    pub fn to_f64(&self) -> ComplexGrams<f64> {
        ComplexGrams {
            tm: self.tm.to_f64(),
            s: self.s.to_f64(),
            el1: self.el1.to_f64(),
            e: self.e.to_f64(),
        }
    }
}

/// The inner products paired with the Plebański table: β = (1/4, 8, 1), γ = (0, 1).
pub fn pleb_grams<T: Scalar>(sig: &Tri<T>) -> ComplexGrams<T> {
    ComplexGrams {
        tm: gram_tm(),
        s: gram_s(T::ratio(1, 4), T::int(8), T::one()),
        el1: gram_el1(T::zero(), T::one(), sig),
        e: gram_e(),
    }
}

/// The inner products under which D*D is a Laplacian multiple: β = (1/4, 8, 1), γ = (1, 0).
pub fn inner_prod_1_grams<T: Scalar>(sig: &Tri<T>) -> ComplexGrams<T> {
    ComplexGrams {
        tm: gram_tm(),
        s: gram_s(T::ratio(1, 4), T::int(8), T::one()),
        el1: gram_el1(T::one(), T::zero(), sig),
        e: gram_e(),
    }
}

/// Adjoints of (d₁, d₂, d₃) computed from the stencils and a set of Grams.
pub fn adjoints_from_grams<T: Scalar + Serialize>(
    ops: &PlebanskiOps<T>,
    g: &ComplexGrams<T>,
) -> Result<(OperatorStencil<T>, OperatorStencil<T>, OperatorStencil<T>)> {
    Ok((
        ops.d1.adjoint(&g.tm.matrix, &g.s.matrix)?,
        ops.d2.adjoint(&g.s.matrix, &g.el1.matrix)?,
        ops.d3.adjoint(&g.el1.matrix, &g.e.matrix)?,
    ))
}

/// The alternative adjoint table written with the untraced h_{μν}:
/// d₂*a = (−(1/4)∂^μaⁱ_μ, −Σⁱ_(μ{}^α∂_αaⁱ_ν)) and d₃*χ = −εⁱʲᵏΣʲ_μ{}^α∂_αχᵏ,
/// mapped into (h, hⁱ, h̃) coordinates by h = tr, h̃ = trace-free part.
pub fn untraced_adjoints<T: Scalar + Serialize>(
    sig: &Tri<T>,
) -> (OperatorStencil<T>, OperatorStencil<T>) {
    let d2s = OperatorStencil::from_symbol(DIM_S, DIM_EL1, |k, a| {
        let hv: [T; 3] =
            std::array::from_fn(|i| -(dot::<T>(&k[..], &a[4 * i..4 * i + 4]) * T::ratio(1, 4)));
        let mut x = sq_zero::<T>();
        for i in 0..3 {
            let sk = sig_k(sig, i, k);
            for m in 0..4 {
                for n in 0..4 {
                    // −Σⁱ_(μ^α k_α aⁱ_ν)
                    let v = (sk[m].clone() * a[4 * i + n].clone()
                        + sk[n].clone() * a[4 * i + m].clone())
                        * T::ratio(1, 2);
                    x[m][n] -= v;
                }
            }
        }
        let mut tr = T::zero();
        for (m, row) in x.iter().enumerate() {
            tr += row[m].clone();
        }
        s_to_coords(tr, hv, &stf(&x))
    });
    let d3s = OperatorStencil::from_symbol(DIM_EL1, DIM_E, |k, chi| {
        let mut out = vec![T::zero(); DIM_EL1];
        for i in 0..3 {
            for j in 0..3 {
                for kk in 0..3 {
                    let e = eps3(i, j, kk);
                    if e == 0 {
                        continue;
                    }
                    let sk = sig_k(sig, j, k);
                    for m in 0..4 {
                        out[4 * i + m] -= T::int(e) * sk[m].clone() * chi[kk].clone();
                    }
                }
            }
        }
        out
    });
    (d2s, d3s)
}

/// d₂*∘d₂ as a second-order stencil, and the closed form it should equal.
pub fn d2star_d2_stencils<T: Scalar + Serialize>(
    sig: &Tri<T>,
) -> (SecondOrderStencil<T>, SecondOrderStencil<T>) {
    let ops = pleb_ops_generic(sig);
    let composed = ops.d2_star.compose(&ops.d2);
    let formula =
        SecondOrderStencil::from_symbol(DIM_S, DIM_S, |k, x| d2star_d2_formula_symbol(k, x));
    (composed, formula)
}

/// d₂*d₂σ on a lattice S-field, by composing the first-order stencils.
pub fn d2star_d2(triple: &PerfectTriple, s: &LatticeField) -> Result<LatticeField> {
    let ops = pleb_ops(triple);
    apply_stencil(&ops.d2_star, &apply_stencil(&ops.d2, s)?)
}

/// The closed form of d₂*d₂ applied directly on the lattice (standard frame).
pub fn d2star_d2_formula(triple: &PerfectTriple, s: &LatticeField) -> Result<LatticeField> {
    let frame = triple.frame();
    let mut f = SecondOrderStencil::from_symbol(DIM_S, DIM_S, |k: &[f64; 4], x: &[f64]| {
        d2star_d2_formula_symbol(k, x)
    });
    if !triple.is_standard() {
        f = second_order_in_coordinates(&f, &frame.e_inv);
    }
    apply_second_order(&f, s)
}

fn second_order_in_coordinates(
    s: &SecondOrderStencil<f64>,
    e_inv: &[[f64; 4]; 4],
) -> SecondOrderStencil<f64> {
    let mut out = SecondOrderStencil::zeros(s.out_dim, s.in_dim);
    for o in 0..s.out_dim {
        for i in 0..s.in_dim {
            for a in 0..4 {
                for b in 0..4 {
                    let c = *s.get(o, a, b, i);
                    if c == 0.0 {
                        continue;
                    }
                    for mu in 0..4 {
                        for nu in 0..4 {
                            out.add_at(o, mu, nu, i, c * e_inv[mu][a] * e_inv[nu][b]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Channels of (da)ⁱ for a lattice E⊗Λ¹ field.
#[derive(Clone, Debug)]
pub struct EinsteinResidual {
    /// The S₊⁴ channel ψⁱʲ (symmetric tracefree 3×3, 9 components row-major).
    pub psi: LatticeField,
    /// The 3-dimensional channel εⁱʲᵏ(da)ʲ·Σᵏ.
    pub s2: LatticeField,
    /// The scalar channel (da)ⁱ·Σⁱ.
    pub s0: LatticeField,
    /// The 9-dimensional anti-self-dual channel, as an 18-component 2-form field.
    pub s9: LatticeField,
}

#[derive(Clone, Debug, Serialize)]
pub struct EinsteinNorms {
    pub psi: f64,
    pub s2: f64,
    pub s0: f64,
    pub s9: f64,
}

impl EinsteinResidual {
    pub fn norms(&self) -> EinsteinNorms {
        EinsteinNorms {
            psi: self.psi.max_abs(),
            s2: self.s2.max_abs(),
            s0: self.s0.max_abs(),
            s9: self.s9.max_abs(),
        }
    }

    /// Whether the 1, 3 and 9 channels vanish to `tol`.
    pub fn is_linearized_einstein(&self, tol: f64) -> bool {
        let n = self.norms();
        n.s0 <= tol && n.s2 <= tol && n.s9 <= tol
    }
}

/// Computes (da)ⁱ_{μν} = ∂_μaⁱ_ν − ∂_νaⁱ_μ and splits it into its channels.
pub fn einstein_residual(triple: &PerfectTriple, a: &LatticeField) -> Result<EinsteinResidual> {
    let frame = triple.frame();
    let d = OperatorStencil::from_symbol(DIM_EL2, DIM_EL1, |k: &[f64; 4], u: &[f64]| {
        exterior_d_symbol(k, u)
    })
    .in_coordinates(&frame.e_inv);
    let da = apply_stencil(&d, a)?;
    let sites = da.sites();
    let (mut psi, mut s2, mut s0, mut s9) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for s in 0..sites {
        let full = crate::forms::two_form_full(da.at(s));
        let ch = decompose_generic(&frame.sigma, &full);
        psi.extend(ch.s4.iter().flatten());
        s2.extend(ch.s2.iter());
        s0.push(ch.s0);
        s9.extend(two_form_coords(&ch.s9));
    }
    let mk = |fiber: usize, data: Vec<f64>| LatticeField {
        n: a.n,
        fiber,
        data,
        band_limit: a.band_limit,
    };
    Ok(EinsteinResidual {
        psi: mk(9, psi),
        s2: mk(3, s2),
        s0: mk(1, s0),
        s9: mk(DIM_EL2, s9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Zero;

    #[test]
    fn compositions_vanish_exactly() {
        let o = pleb_ops_exact();
        assert!(o.d2.compose(&o.d1).is_zero());
        assert!(o.d3.compose(&o.d2).is_zero());
        assert!(o.d1_star.compose(&o.d2_star).is_zero());
        assert!(o.d2_star.compose(&o.d3_star).is_zero());
    }

    #[test]
    fn table_adjoints_match_pleb_grams() {
        let sig = standard_sigma::<QSqrt2>();
        let o = pleb_ops_generic(&sig);
        let (a1, a2, a3) = adjoints_from_grams(&o, &pleb_grams(&sig)).unwrap();
        assert_eq!(a1, o.d1_star);
        assert_eq!(a2, o.d2_star);
        assert_eq!(a3, o.d3_star);
    }

    #[test]
    fn untraced_table_matches_inner_prod_1() {
        let sig = standard_sigma::<QSqrt2>();
        let o = pleb_ops_generic(&sig);
        let (a1, a2, a3) = adjoints_from_grams(&o, &inner_prod_1_grams(&sig)).unwrap();
        let (u2, u3) = untraced_adjoints(&sig);
        assert_eq!(a1, o.d1_star);
        assert_eq!(a2, u2);
        assert_eq!(a3, u3);
    }

    #[test]
    fn two_paths_for_d2() {
        let sig = standard_sigma::<QSqrt2>();
        let a = OperatorStencil::from_symbol(DIM_EL1, DIM_S, |k, u| d2_symbol(&sig, k, u));
        let b = OperatorStencil::from_symbol(DIM_EL1, DIM_S, |k, u| d2_map_symbol(&sig, k, u));
        assert_eq!(a, b);
    }

    #[test]
    fn d3_matches_wedge_definition() {
        let sig = standard_sigma::<QSqrt2>();
        let a = OperatorStencil::from_symbol(DIM_E, DIM_EL1, |k, u| d3_symbol(&sig, k, u));
        let b = OperatorStencil::from_symbol(DIM_E, DIM_EL1, |k, u| d3_wedge_symbol(&sig, k, u));
        assert_eq!(a, b);
    }

    #[test]
    fn d2star_d2_closed_form_exact() {
        let (c, f) = d2star_d2_stencils(&standard_sigma::<QSqrt2>());
        assert_eq!(c, f);
        for o in 1..4 {
            for v in &c.c[o * 16 * DIM_S..(o + 1) * 16 * DIM_S] {
                assert!(v.is_zero());
            }
        }
    }

    #[test]
    fn d3_star_is_gradient() {
        let o = pleb_ops_exact();
        for i in 0..3 {
            for m in 0..4 {
                for c in 0..3 {
                    let want = if c == i {
                        QSqrt2::int(1)
                    } else {
                        QSqrt2::zero()
                    };
                    for mu in 0..4 {
                        let v = o.d3_star.get(4 * i + m, mu, c);
                        assert_eq!(
                            *v,
                            if mu == m {
                                want.clone()
                            } else {
                                QSqrt2::zero()
                            }
                        );
                    }
                }
            }
        }
    }
}
