//! The general first-order family d₁(a), d₂(b), d₃(c), d̃₄(f), its adjoint
//! family, composition constraints, Δ-conditions and the solvers that fix the
//! coefficients and inner products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlebError, Result};
use crate::forms::{
    gram_e, gram_el1, gram_s, gram_tm, s_from_coords, s_to_coords, sq_zero, stf, Sq, DIM_E,
    DIM_EL1, DIM_S, DIM_TM,
};
use crate::lattice::adjoint_pair_check;
use crate::plebanski_ops::{dot, eps_sig_ka, outer, sig_k, sig_kx, sq_vec, ComplexGrams};
use crate::scalar::{QSqrt2, Scalar, Zero};
use crate::sigma_core::{eps3, standard_sigma, PerfectTriple, Tri};
use crate::stencil::{OperatorStencil, SecondOrderStencil};

/// Coefficients of d₁(a), d₂(b), d₃(c) and d̃₄(f).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet<T = QSqrt2> {
    pub a: [T; 3],
    pub b: [T; 5],
    pub c: [T; 2],
    pub f: T,
}

/// Coefficients of the adjoint family d₁*(a′), d₂*(b′), d₃*(c′), d̃₄*(f′).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjointCoefficientSet<T = QSqrt2> {
    pub ap: [T; 3],
    pub bp: [T; 5],
    pub cp: [T; 2],
    pub fp: T,
}

/// Gram parameters: ⟨σ,σ⟩ = β₁h² + β₂(hⁱ)² + β₃(h̃)², ⟨a,a⟩ = γ₁a² − γ₂ aJ₁a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerProductSet<T = QSqrt2> {
    pub beta1: T,
    pub beta2: T,
    pub beta3: T,
    pub gamma1: T,
    pub gamma2: T,
}

fn r<T: Scalar>(n: i64, d: i64) -> T {
    T::ratio(n, d)
}

fn map_arr<T: Scalar, const N: usize>(x: &[T; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i].to_f64())
}

impl<T: Scalar> CoefficientSet<T> {
    pub fn zero() -> Self {
        CoefficientSet {
            a: std::array::from_fn(|_| T::zero()),
            b: std::array::from_fn(|_| T::zero()),
            c: std::array::from_fn(|_| T::zero()),
            f: T::zero(),
        }
    }

    /// a = (1, 1/4, 1/2), b = (1/4, 2, 0, 0, −1), c = (0, 1), f = 0.
    pub fn plebanski() -> Self {
        CoefficientSet {
            a: [T::one(), r(1, 4), r(1, 2)],
            b: [r(1, 4), T::int(2), T::zero(), T::zero(), T::int(-1)],
            c: [T::zero(), T::one()],
            f: T::zero(),
        }
    }

    /// The twisted choice: d̃₁ = d₁(−√2, 0, √2/2), Plebański d₂, d̃₃ = d₃(√2, 1/√2), f = −1.
    pub fn twisted() -> Self {
        let s = T::sqrt2();
        CoefficientSet {
            a: [-s.clone(), T::zero(), s.clone() * r(1, 2)],
            b: Self::plebanski().b,
            c: [s.clone(), s * r(1, 2)],
            f: T::int(-1),
        }
    }

    pub fn to_f64(&self) -> CoefficientSet<f64> {
        CoefficientSet {
            a: map_arr(&self.a),
            b: map_arr(&self.b),
            c: map_arr(&self.c),
            f: self.f.to_f64(),
        }
    }
}

impl<T: Scalar> AdjointCoefficientSet<T> {
    pub fn zero() -> Self {
        AdjointCoefficientSet {
            ap: std::array::from_fn(|_| T::zero()),
            bp: std::array::from_fn(|_| T::zero()),
            cp: std::array::from_fn(|_| T::zero()),
            fp: T::zero(),
        }
    }

    pub fn to_f64(&self) -> AdjointCoefficientSet<f64> {
        AdjointCoefficientSet {
            ap: map_arr(&self.ap),
            bp: map_arr(&self.bp),
            cp: map_arr(&self.cp),
            fp: self.fp.to_f64(),
        }
    }
}

impl<T: Scalar> InnerProductSet<T> {
    /// β = (1/4, 8, 1), γ = (0, 1).
    pub fn plebanski() -> Self {
        InnerProductSet {
            beta1: r(1, 4),
            beta2: T::int(8),
            beta3: T::one(),
            gamma1: T::zero(),
            gamma2: T::one(),
        }
    }

    /// β = (1/4, 8, 1), γ = (1, 0).
    pub fn inner_prod_1() -> Self {
        InnerProductSet {
            beta1: r(1, 4),
            beta2: T::int(8),
            beta3: T::one(),
            gamma1: T::one(),
            gamma2: T::zero(),
        }
    }

    pub fn scaled(&self, s: &T) -> Self {
        InnerProductSet {
            beta1: self.beta1.clone() * s.clone(),
            beta2: self.beta2.clone() * s.clone(),
            beta3: self.beta3.clone() * s.clone(),
            gamma1: self.gamma1.clone() * s.clone(),
            gamma2: self.gamma2.clone() * s.clone(),
        }
    }

    /// Fiber Grams on TM, S, E⊗Λ¹, E.
    pub fn grams(&self, sig: &Tri<T>) -> ComplexGrams<T> {
        ComplexGrams {
            tm: gram_tm(),
            s: gram_s(self.beta1.clone(), self.beta2.clone(), self.beta3.clone()),
            el1: gram_el1(self.gamma1.clone(), self.gamma2.clone(), sig),
            e: gram_e(),
        }
    }

    pub fn to_f64(&self) -> InnerProductSet<f64> {
        InnerProductSet {
            beta1: self.beta1.to_f64(),
            beta2: self.beta2.to_f64(),
            beta3: self.beta3.to_f64(),
            gamma1: self.gamma1.to_f64(),
            gamma2: self.gamma2.to_f64(),
        }
    }
}

/// d₁ξ = (a₁∂^μξ_μ, a₂Σⁱ^{μν}∂_μξ_ν, 2a₃∂_⟨μξ_ν⟩).
pub fn gen_d1_symbol<T: Scalar>(sig: &Tri<T>, a: &[T; 3], k: &[T; 4], xi: &[T]) -> Vec<T> {
    let hv = std::array::from_fn(|i| a[1].clone() * sig_kx(sig, i, k, xi));
    let t = stf(&outer(k, xi));
    let two_a3 = T::int(2) * a[2].clone();
    let t = t.map(|row| row.map(|v| v * two_a3.clone()));
    s_to_coords(a[0].clone() * dot(k, xi), hv, &t)
}

/// d₂σ = b₁Σⁱ_μ{}^α∂_αh + b₂∂_μhⁱ + b₃εⁱʲᵏΣʲ_μ{}^α∂_αhᵏ + b₄Σⁱ_μ{}^α∂^βh̃_{αβ} + b₅Σⁱ^{αβ}∂_αh̃_{μβ}.
pub fn gen_d2_symbol<T: Scalar>(sig: &Tri<T>, b: &[T; 5], k: &[T; 4], x: &[T]) -> Vec<T> {
    let (h, hv, ht) = s_from_coords(x);
    let hk = sq_vec(&ht, k);
    let sks: Vec<[T; 4]> = (0..3).map(|i| sig_k(sig, i, k)).collect();
    let mut out = vec![T::zero(); DIM_EL1];
    for i in 0..3 {
        for m in 0..4 {
            let mut v = b[0].clone() * sks[i][m].clone() * h.clone()
                + b[1].clone() * hv[i].clone() * k[m].clone();
            for j in 0..3 {
                for kk in 0..3 {
                    let e = eps3(i, j, kk);
                    if e != 0 {
                        v += b[2].clone() * T::int(e) * sks[j][m].clone() * hv[kk].clone();
                    }
                }
            }
            for rr in 0..4 {
                v += b[3].clone() * sig.at(i, m, rr).clone() * hk[rr].clone();
                // Σⁱ_{rs}k_r h̃_{ms} = −(h̃Σⁱk)_m
                v -= b[4].clone() * ht[m][rr].clone() * sks[i][rr].clone();
            }
            out[4 * i + m] = v;
        }
    }
    out
}

/// d₃a = c₁∂^μaⁱ_μ + c₂εⁱʲᵏΣʲ^{μν}∂_μaᵏ_ν.
pub fn gen_d3_symbol<T: Scalar>(sig: &Tri<T>, c: &[T; 2], k: &[T; 4], a: &[T]) -> Vec<T> {
    let e = eps_sig_ka(sig, k, a);
    (0..3)
        .map(|i| c[0].clone() * dot(k, &a[4 * i..4 * i + 4]) + c[1].clone() * e[i].clone())
        .collect()
}

/// d̃₄χ = fΣⁱ_μ{}^α∂_αχⁱ.
pub fn gen_d4_symbol<T: Scalar>(sig: &Tri<T>, f: &T, k: &[T; 4], chi: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); DIM_TM];
    for (i, ch) in chi.iter().enumerate().take(3) {
        let sk = sig_k(sig, i, k);
        for m in 0..4 {
            out[m] += f.clone() * sk[m].clone() * ch.clone();
        }
    }
    out
}

/// d₁*σ = a₁′∂_μh + a₂′Σⁱ_μ{}^ν∂_νhⁱ + a₃′∂^νh̃_{μν}.
pub fn gen_d1_star_symbol<T: Scalar>(sig: &Tri<T>, ap: &[T; 3], k: &[T; 4], x: &[T]) -> Vec<T> {
    let (h, hv, ht) = s_from_coords(x);
    let hk = sq_vec(&ht, k);
    let sks: Vec<[T; 4]> = (0..3).map(|i| sig_k(sig, i, k)).collect();
    (0..4)
        .map(|m| {
            let mut v = ap[0].clone() * k[m].clone() * h.clone() + ap[2].clone() * hk[m].clone();
            for i in 0..3 {
                v += ap[1].clone() * sks[i][m].clone() * hv[i].clone();
            }
            v
        })
        .collect()
}

/// d₂*a = (b₁′Σⁱ^{μν}∂_μaⁱ_ν, b₂′∂^μaⁱ_μ + b₃′εⁱʲᵏΣʲ^{μν}∂_μaᵏ_ν,
/// 2b₄′Σⁱ_⟨μ{}^α∂_ν⟩aⁱ_α + 2b₅′Σⁱ_⟨μ{}^α∂_αaⁱ_ν⟩).
pub fn gen_d2_star_symbol<T: Scalar>(sig: &Tri<T>, bp: &[T; 5], k: &[T; 4], a: &[T]) -> Vec<T> {
    let mut h = T::zero();
    for i in 0..3 {
        h += sig_kx(sig, i, k, &a[4 * i..4 * i + 4]);
    }
    let e = eps_sig_ka(sig, k, a);
    let hv: [T; 3] = std::array::from_fn(|i| {
        bp[1].clone() * dot(k, &a[4 * i..4 * i + 4]) + bp[2].clone() * e[i].clone()
    });
    let mut t: Sq<T> = sq_zero();
    let (w4, w5) = (T::int(2) * bp[3].clone(), T::int(2) * bp[4].clone());
    for i in 0..3 {
        let ai = &a[4 * i..4 * i + 4];
        let sk = sig_k(sig, i, k);
        for m in 0..4 {
            let sa = (0..4).fold(T::zero(), |acc, n| {
                acc + sig.at(i, m, n).clone() * ai[n].clone()
            });
            for n in 0..4 {
                t[m][n] += w4.clone() * sa.clone() * k[n].clone()
                    + w5.clone() * sk[m].clone() * ai[n].clone();
            }
        }
    }
    s_to_coords(bp[0].clone() * h, hv, &stf(&t))
}

/// d₃*χ = c₁′∂_μχⁱ + c₂′εⁱʲᵏΣʲ_μ{}^α∂_αχᵏ.
pub fn gen_d3_star_symbol<T: Scalar>(sig: &Tri<T>, cp: &[T; 2], k: &[T; 4], chi: &[T]) -> Vec<T> {
    let sks: Vec<[T; 4]> = (0..3).map(|i| sig_k(sig, i, k)).collect();
    let mut out = vec![T::zero(); DIM_EL1];
    for i in 0..3 {
        for m in 0..4 {
            let mut v = cp[0].clone() * chi[i].clone() * k[m].clone();
            for j in 0..3 {
                for kk in 0..3 {
                    let e = eps3(i, j, kk);
                    if e != 0 {
                        v += cp[1].clone() * T::int(e) * sks[j][m].clone() * chi[kk].clone();
                    }
                }
            }
            out[4 * i + m] = v;
        }
    }
    out
}

/// d̃₄*ξ = f′Σⁱ^{μν}∂_μξ_ν.
pub fn gen_d4_star_symbol<T: Scalar>(sig: &Tri<T>, fp: &T, k: &[T; 4], xi: &[T]) -> Vec<T> {
    (0..3).map(|i| fp.clone() * sig_kx(sig, i, k, xi)).collect()
}

/// The eight stencils of a coefficient set and an adjoint set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyStencils<T: Scalar + Serialize> {
    pub d1: OperatorStencil<T>,
    pub d2: OperatorStencil<T>,
    pub d3: OperatorStencil<T>,
    pub d4: OperatorStencil<T>,
    pub d1_star: OperatorStencil<T>,
    pub d2_star: OperatorStencil<T>,
    pub d3_star: OperatorStencil<T>,
    pub d4_star: OperatorStencil<T>,
}

/// Stencils on frame components of Σ.
pub fn family_stencils_generic<T: Scalar + Serialize>(
    sig: &Tri<T>,
    c: &CoefficientSet<T>,
    cp: &AdjointCoefficientSet<T>,
) -> FamilyStencils<T> {
    FamilyStencils {
        d1: OperatorStencil::from_symbol(DIM_S, DIM_TM, |k, u| gen_d1_symbol(sig, &c.a, k, u)),
        d2: OperatorStencil::from_symbol(DIM_EL1, DIM_S, |k, u| gen_d2_symbol(sig, &c.b, k, u)),
        d3: OperatorStencil::from_symbol(DIM_E, DIM_EL1, |k, u| gen_d3_symbol(sig, &c.c, k, u)),
        d4: OperatorStencil::from_symbol(DIM_TM, DIM_E, |k, u| gen_d4_symbol(sig, &c.f, k, u)),
        d1_star: OperatorStencil::from_symbol(DIM_TM, DIM_S, |k, u| {
            gen_d1_star_symbol(sig, &cp.ap, k, u)
        }),
        d2_star: OperatorStencil::from_symbol(DIM_S, DIM_EL1, |k, u| {
            gen_d2_star_symbol(sig, &cp.bp, k, u)
        }),
        d3_star: OperatorStencil::from_symbol(DIM_EL1, DIM_E, |k, u| {
            gen_d3_star_symbol(sig, &cp.cp, k, u)
        }),
        d4_star: OperatorStencil::from_symbol(DIM_E, DIM_TM, |k, u| {
            gen_d4_star_symbol(sig, &cp.fp, k, u)
        }),
    }
}

/// Coordinate stencils for an arbitrary triple.
pub fn family_stencils(
    triple: &PerfectTriple,
    c: &CoefficientSet,
    cp: &AdjointCoefficientSet,
) -> FamilyStencils<f64> {
    let frame = triple.frame();
    let s = family_stencils_generic(&frame.sigma, &c.to_f64(), &cp.to_f64());
    let t = |o: OperatorStencil<f64>| o.in_coordinates(&frame.e_inv);
    FamilyStencils {
        d1: t(s.d1),
        d2: t(s.d2),
        d3: t(s.d3),
        d4: t(s.d4),
        d1_star: t(s.d1_star),
        d2_star: t(s.d2_star),
        d3_star: t(s.d3_star),
        d4_star: t(s.d4_star),
    }
}

/// Coefficients of d₂d₁ = r₁₀Σⁱ_μ{}^α∂_α∂ξ + r₁₁∂_μ(Σⁱ∂ξ) + r₁₂Σⁱ_μ{}^αΔξ_α and
/// d₃d₂ = r₂₀Δhⁱ + r₂₁Σⁱ^{μα}∂_μ∂^βh̃_{αβ}.
pub fn composition_residuals<T: Scalar>(c: &CoefficientSet<T>) -> ([T; 3], [T; 2]) {
    let [a1, a2, a3] = c.a.clone();
    let [b1, b2, b3, b4, b5] = c.b.clone();
    let [c1, c2] = c.c.clone();
    let half = r::<T>(1, 2);
    let r1 = [
        b1 * a1.clone() + b4.clone() * a3.clone() - b3.clone() * a2.clone()
            + (b5.clone() * a3.clone() - b4.clone() * a3.clone()) * half,
        b2.clone() * a2.clone() + b5.clone() * a3.clone() - b3.clone() * a2.clone(),
        b4.clone() * a3 + b3.clone() * a2,
    ];
    let r2 = [
        c1.clone() * b2 + T::int(2) * c2.clone() * b3,
        c1.clone() * b4.clone() + c1 * b5 + T::int(2) * c2 * b4,
    ];
    (r1, r2)
}

/// The second-order stencils d₂d₁ and d₃d₂ predicted from the residuals.
pub fn predicted_compositions<T: Scalar + Serialize>(
    sig: &Tri<T>,
    r1: &[T; 3],
    r2: &[T; 2],
) -> (SecondOrderStencil<T>, SecondOrderStencil<T>) {
    let p21 = SecondOrderStencil::from_symbol(DIM_EL1, DIM_TM, |k: &[T; 4], xi: &[T]| {
        let k2 = dot(k, k);
        let kx = dot(k, xi);
        let mut out = vec![T::zero(); DIM_EL1];
        for i in 0..3 {
            let sk = sig_k(sig, i, k);
            let skx = sig_kx(sig, i, k, xi);
            for m in 0..4 {
                let sx = (0..4).fold(T::zero(), |acc, n| {
                    acc + sig.at(i, m, n).clone() * xi[n].clone()
                });
                out[4 * i + m] = r1[0].clone() * sk[m].clone() * kx.clone()
                    + r1[1].clone() * skx.clone() * k[m].clone()
                    + r1[2].clone() * k2.clone() * sx;
            }
        }
        out
    });
    let p32 = SecondOrderStencil::from_symbol(DIM_E, DIM_S, |k: &[T; 4], x: &[T]| {
        let (_, hv, ht) = s_from_coords(x);
        let hk = sq_vec(&ht, k);
        let k2 = dot(k, k);
        (0..3)
            .map(|i| {
                r2[0].clone() * k2.clone() * hv[i].clone() + r2[1].clone() * sig_kx(sig, i, k, &hk)
            })
            .collect()
    });
    (p21, p32)
}

/// b₂..b₅ making both compositions vanish, given a, c and b₁.
pub fn solve_b<T: Scalar>(a1: &T, a2: &T, a3: &T, c1: &T, c2: &T, b1: &T) -> Result<[T; 4]> {
    if a2.is_zero() {
        return Err(PlebError::DegenerateFamily("a2 = 0".into()));
    }
    if a3.is_zero() {
        return Err(PlebError::DegenerateFamily("a3 = 0".into()));
    }
    let dc = c1.clone() - c2.clone();
    if dc.is_zero() {
        return Err(PlebError::DegenerateFamily("c1 = c2".into()));
    }
    let x = a1.clone() * b1.clone() / dc;
    Ok([
        T::int(-2) * x.clone() * c2.clone() / a2.clone(),
        x.clone() * c1.clone() / a2.clone(),
        -(x.clone() * c1.clone()) / a3.clone(),
        x * (c1.clone() + T::int(2) * c2.clone()) / a3.clone(),
    ])
}

/// A random element p/q + (r/s)√2 with small integers, never zero when `nonzero`.
fn random_element(rng: &mut ChaCha8Rng, nonzero: bool) -> QSqrt2 {
    loop {
        let p = rng.random_range(-6..=6);
        let q = rng.random_range(1..=6);
        let r = if rng.random_bool(0.5) {
            rng.random_range(-3..=3)
        } else {
            0
        };
        let s = rng.random_range(1..=4);
        let x = QSqrt2::from_parts(p, q, r, s);
        if !nonzero || !x.is_zero() {
            return x;
        }
    }
}

/// A seeded coefficient set with random a, c, b₁ and f, and b₂..b₅ from [`solve_b`].
pub fn random_solved_family(seed: u64) -> CoefficientSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = [
            random_element(&mut rng, false),
            random_element(&mut rng, true),
            random_element(&mut rng, true),
        ];
        let c = [
            random_element(&mut rng, false),
            random_element(&mut rng, false),
        ];
        let b1 = random_element(&mut rng, false);
        let f = random_element(&mut rng, false);
        if let Ok([b2, b3, b4, b5]) = solve_b(&a[0], &a[1], &a[2], &c[0], &c[1], &b1) {
            return CoefficientSet {
                a,
                b: [b1, b2, b3, b4, b5],
                c,
                f,
            };
        }
    }
}

/// Adjoint coefficients of `c` with respect to the Grams of `ip`.
pub fn adjoint_from_inner<T: Scalar>(
    c: &CoefficientSet<T>,
    ip: &InnerProductSet<T>,
) -> Result<AdjointCoefficientSet<T>> {
    let InnerProductSet {
        beta1: be1,
        beta2: be2,
        beta3: be3,
        gamma1: g1,
        gamma2: g2,
    } = ip.clone();
    if be1.is_zero() || be2.is_zero() || be3.is_zero() {
        return Err(PlebError::SingularPairing(
            "a β coefficient vanishes".into(),
        ));
    }
    let det = g1.clone() * (g1.clone() - g2.clone()) - T::int(2) * g2.clone() * g2.clone();
    if det.is_zero() {
        return Err(PlebError::SingularPairing("γ₁(γ₁−γ₂) − 2γ₂² = 0".into()));
    }
    let [a1, a2, a3] = c.a.clone();
    let [b1, b2, b3, b4, b5] = c.b.clone();
    let [c1, c2] = c.c.clone();
    let two = T::int(2);
    let ap = [
        -(be1.clone() * a1),
        be2.clone() * a2,
        -(two.clone() * be3.clone() * a3),
    ];
    let bp = [
        b1 * (g1.clone() - two.clone() * g2.clone()) / be1,
        -(g1.clone() * b2.clone() - two.clone() * g2.clone() * b3.clone()) / be2.clone(),
        -(g1.clone() * b3.clone() - g2.clone() * b2 - g2.clone() * b3) / be2,
        (g1.clone() * b4.clone() - two.clone() * g2.clone() * b4 - g2.clone() * b5.clone())
            / (two.clone() * be3.clone()),
        (g1.clone() + g2.clone()) * b5 / (two * be3),
    ];
    // [[γ₁, −2γ₂], [−γ₂, γ₁−γ₂]] c′ = (−c₁, −c₂)
    let cp1 = (-(c1.clone()) * (g1.clone() - g2.clone()) - T::int(2) * g2.clone() * c2.clone())
        / det.clone();
    let cp2 = (-(g1 * c2) - g2 * c1) / det;
    Ok(AdjointCoefficientSet {
        ap,
        bp,
        cp: [cp1, cp2],
        fp: c.f.clone(),
    })
}

/// Operators whose prime-formula stencil differs from the exact Gram adjoint of the
/// coefficient stencil, checked on the standard triple.
pub fn adjoint_formula_disagreements(
    c: &CoefficientSet,
    ip: &InnerProductSet,
) -> Result<Vec<String>> {
    let sig = standard_sigma::<QSqrt2>();
    let cp = adjoint_from_inner(c, ip)?;
    let fam = family_stencils_generic(&sig, c, &cp);
    let g = ip.grams(&sig);
    let mut bad = Vec::new();
    let pairs = [
        ("d1", &fam.d1, &fam.d1_star, &g.tm.matrix, &g.s.matrix),
        ("d2", &fam.d2, &fam.d2_star, &g.s.matrix, &g.el1.matrix),
        ("d3", &fam.d3, &fam.d3_star, &g.el1.matrix, &g.e.matrix),
        ("d4", &fam.d4, &fam.d4_star, &g.e.matrix, &g.tm.matrix),
    ];
    for (name, op, star, gin, gout) in pairs {
        if op.adjoint(gin, gout)? != *star {
            bad.push(name.to_string());
        }
    }
    Ok(bad)
}

/// Lattice pairing residuals |⟨v, Lu⟩ − ⟨L*v, u⟩|/(‖u‖‖v‖) for (d₁, d₂, d₃, d̃₄).
pub fn pairing_residuals(
    triple: &PerfectTriple,
    c: &CoefficientSet,
    ip: &InnerProductSet,
    trials: usize,
    seed: u64,
    n: usize,
) -> Result<[f64; 4]> {
    let cp = adjoint_from_inner(c, ip)?;
    let fam = family_stencils(triple, c, &cp);
    let g = ip.to_f64().grams(&triple.frame().sigma);
    Ok([
        adjoint_pair_check(&fam.d1, &fam.d1_star, &g.tm, &g.s, trials, seed, n)?,
        adjoint_pair_check(&fam.d2, &fam.d2_star, &g.s, &g.el1, trials, seed + 1, n)?,
        adjoint_pair_check(&fam.d3, &fam.d3_star, &g.el1, &g.e, trials, seed + 2, n)?,
        adjoint_pair_check(&fam.d4, &fam.d4_star, &g.e, &g.tm, trials, seed + 3, n)?,
    ])
}

/// Δ-conditions on the S block and the channel multipliers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaConditions<T = QSqrt2> {
    /// Coefficients of ∂_⟨μ∂_ν⟩h, Σ∂∂hⁱ, ∂_⟨μ∂^ρh̃_{ν⟩ρ}, Σ∂∂h̃ in the hⁱ row and ∂∂h̃ in the h row.
    pub residuals: [T; 5],
    /// D*D = mΔ on h, hⁱ, h̃ and χ.
    pub multipliers: [T; 4],
}

impl<T: Scalar> DeltaConditions<T> {
    pub fn holds(&self) -> bool {
        self.residuals.iter().all(|x| x.is_zero())
    }
}

pub fn delta_conditions<T: Scalar>(
    c: &CoefficientSet<T>,
    cp: &AdjointCoefficientSet<T>,
) -> DeltaConditions<T> {
    let [a1, a2, a3] = c.a.clone();
    let [b1, b2, b3, b4, b5] = c.b.clone();
    let [c1, c2] = c.c.clone();
    let [a1p, a2p, a3p] = cp.ap.clone();
    let [b1p, b2p, b3p, b4p, b5p] = cp.bp.clone();
    let [c1p, c2p] = cp.cp.clone();
    let i = |n: i64| T::int(n);
    let residuals = [
        i(-6) * b1.clone() * b4p.clone() - i(2) * b1.clone() * b5p.clone()
            + i(2) * a3.clone() * a1p.clone(),
        i(2) * b2.clone() * b4p.clone()
            + i(4) * b3.clone() * b4p.clone()
            + i(2) * b2.clone() * b5p.clone()
            + i(2) * a3.clone() * a2p.clone(),
        i(-6) * b4.clone() * b4p.clone()
            - i(2) * b5.clone() * b4p.clone()
            - i(2) * b4.clone() * b5p.clone()
            + i(2) * b5.clone() * b5p.clone()
            + i(2) * a3.clone() * a3p.clone(),
        b4.clone() * b2p.clone()
            + b5.clone() * b2p.clone()
            + i(2) * b4.clone() * b3p.clone()
            + a2.clone() * a3p.clone(),
        i(-3) * b4 * b1p.clone() - b5.clone() * b1p.clone() + a1.clone() * a3p,
    ];
    let multipliers = [
        i(-3) * b1 * b1p + a1 * a1p,
        b2 * b2p + i(2) * b3 * b3p - a2 * a2p,
        i(-2) * b5 * b5p,
        c1 * c1p + i(2) * c2 * c2p,
    ];
    DeltaConditions {
        residuals,
        multipliers,
    }
}

/// Closed form of d₁d₁* + d₂*d₂ on S and of d₃d₃* on E, as second-order stencils.
pub fn laplacian_formula_stencils<T: Scalar + Serialize>(
    sig: &Tri<T>,
    c: &CoefficientSet<T>,
    cp: &AdjointCoefficientSet<T>,
) -> (SecondOrderStencil<T>, SecondOrderStencil<T>) {
    let dc = delta_conditions(c, cp);
    let [e1, e2, e3, e4, e5] = dc.residuals.clone();
    let [mh, mv, mt, mx] = dc.multipliers.clone();
    let s = SecondOrderStencil::from_symbol(DIM_S, DIM_S, |k: &[T; 4], x: &[T]| {
        let (h, hv, ht) = s_from_coords(x);
        let k2 = dot(k, k);
        let hk = sq_vec(&ht, k);
        let top = mh.clone() * k2.clone() * h.clone() + e5.clone() * dot(k, &hk);
        let vec: [T; 3] = std::array::from_fn(|i| {
            mv.clone() * k2.clone() * hv[i].clone() + e4.clone() * sig_kx(sig, i, k, &hk)
        });
        let mut mix = sq_zero::<T>();
        for (i, hvi) in hv.iter().enumerate() {
            let sk = sig_k(sig, i, k);
            for m in 0..4 {
                for n in 0..4 {
                    mix[m][n] += sk[m].clone() * k[n].clone() * hvi.clone();
                }
            }
        }
        let (kk, mixs, khk) = (stf(&outer(k, k)), stf(&mix), stf(&outer(k, &hk)));
        let t: Sq<T> = std::array::from_fn(|m| {
            std::array::from_fn(|n| {
                e1.clone() * kk[m][n].clone() * h.clone()
                    + e2.clone() * mixs[m][n].clone()
                    + e3.clone() * khk[m][n].clone()
                    + mt.clone() * k2.clone() * ht[m][n].clone()
            })
        });
        s_to_coords(top, vec, &t)
    });
    let e = SecondOrderStencil::from_symbol(DIM_E, DIM_E, |k: &[T; 4], chi: &[T]| {
        let k2 = dot(k, k);
        chi.iter()
            .map(|v| mx.clone() * k2.clone() * v.clone())
            .collect()
    });
    (s, e)
}

/// f′a₃′ + c₁(b₄+b₅) + 2c₂b₄.
pub fn f_condition<T: Scalar>(cp: &AdjointCoefficientSet<T>, c: &CoefficientSet<T>) -> T {
    let [_, _, _, b4, b5] = c.b.clone();
    let [c1, c2] = c.c.clone();
    cp.fp.clone() * cp.ap[2].clone() + c1 * (b4.clone() + b5) + T::int(2) * c2 * b4
}

/// Inner products making D*D a channelwise Laplacian multiple for operator
/// coefficients with b₃ = b₄ = 0, given the free parameters β₃ and γ₂.
///
/// Elimination of the Δ-conditions gives γ₁ = 4a₃²β₃²/b₅² − 2γ₂,
/// β₁ = b₁b₅(2γ₂−γ₁)/(2a₁a₃β₃) and β₂ = −b₂b₅γ₁/(2a₂a₃β₃).
pub fn solve_inner_products<T: Scalar>(
    c: &CoefficientSet<T>,
    beta3: &T,
    gamma2: &T,
) -> Result<InnerProductSet<T>> {
    let [a1, a2, a3] = c.a.clone();
    let [b1, b2, b3, b4, b5] = c.b.clone();
    if !b3.is_zero() || !b4.is_zero() {
        return Err(PlebError::DegenerateFamily(
            "elimination requires b3 = b4 = 0".into(),
        ));
    }
    if a1.is_zero() || a2.is_zero() || a3.is_zero() || b5.is_zero() || beta3.is_zero() {
        return Err(PlebError::DegenerateFamily(
            "a1, a2, a3, b5 and beta3 must be nonzero".into(),
        ));
    }
    let two = T::int(2);
    let gamma1 = T::int(4) * a3.clone() * a3.clone() * beta3.clone() * beta3.clone()
        / (b5.clone() * b5.clone())
        - two.clone() * gamma2.clone();
    let beta1 = b1 * b5.clone() * (two.clone() * gamma2.clone() - gamma1.clone())
        / (two.clone() * a1 * a3.clone() * beta3.clone());
    let beta2 = -(b2 * b5 * gamma1.clone()) / (two * a2 * a3 * beta3.clone());
    if beta1.is_zero() || beta2.is_zero() {
        return Err(PlebError::DegenerateFamily(
            "solution has a vanishing β".into(),
        ));
    }
    Ok(InnerProductSet {
        beta1,
        beta2,
        beta3: beta3.clone(),
        gamma1,
        gamma2: gamma2.clone(),
    })
}
