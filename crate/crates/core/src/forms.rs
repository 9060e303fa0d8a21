//! E-valued forms, the endomorphisms J₁ and J₂, the parametrization of the
//! tangent space S, and the fiber Gram forms.
//!
//! Two layers live here. The typed API ([`EOneForm`], [`ETwoForm`],
//! [`SElement`], ...) works in coordinates for an arbitrary [`PerfectTriple`],
//! raising indices with its metric. The generic layer (`*_matrix`,
//! [`s_to_coords`], ...) works in an orthonormal frame over any [`Scalar`] and
//! is what the operator stencils are built from. Fiber coordinates are fixed
//! once and for all:
//!
//! * Λ¹: ξ_μ, 4 components.
//! * S: (h, h¹, h², h³, h̃_A) with h̃ expanded in the orthonormal basis
//!   [`htilde_basis`] of symmetric tracefree 4×4 matrices, 13 components.
//! * E⊗Λ¹: aⁱ_μ at index 4i + μ, 12 components.
//! * E: χⁱ, 3 components.
//! * E⊗Λ²: Bⁱ_{μν} (μ < ν) at index 6i + pair(μ, ν), 18 components.

use serde::{Deserialize, Serialize};

use crate::error::{PlebError, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::sigma_core::{eps3, PerfectTriple, Tri, M4};

pub const DIM_TM: usize = 4;
pub const DIM_S: usize = 13;
pub const DIM_EL1: usize = 12;
pub const DIM_E: usize = 3;
pub const DIM_EL2: usize = 18;

/// E-valued 1-form aⁱ_μ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EOneForm {
    pub a: [[f64; 4]; 3],
}

/// E-valued 2-form Bⁱ_{μν}, antisymmetric in μν.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ETwoForm {
    pub b: [M4; 3],
}

/// Element of S in (h, hⁱ, h̃_{μν}) form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SElement {
    pub h: f64,
    pub hvec: [f64; 3],
    pub htilde: M4,
}

/// Section χⁱ of E.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EScalar {
    pub chi: [f64; 3],
}

impl EOneForm {
    pub fn zero() -> Self {
        EOneForm { a: [[0.0; 4]; 3] }
    }
    pub fn to_vec(&self) -> Vec<f64> {
        self.a.iter().flatten().copied().collect()
    }
    pub fn from_vec(v: &[f64]) -> Self {
        let mut a = [[0.0; 4]; 3];
        for i in 0..3 {
            for m in 0..4 {
                a[i][m] = v[4 * i + m];
            }
        }
        EOneForm { a }
    }
}

impl ETwoForm {
    pub fn zero() -> Self {
        ETwoForm {
            b: [[[0.0; 4]; 4]; 3],
        }
    }
    pub fn max_abs(&self) -> f64 {
        self.b
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |a: f64, x| a.max(x.abs()))
    }
    pub fn sub(&self, o: &ETwoForm) -> ETwoForm {
        let mut b = self.b;
        for i in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    b[i][m][n] -= o.b[i][m][n];
                }
            }
        }
        ETwoForm { b }
    }
    /// The 18 independent components.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; DIM_EL2];
        for i in 0..3 {
            for (p, (m, n)) in PAIRS.iter().enumerate() {
                v[6 * i + p] = self.b[i][*m][*n];
            }
        }
        v
    }
    pub fn from_vec(v: &[f64]) -> Self {
        let mut b = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for (p, (m, n)) in PAIRS.iter().enumerate() {
                b[i][*m][*n] = v[6 * i + p];
                b[i][*n][*m] = -v[6 * i + p];
            }
        }
        ETwoForm { b }
    }
}

/// Index pairs μ < ν in the order used for 2-form coordinates.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

// ---------------------------------------------------------------------------
// Generic frame layer.

pub type Sq<T> = [[T; 4]; 4];

pub fn sq_zero<T: Scalar>() -> Sq<T> {
    std::array::from_fn(|_| std::array::from_fn(|_| T::zero()))
}

/// Symmetric tracefree part (1/2)(T + Tᵀ) − (1/4)δ tr T.
pub fn stf<T: Scalar>(t: &Sq<T>) -> Sq<T> {
    let mut tr = T::zero();
    for (m, row) in t.iter().enumerate() {
        tr += row[m].clone();
    }
    let quarter_tr = tr * T::ratio(1, 4);
    let half = T::ratio(1, 2);
    std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let s = (t[m][n].clone() + t[n][m].clone()) * half.clone();
            if m == n {
                s - quarter_tr.clone()
            } else {
                s
            }
        })
    })
}

/// Orthonormal basis of symmetric tracefree 4×4 matrices under the Frobenius
/// pairing: three diagonal elements diag(1,1,−1,−1)/2, diag(1,−1,1,−1)/2,
/// diag(1,−1,−1,1)/2, then (e_{mn} + e_{nm})/√2 for m < n.
pub fn htilde_basis<T: Scalar>() -> Vec<Sq<T>> {
    let mut out = Vec::with_capacity(9);
    for signs in [[1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]] {
        let mut t = sq_zero::<T>();
        for m in 0..4 {
            t[m][m] = T::ratio(signs[m], 2);
        }
        out.push(t);
    }
    let r = T::one() / T::sqrt2();
    for (m, n) in PAIRS {
        let mut t = sq_zero::<T>();
        t[m][n] = r.clone();
        t[n][m] = r.clone();
        out.push(t);
    }
    out
}

/// Splits S coordinates into (h, hⁱ, h̃_{μν}).
pub fn s_from_coords<T: Scalar>(x: &[T]) -> (T, [T; 3], Sq<T>) {
    assert_eq!(x.len(), DIM_S);
    let basis = htilde_basis::<T>();
    let mut ht = sq_zero::<T>();
    for (a, b) in basis.iter().enumerate() {
        if x[4 + a].is_zero() {
            continue;
        }
        for m in 0..4 {
            for n in 0..4 {
                if !b[m][n].is_zero() {
                    ht[m][n] += x[4 + a].clone() * b[m][n].clone();
                }
            }
        }
    }
    (x[0].clone(), [x[1].clone(), x[2].clone(), x[3].clone()], ht)
}

/// Assembles S coordinates; h̃ is projected onto [`htilde_basis`], so only its
/// symmetric tracefree part survives.
pub fn s_to_coords<T: Scalar>(h: T, hv: [T; 3], ht: &Sq<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(DIM_S);
    out.push(h);
    out.extend(hv);
    for b in htilde_basis::<T>() {
        let mut acc = T::zero();
        for m in 0..4 {
            for n in 0..4 {
                if !b[m][n].is_zero() && !ht[m][n].is_zero() {
                    acc += b[m][n].clone() * ht[m][n].clone();
                }
            }
        }
        out.push(acc);
    }
    out
}

/// J₁(a)ⁱ_μ = εⁱʲᵏ Σʲ_μ{}^α aᵏ_α as a 12×12 matrix in a frame.
pub fn j1_matrix<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    let mut m = Mat::zeros(DIM_EL1, DIM_EL1);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = eps3(i, j, k);
                if e == 0 {
                    continue;
                }
                for mu in 0..4 {
                    for a in 0..4 {
                        let s = sig.at(j, mu, a);
                        if !s.is_zero() {
                            m[(4 * i + mu, 4 * k + a)] += T::int(e) * s.clone();
                        }
                    }
                }
            }
        }
    }
    m
}

/// Full 3×4×4 array of a 2-form from its 18 coordinates.
pub fn two_form_full<T: Scalar>(v: &[T]) -> Vec<Sq<T>> {
    (0..3)
        .map(|i| {
            let mut b = sq_zero::<T>();
            for (p, (m, n)) in PAIRS.iter().enumerate() {
                b[*m][*n] = v[6 * i + p].clone();
                b[*n][*m] = -v[6 * i + p].clone();
            }
            b
        })
        .collect()
}

/// The 18 coordinates of a 2-form given as a full array.
pub fn two_form_coords<T: Scalar>(b: &[Sq<T>]) -> Vec<T> {
    let mut v = Vec::with_capacity(DIM_EL2);
    for bi in b.iter().take(3) {
        for (m, n) in PAIRS {
            v.push(bi[m][n].clone());
        }
    }
    v
}

/// J₂(B)ⁱ_{μν} = εⁱʲᵏ Σʲ_{[μ}{}^α B^k_{|α|ν]} on full arrays (frame).
pub fn j2_apply_generic<T: Scalar>(sig: &Tri<T>, b: &[Sq<T>]) -> Vec<Sq<T>> {
    let half = T::ratio(1, 2);
    (0..3)
        .map(|i| {
            let mut out = sq_zero::<T>();
            for j in 0..3 {
                for k in 0..3 {
                    let e = eps3(i, j, k);
                    if e == 0 {
                        continue;
                    }
                    let e = T::int(e);
                    for m in 0..4 {
                        for n in 0..4 {
                            let mut acc = T::zero();
                            for a in 0..4 {
                                let s1 = sig.at(j, m, a);
                                if !s1.is_zero() && !b[k][a][n].is_zero() {
                                    acc += s1.clone() * b[k][a][n].clone();
                                }
                                let s2 = sig.at(j, n, a);
                                if !s2.is_zero() && !b[k][a][m].is_zero() {
                                    acc -= s2.clone() * b[k][a][m].clone();
                                }
                            }
                            out[m][n] += e.clone() * half.clone() * acc;
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// J₂ as an 18×18 matrix in the two-form coordinates.
pub fn j2_matrix<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    let mut cols = Vec::with_capacity(DIM_EL2);
    for c in 0..DIM_EL2 {
        let mut e = vec![T::zero(); DIM_EL2];
        e[c] = T::one();
        cols.push(two_form_coords(&j2_apply_generic(sig, &two_form_full(&e))));
    }
    Mat::from_columns(DIM_EL2, &cols)
}

/// σⁱ_{μν} = 2εⁱʲᵏΣʲ_{μν}hᵏ + 2h_{[μ}{}^αΣⁱ_{|α|ν]} with h_{μν} = h̃_{μν} + δ_{μν}h/4 (frame).
pub fn s_embed_generic<T: Scalar>(sig: &Tri<T>, x: &[T]) -> Vec<Sq<T>> {
    let (h, hv, ht) = s_from_coords(x);
    let quarter = h * T::ratio(1, 4);
    let mut hf = ht;
    for (m, row) in hf.iter_mut().enumerate() {
        row[m] += quarter.clone();
    }
    (0..3)
        .map(|i| {
            let mut out = sq_zero::<T>();
            for m in 0..4 {
                for n in 0..4 {
                    let mut acc = T::zero();
                    for j in 0..3 {
                        for k in 0..3 {
                            let e = eps3(i, j, k);
                            if e != 0 && !hv[k].is_zero() && !sig.at(j, m, n).is_zero() {
                                acc += T::int(2 * e) * sig.at(j, m, n).clone() * hv[k].clone();
                            }
                        }
                    }
                    for a in 0..4 {
                        if !hf[m][a].is_zero() && !sig.at(i, a, n).is_zero() {
                            acc += hf[m][a].clone() * sig.at(i, a, n).clone();
                        }
                        if !hf[n][a].is_zero() && !sig.at(i, a, m).is_zero() {
                            acc -= hf[n][a].clone() * sig.at(i, a, m).clone();
                        }
                    }
                    out[m][n] = acc;
                }
            }
            out
        })
        .collect()
}

/// The 18×13 matrix of the S embedding.
pub fn s_embed_matrix<T: Scalar>(sig: &Tri<T>) -> Mat<T> {
    let cols: Vec<Vec<T>> = (0..DIM_S)
        .map(|c| {
            let mut e = vec![T::zero(); DIM_S];
            e[c] = T::one();
            two_form_coords(&s_embed_generic(sig, &e))
        })
        .collect();
    Mat::from_columns(DIM_EL2, &cols)
}

/// Channel data of a 2-form: S_{ij} = Bⁱ_{αβ}Σ^{jαβ} and the anti-self-dual residue (frame).
pub struct Channels<T> {
    /// Symmetric tracefree part of S_{(ij)}, the S₊⁴ channel.
    pub s4: [[T; 3]; 3],
    /// εⁱʲᵏ S_{jk}, the S₊² channel.
    pub s2: [T; 3],
    /// tr S, the scalar channel.
    pub s0: T,
    /// B minus its self-dual part (S/4)ⁱʲΣʲ: the S₊²⊗S₋² channel.
    pub s9: Vec<Sq<T>>,
}

pub fn decompose_generic<T: Scalar>(sig: &Tri<T>, b: &[Sq<T>]) -> Channels<T> {
    let mut s: [[T; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = T::zero();
            for m in 0..4 {
                for n in 0..4 {
                    if !b[i][m][n].is_zero() && !sig.at(j, m, n).is_zero() {
                        acc += b[i][m][n].clone() * sig.at(j, m, n).clone();
                    }
                }
            }
            s[i][j] = acc;
        }
    }
    let s0 = s[0][0].clone() + s[1][1].clone() + s[2][2].clone();
    let third = s0.clone() * T::ratio(1, 3);
    let half = T::ratio(1, 2);
    let s4 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let sym = (s[i][j].clone() + s[j][i].clone()) * half.clone();
            if i == j {
                sym - third.clone()
            } else {
                sym
            }
        })
    });
    let s2 = std::array::from_fn(|i| {
        let mut acc = T::zero();
        for j in 0..3 {
            for k in 0..3 {
                let e = eps3(i, j, k);
                if e != 0 {
                    acc += T::int(e) * s[j][k].clone();
                }
            }
        }
        acc
    });
    let quarter = T::ratio(1, 4);
    let s9 = (0..3)
        .map(|i| {
            let mut r = b[i].clone();
            for j in 0..3 {
                let x = s[i][j].clone() * quarter.clone();
                if x.is_zero() {
                    continue;
                }
                for m in 0..4 {
                    for n in 0..4 {
                        if !sig.at(j, m, n).is_zero() {
                            r[m][n] -= x.clone() * sig.at(j, m, n).clone();
                        }
                    }
                }
            }
            r
        })
        .collect();
    Channels { s4, s2, s0, s9 }
}

/// Reassembles a 2-form from its channels (frame). Inverse of [`decompose_generic`].
pub fn recompose_generic<T: Scalar>(sig: &Tri<T>, c: &Channels<T>) -> Vec<Sq<T>> {
    // X = S/4 with S = s4 + (s0/3)δ + A, A_{jk} = (1/2)ε^{jki}s2^i.
    let quarter = T::ratio(1, 4);
    let mut out = c.s9.clone();
    for i in 0..3 {
        for j in 0..3 {
            let mut sij = c.s4[i][j].clone();
            if i == j {
                sij += c.s0.clone() * T::ratio(1, 3);
            }
            for k in 0..3 {
                let e = eps3(i, j, k);
                if e != 0 {
                    sij += T::ratio(e, 2) * c.s2[k].clone();
                }
            }
            let x = sij * quarter.clone();
            for m in 0..4 {
                for n in 0..4 {
                    if !sig.at(j, m, n).is_zero() {
                        out[i][m][n] += x.clone() * sig.at(j, m, n).clone();
                    }
                }
            }
        }
    }
    out
}

/// Projectors onto the four channels of E⊗Λ² as 18×18 matrices (S₊⁴, S₊², scalar, S₊²⊗S₋²).
pub fn channel_projectors<T: Scalar>(sig: &Tri<T>) -> [Mat<T>; 4] {
    let zero3: [[T; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    let mut cols: [Vec<Vec<T>>; 4] = Default::default();
    for c in 0..DIM_EL2 {
        let mut e = vec![T::zero(); DIM_EL2];
        e[c] = T::one();
        let ch = decompose_generic(sig, &two_form_full(&e));
        let zero9 = vec![sq_zero::<T>(); 3];
        let parts = [
            Channels {
                s4: ch.s4.clone(),
                s2: std::array::from_fn(|_| T::zero()),
                s0: T::zero(),
                s9: zero9.clone(),
            },
            Channels {
                s4: zero3.clone(),
                s2: ch.s2.clone(),
                s0: T::zero(),
                s9: zero9.clone(),
            },
            Channels {
                s4: zero3.clone(),
                s2: std::array::from_fn(|_| T::zero()),
                s0: ch.s0.clone(),
                s9: zero9,
            },
            Channels {
                s4: zero3.clone(),
                s2: std::array::from_fn(|_| T::zero()),
                s0: T::zero(),
                s9: ch.s9,
            },
        ];
        for (k, p) in parts.iter().enumerate() {
            cols[k].push(two_form_coords(&recompose_generic(sig, p)));
        }
    }
    cols.map(|c| Mat::from_columns(DIM_EL2, &c))
}

// ---------------------------------------------------------------------------
// Typed coordinate layer for an arbitrary triple.

/// J₁(a)ⁱ_μ = εⁱʲᵏ Σʲ_μ{}^α aᵏ_α.
pub fn j1_apply(triple: &PerfectTriple, a: &EOneForm) -> EOneForm {
    let mx = triple.mixed();
    let mut out = [[0.0; 4]; 3];
    for (i, oi) in out.iter_mut().enumerate() {
        for (m, x) in oi.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    let e = eps3(i, j, k) as f64;
                    if e != 0.0 {
                        acc += e * (0..4).map(|al| mx[j][m][al] * a.a[k][al]).sum::<f64>();
                    }
                }
            }
            *x = acc;
        }
    }
    EOneForm { a: out }
}

/// J₁ as a 12×12 matrix in coordinates.
pub fn j1_coord_matrix(triple: &PerfectTriple) -> Mat<f64> {
    let cols: Vec<Vec<f64>> = (0..DIM_EL1)
        .map(|c| {
            let mut e = vec![0.0; DIM_EL1];
            e[c] = 1.0;
            j1_apply(triple, &EOneForm::from_vec(&e)).to_vec()
        })
        .collect();
    Mat::from_columns(DIM_EL1, &cols)
}

/// Projectors onto the eigenvalue-2 (rank 4) and eigenvalue −1 (rank 8) eigenspaces of J₁:
/// P4 = (J₁ + I)/3, P8 = (2I − J₁)/3.
pub fn j1_projectors(triple: &PerfectTriple) -> (Mat<f64>, Mat<f64>) {
    let j = j1_coord_matrix(triple);
    let id = Mat::<f64>::identity(DIM_EL1);
    let p4 = (&j + &id).scale(&(1.0 / 3.0));
    let p8 = (&id.scale(&2.0) - &j).scale(&(1.0 / 3.0));
    (p4, p8)
}

/// The E-valued 1-form ξ^αΣⁱ_{αμ}.
pub fn xi_one_form(triple: &PerfectTriple, xi_up: &[f64; 4]) -> EOneForm {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        for m in 0..4 {
            a[i][m] = (0..4).map(|al| xi_up[al] * triple.sigma[i][al][m]).sum();
        }
    }
    EOneForm { a }
}

/// J₂(B)ⁱ_{μν} = εⁱʲᵏ Σʲ_{[μ}{}^α B^k_{|α|ν]}.
pub fn j2_apply(triple: &PerfectTriple, b: &ETwoForm) -> ETwoForm {
    let mx = triple.mixed();
    let mut out = [[[0.0; 4]; 4]; 3];
    for i in 0..3 {
        for m in 0..4 {
            for n in 0..4 {
                let mut acc = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        let e = eps3(i, j, k) as f64;
                        if e == 0.0 {
                            continue;
                        }
                        for a in 0..4 {
                            acc +=
                                0.5 * e * (mx[j][m][a] * b.b[k][a][n] - mx[j][n][a] * b.b[k][a][m]);
                        }
                    }
                }
                out[i][m][n] = acc;
            }
        }
    }
    ETwoForm { b: out }
}

/// J₂ as an 18×18 matrix in coordinates.
pub fn j2_coord_matrix(triple: &PerfectTriple) -> Mat<f64> {
    let cols: Vec<Vec<f64>> = (0..DIM_EL2)
        .map(|c| {
            let mut e = vec![0.0; DIM_EL2];
            e[c] = 1.0;
            j2_apply(triple, &ETwoForm::from_vec(&e)).to_vec()
        })
        .collect();
    Mat::from_columns(DIM_EL2, &cols)
}

/// Irreducible channels of a 2-form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoFormChannels {
    /// Symmetric tracefree part of Bⁱ_{αβ}Σ^{jαβ}: the S₊⁴ channel.
    pub s4: [[f64; 3]; 3],
    /// εⁱʲᵏ Bʲ_{αβ}Σ^{kαβ}: the S₊² channel.
    pub s2: [f64; 3],
    /// Bᵏ_{αβ}Σ^{kαβ}: the scalar channel.
    pub s0: f64,
    /// The S₊²⊗S₋² (anti-self-dual) remainder as a 2-form.
    pub s9: ETwoForm,
}

/// Splits a 2-form per the irreducible projections. With X = S/4, where
/// S_{ij} = Bⁱ_{αβ}Σ^{jαβ}, the self-dual part of B is XⁱʲΣʲ and s9 is the rest.
pub fn decompose_two_form(triple: &PerfectTriple, b: &ETwoForm) -> TwoFormChannels {
    let up = triple.raised();
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    s[i][j] += b.b[i][m][n] * up[j][m][n];
                }
            }
        }
    }
    let s0 = s[0][0] + s[1][1] + s[2][2];
    let mut s4 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s4[i][j] = 0.5 * (s[i][j] + s[j][i]) - if i == j { s0 / 3.0 } else { 0.0 };
        }
    }
    let mut s2 = [0.0; 3];
    for (i, x) in s2.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                *x += eps3(i, j, k) as f64 * s[j][k];
            }
        }
    }
    let mut s9 = b.b;
    for i in 0..3 {
        for j in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    s9[i][m][n] -= 0.25 * s[i][j] * triple.sigma[j][m][n];
                }
            }
        }
    }
    TwoFormChannels {
        s4,
        s2,
        s0,
        s9: ETwoForm { b: s9 },
    }
}

/// Inverse of [`decompose_two_form`].
pub fn recompose_two_form(triple: &PerfectTriple, c: &TwoFormChannels) -> ETwoForm {
    let mut out = c.s9.b;
    for i in 0..3 {
        for j in 0..3 {
            let mut sij = c.s4[i][j] + if i == j { c.s0 / 3.0 } else { 0.0 };
            for k in 0..3 {
                sij += 0.5 * eps3(i, j, k) as f64 * c.s2[k];
            }
            for m in 0..4 {
                for n in 0..4 {
                    out[i][m][n] += 0.25 * sij * triple.sigma[j][m][n];
                }
            }
        }
    }
    ETwoForm { b: out }
}

/// σⁱ_{μν} = 2εⁱʲᵏΣʲ_{μν}hᵏ + 2h_{[μ}{}^αΣⁱ_{|α|ν]}, with h_{μν} = h̃_{μν} + g_{μν}h/4.
pub fn s_embed(triple: &PerfectTriple, s: &SElement) -> ETwoForm {
    let g = &triple.metric;
    let gi = &triple.inv_metric;
    let mut hf = s.htilde;
    for m in 0..4 {
        for n in 0..4 {
            hf[m][n] += 0.25 * g[m][n] * s.h;
        }
    }
    // h_μ^α
    let mut hm = [[0.0; 4]; 4];
    for m in 0..4 {
        for a in 0..4 {
            hm[m][a] = (0..4).map(|b| hf[m][b] * gi[b][a]).sum();
        }
    }
    let sg = &triple.sigma;
    let mut out = [[[0.0; 4]; 4]; 3];
    for i in 0..3 {
        for m in 0..4 {
            for n in 0..4 {
                let mut acc = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        acc += 2.0 * eps3(i, j, k) as f64 * sg[j][m][n] * s.hvec[k];
                    }
                }
                for a in 0..4 {
                    acc += hm[m][a] * sg[i][a][n] - hm[n][a] * sg[i][a][m];
                }
                out[i][m][n] = acc;
            }
        }
    }
    ETwoForm { b: out }
}

/// Inverse of [`s_embed`] on S: h = Σ·σ/6, hⁱ = s2/16,
/// h̃_{μν} = −(1/2)·⟨σⁱ_{μα}Σⁱ{}^α{}_ν⟩.
pub fn s_extract(triple: &PerfectTriple, sigma: &ETwoForm) -> Result<SElement> {
    let ch = decompose_two_form(triple, sigma);
    let norm = ch.s4.iter().flatten().fold(0.0, |a: f64, x| a.max(x.abs()));
    let scale = sigma.max_abs().max(1.0);
    if norm > 1e-9 * scale {
        return Err(PlebError::NotInS { norm });
    }
    let g = &triple.metric;
    let gi = &triple.inv_metric;
    // T_{μν} = σⁱ_{μα} Σⁱ^α_ν where Σⁱ^α_ν = g^{αβ}Σⁱ_{βν}
    let mut t = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            let mut acc = 0.0;
            for i in 0..3 {
                for a in 0..4 {
                    let s_up: f64 = (0..4).map(|b| gi[a][b] * triple.sigma[i][b][n]).sum();
                    acc += sigma.b[i][m][a] * s_up;
                }
            }
            t[m][n] = acc;
        }
    }
    // symmetric tracefree part with respect to g
    let tr: f64 = (0..4)
        .flat_map(|m| (0..4).map(move |n| (m, n)))
        .map(|(m, n)| gi[m][n] * t[m][n])
        .sum();
    let mut ht = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            ht[m][n] = -0.5 * (0.5 * (t[m][n] + t[n][m]) - 0.25 * g[m][n] * tr);
        }
    }
    Ok(SElement {
        h: ch.s0 / 6.0,
        hvec: ch.s2.map(|x| x / 16.0),
        htilde: ht,
    })
}

// ---------------------------------------------------------------------------
// Gram forms.

/// Fiber matrix of an inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct GramForm<T> {
    pub matrix: Mat<T>,
    /// True only when the form is known to be positive definite.
    pub positive: bool,
}

impl<T: Scalar> GramForm<T> {
    pub fn dim(&self) -> usize {
        self.matrix.rows
    }
    pub fn to_f64(&self) -> GramForm<f64> {
        GramForm {
            matrix: self.matrix.to_f64(),
            positive: self.positive,
        }
    }
    pub fn identity(n: usize) -> Self {
        GramForm {
            matrix: Mat::identity(n),
            positive: true,
        }
    }
    /// Block-diagonal sum of two forms.
    pub fn direct_sum(&self, o: &GramForm<T>) -> GramForm<T> {
        let n = self.dim() + o.dim();
        let mut m = Mat::zeros(n, n);
        m.set_block(0, 0, &self.matrix);
        m.set_block(self.dim(), self.dim(), &o.matrix);
        GramForm {
            matrix: m,
            positive: self.positive && o.positive,
        }
    }
}

/// ⟨σ,σ⟩ = β₁h² + β₂(hⁱ)² + β₃(h̃_{μν})² in S coordinates.
pub fn gram_s<T: Scalar>(beta1: T, beta2: T, beta3: T) -> GramForm<T> {
    let mut d = vec![beta1.clone()];
    d.extend(std::iter::repeat_n(beta2.clone(), 3));
    d.extend(std::iter::repeat_n(beta3.clone(), 9));
    let pos = [beta1, beta2, beta3].iter().all(|b| b.to_f64() > 0.0);
    GramForm {
        matrix: Mat::diag(&d),
        positive: pos,
    }
}

/// ⟨a,a⟩ = γ₁(aⁱ_μ)² + γ₂εⁱʲᵏΣ^{iμν}aʲ_μaᵏ_ν, i.e. the matrix γ₁I − γ₂J₁ (frame).
pub fn gram_el1<T: Scalar>(gamma1: T, gamma2: T, sig: &Tri<T>) -> GramForm<T> {
    let j = j1_matrix(sig);
    let m = &Mat::identity(DIM_EL1).scale(&gamma1) - &j.scale(&gamma2);
    // Eigenvalues of γ₁I − γ₂J₁ are γ₁ − 2γ₂ and γ₁ + γ₂.
    let (g1, g2) = (gamma1.to_f64(), gamma2.to_f64());
    GramForm {
        matrix: m,
        positive: g1 - 2.0 * g2 > 0.0 && g1 + g2 > 0.0,
    }
}

pub fn gram_tm<T: Scalar>() -> GramForm<T> {
    GramForm::identity(DIM_TM)
}

pub fn gram_e<T: Scalar>() -> GramForm<T> {
    GramForm::identity(DIM_E)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{One, QSqrt2, Zero};
    use crate::sigma_core::{standard_sigma, standard_triple};

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn j1_minimal_polynomial_exact() {
        let j = j1_matrix(&standard_sigma::<QSqrt2>());
        let lhs = &j * &j;
        let rhs = &Mat::identity(12).scale(&QSqrt2::int(2)) + &j;
        assert_eq!(lhs, rhs);
        assert_eq!(j.trace(), QSqrt2::zero());
    }

    #[test]
    fn j1_on_xi_forms() {
        let t = standard_triple();
        let a = xi_one_form(&t, &[0.3, -1.2, 0.7, 2.0]);
        let ja = j1_apply(&t, &a);
        for i in 0..3 {
            for m in 0..4 {
                assert!((ja.a[i][m] - 2.0 * a.a[i][m]).abs() < 1e-12);
            }
        }
        assert_eq!(j1_apply(&t, &EOneForm::zero()), EOneForm::zero());
    }

    #[test]
    fn projector_traces() {
        let (p4, p8) = j1_projectors(&standard_triple());
        assert!((p4.trace() - 4.0).abs() < 1e-12);
        assert!((p8.trace() - 8.0).abs() < 1e-12);
        let sq = &p4 * &p4;
        assert!((&sq - &p4).max_abs() < 1e-12);
        assert!((&p4 * &p8).max_abs() < 1e-12);
    }

    #[test]
    fn j2_on_sigma_and_diamond() {
        let t = standard_triple();
        let b = ETwoForm { b: t.sigma };
        let jb = j2_apply(&t, &b);
        assert!(
            jb.sub(&ETwoForm {
                b: t.sigma.map(|s| s.map(|r| r.map(|x| 2.0 * x)))
            })
            .max_abs()
                < 1e-12
        );
        let mut ht = [[0.0; 4]; 4];
        ht[0][1] = 1.0;
        ht[1][0] = 1.0;
        ht[2][2] = 0.5;
        ht[3][3] = -0.5;
        let sig = s_embed(
            &t,
            &SElement {
                h: 0.0,
                hvec: [0.0; 3],
                htilde: ht,
            },
        );
        assert!(j2_apply(&t, &sig).max_abs() < 1e-12);
    }

    #[test]
    fn j2_minimal_polynomial_exact() {
        let j = j2_matrix(&standard_sigma::<QSqrt2>());
        let id = Mat::<QSqrt2>::identity(18);
        let two = &j - &id.scale(&QSqrt2::int(2));
        let one = &j - &id;
        let plus = &j + &id;
        let p = &(&(&j * &two) * &one) * &plus;
        assert!(p.is_zero());
    }

    #[test]
    fn decompose_sigma() {
        let t = standard_triple();
        let c = decompose_two_form(&t, &ETwoForm { b: t.sigma });
        assert!((c.s0 - 12.0).abs() < 1e-12);
        assert!(c.s4.iter().flatten().all(|x| x.abs() < 1e-12));
        assert!(c.s2.iter().all(|x| x.abs() < 1e-12));
        assert!(c.s9.max_abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_mixing_is_s2() {
        let t = standard_triple();
        let ma = [[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]];
        let mut b = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for m in 0..4 {
                    for n in 0..4 {
                        b[i][m][n] += ma[i][j] * t.sigma[j][m][n];
                    }
                }
            }
        }
        let c = decompose_two_form(&t, &ETwoForm { b });
        assert!(c.s0.abs() < 1e-12 && c.s9.max_abs() < 1e-12);
        assert!(c.s4.iter().flatten().all(|x| x.abs() < 1e-12));
        assert!(c.s2.iter().any(|x| x.abs() > 0.1));
    }

    #[test]
    fn channel_ranks() {
        let p = channel_projectors(&standard_sigma::<QSqrt2>());
        let ranks: Vec<usize> = p.iter().map(|m| m.rank()).collect();
        assert_eq!(ranks, vec![5, 3, 1, 9]);
        let sum = &(&(&p[0] + &p[1]) + &p[2]) + &p[3];
        assert_eq!(sum, Mat::identity(18));
    }

    #[test]
    fn embed_extract_round_trip() {
        let t = standard_triple();
        let mut seed = 11;
        let mut ht = [[0.0; 4]; 4];
        for m in 0..4 {
            for n in m..4 {
                ht[m][n] = lcg(&mut seed);
                ht[n][m] = ht[m][n];
            }
        }
        let tr = (0..4).map(|m| ht[m][m]).sum::<f64>() / 4.0;
        for m in 0..4 {
            ht[m][m] -= tr;
        }
        let s = SElement {
            h: lcg(&mut seed),
            hvec: [lcg(&mut seed), lcg(&mut seed), lcg(&mut seed)],
            htilde: ht,
        };
        let sig = s_embed(&t, &s);
        let c = decompose_two_form(&t, &sig);
        assert!(c.s4.iter().flatten().all(|x| x.abs() < 1e-12));
        let back = s_extract(&t, &sig).unwrap();
        assert!((back.h - s.h).abs() < 1e-12);
        for i in 0..3 {
            assert!((back.hvec[i] - s.hvec[i]).abs() < 1e-12);
        }
        for m in 0..4 {
            for n in 0..4 {
                assert!((back.htilde[m][n] - s.htilde[m][n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn s4_mixing_rejected() {
        let t = standard_triple();
        let ms = [[1.0, 0.5, 0.0], [0.5, -1.0, 0.0], [0.0, 0.0, 0.0]];
        let mut b = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for m in 0..4 {
                    for n in 0..4 {
                        b[i][m][n] += ms[i][j] * t.sigma[j][m][n];
                    }
                }
            }
        }
        assert!(matches!(
            s_extract(&t, &ETwoForm { b }),
            Err(PlebError::NotInS { .. })
        ));
        let z = s_extract(&t, &ETwoForm::zero()).unwrap();
        assert_eq!(z.h, 0.0);
    }

    #[test]
    fn sigma_trace_is_six_h() {
        let t = standard_triple();
        let sig = s_embed(
            &t,
            &SElement {
                h: 1.0,
                hvec: [0.0; 3],
                htilde: [[0.0; 4]; 4],
            },
        );
        let tr: f64 = (0..3)
            .flat_map(|i| (0..4).flat_map(move |m| (0..4).map(move |n| (i, m, n))))
            .map(|(i, m, n)| t.sigma[i][m][n] * sig.b[i][m][n])
            .sum();
        assert!((tr - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_norm_identity() {
        // (1/4)h² + 8(hⁱ)² + h̃² = (1/4)σ² − (1/72)(Σ·σ)²
        let t = standard_triple();
        let sig3 = standard_sigma::<f64>();
        let mut seed = 5;
        let x: Vec<f64> = (0..13).map(|_| lcg(&mut seed)).collect();
        let g = gram_s(0.25, 8.0, 1.0);
        let lhs: f64 = x.iter().zip(g.matrix.apply(&x)).map(|(a, b)| a * b).sum();
        let sig = s_embed_generic(&sig3, &x);
        let sq: f64 = sig.iter().flatten().flatten().map(|v| v * v).sum();
        let dot: f64 = (0..3)
            .flat_map(|i| (0..4).flat_map(move |m| (0..4).map(move |n| (i, m, n))))
            .map(|(i, m, n)| t.sigma[i][m][n] * sig[i][m][n])
            .sum();
        assert!((lhs - (0.25 * sq - dot * dot / 72.0)).abs() < 1e-12);
    }

    #[test]
    fn gram_el1_spectrum() {
        let g = gram_el1(QSqrt2::zero(), QSqrt2::one(), &standard_sigma());
        let id = Mat::<QSqrt2>::identity(12);
        let m2 = &g.matrix + &id.scale(&QSqrt2::int(2));
        let m1 = &g.matrix - &id;
        assert_eq!(m2.rank(), 8);
        assert_eq!(m1.rank(), 4);
        assert!(!g.positive);
        assert_eq!(
            gram_el1(QSqrt2::one(), QSqrt2::zero(), &standard_sigma()).matrix,
            id
        );
    }
}
