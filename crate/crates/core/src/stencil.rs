//! Constant-coefficient first-order operators (Op u)_o = Σ_{μ,i} C[o][μ][i] ∂_μ u_i
//! and their second-order compositions.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{PlebError, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::sigma_core::M4;

/// First-order stencil; `c` is stored as `[out][μ][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorStencil<T> {
    pub out_dim: usize,
    pub in_dim: usize,
    pub c: Vec<T>,
}

/// Symmetric second-order stencil Σ C[o][μ][ν][i] ∂_μ∂_ν u_i; `c` is `[out][μ][ν][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderStencil<T> {
    pub out_dim: usize,
    pub in_dim: usize,
    pub c: Vec<T>,
}

impl<T: Scalar> OperatorStencil<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        OperatorStencil {
            out_dim,
            in_dim,
            c: vec![T::zero(); out_dim * 4 * in_dim],
        }
    }

    fn idx(&self, o: usize, mu: usize, i: usize) -> usize {
        (o * 4 + mu) * self.in_dim + i
    }

    pub fn get(&self, o: usize, mu: usize, i: usize) -> &T {
        &self.c[self.idx(o, mu, i)]
    }

    pub fn set(&mut self, o: usize, mu: usize, i: usize, v: T) {
        let k = self.idx(o, mu, i);
        self.c[k] = v;
    }

    /// Builds a stencil from its symbol: `f(k, u)` must be bilinear in (k, u).
    pub fn from_symbol(out_dim: usize, in_dim: usize, f: impl Fn(&[T; 4], &[T]) -> Vec<T>) -> Self {
        let mut s = Self::zeros(out_dim, in_dim);
        for mu in 0..4 {
            let k: [T; 4] = std::array::from_fn(|n| if n == mu { T::one() } else { T::zero() });
            for i in 0..in_dim {
                let mut u = vec![T::zero(); in_dim];
                u[i] = T::one();
                let out = f(&k, &u);
                assert_eq!(
                    out.len(),
                    out_dim,
                    "symbol function has wrong output dimension"
                );
                for (o, v) in out.into_iter().enumerate() {
                    s.set(o, mu, i, v);
                }
            }
        }
        s
    }

    /// The coefficient matrix C[·][μ][·] (out × in).
    pub fn direction(&self, mu: usize) -> Mat<T> {
        Mat::from_fn(self.out_dim, self.in_dim, |o, i| self.get(o, mu, i).clone())
    }

    pub fn from_directions(d: &[Mat<T>; 4]) -> Self {
        let (out_dim, in_dim) = (d[0].rows, d[0].cols);
        let mut s = Self::zeros(out_dim, in_dim);
        for (mu, m) in d.iter().enumerate() {
            for o in 0..out_dim {
                for i in 0..in_dim {
                    s.set(o, mu, i, m[(o, i)].clone());
                }
            }
        }
        s
    }

    /// Symbol Σ_μ C[·][μ][·] k_μ under the real convention ∂_μ → k_μ.
    pub fn symbol_exact(&self, k: &[T; 4]) -> Mat<T> {
        let mut m = Mat::zeros(self.out_dim, self.in_dim);
        for o in 0..self.out_dim {
            for (mu, km) in k.iter().enumerate() {
                if km.is_zero() {
                    continue;
                }
                for i in 0..self.in_dim {
                    let c = self.get(o, mu, i);
                    if !c.is_zero() {
                        m[(o, i)] += c.clone() * km.clone();
                    }
                }
            }
        }
        m
    }

    pub fn symbol(&self, k: &[f64; 4]) -> Mat<f64> {
        let mut m = Mat::zeros(self.out_dim, self.in_dim);
        for o in 0..self.out_dim {
            for (mu, km) in k.iter().enumerate() {
                for i in 0..self.in_dim {
                    m[(o, i)] += self.get(o, mu, i).to_f64() * km;
                }
            }
        }
        m
    }

    pub fn to_f64(&self) -> OperatorStencil<f64> {
        OperatorStencil {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            c: self.c.iter().map(|x| x.to_f64()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    fn same_shape(&self, o: &Self) {
        assert_eq!(
            (self.out_dim, self.in_dim),
            (o.out_dim, o.in_dim),
            "stencil shape mismatch"
        );
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same_shape(o);
        let c = self
            .c
            .iter()
            .zip(&o.c)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        OperatorStencil {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            c,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-T::one()))
    }

    pub fn scale(&self, s: &T) -> Self {
        let c = self.c.iter().map(|a| a.clone() * s.clone()).collect();
        OperatorStencil {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            c,
        }
    }

    /// Fiber map after the operator: M · Op.
    pub fn left_mul(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.cols, self.out_dim);
        let d: [Mat<T>; 4] = std::array::from_fn(|mu| m * &self.direction(mu));
        Self::from_directions(&d)
    }

    /// Fiber map before the operator: Op · M.
    pub fn right_mul(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.rows, self.in_dim);
        let d: [Mat<T>; 4] = std::array::from_fn(|mu| &self.direction(mu) * m);
        Self::from_directions(&d)
    }

    /// Substitutes ∂_a = Σ_μ P[μ][a] ∂_μ, carrying a frame stencil to coordinate derivatives.
    pub fn change_derivatives(&self, p: &[[T; 4]; 4]) -> Self {
        let mut s = Self::zeros(self.out_dim, self.in_dim);
        for o in 0..self.out_dim {
            for i in 0..self.in_dim {
                for mu in 0..4 {
                    let mut acc = T::zero();
                    for a in 0..4 {
                        let c = self.get(o, a, i);
                        if !c.is_zero() && !p[mu][a].is_zero() {
                            acc += c.clone() * p[mu][a].clone();
                        }
                    }
                    s.set(o, mu, i, acc);
                }
            }
        }
        s
    }

    /// Adjoint L* = −G_in⁻¹ Lᵀ G_out with respect to the fiber Grams, so that
    /// ⟨v, L u⟩_out = ⟨L* v, u⟩_in for periodic fields.
    pub fn adjoint(&self, gram_in: &Mat<T>, gram_out: &Mat<T>) -> Result<Self> {
        let gi = gram_in.inverse().ok_or(PlebError::SingularGram)?;
        let neg = -T::one();
        let d: [Mat<T>; 4] = std::array::from_fn(|mu| {
            (&(&gi * &self.direction(mu).transpose()) * gram_out).scale(&neg)
        });
        Ok(Self::from_directions(&d))
    }

    /// The composition `self ∘ first` as a symmetric second-order stencil.
    pub fn compose(&self, first: &Self) -> SecondOrderStencil<T> {
        assert_eq!(self.in_dim, first.out_dim, "composition fiber mismatch");
        let mut s = SecondOrderStencil::zeros(self.out_dim, first.in_dim);
        let half = T::ratio(1, 2);
        for mu in 0..4 {
            for nu in 0..4 {
                let p = &self.direction(mu) * &first.direction(nu);
                for o in 0..p.rows {
                    for i in 0..p.cols {
                        let v = &p[(o, i)];
                        if v.is_zero() {
                            continue;
                        }
                        let x = v.clone() * half.clone();
                        s.add_at(o, mu, nu, i, x.clone());
                        s.add_at(o, nu, mu, i, x);
                    }
                }
            }
        }
        s
    }

    /// Block matrix of stencils; `blocks[r][c]` maps input block c to output block r.
    pub fn block(blocks: &[Vec<&OperatorStencil<T>>]) -> Self {
        let outs: Vec<usize> = blocks.iter().map(|row| row[0].out_dim).collect();
        let ins: Vec<usize> = blocks[0].iter().map(|b| b.in_dim).collect();
        let (no, ni) = (outs.iter().sum(), ins.iter().sum());
        let mut s = Self::zeros(no, ni);
        let mut r0 = 0;
        for (r, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (c, b) in row.iter().enumerate() {
                assert_eq!(
                    (b.out_dim, b.in_dim),
                    (outs[r], ins[c]),
                    "block shape mismatch"
                );
                for o in 0..b.out_dim {
                    for mu in 0..4 {
                        for i in 0..b.in_dim {
                            s.set(r0 + o, mu, c0 + i, b.get(o, mu, i).clone());
                        }
                    }
                }
                c0 += ins[c];
            }
            r0 += outs[r];
        }
        s
    }

    /// Sub-block of rows `[r0, r0+nr)` and columns `[c0, c0+nc)`.
    pub fn sub_block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Self {
        let mut s = Self::zeros(nr, nc);
        for o in 0..nr {
            for mu in 0..4 {
                for i in 0..nc {
                    s.set(o, mu, i, self.get(r0 + o, mu, c0 + i).clone());
                }
            }
        }
        s
    }

    /// Nonzero entries as (out, μ, in, value).
    pub fn triplets(&self) -> Vec<(usize, usize, usize, T)> {
        let mut v = Vec::new();
        for o in 0..self.out_dim {
            for mu in 0..4 {
                for i in 0..self.in_dim {
                    let c = self.get(o, mu, i);
                    if !c.is_zero() {
                        v.push((o, mu, i, c.clone()));
                    }
                }
            }
        }
        v
    }
}

impl OperatorStencil<f64> {
    /// Exchanges frame derivatives for coordinate derivatives: ∂_a = (E⁻¹)^μ{}_a ∂_μ.
    pub fn in_coordinates(&self, e_inv: &M4) -> Self {
        self.change_derivatives(e_inv)
    }
}

impl<T: Scalar + Serialize> Serialize for OperatorStencil<T> {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("OperatorStencil", 3)?;
        st.serialize_field("in_dim", &self.in_dim)?;
        st.serialize_field("out_dim", &self.out_dim)?;
        st.serialize_field("entries", &self.triplets())?;
        st.end()
    }
}

#[derive(Deserialize)]
struct StencilRepr<T> {
    in_dim: usize,
    out_dim: usize,
    entries: Vec<(usize, usize, usize, T)>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for OperatorStencil<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = StencilRepr::<T>::deserialize(de)?;
        let mut s = OperatorStencil::zeros(r.out_dim, r.in_dim);
        for (o, mu, i, v) in r.entries {
            if o >= r.out_dim || mu >= 4 || i >= r.in_dim {
                return Err(serde::de::Error::custom("stencil entry out of range"));
            }
            s.set(o, mu, i, v);
        }
        Ok(s)
    }
}

impl<T: Scalar> SecondOrderStencil<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        SecondOrderStencil {
            out_dim,
            in_dim,
            c: vec![T::zero(); out_dim * 16 * in_dim],
        }
    }

    fn idx(&self, o: usize, mu: usize, nu: usize, i: usize) -> usize {
        ((o * 4 + mu) * 4 + nu) * self.in_dim + i
    }

    pub fn get(&self, o: usize, mu: usize, nu: usize, i: usize) -> &T {
        &self.c[self.idx(o, mu, nu, i)]
    }

    pub fn add_at(&mut self, o: usize, mu: usize, nu: usize, i: usize, v: T) {
        let k = self.idx(o, mu, nu, i);
        self.c[k] += v;
    }

    /// Builds from a symbol `f(k, u)` quadratic in k and linear in u.
    pub fn from_symbol(out_dim: usize, in_dim: usize, f: impl Fn(&[T; 4], &[T]) -> Vec<T>) -> Self {
        let mut s = Self::zeros(out_dim, in_dim);
        let unit = |mu: usize| -> [T; 4] {
            std::array::from_fn(|n| if n == mu { T::one() } else { T::zero() })
        };
        let half = T::ratio(1, 2);
        for i in 0..in_dim {
            let mut u = vec![T::zero(); in_dim];
            u[i] = T::one();
            let diag: Vec<Vec<T>> = (0..4).map(|mu| f(&unit(mu), &u)).collect();
            for mu in 0..4 {
                for o in 0..out_dim {
                    s.add_at(o, mu, mu, i, diag[mu][o].clone());
                }
                for nu in mu + 1..4 {
                    let k: [T; 4] = std::array::from_fn(|n| {
                        if n == mu || n == nu {
                            T::one()
                        } else {
                            T::zero()
                        }
                    });
                    let both = f(&k, &u);
                    for o in 0..out_dim {
                        let cross = (both[o].clone() - diag[mu][o].clone() - diag[nu][o].clone())
                            * half.clone();
                        s.add_at(o, mu, nu, i, cross.clone());
                        s.add_at(o, nu, mu, i, cross);
                    }
                }
            }
        }
        s
    }

    /// Symbol Σ C k_μ k_ν.
    pub fn symbol(&self, k: &[f64; 4]) -> Mat<f64> {
        Mat::from_fn(self.out_dim, self.in_dim, |o, i| {
            let mut acc = 0.0;
            for mu in 0..4 {
                for nu in 0..4 {
                    acc += self.get(o, mu, nu, i).to_f64() * k[mu] * k[nu];
                }
            }
            acc
        })
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.out_dim, self.in_dim), (o.out_dim, o.in_dim));
        let c = self
            .c
            .iter()
            .zip(&o.c)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        SecondOrderStencil {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            c,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-T::one()))
    }

    pub fn scale(&self, s: &T) -> Self {
        let c = self.c.iter().map(|a| a.clone() * s.clone()).collect();
        SecondOrderStencil {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            c,
        }
    }

    /// Fiber map after the operator.
    pub fn left_mul(&self, m: &Mat<T>) -> Self {
        assert_eq!(m.cols, self.out_dim);
        let mut s = Self::zeros(m.rows, self.in_dim);
        for r in 0..m.rows {
            for o in 0..self.out_dim {
                let a = &m[(r, o)];
                if a.is_zero() {
                    continue;
                }
                for mn in 0..16 {
                    for i in 0..self.in_dim {
                        let c = self.get(o, mn / 4, mn % 4, i);
                        if !c.is_zero() {
                            s.add_at(r, mn / 4, mn % 4, i, a.clone() * c.clone());
                        }
                    }
                }
            }
        }
        s
    }

    /// The coefficients flattened, for least-squares fits against basis tensors.
    pub fn flat(&self) -> &[T] {
        &self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{QSqrt2, Zero};

    fn grad() -> OperatorStencil<QSqrt2> {
        OperatorStencil::from_symbol(4, 1, |k: &[QSqrt2; 4], u: &[QSqrt2]| {
            k.iter().map(|x| x.clone() * u[0].clone()).collect()
        })
    }

    fn div() -> OperatorStencil<QSqrt2> {
        OperatorStencil::from_symbol(1, 4, |k: &[QSqrt2; 4], u: &[QSqrt2]| {
            let mut acc = QSqrt2::zero();
            for m in 0..4 {
                acc += k[m].clone() * u[m].clone();
            }
            vec![acc]
        })
    }

    #[test]
    fn div_grad_is_laplacian() {
        let lap = div().compose(&grad());
        let expect = SecondOrderStencil::from_symbol(1, 1, |k: &[QSqrt2; 4], u: &[QSqrt2]| {
            let mut acc = QSqrt2::zero();
            for m in 0..4 {
                acc += k[m].clone() * k[m].clone();
            }
            vec![acc * u[0].clone()]
        });
        assert_eq!(lap, expect);
    }

    #[test]
    fn adjoint_of_grad_is_minus_div() {
        let g = grad()
            .adjoint(&Mat::identity(1), &Mat::identity(4))
            .unwrap();
        assert_eq!(g, div().scale(&QSqrt2::int(-1)));
    }

    #[test]
    fn json_round_trip() {
        let s = grad().scale(&QSqrt2::sqrt2());
        let js = serde_json::to_string(&s).unwrap();
        let back: OperatorStencil<QSqrt2> = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn symbol_linear() {
        let g = grad().to_f64();
        let k = [0.5, -1.0, 2.0, 0.25];
        let k2 = k.map(|x| 2.0 * x);
        assert_eq!(g.symbol(&k2), g.symbol(&k).scale(&2.0));
        assert!(g.symbol(&[0.0; 4]).is_zero());
    }

    #[test]
    fn block_and_sub_block() {
        let g = grad();
        let d = div();
        let b = OperatorStencil::block(&[
            vec![&g, &OperatorStencil::zeros(4, 4)],
            vec![&OperatorStencil::zeros(1, 1), &d],
        ]);
        assert_eq!((b.out_dim, b.in_dim), (5, 5));
        assert_eq!(b.sub_block(4, 1, 1, 4), d);
        assert!(b.sub_block(0, 4, 1, 4).is_zero());
    }
}
