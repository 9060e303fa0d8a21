//! Periodic fields on the flat torus (R/2πZ)⁴ with spectral differentiation.
//!
//! Sites are stored row-major (x⁰ slowest, x³ fastest) with the fiber index
//! fastest of all. Wavenumbers are integers; the Nyquist mode is never
//! differentiated, and random fields are band limited well below it, so the
//! spectral derivative is exactly skew-adjoint on the fields we generate.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{PlebError, Result};
use crate::forms::GramForm;
use crate::mat::Mat;
use crate::stencil::{OperatorStencil, SecondOrderStencil};

pub const MAGIC: &[u8; 4] = b"PLBK";
pub const FORMAT_VERSION: u32 = 1;
/// Default band limit |k_μ| ≤ 2 for random fields.
pub const DEFAULT_BAND: i64 = 2;

/// A real field on an N⁴ periodic grid with `fiber` components per site.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    pub n: usize,
    pub fiber: usize,
    pub data: Vec<f64>,
    pub band_limit: bool,
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(PlebError::InvalidLattice(format!(
            "grid size must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

/// Signed integer wavenumber of FFT index `j`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Wavenumber used for differentiation: the Nyquist index gets 0.
fn diff_wavenumber(j: usize, n: usize) -> f64 {
    if 2 * j == n {
        0.0
    } else {
        wavenumber(j, n) as f64
    }
}

fn mode_digits(idx: usize, n: usize) -> [usize; 4] {
    [
        idx / (n * n * n),
        (idx / (n * n)) % n,
        (idx / n) % n,
        idx % n,
    ]
}

/// Differentiation covector of a mode index.
pub fn mode_k(idx: usize, n: usize) -> [f64; 4] {
    mode_digits(idx, n).map(|j| diff_wavenumber(j, n))
}

fn fft_along_axes(buf: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..4 {
        let stride = n.pow(3 - axis as u32);
        for base in 0..buf.len() {
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = buf[base + j * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (j, l) in line.iter().enumerate() {
                buf[base + j * stride] = *l;
            }
        }
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    let mut p = FftPlanner::new();
    Plans {
        forward: p.plan_fft_forward(n),
        inverse: p.plan_fft_inverse(n),
    }
}

impl LatticeField {
    pub fn zeros(fiber: usize, n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(LatticeField {
            n,
            fiber,
            data: vec![0.0; n.pow(4) * fiber],
            band_limit: true,
        })
    }

    pub fn sites(&self) -> usize {
        self.n.pow(4)
    }

    /// Fiber values at a site.
    pub fn at(&self, site: usize) -> &[f64] {
        &self.data[site * self.fiber..(site + 1) * self.fiber]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.sites())
            .map(|s| self.data[s * self.fiber + c])
            .collect()
    }

    pub fn from_components(n: usize, comps: &[Vec<f64>], band_limit: bool) -> Result<Self> {
        check_n(n)?;
        let fiber = comps.len();
        let sites = n.pow(4);
        let mut data = vec![0.0; sites * fiber];
        for (c, v) in comps.iter().enumerate() {
            if v.len() != sites {
                return Err(PlebError::InvalidLattice(
                    "component length does not match grid".into(),
                ));
            }
            for s in 0..sites {
                data[s * fiber + c] = v[s];
            }
        }
        Ok(LatticeField {
            n,
            fiber,
            data,
            band_limit,
        })
    }

    /// Builds a field site by site from coordinates x_μ ∈ [0, 2π).
    pub fn from_fn(fiber: usize, n: usize, f: impl Fn(&[f64; 4]) -> Vec<f64>) -> Result<Self> {
        check_n(n)?;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut data = Vec::with_capacity(n.pow(4) * fiber);
        for s in 0..n.pow(4) {
            let x = mode_digits(s, n).map(|j| j as f64 * h);
            let v = f(&x);
            assert_eq!(v.len(), fiber);
            data.extend(v);
        }
        Ok(LatticeField {
            n,
            fiber,
            data,
            band_limit: false,
        })
    }

    /// Pointwise fiber map u ↦ M u.
    pub fn map_fiber(&self, m: &Mat<f64>) -> Result<LatticeField> {
        if m.cols != self.fiber {
            return Err(PlebError::FiberMismatch {
                expected: m.cols,
                found: self.fiber,
            });
        }
        let mut data = Vec::with_capacity(self.sites() * m.rows);
        for s in 0..self.sites() {
            data.extend(m.apply(self.at(s)));
        }
        Ok(LatticeField {
            n: self.n,
            fiber: m.rows,
            data,
            band_limit: self.band_limit,
        })
    }

    /// Components `[start, start+len)` as a new field.
    pub fn slice(&self, start: usize, len: usize) -> LatticeField {
        let mut data = Vec::with_capacity(self.sites() * len);
        for s in 0..self.sites() {
            data.extend_from_slice(&self.at(s)[start..start + len]);
        }
        LatticeField {
            n: self.n,
            fiber: len,
            data,
            band_limit: self.band_limit,
        }
    }

    /// Concatenates fibers site by site.
    pub fn stack(parts: &[&LatticeField]) -> Result<LatticeField> {
        let n = parts[0].n;
        if parts.iter().any(|p| p.n != n) {
            return Err(PlebError::InvalidLattice("grid sizes differ".into()));
        }
        let fiber = parts.iter().map(|p| p.fiber).sum();
        let mut data = Vec::with_capacity(n.pow(4) * fiber);
        for s in 0..n.pow(4) {
            for p in parts {
                data.extend_from_slice(p.at(s));
            }
        }
        Ok(LatticeField {
            n,
            fiber,
            data,
            band_limit: parts.iter().all(|p| p.band_limit),
        })
    }

    fn same_shape(&self, o: &LatticeField) -> Result<()> {
        if self.fiber != o.fiber {
            return Err(PlebError::FiberMismatch {
                expected: self.fiber,
                found: o.fiber,
            });
        }
        if self.n != o.n {
            return Err(PlebError::InvalidLattice("grid sizes differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &LatticeField) -> Result<LatticeField> {
        self.same_shape(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(LatticeField {
            n: self.n,
            fiber: self.fiber,
            data,
            band_limit: self.band_limit && o.band_limit,
        })
    }

    pub fn sub(&self, o: &LatticeField) -> Result<LatticeField> {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LatticeField {
        LatticeField {
            n: self.n,
            fiber: self.fiber,
            data: self.data.iter().map(|x| x * s).collect(),
            band_limit: self.band_limit,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
    }

    /// Euclidean L² norm (volume weighted).
    pub fn norm(&self) -> f64 {
        let w = cell_volume(self.n);
        (pairwise_sum(&self.data.iter().map(|x| x * x).collect::<Vec<_>>()) * w).sqrt()
    }

    /// Forward transforms of every component.
    pub fn spectrum(&self) -> Vec<Vec<Complex64>> {
        let p = plans(self.n);
        (0..self.fiber)
            .into_par_iter()
            .map(|c| {
                let mut buf: Vec<Complex64> = self
                    .component(c)
                    .into_iter()
                    .map(|x| Complex64::new(x, 0.0))
                    .collect();
                fft_along_axes(&mut buf, self.n, &p.forward);
                buf
            })
            .collect()
    }

    /// Inverse of [`LatticeField::spectrum`], keeping real parts.
    pub fn from_spectrum(
        n: usize,
        spec: Vec<Vec<Complex64>>,
        band_limit: bool,
    ) -> Result<LatticeField> {
        let p = plans(n);
        let norm = 1.0 / n.pow(4) as f64;
        let comps: Vec<Vec<f64>> = spec
            .into_par_iter()
            .map(|mut buf| {
                fft_along_axes(&mut buf, n, &p.inverse);
                buf.into_iter().map(|z| z.re * norm).collect()
            })
            .collect();
        Self::from_components(n, &comps, band_limit)
    }

    /// Serializes to the flat binary format: 16-byte header ("PLBK", version,
    /// N, fiber as little-endian u32) followed by little-endian f64 values.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.fiber as u32).to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<LatticeField> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(PlebError::Parse("bad magic in lattice file".into()));
        }
        let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().expect("4 bytes"));
        if word(4) != FORMAT_VERSION {
            return Err(PlebError::Parse(format!(
                "unsupported lattice format version {}",
                word(4)
            )));
        }
        let (n, fiber) = (word(8) as usize, word(12) as usize);
        check_n(n)?;
        let mut bytes = vec![0u8; n.pow(4) * fiber * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(LatticeField {
            n,
            fiber,
            data,
            band_limit: false,
        })
    }
}

/// Volume of one lattice cell, (2π/N)⁴.
pub fn cell_volume(n: usize) -> f64 {
    (2.0 * std::f64::consts::PI / n as f64).powi(4)
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Band limit used for an N-grid: |k_μ| ≤ min(2, N/2 − 1).
pub fn band_for(n: usize) -> i64 {
    DEFAULT_BAND.min(n as i64 / 2 - 1)
}

/// Real band-limited random field with unit variance per component.
pub fn random_field(fiber: usize, n: usize, seed: u64) -> Result<LatticeField> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = n.pow(4);
    let data: Vec<f64> = (0..sites * fiber)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let raw = LatticeField {
        n,
        fiber,
        data,
        band_limit: false,
    };
    let band = band_for(n);
    let mut spec = raw.spectrum();
    for comp in spec.iter_mut() {
        for (idx, z) in comp.iter_mut().enumerate() {
            if mode_digits(idx, n)
                .iter()
                .any(|&j| wavenumber(j, n).abs() > band)
            {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut f = LatticeField::from_spectrum(n, spec, true)?;
    for c in 0..fiber {
        let col = f.component(c);
        let var = pairwise_sum(&col.iter().map(|x| x * x).collect::<Vec<_>>()) / sites as f64;
        let s = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
        for site in 0..sites {
            f.data[site * fiber + c] *= s;
        }
    }
    Ok(f)
}

/// amp·cos(k·x + phase) in every fiber direction given by `amp`.
pub fn plane_wave(n: usize, k: [i64; 4], amp: &[f64], phase: f64) -> Result<LatticeField> {
    let kf = k.map(|x| x as f64);
    let mut f = LatticeField::from_fn(amp.len(), n, |x| {
        let t = (0..4).map(|m| kf[m] * x[m]).sum::<f64>() + phase;
        amp.iter().map(|a| a * t.cos()).collect()
    })?;
    f.band_limit = k.iter().all(|x| 2 * x.unsigned_abs() < n as u64);
    Ok(f)
}

/// Applies a mode-wise linear map to the spectrum of `u`.
fn apply_modewise(
    u: &LatticeField,
    out_dim: usize,
    f: impl Fn(&[f64; 4], &[Complex64], &mut [Complex64]) + Sync,
) -> Result<LatticeField> {
    let n = u.n;
    let spec = u.spectrum();
    let modes = n.pow(4);
    let mut out_modes = vec![Complex64::new(0.0, 0.0); modes * out_dim];
    out_modes
        .par_chunks_mut(out_dim)
        .enumerate()
        .for_each(|(idx, out)| {
            let k = mode_k(idx, n);
            let uin: Vec<Complex64> = spec.iter().map(|c| c[idx]).collect();
            f(&k, &uin, out);
        });
    let comps: Vec<Vec<Complex64>> = (0..out_dim)
        .map(|o| (0..modes).map(|i| out_modes[i * out_dim + o]).collect())
        .collect();
    LatticeField::from_spectrum(n, comps, u.band_limit)
}

/// Exact spectral application of a first-order constant-coefficient stencil.
pub fn apply_stencil(op: &OperatorStencil<f64>, u: &LatticeField) -> Result<LatticeField> {
    if op.in_dim != u.fiber {
        return Err(PlebError::FiberMismatch {
            expected: op.in_dim,
            found: u.fiber,
        });
    }
    let entries = op.triplets();
    apply_modewise(u, op.out_dim, |k, uin, out| {
        for (o, mu, i, c) in &entries {
            // ∂_μ → i k_μ
            out[*o] += Complex64::new(0.0, c * k[*mu]) * uin[*i];
        }
    })
}

/// Spectral application of a second-order stencil (∂_μ∂_ν → −k_μk_ν).
pub fn apply_second_order(op: &SecondOrderStencil<f64>, u: &LatticeField) -> Result<LatticeField> {
    if op.in_dim != u.fiber {
        return Err(PlebError::FiberMismatch {
            expected: op.in_dim,
            found: u.fiber,
        });
    }
    let mut entries = Vec::new();
    for o in 0..op.out_dim {
        for mu in 0..4 {
            for nu in 0..4 {
                for i in 0..op.in_dim {
                    let c = *op.get(o, mu, nu, i);
                    if c != 0.0 {
                        entries.push((o, mu, nu, i, c));
                    }
                }
            }
        }
    }
    apply_modewise(u, op.out_dim, |k, uin, out| {
        for (o, mu, nu, i, c) in &entries {
            out[*o] += uin[*i] * (-c * k[*mu] * k[*nu]);
        }
    })
}

/// Spectral derivative ∂_μ u.
pub fn derivative(u: &LatticeField, mu: usize) -> Result<LatticeField> {
    apply_modewise(u, u.fiber, |k, uin, out| {
        for (o, x) in out.iter_mut().zip(uin) {
            *o = Complex64::new(0.0, k[mu]) * x;
        }
    })
}

/// Δu = ∂^μ∂_μ u.
pub fn laplacian(u: &LatticeField) -> Result<LatticeField> {
    apply_modewise(u, u.fiber, |k, uin, out| {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        for (o, x) in out.iter_mut().zip(uin) {
            *o = x * (-k2);
        }
    })
}

/// ⟨u, v⟩ = ∫ uᵀ G v as a volume-weighted lattice sum.
pub fn inner(u: &LatticeField, v: &LatticeField, gram: &GramForm<f64>) -> Result<f64> {
    u.same_shape(v)?;
    if gram.dim() != u.fiber {
        return Err(PlebError::FiberMismatch {
            expected: gram.dim(),
            found: u.fiber,
        });
    }
    let per_site: Vec<f64> = (0..u.sites())
        .map(|s| {
            let gv = gram.matrix.apply(v.at(s));
            u.at(s).iter().zip(&gv).map(|(a, b)| a * b).sum()
        })
        .collect();
    Ok(pairwise_sum(&per_site) * cell_volume(u.n))
}

/// The same pairing evaluated on Fourier coefficients (Parseval).
pub fn inner_fourier(u: &LatticeField, v: &LatticeField, gram: &GramForm<f64>) -> Result<f64> {
    u.same_shape(v)?;
    let (su, sv) = (u.spectrum(), v.spectrum());
    let modes = u.sites();
    let per_mode: Vec<f64> = (0..modes)
        .map(|m| {
            let mut acc = 0.0;
            for a in 0..u.fiber {
                for b in 0..u.fiber {
                    let g = gram.matrix[(a, b)];
                    if g != 0.0 {
                        acc += g * (su[a][m].conj() * sv[b][m]).re;
                    }
                }
            }
            acc
        })
        .collect();
    Ok(pairwise_sum(&per_mode) * cell_volume(u.n) / modes as f64)
}

/// Max over trials of |⟨v, L u⟩ − ⟨L* v, u⟩| / (‖u‖‖v‖) on random fields.
pub fn adjoint_pair_check(
    op: &OperatorStencil<f64>,
    op_star: &OperatorStencil<f64>,
    gram_in: &GramForm<f64>,
    gram_out: &GramForm<f64>,
    trials: usize,
    seed: u64,
    n: usize,
) -> Result<f64> {
    if op_star.in_dim != op.out_dim || op_star.out_dim != op.in_dim {
        return Err(PlebError::FiberMismatch {
            expected: op.out_dim,
            found: op_star.in_dim,
        });
    }
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let u = random_field(
            op.in_dim,
            n,
            seed.wrapping_mul(1_000_003).wrapping_add(2 * t),
        )?;
        let v = random_field(
            op.out_dim,
            n,
            seed.wrapping_mul(1_000_003).wrapping_add(2 * t + 1),
        )?;
        let lhs = inner(&v, &apply_stencil(op, &u)?, gram_out)?;
        let rhs = inner(&apply_stencil(op_star, &v)?, &u, gram_in)?;
        let scale = u.norm() * v.norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Result of fitting L*L u against the channel matrix form M·(−Δu).
#[derive(Clone, Debug, Serialize)]
pub struct LaplacianFit {
    /// Best-fit channel matrix, row-major.
    pub m: Vec<Vec<f64>>,
    /// ‖L*L u − M(−Δu)‖ / ‖L*L u‖ after the fit.
    pub residual: f64,
}

/// Least-squares fit of L*L u = M(−Δu) over random fields, where
/// L* = −G_dom⁻¹ Lᵀ G_cod.
pub fn laplacian_multiple_check(
    op: &OperatorStencil<f64>,
    gram_dom: &GramForm<f64>,
    gram_cod: &GramForm<f64>,
    trials: usize,
    seed: u64,
    n: usize,
) -> Result<LaplacianFit> {
    let star = op.adjoint(&gram_dom.matrix, &gram_cod.matrix)?;
    let d = op.in_dim;
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let u = random_field(d, n, seed.wrapping_add(7919 * t))?;
        let w = apply_stencil(&star, &apply_stencil(op, &u)?)?;
        let z = laplacian(&u)?.scale(-1.0);
        samples.push((w, z));
    }
    let mut wz = nalgebra::DMatrix::<f64>::zeros(d, d);
    let mut zz = nalgebra::DMatrix::<f64>::zeros(d, d);
    for (w, z) in &samples {
        for s in 0..w.sites() {
            let (ws, zs) = (w.at(s), z.at(s));
            for a in 0..d {
                for b in 0..d {
                    wz[(a, b)] += ws[a] * zs[b];
                    zz[(a, b)] += zs[a] * zs[b];
                }
            }
        }
    }
    let zz_inv = zz.try_inverse().ok_or(PlebError::SingularGram)?;
    let m = wz * zz_inv;
    let (mut num, mut den) = (0.0, 0.0);
    for (w, z) in &samples {
        for s in 0..w.sites() {
            let zs = nalgebra::DVector::from_column_slice(z.at(s));
            let pred = &m * zs;
            for a in 0..d {
                num += (w.at(s)[a] - pred[a]).powi(2);
                den += w.at(s)[a].powi(2);
            }
        }
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(LaplacianFit {
        m: (0..d)
            .map(|a| (0..d).map(|b| m[(a, b)]).collect())
            .collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad_stencil() -> OperatorStencil<f64> {
        OperatorStencil::from_symbol(4, 1, |k: &[f64; 4], u: &[f64]| {
            k.iter().map(|x| x * u[0]).collect()
        })
    }

    #[test]
    fn deterministic_and_unit_variance() {
        let a = random_field(13, 8, 42).unwrap();
        let b = random_field(13, 8, 42).unwrap();
        assert_eq!(a, b);
        for c in 0..13 {
            let col = a.component(c);
            let var = col.iter().map(|x| x * x).sum::<f64>() / col.len() as f64;
            assert!((var - 1.0).abs() < 1e-12);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 5.0);
        }
    }

    #[test]
    fn spectrum_is_hermitian_and_band_limited() {
        let f = random_field(1, 8, 3).unwrap();
        let s = &f.spectrum()[0];
        let n: usize = 8;
        for idx in 0..n.pow(4) {
            let d = mode_digits(idx, n);
            let neg = d.map(|j| (n - j) % n);
            let jdx = ((neg[0] * n + neg[1]) * n + neg[2]) * n + neg[3];
            assert!((s[idx] - s[jdx].conj()).norm() < 1e-9);
            if d.iter().any(|&j| wavenumber(j, n).abs() > 2) {
                assert!(s[idx].norm() < 1e-9);
            }
        }
    }

    #[test]
    fn derivative_of_sines() {
        let f = LatticeField::from_fn(1, 8, |x| vec![x[0].sin() * (2.0 * x[2]).sin()]).unwrap();
        let d = derivative(&f, 2).unwrap();
        let exact =
            LatticeField::from_fn(1, 8, |x| vec![2.0 * x[0].sin() * (2.0 * x[2]).cos()]).unwrap();
        assert!(d.sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_symbol_on_plane_wave() {
        let g = grad_stencil();
        let k = [1i64, -2, 0, 1];
        let u = plane_wave(8, k, &[1.0], 0.3).unwrap();
        let out = apply_stencil(&g, &u).unwrap();
        let exact = LatticeField::from_fn(4, 8, |x| {
            let t = (0..4).map(|m| k[m] as f64 * x[m]).sum::<f64>() + 0.3;
            (0..4).map(|m| -(k[m] as f64) * t.sin()).collect()
        })
        .unwrap();
        assert!(out.sub(&exact).unwrap().max_abs() < 1e-11);
        let c = LatticeField::from_fn(1, 8, |_| vec![2.5]).unwrap();
        assert!(apply_stencil(&g, &c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn parseval() {
        let u = random_field(3, 8, 1).unwrap();
        let v = random_field(3, 8, 2).unwrap();
        let g = GramForm::<f64>::identity(3);
        let a = inner(&u, &v, &g).unwrap();
        let b = inner_fourier(&u, &v, &g).unwrap();
        assert!((a - b).abs() < 1e-12 * u.norm() * v.norm());
    }

    #[test]
    fn grad_adjoint_negative_control() {
        let g = grad_stencil();
        let div = g.adjoint(&Mat::identity(1), &Mat::identity(4)).unwrap();
        let gi = GramForm::<f64>::identity(1);
        let go = GramForm::<f64>::identity(4);
        assert!(adjoint_pair_check(&g, &div, &gi, &go, 3, 9, 8).unwrap() < 1e-12);
        let wrong = div.scale(&-1.0);
        assert!(adjoint_pair_check(&g, &wrong, &gi, &go, 3, 9, 8).unwrap() > 0.1);
        let zero = OperatorStencil::<f64>::zeros(1, 4);
        assert_eq!(
            adjoint_pair_check(&OperatorStencil::zeros(4, 1), &zero, &gi, &go, 2, 1, 8).unwrap(),
            0.0
        );
    }

    #[test]
    fn div_grad_fits_laplacian() {
        let fit = laplacian_multiple_check(
            &grad_stencil(),
            &GramForm::identity(1),
            &GramForm::identity(4),
            2,
            5,
            8,
        )
        .unwrap();
        assert!((fit.m[0][0] - 1.0).abs() < 1e-12, "{:?}", fit.m);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let u = random_field(4, 4, 8).unwrap();
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"PLBK");
        assert_eq!(buf.len(), 16 + 8 * 4 * 256);
        let back = LatticeField::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.data, u.data);
        assert!(LatticeField::read_binary(&mut &b"NOPE0000000000000000"[..]).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(random_field(3, 5, 0).is_err());
        assert!(random_field(3, 2, 0).is_err());
        let u = random_field(3, 4, 0).unwrap();
        assert!(matches!(
            apply_stencil(&grad_stencil(), &u),
            Err(PlebError::FiberMismatch { .. })
        ));
    }
}
