//! Pointwise symbol calculus: symbol matrices, exactness of the symbol
//! sequence, k-adapted frames and symbol squares.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{PlebError, Result};
use crate::mat::Mat;
use crate::plebanski_ops::pleb_ops;
use crate::sigma_core::{eps3, PerfectTriple};
use crate::stencil::OperatorStencil;

/// Relative singular-value threshold separating zero from nonzero.
pub const RANK_RTOL: f64 = 1e-6;
/// Required ratio between the smallest nonzero and largest zero singular value.
pub const MIN_GAP: f64 = 1e4;

/// σ(L)(k) under ∂_μ → k_μ.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub k: [f64; 4],
    pub matrix: Mat<f64>,
}

pub fn symbol_at(stencil: &OperatorStencil<f64>, k: &[f64; 4]) -> SymbolMatrix {
    SymbolMatrix {
        k: *k,
        matrix: stencil.symbol(k),
    }
}

/// Singular-value analysis of a matrix: rank, gap, and orthonormal bases of
/// the image (columns) and kernel (columns).
#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// s_rank / s_{rank+1}; infinite when there is no zero singular value or no nonzero one.
    pub gap: f64,
    pub image: DMatrix<f64>,
    pub kernel: DMatrix<f64>,
}

pub fn rank_info(m: &Mat<f64>) -> RankInfo {
    let (r, c) = (m.rows, m.cols);
    let a = DMatrix::from_fn(r, c, |i, j| m[(i, j)]);
    // Right singular vectors from the symmetric eigenproblem of AᵀA; nalgebra's
    // SVD loses accuracy on some rank-deficient rectangular inputs.
    let eig = (a.transpose() * &a).symmetric_eigen();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let sv: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = RANK_RTOL * smax;
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().take(r.min(c)).filter(|&&s| s > thresh).count()
    };
    let gap = if rank == 0 || rank >= r.min(c) || sv[rank] == 0.0 {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank]
    };
    let v = DMatrix::from_fn(c, c, |i, j| eig.eigenvectors[(i, order[j])]);
    let mut image = &a * v.columns(0, rank);
    for (j, mut col) in image.column_iter_mut().enumerate() {
        col /= sv[j];
    }
    let kernel = v.columns(rank, c - rank).into_owned();
    RankInfo {
        rank,
        singular_values: sv.into_iter().take(r.min(c)).collect(),
        gap,
        image,
        kernel,
    }
}

/// Largest principal angle between two subspaces of equal dimension given by
/// orthonormal columns; π/2 when the dimensions differ.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = a - b * (b.transpose() * a);
    let s2 = (resid.transpose() * &resid)
        .symmetric_eigen()
        .eigenvalues
        .max();
    s2.max(0.0).sqrt().min(1.0).asin()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactnessReport {
    pub k: [f64; 4],
    /// Ranks of σ(d₁), σ(d₂), σ(d₃).
    pub ranks: [usize; 3],
    /// Kernel dimensions of σ(d₁), σ(d₂), σ(d₃).
    pub kernel_dims: [usize; 3],
    /// Largest principal angle between im σ(d₁)/ker σ(d₂) and im σ(d₂)/ker σ(d₃).
    pub max_principal_angle: f64,
    /// Smallest singular-value gap ratio across the three symbols.
    pub min_gap: f64,
    pub pass: bool,
}

/// Ranks, kernels and principal angles of the symbol sequence at k, without failing.
pub fn exactness_diagnostics(
    ops: &[&OperatorStencil<f64>; 3],
    k: &[f64; 4],
    tol: f64,
) -> ExactnessReport {
    let infos: Vec<RankInfo> = ops.iter().map(|o| rank_info(&o.symbol(k))).collect();
    let a1 = max_principal_angle(&infos[0].image, &infos[1].kernel);
    let a2 = max_principal_angle(&infos[1].image, &infos[2].kernel);
    let ranks = [infos[0].rank, infos[1].rank, infos[2].rank];
    let kernel_dims = [
        infos[0].kernel.ncols(),
        infos[1].kernel.ncols(),
        infos[2].kernel.ncols(),
    ];
    let min_gap = infos.iter().map(|i| i.gap).fold(f64::INFINITY, f64::min);
    let angle = a1.max(a2);
    let pass = ranks == [4, 9, 3] && kernel_dims == [0, 4, 9] && angle < tol && min_gap > MIN_GAP;
    ExactnessReport {
        k: *k,
        ranks,
        kernel_dims,
        max_principal_angle: angle,
        min_gap,
        pass,
    }
}

/// Exactness of 0 → TM → S → E⊗Λ¹ → E → 0 at the covector k.
pub fn exactness_report(triple: &PerfectTriple, k: &[f64; 4], tol: f64) -> Result<ExactnessReport> {
    let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(PlebError::DegenerateK { norm });
    }
    let ops = pleb_ops(triple);
    let r = exactness_diagnostics(&[&ops.d1, &ops.d2, &ops.d3], k, tol);
    if r.pass {
        Ok(r)
    } else {
        Err(PlebError::NotExact(format!(
            "k = {:?}: ranks {:?}, kernel dims {:?}, max angle {:e}, gap {:e}",
            r.k, r.ranks, r.kernel_dims, r.max_principal_angle, r.min_gap
        )))
    }
}

/// The frame eⁱ_ν = k̂^μΣⁱ_{μν}, orthonormal and orthogonal to k, with
/// Σⁱ_{μν} = k̂_μeⁱ_ν − k̂_νeⁱ_μ − εⁱʲᵏeʲ_μeᵏ_ν.
pub fn kbasis_frame(triple: &PerfectTriple, k: &[f64; 4]) -> Result<[[f64; 4]; 3]> {
    let gi = &triple.inv_metric;
    let kup: [f64; 4] = std::array::from_fn(|m| (0..4).map(|n| gi[m][n] * k[n]).sum());
    let norm = (0..4).map(|m| kup[m] * k[m]).sum::<f64>().max(0.0).sqrt();
    if norm < 1e-12 {
        return Err(PlebError::DegenerateK { norm });
    }
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|n| (0..4).map(|m| kup[m] * triple.sigma[i][m][n]).sum::<f64>() / norm)
    }))
}

/// Max-abs residual of the frame reconstruction of Σ.
pub fn kbasis_residual(triple: &PerfectTriple, k: &[f64; 4], e: &[[f64; 4]; 3]) -> f64 {
    let norm = (0..4)
        .map(|m| {
            (0..4)
                .map(|n| triple.inv_metric[m][n] * k[m] * k[n])
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    let kh: [f64; 4] = k.map(|x| x / norm);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for m in 0..4 {
            for n in 0..4 {
                let mut v = kh[m] * e[i][n] - kh[n] * e[i][m];
                for j in 0..3 {
                    for kk in 0..3 {
                        v -= eps3(i, j, kk) as f64 * e[j][m] * e[kk][n];
                    }
                }
                worst = worst.max((v - triple.sigma[i][m][n]).abs());
            }
        }
    }
    worst
}

/// σ(up)*σ(up) + σ(down)σ(down)*, with σ(L)* = −G_in⁻¹σ(L)ᵀG_out.
///
/// `up` maps the domain to the middle space; `down` maps a lower space into
/// the domain. The result is the real symbol of the corresponding second-order
/// operator, so D*D = mΔ shows up as m|k|².
pub fn symbol_square(
    up: &OperatorStencil<f64>,
    down: Option<(&OperatorStencil<f64>, &Mat<f64>)>,
    gram_dom: &Mat<f64>,
    gram_mid: &Mat<f64>,
    k: &[f64; 4],
) -> Result<Mat<f64>> {
    let gd = gram_dom.inverse().ok_or(PlebError::SingularGram)?;
    let s = up.symbol(k);
    let mut out = (&(&gd * &s.transpose()) * &(gram_mid * &s)).scale(&-1.0);
    if let Some((d, gram_low)) = down {
        let gl = gram_low.inverse().ok_or(PlebError::SingularGram)?;
        let sd = d.symbol(k);
        let sd_star = (&(&gl * &sd.transpose()) * gram_dom).scale(&-1.0);
        out = &out + &(&sd * &sd_star);
    }
    Ok(out)
}

/// Unit covectors: `count` uniform on S³, then the 8 signed axes and the 16 corners (±1,±1,±1,±1)/2.
pub fn sample_directions(count: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 24);
    while out.len() < count {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            out.push(v.map(|x| x / n));
        }
    }
    for m in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[m] = s;
            out.push(v);
        }
    }
    for bits in 0..16u32 {
        out.push(std::array::from_fn(|m| {
            if bits & (1 << m) != 0 {
                -0.5
            } else {
                0.5
            }
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma_core::standard_triple;

    #[test]
    fn axis_exactness() {
        let r = exactness_report(&standard_triple(), &[1.0, 0.0, 0.0, 0.0], 1e-10).unwrap();
        assert_eq!(r.ranks, [4, 9, 3]);
        assert!(r.max_principal_angle < 1e-12);
    }

    #[test]
    fn zero_k_rejected() {
        assert!(matches!(
            exactness_report(&standard_triple(), &[0.0; 4], 1e-10),
            Err(PlebError::DegenerateK { .. })
        ));
        assert!(matches!(
            kbasis_frame(&standard_triple(), &[0.0; 4]),
            Err(PlebError::DegenerateK { .. })
        ));
    }

    #[test]
    fn symbol_linear_and_zero() {
        let d3 = pleb_ops(&standard_triple()).d3;
        assert!(symbol_at(&d3, &[0.0; 4]).matrix.is_zero());
        let k = [0.3, -0.1, 0.7, 0.2];
        let a = symbol_at(&d3, &k).matrix.scale(&2.0);
        let b = symbol_at(&d3, &k.map(|x| 2.0 * x)).matrix;
        assert!((&a - &b).max_abs() < 1e-15);
        assert_eq!(rank_info(&b).rank, 3);
    }

    #[test]
    fn kbasis_on_axis() {
        let t = standard_triple();
        let e = kbasis_frame(&t, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(kbasis_residual(&t, &[2.0, 0.0, 0.0, 0.0], &e) < 1e-14);
        for (i, ei) in e.iter().enumerate() {
            assert_eq!(ei[0], 0.0);
            assert_eq!(
                ei.iter().map(|x| x.abs()).sum::<f64>(),
                1.0,
                "e{i} is a signed axis"
            );
        }
    }

    #[test]
    fn negative_control_breaks_exactness() {
        let o = pleb_ops(&standard_triple());
        let broken = o.d2.scale(&0.0);
        let r = exactness_diagnostics(&[&o.d1, &broken, &o.d3], &[0.0, 1.0, 0.0, 0.0], 1e-10);
        assert!(!r.pass);
    }

    #[test]
    fn exactness_at_oblique_covector() {
        let k = [
            0.4434283432424198,
            -0.0912637005000004,
            0.19187983451525434,
            -0.8707607998105608,
        ];
        let r = exactness_report(&standard_triple(), &k, 1e-10).unwrap();
        assert!(r.max_principal_angle < 1e-12, "{r:?}");
    }

    #[test]
    fn rank_info_bases_are_orthonormal_and_consistent() {
        let o = pleb_ops(&standard_triple());
        let k = [0.2, -0.5, 0.7, 0.1];
        let m = o.d2.symbol(&k);
        let info = rank_info(&m);
        assert_eq!(info.rank, 9);
        let a = DMatrix::from_fn(m.rows, m.cols, |i, j| m[(i, j)]);
        assert!((&a * &info.kernel).abs().max() < 1e-13);
        let gram = info.image.transpose() * &info.image;
        assert!((gram - DMatrix::<f64>::identity(9, 9)).abs().max() < 1e-13);
        let proj = &info.image * info.image.transpose();
        assert!((&proj * &a - &a).abs().max() < 1e-13);
    }
}
