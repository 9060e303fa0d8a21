//! Perfect triples of 2-forms on flat R⁴, the metric they define, and the
//! quaternionic identities satisfied by the triple.
//!
//! Indices are zero-based in code: μ ∈ {0,1,2,3} stands for {1,2,3,4} and the
//! internal index i ∈ {0,1,2} for {1,2,3}.

use nalgebra::{Matrix4, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{PlebError, Result};
use crate::scalar::{QSqrt2, Scalar};

pub type M4 = [[f64; 4]; 4];

/// Sign of a permutation of `0..n`, zero when entries repeat.
pub fn perm_sign(p: &[usize]) -> i64 {
    let mut s = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0;
            }
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// ε^{ijk} with ε^{123} = +1.
pub fn eps3(i: usize, j: usize, k: usize) -> i64 {
    perm_sign(&[i, j, k])
}

/// Densitized ε̃^{αβγδ} with ε̃^{1234} = +1.
pub fn eps4(a: usize, b: usize, c: usize, d: usize) -> i64 {
    perm_sign(&[a, b, c, d])
}

/// Three 4×4 arrays Σⁱ_{μν} over a scalar type.
#[derive(Clone, Debug, PartialEq)]
pub struct Tri<T> {
    data: Vec<T>,
}

impl<T: Scalar> Tri<T> {
    pub fn zeros() -> Self {
        Tri {
            data: vec![T::zero(); 48],
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(48);
        for i in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    data.push(f(i, m, n));
                }
            }
        }
        Tri { data }
    }

    #[inline]
    pub fn at(&self, i: usize, m: usize, n: usize) -> &T {
        &self.data[i * 16 + m * 4 + n]
    }

    #[inline]
    pub fn set(&mut self, i: usize, m: usize, n: usize, v: T) {
        self.data[i * 16 + m * 4 + n] = v;
    }

    pub fn to_f64(&self) -> Tri<f64> {
        Tri {
            data: self.data.iter().map(|x| x.to_f64()).collect(),
        }
    }

    pub fn to_arrays(&self) -> [M4; 3] {
        let mut s = [[[0.0; 4]; 4]; 3];
        for (i, si) in s.iter_mut().enumerate() {
            for (m, row) in si.iter_mut().enumerate() {
                for (n, x) in row.iter_mut().enumerate() {
                    *x = self.at(i, m, n).to_f64();
                }
            }
        }
        s
    }
}

impl Tri<f64> {
    pub fn from_arrays(s: &[M4; 3]) -> Self {
        Tri::from_fn(|i, m, n| s[i][m][n])
    }
}

/// A perfect triple Σⁱ together with the structures it determines.
#[derive(Clone, Debug)]
pub struct PerfectTriple {
    /// Σⁱ_{μν}, antisymmetric in μν.
    pub sigma: [M4; 3],
    /// g_{μν}.
    pub metric: M4,
    /// g^{μν}.
    pub inv_metric: M4,
    /// v_Σ, defined by Σⁱ∧Σⁱ = 6 v_Σ.
    pub volume: f64,
    /// ε_{μνρσ} = v_Σ · sign(μνρσ).
    pub eps4_lower: Box<[[[[f64; 4]; 4]; 4]; 4]>,
    /// ε^{ijk} with ε^{123} = +1.
    pub eps3: [[[f64; 3]; 3]; 3],
}

/// JSON fixture format: row-major 4×4 arrays.
#[derive(Serialize, Deserialize)]
struct TripleWire {
    sigma: [M4; 3],
    metric: M4,
    volume: f64,
}

impl Serialize for PerfectTriple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TripleWire {
            sigma: self.sigma,
            metric: self.metric,
            volume: self.volume,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PerfectTriple {
    /// The stored metric and volume are recomputed from Σ and must agree with
    /// the recomputed values.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = TripleWire::deserialize(d)?;
        let t = PerfectTriple::from_sigma(w.sigma).map_err(serde::de::Error::custom)?;
        let dev = (0..4)
            .flat_map(|m| (0..4).map(move |n| (m, n)))
            .map(|(m, n)| (t.metric[m][n] - w.metric[m][n]).abs())
            .fold((t.volume - w.volume).abs(), f64::max);
        if dev > 1e-9 * (1.0 + t.volume.abs()) {
            return Err(serde::de::Error::custom(format!(
                "stored metric/volume disagree with the triple by {dev:e}"
            )));
        }
        Ok(t)
    }
}

/// The epsilon-contraction constant κ in R_{μν} = κ g_{μν} v_Σ, where R is the
/// right-hand side of the metric formula with its printed 1/6 prefactor.
/// Measured on the standard triple; see [`metric_formula_rhs`].
pub const METRIC_FORMULA_CONSTANT: f64 = -2.0;

fn e4(a: usize, b: usize) -> M4 {
    let mut m = [[0.0; 4]; 4];
    m[a][b] = 1.0;
    m[b][a] = -1.0;
    m
}

fn add4(a: M4, b: M4) -> M4 {
    let mut m = a;
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] += b[r][c];
        }
    }
    m
}

/// The canonical triple on flat R⁴ with g = identity and v = 1:
/// Σ¹ = e¹∧e² + e³∧e⁴, Σ² = e¹∧e⁴ + e²∧e³, Σ³ = e¹∧e³ + e⁴∧e².
pub fn standard_triple() -> PerfectTriple {
    let sigma = [
        add4(e4(0, 1), e4(2, 3)),
        add4(e4(0, 3), e4(1, 2)),
        add4(e4(0, 2), e4(3, 1)),
    ];
    PerfectTriple::from_sigma(sigma).expect("standard triple is perfect")
}

/// The standard triple's Σ in exact arithmetic.
pub fn standard_sigma<T: Scalar>() -> Tri<T> {
    let s = standard_triple().sigma;
    Tri::from_fn(|i, m, n| T::int(s[i][m][n] as i64))
}

/// ¼ ε̃^{αβγδ} Σⁱ_{αβ} Σʲ_{γδ}, the wedge Gram matrix (Σⁱ∧Σʲ over d⁴x).
pub fn wedge_gram(sigma: &[M4; 3]) -> [[f64; 3]; 3] {
    let mut w = [[0.0; 3]; 3];
    for (i, wi) in w.iter_mut().enumerate() {
        for (j, wij) in wi.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            let e = eps4(a, b, c, d);
                            if e != 0 {
                                acc += e as f64 * sigma[i][a][b] * sigma[j][c][d];
                            }
                        }
                    }
                }
            }
            *wij = 0.25 * acc;
        }
    }
    w
}

/// R_{μν} = (1/6) εⁱʲᵏ Σⁱ_{μα} Σʲ_{νβ} Σᵏ_{γδ} ε̃^{αβγδ}, the printed right-hand side
/// of the metric formula.
pub fn metric_formula_rhs(sigma: &[M4; 3]) -> M4 {
    let mut r = [[0.0; 4]; 4];
    for (m, rm) in r.iter_mut().enumerate() {
        for (n, rmn) in rm.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let e3 = eps3(i, j, k);
                        if e3 == 0 {
                            continue;
                        }
                        for a in 0..4 {
                            for b in 0..4 {
                                for c in 0..4 {
                                    for d in 0..4 {
                                        let e = eps4(a, b, c, d);
                                        if e != 0 {
                                            acc += (e3 * e) as f64
                                                * sigma[i][m][a]
                                                * sigma[j][n][b]
                                                * sigma[k][c][d];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            *rmn = acc / 6.0;
        }
    }
    r
}

fn to_na(m: &M4) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| m[r][c])
}

fn from_na(m: &Matrix4<f64>) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
    }
    out
}

fn max_abs_m4(m: &M4) -> f64 {
    m.iter().flatten().fold(0.0, |a: f64, x| a.max(x.abs()))
}

/// Recovers (g, v) from a triple. The volume comes from the wedge Gram,
/// Σⁱ∧Σⁱ = 6v; the metric from the ε-contraction R = κ g v with the measured
/// constant [`METRIC_FORMULA_CONSTANT`].
pub fn metric_from_triple(sigma: &[M4; 3]) -> Result<(M4, f64)> {
    let w = wedge_gram(sigma);
    let v = (w[0][0] + w[1][1] + w[2][2]) / 6.0;
    let scale = sigma.iter().map(max_abs_m4).fold(0.0, f64::max).max(1.0);
    let mut deviation: f64 = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wij) in wi.iter().enumerate() {
            let target = if i == j { 2.0 * v } else { 0.0 };
            deviation = deviation.max((wij - target).abs());
        }
    }
    if deviation > 1e-9 * scale * scale || v <= 0.0 {
        return Err(PlebError::NotPerfect {
            deviation: deviation.max(if v <= 0.0 { v.abs() } else { 0.0 }),
        });
    }
    let r = metric_formula_rhs(sigma);
    let mut g = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            g[m][n] = 0.5 * (r[m][n] + r[n][m]) / (METRIC_FORMULA_CONSTANT * v);
        }
    }
    let eig = SymmetricEigen::new(to_na(&g));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(PlebError::NotRiemannian);
    }
    Ok((g, v))
}

impl PerfectTriple {
    /// Builds the triple and all derived structures from Σ.
    pub fn from_sigma(sigma: [M4; 3]) -> Result<Self> {
        let (metric, volume) = metric_from_triple(&sigma)?;
        let inv = to_na(&metric)
            .try_inverse()
            .ok_or(PlebError::NotRiemannian)?;
        let mut eps = Box::new([[[[0.0; 4]; 4]; 4]; 4]);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        eps[a][b][c][d] = volume * eps4(a, b, c, d) as f64;
                    }
                }
            }
        }
        let mut e3 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    e3[i][j][k] = eps3(i, j, k) as f64;
                }
            }
        }
        Ok(PerfectTriple {
            sigma,
            metric,
            inv_metric: from_na(&inv),
            volume,
            eps4_lower: eps,
            eps3: e3,
        })
    }

    /// Σⁱ_μ{}^ν = Σⁱ_{μα} g^{αν}.
    pub fn mixed(&self) -> [M4; 3] {
        let mut out = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    out[i][m][n] = (0..4)
                        .map(|a| self.sigma[i][m][a] * self.inv_metric[a][n])
                        .sum();
                }
            }
        }
        out
    }

    /// Σ^{iμν} with both indices raised.
    pub fn raised(&self) -> [M4; 3] {
        let mut out = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    let mut acc = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            acc +=
                                self.inv_metric[m][a] * self.sigma[i][a][b] * self.inv_metric[b][n];
                        }
                    }
                    out[i][m][n] = acc;
                }
            }
        }
        out
    }

    /// An orthonormal coframe: g = Eᵀ E with E upper triangular.
    pub fn frame(&self) -> Frame {
        let chol = to_na(&self.metric)
            .cholesky()
            .expect("metric is positive definite");
        let e = chol.l().transpose();
        let e_inv = e.try_inverse().expect("frame is invertible");
        let sigma = Tri::from_fn(|i, a, b| {
            let mut acc = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    acc += e_inv[(m, a)] * self.sigma[i][m][n] * e_inv[(n, b)];
                }
            }
            acc
        });
        Frame {
            e: from_na(&e),
            e_inv: from_na(&e_inv),
            sigma,
        }
    }

    /// Exact frame components of Σ when they are all integers of size ≤ 1
    /// (true for the standard triple and its signed permutations).
    pub fn exact_frame_sigma(&self) -> Option<Tri<QSqrt2>> {
        if max_abs_m4(&from_na(&(to_na(&self.metric) - Matrix4::identity()))) > 0.0 {
            return None;
        }
        let mut ok = true;
        let t = Tri::from_fn(|i, m, n| {
            let x = self.sigma[i][m][n];
            if x != 0.0 && x != 1.0 && x != -1.0 {
                ok = false;
            }
            QSqrt2::int(x as i64)
        });
        ok.then_some(t)
    }

    /// Whether this is exactly the standard triple.
    pub fn is_standard(&self) -> bool {
        self.sigma == standard_triple().sigma
    }
}

/// Orthonormal coframe data: θ^a = E^a{}_μ dx^μ and the frame components of Σ.
#[derive(Clone, Debug)]
pub struct Frame {
    pub e: M4,
    pub e_inv: M4,
    pub sigma: Tri<f64>,
}

/// Σ′ⁱ_{μν} = M_μ{}^α M_ν{}^β Σⁱ_{αβ}, with metric and volume recomputed.
pub fn gl4_pullback(triple: &PerfectTriple, m: &M4) -> Result<PerfectTriple> {
    let mm = to_na(m);
    let det = mm.determinant();
    let scale = max_abs_m4(m).max(1e-300);
    if det.abs() <= 1e-12 * scale.powi(4) {
        return Err(PlebError::SingularMatrix { det });
    }
    if det < 0.0 {
        return Err(PlebError::OrientationError { det });
    }
    let mut sigma = [[[0.0; 4]; 4]; 3];
    for i in 0..3 {
        let s = to_na(&triple.sigma[i]);
        sigma[i] = from_na(&(mm * s * mm.transpose()));
    }
    PerfectTriple::from_sigma(sigma)
}

/// Max-abs residuals of the identity families satisfied by a perfect triple.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityResiduals {
    pub algebra: f64,
    pub sigma_sigma: f64,
    pub sigma_sigma_epsilon_1: f64,
    pub sigma_sigma_epsilon_2: f64,
    pub perfectness: f64,
    /// Residual of R_{μν} − κ g_{μν} v with the fitted κ.
    pub metric: f64,
    /// The fitted κ; [`METRIC_FORMULA_CONSTANT`] for every perfect triple.
    pub metric_constant: f64,
    /// Σⁱ_μ{}^α Σⁱ_α{}^μ + 12.
    pub trace: f64,
}

impl IdentityResiduals {
    pub fn max_identity(&self) -> f64 {
        [
            self.algebra,
            self.sigma_sigma,
            self.sigma_sigma_epsilon_1,
            self.sigma_sigma_epsilon_2,
            self.perfectness,
            self.metric,
            self.trace,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates every identity family componentwise.
pub fn identity_residuals(t: &PerfectTriple) -> IdentityResiduals {
    let s = &t.sigma;
    let g = &t.metric;
    let mx = t.mixed();
    let up = t.raised();
    let v = t.volume;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    let mut algebra: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for m in 0..4 {
                for n in 0..4 {
                    let lhs: f64 = (0..4).map(|a| mx[i][m][a] * mx[j][a][n]).sum();
                    let mut rhs = -delta(i, j) * delta(m, n);
                    for k in 0..3 {
                        rhs += eps3(i, j, k) as f64 * mx[k][m][n];
                    }
                    algebra = algebra.max((lhs - rhs).abs());
                }
            }
        }
    }

    let mut ss: f64 = 0.0;
    let mut sse1: f64 = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            for r in 0..4 {
                for q in 0..4 {
                    let lhs: f64 = (0..3).map(|i| s[i][m][n] * s[i][r][q]).sum();
                    let rhs = g[m][r] * g[n][q] - g[m][q] * g[n][r] + t.eps4_lower[m][n][r][q];
                    ss = ss.max((lhs - rhs).abs());
                    for i in 0..3 {
                        let mut l = 0.0;
                        for j in 0..3 {
                            for k in 0..3 {
                                let e = eps3(i, j, k);
                                if e != 0 {
                                    l += e as f64 * s[j][m][n] * s[k][r][q];
                                }
                            }
                        }
                        // −2Σ_{[μ|ρ|}g_{ν]σ} + 2Σ_{[μ|σ|}g_{ν]ρ}
                        let rr = -(s[i][m][r] * g[n][q] - s[i][n][r] * g[m][q])
                            + (s[i][m][q] * g[n][r] - s[i][n][q] * g[m][r]);
                        sse1 = sse1.max((l - rr).abs());
                    }
                }
            }
        }
    }

    // ε^{μνρα} Σⁱ_{σα} = δ_σ^ρ Σ^{iμν} + δ_σ^μ Σ^{iνρ} + δ_σ^ν Σ^{iρμ}, with ε^{1234} = 1/v.
    let mut sse2: f64 = 0.0;
    for i in 0..3 {
        for m in 0..4 {
            for n in 0..4 {
                for r in 0..4 {
                    for q in 0..4 {
                        let lhs: f64 = (0..4)
                            .map(|a| eps4(m, n, r, a) as f64 / v * s[i][q][a])
                            .sum();
                        let rhs = delta(q, r) * up[i][m][n]
                            + delta(q, m) * up[i][n][r]
                            + delta(q, n) * up[i][r][m];
                        sse2 = sse2.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }

    let w = wedge_gram(s);
    let mut perf: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            perf = perf.max((w[i][j] - 2.0 * delta(i, j) * v).abs());
        }
    }

    let r = metric_formula_rhs(s);
    let (mut num, mut den) = (0.0, 0.0);
    for m in 0..4 {
        for n in 0..4 {
            num += r[m][n] * g[m][n] * v;
            den += (g[m][n] * v).powi(2);
        }
    }
    let kappa = num / den;
    let mut metric: f64 = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            metric = metric.max((r[m][n] - kappa * g[m][n] * v).abs());
        }
    }

    let mut tr = 0.0;
    for i in 0..3 {
        for m in 0..4 {
            for a in 0..4 {
                tr += mx[i][m][a] * mx[i][a][m];
            }
        }
    }

    IdentityResiduals {
        algebra,
        sigma_sigma: ss,
        sigma_sigma_epsilon_1: sse1,
        sigma_sigma_epsilon_2: sse2,
        perfectness: perf,
        metric,
        metric_constant: kappa,
        trace: (tr + 12.0).abs(),
    }
}

/// Tolerance scale for identity residuals: max-abs of the inputs.
pub fn input_scale(t: &PerfectTriple) -> f64 {
    let s = t.sigma.iter().map(max_abs_m4).fold(0.0, f64::max);
    s.max(max_abs_m4(&t.metric))
        .max(t.volume)
        .max(max_abs_m4(&t.inv_metric))
        .max(1.0)
}

/// Seeded orientation-preserving matrix `I + scale·N(0,1)`, with the first
/// row negated when the determinant comes out negative.
pub fn random_gl4(seed: u64, scale: f64) -> M4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = if i == j { 1.0 } else { 0.0 } + scale * z;
        }
    }
    if Matrix4::from_fn(|i, j| m[i][j]).determinant() < 0.0 {
        for x in m[0].iter_mut() {
            *x = -*x;
        }
    }
    m
}

/// Pullback of the standard triple by [`random_gl4`].
pub fn random_pullback(seed: u64, scale: f64) -> Result<PerfectTriple> {
    gl4_pullback(&standard_triple(), &random_gl4(seed, scale))
}
