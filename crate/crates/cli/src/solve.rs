//! Exact coefficient solvers behind `solve <what>`. Each solution is checked
//! through the relevant residual operations before it is returned.

use anyhow::{bail, Result};
use pleb_core::coefficient_lab::{
    adjoint_formula_disagreements, adjoint_from_inner, composition_residuals, delta_conditions,
    family_stencils_generic, pairing_residuals, solve_b, solve_inner_products,
    AdjointCoefficientSet, CoefficientSet, InnerProductSet,
};
use pleb_core::scalar::Zero;
use pleb_core::sigma_core::{standard_sigma, standard_triple};
use pleb_core::QSqrt2;

type Q = QSqrt2;

/// Parses a comma-separated list of exactly `len` rational+√2 literals.
pub fn parse_list(s: &str, len: usize) -> std::result::Result<Vec<Q>, String> {
    let v: Vec<Q> = s
        .split(',')
        .map(|x| Q::parse(x.trim()).map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != len {
        return Err(format!(
            "expected {len} comma-separated values, found {}",
            v.len()
        ));
    }
    Ok(v)
}

pub fn join(xs: &[Q]) -> String {
    xs.iter().map(Q::pretty).collect::<Vec<_>>().join(", ")
}

/// b₁..b₅ for given a, c and b₁, verified to make d₂d₁ and d₃d₂ vanish.
pub fn b_coeffs(a: &[Q; 3], c: &[Q; 2], b1: &Q) -> Result<CoefficientSet> {
    let [b2, b3, b4, b5] = solve_b(&a[0], &a[1], &a[2], &c[0], &c[1], b1)?;
    let set = CoefficientSet {
        a: a.clone(),
        b: [b1.clone(), b2, b3, b4, b5],
        c: c.clone(),
        f: Q::zero(),
    };
    let (r1, r2) = composition_residuals(&set);
    if !r1.iter().chain(r2.iter()).all(Q::is_zero) {
        bail!("composition residuals do not vanish");
    }
    let fam = family_stencils_generic(&standard_sigma::<Q>(), &set, &AdjointCoefficientSet::zero());
    if !fam.d2.compose(&fam.d1).is_zero() || !fam.d3.compose(&fam.d2).is_zero() {
        bail!("composed stencils do not vanish");
    }
    Ok(set)
}

pub fn format_b(set: &CoefficientSet) -> String {
    format!("b = {}", join(&set.b))
}

/// Inner products making D*D a Laplacian multiple, verified through the Δ-conditions.
pub fn inner_products(
    c: &CoefficientSet,
    beta3: &Q,
    gamma2: &Q,
) -> Result<(InnerProductSet, [Q; 4])> {
    let ip = solve_inner_products(c, beta3, gamma2)?;
    let cp = adjoint_from_inner(c, &ip)?;
    let dc = delta_conditions(c, &cp);
    if !dc.holds() {
        bail!("solved inner products violate the Laplace conditions");
    }
    Ok((ip, dc.multipliers))
}

pub fn format_inner_products(ip: &InnerProductSet, multipliers: &[Q; 4]) -> String {
    let InnerProductSet {
        beta1,
        beta2,
        beta3,
        gamma1,
        gamma2,
    } = ip;
    format!(
        "beta = ({}, {}, {}), gamma = ({}, {})\n<s, s> = ({}) h^2 + ({}) (h^i)^2 + ({}) (h~_mn)^2\n<a, a> = ({}) a^2 - ({}) a.J1(a)\nLaplacian coefficients (h, h^i, h~, chi) = ({})",
        beta1.pretty(),
        beta2.pretty(),
        beta3.pretty(),
        gamma1.pretty(),
        gamma2.pretty(),
        beta1.pretty(),
        beta2.pretty(),
        beta3.pretty(),
        gamma1.pretty(),
        gamma2.pretty(),
        join(multipliers),
    )
}

/// Adjoint coefficients, verified by exact stencil adjoints and by lattice pairing.
pub fn adjoints(
    c: &CoefficientSet,
    ip: &InnerProductSet,
    n: usize,
    seed: u64,
) -> Result<(AdjointCoefficientSet, f64)> {
    let cp = adjoint_from_inner(c, ip)?;
    let bad = adjoint_formula_disagreements(c, ip)?;
    if !bad.is_empty() {
        bail!(
            "adjoint formulas disagree with the Gram adjoint for {}",
            bad.join(", ")
        );
    }
    let r = pairing_residuals(&standard_triple(), c, ip, 3, seed, n)?
        .into_iter()
        .fold(0.0, f64::max);
    if r > 1e-10 {
        bail!("lattice pairing residual {r:e} exceeds 1e-10");
    }
    Ok((cp, r))
}

pub fn format_adjoints(cp: &AdjointCoefficientSet, residual: f64) -> String {
    format!(
        "a' = {}\nb' = {}\nc' = {}\nf' = {}\nlattice pairing residual {:.2e}",
        join(&cp.ap),
        join(&cp.bp),
        join(&cp.cp),
        cp.fp.pretty(),
        residual
    )
}
