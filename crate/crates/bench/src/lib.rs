//! Shared inputs for the criterion benchmarks.

use pleb_core::lattice::{random_field, LatticeField};
use pleb_core::plebanski_ops::{pleb_ops, PlebanskiOps};
use pleb_core::sigma_core::standard_triple;
use pleb_core::twisted::{build_d_tilde, DIM_TWISTED};
use pleb_core::{OperatorStencil, PerfectTriple};

/// Operators, fields and covectors for one lattice size.
pub struct Fixture {
    pub triple: PerfectTriple,
    pub ops: PlebanskiOps<f64>,
    pub d_tilde: OperatorStencil<f64>,
    pub twisted_field: LatticeField,
    pub s_field: LatticeField,
}

impl Fixture {
    pub fn new(n: usize) -> Self {
        let triple = standard_triple();
        let ops = pleb_ops(&triple);
        let d_tilde = build_d_tilde(&triple).stencil();
        let twisted_field = random_field(DIM_TWISTED, n, 1).expect("valid grid");
        let s_field = random_field(ops.d1.out_dim, n, 2).expect("valid grid");
        Fixture {
            triple,
            ops,
            d_tilde,
            twisted_field,
            s_field,
        }
    }
}
