//! Lattice layout and Hamiltonian of the two-chain resonator array.
//!
//! The array is a single open chain of `4N + 1` resonators:
//!
//! ```text
//! a1 b1 a2 b2 ... aN bN  Q  A1 B1 A2 B2 ... AN BN
//! 0  1  2  3      2N-2 2N-1 2N 2N+1 ...         4N
//! ```
//!
//! Matrix entries follow `matrix[target, source]`, so the term
//! `J1 b_n^dagger a_n` is stored at `matrix[b_n, a_n]`.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical knobs of the array. `t1` is the energy unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    t1: f64,
    t2: f64,
    delta: f64,
    cells_per_chain: usize,
}

/// Nonreciprocal hoppings derived from `(t1, t2, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub j1: f64,
    pub j1p: f64,
    pub j2: f64,
    pub j2p: f64,
}

impl ModelParams {
    pub fn new(t1: f64, t2: f64, delta: f64, cells_per_chain: usize) -> Result<Self> {
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(Error::invalid(
                "t1",
                format!("must be finite and > 0, got {t1}"),
            ));
        }
        if !t2.is_finite() {
            return Err(Error::invalid("t2", format!("must be finite, got {t2}")));
        }
        if !delta.is_finite() {
            return Err(Error::invalid(
                "delta",
                format!("must be finite, got {delta}"),
            ));
        }
        if cells_per_chain == 0 {
            return Err(Error::invalid("cells_per_chain", "must be >= 1"));
        }
        Ok(Self {
            t1,
            t2,
            delta,
            cells_per_chain,
        })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells_per_chain(&self) -> usize {
        self.cells_per_chain
    }

    /// Same parameters with a different inter-cell amplitude.
    pub fn with_t2(&self, t2: f64) -> Result<Self> {
        Self::new(self.t1, t2, self.delta, self.cells_per_chain)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.t1, self.t2, delta, self.cells_per_chain)
    }

    pub fn couplings(&self) -> Couplings {
        derive_couplings(self)
    }

    pub fn layout(&self) -> SiteLayout {
        SiteLayout::new(self.cells_per_chain)
    }
}

/// `J1 = t1 + delta`, `J1' = t1 - delta`, `J2 = t2 + delta`, `J2' = t2 - delta`.
///
/// `J2'` is kept signed when `t2 < delta`.
pub fn derive_couplings(params: &ModelParams) -> Couplings {
    Couplings {
        j1: params.t1 + params.delta,
        j1p: params.t1 - params.delta,
        j2: params.t2 + params.delta,
        j2p: params.t2 - params.delta,
    }
}

/// Forward and backward hoppings `(J e^lambda, J e^-lambda)` produced by an
/// imaginary gauge field `lambda` on a bond of amplitude `J`.
pub fn gauge_couplings(amplitude: f64, lambda: f64) -> (f64, f64) {
    (amplitude * lambda.exp(), amplitude * (-lambda).exp())
}

/// Inverse of [`gauge_couplings`] for bonds with `fwd * bwd > 0`.
///
/// Returns `(J, lambda)` with `J` carrying the common sign of the pair.
pub fn gauge_from_couplings(fwd: f64, bwd: f64) -> Result<(f64, f64)> {
    if !(fwd * bwd > 0.0) {
        return Err(Error::invalid(
            "couplings",
            format!("gauge form needs fwd * bwd > 0, got {fwd} * {bwd}"),
        ));
    }
    let amplitude = (fwd * bwd).sqrt().copysign(fwd);
    Ok((amplitude, 0.5 * (fwd / bwd).ln()))
}

/// Named resonator in the array. Cell indices are 1-based as in the usual
/// `a_1 ... a_N` labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    A1(usize),
    B1(usize),
    Q,
    A2(usize),
    B2(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::A1(n) => write!(f, "a{n}"),
            Site::B1(n) => write!(f, "b{n}"),
            Site::Q => write!(f, "Q"),
            Site::A2(n) => write!(f, "A{n}"),
            Site::B2(n) => write!(f, "B{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLayout {
    cells_per_chain: usize,
}

impl SiteLayout {
    pub fn new(cells_per_chain: usize) -> Self {
        Self { cells_per_chain }
    }

    pub fn cells_per_chain(&self) -> usize {
        self.cells_per_chain
    }

    pub fn total_sites(&self) -> usize {
        4 * self.cells_per_chain + 1
    }

    pub fn interface(&self) -> usize {
        2 * self.cells_per_chain
    }

    /// Last resonator of the left chain, `b_N`.
    pub fn left_edge(&self) -> usize {
        2 * self.cells_per_chain - 1
    }

    /// First resonator of the right chain, `A_1`.
    pub fn right_edge(&self) -> usize {
        2 * self.cells_per_chain + 1
    }

    pub fn index(&self, site: Site) -> Result<usize> {
        let n = self.cells_per_chain;
        let check = |cell: usize| {
            if (1..=n).contains(&cell) {
                Ok(cell - 1)
            } else {
                Err(Error::invalid(
                    "site",
                    format!("cell {cell} outside 1..={n}"),
                ))
            }
        };
        Ok(match site {
            Site::A1(c) => 2 * check(c)?,
            Site::B1(c) => 2 * check(c)? + 1,
            Site::Q => 2 * n,
            Site::A2(c) => 2 * n + 1 + 2 * check(c)?,
            Site::B2(c) => 2 * n + 2 + 2 * check(c)?,
        })
    }

    pub fn site(&self, index: usize) -> Result<Site> {
        let n = self.cells_per_chain;
        self.check(index)?;
        Ok(if index < 2 * n {
            let cell = index / 2 + 1;
            if index % 2 == 0 {
                Site::A1(cell)
            } else {
                Site::B1(cell)
            }
        } else if index == 2 * n {
            Site::Q
        } else {
            let offset = index - 2 * n - 1;
            let cell = offset / 2 + 1;
            if offset % 2 == 0 {
                Site::A2(cell)
            } else {
                Site::B2(cell)
            }
        })
    }

    pub fn check(&self, index: usize) -> Result<()> {
        if index < self.total_sites() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                site: index,
                total: self.total_sites(),
            })
        }
    }
}

/// Real on-site energy shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub site: usize,
    pub strength: f64,
}

impl Defect {
    pub fn new(site: usize, strength: f64) -> Self {
        Self { site, strength }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: Array2<Complex64>,
    layout: SiteLayout,
    params: ModelParams,
    defects: Vec<Defect>,
}

impl Hamiltonian {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn layout(&self) -> SiteLayout {
        self.layout
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn defects(&self) -> &[Defect] {
        &self.defects
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_defect_free(&self) -> bool {
        self.defects.is_empty()
    }

    /// Same layout and parameters over a replacement matrix, e.g. a transpose
    /// or a hand-built variant.
    pub fn with_matrix(&self, matrix: Array2<Complex64>) -> Result<Hamiltonian> {
        let dim = self.layout.total_sites();
        if matrix.dim() != (dim, dim) {
            return Err(Error::invalid(
                "matrix",
                format!("expected {dim}x{dim}, got {:?}", matrix.dim()),
            ));
        }
        Ok(Hamiltonian {
            matrix,
            layout: self.layout,
            params: self.params,
            defects: self.defects.clone(),
        })
    }

    /// Returns a copy with `strength` added to the diagonal at `defect.site`.
    pub fn apply_defect(&self, defect: Defect) -> Result<Hamiltonian> {
        self.layout.check(defect.site)?;
        let mut out = self.clone();
        out.matrix[[defect.site, defect.site]] += Complex64::new(defect.strength, 0.0);
        out.defects.push(defect);
        Ok(out)
    }
}

pub fn apply_defect(h: &Hamiltonian, defect: Defect) -> Result<Hamiltonian> {
    h.apply_defect(defect)
}

pub fn build_hamiltonian(params: &ModelParams, defects: &[Defect]) -> Result<Hamiltonian> {
    let layout = params.layout();
    for d in defects {
        layout.check(d.site)?;
    }
    let dim = layout.total_sites();
    let n = layout.cells_per_chain();
    let Couplings { j1, j1p, j2, j2p } = params.couplings();

    let mut m = Array2::<Complex64>::zeros((dim, dim));
    let mut set = |target: usize, source: usize, value: f64| {
        m[[target, source]] = Complex64::new(value, 0.0);
    };

    let a = |c: usize| 2 * (c - 1);
    let b = |c: usize| 2 * (c - 1) + 1;
    let big_a = |c: usize| 2 * n + 1 + 2 * (c - 1);
    let big_b = |c: usize| 2 * n + 2 + 2 * (c - 1);
    let q = 2 * n;

    // left chain
    for c in 1..=n {
        set(b(c), a(c), j1);
        set(a(c), b(c), j1p);
        if c < n {
            set(a(c + 1), b(c), j2);
            set(b(c), a(c + 1), j2p);
        }
    }
    // link through Q
    set(q, b(n), j2);
    set(b(n), q, j2p);
    set(big_a(1), q, j2p);
    set(q, big_a(1), j2);
    // right chain, mirrored nonreciprocity
    for c in 1..=n {
        set(big_b(c), big_a(c), j1p);
        set(big_a(c), big_b(c), j1);
        if c < n {
            set(big_a(c + 1), big_b(c), j2p);
            set(big_b(c), big_a(c + 1), j2);
        }
    }

    for d in defects {
        m[[d.site, d.site]] += Complex64::new(d.strength, 0.0);
    }

    Ok(Hamiltonian {
        matrix: m,
        layout,
        params: *params,
        defects: defects.to_vec(),
    })
}
