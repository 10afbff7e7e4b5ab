//! Complex spectra, localization measures and the closed-form zero modes.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_hamiltonian, Hamiltonian, ModelParams, SiteLayout};

/// Default tolerance for counting zero-energy modes.
pub const ZERO_MODE_TOL: f64 = 1e-6;

/// Residual bound `|H v - E v| <= RESIDUAL_TOL * |H|_F` for every eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by real part, ties by imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` pairs with `eigenvalues[k]`; unit 2-norm.
    pub right_eigenvectors: Array2<Complex64>,
    /// `|V|_1 |V^-1|_1`, infinite when the eigenvectors are linearly dependent.
    pub eigvec_condition: f64,
    /// Largest `|H v - E v|_2` over all pairs.
    pub max_residual: f64,
    /// Frobenius norm of the decomposed matrix.
    pub matrix_norm: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.right_eigenvectors.column(k).to_vec()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn residual_ok(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL * self.matrix_norm.max(f64::MIN_POSITIVE)
    }

    /// The eigenvalue closest to `z`.
    pub fn closest(&self, z: Complex64) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
    }
}

pub fn eig(h: &Hamiltonian) -> Result<Spectrum> {
    eig_matrix(h.matrix())
}

pub fn eig_matrix(m: &Array2<Complex64>) -> Result<Spectrum> {
    let decomposition = linalg::eig(m)?;
    let n = decomposition.values.len();
    let mut max_residual: f64 = 0.0;
    for k in 0..n {
        let v = decomposition.vectors.column(k).to_vec();
        let hv = linalg::matvec(m, &v);
        let e = decomposition.values[k];
        let r = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - e * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    let eigvec_condition = if n == 0 {
        1.0
    } else {
        linalg::condition_1(&decomposition.vectors)
    };
    Ok(Spectrum {
        eigenvalues: decomposition.values,
        right_eigenvectors: decomposition.vectors,
        eigvec_condition,
        max_residual,
        matrix_norm: linalg::frobenius(m),
    })
}

/// Inverse participation ratio `sum |psi_j|^4 / (sum |psi_j|^2)^2`.
pub fn ipr(state: &[Complex64]) -> Result<f64> {
    let weights: Vec<f64> = state.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    // scale first so the fourth powers cannot underflow or overflow
    let peak = weights.iter().copied().fold(0.0, f64::max);
    let scaled = weights.iter().map(|w| w / peak);
    let (s2, s4) = scaled.fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    Ok(s4 / (s2 * s2))
}

/// Rule for deciding that an eigenvalue is a zero-energy mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroModeCriterion {
    /// `|Re E| < tol`: the mode sits at zero in the real-part spectrum, which
    /// is how the near-degenerate interface modes show up when the spectrum
    /// is complex.
    #[default]
    RealPart,
    /// `|E| < tol`.
    Modulus,
}

impl ZeroModeCriterion {
    pub fn accepts(self, e: Complex64, tol: f64) -> bool {
        match self {
            ZeroModeCriterion::RealPart => e.re.abs() < tol,
            ZeroModeCriterion::Modulus => e.norm() < tol,
        }
    }
}

/// Indices of zero-energy modes under the default real-part rule.
pub fn zero_modes(spec: &Spectrum, tol: f64) -> Vec<usize> {
    zero_modes_by(spec, tol, ZeroModeCriterion::default())
}

pub fn zero_modes_by(spec: &Spectrum, tol: f64, criterion: ZeroModeCriterion) -> Vec<usize> {
    spec.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, e)| criterion.accepts(**e, tol))
        .map(|(k, _)| k)
        .collect()
}

/// Closed-form interface zero mode of the defect-free array.
///
/// The state lives on the even global indices (`a_n`, `Q`, `B_n`) and is
/// generated from the `H psi = 0` recursion: successive amplitudes from `a_1`
/// toward `Q` grow by `r = -(t1 + delta)/(t2 - delta)` and the right chain
/// mirrors the left. Returned with unit norm.
pub fn analytic_zero_mode(params: &ModelParams) -> Result<Vec<Complex64>> {
    let c = params.couplings();
    if c.j2p == 0.0 {
        return Err(Error::SingularParameter(format!(
            "t2 = delta = {} makes the interface-mode ratio infinite",
            params.delta()
        )));
    }
    let ratio = -c.j1 / c.j2p;
    let layout = params.layout();
    let n = layout.cells_per_chain() as i32;

    // exponent of r for the k-th even site counted from a_1 (k = 0..=2N)
    let exponent = |k: i32| if k <= n { k } else { 2 * n - k };
    // factor out the largest power so nothing overflows
    let shift = if ratio.abs() > 1.0 { n } else { 0 };

    let mut psi = vec![Complex64::new(0.0, 0.0); layout.total_sites()];
    for k in 0..=2 * n {
        let amp = if ratio == 0.0 {
            if exponent(k) == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            ratio.powi(exponent(k) - shift)
        };
        psi[2 * k as usize] = Complex64::new(amp, 0.0);
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in psi.iter_mut() {
        *z /= norm;
    }
    Ok(psi)
}

/// Bound zero modes at `J1' = J2' = 0`: the first is antisymmetric on
/// `(b_N, A_1)`, the second sits on `Q` alone.
pub fn analytic_bound_modes(params: &ModelParams) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let c = params.couplings();
    let scale = params.t1().abs().max(params.delta().abs()).max(1.0);
    if c.j1p.abs() > 1e-12 * scale {
        return Err(Error::BoundModePrecondition {
            coupling: "J1'",
            value: c.j1p,
        });
    }
    if c.j2p.abs() > 1e-12 * scale {
        return Err(Error::BoundModePrecondition {
            coupling: "J2'",
            value: c.j2p,
        });
    }
    let layout = params.layout();
    let zero = Complex64::new(0.0, 0.0);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let mut edge_pair = vec![zero; layout.total_sites()];
    edge_pair[layout.left_edge()] = Complex64::new(amp, 0.0);
    edge_pair[layout.right_edge()] = Complex64::new(-amp, 0.0);
    let mut interface = vec![zero; layout.total_sites()];
    interface[layout.interface()] = Complex64::new(1.0, 0.0);
    Ok((edge_pair, interface))
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub t2: f64,
    pub eigenvalues: Vec<Complex64>,
    pub iprs: Vec<f64>,
    pub zero_mode_count: usize,
    pub max_abs_imag: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t2).collect()
    }
}

/// Spectrum of the defect-free array at each `t2` on `grid`.
pub fn sweep_t2(base: &ModelParams, grid: &[f64], tol: f64) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "sweep grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "grid",
            "sweep grid must be strictly increasing",
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "zero-mode tolerance must be > 0"));
    }
    let points = grid
        .par_iter()
        .map(|&t2| {
            sweep_point(base, t2, tol).map_err(|e| Error::AtCoupling {
                t2,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points })
}

fn sweep_point(base: &ModelParams, t2: f64, tol: f64) -> Result<SweepPoint> {
    let h = build_hamiltonian(&base.with_t2(t2)?, &[])?;
    let spec = eig(&h)?;
    let iprs = (0..spec.dim())
        .map(|k| ipr(&spec.eigenvector(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepPoint {
        t2,
        zero_mode_count: zero_modes(&spec, tol).len(),
        max_abs_imag: spec.max_abs_imag(),
        eigenvalues: spec.eigenvalues,
        iprs,
    })
}

/// Eigenvector bins by where each state peaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeClassification {
    /// Peak at the interface resonator `Q`.
    pub type1_indices: Vec<usize>,
    /// Peak at `b_N` or `A_1`.
    pub type2_indices: Vec<usize>,
    pub other_indices: Vec<usize>,
}

/// Site of the largest-magnitude component; lowest index wins ties.
pub fn peak_site(v: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_abs {
            best = i;
            best_abs = m;
        }
    }
    best
}

pub fn classify_localization(spec: &Spectrum, layout: &SiteLayout) -> ModeClassification {
    let mut out = ModeClassification {
        type1_indices: Vec::new(),
        type2_indices: Vec::new(),
        other_indices: Vec::new(),
    };
    let q = layout.interface();
    // degenerate single-resonator layouts have no b_N / A_1 pair
    let edges = if layout.total_sites() > 1 {
        Some((layout.left_edge(), layout.right_edge()))
    } else {
        None
    };
    for k in 0..spec.dim() {
        let site = peak_site(&spec.eigenvector(k));
        if site == q {
            out.type1_indices.push(k);
        } else if edges.is_some_and(|(l, r)| site == l || site == r) {
            out.type2_indices.push(k);
        } else {
            out.other_indices.push(k);
        }
    }
    out
}

/// Tridiagonal matrix after the diagonal similarity that equalizes each bond.
#[derive(Debug, Clone)]
pub struct Symmetrized {
    /// Complex symmetric in general; Hermitian when `valid`.
    pub matrix: Array2<Complex64>,
    /// True iff every bond product `fwd * bwd` is positive.
    pub valid: bool,
    /// Diagonal of the similarity `S` with `matrix = S^-1 H S`.
    pub scaling: Vec<Complex64>,
}

impl Symmetrized {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|i| self.matrix[[i, i]].re)
            .collect()
    }

    pub fn hoppings(&self) -> Vec<Complex64> {
        (1..self.matrix.nrows())
            .map(|i| self.matrix[[i, i - 1]])
            .collect()
    }

    /// Real spectrum of the Hermitian form by bisection. `None` unless `valid`.
    pub fn real_eigenvalues(&self) -> Option<Vec<f64>> {
        if !self.valid {
            return None;
        }
        let off: Vec<f64> = self.hoppings().iter().map(|z| z.re).collect();
        Some(linalg::symmetric_tridiagonal_eigenvalues(
            &self.diagonal(),
            &off,
        ))
    }
}

/// Remove the imaginary gauge field bond by bond.
///
/// With `S = diag(s)` and `s_{i+1} = s_i sqrt(fwd_i / bwd_i)`, the transformed
/// hopping on bond `i` is `sqrt(fwd_i * bwd_i)`. When a product is negative the
/// square root is imaginary, the output is complex symmetric and `valid` is
/// false; it is still isospectral to `H`.
pub fn symmetrize(h: &Hamiltonian) -> Result<Symmetrized> {
    let m = h.matrix();
    let n = m.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let mut scaling = vec![Complex64::new(1.0, 0.0); n];
    let mut out = Array2::<Complex64>::zeros((n, n));
    let mut valid = true;
    for i in 0..n {
        out[[i, i]] = m[[i, i]];
        if m[[i, i]].im != 0.0 {
            valid = false;
        }
    }
    for i in 0..n.saturating_sub(1) {
        let fwd = m[[i + 1, i]];
        let bwd = m[[i, i + 1]];
        if fwd == zero || bwd == zero {
            return Err(Error::ZeroBond(i, i + 1));
        }
        let product = fwd * bwd;
        if !(product.im == 0.0 && product.re > 0.0) {
            valid = false;
        }
        let hop = product.sqrt();
        // s_{i+1} chosen so fwd * s_i / s_{i+1} = hop
        scaling[i + 1] = scaling[i] * fwd / hop;
        out[[i + 1, i]] = hop;
        out[[i, i + 1]] = hop;
    }
    Ok(Symmetrized {
        matrix: out,
        valid,
        scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Defect;
    use proptest::prelude::*;

    fn params(t1: f64, t2: f64, delta: f64, n: usize) -> ModelParams {
        ModelParams::new(t1, t2, delta, n).unwrap()
    }

    fn spectrum(t1: f64, t2: f64, delta: f64, n: usize) -> Spectrum {
        eig(&build_hamiltonian(&params(t1, t2, delta, n), &[]).unwrap()).unwrap()
    }

    fn residual_norm(h: &Hamiltonian, psi: &[Complex64]) -> f64 {
        linalg::matvec(h.matrix(), psi)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance in a greedy nearest-neighbour matching of `a` to `b`.
    fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn single_site_spectrum() {
        let m = Array2::from_elem((1, 1), Complex64::new(0.3, 0.0));
        let s = eig_matrix(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![Complex64::new(0.3, 0.0)]);
        assert_eq!(s.right_eigenvectors[[0, 0]], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn hermitian_limit_is_real() {
        let s = spectrum(1.0, 1.0, 0.0, 5);
        assert!(s.max_abs_imag() < 1e-9);
        assert!(s.residual_ok());
    }

    #[test]
    fn nilpotent_limit_all_zero() {
        let s = spectrum(1.0, 1.0, 1.0, 5);
        assert_eq!(s.dim(), 21);
        for e in &s.eigenvalues {
            assert!(e.norm() < 1e-7, "{e}");
        }
    }

    #[test]
    fn spectrum_invariants_on_paper_parameters() {
        for t2 in [0.0, 0.5, 1.0] {
            let s = spectrum(1.0, t2, 0.8, 5);
            assert!(s.residual_ok(), "t2={t2}: residual {}", s.max_residual);
            for k in 0..s.dim() {
                let n = linalg::norm2(s.right_eigenvectors.column(k));
                assert!((n - 1.0).abs() < 1e-12);
            }
            for w in s.eigenvalues.windows(2) {
                assert!(linalg::compare_eigenvalues(w[0], w[1]).is_le());
            }
        }
    }

    #[test]
    fn zero_mode_counts_from_captions() {
        assert_eq!(zero_modes(&spectrum(1.0, 0.0, 0.8, 5), 1e-6).len(), 3);
        assert_eq!(zero_modes(&spectrum(1.0, 0.5, 0.8, 5), 1e-6).len(), 3);
        assert_eq!(zero_modes(&spectrum(1.0, 1.0, 0.8, 5), 1e-6).len(), 1);
    }

    #[test]
    fn modulus_rule_sees_only_the_exact_zero() {
        // the other two "zero modes" at t2 = 0.5 are a purely imaginary pair
        let s = spectrum(1.0, 0.5, 0.8, 5);
        assert_eq!(zero_modes_by(&s, 1e-6, ZeroModeCriterion::Modulus).len(), 1);
        let idx = zero_modes(&s, 1e-6);
        let imag: Vec<f64> = idx.iter().map(|&k| s.eigenvalues[k].im).collect();
        assert!(imag.iter().filter(|v| v.abs() > 0.1).count() == 2);
    }

    #[test]
    fn ipr_edge_cases() {
        let mut unit = vec![Complex64::new(0.0, 0.0); 21];
        unit[4] = Complex64::new(0.0, 2.0);
        assert!((ipr(&unit).unwrap() - 1.0).abs() < 1e-15);
        let uniform = vec![Complex64::new(1.0, 0.0); 21];
        assert!((ipr(&uniform).unwrap() - 1.0 / 21.0).abs() < 1e-15);
        assert_eq!(ipr(&[Complex64::new(0.0, 0.0); 3]), Err(Error::ZeroVector));
    }

    #[test]
    fn ipr_of_analytic_mode_by_direct_sum() {
        // amplitudes 6^k on even sites, k = 0..5..0, computed independently
        let amps: Vec<f64> = [0, 1, 2, 3, 4, 5, 4, 3, 2, 1, 0]
            .iter()
            .map(|&k| 6f64.powi(k))
            .collect();
        let s2: f64 = amps.iter().map(|a| a * a).sum();
        let s4: f64 = amps.iter().map(|a| a.powi(4)).sum();
        let expected = s4 / (s2 * s2);
        let psi = analytic_zero_mode(&params(1.0, 0.5, 0.8, 5)).unwrap();
        let got = ipr(&psi).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!(got > 0.85, "{got}");
    }

    #[test]
    fn analytic_mode_ratio_and_support() {
        let p = params(1.0, 0.5, 0.8, 5);
        let psi = analytic_zero_mode(&p).unwrap();
        for i in (1..21).step_by(2) {
            assert_eq!(psi[i], Complex64::new(0.0, 0.0));
        }
        let a1 = psi[0].re;
        let expected = [1.0, 6.0, 36.0, 216.0, 1296.0, 7776.0];
        for (k, e) in expected.iter().enumerate() {
            assert!((psi[2 * k].re / a1 - e).abs() < 1e-9 * e);
        }
        for k in 0..=10 {
            assert!((psi[2 * k] - psi[20 - 2 * k]).norm() < 1e-15);
        }
        let h = build_hamiltonian(&p, &[]).unwrap();
        assert!(residual_norm(&h, &psi) < 1e-10);

        let psi = analytic_zero_mode(&params(1.0, 0.0, 0.8, 5)).unwrap();
        assert!((psi[2].re / psi[0].re - 2.25).abs() < 1e-12);
    }

    #[test]
    fn analytic_mode_matches_numerical_null_vector() {
        // at t2 = 1 there is a single zero mode; compare up to phase
        let p = params(1.0, 1.0, 0.8, 5);
        let s = eig(&build_hamiltonian(&p, &[]).unwrap()).unwrap();
        let k = zero_modes(&s, 1e-6)[0];
        let v = s.eigenvector(k);
        let psi = analytic_zero_mode(&p).unwrap();
        let overlap: Complex64 = v.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8, "{overlap}");
    }

    #[test]
    fn analytic_mode_singular_at_t2_eq_delta() {
        assert!(matches!(
            analytic_zero_mode(&params(1.0, 0.8, 0.8, 5)),
            Err(Error::SingularParameter(_))
        ));
    }

    #[test]
    fn bound_modes_in_nilpotent_limit() {
        let p = params(1.0, 1.0, 1.0, 5);
        let h = build_hamiltonian(&p, &[]).unwrap();
        let (edge, q) = analytic_bound_modes(&p).unwrap();
        assert_eq!(q[10], Complex64::new(1.0, 0.0));
        assert_eq!(edge[9].norm(), std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(edge[11].norm(), std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(edge.iter().filter(|z| z.norm() > 0.0).count(), 2);
        assert_eq!(residual_norm(&h, &q), 0.0);
        assert_eq!(residual_norm(&h, &edge), 0.0);
    }

    #[test]
    fn bound_modes_reject_nonzero_backward_coupling() {
        let err = analytic_bound_modes(&params(1.0, 1.0, 0.8, 5)).unwrap_err();
        assert!(matches!(
            err,
            Error::BoundModePrecondition {
                coupling: "J1'",
                ..
            }
        ));
        let err = analytic_bound_modes(&params(1.0, 0.5, 1.0, 5)).unwrap_err();
        assert!(matches!(
            err,
            Error::BoundModePrecondition {
                coupling: "J2'",
                ..
            }
        ));
    }

    #[test]
    fn sweep_reality_and_transition() {
        let base = params(1.0, 0.0, 0.8, 5);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let sweep = sweep_t2(&base, &grid, 1e-6).unwrap();
        let at = |t2: f64| {
            sweep
                .points
                .iter()
                .find(|p| (p.t2 - t2).abs() < 1e-9)
                .unwrap()
        };
        assert!(at(0.9).max_abs_imag < 1e-8);
        assert!(at(0.3).max_abs_imag > 0.01);
        assert_eq!(at(0.0).zero_mode_count, 3);
        assert_eq!(at(1.0).zero_mode_count, 1);
        // single 3 -> 1 transition, located numerically near 0.6
        let crossing = sweep
            .points
            .windows(2)
            .filter(|w| w[0].zero_mode_count == 3 && w[1].zero_mode_count == 1)
            .map(|w| w[1].t2)
            .collect::<Vec<_>>();
        assert_eq!(crossing.len(), 1);
        assert!((0.55..0.7).contains(&crossing[0]), "{crossing:?}");
        for p in &sweep.points {
            assert_eq!(p.eigenvalues.len(), 21);
            assert_eq!(p.iprs.len(), 21);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let base = params(1.0, 0.0, 0.8, 2);
        assert!(sweep_t2(&base, &[], 1e-6).is_err());
        assert!(sweep_t2(&base, &[0.2, 0.1], 1e-6).is_err());
        assert!(sweep_t2(&base, &[0.1, 0.1], 1e-6).is_err());
    }

    #[test]
    fn classification_at_t2_one() {
        let p = params(1.0, 1.0, 0.8, 5);
        let s = eig(&build_hamiltonian(&p, &[]).unwrap()).unwrap();
        let c = classify_localization(&s, &p.layout());
        assert_eq!(c.type2_indices.len(), 10);
        assert_eq!(c.type1_indices.len(), 11);
        assert!(c.other_indices.is_empty());
        let zero = zero_modes(&s, 1e-6)[0];
        assert!(c.type1_indices.contains(&zero));
    }

    #[test]
    fn classification_hermitian_limit_not_skin() {
        let p = params(1.0, 1.0, 0.0, 5);
        let s = eig(&build_hamiltonian(&p, &[]).unwrap()).unwrap();
        let c = classify_localization(&s, &p.layout());
        assert!(!c.other_indices.is_empty());
    }

    #[test]
    fn classification_partitions_indices() {
        let p = params(1.0, 0.3, 0.5, 3);
        let s = eig(&build_hamiltonian(&p, &[]).unwrap()).unwrap();
        let c = classify_localization(&s, &p.layout());
        let mut all: Vec<usize> = c
            .type1_indices
            .iter()
            .chain(&c.type2_indices)
            .chain(&c.other_indices)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn classification_single_site() {
        let m = Array2::from_elem((1, 1), Complex64::new(0.0, 0.0));
        let s = eig_matrix(&m).unwrap();
        let layout = SiteLayout::new(0);
        let c = classify_localization(&s, &layout);
        assert_eq!(c.type1_indices, vec![0]);
    }

    #[test]
    fn symmetrize_real_regime() {
        let p = params(1.0, 1.0, 0.8, 5);
        let h = build_hamiltonian(&p, &[]).unwrap();
        let sym = symmetrize(&h).unwrap();
        assert!(sym.valid);
        for hop in sym.hoppings() {
            assert!((hop - Complex64::new(0.6, 0.0)).norm() < 1e-14);
        }
        let mut bisected = sym.real_eigenvalues().unwrap();
        bisected.sort_by(f64::total_cmp);
        let s = eig(&h).unwrap();
        for (e, b) in s.eigenvalues.iter().zip(&bisected) {
            assert!((e - Complex64::new(*b, 0.0)).norm() < 1e-9, "{e} vs {b}");
        }
    }

    #[test]
    fn symmetrize_flags_negative_products() {
        let h = build_hamiltonian(&params(1.0, 0.5, 0.8, 5), &[]).unwrap();
        let sym = symmetrize(&h).unwrap();
        assert!(!sym.valid);
        assert!(sym.real_eigenvalues().is_none());
        // complex-symmetric form is still isospectral
        let a = eig(&h).unwrap();
        let b = eig_matrix(&sym.matrix).unwrap();
        assert!(multiset_distance(&a.eigenvalues, &b.eigenvalues) < 1e-9);
    }

    #[test]
    fn symmetrize_identity_when_reciprocal() {
        let h = build_hamiltonian(&params(1.0, 0.4, 0.0, 4), &[]).unwrap();
        let sym = symmetrize(&h).unwrap();
        assert!(sym.valid);
        assert_eq!(&sym.matrix, h.matrix());
        assert!(sym.scaling.iter().all(|s| *s == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn symmetrize_rejects_zero_bond() {
        let h = build_hamiltonian(&params(1.0, 1.0, 1.0, 2), &[]).unwrap();
        assert!(matches!(symmetrize(&h), Err(Error::ZeroBond(_, _))));
    }

    #[test]
    fn symmetrize_keeps_defects_on_diagonal() {
        let h = build_hamiltonian(&params(1.0, 1.0, 0.8, 3), &[Defect::new(2, 3.0)]).unwrap();
        let sym = symmetrize(&h).unwrap();
        assert!(sym.valid);
        assert_eq!(sym.matrix[[2, 2]], Complex64::new(3.0, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ipr_bounds_and_scale_invariance(
            parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            scale_re in -3.0f64..3.0, scale_im in -3.0f64..3.0,
        ) {
            let v: Vec<Complex64> = parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            prop_assume!(v.iter().any(|z| z.norm() > 1e-6));
            let c = Complex64::new(scale_re, scale_im);
            prop_assume!(c.norm() > 1e-3);
            let x = ipr(&v).unwrap();
            let m = v.len() as f64;
            prop_assert!(x >= 1.0 / m - 1e-12 && x <= 1.0 + 1e-12);
            let scaled: Vec<Complex64> = v.iter().map(|z| z * c).collect();
            prop_assert!((ipr(&scaled).unwrap() - x).abs() < 1e-12);
        }

        #[test]
        fn analytic_residual_random(
            t1 in 0.2f64..2.0, delta in -1.5f64..1.5, t2 in -2.0f64..2.0, n in 1usize..=20
        ) {
            let p = params(t1, t2, delta, n);
            prop_assume!((t2 - delta).abs() > 1e-3);
            let psi = analytic_zero_mode(&p).unwrap();
            let h = build_hamiltonian(&p, &[]).unwrap();
            prop_assert!(residual_norm(&h, &psi) < 1e-10);
        }

        #[test]
        fn transpose_has_same_spectrum(
            t1 in 0.5f64..1.5, delta in 0.0f64..0.9, t2 in 0.0f64..2.0, n in 1usize..6
        ) {
            prop_assume!((t2 - delta).abs() > 0.1 && (t1 - delta).abs() > 0.1);
            let h = build_hamiltonian(&params(t1, t2, delta, n), &[]).unwrap();
            let a = eig(&h).unwrap();
            let b = eig_matrix(&h.matrix().t().to_owned()).unwrap();
            prop_assert!(multiset_distance(&a.eigenvalues, &b.eigenvalues) < 1e-9);
        }

        #[test]
        fn chiral_pairing(
            t1 in 0.5f64..1.5, delta in 0.0f64..0.9, t2 in 0.0f64..2.0, n in 1usize..6
        ) {
            prop_assume!((t2 - delta).abs() > 0.1 && (t1 - delta).abs() > 0.1);
            let s = eig(&build_hamiltonian(&params(t1, t2, delta, n), &[]).unwrap()).unwrap();
            let neg: Vec<Complex64> = s.eigenvalues.iter().map(|e| -e).collect();
            prop_assert!(multiset_distance(&s.eigenvalues, &neg) < 1e-9);
            prop_assert!(zero_modes(&s, 1e-6).len() % 2 == 1);
        }

        #[test]
        fn symmetrize_isospectral_when_valid(
            t1 in 0.5f64..1.5, delta in 0.0f64..0.9, extra in 0.1f64..1.5, n in 1usize..6
        ) {
            let t2 = delta + extra;
            prop_assume!(t1 - delta > 0.1);
            let h = build_hamiltonian(&params(t1, t2, delta, n), &[]).unwrap();
            let sym = symmetrize(&h).unwrap();
            prop_assert!(sym.valid);
            let mut b = sym.real_eigenvalues().unwrap();
            b.sort_by(f64::total_cmp);
            let a = eig(&h).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b) {
                prop_assert!((x - Complex64::new(*y, 0.0)).norm() < 1e-9);
            }
        }
    }
}
