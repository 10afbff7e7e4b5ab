//! Driven steady-state response `a = ((w + i kappa/2) I - H)^-1 d` and
//! frequency scans of the detected intensity `|a_site|^2`.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::ExcitationPreset;
use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::model::{Hamiltonian, ModelParams, SiteLayout};
use crate::spectra;

pub const DEFAULT_KAPPA: f64 = 0.1;
/// Drive systems above this 1-norm condition count as resonant.
pub const CONDITION_LIMIT: f64 = 1e12;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_OMEGA_RANGE: (f64, f64) = (-4.0, 4.0);
pub const DEFAULT_OMEGA_STEP: f64 = 0.01;

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn frequency_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && start <= end) {
        return Err(Error::invalid(
            "omegas",
            "grid bounds must be finite with start <= end",
        ));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("omega_step", "must be positive"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    // snap to 12 decimals so decimal steps print cleanly
    Ok((0..=count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn default_grid() -> Vec<f64> {
    let (start, end) = DEFAULT_OMEGA_RANGE;
    frequency_grid(start, end, DEFAULT_OMEGA_STEP).expect("default grid is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    entries: Vec<(usize, Complex64)>,
    omegas: Vec<f64>,
    kappa: f64,
}

impl DriveSpec {
    pub fn new(entries: Vec<(usize, Complex64)>, omegas: Vec<f64>, kappa: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("drive", "no drive entries"));
        }
        if entries
            .iter()
            .any(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::invalid("drive", "amplitudes must be finite"));
        }
        if entries.iter().all(|(_, z)| *z == Complex64::new(0.0, 0.0)) {
            return Err(Error::invalid("drive", "all amplitudes are zero"));
        }
        if omegas.is_empty() {
            return Err(Error::invalid("omegas", "frequency grid is empty"));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("omegas", "frequencies must be finite"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", "must be finite and >= 0"));
        }
        Ok(Self {
            entries,
            omegas,
            kappa,
        })
    }

    /// Unit-amplitude drive on the sites of `preset`.
    pub fn preset(
        preset: ExcitationPreset,
        layout: &SiteLayout,
        omegas: Vec<f64>,
        kappa: f64,
    ) -> Result<Self> {
        Self::new(preset.entries(layout), omegas, kappa)
    }

    pub fn entries(&self) -> &[(usize, Complex64)] {
        &self.entries
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_omegas(&self, omegas: Vec<f64>) -> Result<Self> {
        Self::new(self.entries.clone(), omegas, self.kappa)
    }

    /// Same drive with every amplitude multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        let entries = self.entries.iter().map(|&(s, z)| (s, z * c)).collect();
        Self::new(entries, self.omegas.clone(), self.kappa)
    }

    /// Drive vector `d`; repeated sites add.
    pub fn vector(&self, layout: &SiteLayout) -> Result<Vec<Complex64>> {
        let mut d = vec![Complex64::new(0.0, 0.0); layout.total_sites()];
        for &(site, z) in &self.entries {
            layout.check(site)?;
            d[site] += z;
        }
        Ok(d)
    }
}

fn check_stability(h: &Hamiltonian, kappa: f64) -> Result<()> {
    if kappa > 0.0 {
        return Ok(());
    }
    let spec = spectra::eig(h)?;
    if spec.eigenvalues.iter().any(|e| e.im >= 0.0) {
        return Err(Error::invalid(
            "kappa",
            "must be > 0 when the spectrum has eigenvalues with Im E >= 0",
        ));
    }
    Ok(())
}

fn resolvent_matrix(h: &Hamiltonian, omega: f64, kappa: f64) -> Array2<Complex64> {
    let z = Complex64::new(omega, kappa / 2.0);
    let mut m = h.matrix().mapv(|x| -x);
    for i in 0..m.nrows() {
        m[[i, i]] += z;
    }
    m
}

fn residual(m: &Array2<Complex64>, a: &[Complex64], d: &[Complex64]) -> Vec<Complex64> {
    linalg::matvec(m, a)
        .into_iter()
        .zip(d)
        .map(|(x, y)| y - x)
        .collect()
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn solve_at(h: &Hamiltonian, d: &[Complex64], omega: f64, kappa: f64) -> Result<Vec<Complex64>> {
    let m = resolvent_matrix(h, omega, kappa);
    let z = Complex64::new(omega, kappa / 2.0);
    let resonance = |condition: f64| -> Error {
        let closest = spectra::eig(h).ok().and_then(|s| s.closest(z)).unwrap_or(z);
        Error::ResonanceSingularity { condition, closest }
    };
    let lu = Lu::factor(&m);
    let condition = match lu.inverse() {
        Ok(inv) => linalg::norm1(&m) * linalg::norm1(&inv),
        Err(_) => f64::INFINITY,
    };
    if !(condition <= CONDITION_LIMIT) {
        return Err(resonance(condition));
    }
    let mut a = lu.solve(d)?;
    let d_norm = vec_norm(d);
    // refine if the direct solve misses the residual target
    for _ in 0..2 {
        let r = residual(&m, &a, d);
        if vec_norm(&r) <= RESIDUAL_TOL * d_norm {
            return Ok(a);
        }
        let correction = lu.solve(&r)?;
        for (x, c) in a.iter_mut().zip(correction) {
            *x += c;
        }
    }
    if vec_norm(&residual(&m, &a, d)) <= RESIDUAL_TOL * d_norm {
        Ok(a)
    } else {
        Err(resonance(condition))
    }
}

/// Steady-state amplitudes at drive frequency `omega`.
pub fn steady_state(h: &Hamiltonian, drive: &DriveSpec, omega: f64) -> Result<Vec<Complex64>> {
    if !omega.is_finite() {
        return Err(Error::invalid("omega", "must be finite"));
    }
    let d = drive.vector(&h.layout())?;
    check_stability(h, drive.kappa)?;
    solve_at(h, &d, omega, drive.kappa)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveScan {
    pub omegas: Vec<f64>,
    /// `intensities[[k, site]] = |a_site(omegas[k])|^2`.
    pub intensities: Array2<f64>,
    pub drive: DriveSpec,
    pub params: ModelParams,
}

impl DriveScan {
    pub fn site_series(&self, site: usize) -> Vec<f64> {
        self.intensities.column(site).to_vec()
    }

    /// Index of the grid frequency where `site` is brightest.
    pub fn argmax_omega(&self, site: usize) -> usize {
        argmax(self.intensities.column(site).iter().copied())
    }

    /// Brightest site at grid index `k`.
    pub fn argmax_site(&self, k: usize) -> usize {
        argmax(self.intensities.row(k).iter().copied())
    }

    /// Grid index closest to `omega`.
    pub fn nearest_index(&self, omega: f64) -> usize {
        argmax(self.omegas.iter().map(|w| -(w - omega).abs()))
    }

    /// Interior strict local maxima of the intensity at `site`.
    pub fn local_maxima(&self, site: usize) -> Vec<usize> {
        let s = self.intensities.column(site);
        (1..s.len().saturating_sub(1))
            .filter(|&k| s[k] > s[k - 1] && s[k] >= s[k + 1])
            .collect()
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Solve the steady state at every grid frequency.
pub fn drive_scan(h: &Hamiltonian, spec: &DriveSpec) -> Result<DriveScan> {
    let d = spec.vector(&h.layout())?;
    check_stability(h, spec.kappa)?;
    let rows = spec
        .omegas
        .par_iter()
        .map(|&omega| {
            solve_at(h, &d, omega, spec.kappa).map_err(|e| Error::AtFrequency {
                omega,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut intensities = Array2::zeros((rows.len(), h.dim()));
    for (k, a) in rows.iter().enumerate() {
        for (site, z) in a.iter().enumerate() {
            intensities[[k, site]] = z.norm_sqr();
        }
    }
    Ok(DriveScan {
        omegas: spec.omegas.clone(),
        intensities,
        drive: spec.clone(),
        params: *h.params(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;
    use approx::assert_relative_eq;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn fig10(t2: f64, delta: f64) -> Hamiltonian {
        build_hamiltonian(&ModelParams::new(1.0, t2, delta, 5).unwrap(), &[]).unwrap()
    }

    #[test]
    fn uncoupled_site_is_lorentzian() {
        let h = fig10(1.0, 0.8);
        let h = h.with_matrix(Array2::zeros((21, 21))).unwrap();
        let omega_amp = Complex64::new(0.3, -0.4);
        let kappa = 0.2;
        let grid = frequency_grid(-1.0, 1.0, 0.05).unwrap();
        let spec = DriveSpec::new(vec![(3, omega_amp)], grid.clone(), kappa).unwrap();
        let scan = drive_scan(&h, &spec).unwrap();
        for (k, w) in grid.iter().enumerate() {
            let expected = omega_amp.norm_sqr() / (w * w + kappa * kappa / 4.0);
            assert_relative_eq!(scan.intensities[[k, 3]], expected, max_relative = 1e-12);
            assert_eq!(scan.intensities[[k, 4]], 0.0);
        }
        let a = steady_state(&h, &spec, 0.25).unwrap();
        let exact = omega_amp / Complex64::new(0.25, kappa / 2.0);
        assert!((a[3] - exact).norm() < 1e-14);
    }

    #[test]
    fn residual_meets_target() {
        let h = fig10(1.0, 0.8);
        let layout = h.layout();
        let spec = DriveSpec::preset(ExcitationPreset::AllSites, &layout, vec![0.0], 0.1).unwrap();
        let d = spec.vector(&layout).unwrap();
        for w in [-3.0, -0.5, 0.0, 0.7, 2.2] {
            let a = steady_state(&h, &spec, w).unwrap();
            let r = residual(&resolvent_matrix(&h, w, 0.1), &a, &d);
            assert!(vec_norm(&r) <= RESIDUAL_TOL * vec_norm(&d));
        }
    }

    #[test]
    fn intensities_scale_quadratically() {
        let h = fig10(1.0, 0.8);
        let grid = frequency_grid(-2.0, 2.0, 0.1).unwrap();
        let spec = DriveSpec::preset(ExcitationPreset::BothEnds, &h.layout(), grid, 0.1).unwrap();
        let c = Complex64::new(1.5, -2.0);
        let base = drive_scan(&h, &spec).unwrap();
        let scaled = drive_scan(&h, &spec.scaled(c).unwrap()).unwrap();
        for (x, y) in base.intensities.iter().zip(scaled.intensities.iter()) {
            assert_relative_eq!(*y, x * c.norm_sqr(), max_relative = 1e-10, epsilon = 1e-300);
        }
    }

    #[test]
    fn peaks_sit_near_real_eigenvalues() {
        let h = fig10(1.0, 0.8);
        let kappa = 0.1;
        let eigs = spectra::eig(&h).unwrap().eigenvalues;
        assert!(eigs.iter().all(|e| e.im.abs() < 1e-8));
        let q = h.layout().interface();
        for preset in ExcitationPreset::ALL {
            let spec = DriveSpec::preset(preset, &h.layout(), default_grid(), kappa).unwrap();
            let scan = drive_scan(&h, &spec).unwrap();
            let peaks = scan.local_maxima(q);
            assert!(!peaks.is_empty());
            for k in peaks {
                let w = scan.omegas[k];
                let gap = eigs
                    .iter()
                    .map(|e| (e.re - w).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    gap <= kappa,
                    "{preset:?}: peak at {w} is {gap} from the spectrum"
                );
            }
        }
    }

    #[test]
    fn interface_is_brightest_at_zero_frequency() {
        let h = fig10(1.0, 0.8);
        let q = h.layout().interface();
        for preset in ExcitationPreset::ALL {
            let spec = DriveSpec::preset(preset, &h.layout(), vec![0.0], 0.1).unwrap();
            let scan = drive_scan(&h, &spec).unwrap();
            assert_eq!(scan.argmax_site(0), q, "{preset:?}");
        }
    }

    #[test]
    fn first_site_drive_resonates_at_zero() {
        let h = fig10(1.0, 0.8);
        let q = h.layout().interface();
        let spec = DriveSpec::new(vec![(0, one())], vec![0.0, 3.0], 0.1).unwrap();
        let scan = drive_scan(&h, &spec).unwrap();
        assert!(scan.intensities[[0, q]] >= 10.0 * scan.intensities[[1, q]]);
    }

    #[test]
    fn nonreciprocal_couplings_break_transfer_symmetry() {
        let h = fig10(1.0, 0.8);
        let q = h.layout().interface();
        let to_q = steady_state(
            &h,
            &DriveSpec::new(vec![(0, one())], vec![0.0], 0.1).unwrap(),
            0.0,
        )
        .unwrap()[q]
            .norm_sqr();
        let from_q = steady_state(
            &h,
            &DriveSpec::new(vec![(q, one())], vec![0.0], 0.1).unwrap(),
            0.0,
        )
        .unwrap()[0]
            .norm_sqr();
        assert!((to_q - from_q).abs() > 0.1 * to_q.max(from_q));
    }

    #[test]
    fn reciprocal_limit_is_transfer_symmetric() {
        let h = fig10(0.7, 0.0);
        let n = h.dim();
        for w in [-1.3, 0.0, 0.45] {
            let drive = |site| DriveSpec::new(vec![(site, one())], vec![w], 0.1).unwrap();
            let columns: Vec<Vec<Complex64>> = (0..n)
                .map(|j| steady_state(&h, &drive(j), w).unwrap())
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let a = columns[j][i].norm_sqr();
                    let b = columns[i][j].norm_sqr();
                    assert!((a - b).abs() <= 1e-9 * a.max(b).max(1.0));
                }
            }
        }
    }

    #[test]
    fn near_resonant_drive_is_reported() {
        let h = fig10(1.0, 0.8);
        let mut m = Array2::zeros((21, 21));
        m[[1, 1]] = Complex64::new(5.0, 0.0);
        let h = h.with_matrix(m).unwrap();
        let spec = DriveSpec::new(vec![(0, one())], vec![0.0], 1e-14).unwrap();
        match steady_state(&h, &spec, 0.0) {
            Err(Error::ResonanceSingularity { condition, closest }) => {
                assert!(condition > CONDITION_LIMIT);
                assert!(closest.norm() < 1e-12);
            }
            other => panic!("expected a resonance error, got {other:?}"),
        }
        let scan_err = drive_scan(&h, &spec).unwrap_err();
        assert!(matches!(scan_err, Error::AtFrequency { omega, .. } if omega == 0.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let layout = fig10(1.0, 0.8).layout();
        assert!(DriveSpec::new(vec![(0, one())], vec![], 0.1).is_err());
        assert!(DriveSpec::new(vec![], vec![0.0], 0.1).is_err());
        assert!(DriveSpec::new(vec![(0, one())], vec![0.0], -0.1).is_err());
        assert!(DriveSpec::new(vec![(0, Complex64::new(0.0, 0.0))], vec![0.0], 0.1).is_err());
        let far = DriveSpec::new(vec![(99, one())], vec![0.0], 0.1).unwrap();
        assert!(far.vector(&layout).is_err());
        assert!(frequency_grid(1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn lossless_drive_needs_decaying_spectrum() {
        let h = fig10(1.0, 0.8);
        let spec = DriveSpec::new(vec![(0, one())], vec![0.5], 0.0).unwrap();
        assert!(matches!(
            steady_state(&h, &spec, 0.5),
            Err(Error::InvalidParameter { name: "kappa", .. })
        ));
    }

    #[test]
    fn default_grid_covers_band() {
        let g = default_grid();
        assert_eq!(g.len(), 801);
        assert_eq!(g[0], -4.0);
        assert!((g[800] - 4.0).abs() < 1e-12);
        assert!(g.iter().any(|&w| w.abs() < 1e-12));
    }
}
