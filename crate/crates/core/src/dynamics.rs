//! Non-unitary evolution `psi(t) = exp(-i H t) psi(0)` and the population
//! diagnostics built on it.
//!
//! Populations are reported per time slice normalized to unit total, with the
//! raw norm kept separately as a log-norm.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::{self, LogState};
use crate::linalg::{self, Lu};
use crate::model::{build_hamiltonian, Defect, Hamiltonian, ModelParams, SiteLayout};
use crate::spectra::{self, Spectrum};

/// The spectral propagator is used only below this eigenvector condition.
pub const EIGVEC_CONDITION_LIMIT: f64 = 1e8;
/// Minimum peak prominence counted as a pulse.
pub const PULSE_PROMINENCE: f64 = 0.05;
/// Averaging window past the initial transient.
pub const ACCUMULATION_WINDOW: (f64, f64) = (5.0, 30.0);
pub const DEFAULT_T_MAX: f64 = 30.0;
pub const DEFAULT_SAMPLES: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExcitationPreset {
    /// The interface resonator `Q`.
    Interface,
    FirstSite,
    /// First and last resonators.
    BothEnds,
    AllSites,
}

impl ExcitationPreset {
    pub const ALL: [ExcitationPreset; 4] = [
        ExcitationPreset::Interface,
        ExcitationPreset::FirstSite,
        ExcitationPreset::BothEnds,
        ExcitationPreset::AllSites,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExcitationPreset::Interface => "interface-q",
            ExcitationPreset::FirstSite => "first-site",
            ExcitationPreset::BothEnds => "both-ends",
            ExcitationPreset::AllSites => "all-sites",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Unnormalized `(site, amplitude)` entries for this preset.
    pub fn entries(self, layout: &SiteLayout) -> Vec<(usize, Complex64)> {
        let one = Complex64::new(1.0, 0.0);
        let last = layout.total_sites() - 1;
        match self {
            ExcitationPreset::Interface => vec![(layout.interface(), one)],
            ExcitationPreset::FirstSite => vec![(0, one)],
            ExcitationPreset::BothEnds if last == 0 => vec![(0, one)],
            ExcitationPreset::BothEnds => vec![(0, one), (last, one)],
            ExcitationPreset::AllSites => (0..=last).map(|i| (i, one)).collect(),
        }
    }
}

/// Initial photon amplitudes, stored with unit 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpec {
    entries: Vec<(usize, Complex64)>,
}

impl ExcitationSpec {
    pub fn new(entries: Vec<(usize, Complex64)>, layout: &SiteLayout) -> Result<Self> {
        for (site, _) in &entries {
            layout.check(*site)?;
        }
        let norm = entries
            .iter()
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(
                "excitation",
                "needs at least one nonzero finite amplitude",
            ));
        }
        Ok(Self {
            entries: entries.into_iter().map(|(s, a)| (s, a / norm)).collect(),
        })
    }

    pub fn preset(preset: ExcitationPreset, layout: &SiteLayout) -> Self {
        Self::new(preset.entries(layout), layout).expect("presets are nonzero and in range")
    }

    pub fn entries(&self) -> &[(usize, Complex64)] {
        &self.entries
    }

    pub fn to_state(&self, dim: usize) -> Vec<Complex64> {
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        for &(s, a) in &self.entries {
            psi[s] += a;
        }
        psi
    }
}

/// `n` evenly spaced samples on `[0, t_max]`.
pub fn time_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", "must be finite and > 0"));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let step = t_max / (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            if i + 1 == samples {
                t_max
            } else {
                i as f64 * step
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    /// `V exp(-i Lambda t) V^-1`.
    Spectral,
    /// Adaptive Dormand-Prince 5(4).
    Integrator,
}

impl PropagationMethod {
    pub fn name(self) -> &'static str {
        match self {
            PropagationMethod::Spectral => "spectral",
            PropagationMethod::Integrator => "integrator",
        }
    }
}

/// Eigenbasis propagator for a diagonalizable Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    spectrum: Spectrum,
    basis: Lu,
}

impl SpectralPropagator {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        Ok(Self::from_spectrum(spectra::eig(h)?))
    }

    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        let basis = Lu::factor(&spectrum.right_eigenvectors);
        Self { spectrum, basis }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// State at time `t >= 0` starting from `psi0` (any norm).
    pub fn evolve(&self, psi0: &[Complex64], t: f64) -> Result<LogState> {
        if t == 0.0 {
            return Ok(LogState::from_raw(psi0.to_vec(), 0.0));
        }
        let coeffs = self.basis.solve(psi0)?;
        let values = &self.spectrum.eigenvalues;
        // pull out the fastest growth so the exponentials stay bounded
        let shift = values
            .iter()
            .zip(&coeffs)
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(e, _)| e.im * t)
            .fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let weighted: Vec<Complex64> = values
            .iter()
            .zip(&coeffs)
            .map(|(e, c)| c * (Complex64::new(0.0, -1.0) * e * t - shift).exp())
            .collect();
        let raw = linalg::matvec(&self.spectrum.right_eigenvectors, &weighted);
        let out = LogState::from_raw(raw, shift);
        if !out.is_finite() {
            return Err(Error::Overflow { t });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// Unit-norm state per time slice, `[time, site]`.
    pub states: Array2<Complex64>,
    /// `ln |psi(t)|_2` of the raw state.
    pub log_norms: Vec<f64>,
    pub method: PropagationMethod,
}

impl EvolutionTrace {
    fn from_states(times: &[f64], states: Vec<LogState>, method: PropagationMethod) -> Self {
        let dim = states.first().map_or(0, |s| s.state.len());
        let mut arr = Array2::zeros((times.len(), dim));
        let mut log_norms = Vec::with_capacity(times.len());
        for (i, s) in states.into_iter().enumerate() {
            for (j, z) in s.state.into_iter().enumerate() {
                arr[[i, j]] = z;
            }
            log_norms.push(s.log_norm);
        }
        Self {
            times: times.to_vec(),
            states: arr,
            log_norms,
            method,
        }
    }

    /// `P[time, site]`, each row summing to one.
    pub fn populations(&self) -> Array2<f64> {
        let mut p = self.states.mapv(|z| z.norm_sqr());
        for mut row in p.rows_mut() {
            let total: f64 = row.sum();
            if total > 0.0 {
                row.mapv_inplace(|x| x / total);
            }
        }
        p
    }

    pub fn population_series(&self, site: usize) -> Vec<f64> {
        let p = self.populations();
        p.column(site).to_vec()
    }

    /// Raw 2-norms; saturates to infinity once the log-norm passes ~709.
    pub fn norms(&self) -> Vec<f64> {
        self.log_norms.iter().map(|l| l.exp()).collect()
    }

    pub fn raw_state(&self, index: usize) -> Vec<Complex64> {
        let scale = self.log_norms[index].exp();
        self.states.row(index).iter().map(|z| z * scale).collect()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("times", "time grid is empty"));
    }
    if times[0] != 0.0 {
        return Err(Error::invalid("times", "time grid must start at 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "times",
            "time grid must be strictly increasing",
        ));
    }
    Ok(())
}

/// Evolve `psi0` over `times`, choosing the spectral route when the
/// eigenvector basis is well conditioned and the integrator otherwise.
pub fn propagate(h: &Hamiltonian, psi0: &ExcitationSpec, times: &[f64]) -> Result<EvolutionTrace> {
    propagate_with(h, psi0, times, None)
}

/// Like [`propagate`], optionally forcing a method.
pub fn propagate_with(
    h: &Hamiltonian,
    psi0: &ExcitationSpec,
    times: &[f64],
    method: Option<PropagationMethod>,
) -> Result<EvolutionTrace> {
    check_times(times)?;
    for &(site, _) in psi0.entries() {
        h.layout().check(site)?;
    }
    let initial = psi0.to_state(h.dim());

    let spectral_attempt = match method {
        Some(PropagationMethod::Integrator) => None,
        forced => Some(spectral_trace(h, &initial, times, forced.is_some())),
    };
    let spectral_failure = match spectral_attempt {
        Some(Ok(trace)) => return Ok(trace),
        Some(Err(e)) if method == Some(PropagationMethod::Spectral) => return Err(e),
        Some(Err(e)) => e.to_string(),
        None => String::from("not attempted"),
    };

    match integrator::integrate(h.matrix(), &initial, times, integrator::DEFAULT_RTOL) {
        Ok(states) => Ok(EvolutionTrace::from_states(
            times,
            states,
            PropagationMethod::Integrator,
        )),
        Err(e @ Error::Overflow { .. }) => Err(e),
        Err(e) if method.is_none() => Err(Error::Propagation {
            spectral: spectral_failure,
            integrator: e.to_string(),
        }),
        Err(e) => Err(e),
    }
}

fn spectral_trace(
    h: &Hamiltonian,
    initial: &[Complex64],
    times: &[f64],
    forced: bool,
) -> Result<EvolutionTrace> {
    let prop = SpectralPropagator::new(h)?;
    let cond = prop.spectrum().eigvec_condition;
    if !forced && !(cond < EIGVEC_CONDITION_LIMIT) {
        return Err(Error::SingularMatrix { rcond: 1.0 / cond });
    }
    let states = times
        .iter()
        .map(|&t| prop.evolve(initial, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionTrace::from_states(
        times,
        states,
        PropagationMethod::Spectral,
    ))
}

fn window_indices(trace: &EvolutionTrace, window: (f64, f64)) -> Result<Vec<usize>> {
    let (start, end) = window;
    let empty = || Error::EmptyWindow { start, end };
    let first = *trace.times.first().ok_or_else(empty)?;
    let last = *trace.times.last().ok_or_else(empty)?;
    let slack = 1e-9 * (1.0 + last.abs());
    if !(start <= end) || start < first - slack || end > last + slack {
        return Err(empty());
    }
    let idx: Vec<usize> = trace
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= start - slack && t <= end + slack)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(empty());
    }
    Ok(idx)
}

/// Time average of the normalized population at `Q` over `window`.
pub fn interface_accumulation(
    trace: &EvolutionTrace,
    layout: &SiteLayout,
    window: (f64, f64),
) -> Result<f64> {
    let idx = window_indices(trace, window)?;
    let series = trace.population_series(layout.interface());
    Ok(time_average(&trace.times, &series, &idx))
}

fn time_average(times: &[f64], series: &[f64], idx: &[usize]) -> f64 {
    if idx.len() == 1 {
        return series[idx[0]];
    }
    let mut area = 0.0;
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        area += 0.5 * (series[i] + series[j]) * (times[j] - times[i]);
    }
    area / (times[idx[idx.len() - 1]] - times[idx[0]])
}

/// Times of local maxima of `P[t, site]` with prominence at least `prominence`.
pub fn pulse_times_with(trace: &EvolutionTrace, site: usize, prominence: f64) -> Result<Vec<f64>> {
    if site >= trace.dim() {
        return Err(Error::SiteOutOfRange {
            site,
            total: trace.dim(),
        });
    }
    let series = trace.population_series(site);
    Ok(prominent_peaks(&series, prominence)
        .into_iter()
        .map(|i| trace.times[i])
        .collect())
}

pub fn pulse_times(trace: &EvolutionTrace, site: usize) -> Result<Vec<f64>> {
    pulse_times_with(trace, site, PULSE_PROMINENCE)
}

/// Indices of interior local maxima (plateaus resolved to their midpoint)
/// whose topographic prominence is at least `min_prominence`.
pub fn prominent_peaks(x: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .filter(|&p| {
            let h = x[p];
            let mut left_min = h;
            for &v in x[..p].iter().rev() {
                if v > h {
                    break;
                }
                left_min = left_min.min(v);
            }
            let mut right_min = h;
            for &v in &x[p + 1..] {
                if v > h {
                    break;
                }
                right_min = right_min.min(v);
            }
            h - left_min.max(right_min) >= min_prominence
        })
        .collect()
}

/// Pearson correlation of the populations at two sites over `window`.
pub fn population_correlation(
    trace: &EvolutionTrace,
    site_a: usize,
    site_b: usize,
    window: (f64, f64),
) -> Result<f64> {
    for s in [site_a, site_b] {
        if s >= trace.dim() {
            return Err(Error::SiteOutOfRange {
                site: s,
                total: trace.dim(),
            });
        }
    }
    let idx = window_indices(trace, window)?;
    let p = trace.populations();
    let a: Vec<f64> = idx.iter().map(|&i| p[[i, site_a]]).collect();
    let b: Vec<f64> = idx.iter().map(|&i| p[[i, site_b]]).collect();
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Build the array with one on-site defect and evolve `excitation`.
pub fn defect_robustness_run(
    params: &ModelParams,
    defect: Defect,
    excitation: &ExcitationSpec,
    times: &[f64],
) -> Result<EvolutionTrace> {
    let h = build_hamiltonian(params, &[])?.apply_defect(defect)?;
    propagate(&h, excitation, times)
}
