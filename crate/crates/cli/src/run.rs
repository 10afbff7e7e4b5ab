//! Experiment drivers behind each subcommand.

use std::path::PathBuf;

use resonator_core::dynamics::{
    interface_accumulation, propagate, pulse_times_with, EvolutionTrace, ExcitationPreset,
    ExcitationSpec,
};
use resonator_core::model::{build_hamiltonian, Defect, Hamiltonian};
use resonator_core::response::{drive_scan, DriveScan};
use resonator_core::spectra::{self, classify_localization, peak_site, sweep_t2, zero_modes};

use crate::config::ExperimentConfig;
use crate::error::{CliResult, InModule};
use crate::output::{num, Artifacts, Heatmap};
use crate::presets::{FigureKind, FigurePreset, DEFECT_STRENGTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Sweep,
    Evolve,
    Scan,
    Reproduce(FigurePreset),
}

/// Run `command` and return every written path, manifest last.
pub fn execute(command: Command, config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut out = Artifacts::create(&config.output.directory)?;
    match command {
        Command::Spectrum => {
            write_spectrum(config, &mut out)?;
        }
        Command::Sweep => write_sweep(config, &mut out)?,
        Command::Evolve => {
            let h = hamiltonian(config, &config.defects())?;
            let runs = [EvolutionRun {
                label: String::from("evolution"),
                excitation: config.run.excitation,
                defect: None,
            }];
            write_evolutions(config, &h, &runs, &mut out)?;
        }
        Command::Scan => {
            let h = hamiltonian(config, &config.defects())?;
            write_scans(
                config,
                &h,
                &[("scan".into(), config.run.drive.preset)],
                &mut out,
            )?;
        }
        Command::Reproduce(fig) => reproduce_into(fig, config, &mut out)?,
    }
    out.finish()
}

/// Figure config with the caller's output block and zero-mode tolerance.
pub fn figure_config(fig: FigurePreset, base: Option<&ExperimentConfig>) -> ExperimentConfig {
    let mut c = fig.config();
    if let Some(b) = base {
        c.output = b.output.clone();
        c.run.zero_mode_tol = b.run.zero_mode_tol;
    }
    c
}

fn hamiltonian(config: &ExperimentConfig, defects: &[Defect]) -> CliResult<Hamiltonian> {
    let params = config.params().in_module("model")?;
    build_hamiltonian(&params, defects).in_module("model")
}

fn panel(i: usize) -> char {
    (b'a' + i as u8) as char
}

fn reproduce_into(
    fig: FigurePreset,
    config: &ExperimentConfig,
    out: &mut Artifacts,
) -> CliResult<()> {
    match fig.kind() {
        FigureKind::Sweep => write_sweep(config, out),
        FigureKind::Spectrum => {
            let counts = write_spectrum(config, out)?;
            if fig == FigurePreset::Fig7 {
                out.write_bytes("notes.txt", classification_notes(&counts).as_bytes())?;
            }
            Ok(())
        }
        FigureKind::Evolution => {
            let h = hamiltonian(config, &[])?;
            let runs: Vec<EvolutionRun> = ExcitationPreset::ALL
                .iter()
                .enumerate()
                .map(|(i, &p)| EvolutionRun {
                    label: format!("evolution_{}_{}", panel(i), p.name()),
                    excitation: p,
                    defect: None,
                })
                .collect();
            write_evolutions(config, &h, &runs, out)
        }
        FigureKind::Defects => {
            let h = hamiltonian(config, &[])?;
            let layout = config.layout();
            let q = layout.interface();
            let setups = [
                (q, ExcitationPreset::Interface),
                (1, ExcitationPreset::FirstSite),
                (2, ExcitationPreset::FirstSite),
                (layout.left_edge(), ExcitationPreset::FirstSite),
            ];
            let mut runs: Vec<EvolutionRun> = setups
                .iter()
                .enumerate()
                .map(|(i, &(site, p))| EvolutionRun {
                    label: format!("evolution_{}_defect{site}", panel(i)),
                    excitation: p,
                    defect: Some(Defect::new(site, DEFECT_STRENGTH)),
                })
                .collect();
            for p in [ExcitationPreset::Interface, ExcitationPreset::FirstSite] {
                runs.push(EvolutionRun {
                    label: format!("reference_{}", p.name()),
                    excitation: p,
                    defect: None,
                });
            }
            write_evolutions(config, &h, &runs, out)
        }
        FigureKind::Scan => {
            let h = hamiltonian(config, &[])?;
            let scans: Vec<(String, ExcitationPreset)> = ExcitationPreset::ALL
                .iter()
                .enumerate()
                .map(|(i, &p)| (format!("scan_{}_{}", panel(i), p.name()), p))
                .collect();
            write_scans(config, &h, &scans, out)
        }
    }
}

/// Mode counts by peak location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub interface: usize,
    pub edges: usize,
    pub other: usize,
    pub zero_modes: usize,
}

fn write_spectrum(config: &ExperimentConfig, out: &mut Artifacts) -> CliResult<ClassCounts> {
    let h = hamiltonian(config, &config.defects())?;
    let spec = spectra::eig(&h).in_module("spectra")?;
    let layout = h.layout();
    let zeros = zero_modes(&spec, config.run.zero_mode_tol);
    let classes = classify_localization(&spec, &layout);

    let mut rows = Vec::with_capacity(spec.dim());
    let mut modes = Vec::with_capacity(spec.dim() * spec.dim());
    for (k, e) in spec.eigenvalues.iter().enumerate() {
        let v = spec.eigenvector(k);
        let ipr = spectra::ipr(&v).in_module("spectra")?;
        rows.push(vec![
            k.to_string(),
            num(e.re),
            num(e.im),
            num(ipr),
            peak_site(&v).to_string(),
            u8::from(zeros.contains(&k)).to_string(),
        ]);
        for (site, z) in v.iter().enumerate() {
            modes.push(vec![k.to_string(), site.to_string(), num(z.re), num(z.im)]);
        }
    }
    out.write_csv(
        "spectrum.csv",
        &["index", "re_E", "im_E", "ipr", "peak_site", "zero_mode"],
        rows,
    )?;
    out.write_csv("modes.csv", &["index", "site", "re_psi", "im_psi"], modes)?;

    let counts = ClassCounts {
        interface: classes.type1_indices.len(),
        edges: classes.type2_indices.len(),
        other: classes.other_indices.len(),
        zero_modes: zeros.len(),
    };
    let m = &config.model;
    let summary = [
        ("t1", num(m.t1)),
        ("t2", num(m.t2)),
        ("delta", num(m.delta)),
        ("cells_per_chain", m.cells_per_chain.to_string()),
        ("zero_mode_tol", num(config.run.zero_mode_tol)),
        ("zero_mode_count", counts.zero_modes.to_string()),
        ("max_abs_imag", num(spec.max_abs_imag())),
        ("eigvec_condition", num(spec.eigvec_condition)),
        ("max_residual", num(spec.max_residual)),
        ("peak_at_interface", counts.interface.to_string()),
        ("peak_at_edges", counts.edges.to_string()),
        ("peak_elsewhere", counts.other.to_string()),
    ];
    out.write_csv(
        "summary.csv",
        &["quantity", "value"],
        summary.into_iter().map(|(k, v)| vec![k.to_string(), v]),
    )?;
    Ok(counts)
}

fn classification_notes(c: &ClassCounts) -> String {
    format!(
        "Peak-site bookkeeping of the eigenstates\n\
         \n\
         eigenstates peaking at Q (site 10): {interface}\n\
         eigenstates peaking at b_N or A_1 (sites 9, 11): {edges}\n\
         eigenstates peaking elsewhere: {other}\n\
         zero modes (|Re E| below tolerance): {zeros}\n\
         \n\
         A 10/10 split between Q and its two neighbours leaves out the zero\n\
         mode, which also peaks at Q. Counting all {total} eigenstates gives\n\
         {interface} at Q: 10 bulk states plus the zero mode of panel (b).\n",
        interface = c.interface,
        edges = c.edges,
        other = c.other,
        zeros = c.zero_modes,
        total = c.interface + c.edges + c.other,
    )
}

fn write_sweep(config: &ExperimentConfig, out: &mut Artifacts) -> CliResult<()> {
    let params = config.params().in_module("model")?;
    let grid = config.sweep_grid().in_module("spectra")?;
    let sweep = sweep_t2(&params, &grid, config.run.zero_mode_tol).in_module("spectra")?;

    let mut real = Vec::new();
    let mut ipr = Vec::new();
    let mut summary = Vec::new();
    for p in &sweep.points {
        for (k, (e, r)) in p.eigenvalues.iter().zip(&p.iprs).enumerate() {
            real.push(vec![num(p.t2), k.to_string(), num(e.re), num(e.im)]);
            ipr.push(vec![num(p.t2), k.to_string(), num(e.re), num(*r)]);
        }
        summary.push(vec![
            num(p.t2),
            p.zero_mode_count.to_string(),
            num(p.max_abs_imag),
        ]);
    }
    out.write_csv("sweep_real.csv", &["t2", "index", "re_E", "im_E"], real)?;
    out.write_csv(
        "sweep_imag.csv",
        &["t2", "zero_mode_count", "max_abs_imag"],
        summary,
    )?;
    out.write_csv("ipr.csv", &["t2", "index", "re_E", "ipr"], ipr)?;
    Ok(())
}

struct EvolutionRun {
    label: String,
    excitation: ExcitationPreset,
    defect: Option<Defect>,
}

fn write_evolutions(
    config: &ExperimentConfig,
    base: &Hamiltonian,
    runs: &[EvolutionRun],
    out: &mut Artifacts,
) -> CliResult<()> {
    let times = config.times().in_module("dynamics")?;
    let layout = base.layout();
    let q = layout.interface();
    let mut diagnostics = Vec::new();
    for run in runs {
        let h = match run.defect {
            Some(d) => base.apply_defect(d).in_module("model")?,
            None => base.clone(),
        };
        let spec = ExcitationSpec::preset(run.excitation, &layout);
        let trace = propagate(&h, &spec, &times).in_module("dynamics")?;
        write_trace(config, &run.label, &trace, out)?;

        let pulses =
            pulse_times_with(&trace, q, config.run.pulse_prominence).in_module("dynamics")?;
        let accumulation = interface_accumulation(&trace, &layout, config.run.accumulation_window)
            .in_module("dynamics")?;
        let (site, strength) = run.defect.map_or((String::new(), String::new()), |d| {
            (d.site.to_string(), num(d.strength))
        });
        diagnostics.push(vec![
            run.label.clone(),
            run.excitation.name().to_string(),
            site,
            strength,
            trace.method.name().to_string(),
            pulses.len().to_string(),
            num(accumulation),
        ]);
    }
    out.write_csv(
        "diagnostics.csv",
        &[
            "run",
            "excitation",
            "defect_site",
            "defect_strength",
            "method",
            "pulses_at_q",
            "interface_accumulation",
        ],
        diagnostics,
    )
}

fn write_trace(
    config: &ExperimentConfig,
    label: &str,
    trace: &EvolutionTrace,
    out: &mut Artifacts,
) -> CliResult<()> {
    let p = trace.populations();
    let mut rows = Vec::with_capacity(p.len());
    for (i, t) in trace.times.iter().enumerate() {
        for site in 0..trace.dim() {
            rows.push(vec![
                num(*t),
                site.to_string(),
                num(p[[i, site]]),
                num(trace.log_norms[i]),
            ]);
        }
    }
    out.write_csv(
        &format!("{label}.csv"),
        &["t", "site", "population", "log_norm"],
        rows,
    )?;
    if config.output.format.svg() {
        let svg = Heatmap {
            title: label,
            x_label: "t",
            x: &trace.times,
            values: p.rows().into_iter().map(|r| r.to_vec()).collect(),
            log_scale: false,
        }
        .render();
        out.write_bytes(&format!("{label}.svg"), svg.as_bytes())?;
    }
    Ok(())
}

fn write_scans(
    config: &ExperimentConfig,
    h: &Hamiltonian,
    scans: &[(String, ExcitationPreset)],
    out: &mut Artifacts,
) -> CliResult<()> {
    let q = h.layout().interface();
    let mut summary = Vec::new();
    for (label, preset) in scans {
        let spec = config.drive_spec(*preset).in_module("response")?;
        let scan = drive_scan(h, &spec).in_module("response")?;
        write_scan(config, label, &scan, out)?;
        let zero = scan.nearest_index(0.0);
        let peak = scan.argmax_omega(q);
        summary.push(vec![
            label.clone(),
            preset.name().to_string(),
            num(spec.kappa()),
            scan.argmax_site(zero).to_string(),
            num(scan.omegas[peak]),
            num(scan.intensities[[peak, q]]),
        ]);
    }
    out.write_csv(
        "scan_summary.csv",
        &[
            "run",
            "drive",
            "kappa",
            "brightest_site_at_zero",
            "argmax_omega_at_q",
            "max_intensity_at_q",
        ],
        summary,
    )
}

fn write_scan(
    config: &ExperimentConfig,
    label: &str,
    scan: &DriveScan,
    out: &mut Artifacts,
) -> CliResult<()> {
    let sites = scan.intensities.ncols();
    let mut rows = Vec::with_capacity(scan.intensities.len());
    for (k, w) in scan.omegas.iter().enumerate() {
        for site in 0..sites {
            rows.push(vec![
                num(*w),
                site.to_string(),
                num(scan.intensities[[k, site]]),
            ]);
        }
    }
    out.write_csv(
        &format!("{label}.csv"),
        &["omega", "site", "intensity"],
        rows,
    )?;
    if config.output.format.svg() {
        let svg = Heatmap {
            title: label,
            x_label: "omega",
            x: &scan.omegas,
            values: scan
                .intensities
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            log_scale: true,
        }
        .render();
        out.write_bytes(&format!("{label}.svg"), svg.as_bytes())?;
    }
    Ok(())
}
