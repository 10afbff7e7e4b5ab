//! Artifact files: CSV tables, SVG heatmaps and the hash manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.csv";

/// Shortest round-trip decimal form, so identical values give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Files written into one output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> CliResult<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        if !self.written.iter().any(|n| n == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_io = |e: csv::Error| CliError::io(&path, e.into());
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.write_record(&row).map_err(to_io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::io(&path, e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    /// Write `manifest.csv` listing every artifact with its SHA-256.
    pub fn finish(mut self) -> CliResult<Vec<PathBuf>> {
        let mut names = self.written.clone();
        names.sort();
        let mut rows = Vec::with_capacity(names.len());
        for name in &names {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            rows.push(vec![name.clone(), hex::encode(Sha256::digest(&bytes))]);
        }
        self.write_csv(MANIFEST, &["path", "sha256"], rows)?;
        let mut paths: Vec<PathBuf> = names.iter().map(|n| self.dir.join(n)).collect();
        paths.push(self.dir.join(MANIFEST));
        Ok(paths)
    }
}

/// Heatmap with one column per row of `values` and one row per site.
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub x: &'a [f64],
    /// `values[k][site]`.
    pub values: Vec<Vec<f64>>,
    pub log_scale: bool,
}

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let cols = self.values.len();
        let sites = self.values.first().map_or(0, Vec::len);
        let (left, top, width, cell_h) = (60.0, 40.0, 800.0, 14.0);
        let cell_w = width / cols.max(1) as f64;
        let height = cell_h * sites as f64;
        let scaled: Vec<Vec<f64>> = self
            .values
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| {
                        if self.log_scale {
                            v.max(1e-300).log10()
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let (lo, hi) = scaled
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let lo = if self.log_scale { lo.max(hi - 8.0) } else { lo };
        let span = if hi > lo { hi - lo } else { 1.0 };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
            left + width + 20.0,
            top + height + 50.0
        );
        let _ = writeln!(s, r#"<text x="{left}" y="20">{}</text>"#, self.title);
        for (k, row) in scaled.iter().enumerate() {
            for (site, &v) in row.iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{cell_h}" fill="{}"/>"#,
                    left + k as f64 * cell_w,
                    top + site as f64 * cell_h,
                    cell_w + 0.05,
                    colour((v - lo) / span)
                );
            }
        }
        for site in (0..sites).step_by(5) {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{site}</text>"#,
                left - 6.0,
                top + (site as f64 + 0.8) * cell_h
            );
        }
        if let (Some(first), Some(last)) = (self.x.first(), self.x.last()) {
            let y = top + height + 16.0;
            let _ = writeln!(s, r#"<text x="{left}" y="{y}">{first}</text>"#);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end">{last}</text>"#,
                left + width
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + width / 2.0,
            top + height + 36.0,
            self.x_label
        );
        s.push_str("</svg>\n");
        s
    }
}
