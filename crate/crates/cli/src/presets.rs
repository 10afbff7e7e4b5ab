//! Parameter sets for the published figures.

use std::fmt;

use crate::config::{ExperimentConfig, ModelBlock};

pub const FIGURE_T1: f64 = 1.0;
pub const FIGURE_DELTA: f64 = 0.8;
pub const FIGURE_CELLS: usize = 5;
/// On-site defect strength used for the defect figure.
pub const DEFECT_STRENGTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigurePreset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

/// What a figure preset computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Sweep,
    Spectrum,
    Evolution,
    Defects,
    Scan,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 9] = [
        FigurePreset::Fig2,
        FigurePreset::Fig3,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
        FigurePreset::Fig6,
        FigurePreset::Fig7,
        FigurePreset::Fig8,
        FigurePreset::Fig9,
        FigurePreset::Fig10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
            FigurePreset::Fig7 => "fig7",
            FigurePreset::Fig8 => "fig8",
            FigurePreset::Fig9 => "fig9",
            FigurePreset::Fig10 => "fig10",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn kind(self) -> FigureKind {
        match self {
            FigurePreset::Fig2 => FigureKind::Sweep,
            FigurePreset::Fig3 | FigurePreset::Fig5 | FigurePreset::Fig7 => FigureKind::Spectrum,
            FigurePreset::Fig4 | FigurePreset::Fig6 | FigurePreset::Fig8 => FigureKind::Evolution,
            FigurePreset::Fig9 => FigureKind::Defects,
            FigurePreset::Fig10 => FigureKind::Scan,
        }
    }

    /// Fixed `t2`; the sweep figure reports the centre of its grid.
    pub fn t2(self) -> f64 {
        match self {
            FigurePreset::Fig2 | FigurePreset::Fig3 | FigurePreset::Fig4 => 0.0,
            FigurePreset::Fig5 | FigurePreset::Fig6 => 0.5,
            FigurePreset::Fig7 | FigurePreset::Fig8 | FigurePreset::Fig9 | FigurePreset::Fig10 => {
                1.0
            }
        }
    }

    pub fn model(self) -> ModelBlock {
        ModelBlock {
            t1: FIGURE_T1,
            t2: self.t2(),
            delta: FIGURE_DELTA,
            cells_per_chain: FIGURE_CELLS,
        }
    }

    pub fn config(self) -> ExperimentConfig {
        ExperimentConfig::with_model(self.model())
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig5_expands_to_caption_values() {
        let m = FigurePreset::from_name("fig5").unwrap().model();
        assert_eq!((m.t1, m.delta, m.t2, m.cells_per_chain), (1.0, 0.8, 0.5, 5));
    }

    #[test]
    fn names_round_trip() {
        for p in FigurePreset::ALL {
            assert_eq!(FigurePreset::from_name(p.name()), Some(p));
        }
        assert_eq!(FigurePreset::from_name("fig11"), None);
    }

    #[test]
    fn caption_couplings() {
        for p in FigurePreset::ALL {
            let m = p.model();
            assert_eq!((m.t1, m.delta, m.cells_per_chain), (1.0, 0.8, 5));
            assert!([0.0, 0.5, 1.0].contains(&m.t2));
        }
    }
}
