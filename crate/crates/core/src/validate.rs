//! Instance checks that report instead of failing.

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, Palette};
use crate::raster::{ColorImage, DamageMask, GreyObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn fatal(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Fatal)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }
}

/// Collects every problem with an instance and palette. Pure.
pub fn validate_instance(
    image: &ColorImage,
    mask: &DamageMask,
    grey: &GreyObservation,
    palette: &Palette,
    params: &ModelParams,
) -> ValidationReport {
    let mut issues = Vec::new();
    let mut fatal = |message: String| issues.push(Issue { severity: Severity::Fatal, message });

    let geom = image.geometry();
    let lattices_match = geom.same_lattice(mask.geometry()) && geom.same_lattice(grey.geometry());
    if !geom.same_lattice(mask.geometry()) {
        fatal(format!(
            "geometry mismatch: mask is {}x{}, image is {}x{}",
            mask.geometry().width(),
            mask.geometry().height(),
            geom.width(),
            geom.height()
        ));
    }
    if !geom.same_lattice(grey.geometry()) {
        fatal(format!(
            "geometry mismatch: grey observation is {}x{}, image is {}x{}",
            grey.geometry().width(),
            grey.geometry().height(),
            geom.width(),
            geom.height()
        ));
    }
    if palette.channels() != image.channels() {
        fatal(format!("palette has {} channels, image has {}", palette.channels(), image.channels()));
    }
    if !mask.has_undamaged() {
        fatal("Ω\\D empty: every pixel is damaged".into());
    }
    if let Some(p) = image.data().iter().position(|v| !v.is_finite()) {
        fatal(format!("non-finite image value at sample {p}"));
    }
    if let Some(c) = palette.colors().iter().position(|c| c.iter().any(|v| !v.is_finite())) {
        fatal(format!("non-finite palette color {}", c + 1));
    }
    for (name, v) in [("lambda", params.lambda()), ("mu", params.mu()), ("p", params.p())] {
        if !v.is_finite() {
            fatal(format!("non-finite parameter {name}"));
        }
    }
    if lattices_match {
        for p in 0..geom.pixel_count() {
            match grey.get(p) {
                None if mask.is_damaged(p) => {
                    fatal(format!("grey observation missing on damaged pixel {p}"));
                    break;
                }
                Some(g) if !g.is_finite() => {
                    fatal(format!("non-finite grey value at pixel {p}"));
                    break;
                }
                _ => {}
            }
        }
    }
    for (i, j) in palette.duplicate_pairs() {
        issues.push(Issue {
            severity: Severity::Warning,
            message: format!("duplicate colors; zero interface cost (colors {} and {})", i + 1, j + 1),
        });
    }
    let ok = issues.iter().all(|i| i.severity != Severity::Fatal);
    ValidationReport { ok, issues }
}
