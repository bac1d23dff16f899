use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::sanitize::RunMetrics;
use crate::closed_form::{GammaCurvePoint, GaussianGamma, WaterfillSolution};
use crate::dp::AccuracyPoint;
use crate::error::{Error, Result};
use crate::rd::RdPoint;
use crate::region::{RegionPoint, RegionSample};

/// A record type with a fixed CSV column order.
pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// `v` with 12 significant digits, trailing zeros dropped.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mant, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mant = if mant.contains('.') {
        mant.trim_end_matches('0').trim_end_matches('.')
    } else {
        mant
    };
    format!("{mant}{exp}")
}

/// Write a header and one row per item. An empty slice gives a header-only file.
pub fn write_csv<W: Write, T: CsvRecord>(w: W, items: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(T::HEADER)?;
    for it in items {
        out.write_record(it.fields())?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn export_csv<T: CsvRecord>(path: &Path, items: &[T]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(BufWriter::new(f), items).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Pretty JSON; floats are written in shortest round-trip form.
pub fn export_json<T: Serialize + ?Sized>(path: &Path, obj: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, obj)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn import_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

impl CsvRecord for RdPoint {
    const HEADER: &'static [&'static str] = &["rate", "distortion", "slope", "iterations"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sig(self.rate),
            fmt_sig(self.distortion),
            fmt_sig(self.slope),
            self.iterations.to_string(),
        ]
    }
}

impl CsvRecord for RegionPoint {
    const HEADER: &'static [&'static str] = &["rate", "distortion", "equivocation", "bound_type"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sig(self.rate),
            fmt_sig(self.distortion),
            fmt_sig(self.equivocation),
            "achievable".into(),
        ]
    }
}

impl CsvRecord for RegionSample {
    const HEADER: &'static [&'static str] = &[
        "distortion_target",
        "equivocation_target",
        "rate",
        "distortion",
        "equivocation",
        "bound_type",
        "error",
    ];
    fn fields(&self) -> Vec<String> {
        let p = self.point.as_ref();
        vec![
            fmt_sig(self.distortion_target),
            opt(self.equivocation_target),
            opt(p.map(|p| p.rate)),
            opt(p.map(|p| p.distortion)),
            opt(p.map(|p| p.equivocation)),
            if p.is_some() {
                "achievable".into()
            } else {
                String::new()
            },
            self.error.clone().unwrap_or_default(),
        ]
    }
}

impl CsvRecord for GammaCurvePoint {
    const HEADER: &'static [&'static str] =
        &["distortion", "gamma_exact_bits", "gamma_literal_bits"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sig(self.distortion),
            fmt_sig(self.gamma_exact_bits),
            fmt_sig(self.gamma_literal_bits),
        ]
    }
}

impl CsvRecord for WaterfillSolution {
    const HEADER: &'static [&'static str] = &[
        "distortion",
        "lambda",
        "d_bar",
        "rate",
        "gamma_exact",
        "gamma_literal",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sig(self.distortion),
            fmt_sig(self.lambda),
            fmt_sig(self.d_bar),
            fmt_sig(self.rate),
            fmt_sig(self.gamma_exact),
            fmt_sig(self.gamma_literal),
        ]
    }
}

impl CsvRecord for GaussianGamma {
    const HEADER: &'static [&'static str] = &["distortion", "variance_form", "entropy_form_bits"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sig(self.distortion),
            fmt_sig(self.variance_form.0),
            fmt_sig(self.entropy_form.0),
        ]
    }
}

impl CsvRecord for AccuracyPoint {
    const HEADER: &'static [&'static str] = &["epsilon", "expected_abs_error"];
    fn fields(&self) -> Vec<String> {
        vec![fmt_sig(self.epsilon), fmt_sig(self.expected_abs_error)]
    }
}

impl CsvRecord for RunMetrics {
    const HEADER: &'static [&'static str] = &[
        "n",
        "empirical_distortion",
        "plug_in_equivocation",
        "theoretical_distortion",
        "theoretical_equivocation",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_sig(self.empirical_distortion),
            fmt_sig(self.plug_in_equivocation),
            fmt_sig(self.theoretical_distortion),
            fmt_sig(self.theoretical_equivocation),
        ]
    }
}
