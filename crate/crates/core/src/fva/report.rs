use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{BookedInput, Diagnostics, FvaComponent, FvaError, FvaMethod, FvaMode};

fn bp(x: f64) -> f64 {
    (x * 1e8).round() / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub method: FvaMethod,
    pub label: String,
    pub mode: FvaMode,
    /// Model-risk coverage of the component, per unit notional.
    pub amount: f64,
    pub amount_bp: f64,
    /// Part booked as a separate reserve; zero when embedded.
    pub external_amount: f64,
    pub external_amount_bp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub booked_input: Option<BookedInput>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub diagnostics: Diagnostics,
}

/// Components summed without diversification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvaReport {
    pub as_of: NaiveDate,
    pub components: Vec<ReportEntry>,
    /// Sum of external amounts.
    pub total: f64,
    pub total_bp: f64,
    /// Sum of all amounts, embedded or not.
    pub coverage: f64,
    pub coverage_bp: f64,
}

/// Tags components external unless `overrides` names them (by label or
/// method name) with another mode. Embedded components contribute nothing to
/// the external total and carry the input to book instead.
pub fn build_report(
    as_of: NaiveDate,
    components: Vec<FvaComponent>,
    overrides: &[(String, FvaMode)],
) -> Result<FvaReport, FvaError> {
    let mut entries = Vec::with_capacity(components.len());
    for c in components {
        let mode = overrides
            .iter()
            .rev()
            .find(|(key, _)| *key == c.label || key == c.method.name())
            .map_or(c.mode, |(_, m)| *m);
        if mode == FvaMode::Embedded && !c.method.embeddable() {
            return Err(FvaError::UnsupportedMode(format!(
                "{} has no single input to book; it can only be external",
                c.method.name()
            )));
        }
        let external = match mode {
            FvaMode::External => c.amount,
            FvaMode::Embedded => 0.0,
        };
        entries.push(ReportEntry {
            method: c.method,
            label: c.label,
            mode,
            amount: c.amount,
            amount_bp: bp(c.amount),
            external_amount: external,
            external_amount_bp: bp(external),
            booked_input: if mode == FvaMode::Embedded { c.booked_input } else { None },
            warnings: c.warnings,
            diagnostics: c.diagnostics,
        });
    }
    let total = entries.iter().map(|e| e.external_amount).sum::<f64>();
    let coverage = entries.iter().map(|e| e.amount).sum::<f64>();
    Ok(FvaReport {
        as_of,
        components: entries,
        total,
        total_bp: bp(total),
        coverage,
        coverage_bp: bp(coverage),
    })
}

impl FvaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Table of the same figures as the JSON, in basis points of notional.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("# FVA report {}\n\n", self.as_of);
        out.push_str("| component | mode | amount (bp) | external (bp) | booked input |\n");
        out.push_str("|---|---|---:|---:|---|\n");
        for e in &self.components {
            let booked = match &e.booked_input {
                Some(BookedInput::Parameter { name, value }) => format!("{name} = {value}"),
                Some(BookedInput::Variant { label }) => format!("variant {label}"),
                None => String::new(),
            };
            let mode = match e.mode {
                FvaMode::External => "external",
                FvaMode::Embedded => "embedded",
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                e.label, mode, e.amount_bp, e.external_amount_bp, booked
            ));
        }
        out.push_str(&format!(
            "\nTotal external: {} bp. Coverage including embedded: {} bp.\n",
            self.total_bp, self.coverage_bp
        ));
        let warnings: Vec<&String> = self.components.iter().flat_map(|e| &e.warnings).collect();
        if !warnings.is_empty() {
            out.push_str("\nWarnings:\n\n");
            for w in warnings {
                out.push_str(&format!("- {w}\n"));
            }
        }
        out
    }
}
