use std::fs;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use mrisk_core::engine::{prepare_model, price, HullWhiteParams, LeverageMode, McConfig, ModelSpec, PriceResult};
use mrisk_core::fva::{
    build_report, comparison_grid, fva_calibration_variation, fva_hedging_simulation, fva_model_comparison,
    fva_parameter_range, fva_sensitivity_multiple, CalibrationVariant, ComparisonGrid, FvaComponent, FvaMode,
    HedgeSide, Position,
};
use mrisk_core::governance::{check_limits, restrict_features, Breach, FeatureViolation, Inventory, MappingVerdict};
use mrisk_core::market_data::MarketSnapshot;
use mrisk_core::products::{greeks, Bumps, GreeksReport};
use mrisk_core::Product;
use serde::Serialize;

use crate::config::{parameter, HedgeSection, Loaded, MethodConfig, ModelSection, RunConfig};
use crate::exit::{Failure, LIMIT_BREACH, SUCCESS};

/// A loaded config with command-line overrides applied.
pub struct Run {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub override_governance: bool,
}

impl Run {
    pub fn new(loaded: Loaded, seed: Option<u64>, out: Option<PathBuf>, override_governance: bool) -> Self {
        let mut loaded = loaded;
        if let Some(seed) = seed {
            loaded.config.mc.seed = seed;
        }
        let out = match out {
            Some(dir) => dir,
            None => loaded.resolve(&loaded.config.out),
        };
        Self {
            loaded,
            out,
            override_governance,
        }
    }

    fn config(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn inventory(&self) -> Result<Option<Inventory>, Failure> {
        let Some(g) = &self.config().governance else {
            return Ok(None);
        };
        let store = self.loaded.resolve(&g.store);
        if !store.exists() {
            return Err(Failure::config(format!("governance store {} not found", store.display())));
        }
        let audit = match &g.audit_log {
            Some(rel) => self.loaded.resolve(rel),
            None => store.with_extension("audit.jsonl"),
        };
        Ok(Some(Inventory::open(store, audit)?))
    }

    /// Mapping and feature checks for the configured model. Blocks unless
    /// overridden; every override is written to the audit log.
    fn gate(&self, product: &Product) -> Result<Option<GateRecord>, Failure> {
        let Some(inv) = self.inventory()? else {
            return Ok(None);
        };
        let g = self.config().governance.as_ref().expect("inventory implies section");
        let model_id = self
            .config()
            .model
            .id
            .clone()
            .ok_or_else(|| Failure::config("governance needs model.id"))?;
        let record = inv.store().product(&g.product_id)?.clone();
        let auth = inv.authorize(&record.family, &model_id, self.override_governance)?;
        if let MappingVerdict::Blocked(reason) = &auth.verdict {
            if !auth.proceed {
                return Err(Failure::blocked(format!(
                    "governance block: {} with {model_id}: {reason}",
                    record.family
                )));
            }
            eprintln!("warning: governance override: {reason}");
        }
        if let MappingVerdict::Warn(reason) = &auth.verdict {
            eprintln!("warning: {reason}");
        }
        let violations = restrict_features(product, &record);
        let mut overridden = auth.overridden;
        if !violations.is_empty() {
            let reason = format!("feature violations for {}: {violations:?}", record.id);
            if !self.override_governance {
                return Err(Failure::blocked(format!("governance block: {reason}")));
            }
            inv.log_override(&record.family, &model_id, &reason)?;
            eprintln!("warning: governance override: {reason}");
            overridden = true;
        }
        Ok(Some(GateRecord {
            model_id,
            product_id: record.id,
            product_family: record.family,
            verdict: auth.verdict,
            overridden,
            feature_violations: violations,
        }))
    }

    fn inputs(&self) -> Result<(MarketSnapshot, Product, ModelSpec, McConfig), Failure> {
        let market = self.loaded.snapshot()?;
        let product = self.loaded.product()?;
        let model = self.config().model.spec(&market)?;
        let mc = self.config().mc.config()?;
        Ok((market, product, model, mc))
    }
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serialises") + "\n"
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

#[derive(Debug, Serialize)]
struct GateRecord {
    model_id: String,
    product_id: String,
    product_family: String,
    verdict: MappingVerdict,
    overridden: bool,
    feature_violations: Vec<FeatureViolation>,
}

#[derive(Debug, Serialize)]
struct LeverageEcho {
    mode: LeverageMode,
    sweeps: usize,
    converged: bool,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ModelEcho {
    id: Option<String>,
    kind: &'static str,
    hull_white: Option<HullWhiteParams>,
    correlation: Option<f64>,
    leverage: Option<LeverageEcho>,
}

impl ModelEcho {
    fn new(section: &ModelSection, spec: &ModelSpec) -> Self {
        Self {
            id: section.id.clone(),
            kind: spec.label(),
            hull_white: spec.hw,
            correlation: spec.is_hybrid().then_some(spec.equity_rate_correlation),
            leverage: spec.leverage.as_ref().map(|l| LeverageEcho {
                mode: l.mode,
                sweeps: l.sweeps,
                converged: l.converged,
                warnings: l.warnings.clone(),
            }),
        }
    }
}

#[derive(Debug, Serialize)]
struct PriceFigures {
    #[serde(flatten)]
    result: PriceResult,
    value_bp: f64,
    std_error_bp: f64,
}

#[derive(Debug, Serialize)]
struct PriceOutput<'a> {
    generated_at: String,
    config: &'a RunConfig,
    product: &'a Product,
    model: ModelEcho,
    mc: McConfig,
    governance: Option<GateRecord>,
    price: PriceFigures,
    #[serde(skip_serializing_if = "Option::is_none")]
    greeks: Option<GreeksReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    limit_breaches: Vec<Breach>,
}

pub fn price_cmd(run: &Run) -> Result<u8, Failure> {
    let (market, product, model, mc) = run.inputs()?;
    let gate = run.gate(&product)?;
    let prepared = prepare_model(&model, &market, product.horizon(), &mc)?;
    if let Some(l) = &prepared.leverage {
        warn_all(&l.warnings);
    }
    let result = price(&product, &prepared, &market, &mc)?;

    let limits = match (run.config().governance.as_ref(), run.inventory()?) {
        (Some(g), Some(inv)) if g.check_limits => inv.store().limits.clone(),
        _ => Vec::new(),
    };
    let greeks_report = if run.config().greeks.is_some() || !limits.is_empty() {
        let bumps = run
            .config()
            .greeks
            .and_then(|g| g.bumps)
            .unwrap_or_else(|| Bumps::for_model(&prepared));
        Some(greeks(&product, &prepared, &market, &mc, &bumps)?)
    } else {
        None
    };
    let breaches = match &greeks_report {
        Some(report) => check_limits(report, &limits)?,
        None => Vec::new(),
    };

    let output = PriceOutput {
        generated_at: timestamp(),
        config: run.config(),
        product: &product,
        model: ModelEcho::new(&run.config().model, &prepared),
        mc,
        governance: gate,
        price: PriceFigures {
            result,
            value_bp: result.bp(),
            std_error_bp: result.std_error * 1e4,
        },
        greeks: greeks_report,
        limit_breaches: breaches,
    };
    let path = run.write("price.json", &to_json(&output))?;
    println!(
        "{} {} price {:.6} ± {:.6} ({} paths) -> {}",
        output.model.kind,
        product.name(),
        result.value,
        result.std_error,
        result.n_paths,
        path.display()
    );
    for b in &output.limit_breaches {
        eprintln!(
            "limit breach ({:?}): |{}| = {:.6} > {}",
            b.action,
            b.metric,
            b.value.abs(),
            b.threshold
        );
    }
    Ok(if output.limit_breaches.iter().any(Breach::is_blocking) {
        LIMIT_BREACH
    } else {
        SUCCESS
    })
}

#[derive(Debug, Serialize)]
struct GridOutput<'a> {
    generated_at: String,
    config: &'a RunConfig,
    baseline: &'static str,
    alternative: &'static str,
    governance: Option<GateRecord>,
    grid: &'a ComparisonGrid,
}

pub fn grid_cmd(run: &Run) -> Result<u8, Failure> {
    let (market, product, model, mc) = run.inputs()?;
    let section = run
        .config()
        .grid
        .as_ref()
        .ok_or_else(|| Failure::config("grid command needs a grid section"))?;
    if !model.is_hybrid() {
        return Err(Failure::config("grid command needs an HWLV model"));
    }
    let baseline = section.baseline.clone().unwrap_or_else(ModelSection::lv).spec(&market)?;
    let gate = run.gate(&product)?;
    let grid = comparison_grid(&product, &market, &baseline, &model, &section.tenors, &section.correlations, &mc)?;
    warn_all(&grid.warnings);
    let csv = run.write("grid.csv", &grid.to_csv())?;
    run.write(
        "grid.json",
        &to_json(&GridOutput {
            generated_at: timestamp(),
            config: run.config(),
            baseline: baseline.label(),
            alternative: model.label(),
            governance: gate,
            grid: &grid,
        }),
    )?;
    print!("{}", grid.to_csv());
    println!("-> {}", csv.display());
    Ok(SUCCESS)
}

fn hedge_component(
    run: &Run,
    section: &HedgeSection,
    market: &MarketSnapshot,
    product: &Product,
    mc: &McConfig,
) -> Result<(FvaComponent, Vec<f64>), Failure> {
    let base = &run.config().model;
    let (hm, hmk) = run.loaded.scenario(&section.hedge, market, base)?;
    let (rm, rmk) = run.loaded.scenario(&section.realized, market, base)?;
    let config = match section.n_paths {
        Some(n) => mc.with_paths(n),
        None => *mc,
    };
    let result = fva_hedging_simulation(
        product,
        &HedgeSide { model: hm, market: hmk },
        &HedgeSide { model: rm, market: rmk },
        section.rebalance_every,
        section.kappa,
        &config,
    )?;
    warn_all(&result.component.warnings);
    Ok((result.component, result.pnl))
}

fn relabel(mut c: FvaComponent, label: &Option<String>) -> FvaComponent {
    if let Some(l) = label {
        c.label = l.clone();
    }
    c
}

pub fn fva_cmd(run: &Run) -> Result<u8, Failure> {
    let (market, product, model, mc) = run.inputs()?;
    let section = run
        .config()
        .fva
        .as_ref()
        .ok_or_else(|| Failure::config("fva command needs an fva section"))?;
    let gate = run.gate(&product)?;
    if let Some(g) = &gate {
        if g.overridden {
            eprintln!("warning: FVA computed under a governance override");
        }
    }
    let position: Position = section.position;
    let mut components = Vec::new();
    let mut modes: Vec<(String, FvaMode)> = Vec::new();
    for method in &section.methods {
        let component = match method {
            MethodConfig::ParameterRange {
                label,
                parameter: name,
                samples,
                p_lo,
                p_hi,
                mode,
            } => {
                let sample = run.loaded.samples(name, samples)?;
                let c = fva_parameter_range(&product, &model, &market, &sample, *p_lo, *p_hi, &mc, position)?;
                let c = relabel(c, label);
                modes.push((c.label.clone(), *mode));
                c
            }
            MethodConfig::SensitivityMultiple {
                label,
                parameter: name,
                multiple,
                bump,
                mode,
            } => {
                let c = fva_sensitivity_multiple(&product, &model, &market, parameter(name)?, *multiple, *bump, &mc)?;
                let c = relabel(c, label);
                modes.push((c.label.clone(), *mode));
                c
            }
            MethodConfig::ModelComparison {
                label,
                tenors,
                correlations,
                baseline,
                mode,
            } => {
                let base = baseline.clone().unwrap_or_else(ModelSection::lv).spec(&market)?;
                let tenors = tenors.clone().unwrap_or_else(|| vec![product.horizon()]);
                let correlations = correlations.clone().unwrap_or_else(|| vec![market.equity_rate_correlation]);
                let (_, c) =
                    fva_model_comparison(&product, &market, &base, &model, &tenors, &correlations, &mc, position)?;
                let c = relabel(c, label);
                modes.push((c.label.clone(), *mode));
                c
            }
            MethodConfig::CalibrationVariation { label, variants, mode } => {
                let variants = variants
                    .iter()
                    .map(|v| {
                        let (m, mk) = run.loaded.scenario(&v.scenario, &market, &run.config().model)?;
                        Ok(CalibrationVariant {
                            label: v.label.clone(),
                            model: m,
                            market: mk,
                        })
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                let c = relabel(fva_calibration_variation(&product, &variants, &mc, position)?, label);
                modes.push((c.label.clone(), *mode));
                c
            }
            MethodConfig::HedgingSimulation {
                label,
                simulation,
                mode,
            } => {
                let c = relabel(hedge_component(run, simulation, &market, &product, &mc)?.0, label);
                modes.push((c.label.clone(), *mode));
                c
            }
        };
        warn_all(&component.warnings);
        components.push(component);
    }
    let report = build_report(market.as_of, components, &modes)?;
    run.write("fva_report.json", &(report.to_json() + "\n"))?;
    let md = run.write("fva_report.md", &report.to_markdown())?;
    println!(
        "FVA total {:.4} bp (coverage {:.4} bp) over {} components -> {}",
        report.total_bp,
        report.coverage_bp,
        report.components.len(),
        md.display()
    );
    Ok(SUCCESS)
}

pub fn hedge_cmd(run: &Run) -> Result<u8, Failure> {
    let (market, product, _, mc) = run.inputs()?;
    let section = run
        .config()
        .hedge
        .as_ref()
        .ok_or_else(|| Failure::config("hedge command needs a hedge section"))?;
    run.gate(&product)?;
    let (component, pnl) = hedge_component(run, section, &market, &product, &mc)?;
    let mut csv = String::from("path,pnl\n");
    for (i, v) in pnl.iter().enumerate() {
        csv.push_str(&format!("{i},{v}\n"));
    }
    let path = run.write("pnl.csv", &csv)?;
    run.write("hedge_component.json", &to_json(&component))?;
    println!(
        "hedging FVA {:.6} ({:.4} bp) over {} paths -> {}",
        component.amount,
        component.amount * 1e4,
        pnl.len(),
        path.display()
    );
    Ok(SUCCESS)
}
