//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mrisk_core::engine::{hw_discount_bond, prepare_model, price_paths, HullWhiteParams};
use mrisk_core::fva::{
    fva_hedging_simulation, fva_parameter_range, fva_sensitivity_multiple, Diagnostics, FvaComponent, HedgeSide,
    Parameter, ParameterSample, Position,
};
use mrisk_core::governance::{AuditLog, GovernanceError, Inventory, ModelStatus};
use mrisk_core::products::{
    soften, Autocallable, DigitalOption, PayoffProfile, PiecewiseLinear, SofteningPolicy, VanillaOption,
};
use mrisk_core::{price, McConfig, MarketSnapshot, ModelSpec, Product};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};
use tempfile::TempDir;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(DATA).join(name)
}

fn shipped_market() -> MarketSnapshot {
    mrisk_core::market_data::load_snapshot(data("market_snapshot.json")).unwrap()
}

fn shipped_autocallable() -> Product {
    serde_json::from_str(&fs::read_to_string(data("autocallable_5y.json")).unwrap()).unwrap()
}

fn hw() -> HullWhiteParams {
    HullWhiteParams::new(0.05, 0.008).unwrap()
}

fn mrisk(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mrisk"))
        .current_dir(dir)
        .env("MRISK_USER", "acceptance")
        .args(args)
        .output()
        .unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    for f in [
        "market_snapshot.json",
        "autocallable_5y.json",
        "correlation_history.json",
        "inventory.json",
        "inventory.audit.jsonl",
    ] {
        fs::copy(data(f), dir.path().join(f)).unwrap();
    }
    dir
}

fn run_config(dir: &Path, name: &str, config: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn shipped_hwlv_config() -> Value {
    serde_json::from_str(&fs::read_to_string(data("config_hwlv.json")).unwrap()).unwrap()
}

// Closed forms written out independently of the library's Black helpers.
fn bs_put(s: f64, k: f64, r: f64, q: f64, vol: f64, t: f64) -> f64 {
    let n = Normal::standard();
    let sd = vol * t.sqrt();
    let d1 = ((s / k).ln() + (r - q + 0.5 * vol * vol) * t) / sd;
    let d2 = d1 - sd;
    k * (-r * t).exp() * n.cdf(-d2) - s * (-q * t).exp() * n.cdf(-d1)
}

fn bs_digital_put(s: f64, k: f64, r: f64, q: f64, vol: f64, t: f64) -> f64 {
    let n = Normal::standard();
    let sd = vol * t.sqrt();
    let d2 = ((s / k).ln() + (r - q - 0.5 * vol * vol) * t) / sd;
    (-r * t).exp() * n.cdf(-d2)
}

fn oracle_pricing() -> Outcome {
    let (s, r, vol, t) = (100.0, 0.01, 0.2, 1.0);
    let market = MarketSnapshot::flat(s, r, 0.0, vol);
    let config = McConfig::new(200_000, 50, 20_120_610, true).unwrap();
    let start = Instant::now();
    let put = price(
        &Product::Vanilla(VanillaOption::put(1.0, t).unwrap()),
        &ModelSpec::lv(),
        &market,
        &config,
    )
    .unwrap();
    let put_time = start.elapsed();
    let start = Instant::now();
    let digital = price(
        &Product::Digital(DigitalOption::put(1.0, t, 1.0).unwrap()),
        &ModelSpec::lv(),
        &market,
        &config,
    )
    .unwrap();
    let digital_time = start.elapsed();

    let (pv, pse) = (put.value * s, put.std_error * s);
    let (dv, dse) = (digital.value * s, digital.std_error * s);
    let put_oracle = bs_put(s, s, r, 0.0, vol, t);
    let digital_oracle = s * bs_digital_put(s, s, r, 0.0, vol, t);
    let limit = Duration::from_secs(30);
    let pass = (pv - put_oracle).abs() <= 3.0 * pse
        && pse <= 0.05
        && (dv - digital_oracle).abs() <= 3.0 * dse
        && dse <= 0.05
        && put_time < limit
        && digital_time < limit;
    outcome(
        pass,
        format!(
            "put {pv:.4} ± {pse:.4} vs {put_oracle:.4} ({:.2} SE, {:.1}s); digital {dv:.4} ± {dse:.4} vs {digital_oracle:.4} ({:.2} SE, {:.1}s)",
            (pv - put_oracle) / pse,
            put_time.as_secs_f64(),
            (dv - digital_oracle) / dse,
            digital_time.as_secs_f64()
        ),
    )
}

fn hw_curve_fit() -> Outcome {
    let market = shipped_market();
    let curve = &market.discount;
    let r0 = curve.instantaneous_forward(0.0);
    let mut worst: f64 = 0.0;
    for params in [hw(), HullWhiteParams::new(0.2, 0.015).unwrap(), HullWhiteParams::new(0.01, 0.0).unwrap()] {
        for &t in curve.pillar_times() {
            let model = hw_discount_bond(&params, curve, 0.0, t, r0).unwrap();
            worst = worst.max((model - curve.df(t)).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |P_model(0,T) − P_market(0,T)| = {worst:.2e} over all pillars"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn degenerate_equivalence() -> Outcome {
    let dir = workspace();
    let mut config = shipped_hwlv_config();
    config["model"]["hull_white"]["rate_vol"] = json!(0.0);
    config["out"] = json!("degenerate");
    let cfg = run_config(dir.path(), "degenerate.json", &config);
    let out = mrisk(dir.path(), &["grid", "--config", &cfg]);
    if out.status.code() != Some(0) {
        return outcome(false, format!("grid failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let grid = &read_json(&dir.path().join("degenerate/grid.json"))["grid"];
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for (b, a) in grid["baseline"].as_array().unwrap().iter().zip(grid["alternative"].as_array().unwrap()) {
        for (x, y) in b.as_array().unwrap().iter().zip(a.as_array().unwrap()) {
            worst = worst.max((x.as_f64().unwrap() - y.as_f64().unwrap()).abs());
            cells += 1;
        }
    }
    outcome(
        worst <= 1e-12 && cells == 20,
        format!("{cells} grid cells, max |HWLV(σr=0) − LV| = {worst:.1e}"),
    )
}

fn leverage_consistency() -> Outcome {
    let market = shipped_market();
    let config = McConfig::new(50_000, 48, 99, true).unwrap();
    let model = prepare_model(&ModelSpec::hwlv(hw(), market.equity_rate_correlation), &market, 5.0, &config).unwrap();
    let mut fails = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for t in [1.0, 3.0, 5.0] {
        for kf in [0.5, 0.8, 1.0] {
            let strike = kf * market.forward(t) / market.spot();
            let put = Product::Vanilla(VanillaOption::put(strike, t).unwrap());
            let lv = price(&put, &ModelSpec::lv(), &market, &config).unwrap();
            let hy = price(&put, &model, &market, &config).unwrap();
            let tol = (3.0 * (lv.std_error.powi(2) + hy.std_error.powi(2)).sqrt()).max(10e-4);
            let diff = hy.value - lv.value;
            worst_ratio = worst_ratio.max(diff.abs() / tol);
            if diff.abs() > tol {
                fails.push(format!("T={t} K/F={kf}: {:.1} bp > {:.1} bp", diff * 1e4, tol * 1e4));
            }
        }
    }
    outcome(
        fails.is_empty(),
        if fails.is_empty() {
            format!("9 puts within tolerance; worst |diff|/tol = {worst_ratio:.2}")
        } else {
            fails.join("; ")
        },
    )
}

fn tenor_correlation_grid() -> Outcome {
    let dir = workspace();
    let mut config = shipped_hwlv_config();
    config["mc"]["n_paths"] = json!(100_000);
    config["out"] = json!("grid");
    let cfg = run_config(dir.path(), "grid.json", &config);
    let start = Instant::now();
    let out = mrisk(dir.path(), &["grid", "--config", &cfg]);
    let elapsed = start.elapsed();
    if out.status.code() != Some(0) {
        return outcome(false, format!("grid failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let grid = &read_json(&dir.path().join("grid/grid.json"))["grid"];
    let rows = |key: &str| -> Vec<Vec<f64>> {
        grid[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect())
            .collect()
    };
    let (d, se) = (rows("difference"), rows("std_error"));
    let tenors: Vec<f64> = grid["tenors"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let rhos: Vec<f64> = grid["correlations"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let mut issues = Vec::new();
    let finite = d.iter().flatten().all(|v| v.is_finite());
    if !finite || d.len() != 5 || d.iter().any(|r| r.len() != 4) {
        issues.push("grid is not a finite 5×4 matrix".to_string());
    }
    let i5 = tenors.iter().position(|&t| t == 5.0).unwrap();
    let j3 = rhos.iter().position(|&r| r == 0.3).unwrap();
    let headline = d[i5][j3] * 1e4;
    if !(20.0..=200.0).contains(&headline) {
        issues.push(format!("ρ=0.3, 5y = {headline:.1} bp outside [20, 200]"));
    }
    let combined = |a: f64, b: f64| (a * a + b * b).sqrt();
    for i in 0..d.len() {
        for j in 1..rhos.len() {
            if d[i][j] < d[i][j - 1] - 2.0 * combined(se[i][j], se[i][j - 1]) {
                issues.push(format!("row T={} falls from ρ={} to ρ={}", tenors[i], rhos[j - 1], rhos[j]));
            }
        }
    }
    for (j, &rho) in rhos.iter().enumerate().filter(|(_, &r)| r > 0.0) {
        for i in 1..d.len() {
            if d[i][j] < d[i - 1][j] - 2.0 * combined(se[i][j], se[i - 1][j]) {
                issues.push(format!("column ρ={rho} falls from T={} to T={}", tenors[i - 1], tenors[i]));
            }
        }
    }
    if elapsed > Duration::from_secs(15 * 60) {
        issues.push(format!("took {:.0} s", elapsed.as_secs_f64()));
    }
    let table = d
        .iter()
        .map(|r| r.iter().map(|v| format!("{:.1}", v * 1e4)).collect::<Vec<_>>().join("/"))
        .collect::<Vec<_>>()
        .join(" | ");
    outcome(
        issues.is_empty(),
        format!(
            "ρ=0.3 5y {headline:.1} bp; rows T=1..5 over ρ {rhos:?}: {table}; {:.0} s{}",
            elapsed.as_secs_f64(),
            if issues.is_empty() { String::new() } else { format!("; {}", issues.join("; ")) }
        ),
    )
}

const SCAN: f64 = 1e-3;

fn scan(p: &PayoffProfile, x_max: f64) -> Vec<f64> {
    (0..=(x_max / SCAN).round() as usize).map(|i| p.value(i as f64 * SCAN)).collect()
}

fn softening_properties() -> Outcome {
    let ac = Autocallable::standard(5).unwrap();
    let cases: Vec<(&str, PayoffProfile, SofteningPolicy)> = vec![
        (
            "autocall maturity",
            ac.maturity_profile().into(),
            SofteningPolicy::new(Some(5.0), Some(40.0)).unwrap(),
        ),
        (
            "digital put",
            PiecewiseLinear::digital_put(0.8, 1.0).into(),
            SofteningPolicy::new(Some(10.0), None).unwrap(),
        ),
        (
            "put spread",
            PiecewiseLinear::put(1.0).plus(&PiecewiseLinear::put(0.7).scaled(-1.0)).into(),
            SofteningPolicy::new(None, Some(20.0)).unwrap(),
        ),
    ];
    let tol = 1e-9;
    let mut issues = Vec::new();
    for (name, orig, policy) in &cases {
        let soft = soften(orig, policy);
        let (f, g) = (scan(orig, 2.5), scan(&soft, 2.5));
        if g.iter().zip(&f).any(|(a, b)| a < b) {
            issues.push(format!("{name}: not dominating"));
        }
        if let Some(m) = policy.max_delta {
            if g.windows(2).any(|w| ((w[1] - w[0]) / SCAN).abs() > m + tol) {
                issues.push(format!("{name}: slope bound"));
            }
        }
        if let Some(gm) = policy.max_gamma {
            if g.windows(3).any(|w| (w[2] - 2.0 * w[1] + w[0]) / (SCAN * SCAN) > gm + tol) {
                issues.push(format!("{name}: curvature bound"));
            }
        }
        let again = scan(&soften(&soft, policy), 2.5);
        if again.iter().zip(&g).any(|(a, b)| (a - b).abs() > tol) {
            issues.push(format!("{name}: not idempotent"));
        }
    }

    let market = shipped_market();
    let config = McConfig::new(20_000, 48, 5, true).unwrap();
    let policy = SofteningPolicy::new(Some(5.0), Some(40.0)).unwrap();
    let mut gains = Vec::new();
    for product in [
        Product::Autocallable(ac.clone()),
        Product::Digital(DigitalOption::put(0.8, 2.0, 1.0).unwrap()),
    ] {
        let plain = price_paths(&product, &ModelSpec::lv(), &market, &config, None).unwrap();
        let soft = price_paths(&product.with_softening(Some(policy)), &ModelSpec::lv(), &market, &config, None)
            .unwrap();
        if soft.values().iter().zip(plain.values()).any(|(s, p)| s < p) || soft.mean() < plain.mean() {
            issues.push(format!("{}: softened price below original on common paths", product.name()));
        }
        gains.push(format!("{} +{:.2} bp", product.name(), (soft.mean() - plain.mean()) * 1e4));
    }
    outcome(
        issues.is_empty(),
        format!(
            "{} profiles on a 1e-3 scan; pathwise price gains {}{}",
            cases.len(),
            gains.join(", "),
            if issues.is_empty() { String::new() } else { format!("; {}", issues.join("; ")) }
        ),
    )
}

fn range_std_error(c: &FvaComponent) -> f64 {
    match &c.diagnostics {
        Diagnostics::ParameterRange {
            std_error_lo,
            std_error_hi,
            ..
        } => std_error_lo.max(*std_error_hi),
        _ => f64::NAN,
    }
}

fn fva_properties() -> Outcome {
    let market = shipped_market();
    let config = McConfig::new(20_000, 48, 13, true).unwrap();
    let model = ModelSpec::hwlv(hw(), market.equity_rate_correlation);
    let history: ParameterSample =
        serde_json::from_str(&fs::read_to_string(data("correlation_history.json")).unwrap()).unwrap();
    let ac5 = shipped_autocallable();
    let ac1 = ac5.with_tenor(1.0).unwrap();
    let mut issues = Vec::new();

    let r5 = fva_parameter_range(&ac5, &model, &market, &history, 0.05, 0.95, &config, Position::Short).unwrap();
    let r1 = fva_parameter_range(&ac1, &model, &market, &history, 0.05, 0.95, &config, Position::Short).unwrap();
    let collapsed = ParameterSample::new("equity_rate_correlation", vec![0.3; 12]).unwrap();
    let r0 = fva_parameter_range(&ac5, &model, &market, &collapsed, 0.05, 0.95, &config, Position::Short).unwrap();
    let sens = |m: f64| {
        fva_sensitivity_multiple(&ac5, &ModelSpec::lv(), &market, Parameter::DividendYield, m, 0.0025, &config)
            .unwrap()
            .amount
    };
    let (s1, s2, s3) = (sens(1.0), sens(2.0), sens(3.0));
    for c in [&r5, &r1, &r0] {
        if c.amount < 0.0 || c.amount.is_nan() {
            issues.push(format!("{} amount {} < 0", c.label, c.amount));
        }
    }
    if s1 < 0.0 || s1.is_nan() {
        issues.push("sensitivity amount < 0".into());
    }
    if r0.amount != 0.0 {
        issues.push(format!("collapsed distribution gives {}", r0.amount));
    }
    if (s2 - 2.0 * s1).abs() > 1e-12 * s1.abs().max(1e-300) || (s3 - 3.0 * s1).abs() > 1e-12 * s1.abs().max(1e-300)
    {
        issues.push(format!("sensitivity multiple not linear: {s1} {s2} {s3}"));
    }
    let combined = (range_std_error(&r1).powi(2) + range_std_error(&r5).powi(2)).sqrt();
    if r1.amount > r5.amount + 2.0 * combined {
        issues.push(format!("1y range {} > 5y range {}", r1.amount, r5.amount));
    }

    let dir = workspace();
    let cfg = run_config(dir.path(), "fva.json", &shipped_hwlv_config());
    let mut reports = Vec::new();
    for out in ["a", "b"] {
        let o = mrisk(dir.path(), &["fva", "--config", &cfg, "--out", out]);
        if o.status.code() != Some(0) {
            issues.push(format!("fva command failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        let read = |f: &str| fs::read(dir.path().join(out).join(f)).unwrap_or_default();
        reports.push((read("fva_report.json"), read("fva_report.md")));
    }
    if reports[0] != reports[1] || reports[0].0.is_empty() {
        issues.push("fva reruns differ".into());
    }
    let report: Value = serde_json::from_slice(&reports[0].0).unwrap_or(Value::Null);
    if let Some(comps) = report["components"].as_array() {
        if comps.iter().any(|c| c["amount"].as_f64().is_none_or(|a| a < 0.0)) {
            issues.push("a report amount is negative".into());
        }
    }
    outcome(
        issues.is_empty(),
        format!(
            "ρ-range FVA 1y {:.2} bp ≤ 5y {:.2} bp (2 SE {:.2} bp); collapsed {:.1}; dividend ×1/×2/×3 = {:.3}/{:.3}/{:.3} bp; reruns byte-identical{}",
            r1.amount * 1e4,
            r5.amount * 1e4,
            2.0 * combined * 1e4,
            r0.amount,
            s1 * 1e4,
            s2 * 1e4,
            s3 * 1e4,
            if issues.is_empty() { String::new() } else { format!("; {}", issues.join("; ")) }
        ),
    )
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn hedging_simulation() -> Outcome {
    let put = Product::Vanilla(VanillaOption::put(1.0, 1.0).unwrap());
    let config = McConfig::new(5_000, 252, 17, false).unwrap();
    let side = |vol: f64| HedgeSide {
        model: ModelSpec::lv(),
        market: MarketSnapshot::flat(100.0, 0.01, 0.0, vol),
    };
    let matched = fva_hedging_simulation(&put, &side(0.2), &side(0.2), 1, 1.0, &config).unwrap();
    let stressed = fva_hedging_simulation(&put, &side(0.2), &side(0.3), 1, 1.0, &config).unwrap();
    let (m0, se0) = mean_and_se(&matched.pnl);
    let (m1, se1) = mean_and_se(&stressed.pnl);
    outcome(
        m0.abs() <= 3.0 * se0 && m1 < 0.0 && matched.pnl.len() == 5_000,
        format!(
            "matched mean P&L {:.3} bp ({:.2} SE); realized 30% vs hedge 20% mean P&L {:.1} bp ± {:.1}",
            m0 * 1e4,
            m0 / se0,
            m1 * 1e4,
            se1 * 1e4
        ),
    )
}

fn governance() -> Outcome {
    let dir = workspace();
    let d = dir.path();
    let mut issues = Vec::new();
    let config = json!({
        "snapshot": "market_snapshot.json",
        "product": "autocallable_5y.json",
        "model": { "id": "lv-legacy-v1", "kind": "LV" },
        "mc": { "n_paths": 1000, "steps_per_year": 12, "seed": 1 },
        "governance": { "store": "inventory.json", "product_id": "ac-5y", "check_limits": false }
    });
    let cfg = run_config(d, "legacy.json", &config);
    let blocked = mrisk(d, &["price", "--config", &cfg]).status.code();
    let forced = mrisk(d, &["price", "--config", &cfg, "--override-governance"]).status.code();
    if blocked != Some(2) || forced != Some(0) {
        issues.push(format!("exit codes {blocked:?} / {forced:?}"));
    }

    let mut inv = Inventory::open(d.join("inventory.json"), d.join("inventory.audit.jsonl")).unwrap();
    let illegal = inv.set_status("lv-legacy-v1", ModelStatus::Approved);
    if !matches!(illegal, Err(GovernanceError::IllegalTransition { .. })) {
        issues.push("decommissioned → approved accepted".into());
    }
    inv.set_status("hwlv-v1", ModelStatus::Restricted).unwrap();
    inv.set_status("hwlv-v1", ModelStatus::Approved).unwrap();
    let replayed = AuditLog::new(d.join("inventory.audit.jsonl")).replay().unwrap();
    let on_disk = Inventory::open(d.join("inventory.json"), d.join("unused.jsonl")).unwrap();
    if &replayed != inv.store() || &replayed != on_disk.store() {
        issues.push("audit replay differs from store".into());
    }
    let shipped = AuditLog::new(data("inventory.audit.jsonl")).replay().unwrap();
    let shipped_store = Inventory::open(data("inventory.json"), data("inventory.audit.jsonl")).unwrap();
    if &shipped != shipped_store.store() {
        issues.push("shipped audit log does not replay to shipped store".into());
    }
    outcome(
        issues.is_empty(),
        format!(
            "decommissioned mapping exit {blocked:?}, overridden exit {forced:?}; illegal transition rejected; replay reproduces store{}",
            if issues.is_empty() { String::new() } else { format!("; {}", issues.join("; ")) }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle pricing", oracle_pricing),
        ("hull-white curve fit", hw_curve_fit),
        ("degenerate equivalence", degenerate_equivalence),
        ("leverage consistency", leverage_consistency),
        ("tenor-correlation grid", tenor_correlation_grid),
        ("softening properties", softening_properties),
        ("fva properties", fva_properties),
        ("hedging simulation", hedging_simulation),
        ("governance", governance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
