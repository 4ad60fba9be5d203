use mrisk_core::engine::{
    calibrate_leverage, prepare_model, price, price_paths, simulate_paths, HullWhiteParams, LeverageMode, McConfig,
    ModelSpec,
};
use mrisk_core::market_data::{GridSpec, LocalVolGrid, MarketSnapshot};
use mrisk_core::products::{Autocallable, DigitalOption, Product, VanillaOption};
use statrs::distribution::{ContinuousCDF, Normal};

fn n(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Black–Scholes put on spot with continuous rate and carry.
fn bs_put(s: f64, k: f64, r: f64, q: f64, vol: f64, t: f64) -> f64 {
    let d1 = ((s / k).ln() + (r - q + 0.5 * vol * vol) * t) / (vol * t.sqrt());
    let d2 = d1 - vol * t.sqrt();
    k * (-r * t).exp() * n(-d2) - s * (-q * t).exp() * n(-d1)
}

fn bs_digital_put(s: f64, k: f64, r: f64, q: f64, vol: f64, t: f64) -> f64 {
    let d2 = ((s / k).ln() + (r - q - 0.5 * vol * vol) * t) / (vol * t.sqrt());
    (-r * t).exp() * n(-d2)
}

fn hw() -> HullWhiteParams {
    HullWhiteParams::new(0.05, 0.008).unwrap()
}

fn skewed_market() -> MarketSnapshot {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/market_snapshot.json")).unwrap();
    MarketSnapshot::from_json(&text).unwrap()
}

#[test]
fn lv_put_matches_black_scholes() {
    let market = MarketSnapshot::flat(100.0, 0.01, 0.0, 0.2);
    let config = McConfig::new(40_000, 48, 11, true).unwrap();
    let put = Product::Vanilla(VanillaOption::put(1.0, 1.0).unwrap());
    let res = price(&put, &ModelSpec::lv(), &market, &config).unwrap();
    let oracle = bs_put(1.0, 1.0, 0.01, 0.0, 0.2, 1.0);
    assert!((res.value - oracle).abs() < 3.0 * res.std_error, "{res:?} vs {oracle}");
}

#[test]
fn lv_digital_matches_closed_form() {
    let market = MarketSnapshot::flat(100.0, 0.01, 0.0, 0.2);
    let config = McConfig::new(40_000, 48, 12, true).unwrap();
    let digital = Product::Digital(DigitalOption::put(0.9, 1.0, 0.5).unwrap());
    let res = price(&digital, &ModelSpec::lv(), &market, &config).unwrap();
    let oracle = 0.5 * bs_digital_put(1.0, 0.9, 0.01, 0.0, 0.2, 1.0);
    assert!((res.value - oracle).abs() < 3.0 * res.std_error, "{res:?} vs {oracle}");
}

#[test]
fn deep_out_of_the_money_put_in_quiet_market_is_zero() {
    let market = MarketSnapshot::flat(100.0, 0.0, 0.0, 1e-4);
    let config = McConfig::new(2_000, 12, 1, true).unwrap();
    let put = Product::Vanilla(VanillaOption::put(0.5, 1.0).unwrap());
    assert_eq!(price(&put, &ModelSpec::lv(), &market, &config).unwrap().value, 0.0);
}

#[test]
fn log_spot_drift_is_minus_half_variance() {
    let market = MarketSnapshot::flat(100.0, 0.0, 0.0, 0.2);
    let config = McConfig::new(20_000, 24, 5, false).unwrap();
    let paths = simulate_paths(&ModelSpec::lv(), &market, 2.0, &config).unwrap();
    let logs: Vec<f64> = paths.spot.iter().map(|p| (p.last().unwrap() / 100.0).ln()).collect();
    let m = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = logs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (logs.len() - 1) as f64;
    let se = (var / logs.len() as f64).sqrt();
    assert!((m + 0.04).abs() < 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn antithetic_paths_mirror_each_other() {
    let market = MarketSnapshot::flat(100.0, 0.0, 0.0, 0.2);
    let config = McConfig::new(10, 12, 3, true).unwrap();
    let paths = simulate_paths(&ModelSpec::lv(), &market, 1.0, &config).unwrap();
    for pair in paths.spot.chunks(2) {
        for (j, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            let t = paths.times[j];
            let sum = (a / 100.0).ln() + (b / 100.0).ln();
            assert!((sum + 0.04 * t).abs() < 1e-12);
        }
    }
}

#[test]
fn paths_start_at_spot_and_lv_money_market_is_deterministic() {
    let market = skewed_market();
    let config = McConfig::new(64, 12, 3, false).unwrap();
    let paths = simulate_paths(&ModelSpec::lv(), &market, 1.0, &config).unwrap();
    for (s, m) in paths.spot.iter().zip(&paths.money_market) {
        assert_eq!(s[0], market.spot());
        assert!(s.iter().all(|&v| v > 0.0));
        for (j, &t) in paths.times.iter().enumerate() {
            assert!((m[j] - 1.0 / market.discount.discount_factor(t).unwrap()).abs() < 1e-12);
        }
    }
    assert!(paths.short_rate.is_none());
}

#[test]
fn zero_rate_vol_hybrid_reproduces_lv_paths() {
    let market = skewed_market();
    let config = McConfig::new(500, 24, 9, true).unwrap();
    let flat_rates = HullWhiteParams::new(0.05, 0.0).unwrap();
    let hybrid = prepare_model(&ModelSpec::hwlv(flat_rates, 0.6), &market, 3.0, &config).unwrap();
    let lv = simulate_paths(&ModelSpec::lv(), &market, 3.0, &config).unwrap();
    let hy = simulate_paths(&hybrid, &market, 3.0, &config).unwrap();
    for (a, b) in lv.spot.iter().zip(&hy.spot) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }
    let product = Product::Autocallable(Autocallable::standard(3).unwrap());
    let p_lv = price(&product, &ModelSpec::lv(), &market, &config).unwrap();
    let p_hy = price(&product, &hybrid, &market, &config).unwrap();
    assert!((p_lv.value - p_hy.value).abs() < 1e-12);
}

#[test]
fn zero_rate_vol_leverage_is_dupire() {
    let market = skewed_market();
    let config = McConfig::new(2_000, 24, 9, true).unwrap();
    let lev = calibrate_leverage(&market, &HullWhiteParams::new(0.05, 0.0).unwrap(), 0.3, &config, 5.0).unwrap();
    let dupire = LocalVolGrid::dupire(&market, 5.0, GridSpec::default());
    for (a, b) in lev.grid.values().iter().zip(dupire.values()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn hybrid_discounting_reprices_the_curve() {
    let market = skewed_market();
    let config = McConfig::new(20_000, 24, 4, true).unwrap();
    let model = prepare_model(
        &ModelSpec::hwlv(hw(), 0.3).with_leverage_mode(LeverageMode::ReuseLocalVol),
        &market,
        5.0,
        &config,
    )
    .unwrap();
    let paths = simulate_paths(&model, &market, 5.0, &config).unwrap();
    for &t in &[1.0, 3.0, 5.0] {
        let j = paths.times.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        let d: Vec<f64> = paths.money_market.iter().map(|m| 1.0 / m[j]).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        let df = market.discount.discount_factor(t).unwrap();
        assert!((mean - df).abs() < 4.0 * sd / (d.len() as f64 / 2.0).sqrt(), "t={t}: {mean} vs {df}");
    }
}

#[test]
fn hybrid_reprices_atm_put_after_calibration() {
    let market = skewed_market();
    let config = McConfig::new(40_000, 24, 21, true).unwrap();
    let t = 3.0;
    let strike = market.forward(t) / market.spot();
    let put = Product::Vanilla(VanillaOption::put(strike, t).unwrap());
    let model = prepare_model(&ModelSpec::hwlv(hw(), 0.3), &market, t, &config).unwrap();
    let lv = price_paths(&put, &ModelSpec::lv(), &market, &config, None).unwrap().result();
    let hy = price_paths(&put, &model, &market, &config.with_seed(22), None).unwrap().result();
    let tol = (3.0 * lv.std_error.hypot(hy.std_error)).max(1e-3);
    assert!((lv.value - hy.value).abs() <= tol, "lv {lv:?} hy {hy:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let market = skewed_market();
    let config = McConfig::new(3_001, 24, 77, true).unwrap();
    let model = prepare_model(
        &ModelSpec::hwlv(hw(), -0.4).with_leverage_mode(LeverageMode::ReuseLocalVol),
        &market,
        2.0,
        &config,
    )
    .unwrap();
    let product = Product::Autocallable(Autocallable::standard(2).unwrap());
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| price(&product, &model, &market, &config).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.value.to_bits(), four.value.to_bits());
    assert_eq!(one.std_error.to_bits(), four.std_error.to_bits());
}

#[test]
fn antithetic_sampling_reduces_put_error() {
    let market = MarketSnapshot::flat(100.0, 0.01, 0.0, 0.2);
    let put = Product::Vanilla(VanillaOption::put(1.0, 1.0).unwrap());
    for seed in 0..10 {
        let with = price(&put, &ModelSpec::lv(), &market, &McConfig::new(4_000, 12, seed, true).unwrap()).unwrap();
        let without = price(&put, &ModelSpec::lv(), &market, &McConfig::new(4_000, 12, seed, false).unwrap()).unwrap();
        assert!(with.std_error <= without.std_error, "seed {seed}");
    }
}

#[test]
fn hybrid_without_leverage_is_a_configuration_error() {
    let market = MarketSnapshot::flat(100.0, 0.01, 0.0, 0.2);
    let config = McConfig::new(100, 12, 1, true).unwrap();
    let put = Product::Vanilla(VanillaOption::put(1.0, 1.0).unwrap());
    assert!(price(&put, &ModelSpec::hwlv(hw(), 0.0), &market, &config).is_err());
}
