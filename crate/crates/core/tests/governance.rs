use chrono::NaiveDate;
use mrisk_core::engine::PriceResult;
use mrisk_core::governance::*;
use mrisk_core::products::{Autocallable, Greek, GreeksReport};
use mrisk_core::Product;
use proptest::prelude::*;
use tempfile::TempDir;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn model(id: &str, status: ModelStatus) -> ModelRecord {
    ModelRecord {
        id: id.into(),
        name: format!("{id} model"),
        risk_tier: 1,
        status,
        last_validation: date(2012, 1, 1),
        review_period_months: 12,
    }
}

fn product(id: &str, family: &str) -> ProductRecord {
    ProductRecord {
        id: id.into(),
        family: family.into(),
        max_maturity: 10.0,
        forward_start_allowed: false,
    }
}

fn open(dir: &TempDir) -> Inventory {
    Inventory::open(dir.path().join("store.json"), dir.path().join("audit.jsonl"))
        .unwrap()
        .with_actor("tester")
}

fn seeded(dir: &TempDir) -> Inventory {
    let mut inv = open(dir);
    inv.register_model(model("hwlv", ModelStatus::Candidate)).unwrap();
    inv.register_product(product("ac5", "autocallable")).unwrap();
    inv.set_status("hwlv", ModelStatus::Approved).unwrap();
    inv.set_mapping(MappingRecord {
        product_family: "autocallable".into(),
        model_id: "hwlv".into(),
        status: MappingStatus::Allowed,
    })
    .unwrap();
    inv
}

#[test]
fn lifecycle_appends_one_line_per_change() {
    let dir = TempDir::new().unwrap();
    let mut inv = open(&dir);
    inv.register_model(model("lv", ModelStatus::Candidate)).unwrap();
    let before = inv.log().entries().unwrap().len();
    inv.set_status("lv", ModelStatus::Approved).unwrap();
    let rec = inv.set_status("lv", ModelStatus::Decommissioned).unwrap();
    assert_eq!(rec.status, ModelStatus::Decommissioned);
    let entries = inv.log().entries().unwrap();
    assert_eq!(entries.len() - before, 2);
    assert!(entries.iter().all(|e| e.actor == "tester"));
    assert_eq!(entries.last().unwrap().action, "set_status");
}

#[test]
fn illegal_transition_and_duplicates_rejected_without_logging() {
    let dir = TempDir::new().unwrap();
    let mut inv = open(&dir);
    inv.register_model(model("lv", ModelStatus::Approved)).unwrap();
    inv.set_status("lv", ModelStatus::Decommissioned).unwrap();
    let n = inv.log().entries().unwrap().len();
    assert!(matches!(
        inv.set_status("lv", ModelStatus::Approved),
        Err(GovernanceError::IllegalTransition { .. })
    ));
    assert!(matches!(
        inv.register_model(model("lv", ModelStatus::Candidate)),
        Err(GovernanceError::Duplicate(_))
    ));
    assert!(matches!(inv.set_status("nope", ModelStatus::Approved), Err(GovernanceError::UnknownId(_))));
    assert_eq!(inv.log().entries().unwrap().len(), n);
    assert_eq!(inv.store().model("lv").unwrap().status, ModelStatus::Decommissioned);
}

#[test]
fn mapping_verdicts() {
    let dir = TempDir::new().unwrap();
    let mut inv = seeded(&dir);
    let s = inv.store().clone();
    assert_eq!(check_mapping("autocallable", "hwlv", &s).unwrap(), MappingVerdict::Allowed);
    assert!(matches!(check_mapping("autocallable", "ghost", &s), Err(GovernanceError::UnknownId(_))));
    assert!(matches!(check_mapping("swaption", "hwlv", &s), Err(GovernanceError::UnknownId(_))));

    inv.register_model(model("lv", ModelStatus::Candidate)).unwrap();
    assert!(check_mapping("autocallable", "lv", inv.store()).unwrap().is_blocked());
    inv.set_status("lv", ModelStatus::Approved).unwrap();
    assert!(check_mapping("autocallable", "lv", inv.store()).unwrap().is_blocked());

    inv.set_status("hwlv", ModelStatus::Restricted).unwrap();
    assert!(matches!(
        check_mapping("autocallable", "hwlv", inv.store()).unwrap(),
        MappingVerdict::Warn(_)
    ));
    inv.set_status("hwlv", ModelStatus::Decommissioned).unwrap();
    assert_eq!(
        check_mapping("autocallable", "hwlv", inv.store()).unwrap(),
        MappingVerdict::Blocked("model decommissioned".into())
    );
}

#[test]
fn override_is_logged() {
    let dir = TempDir::new().unwrap();
    let mut inv = seeded(&dir);
    inv.set_status("hwlv", ModelStatus::Decommissioned).unwrap();
    let n = inv.log().entries().unwrap().len();
    let refused = inv.authorize("autocallable", "hwlv", false).unwrap();
    assert!(!refused.proceed);
    assert_eq!(inv.log().entries().unwrap().len(), n);
    let forced = inv.authorize("autocallable", "hwlv", true).unwrap();
    assert!(forced.proceed && forced.overridden);
    let entries = inv.log().entries().unwrap();
    assert_eq!(entries.len(), n + 1);
    assert_eq!(entries[n].action, "override");
    assert_eq!(entries[n].payload["reason"], "model decommissioned");
}

#[test]
fn reviews_follow_calendar_months() {
    let as_of = date(2013, 6, 10);
    assert!(due_reviews(&InventoryStore::default(), as_of).is_empty());
    let mut store = InventoryStore::default();
    let mut old = model("old", ModelStatus::Approved);
    old.last_validation = date(2012, 5, 10);
    let mut recent = model("recent", ModelStatus::Approved);
    recent.last_validation = date(2012, 7, 10);
    let mut older = model("older", ModelStatus::Restricted);
    older.last_validation = date(2011, 1, 10);
    let mut retired = model("retired", ModelStatus::Decommissioned);
    retired.last_validation = date(2005, 1, 1);
    store.models = vec![old, recent, older, retired];
    let due: Vec<_> = due_reviews(&store, as_of).into_iter().map(|d| d.model_id).collect();
    assert_eq!(due, vec!["older".to_string(), "old".to_string()]);
}

fn greek(value: f64) -> Greek {
    Greek {
        value,
        std_error: 0.0,
        spot_bump: None,
        vol_bump: None,
        correlation_bump: None,
    }
}

fn report(vanna: f64, corr: Option<f64>) -> GreeksReport {
    GreeksReport {
        price: PriceResult {
            value: 0.9,
            std_error: 0.0,
            n_paths: 1,
        },
        delta: greek(0.5),
        gamma: greek(0.2),
        vega: greek(0.1),
        vanna: greek(vanna),
        correlation_sensitivity: corr.map(greek),
    }
}

#[test]
fn limit_breaches() {
    let limits = vec![
        RiskLimit {
            metric: LimitMetric::Vanna,
            threshold: 1.0,
            action: LimitAction::Block,
        },
        RiskLimit {
            metric: LimitMetric::Gamma,
            threshold: 0.1,
            action: LimitAction::Warn,
        },
    ];
    let quiet = vec![limits[0].clone()];
    assert!(check_limits(&report(0.5, None), &quiet).unwrap().is_empty());
    let b = check_limits(&report(-1.5, None), &limits).unwrap();
    assert_eq!(b.len(), 2);
    assert!(b[0].is_blocking() && b[0].metric == LimitMetric::Vanna);
    assert!(!b[1].is_blocking());

    let corr = RiskLimit {
        metric: LimitMetric::CorrelationSensitivity,
        threshold: 0.01,
        action: LimitAction::Block,
    };
    assert!(matches!(
        check_limits(&report(0.0, None), std::slice::from_ref(&corr)),
        Err(GovernanceError::MissingMetric(_))
    ));
    assert_eq!(check_limits(&report(0.0, Some(0.02)), &[corr]).unwrap().len(), 1);
}

#[test]
fn feature_restrictions() {
    let rec = product("ac", "autocallable");
    assert!(restrict_features(&Product::Autocallable(Autocallable::standard(5).unwrap()), &rec).is_empty());
    let long = Product::Autocallable(Autocallable::standard(12).unwrap());
    assert!(matches!(
        restrict_features(&long, &rec)[..],
        [FeatureViolation::Maturity { .. }]
    ));
    let mut fwd = Autocallable::standard(5).unwrap();
    fwd.start_time = 1.0;
    fwd.observation_dates = (2..=6).map(|i| i as f64).collect();
    let v = restrict_features(&Product::Autocallable(fwd.clone()), &rec);
    assert_eq!(v, vec![FeatureViolation::ForwardStart { start_time: 1.0 }]);
    let open_rec = ProductRecord {
        forward_start_allowed: true,
        ..rec
    };
    assert!(restrict_features(&Product::Autocallable(fwd), &open_rec).is_empty());
}

#[derive(Debug, Clone)]
enum Op {
    Model(u8, u8, u8),
    Product(u8, u8),
    Status(u8, u8),
    Map(u8, u8, bool),
    Limit(u8, u8, bool),
}

const STATUSES: [ModelStatus; 4] = [
    ModelStatus::Candidate,
    ModelStatus::Approved,
    ModelStatus::Restricted,
    ModelStatus::Decommissioned,
];
const METRICS: [LimitMetric; 3] = [LimitMetric::CorrelationSensitivity, LimitMetric::Vanna, LimitMetric::Gamma];

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..4, 0u8..5, 0u8..4).prop_map(|(a, b, c)| Op::Model(a, b, c)),
        (0u8..3, 0u8..2).prop_map(|(a, b)| Op::Product(a, b)),
        (0u8..4, 0u8..4).prop_map(|(a, b)| Op::Status(a, b)),
        (0u8..2, 0u8..4, any::<bool>()).prop_map(|(a, b, c)| Op::Map(a, b, c)),
        (0u8..3, 0u8..4, any::<bool>()).prop_map(|(a, b, c)| Op::Limit(a, b, c)),
    ]
}

fn run(inv: &mut Inventory, op: &Op) {
    let fam = |i: u8| format!("family{i}");
    let _ = match *op {
        Op::Model(id, tier, st) => inv
            .register_model(ModelRecord {
                id: format!("m{id}"),
                name: "m".into(),
                risk_tier: tier,
                status: STATUSES[st as usize],
                last_validation: date(2012, 1 + id as u32, 1),
                review_period_months: 6 + tier as u32,
            })
            .map(|_| ()),
        Op::Product(id, f) => inv.register_product(product(&format!("p{id}"), &fam(f))).map(|_| ()),
        Op::Status(id, st) => inv.set_status(&format!("m{id}"), STATUSES[st as usize]).map(|_| ()),
        Op::Map(f, id, allow) => inv.set_mapping(MappingRecord {
            product_family: fam(f),
            model_id: format!("m{id}"),
            status: if allow { MappingStatus::Allowed } else { MappingStatus::Blocked },
        }),
        Op::Limit(m, t, block) => inv.set_limit(RiskLimit {
            metric: METRICS[m as usize],
            threshold: t as f64 * 0.5,
            action: if block { LimitAction::Block } else { LimitAction::Warn },
        }),
    };
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replaying_the_log_reproduces_the_store(ops in prop::collection::vec(op(), 0..40)) {
        let dir = TempDir::new().unwrap();
        let mut inv = open(&dir);
        for op in &ops {
            run(&mut inv, op);
        }
        let replayed = inv.log().replay().unwrap();
        prop_assert_eq!(&replayed, inv.store());
        let reloaded = open(&dir);
        prop_assert_eq!(reloaded.store(), inv.store());
        let text = inv.store().to_json();
        prop_assert_eq!(&InventoryStore::from_json(&text).unwrap(), inv.store());
    }
}
