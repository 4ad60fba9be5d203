use std::path::PathBuf;

use chrono::{Local, NaiveDate};
use clap::Subcommand;
use mrisk_core::governance::{
    due_reviews, Inventory, LimitAction, LimitMetric, MappingRecord, MappingStatus, ModelRecord, ModelStatus,
    ProductRecord, RiskLimit,
};
use serde::Deserialize;

use crate::exit::{Failure, SUCCESS};

#[derive(Debug, Subcommand)]
pub enum InventoryCommand {
    /// Add a model or product record read from a JSON file.
    Register {
        #[arg(long)]
        file: PathBuf,
    },
    /// Move a model along its lifecycle.
    Status { id: String, status: String },
    /// Allow or block a product family for a model.
    Map {
        product_family: String,
        model_id: String,
        #[arg(value_parser = ["allowed", "blocked"])]
        status: String,
    },
    /// List risk limits, or set one when all three options are given.
    Limits {
        #[arg(long, requires_all = ["threshold", "action"])]
        metric: Option<String>,
        #[arg(long, requires = "metric")]
        threshold: Option<f64>,
        #[arg(long, requires = "metric", value_parser = ["warn", "block"])]
        action: Option<String>,
    },
    /// Models past their review date, most overdue first.
    DueReviews {
        /// Defaults to today.
        #[arg(long)]
        as_of: Option<NaiveDate>,
    },
    /// Print the store.
    Show,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Record {
    Model(ModelRecord),
    Product(ProductRecord),
}

fn enum_from<T: for<'de> Deserialize<'de>>(name: &str) -> Result<T, Failure> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Failure::config(format!("unrecognised value {name}")))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serialises"));
}

pub fn run(mut inv: Inventory, command: &InventoryCommand) -> Result<u8, Failure> {
    match command {
        InventoryCommand::Register { file } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", file.display())))?;
            let record: Record = serde_json::from_str(&text)
                .map_err(|e| Failure::config(format!("{} is not a model or product record: {e}", file.display())))?;
            let id = match record {
                Record::Model(m) => inv.register_model(m)?,
                Record::Product(p) => inv.register_product(p)?,
            };
            println!("registered {id}");
        }
        InventoryCommand::Status { id, status } => {
            let status: ModelStatus = status.parse()?;
            let record = inv.set_status(id, status)?;
            print_json(&record);
        }
        InventoryCommand::Map {
            product_family,
            model_id,
            status,
        } => {
            let status: MappingStatus = enum_from(status)?;
            inv.set_mapping(MappingRecord {
                product_family: product_family.clone(),
                model_id: model_id.clone(),
                status,
            })?;
            println!("{product_family} -> {model_id}: {}", format!("{status:?}").to_lowercase());
        }
        InventoryCommand::Limits {
            metric,
            threshold,
            action,
        } => {
            if let (Some(metric), Some(threshold), Some(action)) = (metric, threshold, action) {
                let metric: LimitMetric = enum_from(metric)?;
                let action: LimitAction = enum_from(action)?;
                inv.set_limit(RiskLimit {
                    metric,
                    threshold: *threshold,
                    action,
                })?;
            }
            print_json(&inv.store().limits);
        }
        InventoryCommand::DueReviews { as_of } => {
            let as_of = as_of.unwrap_or_else(|| Local::now().date_naive());
            print_json(&due_reviews(inv.store(), as_of));
        }
        InventoryCommand::Show => print_json(inv.store()),
    }
    Ok(SUCCESS)
}
