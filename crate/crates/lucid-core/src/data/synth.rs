//! Seeded synthetic table generators.
//!
//! Two generators produce census-income and recidivism style tables that are
//! column-compatible with the well-known public files (UCI Adult census /
//! ProPublica COMPAS two-year scores), so the bundled dataset configs work on
//! either the synthetic output or the real CSVs.
//!
//! The generative structure is deliberately explicit so audits have known
//! ground truth:
//!
//! * census: the label depends on education, age, hours, capital gain, sex,
//!   marital status, relationship, and occupation. `race`, `workclass`, and
//!   `native-country` carry no effect and are sampled uniformly.
//! * recidivism: the label depends on priors, age, juvenile counts, charge
//!   degree, sex (women reoffend less), and race (strong per-category
//!   offsets, `Asian` lowest).
//!
//! Everything is deterministic under the seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::RawTable;
use crate::error::{LucidError, Result};

const EDUCATION_NAMES: [&str; 16] = [
    "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th", "HS-grad",
    "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters", "Prof-school", "Doctorate",
];

const EDUCATION_WEIGHTS: [f64; 16] = [
    0.5, 0.5, 1.0, 2.0, 2.0, 3.0, 4.0, 2.0, 28.0, 20.0, 5.0, 4.0, 18.0, 6.0, 2.0, 2.0,
];

const WORKCLASSES: [&str; 8] = [
    "Federal-gov", "Local-gov", "Never-worked", "Private", "Self-emp-inc", "Self-emp-not-inc",
    "State-gov", "Without-pay",
];

const OCCUPATIONS: [(&str, f64); 14] = [
    ("Adm-clerical", -0.10),
    ("Armed-Forces", 0.0),
    ("Craft-repair", 0.0),
    ("Exec-managerial", 0.60),
    ("Farming-fishing", -0.40),
    ("Handlers-cleaners", -0.50),
    ("Machine-op-inspct", -0.25),
    ("Other-service", -0.60),
    ("Priv-house-serv", -0.90),
    ("Prof-specialty", 0.50),
    ("Protective-serv", 0.20),
    ("Sales", 0.15),
    ("Tech-support", 0.30),
    ("Transport-moving", -0.10),
];

const RACES: [&str; 5] = ["Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White"];

const COUNTRIES: [&str; 8] = [
    "Canada", "Cuba", "England", "Germany", "India", "Mexico", "Philippines", "United-States",
];

const COMPAS_RACES: [(&str, f64, f64); 6] = [
    // (name, sampling weight, recidivism logit offset)
    ("African-American", 0.40, 0.45),
    ("Asian", 0.06, -1.60),
    ("Caucasian", 0.30, 0.0),
    ("Hispanic", 0.12, -0.10),
    ("Native American", 0.04, 0.50),
    ("Other", 0.08, -0.35),
];

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    // Box-Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    mean + std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn pick_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut t = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        t -= w;
        if t <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, items: &[&'a str], weights: &[f64]) -> &'a str {
    items[pick_index(rng, weights)]
}

fn pick_uniform<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

/// Census-income style table: 14 attribute columns plus an `income` label,
/// about 3% of rows carrying a `?` missing marker.
pub fn census_table(rows: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let headers = [
        "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
        "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
        "hours-per-week", "native-country", "income",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        out.push(census_row(&mut rng));
    }
    RawTable { headers, rows: out }
}

fn census_row(rng: &mut ChaCha8Rng) -> Vec<String> {
    let age = normal(rng, 38.6, 13.0).round().clamp(17.0, 90.0);
    let sex = if rng.gen_bool(0.67) { "Male" } else { "Female" };

    let marital = {
        let names = [
            "Married-civ-spouse", "Never-married", "Divorced", "Separated", "Widowed",
            "Married-spouse-absent", "Married-AF-spouse",
        ];
        let weights: [f64; 7] = if age < 28.0 {
            [0.22, 0.64, 0.07, 0.03, 0.01, 0.02, 0.01]
        } else if age < 46.0 {
            [0.55, 0.24, 0.13, 0.04, 0.01, 0.02, 0.01]
        } else {
            [0.58, 0.09, 0.20, 0.03, 0.08, 0.02, 0.00]
        };
        pick_weighted(rng, &names, &weights)
    };

    let relationship = match marital {
        "Married-civ-spouse" | "Married-AF-spouse" => {
            if rng.gen_bool(0.95) {
                if sex == "Male" { "Husband" } else { "Wife" }
            } else {
                pick_weighted(rng, &["Not-in-family", "Other-relative"], &[0.5, 0.5])
            }
        }
        "Never-married" => {
            pick_weighted(rng, &["Own-child", "Not-in-family", "Unmarried"], &[0.35, 0.45, 0.20])
        }
        "Married-spouse-absent" => {
            pick_weighted(rng, &["Not-in-family", "Other-relative"], &[0.7, 0.3])
        }
        _ => pick_weighted(
            rng,
            &["Unmarried", "Not-in-family", "Other-relative"],
            &[0.50, 0.45, 0.05],
        ),
    };

    let education_num = pick_index(rng, &EDUCATION_WEIGHTS) + 1;
    let education = EDUCATION_NAMES[education_num - 1];

    let occupation_idx = rng.gen_range(0..OCCUPATIONS.len());
    let (occupation, occupation_effect) = OCCUPATIONS[occupation_idx];

    let hours = {
        let base = if sex == "Male" { 42.0 } else { 38.0 };
        normal(rng, base, 10.0).round().clamp(1.0, 99.0)
    };
    let capital_gain = if rng.gen_bool(0.92) {
        0.0
    } else {
        normal(rng, 8.5, 1.2).exp().round().clamp(114.0, 99999.0)
    };
    let capital_loss = if rng.gen_bool(0.95) {
        0.0
    } else {
        normal(rng, 1900.0, 350.0).round().clamp(155.0, 4356.0)
    };

    // race, workclass, and native-country are sampled uniformly and get no
    // term in the label logit.
    let race = pick_uniform(rng, &RACES);
    let workclass = pick_uniform(rng, &WORKCLASSES);
    let country = pick_uniform(rng, &COUNTRIES);
    let fnlwgt = rng.gen_range(12285..1484706);

    let marital_effect = match marital {
        "Married-civ-spouse" | "Married-AF-spouse" => 1.3,
        "Never-married" => -0.7,
        "Separated" => -0.4,
        "Widowed" => -0.3,
        "Married-spouse-absent" => -0.2,
        _ => -0.1, // Divorced
    };
    let relationship_effect = match relationship {
        "Husband" | "Wife" => 0.7,
        "Own-child" => -1.2,
        "Other-relative" => -0.6,
        "Unmarried" => -0.3,
        _ => -0.1, // Not-in-family
    };

    let logit = -4.4
        + 2.2 * (education_num as f64 - 1.0) / 15.0
        + 1.6 * (age - 17.0) / 73.0
        + 1.6 * (hours - 1.0) / 98.0
        + 2.5 * (capital_gain / 20000.0).min(1.0)
        - 0.6 * (capital_loss / 4356.0)
        + if sex == "Male" { 1.25 } else { 0.0 }
        + marital_effect
        + relationship_effect
        + occupation_effect;
    let income = if rng.gen_bool(sigmoid(logit)) { ">50K" } else { "<=50K" };

    // Sprinkle missing markers over the free-text columns.
    let workclass = if rng.gen_bool(0.015) { "?" } else { workclass };
    let occupation = if rng.gen_bool(0.015) { "?" } else { occupation };
    let country = if rng.gen_bool(0.005) { "?" } else { country };

    vec![
        format!("{age:.0}"),
        workclass.to_string(),
        fnlwgt.to_string(),
        education.to_string(),
        education_num.to_string(),
        marital.to_string(),
        occupation.to_string(),
        relationship.to_string(),
        race.to_string(),
        sex.to_string(),
        format!("{capital_gain:.0}"),
        format!("{capital_loss:.0}"),
        format!("{hours:.0}"),
        country.to_string(),
        income.to_string(),
    ]
}

/// Recidivism-score style table with the usual screening columns, including
/// rows that the standard ingestion filters are expected to drop.
pub fn recidivism_table(rows: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let headers = [
        "sex", "age", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
        "priors_count", "c_charge_degree", "days_b_screening_arrest", "is_recid",
        "two_year_recid",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        out.push(recidivism_row(&mut rng));
    }
    RawTable { headers, rows: out }
}

fn recidivism_row(rng: &mut ChaCha8Rng) -> Vec<String> {
    let sex = if rng.gen_bool(0.81) { "Male" } else { "Female" };
    let age = normal(rng, 34.0, 11.0).round().clamp(18.0, 80.0);

    let race_names: Vec<&str> = COMPAS_RACES.iter().map(|(n, _, _)| *n).collect();
    let race_weights: Vec<f64> = COMPAS_RACES.iter().map(|(_, w, _)| *w).collect();
    let race = pick_weighted(rng, &race_names, &race_weights);
    let race_effect = COMPAS_RACES
        .iter()
        .find(|(n, _, _)| *n == race)
        .map(|(_, _, e)| *e)
        .unwrap();

    let priors = (-rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln() * 2.5).floor().min(38.0);
    let juv_fel = if rng.gen_bool(0.90) { 0.0 } else { rng.gen_range(1..=3) as f64 };
    let juv_misd = if rng.gen_bool(0.88) { 0.0 } else { rng.gen_range(1..=3) as f64 };
    let juv_other = if rng.gen_bool(0.85) { 0.0 } else { rng.gen_range(1..=4) as f64 };
    let charge = if rng.gen_bool(0.64) { "F" } else { "M" };

    let logit = -0.55
        + 1.9 * (priors / 15.0).min(1.0)
        - 1.7 * (age - 18.0) / 62.0
        + 0.8 * ((juv_fel + juv_misd + juv_other) / 4.0).min(1.0)
        + if sex == "Female" { -1.3 } else { 0.0 }
        + race_effect
        + if charge == "F" { 0.3 } else { 0.0 };
    let recid = rng.gen_bool(sigmoid(logit));

    // Screening bookkeeping; ~7% of rows violate the standard keep filters.
    let days = if rng.gen_bool(0.95) {
        normal(rng, 0.0, 8.0).round().clamp(-30.0, 30.0)
    } else {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        sign * rng.gen_range(31.0..300.0)
    };
    let is_recid = if rng.gen_bool(0.02) {
        "-1".to_string()
    } else {
        (recid as u8).to_string()
    };
    let charge = if rng.gen_bool(0.01) { "O" } else { charge };

    vec![
        sex.to_string(),
        format!("{age:.0}"),
        race.to_string(),
        format!("{juv_fel:.0}"),
        format!("{juv_misd:.0}"),
        format!("{juv_other:.0}"),
        format!("{priors:.0}"),
        charge.to_string(),
        format!("{days:.0}"),
        is_recid,
        (recid as u8).to_string(),
    ]
}

/// Writes a table as RFC-4180 CSV with a header row.
pub fn write_table_csv(table: &RawTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| LucidError::FileWrite {
            path: path.to_path_buf(),
            source,
        })?;
    }
    let file = std::fs::File::create(path).map_err(|source| LucidError::FileWrite {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(&table.headers)?;
    for row in &table.rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|source| LucidError::FileWrite {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}
