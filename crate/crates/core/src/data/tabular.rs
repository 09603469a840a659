//! Delimited-text datasets: UCI YEAST, ADULT, LETTER and a generic
//! column-spec reader.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Whitespace,
}

impl Delimiter {
    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

/// Column layout for an arbitrary numeric dataset with a string label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericSchema {
    pub delimiter: Delimiter,
    pub has_header: bool,
    pub label_column: usize,
    /// Columns dropped before parsing features (identifiers and the like).
    pub skip_columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    Yeast,
    Adult,
    Letter,
    Generic(GenericSchema),
}

const YEAST_CLASSES: [&str; 10] = ["CYT", "NUC", "MIT", "ME3", "ME2", "ME1", "EXC", "VAC", "POX", "ERL"];

const ADULT_WORKCLASS: &[&str] = &[
    "Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov", "Local-gov", "State-gov", "Without-pay",
    "Never-worked",
];
const ADULT_EDUCATION: &[&str] = &[
    "Bachelors", "Some-college", "11th", "HS-grad", "Prof-school", "Assoc-acdm", "Assoc-voc", "9th", "7th-8th",
    "12th", "Masters", "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool",
];
const ADULT_MARITAL: &[&str] = &[
    "Married-civ-spouse", "Divorced", "Never-married", "Separated", "Widowed", "Married-spouse-absent",
    "Married-AF-spouse",
];
const ADULT_OCCUPATION: &[&str] = &[
    "Tech-support", "Craft-repair", "Other-service", "Sales", "Exec-managerial", "Prof-specialty",
    "Handlers-cleaners", "Machine-op-inspct", "Adm-clerical", "Farming-fishing", "Transport-moving",
    "Priv-house-serv", "Protective-serv", "Armed-Forces",
];
const ADULT_RELATIONSHIP: &[&str] = &["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative", "Unmarried"];
const ADULT_RACE: &[&str] = &["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"];
const ADULT_SEX: &[&str] = &["Female", "Male"];
const ADULT_COUNTRY: &[&str] = &[
    "United-States", "Cambodia", "England", "Puerto-Rico", "Canada", "Germany", "Outlying-US(Guam-USVI-etc)",
    "India", "Japan", "Greece", "South", "China", "Cuba", "Iran", "Honduras", "Philippines", "Italy", "Poland",
    "Jamaica", "Vietnam", "Mexico", "Portugal", "Ireland", "France", "Dominican-Republic", "Laos", "Ecuador",
    "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala", "Nicaragua", "Scotland", "Thailand", "Yugoslavia",
    "El-Salvador", "Trinadad&Tobago", "Peru", "Hong", "Holand-Netherlands",
];

enum AdultColumn {
    Continuous,
    Categorical(&'static [&'static str]),
}

const ADULT_COLUMNS: [AdultColumn; 14] = [
    AdultColumn::Continuous, // age
    AdultColumn::Categorical(ADULT_WORKCLASS),
    AdultColumn::Continuous, // fnlwgt
    AdultColumn::Categorical(ADULT_EDUCATION),
    AdultColumn::Continuous, // education-num
    AdultColumn::Categorical(ADULT_MARITAL),
    AdultColumn::Categorical(ADULT_OCCUPATION),
    AdultColumn::Categorical(ADULT_RELATIONSHIP),
    AdultColumn::Categorical(ADULT_RACE),
    AdultColumn::Categorical(ADULT_SEX),
    AdultColumn::Continuous, // capital-gain
    AdultColumn::Continuous, // capital-loss
    AdultColumn::Continuous, // hours-per-week
    AdultColumn::Categorical(ADULT_COUNTRY),
];

fn number(field: &str, line: usize) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::Row {
            line,
            message: "missing value".into(),
        });
    }
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Row {
            line,
            message: format!("'{field}' is not a finite number"),
        })
}

fn expect_fields(fields: &[&str], expected: usize, line: usize) -> Result<()> {
    if fields.len() == expected {
        Ok(())
    } else {
        Err(Error::Row {
            line,
            message: format!("expected {expected} fields, found {}", fields.len()),
        })
    }
}

/// Non-empty lines paired with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

struct Rows {
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Rows {
    fn new() -> Self {
        Self {
            features: Vec::new(),
            labels: Vec::new(),
        }
    }
}

fn parse_yeast(text: &str) -> Result<Dataset> {
    let mut rows = Rows::new();
    for (line, record) in records(text) {
        let fields = Delimiter::Whitespace.split(record);
        expect_fields(&fields, 10, line)?;
        for f in &fields[1..9] {
            rows.features.push(number(f, line)?);
        }
        let label = YEAST_CLASSES.iter().position(|c| *c == fields[9]).ok_or_else(|| Error::Row {
            line,
            message: format!("unknown YEAST class '{}'", fields[9]),
        })?;
        rows.labels.push(label);
    }
    let names = YEAST_CLASSES.iter().map(|s| s.to_string()).collect();
    Dataset::new(rows.features, 8, rows.labels, names)
}

fn parse_letter(text: &str) -> Result<Dataset> {
    let mut rows = Rows::new();
    for (line, record) in records(text) {
        let fields = Delimiter::Comma.split(record);
        expect_fields(&fields, 17, line)?;
        let label = match fields[0].as_bytes() {
            [c @ b'A'..=b'Z'] => (c - b'A') as usize,
            _ => {
                return Err(Error::Row {
                    line,
                    message: format!("'{}' is not a capital letter", fields[0]),
                })
            }
        };
        for f in &fields[1..] {
            rows.features.push(number(f, line)?);
        }
        rows.labels.push(label);
    }
    let names = (b'A'..=b'Z').map(|c| (c as char).to_string()).collect();
    Dataset::new(rows.features, 16, rows.labels, names)
}

fn parse_adult(text: &str) -> Result<Dataset> {
    let mut continuous = Vec::new();
    for col in &ADULT_COLUMNS {
        match col {
            AdultColumn::Continuous => continuous.push(true),
            AdultColumn::Categorical(values) => continuous.extend(std::iter::repeat_n(false, values.len())),
        }
    }
    let cols = continuous.len();
    let mut rows = Rows::new();
    // adult.test starts with a "|1x3 Cross validator" banner
    for (line, record) in records(text).filter(|(_, l)| !l.starts_with('|')) {
        let fields = Delimiter::Comma.split(record);
        expect_fields(&fields, 15, line)?;
        if fields.contains(&"?") {
            continue;
        }
        let mut row = Vec::with_capacity(cols);
        for (field, col) in fields.iter().zip(&ADULT_COLUMNS) {
            match col {
                AdultColumn::Continuous => row.push(number(field, line)?),
                AdultColumn::Categorical(values) => {
                    let hot = values.iter().position(|v| v == field).ok_or_else(|| Error::Row {
                        line,
                        message: format!("unknown category '{field}'"),
                    })?;
                    row.extend((0..values.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
                }
            }
        }
        let label = match fields[14].trim_end_matches('.') {
            "<=50K" => 0,
            ">50K" => 1,
            other => {
                return Err(Error::Row {
                    line,
                    message: format!("unknown income class '{other}'"),
                })
            }
        };
        rows.features.extend(row);
        rows.labels.push(label);
    }
    Dataset::with_continuous(rows.features, cols, rows.labels, vec!["<=50K".into(), ">50K".into()], continuous)
}

fn parse_generic(text: &str, schema: &GenericSchema) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut features = Vec::new();
    let mut width = None;
    for (line, record) in records(text).skip(usize::from(schema.has_header)) {
        let fields = schema.delimiter.split(record);
        let expected = *width.get_or_insert(fields.len());
        expect_fields(&fields, expected, line)?;
        if schema.label_column >= fields.len() {
            return Err(Error::Row {
                line,
                message: format!("label column {} missing", schema.label_column),
            });
        }
        for (c, f) in fields.iter().enumerate() {
            if c != schema.label_column && !schema.skip_columns.contains(&c) {
                features.push(number(f, line)?);
            }
        }
        let label = fields[schema.label_column];
        if label.is_empty() {
            return Err(Error::Row {
                line,
                message: "missing label".into(),
            });
        }
        raw_labels.push(label.to_string());
    }
    let width = width.ok_or_else(|| Error::InvalidDimension("dataset file has no rows".into()))?;
    let cols = (0..width)
        .filter(|c| *c != schema.label_column && !schema.skip_columns.contains(c))
        .count();
    let names: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|l| names.binary_search(l).expect("label collected above"))
        .collect();
    Dataset::new(features, cols, labels, names)
}

/// Parses dataset text under `schema`. Features are left unscaled; fit
/// standardization on the training split after splitting.
pub fn parse_csv_dataset(text: &str, schema: &Schema) -> Result<Dataset> {
    match schema {
        Schema::Yeast => parse_yeast(text),
        Schema::Adult => parse_adult(text),
        Schema::Letter => parse_letter(text),
        Schema::Generic(g) => parse_generic(text, g),
    }
}

pub fn load_csv_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    parse_csv_dataset(&fs::read_to_string(path)?, schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_fixture() {
        let text = "a,b,label\n1.5,2,cat\n-3,0.25,dog\n\n7,8,cat\n";
        let schema = GenericSchema {
            delimiter: Delimiter::Comma,
            has_header: true,
            label_column: 2,
            skip_columns: vec![],
        };
        let ds = parse_csv_dataset(text, &Schema::Generic(schema)).unwrap();
        assert_eq!(ds.features(), &[1.5, 2.0, -3.0, 0.25, 7.0, 8.0]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["cat".to_string(), "dog".to_string()]);
    }

    #[test]
    fn generic_skips_columns_and_reports_lines() {
        let schema = GenericSchema {
            delimiter: Delimiter::Whitespace,
            has_header: false,
            label_column: 0,
            skip_columns: vec![1],
        };
        let ds = parse_csv_dataset("x id7 1 2\ny id8 3 4\n", &Schema::Generic(schema.clone())).unwrap();
        assert_eq!(ds.cols(), 2);
        assert_eq!(ds.features(), &[1.0, 2.0, 3.0, 4.0]);
        let err = parse_csv_dataset("x id7 1 2\ny id8 3 oops\n", &Schema::Generic(schema)).unwrap_err();
        assert!(matches!(err, Error::Row { line: 2, .. }), "{err}");
    }

    #[test]
    fn yeast_rows() {
        let text = "ADT1_YEAST  0.58  0.61  0.47  0.13  0.50  0.00  0.48  0.22  MIT\n\
                    ADT2_YEAST  0.43  0.67  0.48  0.27  0.50  0.00  0.53  0.22  ERL\n";
        let ds = parse_csv_dataset(text, &Schema::Yeast).unwrap();
        assert_eq!((ds.len(), ds.cols(), ds.num_classes()), (2, 8, 10));
        assert_eq!(ds.labels(), &[2, 9]);
        let err = parse_csv_dataset("A 1 2 3 4 5 6 7 8 XYZ\n", &Schema::Yeast).unwrap_err();
        assert!(matches!(err, Error::Row { line: 1, .. }));
    }

    #[test]
    fn letter_rows() {
        let ds = parse_csv_dataset("T,2,8,3,5,1,8,13,0,6,6,10,8,0,8,0,8\n", &Schema::Letter).unwrap();
        assert_eq!(ds.labels(), &[19]);
        assert_eq!(ds.row(0)[..3], [2.0, 8.0, 3.0]);
        assert!(parse_csv_dataset("T,2,8\n", &Schema::Letter).is_err());
    }

    #[test]
    fn adult_one_hot_and_missing_values() {
        let text = "|1x3 Cross validator\n\
            39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K\n\
            54, ?, 180211, Some-college, 10, Married-civ-spouse, ?, Husband, Asian-Pac-Islander, Male, 0, 0, 60, South, >50K.\n\
            52, Self-emp-inc, 287927, HS-grad, 9, Married-civ-spouse, Exec-managerial, Wife, White, Female, 15024, 0, 40, Cuba, >50K.\n";
        let ds = parse_csv_dataset(text, &Schema::Adult).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.cols(), 6 + 8 + 16 + 7 + 14 + 6 + 5 + 2 + 41);
        assert_eq!(ds.labels(), &[0, 1]);
        let row = ds.row(0);
        assert_eq!(row[0], 39.0);
        assert_eq!(row[1..9], [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(row[9], 77516.0);
        assert_eq!(ds.continuous_columns().iter().filter(|c| **c).count(), 6);

        let bad = "39, Moon-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K\n";
        assert!(matches!(parse_csv_dataset(bad, &Schema::Adult), Err(Error::Row { line: 1, .. })));
    }
}
