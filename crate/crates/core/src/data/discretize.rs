//! Training-split discretization of raw tabular columns into categorical codes.
//!
//! Every feature ends up with a finite domain: a category vocabulary, a set of
//! observed discrete values, or quantile bin edges. Codes for ordered domains
//! follow the semantic order, so `code_a < code_b` means "lower".

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::schema::{FeatureKind, Schema};
use crate::data::table::RawTable;
use crate::error::{io_err, Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Categorical { vocab: Vec<String>, ordered: bool },
    Discrete { values: Vec<f64> },
    /// Right-closed bins: code `k` holds `edges[k-1] < v <= edges[k]`, with the
    /// outermost bins open-ended.
    Binned {
        edges: Vec<f64>,
        representatives: Vec<f64>,
    },
}

impl Domain {
    pub fn cardinality(&self) -> usize {
        match self {
            Domain::Categorical { vocab, .. } => vocab.len(),
            Domain::Discrete { values } => values.len(),
            Domain::Binned { edges, .. } => edges.len() + 1,
        }
    }

    pub fn is_ordered(&self) -> bool {
        !matches!(self, Domain::Categorical { ordered: false, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFeature {
    pub name: String,
    pub domain: Domain,
    /// Code used for values outside the domain (the most frequent training code).
    pub fallback: usize,
    /// Set when a categorical-like column was coerced to numeric to get an ordering.
    #[serde(default)]
    pub coerced: bool,
}

impl FittedFeature {
    /// Maps one raw value to its code and reports whether it was in-domain.
    pub fn encode(&self, raw: &str) -> (usize, bool) {
        match &self.domain {
            Domain::Categorical { vocab, .. } => match vocab.iter().position(|v| v == raw) {
                Some(code) => (code, true),
                None => (self.fallback, false),
            },
            Domain::Discrete { values } => match parse_number(raw) {
                Some(v) if v.is_finite() => {
                    // values are sorted ascending
                    let pos = values.partition_point(|&x| x < v);
                    if pos < values.len() && values[pos] == v {
                        (pos, true)
                    } else {
                        (nearest(values, v, pos), false)
                    }
                }
                Some(v) if v == f64::INFINITY => (values.len() - 1, false),
                Some(v) if v == f64::NEG_INFINITY => (0, false),
                _ => (self.fallback, false),
            },
            Domain::Binned { edges, .. } => match parse_number(raw) {
                Some(v) if v.is_finite() => (bin_of(edges, v), true),
                Some(v) if v == f64::INFINITY => (edges.len(), false),
                Some(v) if v == f64::NEG_INFINITY => (0, false),
                _ => (self.fallback, false),
            },
        }
    }

    /// Human-readable label of a code.
    pub fn describe(&self, code: usize) -> String {
        match &self.domain {
            Domain::Categorical { vocab, .. } => vocab[code].clone(),
            Domain::Discrete { values } => format_number(values[code]),
            Domain::Binned { edges, .. } => {
                let lo = if code == 0 { "-inf".to_string() } else { format_number(edges[code - 1]) };
                let hi = if code == edges.len() { "inf".to_string() } else { format_number(edges[code]) };
                format!("({lo}, {hi}]")
            }
        }
    }

    /// Scalar stand-in for a code: the discrete value, or the training median
    /// of the bin. Categorical codes have none.
    pub fn representative(&self, code: usize) -> Option<f64> {
        match &self.domain {
            Domain::Categorical { .. } => None,
            Domain::Discrete { values } => values.get(code).copied(),
            Domain::Binned { representatives, .. } => representatives.get(code).copied(),
        }
    }
}

/// Codes plus per-cell in-domain flags for a transformed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub rows: Vec<Vec<usize>>,
    pub in_domain: Vec<Vec<bool>>,
}

impl Encoded {
    pub fn flagged_rows(&self) -> usize {
        self.in_domain.iter().filter(|r| r.iter().any(|&b| !b)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub features: Vec<FittedFeature>,
    pub bins_per_numeric: usize,
}

impl Discretizer {
    /// Fits per-feature domains on the training split only.
    pub fn fit(train: &RawTable, schema: &Schema, bins_per_numeric: usize) -> Result<Self> {
        if bins_per_numeric < 2 {
            return Err(Error::Precondition(format!(
                "bins_per_numeric must be at least 2, got {bins_per_numeric}"
            )));
        }
        schema.check()?;
        let table = train.project(&schema.names())?;
        let mut features = Vec::with_capacity(schema.features.len());
        for (j, spec) in schema.features.iter().enumerate() {
            let column: Vec<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
            if column.is_empty() {
                return Err(Error::EmptyColumn(spec.name.clone()));
            }
            let needs_order = schema.requires_order(j);
            let (domain, coerced) = match spec.kind {
                FeatureKind::OrderedCategorical => match &spec.order {
                    Some(order) => {
                        if let Some(bad) = column.iter().find(|v| !order.iter().any(|o| o == *v)) {
                            return Err(Error::Ordering {
                                feature: spec.name.clone(),
                                reason: format!("training value `{bad}` is missing from the declared order"),
                            });
                        }
                        (Domain::Categorical { vocab: order.clone(), ordered: true }, false)
                    }
                    None => (coerce_numeric(&spec.name, &column, schema.discrete_threshold, bins_per_numeric)?, true),
                },
                FeatureKind::UnorderedCategorical => {
                    if needs_order {
                        (coerce_numeric(&spec.name, &column, schema.discrete_threshold, bins_per_numeric)?, true)
                    } else {
                        let vocab: BTreeSet<&str> = column.iter().copied().collect();
                        (
                            Domain::Categorical {
                                vocab: vocab.into_iter().map(str::to_string).collect(),
                                ordered: false,
                            },
                            false,
                        )
                    }
                }
                FeatureKind::DiscreteNumeric => {
                    let values = parse_column(&spec.name, &column)?;
                    (discrete_domain(&values), false)
                }
                FeatureKind::BinnedNumeric => {
                    let values = parse_column(&spec.name, &column)?;
                    (binned_domain(&values, bins_per_numeric), false)
                }
                FeatureKind::Numeric => {
                    let values = parse_column(&spec.name, &column)?;
                    (numeric_domain(&values, schema.discrete_threshold, bins_per_numeric), false)
                }
            };
            let mut feature = FittedFeature { name: spec.name.clone(), domain, fallback: 0, coerced };
            feature.fallback = mode_code(&feature, &column);
            debug_assert!(feature.domain.cardinality() >= 1);
            features.push(feature);
        }
        Ok(Self { features, bins_per_numeric })
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.domain.cardinality()).collect()
    }

    pub fn ordered_flags(&self) -> Vec<bool> {
        self.features.iter().map(|f| f.domain.is_ordered()).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    fn aligned<'a>(&self, table: &'a RawTable) -> Result<std::borrow::Cow<'a, RawTable>> {
        let names = self.names();
        if table.header.iter().map(String::as_str).eq(names.iter().copied()) {
            Ok(std::borrow::Cow::Borrowed(table))
        } else {
            Ok(std::borrow::Cow::Owned(table.project(&names)?))
        }
    }

    /// Maps every cell to a code; out-of-domain cells get fallback codes and are flagged.
    pub fn transform(&self, table: &RawTable) -> Result<Encoded> {
        let table = self.aligned(table)?;
        let mut rows = Vec::with_capacity(table.len());
        let mut in_domain = Vec::with_capacity(table.len());
        for raw in &table.rows {
            let (codes, flags): (Vec<usize>, Vec<bool>) = self
                .features
                .iter()
                .zip(raw)
                .map(|(f, v)| f.encode(v))
                .unzip();
            rows.push(codes);
            in_domain.push(flags);
        }
        Ok(Encoded { rows, in_domain })
    }

    pub fn transform_codes(&self, table: &RawTable) -> Result<Vec<Vec<usize>>> {
        Ok(self.transform(table)?.rows)
    }

    /// Renders codes back to readable per-feature labels.
    pub fn describe(&self, codes: &[usize]) -> Vec<String> {
        self.features.iter().zip(codes).map(|(f, &c)| f.describe(c)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes integer codes as CSV under the given header.
pub fn write_codes_csv<W: std::io::Write>(writer: W, header: &[&str], rows: &[Vec<usize>]) -> Result<()> {
    let table = RawTable {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| r.iter().map(|c| c.to_string()).collect())
            .collect(),
    };
    table.write_csv(writer)
}

fn parse_number(raw: &str) -> Option<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok()
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn parse_column(name: &str, column: &[&str]) -> Result<Vec<f64>> {
    column
        .iter()
        .map(|raw| match parse_number(raw) {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse(format!("feature `{name}`: `{raw}` is not a finite number"))),
        })
        .collect()
}

fn coerce_numeric(name: &str, column: &[&str], threshold: usize, bins: usize) -> Result<Domain> {
    let values = column
        .iter()
        .map(|raw| parse_number(raw).filter(|v| v.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::Ordering {
            feature: name.to_string(),
            reason: "no explicit order and values are not numeric".into(),
        })?;
    Ok(numeric_domain(&values, threshold, bins))
}

fn numeric_domain(values: &[f64], threshold: usize, bins: usize) -> Domain {
    if distinct_sorted(values).len() <= threshold {
        discrete_domain(values)
    } else {
        binned_domain(values, bins)
    }
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn discrete_domain(values: &[f64]) -> Domain {
    Domain::Discrete { values: distinct_sorted(values) }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Equal-mass quantile bins with duplicate edges removed and empty bins merged.
/// Falls back to a discrete domain when no interior edge survives.
fn binned_domain(values: &[f64], bins: usize) -> Domain {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins)
        .map(|k| quantile_sorted(&sorted, k as f64 / bins as f64))
        .collect();
    edges.dedup();
    // the top edge can coincide with the maximum, which leaves the last bin empty
    loop {
        let mut counts = vec![0usize; edges.len() + 1];
        for &v in &sorted {
            counts[bin_of(&edges, v)] += 1;
        }
        match counts.iter().position(|&c| c == 0) {
            Some(k) if !edges.is_empty() => {
                let drop = if k < edges.len() { k } else { k - 1 };
                edges.remove(drop);
            }
            _ => break,
        }
    }
    if edges.is_empty() {
        return discrete_domain(values);
    }
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); edges.len() + 1];
    for &v in &sorted {
        members[bin_of(&edges, v)].push(v);
    }
    let representatives = members.iter().map(|m| quantile_sorted(m, 0.5)).collect();
    Domain::Binned { edges, representatives }
}

fn nearest(values: &[f64], v: f64, pos: usize) -> usize {
    if pos == 0 {
        return 0;
    }
    if pos >= values.len() {
        return values.len() - 1;
    }
    if (v - values[pos - 1]) <= (values[pos] - v) {
        pos - 1
    } else {
        pos
    }
}

fn mode_code(feature: &FittedFeature, column: &[&str]) -> usize {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for raw in column {
        let (code, _) = feature.encode(raw);
        *counts.entry(code).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(code, _)| code)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{CausalPair, FeatureSpec};

    fn schema(features: Vec<FeatureSpec>) -> Schema {
        Schema {
            name: String::new(),
            label: "y".into(),
            positive: "1".into(),
            discrete_threshold: 25,
            features,
            causal: vec![],
        }
    }

    fn one_col(name: &str, values: &[&str]) -> RawTable {
        RawTable::new(vec![name.into()], values.iter().map(|v| vec![v.to_string()]).collect()).unwrap()
    }

    #[test]
    fn quartile_edges_on_one_to_eight() {
        let t = one_col("x", &["1", "2", "3", "4", "5", "6", "7", "8"]);
        let s = schema(vec![FeatureSpec::new("x", FeatureKind::BinnedNumeric)]);
        let d = Discretizer::fit(&t, &s, 4).unwrap();
        match &d.features[0].domain {
            Domain::Binned { edges, representatives } => {
                assert_eq!(edges, &vec![2.75, 4.5, 6.25]);
                assert_eq!(representatives, &vec![1.5, 3.5, 5.5, 7.5]);
            }
            other => panic!("expected bins, got {other:?}"),
        }
        assert_eq!(d.cardinalities(), vec![4]);
        assert_eq!(d.transform_codes(&t).unwrap().concat(), vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn constant_column_falls_back_to_discrete() {
        let t = one_col("x", &["5", "5", "5", "5"]);
        let s = schema(vec![FeatureSpec::new("x", FeatureKind::BinnedNumeric)]);
        let d = Discretizer::fit(&t, &s, 10).unwrap();
        assert_eq!(d.features[0].domain, Domain::Discrete { values: vec![5.0] });
        assert_eq!(d.cardinalities(), vec![1]);
    }

    #[test]
    fn explicit_order_defines_codes() {
        let t = one_col("lvl", &["high", "low", "med", "low"]);
        let s = schema(vec![FeatureSpec::new("lvl", FeatureKind::OrderedCategorical).ordered(&["low", "med", "high"])]);
        let d = Discretizer::fit(&t, &s, 10).unwrap();
        assert_eq!(d.cardinalities(), vec![3]);
        assert_eq!(d.transform_codes(&t).unwrap().concat(), vec![2, 0, 1, 0]);
        assert!(d.ordered_flags()[0]);
    }

    #[test]
    fn monotone_categorical_without_order_fails_hard() {
        let t = one_col("grade", &["a", "b", "c"]);
        let s = schema(vec![FeatureSpec::new("grade", FeatureKind::UnorderedCategorical).monotone()]);
        assert!(matches!(Discretizer::fit(&t, &s, 4), Err(Error::Ordering { .. })));
    }

    #[test]
    fn causal_categorical_with_numeric_values_is_coerced() {
        let t = RawTable::from_strs(&["a", "b"], &[&["1", "x"], &["3", "y"], &["2", "x"]]).unwrap();
        let mut s = schema(vec![
            FeatureSpec::new("a", FeatureKind::UnorderedCategorical),
            FeatureSpec::new("b", FeatureKind::UnorderedCategorical),
        ]);
        s.causal.push(CausalPair { effect: "a".into(), cause: "b".into() });
        // cause `b` is not numeric, so fitting halts
        assert!(matches!(Discretizer::fit(&t, &s, 4), Err(Error::Ordering { .. })));
        s.causal[0] = CausalPair { effect: "b".into(), cause: "a".into() };
        s.features[1].kind = FeatureKind::OrderedCategorical;
        s.features[1].order = Some(vec!["x".into(), "y".into()]);
        let d = Discretizer::fit(&t, &s, 4).unwrap();
        assert!(d.features[0].coerced);
        assert_eq!(d.features[0].domain, Domain::Discrete { values: vec![1.0, 2.0, 3.0] });
    }

    #[test]
    fn empty_column_fails() {
        let t = RawTable::new(vec!["x".into()], vec![]).unwrap();
        let s = schema(vec![FeatureSpec::new("x", FeatureKind::Numeric)]);
        assert!(matches!(Discretizer::fit(&t, &s, 4), Err(Error::EmptyColumn(_))));
    }

    #[test]
    fn transform_handles_out_of_domain_values() {
        let train = RawTable::from_strs(
            &["cat", "n", "b"],
            &[&["a", "1", "10"], &["b", "3", "20"], &["a", "5", "30"], &["a", "3", "40"]],
        )
        .unwrap();
        let s = schema(vec![
            FeatureSpec::new("cat", FeatureKind::UnorderedCategorical),
            FeatureSpec::new("n", FeatureKind::DiscreteNumeric),
            FeatureSpec::new("b", FeatureKind::BinnedNumeric),
        ]);
        let d = Discretizer::fit(&train, &s, 2).unwrap();
        let test = RawTable::from_strs(
            &["cat", "n", "b"],
            &[&["a", "3", "-100"], &["zzz", "4.1", "1e9"], &["b", "inf", "NaN"]],
        )
        .unwrap();
        let enc = d.transform(&test).unwrap();
        // exact value, below-all-edges clamp
        assert_eq!(enc.rows[0], vec![0, 1, 0]);
        assert_eq!(enc.in_domain[0], vec![true, true, true]);
        // unseen category -> mode "a"; 4.1 snaps to 5; huge value clamps to last bin
        assert_eq!(enc.rows[1], vec![0, 2, 1]);
        assert_eq!(enc.in_domain[1], vec![false, false, true]);
        assert_eq!(enc.in_domain[2], vec![true, false, false]);
        assert_eq!(enc.flagged_rows(), 2);
    }

    #[test]
    fn discretizer_json_round_trip() {
        let t = one_col("x", &["1", "2", "3", "4", "5", "6", "7", "8"]);
        let s = schema(vec![FeatureSpec::new("x", FeatureKind::BinnedNumeric)]);
        let d = Discretizer::fit(&t, &s, 4).unwrap();
        let back: Discretizer = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn empty_bins_are_merged() {
        // interpolated edges 2.5, 5, 7.5 between two points leave the middle bins empty
        let t = one_col("x", &["0", "10"]);
        let s = schema(vec![FeatureSpec::new("x", FeatureKind::BinnedNumeric)]);
        let d = Discretizer::fit(&t, &s, 4).unwrap();
        let codes = d.transform_codes(&t).unwrap().concat();
        let card = d.cardinalities()[0];
        for k in 0..card {
            assert!(codes.contains(&k), "bin {k} empty");
        }
    }
}
