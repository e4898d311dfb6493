//! Crowd-rating aggregation: per-rater disagreement, the median agreement
//! threshold, confidence-weighted algorithm scores, and the auxiliary
//! distribution reports.
//!
//! Ratings arrive as a header-bearing CSV with columns `query_id`,
//! `rater_id`, then one column per algorithm; values are integers in
//! `{-1, 0, 1, 2}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::PartDescriptor;
use crate::recommenders::QueryClass;

pub const RATING_MIN: i8 = -1;
pub const RATING_MAX: i8 = 2;

/// One rater's scores for every algorithm on one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatingRecord {
    pub query_id: String,
    pub rater_id: String,
    pub ratings: Vec<i8>,
}

/// All rating records plus the algorithm column names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsTable {
    pub algorithms: Vec<String>,
    pub records: Vec<RatingRecord>,
}

impl RatingsTable {
    pub fn new(algorithms: Vec<String>, records: Vec<RatingRecord>) -> Result<Self> {
        if algorithms.is_empty() {
            return Err(Error::EmptyInput("algorithm list"));
        }
        for r in &records {
            validate_record(r, algorithms.len())?;
        }
        Ok(RatingsTable { algorithms, records })
    }
}

fn validate_record(r: &RatingRecord, algorithms: usize) -> Result<()> {
    if r.ratings.len() != algorithms {
        return Err(Error::InvalidParameter(format!(
            "rating record ({}, {}) has {} values, expected {algorithms}",
            r.query_id,
            r.rater_id,
            r.ratings.len()
        )));
    }
    for &v in &r.ratings {
        if !(RATING_MIN..=RATING_MAX).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "rating {v} out of range {RATING_MIN}..={RATING_MAX} for ({}, {})",
                r.query_id, r.rater_id
            )));
        }
    }
    Ok(())
}

/// Parse the ratings CSV. The header must start with `query_id,rater_id`;
/// every remaining column is an algorithm.
pub fn read_ratings_csv(path: &Path) -> Result<RatingsTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.into(), source: e })?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "query_id" || cols[1] != "rater_id" {
        return Err(Error::InvalidParameter(format!(
            "ratings CSV must start with query_id,rater_id and at least one algorithm column, got {cols:?}"
        )));
    }
    let algorithms: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Csv { path: path.into(), source: e })?;
        let fields: Vec<&str> = row.iter().collect();
        if fields.len() != cols.len() {
            return Err(Error::InvalidParameter(format!(
                "ratings row has {} fields, expected {}",
                fields.len(),
                cols.len()
            )));
        }
        let ratings: Vec<i8> = fields[2..]
            .iter()
            .map(|f| {
                f.trim().parse::<i8>().map_err(|_| {
                    Error::InvalidParameter(format!("rating {f:?} is not an integer"))
                })
            })
            .collect::<Result<_>>()?;
        records.push(RatingRecord {
            query_id: fields[0].to_string(),
            rater_id: fields[1].to_string(),
            ratings,
        });
    }
    RatingsTable::new(algorithms, records)
}

/// Per-rater disagreement for one query: the summed L1 distance from every
/// other rater's rating vector (the self term contributes 0).
pub fn disagreement(records: &[&RatingRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("rating records"));
    }
    let a = records[0].ratings.len();
    for r in records {
        if r.ratings.len() != a {
            return Err(Error::InvalidParameter(format!(
                "inconsistent algorithm count: {} vs {a}",
                r.ratings.len()
            )));
        }
    }
    Ok(records
        .iter()
        .map(|ri| {
            records
                .iter()
                .map(|rj| {
                    ri.ratings
                        .iter()
                        .zip(&rj.ratings)
                        .map(|(&x, &y)| (x as i32 - y as i32).abs() as f64)
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// Median over all disagreement values; an even count averages the middle
/// two.
pub fn threshold(gammas: &[f64]) -> Result<f64> {
    if gammas.is_empty() {
        return Err(Error::EmptyInput("disagreement values"));
    }
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEntry {
    pub query_id: String,
    pub rater_id: String,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryAgreement {
    pub query_id: String,
    pub total_raters: usize,
    pub retained_raters: usize,
    /// Retained / total.
    pub confidence: f64,
}

/// Full output of the agreement-filtered scoring pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementStats {
    pub algorithms: Vec<String>,
    /// The agreement threshold A_T.
    pub threshold: f64,
    pub gammas: Vec<GammaEntry>,
    pub queries: Vec<QueryAgreement>,
    /// Raw per-algorithm scores (confidence-weighted sums of retained-mean
    /// ratings).
    pub raw_scores: Vec<f64>,
    /// Raw scores mapped onto [0, 1]; absent when no query retained any
    /// rater.
    pub normalized_scores: Option<Vec<f64>>,
    /// Queries whose raters were all filtered out; they contribute 0.
    pub excluded_queries: Vec<String>,
    /// Total confidence mass over contributing queries.
    pub confidence_total: f64,
}

fn group_by_query(table: &RatingsTable) -> BTreeMap<&str, Vec<&RatingRecord>> {
    let mut groups: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in &table.records {
        groups.entry(r.query_id.as_str()).or_default().push(r);
    }
    groups
}

/// Score every algorithm with a precomputed threshold. Raters are retained
/// only on strict inequality `gamma < a_t`; queries retaining nobody
/// contribute 0 and are reported in `excluded_queries`.
pub fn score(table: &RatingsTable, a_t: f64) -> Result<AgreementStats> {
    if table.records.is_empty() {
        return Err(Error::EmptyInput("rating records"));
    }
    let algorithms = table.algorithms.len();
    for r in &table.records {
        validate_record(r, algorithms)?;
    }

    let groups = group_by_query(table);
    let mut gammas = Vec::new();
    let mut queries = Vec::new();
    let mut excluded = Vec::new();
    let mut raw = vec![0.0; algorithms];
    let mut confidence_total = 0.0;

    for (query_id, raters) in &groups {
        let g = disagreement(raters)?;
        let retained: Vec<usize> = (0..raters.len()).filter(|&i| g[i] < a_t).collect();
        for (r, &gamma) in raters.iter().zip(&g) {
            gammas.push(GammaEntry {
                query_id: query_id.to_string(),
                rater_id: r.rater_id.clone(),
                gamma,
            });
        }
        let confidence = retained.len() as f64 / raters.len() as f64;
        queries.push(QueryAgreement {
            query_id: query_id.to_string(),
            total_raters: raters.len(),
            retained_raters: retained.len(),
            confidence,
        });
        if retained.is_empty() {
            excluded.push(query_id.to_string());
            continue;
        }
        confidence_total += confidence;
        for a in 0..algorithms {
            let sum: f64 = retained
                .iter()
                .map(|&i| raters[i].ratings[a] as f64)
                .sum();
            raw[a] += confidence * (sum / retained.len() as f64);
        }
    }

    let normalized = if confidence_total > 0.0 {
        Some(
            raw.iter()
                .map(|s| (s / confidence_total + 1.0) / 3.0)
                .collect(),
        )
    } else {
        None
    };

    Ok(AgreementStats {
        algorithms: table.algorithms.clone(),
        threshold: a_t,
        gammas,
        queries,
        raw_scores: raw,
        normalized_scores: normalized,
        excluded_queries: excluded,
        confidence_total,
    })
}

/// Convenience pass: disagreement on every query, the median threshold, and
/// the filtered scores, on one table.
pub fn evaluate(table: &RatingsTable) -> Result<AgreementStats> {
    let groups = group_by_query(table);
    let mut all_gammas = Vec::new();
    for raters in groups.values() {
        all_gammas.extend(disagreement(raters)?);
    }
    let a_t = threshold(&all_gammas)?;
    score(table, a_t)
}

/// Mean fraction of solid retrievals per rating bucket. Lists with no
/// retrievals are skipped.
pub fn solid_probability<F>(
    lists: &[(i8, Vec<PartDescriptor>)],
    classify: F,
) -> BTreeMap<i8, f64>
where
    F: Fn(&PartDescriptor) -> bool,
{
    let mut sums: BTreeMap<i8, (f64, usize)> = BTreeMap::new();
    for (rating, items) in lists {
        if items.is_empty() {
            continue;
        }
        let solid = items.iter().filter(|d| classify(d)).count() as f64;
        let fraction = solid / items.len() as f64;
        let entry = sums.entry(*rating).or_insert((0.0, 0));
        entry.0 += fraction;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(rating, (total, count))| (rating, total / count as f64))
        .collect()
}

/// Histograms for one query class.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ClassHistograms {
    pub queries: usize,
    /// Retained-rater count per query.
    pub retained_counts: BTreeMap<usize, usize>,
    /// Rating values cast by retained raters, over all algorithms.
    pub rating_values: BTreeMap<i8, usize>,
}

/// Agreement distributions split by solid vs patterned queries.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AgreementReport {
    pub solid: ClassHistograms,
    pub patterned: ClassHistograms,
}

/// Build retained-rater and agreed-rating histograms, split by each query's
/// pattern class. Every query must be tagged in `classes`.
pub fn agreement_report(
    table: &RatingsTable,
    classes: &BTreeMap<String, QueryClass>,
) -> Result<AgreementReport> {
    let groups = group_by_query(table);
    let mut all_gammas = Vec::new();
    for raters in groups.values() {
        all_gammas.extend(disagreement(raters)?);
    }
    let a_t = threshold(&all_gammas)?;

    let mut report = AgreementReport::default();
    for (query_id, raters) in &groups {
        let class = classes.get(*query_id).ok_or_else(|| {
            Error::InvalidParameter(format!("query {query_id:?} has no pattern class tag"))
        })?;
        let bucket = match class {
            QueryClass::Solid => &mut report.solid,
            QueryClass::Patterned => &mut report.patterned,
        };
        let g = disagreement(raters)?;
        let retained: Vec<usize> = (0..raters.len()).filter(|&i| g[i] < a_t).collect();
        bucket.queries += 1;
        *bucket.retained_counts.entry(retained.len()).or_insert(0) += 1;
        for &i in &retained {
            for &v in &raters[i].ratings {
                *bucket.rating_values.entry(v).or_insert(0) += 1;
            }
        }
    }
    Ok(report)
}
