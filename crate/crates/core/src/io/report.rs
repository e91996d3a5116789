//! Metrics reports in JSON and CSV.
//!
//! The JSON writer is hand-rolled so the byte layout is fixed: keys in a
//! fixed order, floats in scientific notation with 17 significant digits
//! (enough to round-trip any `f64`), missing values as `null`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat3;
use crate::metrics::QualityScores;

/// Metrics summarized in the aggregate block, in report order.
pub const AGGREGATED: [&str; 7] = ["tv", "gini", "sigma", "sigma_cuberoot", "m_in", "p_100", "deletion"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRow {
    pub sample: String,
    pub method: Option<String>,
    pub tv: f64,
    pub gini: f64,
    pub sigma: f64,
    pub sigma_cuberoot: f64,
    pub rank: usize,
    pub mean: [f64; 3],
    pub covariance: Mat3,
    pub m_in: Option<f64>,
    pub p_100: Option<f64>,
    pub deletion: Option<f64>,
}

impl MetricsRow {
    pub fn new(sample: impl Into<String>, method: Option<String>, q: &QualityScores) -> Self {
        MetricsRow {
            sample: sample.into(),
            method,
            tv: q.tv,
            gini: q.gini,
            sigma: q.locality.sigma_det,
            sigma_cuberoot: q.locality.sigma_cuberoot,
            rank: q.locality.rank,
            mean: q.locality.mean,
            covariance: q.locality.covariance,
            m_in: None,
            p_100: None,
            deletion: None,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "tv" => Some(self.tv),
            "gini" => Some(self.gini),
            "sigma" => Some(self.sigma),
            "sigma_cuberoot" => Some(self.sigma_cuberoot),
            "m_in" => self.m_in,
            "p_100" => self.p_100,
            "deletion" => self.deletion,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Aggregate {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Aggregate {
            count: values.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub tool_version: String,
    /// Hash of the effective configuration that produced the rows.
    pub config_hash: String,
    pub samples: Vec<MetricsRow>,
    pub aggregate: BTreeMap<String, Option<Aggregate>>,
}

fn compute_aggregates(rows: &[MetricsRow]) -> BTreeMap<String, Option<Aggregate>> {
    AGGREGATED
        .iter()
        .map(|&name| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.metric(name)).collect();
            (name.to_string(), Aggregate::of(&vals))
        })
        .collect()
}

fn num(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Report(format!("non-finite value {x} cannot be reported")));
    }
    Ok(format!("{x:.16e}"))
}

fn opt(x: Option<f64>) -> Result<String> {
    x.map_or(Ok("null".into()), num)
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn triple(v: &[f64; 3]) -> Result<String> {
    Ok(format!("[{}, {}, {}]", num(v[0])?, num(v[1])?, num(v[2])?))
}

impl MetricsReport {
    pub fn new(rows: Vec<MetricsRow>, config_hash: impl Into<String>) -> Self {
        let aggregate = compute_aggregates(&rows);
        MetricsReport {
            tool_version: crate::TOOL_VERSION.to_string(),
            config_hash: config_hash.into(),
            samples: rows,
            aggregate,
        }
    }

    /// Checks that the aggregate block matches the rows.
    pub fn verify(&self) -> Result<()> {
        let expected = compute_aggregates(&self.samples);
        if expected.len() != self.aggregate.len() || expected.keys().ne(self.aggregate.keys()) {
            return Err(Error::Report("aggregate block has the wrong metrics".into()));
        }
        for (name, want) in &expected {
            let ok = match (want, &self.aggregate[name]) {
                (None, None) => true,
                (Some(a), Some(b)) => a.count == b.count && close(a.mean, b.mean) && close(a.std, b.std),
                _ => false,
            };
            if !ok {
                return Err(Error::Report(format!("aggregate for `{name}` does not match the rows")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = String::new();
        s.push_str("{\n");
        writeln!(s, "  \"tool_version\": {},", string(&self.tool_version)).unwrap();
        writeln!(s, "  \"config_hash\": {},", string(&self.config_hash)).unwrap();
        if self.samples.is_empty() {
            s.push_str("  \"samples\": [],\n");
        } else {
            s.push_str("  \"samples\": [\n");
            for (i, r) in self.samples.iter().enumerate() {
                let cov = &r.covariance;
                write!(
                    s,
                    "    {{\"sample\": {}, \"method\": {}, \"tv\": {}, \"gini\": {}, \"sigma\": {}, \"sigma_cuberoot\": {}, \"rank\": {}, \"mean\": {}, \"covariance\": [{}, {}, {}], \"m_in\": {}, \"p_100\": {}, \"deletion\": {}}}",
                    string(&r.sample),
                    r.method.as_deref().map_or("null".into(), string),
                    num(r.tv)?,
                    num(r.gini)?,
                    num(r.sigma)?,
                    num(r.sigma_cuberoot)?,
                    r.rank,
                    triple(&r.mean)?,
                    triple(&cov[0])?,
                    triple(&cov[1])?,
                    triple(&cov[2])?,
                    opt(r.m_in)?,
                    opt(r.p_100)?,
                    opt(r.deletion)?,
                )
                .unwrap();
                s.push_str(if i + 1 < self.samples.len() { ",\n" } else { "\n" });
            }
            s.push_str("  ],\n");
        }
        s.push_str("  \"aggregate\": {\n");
        let n = self.aggregate.len();
        for (i, (name, agg)) in self.ordered_aggregates().enumerate() {
            let body = match agg {
                None => "null".to_string(),
                Some(a) => format!("{{\"count\": {}, \"mean\": {}, \"std\": {}}}", a.count, num(a.mean)?, num(a.std)?),
            };
            write!(s, "    {}: {body}", string(name)).unwrap();
            s.push_str(if i + 1 < n { ",\n" } else { "\n" });
        }
        s.push_str("  }\n}\n");
        Ok(s)
    }

    /// Aggregates in report order, then any unknown names alphabetically.
    fn ordered_aggregates(&self) -> impl Iterator<Item = (&String, &Option<Aggregate>)> {
        let known = AGGREGATED.iter().filter_map(|k| self.aggregate.get_key_value(*k));
        let rest = self.aggregate.iter().filter(|(k, _)| !AGGREGATED.contains(&k.as_str()));
        known.chain(rest)
    }

    /// Parses a JSON report and verifies its aggregates.
    pub fn from_json(text: &str) -> Result<Self> {
        let r: MetricsReport = serde_json::from_str(text)?;
        r.verify()?;
        Ok(r)
    }

    /// One row per sample, then one `#mean` and one `#std` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sample", "method", "tv", "gini", "sigma", "sigma_cuberoot", "rank"];
        header.extend(["mean_t", "mean_u", "mean_w"]);
        header.extend(["cov_tt", "cov_tu", "cov_tw", "cov_uu", "cov_uw", "cov_ww"]);
        header.extend(["m_in", "p_100", "deletion"]);
        w.write_record(&header)?;
        for r in &self.samples {
            let c = &r.covariance;
            let mut rec = vec![
                r.sample.clone(),
                r.method.clone().unwrap_or_default(),
                num(r.tv)?,
                num(r.gini)?,
                num(r.sigma)?,
                num(r.sigma_cuberoot)?,
                r.rank.to_string(),
            ];
            for x in r.mean.iter().chain([&c[0][0], &c[0][1], &c[0][2], &c[1][1], &c[1][2], &c[2][2]]) {
                rec.push(num(*x)?);
            }
            for x in [r.m_in, r.p_100, r.deletion] {
                rec.push(x.map_or(Ok(String::new()), num)?);
            }
            w.write_record(&rec)?;
        }
        for (label, pick) in [("#mean", 0usize), ("#std", 1)] {
            let mut rec: Vec<String> = vec![label.into(), String::new()];
            let cell = |name: &str| -> Result<String> {
                match self.aggregate.get(name).copied().flatten() {
                    Some(a) => num(if pick == 0 { a.mean } else { a.std }),
                    None => Ok(String::new()),
                }
            };
            for name in ["tv", "gini", "sigma", "sigma_cuberoot"] {
                rec.push(cell(name)?);
            }
            rec.extend(std::iter::repeat_n(String::new(), 10));
            for name in ["m_in", "p_100", "deletion"] {
                rec.push(cell(name)?);
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_json(&text).map_err(|e| e.at(path))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}
