//! Literal handling: sensor-series aggregation, range discretisation,
//! literal-entity labels and midpoint back-conversion.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STAGES: usize = 3;
pub const DEFAULT_SENSOR_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    EqualWidth,
    EqualFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinningScheme {
    feature: String,
    strategy: BinStrategy,
    edges: Vec<f64>,
    midpoints: Vec<f64>,
}

#[derive(Deserialize)]
struct RawScheme {
    feature: String,
    strategy: BinStrategy,
    edges: Vec<f64>,
    midpoints: Vec<f64>,
}

impl<'de> Deserialize<'de> for BinningScheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawScheme::deserialize(d)?;
        let scheme = BinningScheme::from_edges(raw.feature, raw.strategy, raw.edges)
            .map_err(serde::de::Error::custom)?;
        let stored_ok = raw.midpoints.len() == scheme.midpoints.len()
            && raw
                .midpoints
                .iter()
                .zip(&scheme.midpoints)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
        if !stored_ok {
            return Err(serde::de::Error::custom("midpoints inconsistent with edges"));
        }
        Ok(scheme)
    }
}

impl BinningScheme {
    /// Builds a scheme from strictly increasing edges (at least two).
    pub fn from_edges(
        feature: impl Into<String>,
        strategy: BinStrategy,
        edges: Vec<f64>,
    ) -> Result<Self> {
        let feature = feature.into();
        if edges.len() < 2 {
            return Err(Error::DegenerateRange(format!(
                "{feature}: need at least two distinct edges"
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!("{feature}: bin edge")));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateRange(format!(
                "{feature}: edges must be strictly increasing"
            )));
        }
        let midpoints = edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(BinningScheme { feature, strategy, edges, midpoints })
    }

    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn strategy(&self) -> BinStrategy {
        self.strategy
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Number of bins.
    pub fn k(&self) -> usize {
        self.midpoints.len()
    }

    pub fn bin_width(&self, bin: usize) -> Option<f64> {
        (bin < self.k()).then(|| self.edges[bin + 1] - self.edges[bin])
    }
}

/// Stage means and overall mean of one sensor series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedLiteral {
    pub feature: String,
    pub stage_means: Vec<f64>,
    pub overall_mean: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Splits `series` into `n_stages` contiguous segments whose lengths differ
/// by at most one (earlier segments absorb the remainder) and averages each.
pub fn aggregate_series(
    feature: &str,
    series: &[f64],
    n_stages: usize,
) -> Result<AggregatedLiteral> {
    if series.is_empty() {
        return Err(Error::InvalidArgument(format!("{feature}: empty series")));
    }
    if n_stages == 0 || n_stages > series.len() {
        return Err(Error::InvalidArgument(format!(
            "{feature}: {n_stages} stages for a series of length {}",
            series.len()
        )));
    }
    let base = series.len() / n_stages;
    let rem = series.len() % n_stages;
    let mut stage_means = Vec::with_capacity(n_stages);
    let mut start = 0;
    for s in 0..n_stages {
        let len = base + usize::from(s < rem);
        stage_means.push(mean(&series[start..start + len]));
        start += len;
    }
    Ok(AggregatedLiteral {
        feature: feature.to_string(),
        stage_means,
        overall_mean: mean(series),
    })
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be non-empty and ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_finite(feature: &str, values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!("{feature}: no values to fit")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{feature}: fitting sample")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Fits `k` bins over `values`.
///
/// Equal-frequency edges sit at the i/k sample quantiles; coinciding edges
/// are merged, which can leave fewer than `k` bins.
pub fn fit_bins(
    feature: &str,
    values: &[f64],
    strategy: BinStrategy,
    k: usize,
) -> Result<BinningScheme> {
    if k == 0 {
        return Err(Error::InvalidArgument(format!("{feature}: k must be positive")));
    }
    let sorted = sorted_finite(feature, values)?;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mut edges = match strategy {
        BinStrategy::EqualWidth => {
            let w = (hi - lo) / k as f64;
            let mut e: Vec<f64> = (0..k).map(|i| lo + w * i as f64).collect();
            e.push(hi);
            e
        }
        BinStrategy::EqualFrequency => {
            let mut distinct = sorted.clone();
            distinct.dedup();
            if distinct.len() < k {
                return Err(Error::InvalidArgument(format!(
                    "{feature}: {k} bins requested but only {} distinct values",
                    distinct.len()
                )));
            }
            let mut e: Vec<f64> =
                (0..k).map(|i| quantile_sorted(&sorted, i as f64 / k as f64)).collect();
            e[0] = lo;
            e.push(hi);
            e
        }
    };
    edges.dedup();
    BinningScheme::from_edges(feature, strategy, edges)
}

/// Equal-width bins of a fixed `width`, anchored at integer multiples of the width
/// so that neighbouring classes differ by exactly `width`.
pub fn fit_bins_by_width(feature: &str, values: &[f64], width: f64) -> Result<BinningScheme> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!("{feature}: width must be positive")));
    }
    let sorted = sorted_finite(feature, values)?;
    let first = (sorted[0] / width).floor() as i64;
    let last = (sorted[sorted.len() - 1] / width).floor() as i64 + 1;
    let edges = (first..=last).map(|i| i as f64 * width).collect();
    BinningScheme::from_edges(feature, BinStrategy::EqualWidth, edges)
}

/// Bin index of `x`: half-open `[lo, hi)` intervals, clamped at both ends.
pub fn discretize(x: f64, scheme: &BinningScheme) -> usize {
    let k = scheme.k();
    scheme.edges[1..k].partition_point(|&e| e <= x)
}

/// Six significant digits with trailing zeros kept, e.g. `5.00000`, `12.5000`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn literal_entity_label(scheme: &BinningScheme, bin: usize) -> Result<String> {
    if bin >= scheme.k() {
        return Err(Error::OutOfRange(format!(
            "bin {bin} of {} ({} bins)",
            scheme.feature,
            scheme.k()
        )));
    }
    Ok(format!(
        "lit:{}:[{},{})",
        scheme.feature,
        format_sig6(scheme.edges[bin]),
        format_sig6(scheme.edges[bin + 1])
    ))
}

pub fn bin_midpoint(scheme: &BinningScheme, bin: usize) -> Result<f64> {
    scheme.midpoints.get(bin).copied().ok_or_else(|| {
        Error::OutOfRange(format!("bin {bin} of {} ({} bins)", scheme.feature, scheme.k()))
    })
}

/// All binning schemes of one KG build, keyed by feature name.
pub type SchemeSet = BTreeMap<String, BinningScheme>;

pub fn write_schemes(path: &Path, schemes: &SchemeSet) -> Result<()> {
    let body = serde_json::to_string_pretty(schemes)
        .map_err(|e| Error::Data(format!("serialising schemes: {e}")))?;
    std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_schemes(path: &Path) -> Result<SchemeSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::parse(path.display().to_string(), e.line(), e.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aggregate_examples() {
        let a = aggregate_series("c", &[2., 2., 4., 4., 6., 6.], 3).unwrap();
        assert_eq!(a.stage_means, vec![2., 4., 6.]);
        assert_eq!(a.overall_mean, 4.0);

        let a = aggregate_series("c", &[5.], 1).unwrap();
        assert_eq!((a.stage_means, a.overall_mean), (vec![5.], 5.));

        // segment sizes 2, 2, 1
        let a = aggregate_series("c", &[1., 2., 3., 4., 5.], 3).unwrap();
        let by_hand = [(1. + 2.) / 2., (3. + 4.) / 2., 5. / 1.];
        assert_eq!(a.stage_means, by_hand);
        assert_eq!(a.overall_mean, 15. / 5.);
        // overall mean is not the mean of stage means here
        assert!((mean(&a.stage_means) - a.overall_mean).abs() > 0.1);

        assert!(aggregate_series("c", &[], 1).is_err());
        assert!(aggregate_series("c", &[1., 2.], 3).is_err());
        assert!(aggregate_series("c", &[1., 2.], 0).is_err());
    }

    #[test]
    fn equal_width_halving() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        let s = fit_bins("x", &v, BinStrategy::EqualWidth, 2).unwrap();
        assert_eq!(s.edges(), [0., 5., 10.]);
        assert_eq!(s.midpoints(), [2.5, 7.5]);
    }

    #[test]
    fn constant_values_are_degenerate() {
        let v = [3.0; 5];
        for strat in [BinStrategy::EqualWidth, BinStrategy::EqualFrequency] {
            assert!(matches!(fit_bins("x", &v, strat, 1), Err(Error::DegenerateRange(_))));
        }
        assert!(fit_bins("x", &[], BinStrategy::EqualWidth, 1).is_err());
        assert!(fit_bins("x", &[1., 2.], BinStrategy::EqualFrequency, 3).is_err());
    }

    /// Sort-and-interpolate quantile, written independently of `quantile_sorted`.
    fn oracle_quantile(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = p * (v.len() as f64 - 1.0);
        let below = pos as usize;
        if below + 1 >= v.len() {
            return v[v.len() - 1];
        }
        let frac = pos - below as f64;
        v[below] * (1.0 - frac) + v[below + 1] * frac
    }

    #[test]
    fn equal_frequency_median() {
        let v = [4., 1., 3., 2.];
        assert_eq!(oracle_quantile(&v, 0.5), 2.5);
        let s = fit_bins("x", &v, BinStrategy::EqualFrequency, 2).unwrap();
        assert_eq!(s.edges(), [1., 2.5, 4.]);
    }

    #[test]
    fn equal_frequency_matches_oracle() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 * 0.37).collect();
        let s = fit_bins("x", &v, BinStrategy::EqualFrequency, 5).unwrap();
        for (i, e) in s.edges().iter().enumerate() {
            assert!((e - oracle_quantile(&v, i as f64 / 5.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn discretize_boundaries() {
        let s = BinningScheme::from_edges("x", BinStrategy::EqualWidth, vec![0., 5., 10.]).unwrap();
        assert_eq!(discretize(0., &s), 0);
        assert_eq!(discretize(-3., &s), 0);
        assert_eq!(discretize(5., &s), 1);
        assert_eq!(discretize(10., &s), 1);
        assert_eq!(discretize(1e9, &s), 1);
    }

    #[test]
    fn labels() {
        let s = BinningScheme::from_edges("current_mean", BinStrategy::EqualWidth, vec![0., 5., 10.])
            .unwrap();
        let a = literal_entity_label(&s, 0).unwrap();
        assert_eq!(a, "lit:current_mean:[0.00000,5.00000)");
        assert_eq!(a, literal_entity_label(&s, 0).unwrap());
        assert!(matches!(literal_entity_label(&s, 2), Err(Error::OutOfRange(_))));
        assert_eq!(format_sig6(12.5), "12.5000");
        assert_eq!(format_sig6(-0.00123), "-0.00123000");
        assert_eq!(format_sig6(123456.0), "123456");
    }

    #[test]
    fn midpoints() {
        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![4.0, 4.5, 5.0]).unwrap();
        assert_eq!(bin_midpoint(&s, 0).unwrap(), 4.25);
        assert!(bin_midpoint(&s, 2).is_err());
        let s = BinningScheme::from_edges("d", BinStrategy::EqualWidth, vec![0., 10.]).unwrap();
        assert_eq!(bin_midpoint(&s, 0).unwrap(), 5.0);
    }

    #[test]
    fn width_bins_anchor_at_multiples() {
        let s = fit_bins_by_width("dia", &[4.2, 4.3, 5.7], 0.5).unwrap();
        assert_eq!(s.edges(), [4.0, 4.5, 5.0, 5.5, 6.0]);
        assert!(fit_bins_by_width("dia", &[4.2], 0.0).is_err());
    }

    #[test]
    fn schemes_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("schemes.json");
        let mut set = SchemeSet::new();
        let s = fit_bins("a", &[1., 2., 3., 4.], BinStrategy::EqualFrequency, 2).unwrap();
        set.insert("a".into(), s);
        write_schemes(&p, &set).unwrap();
        assert_eq!(read_schemes(&p).unwrap(), set);

        std::fs::write(&p, r#"{"a":{"feature":"a","strategy":"equal_width","edges":[2,1],"midpoints":[1.5]}}"#)
            .unwrap();
        assert!(read_schemes(&p).is_err());
    }

    fn scheme_strategy() -> impl Strategy<Value = BinningScheme> {
        (prop::collection::vec(0.01f64..10.0, 1..12), -50.0f64..50.0).prop_map(|(gaps, start)| {
            let mut edges = vec![start];
            for g in gaps {
                let last = *edges.last().unwrap();
                edges.push(last + g);
            }
            BinningScheme::from_edges("f", BinStrategy::EqualWidth, edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn midpoint_round_trip(s in scheme_strategy()) {
            for i in 0..s.k() {
                prop_assert_eq!(discretize(bin_midpoint(&s, i).unwrap(), &s), i);
            }
        }

        #[test]
        fn discretize_monotone(s in scheme_strategy(), a in -100.0f64..100.0, b in -100.0f64..100.0) {
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(discretize(x, &s) <= discretize(y, &s));
        }

        #[test]
        fn midpoint_within_half_width(s in scheme_strategy(), t in 0.0f64..1.0) {
            let e = s.edges();
            let x = e[0] + t * (e[e.len() - 1] - e[0]);
            let b = discretize(x, &s);
            let err = (bin_midpoint(&s, b).unwrap() - x).abs();
            prop_assert!(err <= s.bin_width(b).unwrap() / 2.0 + 1e-9);
        }

        #[test]
        fn overall_mean_is_series_mean(v in prop::collection::vec(-1e3f64..1e3, 1..60), stages in 1usize..6) {
            prop_assume!(stages <= v.len());
            let a = aggregate_series("s", &v, stages).unwrap();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!((a.overall_mean - m).abs() <= 1e-9 * m.abs().max(1.0));
            prop_assert_eq!(a.stage_means.len(), stages);
        }

        #[test]
        fn equal_frequency_balanced(mut v in prop::collection::hash_set(-1000i32..1000, 8..80), k in 1usize..6) {
            let vals: Vec<f64> = v.drain().map(f64::from).collect();
            let s = fit_bins("f", &vals, BinStrategy::EqualFrequency, k).unwrap();
            prop_assume!(s.k() == k);
            let mut counts = vec![0usize; k];
            for x in &vals {
                counts[discretize(*x, &s)] += 1;
            }
            let (mn, mx) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(mx - mn <= 1, "counts {:?}", counts);
        }
    }
}
