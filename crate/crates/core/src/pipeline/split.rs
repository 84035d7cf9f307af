//! Train/test partitions of a manifest.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Task};
use super::manifest::{DatasetManifest, ManifestRecord};
use super::PipelineError;

/// Keyword selecting the stratified random split over every record.
pub const ALL: &str = "all";

/// A resolved partition plus the labels that describe it in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub train: Vec<ManifestRecord>,
    pub test: Vec<ManifestRecord>,
    pub protocol: String,
    pub test_domain: String,
    pub test_language: String,
}

fn split_error(msg: String) -> PipelineError {
    PipelineError::Split(msg)
}

/// Test set is every record of `held_out`; training is everything else.
pub fn split_leave_one_domain_out(
    manifest: &DatasetManifest,
    held_out: &str,
) -> Result<(Vec<ManifestRecord>, Vec<ManifestRecord>), PipelineError> {
    if !manifest.header.domains.iter().any(|d| d == held_out) {
        return Err(split_error(format!(
            "unknown domain {held_out:?}; declared domains are [{}]",
            manifest.header.domains.join(", ")
        )));
    }
    let (test, train): (Vec<_>, Vec<_>) = manifest.records.iter().cloned().partition(|r| r.domain == held_out);
    if test.is_empty() {
        return Err(split_error(format!("held-out domain {held_out:?} has no records")));
    }
    if train.is_empty() {
        return Err(split_error(format!("no training records outside domain {held_out:?}")));
    }
    Ok((train, test))
}

/// Per-class random split: each class (in `classes` order) is shuffled with
/// one ChaCha8 stream seeded by `seed`, and its first
/// `round(test_fraction * n)` records go to test. Both sides keep input
/// order.
pub fn split_stratified(
    records: &[ManifestRecord],
    classes: &[String],
    seed: u64,
    test_fraction: f64,
) -> Result<(Vec<ManifestRecord>, Vec<ManifestRecord>), PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; records.len()];
    for class in classes {
        let mut members: Vec<usize> = (0..records.len())
            .filter(|&i| &records[i].class_label == class)
            .collect();
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        for &i in &members[..n_test.min(members.len())] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = records.iter().zip(&in_test).partition(|(_, &t)| t);
    let strip = |v: Vec<(&ManifestRecord, &bool)>| v.into_iter().map(|(r, _)| r.clone()).collect::<Vec<_>>();
    let (train, test) = (strip(train), strip(test));
    if train.is_empty() || test.is_empty() {
        return Err(split_error(format!(
            "stratified split of {} records leaves an empty side ({} train, {} test)",
            records.len(),
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

fn stratified_protocol(config: &ExperimentConfig) -> String {
    let test_pct = (config.test_fraction * 100.0).round();
    format!(
        "stratified random split by class, {}/{} train/test, seed {}",
        100.0 - test_pct,
        test_pct,
        config.seed
    )
}

fn is_all_keyword(value: &str, declared: &[String]) -> bool {
    value.eq_ignore_ascii_case(ALL) && !declared.iter().any(|d| d == value)
}

fn loco_or_all(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
    held_out: &str,
) -> Result<SplitPlan, PipelineError> {
    if is_all_keyword(held_out, &manifest.header.domains) {
        let (train, test) = split_stratified(
            &manifest.records,
            &manifest.header.classes,
            config.seed,
            config.test_fraction,
        )?;
        return Ok(SplitPlan {
            train,
            test,
            protocol: stratified_protocol(config),
            test_domain: ALL.into(),
            test_language: ALL.into(),
        });
    }
    let (train, test) = split_leave_one_domain_out(manifest, held_out)?;
    Ok(SplitPlan {
        train,
        test,
        protocol: format!("leave-one-domain-out, held out {held_out}"),
        test_domain: held_out.to_string(),
        test_language: ALL.into(),
    })
}

fn within_language(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
    language: &str,
) -> Result<SplitPlan, PipelineError> {
    let records: Vec<ManifestRecord> = if is_all_keyword(language, &manifest.header.languages) {
        manifest.records.clone()
    } else {
        if !manifest.header.languages.iter().any(|l| l == language) {
            return Err(split_error(format!(
                "unknown language {language:?}; declared languages are [{}]",
                manifest.header.languages.join(", ")
            )));
        }
        manifest
            .records
            .iter()
            .filter(|r| r.language == language)
            .cloned()
            .collect()
    };
    if records.is_empty() {
        return Err(split_error(format!("language {language:?} has no records")));
    }
    let (train, test) = split_stratified(&records, &manifest.header.classes, config.seed, config.test_fraction)?;
    Ok(SplitPlan {
        train,
        test,
        protocol: format!("same language train and test; {}", stratified_protocol(config)),
        test_domain: ALL.into(),
        test_language: language.to_string(),
    })
}

/// Resolves the partition a config asks for.
pub fn plan_split(manifest: &DatasetManifest, config: &ExperimentConfig) -> Result<SplitPlan, PipelineError> {
    config.validate()?;
    match (config.task, &config.held_out_domain, &config.language) {
        (Task::MultiwayLoco, Some(d), _) => loco_or_all(manifest, config, d),
        (Task::Multilingual, _, Some(l)) => within_language(manifest, config, l),
        (Task::NgramSweep, _, Some(l)) => within_language(manifest, config, l),
        (Task::NgramSweep, Some(d), None) => loco_or_all(manifest, config, d),
        (Task::NgramSweep, None, None) => loco_or_all(manifest, config, ALL),
        _ => unreachable!("validate() rejects configs without a target"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::manifest::ConlluSource;
    use crate::pipeline::manifest::ManifestHeader;

    fn manifest(rows: &[(&str, &str, &str)]) -> DatasetManifest {
        let set = |col: usize| {
            let mut v: Vec<String> = Vec::new();
            for s in rows {
                let x = [s.0, s.1, s.2][col];
                if !v.iter().any(|y| y == x) {
                    v.push(x.to_string());
                }
            }
            v
        };
        let mut classes = set(0);
        if classes.len() < 2 {
            classes.push("other".into());
        }
        DatasetManifest {
            header: ManifestHeader {
                manifest_version: 1,
                classes,
                domains: set(1),
                languages: set(2),
                provenance: None,
            },
            records: rows
                .iter()
                .enumerate()
                .map(|(i, (c, d, l))| ManifestRecord {
                    doc_id: format!("d{i}"),
                    source: ConlluSource::Inline(String::new()),
                    class_label: c.to_string(),
                    domain: d.to_string(),
                    language: l.to_string(),
                })
                .collect(),
        }
    }

    fn ids(records: &[ManifestRecord]) -> Vec<&str> {
        records.iter().map(|r| r.doc_id.as_str()).collect()
    }

    #[test]
    fn loco_partitions_by_domain() {
        let m = manifest(&[
            ("h", "arxiv", "en"),
            ("m", "reddit", "en"),
            ("h", "reddit", "en"),
            ("m", "arxiv", "en"),
        ]);
        let (train, test) = split_leave_one_domain_out(&m, "arxiv").unwrap();
        assert_eq!(ids(&train), ["d1", "d2"]);
        assert_eq!(ids(&test), ["d0", "d3"]);
        assert!(split_leave_one_domain_out(&m, "wiki").is_err());
    }

    #[test]
    fn declared_but_empty_domain_is_an_error() {
        let mut m = manifest(&[("h", "arxiv", "en"), ("m", "arxiv", "en")]);
        m.header.domains.push("wiki".into());
        let msg = split_leave_one_domain_out(&m, "wiki").unwrap_err().to_string();
        assert!(msg.contains("no records"), "{msg}");
    }

    #[test]
    fn stratified_counts_per_class() {
        let mut rows = vec![("h", "a", "en"); 10];
        rows.extend(vec![("m", "a", "en"); 6]);
        let m = manifest(&rows);
        let (train, test) = split_stratified(&m.records, &m.header.classes, 42, 0.2).unwrap();
        let count = |v: &[ManifestRecord], c: &str| v.iter().filter(|r| r.class_label == c).count();
        assert_eq!((count(&test, "h"), count(&test, "m")), (2, 1));
        assert_eq!(train.len() + test.len(), 16);
        let order = |v: &[ManifestRecord]| {
            v.windows(2)
                .all(|w| w[0].doc_id[1..].parse::<u32>().unwrap() < w[1].doc_id[1..].parse::<u32>().unwrap())
        };
        assert!(order(&train) && order(&test));
    }

    #[test]
    fn stratified_split_depends_only_on_seed() {
        let m = manifest(&vec![("h", "a", "en"); 30]);
        let a = split_stratified(&m.records, &m.header.classes, 7, 0.2).unwrap();
        let b = split_stratified(&m.records, &m.header.classes, 7, 0.2).unwrap();
        let c = split_stratified(&m.records, &m.header.classes, 8, 0.2).unwrap();
        assert_eq!(a, b);
        assert_ne!(ids(&a.1), ids(&c.1));
    }

    #[test]
    fn all_keyword_and_language_filter() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let c = if i % 2 == 0 { "h" } else { "m" };
            rows.push((c, "a", if i < 10 { "en" } else { "de" }));
        }
        let m = manifest(&rows);
        let all = plan_split(&m, &ExperimentConfig::multiway_loco("All")).unwrap();
        assert_eq!(all.train.len() + all.test.len(), 20);
        assert_eq!(all.test_domain, "all");

        let de = plan_split(&m, &ExperimentConfig::multilingual("de")).unwrap();
        assert!(de.train.iter().chain(&de.test).all(|r| r.language == "de"));
        assert_eq!(de.test.len(), 2);
        assert!(plan_split(&m, &ExperimentConfig::multilingual("ru")).is_err());
    }

    #[test]
    fn declared_domain_named_all_is_not_the_keyword() {
        let m = manifest(&[("h", "all", "en"), ("m", "x", "en"), ("h", "x", "en")]);
        let p = plan_split(&m, &ExperimentConfig::multiway_loco("all")).unwrap();
        assert_eq!(ids(&p.test), ["d0"]);
    }
}
