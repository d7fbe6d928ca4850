use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use unicode_general_category::{get_general_category, GeneralCategory};

pub const DEFAULT_COPY_THRESHOLD: f64 = 0.5;

static DECIMAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)$").unwrap());

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// True for tokens ignored by the copy statistic: all-punctuation tokens and
/// optionally signed decimal numerals.
pub fn is_excluded_token(token: &str) -> bool {
    (!token.is_empty() && token.chars().all(is_punctuation)) || DECIMAL.is_match(token)
}

fn content_types<S: AsRef<str>>(tokens: &[S]) -> HashSet<&str> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_excluded_token(t))
        .collect()
}

/// Unigram-type intersection over union between a fixed source and candidate targets.
#[derive(Clone, Debug)]
pub struct CopyDetector {
    source_types: HashSet<String>,
}

impl CopyDetector {
    pub fn new<S: AsRef<str>>(source: &[S]) -> Self {
        CopyDetector {
            source_types: content_types(source).into_iter().map(str::to_owned).collect(),
        }
    }

    /// IoU of the filtered type sets; `None` when both sets are empty.
    pub fn iou<S: AsRef<str>>(&self, target: &[S]) -> Option<f64> {
        let target_types = content_types(target);
        let shared = target_types.iter().filter(|t| self.source_types.contains(**t)).count();
        let union = self.source_types.len() + target_types.len() - shared;
        (union > 0).then(|| shared as f64 / union as f64)
    }

    pub fn is_copy<S: AsRef<str>>(&self, target: &[S], threshold: f64) -> bool {
        self.iou(target).is_some_and(|iou| iou >= threshold)
    }
}

/// Whether `target` is a (partial) copy of `source`: filtered unigram-type IoU ≥ `threshold`.
pub fn is_copy<S: AsRef<str>, T: AsRef<str>>(source: &[S], target: &[T], threshold: f64) -> bool {
    let target: Vec<&str> = target.iter().map(AsRef::as_ref).collect();
    CopyDetector::new(source).is_copy(&target, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_sentences_are_copies() {
        let s = words("the cat sat .");
        assert!(is_copy(&s, &s, 0.5));
        assert_eq!(CopyDetector::new(&s).iou(&s), Some(1.0));
    }

    #[test]
    fn third_overlap_is_not_a_copy() {
        let iou = CopyDetector::new(&words("a b c d")).iou(&words("a b e f")).unwrap();
        assert!((iou - 2.0 / 6.0).abs() < 1e-12);
        assert!(!is_copy(&words("a b c d"), &words("a b e f"), 0.5));
    }

    #[test]
    fn half_overlap_is_a_copy() {
        let iou = CopyDetector::new(&words("a b c d"))
            .iou(&words("a b c d e f g h"))
            .unwrap();
        assert_eq!(iou, 0.5);
        assert!(is_copy(&words("a b c d"), &words("a b c d e f g h"), 0.5));
    }

    #[test]
    fn types_not_counts() {
        assert!(is_copy(&words("a a a b"), &words("a b"), 1.0));
    }

    #[test]
    fn punctuation_and_numbers_are_ignored() {
        assert!(is_excluded_token("."));
        assert!(is_excluded_token("«"));
        assert!(is_excluded_token("—"));
        assert!(is_excluded_token("..."));
        assert!(is_excluded_token("42"));
        assert!(is_excluded_token("-3.5"));
        assert!(is_excluded_token("+.5"));
        assert!(!is_excluded_token("3rd"));
        assert!(!is_excluded_token("1e5"));
        assert!(!is_excluded_token("$"));
        assert!(!is_excluded_token("a."));
        // only excluded tokens on both sides
        assert!(!is_copy(&words(". 1 ,"), &words(". 1 ,"), 0.5));
        assert!(is_copy(&words("x . 1"), &words("x ! 2"), 1.0));
    }

    proptest! {
        #[test]
        fn symmetric(a in prop::collection::vec(0u8..8, 1..10),
                     b in prop::collection::vec(0u8..8, 1..10),
                     threshold in 0.0f64..1.0) {
            let a: Vec<String> = a.iter().map(|x| format!("w{x}")).collect();
            let b: Vec<String> = b.iter().map(|x| format!("w{x}")).collect();
            prop_assert_eq!(is_copy(&a, &b, threshold), is_copy(&b, &a, threshold));
        }
    }
}
