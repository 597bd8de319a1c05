use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{rfc3339, Action, DataState, ReceiverZone, SensitivityLevel, TransferContext, UnknownToken};
use crate::classifiers::Prediction;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cannot read policy {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed policy at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("policy line {line}: unknown {kind} token {token:?}")]
    UnknownToken {
        kind: &'static str,
        token: String,
        line: usize,
    },
    #[error("uncertain_margin must be a finite non-negative number, got {0}")]
    InvalidMargin(f64),
    #[error("category {0:?} has no sensitivity level in the policy")]
    MissingCategory(String),
    #[error("policy names categories unknown to the model: {0:?}")]
    UnknownCategories(Vec<String>),
}

/// One first-match rule. Every present constraint must hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub min_level: SensitivityLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_state: Option<DataState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_zone: Option<ReceiverZone>,
    /// Compared case-insensitively, ignoring a leading `.`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_size_bytes: Option<u64>,
    pub action: Action,
}

fn canonical_format(f: &str) -> String {
    f.trim_start_matches('.').to_lowercase()
}

impl PolicyRule {
    pub fn new(min_level: SensitivityLevel, action: Action) -> Self {
        Self {
            min_level,
            data_state: None,
            receiver_zone: None,
            format: None,
            max_size_bytes: None,
            action,
        }
    }

    pub fn matches(&self, level: SensitivityLevel, ctx: &TransferContext) -> bool {
        level >= self.min_level
            && self.data_state.is_none_or(|s| s == ctx.data_state)
            && self.receiver_zone.is_none_or(|z| z == ctx.receiver_zone)
            && self
                .format
                .as_deref()
                .is_none_or(|f| canonical_format(f) == canonical_format(&ctx.format))
            && self.max_size_bytes.is_none_or(|m| ctx.size_bytes <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub category_levels: BTreeMap<String, SensitivityLevel>,
    /// Predictions whose margin is below this value take `uncertain_action`.
    /// 0 disables the gate.
    pub uncertain_margin: f64,
    pub uncertain_action: Action,
    pub default_action: Action,
    pub rules: Vec<PolicyRule>,
}

impl PolicyTable {
    pub fn new(category_levels: BTreeMap<String, SensitivityLevel>, default_action: Action) -> Self {
        Self {
            category_levels,
            uncertain_margin: 0.0,
            uncertain_action: Action::Alert,
            default_action,
            rules: Vec::new(),
        }
    }

    pub fn level_of(&self, category: &str) -> Option<SensitivityLevel> {
        self.category_levels.get(category).copied()
    }

    /// Checks the policy against a model's categories: every model category
    /// needs a level, and the policy may not name categories the model lacks.
    pub fn check_categories(&self, categories: &[String]) -> Result<(), PolicyError> {
        let unknown: Vec<String> = self
            .category_levels
            .keys()
            .filter(|c| !categories.contains(c))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(PolicyError::UnknownCategories(unknown));
        }
        match categories.iter().find(|c| !self.category_levels.contains_key(*c)) {
            Some(missing) => Err(PolicyError::MissingCategory(missing.clone())),
            None => Ok(()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let raw: RawPolicy = serde_json::from_str(text).map_err(|e| PolicyError::Malformed {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        fn token<T>(text: &str, r: Result<T, UnknownToken>) -> Result<T, PolicyError> {
            r.map_err(|e| PolicyError::UnknownToken {
                kind: e.kind,
                line: line_of(text, &e.token),
                token: e.token,
            })
        }

        let mut category_levels = BTreeMap::new();
        for (category, level) in raw.category_levels {
            category_levels.insert(category, token(text, level.parse())?);
        }
        if !(raw.uncertain_margin >= 0.0 && raw.uncertain_margin.is_finite()) {
            return Err(PolicyError::InvalidMargin(raw.uncertain_margin));
        }
        let mut rules = Vec::with_capacity(raw.rules.len());
        for r in raw.rules {
            rules.push(PolicyRule {
                min_level: token(text, r.min_level.parse())?,
                data_state: r.data_state.map(|s| token(text, s.parse())).transpose()?,
                receiver_zone: r.receiver_zone.map(|s| token(text, s.parse())).transpose()?,
                format: r.format,
                max_size_bytes: r.max_size_bytes,
                action: token(text, r.action.parse())?,
            });
        }
        Ok(Self {
            category_levels,
            uncertain_margin: raw.uncertain_margin,
            uncertain_action: raw
                .uncertain_action
                .map(|a| token(text, a.parse()))
                .transpose()?
                .unwrap_or(Action::Alert),
            default_action: token(text, raw.default_action.parse())?,
            rules,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serialization cannot fail")
    }
}

/// Policy file as written; tokens are validated afterwards so errors can
/// name the offending token.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    category_levels: BTreeMap<String, String>,
    #[serde(default)]
    uncertain_margin: f64,
    #[serde(default)]
    uncertain_action: Option<String>,
    default_action: String,
    #[serde(default)]
    rules: Vec<RawRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    min_level: String,
    data_state: Option<String>,
    receiver_zone: Option<String>,
    format: Option<String>,
    max_size_bytes: Option<u64>,
    action: String,
}

/// 1-based line of the first quoted occurrence of `token` in `text`.
fn line_of(text: &str, token: &str) -> usize {
    let quoted = format!("\"{token}\"");
    text.find(&quoted)
        .map_or(1, |pos| text[..pos].matches('\n').count() + 1)
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<PolicyTable, PolicyError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| PolicyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PolicyTable::parse(&text)
}

/// Which part of the policy produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchedRule {
    Rule(usize),
    Default,
    Uncertain,
    /// The document could not be read or classified.
    Error,
}

impl Serialize for MatchedRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MatchedRule::Rule(i) => s.serialize_u64(*i as u64),
            MatchedRule::Default => s.serialize_str("default"),
            MatchedRule::Uncertain => s.serialize_str("uncertain"),
            MatchedRule::Error => s.serialize_str("error"),
        }
    }
}

impl<'de> Deserialize<'de> for MatchedRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Marker(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(MatchedRule::Rule(i)),
            Raw::Marker(m) => match m.as_str() {
                "default" => Ok(MatchedRule::Default),
                "uncertain" => Ok(MatchedRule::Uncertain),
                "error" => Ok(MatchedRule::Error),
                other => Err(serde::de::Error::custom(format!("unknown rule marker {other:?}"))),
            },
        }
    }
}

/// Decision for one document; one audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub document_id: String,
    pub category: Option<String>,
    pub level: Option<SensitivityLevel>,
    pub margin: Option<f64>,
    pub action: Action,
    pub matched_rule: MatchedRule,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<TransferContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Verdict {
    /// Verdict for a document that could not be assessed; it takes the
    /// policy's uncertain action.
    pub fn failure(
        document_id: impl Into<String>,
        error: impl Into<String>,
        policy: &PolicyTable,
        timestamp: DateTime<Utc>,
    ) -> Self {
        Self {
            document_id: document_id.into(),
            category: None,
            level: None,
            margin: None,
            action: policy.uncertain_action,
            matched_rule: MatchedRule::Error,
            timestamp,
            context: None,
            error: Some(error.into()),
        }
    }
}

/// Chooses the remedial action for a classified document.
///
/// A prediction with margin below `uncertain_margin` takes the uncertain
/// action; otherwise the first rule whose level floor and context
/// constraints all hold fires, falling back to the default action.
pub fn decide(
    document_id: &str,
    prediction: &Prediction,
    context: &TransferContext,
    policy: &PolicyTable,
    timestamp: DateTime<Utc>,
) -> Result<Verdict, PolicyError> {
    let level = policy
        .level_of(&prediction.category)
        .ok_or_else(|| PolicyError::MissingCategory(prediction.category.clone()))?;
    let (action, matched_rule) = if prediction.margin < policy.uncertain_margin {
        (policy.uncertain_action, MatchedRule::Uncertain)
    } else {
        policy
            .rules
            .iter()
            .position(|r| r.matches(level, context))
            .map_or((policy.default_action, MatchedRule::Default), |i| {
                (policy.rules[i].action, MatchedRule::Rule(i))
            })
    };
    Ok(Verdict {
        document_id: document_id.to_string(),
        category: Some(prediction.category.clone()),
        level: Some(level),
        margin: Some(prediction.margin),
        action,
        matched_rule,
        timestamp,
        context: Some(context.clone()),
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SensitivityLevel::*;

    fn ctx(zone: ReceiverZone) -> TransferContext {
        TransferContext {
            sender: "s".into(),
            receiver: "r".into(),
            format: "txt".into(),
            timestamp: DateTime::UNIX_EPOCH,
            size_bytes: 100,
            data_state: DataState::InTransit,
            receiver_zone: zone,
        }
    }

    fn prediction(category: &str, margin: f64) -> Prediction {
        Prediction {
            category: category.into(),
            scores: BTreeMap::new(),
            margin,
        }
    }

    fn levels(pairs: &[(&str, SensitivityLevel)]) -> BTreeMap<String, SensitivityLevel> {
        pairs.iter().map(|(c, l)| (c.to_string(), *l)).collect()
    }

    #[test]
    fn default_path() {
        let policy = PolicyTable::new(levels(&[("sports", Public)]), Action::Allow);
        let v = decide("d", &prediction("sports", 0.5), &ctx(ReceiverZone::External), &policy, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(v.action, Action::Allow);
        assert_eq!(v.matched_rule, MatchedRule::Default);
    }

    #[test]
    fn rule_fires_for_higher_level_external() {
        let mut policy = PolicyTable::new(levels(&[("secret", TopClassified)]), Action::Allow);
        let mut rule = PolicyRule::new(Classified, Action::Block);
        rule.receiver_zone = Some(ReceiverZone::External);
        policy.rules.push(rule);
        let t = DateTime::UNIX_EPOCH;
        let v = decide("d", &prediction("secret", 0.5), &ctx(ReceiverZone::External), &policy, t).unwrap();
        assert_eq!((v.action, v.matched_rule), (Action::Block, MatchedRule::Rule(0)));
        let v = decide("d", &prediction("secret", 0.5), &ctx(ReceiverZone::Internal), &policy, t).unwrap();
        assert_eq!(v.action, Action::Allow);
    }

    #[test]
    fn uncertainty_gate_overrides_rules() {
        let mut policy = PolicyTable::new(levels(&[("secret", TopClassified)]), Action::Allow);
        policy.rules.push(PolicyRule::new(Public, Action::Block));
        policy.uncertain_margin = 0.01;
        policy.uncertain_action = Action::Alert;
        let v = decide("d", &prediction("secret", 0.001), &ctx(ReceiverZone::External), &policy, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!((v.action, v.matched_rule), (Action::Alert, MatchedRule::Uncertain));
    }

    #[test]
    fn missing_category_is_an_error() {
        let policy = PolicyTable::new(BTreeMap::new(), Action::Allow);
        assert!(matches!(
            decide("d", &prediction("x", 1.0), &ctx(ReceiverZone::Internal), &policy, DateTime::UNIX_EPOCH),
            Err(PolicyError::MissingCategory(c)) if c == "x"
        ));
    }

    #[test]
    fn constraint_predicates() {
        let mut rule = PolicyRule::new(Public, Action::Encrypt);
        rule.format = Some(".TXT".into());
        rule.max_size_bytes = Some(100);
        rule.data_state = Some(DataState::InTransit);
        assert!(rule.matches(Public, &ctx(ReceiverZone::Internal)));
        let mut big = ctx(ReceiverZone::Internal);
        big.size_bytes = 101;
        assert!(!rule.matches(Public, &big));
        let mut pdf = ctx(ReceiverZone::Internal);
        pdf.format = "pdf".into();
        assert!(!rule.matches(Public, &pdf));
        let mut rest = ctx(ReceiverZone::Internal);
        rest.data_state = DataState::AtRest;
        assert!(!rule.matches(Public, &rest));
    }

    #[test]
    fn parse_zero_rules() {
        let p = PolicyTable::parse(r#"{"category_levels": {"a": "Public"}, "default_action": "Audit"}"#).unwrap();
        assert!(p.rules.is_empty());
        assert_eq!(p.default_action, Action::Audit);
        assert_eq!(p.uncertain_action, Action::Alert);
        assert_eq!(p.uncertain_margin, 0.0);
    }

    #[test]
    fn parse_keeps_rule_order() {
        let text = r#"{
  "category_levels": {"a": "Public", "b": "TopClassified"},
  "default_action": "Allow",
  "rules": [
    {"min_level": "TopClassified", "action": "Quarantine"},
    {"min_level": "Classified", "receiver_zone": "external", "action": "Block"},
    {"min_level": "Privileged", "format": "pdf", "max_size_bytes": 10, "data_state": "at_rest", "action": "Encrypt"}
  ]
}"#;
        let p = PolicyTable::parse(text).unwrap();
        let actions: Vec<Action> = p.rules.iter().map(|r| r.action).collect();
        assert_eq!(actions, [Action::Quarantine, Action::Block, Action::Encrypt]);
        assert_eq!(p.rules[2].data_state, Some(DataState::AtRest));
        assert_eq!(PolicyTable::parse(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn unknown_action_names_token_and_line() {
        let text = "{\n  \"category_levels\": {},\n  \"default_action\": \"Allow\",\n  \"rules\": [\n    {\"min_level\": \"Public\", \"action\": \"Shred\"}\n  ]\n}";
        match PolicyTable::parse(text) {
            Err(PolicyError::UnknownToken { kind, token, line }) => {
                assert_eq!((kind, token.as_str(), line), ("action", "Shred", 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_level_is_rejected() {
        let err = PolicyTable::parse(r#"{"category_levels": {"a": "Secretish"}, "default_action": "Allow"}"#).unwrap_err();
        assert!(matches!(err, PolicyError::UnknownToken { kind: "level", .. }), "{err}");
    }

    #[test]
    fn malformed_and_negative_margin() {
        assert!(matches!(PolicyTable::parse("{"), Err(PolicyError::Malformed { .. })));
        assert!(matches!(
            PolicyTable::parse(r#"{"category_levels": {}, "default_action": "Allow", "surprise": 1}"#),
            Err(PolicyError::Malformed { .. })
        ));
        assert!(matches!(
            PolicyTable::parse(r#"{"category_levels": {}, "default_action": "Allow", "uncertain_margin": -1}"#),
            Err(PolicyError::InvalidMargin(_))
        ));
    }

    #[test]
    fn category_checks_against_model() {
        let policy = PolicyTable::new(levels(&[("a", Public), ("z", Public)]), Action::Allow);
        let cats = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(policy.check_categories(&cats), Err(PolicyError::UnknownCategories(u)) if u == ["z"]));
        let policy = PolicyTable::new(levels(&[("a", Public)]), Action::Allow);
        assert!(matches!(policy.check_categories(&cats), Err(PolicyError::MissingCategory(m)) if m == "b"));
    }

    #[test]
    fn allow_rule_ahead_of_restrictive_rule_breaks_monotonicity() {
        // Why the monotonicity property below restricts rule actions: an
        // Allow rule with a high floor listed first shadows a restrictive rule.
        let mut policy = PolicyTable::new(levels(&[("low", Public), ("high", TopClassified)]), Action::Allow);
        policy.rules.push(PolicyRule::new(TopClassified, Action::Allow));
        policy.rules.push(PolicyRule::new(Public, Action::Block));
        let c = ctx(ReceiverZone::Internal);
        let t = DateTime::UNIX_EPOCH;
        assert_eq!(decide("d", &prediction("low", 1.0), &c, &policy, t).unwrap().action, Action::Block);
        assert_eq!(decide("d", &prediction("high", 1.0), &c, &policy, t).unwrap().action, Action::Allow);
    }

    fn level() -> impl Strategy<Value = SensitivityLevel> {
        proptest::sample::select(SensitivityLevel::ALL.to_vec())
    }

    fn restrictive() -> impl Strategy<Value = Action> {
        proptest::sample::select(vec![Action::Alert, Action::Block, Action::Quarantine, Action::Encrypt, Action::Audit])
    }

    fn all_levels() -> BTreeMap<String, SensitivityLevel> {
        SensitivityLevel::ALL.iter().map(|l| (l.to_string(), *l)).collect()
    }

    proptest! {
        #[test]
        fn raising_level_never_relaxes_to_allow(
            rules in proptest::collection::vec((level(), restrictive()), 0..6),
            default in proptest::sample::select(Action::ALL.to_vec()),
            lo in level(), hi in level(),
        ) {
            prop_assume!(lo <= hi);
            let mut policy = PolicyTable::new(all_levels(), default);
            policy.rules = rules.into_iter().map(|(l, a)| PolicyRule::new(l, a)).collect();
            let c = ctx(ReceiverZone::External);
            let t = DateTime::UNIX_EPOCH;
            let low = decide("d", &prediction(lo.as_str(), 1.0), &c, &policy, t).unwrap();
            let high = decide("d", &prediction(hi.as_str(), 1.0), &c, &policy, t).unwrap();
            if low.action != Action::Allow {
                prop_assert_ne!(high.action, Action::Allow);
            }
        }

        #[test]
        fn appending_unmatchable_rule_changes_nothing(
            rules in proptest::collection::vec((level(), proptest::sample::select(Action::ALL.to_vec())), 0..6),
            lvl in level(), margin in 0.0..1.0f64,
        ) {
            let mut policy = PolicyTable::new(all_levels(), Action::Allow);
            policy.uncertain_margin = 0.2;
            policy.rules = rules.into_iter().map(|(l, a)| PolicyRule::new(l, a)).collect();
            let c = ctx(ReceiverZone::External);
            let p = prediction(lvl.as_str(), margin);
            let before = decide("d", &p, &c, &policy, DateTime::UNIX_EPOCH).unwrap();
            let mut never = PolicyRule::new(Public, Action::Quarantine);
            never.data_state = Some(DataState::AtRest);
            policy.rules.push(never);
            let after = decide("d", &p, &c, &policy, DateTime::UNIX_EPOCH).unwrap();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn decide_is_pure(lvl in level(), margin in 0.0..1.0f64) {
            let mut policy = PolicyTable::new(all_levels(), Action::Audit);
            policy.rules.push(PolicyRule::new(Classified, Action::Block));
            let p = prediction(lvl.as_str(), margin);
            let c = ctx(ReceiverZone::Internal);
            let a = decide("d", &p, &c, &policy, DateTime::UNIX_EPOCH).unwrap();
            let b = decide("d", &p, &c, &policy, Utc::now()).unwrap();
            prop_assert_eq!(Verdict { timestamp: b.timestamp, ..a }, b);
        }
    }
}
