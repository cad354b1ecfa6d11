//! Aspects, graded labels, label tuples and the componentwise (Pareto) order.
//!
//! A schema lists its aspects in a fixed order; every aspect lists its labels
//! worst-to-best together with the value each label is embedded at. Tuples are
//! stored as grade indices (0 = worst), never as label names.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

/// Number of fractional digits an embed value may carry.
pub const MAX_FRACTION_DIGITS: u32 = 6;

const MICROS: i64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema has no aspects")]
    NoAspects,
    #[error("aspect `{aspect}` has {count} label(s); at least 2 are required")]
    TooFewLabels { aspect: String, count: usize },
    #[error("aspect `{aspect}`: embed value of `{label}` is smaller than the previous label's")]
    DecreasingEmbedding { aspect: String, label: String },
    #[error("duplicate aspect name `{0}`")]
    DuplicateAspect(String),
    #[error("aspect `{aspect}`: duplicate label name `{label}`")]
    DuplicateLabel { aspect: String, label: String },
    #[error("coupling rule references unknown aspect `{0}`")]
    UnknownRuleAspect(String),
    #[error("coupling rule references unknown label `{label}` of aspect `{aspect}`")]
    UnknownRuleLabel { aspect: String, label: String },
    #[error("coupling rule on `{0}` forces the aspect that triggers it")]
    SelfCoupling(String),
    #[error("coupling rules triggered by {aspect}={label} force `{forced}` to different labels")]
    ConflictingRules { aspect: String, label: String, forced: String },
    #[error("coupling rules do not reach a fixpoint for tuple {0}")]
    CouplingCycle(String),
    #[error("invalid embed value `{0}` (expected a non-negative decimal with at most 6 fractional digits)")]
    BadEmbedValue(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("tuple has {got} grade(s) but the schema has {expected} aspect(s)")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grade {grade} out of range for aspect `{aspect}`")]
    GradeOutOfRange { aspect: String, grade: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Non-negative decimal with at most six fractional digits, held exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbedValue {
    micros: i64,
    digits: u32,
}

impl EmbedValue {
    pub fn integer(value: u32) -> Self {
        EmbedValue {
            micros: value as i64 * MICROS,
            digits: 0,
        }
    }

    /// Value in millionths.
    pub fn micros(&self) -> i64 {
        self.micros
    }

    /// Fractional digits actually needed to write the value.
    pub fn fraction_digits(&self) -> u32 {
        self.digits
    }

    pub fn as_f64(&self) -> f64 {
        self.micros as f64 / MICROS as f64
    }
}

impl FromStr for EmbedValue {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SchemaError::BadEmbedValue(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty() || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(bad());
        }
        if s.contains('.') && frac_part.is_empty() {
            return Err(bad());
        }
        if frac_part.len() as u32 > MAX_FRACTION_DIGITS {
            return Err(bad());
        }
        let whole: i64 = int_part.parse().map_err(|_| bad())?;
        let mut frac: i64 = 0;
        for b in frac_part.bytes() {
            frac = frac * 10 + (b - b'0') as i64;
        }
        frac *= 10_i64.pow(MAX_FRACTION_DIGITS - frac_part.len() as u32);
        let micros = whole
            .checked_mul(MICROS)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(bad)?;
        let digits = frac_part.trim_end_matches('0').len() as u32;
        Ok(EmbedValue { micros, digits })
    }
}

impl fmt::Display for EmbedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_scaled(f, self.micros as i128, MICROS as i128)
    }
}

/// Writes `value / denom` exactly, where `denom` is a power of ten.
pub(crate) fn write_scaled(f: &mut impl fmt::Write, value: i128, denom: i128) -> fmt::Result {
    let sign = if value < 0 { "-" } else { "" };
    let v = value.abs();
    let whole = v / denom;
    let frac = v % denom;
    if frac == 0 {
        return write!(f, "{sign}{whole}");
    }
    let width = denom.ilog10() as usize;
    let digits = format!("{frac:0width$}");
    write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub embed: EmbedValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aspect {
    pub name: String,
    /// Worst first.
    pub labels: Vec<Label>,
}

impl Aspect {
    pub fn new(name: impl Into<String>, labels: Vec<Label>) -> Self {
        Aspect {
            name: name.into(),
            labels,
        }
    }

    /// Builds an aspect from `(label, embed value)` string pairs, worst first.
    pub fn from_pairs(name: &str, pairs: &[(&str, &str)]) -> Result<Self, SchemaError> {
        let labels = pairs
            .iter()
            .map(|(label, value)| {
                Ok(Label {
                    name: label.to_string(),
                    embed: value.parse()?,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        Ok(Aspect::new(name, labels))
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.name == label)
    }

    /// Index of the best label.
    pub fn top(&self) -> usize {
        self.labels.len() - 1
    }
}

/// "If `trigger_aspect` has `trigger_label`, then `forced_aspect` must have `forced_label`."
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingRule {
    pub trigger_aspect: String,
    pub trigger_label: String,
    pub forced_aspect: String,
    pub forced_label: String,
}

impl CouplingRule {
    pub fn new(trigger_aspect: &str, trigger_label: &str, forced_aspect: &str, forced_label: &str) -> Self {
        CouplingRule {
            trigger_aspect: trigger_aspect.into(),
            trigger_label: trigger_label.into(),
            forced_aspect: forced_aspect.into(),
            forced_label: forced_label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ResolvedRule {
    trigger_aspect: usize,
    trigger_grade: usize,
    forced_aspect: usize,
    forced_grade: usize,
}

impl ResolvedRule {
    fn violated_by(&self, grades: &[usize]) -> bool {
        grades[self.trigger_aspect] == self.trigger_grade && grades[self.forced_aspect] != self.forced_grade
    }
}

/// Validated set of aspects plus coupling rules. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectSchema {
    aspects: Vec<Aspect>,
    rules: Vec<CouplingRule>,
    resolved: Vec<ResolvedRule>,
}

impl AspectSchema {
    pub fn new(aspects: Vec<Aspect>, rules: Vec<CouplingRule>) -> Result<Self, SchemaError> {
        let mut schema = AspectSchema {
            aspects,
            rules,
            resolved: Vec::new(),
        };
        schema.resolved = validate_schema(&schema)?;
        Ok(schema)
    }

    pub fn aspects(&self) -> &[Aspect] {
        &self.aspects
    }

    pub fn rules(&self) -> &[CouplingRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }

    pub fn aspect_index(&self, name: &str) -> Option<usize> {
        self.aspects.iter().position(|a| a.name == name)
    }

    pub fn label_counts(&self) -> Vec<usize> {
        self.aspects.iter().map(|a| a.labels.len()).collect()
    }

    /// The all-best tuple.
    pub fn best_tuple(&self) -> LabelTuple {
        LabelTuple(self.aspects.iter().map(Aspect::top).collect())
    }

    pub fn worst_tuple(&self) -> LabelTuple {
        LabelTuple(vec![0; self.aspects.len()])
    }

    /// Smallest power of ten that turns every embed value into an integer.
    pub fn embed_scale(&self) -> i64 {
        let digits = self
            .aspects
            .iter()
            .flat_map(|a| a.labels.iter())
            .map(|l| l.embed.fraction_digits())
            .max()
            .unwrap_or(0);
        10_i64.pow(digits)
    }

    pub fn check_tuple(&self, tuple: &LabelTuple) -> Result<(), SchemaError> {
        if tuple.len() != self.aspects.len() {
            return Err(SchemaError::DimensionMismatch {
                expected: self.aspects.len(),
                got: tuple.len(),
            });
        }
        for (aspect, &grade) in self.aspects.iter().zip(tuple.grades()) {
            if grade >= aspect.labels.len() {
                return Err(SchemaError::GradeOutOfRange {
                    aspect: aspect.name.clone(),
                    grade,
                });
            }
        }
        Ok(())
    }

    /// True when no coupling rule is violated.
    pub fn satisfies_rules(&self, tuple: &LabelTuple) -> bool {
        !self.resolved.iter().any(|r| r.violated_by(tuple.grades()))
    }

    /// Rewrites violating grades to the forced labels until no rule fires.
    /// Returns the corrected tuple and the number of rewrites performed.
    pub fn enforce_rules(&self, tuple: &LabelTuple) -> Result<(LabelTuple, usize), SchemaError> {
        let mut grades = tuple.0.clone();
        let mut rewrites = 0;
        // each pass either settles or changes at least one grade; more passes
        // than rules means the rules chase each other
        for _ in 0..=self.resolved.len() {
            let mut changed = false;
            for rule in &self.resolved {
                if rule.violated_by(&grades) {
                    grades[rule.forced_aspect] = rule.forced_grade;
                    rewrites += 1;
                    changed = true;
                }
            }
            if !changed {
                return Ok((LabelTuple(grades), rewrites));
            }
        }
        Err(SchemaError::CouplingCycle(self.format_tuple(tuple)))
    }

    /// Comma-joined label names, e.g. `hr,pc`.
    pub fn format_tuple(&self, tuple: &LabelTuple) -> String {
        tuple
            .grades()
            .iter()
            .zip(&self.aspects)
            .map(|(&g, a)| a.labels.get(g).map_or_else(|| g.to_string(), |l| l.name.clone()))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses tuples written as comma-joined label names.
    pub fn parse_tuple(&self, text: &str) -> Result<LabelTuple, SchemaError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != self.aspects.len() {
            return Err(SchemaError::DimensionMismatch {
                expected: self.aspects.len(),
                got: parts.len(),
            });
        }
        let grades = parts
            .iter()
            .zip(&self.aspects)
            .map(|(p, a)| {
                a.label_index(p).ok_or_else(|| SchemaError::UnknownRuleLabel {
                    aspect: a.name.clone(),
                    label: p.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LabelTuple(grades))
    }

    /// Reads the line-oriented schema format (`aspect`, `label`, `couple` directives).
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, SchemaError> {
        let mut aspects: Vec<Aspect> = Vec::new();
        let mut rules = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| SchemaError::Io(e.to_string()))?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let syntax = |message: &str| SchemaError::Syntax {
                line: line_no,
                message: message.to_string(),
            };
            match fields.as_slice() {
                ["aspect", name] => aspects.push(Aspect::new(*name, Vec::new())),
                ["label", name, value] => {
                    let aspect = aspects
                        .last_mut()
                        .ok_or_else(|| syntax("`label` before any `aspect`"))?;
                    aspect.labels.push(Label {
                        name: name.to_string(),
                        embed: value.parse()?,
                    });
                }
                ["couple", ta, tl, fa, fl] => rules.push(CouplingRule::new(ta, tl, fa, fl)),
                [directive, ..] if ["aspect", "label", "couple"].contains(directive) => {
                    return Err(syntax(&format!("wrong number of fields for `{directive}`")))
                }
                [other, ..] => return Err(syntax(&format!("unknown directive `{other}`"))),
                [] => unreachable!(),
            }
        }
        AspectSchema::new(aspects, rules)
    }

    /// Renders the schema in the format read by [`AspectSchema::parse`].
    pub fn to_schema_text(&self) -> String {
        let mut out = String::new();
        for aspect in &self.aspects {
            out.push_str(&format!("aspect {}\n", aspect.name));
            for label in &aspect.labels {
                out.push_str(&format!("label {} {}\n", label.name, label.embed));
            }
        }
        for r in &self.rules {
            out.push_str(&format!(
                "couple {} {} {} {}\n",
                r.trigger_aspect, r.trigger_label, r.forced_aspect, r.forced_label
            ));
        }
        out
    }
}

/// Checks every schema invariant. Returns the rules resolved to indices.
fn validate_schema(schema: &AspectSchema) -> Result<Vec<ResolvedRule>, SchemaError> {
    if schema.aspects.is_empty() {
        return Err(SchemaError::NoAspects);
    }
    let mut seen_aspects = std::collections::HashSet::new();
    for aspect in &schema.aspects {
        if !seen_aspects.insert(aspect.name.as_str()) {
            return Err(SchemaError::DuplicateAspect(aspect.name.clone()));
        }
        if aspect.labels.len() < 2 {
            return Err(SchemaError::TooFewLabels {
                aspect: aspect.name.clone(),
                count: aspect.labels.len(),
            });
        }
        let mut seen_labels = std::collections::HashSet::new();
        for (i, label) in aspect.labels.iter().enumerate() {
            if !seen_labels.insert(label.name.as_str()) {
                return Err(SchemaError::DuplicateLabel {
                    aspect: aspect.name.clone(),
                    label: label.name.clone(),
                });
            }
            if i > 0 && label.embed < aspect.labels[i - 1].embed {
                return Err(SchemaError::DecreasingEmbedding {
                    aspect: aspect.name.clone(),
                    label: label.name.clone(),
                });
            }
        }
    }

    let locate = |aspect: &str, label: &str| -> Result<(usize, usize), SchemaError> {
        let a = schema
            .aspect_index(aspect)
            .ok_or_else(|| SchemaError::UnknownRuleAspect(aspect.to_string()))?;
        let l = schema.aspects[a]
            .label_index(label)
            .ok_or_else(|| SchemaError::UnknownRuleLabel {
                aspect: aspect.to_string(),
                label: label.to_string(),
            })?;
        Ok((a, l))
    };
    let mut resolved = Vec::with_capacity(schema.rules.len());
    let mut forced: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for rule in &schema.rules {
        let (ta, tg) = locate(&rule.trigger_aspect, &rule.trigger_label)?;
        let (fa, fg) = locate(&rule.forced_aspect, &rule.forced_label)?;
        if ta == fa {
            return Err(SchemaError::SelfCoupling(rule.trigger_aspect.clone()));
        }
        if let Some(&prev) = forced.get(&(ta, tg, fa)) {
            if prev != fg {
                return Err(SchemaError::ConflictingRules {
                    aspect: rule.trigger_aspect.clone(),
                    label: rule.trigger_label.clone(),
                    forced: rule.forced_aspect.clone(),
                });
            }
        }
        forced.insert((ta, tg, fa), fg);
        resolved.push(ResolvedRule {
            trigger_aspect: ta,
            trigger_grade: tg,
            forced_aspect: fa,
            forced_grade: fg,
        });
    }
    Ok(resolved)
}

/// One grade index per aspect, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelTuple(pub Vec<usize>);

impl LabelTuple {
    pub fn new(grades: Vec<usize>) -> Self {
        LabelTuple(grades)
    }

    pub fn grades(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of grade indices.
    pub fn grade_sum(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Returns true iff `a ⊑ b`: `b` is at least as good as `a` on every aspect.
pub fn pareto_dominates(a: &LabelTuple, b: &LabelTuple, schema: &AspectSchema) -> Result<bool, SchemaError> {
    schema.check_tuple(a)?;
    schema.check_tuple(b)?;
    Ok(a.grades().iter().zip(b.grades()).all(|(x, y)| y >= x))
}

/// Judged documents of one topic.
pub type TopicJudgments = BTreeMap<String, LabelTuple>;

/// Judgments keyed by topic, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    topics: BTreeMap<String, TopicJudgments>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a tuple. The tuple must conform to `schema` and satisfy its rules.
    pub fn insert(&mut self, schema: &AspectSchema, topic: &str, doc: &str, tuple: LabelTuple) -> Result<(), SchemaError> {
        schema.check_tuple(&tuple)?;
        let tuple = if schema.satisfies_rules(&tuple) {
            tuple
        } else {
            schema.enforce_rules(&tuple)?.0
        };
        self.topics
            .entry(topic.to_string())
            .or_default()
            .insert(doc.to_string(), tuple);
        Ok(())
    }

    pub fn get(&self, topic: &str, doc: &str) -> Option<&LabelTuple> {
        self.topics.get(topic).and_then(|t| t.get(doc))
    }

    pub fn topic(&self, topic: &str) -> Option<&TopicJudgments> {
        self.topics.get(topic)
    }

    pub fn topics(&self) -> impl Iterator<Item = (&String, &TopicJudgments)> {
        self.topics.iter()
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &String> {
        self.topics.keys()
    }

    pub fn len(&self) -> usize {
        self.topics.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All rule-abiding tuples of a schema, lexicographic by grade indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSpace {
    tuples: Vec<LabelTuple>,
}

impl TupleSpace {
    pub fn from_tuples(mut tuples: Vec<LabelTuple>) -> Self {
        tuples.sort();
        tuples.dedup();
        TupleSpace { tuples }
    }

    pub fn tuples(&self) -> &[LabelTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &LabelTuple) -> bool {
        self.tuples.binary_search(tuple).is_ok()
    }
}

/// Cartesian product of the label sets, minus tuples that break a coupling rule.
pub fn build_tuple_space(schema: &AspectSchema) -> TupleSpace {
    let counts = schema.label_counts();
    let mut tuples = Vec::new();
    let mut current = vec![0usize; counts.len()];
    loop {
        let tuple = LabelTuple(current.clone());
        if schema.satisfies_rules(&tuple) {
            tuples.push(tuple);
        }
        // odometer increment, last aspect fastest
        let mut pos = counts.len();
        loop {
            if pos == 0 {
                return TupleSpace { tuples };
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < counts[pos] {
                break;
            }
            current[pos] = 0;
        }
    }
}
