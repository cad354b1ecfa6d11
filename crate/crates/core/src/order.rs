//! Distance-induced weak orders over label tuples and the integer weights built on them.
//!
//! Tuples are embedded as integer points (embed values times the schema's
//! common power-of-ten scale) so every distance is exact. The Euclidean key is
//! the squared distance; squaring is monotone so ordering and ties are unchanged.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::aspect::{pareto_dominates, write_scaled, AspectSchema, LabelTuple, SchemaError, TupleSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("points have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("tuple space does not contain the best tuple {0}")]
    MissingBestTuple(String),
    #[error("weight policy violation: {0}")]
    PolicyViolation(String),
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("unknown metric `{0}` (expected euclidean, manhattan or chebyshev)")]
    UnknownMetric(String),
    #[error("unknown weight policy `{0}` (expected distinct or binary)")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Euclidean, MetricKind::Manhattan, MetricKind::Chebyshev];

    /// Short tag used in measure labels.
    pub fn tag(&self) -> &'static str {
        match self {
            MetricKind::Euclidean => "EUCL",
            MetricKind::Manhattan => "MANH",
            MetricKind::Chebyshev => "CHEB",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Manhattan => "manhattan",
            MetricKind::Chebyshev => "chebyshev",
        }
    }
}

impl FromStr for MetricKind {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "eucl" => Ok(MetricKind::Euclidean),
            "manhattan" | "manh" => Ok(MetricKind::Manhattan),
            "chebyshev" | "cheb" => Ok(MetricKind::Chebyshev),
            _ => Err(OrderError::UnknownMetric(s.to_string())),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Embedded tuple: integer coordinates that represent `coord / scale`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    coords: Vec<i64>,
    scale: i64,
}

impl Point {
    pub fn new(coords: Vec<i64>, scale: i64) -> Self {
        Point { coords, scale }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64 / self.scale as f64).collect()
    }
}

/// Exact distance value `value / denom`; `denom` is a power of ten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DistanceKey {
    value: i128,
    denom: i128,
}

impl DistanceKey {
    pub fn new(value: i128, denom: i128) -> Self {
        assert!(denom > 0, "distance denominator must be positive");
        // keep the fraction reduced so derived equality and hashing match `Ord`
        let (mut value, mut denom) = (value, denom);
        while denom % 10 == 0 && value % 10 == 0 {
            value /= 10;
            denom /= 10;
        }
        DistanceKey { value, denom }
    }

    pub fn zero() -> Self {
        DistanceKey { value: 0, denom: 1 }
    }

    pub fn value(&self) -> i128 {
        self.value
    }

    pub fn denom(&self) -> i128 {
        self.denom
    }

    pub fn as_f64(&self) -> f64 {
        self.value as f64 / self.denom as f64
    }
}

impl Ord for DistanceKey {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.denom == other.denom {
            return self.value.cmp(&other.value);
        }
        match (self.value.checked_mul(other.denom), other.value.checked_mul(self.denom)) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.as_f64().total_cmp(&other.as_f64()),
        }
    }
}

impl PartialOrd for DistanceKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DistanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_scaled(f, self.value, self.denom)
    }
}

/// Maps a tuple to its point: coordinate i is the embed value of the tuple's
/// label on aspect i, multiplied by the schema scale.
pub fn embed(tuple: &LabelTuple, schema: &AspectSchema) -> Result<Point, OrderError> {
    schema.check_tuple(tuple)?;
    let scale = schema.embed_scale();
    let divisor = 1_000_000 / scale;
    let coords = tuple
        .grades()
        .iter()
        .zip(schema.aspects())
        .map(|(&g, a)| a.labels[g].embed.micros() / divisor)
        .collect();
    Ok(Point::new(coords, scale))
}

pub fn distance(p: &Point, q: &Point, metric: MetricKind) -> Result<DistanceKey, OrderError> {
    if p.coords.len() != q.coords.len() {
        return Err(OrderError::DimensionMismatch(p.coords.len(), q.coords.len()));
    }
    debug_assert_eq!(p.scale, q.scale);
    let diffs = p.coords.iter().zip(&q.coords).map(|(a, b)| (*a as i128 - *b as i128).abs());
    let scale = p.scale as i128;
    Ok(match metric {
        MetricKind::Euclidean => DistanceKey::new(diffs.map(|d| d * d).sum(), scale * scale),
        MetricKind::Manhattan => DistanceKey::new(diffs.sum(), scale),
        MetricKind::Chebyshev => DistanceKey::new(diffs.max().unwrap_or(0), scale),
    })
}

/// Tuples at one distance from the best tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub key: DistanceKey,
    /// Descending lexicographic order.
    pub members: Vec<LabelTuple>,
}

/// Equivalence classes, best (closest to the best tuple) first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceOrder {
    metric: MetricKind,
    classes: Vec<EquivalenceClass>,
    index: HashMap<LabelTuple, usize>,
}

impl DistanceOrder {
    /// Assembles an order from explicit classes. Keys must increase strictly and
    /// no tuple may appear twice; nothing else is checked.
    pub fn from_classes(metric: MetricKind, classes: Vec<EquivalenceClass>) -> Result<Self, OrderError> {
        if classes.is_empty() {
            return Err(OrderError::InvalidOrder("no classes".into()));
        }
        let mut index = HashMap::new();
        for (i, class) in classes.iter().enumerate() {
            if i > 0 && class.key <= classes[i - 1].key {
                return Err(OrderError::InvalidOrder(format!("class {i} key does not increase")));
            }
            if class.members.is_empty() {
                return Err(OrderError::InvalidOrder(format!("class {i} is empty")));
            }
            for m in &class.members {
                if index.insert(m.clone(), i).is_some() {
                    return Err(OrderError::InvalidOrder(format!("tuple {m} appears twice")));
                }
            }
        }
        Ok(DistanceOrder { metric, classes, index })
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, tuple: &LabelTuple) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &LabelTuple> {
        self.classes.iter().flat_map(|c| c.members.iter())
    }

    /// One line per class: `class <index> dist <key> : <tuple>;<tuple>;...`
    pub fn dump(&self, schema: &AspectSchema) -> String {
        let mut out = String::new();
        for (i, class) in self.classes.iter().enumerate() {
            let members: Vec<String> = class.members.iter().map(|t| schema.format_tuple(t)).collect();
            out.push_str(&format!("class {i} dist {} : {}\n", class.key, members.join(";")));
        }
        out
    }
}

/// Groups the tuple space by exact distance from the best tuple, closest first.
pub fn build_order(space: &TupleSpace, schema: &AspectSchema, metric: MetricKind) -> Result<DistanceOrder, OrderError> {
    let best = schema.best_tuple();
    if !space.contains(&best) {
        return Err(OrderError::MissingBestTuple(schema.format_tuple(&best)));
    }
    let anchor = embed(&best, schema)?;
    let mut keyed = space
        .tuples()
        .iter()
        .map(|t| Ok((distance(&embed(t, schema)?, &anchor, metric)?, t.clone())))
        .collect::<Result<Vec<_>, OrderError>>()?;
    keyed.sort_by(|(ka, ta), (kb, tb)| ka.cmp(kb).then_with(|| tb.cmp(ta)));

    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for (key, tuple) in keyed {
        match classes.last_mut() {
            Some(last) if last.key == key => last.members.push(tuple),
            _ => classes.push(EquivalenceClass {
                key,
                members: vec![tuple],
            }),
        }
    }
    DistanceOrder::from_classes(metric, classes)
}

/// True iff every Pareto pair `a ⊑ b` of the order's tuples has `b` in the same
/// or a better class than `a`.
pub fn check_extends_partial_order(order: &DistanceOrder, schema: &AspectSchema) -> bool {
    let tuples: Vec<(&LabelTuple, usize)> = order
        .classes()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.members.iter().map(move |t| (t, i)))
        .collect();
    for &(a, ia) in &tuples {
        for &(b, ib) in &tuples {
            if ib > ia && matches!(pareto_dominates(a, b, schema), Ok(true)) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightPolicy {
    /// Class i (best = 0) of C gets C - 1 - i.
    DistinctIntegers,
    /// The best ⌈C/2⌉ classes get 1, the rest 0.
    BinaryTopHalf,
    /// One weight per class, best first, non-increasing.
    Explicit(Vec<u32>),
}

impl FromStr for WeightPolicy {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "distinct" => Ok(WeightPolicy::DistinctIntegers),
            "binary" => Ok(WeightPolicy::BinaryTopHalf),
            _ => Err(OrderError::UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightAssignment {
    policy: WeightPolicy,
    class_weights: Vec<u32>,
    weights: HashMap<LabelTuple, u32>,
}

impl WeightAssignment {
    pub fn policy(&self) -> &WeightPolicy {
        &self.policy
    }

    pub fn class_weights(&self) -> &[u32] {
        &self.class_weights
    }

    pub fn get(&self, tuple: &LabelTuple) -> Option<u32> {
        self.weights.get(tuple).copied()
    }

    pub fn is_binary(&self) -> bool {
        self.class_weights.iter().all(|&w| w <= 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LabelTuple, u32)> {
        self.weights.iter().map(|(t, &w)| (t, w))
    }
}

pub fn assign_weights(order: &DistanceOrder, policy: WeightPolicy) -> Result<WeightAssignment, OrderError> {
    let count = order.class_count();
    let class_weights: Vec<u32> = match &policy {
        WeightPolicy::DistinctIntegers => (0..count).map(|i| (count - 1 - i) as u32).collect(),
        WeightPolicy::BinaryTopHalf => {
            let top = count.div_ceil(2);
            (0..count).map(|i| u32::from(i < top)).collect()
        }
        WeightPolicy::Explicit(list) => {
            if list.len() != count {
                return Err(OrderError::PolicyViolation(format!(
                    "explicit list has {} weight(s) for {count} class(es)",
                    list.len()
                )));
            }
            if let Some(i) = (1..count).find(|&i| list[i] > list[i - 1]) {
                return Err(OrderError::PolicyViolation(format!(
                    "weight of class {i} exceeds weight of better class {}",
                    i - 1
                )));
            }
            list.clone()
        }
    };
    let weights = order
        .classes()
        .iter()
        .zip(&class_weights)
        .flat_map(|(c, &w)| c.members.iter().map(move |t| (t.clone(), w)))
        .collect();
    Ok(WeightAssignment {
        policy,
        class_weights,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::{build_tuple_space, Aspect, CouplingRule};

    fn schema(correctness: [&str; 3]) -> AspectSchema {
        AspectSchema::new(
            vec![
                Aspect::from_pairs("relevance", &[("nr", "0"), ("mr", "1"), ("fr", "2"), ("hr", "3")]).unwrap(),
                Aspect::from_pairs(
                    "correctness",
                    &[("nc", correctness[0]), ("pc", correctness[1]), ("c", correctness[2])],
                )
                .unwrap(),
            ],
            vec![CouplingRule::new("relevance", "nr", "correctness", "nc")],
        )
        .unwrap()
    }

    fn t(g: &[usize]) -> LabelTuple {
        LabelTuple::new(g.to_vec())
    }

    #[test]
    fn embedding_examples() {
        let s = schema(["0", "1.5", "3"]);
        assert_eq!(embed(&t(&[1, 2]), &s).unwrap().to_f64(), vec![1.0, 3.0]);
        assert_eq!(embed(&t(&[3, 1]), &s).unwrap().to_f64(), vec![3.0, 1.5]);
        assert_eq!(embed(&t(&[0, 0]), &s).unwrap().coords(), &[0, 0]);
        assert!(embed(&t(&[1]), &s).is_err());
    }

    #[test]
    fn distance_examples() {
        let p = Point::new(vec![1, 3], 1);
        let best = Point::new(vec![3, 3], 1);
        assert_eq!(distance(&p, &best, MetricKind::Euclidean).unwrap(), DistanceKey::new(4, 1));
        let q = Point::new(vec![3, 0], 1);
        assert_eq!(distance(&q, &best, MetricKind::Manhattan).unwrap(), DistanceKey::new(3, 1));
        assert_eq!(distance(&q, &q, MetricKind::Chebyshev).unwrap(), DistanceKey::zero());
        assert!(matches!(
            distance(&Point::new(vec![1], 1), &best, MetricKind::Manhattan),
            Err(OrderError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn keys_compare_across_denominators() {
        assert_eq!(DistanceKey::new(15, 10).cmp(&DistanceKey::new(3, 2)), Ordering::Equal);
        assert!(DistanceKey::new(225, 100) > DistanceKey::new(2, 1));
        assert_eq!(DistanceKey::new(225, 100).to_string(), "2.25");
    }

    #[test]
    fn missing_best_tuple() {
        let s = schema(["0", "1.5", "3"]);
        let space = TupleSpace::from_tuples(vec![t(&[0, 0]), t(&[1, 1])]);
        assert!(matches!(
            build_order(&space, &s, MetricKind::Euclidean),
            Err(OrderError::MissingBestTuple(_))
        ));
    }

    #[test]
    fn chebyshev_four_way_tie() {
        let s = schema(["0", "1.5", "3"]);
        let order = build_order(&build_tuple_space(&s), &s, MetricKind::Chebyshev).unwrap();
        assert_eq!(order.class_count(), 5);
        assert_eq!(
            order.classes().last().unwrap().members,
            vec![t(&[3, 0]), t(&[2, 0]), t(&[1, 0]), t(&[0, 0])]
        );
        assert_eq!(order.classes()[0].members, vec![t(&[3, 2])]);
        assert_eq!(order.classes()[0].key, DistanceKey::zero());
    }

    #[test]
    fn order_dump_lines() {
        let s = schema(["0", "1.5", "3"]);
        let order = build_order(&build_tuple_space(&s), &s, MetricKind::Chebyshev).unwrap();
        let dump = order.dump(&s);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "class 0 dist 0 : hr,c");
        assert_eq!(lines[2], "class 2 dist 1.5 : hr,pc;fr,pc");
        assert_eq!(lines[4], "class 4 dist 3 : hr,nc;fr,nc;mr,nc;nr,nc");
    }

    #[test]
    fn deliberate_violation_detected() {
        let s = schema(["0", "1.5", "3"]);
        let order = DistanceOrder::from_classes(
            MetricKind::Euclidean,
            vec![
                EquivalenceClass { key: DistanceKey::new(0, 1), members: vec![t(&[0, 0])] },
                EquivalenceClass { key: DistanceKey::new(1, 1), members: vec![t(&[3, 2])] },
            ],
        )
        .unwrap();
        assert!(!check_extends_partial_order(&order, &s));
        for m in MetricKind::ALL {
            let good = build_order(&build_tuple_space(&s), &s, m).unwrap();
            assert!(check_extends_partial_order(&good, &s));
        }
    }

    #[test]
    fn weight_policies() {
        let s = schema(["0", "1.5", "3"]);
        let space = build_tuple_space(&s);
        let eucl = build_order(&space, &s, MetricKind::Euclidean).unwrap();
        let w = assign_weights(&eucl, WeightPolicy::DistinctIntegers).unwrap();
        assert_eq!(w.get(&t(&[1, 2])), Some(5));
        assert_eq!(w.get(&t(&[3, 1])), Some(7));
        assert_eq!(w.get(&t(&[3, 0])), Some(3));
        assert_eq!(w.get(&t(&[0, 0])), Some(0));

        let cheb = build_order(&space, &s, MetricKind::Chebyshev).unwrap();
        let b = assign_weights(&cheb, WeightPolicy::BinaryTopHalf).unwrap();
        assert_eq!(b.get(&t(&[3, 1])), Some(1));
        assert_eq!(b.get(&t(&[1, 2])), Some(0));
        assert_eq!(b.get(&t(&[3, 0])), Some(0));
        assert!(b.is_binary());
        assert!(!w.is_binary());
    }

    #[test]
    fn single_class_gets_zero() {
        let order = DistanceOrder::from_classes(
            MetricKind::Manhattan,
            vec![EquivalenceClass { key: DistanceKey::zero(), members: vec![t(&[1]), t(&[0])] }],
        )
        .unwrap();
        let w = assign_weights(&order, WeightPolicy::DistinctIntegers).unwrap();
        assert_eq!(w.get(&t(&[0])), Some(0));
        assert_eq!(w.get(&t(&[1])), Some(0));
    }

    #[test]
    fn explicit_weights_validated() {
        let s = schema(["0", "1.5", "3"]);
        let cheb = build_order(&build_tuple_space(&s), &s, MetricKind::Chebyshev).unwrap();
        assert!(assign_weights(&cheb, WeightPolicy::Explicit(vec![9, 4, 4, 1, 0])).is_ok());
        assert!(matches!(
            assign_weights(&cheb, WeightPolicy::Explicit(vec![9, 4, 5, 1, 0])),
            Err(OrderError::PolicyViolation(_))
        ));
        assert!(matches!(
            assign_weights(&cheb, WeightPolicy::Explicit(vec![1, 0])),
            Err(OrderError::PolicyViolation(_))
        ));
    }

    #[test]
    fn metric_names() {
        assert_eq!("Chebyshev".parse::<MetricKind>().unwrap(), MetricKind::Chebyshev);
        let err = "cosine".parse::<MetricKind>().unwrap_err();
        assert!(err.to_string().contains("euclidean, manhattan or chebyshev"));
    }
}
