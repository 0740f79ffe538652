//! Question templates, the full-scene answer oracle and ground-truth sufficiency.
//!
//! One surface form per question type:
//!
//! | type          | template                                                          | answers            |
//! |---------------|-------------------------------------------------------------------|--------------------|
//! | Query         | What is the {attr} of the {class}?                                | attribute values   |
//! | Exist         | Is there a {class}?                                               | yes / no           |
//! | Counting      | How many {classes} are there?                                     | 4 consecutive ints |
//! | Compare       | Compared with the {classes2}, are there more, fewer, or an equal number of {classes1}? | more / fewer / equal |
//! | MathCounting  | What is the number of {classes1} plus/minus the number of {classes2}? | 4 consecutive ints |
//! | MathCompare   | Are there more {classes1} than {classes2}?                        | yes / no           |
//!
//! Two-class templates always use two values of the same attribute, so the
//! classes are disjoint.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::seed;
use crate::world::{visible_set, Color, Material, ObjectId, ObjectSpec, SceneSpec, Shape, Size};

pub const QUESTION_VERSION: &str = "question/1";

/// Probability that instantiation targets hidden objects (an insufficient start).
pub const INSUFFICIENT_RATE: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Query,
    Exist,
    Counting,
    Compare,
    MathCounting,
    MathCompare,
}

impl QuestionType {
    pub const ALL: [QuestionType; 6] = [
        QuestionType::Query,
        QuestionType::Exist,
        QuestionType::Counting,
        QuestionType::Compare,
        QuestionType::MathCounting,
        QuestionType::MathCompare,
    ];

    pub fn class_count(self) -> usize {
        match self {
            QuestionType::Compare | QuestionType::MathCounting | QuestionType::MathCompare => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Shape,
    Color,
    Size,
    Material,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Shape,
        Attribute::Color,
        Attribute::Size,
        Attribute::Material,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Color => "color",
            Attribute::Size => "size",
            Attribute::Material => "material",
        }
    }

    pub fn of(self, o: &ObjectSpec) -> Answer {
        match self {
            Attribute::Shape => Answer::Shape(o.shape),
            Attribute::Color => Answer::Color(o.color),
            Attribute::Size => Answer::Size(o.size),
            Attribute::Material => Answer::Material(o.material),
        }
    }

    /// Full vocabulary in canonical order.
    pub fn vocabulary(self) -> Vec<Answer> {
        match self {
            Attribute::Shape => Shape::ALL.iter().map(|&v| Answer::Shape(v)).collect(),
            Attribute::Color => Color::ALL.iter().map(|&v| Answer::Color(v)).collect(),
            Attribute::Size => Size::ALL.iter().map(|&v| Answer::Size(v)).collect(),
            Attribute::Material => Material::ALL.iter().map(|&v| Answer::Material(v)).collect(),
        }
    }
}

/// Conjunction of attribute constraints; all-`None` matches every object.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Shape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Size>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<Material>,
}

impl AttributeFilter {
    pub fn matches(&self, o: &ObjectSpec) -> bool {
        self.shape.is_none_or(|v| v == o.shape)
            && self.color.is_none_or(|v| v == o.color)
            && self.size.is_none_or(|v| v == o.size)
            && self.material.is_none_or(|v| v == o.material)
    }

    /// Filter that pins `attr` to the value `o` has.
    pub fn pin(mut self, attr: Attribute, o: &ObjectSpec) -> Self {
        match attr {
            Attribute::Shape => self.shape = Some(o.shape),
            Attribute::Color => self.color = Some(o.color),
            Attribute::Size => self.size = Some(o.size),
            Attribute::Material => self.material = Some(o.material),
        }
        self
    }

    fn with(mut self, value: Answer) -> Self {
        match value {
            Answer::Shape(v) => self.shape = Some(v),
            Answer::Color(v) => self.color = Some(v),
            Answer::Size(v) => self.size = Some(v),
            Answer::Material(v) => self.material = Some(v),
            _ => {}
        }
        self
    }

    fn adjectives(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if let Some(v) = self.size {
            out.push(v.name());
        }
        if let Some(v) = self.color {
            out.push(v.name());
        }
        if let Some(v) = self.material {
            out.push(v.name());
        }
        out
    }

    pub fn singular(&self) -> String {
        let mut words = self.adjectives();
        words.push(self.shape.map_or("object", Shape::name));
        words.join(" ")
    }

    pub fn plural(&self) -> String {
        let mut words = self.adjectives();
        words.push(self.shape.map_or("objects", Shape::plural));
        words.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MathOp {
    Sum,
    Difference,
}

/// An answer value: an attribute value, a yes/no or comparison word, or a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Answer {
    Yes,
    No,
    More,
    Fewer,
    Equal,
    Count(u32),
    Shape(Shape),
    Color(Color),
    Size(Size),
    Material(Material),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Yes => f.write_str("yes"),
            Answer::No => f.write_str("no"),
            Answer::More => f.write_str("more"),
            Answer::Fewer => f.write_str("fewer"),
            Answer::Equal => f.write_str("equal"),
            Answer::Count(n) => write!(f, "{n}"),
            Answer::Shape(v) => f.write_str(v.name()),
            Answer::Color(v) => f.write_str(v.name()),
            Answer::Size(v) => f.write_str(v.name()),
            Answer::Material(v) => f.write_str(v.name()),
        }
    }
}

impl FromStr for Answer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes" => return Ok(Answer::Yes),
            "no" => return Ok(Answer::No),
            "more" => return Ok(Answer::More),
            "fewer" => return Ok(Answer::Fewer),
            "equal" => return Ok(Answer::Equal),
            _ => {}
        }
        if let Ok(n) = s.parse::<u32>() {
            return Ok(Answer::Count(n));
        }
        Attribute::ALL
            .iter()
            .flat_map(|a| a.vocabulary())
            .find(|v| v.to_string() == s)
            .ok_or_else(|| format!("unknown answer `{s}`"))
    }
}

impl Answer {
    pub fn as_count(&self) -> Option<u32> {
        match self {
            Answer::Count(n) => Some(*n),
            _ => None,
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("the referent of the question is not among the objects")]
    MissingReferent,
    #[error("the referent description matches more than one object")]
    AmbiguousReferent,
    #[error("the arithmetic result is negative")]
    NegativeCount,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionError {
    #[error("{0:?} template cannot be instantiated for this scene")]
    Unsatisfiable(QuestionType),
    #[error("question expects {expected} restriction classes, got {got}")]
    ClassCount { expected: usize, got: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Everything about a question an agent may see: no ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicQuestion {
    pub version: String,
    pub qtype: QuestionType,
    pub text: String,
    pub restriction_classes: Vec<AttributeFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queried_attribute: Option<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<MathOp>,
    pub answer_domain: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    #[serde(flatten)]
    pub public: PublicQuestion,
    pub ground_truth: Answer,
}

impl Deref for Question {
    type Target = PublicQuestion;

    fn deref(&self) -> &PublicQuestion {
        &self.public
    }
}

impl PublicQuestion {
    /// Does `o` match any restriction class?
    pub fn is_relevant(&self, o: &ObjectSpec) -> bool {
        self.restriction_classes.iter().any(|c| c.matches(o))
    }

    pub fn class_counts<'a, I>(&self, objects: I) -> Vec<u32>
    where
        I: IntoIterator<Item = &'a ObjectSpec>,
    {
        let mut counts = vec![0u32; self.restriction_classes.len()];
        for o in objects {
            for (c, class) in counts.iter_mut().zip(&self.restriction_classes) {
                if class.matches(o) {
                    *c += 1;
                }
            }
        }
        counts
    }

    /// Answer of a count-based template given per-class match counts.
    /// `None` for Query and for negative differences.
    pub fn answer_from_counts(&self, counts: &[u32]) -> Option<Answer> {
        let c = |i: usize| counts.get(i).copied().unwrap_or(0);
        Some(match self.qtype {
            QuestionType::Query => return None,
            QuestionType::Exist => {
                if c(0) > 0 {
                    Answer::Yes
                } else {
                    Answer::No
                }
            }
            QuestionType::Counting => Answer::Count(c(0)),
            QuestionType::Compare => match c(0).cmp(&c(1)) {
                std::cmp::Ordering::Greater => Answer::More,
                std::cmp::Ordering::Less => Answer::Fewer,
                std::cmp::Ordering::Equal => Answer::Equal,
            },
            QuestionType::MathCounting => match self.operation.unwrap_or(MathOp::Sum) {
                MathOp::Sum => Answer::Count(c(0) + c(1)),
                MathOp::Difference => Answer::Count(c(0).checked_sub(c(1))?),
            },
            QuestionType::MathCompare => {
                if c(0) > c(1) {
                    Answer::Yes
                } else {
                    Answer::No
                }
            }
        })
    }

    /// Evaluates the template over exactly the given objects.
    pub fn evaluate<'a, I>(&self, objects: I) -> Result<Answer, OracleError>
    where
        I: IntoIterator<Item = &'a ObjectSpec>,
    {
        if self.qtype == QuestionType::Query {
            let class = self.restriction_classes[0];
            let mut matches = objects.into_iter().filter(|o| class.matches(o));
            let referent = matches.next().ok_or(OracleError::MissingReferent)?;
            if matches.next().is_some() {
                return Err(OracleError::AmbiguousReferent);
            }
            let attr = self.queried_attribute.ok_or(OracleError::MissingReferent)?;
            return Ok(attr.of(referent));
        }
        let counts = self.class_counts(objects);
        self.answer_from_counts(&counts)
            .ok_or(OracleError::NegativeCount)
    }

    /// Best answer obtainable from a subset of the scene, if any.
    pub fn subscene_answer<'a, I>(&self, objects: I) -> Option<Answer>
    where
        I: IntoIterator<Item = &'a ObjectSpec>,
    {
        self.evaluate(objects).ok()
    }
}

/// Ground-truth answer over every object: on the table, covered and held.
pub fn answer_oracle(scene: &SceneSpec, question: &PublicQuestion) -> Result<Answer, OracleError> {
    question.evaluate(scene.all_objects())
}

pub fn is_relevant(object: &ObjectSpec, question: &PublicQuestion) -> bool {
    question.is_relevant(object)
}

/// Both halves of the sufficiency judgment, logged separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficiencyFlags {
    /// Every unseen object is irrelevant.
    pub unseen_irrelevant: bool,
    /// The answer over seen objects equals the ground truth.
    pub seen_answer_matches: bool,
}

impl SufficiencyFlags {
    pub fn sufficient(&self) -> bool {
        self.unseen_irrelevant && self.seen_answer_matches
    }
}

/// Sufficiency of the set of object ids seen so far.
pub fn sufficiency_given_seen(
    scene: &SceneSpec,
    question: &Question,
    seen: &BTreeSet<ObjectId>,
) -> SufficiencyFlags {
    let unseen_irrelevant = scene
        .all_objects()
        .filter(|o| !seen.contains(&o.id))
        .all(|o| !question.is_relevant(o));
    let seen_answer =
        question.subscene_answer(scene.all_objects().filter(|o| seen.contains(&o.id)));
    SufficiencyFlags {
        unseen_irrelevant,
        seen_answer_matches: seen_answer == Some(question.ground_truth),
    }
}

pub fn initial_sufficiency_flags(scene: &SceneSpec, question: &Question) -> SufficiencyFlags {
    sufficiency_given_seen(scene, question, &visible_set(scene).ids())
}

/// Whether the initial view alone settles the question.
pub fn initial_sufficiency(scene: &SceneSpec, question: &Question) -> bool {
    initial_sufficiency_flags(scene, question).sufficient()
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn render_text(
    qtype: QuestionType,
    classes: &[AttributeFilter],
    queried: Option<Attribute>,
    op: Option<MathOp>,
) -> String {
    let c0 = &classes[0];
    match qtype {
        QuestionType::Query => format!(
            "What is the {} of the {}?",
            queried.map_or("color", Attribute::name),
            c0.singular()
        ),
        QuestionType::Exist => {
            let s = c0.singular();
            format!("Is there {} {s}?", article(&s))
        }
        QuestionType::Counting => format!("How many {} are there?", c0.plural()),
        QuestionType::Compare => format!(
            "Compared with the {}, are there more, fewer, or an equal number of {}?",
            classes[1].plural(),
            c0.plural()
        ),
        QuestionType::MathCounting => format!(
            "What is the number of {} {} the number of {}?",
            c0.plural(),
            match op {
                Some(MathOp::Difference) => "minus",
                _ => "plus",
            },
            classes[1].plural()
        ),
        QuestionType::MathCompare => {
            format!(
                "Are there more {} than {}?",
                c0.plural(),
                classes[1].plural()
            )
        }
    }
}

/// Builds a question from explicit template slots. The ground truth comes
/// from the full scene; `domain_seed` only places the truth in numeric
/// domains and picks color foils.
pub fn build_question(
    scene: &SceneSpec,
    qtype: QuestionType,
    classes: Vec<AttributeFilter>,
    queried_attribute: Option<Attribute>,
    operation: Option<MathOp>,
    domain_seed: u64,
) -> Result<Question, QuestionError> {
    if classes.len() != qtype.class_count() {
        return Err(QuestionError::ClassCount {
            expected: qtype.class_count(),
            got: classes.len(),
        });
    }
    let queried_attribute = match qtype {
        QuestionType::Query => Some(queried_attribute.unwrap_or(Attribute::Color)),
        _ => None,
    };
    let operation = match qtype {
        QuestionType::MathCounting => Some(operation.unwrap_or(MathOp::Sum)),
        _ => None,
    };
    let text = render_text(qtype, &classes, queried_attribute, operation);
    let mut public = PublicQuestion {
        version: QUESTION_VERSION.into(),
        qtype,
        text,
        restriction_classes: classes,
        queried_attribute,
        operation,
        answer_domain: vec![],
    };
    let truth = answer_oracle(scene, &public)?;
    let mut rng = seed::rng(domain_seed, &[0xD0]);
    public.answer_domain = match qtype {
        QuestionType::Exist | QuestionType::MathCompare => vec![Answer::Yes, Answer::No],
        QuestionType::Compare => vec![Answer::More, Answer::Fewer, Answer::Equal],
        QuestionType::Counting | QuestionType::MathCounting => {
            let t = truth.as_count().unwrap_or(0) as i64;
            let n = scene.total_objects() as i64;
            let shift = 1 + i64::from(rng.gen_bool(0.5));
            let lo = (t - shift).max(0).min((n - 3).max(0));
            (lo..lo + 4).map(|v| Answer::Count(v as u32)).collect()
        }
        QuestionType::Query => {
            let vocab = queried_attribute.unwrap().vocabulary();
            if vocab.len() <= 4 {
                vocab
            } else {
                let mut foils: Vec<Answer> =
                    vocab.iter().copied().filter(|v| *v != truth).collect();
                foils.shuffle(&mut rng);
                foils.truncate(3);
                foils.push(truth);
                vocab.into_iter().filter(|v| foils.contains(v)).collect()
            }
        }
    };
    debug_assert!(public.answer_domain.contains(&truth));
    Ok(Question {
        public,
        ground_truth: truth,
    })
}

/// Single-attribute filters that every object in `objs` satisfies.
fn shared_filters(objs: &[&ObjectSpec]) -> Vec<(Attribute, AttributeFilter)> {
    let Some(first) = objs.first() else {
        return vec![];
    };
    [Attribute::Shape, Attribute::Color, Attribute::Material]
        .into_iter()
        .filter(|&a| objs.iter().all(|o| a.of(o) == a.of(first)))
        .map(|a| (a, AttributeFilter::default().pin(a, first)))
        .collect()
}

/// Smallest description of `target` over `attrs` that is unique in the scene.
fn unique_description(
    scene: &SceneSpec,
    target: &ObjectSpec,
    attrs: &[Attribute],
    rng: &mut impl Rng,
) -> Option<AttributeFilter> {
    let n = attrs.len();
    for k in 1..=n {
        let mut subsets: Vec<Vec<Attribute>> = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| {
                (0..n)
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| attrs[i])
                    .collect()
            })
            .collect();
        subsets.shuffle(rng);
        for subset in subsets {
            let f = subset
                .iter()
                .fold(AttributeFilter::default(), |f, &a| f.pin(a, target));
            if scene.all_objects().filter(|o| f.matches(o)).count() == 1 {
                return Some(f);
            }
        }
    }
    None
}

/// Instantiates a `qtype` question for `scene`.
///
/// With probability [`INSUFFICIENT_RATE`] the restriction classes are chosen
/// to cover every initially hidden object; otherwise they are chosen so no
/// hidden object is relevant.
pub fn instantiate_question(
    scene: &SceneSpec,
    qtype: QuestionType,
    seed_value: u64,
) -> Result<Question, QuestionError> {
    let mut rng = seed::rng(seed_value, &[qtype as u64, 0x51]);
    let obs = visible_set(scene);
    let hidden: Vec<&ObjectSpec> = scene
        .objects
        .iter()
        .filter(|o| !obs.contains(o.id))
        .collect();
    let visible: Vec<&ObjectSpec> = obs.objects().collect();
    let target_hidden = !hidden.is_empty() && rng.gen_bool(INSUFFICIENT_RATE);
    let domain_seed = rng.gen();

    let unsat = || QuestionError::Unsatisfiable(qtype);

    let themed = || -> Result<(Attribute, AttributeFilter), QuestionError> {
        let opts = shared_filters(&hidden);
        opts.choose(&mut seed::rng(seed_value, &[0x7E]))
            .copied()
            .ok_or_else(unsat)
    };
    let pick_attr = |rng: &mut rand_chacha::ChaCha8Rng| {
        *[Attribute::Shape, Attribute::Color, Attribute::Material]
            .choose(rng)
            .unwrap()
    };
    let two_values = |rng: &mut rand_chacha::ChaCha8Rng, attr: Attribute, first: Option<Answer>| {
        let vocab = attr.vocabulary();
        let a = first.unwrap_or_else(|| *vocab.choose(rng).unwrap());
        let others: Vec<Answer> = vocab.into_iter().filter(|v| *v != a).collect();
        (a, *others.choose(rng).unwrap())
    };
    let large = AttributeFilter {
        size: Some(Size::Large),
        ..AttributeFilter::default()
    };

    match qtype {
        QuestionType::Query => {
            let referent: &ObjectSpec = if target_hidden && hidden.len() == 1 {
                hidden[0]
            } else {
                visible.choose(&mut rng).copied().ok_or_else(unsat)?
            };
            let mut queried: Vec<Attribute> = Attribute::ALL.to_vec();
            queried.shuffle(&mut rng);
            for q in queried {
                let others: Vec<Attribute> =
                    Attribute::ALL.iter().copied().filter(|a| *a != q).collect();
                if let Some(f) = unique_description(scene, referent, &others, &mut rng) {
                    return build_question(scene, qtype, vec![f], Some(q), None, domain_seed);
                }
            }
            Err(unsat())
        }
        QuestionType::Exist | QuestionType::Counting => {
            let class = if target_hidden {
                themed()?.1
            } else {
                let attr = pick_attr(&mut rng);
                large.with(two_values(&mut rng, attr, None).0)
            };
            build_question(scene, qtype, vec![class], None, None, domain_seed)
        }
        QuestionType::Compare | QuestionType::MathCounting | QuestionType::MathCompare => {
            let mut classes = if target_hidden {
                let (attr, f) = themed()?;
                let (_, other) = two_values(&mut rng, attr, Some(attr.of(hidden[0])));
                vec![f, AttributeFilter::default().with(other)]
            } else {
                let attr = pick_attr(&mut rng);
                let (a, b) = two_values(&mut rng, attr, None);
                vec![large.with(a), large.with(b)]
            };
            if rng.gen_bool(0.5) {
                classes.swap(0, 1);
            }
            let mut op = None;
            if qtype == QuestionType::MathCounting {
                let probe =
                    build_question(scene, qtype, classes.clone(), None, Some(MathOp::Sum), 0)?;
                let counts = probe.class_counts(scene.all_objects());
                op = Some(if counts[0] >= counts[1] && rng.gen_bool(0.5) {
                    MathOp::Difference
                } else {
                    MathOp::Sum
                });
            }
            build_question(scene, qtype, classes, None, op, domain_seed)
        }
    }
}
