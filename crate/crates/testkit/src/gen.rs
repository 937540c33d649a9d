//! Seeded random frameworks and assessments for property and oracle tests.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use distaf_core::model::{
    Answer, ClusterQuestion, FrameworkTemplate, MandatoryCaps, Mechanism, Metric, MetricKind,
    Pillar, SanitizationTransform, StandardsMapping,
};
use distaf_core::scoring::{MetricValue, ValueOrigin};
use distaf_core::{AssessmentState, AssessmentStatus, MetricCode, Phase};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as TestRng;

fn epoch() -> DateTime<Utc> {
    DateTime::UNIX_EPOCH
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size limits for generated frameworks.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_pillars: usize,
    pub max_mechanisms: usize,
    pub max_metrics: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_pillars: 5,
            max_mechanisms: 6,
            max_metrics: 10,
        }
    }
}

fn token(prefix: &str, i: usize) -> String {
    // letters only: A, B, ..., Z, AA, AB, ...
    let mut n = i;
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    format!("{prefix}{s}")
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1..=3 => rng.random_range(1..=4) as f64,
        _ => rng.random_range(0.05..10.0),
    }
}

fn score(rng: &mut ChaCha8Rng, kind: MetricKind) -> f64 {
    match kind {
        MetricKind::Boolean => *[0.0, 100.0].choose(rng).unwrap(),
        MetricKind::Percentage => match rng.random_range(0..4) {
            0 => *[0.0, 25.0, 33.0, 50.0, 66.0, 75.0, 100.0]
                .choose(rng)
                .unwrap(),
            _ => rng.random_range(0.0..=100.0),
        },
    }
}

/// A random template that passes validation.
pub fn framework(rng: &mut ChaCha8Rng, shape: Shape) -> FrameworkTemplate {
    let mut pillars = Vec::new();
    for p in 0..rng.random_range(1..=shape.max_pillars) {
        let pcode = token("P", p);
        let mut mechanisms = Vec::new();
        for m in 0..rng.random_range(1..=shape.max_mechanisms) {
            let mcode = token("M", m);
            let mut metrics = Vec::new();
            let mut next = BTreeMap::from([(Phase::Design, 1u32), (Phase::Operational, 1u32)]);
            for _ in 0..rng.random_range(1..=shape.max_metrics) {
                let phase = if rng.random_bool(0.5) {
                    Phase::Design
                } else {
                    Phase::Operational
                };
                let index = next[&phase];
                *next.get_mut(&phase).unwrap() += 1;
                let kind = if rng.random_bool(0.4) {
                    MetricKind::Boolean
                } else {
                    MetricKind::Percentage
                };
                let transform = (kind == MetricKind::Percentage && rng.random_bool(0.15))
                    .then_some(SanitizationTransform::COMPLEMENT);
                let mandatory = rng.random_bool(0.2).then(|| MandatoryCaps {
                    mechanism_cap: rng.random_range(0..=100) as f64,
                    pillar_cap: rng.random_range(0..=100) as f64,
                    satisfied_when_at_least: *[100.0, 100.0, 50.0, 75.0].choose(rng).unwrap(),
                });
                let code = MetricCode::new(&pcode, &mcode, phase, index).unwrap();
                metrics.push(Metric {
                    title: format!("metric {code}"),
                    code,
                    description: String::new(),
                    kind,
                    transform,
                    mandatory,
                    references: vec![],
                });
            }
            let mut metric_weights = BTreeMap::new();
            if rng.random_bool(0.6) {
                for metric in &metrics {
                    metric_weights.insert(metric.code.clone(), weight(rng));
                }
                for phase in Phase::ALL {
                    let codes: Vec<&MetricCode> = metrics
                        .iter()
                        .filter(|x| x.phase() == phase)
                        .map(|x| &x.code)
                        .collect();
                    if !codes.is_empty() && codes.iter().all(|c| metric_weights[*c] == 0.0) {
                        metric_weights.insert(codes[0].clone(), 1.0);
                    }
                }
            }
            let mut cluster_questions = Vec::new();
            for phase in Phase::ALL {
                let phase_metrics: Vec<&Metric> =
                    metrics.iter().filter(|x| x.phase() == phase).collect();
                if phase_metrics.is_empty() || !rng.random_bool(0.3) {
                    continue;
                }
                let answers = (0..rng.random_range(2..=4))
                    .map(|i| Answer {
                        label: format!("answer {i}"),
                        configuration: phase_metrics
                            .iter()
                            .map(|x| (x.code.clone(), score(rng, x.kind)))
                            .collect(),
                    })
                    .collect();
                cluster_questions.push(ClusterQuestion {
                    phase,
                    prompt: format!("{mcode} {phase}?"),
                    answers,
                });
            }
            mechanisms.push(Mechanism {
                code: mcode.clone(),
                name: format!("Mechanism {mcode}"),
                metrics,
                metric_weights,
                cluster_questions,
            });
        }
        let mut mechanism_weights = BTreeMap::new();
        if rng.random_bool(0.6) {
            for m in &mechanisms {
                mechanism_weights.insert(m.code.clone(), weight(rng));
            }
            for phase in Phase::ALL {
                let codes: Vec<&str> = mechanisms
                    .iter()
                    .filter(|m| m.has_phase(phase))
                    .map(|m| m.code.as_str())
                    .collect();
                if !codes.is_empty() && codes.iter().all(|c| mechanism_weights[*c] == 0.0) {
                    mechanism_weights.insert(codes[0].to_string(), 1.0);
                }
            }
        }
        pillars.push(Pillar {
            code: pcode.clone(),
            name: format!("Pillar {pcode}"),
            mechanisms,
            mechanism_weights,
        });
    }

    let all: Vec<MetricCode> = pillars
        .iter()
        .flat_map(|p| {
            p.mechanisms
                .iter()
                .flat_map(|m| m.metrics.iter().map(|x| x.code.clone()))
        })
        .collect();
    let standards = (0..rng.random_range(0..=2))
        .map(|i| {
            let n = rng.random_range(1..=all.len().min(6));
            let satisfied_metrics: BTreeSet<MetricCode> =
                all.choose_multiple(rng, n).cloned().collect();
            StandardsMapping {
                standard_id: format!("STD-{i}"),
                display_name: format!("Standard {i}"),
                satisfied_metrics,
            }
        })
        .collect();

    FrameworkTemplate {
        id: "random".into(),
        version: "1".into(),
        pillars,
        standards,
    }
}

/// How a generated assessment is filled in.
#[derive(Debug, Clone, Copy)]
pub struct Fill {
    /// Probability that a metric receives a direct value.
    pub scored: f64,
    pub exclusions: bool,
    pub answers: bool,
    pub standards: bool,
}

impl Fill {
    pub const COMPLETE: Fill = Fill {
        scored: 1.0,
        exclusions: false,
        answers: false,
        standards: false,
    };
    pub const MIXED: Fill = Fill {
        scored: 0.8,
        exclusions: true,
        answers: true,
        standards: true,
    };
}

/// A random assessment state for `t`, in Draft unless `status` says otherwise.
pub fn assessment(
    rng: &mut ChaCha8Rng,
    t: &FrameworkTemplate,
    fill: Fill,
    status: AssessmentStatus,
) -> AssessmentState {
    let mut a = AssessmentState::new("generated", "random assessment", t.template_ref(), epoch());
    a.status = status;
    for (id, _, mechanism) in t.mechanisms() {
        if fill.exclusions && rng.random_bool(0.15) {
            a.excluded_mechanisms.insert(id.clone());
        }
        if fill.answers {
            for question in &mechanism.cluster_questions {
                if rng.random_bool(0.5) {
                    let idx = rng.random_range(0..question.answers.len());
                    a.chosen_answers
                        .entry(id.clone())
                        .or_default()
                        .insert(question.phase, idx);
                }
            }
        }
        for metric in &mechanism.metrics {
            if rng.random_bool(fill.scored) {
                let v = score(rng, metric.kind);
                let value = MetricValue::scored(metric.code.clone(), v, ValueOrigin::Direct);
                a.metric_values.insert(metric.code.clone(), value);
            } else if rng.random_bool(0.2) {
                // explicit reset, hides answer or standard values underneath
                a.metric_values.insert(
                    metric.code.clone(),
                    MetricValue::unscored(metric.code.clone()),
                );
            }
        }
    }
    if fill.standards {
        let mut ids: Vec<&String> = t.standards.iter().map(|s| &s.standard_id).collect();
        ids.shuffle(rng);
        for id in ids
            .into_iter()
            .take(rng.random_range(0..=t.standards.len()))
        {
            a.declared_standards.insert(id.clone());
        }
    }
    a
}

/// Picks a random metric code of `t`.
pub fn any_metric<'t>(rng: &mut ChaCha8Rng, t: &'t FrameworkTemplate) -> &'t Metric {
    let all: Vec<&Metric> = t
        .pillars
        .iter()
        .flat_map(|p| p.mechanisms.iter().flat_map(|m| m.metrics.iter()))
        .collect();
    all.choose(rng).unwrap()
}

/// A fresh score for `metric`.
pub fn any_score(rng: &mut ChaCha8Rng, metric: &Metric) -> f64 {
    score(rng, metric.kind)
}
