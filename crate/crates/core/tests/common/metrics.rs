//! Hand-counted prediction fixtures and brute-force metric oracles.

use semgap::corpus::NerTag;
use semgap::eval::Prediction;

pub const O: usize = NerTag::OUTSIDE;
pub const PER: usize = 0;
pub const LOC: usize = 1;
pub const ORG: usize = 2;

pub fn pred(i: usize, predicted: usize, gold: usize, confidence: f64) -> Prediction {
    Prediction {
        id: i.to_string(),
        predicted,
        gold,
        confidence,
    }
}

/// 1400 predictions, 910 correct.
pub fn accuracy_fixture() -> Vec<Prediction> {
    (0..1400).map(|i| pred(i, 1, usize::from(i < 910), 0.9)).collect()
}

/// 10 tokens, 2 gold entities; everything predicted as an entity.
pub fn everything_is_an_entity() -> Vec<Prediction> {
    let gold = [PER, LOC, O, O, O, O, O, O, O, O];
    let predicted = [PER, LOC, ORG, PER, LOC, ORG, PER, LOC, ORG, PER];
    gold.iter()
        .zip(predicted)
        .enumerate()
        .map(|(i, (g, p))| pred(i, p, *g, 0.5))
        .collect()
}

/// 4 gold entities: 2 right, 1 wrong class, 1 predicted O; O tokens stay O.
pub fn mixed_entities() -> Vec<Prediction> {
    vec![
        pred(0, PER, PER, 0.9),
        pred(1, LOC, LOC, 0.9),
        pred(2, ORG, LOC, 0.9),
        pred(3, O, ORG, 0.9),
        pred(4, O, O, 0.9),
        pred(5, O, O, 0.9),
    ]
}

/// 10 predictions at confidence 0.8, 6 correct.
pub fn overconfident_bin() -> Vec<Prediction> {
    (0..10).map(|i| pred(i, 1, usize::from(i < 6), 0.8)).collect()
}

/// Several bins whose accuracy equals their mean confidence, using
/// confidences exact in binary so sums carry no rounding.
pub fn calibrated_fixed_point() -> Vec<Prediction> {
    let mut out = Vec::new();
    let mut id = 0;
    for (conf, n, correct) in [(0.25, 4, 1), (0.5, 8, 4), (0.75, 8, 6), (0.875, 8, 7), (1.0, 3, 3)] {
        for k in 0..n {
            out.push(pred(id, 1, usize::from(k < correct), conf));
            id += 1;
        }
    }
    out
}

/// Token-level micro precision/recall/F1 by direct counting.
pub fn prf_oracle(preds: &[Prediction]) -> (f64, f64, f64) {
    let entity = |c: usize| c != O;
    let tp = preds.iter().filter(|p| entity(p.gold) && p.predicted == p.gold).count() as f64;
    let predicted = preds.iter().filter(|p| entity(p.predicted)).count() as f64;
    let gold = preds.iter().filter(|p| entity(p.gold)).count() as f64;
    let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
    let r = if gold > 0.0 { tp / gold } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// ECE computed bin by bin with explicit interval membership.
pub fn ece_oracle(preds: &[Prediction], bins: usize) -> f64 {
    let n = preds.len() as f64;
    (0..bins)
        .map(|b| {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            let members: Vec<&Prediction> = preds
                .iter()
                .filter(|p| {
                    let in_bin = p.confidence >= lo && p.confidence < hi;
                    in_bin || (b == bins - 1 && p.confidence == 1.0)
                })
                .collect();
            if members.is_empty() {
                return 0.0;
            }
            let m = members.len() as f64;
            let acc = members.iter().filter(|p| p.predicted == p.gold).count() as f64 / m;
            let conf = members.iter().map(|p| p.confidence).sum::<f64>() / m;
            m / n * (acc - conf).abs()
        })
        .sum()
}
