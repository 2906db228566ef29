//! Exact verification that counterfactual fairness can coexist with
//! within-group order inversion.
//!
//! The fixture: two people (Teal, Lucas), binary protected height, and one
//! shared bit of latent randomness ("world") that makes exactly one of them
//! charming. The predictor returns the charm bit for short people and its
//! negation for tall people. That predictor is counterfactually fair and its
//! latent is independent of height, yet the Teal/Lucas ordering flips under
//! intervention.
//!
//! All probabilities are carried as exact rationals converted losslessly
//! from the enumerated joint distribution, so the three verdicts involve no
//! floating-point comparison at all.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scm::{NodeRole, NodeSpec, StructuralModel};

pub const PERSON_TEAL: u8 = 0;
pub const PERSON_LUCAS: u8 = 1;
pub const HEIGHT_SHORT: u8 = 0;
pub const HEIGHT_TALL: u8 = 1;
pub const WORLD_A: u8 = 0;
pub const WORLD_B: u8 = 1;

/// An exact probability, exposed as a reduced fraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exact {
    pub numerator: i64,
    pub denominator: i64,
}

impl Exact {
    fn from_rational(r: &BigRational) -> Exact {
        use num_traits::ToPrimitive;
        Exact {
            numerator: r.numer().to_i64().expect("small fixture denominators"),
            denominator: r.denom().to_i64().expect("small fixture denominators"),
        }
    }
}

/// One cell of the person × world × height table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCell {
    pub person: String,
    pub world: String,
    pub height: String,
    pub charm: u8,
    pub prediction: u8,
    pub probability: Exact,
}

/// Verdicts of the three checks plus the enumerated table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    /// Each person's prediction distribution is identical under both
    /// interventions.
    pub cf_holds: bool,
    /// Pr(charm, height) = Pr(charm) · Pr(height) for all four value pairs.
    pub independence_holds: bool,
    /// False iff some world exists where the Teal/Lucas order differs
    /// between the short and tall interventions.
    pub order_preserved: bool,
    pub pr_charming_and_tall: Exact,
    pub table: Vec<TableCell>,
}

impl CounterexampleReport {
    /// The construction is valid exactly when fairness and independence hold
    /// while the ordering does not.
    pub fn verdicts(&self) -> (bool, bool, bool) {
        (self.cf_holds, self.independence_holds, self.order_preserved)
    }
}

/// The three independent fair binary sources: person, world, height.
pub fn toy_model() -> StructuralModel {
    StructuralModel::new(vec![
        NodeSpec::categorical("person", NodeRole::Observed, &[0.5, 0.5]),
        NodeSpec::bernoulli("world", NodeRole::Latent, &[], 0.0, &[]),
        NodeSpec::bernoulli("height", NodeRole::Protected, &[], 0.0, &[]),
    ])
}

/// Charm is the one latent bit: in world A Lucas is charming, in world B
/// Teal is.
pub fn charm(person: u8, world: u8) -> u8 {
    (person + world) % 2
}

/// The fixed predictor table: identity on charm for short, negation for tall.
pub fn toy_prediction(height: u8, charm: u8) -> u8 {
    if height == HEIGHT_SHORT {
        charm
    } else {
        1 - charm
    }
}

/// Enumerate the eight cells exactly and run the three checks.
pub fn verify_counterexample() -> CounterexampleReport {
    let model = toy_model();
    let worlds = model
        .enumerate_worlds()
        .expect("fixture model is discrete and tiny");

    // The sampled probabilities are dyadic, so the conversion to rationals
    // is lossless.
    let cells: Vec<(u8, u8, u8, BigRational)> = worlds
        .worlds
        .iter()
        .map(|w| {
            let person = worlds.value(w, "person").unwrap() as u8;
            let world = worlds.value(w, "world").unwrap() as u8;
            let height = worlds.value(w, "height").unwrap() as u8;
            let p = BigRational::from_float(w.probability)
                .expect("finite probability converts exactly");
            (person, world, height, p)
        })
        .collect();

    let total: BigRational = cells.iter().map(|(_, _, _, p)| p.clone()).sum();
    assert!(total.is_one(), "enumerated probabilities must sum to exactly 1");

    // (1) Counterfactual fairness: for each person, the joint mass on each
    // prediction value is the same under both interventions. Both sides are
    // conditioned on the same person, so comparing unnormalized masses is
    // exact.
    let mut cf_holds = true;
    for person in [PERSON_TEAL, PERSON_LUCAS] {
        for y in [0u8, 1u8] {
            let mass = |intervened_height: u8| -> BigRational {
                cells
                    .iter()
                    .filter(|(p, w, _, _)| {
                        *p == person && toy_prediction(intervened_height, charm(*p, *w)) == y
                    })
                    .map(|(_, _, _, pr)| pr.clone())
                    .sum()
            };
            if mass(HEIGHT_SHORT) != mass(HEIGHT_TALL) {
                cf_holds = false;
            }
        }
    }

    // (2) Latent independence: Pr(charm, height) factorizes for all four
    // value pairs.
    let mut independence_holds = true;
    let mut pr_charming_and_tall = BigRational::zero();
    for cv in [0u8, 1u8] {
        for hv in [0u8, 1u8] {
            let joint: BigRational = cells
                .iter()
                .filter(|(p, w, h, _)| charm(*p, *w) == cv && *h == hv)
                .map(|(_, _, _, pr)| pr.clone())
                .sum();
            let p_charm: BigRational = cells
                .iter()
                .filter(|(p, w, _, _)| charm(*p, *w) == cv)
                .map(|(_, _, _, pr)| pr.clone())
                .sum();
            let p_height: BigRational = cells
                .iter()
                .filter(|(_, _, h, _)| *h == hv)
                .map(|(_, _, _, pr)| pr.clone())
                .sum();
            if joint != p_charm * p_height {
                independence_holds = false;
            }
            if cv == 1 && hv == HEIGHT_TALL {
                pr_charming_and_tall = joint;
            }
        }
    }

    // (3) Group ordering: in each world, compare the Teal/Lucas prediction
    // order under the short intervention against the tall intervention.
    let mut order_preserved = true;
    for world in [WORLD_A, WORLD_B] {
        let teal = charm(PERSON_TEAL, world);
        let lucas = charm(PERSON_LUCAS, world);
        let short_gap =
            i16::from(toy_prediction(HEIGHT_SHORT, teal)) - i16::from(toy_prediction(HEIGHT_SHORT, lucas));
        let tall_gap =
            i16::from(toy_prediction(HEIGHT_TALL, teal)) - i16::from(toy_prediction(HEIGHT_TALL, lucas));
        if short_gap.signum() != tall_gap.signum() {
            order_preserved = false;
        }
    }

    // Collapse the 8 cells into the printable table (each row's probability
    // is the cell mass).
    let mut table = Vec::new();
    let mut seen: BTreeMap<(u8, u8, u8), BigRational> = BTreeMap::new();
    for (p, w, h, pr) in &cells {
        *seen.entry((*h, *w, *p)).or_insert_with(BigRational::zero) += pr.clone();
    }
    for ((h, w, p), pr) in seen {
        table.push(TableCell {
            person: person_name(p).into(),
            world: world_name(w).into(),
            height: height_name(h).into(),
            charm: charm(p, w),
            prediction: toy_prediction(h, charm(p, w)),
            probability: Exact::from_rational(&pr),
        });
    }

    CounterexampleReport {
        cf_holds,
        independence_holds,
        order_preserved,
        pr_charming_and_tall: Exact::from_rational(&pr_charming_and_tall),
        table,
    }
}

pub fn person_name(p: u8) -> &'static str {
    if p == PERSON_TEAL {
        "Teal"
    } else {
        "Lucas"
    }
}

pub fn world_name(w: u8) -> &'static str {
    if w == WORLD_A {
        "A"
    } else {
        "B"
    }
}

pub fn height_name(h: u8) -> &'static str {
    if h == HEIGHT_SHORT {
        "short"
    } else {
        "tall"
    }
}
