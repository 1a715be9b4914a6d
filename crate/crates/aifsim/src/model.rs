//! Reaction networks with integer states and propensity evaluation.
//!
//! A [`Network`] is a list of named species plus reactions with left/right
//! stoichiometric vectors and a rate law. Mass-action propensities use the
//! combinatorial falling-factorial form (`2X -> ...` fires at `rate * x * (x-1)`,
//! with no symmetry division). Functional rate laws evaluate a feedback
//! function of one target species and must have empty reactant vectors so
//! firing can never drive a count negative.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named species and its position in the state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Rate law of a single reaction.
///
/// Functional laws carry their own parameters and target so a network is
/// self-contained and serializable without reference to a controller config.
#[derive(Debug, Clone, PartialEq)]
pub enum RateLaw {
    /// Mass-action kinetics with the given rate constant.
    MassAction { rate: f64 },
    /// ON/OFF proportional feedback: `Kp * max(0, mu - theta * x[target])`.
    OnOffProportional {
        kp: f64,
        mu: f64,
        theta: f64,
        target: usize,
    },
    /// Non-cooperative repressing Hill feedback: `Kp / (1 + x[target])`.
    Hill { kp: f64, target: usize },
}

impl RateLaw {
    pub fn is_mass_action(&self) -> bool {
        matches!(self, RateLaw::MassAction { .. })
    }

    fn rate_constant(&self) -> f64 {
        match *self {
            RateLaw::MassAction { rate } => rate,
            RateLaw::OnOffProportional { kp, .. } | RateLaw::Hill { kp, .. } => kp,
        }
    }
}

/// One reaction channel: left/right stoichiometry and a rate law.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// Molecules consumed per firing, one entry per species.
    pub reactants: Vec<u64>,
    /// Molecules produced per firing, one entry per species.
    pub products: Vec<u64>,
    pub rate: RateLaw,
}

impl Reaction {
    pub fn new(reactants: Vec<u64>, products: Vec<u64>, rate: RateLaw) -> Self {
        Self {
            reactants,
            products,
            rate,
        }
    }

    /// Net state change when this reaction fires (products minus reactants).
    pub fn net_change(&self) -> Vec<i64> {
        self.reactants
            .iter()
            .zip(&self.products)
            .map(|(&l, &r)| r as i64 - l as i64)
            .collect()
    }

    /// Total molecularity of the reactant side.
    pub fn order(&self) -> u64 {
        self.reactants.iter().sum()
    }

    /// Propensity at the given counts; caller guarantees dimensions match.
    #[inline]
    pub(crate) fn propensity_unchecked(&self, counts: &[u64]) -> f64 {
        match self.rate {
            RateLaw::MassAction { rate } => {
                let mut a = rate;
                for (i, &order) in self.reactants.iter().enumerate() {
                    // Falling factorial x(x-1)...(x-order+1); zero when the
                    // count is below the stoichiometric requirement.
                    for j in 0..order {
                        a *= counts[i].saturating_sub(j) as f64;
                    }
                }
                a
            }
            RateLaw::OnOffProportional {
                kp,
                mu,
                theta,
                target,
            } => kp * (mu - theta * counts[target] as f64).max(0.0),
            RateLaw::Hill { kp, target } => kp / (1.0 + counts[target] as f64),
        }
    }
}

/// Molecule counts plus simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub counts: Vec<u64>,
    pub time: f64,
}

impl State {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts, time: 0.0 }
    }
}

/// A stochastic reaction network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct Network {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    pub name: Option<String>,
    pub description: Option<String>,
}

impl Network {
    /// Build a network, validating its structural invariants.
    pub fn new(species_names: Vec<String>, reactions: Vec<Reaction>) -> Result<Self> {
        let d = species_names.len();
        if d == 0 {
            return Err(Error::Structure("network has no species".into()));
        }
        for (i, a) in species_names.iter().enumerate() {
            if species_names[i + 1..].contains(a) {
                return Err(Error::Structure(format!("duplicate species name '{a}'")));
            }
        }
        if reactions.is_empty() {
            return Err(Error::Structure("network has no reactions".into()));
        }
        for (k, r) in reactions.iter().enumerate() {
            if r.reactants.len() != d || r.products.len() != d {
                return Err(Error::Structure(format!(
                    "reaction {k} stoichiometry has wrong dimension (expected {d})"
                )));
            }
            if r.rate.rate_constant() < 0.0 || !r.rate.rate_constant().is_finite() {
                return Err(Error::Structure(format!(
                    "reaction {k} has a negative or non-finite rate constant"
                )));
            }
            match r.rate {
                RateLaw::OnOffProportional { target, .. } | RateLaw::Hill { target, .. } => {
                    if target >= d {
                        return Err(Error::Structure(format!(
                            "reaction {k} targets species index {target}, out of range"
                        )));
                    }
                    if r.reactants.iter().any(|&c| c > 0) {
                        return Err(Error::Structure(format!(
                            "reaction {k} has a functional rate law but consumes reactants"
                        )));
                    }
                }
                RateLaw::MassAction { .. } => {}
            }
        }
        let species = species_names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species { name, index })
            .collect();
        Ok(Self {
            species,
            reactions,
            name: None,
            description: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Number of species.
    pub fn dim(&self) -> usize {
        self.species.len()
    }

    /// Number of reaction channels.
    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_name(&self, index: usize) -> &str {
        &self.species[index].name
    }

    /// Propensity of reaction `k` at the given state.
    pub fn propensity(&self, k: usize, state: &State) -> Result<f64> {
        if state.counts.len() != self.dim() {
            return Err(Error::Structure(format!(
                "state dimension {} does not match network dimension {}",
                state.counts.len(),
                self.dim()
            )));
        }
        let r = self
            .reactions
            .get(k)
            .ok_or_else(|| Error::Structure(format!("no reaction with index {k}")))?;
        Ok(r.propensity_unchecked(&state.counts))
    }

    /// Stoichiometric matrix: column `k` is the net change of reaction `k`.
    pub fn stoichiometric_matrix(&self) -> DMatrix<i64> {
        let d = self.dim();
        let kn = self.n_reactions();
        DMatrix::from_fn(d, kn, |i, k| {
            self.reactions[k].products[i] as i64 - self.reactions[k].reactants[i] as i64
        })
    }

    /// True iff every reaction is mass-action of total order at most one.
    pub fn is_unimolecular(&self) -> bool {
        self.reactions
            .iter()
            .all(|r| r.rate.is_mass_action() && r.order() <= 1)
    }

    /// Extract `lambda(x) = W x + w0` together with the stoichiometric matrix.
    ///
    /// Only defined for unimolecular mass-action networks, where the
    /// propensity vector is exactly affine in the state.
    pub fn linearize_propensities(&self) -> Result<LinearPropensityStructure> {
        if !self.is_unimolecular() {
            return Err(Error::Unsupported(
                "propensities are affine only for unimolecular mass-action networks".into(),
            ));
        }
        let d = self.dim();
        let kn = self.n_reactions();
        let mut w = DMatrix::zeros(kn, d);
        let mut w0 = DVector::zeros(kn);
        for (k, r) in self.reactions.iter().enumerate() {
            let rate = r.rate.rate_constant();
            match r.reactants.iter().position(|&c| c == 1) {
                Some(i) => w[(k, i)] = rate,
                None => w0[k] = rate,
            }
        }
        let s = DMatrix::from_fn(d, kn, |i, k| {
            self.reactions[k].products[i] as f64 - self.reactions[k].reactants[i] as f64
        });
        Ok(LinearPropensityStructure { w, w0, s })
    }
}

/// Affine propensity structure `lambda(x) = W x + w0` of a unimolecular
/// network, plus its stoichiometric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPropensityStructure {
    /// K x d first-order rate matrix.
    pub w: DMatrix<f64>,
    /// Zeroth-order rates, one per reaction.
    pub w0: DVector<f64>,
    /// d x K stoichiometric matrix (integer-valued).
    pub s: DMatrix<f64>,
}

impl LinearPropensityStructure {
    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Evaluate the affine propensity vector at integer counts.
    pub fn propensities(&self, counts: &[u64]) -> DVector<f64> {
        let x = DVector::from_iterator(counts.len(), counts.iter().map(|&c| c as f64));
        &self.w * x + &self.w0
    }

    /// The deterministic rate matrix `S W`.
    pub fn sw(&self) -> DMatrix<f64> {
        &self.s * &self.w
    }

    /// The constant inflow vector `S w0`.
    pub fn sw0(&self) -> DVector<f64> {
        &self.s * &self.w0
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    species: Vec<String>,
    reactions: Vec<ReactionJson>,
}

#[derive(Serialize, Deserialize)]
struct ReactionJson {
    #[serde(default)]
    reactants: BTreeMap<String, u64>,
    #[serde(default)]
    products: BTreeMap<String, u64>,
    rate: RateJson,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum RateJson {
    #[serde(rename = "mass_action")]
    MassAction { value: f64 },
    #[serde(rename = "on_off")]
    OnOff {
        #[serde(rename = "Kp")]
        kp: f64,
        mu: f64,
        theta: f64,
        target: String,
    },
    #[serde(rename = "hill")]
    Hill {
        #[serde(rename = "Kp")]
        kp: f64,
        target: String,
    },
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(json: NetworkJson) -> Result<Self> {
        let lookup = |name: &str| -> Result<usize> {
            json.species
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::Structure(format!("unknown species '{name}'")))
        };
        let d = json.species.len();
        let mut reactions = Vec::with_capacity(json.reactions.len());
        for rj in &json.reactions {
            let mut reactants = vec![0u64; d];
            for (name, &count) in &rj.reactants {
                reactants[lookup(name)?] = count;
            }
            let mut products = vec![0u64; d];
            for (name, &count) in &rj.products {
                products[lookup(name)?] = count;
            }
            let rate = match &rj.rate {
                RateJson::MassAction { value } => RateLaw::MassAction { rate: *value },
                RateJson::OnOff {
                    kp,
                    mu,
                    theta,
                    target,
                } => RateLaw::OnOffProportional {
                    kp: *kp,
                    mu: *mu,
                    theta: *theta,
                    target: lookup(target)?,
                },
                RateJson::Hill { kp, target } => RateLaw::Hill {
                    kp: *kp,
                    target: lookup(target)?,
                },
            };
            reactions.push(Reaction::new(reactants, products, rate));
        }
        let mut net = Network::new(json.species, reactions)?;
        net.name = json.name;
        net.description = json.description;
        Ok(net)
    }
}

impl From<Network> for NetworkJson {
    fn from(net: Network) -> Self {
        let name_of = |i: usize| net.species[i].name.clone();
        let reactions = net
            .reactions
            .iter()
            .map(|r| {
                let sparse = |v: &[u64]| {
                    v.iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(i, &c)| (name_of(i), c))
                        .collect::<BTreeMap<_, _>>()
                };
                let rate = match r.rate {
                    RateLaw::MassAction { rate } => RateJson::MassAction { value: rate },
                    RateLaw::OnOffProportional {
                        kp,
                        mu,
                        theta,
                        target,
                    } => RateJson::OnOff {
                        kp,
                        mu,
                        theta,
                        target: name_of(target),
                    },
                    RateLaw::Hill { kp, target } => RateJson::Hill {
                        kp,
                        target: name_of(target),
                    },
                };
                ReactionJson {
                    reactants: sparse(&r.reactants),
                    products: sparse(&r.products),
                    rate,
                }
            })
            .collect();
        NetworkJson {
            name: net.name.clone(),
            description: net.description.clone(),
            species: net.species.iter().map(|s| s.name.clone()).collect(),
            reactions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn state(counts: &[u64]) -> State {
        State::new(counts.to_vec())
    }

    #[test]
    fn first_order_propensity() {
        let net = Network::new(
            vec!["X1".into()],
            vec![Reaction::new(
                vec![1],
                vec![0],
                RateLaw::MassAction { rate: 2.0 },
            )],
        )
        .unwrap();
        assert_eq!(net.propensity(0, &state(&[4])).unwrap(), 8.0);
    }

    #[test]
    fn bimolecular_product_propensity() {
        // Z1 + Z2 -> 0 at rate 100, counts (3, 2) -> 600.
        let net = Network::new(
            vec!["Z1".into(), "Z2".into()],
            vec![Reaction::new(
                vec![1, 1],
                vec![0, 0],
                RateLaw::MassAction { rate: 100.0 },
            )],
        )
        .unwrap();
        assert_eq!(net.propensity(0, &state(&[3, 2])).unwrap(), 600.0);
    }

    #[test]
    fn homodimerization_uses_falling_factorial() {
        // 2 X2 -> X3 at rate 3, x2 = 4 -> 3 * 4 * 3 = 36 (no 1/2 factor).
        let net = Network::new(
            vec!["X2".into(), "X3".into()],
            vec![Reaction::new(
                vec![2, 0],
                vec![0, 1],
                RateLaw::MassAction { rate: 3.0 },
            )],
        )
        .unwrap();
        assert_eq!(net.propensity(0, &state(&[4, 0])).unwrap(), 36.0);
        // Below the stoichiometric requirement the propensity vanishes.
        assert_eq!(net.propensity(0, &state(&[1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn on_off_clips_at_set_point() {
        let law = RateLaw::OnOffProportional {
            kp: 1.0,
            mu: 10.0,
            theta: 2.0,
            target: 0,
        };
        let r = Reaction::new(vec![0], vec![1], law);
        assert_eq!(r.propensity_unchecked(&[3]), 4.0);
        assert_eq!(r.propensity_unchecked(&[6]), 0.0);
    }

    #[test]
    fn hill_propensity() {
        let r = Reaction::new(vec![0], vec![1], RateLaw::Hill { kp: 8.0, target: 0 });
        assert_eq!(r.propensity_unchecked(&[3]), 2.0);
    }

    #[test]
    fn stoichiometric_matrix_columns() {
        let net = Network::new(
            vec!["X1".into(), "X2".into()],
            vec![
                // birth 0 -> X1
                Reaction::new(vec![0, 0], vec![1, 0], RateLaw::MassAction { rate: 1.0 }),
                // conversion X1 -> X2
                Reaction::new(vec![1, 0], vec![0, 1], RateLaw::MassAction { rate: 1.0 }),
                // catalytic X1 -> X1 + X2
                Reaction::new(vec![1, 0], vec![1, 1], RateLaw::MassAction { rate: 1.0 }),
            ],
        )
        .unwrap();
        let s = net.stoichiometric_matrix();
        assert_eq!(s.column(0).as_slice(), &[1, 0]);
        assert_eq!(s.column(1).as_slice(), &[-1, 1]);
        assert_eq!(s.column(2).as_slice(), &[0, 1]);
    }

    #[test]
    fn unimolecular_classification() {
        let gene = presets::gene_network(&presets::GENE_PARAMS);
        assert!(gene.is_unimolecular());
        let dimer = presets::dimerization_network(&presets::DIMER_PARAMS);
        assert!(!dimer.is_unimolecular());

        let hill = Network::new(
            vec!["X1".into()],
            vec![Reaction::new(
                vec![0],
                vec![1],
                RateLaw::Hill { kp: 1.0, target: 0 },
            )],
        )
        .unwrap();
        assert!(!hill.is_unimolecular());
    }

    #[test]
    fn linearize_zeroth_and_first_order() {
        let net = Network::new(
            vec!["X1".into()],
            vec![
                Reaction::new(vec![0], vec![1], RateLaw::MassAction { rate: 5.0 }),
                Reaction::new(vec![1], vec![0], RateLaw::MassAction { rate: 2.0 }),
            ],
        )
        .unwrap();
        let lin = net.linearize_propensities().unwrap();
        assert_eq!(lin.w[(0, 0)], 0.0);
        assert_eq!(lin.w0[0], 5.0);
        assert_eq!(lin.w[(1, 0)], 2.0);
        assert_eq!(lin.w0[1], 0.0);
    }

    #[test]
    fn linearization_matches_propensity_on_random_states() {
        // Gene expression with the production rate treated as zeroth-order
        // input; W x + w0 must reproduce propensity() exactly.
        let net = presets::with_constitutive(presets::gene_network(&presets::GENE_PARAMS), 0, 35.0)
            .unwrap();
        let lin = net.linearize_propensities().unwrap();
        let mut rng = crate::rng::Xoshiro256pp::seed_from_u64(11);
        for _ in 0..100 {
            let counts: Vec<u64> = (0..net.dim()).map(|_| rng.next_u64() % 10_000).collect();
            let lam = lin.propensities(&counts);
            let st = state(&counts);
            for k in 0..net.n_reactions() {
                assert_eq!(net.propensity(k, &st).unwrap(), lam[k]);
            }
        }
    }

    #[test]
    fn linearize_rejects_bimolecular() {
        let dimer = presets::dimerization_network(&presets::DIMER_PARAMS);
        assert!(matches!(
            dimer.linearize_propensities(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let net = presets::gene_network(&presets::GENE_PARAMS);
        assert!(matches!(
            net.propensity(0, &state(&[1, 2, 3])),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn json_round_trip_gene() {
        let net = presets::gene_network(&presets::GENE_PARAMS).with_name("gene");
        let text = serde_json::to_string_pretty(&net).unwrap();
        let back: Network = serde_json::from_str(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn json_schema_shape() {
        let text = r#"{
            "species": ["X1", "X2"],
            "reactions": [
                {"reactants": {"X1": 1}, "products": {}, "rate": {"kind": "mass_action", "value": 2.0}},
                {"reactants": {}, "products": {"X1": 1}, "rate": {"kind": "on_off", "Kp": 1.0, "mu": 10.0, "theta": 2.0, "target": "X2"}},
                {"reactants": {}, "products": {"X1": 1}, "rate": {"kind": "hill", "Kp": 8.0, "target": "X2"}}
            ]
        }"#;
        let net: Network = serde_json::from_str(text).unwrap();
        assert_eq!(net.dim(), 2);
        assert_eq!(
            net.reactions()[1].rate,
            RateLaw::OnOffProportional {
                kp: 1.0,
                mu: 10.0,
                theta: 2.0,
                target: 1
            }
        );
        assert_eq!(net.reactions()[2].rate, RateLaw::Hill { kp: 8.0, target: 1 });
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Nonnegative propensities for all three rate-law kinds.
            #[test]
            fn propensity_nonnegative(
                x in 0u64..10_000,
                y in 0u64..10_000,
                rate in 0.0f64..100.0,
                order in 0u64..3,
            ) {
                let r = Reaction::new(vec![order, 0], vec![0, 1], RateLaw::MassAction { rate });
                prop_assert!(r.propensity_unchecked(&[x, y]) >= 0.0);
                let onoff = Reaction::new(
                    vec![0, 0],
                    vec![1, 0],
                    RateLaw::OnOffProportional { kp: rate, mu: 10.0, theta: 2.0, target: 1 },
                );
                prop_assert!(onoff.propensity_unchecked(&[x, y]) >= 0.0);
                let hill = Reaction::new(vec![0, 0], vec![1, 0], RateLaw::Hill { kp: rate, target: 1 });
                prop_assert!(hill.propensity_unchecked(&[x, y]) >= 0.0);
            }

            // Columns of S satisfy zeta_l + S_col == zeta_r.
            #[test]
            fn stoichiometry_balance(
                reactants in proptest::collection::vec(0u64..3, 3),
                products in proptest::collection::vec(0u64..3, 3),
            ) {
                let r = Reaction::new(reactants.clone(), products.clone(), RateLaw::MassAction { rate: 1.0 });
                let net = Network::new(
                    vec!["A".into(), "B".into(), "C".into()],
                    vec![r],
                ).unwrap();
                let s = net.stoichiometric_matrix();
                for i in 0..3 {
                    prop_assert_eq!(reactants[i] as i64 + s[(i, 0)], products[i] as i64);
                }
            }
        }
    }
}
