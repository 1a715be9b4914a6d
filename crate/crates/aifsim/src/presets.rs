//! The three case-study networks and their reference parameter sets.
//!
//! All presets use the open-loop form without a constitutive production
//! reaction: the production of the first species is supplied either by the
//! antithetic controller's actuation reaction or, for open-loop runs, by
//! [`with_constitutive`].

use crate::closed_form::{GeneExpressionParams, MaturationParams};
use crate::error::Result;
use crate::model::{Network, RateLaw, Reaction};

/// Reference gene expression rates: k_p = 2, gamma_r = 2, gamma_p = 7.
pub const GENE_PARAMS: GeneExpressionParams = GeneExpressionParams {
    k_p: 2.0,
    gamma_r: 2.0,
    gamma_p: 7.0,
};

/// Reference maturation rates: k_p = 1, gamma_r = 2, gamma_p = 1,
/// k_mat = 3, gamma_m = 1.
pub const MATURATION_PARAMS: MaturationParams = MaturationParams {
    k_p: 1.0,
    gamma_r: 2.0,
    gamma_p: 1.0,
    k_mat: 3.0,
    gamma_m: 1.0,
};

/// Dimerization network rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerizationParams {
    pub k_p: f64,
    pub gamma_r: f64,
    pub gamma_p: f64,
    /// Dimerization rate of `2 X2 -> X3`.
    pub k_d: f64,
    /// Dissociation rate of `X3 -> 2 X2`.
    pub gamma_d: f64,
    /// Dimer degradation rate.
    pub gamma_d2: f64,
}

/// Reference dimerization rates: k_p = 1, gamma_r = 2, gamma_p = 1,
/// k_d = 3, gamma_d = gamma_d2 = 1.
pub const DIMER_PARAMS: DimerizationParams = DimerizationParams {
    k_p: 1.0,
    gamma_r: 2.0,
    gamma_p: 1.0,
    k_d: 3.0,
    gamma_d: 1.0,
    gamma_d2: 1.0,
};

/// Reference controller parameters shared by all three case studies:
/// mu = 10, theta = 2, eta = 100 (set-point mu/theta = 5).
pub const MU: f64 = 10.0;
pub const THETA: f64 = 2.0;
pub const ETA: f64 = 100.0;

fn mass(rate: f64) -> RateLaw {
    RateLaw::MassAction { rate }
}

/// Two-species gene expression: translation `X1 -> X1 + X2` plus first-order
/// degradation of both species. X1 is mRNA, X2 is protein.
pub fn gene_network(p: &GeneExpressionParams) -> Network {
    Network::new(
        vec!["X1".into(), "X2".into()],
        vec![
            Reaction::new(vec![1, 0], vec![1, 1], mass(p.k_p)),
            Reaction::new(vec![1, 0], vec![0, 0], mass(p.gamma_r)),
            Reaction::new(vec![0, 1], vec![0, 0], mass(p.gamma_p)),
        ],
    )
    .expect("valid preset")
    .with_name("gene-expression")
}

/// Gene expression with a maturation step `X2 -> X3`; X3 is the mature
/// protein and the controlled species.
pub fn maturation_network(p: &MaturationParams) -> Network {
    Network::new(
        vec!["X1".into(), "X2".into(), "X3".into()],
        vec![
            Reaction::new(vec![1, 0, 0], vec![1, 1, 0], mass(p.k_p)),
            Reaction::new(vec![1, 0, 0], vec![0, 0, 0], mass(p.gamma_r)),
            Reaction::new(vec![0, 1, 0], vec![0, 0, 0], mass(p.gamma_p)),
            Reaction::new(vec![0, 1, 0], vec![0, 0, 1], mass(p.k_mat)),
            Reaction::new(vec![0, 0, 1], vec![0, 0, 0], mass(p.gamma_m)),
        ],
    )
    .expect("valid preset")
    .with_name("maturation")
}

/// Gene expression with reversible protein homodimerization
/// `2 X2 <-> X3`; X3 is the homodimer and the controlled species.
/// Bimolecular, so the moment-closure analysis does not apply.
pub fn dimerization_network(p: &DimerizationParams) -> Network {
    Network::new(
        vec!["X1".into(), "X2".into(), "X3".into()],
        vec![
            Reaction::new(vec![1, 0, 0], vec![1, 1, 0], mass(p.k_p)),
            Reaction::new(vec![1, 0, 0], vec![0, 0, 0], mass(p.gamma_r)),
            Reaction::new(vec![0, 1, 0], vec![0, 0, 0], mass(p.gamma_p)),
            Reaction::new(vec![0, 2, 0], vec![0, 0, 1], mass(p.k_d)),
            Reaction::new(vec![0, 0, 1], vec![0, 2, 0], mass(p.gamma_d)),
            Reaction::new(vec![0, 0, 1], vec![0, 0, 0], mass(p.gamma_d2)),
        ],
    )
    .expect("valid preset")
    .with_name("dimerization")
}

/// Add a constant production reaction `0 -> X_i` at the given rate, for
/// open-loop (constitutive) runs.
pub fn with_constitutive(network: Network, species: usize, rate: f64) -> Result<Network> {
    let d = network.dim();
    let mut products = vec![0u64; d];
    products[species] = 1;
    let mut reactions = network.reactions().to_vec();
    reactions.push(Reaction::new(vec![0; d], products, mass(rate)));
    let names = network
        .species()
        .iter()
        .map(|s| s.name.clone())
        .collect::<Vec<_>>();
    let mut out = Network::new(names, reactions)?;
    out.name = network.name.clone();
    out.description = network.description.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_network_shape() {
        let net = gene_network(&GENE_PARAMS);
        assert_eq!(net.dim(), 2);
        assert_eq!(net.n_reactions(), 3);
        assert!(net.is_unimolecular());
    }

    #[test]
    fn maturation_network_shape() {
        let net = maturation_network(&MATURATION_PARAMS);
        assert_eq!(net.dim(), 3);
        assert_eq!(net.n_reactions(), 5);
        assert!(net.is_unimolecular());
    }

    #[test]
    fn constitutive_reaction_appended() {
        let net = with_constitutive(gene_network(&GENE_PARAMS), 0, 35.0).unwrap();
        assert_eq!(net.n_reactions(), 4);
        let last = &net.reactions()[3];
        assert_eq!(last.products, vec![1, 0]);
        assert_eq!(last.order(), 0);
    }
}
