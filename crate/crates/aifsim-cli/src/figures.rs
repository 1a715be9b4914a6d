//! Figure-class catalog and structural parameter recognition for the
//! case-study closed forms.

use aifsim::closed_form::{GeneExpressionParams, MaturationParams};
use aifsim::{Network, RateLaw};

/// All reproducible figure datasets: model x feedback x class.
/// `re` (relative error of the closure) exists only where the moment
/// analysis applies; the dimerization network is simulation-only.
pub const CATALOG: &[&str] = &[
    "gene-prop-e",
    "gene-prop-v",
    "gene-prop-vs",
    "gene-prop-st",
    "gene-prop-re",
    "gene-prop-beta",
    "gene-hill-e",
    "gene-hill-v",
    "gene-hill-vs",
    "gene-hill-st",
    "gene-hill-re",
    "gene-hill-beta",
    "mat-prop-e",
    "mat-prop-v",
    "mat-prop-vs",
    "mat-prop-st",
    "mat-prop-re",
    "mat-prop-beta",
    "mat-hill-e",
    "mat-hill-v",
    "mat-hill-vs",
    "mat-hill-st",
    "mat-hill-re",
    "mat-hill-beta",
    "dimer-prop-e",
    "dimer-prop-v",
    "dimer-prop-vs",
    "dimer-prop-st",
    "dimer-prop-beta",
    "dimer-hill-e",
    "dimer-hill-v",
    "dimer-hill-vs",
    "dimer-hill-st",
    "dimer-hill-beta",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureClass {
    MeanTrajectories,
    VarianceTrajectories,
    StationaryVariance,
    SettlingTime,
    RelativeError,
    Beta,
}

#[derive(Debug, Clone)]
pub struct FigureSpec {
    pub id: String,
    pub model: &'static str,
    /// "on_off" or "hill"
    pub feedback_kind: &'static str,
    pub class: FigureClass,
}

/// Parse a catalog id into its parts.
pub fn parse_figure_id(id: &str) -> Option<FigureSpec> {
    let id_lower = id.to_ascii_lowercase();
    if !CATALOG.contains(&id_lower.as_str()) {
        return None;
    }
    let mut parts = id_lower.split('-');
    let model = match parts.next()? {
        "gene" => "gene",
        "mat" => "maturation",
        "dimer" => "dimerization",
        _ => return None,
    };
    let feedback_kind = match parts.next()? {
        "prop" => "on_off",
        "hill" => "hill",
        _ => return None,
    };
    let class = match parts.next()? {
        "e" => FigureClass::MeanTrajectories,
        "v" => FigureClass::VarianceTrajectories,
        "vs" => FigureClass::StationaryVariance,
        "st" => FigureClass::SettlingTime,
        "re" => FigureClass::RelativeError,
        "beta" => FigureClass::Beta,
        _ => return None,
    };
    Some(FigureSpec {
        id: id_lower,
        model,
        feedback_kind,
        class,
    })
}

fn mass_rate(r: &aifsim::Reaction) -> Option<f64> {
    match r.rate {
        RateLaw::MassAction { rate } => Some(rate),
        _ => None,
    }
}

/// Recognize a two-species gene expression network (translation plus two
/// first-order degradations) and read off its rates.
pub fn gene_params_of(net: &Network) -> Option<GeneExpressionParams> {
    if net.dim() != 2 || net.n_reactions() != 3 {
        return None;
    }
    let r = net.reactions();
    let translation = r[0].reactants == vec![1, 0] && r[0].products == vec![1, 1];
    let deg_r = r[1].reactants == vec![1, 0] && r[1].products == vec![0, 0];
    let deg_p = r[2].reactants == vec![0, 1] && r[2].products == vec![0, 0];
    if !(translation && deg_r && deg_p) {
        return None;
    }
    Some(GeneExpressionParams {
        k_p: mass_rate(&r[0])?,
        gamma_r: mass_rate(&r[1])?,
        gamma_p: mass_rate(&r[2])?,
    })
}

/// Recognize the three-species maturation network.
pub fn maturation_params_of(net: &Network) -> Option<MaturationParams> {
    if net.dim() != 3 || net.n_reactions() != 5 {
        return None;
    }
    let r = net.reactions();
    let shapes = r[0].reactants == vec![1, 0, 0]
        && r[0].products == vec![1, 1, 0]
        && r[1].reactants == vec![1, 0, 0]
        && r[1].products == vec![0, 0, 0]
        && r[2].reactants == vec![0, 1, 0]
        && r[2].products == vec![0, 0, 0]
        && r[3].reactants == vec![0, 1, 0]
        && r[3].products == vec![0, 0, 1]
        && r[4].reactants == vec![0, 0, 1]
        && r[4].products == vec![0, 0, 0];
    if !shapes {
        return None;
    }
    Some(MaturationParams {
        k_p: mass_rate(&r[0])?,
        gamma_r: mass_rate(&r[1])?,
        gamma_p: mass_rate(&r[2])?,
        k_mat: mass_rate(&r[3])?,
        gamma_m: mass_rate(&r[4])?,
    })
}
