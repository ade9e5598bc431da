use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svi::FactorizedGaussian;
use super::swag::SwagGaussian;
use crate::error::{Error, Result};
use crate::nn::{Layout, ParamVector};
use crate::rng;

/// A representation of `p(w|D)` that can be sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PosteriorApprox {
    /// Equally weighted point masses.
    DiracEnsemble(Vec<ParamVector>),
    Factorized(FactorizedGaussian),
    Swag(SwagGaussian),
    /// Uniform mixture; components are never mixtures themselves.
    Mixture(Vec<PosteriorApprox>),
}

const MIXTURE_SALT: u64 = 0x313C;

impl PosteriorApprox {
    pub fn validate(&self) -> Result<()> {
        match self {
            PosteriorApprox::DiracEnsemble(members) => {
                let first = members.first().ok_or_else(|| Error::config("empty ensemble"))?;
                if members.iter().any(|m| m.layout() != first.layout()) {
                    return Err(Error::config("ensemble members have different layouts"));
                }
                Ok(())
            }
            PosteriorApprox::Factorized(_) => Ok(()),
            PosteriorApprox::Swag(g) => {
                if g.deviations.len() != g.rank || g.diag_var.iter().any(|v| *v < 0.0) {
                    return Err(Error::config("SWAG rank does not match its deviation matrix"));
                }
                Ok(())
            }
            PosteriorApprox::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::config("empty mixture"));
                }
                for p in parts {
                    if matches!(p, PosteriorApprox::Mixture(_)) {
                        return Err(Error::config("mixtures nest at most two levels deep"));
                    }
                    p.validate()?;
                }
                if parts.iter().any(|p| p.layout() != parts[0].layout()) {
                    return Err(Error::config("mixture components have different layouts"));
                }
                Ok(())
            }
        }
    }

    pub fn layout(&self) -> &Layout {
        match self {
            PosteriorApprox::DiracEnsemble(m) => m[0].layout(),
            PosteriorApprox::Factorized(q) => q.mean.layout(),
            PosteriorApprox::Swag(g) => g.mean.layout(),
            PosteriorApprox::Mixture(parts) => parts[0].layout(),
        }
    }

    /// Short provenance tag, e.g. `swag(k=20)` or `mixture(3×swag(k=20))`.
    pub fn tag(&self) -> String {
        match self {
            PosteriorApprox::DiracEnsemble(m) => format!("dirac(n={})", m.len()),
            PosteriorApprox::Factorized(_) => "factorized".to_string(),
            PosteriorApprox::Swag(g) => format!("swag(k={})", g.rank),
            PosteriorApprox::Mixture(parts) => format!("mixture({}×{})", parts.len(), parts[0].tag()),
        }
    }

    /// Draw count that enumerates a Dirac ensemble exactly.
    pub fn natural_draws(&self) -> Option<usize> {
        match self {
            PosteriorApprox::DiracEnsemble(m) => Some(m.len()),
            _ => None,
        }
    }

    /// `J` parameter draws. Dirac ensembles are enumerated in order (cycling
    /// when `J` exceeds the size); Gaussian draw `j` uses seed `seed + j`;
    /// mixtures assign draw `j` to component `j mod M` (stratified).
    pub fn draw(&self, draws: usize, seed: u64) -> Result<Vec<ParamVector>> {
        self.validate()?;
        if draws == 0 {
            return Err(Error::config("at least one posterior draw is required"));
        }
        match self {
            PosteriorApprox::DiracEnsemble(m) => Ok((0..draws).map(|j| m[j % m.len()].clone()).collect()),
            PosteriorApprox::Factorized(q) => Ok((0..draws).into_par_iter().map(|j| q.sample(rng::member_seed(seed, j))).collect()),
            PosteriorApprox::Swag(g) => (0..draws).into_par_iter().map(|j| g.sample(rng::member_seed(seed, j))).collect(),
            PosteriorApprox::Mixture(parts) => {
                let m = parts.len();
                let per: Vec<Vec<ParamVector>> = parts
                    .iter()
                    .enumerate()
                    .map(|(c, part)| {
                        let count = draws / m + usize::from(c < draws % m);
                        if count == 0 {
                            Ok(Vec::new())
                        } else {
                            part.draw(count, rng::substream(rng::member_seed(seed, c), MIXTURE_SALT))
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok((0..draws).map(|j| per[j % m][j / m].clone()).collect())
            }
        }
    }
}
