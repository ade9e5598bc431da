use crate::error::Result;
use crate::inference::PosteriorApprox;
use crate::metrics::{accuracy, ece, nll, PredictiveSamples};
use crate::nn::{NetworkSpec, ParamVector, Targets};

pub(crate) fn dirac_members(p: PosteriorApprox) -> Vec<ParamVector> {
    match p {
        PosteriorApprox::DiracEnsemble(m) => m,
        other => unreachable!("expected a Dirac ensemble, got {}", other.tag()),
    }
}

/// `input → hidden… → classes` ReLU MLP with biases.
pub(crate) fn classifier_spec(input: usize, hidden: &[usize], classes: usize) -> Result<NetworkSpec> {
    let mut sizes = vec![input];
    sizes.extend(hidden);
    sizes.push(classes);
    NetworkSpec::mlp(&sizes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub nll: f64,
    pub accuracy: f64,
    pub ece: f64,
}

pub(crate) const ECE_BINS: usize = 15;

pub(crate) fn scores(pred: &PredictiveSamples, targets: &Targets) -> Result<Scores> {
    Ok(Scores {
        nll: nll(pred, targets)?.value,
        accuracy: accuracy(pred, targets)?,
        ece: ece(pred, targets, ECE_BINS)?,
    })
}
