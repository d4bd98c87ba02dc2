//! Named model generators addressable from a config.

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use qopt_core::analysis::{CHECKS, RESTRICTION_CHECK};
use qopt_core::method::MethodSpec;
use qopt_core::models::{
    build_poisson_1d, build_sequence_example, build_synthetic_2d, random_consistent_method, Poisson1dParams,
    RandomSmallParams, RestrictionCase, SequenceExampleParams, Synthetic2dParams, SyntheticModel,
};

use crate::error::{CliError, CliResult};

/// What a generator produces for one parameter set.
#[derive(Clone, Debug)]
pub enum Built {
    Method(MethodSpec),
    Restriction(RestrictionCase),
}

#[derive(Clone, Copy, Debug)]
pub struct ModelEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static str,
    /// Whether the model can produce restriction cases.
    restrictions: bool,
    build: fn(&Map<String, Value>) -> CliResult<Built>,
}

impl ModelEntry {
    pub fn build(&self, params: &Map<String, Value>) -> CliResult<Built> {
        (self.build)(params)
    }

    /// Names of the checks that may be enforced on this model.
    pub fn check_names(&self) -> Vec<&'static str> {
        let mut names: Vec<&'static str> = CHECKS.iter().map(|c| c.name).collect();
        if self.restrictions {
            names.push(RESTRICTION_CHECK.name);
        }
        names
    }
}

fn parse<T: DeserializeOwned>(model: &str, params: &Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| CliError::InvalidParams {
        model: model.into(),
        message: e.to_string(),
    })
}

fn invalid(model: &str) -> impl Fn(qopt_core::Error) -> CliError + '_ {
    move |e| CliError::InvalidParams {
        model: model.into(),
        message: e.to_string(),
    }
}

fn sequence(params: &Map<String, Value>) -> CliResult<Built> {
    let name = "sequence-example";
    let p: SequenceExampleParams = parse(name, params)?;
    build_sequence_example(&p).map(Built::Method).map_err(invalid(name))
}

fn poisson(params: &Map<String, Value>) -> CliResult<Built> {
    let name = "poisson-1d";
    let p: Poisson1dParams = parse(name, params)?;
    build_poisson_1d(&p).map(Built::Method).map_err(invalid(name))
}

fn synthetic(params: &Map<String, Value>) -> CliResult<Built> {
    let name = "synthetic-2d";
    let p: Synthetic2dParams = parse(name, params)?;
    Ok(match build_synthetic_2d(&p).map_err(invalid(name))? {
        SyntheticModel::Method(m) => Built::Method(m),
        SyntheticModel::Restriction(r) => Built::Restriction(r),
    })
}

fn random(params: &Map<String, Value>) -> CliResult<Built> {
    let name = "random-small";
    let p: RandomSmallParams = parse(name, params)?;
    random_consistent_method(&p).map(Built::Method).map_err(invalid(name))
}

pub const MODELS: &[ModelEntry] = &[
    ModelEntry {
        name: "sequence-example",
        description: "truncated l2 example with one nonconforming direction alpha*e0 + e_n",
        params: "variant (1 | 2 | \"zero\" | \"ritz\"), n >= 1, alpha > 0, beta > 0 = 1, truncation >= n+2 = n+2",
        restrictions: false,
        build: sequence,
    },
    ModelEntry {
        name: "poisson-1d",
        description: "1D Poisson on (0,1), coarse P1 spaces inside a refined conforming proxy",
        params: "coarse_cells = 4, fine_refinement >= 2 = 4, discrete_space (\"conforming-p1\" | \"broken-p1\"), \
                 penalty_weight > 0 = 1, smoother (\"averaging\" | \"ritz\" | \"identity\") = averaging, \
                 form (\"sip\" | \"restricted\") = sip for averaging, restricted otherwise",
        restrictions: false,
        build: poisson,
    },
    ModelEntry {
        name: "synthetic-2d",
        description: "two-dimensional cases with known answers",
        params:
            "case (\"identity-T1\" | \"half-ones-T2\" | \"angle-pi-4\" | \"oblique\"), angle in (0, pi/2] for oblique",
        restrictions: true,
        build: synthetic,
    },
    ModelEntry {
        name: "random-small",
        description: "seeded random fully consistent method with random SPD Gram matrix",
        params: "seed, max_dim >= 2 = 12",
        restrictions: false,
        build: random,
    },
];

pub fn find(name: &str) -> Option<&'static ModelEntry> {
    MODELS.iter().find(|m| m.name == name)
}
