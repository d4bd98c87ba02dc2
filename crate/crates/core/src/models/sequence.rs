//! Truncated ℓ₂ example with a single nonconforming direction `s̄ = αe₀ + eₙ`.
//!
//! `V̂ = ℝᴺ` (Euclidean), `V = span{e₁,…,e_{N−1}}`, `S = span{e₁,…,e_{n−1}, s̄}` and
//! `b = â|_{S×S}`. The smoother is derived from a prescribed approximation operator, so
//! every reported constant is independent of `N ≥ n + 2`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::method::{ritz_smoother, MethodSpec};
use crate::spaces::{GramSpace, HilbertSetup};

/// How the approximation operator treats the nonconforming direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VariantRepr", into = "VariantRepr")]
pub enum SequenceVariant {
    /// `P eᵢ = eᵢ` for `i < n`, everything else to zero (`E s̄ = 0`).
    Ignore,
    /// Additionally `P eₙ = s̄` and `P e_{n+1} = β/(1+α²) s̄`.
    Exploit,
    /// `P = 0` (`E = 0`); consistent only for `n = 1`.
    Zero,
    /// `E = Π_V`, so that `P = Π_S`.
    Ritz,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum VariantRepr {
    Number(u64),
    Name(String),
}

impl TryFrom<VariantRepr> for SequenceVariant {
    type Error = String;

    fn try_from(r: VariantRepr) -> std::result::Result<Self, String> {
        match r {
            VariantRepr::Number(1) => Ok(Self::Ignore),
            VariantRepr::Number(2) => Ok(Self::Exploit),
            VariantRepr::Name(s) => match s.as_str() {
                "1" | "ignore" => Ok(Self::Ignore),
                "2" | "exploit" => Ok(Self::Exploit),
                "zero" | "0" => Ok(Self::Zero),
                "ritz" => Ok(Self::Ritz),
                other => Err(format!("unknown sequence variant `{other}`")),
            },
            VariantRepr::Number(k) => Err(format!("unknown sequence variant {k}")),
        }
    }
}

impl From<SequenceVariant> for VariantRepr {
    fn from(v: SequenceVariant) -> Self {
        match v {
            SequenceVariant::Ignore => VariantRepr::Number(1),
            SequenceVariant::Exploit => VariantRepr::Number(2),
            SequenceVariant::Zero => VariantRepr::Name("zero".into()),
            SequenceVariant::Ritz => VariantRepr::Name("ritz".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceExampleParams {
    /// Index of the coordinate carrying the nonconforming direction (`n ≥ 1`).
    pub n: usize,
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Ambient dimension `N`; defaults to `n + 2`.
    #[serde(default)]
    pub truncation: Option<usize>,
    pub variant: SequenceVariant,
}

fn default_beta() -> f64 {
    1.0
}

impl SequenceExampleParams {
    pub fn new(variant: SequenceVariant, n: usize, alpha: f64) -> Self {
        Self {
            n,
            alpha,
            beta: default_beta(),
            truncation: None,
            variant,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = Some(truncation);
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.truncation.unwrap_or(self.n + 2)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.ambient_dim() < self.n + 2 {
            return Err(Error::InvalidParameter(format!(
                "truncation must be at least n + 2 = {}, got {}",
                self.n + 2,
                self.ambient_dim()
            )));
        }
        Ok(())
    }
}

/// Setup of the truncated sequence space; the last `S` column is the nonconforming one.
pub fn sequence_setup(n: usize, alpha: f64, dim: usize) -> Result<HilbertSetup> {
    let unit = |i: usize| -> Vec<f64> {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        e
    };
    let v_cols: Vec<Vec<f64>> = (1..dim).map(unit).collect();
    let conforming: Vec<Vec<f64>> = (1..n).map(unit).collect();
    let mut s_cols = conforming.clone();
    let mut bar = unit(n);
    bar[0] = alpha;
    s_cols.push(bar);
    HilbertSetup::new(
        GramSpace::euclidean(dim, "l2"),
        DenseMatrix::from_columns(dim, &v_cols),
        DenseMatrix::from_columns(dim, &s_cols),
        DenseMatrix::from_columns(dim, &conforming),
    )
}

/// The prescribed approximation operator in (`S` coefficients) x (`V` coefficients).
///
/// `V` coefficient `j` belongs to `e_{j+1}`; `S` coefficient `i < n − 1` to `e_{i+1}`, and
/// `S` coefficient `n − 1` to `s̄`.
pub fn prescribed_operator(p: &SequenceExampleParams) -> DenseMatrix {
    let dim = p.ambient_dim();
    let n = p.n;
    let mut op = DenseMatrix::zeros(n, dim - 1);
    if p.variant == SequenceVariant::Zero {
        return op;
    }
    for i in 0..n - 1 {
        op[(i, i)] = 1.0;
    }
    if p.variant == SequenceVariant::Exploit {
        op[(n - 1, n - 1)] = 1.0;
        op[(n - 1, n)] = p.beta / (1.0 + p.alpha * p.alpha);
    }
    op
}

pub fn build_sequence_example(p: &SequenceExampleParams) -> Result<MethodSpec> {
    p.validate()?;
    let setup = Arc::new(sequence_setup(p.n, p.alpha, p.ambient_dim())?);
    let b = setup.gram_s();
    match p.variant {
        SequenceVariant::Ritz => {
            let e = ritz_smoother(&setup)?;
            MethodSpec::new(setup, b, e)
        }
        _ => MethodSpec::from_approximation(setup, b, &prescribed_operator(p)),
    }
}
