//! Two-dimensional cases with known answers.

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::method::MethodSpec;
use crate::spaces::{GramSpace, HilbertSetup, Subspace, SubspaceTag};

/// An operator on a Gram space together with a subspace to restrict it to.
#[derive(Clone, Debug)]
pub struct RestrictionCase {
    pub space: GramSpace,
    pub operator: DenseMatrix,
    pub subspace: Subspace,
}

#[derive(Clone, Debug)]
pub enum SyntheticModel {
    Method(MethodSpec),
    Restriction(RestrictionCase),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticCase {
    /// `T = I` on `ℝ²`, restricted to the ordinate.
    #[serde(rename = "identity-T1")]
    IdentityT1,
    /// `T = ½·ones(2)`, restricted to the ordinate.
    #[serde(rename = "half-ones-T2")]
    HalfOnesT2,
    /// Oblique method with `S` the abscissa and `ker P̂` at angle π/4.
    #[serde(rename = "angle-pi-4")]
    AnglePi4,
    /// As `angle-pi-4` with a free angle.
    Oblique,
}

impl SyntheticCase {
    pub const ALL: [SyntheticCase; 4] = [
        SyntheticCase::IdentityT1,
        SyntheticCase::HalfOnesT2,
        SyntheticCase::AnglePi4,
        SyntheticCase::Oblique,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SyntheticCase::IdentityT1 => "identity-T1",
            SyntheticCase::HalfOnesT2 => "half-ones-T2",
            SyntheticCase::AnglePi4 => "angle-pi-4",
            SyntheticCase::Oblique => "oblique",
        }
    }
}

impl std::str::FromStr for SyntheticCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown synthetic case `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synthetic2dParams {
    pub case: SyntheticCase,
    /// Angle between `S` and `ker P̂` for the oblique case, in `(0, π/2]`.
    #[serde(default)]
    pub angle: Option<f64>,
}

impl Synthetic2dParams {
    pub fn new(case: SyntheticCase) -> Self {
        Self { case, angle: None }
    }
}

fn ordinate(space: &GramSpace) -> Subspace {
    Subspace::new(space, DenseMatrix::from_rows(&[[0.0], [1.0]]), SubspaceTag::Other).expect("unit vector")
}

/// `V̂ = ℝ²`, `V` the ordinate, `S` the abscissa and `P e₁ = −cot θ · e₀`. The kernel of
/// `P̂` is spanned by `e₁ + cot θ · e₀`, which meets `S` at the angle `θ`.
pub fn oblique_method(theta: f64) -> Result<MethodSpec> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "angle must lie in (0, π/2], got {theta}"
        )));
    }
    let space = GramSpace::euclidean(2, "R2");
    let setup = HilbertSetup::new(
        space,
        DenseMatrix::from_rows(&[[0.0], [1.0]]),
        DenseMatrix::from_rows(&[[1.0], [0.0]]),
        DenseMatrix::zeros(2, 0),
    )?;
    let p = DenseMatrix::from_rows(&[[-theta.cos() / theta.sin()]]);
    MethodSpec::from_approximation(Arc::new(setup), DenseMatrix::identity(1), &p)
}

pub fn build_synthetic_2d(p: &Synthetic2dParams) -> Result<SyntheticModel> {
    let restriction = |operator: DenseMatrix| {
        let space = GramSpace::euclidean(2, "R2");
        let subspace = ordinate(&space);
        SyntheticModel::Restriction(RestrictionCase {
            space,
            operator,
            subspace,
        })
    };
    match p.case {
        SyntheticCase::IdentityT1 => Ok(restriction(DenseMatrix::identity(2))),
        SyntheticCase::HalfOnesT2 => Ok(restriction(DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]))),
        SyntheticCase::AnglePi4 => Ok(SyntheticModel::Method(oblique_method(FRAC_PI_4)?)),
        SyntheticCase::Oblique => {
            let theta = p
                .angle
                .ok_or_else(|| Error::InvalidParameter("the oblique case needs `angle`".into()))?;
            Ok(SyntheticModel::Method(oblique_method(theta)?))
        }
    }
}
