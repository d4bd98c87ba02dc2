//! One-dimensional Poisson problem on `(0, 1)` with homogeneous Dirichlet data.
//!
//! `V` is approximated by continuous P1 on a uniform fine mesh that nests a coarse mesh of
//! width `H`. For the broken discrete space, `V̂` consists of fine P1 functions that may jump
//! at coarse nodes, with the scalar product
//!
//! ```text
//! â(v, w) = Σ_cells ∫ v′w′ + η/H Σ_{coarse nodes} [v][w],
//! ```
//!
//! where at the two boundary nodes the jump is the trace. On `V` all jumps vanish and
//! `â` is the stiffness form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::method::{ritz_smoother, MethodSpec};
use crate::spaces::{GramSpace, HilbertSetup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteSpace {
    /// Continuous P1 on the coarse mesh (`S ⊆ V`).
    #[serde(rename = "conforming-p1")]
    ConformingP1,
    /// Discontinuous P1 on the coarse mesh.
    #[serde(rename = "broken-p1")]
    BrokenP1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoissonSmoother {
    /// Averages the one-sided values at interior coarse nodes, zero on the boundary, and
    /// interpolates onto the fine mesh. Fixes continuous functions.
    Averaging,
    /// `â`-orthogonal projection onto `V`.
    Ritz,
    /// The embedding `S ⊆ V`; only available for the conforming space.
    #[serde(alias = "none")]
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteForm {
    /// Symmetric interior penalty form with the same penalty as `â`.
    Sip,
    /// `b = â|_{S×S}`.
    Restricted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Poisson1dParams {
    #[serde(default = "default_coarse_cells")]
    pub coarse_cells: usize,
    #[serde(default = "default_refinement")]
    pub fine_refinement: usize,
    pub discrete_space: DiscreteSpace,
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default = "default_smoother")]
    pub smoother: PoissonSmoother,
    /// Defaults to the interior penalty form for the averaging smoother and to the
    /// restricted form otherwise.
    #[serde(default)]
    pub form: Option<DiscreteForm>,
}

fn default_coarse_cells() -> usize {
    4
}

fn default_refinement() -> usize {
    4
}

fn default_penalty() -> f64 {
    1.0
}

fn default_smoother() -> PoissonSmoother {
    PoissonSmoother::Averaging
}

impl Poisson1dParams {
    pub fn new(discrete_space: DiscreteSpace, smoother: PoissonSmoother) -> Self {
        Self {
            coarse_cells: default_coarse_cells(),
            fine_refinement: default_refinement(),
            discrete_space,
            penalty_weight: default_penalty(),
            smoother,
            form: None,
        }
    }

    pub fn with_mesh(mut self, coarse_cells: usize, fine_refinement: usize) -> Self {
        self.coarse_cells = coarse_cells;
        self.fine_refinement = fine_refinement;
        self
    }

    pub fn with_penalty(mut self, eta: f64) -> Self {
        self.penalty_weight = eta;
        self
    }

    pub fn with_form(mut self, form: DiscreteForm) -> Self {
        self.form = Some(form);
        self
    }

    pub fn effective_form(&self) -> DiscreteForm {
        self.form.unwrap_or(match self.smoother {
            PoissonSmoother::Averaging => DiscreteForm::Sip,
            _ => DiscreteForm::Restricted,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.fine_refinement < 2 {
            return Err(Error::InvalidParameter("fine_refinement must be at least 2".into()));
        }
        let min_cells = match self.discrete_space {
            DiscreteSpace::ConformingP1 => 2,
            DiscreteSpace::BrokenP1 => 1,
        };
        if self.coarse_cells < min_cells {
            return Err(Error::InvalidParameter(format!(
                "coarse_cells must be at least {min_cells} for this space"
            )));
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty_weight must be positive, got {}",
                self.penalty_weight
            )));
        }
        if self.discrete_space == DiscreteSpace::BrokenP1 && self.smoother == PoissonSmoother::Identity {
            return Err(Error::InvalidParameter(
                "the identity smoother requires the conforming space".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform coarse mesh of `cells` cells, each split into `r` fine cells.
#[derive(Clone, Copy, Debug)]
pub struct NestedMesh {
    pub cells: usize,
    pub r: usize,
}

impl NestedMesh {
    pub fn coarse_width(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn fine_width(&self) -> f64 {
        self.coarse_width() / self.r as f64
    }

    /// Number of interior fine nodes (the dimension of `V`).
    pub fn interior_fine_nodes(&self) -> usize {
        self.cells * self.r - 1
    }

    /// Weight of the hat of coarse node `i` at fine node `g`.
    pub fn coarse_hat_at(&self, i: usize, g: usize) -> f64 {
        let t = g as f64 / self.r as f64 - i as f64;
        (1.0 - t.abs()).max(0.0)
    }

    /// Values at interior fine nodes of the function with coarse nodal values `nodal`.
    pub fn interpolate(&self, nodal: &[f64]) -> Vec<f64> {
        (1..=self.interior_fine_nodes())
            .map(|g| {
                let k = g / self.r;
                let l = g % self.r;
                let t = l as f64 / self.r as f64;
                let right = if l == 0 { 0.0 } else { nodal[k + 1] };
                (1.0 - t) * nodal[k] + t * right
            })
            .collect()
    }
}

pub fn build_poisson_1d(p: &Poisson1dParams) -> Result<MethodSpec> {
    p.validate()?;
    let mesh = NestedMesh {
        cells: p.coarse_cells,
        r: p.fine_refinement,
    };
    match p.discrete_space {
        DiscreteSpace::ConformingP1 => build_conforming(mesh),
        DiscreteSpace::BrokenP1 => build_broken(mesh, p),
    }
}

/// Fine stiffness matrix on interior nodes with zero boundary values.
pub fn fine_stiffness(mesh: NestedMesh) -> DenseMatrix {
    let m = mesh.interior_fine_nodes();
    let inv_h = 1.0 / mesh.fine_width();
    DenseMatrix::from_fn(m, m, |i, j| {
        if i == j {
            2.0 * inv_h
        } else if i.abs_diff(j) == 1 {
            -inv_h
        } else {
            0.0
        }
    })
}

fn build_conforming(mesh: NestedMesh) -> Result<MethodSpec> {
    let m = mesh.interior_fine_nodes();
    let space = GramSpace::new(&fine_stiffness(mesh), "fine P1")?;
    let hats: Vec<Vec<f64>> = (1..mesh.cells)
        .map(|i| (1..=m).map(|g| mesh.coarse_hat_at(i, g)).collect())
        .collect();
    let s = DenseMatrix::from_columns(m, &hats);
    let setup = Arc::new(HilbertSetup::new(
        space,
        DenseMatrix::identity(m),
        s.clone(),
        s.clone(),
    )?);
    // V coordinates are ambient coordinates here, so every smoother is the embedding.
    MethodSpec::with_restricted_form(setup, s)
}

/// Ambient index of local node `l` (0..=r) of coarse cell `k` in the broken space.
fn broken_index(mesh: NestedMesh, k: usize, l: usize) -> usize {
    k * (mesh.r + 1) + l
}

/// Jump functionals at the coarse nodes over ambient broken coordinates:
/// `[v](xᵢ) = v(xᵢ⁻) − v(xᵢ⁺)` with zero outside `(0, 1)`.
fn ambient_jumps(mesh: NestedMesh) -> Vec<Vec<f64>> {
    let dim = mesh.cells * (mesh.r + 1);
    (0..=mesh.cells)
        .map(|i| {
            let mut j = vec![0.0; dim];
            if i >= 1 {
                j[broken_index(mesh, i - 1, mesh.r)] += 1.0;
            }
            if i < mesh.cells {
                j[broken_index(mesh, i, 0)] -= 1.0;
            }
            j
        })
        .collect()
}

/// `â` on the broken fine space.
pub fn broken_gram(mesh: NestedMesh, eta: f64) -> DenseMatrix {
    let dim = mesh.cells * (mesh.r + 1);
    let inv_h = 1.0 / mesh.fine_width();
    let mut g = DenseMatrix::zeros(dim, dim);
    for k in 0..mesh.cells {
        for l in 0..mesh.r {
            let a = broken_index(mesh, k, l);
            let b = a + 1;
            g[(a, a)] += inv_h;
            g[(b, b)] += inv_h;
            g[(a, b)] -= inv_h;
            g[(b, a)] -= inv_h;
        }
    }
    let weight = eta / mesh.coarse_width();
    for j in ambient_jumps(mesh) {
        for (a, ja) in j.iter().enumerate().filter(|(_, x)| **x != 0.0) {
            for (b, jb) in j.iter().enumerate().filter(|(_, x)| **x != 0.0) {
                g[(a, b)] += weight * ja * jb;
            }
        }
    }
    g
}

/// Interior penalty form on the coarse broken space. `S` coefficient `2k` is the value at
/// the left end of cell `k`, `2k + 1` the value at its right end.
///
/// `b(s, σ) = Σ ∫ s′σ′ − Σ_nodes ({s′}[σ] + {σ′}[s]) + η/H Σ_nodes [s][σ]`, with one-sided
/// derivatives at the boundary.
pub fn sip_form(cells: usize, eta: f64) -> DenseMatrix {
    let k = 2 * cells;
    let big_h = 1.0 / cells as f64;
    let mut b = DenseMatrix::zeros(k, k);
    let derivative = |c: usize| {
        let mut d = vec![0.0; k];
        d[2 * c] = -1.0 / big_h;
        d[2 * c + 1] = 1.0 / big_h;
        d
    };
    for c in 0..cells {
        let d = derivative(c);
        for i in 0..k {
            for j in 0..k {
                b[(i, j)] += big_h * d[i] * d[j];
            }
        }
    }
    for node in 0..=cells {
        let mut jump = vec![0.0; k];
        let mut avg = vec![0.0; k];
        if node >= 1 {
            jump[2 * (node - 1) + 1] += 1.0;
        }
        if node < cells {
            jump[2 * node] -= 1.0;
        }
        let sides: Vec<usize> = [node.checked_sub(1), (node < cells).then_some(node)]
            .into_iter()
            .flatten()
            .collect();
        for &c in &sides {
            for (a, d) in avg.iter_mut().zip(derivative(c)) {
                *a += d / sides.len() as f64;
            }
        }
        for i in 0..k {
            for j in 0..k {
                b[(i, j)] += -(avg[i] * jump[j] + jump[i] * avg[j]) + eta / big_h * jump[i] * jump[j];
            }
        }
    }
    b
}

/// Averaging smoother in `V` coefficients (interior fine nodal values).
pub fn averaging_smoother(mesh: NestedMesh) -> DenseMatrix {
    let k = 2 * mesh.cells;
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let cell = j / 2;
            // The left basis function of a cell touches the node at its left end, the right
            // one the node at its right end; each contributes half of the nodal average.
            let node = if j % 2 == 0 { cell } else { cell + 1 };
            let mut nodal = vec![0.0; mesh.cells + 1];
            if node > 0 && node < mesh.cells {
                nodal[node] = 0.5;
            }
            mesh.interpolate(&nodal)
        })
        .collect();
    DenseMatrix::from_columns(mesh.interior_fine_nodes(), &cols)
}

/// `V`, `S` and `S ∩ V` bases in ambient broken coordinates.
pub fn broken_setup(mesh: NestedMesh, eta: f64) -> Result<HilbertSetup> {
    let dim = mesh.cells * (mesh.r + 1);
    let space = GramSpace::new(&broken_gram(mesh, eta), "broken fine P1")?;
    let v_cols: Vec<Vec<f64>> = (1..=mesh.interior_fine_nodes())
        .map(|g| {
            let mut c = vec![0.0; dim];
            let (k, l) = (g / mesh.r, g % mesh.r);
            if l == 0 {
                c[broken_index(mesh, k - 1, mesh.r)] = 1.0;
                c[broken_index(mesh, k, 0)] = 1.0;
            } else {
                c[broken_index(mesh, k, l)] = 1.0;
            }
            c
        })
        .collect();
    let side = |k: usize, right: bool| {
        let mut c = vec![0.0; dim];
        for l in 0..=mesh.r {
            let t = l as f64 / mesh.r as f64;
            c[broken_index(mesh, k, l)] = if right { t } else { 1.0 - t };
        }
        c
    };
    let s_cols: Vec<Vec<f64>> = (0..2 * mesh.cells).map(|j| side(j / 2, j % 2 == 1)).collect();
    let hats: Vec<Vec<f64>> = (1..mesh.cells)
        .map(|i| {
            side(i - 1, true)
                .iter()
                .zip(side(i, false))
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    HilbertSetup::new(
        space,
        DenseMatrix::from_columns(dim, &v_cols),
        DenseMatrix::from_columns(dim, &s_cols),
        DenseMatrix::from_columns(dim, &hats),
    )
}

fn build_broken(mesh: NestedMesh, p: &Poisson1dParams) -> Result<MethodSpec> {
    let setup = Arc::new(broken_setup(mesh, p.penalty_weight)?);
    let b = match p.effective_form() {
        DiscreteForm::Sip => sip_form(mesh.cells, p.penalty_weight),
        DiscreteForm::Restricted => setup.gram_s(),
    };
    let smoother = match p.smoother {
        PoissonSmoother::Averaging => averaging_smoother(mesh),
        PoissonSmoother::Ritz => ritz_smoother(&setup)?,
        PoissonSmoother::Identity => unreachable!("rejected by validation"),
    };
    MethodSpec::new(setup, b, smoother)
}
