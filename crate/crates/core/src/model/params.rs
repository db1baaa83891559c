use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DesignTriple;
use crate::error::{Error, Result};

/// Which coefficient of the quadratic age effect, and equivalently which of
/// the three design matrices it multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgeTerm {
    /// Constant term, paired with `x0`.
    Alpha,
    /// Linear term, paired with `x1`.
    Rho,
    /// Quadratic term, paired with `x2`.
    Gamma,
}

impl AgeTerm {
    pub const ALL: [AgeTerm; 3] = [AgeTerm::Alpha, AgeTerm::Rho, AgeTerm::Gamma];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub rho: f64,
    pub gamma: f64,
}

impl Component {
    pub fn zeros(nodes: usize) -> Self {
        Component {
            beta: vec![0.0; nodes],
            alpha: 0.0,
            rho: 0.0,
            gamma: 0.0,
        }
    }

    /// `[alpha, rho, gamma]`.
    pub fn coefs(&self) -> [f64; 3] {
        [self.alpha, self.rho, self.gamma]
    }

    pub fn coef(&self, term: AgeTerm) -> f64 {
        self.coefs()[term.index()]
    }

    pub fn coef_mut(&mut self, term: AgeTerm) -> &mut f64 {
        match term {
            AgeTerm::Alpha => &mut self.alpha,
            AgeTerm::Rho => &mut self.rho,
            AgeTerm::Gamma => &mut self.gamma,
        }
    }

    /// Nodes with a nonzero loading.
    pub fn support(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&u| self.beta[u] != 0.0).collect()
    }

    /// A component is empty when its lower-triangular coefficient entries all
    /// vanish: no age coefficient is nonzero or fewer than two nodes load.
    pub fn is_empty(&self) -> bool {
        self.coefs().iter().all(|&c| c == 0.0) || self.beta.iter().filter(|&&b| b != 0.0).count() < 2
    }

    /// `b' x b` for a symmetric zero-diagonal matrix given row by row.
    pub fn quadratic_form(&self, design: &DesignTriple, m: usize) -> f64 {
        let support = self.support();
        let mut total = 0.0;
        for &u in &support {
            let row = design.row(m, u);
            let mut acc = 0.0;
            for &v in &support {
                acc += row[v] * self.beta[v];
            }
            total += self.beta[u] * acc;
        }
        total
    }
}

/// Intercept plus `K` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SblrParams {
    pub intercept: f64,
    pub components: Vec<Component>,
}

impl SblrParams {
    pub fn zeros(k: usize, nodes: usize) -> Self {
        SblrParams {
            intercept: 0.0,
            components: (0..k).map(|_| Component::zeros(nodes)).collect(),
        }
    }

    /// Every parameter, intercept included, drawn from `U(-1/K, 1/K)`.
    pub fn random<R: Rng + ?Sized>(k: usize, nodes: usize, rng: &mut R) -> Self {
        let bound = 1.0 / k as f64;
        let mut draw = || rng.random_range(-bound..bound);
        let intercept = draw();
        let components = (0..k)
            .map(|_| {
                let beta = (0..nodes).map(|_| draw()).collect();
                Component {
                    beta,
                    alpha: draw(),
                    rho: draw(),
                    gamma: draw(),
                }
            })
            .collect();
        SblrParams {
            intercept,
            components,
        }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn nodes(&self) -> usize {
        self.components.first().map_or(0, |c| c.beta.len())
    }

    pub fn all_empty(&self) -> bool {
        self.components.iter().all(Component::is_empty)
    }

    pub fn nonempty_count(&self) -> usize {
        self.components.iter().filter(|c| !c.is_empty()).count()
    }

    /// Number of nonzero penalized parameters (loadings and age coefficients).
    pub fn nonzero_count(&self) -> usize {
        self.components
            .iter()
            .map(|c| {
                c.beta.iter().filter(|&&b| b != 0.0).count()
                    + c.coefs().iter().filter(|&&x| x != 0.0).count()
            })
            .sum()
    }

    /// Logit of one subject.
    pub fn logit(&self, design: &DesignTriple) -> Result<f64> {
        if design.nodes() != self.nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes(),
                found: design.nodes(),
            });
        }
        let mut eta = self.intercept;
        for c in &self.components {
            if c.coefs().iter().all(|&x| x == 0.0) {
                continue;
            }
            for term in AgeTerm::ALL {
                let coef = c.coef(term);
                if coef != 0.0 {
                    eta += coef * c.quadratic_form(design, term.index());
                }
            }
        }
        Ok(eta)
    }

    pub fn logits(&self, designs: &[DesignTriple]) -> Result<Vec<f64>> {
        designs.iter().map(|d| self.logit(d)).collect()
    }

    /// Node relabeling: node `a` becomes node `perm[a]` in every component.
    pub fn permuted(&self, perm: &[usize]) -> SblrParams {
        let mut out = self.clone();
        for (c, orig) in out.components.iter_mut().zip(&self.components) {
            for (a, &b) in orig.beta.iter().enumerate() {
                c.beta[perm[a]] = b;
            }
        }
        out
    }
}
