//! Estimators behind a common interface, looked up by name at runtime.
//!
//! Cross-validation, grid construction and the CLI only see [`Method`] and
//! [`FittedModel`], so adding an estimator means registering one constructor.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::baseline::{fit_unstructured, LrConfig, LrFitResult, LrReport, UnstructuredParams};
use crate::data::{DesignTriple, StandardizationStats};
use crate::error::{Error, Result};
use crate::model::{fit_with_start, selected_edges, Edge, FitConfig, FitReport, FitResult, SblrParams};

/// Settings shared by every penalized fit; the penalty itself comes per request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSettings {
    pub k: usize,
    pub tolerance: f64,
    pub max_cycles: usize,
    pub restarts: usize,
    pub safeguard: bool,
}

impl Default for MethodSettings {
    fn default() -> Self {
        let base = FitConfig::default();
        MethodSettings {
            k: base.k,
            tolerance: base.tolerance,
            max_cycles: base.max_cycles,
            restarts: base.restarts,
            safeguard: base.safeguard,
        }
    }
}

/// One penalized fit.
#[derive(Clone, Copy)]
pub struct FitRequest<'a> {
    pub designs: &'a [DesignTriple],
    pub labels: &'a [f64],
    pub delta: f64,
    pub eta: f64,
    pub seed: u64,
    /// Overrides the configured number of random initializations.
    pub restarts: Option<usize>,
    /// Previous solution to start from; ignored if it belongs to another method.
    pub warm: Option<&'a dyn FittedModel>,
}

impl<'a> FitRequest<'a> {
    pub fn new(designs: &'a [DesignTriple], labels: &'a [f64], delta: f64, eta: f64, seed: u64) -> Self {
        FitRequest { designs, labels, delta, eta, seed, restarts: None, warm: None }
    }
}

pub trait FittedModel: Debug + Send + Sync {
    fn method(&self) -> &str;
    fn logits(&self, designs: &[DesignTriple]) -> Result<Vec<f64>>;
    /// True when no edge carries any effect.
    fn is_null(&self) -> bool;
    fn nonzero_count(&self) -> usize;
    fn selected_edges(&self) -> BTreeSet<Edge>;
    fn final_loss(&self) -> f64;
    fn converged(&self) -> bool;
    fn report(&self, stats: Option<&StandardizationStats>) -> Result<serde_json::Value>;
    fn as_any(&self) -> &dyn Any;
}

pub trait Method: Send + Sync {
    fn name(&self) -> &str;
    fn fit(&self, request: &FitRequest<'_>) -> Result<Box<dyn FittedModel>>;
}

#[derive(Debug, Clone)]
pub struct SblrModel {
    pub result: FitResult,
    pub config: FitConfig,
}

impl FittedModel for SblrModel {
    fn method(&self) -> &str {
        "sblr"
    }

    fn logits(&self, designs: &[DesignTriple]) -> Result<Vec<f64>> {
        self.result.params.logits(designs)
    }

    fn is_null(&self) -> bool {
        self.result.params.all_empty()
    }

    fn nonzero_count(&self) -> usize {
        self.result.params.nonzero_count()
    }

    fn selected_edges(&self) -> BTreeSet<Edge> {
        selected_edges(&self.result.params)
    }

    fn final_loss(&self) -> f64 {
        self.result.final_loss
    }

    fn converged(&self) -> bool {
        self.result.converged
    }

    fn report(&self, stats: Option<&StandardizationStats>) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(FitReport::new(&self.result, &self.config, stats))?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone)]
pub struct SblrMethod {
    pub settings: MethodSettings,
}

impl Method for SblrMethod {
    fn name(&self) -> &str {
        "sblr"
    }

    fn fit(&self, request: &FitRequest<'_>) -> Result<Box<dyn FittedModel>> {
        let s = &self.settings;
        let config = FitConfig {
            k: s.k,
            delta: request.delta,
            eta: request.eta,
            tolerance: s.tolerance,
            max_cycles: s.max_cycles,
            restarts: request.restarts.unwrap_or(s.restarts),
            seed: request.seed,
            safeguard: s.safeguard,
        };
        let warm: Option<&SblrParams> = request
            .warm
            .and_then(|m| m.as_any().downcast_ref::<SblrModel>())
            .map(|m| &m.result.params);
        let result = fit_with_start(request.designs, request.labels, &config, warm)?;
        Ok(Box::new(SblrModel { result, config }))
    }
}

#[derive(Debug, Clone)]
pub struct LrModel {
    pub result: LrFitResult,
    pub delta: f64,
    pub eta: f64,
    pub config: LrConfig,
}

impl FittedModel for LrModel {
    fn method(&self) -> &str {
        "lr"
    }

    fn logits(&self, designs: &[DesignTriple]) -> Result<Vec<f64>> {
        let p = &self.result.params;
        designs
            .iter()
            .map(|d| {
                if d.nodes() != p.nodes {
                    return Err(Error::DimensionMismatch { expected: p.nodes, found: d.nodes() });
                }
                Ok(p.logit(d))
            })
            .collect()
    }

    fn is_null(&self) -> bool {
        self.result.params.nonzero_count() == 0
    }

    fn nonzero_count(&self) -> usize {
        self.result.params.nonzero_count()
    }

    fn selected_edges(&self) -> BTreeSet<Edge> {
        self.result.params.selected_edges()
    }

    fn final_loss(&self) -> f64 {
        self.result.final_loss
    }

    fn converged(&self) -> bool {
        self.result.converged
    }

    fn report(&self, _stats: Option<&StandardizationStats>) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(LrReport::new(&self.result, self.delta, self.eta, &self.config))?)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone)]
pub struct LrMethod {
    pub config: LrConfig,
}

impl Method for LrMethod {
    fn name(&self) -> &str {
        "lr"
    }

    fn fit(&self, request: &FitRequest<'_>) -> Result<Box<dyn FittedModel>> {
        let warm: Option<&UnstructuredParams> = request
            .warm
            .and_then(|m| m.as_any().downcast_ref::<LrModel>())
            .map(|m| &m.result.params);
        let result = fit_unstructured(request.designs, request.labels, request.delta, request.eta, &self.config, warm)?;
        Ok(Box::new(LrModel {
            result,
            delta: request.delta,
            eta: request.eta,
            config: self.config.clone(),
        }))
    }
}

type Constructor = Box<dyn Fn(&MethodSettings) -> Box<dyn Method> + Send + Sync>;

/// Name-keyed method constructors.
pub struct MethodRegistry {
    constructors: BTreeMap<String, Constructor>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry { constructors: BTreeMap::new() }
    }

    /// Registry holding `"sblr"` and `"lr"`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("sblr", |s| Box::new(SblrMethod { settings: s.clone() }));
        r.register("lr", |s| {
            Box::new(LrMethod {
                config: LrConfig {
                    tolerance: s.tolerance,
                    max_cycles: s.max_cycles,
                    safeguard: s.safeguard,
                },
            })
        });
        r
    }

    pub fn register<F>(&mut self, name: &str, constructor: F)
    where
        F: Fn(&MethodSettings) -> Box<dyn Method> + Send + Sync + 'static,
    {
        self.constructors.insert(name.to_string(), Box::new(constructor));
    }

    pub fn names(&self) -> Vec<String> {
        self.constructors.keys().cloned().collect()
    }

    pub fn build(&self, name: &str, settings: &MethodSettings) -> Result<Box<dyn Method>> {
        self.constructors
            .get(name)
            .map(|c| c(settings))
            .ok_or_else(|| Error::UnknownMethod {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::solver::tests::random_problem;

    #[test]
    fn builtin_names_and_unknown() {
        let reg = MethodRegistry::builtin();
        assert_eq!(reg.names(), vec!["lr".to_string(), "sblr".to_string()]);
        assert!(matches!(
            reg.build("nstr", &MethodSettings::default()),
            Err(Error::UnknownMethod { .. })
        ));
    }

    #[test]
    fn methods_fit_through_the_trait() {
        let (designs, labels) = random_problem(30, 6, 4);
        let settings = MethodSettings { k: 2, restarts: 2, ..Default::default() };
        let reg = MethodRegistry::builtin();
        for name in ["sblr", "lr"] {
            let m = reg.build(name, &settings).unwrap();
            let fitted = m.fit(&FitRequest::new(&designs, &labels, 0.01, 0.5, 1)).unwrap();
            assert_eq!(fitted.method(), name);
            assert_eq!(fitted.logits(&designs).unwrap().len(), 30);
            let report = fitted.report(None).unwrap();
            assert_eq!(report["method"], name);
            let huge = m.fit(&FitRequest::new(&designs, &labels, 1e4, 0.5, 1)).unwrap();
            assert!(huge.is_null());
        }
    }

    #[test]
    fn foreign_warm_start_is_ignored() {
        let (designs, labels) = random_problem(30, 6, 5);
        let settings = MethodSettings { k: 2, restarts: 1, ..Default::default() };
        let lr = LrMethod { config: LrConfig::default() };
        let sblr = SblrMethod { settings };
        let prev = lr.fit(&FitRequest::new(&designs, &labels, 0.01, 0.5, 1)).unwrap();
        let cold = sblr.fit(&FitRequest::new(&designs, &labels, 0.01, 0.5, 1)).unwrap();
        let warm = sblr
            .fit(&FitRequest { warm: Some(prev.as_ref()), ..FitRequest::new(&designs, &labels, 0.01, 0.5, 1) })
            .unwrap();
        assert_eq!(cold.final_loss(), warm.final_loss());
    }
}
