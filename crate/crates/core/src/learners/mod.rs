//! Supervised learners behind one contract.
//!
//! Batch kinds (dummy-majority, decision tree, random forest) refit from
//! scratch on every [`fit_update`]. Iterative kinds (logistic regression,
//! MLP) continue mini-batch gradient descent from the weights in the prior
//! state and expose a flat parameter vector for averaging.

pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod sgd;
pub mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{LabelVector, LabeledDataset};
use crate::rng::rng_from;
use crate::{Error, Result};

use forest::RandomForest;
use tree::{DecisionTree, TreeParams};

fn default_min_split() -> usize {
    2
}

fn default_true() -> bool {
    true
}

/// Model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    DummyMajority,
    DecisionTree {
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_min_split")]
        min_samples_split: usize,
    },
    RandomForest {
        n_trees: usize,
        /// Features tried per split; defaults to `ceil(sqrt(d))`.
        #[serde(default)]
        max_features: Option<usize>,
        #[serde(default = "default_true")]
        bootstrap: bool,
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_min_split")]
        min_samples_split: usize,
    },
    LogisticRegression {
        learning_rate: f64,
        local_epochs: usize,
        #[serde(default)]
        l2: f64,
    },
    Mlp {
        hidden_width: usize,
        learning_rate: f64,
        local_epochs: usize,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::DummyMajority => "dummy-majority",
            ModelSpec::DecisionTree { .. } => "decision-tree",
            ModelSpec::RandomForest { .. } => "random-forest",
            ModelSpec::LogisticRegression { .. } => "logistic-regression",
            ModelSpec::Mlp { .. } => "mlp",
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, ModelSpec::LogisticRegression { .. } | ModelSpec::Mlp { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(key, msg));
        match *self {
            ModelSpec::DummyMajority => Ok(()),
            ModelSpec::DecisionTree { min_samples_split, .. } if min_samples_split < 2 => {
                bad("min_samples_split", "must be at least 2")
            }
            ModelSpec::DecisionTree { .. } => Ok(()),
            ModelSpec::RandomForest { min_samples_split, .. } if min_samples_split < 2 => {
                bad("min_samples_split", "must be at least 2")
            }
            ModelSpec::RandomForest { n_trees: 0, .. } => bad("n_trees", "must be at least 1"),
            ModelSpec::RandomForest { max_features: Some(0), .. } => bad("max_features", "must be at least 1"),
            ModelSpec::RandomForest { .. } => Ok(()),
            ModelSpec::LogisticRegression { learning_rate, local_epochs, l2 } => {
                if !(learning_rate > 0.0) {
                    bad("learning_rate", "must be positive")
                } else if local_epochs == 0 {
                    bad("local_epochs", "must be at least 1")
                } else if !(l2 >= 0.0) {
                    bad("l2", "must be nonnegative")
                } else {
                    Ok(())
                }
            }
            ModelSpec::Mlp { hidden_width, learning_rate, local_epochs } => {
                if hidden_width == 0 {
                    bad("hidden_width", "must be at least 1")
                } else if !(learning_rate > 0.0) {
                    bad("learning_rate", "must be positive")
                } else if local_epochs == 0 {
                    bad("local_epochs", "must be at least 1")
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub model: ModelSpec,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(model: ModelSpec, seed: u64) -> Self {
        Self { model, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Dummy(Vec<usize>),
    Tree(DecisionTree),
    Forest(RandomForest),
    Logistic(Vec<f64>),
    Mlp(Vec<f64>),
}

/// A trained (or freshly initialised) model for one client.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    spec: ModelSpec,
    dim: usize,
    num_classes: usize,
    model: Option<Model>,
    trained: bool,
    epochs_done: u64,
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_counts(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_row(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, v) in row.into_iter().enumerate() {
        if v > best_v {
            best = k;
            best_v = v;
        }
    }
    best
}

fn mlp_shape(spec: &ModelSpec, dim: usize, classes: usize) -> Option<mlp::Shape> {
    match *spec {
        ModelSpec::Mlp { hidden_width, .. } => Some(mlp::Shape { dim, hidden: hidden_width, classes }),
        _ => None,
    }
}

impl LearnerState {
    /// Untrained state. Logistic regression starts from zero weights, the
    /// MLP from a seeded Glorot-uniform draw.
    pub fn fresh(cfg: &LearnerConfig, dim: usize, num_classes: usize) -> Self {
        let model = match &cfg.model {
            ModelSpec::LogisticRegression { .. } => {
                Some(Model::Logistic(vec![0.0; logistic::parameter_count(dim, num_classes)]))
            }
            spec @ ModelSpec::Mlp { .. } => {
                let shape = mlp_shape(spec, dim, num_classes).expect("mlp");
                Some(Model::Mlp(mlp::initial_parameters(shape, cfg.seed)))
            }
            _ => None,
        };
        Self { spec: cfg.model.clone(), dim, num_classes, model, trained: false, epochs_done: 0 }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        self.spec.name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Total local epochs run so far by an iterative learner.
    pub fn epochs_done(&self) -> u64 {
        self.epochs_done
    }

    pub fn tree(&self) -> Option<&DecisionTree> {
        match &self.model {
            Some(Model::Tree(t)) => Some(t),
            _ => None,
        }
    }

    pub fn forest(&self) -> Option<&RandomForest> {
        match &self.model {
            Some(Model::Forest(f)) => Some(f),
            _ => None,
        }
    }

    fn check_features(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.ncols() });
        }
        Ok(())
    }

    /// Class scores per row: leaf frequencies for trees, vote fractions for
    /// forests, softmax probabilities for gradient models, the training
    /// histogram for the dummy. Rows sum to one.
    pub fn predict_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_features(x)?;
        let n = x.nrows();
        let c = self.num_classes;
        let scores = match self.model.as_ref().expect("trained state has a model") {
            Model::Dummy(hist) => {
                let total: usize = hist.iter().sum();
                let row: Vec<f64> = hist.iter().map(|&h| h as f64 / total as f64).collect();
                Array2::from_shape_fn((n, c), |(_, k)| row[k])
            }
            Model::Tree(t) => {
                let mut s = Array2::zeros((n, c));
                for (r, row) in x.outer_iter().enumerate() {
                    let counts = t.leaf_counts(row);
                    let total: usize = counts.iter().sum();
                    for k in 0..c {
                        s[[r, k]] = counts[k] as f64 / total as f64;
                    }
                }
                s
            }
            Model::Forest(f) => f.votes(x) / f.trees().len() as f64,
            Model::Logistic(p) => logistic::probabilities(p, self.dim, c, x),
            Model::Mlp(p) => mlp::probabilities(p, mlp_shape(&self.spec, self.dim, c).expect("mlp"), x),
        };
        Ok(scores)
    }

    /// Hard labels: row-argmax of [`predict_scores`](Self::predict_scores)
    /// with lowest-index tie-break. Never ABSTAIN.
    pub fn predict_hard(&self, x: ArrayView2<'_, f64>) -> Result<LabelVector> {
        Ok(LabelVector::from(self.predict_labels(x)?))
    }

    pub fn predict_labels(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let scores = self.predict_scores(x)?;
        Ok(scores.outer_iter().map(|row| argmax_row(row.iter().copied())).collect())
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let pred = self.predict_labels(data.features().view())?;
        let hits = pred.iter().zip(data.labels()).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / data.len() as f64)
    }

    /// Flat parameter vector of a parametric learner.
    pub fn parameters(&self) -> Result<Vec<f64>> {
        match &self.model {
            Some(Model::Logistic(p)) | Some(Model::Mlp(p)) => Ok(p.clone()),
            _ => Err(Error::NotParameterAggregable(self.kind())),
        }
    }

    /// Copy of this state with its parameters replaced. Training progress
    /// (the epoch counter) is kept.
    pub fn with_parameters(&self, params: Vec<f64>) -> Result<Self> {
        let expected = match &self.model {
            Some(Model::Logistic(p)) | Some(Model::Mlp(p)) => p.len(),
            _ => return Err(Error::NotParameterAggregable(self.kind())),
        };
        if params.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: params.len() });
        }
        let model = match self.model {
            Some(Model::Logistic(_)) => Model::Logistic(params),
            _ => Model::Mlp(params),
        };
        Ok(Self { model: Some(model), ..self.clone() })
    }
}

/// Trains `state` on `data` according to `cfg` and returns the new state.
pub fn fit_update(cfg: &LearnerConfig, state: &LearnerState, data: &LabeledDataset) -> Result<LearnerState> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != state.dim {
        return Err(Error::DimensionMismatch { expected: state.dim, actual: data.dim() });
    }
    if data.num_classes() != state.num_classes {
        return Err(Error::invalid("class count differs from learner state"));
    }
    if std::mem::discriminant(&cfg.model) != std::mem::discriminant(&state.spec) {
        return Err(Error::invalid(format!("config kind {} does not match state kind {}", cfg.model.name(), state.kind())));
    }
    cfg.model.validate()?;

    let x = data.features().view();
    let y = data.labels();
    let c = state.num_classes;
    let all_rows: Vec<usize> = (0..data.len()).collect();
    let mut next = state.clone();
    let model = match cfg.model {
        ModelSpec::DummyMajority => Model::Dummy(data.class_histogram()),
        ModelSpec::DecisionTree { max_depth, min_samples_split } => {
            let params = TreeParams { max_depth, min_samples_split, max_features: None };
            Model::Tree(DecisionTree::fit(x, y, &all_rows, c, &params, &mut rng_from(cfg.seed)))
        }
        ModelSpec::RandomForest { n_trees, max_features, bootstrap, max_depth, min_samples_split } => {
            let d = data.dim();
            let k = max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d);
            let params = TreeParams { max_depth, min_samples_split, max_features: Some(k) };
            Model::Forest(RandomForest::fit(x, y, c, n_trees, bootstrap, &params, cfg.seed))
        }
        ModelSpec::LogisticRegression { learning_rate, local_epochs, l2 } => {
            let mut p = state.parameters()?;
            let dim = state.dim;
            sgd::minibatch_descent(&mut p, x, y, learning_rate, state.epochs_done, local_epochs, cfg.seed, |w, xb, yb| {
                logistic::loss_and_gradient(w, dim, c, l2, xb, yb)
            });
            next.epochs_done += local_epochs as u64;
            Model::Logistic(p)
        }
        ModelSpec::Mlp { learning_rate, local_epochs, .. } => {
            let mut p = state.parameters()?;
            let shape = mlp_shape(&cfg.model, state.dim, c).expect("mlp");
            if shape.parameter_count() != p.len() {
                return Err(Error::LengthMismatch { expected: shape.parameter_count(), actual: p.len() });
            }
            sgd::minibatch_descent(&mut p, x, y, learning_rate, state.epochs_done, local_epochs, cfg.seed, |w, xb, yb| {
                mlp::loss_and_gradient(w, shape, xb, yb)
            });
            next.epochs_done += local_epochs as u64;
            Model::Mlp(p)
        }
    };
    next.spec = cfg.model.clone();
    next.model = Some(model);
    next.trained = true;
    Ok(next)
}

/// Fresh state trained once on `data`.
pub fn fit_fresh(cfg: &LearnerConfig, data: &LabeledDataset) -> Result<LearnerState> {
    fit_update(cfg, &LearnerState::fresh(cfg, data.dim(), data.num_classes()), data)
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;
    use crate::data::make_blobs;

    fn tree_spec() -> ModelSpec {
        ModelSpec::DecisionTree { max_depth: None, min_samples_split: 2 }
    }

    fn logistic_spec() -> ModelSpec {
        ModelSpec::LogisticRegression { learning_rate: 0.5, local_epochs: 50, l2: 0.0 }
    }

    fn mlp_spec() -> ModelSpec {
        ModelSpec::Mlp { hidden_width: 8, learning_rate: 0.1, local_epochs: 20 }
    }

    fn all_specs() -> Vec<ModelSpec> {
        vec![
            ModelSpec::DummyMajority,
            tree_spec(),
            ModelSpec::RandomForest { n_trees: 5, max_features: None, bootstrap: true, max_depth: None, min_samples_split: 2 },
            logistic_spec(),
            mlp_spec(),
        ]
    }

    fn ds(x: Array2<f64>, y: Vec<usize>, c: usize) -> LabeledDataset {
        LabeledDataset::new(x, y, c).unwrap()
    }

    #[test]
    fn dummy_predicts_majority() {
        let cfg = LearnerConfig::new(ModelSpec::DummyMajority, 0);
        let s = fit_fresh(&cfg, &ds(array![[0.0], [1.0], [2.0]], vec![1, 1, 0], 2)).unwrap();
        assert_eq!(s.predict_labels(array![[5.0], [-3.0]].view()).unwrap(), vec![1, 1]);

        let s = fit_fresh(&cfg, &ds(array![[0.0], [1.0], [2.0]], vec![2, 2, 0], 3)).unwrap();
        assert_eq!(s.predict_labels(array![[0.0], [9.0]].view()).unwrap(), vec![2, 2]);

        let s = fit_fresh(&cfg, &ds(array![[0.0], [1.0], [2.0]], vec![0, 0, 1], 2)).unwrap();
        let scores = s.predict_scores(array![[0.0], [1.0]].view()).unwrap();
        for row in scores.outer_iter() {
            assert!((row[0] - 2.0 / 3.0).abs() < 1e-15 && (row[1] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tree_interpolates_separable_blobs() {
        let data = make_blobs(200, 2, 2, 8.0, 5).unwrap();
        let s = fit_fresh(&LearnerConfig::new(tree_spec(), 0), &data).unwrap();
        assert_eq!(s.accuracy(&data).unwrap(), 1.0);
        assert_eq!(s.predict_labels(data.features().view()).unwrap(), data.labels());
    }

    /// Best accuracy any linear separator `sign(w·x + b)` reaches on the XOR
    /// points, by enumerating directions and offsets.
    fn best_linear_accuracy_on_xor() -> f64 {
        let pts = [([0.0, 0.0], 0), ([1.0, 1.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1)];
        let mut best = 0.0f64;
        for a in 0..360 {
            let t = (a as f64).to_radians();
            let w = [t.cos(), t.sin()];
            for bi in -300..=300 {
                let b = bi as f64 / 100.0;
                let hits = pts.iter().filter(|(p, y)| ((w[0] * p[0] + w[1] * p[1] + b > 0.0) as usize) == *y).count();
                best = best.max(hits as f64 / 4.0);
            }
        }
        best
    }

    #[test]
    fn logistic_cannot_fit_xor() {
        let oracle = best_linear_accuracy_on_xor();
        assert_eq!(oracle, 0.75);
        let data = ds(array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]], vec![0, 0, 1, 1], 2);
        let s = fit_fresh(&LearnerConfig::new(logistic_spec(), 1), &data).unwrap();
        assert!(s.accuracy(&data).unwrap() <= oracle);
    }

    #[test]
    fn untrained_and_shape_errors() {
        let cfg = LearnerConfig::new(tree_spec(), 0);
        let fresh = LearnerState::fresh(&cfg, 2, 2);
        assert!(matches!(fresh.predict_hard(array![[0.0, 0.0]].view()), Err(Error::Untrained)));
        let data = ds(array![[0.0], [1.0]], vec![0, 1], 2);
        assert!(matches!(fit_update(&cfg, &fresh, &data), Err(Error::DimensionMismatch { .. })));
        let trained = fit_fresh(&cfg, &data).unwrap();
        assert!(matches!(trained.predict_hard(array![[0.0, 1.0]].view()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_class_data_gives_constant_model() {
        let data = ds(array![[0.0], [1.0], [2.0]], vec![1, 1, 1], 3);
        for spec in all_specs() {
            let s = fit_fresh(&LearnerConfig::new(spec.clone(), 3), &data).unwrap();
            let pred = s.predict_labels(array![[0.5], [1.5]].view()).unwrap();
            assert_eq!(pred, vec![1, 1], "{}", spec.name());
        }
    }

    #[test]
    fn single_tree_forest_matches_tree() {
        let data = make_blobs(120, 3, 3, 1.5, 8).unwrap();
        let forest = ModelSpec::RandomForest { n_trees: 1, max_features: Some(3), bootstrap: false, max_depth: None, min_samples_split: 2 };
        let f = fit_fresh(&LearnerConfig::new(forest, 4), &data).unwrap();
        let t = fit_fresh(&LearnerConfig::new(tree_spec(), 4), &data).unwrap();
        let probe = make_blobs(300, 3, 3, 1.5, 9).unwrap();
        assert_eq!(
            f.predict_labels(probe.features().view()).unwrap(),
            t.predict_labels(probe.features().view()).unwrap()
        );
        assert_eq!(&f.forest().unwrap().trees()[0], t.tree().unwrap());
    }

    #[test]
    fn scores_are_distributions_and_agree_with_hard_labels() {
        let data = make_blobs(90, 2, 3, 1.0, 2).unwrap();
        let probe = make_blobs(60, 2, 3, 1.0, 3).unwrap();
        for spec in all_specs() {
            let s = fit_fresh(&LearnerConfig::new(spec.clone(), 7), &data).unwrap();
            let scores = s.predict_scores(probe.features().view()).unwrap();
            let hard = s.predict_labels(probe.features().view()).unwrap();
            for (row, &h) in scores.outer_iter().zip(&hard) {
                assert!((row.sum() - 1.0).abs() < 1e-6, "{}", spec.name());
                assert!(row.iter().all(|&v| v >= 0.0));
                assert_eq!(argmax_row(row.iter().copied()), h);
            }
        }
    }

    #[test]
    fn parameter_round_trip_and_errors() {
        let data = make_blobs(40, 2, 2, 3.0, 1).unwrap();
        let s = fit_fresh(&LearnerConfig::new(mlp_spec(), 1), &data).unwrap();
        let p = s.parameters().unwrap();
        assert_eq!(p.len(), mlp::Shape { dim: 2, hidden: 8, classes: 2 }.parameter_count());
        assert_eq!(s.with_parameters(p.clone()).unwrap(), s);
        assert!(s.with_parameters(vec![0.0; 3]).is_err());

        let lr = fit_fresh(&LearnerConfig::new(logistic_spec(), 1), &data).unwrap();
        assert_eq!(lr.parameters().unwrap().len(), logistic::parameter_count(2, 2));

        let t = fit_fresh(&LearnerConfig::new(tree_spec(), 1), &data).unwrap();
        assert!(matches!(t.parameters(), Err(Error::NotParameterAggregable("decision-tree"))));
        assert!(t.with_parameters(vec![]).is_err());
    }

    #[test]
    fn averaging_identical_states_is_a_fixed_point() {
        let data = make_blobs(40, 2, 2, 3.0, 1).unwrap();
        let s = fit_fresh(&LearnerConfig::new(logistic_spec(), 1), &data).unwrap();
        let p = s.parameters().unwrap();
        let avg: Vec<f64> = p.iter().zip(&p).map(|(a, b)| (a + b) / 2.0).collect();
        let probe = data.features().view();
        assert_eq!(s.with_parameters(avg).unwrap().predict_labels(probe).unwrap(), s.predict_labels(probe).unwrap());
    }

    #[test]
    fn iterative_training_resumes_from_prior_weights() {
        let data = make_blobs(64, 2, 2, 2.0, 1).unwrap();
        let cfg = LearnerConfig::new(ModelSpec::LogisticRegression { learning_rate: 0.1, local_epochs: 2, l2: 0.0 }, 3);
        let once = fit_fresh(&cfg, &data).unwrap();
        let twice = fit_update(&cfg, &once, &data).unwrap();
        assert_eq!(twice.epochs_done(), 4);
        let cfg4 = LearnerConfig::new(ModelSpec::LogisticRegression { learning_rate: 0.1, local_epochs: 4, l2: 0.0 }, 3);
        let direct = fit_fresh(&cfg4, &data).unwrap();
        assert_eq!(twice.parameters().unwrap(), direct.parameters().unwrap());
    }

    #[test]
    fn validation_rejects_bad_hyperparameters() {
        assert!(ModelSpec::DecisionTree { max_depth: None, min_samples_split: 1 }.validate().is_err());
        assert!(ModelSpec::LogisticRegression { learning_rate: 0.0, local_epochs: 1, l2: 0.0 }.validate().is_err());
        assert!(ModelSpec::Mlp { hidden_width: 4, learning_rate: 0.1, local_epochs: 0 }.validate().is_err());
        let spec: ModelSpec = serde_json::from_str(r#"{"kind":"decision-tree","max_depth":3}"#).unwrap();
        assert_eq!(spec, ModelSpec::DecisionTree { max_depth: Some(3), min_samples_split: 2 });
    }

    fn relative_error(analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
    }

    fn check_gradient<F>(params: &[f64], f: F, tol: f64)
    where
        F: Fn(&[f64]) -> (f64, Vec<f64>),
    {
        let (_, grad) = f(params);
        let h = 1e-6;
        for i in 0..params.len() {
            let mut plus = params.to_vec();
            let mut minus = params.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let numeric = (f(&plus).0 - f(&minus).0) / (2.0 * h);
            if grad[i].abs() < 1e-7 && numeric.abs() < 1e-7 {
                continue;
            }
            let err = relative_error(grad[i], numeric);
            assert!(err < tol, "param {i}: analytic {} numeric {numeric} rel {err}", grad[i]);
        }
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let mut rng = rng_from(21);
        for _ in 0..5 {
            let (n, d, c) = (7, 3, 4);
            let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let params: Vec<f64> = (0..logistic::parameter_count(d, c)).map(|_| rng.random_range(-1.0..1.0)).collect();
            check_gradient(&params, |p| logistic::loss_and_gradient(p, d, c, 0.3, x.view(), &y), 1e-4);
        }
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut rng = rng_from(22);
        for _ in 0..5 {
            let shape = mlp::Shape { dim: 3, hidden: 5, classes: 3 };
            let n = 6;
            let x = Array2::from_shape_fn((n, shape.dim), |_| rng.random_range(-2.0..2.0));
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..shape.classes)).collect();
            let params: Vec<f64> = (0..shape.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            check_gradient(&params, |p| mlp::loss_and_gradient(p, shape, x.view(), &y), 1e-3);
        }
    }

    /// Rows reaching each node, by replaying the splits.
    fn node_rows(t: &DecisionTree, x: &Array2<f64>) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); t.nodes().len()];
        rows[0] = (0..x.nrows()).collect();
        for i in 0..t.nodes().len() {
            if let tree::Node::Split { feature, threshold, left, right, .. } = &t.nodes()[i] {
                let (l, r): (Vec<usize>, Vec<usize>) = rows[i].iter().partition(|&&j| x[[j, *feature]] <= *threshold);
                rows[*left] = l;
                rows[*right] = r;
            }
        }
        rows
    }

    /// Minimum weighted Gini over every axis-aligned split, by enumeration.
    fn exhaustive_min_impurity(x: &Array2<f64>, y: &[usize], rows: &[usize], c: usize) -> f64 {
        let mut best = f64::INFINITY;
        for f in 0..x.ncols() {
            let mut values: Vec<f64> = rows.iter().map(|&r| x[[r, f]]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let mut l = vec![0; c];
                let mut r = vec![0; c];
                for &i in rows {
                    if x[[i, f]] <= t {
                        l[y[i]] += 1;
                    } else {
                        r[y[i]] += 1;
                    }
                }
                let (nl, nr) = (l.iter().sum::<usize>() as f64, r.iter().sum::<usize>() as f64);
                let imp = (nl * tree::gini(&l) + nr * tree::gini(&r)) / (nl + nr);
                best = best.min(imp);
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn gini_splits_are_exhaustively_optimal(seed: u64, n in 2usize..50, d in 1usize..4, c in 2usize..4) {
            let mut rng = rng_from(seed);
            let x = Array2::from_shape_fn((n, d), |_| (rng.random_range(0..12) as f64) / 2.0);
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let data = ds(x.clone(), y.clone(), c);
            let s = fit_fresh(&LearnerConfig::new(tree_spec(), 0), &data).unwrap();
            let t = s.tree().unwrap();
            let rows = node_rows(t, &x);
            for (i, node) in t.nodes().iter().enumerate() {
                let parent = tree::gini(node.counts());
                let oracle = exhaustive_min_impurity(&x, &y, &rows[i], c);
                match node {
                    tree::Node::Split { feature, threshold, .. } => {
                        let (l, r): (Vec<usize>, Vec<usize>) = rows[i].iter().partition(|&&j| x[[j, *feature]] <= *threshold);
                        let lc: Vec<usize> = (0..c).map(|k| l.iter().filter(|&&j| y[j] == k).count()).collect();
                        let rc: Vec<usize> = (0..c).map(|k| r.iter().filter(|&&j| y[j] == k).count()).collect();
                        let nn = rows[i].len() as f64;
                        let chosen = (l.len() as f64 * tree::gini(&lc) + r.len() as f64 * tree::gini(&rc)) / nn;
                        prop_assert!(chosen < parent);
                        prop_assert!((chosen - oracle).abs() < 1e-12, "chosen {} oracle {}", chosen, oracle);
                    }
                    tree::Node::Leaf { .. } => {
                        // A leaf with mixed labels means no split improves it.
                        prop_assert!(parent == 0.0 || oracle >= parent - 1e-12);
                    }
                }
            }
        }

        #[test]
        fn fitting_is_deterministic(seed: u64) {
            let data = make_blobs(60, 2, 3, 1.0, seed).unwrap();
            for spec in all_specs() {
                let cfg = LearnerConfig::new(spec, seed);
                prop_assert_eq!(fit_fresh(&cfg, &data).unwrap(), fit_fresh(&cfg, &data).unwrap());
            }
        }
    }
}
