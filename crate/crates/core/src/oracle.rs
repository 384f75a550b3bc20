use std::fmt;
use std::sync::Arc;

use crate::point::Point;

type EvalFn = dyn Fn(&Point) -> f64 + Send + Sync;
type SubgradFn = dyn Fn(&Point) -> Point + Send + Sync;

/// First-order oracle for a convex, real-valued function on the feasible set.
///
/// `smoothness` is a declared Lipschitz constant of the gradient on the
/// feasible set. It is trusted, not verified.
#[derive(Clone)]
pub struct ConvexFn {
    label: String,
    eval: Arc<EvalFn>,
    subgradient: Arc<SubgradFn>,
    smoothness: Option<f64>,
}

impl ConvexFn {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        subgradient: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        ConvexFn {
            label: label.into(),
            eval: Arc::new(eval),
            subgradient: Arc::new(subgradient),
            smoothness: None,
        }
    }

    pub fn with_smoothness(mut self, lipschitz_grad: f64) -> Self {
        assert!(
            lipschitz_grad >= 0.0,
            "smoothness constant must be nonnegative"
        );
        self.smoothness = Some(lipschitz_grad);
        self
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    pub fn subgradient(&self, x: &Point) -> Point {
        (self.subgradient)(x)
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexFn")
            .field("label", &self.label)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}
