use std::fmt;
use std::sync::Arc;

use crate::Scalar;

type Component<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// A vector field along a framed geodesic, given by its components in the
/// parallel frame as functions of the geodesic parameter. Because the frame
/// is parallel, `derivative` is the covariant derivative.
#[derive(Clone)]
pub struct FrameField<T> {
    value: Component<T>,
    derivative: Component<T>,
    breakpoints: Vec<T>,
}

impl<T> fmt::Debug for FrameField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameField").finish_non_exhaustive()
    }
}

impl<T: Scalar> FrameField<T> {
    pub fn new(
        value: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
        derivative: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        FrameField {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            breakpoints: Vec::new(),
        }
    }

    /// Interior parameters where the field is only continuous.
    pub fn with_breakpoints(mut self, mut breaks: Vec<T>) -> Self {
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.breakpoints = breaks;
        self
    }

    /// A parallel field with constant components.
    pub fn parallel(components: Vec<T>) -> Self {
        let n = components.len();
        FrameField::new(move |_| components.clone(), move |_| vec![T::zero(); n])
    }

    /// `φ(t) E` for a fixed frame combination `E` and a scalar profile `φ`.
    pub fn profiled(
        components: Vec<T>,
        phi: impl Fn(T) -> T + Send + Sync + 'static,
        dphi: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        let c2 = components.clone();
        FrameField::new(
            move |t| components.iter().map(|&c| c * phi(t)).collect(),
            move |t| c2.iter().map(|&c| c * dphi(t)).collect(),
        )
    }

    /// `first` on `t < at`, `second` from `at` on.
    pub fn join(first: FrameField<T>, second: FrameField<T>, at: T) -> Self {
        let mut breaks = first.breakpoints.clone();
        breaks.extend(second.breakpoints.iter().copied());
        breaks.push(at);
        let (v1, v2) = (first.value.clone(), second.value.clone());
        let (d1, d2) = (first.derivative, second.derivative);
        FrameField::new(
            move |t| if t < at { v1(t) } else { v2(t) },
            move |t| if t < at { d1(t) } else { d2(t) },
        )
        .with_breakpoints(breaks)
    }

    pub fn value(&self, t: T) -> Vec<T> {
        (self.value)(t)
    }

    pub fn derivative(&self, t: T) -> Vec<T> {
        (self.derivative)(t)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }
}
