//! Elements of the ordered Banach space `E`, cones `P ⊆ E`, the induced
//! partial order and norms.
//!
//! Two layouts are supported: plain coordinate vectors of `ℝⁿ` and functions
//! on `[0,1]` sampled on a uniform grid. Cone membership is exact
//! (`coordinate >= 0`, no tolerance). Vectors that come out of floating point
//! arithmetic should be passed through [`SpaceElement::round_small`] before
//! a membership test.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{AxiomOutcome, AxiomReport, Witness};
use crate::sampling::{boundary_weighted_unit, SampleSpec};
use crate::scalar::Scalar;

/// Default number of grid points used to represent `C[0,1]`.
pub const DEFAULT_GRID_POINTS: usize = 33;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("layout mismatch: {left:?} vs {right:?}")]
    LayoutMismatch { left: Layout, right: Layout },
    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },
    #[error("empty element")]
    Empty,
    #[error("skew norm is only defined on R^2, got {0:?}")]
    SkewDimension(Layout),
    #[error("skew norm parameter must be positive and finite")]
    SkewParameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// Coordinates of `ℝⁿ`.
    FiniteDim(usize),
    /// Values of a function at `m` uniform grid points of `[0,1]`.
    GridFunction(usize),
}

impl Layout {
    pub fn len(&self) -> usize {
        match *self {
            Layout::FiniteDim(n) | Layout::GridFunction(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uniform grid `t_j = j/(m-1)` on `[0,1]`; a single point sits at `0`.
pub fn grid_points<T: Scalar>(m: usize) -> Vec<T> {
    if m == 1 {
        return vec![T::zero()];
    }
    let last = T::of_usize(m - 1);
    (0..m).map(|j| T::of_usize(j) / last).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceElement<T> {
    coords: Vec<T>,
    layout: Layout,
}

impl<T: Scalar> SpaceElement<T> {
    fn checked(coords: Vec<T>, layout: Layout) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::Empty);
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(SpaceError::NonFinite { index });
        }
        Ok(Self { coords, layout })
    }

    pub fn finite(coords: Vec<T>) -> Result<Self, SpaceError> {
        let n = coords.len();
        Self::checked(coords, Layout::FiniteDim(n))
    }

    pub fn grid(values: Vec<T>) -> Result<Self, SpaceError> {
        let m = values.len();
        Self::checked(values, Layout::GridFunction(m))
    }

    /// Samples `f` on the uniform `m`-point grid.
    pub fn grid_from_fn(m: usize, f: impl Fn(T) -> T) -> Result<Self, SpaceError> {
        Self::grid(grid_points::<T>(m).into_iter().map(f).collect())
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            coords: vec![T::zero(); layout.len()],
            layout,
        }
    }

    pub fn constant(layout: Layout, value: T) -> Result<Self, SpaceError> {
        Self::checked(vec![value; layout.len()], layout)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> T {
        self.coords
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.abs()))
    }

    fn same_layout(&self, other: &Self) -> Result<(), SpaceError> {
        if self.layout == other.layout {
            Ok(())
        } else {
            Err(SpaceError::LayoutMismatch {
                left: self.layout,
                right: other.layout,
            })
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, SpaceError> {
        self.same_layout(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::checked(coords, self.layout)
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpaceError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpaceError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: T) -> Result<Self, SpaceError> {
        let coords = self.coords.iter().map(|&c| c * factor).collect();
        Self::checked(coords, self.layout)
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| -c).collect(),
            layout: self.layout,
        }
    }

    /// Zeroes every coordinate with magnitude below `tol`.
    pub fn round_small(&self, tol: T) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .map(|&c| if c.abs() < tol { T::zero() } else { c })
                .collect(),
            layout: self.layout,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// Nonnegative orthant of `ℝⁿ`.
    Orthant(usize),
    /// Pointwise nonnegative functions on an `m`-point grid.
    NonnegGrid(usize),
}

impl ConeKind {
    pub fn layout(&self) -> Layout {
        match *self {
            ConeKind::Orthant(n) => Layout::FiniteDim(n),
            ConeKind::NonnegGrid(m) => Layout::GridFunction(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind<T> {
    Euclidean,
    Supremum,
    /// `N(u,v) = |u − v| + ε|u + v|` on `ℝ²`. Monotone on the orthant only
    /// up to a factor, which makes it a norm with normal constant above 1.
    Skew(T),
}

/// A cone together with the norm of the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCone<T> {
    kind: ConeKind,
    norm: NormKind<T>,
    measured_normal_constant: Option<T>,
}

impl<T: Scalar> OrderCone<T> {
    pub fn new(kind: ConeKind, norm: NormKind<T>) -> Result<Self, SpaceError> {
        if kind.layout().is_empty() {
            return Err(SpaceError::Empty);
        }
        if let NormKind::Skew(eps) = norm {
            if kind != ConeKind::Orthant(2) {
                return Err(SpaceError::SkewDimension(kind.layout()));
            }
            if !(eps > T::zero() && eps.is_finite()) {
                return Err(SpaceError::SkewParameter);
            }
        }
        Ok(Self {
            kind,
            norm,
            measured_normal_constant: None,
        })
    }

    pub fn orthant(n: usize, norm: NormKind<T>) -> Result<Self, SpaceError> {
        Self::new(ConeKind::Orthant(n), norm)
    }

    pub fn nonneg_grid(m: usize) -> Result<Self, SpaceError> {
        Self::new(ConeKind::NonnegGrid(m), NormKind::Supremum)
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn norm_kind(&self) -> NormKind<T> {
        self.norm
    }

    pub fn layout(&self) -> Layout {
        self.kind.layout()
    }

    pub fn measured_normal_constant(&self) -> Option<T> {
        self.measured_normal_constant
    }

    /// Runs [`estimate_normal_constant`] and stores the result on the cone.
    pub fn with_measured_normal_constant(mut self, spec: SampleSpec) -> Self {
        let est = estimate_normal_constant(&self, spec);
        self.measured_normal_constant = Some(est.k_hat);
        self
    }

    fn check_layout(&self, v: &SpaceElement<T>) -> Result<(), SpaceError> {
        if v.layout() == self.layout() {
            Ok(())
        } else {
            Err(SpaceError::LayoutMismatch {
                left: v.layout(),
                right: self.layout(),
            })
        }
    }

    pub fn zero(&self) -> SpaceElement<T> {
        SpaceElement::zeros(self.layout())
    }

    /// Exact membership: every coordinate `>= 0`.
    pub fn contains(&self, v: &SpaceElement<T>) -> Result<bool, SpaceError> {
        self.check_layout(v)?;
        Ok(v.coords().iter().all(|&c| c >= T::zero()))
    }

    /// `x ≤ y` iff `y − x ∈ P`.
    pub fn leq(&self, x: &SpaceElement<T>, y: &SpaceElement<T>) -> Result<bool, SpaceError> {
        self.check_layout(x)?;
        self.contains(&y.sub(x)?)
    }

    /// `x ≪ y` iff `y − x` lies in the interior of `P`.
    pub fn strictly_less(
        &self,
        x: &SpaceElement<T>,
        y: &SpaceElement<T>,
    ) -> Result<bool, SpaceError> {
        self.check_layout(x)?;
        let gap = y.sub(x)?;
        Ok(gap.coords().iter().all(|&c| c > T::zero()))
    }

    pub fn norm(&self, v: &SpaceElement<T>) -> Result<T, SpaceError> {
        self.check_layout(v)?;
        let c = v.coords();
        Ok(match self.norm {
            NormKind::Euclidean => {
                // scaled to avoid overflow of the squares
                let m = v.max_abs();
                if m.is_zero() {
                    T::zero()
                } else {
                    let s = c.iter().fold(T::zero(), |acc, &x| {
                        let r = x / m;
                        acc + r * r
                    });
                    m * s.sqrt()
                }
            }
            NormKind::Supremum => v.max_abs(),
            NormKind::Skew(eps) => {
                if c.len() != 2 {
                    return Err(SpaceError::SkewDimension(v.layout()));
                }
                (c[0] - c[1]).abs() + eps * (c[0] + c[1]).abs()
            }
        })
    }
}

/// Lower bound on the normal constant together with the pair attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalConstantEstimate<T> {
    pub k_hat: T,
    /// `(x, y)` with `0 ≤ x ≤ y` maximizing `‖x‖ / ‖y‖`.
    pub witness: Option<(SpaceElement<T>, SpaceElement<T>)>,
    pub pairs_evaluated: usize,
}

/// Maximizes `‖x‖/‖y‖` over sampled ordered pairs `0 ≤ x ≤ y`.
///
/// Pairs are built as `y ∈ P` and `x = u ⊙ y` with `u ∈ [0,1]ⁿ`, both drawn
/// with extra weight on the faces `{0, 1}`. Pairs with `‖y‖ = 0` are skipped.
/// The result is a lower bound on the true constant.
pub fn estimate_normal_constant<T: Scalar>(
    cone: &OrderCone<T>,
    spec: SampleSpec,
) -> NormalConstantEstimate<T> {
    let layout = cone.layout();
    let n = layout.len();
    let mut rng = spec.rng();
    let mut best = NormalConstantEstimate {
        k_hat: T::zero(),
        witness: None,
        pairs_evaluated: 0,
    };
    let mut ys = vec![T::zero(); n];
    let mut xs = vec![T::zero(); n];
    for _ in 0..spec.count.max(1) {
        for i in 0..n {
            let yi = boundary_weighted_unit(&mut rng);
            let ui = boundary_weighted_unit(&mut rng);
            ys[i] = T::of(yi);
            xs[i] = T::of(ui * yi);
        }
        let y = SpaceElement {
            coords: ys.clone(),
            layout,
        };
        let x = SpaceElement {
            coords: xs.clone(),
            layout,
        };
        let ordered = cone.contains(&x).unwrap_or(false) && cone.leq(&x, &y).unwrap_or(false);
        if !ordered {
            continue;
        }
        let ny = cone.norm(&y).unwrap_or(T::zero());
        if ny.is_zero() {
            continue;
        }
        best.pairs_evaluated += 1;
        let ratio = cone.norm(&x).unwrap_or(T::zero()) / ny;
        if ratio > best.k_hat {
            best.k_hat = ratio;
            best.witness = Some((x, y));
        }
    }
    best
}

/// Anything that can be tested for the cone axioms.
pub trait ConeCandidate<T: Scalar> {
    fn layout(&self) -> Layout;
    fn contains(&self, v: &SpaceElement<T>) -> Result<bool, SpaceError>;
}

impl<T: Scalar> ConeCandidate<T> for OrderCone<T> {
    fn layout(&self) -> Layout {
        OrderCone::layout(self)
    }

    fn contains(&self, v: &SpaceElement<T>) -> Result<bool, SpaceError> {
        OrderCone::contains(self, v)
    }
}

/// Set defined by a coordinate predicate; used to probe sets that may fail
/// to be cones.
pub struct PredicateSet<F> {
    layout: Layout,
    predicate: F,
}

impl<F> PredicateSet<F> {
    pub fn new(layout: Layout, predicate: F) -> Self {
        Self { layout, predicate }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> bool> ConeCandidate<T> for PredicateSet<F> {
    fn layout(&self) -> Layout {
        self.layout
    }

    fn contains(&self, v: &SpaceElement<T>) -> Result<bool, SpaceError> {
        if v.layout() != self.layout {
            return Err(SpaceError::LayoutMismatch {
                left: v.layout(),
                right: self.layout,
            });
        }
        Ok((self.predicate)(v.coords()))
    }
}

fn signed_weighted<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..4u8) {
        0 => -1.0,
        1 => 0.0,
        2 => 1.0,
        _ => rng.random_range(-2.0..2.0),
    }
}

fn nonneg_weighted<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..4u8) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.random_range(0.0..3.0),
    }
}

fn draw_candidate_point<T: Scalar, R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> SpaceElement<T> {
    let signed = rng.random::<bool>();
    let coords = (0..layout.len())
        .map(|_| {
            T::of(if signed {
                signed_weighted(rng)
            } else {
                nonneg_weighted(rng)
            })
        })
        .collect();
    SpaceElement { coords, layout }
}

/// Sampled check of the cone axioms.
///
/// * `P1`: zero, the all-ones interior point, and some nonzero element are
///   members. Closedness is not sampled.
/// * `P2`: `a·x + b·y ∈ P` for sampled members `x, y` and `a, b ≥ 0`.
/// * `P3`: no sampled nonzero member `x` has `−x` in the set.
pub fn verify_cone_axioms<T: Scalar, C: ConeCandidate<T>>(
    candidate: &C,
    spec: SampleSpec,
) -> AxiomReport<T> {
    let layout = candidate.layout();
    let mut rng = spec.rng();
    let member = |v: &SpaceElement<T>| candidate.contains(v).unwrap_or(false);

    // collect members; bounded number of attempts
    let wanted = spec.count.max(1) + 1;
    let mut members = Vec::with_capacity(wanted);
    let mut attempts = 0usize;
    while members.len() < wanted && attempts < 50 * wanted {
        attempts += 1;
        let v = draw_candidate_point::<T, _>(layout, &mut rng);
        if member(&v) {
            members.push(v);
        }
    }

    let mut p1 = AxiomOutcome::new("P1");
    let zero = SpaceElement::zeros(layout);
    p1.record(member(&zero), || Witness {
        values: zero.coords().to_vec(),
        note: "zero element is not a member".into(),
    });
    let ones = SpaceElement::constant(layout, T::one()).expect("finite");
    p1.record(member(&ones), || Witness {
        values: ones.coords().to_vec(),
        note: "interior point (1,…,1) is not a member".into(),
    });
    p1.record(members.iter().any(|v| !v.is_zero()), || Witness {
        values: Vec::new(),
        note: "no nonzero member found".into(),
    });

    let mut p2 = AxiomOutcome::new("P2");
    let mut p3 = AxiomOutcome::new("P3");
    if members.len() >= 2 {
        for k in 0..spec.count.max(1) {
            let x = &members[k % members.len()];
            let y = &members[(k + 1) % members.len()];
            let a = T::of(nonneg_weighted(&mut rng));
            let b = T::of(nonneg_weighted(&mut rng));
            let combo = x
                .scale(a)
                .and_then(|ax| y.scale(b).and_then(|by| ax.add(&by)));
            if let Ok(combo) = combo {
                p2.record(member(&combo), || {
                    let mut values = vec![a, b];
                    values.extend_from_slice(x.coords());
                    values.extend_from_slice(y.coords());
                    Witness {
                        values,
                        note: format!(
                            "a·x + b·y left the set: a={a}, b={b}, x={:?}, y={:?}",
                            x.coords(),
                            y.coords()
                        ),
                    }
                });
            }
            if !x.is_zero() {
                let neg = x.neg();
                p3.record(!member(&neg), || Witness {
                    values: x.coords().to_vec(),
                    note: format!("x={:?} and −x are both members", x.coords()),
                });
            } else {
                p3.record(true, || unreachable!());
            }
        }
    } else {
        let note = "fewer than two members found";
        p2.record(false, || Witness {
            values: Vec::new(),
            note: note.into(),
        });
        p3.record(false, || Witness {
            values: Vec::new(),
            note: note.into(),
        });
    }

    AxiomReport {
        outcomes: vec![p1, p2, p3],
    }
}
