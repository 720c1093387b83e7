//! Finite-dimensional normed spaces and a catalog of nonexpansive operators
//! with certified fixed points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KmError, Result};
use crate::moduli::UcModulus;

/// Tolerance for fixed-point and nonexpansiveness certificates.
pub const OPERATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
    Lp(f64),
}

/// ℝ^dim with a Euclidean or ℓ_p norm and the matching modulus of uniform
/// convexity.
#[derive(Debug, Clone)]
pub struct Space {
    dim: usize,
    norm_kind: NormKind,
    uc_modulus: UcModulus,
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        Space::new(dim, NormKind::Euclidean)
    }

    pub fn new(dim: usize, norm_kind: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(KmError::domain("dimension must be >= 1"));
        }
        let uc_modulus = match norm_kind {
            NormKind::Euclidean => UcModulus::hilbert(),
            NormKind::Lp(2.0) => UcModulus::hilbert(),
            NormKind::Lp(p) => UcModulus::lp(p)?,
        };
        Ok(Space {
            dim,
            norm_kind,
            uc_modulus,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn uc_modulus(&self) -> &UcModulus {
        &self.uc_modulus
    }

    /// Inner-product space: Euclidean, or ℓ_2 spelled as `Lp(2)`.
    pub fn is_hilbert(&self) -> bool {
        match self.norm_kind {
            NormKind::Euclidean => true,
            NormKind::Lp(p) => p == 2.0,
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.norm_kind {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Lp(2.0) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Lp(p) => {
                let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                // scaled to avoid overflow/underflow in |x|^p
                m * v
                    .iter()
                    .map(|x| (x.abs() / m).powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }

    pub fn check_vector(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(KmError::domain(format!(
                "{what} has dimension {}, space has {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Catalog entries. Each one is nonexpansive in the spaces it is accepted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum OperatorSpec {
    Identity,
    /// Rotation by `theta` radians in the plane spanned by two coordinate axes.
    Rotation {
        theta: f64,
        #[serde(default = "default_axes")]
        axes: (usize, usize),
    },
    BallProjection {
        center: Vec<f64>,
        radius: f64,
    },
    /// Projection onto `{x : ⟨a, x⟩ ≤ b}`.
    HalfspaceProjection {
        a: Vec<f64>,
        b: f64,
    },
    BoxProjection {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `x ↦ Qx + c` with `‖Q‖_op < 1`; `q` is row-major.
    AffineAvg {
        q: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
    /// `x ↦ diag(factors)·x` with every `|factor| ≤ 1`.
    CoordinateShrink {
        factors: Vec<f64>,
    },
}

fn default_axes() -> (usize, usize) {
    (0, 1)
}

/// Names accepted by [`catalog_make`].
pub const CATALOG: &[(&str, &str)] = &[
    ("identity", "T x = x; every point is fixed"),
    (
        "rotation",
        "rotation by theta in a coordinate plane (Euclidean only)",
    ),
    (
        "ball_projection",
        "nearest point of a closed ball (Euclidean only)",
    ),
    (
        "halfspace_projection",
        "nearest point of {<a,x> <= b} (Euclidean only)",
    ),
    (
        "box_projection",
        "coordinatewise clamp to [lo, hi] (Euclidean only)",
    ),
    (
        "affine_avg",
        "x -> Qx + c with ||Q||_op < 1 (Euclidean only)",
    ),
    (
        "coordinate_shrink",
        "x -> diag(s) x with |s_i| <= 1 (any l_p)",
    ),
];

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Rotation {
        cos: f64,
        sin: f64,
        i: usize,
        j: usize,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Halfspace {
        a: Vec<f64>,
        a_sq: f64,
        b: f64,
    },
    Boxed {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Affine {
        q: DMatrix<f64>,
        c: DVector<f64>,
    },
    Shrink {
        factors: Vec<f64>,
    },
    Scale {
        factor: f64,
    },
}

/// A nonexpansive map on a [`Space`] with a known fixed point.
#[derive(Debug, Clone)]
pub struct Operator {
    kind: Kind,
    known_fixed_point: Vec<f64>,
    tag: String,
}

impl Operator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Identity => x.to_vec(),
            Kind::Rotation { cos, sin, i, j } => {
                let mut y = x.to_vec();
                y[*i] = cos * x[*i] - sin * x[*j];
                y[*j] = sin * x[*i] + cos * x[*j];
                y
            }
            Kind::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n <= *radius {
                    x.to_vec()
                } else {
                    let s = radius / n;
                    center.iter().zip(&d).map(|(c, v)| c + s * v).collect()
                }
            }
            Kind::Halfspace { a, a_sq, b } => {
                let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                if ax <= *b {
                    x.to_vec()
                } else {
                    let s = (ax - b) / a_sq;
                    x.iter().zip(a).map(|(xi, ai)| xi - s * ai).collect()
                }
            }
            Kind::Boxed { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            Kind::Affine { q, c } => {
                let v = q * DVector::from_column_slice(x) + c;
                v.iter().copied().collect()
            }
            Kind::Shrink { factors } => x.iter().zip(factors).map(|(v, s)| v * s).collect(),
            Kind::Scale { factor } => x.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn known_fixed_point(&self) -> &[f64] {
        &self.known_fixed_point
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// A fixed point chosen for the start `x`. Projections return `P(x)`,
    /// which lies in the fixed set; the identity returns `x`. The candidate
    /// that minimizes `max{‖x-z‖, ‖z‖}` among these and the stored fixed
    /// point is returned.
    pub fn fixed_point_for(&self, space: &Space, x: &[f64]) -> Vec<f64> {
        let mut candidates = vec![self.known_fixed_point.clone()];
        match self.kind {
            Kind::Identity | Kind::Ball { .. } | Kind::Halfspace { .. } | Kind::Boxed { .. } => {
                candidates.push(self.apply(x));
            }
            _ => {}
        }
        let score = |z: &Vec<f64>| space.dist(x, z).max(space.norm(z));
        candidates
            .into_iter()
            .min_by(|a, b| score(a).total_cmp(&score(b)))
            .expect("non-empty candidate list")
    }

    /// `x ↦ factor·x`, nonexpansive only when `|factor| ≤ 1`. Built without
    /// validation so negative controls can exercise the checks.
    pub fn scaling_unchecked(dim: usize, factor: f64) -> Self {
        Operator {
            kind: Kind::Scale { factor },
            known_fixed_point: vec![0.0; dim],
            tag: format!("scale({factor})"),
        }
    }
}

fn spectral_norm(q: &DMatrix<f64>) -> f64 {
    q.singular_values().iter().fold(0.0f64, |m, s| m.max(*s))
}

/// Builds a catalog operator and certifies its fixed point.
pub fn catalog_make(spec: &OperatorSpec, space: &Space) -> Result<Operator> {
    let dim = space.dim();
    let euclid_only = |name: &str| -> Result<()> {
        if space.is_hilbert() {
            Ok(())
        } else {
            Err(KmError::domain(format!(
                "{name} is only catalogued for the Euclidean norm"
            )))
        }
    };
    let (kind, z, tag) = match spec {
        OperatorSpec::Identity => (Kind::Identity, vec![0.0; dim], "identity".to_string()),
        OperatorSpec::Rotation { theta, axes } => {
            euclid_only("rotation")?;
            let (i, j) = *axes;
            if i == j || i >= dim || j >= dim {
                return Err(KmError::domain(format!("invalid rotation axes {axes:?}")));
            }
            if !theta.is_finite() {
                return Err(KmError::domain("rotation angle must be finite"));
            }
            (
                Kind::Rotation {
                    cos: theta.cos(),
                    sin: theta.sin(),
                    i,
                    j,
                },
                vec![0.0; dim],
                format!("rotation({theta})"),
            )
        }
        OperatorSpec::BallProjection { center, radius } => {
            euclid_only("ball_projection")?;
            space.check_vector(center, "ball center")?;
            if !(*radius >= 0.0) || !radius.is_finite() {
                return Err(KmError::domain("ball radius must be finite and >= 0"));
            }
            (
                Kind::Ball {
                    center: center.clone(),
                    radius: *radius,
                },
                center.clone(),
                "ball_projection".to_string(),
            )
        }
        OperatorSpec::HalfspaceProjection { a, b } => {
            euclid_only("halfspace_projection")?;
            space.check_vector(a, "halfspace normal")?;
            let a_sq: f64 = a.iter().map(|v| v * v).sum();
            if !(a_sq > 0.0) || !b.is_finite() {
                return Err(KmError::domain(
                    "halfspace needs a nonzero normal and finite offset",
                ));
            }
            // nearest point of the set to the origin
            let z = if *b >= 0.0 {
                vec![0.0; dim]
            } else {
                a.iter().map(|ai| b / a_sq * ai).collect()
            };
            (
                Kind::Halfspace {
                    a: a.clone(),
                    a_sq,
                    b: *b,
                },
                z,
                "halfspace_projection".to_string(),
            )
        }
        OperatorSpec::BoxProjection { lo, hi } => {
            euclid_only("box_projection")?;
            space.check_vector(lo, "box lower corner")?;
            space.check_vector(hi, "box upper corner")?;
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                return Err(KmError::domain("box needs lo <= hi coordinatewise"));
            }
            let z = lo
                .iter()
                .zip(hi)
                .map(|(l, h)| 0.0f64.clamp(*l, *h))
                .collect();
            (
                Kind::Boxed {
                    lo: lo.clone(),
                    hi: hi.clone(),
                },
                z,
                "box_projection".to_string(),
            )
        }
        OperatorSpec::AffineAvg { q, c } => {
            euclid_only("affine_avg")?;
            space.check_vector(c, "affine offset")?;
            if q.len() != dim || q.iter().any(|row| row.len() != dim) {
                return Err(KmError::domain("affine matrix must be dim x dim"));
            }
            let qm = DMatrix::from_fn(dim, dim, |i, j| q[i][j]);
            let op_norm = spectral_norm(&qm);
            if op_norm > 1.0 {
                return Err(KmError::domain(format!(
                    "affine_avg needs ||Q||_op <= 1, got {op_norm}"
                )));
            }
            if op_norm >= 1.0 - OPERATOR_TOL {
                return Err(KmError::domain(
                    "affine_avg with ||Q||_op = 1 has no computable fixed point",
                ));
            }
            let cv = DVector::from_column_slice(c);
            let ident = DMatrix::<f64>::identity(dim, dim);
            let z = (ident - &qm)
                .lu()
                .solve(&cv)
                .ok_or_else(|| KmError::domain("I - Q is singular"))?;
            (
                Kind::Affine { q: qm, c: cv },
                z.iter().copied().collect(),
                "affine_avg".to_string(),
            )
        }
        OperatorSpec::CoordinateShrink { factors } => {
            space.check_vector(factors, "shrink factors")?;
            if factors.iter().any(|s| !(s.abs() <= 1.0)) {
                return Err(KmError::domain("shrink factors must satisfy |s| <= 1"));
            }
            (
                Kind::Shrink {
                    factors: factors.clone(),
                },
                vec![0.0; dim],
                "coordinate_shrink".to_string(),
            )
        }
    };
    let op = Operator {
        kind,
        known_fixed_point: z,
        tag,
    };
    let defect = space.dist(&op.apply(&op.known_fixed_point), &op.known_fixed_point);
    if defect > OPERATOR_TOL {
        return Err(KmError::domain(format!(
            "{}: stored fixed point has defect {defect}",
            op.tag
        )));
    }
    Ok(op)
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexpansiveReport {
    pub samples: usize,
    /// Largest `‖Tx - Ty‖ - ‖x - y‖` observed.
    pub max_excess: f64,
    /// Index of the first sample pair whose excess exceeds the tolerance.
    pub first_violation: Option<usize>,
    pub box_half_width: f64,
}

impl NonexpansiveReport {
    pub fn pass(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Samples pairs uniformly from `[-half_width, half_width]^dim` and records
/// the worst expansion.
pub fn check_nonexpansive(
    op: &Operator,
    space: &Space,
    samples: usize,
    seed: u64,
    half_width: f64,
) -> Result<NonexpansiveReport> {
    if samples == 0 {
        return Err(KmError::Precondition("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..space.dim())
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect()
    };
    let mut max_excess = f64::NEG_INFINITY;
    let mut first_violation = None;
    for s in 0..samples {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let excess = space.dist(&op.apply(&x), &op.apply(&y)) - space.dist(&x, &y);
        if excess > max_excess {
            max_excess = excess;
        }
        if first_violation.is_none() && excess > OPERATOR_TOL {
            first_violation = Some(s);
        }
    }
    Ok(NonexpansiveReport {
        samples,
        max_excess,
        first_violation,
        box_half_width: half_width,
    })
}
