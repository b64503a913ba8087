//! Simplices, the embedding of isotropic simplices onto the standard simplex,
//! and affine frames.
//!
//! A [`Simplex`] stores its `n + 1` vertices as the columns of a matrix. The
//! ambient dimension is normally `n`, but the standard simplex lives in
//! `R^{n+1}`, so the ambient dimension is allowed to exceed `n`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Barycentric coordinates at or above this value count as inside.
pub const INSIDE_TOLERANCE: f64 = -1e-12;

/// Relative singular-value floor below which vertices are treated as
/// affinely dependent.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimplexRepr", into = "SimplexRepr")]
pub struct Simplex {
    vertices: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimplexRepr {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<SimplexRepr> for Simplex {
    type Error = Error;

    fn try_from(repr: SimplexRepr) -> Result<Self> {
        if repr.vertices.len() != repr.dim + 1 {
            return Err(Error::InvalidArgument(format!(
                "dim {} requires {} vertices, found {}",
                repr.dim,
                repr.dim + 1,
                repr.vertices.len()
            )));
        }
        Simplex::from_rows(&repr.vertices)
    }
}

impl From<Simplex> for SimplexRepr {
    fn from(s: Simplex) -> Self {
        SimplexRepr {
            dim: s.dim(),
            vertices: s.vertex_rows(),
        }
    }
}

impl Simplex {
    /// Builds a simplex from a matrix whose columns are the vertices.
    pub fn from_columns(vertices: DMatrix<f64>) -> Result<Self> {
        let count = vertices.ncols();
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "a simplex needs at least 2 vertices, got {count}"
            )));
        }
        if vertices.nrows() < count - 1 {
            return Err(Error::DegenerateSimplex(format!(
                "{count} vertices cannot be affinely independent in R^{}",
                vertices.nrows()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite vertex coordinate".into()));
        }
        let s = Simplex { vertices };
        let sv = s.edge_matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if !(min > 0.0 && min > RANK_TOLERANCE * max) {
            return Err(Error::DegenerateSimplex(format!(
                "edge matrix singular values range [{min:e}, {max:e}]"
            )));
        }
        Ok(s)
    }

    pub fn from_vertices(vertices: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidArgument("no vertices".into()));
        };
        let d = first.len();
        for v in vertices {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: v.len(),
                });
            }
        }
        Self::from_columns(DMatrix::from_columns(vertices))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let vs: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_vec(r.clone())).collect();
        Self::from_vertices(&vs)
    }

    /// Simplex dimension `n` (one less than the vertex count).
    pub fn dim(&self) -> usize {
        self.vertices.ncols() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices.nrows()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.ambient_dim() == self.dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.ncols()
    }

    pub fn vertex(&self, i: usize) -> DVector<f64> {
        self.vertices.column(i).into_owned()
    }

    pub fn vertices(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        self.vertices.column_iter().map(|c| c.into_owned())
    }

    /// Vertices as matrix columns.
    pub fn vertex_matrix(&self) -> &DMatrix<f64> {
        &self.vertices
    }

    pub fn vertex_rows(&self) -> Vec<Vec<f64>> {
        self.vertices
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    }

    pub fn centroid(&self) -> DVector<f64> {
        self.vertices.column_mean()
    }

    /// Columns `v_i - v_0` for `i = 1..=n`.
    pub fn edge_matrix(&self) -> DMatrix<f64> {
        let v0 = self.vertices.column(0);
        let n = self.dim();
        DMatrix::from_fn(self.ambient_dim(), n, |r, c| self.vertices[(r, c + 1)] - v0[r])
    }

    /// n-dimensional volume: `|det E| / n!`, or `sqrt(det(E^T E)) / n!` when
    /// the simplex sits in a higher-dimensional space.
    pub fn volume(&self) -> f64 {
        let e = self.edge_matrix();
        let det = if self.is_full_dimensional() {
            e.determinant().abs()
        } else {
            (e.transpose() * &e).determinant().max(0.0).sqrt()
        };
        det / factorial(self.dim())
    }

    /// Image under `x -> linear * x + shift`.
    pub fn affine_image(&self, linear: &DMatrix<f64>, shift: &DVector<f64>) -> Result<Simplex> {
        if linear.ncols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                actual: linear.ncols(),
            });
        }
        if shift.len() != linear.nrows() {
            return Err(Error::DimensionMismatch {
                expected: linear.nrows(),
                actual: shift.len(),
            });
        }
        let mut image = linear * &self.vertices;
        for mut col in image.column_iter_mut() {
            col += shift;
        }
        Simplex::from_columns(image)
    }

    /// Homothety `x -> center + factor (x - center)`.
    pub fn scaled_about(&self, center: &DVector<f64>, factor: f64) -> Result<Simplex> {
        let mut image = self.vertices.clone();
        for mut col in image.column_iter_mut() {
            let scaled = center + (&col - center) * factor;
            col.copy_from(&scaled);
        }
        Simplex::from_columns(image)
    }

    /// Cached barycentric solver for repeated membership queries.
    pub fn membership(&self) -> Result<Membership> {
        Membership::new(self)
    }

    pub fn barycentric(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.membership()?.barycentric(x)
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        self.membership()?.contains(x)
    }

    /// Canonical file form: `{"dim": n, "vertices": [[...], ...]}` with every
    /// coordinate printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{{\"dim\": {}, \"vertices\": [", self.dim());
        for (i, v) in self.vertices.column_iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push('[');
            for (j, x) in v.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format_f64_17(*x));
            }
            out.push(']');
        }
        out.push_str("]}");
        out
    }

    pub fn from_json(text: &str) -> Result<Simplex> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Formats a float with 17 significant digits in JSON-compatible exponent form.
pub fn format_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug)]
enum Solver {
    /// Full-dimensional: LU of `[V; 1^T]`.
    Square(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Embedded in a larger space: pseudo-inverse plus residual check.
    LeastSquares { system: DMatrix<f64>, pinv: DMatrix<f64> },
}

/// Barycentric-coordinate solver with the factorization computed once.
#[derive(Debug)]
pub struct Membership {
    ambient: usize,
    solver: Solver,
}

impl Membership {
    fn new(s: &Simplex) -> Result<Self> {
        let d = s.ambient_dim();
        let k = s.vertex_count();
        let mut system = DMatrix::from_element(d + 1, k, 1.0);
        system.view_mut((0, 0), (d, k)).copy_from(s.vertex_matrix());
        let solver = if s.is_full_dimensional() {
            let lu = system.lu();
            if !lu.is_invertible() {
                return Err(Error::DegenerateSimplex("barycentric system is singular".into()));
            }
            Solver::Square(lu)
        } else {
            let pinv = system
                .clone()
                .pseudo_inverse(1e-13)
                .map_err(|e| Error::DegenerateSimplex(e.to_string()))?;
            Solver::LeastSquares { system, pinv }
        };
        Ok(Membership { ambient: d, solver })
    }

    fn rhs(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                actual: x.len(),
            });
        }
        Ok(x.clone().insert_row(self.ambient, 1.0))
    }

    /// Barycentric coordinates. For an embedded simplex this is the
    /// least-squares solution; [`Membership::contains`] also checks the residual.
    pub fn barycentric(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let rhs = self.rhs(x)?;
        match &self.solver {
            Solver::Square(lu) => lu
                .solve(&rhs)
                .ok_or_else(|| Error::DegenerateSimplex("barycentric solve failed".into())),
            Solver::LeastSquares { pinv, .. } => Ok(pinv * rhs),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        let rhs = self.rhs(x)?;
        let lambda = match &self.solver {
            Solver::Square(lu) => lu
                .solve(&rhs)
                .ok_or_else(|| Error::DegenerateSimplex("barycentric solve failed".into()))?,
            Solver::LeastSquares { system, pinv } => {
                let lambda = pinv * &rhs;
                let residual = (system * &lambda - &rhs).norm();
                if residual > 1e-9 * (1.0 + rhs.norm()) {
                    return Ok(false);
                }
                lambda
            }
        };
        Ok(lambda.iter().all(|&l| l >= INSIDE_TOLERANCE))
    }

    /// Membership for every row of `points` (one point per row).
    pub fn contains_rows(&self, points: &DMatrix<f64>) -> Result<Vec<bool>> {
        if points.ncols() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                actual: points.ncols(),
            });
        }
        let t = points.nrows();
        let mut rhs = DMatrix::from_element(self.ambient + 1, t, 1.0);
        rhs.view_mut((0, 0), (self.ambient, t)).copy_from(&points.transpose());
        let (lambda, residual_ok): (DMatrix<f64>, Vec<bool>) = match &self.solver {
            Solver::Square(lu) => {
                let l = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::DegenerateSimplex("barycentric solve failed".into()))?;
                (l, vec![true; t])
            }
            Solver::LeastSquares { system, pinv } => {
                let l = pinv * &rhs;
                let r = system * &l - &rhs;
                let ok = (0..t)
                    .map(|j| r.column(j).norm() <= 1e-9 * (1.0 + rhs.column(j).norm()))
                    .collect();
                (l, ok)
            }
        };
        Ok((0..t)
            .map(|j| residual_ok[j] && lambda.column(j).iter().all(|&l| l >= INSIDE_TOLERANCE))
            .collect())
    }
}

/// The standard n-simplex: canonical unit vectors `e_1..e_{n+1}` in `R^{n+1}`.
pub fn standard_simplex(n: usize) -> Result<Simplex> {
    if n == 0 {
        return Err(Error::InvalidArgument("simplex dimension must be at least 1".into()));
    }
    Simplex::from_columns(DMatrix::identity(n + 1, n + 1))
}

/// `(inradius, circumradius)` of an isotropic n-simplex.
pub fn isotropic_vertex_norms(n: usize) -> (f64, f64) {
    let n = n as f64;
    (((n + 2.0) / n).sqrt(), (n * (n + 2.0)).sqrt())
}

/// The regular isotropic simplex `T^{-1}(e_i)`, centred at the origin with
/// circumradius `sqrt(n(n+2))`.
pub fn isotropic_simplex(n: usize) -> Result<Simplex> {
    let embed = make_embed_map(n)?;
    let cols: Vec<DVector<f64>> = (0..=n)
        .map(|i| {
            let mut e = DVector::zeros(n + 1);
            e[i] = 1.0;
            embed.pullback(&e)
        })
        .collect();
    Simplex::from_vertices(&cols)
}

/// Affine map `T(x) = scale * A x + offset` from `R^n` onto the hyperplane
/// `{y : y . 1 = 1}` in `R^{n+1}`, sending the regular isotropic simplex to
/// the standard simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedMap {
    /// `(n+1) x n`, orthonormal columns spanning the complement of `1`.
    pub basis: DMatrix<f64>,
    /// `1 / sqrt((n+1)(n+2))`.
    pub scale: f64,
    /// `1 / (n+1)` in every coordinate.
    pub offset: DVector<f64>,
}

/// Builds `T` from the Q factor of the matrix with ones on the diagonal and
/// in the first column; the first Q column is parallel to `1` and is dropped.
pub fn make_embed_map(n: usize) -> Result<EmbedMap> {
    if n == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
    }
    let k = n + 1;
    let m = DMatrix::from_fn(k, k, |r, c| if r == c || c == 0 { 1.0 } else { 0.0 });
    // Householder QR without pivoting.
    let q = m.qr().q();
    let basis = q.columns(1, n).into_owned();
    let nf = n as f64;
    Ok(EmbedMap {
        basis,
        scale: 1.0 / ((nf + 1.0) * (nf + 2.0)).sqrt(),
        offset: DVector::from_element(k, 1.0 / (nf + 1.0)),
    })
}

impl EmbedMap {
    /// Dimension `n` of the source space.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * x * self.scale + &self.offset
    }

    /// Inverse of `T` on the hyperplane: `sqrt((n+1)(n+2)) A^T (y - 1/(n+1))`.
    pub fn pullback(&self, y: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(&(y - &self.offset)) / self.scale
    }

    /// Applies `T` to every row.
    pub fn forward_rows(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = points * self.basis.transpose() * self.scale;
        for mut row in out.row_iter_mut() {
            row += self.offset.transpose();
        }
        out
    }

    /// Nearest point to `u` on `{x : x . 1 = 1}`.
    pub fn project_to_hyperplane(u: &DVector<f64>) -> DVector<f64> {
        let k = u.len() as f64;
        let shift = (1.0 - u.sum()) / k;
        u.add_scalar(shift)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameDirection {
    /// `B^{-1}(x - mu)`
    Forward,
    /// `B x + mu`
    Inverse,
}

/// Mean and a square-root factor of a covariance, `Sigma = B B^T`.
#[derive(Clone, Debug)]
pub struct AffineFrame {
    pub mean: DVector<f64>,
    pub factor: DMatrix<f64>,
    factor_inv: DMatrix<f64>,
}

impl AffineFrame {
    pub fn new(mean: DVector<f64>, factor: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if factor.nrows() != n || factor.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: factor.nrows().max(factor.ncols()),
            });
        }
        let factor_inv = factor
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularMatrix("frame factor is not invertible".into()))?;
        Ok(AffineFrame {
            mean,
            factor,
            factor_inv,
        })
    }

    pub fn identity(n: usize) -> Self {
        AffineFrame {
            mean: DVector::zeros(n),
            factor: DMatrix::identity(n, n),
            factor_inv: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn factor_inverse(&self) -> &DMatrix<f64> {
        &self.factor_inv
    }

    pub fn apply(&self, x: &DVector<f64>, direction: FrameDirection) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(match direction {
            FrameDirection::Forward => &self.factor_inv * (x - &self.mean),
            FrameDirection::Inverse => &self.factor * x + &self.mean,
        })
    }

    /// Forward map applied to every row.
    pub fn forward_rows(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = points.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centered * self.factor_inv.transpose()
    }
}

/// Free-function form of [`AffineFrame::apply`].
pub fn apply_frame(frame: &AffineFrame, x: &DVector<f64>, direction: FrameDirection) -> Result<DVector<f64>> {
    frame.apply(x, direction)
}
