//! Vertex-wise LP certificates for in-block controllability and the
//! constructive polytope builder for systems with `O + Im B = R^n`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::to_f64_vec;
use crate::lp::{LinearProgram, LpError, LpOutcome};
use crate::polytope::{GeometryError, Membership, Polytope, TangentCone};
use crate::scalar::Scalar;
use crate::system::{LinearSystem, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IbcError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("alpha must exceed 1, got {alpha}")]
    AlphaTooSmall { alpha: f64 },
    #[error("no scale on the grid makes every vertex strictly invariant (smallest tried {smallest})")]
    NoFeasibleScale { smallest: f64 },
    #[error("constructed vertex {vertex:?} is neither an equilibrium nor admits a strict input direction")]
    VertexConditionFails { vertex: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Admissible inputs.
#[derive(Clone, Debug)]
pub enum InputSet<T: Scalar> {
    Unbounded,
    Box { lo: DVector<T>, hi: DVector<T> },
    Polytope(Polytope<T>),
}

impl<T: Scalar> InputSet<T> {
    /// `[-bound, bound]^m`.
    pub fn symmetric(m: usize, bound: T) -> Self {
        InputSet::Box {
            lo: DVector::from_element(m, -bound),
            hi: DVector::from_element(m, bound),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, InputSet::Unbounded)
    }

    pub fn contains(&self, u: &DVector<T>, tol: T) -> bool {
        match self {
            InputSet::Unbounded => true,
            InputSet::Box { lo, hi } => (0..u.len()).all(|i| u[i] >= lo[i] - tol && u[i] <= hi[i] + tol),
            InputSet::Polytope(p) => p.contains(u, tol) != Membership::Outside,
        }
    }

    pub fn contains_interior(&self, u: &DVector<T>, tol: T) -> bool {
        match self {
            InputSet::Unbounded => true,
            InputSet::Box { lo, hi } => (0..u.len()).all(|i| u[i] > lo[i] + tol && u[i] < hi[i] - tol),
            InputSet::Polytope(p) => p.contains(u, tol) == Membership::Interior,
        }
    }

    /// Nearest point of the set for boxes; other sets return `u` unchanged.
    pub fn clip(&self, u: &DVector<T>) -> DVector<T> {
        match self {
            InputSet::Box { lo, hi } => DVector::from_iterator(u.len(), (0..u.len()).map(|i| u[i].max(lo[i]).min(hi[i]))),
            _ => u.clone(),
        }
    }

    fn constrain(&self, lp: &mut LinearProgram<T>, m: usize) -> Result<(), IbcError> {
        match self {
            InputSet::Unbounded => {}
            InputSet::Box { lo, hi } => {
                if lo.len() != m || hi.len() != m {
                    return Err(IbcError::Dimension(format!("input box has {} axes, B has {m} columns", lo.len())));
                }
                for i in 0..m {
                    lp.bound(i, Some(lo[i]), Some(hi[i]));
                }
            }
            InputSet::Polytope(p) => {
                if p.dim() != m {
                    return Err(IbcError::Dimension(format!("input polytope has dimension {}, B has {m} columns", p.dim())));
                }
                for h in p.halfspaces() {
                    let mut row: Vec<T> = h.normal.iter().copied().collect();
                    row.push(T::zero());
                    lp.add_le(row, h.offset);
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one margin-maximization LP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LpRecord<T: Scalar> {
    pub feasible: bool,
    pub u: Vec<T>,
    pub margin: T,
}

impl<T: Scalar> LpRecord<T> {
    pub fn is_strict(&self) -> bool {
        self.margin > T::tolerances().lp
    }

    pub fn input(&self) -> DVector<T> {
        DVector::from_column_slice(&self.u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DipRecord<T: Scalar> {
    pub feasible: bool,
    pub b: Vec<T>,
    pub margin: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VertexRecord<T: Scalar> {
    pub vertex: Vec<T>,
    pub in_o: bool,
    /// Least-squares input holding an equilibrium vertex at rest.
    pub holding: Option<Vec<T>>,
    pub invariance: LpRecord<T>,
    pub backward: LpRecord<T>,
    pub cone_dip: DipRecord<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Ibc,
    NotIbc,
    /// Necessary conditions hold but the available sufficient test does not apply.
    NecessaryOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Every vertex is an equilibrium or admits an input direction into the cone interior.
    EquilibriumOrConeDip,
    /// Simplicial polytope with solvable forward and backward invariance conditions.
    SimplicialInvariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IbcCertificate<T: Scalar> {
    pub verdict: Verdict,
    pub route: Option<Route>,
    pub controllable: bool,
    pub simplicial: bool,
    pub input_bounded: bool,
    pub vertices: Vec<VertexRecord<T>>,
    /// Indices of vertices that break the verdict, if any.
    pub failing: Vec<usize>,
}

impl<T: Scalar> IbcCertificate<T> {
    pub fn is_ibc(&self) -> bool {
        self.verdict == Verdict::Ibc
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// Caller vouches that the bounded input set is rich enough for the
    /// simplicial invariance test to be sufficient as well as necessary.
    pub assume_input_mild: bool,
}

fn margin_lp<T: Scalar>(
    sys: &LinearSystem<T>,
    cone: &TangentCone<T>,
    v: &DVector<T>,
    inputs: &InputSet<T>,
    sign: T,
) -> Result<(DVector<T>, T), IbcError> {
    let m = sys.m();
    let av = sys.a() * v;
    let mut lp = LinearProgram::new(m + 1);
    let mut obj = vec![T::zero(); m + 1];
    obj[m] = T::one();
    lp.maximize(obj);
    for h in &cone.normals {
        let hb = sys.b().transpose() * h;
        let mut row: Vec<T> = hb.iter().map(|&c| c * sign).collect();
        row.push(T::one());
        lp.add_le(row, -sign * h.dot(&av));
    }
    lp.bound(m, None, Some(T::one()));
    inputs.constrain(&mut lp, m)?;
    match lp.solve(&T::tolerances())? {
        LpOutcome::Optimal(s) => Ok((DVector::from_column_slice(&s.x[..m]), s.x[m])),
        // With a free margin the program is always feasible; an empty input
        // polytope is the only way to land here.
        LpOutcome::Infeasible => Ok((DVector::zeros(m), -T::max_value().unwrap_or(T::one()))),
        LpOutcome::Unbounded => unreachable!("margin is capped"),
    }
}

fn record<T: Scalar>(u: DVector<T>, margin: T, strict: bool) -> LpRecord<T> {
    let tol = T::tolerances().lp;
    LpRecord {
        feasible: if strict { margin > tol } else { margin >= -tol },
        u: u.iter().copied().collect(),
        margin,
    }
}

/// `max eps` subject to `h_j . (Av + Bu) <= -eps` on the active facets at `v`.
pub fn invariance_lp<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    v: &DVector<T>,
    inputs: &InputSet<T>,
    strict: bool,
) -> Result<LpRecord<T>, IbcError> {
    let cone = x.tangent_cone(v)?;
    let (u, eps) = margin_lp(sys, &cone, v, inputs, T::one())?;
    Ok(record(u, eps, strict))
}

/// As [`invariance_lp`] with the vector field reversed.
pub fn backward_invariance_lp<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    v: &DVector<T>,
    inputs: &InputSet<T>,
    strict: bool,
) -> Result<LpRecord<T>, IbcError> {
    let cone = x.tangent_cone(v)?;
    let (u, eps) = margin_lp(sys, &cone, v, inputs, -T::one())?;
    Ok(record(u, eps, strict))
}

/// Looks for `b` in `Im B` pointing into the interior of the tangent cone at `v`.
pub fn cone_dip_lp<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    v: &DVector<T>,
) -> Result<DipRecord<T>, IbcError> {
    let cone = x.tangent_cone(v)?;
    cone_dip(sys, &cone)
}

fn cone_dip<T: Scalar>(sys: &LinearSystem<T>, cone: &TangentCone<T>) -> Result<DipRecord<T>, IbcError> {
    let m = sys.m();
    let mut lp = LinearProgram::new(m + 1);
    let mut obj = vec![T::zero(); m + 1];
    obj[m] = T::one();
    lp.maximize(obj);
    for h in &cone.normals {
        let hb = sys.b().transpose() * h;
        let mut row: Vec<T> = hb.iter().copied().collect();
        row.push(T::one());
        lp.add_le(row, T::zero());
    }
    for i in 0..m {
        lp.bound(i, Some(-T::one()), Some(T::one()));
    }
    lp.bound(m, None, Some(T::one()));
    match lp.solve(&T::tolerances())? {
        LpOutcome::Optimal(s) => {
            let xi = DVector::from_column_slice(&s.x[..m]);
            let b = sys.b() * xi;
            Ok(DipRecord {
                feasible: s.x[m] > T::tolerances().lp,
                b: b.iter().copied().collect(),
                margin: s.x[m],
            })
        }
        _ => unreachable!("xi = 0 is feasible and the margin is capped"),
    }
}

/// Smallest slack `-h_j . (+-(Av + Bu))` over the active facets at `v`.
pub fn witness_margin<T: Scalar>(
    sys: &LinearSystem<T>,
    cone: &TangentCone<T>,
    u: &DVector<T>,
    backward: bool,
) -> T {
    let mut f = sys.field(&cone.vertex, u);
    if backward {
        f = -f;
    }
    cone.normals
        .iter()
        .map(|h| -h.dot(&f))
        .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
}

fn vertex_record<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    index: usize,
    inputs: &InputSet<T>,
) -> Result<VertexRecord<T>, IbcError> {
    let v = &x.vertices()[index];
    let cone = x.tangent_cone_at(index);
    let in_o = sys.is_equilibrium(v);
    let holding = in_o.then(|| sys.holding_input(v).iter().copied().collect());
    let (u, eps) = margin_lp(sys, &cone, v, inputs, T::one())?;
    let (ub, epsb) = margin_lp(sys, &cone, v, inputs, -T::one())?;
    Ok(VertexRecord {
        vertex: v.iter().copied().collect(),
        in_o,
        holding,
        invariance: record(u, eps, false),
        backward: record(ub, epsb, false),
        cone_dip: cone_dip(sys, &cone)?,
    })
}

/// Certifies or refutes in-block controllability of `sys` on `x` under `inputs`.
pub fn check_ibc<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
) -> Result<IbcCertificate<T>, IbcError> {
    check_ibc_with(sys, x, inputs, CheckOptions::default())
}

pub fn check_ibc_with<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
    options: CheckOptions,
) -> Result<IbcCertificate<T>, IbcError> {
    if x.dim() != sys.n() {
        return Err(IbcError::Dimension(format!("polytope has dimension {}, system has {} states", x.dim(), sys.n())));
    }
    if !x.origin_is_interior() {
        return Err(GeometryError::OriginNotInterior.into());
    }
    let records = (0..x.vertices().len())
        .map(|i| vertex_record(sys, x, i, inputs))
        .collect::<Result<Vec<_>, _>>()?;
    let controllable = sys.is_controllable();
    let simplicial = x.is_simplicial();
    let lp_tol = T::tolerances().lp;
    let mut cert = IbcCertificate {
        verdict: Verdict::NotIbc,
        route: None,
        controllable,
        simplicial,
        input_bounded: inputs.is_bounded(),
        vertices: records,
        failing: Vec::new(),
    };
    if !controllable {
        return Ok(cert);
    }
    let necessary: Vec<usize> = cert
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.invariance.feasible && r.backward.feasible))
        .map(|(i, _)| i)
        .collect();
    if !necessary.is_empty() {
        cert.failing = necessary;
        return Ok(cert);
    }

    let dip_ok = |r: &VertexRecord<T>| -> bool {
        if inputs.is_bounded() {
            let held = r.in_o
                && r.holding
                    .as_ref()
                    .is_some_and(|u| inputs.contains_interior(&DVector::from_column_slice(u), lp_tol));
            held || (r.cone_dip.feasible && r.invariance.is_strict() && r.backward.is_strict())
        } else {
            r.in_o || r.cone_dip.feasible
        }
    };
    let uncovered: Vec<usize> = cert
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, r)| !dip_ok(r))
        .map(|(i, _)| i)
        .collect();
    if uncovered.is_empty() {
        cert.verdict = Verdict::Ibc;
        cert.route = Some(Route::EquilibriumOrConeDip);
    } else if simplicial && (!inputs.is_bounded() || options.assume_input_mild) {
        cert.verdict = Verdict::Ibc;
        cert.route = Some(Route::SimplicialInvariance);
    } else {
        cert.verdict = Verdict::NecessaryOnly;
        cert.failing = uncovered;
    }
    Ok(cert)
}

/// Extends `p` by the scaled equilibrium components of its vertices.
pub fn construct_ibc_polytope<T: Scalar>(
    sys: &LinearSystem<T>,
    p: &Polytope<T>,
    alpha: T,
) -> Result<Polytope<T>, IbcError> {
    if alpha <= T::one() {
        return Err(IbcError::AlphaTooSmall {
            alpha: alpha.to_f64_lossy(),
        });
    }
    if p.dim() != sys.n() {
        return Err(IbcError::Dimension(format!("polytope has dimension {}, system has {} states", p.dim(), sys.n())));
    }
    if !sys.is_controllable() {
        return Err(SystemError::NotControllable.into());
    }
    if !p.origin_is_interior() {
        return Err(GeometryError::OriginNotInterior.into());
    }
    let dec = sys.decompose()?;
    let mut points: Vec<DVector<T>> = p.vertices().to_vec();
    for v in p.vertices() {
        points.push(dec.project(v) * alpha);
    }
    let x = Polytope::hull(&points)?;
    for (i, v) in x.vertices().iter().enumerate() {
        if sys.is_equilibrium(v) {
            continue;
        }
        let dip = cone_dip(sys, &x.tangent_cone_at(i))?;
        if !dip.feasible {
            return Err(IbcError::VertexConditionFails { vertex: to_f64_vec(v) });
        }
    }
    log::debug!("constructed polytope with {} vertices", x.vertices().len());
    Ok(x)
}

/// `1.00, 0.95, ..., 0.05`.
pub fn default_lambda_grid<T: Scalar>() -> Vec<T> {
    (1..=20).rev().map(|k| T::lit(k as f64 / 20.0)).collect()
}

/// Shrinks the listed coordinates of every non-equilibrium vertex by the
/// largest grid factor for which all of them pass the strict forward and
/// backward LPs under `inputs`.
pub fn rescale_velocity_axes<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
    axes: &[usize],
    grid: &[T],
) -> Result<(Polytope<T>, T), IbcError> {
    if let Some(&bad) = axes.iter().find(|&&a| a >= x.dim()) {
        return Err(IbcError::Dimension(format!("axis {bad} out of range for dimension {}", x.dim())));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    for &lambda in &grid {
        let points: Vec<DVector<T>> = x
            .vertices()
            .iter()
            .map(|v| {
                if sys.is_equilibrium(v) {
                    v.clone()
                } else {
                    let mut w = v.clone();
                    for &a in axes {
                        w[a] *= lambda;
                    }
                    w
                }
            })
            .collect();
        let scaled = Polytope::hull(&points)?;
        if passes_strict(sys, &scaled, inputs)? {
            log::debug!("velocity scale {lambda} accepted");
            return Ok((scaled, lambda));
        }
    }
    Err(IbcError::NoFeasibleScale {
        smallest: grid.last().map_or(f64::NAN, |l| l.to_f64_lossy()),
    })
}

/// Strict forward and backward LPs at every non-equilibrium vertex, and
/// holding inputs inside `inputs` at the equilibrium ones.
pub fn passes_strict<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
) -> Result<bool, IbcError> {
    let tol = T::tolerances().lp;
    let held = x
        .vertices()
        .iter()
        .filter(|v| sys.is_equilibrium(v))
        .all(|v| inputs.contains(&sys.holding_input(v), tol));
    Ok(held && strict_margin(sys, x, inputs)? > tol)
}

/// Smallest forward or backward LP margin over the non-equilibrium vertices
/// (`T::max_value()` when every vertex is an equilibrium).
pub fn strict_margin<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
) -> Result<T, IbcError> {
    let mut worst = T::max_value().unwrap_or(T::one());
    for (i, v) in x.vertices().iter().enumerate() {
        if sys.is_equilibrium(v) {
            continue;
        }
        let cone = x.tangent_cone_at(i);
        let (_, fwd) = margin_lp(sys, &cone, v, inputs, T::one())?;
        let (_, bwd) = margin_lp(sys, &cone, v, inputs, -T::one())?;
        worst = worst.min(fwd).min(bwd);
    }
    Ok(worst)
}
