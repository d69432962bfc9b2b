//! JSON documents for systems, polytopes, controllers and certificates, and
//! CSV for trajectories and obstacle traces.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polytope::{GeometryError, Polytope};
use crate::pwl::PwlController;
use crate::scalar::Scalar;
use crate::simulation::{ObstacleTrace, Sample, Trajectory};
use crate::system::{AffineSystem, LinearSystem, SystemError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    System(#[from] SystemError),
}

fn schema(msg: impl Into<String>) -> IoError {
    IoError::Schema(msg.into())
}

fn to_vec<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn from_slice<T: Scalar>(v: &[f64]) -> DVector<T> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| T::lit(x)))
}

fn rows_to_matrix<T: Scalar>(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<T>, IoError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(schema(format!("{name} must be a nonempty rectangular array of rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| T::lit(rows[i][j])))
}

fn matrix_to_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_f64_lossy()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "a", default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

impl SystemDoc {
    pub fn from_system<T: Scalar>(sys: &LinearSystem<T>) -> Self {
        Self {
            a: matrix_to_rows(sys.a()),
            b: matrix_to_rows(sys.b()),
            offset: None,
        }
    }

    pub fn affine<T: Scalar>(&self) -> Result<AffineSystem<T>, IoError> {
        let a = rows_to_matrix::<T>(&self.a, "A")?;
        let b = rows_to_matrix::<T>(&self.b, "B")?;
        let offset = match &self.offset {
            Some(v) => from_slice(v),
            None => DVector::zeros(a.nrows()),
        };
        Ok(AffineSystem::new(a, b, offset)?)
    }

    /// The system shifted so that its offset vanishes.
    pub fn linear<T: Scalar>(&self) -> Result<LinearSystem<T>, IoError> {
        Ok(self.affine()?.shift_to_linear()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceDoc {
    pub n: Vec<f64>,
    pub c: f64,
}

/// A polytope given by vertices, half-spaces or both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<Vec<HalfspaceDoc>>,
}

impl PolytopeDoc {
    pub fn from_polytope<T: Scalar>(p: &Polytope<T>) -> Self {
        Self {
            dim: p.dim(),
            vertices: Some(p.vertices().iter().map(to_vec).collect()),
            halfspaces: Some(
                p.halfspaces()
                    .iter()
                    .map(|h| HalfspaceDoc {
                        n: to_vec(&h.normal),
                        c: h.offset.to_f64_lossy(),
                    })
                    .collect(),
            ),
        }
    }

    /// Builds from the vertices when present, otherwise from the
    /// half-spaces; when both are given every vertex must satisfy every
    /// half-space.
    pub fn polytope<T: Scalar>(&self) -> Result<Polytope<T>, IoError> {
        let check_len = |v: &[f64], what: &str| {
            if v.len() == self.dim {
                Ok(())
            } else {
                Err(schema(format!("{what} has length {} but dim is {}", v.len(), self.dim)))
            }
        };
        let halfspaces = match &self.halfspaces {
            Some(hs) => {
                let mut out = Vec::with_capacity(hs.len());
                for h in hs {
                    check_len(&h.n, "half-space normal")?;
                    out.push((from_slice::<T>(&h.n), T::lit(h.c)));
                }
                Some(out)
            }
            None => None,
        };
        match (&self.vertices, halfspaces) {
            (Some(vs), hs) => {
                let mut pts = Vec::with_capacity(vs.len());
                for v in vs {
                    check_len(v, "vertex")?;
                    pts.push(from_slice::<T>(v));
                }
                let p = Polytope::hull(&pts)?;
                if let Some(hs) = hs {
                    let tol = p.tolerance();
                    for v in p.vertices() {
                        for (n, c) in &hs {
                            if n.dot(v) - *c > tol * (T::one() + n.norm()) {
                                return Err(GeometryError::Inconsistent { point: to_vec(v) }.into());
                            }
                        }
                    }
                }
                Ok(p)
            }
            (None, Some(hs)) => Ok(Polytope::from_halfspaces(self.dim, &hs)?),
            (None, None) => Err(schema("polytope needs vertices or halfspaces")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerDoc {
    pub dim: usize,
    pub input_dim: usize,
    /// Fan points; the first is the origin.
    pub points: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    /// Row-major `m x n` gain per simplex.
    pub gains: Vec<Vec<Vec<f64>>>,
    pub vertex_controls: Vec<Vec<f64>>,
    /// Normalized facet normals of the Lyapunov function.
    pub normals: Vec<Vec<f64>>,
}

impl ControllerDoc {
    pub fn from_controller<T: Scalar>(c: &PwlController<T>) -> Self {
        let tri = c.triangulation();
        Self {
            dim: tri.points.first().map_or(0, |p| p.len()),
            input_dim: c.input_dim(),
            points: tri.points.iter().map(to_vec).collect(),
            simplices: tri.simplices.clone(),
            gains: c.gains().iter().map(matrix_to_rows).collect(),
            vertex_controls: c.vertex_controls().iter().map(to_vec).collect(),
            normals: c.normals().iter().map(to_vec).collect(),
        }
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<D: serde::de::DeserializeOwned>(text: &str) -> Result<D, IoError> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data | serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            schema(e.to_string())
        }
        serde_json::error::Category::Io => IoError::Json(e),
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header `t, x1..xn, u1..um, V, violation`; floats carry 17 significant
/// digits, a missing level is an empty field.
pub fn write_trajectory_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, out: W) -> Result<(), IoError> {
    let n = traj.samples.first().map_or(0, |s| s.x.len());
    let m = traj.samples.iter().map(|s| s.u.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.push("V".into());
    header.push("violation".into());
    w.write_record(&header)?;
    for s in &traj.samples {
        let mut row = vec![fmt_float(s.t.to_f64_lossy())];
        row.extend(s.x.iter().map(|v| fmt_float(v.to_f64_lossy())));
        row.extend((0..m).map(|i| s.u.get(i).map_or_else(String::new, |v| fmt_float(v.to_f64_lossy()))));
        row.push(s.v.map_or_else(String::new, |v| fmt_float(v.to_f64_lossy())));
        row.push(s.violation.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory<f64>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with('x')).count();
    let m = header.iter().filter(|h| h.starts_with('u')).count();
    if header.len() != n + m + 3 || header.get(0) != Some("t") {
        return Err(schema("trajectory header must be t, x1.., u1.., V, violation"));
    }
    let parse = |f: &str| -> Result<f64, IoError> { f.parse().map_err(|_| schema(format!("bad number {f:?}"))) };
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let t = parse(&rec[0])?;
        let x = (1..=n).map(|i| parse(&rec[i])).collect::<Result<Vec<_>, _>>()?;
        let u = (n + 1..=n + m)
            .filter(|&i| !rec[i].is_empty())
            .map(|i| parse(&rec[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let v = match &rec[n + m + 1] {
            "" => None,
            s => Some(parse(s)?),
        };
        let violation = match &rec[n + m + 2] {
            "true" => true,
            "false" => false,
            s => return Err(schema(format!("bad violation flag {s:?}"))),
        };
        samples.push(Sample {
            t,
            x: DVector::from_vec(x),
            u: DVector::from_vec(u),
            v,
            violation,
        });
    }
    let dt = if samples.len() > 1 { samples[1].t - samples[0].t } else { 0.0 };
    let mut traj = Trajectory::new(dt, "", "");
    traj.samples = samples;
    Ok(traj)
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    t: f64,
    x: f64,
    y: f64,
}

pub fn write_obstacle_csv<W: Write>(trace: &ObstacleTrace, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y"])?;
    for (t, p) in trace.times.iter().zip(&trace.positions) {
        w.write_record([fmt_float(*t), fmt_float(p[0]), fmt_float(p[1])])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_obstacle_csv<R: Read>(input: R) -> Result<ObstacleTrace, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["t", "x", "y"] {
        return Err(schema("obstacle trace header must be t, x, y"));
    }
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        let row = row?;
        times.push(row.t);
        positions.push([row.x, row.y]);
    }
    ObstacleTrace::new(times, positions).map_err(|e| schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibc::{construct_ibc_polytope, InputSet};
    use crate::pwl::build_pwl;

    #[test]
    fn system_doc_shift() {
        let doc: SystemDoc = from_json(r#"{"A": [[0, 1], [0, 0]], "B": [[0], [1]], "a": [0, -10]}"#).unwrap();
        let sys = doc.linear::<f64>().unwrap();
        assert!((sys.shift().w[0] + 10.0).abs() < 1e-12);
        assert!(matches!(
            from_json::<SystemDoc>(r#"{"A": [[0]], "B": [[1]], "extra": 1}"#),
            Err(IoError::Schema(_))
        ));
        assert!(matches!(
            SystemDoc {
                a: vec![vec![0.0, 1.0], vec![0.0]],
                b: vec![vec![1.0]],
                offset: None
            }
            .linear::<f64>(),
            Err(IoError::Schema(_))
        ));
    }

    #[test]
    fn polytope_round_trip() {
        let sys = LinearSystem::<f64>::double_integrator(1);
        let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
        let x = construct_ibc_polytope(&sys, &p, 1.25).unwrap();
        let text = to_json(&PolytopeDoc::from_polytope(&x)).unwrap();
        let back = from_json::<PolytopeDoc>(&text).unwrap().polytope::<f64>().unwrap();
        assert!(back.same_vertices(&x, 0.0));
        let only_h = PolytopeDoc {
            vertices: None,
            ..PolytopeDoc::from_polytope(&x)
        };
        assert!(only_h.polytope::<f64>().unwrap().same_vertices(&x, 1e-9));
    }

    #[test]
    fn inconsistent_polytope_doc() {
        let doc = PolytopeDoc {
            dim: 1,
            vertices: Some(vec![vec![-1.0], vec![1.0]]),
            halfspaces: Some(vec![HalfspaceDoc { n: vec![1.0], c: 0.5 }]),
        };
        assert!(matches!(
            doc.polytope::<f64>(),
            Err(IoError::Geometry(GeometryError::Inconsistent { .. }))
        ));
    }

    #[test]
    fn controller_doc_shapes() {
        let sys = LinearSystem::<f64>::double_integrator(1);
        let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
        let x = construct_ibc_polytope(&sys, &p, 1.25).unwrap();
        let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        let doc = ControllerDoc::from_controller(&c);
        assert_eq!((doc.dim, doc.input_dim), (2, 1));
        assert_eq!(doc.gains.len(), 6);
        assert_eq!(doc.points.len(), 7);
        assert_eq!(doc.gains[0].len(), 1);
        assert_eq!(doc.gains[0][0].len(), 2);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let mut tr = Trajectory::new(0.1, "p", "s");
        for k in 0..3 {
            tr.samples.push(Sample {
                t: k as f64 * 0.1,
                x: DVector::from_vec(vec![1.0 / 3.0, -2.5e-17 * k as f64]),
                u: DVector::from_vec(vec![std::f64::consts::PI]),
                v: if k == 1 { None } else { Some(0.7) },
                violation: k == 2,
            });
        }
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,u1,V,violation\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples, tr.samples);
    }

    #[test]
    fn obstacle_csv_round_trip() {
        let trace = ObstacleTrace::sinusoid(1.5, 0.1, 70.0, 1.0);
        let mut buf = Vec::new();
        write_obstacle_csv(&trace, &mut buf).unwrap();
        let back = read_obstacle_csv(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
        assert!(read_obstacle_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
