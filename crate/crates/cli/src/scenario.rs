//! Scenario documents for `simulate` and `avoid`.

use std::fmt::Write as _;
use std::path::Path;

use ibckit::ibc::InputSet;
use ibckit::io::{from_json, read_obstacle_csv, write_obstacle_csv, write_trajectory_csv, PolytopeDoc, SystemDoc};
use ibckit::pwl::build_pwl;
use ibckit::robots::{safe_speed_profile, ArmParams, AxisSpec};
use ibckit::simulation::{
    gramian_run, integrate, obstacle_avoidance_run, safe_steer, unicycle_mission, unicycle_pd_baseline, AvoidanceOptions,
    EgoReference, MissionOptions, Monitor, NoMonitor, ObstacleTrace, RegionMonitor, SimError, SteerOptions,
};
use ibckit::{LinearSystem, Polytope, PwlController, Trajectory};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::commands::{lambda_grid, parse_input_box, write_json};
use crate::error::CliError;
use crate::manifest::Recorder;
use crate::RunFlags;

fn default_dt() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    10.0
}

fn default_gain() -> f64 {
    4.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plant {
    /// The linear model itself.
    #[default]
    Linear,
    /// Single-link arm driven through its linearizing torque.
    Arm,
}

/// Where the region and feedback come from: an explicit system and
/// polytope, or an axis document for a double integrator.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSetup {
    #[serde(default)]
    system: Option<SystemDoc>,
    #[serde(default)]
    region: Option<PolytopeDoc>,
    #[serde(default)]
    axis: Option<AxisSpec<f64>>,
    /// One `[lo, hi]` pair per input.
    #[serde(default)]
    input_box: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    plant: Plant,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    xf: Option<Vec<f64>>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnicycleSetup {
    x0: [f64; 4],
    xf: [f64; 4],
    /// Per-axis profile; both axes share it.
    #[serde(default)]
    axis: Option<AxisSpec<f64>>,
    #[serde(default = "default_gain")]
    kp: f64,
    #[serde(default = "default_gain")]
    kd: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default)]
    horizon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SimulateScenario {
    Pwl(LinearSetup),
    SafeSteer(LinearSetup),
    Gramian(LinearSetup),
    UnicycleMission(UnicycleSetup),
    UnicyclePd(UnicycleSetup),
}

pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub input_box: Vec<String>,
    pub lambda_grid: Option<Vec<f64>>,
    pub seed: u64,
}

struct Resolved {
    sys: LinearSystem<f64>,
    region: Option<Polytope<f64>>,
    controller: Option<PwlController<f64>>,
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != n {
        return Err(CliError::schema(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

impl LinearSetup {
    fn resolve(&self, ov: &Overrides, need_controller: bool) -> Result<Resolved, CliError> {
        match (&self.axis, &self.region) {
            (Some(_), Some(_)) => Err(CliError::schema("give either 'axis' or 'region', not both")),
            (Some(spec), None) => {
                if self.system.is_some() || self.input_box.is_some() {
                    return Err(CliError::schema("'axis' scenarios fix the system and input bounds"));
                }
                if spec.center() != 0.0 {
                    return Err(CliError::schema("'axis' position bounds must be centred on 0"));
                }
                let prof = safe_speed_profile(spec, &lambda_grid(ov.lambda_grid.clone())?)?;
                Ok(Resolved {
                    sys: LinearSystem::double_integrator(1),
                    region: Some(prof.local_region),
                    controller: Some(prof.controller),
                })
            }
            (None, region) => {
                let sys: LinearSystem<f64> = self
                    .system
                    .as_ref()
                    .ok_or_else(|| CliError::schema("scenario needs 'system' or 'axis'"))?
                    .linear()?;
                let region = region.as_ref().map(|r| r.polytope::<f64>()).transpose()?;
                let inputs = self.inputs(ov, sys.m())?;
                let controller = match &region {
                    Some(x) if need_controller => Some(build_pwl(&sys, x, &inputs)?),
                    None if need_controller => return Err(CliError::schema("scenario needs 'region' or 'axis'")),
                    _ => None,
                };
                Ok(Resolved { sys, region, controller })
            }
        }
    }

    fn inputs(&self, ov: &Overrides, m: usize) -> Result<InputSet<f64>, CliError> {
        if !ov.input_box.is_empty() {
            return parse_input_box(&ov.input_box, m);
        }
        match &self.input_box {
            None => Ok(InputSet::Unbounded),
            Some(b) => {
                let specs: Vec<String> = b.iter().map(|[lo, hi]| format!("{lo}:{hi}")).collect();
                parse_input_box(&specs, m)
            }
        }
    }

    fn start(&self, r: &Resolved, seed: u64) -> Result<DVector<f64>, CliError> {
        if let Some(x0) = &self.x0 {
            return vector(x0, r.sys.n(), "x0");
        }
        let region = r
            .region
            .as_ref()
            .ok_or_else(|| CliError::schema("'x0' is required without a region"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        region
            .sample_interior(&mut rng, 1)
            .pop()
            .ok_or_else(|| CliError::schema("could not draw a start state from the region"))
    }
}

type Field = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>>;

fn plant(kind: Plant, sys: &LinearSystem<f64>) -> Result<Field, CliError> {
    match kind {
        Plant::Linear => {
            let sys = sys.clone();
            Ok(Box::new(move |x, u| sys.field(x, u)))
        }
        Plant::Arm => {
            if sys.n() != 2 || sys.m() != 1 {
                return Err(CliError::schema("the arm plant needs a 2-state, 1-input model"));
            }
            let arm = ArmParams::<f64>::default();
            Ok(Box::new(move |x, u| arm.dynamics(x, arm.fblin(x, u[0]))))
        }
    }
}

fn run_linear(kind: &str, s: &LinearSetup, ov: &Overrides) -> Result<Trajectory<f64>, CliError> {
    let dt = ov.dt.unwrap_or(s.dt);
    let horizon = ov.horizon.unwrap_or(s.horizon);
    let r = s.resolve(ov, kind != "gramian")?;
    let x0 = s.start(&r, ov.seed)?;
    let field = plant(s.plant, &r.sys)?;
    let xf = || {
        s.xf
            .as_ref()
            .ok_or_else(|| CliError::schema(format!("'{kind}' needs 'xf'")))
            .and_then(|v| vector(v, r.sys.n(), "xf"))
    };
    let mut traj = match kind {
        "pwl" => {
            let (region, ctrl) = (r.region.as_ref().unwrap(), r.controller.as_ref().unwrap());
            let monitor = RegionMonitor::new(region, Some(ctrl));
            let policy = |t: f64, x: &DVector<f64>| ctrl.eval(x).map_err(|e| SimError::policy(t, x, e));
            integrate(&*field, policy, &x0, dt, horizon, &monitor)?
        }
        "safe_steer" => {
            let (region, ctrl) = (r.region.as_ref().unwrap(), r.controller.as_ref().unwrap());
            let opts = SteerOptions {
                dt,
                ..Default::default()
            };
            safe_steer(&r.sys, &*field, region, ctrl, &x0, &xf()?, horizon, &opts)?
        }
        _ => {
            let monitor: Box<dyn Monitor<f64> + '_> = match &r.region {
                Some(x) => Box::new(RegionMonitor::new(x, r.controller.as_ref())),
                None => Box::new(NoMonitor),
            };
            gramian_run(&r.sys, &*field, &*monitor, &x0, &xf()?, horizon, dt)?
        }
    };
    traj.policy = kind.into();
    Ok(traj)
}

fn run_unicycle(pd: bool, s: &UnicycleSetup, ov: &Overrides) -> Result<Trajectory<f64>, CliError> {
    let mut opts = MissionOptions {
        dt: ov.dt.unwrap_or(s.dt),
        ..Default::default()
    };
    if let Some(h) = ov.horizon.or(s.horizon) {
        opts.horizon = h;
    }
    let x0 = DVector::from_column_slice(&s.x0);
    let xf = DVector::from_column_slice(&s.xf);
    if pd {
        return Ok(unicycle_pd_baseline(&x0, &xf, s.kp, s.kd, &opts)?);
    }
    let spec = s.axis.clone().unwrap_or_else(|| AxisSpec::symmetric(30.0, 7.0, 5.0, Some(1.5)));
    let prof = safe_speed_profile(&spec, &lambda_grid(ov.lambda_grid.clone())?)?;
    let outcome = unicycle_mission([&prof, &prof], &x0, &xf, &opts)?;
    for (phase, t) in &outcome.phases {
        log::info!("phase {phase:?} from t = {t:.3}");
    }
    Ok(outcome.trajectory)
}

fn csv_bytes(traj: &Trajectory<f64>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf)?;
    Ok(buf)
}

pub fn simulate(rec: &mut Recorder, out: &Path, path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let scenario: SimulateScenario = from_json(&rec.read(path)?)?;
    let (name, traj) = match &scenario {
        SimulateScenario::Pwl(s) => ("pwl", run_linear("pwl", s, ov)),
        SimulateScenario::SafeSteer(s) => ("safe_steer", run_linear("safe_steer", s, ov)),
        SimulateScenario::Gramian(s) => ("gramian", run_linear("gramian", s, ov)),
        SimulateScenario::UnicycleMission(s) => ("unicycle_mission", run_unicycle(false, s, ov)),
        SimulateScenario::UnicyclePd(s) => ("unicycle_pd", run_unicycle(true, s, ov)),
    };
    let mut traj = traj?;
    traj.scenario = path.file_stem().map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned());
    rec.write(&out.join("trajectory.csv"), &csv_bytes(&traj)?)?;
    let last = traj.final_state().map(|x| x.iter().copied().collect::<Vec<_>>()).unwrap_or_default();
    println!(
        "{name}: {} samples, {} violations, final state {last:?}",
        traj.len(),
        traj.violations()
    );
    if let Some(s) = traj.first_violation() {
        eprintln!("first violation at t = {:.4}, state {:?}", s.t, s.x.as_slice());
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ObstacleDoc {
    /// `x = amplitude cos(2 pi f t)`, `y = 0`.
    Sinusoid { amplitude: f64, frequency: f64 },
    Parked([f64; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDoc {
    center: [f64; 2],
    amplitude: [f64; 2],
    frequency: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvoidScenario {
    reference: ReferenceDoc,
    #[serde(default)]
    obstacle: Option<ObstacleDoc>,
    #[serde(default = "default_true")]
    replanning: bool,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    safety_radius: Option<f64>,
}

#[derive(Serialize)]
struct AvoidSummary {
    replanning: bool,
    samples: usize,
    violations: usize,
    min_distance: f64,
    safety_radius: f64,
    clear: bool,
    rebuilds: usize,
    shrunk_ticks: usize,
}

pub fn avoid(
    rec: &mut Recorder,
    out: &Path,
    path: &Path,
    obstacle_csv: Option<&Path>,
    run: &RunFlags,
) -> Result<(), CliError> {
    let scenario: AvoidScenario = from_json(&rec.read(path)?)?;
    let mut opts = AvoidanceOptions {
        replanning: scenario.replanning,
        ..Default::default()
    };
    if let Some(h) = run.horizon.or(scenario.horizon) {
        opts.horizon = h;
    }
    if let Some(r) = scenario.safety_radius {
        opts.safety_radius = r;
    }
    if let Some(dt) = run.dt {
        if dt.is_nan() || dt <= 0.0 {
            return Err(SimError::BadStep(dt).into());
        }
        opts.substeps = ((1.0 / (opts.rate * dt)).round() as usize).max(1);
    }
    let duration = opts.horizon + opts.prediction;
    let trace = match (obstacle_csv, &scenario.obstacle) {
        (Some(p), _) => read_obstacle_csv(rec.read(p)?.as_bytes())?,
        (None, Some(ObstacleDoc::Sinusoid { amplitude, frequency })) => {
            ObstacleTrace::sinusoid(*amplitude, *frequency, opts.rate, duration)
        }
        (None, Some(ObstacleDoc::Parked(at))) => ObstacleTrace::parked(*at, duration),
        (None, None) => return Err(CliError::schema("scenario has no 'obstacle' and no obstacle CSV was given")),
    };
    let r = &scenario.reference;
    let reference = EgoReference {
        center: r.center,
        amplitude: r.amplitude,
        frequency: r.frequency,
    };
    let outcome = obstacle_avoidance_run(&reference, &trace, &opts)?;
    let mut traj = outcome.trajectory.clone();
    traj.scenario = "avoid".into();
    rec.write(&out.join("trajectory.csv"), &csv_bytes(&traj)?)?;
    let mut dist = String::from("t,obstacle_x,obstacle_y,distance\n");
    for ((s, o), d) in traj.samples.iter().zip(&outcome.obstacle).zip(&outcome.distances) {
        writeln!(dist, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, o[0], o[1], d).expect("write to string");
    }
    rec.write(&out.join("distance.csv"), dist.as_bytes())?;
    if obstacle_csv.is_none() {
        let mut buf = Vec::new();
        write_obstacle_csv(&trace, &mut buf)?;
        rec.write(&out.join("obstacle.csv"), &buf)?;
    }
    let summary = AvoidSummary {
        replanning: opts.replanning,
        samples: traj.len(),
        violations: traj.violations(),
        min_distance: outcome.min_distance,
        safety_radius: opts.safety_radius,
        clear: outcome.min_distance > opts.safety_radius,
        rebuilds: outcome.rebuild_seconds.len(),
        shrunk_ticks: outcome.shrunk_ticks,
    };
    write_json(rec, &out.join("summary.json"), &summary)?;
    println!(
        "min distance {:.4} m (radius {}), {} violations, {} rebuilds",
        summary.min_distance, summary.safety_radius, summary.violations, summary.rebuilds
    );
    if let Some(m) = outcome.median_rebuild_seconds() {
        println!("median rebuild {:.3} ms", m * 1e3);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ibckit::Membership;

    fn parse(text: &str) -> Result<SimulateScenario, CliError> {
        Ok(from_json(text)?)
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = parse(r#"{"policy":"pwl","axis":{"pos":[-1,1],"vel":[-1,1],"input":[-1,1]},"extra":1}"#).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(parse(r#"{"policy":"teleport"}"#).is_err());
    }

    #[test]
    fn axis_scenario_resolves_to_double_integrator() {
        let SimulateScenario::Pwl(s) =
            parse(r#"{"policy":"pwl","axis":{"pos":[-1,1],"vel":[-1,1],"input":[-2,2]}}"#).unwrap()
        else {
            panic!("wrong variant");
        };
        let ov = Overrides {
            dt: None,
            horizon: None,
            input_box: vec![],
            lambda_grid: None,
            seed: 3,
        };
        let r = s.resolve(&ov, true).unwrap();
        assert_eq!(r.sys.n(), 2);
        let x0 = s.start(&r, 3).unwrap();
        assert_eq!(r.region.as_ref().unwrap().membership(&x0), Membership::Interior);
        assert_eq!(x0, s.start(&r, 3).unwrap());
    }

    #[test]
    fn off_centre_axis_is_rejected() {
        let SimulateScenario::Pwl(s) =
            parse(r#"{"policy":"pwl","axis":{"pos":[0,2],"vel":[-1,1],"input":[-2,2]}}"#).unwrap()
        else {
            panic!("wrong variant");
        };
        let ov = Overrides {
            dt: None,
            horizon: None,
            input_box: vec![],
            lambda_grid: None,
            seed: 0,
        };
        assert_eq!(s.resolve(&ov, true).err().unwrap().code, 2);
    }
}
