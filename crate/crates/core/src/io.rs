//! Trajectory files and plot series.
//!
//! A trajectory CSV has one row per knot: time, base position, orientation
//! quaternion `(w, x, y, z)`, body twist, footholds, forces, foothold
//! velocities and joint angles. The final knot carries no control, so its
//! control cells are empty. Floats are written in shortest round-trip form.

use std::path::{Path, PathBuf};

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};

use crate::centroidal::{Control, ControlVector};
use crate::manifold::{Pose, State};
use crate::robot::{implicit_configuration, RobotParams, LEG_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
}

/// States `x_0..x_N` at their times and controls `u_0..u_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub xs: Vec<State>,
    pub us: Vec<Control>,
}

impl Trajectory {
    pub fn new(dt: f64, xs: Vec<State>, us: &[DVector<f64>]) -> Self {
        Self {
            times: (0..xs.len()).map(|k| k as f64 * dt).collect(),
            xs,
            us: us
                .iter()
                .map(|u| Control(ControlVector::from_column_slice(u.as_slice())))
                .collect(),
        }
    }

    pub fn header() -> Vec<String> {
        let mut h: Vec<String> = [
            "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for prefix in ["r", "f", "rdot"] {
            for leg in LEG_NAMES {
                for axis in ["x", "y", "z"] {
                    h.push(format!("{prefix}_{leg}_{axis}"));
                }
            }
        }
        for leg in LEG_NAMES {
            for joint in ["haa", "hfe", "kfe"] {
                h.push(format!("q_{leg}_{joint}"));
            }
        }
        h
    }

    pub fn write_csv(&self, path: &Path, params: &RobotParams) -> Result<(), IoError> {
        let err = |source| IoError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(Self::header()).map_err(err)?;
        for (k, x) in self.xs.iter().enumerate() {
            let mut state = vec![self.times[k]];
            state.extend(x.pose.position.iter());
            state.extend(x.pose.quaternion_wxyz());
            state.extend(x.v.iter().chain(x.omega.iter()));
            state.extend(x.feet.iter().flat_map(|r| r.iter()));
            let mut row: Vec<String> = state.iter().map(f64::to_string).collect();
            match self.us.get(k) {
                Some(u) => {
                    let forces = (0..4).flat_map(|l| u.force(l).data.0[0]);
                    let velocities = (0..4).flat_map(|l| u.foot_velocity(l).data.0[0]);
                    row.extend(forces.chain(velocities).map(|v| v.to_string()));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 24)),
            }
            row.extend(implicit_configuration(params, x).0.iter().map(f64::to_string));
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self, IoError> {
        let display = path.display().to_string();
        let mut r = csv::Reader::from_path(path).map_err(|source| IoError::Csv {
            path: display.clone(),
            source,
        })?;
        let format = |line: usize, message: String| IoError::Format {
            path: display.clone(),
            line,
            message,
        };
        let headers = r.headers().map_err(|source| IoError::Csv {
            path: display.clone(),
            source,
        })?;
        if headers.iter().ne(Self::header().iter().map(String::as_str)) {
            return Err(format(1, "unexpected header".into()));
        }
        let mut out = Trajectory {
            times: Vec::new(),
            xs: Vec::new(),
            us: Vec::new(),
        };
        let mut ended = false;
        for (i, record) in r.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|source| IoError::Csv {
                path: display.clone(),
                source,
            })?;
            if ended {
                return Err(format(line, "row after the final knot".into()));
            }
            let cell = |c: usize| -> Result<f64, IoError> {
                record[c]
                    .parse::<f64>()
                    .map_err(|e| format(line, format!("column {}: {e}", Self::header()[c])))
            };
            let v3 =
                |c: usize| -> Result<Vector3<f64>, IoError> { Ok(Vector3::new(cell(c)?, cell(c + 1)?, cell(c + 2)?)) };
            out.times.push(cell(0)?);
            let q = Quaternion::new(cell(4)?, cell(5)?, cell(6)?, cell(7)?);
            let feet = [v3(14)?, v3(17)?, v3(20)?, v3(23)?];
            out.xs.push(State {
                pose: Pose::new(v3(1)?, UnitQuaternion::new_unchecked(q)),
                v: v3(8)?,
                omega: v3(11)?,
                feet,
            });
            if record[26].is_empty() {
                ended = true;
                continue;
            }
            let mut u = Control::zeros();
            for leg in 0..4 {
                u.set_force(leg, v3(26 + 3 * leg)?);
                u.set_foot_velocity(leg, v3(38 + 3 * leg)?);
            }
            out.us.push(u);
        }
        if out.xs.len() != out.us.len() + 1 {
            return Err(format(0, "the final knot must have empty control cells".into()));
        }
        Ok(out)
    }
}

fn write_series(dir: &Path, name: &str, header: &str, rows: impl Iterator<Item = String>) -> Result<PathBuf, IoError> {
    let path = dir.join(name);
    let mut text = format!("{header}\n");
    for row in rows {
        text += &row;
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes `base_height.csv`, `yaw.csv`, `foot_height.csv` and `force_z.csv`
/// into `dir` and returns their paths.
pub fn export_plots(trajectory: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let t = &trajectory.times;
    let xs = trajectory.xs.iter().enumerate();
    let legs = format!("t,{}", LEG_NAMES.join(","));
    let four = |k: usize, v: [f64; 4]| format!("{},{},{},{},{}", t[k], v[0], v[1], v[2], v[3]);
    Ok(vec![
        write_series(
            dir,
            "base_height.csv",
            "t,base_height",
            xs.clone().map(|(k, x)| format!("{},{}", t[k], x.pose.position.z)),
        )?,
        write_series(
            dir,
            "yaw.csv",
            "t,yaw_deg",
            xs.clone()
                .map(|(k, x)| format!("{},{}", t[k], x.pose.yaw().to_degrees())),
        )?,
        write_series(
            dir,
            "foot_height.csv",
            &legs,
            xs.map(|(k, x)| four(k, x.feet.map(|r| r.z))),
        )?,
        write_series(
            dir,
            "force_z.csv",
            &legs,
            trajectory
                .us
                .iter()
                .enumerate()
                .map(|(k, u)| four(k, std::array::from_fn(|l| u.force(l).z))),
        )?,
    ])
}
