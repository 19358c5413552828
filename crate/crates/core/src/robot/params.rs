//! Robot description: inertial parameters, leg geometry and workspace.
//!
//! The default description is an ANYmal-C-sized quadruped (55 kg). Only the
//! total mass follows the real robot; link geometry and inertias are plausible
//! placeholders and should be replaced with a measured description.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use super::RobotError;

pub const LEG_NAMES: [&str; 4] = ["lf", "lh", "rf", "rh"];

/// Leg index in the fixed LF, LH, RF, RH order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LegId {
    LF = 0,
    LH = 1,
    RF = 2,
    RH = 3,
}

impl LegId {
    pub const ALL: [LegId; 4] = [LegId::LF, LegId::LH, LegId::RF, LegId::RH];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_left(self) -> bool {
        matches!(self, LegId::LF | LegId::LH)
    }

    pub fn is_fore(self) -> bool {
        matches!(self, LegId::LF | LegId::RF)
    }

    /// Leg obtained by reflecting through the sagittal plane.
    pub fn mirrored(self) -> LegId {
        match self {
            LegId::LF => LegId::RF,
            LegId::LH => LegId::RH,
            LegId::RF => LegId::LF,
            LegId::RH => LegId::LH,
        }
    }
}

/// Rigid link: mass, CoM offset in the link frame, rotational inertia about
/// the CoM in the link frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

/// Which way the knee bends, fixing the IK branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KneeBranch {
    /// Knee points backward; knee angle ≤ 0.
    Backward,
    /// Knee points forward; knee angle ≥ 0.
    Forward,
}

impl KneeBranch {
    pub fn sign(self) -> f64 {
        match self {
            KneeBranch::Backward => -1.0,
            KneeBranch::Forward => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegParams {
    /// HAA joint origin in the base frame.
    pub hip: Vector3<f64>,
    /// Signed lateral offset from the HAA axis to the HFE joint (positive to the left).
    pub lateral_offset: f64,
    pub thigh: f64,
    pub shank: f64,
    pub knee: KneeBranch,
    /// Hip, thigh and shank links.
    pub links: [Link; 3],
}

impl LegParams {
    /// Distance from the hip to the foot with the knee fully stretched.
    pub fn full_reach(&self) -> f64 {
        (self.lateral_offset.powi(2) + (self.thigh + self.shank).powi(2)).sqrt()
    }

    pub fn mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }
}

/// Spherical-shell workspace about each hip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub r_min: f64,
    pub r_max: f64,
    /// Normalisation margin ε.
    pub margin: f64,
}

/// Lower and upper limits for HAA, HFE and KFE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub gravity: Vector3<f64>,
    pub base: Link,
    pub legs: [LegParams; 4],
    pub workspace: Workspace,
    pub limits: JointLimits,
}

impl RobotParams {
    pub fn mass(&self) -> f64 {
        self.base.mass + self.legs.iter().map(LegParams::mass).sum::<f64>()
    }

    pub fn leg(&self, leg: LegId) -> &LegParams {
        &self.legs[leg.index()]
    }

    /// Built-in 55 kg description.
    pub fn default_quadruped() -> Self {
        Self::from_toml_str(DEFAULT_ROBOT, Path::new("<builtin robot>")).expect("builtin robot description is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, RobotError> {
        let text = std::fs::read_to_string(path).map_err(|e| RobotError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, RobotError> {
        let file: RobotFile = toml::from_str(text).map_err(|e| RobotError::Parse {
            path: path.display().to_string(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        file.into_params()
            .and_then(|p| p.validate().map(|_| p))
            .map_err(|(key, message)| RobotError::Invalid {
                path: path.display().to_string(),
                line: find_key_line(text, &key),
                key,
                message,
            })
    }

    fn validate(&self) -> Result<(), (String, String)> {
        let spd = |key: String, link: &Link| -> Result<(), (String, String)> {
            let i = link.inertia;
            if (i - i.transpose()).amax() > 1e-12 {
                return Err((key, "inertia is not symmetric".into()));
            }
            if i.symmetric_eigenvalues().min() <= 0.0 {
                return Err((key, "inertia is not positive definite".into()));
            }
            if link.mass <= 0.0 {
                return Err((key, "mass must be positive".into()));
            }
            Ok(())
        };
        spd("base.inertia".into(), &self.base)?;
        for (name, leg) in LEG_NAMES.iter().zip(&self.legs) {
            for (lname, link) in ["hip_link", "thigh_link", "shank_link"].iter().zip(&leg.links) {
                spd(format!("legs.{name}.{lname}.inertia"), link)?;
            }
            if leg.thigh <= 0.0 || leg.shank <= 0.0 {
                return Err((format!("legs.{name}.thigh"), "link lengths must be positive".into()));
            }
            if self.workspace.r_max > leg.full_reach() + 1e-12 {
                return Err((
                    "workspace.r_max".into(),
                    format!("exceeds the full reach {:.4} m of leg {name}", leg.full_reach()),
                ));
            }
            let folded = (leg.lateral_offset.powi(2) + (leg.thigh - leg.shank).powi(2)).sqrt();
            if self.workspace.r_min <= folded {
                return Err((
                    "workspace.r_min".into(),
                    format!("must exceed the folded reach {folded:.4} m of leg {name}"),
                ));
            }
        }
        let w = self.workspace;
        if !(0.0 < w.r_min && w.r_min + 2.0 * w.margin < w.r_max) {
            return Err((
                "workspace".into(),
                "requires 0 < r_min < r_max with room for the margin".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort line lookup for a dotted key such as `legs.lf.thigh`.
pub(crate) fn find_key_line(text: &str, key: &str) -> usize {
    let parts: Vec<&str> = key.split('.').collect();
    let last = parts.last().copied().unwrap_or("");
    let section = parts[..parts.len().saturating_sub(1)].join(".");
    let mut in_section = section.is_empty();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            let name = t.trim_matches(|c| c == '[' || c == ']').trim();
            in_section = name == section || (section.is_empty() && name == last);
            if in_section && name == key {
                return n + 1;
            }
            continue;
        }
        if in_section && t.split('=').next().map(str::trim) == Some(last) {
            return n + 1;
        }
    }
    0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    mass: f64,
    com: [f64; 3],
    inertia: [[f64; 3]; 3],
}

impl From<&LinkFile> for Link {
    fn from(l: &LinkFile) -> Self {
        Link {
            mass: l.mass,
            com: Vector3::from(l.com),
            inertia: Matrix3::from_fn(|r, c| l.inertia[r][c]),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseFile {
    gravity: [f64; 3],
    total_mass: Option<f64>,
    mass: f64,
    com: [f64; 3],
    inertia: [[f64; 3]; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LegFile {
    hip: [f64; 3],
    lateral_offset: f64,
    thigh: f64,
    shank: f64,
    knee: KneeBranch,
    hip_link: LinkFile,
    thigh_link: LinkFile,
    shank_link: LinkFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LegsFile {
    lf: LegFile,
    lh: LegFile,
    rf: LegFile,
    rh: LegFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    r_min: f64,
    r_max: f64,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_margin() -> f64 {
    1e-3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsFile {
    haa: [f64; 2],
    hfe: [f64; 2],
    kfe: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    base: BaseFile,
    legs: LegsFile,
    workspace: WorkspaceFile,
    limits: LimitsFile,
}

impl RobotFile {
    fn into_params(self) -> Result<RobotParams, (String, String)> {
        let leg = |l: &LegFile| LegParams {
            hip: Vector3::from(l.hip),
            lateral_offset: l.lateral_offset,
            thigh: l.thigh,
            shank: l.shank,
            knee: l.knee,
            links: [(&l.hip_link).into(), (&l.thigh_link).into(), (&l.shank_link).into()],
        };
        let params = RobotParams {
            gravity: Vector3::from(self.base.gravity),
            base: (&LinkFile {
                mass: self.base.mass,
                com: self.base.com,
                inertia: self.base.inertia,
            })
                .into(),
            legs: [
                leg(&self.legs.lf),
                leg(&self.legs.lh),
                leg(&self.legs.rf),
                leg(&self.legs.rh),
            ],
            workspace: Workspace {
                r_min: self.workspace.r_min,
                r_max: self.workspace.r_max,
                margin: self.workspace.margin,
            },
            limits: JointLimits {
                lower: [self.limits.haa[0], self.limits.hfe[0], self.limits.kfe[0]],
                upper: [self.limits.haa[1], self.limits.hfe[1], self.limits.kfe[1]],
            },
        };
        if let Some(total) = self.base.total_mass {
            if (total - params.mass()).abs() > 1e-9 {
                return Err((
                    "base.total_mass".into(),
                    format!("{total} kg does not equal the sum of link masses {} kg", params.mass()),
                ));
            }
        }
        Ok(params)
    }
}

pub const DEFAULT_ROBOT: &str = include_str!("../../config/robot.toml");
