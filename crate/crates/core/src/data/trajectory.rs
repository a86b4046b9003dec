//! Trajectory container and its on-disk CSV form.
//!
//! One row per frame: `t,obs_0..obs_31,x,y,yaw,cmd_0,cmd_1,cmd_2`, where
//! command columns beyond the embodiment's channel count stay empty. Floats
//! are written in shortest round-trip form, so read(write(t)) is bitwise
//! identical.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::embodiment::{Command, Kinematics};
use crate::sim::pose::Pose;
use crate::sim::sensor::Observation;

/// Rays per persisted observation; fixed by the file schema.
pub const OBS_WIDTH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub obs: Observation,
    pub pose: Pose,
    pub cmd: Command,
}

/// A constant-rate expert run of one embodiment through one world.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub embodiment_id: String,
    /// Top speed of the recording embodiment, copied for normalization.
    pub alpha: f64,
    pub frames: Vec<Frame>,
    pub world_seed: u64,
    pub run_seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame spacing in seconds.
    pub fn dt(&self) -> f64 {
        if self.frames.len() >= 2 {
            self.frames[1].t - self.frames[0].t
        } else {
            0.0
        }
    }

    pub fn observations(&self) -> Vec<&Observation> {
        self.frames.iter().map(|f| &f.obs).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_path(path).map_err(csv_io)?;
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((0..OBS_WIDTH).map(|i| format!("obs_{i}")));
        header.extend(["x", "y", "yaw", "cmd_0", "cmd_1", "cmd_2"].map(String::from));
        w.write_record(&header).map_err(csv_io)?;

        for frame in &self.frames {
            if frame.obs.len() != OBS_WIDTH {
                return Err(Error::InvalidArg(format!(
                    "observation width {} does not fit the {OBS_WIDTH}-column schema",
                    frame.obs.len()
                )));
            }
            let mut rec: Vec<String> = Vec::with_capacity(1 + OBS_WIDTH + 6);
            rec.push(fmt(frame.t));
            rec.extend(frame.obs.ranges.iter().map(|&v| fmt(v)));
            rec.push(fmt(frame.pose.x));
            rec.push(fmt(frame.pose.y));
            rec.push(fmt(frame.pose.yaw));
            let cmd = frame.cmd.values();
            for c in 0..3 {
                rec.push(cmd.get(c).map(|&v| fmt(v)).unwrap_or_default());
            }
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a trajectory back; the kinematics decides how many command
    /// columns must be populated.
    pub fn read_csv(
        path: &Path,
        embodiment_id: &str,
        alpha: f64,
        kinematics: Kinematics,
        world_seed: u64,
        run_seed: u64,
    ) -> Result<Trajectory> {
        let parse_err = |reason: String| Error::Parse {
            path: path.display().to_string(),
            reason,
        };
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(csv_io)?;
        {
            let headers = r.headers().map_err(csv_io)?;
            if headers.len() != 1 + OBS_WIDTH + 6 || &headers[0] != "t" || &headers[1] != "obs_0" {
                return Err(parse_err("unexpected header layout".into()));
            }
        }
        let cmd_dim = kinematics.command_dim();
        let mut frames = Vec::new();
        for row in r.records() {
            let row = row.map_err(csv_io)?;
            let field = |idx: usize| -> Result<f64> {
                row.get(idx)
                    .ok_or_else(|| parse_err(format!("missing column {idx}")))?
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("column {idx}: {e}")))
            };
            let t = field(0)?;
            let mut ranges = Vec::with_capacity(OBS_WIDTH);
            for i in 0..OBS_WIDTH {
                ranges.push(field(1 + i)?);
            }
            let pose = Pose::new(
                field(1 + OBS_WIDTH)?,
                field(2 + OBS_WIDTH)?,
                field(3 + OBS_WIDTH)?,
            );
            let mut cmd_vals = Vec::with_capacity(cmd_dim);
            for c in 0..3 {
                let raw = row
                    .get(4 + OBS_WIDTH + c)
                    .ok_or_else(|| parse_err(format!("missing cmd_{c}")))?;
                if c < cmd_dim {
                    cmd_vals.push(
                        raw.parse::<f64>()
                            .map_err(|e| parse_err(format!("cmd_{c}: {e}")))?,
                    );
                } else if !raw.is_empty() {
                    return Err(parse_err(format!("cmd_{c} should be empty")));
                }
            }
            frames.push(Frame {
                t,
                obs: Observation { ranges },
                pose,
                cmd: Command::from_values(kinematics, &cmd_vals)?,
            });
        }
        Ok(Trajectory {
            embodiment_id: embodiment_id.to_string(),
            alpha,
            frames,
            world_seed,
            run_seed,
        })
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_io(e: csv::Error) -> Error {
    Error::Parse {
        path: String::new(),
        reason: e.to_string(),
    }
}
