//! JSON serialization of interval MDPs.
//!
//! Transitions are stored sparsely as `[row, col, lo, up]` per action; omitted
//! entries are `[0, 0]`. Floats are written in shortest round-trip form, so a
//! write followed by a read reproduces every bound bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use kdeverify_core::abstraction::{GridMeta, Imdp, Provenance};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT: &str = "kdeverify-imdp";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub id: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImdpFile {
    pub format: String,
    pub version: u32,
    pub ap: Vec<String>,
    pub actions: Vec<String>,
    pub states: Vec<StateEntry>,
    pub grid: Option<GridMeta>,
    pub provenance: Provenance,
    pub transitions: BTreeMap<String, Vec<(usize, usize, f64, f64)>>,
}

impl ImdpFile {
    pub fn from_imdp(imdp: &Imdp) -> Self {
        let n = imdp.n_states();
        let states = imdp
            .labels()
            .iter()
            .enumerate()
            .map(|(id, l)| StateEntry { id, labels: l.clone() })
            .collect();
        let mut transitions = BTreeMap::new();
        for (a, name) in imdp.actions().iter().enumerate() {
            let (lo, up) = (imdp.lo(a), imdp.up(a));
            let entries = (0..n * n)
                .filter(|&k| up[k] > 0.0 || lo[k] > 0.0)
                .map(|k| (k / n, k % n, lo[k], up[k]))
                .collect();
            transitions.insert(name.clone(), entries);
        }
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            ap: imdp.ap().to_vec(),
            actions: imdp.actions().to_vec(),
            states,
            grid: imdp.grid().cloned(),
            provenance: imdp.provenance().clone(),
            transitions,
        }
    }

    pub fn into_imdp(self) -> Result<Imdp, CliError> {
        let invalid = |msg: String| CliError::Config {
            path: "imdp".into(),
            msg,
        };
        if self.format != FORMAT || self.version != VERSION {
            return Err(invalid(format!(
                "unsupported format `{}` version {}",
                self.format, self.version
            )));
        }
        let n = self.states.len();
        for (i, s) in self.states.iter().enumerate() {
            if s.id != i {
                return Err(invalid(format!("state ids must be 0..{n} in order; found {} at {i}", s.id)));
            }
        }
        let mut lo = Vec::with_capacity(self.actions.len());
        let mut up = Vec::with_capacity(self.actions.len());
        for a in &self.actions {
            let entries = self
                .transitions
                .get(a)
                .ok_or_else(|| invalid(format!("no transitions for action `{a}`")))?;
            let (mut l, mut u) = (vec![0.0; n * n], vec![0.0; n * n]);
            for &(r, c, el, eu) in entries {
                if r >= n || c >= n {
                    return Err(invalid(format!("entry ({r}, {c}) outside {n} states")));
                }
                l[r * n + c] = el;
                u[r * n + c] = eu;
            }
            lo.push(l);
            up.push(u);
        }
        if self.transitions.len() != self.actions.len() {
            return Err(invalid("transitions list an undeclared action".into()));
        }
        let labels = self.states.into_iter().map(|s| s.labels).collect();
        let imdp = Imdp::new(self.actions, lo, up, self.ap, labels, self.provenance)?;
        Ok(match self.grid {
            Some(g) => imdp.with_grid(g)?,
            None => imdp,
        })
    }
}

pub fn to_json(imdp: &Imdp) -> Result<String, CliError> {
    Ok(serde_json::to_string(&ImdpFile::from_imdp(imdp))?)
}

pub fn from_json(text: &str) -> Result<Imdp, CliError> {
    serde_json::from_str::<ImdpFile>(text)?.into_imdp()
}

pub fn write_imdp(path: &Path, imdp: &Imdp) -> Result<(), CliError> {
    std::fs::write(path, to_json(imdp)?).map_err(|e| CliError::io(path, e))
}

pub fn read_imdp(path: &Path) -> Result<Imdp, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_json(&text)
}
