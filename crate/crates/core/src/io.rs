//! CSV and file helpers shared by the CLI and the library.
//!
//! Every CSV starts with `# key = value` comment lines (units, parameters),
//! followed by a single header row.

use std::io::Write;
use std::path::Path;

use crate::dynamics::BlochTrajectory;
use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Comment lines `# key = value`.
pub fn comment_header(meta: &[(&str, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

/// Trajectory rows `t_ps,sx,sy,sz,n`.
pub fn trajectory_csv(traj: &BlochTrajectory, meta: &[(&str, String)]) -> String {
    let mut out = comment_header(meta);
    out.push_str("t_ps,sx,sy,sz,n\n");
    for (t, s) in traj.t.iter().zip(&traj.states) {
        out.push_str(&format!(
            "{t:.6},{:.10e},{:.10e},{:.10e},{:.10e}\n",
            s.s[0],
            s.s[1],
            s.s[2],
            s.occupation()
        ));
    }
    out
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes())
}

/// Writes to `path`, or to stdout when `path` is `-`.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        lock.write_all(contents.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
        Ok(())
    } else {
        write_string(path, contents)
    }
}
