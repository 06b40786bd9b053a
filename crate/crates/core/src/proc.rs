//! Running a child process with a wall-clock cap and collected output.

use std::io::Read;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

pub(crate) struct Captured {
    /// Stdout followed by stderr.
    pub output: String,
    /// `None` when the process was killed at the deadline.
    pub status: Option<ExitStatus>,
}

/// Spawns `cmd` in its own process group, waits up to `timeout`, and returns
/// what it printed. Spawn errors are returned as-is.
pub(crate) fn run_capped(cmd: &mut Command, timeout: Duration) -> std::io::Result<Captured> {
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(cmd, 0);
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let readers = [
        child.stdout.take().map(|s| Box::new(s) as Box<dyn Read + Send>),
        child.stderr.take().map(|s| Box::new(s) as Box<dyn Read + Send>),
    ]
    .map(|stream| {
        std::thread::spawn(move || {
            let mut bytes = Vec::new();
            if let Some(mut s) = stream {
                let _ = s.read_to_end(&mut bytes);
            }
            String::from_utf8_lossy(&bytes).into_owned()
        })
    });
    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => Some(status),
        Ok(None) => {
            kill_tree(&mut child);
            None
        }
        Err(e) => {
            kill_tree(&mut child);
            return Err(e);
        }
    };
    let mut output = String::new();
    for r in readers {
        let part = r.join().unwrap_or_default();
        if !part.is_empty() {
            if !output.is_empty() && !output.ends_with('\n') {
                output.push('\n');
            }
            output.push_str(&part);
        }
    }
    Ok(Captured { output, status })
}

// Tools like lake fork the real worker; kill the whole group so no
// grandchild keeps the pipes open.
fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        let _ = Command::new("kill")
            .args(["-KILL", "--", &format!("-{}", child.id())])
            .stderr(Stdio::null())
            .status();
    }
    let _ = child.kill();
    let _ = child.wait();
}
