//! Physical core detection.
//!
//! Hyper-threads share execution units and rarely help compute-bound
//! kernels, so the default core budget counts physical cores: one per
//! distinct `thread_siblings` mask under
//! `/sys/devices/system/cpu/cpu*/topology`. Falls back to the scheduler's
//! available parallelism when the topology is unreadable.

use std::collections::BTreeSet;
use std::path::Path;

pub fn physical_cores() -> usize {
    physical_cores_from_sysfs(Path::new("/sys/devices/system/cpu"))
        .unwrap_or_else(available_parallelism)
}

pub fn available_parallelism() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

fn physical_cores_from_sysfs(root: &Path) -> Option<usize> {
    let mut masks = BTreeSet::new();
    for entry in std::fs::read_dir(root).ok()? {
        let entry = entry.ok()?;
        let name = entry.file_name();
        let name = name.to_str()?;
        if !name.starts_with("cpu") || !name[3..].chars().all(|c| c.is_ascii_digit()) {
            continue;
        }
        let siblings = entry.path().join("topology/thread_siblings");
        match std::fs::read_to_string(siblings) {
            Ok(mask) => {
                masks.insert(mask.trim().to_string());
            }
            // An offline CPU without topology is skipped; anything else
            // means the layout is not what we expect.
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(_) => return None,
        }
    }
    (!masks.is_empty()).then_some(masks.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_at_least_one_core() {
        assert!(physical_cores() >= 1);
    }

    #[test]
    fn physical_cores_do_not_exceed_logical() {
        assert!(physical_cores() <= available_parallelism());
    }

    #[cfg(target_os = "linux")]
    #[test]
    fn sysfs_parse_matches_this_machine() {
        // On Linux the sysfs route should work and agree with the
        // public function.
        let sysfs = physical_cores_from_sysfs(Path::new("/sys/devices/system/cpu"));
        assert_eq!(sysfs, Some(physical_cores()));
    }
}
