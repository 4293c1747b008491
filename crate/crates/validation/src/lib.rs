//! Support for the acceptance suite: a PASS/FAIL ledger and a locator for the
//! `rhythm` binary built alongside the tests.

use std::path::PathBuf;

/// One line per criterion; remembers whether any failed.
#[derive(Default)]
pub struct Report {
    failed: Vec<String>,
}

impl Report {
    pub fn check(&mut self, id: &str, name: &str, pass: bool, detail: impl AsRef<str>) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {verdict} ({})", detail.as_ref());
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    pub fn failed(&self) -> &[String] {
        &self.failed
    }
}

/// Path of the `rhythm` executable, from `RHYTHM_BIN` or next to the test's
/// own target directory.
pub fn rhythm_binary() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("RHYTHM_BIN") {
        return Some(PathBuf::from(p));
    }
    let exe = std::env::current_exe().ok()?;
    // target/<profile>/deps/acceptance-<hash>
    let profile_dir = exe.parent()?.parent()?;
    let bin = profile_dir.join(format!("rhythm{}", std::env::consts::EXE_SUFFIX));
    bin.is_file().then_some(bin)
}
