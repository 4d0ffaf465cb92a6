//! Shared assertion helper for the acceptance suite.

/// Collects sub-checks for one acceptance criterion and prints a single
/// pass/fail line when finished.
pub struct Criterion {
    id: &'static str,
    passed: Vec<String>,
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    pub fn new(id: &'static str) -> Self {
        Criterion { id, passed: Vec::new(), failed: Vec::new(), notes: Vec::new() }
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.passed.push(what);
        } else {
            self.failed.push(what);
        }
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    pub fn finish(self) {
        let status = if self.failed.is_empty() { "PASS" } else { "FAIL" };
        let mut detail: Vec<&str> = Vec::new();
        detail.extend(self.failed.iter().map(|s| s.as_str()));
        detail.extend(self.passed.iter().map(|s| s.as_str()));
        detail.extend(self.notes.iter().map(|s| s.as_str()));
        println!("[criterion {}] {status}: {}", self.id, detail.join("; "));
        assert!(
            self.failed.is_empty(),
            "criterion {} failed: {}",
            self.id,
            self.failed.join("; ")
        );
    }
}
